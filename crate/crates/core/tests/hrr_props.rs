use proptest::prelude::*;
use rand::Rng;
use ssp_core::hrr::{
    bind, circular_convolution_direct, fractional_power, involution, make_unitary_axis, random_sp, superpose, unbind,
    HyperVector, RngSeed,
};
use ssp_core::scene::{AxisConfig, SspSpace};

const D: usize = 1024;

fn sp(seed: u64) -> HyperVector {
    random_sp(D, RngSeed(seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn binding_commutes_and_associates(s in any::<u64>()) {
        let (a, b, c) = (sp(s), sp(s ^ 1), sp(s ^ 2));
        let ab = bind(&a, &b).unwrap();
        prop_assert!(ab.max_abs_diff(&bind(&b, &a).unwrap()) < 1e-6);
        let left = bind(&ab, &c).unwrap();
        let right = bind(&a, &bind(&b, &c).unwrap()).unwrap();
        prop_assert!(left.max_abs_diff(&right) < 1e-6);
    }

    #[test]
    fn unitary_inverse_is_exact(s in any::<u64>()) {
        let u = make_unitary_axis(D, RngSeed(s)).unwrap();
        let e = bind(u.base(), &involution(u.base())).unwrap();
        prop_assert!(e.max_abs_diff(&HyperVector::identity(D)) < 1e-6);
        let x = sp(s ^ 7);
        let back = unbind(&bind(&x, u.base()).unwrap(), u.base()).unwrap();
        prop_assert!(back.max_abs_diff(&x) < 1e-6);
    }

    #[test]
    fn fractional_power_group_law(s in any::<u64>(), a in -100.0f64..100.0, b in -100.0f64..100.0) {
        let u = make_unitary_axis(D, RngSeed(s)).unwrap();
        let lhs = bind(&fractional_power(&u, a).unwrap(), &fractional_power(&u, b).unwrap()).unwrap();
        let rhs = fractional_power(&u, a + b).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-6);
    }

    #[test]
    fn fft_binding_matches_direct_convolution(d in 2usize..=64, s in any::<u64>()) {
        let mut rng = RngSeed(s).rng();
        let mut v = || HyperVector::new((0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let (a, b) = (v(), v());
        let fast = bind(&a, &b).unwrap();
        let direct = circular_convolution_direct(&a, &b).unwrap();
        prop_assert!(fast.max_abs_diff(&direct) < 1e-8);
    }
}


#[test]
fn same_seed_reproduces_bits() {
    let a = random_sp(D, RngSeed(11)).unwrap();
    let b = random_sp(D, RngSeed(11)).unwrap();
    assert!(a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits()));
    let s1 = SspSpace::with_defaults(D, RngSeed(3)).unwrap();
    let s2 = SspSpace::with_defaults(D, RngSeed(3)).unwrap();
    let (p, q) = (s1.axes.x.base().as_slice(), s2.axes.x.base().as_slice());
    assert!(p.iter().zip(q).all(|(x, y)| x.to_bits() == y.to_bits()));
}

/// Twenty random pointers bound to distinct grid points and summed; each is
/// recovered by unbinding and cleaning up against the point dictionary.
fn recovery(config: AxisConfig, tol: u32) -> (usize, usize) {
    let (mut hit, mut total) = (0usize, 0usize);
    for seed in 0..50u64 {
        let space = SspSpace::new(D, RngSeed(seed), config).unwrap();
        let mut rng = RngSeed(seed).derive(9).rng();
        let mut points: Vec<(u32, u32)> = Vec::new();
        while points.len() < 20 {
            let p = (rng.gen_range(0..=100), rng.gen_range(0..=100));
            if !points.contains(&p) {
                points.push(p);
            }
        }
        let sps: Vec<HyperVector> = (0..points.len()).map(|i| sp(seed * 1000 + i as u64)).collect();
        let terms: Vec<HyperVector> = sps
            .iter()
            .zip(&points)
            .map(|(s, &(x, y))| bind(s, &space.axes.location_vector(f64::from(x), f64::from(y))).unwrap())
            .collect();
        let m = superpose(&terms).unwrap();
        for (s, &(x, y)) in sps.iter().zip(&points) {
            let loc = space.grid.decode_location(&unbind(&m, s).unwrap()).unwrap();
            total += 1;
            if loc.x.abs_diff(x) <= tol && loc.y.abs_diff(y) <= tol {
                hit += 1;
            }
        }
    }
    (hit, total)
}

#[test]
fn unbinding_recovers_exact_points_with_random_axes() {
    let (hit, total) = recovery(AxisConfig::uniform(), 0);
    assert!(hit as f64 >= 0.95 * total as f64, "recovered {hit}/{total}");
}

/// The default band-limited axes trade exact recovery for a smooth kernel;
/// points are still recovered to within one grid unit.
#[test]
fn default_axes_recover_points_within_one_unit() {
    let (hit, total) = recovery(AxisConfig::default(), 1);
    assert!(hit as f64 >= 0.95 * total as f64, "recovered {hit}/{total}");
}
