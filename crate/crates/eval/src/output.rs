//! Report files: JSON, CSV tables and PGM images.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use ssp_core::masks::{QueryMask, FRAME};
use ssp_core::program::NoAnswerReason;
use ssp_core::scene::Heatmap;

use crate::capacity::CapacityRow;
use crate::dataset::DataError;
use crate::evaluate::{Category, EvalReport};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> DataError + '_ {
    move |e| DataError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), DataError> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    fs::write(path, text + "\n").map_err(io_err(path))
}

pub fn capacity_csv(path: &Path, rows: &[CapacityRow]) -> Result<(), DataError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record([
        "d",
        "instances",
        "mse_xy",
        "mse_xy_std",
        "mean_iou",
        "mean_iou_std",
        "items_pct",
        "items_pct_std",
        "select_pct_small",
        "select_pct_small_std",
        "accuracy",
        "accuracy_std",
    ])
    .map_err(csv_err(path))?;
    for r in rows {
        let (acc, acc_std) = r
            .accuracy
            .map_or((String::new(), String::new()), |a| (a.mean.to_string(), a.std.to_string()));
        w.write_record([
            r.d.to_string(),
            r.instances.to_string(),
            r.mse_xy.mean.to_string(),
            r.mse_xy.std.to_string(),
            r.mean_iou.mean.to_string(),
            r.mean_iou.std.to_string(),
            r.items_pct.mean.to_string(),
            r.items_pct.std.to_string(),
            r.select_pct_small.mean.to_string(),
            r.select_pct_small.std.to_string(),
            acc,
            acc_std,
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// One row per seed and category, plus an `all` row per seed.
pub fn categories_csv(path: &Path, report: &EvalReport) -> Result<(), DataError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let mut header = vec!["seed", "category", "total", "correct", "wrong", "no_answer"];
    header.extend(NoAnswerReason::ALL.iter().map(|r| r.name()));
    w.write_record(&header).map_err(csv_err(path))?;
    for s in &report.per_seed {
        let rows = Category::ALL
            .iter()
            .map(|c| (c.name(), &s.categories[c]))
            .chain([("all", &s.overall), ("with_select", &s.with_select)]);
        for (name, c) in rows {
            let mut rec = vec![
                s.seed.to_string(),
                name.to_string(),
                c.total.to_string(),
                c.correct.to_string(),
                c.wrong.to_string(),
                c.no_answer.to_string(),
            ];
            rec.extend(NoAnswerReason::ALL.iter().map(|r| c.no_answer_reasons.get(r).copied().unwrap_or(0).to_string()));
            w.write_record(&rec).map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(io_err(path))
}

/// Per-question outcomes of every seed.
pub fn outcomes_csv(path: &Path, report: &EvalReport) -> Result<(), DataError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["seed", "question_id", "category", "answer", "no_answer", "correct"])
        .map_err(csv_err(path))?;
    for s in &report.per_seed {
        for o in &s.outcomes {
            let reason = o.no_answer.map_or("", NoAnswerReason::name);
            w.write_record([
                s.seed.to_string(),
                o.question_id.clone(),
                o.category.name().to_string(),
                o.answer.clone().unwrap_or_default(),
                reason.to_string(),
                o.correct.to_string(),
            ])
            .map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(io_err(path))
}

/// Binary PGM of `values` (row major), scaled linearly from min to max.
pub fn write_pgm(path: &Path, width: usize, height: usize, values: &[f64]) -> Result<(), DataError> {
    assert_eq!(values.len(), width * height, "pgm size");
    let (lo, hi) = values
        .iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let pixels: Vec<u8> = values
        .iter()
        .map(|&v| if v.is_finite() { ((v - lo) / span * 255.0).round() as u8 } else { 0 })
        .collect();
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    write!(f, "P5\n{width} {height}\n255\n").map_err(io_err(path))?;
    f.write_all(&pixels).map_err(io_err(path))
}

/// Active cells white on black, rows top to bottom.
pub fn mask_pgm(path: &Path, mask: &QueryMask) -> Result<(), DataError> {
    let values: Vec<f64> = mask.cells().iter().map(|&c| if c { 1.0 } else { 0.0 }).collect();
    write_pgm(path, FRAME, FRAME, &values)
}

pub fn heatmap_pgm(path: &Path, heatmap: &Heatmap) -> Result<(), DataError> {
    write_pgm(path, heatmap.width, heatmap.height, &heatmap.values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_header_and_scaling() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.pgm");
        write_pgm(&p, 3, 1, &[0.0, 0.5, 1.0]).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert_eq!(&bytes[..11], b"P5\n3 1\n255\n");
        assert_eq!(&bytes[11..], &[0, 128, 255]);
    }
}
