use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::mask::{load_mask, save_mask, QueryMask};
use super::MaskError;

const DEFAULT_SYNONYMS: &str = include_str!("../../data/synonyms.csv");
const DEFAULT_INVERSES: &str = include_str!("../../data/inverses.csv");
const DEFAULT_HYPERNYMS: &str = include_str!("../../data/hypernyms.csv");

pub const SYNONYMS_FILE: &str = "synonyms.csv";
pub const INVERSES_FILE: &str = "inverses.csv";
const MASK_EXT: &str = "mask";

/// Lower-cased, whitespace-collapsed relation or label.
pub fn normalize_term(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

fn read_pairs(text: &str, what: &str) -> Result<Vec<(String, String)>, MaskError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| MaskError::Format(format!("{what}: {e}")))?;
        if rec.len() != 2 {
            return Err(MaskError::Format(format!("{what}: expected 2 columns, found {}", rec.len())));
        }
        out.push((normalize_term(&rec[0]), normalize_term(&rec[1])));
    }
    Ok(out)
}

fn write_pairs(path: &Path, header: [&str; 2], pairs: &BTreeMap<String, String>) -> Result<(), MaskError> {
    let io = |e: csv::Error| MaskError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for (a, b) in pairs {
        w.write_record([a, b]).map_err(io)?;
    }
    w.flush().map_err(|e| MaskError::Io(format!("{}: {e}", path.display())))
}

pub fn parse_synonyms(text: &str) -> Result<BTreeMap<String, String>, MaskError> {
    Ok(read_pairs(text, "synonyms")?.into_iter().collect())
}

pub fn parse_inverses(text: &str) -> Result<BTreeMap<String, String>, MaskError> {
    Ok(read_pairs(text, "inverses")?.into_iter().collect())
}

pub fn default_synonyms() -> BTreeMap<String, String> {
    parse_synonyms(DEFAULT_SYNONYMS).expect("bundled synonym table")
}

pub fn default_inverses() -> BTreeMap<String, String> {
    parse_inverses(DEFAULT_INVERSES).expect("bundled inverse table")
}

/// Masks keyed by canonical relation, with surface-form synonyms and inverses.
#[derive(Debug, Clone, Default)]
pub struct MaskLibrary {
    masks: BTreeMap<String, QueryMask>,
    synonyms: BTreeMap<String, String>,
    inverses: BTreeMap<String, String>,
}

impl MaskLibrary {
    /// Strict constructor: every synonym target must have a mask and the
    /// inverse map must be an involution.
    pub fn new(
        masks: Vec<QueryMask>,
        synonyms: BTreeMap<String, String>,
        inverses: BTreeMap<String, String>,
    ) -> Result<Self, MaskError> {
        let masks: BTreeMap<String, QueryMask> =
            masks.into_iter().map(|m| (normalize_term(m.relation()), m)).collect();
        for (surface, target) in &synonyms {
            if !masks.contains_key(target) {
                return Err(MaskError::Library(format!("synonym `{surface}` targets `{target}`, which has no mask")));
            }
        }
        for (a, b) in &inverses {
            if inverses.get(b) != Some(a) {
                return Err(MaskError::Library(format!("inverse of `{a}` is `{b}` but not the other way round")));
            }
        }
        Ok(Self {
            masks,
            synonyms,
            inverses,
        })
    }

    /// Uses the bundled tables, keeping only synonyms and inverse pairs whose
    /// relations have masks.
    pub fn with_default_tables(masks: Vec<QueryMask>) -> Self {
        Self::with_tables_filtered(masks, default_synonyms(), default_inverses())
    }

    pub fn with_tables_filtered(
        masks: Vec<QueryMask>,
        synonyms: BTreeMap<String, String>,
        inverses: BTreeMap<String, String>,
    ) -> Self {
        let masks: BTreeMap<String, QueryMask> =
            masks.into_iter().map(|m| (normalize_term(m.relation()), m)).collect();
        let synonyms = synonyms.into_iter().filter(|(_, t)| masks.contains_key(t)).collect();
        let inverses: BTreeMap<String, String> = inverses
            .into_iter()
            .filter(|(a, b)| masks.contains_key(a) && masks.contains_key(b))
            .collect();
        let inverses = inverses
            .iter()
            .filter(|(a, b)| inverses.get(*b) == Some(*a))
            .map(|(a, b)| (a.clone(), b.clone()))
            .collect();
        Self {
            masks,
            synonyms,
            inverses,
        }
    }

    pub fn masks(&self) -> impl Iterator<Item = &QueryMask> {
        self.masks.values()
    }

    pub fn relations(&self) -> impl Iterator<Item = &str> {
        self.masks.keys().map(String::as_str)
    }

    pub fn synonyms(&self) -> &BTreeMap<String, String> {
        &self.synonyms
    }

    pub fn inverses(&self) -> &BTreeMap<String, String> {
        &self.inverses
    }

    pub fn get(&self, canonical: &str) -> Option<&QueryMask> {
        self.masks.get(canonical)
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    /// Canonical relation for a surface form.
    pub fn canonical(&self, relation: &str) -> Option<&str> {
        let key = normalize_term(relation);
        if let Some((k, _)) = self.masks.get_key_value(&key) {
            return Some(k.as_str());
        }
        self.synonyms.get(&key).map(String::as_str)
    }

    /// Mask for `relation`, or for its inverse. An inverse is looked up in
    /// the inverse map, first for the surface form and then for its
    /// canonical relation; a relation without an inverse uses its own mask
    /// rotated by 180°.
    pub fn mask_for(&self, relation: &str, inverse: bool) -> Result<Cow<'_, QueryMask>, MaskError> {
        if !inverse {
            let c = self
                .canonical(relation)
                .ok_or_else(|| MaskError::UnknownRelation(relation.to_string()))?;
            return Ok(Cow::Borrowed(&self.masks[c]));
        }
        let key = normalize_term(relation);
        if let Some(inv) = self.inverses.get(&key) {
            if let Some(c) = self.canonical(inv) {
                return Ok(Cow::Borrowed(&self.masks[c]));
            }
        }
        let c = self
            .canonical(relation)
            .ok_or_else(|| MaskError::UnknownRelation(relation.to_string()))?;
        match self.inverses.get(c).and_then(|inv| self.masks.get(inv)) {
            Some(m) => Ok(Cow::Borrowed(m)),
            None => Ok(Cow::Owned(self.masks[c].rotated_180(format!("inverse of {c}")))),
        }
    }

    /// Writes one `.mask` file per relation plus the two tables.
    pub fn save_dir(&self, dir: &Path) -> Result<(), MaskError> {
        std::fs::create_dir_all(dir).map_err(|e| MaskError::Io(format!("{}: {e}", dir.display())))?;
        for m in self.masks.values() {
            save_mask(&dir.join(format!("{}.{MASK_EXT}", file_stem(m.relation()))), m)?;
        }
        write_pairs(&dir.join(SYNONYMS_FILE), ["surface_relation", "canonical_relation"], &self.synonyms)?;
        write_pairs(&dir.join(INVERSES_FILE), ["relation", "inverse"], &self.inverses)
    }

    /// Reads every `.mask` file in `dir`. Missing tables fall back to the
    /// bundled ones, filtered to the loaded relations; present tables must
    /// validate strictly.
    pub fn load_dir(dir: &Path) -> Result<Self, MaskError> {
        let entries = std::fs::read_dir(dir).map_err(|e| MaskError::Io(format!("{}: {e}", dir.display())))?;
        let mut paths: Vec<_> = entries
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == MASK_EXT))
            .collect();
        paths.sort();
        let masks = paths.iter().map(|p| load_mask(p)).collect::<Result<Vec<_>, _>>()?;
        let read = |name: &str| -> Result<Option<String>, MaskError> {
            let p = dir.join(name);
            if p.exists() {
                std::fs::read_to_string(&p)
                    .map(Some)
                    .map_err(|e| MaskError::Io(format!("{}: {e}", p.display())))
            } else {
                Ok(None)
            }
        };
        match (read(SYNONYMS_FILE)?, read(INVERSES_FILE)?) {
            (Some(s), Some(i)) => Self::new(masks, parse_synonyms(&s)?, parse_inverses(&i)?),
            (s, i) => {
                let syn = s.map(|t| parse_synonyms(&t)).transpose()?.unwrap_or_else(default_synonyms);
                let inv = i.map(|t| parse_inverses(&t)).transpose()?.unwrap_or_else(default_inverses);
                Ok(Self::with_tables_filtered(masks, syn, inv))
            }
        }
    }
}

fn file_stem(relation: &str) -> String {
    relation
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect()
}

/// Label to class table, used to match a named class against object labels.
#[derive(Debug, Clone, Default)]
pub struct HypernymTable {
    classes: BTreeMap<String, BTreeSet<String>>,
}

impl HypernymTable {
    pub fn parse(text: &str) -> Result<Self, MaskError> {
        let mut classes: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (label, class) in read_pairs(text, "hypernyms")? {
            classes.entry(label).or_default().insert(class);
        }
        Ok(Self { classes })
    }

    pub fn load(path: &Path) -> Result<Self, MaskError> {
        let text = std::fs::read_to_string(path).map_err(|e| MaskError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn bundled() -> Self {
        Self::parse(DEFAULT_HYPERNYMS).expect("bundled hypernym table")
    }

    pub fn insert(&mut self, label: &str, class: &str) {
        self.classes
            .entry(normalize_term(label))
            .or_default()
            .insert(normalize_term(class));
    }

    /// True when `label` is `name` or belongs to class `name`.
    pub fn matches(&self, label: &str, name: &str) -> bool {
        let (l, n) = (normalize_term(label), normalize_term(name));
        l == n || self.classes.get(&l).is_some_and(|c| c.contains(&n))
    }

    pub fn classes_of(&self, label: &str) -> impl Iterator<Item = &str> {
        self.classes
            .get(&normalize_term(label))
            .into_iter()
            .flat_map(|s| s.iter().map(String::as_str))
    }

    pub fn is_class(&self, name: &str) -> bool {
        let n = normalize_term(name);
        self.classes.values().any(|c| c.contains(&n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(rel: &str, right: bool) -> QueryMask {
        QueryMask::from_fn(rel, 1, |_, c| if right { c >= 275 } else { c < 225 }).unwrap()
    }

    #[test]
    fn bundled_tables_are_large_and_consistent() {
        let syn = default_synonyms();
        assert!(syn.len() >= 300);
        let inv = default_inverses();
        for (a, b) in &inv {
            assert_eq!(inv.get(b), Some(a));
        }
        assert_eq!(syn.get("standing next to").map(String::as_str), Some("next to"));
    }

    #[test]
    fn strict_validation() {
        let mut syn = BTreeMap::new();
        syn.insert("right of".to_string(), "to the right of".to_string());
        assert!(MaskLibrary::new(vec![mask("to the left of", false)], syn.clone(), BTreeMap::new()).is_err());
        let mut inv = BTreeMap::new();
        inv.insert("to the right of".to_string(), "to the left of".to_string());
        let masks = vec![mask("to the right of", true), mask("to the left of", false)];
        assert!(MaskLibrary::new(masks.clone(), syn.clone(), inv.clone()).is_err());
        inv.insert("to the left of".to_string(), "to the right of".to_string());
        let lib = MaskLibrary::new(masks, syn, inv).unwrap();
        assert_eq!(lib.canonical("Right  of"), Some("to the right of"));
        assert_eq!(lib.mask_for("right of", true).unwrap().relation(), "to the left of");
    }

    #[test]
    fn rotation_fallback_for_missing_inverse() {
        let lib = MaskLibrary::with_default_tables(vec![mask("to the right of", true)]);
        let inv = lib.mask_for("to the right of", true).unwrap();
        assert!(inv.get(0, 0) && !inv.get(0, 499));
        assert!(matches!(lib.mask_for("zorp", false), Err(MaskError::UnknownRelation(_))));
        assert!(lib.synonyms().values().all(|t| t == "to the right of"));
    }

    #[test]
    fn directory_round_trip() {
        let lib = MaskLibrary::with_default_tables(vec![mask("to the right of", true), mask("to the left of", false)]);
        let dir = tempfile::tempdir().unwrap();
        lib.save_dir(dir.path()).unwrap();
        let back = MaskLibrary::load_dir(dir.path()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back.synonyms(), lib.synonyms());
        assert_eq!(back.inverses(), lib.inverses());
        assert_eq!(back.get("to the left of").unwrap(), lib.get("to the left of").unwrap());
    }

    #[test]
    fn hypernyms() {
        let h = HypernymTable::bundled();
        assert!(h.matches("bed", "furniture"));
        assert!(h.matches("dog", "dog"));
        assert!(!h.matches("dog", "furniture"));
        assert!(h.is_class("vehicle"));
    }
}
