//! Corpus manifest: which clips exist, where they live, and how they are
//! partitioned into train/val/test.

use super::AudioError;
use crate::effects::EffectId;
use crate::rng::derive_rng;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Instrument {
    GuitarLike,
    PianoLike,
    External,
}

impl Instrument {
    pub fn label(self) -> &'static str {
        match self {
            Instrument::GuitarLike => "guitar-like",
            Instrument::PianoLike => "piano-like",
            Instrument::External => "external",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn label(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub clip_id: String,
    pub source: PathBuf,
    pub instrument: Instrument,
    pub effect: EffectId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param_value: Option<f64>,
    pub split: Split,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub seed: u64,
    pub entries: Vec<ManifestEntry>,
}

impl CorpusManifest {
    /// Structural invariants every manifest must satisfy: unique clip ids and
    /// one split per source (all effect variants of a source stay together).
    pub fn validate(&self) -> Result<(), AudioError> {
        let mut ids = HashSet::with_capacity(self.entries.len());
        for e in &self.entries {
            if !ids.insert(e.clip_id.as_str()) {
                return Err(AudioError::InvalidArgument(format!(
                    "duplicate clip_id {:?}",
                    e.clip_id
                )));
            }
        }
        let mut split_of: BTreeMap<&Path, Split> = BTreeMap::new();
        for e in &self.entries {
            match split_of.get(e.source.as_path()) {
                None => {
                    split_of.insert(e.source.as_path(), e.split);
                }
                Some(&s) if s == e.split => {}
                Some(&s) => {
                    return Err(AudioError::InvalidArgument(format!(
                        "source {} assigned to both {} and {}",
                        e.source.display(),
                        s.label(),
                        e.split.label()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Additional invariant for classification corpora: every source carries
    /// all ten effect classes exactly once.
    pub fn validate_classification(&self) -> Result<(), AudioError> {
        self.validate()?;
        let mut by_source: BTreeMap<&Path, Vec<EffectId>> = BTreeMap::new();
        for e in &self.entries {
            by_source.entry(e.source.as_path()).or_default().push(e.effect);
        }
        for (source, mut effects) in by_source {
            effects.sort();
            effects.dedup();
            if effects.len() != EffectId::ALL.len() {
                return Err(AudioError::InvalidArgument(format!(
                    "source {} covers {} effect classes, expected {}",
                    source.display(),
                    effects.len(),
                    EffectId::ALL.len()
                )));
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), AudioError> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| AudioError::InvalidArgument(format!("manifest serialization: {e}")))?;
        std::fs::write(path, json).map_err(|e| AudioError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, AudioError> {
        let bytes = std::fs::read(path).map_err(|e| AudioError::io(path, e))?;
        serde_json::from_slice(&bytes)
            .map_err(|e| AudioError::Format(format!("manifest parse: {e}")))
    }
}

/// Assign train/val/test to `n` sources of one stratum (instrument class).
///
/// 80/10/10 by count: val and test each get floor(n/10), bumped to one when
/// that floors to zero and n allows (n >= 3); the remainder trains. The
/// assignment is a seeded shuffle so which source lands where is arbitrary
/// but reproducible.
pub fn assign_splits(n: usize, seed: u64, stratum: &str) -> Vec<Split> {
    if n == 0 {
        return Vec::new();
    }
    let mut n_val = n / 10;
    let mut n_test = n / 10;
    if n >= 3 {
        n_val = n_val.max(1);
        n_test = n_test.max(1);
    }

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = derive_rng(seed, &format!("splits/{stratum}"), 0);
    order.shuffle(&mut rng);

    let mut splits = vec![Split::Train; n];
    for &i in order.iter().take(n_val) {
        splits[i] = Split::Val;
    }
    for &i in order.iter().skip(n_val).take(n_test) {
        splits[i] = Split::Test;
    }
    splits
}
