//! Label corruption with per-client heterogeneous noise: symmetric (uniform
//! over the other classes), pairflip (cyclic next class), or asymmetric
//! corruption driven by a per-class candidate map. Each sample is flipped
//! independently with its client's rate; `true_label` is never touched.

use crate::data::ClientDataset;
use crate::error::{Error, Result};
use crate::seed::{self, stream};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Symmetric,
    Pairflip,
    CkAsymm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClientNoise {
    pub kind: NoiseKind,
    pub rate: f64,
}

/// Target classes an asymmetric flip may choose for one source class.
/// `Random` means uniform over all other classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CandidatesRepr", into = "CandidatesRepr")]
pub enum Candidates {
    Random,
    Classes(Vec<usize>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CandidatesRepr {
    Marker(String),
    Classes(Vec<usize>),
}

impl TryFrom<CandidatesRepr> for Candidates {
    type Error = String;

    fn try_from(repr: CandidatesRepr) -> std::result::Result<Self, String> {
        match repr {
            CandidatesRepr::Marker(m) if m == "random" => Ok(Candidates::Random),
            CandidatesRepr::Marker(m) => Err(format!("unknown candidate marker {m:?}, expected \"random\"")),
            CandidatesRepr::Classes(v) => Ok(Candidates::Classes(v)),
        }
    }
}

impl From<Candidates> for CandidatesRepr {
    fn from(c: Candidates) -> Self {
        match c {
            Candidates::Random => CandidatesRepr::Marker("random".into()),
            Candidates::Classes(v) => CandidatesRepr::Classes(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub per_client: Vec<ClientNoise>,
    /// Required for every class when any client uses `CkAsymm`.
    #[serde(default)]
    pub confusion_map: BTreeMap<usize, Candidates>,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn validate(&self, num_classes: usize) -> Result<()> {
        if self.per_client.is_empty() {
            return Err(Error::validation("per_client", "need at least 1 client entry"));
        }
        for (k, entry) in self.per_client.iter().enumerate() {
            if !(0.0..=1.0).contains(&entry.rate) || !entry.rate.is_finite() {
                return Err(Error::validation(
                    format!("per_client[{k}].rate"),
                    format!("must be in [0, 1], got {}", entry.rate),
                ));
            }
        }
        if self.per_client.iter().any(|c| c.kind == NoiseKind::CkAsymm) {
            for class in 0..num_classes {
                match self.confusion_map.get(&class) {
                    None => {
                        return Err(Error::validation(
                            format!("confusion_map[{class}]"),
                            "missing candidate set for class",
                        ))
                    }
                    Some(Candidates::Random) => {}
                    Some(Candidates::Classes(set)) => {
                        if set.is_empty() {
                            return Err(Error::validation(
                                format!("confusion_map[{class}]"),
                                "candidate set is empty",
                            ));
                        }
                        if set.contains(&class) {
                            return Err(Error::validation(
                                format!("confusion_map[{class}]"),
                                "candidate set contains the source class",
                            ));
                        }
                        if let Some(bad) = set.iter().find(|&&c| c >= num_classes) {
                            return Err(Error::validation(
                                format!("confusion_map[{class}]"),
                                format!("class index {bad} out of range for {num_classes} classes"),
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Per-client, per-sample record of which observed labels were rewritten,
/// aligned with each dataset's sample order.
pub type FlipMask = Vec<Vec<bool>>;

fn uniform_other_class(rng: &mut impl Rng, true_label: usize, num_classes: usize) -> usize {
    let draw = rng.gen_range(0..num_classes - 1);
    if draw >= true_label {
        draw + 1
    } else {
        draw
    }
}

/// Rewrite observed labels in place and return the flip mask. Every flip
/// lands on a class different from the true label, so a sample is flipped
/// iff its observed label disagrees with its true label afterwards.
pub fn corrupt(
    datasets: &mut [ClientDataset],
    spec: &NoiseSpec,
    num_classes: usize,
) -> Result<FlipMask> {
    spec.validate(num_classes)?;
    if spec.per_client.len() != datasets.len() {
        return Err(Error::validation(
            "per_client",
            format!("{} entries for {} datasets", spec.per_client.len(), datasets.len()),
        ));
    }
    let mut mask = Vec::with_capacity(datasets.len());
    for (k, ds) in datasets.iter_mut().enumerate() {
        let noise = spec.per_client[k];
        let mut rng = seed::rng(spec.seed, &[stream::NOISE, k as u64]);
        let mut flips = vec![false; ds.samples.len()];
        for (i, sample) in ds.samples.iter_mut().enumerate() {
            if rng.gen::<f64>() >= noise.rate {
                continue;
            }
            let new_label = match noise.kind {
                NoiseKind::Symmetric => uniform_other_class(&mut rng, sample.true_label, num_classes),
                NoiseKind::Pairflip => (sample.true_label + 1) % num_classes,
                NoiseKind::CkAsymm => match &spec.confusion_map[&sample.true_label] {
                    Candidates::Random => uniform_other_class(&mut rng, sample.true_label, num_classes),
                    Candidates::Classes(set) => set[rng.gen_range(0..set.len())],
                },
            };
            sample.observed_label = new_label;
            flips[i] = true;
        }
        mask.push(flips);
    }
    Ok(mask)
}

/// Emit the flip mask as `client,id,flipped` rows for evaluation joins.
pub fn save_flip_mask_csv(
    mask: &FlipMask,
    datasets: &[ClientDataset],
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "client,id,flipped")?;
    for (ds, flips) in datasets.iter().zip(mask) {
        for (s, &flipped) in ds.samples.iter().zip(flips) {
            writeln!(w, "{},{},{}", ds.client_id, s.id, flipped as u8)?;
        }
    }
    w.flush()?;
    Ok(())
}
