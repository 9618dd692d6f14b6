//! Synthetic multi-class classification data, partitioned across clients.
//!
//! Each class is a unit-covariance Gaussian blob; class means are placed on a
//! circle (or a line for 1-d features) scaled so that pairwise mean distances
//! are at least `cluster_separation`. Generation is a pure function of the
//! spec: identical specs produce bit-identical datasets.

use crate::error::{Error, Result};
use crate::seed::{self, stream};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

/// One labeled feature vector. `true_label` is hidden from training and read
/// only by evaluation code; `observed_label` is what the model trains on.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: u64,
    pub features: Vec<f64>,
    pub observed_label: usize,
    pub true_label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientDataset {
    pub client_id: usize,
    pub samples: Vec<Sample>,
}

impl ClientDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Recipe for one reproducible synthetic task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    pub num_classes: usize,
    pub feature_dim: usize,
    pub samples_per_client: Vec<usize>,
    pub class_proportions: Vec<f64>,
    pub cluster_separation: f64,
    /// Size of the held-out test split, drawn from the same class-conditional
    /// distributions on a disjoint seed stream.
    #[serde(default = "default_test_samples")]
    pub test_samples: usize,
    pub seed: u64,
}

fn default_test_samples() -> usize {
    1000
}

const PROPORTION_SUM_TOL: f64 = 1e-9;

impl DataSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::validation("num_classes", "need at least 2 classes"));
        }
        if self.feature_dim < 1 {
            return Err(Error::validation("feature_dim", "need at least 1 feature"));
        }
        if self.samples_per_client.is_empty() {
            return Err(Error::validation("samples_per_client", "need at least 1 client"));
        }
        for (k, &n) in self.samples_per_client.iter().enumerate() {
            if n == 0 {
                return Err(Error::validation(
                    format!("samples_per_client[{k}]"),
                    "each client needs at least 1 sample",
                ));
            }
        }
        if self.class_proportions.len() != self.num_classes {
            return Err(Error::validation(
                "class_proportions",
                format!("expected {} entries, got {}", self.num_classes, self.class_proportions.len()),
            ));
        }
        if self.class_proportions.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::validation("class_proportions", "entries must be nonnegative"));
        }
        let sum: f64 = self.class_proportions.iter().sum();
        if (sum - 1.0).abs() > PROPORTION_SUM_TOL {
            return Err(Error::validation(
                "class_proportions",
                format!("must sum to 1, got {sum}"),
            ));
        }
        if !(self.cluster_separation > 0.0) || !self.cluster_separation.is_finite() {
            return Err(Error::validation("cluster_separation", "must be a positive finite number"));
        }
        if self.test_samples == 0 {
            return Err(Error::validation("test_samples", "need at least 1 test sample"));
        }
        Ok(())
    }

    pub fn num_clients(&self) -> usize {
        self.samples_per_client.len()
    }
}

/// Class means with pairwise distances >= separation: evenly spaced on a line
/// for 1-d features, on a circle in the first two coordinates otherwise.
pub fn class_means(num_classes: usize, feature_dim: usize, separation: f64) -> Vec<Vec<f64>> {
    let mut means = vec![vec![0.0; feature_dim]; num_classes];
    if feature_dim == 1 {
        for (c, m) in means.iter_mut().enumerate() {
            m[0] = c as f64 * separation;
        }
    } else {
        // adjacent points on the circle sit exactly `separation` apart
        let radius = separation / (2.0 * (std::f64::consts::PI / num_classes as f64).sin());
        for (c, m) in means.iter_mut().enumerate() {
            let angle = 2.0 * std::f64::consts::PI * c as f64 / num_classes as f64;
            m[0] = radius * angle.cos();
            m[1] = radius * angle.sin();
        }
    }
    means
}

/// Largest-remainder split of `n` into class counts matching `proportions`.
/// Ties on the fractional part go to the smaller class index.
pub fn class_counts(n: usize, proportions: &[f64]) -> Vec<usize> {
    let mut counts: Vec<usize> = proportions.iter().map(|p| (p * n as f64).floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..proportions.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = proportions[a] * n as f64 - (proportions[a] * n as f64).floor();
        let fb = proportions[b] * n as f64 - (proportions[b] * n as f64).floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &c in order.iter().take(n - assigned) {
        counts[c] += 1;
    }
    counts
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; consumes exactly two uniforms per call so streams stay
    // reproducible regardless of rand's internal samplers.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn blob_samples(
    rng: &mut ChaCha8Rng,
    means: &[Vec<f64>],
    counts: &[usize],
    next_id: &mut u64,
) -> Vec<Sample> {
    let mut samples = Vec::with_capacity(counts.iter().sum());
    for (class, &count) in counts.iter().enumerate() {
        for _ in 0..count {
            let features = means[class]
                .iter()
                .map(|&m| m + standard_normal(rng))
                .collect();
            samples.push(Sample {
                id: *next_id,
                features,
                observed_label: class,
                true_label: class,
            });
            *next_id += 1;
        }
    }
    samples
}

/// Generate per-client training datasets plus a held-out test dataset.
/// Observed labels equal true labels here; noise is injected separately.
pub fn generate(spec: &DataSpec) -> Result<(Vec<ClientDataset>, ClientDataset)> {
    spec.validate()?;
    let means = class_means(spec.num_classes, spec.feature_dim, spec.cluster_separation);
    let mut next_id: u64 = 0;
    let mut clients = Vec::with_capacity(spec.num_clients());
    for (k, &n) in spec.samples_per_client.iter().enumerate() {
        let counts = class_counts(n, &spec.class_proportions);
        let mut rng = seed::rng(spec.seed, &[stream::DATA_TRAIN, k as u64]);
        clients.push(ClientDataset {
            client_id: k,
            samples: blob_samples(&mut rng, &means, &counts, &mut next_id),
        });
    }
    let test_counts = class_counts(spec.test_samples, &spec.class_proportions);
    let mut rng = seed::rng(spec.seed, &[stream::DATA_TEST]);
    let test = ClientDataset {
        client_id: spec.num_clients(),
        samples: blob_samples(&mut rng, &means, &test_counts, &mut next_id),
    };
    Ok((clients, test))
}

/// Write datasets as CSV: `id,client,true_label,observed_label,f0..f{d-1}`.
/// Floats use the shortest round-trip representation, so a reload is exact.
pub fn save_csv(datasets: &[ClientDataset], path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let dim = datasets
        .iter()
        .flat_map(|d| d.samples.first())
        .map(|s| s.features.len())
        .next()
        .unwrap_or(0);
    write!(w, "id,client,true_label,observed_label")?;
    for j in 0..dim {
        write!(w, ",f{j}")?;
    }
    writeln!(w)?;
    for ds in datasets {
        for s in &ds.samples {
            write!(w, "{},{},{},{}", s.id, ds.client_id, s.true_label, s.observed_label)?;
            for f in &s.features {
                write!(w, ",{f}")?;
            }
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reload datasets written by [`save_csv`], regrouping rows by client id.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Vec<ClientDataset>> {
    let name = path.as_ref().display().to_string();
    let parse_err = |line: usize, message: String| Error::Parse {
        source_name: name.clone(),
        line,
        message,
    };
    let reader = BufReader::new(File::open(&path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file".into()))??;
    let dim = header.split(',').count().saturating_sub(4);
    let mut clients: Vec<ClientDataset> = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        let lineno = idx + 2;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 4 {
            return Err(parse_err(lineno, format!("expected {} fields, got {}", dim + 4, fields.len())));
        }
        let id: u64 = fields[0]
            .parse()
            .map_err(|e| parse_err(lineno, format!("bad id: {e}")))?;
        let client: usize = fields[1]
            .parse()
            .map_err(|e| parse_err(lineno, format!("bad client: {e}")))?;
        let true_label: usize = fields[2]
            .parse()
            .map_err(|e| parse_err(lineno, format!("bad true_label: {e}")))?;
        let observed_label: usize = fields[3]
            .parse()
            .map_err(|e| parse_err(lineno, format!("bad observed_label: {e}")))?;
        let mut features = Vec::with_capacity(dim);
        for f in &fields[4..] {
            features.push(
                f.parse::<f64>()
                    .map_err(|e| parse_err(lineno, format!("bad feature: {e}")))?,
            );
        }
        match clients.iter_mut().find(|c| c.client_id == client) {
            Some(c) => c.samples.push(Sample {
                id,
                features,
                observed_label,
                true_label,
            }),
            None => clients.push(ClientDataset {
                client_id: client,
                samples: vec![Sample {
                    id,
                    features,
                    observed_label,
                    true_label,
                }],
            }),
        }
    }
    Ok(clients)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> DataSpec {
        DataSpec {
            num_classes: 2,
            feature_dim: 2,
            samples_per_client: vec![10, 10],
            class_proportions: vec![0.5, 0.5],
            cluster_separation: 4.0,
            test_samples: 20,
            seed: 7,
        }
    }

    #[test]
    fn even_split_exact_counts() {
        let (clients, _) = generate(&spec()).unwrap();
        assert_eq!(clients.len(), 2);
        for c in &clients {
            assert_eq!(c.len(), 10);
            let class0 = c.samples.iter().filter(|s| s.true_label == 0).count();
            assert_eq!(class0, 5);
        }
    }

    #[test]
    fn proportional_counts_rounding_free() {
        let counts = class_counts(100, &[0.4, 0.3, 0.2, 0.1]);
        assert_eq!(counts, vec![40, 30, 20, 10]);
    }

    #[test]
    fn largest_remainder_assigns_leftovers() {
        // 10 * (1/3) = 3.33..., remainders tie -> smallest index gets the spare
        let counts = class_counts(10, &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
        assert_eq!(counts.iter().sum::<usize>(), 10);
        assert_eq!(counts, vec![4, 3, 3]);
    }

    #[test]
    fn deterministic_given_seed() {
        let a = generate(&spec()).unwrap();
        let b = generate(&spec()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_seed_changes_data() {
        let mut other = spec();
        other.seed = 8;
        assert_ne!(generate(&spec()).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn observed_equals_true_before_noise() {
        let (clients, test) = generate(&spec()).unwrap();
        for s in clients.iter().flat_map(|c| &c.samples).chain(&test.samples) {
            assert_eq!(s.observed_label, s.true_label);
        }
    }

    #[test]
    fn ids_unique_across_clients_and_test() {
        let (clients, test) = generate(&spec()).unwrap();
        let mut ids: Vec<u64> = clients
            .iter()
            .flat_map(|c| c.samples.iter().map(|s| s.id))
            .chain(test.samples.iter().map(|s| s.id))
            .collect();
        let n = ids.len();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), n);
    }

    #[test]
    fn mean_placement_respects_separation() {
        for &(c, d) in &[(2usize, 2usize), (3, 2), (4, 8), (5, 3), (3, 1)] {
            let means = class_means(c, d, 4.0);
            for i in 0..c {
                for j in (i + 1)..c {
                    let dist2: f64 = means[i]
                        .iter()
                        .zip(&means[j])
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    assert!(
                        dist2.sqrt() >= 4.0 - 1e-9,
                        "means {i},{j} too close for C={c} d={d}: {}",
                        dist2.sqrt()
                    );
                }
            }
        }
    }

    #[test]
    fn validation_names_offending_field() {
        let mut s = spec();
        s.class_proportions = vec![0.5, 0.6];
        match generate(&s) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "class_proportions"),
            other => panic!("expected validation error, got {other:?}"),
        }

        let mut s = spec();
        s.num_classes = 1;
        s.class_proportions = vec![1.0];
        match generate(&s) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "num_classes"),
            other => panic!("expected validation error, got {other:?}"),
        }

        let mut s = spec();
        s.cluster_separation = 0.0;
        match generate(&s) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "cluster_separation"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let (mut clients, test) = generate(&spec()).unwrap();
        clients.push(test);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        save_csv(&clients, &path).unwrap();
        let reloaded = load_csv(&path).unwrap();
        assert_eq!(clients, reloaded);
    }
}
