//! Seeded synthetic datasets that mimic the experimental class structure
//! at desk scale: one dominant benign class, ten attack classes, and a
//! slice of class-irrelevant noise features.

use super::Dataset;
use crate::matrix::Matrix;
use crate::rng::{derive_seed, SeededRng};

/// Shape of a synthetic dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthProfile {
    pub classes: usize,
    pub width: usize,
    /// Rows per class, `classes` entries.
    pub per_class: Vec<usize>,
    pub seed: u64,
}

impl SynthProfile {
    /// Desk-scale default: 11 classes, 115 features, 4300 benign rows and
    /// 70 per attack class (5000 rows, the full-scale imbalance at 1/100).
    pub fn desk_scale(seed: u64) -> Self {
        let mut per_class = vec![70usize; 11];
        per_class[0] = 4300;
        Self {
            classes: 11,
            width: 115,
            per_class,
            seed,
        }
    }

    pub fn total_rows(&self) -> usize {
        self.per_class.iter().sum()
    }
}

/// Generates one Gaussian blob per class.
///
/// Each class mean is a seeded random vector of norm about 3 whose mass
/// is concentrated on a small informative feature subset (as with real
/// traffic statistics, where an attack moves only a handful of
/// measurements). Covariances are axis-aligned with per-feature scales in
/// `[0.22, 0.5]`, and a tenth of the features are class-irrelevant
/// standard normal noise shared by all classes. Deterministic in the
/// profile seed.
pub fn synth_generate(profile: &SynthProfile) -> Dataset {
    assert!(profile.classes >= 2, "need at least 2 classes");
    assert!(profile.width >= 2, "need at least 2 features");
    assert_eq!(
        profile.per_class.len(),
        profile.classes,
        "per_class must have one entry per class"
    );

    let d = profile.width;
    let mut setup_rng = SeededRng::new(derive_seed(profile.seed, 0));

    // Class-irrelevant features, shared by every class.
    let noise_count = d / 10;
    let noise_idx: Vec<usize> = {
        let mut idx = setup_rng.sample_indices(d, noise_count);
        idx.sort_unstable();
        idx
    };
    let mut is_noise = vec![false; d];
    for &i in &noise_idx {
        is_noise[i] = true;
    }
    let signal_idx: Vec<usize> = (0..d).filter(|&j| !is_noise[j]).collect();
    let informative_count = (signal_idx.len() / 16).max(2).min(signal_idx.len());

    // Per-class sparse mean (norm ~ 3) and per-feature scales.
    let mut means = Vec::with_capacity(profile.classes);
    let mut scales = Vec::with_capacity(profile.classes);
    for _ in 0..profile.classes {
        let chosen = setup_rng.sample_indices(signal_idx.len(), informative_count);
        let mut mu = vec![0.0; d];
        for &i in &chosen {
            mu[signal_idx[i]] = setup_rng.normal();
        }
        let norm = mu.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        let target = 3.0 * setup_rng.uniform_in(0.9, 1.1);
        for v in &mut mu {
            *v *= target / norm;
        }
        let sigma: Vec<f64> = (0..d).map(|_| setup_rng.uniform_in(0.22, 0.5)).collect();
        means.push(mu);
        scales.push(sigma);
    }

    let total = profile.total_rows();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(total);
    let mut labels: Vec<u32> = Vec::with_capacity(total);
    for (c, &count) in profile.per_class.iter().enumerate() {
        let mut rng = SeededRng::new(derive_seed(profile.seed, 1 + c as u64));
        for _ in 0..count {
            let mut row = Vec::with_capacity(d);
            for j in 0..d {
                let z = rng.normal();
                row.push(if is_noise[j] {
                    z
                } else {
                    means[c][j] + scales[c][j] * z
                });
            }
            rows.push(row);
            labels.push(c as u32);
        }
    }

    // Shuffle so class blocks do not survive into mini-batches.
    let mut order: Vec<usize> = (0..total).collect();
    let mut order_rng = SeededRng::new(derive_seed(profile.seed, u64::MAX));
    order_rng.shuffle(&mut order);
    let rows: Vec<Vec<f64>> = order.iter().map(|&i| rows[i].clone()).collect();
    let labels: Vec<u32> = order.iter().map(|&i| labels[i]).collect();

    let class_names: Vec<String> = (0..profile.classes)
        .map(|c| {
            if c == 0 {
                "benign".to_string()
            } else {
                format!("attack_{c:02}")
            }
        })
        .collect();
    Dataset {
        features: Matrix::from_rows(&rows),
        labels,
        device_of_row: vec![0; total],
        device_names: vec!["synthetic".to_string()],
        class_names,
    }
}
