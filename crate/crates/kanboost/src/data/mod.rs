//! Dataset construction: CSV ingestion, experimental-subset sampling,
//! standardization, stratified splitting, and a seeded synthetic
//! generator for desk-scale runs.

mod csv;
mod synth;

pub use csv::{
    count_csv_rows, dataset_from_csv, dataset_to_csv, load_device_csv, nbaiot_feature_names,
    sample_device_csv,
};
pub use synth::{synth_generate, SynthProfile};

use crate::matrix::Matrix;
use crate::rng::{derive_seed, SeededRng};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// Number of features per instance: 23 traffic statistics over 5 decay
/// windows.
pub const FEATURE_COUNT: usize = 115;

/// Benign class plus ten attack variants.
pub const CLASS_COUNT: usize = 11;

/// The seven devices carrying both attack families.
pub const DEVICES: [&str; 7] = [
    "Danmini_Doorbell",
    "Ecobee_Thermostat",
    "Philips_B120N10_Baby_Monitor",
    "Provision_PT_737E_Security_Camera",
    "Provision_PT_838_Security_Camera",
    "SimpleHome_XCS7_1002_WHT_Security_Camera",
    "SimpleHome_XCS7_1003_WHT_Security_Camera",
];

/// Traffic kinds in class-id order: class 0 is benign, 1-5 the Bashlite
/// (gafgyt) variants alphabetically, 6-10 the Mirai variants
/// alphabetically.
pub const TRAFFIC_KINDS: [&str; 11] = [
    "benign",
    "gafgyt_combo",
    "gafgyt_junk",
    "gafgyt_scan",
    "gafgyt_tcp",
    "gafgyt_udp",
    "mirai_ack",
    "mirai_scan",
    "mirai_syn",
    "mirai_udp",
    "mirai_udpplain",
];

/// Class id for a traffic-kind name.
pub fn class_of_kind(kind: &str) -> Option<u32> {
    TRAFFIC_KINDS
        .iter()
        .position(|&k| k == kind)
        .map(|i| i as u32)
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("{path}: expected {expected} feature columns, found {found}")]
    WrongColumnCount {
        path: String,
        expected: usize,
        found: usize,
    },

    #[error("{path}: row {row}, column {col}: cannot parse {content:?} as a number")]
    NonNumeric {
        path: String,
        row: usize,
        col: usize,
        content: String,
    },

    #[error("{path}: row {row}, column {col}: non-finite value rejected")]
    NonFinite {
        path: String,
        row: usize,
        col: usize,
    },

    #[error("{path}: file has a header but no data rows")]
    Empty { path: String },

    #[error("unknown traffic kind {0:?}")]
    UnknownTrafficKind(String),

    #[error(
        "insufficient samples for ({device}, {kind}): requested {requested}, available {available}"
    )]
    InsufficientSamples {
        device: String,
        kind: String,
        requested: usize,
        available: usize,
    },

    #[error("class {class} has only {rows} rows; at least 2 are required to split")]
    ClassTooSmall { class: u32, rows: usize },

    #[error("test fraction must lie strictly between 0 and 1, got {0}")]
    BadTestFraction(f64),

    #[error("datasets must share the feature width: expected {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("label {label} out of range for {classes} classes (row {row})")]
    LabelOutOfRange {
        row: usize,
        label: u32,
        classes: usize,
    },
}

/// A labelled feature table with per-row provenance.
#[derive(Clone, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub labels: Vec<u32>,
    /// Index into `device_names`, one per row.
    pub device_of_row: Vec<u16>,
    pub device_names: Vec<String>,
    pub class_names: Vec<String>,
}

impl fmt::Debug for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Dataset({} rows x {} features, {} classes)",
            self.rows(),
            self.width(),
            self.class_names.len()
        )
    }
}

impl Dataset {
    pub fn rows(&self) -> usize {
        self.features.rows()
    }

    pub fn width(&self) -> usize {
        self.features.cols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// `(device, traffic kind)` tags of one row.
    pub fn provenance(&self, row: usize) -> (&str, &str) {
        (
            &self.device_names[self.device_of_row[row] as usize],
            &self.class_names[self.labels[row] as usize],
        )
    }

    /// Rows per class id.
    pub fn class_histogram(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes()];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts
    }

    /// New dataset with the selected rows, in the given order.
    pub fn take(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.take_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            device_of_row: indices.iter().map(|&i| self.device_of_row[i]).collect(),
            device_names: self.device_names.clone(),
            class_names: self.class_names.clone(),
        }
    }

    fn validate_labels(&self) -> Result<(), DataError> {
        let classes = self.n_classes();
        for (row, &label) in self.labels.iter().enumerate() {
            if label as usize >= classes {
                return Err(DataError::LabelOutOfRange {
                    row,
                    label,
                    classes,
                });
            }
        }
        Ok(())
    }
}

/// How the experimental subset is drawn from per-(device, kind) sources.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    /// Benign rows drawn in total, proportionally across devices.
    pub benign_total: usize,
    /// Attack rows drawn per (device, attack-kind) source.
    pub per_attack_per_device: usize,
    pub devices: Vec<String>,
    /// Attack kinds to draw (class names, excluding benign).
    pub attacks: Vec<String>,
    pub rng_seed: u64,
}

impl SamplingPlan {
    /// The full-scale plan: 430,000 benign plus 1,000 rows per attack per
    /// device across 7 devices and 10 attacks (500,000 rows in total).
    pub fn full_scale(seed: u64) -> Self {
        Self {
            benign_total: 430_000,
            per_attack_per_device: 1_000,
            devices: DEVICES.iter().map(|s| s.to_string()).collect(),
            attacks: TRAFFIC_KINDS[1..].iter().map(|s| s.to_string()).collect(),
            rng_seed: seed,
        }
    }

    pub fn total_rows(&self) -> usize {
        self.benign_total + self.devices.len() * self.attacks.len() * self.per_attack_per_device
    }
}

/// Proportional allocation of `total` across `available` with exact sum:
/// floor shares plus largest-remainder distribution (ties to the lowest
/// index).
pub(crate) fn proportional_allocation(available: &[usize], total: usize) -> Vec<usize> {
    let pool: usize = available.iter().sum();
    assert!(pool >= total, "allocation exceeds the available pool");
    if pool == 0 {
        return vec![0; available.len()];
    }
    let mut shares: Vec<usize> = Vec::with_capacity(available.len());
    let mut remainders: Vec<(usize, f64)> = Vec::with_capacity(available.len());
    let mut allocated = 0usize;
    for (i, &n) in available.iter().enumerate() {
        let exact = n as f64 * total as f64 / pool as f64;
        let mut floor = exact.floor() as usize;
        if floor > n {
            floor = n;
        }
        shares.push(floor);
        allocated += floor;
        remainders.push((i, exact - floor as f64));
    }
    // Hand out the remainder to the largest fractional parts, skipping
    // exhausted sources.
    remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let mut left = total - allocated;
    while left > 0 {
        let mut gave = false;
        for &(i, _) in &remainders {
            if left == 0 {
                break;
            }
            if shares[i] < available[i] {
                shares[i] += 1;
                left -= 1;
                gave = true;
            }
        }
        assert!(gave, "pool accounting is inconsistent");
    }
    shares
}

/// Draws the experimental subset from loaded fragments: benign rows
/// proportionally across devices, a fixed count per (device, attack)
/// cell, all without replacement, then shuffles the result.
pub fn build_subset(fragments: &[Dataset], plan: &SamplingPlan) -> Result<Dataset, DataError> {
    let class_names: Vec<String> = TRAFFIC_KINDS.iter().map(|s| s.to_string()).collect();
    for f in fragments {
        if f.width() != FEATURE_COUNT {
            return Err(DataError::WidthMismatch {
                expected: FEATURE_COUNT,
                got: f.width(),
            });
        }
        f.validate_labels()?;
    }

    // Group fragment rows by (device, kind); a source may span fragments.
    let mut sources: BTreeMap<(String, String), Vec<(usize, usize)>> = BTreeMap::new();
    for (fi, f) in fragments.iter().enumerate() {
        for row in 0..f.rows() {
            let (device, kind) = f.provenance(row);
            sources
                .entry((device.to_string(), kind.to_string()))
                .or_default()
                .push((fi, row));
        }
    }

    let empty: Vec<(usize, usize)> = Vec::new();
    let benign_pools: Vec<&Vec<(usize, usize)>> = plan
        .devices
        .iter()
        .map(|d| {
            sources
                .get(&(d.clone(), "benign".to_string()))
                .unwrap_or(&empty)
        })
        .collect();
    let available: Vec<usize> = benign_pools.iter().map(|p| p.len()).collect();
    let pool_total: usize = available.iter().sum();
    if pool_total < plan.benign_total {
        return Err(DataError::InsufficientSamples {
            device: "all devices".into(),
            kind: "benign".into(),
            requested: plan.benign_total,
            available: pool_total,
        });
    }
    let benign_quota = proportional_allocation(&available, plan.benign_total);

    // Sampling order is fixed (devices then attacks, in plan order) and
    // each source draws from its own derived seed.
    let mut picked: Vec<(usize, usize)> = Vec::with_capacity(plan.total_rows());
    let mut stream = 0u64;
    for (d, pool) in benign_pools.iter().enumerate() {
        let mut rng = SeededRng::new(derive_seed(plan.rng_seed, stream));
        stream += 1;
        for i in rng.sample_indices(pool.len(), benign_quota[d]) {
            picked.push(pool[i]);
        }
    }
    for device in &plan.devices {
        for attack in &plan.attacks {
            if class_of_kind(attack).is_none() {
                return Err(DataError::UnknownTrafficKind(attack.clone()));
            }
            let pool = sources
                .get(&(device.clone(), attack.clone()))
                .unwrap_or(&empty);
            if pool.len() < plan.per_attack_per_device {
                return Err(DataError::InsufficientSamples {
                    device: device.clone(),
                    kind: attack.clone(),
                    requested: plan.per_attack_per_device,
                    available: pool.len(),
                });
            }
            let mut rng = SeededRng::new(derive_seed(plan.rng_seed, stream));
            stream += 1;
            for i in rng.sample_indices(pool.len(), plan.per_attack_per_device) {
                picked.push(pool[i]);
            }
        }
    }

    let mut order_rng = SeededRng::new(derive_seed(plan.rng_seed, u64::MAX));
    order_rng.shuffle(&mut picked);

    // Materialize the picked rows.
    let mut device_names: Vec<String> = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(picked.len());
    let mut labels = Vec::with_capacity(picked.len());
    let mut device_of_row = Vec::with_capacity(picked.len());
    for &(fi, row) in &picked {
        let f = &fragments[fi];
        rows.push(f.features.row(row).to_vec());
        labels.push(f.labels[row]);
        let device = &f.device_names[f.device_of_row[row] as usize];
        let at = device_names
            .iter()
            .position(|d| d == device)
            .unwrap_or_else(|| {
                device_names.push(device.clone());
                device_names.len() - 1
            });
        device_of_row.push(at as u16);
    }

    Ok(Dataset {
        features: Matrix::from_rows(&rows),
        labels,
        device_of_row,
        device_names,
        class_names,
    })
}

/// Per-feature mean and standard deviation from a training partition.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardStats {
    pub mean: Vec<f64>,
    pub stddev: Vec<f64>,
}

impl StandardStats {
    /// Applies `(x - mean) / stddev` per feature; zero-variance features
    /// map to 0.
    pub fn apply(&self, features: &Matrix) -> Matrix {
        assert_eq!(features.cols(), self.mean.len(), "feature width mismatch");
        let mut out = features.clone();
        for r in 0..out.rows() {
            let row = out.row_mut(r);
            for (c, v) in row.iter_mut().enumerate() {
                *v = if self.stddev[c] > 0.0 {
                    (*v - self.mean[c]) / self.stddev[c]
                } else {
                    0.0
                };
            }
        }
        out
    }
}

/// Computes per-feature standardization statistics and returns the
/// standardized copy alongside them.
pub fn standardize(features: &Matrix) -> (Matrix, StandardStats) {
    let rows = features.rows();
    let cols = features.cols();
    assert!(rows >= 2, "standardization needs at least 2 rows");
    let mut mean = vec![0.0; cols];
    for r in 0..rows {
        for (c, &v) in features.row(r).iter().enumerate() {
            mean[c] += v;
        }
    }
    for m in &mut mean {
        *m /= rows as f64;
    }
    let mut var = vec![0.0; cols];
    for r in 0..rows {
        for (c, &v) in features.row(r).iter().enumerate() {
            let d = v - mean[c];
            var[c] += d * d;
        }
    }
    let stddev: Vec<f64> = var.iter().map(|&v| (v / rows as f64).sqrt()).collect();
    let stats = StandardStats { mean, stddev };
    (stats.apply(features), stats)
}

/// Per-class proportional split into disjoint train/test index sets,
/// rounding half-up per class, both sides shuffled.
pub fn stratified_split_indices(
    labels: &[u32],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), DataError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DataError::BadTestFraction(test_fraction));
    }
    if labels.is_empty() {
        return Err(DataError::EmptyDataset);
    }
    let mut by_class: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }

    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class, mut rows) in by_class {
        if rows.len() < 2 {
            return Err(DataError::ClassTooSmall {
                class,
                rows: rows.len(),
            });
        }
        let mut rng = SeededRng::new(derive_seed(seed, class as u64));
        rng.shuffle(&mut rows);
        // Round half-up.
        let n_test = (rows.len() as f64 * test_fraction + 0.5).floor() as usize;
        let n_test = n_test.min(rows.len());
        test.extend_from_slice(&rows[..n_test]);
        train.extend_from_slice(&rows[n_test..]);
    }
    let mut rng = SeededRng::new(derive_seed(seed, u64::MAX));
    rng.shuffle(&mut train);
    rng.shuffle(&mut test);
    Ok((train, test))
}

/// Stratified split returning materialized datasets.
pub fn stratified_split(
    dataset: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), DataError> {
    let (train_idx, test_idx) = stratified_split_indices(&dataset.labels, test_fraction, seed)?;
    Ok((dataset.take(&train_idx), dataset.take(&test_idx)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_fragment(device: &str, kind: &str, n: usize, seed: u64) -> Dataset {
        let mut rng = SeededRng::new(seed);
        let label = class_of_kind(kind).unwrap();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..FEATURE_COUNT).map(|_| rng.normal()).collect())
            .collect();
        Dataset {
            features: Matrix::from_rows(&rows),
            labels: vec![label; n],
            device_of_row: vec![0; n],
            device_names: vec![device.to_string()],
            class_names: TRAFFIC_KINDS.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn toy_plan() -> SamplingPlan {
        SamplingPlan {
            benign_total: 50,
            per_attack_per_device: 5,
            devices: vec!["dev_a".into(), "dev_b".into()],
            attacks: vec![
                "gafgyt_combo".into(),
                "mirai_ack".into(),
                "mirai_udp".into(),
            ],
            rng_seed: 77,
        }
    }

    fn toy_fragments() -> Vec<Dataset> {
        let mut frags = Vec::new();
        for (d, seed) in [("dev_a", 1u64), ("dev_b", 2)] {
            frags.push(tiny_fragment(d, "benign", 40, seed));
            for (k, s2) in [
                ("gafgyt_combo", 10u64),
                ("mirai_ack", 20),
                ("mirai_udp", 30),
            ] {
                frags.push(tiny_fragment(d, k, 9, seed * 100 + s2));
            }
        }
        frags
    }

    #[test]
    fn toy_plan_counts_are_exact() {
        let plan = toy_plan();
        assert_eq!(plan.total_rows(), 50 + 2 * 3 * 5);
        let subset = build_subset(&toy_fragments(), &plan).unwrap();
        assert_eq!(subset.rows(), 80);
        let hist = subset.class_histogram();
        assert_eq!(hist[0], 50);
        assert_eq!(hist[class_of_kind("gafgyt_combo").unwrap() as usize], 10);
        assert_eq!(hist[class_of_kind("mirai_ack").unwrap() as usize], 10);
        assert_eq!(hist[class_of_kind("mirai_udp").unwrap() as usize], 10);
        assert_eq!(hist.iter().sum::<usize>(), 80);
    }

    #[test]
    fn full_scale_plan_matches_headline_totals() {
        let plan = SamplingPlan::full_scale(42);
        assert_eq!(plan.total_rows(), 500_000);
        assert_eq!(plan.total_rows() - plan.benign_total, 70_000);
    }

    #[test]
    fn same_seed_reproduces_the_subset_exactly() {
        let frags = toy_fragments();
        let a = build_subset(&frags, &toy_plan()).unwrap();
        let b = build_subset(&frags, &toy_plan()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn insufficient_cell_is_named() {
        let mut plan = toy_plan();
        plan.per_attack_per_device = 100;
        let err = build_subset(&toy_fragments(), &plan).unwrap_err();
        match err {
            DataError::InsufficientSamples {
                device,
                kind,
                requested,
                available,
            } => {
                assert_eq!(device, "dev_a");
                assert_eq!(kind, "gafgyt_combo");
                assert_eq!((requested, available), (100, 9));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn no_replacement_within_a_source() {
        // Drawing the full pool of a source must yield each row once.
        let mut plan = toy_plan();
        plan.per_attack_per_device = 9;
        let subset = build_subset(&toy_fragments(), &plan).unwrap();
        let hist = subset.class_histogram();
        assert_eq!(hist[class_of_kind("mirai_ack").unwrap() as usize], 18);
        // Row-level uniqueness: no two identical feature rows.
        let mut seen: Vec<&[f64]> = subset.features.iter_rows().collect();
        seen.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in seen.windows(2) {
            assert_ne!(w[0], w[1], "duplicate row sampled");
        }
    }

    #[test]
    fn proportional_allocation_is_exact_and_capped() {
        let shares = proportional_allocation(&[100, 200, 700], 100);
        assert_eq!(shares.iter().sum::<usize>(), 100);
        assert_eq!(shares, vec![10, 20, 70]);

        let shares = proportional_allocation(&[3, 5, 7], 15);
        assert_eq!(shares.iter().sum::<usize>(), 15);
        assert_eq!(shares, vec![3, 5, 7]);

        let shares = proportional_allocation(&[10, 1, 10], 20);
        assert_eq!(shares.iter().sum::<usize>(), 20);
        assert!(shares[1] <= 1);
    }

    #[test]
    fn standardize_centers_and_scales() {
        let m = Matrix::from_rows(&[
            vec![1.0, 5.0, 2.0],
            vec![3.0, 5.0, 4.0],
            vec![5.0, 5.0, 9.0],
        ]);
        let (z, stats) = standardize(&m);
        // Constant column maps to zero.
        for r in 0..3 {
            assert_eq!(z.get(r, 1), 0.0);
        }
        assert_eq!(stats.stddev[1], 0.0);
        // Non-constant columns: mean 0, variance 1.
        for c in [0usize, 2] {
            let mean: f64 = (0..3).map(|r| z.get(r, c)).sum::<f64>() / 3.0;
            let var: f64 = (0..3).map(|r| z.get(r, c).powi(2)).sum::<f64>() / 3.0;
            assert!(mean.abs() < 1e-9);
            assert!((var - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn held_out_rows_use_training_statistics() {
        let m = Matrix::from_rows(&[vec![2.0, 10.0], vec![4.0, 30.0]]);
        let (_, stats) = standardize(&m);
        let held = Matrix::from_rows(&[vec![5.0, 0.0]]);
        let z = stats.apply(&held);
        assert!((z.get(0, 0) - (5.0 - 3.0) / 1.0).abs() < 1e-12);
        assert!((z.get(0, 1) - (0.0 - 20.0) / 10.0).abs() < 1e-12);
    }

    #[test]
    fn standardization_is_idempotent() {
        let mut rng = SeededRng::new(5);
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..4).map(|_| 3.0 + 2.0 * rng.normal()).collect())
            .collect();
        let (z1, _) = standardize(&Matrix::from_rows(&rows));
        let (z2, _) = standardize(&z1);
        for (a, b) in z1.as_slice().iter().zip(z2.as_slice()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn split_is_a_seeded_partition() {
        let labels: Vec<u32> = (0..100).map(|i| (i % 4) as u32).collect();
        let (train, test) = stratified_split_indices(&labels, 0.2, 9).unwrap();
        assert_eq!(train.len(), 80);
        assert_eq!(test.len(), 20);
        let mut all: Vec<usize> = train.iter().chain(test.iter()).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());

        let (t2, e2) = stratified_split_indices(&labels, 0.2, 9).unwrap();
        assert_eq!(train, t2);
        assert_eq!(test, e2);
    }

    #[test]
    fn split_proportions_within_one_sample_per_class() {
        let mut labels = vec![0u32; 83];
        labels.extend(vec![1u32; 17]);
        labels.extend(vec![2u32; 400]);
        let (_, test) = stratified_split_indices(&labels, 0.2, 3).unwrap();
        let mut per_class = [0usize; 3];
        for &i in &test {
            per_class[labels[i] as usize] += 1;
        }
        for (c, &n) in per_class.iter().enumerate() {
            let expected = [83.0, 17.0, 400.0][c] * 0.2;
            assert!(
                (n as f64 - expected).abs() <= 1.0,
                "class {c}: {n} vs {expected}"
            );
        }
    }

    #[test]
    fn split_rejects_tiny_classes_and_bad_fractions() {
        let labels = vec![0u32, 0, 1];
        assert!(matches!(
            stratified_split_indices(&labels, 0.2, 0),
            Err(DataError::ClassTooSmall { class: 1, rows: 1 })
        ));
        assert!(matches!(
            stratified_split_indices(&[0, 0], 0.0, 0),
            Err(DataError::BadTestFraction(_))
        ));
        assert!(matches!(
            stratified_split_indices(&[0, 0], 1.0, 0),
            Err(DataError::BadTestFraction(_))
        ));
    }

    #[test]
    fn one_class_eighty_twenty() {
        let labels = vec![0u32; 100];
        let (train, test) = stratified_split_indices(&labels, 0.2, 1).unwrap();
        assert_eq!((train.len(), test.len()), (80, 20));
    }
}
