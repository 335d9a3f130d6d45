#![allow(clippy::needless_range_loop)]

//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with its measured runtime.
//!
//! Run with `cargo test -p kanboost --test acceptance -- --nocapture`.
//! The optional full-scale reproduction (criterion 9) needs the public
//! N-BaIoT device captures and is `#[ignore]`d; see its doc comment.

use kanboost::boost::{best_split, build_tree, SplitChoice, TreeNode, TreeParams};
use kanboost::cli::{self, Profile, RunConfig};
use kanboost::data::synth_generate;
use kanboost::kan::{
    adam_step, softmax_cross_entropy, step_lr, train_regression, AdamParams, AdamState, MlpNetwork,
    TrainConfig, Trainable,
};
use kanboost::pipeline::{compare_models, CompareConfig, EvalReport};
use kanboost::rng::SeededRng;
use kanboost::{KanNetwork, Matrix, SplineGrid, SynthProfile};
use std::time::Instant;

fn report_pass(criterion: usize, label: &str, started: Instant, budget_s: f64) {
    let elapsed = started.elapsed().as_secs_f64();
    println!(
        "acceptance: criterion {criterion} ({label}) PASS in {elapsed:.2}s (budget {budget_s}s)"
    );
    assert!(
        elapsed < budget_s,
        "criterion {criterion} exceeded its {budget_s}s budget: {elapsed:.2}s"
    );
}

// ---------------------------------------------------------------------
// 1. Spline correctness: partition of unity and derivative consistency.
// ---------------------------------------------------------------------
#[test]
fn criterion_1_spline_correctness() {
    let started = Instant::now();
    let mut rng = SeededRng::new(101);
    let fd_h = 1e-5;
    for degree in 0..=6usize {
        for intervals in 1..=16usize {
            let grid = SplineGrid::new(degree, intervals, -1.0, 1.0).unwrap();
            for _ in 0..1000 {
                let x = rng.uniform_in(-1.0, 1.0);
                let values = grid.basis_values(x).unwrap();
                let sum: f64 = values.iter().sum();
                assert!(
                    (sum - 1.0).abs() < 1e-9,
                    "partition of unity failed: k={degree} G={intervals} x={x} sum={sum}"
                );
                assert!(
                    values.iter().all(|&v| v >= 0.0),
                    "negative basis value: k={degree} G={intervals} x={x}"
                );
            }

            // Derivative vs central finite difference at interior points
            // at least 1e-3 from any knot.
            for _ in 0..50 {
                let x = rng.uniform_in(-1.0 + 2.0 * fd_h, 1.0 - 2.0 * fd_h);
                if grid.knots().iter().any(|&t| (t - x).abs() < 1e-3) {
                    continue;
                }
                let analytic = grid.basis_derivatives(x).unwrap();
                let up = grid.basis_values(x + fd_h).unwrap();
                let down = grid.basis_values(x - fd_h).unwrap();
                for b in 0..grid.basis_count() {
                    let fd = (up[b] - down[b]) / (2.0 * fd_h);
                    assert!(
                        (analytic[b] - fd).abs() < 1e-5,
                        "derivative mismatch: k={degree} G={intervals} x={x} basis={b}: \
                         {} vs {fd}",
                        analytic[b]
                    );
                }
            }
        }
    }
    report_pass(1, "spline correctness", started, 5.0);
}

// ---------------------------------------------------------------------
// 2. Gradient verification: analytic vs finite differences, 20 seeds.
// ---------------------------------------------------------------------
fn ce_loss<M: Trainable>(model: &M, batch: &Matrix, labels: &[u32]) -> f64 {
    softmax_cross_entropy(&model.logits(batch).unwrap(), labels)
        .unwrap()
        .0
}

fn fd_max_rel_error<M: Trainable>(model: &mut M, batch: &Matrix, labels: &[u32]) -> f64 {
    let h = 1e-5;
    let (_, analytic) = model.loss_and_grads(batch, labels).unwrap();
    let mut max_rel = 0.0f64;
    for (t, tensor) in analytic.iter().enumerate() {
        for i in 0..tensor.len() {
            let orig = model.params_mut()[t][i];
            model.params_mut()[t][i] = orig + h;
            let up = ce_loss(model, batch, labels);
            model.params_mut()[t][i] = orig - h;
            let down = ce_loss(model, batch, labels);
            model.params_mut()[t][i] = orig;
            let fd = (up - down) / (2.0 * h);
            let a = tensor[i];
            max_rel = max_rel.max((a - fd).abs() / a.abs().max(fd.abs()).max(1.0));
        }
    }
    max_rel
}

#[test]
fn criterion_2_gradient_verification() {
    let started = Instant::now();
    for seed in 0..20u64 {
        let mut rng = SeededRng::new(1000 + seed);
        let rows: Vec<Vec<f64>> = (0..8)
            .map(|_| (0..3).map(|_| rng.normal()).collect())
            .collect();
        let labels: Vec<u32> = (0..8).map(|_| rng.below(2) as u32).collect();
        let batch = Matrix::from_rows(&rows);

        let mut kan = KanNetwork::new(&[3, 4, 2], 5, 7, seed).unwrap();
        let kan_err = fd_max_rel_error(&mut kan, &batch, &labels);
        assert!(kan_err < 1e-4, "seed {seed}: KAN gradient error {kan_err}");

        let mut mlp = MlpNetwork::new(&[3, 4, 2], seed).unwrap();
        let mlp_err = fd_max_rel_error(&mut mlp, &batch, &labels);
        assert!(mlp_err < 1e-4, "seed {seed}: MLP gradient error {mlp_err}");
    }
    report_pass(2, "gradient verification", started, 30.0);
}

// ---------------------------------------------------------------------
// 3. Boosted-tree oracle equivalence and leaf-weight closed form.
// ---------------------------------------------------------------------

/// Independent split oracle: evaluates every (feature, midpoint)
/// candidate directly from the row sets, no prefix accumulation. Applies
/// the same midpoint rule and the same tie tolerance as the library.
fn oracle_best_split(
    rows: &[usize],
    features: &Matrix,
    g: &[f64],
    h: &[f64],
    p: &TreeParams,
) -> Option<SplitChoice> {
    const TIE_EPS: f64 = 1e-10;
    let total_g: f64 = rows.iter().map(|&r| g[r]).sum();
    let total_h: f64 = rows.iter().map(|&r| h[r]).sum();
    let parent = total_g * total_g / (total_h + p.lambda);
    let mut best: Option<SplitChoice> = None;
    for feature in 0..features.cols() {
        let mut values: Vec<f64> = rows.iter().map(|&r| features.get(r, feature)).collect();
        values.sort_unstable_by(f64::total_cmp);
        values.dedup();
        for pair in values.windows(2) {
            let mid = 0.5 * pair[0] + 0.5 * pair[1];
            let threshold = if mid > pair[0] { mid } else { pair[1] };
            let (mut gl, mut hl, mut gr, mut hr) = (0.0, 0.0, 0.0, 0.0);
            for &r in rows {
                if features.get(r, feature) < threshold {
                    gl += g[r];
                    hl += h[r];
                } else {
                    gr += g[r];
                    hr += h[r];
                }
            }
            if hl < p.min_child_weight || hr < p.min_child_weight {
                continue;
            }
            let gain =
                0.5 * (gl * gl / (hl + p.lambda) + gr * gr / (hr + p.lambda) - parent) - p.gamma;
            let improves = match best {
                None => gain > 0.0,
                Some(b) => gain > 0.0 && gain > b.gain + TIE_EPS * b.gain.abs().max(1.0),
            };
            if improves {
                best = Some(SplitChoice {
                    feature,
                    threshold,
                    gain,
                });
            }
        }
    }
    best
}

fn audit_leaves(
    node: &TreeNode,
    rows: &[usize],
    features: &Matrix,
    g: &[f64],
    h: &[f64],
    lambda: f64,
) {
    match node {
        TreeNode::Leaf { weight } => {
            let gs: f64 = rows.iter().map(|&r| g[r]).sum();
            let hs: f64 = rows.iter().map(|&r| h[r]).sum();
            let expected = -gs / (hs + lambda);
            assert!(
                (weight - expected).abs() < 1e-12,
                "leaf weight {weight} differs from closed form {expected}"
            );
        }
        TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            let (l, r): (Vec<usize>, Vec<usize>) = rows
                .iter()
                .partition(|&&row| features.get(row, *feature) < *threshold);
            audit_leaves(left, &l, features, g, h, lambda);
            audit_leaves(right, &r, features, g, h, lambda);
        }
    }
}

#[test]
fn criterion_3_gbt_oracle_equivalence() {
    let started = Instant::now();
    let mut rng = SeededRng::new(0xACCE);
    for case in 0..200 {
        let n = 2 + rng.below(63);
        let cols = 1 + rng.below(5);
        let data: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..cols)
                    .map(|_| {
                        if rng.below(4) == 0 {
                            rng.below(3) as f64 - 1.0
                        } else {
                            rng.normal()
                        }
                    })
                    .collect()
            })
            .collect();
        let features = Matrix::from_rows(&data);
        let g: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let h: Vec<f64> = (0..n).map(|_| rng.uniform_in(0.01, 1.0)).collect();
        let rows: Vec<usize> = (0..n).collect();
        let params = TreeParams {
            max_depth: 6,
            lambda: rng.uniform_in(0.0, 2.0),
            gamma: if rng.below(2) == 0 { 0.0 } else { 0.1 },
            min_child_weight: if rng.below(2) == 0 { 0.0 } else { 0.2 },
        };

        let fast = best_split(&rows, &features, &g, &h, &params);
        let slow = oracle_best_split(&rows, &features, &g, &h, &params);
        match (fast, slow) {
            (None, None) => {}
            (Some(a), Some(b)) => {
                assert_eq!(a.feature, b.feature, "case {case}: feature");
                assert_eq!(a.threshold, b.threshold, "case {case}: threshold");
                assert!((a.gain - b.gain).abs() < 1e-9, "case {case}: gain");
            }
            other => panic!("case {case}: implementation vs oracle disagree: {other:?}"),
        }

        // Leaf-weight closed form over every routed row set.
        if case % 10 == 0 {
            let tree = build_tree(&rows, &features, &g, &h, &params);
            audit_leaves(&tree, &rows, &features, &g, &h, params.lambda);
        }
    }
    report_pass(3, "gbt oracle equivalence", started, 10.0);
}

// ---------------------------------------------------------------------
// 4. Function approximation: [1,5,1] network reaches RMSE < 0.02 on
//    sin(pi x) within 200 epochs.
// ---------------------------------------------------------------------
#[test]
fn criterion_4_function_approximation() {
    let started = Instant::now();
    let n = 2048;
    let xs = Matrix::from_rows(
        &(0..n)
            .map(|i| vec![-1.0 + 2.0 * i as f64 / (n - 1) as f64])
            .collect::<Vec<_>>(),
    );
    let ys = Matrix::from_rows(
        &(0..n)
            .map(|i| vec![(std::f64::consts::PI * xs.get(i, 0)).sin()])
            .collect::<Vec<_>>(),
    );
    let mut net = KanNetwork::new(&[1, 5, 1], 5, 7, 17).unwrap();
    let mut cfg = TrainConfig::default_profile(4);
    cfg.epochs = 200;
    cfg.batch_size = 256;
    cfg.learning_rate = 0.02;
    cfg.step_size = 50;
    cfg.gamma = 0.5;
    train_regression(&mut net, &xs, &ys, &cfg).unwrap();

    let pred = net.forward(&xs).unwrap();
    let sse: f64 = pred
        .as_slice()
        .iter()
        .zip(ys.as_slice())
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    let rmse = (sse / n as f64).sqrt();
    assert!(rmse < 0.02, "sine RMSE {rmse}");
    report_pass(4, "function approximation", started, 60.0);
}

// ---------------------------------------------------------------------
// 5. Desk-scale end-to-end on the committed seeded synthetic dataset,
//    plus the golden comparison fixture.
// ---------------------------------------------------------------------
#[test]
fn criterion_5_desk_scale_end_to_end() {
    let started = Instant::now();
    // Exactly the shipped synth-small profile.
    let cfg = RunConfig::resolve(Profile::SynthSmall, None, None).unwrap();
    let mut per_class = vec![cfg.synth.per_attack; cfg.synth.classes];
    per_class[0] = cfg.synth.benign_total;
    let dataset = synth_generate(&SynthProfile {
        classes: cfg.synth.classes,
        width: cfg.synth.width,
        per_class,
        seed: cfg.synth.seed,
    });
    assert_eq!(dataset.rows(), 5000);
    assert_eq!(dataset.width(), 115);
    assert_eq!(dataset.n_classes(), 11);

    let compare_cfg = CompareConfig {
        test_fraction: cfg.split.test_fraction,
        split_seed: cfg.split.seed,
        train: cfg.train.to_train_config(),
        gbt: cfg.gbt,
        arch: cfg.arch,
    };
    let comparison = compare_models(&dataset, &compare_cfg).unwrap();
    let hybrid = comparison.outcome("hybrid").unwrap().report.accuracy;
    let kan = comparison.outcome("kan").unwrap().report.accuracy;
    println!("acceptance: desk-scale hybrid accuracy {hybrid:.4}, kan {kan:.4}");
    assert!(hybrid >= 0.97, "hybrid accuracy {hybrid} below 0.97");
    assert!(
        hybrid >= kan,
        "hybrid ({hybrid}) must not trail the network alone ({kan})"
    );

    // Golden fixture: the comparison table reproduces byte-for-byte.
    let golden = include_str!("golden/compare_synth_small.csv");
    let produced = comparison.summary_csv();
    assert_eq!(
        produced, golden,
        "summary table drifted from tests/golden/compare_synth_small.csv; \
         if the change is intentional, regenerate the fixture with \
         `kanboost synth --profile synth-small --out <d1> && kanboost compare \
         --config <d1>/config.snapshot --out <d2>` and commit comparison.csv"
    );
    report_pass(5, "desk-scale end-to-end", started, 300.0);
}

// ---------------------------------------------------------------------
// 6. Metric identities.
// ---------------------------------------------------------------------
#[test]
fn criterion_6_metric_identities() {
    let started = Instant::now();
    let mut rng = SeededRng::new(606);
    for _ in 0..100 {
        let c = 2 + rng.below(10);
        let n = 10 + rng.below(300);
        let labels: Vec<u32> = (0..n).map(|_| rng.below(c) as u32).collect();
        let preds: Vec<u32> = (0..n).map(|_| rng.below(c) as u32).collect();
        let report = EvalReport::evaluate(&preds, &labels, c).unwrap();
        assert!(
            (report.weighted.recall - report.accuracy).abs() < 1e-12,
            "weighted recall {} vs accuracy {}",
            report.weighted.recall,
            report.accuracy
        );
    }

    // Round-trip: metrics recomputed from the exported confusion CSV
    // match the exported JSON to 1e-9.
    let labels: Vec<u32> = (0..500).map(|_| rng.below(7) as u32).collect();
    let preds: Vec<u32> = labels
        .iter()
        .map(|&l| {
            if rng.below(10) == 0 {
                rng.below(7) as u32
            } else {
                l
            }
        })
        .collect();
    let report = EvalReport::evaluate(&preds, &labels, 7).unwrap();
    let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    let (names, matrix) = EvalReport::parse_confusion_csv(&report.confusion_csv()).unwrap();
    let recomputed = EvalReport::from_confusion(matrix, names);

    let close = |path: &[&str], value: f64| {
        let mut v = &json;
        for p in path {
            v = &v[p];
        }
        let from_json = v.as_f64().unwrap();
        assert!(
            (from_json - value).abs() < 1e-9,
            "{path:?}: json {from_json} vs recomputed {value}"
        );
    };
    close(&["accuracy"], recomputed.accuracy);
    for (mode, avg) in [
        ("micro", recomputed.micro),
        ("macro", recomputed.macro_avg),
        ("weighted", recomputed.weighted),
    ] {
        close(&[mode, "precision"], avg.precision);
        close(&[mode, "recall"], avg.recall);
        close(&[mode, "f1"], avg.f1);
    }
    report_pass(6, "metric identities", started, 10.0);
}

// ---------------------------------------------------------------------
// 7. Command determinism: byte-identical artifacts across reruns.
// ---------------------------------------------------------------------
fn run_cli(args: &[&str]) {
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_kanboost"))
        .args(args)
        .stdout(std::process::Stdio::null())
        .status()
        .expect("binary runs");
    assert!(status.success(), "kanboost {args:?} failed");
}

fn file_bytes(path: &std::path::Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

#[test]
fn criterion_7_command_determinism() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("tiny.conf");
    std::fs::write(
        &cfg_path,
        "[synth]\nclasses = 4\nwidth = 16\nbenign_total = 160\nper_attack = 40\nseed = 5\n\
         [train]\nepochs = 4\nbatch_size = 64\nlearning_rate = 0.01\nseed = 3\n\
         [gbt]\nrounds = 6\nmax_depth = 3\n",
    )
    .unwrap();
    let cfg = cfg_path.to_str().unwrap();

    let prep = |out: &std::path::Path| {
        run_cli(&[
            "prepare",
            "--profile",
            "synth-small",
            "--config",
            cfg,
            "--out",
            out.to_str().unwrap(),
        ]);
    };
    let p1 = dir.path().join("p1");
    let p2 = dir.path().join("p2");
    prep(&p1);
    prep(&p2);
    assert_eq!(
        file_bytes(&p1.join("manifest.txt")),
        file_bytes(&p2.join("manifest.txt")),
        "prepare manifests differ across reruns"
    );
    assert_eq!(
        file_bytes(&p1.join("dataset.csv")),
        file_bytes(&p2.join("dataset.csv")),
        "prepared datasets differ across reruns"
    );

    let snapshot = p1.join("config.snapshot");
    let train = |out: &std::path::Path| {
        run_cli(&[
            "train",
            "--config",
            snapshot.to_str().unwrap(),
            "--model",
            "kan",
            "--out",
            out.to_str().unwrap(),
        ]);
    };
    let t1 = dir.path().join("t1");
    let t2 = dir.path().join("t2");
    train(&t1);
    train(&t2);
    assert_eq!(
        file_bytes(&t1.join("loss.csv")),
        file_bytes(&t2.join("loss.csv")),
        "loss traces differ across reruns"
    );
    assert_eq!(
        file_bytes(&t1.join("model_kan.bin")),
        file_bytes(&t2.join("model_kan.bin")),
        "serialized models differ across reruns"
    );

    let compare = |out: &std::path::Path| {
        run_cli(&[
            "compare",
            "--config",
            snapshot.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
    };
    let c1 = dir.path().join("c1");
    let c2 = dir.path().join("c2");
    compare(&c1);
    compare(&c2);
    for file in [
        "comparison.csv",
        "loss_mlp.csv",
        "loss_kan.csv",
        "loss_hybrid.csv",
        "loss_hybrid_gbt.csv",
    ] {
        assert_eq!(
            file_bytes(&c1.join(file)),
            file_bytes(&c2.join(file)),
            "{file} differs across reruns"
        );
    }
    report_pass(7, "command determinism", started, 120.0);
}

// ---------------------------------------------------------------------
// 8. Scheduler and optimizer fixed points.
// ---------------------------------------------------------------------
#[test]
fn criterion_8_scheduler_and_optimizer() {
    let started = Instant::now();
    assert_eq!(step_lr(10, 0.001, 10, 0.5), 0.0005);
    assert_eq!(step_lr(0, 0.001, 10, 0.5), 0.001);
    assert_eq!(step_lr(25, 0.001, 10, 0.5), 0.00025);

    let mut params = vec![0.123456789, -9.87, 0.0, 1e300];
    let before = params.clone();
    let mut state = AdamState::new(4);
    adam_step(
        &mut params,
        &[0.0; 4],
        &mut state,
        0.001,
        &AdamParams::default(),
    );
    assert_eq!(params, before, "zero-gradient Adam step must be a no-op");
    report_pass(8, "scheduler and optimizer", started, 5.0);
}

// ---------------------------------------------------------------------
// 9. OPTIONAL full-scale reproduction over the public N-BaIoT captures.
// ---------------------------------------------------------------------

/// Requires the public N-BaIoT device captures on disk:
///
/// ```text
/// NBAIOT_DATA_DIR=/path/to/nbaiot \
///   cargo test -p kanboost --release --test acceptance -- --ignored --nocapture
/// ```
///
/// with one directory per device containing `benign_traffic.csv`,
/// `gafgyt_attacks/*.csv`, and `mirai_attacks/*.csv`. Trains at full
/// scale (single-threaded; takes hours) and checks the headline numbers:
/// 430,000 + 70,000 prepared rows, hybrid accuracy within 1.0 point of
/// 99.69% and weighted F1 within 1.5 points of 98.04%.
#[test]
#[ignore = "needs the public N-BaIoT dataset; see the doc comment"]
fn criterion_9_full_scale_reproduction() {
    let started = Instant::now();
    let data_dir = std::env::var("NBAIOT_DATA_DIR")
        .expect("set NBAIOT_DATA_DIR to the N-BaIoT capture directory");

    let dir = tempfile::tempdir().unwrap();
    let prep_out = dir.path().join("prep");
    let override_path = dir.path().join("data.conf");
    std::fs::write(&override_path, format!("[plan]\ndata_dir = {data_dir}\n")).unwrap();
    let prep_cfg = RunConfig::resolve(Profile::Paper, Some(&override_path), None).unwrap();
    cli::cmd_prepare(prep_cfg, &prep_out).unwrap();

    let manifest = std::fs::read_to_string(prep_out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("rows = 500000"), "manifest:\n{manifest}");
    assert!(
        manifest.contains("class_count_00_benign = 430000"),
        "manifest:\n{manifest}"
    );
    let malicious: usize = (1..11)
        .map(|c| {
            manifest
                .lines()
                .find(|l| l.starts_with(&format!("class_count_{c:02}_")))
                .and_then(|l| l.rsplit(" = ").next())
                .and_then(|v| v.parse::<usize>().ok())
                .unwrap_or(0)
        })
        .sum();
    assert_eq!(malicious, 70_000);
    println!(
        "acceptance: full-scale prepare done in {:.0}s",
        started.elapsed().as_secs_f64()
    );

    let dataset = kanboost::data::dataset_from_csv(&prep_out.join("dataset.csv")).unwrap();
    let cfg = RunConfig::resolve(Profile::Paper, None, None).unwrap();
    let comparison = compare_models(
        &dataset,
        &CompareConfig {
            test_fraction: cfg.split.test_fraction,
            split_seed: cfg.split.seed,
            train: cfg.train.to_train_config(),
            gbt: cfg.gbt,
            arch: cfg.arch,
        },
    )
    .unwrap();
    let hybrid = &comparison.outcome("hybrid").unwrap().report;
    println!(
        "acceptance: full-scale hybrid accuracy {:.4}, weighted F1 {:.4}, wall {:.0}s",
        hybrid.accuracy,
        hybrid.weighted.f1,
        started.elapsed().as_secs_f64()
    );
    assert!(
        (hybrid.accuracy - 0.9969).abs() <= 0.010,
        "hybrid accuracy {} not within 1.0 point of 99.69%",
        hybrid.accuracy
    );
    assert!(
        (hybrid.weighted.f1 - 0.9804).abs() <= 0.015,
        "hybrid weighted F1 {} not within 1.5 points of 98.04%",
        hybrid.weighted.f1
    );
}
