//! Acceptance suite. Runs every criterion (or those named on the command
//! line, e.g. `cargo test --test acceptance -- 1 6`) and prints one
//! PASS/FAIL line per criterion. Exits nonzero if any criterion fails.
//!
//! MNIST is read from `FEDKAN_MNIST_DIR`, defaulting to `data/mnist` at the
//! workspace root.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fedkan::data::{load_mnist, parse_idx_images, parse_idx_labels, partition_dirichlet, partition_iid, Mnist};
use fedkan::experiment::{
    read_trace_csv, run_experiment, run_experiment_with_data, run_trial, Datasets, ExperimentConfig, Mode,
};
use fedkan::fed::{aggregate, Aggregation, ClientUpdate};
use fedkan::gradcheck::run_gradcheck_wavelets;
use fedkan::wavelet::Activation;
use fedkan::MotherWavelet;

/// Local mini-batch size for the federated desk-scale run.
const FED_BATCH: usize = 16;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn mnist_dir() -> PathBuf {
    std::env::var_os("FEDKAN_MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"))
}

fn mnist() -> Result<Mnist, String> {
    load_mnist(&mnist_dir()).map_err(|e| format!("MNIST unavailable ({e}); run `fedkan fetch-mnist`"))
}

fn mnist_cfg() -> ExperimentConfig {
    ExperimentConfig {
        mnist_dir: mnist_dir(),
        record_wall_time: false,
        save_checkpoint: false,
        eval_train: false,
        trials: 1,
        ..Default::default()
    }
}

fn datasets(cfg: &ExperimentConfig, m: &Mnist) -> Datasets {
    let train = m.train.seeded_subset(cfg.train_subset, cfg.seed).unwrap();
    let test = match cfg.test_subset {
        Some(n) => m.test.seeded_subset(n, cfg.seed).unwrap(),
        None => m.test.clone(),
    };
    Datasets { train, test }
}

fn criterion_1() -> Outcome {
    let report = run_gradcheck_wavelets(&MotherWavelet::all_defaults(), 1e-4, 0).unwrap();
    let worst: Vec<String> = report
        .checks
        .iter()
        .map(|c| format!("{} {:.1e}", c.wavelet, c.model_error))
        .collect();
    let ok = report.checks.len() == 4 && report.checks.iter().all(|c| c.model_error <= 1e-4);
    outcome(ok, format!("max rel err: {}", worst.join(", ")))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for set in 0..50 {
        let n = rng.random_range(3..=10);
        let updates: Vec<ClientUpdate> = (0..n)
            .map(|id| ClientUpdate {
                client_id: id,
                num_samples: rng.random_range(1..500),
                params: (0..1000).map(|_| rng.random_range(-3.0..3.0)).collect(),
                local_train_loss: None,
            })
            .collect();
        let got = aggregate(&updates, Aggregation::Uniform).unwrap();
        for (k, g) in got.iter().enumerate() {
            // plain sum then divide, in reverse order
            let mean = updates.iter().rev().map(|u| u.params[k]).sum::<f64>() / n as f64;
            worst = worst.max((g - mean).abs());
        }
        let mut shuffled = updates.clone();
        shuffled.shuffle(&mut rng);
        if aggregate(&shuffled, Aggregation::Uniform).unwrap() != got {
            failures.push(format!("set {set}: permutation changed the result"));
        }
        let copies: Vec<ClientUpdate> = (0..n)
            .map(|id| ClientUpdate {
                client_id: id,
                ..updates[0].clone()
            })
            .collect();
        if aggregate(&copies, Aggregation::Uniform).unwrap() != updates[0].params {
            failures.push(format!("set {set}: identical updates not reproduced"));
        }
    }
    if worst > 1e-12 {
        failures.push(format!("max deviation {worst:.1e} > 1e-12"));
    }
    let ok = failures.is_empty();
    outcome(ok, if ok { format!("50 sets, max deviation {worst:.1e}") } else { failures.join("; ") })
}

fn criterion_3() -> Outcome {
    let m = match mnist() {
        Ok(m) => m,
        Err(e) => return outcome(false, e),
    };
    let central = ExperimentConfig {
        train_subset: 2000,
        test_subset: Some(500),
        epochs: 6,
        seed: 3,
        ..mnist_cfg()
    };
    let federated = ExperimentConfig {
        mode: Mode::Federated,
        clients: 1,
        client_fraction: 1.0,
        rounds: 3,
        local_epochs: 2,
        persist_optimizer: true,
        ..central.clone()
    };
    let data = datasets(&central, &m);
    let a = run_trial(&central, &data, 0).unwrap().model.flatten();
    let b = run_trial(&federated, &data, 0).unwrap().model.flatten();
    let diff = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    outcome(diff <= 1e-12, format!("max abs parameter difference {diff:.1e} over {} parameters", a.len()))
}

fn criterion_4() -> Outcome {
    let m = match mnist() {
        Ok(m) => m,
        Err(e) => return outcome(false, e),
    };
    let cfg = ExperimentConfig {
        train_subset: 10_000,
        epochs: 5,
        batch_size: 64,
        trials: 3,
        ..mnist_cfg()
    };
    let out = run_experiment_with_data(&cfg, &datasets(&cfg, &m)).unwrap();
    let finals: Vec<f64> = out
        .trials
        .iter()
        .map(|t| t.trace.last().unwrap().test_accuracy)
        .collect();
    let mean = out.averaged.last().unwrap().test_accuracy;
    outcome(mean >= 0.90, format!("mean test accuracy {mean:.4} (trials {finals:.4?}) vs 0.90"))
}

fn criterion_5() -> Outcome {
    let m = match mnist() {
        Ok(m) => m,
        Err(e) => return outcome(false, e),
    };
    let cfg = ExperimentConfig {
        mode: Mode::Federated,
        train_subset: 10_000,
        clients: 10,
        rounds: 5,
        local_epochs: 1,
        client_fraction: 1.0,
        batch_size: FED_BATCH,
        trials: 3,
        ..mnist_cfg()
    };
    let out = run_experiment_with_data(&cfg, &datasets(&cfg, &m)).unwrap();
    let finals: Vec<f64> = out
        .trials
        .iter()
        .map(|t| t.trace.last().unwrap().test_accuracy)
        .collect();
    let accs = out.averaged.test_accuracies();
    let last = *accs.last().unwrap();
    let steady = accs[accs.len() - 3..].windows(2).all(|w| w[1] >= w[0] - 0.01);
    outcome(
        last >= 0.85 && steady,
        format!(
            "mean round accuracies {accs:.4?}; final {last:.4} (trials {finals:.4?}) vs 0.85; last 3 within band: {steady}"
        ),
    )
}

fn criterion_6() -> Outcome {
    let mh = MotherWavelet::mexican_hat(1.0).unwrap();
    let morlet = MotherWavelet::morlet(5.0).unwrap();
    let dog = MotherWavelet::dog();
    let shannon = MotherWavelet::shannon(3.0).unwrap();
    let checks = [
        ("mexican_hat(1) = 0", mh.eval(1.0) == 0.0),
        ("mexican_hat(-1) = 0", mh.eval(-1.0) == 0.0),
        ("mexican_hat(0)", (mh.eval(0.0) + 0.867325).abs() <= 1e-5),
        ("morlet(0) = 1", morlet.eval(0.0) == 1.0),
        ("dog(0) = 0", dog.eval(0.0) == 0.0),
        ("dog(1)", (dog.eval(1.0) - 0.606531).abs() <= 1e-5),
        (
            "shannon continuous at 0",
            [1e-4, 1e-8, 1e-12].iter().all(|&h| {
                (shannon.eval(h) - shannon.eval(0.0)).abs() < 1e-6
                    && (shannon.eval(-h) - shannon.eval(0.0)).abs() < 1e-6
            }) && shannon.eval(0.0) == 1.0,
        ),
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    outcome(
        failed.is_empty(),
        format!("psi_mh(0) = {:.6}, dog(1) = {:.6}; failed: {failed:?}", mh.eval(0.0), dog.eval(1.0)),
    )
}

fn criterion_7() -> Outcome {
    let dir = mnist_dir();
    let read = |name: &str| std::fs::read(dir.join(name));
    let (Ok(images), Ok(labels)) = (read("t10k-images-idx3-ubyte"), read("t10k-labels-idx1-ubyte")) else {
        return outcome(false, format!("MNIST test files missing under {}", dir.display()));
    };
    let mut failures = Vec::new();
    match parse_idx_images(&images) {
        Ok(img) if img.count == 10_000 && (img.rows, img.cols) == (28, 28) => {}
        other => failures.push(format!("test images parsed as {:?}", other.map(|i| i.count))),
    }
    match parse_idx_labels(&labels) {
        Ok(l) if l.len() == 10_000 => {}
        other => failures.push(format!("test labels parsed as {:?}", other.map(|l| l.len()))),
    }
    if parse_idx_images(&labels).is_ok() || parse_idx_labels(&images).is_ok() {
        failures.push("swapped magic accepted".into());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..200 {
        let n = rng.random_range(1..3000);
        let clients = rng.random_range(1..=n.min(50));
        let classes = rng.random_range(1..=10);
        let alpha = [0.05, 0.3, 1.0, 10.0, 1e5][rng.random_range(0..5)];
        let seed = rng.random();
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();
        let plans = [
            partition_iid(n, clients, seed).unwrap(),
            partition_dirichlet(&labels, clients, alpha, seed).unwrap(),
        ];
        for plan in &plans {
            let ok = plan.num_clients() == clients
                && plan.shards().iter().all(|s| !s.is_empty())
                && plan.covered() == (0..n).collect::<Vec<_>>();
            if !ok {
                failures.push(format!("case {case} (n={n}, clients={clients}, alpha={alpha})"));
            }
        }
    }
    let ok = failures.is_empty();
    outcome(
        ok,
        if ok { "10000 test items, swapped magics rejected, 200 partition cases".into() } else { failures.join("; ") },
    )
}

fn criterion_8() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let central = ExperimentConfig {
        train_subset: 2000,
        test_subset: Some(1000),
        epochs: 2,
        trials: 2,
        eval_train: true,
        record_wall_time: true,
        seed: 8,
        ..mnist_cfg()
    };
    let federated = ExperimentConfig {
        mode: Mode::Federated,
        clients: 4,
        rounds: 2,
        client_fraction: 0.5,
        ..central.clone()
    };
    let mut compared = 0;
    for (name, cfg) in [("central", central), ("federated", federated)] {
        let mut dirs = Vec::new();
        for run in 0..2 {
            let cfg = ExperimentConfig {
                output_dir: tmp.path().join(format!("{name}_{run}")),
                ..cfg.clone()
            };
            if let Err(e) = run_experiment(&cfg) {
                return outcome(false, format!("{name} run failed: {e}"));
            }
            dirs.push(cfg.output_dir);
        }
        for file in ["trial_0.csv", "trial_1.csv", "averaged.csv"] {
            let a = read_trace_csv(&dirs[0].join(file)).unwrap();
            let b = read_trace_csv(&dirs[1].join(file)).unwrap();
            let strip = |t: fedkan::experiment::ExperimentTrace| {
                t.rows
                    .into_iter()
                    .map(|r| {
                        let bits = |v: Option<f64>| v.map(f64::to_bits);
                        (r.phase, r.step, bits(r.train_accuracy), r.test_accuracy.to_bits(), bits(r.train_loss), r.test_loss.to_bits())
                    })
                    .collect::<Vec<_>>()
            };
            let (a, b) = (strip(a), strip(b));
            if a != b || a.is_empty() {
                return outcome(false, format!("{name}/{file} differs between runs"));
            }
            compared += a.len();
        }
    }
    outcome(true, format!("{compared} rows identical in every numeric cell except wall_seconds"))
}

type Criterion = (u32, &'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 8] = [
        (1, "gradient oracle", criterion_1, Duration::from_secs(10)),
        (2, "aggregation oracle", criterion_2, Duration::from_secs(60)),
        (3, "one-client reduction", criterion_3, Duration::from_secs(60)),
        (4, "centralized MNIST", criterion_4, Duration::from_secs(600)),
        (5, "federated IID MNIST", criterion_5, Duration::from_secs(900)),
        (6, "wavelet point values", criterion_6, Duration::from_secs(1)),
        (7, "data integrity", criterion_7, Duration::from_secs(30)),
        (8, "determinism", criterion_8, Duration::from_secs(1500)),
    ];
    let selected: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut all_passed = true;
    for (id, name, run, budget) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let passed = result.passed && in_time;
        all_passed &= passed;
        println!(
            "criterion {id} ({name}): {} [{:.1}s of {}s] {}{}",
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs(),
            result.detail,
            if in_time { "" } else { " (over time budget)" },
        );
    }
    if !all_passed {
        std::process::exit(1);
    }
}
