//! Acceptance suite. Prints one PASS/FAIL line per criterion, then fails if
//! any criterion failed. Criteria run sequentially in one test so the timing
//! measurements are not disturbed by other tests.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use common::{dense_poly, dense_row_normalized, nudge_mlp, random_graph, rel_error};
use labeldeconv::graph::{row_normalize, CsrGraph, IsolatedPolicy};
use labeldeconv::labels::{
    deconv_init, inverse_labels, normalize_target, precompute_hop_labels, DeconvWeights, LabelMatrix, TaskKind,
};
use labeldeconv::nn::{mlp_forward, Activation, AdamConfig, LossKind, MlpParams};
use labeldeconv::oracle::{
    exact_inverse_labels, inverse_via_cayley, polynomial_inverse_coeffs, sym_normalized, to_dense, universality_fit,
    DenseMatrix, DenseVector,
};
use labeldeconv::pipeline::{
    joint_objective, motivating_config, ne_batch_loss, reproduce_motivating_example, run_experiment, ArchConfig,
    JointParams, LrSchedule, Method, Module, NeParams, NeTarget, NeTrainer, TrainConfig,
};
use labeldeconv::spectral::{FilterCoeffs, FilterKind, SpectralGnnParams};
use labeldeconv::synth::{build_counterexample_family, generate_assumption1, SynthConfig};
use labeldeconv::{Error, Matrix};
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Tolerances and budgets, pinned.
const C1_BETA_TOL: f64 = 1e-6;
const C1_GAMMA_TOL: f64 = 1e-3;
const C1_BUDGET: Duration = Duration::from_secs(5);
const C2_TOL: f64 = 1e-10;
const C2_BUDGET: Duration = Duration::from_secs(10);
const C3_CAYLEY_TOL: f64 = 1e-8;
const C3_POLY_TOL: f64 = 1e-8;
const C3_BUDGET: Duration = Duration::from_secs(10);
const C4_RECOVERY_TOL: f64 = 1e-3;
const C4_GAP_FACTOR: f64 = 10.0;
const C4_GLEM_MAX_ACC: f64 = 0.60;
const C4_LD_MIN_ACC: f64 = 0.99;
const C4_BUDGET: Duration = Duration::from_secs(120);
const C5_TOL: f64 = 1e-6;
const C5_BUDGET: Duration = Duration::from_secs(5);
const C6_TOL: f64 = 1e-4;
const C6_CONFIGS: usize = 24;
const KINK_MARGIN: f64 = 1e-4;
const C6_BUDGET: Duration = Duration::from_secs(30);
const C7_EPOCHS: usize = 10;
const C8_CASES: u32 = 1000;
const C8_TOL: f64 = 1e-12;
const C9_MAX_CHANGE: f64 = 0.20;
const C10_TOL: f64 = 1e-10;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn within(t: Instant, budget: Duration) -> (bool, String) {
    let e = t.elapsed();
    (e < budget, format!("{:.2}s of {:.0}s", e.as_secs_f64(), budget.as_secs_f64()))
}

fn motivating_reproduction() -> Verdict {
    let t = Instant::now();
    let r = reproduce_motivating_example(&motivating_config()).unwrap();
    let expected = Matrix::from_rows(&[[0.0, 1.0, 0.0], [0.5, 0.0, 0.5], [0.0, 1.0, 0.0]]);
    let beta_err = r.beta_glem.max_abs_diff(&expected);
    let gamma = r.ld.report.learned.gamma.clone().unwrap();
    let gamma_err = (gamma[0] - 0.0).abs().max((gamma[1] - 1.0).abs());
    let cli_ok = labeldeconv_cli::run(["labeldeconv", "motivating-example"]).is_ok();
    let (fast, time) = within(t, C1_BUDGET);
    Verdict::new(
        r.ld_accuracy() == 1.0 && r.glem_accuracy() == 0.0 && beta_err < C1_BETA_TOL && gamma_err < C1_GAMMA_TOL && cli_ok && fast,
        format!(
            "LD {:.0}%, GLEM {:.0}%, |β_GLEM − β*| = {beta_err:.1e}, |γ − (0,1)| = {gamma_err:.1e}, cli exit ok = {cli_ok}, {time}",
            100.0 * r.ld_accuracy(),
            100.0 * r.glem_accuracy()
        ),
    )
}

fn hop_label_correctness() -> Verdict {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let n = rng.random_range(1..=64);
        let n_hops = rng.random_range(0..=6);
        let p = rng.random_range(0.0..0.2);
        let (g, edges) = random_graph(n, p, case % 2 == 0, &mut rng);
        let c = rng.random_range(1..=5);
        let y = Matrix::from_fn(n, c, |_, _| rng.random_range(-1.0..1.0));
        let stack =
            precompute_hop_labels(&row_normalize(&g, IsolatedPolicy::SelfLoop), &LabelMatrix::new(y.clone(), TaskKind::Regression).unwrap(), n_hops)
                .unwrap();
        let a = dense_row_normalized(n, &edges);
        let mut k = to_dense(&y);
        for i in 0..=n_hops {
            worst = worst.max((to_dense(stack.hop(i)) - &k).amax());
            k = &a * k;
        }
    }
    let (fast, time) = within(t, C2_BUDGET);
    Verdict::new(worst < C2_TOL && fast, format!("max |K_i − ÂⁱY| = {worst:.1e} over 50 graphs, {time}"))
}

fn random_filter(rng: &mut impl Rng) -> FilterCoeffs {
    let degree = rng.random_range(1..=3);
    let mut c = vec![1.0];
    c.extend((0..degree).map(|_| rng.random_range(-0.8..0.8) / degree as f64));
    FilterCoeffs::new(c, false).unwrap()
}

fn inverse_identities() -> Verdict {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut cayley_err: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.random_range(2..=16);
        let (_, edges) = random_graph(n, 0.3, false, &mut rng);
        let phi = dense_poly(&random_filter(&mut rng).coeffs, &dense_row_normalized(n, &edges));
        let direct = phi.clone().try_inverse().unwrap();
        cayley_err = cayley_err.max((inverse_via_cayley(&phi).unwrap() - direct).amax());
    }
    let mut poly_err: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.random_range(2..=12);
        let (_, edges) = random_graph(n, 0.3, rng.random_bool(0.5), &mut rng);
        let a = dense_row_normalized(n, &edges);
        let filter = random_filter(&mut rng);
        let inv = dense_poly(&filter.coeffs, &a).try_inverse().unwrap();
        let gamma = polynomial_inverse_coeffs(&filter, &a).unwrap();
        poly_err = poly_err.max((dense_poly(&gamma, &a) - inv).norm());
    }
    let (fast, time) = within(t, C3_BUDGET);
    Verdict::new(
        cayley_err < C3_CAYLEY_TOL && poly_err < C3_POLY_TOL && fast,
        format!("Cayley max error {cayley_err:.1e} (n ≤ 16), polynomial inverse residual {poly_err:.1e} (n ≤ 12), {time}"),
    )
}

fn recovery_config() -> TrainConfig {
    TrainConfig {
        n_hops: 2,
        ne_epochs: 3000,
        gnn_epochs: 5000,
        batch_size: 50,
        loss: Some(LossKind::MeanSquared),
        ne_optim: AdamConfig {
            lr: 0.01,
            beta2: 0.99,
            ..AdamConfig::default()
        },
        gnn_optim: AdamConfig {
            lr: 0.01,
            ..AdamConfig::default()
        },
        schedule: LrSchedule::Cosine,
        filter: FilterKind::LearnablePoly(2),
        pseudo_labels: false,
        arch: ArchConfig {
            encoder: Module::Mlp { hidden: vec![128] },
            feature_dim: Some(16),
            ne_head: Module::linear(),
            gnn_head: Module::linear(),
        },
        ..TrainConfig::default()
    }
}

fn train_accuracy(o: &labeldeconv::pipeline::ExperimentOutcome) -> f64 {
    o.report.metrics.train.as_ref().unwrap()["accuracy"]
}

fn recovery() -> Verdict {
    let t = Instant::now();
    let synth = SynthConfig {
        num_nodes: 200,
        attr_dim: 8,
        filter_degree: 2,
        task: TaskKind::Regression,
        train_frac: 1.0,
        val_frac: 0.0,
        ..SynthConfig::default()
    };
    let data = generate_assumption1(&synth).unwrap();
    let ld = run_experiment(&data.dataset, Method::Ld, &recovery_config()).unwrap();
    let recovered = ld.report.objective.gnn;

    let pairs = build_counterexample_family(50, 3, 0).unwrap();
    let cfg = motivating_config();
    let ld_pairs = run_experiment(&pairs.dataset, Method::Ld, &cfg).unwrap();
    let glem_pairs = run_experiment(&pairs.dataset, Method::Glem, &cfg).unwrap();
    let (lo, go) = (ld_pairs.report.objective.gnn, glem_pairs.report.objective.gnn);
    let (la, ga) = (train_accuracy(&ld_pairs), train_accuracy(&glem_pairs));
    let (fast, time) = within(t, C4_BUDGET);
    Verdict::new(
        recovered < C4_RECOVERY_TOL && go >= C4_GAP_FACTOR * lo && ga <= C4_GLEM_MAX_ACC && la >= C4_LD_MIN_ACC && fast,
        format!(
            "generative data: LD composed objective {recovered:.1e}; pairs: GLEM {go:.2e} vs LD {lo:.2e}, accuracy GLEM {:.0}% vs LD {:.0}%, {time}",
            100.0 * ga,
            100.0 * la
        ),
    )
}

fn universality() -> Verdict {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let (mut fitted, mut rejected) = (0, 0);
    while fitted < 10 {
        let n = rng.random_range(3..=12);
        let (g, _) = random_graph(n, 0.35, false, &mut rng);
        let d = rng.random_range(1..=3);
        let f = DenseMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0));
        let y = DenseVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        match universality_fit(&sym_normalized(&g), &f, &y, &mut rng) {
            Ok(fit) => {
                worst = worst.max(fit.residual);
                fitted += 1;
            }
            Err(Error::MultipleEigenvalues { .. } | Error::MissingFrequency { .. }) => rejected += 1,
            Err(e) => panic!("{e}"),
        }
    }
    let two_edges = CsrGraph::from_edges(&[(0, 1), (1, 0), (2, 3), (3, 2)], 4).unwrap();
    let f = DenseMatrix::from_fn(4, 2, |i, j| (i * 3 + j) as f64 * 0.1 + 0.3);
    let rejects = matches!(
        universality_fit(&sym_normalized(&two_edges), &f, &DenseVector::from_element(4, 1.0), &mut rng),
        Err(Error::MultipleEigenvalues { .. })
    );
    let (fast, time) = within(t, C5_BUDGET);
    Verdict::new(
        worst < C5_TOL && rejects && fast,
        format!("max residual {worst:.1e} over 10 graphs ({rejected} random graphs failed preconditions), two disjoint edges rejected = {rejects}, {time}"),
    )
}

fn central_diff(mut f: impl FnMut(f64) -> f64) -> f64 {
    let h = 1e-5;
    (f(h) - f(-h)) / (2.0 * h)
}

fn fd_mlp(p: &MlpParams, mut loss: impl FnMut(&MlpParams) -> f64) -> Vec<f64> {
    (0..p.num_params())
        .map(|k| {
            central_diff(|h| {
                let mut q = p.clone();
                nudge_mlp(&mut q, k, h);
                loss(&q)
            })
        })
        .collect()
}

/// A ReLU encoder whose hidden pre-activations on `attrs` all stay well
/// clear of the kink, so central differences see a smooth function.
fn kink_free_encoder(attrs: &Matrix, out: usize, rng: &mut impl Rng) -> MlpParams {
    loop {
        let p = MlpParams::init(&[attrs.cols(), 5, out], Activation::Relu, rng);
        let mut first = MlpParams::from_layers(vec![p.layers[0].clone()]).unwrap();
        first.layers[0].activation = Activation::Identity;
        let (pre, _) = mlp_forward(&first, attrs).unwrap();
        if pre.as_slice().iter().all(|v| v.abs() > KINK_MARGIN) {
            return p;
        }
    }
}

/// Worst relative error per block: encoder, head, filter, γ′, joint.
fn gradient_integrity() -> Verdict {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = [0.0f64; 5];
    for case in 0..C6_CONFIGS {
        let n = rng.random_range(4..=10);
        let (g, _) = random_graph(n, 0.3, case % 3 == 0, &mut rng);
        let adj = row_normalize(&g, IsolatedPolicy::SelfLoop);
        let (dx, df, c) = (rng.random_range(1..=4), rng.random_range(2..=4), rng.random_range(2..=4));
        let attrs = Matrix::from_fn(n, dx, |_, _| rng.random_range(-1.0..1.0));
        let encoder = kink_free_encoder(&attrs, df, &mut rng);
        let head = MlpParams::init(&[df, c], Activation::Relu, &mut rng);

        // Encoder phase against deconvolved targets.
        let task = if case % 2 == 0 { TaskKind::MultiClass } else { TaskKind::Regression };
        let y = match task {
            TaskKind::MultiClass => {
                let cls: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
                LabelMatrix::one_hot(&cls, c).unwrap()
            }
            _ => LabelMatrix::new(Matrix::from_fn(n, c, |_, _| rng.random_range(-1.0..1.0)), task).unwrap(),
        };
        let n_hops = rng.random_range(1..=3);
        let stack = precompute_hop_labels(&adj, &y, n_hops).unwrap();
        let w = DeconvWeights::from_logits((0..=n_hops).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let alpha = rng.random_range(0.1..=1.0);
        let target = NeTarget::Deconvolved { stack: &stack, alpha };
        let loss = if task == TaskKind::MultiClass { LossKind::SoftCrossEntropy } else { LossKind::MeanSquared };
        let mut batch: Vec<usize> = (0..n).collect();
        batch.shuffle(&mut rng);
        batch.truncate(rng.random_range(1..=n));
        let params = NeParams {
            encoder: encoder.clone(),
            head: head.clone(),
            deconv: Some(w.clone()),
        };
        let eval = |p: &NeParams| ne_batch_loss(&attrs, target, p, task, loss, &batch).unwrap().0;
        let (_, grads) = ne_batch_loss(&attrs, target, &params, task, loss, &batch).unwrap();
        let fd_enc = fd_mlp(&params.encoder, |q| eval(&NeParams { encoder: q.clone(), ..params.clone() }));
        let fd_head = fd_mlp(&params.head, |q| eval(&NeParams { head: q.clone(), ..params.clone() }));
        let fd_gamma: Vec<f64> = (0..w.raw.len())
            .map(|k| {
                central_diff(|h| {
                    let mut q = params.clone();
                    q.deconv.as_mut().unwrap().raw[k] += h;
                    eval(&q)
                })
            })
            .collect();
        worst[0] = worst[0].max(rel_error(&grads.encoder.flat(), &fd_enc));
        worst[1] = worst[1].max(rel_error(&grads.head.flat(), &fd_head));
        worst[3] = worst[3].max(rel_error(grads.deconv.as_ref().unwrap(), &fd_gamma));

        // End-to-end GNN path with a learnable filter.
        let jloss = [LossKind::SoftCrossEntropy, LossKind::MeanSquared, LossKind::BinaryCrossEntropy][case % 3];
        let yj = match jloss {
            LossKind::MeanSquared => Matrix::from_fn(n, c, |_, _| rng.random_range(-1.0..1.0)),
            LossKind::BinaryCrossEntropy => Matrix::from_fn(n, c, |_, _| if rng.random_bool(0.5) { 1.0 } else { 0.0 }),
            LossKind::SoftCrossEntropy => y.values.clone(),
        };
        let mask: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.7)).chain([0]).collect();
        let coeffs: Vec<f64> = (0..=rng.random_range(1..=3)).map(|_| rng.random_range(-1.0..1.0)).collect();
        let jp = JointParams {
            encoder,
            gnn: SpectralGnnParams {
                filter: FilterCoeffs::new(coeffs, true).unwrap(),
                head,
            },
        };
        let jeval = |p: &JointParams| joint_objective(&attrs, &adj, p, &yj, &mask, jloss).unwrap().0;
        let (_, jg) = joint_objective(&attrs, &adj, &jp, &yj, &mask, jloss).unwrap();
        let fd_jenc = fd_mlp(&jp.encoder, |q| jeval(&JointParams { encoder: q.clone(), ..jp.clone() }));
        let fd_jhead = fd_mlp(&jp.gnn.head, |q| {
            let mut p = jp.clone();
            p.gnn.head = q.clone();
            jeval(&p)
        });
        let fd_filter: Vec<f64> = (0..jp.gnn.filter.coeffs.len())
            .map(|k| {
                central_diff(|h| {
                    let mut p = jp.clone();
                    p.gnn.filter.coeffs[k] += h;
                    jeval(&p)
                })
            })
            .collect();
        worst[2] = worst[2].max(rel_error(&jg.filter, &fd_filter));
        let mut analytic = jg.encoder.flat();
        analytic.extend(jg.head.flat());
        let mut numeric = fd_jenc;
        numeric.extend(fd_jhead);
        worst[4] = worst[4].max(rel_error(&analytic, &numeric));
    }
    let (fast, time) = within(t, C6_BUDGET);
    Verdict::new(
        worst.iter().all(|&e| e < C6_TOL) && fast,
        format!(
            "relative error over {C6_CONFIGS} configs: encoder {:.1e}, head {:.1e}, filter {:.1e}, γ′ {:.1e}, joint {:.1e}, {time}",
            worst[0], worst[1], worst[2], worst[3], worst[4]
        ),
    )
}

/// Steps an α = 0 deconvolution trainer and a labels-only trainer on the same
/// batches and compares encoder and head after every step.
fn alpha_zero_degeneracy() -> Verdict {
    let synth = SynthConfig {
        num_nodes: 120,
        seed: 7,
        ..SynthConfig::default()
    };
    let ds = generate_assumption1(&synth).unwrap().dataset;
    let adj = row_normalize(&ds.graph, IsolatedPolicy::SelfLoop);
    let stack = precompute_hop_labels(&adj, &ds.labels, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let encoder = MlpParams::init(&[8, 16, 8], Activation::Relu, &mut rng);
    let head = MlpParams::init(&[8, 4], Activation::Relu, &mut rng);
    let optim = AdamConfig::default();
    let task = TaskKind::MultiClass;
    let loss = LossKind::SoftCrossEntropy;
    let ld_params = NeParams {
        encoder: encoder.clone(),
        head: head.clone(),
        deconv: Some(deconv_init(2)),
    };
    let glem_params = NeParams {
        encoder,
        head,
        deconv: None,
    };
    let target = NeTarget::Deconvolved { stack: &stack, alpha: 0.0 };
    let mut ld = NeTrainer::new(&ds.attrs, target, ld_params, task, loss, optim).unwrap();
    let mut glem = NeTrainer::new(&ds.attrs, NeTarget::Labels(&ds.labels.values), glem_params, task, loss, optim).unwrap();
    let mut order: Vec<usize> = (0..ds.attrs.rows()).collect();
    let mut steps = 0;
    let mut identical = true;
    for _ in 0..C7_EPOCHS {
        order.shuffle(&mut rng);
        for batch in order.chunks(32) {
            let (a, b) = (ld.step(batch).unwrap(), glem.step(batch).unwrap());
            let (p, q) = (ld.params(), glem.params());
            identical &= a.to_bits() == b.to_bits() && p.encoder == q.encoder && p.head == q.head;
            steps += 1;
        }
    }

    // Same check through the full pipeline.
    let cfg = TrainConfig {
        alpha: 0.0,
        ne_epochs: C7_EPOCHS,
        gnn_epochs: 5,
        ..TrainConfig::default()
    };
    let a = run_experiment(&ds, Method::Ld, &cfg).unwrap();
    let b = run_experiment(&ds, Method::Glem, &cfg).unwrap();
    let pipeline_identical = a.encoder == b.encoder
        && a.report.curves.ne_loss.iter().map(|v| v.to_bits()).eq(b.report.curves.ne_loss.iter().map(|v| v.to_bits()))
        && a.predictions == b.predictions;
    Verdict::new(
        identical && pipeline_identical,
        format!("{steps} steps over {C7_EPOCHS} epochs bit-identical = {identical}, pipeline runs bit-identical = {pipeline_identical}"),
    )
}

fn positivity_case(seed: u64, n: usize, c: usize, n_hops: usize, logits: &[f64]) -> Result<(), TestCaseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (g, _) = random_graph(n, rng.random_range(0.0..0.5), rng.random_bool(0.5), &mut rng);
    let cls: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
    let y = LabelMatrix::one_hot(&cls, c).unwrap();
    let stack = precompute_hop_labels(&row_normalize(&g, IsolatedPolicy::SelfLoop), &y, n_hops).unwrap();
    let w = DeconvWeights::from_logits(logits[..=n_hops].to_vec()).unwrap();
    let all: Vec<usize> = (0..n).collect();
    let yinv = inverse_labels(&stack, &all, &w).unwrap();
    prop_assert!(yinv.as_slice().iter().all(|&v| v >= 0.0));
    let t = normalize_target(&yinv, TaskKind::MultiClass).unwrap();
    for row in t.row_iter() {
        prop_assert!(row.iter().all(|&v| v >= 0.0));
        prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= C8_TOL);
    }
    Ok(())
}

fn normalization_invariants() -> Verdict {
    let mut runner = TestRunner::new_with_rng(
        PropConfig {
            cases: C8_CASES,
            failure_persistence: None,
            ..PropConfig::default()
        },
        proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    );
    let strategy = (any::<u64>(), 1usize..30, 1usize..6, 0usize..5, prop::collection::vec(-30.0f64..30.0, 5));
    let result = runner.run(&strategy, |(seed, n, c, n_hops, logits)| positivity_case(seed, n, c, n_hops, &logits));
    Verdict::new(
        result.is_ok(),
        match result {
            Ok(()) => format!("{C8_CASES} random cases: inverse labels ≥ 0, normalized rows sum to 1 within {C8_TOL:e}"),
            Err(e) => format!("counterexample: {e}"),
        },
    )
}

/// Minimum over rounds of the median step time.
fn step_time(num_nodes: usize) -> f64 {
    let synth = SynthConfig {
        num_nodes,
        task: TaskKind::MultiClass,
        train_frac: 1.0,
        val_frac: 0.0,
        seed: 9,
        ..SynthConfig::default()
    };
    let ds = generate_assumption1(&synth).unwrap().dataset;
    let adj = row_normalize(&ds.graph, IsolatedPolicy::SelfLoop);
    let stack = precompute_hop_labels(&adj, &ds.labels, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let params = NeParams {
        encoder: MlpParams::init(&[8, 64, 32], Activation::Relu, &mut rng),
        head: MlpParams::init(&[32, 4], Activation::Relu, &mut rng),
        deconv: Some(deconv_init(2)),
    };
    let target = NeTarget::Deconvolved { stack: &stack, alpha: 1.0 };
    let mut trainer = NeTrainer::new(
        &ds.attrs,
        target,
        params,
        TaskKind::MultiClass,
        LossKind::SoftCrossEntropy,
        AdamConfig::default(),
    )
    .unwrap();
    let batches: Vec<Vec<usize>> = (0..200)
        .map(|_| (0..256).map(|_| rng.random_range(0..num_nodes)).collect())
        .collect();
    let mut best = f64::INFINITY;
    for _ in 0..5 {
        let mut times: Vec<f64> = batches
            .iter()
            .map(|b| {
                let t = Instant::now();
                trainer.step(b).unwrap();
                t.elapsed().as_secs_f64()
            })
            .collect();
        times.sort_by(f64::total_cmp);
        best = best.min(times[times.len() / 2]);
    }
    best
}

fn per_step_complexity() -> Verdict {
    // warm up caches and the allocator
    step_time(5_000);
    let small = step_time(5_000);
    let large = step_time(20_000);
    let change = (large - small).abs() / small;
    Verdict::new(
        change < C9_MAX_CHANGE,
        format!(
            "median step {:.1}µs at 5k nodes, {:.1}µs at 20k nodes, change {:.1}% (limit {:.0}%)",
            small * 1e6,
            large * 1e6,
            100.0 * change,
            100.0 * C9_MAX_CHANGE
        ),
    )
}

fn duplicate_attributes() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    for seed in 0..10 {
        let synth = SynthConfig {
            num_nodes: 120,
            duplicate_pairs: 10,
            seed,
            ..SynthConfig::default()
        };
        let data = generate_assumption1(&synth).unwrap();
        let truth = data.truth.as_ref().unwrap();
        let filter = FilterCoeffs::new(truth.filter.clone(), false).unwrap();
        let (_, edges) = {
            let g = &data.dataset.graph;
            let e: std::collections::BTreeSet<_> = g.edges().collect();
            (g.clone(), e)
        };
        let a = dense_row_normalized(data.dataset.graph.num_nodes(), &edges);
        let y = to_dense(data.continuous.as_ref().unwrap());
        let yinv = exact_inverse_labels(&filter, &a, &y).unwrap();
        for &(i, j) in &data.duplicates {
            worst = worst.max((yinv.row(i) - yinv.row(j)).amax());
            pairs += 1;
        }
    }
    Verdict::new(
        worst < C10_TOL && pairs == 100,
        format!("max row difference {worst:.1e} over {pairs} planted duplicate pairs in 10 datasets"),
    )
}

fn run_cli(args: &[&str]) {
    let mut full = vec!["labeldeconv"];
    full.extend(args);
    if let Err(e) = labeldeconv_cli::run(full) {
        panic!("{args:?}: {e}");
    }
}

fn thread_independence() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let p = |s: &str| dir.path().join(s).to_str().unwrap().to_string();
    let mut identical = true;
    let mut compared = 0;
    let mut files = |a: &str, b: &str, names: &[&str]| {
        for name in names {
            let x = std::fs::read(std::path::Path::new(a).join(name)).unwrap();
            let y = std::fs::read(std::path::Path::new(b).join(name)).unwrap();
            identical &= x == y;
            compared += 1;
        }
    };
    for threads in ["1", "3"] {
        run_cli(&["--threads", threads, "gen", "--nodes", "300", "--seed", "11", "--out", &p(&format!("data{threads}"))]);
    }
    files(&p("data1"), &p("data3"), &["manifest.json", "edges.txt", "attrs.f32", "labels.f32"]);
    for method in ["ld", "glem", "joint"] {
        for threads in ["1", "2", "4"] {
            run_cli(&[
                "train", "--threads", threads, "--data", &p("data1"), "--method", method, "--epochs-ne", "5", "--epochs-gnn", "20",
                "--batch-size", "64", "--seed", "5", "--out", &p(&format!("{method}{threads}")),
            ]);
        }
        for threads in ["2", "4"] {
            files(&p(&format!("{method}1")), &p(&format!("{method}{threads}")), &["report.json", "gnn.ckpt", "encoder.ckpt"]);
        }
    }
    Verdict::new(identical, format!("{compared} output files from gen/train runs at 1–4 threads byte-identical = {identical}"))
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Verdict); 11] = [
        ("motivating example reproduction", motivating_reproduction),
        ("hop-label correctness", hop_label_correctness),
        ("Cayley and polynomial inverses", inverse_identities),
        ("recovery on generative data vs label-only training", recovery),
        ("spectral GNN universality", universality),
        ("gradient integrity", gradient_integrity),
        ("alpha = 0 degenerates to label-only training", alpha_zero_degeneracy),
        ("normalization and positivity invariants", normalization_invariants),
        ("per-step cost independent of graph size", per_step_complexity),
        ("identical attributes give identical deconvolved labels", duplicate_attributes),
        ("determinism across thread counts", thread_independence),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        // Written to the stream directly so the verdicts show without --nocapture.
        let status = if v.pass { "PASS" } else { "FAIL" };
        writeln!(std::io::stderr(), "criterion {:>2} {status} {name}: {}", i + 1, v.detail).unwrap();
        if !v.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

