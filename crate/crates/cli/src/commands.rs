use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use labeldeconv::bundle::Dataset;
use labeldeconv::graph::{row_normalize, IsolatedPolicy};
use labeldeconv::labels::{precompute_hop_labels, ElemWidth};
use labeldeconv::metrics::emit_curves;
use labeldeconv::pipeline::{
    motivating_config, prepare_ne_labels, reproduce_motivating_example, run_experiment, ExperimentReport, Method,
    TrainConfig,
};
use labeldeconv::synth::{build_counterexample_family, build_motivating_example, generate_assumption1, SynthConfig};
use labeldeconv::Matrix;

use crate::{CliError, GenArgs, GenKind, MotivatingArgs, PreprocessArgs, ReportArgs, TrainArgs, EXIT_FAILURE};

pub const REPORT_FILE: &str = "report.json";
pub const ENCODER_FILE: &str = "encoder.ckpt";
pub const GNN_FILE: &str = "gnn.ckpt";

pub fn gen(a: &GenArgs) -> Result<(), CliError> {
    let generated = match a.kind {
        GenKind::Assumption1 => {
            let cfg = SynthConfig {
                num_nodes: a.nodes,
                attr_dim: a.attr_dim,
                num_classes: a.classes,
                filter: a.gen_filter.clone(),
                filter_degree: a.filter_degree,
                noise_edges_per_node: a.noise,
                duplicate_pairs: a.duplicates,
                task: a.task.into(),
                train_frac: a.train_frac,
                val_frac: a.val_frac,
                seed: a.seed,
                ..SynthConfig::default()
            };
            generate_assumption1(&cfg)?
        }
        GenKind::Counterexample => build_counterexample_family(a.pairs, a.classes, a.seed)?,
        GenKind::Motivating => build_motivating_example(),
    };
    let ds = generated.dataset;
    ds.save(&a.out)?;
    let m = ds.manifest();
    println!(
        "wrote {} ({} nodes, {} edges, {} attrs, {} classes, split {}/{}/{}) to {}",
        m.name,
        m.num_nodes,
        m.num_edges,
        m.attr_dim,
        m.num_classes,
        m.split_sizes.train,
        m.split_sizes.val,
        m.split_sizes.test,
        a.out.display()
    );
    Ok(())
}

fn load_dataset(dir: &Path, symmetrize: bool) -> Result<Dataset, CliError> {
    let mut ds = Dataset::load(dir)?;
    if symmetrize {
        ds.graph = ds.graph.symmetrize();
    }
    Ok(ds)
}

pub fn preprocess(a: &PreprocessArgs) -> Result<(), CliError> {
    let ds = load_dataset(&a.data, a.symmetrize)?;
    let adj = row_normalize(&ds.graph, IsolatedPolicy::SelfLoop);
    let cfg = TrainConfig {
        n_hops: a.n_hops,
        pseudo_labels: false,
        ..TrainConfig::default()
    };
    let (labels, _) = prepare_ne_labels(&adj, &ds.attrs, &ds.labels, &ds.split, &cfg)?;
    let stack = precompute_hop_labels(&adj, &labels, a.n_hops)?;
    let width = if a.f32 { ElemWidth::F32 } else { ElemWidth::F64 };
    stack.save(&a.out, width)?;
    println!(
        "wrote {} hop blocks of {}x{} to {}",
        a.n_hops + 1,
        stack.num_nodes(),
        stack.num_classes(),
        a.out.display()
    );
    Ok(())
}

fn summary_line(r: &ExperimentReport) -> String {
    let mut s = format!("{} on {}:", r.method.as_str(), r.dataset);
    for (split, m) in [("train", &r.metrics.train), ("val", &r.metrics.val), ("test", &r.metrics.test)] {
        if let Some(m) = m {
            for (name, v) in m {
                write!(s, " {split}_{name}={v:.4}").unwrap();
            }
        }
    }
    write!(s, " gnn_objective={:.4e}", r.objective.gnn).unwrap();
    if let Some(g) = &r.learned.gamma {
        let g: Vec<String> = g.iter().map(|v| format!("{v:.3}")).collect();
        write!(s, " gamma=[{}]", g.join(",")).unwrap();
    }
    s
}

pub fn train(a: &TrainArgs, default_method: Method) -> Result<(), CliError> {
    let method: Method = match &a.method {
        Some(m) => m.parse().map_err(|e: labeldeconv::Error| CliError::new(crate::EXIT_CONFIG, e.to_string()))?,
        None => default_method,
    };
    let cfg = a.hyper.to_config(a.timing)?;
    let ds = load_dataset(&a.data, a.symmetrize)?;
    let outcome = run_experiment(&ds, method, &cfg)?;
    std::fs::create_dir_all(&a.out).map_err(|e| CliError::new(crate::EXIT_DATA, format!("{}: {e}", a.out.display())))?;
    let report_path = a.out.join(REPORT_FILE);
    outcome.report.save(&report_path)?;
    emit_curves(&outcome.report.curves, &a.out)?;
    if let Some(enc) = &outcome.encoder {
        labeldeconv::nn::Checkpoint {
            filter: None,
            mlp: enc.clone(),
        }
        .save(&a.out.join(ENCODER_FILE))?;
    }
    outcome.gnn.to_checkpoint().save(&a.out.join(GNN_FILE))?;
    println!("{}", summary_line(&outcome.report));
    println!("report: {}", report_path.display());
    Ok(())
}

fn fmt_row(row: &[f64]) -> String {
    let cells: Vec<String> = row.iter().map(|v| format!("{v:6.3}")).collect();
    format!("[{}]", cells.join(" "))
}

pub fn motivating(a: &MotivatingArgs) -> Result<(), CliError> {
    let mut cfg = motivating_config();
    cfg.alpha = a.alpha;
    cfg.seed = a.seed;
    cfg.ne_epochs = a.epochs_ne;
    cfg.validate()?;
    let ds = build_motivating_example().dataset;
    let r = reproduce_motivating_example(&cfg)?;

    println!("node  X        Y        F_LD                    pred_LD  F_GLEM                  pred_GLEM");
    for i in 0..ds.graph.num_nodes() {
        println!(
            "{:<5} e{:<7} e{:<7} {}  e{:<7} {}  e{}",
            i + 1,
            ds.attrs.argmax_row(i) + 1,
            ds.labels.values.argmax_row(i) + 1,
            fmt_row(r.ld.features.row(i)),
            r.ld.predictions.argmax_row(i) + 1,
            fmt_row(r.glem.features.row(i)),
            r.glem.predictions.argmax_row(i) + 1,
        );
    }
    let beta = |name: &str, m: &Matrix| {
        println!("{name}:");
        for row in m.row_iter() {
            println!("  {}", fmt_row(row));
        }
    };
    beta("beta_LD", &r.beta_ld);
    beta("beta_GLEM", &r.beta_glem);
    if let Some(g) = &r.ld.report.learned.gamma {
        println!("gamma_LD: {}", fmt_row(g));
    }
    let (ld, glem) = (r.ld_accuracy(), r.glem_accuracy());
    println!("accuracy: LD {:.0}%  GLEM {:.0}%", 100.0 * ld, 100.0 * glem);

    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::new(crate::EXIT_DATA, format!("{}: {e}", dir.display())))?;
        r.ld.report.save(&dir.join("ld_report.json"))?;
        r.glem.report.save(&dir.join("glem_report.json"))?;
    }
    if ld == 1.0 && glem == 0.0 {
        Ok(())
    } else {
        Err(CliError::new(
            EXIT_FAILURE,
            format!("expected LD 100% and GLEM 0%, got LD {:.0}% and GLEM {:.0}%", 100.0 * ld, 100.0 * glem),
        ))
    }
}

fn report_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(REPORT_FILE)
    } else {
        p.to_path_buf()
    }
}

pub fn report(a: &ReportArgs) -> Result<(), CliError> {
    for run in &a.runs {
        let path = report_path(run);
        let r = ExperimentReport::load(&path)?;
        println!("{}: {}", path.display(), summary_line(&r));
    }
    Ok(())
}
