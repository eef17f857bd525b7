//! Writes the checked-in fuzz corpus seeds: `cargo run --example fuzz_seeds -- fuzz/corpus`.

use std::fs;
use std::path::{Path, PathBuf};

use labeldeconv::graph::{format_edge_list, row_normalize, IsolatedPolicy};
use labeldeconv::labels::{precompute_hop_labels, ElemWidth};
use labeldeconv::nn::{Activation, Checkpoint, MlpParams};
use labeldeconv::pipeline::{run_experiment, Method, TrainConfig};
use labeldeconv::synth::{build_motivating_example, generate_assumption1, SynthConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn write(root: &Path, target: &str, name: &str, bytes: impl AsRef<[u8]>) {
    let dir = root.join(target);
    fs::create_dir_all(&dir).unwrap();
    fs::write(dir.join(format!("seed-{name}")), bytes).unwrap();
}

fn framed(sections: &[&[u8]]) -> Vec<u8> {
    let mut out = Vec::new();
    for s in sections {
        out.extend_from_slice(&(s.len() as u32).to_le_bytes());
        out.extend_from_slice(s);
    }
    out
}

fn main() {
    let root = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fuzz/corpus".into()));
    let small = generate_assumption1(&SynthConfig {
        num_nodes: 12,
        ..SynthConfig::default()
    })
    .unwrap()
    .dataset;
    let motivating = build_motivating_example().dataset;

    write(&root, "edge_list", "motivating", format_edge_list(motivating.graph.edges()));
    write(&root, "edge_list", "comments", "# header\n0 1\n1\t2 # trailing\n\n3 3\n");
    write(&root, "edge_list", "bad-field", "0 1\n2 x\n");

    let adj = row_normalize(&small.graph, IsolatedPolicy::SelfLoop);
    let stack = precompute_hop_labels(&adj, &small.labels, 2).unwrap();
    let f64_bytes = stack.encode(ElemWidth::F64);
    write(&root, "hop_stack", "f64", &f64_bytes);
    write(&root, "hop_stack", "f32", stack.encode(ElemWidth::F32));
    write(&root, "hop_stack", "truncated", &f64_bytes[..f64_bytes.len() / 2]);

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mlp = MlpParams::init(&[3, 4, 2], Activation::Relu, &mut rng);
    write(&root, "checkpoint", "encoder", Checkpoint { filter: None, mlp: mlp.clone() }.encode());
    write(&root, "checkpoint", "gnn", Checkpoint { filter: Some((vec![0.5, 0.3, 0.2], true)), mlp }.encode());
    write(&root, "checkpoint", "identity", Checkpoint { filter: None, mlp: MlpParams::identity() }.encode());

    for (name, ds) in [("small", &small), ("motivating", &motivating)] {
        let f = ds.encode().unwrap();
        let sections: [&[u8]; 7] = [
            f.manifest.as_bytes(),
            f.edges.as_bytes(),
            &f.attrs,
            &f.labels,
            &f.splits[0],
            &f.splits[1],
            &f.splits[2],
        ];
        write(&root, "bundle", name, framed(&sections));
    }

    let cfg = TrainConfig {
        ne_epochs: 2,
        gnn_epochs: 2,
        ..TrainConfig::default()
    };
    let report = run_experiment(&small, Method::Ld, &cfg).unwrap().report;
    write(&root, "report", "ld", report.to_json().unwrap());
}
