//! On-disk dataset bundles.
//!
//! A bundle is a directory holding
//!
//! ```text
//! manifest.json            format version, name, task, shapes, split sizes, generator
//! edges.txt                directed edge list
//! attrs.f32                nodes × attr_dim, row-major little-endian f32
//! labels.f32               nodes × num_classes, row-major little-endian f32
//! split_{train,val,test}.u32
//! ```
//!
//! Arrays carry no header; their shapes come from the manifest. Values are
//! stored as f32, so [`Dataset::round_to_f32`] gives the in-memory image of
//! what a load returns.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{format_edge_list, parse_edge_list, CsrGraph, NodeSplit};
use crate::labels::{LabelMatrix, TaskKind};
use crate::matrix::Matrix;

pub const BUNDLE_FORMAT_VERSION: u32 = 1;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const EDGES_FILE: &str = "edges.txt";
pub const ATTRS_FILE: &str = "attrs.f32";
pub const LABELS_FILE: &str = "labels.f32";
pub const SPLIT_FILES: [&str; 3] = ["split_train.u32", "split_val.u32", "split_test.u32"];

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub graph: CsrGraph,
    pub attrs: Matrix,
    pub labels: LabelMatrix,
    pub split: NodeSplit,
    /// Free-form description of how the data was produced.
    pub provenance: serde_json::Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub name: String,
    pub task: TaskKind,
    pub num_nodes: usize,
    pub num_edges: usize,
    pub attr_dim: usize,
    pub num_classes: usize,
    pub split_sizes: SplitSizes,
    pub generator: serde_json::Value,
}

/// The raw contents of every bundle file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BundleFiles {
    pub manifest: String,
    pub edges: String,
    pub attrs: Vec<u8>,
    pub labels: Vec<u8>,
    /// train, val, test
    pub splits: [Vec<u8>; 3],
}

impl Dataset {
    pub fn validate(&self) -> Result<()> {
        let n = self.graph.num_nodes();
        if self.attrs.rows() != n {
            return Err(Error::dims("dataset attributes", (n, self.attrs.cols()), self.attrs.shape()));
        }
        if self.labels.num_nodes() != n {
            return Err(Error::dims(
                "dataset labels",
                (n, self.labels.num_classes()),
                self.labels.values.shape(),
            ));
        }
        if !self.attrs.is_finite() {
            return Err(Error::InvalidData("attributes contain non-finite entries".into()));
        }
        self.labels.validate()?;
        self.split.validate(n)
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            format_version: BUNDLE_FORMAT_VERSION,
            name: self.name.clone(),
            task: self.labels.task,
            num_nodes: self.graph.num_nodes(),
            num_edges: self.graph.num_edges(),
            attr_dim: self.attrs.cols(),
            num_classes: self.labels.num_classes(),
            split_sizes: SplitSizes {
                train: self.split.train.len(),
                val: self.split.val.len(),
                test: self.split.test.len(),
            },
            generator: self.provenance.clone(),
        }
    }

    /// Rounds attributes and labels through f32, the storage precision.
    pub fn round_to_f32(&mut self) {
        for v in self.attrs.as_mut_slice() {
            *v = *v as f32 as f64;
        }
        for v in self.labels.values.as_mut_slice() {
            *v = *v as f32 as f64;
        }
    }

    pub fn encode(&self) -> Result<BundleFiles> {
        self.validate()?;
        let mut manifest = serde_json::to_string_pretty(&self.manifest())?;
        manifest.push('\n');
        Ok(BundleFiles {
            manifest,
            edges: format_edge_list(self.graph.edges()),
            attrs: f32_bytes(self.attrs.as_slice()),
            labels: f32_bytes(self.labels.values.as_slice()),
            splits: [&self.split.train, &self.split.val, &self.split.test].map(|s| u32_bytes(s)),
        })
    }

    /// Decodes untrusted bundle contents. Every array length is checked
    /// against the manifest before it is used.
    pub fn decode(files: &BundleFiles) -> Result<Self> {
        let m: Manifest = serde_json::from_str(&files.manifest)?;
        if m.format_version != BUNDLE_FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: m.format_version,
                expected: BUNDLE_FORMAT_VERSION,
            });
        }
        if m.attr_dim == 0 || m.num_classes == 0 {
            return Err(Error::InvalidData("attr_dim and num_classes must be positive".into()));
        }
        let attrs = read_f32_matrix("attrs", &files.attrs, m.num_nodes, m.attr_dim)?;
        let values = read_f32_matrix("labels", &files.labels, m.num_nodes, m.num_classes)?;
        let edges = parse_edge_list(&files.edges).map_err(|e| Error::InvalidData(format!("{EDGES_FILE}: {e}")))?;
        let graph = CsrGraph::from_edges(&edges, m.num_nodes)?;
        if graph.num_edges() != m.num_edges {
            return Err(Error::InvalidData(format!(
                "manifest lists {} edges, edge file has {}",
                m.num_edges,
                graph.num_edges()
            )));
        }
        let [train, val, test] = [0, 1, 2].map(|k| read_u32s(SPLIT_FILES[k], &files.splits[k]));
        let split = NodeSplit {
            train: train?,
            val: val?,
            test: test?,
        };
        let sizes = SplitSizes {
            train: split.train.len(),
            val: split.val.len(),
            test: split.test.len(),
        };
        if sizes != m.split_sizes {
            return Err(Error::InvalidData(format!(
                "split sizes {sizes:?} do not match the manifest {:?}",
                m.split_sizes
            )));
        }
        let ds = Dataset {
            name: m.name,
            graph,
            attrs,
            labels: LabelMatrix { values, task: m.task },
            split,
            provenance: m.generator,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let files = self.encode()?;
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &str, bytes: &[u8]| {
            let path = dir.join(name);
            std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))
        };
        write(MANIFEST_FILE, files.manifest.as_bytes())?;
        write(EDGES_FILE, files.edges.as_bytes())?;
        write(ATTRS_FILE, &files.attrs)?;
        write(LABELS_FILE, &files.labels)?;
        for (name, bytes) in SPLIT_FILES.iter().zip(&files.splits) {
            write(name, bytes)?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let read = |name: &str| {
            let path = dir.join(name);
            std::fs::read(&path).map_err(|e| Error::io(&path, e))
        };
        let text = |name: &str| {
            String::from_utf8(read(name)?).map_err(|_| Error::InvalidData(format!("{name} is not UTF-8")))
        };
        let files = BundleFiles {
            manifest: text(MANIFEST_FILE)?,
            edges: text(EDGES_FILE)?,
            attrs: read(ATTRS_FILE)?,
            labels: read(LABELS_FILE)?,
            splits: [read(SPLIT_FILES[0])?, read(SPLIT_FILES[1])?, read(SPLIT_FILES[2])?],
        };
        Self::decode(&files)
    }
}

fn f32_bytes(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|&v| (v as f32).to_le_bytes()).collect()
}

fn u32_bytes(values: &[usize]) -> Vec<u8> {
    values.iter().flat_map(|&v| (v as u32).to_le_bytes()).collect()
}

fn read_f32_matrix(what: &str, bytes: &[u8], rows: usize, cols: usize) -> Result<Matrix> {
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::InvalidData(format!("{what}: shape {rows}×{cols} overflows")))?;
    if bytes.len() != expected {
        return Err(Error::InvalidData(format!(
            "{what}: manifest shape {rows}×{cols} needs {expected} bytes, file has {}",
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Matrix::from_vec(rows, cols, data)
}

fn read_u32s(what: &str, bytes: &[u8]) -> Result<Vec<usize>> {
    if bytes.len() % 4 != 0 {
        return Err(Error::InvalidData(format!("{what}: length {} is not a multiple of 4", bytes.len())));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as usize)
        .collect())
}
