use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::{check_alpha, TaskKind};
use crate::nn::{Activation, AdamConfig, LossKind, MlpParams};
use crate::spectral::FilterKind;

/// A trainable block: identity, or an MLP with the given hidden widths (no
/// hidden widths means a single linear layer).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Module {
    Identity,
    Mlp { hidden: Vec<usize> },
}

impl Module {
    pub fn linear() -> Self {
        Module::Mlp { hidden: Vec::new() }
    }

    /// Initializes the block for `in_dim → out_dim`.
    pub fn build(&self, in_dim: usize, out_dim: usize, rng: &mut impl Rng) -> Result<MlpParams> {
        match self {
            Module::Identity if in_dim == out_dim => Ok(MlpParams::identity()),
            Module::Identity => Err(Error::InvalidConfig(format!(
                "identity block cannot map width {in_dim} to {out_dim}"
            ))),
            Module::Mlp { hidden } => {
                let mut dims = vec![in_dim];
                dims.extend(hidden);
                dims.push(out_dim);
                Ok(MlpParams::init(&dims, Activation::Relu, rng))
            }
        }
    }
}

impl std::fmt::Display for Module {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Module::Identity => write!(f, "identity"),
            Module::Mlp { hidden } if hidden.is_empty() => write!(f, "linear"),
            Module::Mlp { hidden } => {
                let widths: Vec<String> = hidden.iter().map(usize::to_string).collect();
                write!(f, "mlp:{}", widths.join(","))
            }
        }
    }
}

impl std::str::FromStr for Module {
    type Err = Error;

    /// `identity`, `linear`, or `mlp:W1,W2,…`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Module::Identity),
            "linear" => Ok(Module::linear()),
            _ => {
                let widths = s
                    .strip_prefix("mlp:")
                    .ok_or_else(|| Error::InvalidConfig(format!("module must be identity, linear or mlp:W,…; got {s:?}")))?;
                let hidden = widths
                    .split(',')
                    .map(|w| match w.trim().parse::<usize>() {
                        Ok(0) | Err(_) => Err(Error::InvalidConfig(format!("bad hidden width {w:?}"))),
                        Ok(v) => Ok(v),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Module::Mlp { hidden })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchConfig {
    /// Node encoder `f(·; β)` from raw attributes to features.
    pub encoder: Module,
    /// Encoder output width; defaults to the number of classes.
    pub feature_dim: Option<usize>,
    /// Head `ψ` used while training the encoder.
    pub ne_head: Module,
    /// Head `ψ` of the spectral GNN.
    pub gnn_head: Module,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            encoder: Module::Mlp { hidden: vec![64] },
            feature_dim: Some(32),
            ne_head: Module::linear(),
            gnn_head: Module::linear(),
        }
    }
}

impl ArchConfig {
    pub fn feature_dim(&self, attr_dim: usize, num_classes: usize) -> usize {
        match self.encoder {
            Module::Identity => attr_dim,
            Module::Mlp { .. } => self.feature_dim.unwrap_or(num_classes),
        }
    }
}

/// Learning-rate schedule over the optimizer steps of one phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrSchedule {
    #[default]
    Constant,
    /// Half-cosine decay from the base rate to zero.
    Cosine,
}

impl LrSchedule {
    /// Multiplier for step `t` of `total`.
    pub fn factor(self, t: usize, total: usize) -> f64 {
        match self {
            LrSchedule::Constant => 1.0,
            LrSchedule::Cosine if total == 0 => 1.0,
            LrSchedule::Cosine => 0.5 * (1.0 + (std::f64::consts::PI * t as f64 / total as f64).cos()),
        }
    }
}

impl std::str::FromStr for LrSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(LrSchedule::Constant),
            "cosine" => Ok(LrSchedule::Cosine),
            other => Err(Error::InvalidConfig(format!("unknown schedule {other:?} (constant or cosine)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// `N`, the highest hop label used by the deconvolution.
    pub n_hops: usize,
    /// Weight of the inverse labels in the encoder target.
    pub alpha: f64,
    pub ne_epochs: usize,
    pub gnn_epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Overrides the task's default loss.
    pub loss: Option<LossKind>,
    pub ne_optim: AdamConfig,
    pub gnn_optim: AdamConfig,
    #[serde(default)]
    pub schedule: LrSchedule,
    pub filter: FilterKind,
    /// Seed the GNN head with the encoder-phase head instead of a fresh one.
    pub warm_start_head: bool,
    /// Largest graph accepted by full-batch joint training.
    pub joint_cap: usize,
    /// Fill validation/test rows with GNN predictions before preprocessing.
    pub pseudo_labels: bool,
    pub arch: ArchConfig,
    /// Record wall-clock phase times in the report.
    #[serde(default)]
    pub record_timing: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n_hops: 2,
            alpha: 1.0,
            ne_epochs: 50,
            gnn_epochs: 100,
            batch_size: 256,
            seed: 0,
            loss: None,
            ne_optim: AdamConfig::default(),
            gnn_optim: AdamConfig::default(),
            schedule: LrSchedule::Constant,
            filter: FilterKind::GcnPower(2),
            warm_start_head: false,
            joint_cap: 20_000,
            pseudo_labels: true,
            arch: ArchConfig::default(),
            record_timing: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        for (name, o) in [("ne", &self.ne_optim), ("gnn", &self.gnn_optim)] {
            let ok = o.lr > 0.0
                && o.lr.is_finite()
                && (0.0..1.0).contains(&o.beta1)
                && (0.0..1.0).contains(&o.beta2)
                && o.eps > 0.0;
            if !ok {
                return Err(Error::InvalidConfig(format!("{name} optimizer settings are out of range: {o:?}")));
            }
        }
        if self.arch.feature_dim == Some(0) {
            return Err(Error::InvalidConfig("feature_dim must be positive".into()));
        }
        Ok(())
    }

    pub fn loss_for(&self, task: TaskKind) -> LossKind {
        self.loss.unwrap_or(LossKind::for_task(task))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn module_parsing_round_trips() {
        for s in ["identity", "linear", "mlp:16", "mlp:32,8"] {
            assert_eq!(s.parse::<Module>().unwrap().to_string(), s);
        }
        assert!("mlp:".parse::<Module>().is_err());
        assert!("mlp:0".parse::<Module>().is_err());
        assert!("conv".parse::<Module>().is_err());
    }

    #[test]
    fn module_build_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(Module::Identity.build(3, 3, &mut rng).unwrap().is_identity());
        assert!(Module::Identity.build(3, 4, &mut rng).is_err());
        let p = "mlp:5".parse::<Module>().unwrap().build(3, 2, &mut rng).unwrap();
        assert_eq!((p.in_dim(), p.out_dim(), p.layers.len()), (Some(3), Some(2), 2));
    }

    #[test]
    fn cosine_schedule_endpoints() {
        assert_eq!(LrSchedule::Cosine.factor(0, 10), 1.0);
        assert!((LrSchedule::Cosine.factor(5, 10) - 0.5).abs() < 1e-15);
        assert!(LrSchedule::Cosine.factor(10, 10).abs() < 1e-15);
        assert_eq!(LrSchedule::Constant.factor(7, 10), 1.0);
    }

    #[test]
    fn validation() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig { alpha: 1.5, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { batch_size: 0, ..TrainConfig::default() }.validate().is_err());
        let json = serde_json::to_string(&TrainConfig::default()).unwrap();
        assert_eq!(serde_json::from_str::<TrainConfig>(&json).unwrap(), TrainConfig::default());
    }
}
