//! Experiment configuration: a TOML document with one table per module.
//! Every table and key is optional; unknown keys are rejected.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use dqfl_core::data::{DataConfig, PartitionMode};
use dqfl_core::fed::{CentralData, DenseMlp, FederationConfig, Method, Topology, DESK_ROUNDS};
use dqfl_core::qnn::{QnnModel, TrainConfig};
use dqfl_core::{CircuitSpec, EncodingLayout, NoiseConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Default output directory when `--out` is not given.
    pub out_dir: PathBuf,
    pub data: DataSection,
    pub federation: FederationSection,
    pub training: TrainingSection,
    pub circuit: CircuitSection,
    pub noise: NoiseSection,
    pub baselines: BaselineSection,
    pub ledger: LedgerSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    pub mnist_dir: PathBuf,
    pub class_set: Vec<u8>,
    pub test_fraction: f64,
    /// Use the t10k files as the test set instead of a split.
    pub standard_test: bool,
    /// `"iid"` or `"dirichlet"`.
    pub partition: String,
    pub dirichlet_alpha: f64,
    /// 0 keeps every training sample.
    pub train_per_client: usize,
    /// 0 keeps every test sample.
    pub test_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FederationSection {
    pub n_servers: usize,
    pub clients_per_server: usize,
    pub global_rounds: u64,
    pub topology: String,
    pub gossip_steps: usize,
    pub random_edge_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CircuitSection {
    pub n_qubits: usize,
    pub n_layers: usize,
    /// Radians per unit feature.
    pub encoding_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub enabled: bool,
    pub p_depol_1q: f64,
    pub p_depol_2q: f64,
    pub p_meas_flip: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineSection {
    /// Methods executed by `run`.
    pub methods: Vec<String>,
    /// `"pooled"` or `"shard"` (one client's data) for the centralized methods.
    pub central_data: String,
    pub central_shard: usize,
    pub dense_hidden: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LedgerSection {
    /// Only `"sha256"` is supported.
    pub hash: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let fed = FederationConfig::default();
        ExperimentConfig {
            seed: fed.seed,
            out_dir: PathBuf::from("runs/default"),
            data: DataSection::default(),
            federation: FederationSection::default(),
            training: TrainingSection::default(),
            circuit: CircuitSection::default(),
            noise: NoiseSection::default(),
            baselines: BaselineSection::default(),
            ledger: LedgerSection::default(),
        }
    }
}

impl Default for DataSection {
    fn default() -> Self {
        let d = DataConfig::default();
        DataSection {
            mnist_dir: PathBuf::from("data/mnist"),
            class_set: d.class_set,
            test_fraction: d.test_fraction,
            standard_test: false,
            partition: "iid".into(),
            dirichlet_alpha: 0.5,
            train_per_client: d.train_per_client.unwrap_or(0),
            test_samples: d.test_samples.unwrap_or(0),
        }
    }
}

impl Default for FederationSection {
    fn default() -> Self {
        let f = FederationConfig::default();
        FederationSection {
            n_servers: f.n_servers,
            clients_per_server: f.clients_per_server,
            global_rounds: f.global_rounds,
            topology: f.topology.as_str().to_ascii_lowercase(),
            gossip_steps: f.gossip_steps,
            random_edge_prob: f.random_edge_prob,
        }
    }
}

impl Default for TrainingSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainingSection {
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.lr,
        }
    }
}

impl Default for CircuitSection {
    fn default() -> Self {
        let c = CircuitSpec::default();
        CircuitSection {
            n_qubits: c.n_qubits,
            n_layers: c.n_layers,
            encoding_scale: PI,
        }
    }
}

impl Default for NoiseSection {
    fn default() -> Self {
        let n = NoiseConfig::default();
        NoiseSection {
            enabled: n.enabled,
            p_depol_1q: n.p_depol_1q,
            p_depol_2q: n.p_depol_2q,
            p_meas_flip: n.p_meas_flip,
        }
    }
}

impl Default for BaselineSection {
    fn default() -> Self {
        BaselineSection {
            methods: vec![Method::Dqfl.as_str().into()],
            central_data: "pooled".into(),
            central_shard: 0,
            dense_hidden: DenseMlp::default().n_hidden,
        }
    }
}

impl Default for LedgerSection {
    fn default() -> Self {
        LedgerSection { hash: "sha256".into() }
    }
}

/// Named override bundles selected with `--profile`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// 20 rounds, 500 training samples per client.
    Desk,
    /// The configuration as written.
    Full,
}

impl std::str::FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "desk" => Ok(Profile::Desk),
            "full" => Ok(Profile::Full),
            _ => Err(format!("unknown profile {s:?} (expected desk or full)")),
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::config(format!("{}: {}", path.display(), e.message)))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn apply_profile(&mut self, profile: Profile) {
        if profile == Profile::Desk {
            self.federation.global_rounds = DESK_ROUNDS;
            self.data.train_per_client = 500;
        }
    }

    /// Checks everything that can be checked without touching data.
    pub fn validate(&self) -> Result<(), CliError> {
        self.data_config()?;
        self.federation_config()?.validate().map_err(CliError::from_core_config)?;
        self.noise_config().validate().map_err(CliError::from_core_config)?;
        self.circuit_spec().validate().map_err(CliError::from_core_config)?;
        self.qnn_model().map_err(CliError::from_core_config)?;
        self.methods()?;
        self.central_data()?;
        if self.training.batch_size == 0 {
            return Err(CliError::config("training.batch_size must be positive"));
        }
        if !(self.training.learning_rate.is_finite() && self.training.learning_rate > 0.0) {
            return Err(CliError::config("training.learning_rate must be positive"));
        }
        if !(self.circuit.encoding_scale.is_finite() && self.circuit.encoding_scale > 0.0) {
            return Err(CliError::config("circuit.encoding_scale must be positive"));
        }
        if self.baselines.dense_hidden == 0 {
            return Err(CliError::config("baselines.dense_hidden must be positive"));
        }
        if self.ledger.hash != "sha256" {
            return Err(CliError::config(format!(
                "ledger.hash {:?} unsupported (only \"sha256\")",
                self.ledger.hash
            )));
        }
        Ok(())
    }

    pub fn data_config(&self) -> Result<DataConfig, CliError> {
        let partition = match self.data.partition.as_str() {
            "iid" => PartitionMode::Iid,
            "dirichlet" => {
                let alpha = self.data.dirichlet_alpha;
                if !(alpha.is_finite() && alpha > 0.0) {
                    return Err(CliError::config("data.dirichlet_alpha must be positive"));
                }
                PartitionMode::Dirichlet { alpha }
            }
            other => {
                return Err(CliError::config(format!(
                    "data.partition {other:?} (expected \"iid\" or \"dirichlet\")"
                )))
            }
        };
        if self.data.class_set.len() < 2 {
            return Err(CliError::config("data.class_set needs at least two digits"));
        }
        if !self.data.standard_test && !(0.0..0.5).contains(&self.data.test_fraction) {
            return Err(CliError::config("data.test_fraction must lie in [0, 0.5)"));
        }
        Ok(DataConfig {
            class_set: self.data.class_set.clone(),
            test_fraction: self.data.test_fraction,
            partition,
            train_per_client: (self.data.train_per_client > 0).then_some(self.data.train_per_client),
            test_samples: (self.data.test_samples > 0).then_some(self.data.test_samples),
        })
    }

    pub fn topology(&self) -> Result<Topology, CliError> {
        self.federation.topology.parse().map_err(CliError::from_core_config)
    }

    pub fn federation_config(&self) -> Result<FederationConfig, CliError> {
        Ok(FederationConfig {
            n_servers: self.federation.n_servers,
            clients_per_server: self.federation.clients_per_server,
            global_rounds: self.federation.global_rounds,
            topology: self.topology()?,
            gossip_steps: self.federation.gossip_steps,
            random_edge_prob: self.federation.random_edge_prob,
            seed: self.seed,
        })
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.training.epochs,
            batch_size: self.training.batch_size,
            lr: self.training.learning_rate,
        }
    }

    pub fn noise_config(&self) -> NoiseConfig {
        NoiseConfig {
            p_depol_1q: self.noise.p_depol_1q,
            p_depol_2q: self.noise.p_depol_2q,
            p_meas_flip: self.noise.p_meas_flip,
            enabled: self.noise.enabled,
        }
    }

    pub fn circuit_spec(&self) -> CircuitSpec {
        CircuitSpec {
            n_qubits: self.circuit.n_qubits,
            n_layers: self.circuit.n_layers,
        }
    }

    pub fn qnn_model(&self) -> dqfl_core::Result<QnnModel> {
        let layout = EncodingLayout {
            scale: self.circuit.encoding_scale,
            ..EncodingLayout::default()
        };
        QnnModel::new(self.circuit_spec(), layout, self.noise_config(), self.data.class_set.len())
    }

    pub fn dense_model(&self) -> dqfl_core::Result<DenseMlp> {
        DenseMlp::new(
            EncodingLayout::default().features_per_sample,
            self.baselines.dense_hidden,
            self.data.class_set.len(),
        )
    }

    /// Configured methods, duplicates removed in first-seen order.
    pub fn methods(&self) -> Result<Vec<Method>, CliError> {
        parse_methods(self.baselines.methods.iter().map(String::as_str)).map(|(m, _)| m)
    }

    pub fn central_data(&self) -> Result<CentralData, CliError> {
        match self.baselines.central_data.as_str() {
            "pooled" => Ok(CentralData::Pooled),
            "shard" => Ok(CentralData::Shard(self.baselines.central_shard)),
            other => Err(CliError::config(format!(
                "baselines.central_data {other:?} (expected \"pooled\" or \"shard\")"
            ))),
        }
    }
}

/// Parses method names; returns the deduplicated list and the duplicates seen.
pub fn parse_methods<'a>(names: impl IntoIterator<Item = &'a str>) -> Result<(Vec<Method>, Vec<Method>), CliError> {
    let mut out = Vec::new();
    let mut dups = Vec::new();
    for name in names {
        let m: Method = name.trim().parse().map_err(CliError::from_core_config)?;
        if out.contains(&m) {
            dups.push(m);
        } else {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(CliError::config("no methods given"));
    }
    Ok((out, dups))
}
