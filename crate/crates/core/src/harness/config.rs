//! Line-oriented `key = value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored. Unknown keys are rejected so
//! typos surface immediately. Every key has a default; a config file only
//! states what it overrides.

use super::HarnessError;
use crate::cost::GnnModel;
use std::path::{Path, PathBuf};

/// Which policy produces offloading decisions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Drlgo,
    Ptom,
    Gm,
    Rm,
    DrlOnly,
}

impl Method {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "drlgo" => Some(Method::Drlgo),
            "ptom" => Some(Method::Ptom),
            "gm" => Some(Method::Gm),
            "rm" => Some(Method::Rm),
            "drl_only" => Some(Method::DrlOnly),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Drlgo => "drlgo",
            Method::Ptom => "ptom",
            Method::Gm => "gm",
            Method::Rm => "rm",
            Method::DrlOnly => "drl_only",
        }
    }

    pub fn is_learned(self) -> bool {
        matches!(self, Method::Drlgo | Method::Ptom | Method::DrlOnly)
    }
}

/// One synthetic benchmark instance request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LadderPoint {
    pub n_vertices: usize,
    pub n_edges: usize,
}

/// How synthetic user graphs are wired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphStyle {
    /// Uniform simple graph over all vertex pairs.
    Uniform,
    /// Mostly short-range links between nearby user indices, with a small
    /// share of long-range links. Mirrors association locality (users who
    /// join together associate) and gives the partitioner real structure.
    Banded,
}

impl GraphStyle {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "uniform" => Some(GraphStyle::Uniform),
            "banded" => Some(GraphStyle::Banded),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    // Plane and servers.
    pub plane_width: f64,
    pub plane_height: f64,
    pub scope_width: f64,
    pub scope_height: f64,
    pub n_servers: usize,
    // Users and their graph.
    pub n_users: usize,
    pub n_assoc: usize,
    /// 0 means auto: enough slots for the configured users plus event headroom.
    pub user_slots: usize,
    pub task_kb: f64,
    // Radio and compute parameters.
    pub user_power_min_mw: f64,
    pub user_power_max_mw: f64,
    pub server_power_min_mw: f64,
    pub server_power_max_mw: f64,
    pub bandwidth_user_min_mhz: f64,
    pub bandwidth_user_max_mhz: f64,
    pub bandwidth_server_mhz: f64,
    pub noise_dbm: f64,
    pub ref_gain: f64,
    pub server_gain: f64,
    pub cpu_rate_min_gbps: f64,
    pub cpu_rate_max_gbps: f64,
    // Unit costs.
    pub upload_cost_mj_per_mb: f64,
    pub transfer_cost_mj_per_mb: f64,
    pub agg_cost_pj_per_bit: f64,
    pub upd_cost_pj_per_bit: f64,
    pub act_cost_pj_per_bit: f64,
    // GNN cost spec.
    pub gnn_layers: usize,
    pub gnn_layer_sizes_kb: Vec<f64>,
    pub gnn_model: GnnModel,
    // Resource caps; 0 means auto (sized so the sampled draws always fit).
    pub b_max1_mhz: f64,
    pub b_max2_mhz: f64,
    pub p_max1_mw: f64,
    pub p_max2_mw: f64,
    // Objective weights and penalty.
    pub w_time: f64,
    pub w_energy: f64,
    /// Negative means auto (half the mean per-user cost scale).
    pub zeta: f64,
    // Dataset.
    pub dataset_path: Option<PathBuf>,
    pub fill_links: bool,
    pub graph_style: GraphStyle,
    pub band_width: usize,
    // Method and sweep.
    pub method: Method,
    pub sweep_users: Vec<usize>,
    pub sweep_assoc: Vec<usize>,
    pub position_shuffle_steps: usize,
    pub seeds: Vec<u64>,
    // Training.
    pub episodes: usize,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub learning_rate: f64,
    pub gamma: f64,
    pub tau: f64,
    pub exploration_rate: f64,
    pub reward_scale: f64,
    pub train_interval: usize,
    pub warmup_steps: usize,
    pub shared_reward: bool,
    pub hidden: Vec<usize>,
    pub change_rate: f64,
    pub train_seed: u64,
    pub ppo_clip: f64,
    pub ppo_epochs: usize,
    // Checkpoints.
    pub checkpoint: Option<PathBuf>,
    pub checkpoint_drlgo: Option<PathBuf>,
    pub checkpoint_drl_only: Option<PathBuf>,
    // Partition benchmark.
    pub bench_sparse: Vec<LadderPoint>,
    pub bench_non_sparse: Vec<LadderPoint>,
    pub bench_servers: usize,
    pub bench_weight_min: i64,
    pub bench_weight_max: i64,
    pub bench_runs: usize,
    pub bench_seed: u64,
    // Ablation.
    pub ablate_datasets: Vec<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            plane_width: 1000.0,
            plane_height: 1000.0,
            scope_width: 500.0,
            scope_height: 500.0,
            n_servers: 4,
            n_users: 30,
            n_assoc: 90,
            user_slots: 0,
            task_kb: 1433.0,
            user_power_min_mw: 2.0,
            user_power_max_mw: 5.0,
            server_power_min_mw: 10.0,
            server_power_max_mw: 15.0,
            bandwidth_user_min_mhz: 20.0,
            bandwidth_user_max_mhz: 50.0,
            bandwidth_server_mhz: 100.0,
            noise_dbm: -110.0,
            ref_gain: 1e-3,
            server_gain: 1e-5,
            cpu_rate_min_gbps: 2.0,
            cpu_rate_max_gbps: 10.0,
            upload_cost_mj_per_mb: 3.0,
            transfer_cost_mj_per_mb: 5.0,
            agg_cost_pj_per_bit: 20.0,
            upd_cost_pj_per_bit: 100.0,
            act_cost_pj_per_bit: 50.0,
            gnn_layers: 2,
            gnn_layer_sizes_kb: vec![64.0, 32.0, 16.0],
            gnn_model: GnnModel::Gcn,
            b_max1_mhz: 0.0,
            b_max2_mhz: 0.0,
            p_max1_mw: 1500.0,
            p_max2_mw: 60.0,
            w_time: 1.0,
            w_energy: 1.0,
            zeta: -1.0,
            dataset_path: None,
            fill_links: false,
            graph_style: GraphStyle::Uniform,
            band_width: 4,
            method: Method::Gm,
            sweep_users: Vec::new(),
            sweep_assoc: Vec::new(),
            position_shuffle_steps: 0,
            seeds: (1..=10).collect(),
            episodes: 500,
            batch_size: 256,
            buffer_capacity: 100_000,
            learning_rate: 3e-4,
            gamma: 0.99,
            tau: 0.01,
            exploration_rate: 0.1,
            reward_scale: 0.02,
            train_interval: 1,
            warmup_steps: 256,
            shared_reward: true,
            hidden: vec![64, 64, 64],
            change_rate: 0.2,
            train_seed: 1,
            ppo_clip: 0.2,
            ppo_epochs: 4,
            checkpoint: None,
            checkpoint_drlgo: None,
            checkpoint_drl_only: None,
            bench_sparse: vec![
                LadderPoint { n_vertices: 500, n_edges: 5_010 },
                LadderPoint { n_vertices: 1_000, n_edges: 15_010 },
                LadderPoint { n_vertices: 2_000, n_edges: 40_010 },
                LadderPoint { n_vertices: 5_000, n_edges: 200_010 },
            ],
            bench_non_sparse: vec![
                LadderPoint { n_vertices: 500, n_edges: 500_100 },
                LadderPoint { n_vertices: 1_000, n_edges: 1_000_200 },
                LadderPoint { n_vertices: 2_000, n_edges: 2_000_400 },
            ],
            bench_servers: 25,
            bench_weight_min: 1,
            bench_weight_max: 100,
            bench_runs: 5,
            bench_seed: 1,
            ablate_datasets: Vec::new(),
        }
    }
}

fn bad(field: &str, value: &str, want: &str) -> HarnessError {
    HarnessError::Config(format!("field `{field}`: `{value}` is not {want}"))
}

fn parse_f64(field: &str, v: &str) -> Result<f64, HarnessError> {
    v.parse().map_err(|_| bad(field, v, "a number"))
}

fn parse_usize(field: &str, v: &str) -> Result<usize, HarnessError> {
    v.parse().map_err(|_| bad(field, v, "a count"))
}

fn parse_u64(field: &str, v: &str) -> Result<u64, HarnessError> {
    v.parse().map_err(|_| bad(field, v, "a seed"))
}

fn parse_i64(field: &str, v: &str) -> Result<i64, HarnessError> {
    v.parse().map_err(|_| bad(field, v, "an integer"))
}

fn parse_bool(field: &str, v: &str) -> Result<bool, HarnessError> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(bad(field, v, "a boolean")),
    }
}

fn parse_list<T, F: Fn(&str, &str) -> Result<T, HarnessError>>(
    field: &str,
    v: &str,
    f: F,
) -> Result<Vec<T>, HarnessError> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|part| f(field, part.trim())).collect()
}

fn parse_ladder(field: &str, v: &str) -> Result<Vec<LadderPoint>, HarnessError> {
    parse_list(field, v, |field, part| {
        let (n, e) = part
            .split_once(':')
            .ok_or_else(|| bad(field, part, "a `<vertices>:<edges>` pair"))?;
        Ok(LadderPoint {
            n_vertices: parse_usize(field, n.trim())?,
            n_edges: parse_usize(field, e.trim())?,
        })
    })
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            HarnessError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_str_checked(&text)
    }

    pub fn from_str_checked(text: &str) -> Result<Self, HarnessError> {
        let mut config = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                HarnessError::Config(format!("line {}: expected `key = value`", i + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            config.set(key, value)?;
        }
        config.validate()?;
        Ok(config)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        match key {
            "plane_width" => self.plane_width = parse_f64(key, value)?,
            "plane_height" => self.plane_height = parse_f64(key, value)?,
            "scope_width" => self.scope_width = parse_f64(key, value)?,
            "scope_height" => self.scope_height = parse_f64(key, value)?,
            "n_servers" => self.n_servers = parse_usize(key, value)?,
            "n_users" => self.n_users = parse_usize(key, value)?,
            "n_assoc" => self.n_assoc = parse_usize(key, value)?,
            "user_slots" => self.user_slots = parse_usize(key, value)?,
            "task_kb" => self.task_kb = parse_f64(key, value)?,
            "user_power_min_mw" => self.user_power_min_mw = parse_f64(key, value)?,
            "user_power_max_mw" => self.user_power_max_mw = parse_f64(key, value)?,
            "server_power_min_mw" => self.server_power_min_mw = parse_f64(key, value)?,
            "server_power_max_mw" => self.server_power_max_mw = parse_f64(key, value)?,
            "bandwidth_user_min_mhz" => self.bandwidth_user_min_mhz = parse_f64(key, value)?,
            "bandwidth_user_max_mhz" => self.bandwidth_user_max_mhz = parse_f64(key, value)?,
            "bandwidth_server_mhz" => self.bandwidth_server_mhz = parse_f64(key, value)?,
            "noise_dbm" => self.noise_dbm = parse_f64(key, value)?,
            "ref_gain" => self.ref_gain = parse_f64(key, value)?,
            "server_gain" => self.server_gain = parse_f64(key, value)?,
            "cpu_rate_min_gbps" => self.cpu_rate_min_gbps = parse_f64(key, value)?,
            "cpu_rate_max_gbps" => self.cpu_rate_max_gbps = parse_f64(key, value)?,
            "upload_cost_mj_per_mb" => self.upload_cost_mj_per_mb = parse_f64(key, value)?,
            "transfer_cost_mj_per_mb" => self.transfer_cost_mj_per_mb = parse_f64(key, value)?,
            "agg_cost_pj_per_bit" => self.agg_cost_pj_per_bit = parse_f64(key, value)?,
            "upd_cost_pj_per_bit" => self.upd_cost_pj_per_bit = parse_f64(key, value)?,
            "act_cost_pj_per_bit" => self.act_cost_pj_per_bit = parse_f64(key, value)?,
            "gnn_layers" => self.gnn_layers = parse_usize(key, value)?,
            "gnn_layer_sizes_kb" => {
                self.gnn_layer_sizes_kb = parse_list(key, value, parse_f64)?
            }
            "gnn_model" => {
                self.gnn_model = GnnModel::parse(value)
                    .ok_or_else(|| bad(key, value, "one of gcn/gat/sage/sgc"))?
            }
            "b_max1_mhz" => self.b_max1_mhz = parse_f64(key, value)?,
            "b_max2_mhz" => self.b_max2_mhz = parse_f64(key, value)?,
            "p_max1_mw" => self.p_max1_mw = parse_f64(key, value)?,
            "p_max2_mw" => self.p_max2_mw = parse_f64(key, value)?,
            "w_time" => self.w_time = parse_f64(key, value)?,
            "w_energy" => self.w_energy = parse_f64(key, value)?,
            "zeta" => {
                self.zeta = if value == "auto" {
                    -1.0
                } else {
                    parse_f64(key, value)?
                }
            }
            "dataset_path" => self.dataset_path = Some(PathBuf::from(value)),
            "fill_links" => self.fill_links = parse_bool(key, value)?,
            "graph_style" => {
                self.graph_style = GraphStyle::parse(value)
                    .ok_or_else(|| bad(key, value, "one of uniform/banded"))?
            }
            "band_width" => self.band_width = parse_usize(key, value)?,
            "method" => {
                self.method = Method::parse(value)
                    .ok_or_else(|| bad(key, value, "one of drlgo/ptom/gm/rm/drl_only"))?
            }
            "sweep_users" => self.sweep_users = parse_list(key, value, parse_usize)?,
            "sweep_assoc" => self.sweep_assoc = parse_list(key, value, parse_usize)?,
            "position_shuffle_steps" => {
                self.position_shuffle_steps = parse_usize(key, value)?
            }
            "seeds" => self.seeds = parse_list(key, value, parse_u64)?,
            "episodes" => self.episodes = parse_usize(key, value)?,
            "batch_size" => self.batch_size = parse_usize(key, value)?,
            "buffer_capacity" => self.buffer_capacity = parse_usize(key, value)?,
            "learning_rate" => self.learning_rate = parse_f64(key, value)?,
            "gamma" => self.gamma = parse_f64(key, value)?,
            "tau" => self.tau = parse_f64(key, value)?,
            "exploration_rate" => self.exploration_rate = parse_f64(key, value)?,
            "reward_scale" => self.reward_scale = parse_f64(key, value)?,
            "train_interval" => self.train_interval = parse_usize(key, value)?,
            "warmup_steps" => self.warmup_steps = parse_usize(key, value)?,
            "reward_mode" => {
                self.shared_reward = match value {
                    "shared" => true,
                    "per_agent" => false,
                    _ => return Err(bad(key, value, "one of shared/per_agent")),
                }
            }
            "hidden" => self.hidden = parse_list(key, value, parse_usize)?,
            "change_rate" => self.change_rate = parse_f64(key, value)?,
            "train_seed" => self.train_seed = parse_u64(key, value)?,
            "ppo_clip" => self.ppo_clip = parse_f64(key, value)?,
            "ppo_epochs" => self.ppo_epochs = parse_usize(key, value)?,
            "checkpoint" => self.checkpoint = Some(PathBuf::from(value)),
            "checkpoint_drlgo" => self.checkpoint_drlgo = Some(PathBuf::from(value)),
            "checkpoint_drl_only" => self.checkpoint_drl_only = Some(PathBuf::from(value)),
            "bench_sparse" => self.bench_sparse = parse_ladder(key, value)?,
            "bench_non_sparse" => self.bench_non_sparse = parse_ladder(key, value)?,
            "bench_servers" => self.bench_servers = parse_usize(key, value)?,
            "bench_weight_min" => self.bench_weight_min = parse_i64(key, value)?,
            "bench_weight_max" => self.bench_weight_max = parse_i64(key, value)?,
            "bench_runs" => self.bench_runs = parse_usize(key, value)?,
            "bench_seed" => self.bench_seed = parse_u64(key, value)?,
            "ablate_datasets" => {
                self.ablate_datasets = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| PathBuf::from(s.trim()))
                    .collect()
            }
            _ => {
                return Err(HarnessError::Config(format!("unknown field `{key}`")));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.n_servers == 0 {
            return Err(HarnessError::Config("field `n_servers`: must be positive".into()));
        }
        if self.n_users == 0 {
            return Err(HarnessError::Config("field `n_users`: must be positive".into()));
        }
        if self.seeds.is_empty() {
            return Err(HarnessError::Config("field `seeds`: must not be empty".into()));
        }
        if self.gnn_layer_sizes_kb.len() != self.gnn_layers + 1 {
            return Err(HarnessError::Config(format!(
                "field `gnn_layer_sizes_kb`: needs {} entries for {} layers",
                self.gnn_layers + 1,
                self.gnn_layers
            )));
        }
        if !self.sweep_assoc.is_empty() && self.sweep_assoc.len() != self.sweep_users.len() {
            return Err(HarnessError::Config(
                "field `sweep_assoc`: must pair up with `sweep_users`".into(),
            ));
        }
        if let Some(path) = &self.dataset_path {
            if !path.exists() {
                return Err(HarnessError::Config(format!(
                    "field `dataset_path`: {} does not exist",
                    path.display()
                )));
            }
        }
        for path in &self.ablate_datasets {
            if !path.exists() {
                return Err(HarnessError::Config(format!(
                    "field `ablate_datasets`: {} does not exist",
                    path.display()
                )));
            }
        }
        if self.sweep_users.iter().any(|&u| u == 0) {
            return Err(HarnessError::Config(
                "field `sweep_users`: entries must be positive".into(),
            ));
        }
        if self.change_rate < 0.0 || self.change_rate > 1.0 {
            return Err(HarnessError::Config(
                "field `change_rate`: must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    /// Sweep points: explicit pairs, users with the default density, or the
    /// single configured point.
    pub fn sweep_points(&self) -> Vec<(usize, usize)> {
        if self.sweep_users.is_empty() {
            return vec![(self.n_users, self.n_assoc)];
        }
        if self.sweep_assoc.is_empty() {
            let ratio = self.n_assoc as f64 / self.n_users as f64;
            return self
                .sweep_users
                .iter()
                .map(|&u| (u, (u as f64 * ratio).round() as usize))
                .collect();
        }
        self.sweep_users
            .iter()
            .copied()
            .zip(self.sweep_assoc.iter().copied())
            .collect()
    }

    /// User slot count: explicit, or the largest sweep point plus headroom
    /// for add-user events.
    pub fn effective_slots(&self) -> usize {
        if self.user_slots > 0 {
            return self.user_slots;
        }
        let peak = self
            .sweep_points()
            .iter()
            .map(|&(u, _)| u)
            .max()
            .unwrap_or(self.n_users);
        peak + (peak as f64 * self.change_rate).ceil() as usize
    }

    /// The dataset tag written into CSV rows.
    pub fn dataset_name(&self) -> String {
        match &self.dataset_path {
            Some(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".into()),
            None => "synthetic".into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_from_empty() {
        let c = ExperimentConfig::from_str_checked("").unwrap();
        assert_eq!(c.n_users, 30);
        assert_eq!(c.method, Method::Gm);
        assert_eq!(c.seeds.len(), 10);
    }

    #[test]
    fn parses_overrides_and_comments() {
        let text = "\
# a comment
method = drlgo
n_users = 12
sweep_users = 50, 100
seeds = 1,2,3
bench_sparse = 500:5010, 1000:15010
gnn_model = sage
zeta = 3.5
";
        let c = ExperimentConfig::from_str_checked(text).unwrap();
        assert_eq!(c.method, Method::Drlgo);
        assert_eq!(c.n_users, 12);
        assert_eq!(c.sweep_users, vec![50, 100]);
        assert_eq!(c.seeds, vec![1, 2, 3]);
        assert_eq!(c.bench_sparse.len(), 2);
        assert_eq!(c.gnn_model, GnnModel::Sage);
        assert_eq!(c.zeta, 3.5);
    }

    #[test]
    fn unknown_field_is_named() {
        let err = ExperimentConfig::from_str_checked("method = gm\nbogus_key = 7\n").unwrap_err();
        assert!(err.to_string().contains("bogus_key"));
    }

    #[test]
    fn bad_value_names_the_field() {
        let err = ExperimentConfig::from_str_checked("n_users = many\n").unwrap_err();
        assert!(err.to_string().contains("n_users"));
    }

    #[test]
    fn missing_dataset_is_rejected() {
        let err =
            ExperimentConfig::from_str_checked("dataset_path = /no/such/file.txt\n").unwrap_err();
        assert!(err.to_string().contains("dataset_path"));
    }

    #[test]
    fn empty_seeds_rejected() {
        let err = ExperimentConfig::from_str_checked("seeds = \n").unwrap_err();
        assert!(err.to_string().contains("seeds"));
    }

    #[test]
    fn sweep_points_pair_or_scale() {
        let mut c = ExperimentConfig::default();
        c.sweep_users = vec![50, 100];
        c.sweep_assoc = vec![300, 600];
        assert_eq!(c.sweep_points(), vec![(50, 300), (100, 600)]);
        c.sweep_assoc.clear();
        // Default density is n_assoc / n_users = 3 edges per user.
        assert_eq!(c.sweep_points(), vec![(50, 150), (100, 300)]);
    }
}
