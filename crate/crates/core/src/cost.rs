//! Communication and computation cost model: free-space link rates,
//! upload/transfer delay and energy, per-layer GNN inference energy, the
//! weighted system objective, and a reference dense GCN forward pass.
//!
//! Unit conventions, applied everywhere:
//! - powers in linear milliwatts (dBm inputs are converted once),
//! - bandwidths in MHz, rates in Mb/s,
//! - data sizes in kilobits, converted to megabits or bits at use sites,
//! - times in seconds, energies in millijoules,
//! - per-bit GNN constants in picojoules per bit.

use crate::graph::GraphLayout;
use crate::linalg::Mat;
use thiserror::Error;

pub const KILOBITS_PER_MEGABIT: f64 = 1000.0;
pub const BITS_PER_KILOBIT: f64 = 1000.0;
pub const MILLIJOULES_PER_PICOJOULE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum CostError {
    #[error("server {0} has non-positive processing rate")]
    InvalidServerRate(usize),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("constraint {0} violated: {1}")]
    ConstraintViolation(&'static str, String),
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// GNN architecture preset, realized as a multiplier on the per-bit
/// aggregation/update costs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GnnModel {
    Gcn,
    Gat,
    Sage,
    Sgc,
}

impl GnnModel {
    pub fn cost_multiplier(self) -> f64 {
        match self {
            GnnModel::Gcn => 1.0,
            GnnModel::Gat => 1.3,
            GnnModel::Sage => 1.2,
            GnnModel::Sgc => 0.8,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "gcn" => Some(GnnModel::Gcn),
            "gat" => Some(GnnModel::Gat),
            "sage" => Some(GnnModel::Sage),
            "sgc" => Some(GnnModel::Sgc),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GnnModel::Gcn => "gcn",
            GnnModel::Gat => "gat",
            GnnModel::Sage => "sage",
            GnnModel::Sgc => "sgc",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServerSpec {
    pub position: (f64, f64),
    /// Effective data-processing rate in kb/s.
    pub cpu_rate_kbps: f64,
    /// Service capacity in tasks.
    pub capacity: usize,
    pub tx_power_mw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitCosts {
    /// Upload energy per megabit, user to AP.
    pub upload_mj_per_mb: f64,
    /// Transfer energy per megabit, server to server.
    pub transfer_mj_per_mb: f64,
    /// Aggregation cost per bit.
    pub agg_pj_per_bit: f64,
    /// Update cost per bit.
    pub upd_pj_per_bit: f64,
    /// Activation cost per bit.
    pub act_pj_per_bit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnnCostSpec {
    /// Number of layers F.
    pub layers: usize,
    /// Feature sizes S_0..S_F in kilobits (length F + 1).
    pub layer_sizes_kb: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResourceCaps {
    pub bandwidth_user_total_mhz: f64,
    pub bandwidth_server_total_mhz: f64,
    pub user_power_total_mw: f64,
    pub server_power_total_mw: f64,
}

/// The edge network: servers with co-located APs, per-slot user radio
/// parameters, per-bit cost constants, and resource caps. Immutable after
/// construction; `new` rejects configurations that break the resource caps
/// or use non-positive rates/powers.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub plane: (f64, f64),
    /// Service scope (width, height) of every server, centered on it.
    pub scope: (f64, f64),
    pub servers: Vec<ServerSpec>,
    /// Per user slot, mW.
    pub user_tx_power_mw: Vec<f64>,
    /// [user slot][server], MHz.
    pub bandwidth_user_ap_mhz: Vec<Vec<f64>>,
    /// [k][l], MHz; diagonal unused.
    pub bandwidth_server_mhz: Vec<Vec<f64>>,
    /// Noise power, linear mW.
    pub noise_mw: f64,
    /// Channel gain at 1 m.
    pub ref_gain: f64,
    /// Server-to-server channel gain.
    pub server_gain: f64,
    pub unit: UnitCosts,
    pub gnn: GnnCostSpec,
    pub caps: ResourceCaps,
    /// (w_T, w_I): weights on total time (s) and total energy (mJ).
    pub cost_weights: (f64, f64),
}

impl Scenario {
    pub fn new(scenario: Scenario) -> Result<Scenario, CostError> {
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn n_servers(&self) -> usize {
        self.servers.len()
    }

    pub fn user_slots(&self) -> usize {
        self.user_tx_power_mw.len()
    }

    pub fn validate(&self) -> Result<(), CostError> {
        let m = self.servers.len();
        if self.bandwidth_user_ap_mhz.len() != self.user_slots()
            || self.bandwidth_user_ap_mhz.iter().any(|row| row.len() != m)
        {
            return Err(CostError::ShapeMismatch(
                "user-AP bandwidth matrix must be slots x servers".into(),
            ));
        }
        if self.bandwidth_server_mhz.len() != m
            || self.bandwidth_server_mhz.iter().any(|row| row.len() != m)
        {
            return Err(CostError::ShapeMismatch(
                "server bandwidth matrix must be servers x servers".into(),
            ));
        }
        if self.gnn.layer_sizes_kb.len() != self.gnn.layers + 1 {
            return Err(CostError::ShapeMismatch(
                "gnn layer sizes must have layers + 1 entries".into(),
            ));
        }
        for (k, sv) in self.servers.iter().enumerate() {
            if sv.cpu_rate_kbps <= 0.0 {
                return Err(CostError::ConstraintViolation(
                    "C2",
                    format!("server {k} processing rate must be positive"),
                ));
            }
            if sv.tx_power_mw <= 0.0 {
                return Err(CostError::ConstraintViolation(
                    "C6",
                    format!("server {k} power must be positive"),
                ));
            }
        }
        if self.noise_mw <= 0.0 || self.ref_gain <= 0.0 || self.server_gain <= 0.0 {
            return Err(CostError::ShapeMismatch(
                "noise and channel gains must be positive".into(),
            ));
        }
        if self.user_tx_power_mw.iter().any(|&p| p <= 0.0) {
            return Err(CostError::ConstraintViolation(
                "C5",
                "user powers must be positive".into(),
            ));
        }
        if self
            .bandwidth_user_ap_mhz
            .iter()
            .flatten()
            .any(|&b| b <= 0.0)
        {
            return Err(CostError::ConstraintViolation(
                "C3",
                "user-AP bandwidths must be positive".into(),
            ));
        }
        let b1: f64 = self.bandwidth_user_ap_mhz.iter().flatten().sum();
        if b1 > self.caps.bandwidth_user_total_mhz {
            return Err(CostError::ConstraintViolation(
                "C3",
                format!(
                    "user-AP bandwidth sum {b1} MHz exceeds cap {} MHz",
                    self.caps.bandwidth_user_total_mhz
                ),
            ));
        }
        let mut b2 = 0.0;
        for k in 0..m {
            for l in 0..m {
                if k != l {
                    if self.bandwidth_server_mhz[k][l] <= 0.0 {
                        return Err(CostError::ConstraintViolation(
                            "C4",
                            "server bandwidths must be positive".into(),
                        ));
                    }
                    b2 += self.bandwidth_server_mhz[k][l];
                }
            }
        }
        if b2 > self.caps.bandwidth_server_total_mhz {
            return Err(CostError::ConstraintViolation(
                "C4",
                format!(
                    "server bandwidth sum {b2} MHz exceeds cap {} MHz",
                    self.caps.bandwidth_server_total_mhz
                ),
            ));
        }
        let p1: f64 = self.user_tx_power_mw.iter().sum();
        if p1 > self.caps.user_power_total_mw {
            return Err(CostError::ConstraintViolation(
                "C5",
                format!(
                    "user power sum {p1} mW exceeds cap {} mW",
                    self.caps.user_power_total_mw
                ),
            ));
        }
        let p2: f64 = self.servers.iter().map(|s| s.tx_power_mw).sum();
        if p2 > self.caps.server_power_total_mw {
            return Err(CostError::ConstraintViolation(
                "C6",
                format!(
                    "server power sum {p2} mW exceeds cap {} mW",
                    self.caps.server_power_total_mw
                ),
            ));
        }
        Ok(())
    }

    /// Whether a position lies in server `m`'s service scope.
    pub fn in_scope(&self, m: usize, pos: (f64, f64)) -> bool {
        let (sx, sy) = self.servers[m].position;
        (pos.0 - sx).abs() <= self.scope.0 / 2.0 && (pos.1 - sy).abs() <= self.scope.1 / 2.0
    }
}

/// Per-user server assignment (the binary offload matrix, sparsely stored).
#[derive(Debug, Clone, PartialEq)]
pub struct OffloadDecision {
    assignment: Vec<Option<usize>>,
}

impl OffloadDecision {
    pub fn empty(slots: usize) -> Self {
        Self {
            assignment: vec![None; slots],
        }
    }

    pub fn assign(&mut self, user: usize, server: usize) {
        self.assignment[user] = Some(server);
    }

    pub fn server_of(&self, user: usize) -> Option<usize> {
        self.assignment.get(user).copied().flatten()
    }

    pub fn assigned_count(&self) -> usize {
        self.assignment.iter().filter(|a| a.is_some()).count()
    }

    pub fn load(&self, server: usize) -> usize {
        self.assignment
            .iter()
            .filter(|a| **a == Some(server))
            .count()
    }

    /// C1 (every active user on exactly one server) plus per-server capacity.
    pub fn check(&self, layout: &GraphLayout, scenario: &Scenario) -> Result<(), CostError> {
        let mut loads = vec![0usize; scenario.n_servers()];
        for user in layout.active_vertices() {
            match self.server_of(user) {
                Some(k) if k < scenario.n_servers() => loads[k] += 1,
                Some(k) => {
                    return Err(CostError::ConstraintViolation(
                        "C1",
                        format!("user {user} assigned to unknown server {k}"),
                    ))
                }
                None => {
                    return Err(CostError::ConstraintViolation(
                        "C1",
                        format!("active user {user} is unassigned"),
                    ))
                }
            }
        }
        for (k, &load) in loads.iter().enumerate() {
            if load > scenario.servers[k].capacity {
                return Err(CostError::ConstraintViolation(
                    "capacity",
                    format!(
                        "server {k} load {load} exceeds capacity {}",
                        scenario.servers[k].capacity
                    ),
                ));
            }
        }
        Ok(())
    }
}

/// Componentwise cost of one evaluated decision.
#[derive(Debug, Clone, PartialEq)]
pub struct CostBreakdown {
    pub t_upload_s: f64,
    pub t_transfer_s: f64,
    pub t_compute_s: f64,
    pub t_all_s: f64,
    pub i_upload_mj: f64,
    pub i_transfer_mj: f64,
    pub i_agg_mj: f64,
    pub i_upd_mj: f64,
    pub i_all_mj: f64,
    /// Weighted objective w_T * T_all + w_I * I_all.
    pub cost: f64,
    /// Zero-distance gain clamps encountered during evaluation.
    pub clamp_warnings: usize,
}

/// Free-space path loss gain at `distance_m`, with the zero-distance
/// singularity clamped to the 1 m reference. Returns the gain and whether
/// the clamp fired.
pub fn channel_gain_clamped(ref_gain: f64, distance_m: f64) -> (f64, bool) {
    if distance_m <= 0.0 {
        (ref_gain, true)
    } else {
        (ref_gain / (distance_m * distance_m), false)
    }
}

pub fn channel_gain(ref_gain: f64, distance_m: f64) -> f64 {
    channel_gain_clamped(ref_gain, distance_m).0
}

/// Shannon-style rate in Mb/s, with all powers in a single linear unit.
pub fn shannon_rate_mbps(bandwidth_mhz: f64, power_mw: f64, gain: f64, noise_mw: f64) -> f64 {
    bandwidth_mhz * (1.0 + power_mw * gain / noise_mw).log2()
}

pub fn distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Uplink rate between user `i` and the AP of server `m` at the given
/// distance, in Mb/s.
pub fn uplink_rate(scenario: &Scenario, i: usize, m: usize, distance_m: f64) -> f64 {
    let gain = channel_gain(scenario.ref_gain, distance_m);
    shannon_rate_mbps(
        scenario.bandwidth_user_ap_mhz[i][m],
        scenario.user_tx_power_mw[i],
        gain,
        scenario.noise_mw,
    )
}

/// Server-to-server transfer rate in Mb/s. The source server's power and
/// the inter-server gain set the SNR.
pub fn server_rate(scenario: &Scenario, k: usize, l: usize) -> f64 {
    shannon_rate_mbps(
        scenario.bandwidth_server_mhz[k][l],
        scenario.servers[k].tx_power_mw,
        scenario.server_gain,
        scenario.noise_mw,
    )
}

/// Upload delay and energy for user `i` offloading to server `m`.
/// When the user is not assigned to `m` both are zero.
pub fn upload_cost(
    scenario: &Scenario,
    layout: &GraphLayout,
    i: usize,
    m: usize,
    assigned: bool,
) -> (f64, f64) {
    if !assigned {
        return (0.0, 0.0);
    }
    let x_mb = layout.task_kb(i) / KILOBITS_PER_MEGABIT;
    let d = distance(layout.position(i), scenario.servers[m].position);
    let rate = uplink_rate(scenario, i, m, d);
    let time = if x_mb == 0.0 { 0.0 } else { x_mb / rate };
    let energy = x_mb * scenario.unit.upload_mj_per_mb;
    (time, energy)
}

/// Inter-server traffic produced by a decision.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferCost {
    pub time_s: f64,
    pub energy_mj: f64,
    /// Directed traffic in Mb: `mb_by_pair[k][l]` is data flowing k -> l.
    pub mb_by_pair: Vec<Vec<f64>>,
}

/// Traffic, delay, and energy of moving neighbor data between servers.
///
/// Each adjacent pair (i, j) with i on k and j on l != k contributes X_i to
/// the k -> l flow and X_j to the l -> k flow. Delay and energy are charged
/// once per unordered server pair on the combined two-way traffic, using
/// the lower-indexed server's rate.
pub fn transfer_cost(
    scenario: &Scenario,
    decision: &OffloadDecision,
    layout: &GraphLayout,
) -> TransferCost {
    let m = scenario.n_servers();
    let mut mb_by_pair = vec![vec![0.0; m]; m];
    for (i, j) in layout.edges() {
        if let (Some(k), Some(l)) = (decision.server_of(i), decision.server_of(j)) {
            if k != l {
                mb_by_pair[k][l] += layout.task_kb(i) / KILOBITS_PER_MEGABIT;
                mb_by_pair[l][k] += layout.task_kb(j) / KILOBITS_PER_MEGABIT;
            }
        }
    }
    let mut time_s = 0.0;
    let mut energy_mj = 0.0;
    for k in 0..m {
        for l in (k + 1)..m {
            let both_ways = mb_by_pair[k][l] + mb_by_pair[l][k];
            if both_ways > 0.0 {
                time_s += both_ways / server_rate(scenario, k, l);
                energy_mj += both_ways * scenario.unit.transfer_mj_per_mb;
            }
        }
    }
    TransferCost {
        time_s,
        energy_mj,
        mb_by_pair,
    }
}

/// Inference time of one task of size `x_kb` on server `k`.
pub fn compute_time(
    scenario: &Scenario,
    k: usize,
    x_kb: f64,
    assigned: bool,
) -> Result<f64, CostError> {
    let rate = scenario.servers[k].cpu_rate_kbps;
    if rate <= 0.0 {
        return Err(CostError::InvalidServerRate(k));
    }
    if !assigned {
        return Ok(0.0);
    }
    Ok(x_kb / rate)
}

/// Per-layer GNN inference energy over all active users:
/// aggregation (neighbor gathers) and update (feature transform plus
/// activation), in millijoules.
pub fn gnn_energy(scenario: &Scenario, layout: &GraphLayout) -> (f64, f64) {
    let sizes = &scenario.gnn.layer_sizes_kb;
    let mut agg_pj = 0.0;
    let mut upd_pj = 0.0;
    let degree_sum: f64 = layout
        .active_vertices()
        .map(|v| layout.neighbors(v).len() as f64)
        .sum();
    for kappa in 1..=scenario.gnn.layers {
        let s_prev_bits = sizes[kappa - 1] * BITS_PER_KILOBIT;
        let s_cur_bits = sizes[kappa] * BITS_PER_KILOBIT;
        agg_pj += scenario.unit.agg_pj_per_bit * degree_sum * s_prev_bits;
        upd_pj += scenario.unit.upd_pj_per_bit * s_prev_bits * s_cur_bits
            + scenario.unit.act_pj_per_bit * s_cur_bits;
    }
    (
        agg_pj * MILLIJOULES_PER_PICOJOULE,
        upd_pj * MILLIJOULES_PER_PICOJOULE,
    )
}

/// Aggregation energy share of a single user, summed over layers.
/// Used by the environment to attribute marginal costs exactly.
pub fn gnn_agg_energy_for_user(scenario: &Scenario, degree: usize) -> f64 {
    let sizes = &scenario.gnn.layer_sizes_kb;
    let mut agg_pj = 0.0;
    for kappa in 1..=scenario.gnn.layers {
        agg_pj +=
            scenario.unit.agg_pj_per_bit * degree as f64 * sizes[kappa - 1] * BITS_PER_KILOBIT;
    }
    agg_pj * MILLIJOULES_PER_PICOJOULE
}

/// Update-phase energy (decision independent), in millijoules.
pub fn gnn_upd_energy(scenario: &Scenario) -> f64 {
    let sizes = &scenario.gnn.layer_sizes_kb;
    let mut upd_pj = 0.0;
    for kappa in 1..=scenario.gnn.layers {
        let s_prev_bits = sizes[kappa - 1] * BITS_PER_KILOBIT;
        let s_cur_bits = sizes[kappa] * BITS_PER_KILOBIT;
        upd_pj += scenario.unit.upd_pj_per_bit * s_prev_bits * s_cur_bits
            + scenario.unit.act_pj_per_bit * s_cur_bits;
    }
    upd_pj * MILLIJOULES_PER_PICOJOULE
}

/// Full system cost of a decision: upload + transfer + compute time,
/// upload + transfer + aggregation + update energy, and the weighted
/// objective.
pub fn system_cost(
    scenario: &Scenario,
    layout: &GraphLayout,
    decision: &OffloadDecision,
) -> Result<CostBreakdown, CostError> {
    scenario.validate()?;
    decision.check(layout, scenario)?;

    let mut t_upload = 0.0;
    let mut i_upload = 0.0;
    let mut t_compute = 0.0;
    let mut clamp_warnings = 0usize;
    for i in layout.active_vertices() {
        let m = decision.server_of(i).expect("checked above");
        let d = distance(layout.position(i), scenario.servers[m].position);
        if d <= 0.0 {
            clamp_warnings += 1;
        }
        let (t, e) = upload_cost(scenario, layout, i, m, true);
        t_upload += t;
        i_upload += e;
        t_compute += compute_time(scenario, m, layout.task_kb(i), true)?;
    }
    let transfer = transfer_cost(scenario, decision, layout);
    let (i_agg, i_upd) = gnn_energy(scenario, layout);

    let t_all = t_upload + transfer.time_s + t_compute;
    let i_all = i_upload + transfer.energy_mj + i_agg + i_upd;
    let (w_t, w_i) = scenario.cost_weights;
    Ok(CostBreakdown {
        t_upload_s: t_upload,
        t_transfer_s: transfer.time_s,
        t_compute_s: t_compute,
        t_all_s: t_all,
        i_upload_mj: i_upload,
        i_transfer_mj: transfer.energy_mj,
        i_agg_mj: i_agg,
        i_upd_mj: i_upd,
        i_all_mj: i_all,
        cost: w_t * t_all + w_i * i_all,
        clamp_warnings,
    })
}

/// The inter-server transfer energy alone.
pub fn cross_server_cost(
    scenario: &Scenario,
    layout: &GraphLayout,
    decision: &OffloadDecision,
) -> f64 {
    transfer_cost(scenario, decision, layout).energy_mj
}

/// Two-layer GCN forward pass with symmetric-normalized self-looped
/// adjacency, ReLU between the layers and identity output activation:
/// `out = Ahat * relu(Ahat * X * W0) * W1`.
pub fn gcn_forward(adjacency: &Mat, features: &Mat, w0: &Mat, w1: &Mat) -> Result<Mat, CostError> {
    let n = adjacency.rows();
    if adjacency.cols() != n {
        return Err(CostError::ShapeMismatch("adjacency must be square".into()));
    }
    for i in 0..n {
        for j in 0..n {
            let a = adjacency[(i, j)];
            if a != 0.0 && a != 1.0 {
                return Err(CostError::ShapeMismatch(
                    "adjacency entries must be 0 or 1".into(),
                ));
            }
            if a != adjacency[(j, i)] {
                return Err(CostError::ShapeMismatch("adjacency must be symmetric".into()));
            }
        }
        if adjacency[(i, i)] != 0.0 {
            return Err(CostError::ShapeMismatch(
                "adjacency must have a zero diagonal; self-loops are added internally".into(),
            ));
        }
    }
    if features.rows() != n {
        return Err(CostError::ShapeMismatch(
            "features must have one row per vertex".into(),
        ));
    }
    if w0.rows() != features.cols() || w1.rows() != w0.cols() {
        return Err(CostError::ShapeMismatch(
            "weight shapes are not conformable".into(),
        ));
    }

    // Ahat = D^{-1/2} (A + I) D^{-1/2} with D the self-looped degrees.
    let mut ahat = Mat::zeros(n, n);
    let mut inv_sqrt_deg = vec![0.0; n];
    for i in 0..n {
        let mut deg = 1.0;
        for j in 0..n {
            deg += adjacency[(i, j)];
        }
        inv_sqrt_deg[i] = 1.0 / deg.sqrt();
    }
    for i in 0..n {
        for j in 0..n {
            let a = adjacency[(i, j)] + if i == j { 1.0 } else { 0.0 };
            ahat[(i, j)] = a * inv_sqrt_deg[i] * inv_sqrt_deg[j];
        }
    }

    let hidden = ahat.matmul(&features.matmul(w0)).map(|x| x.max(0.0));
    Ok(ahat.matmul(&hidden.matmul(w1)))
}
