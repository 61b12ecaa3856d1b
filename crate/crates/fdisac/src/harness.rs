//! Experiment orchestration: config parsing, seeded Monte-Carlo sweeps over
//! SI level and the communication/radar priority ratio, and CSV/JSON table
//! emission.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::baselines::{comm_only, nsp_beamformers, radar_only, BaselineKind};
use crate::metrics::{self, default_theta_grid, MetricsRecord};
use crate::numerics::{norm, scale_vec, C64};
use crate::radar_dsp::{self, FrameSpec};
use crate::scenario::{
    reference_bearings, synthesize, trial_rng, ChannelSet, RadarGroundTruth, SystemConfig,
};
use crate::solver::{self, BeamformerState, SolverOptions};

/// Environment variable holding the default output directory.
pub const OUT_DIR_ENV: &str = "FDISAC_OUT";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot read config {path}: {source}")]
    ConfigIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config line {line}: expected key = value, got {text:?}")]
    ConfigSyntax { line: usize, text: String },
    #[error("config key {key:?}: {message}")]
    ConfigValue { key: String, message: String },
    #[error("unknown config key {key:?}")]
    UnknownKey { key: String },
    #[error("invalid experiment: {0}")]
    InvalidSpec(String),
    #[error("cannot write {path}: {source}")]
    OutputIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Scenario(#[from] crate::scenario::ScenarioError),
    #[error(transparent)]
    Solver(#[from] crate::solver::SolverError),
    #[error(transparent)]
    RadarDsp(#[from] crate::radar_dsp::RadarDspError),
}

/// Full description of one sweep run.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentSpec {
    pub base: SystemConfig,
    pub si_levels_db: Vec<f64>,
    /// priority ratio alpha_com / alpha_radar per cell
    pub rho_values: Vec<f64>,
    pub trials: usize,
    pub baselines: Vec<BaselineKind>,
    pub out_dir: PathBuf,
    pub emit_csv: bool,
    pub emit_json: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            base: SystemConfig::default(),
            si_levels_db: vec![10.0, 20.0, 30.0, 40.0, 50.0, 60.0],
            rho_values: vec![1.0, 10.0, 100.0, 1000.0],
            trials: 100,
            baselines: vec![BaselineKind::Nsp, BaselineKind::RadarOnly, BaselineKind::CommOnly],
            out_dir: default_out_dir(),
            emit_csv: true,
            emit_json: true,
        }
    }
}

pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"))
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        self.base.validate()?;
        if self.trials < 1 {
            return Err(HarnessError::InvalidSpec("trials must be >= 1".into()));
        }
        if self.rho_values.iter().any(|r| !(*r > 0.0)) {
            return Err(HarnessError::InvalidSpec("every rho must be > 0".into()));
        }
        if self.si_levels_db.is_empty() || self.rho_values.is_empty() {
            return Err(HarnessError::InvalidSpec("sweep axes must be nonempty".into()));
        }
        Ok(())
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, HarnessError> {
    value.trim().parse().map_err(|_| HarnessError::ConfigValue {
        key: key.to_string(),
        message: format!("cannot parse {value:?}"),
    })
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, HarnessError> {
    value
        .split(',')
        .map(|v| parse_num::<f64>(key, v))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool, HarnessError> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(HarnessError::ConfigValue {
            key: key.to_string(),
            message: format!("expected a boolean, got {other:?}"),
        }),
    }
}

/// Parses a `key = value` config file; omitted keys keep the reference
/// defaults. Lines starting with `#` and blank lines are ignored.
pub fn parse_config(path: &Path) -> Result<ExperimentSpec, HarnessError> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::ConfigIo {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentSpec, HarnessError> {
    let mut spec = ExperimentSpec::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| HarnessError::ConfigSyntax {
            line: i + 1,
            text: line.to_string(),
        })?;
        let key = key.trim();
        let value = value.trim();
        let cfg = &mut spec.base;
        match key {
            "n_t" => cfg.n_t = parse_num(key, value)?,
            "n_r" => cfg.n_r = parse_num(key, value)?,
            "n_u" => cfg.n_u = parse_num(key, value)?,
            "n_d" => cfg.n_d = parse_num(key, value)?,
            "f_c" => cfg.f_c = parse_num(key, value)?,
            "bandwidth" => cfg.bandwidth = parse_num(key, value)?,
            "p_d_dbm" => cfg.p_d_dbm = parse_num(key, value)?,
            "p_u_dbm" => cfg.p_u_dbm = parse_num(key, value)?,
            "noise_dbm" => cfg.noise_dbm = parse_num(key, value)?,
            "pathloss_exponent" => cfg.pathloss_exponent = parse_num(key, value)?,
            "d0" => cfg.d0 = parse_num(key, value)?,
            "rician_kappa" => cfg.rician_kappa = parse_num(key, value)?,
            "rician_kappa_si" => cfg.rician_kappa_si = parse_num(key, value)?,
            "si_level_db" => cfg.si_level_db = parse_num(key, value)?,
            "si_angle_deg" => cfg.si_angle_deg = parse_num(key, value)?,
            "rcs" => cfg.rcs = parse_num(key, value)?,
            "alpha" => {
                let vals = parse_list(key, value)?;
                if vals.len() != 4 {
                    return Err(HarnessError::ConfigValue {
                        key: key.into(),
                        message: format!("expected 4 weights, got {}", vals.len()),
                    });
                }
                cfg.alpha = [vals[0], vals[1], vals[2], vals[3]];
            }
            "beta" => cfg.beta = parse_num(key, value)?,
            "epsilon" => cfg.epsilon = parse_num(key, value)?,
            "delta" => cfg.delta = parse_num(key, value)?,
            "nsp_tx_split" => cfg.nsp_tx_split = parse_num(key, value)?,
            "nsp_null_downlink" => cfg.nsp_null_downlink = parse_bool(key, value)?,
            "rng_seed" => cfg.rng_seed = parse_num(key, value)?,
            "si_levels" => spec.si_levels_db = parse_list(key, value)?,
            "rho_values" => spec.rho_values = parse_list(key, value)?,
            "trials" => spec.trials = parse_num(key, value)?,
            "baselines" => {
                spec.baselines = value
                    .split(',')
                    .filter(|v| !v.trim().is_empty())
                    .map(|v| match v.trim() {
                        "nsp" => Ok(BaselineKind::Nsp),
                        "radar_only" => Ok(BaselineKind::RadarOnly),
                        "comm_only" => Ok(BaselineKind::CommOnly),
                        other => Err(HarnessError::ConfigValue {
                            key: "baselines".into(),
                            message: format!("unknown baseline {other:?}"),
                        }),
                    })
                    .collect::<Result<_, _>>()?;
            }
            "out_dir" => spec.out_dir = PathBuf::from(value),
            "emit" => {
                spec.emit_csv = false;
                spec.emit_json = false;
                for v in value.split(',') {
                    match v.trim() {
                        "csv" => spec.emit_csv = true,
                        "json" => spec.emit_json = true,
                        other => {
                            return Err(HarnessError::ConfigValue {
                                key: "emit".into(),
                                message: format!("unknown format {other:?}"),
                            })
                        }
                    }
                }
            }
            other => return Err(HarnessError::UnknownKey { key: other.to_string() }),
        }
    }
    spec.validate()?;
    Ok(spec)
}

/// Evaluated design methods: the proposed joint solver plus baselines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Method {
    Proposed,
    Baseline(BaselineKind),
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::Baseline(k) => k.label(),
        }
    }
}

/// All records for one (si_level, rho, method) cell.
#[derive(Clone, Debug, Serialize)]
pub struct CellResult {
    pub si_level_db: f64,
    pub rho: f64,
    pub method: &'static str,
    pub records: Vec<MetricsRecord>,
    pub failures: usize,
    pub first_failure: Option<String>,
    pub converged: usize,
    pub total_iterations: usize,
}

impl CellResult {
    pub fn mean_se<F: Fn(&MetricsRecord) -> f64>(&self, f: F) -> (f64, f64) {
        mean_se(&self.records.iter().map(f).collect::<Vec<_>>())
    }
}

pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// One representative solve kept aside for the per-angle/per-bin tables.
pub struct Representative {
    pub state: BeamformerState,
    pub channels: ChannelSet,
    pub ground_truth: RadarGroundTruth,
    pub config: SystemConfig,
}

pub struct SweepResult {
    pub cells: Vec<CellResult>,
    pub master_seed: u64,
    pub representative: Option<Representative>,
}

impl SweepResult {
    pub fn cell(&self, si_level_db: f64, rho: f64, method: &str) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.si_level_db == si_level_db && c.rho == rho && c.method == method)
    }
}

/// Distinct, collision-free RNG streams over the sweep lattice: one for
/// the channel draw and one for the solver initialization of each
/// (cell, trial).
fn stream_ids(cell: usize, trial: usize) -> (u64, u64) {
    let base = ((cell as u64) << 33) | ((trial as u64) << 1);
    (base, base | 1)
}

/// Completes a baseline (p, w) pair into a full state: uplink precoder
/// matched to the combiner through the uplink channel at full power, and
/// the MMSE downlink combiner for the given transmit beam.
pub fn baseline_state(
    kind: BaselineKind,
    ch: &ChannelSet,
    cfg: &SystemConfig,
    theta_r_deg: f64,
    theta_u_deg: f64,
    theta_d_deg: f64,
) -> Result<BeamformerState, HarnessError> {
    let (p, w) = match kind {
        BaselineKind::RadarOnly => radar_only(theta_r_deg, cfg),
        BaselineKind::CommOnly => comm_only(theta_u_deg, cfg),
        BaselineKind::Nsp => nsp_beamformers(ch, theta_r_deg, theta_d_deg, cfg),
    };
    let matched = ch.h_u.matvec_herm(&w).expect("H_u^H w");
    let nm = norm(&matched);
    let omega_u = if nm > 0.0 {
        scale_vec(&matched, cfg.p_u_lin().sqrt() / nm)
    } else {
        vec![C64::new(0.0, 0.0); cfg.n_u]
    };
    let mut state = BeamformerState {
        p,
        w,
        omega_u,
        u_d: vec![C64::new(0.0, 0.0); cfg.n_d],
        rho_u: 1.0,
        rho_d: 1.0,
    };
    state.u_d = solver::update_u_d(&state, ch, cfg.noise_lin())?;
    Ok(state)
}

/// Runs the full (si_level x rho x method x trial) lattice. Channels are
/// drawn once per (cell, trial) and shared by every method so comparisons
/// are paired. Failed trials are counted and skipped, not fatal.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepResult, HarnessError> {
    spec.validate()?;
    let master = spec.base.rng_seed;
    let (target, uplink, downlink) = reference_bearings();
    let mut cells = Vec::new();
    let mut representative = None;

    let mut methods: Vec<Method> = vec![Method::Proposed];
    methods.extend(spec.baselines.iter().map(|&k| Method::Baseline(k)));

    for (si_idx, &si_level) in spec.si_levels_db.iter().enumerate() {
        for (rho_idx, &rho) in spec.rho_values.iter().enumerate() {
            let cell_idx = si_idx * spec.rho_values.len() + rho_idx;
            let mut cfg = spec.base.clone();
            cfg.si_level_db = si_level;
            cfg.alpha = [rho, rho, 1.0, 1.0];
            let opts = SolverOptions::from_config(&cfg);
            let sigma2 = cfg.noise_lin();

            let mut per_method: BTreeMap<&'static str, CellResult> = methods
                .iter()
                .map(|m| {
                    (
                        m.label(),
                        CellResult {
                            si_level_db: si_level,
                            rho,
                            method: m.label(),
                            records: Vec::new(),
                            failures: 0,
                            first_failure: None,
                            converged: 0,
                            total_iterations: 0,
                        },
                    )
                })
                .collect();

            for trial in 0..spec.trials {
                let (chan_stream, solver_stream) = stream_ids(cell_idx, trial);
                let mut chan_rng = trial_rng(master, chan_stream);
                let (ch, gt) = match synthesize(&cfg, target, uplink, downlink, &mut chan_rng) {
                    Ok(x) => x,
                    Err(e) => {
                        for cell in per_method.values_mut() {
                            cell.failures += 1;
                            cell.first_failure.get_or_insert_with(|| e.to_string());
                        }
                        continue;
                    }
                };
                for method in &methods {
                    let cell = per_method.get_mut(method.label()).expect("method registered");
                    let state = match method {
                        Method::Proposed => {
                            let mut rng: ChaCha8Rng = trial_rng(master, solver_stream);
                            match solver::solve(&ch, &cfg, gt.theta_deg, &opts, &mut rng) {
                                Ok((state, report)) => {
                                    if report.converged {
                                        cell.converged += 1;
                                    }
                                    cell.total_iterations += report.iterations;
                                    state
                                }
                                Err(e) => {
                                    cell.failures += 1;
                                    cell.first_failure.get_or_insert_with(|| e.to_string());
                                    continue;
                                }
                            }
                        }
                        Method::Baseline(kind) => {
                            match baseline_state(
                                *kind,
                                &ch,
                                &cfg,
                                gt.theta_deg,
                                uplink.theta_deg,
                                downlink.theta_deg,
                            ) {
                                Ok(s) => s,
                                Err(e) => {
                                    cell.failures += 1;
                                    cell.first_failure.get_or_insert_with(|| e.to_string());
                                    continue;
                                }
                            }
                        }
                    };
                    let record = metrics::evaluate(
                        &state,
                        &ch,
                        sigma2,
                        cfg.noise_dbm,
                        cfg.delta,
                        gt.theta_deg,
                    );
                    if representative.is_none() && matches!(method, Method::Proposed) {
                        representative = Some(Representative {
                            state: state.clone(),
                            channels: ch.clone(),
                            ground_truth: gt,
                            config: cfg.clone(),
                        });
                    }
                    cell.records.push(record);
                }
            }
            cells.extend(per_method.into_values());
        }
    }
    Ok(SweepResult { cells, master_seed: master, representative })
}

// ---------------------------------------------------------------------
// output tables
// ---------------------------------------------------------------------

const METRIC_COLUMNS: [(&str, fn(&MetricsRecord) -> f64); 10] = [
    ("sinr_u", |r| r.sinr_u),
    ("sinr_d", |r| r.sinr_d),
    ("r_u", |r| r.r_u),
    ("r_d", |r| r.r_d),
    ("g_t", |r| r.g_t),
    ("g_r", |r| r.g_r),
    ("p_res_db", |r| r.p_res_db),
    ("soi_over_si_db", |r| r.soi_over_si_db),
    ("sumrate_fd", |r| r.sumrate_fd),
    ("sumrate_hd", |r| r.sumrate_hd),
];

fn write_file(path: &Path, content: &str) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| HarnessError::OutputIo {
            path: path.to_path_buf(),
            source,
        })?;
    }
    let mut f = fs::File::create(path).map_err(|source| HarnessError::OutputIo {
        path: path.to_path_buf(),
        source,
    })?;
    f.write_all(content.as_bytes()).map_err(|source| HarnessError::OutputIo {
        path: path.to_path_buf(),
        source,
    })
}

/// RFC 4180 rows: CRLF line endings, comma separated. All our fields are
/// numeric or plain tokens, so no quoting is ever required.
fn csv(rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    for row in rows {
        out.push_str(&row.join(","));
        out.push_str("\r\n");
    }
    out
}

fn fmt(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v}")
    }
}

pub fn sweep_csv(result: &SweepResult) -> String {
    let mut header = vec![
        "si_level_db".to_string(),
        "rho".to_string(),
        "method".to_string(),
        "trials_ok".to_string(),
        "trials_failed".to_string(),
        "converged".to_string(),
        "mean_iterations".to_string(),
    ];
    for (name, _) in METRIC_COLUMNS {
        header.push(format!("mean_{name}"));
        header.push(format!("se_{name}"));
    }
    let mut rows = vec![header];
    for cell in &result.cells {
        let mut row = vec![
            fmt(cell.si_level_db),
            fmt(cell.rho),
            cell.method.to_string(),
            cell.records.len().to_string(),
            cell.failures.to_string(),
            cell.converged.to_string(),
            fmt(if cell.records.is_empty() {
                f64::NAN
            } else {
                cell.total_iterations as f64 / cell.records.len() as f64
            }),
        ];
        for (_, f) in METRIC_COLUMNS {
            let (mean, se) = cell.mean_se(f);
            row.push(fmt(mean));
            row.push(fmt(se));
        }
        rows.push(row);
    }
    csv(&rows)
}

pub fn beampattern_csv(vec: &[C64], label: &str) -> String {
    let grid = default_theta_grid();
    let pattern = metrics::beampattern(vec, |t| crate::scenario::steering(t, vec.len()), &grid);
    let mut rows = vec![vec!["theta_deg".to_string(), format!("power_{label}")]];
    for (t, p) in grid.iter().zip(pattern.iter()) {
        rows.push(vec![fmt(*t), fmt(*p)]);
    }
    csv(&rows)
}

pub fn angle_spectrum_csv(state: &BeamformerState, ch: &ChannelSet) -> String {
    let spec = radar_dsp::angle_spectrum(state, ch, &default_theta_grid());
    let mut rows = vec![vec!["theta_deg".to_string(), "power".to_string()]];
    for (t, p) in spec.thetas.iter().zip(spec.power.iter()) {
        rows.push(vec![fmt(*t), fmt(*p)]);
    }
    csv(&rows)
}

pub fn range_doppler_csv(
    state: &BeamformerState,
    ch: &ChannelSet,
    gt: &RadarGroundTruth,
    cfg: &SystemConfig,
    inject_si: bool,
    rng: &mut ChaCha8Rng,
) -> Result<String, HarnessError> {
    let frame = FrameSpec::reference(cfg.sample_period());
    let rx = radar_dsp::synthesize_rx_stream(state, ch, gt, &frame, 0.0, inject_si, rng)?;
    let mf = radar_dsp::matched_filter(&rx.stream, &rx.s_d, radar_dsp::DEFAULT_LAG_WINDOW)?;
    let map = radar_dsp::range_doppler_map(&mf, &frame)?;
    let mut rows = vec![vec![
        "range_bin".to_string(),
        "range_m".to_string(),
        "doppler_bin".to_string(),
        "doppler_hz".to_string(),
        "velocity_mps".to_string(),
        "magnitude".to_string(),
    ]];
    for (l, row) in map.grid.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            let f_d = map.bin_to_doppler(k, frame.m);
            rows.push(vec![
                l.to_string(),
                fmt(l as f64 * map.range_resolution_m),
                k.to_string(),
                fmt(f_d),
                fmt(radar_dsp::RangeDopplerMap::doppler_to_velocity(f_d, cfg.f_c)),
                fmt(v),
            ]);
        }
    }
    Ok(csv(&rows))
}

fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".to_string())
}

pub fn manifest_json(spec: &ExperimentSpec, master_seed: u64) -> String {
    let manifest = serde_json::json!({
        "config": spec,
        "master_seed": master_seed,
        "git_describe": git_describe(),
    });
    serde_json::to_string_pretty(&manifest).expect("manifest serializes")
}

/// Writes every sweep output: the aggregate CSV, the per-angle tables for
/// the representative solve, the range-Doppler grid, and the JSON
/// manifest.
pub fn emit_tables(result: &SweepResult, spec: &ExperimentSpec) -> Result<Vec<PathBuf>, HarnessError> {
    let mut written = Vec::new();
    let dir = &spec.out_dir;
    if spec.emit_csv {
        let p = dir.join("sweep.csv");
        write_file(&p, &sweep_csv(result))?;
        written.push(p);
        if let Some(rep) = &result.representative {
            let p = dir.join("beampattern_tx.csv");
            write_file(&p, &beampattern_csv(&rep.state.p, "tx"))?;
            written.push(p);
            let p = dir.join("beampattern_rx.csv");
            write_file(&p, &beampattern_csv(&rep.state.w, "rx"))?;
            written.push(p);
            let p = dir.join("angle_spectrum.csv");
            write_file(&p, &angle_spectrum_csv(&rep.state, &rep.channels))?;
            written.push(p);
            let mut rng = trial_rng(result.master_seed, u64::MAX);
            let p = dir.join("range_doppler.csv");
            write_file(
                &p,
                &range_doppler_csv(
                    &rep.state,
                    &rep.channels,
                    &rep.ground_truth,
                    &rep.config,
                    false,
                    &mut rng,
                )?,
            )?;
            written.push(p);
        }
    }
    if spec.emit_json {
        let p = dir.join("manifest.json");
        write_file(&p, &manifest_json(spec, result.master_seed))?;
        written.push(p);
    }
    Ok(written)
}

/// Solves one reference-scenario instance with the spec's base config.
pub fn solve_once(
    spec: &ExperimentSpec,
) -> Result<(BeamformerState, crate::solver::SolverReport, ChannelSet, RadarGroundTruth), HarnessError> {
    let cfg = &spec.base;
    cfg.validate()?;
    let (target, uplink, downlink) = reference_bearings();
    let mut chan_rng = trial_rng(cfg.rng_seed, 0);
    let (ch, gt) = synthesize(cfg, target, uplink, downlink, &mut chan_rng)?;
    let opts = SolverOptions::from_config(cfg);
    let mut rng = trial_rng(cfg.rng_seed, 1);
    let (state, report) = solver::solve(&ch, cfg, gt.theta_deg, &opts, &mut rng)?;
    Ok((state, report, ch, gt))
}
