//! Experiment configuration: a flat key/value document (TOML syntax) with a
//! closed schema. Unknown keys are rejected, duplicate keys fail at parse
//! time, and sweep ranges are validated against the grid before anything
//! runs. The exact schema lives in `docs/formats.md`.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::radial::MIN_POINTS;
use crate::solver::Method;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("experiment required")]
    ExperimentRequired,
    #[error("unknown experiment '{0}'; run `kgslab list-experiments`")]
    UnknownExperiment(String),
    #[error("seed required: experiment '{0}' is randomized")]
    SeedRequired(&'static str),
    #[error("invalid grid: {0}")]
    BadGrid(String),
    #[error(
        "annulus k={k} exceeds the grid Nyquist octave: needs xi up to {needed:.3} but xi_max = {xi_max:.3} (max resolvable k = {k_max})"
    )]
    NyquistOctave {
        k: i32,
        needed: f64,
        xi_max: f64,
        k_max: i32,
    },
    #[error(
        "annulus k={k} is under-resolved on the grid: {count} dual nodes in [2^(k-1), 2^(k+1)], need >= {need}; increase r_max"
    )]
    UnderResolved {
        k: i32,
        count: usize,
        need: usize,
    },
    #[error("sweep spans too many octaves for a single grid: k range [{k_min}, {k_max}]")]
    SpanTooWide { k_min: i32, k_max: i32 },
    #[error("invalid value for {key}: {reason}")]
    BadValue { key: &'static str, reason: String },
}

/// The experiment selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum ExperimentKind {
    ResonanceVerify,
    StrichartzSweep,
    BilinearSweep,
    TrilinearSweep,
    Transversality,
    SummationCheck,
    Solve,
    Picard,
    ScatterDiag,
    VnormSelftest,
}

impl ExperimentKind {
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "resonance-verify" => Self::ResonanceVerify,
            "strichartz-sweep" => Self::StrichartzSweep,
            "bilinear-sweep" => Self::BilinearSweep,
            "trilinear-sweep" => Self::TrilinearSweep,
            "transversality" => Self::Transversality,
            "summation-check" => Self::SummationCheck,
            "solve" => Self::Solve,
            "picard" => Self::Picard,
            "scatter-diag" => Self::ScatterDiag,
            "vnorm-selftest" => Self::VnormSelftest,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::ResonanceVerify => "resonance-verify",
            Self::StrichartzSweep => "strichartz-sweep",
            Self::BilinearSweep => "bilinear-sweep",
            Self::TrilinearSweep => "trilinear-sweep",
            Self::Transversality => "transversality",
            Self::SummationCheck => "summation-check",
            Self::Solve => "solve",
            Self::Picard => "picard",
            Self::ScatterDiag => "scatter-diag",
            Self::VnormSelftest => "vnorm-selftest",
        }
    }

    pub fn all() -> [Self; 10] {
        [
            Self::ResonanceVerify,
            Self::StrichartzSweep,
            Self::BilinearSweep,
            Self::TrilinearSweep,
            Self::Transversality,
            Self::SummationCheck,
            Self::Solve,
            Self::Picard,
            Self::ScatterDiag,
            Self::VnormSelftest,
        ]
    }

    fn randomized(self) -> bool {
        !matches!(self, Self::ResonanceVerify | Self::Transversality)
    }
}

/// Raw on-disk schema; every recognized key, all optional except
/// `experiment`. `deny_unknown_fields` makes the parser fail closed.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Option<String>,
    out_dir: Option<String>,
    seed: Option<u64>,
    trials: Option<usize>,
    epsilon: Option<f64>,
    r_max: Option<f64>,
    n_points: Option<usize>,
    t_window: Option<f64>,
    dt: Option<f64>,
    n_t: Option<usize>,
    auto_grid: Option<bool>,
    k_list: Option<Vec<i32>>,
    k1_list: Option<Vec<i32>>,
    k2_list: Option<Vec<i32>>,
    kg_s_list: Option<Vec<i32>>,
    kg_w_list: Option<Vec<i32>>,
    case: Option<String>,
    method: Option<String>,
    data_delta: Option<f64>,
    delta_list: Option<Vec<f64>>,
    m_iters: Option<usize>,
    sum_delta: Option<f64>,
    seq_len: Option<usize>,
    s_reg: Option<f64>,
    r_reg: Option<f64>,
    resolution: Option<usize>,
    coupling: Option<f64>,
    kg_sign: Option<f64>,
    dump_fields: Option<bool>,
}

/// Validated experiment configuration with defaults filled.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub trials: usize,
    pub epsilon: f64,
    pub r_max: f64,
    pub n_points: usize,
    pub t_window: f64,
    pub dt: f64,
    pub n_t: usize,
    pub auto_grid: bool,
    pub k_list: Option<Vec<i32>>,
    pub k1_list: Option<Vec<i32>>,
    pub k2_list: Option<Vec<i32>>,
    pub kg_s_list: Option<Vec<i32>>,
    pub kg_w_list: Option<Vec<i32>>,
    pub case: Option<String>,
    pub method: Method,
    pub data_delta: f64,
    pub delta_list: Vec<f64>,
    pub m_iters: usize,
    pub sum_delta: f64,
    pub seq_len: usize,
    pub s_reg: f64,
    pub r_reg: f64,
    pub resolution: usize,
    pub coupling: f64,
    pub kg_sign: f64,
    pub dump_fields: bool,
    /// Raw config bytes, hashed into the manifest.
    #[serde(skip)]
    pub raw_text: String,
}

/// Load and validate a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let raw_text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&raw_text)
}

/// Parse and validate config text (TOML syntax, flat keys).
pub fn parse_config(raw_text: &str) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig =
        toml::from_str(raw_text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let name = raw.experiment.ok_or(ConfigError::ExperimentRequired)?;
    let kind =
        ExperimentKind::parse(&name).ok_or_else(|| ConfigError::UnknownExperiment(name.clone()))?;
    if kind.randomized() && raw.seed.is_none() {
        return Err(ConfigError::SeedRequired(kind.name()));
    }
    let method = match raw.method.as_deref() {
        None | Some("strang_split") => Method::StrangSplit,
        Some("exponential_rk2") => Method::ExponentialRk2,
        Some(other) => {
            return Err(ConfigError::BadValue {
                key: "method",
                reason: format!("unknown method '{other}'"),
            })
        }
    };
    let config = ExperimentConfig {
        kind,
        out_dir: PathBuf::from(raw.out_dir.unwrap_or_else(|| "out".into())),
        seed: raw.seed,
        trials: raw.trials.unwrap_or(32),
        epsilon: raw.epsilon.unwrap_or(0.1),
        r_max: raw.r_max.unwrap_or(64.0),
        n_points: raw.n_points.unwrap_or(4096),
        t_window: raw.t_window.unwrap_or(16.0),
        dt: raw.dt.unwrap_or(1.0 / 128.0),
        n_t: raw.n_t.unwrap_or(128),
        auto_grid: raw.auto_grid.unwrap_or(false),
        k_list: raw.k_list,
        k1_list: raw.k1_list,
        k2_list: raw.k2_list,
        kg_s_list: raw.kg_s_list,
        kg_w_list: raw.kg_w_list,
        case: raw.case,
        method,
        data_delta: raw.data_delta.unwrap_or(0.01),
        delta_list: raw.delta_list.unwrap_or_else(|| vec![0.02, 0.01, 0.005]),
        m_iters: raw.m_iters.unwrap_or(6),
        sum_delta: raw.sum_delta.unwrap_or(0.1),
        seq_len: raw.seq_len.unwrap_or(64),
        s_reg: raw.s_reg.unwrap_or(0.0),
        r_reg: raw.r_reg.unwrap_or(-0.4),
        resolution: raw.resolution.unwrap_or(crate::resonance::DEFAULT_RESOLUTION),
        coupling: raw.coupling.unwrap_or(1.0),
        kg_sign: raw.kg_sign.unwrap_or(1.0),
        dump_fields: raw.dump_fields.unwrap_or(false),
        raw_text: raw_text.to_string(),
    };
    validate(&config)?;
    Ok(config)
}

/// Bounds for any single dyadic index under automatic grid selection.
const AUTO_K_MIN: i32 = -20;
const AUTO_K_MAX: i32 = 16;
/// Widest octave span one automatic grid will host.
const AUTO_SPAN_MAX: i32 = 15;

fn validate(config: &ExperimentConfig) -> Result<(), ConfigError> {
    if !(config.r_max > 0.0) || config.n_points < MIN_POINTS {
        return Err(ConfigError::BadGrid(format!(
            "r_max = {}, n_points = {} (need r_max > 0, n_points >= {MIN_POINTS})",
            config.r_max, config.n_points
        )));
    }
    if !(config.dt > 0.0) || !(config.t_window > 0.0) {
        return Err(ConfigError::BadValue {
            key: "dt/t_window",
            reason: "must be positive".into(),
        });
    }
    if !(config.epsilon > 0.0 && config.epsilon <= 0.25) {
        return Err(ConfigError::BadValue {
            key: "epsilon",
            reason: format!("must lie in (0, 1/4], got {}", config.epsilon),
        });
    }
    // Only the wave-probing sweeps put dyadic data on a grid; the scan and
    // extremization experiments take their indices as pure numbers.
    if !matches!(
        config.kind,
        ExperimentKind::StrichartzSweep
            | ExperimentKind::BilinearSweep
            | ExperimentKind::TrilinearSweep
    ) {
        return Ok(());
    }
    let lists = [
        &config.k_list,
        &config.k1_list,
        &config.k2_list,
        &config.kg_s_list,
        &config.kg_w_list,
    ];
    let all_k: Vec<i32> = lists
        .iter()
        .filter_map(|l| l.as_ref())
        .flatten()
        .copied()
        .collect();
    if config.auto_grid {
        for &k in &all_k {
            if !(AUTO_K_MIN..=AUTO_K_MAX).contains(&k) {
                return Err(ConfigError::BadValue {
                    key: "k_list",
                    reason: format!(
                        "k = {k} outside the automatic grid range [{AUTO_K_MIN}, {AUTO_K_MAX}]"
                    ),
                });
            }
        }
        // Joint-grid experiments host several annuli on one grid per row.
        if matches!(
            config.kind,
            ExperimentKind::BilinearSweep | ExperimentKind::TrilinearSweep
        ) && !all_k.is_empty()
        {
            let k_min = *all_k.iter().min().expect("nonempty");
            let k_max = *all_k.iter().max().expect("nonempty");
            if k_max - k_min > AUTO_SPAN_MAX {
                return Err(ConfigError::SpanTooWide { k_min, k_max });
            }
        }
    } else if !all_k.is_empty() {
        let grid = crate::radial::make_grid(config.r_max, config.n_points)
            .map_err(|e| ConfigError::BadGrid(e.to_string()))?;
        let xi_max = grid.xi_max();
        let k_max_resolvable = (xi_max / 2.0).log2().floor() as i32;
        for &k in &all_k {
            let needed = (2f64).powi(k + 1);
            if needed > xi_max {
                return Err(ConfigError::NyquistOctave {
                    k,
                    needed,
                    xi_max,
                    k_max: k_max_resolvable,
                });
            }
        }
        for &k in &all_k {
            let count = grid.annulus_node_count(k);
            if count < crate::frequency::MIN_ANNULUS_NODES {
                return Err(ConfigError::UnderResolved {
                    k,
                    count,
                    need: crate::frequency::MIN_ANNULUS_NODES,
                });
            }
        }
    }
    Ok(())
}
