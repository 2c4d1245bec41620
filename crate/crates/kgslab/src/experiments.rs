//! Experiment orchestration: one experiment per invocation, deterministic
//! sweep execution, CSV/JSON artifact emission, and the per-experiment
//! pass/fail policies. Sweep cells parallelize over a work-stealing pool;
//! results are collected in deterministic order before writing.

use std::path::PathBuf;

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::json;
use thiserror::Error;

use crate::bilinear::{bilinear_ratio, BilinearRow};
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::frequency::Flow;
use crate::radial::{make_grid, GridRef, RadialField};
use crate::report::{fmt_f64, fmt_opt_i32, CsvTable, Manifest, ReportError, Summary};
use crate::resonance::{fitted_constant, verify_lemma, LemmaCase};
use crate::solver::{
    picard_iterate, scattering_correction, scattering_diagnostic, solve, Method, SolverOptions,
};
use crate::strichartz::{
    windowed_wave_norms, LebesguePair, PairFamily, TABLE_SIGMA_S, TABLE_SIGMA_W,
};
use crate::sweep::{auto_grid, auto_grid_joint, cell_rng, fit_slope, sweep_window};
use crate::transversality::{transversality, BilinearCase};
use crate::trilinear::{
    summation_check, summation_growth, trilinear_kg, trilinear_schrodinger,
    validate_summation_range, FactorKind, TrilinearRow,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("experiment failed: {0}")]
    Failed(String),
}

/// Result of one experiment run.
#[derive(Debug)]
pub struct RunOutcome {
    pub pass: bool,
    pub summary_path: PathBuf,
    pub artifacts: Vec<PathBuf>,
}

/// Run one experiment, writing artifacts under `config.out_dir`.
pub fn run(config: &ExperimentConfig) -> Result<RunOutcome, RunError> {
    let (tables, metrics, pass) = match config.kind {
        ExperimentKind::ResonanceVerify => run_resonance(config),
        ExperimentKind::StrichartzSweep => run_strichartz(config),
        ExperimentKind::BilinearSweep => run_bilinear(config),
        ExperimentKind::TrilinearSweep => run_trilinear(config),
        ExperimentKind::Transversality => run_transversality(config),
        ExperimentKind::SummationCheck => run_summation(config),
        ExperimentKind::Solve => run_solve(config),
        ExperimentKind::Picard => run_picard(config),
        ExperimentKind::ScatterDiag => run_scatter(config),
        ExperimentKind::VnormSelftest => run_vnorm(config),
    }?;

    let mut artifacts = Vec::new();
    for (name, table) in &tables {
        let path = config.out_dir.join(name);
        table.write(&path)?;
        artifacts.push(path);
    }
    let summary = Summary {
        schema_version: crate::report::SUMMARY_SCHEMA_VERSION,
        experiment: config.kind.name(),
        pass,
        params: serde_json::to_value(config).unwrap_or(serde_json::Value::Null),
        metrics,
    };
    let summary_path = config.out_dir.join("summary.json");
    summary.write(&summary_path)?;
    let manifest = Manifest::new(config.kind.name(), &config.raw_text, config.seed);
    let manifest_path = config.out_dir.join("manifest.json");
    manifest.write(&manifest_path)?;
    artifacts.push(manifest_path);

    Ok(RunOutcome {
        pass,
        summary_path,
        artifacts,
    })
}

type ExperimentOutput = (Vec<(&'static str, CsvTable)>, serde_json::Value, bool);

fn grid_for(config: &ExperimentConfig, ks: &[i32]) -> GridRef {
    if config.auto_grid {
        auto_grid(ks)
    } else {
        make_grid(config.r_max, config.n_points).expect("validated by config")
    }
}

fn grid_for_joint(config: &ExperimentConfig, ks: &[i32]) -> GridRef {
    if config.auto_grid {
        auto_grid_joint(ks)
    } else {
        make_grid(config.r_max, config.n_points).expect("validated by config")
    }
}

// ---------------------------------------------------------------------------
// resonance-verify

fn run_resonance(config: &ExperimentConfig) -> Result<ExperimentOutput, RunError> {
    let mut table = CsvTable::new(vec![
        "case", "k", "k1", "k2", "feasible", "policy", "min_abs", "bound", "margin",
        "normalized", "pass", "argmin_a", "argmin_b", "argmin_c",
    ]);
    let mut metrics = serde_json::Map::new();
    let mut all_pass = true;

    let case_rows: Vec<_> = LemmaCase::all()
        .into_par_iter()
        .map(|case| (case, verify_lemma(case, config.resolution)))
        .collect();
    for (case, rows) in &case_rows {
        for r in rows {
            all_pass &= r.pass;
            table.push(vec![
                r.case.clone(),
                fmt_opt_i32(r.k),
                fmt_opt_i32(r.k1),
                fmt_opt_i32(r.k2),
                r.feasible.to_string(),
                r.policy.to_string(),
                fmt_f64(r.min_abs),
                fmt_f64(r.bound),
                fmt_f64(r.margin),
                fmt_f64(r.normalized),
                r.pass.to_string(),
                fmt_f64(r.argmin_a),
                fmt_f64(r.argmin_b),
                fmt_f64(r.argmin_c),
            ]);
        }
        // One fitted constant per resonance function; the two branches of
        // the Schrodinger resonance carry different constants.
        let mut tags: Vec<&str> = rows.iter().map(|r| r.case.as_str()).collect();
        tags.sort_unstable();
        tags.dedup();
        for tag in tags {
            let subset: Vec<_> = rows.iter().filter(|r| r.case == tag).cloned().collect();
            if let Some((c0, stability)) = fitted_constant(&subset) {
                // +-20% stability around a center value allows max/min 1.5.
                let stable = stability <= 1.5;
                all_pass &= stable;
                metrics.insert(
                    tag.to_string(),
                    json!({"fitted_c0": c0, "stability_max_over_min": stability, "stable": stable}),
                );
            }
        }
        let _ = case;
    }

    // Demonstration row: dyadic constraints violating the triangle
    // inequality are reported as infeasible, not errors.
    let infeasible = crate::resonance::region_min_abs(
        crate::resonance::ResonanceFn::Psi,
        &crate::resonance::RegionSpec::new(
            crate::resonance::DyadicRange::Annulus(10),
            Some(crate::resonance::DyadicRange::Annulus(0)),
            Some(crate::resonance::DyadicRange::Annulus(0)),
        )
        .with_resolution(32),
    );
    table.push(vec![
        "triangle-demo:psi".into(),
        "0".into(),
        "10".into(),
        "0".into(),
        infeasible.is_ok().to_string(),
        "infeasible".into(),
        "nan".into(),
        "nan".into(),
        "nan".into(),
        "nan".into(),
        infeasible.is_err().to_string(),
        "nan".into(),
        "nan".into(),
        "nan".into(),
    ]);

    Ok((
        vec![("resonance.csv", table)],
        serde_json::Value::Object(metrics),
        all_pass,
    ))
}

// ---------------------------------------------------------------------------
// strichartz-sweep

struct StrichartzBranch {
    name: &'static str,
    flow: Flow,
    family: PairFamily,
    pairs: Vec<(f64, f64)>,
    ks: Vec<i32>,
}

fn run_strichartz(config: &ExperimentConfig) -> Result<ExperimentOutput, RunError> {
    let seed = config.seed.expect("validated");
    let s_pairs: Vec<(f64, f64)> = TABLE_SIGMA_S.iter().map(|&(p, q, _)| (p, q)).collect();
    let w_pairs: Vec<(f64, f64)> = TABLE_SIGMA_W.iter().map(|&(p, q, _)| (p, q)).collect();
    let branches = [
        StrichartzBranch {
            name: "schrodinger-sigma_s",
            flow: Flow::Schrodinger,
            family: PairFamily::Schrodinger,
            pairs: s_pairs.clone(),
            ks: config.k_list.clone().unwrap_or_else(|| (-4..=6).collect()),
        },
        StrichartzBranch {
            name: "kg-sigma_s",
            flow: Flow::KgPlus,
            family: PairFamily::Schrodinger,
            pairs: s_pairs,
            ks: config.kg_s_list.clone().unwrap_or_else(|| (-6..=0).collect()),
        },
        StrichartzBranch {
            name: "kg-sigma_w",
            flow: Flow::KgPlus,
            family: PairFamily::Wave,
            pairs: w_pairs,
            ks: config.kg_w_list.clone().unwrap_or_else(|| (0..=6).collect()),
        },
    ];

    let mut table = CsvTable::new(vec![
        "branch", "flow", "weight", "p", "q", "sigma", "k", "ratio", "policy", "boundary_max",
        "t_window", "r_max", "n_points", "n_t", "trials", "seed",
    ]);
    let mut metrics = serde_json::Map::new();
    let mut pass = true;

    for branch in &branches {
        if branch.ks.is_empty() {
            continue;
        }
        // All q exponents the branch needs, deduplicated.
        let mut qs: Vec<f64> = branch.pairs.iter().map(|&(_, q)| q).collect();
        qs.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        qs.dedup();

        // One trace per (k, trial); every pair row reuses it.
        let cells: Vec<(i32, Result<(Vec<crate::strichartz::WaveNormTrace>, f64, GridRef), String>)> =
            branch
                .ks
                .par_iter()
                .map(|&k| {
                    let grid = grid_for(config, &[k]);
                    let t_len = sweep_window(&grid, branch.flow, k, config.t_window);
                    let mut traces = Vec::with_capacity(config.trials);
                    for trial in 0..config.trials {
                        let mut rng = cell_rng(
                            seed,
                            &[
                                crate::strichartz::flow_tag(branch.flow),
                                branch.family as i64,
                                k as i64,
                                trial as i64,
                            ],
                        );
                        match windowed_wave_norms(
                            &grid,
                            k,
                            branch.flow,
                            &qs,
                            t_len,
                            config.n_t,
                            &mut rng,
                        ) {
                            Ok(trace) => traces.push(trace),
                            Err(e) => return (k, Err(e.to_string())),
                        }
                    }
                    (k, Ok((traces, t_len, grid)))
                })
                .collect();

        for (ip, &(p, q)) in branch.pairs.iter().enumerate() {
            let pair = LebesguePair {
                p,
                q,
                family: branch.family,
            };
            let sigma = pair.sigma();
            let verdict = pair.admissible();
            let policy = if verdict.admissible {
                "asserted"
            } else if verdict.excluded_endpoint {
                "not-asserted"
            } else {
                "extension-range"
            };
            let iq = qs
                .iter()
                .position(|&x| x == q)
                .expect("q registered above");
            let mut ratios = Vec::new();
            for (k, cell) in &cells {
                match cell {
                    Ok((traces, t_len, grid)) => {
                        let weight = (2f64).powf(sigma * *k as f64);
                        let mut ratio = 0.0f64;
                        let mut boundary = 0.0f64;
                        for trace in traces {
                            ratio = ratio.max(weight * trace.mixed_norm(p, iq));
                            boundary = boundary.max(trace.boundary_max);
                        }
                        let aborted = boundary > crate::strichartz::SWEEP_REFLECTIVITY_LIMIT;
                        if aborted {
                            pass = false;
                        } else {
                            ratios.push(ratio);
                        }
                        table.push(vec![
                            branch.name.into(),
                            format!("{:?}", branch.flow),
                            format!("{:?}", branch.family),
                            fmt_f64(p),
                            fmt_f64(q),
                            fmt_f64(sigma),
                            k.to_string(),
                            if aborted { "nan".into() } else { fmt_f64(ratio) },
                            if aborted {
                                "aborted-reflectivity".into()
                            } else {
                                policy.to_string()
                            },
                            fmt_f64(boundary),
                            fmt_f64(*t_len),
                            fmt_f64(grid.r_max()),
                            grid.n_points().to_string(),
                            config.n_t.to_string(),
                            config.trials.to_string(),
                            seed.to_string(),
                        ]);
                    }
                    Err(e) => {
                        return Err(RunError::Failed(format!("k={k}: {e}")));
                    }
                }
            }
            let _ = ip;
            let max = ratios.iter().cloned().fold(0.0f64, f64::max);
            let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            let maxmin = max / min;
            let asserted = policy != "not-asserted";
            let row_pass = !asserted || maxmin <= 4.0;
            pass &= row_pass;
            metrics.insert(
                format!("{}:({},{})", branch.name, fmt_f64(p), fmt_f64(q)),
                json!({
                    "sigma": sigma,
                    "ratio_max": max,
                    "ratio_min": min,
                    "max_over_min": maxmin,
                    "policy": policy,
                    "pass": row_pass,
                }),
            );
        }
    }

    Ok((
        vec![("strichartz.csv", table)],
        serde_json::Value::Object(metrics),
        pass,
    ))
}

// ---------------------------------------------------------------------------
// bilinear-sweep

fn bilinear_instances(config: &ExperimentConfig, case: BilinearCase) -> Vec<(i32, i32)> {
    // (k, k_low) per transversality convention. Default sweeps track the
    // swept index at the minimal 10-octave separation so one grid per row
    // stays desk-sized.
    match case {
        BilinearCase::I => {
            let k1s = config.k1_list.clone().unwrap_or_else(|| (-13..=-10).collect());
            k1s.iter().map(|&k1| (k1 + 10, k1)).collect()
        }
        BilinearCase::II => {
            let k1s = config.k1_list.clone().unwrap_or_else(|| (7..=10).collect());
            k1s.iter().map(|&k1| (k1 - 10, k1)).collect()
        }
        BilinearCase::III => {
            let k2s = config.k2_list.clone().unwrap_or_else(|| (-13..=-10).collect());
            k2s.iter().map(|&k2| (k2 + 10, k2)).collect()
        }
    }
}

fn run_bilinear(config: &ExperimentConfig) -> Result<ExperimentOutput, RunError> {
    let seed = config.seed.expect("validated");
    let cases: Vec<BilinearCase> = match config.case.as_deref() {
        None | Some("all") => vec![BilinearCase::I, BilinearCase::II, BilinearCase::III],
        Some("i") => vec![BilinearCase::I],
        Some("ii") => vec![BilinearCase::II],
        Some("iii") => vec![BilinearCase::III],
        Some(other) => return Err(RunError::Failed(format!("unknown bilinear case '{other}'"))),
    };

    let mut table = CsvTable::new(vec![
        "case", "k", "k1", "k2", "measured", "coefficient", "ratio", "control_coefficient",
        "control_ratio", "boundary_max", "t_window", "r_max", "n_points", "n_t", "trials", "seed",
    ]);
    let mut metrics = serde_json::Map::new();
    let mut pass = true;

    for case in cases {
        let instances = bilinear_instances(config, case);
        let rows: Vec<Result<BilinearRow, String>> = instances
            .par_iter()
            .map(|&(k, k_low)| {
                let ((flow_a, ka), (flow_b, kb)) = match case {
                    BilinearCase::I | BilinearCase::II => {
                        ((Flow::KgPlus, k), (Flow::Schrodinger, k_low))
                    }
                    BilinearCase::III => ((Flow::Schrodinger, k), (Flow::Schrodinger, k_low)),
                };
                let grid = grid_for_joint(config, &[ka, kb]);
                let t_len = sweep_window(&grid, flow_a, ka, config.t_window)
                    .min(sweep_window(&grid, flow_b, kb, config.t_window));
                bilinear_ratio(case, k, k_low, &grid, config.trials, seed, t_len, config.n_t)
                    .map_err(|e| e.to_string())
            })
            .collect();

        let mut swept = Vec::new();
        let mut log_ratios = Vec::new();
        let mut log_controls = Vec::new();
        for (idx, row) in rows.iter().enumerate() {
            let row = row
                .as_ref()
                .map_err(|e| RunError::Failed(format!("case {}: {e}", case.label())))?;
            table.push(vec![
                row.case.into(),
                fmt_opt_i32(row.k),
                fmt_opt_i32(row.k1),
                fmt_opt_i32(row.k2),
                fmt_f64(row.measured),
                fmt_f64(row.coefficient),
                fmt_f64(row.ratio),
                fmt_f64(row.control_coefficient),
                fmt_f64(row.control_ratio),
                fmt_f64(row.boundary_max),
                fmt_f64(row.t_window),
                fmt_f64(row.r_max),
                row.n_points.to_string(),
                row.n_t.to_string(),
                row.trials.to_string(),
                row.seed.to_string(),
            ]);
            let x = instances[idx].1 as f64;
            swept.push(x);
            log_ratios.push(row.ratio.log2());
            log_controls.push(row.control_ratio.log2());
        }
        let slope = fit_slope(&swept, &log_ratios);
        let control_slope = fit_slope(&swept, &log_controls);
        let bounded = log_ratios.iter().all(|r| r.is_finite());
        let in_band = slope.abs() <= 0.15;
        let control_out = control_slope.abs() > 0.15;
        // The decisive-factor negative control is only separating for case
        // ii, where the removed factor is 2^(-k1/3).
        let case_pass = bounded && in_band && (case != BilinearCase::II || control_out);
        pass &= case_pass;
        metrics.insert(
            format!("case_{}", case.label()),
            json!({
                "slope_log2_ratio": slope,
                "control_slope": control_slope,
                "bounded": bounded,
                "slope_in_band": in_band,
                "control_outside_band": control_out,
                "pass": case_pass,
            }),
        );
    }

    Ok((
        vec![("bilinear.csv", table)],
        serde_json::Value::Object(metrics),
        pass,
    ))
}

// ---------------------------------------------------------------------------
// trilinear-sweep

struct TrilinearInstance {
    set: &'static str,
    family: &'static str,
    k: i32,
    k1: i32,
    k2: i32,
    stressed: FactorKind,
    /// Bounded-ratio assertion applies (support-compatible probes).
    asserted: bool,
}

fn trilinear_instances(config: &ExperimentConfig) -> Result<Vec<TrilinearInstance>, RunError> {
    let sets: Vec<&str> = match config.case.as_deref() {
        None | Some("all") => vec!["s-diag", "s-iii2", "s-iv2", "kg-ii", "kg-iii2", "incompat"],
        Some(s) => vec![s],
    };
    let mut out = Vec::new();
    for set in sets {
        match set {
            "s-diag" => {
                let ks = config.k_list.clone().unwrap_or_else(|| (2..=6).collect());
                for k in ks {
                    for stressed in [FactorKind::FreeWave, FactorKind::Atom(6)] {
                        out.push(TrilinearInstance {
                            set: "s-diag",
                            family: "schrodinger",
                            k,
                            k1: k,
                            k2: k,
                            stressed,
                            asserted: true,
                        });
                    }
                }
            }
            "s-iii2" => {
                let k2s = config.k2_list.clone().unwrap_or_else(|| vec![-1, 0, 1]);
                for k2 in k2s {
                    for stressed in [FactorKind::FreeWave, FactorKind::Atom(6)] {
                        out.push(TrilinearInstance {
                            set: "s-iii2",
                            family: "schrodinger",
                            k: 0,
                            k1: -11,
                            k2,
                            stressed,
                            asserted: true,
                        });
                    }
                }
            }
            "s-iv2" => {
                let k1s = config.k1_list.clone().unwrap_or_else(|| vec![-1, 0, 1]);
                for k1 in k1s {
                    out.push(TrilinearInstance {
                        set: "s-iv2",
                        family: "schrodinger",
                        k: -11,
                        k1,
                        k2: k1,
                        stressed: FactorKind::FreeWave,
                        asserted: true,
                    });
                }
            }
            "kg-ii" => {
                for stressed in [FactorKind::FreeWave, FactorKind::Atom(6)] {
                    out.push(TrilinearInstance {
                        set: "kg-ii",
                        family: "kg",
                        k: 0,
                        k1: 3,
                        k2: 3,
                        stressed,
                        asserted: true,
                    });
                }
            }
            "kg-iii2" => {
                let k1s = config.k1_list.clone().unwrap_or_else(|| vec![0, 1, 2]);
                for k1 in k1s {
                    out.push(TrilinearInstance {
                        set: "kg-iii2",
                        family: "kg",
                        k: k1,
                        k1,
                        k2: k1 - 11,
                        stressed: FactorKind::FreeWave,
                        asserted: true,
                    });
                }
            }
            "incompat" => {
                // Convolution-incompatible supports and a med~max violation.
                out.push(TrilinearInstance {
                    set: "incompat",
                    family: "schrodinger",
                    k: 6,
                    k1: -1,
                    k2: -1,
                    stressed: FactorKind::FreeWave,
                    asserted: false,
                });
                out.push(TrilinearInstance {
                    set: "incompat",
                    family: "schrodinger",
                    k: 0,
                    k1: 12,
                    k2: 0,
                    stressed: FactorKind::FreeWave,
                    asserted: false,
                });
            }
            other => {
                return Err(RunError::Failed(format!("unknown trilinear set '{other}'")));
            }
        }
    }
    Ok(out)
}

fn run_trilinear(config: &ExperimentConfig) -> Result<ExperimentOutput, RunError> {
    let seed = config.seed.expect("validated");
    let instances = trilinear_instances(config)?;
    let rows: Vec<Result<TrilinearRow, String>> = instances
        .par_iter()
        .map(|inst| {
            let grid = grid_for_joint(config, &[inst.k, inst.k1, inst.k2]);
            let t_len = sweep_window(&grid, Flow::KgPlus, inst.k, config.t_window)
                .min(sweep_window(&grid, Flow::Schrodinger, inst.k1, config.t_window))
                .min(sweep_window(&grid, Flow::Schrodinger, inst.k2, config.t_window));
            let result = match inst.family {
                "schrodinger" => trilinear_schrodinger(
                    &grid,
                    inst.k,
                    inst.k1,
                    inst.k2,
                    config.trials,
                    seed,
                    t_len,
                    config.n_t,
                    config.epsilon,
                    inst.stressed,
                ),
                _ => trilinear_kg(
                    &grid,
                    inst.k,
                    inst.k1,
                    inst.k2,
                    config.trials,
                    seed,
                    t_len,
                    config.n_t,
                    config.epsilon,
                    inst.stressed,
                ),
            };
            result.map_err(|e| e.to_string())
        })
        .collect();

    let mut table = CsvTable::new(vec![
        "set", "family", "k", "k1", "k2", "stressed", "compatible", "med_max_ok", "value",
        "coefficient", "ratio", "boundary_max", "t_window", "r_max", "n_points", "n_t",
        "trials", "seed", "epsilon",
    ]);
    let mut metrics = serde_json::Map::new();
    let mut pass = true;
    let mut by_set: std::collections::BTreeMap<&'static str, Vec<(bool, &TrilinearRow)>> =
        Default::default();
    for (inst, row) in instances.iter().zip(&rows) {
        let row = row
            .as_ref()
            .map_err(|e| RunError::Failed(format!("{}: {e}", inst.set)))?;
        table.push(vec![
            inst.set.into(),
            row.family.into(),
            row.k.to_string(),
            row.k1.to_string(),
            row.k2.to_string(),
            row.stressed_factor.clone(),
            row.compatible.to_string(),
            row.med_max_ok.to_string(),
            fmt_f64(row.value),
            fmt_f64(row.coefficient),
            fmt_f64(row.ratio),
            fmt_f64(row.boundary_max),
            fmt_f64(row.t_window),
            fmt_f64(row.r_max),
            row.n_points.to_string(),
            row.n_t.to_string(),
            row.trials.to_string(),
            row.seed.to_string(),
            fmt_f64(row.epsilon),
        ]);
        by_set.entry(inst.set).or_default().push((inst.asserted, row));
    }
    for (set, rows) in &by_set {
        if *set == "incompat" {
            let ok = rows.iter().all(|(_, r)| r.value <= 1e-8);
            pass &= ok;
            metrics.insert(
                "incompat".into(),
                json!({"max_value": rows.iter().map(|(_, r)| r.value).fold(0.0, f64::max), "pass": ok}),
            );
            continue;
        }
        // Boundedness across the sweep: max/min of normalized ratios over
        // the free-wave rows (atoms are reported alongside).
        let free: Vec<f64> = rows
            .iter()
            .filter(|(asserted, r)| *asserted && r.stressed_factor == "free")
            .map(|(_, r)| r.ratio)
            .collect();
        let max = free.iter().cloned().fold(0.0f64, f64::max);
        let min = free.iter().cloned().fold(f64::INFINITY, f64::min);
        let maxmin = if free.len() > 1 { max / min } else { 1.0 };
        let bounded = max.is_finite() && maxmin <= 8.0;
        pass &= bounded;
        metrics.insert(
            set.to_string(),
            json!({
                "ratio_max": max,
                "ratio_min": min,
                "max_over_min": maxmin,
                "rows": rows.len(),
                "pass": bounded,
            }),
        );
    }

    Ok((
        vec![("trilinear.csv", table)],
        serde_json::Value::Object(metrics),
        pass,
    ))
}

// ---------------------------------------------------------------------------
// transversality

fn run_transversality(config: &ExperimentConfig) -> Result<ExperimentOutput, RunError> {
    // Built-in 3-octave sweeps per case; a configured low-index list applies
    // only when a single case is selected (the hypotheses differ per case).
    let default_i: Vec<(i32, i32)> = (-13..=-10).map(|k1| (0, k1)).collect();
    let default_ii: Vec<(i32, i32)> = (4..=7).map(|k1| (-12, k1)).collect();
    let default_iii: Vec<(i32, i32)> = (-13..=-10).map(|k2| (0, k2)).collect();
    let cases: Vec<(BilinearCase, Vec<(i32, i32)>)> = match config.case.as_deref() {
        None | Some("all") => vec![
            (BilinearCase::I, default_i),
            (BilinearCase::II, default_ii),
            (BilinearCase::III, default_iii),
        ],
        Some("i") => vec![(
            BilinearCase::I,
            config
                .k1_list
                .clone()
                .map(|ks| ks.iter().map(|&k1| (0, k1)).collect())
                .unwrap_or(default_i),
        )],
        Some("ii") => vec![(
            BilinearCase::II,
            config
                .k1_list
                .clone()
                .map(|ks| ks.iter().map(|&k1| (-12, k1)).collect())
                .unwrap_or(default_ii),
        )],
        Some("iii") => vec![(
            BilinearCase::III,
            config
                .k2_list
                .clone()
                .map(|ks| ks.iter().map(|&k2| (0, k2)).collect())
                .unwrap_or(default_iii),
        )],
        Some(other) => {
            return Err(RunError::Failed(format!(
                "unknown transversality case '{other}'"
            )))
        }
    };

    let mut table = CsvTable::new(vec![
        "case", "k", "k_low", "v_max", "h1", "h2", "d0", "predicted_vmax_scale",
        "vmax_over_predicted", "a1_margin", "a2_derivative_margin", "a2_separation_margin",
        "a1_pass", "a2_pass",
    ]);
    let mut metrics = serde_json::Map::new();
    let mut pass = true;
    for (case, instances) in cases {
        let mut normalized = Vec::new();
        for &(k, k_low) in &instances {
            let data = transversality(case, k, k_low)
                .map_err(|e| RunError::Failed(e.to_string()))?;
            // Predicted scaling of V_max per the proof: ~1 for case i,
            // ~2^(k1) for cases ii and iii.
            let predicted = match case {
                BilinearCase::I => 1.0,
                BilinearCase::II => (2f64).powi(k_low),
                BilinearCase::III => (2f64).powi(k),
            };
            let ratio = data.v_max / predicted;
            normalized.push(ratio);
            pass &= data.a1_pass && data.a2_pass;
            table.push(vec![
                data.case.into(),
                data.k.to_string(),
                data.k_low.to_string(),
                fmt_f64(data.v_max),
                fmt_f64(data.h1),
                fmt_f64(data.h2),
                fmt_f64(data.d0),
                fmt_f64(predicted),
                fmt_f64(ratio),
                fmt_f64(data.a1_margin),
                fmt_f64(data.a2_derivative_margin),
                fmt_f64(data.a2_separation_margin),
                data.a1_pass.to_string(),
                data.a2_pass.to_string(),
            ]);
        }
        let max = normalized.iter().cloned().fold(0.0f64, f64::max);
        let min = normalized.iter().cloned().fold(f64::INFINITY, f64::min);
        let stable = max / min <= 4.0 && max <= 8.0 && min >= 1.0 / 8.0;
        pass &= stable;
        metrics.insert(
            format!("case_{}", case.label()),
            json!({"vmax_scale_max": max, "vmax_scale_min": min, "stable_within_4": stable}),
        );
    }

    Ok((
        vec![("transversality.csv", table)],
        serde_json::Value::Object(metrics),
        pass,
    ))
}

// ---------------------------------------------------------------------------
// summation-check

/// The dyadic triples exercised by the trilinear sweeps, shifted into the
/// nonnegative lattice the summation lemma runs over.
fn sweep_triple_table() -> Vec<(usize, usize, usize)> {
    let mut triples: Vec<(i32, i32, i32)> = Vec::new();
    for k in 2..=6 {
        triples.push((k, k, k));
    }
    for k2 in [-1, 0, 1] {
        triples.push((0, -11, k2));
    }
    for k1 in [-1, 0, 1] {
        triples.push((-11, k1, k1));
    }
    triples.push((0, 3, 3));
    for k1 in [0, 1, 2] {
        triples.push((k1, k1, k1 - 11));
    }
    let shift = 13;
    triples
        .into_iter()
        .map(|(a, b, c)| {
            (
                (a + shift) as usize,
                (b + shift) as usize,
                (c + shift) as usize,
            )
        })
        .collect()
}

fn run_summation(config: &ExperimentConfig) -> Result<ExperimentOutput, RunError> {
    let seed = config.seed.expect("validated");
    validate_summation_range(config.s_reg, config.r_reg, config.epsilon)
        .map_err(|e| RunError::Failed(e.to_string()))?;
    let table_triples = sweep_triple_table();

    let mut table = CsvTable::new(vec![
        "kind", "delta", "seq_len", "n_triples", "trials", "value", "bound", "pass",
    ]);
    let mut pass = true;
    let mut deltas = vec![0.05, 0.1];
    if !deltas.contains(&config.sum_delta) {
        deltas.push(config.sum_delta);
    }
    let mut metrics = serde_json::Map::new();
    for &delta in &deltas {
        let row = summation_check(delta, &table_triples, config.seq_len, config.trials, seed);
        let ok = row.constant <= 10.0;
        pass &= ok;
        table.push(vec![
            "check".into(),
            fmt_f64(delta),
            row.seq_len.to_string(),
            row.n_triples.to_string(),
            row.trials.to_string(),
            fmt_f64(row.constant),
            "10".into(),
            ok.to_string(),
        ]);
        metrics.insert(format!("c_delta_{delta}"), json!(row.constant));
    }

    // Negative control: no dyadic gain means linear growth in the length.
    let lens = [16usize, 32, 64, 128];
    let growth = summation_growth(0.0, &lens);
    let mut linear = true;
    for w in growth.windows(2) {
        let (l0, s0) = w[0];
        let (l1, s1) = w[1];
        linear &= (s1 / s0 - l1 as f64 / l0 as f64).abs() <= 0.01;
    }
    for (len, sum) in &growth {
        table.push(vec![
            "growth-delta0".into(),
            "0".into(),
            len.to_string(),
            len.to_string(),
            "1".into(),
            fmt_f64(*sum),
            "linear".into(),
            linear.to_string(),
        ]);
    }
    pass &= linear;
    metrics.insert("growth_linear".into(), json!(linear));

    Ok((
        vec![("summation.csv", table)],
        serde_json::Value::Object(metrics),
        pass,
    ))
}

// ---------------------------------------------------------------------------
// solve / picard / scatter-diag

fn gaussian_data(grid: &GridRef, delta: f64) -> RadialField {
    RadialField::from_profile(grid, |r| Complex64::new(delta * (-r * r / 2.0).exp(), 0.0))
}

fn solver_options(config: &ExperimentConfig, n_steps: usize) -> SolverOptions {
    SolverOptions {
        method: config.method,
        coupling: config.coupling,
        kg_sign: config.kg_sign,
        store_stride: (n_steps / 64).max(1),
        residual_stride: (n_steps / 32).max(1),
        ..SolverOptions::default()
    }
}

fn run_solve(config: &ExperimentConfig) -> Result<ExperimentOutput, RunError> {
    let grid = make_grid(config.r_max, config.n_points).expect("validated");
    let u0 = gaussian_data(&grid, config.data_delta);
    let n0 = gaussian_data(&grid, config.data_delta);
    let n_steps = (config.t_window / config.dt).round() as usize;
    let opts = solver_options(config, n_steps);
    let traj = solve(&u0, &n0, config.t_window, config.dt, &opts)
        .map_err(|e| RunError::Failed(e.to_string()))?;

    let mut diag = CsvTable::new(vec!["t", "mass_u", "mass_n", "boundary_fraction"]);
    for &(t, mu, mn, b) in &traj.mass_series {
        diag.push(vec![fmt_f64(t), fmt_f64(mu), fmt_f64(mn), fmt_f64(b)]);
    }

    let mut tables = vec![("diagnostics.csv", diag)];
    if config.dump_fields {
        for (name, pick) in [("u_snapshots.csv", true), ("n_snapshots.csv", false)] {
            let mut t = CsvTable::new(vec!["r", "values_re_im_interleaved"]);
            for (i, &r) in grid.nodes().iter().enumerate() {
                let mut row = vec![fmt_f64(r)];
                let mut cells = Vec::new();
                for state in &traj.states {
                    let v = if pick {
                        state.u.values()[i]
                    } else {
                        state.n.values()[i]
                    };
                    cells.push(format!("{};{}", fmt_f64(v.re), fmt_f64(v.im)));
                }
                row.push(cells.join(";"));
                t.push(row);
            }
            tables.push((name, t));
        }
    }

    let drift_limit = match config.method {
        Method::StrangSplit => 1e-8,
        Method::ExponentialRk2 => 1e-5,
    };
    let pass = traj.aborted.is_none() && traj.mass_drift <= drift_limit;
    let metrics = json!({
        "mass_drift": traj.mass_drift,
        "mass_drift_limit": drift_limit,
        "residual_max": traj.residual_max,
        "boundary_max": traj.boundary_max,
        "aborted": traj.aborted,
        "stored_snapshots": traj.states.len(),
        "stored_times": traj.states.iter().map(|s| s.t).collect::<Vec<_>>(),
    });
    Ok((tables, metrics, pass))
}

fn run_picard(config: &ExperimentConfig) -> Result<ExperimentOutput, RunError> {
    let grid = make_grid(config.r_max, config.n_points).expect("validated");
    let u0 = gaussian_data(&grid, config.data_delta);
    let n0 = gaussian_data(&grid, config.data_delta);
    let opts = SolverOptions {
        method: config.method,
        coupling: config.coupling,
        kg_sign: config.kg_sign,
        ..SolverOptions::default()
    };
    let result = picard_iterate(
        &u0,
        &n0,
        config.t_window,
        config.dt,
        config.m_iters,
        &opts,
    )
    .map_err(|e| RunError::Failed(e.to_string()))?;

    let mut table = CsvTable::new(vec!["iterate", "sup_diff_u", "sup_diff_n", "ratio"]);
    for (m, it) in result.iterates.iter().enumerate() {
        let ratio = if m >= 2 {
            result.contraction_ratios.get(m - 2).copied()
        } else {
            None
        };
        table.push(vec![
            m.to_string(),
            fmt_f64(it.sup_diff_u),
            fmt_f64(it.sup_diff_n),
            ratio.map(fmt_f64).unwrap_or_default(),
        ]);
    }
    // Ratios at the floating-point floor carry no signal.
    let scale = config.data_delta;
    let meaningful: Vec<f64> = result
        .iterates
        .windows(2)
        .skip(1)
        .filter(|w| w[0].sup_diff_u + w[0].sup_diff_n > 1e-13 * scale)
        .map(|w| (w[1].sup_diff_u + w[1].sup_diff_n) / (w[0].sup_diff_u + w[0].sup_diff_n))
        .collect();
    let worst = meaningful.iter().cloned().fold(0.0f64, f64::max);
    let diverging = meaningful.iter().any(|&r| r > 1.0);
    let pass = !meaningful.is_empty() && worst <= 0.5 && !diverging;
    let metrics = json!({
        "contraction_ratio_max": worst,
        "diverging": diverging,
        "iterates": result.iterates.len(),
    });
    Ok((vec![("picard.csv", table)], metrics, pass))
}

fn run_scatter(config: &ExperimentConfig) -> Result<ExperimentOutput, RunError> {
    let grid = make_grid(config.r_max, config.n_points).expect("validated");
    let n_steps = (config.t_window / config.dt).round() as usize;
    let opts = solver_options(config, n_steps);

    let mut table = CsvTable::new(vec![
        "delta", "t_lo", "t_hi", "inc_u", "inc_n", "correction",
    ]);
    let mut corrections = Vec::new();
    let mut monotone_for_reference = true;
    let reference_delta = config.data_delta;
    for &delta in &config.delta_list {
        let u0 = gaussian_data(&grid, delta);
        let n0 = gaussian_data(&grid, delta);
        let traj = solve(&u0, &n0, config.t_window, config.dt, &opts)
            .map_err(|e| RunError::Failed(e.to_string()))?;
        if let Some(reason) = &traj.aborted {
            return Err(RunError::Failed(format!("delta={delta}: {reason}")));
        }
        let incs = scattering_diagnostic(&traj, config.epsilon);
        let correction = scattering_correction(&traj);
        corrections.push((delta, correction));
        let combined: Vec<f64> = incs.iter().map(|i| i.inc_u + i.inc_n).collect();
        if (delta - reference_delta).abs() < 1e-12 {
            monotone_for_reference =
                combined.len() >= 3 && combined.windows(2).all(|w| w[1] < w[0]);
        }
        for inc in &incs {
            table.push(vec![
                fmt_f64(delta),
                fmt_f64(inc.t_lo),
                fmt_f64(inc.t_hi),
                fmt_f64(inc.inc_u),
                fmt_f64(inc.inc_n),
                fmt_f64(correction),
            ]);
        }
    }
    // log-log fit of the nonlinear correction against the data size.
    let xs: Vec<f64> = corrections.iter().map(|(d, _)| d.ln()).collect();
    let ys: Vec<f64> = corrections.iter().map(|(_, c)| c.ln()).collect();
    let alpha = fit_slope(&xs, &ys);
    let alpha_ok = (1.8..=2.2).contains(&alpha);
    let pass = monotone_for_reference && alpha_ok;
    let metrics = json!({
        "alpha": alpha,
        "alpha_in_band": alpha_ok,
        "cauchy_monotone": monotone_for_reference,
        "corrections": corrections,
    });
    Ok((vec![("scatter.csv", table)], metrics, pass))
}

// ---------------------------------------------------------------------------
// vnorm-selftest

fn run_vnorm(config: &ExperimentConfig) -> Result<ExperimentOutput, RunError> {
    use crate::frequency::TimeGrid;
    use crate::norms::{
        build_atom, p_variation, p_variation_exhaustive, v2_norm, xsb_norm,
    };
    use rand::Rng;

    let seed = config.seed.expect("validated");
    let mut table = CsvTable::new(vec!["check", "value", "bound", "pass"]);
    let mut pass = true;
    let push = |table: &mut CsvTable, name: &str, value: f64, bound: f64, ok: bool| {
        table.push(vec![
            name.into(),
            fmt_f64(value),
            fmt_f64(bound),
            ok.to_string(),
        ]);
        ok
    };

    // Dynamic program versus exhaustive enumeration on scalar sequences.
    let tiny = make_grid(24.0, 95).expect("grid");
    let base = {
        let mut rng = cell_rng(seed, &[1]);
        crate::frequency::random_annular_data(&tiny, 0, &mut rng)
            .map_err(|e| RunError::Failed(e.to_string()))?
    };
    let mut worst = 0.0f64;
    let mut rng = cell_rng(seed, &[2]);
    for _ in 0..1000 {
        let n = rng.gen_range(2..=12);
        let seq: Vec<RadialField> = (0..n)
            .map(|_| base.scaled(Complex64::new(rng.gen::<f64>() * 2.0 - 1.0, 0.0)))
            .collect();
        let dp = p_variation(&seq, 2.0).map_err(|e| RunError::Failed(e.to_string()))?;
        let brute =
            p_variation_exhaustive(&seq, 2.0).map_err(|e| RunError::Failed(e.to_string()))?;
        worst = worst.max((dp - brute).abs());
    }
    pass &= push(&mut table, "dp_vs_exhaustive_max_abs_diff", worst, 1e-12, worst <= 1e-12);

    // Single-jump atom: grid V^2 equals the jump size.
    let grid = make_grid(32.0, 255).expect("grid");
    let tg = TimeGrid::window(4.0, 32).expect("time grid");
    let mut rng = cell_rng(seed, &[3]);
    let piece = crate::frequency::random_annular_data(&grid, 1, &mut rng)
        .map_err(|e| RunError::Failed(e.to_string()))?;
    let (field, _) = build_atom(&grid, &tg, &[7], &[piece], Flow::Schrodinger)
        .map_err(|e| RunError::Failed(e.to_string()))?;
    let v = v2_norm(&field, Flow::Schrodinger).map_err(|e| RunError::Failed(e.to_string()))?;
    pass &= push(&mut table, "single_atom_v2", v, 1.0, (v - 1.0).abs() <= 1e-10);

    // Random multi-step atoms respect the embedding bound.
    let mut atom_worst = 0.0f64;
    let mut rng = cell_rng(seed, &[4]);
    for _ in 0..100 {
        let steps = rng.gen_range(1..=8);
        let mut jumps: Vec<usize> = (0..steps).map(|_| rng.gen_range(1..tg.n_t)).collect();
        jumps.sort_unstable();
        jumps.dedup();
        let pieces: Vec<RadialField> = jumps
            .iter()
            .map(|_| {
                let amp = Complex64::new(rng.gen::<f64>() + 0.1, rng.gen::<f64>() - 0.5);
                crate::frequency::random_annular_data(&grid, rng.gen_range(0..3), &mut rng)
                    .map(|f| f.scaled(amp))
            })
            .collect::<Result<_, _>>()
            .map_err(|e| RunError::Failed(e.to_string()))?;
        let (field, _) = build_atom(&grid, &tg, &jumps, &pieces, Flow::Schrodinger)
            .map_err(|e| RunError::Failed(e.to_string()))?;
        let v = v2_norm(&field, Flow::Schrodinger).map_err(|e| RunError::Failed(e.to_string()))?;
        atom_worst = atom_worst.max(v);
    }
    pass &= push(&mut table, "atom_v2_max", atom_worst, 2.0, atom_worst <= 2.0 + 1e-9);

    // Modulation-sup norm: finite and stable under time refinement.
    let mut rng = cell_rng(seed, &[5]);
    let piece = crate::frequency::random_annular_data(&grid, 1, &mut rng)
        .map_err(|e| RunError::Failed(e.to_string()))?;
    let tg2 = TimeGrid::window(4.0, 64).expect("time grid");
    let (f1, _) = build_atom(&grid, &tg, &[8, 24], &[piece.clone(), piece.clone()], Flow::Schrodinger)
        .map_err(|e| RunError::Failed(e.to_string()))?;
    let (f2, _) = build_atom(&grid, &tg2, &[16, 48], &[piece.clone(), piece], Flow::Schrodinger)
        .map_err(|e| RunError::Failed(e.to_string()))?;
    let (x1, _) = xsb_norm(&f1.apply_taper(), 0.5, crate::frequency::Surface::Schrodinger)
        .map_err(|e| RunError::Failed(e.to_string()))?;
    let (x2, _) = xsb_norm(&f2.apply_taper(), 0.5, crate::frequency::Surface::Schrodinger)
        .map_err(|e| RunError::Failed(e.to_string()))?;
    let rel = (x1 - x2).abs() / x1.max(x2);
    pass &= push(&mut table, "xsb_refinement_rel_change", rel, 0.05, rel <= 0.05);

    // Disposability proxy, uniform over the sweep annuli.
    let t_len = 16.0;
    let n_t = 128;
    let mu_cut = 8.0 * (2.0 * std::f64::consts::PI / t_len);
    let j_cut = mu_cut.log2().ceil() as i32;
    let mut proxy_worst = 0.0f64;
    for k in 0..=4 {
        let mut rng = cell_rng(seed, &[6, k as i64]);
        let data = crate::frequency::random_annular_data(&grid, k, &mut rng)
            .map_err(|e| RunError::Failed(e.to_string()))?;
        let wave = crate::frequency::free_wave(
            &data,
            Flow::Schrodinger,
            &TimeGrid::window(t_len, n_t).expect("time grid"),
        )
        .map_err(|e| RunError::Failed(e.to_string()))?
        .apply_taper();
        let kept = crate::frequency::modulation_project(
            &wave,
            j_cut,
            crate::frequency::Surface::Schrodinger,
            crate::frequency::ModulationMode::LowPass,
        )
        .map_err(|e| RunError::Failed(e.to_string()))?;
        let mut removed = 0.0;
        let mut total = 0.0;
        for (a, b) in wave.snapshots().iter().zip(kept.snapshots()) {
            removed += a.sub(b).map_err(|e| RunError::Failed(e.to_string()))?.l2_norm().powi(2);
            total += a.l2_norm().powi(2);
        }
        proxy_worst = proxy_worst.max((removed / total).sqrt());
    }
    pass &= push(
        &mut table,
        "disposability_proxy_max",
        proxy_worst,
        0.1,
        proxy_worst <= 0.1,
    );

    let metrics = json!({
        "dp_vs_exhaustive_max_abs_diff": worst,
        "atom_v2_max": atom_worst,
        "disposability_proxy_max": proxy_worst,
    });
    Ok((vec![("vnorm.csv", table)], metrics, pass))
}
