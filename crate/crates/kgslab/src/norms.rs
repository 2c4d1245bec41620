//! Mixed spacetime norms, Sobolev norms, modulation-sup norms, exact grid
//! p-variation, atom construction, and Besov-type aggregates.
//!
//! The atomic-space norm is an infimum over decompositions and is never
//! computed directly: explicit decompositions certify upper bounds and the
//! grid-restricted 2-variation together with the modulation-sup norm supply
//! the lower-bound side of the sandwich.

use num_complex::Complex64;
use thiserror::Error;

use crate::frequency::{
    resolvable_modulation_range, Flow, MultiplierSymbol, SpaceTimeField, Surface, TimeGrid,
};
use crate::radial::{forward_transform, lq_norm, GridRef, RadialField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormError {
    #[error("mixed norm requires exponents in [1, inf], got p={p}, q={q}")]
    InvalidExponents { p: f64, q: f64 },
    #[error("p-variation requires a nonempty snapshot list")]
    EmptySequence,
    #[error("p-variation requires p >= 1, got {p}")]
    InvalidVariationExponent { p: f64 },
    #[error("p-variation snapshot list exceeds the O(n^2) budget: {len} > {max}")]
    SequenceTooLong { len: usize, max: usize },
    #[error("atom construction: jump indices must be strictly increasing and inside the grid")]
    BadPartition,
    #[error("atom construction: pieces count {pieces} does not match jump count {jumps}")]
    PieceCountMismatch { pieces: usize, jumps: usize },
    #[error("atom construction: all pieces are zero")]
    ZeroPieces,
    #[error("Z-norm aggregate requires at least one dyadic block")]
    MissingBlocks,
    #[error("Z-norm dyadic blocks must have k >= -10; put lower blocks in the low-frequency slot")]
    BlockBelowCutoff { k: i32 },
    #[error("regularity parameters out of range: {reason}")]
    BadRegularity { reason: String },
    #[error(transparent)]
    Radial(#[from] crate::radial::RadialError),
    #[error(transparent)]
    Frequency(#[from] crate::frequency::FrequencyError),
}

/// Hard cap on the p-variation dynamic program input length.
pub const MAX_VARIATION_POINTS: usize = 4096;

/// Regularity configuration `(s, r, epsilon, delta)` for solver and
/// scattering experiments.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RegularityParams {
    pub s: f64,
    pub r: f64,
    pub epsilon: f64,
    pub delta: f64,
}

impl RegularityParams {
    pub fn new(s: f64, r: f64, epsilon: f64, delta: f64) -> Result<Self, NormError> {
        if !(s >= 0.0) {
            return Err(NormError::BadRegularity {
                reason: format!("s must be >= 0, got {s}"),
            });
        }
        if !(r > s - 0.5 && r < s + 2.0) {
            return Err(NormError::BadRegularity {
                reason: format!("r must lie in (s - 1/2, s + 2), got r={r} for s={s}"),
            });
        }
        if !(epsilon > 0.0 && epsilon <= 0.25) {
            return Err(NormError::BadRegularity {
                reason: format!("epsilon must lie in (0, 1/4], got {epsilon}"),
            });
        }
        if !(delta > 0.0) {
            return Err(NormError::BadRegularity {
                reason: format!("delta must be positive, got {delta}"),
            });
        }
        Ok(Self {
            s,
            r,
            epsilon,
            delta,
        })
    }
}

/// `L^p_t L^q_x` norm by rectangle quadrature over the field's time window.
pub fn mixed_norm(field: &SpaceTimeField, p: f64, q: f64) -> Result<f64, NormError> {
    if !(p >= 1.0) || !(q >= 1.0) {
        return Err(NormError::InvalidExponents { p, q });
    }
    let dt = field.tgrid().dt;
    if p.is_infinite() {
        let mut best = 0.0f64;
        for snap in field.snapshots() {
            best = best.max(lq_norm(snap, q)?);
        }
        return Ok(best);
    }
    let mut acc = 0.0;
    for snap in field.snapshots() {
        acc += lq_norm(snap, q)?.powf(p) * dt;
    }
    Ok(acc.powf(1.0 / p))
}

/// `H^s` norm `||<D>^s f||_{L^2}`, evaluated on the dual side where the
/// multiplier is diagonal (Plancherel-equal to the multiplier route).
pub fn sobolev_norm(f: &RadialField, s: f64) -> f64 {
    let ff = forward_transform(f);
    ff.multiplied(|xi| Complex64::new(crate::frequency::bracket(xi).powf(s), 0.0))
        .weighted_l2_norm()
}

/// `X^{0,b,infty}` modulation-sup norm: `sup_j 2^(bj) ||Q_j F||_{L^2_{t,x}}`
/// over the resolvable octaves, which are reported alongside.
pub fn xsb_norm(
    field: &SpaceTimeField,
    b: f64,
    surface: Surface,
) -> Result<(f64, (i32, i32)), NormError> {
    let (jmin, jmax) = resolvable_modulation_range(field.tgrid());
    let mut sup = 0.0f64;
    for j in jmin..=jmax {
        let band = crate::frequency::modulation_project(
            field,
            j,
            surface,
            crate::frequency::ModulationMode::Band,
        )?;
        sup = sup.max((2f64).powf(b * j as f64) * band.l2_norm());
    }
    Ok((sup, (jmin, jmax)))
}

/// Exact maximum of `(sum ||x_(t_j) - x_(t_i)||^p)^(1/p)` over all increasing
/// chains of grid indices, by the `O(n^2)` dynamic program
/// `V[j] = max_(i<j) (V[i] + d(i,j)^p)`.
///
/// Chains may start and end anywhere; extending a chain to the endpoints
/// never decreases the sum, so this equals the maximum over partitions that
/// include both endpoints.
pub fn p_variation(snapshots: &[RadialField], p: f64) -> Result<f64, NormError> {
    if snapshots.is_empty() {
        return Err(NormError::EmptySequence);
    }
    if !(p >= 1.0) {
        return Err(NormError::InvalidVariationExponent { p });
    }
    if snapshots.len() > MAX_VARIATION_POINTS {
        return Err(NormError::SequenceTooLong {
            len: snapshots.len(),
            max: MAX_VARIATION_POINTS,
        });
    }
    let n = snapshots.len();
    if n == 1 {
        return Ok(0.0);
    }
    let grid = snapshots[0].grid();
    if snapshots.iter().any(|s| s.grid() != grid) {
        return Err(NormError::Radial(crate::radial::RadialError::GridMismatch));
    }
    // Distances are formed from the pointwise difference (not the Gram
    // expansion), so increments between near-identical snapshots cancel at
    // machine precision instead of sqrt(machine precision).
    let weight = 4.0 * std::f64::consts::PI * grid.dr();
    let distance = |a: &RadialField, b: &RadialField| -> f64 {
        let mut acc = 0.0;
        for ((&r, x), y) in grid.nodes().iter().zip(a.values()).zip(b.values()) {
            acc += (x - y).norm_sqr() * r * r;
        }
        (acc * weight).sqrt()
    };
    let mut best = vec![0.0f64; n];
    let mut answer = 0.0f64;
    for j in 1..n {
        let mut vj = 0.0f64;
        for i in 0..j {
            let step = distance(&snapshots[j], &snapshots[i]).powf(p);
            vj = vj.max(best[i] + step);
        }
        best[j] = vj;
        answer = answer.max(vj);
    }
    Ok(answer.powf(1.0 / p))
}

/// Brute-force oracle for [`p_variation`]: enumerate every subset of grid
/// indices containing both endpoints (the `2^(n-2)` partitions). Test-scale
/// inputs only.
pub fn p_variation_exhaustive(snapshots: &[RadialField], p: f64) -> Result<f64, NormError> {
    let n = snapshots.len();
    if n == 0 {
        return Err(NormError::EmptySequence);
    }
    if n == 1 {
        return Ok(0.0);
    }
    assert!(n <= 20, "exhaustive oracle is exponential");
    let mut dist = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = snapshots[j].sub(&snapshots[i])?.l2_norm();
            dist[i][j] = d;
        }
    }
    let interior = n - 2;
    let mut best = 0.0f64;
    for mask in 0u32..(1u32 << interior) {
        let mut prev = 0usize;
        let mut acc = 0.0f64;
        for b in 0..interior {
            if mask & (1 << b) != 0 {
                let idx = b + 1;
                acc += dist[prev][idx].powf(p);
                prev = idx;
            }
        }
        acc += dist[prev][n - 1].powf(p);
        best = best.max(acc);
    }
    Ok(best.powf(1.0 / p))
}

/// Grid-restricted `V^2` norm along a flow: pull every snapshot back by the
/// inverse free flow, then take the exact 2-variation over the time grid.
/// This lower-bounds the true supremum over real partitions; jump points of
/// constructed atoms must lie on the grid for single atoms to be exact.
pub fn v2_norm(field: &SpaceTimeField, flow: Flow) -> Result<f64, NormError> {
    let pulled = pull_back(field, flow);
    p_variation(&pulled, 2.0)
}

/// Undo the free flow snapshot-by-snapshot (interaction picture).
pub fn pull_back(field: &SpaceTimeField, flow: Flow) -> Vec<RadialField> {
    field
        .snapshots()
        .iter()
        .zip(field.tgrid().times())
        .map(|(s, t)| {
            let m = match flow {
                Flow::Schrodinger => MultiplierSymbol::SchrodingerPhase(-t),
                Flow::KgPlus => MultiplierSymbol::KgPhase { t: -t, positive: true },
                Flow::KgMinus => MultiplierSymbol::KgPhase { t: -t, positive: false },
            };
            crate::frequency::apply_multiplier(s, m)
        })
        .collect()
}

/// One atom: a step function of free waves with `sum ||phi_k||^2 = 1`.
#[derive(Debug, Clone)]
pub struct Atom {
    /// Grid indices of the jump times `t_1 < ... < t_(K-1)`; the field is 0
    /// before the first jump (`phi_1 = 0`).
    pub jump_indices: Vec<usize>,
    /// Normalized pieces `phi_2 .. phi_K`.
    pub pieces: Vec<RadialField>,
}

/// Explicit atomic decomposition certifying an upper bound `sum |lambda|`
/// for the atomic-space norm of a dyadic block.
#[derive(Debug, Clone)]
pub struct AtomicDecomposition {
    pub flow: Flow,
    pub atoms: Vec<Atom>,
    pub weights: Vec<f64>,
}

impl AtomicDecomposition {
    pub fn single(flow: Flow, atom: Atom) -> Self {
        Self {
            flow,
            atoms: vec![atom],
            weights: vec![1.0],
        }
    }

    /// The certified upper bound `sum |lambda_k|`.
    pub fn upper_bound(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }
}

/// Build a single atom: normalize the pieces, sample the step-function of
/// free waves on the time grid, and return the field with its record.
pub fn build_atom(
    grid: &GridRef,
    tgrid: &TimeGrid,
    jump_indices: &[usize],
    pieces: &[RadialField],
    flow: Flow,
) -> Result<(SpaceTimeField, AtomicDecomposition), NormError> {
    if jump_indices.is_empty()
        || jump_indices.windows(2).any(|w| w[0] >= w[1])
        || *jump_indices.last().unwrap() >= tgrid.n_t
    {
        return Err(NormError::BadPartition);
    }
    if pieces.len() != jump_indices.len() {
        return Err(NormError::PieceCountMismatch {
            pieces: pieces.len(),
            jumps: jump_indices.len(),
        });
    }
    let total: f64 = pieces.iter().map(|p| p.l2_norm().powi(2)).sum();
    if total <= 0.0 {
        return Err(NormError::ZeroPieces);
    }
    let scale = Complex64::new(1.0 / total.sqrt(), 0.0);
    let pieces: Vec<RadialField> = pieces.iter().map(|p| p.scaled(scale)).collect();

    let mut snapshots = Vec::with_capacity(tgrid.n_t);
    for l in 0..tgrid.n_t {
        // Active piece: the last jump at or before l.
        let pos = jump_indices.partition_point(|&jl| jl <= l);
        if pos == 0 {
            snapshots.push(RadialField::zero(grid));
        } else {
            let t = tgrid.time(l);
            let m = match flow {
                Flow::Schrodinger => MultiplierSymbol::SchrodingerPhase(t),
                Flow::KgPlus => MultiplierSymbol::KgPhase { t, positive: true },
                Flow::KgMinus => MultiplierSymbol::KgPhase { t, positive: false },
            };
            snapshots.push(crate::frequency::apply_multiplier(&pieces[pos - 1], m));
        }
    }
    let field = SpaceTimeField::new(grid.clone(), tgrid.clone(), snapshots)?;
    let atom = Atom {
        jump_indices: jump_indices.to_vec(),
        pieces,
    };
    Ok((field, AtomicDecomposition::single(flow, atom)))
}

/// Certified per-block upper bounds feeding the Z-norm aggregate.
#[derive(Debug, Clone)]
pub struct ZBlocks {
    /// Upper bound for the low block `P_(< -10)`, when present.
    pub low_block: Option<AtomicDecomposition>,
    /// Dyadic blocks `(k, decomposition)` with `k >= -10`.
    pub blocks: Vec<(i32, AtomicDecomposition)>,
}

/// Z-norm upper bound at regularity `s`:
/// `ub(P_(<-10)) + (sum_(k >= -10) 2^(2ks) ub_k^2)^(1/2)`, with every
/// atomic-space norm replaced by its certified decomposition bound.
pub fn z_norm_upper(decomp: &ZBlocks, s: f64) -> Result<f64, NormError> {
    if decomp.blocks.is_empty() && decomp.low_block.is_none() {
        return Err(NormError::MissingBlocks);
    }
    if let Some(&(k, _)) = decomp.blocks.iter().find(|(k, _)| *k < -10) {
        return Err(NormError::BlockBelowCutoff { k });
    }
    let low = decomp
        .low_block
        .as_ref()
        .map(|d| d.upper_bound())
        .unwrap_or(0.0);
    let mut sq = 0.0;
    for (k, d) in &decomp.blocks {
        let ub = d.upper_bound();
        sq += (2f64).powf(2.0 * s * *k as f64) * ub * ub;
    }
    Ok(low + sq.sqrt())
}
