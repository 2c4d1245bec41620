//! Resonance functions of the quadratic interactions and brute-force
//! extremization over dyadic annular regions.
//!
//! The three resonance functions, in the radial parametrization
//! `a = |xi|`, `b = |eta|`, `c = cos(angle)` with
//! `|xi - eta|^2 = a^2 + b^2 - 2abc`:
//!
//! ```text
//! Phi+- = |xi|^2 -+ <eta> - |xi - eta|^2 = -+ sqrt(1 + b^2) - b^2 + 2abc
//! Psi   = <xi> - |xi - eta|^2 + |eta|^2  =    sqrt(1 + a^2) - a^2 + 2abc
//! ```
//!
//! All three are affine in `c`, so the scan is a 2D grid over `(a, b)` with
//! the `c`-minimization done in closed form on the feasible `c`-interval.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResonanceError {
    #[error("region is infeasible: no (a, b, c) satisfies the dyadic and triangle constraints")]
    InfeasibleRegion,
    #[error("resonance point requires a, b >= 0 and c in [-1, 1]")]
    InvalidPoint,
    #[error("scan resolution must be at least 2 points per axis")]
    BadResolution,
}

/// Radial parametrization of a frequency pair `(xi, eta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResonancePoint {
    /// `|xi|`.
    pub a: f64,
    /// `|eta|`.
    pub b: f64,
    /// Cosine of the angle between `xi` and `eta`.
    pub c: f64,
}

impl ResonancePoint {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self, ResonanceError> {
        if !(a >= 0.0 && b >= 0.0 && (-1.0..=1.0).contains(&c)) {
            return Err(ResonanceError::InvalidPoint);
        }
        Ok(Self { a, b, c })
    }

    /// `|xi - eta|`.
    pub fn diff(&self) -> f64 {
        (self.a * self.a + self.b * self.b - 2.0 * self.a * self.b * self.c)
            .max(0.0)
            .sqrt()
    }
}

/// Which resonance function to extremize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ResonanceFn {
    PhiPlus,
    PhiMinus,
    Psi,
}

impl ResonanceFn {
    /// Decomposition `f(a, b, c) = base(a, b) + slope(a, b) * c`.
    fn affine(self, a: f64, b: f64) -> (f64, f64) {
        let slope = 2.0 * a * b;
        match self {
            ResonanceFn::PhiPlus => (-(1.0 + b * b).sqrt() - b * b, slope),
            ResonanceFn::PhiMinus => ((1.0 + b * b).sqrt() - b * b, slope),
            ResonanceFn::Psi => ((1.0 + a * a).sqrt() - a * a, slope),
        }
    }

    pub fn eval(self, p: &ResonancePoint) -> f64 {
        let (base, slope) = self.affine(p.a, p.b);
        base + slope * p.c
    }

    pub fn label(self) -> &'static str {
        match self {
            ResonanceFn::PhiPlus => "phi+",
            ResonanceFn::PhiMinus => "phi-",
            ResonanceFn::Psi => "psi",
        }
    }
}

/// `Phi+-(xi, eta)`.
pub fn phi(point: &ResonancePoint, positive: bool) -> f64 {
    if positive {
        ResonanceFn::PhiPlus.eval(point)
    } else {
        ResonanceFn::PhiMinus.eval(point)
    }
}

/// `Psi(xi, eta)`.
pub fn psi(point: &ResonancePoint) -> f64 {
    ResonanceFn::Psi.eval(point)
}

/// Dyadic constraint on one radial variable. Annuli are fattened to the
/// plateau `[2^(k-1), 2^(k+1)]` of the fattened cutoff, matching the
/// supports produced by the Littlewood-Paley blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DyadicRange {
    Annulus(i32),
    Ball(i32),
}

impl DyadicRange {
    pub fn bounds(self) -> (f64, f64) {
        match self {
            DyadicRange::Annulus(k) => ((2f64).powi(k - 1), (2f64).powi(k + 1)),
            DyadicRange::Ball(k) => (0.0, (2f64).powi(k + 1)),
        }
    }
}

/// Dyadic region in `(|xi|, |eta|, |xi - eta|)`. A missing `eta` constraint
/// means `|eta|` ranges over everything the triangle inequality allows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionSpec {
    pub xi: DyadicRange,
    pub eta: Option<DyadicRange>,
    pub diff: Option<DyadicRange>,
    /// Grid points per scanned axis.
    pub resolution: usize,
}

impl RegionSpec {
    pub fn new(xi: DyadicRange, eta: Option<DyadicRange>, diff: Option<DyadicRange>) -> Self {
        Self {
            xi,
            eta,
            diff,
            resolution: DEFAULT_RESOLUTION,
        }
    }

    pub fn with_resolution(mut self, resolution: usize) -> Self {
        self.resolution = resolution;
        self
    }
}

/// Default per-axis scan resolution.
pub const DEFAULT_RESOLUTION: usize = 200;

/// Rounds of 10x zoom refinement around the incumbent minimizer.
const REFINE_ROUNDS: usize = 2;

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = if n > 1 { (hi - lo) / (n as f64 - 1.0) } else { 0.0 };
    (0..n).map(move |i| lo + i as f64 * step)
}

/// Feasible `c`-interval at fixed `(a, b)` under an optional constraint on
/// `|xi - eta|`; `None` when empty.
fn c_interval(a: f64, b: f64, diff: Option<(f64, f64)>) -> Option<(f64, f64)> {
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    if let Some((d_lo, d_hi)) = diff {
        let ab = 2.0 * a * b;
        let sum_sq = a * a + b * b;
        if ab < 1e-300 {
            // Degenerate direction: |xi - eta| is pinned at sqrt(a^2 + b^2).
            let d = sum_sq.sqrt();
            if d < d_lo || d > d_hi {
                return None;
            }
            return Some((lo, hi));
        }
        lo = lo.max((sum_sq - d_hi * d_hi) / ab);
        hi = hi.min((sum_sq - d_lo * d_lo) / ab);
    }
    (lo <= hi).then_some((lo, hi))
}

/// Minimum of `|base + slope c|` over a `c`-interval, with its argmin.
fn min_abs_affine(base: f64, slope: f64, c_lo: f64, c_hi: f64) -> (f64, f64) {
    if slope == 0.0 {
        return (base.abs(), c_lo);
    }
    let root = -base / slope;
    if root >= c_lo && root <= c_hi {
        return ((base + slope * root).abs(), root);
    }
    let at_lo = (base + slope * c_lo).abs();
    let at_hi = (base + slope * c_hi).abs();
    if at_lo <= at_hi {
        (at_lo, c_lo)
    } else {
        (at_hi, c_hi)
    }
}

struct ScanWindow {
    a: (f64, f64),
    b: Option<(f64, f64)>,
}

fn scan_once(
    f: ResonanceFn,
    region: &RegionSpec,
    window: &ScanWindow,
) -> Option<(f64, ResonancePoint)> {
    let res = region.resolution;
    let diff_bounds = region.diff.map(DyadicRange::bounds);
    let mut best: Option<(f64, ResonancePoint)> = None;
    for a in linspace(window.a.0, window.a.1, res) {
        // |eta| range: explicit constraint, or everything the triangle
        // inequality allows given the diff constraint.
        let (b_lo, b_hi) = match (region.eta.map(DyadicRange::bounds), diff_bounds) {
            (Some(r), _) => r,
            (None, Some((d_lo, d_hi))) => {
                let _ = d_lo;
                ((a - d_hi).max(0.0), a + d_hi)
            }
            (None, None) => (0.0, 2.0 * a.max(1.0)),
        };
        let (b_lo, b_hi) = match window.b {
            Some((w_lo, w_hi)) => (b_lo.max(w_lo), b_hi.min(w_hi)),
            None => (b_lo, b_hi),
        };
        if b_lo > b_hi {
            continue;
        }
        for b in linspace(b_lo, b_hi, res) {
            let Some((c_lo, c_hi)) = c_interval(a, b, diff_bounds) else {
                continue;
            };
            let (base, slope) = f.affine(a, b);
            let (val, c) = min_abs_affine(base, slope, c_lo, c_hi);
            let candidate = (val, ResonancePoint { a, b, c });
            // Deterministic tie-break: strictly smaller value, or equal
            // value with lexicographically smaller point.
            best = match best {
                None => Some(candidate),
                Some(incumbent) => {
                    if val < incumbent.0
                        || (val == incumbent.0
                            && (a, b, c) < (incumbent.1.a, incumbent.1.b, incumbent.1.c))
                    {
                        Some(candidate)
                    } else {
                        Some(incumbent)
                    }
                }
            };
        }
    }
    best
}

/// Minimum of `|f|` over a dyadic region: coarse scan over `(a, b)` with the
/// exact affine minimization in `c`, then two rounds of 10x zoom around the
/// incumbent cell. Deterministic for fixed resolution.
pub fn region_min_abs(
    f: ResonanceFn,
    region: &RegionSpec,
) -> Result<(f64, ResonancePoint), ResonanceError> {
    if region.resolution < 2 {
        return Err(ResonanceError::BadResolution);
    }
    let a_bounds = region.xi.bounds();
    let mut window = ScanWindow {
        a: a_bounds,
        b: None,
    };
    let mut best = scan_once(f, region, &window).ok_or(ResonanceError::InfeasibleRegion)?;
    for round in 0..REFINE_ROUNDS {
        let zoom = 0.1f64.powi(round as i32 + 1);
        let a_half = (a_bounds.1 - a_bounds.0) * zoom / 2.0;
        let p = best.1;
        window.a = (
            (p.a - a_half).max(a_bounds.0),
            (p.a + a_half).min(a_bounds.1),
        );
        // The b window shrinks around the incumbent at the same rate; its
        // hard bounds are re-derived per a inside the scan.
        let b_scale = p.b.max(1.0) * zoom;
        window.b = Some(((p.b - b_scale).max(0.0), p.b + b_scale));
        if let Some(candidate) = scan_once(f, region, &window) {
            if candidate.0 < best.0 {
                best = candidate;
            }
        }
    }
    Ok(best)
}

/// Cases of the two nonresonance lemmas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LemmaCase {
    /// Schrodinger (i): `k1, k <= -3` gives `|Phi+-| >= 1/2`.
    Sch1,
    /// Schrodinger (ii): `k > 7`, `k1 <= k - 10` gives `|Phi+-| >~ 2^(2k)`.
    Sch2,
    /// Schrodinger (iii): `k ~ k1 > k2 + 10` gives `|Phi+-| >~ 2^(2k)`.
    Sch3,
    /// Klein-Gordon (i): `k1, k2 <= -3` gives `|Psi| >= 1/2`.
    Kg1,
    /// Klein-Gordon (ii): `k1 > 10`, `k2 <= k1 - 10` gives `|Psi| >~ 2^(2k1)`.
    Kg2,
}

impl LemmaCase {
    pub fn label(self) -> &'static str {
        match self {
            LemmaCase::Sch1 => "lemma2.1(i)",
            LemmaCase::Sch2 => "lemma2.1(ii)",
            LemmaCase::Sch3 => "lemma2.1(iii)",
            LemmaCase::Kg1 => "lemma2.2(i)",
            LemmaCase::Kg2 => "lemma2.2(ii)",
        }
    }

    pub fn all() -> [LemmaCase; 5] {
        [
            LemmaCase::Sch1,
            LemmaCase::Sch2,
            LemmaCase::Sch3,
            LemmaCase::Kg1,
            LemmaCase::Kg2,
        ]
    }
}

/// One verification row; failures and infeasible regions are rows, not
/// errors.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaRow {
    pub case: String,
    pub k: Option<i32>,
    pub k1: Option<i32>,
    pub k2: Option<i32>,
    pub feasible: bool,
    pub min_abs: f64,
    /// Required lower bound for this row (absolute, not normalized).
    pub bound: f64,
    pub margin: f64,
    /// `min_abs / 2^(2 k_scale)` for the quadratically-scaled cases; equals
    /// `min_abs` for the constant-bound cases.
    pub normalized: f64,
    /// Whether this row participates in the fitted-constant stability check.
    pub in_stability_window: bool,
    /// "asserted" rows must meet `bound`; "report-only" rows are
    /// informational (used where the lemma's stated range has no uniform
    /// constant, e.g. near the resonant sphere `|xi|^2 = <xi>`).
    pub policy: &'static str,
    pub pass: bool,
    pub argmin_a: f64,
    pub argmin_b: f64,
    pub argmin_c: f64,
}

#[allow(clippy::too_many_arguments)]
fn scan_row(
    case: LemmaCase,
    f: ResonanceFn,
    region: &RegionSpec,
    k: Option<i32>,
    k1: Option<i32>,
    k2: Option<i32>,
    bound: f64,
    scale_pow: Option<i32>,
    in_stability_window: bool,
    asserted: bool,
) -> LemmaRow {
    let tag = format!("{}:{}", case.label(), f.label());
    let policy = if asserted { "asserted" } else { "report-only" };
    match region_min_abs(f, region) {
        Ok((min_abs, p)) => {
            let normalized = match scale_pow {
                Some(two_k) => min_abs / (2f64).powi(two_k),
                None => min_abs,
            };
            LemmaRow {
                case: tag,
                k,
                k1,
                k2,
                feasible: true,
                min_abs,
                bound,
                margin: min_abs - bound,
                normalized,
                in_stability_window,
                policy,
                pass: !asserted || min_abs >= bound,
                argmin_a: p.a,
                argmin_b: p.b,
                argmin_c: p.c,
            }
        }
        Err(_) => LemmaRow {
            case: tag,
            k,
            k1,
            k2,
            feasible: false,
            min_abs: f64::NAN,
            bound,
            margin: f64::NAN,
            normalized: f64::NAN,
            in_stability_window: false,
            policy: "infeasible",
            pass: true,
            argmin_a: f64::NAN,
            argmin_b: f64::NAN,
            argmin_c: f64::NAN,
        },
    }
}

/// Run the default sweep for one lemma case. For the quadratically-scaled
/// cases the rows where `2^(2k)` genuinely dominates the constant-size
/// terms are marked as the stability window; the fitted constant is the
/// minimum normalized value over that window.
pub fn verify_lemma(case: LemmaCase, resolution: usize) -> Vec<LemmaRow> {
    let mut rows = Vec::new();
    match case {
        LemmaCase::Sch1 => {
            for k in -8..=-3 {
                for k1 in -8..=-3 {
                    let region = RegionSpec::new(
                        DyadicRange::Annulus(k1),
                        Some(DyadicRange::Annulus(k)),
                        None,
                    )
                    .with_resolution(resolution);
                    for f in [ResonanceFn::PhiPlus, ResonanceFn::PhiMinus] {
                        rows.push(scan_row(
                            case,
                            f,
                            &region,
                            Some(k),
                            Some(k1),
                            None,
                            0.5,
                            None,
                            false,
                            true,
                        ));
                    }
                }
            }
        }
        LemmaCase::Sch2 => {
            for k in 8..=12 {
                let k1 = k - 10;
                let region = RegionSpec::new(
                    DyadicRange::Annulus(k1),
                    Some(DyadicRange::Annulus(k)),
                    None,
                )
                .with_resolution(resolution);
                for f in [ResonanceFn::PhiPlus, ResonanceFn::PhiMinus] {
                    // Conservative floor 2^(2k) / 8; the fitted constant and
                    // its stability carry the quantitative content.
                    rows.push(scan_row(
                        case,
                        f,
                        &region,
                        Some(k),
                        Some(k1),
                        None,
                        (2f64).powi(2 * k) / 8.0,
                        Some(2 * k),
                        true,
                        true,
                    ));
                }
            }
        }
        LemmaCase::Sch3 => {
            // k ~ k1 (diagonal representative), k2 = k - 10. The stated
            // bound 2^(2k) carries no threshold on k, but the resonant
            // sphere |xi|^2 = <xi> sits inside the annuli for k in {0, 1},
            // where min |Phi+| is genuinely ~0 (the scan reports it); the
            // asserted window with the quadratic bound therefore starts at
            // k = 3 and the smaller k rows are report-only.
            for k in -2..=7 {
                let k1 = k;
                let k2 = k - 10;
                let region = RegionSpec::new(
                    DyadicRange::Annulus(k1),
                    Some(DyadicRange::Annulus(k)),
                    Some(DyadicRange::Annulus(k2)),
                )
                .with_resolution(resolution);
                let in_window = k >= 3;
                let bound = (2f64).powi(2 * k) / 8.0;
                for f in [ResonanceFn::PhiPlus, ResonanceFn::PhiMinus] {
                    rows.push(scan_row(
                        case,
                        f,
                        &region,
                        Some(k),
                        Some(k1),
                        Some(k2),
                        bound,
                        Some(2 * k),
                        in_window,
                        in_window,
                    ));
                }
            }
        }
        LemmaCase::Kg1 => {
            for k1 in -8..=-3 {
                for k2 in -8..=-3 {
                    let region = RegionSpec::new(
                        DyadicRange::Annulus(k1),
                        None,
                        Some(DyadicRange::Annulus(k2)),
                    )
                    .with_resolution(resolution);
                    rows.push(scan_row(
                        case,
                        ResonanceFn::Psi,
                        &region,
                        None,
                        Some(k1),
                        Some(k2),
                        0.5,
                        None,
                        false,
                        true,
                    ));
                }
            }
        }
        LemmaCase::Kg2 => {
            for k1 in 11..=15 {
                let k2 = k1 - 10;
                let region = RegionSpec::new(
                    DyadicRange::Annulus(k1),
                    None,
                    Some(DyadicRange::Annulus(k2)),
                )
                .with_resolution(resolution);
                rows.push(scan_row(
                    case,
                    ResonanceFn::Psi,
                    &region,
                    None,
                    Some(k1),
                    Some(k2),
                    (2f64).powi(2 * k1) / 8.0,
                    Some(2 * k1),
                    true,
                    true,
                ));
            }
        }
    }
    rows
}

/// Fitted constant and stability ratio (max/min of the normalized minima)
/// over the rows marked as the stability window.
pub fn fitted_constant(rows: &[LemmaRow]) -> Option<(f64, f64)> {
    let vals: Vec<f64> = rows
        .iter()
        .filter(|r| r.in_stability_window && r.feasible)
        .map(|r| r.normalized)
        .collect();
    if vals.is_empty() {
        return None;
    }
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = vals.iter().cloned().fold(0.0f64, f64::max);
    Some((min, max / min))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_reference_points() {
        let origin = ResonancePoint::new(0.0, 0.0, 0.0).unwrap();
        assert!((phi(&origin, true) + 1.0).abs() < 1e-15);
        assert!((phi(&origin, false) - 1.0).abs() < 1e-15);
        // eta = 0 makes the quadratic terms cancel for any c.
        for c in [-1.0, 0.3, 1.0] {
            let p = ResonancePoint::new(1.0, 0.0, c).unwrap();
            assert!((phi(&p, true) + 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn psi_reference_points() {
        let origin = ResonancePoint::new(0.0, 0.0, 0.0).unwrap();
        assert!((psi(&origin) - 1.0).abs() < 1e-15);
        for b in [0.1, 1.0, 7.0] {
            let p = ResonancePoint::new(0.0, b, 0.5).unwrap();
            assert!((psi(&p) - 1.0).abs() < 1e-12, "b={b}");
        }
    }

    #[test]
    fn phi_difference_identity() {
        let mut state = 0x2545F4914F6CDD1Du64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..1000 {
            let p = ResonancePoint {
                a: 10.0 * next(),
                b: 10.0 * next(),
                c: 2.0 * next() - 1.0,
            };
            let lhs = phi(&p, false) - phi(&p, true);
            let rhs = 2.0 * (1.0 + p.b * p.b).sqrt();
            assert!((lhs - rhs).abs() <= 1e-12 * rhs);
        }
    }

    #[test]
    fn psi_swap_covariance() {
        // Swapping eta -> xi - eta exchanges the roles of |eta| and
        // |xi - eta| in Psi.
        let samples = [
            (1.0, 0.5, 0.3),
            (2.0, 2.0, -0.7),
            (0.25, 3.0, 0.9),
            (5.0, 1.0, 0.0),
        ];
        for &(a, b, c) in &samples {
            let p = ResonancePoint::new(a, b, c).unwrap();
            let d = p.diff();
            if d == 0.0 || a == 0.0 {
                continue;
            }
            // cos angle between xi and xi - eta.
            let c_swapped = ((a * a + d * d - b * b) / (2.0 * a * d)).clamp(-1.0, 1.0);
            let q = ResonancePoint::new(a, d, c_swapped).unwrap();
            // |xi - (xi - eta)| = |eta|.
            assert!((q.diff() - b).abs() <= 1e-10 * b.max(1.0));
            let direct = (1.0 + a * a).sqrt() - b * b + d * d;
            assert!((psi(&q) - direct).abs() <= 1e-10 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn lemma_21i_single_instance() {
        let region = RegionSpec::new(
            DyadicRange::Annulus(-3),
            Some(DyadicRange::Annulus(-3)),
            None,
        )
        .with_resolution(100);
        for f in [ResonanceFn::PhiPlus, ResonanceFn::PhiMinus] {
            let (min_abs, _) = region_min_abs(f, &region).unwrap();
            assert!(min_abs >= 0.5, "{f:?}: {min_abs}");
        }
    }

    #[test]
    fn lemma_22i_single_instance() {
        let region = RegionSpec::new(
            DyadicRange::Annulus(-3),
            None,
            Some(DyadicRange::Annulus(-3)),
        )
        .with_resolution(100);
        let (min_abs, _) = region_min_abs(ResonanceFn::Psi, &region).unwrap();
        assert!(min_abs >= 0.5, "{min_abs}");
    }

    #[test]
    fn lemma_21ii_fitted_constant_stable() {
        let rows = verify_lemma(LemmaCase::Sch2, 100);
        assert!(rows.iter().all(|r| r.pass && r.feasible));
        let (c0, stability) = fitted_constant(&rows).unwrap();
        assert!(c0 > 0.0);
        assert!(stability <= 1.2, "stability {stability}");
    }

    #[test]
    fn infeasible_region_detected() {
        // |xi| ~ 2^10 while |eta| ~ 1 and |xi - eta| ~ 1 violates the
        // triangle inequality.
        let region = RegionSpec::new(
            DyadicRange::Annulus(10),
            Some(DyadicRange::Annulus(0)),
            Some(DyadicRange::Annulus(0)),
        )
        .with_resolution(50);
        assert!(matches!(
            region_min_abs(ResonanceFn::Psi, &region),
            Err(ResonanceError::InfeasibleRegion)
        ));
        // And as a report row.
        let row = scan_row(
            LemmaCase::Kg1,
            ResonanceFn::Psi,
            &region,
            Some(0),
            Some(10),
            Some(0),
            0.5,
            None,
            false,
            true,
        );
        assert!(!row.feasible);
        assert!(row.min_abs.is_nan());
    }

    #[test]
    fn region_min_monotone_under_shrinkage() {
        // Annulus(k) is a subset of Ball(k); the subset minimum dominates.
        let sup = RegionSpec::new(
            DyadicRange::Ball(2),
            Some(DyadicRange::Annulus(0)),
            None,
        )
        .with_resolution(150);
        let sub = RegionSpec::new(
            DyadicRange::Annulus(2),
            Some(DyadicRange::Annulus(0)),
            None,
        )
        .with_resolution(150);
        for f in [ResonanceFn::PhiPlus, ResonanceFn::PhiMinus, ResonanceFn::Psi] {
            let (m_sup, _) = region_min_abs(f, &sup).unwrap();
            let (m_sub, _) = region_min_abs(f, &sub).unwrap();
            assert!(m_sub >= m_sup * 0.99, "{f:?}: sub {m_sub} sup {m_sup}");
        }
    }

    #[test]
    fn scan_is_deterministic_and_refinement_stable() {
        let region = RegionSpec::new(
            DyadicRange::Annulus(1),
            Some(DyadicRange::Annulus(2)),
            None,
        )
        .with_resolution(100);
        let r1 = region_min_abs(ResonanceFn::PhiPlus, &region).unwrap();
        let r2 = region_min_abs(ResonanceFn::PhiPlus, &region).unwrap();
        assert_eq!(r1.0.to_bits(), r2.0.to_bits());
        assert_eq!(r1.1.a.to_bits(), r2.1.a.to_bits());
        // Doubling resolution moves the minimum by less than 1%.
        let fine = region.with_resolution(200);
        let r3 = region_min_abs(ResonanceFn::PhiPlus, &fine).unwrap();
        assert!((r1.0 - r3.0).abs() <= 0.01 * r1.0.max(1e-12));
    }

    #[test]
    fn full_lemma_sweeps_pass() {
        for case in LemmaCase::all() {
            let rows = verify_lemma(case, 60);
            assert!(!rows.is_empty());
            for row in &rows {
                assert!(row.pass, "{}: k={:?} k1={:?} k2={:?} min={} bound={}",
                    row.case, row.k, row.k1, row.k2, row.min_abs, row.bound);
            }
        }
    }
}
