//! Curvature and transversality quantities for the bilinear restriction
//! estimates: the gradient-separation sup `V_max`, Hessian sups `H_j`, the
//! separation scale `d_0`, and numeric margins for the wedge condition
//! (A1') and the derivative-ratio condition (A2), per configuration of the
//! three bilinear cases.
//!
//! Phases are radial, so gradients are `phi'(rho) xihat` and Hessians are
//! `alpha(rho) P_rad + beta(rho) P_tan`; all sups reduce to 1D scans plus an
//! explicit angle maximization.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransversalityError {
    #[error("case {case} hypothesis violated: {reason}")]
    HypothesisViolated { case: &'static str, reason: String },
}

/// Radial phase of a flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Phase {
    /// `|xi|^2`.
    Schrodinger,
    /// `<xi>`.
    KleinGordon,
}

impl Phase {
    /// `phi'(rho)` (radial gradient magnitude).
    pub fn gradient(self, rho: f64) -> f64 {
        match self {
            Phase::Schrodinger => 2.0 * rho,
            Phase::KleinGordon => rho / (1.0 + rho * rho).sqrt(),
        }
    }

    /// Radial and tangential Hessian eigenvalues.
    pub fn hessian_eigs(self, rho: f64) -> (f64, f64) {
        match self {
            Phase::Schrodinger => (2.0, 2.0),
            Phase::KleinGordon => {
                let b = (1.0 + rho * rho).sqrt();
                (1.0 / (b * b * b), 1.0 / b)
            }
        }
    }

    pub fn hessian_norm(self, rho: f64) -> f64 {
        let (a, b) = self.hessian_eigs(rho);
        a.abs().max(b.abs())
    }

    /// Sup of an estimate of the m-th derivative tensor norm over a radius
    /// interval. For the quadratic phase every derivative of order >= 3
    /// vanishes; for the Klein-Gordon phase the radial derivatives
    /// `d^m/drho^m <rho> = P_m(rho) <rho>^(1-2m)` come from the exact
    /// polynomial recurrence `P_(m+1) = (1+rho^2) P_m' + (1-2m) rho P_m`,
    /// and the angular components are covered by the usual
    /// `|f^(j)(rho)| / max(rho, 1)^(m-j)` envelope (the phase is smooth at
    /// the origin with intrinsic scale 1).
    pub fn derivative_sup(self, m: usize, rho_lo: f64, rho_hi: f64) -> f64 {
        match self {
            Phase::Schrodinger => {
                if m <= 2 {
                    2.0
                } else {
                    0.0
                }
            }
            Phase::KleinGordon => {
                let polys = kg_derivative_polys(m);
                let mut sup = 0.0f64;
                for i in 0..=128 {
                    let rho = rho_lo + (rho_hi - rho_lo) * i as f64 / 128.0;
                    let bracket = (1.0 + rho * rho).sqrt();
                    let cap = rho.max(1.0);
                    for (j, poly) in polys.iter().enumerate().skip(1) {
                        let fj = eval_poly(poly, rho) * bracket.powi(1 - 2 * j as i32);
                        sup = sup.max(fj.abs() / cap.powi((m - j) as i32));
                    }
                }
                sup
            }
        }
    }
}

/// Polynomials `P_1 .. P_m` of the Klein-Gordon radial derivatives.
fn kg_derivative_polys(m: usize) -> Vec<Vec<f64>> {
    let mut polys: Vec<Vec<f64>> = vec![vec![], vec![0.0, 1.0]];
    for j in 1..m {
        let p = &polys[j];
        // (1 + rho^2) P' + (1 - 2j) rho P.
        let mut next = vec![0.0; p.len() + 1];
        for (deg, &c) in p.iter().enumerate() {
            if deg >= 1 {
                let d = c * deg as f64;
                next[deg - 1] += d;
                next[deg + 1] += d;
            }
            next[deg + 1] += c * (1.0 - 2.0 * j as f64);
        }
        while next.last() == Some(&0.0) {
            next.pop();
        }
        polys.push(next);
    }
    polys
}

fn eval_poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// The three bilinear configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BilinearCase {
    /// KG wave at annulus `k` against a low Schrodinger ball at `k1`
    /// (`-3 <= k <= 7`, `k1 <= k - 10`); `d0 = 2^k1`.
    I,
    /// Low KG ball at `k` against a Schrodinger annulus at `k1`
    /// (`k1 > -3`, `k <= 10`, `k <= k1 - 10`); `d0 = 2^k`.
    II,
    /// Schrodinger annulus at `k1` against a low Schrodinger ball at `k2`
    /// (`-3 <= k1 <= 10`, `k2 <= k1 - 10`); `d0 = 2^k2`.
    III,
}

impl BilinearCase {
    pub fn label(self) -> &'static str {
        match self {
            BilinearCase::I => "i",
            BilinearCase::II => "ii",
            BilinearCase::III => "iii",
        }
    }
}

/// One support region: a radius interval with its phase.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SupportRegion {
    pub phase: Phase,
    pub rho_lo: f64,
    pub rho_hi: f64,
}

impl SupportRegion {
    fn annulus_fattened(phase: Phase, k: i32, pad_octave: i32) -> Self {
        let pad = (2f64).powi(pad_octave);
        Self {
            phase,
            rho_lo: ((2f64).powi(k - 1) - pad).max(0.0),
            rho_hi: (2f64).powi(k + 1) + pad,
        }
    }

    fn ball(phase: Phase, k: i32) -> Self {
        Self {
            phase,
            rho_lo: 0.0,
            rho_hi: (2f64).powi(k + 1),
        }
    }

    fn gradient_sup(&self) -> f64 {
        // phi' is monotone for both phases.
        self.phase.gradient(self.rho_hi)
    }

    fn hessian_sup(&self) -> f64 {
        let mut sup = 0.0f64;
        for i in 0..=512 {
            let rho = self.rho_lo + (self.rho_hi - self.rho_lo) * i as f64 / 512.0;
            sup = sup.max(self.phase.hessian_norm(rho));
        }
        sup
    }
}

/// Computed transversality data with condition margins.
#[derive(Debug, Clone, Serialize)]
pub struct TransversalityData {
    pub case: &'static str,
    pub k: i32,
    pub k_low: i32,
    pub v_max: f64,
    pub h1: f64,
    pub h2: f64,
    pub d0: f64,
    /// Minimum over samples of `|Hess v ^ w| / (H_j V_max |v|)` for `v`
    /// orthogonal to the gradient separation `w`; condition (A1') needs
    /// this bounded below.
    pub a1_margin: f64,
    /// Minimum over regions of
    /// `min_(3<=m<=15) (H_j / ||grad^m Phi_j||)^(1/(m-2)) / d0`; condition
    /// (A2) first part needs >= 1.
    pub a2_derivative_margin: f64,
    /// `min_j (V_max / H_j) / d0`; condition (A2) second part needs >= 1.
    pub a2_separation_margin: f64,
    pub a1_pass: bool,
    pub a2_pass: bool,
}

/// Build the two support regions and the separation scale for a case.
pub fn case_regions(
    case: BilinearCase,
    k: i32,
    k_low: i32,
) -> Result<(SupportRegion, SupportRegion, f64), TransversalityError> {
    match case {
        BilinearCase::I => {
            if !(-3..=7).contains(&k) || k_low > k - 10 {
                return Err(TransversalityError::HypothesisViolated {
                    case: "i",
                    reason: format!("need -3 <= k <= 7 and k1 <= k - 10, got k={k}, k1={k_low}"),
                });
            }
            Ok((
                SupportRegion::annulus_fattened(Phase::KleinGordon, k, k_low),
                SupportRegion::ball(Phase::Schrodinger, k_low),
                (2f64).powi(k_low),
            ))
        }
        BilinearCase::II => {
            if k_low <= -3 || k > k_low - 10 || k > 10 {
                return Err(TransversalityError::HypothesisViolated {
                    case: "ii",
                    reason: format!(
                        "need k1 > -3, k <= 10, k <= k1 - 10, got k={k}, k1={k_low}"
                    ),
                });
            }
            Ok((
                SupportRegion::ball(Phase::KleinGordon, k),
                SupportRegion::annulus_fattened(Phase::Schrodinger, k_low, k),
                (2f64).powi(k),
            ))
        }
        BilinearCase::III => {
            if !(-3..=10).contains(&k) || k_low > k - 10 {
                return Err(TransversalityError::HypothesisViolated {
                    case: "iii",
                    reason: format!(
                        "need -3 <= k1 <= 10 and k2 <= k1 - 10, got k1={k}, k2={k_low}"
                    ),
                });
            }
            Ok((
                SupportRegion::annulus_fattened(Phase::Schrodinger, k, k_low),
                SupportRegion::ball(Phase::Schrodinger, k_low),
                (2f64).powi(k_low),
            ))
        }
    }
}

/// Compute `V_max`, `H_j`, `d_0`, and the condition margins for one case
/// configuration. `k` is the case's primary index; `k_low` is `k1` for
/// cases i/ii and `k2` for case iii.
pub fn transversality(
    case: BilinearCase,
    k: i32,
    k_low: i32,
) -> Result<TransversalityData, TransversalityError> {
    let (lam1, lam2, d0) = case_regions(case, k, k_low)?;

    // V_max: gradients are nonnegative multiples of unit vectors, so the
    // anti-aligned configuration maximizes the separation.
    let v_max = lam1.gradient_sup() + lam2.gradient_sup();
    let h1 = lam1.hessian_sup();
    let h2 = lam2.hessian_sup();

    let a1_margin = a1_wedge_margin(&lam1, &lam2, v_max);

    // (A2), first part, per region.
    let mut deriv_margin = f64::INFINITY;
    for lam in [&lam1, &lam2] {
        let h = lam.hessian_sup();
        let mut best = f64::INFINITY;
        for m in 3..=15 {
            let dm = lam.phase.derivative_sup(m, lam.rho_lo, lam.rho_hi);
            if dm > 0.0 {
                best = best.min((h / dm).powf(1.0 / (m as f64 - 2.0)));
            }
        }
        deriv_margin = deriv_margin.min(best / d0);
    }
    let a2_separation_margin = (v_max / h1.max(h2)) / d0;

    Ok(TransversalityData {
        case: case.label(),
        k,
        k_low,
        v_max,
        h1,
        h2,
        d0,
        a1_margin,
        a2_derivative_margin: deriv_margin,
        a2_separation_margin,
        a1_pass: a1_margin > 0.0,
        a2_pass: deriv_margin >= 1.0 && a2_separation_margin >= 1.0,
    })
}

/// (A1') wedge margin: for both orderings of the regions, sample pairs
/// `(xi, eta)` in the 3D-reduced coordinates, sample `v` in the plane
/// orthogonal to `w = grad Phi_j(xi) - grad Phi_k(eta)`, and take the
/// minimum of `|[Hess_j v] x w| / (H_j V_max |v|)`.
fn a1_wedge_margin(lam1: &SupportRegion, lam2: &SupportRegion, v_max: f64) -> f64 {
    let mut margin = f64::INFINITY;
    for (primary, other) in [(lam1, lam2), (lam2, lam1)] {
        let h_j = primary.hessian_sup();
        for i in 0..=16 {
            let rho1 = primary.rho_lo
                + (primary.rho_hi - primary.rho_lo) * i as f64 / 16.0;
            if rho1 == 0.0 {
                continue;
            }
            for l in 0..=16 {
                let rho2 = other.rho_lo + (other.rho_hi - other.rho_lo) * l as f64 / 16.0;
                for a in 0..=16 {
                    let theta = std::f64::consts::PI * a as f64 / 16.0;
                    // xi along e1, eta in the e1-e2 plane.
                    let xi = [rho1, 0.0, 0.0];
                    let eta = [rho2 * theta.cos(), rho2 * theta.sin(), 0.0];
                    let g1 = primary.phase.gradient(rho1);
                    let g2 = other.phase.gradient(rho2);
                    let w = [
                        g1 - if rho2 > 0.0 { g2 * eta[0] / rho2 } else { 0.0 },
                        -if rho2 > 0.0 { g2 * eta[1] / rho2 } else { 0.0 },
                        0.0,
                    ];
                    let wn = norm3(w);
                    if wn < 1e-14 {
                        continue;
                    }
                    // Orthonormal basis of the plane orthogonal to w.
                    let e_a = normalize(cross(w, [0.0, 0.0, 1.0]));
                    let e_b = normalize(cross(w, e_a));
                    let (alpha, beta) = primary.phase.hessian_eigs(rho1);
                    for s in 0..8 {
                        let ang = std::f64::consts::PI * s as f64 / 8.0;
                        let v = [
                            ang.cos() * e_a[0] + ang.sin() * e_b[0],
                            ang.cos() * e_a[1] + ang.sin() * e_b[1],
                            ang.cos() * e_a[2] + ang.sin() * e_b[2],
                        ];
                        // Hess v = alpha (v . xihat) xihat + beta (v - (v . xihat) xihat).
                        let xihat = [xi[0] / rho1, xi[1] / rho1, xi[2] / rho1];
                        let vr = dot(v, xihat);
                        let hv = [
                            beta * v[0] + (alpha - beta) * vr * xihat[0],
                            beta * v[1] + (alpha - beta) * vr * xihat[1],
                            beta * v[2] + (alpha - beta) * vr * xihat[2],
                        ];
                        let wedge = norm3(cross(hv, w));
                        margin = margin.min(wedge / (h_j * v_max));
                    }
                }
            }
        }
    }
    margin
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm3(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn normalize(a: [f64; 3]) -> [f64; 3] {
    let n = norm3(a);
    if n == 0.0 {
        [0.0, 0.0, 0.0]
    } else {
        [a[0] / n, a[1] / n, a[2] / n]
    }
}
