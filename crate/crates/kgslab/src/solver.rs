//! First-order reformulation of the coupled nucleon-meson system, time
//! stepping, Picard/Duhamel iteration, and scattering diagnostics.
//!
//! With the crate's propagator convention (`e^{+i t xi^2}` for the nucleon
//! flow, `e^{+i t <xi>}` for the meson flow), the integrated system is
//!
//! ```text
//! (i d/dt - Laplace) u = (1/2) u (N + conj N) = u Re N
//! (i d/dt + <D>)     N = +<D>^-1 |u|^2
//! ```
//!
//! obtained from the second-order meson equation through
//! `N = (1 - i <D>^-1 d/dt) n`; the `+` nonlinearity sign is the default and
//! a toggle exposes `-`. The nucleon nonlinearity is a real potential, so
//! its exact substep is the unimodular phase rotation `u -> u e^{-i dt n}`,
//! which conserves mass identically; the meson substep is an exact Euler
//! update because `Re N` and `|u|^2` are invariant along it.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::frequency::{bracket, Flow};
use crate::radial::{
    forward_transform, inverse_transform, FrequencyField, GridRef, RadialField,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("second-order data must be real: relative imaginary mass {imag:.3e}")]
    ComplexData { imag: f64 },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("time step and span must be positive and T >= dt")]
    BadTimeParameters,
    #[error("trajectory too short for residual evaluation: {len} < 3 stored snapshots")]
    TooShort { len: usize },
}

/// State of the first-order system at one time.
#[derive(Debug, Clone)]
pub struct KGSState {
    pub u: RadialField,
    pub n: RadialField,
    pub t: f64,
}

/// Real second-order meson data `(n0, n1)`.
#[derive(Debug, Clone)]
pub struct SecondOrderData {
    pub n0: RadialField,
    pub n1: RadialField,
}

impl SecondOrderData {
    pub fn new(n0: RadialField, n1: RadialField) -> Result<Self, SolverError> {
        for f in [&n0, &n1] {
            let total = f.l2_norm();
            if total > 0.0 {
                let imag: f64 = f
                    .values()
                    .iter()
                    .zip(f.grid().nodes())
                    .map(|(v, &r)| v.im * v.im * r * r)
                    .sum::<f64>()
                    .sqrt()
                    * (4.0 * std::f64::consts::PI * f.grid().dr()).sqrt();
                if imag > 1e-12 * total {
                    return Err(SolverError::ComplexData { imag: imag / total });
                }
            }
        }
        if n0.grid() != n1.grid() {
            return Err(SolverError::GridMismatch);
        }
        Ok(Self { n0, n1 })
    }
}

/// `N0 = n0 - i <D>^-1 n1`.
pub fn to_first_order(data: &SecondOrderData) -> RadialField {
    let lifted = apply_bessel(&data.n1, -1.0);
    data.n0
        .add(&lifted.scaled(Complex64::new(0.0, -1.0)))
        .expect("same grid")
}

/// Invert the reformulation: `n = Re N`, `n1 = -<D> Im N`.
pub fn from_first_order(n_field: &RadialField) -> SecondOrderData {
    let grid = n_field.grid().clone();
    let re = RadialField::from_values(
        &grid,
        n_field.values().iter().map(|v| Complex64::new(v.re, 0.0)).collect(),
    )
    .expect("finite");
    let im = RadialField::from_values(
        &grid,
        n_field.values().iter().map(|v| Complex64::new(v.im, 0.0)).collect(),
    )
    .expect("finite");
    let n1 = apply_bessel(&im, 1.0).scaled(Complex64::new(-1.0, 0.0));
    SecondOrderData { n0: re, n1 }
}

fn apply_bessel(f: &RadialField, power: f64) -> RadialField {
    inverse_transform(
        &forward_transform(f).multiplied(|xi| Complex64::new(bracket(xi).powf(power), 0.0)),
    )
}

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    /// Half linear flow, exact nonlinear substep, half linear flow.
    StrangSplit,
    /// Exponential midpoint rule on the Duhamel form.
    ExponentialRk2,
}

/// Solver configuration beyond the time grid.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub method: Method,
    /// Scales the coupling; 0 turns the system linear.
    pub coupling: f64,
    /// Sign of the meson nonlinearity (`+1` per the first-order reduction).
    pub kg_sign: f64,
    /// Keep every `store_stride`-th snapshot (first and last always kept).
    pub store_stride: usize,
    /// Evaluate the discrete residual every this many steps.
    pub residual_stride: usize,
    /// Abort threshold for the boundary-shell mass fraction.
    pub reflectivity_limit: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            method: Method::StrangSplit,
            coupling: 1.0,
            kg_sign: 1.0,
            store_stride: 8,
            residual_stride: 8,
            reflectivity_limit: crate::radial::REFLECTIVITY_TOL,
        }
    }
}

/// Norm-explosion guard: one step may not grow either component by more.
const INSTABILITY_FACTOR: f64 = 10.0;

struct Propagators {
    grid: GridRef,
    dt: f64,
}

impl Propagators {
    fn half_linear(&self, u_hat: &mut FrequencyField, n_hat: &mut FrequencyField) {
        let half = self.dt / 2.0;
        for (c, &xi) in u_hat.coeffs_mut().iter_mut().zip(self.grid.dual_nodes()) {
            *c *= Flow::Schrodinger.phase(half, xi);
        }
        for (c, &xi) in n_hat.coeffs_mut().iter_mut().zip(self.grid.dual_nodes()) {
            *c *= Flow::KgPlus.phase(half, xi);
        }
    }
}

/// Advance one step. Zero data stays zero; a norm explosion reports
/// instability through the trajectory flags (the state is still returned).
pub fn step(state: &KGSState, dt: f64, opts: &SolverOptions) -> KGSState {
    match opts.method {
        Method::StrangSplit => step_strang(state, dt, opts),
        Method::ExponentialRk2 => step_erk2(state, dt, opts),
    }
}

fn step_strang(state: &KGSState, dt: f64, opts: &SolverOptions) -> KGSState {
    let grid = state.u.grid().clone();
    let prop = Propagators { grid: grid.clone(), dt };
    let mut u_hat = forward_transform(&state.u);
    let mut n_hat = forward_transform(&state.n);
    prop.half_linear(&mut u_hat, &mut n_hat);
    let u_mid = inverse_transform(&u_hat);
    let n_mid = inverse_transform(&n_hat);

    // Exact nonlinear substep: Re N and |u|^2 are invariant along it.
    let lam = opts.coupling;
    let u_new: Vec<Complex64> = u_mid
        .values()
        .iter()
        .zip(n_mid.values())
        .map(|(u, n)| u * Complex64::from_polar(1.0, -dt * lam * n.re))
        .collect();
    let usq = RadialField::from_values(
        &grid,
        u_mid
            .values()
            .iter()
            .map(|u| Complex64::new(u.norm_sqr(), 0.0))
            .collect(),
    )
    .expect("finite");
    let kick = apply_bessel(&usq, -1.0);
    let n_new: Vec<Complex64> = n_mid
        .values()
        .iter()
        .zip(kick.values())
        .map(|(n, k)| n + Complex64::new(0.0, -dt * lam * opts.kg_sign) * k)
        .collect();

    let mut u_hat = forward_transform(&RadialField::from_values(&grid, u_new).expect("finite"));
    let mut n_hat = forward_transform(&RadialField::from_values(&grid, n_new).expect("finite"));
    prop.half_linear(&mut u_hat, &mut n_hat);
    KGSState {
        u: inverse_transform(&u_hat),
        n: inverse_transform(&n_hat),
        t: state.t + dt,
    }
}

fn nonlinearity(
    grid: &GridRef,
    u: &RadialField,
    n: &RadialField,
    opts: &SolverOptions,
) -> (RadialField, RadialField) {
    // F_u = -i u Re N, F_N = -i sign <D>^-1 |u|^2, both scaled by coupling.
    let lam = opts.coupling;
    let fu = RadialField::from_values(
        grid,
        u.values()
            .iter()
            .zip(n.values())
            .map(|(uv, nv)| Complex64::new(0.0, -lam * nv.re) * uv)
            .collect(),
    )
    .expect("finite");
    let usq = RadialField::from_values(
        grid,
        u.values()
            .iter()
            .map(|uv| Complex64::new(uv.norm_sqr(), 0.0))
            .collect(),
    )
    .expect("finite");
    let fn_ = apply_bessel(&usq, -1.0).scaled(Complex64::new(0.0, -lam * opts.kg_sign));
    (fu, fn_)
}

fn propagate(grid: &GridRef, f: &RadialField, flow: Flow, t: f64) -> RadialField {
    let _ = grid;
    inverse_transform(&forward_transform(f).multiplied(|xi| flow.phase(t, xi)))
}

fn step_erk2(state: &KGSState, dt: f64, opts: &SolverOptions) -> KGSState {
    let grid = state.u.grid().clone();
    let (fu0, fn0) = nonlinearity(&grid, &state.u, &state.n, opts);
    // Midpoint value through the propagated half Euler step.
    let u_half = propagate(
        &grid,
        &state.u.add(&fu0.scaled(Complex64::new(dt / 2.0, 0.0))).expect("grid"),
        Flow::Schrodinger,
        dt / 2.0,
    );
    let n_half = propagate(
        &grid,
        &state.n.add(&fn0.scaled(Complex64::new(dt / 2.0, 0.0))).expect("grid"),
        Flow::KgPlus,
        dt / 2.0,
    );
    let (fu_mid, fn_mid) = nonlinearity(&grid, &u_half, &n_half, opts);
    let u_new = propagate(&grid, &state.u, Flow::Schrodinger, dt)
        .add(&propagate(&grid, &fu_mid, Flow::Schrodinger, dt / 2.0).scaled(Complex64::new(dt, 0.0)))
        .expect("grid");
    let n_new = propagate(&grid, &state.n, Flow::KgPlus, dt)
        .add(&propagate(&grid, &fn_mid, Flow::KgPlus, dt / 2.0).scaled(Complex64::new(dt, 0.0)))
        .expect("grid");
    KGSState {
        u: u_new,
        n: n_new,
        t: state.t + dt,
    }
}

/// Stored solution samples plus the per-step diagnostic series.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: GridRef,
    pub dt: f64,
    pub method: Method,
    pub opts: SolverOptions,
    /// Stored `(step_index, state)` pairs, uniform stride plus the endpoint.
    pub states: Vec<KGSState>,
    pub stored_stride: usize,
    /// Per-step `(t, ||u||, ||N||, boundary fraction)`.
    pub mass_series: Vec<(f64, f64, f64, f64)>,
    /// Max |d ||u|| | over the run.
    pub mass_drift: f64,
    /// Max sampled discrete residual, normalized by the data size.
    pub residual_max: f64,
    pub boundary_max: f64,
    /// Set when the run tripped the instability or reflectivity guard;
    /// the trajectory holds the partial run.
    pub aborted: Option<String>,
}

impl Trajectory {
    pub fn terminal(&self) -> &KGSState {
        self.states.last().expect("nonempty")
    }
}

/// Integrate on `[0, T]`. Instability and boundary contamination abort with
/// the partial trajectory and a reason, never a hard error.
pub fn solve(
    u0: &RadialField,
    n0: &RadialField,
    t_span: f64,
    dt: f64,
    opts: &SolverOptions,
) -> Result<Trajectory, SolverError> {
    if u0.grid() != n0.grid() {
        return Err(SolverError::GridMismatch);
    }
    if !(dt > 0.0) || !(t_span >= dt) {
        return Err(SolverError::BadTimeParameters);
    }
    let grid = u0.grid().clone();
    let n_steps = (t_span / dt).round() as usize;
    let data_scale = (u0.l2_norm() + n0.l2_norm()).max(1e-300);

    let mut state = KGSState {
        u: u0.clone(),
        n: n0.clone(),
        t: 0.0,
    };
    let mut states = vec![state.clone()];
    let mut mass_series = Vec::with_capacity(n_steps + 1);
    let mass0 = state.u.l2_norm();
    let mut mass_drift = 0.0f64;
    let mut boundary_max = 0.0f64;
    let mut aborted = None;
    let mut residual = ResidualProbe::new(&grid, dt, data_scale, opts);
    residual.push(&state);
    mass_series.push((0.0, mass0, state.n.l2_norm(), state.u.boundary_mass_fraction()));

    for step_idx in 1..=n_steps {
        let prev_u = state.u.l2_norm();
        let prev_n = state.n.l2_norm();
        state = step(&state, dt, opts);
        let mu = state.u.l2_norm();
        let mn = state.n.l2_norm();
        let boundary = state
            .u
            .boundary_mass_fraction()
            .max(state.n.boundary_mass_fraction());
        boundary_max = boundary_max.max(boundary);
        mass_drift = mass_drift.max((mu - mass0).abs());
        mass_series.push((state.t, mu, mn, boundary));
        residual.push(&state);

        let exploded = !mu.is_finite()
            || !mn.is_finite()
            || mu > INSTABILITY_FACTOR * prev_u.max(1e-300)
            || mn > INSTABILITY_FACTOR * (prev_n + prev_u * prev_u).max(1e-300);
        if exploded {
            aborted = Some(format!(
                "instability at t={:.4}: norms ({mu:.3e}, {mn:.3e})",
                state.t
            ));
            states.push(state.clone());
            break;
        }
        if boundary > opts.reflectivity_limit {
            aborted = Some(format!(
                "reflectivity {boundary:.3e} above {:.1e} at t={:.4}",
                opts.reflectivity_limit, state.t
            ));
            states.push(state.clone());
            break;
        }
        if step_idx % opts.store_stride == 0 || step_idx == n_steps {
            states.push(state.clone());
        }
    }

    Ok(Trajectory {
        grid,
        dt,
        method: opts.method,
        opts: *opts,
        states,
        stored_stride: opts.store_stride,
        mass_series,
        mass_drift,
        residual_max: residual.max(),
        boundary_max,
        aborted,
    })
}

/// On-the-fly residual of the integrated system at full step resolution,
/// using the 4th-order five-point time stencil so the stencil error sits
/// far below the scheme error:
/// `||i d4_t u + |D|^2 u - coupling u Re N||_{H^-2}` plus
/// `||i d4_t N + <D> N - coupling sign <D>^-1 |u|^2||_{H^-1}`.
struct ResidualProbe {
    grid: GridRef,
    dt: f64,
    scale: f64,
    stride: usize,
    opts: SolverOptions,
    ring: std::collections::VecDeque<KGSState>,
    count: usize,
    max: f64,
}

impl ResidualProbe {
    fn new(grid: &GridRef, dt: f64, scale: f64, opts: &SolverOptions) -> Self {
        Self {
            grid: grid.clone(),
            dt,
            scale,
            stride: opts.residual_stride.max(1),
            opts: *opts,
            ring: std::collections::VecDeque::with_capacity(5),
            count: 0,
            max: 0.0,
        }
    }

    fn push(&mut self, state: &KGSState) {
        self.ring.push_back(state.clone());
        if self.ring.len() > 5 {
            self.ring.pop_front();
        }
        self.count += 1;
        // Center of the current window is step count - 3 (0-based).
        if self.ring.len() == 5 && (self.count - 3) % self.stride == 0 {
            self.evaluate();
        }
    }

    fn evaluate(&mut self) {
        let hats: Vec<(FrequencyField, FrequencyField)> = self
            .ring
            .iter()
            .map(|s| (forward_transform(&s.u), forward_transform(&s.n)))
            .collect();
        let center = &self.ring[2];
        let (fu, fnl) = nonlinearity(&self.grid, &center.u, &center.n, &self.opts);
        let fu_hat = forward_transform(&fu);
        let fn_hat = forward_transform(&fnl);
        let value = residual_at(
            &self.grid,
            [&hats[0], &hats[1], &hats[2], &hats[3], &hats[4]],
            &fu_hat,
            &fn_hat,
            self.dt,
        );
        self.max = self.max.max(value / self.scale);
    }

    fn max(&self) -> f64 {
        self.max
    }
}

/// `H^-2 + H^-1` norm of the discrete equation residual at the center of a
/// five-snapshot window: `i d_t u + |D|^2 u - i F_u` and
/// `i d_t N + <D> N - i F_N`, with the 4th-order time stencil.
fn residual_at(
    grid: &GridRef,
    hats: [&(FrequencyField, FrequencyField); 5],
    fu_hat: &FrequencyField,
    fn_hat: &FrequencyField,
    h: f64,
) -> f64 {
    let inv_12h = 1.0 / (12.0 * h);
    let i_unit = Complex64::new(0.0, 1.0);
    let mut acc_u = 0.0f64;
    let mut acc_n = 0.0f64;
    for (m, &xi) in grid.dual_nodes().iter().enumerate() {
        let br = bracket(xi);
        let dot_u = (-(hats[4].0.coeffs()[m]) + 8.0 * hats[3].0.coeffs()[m]
            - 8.0 * hats[1].0.coeffs()[m]
            + hats[0].0.coeffs()[m])
            * inv_12h;
        let dot_n = (-(hats[4].1.coeffs()[m]) + 8.0 * hats[3].1.coeffs()[m]
            - 8.0 * hats[1].1.coeffs()[m]
            + hats[0].1.coeffs()[m])
            * inv_12h;
        let res_u = i_unit * dot_u + xi * xi * hats[2].0.coeffs()[m] - i_unit * fu_hat.coeffs()[m];
        let res_n = i_unit * dot_n + br * hats[2].1.coeffs()[m] - i_unit * fn_hat.coeffs()[m];
        acc_u += res_u.norm_sqr() / br.powi(4) * xi * xi;
        acc_n += res_n.norm_sqr() / br.powi(2) * xi * xi;
    }
    let scale = grid.dxi() / (2.0 * std::f64::consts::PI * std::f64::consts::PI);
    (acc_u * scale).sqrt() + (acc_n * scale).sqrt()
}

/// Standalone residual of a stored trajectory, on the stored time grid
/// (5-point stencil when five snapshots are available, else centered
/// differences), normalized by the data size.
pub fn residual(traj: &Trajectory) -> Result<f64, SolverError> {
    let n = traj.states.len();
    if n < 3 {
        return Err(SolverError::TooShort { len: n });
    }
    let grid = &traj.grid;
    let dxi = grid.dxi();
    let scale_norm = dxi / (2.0 * std::f64::consts::PI * std::f64::consts::PI);
    let data_scale = (traj.states[0].u.l2_norm() + traj.states[0].n.l2_norm()).max(1e-300);
    let hats: Vec<(FrequencyField, FrequencyField, FrequencyField, FrequencyField)> = traj
        .states
        .iter()
        .map(|s| {
            let (fu, fnl) = nonlinearity(grid, &s.u, &s.n, &traj.opts);
            (
                forward_transform(&s.u),
                forward_transform(&s.n),
                forward_transform(&fu),
                forward_transform(&fnl),
            )
        })
        .collect();
    let mut worst = 0.0f64;
    let five = n >= 5;
    let range = if five { 2..n - 2 } else { 1..n - 1 };
    for l in range {
        let h = traj.states[l + 1].t - traj.states[l].t;
        let mut acc_u = 0.0;
        let mut acc_n = 0.0;
        for (m, &xi) in grid.dual_nodes().iter().enumerate() {
            let br = bracket(xi);
            let (dotu, dotn) = if five {
                let du = (-(hats[l + 2].0.coeffs()[m]) + 8.0 * hats[l + 1].0.coeffs()[m]
                    - 8.0 * hats[l - 1].0.coeffs()[m]
                    + hats[l - 2].0.coeffs()[m])
                    / (12.0 * h);
                let dn = (-(hats[l + 2].1.coeffs()[m]) + 8.0 * hats[l + 1].1.coeffs()[m]
                    - 8.0 * hats[l - 1].1.coeffs()[m]
                    + hats[l - 2].1.coeffs()[m])
                    / (12.0 * h);
                (du, dn)
            } else {
                (
                    (hats[l + 1].0.coeffs()[m] - hats[l - 1].0.coeffs()[m]) / (2.0 * h),
                    (hats[l + 1].1.coeffs()[m] - hats[l - 1].1.coeffs()[m]) / (2.0 * h),
                )
            };
            let res_u = Complex64::new(0.0, 1.0) * dotu + xi * xi * hats[l].0.coeffs()[m]
                - Complex64::new(0.0, 1.0) * hats[l].2.coeffs()[m];
            let res_n = Complex64::new(0.0, 1.0) * dotn + br * hats[l].1.coeffs()[m]
                - Complex64::new(0.0, 1.0) * hats[l].3.coeffs()[m];
            acc_u += res_u.norm_sqr() / br.powi(4) * xi * xi;
            acc_n += res_n.norm_sqr() / br.powi(2) * xi * xi;
        }
        worst = worst.max(((acc_u * scale_norm).sqrt() + (acc_n * scale_norm).sqrt()) / data_scale);
    }
    Ok(worst)
}

/// One Picard iterate's bookkeeping.
#[derive(Debug, Clone)]
pub struct PicardIterate {
    pub terminal_u: RadialField,
    pub terminal_n: RadialField,
    /// `sup_t ||u^(m) - u^(m-1)||_(L^2)`; zero for the free iterate.
    pub sup_diff_u: f64,
    pub sup_diff_n: f64,
}

/// Result of the Duhamel/Picard iteration.
#[derive(Debug, Clone)]
pub struct PicardResult {
    pub iterates: Vec<PicardIterate>,
    /// Ratios of successive difference sups (u and N combined).
    pub contraction_ratios: Vec<f64>,
}

/// Picard iteration on the integral form, in the interaction picture:
/// pulled-back iterates accumulate the trapezoid cumulative integral of the
/// pulled-back nonlinearity, with exact linear propagation between nodes.
pub fn picard_iterate(
    u0: &RadialField,
    n0: &RadialField,
    t_span: f64,
    dt: f64,
    m_iters: usize,
    opts: &SolverOptions,
) -> Result<PicardResult, SolverError> {
    if u0.grid() != n0.grid() {
        return Err(SolverError::GridMismatch);
    }
    if !(dt > 0.0) || !(t_span >= dt) {
        return Err(SolverError::BadTimeParameters);
    }
    let grid = u0.grid().clone();
    let n_t = (t_span / dt).round() as usize + 1;
    let u0_hat = forward_transform(u0);
    let n0_hat = forward_transform(n0);

    // Pulled-back iterate on the time grid, dual side.
    let mut w_u: Vec<FrequencyField> = vec![u0_hat.clone(); n_t];
    let mut w_n: Vec<FrequencyField> = vec![n0_hat.clone(); n_t];
    let mut iterates: Vec<PicardIterate> = vec![PicardIterate {
        terminal_u: physical(&grid, &w_u[n_t - 1], Flow::Schrodinger, t_span),
        terminal_n: physical(&grid, &w_n[n_t - 1], Flow::KgPlus, t_span),
        sup_diff_u: 0.0,
        sup_diff_n: 0.0,
    }];

    for _ in 0..m_iters {
        // Pulled-back nonlinearity samples of the current iterate.
        let mut h_u: Vec<FrequencyField> = Vec::with_capacity(n_t);
        let mut h_n: Vec<FrequencyField> = Vec::with_capacity(n_t);
        for l in 0..n_t {
            let t = l as f64 * dt;
            let u = physical(&grid, &w_u[l], Flow::Schrodinger, t);
            let n = physical(&grid, &w_n[l], Flow::KgPlus, t);
            let (fu, fnl) = nonlinearity(&grid, &u, &n, opts);
            h_u.push(forward_transform(&fu).multiplied(|xi| Flow::Schrodinger.phase(-t, xi)));
            h_n.push(forward_transform(&fnl).multiplied(|xi| Flow::KgPlus.phase(-t, xi)));
        }
        // Cumulative trapezoid, then the new pulled-back iterate.
        let mut new_u = Vec::with_capacity(n_t);
        let mut new_n = Vec::with_capacity(n_t);
        let mut acc_u = FrequencyField::zero(&grid);
        let mut acc_n = FrequencyField::zero(&grid);
        new_u.push(u0_hat.clone());
        new_n.push(n0_hat.clone());
        for l in 1..n_t {
            for m in 0..grid.n_points() {
                let cu = (h_u[l - 1].coeffs()[m] + h_u[l].coeffs()[m]) * (dt / 2.0);
                acc_u.coeffs_mut()[m] += cu;
                let cn = (h_n[l - 1].coeffs()[m] + h_n[l].coeffs()[m]) * (dt / 2.0);
                acc_n.coeffs_mut()[m] += cn;
            }
            let mut wu = u0_hat.clone();
            let mut wn = n0_hat.clone();
            for m in 0..grid.n_points() {
                wu.coeffs_mut()[m] += acc_u.coeffs()[m];
                wn.coeffs_mut()[m] += acc_n.coeffs()[m];
            }
            new_u.push(wu);
            new_n.push(wn);
        }
        // Sup over the grid of the L^2 difference; the pullback is unitary,
        // so dual-side weighted norms suffice.
        let mut sup_u = 0.0f64;
        let mut sup_n = 0.0f64;
        for l in 0..n_t {
            sup_u = sup_u.max(weighted_diff(&grid, &new_u[l], &w_u[l]));
            sup_n = sup_n.max(weighted_diff(&grid, &new_n[l], &w_n[l]));
        }
        w_u = new_u;
        w_n = new_n;
        iterates.push(PicardIterate {
            terminal_u: physical(&grid, &w_u[n_t - 1], Flow::Schrodinger, t_span),
            terminal_n: physical(&grid, &w_n[n_t - 1], Flow::KgPlus, t_span),
            sup_diff_u: sup_u,
            sup_diff_n: sup_n,
        });
    }

    let mut contraction_ratios = Vec::new();
    for w in iterates.windows(2).skip(1) {
        let prev = w[0].sup_diff_u + w[0].sup_diff_n;
        let next = w[1].sup_diff_u + w[1].sup_diff_n;
        if prev > 0.0 {
            contraction_ratios.push(next / prev);
        }
    }
    Ok(PicardResult {
        iterates,
        contraction_ratios,
    })
}

fn physical(grid: &GridRef, hat: &FrequencyField, flow: Flow, t: f64) -> RadialField {
    let _ = grid;
    inverse_transform(&hat.multiplied(|xi| flow.phase(t, xi)))
}

fn weighted_diff(grid: &GridRef, a: &FrequencyField, b: &FrequencyField) -> f64 {
    let dxi = grid.dxi();
    let mut acc = 0.0;
    for (m, &xi) in grid.dual_nodes().iter().enumerate() {
        acc += (a.coeffs()[m] - b.coeffs()[m]).norm_sqr() * xi * xi;
    }
    (acc * dxi / (2.0 * std::f64::consts::PI * std::f64::consts::PI)).sqrt()
}

/// One Cauchy increment of the flow-pulled-back solution.
#[derive(Debug, Clone, Serialize)]
pub struct CauchyIncrement {
    pub t_lo: f64,
    pub t_hi: f64,
    /// `||w(t_hi) - w(t_lo)||_{L^2}` for the pulled-back nucleon field.
    pub inc_u: f64,
    /// `||M(t_hi) - M(t_lo)||_{H^(-1/2+eps)}` for the pulled-back meson field.
    pub inc_n: f64,
}

/// Scattering diagnostic: pull the trajectory back by the free flows and
/// report Cauchy increments over dyadic time pairs `(t, 2t)`.
pub fn scattering_diagnostic(traj: &Trajectory, epsilon: f64) -> Vec<CauchyIncrement> {
    let grid = &traj.grid;
    let span = traj.states.last().map(|s| s.t).unwrap_or(0.0);
    let mut increments = Vec::new();
    let mut t = 2.0f64;
    let sobolev_exp = -0.5 + epsilon;
    while 2.0 * t <= span + 1e-9 {
        let lo = nearest_state(traj, t);
        let hi = nearest_state(traj, 2.0 * t);
        let w_lo = pull_back_state(grid, lo, Flow::Schrodinger, true);
        let w_hi = pull_back_state(grid, hi, Flow::Schrodinger, true);
        let m_lo = pull_back_state(grid, lo, Flow::KgPlus, false);
        let m_hi = pull_back_state(grid, hi, Flow::KgPlus, false);
        let inc_u = w_hi.sub(&w_lo).expect("grid").l2_norm();
        let inc_n = crate::norms::sobolev_norm(&m_hi.sub(&m_lo).expect("grid"), sobolev_exp);
        increments.push(CauchyIncrement {
            t_lo: lo.t,
            t_hi: hi.t,
            inc_u,
            inc_n,
        });
        t *= 2.0;
    }
    increments
}

fn nearest_state(traj: &Trajectory, t: f64) -> &KGSState {
    traj.states
        .iter()
        .min_by(|a, b| {
            (a.t - t)
                .abs()
                .partial_cmp(&(b.t - t).abs())
                .expect("finite times")
        })
        .expect("nonempty")
}

fn pull_back_state(grid: &GridRef, state: &KGSState, flow: Flow, nucleon: bool) -> RadialField {
    let f = if nucleon { &state.u } else { &state.n };
    physical(
        grid,
        &forward_transform(f),
        flow,
        -state.t,
    )
}

/// Nonlinear correction size `||w(T) - u_0||_{L^2}` of the pulled-back
/// nucleon field; quadratic in the data size for small data.
pub fn scattering_correction(traj: &Trajectory) -> f64 {
    let grid = &traj.grid;
    let last = traj.terminal();
    let w = pull_back_state(grid, last, Flow::Schrodinger, true);
    w.sub(&traj.states[0].u).expect("grid").l2_norm()
}
