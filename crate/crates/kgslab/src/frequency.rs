//! Littlewood-Paley projections, Fourier multipliers, free propagators,
//! spacetime sampling, and modulation projections.
//!
//! Sign conventions, fixed once for the whole crate: the Schrodinger flow of
//! data `f` is the multiplier `e^{+i t xi^2}` and the (half) Klein-Gordon
//! flows are `e^{+- i t <xi>}`, with `<xi> = sqrt(1 + xi^2)`. With the time
//! transform `sum_l e^{-i t_l tau}`, Schrodinger free waves then sit exactly
//! on the characteristic surface `tau = xi^2` and the `+` Klein-Gordon flow
//! on `tau = <xi>`, so the modulation multipliers `rho_j(tau - h(xi))` are
//! literally small on the matching free flows.

use num_complex::Complex64;
use thiserror::Error;

use crate::cutoff::{rho_k, rho_low, rho_tilde_k, taper_weights};
use crate::radial::{
    fft_forward, fft_inverse, forward_transform, inverse_transform, FrequencyField, GridRef,
    RadialField,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrequencyError {
    #[error("standard Littlewood-Paley block requires k >= 0, got {k}")]
    NegativeBlock { k: i32 },
    #[error(
        "annulus 2^{k} is under-resolved: {count} dual nodes inside [2^(k-1), 2^(k+1)] (need >= {need}) on grid with xi_max = {xi_max:.4}"
    )]
    UnderResolvedAnnulus {
        k: i32,
        count: usize,
        need: usize,
        xi_max: f64,
    },
    #[error("time grid needs at least {need} samples, got {got}")]
    TooFewSnapshots { got: usize, need: usize },
    #[error("modulation projections require a windowed field; call apply_taper first")]
    Unwindowed,
    #[error("snapshots live on different grids")]
    GridMismatch,
}

/// Minimum dual nodes an annulus must contain to be considered resolved.
pub const MIN_ANNULUS_NODES: usize = 8;

/// Minimum snapshot count of a spacetime field.
pub const MIN_SNAPSHOTS: usize = 8;

/// Japanese bracket `<xi>`.
pub fn bracket(xi: f64) -> f64 {
    (1.0 + xi * xi).sqrt()
}

/// The two flows of the first-order system plus the conjugate KG branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Flow {
    /// `e^{+i t xi^2}` (free Schrodinger).
    Schrodinger,
    /// `e^{+i t <xi>}` (half Klein-Gordon, the branch the solver uses).
    KgPlus,
    /// `e^{-i t <xi>}`.
    KgMinus,
}

impl Flow {
    /// Characteristic surface `tau = h(xi)` the flow travels on.
    pub fn surface(self, xi: f64) -> f64 {
        match self {
            Flow::Schrodinger => xi * xi,
            Flow::KgPlus => bracket(xi),
            Flow::KgMinus => -bracket(xi),
        }
    }

    /// Unimodular propagator symbol at time `t`.
    pub fn phase(self, t: f64, xi: f64) -> Complex64 {
        Complex64::from_polar(1.0, t * self.surface(xi))
    }

    /// Group velocity `h'(xi)`, used for travel-budget window selection.
    pub fn group_velocity(self, xi: f64) -> f64 {
        match self {
            Flow::Schrodinger => 2.0 * xi,
            Flow::KgPlus => xi / bracket(xi),
            Flow::KgMinus => -xi / bracket(xi),
        }
    }
}

/// Dyadic frequency or modulation index.
pub type DyadicIndex = i32;

/// Symbolic Fourier multipliers acting on radial fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MultiplierSymbol {
    /// `<xi>^s`.
    BesselPower(f64),
    /// `e^{+i t xi^2}`.
    SchrodingerPhase(f64),
    /// `e^{+- i t <xi>}`; `positive` selects the sign.
    KgPhase { t: f64, positive: bool },
}

impl MultiplierSymbol {
    pub fn eval(&self, xi: f64) -> Complex64 {
        match *self {
            MultiplierSymbol::BesselPower(s) => Complex64::new(bracket(xi).powf(s), 0.0),
            MultiplierSymbol::SchrodingerPhase(t) => Flow::Schrodinger.phase(t, xi),
            MultiplierSymbol::KgPhase { t, positive } => {
                if positive {
                    Flow::KgPlus.phase(t, xi)
                } else {
                    Flow::KgMinus.phase(t, xi)
                }
            }
        }
    }
}

/// Apply a multiplier: forward transform, pointwise multiply, inverse.
pub fn apply_multiplier(f: &RadialField, m: MultiplierSymbol) -> RadialField {
    let ff = forward_transform(f);
    inverse_transform(&ff.multiplied(|xi| m.eval(xi)))
}

/// Littlewood-Paley block `P_k` on the dual side. `k = 0` is the complement
/// projection `I - sum_{k>=1} P_k`, realized exactly as the profile
/// `rho0(|xi|)`; `k >= 1` is the annular bump `rho_k`.
pub fn littlewood_paley_freq(
    ff: &FrequencyField,
    k: DyadicIndex,
) -> Result<FrequencyField, FrequencyError> {
    if k < 0 {
        return Err(FrequencyError::NegativeBlock { k });
    }
    if k == 0 {
        Ok(ff.multiplied(|xi| Complex64::new(rho_low(0, xi), 0.0)))
    } else {
        Ok(ff.multiplied(|xi| Complex64::new(rho_k(k, xi), 0.0)))
    }
}

/// Pure annular variant, valid for any `k` (used by `P_{<-10}` and
/// low-frequency experiments).
pub fn littlewood_paley_annular_freq(ff: &FrequencyField, k: DyadicIndex) -> FrequencyField {
    ff.multiplied(|xi| Complex64::new(rho_k(k, xi), 0.0))
}

/// Fattened block `P~_k` (multiplier `rho~_k`).
pub fn littlewood_paley_fattened_freq(ff: &FrequencyField, k: DyadicIndex) -> FrequencyField {
    ff.multiplied(|xi| Complex64::new(rho_tilde_k(k, xi), 0.0))
}

/// Low-pass `P_{< k}`: multiplier `rho0(2^{-(k-1)} |xi|)`, i.e. the smooth
/// sum of all annular blocks strictly below `k`.
pub fn littlewood_paley_below_freq(ff: &FrequencyField, k: DyadicIndex) -> FrequencyField {
    ff.multiplied(|xi| Complex64::new(rho_low(k - 1, xi), 0.0))
}

/// Spatial-side `P_k` (standard blocks, `k >= 0`).
pub fn littlewood_paley(f: &RadialField, k: DyadicIndex) -> Result<RadialField, FrequencyError> {
    let ff = forward_transform(f);
    Ok(inverse_transform(&littlewood_paley_freq(&ff, k)?))
}

/// Spatial-side annular `P_k`, any `k`.
pub fn littlewood_paley_annular(f: &RadialField, k: DyadicIndex) -> RadialField {
    inverse_transform(&littlewood_paley_annular_freq(&forward_transform(f), k))
}

/// Uniform time grid `t_l = t0 + l dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub n_t: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, n_t: usize) -> Result<Self, FrequencyError> {
        if n_t < MIN_SNAPSHOTS {
            return Err(FrequencyError::TooFewSnapshots {
                got: n_t,
                need: MIN_SNAPSHOTS,
            });
        }
        Ok(Self { t0, dt, n_t })
    }

    /// Window starting at zero of length `t_len` with `n_t` samples.
    pub fn window(t_len: f64, n_t: usize) -> Result<Self, FrequencyError> {
        Self::new(0.0, t_len / n_t as f64, n_t)
    }

    pub fn time(&self, l: usize) -> f64 {
        self.t0 + l as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_t).map(|l| self.time(l))
    }

    pub fn span(&self) -> f64 {
        self.dt * self.n_t as f64
    }
}

/// Time-indexed family of radial snapshots on a shared grid.
///
/// `window` records the taper weights once they have been multiplied into
/// the snapshots; modulation projections insist on that.
#[derive(Debug, Clone)]
pub struct SpaceTimeField {
    grid: GridRef,
    tgrid: TimeGrid,
    snapshots: Vec<RadialField>,
    window: Option<Vec<f64>>,
}

impl SpaceTimeField {
    pub fn new(
        grid: GridRef,
        tgrid: TimeGrid,
        snapshots: Vec<RadialField>,
    ) -> Result<Self, FrequencyError> {
        if snapshots.len() != tgrid.n_t {
            return Err(FrequencyError::TooFewSnapshots {
                got: snapshots.len(),
                need: tgrid.n_t,
            });
        }
        if snapshots.iter().any(|s| s.grid() != &grid) {
            return Err(FrequencyError::GridMismatch);
        }
        Ok(Self {
            grid,
            tgrid,
            snapshots,
            window: None,
        })
    }

    pub fn grid(&self) -> &GridRef {
        &self.grid
    }

    pub fn tgrid(&self) -> &TimeGrid {
        &self.tgrid
    }

    pub fn snapshots(&self) -> &[RadialField] {
        &self.snapshots
    }

    pub fn window(&self) -> Option<&[f64]> {
        self.window.as_deref()
    }

    pub fn is_windowed(&self) -> bool {
        self.window.is_some()
    }

    /// Multiply the smooth taper into the snapshots and record it.
    pub fn apply_taper(&self) -> SpaceTimeField {
        let w = taper_weights(self.tgrid.n_t);
        let snapshots = self
            .snapshots
            .iter()
            .zip(&w)
            .map(|(s, &wl)| s.scaled(Complex64::new(wl, 0.0)))
            .collect();
        SpaceTimeField {
            grid: self.grid.clone(),
            tgrid: self.tgrid.clone(),
            snapshots,
            window: Some(w),
        }
    }

    /// `L^2_{t,x}` norm with rectangle quadrature in time.
    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self
            .snapshots
            .iter()
            .map(|s| {
                let n = s.l2_norm();
                n * n
            })
            .sum();
        (sum * self.tgrid.dt).sqrt()
    }

    /// `<F, G>_{L^2_{t,x}}`.
    pub fn l2_inner(&self, other: &SpaceTimeField) -> Result<Complex64, FrequencyError> {
        if self.grid != other.grid || self.tgrid != other.tgrid {
            return Err(FrequencyError::GridMismatch);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in self.snapshots.iter().zip(&other.snapshots) {
            acc += crate::radial::l2_inner(a, b).map_err(|_| FrequencyError::GridMismatch)?;
        }
        Ok(acc * self.tgrid.dt)
    }

    /// Worst boundary-shell mass fraction over the snapshots.
    pub fn max_boundary_fraction(&self) -> f64 {
        self.snapshots
            .iter()
            .map(|s| s.boundary_mass_fraction())
            .fold(0.0, f64::max)
    }
}

/// Sample the free flow of `data` on a time grid.
pub fn free_wave(
    data: &RadialField,
    flow: Flow,
    tgrid: &TimeGrid,
) -> Result<SpaceTimeField, FrequencyError> {
    let ff = forward_transform(data);
    let snapshots = tgrid
        .times()
        .map(|t| inverse_transform(&ff.multiplied(|xi| flow.phase(t, xi))))
        .collect();
    SpaceTimeField::new(data.grid().clone(), tgrid.clone(), snapshots)
}

/// Deterministic random data with frequency support exactly on the plateau
/// `[2^(k-1), 2^(k+1)]` of the fattened cutoff, so `P~_k f = f` holds to
/// machine precision, and spatial concentration at small radius so that free
/// flows keep their essential support away from the Dirichlet wall.
///
/// Construction: `u_hat(xi) = rho_k(xi) g_k(xi) sum_a c_a e^{-i xi r_a}`,
/// with 8 complex Gaussian amplitudes `c_a`, centers `r_a` in
/// `[0.05, 0.15] r_max`, and a Gaussian sub-envelope `g_k` centered at
/// `2^k` of width `0.35 * 2^k`, then normalized to unit `L^2`. The
/// sub-envelope gives the spatial profile Gaussian-rate tails, which keeps
/// the boundary-shell mass below the reflectivity budget on sweep grids.
pub fn random_annular_data(
    grid: &GridRef,
    k: DyadicIndex,
    rng: &mut impl rand::Rng,
) -> Result<RadialField, FrequencyError> {
    let count = grid.annulus_node_count(k);
    if count < MIN_ANNULUS_NODES {
        return Err(FrequencyError::UnderResolvedAnnulus {
            k,
            count,
            need: MIN_ANNULUS_NODES,
            xi_max: grid.xi_max(),
        });
    }
    let centers: Vec<f64> = (0..8)
        .map(|_| (0.05 + 0.10 * rng.gen::<f64>()) * grid.r_max())
        .collect();
    let amps: Vec<Complex64> = (0..8)
        .map(|_| {
            // Box-Muller pair; keeps the draw count per trial fixed.
            let u1: f64 = rng.gen::<f64>().max(1e-12);
            let u2: f64 = rng.gen();
            let r = (-2.0 * u1.ln()).sqrt();
            Complex64::from_polar(r, 2.0 * std::f64::consts::PI * u2)
        })
        .collect();
    let xi_center = (2f64).powi(k);
    let width = 0.35 * xi_center;
    let mut ff = FrequencyField::zero(grid);
    for (m, &xi) in grid.dual_nodes().iter().enumerate() {
        let gaussian = (-((xi - xi_center) / width).powi(2)).exp();
        let env = rho_k(k, xi) * gaussian;
        if env == 0.0 {
            continue;
        }
        let mut z = Complex64::new(0.0, 0.0);
        for (c, &r0) in amps.iter().zip(&centers) {
            z += c * Complex64::from_polar(1.0, -xi * r0);
        }
        ff.coeffs_mut()[m] = z * env;
    }
    let norm = ff.weighted_l2_norm();
    let scale = Complex64::new(1.0 / norm, 0.0);
    for c in ff.coeffs_mut() {
        *c *= scale;
    }
    Ok(inverse_transform(&ff))
}

/// Characteristic surface selector for modulation projections.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Surface {
    /// `tau = xi^2`.
    Schrodinger,
    /// `tau = +<xi>` (multiplier `rho_j(tau - <xi>)`).
    KgPlus,
    /// `tau = -<xi>` (multiplier `rho_j(tau + <xi>)`).
    KgMinus,
}

impl Surface {
    pub fn flow(self) -> Flow {
        match self {
            Surface::Schrodinger => Flow::Schrodinger,
            Surface::KgPlus => Flow::KgPlus,
            Surface::KgMinus => Flow::KgMinus,
        }
    }
}

/// Band (`Q_j`) versus low-pass (`Q_{<= j}`) modulation projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModulationMode {
    Band,
    LowPass,
}

/// DFT bin frequencies `tau` for an `n`-point transform at spacing `dt`,
/// in the order rustfft produces them (non-negative first, then negative).
pub(crate) fn dft_bin_freqs(n: usize, dt: f64) -> Vec<f64> {
    let dtau = 2.0 * std::f64::consts::PI / (n as f64 * dt);
    (0..n)
        .map(|m| {
            let signed = if m <= (n - 1) / 2 {
                m as f64
            } else {
                m as f64 - n as f64
            };
            signed * dtau
        })
        .collect()
}

/// Modulation projection `Q_j` / `Q_{<= j}` relative to a characteristic
/// surface. Realized per dual node by conjugating with the free flow: pull
/// back by `e^{-i t h(xi)}`, project the remaining time-frequency content
/// with `rho_j` (or `rho0(2^-j .)`), and push forward again. This measures
/// `tau - h(xi)` directly, so the reachable modulation range is set by the
/// window length and `dt`, not by the size of `h(xi)` itself.
pub fn modulation_project(
    field: &SpaceTimeField,
    j: DyadicIndex,
    surface: Surface,
    mode: ModulationMode,
) -> Result<SpaceTimeField, FrequencyError> {
    let weights = modulation_weights(field, surface, |mu| match mode {
        ModulationMode::Band => rho_k(j, mu),
        ModulationMode::LowPass => rho_low(j, mu),
    })?;
    Ok(weights)
}

/// Shared kernel: apply an arbitrary real profile of the modulation variable
/// `mu = tau - h(xi)`.
pub(crate) fn modulation_weights(
    field: &SpaceTimeField,
    surface: Surface,
    profile: impl Fn(f64) -> f64,
) -> Result<SpaceTimeField, FrequencyError> {
    if !field.is_windowed() {
        return Err(FrequencyError::Unwindowed);
    }
    let grid = field.grid().clone();
    let tgrid = field.tgrid().clone();
    let n_t = tgrid.n_t;
    let n_x = grid.n_points();
    let flow = surface.flow();

    // Dual-side snapshots.
    let hats: Vec<FrequencyField> = field.snapshots().iter().map(forward_transform).collect();

    let taus = dft_bin_freqs(n_t, tgrid.dt);
    let mut out_hats: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.0, 0.0); n_x]; n_t];
    let mut buf = vec![Complex64::new(0.0, 0.0); n_t];
    for m in 0..n_x {
        let xi = grid.dual_nodes()[m];
        let h = flow.surface(xi);
        for l in 0..n_t {
            let t = tgrid.time(l);
            buf[l] = hats[l].coeffs()[m] * Complex64::from_polar(1.0, -t * h);
        }
        fft_forward(&mut buf);
        for (b, &tau) in buf.iter_mut().zip(&taus) {
            *b *= profile(tau);
        }
        fft_inverse(&mut buf);
        let inv_n = 1.0 / n_t as f64;
        for l in 0..n_t {
            let t = tgrid.time(l);
            out_hats[l][m] = buf[l] * inv_n * Complex64::from_polar(1.0, t * h);
        }
    }

    let snapshots = out_hats
        .into_iter()
        .map(|coeffs| {
            inverse_transform(&FrequencyField::from_coeffs(&grid, coeffs).expect("sized above"))
        })
        .collect();
    let mut out = SpaceTimeField::new(grid, tgrid, snapshots)?;
    out.window = field.window.clone();
    Ok(out)
}

/// Resolvable modulation octave range `[j_min, j_max]` of a windowed field:
/// the smallest nonzero DFT bin up to the time Nyquist frequency.
pub fn resolvable_modulation_range(tgrid: &TimeGrid) -> (i32, i32) {
    let dtau = 2.0 * std::f64::consts::PI / tgrid.span();
    let nyquist = std::f64::consts::PI / tgrid.dt;
    (dtau.log2().ceil() as i32, nyquist.log2().floor() as i32)
}

/// Leakage oracle: fraction of squared spacetime mass a windowed free wave
/// puts at modulations `|mu| >= mu_cut`, computed from the 1D spectrum of
/// the taper alone. A windowed free wave pulled back by its own flow is
/// exactly `w(t) * u_hat_0(xi)`, so its modulation profile is the window's
/// spectrum, independent of the spatial frequency.
pub fn window_leakage_fraction(n_t: usize, dt: f64, mu_cut: f64) -> f64 {
    let w = taper_weights(n_t);
    let mut buf: Vec<Complex64> = w.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft_forward(&mut buf);
    let taus = dft_bin_freqs(n_t, dt);
    let mut total = 0.0;
    let mut high = 0.0;
    for (b, &tau) in buf.iter().zip(&taus) {
        let p = b.norm_sqr();
        total += p;
        if tau.abs() >= mu_cut {
            high += p;
        }
    }
    high / total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{l2_inner, lq_norm, make_grid};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn test_grid() -> GridRef {
        make_grid(64.0, 1023).unwrap()
    }

    fn annular(grid: &GridRef, k: i32, seed: u64) -> RadialField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_annular_data(grid, k, &mut rng).unwrap()
    }

    #[test]
    fn bessel_zero_power_is_identity() {
        let grid = test_grid();
        let f = annular(&grid, 2, 1);
        let g = apply_multiplier(&f, MultiplierSymbol::BesselPower(0.0));
        let err = g.sub(&f).unwrap().l2_norm();
        assert!(err <= 1e-12);
    }

    #[test]
    fn schrodinger_phase_zero_is_identity_and_unitary() {
        let grid = test_grid();
        let f = annular(&grid, 1, 2);
        let g = apply_multiplier(&f, MultiplierSymbol::SchrodingerPhase(0.0));
        assert!(g.sub(&f).unwrap().l2_norm() <= 1e-12);
        for t in [0.1, 1.0, 10.0] {
            let g = apply_multiplier(&f, MultiplierSymbol::SchrodingerPhase(t));
            assert!((g.l2_norm() - f.l2_norm()).abs() <= 1e-11 * f.l2_norm());
        }
    }

    #[test]
    fn bessel_powers_compose_to_identity() {
        let grid = test_grid();
        let f = annular(&grid, 3, 3);
        let up = apply_multiplier(&f, MultiplierSymbol::BesselPower(1.25));
        let back = apply_multiplier(&up, MultiplierSymbol::BesselPower(-1.25));
        assert!(back.sub(&f).unwrap().l2_norm() / f.l2_norm() <= 1e-10);
    }

    #[test]
    fn blocks_with_separated_indices_are_orthogonal() {
        let grid = test_grid();
        let f = annular(&grid, 2, 4);
        let p2 = littlewood_paley(&f, 2).unwrap();
        let p5 = littlewood_paley(&p2, 5).unwrap();
        assert!(p5.l2_norm() / f.l2_norm() <= 1e-12);
    }

    #[test]
    fn blocks_telescope_to_identity() {
        let grid = test_grid();
        // Mixed-frequency field: Gaussian plus annular pieces.
        let g = RadialField::from_profile(&grid, |r| Complex64::new((-r * r / 8.0).exp(), 0.0));
        let f = g.add(&annular(&grid, 4, 5)).unwrap();
        let mut acc = RadialField::zero(&grid);
        // Nyquist octave of the default grid is log2(~50) < 6.
        for k in 0..=8 {
            acc = acc.add(&littlewood_paley(&f, k).unwrap()).unwrap();
        }
        assert!(acc.sub(&f).unwrap().l2_norm() / f.l2_norm() <= 1e-10);
    }

    #[test]
    fn fattened_block_absorbs_block() {
        let grid = test_grid();
        let f = annular(&grid, 3, 6);
        let pk = littlewood_paley(&f, 3).unwrap();
        let ptilde = inverse_transform(&littlewood_paley_fattened_freq(
            &forward_transform(&pk),
            3,
        ));
        assert!(ptilde.sub(&pk).unwrap().l2_norm() <= 1e-12 * pk.l2_norm().max(1e-30));
    }

    #[test]
    fn block_commutes_with_multiplier() {
        let grid = test_grid();
        let f = annular(&grid, 2, 7);
        let m = MultiplierSymbol::SchrodingerPhase(0.7);
        let a = littlewood_paley(&apply_multiplier(&f, m), 2).unwrap();
        let b = apply_multiplier(&littlewood_paley(&f, 2).unwrap(), m);
        assert!(a.sub(&b).unwrap().l2_norm() <= 1e-12 * f.l2_norm());
    }

    #[test]
    fn annular_data_contract() {
        let grid = test_grid();
        let f = annular(&grid, 2, 42);
        assert!((f.l2_norm() - 1.0).abs() <= 1e-12);
        let ptilde = inverse_transform(&littlewood_paley_fattened_freq(&forward_transform(&f), 2));
        assert!(ptilde.sub(&f).unwrap().l2_norm() <= 1e-10);
        // Determinism.
        let f2 = annular(&grid, 2, 42);
        assert_eq!(f.values(), f2.values());
        // Under-resolved annulus rejected.
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            random_annular_data(&grid, -4, &mut rng),
            Err(FrequencyError::UnderResolvedAnnulus { .. })
        ));
    }

    #[test]
    fn free_wave_single_point_and_group_law() {
        let grid = test_grid();
        let f = annular(&grid, 1, 8);
        let single = free_wave(&f, Flow::Schrodinger, &TimeGrid::new(0.0, 1.0, 8).unwrap()).unwrap();
        assert!(single.snapshots()[0].sub(&f).unwrap().l2_norm() <= 1e-12);

        let tg = TimeGrid::new(0.0, 0.25, 16).unwrap();
        let wave = free_wave(&f, Flow::KgPlus, &tg).unwrap();
        // Group law: propagating snapshot at t by s equals snapshot at t+s.
        let shifted = apply_multiplier(
            &wave.snapshots()[3],
            MultiplierSymbol::KgPhase {
                t: 2.0 * tg.dt,
                positive: true,
            },
        );
        let err = shifted.sub(&wave.snapshots()[5]).unwrap().l2_norm();
        assert!(err <= 1e-11);
        // Mass constant along the trajectory.
        for s in wave.snapshots() {
            assert!((s.l2_norm() - f.l2_norm()).abs() <= 1e-11);
        }
    }

    #[test]
    fn modulation_rejects_unwindowed() {
        let grid = test_grid();
        let f = annular(&grid, 1, 9);
        let wave = free_wave(&f, Flow::Schrodinger, &TimeGrid::window(16.0, 64).unwrap()).unwrap();
        assert!(matches!(
            modulation_project(&wave, 0, Surface::Schrodinger, ModulationMode::Band),
            Err(FrequencyError::Unwindowed)
        ));
    }

    #[test]
    fn modulation_partition_recovers_windowed_field() {
        let grid = make_grid(32.0, 255).unwrap();
        let f = annular(&grid, 1, 10);
        let wave = free_wave(&f, Flow::Schrodinger, &TimeGrid::window(16.0, 64).unwrap())
            .unwrap()
            .apply_taper();
        let (jmin, jmax) = resolvable_modulation_range(wave.tgrid());
        // Low-pass at the Nyquist octave recovers everything.
        let rec = modulation_project(&wave, jmax + 1, Surface::Schrodinger, ModulationMode::LowPass)
            .unwrap();
        let mut diff = 0.0;
        let mut scale = 0.0;
        for (a, b) in rec.snapshots().iter().zip(wave.snapshots()) {
            diff += a.sub(b).unwrap().l2_norm().powi(2);
            scale += b.l2_norm().powi(2);
        }
        assert!((diff / scale).sqrt() <= 1e-8);
        // Bands plus the floor low-pass telescope to the full projection.
        let mut acc = modulation_project(&wave, jmin - 1, Surface::Schrodinger, ModulationMode::LowPass)
            .unwrap();
        for j in jmin..=jmax + 1 {
            let band = modulation_project(&wave, j, Surface::Schrodinger, ModulationMode::Band).unwrap();
            let snaps = acc
                .snapshots()
                .iter()
                .zip(band.snapshots())
                .map(|(a, b)| a.add(b).unwrap())
                .collect();
            acc = SpaceTimeField::new(wave.grid().clone(), wave.tgrid().clone(), snaps).unwrap();
        }
        let mut diff = 0.0;
        for (a, b) in acc.snapshots().iter().zip(rec.snapshots()) {
            diff += a.sub(b).unwrap().l2_norm().powi(2);
        }
        assert!((diff / scale).sqrt() <= 1e-8);
    }

    #[test]
    fn modulation_bands_nearly_orthogonal() {
        let grid = make_grid(32.0, 255).unwrap();
        let f = annular(&grid, 1, 11);
        let wave = free_wave(&f, Flow::Schrodinger, &TimeGrid::window(16.0, 64).unwrap())
            .unwrap()
            .apply_taper();
        let q0 = modulation_project(&wave, 0, Surface::Schrodinger, ModulationMode::Band).unwrap();
        let q3 = modulation_project(&wave, 3, Surface::Schrodinger, ModulationMode::Band).unwrap();
        let ip = q0.l2_inner(&q3).unwrap().norm();
        assert!(ip <= 1e-10);
    }

    #[test]
    fn free_wave_concentrates_at_low_modulation() {
        let grid = make_grid(32.0, 255).unwrap();
        let n_t = 128;
        let t_len = 16.0;
        let tg = TimeGrid::window(t_len, n_t).unwrap();
        let mu_cut = 8.0 * (2.0 * std::f64::consts::PI / t_len);
        let j_cut = mu_cut.log2().ceil() as i32;
        let oracle = window_leakage_fraction(n_t, tg.dt, mu_cut);
        assert!(oracle <= 0.05, "window oracle leakage {oracle}");
        for k in [0, 2, 4] {
            let f = annular(&grid, k, 20 + k as u64);
            let wave = free_wave(&f, Flow::Schrodinger, &tg).unwrap().apply_taper();
            let total = wave.l2_norm().powi(2);
            // Mass at or above the cutoff octave: complement of the low-pass
            // just below it.
            let low =
                modulation_project(&wave, j_cut - 1, Surface::Schrodinger, ModulationMode::LowPass)
                    .unwrap();
            let mut high = 0.0;
            for (a, b) in wave.snapshots().iter().zip(low.snapshots()) {
                high += a.sub(b).unwrap().l2_norm().powi(2) * wave.tgrid().dt;
            }
            let frac = high / total;
            assert!(
                frac <= 0.05 + 2.0 * oracle,
                "k={k} high-modulation fraction {frac}, oracle {oracle}"
            );
            // Disposability proxy: Q_{<= j} is close to the identity on
            // windowed free waves once 2^j clears the window scale.
            let kept = modulation_project(&wave, j_cut, Surface::Schrodinger, ModulationMode::LowPass)
                .unwrap();
            let mut removed = 0.0;
            for (a, b) in wave.snapshots().iter().zip(kept.snapshots()) {
                removed += a.sub(b).unwrap().l2_norm().powi(2) * wave.tgrid().dt;
            }
            assert!(
                (removed / total).sqrt() <= 0.1,
                "k={k} disposability proxy {}",
                (removed / total).sqrt()
            );
        }
    }

    #[test]
    fn kg_wave_sits_on_its_own_surface() {
        let grid = make_grid(32.0, 255).unwrap();
        // Annulus 3: the wrong-surface content sits at |mu| = 2<xi> in
        // [8, 32], entirely outside the low-pass at j = 2. dt must keep the
        // modulation Nyquist pi/dt above 32 or that content aliases back in.
        let f = annular(&grid, 3, 30);
        let tg = TimeGrid::window(16.0, 256).unwrap();
        let wave = free_wave(&f, Flow::KgPlus, &tg).unwrap().apply_taper();
        let low = modulation_project(&wave, 2, Surface::KgPlus, ModulationMode::LowPass).unwrap();
        let mut removed = 0.0;
        let mut total = 0.0;
        for (a, b) in wave.snapshots().iter().zip(low.snapshots()) {
            removed += a.sub(b).unwrap().l2_norm().powi(2);
            total += a.l2_norm().powi(2);
        }
        assert!((removed / total).sqrt() <= 0.1);
        // Against the wrong surface the wave is far from low modulation.
        let wrong = modulation_project(&wave, 2, Surface::KgMinus, ModulationMode::LowPass).unwrap();
        let mut kept = 0.0;
        for s in wrong.snapshots() {
            kept += s.l2_norm().powi(2);
        }
        assert!(kept / total <= 0.05, "kept {}", kept / total);
    }

    #[test]
    fn lq_norm_reference() {
        // Cross-check the spacetime norms used downstream.
        let grid = test_grid();
        let f = annular(&grid, 2, 40);
        let n4 = lq_norm(&f, 4.0).unwrap();
        assert!(n4.is_finite() && n4 > 0.0);
        let ip = l2_inner(&f, &f).unwrap();
        assert!((ip.re.sqrt() - 1.0).abs() <= 1e-10);
    }
}
