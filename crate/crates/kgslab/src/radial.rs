//! Radial grids and the 3D-radial Fourier transform.
//!
//! Radial functions on the ball `r <= r_max` are sampled on the uniform
//! interior nodes `r_i = i*dr`, `dr = r_max/(n+1)`, with a Dirichlet wall at
//! `r_max`. The substitution `v = r*u` turns the 3D radial Fourier transform
//! into a type-I discrete sine transform, so the radial Laplacian acts as the
//! exact symbol `-xi^2` on the dual nodes `xi_m = m*pi/r_max`. Quadrature is
//! the plain rectangle rule, which is what makes the discrete Plancherel
//! identity exact.

use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

/// Minimum usable interior node count.
pub const MIN_POINTS: usize = 16;

/// Fraction of `r_max` beyond which mass counts as boundary-contaminated.
pub const REFLECTIVITY_SHELL: f64 = 0.9;

/// Default tolerance on the boundary-shell mass fraction.
pub const REFLECTIVITY_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RadialError {
    #[error("grid requires r_max > 0, got {r_max}")]
    NonPositiveRadius { r_max: f64 },
    #[error("grid requires at least {MIN_POINTS} interior points, got {n_points}")]
    TooFewPoints { n_points: usize },
    #[error("field length {len} does not match grid with {expected} points")]
    LengthMismatch { len: usize, expected: usize },
    #[error("field contains a non-finite entry at index {index}")]
    NonFinite { index: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("Lebesgue exponent must satisfy q >= 1, got {q}")]
    InvalidExponent { q: f64 },
}

static PLANNER: Lazy<Mutex<FftPlanner<f64>>> = Lazy::new(|| Mutex::new(FftPlanner::new()));

fn plan_forward(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.lock().unwrap().plan_fft_forward(len)
}

fn plan_inverse(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.lock().unwrap().plan_fft_inverse(len)
}

/// Forward complex FFT used by the time-modulation machinery.
pub(crate) fn fft_forward(buf: &mut [Complex64]) {
    plan_forward(buf.len()).process(buf);
}

/// Unnormalized inverse complex FFT; divide by `len` to invert `fft_forward`.
pub(crate) fn fft_inverse(buf: &mut [Complex64]) {
    plan_inverse(buf.len()).process(buf);
}

/// Type-I discrete sine transform, `S_m = sum_j v_j sin(pi j m / (n+1))`,
/// realized by one complex FFT of the odd extension of length `2(n+1)`.
pub(crate) fn dst_i(values: &[Complex64]) -> Vec<Complex64> {
    let n = values.len();
    let m = 2 * (n + 1);
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (j, &v) in values.iter().enumerate() {
        buf[j + 1] = v;
        buf[m - 1 - j] = -v;
    }
    fft_forward(&mut buf);
    // The odd extension gives X_m = -2i S_m.
    let half_i = Complex64::new(0.0, 0.5);
    (1..=n).map(|k| half_i * buf[k]).collect()
}

/// Uniform radial grid on `(0, r_max)` with its sine-dual frequency nodes.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    r_max: f64,
    n_points: usize,
    dr: f64,
    dxi: f64,
    nodes: Vec<f64>,
    dual_nodes: Vec<f64>,
}

impl PartialEq for RadialGrid {
    fn eq(&self, other: &Self) -> bool {
        self.r_max == other.r_max && self.n_points == other.n_points
    }
}

/// Shared handle to a grid; fields hold one of these.
pub type GridRef = Arc<RadialGrid>;

impl RadialGrid {
    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn dr(&self) -> f64 {
        self.dr
    }

    /// Dual node spacing `pi / r_max`.
    pub fn dxi(&self) -> f64 {
        self.dxi
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn dual_nodes(&self) -> &[f64] {
        &self.dual_nodes
    }

    /// Largest representable frequency `n * pi / r_max`.
    pub fn xi_max(&self) -> f64 {
        self.dual_nodes[self.n_points - 1]
    }

    /// Number of dual nodes inside the annulus `[2^(k-1), 2^(k+1)]`.
    pub fn annulus_node_count(&self, k: i32) -> usize {
        let lo = (2f64).powi(k - 1);
        let hi = (2f64).powi(k + 1);
        self.dual_nodes
            .iter()
            .filter(|&&xi| xi >= lo && xi <= hi)
            .count()
    }
}

/// Build a grid, rejecting unusable resolutions.
pub fn make_grid(r_max: f64, n_points: usize) -> Result<GridRef, RadialError> {
    if !(r_max > 0.0) || !r_max.is_finite() {
        return Err(RadialError::NonPositiveRadius { r_max });
    }
    if n_points < MIN_POINTS {
        return Err(RadialError::TooFewPoints { n_points });
    }
    let dr = r_max / (n_points as f64 + 1.0);
    let dxi = std::f64::consts::PI / r_max;
    let nodes = (1..=n_points).map(|i| i as f64 * dr).collect();
    let dual_nodes = (1..=n_points).map(|m| m as f64 * dxi).collect();
    Ok(Arc::new(RadialGrid {
        r_max,
        n_points,
        dr,
        dxi,
        nodes,
        dual_nodes,
    }))
}

/// Complex radial profile `u(r_i)` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    grid: GridRef,
    values: Vec<Complex64>,
}

/// Sine-transform coefficients `u_hat(xi_m)` of a radial field.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyField {
    grid: GridRef,
    coeffs: Vec<Complex64>,
}

impl RadialField {
    pub fn zero(grid: &GridRef) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![Complex64::new(0.0, 0.0); grid.n_points()],
        }
    }

    pub fn from_values(grid: &GridRef, values: Vec<Complex64>) -> Result<Self, RadialError> {
        if values.len() != grid.n_points() {
            return Err(RadialError::LengthMismatch {
                len: values.len(),
                expected: grid.n_points(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(RadialError::NonFinite { index });
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn from_profile(grid: &GridRef, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &GridRef {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn scaled(&self, a: Complex64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * a).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, RadialError> {
        if self.grid != other.grid {
            return Err(RadialError::GridMismatch);
        }
        Ok(Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, RadialError> {
        Ok(self.add(&other.scaled(Complex64::new(-1.0, 0.0)))?)
    }

    pub fn conj(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.conj()).collect(),
        }
    }

    /// `||f||_{L^2}` via the radial rectangle quadrature.
    pub fn l2_norm(&self) -> f64 {
        l2_inner(self, self).map(|z| z.re.max(0.0).sqrt()).unwrap_or(f64::NAN)
    }

    /// Fraction of the `L^2` mass sitting in the outer shell `r > 0.9 r_max`.
    ///
    /// Truncation replaces free space by a Dirichlet wall, so runs must keep
    /// their essential support away from it; this is the monitored quantity.
    pub fn boundary_mass_fraction(&self) -> f64 {
        let cutoff = REFLECTIVITY_SHELL * self.grid.r_max();
        let mut outer = 0.0;
        let mut total = 0.0;
        for (&r, v) in self.grid.nodes().iter().zip(&self.values) {
            let m = v.norm_sqr() * r * r;
            total += m;
            if r > cutoff {
                outer += m;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            outer / total
        }
    }
}

impl FrequencyField {
    pub fn zero(grid: &GridRef) -> Self {
        Self {
            grid: grid.clone(),
            coeffs: vec![Complex64::new(0.0, 0.0); grid.n_points()],
        }
    }

    pub fn from_coeffs(grid: &GridRef, coeffs: Vec<Complex64>) -> Result<Self, RadialError> {
        if coeffs.len() != grid.n_points() {
            return Err(RadialError::LengthMismatch {
                len: coeffs.len(),
                expected: grid.n_points(),
            });
        }
        if let Some(index) = coeffs.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(RadialError::NonFinite { index });
        }
        Ok(Self {
            grid: grid.clone(),
            coeffs,
        })
    }

    pub fn grid(&self) -> &GridRef {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Multiply coefficients pointwise by a symbol of `xi`.
    pub fn multiplied(&self, symbol: impl Fn(f64) -> Complex64) -> Self {
        let coeffs = self
            .grid
            .dual_nodes()
            .iter()
            .zip(&self.coeffs)
            .map(|(&xi, c)| symbol(xi) * c)
            .collect();
        Self {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    /// Dual-side `L^2` norm `(1/(2 pi^2) sum |u_hat|^2 xi^2 dxi)^(1/2)`.
    ///
    /// Plancherel-equal to the spatial `L^2` norm, exactly at the discrete
    /// level thanks to DST-I orthogonality.
    pub fn weighted_l2_norm(&self) -> f64 {
        let dxi = self.grid.dxi();
        let sum: f64 = self
            .grid
            .dual_nodes()
            .iter()
            .zip(&self.coeffs)
            .map(|(&xi, c)| c.norm_sqr() * xi * xi)
            .sum();
        (sum * dxi / (2.0 * std::f64::consts::PI * std::f64::consts::PI)).sqrt()
    }
}

/// 3D radial Fourier transform `u_hat(xi) = (4 pi / xi) int u(r) sin(r xi) r dr`.
pub fn forward_transform(f: &RadialField) -> FrequencyField {
    let grid = &f.grid;
    let v: Vec<Complex64> = grid
        .nodes()
        .iter()
        .zip(&f.values)
        .map(|(&r, u)| u * r)
        .collect();
    let s = dst_i(&v);
    let dr = grid.dr();
    let coeffs = grid
        .dual_nodes()
        .iter()
        .zip(s)
        .map(|(&xi, sm)| sm * (4.0 * std::f64::consts::PI * dr / xi))
        .collect();
    FrequencyField {
        grid: grid.clone(),
        coeffs,
    }
}

/// Inverse of [`forward_transform`]: `u(r) = (1/(2 pi^2 r)) int u_hat(xi) sin(r xi) xi dxi`.
pub fn inverse_transform(ff: &FrequencyField) -> RadialField {
    let grid = &ff.grid;
    let w: Vec<Complex64> = grid
        .dual_nodes()
        .iter()
        .zip(&ff.coeffs)
        .map(|(&xi, c)| c * xi)
        .collect();
    let t = dst_i(&w);
    let scale = grid.dxi() / (2.0 * std::f64::consts::PI * std::f64::consts::PI);
    let values = grid
        .nodes()
        .iter()
        .zip(t)
        .map(|(&r, ti)| ti * (scale / r))
        .collect();
    RadialField {
        grid: grid.clone(),
        values,
    }
}

/// `<f, g> = 4 pi sum f(r_i) conj(g(r_i)) r_i^2 dr`.
pub fn l2_inner(f: &RadialField, g: &RadialField) -> Result<Complex64, RadialError> {
    if f.grid != g.grid {
        return Err(RadialError::GridMismatch);
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for ((&r, a), b) in f.grid.nodes().iter().zip(&f.values).zip(&g.values) {
        acc += a * b.conj() * (r * r);
    }
    Ok(acc * (4.0 * std::f64::consts::PI * f.grid.dr()))
}

/// `L^q` norm of a radial field; `q = infinity` gives the sup over nodes.
pub fn lq_norm(f: &RadialField, q: f64) -> Result<f64, RadialError> {
    if !(q >= 1.0) {
        return Err(RadialError::InvalidExponent { q });
    }
    if q.is_infinite() {
        return Ok(f
            .values
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max));
    }
    let mut acc = 0.0;
    for (&r, v) in f.grid.nodes().iter().zip(&f.values) {
        acc += v.norm().powf(q) * r * r;
    }
    Ok((4.0 * std::f64::consts::PI * f.grid.dr() * acc).powf(1.0 / q))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_field(grid: &GridRef) -> RadialField {
        RadialField::from_profile(grid, |r| Complex64::new((-r * r / 2.0).exp(), 0.0))
    }

    fn random_field(grid: &GridRef, seed: u64) -> RadialField {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.n_points())
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        RadialField::from_values(grid, values).unwrap()
    }

    #[test]
    fn grid_definition_and_unit_dual_spacing() {
        let grid = make_grid(std::f64::consts::PI, 16).unwrap();
        assert!((grid.dr() - std::f64::consts::PI / 17.0).abs() < 1e-15);
        for (m, &xi) in grid.dual_nodes().iter().enumerate() {
            assert!((xi - (m as f64 + 1.0)).abs() < 1e-12);
        }
        assert!(grid.nodes().windows(2).all(|w| w[0] < w[1]));
        assert!(grid.nodes().iter().all(|&r| r > 0.0 && r < grid.r_max()));
    }

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(matches!(
            make_grid(0.0, 64),
            Err(RadialError::NonPositiveRadius { .. })
        ));
        assert!(matches!(
            make_grid(1.0, 3),
            Err(RadialError::TooFewPoints { .. })
        ));
    }

    #[test]
    fn default_grid_dual_spacing() {
        let grid = make_grid(64.0, 4096).unwrap();
        assert!((grid.dxi() - std::f64::consts::PI / 64.0).abs() < 1e-15);
        assert!((grid.dxi() - 0.04908738521234052).abs() < 1e-12);
    }

    #[test]
    fn zero_transforms_to_zero() {
        let grid = make_grid(16.0, 64).unwrap();
        let f = RadialField::zero(&grid);
        let ff = forward_transform(&f);
        assert!(ff.coeffs().iter().all(|c| c.norm() == 0.0));
        let back = inverse_transform(&ff);
        assert!(back.values().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn roundtrip_on_random_field() {
        let grid = make_grid(32.0, 511).unwrap();
        let f = random_field(&grid, 7);
        let back = inverse_transform(&forward_transform(&f));
        let err = back.sub(&f).unwrap().l2_norm() / f.l2_norm();
        assert!(err <= 1e-10, "roundtrip error {err}");
    }

    #[test]
    fn single_dual_mode_roundtrip() {
        let grid = make_grid(32.0, 255).unwrap();
        let mut e = FrequencyField::zero(&grid);
        e.coeffs_mut()[17] = Complex64::new(1.0, 0.0);
        let f = inverse_transform(&e);
        let back = forward_transform(&f);
        let mut err2 = 0.0;
        for (a, b) in back.coeffs().iter().zip(e.coeffs()) {
            err2 += (a - b).norm_sqr();
        }
        assert!(err2.sqrt() <= 1e-10);
    }

    #[test]
    fn gaussian_matches_closed_form_pair() {
        let grid = make_grid(32.0, 2047).unwrap();
        let f = gaussian_field(&grid);
        let ff = forward_transform(&f);
        let scale = (2.0 * std::f64::consts::PI).powf(1.5);
        // Below ~1e-6 of the peak the reference value sits under the f64
        // cancellation floor of the quadrature, so the comparison switches
        // to an absolute one at that scale.
        let floor = 1e-6 * scale;
        for (&xi, c) in grid.dual_nodes().iter().zip(ff.coeffs()) {
            if xi > 8.0 {
                break;
            }
            let expect = scale * (-xi * xi / 2.0).exp();
            let rel = (c.re - expect).abs() / expect.max(floor);
            assert!(rel <= 1e-6, "xi={xi} rel={rel}");
            assert!(c.im.abs() <= 1e-9);
        }
    }

    #[test]
    fn plancherel_weighted_dual_norm() {
        let grid = make_grid(24.0, 383).unwrap();
        let f = random_field(&grid, 11);
        let ff = forward_transform(&f);
        let lhs = f.l2_norm();
        let rhs = ff.weighted_l2_norm();
        assert!((lhs - rhs).abs() / lhs <= 1e-10);
    }

    #[test]
    fn transform_linearity() {
        let grid = make_grid(20.0, 255).unwrap();
        let f = random_field(&grid, 3);
        let g = random_field(&grid, 4);
        let a = Complex64::new(0.3, -1.2);
        let b = Complex64::new(-2.0, 0.7);
        let combo = f.scaled(a).add(&g.scaled(b)).unwrap();
        let lhs = forward_transform(&combo);
        let fa = forward_transform(&f);
        let ga = forward_transform(&g);
        let mut max_err: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for ((l, x), y) in lhs.coeffs().iter().zip(fa.coeffs()).zip(ga.coeffs()) {
            max_err = max_err.max((l - (x * a + y * b)).norm());
            scale = scale.max(l.norm());
        }
        assert!(max_err <= 1e-13 * scale.max(1.0));
    }

    #[test]
    fn gaussian_inner_product_oracle() {
        let grid = make_grid(32.0, 2047).unwrap();
        let f = gaussian_field(&grid);
        let val = l2_inner(&f, &f).unwrap();
        let expect = std::f64::consts::PI.powf(1.5);
        assert!((val.re - expect).abs() / expect <= 1e-10);
        assert!(val.im.abs() <= 1e-12);
    }

    #[test]
    fn inner_product_conjugate_symmetry() {
        let grid = make_grid(16.0, 127).unwrap();
        let f = random_field(&grid, 21);
        let g = random_field(&grid, 22);
        let fg = l2_inner(&f, &g).unwrap();
        let gf = l2_inner(&g, &f).unwrap();
        assert!((fg - gf.conj()).norm() <= 1e-12 * fg.norm().max(1.0));
    }

    #[test]
    fn inner_product_grid_mismatch() {
        let g1 = make_grid(16.0, 127).unwrap();
        let g2 = make_grid(16.0, 128).unwrap();
        let f = RadialField::zero(&g1);
        let g = RadialField::zero(&g2);
        assert!(matches!(l2_inner(&f, &g), Err(RadialError::GridMismatch)));
    }

    #[test]
    fn lq_norm_basics() {
        let grid = make_grid(16.0, 255).unwrap();
        let zero = RadialField::zero(&grid);
        assert_eq!(lq_norm(&zero, 1.0).unwrap(), 0.0);
        let f = random_field(&grid, 9);
        let l2 = lq_norm(&f, 2.0).unwrap();
        let via_inner = f.l2_norm();
        assert!((l2 - via_inner).abs() <= 1e-12 * l2);
        let bump = RadialField::from_profile(&grid, |r| {
            Complex64::new(if (1.0..=2.0).contains(&r) { 1.0 } else { 0.0 }, 0.0)
        });
        assert_eq!(lq_norm(&bump, f64::INFINITY).unwrap(), 1.0);
        assert!(matches!(
            lq_norm(&f, 0.5),
            Err(RadialError::InvalidExponent { .. })
        ));
    }

    #[test]
    fn lq_norm_monotone_under_domination() {
        let grid = make_grid(16.0, 255).unwrap();
        let f = random_field(&grid, 31);
        let g = RadialField::from_values(
            &grid,
            f.values().iter().map(|v| v * 1.5).collect(),
        )
        .unwrap();
        for q in [1.0, 1.5, 2.0, 4.0, f64::INFINITY] {
            assert!(lq_norm(&f, q).unwrap() <= lq_norm(&g, q).unwrap() + 1e-14);
        }
    }

    #[test]
    fn boundary_mass_fraction_detects_outer_shell() {
        let grid = make_grid(64.0, 255).unwrap();
        let inner = gaussian_field(&grid);
        assert!(inner.boundary_mass_fraction() < 1e-12);
        let outer = RadialField::from_profile(&grid, |r| {
            Complex64::new(if r > 60.0 { 1.0 } else { 0.0 }, 0.0)
        });
        assert!(outer.boundary_mass_fraction() > 0.99);
    }
}
