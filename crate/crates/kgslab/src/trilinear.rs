//! Trilinear spacetime pairings and the dyadic summation check.
//!
//! The Schrodinger-side probe measures `|int N u1 conj(u2) dx dt|` for a
//! Klein-Gordon factor at annulus `k` and Schrodinger factors at `k1, k2`,
//! normalized by `min(1, 2^((-1/2 + eps/2) k))`; the Klein-Gordon-side probe
//! measures `|int <D>^-1 (u1 conj(u2)) conj(N) dx dt|` normalized by
//! `<2^k>^-1`. The third factor runs either as a free wave or as a
//! multi-step atom, which stresses the step discontinuities that distinguish
//! bounded-variation data from free flows.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::cutoff::taper_weights;
use crate::frequency::{bracket, random_annular_data, Flow};
use crate::radial::{forward_transform, inverse_transform, FrequencyField, GridRef, RadialField};
use crate::strichartz::SWEEP_REFLECTIVITY_LIMIT;
use crate::sweep::cell_rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrilinearError {
    #[error(transparent)]
    Frequency(#[from] crate::frequency::FrequencyError),
    #[error("boundary reflectivity {fraction:.3e} exceeds {limit:.1e}; truncation contaminated")]
    Reflectivity { fraction: f64, limit: f64 },
    #[error("summation check requires s >= 0 and s - 1/2 + eps/2 <= r <= s + 2, got s={s}, r={r}")]
    BadExponents { s: f64, r: f64 },
}

/// How the stressed factor is generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FactorKind {
    FreeWave,
    /// Multi-step atom with this many pieces.
    Atom(usize),
}

impl FactorKind {
    pub fn label(&self) -> String {
        match self {
            FactorKind::FreeWave => "free".into(),
            FactorKind::Atom(k) => format!("atom{k}"),
        }
    }
}

/// A streaming snapshot source: a free wave or an atom, with an optional
/// pointwise conjugation, reconstructed one time slice at a time.
pub(crate) enum SnapshotSource {
    Free {
        hat: FrequencyField,
        flow: Flow,
        conj: bool,
    },
    Atom {
        piece_hats: Vec<FrequencyField>,
        jumps: Vec<usize>,
        flow: Flow,
        conj: bool,
    },
}

impl SnapshotSource {
    fn snapshot(&self, t: f64, l: usize, grid: &GridRef) -> RadialField {
        let _ = grid;
        match self {
            SnapshotSource::Free { hat, flow, conj } => {
                let snap = inverse_transform(&hat.multiplied(|xi| flow.phase(t, xi)));
                if *conj {
                    snap.conj()
                } else {
                    snap
                }
            }
            SnapshotSource::Atom {
                piece_hats,
                jumps,
                flow,
                conj,
            } => {
                let pos = jumps.partition_point(|&jl| jl <= l);
                if pos == 0 {
                    return RadialField::zero(piece_hats[0].grid());
                }
                let snap =
                    inverse_transform(&piece_hats[pos - 1].multiplied(|xi| flow.phase(t, xi)));
                if *conj {
                    snap.conj()
                } else {
                    snap
                }
            }
        }
    }

    fn dual_at(&self, t: f64, l: usize, m: usize, xi: f64) -> Complex64 {
        let hat = match self {
            SnapshotSource::Free { hat, flow, conj } => {
                let v = hat.coeffs()[m] * flow.phase(t, xi);
                return if *conj { v.conj() } else { v };
            }
            SnapshotSource::Atom {
                piece_hats,
                jumps,
                flow,
                conj,
            } => {
                let pos = jumps.partition_point(|&jl| jl <= l);
                if pos == 0 {
                    return Complex64::new(0.0, 0.0);
                }
                let v = piece_hats[pos - 1].coeffs()[m] * flow.phase(t, xi);
                if *conj {
                    v.conj()
                } else {
                    v
                }
            }
        };
        hat
    }
}

/// Build a unit-normalized source at annulus `k`: a free wave, or an atom
/// whose pieces are independent annular draws with jump times on the grid.
pub(crate) fn make_source(
    grid: &GridRef,
    k: i32,
    flow: Flow,
    kind: FactorKind,
    conj: bool,
    n_t: usize,
    rng: &mut impl rand::Rng,
) -> Result<SnapshotSource, TrilinearError> {
    match kind {
        FactorKind::FreeWave => {
            let data = random_annular_data(grid, k, rng)?;
            Ok(SnapshotSource::Free {
                hat: forward_transform(&data),
                flow,
                conj,
            })
        }
        FactorKind::Atom(steps) => {
            let steps = steps.max(1);
            let mut jumps: Vec<usize> = (0..steps)
                .map(|_| rng.gen_range(1..n_t.max(2)))
                .collect();
            jumps.sort_unstable();
            jumps.dedup();
            let mut pieces: Vec<RadialField> = jumps
                .iter()
                .map(|_| {
                    let amp = Complex64::new(rng.gen::<f64>() + 0.05, rng.gen::<f64>() - 0.5);
                    random_annular_data(grid, k, rng).map(|f| f.scaled(amp))
                })
                .collect::<Result<_, _>>()?;
            let total: f64 = pieces.iter().map(|p| p.l2_norm().powi(2)).sum();
            let scale = Complex64::new(1.0 / total.sqrt(), 0.0);
            for p in &mut pieces {
                *p = p.scaled(scale);
            }
            Ok(SnapshotSource::Atom {
                piece_hats: pieces.iter().map(forward_transform).collect(),
                jumps,
                flow,
                conj,
            })
        }
    }
}

/// Whether the plateau supports `[2^(k-1), 2^(k+1)]` of three annuli are
/// convolution-compatible (each radius below the sum of the other two).
pub fn supports_compatible(k: i32, k1: i32, k2: i32) -> bool {
    let lo = |k: i32| (2f64).powi(k - 1);
    let hi = |k: i32| (2f64).powi(k + 1);
    lo(k) <= hi(k1) + hi(k2) && lo(k1) <= hi(k) + hi(k2) && lo(k2) <= hi(k) + hi(k1)
}

/// Whether the triple satisfies the `med ~ max` proximity the estimates
/// assume (within 10 octaves).
pub fn med_max_close(k: i32, k1: i32, k2: i32) -> bool {
    let mut v = [k, k1, k2];
    v.sort_unstable();
    v[2] - v[1] <= 10
}

/// One measured trilinear cell.
#[derive(Debug, Clone, Serialize)]
pub struct TrilinearRow {
    pub family: &'static str,
    pub k: i32,
    pub k1: i32,
    pub k2: i32,
    pub stressed_factor: String,
    pub compatible: bool,
    pub med_max_ok: bool,
    pub r_max: f64,
    pub n_points: usize,
    pub t_window: f64,
    pub n_t: usize,
    pub trials: usize,
    pub seed: u64,
    pub epsilon: f64,
    /// Max over trials of the absolute pairing value.
    pub value: f64,
    pub coefficient: f64,
    pub ratio: f64,
    pub boundary_max: f64,
}

pub(crate) struct TrilinearOutcome {
    pub value: f64,
    pub boundary_max: f64,
}

/// Streaming Schrodinger-nonlinearity pairing
/// `int w(t)^3 N u1 conj(u2) dx dt` over the window.
pub(crate) fn pair_schrodinger(
    grid: &GridRef,
    n_src: &SnapshotSource,
    u1_src: &SnapshotSource,
    u2_src: &SnapshotSource,
    t_len: f64,
    n_t: usize,
) -> TrilinearOutcome {
    let dt = t_len / n_t as f64;
    let taper = taper_weights(n_t);
    let dr = grid.dr();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut boundary_max = 0.0f64;
    for l in 0..n_t {
        let t = l as f64 * dt;
        let n = n_src.snapshot(t, l, grid);
        let u1 = u1_src.snapshot(t, l, grid);
        let u2 = u2_src.snapshot(t, l, grid);
        boundary_max = boundary_max
            .max(n.boundary_mass_fraction())
            .max(u1.boundary_mass_fraction())
            .max(u2.boundary_mass_fraction());
        let mut slice = Complex64::new(0.0, 0.0);
        for (((&r, a), b), c) in grid
            .nodes()
            .iter()
            .zip(n.values())
            .zip(u1.values())
            .zip(u2.values())
        {
            slice += a * b * c.conj() * (r * r);
        }
        let w = taper[l];
        acc += slice * (w * w * w * dt);
    }
    TrilinearOutcome {
        value: (acc * Complex64::new(4.0 * std::f64::consts::PI * dr, 0.0)).norm(),
        boundary_max,
    }
}

/// Streaming Klein-Gordon-nonlinearity pairing
/// `int w(t)^3 <D>^-1 (u1 conj(u2)) conj(N) dx dt`, with the product paired
/// against `N` on the dual side (Plancherel-exact, no extra transforms).
pub(crate) fn pair_kg(
    grid: &GridRef,
    n_src: &SnapshotSource,
    u1_src: &SnapshotSource,
    u2_src: &SnapshotSource,
    t_len: f64,
    n_t: usize,
) -> TrilinearOutcome {
    let dt = t_len / n_t as f64;
    let taper = taper_weights(n_t);
    let dxi = grid.dxi();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut boundary_max = 0.0f64;
    for l in 0..n_t {
        let t = l as f64 * dt;
        let u1 = u1_src.snapshot(t, l, grid);
        let u2 = u2_src.snapshot(t, l, grid);
        boundary_max = boundary_max
            .max(u1.boundary_mass_fraction())
            .max(u2.boundary_mass_fraction());
        let product = RadialField::from_values(
            grid,
            u1.values()
                .iter()
                .zip(u2.values())
                .map(|(a, b)| a * b.conj())
                .collect(),
        )
        .expect("finite product");
        let p_hat = forward_transform(&product);
        let mut slice = Complex64::new(0.0, 0.0);
        for (m, &xi) in grid.dual_nodes().iter().enumerate() {
            let n_dual = n_src.dual_at(t, l, m, xi);
            slice += p_hat.coeffs()[m] / bracket(xi) * n_dual.conj() * (xi * xi);
        }
        let w = taper[l];
        acc += slice * (w * w * w * dt);
    }
    let scale = dxi / (2.0 * std::f64::consts::PI * std::f64::consts::PI);
    TrilinearOutcome {
        value: (acc * Complex64::new(scale, 0.0)).norm(),
        boundary_max,
    }
}

/// Measure the Schrodinger-nonlinearity trilinear cell: `N` on the KG flow
/// at `k`, `u1`, `u2` on the Schrodinger flow at `k1`, `k2`; `u2` is the
/// stressed factor. Coefficient `min(1, 2^((-1/2 + eps/2) k))`.
#[allow(clippy::too_many_arguments)]
pub fn trilinear_schrodinger(
    grid: &GridRef,
    k: i32,
    k1: i32,
    k2: i32,
    trials: usize,
    seed: u64,
    t_len: f64,
    n_t: usize,
    epsilon: f64,
    stressed: FactorKind,
) -> Result<TrilinearRow, TrilinearError> {
    let coefficient = (1f64).min((2f64).powf((-0.5 + epsilon / 2.0) * k as f64));
    let mut value = 0.0f64;
    let mut boundary_max = 0.0f64;
    for trial in 0..trials {
        let mut rng = cell_rng(seed, &[30, k as i64, k1 as i64, k2 as i64, trial as i64]);
        let n_src = make_source(grid, k, Flow::KgPlus, FactorKind::FreeWave, false, n_t, &mut rng)?;
        let u1_src = make_source(
            grid,
            k1,
            Flow::Schrodinger,
            FactorKind::FreeWave,
            false,
            n_t,
            &mut rng,
        )?;
        let u2_src = make_source(grid, k2, Flow::Schrodinger, stressed, false, n_t, &mut rng)?;
        let out = pair_schrodinger(grid, &n_src, &u1_src, &u2_src, t_len, n_t);
        value = value.max(out.value);
        boundary_max = boundary_max.max(out.boundary_max);
    }
    if boundary_max > SWEEP_REFLECTIVITY_LIMIT {
        return Err(TrilinearError::Reflectivity {
            fraction: boundary_max,
            limit: SWEEP_REFLECTIVITY_LIMIT,
        });
    }
    Ok(TrilinearRow {
        family: "schrodinger",
        k,
        k1,
        k2,
        stressed_factor: stressed.label(),
        compatible: supports_compatible(k, k1, k2),
        med_max_ok: med_max_close(k, k1, k2),
        r_max: grid.r_max(),
        n_points: grid.n_points(),
        t_window: t_len,
        n_t,
        trials,
        seed,
        epsilon,
        value,
        coefficient,
        ratio: value / coefficient,
        boundary_max,
    })
}

/// Measure the Klein-Gordon-nonlinearity trilinear cell. Coefficient
/// `<2^k>^-1`; `N` is the stressed factor here.
#[allow(clippy::too_many_arguments)]
pub fn trilinear_kg(
    grid: &GridRef,
    k: i32,
    k1: i32,
    k2: i32,
    trials: usize,
    seed: u64,
    t_len: f64,
    n_t: usize,
    epsilon: f64,
    stressed: FactorKind,
) -> Result<TrilinearRow, TrilinearError> {
    let coefficient = 1.0 / bracket((2f64).powi(k));
    let mut value = 0.0f64;
    let mut boundary_max = 0.0f64;
    for trial in 0..trials {
        let mut rng = cell_rng(seed, &[31, k as i64, k1 as i64, k2 as i64, trial as i64]);
        let n_src = make_source(grid, k, Flow::KgPlus, stressed, false, n_t, &mut rng)?;
        let u1_src = make_source(
            grid,
            k1,
            Flow::Schrodinger,
            FactorKind::FreeWave,
            false,
            n_t,
            &mut rng,
        )?;
        let u2_src = make_source(
            grid,
            k2,
            Flow::Schrodinger,
            FactorKind::FreeWave,
            false,
            n_t,
            &mut rng,
        )?;
        let out = pair_kg(grid, &n_src, &u1_src, &u2_src, t_len, n_t);
        value = value.max(out.value);
        boundary_max = boundary_max.max(out.boundary_max);
    }
    if boundary_max > SWEEP_REFLECTIVITY_LIMIT {
        return Err(TrilinearError::Reflectivity {
            fraction: boundary_max,
            limit: SWEEP_REFLECTIVITY_LIMIT,
        });
    }
    Ok(TrilinearRow {
        family: "kg",
        k,
        k1,
        k2,
        stressed_factor: stressed.label(),
        compatible: supports_compatible(k, k1, k2),
        med_max_ok: med_max_close(k, k1, k2),
        r_max: grid.r_max(),
        n_points: grid.n_points(),
        t_window: t_len,
        n_t,
        trials,
        seed,
        epsilon,
        value,
        coefficient,
        ratio: value / coefficient,
        boundary_max,
    })
}

/// Validate the exponent range the summation lemma assumes.
pub fn validate_summation_range(s: f64, r: f64, epsilon: f64) -> Result<(), TrilinearError> {
    if s >= 0.0 && r >= s - 0.5 + epsilon / 2.0 && r <= s + 2.0 {
        Ok(())
    } else {
        Err(TrilinearError::BadExponents { s, r })
    }
}

/// Result of one summation check.
#[derive(Debug, Clone, Serialize)]
pub struct SummationRow {
    pub delta: f64,
    pub seq_len: usize,
    pub n_triples: usize,
    pub trials: usize,
    pub seed: u64,
    /// Max over trials of the constrained sum for unit vectors.
    pub constant: f64,
}

/// `sum over triples of 2^(-delta min) x_k y_k1 z_k2` for random
/// nonnegative unit vectors, maximized over trials. Triples violating
/// `|max - med| <= 10` are skipped.
pub fn summation_check(
    delta: f64,
    triples: &[(usize, usize, usize)],
    seq_len: usize,
    trials: usize,
    seed: u64,
) -> SummationRow {
    use rand::Rng;
    let active: Vec<&(usize, usize, usize)> = triples
        .iter()
        .filter(|(a, b, c)| med_max_close(*a as i32, *b as i32, *c as i32))
        .collect();
    let mut constant = 0.0f64;
    for trial in 0..trials {
        let mut rng = cell_rng(seed, &[40, trial as i64]);
        let mut draw = || {
            let mut v: Vec<f64> = (0..seq_len).map(|_| rng.gen::<f64>()).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in &mut v {
                *x /= norm;
            }
            v
        };
        let (x, y, z) = (draw(), draw(), draw());
        let mut sum = 0.0;
        for &&(a, b, c) in &active {
            if a >= seq_len || b >= seq_len || c >= seq_len {
                continue;
            }
            let min = a.min(b).min(c) as f64;
            sum += (2f64).powf(-delta * min) * x[a] * y[b] * z[c];
        }
        constant = constant.max(sum);
    }
    SummationRow {
        delta,
        seq_len,
        n_triples: active.len(),
        trials,
        seed,
        constant,
    }
}

/// Negative control: the diagonal sum with constant-one sequences grows
/// linearly in the sequence length when `delta = 0`.
pub fn summation_growth(delta: f64, lens: &[usize]) -> Vec<(usize, f64)> {
    lens.iter()
        .map(|&len| {
            let sum: f64 = (0..len).map(|k| (2f64).powf(-delta * k as f64)).sum();
            (len, sum)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::auto_grid;

    #[test]
    fn support_compatibility() {
        assert!(supports_compatible(0, 0, 0));
        assert!(supports_compatible(5, 5, -5));
        // 2^(k-1) = 32 above the sum 2 + 2 of the low plateaus.
        assert!(!supports_compatible(6, -1, -1));
        assert!(med_max_close(3, 3, -8));
        assert!(!med_max_close(12, 1, 0));
    }

    #[test]
    fn incompatible_supports_give_negligible_pairing() {
        let grid = auto_grid(&[-1, 6]);
        let row = trilinear_schrodinger(
            &grid,
            6,
            -1,
            -1,
            2,
            3,
            4.0,
            24,
            0.1,
            FactorKind::FreeWave,
        )
        .unwrap();
        assert!(!row.compatible);
        assert!(row.value <= 1e-8, "value {}", row.value);
    }

    #[test]
    fn compatible_diagonal_cell_is_nontrivial_and_deterministic() {
        let grid = auto_grid(&[2]);
        let a = trilinear_schrodinger(&grid, 2, 2, 2, 2, 9, 2.0, 24, 0.1, FactorKind::FreeWave)
            .unwrap();
        let b = trilinear_schrodinger(&grid, 2, 2, 2, 2, 9, 2.0, 24, 0.1, FactorKind::FreeWave)
            .unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert!(a.value > 1e-12);
        assert!(a.compatible && a.med_max_ok);
    }

    #[test]
    fn kg_pairing_swap_symmetry() {
        use rand::SeedableRng;
        let grid = auto_grid(&[0, 3]);
        let n_t = 24;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let n_data = random_annular_data(&grid, 0, &mut rng).unwrap();
        let u1_data = random_annular_data(&grid, 3, &mut rng).unwrap();
        let u2_data = random_annular_data(&grid, 3, &mut rng).unwrap();

        let free = |data: &RadialField, flow: Flow, conj: bool| SnapshotSource::Free {
            hat: forward_transform(data),
            flow,
            conj,
        };

        let fwd = pair_kg(
            &grid,
            &free(&n_data, Flow::KgPlus, false),
            &free(&u1_data, Flow::Schrodinger, false),
            &free(&u2_data, Flow::Schrodinger, false),
            2.0,
            n_t,
        );
        // Swap u1 <-> u2 and conjugate N (conjugate data on the conjugate
        // flow): the pairing conjugates, so the magnitude is unchanged.
        let n_conj = n_data.conj();
        let swapped = pair_kg(
            &grid,
            &free(&n_conj, Flow::KgMinus, false),
            &free(&u2_data, Flow::Schrodinger, false),
            &free(&u1_data, Flow::Schrodinger, false),
            2.0,
            n_t,
        );
        assert!(
            (fwd.value - swapped.value).abs() <= 1e-12 * fwd.value.max(1e-30),
            "fwd {} swapped {}",
            fwd.value,
            swapped.value
        );
    }

    #[test]
    fn summation_unit_basis_and_bounds() {
        // Unit basis vectors at a matching triple: the sum is the single
        // weight 2^(-delta min) <= 1.
        let triples = vec![(3usize, 3usize, 3usize)];
        let mut x = vec![0.0; 8];
        x[3] = 1.0;
        let min = 3.0f64;
        let expect = (2f64).powf(-0.1 * min);
        let mut sum = 0.0;
        for &(a, b, c) in &triples {
            sum += (2f64).powf(-0.1 * a.min(b).min(c) as f64) * x[a] * x[b] * x[c];
        }
        assert!((sum - expect).abs() < 1e-15);
        assert!(sum <= 1.0);

        // Random-vector check over a sweep-style table stays small.
        let table: Vec<(usize, usize, usize)> =
            (0..12).map(|k| (k, k, k)).chain([(5, 5, 0), (7, 7, 1)]).collect();
        let row = summation_check(0.1, &table, 24, 50, 11);
        assert!(row.constant <= 10.0, "constant {}", row.constant);
        assert_eq!(row.n_triples, 14);
    }

    #[test]
    fn summation_growth_is_linear_without_gain() {
        let rows = summation_growth(0.0, &[8, 16, 32, 64]);
        for w in rows.windows(2) {
            let (l0, s0) = w[0];
            let (l1, s1) = w[1];
            assert!((s1 / s0 - l1 as f64 / l0 as f64).abs() < 1e-12);
        }
        // With gain the sum saturates instead.
        let gained = summation_growth(0.1, &[8, 64]);
        assert!(gained[1].1 / gained[0].1 < 3.0);
    }

    #[test]
    fn summation_range_validation() {
        assert!(validate_summation_range(0.0, -0.4, 0.1).is_ok());
        assert!(validate_summation_range(0.0, -0.5, 0.1).is_err());
        assert!(validate_summation_range(1.0, 3.1, 0.1).is_err());
        assert!(validate_summation_range(-0.2, 0.0, 0.1).is_err());
    }
}
