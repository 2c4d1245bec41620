//! Shared sweep machinery: deterministic per-cell RNG streams, automatic
//! grid selection for dyadic sweeps, travel-budget windows, and least-squares
//! slope fits for trend criteria.

use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::frequency::Flow;
use crate::radial::{make_grid, GridRef};

/// Independent RNG stream for one sweep cell, derived from the master seed
/// and the cell tags. Bit-stable across platforms and thread schedules.
pub fn cell_rng(master_seed: u64, tags: &[i64]) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    for t in tags {
        h.update(t.to_le_bytes());
    }
    let digest = h.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    <ChaCha8Rng as rand::SeedableRng>::from_seed(seed)
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

/// Round up to the next `2^m - 1`, which makes the sine transform an exact
/// power-of-two FFT.
pub fn fft_friendly_points(min_points: usize) -> usize {
    let mut n = 31usize;
    while n < min_points {
        n = 2 * n + 1;
    }
    n
}

/// Pick a grid that resolves every annulus in `ks` and keeps low-frequency
/// data away from the Dirichlet wall: `r_max` large enough that the lowest
/// annulus carries ~30 dual nodes and tens of envelope widths of clearance
/// (the Gaussian sub-envelope of the annular data makes that sufficient for
/// the 1e-6 reflectivity budget), and `n` large enough that the highest
/// annulus plateau sits inside the grid with an octave of headroom.
pub fn auto_grid(ks: &[i32]) -> GridRef {
    let k_min = *ks.iter().min().expect("nonempty sweep");
    let k_max = *ks.iter().max().expect("nonempty sweep");
    let r_max = (2f64).powi((7 - k_min).max(6));
    let min_points = ((2f64).powi(k_max + 2) * r_max / std::f64::consts::PI).ceil() as usize;
    let n = fft_friendly_points(min_points.max(1023));
    make_grid(r_max, n).expect("auto grid parameters are valid")
}

/// Leaner grid for joint multi-annulus rows whose windows stay at the
/// undilated cap: one octave less wall clearance than [`auto_grid`], which
/// the Gaussian-tailed data still clears by a wide margin.
pub fn auto_grid_joint(ks: &[i32]) -> GridRef {
    let k_min = *ks.iter().min().expect("nonempty sweep");
    let k_max = *ks.iter().max().expect("nonempty sweep");
    let r_max = (2f64).powi((6 - k_min).max(6));
    let min_points = ((2f64).powi(k_max + 2) * r_max / std::f64::consts::PI).ceil() as usize;
    let n = fft_friendly_points(min_points.max(1023));
    make_grid(r_max, n).expect("auto grid parameters are valid")
}

/// Window length that keeps a wave at annulus `k` of the given flow inside
/// the safe interior for the whole run: the data sits within `0.15 r_max`
/// of the origin and must stay below `0.9 r_max` minus dispersive spreading.
pub fn travel_budget_window(grid: &GridRef, flow: Flow, k: i32, t_cap: f64) -> f64 {
    let xi_hi = (2f64).powi(k + 1);
    let speed = flow.group_velocity(xi_hi).abs().max(1e-9);
    let budget = 0.6 * grid.r_max() / speed;
    budget.min(t_cap)
}

/// Sweep window for a flow at annulus `k`: the travel budget, with the cap
/// dilated by the parabolic dispersion time `4^-k` where the flow is
/// Schrodinger-like (all negative-`k` regimes, and every Schrodinger
/// annulus), so the windowed norms are saturated consistently across the
/// swept octaves instead of being cut off mid-dispersion at low frequency.
pub fn sweep_window(grid: &GridRef, flow: Flow, k: i32, t_cap: f64) -> f64 {
    let dilation = match flow {
        Flow::Schrodinger => (4f64).powi((-k).max(0)),
        Flow::KgPlus | Flow::KgMinus => {
            if k < 0 {
                (4f64).powi(-k)
            } else {
                1.0
            }
        }
    };
    travel_budget_window(grid, flow, k, t_cap * dilation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn cell_rng_deterministic_and_distinct() {
        let mut a = cell_rng(42, &[1, 2, 3]);
        let mut b = cell_rng(42, &[1, 2, 3]);
        assert_eq!(a.next_u64(), b.next_u64());
        let mut c = cell_rng(42, &[1, 2, 4]);
        assert_ne!(a.next_u64(), c.next_u64());
    }

    #[test]
    fn slope_fit_recovers_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 0.25 * x).collect();
        assert!((fit_slope(&xs, &ys) + 0.25).abs() < 1e-12);
    }

    #[test]
    fn auto_grid_resolves_requested_annuli() {
        let grid = auto_grid(&[-6, 0, 3]);
        for k in [-6, 0, 3] {
            assert!(
                grid.annulus_node_count(k) >= crate::frequency::MIN_ANNULUS_NODES,
                "k={k}"
            );
        }
        assert!(grid.xi_max() >= (2f64).powi(4));
        // 2(n+1) is a power of two.
        assert_eq!((grid.n_points() + 1).count_ones(), 1);
    }

    #[test]
    fn travel_budget_shrinks_with_frequency() {
        let grid = auto_grid(&[0, 6]);
        let t0 = travel_budget_window(&grid, Flow::Schrodinger, 0, 16.0);
        let t6 = travel_budget_window(&grid, Flow::Schrodinger, 6, 16.0);
        assert!(t6 < t0);
        // KG flows never exceed unit speed, so the cap usually binds.
        let tk = travel_budget_window(&grid, Flow::KgPlus, 6, 16.0);
        assert!(tk >= 16.0f64.min(0.6 * grid.r_max()));
    }
}
