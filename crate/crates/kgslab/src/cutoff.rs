//! The smooth dyadic cutoff profile and derived annular / taper windows.
//!
//! `rho0` is the fixed smooth even bump: 1 on `|s| <= 1`, 0 on `|s| >= 2`,
//! glued with the standard `exp(-1/x)` smooth step in between. Everything
//! dyadic in the crate (Littlewood-Paley blocks, modulation bands, time
//! tapers) is built from this one profile.

/// `exp(-1/x)` for `x > 0`, extended by zero.
fn smooth_q(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth monotone step with `g(0) = 0`, `g(1) = 1`, `g(x) + g(1-x) = 1`.
fn smooth_step(x: f64) -> f64 {
    let a = smooth_q(x);
    let b = smooth_q(1.0 - x);
    if a + b == 0.0 {
        if x >= 1.0 {
            1.0
        } else {
            0.0
        }
    } else {
        a / (a + b)
    }
}

/// Smooth even cutoff: 1 for `|s| <= 1`, 0 for `|s| >= 2`.
pub fn rho0(s: f64) -> f64 {
    let t = s.abs();
    if t <= 1.0 {
        1.0
    } else if t >= 2.0 {
        0.0
    } else {
        smooth_step(2.0 - t)
    }
}

/// Annular bump `rho_k(y) = rho0(2^-k |y|) - rho0(2^-k+1 |y|)`,
/// supported on `[2^(k-1), 2^(k+1)]`.
pub fn rho_k(k: i32, y: f64) -> f64 {
    let t = y.abs();
    rho0(t * (2f64).powi(-k)) - rho0(t * (2f64).powi(-k + 1))
}

/// Fattened annular bump `rho_(k-1) + rho_k + rho_(k+1)`; identically 1 on
/// the support of `rho_k`.
pub fn rho_tilde_k(k: i32, y: f64) -> f64 {
    rho_k(k - 1, y) + rho_k(k, y) + rho_k(k + 1, y)
}

/// Low-pass profile for `P_{<= k}` and `Q_{<= j}`: `rho0(2^-k |y|)`.
pub fn rho_low(k: i32, y: f64) -> f64 {
    rho0(y.abs() * (2f64).powi(-k))
}

/// Smooth time taper on `n_t` samples of a window of length `T = n_t * dt`:
/// flat 1 on the middle 50%, rho0-shaped ramps over the outer quarters.
pub fn taper_weights(n_t: usize) -> Vec<f64> {
    let n = n_t as f64;
    (0..n_t)
        .map(|l| {
            // Distance to the nearer window edge in units of T, sample at
            // cell centers so the first and last weights are nonzero.
            let frac = (l as f64 + 0.5) / n;
            let edge = frac.min(1.0 - frac);
            rho0(2.0 - 4.0 * edge)
        })
        .collect()
}
