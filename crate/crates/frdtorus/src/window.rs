//! Direct evaluation of decomposition pieces on `Z^d` windows.
//!
//! A piece symbol depends on momentum only through `λ(p) = Σ_k a(p_k)` with
//! `a(p) = 2(1 - cos p)`, so the Brillouin-zone integral for an axis point
//! `x = (x_1, 0, ..., 0)` collapses to nested one-dimensional averages:
//!
//! ```text
//! F_0 = h                      (the s-integrated symbol as a function of λ)
//! F_l(v) = (1/π) ∫_0^π F_{l-1}(v + a(ψ)) dψ        l = 1 .. d-1
//! K(x_1) = (1/π) ∫_0^π cos(p x_1) F_{d-1}(a(p)) dp
//! ```
//!
//! Each level is tabulated as a Chebyshev interpolant in `ln v` (the level
//! functions vary on logarithmic scales) and the one-dimensional integrals
//! are midpoint sums, which converge spectrally for these smooth periodic
//! integrands. This reaches scale indices whose kernels would need tori far
//! beyond memory, at a handful of milliseconds per scale.
//!
//! Forward differences of order `l` along the scan axis enter as the exact
//! multiplier `(e^{ip} - 1)^l`.

use crate::decomp::{calibrate_for_family, BlockFamily};
use crate::error::Result;
use crate::numeric::{ChebInterp, TreeAccumulator};
use crate::spectral::{rho_dm2_raw, rho_raw, QuadratureRule, SpectralParams, SpectralWeight};
use crate::walk::{block_symbol_lambda, tail_symbol_lambda};
use rayon::prelude::*;

/// Options for a window evaluation.
#[derive(Debug, Clone)]
pub struct WindowOptions {
    /// Midpoint-grid points per one-dimensional integral; `None` picks a
    /// width based on the diffusive scale of the piece.
    pub momentum_points: Option<usize>,
    /// Chebyshev nodes per tabulated level.
    pub interp_nodes: usize,
    /// Largest axis coordinate evaluated; `None` picks `~2.2 L^{j+1}`.
    pub x_extent: Option<usize>,
    /// Forward-difference orders `0..=max_order` along the scan axis.
    pub max_order: u32,
}

impl Default for WindowOptions {
    fn default() -> Self {
        WindowOptions {
            momentum_points: None,
            interp_nodes: 320,
            x_extent: None,
            max_order: 2,
        }
    }
}

/// Axis profiles of one piece evaluated on `Z^d`.
#[derive(Debug, Clone)]
pub struct WindowProfile {
    pub d: usize,
    pub l: u32,
    pub j: u32,
    pub params: SpectralParams,
    pub weight: SpectralWeight,
    /// First evaluated axis coordinate (a few negatives to catch shifted
    /// difference peaks).
    pub x_min: i64,
    /// `profiles[l][i]` = order-`l` forward difference at `x = x_min + i`.
    pub profiles: Vec<Vec<f64>>,
    /// Per-order sup over the evaluated set.
    pub sups: Vec<f64>,
    /// Measured l1 radius of the order-0 profile at `1e-12 * sup`.
    pub eps_range: u64,
    pub momentum_points: usize,
    /// Worst relative deviation of the level interpolants at spot checks.
    pub interp_dev: f64,
    pub quad_est_err: f64,
}

impl WindowProfile {
    pub fn value(&self, order: u32, x: i64) -> f64 {
        let i = (x - self.x_min) as usize;
        self.profiles[order as usize][i]
    }

    pub fn sup(&self, order: u32) -> f64 {
        self.sups[order as usize]
    }
}

/// Diffusive width of the block `[T_j, T_{j+1})` per coordinate.
fn sigma(t_b: u64, d: usize) -> f64 {
    (t_b as f64 / (2.0 * d as f64)).sqrt()
}

/// Window evaluation of the α-level piece `j` at base `L` in dimension `d`.
pub fn piece_window_profile(
    d: usize,
    l: u32,
    j: u32,
    params: &SpectralParams,
    rule: &QuadratureRule,
    weight: SpectralWeight,
    opts: &WindowOptions,
) -> Result<WindowProfile> {
    params.require_resolvent()?;
    let t_a = if j == 0 { 0 } else { (l as u64).pow(2 * j) };
    let t_b = (l as u64).pow(2 * j + 2);
    let family = BlockFamily::Piece { t_a, t_b };
    window_profile_for_family(d, l, j, params, rule, weight, family, t_b, opts)
}

/// Window evaluation of a remainder tail starting at `T_N = L^{2N}`.
pub fn tail_window_profile(
    d: usize,
    l: u32,
    n: u32,
    params: &SpectralParams,
    rule: &QuadratureRule,
    weight: SpectralWeight,
    opts: &WindowOptions,
) -> Result<WindowProfile> {
    params.require_resolvent()?;
    let t_n = (l as u64).pow(2 * n);
    let family = BlockFamily::Tail { t_n };
    window_profile_for_family(d, l, n, params, rule, weight, family, t_n.max(1), opts)
}

#[allow(clippy::too_many_arguments)]
fn window_profile_for_family(
    d: usize,
    l: u32,
    j: u32,
    params: &SpectralParams,
    rule: &QuadratureRule,
    weight: SpectralWeight,
    family: BlockFamily,
    t_scale: u64,
    opts: &WindowOptions,
) -> Result<WindowProfile> {
    let fourd = 4.0 * d as f64;
    let x_extent = opts
        .x_extent
        .unwrap_or_else(|| (2.2 * (l as f64).powi(j as i32 + 1)).ceil() as usize + 8);
    let n = opts.momentum_points.unwrap_or_else(|| {
        let alias = x_extent as f64 + 9.0 * sigma(t_scale, d);
        (alias.ceil() as usize).max(1536)
    });

    // frozen panels with the spectral weight folded into the node weights
    let panels = calibrate_for_family(d, params, rule, weight, family)?;
    let weighted: Vec<(f64, f64)> = panels
        .nodes
        .iter()
        .zip(&panels.weights)
        .map(|(&s, &w)| {
            let rho_w = match weight {
                SpectralWeight::Density => rho_raw(s, params),
                SpectralWeight::MassDerivative => rho_dm2_raw(s, params),
            };
            (s, w * rho_w)
        })
        .collect();
    let h = |lam: f64| -> f64 {
        let mut acc = TreeAccumulator::new();
        for &(s, wr) in &weighted {
            let g = match family {
                BlockFamily::Piece { t_a, t_b } => {
                    block_symbol_lambda(lam, s, t_a, t_b, d).expect("s > 0")
                }
                BlockFamily::Tail { t_n } => tail_symbol_lambda(lam, s, t_n, d).expect("s > 0"),
            };
            acc.push(wr * g);
        }
        acc.total()
    };

    // midpoint grid on [0, π] and per-axis λ values
    let axis: Vec<f64> = (0..n)
        .map(|q| {
            let p = std::f64::consts::PI * (q as f64 + 0.5) / n as f64;
            2.0 * (1.0 - p.cos())
        })
        .collect();
    let a_min = axis[0];
    let v_floor = 0.5 * a_min;

    // Per-grid symbol averages g[q] = F_{d-1}(a(p_q)). The final level is
    // never interpolated: high-order forward differences of the axis
    // profile cancel to many digits, and the oscillatory tail of a
    // Chebyshev fit would dominate them. For d = 2 the symbol is summed
    // exactly per grid point; for d >= 3 the innermost level is the one
    // interpolant and the last average runs directly over it, which
    // smooths its high-frequency fit error before the phase sum sees it.
    let mut interp_dev = 0.0f64;
    let g: Vec<f64> = match d {
        1 => axis.iter().map(|&a| h(a)).collect(),
        2 => axis.par_iter().map(|&a| h(a)).collect(),
        _ => {
            let mut level = fit_level_direct(&h, v_floor, fourd, opts.interp_nodes);
            interp_dev = spot_check(&level, &h, v_floor, fourd);
            // intermediate averages F_l for l = 1..d-2 stay tabulated;
            // level l only receives arguments up to 4(d-l)
            for lvl in 1..(d - 1) {
                let prev = level;
                let avg = |v: f64| -> f64 {
                    let mut acc = TreeAccumulator::new();
                    for &a in &axis {
                        acc.push(prev.eval((v + a).ln()));
                    }
                    acc.total() / n as f64
                };
                let top = 4.0 * (d - lvl) as f64;
                level = fit_level_direct(&avg, v_floor, top, opts.interp_nodes);
                interp_dev = interp_dev.max(spot_check(&level, &avg, v_floor, top));
            }
            let last = level;
            axis.par_iter()
                .map(|&ap| {
                    let mut acc = TreeAccumulator::new();
                    for &a in &axis {
                        acc.push(last.eval((ap + a).ln()));
                    }
                    acc.total() / n as f64
                })
                .collect()
        }
    };
    let x_min = -(opts.max_order as i64) - 2;
    let width = (x_extent as i64 - x_min + 1) as usize;
    let mut profiles = vec![vec![0.0f64; width]; opts.max_order as usize + 1];
    for (q, &gq) in g.iter().enumerate() {
        let p = std::f64::consts::PI * (q as f64 + 0.5) / n as f64;
        let sin_half = (0.5 * p).sin();
        for (ord, profile) in profiles.iter_mut().enumerate() {
            let mult = (2.0 * sin_half).powi(ord as i32) / n as f64;
            let phase0 =
                p * (x_min as f64 + 0.5 * ord as f64) + 0.5 * std::f64::consts::PI * ord as f64;
            // cos(phase0 + p*i) via rotation recurrence
            let (mut c, mut s) = (phase0.cos(), phase0.sin());
            let (dc, ds) = (p.cos(), p.sin());
            for slot in profile.iter_mut() {
                *slot += mult * gq * c;
                let c2 = c * dc - s * ds;
                s = c * ds + s * dc;
                c = c2;
            }
        }
    }
    let sups: Vec<f64> = profiles
        .iter()
        .map(|prof| prof.iter().fold(0.0f64, |a, &v| a.max(v.abs())))
        .collect();
    let eps = 1e-12 * sups[0];
    let mut eps_range = 0u64;
    for (i, &v) in profiles[0].iter().enumerate() {
        if v.abs() > eps {
            let x = (x_min + i as i64).unsigned_abs();
            eps_range = eps_range.max(x + 1);
        }
    }
    Ok(WindowProfile {
        d,
        l,
        j,
        params: *params,
        weight,
        x_min,
        profiles,
        sups,
        eps_range,
        momentum_points: n,
        interp_dev,
        quad_est_err: panels.est_rel_err,
    })
}

/// Chebyshev fit of `f(v)` in `t = ln v` over `[v_floor, top]`, sampling in
/// parallel.
fn fit_level_direct(
    f: &(dyn Fn(f64) -> f64 + Sync),
    v_floor: f64,
    top: f64,
    nodes: usize,
) -> ChebInterp {
    let lo = v_floor.ln();
    let hi = top.ln();
    let ts = ChebInterp::nodes(lo, hi, nodes);
    let samples: Vec<f64> = ts.into_par_iter().map(|t| f(t.exp())).collect();
    ChebInterp::from_samples(lo, hi, &samples)
}

/// Worst interpolation error against the direct function at log-spaced spot
/// points, relative to the largest magnitude seen there.
fn spot_check(interp: &ChebInterp, direct: &dyn Fn(f64) -> f64, v_floor: f64, top: f64) -> f64 {
    let mut scale = 0.0f64;
    let mut devs = Vec::new();
    for k in 0..17 {
        let t = (2.0 * v_floor).ln() + ((0.9 * top).ln() - (2.0 * v_floor).ln()) * k as f64 / 16.0;
        let v = t.exp();
        let want = direct(v);
        devs.push((interp.eval(v.ln()) - want).abs());
        scale = scale.max(want.abs());
    }
    devs.into_iter()
        .fold(0.0f64, |worst, dev| worst.max(dev / scale.max(1e-300)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::build_piece;
    use crate::lattice::TorusSpec;
    use crate::numeric::rel_dev;
    use crate::walk::BlockSchedule;

    #[test]
    fn window_profile_matches_torus_piece_on_small_lattice() {
        // j = 0 at L = 3: the torus at M = 27 resolves the piece exactly,
        // so the window route must agree along the axis
        let params = SpectralParams::new(1.5, 1.0).unwrap();
        let rule = QuadratureRule::default();
        let spec = TorusSpec::new(2, 3, 2).unwrap();
        let schedule = BlockSchedule::geometric(3, 2);
        let piece = build_piece(&spec, 0, &params, &rule, &schedule).unwrap();
        let opts = WindowOptions {
            x_extent: Some(12),
            ..WindowOptions::default()
        };
        let win = piece_window_profile(2, 3, 0, &params, &rule, SpectralWeight::Density, &opts)
            .unwrap();
        assert!(win.interp_dev < 1e-8, "interp dev {}", win.interp_dev);
        for x in 0..=10i64 {
            let want = piece.field.value(&[x, 0]);
            let got = win.value(0, x);
            assert!(
                (got - want).abs() <= 1e-8 * piece.sup,
                "x {x}: {got} vs {want}"
            );
        }
        // forward differences along the axis
        let d1 = |x: i64| piece.field.value(&[x + 1, 0]) - piece.field.value(&[x, 0]);
        for x in -1..=9i64 {
            assert!((win.value(1, x) - d1(x)).abs() <= 1e-8 * piece.sup);
        }
    }

    #[test]
    fn window_profile_momentum_refinement_is_stable() {
        let params = SpectralParams::new(1.25, 0.01).unwrap();
        let rule = QuadratureRule::default();
        let base = piece_window_profile(
            2,
            3,
            2,
            &params,
            &rule,
            SpectralWeight::Density,
            &WindowOptions::default(),
        )
        .unwrap();
        let finer = piece_window_profile(
            2,
            3,
            2,
            &params,
            &rule,
            SpectralWeight::Density,
            &WindowOptions {
                momentum_points: Some(base.momentum_points * 3 / 2),
                interp_nodes: 448,
                ..WindowOptions::default()
            },
        )
        .unwrap();
        for ord in 0..=2u32 {
            assert!(
                rel_dev(base.sup(ord), finer.sup(ord)) < 1e-6,
                "order {ord}: {} vs {}",
                base.sup(ord),
                finer.sup(ord)
            );
        }
    }

    #[test]
    fn window_profile_three_dimensional_consistency() {
        // d = 3 at j = 0, compare against a torus build on the 27^3 grid
        let params = SpectralParams::new(1.5, 0.5).unwrap();
        let rule = QuadratureRule::default();
        let spec = TorusSpec::new(3, 3, 2).unwrap();
        let schedule = BlockSchedule::geometric(3, 2);
        let piece = build_piece(&spec, 0, &params, &rule, &schedule).unwrap();
        let win = piece_window_profile(
            3,
            3,
            0,
            &params,
            &rule,
            SpectralWeight::Density,
            &WindowOptions {
                x_extent: Some(12),
                ..WindowOptions::default()
            },
        )
        .unwrap();
        for x in 0..=10i64 {
            let want = piece.field.value(&[x, 0, 0]);
            let got = win.value(0, x);
            assert!(
                (got - want).abs() <= 1e-8 * piece.sup,
                "x {x}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn tail_window_profile_positive_at_origin() {
        let params = SpectralParams::new(1.5, 1.0).unwrap();
        let rule = QuadratureRule::default();
        let win = tail_window_profile(
            2,
            3,
            2,
            &params,
            &rule,
            SpectralWeight::Density,
            &WindowOptions {
                x_extent: Some(40),
                ..WindowOptions::default()
            },
        )
        .unwrap();
        assert!(win.value(0, 0) > 0.0);
    }
}
