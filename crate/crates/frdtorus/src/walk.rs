//! Base finite-range decomposition of the standard lattice resolvent
//! `(s - Δ)^{-1}` by blocking the Neumann series of the lazy random walk.
//!
//! With `θ(s) = 4d/(s+4d)` and the lazy-walk symbol
//! `μ(p) = 1 - λ(p)/(4d) ∈ [0, 1]`,
//!
//! ```text
//! (s + λ(p))^{-1} = (s+4d)^{-1} Σ_{n>=0} (θ μ(p))^n
//! ```
//!
//! Cutting the series at a schedule `T_0 = 0 < T_1 < ... < T_N` produces
//! blocks that are exactly positive semidefinite (nonnegative symbol terms),
//! exactly telescoping, and exactly finite range: the block over
//! `[T_j, T_{j+1})` is a polynomial of degree `T_{j+1}-1` in the one-step
//! kernel, so it vanishes identically beyond l1 radius `T_{j+1}-1`.

use crate::error::{FrdError, Result};
use crate::fourier::{field_from_lambda_symbol, MomentumGrid};
use crate::lattice::{Metric, TorusField, TorusSpec, WindowKernel};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Symbols of the lazy-walk construction in dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkSymbols {
    pub d: usize,
}

impl WalkSymbols {
    pub fn new(d: usize) -> Self {
        WalkSymbols { d }
    }

    /// Lattice Laplacian symbol `λ(p) = Σ_k 4 sin²(p_k/2)`, range `[0, 4d]`.
    pub fn lambda(&self, p: &[f64]) -> f64 {
        debug_assert_eq!(p.len(), self.d);
        p.iter()
            .map(|&pk| {
                let s = (0.5 * pk).sin();
                4.0 * s * s
            })
            .sum()
    }

    /// Lazy-walk symbol `μ(p) = 1 - λ(p)/(4d)`, range `[0, 1]`.
    pub fn mu(&self, p: &[f64]) -> f64 {
        1.0 - self.lambda(p) / (4.0 * self.d as f64)
    }

    /// Geometric weight `θ(s) = 4d/(s + 4d)`, range `(0, 1]` for `s >= 0`.
    pub fn theta(&self, s: f64) -> f64 {
        let fourd = 4.0 * self.d as f64;
        fourd / (s + fourd)
    }
}

/// Strictly increasing cut points `T_0 = 0 < T_1 < ... < T_N` of the walk
/// time axis; block `j` collects steps `n` in `[T_j, T_{j+1})` and the tail
/// starts at `T_N`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSchedule {
    cuts: Vec<u64>,
}

impl BlockSchedule {
    pub fn new(cuts: Vec<u64>) -> Result<Self> {
        if cuts.len() < 2 || cuts[0] != 0 {
            return Err(FrdError::InvalidSchedule(
                "schedule must start at T_0 = 0 and contain at least T_1".into(),
            ));
        }
        if cuts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(FrdError::InvalidSchedule(
                "cut points must be strictly increasing".into(),
            ));
        }
        Ok(BlockSchedule { cuts })
    }

    /// Default diffusive schedule `T_j = L^{2j}` for `j = 1..=scales`.
    pub fn geometric(l: u32, scales: u32) -> Self {
        let mut cuts = vec![0u64];
        for j in 1..=scales {
            cuts.push((l as u64).pow(2 * j));
        }
        BlockSchedule { cuts }
    }

    pub fn cuts(&self) -> &[u64] {
        &self.cuts
    }

    /// Number of blocks `N`.
    pub fn scales(&self) -> usize {
        self.cuts.len() - 1
    }

    pub fn cut(&self, j: usize) -> u64 {
        self.cuts[j]
    }

    /// Tail start `T_N`.
    pub fn tail_start(&self) -> u64 {
        *self.cuts.last().unwrap()
    }
}

/// Stable evaluation of `Σ_{n=T_a}^{T_b-1} x^n / (s+4d)` at `x = θ(s) μ`,
/// written through the exact identity `1 - θμ = (s + λ)/(s + 4d)` so the
/// geometric closed form stays accurate for `θμ` near 1.
pub fn block_symbol_lambda(lam: f64, s: f64, t_a: u64, t_b: u64, d: usize) -> Result<f64> {
    if !(s > 0.0) {
        return Err(FrdError::NonPositiveS(s));
    }
    debug_assert!(t_a < t_b);
    let fourd = 4.0 * d as f64;
    let count = (t_b - t_a) as f64;
    // x = θμ = (4d - λ)/(s + 4d), 1 - x = (s + λ)/(s + 4d), both exact
    let x = (fourd - lam) / (s + fourd);
    let one_minus_x = (s + lam) / (s + fourd);
    if x == 0.0 {
        // μ = 0 corner: only the n = 0 term can survive
        let head = if t_a == 0 { 1.0 } else { 0.0 };
        return Ok(head / (s + fourd));
    }
    if x < 0.0 {
        // λ beyond 4d (off the momentum range): signed-power continuation
        let pow = |n: u64| -> f64 {
            let mag = (n as f64 * x.abs().ln()).exp();
            if n % 2 == 1 {
                -mag
            } else {
                mag
            }
        };
        let head = if t_a == 0 { 1.0 } else { pow(t_a) };
        return Ok(head * (1.0 - pow(t_b - t_a)) / one_minus_x / (s + fourd));
    }
    if one_minus_x == 0.0 {
        // removable point θμ -> 1: explicit series count
        return Ok(count / (s + fourd));
    }
    let ln_x = accurate_ln(x, one_minus_x);
    let head = if t_a == 0 {
        1.0
    } else {
        (t_a as f64 * ln_x).exp()
    };
    let geom = -f64::exp_m1(count * ln_x); // 1 - x^{count}
    Ok(head * geom / one_minus_x / (s + fourd))
}

/// Block symbol at momentum `p`.
pub fn block_symbol(p: &[f64], s: f64, t_a: u64, t_b: u64) -> Result<f64> {
    let w = WalkSymbols::new(p.len());
    block_symbol_lambda(w.lambda(p), s, t_a, t_b, p.len())
}

/// `ln x` given both `x` and `1 - x` to full precision: `ln_1p` keeps the
/// accuracy when `x` is near 1, plain `ln` when `x` is small.
#[inline]
fn accurate_ln(x: f64, one_minus_x: f64) -> f64 {
    if one_minus_x < 0.5 {
        (-one_minus_x).ln_1p()
    } else {
        x.ln()
    }
}

/// Tail symbol `(θμ)^{T_N} / (s + λ(p))`; together with the blocks it
/// telescopes exactly to the resolvent symbol `(s + λ(p))^{-1}`.
pub fn tail_symbol_lambda(lam: f64, s: f64, t_n: u64, d: usize) -> Result<f64> {
    if !(s > 0.0) {
        return Err(FrdError::NonPositiveS(s));
    }
    let fourd = 4.0 * d as f64;
    let x = (fourd - lam) / (s + fourd);
    let one_minus_x = (s + lam) / (s + fourd);
    if t_n == 0 {
        return Ok(1.0 / (s + lam));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x < 0.0 {
        let mag = (t_n as f64 * x.abs().ln()).exp();
        let signed = if t_n % 2 == 1 { -mag } else { mag };
        return Ok(signed / (s + lam));
    }
    let ln_x = accurate_ln(x, one_minus_x);
    Ok((t_n as f64 * ln_x).exp() / (s + lam))
}

/// Tail symbol at momentum `p`.
pub fn tail_symbol(p: &[f64], s: f64, t_n: u64) -> Result<f64> {
    let w = WalkSymbols::new(p.len());
    tail_symbol_lambda(w.lambda(p), s, t_n, p.len())
}

/// One s-level block kernel realized on a torus.
#[derive(Debug, Clone)]
pub struct BlockKernel {
    pub j: usize,
    pub s: f64,
    pub field: TorusField,
    /// Exact l1 support radius `T_{j+1} - 1`.
    pub exact_range: u64,
    /// Measured l1 radius at threshold `1e-12 * sup`.
    pub eps_range: u64,
    /// Whether the torus resolves the exact range (`2 T_{j+1} < M`).
    pub resolvable: bool,
    /// Smallest symbol value over the momentum grid (nonnegative terms).
    pub symbol_min: f64,
}

/// Build the block-`j` kernel on the torus by inverse transform of the
/// block symbol over the momentum grid.
pub fn build_block_kernel(
    spec: &TorusSpec,
    j: usize,
    s: f64,
    schedule: &BlockSchedule,
) -> Result<BlockKernel> {
    if j >= schedule.scales() {
        return Err(FrdError::InvalidSchedule(format!(
            "block index {j} out of range for schedule with {} scales",
            schedule.scales()
        )));
    }
    if !(s > 0.0) {
        return Err(FrdError::NonPositiveS(s));
    }
    let (t_a, t_b) = (schedule.cut(j), schedule.cut(j + 1));
    let grid = MomentumGrid::new(*spec);
    let distinct = grid.distinct_lambda();
    let per_slot: Vec<f64> = distinct
        .values
        .par_iter()
        .map(|&lam| block_symbol_lambda(lam, s, t_a, t_b, spec.d).expect("s > 0 checked"))
        .collect();
    let symbol_min = per_slot.iter().cloned().fold(f64::MAX, f64::min);
    let (field, _) = field_from_lambda_symbol(*spec, &distinct, &per_slot);
    let sup = field.sup_norm();
    let eps_range = field.range_of(Metric::L1, 1e-12 * sup).max(0) as u64;
    Ok(BlockKernel {
        j,
        s,
        exact_range: t_b - 1,
        eps_range,
        resolvable: 2 * t_b < spec.side() as u64,
        symbol_min,
        field,
    })
}

/// Exact `n`-fold convolution power of the lazy step kernel (weight 1/2 at
/// the origin, `1/(4d)` on each of the `2d` neighbors); support is
/// contained in `|x|_1 <= n` and the total mass is 1.
pub fn convolution_power(n: usize, d: usize) -> WindowKernel {
    let radius = n as i64;
    let mut cur = WindowKernel::delta(d);
    let fourd = 4.0 * d as f64;
    for step in 0..n {
        let r = (step + 1) as i64;
        let prev = cur;
        cur = WindowKernel::from_fn_compact(d, r, |x| {
            let mut acc = 0.5 * prev.value(x);
            let mut y = x.to_vec();
            for axis in 0..d {
                y[axis] = x[axis] + 1;
                acc += prev.value(&y) / fourd;
                y[axis] = x[axis] - 1;
                acc += prev.value(&y) / fourd;
                y[axis] = x[axis];
            }
            acc
        });
    }
    debug_assert_eq!(cur.radius(), radius.max(0));
    cur
}

/// Reference x-space construction of a block kernel: weighted sum of walk
/// convolution powers. Cost grows with `T_{j+1}`, so this is a test oracle
/// for small schedules, not the build path.
pub fn block_kernel_by_convolution(
    d: usize,
    s: f64,
    t_a: u64,
    t_b: u64,
) -> Result<WindowKernel> {
    if !(s > 0.0) {
        return Err(FrdError::NonPositiveS(s));
    }
    let fourd = 4.0 * d as f64;
    let theta = fourd / (s + fourd);
    let radius = (t_b - 1) as i64;
    let mut acc = WindowKernel::from_fn_compact(d, radius.max(0), |_| 0.0);
    let mut walk = WindowKernel::delta(d);
    let mut weight = 1.0 / (s + fourd);
    for n in 0..t_b {
        if n > 0 {
            let prev = walk;
            let r = n as i64;
            walk = WindowKernel::from_fn_compact(d, r, |x| {
                let mut v = 0.5 * prev.value(x);
                let mut y = x.to_vec();
                for axis in 0..d {
                    y[axis] = x[axis] + 1;
                    v += prev.value(&y) / fourd;
                    y[axis] = x[axis] - 1;
                    v += prev.value(&y) / fourd;
                    y[axis] = x[axis];
                }
                v
            });
            weight *= theta;
        }
        if n >= t_a {
            let w = weight;
            let wk = &walk;
            let next =
                WindowKernel::from_fn_compact(d, radius.max(0), |x| acc.value(x) + w * wk.value(x));
            acc = next;
        }
    }
    Ok(acc)
}
