//! Discrete Fourier transforms on the torus, Poisson-summation consistency,
//! and Fourier-coefficient decay fits.
//!
//! Conventions: `f̂(p) = Σ_x f(x) e^{-i p·x}` and
//! `f(x) = |Q|^{-1} Σ_p f̂(p) e^{i p·x}` with momenta `p = (2π/M) q` for `q`
//! in the fundamental cube. Transforms are an exact inverse pair and
//! bit-reproducible for fixed input.

use crate::error::{FrdError, Result};
use crate::lattice::{TorusField, TorusSpec, WindowKernel};
use crate::numeric::linear_fit;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::Write;

/// Momentum grid of the torus: `p = (2π/M) q`, one point per cube point.
#[derive(Debug, Clone, Copy)]
pub struct MomentumGrid {
    spec: TorusSpec,
}

impl MomentumGrid {
    pub fn new(spec: TorusSpec) -> Self {
        MomentumGrid { spec }
    }

    pub fn spec(&self) -> &TorusSpec {
        &self.spec
    }

    /// Laplacian symbol value for the wrapped momentum index `q`
    /// (components in `0..M`): `λ(p) = Σ_k 4 sin²(p_k/2)`.
    pub fn lambda_at(&self, q: &[i64]) -> f64 {
        let m = self.spec.side() as f64;
        q.iter()
            .map(|&qk| {
                let s = (std::f64::consts::PI * qk as f64 / m).sin();
                4.0 * s * s
            })
            .sum()
    }

    /// Per-axis table `a[t] = 4 sin²(π t / M)` for `t = 0..M`; symmetric
    /// under `t -> M - t`.
    pub fn axis_lambda_table(&self) -> Vec<f64> {
        let m = self.spec.side();
        (0..m)
            .map(|t| {
                let s = (std::f64::consts::PI * t as f64 / m as f64).sin();
                4.0 * s * s
            })
            .collect()
    }

    /// Distinct values of `λ(p)` over the grid together with a slot index
    /// per linear grid point. Symbols that depend on momentum only through
    /// λ need one evaluation per slot instead of one per point.
    pub fn distinct_lambda(&self) -> DistinctLambda {
        let m = self.spec.side() as usize;
        let d = self.spec.d;
        let half = m / 2; // (M-1)/2, M odd
        let table = self.axis_lambda_table();
        let mut slot_of: HashMap<Vec<u32>, u32> = HashMap::new();
        let mut values = Vec::new();
        let mut multiplicity = Vec::new();
        let mut index = vec![0u32; self.spec.volume()];
        let mut q = vec![0usize; d];
        let mut key = vec![0u32; d];
        for (linear, slot) in index.iter_mut().enumerate() {
            // decode linear index (axis 0 slowest)
            let mut rem = linear;
            for k in (0..d).rev() {
                q[k] = rem % m;
                rem /= m;
            }
            for (k, &qk) in q.iter().enumerate() {
                let folded = if qk > half { m - qk } else { qk };
                key[k] = folded as u32;
            }
            key.sort_unstable();
            let next = values.len() as u32;
            let entry = *slot_of.entry(key.clone()).or_insert_with(|| {
                let lam: f64 = key.iter().map(|&t| table[t as usize]).sum();
                values.push(lam);
                multiplicity.push(0u32);
                next
            });
            multiplicity[entry as usize] += 1;
            *slot = entry;
        }
        DistinctLambda {
            values,
            multiplicity,
            index,
        }
    }
}

/// Distinct λ values, their grid multiplicities, and the per-point slot map.
#[derive(Debug, Clone)]
pub struct DistinctLambda {
    pub values: Vec<f64>,
    pub multiplicity: Vec<u32>,
    pub index: Vec<u32>,
}

impl DistinctLambda {
    /// Expand per-slot values into a full grid array.
    pub fn scatter(&self, per_slot: &[f64]) -> Vec<f64> {
        self.index
            .iter()
            .map(|&slot| per_slot[slot as usize])
            .collect()
    }

    /// Grid average `|Q|^{-1} Σ_p g(λ(p))` of per-slot values.
    pub fn grid_average(&self, per_slot: &[f64]) -> f64 {
        let mut acc = crate::numeric::TreeAccumulator::new();
        for (&v, &mult) in per_slot.iter().zip(&self.multiplicity) {
            acc.push(v * mult as f64);
        }
        acc.total() / self.index.len() as f64
    }
}

/// Complex coefficient field on the momentum grid (same linear layout as
/// the position field).
#[derive(Debug, Clone, PartialEq)]
pub struct CoefField {
    spec: TorusSpec,
    values: Vec<Complex64>,
}

impl CoefField {
    pub fn from_values(spec: TorusSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != spec.volume() {
            return Err(FrdError::DimensionMismatch(format!(
                "expected {} coefficients, got {}",
                spec.volume(),
                values.len()
            )));
        }
        Ok(CoefField { spec, values })
    }

    /// Real symbol values on the grid (imaginary parts zero).
    pub fn from_real_symbol(spec: TorusSpec, symbol: &[f64]) -> Result<Self> {
        if symbol.len() != spec.volume() {
            return Err(FrdError::DimensionMismatch(format!(
                "expected {} symbol values, got {}",
                spec.volume(),
                symbol.len()
            )));
        }
        Ok(CoefField {
            spec,
            values: symbol.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        })
    }

    pub fn spec(&self) -> &TorusSpec {
        &self.spec
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Coefficient at momentum index `q` (periodic).
    pub fn value(&self, q: &[i64]) -> Complex64 {
        let m = self.spec.side();
        let mut idx = 0usize;
        for &qk in q {
            idx = idx * m as usize + qk.rem_euclid(m) as usize;
        }
        self.values[idx]
    }

    /// CSV dump: `q1,...,qd,re,im` over the centered cube in lexicographic
    /// order.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        let mut header = (1..=self.spec.d)
            .map(|k| format!("q{k}"))
            .collect::<Vec<_>>()
            .join(",");
        header.push_str(",re,im");
        writeln!(w, "{header}")?;
        let probe = TorusField::zeros(self.spec);
        for (coords, i) in probe.iter_coords() {
            let mut line = coords
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(",");
            line.push(',');
            line.push_str(&format!("{:?}", self.values[i].re));
            line.push(',');
            line.push_str(&format!("{:?}", self.values[i].im));
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

fn fft_all_axes(spec: &TorusSpec, data: &mut [Complex64], inverse: bool) {
    let m = spec.side() as usize;
    let d = spec.d;
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(m)
    } else {
        planner.plan_fft_forward(m)
    };
    let mut line = vec![Complex64::new(0.0, 0.0); m];
    // axis k has stride m^{d-1-k}
    for axis in 0..d {
        let stride = m.pow((d - 1 - axis) as u32);
        let block = stride * m;
        let volume = data.len();
        for base in (0..volume).step_by(block) {
            for offset in 0..stride {
                let start = base + offset;
                for (t, slot) in line.iter_mut().enumerate() {
                    *slot = data[start + t * stride];
                }
                fft.process(&mut line);
                for (t, &v) in line.iter().enumerate() {
                    data[start + t * stride] = v;
                }
            }
        }
    }
}

/// Forward transform `f̂(p) = Σ_x f(x) e^{-i p·x}`.
pub fn dft(f: &TorusField) -> CoefField {
    let mut data: Vec<Complex64> = f
        .values()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    fft_all_axes(f.spec(), &mut data, false);
    CoefField {
        spec: *f.spec(),
        values: data,
    }
}

/// Inverse transform `f(x) = |Q|^{-1} Σ_p f̂(p) e^{i p·x}`, returning the
/// real part and the largest absolute imaginary part encountered.
pub fn idft(c: &CoefField) -> (TorusField, f64) {
    let mut data = c.values.to_vec();
    fft_all_axes(&c.spec, &mut data, true);
    let scale = 1.0 / c.spec.volume() as f64;
    let mut max_im = 0.0f64;
    let values: Vec<f64> = data
        .iter()
        .map(|z| {
            max_im = max_im.max((z.im * scale).abs());
            z.re * scale
        })
        .collect();
    (
        TorusField::from_values(c.spec, values).expect("matching layout"),
        max_im,
    )
}

/// Build a torus field from a real, reflection-symmetric symbol given per
/// distinct-λ slot values.
pub fn field_from_lambda_symbol(
    spec: TorusSpec,
    distinct: &DistinctLambda,
    per_slot: &[f64],
) -> (TorusField, f64) {
    let symbol = distinct.scatter(per_slot);
    let coef = CoefField::from_real_symbol(spec, &symbol).expect("layout");
    idft(&coef)
}

/// Max defect between `dft(periodize(k))` and the Z^d transform of `k`
/// sampled at grid momenta.
pub fn poisson_consistency(k: &WindowKernel, spec: &TorusSpec, tail_tol: f64) -> Result<f64> {
    let periodized = crate::lattice::periodize(k, spec, tail_tol)?;
    let torus_side = dft(&periodized);
    let m = spec.side() as f64;
    let mut worst = 0.0f64;
    let probe = TorusField::zeros(*spec);
    for (q, i) in probe.iter_coords() {
        // direct Z^d transform over the stored window
        let mut acc = Complex64::new(0.0, 0.0);
        for (y, iy) in k.iter_coords() {
            let phase: f64 = q
                .iter()
                .zip(&y)
                .map(|(&qk, &yk)| -2.0 * std::f64::consts::PI * qk as f64 * yk as f64 / m)
                .sum();
            acc += Complex64::from_polar(k.values()[iy], phase);
        }
        let defect = (torus_side.values()[i] - acc).norm();
        worst = worst.max(defect);
    }
    Ok(worst)
}

/// Fitted decay envelope `|ĝ(p)| <= C (1 + (L^N |p|)²)^{-k}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub constant: f64,
    pub exponent: f64,
    pub residual: f64,
    pub excluded: usize,
}

impl DecayFit {
    /// Whether the fitted exponent suffices for derivative order `l`:
    /// `2k > d + l + 1`.
    pub fn adequate_for(&self, d: usize, l: u32) -> bool {
        2.0 * self.exponent > (d as u32 + l + 1) as f64
    }
}

/// Least-squares fit of `log|ĝ|` against `log C - k log(1 + (L^N |p|)²)`
/// over nonzero momenta, with the constant then inflated so the envelope
/// majorizes every grid point. Coefficients below 1e-300 are excluded from
/// the fit (their count is recorded).
pub fn decay_fit(coeffs: &CoefField, scale_power: u32) -> Result<DecayFit> {
    let spec = coeffs.spec;
    let m = spec.side() as f64;
    let ln_scale = (spec.l as f64).ln() * scale_power as f64;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut excluded = 0usize;
    let probe = TorusField::zeros(spec);
    let mut entries = Vec::new();
    for (q, i) in probe.iter_coords() {
        let p2: f64 = q
            .iter()
            .map(|&qk| {
                let p = 2.0 * std::f64::consts::PI * qk as f64 / m;
                p * p
            })
            .sum();
        let mag = coeffs.values[i].norm();
        // x = log(1 + (L^N |p|)^2)
        let x = (1.0 + (2.0 * ln_scale).exp() * p2).ln();
        entries.push((x, mag));
        if q.iter().all(|&qk| qk == 0) {
            continue;
        }
        if mag < 1e-300 {
            excluded += 1;
            continue;
        }
        xs.push(x);
        ys.push(mag.ln());
    }
    if xs.len() < 4 {
        return Err(FrdError::MalformedDir(format!(
            "too few usable coefficients for a decay fit ({} points)",
            xs.len()
        )));
    }
    let (slope, intercept) = linear_fit(&xs, &ys);
    let k = -slope;
    // residual of the log fit
    let mut residual = 0.0f64;
    for (&x, &y) in xs.iter().zip(&ys) {
        residual = residual.max((y - (intercept + slope * x)).abs());
    }
    // inflate C so the envelope majorizes every grid point, p = 0 included
    let mut constant = intercept.exp();
    for &(x, mag) in &entries {
        if mag > 0.0 {
            constant = constant.max(mag * (k * x).exp());
        }
    }
    Ok(DecayFit {
        constant,
        exponent: k,
        residual,
        excluded,
    })
}
