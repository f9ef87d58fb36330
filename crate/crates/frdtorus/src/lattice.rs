//! Torus and lattice geometry: fields on the fundamental cube, window
//! kernels on `Z^d`, periodization, forward differences, norms and ranges.
//!
//! The fundamental cube uses centered representatives in
//! `[-(M-1)/2, (M-1)/2]^d` (the side `M = L^{N+1}` is odd), so reflection
//! `x ↦ -x` is an internal symmetry of the index set.

use crate::error::{FrdError, Result};
use crate::numeric::pairwise_sum;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

/// Hard cap on allocatable field sizes, to fail fast instead of thrashing.
const MAX_VOLUME: u64 = 1 << 27;

/// Geometry of the torus `Z^d / M Z^d` with `M = L^{N+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusSpec {
    pub d: usize,
    pub l: u32,
    pub n: u32,
}

impl TorusSpec {
    pub fn new(d: usize, l: u32, n: u32) -> Result<Self> {
        let mut problems = Vec::new();
        if d < 2 {
            problems.push(format!("d must be >= 2, got {d}"));
        }
        if l < 3 || l % 2 == 0 {
            problems.push(format!("L must be odd and >= 3, got {l}"));
        }
        if n < 2 {
            problems.push(format!("N must be >= 2, got {n}"));
        }
        if !problems.is_empty() {
            return Err(FrdError::InvalidSpec(problems.join("; ")));
        }
        let spec = TorusSpec { d, l, n };
        let vol = (spec.side() as u64)
            .checked_pow(d as u32)
            .ok_or_else(|| FrdError::InvalidSpec("volume overflows".into()))?;
        if vol > MAX_VOLUME {
            return Err(FrdError::InvalidSpec(format!(
                "volume {vol} exceeds supported maximum {MAX_VOLUME}"
            )));
        }
        Ok(spec)
    }

    /// Side length `M = L^{N+1}`.
    pub fn side(&self) -> i64 {
        (self.l as i64).pow(self.n + 1)
    }

    /// Number of points of the fundamental cube, `M^d`.
    pub fn volume(&self) -> usize {
        (self.side() as u64).pow(self.d as u32) as usize
    }

    /// Largest centered coordinate, `(M-1)/2`.
    pub fn half(&self) -> i64 {
        (self.side() - 1) / 2
    }

    /// Centered representative of `x` in `[-(M-1)/2, (M-1)/2]`.
    pub fn center(&self, x: i64) -> i64 {
        let m = self.side();
        let w = x.rem_euclid(m);
        if w > self.half() {
            w - m
        } else {
            w
        }
    }

    /// Minimum-image distance of a wrapped coordinate from the origin.
    pub fn axis_distance(&self, x: i64) -> i64 {
        self.center(x).abs()
    }
}

/// Dense real field on the torus, periodic in every coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusField {
    spec: TorusSpec,
    values: Vec<f64>,
}

impl TorusField {
    pub fn zeros(spec: TorusSpec) -> Self {
        TorusField {
            spec,
            values: vec![0.0; spec.volume()],
        }
    }

    pub fn from_fn(spec: TorusSpec, mut f: impl FnMut(&[i64]) -> f64) -> Self {
        let mut out = TorusField::zeros(spec);
        let mut coords = vec![-spec.half(); spec.d];
        for idx in 0..out.values.len() {
            out.values[lex_index(&spec, &coords)] = f(&coords);
            let _ = idx;
            increment(&mut coords, spec.half());
        }
        out
    }

    pub fn from_values(spec: TorusSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.volume() {
            return Err(FrdError::DimensionMismatch(format!(
                "expected {} values, got {}",
                spec.volume(),
                values.len()
            )));
        }
        Ok(TorusField { spec, values })
    }

    pub fn spec(&self) -> &TorusSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Value at an arbitrary integer point; index arithmetic is periodic.
    pub fn value(&self, x: &[i64]) -> f64 {
        self.values[self.index_of(x)]
    }

    /// Linear index of the wrapped point (axis 0 slowest).
    pub fn index_of(&self, x: &[i64]) -> usize {
        debug_assert_eq!(x.len(), self.spec.d);
        let m = self.spec.side();
        let mut idx = 0usize;
        for &xk in x {
            idx = idx * m as usize + xk.rem_euclid(m) as usize;
        }
        idx
    }

    /// Iterate centered coordinates in lexicographic order together with
    /// the linear index used by `values()`.
    pub fn iter_coords(&self) -> CoordIter {
        CoordIter::new(self.spec)
    }

    /// Iterated forward difference with unit increment.
    pub fn forward_diff(&self, idx: &MultiIndex) -> TorusField {
        assert_eq!(idx.orders.len(), self.spec.d, "multi-index dimension");
        let mut cur = self.clone();
        for (axis, &ord) in idx.orders.iter().enumerate() {
            for _ in 0..ord {
                cur = cur.diff_axis(axis);
            }
        }
        cur
    }

    fn diff_axis(&self, axis: usize) -> TorusField {
        let mut out = TorusField::zeros(self.spec);
        let mut x = vec![0i64; self.spec.d];
        for (coords, i) in self.iter_coords() {
            x.copy_from_slice(&coords);
            x[axis] += 1;
            out.values[i] = self.value(&x) - self.values[i];
        }
        out
    }

    /// `(sup, l1)` norms over the fundamental cube; the l1 reduction uses
    /// the fixed pairwise tree.
    pub fn norms(&self) -> (f64, f64) {
        let sup = self.values.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        let abs: Vec<f64> = self.values.iter().map(|v| v.abs()).collect();
        (sup, pairwise_sum(&abs))
    }

    pub fn sup_norm(&self) -> f64 {
        self.norms().0
    }

    /// Smallest radius `R` with `|f(x)| <= eps` for every point at
    /// minimum-image distance `>= R`.
    pub fn range_of(&self, metric: Metric, eps: f64) -> i64 {
        let mut worst = -1.0f64;
        for (coords, i) in self.iter_coords() {
            if self.values[i].abs() > eps {
                worst = worst.max(metric.distance(&coords));
            }
        }
        if worst < 0.0 {
            0
        } else {
            worst.floor() as i64 + 1
        }
    }

    /// Entrywise sum (same spec).
    pub fn add(&self, other: &TorusField) -> TorusField {
        assert_eq!(self.spec, other.spec);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        TorusField {
            spec: self.spec,
            values,
        }
    }

    pub fn sub(&self, other: &TorusField) -> TorusField {
        assert_eq!(self.spec, other.spec);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        TorusField {
            spec: self.spec,
            values,
        }
    }

    pub fn scale(&self, c: f64) -> TorusField {
        TorusField {
            spec: self.spec,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// CSV dump: header `x1,...,xd,value`, centered coordinates in
    /// lexicographic order.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        let mut header = (1..=self.spec.d)
            .map(|k| format!("x{k}"))
            .collect::<Vec<_>>()
            .join(",");
        header.push_str(",value");
        writeln!(w, "{header}")?;
        for (coords, i) in self.iter_coords() {
            let mut line = coords
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(",");
            line.push(',');
            line.push_str(&format!("{:?}", self.values[i]));
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(spec: TorusSpec, r: &mut R) -> Result<Self> {
        let mut out = TorusField::zeros(spec);
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| FrdError::MalformedDir("empty kernel csv".into()))??;
        let cols = header.split(',').count();
        if cols != spec.d + 1 {
            return Err(FrdError::MalformedDir(format!(
                "kernel csv has {cols} columns, expected {}",
                spec.d + 1
            )));
        }
        let mut seen = 0usize;
        let mut x = vec![0i64; spec.d];
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            for xk in x.iter_mut() {
                *xk = parts
                    .next()
                    .ok_or_else(|| FrdError::MalformedDir("short row".into()))?
                    .parse()
                    .map_err(|e| FrdError::MalformedDir(format!("bad coordinate: {e}")))?;
            }
            let v: f64 = parts
                .next()
                .ok_or_else(|| FrdError::MalformedDir("missing value".into()))?
                .parse()
                .map_err(|e| FrdError::MalformedDir(format!("bad value: {e}")))?;
            let idx = out.index_of(&x);
            out.values[idx] = v;
            seen += 1;
        }
        if seen != spec.volume() {
            return Err(FrdError::MalformedDir(format!(
                "kernel csv has {seen} rows, expected {}",
                spec.volume()
            )));
        }
        Ok(out)
    }
}

/// Lexicographic iterator over centered coordinates of a fundamental cube.
pub struct CoordIter {
    spec: TorusSpec,
    coords: Vec<i64>,
    linear: usize,
    done: bool,
}

impl CoordIter {
    fn new(spec: TorusSpec) -> Self {
        CoordIter {
            coords: vec![-spec.half(); spec.d],
            spec,
            linear: 0,
            done: false,
        }
    }
}

impl Iterator for CoordIter {
    type Item = (Vec<i64>, usize);

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let item = (self.coords.clone(), lex_index(&self.spec, &self.coords));
        self.linear += 1;
        if self.linear >= self.spec.volume() {
            self.done = true;
        } else {
            increment(&mut self.coords, self.spec.half());
        }
        Some(item)
    }
}

fn lex_index(spec: &TorusSpec, coords: &[i64]) -> usize {
    let m = spec.side();
    let mut idx = 0usize;
    for &c in coords {
        idx = idx * m as usize + c.rem_euclid(m) as usize;
    }
    idx
}

fn increment(coords: &mut [i64], half: i64) {
    for k in (0..coords.len()).rev() {
        if coords[k] < half {
            coords[k] += 1;
            return;
        }
        coords[k] = -half;
    }
}

/// Distance metrics for range measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    L1,
    L2,
    Linf,
}

impl Metric {
    pub fn distance(&self, x: &[i64]) -> f64 {
        match self {
            Metric::L1 => x.iter().map(|c| c.abs()).sum::<i64>() as f64,
            Metric::L2 => (x.iter().map(|c| (c * c) as f64).sum::<f64>()).sqrt(),
            Metric::Linf => x.iter().map(|c| c.abs()).max().unwrap_or(0) as f64,
        }
    }
}

/// Multi-index of forward-derivative orders, one per direction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiIndex {
    pub orders: Vec<u32>,
}

impl MultiIndex {
    pub fn new(orders: Vec<u32>) -> Self {
        MultiIndex { orders }
    }

    /// Order `p` in a single direction `axis`, zero elsewhere.
    pub fn axis(d: usize, axis: usize, p: u32) -> Self {
        let mut orders = vec![0; d];
        orders[axis] = p;
        MultiIndex { orders }
    }

    pub fn order(&self) -> u32 {
        self.orders.iter().sum()
    }
}

/// Geometric decay certificate `|f(x)| <= c * rate^{|x|_1}` outside the
/// stored window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayCertificate {
    pub rate: f64,
    pub constant: f64,
}

impl DecayCertificate {
    pub fn new(rate: f64, constant: f64) -> Result<Self> {
        if !(rate > 0.0 && rate < 1.0) || !(constant > 0.0) {
            return Err(FrdError::InvalidSpec(format!(
                "decay certificate needs 0 < rate < 1 and constant > 0, got rate {rate}, constant {constant}"
            )));
        }
        Ok(DecayCertificate { rate, constant })
    }
}

/// Support classification of a window kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Support {
    /// The kernel vanishes identically outside the stored window.
    Compact,
    /// The kernel continues outside the window under the certificate.
    Certified(DecayCertificate),
    /// Values outside the window were discarded without a certificate.
    Truncated,
}

/// Real kernel on `Z^d`, stored on the cube `|x|_inf <= radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowKernel {
    d: usize,
    radius: i64,
    values: Vec<f64>,
    support: Support,
    symmetric: bool,
}

impl WindowKernel {
    pub fn from_fn_compact(d: usize, radius: i64, f: impl FnMut(&[i64]) -> f64) -> Self {
        Self::from_fn(d, radius, f, Support::Compact)
    }

    pub fn from_fn_certified(
        d: usize,
        radius: i64,
        f: impl FnMut(&[i64]) -> f64,
        cert: DecayCertificate,
    ) -> Self {
        Self::from_fn(d, radius, f, Support::Certified(cert))
    }

    /// Sample a function whose support may exceed the window without
    /// certifying the tail; periodization of the result is an error.
    pub fn from_fn_truncated(d: usize, radius: i64, f: impl FnMut(&[i64]) -> f64) -> Self {
        Self::from_fn(d, radius, f, Support::Truncated)
    }

    fn from_fn(d: usize, radius: i64, mut f: impl FnMut(&[i64]) -> f64, support: Support) -> Self {
        assert!(d >= 1 && radius >= 0);
        let side = (2 * radius + 1) as usize;
        let len = side.pow(d as u32);
        let mut values = vec![0.0; len];
        let mut coords = vec![-radius; d];
        for slot in values.iter_mut() {
            *slot = f(&coords);
            increment(&mut coords, radius);
        }
        let mut kernel = WindowKernel {
            d,
            radius,
            values,
            support,
            symmetric: false,
        };
        kernel.symmetric = kernel.check_symmetric();
        kernel
    }

    pub fn delta(d: usize) -> Self {
        Self::from_fn_compact(d, 0, |_| 1.0)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn check_symmetric(&self) -> bool {
        let mut neg = vec![0i64; self.d];
        for (coords, i) in self.iter_coords() {
            for (n, c) in neg.iter_mut().zip(&coords) {
                *n = -c;
            }
            if self.values[i] != self.value(&neg) {
                return false;
            }
        }
        true
    }

    pub fn index_of(&self, x: &[i64]) -> usize {
        debug_assert_eq!(x.len(), self.d);
        let side = 2 * self.radius + 1;
        let mut idx = 0usize;
        for &xk in x {
            debug_assert!(xk.abs() <= self.radius);
            idx = idx * side as usize + (xk + self.radius) as usize;
        }
        idx
    }

    /// Value at `x`; zero outside the stored window.
    pub fn value(&self, x: &[i64]) -> f64 {
        if x.iter().any(|c| c.abs() > self.radius) {
            return 0.0;
        }
        self.values[self.index_of(x)]
    }

    pub fn iter_coords(&self) -> WindowCoordIter {
        WindowCoordIter {
            radius: self.radius,
            coords: vec![-self.radius; self.d],
            linear: 0,
            len: self.values.len(),
        }
    }

    pub fn norms(&self) -> (f64, f64) {
        let sup = self.values.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        let abs: Vec<f64> = self.values.iter().map(|v| v.abs()).collect();
        (sup, pairwise_sum(&abs))
    }

    pub fn sup_norm(&self) -> f64 {
        self.norms().0
    }

    pub fn range_of(&self, metric: Metric, eps: f64) -> i64 {
        let mut worst = -1.0f64;
        for (coords, i) in self.iter_coords() {
            if self.values[i].abs() > eps {
                worst = worst.max(metric.distance(&coords));
            }
        }
        if worst < 0.0 {
            0
        } else {
            worst.floor() as i64 + 1
        }
    }

    /// Iterated forward difference, applied one direction at a time with
    /// the same arithmetic as the torus-field version (so periodization
    /// commutes bitwise for kernels supported well inside the window). The
    /// reliable window shrinks by the total order; a decay certificate
    /// survives with the constant inflated by `(1 + 1/rate)` per
    /// derivative.
    pub fn forward_diff(&self, idx: &MultiIndex) -> WindowKernel {
        assert_eq!(idx.orders.len(), self.d);
        let mut cur = self.clone();
        for (axis, &ord) in idx.orders.iter().enumerate() {
            for _ in 0..ord {
                cur = cur.diff_axis(axis);
            }
        }
        cur
    }

    fn diff_axis(&self, axis: usize) -> WindowKernel {
        let new_radius = (self.radius - 1).max(0);
        let support = match self.support {
            Support::Compact => Support::Compact,
            Support::Certified(c) => Support::Certified(DecayCertificate {
                rate: c.rate,
                constant: c.constant * (1.0 + 1.0 / c.rate),
            }),
            Support::Truncated => Support::Truncated,
        };
        let mut out = Self::from_fn(self.d, new_radius, |_| 0.0, support);
        let mut x = vec![0i64; self.d];
        for (coords, i) in out.iter_coords() {
            x.copy_from_slice(&coords);
            x[axis] += 1;
            out.values[i] = self.value(&x) - self.value(&coords);
        }
        out.symmetric = out.check_symmetric();
        out
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        let mut header = (1..=self.d)
            .map(|k| format!("x{k}"))
            .collect::<Vec<_>>()
            .join(",");
        header.push_str(",value");
        writeln!(w, "{header}")?;
        for (coords, i) in self.iter_coords() {
            let mut line = coords
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(",");
            line.push(',');
            line.push_str(&format!("{:?}", self.values[i]));
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}


pub struct WindowCoordIter {
    radius: i64,
    coords: Vec<i64>,
    linear: usize,
    len: usize,
}

impl Iterator for WindowCoordIter {
    type Item = (Vec<i64>, usize);

    fn next(&mut self) -> Option<Self::Item> {
        if self.linear >= self.len {
            return None;
        }
        let item = (self.coords.clone(), self.linear);
        self.linear += 1;
        increment(&mut self.coords, self.radius);
        Some(item)
    }
}

/// Periodize a window kernel onto the torus: sum over translates
/// `k(x + M n)`, added shell by shell in `|n|_inf`, stopping once the
/// certified bound on the ignored remainder falls below `tail_tol`.
///
/// Compact kernels are summed exactly (no tolerance involved); kernels
/// whose support continues beyond the window must carry a decay
/// certificate strong enough to reach `tail_tol`.
pub fn periodize(k: &WindowKernel, spec: &TorusSpec, tail_tol: f64) -> Result<TorusField> {
    if k.d() != spec.d {
        return Err(FrdError::DimensionMismatch(format!(
            "kernel dimension {} vs torus dimension {}",
            k.d(),
            spec.d
        )));
    }
    if !(tail_tol > 0.0) {
        return Err(FrdError::InvalidSpec("tail_tol must be positive".into()));
    }
    let cert = match k.support() {
        Support::Compact => None,
        Support::Certified(c) => Some(c),
        Support::Truncated => return Err(FrdError::MissingDecayCertificate),
    };
    let m = spec.side();
    // shells of |n|_inf that can intersect the stored window
    let max_shell = ((k.radius() + spec.half()) / m + 1) as i64;

    if let Some(c) = cert {
        // certified bound on everything outside the stored window
        let exterior = exterior_l1_bound(k.d(), k.radius(), c, tail_tol);
        if !(exterior <= tail_tol) {
            return Err(FrdError::CertificateTooWeak(tail_tol));
        }
    }

    let mut out = TorusField::zeros(*spec);
    let mut translate = vec![0i64; spec.d];
    let mut y = vec![0i64; spec.d];
    for shell in 0..=max_shell {
        for_each_shell_point(spec.d, shell, &mut translate, &mut |n| {
            // add k(x + M n) for all torus points x
            for (coords, i) in out.iter_coords() {
                for (axis, (&c, &nk)) in coords.iter().zip(n.iter()).enumerate() {
                    y[axis] = c + m * nk;
                }
                out.values_mut()[i] += k.value(&y);
            }
        });
    }
    Ok(out)
}

/// Upper bound on the total certified mass strictly outside the window:
/// sum of `c * rate^t` over `|y|_1 = t` for points with `|y|_inf > radius`.
/// Returns early (with a value above `tail_tol`) once the bound is already
/// too weak.
fn exterior_l1_bound(d: usize, radius: i64, cert: DecayCertificate, tail_tol: f64) -> f64 {
    // every exterior point has |y|_1 >= radius + 1; count l1 shells with
    // the safe overcount #{|y|_1 = t} <= 2d (2t+1)^{d-1}
    let mut total = 0.0;
    let mut t = radius + 1;
    loop {
        let count = 2.0 * d as f64 * ((2 * t + 1) as f64).powi(d as i32 - 1);
        let term = cert.constant * count * cert.rate.powi(t as i32);
        total += term;
        if total > tail_tol {
            return total;
        }
        // geometric majorant once shell growth is dominated by the decay
        let ratio = cert.rate * ((2 * t + 3) as f64 / (2 * t + 1) as f64).powi(d as i32 - 1);
        if ratio < 0.95 {
            return total + term * ratio / (1.0 - ratio);
        }
        if term < 1e-320 {
            return total;
        }
        t += 1;
        if t > radius + 1_000_000 {
            return f64::INFINITY;
        }
    }
}

fn for_each_shell_point(d: usize, shell: i64, buf: &mut [i64], f: &mut impl FnMut(&[i64])) {
    fn rec(
        d: usize,
        shell: i64,
        axis: usize,
        on_boundary: bool,
        buf: &mut [i64],
        f: &mut impl FnMut(&[i64]),
    ) {
        if axis == d {
            if on_boundary || shell == 0 {
                f(buf);
            }
            return;
        }
        for v in -shell..=shell {
            buf[axis] = v;
            rec(d, shell, axis + 1, on_boundary || v.abs() == shell, buf, f);
        }
    }
    if shell == 0 {
        for slot in buf.iter_mut() {
            *slot = 0;
        }
        f(buf);
        return;
    }
    rec(d, shell, 0, false, buf, f);
}
