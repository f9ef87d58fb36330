//! Small numeric utilities: deterministic reductions, Gauss-Legendre nodes,
//! and Chebyshev interpolation in one variable.

/// Sum of a slice with a fixed pairwise reduction tree.
///
/// The tree splits at `len / 2`, so the result depends only on the input
/// order, never on chunking or thread schedule.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// Streaming pairwise accumulator (binary-counter scheme).
///
/// Produces the same value as [`pairwise_sum`] on the pushed sequence when
/// the length is a power of two, and a fixed, order-determined tree
/// otherwise. Allocation-free.
#[derive(Debug, Clone)]
pub struct TreeAccumulator {
    partials: [f64; 64],
    occupied: u64,
    count: u64,
}

impl TreeAccumulator {
    pub fn new() -> Self {
        TreeAccumulator {
            partials: [0.0; 64],
            occupied: 0,
            count: 0,
        }
    }

    pub fn push(&mut self, mut x: f64) {
        let mut level = 0usize;
        while self.occupied & (1 << level) != 0 {
            x += self.partials[level];
            self.occupied &= !(1 << level);
            level += 1;
        }
        self.partials[level] = x;
        self.occupied |= 1 << level;
        self.count += 1;
    }

    pub fn total(&self) -> f64 {
        let mut acc = 0.0;
        for level in 0..64 {
            if self.occupied & (1 << level) != 0 {
                acc += self.partials[level];
            }
        }
        acc
    }
}

impl Default for TreeAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
///
/// Newton iteration on the Legendre recurrence from Chebyshev-like initial
/// guesses; adequate for the moderate orders used here.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // p0, p1 recurrence up to degree n
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Chebyshev interpolant of a smooth function on `[a, b]`.
#[derive(Debug, Clone)]
pub struct ChebInterp {
    a: f64,
    b: f64,
    coeffs: Vec<f64>,
}

impl ChebInterp {
    /// Node abscissas for an `n`-point fit on `[a, b]` (index order used by
    /// [`ChebInterp::from_samples`]).
    pub fn nodes(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|k| {
                let theta = std::f64::consts::PI * (k as f64 + 0.5) / n as f64;
                a + 0.5 * (b - a) * (theta.cos() + 1.0)
            })
            .collect()
    }

    /// Fit from sample values taken at [`ChebInterp::nodes`].
    pub fn from_samples(a: f64, b: f64, samples: &[f64]) -> Self {
        let n = samples.len();
        assert!(n >= 2 && b > a);
        let mut coeffs = vec![0.0; n];
        for (m, c) in coeffs.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, s) in samples.iter().enumerate() {
                let theta = std::f64::consts::PI * (k as f64 + 0.5) / n as f64;
                acc += s * (m as f64 * theta).cos();
            }
            *c = 2.0 * acc / n as f64;
        }
        ChebInterp { a, b, coeffs }
    }

    /// Fit with `n` Chebyshev-Gauss nodes.
    pub fn fit(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> Self {
        let samples: Vec<f64> = Self::nodes(a, b, n).into_iter().map(f).collect();
        Self::from_samples(a, b, &samples)
    }

    /// Clenshaw evaluation. Arguments outside `[a, b]` are clamped.
    pub fn eval(&self, x: f64) -> f64 {
        let t = ((2.0 * x - self.a - self.b) / (self.b - self.a)).clamp(-1.0, 1.0);
        let two_t = 2.0 * t;
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = c + two_t * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        0.5 * self.coeffs[0] + t * b1 - b2
    }

    pub fn node_count(&self) -> usize {
        self.coeffs.len()
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.a, self.b)
    }
}

/// Relative deviation `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn rel_dev(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Ordinary least squares for `y ≈ slope * x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}
