//! Assembly of the fractional finite-range decomposition on the torus:
//! per-scale pieces, the torus remainder, the exact resolvent they must sum
//! to, mass derivatives, coarse graining, and directory serialization.
//!
//! Every object is built per momentum: the s-integral against `ρ_α` runs on
//! one frozen panel set shared across all momenta of a build, so each piece
//! symbol is an exact nonnegative combination of block symbols. That keeps
//! positive semidefiniteness and the exact finite range momentum by
//! momentum, and makes the telescoping identity hold to quadrature
//! tolerance rather than to a resummation error.

use crate::error::{FrdError, Result};
use crate::fourier::{dft, field_from_lambda_symbol, CoefField, DistinctLambda, MomentumGrid};
use crate::lattice::{Metric, TorusField, TorusSpec};
use crate::numeric::TreeAccumulator;
use crate::spectral::{
    calibrate_panels, rho_dm2_raw, rho_raw, Envelope, FrozenPanels, QuadratureRule, ScalingExponents,
    SpectralParams, SpectralWeight,
};
use crate::walk::{block_symbol_lambda, tail_symbol_lambda, BlockSchedule};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{BufWriter, Write};
use std::path::Path;

/// One α-level piece of the decomposition.
#[derive(Debug, Clone)]
pub struct Piece {
    pub j: usize,
    pub params: SpectralParams,
    pub exponents: ScalingExponents,
    pub field: TorusField,
    /// Exact l1 support radius `T_{j+1} - 1` (inherited from the blocks).
    pub exact_range: u64,
    /// Measured l1 radius at threshold `1e-12 * sup`.
    pub eps_range: u64,
    /// Whether the torus resolves the exact range (`2 T_{j+1} < M`).
    pub resolvable: bool,
    pub sup: f64,
    /// Smallest symbol value encountered at build time (pre-transform).
    pub symbol_min: f64,
    /// Symbol value at zero momentum (quadrature-exact, no transform noise).
    pub symbol_zero: f64,
    pub quad_est_err: f64,
}

/// The torus remainder after `N` scales.
#[derive(Debug, Clone)]
pub struct Remainder {
    pub scales: u32,
    pub params: SpectralParams,
    pub field: TorusField,
    /// Retained Fourier coefficients (the built symbol, transform-free).
    pub coeffs: CoefField,
    pub sup: f64,
    pub symbol_min: f64,
    pub symbol_zero: f64,
    pub quad_est_err: f64,
}

/// Reconstruction quality of an assembled decomposition.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ReconstructionDefect {
    pub sup_defect: f64,
    pub sup_exact: f64,
    pub rel_defect: f64,
    pub budget_rel: f64,
    pub pass: bool,
}

/// Full decomposition: `N` pieces plus the remainder, with provenance.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub spec: TorusSpec,
    pub params: SpectralParams,
    pub schedule: BlockSchedule,
    pub rule: QuadratureRule,
    pub pieces: Vec<Piece>,
    pub remainder: Remainder,
    pub defect: ReconstructionDefect,
    /// Build timestamp (epoch seconds); `None` keeps manifests reproducible.
    pub built_unix: Option<u64>,
}

/// Exact torus resolvent, closed-form path: symbol `(λ(p)^{α/2} + m²)^{-1}`.
#[derive(Debug, Clone)]
pub struct ExactResolvent {
    pub field: TorusField,
    pub coeffs: CoefField,
}

impl ExactResolvent {
    /// Coefficient at zero momentum; equals `1/m²` exactly.
    pub fn zero_momentum(&self) -> f64 {
        let q = vec![0i64; self.field.spec().d];
        self.coeffs.value(&q).re
    }
}

/// λ probes used when calibrating a shared panel set: zero, the grid floor
/// region, and log-spaced values up to the symbol maximum `4d`.
fn lambda_probes(d: usize) -> Vec<f64> {
    let fourd = 4.0 * d as f64;
    let mut probes = vec![0.0];
    for k in 0..12 {
        probes.push(fourd * 10f64.powf(-6.0 + 6.0 * k as f64 / 11.0));
    }
    probes
}

/// Family descriptor for frozen-panel calibration.
#[derive(Debug, Clone, Copy)]
pub(crate) enum BlockFamily {
    Piece { t_a: u64, t_b: u64 },
    Tail { t_n: u64 },
}

pub(crate) fn calibrate_for_family(
    d: usize,
    params: &SpectralParams,
    rule: &QuadratureRule,
    weight: SpectralWeight,
    family: BlockFamily,
) -> Result<FrozenPanels> {
    let fourd = 4.0 * d as f64;
    let monitors: Vec<Box<dyn Fn(f64) -> f64 + Sync>> = lambda_probes(d)
        .into_iter()
        .map(|lam| match family {
            BlockFamily::Piece { t_a, t_b } => Box::new(move |s: f64| {
                block_symbol_lambda(lam, s, t_a, t_b, d).unwrap_or(0.0)
            }) as Box<dyn Fn(f64) -> f64 + Sync>,
            BlockFamily::Tail { t_n } => Box::new(move |s: f64| {
                tail_symbol_lambda(lam, s, t_n, d).unwrap_or(0.0)
            }) as Box<dyn Fn(f64) -> f64 + Sync>,
        })
        .collect();
    let (small_exp, cutoff) = match family {
        BlockFamily::Piece { t_b, .. } => (0.0, t_b),
        BlockFamily::Tail { t_n } => (-1.0, t_n.max(1)),
    };
    let env = Envelope::new(small_exp, -1.0, fourd / cutoff as f64, fourd);
    calibrate_panels(params, weight, &monitors, &env, rule)
}

/// Evaluate weighted panels `Σ_i w_i ρ(s_i) g(λ, s_i)` per distinct λ slot.
fn symbol_per_slot(
    panels: &FrozenPanels,
    params: &SpectralParams,
    weight: SpectralWeight,
    distinct: &DistinctLambda,
    d: usize,
    family: BlockFamily,
) -> Vec<f64> {
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
    distinct
        .values
        .par_iter()
        .map(|&lam| {
            let mut acc = TreeAccumulator::new();
            for &(s, wr) in &weighted {
                let g = match family {
                    BlockFamily::Piece { t_a, t_b } => {
                        block_symbol_lambda(lam, s, t_a, t_b, d).expect("s > 0")
                    }
                    BlockFamily::Tail { t_n } => {
                        tail_symbol_lambda(lam, s, t_n, d).expect("s > 0")
                    }
                };
                acc.push(wr * g);
            }
            acc.total()
        })
        .collect()
}

/// Exact torus resolvent via the closed-form symbol.
pub fn exact_torus_resolvent(spec: &TorusSpec, params: &SpectralParams) -> Result<ExactResolvent> {
    params.require_resolvent()?;
    let grid = MomentumGrid::new(*spec);
    let distinct = grid.distinct_lambda();
    let per_slot: Vec<f64> = distinct
        .values
        .iter()
        .map(|&lam| 1.0 / (lam.powf(0.5 * params.alpha) + params.m2))
        .collect();
    let symbol = distinct.scatter(&per_slot);
    let coeffs = CoefField::from_real_symbol(*spec, &symbol)?;
    let (field, _) = field_from_lambda_symbol(*spec, &distinct, &per_slot);
    Ok(ExactResolvent { field, coeffs })
}

fn build_piece_with(
    spec: &TorusSpec,
    j: usize,
    params: &SpectralParams,
    rule: &QuadratureRule,
    schedule: &BlockSchedule,
    distinct: &DistinctLambda,
) -> Result<Piece> {
    params.require_resolvent()?;
    if j >= schedule.scales() {
        return Err(FrdError::InvalidSchedule(format!(
            "piece index {j} out of range for schedule with {} scales",
            schedule.scales()
        )));
    }
    let (t_a, t_b) = (schedule.cut(j), schedule.cut(j + 1));
    let family = BlockFamily::Piece { t_a, t_b };
    let panels = calibrate_for_family(spec.d, params, rule, SpectralWeight::Density, family)?;
    let per_slot = symbol_per_slot(&panels, params, SpectralWeight::Density, distinct, spec.d, family);
    let symbol_min = per_slot.iter().cloned().fold(f64::MAX, f64::min);
    let symbol_zero = per_slot[distinct.index[zero_index(spec)] as usize];
    let (field, _) = field_from_lambda_symbol(*spec, distinct, &per_slot);
    let sup = field.sup_norm();
    let eps_range = field.range_of(Metric::L1, 1e-12 * sup).max(0) as u64;
    Ok(Piece {
        j,
        params: *params,
        exponents: ScalingExponents::for_dim(spec.d, params.alpha),
        exact_range: t_b - 1,
        eps_range,
        resolvable: 2 * t_b < spec.side() as u64,
        sup,
        symbol_min,
        symbol_zero,
        quad_est_err: panels.est_rel_err,
        field,
    })
}

/// Build the α-level piece `j` on the torus.
pub fn build_piece(
    spec: &TorusSpec,
    j: usize,
    params: &SpectralParams,
    rule: &QuadratureRule,
    schedule: &BlockSchedule,
) -> Result<Piece> {
    let distinct = MomentumGrid::new(*spec).distinct_lambda();
    build_piece_with(spec, j, params, rule, schedule, &distinct)
}

fn build_remainder_with(
    spec: &TorusSpec,
    params: &SpectralParams,
    rule: &QuadratureRule,
    schedule: &BlockSchedule,
    distinct: &DistinctLambda,
) -> Result<Remainder> {
    params.require_resolvent()?;
    let t_n = schedule.tail_start();
    let family = BlockFamily::Tail { t_n };
    let panels = calibrate_for_family(spec.d, params, rule, SpectralWeight::Density, family)?;
    let per_slot = symbol_per_slot(&panels, params, SpectralWeight::Density, distinct, spec.d, family);
    let symbol_min = per_slot.iter().cloned().fold(f64::MAX, f64::min);
    let symbol_zero = per_slot[distinct.index[zero_index(spec)] as usize];
    let symbol = distinct.scatter(&per_slot);
    let coeffs = CoefField::from_real_symbol(*spec, &symbol)?;
    let (field, _) = field_from_lambda_symbol(*spec, distinct, &per_slot);
    let sup = field.sup_norm();
    Ok(Remainder {
        scales: schedule.scales() as u32,
        params: *params,
        field,
        coeffs,
        sup,
        symbol_min,
        symbol_zero,
        quad_est_err: panels.est_rel_err,
    })
}

/// Build the torus remainder for the given schedule.
pub fn build_remainder(
    spec: &TorusSpec,
    params: &SpectralParams,
    rule: &QuadratureRule,
    schedule: &BlockSchedule,
) -> Result<Remainder> {
    let distinct = MomentumGrid::new(*spec).distinct_lambda();
    build_remainder_with(spec, params, rule, schedule, &distinct)
}

fn zero_index(spec: &TorusSpec) -> usize {
    let _ = spec;
    0 // wrapped coordinates (0,...,0) sit at linear index 0
}

/// Pairwise reduction tree over fields (fixed shape, split at `len/2`).
fn field_tree(fields: &[&TorusField]) -> TorusField {
    match fields.len() {
        0 => panic!("empty field tree"),
        1 => fields[0].clone(),
        n => {
            let mid = n / 2;
            field_tree(&fields[..mid]).add(&field_tree(&fields[mid..]))
        }
    }
}

impl Decomposition {
    /// Reconstruct the total: pairwise tree over the pieces, remainder
    /// added last. Coarse grainings whose groups align with this tree
    /// reproduce the total bit for bit.
    pub fn reconstruct(&self) -> TorusField {
        let refs: Vec<&TorusField> = self.pieces.iter().map(|p| &p.field).collect();
        field_tree(&refs).add(&self.remainder.field)
    }

    /// Quadrature-exact zero-momentum sum of the decomposition.
    pub fn zero_momentum_sum(&self) -> f64 {
        let mut acc = TreeAccumulator::new();
        for p in &self.pieces {
            acc.push(p.symbol_zero);
        }
        acc.push(self.remainder.symbol_zero);
        acc.total()
    }
}

/// Assemble the full decomposition and measure its reconstruction defect
/// against the closed-form resolvent. The defect budget is
/// `(N+1) * rel_tol` relative to the resolvent sup, one tolerance per
/// independent quadrature.
pub fn assemble(
    spec: &TorusSpec,
    params: &SpectralParams,
    rule: &QuadratureRule,
    schedule: &BlockSchedule,
) -> Result<Decomposition> {
    params.require_resolvent()?;
    if schedule.scales() < 1 {
        return Err(FrdError::InvalidSchedule("schedule needs at least one scale".into()));
    }
    let distinct = MomentumGrid::new(*spec).distinct_lambda();
    let mut pieces = Vec::with_capacity(schedule.scales());
    for j in 0..schedule.scales() {
        pieces.push(build_piece_with(spec, j, params, rule, schedule, &distinct)?);
    }
    let remainder = build_remainder_with(spec, params, rule, schedule, &distinct)?;
    let exact = exact_torus_resolvent(spec, params)?;
    let dec = Decomposition {
        spec: *spec,
        params: *params,
        schedule: schedule.clone(),
        rule: *rule,
        pieces,
        remainder,
        defect: ReconstructionDefect {
            sup_defect: 0.0,
            sup_exact: 0.0,
            rel_defect: 0.0,
            budget_rel: 0.0,
            pass: false,
        },
        built_unix: None,
    };
    let recon = dec.reconstruct();
    let sup_exact = exact.field.sup_norm();
    let sup_defect = recon.sub(&exact.field).sup_norm();
    let budget_rel = (schedule.scales() as f64 + 1.0) * rule.rel_tol;
    let rel_defect = sup_defect / sup_exact;
    let mut dec = dec;
    dec.defect = ReconstructionDefect {
        sup_defect,
        sup_exact,
        rel_defect,
        budget_rel,
        pass: rel_defect <= budget_rel,
    };
    Ok(dec)
}

/// Mass derivative of a piece: same block family integrated against
/// `∂ρ_α/∂m²`.
pub fn mass_derivative_piece(
    spec: &TorusSpec,
    j: usize,
    params: &SpectralParams,
    rule: &QuadratureRule,
    schedule: &BlockSchedule,
) -> Result<DerivativeKernel> {
    params.require_resolvent()?;
    let (t_a, t_b) = (schedule.cut(j), schedule.cut(j + 1));
    mass_derivative_family(spec, params, rule, BlockFamily::Piece { t_a, t_b })
}

/// Mass derivative of the remainder.
pub fn mass_derivative_remainder(
    spec: &TorusSpec,
    params: &SpectralParams,
    rule: &QuadratureRule,
    schedule: &BlockSchedule,
) -> Result<DerivativeKernel> {
    params.require_resolvent()?;
    mass_derivative_family(
        spec,
        params,
        rule,
        BlockFamily::Tail {
            t_n: schedule.tail_start(),
        },
    )
}

/// A mass-derivative kernel (same shape as the object it differentiates).
#[derive(Debug, Clone)]
pub struct DerivativeKernel {
    pub field: TorusField,
    pub symbol_zero: f64,
    pub quad_est_err: f64,
}

fn mass_derivative_family(
    spec: &TorusSpec,
    params: &SpectralParams,
    rule: &QuadratureRule,
    family: BlockFamily,
) -> Result<DerivativeKernel> {
    let distinct = MomentumGrid::new(*spec).distinct_lambda();
    let panels =
        calibrate_for_family(spec.d, params, rule, SpectralWeight::MassDerivative, family)?;
    let per_slot = symbol_per_slot(
        &panels,
        params,
        SpectralWeight::MassDerivative,
        &distinct,
        spec.d,
        family,
    );
    let symbol_zero = per_slot[distinct.index[zero_index(spec)] as usize];
    let (field, _) = field_from_lambda_symbol(*spec, &distinct, &per_slot);
    Ok(DerivativeKernel {
        field,
        symbol_zero,
        quad_est_err: panels.est_rel_err,
    })
}

/// One coarse piece: the sum of `r` consecutive fine pieces.
#[derive(Debug, Clone)]
pub struct CoarsePiece {
    pub j: usize,
    pub field: TorusField,
    pub eps_range: u64,
    pub constituents: std::ops::Range<usize>,
}

/// Coarse-grained decomposition at base `L' = L^r`.
#[derive(Debug, Clone)]
pub struct CoarseDecomposition {
    pub r: usize,
    pub l_prime: u64,
    pub spec: TorusSpec,
    pub params: SpectralParams,
    pub pieces: Vec<CoarsePiece>,
    pub remainder_field: TorusField,
    /// Number of trailing fine pieces folded into the remainder when `r`
    /// does not divide the scale count.
    pub folded: usize,
}

impl CoarseDecomposition {
    /// Total with the same reduction shape as `Decomposition::reconstruct`.
    pub fn total(&self) -> TorusField {
        let refs: Vec<&TorusField> = self.pieces.iter().map(|p| &p.field).collect();
        if refs.is_empty() {
            return self.remainder_field.clone();
        }
        field_tree(&refs).add(&self.remainder_field)
    }
}

/// Regroup `r` consecutive scales into one piece at base `L' = L^r`;
/// trailing pieces that do not fill a group are folded into the remainder
/// (recorded in `folded`).
pub fn coarse_grain(dec: &Decomposition, r: usize) -> Result<CoarseDecomposition> {
    if r < 1 {
        return Err(FrdError::InvalidSchedule("coarse factor must be >= 1".into()));
    }
    let n = dec.pieces.len();
    let groups = n / r;
    let folded = n - groups * r;
    let mut pieces = Vec::with_capacity(groups);
    for g in 0..groups {
        let lo = g * r;
        let hi = lo + r;
        let refs: Vec<&TorusField> = dec.pieces[lo..hi].iter().map(|p| &p.field).collect();
        let field = field_tree(&refs);
        let sup = field.sup_norm();
        let eps_range = field.range_of(Metric::L1, 1e-12 * sup).max(0) as u64;
        pieces.push(CoarsePiece {
            j: g,
            field,
            eps_range,
            constituents: lo..hi,
        });
    }
    let remainder_field = if folded > 0 {
        let mut refs: Vec<&TorusField> = dec.pieces[groups * r..].iter().map(|p| &p.field).collect();
        refs.push(&dec.remainder.field);
        field_tree(&refs)
    } else {
        dec.remainder.field.clone()
    };
    Ok(CoarseDecomposition {
        r,
        l_prime: (dec.spec.l as u64).pow(r as u32),
        spec: dec.spec,
        params: dec.params,
        pieces,
        remainder_field,
        folded,
    })
}

/// Values of the rescaled piece `Γ_{j,α}(·, L^{jα} m²)` on the `(ε_q Z)^d`
/// grid: `L^{2j[φ]} Γ̃_{j,α}(L^{j-q} k)` over the subsampled cube.
#[derive(Debug, Clone)]
pub struct RescaledView {
    pub j: usize,
    pub q: usize,
    pub side: i64,
    pub amplitude: f64,
    pub values: Vec<f64>,
}

impl RescaledView {
    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, &v| a.max(v.abs()))
    }
}

pub fn rescaled_view(piece: &Piece, q: usize) -> Result<RescaledView> {
    if q > piece.j {
        return Err(FrdError::InvalidSpec(format!(
            "rescaled view needs 0 <= q <= j, got q {q}, j {}",
            piece.j
        )));
    }
    let spec = piece.field.spec();
    let stride = (spec.l as i64).pow((piece.j - q) as u32);
    let m = spec.side();
    if m % stride != 0 {
        return Err(FrdError::InvalidSpec(format!(
            "stride L^{} does not divide the side {m}",
            piece.j - q
        )));
    }
    let side = m / stride;
    let amplitude = (spec.l as f64).powf(piece.exponents.two_phi * piece.j as f64);
    let d = spec.d;
    let mut values = Vec::with_capacity((side as usize).pow(d as u32));
    let mut coords = vec![0i64; d];
    let total = (side as usize).pow(d as u32);
    for linear in 0..total {
        let mut rem = linear;
        for k in (0..d).rev() {
            coords[k] = (rem % side as usize) as i64 * stride;
            rem /= side as usize;
        }
        values.push(amplitude * piece.field.value(&coords));
    }
    Ok(RescaledView {
        j: piece.j,
        q,
        side,
        amplitude,
        values,
    })
}

// ---------------------------------------------------------------------------
// directory serialization
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    d: usize,
    l: u32,
    n: u32,
    side: i64,
    alpha: f64,
    m2: f64,
    schedule: Vec<u64>,
    rel_tol: f64,
    max_panels: usize,
    panel_order: usize,
    pieces: Vec<PieceMeta>,
    remainder: RemainderMeta,
    defect: ReconstructionDefect,
    #[serde(skip_serializing_if = "Option::is_none")]
    built_unix: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PieceMeta {
    j: usize,
    file: String,
    exact_range: u64,
    eps_range: u64,
    resolvable: bool,
    sup: f64,
    symbol_min: f64,
    symbol_zero: f64,
    quad_est_err: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct RemainderMeta {
    file: String,
    sup: f64,
    symbol_min: f64,
    symbol_zero: f64,
    quad_est_err: f64,
}

/// Write a decomposition directory: `manifest.json` plus one CSV per piece
/// and for the remainder.
pub fn write_dir(dec: &Decomposition, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut pieces_meta = Vec::new();
    for piece in &dec.pieces {
        let file = format!("piece_{:03}.csv", piece.j);
        let mut w = BufWriter::new(std::fs::File::create(dir.join(&file))?);
        piece.field.write_csv(&mut w)?;
        w.flush()?;
        pieces_meta.push(PieceMeta {
            j: piece.j,
            file,
            exact_range: piece.exact_range,
            eps_range: piece.eps_range,
            resolvable: piece.resolvable,
            sup: piece.sup,
            symbol_min: piece.symbol_min,
            symbol_zero: piece.symbol_zero,
            quad_est_err: piece.quad_est_err,
        });
    }
    let remainder_file = "remainder.csv".to_string();
    {
        let mut w = BufWriter::new(std::fs::File::create(dir.join(&remainder_file))?);
        dec.remainder.field.write_csv(&mut w)?;
        w.flush()?;
    }
    let manifest = Manifest {
        format_version: 1,
        d: dec.spec.d,
        l: dec.spec.l,
        n: dec.spec.n,
        side: dec.spec.side(),
        alpha: dec.params.alpha,
        m2: dec.params.m2,
        schedule: dec.schedule.cuts().to_vec(),
        rel_tol: dec.rule.rel_tol,
        max_panels: dec.rule.max_panels,
        panel_order: dec.rule.panel_order,
        pieces: pieces_meta,
        remainder: RemainderMeta {
            file: remainder_file,
            sup: dec.remainder.sup,
            symbol_min: dec.remainder.symbol_min,
            symbol_zero: dec.remainder.symbol_zero,
            quad_est_err: dec.remainder.quad_est_err,
        },
        defect: dec.defect,
        built_unix: dec.built_unix,
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(dir.join("manifest.json"), json + "\n")?;
    Ok(())
}

/// Read a decomposition directory written by [`write_dir`]. Remainder
/// coefficients are recomputed by transform.
pub fn read_dir(dir: &Path) -> Result<Decomposition> {
    let manifest_text = std::fs::read_to_string(dir.join("manifest.json"))?;
    let manifest: Manifest = serde_json::from_str(&manifest_text)?;
    if manifest.format_version != 1 {
        return Err(FrdError::MalformedDir(format!(
            "unsupported manifest version {}",
            manifest.format_version
        )));
    }
    let spec = TorusSpec::new(manifest.d, manifest.l, manifest.n)?;
    let params = SpectralParams::new(manifest.alpha, manifest.m2)?;
    let schedule = BlockSchedule::new(manifest.schedule.clone())?;
    let rule = QuadratureRule {
        rel_tol: manifest.rel_tol,
        max_panels: manifest.max_panels,
        panel_order: manifest.panel_order,
    };
    let mut pieces = Vec::new();
    for meta in &manifest.pieces {
        let file = std::fs::File::open(dir.join(&meta.file))?;
        let mut reader = std::io::BufReader::new(file);
        let field = TorusField::read_csv(spec, &mut reader)?;
        pieces.push(Piece {
            j: meta.j,
            params,
            exponents: ScalingExponents::for_dim(spec.d, params.alpha),
            field,
            exact_range: meta.exact_range,
            eps_range: meta.eps_range,
            resolvable: meta.resolvable,
            sup: meta.sup,
            symbol_min: meta.symbol_min,
            symbol_zero: meta.symbol_zero,
            quad_est_err: meta.quad_est_err,
        });
    }
    let file = std::fs::File::open(dir.join(&manifest.remainder.file))?;
    let mut reader = std::io::BufReader::new(file);
    let field = TorusField::read_csv(spec, &mut reader)?;
    let coeffs = dft(&field);
    let remainder = Remainder {
        scales: schedule.scales() as u32,
        params,
        field,
        coeffs,
        sup: manifest.remainder.sup,
        symbol_min: manifest.remainder.symbol_min,
        symbol_zero: manifest.remainder.symbol_zero,
        quad_est_err: manifest.remainder.quad_est_err,
    };
    Ok(Decomposition {
        spec,
        params,
        schedule,
        rule,
        pieces,
        remainder,
        defect: manifest.defect,
        built_unix: manifest.built_unix,
    })
}
