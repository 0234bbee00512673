//! Mixed Lebesgue, Fourier-Lebesgue, Bochner-Sobolev and spectral Barron norms.
//!
//! All mixed norms integrate block 2 first (inner) and block 1 second
//! (outer):
//!
//! ```text
//! ‖f‖_{L^{p1,p2}(U,V)} = ( ∫_U ( ∫_V |f(x,y)|^{p2} dy )^{p1/p2} dx )^{1/p1}
//! ```
//!
//! with an essential supremum over grid samples when an exponent is infinite.

use num_complex::Complex64;

use crate::domains::Domain;
use crate::error::{usage, Error, Result};
use crate::grid::{spectral_derivative, Block, GridFunction, Space, TensorGrid};
use crate::weights::WeightSpec;

/// Exponents `(p1, p2)` of a mixed norm; `f64::INFINITY` stands for `∞`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MixedExponents {
    pub p1: f64,
    pub p2: f64,
}

impl MixedExponents {
    pub fn new(p1: f64, p2: f64) -> Result<Self> {
        for p in [p1, p2] {
            if !(p >= 1.0) {
                return usage(format!("exponent {p} outside [1, ∞]"));
            }
        }
        Ok(MixedExponents { p1, p2 })
    }

    pub fn uniform(p: f64) -> Result<Self> {
        MixedExponents::new(p, p)
    }
}

/// Derivative orders `(n1, n2)` of a Bochner-Sobolev norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub struct SobolevOrder {
    pub n1: usize,
    pub n2: usize,
}

impl SobolevOrder {
    pub fn new(n1: usize, n2: usize) -> Self {
        SobolevOrder { n1, n2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMode {
    Spectral,
    FiniteDifference,
}

/// Value of a whole-space frequency norm with its truncation audit.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FlNorm {
    pub value: f64,
    /// Norm of the same integrand restricted to the outer frequency shell
    /// `max_a |ξ_a| / K_a > 0.9`.
    pub tail: f64,
    /// Set when the tail exceeds 5% of the value.
    pub unconverged: bool,
}

/// Multi-indices `α ∈ ℕ^d` with `|α| ≤ n`, ordered by total degree.
pub fn multi_indices(d: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for k in 0..=n {
        exact_degree(d, k, &mut Vec::new(), &mut out);
    }
    out
}

fn exact_degree(d: usize, k: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if d == 0 {
        if k == 0 {
            out.push(prefix.clone());
        }
        return;
    }
    if d == 1 {
        prefix.push(k);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in (0..=k).rev() {
        prefix.push(first);
        exact_degree(d - 1, k - first, prefix, out);
        prefix.pop();
    }
}

/// Quadrature weights of one block: the domain's rule, or the full window when `domain` is `None`.
pub fn block_weights(grid: &TensorGrid, block: Block, domain: Option<&Domain>) -> Result<Vec<f64>> {
    let axes = &grid.axes()[grid.block_axes(block)];
    if axes.is_empty() {
        if domain.is_some() {
            return usage("a domain was given for an empty block");
        }
        return Ok(vec![1.0]);
    }
    match domain {
        Some(d) => d.quadrature_weights(axes),
        None => {
            let n: usize = axes.iter().map(|a| a.points).product();
            let cell: f64 = axes.iter().map(|a| a.spacing()).product();
            Ok(vec![cell; n])
        }
    }
}

fn power_sum(p: f64, terms: impl Iterator<Item = (f64, f64)>) -> f64 {
    if p.is_infinite() {
        terms.filter(|(w, _)| *w > 0.0).map(|(_, v)| v).fold(0.0, f64::max)
    } else {
        terms.filter(|(w, _)| *w > 0.0).map(|(w, v)| w * v.powf(p)).sum()
    }
}

fn finish(p: f64, s: f64) -> f64 {
    if p.is_infinite() {
        s
    } else {
        s.powf(1.0 / p)
    }
}

/// `‖F‖_{L^{p1,p2}}` of row-major magnitudes with block weights `w1` (outer) and `w2` (inner).
pub fn mixed_norm_of_samples(abs: &[f64], w1: &[f64], w2: &[f64], e: MixedExponents) -> f64 {
    let n2 = w2.len();
    debug_assert_eq!(abs.len(), w1.len() * n2);
    let inner = w1.iter().enumerate().map(|(i, &wi)| {
        let row = &abs[i * n2..(i + 1) * n2];
        let s = power_sum(e.p2, w2.iter().copied().zip(row.iter().copied()));
        (wi, finish(e.p2, s))
    });
    finish(e.p1, power_sum(e.p1, inner))
}

/// `‖f‖_{L^{p1,p2}(U×V)}`; `None` integrates over the whole window of that block.
///
/// ```
/// use aniso_core::domains::Domain;
/// use aniso_core::grid::{GridFunction, TensorGrid};
/// use aniso_core::norms::{mixed_lebesgue_norm, MixedExponents};
/// let grid = TensorGrid::uniform(1, 1, -2.0, 2.0, 64).unwrap();
/// let one = GridFunction::from_real_fn(grid, |_| 1.0);
/// let u = Domain::interval(0.0, 1.0).unwrap();
/// let e = MixedExponents::new(3.0, 1.5).unwrap();
/// let n = mixed_lebesgue_norm(&one, e, Some(&u), Some(&u)).unwrap();
/// assert!((n - 1.0).abs() < 1e-12);
/// ```
pub fn mixed_lebesgue_norm(f: &GridFunction, e: MixedExponents, u: Option<&Domain>, v: Option<&Domain>) -> Result<f64> {
    if !f.is_physical() {
        return usage("mixed Lebesgue norm of a function that is not in physical space");
    }
    let w1 = block_weights(f.grid(), Block::First, u)?;
    let w2 = block_weights(f.grid(), Block::Second, v)?;
    Ok(mixed_norm_of_samples(&f.abs_values(), &w1, &w2, e))
}

/// Largest frequency per axis, `π/h`.
fn cutoffs(grid: &TensorGrid) -> Vec<f64> {
    grid.axes().iter().map(|a| a.nyquist()).collect()
}

/// `‖ω·𝔉f‖_{L^{p1,p2}}` over the grid's frequency lattice.
///
/// Accepts a physical function (transformed with the cached spectrum) or
/// samples already on the frequency lattice.
pub fn fourier_lebesgue_norm(f: &GridFunction, omega: &WeightSpec, e: MixedExponents) -> Result<FlNorm> {
    let grid = f.grid();
    if omega.split() != grid.block_dims() {
        return usage(format!("weight split {:?} does not match grid blocks {:?}", omega.split(), grid.block_dims()));
    }
    let spec: Vec<Complex64> = if f.is_physical() {
        f.spectrum()?.as_ref().clone()
    } else if f.is_spectral() {
        f.values().to_vec()
    } else {
        return usage("Fourier-Lebesgue norm of a partially transformed function");
    };
    let d1 = grid.block_dims().0;
    let k = cutoffs(grid);
    let mut abs = vec![0.0; grid.len()];
    let mut shell = vec![0.0; grid.len()];
    let mut bad = None;
    grid.for_each_point(Space::Frequency, |flat, xi| {
        let w = omega.value(&xi[..d1], &xi[d1..]);
        if !(w >= 0.0 && w.is_finite()) && bad.is_none() {
            bad = Some(xi.to_vec());
        }
        let v = w * spec[flat].norm();
        abs[flat] = v;
        if xi.iter().zip(&k).any(|(x, kk)| x.abs() > 0.9 * kk) {
            shell[flat] = v;
        }
    });
    if let Some(xi) = bad {
        return Err(Error::Weight(format!("{omega} is not a positive finite number at ξ = {xi:?}")));
    }
    let w1 = vec![dual_block_cell(grid, Block::First); grid.block_len(Block::First)];
    let w2 = vec![dual_block_cell(grid, Block::Second); grid.block_len(Block::Second)];
    let value = mixed_norm_of_samples(&abs, &w1, &w2, e);
    let tail = mixed_norm_of_samples(&shell, &w1, &w2, e);
    Ok(FlNorm { value, tail, unconverged: tail > 0.05 * value })
}

fn dual_block_cell(grid: &TensorGrid, block: Block) -> f64 {
    grid.axes()[grid.block_axes(block)].iter().map(|a| a.dual_spacing()).product()
}

/// `∫ ω(ξ)|f̂(ξ)| dξ` for the given representative `f`.
///
/// For a bounded domain this is an upper bound on the infimum over
/// extensions; the infimum itself is not computed.
pub fn spectral_barron_norm(f: &GridFunction, omega: &WeightSpec) -> Result<FlNorm> {
    fourier_lebesgue_norm(f, omega, MixedExponents { p1: 1.0, p2: 1.0 })
}

/// `‖f‖_{W^{n2,p2}_{n1,p1}(U,V)}` via derivatives computed on the grid.
///
/// ```
/// use aniso_core::domains::Domain;
/// use aniso_core::grid::{GridFunction, TensorGrid};
/// use aniso_core::norms::*;
/// let grid = TensorGrid::uniform(1, 1, -4.0, 4.0, 128).unwrap();
/// let f = GridFunction::from_real_fn(grid, |z| (-z[0] * z[0] - z[1] * z[1]).exp());
/// let e = MixedExponents::new(2.0, 2.0).unwrap();
/// let plain = mixed_lebesgue_norm(&f, e, None, None).unwrap();
/// let w00 = bochner_sobolev_norm(&f, SobolevOrder::new(0, 0), e, None, None, DerivativeMode::Spectral).unwrap();
/// assert_eq!(plain, w00);
/// ```
pub fn bochner_sobolev_norm(
    f: &GridFunction,
    o: SobolevOrder,
    e: MixedExponents,
    u: Option<&Domain>,
    v: Option<&Domain>,
    mode: DerivativeMode,
) -> Result<f64> {
    if !f.is_physical() {
        return usage("Bochner-Sobolev norm of a function that is not in physical space");
    }
    let grid = f.grid().clone();
    let partial = |orders: &[usize]| -> Result<Vec<f64>> {
        match mode {
            DerivativeMode::Spectral => Ok(spectral_derivative(f, orders)?.abs_values()),
            DerivativeMode::FiniteDifference => finite_difference(f, orders),
        }
    };
    bochner_sobolev_from_partials(&grid, o, e, u, v, partial)
}

/// Bochner-Sobolev norm assembled from magnitudes `|∂^{(α,β)} f|` supplied by `partial`.
///
/// `partial` receives the full per-axis order vector `(α, β)` and returns
/// row-major samples on `grid`. NaN samples with positive quadrature weight
/// (e.g. from a stencil that leaves the grid) are a resolution error.
pub fn bochner_sobolev_from_partials(
    grid: &TensorGrid,
    o: SobolevOrder,
    e: MixedExponents,
    u: Option<&Domain>,
    v: Option<&Domain>,
    mut partial: impl FnMut(&[usize]) -> Result<Vec<f64>>,
) -> Result<f64> {
    let (d1, d2) = grid.block_dims();
    let w1 = block_weights(grid, Block::First, u)?;
    let w2 = block_weights(grid, Block::Second, v)?;
    let n2 = w2.len();
    let alphas = multi_indices(d1, o.n1);
    let betas = multi_indices(d2, o.n2);
    let mut outer_terms = 0.0;
    for alpha in &alphas {
        let mut g: Vec<f64> = vec![0.0; w1.len()];
        for beta in &betas {
            let orders: Vec<usize> = alpha.iter().chain(beta).copied().collect();
            let vals = partial(&orders)?;
            if vals.len() != grid.len() {
                return usage("partial derivative samples do not match the grid");
            }
            for (i, gi) in g.iter_mut().enumerate() {
                if w1[i] <= 0.0 {
                    continue;
                }
                let row = &vals[i * n2..(i + 1) * n2];
                if row.iter().zip(&w2).any(|(x, w)| *w > 0.0 && x.is_nan()) {
                    return Err(Error::Resolution(format!(
                        "derivative {orders:?} is not available on the whole domain (stencil leaves the grid)"
                    )));
                }
                let s = power_sum(e.p2, w2.iter().copied().zip(row.iter().copied()));
                *gi = if e.p2.is_infinite() { gi.max(s) } else { *gi + s };
            }
        }
        let gfin: Vec<f64> = g.into_iter().map(|s| finish(e.p2, s)).collect();
        let s = power_sum(e.p1, w1.iter().copied().zip(gfin));
        outer_terms = if e.p1.is_infinite() { f64::max(outer_terms, s) } else { outer_terms + s };
    }
    Ok(finish(e.p1, outer_terms))
}

const D1: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
const D2: [f64; 5] = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];

/// Fourth-order centered differences; samples whose stencil leaves the grid become NaN.
pub fn finite_difference(f: &GridFunction, orders: &[usize]) -> Result<Vec<f64>> {
    let grid = f.grid();
    if orders.len() != grid.dim() {
        return usage(format!("{} derivative orders for a {}-dimensional grid", orders.len(), grid.dim()));
    }
    let mut data: Vec<Complex64> = f.values().to_vec();
    let strides = grid.strides();
    for (axis, &k) in orders.iter().enumerate() {
        let h = grid.axis(axis).spacing();
        let mut ops: Vec<(&[f64; 5], f64)> = vec![(&D2, h * h); k / 2];
        if k % 2 == 1 {
            ops.push((&D1, h));
        }
        for (stencil, scale) in ops {
            data = apply_stencil(&data, grid.axis(axis).points, strides[axis], stencil, scale);
        }
    }
    Ok(data.into_iter().map(|v| v.norm()).collect())
}

fn apply_stencil(data: &[Complex64], n: usize, stride: usize, c: &[f64; 5], scale: f64) -> Vec<Complex64> {
    let nan = Complex64::new(f64::NAN, f64::NAN);
    let mut out = vec![nan; data.len()];
    let outer = data.len() / (n * stride);
    for o in 0..outer {
        for inner in 0..stride {
            let base = o * n * stride + inner;
            for j in 2..n.saturating_sub(2) {
                let mut acc = Complex64::new(0.0, 0.0);
                for (t, &ct) in c.iter().enumerate() {
                    if ct != 0.0 {
                        acc += data[base + (j + t - 2) * stride] * ct;
                    }
                }
                out[base + j * stride] = acc / scale;
            }
        }
    }
    out
}
