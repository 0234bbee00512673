//! Numerical checks of the inclusion and embedding inequalities between
//! Fourier-Lebesgue, mixed Lebesgue and Bochner-Sobolev norms.
//!
//! Inequalities with an unknown constant are reported as a ratio
//! `lhs / rhs_without_constant`, which must stay bounded over a test family
//! and stable under grid refinement. Constant-free inequalities must give a
//! ratio of at most one.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::domains::{char_fl_norm, smooth_characteristic, Domain};
use crate::error::{usage, Error, Result};
use crate::grid::{Block, GridFunction, Space, TensorGrid};
use crate::norms::{
    bochner_sobolev_norm, fourier_lebesgue_norm, mixed_lebesgue_norm, mixed_norm_of_samples, DerivativeMode,
    MixedExponents, SobolevOrder,
};
use crate::weights::{check_elliptic, SamplePlan, WeightSpec};

/// Tolerance on the exponent identity `1/s + 1/t + 1/p = 2`.
pub const EXPONENT_TOL: f64 = 1e-12;
/// Largest admissible drift between the last two refinement ratios.
pub const STABILITY_TOL: f64 = 0.05;

#[derive(Debug, Clone, Default, PartialEq, serde::Serialize)]
pub struct ReportParameters {
    pub check: String,
    pub p: (f64, f64),
    pub t: Option<(f64, f64)>,
    pub s: Option<(f64, f64)>,
    pub n: Option<(usize, usize)>,
    pub d: (usize, usize),
    pub domains: Vec<String>,
    pub weight: Option<String>,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct VerificationReport {
    pub lhs: f64,
    pub rhs_without_constant: f64,
    /// `lhs / rhs_without_constant`, zero when both vanish.
    pub ratio: f64,
    pub parameters: ReportParameters,
    /// Ratios at increasing resolution (or along a smoothing ladder), last entry = `ratio`.
    pub refinement_trace: Vec<f64>,
}

impl VerificationReport {
    fn new(lhs: f64, rhs: f64, parameters: ReportParameters) -> Self {
        let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
        VerificationReport { lhs, rhs_without_constant: rhs, ratio, parameters, refinement_trace: vec![ratio] }
    }

    /// Relative change between the last two entries of the trace.
    pub fn drift(&self) -> f64 {
        match self.refinement_trace.as_slice() {
            [.., a, b] if *b != 0.0 => ((b - a) / b).abs(),
            [.., a, b] if *a == *b => 0.0,
            [.., _, _] => f64::INFINITY,
            _ => 0.0,
        }
    }

    pub fn is_stable(&self) -> bool {
        self.ratio.is_finite() && self.drift() < STABILITY_TOL
    }
}

/// Runs `check` at each grid size and returns the finest report with the full ratio trace.
pub fn refine(sizes: &[usize], mut check: impl FnMut(usize) -> Result<VerificationReport>) -> Result<VerificationReport> {
    let mut trace = Vec::with_capacity(sizes.len());
    let mut last = None;
    for &n in sizes {
        let r = check(n)?;
        trace.push(r.ratio);
        last = Some(r);
    }
    let mut r = last.ok_or_else(|| Error::Usage("empty refinement ladder".into()))?;
    r.refinement_trace = trace;
    Ok(r)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= EXPONENT_TOL
}

fn conjugate_power(q: f64, p: f64) -> f64 {
    if q == p {
        f64::INFINITY
    } else {
        q / (q - p)
    }
}

fn elliptic_wrt_product_bessel(omega: &WeightSpec, o: SobolevOrder) -> Result<()> {
    let lower = WeightSpec::product_bessel(o.n1 as f64, o.n2 as f64, omega.split())?;
    let report = check_elliptic(omega, &lower, &SamplePlan::default())?;
    if !report.holds {
        return Err(Error::Precondition(format!(
            "{omega} is not elliptic with respect to ⟨ξ1⟩^{}⟨ξ2⟩^{} (observed ratio {:.3e} at {:?})",
            o.n1, o.n2, report.constant_c, report.witness
        )));
    }
    Ok(())
}

fn fl_of(f: &GridFunction, omega: &WeightSpec, t: (f64, f64)) -> Result<f64> {
    let n = fourier_lebesgue_norm(f, omega, MixedExponents::new(t.0, t.1)?)?;
    if n.unconverged {
        return Err(Error::Resolution(format!(
            "Fourier-Lebesgue norm not resolved on the grid (tail {:.2e} of {:.2e})",
            n.tail, n.value
        )));
    }
    Ok(n.value)
}

fn domain_dims(f: &GridFunction, u: &Domain, v: &Domain) -> Result<()> {
    let (d1, d2) = f.grid().block_dims();
    if u.dim() != d1 || v.dim() != d2 {
        return usage(format!("domains of dimension ({}, {}) on a ({d1}, {d2}) grid", u.dim(), v.dim()));
    }
    Ok(())
}

/// Bochner-Sobolev norm on `U × V` against `‖𝔉χ_U‖_{s1}‖𝔉χ_V‖_{s2}‖f‖_{FL^{t1,t2}(ω)}`.
#[allow(clippy::too_many_arguments)]
pub fn verify_high_degree_inclusion(
    f: &GridFunction,
    omega: &WeightSpec,
    o: SobolevOrder,
    e: MixedExponents,
    s: (f64, f64),
    t: (f64, f64),
    u: &Domain,
    v: &Domain,
) -> Result<VerificationReport> {
    for (i, (si, ti, pi)) in [(s.0, t.0, e.p1), (s.1, t.1, e.p2)].into_iter().enumerate() {
        if !(1.0..=2.0).contains(&si) || !(1.0..=2.0).contains(&ti) || pi < 2.0 {
            return usage(format!("block {}: need 1 ≤ s, t ≤ 2 ≤ p, got s = {si}, t = {ti}, p = {pi}", i + 1));
        }
        if !close(1.0 / si + 1.0 / ti + 1.0 / pi, 2.0) {
            return usage(format!("block {}: 1/s + 1/t + 1/p = {} ≠ 2", i + 1, 1.0 / si + 1.0 / ti + 1.0 / pi));
        }
    }
    if e.p1 > e.p2 {
        return usage(format!("unsupported exponent order p1 = {} > p2 = {}", e.p1, e.p2));
    }
    domain_dims(f, u, v)?;
    elliptic_wrt_product_bessel(omega, o)?;
    let grid = f.grid();
    let mut char_factor = 1.0;
    for (dom, si, block) in [(u, s.0, Block::First), (v, s.1, Block::Second)] {
        let c = char_fl_norm(dom, si, &grid.block_grid(block)?)?;
        if c.diverges {
            return Err(Error::Inadmissible(format!("‖𝔉χ‖ in L^{si} diverges for {dom}")));
        }
        char_factor *= c.value;
    }
    let lhs = bochner_sobolev_norm(f, o, e, Some(u), Some(v), DerivativeMode::Spectral)?;
    let rhs = char_factor * fl_of(f, omega, t)?;
    let params = ReportParameters {
        check: "high_degree".into(),
        p: (e.p1, e.p2),
        t: Some(t),
        s: Some(s),
        n: Some((o.n1, o.n2)),
        d: grid.block_dims(),
        domains: vec![u.to_string(), v.to_string()],
        weight: Some(omega.to_string()),
        points: grid.axis(0).points,
    };
    Ok(VerificationReport::new(lhs, rhs, params))
}

/// `s_i` completing the exponent identity for given `t_i` and `p_i`.
pub fn high_degree_s(t: f64, p: f64) -> f64 {
    1.0 / (2.0 - 1.0 / t - 1.0 / p)
}

/// Bochner-Sobolev norm with `p_i ≤ 2` against `|U|^{1/p1+1/t1−1}|V|^{1/p2+1/t2−1}‖f‖_{FL^{t1,t2}(ω)}`.
pub fn verify_low_degree_inclusion(
    f: &GridFunction,
    omega: &WeightSpec,
    o: SobolevOrder,
    e: MixedExponents,
    t: (f64, f64),
    u: &Domain,
    v: &Domain,
) -> Result<VerificationReport> {
    for x in [e.p1, e.p2, t.0, t.1] {
        if !(1.0..=2.0).contains(&x) {
            return usage(format!("exponent {x} outside [1, 2]"));
        }
    }
    if t.0 < t.1 {
        return usage(format!("need t1 ≥ t2, got ({}, {})", t.0, t.1));
    }
    domain_dims(f, u, v)?;
    elliptic_wrt_product_bessel(omega, o)?;
    let lhs = bochner_sobolev_norm(f, o, e, Some(u), Some(v), DerivativeMode::Spectral)?;
    let vol = u.volume().powf(1.0 / e.p1 + 1.0 / t.0 - 1.0) * v.volume().powf(1.0 / e.p2 + 1.0 / t.1 - 1.0);
    let rhs = vol * fl_of(f, omega, t)?;
    let grid = f.grid();
    let params = ReportParameters {
        check: "low_degree".into(),
        p: (e.p1, e.p2),
        t: Some(t),
        n: Some((o.n1, o.n2)),
        d: grid.block_dims(),
        domains: vec![u.to_string(), v.to_string()],
        weight: Some(omega.to_string()),
        points: grid.axis(0).points,
        ..Default::default()
    };
    Ok(VerificationReport::new(lhs, rhs, params))
}

/// `‖(χ_{U1}⊗χ_{U2}) f‖_{L^{p1,p2}} ≤ |U1|^{1/(p1 s1)}|U2|^{1/(p2 s2)}‖f‖_{L^{q1,q2}}` with `s_i = q_i/(q_i − p_i)`.
pub fn verify_mixed_holder(
    f: &GridFunction,
    p: (f64, f64),
    q: (f64, f64),
    u1: &Domain,
    u2: &Domain,
) -> Result<VerificationReport> {
    if q.0 < p.0 || q.1 < p.1 {
        return usage(format!("need q ≥ p, got p = {p:?}, q = {q:?}"));
    }
    domain_dims(f, u1, u2)?;
    let lhs = mixed_lebesgue_norm(f, MixedExponents::new(p.0, p.1)?, Some(u1), Some(u2))?;
    let whole = mixed_lebesgue_norm(f, MixedExponents::new(q.0, q.1)?, None, None)?;
    let (s1, s2) = (conjugate_power(q.0, p.0), conjugate_power(q.1, p.1));
    let rhs = u1.volume().powf(1.0 / (p.0 * s1)) * u2.volume().powf(1.0 / (p.1 * s2)) * whole;
    let grid = f.grid();
    let params = ReportParameters {
        check: "mixed_holder".into(),
        p,
        t: Some(q),
        s: Some((s1, s2)),
        d: grid.block_dims(),
        domains: vec![u1.to_string(), u2.to_string()],
        points: grid.axis(0).points,
        ..Default::default()
    };
    Ok(VerificationReport::new(lhs, rhs, params))
}

/// `‖χ^ε_U χ^ε_V h‖_{L^{p1,p2}}` along a decreasing ladder of `ε`, against the limit `‖χ_U χ_V h‖_{L^{p1,p2}}`.
///
/// The trace holds `value(ε) / limit` for each rung; `ratio` is the last one.
pub fn verify_smoothing_convergence(
    h: &GridFunction,
    p: (f64, f64),
    u: &Domain,
    v: &Domain,
    ladder: &[f64],
) -> Result<VerificationReport> {
    if ladder.is_empty() || ladder.windows(2).any(|w| w[1] >= w[0]) {
        return usage("smoothing ladder must be non-empty and strictly decreasing");
    }
    domain_dims(h, u, v)?;
    let grid = h.grid();
    let e = MixedExponents::new(p.0, p.1)?;
    let limit = mixed_lebesgue_norm(h, e, Some(u), Some(v))?;
    let (g1, g2) = (grid.block_grid(Block::First)?, grid.block_grid(Block::Second)?);
    let n2 = grid.block_len(Block::Second);
    let base = h.abs_values();
    let mut trace = Vec::with_capacity(ladder.len());
    let mut value = f64::NAN;
    for &eps in ladder {
        let cu = smooth_characteristic(u, eps, &g1)?.real_parts();
        let cv = smooth_characteristic(v, eps, &g2)?.real_parts();
        let prod: Vec<f64> = base.iter().enumerate().map(|(k, x)| cu[k / n2] * cv[k % n2] * x).collect();
        let w1 = vec![g1.cell_volume(); cu.len()];
        let w2 = vec![g2.cell_volume(); cv.len()];
        value = mixed_norm_of_samples(&prod, &w1, &w2, e);
        trace.push(if limit == 0.0 { 1.0 } else { value / limit });
    }
    let params = ReportParameters {
        check: "smoothing_convergence".into(),
        p,
        d: grid.block_dims(),
        domains: vec![u.to_string(), v.to_string()],
        points: grid.axis(0).points,
        ..Default::default()
    };
    let mut r = VerificationReport::new(value, limit, params);
    if limit == 0.0 && value == 0.0 {
        r.ratio = 1.0;
    }
    r.refinement_trace = trace;
    Ok(r)
}

/// `‖â‖_{L¹} ≤ ‖1/ω‖_{L^{s1,s2}}‖ω â‖_{L^{t1,t2}}` with `s_i = t_i/(t_i − 1)`, on the grid's frequency lattice.
pub fn verify_fl_embedding(
    a: &GridFunction,
    omega: &WeightSpec,
    t: (f64, f64),
    theta1: &WeightSpec,
    theta2: &WeightSpec,
) -> Result<VerificationReport> {
    let grid = a.grid();
    let (d1, d2) = grid.block_dims();
    if theta1.split() != (d1, 0) || theta2.split() != (d2, 0) {
        return usage("block weights must be single-block weights of the block dimensions");
    }
    for x in [t.0, t.1] {
        if !(1.0..=2.0).contains(&x) {
            return usage(format!("exponent {x} outside [1, 2]"));
        }
    }
    let kmin = lattice_min(grid, theta1, Block::First).min(lattice_min(grid, theta2, Block::Second));
    if !(kmin > 0.0) {
        return Err(Error::Precondition("block weights are not bounded below by a positive constant".into()));
    }
    let lower = WeightSpec::tensor(theta1.clone(), theta2.clone())?;
    let report = check_elliptic(omega, &lower, &SamplePlan::default())?;
    if !report.holds {
        return Err(Error::Precondition(format!("{omega} is not elliptic with respect to {lower}")));
    }
    let unit = WeightSpec::unit(grid.block_dims());
    let lhs = fourier_lebesgue_norm(a, &unit, MixedExponents::uniform(1.0)?)?.value;
    let s = (conjugate_power(t.0, 1.0), conjugate_power(t.1, 1.0));
    let mut inv = vec![0.0; grid.len()];
    grid.for_each_point(Space::Frequency, |k, xi| inv[k] = 1.0 / omega.value(&xi[..d1], &xi[d1..]));
    let w1 = vec![dual_cell(grid, Block::First); grid.block_len(Block::First)];
    let w2 = vec![dual_cell(grid, Block::Second); grid.block_len(Block::Second)];
    let inv_norm = mixed_norm_of_samples(&inv, &w1, &w2, MixedExponents::new(s.0, s.1)?);
    let weighted = fourier_lebesgue_norm(a, omega, MixedExponents::new(t.0, t.1)?)?.value;
    let params = ReportParameters {
        check: "fl_embedding".into(),
        p: (1.0, 1.0),
        t: Some(t),
        s: Some(s),
        d: grid.block_dims(),
        weight: Some(omega.to_string()),
        points: grid.axis(0).points,
        ..Default::default()
    };
    Ok(VerificationReport::new(lhs, inv_norm * weighted, params))
}

fn dual_cell(grid: &TensorGrid, block: Block) -> f64 {
    grid.axes()[grid.block_axes(block)].iter().map(|a| a.dual_spacing()).product()
}

fn lattice_min(grid: &TensorGrid, w: &WeightSpec, block: Block) -> f64 {
    let Ok(g) = grid.block_grid(block) else { return 1.0 };
    if g.dim() == 0 {
        return 1.0;
    }
    let mut m = f64::INFINITY;
    g.for_each_point(Space::Frequency, |_, xi| m = m.min(w.value(xi, &[])));
    m
}

/// Smooth, rapidly decaying test functions with known structure.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// `exp(−a1|x − c1|² − a2|y − c2|²)`.
    TensorGaussian { center: Vec<f64>, a1: f64, a2: f64, split: (usize, usize) },
    /// `Σ_k w_k exp(−|z − c_k|² / (2σ_k²))`.
    GaussianMixture { weights: Vec<f64>, centers: Vec<Vec<f64>>, widths: Vec<f64> },
    /// `Σ_k c_k cos(⟨m_k, z⟩ + φ_k)`, multiplied by `exp(−|z|²/(2σ²))` when an envelope is set.
    TrigPolynomial { coefs: Vec<f64>, freqs: Vec<Vec<f64>>, phases: Vec<f64>, envelope: Option<f64> },
}

impl TestFunction {
    pub fn standard_gaussian(split: (usize, usize)) -> Self {
        TestFunction::TensorGaussian { center: vec![0.0; split.0 + split.1], a1: 0.5, a2: 0.5, split }
    }

    /// Three-component mixture with centers drawn uniformly from `U × V`.
    pub fn random_mixture(rng: &mut impl Rng, u: &Domain, v: &Domain) -> Self {
        let (bu, bv) = (u.bounding_box(), v.bounding_box());
        let mut centers = Vec::new();
        let mut weights = Vec::new();
        let mut widths = Vec::new();
        while centers.len() < 3 {
            let x: Vec<f64> = bu.lo.iter().zip(&bu.hi).map(|(a, b)| rng.random_range(*a..*b)).collect();
            let y: Vec<f64> = bv.lo.iter().zip(&bv.hi).map(|(a, b)| rng.random_range(*a..*b)).collect();
            if u.indicator(&x) < 1.0 || v.indicator(&y) < 1.0 {
                continue;
            }
            centers.push([x, y].concat());
            weights.push(rng.random_range(-1.0..1.0));
            widths.push(rng.random_range(0.4..0.8));
        }
        TestFunction::GaussianMixture { weights, centers, widths }
    }

    /// Band-limited polynomial with `terms` random integer frequencies in `[−k, k]^d`.
    pub fn random_trig(rng: &mut impl Rng, dim: usize, terms: usize, k: i32, envelope: Option<f64>) -> Self {
        let coefs = (0..terms).map(|_| rng.random_range(-1.0..1.0)).collect();
        let freqs = (0..terms).map(|_| (0..dim).map(|_| rng.random_range(-k..=k) as f64).collect()).collect();
        let phases = (0..terms).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        TestFunction::TrigPolynomial { coefs, freqs, phases, envelope }
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        match self {
            TestFunction::TensorGaussian { center, a1, a2, split } => {
                let d1 = split.0;
                let r1: f64 = z[..d1].iter().zip(center).map(|(a, c)| (a - c).powi(2)).sum();
                let r2: f64 = z[d1..].iter().zip(&center[d1..]).map(|(a, c)| (a - c).powi(2)).sum();
                (-a1 * r1 - a2 * r2).exp()
            }
            TestFunction::GaussianMixture { weights, centers, widths } => weights
                .iter()
                .zip(centers)
                .zip(widths)
                .map(|((w, c), s)| {
                    let r2: f64 = z.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum();
                    w * (-r2 / (2.0 * s * s)).exp()
                })
                .sum(),
            TestFunction::TrigPolynomial { coefs, freqs, phases, envelope } => {
                let s: f64 = coefs
                    .iter()
                    .zip(freqs)
                    .zip(phases)
                    .map(|((c, m), ph)| c * (m.iter().zip(z).map(|(a, b)| a * b).sum::<f64>() + ph).cos())
                    .sum();
                match envelope {
                    Some(sig) => s * (-z.iter().map(|x| x * x).sum::<f64>() / (2.0 * sig * sig)).exp(),
                    None => s,
                }
            }
        }
    }

    pub fn sample(&self, grid: &TensorGrid) -> GridFunction {
        GridFunction::from_real_fn(grid.clone(), |z| self.eval(z))
    }

    /// Unitary Fourier transform, where available in closed form.
    pub fn fourier(&self, xi: &[f64]) -> Option<Complex64> {
        match self {
            TestFunction::TensorGaussian { center, a1, a2, split } => {
                let d1 = split.0;
                let mut mag = 1.0;
                for (k, x) in xi.iter().enumerate() {
                    let a = if k < d1 { *a1 } else { *a2 };
                    mag *= (2.0 * a).sqrt().recip() * (-x * x / (4.0 * a)).exp();
                }
                let phase: f64 = -xi.iter().zip(center).map(|(x, c)| x * c).sum::<f64>();
                Some(Complex64::from_polar(mag, phase))
            }
            TestFunction::GaussianMixture { weights, centers, widths } => {
                let r2: f64 = xi.iter().map(|x| x * x).sum();
                Some(
                    weights
                        .iter()
                        .zip(centers)
                        .zip(widths)
                        .map(|((w, c), s)| {
                            let phase: f64 = -xi.iter().zip(c).map(|(x, y)| x * y).sum::<f64>();
                            Complex64::from_polar(w * s.powi(xi.len() as i32) * (-0.5 * s * s * r2).exp(), phase)
                        })
                        .sum(),
                )
            }
            TestFunction::TrigPolynomial { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sq() -> Domain {
        Domain::interval(-1.0, 1.0).unwrap()
    }

    fn gauss_grid(n: usize) -> TensorGrid {
        TensorGrid::uniform(1, 1, -8.0, 8.0, n).unwrap()
    }

    #[test]
    fn zero_function_gives_zero_ratio() {
        let f = GridFunction::zeros(gauss_grid(64));
        let w = WeightSpec::product_bessel(1.0, 1.0, (1, 1)).unwrap();
        let o = SobolevOrder::new(1, 1);
        let e = MixedExponents::uniform(2.0).unwrap();
        let r = verify_high_degree_inclusion(&f, &w, o, e, (2.0, 2.0), (1.0, 1.0), &sq(), &sq()).unwrap();
        assert_eq!((r.lhs, r.ratio), (0.0, 0.0));
        let r = verify_low_degree_inclusion(&f, &w, o, e, (1.0, 1.0), &sq(), &sq()).unwrap();
        assert_eq!(r.ratio, 0.0);
        let r = verify_fl_embedding(
            &f,
            &WeightSpec::product_bessel(2.0, 2.0, (1, 1)).unwrap(),
            (2.0, 2.0),
            &WeightSpec::bessel_power(2.0, (1, 0)).unwrap(),
            &WeightSpec::bessel_power(2.0, (1, 0)).unwrap(),
        )
        .unwrap();
        assert_eq!((r.lhs, r.ratio), (0.0, 0.0));
    }

    #[test]
    fn plancherel_and_overlap_corollaries_share_the_rhs() {
        let g = TestFunction::standard_gaussian((1, 1));
        let f = g.sample(&gauss_grid(128));
        let w = WeightSpec::product_bessel(1.0, 2.0, (1, 1)).unwrap();
        let o = SobolevOrder::new(1, 2);
        let e = MixedExponents::uniform(2.0).unwrap();
        let u = Domain::interval(-1.0, 1.0).unwrap();
        let v = Domain::interval(0.0, 0.5).unwrap();
        let hi = verify_high_degree_inclusion(&f, &w, o, e, (2.0, 2.0), (1.0, 1.0), &u, &v).unwrap();
        let lo = verify_low_degree_inclusion(&f, &w, o, e, (1.0, 1.0), &u, &v).unwrap();
        assert!((hi.rhs_without_constant - lo.rhs_without_constant).abs() < 1e-6 * lo.rhs_without_constant);
        assert!((hi.lhs - lo.lhs).abs() < 1e-14 * lo.lhs);
    }

    #[test]
    fn identity_and_order_are_enforced() {
        let f = TestFunction::standard_gaussian((1, 1)).sample(&gauss_grid(64));
        let w = WeightSpec::product_bessel(1.0, 1.0, (1, 1)).unwrap();
        let o = SobolevOrder::new(1, 1);
        let e = MixedExponents::uniform(2.0).unwrap();
        let bad = verify_high_degree_inclusion(&f, &w, o, e, (2.0, 2.0), (1.0 / 0.95, 1.0), &sq(), &sq());
        assert!(matches!(bad, Err(Error::Usage(_))));
        let e42 = MixedExponents::new(4.0, 2.0).unwrap();
        let s = high_degree_s(1.0, 4.0);
        let bad = verify_high_degree_inclusion(&f, &w, o, e42, (s, 2.0), (1.0, 1.0), &sq(), &sq());
        assert!(matches!(bad, Err(Error::Usage(_))));
        let s1 = high_degree_s(2.0, 2.0);
        let bad = verify_high_degree_inclusion(&f, &w, o, e, (s1, s1), (2.0, 2.0), &sq(), &sq());
        assert!(matches!(bad, Err(Error::Inadmissible(_))), "{bad:?}");
        let low = WeightSpec::unit((1, 1));
        let bad = verify_high_degree_inclusion(&f, &low, o, e, (2.0, 2.0), (1.0, 1.0), &sq(), &sq());
        assert!(matches!(bad, Err(Error::Precondition(_))));
        let bad = verify_low_degree_inclusion(&f, &w, o, MixedExponents::uniform(2.0).unwrap(), (1.0, 1.5), &sq(), &sq());
        assert!(matches!(bad, Err(Error::Usage(_))));
    }

    #[test]
    fn gaussian_high_degree_ratio_is_refinement_stable() {
        let g = TestFunction::standard_gaussian((1, 1));
        let w = WeightSpec::product_bessel(1.0, 2.0, (1, 1)).unwrap();
        let r = refine(&[128, 256, 512], |n| {
            verify_high_degree_inclusion(
                &g.sample(&gauss_grid(n)),
                &w,
                SobolevOrder::new(1, 2),
                MixedExponents::uniform(2.0).unwrap(),
                (2.0, 2.0),
                (1.0, 1.0),
                &sq(),
                &sq(),
            )
        })
        .unwrap();
        assert!(r.is_stable(), "{:?}", r.refinement_trace);
        assert!(r.ratio > 0.0 && r.ratio < 1.0);
    }

    #[test]
    fn heavier_weight_lowers_the_ratio() {
        let g = TestFunction::standard_gaussian((1, 1));
        let f = g.sample(&gauss_grid(128));
        let o = SobolevOrder::new(1, 1);
        let e = MixedExponents::uniform(2.0).unwrap();
        let mut last = f64::INFINITY;
        for n in 1..=4 {
            let w = WeightSpec::product_bessel(n as f64, n as f64, (1, 1)).unwrap();
            let r = verify_high_degree_inclusion(&f, &w, o, e, (2.0, 2.0), (1.0, 1.0), &sq(), &sq()).unwrap();
            assert!(r.ratio <= last * (1.0 + 1e-12));
            last = r.ratio;
        }
    }

    #[test]
    fn holder_equality_for_constant() {
        let grid = TensorGrid::uniform(1, 1, -0.5, 1.5, 64).unwrap();
        let one = GridFunction::from_real_fn(grid.clone(), |_| 1.0);
        let u = Domain::interval(0.0, 1.0).unwrap();
        let r = verify_mixed_holder(&one, (1.5, 2.0), (1.5, 2.0), &u, &u).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-12);
        // q = p gives the contraction ‖χ f‖ ≤ ‖f‖ on the whole window
        assert!((r.rhs_without_constant - 2f64.powf(1.0 / 1.5 + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn smoothing_ladder_for_constant_and_oversmoothing() {
        let grid = TensorGrid::uniform(1, 1, -1.0, 3.0, 1024).unwrap();
        let one = GridFunction::from_real_fn(grid, |_| 1.0);
        let u = Domain::interval(0.0, 1.0).unwrap();
        let r = verify_smoothing_convergence(&one, (2.0, 3.0), &u, &u, &[0.4, 0.2, 0.1, 0.05]).unwrap();
        assert!((r.rhs_without_constant - 1.0).abs() < 1e-12);
        // squares of the smoothed indicator lose mass near the edges
        assert!(r.refinement_trace.windows(2).all(|w| w[1] > w[0]), "{:?}", r.refinement_trace);
        let r = verify_smoothing_convergence(&one, (1.0, 1.0), &u, &u, &[0.4, 0.2, 0.1, 0.05]).unwrap();
        assert!(r.refinement_trace.iter().all(|x| (x - 1.0).abs() < 1e-9), "{:?}", r.refinement_trace);
        assert!(verify_smoothing_convergence(&one, (2.0, 2.0), &u, &u, &[0.1, 0.2]).is_err());
    }

    #[test]
    fn embedding_endpoint_uses_sup_of_reciprocal() {
        let f = TestFunction::standard_gaussian((1, 1)).sample(&gauss_grid(128));
        let w = WeightSpec::product_bessel(2.0, 2.0, (1, 1)).unwrap();
        let th = WeightSpec::bessel_power(2.0, (1, 0)).unwrap();
        let r = verify_fl_embedding(&f, &w, (1.0, 1.0), &th, &th).unwrap();
        let direct = fourier_lebesgue_norm(&f, &w, MixedExponents::uniform(1.0).unwrap()).unwrap().value;
        assert!((r.rhs_without_constant - direct).abs() < 1e-12 * direct);
        let r = verify_fl_embedding(&f, &w, (2.0, 2.0), &th, &th).unwrap();
        assert!(r.ratio < 1.0);
        let flat = WeightSpec::unit((1, 1));
        assert!(matches!(verify_fl_embedding(&f, &flat, (2.0, 2.0), &th, &th), Err(Error::Precondition(_))));
    }

    #[test]
    fn gaussian_fourier_matches_dft() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = TestFunction::random_mixture(&mut rng, &sq(), &sq());
        let grid = gauss_grid(128);
        let spec = g.sample(&grid).spectrum().unwrap();
        let mut err: f64 = 0.0;
        grid.for_each_point(Space::Frequency, |k, xi| err = err.max((spec[k] - g.fourier(xi).unwrap()).norm()));
        assert!(err < 1e-10, "{err}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn holder_never_exceeds_one(seed in 0u64..1_000_000, p1 in 1.0f64..3.0, p2 in 1.0f64..3.0, dq1 in 0.0f64..3.0, dq2 in 0.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let grid = TensorGrid::uniform(1, 1, -1.0, 2.0, 64).unwrap();
            let f = TestFunction::random_trig(&mut rng, 2, 4, 3, None).sample(&grid);
            let u = Domain::interval(0.0, 1.0).unwrap();
            let v = Domain::interval(-0.5, 0.7).unwrap();
            let r = verify_mixed_holder(&f, (p1, p2), (p1 + dq1, p2 + dq2), &u, &v).unwrap();
            prop_assert!(r.ratio <= 1.0 + 1e-6);
        }

        #[test]
        fn embedding_never_exceeds_one(seed in 0u64..1_000_000, t1 in 1.0f64..2.0, t2 in 1.0f64..2.0, n in 1.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = TestFunction::random_mixture(&mut rng, &sq(), &sq()).sample(&gauss_grid(64));
            let w = WeightSpec::product_bessel(n, n, (1, 1)).unwrap();
            let th = WeightSpec::bessel_power(n, (1, 0)).unwrap();
            let r = verify_fl_embedding(&f, &w, (t1, t2), &th, &th).unwrap();
            prop_assert!(r.ratio <= 1.0 + 1e-6);
        }
    }
}
