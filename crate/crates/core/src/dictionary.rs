//! Scaled ridge dictionaries on two variable blocks and bounds on the
//! variation norm they induce.
//!
//! A dictionary element is
//!
//! ```text
//! σ̃(x1, x2; ξ, b) = ϑ̃(ξ, b)/ω(ξ) · σ(ξ1·x1/τ1 + b1, ξ2·x2/τ2 + b2)
//! ```
//!
//! Fourier conventions: the grid spectrum is unitary, while the bounds
//! below are stated for `f(x) = ∫ e^{iξ·x} f̂(ξ) dξ`, i.e.
//! `f̂ = (2π)^{−d/2}·𝔉f`. The factor is applied explicitly.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;

use crate::activation::Activation;
use crate::constants::{c_inverse, c_sigma_vartheta, c_uv, c_uv_corrected, default_activation_grid, kappa};
use crate::domains::Domain;
use crate::error::{usage, Error, Result};
use crate::grid::{Axis, GridFunction, Space, TensorGrid};
use crate::norms::{bochner_sobolev_from_partials, fourier_lebesgue_norm, multi_indices, MixedExponents, SobolevOrder};
use crate::special::GaussRule;
use crate::weights::{check_elliptic, make_omega_tilde, make_theta_tilde, SamplePlan, ThetaTilde, WeightSpec};

/// `x ↦ (ξ1·x1/τ1 + b1, ξ2·x2/τ2 + b2)`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TwoBlockAffine {
    pub xi1: Vec<f64>,
    pub xi2: Vec<f64>,
    pub b1: f64,
    pub b2: f64,
    pub tau1: f64,
    pub tau2: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl TwoBlockAffine {
    pub fn new(xi1: Vec<f64>, xi2: Vec<f64>, b: (f64, f64), tau: (f64, f64)) -> Result<Self> {
        if tau.0 == 0.0 || tau.1 == 0.0 || !(tau.0.is_finite() && tau.1.is_finite()) {
            return usage(format!("τ = {tau:?} must have finite nonzero components"));
        }
        if xi1.iter().chain(&xi2).chain([&b.0, &b.1]).any(|v| !v.is_finite()) {
            return usage("frequencies and biases must be finite");
        }
        Ok(TwoBlockAffine { xi1, xi2, b1: b.0, b2: b.1, tau1: tau.0, tau2: tau.1 })
    }

    pub fn split(&self) -> (usize, usize) {
        (self.xi1.len(), self.xi2.len())
    }

    pub fn apply(&self, x1: &[f64], x2: &[f64]) -> Result<(f64, f64)> {
        if (x1.len(), x2.len()) != self.split() {
            return usage(format!(
                "point of shape ({}, {}) for an affine map on {:?}",
                x1.len(),
                x2.len(),
                self.split()
            ));
        }
        Ok((dot(&self.xi1, x1) / self.tau1 + self.b1, dot(&self.xi2, x2) / self.tau2 + self.b2))
    }
}

/// Scaled activation `scale · σ(T(x))`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DictionaryElement {
    pub affine: TwoBlockAffine,
    pub scale: f64,
    pub activation: Activation,
}

impl DictionaryElement {
    pub fn new(affine: TwoBlockAffine, scale: f64, activation: Activation) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return usage(format!("dictionary scale {scale} must be positive and finite"));
        }
        Ok(DictionaryElement { affine, scale, activation })
    }

    /// Element with scale `ϑ̃(ξ, b)/ω(ξ)`.
    pub fn scaled(affine: TwoBlockAffine, activation: Activation, theta: &ThetaTilde, omega: &WeightSpec) -> Result<Self> {
        if omega.split() != affine.split() {
            return usage(format!("ω is defined on {:?}, the affine map on {:?}", omega.split(), affine.split()));
        }
        if (theta.tau1, theta.tau2) != (affine.tau1, affine.tau2) {
            return usage("ϑ̃ and the affine map use different τ");
        }
        let a = &affine;
        let scale = theta.eval(&a.xi1, &a.xi2, a.b1, a.b2) / omega.value(&a.xi1, &a.xi2);
        DictionaryElement::new(affine, scale, activation)
    }

    /// `∂^α_{x1} ∂^β_{x2}` of the element.
    pub fn partial(&self, alpha: &[usize], beta: &[usize], x1: &[f64], x2: &[f64]) -> Result<f64> {
        let a = &self.affine;
        if (alpha.len(), beta.len()) != a.split() {
            return usage("derivative multi-indices do not match the block dimensions");
        }
        let (t1, t2) = a.apply(x1, x2)?;
        let mut factor = self.scale;
        for (&k, &xi) in alpha.iter().zip(&a.xi1) {
            factor *= (xi / a.tau1).powi(k as i32);
        }
        for (&k, &xi) in beta.iter().zip(&a.xi2) {
            factor *= (xi / a.tau2).powi(k as i32);
        }
        let (i1, i2) = (alpha.iter().sum::<usize>() as u32, beta.iter().sum::<usize>() as u32);
        Ok(factor * self.activation.partial(i1, i2, t1, t2))
    }

    pub fn csv_header(split: (usize, usize)) -> Vec<String> {
        let mut h: Vec<String> = (0..split.0).map(|i| format!("xi1_{i}")).collect();
        h.extend((0..split.1).map(|i| format!("xi2_{i}")));
        h.extend(["b1", "b2", "tau1", "tau2", "scale"].map(String::from));
        h
    }

    pub fn csv_record(&self) -> Vec<String> {
        let a = &self.affine;
        a.xi1
            .iter()
            .chain(&a.xi2)
            .chain([&a.b1, &a.b2, &a.tau1, &a.tau2, &self.scale])
            .map(|v| format!("{v:e}"))
            .collect()
    }
}

pub fn dict_element_eval(e: &DictionaryElement, x1: &[f64], x2: &[f64]) -> Result<f64> {
    let (t1, t2) = e.affine.apply(x1, x2)?;
    Ok(e.scale * e.activation.eval(t1, t2))
}

/// Element with frequencies of log-uniform magnitude in `[xi_min, xi_max]`,
/// random directions and biases uniform in `[−b_max, b_max]`.
pub fn random_element(
    rng: &mut impl Rng,
    theta: &ThetaTilde,
    omega: &WeightSpec,
    activation: Activation,
    xi_range: (f64, f64),
    b_max: f64,
) -> Result<DictionaryElement> {
    if !(0.0 < xi_range.0 && xi_range.0 <= xi_range.1) {
        return usage(format!("frequency range {xi_range:?} must satisfy 0 < min ≤ max"));
    }
    let (d1, d2) = omega.split();
    let mut draw = |d: usize| -> Vec<f64> {
        let r = (xi_range.0.ln() + rng.random::<f64>() * (xi_range.1 / xi_range.0).ln()).exp();
        let dir: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        dir.iter().map(|v| r * v / n).collect()
    };
    let xi1 = draw(d1);
    let xi2 = draw(d2);
    let b = (rng.random_range(-b_max..=b_max), rng.random_range(-b_max..=b_max));
    let affine = TwoBlockAffine::new(xi1, xi2, b, (theta.tau1, theta.tau2))?;
    DictionaryElement::scaled(affine, activation, theta, omega)
}

/// `ϑ̃` together with its decay exponents and observed ellipticity constant
/// `c` in `ϑ ≥ c⟨t1⟩^{γ1}⟨t2⟩^{γ2}`.
#[derive(Debug, Clone)]
pub struct BiasGeometry {
    pub theta: ThetaTilde,
    pub gamma: (f64, f64),
    pub c_theta: f64,
}

/// `∫_{ℝ²} 1/ϑ̃(ξ, b) db` with its error control and bounds.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BiasIntegral {
    pub value: f64,
    /// Quadrature half-widths beyond the flat region.
    pub window: (f64, f64),
    /// Bound on the mass outside the window.
    pub tail_bound: f64,
    /// `(4/c)·2^{(γ1+γ2)/2}·(a1 + 1/(γ1−1))·(a2 + 1/(γ2−1))`.
    pub bound: f64,
    /// `8c·(a1 + 1/(γ1−1))·(a2 + 1/(γ2−1))`; fails at `ξ = 0` for `⟨t1⟩²⟨t2⟩²`.
    pub stated_bound: f64,
}

const TAIL_REL: f64 = 1e-7;

/// Nodes and weights on `[0, a] ∪ a + [0, B]` with dyadic panels beyond `a`.
fn half_line_rule(rule: &GaussRule, a: f64, big: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut breaks = vec![0.0];
    if a > 0.0 {
        breaks.push(a);
    }
    let mut u = 1.0;
    breaks.push(a + 1.0);
    while u < big {
        u = (2.0 * u).min(big);
        breaks.push(a + u);
    }
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let (mid, half) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
        for (x, wt) in rule.points() {
            out.push((mid + half * x, half * wt));
        }
    }
    out
}

impl BiasGeometry {
    /// Checks `ϑ` against `⟨t1⟩^{γ1}⟨t2⟩^{γ2}` and records the constant.
    pub fn new(theta: &WeightSpec, r_u: f64, r_v: f64, tau: (f64, f64), gamma: (f64, f64)) -> Result<Self> {
        if !(gamma.0 > 1.0 && gamma.1 > 1.0) {
            return usage(format!("γ = {gamma:?}: the bias integral needs γ1, γ2 > 1"));
        }
        let tt = make_theta_tilde(theta, r_u, r_v, tau.0, tau.1)?;
        let lower = WeightSpec::shifted_bessel_product(gamma.0, gamma.1)?;
        let ell = check_elliptic(theta, &lower, &SamplePlan::default())?;
        if !ell.holds {
            return Err(Error::Precondition(format!("{theta} is not elliptic with respect to {lower}")));
        }
        Ok(BiasGeometry { theta: tt, gamma, c_theta: 1.0 / ell.constant_c })
    }

    fn flat_widths(&self, xi1: &[f64], xi2: &[f64]) -> (f64, f64) {
        self.theta.clamp_widths(xi1, xi2)
    }

    /// Half-width `B` with `∫_B^∞ u^{−γ} du` below `TAIL_REL·2^{−γ/2}`.
    fn tail_window(g: f64) -> Result<f64> {
        let big = (TAIL_REL * 2f64.powf(-g / 2.0) * (g - 1.0)).powf(-1.0 / (g - 1.0));
        if !big.is_finite() || big > 1e30 {
            return Err(Error::Quadrature(format!("γ = {g} decays too slowly for a finite bias window")));
        }
        Ok(big)
    }

    fn quadrant_sum(&self, xi1: &[f64], xi2: &[f64], rule: &GaussRule, big: (f64, f64)) -> f64 {
        let (a1, a2) = self.flat_widths(xi1, xi2);
        let n1 = half_line_rule(rule, a1, big.0);
        let n2 = half_line_rule(rule, a2, big.1);
        let mut s = 0.0;
        for &(b1, w1) in &n1 {
            let mut row = 0.0;
            for &(b2, w2) in &n2 {
                row += w2 / self.theta.eval(xi1, xi2, b1, b2);
            }
            s += w1 * row;
        }
        4.0 * s
    }

    fn bounds(&self, a: (f64, f64)) -> (f64, f64) {
        let (g1, g2) = self.gamma;
        let f = (a.0 + 1.0 / (g1 - 1.0)) * (a.1 + 1.0 / (g2 - 1.0));
        (4.0 / self.c_theta * 2f64.powf((g1 + g2) / 2.0) * f, 8.0 * self.c_theta * f)
    }

    /// Direct quadrature over the positive quadrant, multiplied by 4.
    pub fn integral(&self, xi1: &[f64], xi2: &[f64]) -> Result<BiasIntegral> {
        let big = (Self::tail_window(self.gamma.0)?, Self::tail_window(self.gamma.1)?);
        let coarse = self.quadrant_sum(xi1, xi2, &GaussRule::new(12), big);
        let value = self.quadrant_sum(xi1, xi2, &GaussRule::new(20), big);
        if !value.is_finite() || (value - coarse).abs() > 1e-8 * value {
            return Err(Error::Quadrature(format!(
                "bias integral unresolved at ξ = ({xi1:?}, {xi2:?}): {coarse:e} vs {value:e}"
            )));
        }
        let a = self.flat_widths(xi1, xi2);
        let (g1, g2) = self.gamma;
        let full = |g: f64, a: f64| a + 2f64.powf(g / 2.0) / (g - 1.0);
        let tail = |g: f64, b: f64| b.powf(1.0 - g) / (g - 1.0);
        let (t1, t2) = (tail(g1, big.0), tail(g2, big.1));
        let tail_bound = 4.0 / self.c_theta * (t1 * full(g2, a.1) + full(g1, a.0) * t2);
        if tail_bound > 1e-6 * value {
            return Err(Error::Quadrature(format!("bias tail {tail_bound:e} exceeds 1e-6 of {value:e}")));
        }
        let (bound, stated_bound) = self.bounds(a);
        Ok(BiasIntegral { value, window: big, tail_bound, bound, stated_bound })
    }

    /// Coefficients `(k0, k1, k2, k12)` with `I = 4(a1a2·k0 + a2·k1 + a1·k2 + k12)`.
    ///
    /// `k0 = 1/ϑ(0,0)`, `k1 = ∫₀^∞ 1/ϑ(u,0)`, `k2 = ∫₀^∞ 1/ϑ(0,u)`,
    /// `k12 = ∫∫_{[0,∞)²} 1/ϑ`.
    pub fn decomposition(&self) -> Result<[f64; 4]> {
        let th = &self.theta.theta;
        let rule = GaussRule::new(20);
        let line = |g: f64, f: &dyn Fn(f64) -> f64| -> Result<f64> {
            let big = Self::tail_window(g)?;
            Ok(half_line_rule(&rule, 0.0, big).iter().map(|&(u, w)| w * f(u)).sum())
        };
        let k0 = 1.0 / th.value(&[0.0], &[0.0]);
        let k1 = line(self.gamma.0, &|u| 1.0 / th.value(&[u], &[0.0]))?;
        let k2 = line(self.gamma.1, &|u| 1.0 / th.value(&[0.0], &[u]))?;
        let k12 = self.integral(&[0.0], &[0.0])?.value / 4.0;
        Ok([k0, k1, k2, k12])
    }
}

/// `∫ 1/ϑ̃(ξ, b) db` for `ϑ̃` built from `ϑ`, the domain radii and `τ`.
pub fn i_xi(
    xi1: &[f64],
    xi2: &[f64],
    theta: &WeightSpec,
    r_u: f64,
    r_v: f64,
    tau: (f64, f64),
    gamma: (f64, f64),
) -> Result<BiasIntegral> {
    BiasGeometry::new(theta, r_u, r_v, tau, gamma)?.integral(xi1, xi2)
}

/// Domain radii, `τ` and the decay of `ϑ`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct VariationGeometry {
    pub r_u: f64,
    pub r_v: f64,
    pub tau: (f64, f64),
    pub gamma: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TraceRow {
    pub xi1: f64,
    pub xi2: f64,
    pub omega: f64,
    pub fhat: f64,
    pub i_xi: f64,
    pub integrand: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct VariationEstimate {
    /// Smallest of the three bounds below.
    pub upper_bound: f64,
    /// `|2πσ̂(τ)|^{−1} ∫ ω|f̂| I(ξ) dξ`.
    pub integral_bound: f64,
    /// `C_UV ∫ ω⟨ξ1⟩⟨ξ2⟩|f̂| dξ`.
    pub direct_bound: f64,
    /// `C_UV c1^{−1/q1'} c2^{−1/q2'} ‖f‖_{FL^{q1,q2}(ω̃)}`.
    pub fl_bound: f64,
    pub c_uv: f64,
    pub c_theta: f64,
    /// Tail shell or FL norm not converged on the lattice.
    pub unconverged: bool,
    /// Samples of `ω|f̂|I` along the frequency lattice; `xi1`, `xi2` are block norms.
    pub integrand_trace: Vec<TraceRow>,
}

impl VariationEstimate {
    pub fn write_trace_csv(&self, w: impl Write) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for row in &self.integrand_trace {
            wr.serialize(row).map_err(|e| Error::Io(std::io::Error::other(e)))?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn block_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Upper bounds on the variation norm of `f` with respect to the dictionary
/// scaled by `ϑ̃/ω` with activation `σ`.
pub fn variation_upper_bound(
    f: &GridFunction,
    omega: &WeightSpec,
    theta: &WeightSpec,
    sigma: &Activation,
    q: (f64, f64),
    geo: VariationGeometry,
) -> Result<VariationEstimate> {
    let grid = f.grid();
    let (d1, d2) = grid.block_dims();
    if omega.split() != (d1, d2) {
        return usage(format!("ω is defined on {:?}, the grid on {:?}", omega.split(), (d1, d2)));
    }
    if !f.is_physical() {
        return usage("variation bound of a function that is not in physical space");
    }
    let sigma_hat: Complex64 = sigma
        .fourier(geo.tau.0, geo.tau.1)
        .ok_or_else(|| Error::Activation(format!("{sigma} is not integrable; σ̂ is undefined")))?;
    let bias = BiasGeometry::new(theta, geo.r_u, geo.r_v, geo.tau, geo.gamma)?;
    let [k0, k1, k2, k12] = bias.decomposition()?;
    let c_uv = c_uv_corrected(geo.r_u, geo.r_v, geo.tau, geo.gamma, sigma_hat, bias.c_theta)?;
    let norm = (2.0 * PI).powf(-((d1 + d2) as f64) / 2.0);
    let spec = f.spectrum()?;
    let cell = grid.dual_cell_volume();
    let cutoff: Vec<f64> = grid.axes().iter().map(|a| a.nyquist()).collect();
    let mut trace = Vec::with_capacity(grid.len());
    let (mut integral, mut shell, mut direct) = (0.0, 0.0, 0.0);
    grid.for_each_point(Space::Frequency, |flat, xi| {
        let (x1, x2) = xi.split_at(d1);
        let (a1, a2) = bias.flat_widths(x1, x2);
        let i = 4.0 * (a1 * a2 * k0 + a2 * k1 + a1 * k2 + k12);
        let w = omega.value(x1, x2);
        let fh = norm * spec[flat].norm();
        let g = w * fh * i;
        integral += g * cell;
        direct += w * fh * bracket(x1) * bracket(x2) * cell;
        if xi.iter().zip(&cutoff).any(|(x, k)| x.abs() > 0.9 * k) {
            shell += g * cell;
        }
        trace.push(TraceRow { xi1: block_norm(x1), xi2: block_norm(x2), omega: w, fhat: fh, i_xi: i, integrand: g });
    });
    let integral_bound = integral / (2.0 * PI * sigma_hat.norm());
    let direct_bound = c_uv * direct;
    let omega_tilde = make_omega_tilde(omega, q.0, q.1, d1, d2)?;
    let fl = fourier_lebesgue_norm(f, &omega_tilde, MixedExponents::new(q.0, q.1)?)?;
    let c_factor = c_inverse(d1).powf(1.0 - 1.0 / q.0) * c_inverse(d2).powf(1.0 - 1.0 / q.1);
    let fl_bound = c_uv * c_factor * norm * fl.value;
    Ok(VariationEstimate {
        upper_bound: integral_bound.min(direct_bound).min(fl_bound),
        integral_bound,
        direct_bound,
        fl_bound,
        c_uv,
        c_theta: bias.c_theta,
        unconverged: fl.unconverged || shell > 0.05 * integral,
        integrand_trace: trace,
    })
}

fn bracket(x: &[f64]) -> f64 {
    (1.0 + x.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// `C_UV` as stated with the bare factor 8, kept for comparison with
/// [`c_uv_corrected`].
pub fn c_uv_as_stated(geo: VariationGeometry, sigma: &Activation) -> Result<f64> {
    let s = sigma
        .fourier(geo.tau.0, geo.tau.1)
        .ok_or_else(|| Error::Activation(format!("{sigma} is not integrable; σ̂ is undefined")))?;
    c_uv(geo.r_u, geo.r_v, geo.tau, geo.gamma, s)
}

/// `C_σϑ·|U|^{1/p1}·|V|^{1/p2}·κ1^{1/p1}·κ2^{1/p2}`: a bound on the
/// `W^{n2,p2}_{n1,p1}(U, V)` norm of every dictionary element scaled with
/// `ω ≥ ⟨ξ1⟩^{n1}⟨ξ2⟩^{n2}` and a `ϑ` nondecreasing in `|t1|`, `|t2|`.
pub fn dict_sobolev_bound(
    sigma: &Activation,
    theta: &WeightSpec,
    o: SobolevOrder,
    e: MixedExponents,
    u: &Domain,
    v: &Domain,
    tau: (f64, f64),
) -> Result<f64> {
    let sv = c_sigma_vartheta(sigma, theta, o.n1 as u32, o.n2 as u32, &default_activation_grid())?;
    let k1 = kappa(o.n1, u.dim(), e.p1, tau.0)?;
    let k2 = kappa(o.n2, v.dim(), e.p2, tau.1)?;
    Ok(sv.value * (u.volume() * k1).powf(1.0 / e.p1) * (v.volume() * k2).powf(1.0 / e.p2))
}

/// Tensor grid covering the bounding boxes of `U` and `V` with a quarter-width margin.
pub fn covering_grid(u: &Domain, v: &Domain, points: usize) -> Result<TensorGrid> {
    let mut axes = Vec::new();
    for dom in [u, v] {
        let bb = dom.bounding_box();
        for (lo, hi) in bb.lo.iter().zip(&bb.hi) {
            let m = (hi - lo) / 4.0;
            axes.push(Axis::new(lo - m, hi + m, points)?);
        }
    }
    TensorGrid::new(axes, (u.dim(), v.dim()))
}

/// Bochner-Sobolev norm of a dictionary element with exact derivatives.
pub fn element_sobolev_norm(
    el: &DictionaryElement,
    grid: &TensorGrid,
    o: SobolevOrder,
    e: MixedExponents,
    u: &Domain,
    v: &Domain,
) -> Result<f64> {
    let d1 = grid.block_dims().0;
    bochner_sobolev_from_partials(grid, o, e, Some(u), Some(v), |orders| {
        let (alpha, beta) = orders.split_at(d1);
        let mut out = vec![0.0; grid.len()];
        let mut err = None;
        grid.for_each_point(Space::Physical, |flat, x| match el.partial(alpha, beta, &x[..d1], &x[d1..]) {
            Ok(val) => out[flat] = val.abs(),
            Err(e) => err = Some(e),
        });
        match err {
            Some(e) => Err(e),
            None => Ok(out),
        }
    })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DictSobolevCheck {
    pub bound: f64,
    pub empirical_sup: f64,
    pub worst: Option<DictionaryElement>,
    pub samples: usize,
}

/// [`dict_sobolev_bound`] together with the largest norm over `samples`
/// random elements scaled with `ω = ⟨ξ1⟩^{n1}⟨ξ2⟩^{n2}`.
#[allow(clippy::too_many_arguments)]
pub fn dict_sobolev_check(
    sigma: &Activation,
    theta: &WeightSpec,
    o: SobolevOrder,
    e: MixedExponents,
    u: &Domain,
    v: &Domain,
    tau: (f64, f64),
    samples: usize,
    rng: &mut impl Rng,
) -> Result<DictSobolevCheck> {
    let bound = dict_sobolev_bound(sigma, theta, o, e, u, v, tau)?;
    let omega = WeightSpec::product_bessel(o.n1 as f64, o.n2 as f64, (u.dim(), v.dim()))?;
    let tt = make_theta_tilde(theta, u.radius(), v.radius(), tau.0, tau.1)?;
    let points = if u.dim() + v.dim() > 2 { 16 } else { 64 };
    let grid = covering_grid(u, v, points)?;
    let mut best = (0.0, None);
    for _ in 0..samples {
        let el = random_element(rng, &tt, &omega, *sigma, (1e-2, 20.0), 6.0)?;
        let n = element_sobolev_norm(&el, &grid, o, e, u, v)?;
        if !n.is_finite() {
            return Err(Error::Resolution(format!("dictionary element has a non-finite norm: {el:?}")));
        }
        if n > best.0 {
            best = (n, Some(el));
        }
    }
    Ok(DictSobolevCheck { bound, empirical_sup: best.0, worst: best.1, samples })
}

/// Errors of relaxed greedy `N`-term approximation of a finite dictionary sum.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MaureyStudy {
    pub n_terms: Vec<usize>,
    pub errors: Vec<f64>,
    /// Least-squares slope of `log error` against `log N`.
    pub slope: f64,
    /// `ℓ¹` mass `M` of the coefficients.
    pub mass: f64,
    /// `max_k ‖g_k‖`.
    pub dictionary_bound: f64,
    /// `max_N error·√N / (M·max_k‖g_k‖)`.
    pub max_normalized: f64,
}

pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Runs the relaxed greedy iteration `f_n = (1 − 1/n) f_{n−1} + (1/n)·M·s·g_k`
/// over the atoms `±g_k` and records `‖f − f_N‖_W` at each requested `N`.
#[allow(clippy::too_many_arguments)]
pub fn maurey_study(
    elements: &[DictionaryElement],
    coefficients: &[f64],
    grid: &TensorGrid,
    o: SobolevOrder,
    e: MixedExponents,
    u: &Domain,
    v: &Domain,
    n_terms: &[usize],
) -> Result<MaureyStudy> {
    if elements.is_empty() || elements.len() != coefficients.len() {
        return usage("need one coefficient per dictionary element");
    }
    if n_terms.len() < 2 || n_terms.windows(2).any(|w| w[0] >= w[1]) || n_terms[0] == 0 {
        return usage("term counts must be positive and strictly increasing");
    }
    let (d1, d2) = grid.block_dims();
    let orders: Vec<Vec<usize>> = multi_indices(d1, o.n1)
        .iter()
        .flat_map(|a| multi_indices(d2, o.n2).into_iter().map(move |b| a.iter().chain(&b).copied().collect()))
        .collect();
    let sample = |el: &DictionaryElement| -> Result<Vec<Vec<f64>>> {
        let mut parts = Vec::with_capacity(orders.len());
        for ord in &orders {
            let (alpha, beta) = ord.split_at(d1);
            let mut out = vec![0.0; grid.len()];
            for (flat, slot) in out.iter_mut().enumerate() {
                let x = grid.coords(flat);
                *slot = el.partial(alpha, beta, &x[..d1], &x[d1..])?;
            }
            parts.push(out);
        }
        Ok(parts)
    };
    let norm = |parts: &[Vec<f64>]| -> Result<f64> {
        bochner_sobolev_from_partials(grid, o, e, Some(u), Some(v), |ord| {
            let k = orders.iter().position(|x| x == ord).expect("enumerated order");
            Ok(parts[k].iter().map(|x| x.abs()).collect())
        })
    };
    let atoms: Vec<Vec<Vec<f64>>> = elements.iter().map(sample).collect::<Result<_>>()?;
    let mass: f64 = coefficients.iter().map(|c| c.abs()).sum();
    let mut target = vec![vec![0.0; grid.len()]; orders.len()];
    for (a, c) in atoms.iter().zip(coefficients) {
        for (t, p) in target.iter_mut().zip(a) {
            for (ti, pi) in t.iter_mut().zip(p) {
                *ti += c * pi;
            }
        }
    }
    let dictionary_bound = atoms.iter().map(|a| norm(a)).collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max);
    let mut approx = vec![vec![0.0; grid.len()]; orders.len()];
    let mut errors = Vec::new();
    let last = *n_terms.last().expect("nonempty");
    for n in 1..=last {
        let lam = 1.0 / n as f64;
        let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
        for a in &atoms {
            for s in [1.0, -1.0] {
                let cand: Vec<Vec<f64>> = approx
                    .iter()
                    .zip(a)
                    .map(|(f, g)| f.iter().zip(g).map(|(fi, gi)| (1.0 - lam) * fi + lam * mass * s * gi).collect())
                    .collect();
                let resid: Vec<Vec<f64>> =
                    target.iter().zip(&cand).map(|(t, c)| t.iter().zip(c).map(|(x, y)| x - y).collect()).collect();
                let err = norm(&resid)?;
                if best.as_ref().is_none_or(|(b, _)| err < *b) {
                    best = Some((err, cand));
                }
            }
        }
        let (err, cand) = best.expect("at least one atom");
        approx = cand;
        if n_terms.contains(&n) {
            errors.push(err);
        }
    }
    let ns: Vec<f64> = n_terms.iter().map(|&n| n as f64).collect();
    let slope = log_log_slope(&ns, &errors);
    let max_normalized = errors
        .iter()
        .zip(&ns)
        .map(|(err, n)| err * n.sqrt() / (mass * dictionary_bound))
        .fold(0.0, f64::max);
    Ok(MaureyStudy { n_terms: n_terms.to_vec(), errors, slope, mass, dictionary_bound, max_normalized })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inclusion::TestFunction;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn theta22() -> WeightSpec {
        WeightSpec::shifted_bessel_product(2.0, 2.0).unwrap()
    }

    #[test]
    fn zero_frequency_element_is_constant() {
        let a = TwoBlockAffine::new(vec![0.0], vec![0.0], (0.3, -0.2), (1.0, 1.0)).unwrap();
        let e = DictionaryElement::new(a, 2.0, Activation::Gaussian).unwrap();
        let c = 2.0 * (-(0.09f64 + 0.04)).exp();
        for x in [-0.9, 0.0, 0.4] {
            assert!((dict_element_eval(&e, &[x], &[-x]).unwrap() - c).abs() < 1e-15);
        }
        assert!(dict_element_eval(&e, &[0.0, 1.0], &[0.0]).is_err());
    }

    #[test]
    fn ramp_element_matches_unit() {
        let a = TwoBlockAffine::new(vec![1.5], vec![-0.5], (0.2, 0.7), (0.5, 0.25)).unwrap();
        let e = DictionaryElement::new(a, 1.0, Activation::RampProduct { m1: 1, m2: 2 }).unwrap();
        let (t, x): (f64, f64) = (0.3, -0.6);
        let z1 = 1.5 * t / 0.5 + 0.2;
        let z2 = -0.5 * x / 0.25 + 0.7;
        let unit = z1.max(0.0) * z2.max(0.0).powi(2);
        assert!((dict_element_eval(&e, &[t], &[x]).unwrap() - unit).abs() < 1e-14);
    }

    #[test]
    fn clamp_inequality_on_unit_square() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = 1.0;
        for _ in 0..10_000 {
            let xi1 = rng.random_range(-5.0..5.0);
            let xi2 = rng.random_range(-5.0..5.0);
            let b = (rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0));
            let tau = (rng.random_range(0.2..2.0), -rng.random_range(0.2..2.0));
            let a = TwoBlockAffine::new(vec![xi1], vec![xi2], b, tau).unwrap();
            let x = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let (t1, t2) = a.apply(&[x.0], &[x.1]).unwrap();
            assert!(t1.abs() >= (b.0.abs() - r * (xi1 / tau.0).abs()).max(0.0) - 1e-12);
            assert!(t2.abs() >= (b.1.abs() - r * (xi2 / tau.1).abs()).max(0.0) - 1e-12);
        }
    }

    #[test]
    fn element_derivatives_match_differences() {
        let a = TwoBlockAffine::new(vec![0.8], vec![1.3], (0.1, -0.4), (0.5, 0.5)).unwrap();
        let e = DictionaryElement::new(a, 0.7, Activation::Gaussian).unwrap();
        let h = 1e-5;
        let (x, y) = (0.2, -0.3);
        let fd = (dict_element_eval(&e, &[x], &[y + h]).unwrap() - dict_element_eval(&e, &[x], &[y - h]).unwrap()) / (2.0 * h);
        assert!((e.partial(&[0], &[1], &[x], &[y]).unwrap() - fd).abs() < 1e-8);
    }

    #[test]
    fn bias_integral_at_zero_frequency() {
        let g = BiasGeometry::new(&theta22(), 1.0, 1.0, (1.0, 1.0), (2.0, 2.0)).unwrap();
        let r = g.integral(&[0.0], &[0.0]).unwrap();
        assert!((r.value - PI * PI).abs() < 1e-6 * PI * PI, "{}", r.value);
        assert!(r.value <= r.bound);
        assert!(r.value > r.stated_bound);
    }

    #[test]
    fn bias_integral_routes_agree_and_grow() {
        let g = BiasGeometry::new(&theta22(), 1.0, 1.5, (0.5, 2.0), (2.0, 2.0)).unwrap();
        let k = g.decomposition().unwrap();
        let mut prev = 0.0;
        for xi in [0.0, 0.3, 1.0, 4.0] {
            let r = g.integral(&[xi], &[-0.5 * xi]).unwrap();
            let (a1, a2) = g.flat_widths(&[xi], &[-0.5 * xi]);
            let fast = 4.0 * (a1 * a2 * k[0] + a2 * k[1] + a1 * k[2] + k[3]);
            assert!((r.value - fast).abs() < 1e-7 * r.value);
            assert!(r.value >= prev);
            assert!(r.bound > r.value);
            prev = r.value;
        }
    }

    #[test]
    fn slow_bias_decay_is_rejected() {
        assert!(i_xi(&[0.0], &[0.0], &theta22(), 1.0, 1.0, (1.0, 1.0), (1.0, 2.0)).is_err());
        let slow = WeightSpec::shifted_bessel_product(1.05, 2.0).unwrap();
        assert!(matches!(i_xi(&[0.0], &[0.0], &slow, 1.0, 1.0, (1.0, 1.0), (1.05, 2.0)), Err(Error::Quadrature(_))));
    }

    fn gaussian_geo() -> (GridFunction, VariationGeometry) {
        let grid = TensorGrid::uniform(1, 1, -8.0, 8.0, 128).unwrap();
        let f = TestFunction::standard_gaussian((1, 1)).sample(&grid);
        (f, VariationGeometry { r_u: 1.0, r_v: 1.0, tau: (0.25, 0.25), gamma: (2.0, 2.0) })
    }

    #[test]
    fn variation_bound_ordering_and_q1_coincidence() {
        let (f, geo) = gaussian_geo();
        let omega = WeightSpec::unit((1, 1));
        let est = variation_upper_bound(&f, &omega, &theta22(), &Activation::Gaussian, (1.0, 1.0), geo).unwrap();
        assert!(!est.unconverged);
        assert!((est.direct_bound - est.fl_bound).abs() < 1e-9 * est.fl_bound);
        assert!(est.integral_bound <= est.direct_bound);
        assert_eq!(est.upper_bound, est.integral_bound);
        let est2 = variation_upper_bound(&f, &omega, &theta22(), &Activation::Gaussian, (2.0, 1.5), geo).unwrap();
        assert!(est2.direct_bound <= est2.fl_bound * (1.0 + 1e-9));
    }

    #[test]
    fn variation_bound_of_zero_and_window_doubling() {
        let (f, geo) = gaussian_geo();
        let omega = WeightSpec::unit((1, 1));
        let zero = GridFunction::zeros(f.grid().clone());
        let z = variation_upper_bound(&zero, &omega, &theta22(), &Activation::Gaussian, (1.0, 1.0), geo).unwrap();
        assert_eq!(z.upper_bound, 0.0);
        let ub = |g: &TensorGrid| {
            let h = TestFunction::standard_gaussian((1, 1)).sample(g);
            variation_upper_bound(&h, &omega, &theta22(), &Activation::Gaussian, (1.0, 1.0), geo).unwrap().upper_bound
        };
        let g0 = f.grid().clone();
        let (a, b, c) = (ub(&g0), ub(&g0.widened()), ub(&g0.widened().widened()));
        assert!(a.is_finite() && a > 0.0);
        // the frequency lattice refines with the window; the kink of I at ξ = 0 gives second-order convergence
        assert!((a - b).abs() < 0.02 * a, "{a} vs {b}");
        assert!((b - c).abs() < 0.3 * (a - b).abs(), "{a} {b} {c}");
    }

    #[test]
    fn variation_bound_is_subadditive() {
        let (f, geo) = gaussian_geo();
        let omega = WeightSpec::product_bessel(0.0, 1.0, (1, 1)).unwrap();
        let g = GridFunction::from_real_fn(f.grid().clone(), |z| (-(z[0] - 1.0).powi(2) - 2.0 * z[1] * z[1]).exp());
        let s = f.combine(1.0, &g, -1.0).unwrap();
        let ub = |h: &GridFunction| {
            variation_upper_bound(h, &omega, &theta22(), &Activation::Gaussian, (1.0, 1.0), geo).unwrap().upper_bound
        };
        assert!(ub(&s) <= (ub(&f) + ub(&g)) * (1.0 + 1e-9));
    }

    #[test]
    fn dictionary_sobolev_bound_examples() {
        let theta = theta22();
        let e = MixedExponents::new(2.0, 2.0).unwrap();
        let u = Domain::interval(-1.0, 1.0).unwrap();
        let v = Domain::interval(-1.0, 1.0).unwrap();
        let b00 = dict_sobolev_bound(&Activation::Gaussian, &theta, SobolevOrder::new(0, 0), e, &u, &v, (0.5, 0.5)).unwrap();
        let sv = c_sigma_vartheta(&Activation::Gaussian, &theta, 0, 0, &default_activation_grid()).unwrap();
        assert!((b00 - sv.value * 2.0).abs() < 1e-12);
        let u2 = Domain::interval(-2.0, 2.0).unwrap();
        let b2 = dict_sobolev_bound(&Activation::Gaussian, &theta, SobolevOrder::new(0, 0), e, &u2, &v, (0.5, 0.5)).unwrap();
        assert!((b2 / b00 - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn random_elements_respect_sobolev_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = Domain::interval(-1.0, 1.0).unwrap();
        let v = Domain::interval(-1.0, 1.0).unwrap();
        let e = MixedExponents::new(2.0, 2.0).unwrap();
        let chk = dict_sobolev_check(&Activation::Gaussian, &theta22(), SobolevOrder::new(0, 1), e, &u, &v, (0.25, 0.25), 100, &mut rng)
            .unwrap();
        assert!(chk.empirical_sup > 0.0);
        assert!(chk.empirical_sup <= chk.bound, "{} > {}", chk.empirical_sup, chk.bound);
    }

    #[test]
    fn greedy_error_decays_like_inverse_sqrt() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = Domain::interval(-1.0, 1.0).unwrap();
        let v = Domain::interval(-1.0, 1.0).unwrap();
        let tt = make_theta_tilde(&theta22(), 1.0, 1.0, 0.5, 0.5).unwrap();
        let omega = WeightSpec::product_bessel(0.0, 1.0, (1, 1)).unwrap();
        let els: Vec<_> =
            (0..24).map(|_| random_element(&mut rng, &tt, &omega, Activation::Gaussian, (0.5, 6.0), 2.0).unwrap()).collect();
        let coefs: Vec<f64> = (0..24).map(|_| rng.random_range(-1.0..1.0)).collect();
        let grid = covering_grid(&u, &v, 32).unwrap();
        let e = MixedExponents::new(2.0, 2.0).unwrap();
        let st = maurey_study(&els, &coefs, &grid, SobolevOrder::new(0, 1), e, &u, &v, &[2, 4, 8, 16, 32]).unwrap();
        assert!(st.slope <= -0.3, "slope {} errors {:?}", st.slope, st.errors);
        assert!(st.max_normalized <= 4.0);
    }

    #[test]
    fn element_rows_round_trip_width() {
        let a = TwoBlockAffine::new(vec![1.0, 2.0], vec![3.0], (0.0, 1.0), (1.0, 1.0)).unwrap();
        let e = DictionaryElement::new(a, 1.0, Activation::Gaussian).unwrap();
        assert_eq!(e.csv_record().len(), DictionaryElement::csv_header((2, 1)).len());
        assert!(DictionaryElement::new(e.affine.clone(), 0.0, Activation::Gaussian).is_err());
    }
}
