//! Explicit constants of the shallow-network approximation bound and their
//! behavior as the block dimensions grow.
//!
//! The bound constant factors as
//!
//! ```text
//! C = C_UV · c1^{−1/q1'} · c2^{−1/q2'} · C_σϑ · κ1^{1/p1} · κ2^{1/p2}
//! ```

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::activation::Activation;
use crate::error::{usage, Error, Result};
use crate::grid::{Space, TensorGrid};
use crate::special::{gamma, ln_gamma};
use crate::weights::{check_elliptic, make_omega_tilde, SamplePlan, WeightSpec};

/// `C(n, k)` exactly in 64 bits, or through `ln Γ` when the exact value overflows.
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c: u64 = 1;
    for j in 1..=k {
        // c·(n−k+j)/j stays integral at every step
        match c.checked_mul(n - k + j) {
            Some(v) => c = v / j,
            None => {
                let (n, k) = (n as f64, k as f64);
                return (ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)).exp();
            }
        }
    }
    c as f64
}

/// `κ = Σ_{|α| ≤ n, α ∈ ℕ^d} |τ|^{−p|α|} = Σ_k C(k+d−1, k)|τ|^{−pk}`.
pub fn kappa(n: usize, d: usize, p: f64, tau: f64) -> Result<f64> {
    if tau == 0.0 {
        return usage("κ needs τ ≠ 0");
    }
    if !(p >= 1.0) || d == 0 {
        return usage(format!("κ needs p ≥ 1 and d ≥ 1, got p = {p}, d = {d}"));
    }
    let r = tau.abs().powf(-p);
    let mut terms: Vec<f64> =
        (0..=n).map(|k| binomial((k + d - 1) as u64, k as u64) * r.powi(k as i32)).collect();
    terms.sort_by(|a, b| b.total_cmp(a));
    Ok(terms.iter().sum())
}

/// `exp((n + d − 1)|τ|^{−p})`, the counting bound on [`kappa`].
pub fn kappa_bound(n: usize, d: usize, p: f64, tau: f64) -> f64 {
    (((n + d) as f64 - 1.0) * tau.abs().powf(-p)).exp()
}

/// `‖⟨·⟩^{−(d+1)}‖_{L¹(ℝ^d)} = π^{(d+1)/2} / Γ((d+1)/2)`.
pub fn c_inverse(d: usize) -> f64 {
    let h = (d as f64 + 1.0) / 2.0;
    PI.powf(h) / gamma(h)
}

/// Largest weighted activation derivative and where it was found.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ActivationBound {
    pub value: f64,
    pub i1: u32,
    pub i2: u32,
    pub t: (f64, f64),
}

fn sup_on(sigma: &Activation, theta: &WeightSpec, m1: u32, m2: u32, grid: &TensorGrid) -> ActivationBound {
    let mut best = ActivationBound { value: 0.0, i1: 0, i2: 0, t: (0.0, 0.0) };
    grid.for_each_point(Space::Physical, |_, t| {
        let w = theta.value(&t[..1], &t[1..]);
        for i1 in 0..=m1 {
            for i2 in 0..=m2 {
                let v = w * sigma.partial(i1, i2, t[0], t[1]).abs();
                if v > best.value {
                    best = ActivationBound { value: v, i1, i2, t: (t[0], t[1]) };
                }
            }
        }
    });
    best
}

/// `C_σϑ = max_{i1 ≤ m1, i2 ≤ m2} sup_t ϑ(t)|∂^{i1}_{t1}∂^{i2}_{t2}σ(t)|` estimated on `grid`.
///
/// The supremum is recomputed on the window doubled twice; growth of more
/// than 1% at both doublings means `ϑ·∂σ` is unbounded.
pub fn c_sigma_vartheta(
    sigma: &Activation,
    theta: &WeightSpec,
    m1: u32,
    m2: u32,
    grid: &TensorGrid,
) -> Result<ActivationBound> {
    if grid.block_dims() != (1, 1) || theta.split() != (1, 1) {
        return usage("C_σϑ lives on the bias plane: grid and ϑ need split (1, 1)");
    }
    let b0 = sup_on(sigma, theta, m1, m2, grid);
    if b0.value == 0.0 {
        return Err(Error::Activation(format!("{sigma} vanishes on the sampling window")));
    }
    let wide = grid.widened();
    let b1 = sup_on(sigma, theta, m1, m2, &wide);
    let b2 = sup_on(sigma, theta, m1, m2, &wide.widened());
    if b1.value > 1.01 * b0.value && b2.value > 1.01 * b1.value {
        return Err(Error::Activation(format!(
            "{theta}·∂σ grows without bound for {sigma}: sup {:.3e} → {:.3e} → {:.3e} under window doubling",
            b0.value, b1.value, b2.value
        )));
    }
    Ok(b2)
}

/// Default sampling window for [`c_sigma_vartheta`]: `[−8, 8)²` with 512 points per axis.
pub fn default_activation_grid() -> TensorGrid {
    TensorGrid::uniform(1, 1, -8.0, 8.0, 512).expect("static grid")
}

/// `8 / |2π σ̂(τ)| · max{|R_U/τ1|, 1/(γ1−1)} · max{|R_V/τ2|, 1/(γ2−1)}`.
pub fn c_uv(r_u: f64, r_v: f64, tau: (f64, f64), gamma: (f64, f64), sigma_hat: Complex64) -> Result<f64> {
    if sigma_hat.norm() == 0.0 {
        return usage("σ̂(τ) = 0: the phase construction is undefined");
    }
    if !(gamma.0 > 1.0 && gamma.1 > 1.0) {
        return usage(format!("γ = {gamma:?} must exceed 1 in both components"));
    }
    if tau.0 == 0.0 || tau.1 == 0.0 {
        return usage("τ components must be nonzero");
    }
    let a = (r_u / tau.0).abs().max(1.0 / (gamma.0 - 1.0));
    let b = (r_v / tau.1).abs().max(1.0 / (gamma.1 - 1.0));
    Ok(8.0 / (2.0 * PI * sigma_hat.norm()) * a * b)
}

/// Constant `C` with `I(ξ)/|2πσ̂(τ)| ≤ C⟨ξ1⟩⟨ξ2⟩` for a bias weight `ϑ ≥ c⟨t1⟩^{γ1}⟨t2⟩^{γ2}`:
/// `8·2^{(γ1+γ2)/2} / (c |2π σ̂(τ)|) · max{|R_U/τ1|, 1/(γ1−1)} · max{|R_V/τ2|, 1/(γ2−1)}`.
///
/// Uses `⟨b⟩^γ ≥ 2^{−γ/2}(1+|b|)^γ` and `1 + |ξ| ≤ √2⟨ξ⟩`; [`c_uv`] without
/// these factors understates `I(0)` for `ϑ = ⟨t1⟩²⟨t2⟩²`.
pub fn c_uv_corrected(
    r_u: f64,
    r_v: f64,
    tau: (f64, f64),
    gamma: (f64, f64),
    sigma_hat: Complex64,
    c_theta: f64,
) -> Result<f64> {
    if !(c_theta > 0.0) {
        return usage(format!("ellipticity constant {c_theta} must be positive"));
    }
    let base = c_uv(r_u, r_v, tau, gamma, sigma_hat)?;
    Ok(base * 2f64.powf((gamma.0 + gamma.1) / 2.0) / c_theta)
}

/// `1/q'` = `1 − 1/q`.
fn inv_conj(q: f64) -> f64 {
    1.0 - 1.0 / q
}

/// Product formula for the total constant.
#[allow(clippy::too_many_arguments)]
pub fn combine(c_uv: f64, c1: f64, c2: f64, c_sv: f64, kappa1: f64, kappa2: f64, p: (f64, f64), q: (f64, f64)) -> f64 {
    c_uv * c1.powf(-inv_conj(q.0)) * c2.powf(-inv_conj(q.1)) * c_sv * kappa1.powf(1.0 / p.0) * kappa2.powf(1.0 / p.1)
}

/// Everything the constant depends on.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LedgerInputs {
    pub r_u: f64,
    pub r_v: f64,
    /// `None` selects τ by [`Activation::select_tau`].
    pub tau: Option<(f64, f64)>,
    /// Decay exponents of the reference weight `⟨t1⟩^{γ1}⟨t2⟩^{γ2}` for ϑ.
    pub gamma: (f64, f64),
    pub n: (usize, usize),
    /// Activation smoothness orders; must dominate `n`.
    pub m: (usize, usize),
    pub d: (usize, usize),
    pub p: (f64, f64),
    pub q: (f64, f64),
}

impl LedgerInputs {
    /// The experiment setting: one time and one space variable on `[−1, 1]²`,
    /// no time derivatives and one space derivative, `p = (2, 2)`, `q = (1, 1)`.
    pub fn two_block_experiment() -> Self {
        LedgerInputs {
            r_u: 1.0,
            r_v: 1.0,
            tau: None,
            gamma: (2.0, 2.0),
            n: (0, 1),
            m: (0, 1),
            d: (1, 1),
            p: (2.0, 2.0),
            q: (1.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ConstantLedger {
    pub c_uv: f64,
    pub c_sigma_vartheta: f64,
    pub c1: f64,
    pub c2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub c_total: f64,
    /// [`c_uv_corrected`] with the observed ellipticity constant.
    pub c_uv_corrected: f64,
    /// `c_total` with `c_uv_corrected` in place of `c_uv`.
    pub c_total_corrected: f64,
    /// Observed ellipticity constant `c` in `ϑ ≥ c⟨t1⟩^{γ1}⟨t2⟩^{γ2}`; not folded into `c_uv`.
    pub theta_ellipticity: f64,
    pub tau: (f64, f64),
    pub sigma_hat: (f64, f64),
    pub activation_argmax: ActivationBound,
    pub inputs: LedgerInputs,
}

impl ConstantLedger {
    /// `(name, value)` rows for tabular output.
    pub fn rows(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("C_UV", self.c_uv),
            ("C_sigma_vartheta", self.c_sigma_vartheta),
            ("c1", self.c1),
            ("c2", self.c2),
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("C_total", self.c_total),
            ("theta_ellipticity", self.theta_ellipticity),
            ("tau1", self.tau.0),
            ("tau2", self.tau.1),
            ("sigma_hat_abs", Complex64::new(self.sigma_hat.0, self.sigma_hat.1).norm()),
            ("C_UV_corrected", self.c_uv_corrected),
            ("C_total_corrected", self.c_total_corrected),
        ]
    }
}

/// Evaluates every factor of the constant for activation `σ` and bias weight `ϑ`.
pub fn total_constant(sigma: &Activation, theta: &WeightSpec, inputs: &LedgerInputs) -> Result<ConstantLedger> {
    let i = inputs;
    if i.m.0 < i.n.0 || i.m.1 < i.n.1 {
        return usage(format!("activation orders {:?} must dominate derivative orders {:?}", i.m, i.n));
    }
    for q in [i.q.0, i.q.1] {
        if !(1.0..=2.0).contains(&q) {
            return usage(format!("q = {q} outside [1, 2]"));
        }
    }
    for p in [i.p.0, i.p.1] {
        if !(2.0..f64::INFINITY).contains(&p) {
            return usage(format!("p = {p} outside [2, ∞)"));
        }
    }
    let (tau, sigma_hat) = match i.tau {
        Some(t) => {
            let s = sigma
                .fourier(t.0, t.1)
                .ok_or_else(|| Error::Activation(format!("{sigma} is not integrable; σ̂ is undefined")))?;
            (t, s)
        }
        None => sigma.select_tau()?,
    };
    let c_uv = c_uv(i.r_u, i.r_v, tau, i.gamma, sigma_hat)?;
    let sv = c_sigma_vartheta(sigma, theta, i.m.0 as u32, i.m.1 as u32, &default_activation_grid())?;
    let c1 = 1.0 / c_inverse(i.d.0);
    let c2 = 1.0 / c_inverse(i.d.1);
    let kappa1 = kappa(i.n.0, i.d.0, i.p.0, tau.0)?;
    let kappa2 = kappa(i.n.1, i.d.1, i.p.1, tau.1)?;
    let lower = WeightSpec::shifted_bessel_product(i.gamma.0, i.gamma.1)?;
    let ell = check_elliptic(theta, &lower, &SamplePlan::default())?;
    if !ell.holds {
        return Err(Error::Precondition(format!("{theta} is not elliptic with respect to {lower}")));
    }
    let c_total = combine(c_uv, c1, c2, sv.value, kappa1, kappa2, i.p, i.q);
    let c_uv_corrected = c_uv_corrected(i.r_u, i.r_v, tau, i.gamma, sigma_hat, 1.0 / ell.constant_c)?;
    let c_total_corrected = combine(c_uv_corrected, c1, c2, sv.value, kappa1, kappa2, i.p, i.q);
    let ledger = ConstantLedger {
        c_uv,
        c_sigma_vartheta: sv.value,
        c1,
        c2,
        kappa1,
        kappa2,
        c_total,
        c_uv_corrected,
        c_total_corrected,
        theta_ellipticity: 1.0 / ell.constant_c,
        tau,
        sigma_hat: (sigma_hat.re, sigma_hat.im),
        activation_argmax: sv,
        inputs: inputs.clone(),
    };
    if ledger.rows().iter().take(7).any(|(_, v)| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Precondition(format!("a constant is not positive and finite: {:?}", ledger.rows())));
    }
    Ok(ledger)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CurseRow {
    pub d: usize,
    pub n: usize,
    pub kappa: f64,
    pub c_inverse: f64,
    /// `(c^{−1/q'} κ^{1/p})^{q'} = c^{−1} κ^{q'/p}`.
    pub computed: f64,
    /// `(2π e^{g+1} / (d+1))^{(d+1)/2} (d+1)` with `g = 2(q'/p)(δ+1)|τ|^{−p}`.
    pub bound: f64,
    pub within_bound: bool,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CurseStudy {
    pub rows: Vec<CurseRow>,
    /// Smallest `d` from which the bound decreases for every larger dimension.
    pub decay_from: usize,
    /// `max_d` of the bound over all dimensions, attained at or before `decay_from`.
    pub uniform_bound: f64,
    pub all_within_bound: bool,
    /// `bound(d+2) < bound(d)` verified on `decay_from..decay_from+8`.
    pub geometric_decay: bool,
}

fn curse_bound(d: usize, g: f64) -> f64 {
    let x = (d as f64 + 1.0) / 2.0;
    let a = 2.0 * PI * (g + 1.0).exp();
    (x * (a / (2.0 * x)).ln() + (2.0 * x).ln()).exp()
}

/// Dimension sweep with `n = ⌊δ d⌋`.
pub fn curse_study(d_range: &[usize], delta: f64, p: f64, q: f64, tau: f64) -> Result<CurseStudy> {
    let orders: Vec<usize> = d_range.iter().map(|&d| (delta * d as f64).floor() as usize).collect();
    curse_study_with_orders(d_range, &orders, delta, p, q, tau)
}

/// Dimension sweep with explicit orders; each `n` must satisfy `n ≤ δ d`.
pub fn curse_study_with_orders(d_range: &[usize], orders: &[usize], delta: f64, p: f64, q: f64, tau: f64) -> Result<CurseStudy> {
    if orders.len() != d_range.len() || d_range.is_empty() {
        return usage("need one order per dimension");
    }
    if !(q > 1.0 && q <= 2.0) {
        return usage(format!("q = {q} must lie in (1, 2] for a finite conjugate exponent"));
    }
    if !(delta > 0.0) {
        return usage("δ must be positive");
    }
    let qc = q / (q - 1.0);
    let g = 2.0 * qc / p * (delta + 1.0) * tau.abs().powf(-p);
    let mut rows = Vec::with_capacity(d_range.len());
    for (&d, &n) in d_range.iter().zip(orders) {
        if n as f64 > delta * d as f64 + 1e-12 {
            return usage(format!("order n = {n} exceeds δ·d = {} at d = {d}", delta * d as f64));
        }
        let k = kappa(n, d, p, tau)?;
        let ci = c_inverse(d);
        let computed = ci * k.powf(qc / p);
        let bound = curse_bound(d, g);
        rows.push(CurseRow { d, n, kappa: k, c_inverse: ci, computed, bound, within_bound: computed <= bound });
    }
    // d/dx of x ln(A/(2x)) + ln(2x) is ln(A/(2x)) − 1 + 1/x, decreasing in x
    let a = 2.0 * PI * (g + 1.0).exp();
    let slope = |d: usize| {
        let x = (d as f64 + 1.0) / 2.0;
        (a / (2.0 * x)).ln() - 1.0 + 1.0 / x
    };
    let mut decay_from = 1;
    while slope(decay_from) >= 0.0 {
        decay_from += 1;
    }
    let uniform_bound = (1..=decay_from).map(|d| curse_bound(d, g)).fold(0.0, f64::max);
    let geometric_decay = (decay_from..decay_from + 8).all(|d| curse_bound(d + 2, g) < curse_bound(d, g));
    let all_within_bound = rows.iter().all(|r| r.within_bound);
    Ok(CurseStudy { rows, decay_from, uniform_bound, all_within_bound, geometric_decay })
}

/// Weights of the Hilbert-Sobolev corollary with their sampled domination check.
#[derive(Debug, Clone)]
pub struct HilbertPreset {
    /// `m_i = n_i + ⌊d_i/2⌋ + 2`.
    pub m: (usize, usize),
    pub omega_tilde: WeightSpec,
    pub dominating: WeightSpec,
    /// Largest observed `ω̃ / (⟨ξ1⟩^{m1}⟨ξ2⟩^{m2})`.
    pub max_ratio: f64,
    pub samples: usize,
}

/// Orders and weights for approximating Hilbert-Sobolev functions, with
/// `ω̃ ≤ ⟨ξ1⟩^{m1}⟨ξ2⟩^{m2}` checked at 10⁴ random frequencies.
pub fn hilbert_sobolev_preset(n: (usize, usize), d: (usize, usize)) -> Result<HilbertPreset> {
    let m = (n.0 + d.0 / 2 + 2, n.1 + d.1 / 2 + 2);
    let omega = WeightSpec::product_bessel(n.0 as f64, n.1 as f64, d)?;
    let omega_tilde = make_omega_tilde(&omega, 2.0, 2.0, d.0, d.1)?;
    let dominating = WeightSpec::product_bessel(m.0 as f64, m.1 as f64, d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x4b1d);
    let samples = 10_000;
    let mut max_ratio: f64 = 0.0;
    let draw = |dim: usize, rng: &mut ChaCha8Rng| -> Vec<f64> {
        let r = 10f64.powf(rng.random_range(-3.0..4.0));
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
        v.into_iter().map(|x| x * r / len).collect()
    };
    for _ in 0..samples {
        let x = draw(d.0, &mut rng);
        let y = draw(d.1, &mut rng);
        max_ratio = max_ratio.max(omega_tilde.value(&x, &y) / dominating.value(&x, &y));
    }
    if max_ratio > 1.0 + 1e-12 {
        return Err(Error::Precondition(format!("ω̃ exceeds ⟨ξ1⟩^{}⟨ξ2⟩^{} by a factor {max_ratio}", m.0, m.1)));
    }
    Ok(HilbertPreset { m, omega_tilde, dominating, max_ratio, samples })
}
