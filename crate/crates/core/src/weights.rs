//! Weight functions on frequency and bias variables.
//!
//! A [`WeightSpec`] is a symbolic weight `ω(x, y)` on a two-block space
//! `ℝ^{d1} × ℝ^{d2}`. Besides evaluation it supports sampled checks of the two
//! structural conditions used throughout the crate:
//!
//! * ellipticity, `ϑ ≤ c·ω`, via [`check_elliptic`];
//! * moderateness, `ω(z1 + z2) ≤ C·ω(z1)·v(z2)`, via [`check_moderate`].
//!
//! Both checks are statistical: they scan radial ladders and random points
//! and call the condition satisfied when the observed supremum is finite and
//! does not grow when the sampled range is extended sixteen-fold.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{usage, Error, Result};
use crate::grid::GridFunction;

/// `⟨x⟩ = (1 + |x|²)^{1/2}` given `|x|²`.
#[inline]
pub fn bracket_sq(r2: f64) -> f64 {
    (1.0 + r2).sqrt()
}

#[inline]
pub fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Weight families.
///
/// The first five are the user-facing families. `Modulus` is the
/// homogeneous weight `|(x, y)|^s` of the classical first-moment condition; it
/// vanishes at the origin, so it only defines a seminorm. `Modulated` and
/// `Tensor` are produced by [`make_omega_tilde`] and [`WeightSpec::tensor`].
#[derive(Debug, Clone)]
pub enum WeightFamily {
    BesselPower { s: f64 },
    ProductBessel { n1: f64, n2: f64 },
    ExpPower { r: f64, s: f64 },
    ShiftedBesselProduct { gamma1: f64, gamma2: f64 },
    CustomTable(Arc<GridFunction>),
    Modulus { s: f64 },
    Modulated { base: Box<WeightSpec>, e1: f64, e2: f64 },
    Tensor { first: Box<WeightSpec>, second: Box<WeightSpec> },
}

#[derive(Debug, Clone)]
pub struct WeightSpec {
    family: WeightFamily,
    split: (usize, usize),
}

impl WeightSpec {
    pub fn new(family: WeightFamily, split: (usize, usize)) -> Result<Self> {
        match &family {
            WeightFamily::ExpPower { r, s } if !(*r > 0.0 && *s > 0.0) => {
                return Err(Error::Weight(format!("exp_power needs r > 0 and s > 0, got ({r}, {s})")));
            }
            WeightFamily::ShiftedBesselProduct { .. } if split != (1, 1) => {
                return Err(Error::Weight("shifted_bessel_product lives on the bias plane (1, 1)".into()));
            }
            WeightFamily::CustomTable(t) => {
                if t.grid().block_dims() != split {
                    return Err(Error::Weight("custom table grid does not match the block split".into()));
                }
                if t.values().iter().any(|v| !(v.re > 0.0 && v.re.is_finite())) {
                    return Err(Error::Weight("custom table holds a nonpositive or non-finite value".into()));
                }
            }
            WeightFamily::Tensor { first, second } => {
                if first.split.1 != 0 || second.split.1 != 0 || (first.split.0, second.split.0) != split {
                    return Err(Error::Weight("tensor factors must be single-block weights matching the split".into()));
                }
            }
            WeightFamily::Modulated { base, .. } if base.split != split => {
                return Err(Error::Weight("modulated base weight has a different split".into()));
            }
            _ => {}
        }
        let params = match &family {
            WeightFamily::BesselPower { s } | WeightFamily::Modulus { s } => *s,
            WeightFamily::ProductBessel { n1, n2 } => n1 + n2,
            WeightFamily::ExpPower { r, s } => r + s,
            WeightFamily::ShiftedBesselProduct { gamma1, gamma2 } => gamma1 + gamma2,
            WeightFamily::Modulated { e1, e2, .. } => e1 + e2,
            _ => 0.0,
        };
        if !params.is_finite() {
            return Err(Error::Weight("weight parameters must be finite".into()));
        }
        Ok(WeightSpec { family, split })
    }

    pub fn bessel_power(s: f64, split: (usize, usize)) -> Result<Self> {
        WeightSpec::new(WeightFamily::BesselPower { s }, split)
    }

    pub fn product_bessel(n1: f64, n2: f64, split: (usize, usize)) -> Result<Self> {
        WeightSpec::new(WeightFamily::ProductBessel { n1, n2 }, split)
    }

    /// `ω ≡ 1`.
    pub fn unit(split: (usize, usize)) -> Self {
        WeightSpec { family: WeightFamily::ProductBessel { n1: 0.0, n2: 0.0 }, split }
    }

    pub fn exp_power(r: f64, s: f64, split: (usize, usize)) -> Result<Self> {
        WeightSpec::new(WeightFamily::ExpPower { r, s }, split)
    }

    pub fn shifted_bessel_product(gamma1: f64, gamma2: f64) -> Result<Self> {
        WeightSpec::new(WeightFamily::ShiftedBesselProduct { gamma1, gamma2 }, (1, 1))
    }

    pub fn custom_table(table: GridFunction) -> Result<Self> {
        let split = table.grid().block_dims();
        WeightSpec::new(WeightFamily::CustomTable(Arc::new(table)), split)
    }

    pub fn modulus(s: f64, split: (usize, usize)) -> Result<Self> {
        WeightSpec::new(WeightFamily::Modulus { s }, split)
    }

    /// `ϑ1 ⊗ ϑ2` for single-block weights `ϑ1` on `ℝ^{d1}` and `ϑ2` on `ℝ^{d2}`.
    pub fn tensor(first: WeightSpec, second: WeightSpec) -> Result<Self> {
        let split = (first.split.0, second.split.0);
        WeightSpec::new(WeightFamily::Tensor { first: Box::new(first), second: Box::new(second) }, split)
    }

    pub fn family(&self) -> &WeightFamily {
        &self.family
    }

    pub fn split(&self) -> (usize, usize) {
        self.split
    }

    /// Raw value without positivity checks.
    pub fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        match &self.family {
            WeightFamily::BesselPower { s } => (1.0 + norm_sq(x) + norm_sq(y)).powf(0.5 * s),
            WeightFamily::ProductBessel { n1, n2 } => {
                bracket_pow(norm_sq(x), *n1) * bracket_pow(norm_sq(y), *n2)
            }
            WeightFamily::ExpPower { r, s } => {
                (r * (norm_sq(x).powf(0.5 * s) + norm_sq(y).powf(0.5 * s))).exp()
            }
            WeightFamily::ShiftedBesselProduct { gamma1, gamma2 } => {
                bracket_pow(norm_sq(x), *gamma1) * bracket_pow(norm_sq(y), *gamma2)
            }
            WeightFamily::CustomTable(t) => table_lookup(t, x, y),
            WeightFamily::Modulus { s } => (norm_sq(x) + norm_sq(y)).powf(0.5 * s),
            WeightFamily::Modulated { base, e1, e2 } => {
                base.value(x, y) * bracket_pow(norm_sq(x), *e1) * bracket_pow(norm_sq(y), *e2)
            }
            WeightFamily::Tensor { first, second } => first.value(x, &[]) * second.value(y, &[]),
        }
    }

    /// Checked evaluation at `(x, y)`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != self.split.0 || y.len() != self.split.1 {
            return usage(format!(
                "point of dimensions ({}, {}) for a weight on split {:?}",
                x.len(),
                y.len(),
                self.split
            ));
        }
        let v = self.value(x, y);
        let ok = match self.family {
            WeightFamily::Modulus { .. } => v >= 0.0 && v.is_finite(),
            _ => v > 0.0 && v.is_finite(),
        };
        if ok {
            Ok(v)
        } else {
            Err(Error::Weight(format!("{self} evaluates to {v} at ({x:?}, {y:?})")))
        }
    }

    /// Evaluation at a concatenated point `z = (x, y)`.
    pub fn value_joint(&self, z: &[f64]) -> f64 {
        let (x, y) = z.split_at(self.split.0);
        self.value(x, y)
    }

    /// Whether the family depends on `(|x|, |y|)` only.
    pub fn is_radial_per_block(&self) -> bool {
        match &self.family {
            WeightFamily::CustomTable(_) => false,
            WeightFamily::Modulated { base, .. } => base.is_radial_per_block(),
            WeightFamily::Tensor { first, second } => first.is_radial_per_block() && second.is_radial_per_block(),
            _ => true,
        }
    }

    /// Parses `name(a,b,...)` for the parametric families.
    ///
    /// ```
    /// use aniso_core::weights::WeightSpec;
    /// let w = WeightSpec::parse("product_bessel(2,3)", (1, 1)).unwrap();
    /// assert_eq!(w.eval(&[0.0], &[0.0]).unwrap(), 1.0);
    /// ```
    pub fn parse(expr: &str, split: (usize, usize)) -> Result<Self> {
        let expr = expr.trim();
        let open = expr.find('(').ok_or_else(|| Error::Parse(format!("weight `{expr}` has no argument list")))?;
        if !expr.ends_with(')') {
            return Err(Error::Parse(format!("weight `{expr}` is missing `)`")));
        }
        let name = expr[..open].trim();
        let args: Vec<f64> = expr[open + 1..expr.len() - 1]
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("`{s}` in `{expr}`: {e}"))))
            .collect::<Result<_>>()?;
        let want = |n: usize| -> Result<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(Error::Parse(format!("`{name}` takes {n} argument(s), got {}", args.len())))
            }
        };
        match name {
            "bessel_power" => {
                want(1)?;
                WeightSpec::bessel_power(args[0], split)
            }
            "product_bessel" => {
                want(2)?;
                WeightSpec::product_bessel(args[0], args[1], split)
            }
            "exp_power" => {
                want(2)?;
                WeightSpec::exp_power(args[0], args[1], split)
            }
            "shifted_bessel_product" => {
                want(2)?;
                WeightSpec::shifted_bessel_product(args[0], args[1])
            }
            "modulus" => {
                want(1)?;
                WeightSpec::modulus(args[0], split)
            }
            "unit" => {
                want(0)?;
                Ok(WeightSpec::unit(split))
            }
            other => Err(Error::Parse(format!("unknown weight family `{other}`"))),
        }
    }
}

impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            WeightFamily::BesselPower { s } => write!(f, "bessel_power({s})"),
            WeightFamily::ProductBessel { n1, n2 } => write!(f, "product_bessel({n1},{n2})"),
            WeightFamily::ExpPower { r, s } => write!(f, "exp_power({r},{s})"),
            WeightFamily::ShiftedBesselProduct { gamma1, gamma2 } => {
                write!(f, "shifted_bessel_product({gamma1},{gamma2})")
            }
            WeightFamily::CustomTable(t) => write!(f, "custom_table({} samples)", t.values().len()),
            WeightFamily::Modulus { s } => write!(f, "modulus({s})"),
            WeightFamily::Modulated { base, e1, e2 } => write!(f, "{base}*product_bessel({e1},{e2})"),
            WeightFamily::Tensor { first, second } => write!(f, "{first}(x)*{second}(y)"),
        }
    }
}

#[inline]
fn bracket_pow(r2: f64, s: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else {
        (1.0 + r2).powf(0.5 * s)
    }
}

fn table_lookup(t: &GridFunction, x: &[f64], y: &[f64]) -> f64 {
    let g = t.grid();
    let mut flat = 0;
    for (i, &c) in x.iter().chain(y).enumerate() {
        let a = g.axis(i);
        let j = ((c - a.lower) / a.spacing()).round();
        let j = j.clamp(0.0, (a.points - 1) as f64) as usize;
        flat = flat * a.points + j;
    }
    t.values()[flat].re
}

/// Sample plan for the statistical weight checks.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SamplePlan {
    /// Largest block radius on the ladder.
    pub max_radius: f64,
    /// Number of geometric ladder radii (plus the origin).
    pub ladder: usize,
    /// Random unit directions per block on top of the axis and diagonal directions.
    pub directions: usize,
    /// Extra log-uniformly placed random points.
    pub random: usize,
    pub seed: u64,
}

impl Default for SamplePlan {
    fn default() -> Self {
        SamplePlan { max_radius: 1e4, ladder: 40, directions: 2, random: 2000, seed: 7 }
    }
}

/// Outcome of a sampled ellipticity or moderateness check.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct EllipticityReport {
    pub holds: bool,
    /// Largest observed ratio.
    pub constant_c: f64,
    /// Largest observed ratio restricted to the inner sixteenth of the range.
    pub coarse_c: f64,
    /// Concatenated coordinates of the extremal sample.
    pub witness: Vec<f64>,
}

struct Sample {
    x: Vec<f64>,
    y: Vec<f64>,
    radius: f64,
}

fn unit_directions(d: usize, extra: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    if d == 0 {
        return vec![Vec::new()];
    }
    let mut dirs = Vec::new();
    let mut e1 = vec![0.0; d];
    e1[0] = 1.0;
    dirs.push(e1.clone());
    dirs.push(vec![1.0 / (d as f64).sqrt(); d]);
    dirs.push(e1.iter().map(|v| -v).collect());
    for _ in 0..extra {
        let v: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let n = norm_sq(&v).sqrt().max(1e-12);
        dirs.push(v.into_iter().map(|c| c / n).collect());
    }
    dirs
}

fn ladder_radii(plan: &SamplePlan) -> Vec<f64> {
    let mut r = vec![0.0];
    let lo: f64 = 1e-2;
    let n = plan.ladder.max(2);
    let ratio = (plan.max_radius / lo).powf(1.0 / (n - 1) as f64);
    for k in 0..n {
        r.push(lo * ratio.powi(k as i32));
    }
    r
}

fn plan_samples(split: (usize, usize), plan: &SamplePlan, thin: usize) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let dirs1 = unit_directions(split.0, plan.directions, &mut rng);
    let dirs2 = unit_directions(split.1, plan.directions, &mut rng);
    let radii: Vec<f64> = ladder_radii(plan).into_iter().step_by(thin).collect();
    let r1s: &[f64] = if split.0 == 0 { &[0.0] } else { &radii };
    let r2s: &[f64] = if split.1 == 0 { &[0.0] } else { &radii };
    let ndir = dirs1.len().max(dirs2.len());
    let mut out = Vec::new();
    for &r1 in r1s {
        for &r2 in r2s {
            for k in 0..ndir {
                let u = &dirs1[k % dirs1.len()];
                let v = &dirs2[k % dirs2.len()];
                out.push(Sample {
                    x: u.iter().map(|c| c * r1).collect(),
                    y: v.iter().map(|c| c * r2).collect(),
                    radius: r1.max(r2),
                });
            }
        }
    }
    let (lo, hi) = (1e-3f64.ln(), plan.max_radius.ln());
    for _ in 0..plan.random / thin.max(1) {
        let mut draw = |d: usize| -> (Vec<f64>, f64) {
            if d == 0 {
                return (Vec::new(), 0.0);
            }
            let r = (lo + (hi - lo) * rng.random::<f64>()).exp();
            let v: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let n = norm_sq(&v).sqrt().max(1e-12);
            (v.into_iter().map(|c| c * r / n).collect(), r)
        };
        let (x, r1) = draw(split.0);
        let (y, r2) = draw(split.1);
        out.push(Sample { x, y, radius: r1.max(r2) });
    }
    out
}

fn summarize(ratios: impl Iterator<Item = (f64, f64, Vec<f64>)>, max_radius: f64) -> EllipticityReport {
    let cut = max_radius / 16.0;
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let mut coarse = f64::NEG_INFINITY;
    let mut bad = false;
    for (ratio, radius, witness) in ratios {
        if !ratio.is_finite() {
            bad = true;
            if best.0.is_finite() || best.1.is_empty() {
                best = (f64::INFINITY, witness);
            }
            continue;
        }
        if radius <= cut {
            coarse = coarse.max(ratio);
        }
        if ratio > best.0 {
            best = (ratio, witness);
        }
    }
    let holds = !bad && best.0.is_finite() && best.0 > 0.0 && best.0 <= coarse * 1.05;
    EllipticityReport { holds, constant_c: best.0, coarse_c: coarse, witness: best.1 }
}

/// Estimates `sup lower/w`; `w` is elliptic with respect to `lower` when it is bounded.
///
/// ```
/// use aniso_core::weights::{check_elliptic, SamplePlan, WeightSpec};
/// let w = WeightSpec::product_bessel(1.0, 1.0, (1, 1)).unwrap();
/// let lower = WeightSpec::product_bessel(2.0, 1.0, (1, 1)).unwrap();
/// assert!(!check_elliptic(&w, &lower, &SamplePlan::default()).unwrap().holds);
/// ```
pub fn check_elliptic(w: &WeightSpec, lower: &WeightSpec, plan: &SamplePlan) -> Result<EllipticityReport> {
    if w.split != lower.split {
        return usage("ellipticity check between weights on different splits");
    }
    let samples = plan_samples(w.split, plan, 1);
    let it = samples.into_iter().map(|s| {
        let r = lower.value(&s.x, &s.y) / w.value(&s.x, &s.y);
        let mut z = s.x;
        z.extend(s.y);
        (r, s.radius, z)
    });
    Ok(summarize(it, plan.max_radius))
}

/// Estimates `sup ω(z1 + z2) / (ω(z1) v(z2))` over paired samples.
pub fn check_moderate(w: &WeightSpec, v: &WeightSpec, plan: &SamplePlan) -> Result<EllipticityReport> {
    if w.split != v.split {
        return usage("moderateness check between weights on different splits");
    }
    let samples = plan_samples(w.split, plan, 3);
    let wv: Vec<f64> = samples.iter().map(|s| w.value(&s.x, &s.y)).collect();
    let vv: Vec<f64> = samples.iter().map(|s| v.value(&s.x, &s.y)).collect();
    let mut ratios = Vec::with_capacity(samples.len() * samples.len());
    let mut x = vec![0.0; w.split.0];
    let mut y = vec![0.0; w.split.1];
    for (i, a) in samples.iter().enumerate() {
        for (j, b) in samples.iter().enumerate() {
            for k in 0..x.len() {
                x[k] = a.x[k] + b.x[k];
            }
            for k in 0..y.len() {
                y[k] = a.y[k] + b.y[k];
            }
            let r = w.value(&x, &y) / (wv[i] * vv[j]);
            ratios.push((r, a.radius.max(b.radius), i, j));
        }
    }
    let it = ratios.into_iter().map(|(r, rad, i, j)| {
        let mut z = samples[i].x.clone();
        z.extend(&samples[i].y);
        z.extend(&samples[j].x);
        z.extend(&samples[j].y);
        (r, rad, z)
    });
    Ok(summarize(it, plan.max_radius))
}

/// Bias-space weight `ϑ̃(ξ, b) = ϑ((|b1| − R_U|ξ1/τ1|)₊, (|b2| − R_V|ξ2/τ2|)₊)`.
#[derive(Debug, Clone)]
pub struct ThetaTilde {
    pub theta: WeightSpec,
    pub r_u: f64,
    pub r_v: f64,
    pub tau1: f64,
    pub tau2: f64,
}

impl ThetaTilde {
    /// Width of the flat region in `b1` and `b2` at frequency `(ξ1, ξ2)`.
    pub fn clamp_widths(&self, xi1: &[f64], xi2: &[f64]) -> (f64, f64) {
        (
            self.r_u * norm_sq(xi1).sqrt() / self.tau1.abs(),
            self.r_v * norm_sq(xi2).sqrt() / self.tau2.abs(),
        )
    }

    pub fn eval(&self, xi1: &[f64], xi2: &[f64], b1: f64, b2: f64) -> f64 {
        let (a1, a2) = self.clamp_widths(xi1, xi2);
        self.theta.value(&[(b1.abs() - a1).max(0.0)], &[(b2.abs() - a2).max(0.0)])
    }
}

pub fn make_theta_tilde(theta: &WeightSpec, r_u: f64, r_v: f64, tau1: f64, tau2: f64) -> Result<ThetaTilde> {
    if tau1 == 0.0 || tau2 == 0.0 {
        return usage("τ components must be nonzero");
    }
    if !(r_u >= 0.0 && r_v >= 0.0) {
        return usage("domain radii must be nonnegative");
    }
    if theta.split != (1, 1) {
        return usage("ϑ must be a weight on the bias plane (split (1, 1))");
    }
    Ok(ThetaTilde { theta: theta.clone(), r_u, r_v, tau1, tau2 })
}

/// Exponent `(d + 1)(1 − 1/q) + 1` added to each block bracket.
pub fn omega_tilde_exponent(d: usize, q: f64) -> f64 {
    (d as f64 + 1.0) * (1.0 - 1.0 / q) + 1.0
}

/// `ω̃(ξ1, ξ2) = ω(ξ1, ξ2)·⟨ξ1⟩^{e1}·⟨ξ2⟩^{e2}`, `e_i = (d_i + 1)(1 − 1/q_i) + 1`.
pub fn make_omega_tilde(omega: &WeightSpec, q1: f64, q2: f64, d1: usize, d2: usize) -> Result<WeightSpec> {
    if !(1.0..=2.0).contains(&q1) || !(1.0..=2.0).contains(&q2) {
        return usage(format!("q = ({q1}, {q2}) outside [1, 2]"));
    }
    if omega.split != (d1, d2) {
        return usage(format!("ω is defined on {:?}, not ({d1}, {d2})", omega.split));
    }
    let e1 = omega_tilde_exponent(d1, q1);
    let e2 = omega_tilde_exponent(d2, q2);
    match omega.family {
        WeightFamily::ProductBessel { n1, n2 } => WeightSpec::product_bessel(n1 + e1, n2 + e2, (d1, d2)),
        _ => WeightSpec::new(WeightFamily::Modulated { base: Box::new(omega.clone()), e1, e2 }, (d1, d2)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TensorGrid;

    #[test]
    fn eval_examples() {
        let w = WeightSpec::product_bessel(1.0, 2.0, (1, 1)).unwrap();
        assert_eq!(w.eval(&[0.0], &[0.0]).unwrap(), 1.0);
        let w = WeightSpec::product_bessel(2.0, 0.0, (2, 1)).unwrap();
        assert!((w.eval(&[1.0, 0.0], &[5.0]).unwrap() - 2.0).abs() < 1e-14);
        let w = WeightSpec::bessel_power(3.0, (2, 0)).unwrap();
        assert!((w.eval(&[2.0, 0.0], &[]).unwrap() - 5f64.powf(1.5)).abs() < 1e-12);
    }

    #[test]
    fn eval_checks_dimensions_and_sign() {
        let w = WeightSpec::product_bessel(1.0, 1.0, (1, 1)).unwrap();
        assert!(matches!(w.eval(&[0.0, 1.0], &[0.0]), Err(Error::Usage(_))));
        assert!(WeightSpec::exp_power(0.0, 1.0, (1, 1)).is_err());
        let m = WeightSpec::modulus(1.0, (1, 1)).unwrap();
        assert_eq!(m.eval(&[0.0], &[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn elliptic_examples() {
        let plan = SamplePlan::default();
        let w = WeightSpec::product_bessel(2.0, 3.0, (1, 1)).unwrap();
        let r = check_elliptic(&w, &w, &plan).unwrap();
        assert!(r.holds);
        assert!((r.constant_c - 1.0).abs() < 1e-12);

        let w = WeightSpec::exp_power(1.0, 1.0, (1, 1)).unwrap();
        let lower = WeightSpec::product_bessel(5.0, 5.0, (1, 1)).unwrap();
        let r = check_elliptic(&w, &lower, &plan).unwrap();
        assert!(r.holds);
        // 1D maximum of ⟨x⟩⁵e^{−|x|} lies at the root of x² − 5x + 1 = 0.
        let x: f64 = (5.0 + 21f64.sqrt()) / 2.0;
        let one = (1.0 + x * x).powf(2.5) * (-x).exp();
        assert!(r.constant_c <= one * one * (1.0 + 1e-12));
        assert!(r.constant_c >= 0.9 * one * one);
    }

    #[test]
    fn moderate_examples() {
        let plan = SamplePlan::default();
        let (s, sigma) = (2.0, 3.0);
        let w = WeightSpec::product_bessel(s, sigma, (1, 1)).unwrap();
        let r = check_moderate(&w, &w, &plan).unwrap();
        assert!(r.holds);
        assert!(r.constant_c <= 2f64.powf((s + sigma) / 2.0) * (1.0 + 1e-12));

        let e = WeightSpec::exp_power(1.0, 1.0, (1, 1)).unwrap();
        let poly = WeightSpec::product_bessel(4.0, 4.0, (1, 1)).unwrap();
        assert!(!check_moderate(&e, &poly, &plan).unwrap().holds);
    }

    #[test]
    fn theta_tilde_examples() {
        let theta = WeightSpec::shifted_bessel_product(2.0, 2.0).unwrap();
        let tt = make_theta_tilde(&theta, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!((tt.eval(&[1.0], &[1.0], 3.0, 2.0) - 10.0).abs() < 1e-12);
        assert_eq!(tt.eval(&[0.0], &[0.0], 3.0, -2.0), theta.value(&[3.0], &[2.0]));
        assert_eq!(tt.eval(&[2.0], &[3.0], -1.5, 2.5), theta.value(&[0.0], &[0.0]));
        assert!(make_theta_tilde(&theta, 1.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn omega_tilde_examples() {
        let w = WeightSpec::exp_power(1.0, 1.0, (1, 1)).unwrap();
        let wt = make_omega_tilde(&w, 1.0, 1.0, 1, 1).unwrap();
        let (x, y) = ([0.7], [-1.3]);
        let expect = w.value(&x, &y) * bracket_sq(0.49) * bracket_sq(1.69);
        assert!((wt.value(&x, &y) - expect).abs() < 1e-12 * expect);
        assert_eq!(omega_tilde_exponent(1, 2.0), 2.0);
        let unit = make_omega_tilde(&WeightSpec::unit((1, 1)), 2.0, 2.0, 1, 1).unwrap();
        assert!(matches!(unit.family(), WeightFamily::ProductBessel { n1, n2 } if *n1 == 2.0 && *n2 == 2.0));
        assert!(make_omega_tilde(&w, 2.5, 1.0, 1, 1).is_err());
    }

    #[test]
    fn custom_table_uses_nearest_sample() {
        let grid = TensorGrid::uniform(1, 0, 0.0, 4.0, 4).unwrap();
        let t = GridFunction::from_real(grid, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let w = WeightSpec::custom_table(t).unwrap();
        assert_eq!(w.eval(&[1.2], &[]).unwrap(), 2.0);
        assert_eq!(w.eval(&[-50.0], &[]).unwrap(), 1.0);
        assert_eq!(w.eval(&[50.0], &[]).unwrap(), 4.0);
    }

    #[test]
    fn parse_round_trip() {
        for s in ["bessel_power(3)", "product_bessel(2,3)", "exp_power(1,1)", "modulus(1)"] {
            let w = WeightSpec::parse(s, (1, 1)).unwrap();
            assert_eq!(w.to_string(), s);
        }
        assert!(WeightSpec::parse("product_bessel(2)", (1, 1)).is_err());
        assert!(WeightSpec::parse("nope(1)", (1, 1)).is_err());
    }
}
