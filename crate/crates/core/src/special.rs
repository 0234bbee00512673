//! Special functions and one-dimensional quadrature helpers.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

pub use puruspe::{gamma, ln_gamma};

/// Volume of the unit ball in `ℝ^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    PI.powf(h) / gamma(h + 1.0)
}

/// Surface area of the unit sphere in `ℝ^d`.
pub fn unit_sphere_area(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    2.0 * PI.powf(h) / gamma(h)
}

/// Bessel function of the first kind `J_ν(x)` for real order `ν ≥ 0` and `x ≥ 0`.
pub fn bessel_j(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    if nu == 0.5 {
        return (2.0 / (PI * x)).sqrt() * x.sin();
    }
    if nu == 1.5 {
        return (2.0 / (PI * x)).sqrt() * (x.sin() / x - x.cos());
    }
    if nu.fract() == 0.0 && nu <= 64.0 {
        return puruspe::Jn(nu as u32, x);
    }
    puruspe::Jnu_Ynu(nu, x).0
}

/// `J_ν(x) / x^ν`, continuous at `x = 0` where it equals `1 / (2^ν Γ(ν + 1))`.
pub fn bessel_j_scaled(nu: f64, x: f64) -> f64 {
    if x.abs() < 1e-2 {
        let lead = 1.0 / (2f64.powf(nu) * gamma(nu + 1.0));
        let x2 = x * x;
        return lead * (1.0 - x2 / (4.0 * (nu + 1.0)) + x2 * x2 / (32.0 * (nu + 1.0) * (nu + 2.0)));
    }
    bessel_j(nu, x) / x.powf(nu)
}

/// Gauss–Legendre rule on `[-1, 1]` with cached nodes and weights.
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(points: usize) -> Self {
        let gl = GaussLegendre::new(NonZeroUsize::new(points.max(1)).expect("nonzero"));
        let (nodes, weights) = gl.iter().map(|(x, w)| (*x, *w)).unzip();
        GaussRule { nodes, weights }
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
        let s: f64 = self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(m + r * x)).sum();
        s * r
    }

    /// Sum of panel integrals over consecutive breakpoints.
    pub fn integrate_panels(&self, breaks: &[f64], mut f: impl FnMut(f64) -> f64) -> f64 {
        breaks.windows(2).map(|w| self.integrate(w[0], w[1], &mut f)).sum()
    }

    /// Uniform panels of width at most `width` on `[a, b]`.
    pub fn integrate_uniform(&self, a: f64, b: f64, width: f64, f: impl FnMut(f64) -> f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let n = ((b - a) / width).ceil().max(1.0) as usize;
        let breaks: Vec<f64> = (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect();
        self.integrate_panels(&breaks, f)
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Integral over `[0, ∞)` accumulated in dyadic shells `[0, K], [K, 2K], …`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellIntegral {
    /// Integral over `[0, K]` followed by the shells `[2^{j−1}K, 2^j K]`.
    pub shells: Vec<f64>,
    /// Sum of all shells plus the geometric tail extrapolated from the last two.
    pub value: f64,
    /// Same, with the last shell left out.
    pub value_previous: f64,
    /// Ratio of the last two shells; a ratio near or above one signals divergence.
    pub ratio: f64,
}

impl ShellIntegral {
    pub fn diverges(&self, growth: f64) -> bool {
        !(self.ratio < 0.97) || !(self.value.is_finite()) || self.value > (1.0 + growth) * self.value_previous
    }
}

fn extrapolate(sum: f64, prev: f64, last: f64) -> (f64, f64) {
    let ratio = if prev > 0.0 { last / prev } else if last > 0.0 { f64::INFINITY } else { 0.0 };
    let tail = if ratio < 1.0 { last * ratio / (1.0 - ratio) } else { f64::INFINITY };
    (sum + tail, ratio)
}

/// Integrates `f` over `[0, K·2^J]` with `shell(a, b)` returning each piece and extrapolates the tail.
pub fn dyadic_shells(k: f64, levels: usize, mut shell: impl FnMut(f64, f64) -> f64) -> ShellIntegral {
    let levels = levels.max(3);
    let mut shells = vec![shell(0.0, k)];
    let mut a = k;
    for _ in 0..levels {
        shells.push(shell(a, 2.0 * a));
        a *= 2.0;
    }
    let n = shells.len();
    let total: f64 = shells.iter().sum();
    let (value, ratio) = extrapolate(total, shells[n - 2], shells[n - 1]);
    let (value_previous, _) = extrapolate(total - shells[n - 1], shells[n - 3], shells[n - 2]);
    ShellIntegral { shells, value, value_previous, ratio }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-14);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-14);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-13);
        assert!((unit_sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn half_integer_bessel_matches_general_order_routine() {
        for &x in &[0.3, 1.0, 7.5, 40.0, 400.0] {
            for nu in [0.5, 1.5] {
                let general = puruspe::Jnu_Ynu(nu, x).0;
                assert!((bessel_j(nu, x) - general).abs() < 1e-10, "nu = {nu}, x = {x}");
            }
        }
        assert!((bessel_j_scaled(1.0, 1e-8) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gauss_rule_is_exact_for_polynomials() {
        let r = GaussRule::new(8);
        assert!((r.integrate(0.0, 2.0, |x| x.powi(7)) - 32.0).abs() < 1e-12);
        let v = r.integrate_uniform(0.0, PI, 0.1, f64::sin);
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn shells_extrapolate_power_tail() {
        let r = GaussRule::new(16);
        let s = dyadic_shells(1.0, 10, |a, b| r.integrate(a, b, |x| 1.0 / (1.0 + x).powi(3)));
        assert!((s.value - 0.5).abs() < 1e-6);
        assert!(!s.diverges(0.1));
        let d = dyadic_shells(1.0, 10, |a, b| r.integrate(a, b, |x| 1.0 / (1.0 + x)));
        assert!(d.diverges(0.1));
    }
}
