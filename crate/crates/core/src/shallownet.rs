//! Shallow ramp-power networks on `[−1, 1]²` trained in a Bochner-Sobolev
//! loss, with the heat-type target `f(t, x) = e^{−|t|−|x|³}`.
//!
//! Two models with one output:
//!
//! ```text
//! Φ1(t, x) = Σ_j w_j (w_t,j t + w_x,j x + b_j)₊^m + c
//! Φ2(t, x) = Σ_j w_j (w_t,j t + b_t,j)₊^{m1} (w_x,j x + b_x,j)₊^{m2} + c
//! ```
//!
//! The loss is `∫∫ |Φ − f|² + |∂_xΦ − ∂_xf|²` by the tensor trapezoidal rule,
//! and its parameter gradient is accumulated in closed form.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::activation::ramp_derivative;
use crate::dictionary::log_log_slope;
use crate::error::{usage, Error, Result};
use crate::norms::{MixedExponents, SobolevOrder};

/// `(r, r', r'')` for `r(z) = (z)₊^m`.
#[inline(always)]
fn ramp3(m: u32, z: f64) -> (f64, f64, f64) {
    if z <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    match m {
        1 => (z, 1.0, 0.0),
        2 => (z * z, 2.0 * z, 2.0),
        3 => (z * z * z, 3.0 * z * z, 6.0 * z),
        _ => (ramp_derivative(m, 0, z), ramp_derivative(m, 1, z), ramp_derivative(m, 2, z)),
    }
}

/// Index range `[lo, hi)` of ascending `xs` that may satisfy `a + s·x > 0`, padded by one.
fn support(xs: &[f64], a: f64, s: f64) -> (usize, usize) {
    let n = xs.len();
    if s == 0.0 {
        return if a > 0.0 { (0, n) } else { (0, 0) };
    }
    let cut = -a / s;
    let k = xs.partition_point(|&x| x < cut);
    if s > 0.0 {
        (k.saturating_sub(1), n)
    } else {
        (0, (k + 1).min(n))
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SingleBlockNet {
    pub w: Vec<f64>,
    pub w_t: Vec<f64>,
    pub w_x: Vec<f64>,
    pub b: Vec<f64>,
    pub c: f64,
    pub m: u32,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TwoBlockNet {
    pub w: Vec<f64>,
    pub w_t: Vec<f64>,
    pub w_x: Vec<f64>,
    pub b_t: Vec<f64>,
    pub b_x: Vec<f64>,
    pub c: f64,
    pub m1: u32,
    pub m2: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    SingleBlock,
    TwoBlock,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::SingleBlock => "single_block",
            ModelKind::TwoBlock => "two_block",
        })
    }
}

impl ModelKind {
    /// Parameters per hidden unit.
    pub fn unit_params(self) -> usize {
        match self {
            ModelKind::SingleBlock => 4,
            ModelKind::TwoBlock => 5,
        }
    }

    /// Width `N` with `unit_params·N + 1 = budget`.
    pub fn width_for_budget(self, budget: usize) -> Result<usize> {
        let k = self.unit_params();
        if budget < k + 1 || !(budget - 1).is_multiple_of(k) {
            return usage(format!("{self}: parameter budget {budget} is not {k}N + 1"));
        }
        Ok((budget - 1) / k)
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Network {
    SingleBlock(SingleBlockNet),
    TwoBlock(TwoBlockNet),
}

impl SingleBlockNet {
    pub fn zeros(n: usize, m: u32) -> Self {
        SingleBlockNet { w: vec![0.0; n], w_t: vec![0.0; n], w_x: vec![0.0; n], b: vec![0.0; n], c: 0.0, m }
    }
}

impl TwoBlockNet {
    pub fn zeros(n: usize, m1: u32, m2: u32) -> Self {
        TwoBlockNet {
            w: vec![0.0; n],
            w_t: vec![0.0; n],
            w_x: vec![0.0; n],
            b_t: vec![0.0; n],
            b_x: vec![0.0; n],
            c: 0.0,
            m1,
            m2,
        }
    }
}

impl Network {
    /// Network with all unit weights uniform in `(−1, 1)` and `c = 0`.
    pub fn random(kind: ModelKind, n: usize, degrees: (u32, u32), rng: &mut impl Rng) -> Self {
        let mut net = match kind {
            ModelKind::SingleBlock => Network::SingleBlock(SingleBlockNet::zeros(n, degrees.1)),
            ModelKind::TwoBlock => Network::TwoBlock(TwoBlockNet::zeros(n, degrees.0, degrees.1)),
        };
        let mut p = net.params();
        let np = p.len();
        for v in &mut p[..np - 1] {
            *v = rng.random_range(-1.0..1.0);
        }
        net.set_params(&p).expect("same layout");
        net
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Network::SingleBlock(_) => ModelKind::SingleBlock,
            Network::TwoBlock(_) => ModelKind::TwoBlock,
        }
    }

    pub fn width(&self) -> usize {
        match self {
            Network::SingleBlock(n) => n.w.len(),
            Network::TwoBlock(n) => n.w.len(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.kind().unit_params() * self.width() + 1
    }

    /// Flat parameters: unit vectors in field order, then `c`.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.param_count());
        match self {
            Network::SingleBlock(n) => {
                for v in [&n.w, &n.w_t, &n.w_x, &n.b] {
                    p.extend_from_slice(v);
                }
                p.push(n.c);
            }
            Network::TwoBlock(n) => {
                for v in [&n.w, &n.w_t, &n.w_x, &n.b_t, &n.b_x] {
                    p.extend_from_slice(v);
                }
                p.push(n.c);
            }
        }
        debug_assert_eq!(p.len(), self.param_count());
        p
    }

    pub fn set_params(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.param_count() {
            return usage(format!("{} parameters for a model with {}", p.len(), self.param_count()));
        }
        let n = self.width();
        let c = p[p.len() - 1];
        let mut chunks = p[..p.len() - 1].chunks(n);
        let mut next = |dst: &mut Vec<f64>| dst.copy_from_slice(chunks.next().expect("layout"));
        match self {
            Network::SingleBlock(s) => {
                for v in [&mut s.w, &mut s.w_t, &mut s.w_x, &mut s.b] {
                    next(v);
                }
                s.c = c;
            }
            Network::TwoBlock(s) => {
                for v in [&mut s.w, &mut s.w_t, &mut s.w_x, &mut s.b_t, &mut s.b_x] {
                    next(v);
                }
                s.c = c;
            }
        }
        Ok(())
    }

    /// Appends `extra` units with zero outer weight and random inner weights.
    pub fn widened(&self, extra: usize, rng: &mut impl Rng) -> Self {
        let mut r = |k: usize| -> Vec<f64> { (0..k).map(|_| rng.random_range(-1.0..1.0)).collect() };
        let cat = |a: &[f64], b: Vec<f64>| -> Vec<f64> { a.iter().copied().chain(b).collect() };
        match self {
            Network::SingleBlock(n) => Network::SingleBlock(SingleBlockNet {
                w: cat(&n.w, vec![0.0; extra]),
                w_t: cat(&n.w_t, r(extra)),
                w_x: cat(&n.w_x, r(extra)),
                b: cat(&n.b, r(extra)),
                c: n.c,
                m: n.m,
            }),
            Network::TwoBlock(n) => Network::TwoBlock(TwoBlockNet {
                w: cat(&n.w, vec![0.0; extra]),
                w_t: cat(&n.w_t, r(extra)),
                w_x: cat(&n.w_x, r(extra)),
                b_t: cat(&n.b_t, r(extra)),
                b_x: cat(&n.b_x, r(extra)),
                c: n.c,
                m1: n.m1,
                m2: n.m2,
            }),
        }
    }

    pub fn forward(&self, t: f64, x: f64) -> f64 {
        match self {
            Network::SingleBlock(n) => {
                let mut s = n.c;
                for j in 0..n.w.len() {
                    s += n.w[j] * ramp3(n.m, n.w_t[j] * t + n.w_x[j] * x + n.b[j]).0;
                }
                s
            }
            Network::TwoBlock(n) => {
                let mut s = n.c;
                for j in 0..n.w.len() {
                    s += n.w[j] * ramp3(n.m1, n.w_t[j] * t + n.b_t[j]).0 * ramp3(n.m2, n.w_x[j] * x + n.b_x[j]).0;
                }
                s
            }
        }
    }

    /// `∂_x^order` of the network output for `order ≤ 1`, or `order = 2` where the ramp degree allows.
    pub fn partial_x(&self, t: f64, x: f64, order: u32) -> Result<f64> {
        let m = match self {
            Network::SingleBlock(n) => n.m,
            Network::TwoBlock(n) => n.m2,
        };
        if order == 0 {
            return Ok(self.forward(t, x));
        }
        if order > m {
            return usage(format!("∂_x of order {order} exceeds the x-degree {m} of the {} model", self.kind()));
        }
        let mut s = 0.0;
        match self {
            Network::SingleBlock(n) => {
                for j in 0..n.w.len() {
                    let z = n.w_t[j] * t + n.w_x[j] * x + n.b[j];
                    s += n.w[j] * n.w_x[j].powi(order as i32) * ramp_derivative(n.m, order, z);
                }
            }
            Network::TwoBlock(n) => {
                for j in 0..n.w.len() {
                    let a = ramp3(n.m1, n.w_t[j] * t + n.b_t[j]).0;
                    let z = n.w_x[j] * x + n.b_x[j];
                    s += n.w[j] * a * n.w_x[j].powi(order as i32) * ramp_derivative(n.m2, order, z);
                }
            }
        }
        Ok(s)
    }
}

/// Tensor trapezoidal rule on `[−1, 1]²` with `intervals + 1` nodes per axis,
/// `t = 0` and `x = 0` among the nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct LossQuadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl LossQuadrature {
    pub fn new(intervals: usize) -> Result<Self> {
        if intervals < 2 || !intervals.is_multiple_of(2) {
            return usage(format!("loss quadrature needs an even interval count, got {intervals}"));
        }
        let h = 2.0 / intervals as f64;
        let nodes: Vec<f64> = (0..=intervals).map(|k| -1.0 + k as f64 * h).collect();
        let mut weights = vec![h; intervals + 1];
        weights[0] = h / 2.0;
        weights[intervals] = h / 2.0;
        Ok(LossQuadrature { nodes, weights })
    }

    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len() * self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Orders, exponents and quadrature of the training loss.
#[derive(Debug, Clone, PartialEq)]
pub struct SobolevLossSpec {
    pub orders: SobolevOrder,
    pub exponents: MixedExponents,
    pub quad: LossQuadrature,
}

impl SobolevLossSpec {
    /// Orders `(0, 1)`, exponents `(2, 2)`.
    pub fn new(intervals: usize) -> Result<Self> {
        Self::with_orders(SobolevOrder::new(0, 1), MixedExponents::new(2.0, 2.0)?, intervals)
    }

    pub fn with_orders(orders: SobolevOrder, exponents: MixedExponents, intervals: usize) -> Result<Self> {
        if orders.n1 != 0 || orders.n2 > 1 {
            return usage(format!(
                "the analytic loss supports orders (0, 0) and (0, 1), not ({}, {})",
                orders.n1, orders.n2
            ));
        }
        if exponents.p1 != 2.0 || exponents.p2 != 2.0 {
            return usage("the analytic loss is the Hilbert case p = (2, 2)");
        }
        Ok(SobolevLossSpec { orders, exponents, quad: LossQuadrature::new(intervals)? })
    }

    fn check_model(&self, net: &Network) -> Result<()> {
        let m = match net {
            Network::SingleBlock(n) => n.m,
            Network::TwoBlock(n) => n.m2,
        };
        if (self.orders.n2 as u32) > m {
            return usage(format!("loss order n2 = {} exceeds the x-degree {m} of the model", self.orders.n2));
        }
        Ok(())
    }
}

/// Target values and `∂_x` values on the quadrature nodes, row-major in `(t, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossTarget {
    pub intervals: usize,
    pub values: Vec<f64>,
    pub dx: Vec<f64>,
}

impl LossTarget {
    pub fn from_fn(quad: &LossQuadrature, f: impl Fn(f64, f64) -> f64, dfx: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(quad.len());
        let mut dx = Vec::with_capacity(quad.len());
        for &t in &quad.nodes {
            for &x in &quad.nodes {
                values.push(f(t, x));
                dx.push(dfx(t, x));
            }
        }
        LossTarget { intervals: quad.intervals(), values, dx }
    }

    /// Target with `∂_x` from second-order differences along `x` (one-sided at the ends).
    pub fn from_samples(quad: &LossQuadrature, values: Vec<f64>) -> Result<Self> {
        let n = quad.nodes.len();
        if values.len() != n * n {
            return usage(format!("{} samples for {n}×{n} quadrature nodes", values.len()));
        }
        let h = quad.nodes[1] - quad.nodes[0];
        let mut dx = vec![0.0; n * n];
        for i in 0..n {
            let r = &values[i * n..(i + 1) * n];
            let d = &mut dx[i * n..(i + 1) * n];
            d[0] = (-3.0 * r[0] + 4.0 * r[1] - r[2]) / (2.0 * h);
            d[n - 1] = (3.0 * r[n - 1] - 4.0 * r[n - 2] + r[n - 3]) / (2.0 * h);
            for k in 1..n - 1 {
                d[k] = (r[k + 1] - r[k - 1]) / (2.0 * h);
            }
        }
        Ok(LossTarget { intervals: quad.intervals(), values, dx })
    }
}

/// `f(t, x) = e^{−|t|−|x|³}` with its derivatives.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HeatTarget;

impl HeatTarget {
    pub fn value(&self, t: f64, x: f64) -> f64 {
        (-t.abs() - x.abs().powi(3)).exp()
    }

    /// `−sign(t)·f`, zero at `t = 0`.
    pub fn dt(&self, t: f64, x: f64) -> f64 {
        -sign(t) * self.value(t, x)
    }

    /// `−3x|x|·f`.
    pub fn dx(&self, t: f64, x: f64) -> f64 {
        -3.0 * x * x.abs() * self.value(t, x)
    }

    /// `(9x⁴ − 6|x|)·f`.
    pub fn dxx(&self, t: f64, x: f64) -> f64 {
        (9.0 * x.powi(4) - 6.0 * x.abs()) * self.value(t, x)
    }

    /// `(∂_t − ∂_x² + sign(t) + 9|x|⁴ − 6|x|) f`.
    pub fn pde_residual(&self, t: f64, x: f64) -> f64 {
        let f = self.value(t, x);
        self.dt(t, x) - self.dxx(t, x) + (sign(t) + 9.0 * x.powi(4) - 6.0 * x.abs()) * f
    }

    pub fn sample(&self, quad: &LossQuadrature) -> LossTarget {
        LossTarget::from_fn(quad, |t, x| self.value(t, x), |t, x| self.dx(t, x))
    }
}

fn sign(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else if t < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `e^{−t²−x²}` with its `x`-derivative.
pub fn gaussian_target(quad: &LossQuadrature) -> LossTarget {
    LossTarget::from_fn(quad, |t, x| (-t * t - x * x).exp(), |t, x| -2.0 * x * (-t * t - x * x).exp())
}

fn check_target(target: &LossTarget, spec: &SobolevLossSpec) -> Result<()> {
    if target.intervals != spec.quad.intervals() || target.values.len() != spec.quad.len() {
        return usage(format!(
            "target sampled with {} intervals, loss quadrature has {}",
            target.intervals,
            spec.quad.intervals()
        ));
    }
    Ok(())
}

/// Network output and `∂_x` output on all nodes.
fn outputs(net: &Network, quad: &LossQuadrature, with_dx: bool) -> (Vec<f64>, Vec<f64>) {
    let xs = &quad.nodes;
    let n = xs.len();
    let mut phi = vec![0.0; n * n];
    let mut dphi = vec![0.0; if with_dx { n * n } else { 0 }];
    match net {
        Network::SingleBlock(s) => {
            phi.iter_mut().for_each(|v| *v = s.c);
            for j in 0..s.w.len() {
                let (w, wt, wx, b) = (s.w[j], s.w_t[j], s.w_x[j], s.b[j]);
                for (i, &t) in xs.iter().enumerate() {
                    let base = wt * t + b;
                    let (lo, hi) = support(xs, base, wx);
                    let row = i * n;
                    for k in lo..hi {
                        let (r, r1, _) = ramp3(s.m, base + wx * xs[k]);
                        phi[row + k] += w * r;
                        if with_dx {
                            dphi[row + k] += w * wx * r1;
                        }
                    }
                }
            }
        }
        Network::TwoBlock(s) => {
            phi.iter_mut().for_each(|v| *v = s.c);
            let mut bx = vec![0.0; n];
            let mut bx1 = vec![0.0; n];
            for j in 0..s.w.len() {
                let (w, wt, wx, bt, bxx) = (s.w[j], s.w_t[j], s.w_x[j], s.b_t[j], s.b_x[j]);
                let (lo, hi) = support(xs, bxx, wx);
                for k in lo..hi {
                    let (r, r1, _) = ramp3(s.m2, wx * xs[k] + bxx);
                    bx[k] = r;
                    bx1[k] = r1;
                }
                for (i, &t) in xs.iter().enumerate() {
                    let a = ramp3(s.m1, wt * t + bt).0;
                    if a == 0.0 {
                        continue;
                    }
                    let (wa, wwa) = (w * a, w * wx * a);
                    let row = i * n;
                    for k in lo..hi {
                        phi[row + k] += wa * bx[k];
                        if with_dx {
                            dphi[row + k] += wwa * bx1[k];
                        }
                    }
                }
            }
        }
    }
    (phi, dphi)
}

/// `∫∫ |Φ − f|² + [n2 = 1]·|∂_xΦ − ∂_xf|²` by the loss quadrature.
pub fn sobolev_loss(net: &Network, target: &LossTarget, spec: &SobolevLossSpec) -> Result<f64> {
    check_target(target, spec)?;
    spec.check_model(net)?;
    let with_dx = spec.orders.n2 == 1;
    let (phi, dphi) = outputs(net, &spec.quad, with_dx);
    let wq = &spec.quad.weights;
    let n = wq.len();
    let mut s = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for k in 0..n {
            let q = i * n + k;
            let r = phi[q] - target.values[q];
            let mut v = r * r;
            if with_dx {
                let rx = dphi[q] - target.dx[q];
                v += rx * rx;
            }
            row += wq[k] * v;
        }
        s += wq[i] * row;
    }
    Ok(s)
}

/// Loss and its exact gradient with respect to [`Network::params`].
pub fn loss_gradient(net: &Network, target: &LossTarget, spec: &SobolevLossSpec) -> Result<(f64, Vec<f64>)> {
    check_target(target, spec)?;
    spec.check_model(net)?;
    let with_dx = spec.orders.n2 == 1;
    let quad = &spec.quad;
    let xs = &quad.nodes;
    let wq = &quad.weights;
    let n = xs.len();
    let (phi, dphi) = outputs(net, quad, with_dx);
    // weighted residuals
    let mut res = vec![0.0; n * n];
    let mut resx = vec![0.0; if with_dx { n * n } else { 0 }];
    let mut loss = 0.0;
    for i in 0..n {
        for k in 0..n {
            let q = i * n + k;
            let w = wq[i] * wq[k];
            let r = phi[q] - target.values[q];
            res[q] = w * r;
            loss += w * r * r;
            if with_dx {
                let rx = dphi[q] - target.dx[q];
                resx[q] = w * rx;
                loss += w * rx * rx;
            }
        }
    }
    let units = net.width();
    let mut g = vec![0.0; net.param_count()];
    g[net.param_count() - 1] = 2.0 * res.iter().sum::<f64>();
    match net {
        Network::SingleBlock(s) => {
            for j in 0..units {
                let (w, wt, wx, b) = (s.w[j], s.w_t[j], s.w_x[j], s.b[j]);
                let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
                let (mut t0, mut t1, mut t2, mut t3) = (0.0, 0.0, 0.0, 0.0);
                for (i, &t) in xs.iter().enumerate() {
                    let base = wt * t + b;
                    let (lo, hi) = support(xs, base, wx);
                    let row = i * n;
                    let (mut a0, mut a2, mut a3, mut c0, mut c2, mut c3) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
                    for k in lo..hi {
                        let x = xs[k];
                        let (r, r1, r2) = ramp3(s.m, base + wx * x);
                        let rq = res[row + k];
                        a0 += rq * r;
                        a2 += rq * r1 * x;
                        a3 += rq * r1;
                        if with_dx {
                            let rx = resx[row + k];
                            c0 += rx * r1;
                            c2 += rx * r2 * x;
                            c3 += rx * r2;
                        }
                    }
                    s0 += a0;
                    s1 += a3 * t;
                    s2 += a2;
                    s3 += a3;
                    t0 += c0;
                    t1 += c3 * t;
                    t2 += c2;
                    t3 += c3;
                }
                g[j] = 2.0 * (s0 + wx * t0);
                g[units + j] = 2.0 * w * (s1 + wx * t1);
                g[2 * units + j] = 2.0 * w * (s2 + t0 + wx * t2);
                g[3 * units + j] = 2.0 * w * (s3 + wx * t3);
            }
        }
        Network::TwoBlock(s) => {
            let mut bx = vec![0.0; n];
            let mut bx1 = vec![0.0; n];
            let mut bx2 = vec![0.0; n];
            for j in 0..units {
                let (w, wt, wx, bt, bxx) = (s.w[j], s.w_t[j], s.w_x[j], s.b_t[j], s.b_x[j]);
                let (lo, hi) = support(xs, bxx, wx);
                for k in lo..hi {
                    let (r, r1, r2) = ramp3(s.m2, wx * xs[k] + bxx);
                    bx[k] = r;
                    bx1[k] = r1;
                    bx2[k] = r2;
                }
                let (mut gw, mut gwt, mut gbt, mut gwx, mut gbx) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for (i, &t) in xs.iter().enumerate() {
                    let (a, a1, _) = ramp3(s.m1, wt * t + bt);
                    if a == 0.0 && a1 == 0.0 {
                        continue;
                    }
                    let row = i * n;
                    let (mut u1, mut u2, mut u3, mut v1, mut v2, mut v3) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
                    for k in lo..hi {
                        let x = xs[k];
                        let rq = res[row + k];
                        u1 += rq * bx[k];
                        u2 += rq * bx1[k] * x;
                        u3 += rq * bx1[k];
                        if with_dx {
                            let rx = resx[row + k];
                            v1 += rx * bx1[k];
                            v2 += rx * bx2[k] * x;
                            v3 += rx * bx2[k];
                        }
                    }
                    let p = u1 + wx * v1;
                    gw += a * p;
                    gwt += a1 * t * p;
                    gbt += a1 * p;
                    gwx += a * (u2 + v1 + wx * v2);
                    gbx += a * (u3 + wx * v3);
                }
                g[j] = 2.0 * gw;
                g[units + j] = 2.0 * w * gwt;
                g[2 * units + j] = 2.0 * w * gwx;
                g[3 * units + j] = 2.0 * w * gbt;
                g[4 * units + j] = 2.0 * w * gbx;
            }
        }
    }
    Ok((loss, g))
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimizer {
    GradientDescent { lr: f64 },
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64 },
}

impl Optimizer {
    pub fn adam(lr: f64) -> Self {
        Optimizer::Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::adam(1e-3)
    }
}

/// Loss above which a run is aborted.
pub const DIVERGENCE_LOSS: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TrainRun {
    pub seed: u64,
    pub steps: usize,
    pub optimizer: Optimizer,
    /// Loss before each update, then after the last one.
    pub loss_trace: Vec<f64>,
    /// Running minimum of `loss_trace`.
    pub smoothed_trace: Vec<f64>,
    pub diverged: bool,
    /// Parameters attaining the smallest recorded loss.
    pub best: Network,
}

impl TrainRun {
    pub fn final_smoothed(&self) -> f64 {
        *self.smoothed_trace.last().expect("trace has the initial loss")
    }
}

pub fn cumulative_min(xs: &[f64]) -> Vec<f64> {
    let mut m = f64::INFINITY;
    xs.iter()
        .map(|&v| {
            m = m.min(v);
            m
        })
        .collect()
}

/// Full-batch training from `init`.
pub fn train(
    init: &Network,
    target: &LossTarget,
    spec: &SobolevLossSpec,
    optimizer: Optimizer,
    steps: usize,
    seed: u64,
) -> Result<TrainRun> {
    let mut net = init.clone();
    let mut p = net.params();
    let mut m1 = vec![0.0; p.len()];
    let mut m2 = vec![0.0; p.len()];
    let mut trace = Vec::with_capacity(steps + 1);
    let mut best = (f64::INFINITY, net.clone());
    let mut diverged = false;
    for step in 0..=steps {
        let (loss, g) = loss_gradient(&net, target, spec)?;
        trace.push(loss);
        if !loss.is_finite() || loss > DIVERGENCE_LOSS {
            diverged = true;
            break;
        }
        if loss < best.0 {
            best = (loss, net.clone());
        }
        if step == steps {
            break;
        }
        match optimizer {
            Optimizer::GradientDescent { lr } => {
                for (pi, gi) in p.iter_mut().zip(&g) {
                    *pi -= lr * gi;
                }
            }
            Optimizer::Adam { lr, beta1, beta2, eps } => {
                let k = (step + 1) as i32;
                let (c1, c2) = (1.0 - beta1.powi(k), 1.0 - beta2.powi(k));
                for i in 0..p.len() {
                    m1[i] = beta1 * m1[i] + (1.0 - beta1) * g[i];
                    m2[i] = beta2 * m2[i] + (1.0 - beta2) * g[i] * g[i];
                    p[i] -= lr * (m1[i] / c1) / ((m2[i] / c2).sqrt() + eps);
                }
            }
        }
        net.set_params(&p)?;
    }
    let smoothed_trace = cumulative_min(&trace);
    Ok(TrainRun { seed, steps, optimizer, loss_trace: trace, smoothed_trace, diverged, best: best.1 })
}

/// Protocol shared by the budget comparison and the rate study.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainProtocol {
    pub steps: usize,
    pub optimizer: Optimizer,
    pub quad_intervals: usize,
    /// `m` of the single-block model.
    pub single_degree: u32,
    /// `(m1, m2)` of the two-block model.
    pub two_block_degrees: (u32, u32),
}

impl Default for TrainProtocol {
    fn default() -> Self {
        TrainProtocol {
            steps: 20_000,
            optimizer: Optimizer::default(),
            quad_intervals: 64,
            single_degree: 2,
            two_block_degrees: (1, 2),
        }
    }
}

impl TrainProtocol {
    pub fn spec(&self) -> Result<SobolevLossSpec> {
        SobolevLossSpec::new(self.quad_intervals)
    }

    fn degrees(&self, kind: ModelKind) -> (u32, u32) {
        match kind {
            ModelKind::SingleBlock => (0, self.single_degree),
            ModelKind::TwoBlock => self.two_block_degrees,
        }
    }

    /// Seeded initial network; the stream depends on seed, model and width.
    pub fn init(&self, kind: ModelKind, width: usize, seed: u64) -> Network {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(match kind {
            ModelKind::SingleBlock => 1,
            ModelKind::TwoBlock => 2,
        } * 1_000_003
            + width as u64);
        Network::random(kind, width, self.degrees(kind), &mut rng)
    }
}

/// All runs for one model at one budget.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ExperimentCell {
    pub model: ModelKind,
    pub budget: usize,
    pub width: usize,
    pub runs: Vec<TrainRun>,
}

impl ExperimentCell {
    pub fn final_losses(&self) -> Vec<f64> {
        self.runs.iter().map(TrainRun::final_smoothed).collect()
    }

    /// Mean and standard deviation across runs of `log10` smoothed loss at each step.
    pub fn log_loss_band(&self) -> Vec<(f64, f64)> {
        let len = self.runs.iter().map(|r| r.smoothed_trace.len()).min().unwrap_or(0);
        (0..len)
            .map(|s| mean_std(&self.runs.iter().map(|r| r.smoothed_trace[s].log10()).collect::<Vec<_>>()))
            .collect()
    }
}

pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (m, var.sqrt())
}

/// Ordering of final losses at one budget.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BudgetVerdict {
    pub budget: usize,
    pub single_mean: f64,
    pub single_std: f64,
    pub two_mean: f64,
    pub two_std: f64,
    /// `sqrt((s1² + s2²)/2)`.
    pub pooled_std: f64,
    pub two_block_better: bool,
    pub gap_exceeds_pooled_std: bool,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ExperimentReport {
    pub protocol: TrainProtocol,
    pub seeds: Vec<u64>,
    pub cells: Vec<ExperimentCell>,
    pub verdicts: Vec<BudgetVerdict>,
    pub diverged_runs: usize,
}

impl ExperimentReport {
    pub fn cell(&self, model: ModelKind, budget: usize) -> Option<&ExperimentCell> {
        self.cells.iter().find(|c| c.model == model && c.budget == budget)
    }
}

/// Trains both models at every budget for every seed on the heat target.
pub fn budget_comparison(budgets: &[usize], seeds: &[u64], protocol: &TrainProtocol) -> Result<ExperimentReport> {
    let spec = protocol.spec()?;
    let target = HeatTarget.sample(&spec.quad);
    let mut jobs = Vec::new();
    for &budget in budgets {
        for kind in [ModelKind::SingleBlock, ModelKind::TwoBlock] {
            let width = kind.width_for_budget(budget)?;
            for &seed in seeds {
                jobs.push((kind, budget, width, seed));
            }
        }
    }
    let runs: Vec<TrainRun> = jobs
        .par_iter()
        .map(|&(kind, _, width, seed)| {
            train(&protocol.init(kind, width, seed), &target, &spec, protocol.optimizer, protocol.steps, seed)
        })
        .collect::<Result<_>>()?;
    let mut cells: Vec<ExperimentCell> = Vec::new();
    for ((kind, budget, width, _), run) in jobs.into_iter().zip(runs) {
        match cells.iter_mut().find(|c| c.model == kind && c.budget == budget) {
            Some(c) => c.runs.push(run),
            None => cells.push(ExperimentCell { model: kind, budget, width, runs: vec![run] }),
        }
    }
    let mut verdicts = Vec::new();
    for &budget in budgets {
        let find = |k| cells.iter().find(|c: &&ExperimentCell| c.model == k && c.budget == budget).expect("cell");
        let (sm, ss) = mean_std(&find(ModelKind::SingleBlock).final_losses());
        let (tm, ts) = mean_std(&find(ModelKind::TwoBlock).final_losses());
        let pooled = ((ss * ss + ts * ts) / 2.0).sqrt();
        verdicts.push(BudgetVerdict {
            budget,
            single_mean: sm,
            single_std: ss,
            two_mean: tm,
            two_std: ts,
            pooled_std: pooled,
            two_block_better: tm < sm,
            gap_exceeds_pooled_std: sm - tm > pooled,
        });
    }
    let diverged_runs = cells.iter().flat_map(|c| &c.runs).filter(|r| r.diverged).count();
    Ok(ExperimentReport { protocol: protocol.clone(), seeds: seeds.to_vec(), cells, verdicts, diverged_runs })
}

/// Values of the target, both trained models and their `∂_x` on a regular grid.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ContourRow {
    pub t: f64,
    pub x: f64,
    pub f: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub dx_f: f64,
    pub dx_phi1: f64,
    pub dx_phi2: f64,
}

pub fn contour_rows(single: &Network, two: &Network, points: usize) -> Result<Vec<ContourRow>> {
    if points < 2 {
        return usage("contour grid needs at least 2 points per axis");
    }
    let h = HeatTarget;
    let mut rows = Vec::with_capacity(points * points);
    for i in 0..points {
        let t = -1.0 + 2.0 * i as f64 / (points - 1) as f64;
        for k in 0..points {
            let x = -1.0 + 2.0 * k as f64 / (points - 1) as f64;
            rows.push(ContourRow {
                t,
                x,
                f: h.value(t, x),
                phi1: single.forward(t, x),
                phi2: two.forward(t, x),
                dx_f: h.dx(t, x),
                dx_phi1: single.partial_x(t, x, 1)?,
                dx_phi2: two.partial_x(t, x, 1)?,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RateReport {
    pub model: ModelKind,
    pub widths: Vec<usize>,
    /// Best `W^{1,2}_{0,2}` error (square root of the loss) per width.
    pub errors: Vec<f64>,
    pub slope: f64,
    /// 95% confidence half-width of the slope.
    pub slope_ci: f64,
    /// Best errors are nonincreasing in the width.
    pub monotone: bool,
    pub diverged_runs: usize,
}

/// Slope and its 95% half-width from a least-squares fit of `log y` on `log x`.
pub fn slope_with_ci(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len();
    let slope = log_log_slope(x, y);
    if n < 3 {
        return (slope, f64::INFINITY);
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / n as f64, ly.iter().sum::<f64>() / n as f64);
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let icept = my - slope * mx;
    let sse: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - icept - slope * a).powi(2)).sum();
    let se = (sse / (n as f64 - 2.0) / sxx).sqrt();
    (slope, student_t975(n - 2) * se)
}

fn student_t975(dof: usize) -> f64 {
    const T: [f64; 10] = [12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228];
    if dof == 0 {
        f64::INFINITY
    } else if dof <= T.len() {
        T[dof - 1]
    } else {
        1.96 + 2.4 / dof as f64
    }
}

/// Best-of-restarts errors over increasing widths with nested initialization:
/// each width starts from the best network of the previous width plus units
/// with zero outer weight, so the recorded error cannot increase.
pub fn rate_experiment(
    target: &LossTarget,
    widths: &[usize],
    spec: &SobolevLossSpec,
    protocol: &TrainProtocol,
    model: ModelKind,
    restarts: usize,
    seed: u64,
) -> Result<RateReport> {
    if widths.len() < 4 || widths.windows(2).any(|w| w[0] >= w[1]) || widths[0] == 0 {
        return usage("rate study needs at least 4 strictly increasing positive widths");
    }
    if restarts == 0 {
        return usage("rate study needs at least one restart");
    }
    let mut prev: Option<Network> = None;
    let mut errors = Vec::new();
    let mut diverged_runs = 0;
    for (wi, &n) in widths.iter().enumerate() {
        let mut best: Option<(f64, Network)> = None;
        for r in 0..restarts {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((wi * 1000 + r) as u64);
            let init = match &prev {
                None => Network::random(model, n, protocol.degrees(model), &mut rng),
                Some(p) => p.widened(n - p.width(), &mut rng),
            };
            let run = train(&init, target, spec, protocol.optimizer, protocol.steps, seed)?;
            diverged_runs += run.diverged as usize;
            let loss = sobolev_loss(&run.best, target, spec)?;
            if best.as_ref().is_none_or(|(b, _)| loss < *b) {
                best = Some((loss, run.best));
            }
        }
        let (loss, net) = best.expect("restarts ≥ 1");
        errors.push(loss.sqrt());
        prev = Some(net);
    }
    let xs: Vec<f64> = widths.iter().map(|&w| w as f64).collect();
    let (slope, slope_ci) = slope_with_ci(&xs, &errors);
    let monotone = errors.windows(2).all(|w| w[1] <= w[0]);
    Ok(RateReport { model, widths: widths.to_vec(), errors, slope, slope_ci, monotone, diverged_runs })
}

/// Fails with a resolution error when a best-error sequence is not monotone.
pub fn require_monotone(r: &RateReport) -> Result<()> {
    if r.monotone {
        Ok(())
    } else {
        Err(Error::Resolution(format!("best errors increase with width: {:?}", r.errors)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> SobolevLossSpec {
        SobolevLossSpec::new(16).unwrap()
    }

    #[test]
    fn dead_units_output_bias() {
        let mut net = Network::SingleBlock(SingleBlockNet::zeros(3, 2));
        let mut p = net.params();
        *p.last_mut().unwrap() = 0.7;
        net.set_params(&p).unwrap();
        assert_eq!(net.forward(0.3, -0.2), 0.7);
        assert_eq!(net.partial_x(0.3, -0.2, 1).unwrap(), 0.0);
    }

    #[test]
    fn two_block_hand_value() {
        let net = Network::TwoBlock(TwoBlockNet {
            w: vec![1.0],
            w_t: vec![1.0],
            w_x: vec![1.0],
            b_t: vec![1.0],
            b_x: vec![0.0],
            c: 0.0,
            m1: 1,
            m2: 2,
        });
        assert_eq!(net.forward(0.0, 1.0), 1.0);
        assert_eq!(net.partial_x(0.0, 1.0, 1).unwrap(), 2.0);
        assert!(net.partial_x(0.0, 1.0, 3).is_err());
    }

    #[test]
    fn parameter_counts_and_budgets() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for n in [1, 7, 50] {
            assert_eq!(Network::random(ModelKind::SingleBlock, n, (0, 2), &mut rng).params().len(), 4 * n + 1);
            assert_eq!(Network::random(ModelKind::TwoBlock, n, (1, 2), &mut rng).params().len(), 5 * n + 1);
        }
        assert_eq!(ModelKind::SingleBlock.width_for_budget(201).unwrap(), 50);
        assert_eq!(ModelKind::TwoBlock.width_for_budget(201).unwrap(), 40);
        assert_eq!(ModelKind::SingleBlock.width_for_budget(401).unwrap(), 100);
        assert_eq!(ModelKind::TwoBlock.width_for_budget(401).unwrap(), 80);
        assert!(ModelKind::TwoBlock.width_for_budget(203).is_err());
    }

    #[test]
    fn params_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Network::random(ModelKind::TwoBlock, 4, (1, 2), &mut rng);
        let mut other = Network::TwoBlock(TwoBlockNet::zeros(4, 1, 2));
        other.set_params(&net.params()).unwrap();
        assert_eq!(net, other);
    }

    #[test]
    fn partial_x_matches_central_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = 1e-6;
        for kind in [ModelKind::SingleBlock, ModelKind::TwoBlock] {
            let net = Network::random(kind, 6, (1, 2), &mut rng);
            for _ in 0..50 {
                let (t, x) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                let fd = (net.forward(t, x + h) - net.forward(t, x - h)) / (2.0 * h);
                assert!((fd - net.partial_x(t, x, 1).unwrap()).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn loss_of_exact_model_is_zero() {
        let spec = small_spec();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Network::random(ModelKind::TwoBlock, 5, (1, 2), &mut rng);
        let target = LossTarget::from_fn(&spec.quad, |t, x| net.forward(t, x), |t, x| net.partial_x(t, x, 1).unwrap());
        let (l, g) = loss_gradient(&net, &target, &spec).unwrap();
        assert!(l < 1e-28);
        assert!(g.iter().all(|v| v.abs() < 1e-13));
        let zero = Network::SingleBlock(SingleBlockNet::zeros(2, 2));
        let zt = LossTarget::from_fn(&spec.quad, |_, _| 0.0, |_, _| 0.0);
        assert_eq!(sobolev_loss(&zero, &zt, &spec).unwrap(), 0.0);
    }

    #[test]
    fn bias_gradient_is_twice_residual_integral() {
        let spec = small_spec();
        let target = HeatTarget.sample(&spec.quad);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = Network::random(ModelKind::SingleBlock, 5, (0, 2), &mut rng);
        let (_, g) = loss_gradient(&net, &target, &spec).unwrap();
        let q = &spec.quad;
        let n = q.nodes.len();
        let mut s = 0.0;
        for i in 0..n {
            for k in 0..n {
                s += q.weights[i] * q.weights[k] * (net.forward(q.nodes[i], q.nodes[k]) - target.values[i * n + k]);
            }
        }
        assert!((g.last().unwrap() - 2.0 * s).abs() < 1e-12);
    }

    #[test]
    fn loss_is_permutation_invariant() {
        let spec = small_spec();
        let target = HeatTarget.sample(&spec.quad);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = Network::random(ModelKind::TwoBlock, 6, (1, 2), &mut rng);
        let mut p = net.params();
        for chunk in p[..30].chunks_mut(6) {
            chunk.reverse();
        }
        let mut perm = net.clone();
        perm.set_params(&p).unwrap();
        let a = sobolev_loss(&net, &target, &spec).unwrap();
        let b = sobolev_loss(&perm, &target, &spec).unwrap();
        assert!((a - b).abs() < 1e-13 * a);
    }

    #[test]
    fn zero_learning_rate_keeps_loss() {
        let spec = small_spec();
        let target = HeatTarget.sample(&spec.quad);
        let proto = TrainProtocol::default();
        let init = proto.init(ModelKind::SingleBlock, 4, 9);
        let run = train(&init, &target, &spec, Optimizer::GradientDescent { lr: 0.0 }, 20, 9).unwrap();
        assert!(run.loss_trace.windows(2).all(|w| w[0] == w[1]));
        let run = train(&init, &target, &spec, Optimizer::adam(1e-2), 50, 9).unwrap();
        assert!(run.smoothed_trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(run.final_smoothed() < run.loss_trace[0]);
    }

    #[test]
    fn divergence_is_flagged() {
        let spec = small_spec();
        let target = HeatTarget.sample(&spec.quad);
        let init = TrainProtocol::default().init(ModelKind::SingleBlock, 4, 1);
        let run = train(&init, &target, &spec, Optimizer::GradientDescent { lr: 10.0 }, 100, 1).unwrap();
        assert!(run.diverged);
        assert!(run.loss_trace.len() < 101);
    }

    #[test]
    fn training_is_reproducible() {
        let spec = small_spec();
        let target = HeatTarget.sample(&spec.quad);
        let proto = TrainProtocol::default();
        let a = train(&proto.init(ModelKind::TwoBlock, 3, 7), &target, &spec, Optimizer::adam(1e-2), 30, 7).unwrap();
        let b = train(&proto.init(ModelKind::TwoBlock, 3, 7), &target, &spec, Optimizer::adam(1e-2), 30, 7).unwrap();
        assert_eq!(a.loss_trace, b.loss_trace);
    }

    #[test]
    fn widened_network_is_the_same_function() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let net = Network::random(ModelKind::SingleBlock, 3, (0, 2), &mut rng);
        let wide = net.widened(5, &mut rng);
        assert_eq!(wide.width(), 8);
        for (t, x) in [(0.1, 0.2), (-0.7, 0.9)] {
            assert!((net.forward(t, x) - wide.forward(t, x)).abs() < 1e-15);
        }
    }

    #[test]
    fn unsupported_loss_orders_are_rejected() {
        let e = MixedExponents::new(2.0, 2.0).unwrap();
        assert!(SobolevLossSpec::with_orders(SobolevOrder::new(1, 1), e, 16).is_err());
        assert!(SobolevLossSpec::with_orders(SobolevOrder::new(0, 1), MixedExponents::new(2.0, 4.0).unwrap(), 16).is_err());
        assert!(SobolevLossSpec::new(15).is_err());
    }

    #[test]
    fn slope_ci_for_exact_power_law() {
        let x = [4.0, 8.0, 16.0, 32.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-0.5)).collect();
        let (s, ci) = slope_with_ci(&x, &y);
        assert!((s + 0.5).abs() < 1e-12);
        assert!(ci < 1e-10);
    }
}
