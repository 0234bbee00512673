#![allow(dead_code, clippy::needless_range_loop)]

use aniso_core::shallownet::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Smallest |pre-activation| over all units and quadrature nodes.
pub fn kink_distance(net: &Network, nodes: &[f64]) -> f64 {
    let mut d = f64::INFINITY;
    match net {
        Network::SingleBlock(s) => {
            for j in 0..s.w.len() {
                for &t in nodes {
                    for &x in nodes {
                        d = d.min((s.w_t[j] * t + s.w_x[j] * x + s.b[j]).abs());
                    }
                }
            }
        }
        Network::TwoBlock(s) => {
            for j in 0..s.w.len() {
                for &v in nodes {
                    d = d.min((s.w_t[j] * v + s.b_t[j]).abs()).min((s.w_x[j] * v + s.b_x[j]).abs());
                }
            }
        }
    }
    d
}

/// `(L(p + h·e_i) − L(p − h·e_i)) / 2h`, formed node by node so the large
/// loss values cancel before summation.
pub fn central_difference(net: &Network, target: &LossTarget, spec: &SobolevLossSpec, i: usize, h: f64) -> f64 {
    let p = net.params();
    let shifted = |d: f64| {
        let mut q = p.clone();
        q[i] += d;
        let mut n = net.clone();
        n.set_params(&q).unwrap();
        n
    };
    let (plus, minus) = (shifted(h), shifted(-h));
    let q = &spec.quad;
    let m = q.nodes.len();
    let mut s = 0.0;
    for a in 0..m {
        for b in 0..m {
            let (t, x) = (q.nodes[a], q.nodes[b]);
            let k = a * m + b;
            let (fp, fm) = (plus.forward(t, x), minus.forward(t, x));
            let (dp, dm) = (plus.partial_x(t, x, 1).unwrap(), minus.partial_x(t, x, 1).unwrap());
            let v = (fp - fm) * (fp + fm - 2.0 * target.values[k]) + (dp - dm) * (dp + dm - 2.0 * target.dx[k]);
            s += q.weights[a] * q.weights[b] * v;
        }
    }
    s / (2.0 * h)
}

/// Largest relative gap between analytic and Richardson-extrapolated
/// difference gradients over `points` kink-free random networks of width 4.
pub fn gradient_check(kind: ModelKind, degrees: (u32, u32), points: usize) -> f64 {
    let spec = SobolevLossSpec::new(16).unwrap();
    let target = HeatTarget.sample(&spec.quad);
    let mut rng = ChaCha8Rng::seed_from_u64(kind as u64 + 100);
    let h = 1e-5;
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    while checked < points {
        let net = Network::random(kind, 4, degrees, &mut rng);
        // the Richardson stencil moves pre-activations by at most 6h
        if kink_distance(&net, &spec.quad.nodes) < 1e-4 {
            continue;
        }
        let (_, g) = loss_gradient(&net, &target, &spec).unwrap();
        let gmax = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for i in 0..g.len() {
            let fd = (4.0 * central_difference(&net, &target, &spec, i, h)
                - central_difference(&net, &target, &spec, i, 2.0 * h))
                / 3.0;
            // coordinates far below the gradient scale are limited by rounding, not by the derivative
            let scale = g[i].abs().max(fd.abs()).max(1e-4 * gmax);
            worst = worst.max((g[i] - fd).abs() / scale);
        }
        checked += 1;
    }
    worst
}
