mod common;

use aniso_core::shallownet::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `∫∫_{[−1,1]²} f² + (∂_x f)²` for `f = e^{−|t|−|x|³}`, from an adaptive quadrature oracle.
const ZERO_MODEL_LOSS: f64 = 2.214442130330086;

fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + k as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn zero_model_loss_matches_oracle() {
    // |t| and |x|³ have kinks at 0, so integrate each half separately
    let half = |f: &dyn Fn(f64) -> f64| simpson(-1.0, 0.0, 20_000, f) + simpson(0.0, 1.0, 20_000, f);
    let t = half(&|t: f64| (-2.0 * t.abs()).exp());
    let x = half(&|x: f64| (-2.0 * x.abs().powi(3)).exp());
    let dx = half(&|x: f64| 9.0 * x.powi(4) * (-2.0 * x.abs().powi(3)).exp());
    assert!((t * (x + dx) - ZERO_MODEL_LOSS).abs() < 1e-12);

    let spec = SobolevLossSpec::new(256).unwrap();
    let zero = Network::TwoBlock(TwoBlockNet::zeros(3, 1, 2));
    let loss = sobolev_loss(&zero, &HeatTarget.sample(&spec.quad), &spec).unwrap();
    assert!((loss - ZERO_MODEL_LOSS).abs() < 2e-5 * ZERO_MODEL_LOSS, "{loss}");
}

#[test]
fn heat_target_solves_its_equation() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let h = HeatTarget;
    for _ in 0..10_000 {
        let (t, x): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        if t == 0.0 || x == 0.0 {
            continue;
        }
        assert!(h.pde_residual(t, x).abs() < 1e-12);
    }
}

#[test]
fn heat_target_derivatives_match_differences() {
    let h = HeatTarget;
    let e = 1e-6;
    for (t, x) in [(0.3, 0.4), (-0.6, -0.2), (0.9, -0.8)] {
        let fx = (h.value(t, x + e) - h.value(t, x - e)) / (2.0 * e);
        let ft = (h.value(t + e, x) - h.value(t - e, x)) / (2.0 * e);
        let fxx = (h.dx(t, x + e) - h.dx(t, x - e)) / (2.0 * e);
        assert!((fx - h.dx(t, x)).abs() < 1e-8);
        assert!((ft - h.dt(t, x)).abs() < 1e-8);
        assert!((fxx - h.dxx(t, x)).abs() < 1e-7);
    }
}

#[test]
fn single_block_gradient_matches_differences() {
    let worst = common::gradient_check(ModelKind::SingleBlock, (0, 2), 100);
    assert!(worst <= 1e-5, "{worst}");
}

#[test]
fn two_block_gradient_matches_differences() {
    let worst = common::gradient_check(ModelKind::TwoBlock, (1, 2), 100);
    assert!(worst <= 1e-5, "{worst}");
}

#[test]
fn short_protocol_reports_every_cell() {
    let proto = TrainProtocol { steps: 5, quad_intervals: 8, ..Default::default() };
    let r = budget_comparison(&[21], &[0, 1, 2], &proto).unwrap();
    assert_eq!(r.cell(ModelKind::SingleBlock, 21).unwrap().width, 5);
    assert_eq!(r.cell(ModelKind::TwoBlock, 21).unwrap().width, 4);
    for c in &r.cells {
        assert_eq!(c.runs.len(), 3);
        assert_eq!(c.log_loss_band().len(), 6);
    }
    assert_eq!(r.verdicts.len(), 1);
    assert!(budget_comparison(&[23], &[0], &proto).is_err());
}

#[test]
fn representable_target_is_recovered() {
    let spec = SobolevLossSpec::new(16).unwrap();
    let proto = TrainProtocol::default();
    let teacher = proto.init(ModelKind::TwoBlock, 3, 42);
    let target = LossTarget::from_fn(&spec.quad, |t, x| teacher.forward(t, x), |t, x| teacher.partial_x(t, x, 1).unwrap());
    // widths at least as large as the teacher contain it exactly
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = teacher.widened(1, &mut rng);
    assert!(sobolev_loss(&start, &target, &spec).unwrap().sqrt() < 1e-6);
}

#[test]
fn nested_rate_study_is_monotone() {
    let spec = SobolevLossSpec::new(16).unwrap();
    let proto = TrainProtocol { steps: 200, optimizer: Optimizer::adam(1e-2), ..Default::default() };
    let target = gaussian_target(&spec.quad);
    let r = rate_experiment(&target, &[2, 4, 8, 16], &spec, &proto, ModelKind::TwoBlock, 2, 3).unwrap();
    assert!(r.monotone, "{:?}", r.errors);
    assert!(require_monotone(&r).is_ok());
    assert!(rate_experiment(&target, &[2, 4, 8], &spec, &proto, ModelKind::TwoBlock, 1, 3).is_err());
}

#[test]
fn contour_rows_cover_grid() {
    let proto = TrainProtocol::default();
    let a = proto.init(ModelKind::SingleBlock, 3, 0);
    let b = proto.init(ModelKind::TwoBlock, 3, 0);
    let rows = contour_rows(&a, &b, 5).unwrap();
    assert_eq!(rows.len(), 25);
    assert_eq!((rows[0].t, rows[0].x), (-1.0, -1.0));
    assert_eq!((rows[24].t, rows[24].x), (1.0, 1.0));
}
