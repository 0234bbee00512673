//! Bounded domains, mollifiers and Fourier integrability of characteristic functions.
//!
//! A [`Domain`] is a hyperrectangle, a ball or a finite union of
//! hyperrectangles. Besides geometry (volume, radius, boundary layers) it
//! knows the closed-form Fourier transform of its characteristic function,
//! which [`char_fl_norm`] integrates to get `‖𝔉χ_Ω‖_{L^s}`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{usage, Error, Result};
use crate::grid::{raw_fft_nd, Axis, GridFunction, TensorGrid};
use crate::special::{bessel_j_scaled, dyadic_shells, unit_ball_volume, unit_sphere_area, GaussRule};

/// Axis-aligned box `Π [lo_a, hi_a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cuboid {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Cuboid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::Domain("box corners have mismatched or zero dimension".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && b > a)) {
            return Err(Error::Domain(format!("box {lo:?}..{hi:?} has empty interior")));
        }
        Ok(Cuboid { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).collect()
    }

    pub fn volume(&self) -> f64 {
        self.widths().iter().product()
    }

    fn radius(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| (a * a).max(b * b)).sum::<f64>().sqrt()
    }

    /// Product of per-axis indicators with value `1/2` on a face.
    fn indicator(&self, x: &[f64]) -> f64 {
        let mut v = 1.0;
        for ((&c, &a), &b) in x.iter().zip(&self.lo).zip(&self.hi) {
            let tol = 1e-12 * (b - a);
            if c < a - tol || c > b + tol {
                return 0.0;
            }
            if (c - a).abs() <= tol || (c - b).abs() <= tol {
                v *= 0.5;
            }
        }
        v
    }

    fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.lo).zip(&self.hi).all(|((&c, &a), &b)| c >= a && c <= b)
    }

    fn distance_outside(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.lo)
            .zip(&self.hi)
            .map(|((&c, &a), &b)| (a - c).max(c - b).max(0.0).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn distance_inside(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.lo).zip(&self.hi).map(|((&c, &a), &b)| (c - a).min(b - c)).fold(f64::INFINITY, f64::min)
    }

    /// `(2π)^{-1/2} ∫_{lo}^{hi} e^{-iξx} dx` along one axis.
    fn axis_transform(&self, axis: usize, xi: f64) -> Complex64 {
        let (a, b) = (self.lo[axis], self.hi[axis]);
        let w = b - a;
        let c = 0.5 * (a + b);
        Complex64::from_polar(w * sinc(0.5 * xi * w) / (2.0 * PI).sqrt(), -xi * c)
    }

    fn transform(&self, xi: &[f64]) -> Complex64 {
        xi.iter().enumerate().fold(Complex64::new(1.0, 0.0), |acc, (a, &x)| acc * self.axis_transform(a, x))
    }

    /// Quadrature weights `|[x_j − h/2, x_j + h/2] ∩ [lo, hi]|` per axis, periodically wrapped.
    fn axis_overlaps(&self, axis: usize, ax: &Axis) -> Vec<f64> {
        let (lo, hi) = (self.lo[axis], self.hi[axis]);
        let h = ax.spacing();
        let l = ax.length();
        (0..ax.points)
            .map(|j| {
                let x = ax.coord(j);
                [-l, 0.0, l]
                    .iter()
                    .map(|s| ((x + s + 0.5 * h).min(hi) - (x + s - 0.5 * h).max(lo)).max(0.0))
                    .sum()
            })
            .collect()
    }
}

fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-8 {
        1.0 - u * u / 6.0
    } else {
        u.sin() / u
    }
}

/// Disjoint cell decomposition of a union of boxes by coordinate compression.
#[derive(Debug, Clone, PartialEq)]
struct Cells {
    inside: Vec<Cuboid>,
    outside: Vec<Cuboid>,
    hull: Cuboid,
    breaks: Vec<Vec<f64>>,
}

impl Cells {
    fn new(rects: &[Cuboid]) -> Self {
        let d = rects[0].dim();
        let breaks: Vec<Vec<f64>> = (0..d)
            .map(|a| {
                let mut v: Vec<f64> = rects.iter().flat_map(|r| [r.lo[a], r.hi[a]]).collect();
                v.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
                v.dedup();
                v
            })
            .collect();
        let counts: Vec<usize> = breaks.iter().map(|b| b.len() - 1).collect();
        let total: usize = counts.iter().product();
        let (mut inside, mut outside) = (Vec::new(), Vec::new());
        let mut idx = vec![0; d];
        for flat in 0..total {
            let mut rem = flat;
            for a in (0..d).rev() {
                idx[a] = rem % counts[a];
                rem /= counts[a];
            }
            let lo: Vec<f64> = (0..d).map(|a| breaks[a][idx[a]]).collect();
            let hi: Vec<f64> = (0..d).map(|a| breaks[a][idx[a] + 1]).collect();
            let mid: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
            let cell = Cuboid { lo, hi };
            if rects.iter().any(|r| r.contains(&mid)) {
                inside.push(cell);
            } else {
                outside.push(cell);
            }
        }
        let hull = Cuboid {
            lo: breaks.iter().map(|b| b[0]).collect(),
            hi: breaks.iter().map(|b| *b.last().expect("nonempty")).collect(),
        };
        Cells { inside, outside, hull, breaks }
    }

    /// Fraction of the cells meeting at `x` that belong to the union.
    fn indicator(&self, x: &[f64]) -> f64 {
        let d = x.len();
        let mut probes: Vec<Vec<f64>> = vec![x.to_vec()];
        for a in 0..d {
            let scale = self.hull.hi[a] - self.hull.lo[a];
            if self.breaks[a].iter().any(|&b| (x[a] - b).abs() <= 1e-12 * scale) {
                let eps = 1e-9 * scale;
                probes = probes
                    .into_iter()
                    .flat_map(|p| {
                        let mut m = p.clone();
                        let mut q = p;
                        m[a] -= eps;
                        q[a] += eps;
                        [m, q]
                    })
                    .collect();
            }
        }
        let n = probes.len() as f64;
        probes.iter().filter(|p| self.inside.iter().any(|c| c.contains(p))).count() as f64 / n
    }

    fn distance_to_boundary(&self, x: &[f64]) -> f64 {
        let inside = self.inside.iter().any(|c| c.contains(x));
        if inside {
            let to_hull = self.hull.distance_inside(x);
            self.outside.iter().map(|c| c.distance_outside(x)).fold(to_hull, f64::min)
        } else {
            self.inside.iter().map(|c| c.distance_outside(x)).fold(f64::INFINITY, f64::min)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Rect(Cuboid),
    Ball { center: Vec<f64>, radius: f64 },
    Union(Vec<Cuboid>),
}

/// Bounded domain with nonempty interior.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    shape: Shape,
    cells: Option<Cells>,
}

impl Domain {
    pub fn rect(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        Ok(Domain { shape: Shape::Rect(Cuboid::new(lo, hi)?), cells: None })
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Domain::rect(vec![a], vec![b])
    }

    /// `[a, b]^d`.
    pub fn cube(d: usize, a: f64, b: f64) -> Result<Self> {
        Domain::rect(vec![a; d], vec![b; d])
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() || !(radius > 0.0 && radius.is_finite()) || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain(format!("ball of radius {radius} around {center:?} is not a bounded open set")));
        }
        Ok(Domain { shape: Shape::Ball { center, radius }, cells: None })
    }

    pub fn union(rects: Vec<Cuboid>) -> Result<Self> {
        if rects.is_empty() {
            return Err(Error::Domain("union of no boxes".into()));
        }
        let d = rects[0].dim();
        if rects.iter().any(|r| r.dim() != d) {
            return Err(Error::Domain("union of boxes of different dimensions".into()));
        }
        let cells = Cells::new(&rects);
        Ok(Domain { shape: Shape::Union(rects), cells: Some(cells) })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        match &self.shape {
            Shape::Rect(r) => r.dim(),
            Shape::Ball { center, .. } => center.len(),
            Shape::Union(rs) => rs[0].dim(),
        }
    }

    pub fn volume(&self) -> f64 {
        match &self.shape {
            Shape::Rect(r) => r.volume(),
            Shape::Ball { center, radius } => unit_ball_volume(center.len()) * radius.powi(center.len() as i32),
            Shape::Union(_) => self.cells().inside.iter().map(Cuboid::volume).sum(),
        }
    }

    /// `sup_{x∈Ω} |x|`.
    pub fn radius(&self) -> f64 {
        match &self.shape {
            Shape::Rect(r) => r.radius(),
            Shape::Ball { center, radius } => center.iter().map(|c| c * c).sum::<f64>().sqrt() + radius,
            Shape::Union(rs) => rs.iter().map(Cuboid::radius).fold(0.0, f64::max),
        }
    }

    pub fn bounding_box(&self) -> Cuboid {
        match &self.shape {
            Shape::Rect(r) => r.clone(),
            Shape::Ball { center, radius } => Cuboid {
                lo: center.iter().map(|c| c - radius).collect(),
                hi: center.iter().map(|c| c + radius).collect(),
            },
            Shape::Union(_) => self.cells().hull.clone(),
        }
    }

    fn cells(&self) -> &Cells {
        self.cells.as_ref().expect("unions carry their cell decomposition")
    }

    /// Characteristic function with value `1/2` on faces (`1/4` at box corners, and so on).
    pub fn indicator(&self, x: &[f64]) -> f64 {
        match &self.shape {
            Shape::Rect(r) => r.indicator(x),
            Shape::Ball { center, radius } => {
                let r = x.iter().zip(center).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt();
                let tol = 1e-12 * radius;
                if (r - radius).abs() <= tol {
                    0.5
                } else if r < *radius {
                    1.0
                } else {
                    0.0
                }
            }
            Shape::Union(_) => self.cells().indicator(x),
        }
    }

    /// Euclidean distance from `x` to `∂Ω`.
    pub fn distance_to_boundary(&self, x: &[f64]) -> f64 {
        match &self.shape {
            Shape::Rect(r) => {
                if r.contains(x) {
                    r.distance_inside(x)
                } else {
                    r.distance_outside(x)
                }
            }
            Shape::Ball { center, radius } => {
                let r = x.iter().zip(center).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt();
                (r - radius).abs()
            }
            Shape::Union(_) => self.cells().distance_to_boundary(x),
        }
    }

    /// `(2π)^{-d/2} ∫_Ω e^{-i⟨x,ξ⟩} dx` in closed form.
    pub fn fourier_transform(&self, xi: &[f64]) -> Complex64 {
        match &self.shape {
            Shape::Rect(r) => r.transform(xi),
            Shape::Ball { center, radius } => {
                let d = center.len();
                let rho = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
                let phase: f64 = center.iter().zip(xi).map(|(c, x)| c * x).sum();
                let amp = radius.powi(d as i32) * bessel_j_scaled(0.5 * d as f64, radius * rho);
                Complex64::from_polar(amp, -phase)
            }
            Shape::Union(_) => self.cells().inside.iter().map(|c| c.transform(xi)).sum(),
        }
    }

    /// Fails unless the domain's bounding box lies within the axes' windows.
    pub fn check_in_window(&self, axes: &[Axis], margin: f64) -> Result<()> {
        if axes.len() != self.dim() {
            return Err(Error::Domain(format!("{}-dimensional domain on {} axes", self.dim(), axes.len())));
        }
        let bb = self.bounding_box();
        for (a, ax) in axes.iter().enumerate() {
            if bb.lo[a] - margin < ax.lower - 1e-12 || bb.hi[a] + margin > ax.upper + 1e-12 {
                return Err(Error::Domain(format!(
                    "{self} (with margin {margin}) leaves the window [{}, {}) on axis {a}",
                    ax.lower, ax.upper
                )));
            }
        }
        Ok(())
    }

    /// Row-major quadrature weights of `∫_Ω · dx` at the sample points of `axes`.
    ///
    /// Boxes use the exact overlap of each sample cell with the box, so for
    /// grid-aligned boxes the rule is the trapezoidal rule with half weights on
    /// faces. Balls use the indicator times the cell volume.
    pub fn quadrature_weights(&self, axes: &[Axis]) -> Result<Vec<f64>> {
        self.check_in_window(axes, 0.0)?;
        let boxes: Vec<&Cuboid> = match &self.shape {
            Shape::Rect(r) => vec![r],
            Shape::Union(_) => self.cells().inside.iter().collect(),
            Shape::Ball { .. } => Vec::new(),
        };
        let len: usize = axes.iter().map(|a| a.points).product();
        let mut w = vec![0.0; len];
        let mut idx = vec![0; axes.len()];
        if boxes.is_empty() {
            let cell: f64 = axes.iter().map(Axis::spacing).product();
            let mut x = vec![0.0; axes.len()];
            for (flat, wk) in w.iter_mut().enumerate() {
                unravel(axes, flat, &mut idx);
                for (a, ax) in axes.iter().enumerate() {
                    x[a] = ax.coord(idx[a]);
                }
                *wk = self.indicator(&x) * cell;
            }
        } else {
            for b in boxes {
                let per_axis: Vec<Vec<f64>> = axes.iter().enumerate().map(|(a, ax)| b.axis_overlaps(a, ax)).collect();
                for (flat, wk) in w.iter_mut().enumerate() {
                    unravel(axes, flat, &mut idx);
                    *wk += idx.iter().enumerate().map(|(a, &j)| per_axis[a][j]).product::<f64>();
                }
            }
        }
        if w.iter().all(|&v| v == 0.0) {
            return Err(Error::Domain(format!("{self} contains no grid points")));
        }
        Ok(w)
    }

    /// Parses `rect(a,b;c,d)`, `ball(c1,c2;r)`, `ball(0;1)@d=2` and unions `rect(..)+rect(..)`.
    ///
    /// ```
    /// use aniso_core::domains::Domain;
    /// let u = Domain::parse("rect(-1,1;-1,1)").unwrap();
    /// assert_eq!(u.volume(), 4.0);
    /// let b = Domain::parse("ball(0;1)@d=2").unwrap();
    /// assert!((b.volume() - std::f64::consts::PI).abs() < 1e-14);
    /// ```
    pub fn parse(expr: &str) -> Result<Self> {
        let expr = expr.trim();
        if expr.contains('+') {
            let rects = expr
                .split('+')
                .map(|part| match Domain::parse(part)?.shape {
                    Shape::Rect(r) => Ok(r),
                    _ => Err(Error::Parse(format!("union member `{part}` is not a rect"))),
                })
                .collect::<Result<Vec<_>>>()?;
            return Domain::union(rects);
        }
        let (body, dim) = match expr.split_once('@') {
            Some((b, tag)) => {
                let d = tag
                    .trim()
                    .strip_prefix("d=")
                    .and_then(|v| v.trim().parse::<usize>().ok())
                    .ok_or_else(|| Error::Parse(format!("bad dimension tag `@{tag}`")))?;
                (b.trim(), Some(d))
            }
            None => (expr, None),
        };
        let open = body.find('(').ok_or_else(|| Error::Parse(format!("domain `{expr}` has no argument list")))?;
        if !body.ends_with(')') {
            return Err(Error::Parse(format!("domain `{expr}` is missing `)`")));
        }
        let name = body[..open].trim();
        let groups: Vec<Vec<f64>> = body[open + 1..body.len() - 1]
            .split(';')
            .map(|g| {
                g.split(',')
                    .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("`{s}` in `{expr}`: {e}"))))
                    .collect()
            })
            .collect::<Result<_>>()?;
        match name {
            "rect" => {
                if groups.iter().any(|g| g.len() != 2) {
                    return Err(Error::Parse(format!("rect needs `lo,hi` per axis in `{expr}`")));
                }
                let d = dim.unwrap_or(groups.len());
                let groups = broadcast(groups, d, expr)?;
                Domain::rect(groups.iter().map(|g| g[0]).collect(), groups.iter().map(|g| g[1]).collect())
            }
            "ball" => {
                if groups.len() != 2 || groups[1].len() != 1 {
                    return Err(Error::Parse(format!("ball needs `center;radius` in `{expr}`")));
                }
                let mut center = groups[0].clone();
                if let Some(d) = dim {
                    if center.len() == 1 {
                        center = vec![center[0]; d];
                    } else if center.len() != d {
                        return Err(Error::Parse(format!("center of `{expr}` does not have {d} coordinates")));
                    }
                }
                Domain::ball(center, groups[1][0])
            }
            other => Err(Error::Parse(format!("unknown domain shape `{other}`"))),
        }
    }
}

fn broadcast(groups: Vec<Vec<f64>>, d: usize, expr: &str) -> Result<Vec<Vec<f64>>> {
    if groups.len() == d {
        Ok(groups)
    } else if groups.len() == 1 {
        Ok(vec![groups[0].clone(); d])
    } else {
        Err(Error::Parse(format!("`{expr}` has {} axes, expected {d}", groups.len())))
    }
}

fn unravel(axes: &[Axis], mut flat: usize, idx: &mut [usize]) {
    for a in (0..axes.len()).rev() {
        idx[a] = flat % axes[a].points;
        flat /= axes[a].points;
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn rect(f: &mut fmt::Formatter<'_>, r: &Cuboid) -> fmt::Result {
            let parts: Vec<String> = r.lo.iter().zip(&r.hi).map(|(a, b)| format!("{a},{b}")).collect();
            write!(f, "rect({})", parts.join(";"))
        }
        match &self.shape {
            Shape::Rect(r) => rect(f, r),
            Shape::Ball { center, radius } => {
                let c: Vec<String> = center.iter().map(|v| v.to_string()).collect();
                write!(f, "ball({};{radius})", c.join(","))
            }
            Shape::Union(rs) => {
                for (i, r) in rs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "+")?;
                    }
                    rect(f, r)?;
                }
                Ok(())
            }
        }
    }
}

/// Unnormalized bump `φ(x) = exp(−1/(1 − |x|²))` on the unit ball, given `|x|²`.
pub fn bump(r2: f64) -> f64 {
    if r2 < 1.0 {
        (-1.0 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

fn radial_integral(d: usize, f: impl Fn(f64) -> f64) -> f64 {
    let rule = GaussRule::new(20);
    unit_sphere_area(d) * rule.integrate_uniform(0.0, 1.0, 1.0 / 64.0, |r| r.powi(d as i32 - 1) * f(r))
}

/// `ρ_ε(x) = ε^{-d} φ(x/ε) / ‖φ‖_{L¹}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mollifier {
    pub epsilon: f64,
    pub dim: usize,
}

impl Mollifier {
    pub fn new(epsilon: f64, dim: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) || dim == 0 {
            return usage(format!("mollifier needs ε > 0 and d ≥ 1, got ε = {epsilon}, d = {dim}"));
        }
        Ok(Mollifier { epsilon, dim })
    }

    /// `‖φ‖_{L¹(ℝ^d)}` by radial Gauss–Legendre quadrature.
    pub fn bump_mass(dim: usize) -> f64 {
        radial_integral(dim, |r| bump(r * r))
    }

    /// Continuum density `ρ_ε(x)`.
    pub fn density(&self, x: &[f64]) -> f64 {
        let r2 = x.iter().map(|v| v * v).sum::<f64>() / (self.epsilon * self.epsilon);
        bump(r2) / (Mollifier::bump_mass(self.dim) * self.epsilon.powi(self.dim as i32))
    }

    /// Continuum `‖ρ_ε‖_{L²}`.
    pub fn l2_norm(&self) -> f64 {
        let m = Mollifier::bump_mass(self.dim);
        let e2 = radial_integral(self.dim, |r| bump(r * r).powi(2));
        e2.sqrt() / m * self.epsilon.powf(-0.5 * self.dim as f64)
    }

    fn check_resolution(&self, grid: &TensorGrid) -> Result<()> {
        if grid.dim() != self.dim {
            return usage(format!("{}-dimensional mollifier on a {}-dimensional grid", self.dim, grid.dim()));
        }
        for (a, ax) in grid.axes().iter().enumerate() {
            let cells = 2.0 * self.epsilon / ax.spacing();
            if cells < 8.0 {
                return Err(Error::Resolution(format!(
                    "ε = {} spans {cells:.2} cells on axis {a}; at least 8 are needed",
                    self.epsilon
                )));
            }
        }
        Ok(())
    }

    /// Samples of `φ(x/ε)` at signed offsets `j·h`, wrapped periodically, normalized to discrete mass one.
    fn wrapped_kernel(&self, grid: &TensorGrid) -> Vec<f64> {
        let axes = grid.axes();
        let mut idx = vec![0; axes.len()];
        let mut raw: Vec<f64> = (0..grid.len())
            .map(|flat| {
                grid.unravel(flat, &mut idx);
                let r2: f64 = idx
                    .iter()
                    .zip(axes)
                    .map(|(&j, ax)| {
                        let k = if j < ax.points / 2 { j as f64 } else { j as f64 - ax.points as f64 };
                        (k * ax.spacing() / self.epsilon).powi(2)
                    })
                    .sum();
                bump(r2)
            })
            .collect();
        let mass: f64 = raw.iter().sum::<f64>() * grid.cell_volume();
        raw.iter_mut().for_each(|v| *v /= mass);
        raw
    }
}

/// Samples `ρ_ε` on `grid` (centered at the origin), normalized to unit quadrature mass.
///
/// ```
/// use aniso_core::domains::{mollifier_sample, Mollifier};
/// use aniso_core::grid::TensorGrid;
/// let grid = TensorGrid::uniform(1, 0, -1.0, 1.0, 256).unwrap();
/// let rho = mollifier_sample(&Mollifier::new(0.1, 1).unwrap(), &grid).unwrap();
/// let mass: f64 = rho.real_parts().iter().sum::<f64>() * grid.cell_volume();
/// assert!((mass - 1.0).abs() < 1e-12);
/// ```
pub fn mollifier_sample(m: &Mollifier, grid: &TensorGrid) -> Result<GridFunction> {
    m.check_resolution(grid)?;
    let origin: Vec<f64> = vec![0.0; grid.dim()];
    let zero_cell = Cuboid { lo: origin.iter().map(|o| o - m.epsilon).collect(), hi: vec![m.epsilon; grid.dim()] };
    for (a, ax) in grid.axes().iter().enumerate() {
        if zero_cell.lo[a] < ax.lower || zero_cell.hi[a] >= ax.upper {
            return Err(Error::Domain(format!("support [−ε, ε] leaves the window on axis {a}")));
        }
    }
    let mut vals: Vec<f64> = (0..grid.len()).map(|k| bump(norm2(&grid.coords(k)) / (m.epsilon * m.epsilon))).collect();
    let mass: f64 = vals.iter().sum::<f64>() * grid.cell_volume();
    vals.iter_mut().for_each(|v| *v /= mass);
    GridFunction::from_real(grid.clone(), vals)
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// `χ_Ω ∗ ρ_ε` sampled on `grid`, computed by periodic FFT convolution.
///
/// The kernel is normalized to unit discrete mass, so the result is exactly
/// one at grid points whose ε-neighborhood lies in Ω and exactly zero at points
/// farther than ε from Ω (up to rounding, which is clamped away).
pub fn smooth_characteristic(omega: &Domain, epsilon: f64, grid: &TensorGrid) -> Result<GridFunction> {
    let m = Mollifier::new(epsilon, omega.dim())?;
    m.check_resolution(grid)?;
    let h_max = grid.spacing().into_iter().fold(0.0, f64::max);
    omega.check_in_window(grid.axes(), epsilon + h_max)?;
    let n = grid.len();
    let mut chi: Vec<Complex64> =
        (0..n).map(|k| Complex64::new(omega.indicator(&grid.coords(k)), 0.0)).collect();
    let mut ker: Vec<Complex64> = m.wrapped_kernel(grid).into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    let shape = grid.shape();
    raw_fft_nd(&shape, &mut chi, false);
    raw_fft_nd(&shape, &mut ker, false);
    for (c, k) in chi.iter_mut().zip(&ker) {
        *c *= k;
    }
    raw_fft_nd(&shape, &mut chi, true);
    let scale = grid.cell_volume() / n as f64;
    let vals = chi.into_iter().map(|v| (v.re * scale).clamp(0.0, 1.0)).collect();
    GridFunction::from_real(grid.clone(), vals)
}

/// Result of [`char_fl_norm`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CharNorm {
    /// `‖𝔉χ_Ω‖_{L^s}`; when divergent, the value of the truncated integral.
    pub value: f64,
    pub diverges: bool,
    /// Value at the grid's own frequency cutoff, before window doubling.
    pub value_at_cutoff: f64,
}

/// Panel count budget for the far-field shells of the one-dimensional integrals.
const MAX_PANELS: f64 = 131_072.0;

/// `2∫_0^∞ |g|^s` with panels of width `panel`, as dyadic shells starting at `k`.
fn half_line_norm(s: f64, k: f64, panel: f64, g: impl Fn(f64) -> f64) -> (f64, f64, bool) {
    let rule = GaussRule::new(16);
    let levels = ((MAX_PANELS * panel / k).log2().floor().max(3.0) as usize).min(40);
    let shells = dyadic_shells(k, levels, |a, b| {
        let n = ((b - a) / panel).ceil().max(1.0) as usize;
        let breaks: Vec<f64> = (0..=n).map(|j| a + (b - a) * j as f64 / n as f64).collect();
        2.0 * rule.integrate_panels(&breaks, |x| g(x).abs().powf(s))
    });
    let at_cutoff = shells.shells[0];
    let diverges = !(shells.ratio < 0.97)
        || !shells.value.is_finite()
        || shells.value.powf(1.0 / s) > 1.1 * shells.value_previous.powf(1.0 / s);
    (shells.value, at_cutoff, diverges)
}

/// `‖𝔉χ_Ω‖_{L^s(ℝ^d)}` for `s ∈ [1, ∞]`.
///
/// The integral starts on the grid's frequency window (cutoff `π/h`) and
/// continues over dyadic shells `[2^{j−1}K, 2^j K]` far beyond it, with the
/// remaining tail extrapolated geometrically from the last two shells. The
/// divergence flag is raised when the extrapolated value grows by more than
/// 10% when the outermost shell is added, or when the shells stop shrinking.
pub fn char_fl_norm(omega: &Domain, s: f64, grid: &TensorGrid) -> Result<CharNorm> {
    if !(s >= 1.0) {
        return usage(format!("exponent s = {s} outside [1, ∞]"));
    }
    omega.check_in_window(grid.axes(), 0.0)?;
    let d = omega.dim();
    if s.is_infinite() {
        let v = omega.volume() * (2.0 * PI).powf(-0.5 * d as f64);
        return Ok(CharNorm { value: v, diverges: false, value_at_cutoff: v });
    }
    let k = grid.axes().iter().map(Axis::nyquist).fold(f64::INFINITY, f64::min);
    match omega.shape() {
        Shape::Rect(r) => {
            let mut out = CharNorm { value: 1.0, diverges: false, value_at_cutoff: 1.0 };
            for a in 0..d {
                let w = r.hi[a] - r.lo[a];
                let (v, c, div) = half_line_norm(s, k, PI / w, |x| r.axis_transform(a, x).norm());
                out.value *= v.powf(1.0 / s);
                out.value_at_cutoff *= c.powf(1.0 / s);
                out.diverges |= div;
            }
            Ok(out)
        }
        Shape::Ball { radius, .. } => {
            let area = unit_sphere_area(d);
            let nu = 0.5 * d as f64;
            let scale = radius.powi(d as i32);
            let (v, c, diverges) = half_line_norm(s, k, PI / (2.0 * radius), |rho| {
                let amp = scale * bessel_j_scaled(nu, radius * rho);
                amp.abs() * rho.powf((d as f64 - 1.0) / s)
            });
            // The half-line helper doubles; the radial integral does not.
            let f = 0.5 * area;
            Ok(CharNorm { value: (f * v).powf(1.0 / s), diverges, value_at_cutoff: (f * c).powf(1.0 / s) })
        }
        Shape::Union(_) if d == 1 => {
            let width = 2.0 * omega.radius();
            let (v, c, diverges) = half_line_norm(s, k, PI / (2.0 * width), |x| omega.fourier_transform(&[x]).norm());
            Ok(CharNorm { value: v.powf(1.0 / s), diverges, value_at_cutoff: c.powf(1.0 / s) })
        }
        Shape::Union(_) if s == 2.0 => Ok(union_plancherel(omega, k)),
        Shape::Union(_) if d == 2 => Ok(union_lattice_norm(omega, s, k)),
        Shape::Union(_) => usage(format!("union domains in d = {d} support only s ∈ {{2, ∞}}")),
    }
}

/// `∫|Σ_c F_c|²` over ℝ^d as the Gram sum `Σ_{c,c'} Π_a ∫ F_{c,a} conj(F_{c',a})`.
///
/// Each one-dimensional integral is taken to `K·2^J` and Richardson-extrapolated
/// in the cutoff with first-order tail.
fn union_plancherel(omega: &Domain, k: f64) -> CharNorm {
    let cells = &omega.cells().inside;
    let d = omega.dim();
    let rule = GaussRule::new(16);
    let width = 2.0 * omega.radius();
    let panel = PI / (2.0 * width);
    let levels = ((MAX_PANELS * panel / k).log2().floor().max(3.0) as usize).min(40);
    let top = k * 2f64.powi(levels as i32);
    let pair = |a: &Cuboid, b: &Cuboid, axis: usize, upper: f64| -> f64 {
        let f = |x: f64| (a.axis_transform(axis, x) * b.axis_transform(axis, x).conj()).re;
        2.0 * rule.integrate_uniform(0.0, upper, panel, f)
    };
    let mut total = 0.0;
    let mut at_cutoff = 0.0;
    for a in cells {
        for b in cells {
            let mut prod = 1.0;
            let mut prod_k = 1.0;
            for axis in 0..d {
                let half = pair(a, b, axis, 0.5 * top);
                let full = half + {
                    let f = |x: f64| (a.axis_transform(axis, x) * b.axis_transform(axis, x).conj()).re;
                    2.0 * rule.integrate_uniform(0.5 * top, top, panel, f)
                };
                prod *= 2.0 * full - half;
                prod_k *= pair(a, b, axis, k);
            }
            total += prod;
            at_cutoff += prod_k;
        }
    }
    CharNorm { value: total.max(0.0).sqrt(), diverges: false, value_at_cutoff: at_cutoff.max(0.0).sqrt() }
}

/// Tensor Gauss–Legendre quadrature of `|𝔉χ_Ω|^s` on `[−U, U]²` for `U = K` and `U = 2K`.
fn union_lattice_norm(omega: &Domain, s: f64, k: f64) -> CharNorm {
    let rule = GaussRule::new(4);
    let width = 2.0 * omega.radius();
    let panel = PI / (2.0 * width);
    let square = |u: f64| -> f64 {
        let n = (2.0 * u / panel).ceil() as usize;
        let mut nodes = Vec::with_capacity(n * 4);
        for j in 0..n {
            let a = -u + 2.0 * u * j as f64 / n as f64;
            let b = -u + 2.0 * u * (j + 1) as f64 / n as f64;
            for (x, w) in rule.points() {
                nodes.push((0.5 * (a + b) + 0.5 * (b - a) * x, 0.5 * (b - a) * w));
            }
        }
        let mut acc = 0.0;
        for &(x, wx) in &nodes {
            for &(y, wy) in &nodes {
                acc += wx * wy * omega.fourier_transform(&[x, y]).norm().powf(s);
            }
        }
        acc
    };
    let at_k = square(k).powf(1.0 / s);
    let at_2k = square(2.0 * k).powf(1.0 / s);
    CharNorm { value: at_2k, diverges: at_2k > 1.1 * at_k, value_at_cutoff: at_k }
}

/// Measure of the boundary layer `{x : dist(x, ∂Ω) < δ}`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LayerMeasure {
    pub value: f64,
    /// Monte-Carlo standard error; zero for closed forms.
    pub std_error: f64,
}

/// Samples used by the Monte-Carlo boundary-layer estimate.
pub const LAYER_SAMPLES: usize = 1_000_000;

/// `|(∂Ω)_δ|` with Euclidean distance, for `0 < δ < radius(Ω)`.
///
/// Boxes use the Steiner formula of the outer parallel body minus the inner
/// core, balls the difference of two balls, and unions a seeded Monte-Carlo
/// estimate with exact distances.
///
/// ```
/// use aniso_core::domains::{boundary_layer_measure, Domain};
/// let ball = Domain::ball(vec![0.0], 1.0).unwrap();
/// assert!((boundary_layer_measure(&ball, 0.1).unwrap().value - 0.4).abs() < 1e-14);
/// ```
pub fn boundary_layer_measure(omega: &Domain, delta: f64) -> Result<LayerMeasure> {
    if !(delta > 0.0) {
        return usage(format!("boundary layer width δ = {delta} must be positive"));
    }
    if delta >= omega.radius() {
        return usage(format!("δ = {delta} is not below the domain radius {}", omega.radius()));
    }
    Ok(layer_measure(omega, delta, LAYER_SAMPLES))
}

fn layer_measure(omega: &Domain, delta: f64, samples: usize) -> LayerMeasure {
    match omega.shape() {
        Shape::Rect(r) => {
            let w = r.widths();
            let d = w.len();
            // e_j(w): elementary symmetric polynomials of the side lengths
            let mut e = vec![0.0; d + 1];
            e[0] = 1.0;
            for &wi in &w {
                for j in (1..=d).rev() {
                    e[j] += e[j - 1] * wi;
                }
            }
            let outer: f64 = (0..=d).map(|j| unit_ball_volume(d - j) * delta.powi((d - j) as i32) * e[j]).sum();
            let core: f64 = w.iter().map(|wi| (wi - 2.0 * delta).max(0.0)).product();
            LayerMeasure { value: outer - core, std_error: 0.0 }
        }
        Shape::Ball { center, radius } => {
            let d = center.len() as i32;
            let k = unit_ball_volume(center.len());
            let v = k * ((radius + delta).powi(d) - (radius - delta).max(0.0).powi(d));
            LayerMeasure { value: v, std_error: 0.0 }
        }
        Shape::Union(_) => {
            let bb = omega.bounding_box();
            let lo: Vec<f64> = bb.lo.iter().map(|v| v - delta).collect();
            let hi: Vec<f64> = bb.hi.iter().map(|v| v + delta).collect();
            let vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_1a7e);
            let mut x = vec![0.0; lo.len()];
            let mut hits = 0usize;
            for _ in 0..samples {
                for (a, xa) in x.iter_mut().enumerate() {
                    *xa = lo[a] + (hi[a] - lo[a]) * rng.random::<f64>();
                }
                if omega.distance_to_boundary(&x) < delta {
                    hits += 1;
                }
            }
            let p = hits as f64 / samples as f64;
            LayerMeasure { value: vol * p, std_error: vol * (p * (1.0 - p) / samples as f64).sqrt() }
        }
    }
}

/// Result of [`ko_bound`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct KoBound {
    /// `|Ω| + (∫_0^1 δ^{−d(1−s/2)} |(∂Ω)_δ|^{s/2} dδ/δ)^{1/s}`, infinite when divergent.
    pub value: f64,
    pub diverges: bool,
    /// The δ-integral itself.
    pub integral: f64,
}

/// Lower end of the resolved δ range; below it the integrand is extrapolated as a power law.
const KO_DELTA_MIN: f64 = 1e-6;

/// Boundary-layer bound on `‖𝔉χ_Ω‖_{L^s}` for `s ∈ [1, 2]`.
///
/// The δ-integral is computed on `[10⁻⁶, 1]` by Gauss–Legendre panels in
/// `log δ`. Below `10⁻⁶` the integrand is a power law whose exponent is read off
/// from two nearby samples; a non-decaying power law means divergence.
pub fn ko_bound(omega: &Domain, s: f64) -> Result<KoBound> {
    if !(1.0..=2.0).contains(&s) {
        return usage(format!("ko_bound needs s ∈ [1, 2], got {s}"));
    }
    let d = omega.dim() as f64;
    let layer: Box<dyn Fn(f64) -> f64> = match omega.shape() {
        Shape::Union(_) => {
            // Monte-Carlo values on a log ladder, interpolated in log-log and linear below the ladder.
            let ladder: Vec<f64> = (0..=24).map(|j| 10f64.powf(-3.0 + 3.0 * j as f64 / 24.0)).collect();
            let vals: Vec<f64> = ladder.iter().map(|&t| layer_measure(omega, t, 200_000).value.max(1e-300)).collect();
            Box::new(move |t: f64| {
                if t <= ladder[0] {
                    return vals[0] * t / ladder[0];
                }
                let j = ladder.iter().position(|&l| l >= t).unwrap_or(ladder.len() - 1).max(1);
                let (x0, x1) = (ladder[j - 1].ln(), ladder[j].ln());
                let (y0, y1) = (vals[j - 1].ln(), vals[j].ln());
                (y0 + (y1 - y0) * (t.ln() - x0) / (x1 - x0)).exp()
            })
        }
        _ => {
            let om = omega.clone();
            Box::new(move |t: f64| layer_measure(&om, t, 0).value)
        }
    };
    let g = |t: f64| t.powf(-d * (1.0 - 0.5 * s)) * layer(t).powf(0.5 * s);
    let (g0, g1) = (g(KO_DELTA_MIN), g(2.0 * KO_DELTA_MIN));
    let decay = (g1 / g0).log2();
    if !(decay > 1e-9) {
        return Ok(KoBound { value: f64::INFINITY, diverges: true, integral: f64::INFINITY });
    }
    let rule = GaussRule::new(16);
    let body = rule.integrate_uniform(KO_DELTA_MIN.ln(), 0.0, 0.5, |u| g(u.exp()));
    let integral = body + g0 / decay;
    Ok(KoBound { value: omega.volume() + integral.powf(1.0 / s), diverges: false, integral })
}

/// `s > 2d/(d+1)`: the range where `𝔉χ_B ∈ L^s` for a ball `B ⊂ ℝ^d`.
pub fn lebedev_admissible(d: usize, s: f64) -> bool {
    s > 2.0 * d as f64 / (d as f64 + 1.0)
}

/// `1/(2 − 1/s̄ − 1/t)`, or `+∞` when the denominator is not positive.
pub fn max_admissible_p(s_lower: f64, t: f64) -> Result<f64> {
    if !(s_lower > 1.0 && s_lower <= 2.0) || !(1.0..=2.0).contains(&t) {
        return usage(format!("need s̄ ∈ (1, 2] and t ∈ [1, 2], got ({s_lower}, {t})"));
    }
    let den = 2.0 - 1.0 / s_lower - 1.0 / t;
    Ok(if den <= 0.0 { f64::INFINITY } else { 1.0 / den })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window(d: usize, n: usize) -> TensorGrid {
        TensorGrid::uniform(d, 0, -4.0, 4.0, n).unwrap()
    }

    #[test]
    fn geometry() {
        let r = Domain::cube(2, -1.0, 1.0).unwrap();
        assert_eq!(r.volume(), 4.0);
        assert!((r.radius() - 2f64.sqrt()).abs() < 1e-15);
        let b = Domain::ball(vec![1.0, 0.0, 0.0], 0.5).unwrap();
        assert!((b.volume() - 4.0 / 3.0 * PI / 8.0).abs() < 1e-14);
        assert_eq!(b.radius(), 1.5);
        let l = Domain::parse("rect(0,2;0,1)+rect(0,1;0,2)").unwrap();
        assert!((l.volume() - 3.0).abs() < 1e-15);
        assert_eq!(l.indicator(&[0.5, 0.5]), 1.0);
        assert_eq!(l.indicator(&[1.0, 0.5]), 1.0);
        assert_eq!(l.indicator(&[1.5, 1.0]), 0.5);
        assert_eq!(l.indicator(&[1.0, 1.0]), 0.75);
        assert_eq!(l.indicator(&[1.5, 1.5]), 0.0);
        assert!(Domain::rect(vec![0.0], vec![0.0]).is_err());
        assert!(Domain::ball(vec![0.0], -1.0).is_err());
    }

    #[test]
    fn union_distance_is_exact() {
        let l = Domain::parse("rect(0,2;0,1)+rect(0,1;0,2)").unwrap();
        assert!((l.distance_to_boundary(&[0.9, 0.9]) - 0.02f64.sqrt()).abs() < 1e-14);
        assert!((l.distance_to_boundary(&[1.5, 0.9]) - 0.1).abs() < 1e-14);
        assert!((l.distance_to_boundary(&[0.5, 0.5]) - 0.5).abs() < 1e-14);
        assert!((l.distance_to_boundary(&[1.5, 1.5]) - 0.5).abs() < 1e-14);
        assert!((l.distance_to_boundary(&[3.0, 3.0]) - 5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn parse_and_display() {
        for s in ["rect(-1,1;-1,1)", "ball(0,0;1)", "rect(0,2;0,1)+rect(0,1;0,2)"] {
            assert_eq!(Domain::parse(s).unwrap().to_string(), s);
        }
        assert_eq!(Domain::parse("ball(0;1)@d=2").unwrap().dim(), 2);
        assert_eq!(Domain::parse("rect(0,1)@d=3").unwrap().dim(), 3);
        assert!(Domain::parse("disk(0;1)").is_err());
        assert!(Domain::parse("rect(0,1,2)").is_err());
    }

    #[test]
    fn quadrature_weights_integrate_polynomials() {
        let g = TensorGrid::uniform(1, 0, -2.0, 2.0, 256).unwrap();
        let u = Domain::interval(0.0, 1.0).unwrap();
        let w = u.quadrature_weights(g.axes()).unwrap();
        let total: f64 = w.iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
        let x2: f64 = w.iter().enumerate().map(|(j, wj)| wj * g.axis(0).coord(j).powi(2)).sum();
        // trapezoidal error h²/6 for x² on a grid-aligned interval
        let h = g.axis(0).spacing();
        assert!((x2 - 1.0 / 3.0 - h * h / 6.0).abs() < 1e-14);
        let off = Domain::interval(0.0, 3.0).unwrap();
        assert!(matches!(off.quadrature_weights(g.axes()), Err(Error::Domain(_))));
    }

    #[test]
    fn fourier_transform_of_interval_and_ball_agree_in_1d() {
        let i = Domain::interval(-0.5, 0.5).unwrap();
        let b = Domain::ball(vec![0.0], 0.5).unwrap();
        for &xi in &[0.0, 0.3, 2.0, 17.0] {
            let a = i.fourier_transform(&[xi]);
            let c = b.fourier_transform(&[xi]);
            assert!((a - c).norm() < 1e-12, "ξ = {xi}");
        }
        let expect = 1.0 / (2.0 * PI).sqrt() * (1.0f64).sin() / 1.0;
        assert!((i.fourier_transform(&[2.0]).re - expect).abs() < 1e-14);
    }

    #[test]
    fn ball_transform_matches_direct_quadrature_in_2d() {
        // (2π)^{-1} ∫_{|x|<1} e^{-i x_1 ξ} dx = (1/π) ∫_{-1}^1 cos(ξ t) √(1 − t²) dt
        let b = Domain::ball(vec![0.0, 0.0], 1.0).unwrap();
        let rule = GaussRule::new(40);
        for &xi in &[0.0, 1.0, 5.0] {
            let direct = rule.integrate(-PI / 2.0, PI / 2.0, |th| {
                let t = th.sin();
                (xi * t).cos() * th.cos() * th.cos()
            }) / PI;
            assert!((b.fourier_transform(&[xi, 0.0]).re - direct).abs() < 1e-12, "ξ = {xi}");
        }
    }

    #[test]
    fn mollifier_mass_and_support() {
        for d in [1, 2] {
            for &eps in &[0.2, 0.1, 0.05] {
                let grid = TensorGrid::uniform(d, 0, -0.5, 0.5, if d == 1 { 1024 } else { 256 }).unwrap();
                let m = Mollifier::new(eps, d).unwrap();
                let rho = mollifier_sample(&m, &grid).unwrap();
                let vals = rho.real_parts();
                let mass: f64 = vals.iter().sum::<f64>() * grid.cell_volume();
                assert!((mass - 1.0).abs() < 1e-12);
                let l2 = (vals.iter().map(|v| v * v).sum::<f64>() * grid.cell_volume()).sqrt();
                assert!(l2 <= eps.powf(-0.5 * d as f64));
                for (k, v) in vals.iter().enumerate() {
                    if norm2(&grid.coords(k)).sqrt() > eps {
                        assert_eq!(*v, 0.0);
                    }
                }
            }
        }
        let coarse = TensorGrid::uniform(1, 0, -1.0, 1.0, 32).unwrap();
        let m = Mollifier::new(0.05, 1).unwrap();
        assert!(matches!(mollifier_sample(&m, &coarse), Err(Error::Resolution(_))));
    }

    #[test]
    fn continuum_mollifier_mass() {
        // closed-form-free cross-check: trapezoid on a fine grid against the radial rule
        let m = Mollifier::new(0.25, 1).unwrap();
        let h = 1e-4;
        let mass: f64 = (-2500..=2500).map(|j| m.density(&[j as f64 * h])).sum::<f64>() * h;
        assert!((mass - 1.0).abs() < 1e-10);
        assert!(m.l2_norm() <= 0.25f64.powf(-0.5));
    }

    #[test]
    fn smoothing_is_one_inside_and_zero_outside() {
        let grid = window(2, 256);
        let u = Domain::cube(2, -1.0, 1.0).unwrap();
        let eps = 0.25;
        let chi = smooth_characteristic(&u, eps, &grid).unwrap();
        for (k, v) in chi.real_parts().into_iter().enumerate() {
            let x = grid.coords(k);
            assert!((0.0..=1.0).contains(&v));
            let inner = x.iter().all(|c| c.abs() < 1.0 - eps - 1e-9);
            let outer = x.iter().any(|c| c.abs() > 1.0 + eps + 1e-9);
            if inner {
                assert!((v - 1.0).abs() < 1e-6);
            }
            if outer {
                assert!(v.abs() < 1e-6);
            }
        }
        assert!(matches!(smooth_characteristic(&Domain::cube(2, -3.9, 3.9).unwrap(), eps, &grid), Err(Error::Domain(_))));
    }

    #[test]
    fn plancherel_for_every_shape() {
        let grid1 = TensorGrid::uniform(1, 0, -16.0, 16.0, 1024).unwrap();
        let grid2 = TensorGrid::uniform(2, 0, -4.0, 4.0, 256).unwrap();
        let grid3 = TensorGrid::uniform(3, 0, -4.0, 4.0, 32).unwrap();
        let cases = [
            (Domain::interval(-0.5, 0.5).unwrap(), &grid1),
            (Domain::parse("rect(0,1)+rect(2,2.5)").unwrap(), &grid1),
            (Domain::cube(2, -1.0, 1.0).unwrap(), &grid2),
            (Domain::ball(vec![0.0, 0.0], 1.0).unwrap(), &grid2),
            (Domain::parse("rect(0,2;0,1)+rect(0,1;0,2)").unwrap(), &grid2),
            (Domain::ball(vec![0.0; 3], 1.0).unwrap(), &grid3),
            (Domain::rect(vec![0.0, 0.0, 0.0], vec![1.0, 2.0, 0.5]).unwrap(), &grid3),
        ];
        for (omega, grid) in cases {
            let n = char_fl_norm(&omega, 2.0, grid).unwrap();
            assert!(!n.diverges);
            assert!((n.value - omega.volume().sqrt()).abs() < 1e-6, "{omega}: {} vs {}", n.value, omega.volume().sqrt());
        }
    }

    #[test]
    fn sinc_integrability() {
        let grid = TensorGrid::uniform(1, 0, -16.0, 16.0, 1024).unwrap();
        let i = Domain::interval(-0.5, 0.5).unwrap();
        assert!(char_fl_norm(&i, 1.0, &grid).unwrap().diverges);
        let n = char_fl_norm(&i, 1.5, &grid).unwrap();
        assert!(!n.diverges && n.value.is_finite());
        let wider = TensorGrid::uniform(1, 0, -16.0, 16.0, 2048).unwrap();
        let n2 = char_fl_norm(&i, 1.5, &wider).unwrap();
        assert!((n.value - n2.value).abs() < 1e-6 * n.value);
        let inf = char_fl_norm(&i, f64::INFINITY, &grid).unwrap();
        assert!((inf.value - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ball_integrability_follows_lebedev() {
        let grid = TensorGrid::uniform(2, 0, -4.0, 4.0, 256).unwrap();
        let b = Domain::ball(vec![0.0, 0.0], 1.0).unwrap();
        assert!(char_fl_norm(&b, 1.2, &grid).unwrap().diverges);
        assert!(!char_fl_norm(&b, 1.6, &grid).unwrap().diverges);
    }

    #[test]
    fn layer_measures() {
        let sq = Domain::cube(2, -1.0, 1.0).unwrap();
        for &d in &[0.01, 0.1, 0.5] {
            let m = boundary_layer_measure(&sq, d).unwrap().value;
            assert!((m - (16.0 * d + (PI - 4.0) * d * d)).abs() < 1e-12);
        }
        let l = Domain::parse("rect(-1,1;-1,1)+rect(0,0.5;0,0.5)").unwrap();
        let mc = boundary_layer_measure(&l, 0.1).unwrap();
        let exact = 16.0 * 0.1 + (PI - 4.0) * 0.01;
        assert!((mc.value - exact).abs() < 4.0 * mc.std_error + 1e-12);
        assert!(boundary_layer_measure(&sq, 2.0).is_err());
        assert!(boundary_layer_measure(&sq, 0.0).is_err());
    }

    #[test]
    fn ko_examples() {
        let sq = Domain::cube(2, -1.0, 1.0).unwrap();
        let k = ko_bound(&sq, 2.0).unwrap();
        let expect = 4.0 + (16.0 + (PI - 4.0) / 2.0f64).sqrt();
        assert!((k.value - expect).abs() < 1e-8, "{}", k.value);
        let b = Domain::ball(vec![0.0, 0.0], 1.0).unwrap();
        assert!(ko_bound(&b, 1.0).unwrap().diverges);
        assert!(ko_bound(&b, 4.0 / 3.0).unwrap().diverges);
        assert!(!ko_bound(&b, 1.4).unwrap().diverges);
        assert!(ko_bound(&b, 2.5).is_err());
    }

    #[test]
    fn admissibility() {
        assert!(lebedev_admissible(1, 1.01));
        assert!(!lebedev_admissible(1, 1.0));
        assert!(!lebedev_admissible(2, 4.0 / 3.0));
        assert!(lebedev_admissible(2, 1.34));
        assert!(!lebedev_admissible(3, 1.5));
        assert!((max_admissible_p(2.0, 1.0).unwrap() - 2.0).abs() < 1e-15);
        let s: f64 = 1.25;
        assert!((max_admissible_p(s, 1.0).unwrap() - s / (s - 1.0)).abs() < 1e-12);
        assert!(max_admissible_p(1.0 + 1e-9, 1.0).unwrap() > 1e8);
        assert_eq!(max_admissible_p(1.5, 2.0).unwrap(), 1.0 / (2.0 - 1.0 / 1.5 - 0.5));
    }
}
