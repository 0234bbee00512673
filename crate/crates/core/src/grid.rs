//! Uniform two-block tensor grids and the discrete symmetric Fourier transform.
//!
//! A [`TensorGrid`] is a product of periodic uniform axes. The first `d1`
//! axes form block 1 (the variable `x`, or time `t`), the remaining `d2` axes
//! form block 2 (`y`, or space). Samples are stored row-major with the last
//! axis fastest, so a block-1 multi-index selects a contiguous run of block-2
//! samples.
//!
//! The transform approximates
//!
//! ```text
//! f̂(ξ) = (2π)^{-d/2} ∫ f(x) e^{-i⟨x,ξ⟩} dx
//! ```
//!
//! on the dual lattice `ξ_k = 2πk/(upper − lower)`, `k = −n/2 .. n/2 − 1`,
//! stored in centered order (index `m` holds `k = m − n/2`).

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{usage, Error, Result};

/// Largest supported total dimension `d1 + d2`.
pub const MAX_DIM: usize = 6;

/// One periodic uniform axis `[lower, upper)` with `points` samples.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Axis {
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(lower: f64, upper: f64, points: usize) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && upper > lower) {
            return Err(Error::Config(format!("axis bounds [{lower}, {upper}) are not an interval")));
        }
        if points < 2 || !points.is_power_of_two() {
            return Err(Error::Config(format!("axis point count {points} is not a power of two ≥ 2")));
        }
        Ok(Axis { lower, upper, points })
    }

    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn spacing(&self) -> f64 {
        self.length() / self.points as f64
    }

    pub fn coord(&self, j: usize) -> f64 {
        self.lower + j as f64 * self.spacing()
    }

    /// Spacing of the dual frequency lattice, `2π / (upper − lower)`.
    pub fn dual_spacing(&self) -> f64 {
        2.0 * PI / self.length()
    }

    /// Frequency at centered index `m`.
    pub fn frequency(&self, m: usize) -> f64 {
        (m as f64 - (self.points / 2) as f64) * self.dual_spacing()
    }

    /// Largest frequency magnitude on the lattice, `π / h`.
    pub fn nyquist(&self) -> f64 {
        PI / self.spacing()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }
}

/// Selects one of the two variable blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Block {
    First,
    Second,
}

impl Block {
    /// Maps the 1-based block number 1 or 2.
    pub fn from_index(i: usize) -> Result<Block> {
        match i {
            1 => Ok(Block::First),
            2 => Ok(Block::Second),
            _ => usage(format!("block index {i} is not 1 or 2")),
        }
    }
}

/// Whether an axis currently holds physical samples or frequency samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Physical,
    Frequency,
}

/// How physical samples represent the underlying function.
///
/// `Point` samples are point values and the transform is the trapezoidal
/// rule, which is spectrally accurate for smooth functions. `CellAverage`
/// samples are averages over the cells `[x_j, x_j + h)` and represent a
/// piecewise-constant function whose transform is computed exactly; this is
/// the right model for indicator functions of cell-aligned boxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    Point,
    CellAverage,
}

/// Uniform tensor grid split into two variable blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorGrid {
    axes: Vec<Axis>,
    block_dims: (usize, usize),
}

impl TensorGrid {
    pub fn new(axes: Vec<Axis>, block_dims: (usize, usize)) -> Result<Self> {
        let d = axes.len();
        if d == 0 || d > MAX_DIM {
            return Err(Error::Config(format!("grid dimension {d} outside 1..={MAX_DIM}")));
        }
        if block_dims.0 + block_dims.1 != d {
            return Err(Error::Config(format!(
                "block split {:?} does not partition {d} axes",
                block_dims
            )));
        }
        for a in &axes {
            Axis::new(a.lower, a.upper, a.points)?;
        }
        Ok(TensorGrid { axes, block_dims })
    }

    /// Grid with the same window `[lower, upper)` and point count on every axis.
    pub fn uniform(d1: usize, d2: usize, lower: f64, upper: f64, points: usize) -> Result<Self> {
        let axis = Axis::new(lower, upper, points)?;
        TensorGrid::new(vec![axis; d1 + d2], (d1, d2))
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> &Axis {
        &self.axes[i]
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn block_dims(&self) -> (usize, usize) {
        self.block_dims
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.points).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> Vec<f64> {
        self.axes.iter().map(Axis::spacing).collect()
    }

    /// Quadrature weight of one physical cell, `Π h_i`.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::spacing).product()
    }

    /// Quadrature weight of one frequency cell, `Π 2π/L_i`.
    pub fn dual_cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::dual_spacing).product()
    }

    pub fn block_axes(&self, block: Block) -> std::ops::Range<usize> {
        match block {
            Block::First => 0..self.block_dims.0,
            Block::Second => self.block_dims.0..self.dim(),
        }
    }

    /// Number of samples in one block.
    pub fn block_len(&self, block: Block) -> usize {
        self.block_axes(block).map(|i| self.axes[i].points).product()
    }

    /// The axes of one block as a stand-alone single-block grid `(d, 0)`.
    pub fn block_grid(&self, block: Block) -> Result<TensorGrid> {
        let axes: Vec<Axis> = self.block_axes(block).map(|i| self.axes[i]).collect();
        if axes.is_empty() {
            return usage(format!("block {block:?} has no axes"));
        }
        let d = axes.len();
        TensorGrid::new(axes, (d, 0))
    }

    /// Same window, twice the points per axis.
    pub fn refined(&self) -> TensorGrid {
        let axes = self
            .axes
            .iter()
            .map(|a| Axis { points: a.points * 2, ..*a })
            .collect();
        TensorGrid { axes, block_dims: self.block_dims }
    }

    /// Window scaled by two about its center with the spacing kept.
    pub fn widened(&self) -> TensorGrid {
        let axes = self
            .axes
            .iter()
            .map(|a| {
                let c = 0.5 * (a.lower + a.upper);
                let half = a.length();
                Axis { lower: c - half, upper: c + half, points: a.points * 2 }
            })
            .collect();
        TensorGrid { axes, block_dims: self.block_dims }
    }

    /// Splits a flat index into per-axis indices.
    pub fn unravel(&self, mut flat: usize, idx: &mut [usize]) {
        for i in (0..self.dim()).rev() {
            let n = self.axes[i].points;
            idx[i] = flat % n;
            flat /= n;
        }
    }

    /// Calls `f(flat, point)` for every sample in row-major order, with
    /// physical coordinates or lattice frequencies depending on `space`.
    pub fn for_each_point(&self, space: Space, mut f: impl FnMut(usize, &[f64])) {
        let per_axis: Vec<Vec<f64>> = self
            .axes
            .iter()
            .map(|a| {
                (0..a.points)
                    .map(|j| match space {
                        Space::Physical => a.coord(j),
                        Space::Frequency => a.frequency(j),
                    })
                    .collect()
            })
            .collect();
        let d = self.dim();
        let mut idx = vec![0; d];
        let mut point: Vec<f64> = per_axis.iter().map(|v| v[0]).collect();
        for flat in 0..self.len() {
            f(flat, &point);
            for a in (0..d).rev() {
                idx[a] += 1;
                if idx[a] < per_axis[a].len() {
                    point[a] = per_axis[a][idx[a]];
                    break;
                }
                idx[a] = 0;
                point[a] = per_axis[a][0];
            }
        }
    }

    /// Physical coordinates of the sample at `flat`.
    pub fn coords(&self, flat: usize) -> Vec<f64> {
        let mut idx = vec![0; self.dim()];
        self.unravel(flat, &mut idx);
        idx.iter().zip(&self.axes).map(|(&j, a)| a.coord(j)).collect()
    }

    /// Frequency coordinates of the lattice point at `flat`.
    pub fn frequencies(&self, flat: usize) -> Vec<f64> {
        let mut idx = vec![0; self.dim()];
        self.unravel(flat, &mut idx);
        idx.iter().zip(&self.axes).map(|(&m, a)| a.frequency(m)).collect()
    }

    pub(crate) fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dim()];
        for i in (0..self.dim().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.axes[i + 1].points;
        }
        s
    }
}

/// Complex samples of a function on a [`TensorGrid`].
///
/// Each axis is either in physical or frequency space; block transforms
/// produce mixed states. The full forward spectrum of a physical function is
/// computed once on demand and cached.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: TensorGrid,
    values: Vec<Complex64>,
    space: Vec<Space>,
    sampling: Sampling,
    spectrum: OnceLock<Arc<Vec<Complex64>>>,
}

impl GridFunction {
    pub fn from_values(grid: TensorGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Config(format!(
                "{} values for a grid of {} samples",
                values.len(),
                grid.len()
            )));
        }
        let d = grid.dim();
        Ok(GridFunction {
            grid,
            values,
            space: vec![Space::Physical; d],
            sampling: Sampling::Point,
            spectrum: OnceLock::new(),
        })
    }

    pub fn from_real(grid: TensorGrid, values: Vec<f64>) -> Result<Self> {
        let values = values.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
        GridFunction::from_values(grid, values)
    }

    /// Point samples of `f` at the grid coordinates.
    pub fn from_fn(grid: TensorGrid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|k| f(&grid.coords(k))).collect();
        GridFunction::from_values(grid, values).expect("length matches by construction")
    }

    pub fn from_real_fn(grid: TensorGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        GridFunction::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    /// Cell averages over `[x_j, x_j + h)`; see [`Sampling::CellAverage`].
    pub fn from_cell_averages(grid: TensorGrid, values: Vec<f64>) -> Result<Self> {
        let mut g = GridFunction::from_real(grid, values)?;
        g.sampling = Sampling::CellAverage;
        Ok(g)
    }

    /// Samples on the frequency lattice of `grid` (every axis in frequency space).
    pub fn from_spectrum_fn(grid: TensorGrid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|k| f(&grid.frequencies(k))).collect();
        let d = grid.dim();
        GridFunction {
            grid,
            values,
            space: vec![Space::Frequency; d],
            sampling: Sampling::Point,
            spectrum: OnceLock::new(),
        }
    }

    pub fn zeros(grid: TensorGrid) -> Self {
        let n = grid.len();
        GridFunction::from_values(grid, vec![Complex64::new(0.0, 0.0); n]).expect("length matches")
    }

    pub fn grid(&self) -> &TensorGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn abs_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn sampling(&self) -> Sampling {
        self.sampling
    }

    pub fn axis_space(&self, axis: usize) -> Space {
        self.space[axis]
    }

    pub fn is_physical(&self) -> bool {
        self.space.iter().all(|&s| s == Space::Physical)
    }

    pub fn is_spectral(&self) -> bool {
        self.space.iter().all(|&s| s == Space::Frequency)
    }

    /// Same grid and state, new values.
    pub fn with_values(&self, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::Config("value count does not match the grid".into()));
        }
        Ok(GridFunction {
            grid: self.grid.clone(),
            values,
            space: self.space.clone(),
            sampling: self.sampling,
            spectrum: OnceLock::new(),
        })
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        self.with_values(self.values.iter().map(|&v| f(v)).collect()).expect("same length")
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| v * c)
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &GridFunction, b: f64) -> Result<Self> {
        self.check_compatible(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&u, &v)| u * a + v * b).collect();
        self.with_values(values)
    }

    /// Pointwise product; both operands must share grid and state.
    pub fn product(&self, other: &GridFunction) -> Result<Self> {
        self.check_compatible(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&u, &v)| u * v).collect();
        self.with_values(values)
    }

    fn check_compatible(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid || self.space != other.space || self.sampling != other.sampling {
            return Err(Error::Config("grid functions live on different grids or spaces".into()));
        }
        Ok(())
    }

    /// Quadrature L² norm; uses `h` on physical axes and `2π/L` on frequency axes.
    pub fn l2_norm(&self) -> f64 {
        let w: f64 = self
            .space
            .iter()
            .zip(self.grid.axes())
            .map(|(s, a)| match s {
                Space::Physical => a.spacing(),
                Space::Frequency => a.dual_spacing(),
            })
            .product();
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * w).sqrt()
    }

    /// Cached full forward transform of a physical function.
    pub fn spectrum(&self) -> Result<Arc<Vec<Complex64>>> {
        if !self.is_physical() {
            return Err(Error::Config("spectrum requested for a non-physical grid function".into()));
        }
        if let Some(s) = self.spectrum.get() {
            return Ok(s.clone());
        }
        let mut data = self.values.clone();
        for axis in 0..self.grid.dim() {
            transform_axis(&self.grid, &mut data, axis, Direction::Forward, self.sampling);
        }
        let arc = Arc::new(data);
        let _ = self.spectrum.set(arc.clone());
        Ok(arc)
    }

    /// Writes the flat binary container: header then little-endian interleaved complex payload.
    pub fn write_binary(&self, mut w: impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&(self.grid.dim() as u32).to_le_bytes())?;
        w.write_all(&(self.grid.block_dims.0 as u32).to_le_bytes())?;
        w.write_all(&(self.grid.block_dims.1 as u32).to_le_bytes())?;
        w.write_all(&[match self.sampling {
            Sampling::Point => 0u8,
            Sampling::CellAverage => 1u8,
        }])?;
        for (a, s) in self.grid.axes.iter().zip(&self.space) {
            w.write_all(&a.lower.to_le_bytes())?;
            w.write_all(&a.upper.to_le_bytes())?;
            w.write_all(&(a.points as u64).to_le_bytes())?;
            w.write_all(&[match s {
                Space::Physical => 0u8,
                Space::Frequency => 1u8,
            }])?;
        }
        for v in &self.values {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Parse("not a grid-function container".into()));
        }
        let version = read_u32(&mut r)?;
        if version != 1 {
            return Err(Error::Parse(format!("unsupported container version {version}")));
        }
        let d = read_u32(&mut r)? as usize;
        let d1 = read_u32(&mut r)? as usize;
        let d2 = read_u32(&mut r)? as usize;
        if d > MAX_DIM {
            return Err(Error::Parse(format!("dimension {d} in container exceeds {MAX_DIM}")));
        }
        let sampling = match read_u8(&mut r)? {
            0 => Sampling::Point,
            1 => Sampling::CellAverage,
            b => return Err(Error::Parse(format!("unknown sampling tag {b}"))),
        };
        let mut axes = Vec::with_capacity(d);
        let mut space = Vec::with_capacity(d);
        for _ in 0..d {
            let lower = read_f64(&mut r)?;
            let upper = read_f64(&mut r)?;
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            let points = u64::from_le_bytes(b) as usize;
            axes.push(Axis::new(lower, upper, points)?);
            space.push(match read_u8(&mut r)? {
                0 => Space::Physical,
                1 => Space::Frequency,
                b => return Err(Error::Parse(format!("unknown space tag {b}"))),
            });
        }
        let grid = TensorGrid::new(axes, (d1, d2))?;
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            let re = read_f64(&mut r)?;
            let im = read_f64(&mut r)?;
            values.push(Complex64::new(re, im));
        }
        Ok(GridFunction { grid, values, space, sampling, spectrum: OnceLock::new() })
    }

    /// CSV export of a 1D or 2D slice.
    ///
    /// `free` lists the one or two axes that vary; every other axis is held at
    /// the index given in `fixed` (entries for free axes are ignored). Each
    /// row carries the coordinates of the free axes (frequency coordinates on
    /// frequency axes) followed by the real and imaginary parts.
    pub fn write_csv_slice(&self, mut w: impl Write, free: &[usize], fixed: &[usize]) -> Result<()> {
        let d = self.grid.dim();
        if free.is_empty() || free.len() > 2 || free.iter().any(|&a| a >= d) {
            return usage("a CSV slice needs one or two valid free axes");
        }
        if fixed.len() != d {
            return usage("fixed index list must have one entry per axis");
        }
        let strides = self.grid.strides();
        let coord = |axis: usize, j: usize| match self.space[axis] {
            Space::Physical => self.grid.axes[axis].coord(j),
            Space::Frequency => self.grid.axes[axis].frequency(j),
        };
        let header: Vec<String> = free.iter().map(|a| format!("axis{a}")).collect();
        writeln!(w, "{},re,im", header.join(","))?;
        let base: usize = (0..d)
            .filter(|a| !free.contains(a))
            .map(|a| fixed[a].min(self.grid.axes[a].points - 1) * strides[a])
            .sum();
        let n0 = self.grid.axes[free[0]].points;
        let n1 = free.get(1).map(|&a| self.grid.axes[a].points).unwrap_or(1);
        for i in 0..n0 {
            for j in 0..n1 {
                let mut k = base + i * strides[free[0]];
                let mut row = format!("{}", coord(free[0], i));
                if let Some(&a1) = free.get(1) {
                    k += j * strides[a1];
                    row.push_str(&format!(",{}", coord(a1, j)));
                }
                let v = self.values[k];
                writeln!(w, "{row},{},{}", v.re, v.im)?;
            }
        }
        Ok(())
    }
}

const MAGIC: &[u8; 4] = b"AGF1";

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u8(r: &mut impl Read) -> Result<u8> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b)?;
    Ok(b[0])
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Direction {
    Forward,
    Inverse,
}

/// Transfer factor of one cell average: `∫_0^h e^{-iξs} ds / h`.
fn cell_factor(xi: f64, h: f64) -> Complex64 {
    let a = 0.5 * xi * h;
    let sinc = if a.abs() < 1e-8 { 1.0 - a * a / 6.0 } else { a.sin() / a };
    Complex64::from_polar(sinc, -a)
}

fn fft_plan(n: usize, dir: Direction) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    match dir {
        Direction::Forward => planner.plan_fft_forward(n),
        Direction::Inverse => planner.plan_fft_inverse(n),
    }
}

/// Applies the one-axis continuum-scaled transform in place.
fn transform_axis(grid: &TensorGrid, data: &mut [Complex64], axis: usize, dir: Direction, sampling: Sampling) {
    let a = grid.axes[axis];
    let n = a.points;
    let h = a.spacing();
    let stride = grid.strides()[axis];
    let outer = data.len() / (n * stride);
    let fft = fft_plan(n, dir);
    let norm = match dir {
        Direction::Forward => h / (2.0 * PI).sqrt(),
        Direction::Inverse => a.dual_spacing() / (2.0 * PI).sqrt(),
    };
    let factors: Vec<Complex64> = (0..n)
        .map(|m| {
            let xi = a.frequency(m);
            let phase = Complex64::from_polar(1.0, -xi * a.lower);
            let cell = match sampling {
                Sampling::Point => Complex64::new(1.0, 0.0),
                Sampling::CellAverage => cell_factor(xi, h),
            };
            match dir {
                Direction::Forward => phase * cell * norm,
                Direction::Inverse => phase.conj() / cell * norm,
            }
        })
        .collect();
    let half = n / 2;
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for o in 0..outer {
        for inner in 0..stride {
            let base = o * n * stride + inner;
            match dir {
                Direction::Forward => {
                    for j in 0..n {
                        line[j] = data[base + j * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    // bin k = (m − n/2) mod n lands at centered index m
                    for m in 0..n {
                        let k = (m + half) % n;
                        data[base + m * stride] = line[k] * factors[m];
                    }
                }
                Direction::Inverse => {
                    for m in 0..n {
                        let k = (m + half) % n;
                        line[k] = data[base + m * stride] * factors[m];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for j in 0..n {
                        data[base + j * stride] = line[j];
                    }
                }
            }
        }
    }
}

fn transform_axes(f: &GridFunction, axes: std::ops::Range<usize>, dir: Direction) -> Result<GridFunction> {
    let (from, to) = match dir {
        Direction::Forward => (Space::Physical, Space::Frequency),
        Direction::Inverse => (Space::Frequency, Space::Physical),
    };
    for a in axes.clone() {
        if f.space[a] != from {
            return Err(Error::Config(format!("axis {a} is not in {from:?} space")));
        }
    }
    let mut data = f.values.clone();
    let mut space = f.space.clone();
    for a in axes {
        transform_axis(&f.grid, &mut data, a, dir, f.sampling);
        space[a] = to;
    }
    Ok(GridFunction { grid: f.grid.clone(), values: data, space, sampling: f.sampling, spectrum: OnceLock::new() })
}

/// Forward symmetric transform over all axes.
///
/// ```
/// use aniso_core::grid::{dft_forward, GridFunction, TensorGrid};
/// let grid = TensorGrid::uniform(1, 0, -16.0, 16.0, 1024).unwrap();
/// let f = GridFunction::from_real_fn(grid.clone(), |x| (-0.5 * x[0] * x[0]).exp());
/// let fhat = dft_forward(&f).unwrap();
/// let k = 512 + 32; // ξ = 32·2π/32 = 2π
/// let xi = grid.axis(0).frequency(k);
/// assert!((fhat.values()[k].re - (-0.5 * xi * xi).exp()).abs() < 1e-12);
/// ```
pub fn dft_forward(f: &GridFunction) -> Result<GridFunction> {
    if !f.is_physical() {
        return Err(Error::Config("forward transform needs a physical grid function".into()));
    }
    let values = f.spectrum()?.as_ref().clone();
    let d = f.grid.dim();
    Ok(GridFunction {
        grid: f.grid.clone(),
        values,
        space: vec![Space::Frequency; d],
        sampling: f.sampling,
        spectrum: OnceLock::new(),
    })
}

/// Inverse symmetric transform over all axes.
pub fn dft_inverse(fhat: &GridFunction) -> Result<GridFunction> {
    if !fhat.is_spectral() {
        return Err(Error::Config("inverse transform needs a frequency-domain grid function".into()));
    }
    transform_axes(fhat, 0..fhat.grid.dim(), Direction::Inverse)
}

/// Partial transform over one block, leaving the other block untouched.
///
/// If the block's axes are in physical space they are transformed forward,
/// if they are in frequency space they are transformed back.
pub fn dft_block(f: &GridFunction, block: Block) -> Result<GridFunction> {
    let (d1, d2) = f.grid.block_dims;
    if d1 == 0 || d2 == 0 {
        return usage("block transforms need both blocks nonempty");
    }
    let axes = f.grid.block_axes(block);
    let dir = if f.space[axes.start] == Space::Physical { Direction::Forward } else { Direction::Inverse };
    transform_axes(f, axes, dir)
}

/// Inverse transform of `(iξ)^α f̂`; `orders[i]` is the derivative order on axis `i`.
///
/// Exact for band-limited periodic data. For odd orders the unpaired Nyquist
/// mode is dropped so real input gives real output.
pub fn spectral_derivative(f: &GridFunction, orders: &[usize]) -> Result<GridFunction> {
    let g = &f.grid;
    if orders.len() != g.dim() {
        return usage(format!("{} derivative orders for a {}-dimensional grid", orders.len(), g.dim()));
    }
    if orders.iter().all(|&o| o == 0) {
        return Ok(f.clone());
    }
    let spec = f.spectrum()?;
    let per_axis: Vec<Vec<Complex64>> = g
        .axes()
        .iter()
        .zip(orders)
        .map(|(a, &o)| {
            (0..a.points)
                .map(|m| {
                    if o % 2 == 1 && m == 0 {
                        return Complex64::new(0.0, 0.0);
                    }
                    Complex64::new(0.0, a.frequency(m)).powu(o as u32)
                })
                .collect()
        })
        .collect();
    let mut idx = vec![0; g.dim()];
    let values: Vec<Complex64> = spec
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            g.unravel(k, &mut idx);
            idx.iter().enumerate().fold(v, |acc, (i, &m)| acc * per_axis[i][m])
        })
        .collect();
    let d = g.dim();
    let fhat = GridFunction {
        grid: g.clone(),
        values,
        space: vec![Space::Frequency; d],
        sampling: f.sampling,
        spectrum: OnceLock::new(),
    };
    dft_inverse(&fhat)
}

/// Plain multi-dimensional FFT over all axes of a row-major array (no scaling).
pub(crate) fn raw_fft_nd(shape: &[usize], data: &mut [Complex64], inverse: bool) {
    let mut strides = vec![1; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * shape[i + 1];
    }
    for (axis, &n) in shape.iter().enumerate() {
        let fft = fft_plan(n, if inverse { Direction::Inverse } else { Direction::Forward });
        let stride = strides[axis];
        let outer = data.len() / (n * stride);
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for o in 0..outer {
            for inner in 0..stride {
                let base = o * n * stride + inner;
                for j in 0..n {
                    line[j] = data[base + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for j in 0..n {
                    data[base + j * stride] = line[j];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_1d(n: usize) -> GridFunction {
        let grid = TensorGrid::uniform(1, 0, -16.0, 16.0, n).unwrap();
        GridFunction::from_real_fn(grid, |x| (-0.5 * x[0] * x[0]).exp())
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(matches!(Axis::new(0.0, 1.0, 100), Err(Error::Config(_))));
        assert!(TensorGrid::uniform(1, 1, 0.0, 1.0, 64).is_ok());
    }

    #[test]
    fn gaussian_is_fixed_point() {
        let f = gaussian_1d(1024);
        let fhat = dft_forward(&f).unwrap();
        let a = f.grid().axis(0);
        let mut err: f64 = 0.0;
        for m in 0..1024 {
            let xi = a.frequency(m);
            if xi.abs() <= 8.0 {
                err = err.max((fhat.values()[m] - Complex64::new((-0.5 * xi * xi).exp(), 0.0)).norm());
            }
        }
        assert!(err < 1e-8, "sup error {err}");
    }

    #[test]
    fn zero_maps_to_zero() {
        let grid = TensorGrid::uniform(1, 1, -4.0, 4.0, 32).unwrap();
        let z = GridFunction::zeros(grid);
        assert!(dft_forward(&z).unwrap().values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn cell_box_gives_exact_sinc() {
        let grid = TensorGrid::uniform(1, 0, -16.0, 16.0, 1024).unwrap();
        let a = *grid.axis(0);
        let vals: Vec<f64> = (0..1024)
            .map(|j| {
                let x = a.coord(j);
                if (-0.5 - 1e-12..0.5 - 1e-12).contains(&x) { 1.0 } else { 0.0 }
            })
            .collect();
        let f = GridFunction::from_cell_averages(grid, vals).unwrap();
        let fhat = dft_forward(&f).unwrap();
        let mut err: f64 = 0.0;
        for m in 0..1024 {
            let xi = a.frequency(m);
            let exact = if xi == 0.0 { 1.0 } else { (xi / 2.0).sin() / (xi / 2.0) } / (2.0 * PI).sqrt();
            err = err.max((fhat.values()[m] - Complex64::new(exact, 0.0)).norm());
        }
        assert!(err < 1e-12, "sup error {err}");
        let back = dft_inverse(&fhat).unwrap();
        for (u, v) in back.values().iter().zip(f.values()) {
            assert!((u - v).norm() < 1e-12);
        }
    }

    #[test]
    fn block_transform_of_separable_function() {
        let grid = TensorGrid::uniform(1, 1, -8.0, 8.0, 64).unwrap();
        let f = GridFunction::from_real_fn(grid.clone(), |x| (-x[0] * x[0]).exp() * (1.0 + x[1]).cos());
        let f1 = dft_block(&f, Block::First).unwrap();
        let g = GridFunction::from_real_fn(grid.block_grid(Block::First).unwrap(), |x| (-x[0] * x[0]).exp());
        let ghat = dft_forward(&g).unwrap();
        let a1 = grid.axis(1);
        for i in 0..64 {
            for j in 0..64 {
                let expect = ghat.values()[i] * (1.0 + a1.coord(j)).cos();
                assert!((f1.values()[i * 64 + j] - expect).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn block_index_validation() {
        assert!(Block::from_index(3).is_err());
        let grid = TensorGrid::uniform(2, 0, -1.0, 1.0, 8).unwrap();
        let f = GridFunction::zeros(grid);
        assert!(matches!(dft_block(&f, Block::First), Err(Error::Usage(_))));
    }

    #[test]
    fn derivative_of_sine() {
        let grid = TensorGrid::uniform(1, 0, -PI, PI, 64).unwrap();
        let f = GridFunction::from_real_fn(grid, |x| x[0].sin());
        let df = spectral_derivative(&f, &[1]).unwrap();
        for k in 0..64 {
            let x = f.grid().coords(k)[0];
            assert!((df.values()[k] - Complex64::new(x.cos(), 0.0)).norm() < 1e-10);
        }
        let same = spectral_derivative(&f, &[0]).unwrap();
        assert_eq!(same.values(), f.values());
    }

    #[test]
    fn binary_round_trip() {
        let grid = TensorGrid::uniform(1, 1, -2.0, 2.0, 8).unwrap();
        let f = GridFunction::from_real_fn(grid, |x| x[0] - 2.0 * x[1]);
        let f1 = dft_block(&f, Block::Second).unwrap();
        let mut buf = Vec::new();
        f1.write_binary(&mut buf).unwrap();
        let g = GridFunction::read_binary(buf.as_slice()).unwrap();
        assert_eq!(g.values(), f1.values());
        assert_eq!(g.grid(), f1.grid());
        assert_eq!(g.axis_space(1), Space::Frequency);
        assert!(GridFunction::read_binary(&b"nope"[..]).is_err());
    }

    #[test]
    fn csv_slice_has_header_and_rows() {
        let grid = TensorGrid::uniform(1, 1, 0.0, 1.0, 4).unwrap();
        let f = GridFunction::from_real_fn(grid, |x| x[0] + 10.0 * x[1]);
        let mut buf = Vec::new();
        f.write_csv_slice(&mut buf, &[1], &[2, 0]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "axis1,re,im");
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[2], "0.25,3,0");
    }
}
