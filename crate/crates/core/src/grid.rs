//! Periodic box discretisation and complex fields living on it.
//!
//! Nodes are stored row-major over the axes. Node `j` on an axis of length
//! `L` with `M` points sits at `x = -L/2 + j L / M`, so the box is centred on
//! the origin. Spectral index `j` maps to the signed mode `m = j` for
//! `j < M/2` and `m = j - M` otherwise (the Nyquist mode is `-M/2`); its
//! wavenumber is `k = 2 pi m / L`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;
pub const MIN_POINTS: usize = 8;

/// Which representation a [`Field`] currently holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    Physical,
    Spectral,
}

struct AxisPlan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

pub struct Grid {
    box_length: Vec<f64>,
    points: Vec<usize>,
    wavenumbers: Vec<Vec<f64>>,
    k_squared: Vec<f64>,
    plans: Vec<AxisPlan>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("box_length", &self.box_length).field("points", &self.points).finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points && self.box_length == other.box_length
    }
}

impl Grid {
    /// Builds a periodic grid. `box_length` and `points` carry one entry per
    /// axis; the dimension is their common length.
    pub fn periodic(box_length: &[f64], points: &[usize]) -> Result<Arc<Grid>> {
        let d = points.len();
        if d == 0 || d > MAX_DIM {
            return Err(Error::Grid(format!("dimension must be 1, 2 or 3, got {d}")));
        }
        if box_length.len() != d {
            return Err(Error::Grid(format!("{} box lengths given for {d} axes", box_length.len())));
        }
        for (axis, (&len, &n)) in box_length.iter().zip(points).enumerate() {
            if !(len.is_finite() && len > 0.0) {
                return Err(Error::Grid(format!("axis {axis}: box length must be positive, got {len}")));
            }
            if n < MIN_POINTS || n % 2 != 0 {
                return Err(Error::Grid(format!("axis {axis}: points must be even and >= {MIN_POINTS}, got {n}")));
            }
        }

        let mut planner = FftPlanner::new();
        let plans = points
            .iter()
            .map(|&n| AxisPlan {
                forward: planner.plan_fft(n, FftDirection::Forward),
                inverse: planner.plan_fft(n, FftDirection::Inverse),
            })
            .collect();
        let wavenumbers: Vec<Vec<f64>> = box_length
            .iter()
            .zip(points)
            .map(|(&len, &n)| (0..n).map(|j| 2.0 * PI * signed_mode(j, n) as f64 / len).collect())
            .collect();

        let total: usize = points.iter().product();
        let mut k_squared = vec![0.0; total];
        let mut idx = [0usize; MAX_DIM];
        for (flat, k2) in k_squared.iter_mut().enumerate() {
            unravel(flat, points, &mut idx);
            *k2 = (0..d).map(|a| wavenumbers[a][idx[a]].powi(2)).sum();
        }

        Ok(Arc::new(Grid { box_length: box_length.to_vec(), points: points.to_vec(), wavenumbers, k_squared, plans }))
    }

    /// One-dimensional convenience constructor.
    pub fn line(box_length: f64, points: usize) -> Result<Arc<Grid>> {
        Grid::periodic(&[box_length], &[points])
    }

    /// Same length and point count on every axis.
    pub fn cube(dim: usize, box_length: f64, points: usize) -> Result<Arc<Grid>> {
        Grid::periodic(&vec![box_length; dim], &vec![points; dim])
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn box_length(&self) -> &[f64] {
        &self.box_length
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.k_squared.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k_squared.is_empty()
    }

    pub fn cell_volume(&self) -> f64 {
        self.box_length.iter().zip(&self.points).map(|(&l, &n)| l / n as f64).product()
    }

    pub fn volume(&self) -> f64 {
        self.box_length.iter().product()
    }

    /// Wavenumbers of one axis in spectral storage order.
    pub fn axis_wavenumbers(&self, axis: usize) -> &[f64] {
        &self.wavenumbers[axis]
    }

    /// `|k|^2` for every spectral index.
    pub fn k_squared(&self) -> &[f64] {
        &self.k_squared
    }

    pub fn max_wavenumber(&self) -> f64 {
        self.k_squared.iter().copied().fold(0.0, f64::max).sqrt()
    }

    /// Physical coordinates of node `flat`.
    pub fn node(&self, flat: usize, out: &mut [f64]) {
        let mut idx = [0usize; MAX_DIM];
        unravel(flat, &self.points, &mut idx);
        for a in 0..self.dim() {
            let h = self.box_length[a] / self.points[a] as f64;
            out[a] = -0.5 * self.box_length[a] + idx[a] as f64 * h;
        }
    }

    /// Signed mode numbers of spectral index `flat`.
    pub fn mode(&self, flat: usize, out: &mut [i64]) {
        let mut idx = [0usize; MAX_DIM];
        unravel(flat, &self.points, &mut idx);
        for a in 0..self.dim() {
            out[a] = signed_mode(idx[a], self.points[a]);
        }
    }

    /// Spectral index of a signed mode, if representable on this grid.
    pub fn mode_index(&self, modes: &[i64]) -> Option<usize> {
        if modes.len() != self.dim() {
            return None;
        }
        let mut flat = 0usize;
        for (a, &m) in modes.iter().enumerate() {
            let n = self.points[a] as i64;
            if m < -n / 2 || m >= n / 2 {
                return None;
            }
            flat = flat * self.points[a] + m.rem_euclid(n) as usize;
        }
        Some(flat)
    }

    /// Wavevector of spectral index `flat`.
    pub fn wavevector(&self, flat: usize, out: &mut [f64]) {
        let mut idx = [0usize; MAX_DIM];
        unravel(flat, &self.points, &mut idx);
        for a in 0..self.dim() {
            out[a] = self.wavenumbers[a][idx[a]];
        }
    }

    /// Unitary multidimensional DFT in place (`1/sqrt(N)` in both directions).
    pub(crate) fn transform(&self, data: &mut [Complex64], direction: FftDirection) {
        debug_assert_eq!(data.len(), self.len());
        let total = data.len();
        let mut scratch = Vec::new();
        let mut line = Vec::new();
        for axis in 0..self.dim() {
            let n = self.points[axis];
            let plan = match direction {
                FftDirection::Forward => &self.plans[axis].forward,
                FftDirection::Inverse => &self.plans[axis].inverse,
            };
            let needed = plan.get_inplace_scratch_len();
            if scratch.len() < needed {
                scratch.resize(needed, Complex64::default());
            }
            let stride: usize = self.points[axis + 1..].iter().product();
            if stride == 1 {
                plan.process_with_scratch(data, &mut scratch[..needed]);
                continue;
            }
            line.resize(n, Complex64::default());
            let block = n * stride;
            for base in (0..total).step_by(block) {
                for inner in 0..stride {
                    let start = base + inner;
                    for (j, slot) in line.iter_mut().enumerate() {
                        *slot = data[start + j * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch[..needed]);
                    for (j, value) in line.iter().enumerate() {
                        data[start + j * stride] = *value;
                    }
                }
            }
        }
        let scale = 1.0 / (total as f64).sqrt();
        data.iter_mut().for_each(|v| *v *= scale);
    }
}

fn signed_mode(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

fn unravel(mut flat: usize, points: &[usize], out: &mut [usize; MAX_DIM]) {
    for a in (0..points.len()).rev() {
        out[a] = flat % points[a];
        flat /= points[a];
    }
}

/// A complex state on a [`Grid`], in either physical or spectral form.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<Complex64>,
    space: Space,
}

impl Field {
    pub fn zeros(grid: &Arc<Grid>, space: Space) -> Field {
        Field { grid: Arc::clone(grid), values: vec![Complex64::default(); grid.len()], space }
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<Complex64>, space: Space) -> Result<Field> {
        if values.len() != grid.len() {
            return Err(Error::Grid(format!("expected {} values, got {}", grid.len(), values.len())));
        }
        Ok(Field { grid: Arc::clone(grid), values, space })
    }

    /// Samples `f` at every node.
    pub fn from_fn<F>(grid: &Arc<Grid>, mut f: F) -> Field
    where
        F: FnMut(&[f64]) -> Complex64,
    {
        let d = grid.dim();
        let mut x = [0.0; MAX_DIM];
        let values = (0..grid.len())
            .map(|flat| {
                grid.node(flat, &mut x);
                f(&x[..d])
            })
            .collect();
        Field { grid: Arc::clone(grid), values, space: Space::Physical }
    }

    pub fn constant(grid: &Arc<Grid>, value: Complex64) -> Field {
        Field { grid: Arc::clone(grid), values: vec![value; grid.len()], space: Space::Physical }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn require(&self, space: Space) -> Result<()> {
        if self.space == space {
            Ok(())
        } else {
            Err(Error::WrongSpace { expected: space, found: self.space })
        }
    }

    pub fn same_grid(&self, other: &Field) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Converts in place to the requested representation.
    pub fn set_space(&mut self, space: Space) {
        if self.space == space {
            return;
        }
        let direction = match space {
            Space::Spectral => FftDirection::Forward,
            Space::Physical => FftDirection::Inverse,
        };
        self.grid.transform(&mut self.values, direction);
        self.space = space;
    }

    pub fn in_space(mut self, space: Space) -> Field {
        self.set_space(space);
        self
    }

    pub fn to_space(&self, space: Space) -> Field {
        self.clone().in_space(space)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn scale(&mut self, factor: Complex64) {
        self.values.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn scaled(&self, factor: Complex64) -> Field {
        let mut out = self.clone();
        out.scale(factor);
        out
    }

    /// `self - other`, both in the same space and on the same grid.
    pub fn difference(&self, other: &Field) -> Result<Field> {
        self.same_grid(other)?;
        other.require(self.space)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(Field { grid: Arc::clone(&self.grid), values, space: self.space })
    }

    /// `self += factor * other`.
    pub fn add_scaled(&mut self, factor: Complex64, other: &Field) -> Result<()> {
        self.same_grid(other)?;
        other.require(self.space)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += factor * b;
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::periodic(&[1.0; 4], &[8; 4]).is_err());
        assert!(Grid::line(1.0, 6).is_err());
        assert!(Grid::line(1.0, 9).is_err());
        assert!(Grid::line(0.0, 8).is_err());
        assert!(Grid::periodic(&[1.0], &[8, 8]).is_err());
    }

    #[test]
    fn wavenumber_layout_puts_nyquist_negative() {
        let g = Grid::line(2.0 * PI, 8).unwrap();
        let k: Vec<f64> = g.axis_wavenumbers(0).to_vec();
        assert_eq!(k, vec![0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0]);
        assert_eq!(g.mode_index(&[-4]), Some(4));
        assert_eq!(g.mode_index(&[4]), None);
    }

    #[test]
    fn cell_volume_and_nodes() {
        let g = Grid::periodic(&[8.0, 4.0], &[16, 8]).unwrap();
        assert!((g.cell_volume() - 0.25).abs() < 1e-15);
        let mut x = [0.0; 2];
        g.node(0, &mut x);
        assert_eq!(x, [-4.0, -2.0]);
        g.node(8 + 3, &mut x);
        assert_eq!(x, [-3.5, -0.5]);
        let mut m = [0i64; 2];
        g.mode(15 * 8 + 7, &mut m);
        assert_eq!(m, [-1, -1]);
    }

    #[test]
    fn space_mismatch_is_reported() {
        let g = Grid::line(1.0, 8).unwrap();
        let f = Field::zeros(&g, Space::Spectral);
        assert_eq!(
            f.require(Space::Physical),
            Err(Error::WrongSpace { expected: Space::Physical, found: Space::Spectral })
        );
    }
}
