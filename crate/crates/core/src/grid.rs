//! Periodic tensor grids on the torus `[0, L_0) × … × [0, L_{d-1})`.

use std::ops::{Add, Neg};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic grid in one or two dimensions.
///
/// Nodes are flattened with axis 0 fastest: `flat = i0 + N0 * i1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    lengths: [f64; 2],
    points: [usize; 2],
}

/// A translation by whole grid steps, one entry per axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct GridShift(pub [isize; 2]);

impl Neg for GridShift {
    type Output = GridShift;
    fn neg(self) -> GridShift {
        GridShift([-self.0[0], -self.0[1]])
    }
}

impl Add for GridShift {
    type Output = GridShift;
    fn add(self, rhs: GridShift) -> GridShift {
        GridShift([self.0[0] + rhs.0[0], self.0[1] + rhs.0[1]])
    }
}

impl GridShift {
    pub fn one_d(steps: isize) -> Self {
        GridShift([steps, 0])
    }
}

impl GridSpec {
    /// Builds a grid with per-axis lengths and point counts. The spacing
    /// `h = L/N` must satisfy `h * N == L` exactly in `f64`.
    pub fn new(lengths: &[f64], points: &[usize]) -> Result<Self> {
        let dim = lengths.len();
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{1, 2}}")));
        }
        if points.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "{} lengths but {} point counts",
                dim,
                points.len()
            )));
        }
        let mut l = [1.0; 2];
        let mut p = [1usize; 2];
        for axis in 0..dim {
            let (len, n) = (lengths[axis], points[axis]);
            if !(len.is_finite() && len > 0.0) {
                return Err(Error::InvalidGrid(format!("length {len} on axis {axis}")));
            }
            if n < 2 {
                return Err(Error::InvalidGrid(format!("{n} points on axis {axis}")));
            }
            let h = len / n as f64;
            if h * n as f64 != len {
                return Err(Error::InvalidGrid(format!(
                    "spacing {len}/{n} is not exact in floating point"
                )));
            }
            l[axis] = len;
            p[axis] = n;
        }
        Ok(GridSpec {
            dim,
            lengths: l,
            points: p,
        })
    }

    pub fn one_d(length: f64, points: usize) -> Result<Self> {
        Self::new(&[length], &[points])
    }

    /// Square grid with the same length and point count on both axes.
    pub fn square(length: f64, points: usize) -> Result<Self> {
        Self::new(&[length, length], &[points, points])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.lengths[axis]
    }

    pub fn points(&self, axis: usize) -> usize {
        self.points[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / self.points[axis] as f64
    }

    /// Smallest box length over the axes.
    pub fn min_length(&self) -> f64 {
        self.lengths[..self.dim].iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest spacing over the axes.
    pub fn max_spacing(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).fold(0.0, f64::max)
    }

    /// Quadrature weight `h^d` of one node.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).product()
    }

    /// Total volume `∏ L_j`.
    pub fn volume(&self) -> f64 {
        self.lengths[..self.dim].iter().product()
    }

    pub fn node_count(&self) -> usize {
        self.points[..self.dim].iter().product()
    }

    pub fn flat_index(&self, multi: [usize; 2]) -> usize {
        multi[0] + self.points[0] * multi[1]
    }

    pub fn multi_index(&self, flat: usize) -> [usize; 2] {
        if self.dim == 1 {
            [flat, 0]
        } else {
            [flat % self.points[0], flat / self.points[0]]
        }
    }

    pub fn coords(&self, flat: usize) -> [f64; 2] {
        let m = self.multi_index(flat);
        let mut x = [0.0; 2];
        for axis in 0..self.dim {
            x[axis] = m[axis] as f64 * self.spacing(axis);
        }
        x
    }

    /// Node reached from `flat` by moving `shift` steps, with wraparound.
    pub fn shifted(&self, flat: usize, shift: GridShift) -> usize {
        let m = self.multi_index(flat);
        let mut out = [0usize; 2];
        for axis in 0..self.dim {
            let n = self.points[axis] as isize;
            out[axis] = (m[axis] as isize + shift.0[axis]).rem_euclid(n) as usize;
        }
        self.flat_index(out)
    }

    /// Minimum-image step offset from node `from` to node `to`, each
    /// component in `(-N/2, N/2]`.
    pub fn step_offset(&self, from: usize, to: usize) -> [isize; 2] {
        let a = self.multi_index(from);
        let b = self.multi_index(to);
        let mut out = [0isize; 2];
        for axis in 0..self.dim {
            out[axis] = wrap_steps(b[axis] as isize - a[axis] as isize, self.points[axis]);
        }
        out
    }

    /// Minimum-image displacement in coordinates from `from` to `to`.
    pub fn offset(&self, from: usize, to: usize) -> [f64; 2] {
        let s = self.step_offset(from, to);
        let mut out = [0.0; 2];
        for axis in 0..self.dim {
            out[axis] = s[axis] as f64 * self.spacing(axis);
        }
        out
    }

    pub fn torus_distance(&self, from: usize, to: usize) -> f64 {
        let o = self.offset(from, to);
        (o[0] * o[0] + o[1] * o[1]).sqrt()
    }

    /// Converts a coordinate displacement to whole grid steps; fails unless
    /// every component is an integer multiple of the spacing.
    pub fn shift_from_coords(&self, x: &[f64]) -> Result<GridShift> {
        if x.len() != self.dim {
            return Err(Error::OffGridShift(x.to_vec()));
        }
        let mut steps = [0isize; 2];
        for axis in 0..self.dim {
            let q = x[axis] / self.spacing(axis);
            let r = q.round();
            if !q.is_finite() || (q - r).abs() > 1e-9 * q.abs().max(1.0) {
                return Err(Error::OffGridShift(x.to_vec()));
            }
            steps[axis] = r as isize;
        }
        Ok(GridShift(steps))
    }

    /// Nearest node to an arbitrary point (coordinates taken modulo `L`).
    pub fn nearest_node(&self, x: &[f64]) -> usize {
        let mut m = [0usize; 2];
        for axis in 0..self.dim {
            let n = self.points[axis] as f64;
            let q = (x[axis] / self.spacing(axis)).round();
            m[axis] = q.rem_euclid(n) as usize;
        }
        self.flat_index(m)
    }

    /// The node at the window center `L/2` (per axis, rounded down).
    pub fn center_node(&self) -> usize {
        let mut m = [0usize; 2];
        for axis in 0..self.dim {
            m[axis] = self.points[axis] / 2;
        }
        self.flat_index(m)
    }
}

/// Maps a step difference to its minimum image in `(-n/2, n/2]`.
pub fn wrap_steps(delta: isize, n: usize) -> isize {
    let n = n as isize;
    let mut d = delta.rem_euclid(n);
    if 2 * d > n {
        d -= n;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_is_exact_for_powers_of_two() {
        let g = GridSpec::one_d(32.0, 1024).unwrap();
        assert_eq!(g.spacing(0) * 1024.0, 32.0);
        assert_eq!(g.cell_volume(), 1.0 / 32.0);
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(GridSpec::new(&[1.0, 1.0, 1.0], &[4, 4, 4]).is_err());
        assert!(GridSpec::new(&[1.0], &[4, 4]).is_err());
        assert!(GridSpec::one_d(-1.0, 8).is_err());
        assert!(GridSpec::one_d(1.0, 1).is_err());
    }

    #[test]
    fn rejects_inexact_spacing() {
        // 1/3 * 3 rounds back to 1, but 0.1 / 3 does not survive the round trip
        let bad = (1..200)
            .map(|n| (0.1, n))
            .find(|&(l, n)| (l / n as f64) * n as f64 != l)
            .unwrap();
        assert!(GridSpec::one_d(bad.0, bad.1).is_err());
    }

    #[test]
    fn wraparound_offsets() {
        let g = GridSpec::one_d(8.0, 8).unwrap();
        assert_eq!(g.step_offset(0, 7), [-1, 0]);
        assert_eq!(g.step_offset(7, 0), [1, 0]);
        assert_eq!(g.step_offset(0, 4), [4, 0]);
        assert_eq!(g.torus_distance(1, 6), 3.0);
        assert_eq!(g.shifted(6, GridShift::one_d(3)), 1);
    }

    #[test]
    fn two_d_indexing_round_trips() {
        let g = GridSpec::new(&[4.0, 8.0], &[4, 8]).unwrap();
        for flat in 0..g.node_count() {
            assert_eq!(g.flat_index(g.multi_index(flat)), flat);
        }
        assert_eq!(g.coords(g.flat_index([1, 2])), [1.0, 2.0]);
        assert_eq!(g.shifted(g.flat_index([3, 7]), GridShift([1, 1])), 0);
    }

    #[test]
    fn shift_from_coords_requires_alignment() {
        let g = GridSpec::one_d(4.0, 16).unwrap();
        assert_eq!(g.shift_from_coords(&[0.75]).unwrap(), GridShift::one_d(3));
        assert!(g.shift_from_coords(&[0.3]).is_err());
        assert!(g.shift_from_coords(&[0.25, 0.25]).is_err());
    }
}
