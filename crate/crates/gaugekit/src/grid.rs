//! Uniform box grids in ℝ^d, d ∈ {2, 3, 4}.
//!
//! Sites include both box corners: spacing h = (hi − lo)/(n − 1) per axis,
//! required equal across axes. Site order is row-major with the last axis
//! fastest, matching the on-disk layout.
//!
//! d = 2 exists only to serve planar patching; field calculus and evolution
//! are exercised in d = 3 and 4.

use crate::error::{Error, Result};

pub const MAX_D: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub d: usize,
    pub dims: [usize; MAX_D],
    pub lo: [f64; MAX_D],
    pub hi: [f64; MAX_D],
    /// Axis-uniform spacing.
    pub h: f64,
    strides: [usize; MAX_D],
    len: usize,
}

impl Grid {
    pub fn new(d: usize, dims: &[usize], lo: &[f64], hi: &[f64]) -> Result<Self> {
        if !(2..=MAX_D).contains(&d) {
            return Err(Error::validation(format!("unsupported dimension d={d}")));
        }
        if dims.len() != d || lo.len() != d || hi.len() != d {
            return Err(Error::validation("grid: parameter lengths must equal d"));
        }
        let mut g = Grid {
            d,
            dims: [1; MAX_D],
            lo: [0.0; MAX_D],
            hi: [0.0; MAX_D],
            h: 0.0,
            strides: [0; MAX_D],
            len: 1,
        };
        for ax in 0..d {
            if dims[ax] < 8 {
                return Err(Error::validation(format!(
                    "grid: n={} on axis {ax}, need n ≥ 8",
                    dims[ax]
                )));
            }
            if !(hi[ax] > lo[ax]) {
                return Err(Error::validation("grid: hi must exceed lo"));
            }
            g.dims[ax] = dims[ax];
            g.lo[ax] = lo[ax];
            g.hi[ax] = hi[ax];
        }
        let h0 = (hi[0] - lo[0]) / (dims[0] - 1) as f64;
        for ax in 1..d {
            let h_ax = (hi[ax] - lo[ax]) / (dims[ax] - 1) as f64;
            if ((h_ax - h0) / h0).abs() > 1e-9 {
                return Err(Error::validation("grid: spacing must be axis-uniform"));
            }
        }
        g.h = h0;
        let mut s = 1usize;
        for ax in (0..d).rev() {
            g.strides[ax] = s;
            s = s.checked_mul(g.dims[ax]).ok_or_else(|| Error::validation("grid too large"))?;
        }
        g.len = s;
        Ok(g)
    }

    /// Cube [lo, hi]^d with n points per axis.
    pub fn cube(d: usize, n: usize, lo: f64, hi: f64) -> Result<Self> {
        let dims = vec![n; d];
        let los = vec![lo; d];
        let his = vec![hi; d];
        Self::new(d, &dims, &los, &his)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, c: &[usize]) -> usize {
        let mut idx = 0;
        for ax in 0..self.d {
            debug_assert!(c[ax] < self.dims[ax]);
            idx += c[ax] * self.strides[ax];
        }
        idx
    }

    #[inline]
    pub fn coords(&self, mut idx: usize) -> [usize; MAX_D] {
        let mut c = [0usize; MAX_D];
        for ax in 0..self.d {
            c[ax] = idx / self.strides[ax];
            idx %= self.strides[ax];
        }
        c
    }

    #[inline]
    pub fn axis_pos(&self, ci: usize, ax: usize) -> f64 {
        self.lo[ax] + self.h * ci as f64
    }

    #[inline]
    pub fn pos_of_coords(&self, c: &[usize; MAX_D]) -> [f64; MAX_D] {
        let mut p = [0.0; MAX_D];
        for ax in 0..self.d {
            p[ax] = self.axis_pos(c[ax], ax);
        }
        p
    }

    #[inline]
    pub fn pos(&self, idx: usize) -> [f64; MAX_D] {
        self.pos_of_coords(&self.coords(idx))
    }

    /// Offset site index along one axis; None past the box face.
    #[inline]
    pub fn step(&self, idx: usize, ax: usize, delta: isize) -> Option<usize> {
        let c = self.coords(idx)[ax] as isize + delta;
        if c < 0 || c >= self.dims[ax] as isize {
            None
        } else {
            Some((idx as isize + delta * self.strides[ax] as isize) as usize)
        }
    }

    /// Periodic neighbor along one axis (wraps in index space, so the two
    /// face sites are distinct points; used by the periodic evolution loop).
    #[inline]
    pub fn step_wrap(&self, idx: usize, ax: usize, delta: isize) -> usize {
        let n = self.dims[ax] as isize;
        let c = self.coords(idx)[ax] as isize;
        let cw = (c + delta).rem_euclid(n);
        (idx as isize + (cw - c) * self.strides[ax] as isize) as usize
    }

    /// Trapezoidal quadrature weight including the cell volume h^d.
    #[inline]
    pub fn quad_weight(&self, c: &[usize; MAX_D]) -> f64 {
        let mut w = self.h.powi(self.d as i32);
        for ax in 0..self.d {
            if c[ax] == 0 || c[ax] + 1 == self.dims[ax] {
                w *= 0.5;
            }
        }
        w
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.d as i32)
    }

    /// Largest |hi − lo| diagonal, the cap for concentration-scale searches.
    pub fn diameter(&self) -> f64 {
        let mut s = 0.0;
        for ax in 0..self.d {
            s += (self.hi[ax] - self.lo[ax]).powi(2);
        }
        s.sqrt()
    }

    pub fn same_shape(&self, o: &Grid) -> bool {
        self == o
    }

    /// Second-order first-derivative stencil along `ax` at a site: list of
    /// (coordinate offset, coefficient/h). Central in the interior, one-sided
    /// second order on the faces.
    #[inline]
    pub fn deriv_stencil(&self, ci: usize, ax: usize) -> [(isize, f64); 3] {
        let inv2h = 1.0 / (2.0 * self.h);
        if ci == 0 {
            [(0, -3.0 * inv2h), (1, 4.0 * inv2h), (2, -inv2h)]
        } else if ci + 1 == self.dims[ax] {
            [(0, 3.0 * inv2h), (-1, -4.0 * inv2h), (-2, inv2h)]
        } else {
            [(-1, -inv2h), (1, inv2h), (0, 0.0)]
        }
    }

    /// Euclidean distance between two sites.
    pub fn dist(&self, a: usize, b: usize) -> f64 {
        let pa = self.pos(a);
        let pb = self.pos(b);
        let mut s = 0.0;
        for ax in 0..self.d {
            s += (pa[ax] - pb[ax]).powi(2);
        }
        s.sqrt()
    }

    /// Distance from a site to a point.
    pub fn dist_to(&self, idx: usize, p: &[f64]) -> f64 {
        let q = self.pos(idx);
        let mut s = 0.0;
        for ax in 0..self.d {
            s += (q[ax] - p[ax]).powi(2);
        }
        s.sqrt()
    }

    /// Iterates the axis-aligned index block of sites within L∞ radius `r`
    /// of the point `p` (superset of any ball of radius r for masking).
    pub fn block_around(&self, p: &[f64], r: f64) -> BlockIter<'_> {
        let mut lo_c = [0usize; MAX_D];
        let mut hi_c = [0usize; MAX_D];
        for ax in 0..self.d {
            let a = ((p[ax] - r - self.lo[ax]) / self.h).ceil().max(0.0) as usize;
            let b = ((p[ax] + r - self.lo[ax]) / self.h).floor();
            let b = if b < 0.0 { 0 } else { (b as usize).min(self.dims[ax] - 1) };
            lo_c[ax] = a.min(self.dims[ax] - 1);
            hi_c[ax] = b;
        }
        BlockIter::new(self, lo_c, hi_c)
    }
}

/// Iterator over a rectangular block of site coordinates (inclusive bounds).
pub struct BlockIter<'g> {
    grid: &'g Grid,
    lo: [usize; MAX_D],
    hi: [usize; MAX_D],
    cur: [usize; MAX_D],
    done: bool,
}

impl<'g> BlockIter<'g> {
    fn new(grid: &'g Grid, lo: [usize; MAX_D], hi: [usize; MAX_D]) -> Self {
        let mut done = false;
        for ax in 0..grid.d {
            if lo[ax] > hi[ax] {
                done = true;
            }
        }
        BlockIter { grid, lo, hi, cur: lo, done }
    }
}

impl Iterator for BlockIter<'_> {
    type Item = usize;
    fn next(&mut self) -> Option<usize> {
        if self.done {
            return None;
        }
        let idx = self.grid.index(&self.cur[..self.grid.d]);
        // advance odometer, last axis fastest
        let mut ax = self.grid.d;
        loop {
            if ax == 0 {
                self.done = true;
                break;
            }
            ax -= 1;
            if self.cur[ax] < self.hi[ax] {
                self.cur[ax] += 1;
                for a2 in ax + 1..self.grid.d {
                    self.cur[a2] = self.lo[a2];
                }
                break;
            }
        }
        Some(idx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_roundtrip_indexing() {
        let g = Grid::cube(3, 8, -1.0, 1.0).unwrap();
        assert_eq!(g.len(), 512);
        for idx in [0usize, 1, 7, 8, 63, 64, 511] {
            let c = g.coords(idx);
            assert_eq!(g.index(&c[..3]), idx);
        }
        // last axis fastest
        assert_eq!(g.coords(1), [0, 0, 1, 0]);
        assert_eq!(g.coords(8), [0, 1, 0, 0]);
    }

    #[test]
    fn spacing_and_positions() {
        let g = Grid::cube(4, 9, -2.0, 2.0).unwrap();
        assert!((g.h - 0.5).abs() < 1e-15);
        let p = g.pos(g.len() - 1);
        for ax in 0..4 {
            assert!((p[ax] - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Grid::cube(5, 8, 0.0, 1.0).is_err());
        assert!(Grid::cube(1, 8, 0.0, 1.0).is_err());
        assert!(Grid::cube(3, 7, 0.0, 1.0).is_err());
        assert!(Grid::cube(3, 8, 1.0, 1.0).is_err());
        // non-uniform spacing across axes
        assert!(Grid::new(2, &[8, 8], &[0.0, 0.0], &[1.0, 2.0]).is_err());
        // non-cubic but uniform-h is fine
        assert!(Grid::new(2, &[8, 15], &[0.0, 0.0], &[1.0, 2.0]).is_ok());
    }

    #[test]
    fn step_edges() {
        let g = Grid::cube(2, 8, 0.0, 1.0).unwrap();
        let corner = g.index(&[0, 0]);
        assert_eq!(g.step(corner, 0, -1), None);
        assert_eq!(g.step(corner, 1, 1), Some(g.index(&[0, 1])));
        assert_eq!(g.step_wrap(corner, 0, -1), g.index(&[7, 0]));
        assert_eq!(g.step_wrap(corner, 0, -8), corner);
    }

    #[test]
    fn trapezoid_weights_sum_to_volume() {
        let g = Grid::cube(3, 11, 0.0, 2.0).unwrap();
        let mut s = 0.0;
        for idx in 0..g.len() {
            s += g.quad_weight(&g.coords(idx));
        }
        assert!((s - 8.0).abs() < 1e-12);
    }

    #[test]
    fn one_sided_stencil_is_second_order() {
        // derivative of x² at x = 0 with the face stencil: exact for quadratics
        let g = Grid::cube(2, 8, 0.0, 7.0).unwrap(); // h = 1
        let f = |x: f64| x * x;
        let mut du = 0.0;
        for (off, w) in g.deriv_stencil(0, 0) {
            du += w * f(0.0 + off as f64);
        }
        assert!((du - 0.0).abs() < 1e-13);
        let mut du7 = 0.0;
        for (off, w) in g.deriv_stencil(7, 0) {
            du7 += w * f(7.0 + off as f64);
        }
        assert!((du7 - 14.0).abs() < 1e-12);
    }

    #[test]
    fn block_iter_covers_ball_superset() {
        let g = Grid::cube(3, 9, -1.0, 1.0).unwrap();
        let center = [0.1, 0.0, -0.2, 0.0];
        let r = 0.5;
        let block: Vec<usize> = g.block_around(&center, r).collect();
        for idx in 0..g.len() {
            if g.dist_to(idx, &center) <= r {
                assert!(block.contains(&idx));
            }
        }
    }
}
