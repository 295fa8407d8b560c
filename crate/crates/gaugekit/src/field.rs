//! Grid-sized field containers.
//!
//! Algebra-valued fields store basis coefficients, not matrices: an su(2)
//! value is 3 reals, su(3) is 8. Real coefficients are anti-hermitian and
//! traceless by construction, so the per-site membership invariant is exact
//! and the heavy kernels stay in flat f64 arrays. Group-valued fields store
//! packed complex matrix entries and are validated on construction.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Grid, MAX_D};
use crate::lie::{self, CMat, GroupElement, GroupKind};

pub const MAX_DG: usize = 8;

/// Algebra-valued field with `ncomp` components per site.
#[derive(Clone, Debug)]
pub struct LieField {
    pub grid: Arc<Grid>,
    pub kind: GroupKind,
    pub ncomp: usize,
    /// Layout: site-major, then component, then basis coefficient.
    pub data: Vec<f64>,
}

impl LieField {
    pub fn zeros(grid: Arc<Grid>, kind: GroupKind, ncomp: usize) -> Self {
        let len = grid.len() * ncomp * kind.dim_g();
        LieField { grid, kind, ncomp, data: vec![0.0; len] }
    }

    #[inline]
    pub fn dg(&self) -> usize {
        self.kind.dim_g()
    }

    #[inline]
    pub fn at(&self, site: usize, comp: usize) -> &[f64] {
        let dg = self.dg();
        let base = (site * self.ncomp + comp) * dg;
        &self.data[base..base + dg]
    }

    #[inline]
    pub fn at_mut(&mut self, site: usize, comp: usize) -> &mut [f64] {
        let dg = self.dg();
        let base = (site * self.ncomp + comp) * dg;
        &mut self.data[base..base + dg]
    }

    pub fn set(&mut self, site: usize, comp: usize, coeffs: &[f64]) {
        self.at_mut(site, comp).copy_from_slice(coeffs);
    }

    /// Fills from a closure giving per-component coefficients at a position.
    pub fn fill_with(&mut self, mut f: impl FnMut(&[f64], usize, &mut [f64])) {
        let dg = self.dg();
        let ncomp = self.ncomp;
        let grid = self.grid.clone();
        for site in 0..grid.len() {
            let p = grid.pos(site);
            for comp in 0..ncomp {
                let base = (site * ncomp + comp) * dg;
                f(&p[..grid.d], comp, &mut self.data[base..base + dg]);
            }
        }
    }

    /// Pointwise algebra norm over all components:
    /// (Σ_comp ⟨u_comp, u_comp⟩)^{1/2}.
    pub fn site_norm(&self, site: usize) -> f64 {
        let mut s = 0.0;
        for comp in 0..self.ncomp {
            s += lie::norm_sq_coeffs(self.at(site, comp));
        }
        s.sqrt()
    }

    /// L² norm: (Σ_x w(x) Σ_comp |u_comp(x)|²)^{1/2}, trapezoidal weights.
    pub fn l2_norm(&self) -> f64 {
        let mut s = 0.0;
        for site in 0..self.grid.len() {
            let w = self.grid.quad_weight(&self.grid.coords(site));
            let mut t = 0.0;
            for comp in 0..self.ncomp {
                t += lie::norm_sq_coeffs(self.at(site, comp));
            }
            s += w * t;
        }
        s.sqrt()
    }

    /// Max over sites of the pointwise norm.
    pub fn sup_norm(&self) -> f64 {
        let mut worst = 0.0f64;
        for site in 0..self.grid.len() {
            worst = worst.max(self.site_norm(site));
        }
        worst
    }

    /// self += s·other (same shape).
    pub fn axpy(&mut self, s: f64, other: &LieField) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        for a in self.data.iter_mut() {
            *a *= s;
        }
    }

    pub fn check_same_shape(&self, other: &LieField) -> Result<()> {
        if !self.grid.same_shape(&other.grid) {
            return Err(Error::validation("field grids differ"));
        }
        if self.kind != other.kind || self.ncomp != other.ncomp {
            return Err(Error::validation("field shapes differ"));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let expect = self.grid.len() * self.ncomp * self.dg();
        if self.data.len() != expect {
            return Err(Error::validation("field data length mismatch"));
        }
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("field contains non-finite values"));
        }
        Ok(())
    }

    /// Trilinear (multi-linear in d axes) interpolation of all components at
    /// an arbitrary point, clamped to the box.
    pub fn interp(&self, p: &[f64], out: &mut [f64]) {
        let g = &self.grid;
        let d = g.d;
        let dg = self.dg();
        let ncomp = self.ncomp;
        let mut base_c = [0usize; MAX_D];
        let mut frac = [0.0f64; MAX_D];
        for ax in 0..d {
            let t = ((p[ax] - g.lo[ax]) / g.h).clamp(0.0, (g.dims[ax] - 1) as f64);
            let i = (t.floor() as usize).min(g.dims[ax] - 2);
            base_c[ax] = i;
            frac[ax] = t - i as f64;
        }
        for v in out.iter_mut() {
            *v = 0.0;
        }
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut c = base_c;
            for ax in 0..d {
                if corner >> ax & 1 == 1 {
                    c[ax] += 1;
                    w *= frac[ax];
                } else {
                    w *= 1.0 - frac[ax];
                }
            }
            if w == 0.0 {
                continue;
            }
            let site = g.index(&c[..d]);
            let base = (site * ncomp) * dg;
            let vals = &self.data[base..base + ncomp * dg];
            for (o, v) in out.iter_mut().zip(vals) {
                *o += w * v;
            }
        }
    }
}

/// Gauge potential: d components A_j, units 1/length.
#[derive(Clone, Debug)]
pub struct GaugeField(pub LieField);

/// Electric field: d components e_j, units 1/length².
#[derive(Clone, Debug)]
pub struct ElectricField(pub LieField);

/// Curvature: d(d−1)/2 components F_{jk}, j < k; F_{kj} = −F_{jk}.
#[derive(Clone, Debug)]
pub struct CurvatureField(pub LieField);

impl GaugeField {
    pub fn zeros(grid: Arc<Grid>, kind: GroupKind) -> Self {
        let d = grid.d;
        GaugeField(LieField::zeros(grid, kind, d))
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.0.grid
    }

    pub fn kind(&self) -> GroupKind {
        self.0.kind
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.ncomp != self.0.grid.d {
            return Err(Error::validation("gauge field needs d components"));
        }
        self.0.validate()
    }
}

impl ElectricField {
    pub fn zeros(grid: Arc<Grid>, kind: GroupKind) -> Self {
        let d = grid.d;
        ElectricField(LieField::zeros(grid, kind, d))
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.ncomp != self.0.grid.d {
            return Err(Error::validation("electric field needs d components"));
        }
        self.0.validate()
    }
}

/// Index of the (j,k) pair, j < k, in the curvature component order
/// [01, 02, ..., 0(d−1), 12, ...].
#[inline]
pub fn pair_index(d: usize, j: usize, k: usize) -> usize {
    debug_assert!(j < k && k < d);
    // pairs before row j: j·d − j(j+1)/2
    j * d - j * (j + 1) / 2 + (k - j - 1)
}

pub fn n_pairs(d: usize) -> usize {
    d * (d - 1) / 2
}

impl CurvatureField {
    pub fn zeros(grid: Arc<Grid>, kind: GroupKind) -> Self {
        let nc = n_pairs(grid.d);
        CurvatureField(LieField::zeros(grid, kind, nc))
    }

    pub fn comp(&self, site: usize, j: usize, k: usize) -> &[f64] {
        self.0.at(site, pair_index(self.0.grid.d, j, k))
    }
}

/// Pointwise group-valued field, stored as packed complex entries
/// (row-major, re/im interleaved; 2N² reals per site).
#[derive(Clone, Debug)]
pub struct GaugeTransformField {
    pub grid: Arc<Grid>,
    pub kind: GroupKind,
    pub data: Vec<f64>,
}

impl GaugeTransformField {
    pub fn identity(grid: Arc<Grid>, kind: GroupKind) -> Self {
        let n = kind.n();
        let stride = 2 * n * n;
        let mut data = vec![0.0; grid.len() * stride];
        for site in 0..grid.len() {
            for i in 0..n {
                data[site * stride + 2 * (i * n + i)] = 1.0;
            }
        }
        GaugeTransformField { grid, kind, data }
    }

    #[inline]
    pub fn stride(&self) -> usize {
        let n = self.kind.n();
        2 * n * n
    }

    pub fn get(&self, site: usize) -> CMat {
        let n = self.kind.n();
        let base = site * self.stride();
        let mut m = CMat::zero(n);
        for i in 0..n {
            for j in 0..n {
                let off = base + 2 * (i * n + j);
                m.set(i, j, num_complex::Complex64::new(self.data[off], self.data[off + 1]));
            }
        }
        m
    }

    pub fn set(&mut self, site: usize, m: &CMat) {
        let n = self.kind.n();
        let base = site * self.stride();
        for i in 0..n {
            for j in 0..n {
                let off = base + 2 * (i * n + j);
                let v = m.get(i, j);
                self.data[off] = v.re;
                self.data[off + 1] = v.im;
            }
        }
    }

    /// Checks the per-site group membership invariants.
    pub fn validate(&self) -> Result<()> {
        if self.data.len() != self.grid.len() * self.stride() {
            return Err(Error::validation("gauge transform data length mismatch"));
        }
        for site in 0..self.grid.len() {
            GroupElement::new(self.get(site)).map_err(|e| {
                Error::validation(format!("site {site}: {e}"))
            })?;
        }
        Ok(())
    }

    /// Pointwise inverse (adjoint).
    pub fn inverse(&self) -> Self {
        let mut out = self.clone();
        for site in 0..self.grid.len() {
            out.set(site, &self.get(site).adjoint());
        }
        out
    }

    /// Pointwise product (self · other).
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if !self.grid.same_shape(&other.grid) || self.kind != other.kind {
            return Err(Error::validation("gauge transform shapes differ"));
        }
        let mut out = self.clone();
        for site in 0..self.grid.len() {
            out.set(site, &self.get(site).mul(&other.get(site)));
        }
        Ok(out)
    }
}

/// Time-slice data (a, e) with the declared Gauss-constraint tolerance it
/// was constructed to satisfy.
#[derive(Clone, Debug)]
pub struct FieldState {
    pub a: GaugeField,
    pub e: ElectricField,
    /// L² bound on the constraint residual declared by the producer.
    pub constraint_tol: f64,
}

impl FieldState {
    pub fn new(a: GaugeField, e: ElectricField, constraint_tol: f64) -> Result<Self> {
        a.validate()?;
        e.validate()?;
        a.0.check_same_shape(&e.0)?;
        Ok(FieldState { a, e, constraint_tol })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid() -> Arc<Grid> {
        Arc::new(Grid::cube(3, 8, -1.0, 1.0).unwrap())
    }

    #[test]
    fn pair_index_enumerates_upper_triangle() {
        assert_eq!(pair_index(4, 0, 1), 0);
        assert_eq!(pair_index(4, 0, 3), 2);
        assert_eq!(pair_index(4, 1, 2), 3);
        assert_eq!(pair_index(4, 2, 3), 5);
        assert_eq!(n_pairs(4), 6);
        assert_eq!(n_pairs(3), 3);
        let mut seen = vec![false; 6];
        for j in 0..4 {
            for k in (j + 1)..4 {
                seen[pair_index(4, j, k)] = true;
            }
        }
        assert!(seen.iter().all(|&b| b));
    }

    #[test]
    fn fill_and_norms() {
        let g = small_grid();
        let mut f = LieField::zeros(g.clone(), GroupKind::Su2, 1);
        f.fill_with(|_, _, c| {
            c[0] = 1.0;
            c[1] = 0.0;
            c[2] = 0.0;
        });
        // |u|² = 2 pointwise ⇒ L² norm² = 2·volume = 16
        assert!((f.l2_norm() - 16.0f64.sqrt()).abs() < 1e-12);
        assert!((f.sup_norm() - 2.0f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn interp_is_exact_on_multilinear_data() {
        let g = small_grid();
        let mut f = LieField::zeros(g.clone(), GroupKind::Su2, 2);
        f.fill_with(|p, comp, c| {
            c[0] = p[0] * p[1] + 2.0 * p[2] + comp as f64;
            c[1] = p[0];
            c[2] = 0.5;
        });
        let mut out = [0.0; 6];
        let p = [0.3, -0.45, 0.7];
        f.interp(&p, &mut out);
        assert!((out[0] - (p[0] * p[1] + 2.0 * p[2])).abs() < 1e-13);
        assert!((out[3] - (p[0] * p[1] + 2.0 * p[2] + 1.0)).abs() < 1e-13);
        assert!((out[1] - p[0]).abs() < 1e-13);
        assert!((out[5] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn gauge_transform_field_validates() {
        let g = small_grid();
        let mut o = GaugeTransformField::identity(g.clone(), GroupKind::Su2);
        o.validate().unwrap();
        // corrupt one site
        let stride = o.stride();
        o.data[5 * stride] = 2.0;
        assert!(o.validate().is_err());
    }

    #[test]
    fn transform_inverse_is_pointwise_adjoint() {
        let g = small_grid();
        let mut o = GaugeTransformField::identity(g.clone(), GroupKind::Su2);
        let a = lie::exp_coeffs(GroupKind::Su2, &[0.3, -0.2, 0.9]);
        for site in 0..g.len() {
            o.set(site, &a);
        }
        let prod = o.mul(&o.inverse()).unwrap();
        for site in [0, 100, g.len() - 1] {
            assert!(prod.get(site).sub(&CMat::identity(2)).norm() < 1e-14);
        }
    }

    #[test]
    fn state_requires_matching_grids() {
        let g = small_grid();
        let g2 = Arc::new(Grid::cube(3, 9, -1.0, 1.0).unwrap());
        let a = GaugeField::zeros(g.clone(), GroupKind::Su2);
        let e = ElectricField::zeros(g2, GroupKind::Su2);
        assert!(FieldState::new(a, e, 1e-10).is_err());
    }
}
