//! Discrete differential calculus on box grids: curvature, gauge
//! transformation, energies, the constraint residual, concentration scales,
//! and Sobolev seminorms.
//!
//! All first derivatives are second-order stencils — central in the interior,
//! one-sided at box faces (`Grid::deriv_stencil`). Quadratures are
//! trapezoidal. Large-grid reductions (energy, topological densities) stream
//! the per-site curvature instead of materializing a CurvatureField.

use crate::error::{Error, Result};
use crate::field::{
    n_pairs, pair_index, CurvatureField, ElectricField, FieldState, GaugeField,
    GaugeTransformField, LieField, MAX_DG,
};
use crate::grid::{Grid, MAX_D};
use crate::lie;

/// Writes the stencil derivative ∂_ax of component `comp` at `site` into
/// `out` (length dim_g).
#[inline]
pub fn deriv_at(f: &LieField, site: usize, comp: usize, ax: usize, out: &mut [f64]) {
    let g = &f.grid;
    let ci = g.coords(site)[ax];
    for o in out.iter_mut() {
        *o = 0.0;
    }
    for (off, w) in g.deriv_stencil(ci, ax) {
        if w == 0.0 {
            continue;
        }
        let nb = g.step(site, ax, off).expect("stencil stays in box");
        for (o, v) in out.iter_mut().zip(f.at(nb, comp)) {
            *o += w * v;
        }
    }
}

/// Scratch buffer holding one site's curvature components.
pub struct CurvSite {
    pub np: usize,
    pub dg: usize,
    vals: [f64; 6 * MAX_DG],
}

impl CurvSite {
    fn new(np: usize, dg: usize) -> Self {
        CurvSite { np, dg, vals: [0.0; 6 * MAX_DG] }
    }

    #[inline]
    pub fn comp(&self, i: usize) -> &[f64] {
        &self.vals[i * self.dg..(i + 1) * self.dg]
    }

    /// |F(x)|² = Σ_{j<k} ⟨F_jk, F_jk⟩.
    pub fn norm_sq(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.np {
            s += lie::norm_sq_coeffs(self.comp(i));
        }
        s
    }
}

/// Computes F_{jk} = ∂_j A_k − ∂_k A_j + [A_j, A_k] at one site into `buf`.
#[inline]
fn curvature_site(a: &GaugeField, site: usize, buf: &mut CurvSite) {
    let d = a.0.grid.d;
    let dg = buf.dg;
    let mut da = [0.0; MAX_DG];
    let mut db = [0.0; MAX_DG];
    let mut br = [0.0; MAX_DG];
    for j in 0..d {
        for k in (j + 1)..d {
            deriv_at(&a.0, site, k, j, &mut da[..dg]);
            deriv_at(&a.0, site, j, k, &mut db[..dg]);
            lie::bracket_coeffs(a.0.kind, a.0.at(site, j), a.0.at(site, k), &mut br[..dg]);
            let p = pair_index(d, j, k);
            let out = &mut buf.vals[p * dg..(p + 1) * dg];
            for c in 0..dg {
                out[c] = da[c] - db[c] + br[c];
            }
        }
    }
}

/// Streams the curvature site by site without materializing the field.
pub fn for_each_curvature(a: &GaugeField, mut visit: impl FnMut(usize, &CurvSite)) {
    let d = a.0.grid.d;
    let mut buf = CurvSite::new(n_pairs(d), a.0.dg());
    for site in 0..a.0.grid.len() {
        curvature_site(a, site, &mut buf);
        visit(site, &buf);
    }
}

/// F = dA + ½[A ∧ A] in components, materialized.
pub fn curvature(a: &GaugeField) -> CurvatureField {
    let mut f = CurvatureField::zeros(a.0.grid.clone(), a.0.kind);
    let np = n_pairs(a.0.grid.d);
    let dg = a.0.dg();
    for_each_curvature(a, |site, buf| {
        let base = site * np * dg;
        f.0.data[base..base + np * dg].copy_from_slice(&buf.vals[..np * dg]);
    });
    f
}

/// A ↦ Ad(O)A − (∂O)O⁻¹. The derivative term is projected back onto the
/// algebra: the discretized (D_jO)O† carries an O(h²) hermitian defect that
/// would otherwise leak outside su(N).
pub fn gauge_transform(a: &GaugeField, o: &GaugeTransformField) -> Result<GaugeField> {
    if !a.0.grid.same_shape(&o.grid) {
        return Err(Error::validation("gauge_transform: grid mismatch"));
    }
    if a.0.kind != o.kind {
        return Err(Error::validation("gauge_transform: group mismatch"));
    }
    let g = a.0.grid.clone();
    let kind = a.0.kind;
    let mut out = GaugeField::zeros(g.clone(), kind);
    let mut buf = [[0.0; MAX_DG]; crate::grid::MAX_D];
    for site in 0..g.len() {
        gauge_transform_site(a, o, site, &mut buf);
        for j in 0..g.d {
            out.0.at_mut(site, j).copy_from_slice(&buf[j][..kind.dim_g()]);
        }
    }
    Ok(out)
}

/// e ↦ Ad(O)e (no derivative term: e transforms as a tensor).
/// One site of the gauge transform: buf[j] receives the coefficients of
/// Ad(O)A_j − (∂_jO)O⁻¹ at `site`. Shared by the full-field transform and
/// the relaxation sweeps so both produce bitwise-identical values.
pub(crate) fn gauge_transform_site(
    a: &GaugeField,
    o: &GaugeTransformField,
    site: usize,
    buf: &mut [[f64; MAX_DG]; crate::grid::MAX_D],
) {
    let g = &a.0.grid;
    let kind = a.0.kind;
    let dg = kind.dim_g();
    let o_here = o.get(site);
    let o_inv = o_here.adjoint();
    let rot = lie::ad_matrix(kind, &o_here);
    let mut tmp = [0.0; MAX_DG];
    let c = g.coords(site);
    for j in 0..g.d {
        // Ad(O) A_j
        lie::apply_ad(&rot, a.0.at(site, j), &mut tmp[..dg]);
        // (∂_j O) O⁻¹, projected to the algebra
        let mut dmat = lie::CMat::zero(kind.n());
        for (off, w) in g.deriv_stencil(c[j], j) {
            if w == 0.0 {
                continue;
            }
            let nb = g.step(site, j, off).expect("stencil stays in box");
            dmat = dmat.add(&o.get(nb).scale_re(w));
        }
        let maurer = dmat.mul(&o_inv).project_algebra();
        let mut mc = [0.0; MAX_DG];
        lie::coeffs_from_matrix(kind, &maurer, &mut mc[..dg]);
        for cc in 0..dg {
            buf[j][cc] = tmp[cc] - mc[cc];
        }
    }
}

pub fn gauge_transform_electric(
    e: &ElectricField,
    o: &GaugeTransformField,
) -> Result<ElectricField> {
    let rotated = adjoint_rotate(&e.0, o)?;
    Ok(ElectricField(rotated))
}

/// Pointwise Ad(O) applied to every component of an algebra-valued field.
pub fn adjoint_rotate(f: &LieField, o: &GaugeTransformField) -> Result<LieField> {
    if !f.grid.same_shape(&o.grid) || f.kind != o.kind {
        return Err(Error::validation("adjoint_rotate: shape mismatch"));
    }
    let dg = f.dg();
    let mut out = f.clone();
    let mut tmp = [0.0; MAX_DG];
    for site in 0..f.grid.len() {
        let rot = lie::ad_matrix(f.kind, &o.get(site));
        for comp in 0..f.ncomp {
            lie::apply_ad(&rot, f.at(site, comp), &mut tmp[..dg]);
            out.at_mut(site, comp).copy_from_slice(&tmp[..dg]);
        }
    }
    Ok(out)
}

/// ½ Σ_{j,k} ⟨F_jk, F_jk⟩ integrated = Σ_{j<k} |F_jk|² integrated,
/// trapezoidal weights. Streams the curvature.
pub fn static_energy(a: &GaugeField) -> f64 {
    let g = a.0.grid.clone();
    let mut s = 0.0;
    for_each_curvature(a, |site, buf| {
        s += g.quad_weight(&g.coords(site)) * buf.norm_sq();
    });
    s
}

/// Per-site Gauss-constraint residual r = Σ_j (∂_j e_j + [a_j, e_j]) and its
/// L² norm.
pub fn gauss_residual(state: &FieldState) -> (LieField, f64) {
    let a = &state.a.0;
    let e = &state.e.0;
    let g = a.grid.clone();
    let d = g.d;
    let dg = a.dg();
    let mut r = LieField::zeros(g.clone(), a.kind, 1);
    let mut der = [0.0; MAX_DG];
    let mut br = [0.0; MAX_DG];
    for site in 0..g.len() {
        let acc = &mut r.data[site * dg..(site + 1) * dg];
        for j in 0..d {
            deriv_at(e, site, j, j, &mut der[..dg]);
            lie::bracket_coeffs(a.kind, a.at(site, j), e.at(site, j), &mut br[..dg]);
            for c in 0..dg {
                acc[c] += der[c] + br[c];
            }
        }
    }
    let norm = r.l2_norm();
    (r, norm)
}

/// D_j u = ∂_j u + [A_j, u] for a 𝔤-valued (single-component) field.
pub fn covariant_derivative(a: &GaugeField, u: &LieField, j: usize) -> Result<LieField> {
    if !a.0.grid.same_shape(&u.grid) || a.0.kind != u.kind {
        return Err(Error::validation("covariant_derivative: shape mismatch"));
    }
    if u.ncomp != 1 {
        return Err(Error::validation("covariant_derivative: expected one component"));
    }
    if j >= a.0.grid.d {
        return Err(Error::validation(format!("axis {j} out of range")));
    }
    let g = a.0.grid.clone();
    let dg = u.dg();
    let mut out = LieField::zeros(g.clone(), u.kind, 1);
    let mut der = [0.0; MAX_DG];
    let mut br = [0.0; MAX_DG];
    for site in 0..g.len() {
        deriv_at(u, site, 0, j, &mut der[..dg]);
        lie::bracket_coeffs(u.kind, a.0.at(site, j), u.at(site, 0), &mut br[..dg]);
        let dst = out.at_mut(site, 0);
        for c in 0..dg {
            dst[c] = der[c] + br[c];
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Concentration scales
// ---------------------------------------------------------------------------

/// Per-site masked integrand w(x)·|F(x)|^{d/2}; ball norms are power sums of
/// this, ‖F‖_{L^{d/2}(B)} = (Σ_{x∈B} dens)^{2/d}.
fn density_l_d_half(f: &CurvatureField) -> Vec<f64> {
    let g = &f.0.grid;
    let p = g.d as f64 / 2.0;
    let mut dens = vec![0.0; g.len()];
    for site in 0..g.len() {
        let w = g.quad_weight(&g.coords(site));
        dens[site] = w * f.0.site_norm(site).powf(p);
    }
    dens
}

fn ball_mass(g: &Grid, dens: &[f64], center: &[f64], r: f64) -> f64 {
    let mut s = 0.0;
    for idx in g.block_around(center, r) {
        if g.dist_to(idx, center) <= r {
            s += dens[idx];
        }
    }
    s
}

/// Candidate centers for the outer-radius search: every site on small grids,
/// otherwise the |F|-mass barycenter and its immediate neighborhood.
fn center_candidates(g: &Grid, dens: &[f64]) -> Vec<usize> {
    if g.len() <= 65536 {
        return (0..g.len()).collect();
    }
    let total: f64 = dens.iter().sum();
    let mut bary = [0.0f64; MAX_D];
    if total > 0.0 {
        for site in 0..g.len() {
            if dens[site] == 0.0 {
                continue;
            }
            let p = g.pos(site);
            for ax in 0..g.d {
                bary[ax] += dens[site] * p[ax];
            }
        }
        for b in bary.iter_mut() {
            *b /= total;
        }
    }
    let mut cand = Vec::new();
    let mut c0 = [0usize; MAX_D];
    for ax in 0..g.d {
        let t = ((bary[ax] - g.lo[ax]) / g.h).round();
        c0[ax] = (t.max(0.0) as usize).min(g.dims[ax] - 1);
    }
    // 3^d block around the barycenter site
    let mut offsets = vec![[0isize; MAX_D]];
    for ax in 0..g.d {
        let mut next = Vec::new();
        for o in &offsets {
            for delta in -1isize..=1 {
                let mut oo = *o;
                oo[ax] = delta;
                next.push(oo);
            }
        }
        offsets = next;
    }
    for o in offsets {
        let mut c = c0;
        let mut ok = true;
        for ax in 0..g.d {
            let v = c0[ax] as isize + o[ax];
            if v < 0 || v >= g.dims[ax] as isize {
                ok = false;
                break;
            }
            c[ax] = v as usize;
        }
        if ok {
            cand.push(g.index(&c[..g.d]));
        }
    }
    cand.sort_unstable();
    cand.dedup();
    cand
}

/// Largest r (to one spacing) such that every grid-centered ball of radius r
/// has ‖F‖_{L^{d/2}} ≤ eps; capped at the box diameter.
pub fn inner_concentration_scale(f: &CurvatureField, eps: f64) -> Result<f64> {
    if eps <= 0.0 {
        return Err(Error::validation("inner_concentration_scale: eps must be positive"));
    }
    let g = f.0.grid.clone();
    let dens = density_l_d_half(f);
    let budget = eps.powf(g.d as f64 / 2.0);
    let all_ok = |r: f64| -> bool {
        for site in 0..g.len() {
            let p = g.pos(site);
            if ball_mass(&g, &dens, &p[..], r) > budget {
                return false;
            }
        }
        true
    };
    let cap = g.diameter();
    if all_ok(cap) {
        return Ok(cap);
    }
    let mut lo = 0.0;
    let mut hi = cap;
    if !all_ok(0.0) {
        return Ok(0.0);
    }
    while hi - lo > g.h {
        let mid = 0.5 * (lo + hi);
        if all_ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Smallest r (to one spacing) such that some grid center x has
/// ‖F‖_{L^{d/2}} ≤ eps outside B_r(x); also returns the best center found.
pub fn outer_concentration_radius(f: &CurvatureField, eps: f64) -> Result<(f64, [f64; MAX_D])> {
    if eps <= 0.0 {
        return Err(Error::validation("outer_concentration_radius: eps must be positive"));
    }
    let g = f.0.grid.clone();
    let dens = density_l_d_half(f);
    let total: f64 = dens.iter().sum();
    let budget = eps.powf(g.d as f64 / 2.0);
    let candidates = center_candidates(&g, &dens);
    let best_center_at = |r: f64| -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for &site in &candidates {
            let p = g.pos(site);
            let exterior = total - ball_mass(&g, &dens, &p[..], r);
            if exterior <= budget {
                match best {
                    Some((b, _)) if b <= exterior => {}
                    _ => best = Some((exterior, site)),
                }
            }
        }
        best.map(|(_, s)| s)
    };
    if let Some(site) = best_center_at(0.0) {
        return Ok((0.0, g.pos(site)));
    }
    let mut lo = 0.0;
    let mut hi = g.diameter();
    if best_center_at(hi).is_none() {
        // exterior of the diameter ball is empty, so this cannot happen
        return Ok((hi, g.pos(candidates[0])));
    }
    while hi - lo > g.h {
        let mid = 0.5 * (lo + hi);
        if best_center_at(mid).is_some() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let site = best_center_at(hi).expect("upper bound feasible");
    Ok((hi, g.pos(site)))
}

// ---------------------------------------------------------------------------
// Sobolev seminorms
// ---------------------------------------------------------------------------

/// Discrete ‖u‖_{L^p} (order 0) or ‖∂u‖_{L^p} (order 1), trapezoidal
/// weights; the pointwise magnitude pools all components (and all axes for
/// order 1).
pub fn sobolev_seminorm(u: &LieField, order: u8, p: f64) -> Result<f64> {
    if !(1.0..f64::INFINITY).contains(&p) {
        return Err(Error::validation("sobolev_seminorm: p must be in [1, ∞)"));
    }
    if order > 1 {
        return Err(Error::validation("sobolev_seminorm: order must be 0 or 1"));
    }
    let g = u.grid.clone();
    let dg = u.dg();
    let mut s = 0.0;
    let mut der = [0.0; MAX_DG];
    for site in 0..g.len() {
        let mag_sq = if order == 0 {
            let mut t = 0.0;
            for comp in 0..u.ncomp {
                t += lie::norm_sq_coeffs(u.at(site, comp));
            }
            t
        } else {
            let mut t = 0.0;
            for comp in 0..u.ncomp {
                for ax in 0..g.d {
                    deriv_at(u, site, comp, ax, &mut der[..dg]);
                    t += lie::norm_sq_coeffs(&der[..dg]);
                }
            }
            t
        };
        s += g.quad_weight(&g.coords(site)) * mag_sq.powf(p / 2.0);
    }
    Ok(s.powf(1.0 / p))
}
