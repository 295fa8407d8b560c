//! Topological invariants in d = 4: Hodge star, second Chern number, the
//! characteristic number, the pointwise Bogomolny gap, (anti-)self-duality
//! residuals, and the degree of SU(2)-valued sphere maps.
//!
//! Orientation convention: ε₀₁₂₃ = +1 throughout (axes numbered from 0).
//! With the 't Hooft symbols used by the instanton constructors, the
//! reference self-dual BPST field has c₂ = −1; only |c₂| is asserted in
//! checks, the sign is a documented convention.

use crate::error::{Error, Result};
use crate::field::{CurvatureField, GaugeField};
use crate::lie::{self, CMat, GroupKind};

/// For d = 4 pair order [01, 02, 03, 12, 13, 23]:
/// (⋆F)_p = sign · F_{star(p)} with ε₀₁₂₃ = +1.
pub const STAR4: [(usize, f64); 6] =
    [(5, 1.0), (4, -1.0), (3, 1.0), (2, 1.0), (1, -1.0), (0, 1.0)];

fn require_d4(d: usize, what: &str) -> Result<()> {
    if d != 4 {
        return Err(Error::validation(format!("{what} requires d = 4, got d = {d}")));
    }
    Ok(())
}

/// (⋆F)_{jk} = ½ ε_{jklm} F_{lm}; exact component permutation with signs.
pub fn hodge_star(f: &CurvatureField) -> Result<CurvatureField> {
    require_d4(f.0.grid.d, "hodge_star")?;
    let dg = f.0.dg();
    let mut out = CurvatureField::zeros(f.0.grid.clone(), f.0.kind);
    for site in 0..f.0.grid.len() {
        for p in 0..6 {
            let (q, s) = STAR4[p];
            let src = f.0.at(site, q);
            let dst = out.0.at_mut(site, p);
            if s == 1.0 {
                dst.copy_from_slice(src);
            } else {
                for c in 0..dg {
                    dst[c] = -src[c];
                }
            }
        }
    }
    Ok(out)
}

/// Coefficient-level density S(x) with
/// tr(F ∧ F) = −4·S·vol and −⟨F ∧ F⟩ = −4·S·vol, so that
/// 𝛘 = −4∫S and c₂ = 𝛘 / 8π².
#[inline]
pub fn wedge_density(comps: impl Fn(usize) -> *const f64, dg: usize) -> f64 {
    // pairs (01,23), (02,13), (03,12) at indices (0,5), (1,4), (2,3)
    let dot = |a: usize, b: usize| -> f64 {
        let (pa, pb) = (comps(a), comps(b));
        let mut s = 0.0;
        for c in 0..dg {
            unsafe { s += *pa.add(c) * *pb.add(c) }
        }
        s
    };
    dot(0, 5) - dot(1, 4) + dot(2, 3)
}

fn site_wedge(f: &CurvatureField, site: usize) -> f64 {
    let dg = f.0.dg();
    wedge_density(|p| f.0.at(site, p).as_ptr(), dg)
}

/// Energy, characteristic number 𝛘 = ∫ −⟨F ∧ F⟩, and c₂ = 𝛘/8π².
#[derive(Clone, Copy, Debug)]
pub struct CharNumbers {
    pub c2: f64,
    pub chi_num: f64,
    pub energy: f64,
}

impl CharNumbers {
    /// Bogomolny at the integral level: E ≥ |𝛘| up to quadrature noise.
    pub fn check(&self, tol: f64) -> Result<()> {
        if self.energy < self.chi_num.abs() - tol {
            return Err(Error::numerical(format!(
                "energy {} below |chi| {}",
                self.energy,
                self.chi_num.abs()
            )));
        }
        Ok(())
    }
}

/// c₂ = (1/8π²) ∫ tr(F ∧ F), trapezoidal quadrature.
pub fn chern_number(f: &CurvatureField) -> Result<f64> {
    require_d4(f.0.grid.d, "chern_number")?;
    Ok(char_numbers_from_curvature(f)?.c2)
}

/// 𝛘 = ∫ −⟨F ∧ F⟩; equals 8π²·c₂ identically for the −tr pairing.
pub fn characteristic_number(f: &CurvatureField) -> Result<f64> {
    require_d4(f.0.grid.d, "characteristic_number")?;
    Ok(char_numbers_from_curvature(f)?.chi_num)
}

pub fn char_numbers_from_curvature(f: &CurvatureField) -> Result<CharNumbers> {
    require_d4(f.0.grid.d, "characteristic numbers")?;
    let g = &f.0.grid;
    let mut s = 0.0;
    let mut energy = 0.0;
    for site in 0..g.len() {
        let w = g.quad_weight(&g.coords(site));
        s += w * site_wedge(f, site);
        energy += w * f.0.site_norm(site).powi(2);
    }
    let chi = -4.0 * s;
    Ok(CharNumbers { c2: chi / (8.0 * std::f64::consts::PI.powi(2)), chi_num: chi, energy })
}

/// Same reductions computed by streaming the curvature of A — used on grids
/// where a materialized CurvatureField would not fit.
pub fn char_numbers(a: &GaugeField) -> Result<CharNumbers> {
    require_d4(a.0.grid.d, "characteristic numbers")?;
    let g = a.0.grid.clone();
    let dg = a.0.dg();
    let mut s = 0.0;
    let mut energy = 0.0;
    crate::calculus::for_each_curvature(a, |site, buf| {
        let w = g.quad_weight(&g.coords(site));
        s += w * wedge_density(|p| buf.comp(p).as_ptr(), dg);
        energy += w * buf.norm_sq();
    });
    let chi = -4.0 * s;
    Ok(CharNumbers { c2: chi / (8.0 * std::f64::consts::PI.powi(2)), chi_num: chi, energy })
}

/// Pointwise Bogomolny data: gap(x) = Σ_{j<k}|F_jk|² − |⟨F∧F⟩|(x) ≥ 0 up to
/// rounding, plus the integrated energy and |𝛘|.
pub struct BogomolnyGap {
    pub gap: Vec<f64>,
    pub energy: f64,
    pub abs_chi: f64,
    pub min_gap: f64,
}

pub fn bogomolny_gap(f: &CurvatureField) -> Result<BogomolnyGap> {
    require_d4(f.0.grid.d, "bogomolny_gap")?;
    let g = &f.0.grid;
    let mut gap = vec![0.0; g.len()];
    let mut energy = 0.0;
    let mut chi = 0.0;
    let mut min_gap = f64::INFINITY;
    for site in 0..g.len() {
        let w = g.quad_weight(&g.coords(site));
        let wedge = -4.0 * site_wedge(f, site);
        let e = f.0.site_norm(site).powi(2);
        let gp = e - wedge.abs();
        gap[site] = gp;
        min_gap = min_gap.min(gp);
        energy += w * e;
        chi += w * wedge;
    }
    Ok(BogomolnyGap { gap, energy, abs_chi: chi.abs(), min_gap })
}

/// Pointwise gap for a single 2-form sample given as 6 coefficient vectors
/// (used by the randomized acceptance sweep without building fields).
pub fn sample_gap(kind: GroupKind, comps: &[[f64; 8]; 6]) -> f64 {
    let dg = kind.dim_g();
    let mut e = 0.0;
    for comp in comps.iter() {
        e += lie::norm_sq_coeffs(&comp[..dg]);
    }
    let s = wedge_density(|p| comps[p].as_ptr(), dg);
    e - (4.0 * s).abs()
}

/// ‖F + sign·⋆F‖_{L²} / ‖F‖_{L²}. sign = −1 measures self-duality
/// (vanishes iff F = +⋆F), sign = +1 anti-self-duality.
pub fn sd_residual(f: &CurvatureField, sign: f64) -> Result<f64> {
    require_d4(f.0.grid.d, "sd_residual")?;
    let g = &f.0.grid;
    let dg = f.0.dg();
    let mut num = 0.0;
    let mut den = 0.0;
    for site in 0..g.len() {
        let w = g.quad_weight(&g.coords(site));
        for p in 0..6 {
            let (q, s) = STAR4[p];
            let fp = f.0.at(site, p);
            let fq = f.0.at(site, q);
            let mut nn = 0.0;
            let mut dd = 0.0;
            for c in 0..dg {
                let v = fp[c] + sign * s * fq[c];
                nn += v * v;
                dd += fp[c] * fp[c];
            }
            num += w * 2.0 * nn;
            den += w * 2.0 * dd;
        }
    }
    if den == 0.0 {
        return Err(Error::numerical("zero field"));
    }
    Ok((num / den).sqrt())
}

/// Streaming variant of `sd_residual` for both signs at once.
pub fn sd_residuals(a: &GaugeField) -> Result<(f64, f64)> {
    require_d4(a.0.grid.d, "sd_residual")?;
    let g = a.0.grid.clone();
    let dg = a.0.dg();
    let mut num_m = 0.0; // sign = −1
    let mut num_p = 0.0; // sign = +1
    let mut den = 0.0;
    crate::calculus::for_each_curvature(a, |site, buf| {
        let w = g.quad_weight(&g.coords(site));
        for p in 0..6 {
            let (q, s) = STAR4[p];
            let fp = buf.comp(p);
            let fq = buf.comp(q);
            for c in 0..dg {
                let vm = fp[c] - s * fq[c];
                let vp = fp[c] + s * fq[c];
                num_m += w * 2.0 * vm * vm;
                num_p += w * 2.0 * vp * vp;
                den += w * 2.0 * fp[c] * fp[c];
            }
        }
    });
    if den == 0.0 {
        return Err(Error::numerical("zero field"));
    }
    Ok(((num_m / den).sqrt(), (num_p / den).sqrt()))
}

// ---------------------------------------------------------------------------
// Degree of SU(2)-valued maps on S³
// ---------------------------------------------------------------------------

/// SU(2) samples on the structured hyperspherical grid
/// X(ψ,θ,φ) = (cos ψ, sin ψ cos θ, sin ψ sin θ cos φ, sin ψ sin θ sin φ),
/// ψ, θ ∈ [0, π] inclusive, φ ∈ [0, 2π) periodic.
#[derive(Clone, Debug)]
pub struct SphereSampling {
    pub dims: [usize; 3],
    /// 8 reals per node: 2×2 complex matrix, row-major, re/im interleaved.
    pub data: Vec<f64>,
}

impl SphereSampling {
    pub fn angles(&self, i: usize, j: usize, k: usize) -> (f64, f64, f64) {
        let pi = std::f64::consts::PI;
        (
            pi * i as f64 / (self.dims[0] - 1) as f64,
            pi * j as f64 / (self.dims[1] - 1) as f64,
            2.0 * pi * k as f64 / self.dims[2] as f64,
        )
    }

    /// Euclidean point of a node on S³ ⊂ ℝ⁴.
    pub fn point(&self, i: usize, j: usize, k: usize) -> [f64; 4] {
        let (psi, theta, phi) = self.angles(i, j, k);
        [
            psi.cos(),
            psi.sin() * theta.cos(),
            psi.sin() * theta.sin() * phi.cos(),
            psi.sin() * theta.sin() * phi.sin(),
        ]
    }

    #[inline]
    fn node(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> CMat {
        let base = self.node(i, j, k) * 8;
        let mut m = CMat::zero(2);
        for r in 0..2 {
            for c in 0..2 {
                let off = base + 2 * (r * 2 + c);
                m.set(r, c, num_complex::Complex64::new(self.data[off], self.data[off + 1]));
            }
        }
        m
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, m: &CMat) {
        let base = self.node(i, j, k) * 8;
        for r in 0..2 {
            for c in 0..2 {
                let off = base + 2 * (r * 2 + c);
                let v = m.get(r, c);
                self.data[off] = v.re;
                self.data[off + 1] = v.im;
            }
        }
    }

    /// Samples a map given in matrix form at the grid angles.
    pub fn sample(dims: [usize; 3], mut f: impl FnMut(f64, f64, f64) -> CMat) -> Result<Self> {
        if dims.iter().any(|&n| n < 8) {
            return Err(Error::validation("sphere grid needs ≥ 8 nodes per angle"));
        }
        let mut s = SphereSampling { dims, data: vec![0.0; dims[0] * dims[1] * dims[2] * 8] };
        for i in 0..dims[0] {
            for j in 0..dims[1] {
                for k in 0..dims[2] {
                    let (psi, theta, phi) = s.angles(i, j, k);
                    let m = f(psi, theta, phi);
                    s.set(i, j, k, &m);
                }
            }
        }
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        for i in 0..self.dims[0] {
            for j in 0..self.dims[1] {
                for k in 0..self.dims[2] {
                    let m = self.get(i, j, k);
                    lie::GroupElement::new(m).map_err(|_| {
                        Error::validation("degree: non-SU(2) value in sphere sampling")
                    })?;
                }
            }
        }
        Ok(())
    }
}

/// Unit quaternion of U ∈ SU(2) in the basis U = a·I + b·𝐢 + c·𝐣 + d·𝐤.
#[inline]
pub fn quaternion_of(m: &CMat) -> [f64; 4] {
    let u00 = m.get(0, 0);
    let u01 = m.get(0, 1);
    [u00.re, u01.re, u01.im, u00.im]
}

fn det4(r: &[[f64; 4]; 4]) -> f64 {
    let mut det = 0.0;
    // Laplace expansion along the first row with 3×3 minors.
    for col in 0..4 {
        let mut minor = [[0.0; 3]; 3];
        for i in 0..3 {
            let mut cc = 0;
            for j in 0..4 {
                if j == col {
                    continue;
                }
                minor[i][cc] = r[i + 1][j];
                cc += 1;
            }
        }
        let m3 = minor[0][0] * (minor[1][1] * minor[2][2] - minor[1][2] * minor[2][1])
            - minor[0][1] * (minor[1][0] * minor[2][2] - minor[1][2] * minor[2][0])
            + minor[0][2] * (minor[1][0] * minor[2][1] - minor[1][1] * minor[2][0]);
        det += if col % 2 == 0 { 1.0 } else { -1.0 } * r[0][col] * m3;
    }
    det
}

/// Degree of the sampled map S³ → SU(2) ≃ S³:
/// (1/2π²) ∫ det(q, ∂_ψ q, ∂_θ q, ∂_φ q) dψ dθ dφ — the pullback of the
/// normalized volume form. Near-integer for smooth maps; never rounded.
pub fn degree(s: &SphereSampling) -> Result<f64> {
    s.validate()?;
    let (np, nt, nf) = (s.dims[0], s.dims[1], s.dims[2]);
    let pi = std::f64::consts::PI;
    let (hp, ht, hf) = (pi / (np - 1) as f64, pi / (nt - 1) as f64, 2.0 * pi / nf as f64);
    let q_at = |i: usize, j: usize, k: usize| quaternion_of(&s.get(i, j, k));

    // second-order derivative along a clamped (non-periodic) axis
    let d_clamped = |get: &dyn Fn(isize) -> [f64; 4], i: usize, n: usize, h: f64| {
        let i = i as isize;
        let mut out = [0.0; 4];
        let stencil: [(isize, f64); 3] = if i == 0 {
            [(0, -3.0), (1, 4.0), (2, -1.0)]
        } else if i as usize == n - 1 {
            [(0, 3.0), (-1, -4.0), (-2, 1.0)]
        } else {
            [(-1, -1.0), (1, 1.0), (0, 0.0)]
        };
        for (off, w) in stencil {
            let v = get(i + off);
            for c in 0..4 {
                out[c] += w * v[c] / (2.0 * h);
            }
        }
        out
    };

    let mut total = 0.0;
    for i in 0..np {
        let wi = if i == 0 || i == np - 1 { 0.5 } else { 1.0 };
        for j in 0..nt {
            let wj = if j == 0 || j == nt - 1 { 0.5 } else { 1.0 };
            for k in 0..nf {
                let q = q_at(i, j, k);
                let dpsi = d_clamped(&|ii| q_at(ii as usize, j, k), i, np, hp);
                let dtheta = d_clamped(&|jj| q_at(i, jj as usize, k), j, nt, ht);
                // φ is periodic: central difference with wrap
                let kp = (k + 1) % nf;
                let km = (k + nf - 1) % nf;
                let qp = q_at(i, j, kp);
                let qm = q_at(i, j, km);
                let mut dphi = [0.0; 4];
                for c in 0..4 {
                    dphi[c] = (qp[c] - qm[c]) / (2.0 * hf);
                }
                total += wi * wj * det4(&[q, dpsi, dtheta, dphi]);
            }
        }
    }
    Ok(total * hp * ht * hf / (2.0 * pi * pi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::sync::Arc;

    fn grid4(n: usize) -> Arc<Grid> {
        Arc::new(Grid::cube(4, n, -1.0, 1.0).unwrap())
    }

    #[test]
    fn star_is_an_isometric_involution() {
        let g = grid4(8);
        let mut f = CurvatureField::zeros(g.clone(), GroupKind::Su2);
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for v in f.0.data.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        let sf = hodge_star(&f).unwrap();
        let ssf = hodge_star(&sf).unwrap();
        assert_eq!(f.0.data, ssf.0.data, "⋆⋆ must be the exact identity");
        for site in [0usize, 77, 4095] {
            assert_eq!(f.0.site_norm(site), sf.0.site_norm(site));
        }
    }

    #[test]
    fn star_moves_f12_to_f34() {
        // axes 0-indexed: the (0,1) component lands on (2,3) with + sign
        let g = grid4(8);
        let mut f = CurvatureField::zeros(g.clone(), GroupKind::Su2);
        for site in 0..g.len() {
            f.0.at_mut(site, 0)[2] = 1.0; // F_{01} = 𝐤
        }
        let sf = hodge_star(&f).unwrap();
        for site in [0usize, 100] {
            assert_eq!(sf.0.at(site, 5), &[0.0, 0.0, 1.0]); // (⋆F)_{23} = 𝐤
            assert_eq!(sf.0.at(site, 0), &[0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn star_rejects_d3() {
        let g = Arc::new(Grid::cube(3, 8, -1.0, 1.0).unwrap());
        let f = CurvatureField::zeros(g, GroupKind::Su2);
        assert!(hodge_star(&f).is_err());
        assert!(chern_number(&f).is_err());
        assert!(characteristic_number(&f).is_err());
        assert!(bogomolny_gap(&f).is_err());
    }

    #[test]
    fn zero_field_has_zero_invariants() {
        let g = grid4(8);
        let f = CurvatureField::zeros(g, GroupKind::Su2);
        assert_eq!(chern_number(&f).unwrap(), 0.0);
        assert_eq!(characteristic_number(&f).unwrap(), 0.0);
        let b = bogomolny_gap(&f).unwrap();
        assert_eq!(b.min_gap, 0.0);
        assert_eq!(b.energy, 0.0);
        let e = sd_residual(&f, -1.0).unwrap_err();
        assert!(e.to_string().contains("zero field"));
    }

    #[test]
    fn chi_equals_8pi2_c2() {
        let g = grid4(9);
        let mut f = CurvatureField::zeros(g, GroupKind::Su2);
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for v in f.0.data.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        let cn = char_numbers_from_curvature(&f).unwrap();
        let rel = (cn.chi_num - 8.0 * std::f64::consts::PI.powi(2) * cn.c2).abs()
            / cn.chi_num.abs().max(1e-300);
        assert!(rel < 1e-10);
    }

    #[test]
    fn self_dual_block_field_has_zero_residual() {
        // F_{01} = F_{23} = 𝐤 is self-dual: residual 0 at sign = −1, 2 at +1
        let g = grid4(8);
        let mut f = CurvatureField::zeros(g.clone(), GroupKind::Su2);
        for site in 0..g.len() {
            f.0.at_mut(site, 0)[2] = 1.0;
            f.0.at_mut(site, 5)[2] = 1.0;
        }
        assert!(sd_residual(&f, -1.0).unwrap() < 1e-15);
        assert!((sd_residual(&f, 1.0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn random_residual_is_in_range() {
        let g = grid4(8);
        let mut f = CurvatureField::zeros(g, GroupKind::Su2);
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for v in f.0.data.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        for sign in [-1.0, 1.0] {
            let r = sd_residual(&f, sign).unwrap();
            assert!(r > 0.0 && r <= 2.0 + 1e-12);
        }
    }

    #[test]
    fn pointwise_gap_never_negative_on_random_samples() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for kind in [GroupKind::Su2, GroupKind::Su3] {
            let dg = kind.dim_g();
            for _ in 0..2000 {
                let mut comps = [[0.0; 8]; 6];
                for comp in comps.iter_mut() {
                    for c in comp.iter_mut().take(dg) {
                        *c = rng.gen_range(-2.0..2.0);
                    }
                }
                assert!(sample_gap(kind, &comps) >= -1e-12);
            }
        }
    }

    #[test]
    fn streaming_matches_materialized() {
        let g = grid4(9);
        let mut a = crate::field::GaugeField::zeros(g.clone(), GroupKind::Su2);
        a.0.fill_with(|p, j, c| {
            let r2: f64 = p.iter().map(|x| x * x).sum();
            c[0] = (-r2).exp() * p[(j + 1) % 4];
            c[1] = 0.3 * p[j];
            c[2] = (-r2).exp();
        });
        let f = crate::calculus::curvature(&a);
        let via_f = char_numbers_from_curvature(&f).unwrap();
        let via_a = char_numbers(&a).unwrap();
        assert!((via_f.c2 - via_a.c2).abs() < 1e-13);
        assert!((via_f.energy - via_a.energy).abs() < 1e-11);
        let (m, p) = sd_residuals(&a).unwrap();
        assert!((m - sd_residual(&f, -1.0).unwrap()).abs() < 1e-12);
        assert!((p - sd_residual(&f, 1.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn constant_map_has_degree_zero() {
        let m = lie::exp_coeffs(GroupKind::Su2, &[0.2, 0.5, -0.1]);
        let s = SphereSampling::sample([16, 16, 16], |_, _, _| m).unwrap();
        assert!(degree(&s).unwrap().abs() < 1e-12);
    }

    #[test]
    fn identity_map_has_degree_one() {
        let s = SphereSampling::sample([48, 48, 48], |psi, theta, phi| {
            point_to_su2(psi, theta, phi)
        })
        .unwrap();
        let d = degree(&s).unwrap();
        assert!((d - 1.0).abs() < 0.01, "degree {d}");
    }

    #[test]
    fn degree_is_conjugation_invariant() {
        let u = lie::exp_coeffs(GroupKind::Su2, &[0.7, -0.3, 1.1]);
        let ui = u.adjoint();
        let s = SphereSampling::sample([32, 32, 32], |psi, theta, phi| {
            u.mul(&point_to_su2(psi, theta, phi)).mul(&ui)
        })
        .unwrap();
        let d = degree(&s).unwrap();
        assert!((d - 1.0).abs() < 0.02, "degree {d}");
    }

    #[test]
    fn non_su2_samples_are_rejected() {
        let mut s =
            SphereSampling::sample([8, 8, 8], |_, _, _| CMat::identity(2)).unwrap();
        s.data[3] = 0.5;
        assert!(degree(&s).is_err());
    }

    /// Unit quaternion of the hyperspherical point as an SU(2) matrix.
    fn point_to_su2(psi: f64, theta: f64, phi: f64) -> CMat {
        let x = [
            psi.cos(),
            psi.sin() * theta.cos(),
            psi.sin() * theta.sin() * phi.cos(),
            psi.sin() * theta.sin() * phi.sin(),
        ];
        su2_from_quat(&x)
    }

    fn su2_from_quat(x: &[f64; 4]) -> CMat {
        let b = GroupKind::Su2.basis();
        CMat::identity(2)
            .scale_re(x[0])
            .add(&b[0].scale_re(x[1]))
            .add(&b[1].scale_re(x[2]))
            .add(&b[2].scale_re(x[3]))
    }
}
