//! Closed-form instanton constructors: single BPST in the regular gauge,
//! 't Hooft multi-instantons in the singular gauge, and embedding of su(2)
//! fields into su(3) along a highest root.
//!
//! Sign convention: `sign = +1` produces a self-dual field (F = ⋆F, so
//! `sd_residual(F, -1) → 0`), `sign = -1` an anti-self-dual one. With the
//! ε₀₁₂₃ = +1 orientation the self-dual reference instanton carries
//! c₂ = −1; only |c₂| is contractual.

use crate::error::{Error, Result};
use crate::field::{CurvatureField, GaugeField};
use crate::grid::Grid;
use crate::lie::{GroupKind, Su2Embedding};
use std::sync::Arc;

/// Multi-instanton parameters: one center/scale pair per unit of charge.
#[derive(Clone, Debug)]
pub struct InstantonSpec {
    pub centers: Vec<[f64; 4]>,
    pub scales: Vec<f64>,
    pub sign: f64,
}

impl InstantonSpec {
    pub fn validate(&self) -> Result<()> {
        if self.centers.is_empty() || self.centers.len() != self.scales.len() {
            return Err(Error::validation(
                "instanton spec needs equally many centers and scales (≥ 1)",
            ));
        }
        if self.scales.iter().any(|&r| !(r > 0.0)) {
            return Err(Error::validation("instanton scales must be positive"));
        }
        if self.sign != 1.0 && self.sign != -1.0 {
            return Err(Error::validation("instanton sign must be ±1"));
        }
        let rho_max = self.scales.iter().cloned().fold(0.0, f64::max);
        for i in 0..self.centers.len() {
            for j in (i + 1)..self.centers.len() {
                let mut d2 = 0.0;
                for ax in 0..4 {
                    d2 += (self.centers[i][ax] - self.centers[j][ax]).powi(2);
                }
                if d2.sqrt() < 3.0 * rho_max {
                    return Err(Error::validation(
                        "instanton centers closer than 3× the largest scale",
                    ));
                }
            }
        }
        Ok(())
    }
}

fn eps3(a: usize, b: usize, c: usize) -> f64 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// 't Hooft symbols η^{(s)}_{aμν}, axes 0..3 with axis 3 distinguished;
/// s = +1 is the self-dual symbol, s = −1 the anti-self-dual η̄
/// (with respect to ε₀₁₂₃ = +1).
fn eta_symbol(s: f64) -> [[[f64; 4]; 4]; 3] {
    let mut t = [[[0.0; 4]; 4]; 3];
    for a in 0..3 {
        for mu in 0..3 {
            for nu in 0..3 {
                t[a][mu][nu] = eps3(a, mu, nu);
            }
        }
        t[a][a][3] = s;
        t[a][3][a] = -s;
    }
    t
}

/// Converts a vector in the e_a = −iσ_a/2 basis to (𝐢,𝐣,𝐤) coefficients:
/// e₁ = −𝐣/2, e₂ = −𝐢/2, e₃ = −𝐤/2.
#[inline]
fn e_basis_to_coeffs(v: &[f64; 3], c: &mut [f64]) {
    c[0] = -0.5 * v[1];
    c[1] = -0.5 * v[0];
    c[2] = -0.5 * v[2];
}

fn require_su2_d4(grid: &Grid) -> Result<()> {
    if grid.d != 4 {
        return Err(Error::validation("instanton constructors require d = 4"));
    }
    Ok(())
}

/// Single instanton in the regular gauge:
/// A_μ(x) = 2/(|y|² + ρ²) · η_{aμν} y_ν e_a with y = x − center.
pub fn bpst(grid: Arc<Grid>, center: [f64; 4], rho: f64, sign: f64) -> Result<GaugeField> {
    require_su2_d4(&grid)?;
    if !(rho > 0.0) {
        return Err(Error::validation("bpst: rho must be positive"));
    }
    if sign != 1.0 && sign != -1.0 {
        return Err(Error::validation("bpst: sign must be ±1"));
    }
    let eta = eta_symbol(sign);
    let mut a = GaugeField::zeros(grid, GroupKind::Su2);
    a.0.fill_with(|p, mu, c| {
        let mut y = [0.0; 4];
        let mut r2 = 0.0;
        for ax in 0..4 {
            y[ax] = p[ax] - center[ax];
            r2 += y[ax] * y[ax];
        }
        let f = 2.0 / (r2 + rho * rho);
        let mut v = [0.0; 3];
        for (ai, vi) in v.iter_mut().enumerate() {
            let mut s = 0.0;
            for nu in 0..4 {
                s += eta[ai][mu][nu] * y[nu];
            }
            *vi = f * s;
        }
        e_basis_to_coeffs(&v, c);
    });
    Ok(a)
}

/// Single instanton in the regular gauge with the profile driven to the
/// flat hedgehog connection at large radius: below r0 this is `bpst`,
/// beyond r1 exactly the pure gauge 2/|y|²·η y (quintic blend between),
/// so the curvature is compactly supported in B_{r1} while the
/// topological sector is untouched — cutting the potential itself to
/// zero would cancel the total charge through the cut shell. The 1/|y|
/// tail suits boxed evolution with faces held at the flat connection.
pub fn bpst_mollified(
    grid: Arc<Grid>,
    center: [f64; 4],
    rho: f64,
    sign: f64,
    r0: f64,
    r1: f64,
) -> Result<GaugeField> {
    require_su2_d4(&grid)?;
    if !(rho > 0.0) {
        return Err(Error::validation("bpst_mollified: rho must be positive"));
    }
    if sign != 1.0 && sign != -1.0 {
        return Err(Error::validation("bpst_mollified: sign must be ±1"));
    }
    if !(r0 > 0.0 && r1 > r0) {
        return Err(Error::validation("bpst_mollified: need 0 < r0 < r1"));
    }
    let eta = eta_symbol(sign);
    let mut a = GaugeField::zeros(grid, GroupKind::Su2);
    a.0.fill_with(|p, mu, c| {
        let mut y = [0.0; 4];
        let mut r2 = 0.0;
        for ax in 0..4 {
            y[ax] = p[ax] - center[ax];
            r2 += y[ax] * y[ax];
        }
        let r = r2.sqrt();
        let f = if r <= r0 {
            2.0 / (r2 + rho * rho)
        } else if r >= r1 {
            2.0 / r2
        } else {
            let u = (r - r0) / (r1 - r0);
            let s = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
            (1.0 - s) * 2.0 / (r2 + rho * rho) + s * 2.0 / r2
        };
        let mut v = [0.0; 3];
        for (ai, vi) in v.iter_mut().enumerate() {
            let mut s = 0.0;
            for nu in 0..4 {
                s += eta[ai][mu][nu] * y[nu];
            }
            *vi = f * s;
        }
        e_basis_to_coeffs(&v, c);
    });
    Ok(a)
}

/// φ(x) = 1 + Σ ρ_i²/|x − c_i|² and its first/second derivatives.
fn phi_derivs(spec: &InstantonSpec, p: &[f64]) -> Result<(f64, [f64; 4], [[f64; 4]; 4])> {
    let mut phi = 1.0;
    let mut dphi = [0.0; 4];
    let mut d2phi = [[0.0; 4]; 4];
    for (c, &rho) in spec.centers.iter().zip(&spec.scales) {
        let mut y = [0.0; 4];
        let mut r2 = 0.0;
        for ax in 0..4 {
            y[ax] = p[ax] - c[ax];
            r2 += y[ax] * y[ax];
        }
        if r2 < 1e-18 {
            return Err(Error::validation("singular gauge pole on grid"));
        }
        let q = rho * rho;
        phi += q / r2;
        let r4 = r2 * r2;
        let r6 = r4 * r2;
        for mu in 0..4 {
            dphi[mu] += -2.0 * q * y[mu] / r4;
            for nu in 0..4 {
                let kron = if mu == nu { 1.0 } else { 0.0 };
                d2phi[mu][nu] += q * (8.0 * y[mu] * y[nu] / r6 - 2.0 * kron / r4);
            }
        }
    }
    Ok((phi, dphi, d2phi))
}

/// Multi-instanton potential in the singular gauge:
/// A_μ = −η̄_{aμν} (∂_ν ln φ) e_a (symbols flipped for sign = −1).
pub fn thooft_multi(grid: Arc<Grid>, spec: &InstantonSpec) -> Result<GaugeField> {
    require_su2_d4(&grid)?;
    spec.validate()?;
    // the singular-gauge ansatz needs the opposite symbol for the same duality
    let sym = eta_symbol(-spec.sign);
    let mut a = GaugeField::zeros(grid.clone(), GroupKind::Su2);
    let glen = grid.len();
    for site in 0..glen {
        let p = grid.pos(site);
        let (phi, dphi, _) = phi_derivs(spec, &p[..4])?;
        let mut u = [0.0; 4];
        for ax in 0..4 {
            u[ax] = dphi[ax] / phi;
        }
        for mu in 0..4 {
            let mut v = [0.0; 3];
            for (ai, vi) in v.iter_mut().enumerate() {
                let mut s = 0.0;
                for nu in 0..4 {
                    s += sym[ai][mu][nu] * u[nu];
                }
                *vi = -s;
            }
            e_basis_to_coeffs(&v, a.0.at_mut(site, mu));
        }
    }
    Ok(a)
}

/// Closed-form curvature of the 't Hooft potential, sampled analytically.
///
/// Finite differences of the singular-gauge potential carry an O(1) energy
/// error concentrated at the gauge poles no matter how fine the grid; the
/// analytic curvature avoids the poles entirely (its gauge-invariant
/// magnitude is smooth).
pub fn thooft_curvature(grid: Arc<Grid>, spec: &InstantonSpec) -> Result<CurvatureField> {
    require_su2_d4(&grid)?;
    spec.validate()?;
    let sym = eta_symbol(-spec.sign);
    let mut f = CurvatureField::zeros(grid.clone(), GroupKind::Su2);
    for site in 0..grid.len() {
        let p = grid.pos(site);
        let (phi, dphi, d2phi) = phi_derivs(spec, &p[..4])?;
        let mut u = [0.0; 4];
        for ax in 0..4 {
            u[ax] = dphi[ax] / phi;
        }
        // du[μ][ν] = ∂_μ u_ν = ∂²φ/φ − (∂_μφ)(∂_νφ)/φ²
        let mut du = [[0.0; 4]; 4];
        for mu in 0..4 {
            for nu in 0..4 {
                du[mu][nu] = d2phi[mu][nu] / phi - dphi[mu] * dphi[nu] / (phi * phi);
            }
        }
        // a_vec[μ][a]: e-basis components of A_μ
        let mut a_vec = [[0.0; 3]; 4];
        for mu in 0..4 {
            for a in 0..3 {
                let mut s = 0.0;
                for nu in 0..4 {
                    s += sym[a][mu][nu] * u[nu];
                }
                a_vec[mu][a] = -s;
            }
        }
        let mut pair = 0;
        for mu in 0..4 {
            for nu in (mu + 1)..4 {
                let mut v = [0.0; 3];
                for (c, vc) in v.iter_mut().enumerate() {
                    let mut s = 0.0;
                    for lam in 0..4 {
                        s += -sym[c][nu][lam] * du[mu][lam] + sym[c][mu][lam] * du[nu][lam];
                    }
                    // bracket: [e_a, e_b] = ε_{abc} e_c
                    let (a1, b1) = ((c + 1) % 3, (c + 2) % 3);
                    s += a_vec[mu][a1] * a_vec[nu][b1] - a_vec[mu][b1] * a_vec[nu][a1];
                    *vc = s;
                }
                e_basis_to_coeffs(&v, f.0.at_mut(site, pair));
                pair += 1;
            }
        }
    }
    Ok(f)
}

/// Componentwise image of an su(2) field under the highest-root embedding;
/// an isometric algebra homomorphism, so energies and characteristic
/// numbers are preserved to rounding.
pub fn embed(a: &GaugeField, emb: &Su2Embedding) -> Result<GaugeField> {
    if a.0.kind != GroupKind::Su2 {
        return Err(Error::validation("embed: input must be su(2)-valued"));
    }
    let m = emb.coeff_matrix();
    let dg = emb.kind.dim_g();
    let mut out = GaugeField::zeros(a.0.grid.clone(), emb.kind);
    for site in 0..a.0.grid.len() {
        for comp in 0..a.0.ncomp {
            let src = a.0.at(site, comp);
            let dst = out.0.at_mut(site, comp);
            for row in 0..dg {
                dst[row] =
                    m[row * 3] * src[0] + m[row * 3 + 1] * src[1] + m[row * 3 + 2] * src[2];
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::static_energy;
    use crate::lie::highest_root_embedding;
    use crate::topology::{char_numbers, sd_residuals};

    const PI2_8: f64 = 78.95683520871486; // 8π²

    fn grid4(n: usize, half: f64) -> Arc<Grid> {
        Arc::new(Grid::cube(4, n, -half, half).unwrap())
    }

    #[test]
    fn bpst_rejects_bad_parameters() {
        let g = grid4(8, 3.0);
        assert!(bpst(g.clone(), [0.0; 4], 0.0, 1.0).is_err());
        assert!(bpst(g.clone(), [0.0; 4], -1.0, 1.0).is_err());
        assert!(bpst(g.clone(), [0.0; 4], 1.0, 0.5).is_err());
        let g3 = Arc::new(Grid::cube(3, 8, -1.0, 1.0).unwrap());
        assert!(bpst(g3, [0.0; 4], 1.0, 1.0).is_err());
    }

    #[test]
    fn bpst_coarse_charge_and_energy() {
        // rho well above the spacing so the density peak is resolved
        let g = grid4(16, 5.0);
        let a = bpst(g, [0.0; 4], 1.6, 1.0).unwrap();
        let cn = char_numbers(&a).unwrap();
        assert!((cn.energy - PI2_8).abs() / PI2_8 < 0.15, "energy {}", cn.energy);
        assert!((cn.c2.abs() - 1.0).abs() < 0.15, "c2 {}", cn.c2);
        assert!(cn.c2 < 0.0, "self-dual reference charge should be negative");
        // self-dual: residual small at sign = −1, large at +1
        let (rm, rp) = sd_residuals(&a).unwrap();
        assert!(rm < 0.25, "sd residual {rm}");
        assert!(rp > 1.5);
    }

    #[test]
    fn bpst_sign_flips_duality() {
        let g = grid4(16, 4.0);
        let a = bpst(g, [0.1; 4], 1.4, -1.0).unwrap();
        let (rm, rp) = sd_residuals(&a).unwrap();
        assert!(rp < 0.25 && rm > 1.5, "residuals {rm} {rp}");
    }

    #[test]
    fn spec_validation_catches_bad_input() {
        let ok = InstantonSpec { centers: vec![[0.0; 4]], scales: vec![1.0], sign: 1.0 };
        ok.validate().unwrap();
        let bad_len =
            InstantonSpec { centers: vec![[0.0; 4]], scales: vec![1.0, 2.0], sign: 1.0 };
        assert!(bad_len.validate().is_err());
        let bad_scale = InstantonSpec { centers: vec![[0.0; 4]], scales: vec![0.0], sign: 1.0 };
        assert!(bad_scale.validate().is_err());
        let close = InstantonSpec {
            centers: vec![[0.0; 4], [1.0, 0.0, 0.0, 0.0]],
            scales: vec![1.0, 1.0],
            sign: 1.0,
        };
        assert!(close.validate().is_err());
    }

    #[test]
    fn thooft_pole_on_grid_point_is_rejected() {
        let g = grid4(9, 2.0); // sites at integer/half-integer positions incl. origin
        let spec = InstantonSpec { centers: vec![[0.0; 4]], scales: vec![0.5], sign: 1.0 };
        let e = thooft_multi(g, &spec).unwrap_err();
        assert!(e.to_string().contains("singular gauge pole on grid"));
    }

    #[test]
    fn thooft_single_matches_bpst_magnitude() {
        // gauge-invariant |F| of the κ=1 't Hooft field equals the BPST |F|
        // away from the gauge pole
        // even n over a symmetric box leaves no site at the origin
        let g = grid4(32, 2.2);
        let center = [0.0; 4];
        let rho = 1.0;
        let spec = InstantonSpec { centers: vec![center], scales: vec![rho], sign: 1.0 };
        let f_th = thooft_curvature(g.clone(), &spec).unwrap();
        let a_b = bpst(g.clone(), center, rho, 1.0).unwrap();
        let f_b = crate::calculus::curvature(&a_b);
        let mut worst: f64 = 0.0;
        for site in 0..g.len() {
            let ci = g.coords(site);
            // interior sites only: the face stencils are one-sided and coarser
            if (0..4).any(|ax| ci[ax] == 0 || ci[ax] + 1 == g.dims[ax]) {
                continue;
            }
            let p = g.pos(site);
            let mut r2 = 0.0;
            for ax in 0..4 {
                r2 += (p[ax] - center[ax]).powi(2);
            }
            if r2.sqrt() < 1.0 {
                continue; // skip the pole region where FD on BPST is coarse too
            }
            let (x, y) = (f_th.0.site_norm(site), f_b.0.site_norm(site));
            if y > 1e-3 {
                worst = worst.max((x - y).abs() / y);
            }
        }
        assert!(worst < 0.02, "worst |F| mismatch {worst}");
    }

    #[test]
    fn thooft_two_instantons_double_the_charge() {
        let g = grid4(24, 8.0);
        let spec = InstantonSpec {
            centers: vec![[-2.0, 0.0, 0.0, 0.0], [2.0, 0.0, 0.0, 0.0]],
            scales: vec![1.2, 1.2],
            sign: 1.0,
        };
        let f = thooft_curvature(g, &spec).unwrap();
        let cn = crate::topology::char_numbers_from_curvature(&f).unwrap();
        assert!((cn.c2.abs() - 2.0).abs() < 0.2, "c2 {}", cn.c2);
        assert!((cn.energy - 2.0 * PI2_8).abs() / (2.0 * PI2_8) < 0.1, "E {}", cn.energy);
    }

    #[test]
    fn embed_preserves_energy_and_charge() {
        let g = grid4(12, 4.0);
        let a2 = bpst(g, [0.0; 4], 1.2, 1.0).unwrap();
        let emb = highest_root_embedding(3).unwrap();
        let a3 = embed(&a2, &emb).unwrap();
        let c2n = char_numbers(&a2).unwrap();
        let c3n = char_numbers(&a3).unwrap();
        assert!((c2n.energy - c3n.energy).abs() / c2n.energy < 1e-10);
        assert!((c2n.chi_num - c3n.chi_num).abs() / c2n.chi_num.abs() < 1e-10);
        assert!((static_energy(&a2) - static_energy(&a3)).abs() / static_energy(&a2) < 1e-10);
    }

    #[test]
    fn embed_zero_gives_zero_and_rejects_su3_input() {
        let g = grid4(8, 1.0);
        let z = GaugeField::zeros(g.clone(), GroupKind::Su2);
        let emb = highest_root_embedding(3).unwrap();
        let e = embed(&z, &emb).unwrap();
        assert!(e.0.data.iter().all(|&v| v == 0.0));
        assert!(embed(&e, &emb).is_err());
    }
}
