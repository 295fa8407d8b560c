//! Temporal-gauge Yang–Mills evolution on a box or torus.
//!
//! With a₀ = 0 and signature (−,+,+,+), the mixed curvature components
//! reduce to F_{0j} = ∂_t a_j, so the second-order equations D^αF_{αβ} = 0
//! split into the first-order system
//!
//!   ∂_t a_j = e_j,        ∂_t e_j = Σ_k D_k F_{kj}        (β = j),
//!
//! while the β = 0 equation is the Gauss constraint Σ_j D_j e_j = 0 — a
//! property of the data that the flow transports, monitored here rather
//! than imposed (no constraint damping).
//!
//! Time stepping is kick–drift–kick leapfrog: e lives on half steps
//! between the two kicks and is emitted resynchronized at integer steps.
//! Space reuses the central-difference calculus; on the torus the wrap
//! stencil is antisymmetric under summation by parts and the pairing is
//! ad-invariant, so the semi-discrete energy Σ_x (|e|² + Σ_{j<k}|F_{jk}|²)
//! is conserved exactly and the measured drift isolates the O(dt²) time
//! integration error. The Courant cap 0.5 is the d = 4 von Neumann
//! threshold 1/√d of the wide central-difference Laplacian; lower
//! dimensions get extra margin.

use crate::calculus::{self, deriv_at};
use crate::error::{Error, Result};
use crate::field::{
    n_pairs, pair_index, CurvatureField, ElectricField, FieldState, GaugeField, LieField, MAX_DG,
};
use crate::lie;
use crate::topology;

/// How stencils treat the box faces.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Boundary {
    /// Wrap stencils around each axis: an n-site ring of circumference n·h
    /// (grid positions are labels; only the spacing enters the dynamics).
    Periodic,
    /// Face sites keep their initial values; interior stencils read them.
    /// Truncated-ℝ^d runs, e.g. dependence-cone experiments.
    FrozenFace,
}

#[derive(Clone, Copy, Debug)]
pub struct EvolutionConfig {
    /// Explicit time step; 0.0 derives dt = courant·h.
    pub dt: f64,
    /// Cap on dt/h. The scheme is von Neumann stable up to 1/√d; the cap
    /// is the d = 4 threshold.
    pub courant: f64,
    pub steps: usize,
    pub boundary: Boundary,
    /// Monitor sampling stride in steps; t = 0 and the final step are
    /// always sampled.
    pub output_stride: usize,
    /// Snapshot stride; 0 keeps only the final state.
    pub snapshot_stride: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            dt: 0.0,
            courant: 0.5,
            steps: 1,
            boundary: Boundary::Periodic,
            output_stride: 1,
            snapshot_stride: 0,
        }
    }
}

impl EvolutionConfig {
    /// Checks the configuration against the spacing h and returns the
    /// effective time step.
    pub fn effective_dt(&self, h: f64) -> Result<f64> {
        if !(self.courant > 0.0 && self.courant <= 0.5 + 1e-15) {
            return Err(Error::validation(format!(
                "CFL violation: courant {} outside (0, 0.5]",
                self.courant
            )));
        }
        if self.steps == 0 {
            return Err(Error::validation("evolution needs at least one step"));
        }
        if self.output_stride == 0 {
            return Err(Error::validation("output stride must be at least 1"));
        }
        let dt = if self.dt > 0.0 { self.dt } else { self.courant * h };
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::validation("time step must be positive and finite"));
        }
        if dt > self.courant * h * (1.0 + 1e-12) {
            return Err(Error::validation(format!(
                "CFL violation: dt/h = {:.3e} exceeds courant {:.3e}",
                dt / h,
                self.courant
            )));
        }
        Ok(dt)
    }
}

/// One row of the monitor series.
#[derive(Clone, Copy, Debug)]
pub struct Sample {
    pub t: f64,
    /// Σ_x w·(Σ_j|e_j|² + Σ_{j<k}|F_{jk}|²); uniform weights on the torus,
    /// trapezoidal on the box.
    pub energy: f64,
    /// Absolute L² norm of Σ_j D_j e_j.
    pub constraint_l2: f64,
    /// Second characteristic number; present exactly when d = 4.
    pub c2: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    /// (t, state) pairs; the final state is always last. With
    /// snapshot_stride > 0 the initial state and every stride-th step are
    /// kept as well.
    pub snapshots: Vec<(f64, FieldState)>,
    /// Monitor rows at the sampled steps; times strictly increase.
    pub series: Vec<Sample>,
}

impl Trajectory {
    pub fn final_state(&self) -> &FieldState {
        &self.snapshots.last().expect("trajectory always holds the final state").1
    }

    pub fn final_time(&self) -> f64 {
        self.snapshots.last().expect("trajectory always holds the final state").0
    }
}

// Central difference along ax: wrap stencils on the torus, the box
// calculus (one-sided at faces) otherwise.
fn deriv_any(f: &LieField, b: Boundary, site: usize, comp: usize, ax: usize, out: &mut [f64]) {
    match b {
        Boundary::FrozenFace => deriv_at(f, site, comp, ax, out),
        Boundary::Periodic => {
            let g = &f.grid;
            let inv2h = 1.0 / (2.0 * g.h);
            let up = f.at(g.step_wrap(site, ax, 1), comp);
            let dn = f.at(g.step_wrap(site, ax, -1), comp);
            for (c, o) in out.iter_mut().enumerate() {
                *o = (up[c] - dn[c]) * inv2h;
            }
        }
    }
}

// F_{jk} = ∂_j a_k − ∂_k a_j + [a_j, a_k] for all pairs, into `f`.
fn curvature_any(a: &GaugeField, b: Boundary, f: &mut CurvatureField) {
    let g = a.0.grid.clone();
    let d = g.d;
    let dg = a.0.dg();
    let np = n_pairs(d);
    if b == Boundary::FrozenFace {
        calculus::for_each_curvature(a, |site, buf| {
            let base = site * np * dg;
            for p in 0..np {
                f.0.data[base + p * dg..base + (p + 1) * dg].copy_from_slice(buf.comp(p));
            }
        });
        return;
    }
    let mut da = [0.0; MAX_DG];
    let mut db = [0.0; MAX_DG];
    let mut br = [0.0; MAX_DG];
    for site in 0..g.len() {
        for j in 0..d {
            for k in (j + 1)..d {
                deriv_any(&a.0, b, site, k, j, &mut da[..dg]);
                deriv_any(&a.0, b, site, j, k, &mut db[..dg]);
                lie::bracket_coeffs(a.0.kind, a.0.at(site, j), a.0.at(site, k), &mut br[..dg]);
                let out = f.0.at_mut(site, pair_index(d, j, k));
                for c in 0..dg {
                    out[c] = da[c] - db[c] + br[c];
                }
            }
        }
    }
}

// rhs_j = Σ_k D_k F_{kj}; F_{kj} = ±F_{pair} by antisymmetry.
fn force_into(a: &GaugeField, f: &CurvatureField, b: Boundary, out: &mut LieField) {
    let g = a.0.grid.clone();
    let d = g.d;
    let dg = a.0.dg();
    let kind = a.0.kind;
    let mut der = [0.0; MAX_DG];
    let mut br = [0.0; MAX_DG];
    for site in 0..g.len() {
        for j in 0..d {
            let acc = out.at_mut(site, j);
            acc.fill(0.0);
            for k in 0..d {
                if k == j {
                    continue;
                }
                let (p, sign) =
                    if k < j { (pair_index(d, k, j), 1.0) } else { (pair_index(d, j, k), -1.0) };
                deriv_any(&f.0, b, site, p, k, &mut der[..dg]);
                lie::bracket_coeffs(kind, a.0.at(site, k), f.0.at(site, p), &mut br[..dg]);
                for c in 0..dg {
                    acc[c] += sign * (der[c] + br[c]);
                }
            }
        }
    }
}

// dst += s·src, skipping frozen sites when a mask is present.
fn axpy_masked(dst: &mut LieField, s: f64, src: &LieField, mobile: Option<&[bool]>) {
    match mobile {
        None => {
            for (x, y) in dst.data.iter_mut().zip(&src.data) {
                *x += s * y;
            }
        }
        Some(m) => {
            let stride = dst.ncomp * dst.dg();
            for (site, &keep) in m.iter().enumerate() {
                if !keep {
                    continue;
                }
                let lo = site * stride;
                for (x, y) in dst.data[lo..lo + stride].iter_mut().zip(&src.data[lo..lo + stride])
                {
                    *x += s * y;
                }
            }
        }
    }
}

fn all_finite(u: &LieField) -> bool {
    u.data.iter().all(|v| v.is_finite())
}

fn site_weight(g: &crate::grid::Grid, site: usize, b: Boundary) -> f64 {
    match b {
        Boundary::Periodic => g.cell_volume(),
        Boundary::FrozenFace => g.quad_weight(&g.coords(site)),
    }
}

fn energy_of(e: &ElectricField, f: &CurvatureField, b: Boundary) -> f64 {
    let g = &f.0.grid;
    let mut s = 0.0;
    for site in 0..g.len() {
        let mut t = 0.0;
        for comp in 0..e.0.ncomp {
            t += lie::norm_sq_coeffs(e.0.at(site, comp));
        }
        for p in 0..f.0.ncomp {
            t += lie::norm_sq_coeffs(f.0.at(site, p));
        }
        s += site_weight(g, site, b) * t;
    }
    s
}

fn constraint_l2_of(a: &GaugeField, e: &ElectricField, b: Boundary) -> f64 {
    let g = &a.0.grid;
    let d = g.d;
    let dg = a.0.dg();
    let mut der = [0.0; MAX_DG];
    let mut br = [0.0; MAX_DG];
    let mut acc = [0.0; MAX_DG];
    let mut s = 0.0;
    for site in 0..g.len() {
        acc[..dg].fill(0.0);
        for j in 0..d {
            deriv_any(&e.0, b, site, j, j, &mut der[..dg]);
            lie::bracket_coeffs(a.0.kind, a.0.at(site, j), e.0.at(site, j), &mut br[..dg]);
            for c in 0..dg {
                acc[c] += der[c] + br[c];
            }
        }
        s += site_weight(g, site, b) * lie::norm_sq_coeffs(&acc[..dg]);
    }
    s.sqrt()
}

fn field_l2(u: &LieField, b: Boundary) -> f64 {
    let g = &u.grid;
    let mut s = 0.0;
    for site in 0..g.len() {
        let mut t = 0.0;
        for comp in 0..u.ncomp {
            t += lie::norm_sq_coeffs(u.at(site, comp));
        }
        s += site_weight(g, site, b) * t;
    }
    s.sqrt()
}

fn c2_of(f: &CurvatureField, b: Boundary) -> Result<f64> {
    match b {
        Boundary::FrozenFace => Ok(topology::char_numbers_from_curvature(f)?.c2),
        Boundary::Periodic => {
            let g = &f.0.grid;
            let dg = f.0.dg();
            let w = g.cell_volume();
            let mut s = 0.0;
            for site in 0..g.len() {
                s += w * topology::wedge_density(|p| f.0.at(site, p).as_ptr(), dg);
            }
            Ok(-4.0 * s / (8.0 * std::f64::consts::PI.powi(2)))
        }
    }
}

/// Total field energy Σ_x w·(Σ_j|e_j|² + Σ_{j<k}|F_{jk}|²) with
/// boundary-matched stencils and weights.
pub fn total_energy(state: &FieldState, boundary: Boundary) -> f64 {
    let mut f = CurvatureField::zeros(state.a.0.grid.clone(), state.a.0.kind);
    curvature_any(&state.a, boundary, &mut f);
    energy_of(&state.e, &f, boundary)
}

/// Absolute L² norm of the constraint Σ_j D_j e_j with boundary-matched
/// stencils and weights.
pub fn constraint_l2(state: &FieldState, boundary: Boundary) -> f64 {
    constraint_l2_of(&state.a, &state.e, boundary)
}

fn make_sample(
    t: f64,
    a: &GaugeField,
    e: &ElectricField,
    f: &CurvatureField,
    b: Boundary,
) -> Result<Sample> {
    let c2 = if a.0.grid.d == 4 { Some(c2_of(f, b)?) } else { None };
    Ok(Sample { t, energy: energy_of(e, f, b), constraint_l2: constraint_l2_of(a, e, b), c2 })
}

struct RunFlags {
    precheck: bool,
    monitors: bool,
}

fn run(state: &FieldState, cfg: &EvolutionConfig, flags: RunFlags) -> Result<Trajectory> {
    state.a.validate()?;
    state.e.validate()?;
    let g = state.a.0.grid.clone();
    let d = g.d;
    let b = cfg.boundary;
    let dt = cfg.effective_dt(g.h)?;
    if flags.precheck {
        let res = constraint_l2_of(&state.a, &state.e, b);
        let scale = field_l2(&state.e.0, b);
        let rel = if scale > 0.0 { res / scale } else { res };
        if rel > state.constraint_tol {
            return Err(Error::validation(format!(
                "initial data violates the Gauss constraint: relative residual {:.3e} exceeds \
                 the declared tolerance {:.3e}",
                rel, state.constraint_tol
            )));
        }
    }
    let mut a = state.a.clone();
    let mut e = state.e.clone();
    let mobile: Option<Vec<bool>> = match b {
        Boundary::Periodic => None,
        Boundary::FrozenFace => Some(
            (0..g.len())
                .map(|s| {
                    let c = g.coords(s);
                    (0..d).all(|ax| c[ax] > 0 && c[ax] + 1 < g.dims[ax])
                })
                .collect(),
        ),
    };
    let mut f = CurvatureField::zeros(g.clone(), a.0.kind);
    let mut rhs = LieField::zeros(g.clone(), a.0.kind, d);
    curvature_any(&a, b, &mut f);
    force_into(&a, &f, b, &mut rhs);

    let mut traj = Trajectory { snapshots: Vec::new(), series: Vec::new() };
    if flags.monitors {
        traj.series.push(make_sample(0.0, &a, &e, &f, b)?);
    }
    if cfg.snapshot_stride > 0 {
        traj.snapshots.push((
            0.0,
            FieldState { a: a.clone(), e: e.clone(), constraint_tol: state.constraint_tol },
        ));
    }

    let half = 0.5 * dt;
    for step in 1..=cfg.steps {
        axpy_masked(&mut e.0, half, &rhs, mobile.as_deref());
        axpy_masked(&mut a.0, dt, &e.0, mobile.as_deref());
        curvature_any(&a, b, &mut f);
        force_into(&a, &f, b, &mut rhs);
        axpy_masked(&mut e.0, half, &rhs, mobile.as_deref());
        if !all_finite(&a.0) || !all_finite(&e.0) {
            return Err(Error::numerical(format!("blow-up detected at step {step}")));
        }
        let t = step as f64 * dt;
        if flags.monitors && (step == cfg.steps || step % cfg.output_stride == 0) {
            traj.series.push(make_sample(t, &a, &e, &f, b)?);
        }
        if cfg.snapshot_stride > 0 && step % cfg.snapshot_stride == 0 && step != cfg.steps {
            traj.snapshots.push((
                t,
                FieldState { a: a.clone(), e: e.clone(), constraint_tol: state.constraint_tol },
            ));
        }
    }
    traj.snapshots.push((
        cfg.steps as f64 * dt,
        FieldState { a, e, constraint_tol: state.constraint_tol },
    ));
    Ok(traj)
}

/// Evolves the data set, monitoring energy, constraint, and (for d = 4)
/// the second characteristic number. The initial data must satisfy the
/// Gauss constraint to the state's declared tolerance.
pub fn evolve(state: &FieldState, cfg: &EvolutionConfig) -> Result<Trajectory> {
    run(state, cfg, RunFlags { precheck: true, monitors: true })
}

// Reach, in cells per step, of one leapfrog step's ℓ∞ dependence: the
// e-update reads the curvature through two nested derivative stencils
// (radius 1 wrapped, 2 one-sided at faces), once on the pre-drift and once
// on the post-drift potential.
fn dependence_cells(b: Boundary, steps: usize) -> usize {
    match b {
        Boundary::Periodic => 2 * steps + 2,
        Boundary::FrozenFace => 4 * steps + 4,
    }
}

/// Evolves two states that coincide inside the ball B_R(center) with the
/// same configuration and returns the largest |difference| over all sites
/// whose discrete dependence region stays inside the ball. Identical
/// stencil inputs produce identical floating point, so the contract is an
/// exact 0.0 there; data differing inside the ball shows up immediately.
/// Constraint prechecks are skipped — causality holds for any data.
pub fn finite_speed_check(
    s1: &FieldState,
    s2: &FieldState,
    center: &[f64],
    radius: f64,
    cfg: &EvolutionConfig,
) -> Result<f64> {
    let g = s1.a.0.grid.clone();
    if !g.same_shape(&s2.a.0.grid) || s1.a.0.kind != s2.a.0.kind {
        return Err(Error::validation("finite_speed_check: states live on different grids"));
    }
    if center.len() != g.d {
        return Err(Error::validation("finite_speed_check: center dimension mismatch"));
    }
    if !(radius > 0.0) {
        return Err(Error::validation("finite_speed_check: radius must be positive"));
    }
    let t1 = run(s1, cfg, RunFlags { precheck: false, monitors: false })?;
    let t2 = run(s2, cfg, RunFlags { precheck: false, monitors: false })?;
    let f1 = t1.final_state();
    let f2 = t2.final_state();
    let cells = dependence_cells(cfg.boundary, cfg.steps);
    let margin = cells as f64 * g.h * (g.d as f64).sqrt();
    let mut dev = 0.0f64;
    let mut inside = 0usize;
    for site in 0..g.len() {
        if cfg.boundary == Boundary::Periodic {
            // the ℓ∞ dependence box must not wrap around the torus
            let c = g.coords(site);
            if (0..g.d).any(|ax| c[ax] < cells || c[ax] + cells >= g.dims[ax]) {
                continue;
            }
        }
        let p = g.pos(site);
        let mut r2 = 0.0;
        for ax in 0..g.d {
            r2 += (p[ax] - center[ax]) * (p[ax] - center[ax]);
        }
        if r2.sqrt() + margin > radius {
            continue;
        }
        inside += 1;
        for comp in 0..g.d {
            for (x, y) in f1.a.0.at(site, comp).iter().zip(f2.a.0.at(site, comp)) {
                dev = dev.max((x - y).abs());
            }
            for (x, y) in f1.e.0.at(site, comp).iter().zip(f2.e.0.at(site, comp)) {
                dev = dev.max((x - y).abs());
            }
        }
    }
    if inside == 0 {
        return Err(Error::validation(format!(
            "finite_speed_check: no site keeps its dependence inside the ball after {} steps \
             (reach {} cells)",
            cfg.steps, cells
        )));
    }
    Ok(dev)
}

/// Evolves d = 4 data and returns max_t |c2(t) − c2(0)| over the sampled
/// series. The data should decay near the faces so the characteristic
/// class is well defined on the box.
pub fn class_conservation_check(state: &FieldState, cfg: &EvolutionConfig) -> Result<f64> {
    if state.a.0.grid.d != 4 {
        return Err(Error::validation("class_conservation_check needs d = 4 data"));
    }
    let traj = evolve(state, cfg)?;
    let c0 = traj.series[0].c2.expect("d = 4 samples carry c2");
    let mut drift = 0.0f64;
    for s in &traj.series {
        drift = drift.max((s.c2.expect("d = 4 samples carry c2") - c0).abs());
    }
    Ok(drift)
}

/// Runs forward for cfg.steps, negates e, runs the same configuration
/// again, and returns the largest |deviation| from the initial data (the
/// backward leg retraces the leapfrog up to roundoff). Monitors play no
/// role; the result is independent of the output stride.
pub fn reversibility_check(state: &FieldState, cfg: &EvolutionConfig) -> Result<f64> {
    let fwd = run(state, cfg, RunFlags { precheck: false, monitors: false })?;
    let end = fwd.final_state();
    let mut back_e = end.e.clone();
    back_e.0.scale(-1.0);
    let back_state =
        FieldState { a: end.a.clone(), e: back_e, constraint_tol: state.constraint_tol };
    let back = run(&back_state, cfg, RunFlags { precheck: false, monitors: false })?;
    let ret = back.final_state();
    let mut dev = 0.0f64;
    for (x, y) in ret.a.0.data.iter().zip(&state.a.0.data) {
        dev = dev.max((x - y).abs());
    }
    // the returned e carries the backward sign
    for (x, y) in ret.e.0.data.iter().zip(&state.e.0.data) {
        dev = dev.max((x + y).abs());
    }
    Ok(dev)
}

/// Scales every component by a radial quintic cutoff: untouched inside
/// r0, exactly 0.0 beyond r1. Preps compactly supported initial data for
/// box runs (e.g. instanton slices whose pure-gauge tail would otherwise
/// touch the faces).
pub fn taper_radial(f: &mut LieField, center: &[f64], r0: f64, r1: f64) -> Result<()> {
    let g = f.grid.clone();
    if center.len() != g.d {
        return Err(Error::validation("taper_radial: center dimension mismatch"));
    }
    if !(r0 >= 0.0 && r1 > r0) {
        return Err(Error::validation("taper_radial: need 0 ≤ r0 < r1"));
    }
    let dg = f.dg();
    for site in 0..g.len() {
        let p = g.pos(site);
        let mut r2 = 0.0;
        for ax in 0..g.d {
            r2 += (p[ax] - center[ax]) * (p[ax] - center[ax]);
        }
        let r = r2.sqrt();
        let w = if r <= r0 {
            continue;
        } else if r >= r1 {
            0.0
        } else {
            let u = (r - r0) / (r1 - r0);
            1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
        };
        let base = site * f.ncomp * dg;
        for v in f.data[base..base + f.ncomp * dg].iter_mut() {
            *v *= w;
        }
    }
    Ok(())
}
