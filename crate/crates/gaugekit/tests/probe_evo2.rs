use gaugekit::calculus;
use gaugekit::evolution::*;
use gaugekit::field::{ElectricField, FieldState};
use gaugekit::grid::Grid;
use gaugekit::instanton;
use gaugekit::lie::GroupKind;
use gaugekit::topology;
use std::sync::Arc;
use std::time::Instant;

#[test]
fn probe_mollified_static_c2() {
    for (n, half, rho, r0, r1) in
        [(12usize, 4.5f64, 1.25f64, 2.0f64, 3.5f64), (16, 6.0, 1.25, 3.0, 5.0), (24, 6.0, 1.25, 3.0, 5.0)]
    {
        let g = Arc::new(Grid::cube(4, n, -half, half).unwrap());
        let a = instanton::bpst_mollified(g.clone(), [0.0; 4], rho, 1.0, r0, r1).unwrap();
        let f = calculus::curvature(&a);
        let cn = topology::char_numbers_from_curvature(&f).unwrap();
        // tail flatness: sup |F| outside r1 + 2h
        let mut tail = 0.0f64;
        for site in 0..g.len() {
            let p = g.pos(site);
            let r = (0..4).map(|ax| p[ax] * p[ax]).sum::<f64>().sqrt();
            if r >= r1 + 2.0 * g.h {
                for pr in 0..6 {
                    tail = tail.max(gaugekit::lie::norm_sq_coeffs(f.0.at(site, pr)).sqrt());
                }
            }
        }
        println!(
            "n={n} half={half} rho={rho}: c2 = {:.4}, energy = {:.3} (8pi^2 = {:.3}), tail |F| = {:.3e}",
            cn.c2,
            cn.energy,
            8.0 * std::f64::consts::PI.powi(2),
            tail
        );
    }
}

#[test]
fn probe_mollified_evolution() {
    // unit-test scale
    let g = Arc::new(Grid::cube(4, 12, -4.5, 4.5).unwrap());
    let a = instanton::bpst_mollified(g.clone(), [0.0; 4], 1.25, 1.0, 2.0, 3.5).unwrap();
    let e = ElectricField::zeros(g.clone(), GroupKind::Su2);
    let state = FieldState::new(a, e, 1e-10).unwrap();
    let cfg = EvolutionConfig {
        dt: 0.25 * g.h,
        steps: 10,
        output_stride: 2,
        boundary: Boundary::FrozenFace,
        ..EvolutionConfig::default()
    };
    let t0 = Instant::now();
    let drift = class_conservation_check(&state, &cfg).unwrap();
    println!("n=12 frozen 10 steps: drift = {drift:.3e}  ({:.1?})", t0.elapsed());

    // acceptance scale: n=24, 50 steps
    let g = Arc::new(Grid::cube(4, 24, -6.0, 6.0).unwrap());
    let a = instanton::bpst_mollified(g.clone(), [0.0; 4], 1.25, 1.0, 3.0, 5.0).unwrap();
    let e = ElectricField::zeros(g.clone(), GroupKind::Su2);
    let state = FieldState::new(a, e, 1e-10).unwrap();
    for dtf in [0.25f64, 0.5] {
        let cfg = EvolutionConfig {
            dt: dtf * g.h,
            steps: 50,
            output_stride: 5,
            boundary: Boundary::FrozenFace,
            ..EvolutionConfig::default()
        };
        let t0 = Instant::now();
        let traj = evolve(&state, &cfg).unwrap();
        let c0 = traj.series[0].c2.unwrap();
        let mut drift = 0.0f64;
        for s in &traj.series {
            drift = drift.max((s.c2.unwrap() - c0).abs());
        }
        let last = traj.series.last().unwrap();
        println!(
            "n=24 frozen dt={dtf}h 50 steps: c2(0) = {c0:.4}, drift = {drift:.3e}, E(0) = {:.3}, E(T) = {:.3}, G(T) = {:.3e}  ({:.1?})",
            traj.series[0].energy,
            last.energy,
            last.constraint_l2,
            t0.elapsed()
        );
    }
}
