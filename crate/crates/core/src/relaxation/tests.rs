use super::*;
use crate::dynamics::fixtures::example1;
use crate::moments::delta_moments;
use crate::sdp::{min_eigenvalue, solve, SolverSettings, SolverStatus};

fn cfg(order: u32) -> RelaxationConfig {
    RelaxationConfig {
        order,
        ..RelaxationConfig::default()
    }
}

#[test]
fn segment_and_block_sizes() {
    let relax = build_relaxation(&example1(), &[1.0, 1.0], &cfg(2)).unwrap();
    let p = &relax.problem;
    assert_eq!(p.segment(INPUT_SEGMENT).unwrap().len(), 35);
    assert_eq!(p.segment(JOINT_SEGMENT).unwrap().len(), 15);
    assert_eq!(p.num_vars, 50);
    assert_eq!(p.block("moment_y").unwrap().dim(), 6);
    // degree-2 constraint polynomial localizes at order r - 1
    assert_eq!(p.block("localizing_y_constraint").unwrap().dim(), 3);
    assert_eq!(p.block("moment_y_u").unwrap().dim(), 10);
    assert_eq!(p.block("domination").unwrap().dim(), 6);
}

#[test]
fn order_below_minimum_is_rejected() {
    match build_relaxation(&example1(), &[1.0, 1.0], &cfg(0)) {
        // the expected cost has degree 4 in the inputs
        Err(Error::OrderTooSmall { given: 0, required }) => assert_eq!(required, 2),
        other => panic!("{other:?}"),
    }
}

#[test]
fn trace_term_adds_diagonal_moments() {
    let spec = example1();
    let with = build_relaxation(&spec, &[1.0, 1.0], &cfg(2)).unwrap();
    let without = build_relaxation(
        &spec,
        &[1.0, 1.0],
        &RelaxationConfig {
            omega_r: 0.0,
            ..cfg(2)
        },
    )
    .unwrap();
    let u = [0.2, -0.4, 0.7];
    let yu = delta_moments(&u, 4);
    let y = MomentSequence::zeros(2, 4);
    let x = with.pack(&yu, &y);
    let diff = with.problem.objective.evaluate(&x) - without.problem.objective.evaluate(&x);
    let trace: f64 = monomial_basis(3, 2)
        .iter()
        .map(|m| m.scaled(2).evaluate(&u))
        .sum();
    assert!((diff - trace).abs() < 1e-12);
}

/// Exact moments of `1_K (delta_s x law of v)` over scaled `(s, v)` with a
/// uniform law on `[-1, 1]`, found by locating sign changes of the constraint.
fn restricted_moments(relax: &Relaxation, s: f64) -> MomentSequence {
    let k = &relax.constraint;
    let d = 2 * relax.order;
    let grid = 20_000;
    let g = |v: f64| k.evaluate(&[s, v]).unwrap();
    let mut pieces = Vec::new();
    let mut start: Option<f64> = None;
    for i in 0..=grid {
        let v = -1.0 + 2.0 * i as f64 / grid as f64;
        let inside = g(v) >= 0.0;
        match (inside, start) {
            (true, None) => start = Some(v),
            (false, Some(a)) => {
                pieces.push((a, v));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(a) = start {
        pieces.push((a, 1.0));
    }
    MomentSequence::from_fn(2, d, |m| {
        let (a, b) = (m.exponents()[0], m.exponents()[1] as i32);
        let w: f64 = pieces
            .iter()
            .map(|&(lo, hi)| (hi.powi(b + 1) - lo.powi(b + 1)) / (b as f64 + 1.0) / 2.0)
            .sum();
        s.powi(a as i32) * w
    })
}

#[test]
fn point_mass_construction_is_feasible() {
    let spec = example1();
    let relax = build_relaxation(&spec, &[1.0, 1.0], &cfg(2)).unwrap();
    // u_k = -0.9 contracts for every disturbance in the support
    let u = [-0.9, 0.1, 0.0];
    let yu = delta_moments(&u, 4);
    let y = restricted_moments(&relax, u[0]);
    assert!((y.mass() - 1.0).abs() < 1e-3);
    let x = relax.pack(&yu, &y);
    for b in &relax.problem.blocks {
        let lam = min_eigenvalue(&b.evaluate(&x));
        assert!(lam >= -1e-6, "{}: {lam}", b.name);
    }
    assert!(relax.problem.inequalities[0].evaluate(&x) >= -1e-3);
    assert!(relax.problem.equalities[0].evaluate(&x).abs() < 1e-15);
}

#[test]
fn first_step_solves() {
    let spec = example1();
    let relax = build_relaxation(&spec, &[1.0, 1.0], &cfg(2)).unwrap();
    let sol = solve(&relax.problem, &SolverSettings::default()).unwrap();
    assert_eq!(sol.status, SolverStatus::Optimal, "{sol:?}");
    let yu = relax.input_moments(&sol.x);
    assert!((yu.mass() - 1.0).abs() < 1e-9);
    assert!(relax.joint_moments(&sol.x).mass() >= relax.required_probability - 1e-6);
}

#[test]
fn scaling_maps_boxes_to_unit_interval() {
    let mut spec = example1();
    spec.input_set.bounds = vec![[-2.0, 2.0]; 3];
    let (scaled, map) = scale_problem(&spec, &cfg(2)).unwrap();
    assert_eq!(map.input_half_width, vec![2.0]);
    assert_eq!(map.inputs_to_original(&[0.5]), vec![1.0]);
    assert!(scaled.input_set.bounds.iter().all(|b| *b == [-1.0, 1.0]));
    assert_eq!(scaled.disturbance.bounds, vec![[-1.0, 1.0]]);
    // the scaled model agrees with the original after the change of variable
    let a = spec.model.step(&[0.3, -0.2], &[1.0], &[0.25]).unwrap();
    let b = scaled.model.step(&[0.3, -0.2], &[0.5], &[0.5]).unwrap();
    for (p, q) in a.iter().zip(&b) {
        assert!((p - q).abs() < 1e-12);
    }
}

#[test]
fn unit_boxes_scale_to_identity_inputs() {
    let spec = example1();
    let (_, map) = scale_problem(&spec, &cfg(2)).unwrap();
    assert_eq!(map.input_center, vec![0.0]);
    assert_eq!(map.input_half_width, vec![1.0]);
}

#[test]
fn degenerate_box_is_rejected() {
    let mut spec = example1();
    spec.disturbance.bounds = vec![[0.1, 0.1]];
    assert!(scale_problem(&spec, &cfg(2)).is_err());
}
