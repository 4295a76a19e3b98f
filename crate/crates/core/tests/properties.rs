use ccmpc::extraction::{extract_control, DEFAULT_RANK_TOL};
use ccmpc::moments::{
    localizing_matrix, localizing_pattern, moment_matrix, uniform_moments, MomentSequence,
};
use ccmpc::mpc::{bound_probability, bound_steps, phat_limit};
use ccmpc::poly::{
    basis_len, grevlex_rank, monomial_basis, parse_polynomial, var_names, DisplayPoly, Monomial,
    Polynomial,
};
use proptest::prelude::*;

/// Moments of a point mass, computed from raw powers.
fn point_moments(t: &[f64], degree: u32) -> MomentSequence {
    MomentSequence::from_fn(t.len(), degree, |a| {
        a.exponents()
            .iter()
            .zip(t)
            .map(|(&e, x)| x.powi(e as i32))
            .product()
    })
}

fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

fn small_poly(n: usize) -> impl Strategy<Value = Polynomial> {
    prop::collection::vec((prop::collection::vec(0u32..3, n), -2.0f64..2.0), 1..5).prop_map(
        move |terms| {
            Polynomial::from_terms(n, terms.into_iter().map(|(e, c)| (Monomial::new(e), c)))
                .unwrap()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grevlex_rank_enumerates_the_basis(n in 1usize..4, d in 0u32..5) {
        let basis = monomial_basis(n, d);
        prop_assert_eq!(basis.len(), basis_len(n, d));
        for (i, m) in basis.iter().enumerate() {
            prop_assert_eq!(grevlex_rank(m, n).unwrap(), i + 1);
        }
        for w in basis.windows(2) {
            prop_assert!(w[0].degree() <= w[1].degree());
        }
    }

    #[test]
    fn product_evaluates_to_product(p in small_poly(3), q in small_poly(3), t in point(3)) {
        let pq = p.checked_mul(&q).unwrap();
        let want = p.evaluate(&t).unwrap() * q.evaluate(&t).unwrap();
        prop_assert!((pq.evaluate(&t).unwrap() - want).abs() < 1e-9);
    }

    #[test]
    fn display_parses_back(p in small_poly(2)) {
        let names = var_names("x", 2);
        let text = DisplayPoly { poly: &p, names: &names }.to_string();
        let back = parse_polynomial(&text, &names).unwrap();
        prop_assert!(back.max_coeff_diff(&p) < 1e-12, "{}", text);
    }

    #[test]
    fn extraction_recovers_point_masses(n in 1usize..4, r in 1u32..4, seed in point(3)) {
        let t = &seed[..n];
        let e = extract_control(&point_moments(t, 2 * r), r, DEFAULT_RANK_TOL).unwrap();
        for (a, b) in e.u_star.iter().zip(t) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        prop_assert!(e.certified);
        prop_assert!(e.consistency < 1e-12);
        let trace: f64 = monomial_basis(n, r).iter()
            .map(|a| a.exponents().iter().zip(t).map(|(&k, x)| x.powi(2 * k as i32)).product::<f64>())
            .sum();
        prop_assert!((e.trace - trace).abs() < 1e-10 * trace.max(1.0));
    }

    #[test]
    fn extraction_commutes_with_permutation(t in point(3), r in 1u32..4) {
        let rev: Vec<f64> = t.iter().rev().copied().collect();
        let a = extract_control(&point_moments(&t, 2 * r), r, DEFAULT_RANK_TOL).unwrap();
        let b = extract_control(&point_moments(&rev, 2 * r), r, DEFAULT_RANK_TOL).unwrap();
        let b_back: Vec<f64> = b.u_star.iter().rev().copied().collect();
        prop_assert_eq!(a.u_star, b_back);
        prop_assert!((a.trace - b.trace).abs() < 1e-12 * a.trace);
    }

    #[test]
    fn mixtures_are_not_certified(t in point(2), s in point(2), r in 1u32..4) {
        prop_assume!((t[0] - s[0]).abs() + (t[1] - s[1]).abs() > 0.1);
        let a = point_moments(&t, 2 * r);
        let b = point_moments(&s, 2 * r);
        let mix: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| 0.5 * (x + y)).collect();
        let y = MomentSequence::new(2, 2 * r, mix).unwrap();
        prop_assert!(!extract_control(&y, r, DEFAULT_RANK_TOL).unwrap().certified);
    }

    #[test]
    fn localizing_is_linear_in_the_polynomial(
        p in small_poly(2), q in small_poly(2), a in -2.0f64..2.0, b in -2.0f64..2.0, t in point(2),
    ) {
        let y = point_moments(&t, 8);
        let combo = p.scale(a).checked_add(&q.scale(b)).unwrap();
        let lhs = localizing_matrix(&y, &combo, 1).unwrap();
        let rhs = localizing_matrix(&y, &p, 1).unwrap() * a + localizing_matrix(&y, &q, 1).unwrap() * b;
        prop_assert!((lhs - rhs).amax() < 1e-10);
    }

    #[test]
    fn localizing_at_a_point_is_rank_one(p in small_poly(2), t in point(2), r in 0u32..3) {
        let y = point_moments(&t, 2 * r + 4);
        let m = localizing_matrix(&y, &p, r).unwrap();
        let v = nalgebra::DVector::from_iterator(
            basis_len(2, r),
            monomial_basis(2, r).iter().map(|a| a.evaluate(&t)),
        );
        let want = &v * v.transpose() * p.evaluate(&t).unwrap();
        prop_assert!((m - want).amax() < 1e-10);
        let pattern = localizing_pattern(&p, r);
        prop_assert!((pattern.evaluate(y.values()) - localizing_matrix(&y, &p, r).unwrap()).amax() == 0.0);
    }

    #[test]
    fn uniform_moments_match_closed_form(lo in -2.0f64..0.0, width in 0.1f64..3.0, d in 0u32..8) {
        let hi = lo + width;
        let y = uniform_moments(lo, hi, d).unwrap();
        for k in 0..=d as i32 {
            let want = (hi.powi(k + 1) - lo.powi(k + 1)) / ((k + 1) as f64 * width);
            prop_assert!((y.values()[k as usize] - want).abs() < 1e-10 * want.abs().max(1.0));
        }
        let m = moment_matrix(&y, d / 2).unwrap();
        prop_assert!(m.symmetric_eigenvalues().min() > -1e-10);
    }

    #[test]
    fn phat_decreases_and_stays_above_the_limit(alpha in 0.5f64..0.95, beta in 0.01f64..0.5, k in 1u64..60) {
        let now = bound_probability(alpha, beta, k).unwrap();
        let next = bound_probability(alpha, beta, k + 1).unwrap();
        prop_assert!(next <= now);
        prop_assert!(phat_limit(alpha, beta).unwrap() <= next);
        let direct: f64 = (0..k).map(|i| 1.0 - beta * alpha.powi(i as i32)).product();
        prop_assert!((now - direct).abs() < 1e-12);
    }

    #[test]
    fn khat_is_the_first_step_below_epsilon(alpha in 0.5f64..0.95, p0 in 0.1f64..5.0, frac in 0.001f64..0.9) {
        let eps = p0 * frac;
        let k = bound_steps(eps, alpha, p0).unwrap() as i32;
        prop_assert!(p0 * alpha.powi(k) <= eps * (1.0 + 1e-9));
        prop_assert!(k == 0 || p0 * alpha.powi(k - 1) > eps * (1.0 - 1e-9));
    }
}
