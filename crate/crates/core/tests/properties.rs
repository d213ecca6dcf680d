use ir2n::harness::check::{lp_prox_reference, weighted_l1_reference};
use ir2n::harness::{format_sci, KappaSetting};
use ir2n::prox::{project_lq_ball, project_weighted_l1_ball, prox_lp_norm_engine, prox_tvp_engine, ProxEngine};
use ir2n::regularizers::{lp_norm, step_norm_bound, tv_norm, BoundInputs, LpNormReg, Regularizer};
use ir2n::solver::prec_value;
use ir2n::DVector;
use proptest::prelude::*;

fn vector(max_len: usize) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-5.0..5.0f64, 1..=max_len).prop_map(DVector::from_vec)
}

fn run(engine: &mut dyn ProxEngine, tol: f64) -> DVector<f64> {
    let mut y = None;
    for _ in 0..100_000 {
        match engine.next_candidate() {
            Some(c) => y = Some(c.point),
            None => break,
        }
        if engine.converged(tol) {
            break;
        }
    }
    y.expect("candidate")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lp_prox_matches_reference(q in vector(6), tau in 0.01..3.0f64, p in 1.0..4.0f64) {
        let y = run(&mut prox_lp_norm_engine(q.clone(), tau, p), 1e-13);
        prop_assert!((&y - lp_prox_reference(&q, tau, p)).amax() <= 1e-6);
    }

    #[test]
    fn lp_prox_never_increases_the_objective(q in vector(6), tau in 0.01..3.0f64, p in 1.0..4.0f64) {
        let y = run(&mut prox_lp_norm_engine(q.clone(), tau, p), 1e-10);
        let obj = |u: &DVector<f64>| 0.5 * (u - &q).norm_squared() + tau * lp_norm(u.as_slice(), p);
        prop_assert!(obj(&y) <= obj(&q) + 1e-12);
        prop_assert!(obj(&y) <= obj(&DVector::zeros(q.len())) + 1e-12);
    }

    #[test]
    fn tv_prox_preserves_the_mean(q in vector(12), tau in 0.01..2.0f64, p in 1.0..3.0f64) {
        // Dᵀv sums to zero, so the mean survives the prox
        let y = run(&mut prox_tvp_engine(q.clone(), tau, p), 1e-10);
        prop_assert!((y.mean() - q.mean()).abs() <= 1e-10);
        prop_assert!(tv_norm(y.as_slice(), p) <= tv_norm(q.as_slice(), p) + 1e-10);
    }

    #[test]
    fn weighted_l1_projection_is_feasible_and_optimal(
        v in vector(30),
        seed_w in prop::collection::vec(0.1..4.0f64, 30),
        frac in 0.01..1.5f64,
    ) {
        let w = DVector::from_iterator(v.len(), seed_w.into_iter().take(v.len()));
        let radius = frac * v.iter().zip(w.iter()).map(|(a, b)| a.abs() * b).sum::<f64>() + 1e-3;
        let u = project_weighted_l1_ball(&v, &w, radius);
        prop_assert!(u.iter().zip(w.iter()).map(|(a, b)| a.abs() * b).sum::<f64>() <= radius * (1.0 + 1e-12));
        prop_assert!((&u - weighted_l1_reference(&v, &w, radius)).amax() <= 1e-8);
    }

    #[test]
    fn lq_projection_is_nonexpansive(a in vector(8), d in vector(8), q in 1.05..30.0f64, r in 0.1..3.0f64) {
        let n = a.len().min(d.len());
        let (a, b) = (a.rows(0, n).into_owned(), d.rows(0, n).into_owned());
        let pa = project_lq_ball(&a, q, r, 1e-13).unwrap();
        let pb = project_lq_ball(&b, q, r, 1e-13).unwrap();
        prop_assert!(lp_norm(pa.as_slice(), q) <= r * (1.0 + 1e-10));
        prop_assert!((&pa - &pb).norm() <= (&a - &b).norm() * (1.0 + 1e-8) + 1e-10);
    }

    #[test]
    fn lp_bound_holds(x in vector(6), g in vector(6), nu in 1e-3..1.0f64, p in 1.0..3.0f64, mu in 0.01..2.0f64) {
        let n = x.len().min(g.len());
        let (x, g) = (x.rows(0, n).into_owned(), g.rows(0, n).into_owned());
        let reg = Regularizer::LpNorm(LpNormReg::new(p, mu).unwrap());
        let m = step_norm_bound(&reg, &BoundInputs { x: &x, nu, ghat_norm: g.norm() });
        let y = run(&mut prox_lp_norm_engine(&x - &g * nu, nu * mu, p), 1e-12);
        prop_assert!((&y - &x).norm() <= m * (1.0 + 1e-6));
    }

    #[test]
    fn schedule_is_monotone(n in 1usize..500) {
        let values: Vec<f64> = (0..=n + 5).map(|k| prec_value(k, n)).collect();
        prop_assert_eq!(values[0], 1e-3);
        prop_assert_eq!(values[n], 1e-14);
        prop_assert!(values.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn scientific_format_keeps_three_digits(v in -1e12..1e12f64) {
        let s = format_sci(v);
        let back: f64 = s.parse().unwrap();
        prop_assert!((back - v).abs() <= 5e-3 * v.abs());
        prop_assert!(s.contains("e+") || s.contains("e-"));
    }

    #[test]
    fn kappa_labels_round_trip(v in 1e-12..1.0f64) {
        let k = KappaSetting::Value(v);
        prop_assert_eq!(k.to_string().parse::<KappaSetting>().unwrap(), k);
    }
}
