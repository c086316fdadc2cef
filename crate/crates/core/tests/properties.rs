use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use singcubic::baselines::SagaState;
use singcubic::data::{make_batches, parse_libsvm, to_libsvm, Dataset};
use singcubic::linalg::gershgorin_bounds;
use singcubic::objective::{LogisticProblem, Regularizer};
use singcubic::singcubic::{init_store, singcubic_run, update_sigma, OptimizerConfig, Rho};
use singcubic::subproblem::cubic_model;
use singcubic::trace::{emit_csv, parse_trace_csv};
use singcubic::trust_region::solve_trust_region;
use singcubic::{solve_cubic, SubproblemInput};

type Vector = DVector<f64>;
type Matrix = DMatrix<f64>;

fn symmetric(p: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-3.0..3.0f64, p * p).prop_map(move |v| {
        let a = Matrix::from_vec(p, p, v);
        (&a + a.transpose()) * 0.5
    })
}

fn model(max_p: usize) -> impl Strategy<Value = (Vector, Matrix)> {
    (1..=max_p).prop_flat_map(|p| (prop::collection::vec(-2.0..2.0f64, p).prop_map(Vector::from_vec), symmetric(p)))
}

fn dataset(max_n: usize, p: usize) -> impl Strategy<Value = Dataset> {
    prop::collection::vec((prop::collection::vec(prop::option::of(-2.0..2.0f64), p), any::<bool>()), 2..=max_n).prop_map(
        move |rows| {
            let labels = rows.iter().map(|(_, y)| f64::from(u8::from(*y))).collect();
            let rows = rows
                .into_iter()
                .map(|(r, _)| r.into_iter().enumerate().filter_map(|(c, v)| v.map(|v| (c, v))).collect())
                .collect();
            Dataset::from_rows(rows, labels, p, "proptest").unwrap()
        },
    )
}

fn min_eig(h: &Matrix) -> (f64, f64) {
    let e = SymmetricEigen::new(h.clone()).eigenvalues;
    (e.min(), e.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn cubic_solution_certificate((g, h) in model(8), sigma in prop::sample::select(vec![1e-3, 0.1, 1.0, 10.0]), seed in any::<u64>()) {
        let r = solve_cubic(&SubproblemInput::new(&g, &h, sigma).with_tolerance(1e-10), &mut ChaCha8Rng::seed_from_u64(seed));
        let residual = (&h * &r.d + r.lambda * &r.d + &g).norm();
        prop_assert!(residual <= 1e-6 * g.norm().max(1.0), "residual {residual}");
        let (lmin, hnorm) = min_eig(&h);
        prop_assert!(lmin + r.lambda >= -1e-8 * hnorm.max(1.0));
        prop_assert!(cubic_model(&g, &h, sigma, &r.d) <= 1e-12);
        prop_assert!(r.lambda >= 0.0);
    }

    #[test]
    fn warm_start_does_not_change_the_minimum((g, h) in model(6), warm in 0.0..5.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cold = solve_cubic(&SubproblemInput::new(&g, &h, 1.0).with_tolerance(1e-10), &mut rng);
        let hot = solve_cubic(&SubproblemInput::new(&g, &h, 1.0).with_tolerance(1e-10).with_warm_start(warm), &mut rng);
        let (mc, mh) = (cubic_model(&g, &h, 1.0, &cold.d), cubic_model(&g, &h, 1.0, &hot.d));
        prop_assert!((mc - mh).abs() <= 1e-7 * mc.abs().max(1.0), "{mc} vs {mh}");
    }

    #[test]
    fn trust_region_step_stays_inside((g, h) in model(6), radius in 0.01..5.0f64) {
        let s = solve_trust_region(&g, &h, radius, 200);
        prop_assert!(s.d.norm() <= radius * (1.0 + 1e-8));
        let (lmin, hnorm) = min_eig(&h);
        prop_assert!(lmin + s.lambda >= -1e-8 * hnorm.max(1.0));
        let q = g.dot(&s.d) + 0.5 * s.d.dot(&(&h * &s.d));
        prop_assert!(q <= 1e-12);
    }

    #[test]
    fn gershgorin_bounds_enclose_spectrum(h in (1..8usize).prop_flat_map(symmetric)) {
        let (lo, hi) = gershgorin_bounds(&h);
        let e = SymmetricEigen::new(h).eigenvalues;
        prop_assert!(lo <= e.min() + 1e-12 && e.max() <= hi + 1e-12);
    }

    #[test]
    fn batches_partition_components(n in 1..500usize, frac in 0.001..=1.0f64, shuffle in prop::option::of(any::<u64>())) {
        let batches = make_batches(n, frac, shuffle);
        let mut seen: Vec<usize> = batches.iter().flatten().copied().collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
        let b = batches[0].len();
        prop_assert!(batches[..batches.len() - 1].iter().all(|x| x.len() == b));
    }

    #[test]
    fn libsvm_round_trip(ds in dataset(20, 6)) {
        let again = parse_libsvm(to_libsvm(&ds).as_bytes(), Some(6), "again").unwrap();
        prop_assert_eq!(again.n_rows(), ds.n_rows());
        prop_assert_eq!(again.labels(), ds.labels());
        for i in 0..ds.n_rows() {
            prop_assert_eq!(again.row(i), ds.row(i));
        }
    }

    #[test]
    fn sigma_never_drops_below_floor(rho in -10.0..10.0f64, sigma in 1e-16..1e3f64) {
        let s = update_sigma(Rho::Ratio(rho), sigma, &OptimizerConfig::default());
        prop_assert!(s >= 1e-16);
    }

    #[test]
    fn incremental_aggregates_match_rebuild(
        ds in dataset(30, 4),
        steps in prop::collection::vec((any::<prop::sample::Index>(), prop::collection::vec(-1.5..1.5f64, 4)), 1..12),
    ) {
        let obj = LogisticProblem::new(ds, Regularizer::rational(0.1, 1.0)).unwrap();
        let mut store = init_store(&obj, &Vector::zeros(4), 0.3).unwrap();
        for (j, x) in steps {
            let j = j.index(store.n_batches());
            store.refresh_component(&obj, j, &Vector::from_vec(x)).unwrap();
            let (h, g, c) = store.rebuild_aggregates();
            prop_assert!((&h - store.hessian()).amax() <= 1e-10 * h.amax().max(1.0));
            prop_assert!((&g - store.gradient()).amax() <= 1e-10 * g.amax().max(1.0));
            prop_assert!((c - store.constant()).abs() <= 1e-10 * c.abs().max(1.0));
        }
    }

    #[test]
    fn stored_model_derivatives_match_aggregates(
        ds in dataset(24, 3),
        anchors in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 3), 1..6),
    ) {
        let obj = LogisticProblem::new(ds, Regularizer::l2(0.05)).unwrap();
        let mut store = init_store(&obj, &Vector::zeros(3), 0.25).unwrap();
        for (j, a) in anchors.into_iter().enumerate() {
            store.refresh_component(&obj, j % store.n_batches(), &Vector::from_vec(a)).unwrap();
        }
        let x = store.point().clone();
        let h = 1e-4;
        for i in 0..3 {
            let e = Vector::from_fn(3, |k, _| if k == i { h } else { 0.0 });
            let (fp, fm) = (store.surrogate_value(&(&x + &e)), store.surrogate_value(&(&x - &e)));
            let fd = (fp - fm) / (2.0 * h);
            prop_assert!((fd - store.gradient()[i]).abs() <= 1e-7 * store.gradient().amax().max(1.0));
            let fd2 = (fp - 2.0 * store.surrogate_value(&x) + fm) / (h * h);
            prop_assert!((fd2 - store.hessian()[(i, i)]).abs() <= 1e-4);
        }
        prop_assert!((store.surrogate_value(&x) - store.constant()).abs() <= 1e-12 * store.constant().abs().max(1.0));
    }

    #[test]
    fn accepted_steps_decrease_objective(ds in dataset(40, 3), seed in any::<u64>()) {
        let obj = LogisticProblem::new(ds, Regularizer::rational(0.05, 2.0)).unwrap();
        let cfg = OptimizerConfig { batch_frac: 0.25, max_epochs: 6.0, seed, ..OptimizerConfig::experiment() };
        let run = singcubic_run(&obj, &Vector::zeros(3), &cfg).unwrap();
        let acc: Vec<f64> = run.trace.accepted_objectives().collect();
        prop_assert!(acc.windows(2).all(|w| w[1] <= w[0]));
        let rows = &run.trace.rows;
        prop_assert!(rows.windows(2).all(|w| w[1].effective_epochs >= w[0].effective_epochs));
        for w in rows.windows(2) {
            if w[1].accepted {
                prop_assert!(w[1].rho.unwrap() >= 0.1);
            } else {
                prop_assert_eq!(w[1].objective, w[0].objective);
            }
        }
    }

    #[test]
    fn saga_mean_matches_table(ds in dataset(30, 3), picks in prop::collection::vec(any::<prop::sample::Index>(), 1..40)) {
        let n = ds.n_rows();
        let obj = LogisticProblem::new(ds, Regularizer::l2(0.01)).unwrap();
        let batches = make_batches(n, 0.2, None);
        let nb = batches.len();
        let mut s = SagaState::new(&obj, &Vector::zeros(3), batches, 0.1).unwrap();
        for j in picks {
            s.step(&obj, j.index(nb)).unwrap();
            prop_assert!(s.table_mean_error() <= 1e-12);
        }
    }

    #[test]
    fn trace_csv_round_trips(ds in dataset(20, 2), seed in any::<u64>()) {
        let obj = LogisticProblem::new(ds, Regularizer::l2(0.01)).unwrap();
        let cfg = OptimizerConfig { batch_frac: 0.5, max_epochs: 6.0, seed, ..OptimizerConfig::experiment() };
        let run = singcubic_run(&obj, &Vector::zeros(2), &cfg).unwrap();
        let points = parse_trace_csv(&emit_csv(&run.trace, false), "mem").unwrap();
        prop_assert_eq!(points.len(), run.trace.rows.len());
        for (p, r) in points.iter().zip(&run.trace.rows) {
            prop_assert_eq!(p.objective, r.objective);
            prop_assert_eq!(p.effective_epochs, r.effective_epochs);
            prop_assert_eq!(p.accepted, r.accepted);
        }
    }
}
