use interurn::estimate::{
    fit_mle, gamma_family, heaps_step, log_likelihood, pipeline, w_family, MleOptions, SymmetricFamily,
};
use interurn::stats::FitOptions;
use interurn::ingest::Record;
use interurn::{leading_eigen, run, validate_spec, InteractionSpec, ObservationLog};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform on the open interval (0, 1).
fn open01<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let x: f64 = rng.gen();
        if x > 0.0 {
            return x;
        }
    }
}

#[test]
fn family_identities_over_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut high = 0;
    for _ in 0..10_000 {
        let gs = open01(&mut rng);
        let r = if rng.gen_bool(0.05) { 1.0 } else { open01(&mut rng) };
        let (x1, x2) = (open01(&mut rng), open01(&mut rng));
        let (y1, y2) = (open01(&mut rng), open01(&mut rng));
        high += usize::from(gs > r);

        let g = gamma_family(gs, r, x1, x2).unwrap();
        let left = g.vec_mul(&[r, 1.0]);
        assert!((left[0] - gs * r).abs() < 1e-10 && (left[1] - gs).abs() < 1e-10);
        assert!(g.is_nonnegative());
        assert!(g.column_sums().iter().all(|&s| s < 1.0));

        let w = w_family(gs, r, x1, x2, y1, y2).unwrap();
        for s in w.column_sums() {
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert!(w.sub(&g).is_nonnegative());
        let spec = InteractionSpec::from_parts(vec![1.0, 1.0], g, w);
        assert!(validate_spec(&spec).is_empty(), "{gs} {r} {x1} {x2} {y1} {y2}");
    }
    assert!(high > 1000 && high < 9000);
}

#[test]
fn family_leading_eigenvalue_is_prescribed() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..500 {
        let (gs, r) = (rng.gen_range(0.05..0.95), rng.gen_range(0.05..1.0));
        let g = gamma_family(gs, r, rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95)).unwrap();
        let s = leading_eigen(&g).unwrap_or_else(|e| panic!("{e} {g:?}"));
        assert!((s.gamma_star - gs).abs() < 1e-9);
        assert!((s.ratio(0, 1) - r).abs() < 1e-6);
    }
}

#[test]
fn symmetric_reduction_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..10_000 {
        let fam = SymmetricFamily::new(open01(&mut rng), open01(&mut rng)).unwrap();
        let x1 = fam.x1_max() * open01(&mut rng);
        let y1 = fam.y1_max(x1).unwrap() * rng.gen::<f64>();
        let p = fam.params(x1, y1).unwrap();
        let (g, w) = (p.gamma().unwrap(), p.w().unwrap());
        assert!((g[(0, 1)] - g[(1, 0)]).abs() < 1e-12);
        assert!((w[(0, 1)] - w[(1, 0)]).abs() < 1e-12);
    }
}

#[test]
fn generating_spec_beats_perturbations() {
    let base = [0.10, 0.40, 0.10, 0.50];
    let truth = InteractionSpec::symmetric_pair(base[0], base[1], base[2], base[3], 1.0).unwrap();
    // Each entry moved by ±0.1, where the result is still a valid spec.
    let others: Vec<InteractionSpec> = (0..4)
        .flat_map(|k| [0.1, -0.1].map(move |d| (k, d)))
        .filter_map(|(k, d)| {
            let mut p = base;
            p[k] += d;
            InteractionSpec::symmetric_pair(p[0], p[1], p[2], p[3], 1.0).ok()
        })
        .collect();
    assert!(others.len() >= 5);
    let logs: Vec<_> = (0..20).map(|seed| run(&truth, 10_000, seed).unwrap()).collect();
    let mean = |spec: &InteractionSpec| {
        logs.iter()
            .map(|log| log_likelihood(log, spec).unwrap_or(f64::NEG_INFINITY))
            .sum::<f64>()
            / logs.len() as f64
    };
    let at_truth = mean(&truth);
    assert!(at_truth.is_finite());
    for other in &others {
        assert!(at_truth > mean(other), "{:?}", other.gamma());
    }
}

#[test]
fn mle_is_at_least_as_likely_as_truth_and_deterministic() {
    let truth = InteractionSpec::symmetric_pair(0.25, 0.40, 0.25, 0.50, 1.0).unwrap();
    let s = leading_eigen(truth.gamma()).unwrap();
    let log = run(&truth, 5_000, 3).unwrap();
    let opts = MleOptions::default();
    let fit = fit_mle(&log, s.gamma_star, s.ratio(0, 1), &opts).unwrap();
    let at_truth = log_likelihood(&log, &truth).unwrap();
    assert!(fit.log_likelihood >= at_truth - 1e-6, "{} < {at_truth}", fit.log_likelihood);
    assert!(fit.converged);
    assert!(fit.gamma_hat.is_symmetric(1e-9) && fit.w_hat.is_symmetric(1e-9));
    assert!(validate_spec(&InteractionSpec::from_parts(vec![1.0, 1.0], fit.gamma_hat.clone(), fit.w_hat.clone())).is_empty());
    let again = fit_mle(&log, s.gamma_star, s.ratio(0, 1), &opts).unwrap();
    assert_eq!(fit, again);
}

#[test]
fn unsymmetric_fit_runs() {
    let truth = InteractionSpec::symmetric_pair(0.25, 0.40, 0.25, 0.50, 1.0).unwrap();
    let log = run(&truth, 3_000, 4).unwrap();
    let opts = MleOptions {
        symmetric: false,
        ..MleOptions::default()
    };
    let fit = fit_mle(&log, 0.59, 0.74, &opts).unwrap();
    let sym = fit_mle(&log, 0.59, 0.74, &MleOptions::default()).unwrap();
    // The symmetric family is nested in the full one.
    assert!(fit.log_likelihood >= sym.log_likelihood - 1e-3);
}

#[test]
fn power_law_series_give_the_construction_exponent() {
    let beta = 0.5;
    let times = interurn::stats::log_spaced_times(1_000_000, 400);
    let scale = [1.0, 0.25];
    let series: Vec<Vec<(f64, f64)>> = scale
        .iter()
        .map(|c| times.iter().map(|&t| (t as f64, c * (t as f64).powf(beta))).collect())
        .collect();
    let fit = interurn::stats::heaps_fit(&series, 100.0, 200).unwrap();
    assert!((fit.slope - beta).abs() < 1e-6);
    assert!((fit.intercepts[0] - fit.intercepts[1] - 4f64.log10()).abs() < 1e-6);
}

#[test]
fn all_novel_log_has_unit_slope() {
    // Every draw is a new item, so every count equals t.
    let records = (1..=20_000u64)
        .flat_map(|t| (1..=2).map(move |a| Record { t, agent: a, item: format!("{t}-{a}"), line: 0 }))
        .collect();
    let log = ObservationLog::from_records(2, records, false).unwrap();
    let fit = heaps_step(&log, &FitOptions::default()).unwrap();
    assert!((fit.slope - 1.0).abs() < 1e-6);
    assert!(fit.u_hat.unwrap().abs() < 1e-6);
}

#[test]
fn pipeline_on_reference_data() {
    let truth = InteractionSpec::symmetric_pair(0.25, 0.40, 0.40, 0.50, 1.0).unwrap();
    let log = run(&truth, 10_000, 8).unwrap();
    let res = pipeline(&log, &FitOptions::default(), &MleOptions::default()).unwrap();
    assert!((res.gamma_star_hat - 0.73).abs() < 0.1);
    assert!(!res.relabeled);
    assert!((res.r_hat - 10f64.powf(res.u_hat)).abs() < 1e-12);
    let e = res.mle.entries;
    assert!((e.g12 - 0.40).abs() < 0.1 && (e.w12 - 0.50).abs() < 0.1);
}
