use randla_core::tt::*;
use randla_core::RngStream;

fn exact_tensor(rng: &mut RngStream) -> DenseTensor {
    tt_reconstruct(&random_train(&[4, 4, 4, 4], &[2, 3, 2], rng).unwrap()).unwrap()
}

fn noisy_tensor(rng: &mut RngStream, scale: f64) -> DenseTensor {
    let base = tt_reconstruct(&random_train(&[5, 4, 6], &[2, 2], rng).unwrap()).unwrap();
    let data: Vec<f64> = base.as_slice().iter().map(|x| x + scale * rng.gaussian()).collect();
    DenseTensor::new(base.dims().to_vec(), data).unwrap()
}

fn bound_holds(t: &DenseTensor, out: &TtSvdOutput) {
    let err = tt_error(t, &out.train).unwrap();
    let rhs: f64 = out.tails.iter().map(|x| x * x).sum();
    // the bound is attained when a single sweep truncates, so allow rounding
    assert!(
        err * err <= rhs * (1.0 + 1e-12) + 1e-20 * t.frobenius().powi(2),
        "{err:e} vs {:e}",
        rhs.sqrt()
    );
}

#[test]
fn tt_svd_recovers_exact_ranks() {
    let mut rng = RngStream::new(200, 0);
    for _ in 0..5 {
        let t = exact_tensor(&mut rng);
        let out = tt_svd(&t, &TtTruncation::Ranks(vec![2, 3, 2])).unwrap();
        assert_eq!(out.train.ranks(), vec![2, 3, 2]);
        assert!(tt_error(&t, &out.train).unwrap() <= 1e-10 * t.frobenius());
        bound_holds(&t, &out);
        let tol = tt_svd(&t, &TtTruncation::Tolerance(1e-10)).unwrap();
        assert_eq!(tol.train.ranks(), vec![2, 3, 2]);
        bound_holds(&t, &tol);
    }
}

#[test]
fn tolerance_mode_meets_its_budget() {
    let mut rng = RngStream::new(201, 0);
    for tol in [1e-1, 1e-3, 1e-6] {
        let t = noisy_tensor(&mut rng, 1e-2);
        let out = tt_svd(&t, &TtTruncation::Tolerance(tol)).unwrap();
        bound_holds(&t, &out);
        assert!(tt_error(&t, &out.train).unwrap() <= tol * t.frobenius() * (1.0 + 1e-12));
    }
}

#[test]
fn error_bound_and_rank_monotonicity() {
    let mut rng = RngStream::new(202, 0);
    for _ in 0..5 {
        let t = noisy_tensor(&mut rng, 1e-3);
        let mut prev = f64::INFINITY;
        for r2 in 1..=4 {
            let out = tt_svd(&t, &TtTruncation::Ranks(vec![2, r2])).unwrap();
            bound_holds(&t, &out);
            let err = tt_error(&t, &out.train).unwrap();
            assert!(err <= prev * (1.0 + 1e-12), "r2={r2}: {err:e} > {prev:e}");
            prev = err;
        }
    }
}

#[test]
fn two_term_tensor_error_matches_tail() {
    // T = a⊗a⊗a + ε·b⊗b⊗b with orthonormal a, b
    let a = [0.6, 0.8, 0.0];
    let b = [0.0, 0.0, 1.0];
    let eps = 0.25;
    let t = DenseTensor::from_fn(vec![3, 3, 3], |i| a[i[0]] * a[i[1]] * a[i[2]] + eps * b[i[0]] * b[i[1]] * b[i[2]])
        .unwrap();
    let out = tt_svd(&t, &TtTruncation::Ranks(vec![1, 1])).unwrap();
    let err = tt_error(&t, &out.train).unwrap();
    let rhs = out.error_bound();
    assert!((err - eps).abs() < 1e-14);
    assert!(err <= rhs * (1.0 + 1e-12) && rhs <= err * 2f64.sqrt() * (1.0 + 1e-12));
}

#[test]
fn randomized_exact_and_oversampled() {
    let mut better = 0;
    for trial in 0..20 {
        let mut rng = RngStream::for_trial(203, 0, trial);
        let t = exact_tensor(&mut rng);
        let e0 = tt_error(&t, &tt_randomized(&t, &[2, 3, 2], 0, &mut rng).unwrap()).unwrap();
        assert!(e0 <= 1e-8 * t.frobenius(), "{e0:e}");
        let e4 = tt_error(&t, &tt_randomized(&t, &[2, 3, 2], 4, &mut rng).unwrap()).unwrap();
        assert!(e4 <= 1e-8 * t.frobenius());

        let noisy = noisy_tensor(&mut rng, 1e-6);
        let n0 = tt_error(&noisy, &tt_randomized(&noisy, &[2, 2], 0, &mut rng).unwrap()).unwrap();
        let n4 = tt_error(&noisy, &tt_randomized(&noisy, &[2, 2], 4, &mut rng).unwrap()).unwrap();
        if n4 <= n0 {
            better += 1;
        }
    }
    assert!(better >= 16, "{better}/20");
}

const OVERSAMPLE: usize = 4;

#[test]
fn randomized_close_to_deterministic_on_noisy_tensors() {
    let mut within = 0;
    for trial in 0..50 {
        let mut rng = RngStream::for_trial(204, 0, trial);
        let t = noisy_tensor(&mut rng, 1e-9);
        let det = tt_svd(&t, &TtTruncation::Ranks(vec![2, 2])).unwrap();
        let optimal = det.error_bound();
        let rand = tt_error(&t, &tt_randomized(&t, &[2, 2], OVERSAMPLE, &mut rng).unwrap()).unwrap();
        assert!(rand <= 10.0 * 2f64.sqrt() * optimal, "{rand:e} vs {optimal:e}");
        if rand <= 10.0 * tt_error(&t, &det.train).unwrap() {
            within += 1;
        }
    }
    assert!(within >= 45, "{within}/50");
}

#[test]
fn randomized_rejects_bad_ranks() {
    let mut rng = RngStream::new(205, 0);
    let t = exact_tensor(&mut rng);
    assert!(matches!(
        tt_randomized(&t, &[5, 3, 2], 0, &mut rng),
        Err(randla_core::Error::RankTooLarge { mode: 1, .. })
    ));
    assert!(tt_randomized(&t, &[2, 3], 0, &mut rng).is_err());
    let zero = DenseTensor::new(vec![2, 2], vec![0.0; 4]).unwrap();
    assert!(matches!(
        tt_randomized(&zero, &[1], 0, &mut rng),
        Err(randla_core::Error::RankDeficientSketch { attempts: 3 })
    ));
}
