use npc_core::armodels::{
    ar_autocovariance, ar_spectral_density_grid, ar_to_pacf, pacf_to_ar, simulate_arma,
    yule_walker_fit, ArModel, ArmaSpec, PacfVector,
};
use npc_core::bernstein::{
    cell_index, eval_c_eta, mixture_weights, stick_breaking, BernsteinState,
};
use npc_core::fourier::{
    fourier_frequencies, inverse_real_fourier_transform, periodogram, periodogram_direct,
    real_fourier_transform, real_fourier_transform_dense, TimeSeries,
};
use npc_core::likelihood::{
    corrected_ar_log_likelihood, whittle_log_likelihood, SpectralGridValues, SpectralRole,
};
use npc_core::postprocess::{
    fuller_log, fuller_log_inverse, integrated_absolute_error, median, sample_coverage,
    uniform_credible_band, PosteriorSpectra,
};
use proptest::prelude::*;

fn series(min: usize, max: usize) -> impl Strategy<Value = Vec<f64>> {
    (min..=max).prop_flat_map(|n| prop::collection::vec(-10.0..10.0f64, n))
}

fn pacf(max_p: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.95..0.95f64, 0..=max_p)
}

fn ones(n: usize) -> SpectralGridValues {
    SpectralGridValues::new(vec![1.0; n / 2 + 1], SpectralRole::DampedCorrection)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transform_is_orthonormal(z in series(4, 200)) {
        let ts = TimeSeries::new(z.clone()).unwrap();
        let fc = real_fourier_transform(&ts);
        let e0: f64 = z.iter().map(|v| v * v).sum();
        let e1: f64 = fc.coeffs().iter().map(|v| v * v).sum();
        prop_assert!((e0 - e1).abs() <= 1e-10 * e0.max(1.0));
        let back = inverse_real_fourier_transform(&fc);
        for (a, b) in back.values().iter().zip(&z) {
            prop_assert!((a - b).abs() < 1e-10);
        }
        let dense = real_fourier_transform_dense(&ts);
        for (a, b) in dense.coeffs().iter().zip(fc.coeffs()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn periodogram_pairs_coefficients(z in series(4, 200)) {
        let ts = TimeSeries::new(z).unwrap();
        let a = periodogram(&ts);
        let b = periodogram_direct(&ts);
        prop_assert_eq!(a.len(), ts.len() / 2 + 1);
        for (x, y) in a.ordinates().iter().zip(b.ordinates()) {
            prop_assert!(*x >= 0.0);
            prop_assert!((x - y).abs() < 1e-9 * y.abs().max(1.0));
        }
    }

    #[test]
    fn pacf_ar_roundtrip(rho in pacf(15)) {
        let a = pacf_to_ar(&rho).unwrap();
        let back = ar_to_pacf(a.as_slice()).unwrap();
        for (x, y) in back.as_slice().iter().zip(&rho) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn ar_spectrum_positive_and_autocovariance_dominated(rho in pacf(6), s2 in 0.1..5.0f64) {
        let m = ArModel::from_pacf(PacfVector::new(rho).unwrap(), s2).unwrap();
        let g = ar_autocovariance(&m, 10);
        prop_assert!(g[0] > 0.0);
        prop_assert!(g.iter().all(|v| v.abs() <= g[0] * (1.0 + 1e-12)));
        let grid = fourier_frequencies(32).unwrap();
        prop_assert!(ar_spectral_density_grid(&m, &grid).iter().all(|v| *v > 0.0));
    }

    #[test]
    fn yule_walker_is_causal(z in series(20, 120), p in 0usize..6) {
        let ts = TimeSeries::new(z).unwrap();
        if let Ok(m) = yule_walker_fit(&ts, p) {
            prop_assert!(m.pacf().as_slice().iter().all(|r| r.abs() < 1.0));
            prop_assert!(m.sigma2() > 0.0);
        }
    }

    #[test]
    fn unit_correction_is_scale_invariant_whittle_at_p0(z in series(4, 100), s2 in 0.2..5.0f64) {
        let ts = TimeSeries::new(z).unwrap();
        let n = ts.len();
        let grid = fourier_frequencies(n).unwrap();
        for omit in [false, true] {
            // eta = 0: the correction is c, the working model drops out.
            let c = ones(n);
            let l1 = corrected_ar_log_likelihood(&ts, &ArModel::white_noise(1.0).unwrap(), &c, 0.0, omit).unwrap();
            let l2 = corrected_ar_log_likelihood(&ts, &ArModel::white_noise(s2).unwrap(), &c, 0.0, omit).unwrap();
            prop_assert!((l1 - l2).abs() < 1e-9 * l1.abs().max(1.0));
            let f = SpectralGridValues::new(vec![1.0; grid.len()], SpectralRole::TruePsd);
            let w = whittle_log_likelihood(&periodogram(&ts), &f, omit).unwrap();
            prop_assert!((l1 - w).abs() < 1e-9 * w.abs().max(1.0));
        }
    }

    #[test]
    fn stick_weights_form_subprobability(v in prop::collection::vec(0.001..0.999f64, 1..40)) {
        let p = stick_breaking(&v).unwrap();
        prop_assert_eq!(p.len(), v.len() + 1);
        prop_assert!(p.iter().all(|x| *x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixture_weights_sum_to_one(
        v in prop::collection::vec(0.001..0.999f64, 5),
        w in prop::collection::vec(0.0..1.0f64, 6),
        k in 1usize..50,
    ) {
        let p = stick_breaking(&v).unwrap();
        let mw = mixture_weights(&p, &w, k);
        prop_assert_eq!(mw.k(), k);
        prop_assert!((mw.w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for &x in &w {
            let j = cell_index(x, k);
            prop_assert!((1..=k).contains(&j));
        }
    }

    #[test]
    fn bernstein_correction_is_positive(
        v in prop::collection::vec(0.01..0.99f64, 20),
        w in prop::collection::vec(0.0..1.0f64, 21),
        k in 1usize..60,
        tau in 0.01..10.0f64,
    ) {
        let s = BernsteinState::new(v, w, k, tau).unwrap();
        let c = eval_c_eta(&s, &fourier_frequencies(64).unwrap());
        prop_assert!(c.values.iter().all(|x| x.is_finite() && *x >= 0.0));
        prop_assert!(c.values[1..c.len() - 1].iter().all(|x| *x > 0.0));
    }

    #[test]
    fn fuller_log_inverts(x in 0.0..1e3f64, xi in 1e-4..1.0f64) {
        let y = fuller_log(x, xi).unwrap();
        let back = fuller_log_inverse(y, xi);
        prop_assert!((back - x).abs() <= 1e-8 * x.max(1.0));
        prop_assert!(fuller_log(x + 0.1, xi).unwrap() > y);
    }

    #[test]
    fn median_lies_within_range(v in prop::collection::vec(-1e3..1e3f64, 1..50)) {
        let m = median(&v);
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo <= m && m <= hi);
    }

    #[test]
    fn iae_is_a_metric(
        a in prop::collection::vec(0.0..10.0f64, 17),
        b in prop::collection::vec(0.0..10.0f64, 17),
        c in prop::collection::vec(0.0..10.0f64, 17),
    ) {
        let grid = fourier_frequencies(32).unwrap();
        let t = |v: &Vec<f64>| SpectralGridValues::new(v.clone(), SpectralRole::TruePsd);
        let ab = integrated_absolute_error(&a, &t(&b), &grid).unwrap();
        let ac = integrated_absolute_error(&a, &t(&c), &grid).unwrap();
        let cb = integrated_absolute_error(&c, &t(&b), &grid).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(integrated_absolute_error(&a, &t(&a), &grid).unwrap(), 0.0);
        prop_assert!(ab <= ac + cb + 1e-12);
    }

    #[test]
    fn uniform_band_covers_its_own_draws(
        rows in prop::collection::vec(prop::collection::vec(0.01..50.0f64, 9), 20..80),
        alpha in 0.05..0.5f64,
    ) {
        let ps = PosteriorSpectra::new(fourier_frequencies(16).unwrap(), rows).unwrap();
        let band = uniform_credible_band(&ps, alpha, 0.001).unwrap();
        prop_assert!(sample_coverage(&ps, &band) >= 1.0 - alpha - 1e-12);
        for j in 0..9 {
            prop_assert!(band.lower[j] >= 0.0 && band.lower[j] <= band.upper[j]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn arma_simulation_is_seed_deterministic(a in -0.9..0.9f64, b in -0.9..0.9f64, seed in any::<u64>()) {
        let spec = ArmaSpec::new(vec![a], vec![b]).unwrap();
        let x = simulate_arma(&spec, 32, seed).unwrap();
        let y = simulate_arma(&spec, 32, seed).unwrap();
        prop_assert_eq!(x, y);
    }
}
