use npc_core::armodels::{simulate_arma, ArLikelihood, ArmaSpec, PacfVector};
use npc_core::bernstein::{eval_c_eta, log_prior, BernsteinDirichletConfig, BernsteinState};
use npc_core::diagnostics::{chi_square_test, ks_test, total_variation};
use npc_core::fourier::{periodogram, TimeSeries};
use npc_core::likelihood::whittle_log_likelihood;
use npc_core::mcmc::{
    npc_full_conditional_logpost, run_ar, run_npc, ArPriorConfig, ArSampler, KUpdate,
    LikelihoodMode, McmcConfig, NpcSampler, NpcState, TauUpdate,
};
use npc_core::postprocess::posterior_median_psd;
use statrs::distribution::{Beta, ContinuousCDF, Gamma};
use statrs::function::gamma::ln_gamma;

fn short_cfg(seed: u64, iterations: usize, burn_in: usize) -> McmcConfig {
    McmcConfig {
        iterations,
        burn_in,
        thin: 1,
        ..McmcConfig::npc_default(seed)
    }
}

fn small_prior(n: usize, k_max: usize) -> BernsteinDirichletConfig {
    BernsteinDirichletConfig {
        k_max,
        ..BernsteinDirichletConfig::for_series_len(n)
    }
}

fn flat_cfg(seed: u64, iterations: usize) -> McmcConfig {
    McmcConfig {
        likelihood: LikelihoodMode::Flat,
        ..short_cfg(seed, iterations, 0)
    }
}

fn ar1(a: f64, n: usize, seed: u64) -> TimeSeries {
    simulate_arma(&ArmaSpec::new(vec![a], vec![]).unwrap(), n, seed).unwrap()
}

fn state(l: usize, k: usize, tau: f64, rho: Vec<f64>, eta: f64) -> NpcState {
    let v = (0..l).map(|i| 0.1 + 0.8 * (i as f64 / l as f64)).collect();
    let w = (0..=l).map(|i| (0.05 + 0.9 * ((i * 7) % (l + 1)) as f64 / l as f64).min(0.99)).collect();
    NpcState {
        bern: BernsteinState::new(v, w, k, tau).unwrap(),
        rho: PacfVector::new(rho).unwrap(),
        eta,
    }
}

#[test]
fn sampler_log_posterior_matches_standalone() {
    let ts = ar1(0.6, 50, 3);
    let prior = small_prior(50, 60);
    for (rho, eta) in [(vec![], 0.0), (vec![0.4], 0.3), (vec![0.2, -0.5], 0.9)] {
        let p = rho.len();
        let s = state(prior.l, 17, 0.8, rho, eta);
        let expected = npc_full_conditional_logpost(&s, &ts, p, &prior, true);
        let sampler = NpcSampler::with_state(&ts, &prior, &short_cfg(1, 10, 0), s).unwrap();
        assert!((sampler.log_posterior() - expected).abs() < 1e-10);
    }
}

#[test]
fn white_noise_logpost_is_whittle_posterior() {
    let ts = ar1(0.0, 40, 11);
    let prior = small_prior(40, 50);
    let s = state(prior.l, 9, 1.3, vec![], 0.0);
    let grid = npc_core::fourier::fourier_frequencies(40).unwrap();
    let f = eval_c_eta(&s.bern, &grid);
    let reference = log_prior(&s.bern, &prior) + whittle_log_likelihood(&periodogram(&ts), &f, true).unwrap();
    let got = npc_full_conditional_logpost(&s, &ts, 0, &prior, true);
    assert!((got - reference).abs() < 1e-10);
}

#[test]
fn logpost_outside_support() {
    let ts = ar1(0.6, 30, 3);
    let prior = small_prior(30, 60);
    let mut s = state(prior.l, 5, 1.0, vec![0.3], 0.5);
    s.eta = 1.2;
    assert_eq!(npc_full_conditional_logpost(&s, &ts, 1, &prior, true), f64::NEG_INFINITY);
    let mut s = state(prior.l, 5, 1.0, vec![0.3], 0.5);
    s.bern.k = 61;
    assert_eq!(npc_full_conditional_logpost(&s, &ts, 1, &prior, true), f64::NEG_INFINITY);
    let s = state(prior.l, 5, 1.0, vec![0.3], 0.5);
    assert_eq!(npc_full_conditional_logpost(&s, &ts, 2, &prior, true), f64::NEG_INFINITY);
}

#[test]
fn runs_are_deterministic() {
    let ts = ar1(0.7, 64, 5);
    let prior = small_prior(64, 40);
    let cfg = short_cfg(9, 300, 100);
    let a = run_npc(&ts, 1, &prior, &cfg).unwrap();
    let b = run_npc(&ts, 1, &prior, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let c = run_npc(&ts, 1, &prior, &cfg.with_seed(10, 0)).unwrap();
    assert_ne!(a.psd, c.psd);
    let ar_cfg = short_cfg(9, 300, 100);
    let x = run_ar(&ts, 2, &ArPriorConfig::default(), &ar_cfg).unwrap();
    let y = run_ar(&ts, 2, &ArPriorConfig::default(), &ar_cfg).unwrap();
    assert_eq!(x, y);
}

#[test]
fn retained_count_and_support() {
    let ts = ar1(0.7, 64, 5);
    let prior = small_prior(64, 40);
    let cfg = McmcConfig {
        thin: 3,
        rho_proposal_sd: 10.0,
        ..short_cfg(2, 400, 100)
    };
    let out = run_npc(&ts, 2, &prior, &cfg).unwrap();
    assert_eq!(out.psd.n_samples(), 100);
    assert_eq!(out.retained().count(), 100);
    for t in &out.traces {
        assert!(t.rho.iter().all(|r| r.abs() < 1.0));
        let eta = t.eta.unwrap();
        assert!((0.0..=1.0).contains(&eta));
        assert!(t.tau.unwrap() > 0.0);
        assert!((1..=40).contains(&t.k.unwrap()));
    }
}

#[test]
fn adaptation_freezes_after_burn_in() {
    let ts = ar1(0.9, 64, 8);
    let out = run_ar(&ts, 2, &ArPriorConfig::default(), &short_cfg(4, 1200, 600)).unwrap();
    let frozen = &out.traces[599].rho_proposal_sd;
    assert!(out.traces[600..].iter().all(|t| &t.rho_proposal_sd == frozen));
    assert_ne!(out.traces[0].rho_proposal_sd, *frozen);
}

#[test]
fn white_noise_np_run_recovers_flat_spectrum() {
    let ts = simulate_arma(&ArmaSpec::default(), 64, 21).unwrap();
    let prior = BernsteinDirichletConfig::for_series_len(64);
    let cfg = McmcConfig {
        k_update: KUpdate::RandomWalk { max_step: 5 },
        ..short_cfg(3, 2000, 1000)
    };
    let out = run_npc(&ts, 0, &prior, &cfg).unwrap();
    let med = posterior_median_psd(&out.psd).unwrap();
    let target = 1.0 / (2.0 * std::f64::consts::PI);
    for (j, m) in med.iter().enumerate().skip(1).take(31) {
        assert!(*m > target / 2.0 && *m < target * 2.0, "j={j} median={m}");
    }
}

#[test]
fn np_run_with_enumerated_k() {
    let ts = simulate_arma(&ArmaSpec::default(), 64, 22).unwrap();
    let prior = BernsteinDirichletConfig::for_series_len(64);
    let out = run_npc(&ts, 0, &prior, &short_cfg(3, 600, 300)).unwrap();
    let med = posterior_median_psd(&out.psd).unwrap();
    let target = 1.0 / (2.0 * std::f64::consts::PI);
    for m in &med[1..32] {
        assert!(*m > target / 2.0 && *m < target * 2.0);
    }
}

#[test]
fn ar_posterior_concentrates() {
    let ts = ar1(0.7, 1024, 31);
    let out = run_ar(&ts, 1, &ArPriorConfig::default(), &short_cfg(6, 3000, 1000)).unwrap();
    let rho = out.posterior_mean_rho()[0];
    assert!((rho - 0.7).abs() < 0.05, "posterior mean {rho}");
    let s2 = out.posterior_mean_sigma2().unwrap();
    assert!((s2 - 1.0).abs() < 0.15, "sigma2 {s2}");
}

/// Prior recovery for `V`, `W`, `k` and `tau` with the likelihood replaced by
/// a constant.
#[test]
fn flat_npc_recovers_prior_marginals() {
    let ts = ar1(0.5, 32, 1);
    let prior = BernsteinDirichletConfig {
        m: 1.0,
        k_max: 20,
        alpha_tau: 3.0,
        beta_tau: 2.0,
        l: 3,
        ..BernsteinDirichletConfig::for_series_len(32)
    };
    let draws = 10_000;
    let cfg = flat_cfg(17, draws);
    let mut sampler = NpcSampler::new(&ts, 1, &prior, &cfg).unwrap();
    let (mut v1, mut w0, mut w2, mut tau, mut rho) = (vec![], vec![], vec![], vec![], vec![]);
    let mut k_counts = vec![0u64; 20];
    for it in 0..draws {
        sampler.sweep(it);
        let s = sampler.state();
        v1.push(s.bern.v[1]);
        w0.push(s.bern.w[0]);
        w2.push(s.bern.w[2]);
        tau.push(s.bern.tau);
        rho.push(s.rho.as_slice()[0]);
        k_counts[s.bern.k - 1] += 1;
    }
    let uniform = |x: f64| x.clamp(0.0, 1.0);
    assert!(ks_test(&v1, uniform) > 0.01);
    assert!(ks_test(&w0, uniform) > 0.01);
    assert!(ks_test(&w2, uniform) > 0.01);
    // tau ~ IG(3, 2) <=> 1/tau ~ Gamma(3, rate 2).
    let g = Gamma::new(3.0, 2.0).unwrap();
    let inv_tau: Vec<f64> = tau.iter().map(|t| 1.0 / t).collect();
    assert!(ks_test(&inv_tau, |x| g.cdf(x)) > 0.01);
    let probs: Vec<f64> = prior.ln_pk_table().iter().map(|v| v.exp()).collect();
    let (_, _, p) = chi_square_test(&k_counts, &probs, 5.0);
    assert!(p > 0.01, "k chi-square p = {p}");
    // Random-walk rho with a flat target is uniform on (-1, 1); thin to
    // reduce autocorrelation.
    let thinned: Vec<f64> = rho.iter().step_by(20).copied().collect();
    assert!(ks_test(&thinned, |x| ((x + 1.0) / 2.0).clamp(0.0, 1.0)) > 0.01);
}

#[test]
fn flat_npc_recovers_beta_sticks() {
    let ts = ar1(0.5, 32, 1);
    let prior = BernsteinDirichletConfig {
        m: 2.5,
        k_max: 10,
        l: 2,
        ..BernsteinDirichletConfig::for_series_len(32)
    };
    let cfg = McmcConfig {
        k_update: KUpdate::RandomWalk { max_step: 3 },
        ..flat_cfg(5, 50_000)
    };
    let mut sampler = NpcSampler::new(&ts, 0, &prior, &cfg).unwrap();
    let mut v0 = Vec::new();
    for it in 0..50_000 {
        sampler.sweep(it);
        if it % 5 == 0 {
            v0.push(sampler.state().bern.v[0]);
        }
    }
    let b = Beta::new(1.0, 2.5).unwrap();
    assert!(ks_test(&v0, |x| b.cdf(x.clamp(0.0, 1.0))) > 0.01);
}

#[test]
fn flat_k_random_walk_recovers_pk() {
    let ts = ar1(0.5, 32, 1);
    let prior = BernsteinDirichletConfig {
        k_max: 20,
        theta_k: 0.3,
        l: 2,
        ..BernsteinDirichletConfig::for_series_len(32)
    };
    let cfg = McmcConfig {
        k_update: KUpdate::RandomWalk { max_step: 4 },
        ..flat_cfg(8, 100_000)
    };
    let mut sampler = NpcSampler::new(&ts, 0, &prior, &cfg).unwrap();
    let mut counts = vec![0u64; 20];
    for it in 0..100_000 {
        sampler.sweep(it);
        if it % 10 == 0 {
            counts[sampler.state().bern.k - 1] += 1;
        }
    }
    let probs: Vec<f64> = prior.ln_pk_table().iter().map(|v| v.exp()).collect();
    let (_, _, p) = chi_square_test(&counts, &probs, 5.0);
    assert!(p > 0.01, "p = {p}");
}

#[test]
fn flat_ar_recovers_sigma2_prior() {
    let ts = ar1(0.5, 32, 1);
    let prior = ArPriorConfig {
        alpha_sigma: 2.0,
        beta_sigma: 1.5,
    };
    let cfg = flat_cfg(12, 10_000);
    let mut sampler = ArSampler::new(&ts, 1, &prior, &cfg).unwrap();
    let mut prec = Vec::new();
    for it in 0..10_000 {
        sampler.sweep(it);
        prec.push(1.0 / sampler.sigma2());
    }
    let g = Gamma::new(2.0, 1.5).unwrap();
    assert!(ks_test(&prec, |x| g.cdf(x)) > 0.01);
}

/// Histogram of `tau` draws against the full conditional normalized
/// numerically on a grid, with every other parameter held fixed.
fn tau_full_conditional_tv(update: TauUpdate, draws: usize, thin: usize) -> f64 {
    let ts = ar1(0.5, 8, 4);
    let prior = BernsteinDirichletConfig {
        alpha_tau: 2.0,
        beta_tau: 0.5,
        ..small_prior(8, 30)
    };
    let start = state(prior.l, 4, 0.7, vec![0.3], 0.6);
    let cfg = McmcConfig {
        tau_update: update,
        ..short_cfg(77, 10, 0)
    };
    let mut sampler = NpcSampler::with_state(&ts, &prior, &cfg, start.clone()).unwrap();
    let edges: Vec<f64> = (0..=60).map(|i| 0.005 * (1.25f64).powi(i)).collect();
    let mut hist = vec![0.0; edges.len() - 1];
    for i in 0..draws * thin {
        sampler.update_tau(false);
        if i % thin == 0 {
            let t = sampler.state().bern.tau;
            if let Some(b) = edges.windows(2).position(|e| e[0] <= t && t < e[1]) {
                hist[b] += 1.0;
            }
        }
    }
    // Bin probabilities of the unnormalized log posterior in tau, by
    // midpoint integration on a fine log-spaced grid within each bin.
    let mut target = vec![0.0; hist.len()];
    let logpost = |tau: f64| {
        let mut s = start.clone();
        s.bern.tau = tau;
        npc_full_conditional_logpost(&s, &ts, 1, &prior, true)
    };
    let reference = logpost(0.5);
    for (b, e) in edges.windows(2).enumerate() {
        let sub = 40;
        let h = (e[1] - e[0]) / sub as f64;
        target[b] = (0..sub)
            .map(|i| (logpost(e[0] + (i as f64 + 0.5) * h) - reference).exp() * h)
            .sum();
    }
    total_variation(&hist, &target)
}

#[test]
fn conjugate_tau_matches_grid_posterior() {
    let tv = tau_full_conditional_tv(TauUpdate::Conjugate, 100_000, 1);
    assert!(tv < 0.05, "TV = {tv}");
}

#[test]
fn metropolis_tau_matches_grid_posterior() {
    let tv = tau_full_conditional_tv(TauUpdate::Metropolis, 20_000, 10);
    assert!(tv < 0.05, "TV = {tv}");
}

#[test]
fn conjugate_sigma2_matches_grid_posterior() {
    let ts = ar1(0.5, 8, 4);
    let prior = ArPriorConfig {
        alpha_sigma: 0.001,
        beta_sigma: 0.001,
    };
    let rho = PacfVector::new(vec![0.4]).unwrap();
    let mut sampler = ArSampler::with_state(&ts, &prior, &short_cfg(5, 10, 0), rho.clone(), 1.0).unwrap();
    let edges: Vec<f64> = (0..=60).map(|i| 0.01 * (1.2f64).powi(i)).collect();
    let mut hist = vec![0.0; edges.len() - 1];
    for _ in 0..100_000 {
        sampler.update_sigma2();
        let s = sampler.sigma2();
        if let Some(b) = edges.windows(2).position(|e| e[0] <= s && s < e[1]) {
            hist[b] += 1.0;
        }
    }
    let ar = ArLikelihood::new(&rho);
    let logpost = |s2: f64| {
        let a = prior.alpha_sigma;
        let b = prior.beta_sigma;
        let prior_ln = a * b.ln() - ln_gamma(a) - (a + 1.0) * s2.ln() - b / s2;
        prior_ln + ar.log_density(ts.values(), s2)
    };
    let reference = logpost(1.0);
    let target: Vec<f64> = edges
        .windows(2)
        .map(|e| {
            let h = (e[1] - e[0]) / 40.0;
            (0..40)
                .map(|i| (logpost(e[0] + (i as f64 + 0.5) * h) - reference).exp() * h)
                .sum()
        })
        .collect();
    let tv = total_variation(&hist, &target);
    assert!(tv < 0.05, "TV = {tv}");
}

#[test]
fn enumerated_k_matches_exact_full_conditional() {
    let ts = ar1(0.5, 16, 9);
    let prior = small_prior(16, 12);
    let start = state(prior.l, 4, 0.9, vec![0.3], 0.6);
    let mut sampler = NpcSampler::with_state(&ts, &prior, &short_cfg(3, 10, 0), start.clone()).unwrap();
    let mut counts = vec![0u64; 12];
    for _ in 0..20_000 {
        sampler.update_k(false);
        counts[sampler.state().bern.k - 1] += 1;
    }
    let logp: Vec<f64> = (1..=12)
        .map(|k| {
            let mut s = start.clone();
            s.bern.k = k;
            npc_full_conditional_logpost(&s, &ts, 1, &prior, true)
        })
        .collect();
    let max = logp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logp.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    let probs: Vec<f64> = w.iter().map(|x| x / total).collect();
    let (_, _, p) = chi_square_test(&counts, &probs, 5.0);
    assert!(p > 0.01, "p = {p}");
}

#[test]
fn k_max_one_pins_k() {
    let ts = ar1(0.5, 32, 9);
    let prior = small_prior(32, 1);
    let out = run_npc(&ts, 1, &prior, &short_cfg(3, 200, 50)).unwrap();
    assert!(out.traces.iter().all(|t| t.k == Some(1)));
}

#[test]
fn invalid_inputs_are_rejected() {
    let ts = ar1(0.5, 8, 9);
    let prior = small_prior(8, 10);
    assert!(run_npc(&ts, 8, &prior, &short_cfg(1, 10, 0)).is_err());
    assert!(run_npc(&ts, 1, &prior, &short_cfg(1, 10, 10)).is_err());
    assert!(run_ar(&ts, 9, &ArPriorConfig::default(), &short_cfg(1, 10, 0)).is_err());
}
