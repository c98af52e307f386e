use dmt::closed_form::ChannelTriple;
use dmt::outage::{draw_channel, estimate_outage, run_sweep, ChannelSpec, SimConfig};
use dmt::quadrature::integrate;
use dmt::randmat::{ks_critical, ks_statistic, CorrelationSpec};
use dmt::rng::stream;
use rand::RngExt;

fn t(a: u32, b: u32, c: u32) -> ChannelTriple {
    ChannelTriple::new(a, b, c).unwrap()
}

fn cfg(triple: ChannelTriple, grid: Vec<f64>, r: f64, trials: u64, seed: u64, workers: usize) -> SimConfig {
    SimConfig {
        spec: ChannelSpec::identity(triple),
        snr_grid_db: grid,
        r,
        trials,
        seed,
        workers,
    }
}

/// P{E1·E2 <= x} for independent unit exponentials.
fn product_exponential_cdf(x: f64) -> f64 {
    // ∫ e^{-u} (1 - e^{-x/u}) du with u = e^s below 1 so the scale-x feature is resolved
    let g = |s: f64| {
        let u = s.exp();
        u * (-u).exp() * -(-x / u).exp_m1()
    };
    let lo = (x.ln() - 40.0).min(-40.0);
    integrate(g, lo, 0.0, 800, 10) + integrate(|u: f64| (-u).exp() * -(-x / u).exp_m1(), 1.0, 60.0, 400, 10)
}

#[test]
fn scalar_outage_matches_quadrature() {
    let snr: f64 = 100.0;
    let x = (snr.powf(0.5) - 1.0) / snr;
    let p = product_exponential_cdf(x);
    let est = estimate_outage(&cfg(t(1, 1, 1), vec![20.0], 0.5, 200_000, 5, 4), 20.0).unwrap();
    assert!(est.ci_low <= p && p <= est.ci_high, "oracle {p} vs {est:?}");
}

#[test]
fn quadrature_oracle_sanity() {
    // small-x expansion: x(ln(1/x) + 1 - 2γ) + O(x² ln x)
    let x: f64 = 1e-6;
    let approx = x * ((1.0 / x).ln() + 1.0 - 2.0 * 0.577_215_664_901_532_9);
    assert!((product_exponential_cdf(x) - approx).abs() < 1e-9);
    assert!((product_exponential_cdf(200.0) - 1.0).abs() < 1e-9);
}

#[test]
fn scalar_gain_is_product_of_exponentials() {
    let spec = ChannelSpec::identity(t(1, 1, 1));
    let mut rng = stream(21, 0);
    let n = 20_000;
    let gains: Vec<f64> = (0..n).map(|_| draw_channel(&spec, &mut rng)[(0, 0)].norm_sqr()).collect();
    let mut other = stream(21, 1);
    let reference: Vec<f64> = (0..n)
        .map(|_| {
            let a: f64 = other.random();
            let b: f64 = other.random();
            (-(1.0 - a).ln()) * (-(1.0 - b).ln())
        })
        .collect();
    assert!(ks_statistic(&gains, &reference) < ks_critical(0.001, n, n));
}

#[test]
fn counts_independent_of_workers_and_grid() {
    let base = cfg(t(2, 3, 2), vec![0.0, 5.0, 10.0], 1.0, 30_000, 99, 1);
    let a = run_sweep(&base).unwrap();
    let b = run_sweep(&SimConfig { workers: 7, ..base.clone() }).unwrap();
    assert_eq!(a, b);
    let single = estimate_outage(&base, 5.0).unwrap();
    assert_eq!(single, a[1]);
    let c = run_sweep(&SimConfig { seed: 100, ..base }).unwrap();
    assert_ne!(a, c);
}

// at fixed r the target rate grows with SNR; below ~10 dB p_out still rises
#[test]
fn outage_non_increasing_in_snr() {
    let est = run_sweep(&cfg(t(2, 2, 2), vec![10.0, 15.0, 20.0, 25.0], 1.0, 50_000, 3, 4)).unwrap();
    assert!(est.windows(2).all(|w| w[1].p_out <= w[0].ci_high), "{est:?}");
}

#[test]
fn identity_and_zero_rho_agree_exactly() {
    let triple = t(2, 2, 2);
    let id = cfg(triple, vec![5.0, 10.0], 1.0, 20_000, 8, 2);
    let zero = SimConfig {
        spec: ChannelSpec::uniform(triple, &CorrelationSpec::Exponential(0.0)).unwrap(),
        ..id.clone()
    };
    let a = run_sweep(&id).unwrap();
    let b = run_sweep(&zero).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!(x.outage_count.abs_diff(y.outage_count) <= 2, "{x:?} {y:?}");
    }
}
