//! Monte Carlo outage probability of the double-scattering channel
//! `H = Φ_R^{1/2} H_1 Φ_S^{1/2} H_2 Φ_T^{1/2}` and high-SNR slope fitting.
//!
//! Rates are in nats: at multiplexing gain `r` the target rate is
//! `r ln(SNR)`. Trials are split into fixed-size chunks, each drawing from
//! its own stream `(seed, chunk)`; counts therefore do not depend on the
//! worker count, and every SNR point of a sweep reuses the same channel
//! draws.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::closed_form::ChannelTriple;
use crate::error::{Error, Result};
use crate::randmat::{
    correlation_matrix, hermitian_eigenvalues, sample_complex_gaussian, ComplexMatrix,
    CorrelationMatrix, CorrelationSpec,
};
use crate::rng::{stream, stream_id, RngStream};

/// Trials per RNG stream.
pub const CHUNK_TRIALS: u64 = 8192;
/// Points with fewer outage events are left out of slope fits.
pub const MIN_OUTAGE_EVENTS: u64 = 20;
/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone)]
pub struct ChannelSpec {
    pub triple: ChannelTriple,
    pub phi_t: CorrelationMatrix,
    pub phi_s: CorrelationMatrix,
    pub phi_r: CorrelationMatrix,
    pub c_norm: f64,
}

impl ChannelSpec {
    /// Uses [`default_normalization`].
    pub fn new(
        triple: ChannelTriple,
        phi_t: CorrelationMatrix,
        phi_s: CorrelationMatrix,
        phi_r: CorrelationMatrix,
    ) -> Result<Self> {
        let c = default_normalization(triple, [&phi_t, &phi_s, &phi_r]);
        Self::with_normalization(triple, phi_t, phi_s, phi_r, c)
    }

    pub fn with_normalization(
        triple: ChannelTriple,
        phi_t: CorrelationMatrix,
        phi_s: CorrelationMatrix,
        phi_r: CorrelationMatrix,
        c_norm: f64,
    ) -> Result<Self> {
        let dims = [
            ("transmit", phi_t.dim, triple.n_t),
            ("scatterer", phi_s.dim, triple.n_s),
            ("receive", phi_r.dim, triple.n_r),
        ];
        for (node, got, want) in dims {
            if got != want as usize {
                return Err(Error::InvalidInput(format!(
                    "{node} correlation is {got}x{got}, triple needs {want}x{want}"
                )));
            }
        }
        if !(c_norm > 0.0 && c_norm.is_finite()) {
            return Err(Error::InvalidInput(format!("normalization C={c_norm} must be positive")));
        }
        Ok(Self {
            triple,
            phi_t,
            phi_s,
            phi_r,
            c_norm,
        })
    }

    /// Same correlation model at all three nodes.
    pub fn uniform(triple: ChannelTriple, corr: &CorrelationSpec) -> Result<Self> {
        Self::new(
            triple,
            correlation_matrix(corr, triple.n_t as usize)?,
            correlation_matrix(corr, triple.n_s as usize)?,
            correlation_matrix(corr, triple.n_r as usize)?,
        )
    }

    pub fn identity(triple: ChannelTriple) -> Self {
        Self::uniform(triple, &CorrelationSpec::Identity).expect("identity spec is valid")
    }
}

/// `C = n_R / (tr Φ_T · tr Φ_S · tr Φ_R)`, so that SNR is the average
/// signal-to-noise ratio per receive antenna.
pub fn default_normalization(triple: ChannelTriple, phis: [&CorrelationMatrix; 3]) -> f64 {
    let [t, s, r] = phis;
    triple.n_r as f64 / (t.trace() * s.trace() * r.trace())
}

pub fn draw_channel(spec: &ChannelSpec, rng: &mut RngStream) -> ComplexMatrix {
    let (nt, ns, nr) = (
        spec.triple.n_t as usize,
        spec.triple.n_s as usize,
        spec.triple.n_r as usize,
    );
    let h1 = sample_complex_gaussian(nr, ns, rng);
    let h2 = sample_complex_gaussian(ns, nt, rng);
    let apply = |phi: &CorrelationMatrix, m: ComplexMatrix, left: bool| {
        if phi.is_identity() {
            m
        } else if left {
            &phi.sqrt * m
        } else {
            m * &phi.sqrt
        }
    };
    let left = apply(&spec.phi_r, h1, true);
    let left = apply(&spec.phi_s, left, false);
    let right = apply(&spec.phi_t, h2, false);
    left * right
}

fn gram_smaller(h: &ComplexMatrix) -> ComplexMatrix {
    if h.nrows() <= h.ncols() {
        h * h.adjoint()
    } else {
        h.adjoint() * h
    }
}

/// `ln det(I + snr · c · H H^H)` via a Cholesky factorization.
pub fn mutual_information_nats(h: &ComplexMatrix, snr: f64, c_norm: f64) -> Result<f64> {
    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidInput("channel matrix has non-finite entries".into()));
    }
    if !(snr > 0.0) {
        return Err(Error::Domain(format!("snr={snr} must be positive")));
    }
    let g = gram_smaller(h);
    let dim = g.nrows();
    let scale = num_complex::Complex64::new(snr * c_norm, 0.0);
    let a = DMatrix::identity(dim, dim) + g * scale;
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::Internal("I + snr H H^H is not positive definite".into()))?;
    Ok(2.0 * chol.l().diagonal().iter().map(|d| d.re.ln()).sum::<f64>())
}

fn mi_from_gains(gains: &[f64], snr: f64, c_norm: f64) -> f64 {
    gains.iter().map(|g| (snr * c_norm * g).ln_1p()).sum()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub spec: ChannelSpec,
    pub snr_grid_db: Vec<f64>,
    pub r: f64,
    pub trials: u64,
    pub seed: u64,
    pub workers: usize,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidInput("trials must be >= 1".into()));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::InvalidInput("SNR grid is empty".into()));
        }
        if self.snr_grid_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("SNR grid must be strictly ascending".into()));
        }
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return Err(Error::InvalidInput(format!("multiplexing gain r={} must be >= 0", self.r)));
        }
        if self.workers == 0 {
            return Err(Error::InvalidInput("workers must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutageEstimate {
    pub snr_db: f64,
    pub rate_nats: f64,
    pub trials: u64,
    pub outage_count: u64,
    pub p_out: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl OutageEstimate {
    pub fn from_counts(snr_db: f64, rate_nats: f64, outage_count: u64, trials: u64) -> Self {
        let p = outage_count as f64 / trials as f64;
        let (ci_low, ci_high) = wilson_interval(outage_count, trials);
        Self {
            snr_db,
            rate_nats,
            trials,
            outage_count,
            p_out: p,
            ci_low,
            ci_high,
        }
    }
}

/// 95% Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0).min(p), (centre + half).min(1.0).max(p))
}

fn count_chunk(cfg: &SimConfig, snrs: &[f64], thresholds: &[f64], chunk: u64) -> Vec<u64> {
    let start = chunk * CHUNK_TRIALS;
    let len = CHUNK_TRIALS.min(cfg.trials - start);
    let mut rng = stream(cfg.seed, stream_id(0, chunk as u32));
    let mut counts = vec![0u64; snrs.len()];
    let mut gains = Vec::new();
    for _ in 0..len {
        let h = draw_channel(&cfg.spec, &mut rng);
        gains.clear();
        if h.nrows() == 1 || h.ncols() == 1 {
            gains.push(h.iter().map(|z| z.norm_sqr()).sum());
        } else {
            gains.extend(hermitian_eigenvalues(&gram_smaller(&h)).values);
        }
        for (k, (&snr, &thr)) in snrs.iter().zip(thresholds).enumerate() {
            if mi_from_gains(&gains, snr, cfg.spec.c_norm) <= thr {
                counts[k] += 1;
            }
        }
    }
    counts
}

fn count_outages(cfg: &SimConfig, snr_db: &[f64]) -> Result<Vec<OutageEstimate>> {
    cfg.validate()?;
    let snrs: Vec<f64> = snr_db.iter().map(|&d| db_to_linear(d)).collect();
    let thresholds: Vec<f64> = snrs.iter().map(|s| cfg.r * s.ln()).collect();
    let chunks = cfg.trials.div_ceil(CHUNK_TRIALS);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    let per_chunk: Vec<Vec<u64>> = pool.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| count_chunk(cfg, &snrs, &thresholds, c))
            .collect()
    });
    let mut totals = vec![0u64; snrs.len()];
    for counts in &per_chunk {
        for (t, c) in totals.iter_mut().zip(counts) {
            *t += c;
        }
    }
    Ok(snr_db
        .iter()
        .zip(&thresholds)
        .zip(&totals)
        .map(|((&db, &rate), &count)| OutageEstimate::from_counts(db, rate, count, cfg.trials))
        .collect())
}

/// Outage estimate at one SNR point. Identical to the corresponding entry of
/// [`run_sweep`] for the same configuration.
pub fn estimate_outage(cfg: &SimConfig, snr_db: f64) -> Result<OutageEstimate> {
    Ok(count_outages(cfg, &[snr_db])?.remove(0))
}

/// Outage estimates over the whole configured SNR grid.
pub fn run_sweep(cfg: &SimConfig) -> Result<Vec<OutageEstimate>> {
    count_outages(cfg, &cfg.snr_grid_db)
}

pub fn estimates_to_csv(estimates: &[OutageEstimate]) -> String {
    let mut out = String::from("snr_db,rate_nats,trials,outages,p_out,ci_low,ci_high\n");
    for e in estimates {
        out.push_str(&format!(
            "{},{:.12e},{},{},{:.12e},{:.12e},{:.12e}\n",
            e.snr_db, e.rate_nats, e.trials, e.outage_count, e.p_out, e.ci_low, e.ci_high
        ));
    }
    out
}

/// Least-squares fit of `-log10 p_out` against `log10 SNR`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    /// Larger of the residual-based and the binomial-propagated standard error.
    pub stderr: f64,
    pub intercept: f64,
    pub points_used: usize,
    pub residual_stderr: f64,
    pub sampling_stderr: f64,
}

pub fn fit_slope(estimates: &[OutageEstimate]) -> Result<SlopeFit> {
    let usable: Vec<&OutageEstimate> = estimates
        .iter()
        .filter(|e| e.outage_count >= MIN_OUTAGE_EVENTS && e.p_out > 0.0)
        .collect();
    if usable.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} of {} SNR points have at least {MIN_OUTAGE_EVENTS} outage events; need 2",
            usable.len(),
            estimates.len()
        )));
    }
    let x: Vec<f64> = usable.iter().map(|e| e.snr_db / 10.0).collect();
    let y: Vec<f64> = usable.iter().map(|e| -e.p_out.log10()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all usable points share one SNR".into()));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;

    let residual_stderr = if usable.len() > 2 {
        let ssr: f64 = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (b - intercept - slope * a).powi(2))
            .sum();
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    // var(log10 p̂) ≈ (1 - p) / (N p ln²10)
    let ln10 = std::f64::consts::LN_10;
    let sampling_var: f64 = usable
        .iter()
        .zip(&x)
        .map(|(e, xi)| {
            let w = (xi - mx) / sxx;
            let var = (1.0 - e.p_out) / (e.trials as f64 * e.p_out * ln10 * ln10);
            w * w * var
        })
        .sum();
    let sampling_stderr = sampling_var.sqrt();
    Ok(SlopeFit {
        slope,
        stderr: residual_stderr.max(sampling_stderr),
        intercept,
        points_used: usable.len(),
        residual_stderr,
        sampling_stderr,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct InvarianceComparison {
    pub rho: f64,
    pub identity: SlopeFit,
    pub correlated: SlopeFit,
    pub identity_points: Vec<OutageEstimate>,
    pub correlated_points: Vec<OutageEstimate>,
    /// `sqrt(se_1^2 + se_2^2)`.
    pub combined_stderr: f64,
    /// `|slope_1 - slope_2| <= 2 · combined_stderr`.
    pub agree: bool,
}

/// Runs the same outage experiment with identity correlations and with
/// exponential(`rho`) correlations at all three nodes.
pub fn correlation_invariance_experiment(
    triple: ChannelTriple,
    rho: f64,
    r: f64,
    snr_grid_db: &[f64],
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<InvarianceComparison> {
    if !(0.0..=0.9).contains(&rho) {
        return Err(Error::InvalidInput(format!("rho={rho} outside [0, 0.9]")));
    }
    let run = |spec: ChannelSpec| -> Result<(SlopeFit, Vec<OutageEstimate>)> {
        let cfg = SimConfig {
            spec,
            snr_grid_db: snr_grid_db.to_vec(),
            r,
            trials,
            seed,
            workers,
        };
        let points = run_sweep(&cfg)?;
        Ok((fit_slope(&points)?, points))
    };
    let (identity, identity_points) = run(ChannelSpec::identity(triple))?;
    let (correlated, correlated_points) =
        run(ChannelSpec::uniform(triple, &CorrelationSpec::Exponential(rho))?)?;
    let combined_stderr = identity.stderr.hypot(correlated.stderr);
    let agree = (identity.slope - correlated.slope).abs() <= 2.0 * combined_stderr;
    Ok(InvarianceComparison {
        rho,
        identity,
        correlated,
        identity_points,
        correlated_points,
        combined_stderr,
        agree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn t(a: u32, b: u32, c: u32) -> ChannelTriple {
        ChannelTriple::new(a, b, c).unwrap()
    }

    #[test]
    fn normalization() {
        let spec = ChannelSpec::identity(t(3, 2, 4));
        assert!((spec.c_norm - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(ChannelSpec::identity(t(1, 1, 1)).c_norm, 1.0);
        let corr = ChannelSpec::uniform(t(3, 2, 4), &CorrelationSpec::Exponential(0.7)).unwrap();
        assert!((corr.c_norm - spec.c_norm).abs() < 1e-15);
    }

    #[test]
    fn spec_validation() {
        let c2 = CorrelationMatrix::identity(2);
        let c1 = CorrelationMatrix::identity(1);
        assert!(ChannelSpec::new(t(2, 2, 1), c2.clone(), c2.clone(), c2.clone()).is_err());
        assert!(ChannelSpec::with_normalization(t(2, 2, 1), c2.clone(), c2, c1, 0.0).is_err());
    }

    #[test]
    fn mutual_information_examples() {
        let z = ComplexMatrix::zeros(2, 2);
        assert_eq!(mutual_information_nats(&z, 10.0, 1.0).unwrap(), 0.0);
        let i = ComplexMatrix::identity(1, 1);
        assert!((mutual_information_nats(&i, 1.0, 1.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        let (a, b, rho) = (0.7, 1.9, 3.5);
        let d = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(a, 0.0),
            Complex64::new(0.0, b),
        ]));
        let want = (1.0 + rho * a * a).ln() + (1.0 + rho * b * b).ln();
        assert!((mutual_information_nats(&d, rho, 1.0).unwrap() - want).abs() < 1e-13);
        let mut bad = ComplexMatrix::identity(1, 1);
        bad[(0, 0)] = Complex64::new(f64::NAN, 0.0);
        assert!(mutual_information_nats(&bad, 1.0, 1.0).is_err());
    }

    #[test]
    fn eigen_route_matches_cholesky_route() {
        let spec = ChannelSpec::uniform(t(3, 2, 4), &CorrelationSpec::Exponential(0.5)).unwrap();
        let mut rng = stream(11, 0);
        for _ in 0..50 {
            let h = draw_channel(&spec, &mut rng);
            let gains = hermitian_eigenvalues(&gram_smaller(&h)).values;
            for snr in [1.0, 100.0, 1e4] {
                let a = mutual_information_nats(&h, snr, spec.c_norm).unwrap();
                let b = mi_from_gains(&gains, snr, spec.c_norm);
                assert!((a - b).abs() < 1e-10 * a.max(1.0));
            }
        }
    }

    #[test]
    fn channel_energy_and_shape() {
        let spec = ChannelSpec::identity(t(2, 3, 2));
        let mut rng = stream(12, 0);
        let h = draw_channel(&spec, &mut rng);
        assert_eq!((h.nrows(), h.ncols()), (2, 2));
        let n = 40_000;
        let mean: f64 = (0..n).map(|_| draw_channel(&spec, &mut rng).norm_squared()).sum::<f64>() / n as f64;
        // E||H||_F^2 = n_T n_S n_R = 12
        assert!((mean - 12.0).abs() < 0.3, "{mean}");
        let a = draw_channel(&spec, &mut stream(3, 3));
        let b = draw_channel(&spec, &mut stream(3, 3));
        assert_eq!(a, b);
    }

    #[test]
    fn wilson_brackets_estimate() {
        for (k, n) in [(0, 100), (1, 100), (50, 100), (100, 100), (20, 1_000_000)] {
            let (lo, hi) = wilson_interval(k, n);
            let p = k as f64 / n as f64;
            assert!(lo <= p && p <= hi, "{k}/{n}: {lo} {p} {hi}");
        }
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo - 0.4038).abs() < 1e-3 && (hi - 0.5962).abs() < 1e-3);
    }

    #[test]
    fn zero_rate_never_outages() {
        let cfg = SimConfig {
            spec: ChannelSpec::identity(t(1, 1, 1)),
            snr_grid_db: vec![0.0, 10.0],
            r: 0.0,
            trials: 10_000,
            seed: 1,
            workers: 2,
        };
        assert!(run_sweep(&cfg).unwrap().iter().all(|e| e.outage_count == 0));
    }

    #[test]
    fn config_validation() {
        let mut cfg = SimConfig {
            spec: ChannelSpec::identity(t(1, 1, 1)),
            snr_grid_db: vec![0.0, 10.0],
            r: 0.5,
            trials: 0,
            seed: 1,
            workers: 1,
        };
        assert!(run_sweep(&cfg).is_err());
        cfg.trials = 10;
        cfg.snr_grid_db = vec![10.0, 10.0];
        assert!(run_sweep(&cfg).is_err());
    }

    #[test]
    fn exact_power_law_slope() {
        let est: Vec<OutageEstimate> = [10.0, 20.0, 30.0, 40.0]
            .iter()
            .map(|&db| {
                let p = db_to_linear(db).powi(-2);
                let trials = 10_000_000_000u64;
                let mut e = OutageEstimate::from_counts(db, 0.0, (p * trials as f64).round() as u64, trials);
                e.p_out = p;
                e
            })
            .collect();
        let fit = fit_slope(&est).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12, "{fit:?}");
        assert_eq!(fit.points_used, 4);
    }

    #[test]
    fn slope_needs_two_points() {
        let est = vec![
            OutageEstimate::from_counts(10.0, 0.0, 500, 1000),
            OutageEstimate::from_counts(20.0, 0.0, 5, 1000),
        ];
        assert!(matches!(fit_slope(&est), Err(Error::InsufficientData(_))));
    }
}
