//! Numerical checks of the random-matrix lemmas behind the exponent program.
//!
//! The singular-value inequalities are finite-matrix statements and are
//! checked directly in double precision. The determinant asymptotics are
//! checked by evaluating the determinant in extended precision along an SNR
//! grid and fitting its exponent over the top half of the grid.
//!
//! Conventions: `μ_i = SNR^{-β_i}` (covariance eigenvalues, descending),
//! `λ_j = SNR^{-α_j}` (Wishart eigenvalues, descending).

use astro_float::{BigFloat, Consts, RoundingMode};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::randmat::{sample_complex_gaussian, singular_values, ComplexMatrix};
use crate::rng::{stream, stream_id};

const RM: RoundingMode = RoundingMode::ToEven;
pub const DEFAULT_DIGITS: u32 = 60;
/// Digits kept in reserve beyond the estimated need.
pub const GUARD_DIGITS: u32 = 20;
pub const SV_SLACK: f64 = 1e-9;
pub const MAX_CONDITION: f64 = 1e8;
pub const EXPONENT_TOL: f64 = 0.05;
const LOG2_10: f64 = std::f64::consts::LOG2_10;

/// Extended-precision scratch context.
pub struct Extended {
    digits: u32,
    p: usize,
    cc: Consts,
}

impl Extended {
    pub fn new(digits: u32) -> Result<Self> {
        if digits < 16 {
            return Err(Error::InvalidInput(format!("digits={digits} below double precision")));
        }
        let cc = Consts::new().map_err(|e| Error::Internal(format!("astro-float: {e:?}")))?;
        Ok(Self {
            digits,
            p: (digits as f64 * LOG2_10).ceil() as usize,
            cc,
        })
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    fn num(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, self.p)
    }
    fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, self.p, RM)
    }
    fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, self.p, RM)
    }
    fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, self.p, RM)
    }
    fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, self.p, RM)
    }
    fn exp(&mut self, a: &BigFloat) -> BigFloat {
        a.exp(self.p, RM, &mut self.cc)
    }
    fn ln(&mut self, a: &BigFloat) -> BigFloat {
        a.ln(self.p, RM, &mut self.cc)
    }
    fn powi(&self, a: &BigFloat, k: i32) -> BigFloat {
        let v = a.powi(k.unsigned_abs() as usize, self.p, RM);
        if k < 0 {
            v.reciprocal(self.p, RM)
        } else {
            v
        }
    }
    /// `SNR^e` given `ln SNR`.
    fn snr_pow(&mut self, ln_snr: &BigFloat, e: f64) -> BigFloat {
        let x = self.mul(ln_snr, &self.num(e));
        self.exp(&x)
    }
    fn ln_snr(&mut self, snr: f64) -> BigFloat {
        // exact decade powers keep 10^12 from picking up binary error
        let d = snr.log10();
        if (d - d.round()).abs() < 1e-12 || (2.0 * d - (2.0 * d).round()).abs() < 1e-12 {
            let ten = self.num(10.0);
            let ln10 = self.ln(&ten);
            self.mul(&ln10, &self.num(d))
        } else {
            let s = self.num(snr);
            self.ln(&s)
        }
    }
    /// `ln|x|` as f64; `None` for zero.
    fn ln_abs(&mut self, x: &BigFloat) -> Option<f64> {
        if x.is_zero() {
            return None;
        }
        let a = x.abs();
        Some(to_f64(&self.ln(&a)))
    }
}

fn to_f64(x: &BigFloat) -> f64 {
    x.to_string().replace(".e", "e").parse().unwrap_or(f64::NAN)
}

fn permutations(n: usize) -> Vec<(Vec<usize>, bool)> {
    fn go(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for k in 0..rest.len() {
            let v = rest.remove(k);
            prefix.push(v);
            go(prefix, rest, out);
            prefix.pop();
            rest.insert(k, v);
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut (0..n).collect(), &mut out);
    out.into_iter()
        .map(|p| {
            let inversions = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .filter(|&(i, j)| p[i] > p[j])
                .count();
            (p, inversions % 2 == 1)
        })
        .collect()
}

/// Determinant and the sum of absolute Leibniz terms.
struct DetEval {
    value: BigFloat,
    magnitude: BigFloat,
}

fn leibniz(x: &Extended, m: &[Vec<BigFloat>]) -> DetEval {
    let n = m.len();
    let mut value = x.num(0.0);
    let mut magnitude = x.num(0.0);
    for (perm, odd) in permutations(n) {
        let mut term = x.num(1.0);
        for (i, &j) in perm.iter().enumerate() {
            term = x.mul(&term, &m[i][j]);
        }
        magnitude = x.add(&magnitude, &term.abs());
        value = if odd { x.sub(&value, &term) } else { x.add(&value, &term) };
    }
    DetEval { value, magnitude }
}

/// Decimal digits lost to cancellation.
fn cancellation_digits(x: &mut Extended, d: &DetEval) -> Option<f64> {
    let mag = x.ln_abs(&d.magnitude)?;
    let val = x.ln_abs(&d.value)?;
    Some(((mag - val) / std::f64::consts::LN_10).max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentPair {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl ExponentPair {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        for (name, v) in [("alpha", &alpha), ("beta", &beta)] {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} has non-finite entries")));
            }
            if v.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::InvalidInput(format!("{name} must be non-decreasing")));
            }
        }
        if beta.iter().any(|&b| b < 0.0) {
            return Err(Error::InvalidInput("beta must be >= 0".into()));
        }
        if alpha.iter().zip(&beta).any(|(a, b)| a < b) {
            return Err(Error::InvalidInput("need alpha_i >= beta_i".into()));
        }
        Ok(Self { alpha, beta })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticFit {
    pub snr_points: Vec<f64>,
    pub measured_exponent: f64,
    pub predicted_exponent: f64,
    /// measured − predicted
    pub residual: f64,
    pub precision_digits: u32,
    pub required_digits: u32,
}

impl AsymptoticFit {
    pub fn passes(&self) -> bool {
        self.residual.abs() <= EXPONENT_TOL
    }
}

/// `n` log-spaced SNR values from `10^lo` to `10^hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| 10f64.powf(lo + (hi - lo) * k as f64 / (n - 1) as f64))
        .collect()
}

fn check_grid(snr: &[f64], min_decades: f64) -> Result<()> {
    if snr.len() < 4 {
        return Err(Error::InvalidInput("SNR grid needs at least 4 points".into()));
    }
    if snr.iter().any(|&s| !(s > 0.0 && s.is_finite())) || snr.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("SNR grid must be positive and strictly ascending".into()));
    }
    let span = snr[snr.len() - 1].log10() - snr[0].log10();
    if span < min_decades {
        return Err(Error::InvalidInput(format!(
            "SNR grid spans {span:.1} decades, need {min_decades}"
        )));
    }
    Ok(())
}

/// Least-squares slope of `y` on `x` over the upper half of the points.
fn top_half_slope(x: &[f64], y: &[f64]) -> f64 {
    let k = x.len() / 2;
    let (x, y) = (&x[k..], &y[k..]);
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn precision_guard(x: &Extended, resolution: f64, cancellation: f64) -> Result<u32> {
    let required = (resolution + cancellation).ceil() as u32 + GUARD_DIGITS;
    if required > x.digits() {
        return Err(Error::Precision(format!(
            "needs {required} significant digits (resolution {resolution:.1}, cancellation \
             {cancellation:.1}, guard {GUARD_DIGITS}); have {}. Rerun with --digits {required} or more",
            x.digits()
        )));
    }
    Ok(required)
}

fn pos(v: f64) -> f64 {
    v.max(0.0)
}

/// Fits the exponent of `f(snr)` over the grid, enforcing the precision contract.
fn fit_quantity<F>(
    x: &mut Extended,
    snr: &[f64],
    resolution_per_decade: f64,
    predicted: f64,
    mut f: F,
) -> Result<AsymptoticFit>
where
    F: FnMut(&mut Extended, &BigFloat) -> Result<(BigFloat, f64)>,
{
    let mut xs = Vec::with_capacity(snr.len());
    let mut ys = Vec::with_capacity(snr.len());
    let mut worst_cancel: f64 = 0.0;
    for &s in snr {
        let ln_s = x.ln_snr(s);
        let (q, cancel) = f(x, &ln_s)?;
        worst_cancel = worst_cancel.max(cancel);
        let lq = x.ln_abs(&q).ok_or_else(|| {
            Error::Precision(format!(
                "determinant cancelled to zero at SNR={s:e} with {} digits",
                x.digits()
            ))
        })?;
        xs.push(s.ln());
        ys.push(lq);
    }
    let resolution = resolution_per_decade * snr[snr.len() - 1].log10();
    let required = precision_guard(x, resolution, worst_cancel)?;
    let measured = top_half_slope(&xs, &ys);
    Ok(AsymptoticFit {
        snr_points: snr.to_vec(),
        measured_exponent: measured,
        predicted_exponent: predicted,
        residual: measured - predicted,
        precision_digits: x.digits(),
        required_digits: required,
    })
}

/// `det[exp(-SNR^{-(α_j-β_i)})]` as a function of `ln SNR`, with its cancellation.
fn lemma1_det(x: &mut Extended, alpha: &[f64], beta: &[f64], ln_s: &BigFloat) -> Result<(BigFloat, f64)> {
    let l = alpha.len();
    let mut m = vec![Vec::with_capacity(l); l];
    for (i, row) in m.iter_mut().enumerate() {
        for a in alpha {
            let v = x.snr_pow(ln_s, -(a - beta[i]));
            row.push(x.exp(&v.neg()));
        }
    }
    let d = leibniz(x, &m);
    let c = cancellation_digits(x, &d).unwrap_or(x.digits() as f64);
    Ok((d.value, c))
}

/// Predicted SNR exponent of the exp-determinant: `-Σ_{i<j} (α_i-β_j)^+`.
pub fn lemma1_prediction(ep: &ExponentPair) -> f64 {
    let l = ep.alpha.len();
    -(0..l)
        .flat_map(|i| (i + 1..l).map(move |j| (i, j)))
        .map(|(i, j)| pos(ep.alpha[i] - ep.beta[j]))
        .sum::<f64>()
}

pub fn check_lemma1_exponent(ep: &ExponentPair, snr_grid: &[f64], digits: u32) -> Result<AsymptoticFit> {
    let l = ep.alpha.len();
    if l == 0 || l > 3 || ep.beta.len() != l {
        return Err(Error::InvalidInput(format!(
            "need equal alpha/beta lengths in 1..=3, got {} and {}",
            l,
            ep.beta.len()
        )));
    }
    if ep.alpha.iter().zip(&ep.beta).any(|(a, b)| a <= b) {
        return Err(Error::InvalidInput("need strict alpha_i > beta_i".into()));
    }
    check_grid(snr_grid, 8.0)?;
    let mut x = Extended::new(digits)?;
    let per_decade = ep
        .alpha
        .iter()
        .flat_map(|a| ep.beta.iter().map(move |b| pos(a - b)))
        .fold(0.0, f64::max);
    let (alpha, beta) = (ep.alpha.clone(), ep.beta.clone());
    fit_quantity(&mut x, snr_grid, per_decade, lemma1_prediction(ep), |x, ln_s| {
        lemma1_det(x, &alpha, &beta, ln_s)
    })
}

/// The `rows × rows` matrix with power columns `1, μ, …, μ^{k-1}` followed by
/// `μ^{k-1} e^{-λ_j/μ}` columns, `k = rows − len(λ)`.
fn xi_rows(x: &mut Extended, mu: &[BigFloat], lambda: &[BigFloat]) -> Vec<Vec<BigFloat>> {
    let k = mu.len() - lambda.len();
    mu.iter()
        .map(|m| {
            let mut row: Vec<BigFloat> = (0..k).map(|e| x.powi(m, e as i32)).collect();
            let scale = x.powi(m, k as i32 - 1);
            for l in lambda {
                let r = x.div(l, m);
                let e = x.exp(&r.neg());
                row.push(x.mul(&scale, &e));
            }
            row
        })
        .collect()
}

fn vandermonde(x: &Extended, mu: &[BigFloat]) -> BigFloat {
    let mut v = x.num(1.0);
    for i in 0..mu.len() {
        for j in i + 1..mu.len() {
            v = x.mul(&v, &x.sub(&mu[i], &mu[j]));
        }
    }
    v
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma2Fit {
    pub dims: (u32, u32, u32),
    /// `|Det Ξ| · Π μ_i^{m-l+1} · Π_{i<j} (μ_i − μ_j)` against the closed
    /// three-factor exponent (power terms in the covariance exponents).
    pub weighted: AsymptoticFit,
    /// Bare `|Det Ξ|` against the reduced expression
    /// `Det[e^{-λ_j/μ_i}]_n Π_{i≤n+1} μ_i^{l-n-1} Π_{i≥n+2} μ_i^{l-i} Π (1 − e^{-λ_i/μ_j})`.
    pub bare: AsymptoticFit,
}

impl Lemma2Fit {
    pub fn passes(&self) -> bool {
        self.weighted.passes() && self.bare.passes()
    }
}

/// Exponent of the weighted determinant for `β` (length l) and `α` (length n).
pub fn lemma2_prediction(m: u32, n: u32, l: u32, beta: &[f64], alpha: &[f64]) -> f64 {
    let (m, n, l) = (m as i64, n as i64, l as i64);
    let mut e = 0.0;
    for i in 1..=l {
        let power = if i <= n + 1 { l + m - n - i } else { l + m + 1 - 2 * i };
        e += power as f64 * beta[i as usize - 1];
    }
    for i in 0..n as usize {
        for j in i + 1..l as usize {
            e += pos(alpha[i] - beta[j]);
        }
    }
    -e
}

/// Exponent of the bare determinant, from the reduced expression.
pub fn lemma2_bare_prediction(n: u32, l: u32, beta: &[f64], alpha: &[f64]) -> f64 {
    let (n, l) = (n as usize, l as usize);
    let mut e = 0.0;
    for i in 1..=l {
        let power = if i <= n + 1 { l - n - 1 } else { l - i };
        e += power as f64 * beta[i - 1];
    }
    for i in 0..n {
        for j in i + 1..l {
            e += pos(alpha[i] - beta[j]);
        }
    }
    -e
}

pub fn check_lemma2_exponent(
    mu_exponents: &[f64],
    lambda_exponents: &[f64],
    dims: (u32, u32, u32),
    snr_grid: &[f64],
    digits: u32,
) -> Result<Lemma2Fit> {
    let (m, n, l) = dims;
    if !(n < l && l <= m && l <= 3 && n >= 1) {
        return Err(Error::InvalidInput(format!("need 1 <= n < l <= m, l <= 3; got {dims:?}")));
    }
    let (beta, alpha) = (mu_exponents, lambda_exponents);
    if beta.len() != l as usize || alpha.len() != n as usize {
        return Err(Error::InvalidInput(format!(
            "need {l} covariance and {n} eigenvalue exponents, got {} and {}",
            beta.len(),
            alpha.len()
        )));
    }
    for (name, v) in [("covariance", beta), ("eigenvalue", alpha)] {
        if v.windows(2).any(|w| w[1] <= w[0]) || v.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "{name} exponents must be non-negative and strictly increasing"
            )));
        }
    }
    if alpha.iter().zip(beta).any(|(a, b)| a <= b) {
        return Err(Error::InvalidInput("need alpha_i > beta_i for i <= n".into()));
    }
    check_grid(snr_grid, 8.0)?;

    let per_decade = alpha
        .iter()
        .flat_map(|a| beta.iter().map(move |b| pos(a - b)))
        .fold(0.0, f64::max);
    let eval = |x: &mut Extended, ln_s: &BigFloat, weighted: bool| -> Result<(BigFloat, f64)> {
        let mu: Vec<BigFloat> = beta.iter().map(|b| x.snr_pow(ln_s, -b)).collect();
        let lambda: Vec<BigFloat> = alpha.iter().map(|a| x.snr_pow(ln_s, -a)).collect();
        let rows = xi_rows(x, &mu, &lambda);
        let d = leibniz(x, &rows);
        let c = cancellation_digits(x, &d).unwrap_or(x.digits() as f64);
        if !weighted {
            return Ok((d.value, c));
        }
        let mut q = x.mul(&d.value, &vandermonde(x, &mu));
        for mi in &mu {
            q = x.mul(&q, &x.powi(mi, (m - l + 1) as i32));
        }
        Ok((q, c))
    };
    let mut x = Extended::new(digits)?;
    let weighted = fit_quantity(
        &mut x,
        snr_grid,
        per_decade,
        lemma2_prediction(m, n, l, beta, alpha),
        |x, s| eval(x, s, true),
    )?;
    let bare = fit_quantity(
        &mut x,
        snr_grid,
        per_decade,
        lemma2_bare_prediction(n, l, beta, alpha),
        |x, s| eval(x, s, false),
    )?;
    Ok(Lemma2Fit { dims, weighted, bare })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma3Report {
    pub dims: (u32, u32, u32),
    pub eps: Vec<f64>,
    pub ratios: Vec<f64>,
    /// `|ratio − 1|` per ε
    pub deviations: Vec<f64>,
    pub monotone: bool,
    /// Slope of `log|ratio − 1|` against `log ε`.
    pub convergence_order: f64,
    pub precision_digits: u32,
    pub required_digits: u32,
}

/// Compares `Det Ξ / Π_{i<j≤m}(μ_i−μ_j)` with the trailing `m − l` covariance
/// eigenvalues set to `ε/k` against `Det Ξ_l / Π_{i<j≤l}(μ_i−μ_j)`.
pub fn check_lemma3_limit(
    mu_positive: &[f64],
    lambda: &[f64],
    dims: (u32, u32, u32),
    eps_grid: &[f64],
    digits: u32,
) -> Result<Lemma3Report> {
    let (m, n, l) = dims;
    if !(l >= n && m > l && n >= 1) || mu_positive.len() != l as usize || lambda.len() != n as usize {
        return Err(Error::InvalidInput(format!(
            "need n <= l < m with {l} positive covariance eigenvalues and {n} eigenvalues; got {dims:?}"
        )));
    }
    if mu_positive.windows(2).any(|w| w[1] >= w[0]) || lambda.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("eigenvalues must be distinct and descending".into()));
    }
    if mu_positive.iter().chain(lambda).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidInput("eigenvalues must be positive".into()));
    }
    if eps_grid.len() < 2 || eps_grid.windows(2).any(|w| w[1] >= w[0]) || eps_grid[eps_grid.len() - 1] <= 0.0 {
        return Err(Error::InvalidInput("eps grid must be positive and strictly descending".into()));
    }
    let mu_min = mu_positive[mu_positive.len() - 1];
    if eps_grid[0] >= mu_min {
        return Err(Error::InvalidInput(format!(
            "eps={} must be below the smallest positive covariance eigenvalue {mu_min}",
            eps_grid[0]
        )));
    }

    let mut x = Extended::new(digits)?;
    let mu_l: Vec<BigFloat> = mu_positive.iter().map(|&v| x.num(v)).collect();
    let lam: Vec<BigFloat> = lambda.iter().map(|&v| x.num(v)).collect();
    let rows_l = xi_rows(&mut x, &mu_l, &lam);
    let d_l = leibniz(&x, &rows_l);
    let mut worst_cancel = cancellation_digits(&mut x, &d_l).unwrap_or(digits as f64);
    let rhs = x.div(&d_l.value, &vandermonde(&x, &mu_l));

    let mut ratios = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let mut mu = mu_l.clone();
        for k in 1..=(m - l) {
            mu.push(x.num(eps / k as f64));
        }
        let rows = xi_rows(&mut x, &mu, &lam);
        let d = leibniz(&x, &rows);
        worst_cancel = worst_cancel.max(cancellation_digits(&mut x, &d).unwrap_or(digits as f64));
        let lhs = x.div(&d.value, &vandermonde(&x, &mu));
        let ratio = x.div(&lhs, &rhs).abs();
        ratios.push(to_f64(&ratio));
    }
    let required = precision_guard(&x, 0.0, worst_cancel)?;
    let deviations: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
    let monotone = deviations.windows(2).all(|w| w[1] < w[0]);
    let xs: Vec<f64> = eps_grid.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = deviations.iter().map(|d| d.max(f64::MIN_POSITIVE).ln()).collect();
    let order = {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = xs.iter().map(|a| (a - mx).powi(2)).sum();
        sxy / sxx
    };
    Ok(Lemma3Report {
        dims,
        eps: eps_grid.to_vec(),
        ratios,
        deviations,
        monotone,
        convergence_order: order,
        precision_digits: digits,
        required_digits: required,
    })
}

/// Outcome of a finite-matrix inequality check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub inequalities: usize,
    pub violations: Vec<String>,
    /// Largest relative excess `lhs/rhs − 1` over the `≤` forms (negative when slack).
    pub worst_residual: f64,
    pub skipped: Option<String>,
}

fn condition_number(a: &ComplexMatrix) -> f64 {
    let s = singular_values(a);
    s.sigma(1) / s.eta(1)
}

/// `σ_{i+j-1}(AB) ≤ σ_i(A)σ_j(B)` and `η_{i+j-1}(AB) ≥ η_i(A)η_j(B)`.
pub fn check_lemma4(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<InequalityCheck> {
    let m = a.nrows();
    if a.ncols() != m || b.nrows() != m || b.ncols() != m {
        return Err(Error::InvalidInput("lemma 4 needs two square matrices of equal size".into()));
    }
    for (name, mat) in [("A", a), ("B", b)] {
        let k = condition_number(mat);
        if !(k < MAX_CONDITION) {
            return Ok(InequalityCheck {
                inequalities: 0,
                violations: vec![],
                worst_residual: f64::NEG_INFINITY,
                skipped: Some(format!("{name} has condition number {k:e}")),
            });
        }
    }
    let (sa, sb, sab) = (singular_values(a), singular_values(b), singular_values(&(a * b)));
    let mut out = InequalityCheck {
        inequalities: 0,
        violations: vec![],
        worst_residual: f64::NEG_INFINITY,
        skipped: None,
    };
    for i in 1..=m {
        for j in 1..=(m + 1 - i) {
            let upper = (sab.sigma(i + j - 1), sa.sigma(i) * sb.sigma(j));
            let lower = (sa.eta(i) * sb.eta(j), sab.eta(i + j - 1));
            for (tag, (lhs, rhs)) in [("sigma", upper), ("eta", lower)] {
                out.inequalities += 1;
                let slack = if tag == "sigma" { 1.0 + SV_SLACK } else { 1.0 / (1.0 - SV_SLACK) };
                out.worst_residual = out.worst_residual.max(lhs / rhs - 1.0);
                if lhs > rhs * slack {
                    out.violations.push(format!("{tag} i={i} j={j}: {lhs:e} vs {rhs:e}"));
                }
            }
        }
    }
    Ok(out)
}

/// `σ_i(M)σ_min(T) ≤ σ_i(TM) ≤ σ_i(M)σ_max(T)`.
pub fn check_prop1(m_mat: &ComplexMatrix, t_mat: &ComplexMatrix) -> Result<InequalityCheck> {
    if t_mat.nrows() != t_mat.ncols() || t_mat.ncols() != m_mat.nrows() {
        return Err(Error::InvalidInput("need square T with as many columns as M has rows".into()));
    }
    let k = condition_number(t_mat);
    if !(k < MAX_CONDITION) {
        return Ok(InequalityCheck {
            inequalities: 0,
            violations: vec![],
            worst_residual: f64::NEG_INFINITY,
            skipped: Some(format!("T has condition number {k:e}")),
        });
    }
    let st = singular_values(t_mat);
    let (t_max, t_min) = (st.sigma(1), st.eta(1));
    let sm = singular_values(m_mat);
    let stm = singular_values(&(t_mat * m_mat));
    let mut out = InequalityCheck {
        inequalities: 0,
        violations: vec![],
        worst_residual: f64::NEG_INFINITY,
        skipped: None,
    };
    for i in 1..=sm.len() {
        let (s, st_i) = (sm.sigma(i), stm.sigma(i));
        for (tag, lhs, rhs, slack) in [
            ("lower", s * t_min, st_i, 1.0 / (1.0 - SV_SLACK)),
            ("upper", st_i, s * t_max, 1.0 + SV_SLACK),
        ] {
            out.inequalities += 1;
            if rhs > 0.0 {
                out.worst_residual = out.worst_residual.max(lhs / rhs - 1.0);
            }
            if lhs > rhs * slack {
                out.violations.push(format!("{tag} i={i}: {lhs:e} vs {rhs:e}"));
            }
        }
    }
    Ok(out)
}

/// JSON verification report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub check: String,
    pub cases: usize,
    pub violations: usize,
    pub worst_residual: f64,
    pub precision_digits: Option<u32>,
    pub skipped: usize,
    pub failures: Vec<String>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

const MAX_LISTED_FAILURES: usize = 20;

fn random_suite<F>(check: &str, tag: u32, trials: usize, seed: u64, f: F) -> Result<VerificationReport>
where
    F: Fn(&mut crate::rng::RngStream) -> Result<InequalityCheck> + Sync,
{
    let results: Vec<Result<(usize, InequalityCheck)>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, stream_id(tag, t as u32));
            // redraw ill-conditioned pairs so every trial yields a check
            for redraws in 0.. {
                let c = f(&mut rng)?;
                if c.skipped.is_none() {
                    return Ok((redraws, c));
                }
            }
            unreachable!()
        })
        .collect();
    let mut report = VerificationReport {
        check: check.to_string(),
        cases: trials,
        violations: 0,
        worst_residual: f64::NEG_INFINITY,
        precision_digits: None,
        skipped: 0,
        failures: vec![],
    };
    for (t, r) in results.into_iter().enumerate() {
        let (redraws, c) = r?;
        report.skipped += redraws;
        report.worst_residual = report.worst_residual.max(c.worst_residual);
        if !c.violations.is_empty() {
            report.violations += c.violations.len();
            if report.failures.len() < MAX_LISTED_FAILURES {
                report.failures.push(format!("trial {t}: {}", c.violations.join("; ")));
            }
        }
    }
    Ok(report)
}

/// Random complex Gaussian pairs `A, B` of size `dim × dim`.
pub fn lemma4_suite(dim: usize, trials: usize, seed: u64) -> Result<VerificationReport> {
    random_suite(&format!("lemma4 dim={dim}"), 0x4000 + dim as u32, trials, seed, |rng| {
        let a = sample_complex_gaussian(dim, dim, rng);
        let b = sample_complex_gaussian(dim, dim, rng);
        check_lemma4(&a, &b)
    })
}

/// Random `T` (`dim × dim`) and `M` (`dim × cols`).
pub fn prop1_suite(dim: usize, cols: usize, trials: usize, seed: u64) -> Result<VerificationReport> {
    random_suite(&format!("prop1 dim={dim} cols={cols}"), 0x5000 + dim as u32, trials, seed, |rng| {
        let t = sample_complex_gaussian(dim, dim, rng);
        let m = sample_complex_gaussian(dim, cols, rng);
        check_prop1(&m, &t)
    })
}

fn fit_report(check: &str, fits: &[(String, AsymptoticFit)], digits: u32) -> VerificationReport {
    let mut report = VerificationReport {
        check: check.to_string(),
        cases: fits.len(),
        violations: 0,
        worst_residual: 0.0,
        precision_digits: Some(digits),
        skipped: 0,
        failures: vec![],
    };
    for (label, f) in fits {
        report.worst_residual = report.worst_residual.max(f.residual.abs());
        if !f.passes() {
            report.violations += 1;
            report.failures.push(format!(
                "{label}: measured {:.4}, predicted {:.4}",
                f.measured_exponent, f.predicted_exponent
            ));
        }
    }
    report
}

fn label_precision(e: Error, label: &str) -> Error {
    match e {
        Error::Precision(m) => Error::Precision(format!("{label}: {m}")),
        other => other,
    }
}

/// SNR 10^4 … 10^12 in half-decade steps.
pub fn default_snr_grid() -> Vec<f64> {
    log_grid(4.0, 12.0, 17)
}

/// Configured exponent-pair cases.
pub fn lemma1_cases() -> Vec<ExponentPair> {
    [
        (vec![0.5], vec![0.1]),
        (vec![0.5, 0.9], vec![0.1, 0.3]),
        (vec![0.2, 0.9], vec![0.1, 0.3]),
        (vec![0.4, 0.7, 0.9], vec![0.1, 0.2, 0.3]),
        (vec![0.3, 0.6, 1.0], vec![0.1, 0.4, 0.5]),
    ]
    .into_iter()
    .map(|(a, b)| ExponentPair::new(a, b).expect("valid case"))
    .collect()
}

pub fn lemma1_report(digits: u32) -> Result<VerificationReport> {
    let grid = default_snr_grid();
    let fits = lemma1_cases()
        .iter()
        .map(|ep| {
            let label = format!("alpha={:?} beta={:?}", ep.alpha, ep.beta);
            let fit = check_lemma1_exponent(ep, &grid, digits).map_err(|e| label_precision(e, &label))?;
            Ok((label, fit))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(fit_report("lemma1", &fits, digits))
}

/// `((m, n, l), covariance exponents, eigenvalue exponents)`.
pub fn lemma2_cases() -> Vec<((u32, u32, u32), Vec<f64>, Vec<f64>)> {
    vec![
        ((2, 1, 2), vec![0.1, 0.2], vec![0.5]),
        ((3, 1, 2), vec![0.1, 0.3], vec![0.6]),
        ((3, 1, 3), vec![0.1, 0.4, 0.8], vec![1.2]),
        ((3, 2, 3), vec![0.1, 0.4, 0.8], vec![0.6, 1.3]),
    ]
}

pub fn lemma2_report(digits: u32) -> Result<VerificationReport> {
    let grid = default_snr_grid();
    let mut fits = Vec::new();
    for (dims, beta, alpha) in lemma2_cases() {
        let f = check_lemma2_exponent(&beta, &alpha, dims, &grid, digits)
            .map_err(|e| label_precision(e, &format!("{dims:?} beta={beta:?} alpha={alpha:?}")))?;
        fits.push((format!("{dims:?} weighted"), f.weighted));
        fits.push((format!("{dims:?} bare"), f.bare));
    }
    Ok(fit_report("lemma2", &fits, digits))
}

/// ε from 1e-2 down to 1e-6.
pub fn default_eps_grid() -> Vec<f64> {
    (2..=6).map(|k| 10f64.powi(-k)).collect()
}

/// `((m, n, l), positive covariance eigenvalues, eigenvalues)`.
pub fn lemma3_cases() -> Vec<((u32, u32, u32), Vec<f64>, Vec<f64>)> {
    vec![
        ((2, 1, 1), vec![1.0], vec![0.7]),
        ((3, 1, 2), vec![1.5, 0.8], vec![0.6]),
        ((3, 1, 1), vec![1.2], vec![0.5]),
        ((4, 2, 2), vec![2.0, 0.9], vec![1.1, 0.4]),
    ]
}

pub fn lemma3_report(digits: u32) -> Result<VerificationReport> {
    let eps = default_eps_grid();
    let mut report = VerificationReport {
        check: "lemma3".into(),
        cases: 0,
        violations: 0,
        worst_residual: 0.0,
        precision_digits: Some(digits),
        skipped: 0,
        failures: vec![],
    };
    for (dims, mu, lambda) in lemma3_cases() {
        let r = check_lemma3_limit(&mu, &lambda, dims, &eps, digits)
            .map_err(|e| label_precision(e, &format!("{dims:?} mu={mu:?} lambda={lambda:?}")))?;
        report.cases += 1;
        let at_1e4 = r.deviations[2];
        report.worst_residual = report.worst_residual.max(at_1e4);
        if !r.monotone || at_1e4 >= 0.01 {
            report.violations += 1;
            report.failures.push(format!("{dims:?}: deviations {:?}", r.deviations));
        }
    }
    Ok(report)
}
