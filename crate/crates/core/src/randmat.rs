//! Complex Gaussian and Wishart sampling, Hermitian spectra, correlation
//! matrices, and unnormalized joint eigenvalue densities of complex Wishart
//! matrices.

use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::rng::RngStream;

pub type ComplexMatrix = DMatrix<Complex64>;

/// Hermitian tolerance for explicit correlation matrices.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues closer than this make the density formulas singular.
pub const TIE_TOL: f64 = 1e-9;

/// `rows x cols` matrix of i.i.d. circularly-symmetric unit-variance
/// complex Gaussians (real and imaginary parts each of variance 1/2).
pub fn sample_complex_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re * scale, im * scale)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum CorrelationSpec {
    Identity,
    /// Entry `(i, j)` is `rho^|i-j|`.
    Exponential(f64),
    Explicit(ComplexMatrix),
}

impl CorrelationSpec {
    pub fn label(&self) -> String {
        match self {
            CorrelationSpec::Identity => "id".into(),
            CorrelationSpec::Exponential(rho) => format!("exp:{rho}"),
            CorrelationSpec::Explicit(m) => format!("explicit:{}x{}", m.nrows(), m.ncols()),
        }
    }
}

/// Parses `id`, `exp:<rho>` or `file:<path>`.
impl FromStr for CorrelationSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "id" || s == "identity" {
            return Ok(CorrelationSpec::Identity);
        }
        if let Some(rho) = s.strip_prefix("exp:") {
            let rho: f64 = rho
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad correlation coefficient '{rho}'")))?;
            return Ok(CorrelationSpec::Exponential(rho));
        }
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(CorrelationSpec::Explicit(load_matrix_file(path)?));
        }
        Err(Error::InvalidInput(format!(
            "correlation must be 'id', 'exp:<rho>' or 'file:<path>', got '{s}'"
        )))
    }
}

/// Reads the plain-text matrix format: dimension on the first line, then
/// `dim^2` whitespace-separated `re,im` entries in row-major order.
pub fn parse_matrix_text(text: &str) -> Result<ComplexMatrix> {
    let mut tokens = text.split_whitespace();
    let dim: usize = tokens
        .next()
        .ok_or_else(|| Error::InvalidInput("empty matrix file".into()))?
        .parse()
        .map_err(|_| Error::InvalidInput("first token must be the dimension".into()))?;
    if dim == 0 {
        return Err(Error::InvalidInput("matrix dimension must be >= 1".into()));
    }
    let mut entries = Vec::with_capacity(dim * dim);
    for tok in tokens {
        let (re, im) = tok
            .split_once(',')
            .ok_or_else(|| Error::InvalidInput(format!("entry '{tok}' is not 're,im'")))?;
        let parse = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("entry '{tok}' is not numeric")))
        };
        entries.push(Complex64::new(parse(re)?, parse(im)?));
    }
    if entries.len() != dim * dim {
        return Err(Error::InvalidInput(format!(
            "expected {} entries for dimension {dim}, found {}",
            dim * dim,
            entries.len()
        )));
    }
    Ok(DMatrix::from_row_slice(dim, dim, &entries))
}

pub fn load_matrix_file<P: AsRef<Path>>(path: P) -> Result<ComplexMatrix> {
    parse_matrix_text(&std::fs::read_to_string(path)?)
}

/// Writes a matrix in the format read by [`parse_matrix_text`].
pub fn format_matrix_text(m: &ComplexMatrix) -> String {
    let mut out = format!("{}\n", m.nrows());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| format!("{:e},{:e}", m[(i, j)].re, m[(i, j)].im))
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// A validated Hermitian positive-definite correlation matrix with its
/// principal square root.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    pub dim: usize,
    pub matrix: ComplexMatrix,
    pub sqrt: ComplexMatrix,
    pub spec: CorrelationSpec,
    /// Eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
}

impl CorrelationMatrix {
    pub fn identity(dim: usize) -> Self {
        correlation_matrix(&CorrelationSpec::Identity, dim).expect("identity is valid")
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.spec, CorrelationSpec::Identity)
    }
}

pub fn correlation_matrix(spec: &CorrelationSpec, dim: usize) -> Result<CorrelationMatrix> {
    if dim == 0 {
        return Err(Error::Validation("correlation dimension must be >= 1".into()));
    }
    let matrix = match spec {
        CorrelationSpec::Identity => ComplexMatrix::identity(dim, dim),
        CorrelationSpec::Exponential(rho) => {
            if !(0.0..1.0).contains(rho) {
                return Err(Error::Validation(format!(
                    "exponential correlation needs rho in [0, 1), got {rho}"
                )));
            }
            DMatrix::from_fn(dim, dim, |i, j| {
                Complex64::new(rho.powi((i as i32 - j as i32).abs()), 0.0)
            })
        }
        CorrelationSpec::Explicit(m) => {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::Validation(format!(
                    "explicit correlation is {}x{}, expected {dim}x{dim}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            m.clone()
        }
    };
    let asym = (&matrix - matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if asym > HERMITIAN_TOL {
        return Err(Error::Validation(format!(
            "correlation matrix is not Hermitian (max |A - A^H| = {asym:e})"
        )));
    }
    let eig = matrix.clone().symmetric_eigen();
    if let Some(bad) = eig.eigenvalues.iter().copied().find(|&v| v <= 0.0) {
        return Err(Error::Validation(format!(
            "correlation matrix is not positive definite: eigenvalue {bad:e}"
        )));
    }
    let root = DVector::from_iterator(dim, eig.eigenvalues.iter().map(|v| Complex64::new(v.sqrt(), 0.0)));
    let sqrt = &eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.adjoint();
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    Ok(CorrelationMatrix {
        dim,
        matrix,
        sqrt,
        spec: spec.clone(),
        eigenvalues,
    })
}

/// Real spectrum sorted descending.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenvalueVector {
    pub values: Vec<f64>,
}

impl EigenvalueVector {
    /// Sorts descending; negative round-off is clamped to zero.
    pub fn from_unsorted(mut values: Vec<f64>) -> Self {
        for v in values.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `i`-th largest, 1-based.
    pub fn sigma(&self, i: usize) -> f64 {
        self.values[i - 1]
    }

    /// `i`-th smallest, 1-based.
    pub fn eta(&self, i: usize) -> f64 {
        self.values[self.values.len() - i]
    }

    pub fn ascending(&self) -> Vec<f64> {
        self.values.iter().rev().copied().collect()
    }

    /// Index pairs (0-based, adjacent in sorted order) closer than `tol`.
    pub fn ties(&self, tol: f64) -> Vec<(usize, usize)> {
        (1..self.values.len())
            .filter(|&i| (self.values[i - 1] - self.values[i]).abs() < tol)
            .map(|i| (i - 1, i))
            .collect()
    }

    /// Number of entries above `rel_tol` times the largest one.
    pub fn numerical_rank(&self, rel_tol: f64) -> usize {
        let top = self.values.first().copied().unwrap_or(0.0);
        self.values.iter().filter(|&&v| v > rel_tol * top).count()
    }
}

/// Eigenvalues of a Hermitian matrix, descending.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> EigenvalueVector {
    EigenvalueVector::from_unsorted(m.clone().symmetric_eigenvalues().iter().copied().collect())
}

pub fn singular_values(a: &ComplexMatrix) -> EigenvalueVector {
    EigenvalueVector::from_unsorted(a.singular_values().iter().copied().collect())
}

/// Eigenvalues of `W = H H^H` with `H = sigma^{1/2} G`, `G` an `m x n`
/// i.i.d. complex Gaussian matrix.
pub fn wishart_sample<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    sigma: &CorrelationMatrix,
    rng: &mut R,
) -> Result<EigenvalueVector> {
    if sigma.dim != m {
        return Err(Error::InvalidInput(format!(
            "covariance is {}x{}, expected {m}x{m}",
            sigma.dim, sigma.dim
        )));
    }
    let g = sample_complex_gaussian(m, n, rng);
    let h = if sigma.is_identity() { g } else { &sigma.sqrt * g };
    Ok(hermitian_eigenvalues(&(&h * h.adjoint())))
}

/// Which joint eigenvalue law to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityKind {
    /// `W ~ W_m(n, Σ)`, `n >= m`; `mu` holds the `m` eigenvalues of `Σ`.
    FullRank { n: usize },
    /// `W ~ W_m(n, Σ)`, `n < m`; `n = lambda.len()`, `m = mu.len()`.
    FewerDof,
    /// `Σ = I`; `lambda` holds the `min(m, n)` positive eigenvalues.
    Identity { m: usize, n: usize },
    /// `Σ` of rank `l = mu.len() >= n`, trailing eigenvalues zero.
    RankDeficient,
}

fn check_distinct(name: &str, v: &[f64]) -> Result<()> {
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            if (v[i] - v[j]).abs() < TIE_TOL {
                return Err(Error::Degenerate(format!(
                    "{name}[{i}] and {name}[{j}] are tied ({} vs {})",
                    v[i], v[j]
                )));
            }
        }
    }
    Ok(())
}

fn check_positive(name: &str, v: &[f64]) -> Result<()> {
    match v.iter().position(|&x| x <= 0.0 || !x.is_finite()) {
        Some(i) => Err(Error::InvalidInput(format!("{name}[{i}] = {} must be positive", v[i]))),
        None => Ok(()),
    }
}

fn log_vandermonde(v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            acc += (v[i] - v[j]).abs().ln();
        }
    }
    acc
}

fn log_abs_det(m: DMatrix<f64>) -> f64 {
    m.lu().determinant().abs().ln()
}

/// The `Ξ` matrix: `k` power columns `1, μ, …, μ^{k-1}` followed by one
/// column `μ^{k-1} e^{-λ_j/μ}` per `λ_j`, where `k = rows - lambda.len()`.
pub fn xi_matrix(mu: &[f64], lambda: &[f64]) -> DMatrix<f64> {
    let rows = mu.len();
    let k = rows - lambda.len();
    let top = k as i32 - 1;
    DMatrix::from_fn(rows, rows, |i, c| {
        if c < k {
            mu[i].powi(c as i32)
        } else {
            mu[i].powi(top) * (-lambda[c - k] / mu[i]).exp()
        }
    })
}

/// Log of the joint eigenvalue density without its normalization constant.
pub fn log_density_unnormalized(
    kind: DensityKind,
    mu: &EigenvalueVector,
    lambda: &EigenvalueVector,
) -> Result<f64> {
    let mu = &mu.values;
    let lambda = &lambda.values;
    check_positive("lambda", lambda)?;
    check_distinct("lambda", lambda)?;
    match kind {
        DensityKind::Identity { m, n } => {
            if lambda.len() != m.min(n) {
                return Err(Error::InvalidInput(format!(
                    "identity kind expects {} eigenvalues, got {}",
                    m.min(n),
                    lambda.len()
                )));
            }
            let power = m.abs_diff(n) as f64;
            let sum: f64 = lambda.iter().sum();
            let logs: f64 = lambda.iter().map(|x| x.ln()).sum();
            Ok(-sum + power * logs + 2.0 * log_vandermonde(lambda))
        }
        DensityKind::FullRank { n } => {
            let m = mu.len();
            if n < m || lambda.len() != m {
                return Err(Error::InvalidInput(format!(
                    "full-rank kind needs n >= m = {m} and {m} eigenvalues"
                )));
            }
            check_positive("mu", mu)?;
            check_distinct("mu", mu)?;
            let det = log_abs_det(DMatrix::from_fn(m, m, |i, j| (-lambda[j] / mu[i]).exp()));
            let powers: f64 = mu
                .iter()
                .zip(lambda)
                .map(|(u, x)| (m as f64 - n as f64 - 1.0) * u.ln() + (n as f64 - m as f64) * x.ln())
                .sum();
            Ok(det + powers + log_vandermonde(lambda) - log_vandermonde(mu))
        }
        DensityKind::FewerDof | DensityKind::RankDeficient => {
            if lambda.len() > mu.len() || (kind == DensityKind::FewerDof && lambda.len() == mu.len()) {
                return Err(Error::InvalidInput(format!(
                    "need fewer eigenvalues of W ({}) than of the covariance ({})",
                    lambda.len(),
                    mu.len()
                )));
            }
            check_positive("mu", mu)?;
            check_distinct("mu", mu)?;
            let det = log_abs_det(xi_matrix(mu, lambda));
            Ok(det - log_vandermonde(mu) + log_vandermonde(lambda))
        }
    }
}

/// Result of a chi-square goodness-of-fit test.
#[derive(Debug, Clone, Serialize)]
pub struct ChiSquareReport {
    pub m: usize,
    pub n: usize,
    pub samples: usize,
    pub bins: usize,
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

fn identity_density(m: usize, n: usize, lambda: &[f64]) -> f64 {
    let ev = EigenvalueVector { values: lambda.to_vec() };
    match log_density_unnormalized(DensityKind::Identity { m, n }, &ev, &ev) {
        Ok(v) => v.exp(),
        Err(_) => 0.0,
    }
}

const GL_ORDER: usize = 10;

/// Probability mass of each histogram cell under the identity-covariance law
/// of `q = min(m, n) <= 2` ordered eigenvalues, normalized numerically.
fn cell_masses(m: usize, n: usize, width: f64, cells: usize) -> Vec<f64> {
    let (x, w) = gauss_legendre(GL_ORDER);
    let map = |lo: f64, hi: f64, t: f64| lo + (hi - lo) * (t + 1.0) / 2.0;
    let q = m.min(n);
    let cap = 80.0;
    match q {
        1 => {
            let mass = |lo: f64, hi: f64| {
                x.iter()
                    .zip(&w)
                    .map(|(t, wt)| wt * identity_density(m, n, &[map(lo, hi, *t)]))
                    .sum::<f64>()
                    * (hi - lo)
                    / 2.0
            };
            let total: f64 = (0..cap as usize).map(|k| mass(k as f64, k as f64 + 1.0)).sum();
            (0..cells)
                .map(|c| mass(c as f64 * width, (c + 1) as f64 * width) / total)
                .collect()
        }
        2 => {
            // λ1 > λ2: cell (a, b) covers λ1 in bin a, λ2 in bin b, b <= a.
            let mass = |a_lo: f64, a_hi: f64, b_lo: f64, b_hi: f64| {
                let mut acc = 0.0;
                for (t1, w1) in x.iter().zip(&w) {
                    let l1 = map(a_lo, a_hi, *t1);
                    let top = b_hi.min(l1);
                    if top <= b_lo {
                        continue;
                    }
                    let inner: f64 = x
                        .iter()
                        .zip(&w)
                        .map(|(t2, w2)| w2 * identity_density(m, n, &[l1, map(b_lo, top, *t2)]))
                        .sum::<f64>()
                        * (top - b_lo)
                        / 2.0;
                    acc += w1 * inner;
                }
                acc * (a_hi - a_lo) / 2.0
            };
            let coarse = cap as usize / 2;
            let mut total = 0.0;
            for a in 0..coarse {
                for b in 0..=a {
                    total += mass(2.0 * a as f64, 2.0 * (a + 1) as f64, 2.0 * b as f64, 2.0 * (b + 1) as f64);
                }
            }
            let mut out = Vec::new();
            for a in 0..cells {
                for b in 0..=a {
                    let lo = |k: usize| k as f64 * width;
                    out.push(mass(lo(a), lo(a + 1), lo(b), lo(b + 1)) / total);
                }
            }
            out
        }
        _ => unreachable!("density shape test supports min(m, n) <= 2"),
    }
}

/// Compares sampled ordered eigenvalues of `W_m(n, I)` against the
/// numerically normalized analytic law with a chi-square test.
pub fn density_shape_test(m: usize, n: usize, samples: usize, rng: &mut RngStream) -> Result<ChiSquareReport> {
    let sigma = CorrelationMatrix::identity(m);
    let draws = (0..samples)
        .map(|_| wishart_sample(m, n, &sigma, rng))
        .collect::<Result<Vec<_>>>()?;
    chi_square_shape(m, n, &draws)
}

/// Chi-square statistic of `draws` against the identity-covariance law of
/// `W_m(n, I)`. Cells with expected count below 5 are pooled with the tail
/// into one bin.
pub fn chi_square_shape(m: usize, n: usize, draws: &[EigenvalueVector]) -> Result<ChiSquareReport> {
    let q = m.min(n);
    if q == 0 || q > 2 {
        return Err(Error::InvalidInput(format!(
            "density shape test supports min(m, n) in 1..=2, got ({m},{n})"
        )));
    }
    let width = if q == 1 { 0.25 } else { 0.5 };
    let cells = if q == 1 { 64 } else { 24 };
    let masses = cell_masses(m, n, width, cells);

    let mut counts = vec![0usize; masses.len()];
    let mut outside = 0usize;
    for ev in draws {
        if ev.len() < q {
            return Err(Error::InvalidInput(format!("draw has {} eigenvalues, need {q}", ev.len())));
        }
        let bin = |v: f64| (v / width).floor() as usize;
        let idx = if q == 1 {
            let a = bin(ev.values[0]);
            (a < cells).then_some(a)
        } else {
            let (a, b) = (bin(ev.values[0]), bin(ev.values[1]));
            (a < cells).then(|| a * (a + 1) / 2 + b)
        };
        match idx {
            Some(i) => counts[i] += 1,
            None => outside += 1,
        }
    }

    let total = draws.len() as f64;
    let mut pooled_obs = outside as f64;
    let mut pooled_exp = total * (1.0 - masses.iter().sum::<f64>()).max(0.0);
    let mut statistic = 0.0;
    let mut bins = 0usize;
    for (c, p) in counts.iter().zip(&masses) {
        let e = total * p;
        if e < 5.0 {
            pooled_obs += *c as f64;
            pooled_exp += e;
        } else {
            statistic += (*c as f64 - e).powi(2) / e;
            bins += 1;
        }
    }
    if pooled_exp > 0.0 {
        statistic += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        bins += 1;
    }
    let dof = bins.saturating_sub(1).max(1);
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::Internal(e.to_string()))?;
    Ok(ChiSquareReport {
        m,
        n,
        samples: draws.len(),
        bins,
        statistic,
        dof,
        p_value: 1.0 - dist.cdf(statistic),
    })
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// KS critical value at significance `alpha` for sample sizes `n1`, `n2`.
pub fn ks_critical(alpha: f64, n1: usize, n2: usize) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n1 + n2) as f64 / (n1 as f64 * n2 as f64)).sqrt()
}

/// A unitary matrix from the QR factorization of a Gaussian draw.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    sample_complex_gaussian(dim, dim, rng).qr().q()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn ev(v: &[f64]) -> EigenvalueVector {
        EigenvalueVector { values: v.to_vec() }
    }

    #[test]
    fn gaussian_unit_variance() {
        let mut rng = stream(1, 0);
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| sample_complex_gaussian(1, 1, &mut rng)[(0, 0)].norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn gaussian_entries_uncorrelated() {
        let mut rng = stream(2, 0);
        let n = 50_000;
        let mut acc = DMatrix::<Complex64>::zeros(4, 4);
        for _ in 0..n {
            let h = sample_complex_gaussian(2, 2, &mut rng);
            let v = DVector::from_iterator(4, h.iter().copied());
            acc += &v * v.adjoint();
        }
        acc /= Complex64::new(n as f64, 0.0);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((acc[(i, j)] - Complex64::new(want, 0.0)).norm() < 0.03);
            }
        }
    }

    #[test]
    fn gaussian_deterministic() {
        let a = sample_complex_gaussian(3, 2, &mut stream(9, 4));
        let b = sample_complex_gaussian(3, 2, &mut stream(9, 4));
        assert_eq!(a, b);
    }

    #[test]
    fn correlation_examples() {
        let c = correlation_matrix(&CorrelationSpec::Exponential(0.0), 3).unwrap();
        assert_eq!(c.matrix, ComplexMatrix::identity(3, 3));
        let c = correlation_matrix(&CorrelationSpec::Exponential(0.5), 2).unwrap();
        assert_eq!(c.matrix[(0, 1)], Complex64::new(0.5, 0.0));
        assert_eq!(c.matrix[(1, 1)], Complex64::new(1.0, 0.0));
        for rho in [0.3, 0.7, 0.9] {
            let c = correlation_matrix(&CorrelationSpec::Exponential(rho), 4).unwrap();
            assert!((&c.sqrt * &c.sqrt - &c.matrix).norm() < 1e-10);
        }
    }

    #[test]
    fn correlation_rejects_bad_input() {
        let non_herm = DMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0), Complex64::new(0.2, 0.0), Complex64::new(1.0, 0.0)],
        );
        assert!(matches!(
            correlation_matrix(&CorrelationSpec::Explicit(non_herm), 2),
            Err(Error::Validation(_))
        ));
        let indefinite = DMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0), Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0)],
        );
        let err = correlation_matrix(&CorrelationSpec::Explicit(indefinite), 2).unwrap_err();
        assert!(err.to_string().contains("-1"), "{err}");
        assert!(correlation_matrix(&CorrelationSpec::Exponential(1.0), 2).is_err());
    }

    #[test]
    fn matrix_text_format() {
        let m = parse_matrix_text("2\n1,0 0.5,0.1\n0.5,-0.1 1,0\n").unwrap();
        assert_eq!(m[(1, 0)], Complex64::new(0.5, -0.1));
        let c = correlation_matrix(&CorrelationSpec::Explicit(m.clone()), 2).unwrap();
        assert_eq!(parse_matrix_text(&format_matrix_text(&c.matrix)).unwrap(), m);
        assert!(parse_matrix_text("2\n1,0 0,0 0,0").is_err());
        assert!(parse_matrix_text("2\n1 0 0 1").is_err());
        assert!("exp:0.4".parse::<CorrelationSpec>().unwrap() == CorrelationSpec::Exponential(0.4));
        assert!("bogus".parse::<CorrelationSpec>().is_err());
    }

    #[test]
    fn wishart_scalar_is_exponential() {
        let mut rng = stream(3, 0);
        let sigma = CorrelationMatrix::identity(1);
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| wishart_sample(1, 1, &sigma, &mut rng).unwrap().values[0])
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn wishart_rank_and_trace() {
        let mut rng = stream(4, 0);
        let sigma = CorrelationMatrix::identity(2);
        for _ in 0..100 {
            let ev = wishart_sample(2, 1, &sigma, &mut rng).unwrap();
            assert_eq!(ev.numerical_rank(1e-10), 1);
        }
        let sigma = correlation_matrix(&CorrelationSpec::Exponential(0.6), 3).unwrap();
        let n = 20_000;
        let mean: f64 = (0..n)
            .map(|_| wishart_sample(3, 2, &sigma, &mut rng).unwrap().values.iter().sum::<f64>())
            .sum::<f64>()
            / n as f64;
        // E[tr W] = n tr Σ = 2 * 3
        assert!((mean - 6.0).abs() < 0.1, "{mean}");
        assert!(wishart_sample(2, 2, &sigma, &mut rng).is_err());
    }

    #[test]
    fn identity_density_values() {
        let k = DensityKind::Identity { m: 1, n: 1 };
        let v = log_density_unnormalized(k, &ev(&[]), &ev(&[2.5])).unwrap();
        assert!((v + 2.5).abs() < 1e-15);
        let k = DensityKind::Identity { m: 2, n: 2 };
        let a = log_density_unnormalized(k, &ev(&[]), &ev(&[2.0, 1.0])).unwrap();
        let b = log_density_unnormalized(k, &ev(&[]), &ev(&[3.0, 1.0])).unwrap();
        assert!(((a - b).exp() - std::f64::consts::E / 4.0).abs() < 1e-12);
    }

    #[test]
    fn density_rejects_ties() {
        let k = DensityKind::FullRank { n: 3 };
        let err = log_density_unnormalized(k, &ev(&[1.0, 1.0]), &ev(&[2.0, 0.5])).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
        let err = log_density_unnormalized(DensityKind::FewerDof, &ev(&[1.0 + 1e-12, 1.0]), &ev(&[0.3])).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn full_rank_matches_identity_limit_in_shape() {
        // Σ = c I (approximately, with tiny splits) gives the same λ-shape as
        // the identity law scaled; compare ratios at two λ points.
        let mu = ev(&[1.0 + 2e-4, 1.0 + 1e-4, 1.0]);
        let k = DensityKind::FullRank { n: 4 };
        let l1 = ev(&[3.0, 1.5, 0.4]);
        let l2 = ev(&[2.0, 1.0, 0.7]);
        let r_full = log_density_unnormalized(k, &mu, &l1).unwrap() - log_density_unnormalized(k, &mu, &l2).unwrap();
        let ki = DensityKind::Identity { m: 3, n: 4 };
        let r_id = log_density_unnormalized(ki, &mu, &l1).unwrap() - log_density_unnormalized(ki, &mu, &l2).unwrap();
        assert!((r_full - r_id).abs() < 1e-2, "{r_full} vs {r_id}");
    }

    #[test]
    fn fewer_dof_tends_to_rank_deficient() {
        let lambda = ev(&[0.8]);
        let rd = log_density_unnormalized(DensityKind::RankDeficient, &ev(&[2.0, 1.0]), &lambda).unwrap();
        let mut prev = f64::INFINITY;
        for eps in [1e-2, 1e-3, 1e-4] {
            let full = log_density_unnormalized(DensityKind::FewerDof, &ev(&[2.0, 1.0, eps]), &lambda).unwrap();
            let gap = (full - rd).abs();
            assert!(gap < prev);
            prev = gap;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn singular_value_examples() {
        let s = singular_values(&ComplexMatrix::identity(3, 3));
        assert_eq!(s.values, vec![1.0, 1.0, 1.0]);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)]));
        let s = singular_values(&d);
        assert_eq!(s.values, vec![2.0, 1.0]);
        assert_eq!(s.eta(1), 1.0);
        assert_eq!(s.ascending(), vec![1.0, 2.0]);
        let a = sample_complex_gaussian(3, 3, &mut stream(5, 0));
        let s = singular_values(&a);
        let e = hermitian_eigenvalues(&(&a * a.adjoint()));
        for i in 0..3 {
            assert!((s.values[i] - e.values[i].sqrt()).abs() < 1e-10 * s.values[0]);
        }
    }

    #[test]
    fn unitary_invariance_of_singular_values() {
        let mut rng = stream(6, 0);
        let u = random_unitary(3, &mut rng);
        let v = random_unitary(3, &mut rng);
        assert!((&u * u.adjoint() - ComplexMatrix::identity(3, 3)).norm() < 1e-12);
        let n = 5_000;
        let plain: Vec<f64> = (0..n).map(|_| singular_values(&sample_complex_gaussian(3, 3, &mut rng)).values[0]).collect();
        let rotated: Vec<f64> = (0..n)
            .map(|_| singular_values(&(&u * sample_complex_gaussian(3, 3, &mut rng) * &v)).values[0])
            .collect();
        assert!(ks_statistic(&plain, &rotated) < ks_critical(0.001, n, n));
    }

    #[test]
    fn shape_test_detects_wrong_law() {
        // Sampling (1,2) but binning against (1,1) must fail.
        let masses_11 = cell_masses(1, 1, 0.25, 64);
        let masses_12 = cell_masses(1, 2, 0.25, 64);
        assert!((masses_11.iter().sum::<f64>() - (1.0 - (-16.0f64).exp())).abs() < 1e-9);
        assert!((masses_11[0] - masses_12[0]).abs() > 0.1);
        // analytic mass of the first Exp(1) cell
        assert!((masses_11[0] - (1.0 - (-0.25f64).exp())).abs() < 1e-12);
    }
}
