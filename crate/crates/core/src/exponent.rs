//! Outage-exponent minimization for the Rayleigh-product channel.
//!
//! The tradeoff `d(r)` is the infimum of the joint exponent `ε(α, β)` of the
//! eigenvalue exponents of the two Wishart layers over the outage set. Two
//! independent routes compute it here:
//!
//! * [`solve_lp`]: the exact-rational linear program obtained by linearizing
//!   the `(α_i - β_j)^+` terms and the outage constraint;
//! * [`greedy_reduce`] + [`minimize_threshold`]: eliminate `β` by letting
//!   each `β_j` pass `α`'s leftward while its running coefficient is
//!   positive, then solve the resulting threshold problem in `α`.
//!
//! Dimensions follow the Rayleigh-product convention `H = H_2 H_1` with
//! `H_1` of size `l x m` and `H_2` of size `n x l`, i.e. `m` transmit
//! antennas, `l` scatterers, `n` receive antennas.

mod simplex;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::closed_form::ChannelTriple;
use crate::error::{Error, Result};
use crate::Rational;

use simplex::{Constraint, LinearProgram, LpFailure, Relation};

/// Which parameter regime the `(m, n, l)` triple falls in, after `n <= m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseId {
    /// `min(m, n) >= l`
    A,
    /// `n < l <= m`
    B,
    /// `n <= m < l`
    C,
}

pub fn classify_case(m: u32, n: u32, l: u32) -> CaseId {
    debug_assert!(n <= m, "reciprocity must be applied first");
    if n >= l {
        CaseId::A
    } else if l <= m {
        CaseId::B
    } else {
        CaseId::C
    }
}

/// The linear objective and constraint structure of one outage-exponent
/// problem. Indices are 0-based: `alpha_coeffs[i]` multiplies `α_{i+1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExponentProgram {
    pub dims: (u32, u32, u32),
    pub case: CaseId,
    pub alpha_dim: usize,
    pub beta_dim: usize,
    pub alpha_coeffs: Vec<i64>,
    pub beta_coeffs: Vec<i64>,
    /// `(i, j)` pairs contributing `(α_i - β_j)^+`; always `i < j`.
    pub plus_pairs: Vec<(usize, usize)>,
    /// `α_i >= β_i` is imposed for `i < couple_range`.
    pub couple_range: usize,
    #[serde(serialize_with = "serialize_rational")]
    pub r: Rational,
}

fn serialize_rational<S: serde::Serializer>(
    r: &Rational,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

pub fn build_program(m: u32, n: u32, l: u32, r: Rational) -> Result<ExponentProgram> {
    if m == 0 || n == 0 || l == 0 {
        return Err(Error::Construction(format!(
            "dimensions must be positive, got (m,n,l)=({m},{n},{l})"
        )));
    }
    if n > m {
        return Err(Error::Construction(format!(
            "expected n <= m after reciprocity, got (m,n,l)=({m},{n},{l})"
        )));
    }
    let case = classify_case(m, n, l);
    let (mi, ni, li) = (m as i64, n as i64, l as i64);
    let (alpha_dim, beta_dim) = match case {
        CaseId::A => (l as usize, l as usize),
        CaseId::B => (n as usize, l as usize),
        CaseId::C => (n as usize, m as usize),
    };
    let alpha_coeffs: Vec<i64> = (1..=alpha_dim as i64)
        .map(|i| match case {
            CaseId::A => ni - i + 1,
            CaseId::B | CaseId::C => ni + 1 - i,
        })
        .collect();
    let beta_coeffs: Vec<i64> = (1..=beta_dim as i64)
        .map(|j| match case {
            CaseId::A => mi - ni + li - j,
            // Case C is case B with l and m interchanged; the coefficient
            // formula is symmetric in (l, m), only the β count changes.
            CaseId::B | CaseId::C => {
                if j <= ni + 1 {
                    li + mi - ni - j
                } else {
                    li + mi + 1 - 2 * j
                }
            }
        })
        .collect();
    let plus_pairs: Vec<(usize, usize)> = (0..beta_dim)
        .flat_map(|j| (0..j.min(alpha_dim)).map(move |i| (i, j)))
        .collect();
    let couple_range = alpha_dim.min(beta_dim);

    let program = ExponentProgram {
        dims: (m, n, l),
        case,
        alpha_dim,
        beta_dim,
        alpha_coeffs,
        beta_coeffs,
        plus_pairs,
        couple_range,
        r,
    };
    program.validate()?;
    Ok(program)
}

impl ExponentProgram {
    fn validate(&self) -> Result<()> {
        let (m, n, l) = self.dims;
        if self.alpha_dim != m.min(n).min(l) as usize {
            return Err(Error::Construction(format!(
                "alpha_dim {} != min(m,n,l) for ({m},{n},{l})",
                self.alpha_dim
            )));
        }
        if self.alpha_coeffs.len() != self.alpha_dim || self.beta_coeffs.len() != self.beta_dim {
            return Err(Error::Construction("coefficient lengths disagree with dims".into()));
        }
        if let Some(&(i, j)) = self
            .plus_pairs
            .iter()
            .find(|&&(i, j)| i >= j || i >= self.alpha_dim || j >= self.beta_dim)
        {
            return Err(Error::Construction(format!("invalid plus pair ({i},{j})")));
        }
        Ok(())
    }

    /// Variable layout: `α` then `β` then one `t` per plus pair then one
    /// outage slack `s` per `α`.
    fn linear_program(&self) -> LinearProgram {
        let na = self.alpha_dim;
        let nb = self.beta_dim;
        let np = self.plus_pairs.len();
        let alpha = |i: usize| i;
        let beta = |j: usize| na + j;
        let plus = |p: usize| na + nb + p;
        let slack = |i: usize| na + nb + np + i;
        let num_vars = na + nb + np + na;

        let int = |v: i64| Rational::from_integer(BigInt::from(v));
        let mut objective = vec![Rational::zero(); num_vars];
        for (i, &a) in self.alpha_coeffs.iter().enumerate() {
            objective[alpha(i)] = int(a);
        }
        for (j, &b) in self.beta_coeffs.iter().enumerate() {
            objective[beta(j)] = int(b);
        }
        for p in 0..np {
            objective[plus(p)] = Rational::one();
        }

        let one = Rational::one;
        let minus = || -Rational::one();
        let ge0 = |terms: Vec<(usize, Rational)>| Constraint {
            terms,
            relation: Relation::Ge,
            rhs: Rational::zero(),
        };
        let mut constraints = Vec::new();
        // t_p >= α_i - β_j
        for (p, &(i, j)) in self.plus_pairs.iter().enumerate() {
            constraints.push(ge0(vec![(plus(p), one()), (alpha(i), minus()), (beta(j), one())]));
        }
        // s_i >= 1 - α_i, Σ s_i <= r
        for i in 0..na {
            constraints.push(Constraint {
                terms: vec![(slack(i), one()), (alpha(i), one())],
                relation: Relation::Ge,
                rhs: one(),
            });
        }
        constraints.push(Constraint {
            terms: (0..na).map(|i| (slack(i), one())).collect(),
            relation: Relation::Le,
            rhs: self.r.clone(),
        });
        for j in 1..nb {
            constraints.push(ge0(vec![(beta(j), one()), (beta(j - 1), minus())]));
        }
        for i in 1..na {
            constraints.push(ge0(vec![(alpha(i), one()), (alpha(i - 1), minus())]));
        }
        for i in 0..self.couple_range {
            constraints.push(ge0(vec![(alpha(i), one()), (beta(i), minus())]));
        }
        LinearProgram {
            num_vars,
            objective,
            constraints,
        }
    }

    /// Evaluates `ε(α, β)` directly (no linearization).
    pub fn epsilon(&self, alpha: &[Rational], beta: &[Rational]) -> Rational {
        let int = |v: i64| Rational::from_integer(BigInt::from(v));
        let mut acc = Rational::zero();
        for (c, a) in self.alpha_coeffs.iter().zip(alpha) {
            acc += int(*c) * a;
        }
        for (c, b) in self.beta_coeffs.iter().zip(beta) {
            acc += int(*c) * b;
        }
        for &(i, j) in &self.plus_pairs {
            let d = &alpha[i] - &beta[j];
            if d.is_positive() {
                acc += d;
            }
        }
        acc
    }

    /// Whether `(α, β)` lies in the closed outage set of this program.
    pub fn is_feasible(&self, alpha: &[Rational], beta: &[Rational]) -> bool {
        let outage: Rational = alpha
            .iter()
            .map(|a| {
                let d = Rational::one() - a;
                if d.is_positive() {
                    d
                } else {
                    Rational::zero()
                }
            })
            .sum();
        alpha.len() == self.alpha_dim
            && beta.len() == self.beta_dim
            && outage <= self.r
            && alpha.iter().all(|a| !a.is_negative())
            && beta.iter().all(|b| !b.is_negative())
            && alpha.windows(2).all(|w| w[0] <= w[1])
            && beta.windows(2).all(|w| w[0] <= w[1])
            && (0..self.couple_range).all(|i| alpha[i] >= beta[i])
    }
}

/// Optimal value and one optimal vertex of an exponent program.
#[derive(Debug, Clone)]
pub struct LpOptimum {
    pub value: Rational,
    pub alpha: Vec<Rational>,
    pub beta: Vec<Rational>,
}

pub fn solve_lp(p: &ExponentProgram) -> Result<LpOptimum> {
    if p.r.is_negative() {
        return Err(Error::Domain(format!("multiplexing gain r={} is negative", p.r)));
    }
    let lp = p.linear_program();
    let sol = simplex::solve(&lp).map_err(|f| match f {
        LpFailure::Infeasible => Error::Domain(format!("exponent program infeasible at r={}", p.r)),
        LpFailure::Unbounded => Error::Internal("exponent program unbounded".into()),
    })?;
    let na = p.alpha_dim;
    let nb = p.beta_dim;
    Ok(LpOptimum {
        value: sol.value,
        alpha: sol.x[..na].to_vec(),
        beta: sol.x[na..na + nb].to_vec(),
    })
}

/// Coefficients of `ε(α)` after optimal elimination of `β`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReducedObjective {
    /// `(n - i + 1 + c_i)` in 1-based terms.
    pub coeffs: Vec<i64>,
    /// `c_i`: how many `β_j` passed `α_i`.
    pub passes: Vec<i64>,
    /// Coefficient of each `β_j` once it stopped.
    pub final_beta_coeffs: Vec<i64>,
    /// `β_j` that passed every passable `α` and was pinned to zero.
    pub beta_at_zero: Vec<bool>,
}

pub fn greedy_reduce(p: &ExponentProgram) -> Result<ReducedObjective> {
    let mut passes = vec![0i64; p.alpha_dim];
    let mut final_beta_coeffs = Vec::with_capacity(p.beta_dim);
    let mut beta_at_zero = Vec::with_capacity(p.beta_dim);

    for j in 0..p.beta_dim {
        // α's β_j may pass, nearest (largest index) first
        let mut passable: Vec<usize> = p
            .plus_pairs
            .iter()
            .filter(|&&(_, pj)| pj == j)
            .map(|&(i, _)| i)
            .collect();
        passable.sort_unstable_by(|a, b| b.cmp(a));

        let mut coeff = p.beta_coeffs[j];
        let mut passed = 0;
        for &i in &passable {
            if coeff <= 0 {
                break;
            }
            passes[i] += 1;
            coeff -= 1;
            passed += 1;
        }
        final_beta_coeffs.push(coeff);
        beta_at_zero.push(passed == passable.len() && coeff >= 0);
    }

    let coeffs: Vec<i64> = p
        .alpha_coeffs
        .iter()
        .zip(&passes)
        .map(|(a, c)| a + c)
        .collect();
    if let Some(c) = coeffs.iter().find(|&&c| c < 0) {
        return Err(Error::Internal(format!(
            "reduced coefficient {c} is negative for {:?}",
            p.dims
        )));
    }
    if coeffs.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Internal(format!(
            "reduced coefficients {coeffs:?} are not non-increasing for {:?}",
            p.dims
        )));
    }
    Ok(ReducedObjective {
        coeffs,
        passes,
        final_beta_coeffs,
        beta_at_zero,
    })
}

/// Minimizes `Σ coeffs_i α_i` over `0 <= α_1 <= ... <= 1` with
/// `Σ (1 - α_i) <= r`. With non-increasing coefficients the deficit goes to
/// the leading `α`'s: the first `floor(r)` are zero, the next carries the
/// fractional part.
pub fn minimize_threshold(ro: &ReducedObjective, r: &Rational) -> Result<Rational> {
    let dim = ro.coeffs.len();
    let max = Rational::from_integer(BigInt::from(dim));
    if r.is_negative() || *r > max {
        return Err(Error::Domain(format!("r={r} outside [0, {dim}]")));
    }
    if ro.coeffs.windows(2).any(|w| w[1] > w[0]) || ro.coeffs.iter().any(|&c| c < 0) {
        return Err(Error::Domain(format!(
            "coefficients {:?} must be non-negative and non-increasing",
            ro.coeffs
        )));
    }
    let whole = r.floor();
    let k = whole.to_integer().to_usize().expect("0 <= r <= dim");
    let frac = r - &whole;
    let int = |v: i64| Rational::from_integer(BigInt::from(v));
    let mut value: Rational = ro.coeffs.iter().skip(k + 1).map(|&c| int(c)).sum();
    if k < dim {
        value += int(ro.coeffs[k]) * (Rational::one() - frac);
    }
    Ok(value)
}

fn reciprocal_order(m: u32, n: u32) -> (u32, u32) {
    if n > m {
        (n, m)
    } else {
        (m, n)
    }
}

/// `d(r)` from the exact LP, for `m` transmit, `n` receive, `l` scatterers.
pub fn dmt_via_lp(m: u32, n: u32, l: u32, r: &Rational) -> Result<Rational> {
    let (m, n) = reciprocal_order(m, n);
    let p = build_program(m, n, l, r.clone())?;
    Ok(solve_lp(&p)?.value)
}

/// `d(r)` from greedy β elimination followed by the threshold problem.
pub fn dmt_via_greedy(m: u32, n: u32, l: u32, r: &Rational) -> Result<Rational> {
    let (m, n) = reciprocal_order(m, n);
    let p = build_program(m, n, l, r.clone())?;
    minimize_threshold(&greedy_reduce(&p)?, r)
}

/// Maps a physical triple onto the `(m, n, l)` roles used here.
pub fn triple_dims(t: ChannelTriple) -> (u32, u32, u32) {
    (t.n_t, t.n_r, t.n_s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn case_classification() {
        assert_eq!(classify_case(3, 3, 2), CaseId::A);
        assert_eq!(classify_case(4, 2, 3), CaseId::B);
        assert_eq!(classify_case(2, 2, 5), CaseId::C);
        // boundaries: n = l is A, l = m with n < l is B
        assert_eq!(classify_case(4, 3, 3), CaseId::A);
        assert_eq!(classify_case(3, 2, 3), CaseId::B);
    }

    #[test]
    fn program_coefficients() {
        let p = build_program(2, 2, 2, q(0, 1)).unwrap();
        assert_eq!(p.case, CaseId::A);
        assert_eq!(p.alpha_coeffs, vec![2, 1]);
        // m - n + l - j for j = 1, 2
        assert_eq!(p.beta_coeffs, vec![1, 0]);
        assert_eq!(p.plus_pairs, vec![(0, 1)]);
        assert_eq!(p.couple_range, 2);

        let p = build_program(3, 1, 2, q(1, 2)).unwrap();
        assert_eq!(p.case, CaseId::B);
        assert_eq!(p.alpha_coeffs, vec![1]);
        assert_eq!(p.beta_coeffs, vec![3, 2]);
        assert_eq!(p.plus_pairs, vec![(0, 1)]);
        assert_eq!(p.couple_range, 1);

        // case B beyond n + 1: l + m + 1 - 2j
        let p = build_program(5, 1, 4, q(0, 1)).unwrap();
        assert_eq!(p.beta_coeffs, vec![7, 6, 4, 2]);

        let p = build_program(2, 2, 5, q(0, 1)).unwrap();
        assert_eq!(p.case, CaseId::C);
        assert_eq!((p.alpha_dim, p.beta_dim), (2, 2));
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(build_program(2, 3, 2, q(0, 1)), Err(Error::Construction(_))));
        assert!(matches!(build_program(0, 0, 2, q(0, 1)), Err(Error::Construction(_))));
    }

    #[test]
    fn lp_examples() {
        let p = build_program(2, 2, 2, q(0, 1)).unwrap();
        let opt = solve_lp(&p).unwrap();
        assert_eq!(opt.value, q(3, 1));
        assert!(p.is_feasible(&opt.alpha, &opt.beta));
        assert_eq!(p.epsilon(&opt.alpha, &opt.beta), opt.value);

        let p = build_program(2, 2, 2, q(2, 1)).unwrap();
        assert_eq!(solve_lp(&p).unwrap().value, q(0, 1));
        let p = build_program(2, 2, 2, q(1, 2)).unwrap();
        assert_eq!(solve_lp(&p).unwrap().value, q(2, 1));

        let p = build_program(2, 2, 2, q(-1, 4)).unwrap();
        assert!(matches!(solve_lp(&p), Err(Error::Domain(_))));
    }

    #[test]
    fn greedy_examples() {
        let p = build_program(2, 2, 2, q(0, 1)).unwrap();
        let ro = greedy_reduce(&p).unwrap();
        assert_eq!(ro.coeffs, vec![2, 1]);
        assert_eq!(ro.beta_at_zero, vec![true, false]);
        for r in [q(0, 1), q(1, 1), q(2, 1)] {
            let lp = solve_lp(&build_program(2, 2, 2, r.clone()).unwrap()).unwrap();
            assert_eq!(minimize_threshold(&ro, &r).unwrap(), lp.value);
        }

        let ro = greedy_reduce(&build_program(1, 1, 1, q(0, 1)).unwrap()).unwrap();
        assert_eq!(ro.coeffs, vec![1]);

        // (m,n,l) = (4,2,3), case B: d(k) = (3-k)(2-k) - floor(((2-1-k)^+)^2/4)
        let p = build_program(4, 2, 3, q(0, 1)).unwrap();
        let ro = greedy_reduce(&p).unwrap();
        for (k, d) in [(0, 6), (1, 2), (2, 0)] {
            assert_eq!(minimize_threshold(&ro, &q(k, 1)).unwrap(), q(d, 1));
        }
    }

    #[test]
    fn threshold_examples() {
        let ro = ReducedObjective {
            coeffs: vec![5],
            passes: vec![0],
            final_beta_coeffs: vec![],
            beta_at_zero: vec![],
        };
        assert_eq!(minimize_threshold(&ro, &q(1, 2)).unwrap(), q(5, 2));
        assert_eq!(minimize_threshold(&ro, &q(1, 1)).unwrap(), q(0, 1));
        assert!(minimize_threshold(&ro, &q(3, 2)).is_err());
        assert!(minimize_threshold(&ro, &q(-1, 2)).is_err());
    }

    #[test]
    fn via_routes() {
        for (m, n, l) in [(2, 3, 4), (3, 2, 4), (4, 2, 3), (2, 4, 3), (3, 4, 2), (4, 3, 2)] {
            assert_eq!(dmt_via_lp(m, n, l, &q(1, 1)).unwrap(), q(2, 1));
        }
        assert_eq!(dmt_via_lp(1, 1, 1, &q(0, 1)).unwrap(), q(1, 1));
        assert_eq!(dmt_via_lp(5, 5, 1, &q(0, 1)).unwrap(), q(5, 1));
        assert_eq!(dmt_via_greedy(5, 5, 1, &q(0, 1)).unwrap(), q(5, 1));
    }
}
