//! Dense two-phase simplex over exact rationals with Bland's anti-cycling rule.
//!
//! Sized for the outage-exponent programs (a few dozen variables); not a
//! general LP library.

use num_traits::{One, Signed, Zero};

use crate::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub(crate) struct Constraint {
    pub terms: Vec<(usize, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
}

/// `minimize c.x` subject to the constraints and `x >= 0`.
#[derive(Debug, Clone)]
pub(crate) struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<Rational>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum LpFailure {
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub(crate) struct LpSolution {
    pub value: Rational,
    pub x: Vec<Rational>,
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    /// Reduced-cost row; last entry holds minus the objective value.
    cost: Vec<Rational>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn rhs(&self) -> usize {
        self.width - 1
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let inv = Rational::one() / &self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            if !v.is_zero() {
                *v *= &inv;
            }
        }
        let pivot_row = self.rows[row].clone();
        let nz: Vec<usize> = (0..self.width).filter(|&j| !pivot_row[j].is_zero()).collect();
        for (r, other) in self.rows.iter_mut().enumerate() {
            if r == row || other[col].is_zero() {
                continue;
            }
            let factor = other[col].clone();
            for &j in &nz {
                other[j] -= &factor * &pivot_row[j];
            }
        }
        if !self.cost[col].is_zero() {
            let factor = self.cost[col].clone();
            for &j in &nz {
                self.cost[j] -= &factor * &pivot_row[j];
            }
        }
        self.basis[row] = col;
    }

    /// Runs Bland's-rule iterations over the allowed entering columns.
    fn optimize(&mut self, allowed: &[bool]) -> Result<(), LpFailure> {
        let rhs = self.rhs();
        loop {
            let entering = (0..rhs).find(|&j| allowed[j] && self.cost[j].is_negative());
            let Some(col) = entering else {
                return Ok(());
            };
            let mut best: Option<(usize, Rational)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                if !row[col].is_positive() {
                    continue;
                }
                let ratio = &row[rhs] / &row[col];
                let better = match &best {
                    None => true,
                    Some((br, bv)) => {
                        ratio < *bv || (ratio == *bv && self.basis[r] < self.basis[*br])
                    }
                };
                if better {
                    best = Some((r, ratio));
                }
            }
            match best {
                Some((row, _)) => self.pivot(row, col),
                None => return Err(LpFailure::Unbounded),
            }
        }
    }

    fn load_cost(&mut self, costs: &[Rational]) {
        self.cost = costs.to_vec();
        self.cost.resize(self.width, Rational::zero());
        for r in 0..self.rows.len() {
            let b = self.basis[r];
            if self.cost[b].is_zero() {
                continue;
            }
            let factor = self.cost[b].clone();
            for j in 0..self.width {
                if !self.rows[r][j].is_zero() {
                    let delta = &factor * &self.rows[r][j];
                    self.cost[j] -= delta;
                }
            }
        }
    }
}

pub(crate) fn solve(lp: &LinearProgram) -> Result<LpSolution, LpFailure> {
    let n = lp.num_vars;
    let m = lp.constraints.len();

    // Normalize to non-negative right-hand sides.
    let normalized: Vec<(Vec<(usize, Rational)>, Relation, Rational)> = lp
        .constraints
        .iter()
        .map(|c| {
            if c.rhs.is_negative() {
                let terms = c.terms.iter().map(|(j, v)| (*j, -v.clone())).collect();
                let rel = match c.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                (terms, rel, -c.rhs.clone())
            } else {
                (c.terms.clone(), c.relation, c.rhs.clone())
            }
        })
        .collect();

    let num_slack = normalized.iter().filter(|c| c.1 != Relation::Eq).count();
    let num_art = normalized.iter().filter(|c| c.1 != Relation::Le).count();
    let art_start = n + num_slack;
    let width = n + num_slack + num_art + 1;

    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let (mut next_slack, mut next_art) = (n, art_start);
    for (terms, rel, rhs) in &normalized {
        let mut row = vec![Rational::zero(); width];
        for (j, v) in terms {
            row[*j] += v;
        }
        row[width - 1] = rhs.clone();
        match rel {
            Relation::Le => {
                row[next_slack] = Rational::one();
                basis.push(next_slack);
                next_slack += 1;
            }
            Relation::Ge => {
                row[next_slack] = -Rational::one();
                next_slack += 1;
                row[next_art] = Rational::one();
                basis.push(next_art);
                next_art += 1;
            }
            Relation::Eq => {
                row[next_art] = Rational::one();
                basis.push(next_art);
                next_art += 1;
            }
        }
        rows.push(row);
    }

    let mut t = Tableau {
        rows,
        cost: Vec::new(),
        basis,
        width,
    };

    if num_art > 0 {
        let mut phase1 = vec![Rational::zero(); width - 1];
        for c in phase1.iter_mut().skip(art_start) {
            *c = Rational::one();
        }
        t.load_cost(&phase1);
        let all = vec![true; width - 1];
        t.optimize(&all).expect("phase one is bounded below by zero");
        if !t.cost[width - 1].is_zero() {
            return Err(LpFailure::Infeasible);
        }
        // Drive zero-valued artificials out of the basis; drop redundant rows.
        let mut r = 0;
        while r < t.rows.len() {
            if t.basis[r] >= art_start {
                match (0..art_start).find(|&j| !t.rows[r][j].is_zero()) {
                    Some(col) => t.pivot(r, col),
                    None => {
                        t.rows.remove(r);
                        t.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
    }

    let allowed: Vec<bool> = (0..width - 1).map(|j| j < art_start).collect();
    t.load_cost(&lp.objective);
    t.optimize(&allowed)?;

    let mut x = vec![Rational::zero(); n];
    for (r, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rows[r][width - 1].clone();
        }
    }
    let value = lp
        .objective
        .iter()
        .zip(&x)
        .fold(Rational::zero(), |acc, (c, v)| acc + c * v);
    Ok(LpSolution { value, x })
}
