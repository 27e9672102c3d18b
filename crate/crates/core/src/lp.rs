//! Small dense two-phase simplex over exact rationals, Bland's rule.
//!
//! Only used for the per-phase derivative systems, which have a few dozen
//! variables at most, so there is no attempt at sparsity or warm starts.

use num_traits::{Signed, Zero};

use crate::scalar::{one, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal { x: Vec<Rational>, value: Rational },
    Infeasible,
    Unbounded,
}

/// `maximize objective·x` subject to the rows and `x >= 0`.
#[derive(Clone, Debug, Default)]
pub struct Lp {
    vars: usize,
    rows: Vec<(Vec<(usize, Rational)>, Relation, Rational)>,
    objective: Vec<(usize, Rational)>,
}

impl Lp {
    pub fn new(vars: usize) -> Self {
        Lp { vars, rows: Vec::new(), objective: Vec::new() }
    }

    pub fn constraint(&mut self, coeffs: Vec<(usize, Rational)>, rel: Relation, rhs: Rational) {
        debug_assert!(coeffs.iter().all(|(j, _)| *j < self.vars));
        self.rows.push((coeffs, rel, rhs));
    }

    pub fn maximize(&mut self, coeffs: Vec<(usize, Rational)>) {
        self.objective = coeffs;
    }

    pub fn solve(&self) -> LpOutcome {
        Tableau::build(self).run(self)
    }
}

struct Tableau {
    t: Vec<Vec<Rational>>, // rows × (cols + 1), last column is the right-hand side
    basis: Vec<usize>,
    cols: usize,
    artificial_from: usize,
}

impl Tableau {
    fn build(lp: &Lp) -> Tableau {
        let m = lp.rows.len();
        let slack_count = lp.rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let art_count = lp
            .rows
            .iter()
            .filter(|(_, rel, rhs)| {
                let flipped = rhs.is_negative();
                match rel {
                    Relation::Eq => true,
                    Relation::Le => flipped,
                    Relation::Ge => !flipped,
                }
            })
            .count();
        let artificial_from = lp.vars + slack_count;
        let cols = artificial_from + art_count;
        let mut t = vec![vec![Rational::zero(); cols + 1]; m];
        let mut basis = vec![0; m];
        let (mut next_slack, mut next_art) = (lp.vars, artificial_from);
        for (i, (coeffs, rel, rhs)) in lp.rows.iter().enumerate() {
            let flip = rhs.is_negative();
            let sign = if flip { -one() } else { one() };
            for (j, a) in coeffs {
                t[i][*j] += a * &sign;
            }
            t[i][cols] = rhs * &sign;
            let rel = match (rel, flip) {
                (Relation::Le, true) => Relation::Ge,
                (Relation::Ge, true) => Relation::Le,
                (r, _) => *r,
            };
            match rel {
                Relation::Le => {
                    t[i][next_slack] = one();
                    basis[i] = next_slack;
                    next_slack += 1;
                }
                Relation::Ge => {
                    t[i][next_slack] = -one();
                    next_slack += 1;
                    t[i][next_art] = one();
                    basis[i] = next_art;
                    next_art += 1;
                }
                Relation::Eq => {
                    t[i][next_art] = one();
                    basis[i] = next_art;
                    next_art += 1;
                }
            }
        }
        Tableau { t, basis, cols, artificial_from }
    }

    fn pivot(&mut self, r: usize, c: usize, obj: &mut [Rational]) {
        let p = self.t[r][c].clone();
        for v in self.t[r].iter_mut() {
            *v /= &p;
        }
        let row = self.t[r].clone();
        for (i, other) in self.t.iter_mut().enumerate() {
            if i == r || other[c].is_zero() {
                continue;
            }
            let f = other[c].clone();
            for (v, rv) in other.iter_mut().zip(&row) {
                if !rv.is_zero() {
                    *v -= &f * rv;
                }
            }
        }
        if !obj[c].is_zero() {
            let f = obj[c].clone();
            for (v, rv) in obj.iter_mut().zip(&row) {
                if !rv.is_zero() {
                    *v -= &f * rv;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Reduced-cost row for a cost vector; the last entry is minus the
    /// current objective value.
    fn objective_row(&self, cost: &[Rational]) -> Vec<Rational> {
        let mut obj: Vec<Rational> = cost.to_vec();
        obj.push(Rational::zero());
        for (i, &b) in self.basis.iter().enumerate() {
            if cost[b].is_zero() {
                continue;
            }
            let cb = cost[b].clone();
            for (v, tv) in obj.iter_mut().zip(&self.t[i]) {
                *v -= &cb * tv;
            }
        }
        obj
    }

    /// Returns `false` when unbounded.
    fn optimize(&mut self, obj: &mut [Rational], allowed: usize) -> bool {
        loop {
            let Some(c) = (0..allowed).find(|&j| obj[j].is_positive()) else {
                return true;
            };
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.t.len() {
                if !self.t[i][c].is_positive() {
                    continue;
                }
                let ratio = &self.t[i][self.cols] / &self.t[i][c];
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, c, obj),
                None => return false,
            }
        }
    }

    fn run(mut self, lp: &Lp) -> LpOutcome {
        let cols = self.cols;
        if self.artificial_from < cols {
            let mut cost = vec![Rational::zero(); cols];
            for c in cost.iter_mut().skip(self.artificial_from) {
                *c = -one();
            }
            let mut obj = self.objective_row(&cost);
            self.optimize(&mut obj, cols);
            // obj[cols] holds minus the phase-one value
            if !obj[cols].is_zero() {
                return LpOutcome::Infeasible;
            }
            // drive artificial variables out of the basis
            let mut i = 0;
            while i < self.t.len() {
                if self.basis[i] >= self.artificial_from {
                    match (0..self.artificial_from).find(|&j| !self.t[i][j].is_zero()) {
                        Some(j) => {
                            let mut dummy = vec![Rational::zero(); cols + 1];
                            self.pivot(i, j, &mut dummy);
                        }
                        None => {
                            self.t.remove(i);
                            self.basis.remove(i);
                            continue;
                        }
                    }
                }
                i += 1;
            }
        }
        let mut cost = vec![Rational::zero(); cols];
        for (j, c) in &lp.objective {
            cost[*j] += c;
        }
        let mut obj = self.objective_row(&cost);
        if !self.optimize(&mut obj, self.artificial_from) {
            return LpOutcome::Unbounded;
        }
        let mut x = vec![Rational::zero(); lp.vars];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < lp.vars {
                x[b] = self.t[i][cols].clone();
            }
        }
        let value = -obj[cols].clone();
        LpOutcome::Optimal { x, value }
    }
}
