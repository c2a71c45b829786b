//! Dense two-phase primal simplex over exact rationals (Bland's rule).
//!
//! Free variables are split as `x = x⁺ - x⁻`. Only used on small systems.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{LinConstraint, LinTerm, Rel, Var};

#[derive(Clone, Debug)]
pub enum LpOutcome {
    Infeasible,
    Unbounded,
    Optimal {
        value: BigRational,
        point: BTreeMap<Var, BigRational>,
    },
}

struct Tableau {
    rows: Vec<Vec<BigRational>>,
    basis: Vec<usize>,
    ncols: usize,
    /// Reduced costs; the last slot holds `-z`.
    obj: Vec<BigRational>,
    blocked: Vec<bool>,
}

impl Tableau {
    fn rhs(&self, i: usize) -> &BigRational {
        &self.rows[i][self.ncols]
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let p = self.rows[r][j].clone();
        if !p.is_one() {
            for x in self.rows[r].iter_mut() {
                *x /= &p;
            }
        }
        let prow = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[j].is_zero() {
                continue;
            }
            let f = row[j].clone();
            for (x, y) in row.iter_mut().zip(prow.iter()) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
        }
        if !self.obj[j].is_zero() {
            let f = self.obj[j].clone();
            for (x, y) in self.obj.iter_mut().zip(prow.iter()) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
        }
        self.basis[r] = j;
    }

    fn set_objective(&mut self, cost: &[BigRational]) {
        let mut obj: Vec<BigRational> = cost.to_vec();
        obj.push(BigRational::zero());
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &cost[b];
            if cb.is_zero() {
                continue;
            }
            for (x, y) in obj.iter_mut().zip(self.rows[i].iter()) {
                *x -= cb * y;
            }
        }
        self.obj = obj;
    }

    /// Runs Bland-rule iterations; returns false if unbounded.
    fn optimize(&mut self) -> bool {
        loop {
            let entering =
                (0..self.ncols).find(|&j| !self.blocked[j] && self.obj[j].is_positive());
            let Some(j) = entering else {
                return true;
            };
            let mut best: Option<(usize, BigRational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][j];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs(i) / a;
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br || (ratio == br && self.basis[i] < self.basis[bi]) {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            match best {
                None => return false,
                Some((r, _)) => self.pivot(r, j),
            }
        }
    }

    fn value(&self) -> BigRational {
        -self.obj[self.ncols].clone()
    }

    fn column_values(&self) -> Vec<BigRational> {
        let mut y = vec![BigRational::zero(); self.ncols];
        for (i, &b) in self.basis.iter().enumerate() {
            y[b] = self.rhs(i).clone();
        }
        y
    }
}

/// Maximizes `objective` over the rational solutions of `constraints`.
/// With no objective this is a feasibility check returning some vertex.
pub fn maximize<'a>(
    constraints: impl IntoIterator<Item = &'a LinConstraint>,
    objective: Option<&LinTerm>,
) -> LpOutcome {
    let constraints: Vec<&LinConstraint> = constraints.into_iter().collect();
    if constraints.iter().any(|c| c.is_trivially_false()) {
        return LpOutcome::Infeasible;
    }
    let constraints: Vec<&LinConstraint> =
        constraints.into_iter().filter(|c| !c.is_ground()).collect();

    let mut varset: BTreeSet<Var> = constraints.iter().flat_map(|c| c.vars()).collect();
    if let Some(o) = objective {
        varset.extend(o.coeffs().keys().copied());
    }
    let vars: Vec<Var> = varset.into_iter().collect();
    let index: BTreeMap<Var, usize> = vars.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let n = vars.len();
    let n_slack = constraints.iter().filter(|c| c.rel() == Rel::Le).count();

    // Columns: x⁺/x⁻ pairs, slacks, then artificials (appended below).
    let mut rows: Vec<Vec<BigRational>> = Vec::with_capacity(constraints.len());
    let mut needs_art: Vec<bool> = Vec::new();
    let mut slack_basis: Vec<Option<usize>> = Vec::new();
    let mut slack_col = 2 * n;
    for c in &constraints {
        let mut row = vec![BigRational::zero(); 2 * n + n_slack];
        for (v, a) in c.coeffs() {
            let j = index[v];
            let a = BigRational::from_integer(a.clone());
            row[2 * j] = a.clone();
            row[2 * j + 1] = -a;
        }
        let mut b = BigRational::from_integer(-c.constant().clone());
        let mut slack = None;
        if c.rel() == Rel::Le {
            row[slack_col] = BigRational::one();
            slack = Some(slack_col);
            slack_col += 1;
        }
        if b.is_negative() {
            for x in row.iter_mut() {
                *x = -x.clone();
            }
            b = -b;
            slack = None;
        }
        row.push(b);
        needs_art.push(slack.is_none());
        slack_basis.push(slack);
        rows.push(row);
    }
    let n_art = needs_art.iter().filter(|x| **x).count();
    let ncols = 2 * n + n_slack + n_art;
    let art_start = 2 * n + n_slack;
    let mut basis = Vec::with_capacity(rows.len());
    let mut art = art_start;
    for (i, row) in rows.iter_mut().enumerate() {
        let rhs = row.pop().expect("rhs");
        row.extend(std::iter::repeat_n(BigRational::zero(), n_art));
        if needs_art[i] {
            row[art] = BigRational::one();
            basis.push(art);
            art += 1;
        } else {
            basis.push(slack_basis[i].expect("slack"));
        }
        row.push(rhs);
    }

    let mut tab = Tableau {
        rows,
        basis,
        ncols,
        obj: Vec::new(),
        blocked: vec![false; ncols],
    };

    if n_art > 0 {
        let mut cost = vec![BigRational::zero(); ncols];
        for c in cost.iter_mut().skip(art_start) {
            *c = -BigRational::one();
        }
        tab.set_objective(&cost);
        tab.optimize();
        if tab.value().is_negative() {
            return LpOutcome::Infeasible;
        }
        // Drive remaining (zero-valued) artificials out of the basis.
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] >= art_start {
                match (0..art_start).find(|&j| !tab.rows[i][j].is_zero()) {
                    Some(j) => {
                        tab.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        tab.rows.remove(i);
                        tab.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
        for b in tab.blocked.iter_mut().skip(art_start) {
            *b = true;
        }
    }

    let mut cost = vec![BigRational::zero(); ncols];
    let mut constant = BigRational::zero();
    if let Some(o) = objective {
        for (v, a) in o.coeffs() {
            let j = index[v];
            cost[2 * j] = a.clone();
            cost[2 * j + 1] = -a.clone();
        }
        constant = o.constant_part().clone();
    }
    tab.set_objective(&cost);
    if objective.is_some() && !tab.optimize() {
        return LpOutcome::Unbounded;
    }
    let y = tab.column_values();
    let point = vars
        .iter()
        .enumerate()
        .map(|(j, v)| (*v, &y[2 * j] - &y[2 * j + 1]))
        .collect();
    LpOutcome::Optimal {
        value: tab.value() + constant,
        point,
    }
}
