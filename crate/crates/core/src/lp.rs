//! Small dense two-phase simplex over exact rationals (Bland's rule).
//!
//! Only used for certification and cross-checks on small instances, so the
//! tableau is dense and nothing is clever.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug)]
pub struct LinearProgram {
    n: usize,
    free: Vec<bool>,
    objective: Vec<BigRational>,
    rows: Vec<(Vec<BigRational>, Relation, BigRational)>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { value: BigRational, point: Vec<BigRational> },
    Infeasible,
    Unbounded,
}

impl LinearProgram {
    /// `n` variables, nonnegative unless marked free; objective defaults to 0.
    pub fn new(n: usize) -> Self {
        Self { n, free: vec![false; n], objective: vec![BigRational::zero(); n], rows: Vec::new() }
    }

    pub fn set_free(&mut self, k: usize) {
        self.free[k] = true;
    }

    pub fn maximize(&mut self, c: Vec<BigRational>) {
        assert_eq!(c.len(), self.n);
        self.objective = c;
    }

    pub fn add(&mut self, coeffs: Vec<BigRational>, rel: Relation, rhs: BigRational) {
        assert_eq!(coeffs.len(), self.n);
        self.rows.push((coeffs, rel, rhs));
    }
}

struct Tableau {
    a: Vec<Vec<BigRational>>,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.a[r][c].clone();
        for x in self.a[r].iter_mut() {
            *x /= &p;
        }
        let prow = self.a[r].clone();
        for (k, row) in self.a.iter_mut().enumerate() {
            if k != r && !row[c].is_zero() {
                let f = row[c].clone();
                for (x, y) in row.iter_mut().zip(&prow) {
                    if !y.is_zero() {
                        *x -= &f * y;
                    }
                }
            }
        }
        self.basis[r] = c;
    }

    /// Maximizes `obj · x` over the current basis, restricted to `allowed`
    /// columns. Returns false when unbounded.
    fn run(&mut self, obj: &[BigRational], allowed: usize) -> bool {
        let rhs = self.a.first().map_or(0, |r| r.len() - 1);
        loop {
            // Reduced cost c_j − c_B B⁻¹ A_j; enter on the first positive (Bland).
            let enter = (0..allowed).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let mut red = obj[j].clone();
                for (r, &b) in self.basis.iter().enumerate() {
                    if !self.a[r][j].is_zero() && !obj[b].is_zero() {
                        red -= &obj[b] * &self.a[r][j];
                    }
                }
                red.is_positive()
            });
            let Some(c) = enter else { return true };
            let mut leave: Option<(usize, BigRational)> = None;
            for r in 0..self.a.len() {
                if self.a[r][c].is_positive() {
                    let ratio = &self.a[r][rhs] / &self.a[r][c];
                    let better = match &leave {
                        None => true,
                        Some((lr, lv)) => ratio < *lv || (ratio == *lv && self.basis[r] < self.basis[*lr]),
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else { return false };
            self.pivot(r, c);
        }
    }
}

pub fn solve(lp: &LinearProgram) -> LpOutcome {
    // Column layout: split variables, then one slack/surplus per inequality,
    // then one artificial per row.
    let mut var_cols: Vec<(usize, Option<usize>)> = Vec::with_capacity(lp.n);
    let mut ncols = 0;
    for k in 0..lp.n {
        if lp.free[k] {
            var_cols.push((ncols, Some(ncols + 1)));
            ncols += 2;
        } else {
            var_cols.push((ncols, None));
            ncols += 1;
        }
    }
    let n_struct = ncols;
    let n_slack = lp.rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let n_rows = lp.rows.len();
    let art0 = n_struct + n_slack;
    let total = art0 + n_rows;
    let mut a = vec![vec![BigRational::zero(); total + 1]; n_rows];
    let mut slack = n_struct;
    for (r, (coeffs, rel, rhs)) in lp.rows.iter().enumerate() {
        let flip = rhs.is_negative();
        let sgn = |x: &BigRational| if flip { -x.clone() } else { x.clone() };
        for (k, x) in coeffs.iter().enumerate() {
            let (p, m) = var_cols[k];
            a[r][p] = sgn(x);
            if let Some(m) = m {
                a[r][m] = -sgn(x);
            }
        }
        match rel {
            Relation::Le => {
                a[r][slack] = if flip { -BigRational::one() } else { BigRational::one() };
                slack += 1;
            }
            Relation::Ge => {
                a[r][slack] = if flip { BigRational::one() } else { -BigRational::one() };
                slack += 1;
            }
            Relation::Eq => {}
        }
        a[r][art0 + r] = BigRational::one();
        a[r][total] = sgn(rhs);
    }
    let mut t = Tableau { a, basis: (art0..total).collect() };

    let mut phase1 = vec![BigRational::zero(); total];
    for x in phase1.iter_mut().skip(art0) {
        *x = -BigRational::one();
    }
    t.run(&phase1, total);
    let infeas: BigRational = (0..n_rows).filter(|&r| t.basis[r] >= art0).map(|r| t.a[r][total].clone()).sum();
    if infeas.is_positive() {
        return LpOutcome::Infeasible;
    }
    // Drive remaining (zero-valued) artificials out of the basis.
    let mut r = 0;
    while r < t.a.len() {
        if t.basis[r] >= art0 {
            match (0..art0).find(|&j| !t.a[r][j].is_zero()) {
                Some(j) => t.pivot(r, j),
                None => {
                    t.a.remove(r);
                    t.basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }
    for row in t.a.iter_mut() {
        for x in row.iter_mut().take(total).skip(art0) {
            *x = BigRational::zero();
        }
    }

    let mut obj = vec![BigRational::zero(); total];
    for (k, c) in lp.objective.iter().enumerate() {
        let (p, m) = var_cols[k];
        obj[p] = c.clone();
        if let Some(m) = m {
            obj[m] = -c.clone();
        }
    }
    if !t.run(&obj, art0) {
        return LpOutcome::Unbounded;
    }
    let mut raw = vec![BigRational::zero(); total];
    for (r, &b) in t.basis.iter().enumerate() {
        raw[b] = t.a[r][total].clone();
    }
    let point: Vec<BigRational> = var_cols
        .iter()
        .map(|&(p, m)| match m {
            Some(m) => &raw[p] - &raw[m],
            None => raw[p].clone(),
        })
        .collect();
    let value = lp.objective.iter().zip(&point).map(|(c, x)| c * x).sum();
    LpOutcome::Optimal { value, point }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn textbook_maximum() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → 36 at (2, 6).
        let mut lp = LinearProgram::new(2);
        lp.maximize(vec![q(3), q(5)]);
        lp.add(vec![q(1), q(0)], Relation::Le, q(4));
        lp.add(vec![q(0), q(2)], Relation::Le, q(12));
        lp.add(vec![q(3), q(2)], Relation::Le, q(18));
        assert_eq!(solve(&lp), LpOutcome::Optimal { value: q(36), point: vec![q(2), q(6)] });
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.add(vec![q(1)], Relation::Ge, q(2));
        lp.add(vec![q(1)], Relation::Le, q(1));
        assert_eq!(solve(&lp), LpOutcome::Infeasible);
        let mut lp = LinearProgram::new(1);
        lp.set_free(0);
        lp.maximize(vec![q(-1)]);
        assert_eq!(solve(&lp), LpOutcome::Unbounded);
    }

    #[test]
    fn free_variables_and_equalities() {
        // max −x − y with x + y = −3, x free, y free, x ≥ −5 → value 3.
        let mut lp = LinearProgram::new(2);
        lp.set_free(0);
        lp.set_free(1);
        lp.maximize(vec![q(-1), q(-1)]);
        lp.add(vec![q(1), q(1)], Relation::Eq, q(-3));
        lp.add(vec![q(1), q(0)], Relation::Ge, q(-5));
        match solve(&lp) {
            LpOutcome::Optimal { value, .. } => assert_eq!(value, q(3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(2);
        lp.maximize(vec![q(1), q(1)]);
        lp.add(vec![q(1), q(1)], Relation::Eq, q(2));
        lp.add(vec![q(2), q(2)], Relation::Eq, q(4));
        match solve(&lp) {
            LpOutcome::Optimal { value, .. } => assert_eq!(value, q(2)),
            other => panic!("{other:?}"),
        }
    }
}
