//! Gauss–Jordan elimination with rank certificates.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("inconsistent system: equation {row} reduces to 0 = nonzero (rank {rank})")]
    Inconsistent { rank: usize, row: usize },
    #[error("rank-deficient system: rank {rank} < {unknowns} unknowns (free columns {free:?})")]
    RankDeficient { rank: usize, unknowns: usize, free: Vec<usize> },
    #[error("system has {rows} matrix rows but {rhs} right-hand sides")]
    Shape { rows: usize, rhs: usize },
}

/// `matrix · x = rhs`, rows are equations, columns unknowns.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSystem<S> {
    pub cols: usize,
    pub matrix: Vec<Vec<S>>,
    pub rhs: Vec<S>,
}

/// A certified unique solution.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution<S> {
    pub x: Vec<S>,
    pub rank: usize,
}

impl<S: Scalar> LinearSystem<S> {
    pub fn new(cols: usize) -> Self {
        LinearSystem { cols, matrix: Vec::new(), rhs: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<S>, rhs: S) {
        assert_eq!(row.len(), self.cols, "equation width must equal the unknown count");
        self.matrix.push(row);
        self.rhs.push(rhs);
    }

    pub fn rows(&self) -> usize {
        self.matrix.len()
    }

    /// `matrix · x − rhs`.
    pub fn residual(&self, x: &[S]) -> Vec<S> {
        self.matrix
            .iter()
            .zip(&self.rhs)
            .map(|(row, b)| {
                let mut acc = S::zero();
                for (a, xi) in row.iter().zip(x) {
                    acc.add_mul(a, xi);
                }
                acc - b.clone()
            })
            .collect()
    }

    /// Solve exactly (or within `tol` in float mode).
    ///
    /// The pivot in each column is the candidate with the lowest
    /// [`Scalar::pivot_cost`]: the smallest numerator for rationals, the
    /// largest magnitude for floats. A unique solution is returned only when
    /// the rank equals the number of unknowns and the system is consistent.
    pub fn solve(&self, tol: f64) -> Result<Solution<S>, SolveError> {
        if self.matrix.len() != self.rhs.len() {
            return Err(SolveError::Shape { rows: self.matrix.len(), rhs: self.rhs.len() });
        }
        let rows = self.matrix.len();
        let cols = self.cols;
        let scale = self
            .matrix
            .iter()
            .flatten()
            .chain(&self.rhs)
            .map(|v| v.to_f64().abs())
            .fold(0.0, f64::max);
        let zero = |v: &S| v.is_zero() || (!S::EXACT && v.negligible(scale, tol));

        let mut a: Vec<Vec<S>> = self
            .matrix
            .iter()
            .zip(&self.rhs)
            .map(|(r, b)| {
                let mut r = r.clone();
                r.push(b.clone());
                r
            })
            .collect();
        let mut order: Vec<usize> = (0..rows).collect();
        let mut pivots = Vec::new();
        let mut free = Vec::new();
        let mut r = 0;
        for c in 0..cols {
            let best = (r..rows)
                .filter(|&i| !zero(&a[i][c]))
                .min_by(|&i, &j| a[i][c].pivot_cost().total_cmp(&a[j][c].pivot_cost()));
            let Some(p) = best else {
                free.push(c);
                continue;
            };
            a.swap(r, p);
            order.swap(r, p);
            let inv = S::one() / a[r][c].clone();
            for v in a[r].iter_mut() {
                *v *= &inv;
            }
            let pivot_row = a[r].clone();
            for (i, row) in a.iter_mut().enumerate() {
                if i == r || zero(&row[c]) {
                    continue;
                }
                let f = row[c].clone();
                for (k, pv) in pivot_row.iter().enumerate().skip(c) {
                    if !pv.is_zero() {
                        let d = f.mul_ref(pv);
                        row[k] -= &d;
                    }
                }
                if !S::EXACT {
                    row[c] = S::zero();
                }
            }
            pivots.push(c);
            r += 1;
            if r == rows {
                free.extend(c + 1..cols);
                break;
            }
        }
        let rank = pivots.len();
        if let Some(i) = (rank..rows).find(|&i| !zero(&a[i][cols])) {
            return Err(SolveError::Inconsistent { rank, row: order[i] });
        }
        if rank < cols {
            return Err(SolveError::RankDeficient { rank, unknowns: cols, free });
        }
        let mut x = vec![S::zero(); cols];
        for (i, &c) in pivots.iter().enumerate() {
            x[c] = a[i][cols].clone();
        }
        Ok(Solution { x, rank })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, Rational};
    use num_traits::Zero;
    use proptest::prelude::*;

    fn q(v: i64) -> Rational {
        Rational::from_i64(v)
    }

    #[test]
    fn identity_returns_rhs() {
        let mut s = LinearSystem::new(3);
        for i in 0..3 {
            s.push((0..3).map(|j| q((i == j) as i64)).collect(), rat(i as i64 + 1, 7));
        }
        let sol = s.solve(0.0).unwrap();
        assert_eq!(sol.x, vec![rat(1, 7), rat(2, 7), rat(3, 7)]);
        assert_eq!(sol.rank, 3);
    }

    #[test]
    fn two_by_two() {
        let mut s = LinearSystem::new(2);
        s.push(vec![q(1), q(1)], q(3));
        s.push(vec![q(1), q(-1)], q(1));
        assert_eq!(s.solve(0.0).unwrap().x, vec![q(2), q(1)]);
    }

    #[test]
    fn overdetermined_consistent_system_solves() {
        let mut s = LinearSystem::new(2);
        s.push(vec![q(1), q(1)], q(3));
        s.push(vec![q(1), q(-1)], q(1));
        s.push(vec![q(2), q(0)], q(4));
        assert_eq!(s.solve(0.0).unwrap().rank, 2);
    }

    #[test]
    fn inconsistency_is_reported() {
        let mut s = LinearSystem::new(2);
        s.push(vec![q(1), q(1)], q(3));
        s.push(vec![q(2), q(2)], q(5));
        assert!(matches!(s.solve(0.0), Err(SolveError::Inconsistent { rank: 1, .. })));
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let mut s = LinearSystem::new(3);
        s.push(vec![q(1), q(1), q(0)], q(3));
        s.push(vec![q(0), q(0), q(1)], q(1));
        assert_eq!(
            s.solve(0.0),
            Err(SolveError::RankDeficient { rank: 2, unknowns: 3, free: vec![1] })
        );
    }

    #[test]
    fn float_mode_solves_within_tolerance() {
        let mut s: LinearSystem<f64> = LinearSystem::new(2);
        s.push(vec![0.1, 0.2], 0.5);
        s.push(vec![0.3, -0.1], 0.1);
        let x = s.solve(1e-9).unwrap().x;
        assert!(s.residual(&x).iter().all(|r| r.abs() < 1e-12));
    }

    proptest! {
        #[test]
        fn solution_has_exact_zero_residual(
            entries in proptest::collection::vec(-6i64..=6, 16),
            xs in proptest::collection::vec(-9i64..=9, 4),
        ) {
            let mut s = LinearSystem::new(4);
            let x: Vec<Rational> = xs.iter().map(|&v| rat(v, 3)).collect();
            for r in 0..4 {
                let row: Vec<Rational> = (0..4).map(|c| q(entries[4 * r + c])).collect();
                let mut b = q(0);
                for (a, xi) in row.iter().zip(&x) {
                    b += a * xi;
                }
                s.push(row, b);
            }
            match s.solve(0.0) {
                Ok(sol) => {
                    prop_assert_eq!(&sol.x, &x);
                    prop_assert!(s.residual(&sol.x).iter().all(|r| r.is_zero()));
                }
                Err(SolveError::RankDeficient { .. }) => {}
                Err(e) => prop_assert!(false, "unexpected {e}"),
            }
        }
    }
}
