//! Quaternionic contact structures on Lie frames.
//!
//! The frame `e_1..e_{4n+3}` is orthonormal, `H = span(e_1..e_{4n})`, and the
//! Reeb fields are `ξ_s = e_{4n+s}` with contact forms `η_s = e^{4n+s}`.
//! Matrices of endomorphisms act on columns: `I_s e_b = Σ_c I_s[c][b] e_c`.
//! Bilinear forms are matrices `b[a][b] = b(e_a, e_b)`.

use num_traits::{One, Zero};
use thiserror::Error;

use crate::scalar::{Rational, Scalar};
use crate::structure::LieFrame;
use crate::tensor::Mat;

/// Cyclic permutations `(i, j, k)` of `(0, 1, 2)`.
pub const CYCLIC: [(usize, usize, usize); 3] = [(0, 1, 2), (1, 2, 0), (2, 0, 1)];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QcError {
    #[error("quaternionic triple is invalid: {0}")]
    Triple(String),
    /// Indices are 1-based.
    #[error("compatibility fails at (s={s}, a={a}, b={b}): dη_s(e_a,e_b) = {found}, 2ω_s(e_a,e_b) = {expected}")]
    Compatibility { s: usize, a: usize, b: usize, found: Rational, expected: Rational },
    /// Indices are 1-based.
    #[error("Reeb condition fails: dη_{k}(ξ_{s}, e_{x}) = {lhs}, expected {rhs}")]
    Reeb { s: usize, k: usize, x: usize, lhs: Rational, rhs: Rational },
}

/// The standard triple, block-diagonal in 4×4 quaternionic blocks:
/// `I₁: e₁↦e₂, e₃↦e₄`, `I₂: e₁↦e₃, e₄↦e₂`, `I₃: e₁↦e₄, e₂↦e₃`.
pub fn standard_triple<S: Scalar>(n: usize) -> [Mat<S>; 3] {
    // (image index, sign) of e_b for b = 0..4
    const MAPS: [[(usize, i64); 4]; 3] = [
        [(1, 1), (0, -1), (3, 1), (2, -1)],
        [(2, 1), (3, -1), (0, -1), (1, 1)],
        [(3, 1), (2, 1), (1, -1), (0, -1)],
    ];
    std::array::from_fn(|s| {
        let mut j = Mat::zeros(4 * n);
        for blk in 0..n {
            for (b, &(c, sg)) in MAPS[s].iter().enumerate() {
                j.set(4 * blk + c, 4 * blk + b, S::from_i64(sg));
            }
        }
        j
    })
}

/// A validated qc structure on a Lie frame.
#[derive(Clone, Debug)]
pub struct QcStructure<S> {
    pub name: String,
    pub frame: LieFrame,
    /// Exact triple, kept for structure transformations.
    pub triple_exact: [Mat<Rational>; 3],
    pub n: usize,
    /// `4n`, the horizontal dimension.
    pub m: usize,
    /// `4n + 3`, the full dimension.
    pub d: usize,
    pub tol: f64,
    c: Vec<S>,
    triple: [Mat<S>; 3],
    triple_t: [Mat<S>; 3],
    omega: [Mat<S>; 3],
    sparse: [Vec<Vec<(usize, S)>>; 3],
}

/// Validate a frame against a triple (the standard one by default) and
/// assemble the structure in scalar type `S`.
pub fn build_qc<S: Scalar>(
    name: &str,
    frame: LieFrame,
    triple: Option<[Mat<Rational>; 3]>,
    tol: f64,
) -> Result<QcStructure<S>, QcError> {
    let n = frame.n;
    let (m, d) = (4 * n, 4 * n + 3);
    let tx = triple.unwrap_or_else(|| standard_triple::<Rational>(n));
    check_triple(&tx, m)?;
    // ω_s(e_a, e_b) = g(I_s e_a, e_b) = I_s[b][a]
    for s in 0..3 {
        for a in 0..m {
            for b in 0..m {
                let found = -frame.c(m + s, a, b).clone();
                let expected = tx[s].get(b, a).clone() * Rational::from_i64(2);
                if found != expected {
                    return Err(QcError::Compatibility { s: s + 1, a: a + 1, b: b + 1, found, expected });
                }
            }
        }
    }
    // dη_k(ξ_s, X) = −c^{m+k}_{m+s,X}: zero for s = k, antisymmetric in (s, k) otherwise
    for s in 0..3 {
        for k in 0..3 {
            for x in 0..m {
                let lhs = -frame.c(m + k, m + s, x).clone();
                let rhs = if s == k { Rational::zero() } else { frame.c(m + s, m + k, x).clone() };
                if lhs != rhs {
                    return Err(QcError::Reeb { s: s + 1, k: k + 1, x: x + 1, lhs, rhs });
                }
            }
        }
    }
    let mut c = Vec::with_capacity(d * d * d);
    for k in 0..d {
        for i in 0..d {
            for j in 0..d {
                c.push(S::from_rational(frame.c(k, i, j)));
            }
        }
    }
    let triple: [Mat<S>; 3] = std::array::from_fn(|s| Mat::from_fn(m, |r, col| S::from_rational(tx[s].get(r, col))));
    let triple_t = std::array::from_fn(|s| triple[s].transpose());
    let omega = std::array::from_fn(|s| triple[s].transpose());
    let sparse = std::array::from_fn(|s| {
        (0..m)
            .map(|a| (0..m).filter(|&r| !triple[s].get(r, a).is_zero()).map(|r| (r, triple[s].get(r, a).clone())).collect())
            .collect()
    });
    Ok(QcStructure {
        name: name.to_string(),
        frame,
        triple_exact: tx,
        n,
        m,
        d,
        tol,
        c,
        triple,
        triple_t,
        omega,
        sparse,
    })
}

fn check_triple(t: &[Mat<Rational>; 3], m: usize) -> Result<(), QcError> {
    let id: Mat<Rational> = Mat::identity(m);
    let neg = id.scale(&-Rational::one());
    for (s, j) in t.iter().enumerate() {
        if j.dim() != m {
            return Err(QcError::Triple(format!("I_{} is not {m}×{m}", s + 1)));
        }
        if j.mul(j) != neg {
            return Err(QcError::Triple(format!("I_{}² ≠ −Id", s + 1)));
        }
        if j.transpose() != j.scale(&-Rational::one()) {
            return Err(QcError::Triple(format!("I_{} is not skew (g-orthogonal)", s + 1)));
        }
    }
    if t[0].mul(&t[1]) != t[2] || t[1].mul(&t[0]) != t[2].scale(&-Rational::one()) {
        return Err(QcError::Triple("I₁I₂ = I₃ = −I₂I₁ fails".into()));
    }
    Ok(())
}

impl<S: Scalar> QcStructure<S> {
    /// `c^k_{ij}` (0-based).
    #[inline]
    pub fn c(&self, k: usize, i: usize, j: usize) -> &S {
        &self.c[(k * self.d + i) * self.d + j]
    }

    pub fn triple(&self) -> &[Mat<S>; 3] {
        &self.triple
    }

    pub fn j(&self, s: usize) -> &Mat<S> {
        &self.triple[s]
    }

    /// `ω_s` as a bilinear form.
    pub fn omega(&self, s: usize) -> &Mat<S> {
        &self.omega[s]
    }

    /// Nonzero components `(c, I_s[c][a])` of `I_s e_a`.
    pub fn iv(&self, s: usize, a: usize) -> &[(usize, S)] {
        &self.sparse[s][a]
    }

    pub fn g(&self) -> Mat<S> {
        Mat::identity(self.m)
    }

    /// `(X, Y) ↦ b(I_s X, Y)`.
    pub fn form_ix(&self, b: &Mat<S>, s: usize) -> Mat<S> {
        self.triple_t[s].mul(b)
    }

    /// `(X, Y) ↦ b(X, I_s Y)`.
    pub fn form_iy(&self, b: &Mat<S>, s: usize) -> Mat<S> {
        b.mul(&self.triple[s])
    }

    /// `(X, Y) ↦ b(I_s X, I_t Y)`.
    pub fn form_ii(&self, b: &Mat<S>, s: usize, t: usize) -> Mat<S> {
        self.triple_t[s].mul(b).mul(&self.triple[t])
    }

    /// Casimir operator `(†b)(X,Y) = Σ_s b(I_sX, I_sY)`.
    pub fn casimir(&self, b: &Mat<S>) -> Mat<S> {
        let mut out = Mat::zeros(self.m);
        for s in 0..3 {
            out = out.add(&self.form_ii(b, s, s));
        }
        out
    }

    /// `(b_[3], b_[−1]) = ((b + †b)/4, (3b − †b)/4)`.
    pub fn project_3_minus1(&self, b: &Mat<S>) -> (Mat<S>, Mat<S>) {
        let cb = self.casimir(b);
        let q = S::ratio(1, 4);
        let p3 = b.add(&cb).scale(&q);
        let pm1 = b.scale(&S::from_i64(3)).sub(&cb).scale(&q);
        (p3, pm1)
    }

    /// Zero test honouring the scalar mode.
    pub fn is_zero(&self, v: &S, scale: f64) -> bool {
        crate::residual::is_zero(v, scale, self.tol)
    }

    pub fn mat_is_zero(&self, a: &Mat<S>) -> bool {
        let scale = a.max_abs();
        a.data().iter().all(|v| self.is_zero(v, scale.max(1.0)) || (!S::EXACT && scale <= self.tol))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;
    use crate::scalar::rat;
    use crate::structure::{parse, to_lie_frame};
    use proptest::prelude::*;

    type Q = Rational;

    fn load(text: &str) -> Result<QcStructure<Q>, QcError> {
        let sf = parse(text).unwrap();
        build_qc(&sf.name, to_lie_frame(&sf).unwrap(), None, 0.0)
    }

    #[test]
    fn omega1_is_e12_plus_e34() {
        let t = standard_triple::<Q>(1);
        let om = t[0].transpose();
        for a in 0..4 {
            for b in 0..4 {
                let want = match (a, b) {
                    (0, 1) | (2, 3) => 1,
                    (1, 0) | (3, 2) => -1,
                    _ => 0,
                };
                assert_eq!(*om.get(a, b), Q::from_i64(want), "({a},{b})");
            }
        }
    }

    #[test]
    fn quaternion_relations() {
        let t = standard_triple::<Q>(1);
        // I₁I₂e₁ = I₃e₁ = e₄
        let prod = t[0].mul(&t[1]);
        assert_eq!(*prod.get(3, 0), Q::one());
        assert_eq!(*t[2].get(3, 0), Q::one());
        let t2 = standard_triple::<Q>(2);
        let neg: Mat<Q> = Mat::identity(8).scale(&-Q::one());
        for j in &t2 {
            assert_eq!(j.mul(j), neg);
        }
        assert!(check_triple(&t2, 8).is_ok());
    }

    #[test]
    fn builtins_are_valid_qc_structures() {
        for b in builtins::ALL {
            let qc = load(b.text).unwrap();
            // ω_s(I_sX, I_sY) = ω_s(X, Y)
            for s in 0..3 {
                assert_eq!(qc.form_ii(qc.omega(s), s, s), *qc.omega(s));
            }
        }
    }

    #[test]
    fn changed_heisenberg_coefficient_fails_compatibility() {
        let text = builtins::HEISENBERG_N1.replace("de[5] = 2 e[1,2]", "de[5] = 3 e[1,2]");
        match load(&text) {
            Err(QcError::Compatibility { s: 1, a: 1, b: 2, found, expected }) => {
                assert_eq!(found, rat(3, 1));
                assert_eq!(expected, rat(2, 1));
            }
            other => panic!("expected a compatibility error, got {other:?}"),
        }
    }

    #[test]
    fn reeb_violation_is_rejected() {
        // ξ₁ ⌟ dη₁ has a horizontal component; the de[2] line keeps Jacobi intact
        let text = builtins::HEISENBERG_N1.replace("de[5] = 2 e[1,2] + 2 e[3,4]", "de[2] = -e[3,4]\nde[5] = 2 e[1,2] + 2 e[3,4] + e[1,5]");
        assert!(matches!(load(&text), Err(QcError::Reeb { s: 1, k: 1, x: 1, .. })));
    }

    #[test]
    fn bad_triple_is_rejected() {
        let sf = parse(builtins::HEISENBERG_N1).unwrap();
        let mut t = standard_triple::<Q>(1);
        t.swap(0, 1);
        assert!(matches!(build_qc::<Q>("h", to_lie_frame(&sf).unwrap(), Some(t), 0.0), Err(QcError::Triple(_))));
    }

    #[test]
    fn casimir_spectrum_on_g_and_omega() {
        let qc = load(builtins::HEISENBERG_N2).unwrap();
        let g = qc.g();
        assert_eq!(qc.casimir(&g), g.scale(&Q::from_i64(3)));
        for s in 0..3 {
            let om = qc.omega(s).clone();
            assert_eq!(qc.casimir(&om), om.scale(&-Q::one()));
            let (p3, pm1) = qc.project_3_minus1(&om);
            assert!(p3.is_zero());
            assert_eq!(pm1, om);
        }
        let (p3, pm1) = qc.project_3_minus1(&g);
        assert_eq!(p3, g);
        assert!(pm1.is_zero());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]
        #[test]
        fn projector_is_complete_and_idempotent(entries in proptest::collection::vec((-9i64..=9, 1i64..=5), 16)) {
            let qc = load(builtins::G1).unwrap();
            let b = Mat::from_fn(4, |r, c| { let (p, q) = entries[4 * r + c]; rat(p, q) });
            let (p3, pm1) = qc.project_3_minus1(&b);
            prop_assert_eq!(p3.add(&pm1), b);
            prop_assert_eq!(qc.casimir(&p3), p3.scale(&Q::from_i64(3)));
            prop_assert_eq!(qc.casimir(&pm1), pm1.scale(&-Q::one()));
            prop_assert_eq!(qc.project_3_minus1(&p3).0, p3.clone());
            prop_assert_eq!(qc.project_3_minus1(&pm1).1, pm1.clone());
        }
    }
}
