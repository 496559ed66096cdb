//! The Biquard connection of a left-invariant qc structure.
//!
//! Writing `Λ_A` for the matrix `Λ_A[c][b] = Γ^c_{Ab}` of `∇_{e_A}` on `H`,
//! the connection is determined by requiring `Λ_A ∈ sp(n) ⊕ sp(1)` for every
//! frame direction, a horizontal torsion `T(X,Y)|_H = 0`, and torsion
//! endomorphisms `T_{ξ_s} ⟂ sp(n) ⊕ sp(1)`. With `Λ_A = P + Σ_t λ_t I_t`
//! (`P ∈ sp(n)`), the sp(1)-connection forms are `α_t(A) = 2λ_t`.
//!
//! Covariant derivatives of invariant forms are algebraic:
//! `(∇_A P)(X, Y) = −P(Λ_A X, Y) − P(X, Λ_A Y)` (see [`nabla_form`]).

use thiserror::Error;

use crate::linsolve::{LinearSystem, SolveError};
use crate::qc::{QcStructure, CYCLIC};
use crate::residual::{self, sweep, Residual};
use crate::scalar::Scalar;
use crate::tensor::{Mat, Slot, Tensor};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BiquardError {
    #[error("sp(n) basis has dimension {found}, expected {expected}")]
    BasisDimension { found: usize, expected: usize },
    #[error("Biquard axioms unsolvable: {source} (check the wedge and bracket sign conventions of the input)")]
    Unsolvable {
        #[source]
        source: SolveError,
    },
    #[error("the three candidates for the torsion endomorphism u disagree")]
    UDisagree,
}

/// Basis of `sp(n) ⊕ sp(1) ⊂ gl(4n)`, pairwise orthogonal under `⟨P,Q⟩ = Σ P_ab Q_ab`.
#[derive(Clone, Debug)]
pub struct SpnSp1Basis<S> {
    pub sp_n: Vec<Mat<S>>,
    pub sp_1: [Mat<S>; 3],
}

impl<S: Scalar> SpnSp1Basis<S> {
    /// `sp_n` followed by `I₁, I₂, I₃`.
    pub fn all(&self) -> Vec<&Mat<S>> {
        self.sp_n.iter().chain(self.sp_1.iter()).collect()
    }

    pub fn len(&self) -> usize {
        self.sp_n.len() + 3
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Project elementary skew matrices onto the commutant of the triple,
/// `P ↦ (P − Σ_s I_s P I_s)/4`, and orthogonalize exactly.
pub fn build_spn_sp1_basis<S: Scalar>(qc: &QcStructure<S>) -> Result<SpnSp1Basis<S>, BiquardError> {
    let m = qc.m;
    let quarter = S::ratio(1, 4);
    let mut sp_n: Vec<Mat<S>> = Vec::new();
    for p in 0..m {
        for q in p + 1..m {
            let mut e = Mat::zeros(m);
            e.set(p, q, S::one());
            e.set(q, p, -S::one());
            let mut proj = e.clone();
            for s in 0..3 {
                proj = proj.sub(&qc.j(s).mul(&e).mul(qc.j(s)));
            }
            let mut v = proj.scale(&quarter);
            for b in &sp_n {
                let k = v.inner(b).div_ref(&b.inner(b));
                v = v.sub(&b.scale(&k));
            }
            if !qc.mat_is_zero(&v) {
                sp_n.push(v);
            }
        }
    }
    let expected = qc.n * (2 * qc.n + 1);
    if sp_n.len() != expected {
        return Err(BiquardError::BasisDimension { found: sp_n.len(), expected });
    }
    Ok(SpnSp1Basis { sp_n, sp_1: qc.triple().clone() })
}

/// Connection coefficients `Γ^C_{AB}` (`∇_{e_A} e_B = Γ^C_{AB} e_C`) and `α_s(e_A)`.
#[derive(Clone, Debug)]
pub struct Connection<S> {
    pub d: usize,
    pub m: usize,
    gamma: Vec<S>,
    pub alpha: [Vec<S>; 3],
    /// Rank certificate of the solved system.
    pub rank: usize,
    pub unknowns: usize,
    pub equations: usize,
}

impl<S: Scalar> Connection<S> {
    #[inline]
    pub fn gamma(&self, c: usize, a: usize, b: usize) -> &S {
        &self.gamma[(c * self.d + a) * self.d + b]
    }

    /// Build from raw coefficients (used for perturbation tests and rotations).
    pub fn from_parts(d: usize, m: usize, gamma: Vec<S>, alpha: [Vec<S>; 3]) -> Self {
        assert_eq!(gamma.len(), d * d * d);
        Connection { d, m, gamma, alpha, rank: 0, unknowns: 0, equations: 0 }
    }

    pub fn gamma_data(&self) -> &[S] {
        &self.gamma
    }

    /// `Λ_A` on the full frame, `[C][B] = Γ^C_{AB}`.
    pub fn lambda(&self, a: usize) -> Mat<S> {
        Mat::from_fn(self.d, |c, b| self.gamma(c, a, b).clone())
    }

    /// `Λ_A` restricted to `H`.
    pub fn lambda_h(&self, a: usize) -> Mat<S> {
        Mat::from_fn(self.m, |c, b| self.gamma(c, a, b).clone())
    }

    pub fn nonzero_count(&self) -> usize {
        self.gamma.iter().filter(|v| !v.is_zero()).count()
    }

    /// Largest `|Γ|`, used as the float-mode scale.
    pub fn scale(&self) -> f64 {
        self.gamma.iter().map(|v| v.to_f64().abs()).fold(1.0, f64::max)
    }
}

/// `(∇_{e_A} P)(X, Y) = −Σ_c Γ^c_{AX} P(c, Y) − Σ_c Γ^c_{AY} P(X, c)` on `H`.
pub fn nabla_form<S: Scalar>(conn: &Connection<S>, a: usize, p: &Mat<S>) -> Mat<S> {
    let l = conn.lambda_h(a);
    l.transpose().mul(p).add(&p.mul(&l)).scale(&-S::one())
}

/// Solve the Biquard axioms as one linear system over the coefficients of
/// every `Λ_A` in the `sp(n) ⊕ sp(1)` basis.
pub fn solve_biquard<S: Scalar>(qc: &QcStructure<S>, basis: &SpnSp1Basis<S>) -> Result<Connection<S>, BiquardError> {
    let (m, d) = (qc.m, qc.d);
    let elems = basis.all();
    let nb = elems.len();
    let mut sys = LinearSystem::new(d * nb);
    // horizontal torsion: Λ_a[c][b] − Λ_b[c][a] = c^c_{ab}
    for a in 0..m {
        for b in a + 1..m {
            for c in 0..m {
                let mut row = vec![S::zero(); d * nb];
                for (beta, e) in elems.iter().enumerate() {
                    row[a * nb + beta] = e.get(c, b).clone();
                    row[b * nb + beta] = -e.get(c, a).clone();
                }
                sys.push(row, qc.c(c, a, b).clone());
            }
        }
    }
    // vertical: ⟨Λ_{ξ_s} − C_s, B⟩ = 0 with C_s[c][a] = c^c_{ξ_s a}
    for s in 0..3 {
        let xs = m + s;
        let cs = Mat::from_fn(m, |c, a| qc.c(c, xs, a).clone());
        for be in &elems {
            let mut row = vec![S::zero(); d * nb];
            for (alpha, ea) in elems.iter().enumerate() {
                row[xs * nb + alpha] = ea.inner(be);
            }
            sys.push(row, cs.inner(be));
        }
    }
    let sol = sys.solve(qc.tol).map_err(|source| BiquardError::Unsolvable { source })?;
    let nsp = basis.sp_n.len();
    let mut gamma = vec![S::zero(); d * d * d];
    let mut alpha: [Vec<S>; 3] = std::array::from_fn(|_| vec![S::zero(); d]);
    for a in 0..d {
        let coef = &sol.x[a * nb..(a + 1) * nb];
        let mut lam = Mat::zeros(m);
        for (k, e) in elems.iter().enumerate() {
            if !coef[k].is_zero() {
                lam = lam.add(&e.scale(&coef[k]));
            }
        }
        for c in 0..m {
            for b in 0..m {
                gamma[(c * d + a) * d + b] = lam.get(c, b).clone();
            }
        }
        for t in 0..3 {
            alpha[t][a] = coef[nsp + t].clone() * S::from_i64(2);
        }
        // ∇_A ξ_i = −α_j(A) ξ_k + α_k(A) ξ_j
        for &(i, j, k) in &CYCLIC {
            gamma[((m + k) * d + a) * d + m + i] = -alpha[j][a].clone();
            gamma[((m + j) * d + a) * d + m + i] = alpha[k][a].clone();
        }
    }
    Ok(Connection { d, m, gamma, alpha, rank: sol.rank, unknowns: d * nb, equations: sys.rows() })
}

/// Exact residuals of every defining property of the connection.
pub fn verify_axioms<S: Scalar>(qc: &QcStructure<S>, conn: &Connection<S>, basis: &SpnSp1Basis<S>) -> Vec<Residual> {
    let (m, d, tol) = (qc.m, qc.d, qc.tol);
    let sc = conn.scale();
    let vert = |x: usize| x >= m;
    let torsion = |a: usize, b: usize, c: usize| {
        conn.gamma(c, a, b).clone() - conn.gamma(c, b, a).clone() - qc.c(c, a, b).clone()
    };
    let mut out = vec![
        sweep("metricity", &[d, d, d], sc, tol, |i| {
            conn.gamma(i[2], i[0], i[1]).clone() + conn.gamma(i[1], i[0], i[2]).clone()
        }),
        sweep("splitting", &[d, d, d], sc, tol, |i| {
            if vert(i[1]) != vert(i[2]) { conn.gamma(i[2], i[0], i[1]).clone() } else { S::zero() }
        }),
        sweep("nabla-I", &[d, 3, m, m], sc, tol, |i| {
            let (a, (ii, j, k)) = (i[0], CYCLIC[i[1]]);
            let l = conn.lambda_h(a);
            let lhs = l.commutator(qc.j(ii));
            let rhs = qc.j(k).scale(&-conn.alpha[j][a].clone()).add(&qc.j(j).scale(&conn.alpha[k][a]));
            lhs.get(i[2], i[3]).clone() - rhs.get(i[2], i[3]).clone()
        }),
        sweep("vertical-action", &[d, 3, 3], sc, tol, |i| {
            let (a, (ii, j, k)) = (i[0], CYCLIC[i[1]]);
            match i[2] {
                0 => conn.gamma(m + k, a, m + ii).clone() + conn.alpha[j][a].clone(),
                1 => conn.gamma(m + j, a, m + ii).clone() - conn.alpha[k][a].clone(),
                _ => conn.gamma(m + ii, a, m + ii).clone(),
            }
        }),
        sweep("horizontal-torsion", &[m, m, m], sc, tol, |i| torsion(i[0], i[1], i[2])),
    ];
    let elems = basis.all();
    out.push(sweep("torsion-endomorphism-orthogonality", &[3, elems.len()], sc, tol, |i| {
        let t = Mat::from_fn(m, |c, a| torsion(m + i[0], a, c));
        t.inner(elems[i[1]])
    }));
    out.push(sweep("vertical-torsion-of-xi", &[3, m, 3], sc, tol, |i| torsion(m + i[0], i[1], m + i[2])));
    out
}

/// Torsion of the Biquard connection and its decomposition.
#[derive(Clone, Debug)]
pub struct TorsionData<S> {
    /// `T(e_A, e_B)` has components `t_full[A, B, C]`.
    pub t_full: Tensor<S>,
    /// `T_{ξ_s}` as matrices `[c][a] = g(T(ξ_s, e_a), e_c)`.
    pub t_xi: [Mat<S>; 3],
    pub t0_xi: [Mat<S>; 3],
    pub b_xi: [Mat<S>; 3],
    pub u: Mat<S>,
    pub t0: Mat<S>,
    pub uu: Mat<S>,
}

impl<S: Scalar> TorsionData<S> {
    pub fn t(&self, a: usize, b: usize, c: usize) -> &S {
        self.t_full.at(&[a, b, c])
    }

    /// `T(ξ_i, ξ_j)` as a full-frame vector.
    pub fn t_vv(&self, i: usize, j: usize) -> Vec<S> {
        let m = self.u.dim();
        (0..m + 3).map(|c| self.t(m + i, m + j, c).clone()).collect()
    }
}

/// `T^C_{AB} = Γ^C_{AB} − Γ^C_{BA} − c^C_{AB}`, split into `T⁰`, `U`, `u`.
pub fn compute_torsion<S: Scalar>(qc: &QcStructure<S>, conn: &Connection<S>) -> Result<TorsionData<S>, BiquardError> {
    let (m, d) = (qc.m, qc.d);
    let t_full = Tensor::from_fn(&[Slot::FULL, Slot::FULL, Slot::FULL_UP], qc.n, |i| {
        conn.gamma(i[2], i[0], i[1]).clone() - conn.gamma(i[2], i[1], i[0]).clone() - qc.c(i[2], i[0], i[1]).clone()
    });
    debug_assert_eq!(t_full.lens(), vec![d, d, d]);
    let t_xi: [Mat<S>; 3] = std::array::from_fn(|s| Mat::from_fn(m, |c, a| t_full.at(&[m + s, a, c]).clone()));
    let t0_xi: [Mat<S>; 3] = std::array::from_fn(|s| t_xi[s].sym());
    let b_xi: [Mat<S>; 3] = std::array::from_fn(|s| t_xi[s].skew());
    let us: Vec<Mat<S>> = (0..3).map(|s| qc.j(s).mul(&b_xi[s]).scale(&-S::one())).collect();
    for s in 1..3 {
        if !qc.mat_is_zero(&us[s].sub(&us[0])) {
            return Err(BiquardError::UDisagree);
        }
    }
    let u = us[0].clone();
    let mut n = Mat::zeros(m);
    for s in 0..3 {
        n = n.add(&t0_xi[s].mul(qc.j(s)));
    }
    Ok(TorsionData { t_full, t_xi, t0_xi, b_xi, t0: n.transpose(), uu: u.transpose(), u })
}

/// Residuals of the torsion properties.
pub fn verify_torsion_properties<S: Scalar>(td: &TorsionData<S>, qc: &QcStructure<S>) -> Vec<Residual> {
    let (m, tol) = (qc.m, qc.tol);
    let sc = td.t_full.max_abs().max(1.0);
    let mut out = Vec::new();
    // T(X, Y) = 2 Σ_s ω_s(X, Y) ξ_s on H × H
    out.push(sweep("torsion-on-h", &[m, m, m + 3], sc, tol, |i| {
        let v = td.t(i[0], i[1], i[2]).clone();
        if i[2] >= m { v - qc.omega(i[2] - m).get(i[0], i[1]).clone() * S::from_i64(2) } else { v }
    }));
    out.push(sweep("trace-free", &[3, 4], sc, tol, |i| {
        let t = &td.t_xi[i[0]];
        if i[1] == 0 { t.trace() } else { t.mul(qc.j(i[1] - 1)).trace() }
    }));
    out.push(Residual::merge(
        "u-properties",
        &[
            sweep("u-symmetric", &[m, m], sc, tol, |i| td.u.get(i[0], i[1]).clone() - td.u.get(i[1], i[0]).clone()),
            sweep("u-traceless", &[1], sc, tol, |_| td.u.trace()),
            sweep("u-commutes", &[3, m, m], sc, tol, |i| td.u.commutator(qc.j(i[0])).get(i[1], i[2]).clone()),
            sweep("b-equals-I-u", &[3, m, m], sc, tol, |i| {
                td.b_xi[i[0]].sub(&qc.j(i[0]).mul(&td.u)).get(i[1], i[2]).clone()
            }),
        ],
    ));
    let ct0 = qc.casimir(&td.t0);
    out.push(sweep("t0-minus1-component", &[m, m], sc, tol, |i| td.t0.get(i[0], i[1]).clone() + ct0.get(i[0], i[1]).clone()));
    let cu = qc.casimir(&td.uu);
    out.push(sweep("u-3-component", &[m, m], sc, tol, |i| {
        td.uu.get(i[0], i[1]).clone() * S::from_i64(3) - cu.get(i[0], i[1]).clone()
    }));
    // 4 g(T⁰_{ξ_s} I_s X, Y) = T⁰(X, Y) − T⁰(I_s X, I_s Y)
    let t0_split: Vec<(Mat<S>, Mat<S>)> =
        (0..3).map(|s| (td.t0_xi[s].mul(qc.j(s)), qc.form_ii(&td.t0, s, s))).collect();
    out.push(sweep("t0-xi-split", &[3, m, m], sc, tol, |i| {
        let (l, r) = &t0_split[i[0]];
        l.get(i[2], i[1]).clone() * S::from_i64(4) - td.t0.get(i[1], i[2]).clone() + r.get(i[1], i[2]).clone()
    }));
    if qc.n == 1 {
        out.push(sweep("u-vanishes-n1", &[m, m], sc, tol, |i| td.u.get(i[0], i[1]).clone()));
    }
    out
}

/// True if every `α_s` vanishes on `H`.
pub fn alpha_h_zero<S: Scalar>(qc: &QcStructure<S>, conn: &Connection<S>) -> bool {
    (0..3).all(|s| (0..qc.m).all(|a| residual::is_zero(&conn.alpha[s][a], conn.scale(), qc.tol)))
}
