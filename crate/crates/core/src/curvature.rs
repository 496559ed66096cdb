//! Curvature of the Biquard connection and its Ricci-type contractions.
//!
//! On a left-invariant frame, `R(e_A, e_B) = [Λ_A, Λ_B] − Σ_E c^E_{AB} Λ_E`
//! with `Λ_A[C][B] = Γ^C_{AB}`, and `R(A, B, C, D) = g(R(e_A, e_B) e_C, e_D)`.
//! Derivatives of the (constant) scalar curvature vanish identically and are
//! dropped from every identity.

use crate::biquard::{Connection, TorsionData};
use crate::par;
use crate::qc::{QcStructure, CYCLIC};
use crate::residual::{sweep, Residual};
use crate::scalar::Scalar;
use crate::tensor::Mat;

/// `Σ` over an iterator of scalars.
pub(crate) fn sum<S: Scalar>(it: impl Iterator<Item = S>) -> S {
    it.fold(S::zero(), |acc, v| acc + v)
}

/// The curvature tensor with all horizontal traces.
#[derive(Clone, Debug)]
pub struct CurvaturePackage<S> {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    r: Vec<S>,
    pub ric: Mat<S>,
    pub scal: S,
    /// `ρ_s(A, B)` on the full frame (horizontal, mixed and vertical arguments).
    pub rho_full: [Mat<S>; 3],
    /// Horizontal blocks of `ρ_s`, `τ_s`, `ζ_s`.
    pub rho: [Mat<S>; 3],
    pub tau: [Mat<S>; 3],
    pub zeta: [Mat<S>; 3],
}

impl<S: Scalar> CurvaturePackage<S> {
    #[inline]
    pub fn r(&self, a: usize, b: usize, c: usize, d: usize) -> &S {
        &self.r[((a * self.d + b) * self.d + c) * self.d + d]
    }

    pub fn data(&self) -> &[S] {
        &self.r
    }

    pub fn norm_sq(&self) -> S {
        sum(self.r.iter().map(|v| v.mul_ref(v)))
    }

    /// `Σ R(X,Y,Z,V)²` over horizontal tuples.
    pub fn norm_sq_h(&self) -> S {
        let m = self.m;
        let mut acc = S::zero();
        for x in 0..m {
            for y in 0..m {
                for z in 0..m {
                    for v in 0..m {
                        let r = self.r(x, y, z, v);
                        acc.add_mul(r, r);
                    }
                }
            }
        }
        acc
    }

    /// Largest `|R|`, used as the float-mode scale.
    pub fn scale(&self) -> f64 {
        self.r.iter().map(|v| v.to_f64().abs()).fold(1.0, f64::max)
    }

    /// `ρ_s(A, ξ_t)`.
    pub fn rho_xi(&self, s: usize, a: usize, t: usize) -> &S {
        self.rho_full[s].get(a, self.m + t)
    }
}

/// `R^D_{ABC}` from the connection and structure constants, plus all traces.
pub fn compute_curvature<S: Scalar>(qc: &QcStructure<S>, conn: &Connection<S>) -> CurvaturePackage<S> {
    let (n, m, d) = (qc.n, qc.m, qc.d);
    let lambdas: Vec<Mat<S>> = (0..d).map(|a| conn.lambda(a)).collect();
    let blocks = par::map_range(d * d, |ab| {
        let (a, b) = (ab / d, ab % d);
        let mut out = lambdas[a].commutator(&lambdas[b]);
        for (e, le) in lambdas.iter().enumerate() {
            let k = qc.c(e, a, b);
            if !k.is_zero() {
                out = out.sub(&le.scale(k));
            }
        }
        out
    });
    let mut r = vec![S::zero(); d * d * d * d];
    for (ab, blk) in blocks.iter().enumerate() {
        for c in 0..d {
            for dd in 0..d {
                r[(ab * d + c) * d + dd] = blk.get(dd, c).clone();
            }
        }
    }
    let at = |a: usize, b: usize, c: usize, dd: usize| &r[((a * d + b) * d + c) * d + dd];
    let ric = Mat::from_fn(m, |x, y| sum((0..m).map(|a| at(a, x, y, a).clone())));
    let scal = ric.trace();
    let inv4n = S::ratio(1, 4 * n as i64);
    let trace_i = |s: usize, f: &dyn Fn(usize, usize) -> S| {
        let mut acc = S::zero();
        for a in 0..m {
            for (c, v) in qc.iv(s, a) {
                acc += &(f(a, *c) * v.clone());
            }
        }
        acc * inv4n.clone()
    };
    let rho_full: [Mat<S>; 3] =
        std::array::from_fn(|s| Mat::from_fn(d, |x, y| trace_i(s, &|a, c| at(x, y, a, c).clone())));
    let rho = std::array::from_fn(|s| Mat::from_fn(m, |x, y| rho_full[s].get(x, y).clone()));
    let tau = std::array::from_fn(|s| Mat::from_fn(m, |x, y| trace_i(s, &|a, c| at(a, c, x, y).clone())));
    let zeta = std::array::from_fn(|s| Mat::from_fn(m, |x, y| trace_i(s, &|a, c| at(a, x, y, c).clone())));
    CurvaturePackage { n, m, d, r, ric, scal, rho_full, rho, tau, zeta }
}

/// Both antisymmetries of `R` over the full frame.
pub fn verify_antisymmetry<S: Scalar>(cp: &CurvaturePackage<S>, qc: &QcStructure<S>) -> Vec<Residual> {
    let (d, sc, tol) = (cp.d, cp.scale(), qc.tol);
    vec![
        sweep("antisymmetry-AB", &[d, d, d, d], sc, tol, |i| {
            cp.r(i[0], i[1], i[2], i[3]).clone() + cp.r(i[1], i[0], i[2], i[3]).clone()
        }),
        sweep("antisymmetry-CD", &[d, d, d, d], sc, tol, |i| {
            cp.r(i[0], i[1], i[2], i[3]).clone() + cp.r(i[0], i[1], i[3], i[2]).clone()
        }),
    ]
}

/// `R(X,Y,I_iZ,I_iV) = R(X,Y,Z,V) − 2ρ_j(X,Y)ω_j(Z,V) − 2ρ_k(X,Y)ω_k(Z,V)` and
/// `R(A,B,ξ_i,ξ_j) = 2ρ_k(A,B)`.
pub fn verify_sp1_part<S: Scalar>(cp: &CurvaturePackage<S>, _td: &TorsionData<S>, qc: &QcStructure<S>) -> Vec<Residual> {
    let (m, d, sc, tol) = (cp.m, cp.d, cp.scale(), qc.tol);
    let two = S::from_i64(2);
    vec![
        sweep("sp1", &[3, m, m, m, m], sc, tol, |i| {
            let ((ii, j, k), x, y, z, v) = (CYCLIC[i[0]], i[1], i[2], i[3], i[4]);
            let mut lhs = S::zero();
            for (a, p) in qc.iv(ii, z) {
                for (b, q) in qc.iv(ii, v) {
                    lhs += &(p.mul_ref(q) * cp.r(x, y, *a, *b).clone());
                }
            }
            let rhs = cp.r(x, y, z, v).clone()
                - two.clone() * cp.rho[j].get(x, y).clone() * qc.omega(j).get(z, v).clone()
                - two.clone() * cp.rho[k].get(x, y).clone() * qc.omega(k).get(z, v).clone();
            lhs - rhs
        }),
        sweep("sp1-curvature-forms", &[3, d, d], sc, tol, |i| {
            let (ii, j, k) = CYCLIC[i[0]];
            cp.r(i[1], i[2], m + ii, m + j).clone() - two.clone() * cp.rho_full[k].get(i[1], i[2]).clone()
        }),
    ]
}

/// `U` as it enters the curvature formulas (identically zero when `n = 1`).
pub(crate) fn u_eff<S: Scalar>(td: &TorsionData<S>, n: usize) -> Mat<S> {
    if n == 1 {
        Mat::zeros(td.uu.dim())
    } else {
        td.uu.clone()
    }
}

/// The Ricci-type formulas expressing every trace of `R` through torsion and `Scal`.
pub fn verify_ricci_formulas<S: Scalar>(cp: &CurvaturePackage<S>, td: &TorsionData<S>, qc: &QcStructure<S>) -> Vec<Residual> {
    let (n, m, tol) = (qc.n as i64, qc.m, qc.tol);
    let sc = cp.scale().max(td.t_full.max_abs());
    let k = |num: i64, den: i64| S::ratio(num, den);
    let t0 = &td.t0;
    let u = u_eff(td, qc.n);
    let g = qc.g();
    let scal = cp.scal.clone();
    let s8 = scal.clone() * k(1, 8 * n * (n + 2));
    let mut out = Vec::new();

    let ric = t0
        .scale(&S::from_i64(2 * n + 2))
        .add(&u.scale(&S::from_i64(4 * n + 10)))
        .add(&g.scale(&(scal.clone() * k(1, 4 * n))));
    out.push(sweep("ricci", &[m, m], sc, tol, |i| cp.ric.get(i[0], i[1]).clone() - ric.get(i[0], i[1]).clone()));

    let t0s: Vec<Mat<S>> = (0..3).map(|s| t0.add(&qc.form_ii(t0, s, s))).collect();
    let lhs_rho: Vec<Mat<S>> = (0..3).map(|s| qc.form_iy(&cp.rho[s], s)).collect();
    let rhs_rho: Vec<Mat<S>> =
        (0..3).map(|s| t0s[s].scale(&k(-1, 2)).sub(&u.scale(&S::from_i64(2))).sub(&g.scale(&s8))).collect();
    out.push(sweep("rho", &[3, m, m], sc, tol, |i| {
        lhs_rho[i[0]].get(i[1], i[2]).clone() - rhs_rho[i[0]].get(i[1], i[2]).clone()
    }));
    let lhs_tau: Vec<Mat<S>> = (0..3).map(|s| qc.form_iy(&cp.tau[s], s)).collect();
    let rhs_tau: Vec<Mat<S>> = (0..3).map(|s| t0s[s].scale(&k(-(n + 2), 2 * n)).sub(&g.scale(&s8))).collect();
    out.push(sweep("tau", &[3, m, m], sc, tol, |i| {
        lhs_tau[i[0]].get(i[1], i[2]).clone() - rhs_tau[i[0]].get(i[1], i[2]).clone()
    }));
    let lhs_zeta: Vec<Mat<S>> = (0..3).map(|s| qc.form_iy(&cp.zeta[s], s)).collect();
    let rhs_zeta: Vec<Mat<S>> = (0..3)
        .map(|s| {
            t0.scale(&k(2 * n + 1, 4 * n))
                .add(&qc.form_ii(t0, s, s).scale(&k(1, 4 * n)))
                .add(&u.scale(&k(2 * n + 1, 2 * n)))
                .add(&g.scale(&(scal.clone() * k(1, 16 * n * (n + 2)))))
        })
        .collect();
    out.push(sweep("zeta", &[3, m, m], sc, tol, |i| {
        lhs_zeta[i[0]].get(i[1], i[2]).clone() - rhs_zeta[i[0]].get(i[1], i[2]).clone()
    }));
    // T(ξ_i, ξ_j) = −Scal/(8n(n+2)) ξ_k − [ξ_i, ξ_j]_H
    out.push(sweep("torsion-xi-xi", &[3, cp.d], sc, tol, |i| {
        let (ii, j, kk) = CYCLIC[i[0]];
        let c = i[1];
        let t = td.t(m + ii, m + j, c).clone();
        if c < m {
            t + qc.c(c, m + ii, m + j).clone()
        } else if c == m + kk {
            t + s8.clone()
        } else {
            t
        }
    }));
    out.push(sweep("scal-from-torsion", &[1], sc, tol, |_| {
        scal.clone() + S::from_i64(8 * n * (n + 2)) * td.t(m, m + 1, m + 2).clone()
    }));
    // T(ξ_i, ξ_j, X) = −ρ_k(I_i X, ξ_i) = −ρ_k(I_j X, ξ_j)
    let rho_ix = |s: usize, i: usize, x: usize, t: usize| sum(qc.iv(i, x).iter().map(|(a, p)| p.mul_ref(cp.rho_xi(s, *a, t))));
    out.push(sweep("torsion-xi-xi-x", &[3, 2, m], sc, tol, |i| {
        let (ii, j, kk) = CYCLIC[i[0]];
        let x = i[2];
        let t = td.t(m + ii, m + j, x).clone();
        if i[1] == 0 { t + rho_ix(kk, ii, x, ii) } else { t + rho_ix(kk, j, x, j) }
    }));
    // ρ_i(X, ξ_i) = ½(−ρ_i(ξ_j, I_k X) + ρ_j(ξ_k, I_i X) + ρ_k(ξ_i, I_j X))
    out.push(sweep("rho-x-xi", &[3, m], sc, tol, |i| {
        let (ii, j, kk) = CYCLIC[i[0]];
        let x = i[1];
        let r = |s: usize, t: usize, via: usize| {
            sum(qc.iv(via, x).iter().map(|(a, p)| p.mul_ref(cp.rho_full[s].get(m + t, *a))))
        };
        cp.rho_xi(ii, x, ii).clone() - (r(j, kk, ii) + r(kk, ii, j) - r(ii, j, kk)) * k(1, 2)
    }));
    out
}

/// `(n−1)(∇_{e_a}T⁰)(e_a, X) + 2(n+2)(∇_{e_a}U)(e_a, X) = 0`.
pub fn verify_div_identity<S: Scalar>(
    cp: &CurvaturePackage<S>,
    td: &TorsionData<S>,
    qc: &QcStructure<S>,
    conn: &Connection<S>,
) -> Residual {
    div_residual(&td.t0, &td.uu, cp, qc, conn)
}

pub(crate) fn div_residual<S: Scalar>(
    t0: &Mat<S>,
    u: &Mat<S>,
    cp: &CurvaturePackage<S>,
    qc: &QcStructure<S>,
    conn: &Connection<S>,
) -> Residual {
    let (n, m) = (qc.n as i64, qc.m);
    let nt: Vec<Mat<S>> = (0..m).map(|a| crate::biquard::nabla_form(conn, a, t0)).collect();
    let nu: Vec<Mat<S>> = (0..m).map(|a| crate::biquard::nabla_form(conn, a, u)).collect();
    sweep("torsion-divergence", &[m], cp.scale(), qc.tol, |i| {
        let x = i[0];
        let dt = sum((0..m).map(|a| nt[a].get(a, x).clone()));
        let du = sum((0..m).map(|a| nu[a].get(a, x).clone()));
        S::from_i64(n - 1) * dt + S::from_i64(2 * (n + 2)) * du
    })
}

/// True iff the horizontal curvature vanishes.
pub fn flatness_r<S: Scalar>(cp: &CurvaturePackage<S>, qc: &QcStructure<S>) -> bool {
    let m = cp.m;
    let sc = cp.scale();
    (0..m).all(|x| {
        (0..m).all(|y| (0..m).all(|z| (0..m).all(|v| qc.is_zero(cp.r(x, y, z, v), sc))))
    })
}

/// `R|_H = 0 ⇒ R = 0`, reported as a flag.
pub fn flatness_implication<S: Scalar>(cp: &CurvaturePackage<S>, qc: &QcStructure<S>) -> Residual {
    let sc = cp.scale();
    let full = cp.data().iter().all(|v| qc.is_zero(v, sc));
    Residual::flag("flat-H-implies-flat", !flatness_r(cp, qc) || full)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::biquard::{build_spn_sp1_basis, compute_torsion, solve_biquard};
    use crate::builtins;
    use crate::qc::build_qc;
    use crate::scalar::{rat, Rational};
    use crate::structure::{parse, to_lie_frame};
    use num_traits::Zero;

    type Q = Rational;

    pub(crate) fn pipeline(text: &str) -> (QcStructure<Q>, Connection<Q>, TorsionData<Q>, CurvaturePackage<Q>) {
        let sf = parse(text).unwrap();
        let qc = build_qc(&sf.name, to_lie_frame(&sf).unwrap(), None, 0.0).unwrap();
        let basis = build_spn_sp1_basis(&qc).unwrap();
        let conn = solve_biquard(&qc, &basis).unwrap();
        let td = compute_torsion(&qc, &conn).unwrap();
        let cp = compute_curvature(&qc, &conn);
        (qc, conn, td, cp)
    }

    fn all_pass(rs: &[Residual]) -> bool {
        rs.iter().all(|r| r.pass)
    }

    #[test]
    fn heisenberg_is_flat() {
        for text in [builtins::HEISENBERG_N1, builtins::HEISENBERG_N2] {
            let (qc, _, _, cp) = pipeline(text);
            assert!(cp.data().iter().all(|v| v.is_zero()));
            assert!(cp.scal.is_zero());
            assert!(flatness_r(&cp, &qc));
            assert!(flatness_implication(&cp, &qc).pass);
        }
    }

    #[test]
    fn golden_curvature_values() {
        let (qc, _, _, cp) = pipeline(builtins::G1);
        assert_eq!(cp.scal, rat(-12, 1));
        assert_eq!(cp.norm_sq(), rat(48, 1));
        assert_eq!(cp.norm_sq_h(), rat(24, 1));
        assert!(!flatness_r(&cp, &qc));
        let (qc, _, _, cp) = pipeline(builtins::G3);
        assert_eq!(cp.scal, rat(-24, 1));
        assert_eq!(cp.norm_sq(), rat(27765, 128));
        assert_eq!(cp.norm_sq_h(), rat(106, 1));
        assert!(!flatness_r(&cp, &qc));
    }

    #[test]
    fn g1_is_qc_einstein() {
        let (_, _, _, cp) = pipeline(builtins::G1);
        let expected = Mat::<Q>::identity(4).scale(&rat(-3, 1));
        assert_eq!(cp.ric, expected);
    }

    #[test]
    fn identities_hold_on_builtins() {
        for b in builtins::ALL {
            let (qc, conn, td, cp) = pipeline(b.text);
            assert!(all_pass(&verify_antisymmetry(&cp, &qc)), "{}", b.name);
            assert!(all_pass(&verify_sp1_part(&cp, &td, &qc)), "{}", b.name);
            let rf = verify_ricci_formulas(&cp, &td, &qc);
            assert!(all_pass(&rf), "{}: {:?}", b.name, rf.iter().filter(|r| !r.pass).collect::<Vec<_>>());
            assert!(verify_div_identity(&cp, &td, &qc, &conn).pass, "{}", b.name);
        }
    }

    #[test]
    fn corrupted_u_breaks_div() {
        let (qc, conn, td, cp) = pipeline(builtins::G3);
        let bad_u = Mat::from_fn(4, |r, c| rat(((r * 3 + c * 5) % 7) as i64, 1) + rat(((c * 3 + r * 5) % 7) as i64, 1));
        assert!(!div_residual(&td.t0, &bad_u, &cp, &qc, &conn).pass);
    }

    #[test]
    fn float_curvature_matches_exact() {
        let sf = parse(builtins::G3).unwrap();
        let qc: QcStructure<f64> = build_qc(&sf.name, to_lie_frame(&sf).unwrap(), None, 1e-9).unwrap();
        let basis = build_spn_sp1_basis(&qc).unwrap();
        let conn = solve_biquard(&qc, &basis).unwrap();
        let td = compute_torsion(&qc, &conn).unwrap();
        let cp = compute_curvature(&qc, &conn);
        assert!((cp.scal + 24.0).abs() < 1e-9);
        assert!(all_pass(&verify_ricci_formulas(&cp, &td, &qc)));
    }
}
