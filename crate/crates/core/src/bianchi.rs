//! First Bianchi identity and the curvature identities it implies.
//!
//! `basic` checks the cyclic identity itself, the pair-exchange formula and
//! the `[−1]`-component formula for `3R − Σ R(I_s·, I_s·, ·, ·)`. `extended`
//! adds the identities for the mixed and vertical curvature components.

use serde::{Deserialize, Serialize};

use crate::biquard::{nabla_form, Connection, TorsionData};
use crate::curvature::{sum, u_eff, CurvaturePackage};
use crate::qc::{QcStructure, CYCLIC};
use crate::residual::{sweep, Residual};
use crate::scalar::Scalar;
use crate::tensor::Mat;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BianchiLevel {
    Basic,
    Extended,
}

/// Precomputed covariant derivatives used by several identities.
struct Derivs<S> {
    /// `∇_{e_A} T⁰` and `∇_{e_A} U` on `H`, for every frame direction.
    nt: Vec<Mat<S>>,
    nu: Vec<Mat<S>>,
}

impl<S: Scalar> Derivs<S> {
    fn new(conn: &Connection<S>, t0: &Mat<S>, u: &Mat<S>) -> Self {
        let d = conn.d;
        Derivs {
            nt: (0..d).map(|a| nabla_form(conn, a, t0)).collect(),
            nu: (0..d).map(|a| nabla_form(conn, a, u)).collect(),
        }
    }
}

/// `Σ_a I_s[a][x] f(a)`, i.e. `f(I_s e_x)` for linear `f`.
fn via<S: Scalar>(qc: &QcStructure<S>, s: usize, x: usize, f: impl Fn(usize) -> S) -> S {
    sum(qc.iv(s, x).iter().map(|(a, p)| p.mul_ref(&f(*a))))
}

pub fn verify_bianchi<S: Scalar>(
    cp: &CurvaturePackage<S>,
    td: &TorsionData<S>,
    qc: &QcStructure<S>,
    conn: &Connection<S>,
    level: BianchiLevel,
) -> Vec<Residual> {
    let mut out = vec![first_bianchi(cp, td, qc, conn), pair_exchange(cp, td, qc), minus1_projection(cp, td, qc)];
    if level == BianchiLevel::Extended {
        let u = u_eff(td, qc.n);
        let dv = Derivs::new(conn, &td.t0, &u);
        out.push(vertical_bianchi_1(cp, qc, &dv));
        out.push(vertical_bianchi_2(cp, td, qc, conn, &dv));
        out.extend(vertical_bianchi_3(cp, qc, &dv));
    }
    out
}

/// `Σ_cyc R(A,B,C,D) = Σ_cyc [(∇_A T)(B,C) + T(T(A,B),C)]^D`.
pub fn first_bianchi<S: Scalar>(cp: &CurvaturePackage<S>, td: &TorsionData<S>, qc: &QcStructure<S>, conn: &Connection<S>) -> Residual {
    let d = qc.d;
    let t = |a: usize, b: usize, c: usize| td.t(a, b, c);
    let nt = |a: usize, b: usize, c: usize, dd: usize| {
        let mut acc = S::zero();
        for e in 0..d {
            acc.add_mul(conn.gamma(dd, a, e), t(b, c, e));
            acc -= &conn.gamma(e, a, b).mul_ref(t(e, c, dd));
            acc -= &conn.gamma(e, a, c).mul_ref(t(b, e, dd));
        }
        acc
    };
    let tt = |a: usize, b: usize, c: usize, dd: usize| {
        let mut acc = S::zero();
        for e in 0..d {
            acc.add_mul(t(a, b, e), t(e, c, dd));
        }
        acc
    };
    let sc = cp.scale().max(td.t_full.max_abs());
    sweep("first-bianchi", &[d, d, d, d], sc, qc.tol, |i| {
        let (a, b, c, dd) = (i[0], i[1], i[2], i[3]);
        if !(a < b && b < c) {
            return S::zero();
        }
        let lhs = cp.r(a, b, c, dd).clone() + cp.r(b, c, a, dd).clone() + cp.r(c, a, b, dd).clone();
        let rhs = sum([(a, b, c), (b, c, a), (c, a, b)].into_iter().map(|(x, y, z)| nt(x, y, z, dd) + tt(x, y, z, dd)));
        lhs - rhs
    })
}

/// Pair exchange `R(X,Y,Z,V) − R(Z,V,X,Y)` in terms of `U` and `T⁰_ξ`.
pub fn pair_exchange<S: Scalar>(cp: &CurvaturePackage<S>, td: &TorsionData<S>, qc: &QcStructure<S>) -> Residual {
    let m = qc.m;
    let u = u_eff(td, qc.n);
    let ui: Vec<Mat<S>> = (0..3).map(|s| qc.form_ix(&u, s)).collect();
    // T⁰_ξ(s, a, b) = g(T⁰_{ξ_s} e_a, e_b)
    let t0x = |s: usize, a: usize, b: usize| td.t0_xi[s].get(b, a).clone();
    let om = |s: usize, a: usize, b: usize| qc.omega(s).get(a, b).clone();
    let two = S::from_i64(2);
    sweep("pair-exchange", &[m, m, m, m], cp.scale(), qc.tol, |i| {
        let (x, y, z, v) = (i[0], i[1], i[2], i[3]);
        let lhs = cp.r(x, y, z, v).clone() - cp.r(z, v, x, y).clone();
        let mut rhs = S::zero();
        for s in 0..3 {
            rhs += &(two.clone() * (om(s, x, y) * ui[s].get(z, v).clone() - om(s, z, v) * ui[s].get(x, y).clone()));
            rhs -= &(two.clone()
                * (om(s, x, z) * t0x(s, y, v) + om(s, y, v) * t0x(s, z, x)
                    - om(s, y, z) * t0x(s, x, v)
                    - om(s, x, v) * t0x(s, z, y)));
        }
        lhs - rhs
    })
}

/// `3R(X,Y,Z,V) − Σ_s R(I_sX, I_sY, Z, V)` in terms of `T⁰`, `U` and `Scal`.
pub fn minus1_projection<S: Scalar>(cp: &CurvaturePackage<S>, td: &TorsionData<S>, qc: &QcStructure<S>) -> Residual {
    let (n, m) = (qc.n as i64, qc.m);
    let t0 = &td.t0;
    let u = u_eff(td, qc.n);
    let t0iy: Vec<Mat<S>> = (0..3).map(|s| qc.form_iy(t0, s)).collect();
    let t0ix: Vec<Mat<S>> = (0..3).map(|s| qc.form_ix(t0, s)).collect();
    let uix: Vec<Mat<S>> = (0..3).map(|s| qc.form_ix(&u, s)).collect();
    let om = |s: usize, a: usize, b: usize| qc.omega(s).get(a, b).clone();
    let g = |a: usize, b: usize| if a == b { S::one() } else { S::zero() };
    let tz = |a: usize, b: usize| t0.get(a, b).clone();
    let sk = cp.scal.clone() * S::ratio(1, 2 * n * (n + 2));
    let (two, eight) = (S::from_i64(2), S::from_i64(8));
    sweep("minus1-projection", &[m, m, m, m], cp.scale(), qc.tol, |i| {
        let (x, y, z, v) = (i[0], i[1], i[2], i[3]);
        let mut lhs = S::from_i64(3) * cp.r(x, y, z, v).clone();
        for s in 0..3 {
            for (a, p) in qc.iv(s, x) {
                for (b, q) in qc.iv(s, y) {
                    lhs -= &(p.mul_ref(q) * cp.r(*a, *b, z, v).clone());
                }
            }
        }
        let mut rhs = two.clone() * (g(y, z) * tz(x, v) + g(x, v) * tz(z, y) - g(z, x) * tz(y, v) - g(v, y) * tz(z, x));
        for s in 0..3 {
            let w = |a: usize, b: usize| t0iy[s].get(a, b).clone();
            rhs -= &(two.clone()
                * (om(s, y, z) * w(x, v) + om(s, x, v) * w(y, z) - om(s, x, z) * w(y, v) - om(s, y, v) * w(x, z)));
            rhs += &(two.clone() * om(s, x, y) * (w(z, v) - t0ix[s].get(z, v).clone())
                - eight.clone() * om(s, z, v) * uix[s].get(x, y).clone()
                - sk.clone() * om(s, x, y) * om(s, z, v));
        }
        lhs - rhs
    })
}

/// `R(ξ_i, X, Y, Z)` in terms of `∇T⁰`, `∇U` and `ρ(·, ξ)`.
fn vertical_bianchi_1<S: Scalar>(cp: &CurvaturePackage<S>, qc: &QcStructure<S>, dv: &Derivs<S>) -> Residual {
    let m = qc.m;
    let om = |s: usize, a: usize, b: usize| qc.omega(s).get(a, b).clone();
    let q = S::ratio(1, 4);
    sweep("vertical-bianchi-1", &[3, m, m, m], cp.scale(), qc.tol, |idx| {
        let ((i, j, k), x, y, z) = (CYCLIC[idx[0]], idx[1], idx[2], idx[3]);
        // ρ_s(I_i W, ξ_i)
        let ri = |s: usize, w: usize| via(qc, i, w, |a| cp.rho_xi(s, a, i).clone());
        let nu = |a: usize, p: usize, r: usize| dv.nu[a].get(p, r).clone();
        let nt = |a: usize, p: usize, r: usize| dv.nt[a].get(p, r).clone();
        let mut v = -via(qc, i, y, |a| nu(x, a, z)) + om(j, x, y) * ri(k, z) - om(k, x, y) * ri(j, z);
        v -= &(q.clone() * (via(qc, i, z, |a| nt(y, a, x)) + via(qc, i, x, |a| nt(y, z, a))));
        v += &(q.clone() * (via(qc, i, y, |a| nt(z, a, x)) + via(qc, i, x, |a| nt(z, y, a))));
        v += &(-om(j, x, z) * ri(k, y) + om(k, x, z) * ri(j, y) - om(j, y, z) * ri(k, x) + om(k, y, z) * ri(j, x));
        cp.r(m + i, x, y, z).clone() - v
    })
}

/// `R(ξ_i, ξ_j, X, Y)`; the derivative of `ρ_k(I_i·, ξ_i)` is taken as the
/// covariant derivative of the `sp(1)`-valued tensor `B_{uvw}(Y) = ρ_w(I_uY, ξ_v)`.
fn vertical_bianchi_2<S: Scalar>(
    cp: &CurvaturePackage<S>,
    td: &TorsionData<S>,
    qc: &QcStructure<S>,
    conn: &Connection<S>,
    dv: &Derivs<S>,
) -> Residual {
    let (n, m) = (qc.n as i64, qc.m);
    let q = S::ratio(1, 4);
    let s8 = cp.scal.clone() * S::ratio(1, 8 * n * (n + 2));
    let bb = |u: usize, v: usize, w: usize, y: usize| via(qc, u, y, |a| cp.rho_xi(w, a, v).clone());
    let am = |up: usize, u: usize, x: usize| conn.gamma(m + up, x, m + u).clone();
    let db = |x: usize, u: usize, v: usize, w: usize, y: usize| {
        let mut r = -sum((0..m).map(|c| conn.gamma(c, x, y).mul_ref(&bb(u, v, w, c))));
        for up in 0..3 {
            r -= &(am(up, u, x) * bb(up, v, w, y) + am(up, v, x) * bb(u, up, w, y) + am(up, w, x) * bb(u, v, up, y));
        }
        r
    };
    let tx = |s: usize, a: usize, b: usize| td.t(m + s, a, b).clone();
    let sc = cp.scale().max(td.t_full.max_abs());
    sweep("vertical-bianchi-2", &[3, m, m], sc, qc.tol, |idx| {
        let ((i, j, k), x, y) = (CYCLIC[idx[0]], idx[1], idx[2]);
        let (xi, xj) = (m + i, m + j);
        let nu = |a: usize, p: usize, r: usize| dv.nu[a].get(p, r).clone();
        let nt = |a: usize, p: usize, r: usize| dv.nt[a].get(p, r).clone();
        let mut v = via(qc, j, x, |a| nu(xi, a, y)) - via(qc, i, x, |a| nu(xj, a, y));
        v -= &(q.clone() * (via(qc, j, x, |a| nt(xi, a, y)) + via(qc, j, y, |a| nt(xi, x, a))));
        v += &(q.clone() * (via(qc, i, x, |a| nt(xj, a, y)) + via(qc, i, y, |a| nt(xj, x, a))));
        v -= &db(x, i, i, k, y);
        v -= &(s8.clone() * tx(k, x, y));
        v -= &sum((0..m).map(|a| tx(j, x, a) * tx(i, a, y) - tx(j, a, y) * tx(i, x, a)));
        cp.r(xi, xj, x, y).clone() - v
    })
}

/// The three expressions of `ρ_i(ξ_·, X)` through divergences of `T⁰` and `U`.
fn vertical_bianchi_3<S: Scalar>(cp: &CurvaturePackage<S>, qc: &QcStructure<S>, dv: &Derivs<S>) -> Vec<Residual> {
    let (n, m) = (qc.n as i64, qc.m);
    let q = S::ratio(1, 4);
    let c3 = S::from_i64(3 * (2 * n + 1));
    let sc = cp.scale();
    // (dT, dTI_i, dU) for X
    let divs = |i: usize, x: usize| {
        let dt = sum((0..m).map(|a| dv.nt[a].get(a, x).clone()));
        let dti = sum((0..m).map(|a| via(qc, i, a, |b| via(qc, i, x, |c| dv.nt[a].get(b, c).clone()))));
        let du = sum((0..m).map(|a| dv.nu[a].get(x, a).clone()));
        (dt, dti, du)
    };
    let rhs_bc = |i: usize, x: usize| {
        let (dt, dti, du) = divs(i, x);
        q.clone() * (S::from_i64(4 * n + 1) * dt + S::from_i64(3) * dti) + S::from_i64(2 * (n + 1)) * du
    };
    vec![
        sweep("vertical-bianchi-3a", &[3, m], sc, qc.tol, |idx| {
            let (i, x) = (CYCLIC[idx[0]].0, idx[1]);
            let (dt, dti, du) = divs(i, x);
            c3.clone() * cp.rho_full[i].get(m + i, x).clone() - (q.clone() * (dt - S::from_i64(3) * dti) - du)
        }),
        sweep("vertical-bianchi-3b", &[3, m], sc, qc.tol, |idx| {
            let ((i, j, k), x) = (CYCLIC[idx[0]], idx[1]);
            c3.clone() * via(qc, k, x, |a| cp.rho_xi(i, a, j).clone()) - rhs_bc(i, x)
        }),
        sweep("vertical-bianchi-3c", &[3, m], sc, qc.tol, |idx| {
            let ((i, j, k), x) = (CYCLIC[idx[0]], idx[1]);
            -c3.clone() * via(qc, j, x, |a| cp.rho_xi(i, a, k).clone()) - rhs_bc(i, x)
        }),
    ]
}
