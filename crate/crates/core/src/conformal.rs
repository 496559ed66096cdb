//! Pointwise qc conformal transformations `η̄ = (2h)⁻¹ η`.
//!
//! A 2-jet of `h` at a point determines the difference tensor `S` of the two
//! Biquard connections and the tensor `M`, which in turn give the barred
//! curvature `R̄`, the barred `L̄` and all barred traces. Barred tensors are
//! stored by their components in the (unbarred) `g`-orthonormal frame, together
//! with the metric scale `gs` (`ḡ = gs·g`, `gs = 1/(2h)`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::biquard::{build_spn_sp1_basis, compute_torsion, solve_biquard, Connection, TorsionData};
use crate::curvature::{compute_curvature, sum, u_eff, CurvaturePackage};
use crate::par;
use crate::qc::{build_qc, QcStructure, CYCLIC};
use crate::residual::{sweep, Residual};
use crate::scalar::{rat, Rational, Scalar};
use crate::structure::LieFrame;
use crate::tensor::{Mat, Slot, Tensor};
use crate::wqc::{self, kn_at, mac, LTensor};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConformalError {
    #[error("invalid jet: {0}")]
    InvalidJet(String),
    #[error("non-constant jets can only act on a state with unit metric scale")]
    NonUnitBase,
    #[error("internal identity {name} violated (max |Δ| = {max_abs} at {worst:?})")]
    Gate { name: String, max_abs: String, worst: Option<Vec<usize>> },
    #[error("matrix is not a rotation (ΨΨᵀ ≠ I or det Ψ ≠ 1)")]
    NotRotation,
    #[error("rotated structure rejected: {0}")]
    Rebuild(String),
}

fn gate(r: Residual) -> Result<Residual, ConformalError> {
    if r.pass {
        Ok(r)
    } else {
        Err(ConformalError::Gate { name: r.name, max_abs: r.max_abs, worst: r.worst })
    }
}

/// The 2-jet of the conformal factor `h` at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct ConformalJet<S> {
    pub h: S,
    /// `dh(e_a)`.
    pub dh_h: Vec<S>,
    /// `dh(ξ_s)`.
    pub dh_xi: [S; 3],
    /// `[∇dh]_{[sym]}` on `H`.
    pub hess_sym: Mat<S>,
}

impl<S: Scalar> ConformalJet<S> {
    /// `h` constant: all derivatives vanish.
    pub fn constant(h: S, m: usize) -> Self {
        ConformalJet { h, dh_h: vec![S::zero(); m], dh_xi: std::array::from_fn(|_| S::zero()), hess_sym: Mat::zeros(m) }
    }

    pub fn validate(&self, m: usize) -> Result<(), ConformalError> {
        if self.h.to_f64() <= 0.0 || self.h.is_zero() {
            return Err(ConformalError::InvalidJet("h must be positive".into()));
        }
        if self.dh_h.len() != m || self.hess_sym.dim() != m {
            return Err(ConformalError::InvalidJet(format!("expected horizontal dimension {m}")));
        }
        if self.hess_sym != self.hess_sym.transpose() {
            return Err(ConformalError::InvalidJet("hess_sym must be symmetric".into()));
        }
        Ok(())
    }

    pub fn is_constant(&self) -> bool {
        self.dh_h.iter().chain(&self.dh_xi).all(|v| v.is_zero()) && self.hess_sym.is_zero()
    }

    /// `∇dh = [∇dh]_{[sym]} − Σ_s dh(ξ_s) ω_s`.
    pub fn nabla_dh(&self, qc: &QcStructure<S>) -> Mat<S> {
        let mut out = self.hess_sym.clone();
        for s in 0..3 {
            out = out.sub(&qc.omega(s).scale(&self.dh_xi[s]));
        }
        out
    }

    /// `Δh = tr [∇dh]_{[sym]}`.
    pub fn laplacian(&self) -> S {
        self.hess_sym.trace()
    }

    /// `|∇h|² = Σ_a dh(e_a)²`.
    pub fn grad_sq(&self) -> S {
        sum(self.dh_h.iter().map(|v| v.mul_ref(v)))
    }

    /// `dh(I_s e_x)`.
    pub fn dh_i(&self, qc: &QcStructure<S>, s: usize, x: usize) -> S {
        sum(qc.iv(s, x).iter().map(|(c, p)| p.mul_ref(&self.dh_h[*c])))
    }
}

/// A random rational jet: numerators in `[−5, 5]`, denominators in `[1, 4]`,
/// `h ∈ {1/2, 1, 2, 3}`.
pub fn random_jet<S: Scalar>(m: usize, rng: &mut impl Rng) -> ConformalJet<S> {
    let mut q = || S::from_rational(&rat(rng.gen_range(-5..=5), rng.gen_range(1..=4)));
    let dh_h: Vec<S> = (0..m).map(|_| q()).collect();
    let dh_xi = std::array::from_fn(|_| q());
    let mut hess_sym = Mat::zeros(m);
    for a in 0..m {
        for b in a..m {
            let v = q();
            hess_sym.set(a, b, v.clone());
            hess_sym.set(b, a, v);
        }
    }
    let h = [rat(1, 2), rat(1, 1), rat(2, 1), rat(3, 1)][rng.gen_range(0..4)].clone();
    ConformalJet { h: S::from_rational(&h), dh_h, dh_xi, hess_sym }
}

/// Deterministic jet for trial `k`: seed `base + k`.
pub fn seeded_jet<S: Scalar>(m: usize, base_seed: u64, k: u64) -> ConformalJet<S> {
    random_jet(m, &mut ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(k)))
}

/// Curvature data at a point, in components of the `g`-orthonormal frame, for the metric `gs·g`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointState<S> {
    /// `R(X,Y,Z,V)` on `H`.
    pub r: Tensor<S>,
    pub l: Mat<S>,
    pub ric: Mat<S>,
    pub scal: S,
    pub gscale: S,
}

impl<S: Scalar> PointState<S> {
    pub fn from_pipeline(cp: &CurvaturePackage<S>, lt: &LTensor<S>) -> Self {
        PointState { r: wqc::horizontal_r(cp), l: lt.l.clone(), ric: cp.ric.clone(), scal: cp.scal.clone(), gscale: S::one() }
    }

    /// `WR` of this state, traces taken with the state's metric.
    pub fn wr(&self, qc: &QcStructure<S>) -> Tensor<S> {
        wqc::wr_from_l(qc, &self.l, &self.r, &self.gscale)
    }

    /// Components in an orthonormal frame of `gs·g`: `(R, L, Scal, T⁰, U)`.
    /// `(0,k)` tensors scale by `gs^{−k/2}`, which is rational for even `k`
    /// and for `L` after absorbing one `gs` into the frame change of `g`.
    pub fn normalized(&self, qc: &QcStructure<S>) -> NormalizedState<S> {
        let inv = S::one().div_ref(&self.gscale);
        let inv2 = inv.clone() * inv.clone();
        let r = self.r.scale(&inv2);
        let l = self.l.scale(&inv);
        let n = qc.n as i64;
        let m = qc.m;
        let scal = sum((0..m).flat_map(|a| (0..m).map(move |b| (a, b))).map(|(a, b)| r.at(&[a, b, b, a]).clone()));
        let l0 = l.sub(&qc.g().scale(&(scal.clone() * S::ratio(1, 32 * n * (n + 2)))));
        let (u, _) = qc.project_3_minus1(&l0);
        let t0 = l0.sub(&u).scale(&S::from_i64(2));
        NormalizedState { r, l, scal, t0, u }
    }
}

/// A state expressed in an orthonormal frame of its own metric.
#[derive(Clone, Debug)]
pub struct NormalizedState<S> {
    pub r: Tensor<S>,
    pub l: Mat<S>,
    pub scal: S,
    pub t0: Mat<S>,
    pub u: Mat<S>,
}

/// `g(S_X Y, Z)` on `H` and `g(S_{ξ̄_i} X, Y)`.
#[derive(Clone, Debug)]
pub struct SData<S> {
    /// `s_h.at([x, y, z]) = g(S_{e_x} e_y, e_z)`.
    pub s_h: Tensor<S>,
    /// `s_xi[i][x][y] = g(S_{ξ̄_i} e_x, e_y)`.
    pub s_xi: [Mat<S>; 3],
    /// The two defining constraints of `S` on `H`.
    pub residuals: Vec<Residual>,
}

pub fn compute_s<S: Scalar>(jet: &ConformalJet<S>, qc: &QcStructure<S>) -> Result<SData<S>, ConformalError> {
    let (n, m) = (qc.n, qc.m);
    jet.validate(m)?;
    let h = &jet.h;
    let dh = &jet.dh_h;
    let di: Vec<Vec<S>> = (0..3).map(|s| (0..m).map(|x| jet.dh_i(qc, s, x)).collect()).collect();
    let g = |a: usize, b: usize| if a == b { S::one() } else { S::zero() };
    let om = |s: usize, a: usize, b: usize| qc.omega(s).get(a, b).clone();
    let inv2h = S::one().div_ref(&(h.clone() * S::from_i64(2)));
    let s_h = Tensor::from_fn(&[Slot::H, Slot::H, Slot::H], n, |i| {
        let (x, y, z) = (i[0], i[1], i[2]);
        let mut acc = dh[x].clone() * g(y, z) + dh[y].clone() * g(z, x) - dh[z].clone() * g(x, y);
        for s in 0..3 {
            acc += &(-di[s][x].clone() * om(s, y, z) + di[s][y].clone() * om(s, z, x) + di[s][z].clone() * om(s, x, y));
        }
        -inv2h.clone() * acc
    });
    let nd = jet.nabla_dh(qc);
    let lap = jet.laplacian();
    let g2 = jet.grad_sq();
    let inv_h = S::one().div_ref(h);
    let s_xi: [Mat<S>; 3] = std::array::from_fn(|idx| {
        let (i, j, k) = CYCLIC[idx];
        let a = qc.form_iy(&nd, i).scale(&-S::one()).add(&qc.form_ix(&nd, i)).sub(&qc.form_ii(&nd, j, k)).add(&qc.form_ii(&nd, k, j));
        let w = (-lap.clone() + S::from_i64(2) * inv_h.clone() * g2.clone()) * S::ratio(1, 4 * n as i64);
        Mat::from_fn(m, |x, y| {
            let b = di[k][x].clone() * di[j][y].clone() - di[j][x].clone() * di[k][y].clone() + di[i][x].clone() * dh[y].clone()
                - dh[x].clone() * di[i][y].clone();
            -S::ratio(1, 4) * a.get(x, y).clone() - inv2h.clone() * b + w.clone() * om(i, x, y)
                - jet.dh_xi[k].clone() * om(j, x, y)
                + jet.dh_xi[j].clone() * om(k, x, y)
        })
    });
    let sc = s_h.max_abs().max(1.0);
    let residuals = vec![
        sweep("s-torsion-constraint", &[m, m, m], sc, qc.tol, |i| {
            let (x, y, z) = (i[0], i[1], i[2]);
            let rhs = -inv_h.clone() * sum((0..3).map(|s| om(s, x, y) * di[s][z].clone()));
            s_h.at(&[x, y, z]).clone() - s_h.at(&[y, x, z]).clone() - rhs
        }),
        sweep("s-metric-constraint", &[m, m, m], sc, qc.tol, |i| {
            let (x, y, z) = (i[0], i[1], i[2]);
            s_h.at(&[x, y, z]).clone() + s_h.at(&[x, z, y]).clone() + inv_h.clone() * dh[x].clone() * g(y, z)
        }),
    ];
    Ok(SData { s_h, s_xi, residuals })
}

/// The tensor `M` and its traces.
#[derive(Clone, Debug)]
pub struct MData<S> {
    pub m: Mat<S>,
    pub m_sym: Mat<S>,
    pub tr_m: S,
    /// `M_s = Σ_a M(e_a, I_s e_a)`.
    pub m_s: [S; 3],
    pub residuals: Vec<Residual>,
}

pub fn compute_m<S: Scalar>(jet: &ConformalJet<S>, qc: &QcStructure<S>) -> Result<MData<S>, ConformalError> {
    let (n, m) = (qc.n as i64, qc.m);
    jet.validate(m)?;
    let h = jet.h.clone();
    let two_h = h.clone() * S::from_i64(2);
    let inv2h = S::one().div_ref(&two_h);
    let nd = jet.nabla_dh(qc);
    let g2 = jet.grad_sq();
    let di: Vec<Vec<S>> = (0..3).map(|s| (0..m).map(|x| jet.dh_i(qc, s, x)).collect()).collect();
    let mm = Mat::from_fn(m, |a, b| {
        let mut q = jet.dh_h[a].mul_ref(&jet.dh_h[b]);
        for d in &di {
            q += &d[a].mul_ref(&d[b]);
        }
        if a == b {
            q += &(g2.clone() * S::ratio(1, 2));
        }
        (nd.get(a, b).clone() - q * inv2h.clone()) * inv2h.clone()
    });
    let m_sym = mm.sym();
    let tr_m = mm.trace();
    let m_s: [S; 3] = std::array::from_fn(|s| qc.form_iy(&mm, s).trace());
    let sc = mm.max_abs().max(1.0);
    let inv_h = S::one().div_ref(&h);
    let mut residuals = vec![
        sweep("m-trace", &[1], sc, qc.tol, |_| {
            tr_m.clone() - (jet.laplacian() - S::from_i64(n + 2) * g2.clone() * inv_h.clone()) * inv2h.clone()
        }),
        sweep("m-sp1-traces", &[3], sc, qc.tol, |i| {
            m_s[i[0]].clone() + S::from_i64(2 * n) * jet.dh_xi[i[0]].clone() * inv_h.clone()
        }),
    ];
    for r in &residuals {
        gate(r.clone())?;
    }
    let mut w = m_sym.clone();
    for s in 0..3 {
        w = w.sub(&qc.omega(s).scale(&(jet.dh_xi[s].clone() * inv2h.clone())));
    }
    residuals.push(sweep("m-skew-part", &[m, m], sc, qc.tol, |i| mm.get(i[0], i[1]).clone() - w.get(i[0], i[1]).clone()));
    Ok(MData { m: mm, m_sym, tr_m, m_s, residuals })
}

/// The right-hand side of the curvature transformation law, before division by `2h`.
fn curvature_shift<S: Scalar>(md: &MData<S>, qc: &QcStructure<S>) -> Tensor<S> {
    let n = qc.n;
    let mm = &md.m;
    let g = qc.g();
    let mi: Vec<Mat<S>> = (0..3).map(|s| qc.form_iy(mm, s)).collect();
    let im: Vec<Mat<S>> = (0..3).map(|s| qc.form_ix(mm, s)).collect();
    let neg_mi: Vec<Mat<S>> = mi.iter().map(|x| x.scale(&-S::one())).collect();
    let mii: Vec<Vec<Mat<S>>> = (0..3).map(|s| (0..3).map(|t| qc.form_ii(mm, s, t)).collect()).collect();
    let inv2n = S::ratio(1, 2 * n as i64);
    let half = S::ratio(1, 2);
    let om = |s: usize, a: usize, b: usize| qc.omega(s).get(a, b).clone();
    Tensor::from_fn(&[Slot::H; 4], n, |i| {
        let (x, y, z, v) = (i[0], i[1], i[2], i[3]);
        let mut r = -kn_at(&g, mm, x, y, z, v);
        for s in 0..3 {
            r -= &kn_at(qc.omega(s), &neg_mi[s], x, y, z, v);
        }
        for &(a, b, c) in &CYCLIC {
            if om(a, x, y).is_zero() {
                continue;
            }
            let br = mi[a].get(z, v).clone() - im[a].get(z, v).clone() + mii[b][c].get(z, v).clone()
                - mii[c][b].get(z, v).clone();
            r += &(half.clone() * om(a, x, y) * br);
        }
        if z == v {
            r -= &(mm.get(x, y).clone() - mm.get(y, x).clone());
        }
        for s in 0..3 {
            if om(s, z, v).is_zero() {
                continue;
            }
            r += &(om(s, z, v) * (mi[s].get(x, y).clone() - mi[s].get(y, x).clone()));
            if !om(s, x, y).is_zero() {
                r -= &(inv2n.clone() * md.tr_m.clone() * om(s, x, y) * om(s, z, v));
            }
        }
        for &(a, b, c) in &CYCLIC {
            let mut w = S::zero();
            mac(&mut w, qc.omega(b).get(x, y), qc.omega(c).get(z, v));
            let mut w2 = S::zero();
            mac(&mut w2, qc.omega(c).get(x, y), qc.omega(b).get(z, v));
            if !(w.is_zero() && w2.is_zero()) {
                r += &(inv2n.clone() * md.m_s[a].clone() * (w - w2));
            }
        }
        r
    })
}

/// Ricci trace `Σ_a ḡ^{aa} R̄(e_a, X, Y, e_a)` with the metric passed explicitly.
pub fn ricci_trace<S: Scalar>(r: &Tensor<S>, gscale: &S, m: usize) -> Mat<S> {
    let inv = S::one().div_ref(gscale);
    Mat::from_fn(m, |x, y| sum((0..m).map(|a| r.at(&[a, x, y, a]).clone())) * inv.clone())
}

/// Apply the conformal change to a state. The barred Ricci relations,
/// their `[3]`/`[−1]` components and the Ricci form of `L̄` are checked.
pub fn transform<S: Scalar>(
    ps: &PointState<S>,
    jet: &ConformalJet<S>,
    qc: &QcStructure<S>,
) -> Result<(PointState<S>, Vec<Residual>), ConformalError> {
    let (n, m) = (qc.n as i64, qc.m);
    jet.validate(m)?;
    if !ps.gscale.is_one() && !jet.is_constant() {
        return Err(ConformalError::NonUnitBase);
    }
    let md = compute_m(jet, qc)?;
    let two_h = jet.h.clone() * S::from_i64(2);
    let inv2h = S::one().div_ref(&two_h);
    let shift = curvature_shift(&md, qc);
    let r = Tensor::from_fn(&[Slot::H; 4], qc.n, |i| (ps.r.at(i).clone() + shift.at(i).clone()) * inv2h.clone());
    let gscale = ps.gscale.clone() * inv2h.clone();
    let l = ps.l.add(&md.m_sym);
    let ric = ricci_trace(&r, &gscale, m);
    let scal = ricci_trace_scalar(&ric, &gscale);
    let g = qc.g();
    let sc = ps.r.max_abs().max(r.max_abs()).max(1.0);
    let (ms3, ms_m1) = qc.project_3_minus1(&md.m_sym);
    let (m3, _) = qc.project_3_minus1(&md.m);
    let d_ric = ric.sub(&ps.ric);
    let (d3, d_m1) = qc.project_3_minus1(&d_ric);
    let tr_term = g.scale(&(md.tr_m.clone() * S::ratio(2 * n + 3, 2 * n)));
    let expect = md.m_sym.scale(&S::from_i64(4 * (n + 1))).add(&ms3.scale(&S::from_i64(6))).add(&tr_term);
    let mut out = Vec::new();
    out.push(gate(sweep("barred-ricci", &[m, m], sc, qc.tol, |i| d_ric.get(i[0], i[1]).clone() - expect.get(i[0], i[1]).clone()))?);
    out.push(gate(sweep("barred-scal", &[1], sc, qc.tol, |_| {
        scal.clone() * inv2h.clone() - ps.scal.clone() - S::from_i64(8 * (n + 2)) * md.tr_m.clone()
    }))?);
    let p1 = ms_m1.scale(&S::from_i64(4 * (n + 1)));
    let p3 = m3.scale(&S::from_i64(2 * (2 * n + 5))).add(&tr_term);
    out.push(sweep("barred-ricci-components", &[2, m, m], sc, qc.tol, |i| {
        let (a, b) = (i[1], i[2]);
        if i[0] == 0 { d_m1.get(a, b).clone() - p1.get(a, b).clone() } else { d3.get(a, b).clone() - p3.get(a, b).clone() }
    }));
    let (r3, rm1) = qc.project_3_minus1(&ric);
    let k = S::ratio(2 * n + 3, 32 * n * (n + 2) * (2 * n + 5)) * scal.clone() * gscale.clone();
    let l_ric = rm1.scale(&S::ratio(1, 4 * (n + 1))).add(&r3.scale(&S::ratio(1, 2 * (2 * n + 5)))).sub(&g.scale(&k));
    out.push(sweep("barred-l-from-ricci", &[m, m], sc, qc.tol, |i| l.get(i[0], i[1]).clone() - l_ric.get(i[0], i[1]).clone()));
    out.extend(md.residuals.iter().cloned());
    Ok((PointState { r, l, ric, scal, gscale }, out))
}

fn ricci_trace_scalar<S: Scalar>(ric: &Mat<S>, gscale: &S) -> S {
    ric.trace().div_ref(gscale)
}

/// `2h·WR̄ − WR`, with `WR̄` built from the barred state and `ḡ`-traces.
pub fn check_covariance<S: Scalar>(ps: &PointState<S>, jet: &ConformalJet<S>, qc: &QcStructure<S>) -> Result<Residual, ConformalError> {
    let (bar, _) = transform(ps, jet, qc)?;
    let wr = ps.wr(qc);
    let wr_bar = bar.wr(qc);
    let two_h = jet.h.clone() * S::from_i64(2);
    let scaled = wr_bar.scale(&two_h);
    Ok(wqc::tensor_agreement("covariance", &scaled, &wr, qc.tol))
}

/// Outcome of one seeded conformal trial.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub index: u64,
    pub seed: u64,
    pub residuals: Vec<Residual>,
    pub error: Option<String>,
}

impl TrialOutcome {
    pub fn pass(&self) -> bool {
        self.error.is_none() && self.residuals.iter().all(|r| r.pass)
    }
}

/// Every gate for one jet: `S` constraints, `M` traces, barred Ricci
/// relations, covariance of `WR`, invariance of `W^qc` as a `(1,3)` tensor,
/// and agreement of the three `WR` constructions on the barred state.
/// `wr` is the `WR` of `ps`.
pub fn run_trial<S: Scalar>(
    ps: &PointState<S>,
    wr: &Tensor<S>,
    qc: &QcStructure<S>,
    jet: &ConformalJet<S>,
) -> Result<Vec<Residual>, ConformalError> {
    let sd = compute_s(jet, qc)?;
    let mut out = sd.residuals;
    let (bar, gates) = transform(ps, jet, qc)?;
    out.extend(gates);
    let wr_bar = bar.wr(qc);
    let two_h = jet.h.clone() * S::from_i64(2);
    out.push(wqc::tensor_agreement("covariance", &wr_bar.scale(&two_h), wr, qc.tol));
    let w13 = wqc::raise_last(wr, &ps.gscale);
    let w13_bar = wqc::raise_last(&wr_bar, &bar.gscale);
    out.push(wqc::tensor_agreement("wqc-13-invariance", &w13_bar, &w13, qc.tol));
    let ns = bar.normalized(qc);
    // the L form of WR is homogeneous, so its normalized form is WR̄/gs²
    let inv = S::one().div_ref(&bar.gscale);
    let w0 = wr_bar.scale(&(inv.clone() * inv));
    let w1 = wqc::wr_from_torsion(qc, &ns.t0, &ns.u, &ns.scal, &ns.r);
    let w2 = wqc::wr_3_component(qc, &ns.t0, &ns.u, &ns.scal, &ns.r);
    out.push(wqc::tensor_agreement("synthetic-wr-from-l=wr-from-torsion", &w0, &w1, qc.tol));
    out.push(wqc::tensor_agreement("synthetic-wr-from-l=wr-3-component", &w0, &w2, qc.tol));
    Ok(out)
}

/// Run `trials` seeded jets (`seed = base_seed + k`), in parallel when enabled.
pub fn run_trials<S: Scalar>(ps: &PointState<S>, qc: &QcStructure<S>, trials: u64, base_seed: u64) -> Vec<TrialOutcome> {
    let ks: Vec<u64> = (0..trials).collect();
    let wr = ps.wr(qc);
    par::map_slice(&ks, |&k| {
        let jet = seeded_jet::<S>(qc.m, base_seed, k);
        let seed = base_seed.wrapping_add(k);
        match run_trial(ps, &wr, qc, &jet) {
            Ok(residuals) => TrialOutcome { index: k, seed, residuals, error: None },
            Err(e) => TrialOutcome { index: k, seed, residuals: Vec::new(), error: Some(e.to_string()) },
        }
    })
}

/// Exact rational rotation from an integer quaternion `(a, b, c, d)`.
pub fn rotation_from_quaternion(q: [i64; 4]) -> Result<[[Rational; 3]; 3], ConformalError> {
    let [a, b, c, d] = q;
    let nn = a * a + b * b + c * c + d * d;
    if nn == 0 {
        return Err(ConformalError::NotRotation);
    }
    let e = [
        [a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)],
        [2 * (b * c + a * d), a * a - b * b + c * c - d * d, 2 * (c * d - a * b)],
        [2 * (b * d - a * c), 2 * (c * d + a * b), a * a - b * b - c * c + d * d],
    ];
    let psi = std::array::from_fn(|i| std::array::from_fn(|j| rat(e[i][j], nn)));
    check_rotation(&psi)?;
    Ok(psi)
}

pub fn check_rotation(psi: &[[Rational; 3]; 3]) -> Result<(), ConformalError> {
    for i in 0..3 {
        for j in 0..3 {
            let dot: Rational = (0..3).map(|k| &psi[i][k] * &psi[j][k]).sum();
            if dot != rat((i == j) as i64, 1) {
                return Err(ConformalError::NotRotation);
            }
        }
    }
    let p = psi;
    let det = &p[0][0] * (&p[1][1] * &p[2][2] - &p[1][2] * &p[2][1]) - &p[0][1] * (&p[1][0] * &p[2][2] - &p[1][2] * &p[2][0])
        + &p[0][2] * (&p[1][0] * &p[2][1] - &p[1][1] * &p[2][0]);
    if det != rat(1, 1) {
        return Err(ConformalError::NotRotation);
    }
    Ok(())
}

/// Change of frame `e'_a = e_a`, `ξ'_s = Σ_t Ψ_st ξ_t`, `I'_s = Σ_t Ψ_st I_t`.
fn frame_change(psi: &[[Rational; 3]; 3], m: usize) -> Vec<Vec<Rational>> {
    let d = m + 3;
    let mut p = vec![vec![rat(0, 1); d]; d];
    for (a, row) in p.iter_mut().enumerate().take(m) {
        row[a] = rat(1, 1);
    }
    for s in 0..3 {
        for t in 0..3 {
            p[m + t][m + s] = psi[s][t].clone();
        }
    }
    p
}

/// The rotated structure and the transported connection coefficients.
pub fn rotate_structure<S: Scalar>(
    qc: &QcStructure<S>,
    conn: &Connection<S>,
    psi: &[[Rational; 3]; 3],
) -> Result<(QcStructure<S>, Connection<S>), ConformalError> {
    check_rotation(psi)?;
    let (m, d) = (qc.m, qc.d);
    let p = frame_change(psi, m);
    // P is orthogonal, so the inverse needed for upper indices is Pᵀ
    let transport = |f: &dyn Fn(usize, usize, usize) -> Rational, kk: usize, i: usize, j: usize| {
        let mut acc = rat(0, 1);
        for k in 0..d {
            if p[k][kk] == rat(0, 1) {
                continue;
            }
            for a in 0..d {
                if p[a][i] == rat(0, 1) {
                    continue;
                }
                for b in 0..d {
                    if p[b][j] == rat(0, 1) {
                        continue;
                    }
                    acc += &p[k][kk] * &p[a][i] * &p[b][j] * f(k, a, b);
                }
            }
        }
        acc
    };
    let frame = LieFrame::from_constants(qc.n, |k, i, j| transport(&|k, a, b| qc.frame.c(k, a, b).clone(), k, i, j))
        .map_err(|e| ConformalError::Rebuild(e.to_string()))?;
    let t = &qc.triple_exact;
    let triple: [Mat<Rational>; 3] =
        std::array::from_fn(|s| (0..3).fold(Mat::zeros(m), |acc, u| acc.add(&t[u].scale(&psi[s][u]))));
    let rotated = build_qc::<S>(&qc.name, frame, Some(triple), qc.tol).map_err(|e| ConformalError::Rebuild(e.to_string()))?;
    let gs: Vec<S> = {
        let conv = |k: usize, a: usize, b: usize| conn.gamma(k, a, b).clone();
        let ps: Vec<Vec<S>> = p.iter().map(|r| r.iter().map(S::from_rational).collect()).collect();
        let mut out = vec![S::zero(); d * d * d];
        for kk in 0..d {
            for i in 0..d {
                for j in 0..d {
                    let mut acc = S::zero();
                    for k in 0..d {
                        if ps[k][kk].is_zero() {
                            continue;
                        }
                        for a in 0..d {
                            if ps[a][i].is_zero() {
                                continue;
                            }
                            for b in 0..d {
                                if !ps[b][j].is_zero() {
                                    acc += &(ps[k][kk].clone() * ps[a][i].clone() * ps[b][j].clone() * conv(k, a, b));
                                }
                            }
                        }
                    }
                    out[(kk * d + i) * d + j] = acc;
                }
            }
        }
        out
    };
    let alpha: [Vec<S>; 3] = std::array::from_fn(|_| vec![S::zero(); d]);
    Ok((rotated, Connection::from_parts(d, m, gs, alpha)))
}

/// Re-solve the rotated structure and compare connection and `WR` with the original.
pub fn check_rotation_invariance<S: Scalar>(
    qc: &QcStructure<S>,
    conn: &Connection<S>,
    wr: &Tensor<S>,
    psi: &[[Rational; 3]; 3],
) -> Result<Vec<Residual>, ConformalError> {
    let (rq, transported) = rotate_structure(qc, conn, psi)?;
    let basis = build_spn_sp1_basis(&rq).map_err(|e| ConformalError::Rebuild(e.to_string()))?;
    let rconn = solve_biquard(&rq, &basis).map_err(|e| ConformalError::Rebuild(e.to_string()))?;
    let d = rq.d;
    let sc = conn.scale();
    let gamma = sweep("rotated-connection", &[d, d, d], sc, qc.tol, |i| {
        rconn.gamma(i[0], i[1], i[2]).clone() - transported.gamma(i[0], i[1], i[2]).clone()
    });
    let td = compute_torsion(&rq, &rconn).map_err(|e| ConformalError::Rebuild(e.to_string()))?;
    let cp = compute_curvature(&rq, &rconn);
    let lt = wqc::compute_l(&cp, &td, &rq).map_err(|e| ConformalError::Rebuild(e.to_string()))?;
    let wp = wqc::compute_wr(&cp, &lt, &td, &rq).map_err(|e| ConformalError::Rebuild(e.to_string()))?;
    Ok(vec![gamma, wqc::tensor_agreement("rotated-wqc", &wp.wr, wr, qc.tol)])
}

/// A random rotation from a nonzero integer quaternion with entries in `[−3, 3]`.
pub fn random_rotation(rng: &mut impl Rng) -> ([i64; 4], [[Rational; 3]; 3]) {
    loop {
        let q: [i64; 4] = std::array::from_fn(|_| rng.gen_range(-3..=3));
        if let Ok(psi) = rotation_from_quaternion(q) {
            return (q, psi);
        }
    }
}

/// Helper used by tests and the report: torsion and `U` as seen by the formulas.
pub fn torsion_parts<S: Scalar>(td: &TorsionData<S>, n: usize) -> (Mat<S>, Mat<S>) {
    (td.t0.clone(), u_eff(td, n))
}

#[cfg(test)]
mod tests {
    use num_traits::Zero;
    use super::*;
    use crate::builtins;
    use crate::structure::{parse, to_lie_frame};

    type Q = Rational;

    struct Base {
        qc: QcStructure<Q>,
        conn: Connection<Q>,
        ps: PointState<Q>,
        wr: Tensor<Q>,
    }

    fn base(text: &str) -> Base {
        let sf = parse(text).unwrap();
        let qc = build_qc(&sf.name, to_lie_frame(&sf).unwrap(), None, 0.0).unwrap();
        let basis = build_spn_sp1_basis(&qc).unwrap();
        let conn = solve_biquard(&qc, &basis).unwrap();
        let td = compute_torsion(&qc, &conn).unwrap();
        let cp = compute_curvature(&qc, &conn);
        let lt = wqc::compute_l(&cp, &td, &qc).unwrap();
        let wp = wqc::compute_wr(&cp, &lt, &td, &qc).unwrap();
        let ps = PointState::from_pipeline(&cp, &lt);
        Base { qc, conn, ps, wr: wp.wr }
    }

    #[test]
    fn constant_h_has_vanishing_s_and_m() {
        let b = base(builtins::G3);
        let jet = ConformalJet::constant(rat(2, 1), 4);
        let sd = compute_s(&jet, &b.qc).unwrap();
        assert!(sd.s_h.data().iter().all(|v| v.is_zero()));
        assert!(sd.s_xi.iter().all(|x| x.is_zero()));
        assert!(compute_m(&jet, &b.qc).unwrap().m.is_zero());
    }

    #[test]
    fn vertical_s_with_only_dh_xi1() {
        let b = base(builtins::HEISENBERG_N1);
        let q = rat(3, 2);
        let mut jet = ConformalJet::constant(rat(1, 1), 4);
        jet.dh_xi[0] = q.clone();
        let sd = compute_s(&jet, &b.qc).unwrap();
        assert_eq!(sd.s_xi[0], Mat::identity(4).scale(&-q.clone()));
        assert_eq!(sd.s_xi[1], b.qc.omega(2).scale(&-q.clone()));
        assert_eq!(sd.s_xi[2], b.qc.omega(1).scale(&q));
    }

    #[test]
    fn m_for_dh_xi2_only() {
        let b = base(builtins::HEISENBERG_N1);
        let q = rat(-5, 3);
        let mut jet = ConformalJet::constant(rat(1, 1), 4);
        jet.dh_xi[1] = q.clone();
        let md = compute_m(&jet, &b.qc).unwrap();
        assert_eq!(md.m, b.qc.omega(1).scale(&(-q.clone() * rat(1, 2))));
        assert_eq!(md.m_s[1], -q * rat(2, 1));
    }

    #[test]
    fn invalid_jets_rejected() {
        let b = base(builtins::HEISENBERG_N1);
        let mut jet = ConformalJet::constant(rat(-1, 1), 4);
        assert!(matches!(compute_m(&jet, &b.qc), Err(ConformalError::InvalidJet(_))));
        jet.h = rat(1, 1);
        jet.hess_sym.set(0, 1, rat(1, 1));
        assert!(matches!(compute_s(&jet, &b.qc), Err(ConformalError::InvalidJet(_))));
    }

    #[test]
    fn constant_half_is_identity_and_two_scales_by_quarter() {
        let b = base(builtins::G3);
        let (same, _) = transform(&b.ps, &ConformalJet::constant(rat(1, 2), 4), &b.qc).unwrap();
        assert_eq!(same, b.ps);
        let (bar, _) = transform(&b.ps, &ConformalJet::constant(rat(2, 1), 4), &b.qc).unwrap();
        assert_eq!(bar.r, b.ps.r.scale(&rat(1, 4)));
        assert_eq!(bar.l, b.ps.l);
        assert_eq!(bar.wr(&b.qc), b.wr.scale(&rat(1, 4)));
        assert_eq!(wqc::raise_last(&bar.wr(&b.qc), &bar.gscale), wqc::raise_last(&b.wr, &rat(1, 1)));
    }

    #[test]
    fn constant_factors_compose() {
        let b = base(builtins::G1);
        let (h1, h2) = (rat(3, 1), rat(1, 2) * rat(1, 3));
        let (a, _) = transform(&b.ps, &ConformalJet::constant(h1.clone(), 4), &b.qc).unwrap();
        let (ab, _) = transform(&a, &ConformalJet::constant(h2.clone(), 4), &b.qc).unwrap();
        let (direct, _) = transform(&b.ps, &ConformalJet::constant(rat(2, 1) * h1 * h2, 4), &b.qc).unwrap();
        assert_eq!(ab, direct);
    }

    #[test]
    fn non_constant_jet_needs_unit_base() {
        let b = base(builtins::G1);
        let (a, _) = transform(&b.ps, &ConformalJet::constant(rat(3, 1), 4), &b.qc).unwrap();
        let jet = seeded_jet::<Q>(4, 0, 0);
        assert_eq!(transform(&a, &jet, &b.qc).unwrap_err(), ConformalError::NonUnitBase);
    }

    #[test]
    fn seeded_trials_pass_on_n1_builtins() {
        for t in [builtins::HEISENBERG_N1, builtins::G1, builtins::G3] {
            let b = base(t);
            for o in run_trials(&b.ps, &b.qc, 4, 7) {
                assert!(o.pass(), "{:?}", o);
            }
        }
    }

    #[test]
    fn seeds_are_deterministic() {
        assert_eq!(seeded_jet::<Q>(4, 10, 3), seeded_jet::<Q>(4, 12, 1));
        assert_ne!(seeded_jet::<Q>(4, 10, 3), seeded_jet::<Q>(4, 10, 4));
    }

    #[test]
    fn rotations() {
        let quarter = rotation_from_quaternion([1, 0, 0, 1]).unwrap();
        assert_eq!(quarter[0], [rat(0, 1), rat(-1, 1), rat(0, 1)]);
        assert_eq!(quarter[1], [rat(1, 1), rat(0, 1), rat(0, 1)]);
        let b = base(builtins::G3);
        let res = check_rotation_invariance(&b.qc, &b.conn, &b.wr, &quarter).unwrap();
        assert!(res.iter().all(|r| r.pass), "{res:?}");
        let ninth = rotation_from_quaternion([1, 2, 2, 0]).unwrap();
        assert_eq!(ninth[0][0], rat(1, 9));
        let b = base(builtins::G1);
        assert!(check_rotation_invariance(&b.qc, &b.conn, &b.wr, &ninth).unwrap().iter().all(|r| r.pass));
        let mut bad = quarter.clone();
        bad[0][0] = rat(1, 2);
        assert_eq!(check_rotation(&bad), Err(ConformalError::NotRotation));
        let mut refl = rotation_from_quaternion([1, 0, 0, 0]).unwrap();
        refl[2][2] = rat(-1, 1);
        assert_eq!(check_rotation(&refl), Err(ConformalError::NotRotation));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(12))]
        #[test]
        fn covariance_for_arbitrary_seeds(seed in proptest::prelude::any::<u64>()) {
            let b = base(builtins::G3);
            let jet = seeded_jet::<Q>(4, seed, 0);
            let res = check_covariance(&b.ps, &jet, &b.qc).unwrap();
            proptest::prop_assert!(res.pass, "{:?}", res);
        }
    }
}
