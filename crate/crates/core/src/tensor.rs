//! Dense multi-index tensors over a fixed frame, and small square matrices.
//!
//! A frame of a `(4n+3)`-dimensional algebra has a horizontal range `0..4n`
//! and a full range `0..4n+3` (indices are 0-based internally). Each tensor
//! slot declares which range it accepts; accessing a horizontal slot with a
//! vertical index is an error.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IndexRange {
    /// Horizontal indices `0..4n`.
    H,
    /// All frame indices `0..4n+3`.
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Valence {
    Covariant,
    Contravariant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Slot {
    pub range: IndexRange,
    pub valence: Valence,
}

impl Slot {
    pub const H: Slot = Slot { range: IndexRange::H, valence: Valence::Covariant };
    pub const FULL: Slot = Slot { range: IndexRange::Full, valence: Valence::Covariant };
    pub const FULL_UP: Slot = Slot { range: IndexRange::Full, valence: Valence::Contravariant };
    pub const H_UP: Slot = Slot { range: IndexRange::H, valence: Valence::Contravariant };
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TensorError {
    #[error("tensor has rank {rank} but {given} indices were supplied")]
    RankMismatch { rank: usize, given: usize },
    #[error("index {index} in slot {slot} is outside its {range:?} range of length {len}")]
    IndexOutOfRange { slot: usize, index: usize, range: IndexRange, len: usize },
    #[error("slot {slot} does not exist in a rank-{rank} tensor")]
    NoSuchSlot { slot: usize, rank: usize },
    #[error("slots {a} and {b} have different ranges")]
    SlotMismatch { a: usize, b: usize },
    #[error("contraction metric must be a diagonal rank-2 tensor over the contracted range")]
    BadMetric,
    #[error("tensor shapes differ")]
    ShapeMismatch,
}

/// Dense tensor with per-slot index range and valence.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<S> {
    slots: Vec<Slot>,
    m: usize,
    d: usize,
    strides: Vec<usize>,
    data: Vec<S>,
}

impl<S: Scalar> Tensor<S> {
    /// Zero tensor for quaternionic dimension `n` (horizontal size `4n`).
    pub fn zeros(slots: &[Slot], n: usize) -> Self {
        let (m, d) = (4 * n, 4 * n + 3);
        let lens: Vec<usize> = slots.iter().map(|s| range_len(s.range, m, d)).collect();
        let mut strides = vec![1; slots.len()];
        for k in (0..slots.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * lens[k + 1];
        }
        let size = lens.iter().product();
        Tensor { slots: slots.to_vec(), m, d, strides, data: vec![S::zero(); size] }
    }

    /// Tensor whose components are `f(index)`.
    pub fn from_fn(slots: &[Slot], n: usize, f: impl Fn(&[usize]) -> S + Sync + Send) -> Self {
        let mut t = Self::zeros(slots, n);
        let lens = t.lens();
        let strides = t.strides.clone();
        t.data = crate::par::map_range(t.data.len(), |flat| {
            let mut idx = vec![0; lens.len()];
            let mut r = flat;
            for k in 0..lens.len() {
                idx[k] = r / strides[k];
                r %= strides[k];
            }
            f(&idx)
        });
        t
    }

    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn n(&self) -> usize {
        self.m / 4
    }

    pub fn lens(&self) -> Vec<usize> {
        self.slots.iter().map(|s| range_len(s.range, self.m, self.d)).collect()
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    fn offset(&self, idx: &[usize]) -> Result<usize, TensorError> {
        if idx.len() != self.slots.len() {
            return Err(TensorError::RankMismatch { rank: self.slots.len(), given: idx.len() });
        }
        let mut off = 0;
        for (k, (&i, slot)) in idx.iter().zip(&self.slots).enumerate() {
            let len = range_len(slot.range, self.m, self.d);
            if i >= len {
                return Err(TensorError::IndexOutOfRange { slot: k, index: i, range: slot.range, len });
            }
            off += i * self.strides[k];
        }
        Ok(off)
    }

    /// Checked component access.
    pub fn get(&self, idx: &[usize]) -> Result<&S, TensorError> {
        self.offset(idx).map(|o| &self.data[o])
    }

    /// Component access that panics on an invalid index.
    pub fn at(&self, idx: &[usize]) -> &S {
        match self.offset(idx) {
            Ok(o) => &self.data[o],
            Err(e) => panic!("{e}"),
        }
    }

    pub fn set(&mut self, idx: &[usize], v: S) -> Result<(), TensorError> {
        let o = self.offset(idx)?;
        self.data[o] = v;
        Ok(())
    }

    /// Contract slots `a` and `b` against the inverse of a diagonal `metric`.
    ///
    /// In an orthonormal frame the metric is the identity and this is the plain
    /// sum over the shared index; a scaled metric `c·g` weights it by `1/c`.
    pub fn contract(&self, a: usize, b: usize, metric: &Tensor<S>) -> Result<Tensor<S>, TensorError> {
        let rank = self.rank();
        for s in [a, b] {
            if s >= rank {
                return Err(TensorError::NoSuchSlot { slot: s, rank });
            }
        }
        if a == b || self.slots[a].range != self.slots[b].range {
            return Err(TensorError::SlotMismatch { a, b });
        }
        let range = self.slots[a].range;
        let len = range_len(range, self.m, self.d);
        if metric.rank() != 2 || metric.slots[0].range != range || metric.slots[1].range != range {
            return Err(TensorError::BadMetric);
        }
        let mut weights = Vec::with_capacity(len);
        for i in 0..len {
            for j in 0..len {
                if i != j && !metric.at(&[i, j]).is_zero() {
                    return Err(TensorError::BadMetric);
                }
            }
            let gii = metric.at(&[i, i]);
            if gii.is_zero() {
                return Err(TensorError::BadMetric);
            }
            weights.push(S::one() / gii.clone());
        }
        let kept: Vec<Slot> =
            self.slots.iter().enumerate().filter(|(k, _)| *k != a && *k != b).map(|(_, s)| *s).collect();
        let out = Tensor::from_fn(&kept, self.n(), |idx| {
            let mut full = vec![0; rank];
            let mut it = idx.iter();
            for (k, slot) in full.iter_mut().enumerate() {
                if k != a && k != b {
                    *slot = *it.next().unwrap();
                }
            }
            let mut acc = S::zero();
            for (i, w) in weights.iter().enumerate() {
                full[a] = i;
                full[b] = i;
                acc.add_mul(self.at(&full), w);
            }
            acc
        });
        Ok(out)
    }

    fn swap_combine(&self, a: usize, b: usize, sign: i64) -> Result<Tensor<S>, TensorError> {
        let rank = self.rank();
        for s in [a, b] {
            if s >= rank {
                return Err(TensorError::NoSuchSlot { slot: s, rank });
            }
        }
        if self.slots[a].range != self.slots[b].range {
            return Err(TensorError::SlotMismatch { a, b });
        }
        let half = S::ratio(1, 2);
        let sign = S::from_i64(sign);
        Ok(Tensor::from_fn(&self.slots, self.n(), |idx| {
            let mut sw = idx.to_vec();
            sw.swap(a, b);
            let mut v = self.at(idx).clone();
            v.add_mul(self.at(&sw), &sign);
            v * half.clone()
        }))
    }

    /// `(t + t∘swap(a,b)) / 2`.
    pub fn symmetrize(&self, a: usize, b: usize) -> Result<Tensor<S>, TensorError> {
        self.swap_combine(a, b, 1)
    }

    /// `(t − t∘swap(a,b)) / 2`.
    pub fn antisymmetrize(&self, a: usize, b: usize) -> Result<Tensor<S>, TensorError> {
        self.swap_combine(a, b, -1)
    }

    fn zip_with(&self, o: &Tensor<S>, f: impl Fn(&S, &S) -> S) -> Result<Tensor<S>, TensorError> {
        if self.slots != o.slots || self.m != o.m {
            return Err(TensorError::ShapeMismatch);
        }
        let mut out = self.clone();
        for (x, (a, b)) in out.data.iter_mut().zip(self.data.iter().zip(&o.data)) {
            *x = f(a, b);
        }
        Ok(out)
    }

    pub fn add(&self, o: &Tensor<S>) -> Result<Tensor<S>, TensorError> {
        self.zip_with(o, |a, b| a.clone() + b.clone())
    }

    pub fn sub(&self, o: &Tensor<S>) -> Result<Tensor<S>, TensorError> {
        self.zip_with(o, |a, b| a.clone() - b.clone())
    }

    pub fn scale(&self, k: &S) -> Tensor<S> {
        let mut out = self.clone();
        for x in out.data.iter_mut() {
            *x *= k;
        }
        out
    }

    /// Sum of squared components (plain orthonormal-frame norm).
    pub fn norm_sq(&self) -> S {
        let mut acc = S::zero();
        for x in &self.data {
            acc.add_mul(x, x);
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.to_f64().abs()).fold(0.0, f64::max)
    }

    /// True if every component is zero (exactly, or within `tol` in float mode).
    pub fn is_negligible(&self, tol: f64) -> bool {
        let scale = self.max_abs();
        self.data.iter().all(|x| x.negligible(if S::EXACT { 0.0 } else { 1.0 }, tol) || scale == 0.0)
    }

    pub fn count_nonzero(&self) -> usize {
        self.data.iter().filter(|x| !x.is_zero()).count()
    }
}

fn range_len(r: IndexRange, m: usize, d: usize) -> usize {
    match r {
        IndexRange::H => m,
        IndexRange::Full => d,
    }
}

/// Dense square matrix, row-major: `get(r, c)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<S> {
    dim: usize,
    data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(dim: usize) -> Self {
        Mat { dim, data: vec![S::zero(); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |r, c| if r == c { S::one() } else { S::zero() })
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(f(r, c));
            }
        }
        Mat { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> &S {
        &self.data[r * self.dim + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: S) {
        self.data[r * self.dim + c] = v;
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self.get(c, r).clone())
    }

    pub fn mul(&self, o: &Mat<S>) -> Self {
        let n = self.dim;
        let mut out: Mat<S> = Mat::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..n {
                    let b = o.get(k, c);
                    if !b.is_zero() {
                        out.data[r * n + c].add_mul(a, b);
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, o: &Mat<S>) -> Self {
        Self::from_fn(self.dim, |r, c| self.get(r, c).clone() + o.get(r, c).clone())
    }

    pub fn sub(&self, o: &Mat<S>) -> Self {
        Self::from_fn(self.dim, |r, c| self.get(r, c).clone() - o.get(r, c).clone())
    }

    pub fn scale(&self, k: &S) -> Self {
        Self::from_fn(self.dim, |r, c| self.get(r, c).mul_ref(k))
    }

    /// `AB − BA`.
    pub fn commutator(&self, o: &Mat<S>) -> Self {
        self.mul(o).sub(&o.mul(self))
    }

    /// Frobenius inner product `Σ P_ab Q_ab`.
    pub fn inner(&self, o: &Mat<S>) -> S {
        let mut acc = S::zero();
        for (a, b) in self.data.iter().zip(&o.data) {
            acc.add_mul(a, b);
        }
        acc
    }

    /// `Σ A_ab²`.
    pub fn norm_sq(&self) -> S {
        self.inner(self)
    }

    pub fn trace(&self) -> S {
        let mut acc = S::zero();
        for i in 0..self.dim {
            acc += self.get(i, i);
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.to_f64().abs()).fold(0.0, f64::max)
    }

    /// Symmetric part `(A + Aᵀ)/2`.
    pub fn sym(&self) -> Self {
        let half = S::ratio(1, 2);
        Self::from_fn(self.dim, |r, c| (self.get(r, c).clone() + self.get(c, r).clone()) * half.clone())
    }

    /// Skew part `(A − Aᵀ)/2`.
    pub fn skew(&self) -> Self {
        let half = S::ratio(1, 2);
        Self::from_fn(self.dim, |r, c| (self.get(r, c).clone() - self.get(c, r).clone()) * half.clone())
    }
}
