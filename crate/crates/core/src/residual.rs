//! Residual reports for identity checks.

use serde::{Deserialize, Serialize};

use crate::par;
use crate::scalar::{render, Scalar};

/// Outcome of evaluating one identity over a set of index tuples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub name: String,
    /// Number of components evaluated.
    pub checked: usize,
    /// Components that are not (negligibly) zero.
    pub nonzero: usize,
    /// Largest `|residual|`, rendered exactly in exact mode.
    pub max_abs: String,
    /// 0-based index tuple of the largest residual, if any is nonzero.
    pub worst: Option<Vec<usize>>,
    /// False when the identity is evaluated for information only.
    pub asserted: bool,
    pub pass: bool,
}

impl Residual {
    /// Report-only residual: never fails.
    pub fn informational(mut self) -> Self {
        self.asserted = false;
        self.pass = true;
        self
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// A residual that is zero when `ok` holds, for checks without components.
    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Residual {
            name: name.into(),
            checked: 1,
            nonzero: usize::from(!ok),
            max_abs: if ok { "0".into() } else { "1".into() },
            worst: if ok { None } else { Some(Vec::new()) },
            asserted: true,
            pass: ok,
        }
    }

    /// Merge several residuals of one identity family into one entry.
    pub fn merge(name: impl Into<String>, parts: &[Residual]) -> Self {
        let mut out = Residual {
            name: name.into(),
            checked: 0,
            nonzero: 0,
            max_abs: "0".into(),
            worst: None,
            asserted: parts.iter().any(|p| p.asserted),
            pass: true,
        };
        let mut best = 0.0f64;
        for p in parts {
            out.checked += p.checked;
            out.nonzero += p.nonzero;
            out.pass &= p.pass;
            let v: f64 = parse_mag(&p.max_abs);
            if p.nonzero > 0 && (out.worst.is_none() || v > best) {
                best = v;
                out.max_abs = p.max_abs.clone();
                out.worst = p.worst.clone();
            }
        }
        out
    }
}

fn parse_mag(s: &str) -> f64 {
    match s.split_once('/') {
        Some((a, b)) => a.parse::<f64>().unwrap_or(f64::INFINITY) / b.parse::<f64>().unwrap_or(1.0),
        None => s.parse().unwrap_or(f64::INFINITY),
    }
}

/// Evaluate `f` on every tuple of `dims` (row-major) and summarize.
///
/// `scale` is the magnitude of the quantities entering the identity; it sets
/// the absolute floor of the float-mode zero test and is ignored in exact mode.
pub fn sweep<S: Scalar>(
    name: &str,
    dims: &[usize],
    scale: f64,
    tol: f64,
    f: impl Fn(&[usize]) -> S + Sync + Send,
) -> Residual {
    let total: usize = dims.iter().product();
    let values = par::map_range(total, |flat| {
        let idx = unflatten(flat, dims);
        f(&idx)
    });
    summarize(name, dims, &values, scale, tol)
}

/// Summarize precomputed residual values laid out row-major over `dims`.
pub fn summarize<S: Scalar>(name: &str, dims: &[usize], values: &[S], scale: f64, tol: f64) -> Residual {
    let mut nonzero = 0;
    let mut worst: Option<(usize, f64)> = None;
    for (k, v) in values.iter().enumerate() {
        if is_zero(v, scale, tol) {
            continue;
        }
        nonzero += 1;
        let a = v.to_f64().abs();
        if worst.is_none_or(|(_, b)| a > b) {
            worst = Some((k, a));
        }
    }
    let (max_abs, worst) = match worst {
        Some((k, _)) => (render(&values[k].abs()), Some(unflatten(k, dims))),
        None => ("0".to_string(), None),
    };
    Residual {
        name: name.to_string(),
        checked: values.len(),
        nonzero,
        max_abs,
        worst,
        asserted: true,
        pass: nonzero == 0,
    }
}

/// Exact zero, or negligible relative to `scale` in float mode.
pub fn is_zero<S: Scalar>(v: &S, scale: f64, tol: f64) -> bool {
    if S::EXACT {
        v.is_zero()
    } else {
        v.negligible(scale, tol)
    }
}

fn unflatten(mut flat: usize, dims: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        idx[k] = flat % dims[k];
        flat /= dims[k];
    }
    idx
}
