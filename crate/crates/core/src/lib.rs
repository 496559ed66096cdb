//! Exact quaternionic contact geometry of left-invariant structures.

pub mod builtins;
pub mod linsolve;
pub mod par;
pub mod scalar;
pub mod structure;
pub mod tensor;
pub mod wqc;
pub mod bianchi;
pub mod conformal;
pub mod biquard;
pub mod curvature;
pub mod qc;
pub mod report;
pub mod residual;
