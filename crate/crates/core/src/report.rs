//! The full analysis pipeline and its serializable report.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bianchi::{verify_bianchi, BianchiLevel};
use crate::biquard::{
    alpha_h_zero, build_spn_sp1_basis, compute_torsion, solve_biquard, verify_axioms, verify_torsion_properties, BiquardError,
};
use crate::conformal::{run_trials, PointState};
use crate::curvature::{
    compute_curvature, flatness_implication, u_eff, verify_antisymmetry, verify_div_identity, verify_ricci_formulas,
    verify_sp1_part,
};
use crate::qc::{build_qc, QcError};
use crate::residual::Residual;
use crate::scalar::{render, Rational, Scalar, ScalarMode};
use crate::structure::{parse, to_lie_frame, FrameError, ParseError};
use crate::wqc::{compute_b_and_check_inte, compute_l, compute_wr, verify_wr_properties, Verdict, WqcError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckLevel {
    #[default]
    Basic,
    /// Adds the extended Bianchi identities and the integrability checks.
    Full,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisOptions {
    pub mode: ScalarMode,
    pub check_level: CheckLevel,
    pub conformal_trials: u64,
    pub seed: u64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { mode: ScalarMode::ExactRational, check_level: CheckLevel::Basic, conformal_trials: 25, seed: 0 }
    }
}

/// Input or validation failure; maps to exit code 2.
#[derive(Debug, Error)]
pub enum AnalyzeError {
    #[error("{source_name}:{}:{}: {}", .error.line, .error.col, .error.kind)]
    Parse { source_name: String, error: ParseError },
    #[error("{source_name}: {error}")]
    Frame { source_name: String, error: FrameError },
    #[error("{source_name}: {error}")]
    Qc { source_name: String, error: QcError },
    #[error("{source_name}: {error}")]
    Biquard { source_name: String, error: BiquardError },
    #[error("{source_name}: {error}")]
    Wqc { source_name: String, error: WqcError },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectionSummary {
    pub gamma_nonzero: usize,
    pub alpha_h_zero: bool,
    pub unknowns: usize,
    pub equations: usize,
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorsionSummary {
    pub t0_norm_sq: String,
    pub u_norm_sq: String,
    pub u_zero: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSummary {
    pub scal: String,
    pub r_norm_sq: String,
    pub flat: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WqcSummary {
    pub wr_norm_sq: String,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformalSummary {
    pub trials: u64,
    pub base_seed: u64,
    pub max_residual: String,
    pub pass: bool,
    /// `"trial k (seed s): name"` for every failing gate.
    pub failures: Vec<String>,
}

/// Wall-clock times in microseconds.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub connection_us: u64,
    pub curvature_us: u64,
    pub identities_us: u64,
    pub conformal_us: u64,
    pub total_us: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema: u32,
    pub input_name: String,
    pub n: usize,
    pub scalar_mode: ScalarMode,
    pub check_level: CheckLevel,
    pub connection: ConnectionSummary,
    pub torsion: TorsionSummary,
    pub curvature: CurvatureSummary,
    pub wqc: WqcSummary,
    pub identity_suite: Vec<Residual>,
    pub conformal_suite: ConformalSummary,
    pub timings: Timings,
}

impl AnalysisReport {
    pub fn all_pass(&self) -> bool {
        self.identity_suite.iter().all(|r| r.pass) && self.conformal_suite.pass
    }

    /// 0 when every asserted check passes, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            0
        } else {
            1
        }
    }

    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let _ = writeln!(s, "structure     {} (n = {}, {})", self.input_name, self.n, mode_name(&self.scalar_mode));
        let c = &self.connection;
        let _ = writeln!(
            s,
            "connection    {} nonzero Γ, α|_H = 0: {}, rank {}/{} ({} equations)",
            c.gamma_nonzero, c.alpha_h_zero, c.rank, c.unknowns, c.equations
        );
        let t = &self.torsion;
        let _ = writeln!(s, "torsion       ‖T⁰‖² = {}, ‖U‖² = {}, u = 0: {}", t.t0_norm_sq, t.u_norm_sq, t.u_zero);
        let k = &self.curvature;
        let _ = writeln!(s, "curvature     Scal = {}, ‖R‖² = {}, flat: {}", k.scal, k.r_norm_sq, k.flat);
        let _ = writeln!(s, "W^qc          ‖WR‖² = {}", self.wqc.wr_norm_sq);
        let _ = writeln!(s, "verdict       {}", self.wqc.verdict);
        let _ = writeln!(s, "identities ({} checks, level {:?}):", self.identity_suite.len(), self.check_level);
        for r in &self.identity_suite {
            let status = match (r.asserted, r.pass) {
                (false, _) => "info",
                (true, true) => "ok",
                (true, false) => "FAIL",
            };
            let _ = writeln!(s, "  {status:<4} {:<40} max |Δ| = {} over {}", r.name, r.max_abs, r.checked);
        }
        let cs = &self.conformal_suite;
        let _ = writeln!(
            s,
            "conformal     {} trials from seed {}: {} (max |Δ| = {})",
            cs.trials,
            cs.base_seed,
            if cs.pass { "ok" } else { "FAIL" },
            cs.max_residual
        );
        for f in &cs.failures {
            let _ = writeln!(s, "  FAIL {f}");
        }
        let _ = writeln!(s, "time          {:.3} s", self.timings.total_us as f64 * 1e-6);
        s
    }
}

fn mode_name(m: &ScalarMode) -> String {
    match m {
        ScalarMode::ExactRational => "exact".into(),
        ScalarMode::Float64 { tolerance } => format!("float, tol {tolerance:e}"),
    }
}

fn micros(t: Instant) -> u64 {
    t.elapsed().as_micros() as u64
}

/// Parse, validate and analyze a structure file.
pub fn analyze_text(source_name: &str, text: &str, opts: &AnalysisOptions) -> Result<AnalysisReport, AnalyzeError> {
    if opts.mode.is_exact() {
        analyze_as::<Rational>(source_name, text, opts)
    } else {
        analyze_as::<f64>(source_name, text, opts)
    }
}

fn analyze_as<S: Scalar>(source_name: &str, text: &str, opts: &AnalysisOptions) -> Result<AnalysisReport, AnalyzeError> {
    let sn = || source_name.to_string();
    let start = Instant::now();
    let sf = parse(text).map_err(|error| AnalyzeError::Parse { source_name: sn(), error })?;
    let frame = to_lie_frame(&sf).map_err(|error| AnalyzeError::Frame { source_name: sn(), error })?;
    let name = if sf.name.is_empty() { source_name.to_string() } else { sf.name.clone() };
    let tol = opts.mode.tolerance();
    let qc = build_qc::<S>(&name, frame, None, tol).map_err(|error| AnalyzeError::Qc { source_name: sn(), error })?;
    let bq = |error| AnalyzeError::Biquard { source_name: sn(), error };
    let basis = build_spn_sp1_basis(&qc).map_err(bq)?;
    let conn = solve_biquard(&qc, &basis).map_err(bq)?;
    let td = compute_torsion(&qc, &conn).map_err(bq)?;
    let connection_us = micros(start);

    let t = Instant::now();
    let cp = compute_curvature(&qc, &conn);
    let wq = |error| AnalyzeError::Wqc { source_name: sn(), error };
    let lt = compute_l(&cp, &td, &qc).map_err(wq)?;
    let wp = compute_wr(&cp, &lt, &td, &qc).map_err(wq)?;
    let curvature_us = micros(t);

    let t = Instant::now();
    let level = match opts.check_level {
        CheckLevel::Basic => BianchiLevel::Basic,
        CheckLevel::Full => BianchiLevel::Extended,
    };
    let mut suite = verify_axioms(&qc, &conn, &basis);
    suite.extend(verify_torsion_properties(&td, &qc));
    suite.extend(verify_antisymmetry(&cp, &qc));
    suite.extend(verify_sp1_part(&cp, &td, &qc));
    suite.extend(verify_ricci_formulas(&cp, &td, &qc));
    suite.push(verify_div_identity(&cp, &td, &qc, &conn));
    suite.push(flatness_implication(&cp, &qc));
    suite.extend(verify_bianchi(&cp, &td, &qc, &conn, level));
    suite.extend(wp.route_residuals.iter().cloned());
    suite.extend(verify_wr_properties(&wp.wr, &qc));
    if opts.check_level == CheckLevel::Full {
        suite.extend(compute_b_and_check_inte(&lt, &conn, &qc, &wp, &cp).1);
    }
    let identities_us = micros(t);

    let t = Instant::now();
    let ps = PointState::from_pipeline(&cp, &lt);
    let outcomes = run_trials(&ps, &qc, opts.conformal_trials, opts.seed);
    let mut failures = Vec::new();
    let mut worst = (0.0f64, "0".to_string());
    for o in &outcomes {
        if let Some(e) = &o.error {
            failures.push(format!("trial {} (seed {}): {e}", o.index, o.seed));
        }
        for r in &o.residuals {
            if r.asserted && !r.pass {
                failures.push(format!("trial {} (seed {}): {}", o.index, o.seed, r.name));
            }
            let v = r.max_abs.parse::<f64>().unwrap_or_else(|_| parse_ratio(&r.max_abs));
            if v > worst.0 {
                worst = (v, r.max_abs.clone());
            }
        }
    }
    let conformal_suite = ConformalSummary {
        trials: opts.conformal_trials,
        base_seed: opts.seed,
        max_residual: worst.1,
        pass: failures.is_empty(),
        failures,
    };
    let conformal_us = micros(t);

    let u = u_eff(&td, qc.n);
    Ok(AnalysisReport {
        schema: SCHEMA_VERSION,
        input_name: name,
        n: qc.n,
        scalar_mode: opts.mode,
        check_level: opts.check_level,
        connection: ConnectionSummary {
            gamma_nonzero: conn.nonzero_count(),
            alpha_h_zero: alpha_h_zero(&qc, &conn),
            unknowns: conn.unknowns,
            equations: conn.equations,
            rank: conn.rank,
        },
        torsion: TorsionSummary {
            t0_norm_sq: render(&td.t0.norm_sq()),
            u_norm_sq: render(&u.norm_sq()),
            u_zero: qc.mat_is_zero(&td.u),
        },
        curvature: CurvatureSummary {
            scal: render(&cp.scal),
            r_norm_sq: render(&cp.norm_sq()),
            flat: wp.verdict == Verdict::FlatConnection,
        },
        wqc: WqcSummary { wr_norm_sq: render(&wp.norm_sq), verdict: wp.verdict },
        identity_suite: suite,
        conformal_suite,
        timings: Timings { connection_us, curvature_us, identities_us, conformal_us, total_us: micros(start) },
    })
}

fn parse_ratio(s: &str) -> f64 {
    match s.split_once('/') {
        Some((a, b)) => a.trim().parse::<f64>().unwrap_or(f64::INFINITY) / b.trim().parse::<f64>().unwrap_or(1.0),
        None => f64::INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;
    use std::collections::HashSet;

    fn quick(level: CheckLevel) -> AnalysisOptions {
        AnalysisOptions { check_level: level, conformal_trials: 2, ..Default::default() }
    }

    #[test]
    fn verdicts_and_exit_codes() {
        let want = [
            ("heisenberg-n1", Verdict::FlatConnection),
            ("g1", Verdict::QcConformallyFlat),
            // WR of this builtin computes to exactly zero (see the acceptance test)
            ("g3", Verdict::QcConformallyFlat),
        ];
        for (name, v) in want {
            let b = builtins::find(name).unwrap();
            let r = analyze_text(name, b.text, &quick(CheckLevel::Basic)).unwrap();
            assert_eq!(r.wqc.verdict, v);
            assert_eq!(r.exit_code(), 0, "{}", r.to_text());
        }
    }

    #[test]
    fn identity_names_are_unique() {
        for level in [CheckLevel::Basic, CheckLevel::Full] {
            let r = analyze_text("g1", builtins::G1, &quick(level)).unwrap();
            let names: HashSet<_> = r.identity_suite.iter().map(|x| x.name.as_str()).collect();
            assert_eq!(names.len(), r.identity_suite.len());
            for id in ["first-bianchi", "pair-exchange", "minus1-projection", "sp1-curvature-forms", "t0-minus1-component", "u-3-component", "t0-xi-split"] {
                assert!(names.contains(id), "{id} missing");
            }
            if level == CheckLevel::Full {
                for id in ["vertical-bianchi-1", "vertical-bianchi-2", "integrability"] {
                    assert!(names.contains(id), "{id} missing");
                }
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let r = analyze_text("g3", builtins::G3, &quick(CheckLevel::Basic)).unwrap();
        let back: AnalysisReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
        assert!(serde_json::to_string(&r).unwrap().contains("\"schema\":1"));
    }

    #[test]
    fn float_mode_prints_decimals() {
        let opts = AnalysisOptions { mode: ScalarMode::float(), ..quick(CheckLevel::Basic) };
        let r = analyze_text("g1", builtins::G1, &opts).unwrap();
        assert_eq!(r.wqc.verdict, Verdict::QcConformallyFlat);
        assert_eq!(r.curvature.scal.parse::<f64>().unwrap(), -12.0);
        assert_eq!(r.exit_code(), 0, "{}", r.to_text());
    }

    #[test]
    fn input_errors_carry_context() {
        let e = analyze_text("bad.qc", "n = 1\nde[5] = 2 e[2,1]\n", &quick(CheckLevel::Basic)).unwrap_err();
        assert!(e.to_string().starts_with("bad.qc:2:"), "{e}");
    }
}
