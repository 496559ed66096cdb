//! Parallel vs sequential execution of the main stages.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qcflat_core::biquard::{build_spn_sp1_basis, compute_torsion, solve_biquard};
use qcflat_core::builtins;
use qcflat_core::conformal::{run_trials, PointState};
use qcflat_core::curvature::compute_curvature;
use qcflat_core::par;
use qcflat_core::qc::build_qc;
use qcflat_core::scalar::Rational;
use qcflat_core::structure::{parse, to_lie_frame};
use qcflat_core::wqc::{compute_l, compute_wr};

fn modes() -> [(&'static str, bool); 2] {
    [("parallel", false), ("sequential", true)]
}

fn bench(c: &mut Criterion) {
    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    for name in ["g3", "heisenberg-n2"] {
        let sf = parse(builtins::find(name).unwrap().text).unwrap();
        let qc = build_qc::<Rational>(name, to_lie_frame(&sf).unwrap(), None, 0.0).unwrap();
        let basis = build_spn_sp1_basis(&qc).unwrap();
        let conn = solve_biquard(&qc, &basis).unwrap();
        let td = compute_torsion(&qc, &conn).unwrap();
        let cp = compute_curvature(&qc, &conn);
        let lt = compute_l(&cp, &td, &qc).unwrap();
        let ps = PointState::from_pipeline(&cp, &lt);
        for (mode, seq) in modes() {
            par::force_sequential(seq);
            group.bench_with_input(BenchmarkId::new(format!("curvature+wr/{mode}"), name), &(), |b, _| {
                b.iter(|| {
                    let cp = compute_curvature(&qc, &conn);
                    let lt = compute_l(&cp, &td, &qc).unwrap();
                    compute_wr(&cp, &lt, &td, &qc).unwrap()
                })
            });
            group.bench_with_input(BenchmarkId::new(format!("conformal-trials/{mode}"), name), &(), |b, _| {
                b.iter(|| run_trials(&ps, &qc, 4, 0))
            });
        }
        par::force_sequential(false);
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
