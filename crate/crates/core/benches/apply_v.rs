//! Micro-benchmark: the structured operator apply against a dense
//! matvec/adjoint pair on a tall sparse-active instance
//! (m = 500, n = 50,000, r + r2 = 60). The structured apply should win by
//! an order of magnitude since its cost scales with the active set.

use criterion::{criterion_group, criterion_main, Criterion};
use sglasso::data_io::gen_synthetic;
use sglasso::jacobian::derivative_info;
use sglasso::model::{GroupPartition, SglProblem, WeightMode};
use sglasso::newton_system::build_structured;

fn bench_apply_v(c: &mut Criterion) {
    let m = 500;
    let n = 50_000;
    let g = 50;
    let inst = gen_synthetic::<f64>(m, n, g, 11, 1.0).unwrap();
    let part = GroupPartition::contiguous(&inst.group_sizes, WeightMode::Sqrt).unwrap();
    // large lambda1 so only the planted coordinates stay active:
    // 10 exterior groups x 5 surviving coordinates ~ r + r2 = 60
    let prob = SglProblem::new(inst.a, inst.b, 60.0, 0.02, part).unwrap();

    let u: Vec<f64> = inst
        .truth
        .iter()
        .enumerate()
        .map(|(j, &t)| 12.0 * t + ((j % 23) as f64 - 11.0) * 0.05)
        .collect();
    let info = derivative_info(&prob, &u).unwrap();
    let rank = info.r() + info.r2();
    assert!(rank > 0 && rank <= 120, "active rank {rank}");

    let sys = build_structured(prob.a(), 1.5, &info).unwrap();
    let h: Vec<f64> = (0..m).map(|i| ((i * 37 % 101) as f64 - 50.0) / 17.0).collect();

    c.bench_function("structured_apply_v", |bch| {
        bch.iter(|| std::hint::black_box(sys.apply_v(std::hint::black_box(&h))))
    });

    let x = vec![0.5; n];
    c.bench_function("dense_matvec_pair", |bch| {
        bch.iter(|| {
            let ax = prob.a().matvec(std::hint::black_box(&x));
            std::hint::black_box(prob.a().adjoint_matvec(std::hint::black_box(&ax)))
        })
    });
}

criterion_group!(benches, bench_apply_v);
criterion_main!(benches);
