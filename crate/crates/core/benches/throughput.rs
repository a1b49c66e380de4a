use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use stccpm::harness::{run_point, SimConfig, StopRule};
use stccpm::mlse::Decoder;
use stccpm::stc::{verify_code_with, VerifyOptions};
use stccpm::{CorrectionFamily, CpmParams, Execution, ModIndex, PulseShape, StCode};

fn params() -> CpmParams {
    CpmParams::new(ModIndex::from_fraction(1, 2).unwrap(), 4, 2, PulseShape::Rec)
        .unwrap()
        .with_oversampling(16)
        .unwrap()
}

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn verification(c: &mut Criterion) {
    let mut group = c.benchmark_group("verify");
    group.sample_size(10);
    let p = params();
    let opts = VerifyOptions { trials: 200, blocks_per_trial: 4, seed: 1 };
    for (lt, fam) in [(2, CorrectionFamily::Pc2Generic), (3, CorrectionFamily::LinPc)] {
        let code = StCode::family(lt, fam).unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(fam.name(), name), &exec, |b, &exec| {
                b.iter(|| verify_code_with(&code, &p, &opts, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn ber_point(c: &mut Criterion) {
    let mut group = c.benchmark_group("ber_point");
    group.sample_size(10);
    for (lt, fam) in [(2, CorrectionFamily::Pc2Generic), (3, CorrectionFamily::LinPc)] {
        let mut cfg = SimConfig::new(StCode::family(lt, fam).unwrap().into(), params());
        cfg.stop = StopRule { min_errors: u64::MAX, max_bits: 50_000 };
        let decoder = Decoder::new(&cfg.scheme, &cfg.params, cfg.decoder).unwrap();
        for (name, exec) in MODES {
            let mut cfg = cfg.clone();
            cfg.exec = exec;
            group.bench_function(BenchmarkId::new(fam.name(), name), |b| {
                b.iter(|| run_point(&cfg, &decoder, 8.0).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, verification, ber_point);
criterion_main!(benches);
