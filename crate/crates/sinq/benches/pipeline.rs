//! Quantization pipeline benchmarks: the plain RTN path against the
//! normalized dual-scale path, each under sequential and rayon execution.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use sinq::{
    gen_synthetic, quantized_forward, sinkhorn_normalize, sinq_quantize, QuantizeOptions,
    SinkhornConfig,
};

#[cfg(feature = "parallel")]
fn run_exec<R: Send>(mode: &str, f: impl FnOnce() -> R + Send) -> R {
    match mode {
        // a one-thread pool takes the true sequential code path
        "seq" => rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(f),
        _ => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_exec<R>(_mode: &str, f: impl FnOnce() -> R) -> R {
    f()
}

fn exec_modes() -> &'static [&'static str] {
    if cfg!(feature = "parallel") {
        &["seq", "par"]
    } else {
        &["seq"]
    }
}

fn quantize_variants() -> Vec<(&'static str, QuantizeOptions)> {
    let rtn = QuantizeOptions::rtn(4, 64).unwrap();
    let mut sinq2 = QuantizeOptions::sinq(4, 64).unwrap();
    sinq2.sinkhorn = SinkhornConfig::with_max_iters(2);
    let sinq16 = QuantizeOptions::sinq(4, 64).unwrap();
    vec![("rtn", rtn), ("sinq-2it", sinq2), ("sinq-16it", sinq16)]
}

fn bench_quantize(c: &mut Criterion) {
    let (rows, cols) = (1024, 1024);
    let w = gen_synthetic(rows, cols, 0.01, 50.0, 42);
    let mut group = c.benchmark_group("quantize");
    group.throughput(Throughput::Elements((rows * cols) as u64));
    group.sample_size(10);
    for (name, opts) in quantize_variants() {
        for &mode in exec_modes() {
            group.bench_with_input(BenchmarkId::new(name, mode), &opts, |b, opts| {
                b.iter(|| run_exec(mode, || sinq_quantize(&w, opts).unwrap()));
            });
        }
    }
    group.finish();
}

fn bench_sinkhorn(c: &mut Criterion) {
    let mut group = c.benchmark_group("sinkhorn");
    group.sample_size(10);
    for size in [256usize, 1024] {
        let w = gen_synthetic(size, size, 0.01, 50.0, 7);
        group.throughput(Throughput::Elements((size * size) as u64));
        group.bench_with_input(BenchmarkId::new("normalize", size), &w, |b, w| {
            b.iter(|| sinkhorn_normalize(w, &SinkhornConfig::default()).unwrap());
        });
    }
    group.finish();
}

fn bench_forward(c: &mut Criterion) {
    let (rows, cols) = (1024, 1024);
    let w = gen_synthetic(rows, cols, 0.001, 10.0, 3);
    let qm = sinq_quantize(&w, &QuantizeOptions::sinq(4, 64).unwrap()).unwrap();
    let x: Vec<f32> = (0..rows).map(|i| ((i % 13) as f32 - 6.0) * 0.1).collect();
    let mut group = c.benchmark_group("forward");
    group.throughput(Throughput::Elements((rows * cols) as u64));
    group.sample_size(10);
    group.bench_function("factored", |b| {
        b.iter(|| quantized_forward(&x, &qm).unwrap());
    });
    group.finish();
}

criterion_group!(benches, bench_quantize, bench_sinkhorn, bench_forward);
criterion_main!(benches);
