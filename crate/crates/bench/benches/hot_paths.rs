use criterion::{black_box, criterion_group, criterion_main, Criterion};
use zeroext::adaptive::build_partition;
use zeroext::dyadic::approx_error_tables;
use zeroext::kernels::apply;
use zeroext::{sample, FunctionSpec, GridFunction, KernelFamily, KernelSpec, ShiftProfile};

fn cusp(dim: usize, level: u32) -> GridFunction {
    sample(&FunctionSpec::Cusp { alpha: 0.5, center: 0.5 }, dim, level).unwrap()
}

fn moduli(c: &mut Criterion) {
    let f = cusp(1, 12);
    c.bench_function("interior_profile_d1_L12", |b| {
        b.iter(|| ShiftProfile::interior_multi(black_box(&f), &[1.0, 2.0, 3.0], 0.25).unwrap())
    });
    let g = cusp(2, 6);
    c.bench_function("interior_profile_d2_L6", |b| {
        b.iter(|| ShiftProfile::interior_multi(black_box(&g), &[2.0], 0.25).unwrap())
    });
}

fn martingale(c: &mut Criterion) {
    let f = cusp(2, 9);
    c.bench_function("martingale_tables_d2_L9", |b| {
        b.iter(|| approx_error_tables(black_box(&f), &[1.0, 2.0]).unwrap())
    });
}

fn partition(c: &mut Criterion) {
    let f = cusp(2, 9);
    c.bench_function("partition_d2_L9", |b| b.iter(|| build_partition(black_box(&f), 2.0, 1e-3).unwrap()));
}

fn smoothing(c: &mut Criterion) {
    let f = cusp(1, 12);
    for family in KernelFamily::ALL {
        let k = KernelSpec::new(family, 1.0 / 32.0).unwrap();
        let g = f.zero_extend(k.required_margin(1, 12));
        c.bench_function(&format!("apply_{}_d1_L12", family.as_str()), |b| {
            b.iter(|| apply(&k, black_box(&g)).unwrap())
        });
    }
    let f = cusp(2, 8);
    let k = KernelSpec::new(KernelFamily::Gauss, 1.0 / 32.0).unwrap();
    let g = f.zero_extend(k.required_margin(2, 8));
    c.bench_function("apply_gauss_d2_L8", |b| b.iter(|| apply(&k, black_box(&g)).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = moduli, martingale, partition, smoothing
}
criterion_main!(benches);
