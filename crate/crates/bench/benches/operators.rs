use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use landau_bench::{bimodal, maxwellian};
use landau_core::functionals::{entropy_dissipation, DissipationForm};
use landau_core::kernels::CoefficientEngine;
use landau_core::solver::{step, CollisionOperator};
use landau_core::{CoefficientMethod, PsiSpec};

fn coefficients(c: &mut Criterion) {
    let mut group = c.benchmark_group("coefficients");
    group.sample_size(10);
    for n in [8, 16] {
        let f = bimodal(n);
        for method in [CoefficientMethod::Fft, CoefficientMethod::Direct] {
            let engine = CoefficientEngine::new(f.grid(), &PsiSpec::Coulomb, method).unwrap();
            group.bench_with_input(BenchmarkId::new(format!("{method:?}"), n), &f, |b, f| {
                b.iter(|| engine.compute(f).unwrap())
            });
        }
    }
    group.finish();
}

fn operator(c: &mut Criterion) {
    let mut group = c.benchmark_group("operator");
    group.sample_size(10);
    for n in [16, 24] {
        let f = bimodal(n);
        let op = CollisionOperator::new(f.grid(), &PsiSpec::Coulomb, CoefficientMethod::Fft).unwrap();
        group.bench_with_input(BenchmarkId::new("evaluate", n), &f, |b, f| b.iter(|| op.evaluate(f).unwrap()));
        group.bench_with_input(BenchmarkId::new("heun_step", n), &f, |b, f| {
            b.iter(|| step(f, &PsiSpec::Coulomb, 1e-3).unwrap())
        });
    }
    group.finish();
}

fn dissipation(c: &mut Criterion) {
    let mut group = c.benchmark_group("entropy_dissipation");
    group.sample_size(10);
    let f = maxwellian(12);
    for form in [DissipationForm::Projected, DissipationForm::Pairdiff] {
        group.bench_function(format!("{form:?}"), |b| {
            b.iter(|| entropy_dissipation(&f, &PsiSpec::PowerLaw { gamma: -2.0 }, form).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, coefficients, operator, dissipation);
criterion_main!(benches);
