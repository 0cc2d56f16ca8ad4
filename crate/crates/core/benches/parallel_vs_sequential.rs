use coderiv::coderivatives::MapDescriptor;
use coderiv::oracle::{estimate_limsup, GraphPoint, SamplingSchedule};
use coderiv::projections::{brute_force_project_with, ConvexSet, ConvexSetDescriptor};
use coderiv::spaces::{DualVector, PrimalVector, SpaceSpec};
use coderiv::Execution;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn limsup_oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("estimate_limsup");
    group.sample_size(10);
    let lp = SpaceSpec::lp(3.0, 8).unwrap();
    let ball = MapDescriptor::ball(lp, 1.0).unwrap();
    let ball_base = GraphPoint::at(&ball, PrimalVector::new(lp, vec![1.0, -0.5, 0.2, 0.0, 0.3, 0.0, -1.0, 0.4]).unwrap()).unwrap();
    let ball_w = DualVector::coords(lp, vec![0.5, 0.1, -0.3, 0.2, 0.0, 0.7, -0.1, 0.2]).unwrap();
    let c01 = SpaceSpec::c01(257).unwrap();
    let poly = MapDescriptor::poly(c01, 2).unwrap();
    let poly_base = GraphPoint::at(&poly, PrimalVector::from_fn(c01, f64::exp).unwrap()).unwrap();
    let poly_w = DualVector::zero(c01);
    for (name, exec) in MODES {
        let sched = SamplingSchedule { execution: exec, ..SamplingSchedule::default() };
        group.bench_with_input(BenchmarkId::new("ball_l3", name), &sched, |b, s| {
            b.iter(|| estimate_limsup(&ball, &ball_base, &ball_w, &ball_w, black_box(s)).unwrap())
        });
        let short = SamplingSchedule { levels: 4, dirs_per_level: 32, ..sched };
        group.bench_with_input(BenchmarkId::new("poly_c01", name), &short, |b, s| {
            b.iter(|| estimate_limsup(&poly, &poly_base, &poly_w, &poly_w, black_box(s)).unwrap())
        });
    }
    group.finish();
}

fn brute_force(c: &mut Criterion) {
    let mut group = c.benchmark_group("brute_force_project");
    group.sample_size(10);
    let lp = SpaceSpec::lp(3.0, 3).unwrap();
    let set = ConvexSetDescriptor::new(ConvexSet::Ball { r: 1.0 }, lp).unwrap();
    let x = PrimalVector::new(lp, vec![1.5, -0.4, 0.8]).unwrap();
    let c01 = SpaceSpec::c01(129).unwrap();
    let poly = ConvexSetDescriptor::new(ConvexSet::PolySubspace { n: 2 }, c01).unwrap();
    let f = PrimalVector::from_fn(c01, f64::exp).unwrap();
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new("ball_l3", name), |b| {
            b.iter(|| brute_force_project_with(black_box(&x), &set, 41, exec).unwrap())
        });
        group.bench_function(BenchmarkId::new("poly_c01", name), |b| {
            b.iter(|| brute_force_project_with(black_box(&f), &poly, 15, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, limsup_oracle, brute_force);
criterion_main!(benches);
