//! Sequential against rayon-parallel replica fan-out.

use billiard_core::coupling::{couple_replicas, Job};
use billiard_core::dynamics::ProcessStart;
use billiard_core::exec::Executor;
use billiard_core::rates::{disc_chain_rate, disc_process_rate};
use billiard_core::stats::empirical_tv_curve;
use billiard_core::{ConvexBody, ReflectionLaw};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::f64::consts::PI;
use std::hint::black_box;

fn executors() -> Vec<(&'static str, Executor)> {
    let mut out = vec![("sequential", Executor::Sequential)];
    if cfg!(feature = "parallel") {
        out.push(("parallel", Executor::default()));
    }
    out
}

fn tv_curve(c: &mut Criterion) {
    let body = ConvexBody::disc(1.0).unwrap();
    let law = ReflectionLaw::truncated_uniform(0.75 * PI).unwrap();
    let mut group = c.benchmark_group("empirical_tv_curve");
    group.sample_size(10);
    for (name, exec) in executors() {
        group.bench_with_input(BenchmarkId::new(name, 20_000), &exec, |b, exec| {
            b.iter(|| {
                empirical_tv_curve(&body, &law, 0.0, PI, 12, 20_000, 100, black_box(7), exec)
                    .unwrap()
            })
        });
    }
    group.finish();
}

fn couplings(c: &mut Criterion) {
    let body = ConvexBody::disc(1.0).unwrap();
    let law = ReflectionLaw::truncated_uniform(0.75 * PI).unwrap();
    let f_min = law.certificate().f_min;
    let chain = disc_chain_rate(0.75 * PI, f_min, None).unwrap();
    let process = disc_process_rate(1.0, 0.75 * PI, f_min, 0.117, 0.1).unwrap();
    let jobs = [
        (
            "chains",
            &chain,
            Job::Chains {
                s0: 0.0,
                s0_b: PI,
                n_max: 12,
            },
            20_000,
        ),
        (
            "processes",
            &process,
            Job::Processes {
                start: ProcessStart::Boundary(0.0),
                start_b: ProcessStart::Boundary(PI),
                t_max: 1e5,
            },
            500,
        ),
    ];
    let mut group = c.benchmark_group("couple_replicas");
    group.sample_size(10);
    for (label, cert, job, replicas) in jobs {
        for (name, exec) in executors() {
            group.bench_with_input(
                BenchmarkId::new(format!("{label}/{name}"), replicas),
                &exec,
                |b, exec| {
                    b.iter(|| {
                        couple_replicas(
                            &body,
                            &law,
                            cert,
                            job,
                            replicas,
                            black_box(11),
                            false,
                            exec,
                        )
                        .unwrap()
                    })
                },
            );
        }
    }
    group.finish();
}

criterion_group!(benches, tv_curve, couplings);
criterion_main!(benches);
