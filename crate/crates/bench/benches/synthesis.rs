use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use pomdp_shield::analysis::{maximal_winning_region, OracleScope, DEFAULT_NODE_CAP};
use pomdp_shield::jani::export_jani;
use pomdp_shield::synthesis::{run, DriverConfig, Goal, Mode};
use pomdp_shield_bench::{quick_instances, random_models};

fn drivers(c: &mut Criterion) {
    let mut group = c.benchmark_group("incremental");
    group.sample_size(10);
    for (name, inst) in quick_instances() {
        for goal in [Goal::Initial, Goal::Fixpoint] {
            if name == "refuel6_8" && goal == Goal::Fixpoint {
                continue; // tens of seconds per run
            }
            let cfg = DriverConfig::new(Mode::Incremental, goal);
            group.bench_with_input(BenchmarkId::new(format!("{goal:?}"), name), &inst, |b, inst| {
                b.iter(|| run(&inst.pomdp, &inst.spec, &cfg).expect("solver"))
            });
        }
    }
    group.finish();
}

fn modes_on_cheese(c: &mut Criterion) {
    let (_, inst) = quick_instances().swap_remove(0);
    let mut group = c.benchmark_group("cheese");
    for mode in Mode::ALL {
        let cfg = DriverConfig::new(mode, Goal::Fixpoint);
        group.bench_function(mode.name(), |b| b.iter(|| run(&inst.pomdp, &inst.spec, &cfg).expect("solver")));
    }
    group.finish();
}

fn oracle_and_export(c: &mut Criterion) {
    let models = random_models(50);
    c.bench_function("oracle/random50", |b| {
        b.iter(|| {
            for inst in &models {
                maximal_winning_region(&inst.pomdp, &inst.spec, DEFAULT_NODE_CAP, OracleScope::Full).expect("small");
            }
        })
    });
    let (_, obstacle) = quick_instances().swap_remove(1);
    c.bench_function("jani/obstacle6", |b| b.iter(|| export_jani(&obstacle.pomdp, &obstacle.spec)));
}

criterion_group!(benches, drivers, modes_on_cheese, oracle_and_export);
criterion_main!(benches);
