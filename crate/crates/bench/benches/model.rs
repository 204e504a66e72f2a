use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use dipnet::autodiff::Tape;
use dipnet::model::rmse_norm_loss;
use dipnet::molgraph::{generate_acene, GraphBatch, MolGraph};
use dipnet_bench::{model, molecules};

fn graphs(c: &mut Criterion) {
    let mols = molecules(16, 15, 0);
    c.bench_function("build_graphs_16", |b| {
        b.iter(|| {
            for m in &mols {
                black_box(MolGraph::build(m, 5.0).unwrap());
            }
        })
    });
}

fn forward(c: &mut Criterion) {
    let model = model(64);
    let mol = &molecules(1, 18, 1)[0];
    c.bench_function("predict_one_h64", |b| b.iter(|| black_box(model.predict(mol).unwrap())));
    let acene = generate_acene(5).unwrap();
    c.bench_function("predict_pentacene_h64", |b| b.iter(|| black_box(model.predict(&acene).unwrap())));
}

fn train_step(c: &mut Criterion) {
    let mut model = model(64);
    let mols = molecules(16, 15, 2);
    let graphs: Vec<MolGraph> = mols.iter().map(|m| model.graph(m).unwrap()).collect();
    let batch = GraphBatch::new(&graphs);
    let labels: Vec<f64> = mols.iter().map(|m| m.dipole_label.unwrap()).collect();
    c.bench_function("forward_backward_batch16_h64", |b| {
        b.iter_batched(
            Tape::new,
            |mut tape| {
                model.store.zero_grad();
                let preds = model.forward_batch(&mut tape, &batch).unwrap();
                let loss = rmse_norm_loss(&mut tape, &labels, preds).unwrap();
                tape.backward(loss, &mut model.store).unwrap();
            },
            BatchSize::SmallInput,
        )
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = graphs, forward, train_step
}
criterion_main!(benches);
