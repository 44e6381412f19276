//! Sequential versus rayon execution of the data-parallel stages.

use std::sync::Arc;

use autocas::config::RunConfig;
use autocas::par;
use autocas::pipeline::Workspace;
use autocas::train::{build_backbone, build_model, evaluate, train_model, TrainConfig};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.synthetic.num_cascades = 300;
    cfg.synthetic.graph_size = 1000;
    cfg.global.dim = 8;
    cfg.local.scales = vec![0.5, 1.5];
    cfg.local.sample_points = vec![0.0, 5.0];
    cfg.tokenizer.num_patches = 8;
    cfg.tokenizer.max_len = 8;
    cfg.backbone.dim = 32;
    cfg.backbone.layers = 2;
    cfg.backbone.max_context = 16;
    cfg
}

fn modes() -> [(&'static str, bool); 2] {
    [("sequential", true), ("parallel", false)]
}

fn tokenize(c: &mut Criterion) {
    let cfg = config();
    let ws = Workspace::prepare(&cfg).unwrap();
    let all: Vec<usize> = (0..ws.corpus.len()).collect();
    let (t, n) = (ws.observation_time(), cfg.tokenizer.num_patches);
    let mut g = c.benchmark_group("embed_and_tokenize_300");
    g.sample_size(10);
    for (name, seq) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            par::set_sequential(seq);
            b.iter(|| ws.samples(&all, t, n, false).unwrap())
        });
    }
    g.finish();
    par::set_sequential(false);
}

fn forward_and_train(c: &mut Criterion) {
    let cfg = config();
    let ws = Workspace::prepare(&cfg).unwrap();
    let [train, val, _] = ws.split_samples(false).unwrap();
    let (bb, _) = build_backbone(&cfg.backbone).unwrap();
    let model = build_model(&cfg, cfg.train.variant, train[0].tokens.cols, Arc::new(bb)).unwrap();
    let tc = TrainConfig {
        max_epochs: 1,
        ..cfg.train.clone()
    };
    let mut g = c.benchmark_group("model");
    g.sample_size(10);
    for (name, seq) in modes() {
        g.bench_function(BenchmarkId::new("evaluate_train_split", name), |b| {
            par::set_sequential(seq);
            b.iter(|| evaluate(&model, &train).unwrap())
        });
        g.bench_function(BenchmarkId::new("train_one_epoch", name), |b| {
            par::set_sequential(seq);
            b.iter(|| train_model(model.clone(), &train, &val, &tc).unwrap())
        });
    }
    g.finish();
    par::set_sequential(false);
}

criterion_group!(benches, tokenize, forward_and_train);
criterion_main!(benches);
