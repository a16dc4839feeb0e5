use chemoclass::classify::{fit_knn, fit_lda, fit_plsda, fit_rf, fit_svm, kernel_bandwidth, Classifier, ForestParams, SvmParams};
use chemoclass::dataset::stratified_split;
use chemoclass::reduce::{fpca_fit, pca_fit, Components, FpcaConfig};
use chemoclass::select::mr_scores;
use chemoclass_bench::spectra;
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn reduction(c: &mut Criterion) {
    let data = spectra(23, 1050);
    let split = stratified_split(&data, 0.5, 1).unwrap();
    let x = data.rows(&split.train);
    let y = data.labels_at(&split.train);
    let mut g = c.benchmark_group("reduce");
    g.sample_size(10);
    g.bench_function("pca_0.99", |b| b.iter(|| pca_fit(black_box(&x), Components::VarianceTarget(0.99)).unwrap()));
    g.bench_function("fpca_4", |b| b.iter(|| fpca_fit(black_box(&x), data.grid(), &FpcaConfig::with_scores(4)).unwrap()));
    g.bench_function("mr", |b| b.iter(|| mr_scores(black_box(&x), &y, 5).unwrap()));
    g.finish();
}

fn classifiers(c: &mut Criterion) {
    let data = spectra(23, 1050);
    let split = stratified_split(&data, 0.5, 1).unwrap();
    let x = data.rows(&split.train);
    let y = data.labels_at(&split.train);
    let test = data.rows(&split.test);
    let pca = pca_fit(&x, Components::Fixed(10)).unwrap();
    let z = pca.transform(&x).unwrap();
    let mut g = c.benchmark_group("classify");
    g.sample_size(10);
    g.bench_function("plsda_15", |b| b.iter(|| fit_plsda(black_box(&x), &y, 5, 15).unwrap()));
    g.bench_function("lda_pca10", |b| b.iter(|| fit_lda(black_box(&z), &y, 5).unwrap()));
    g.bench_function("rf_500", |b| {
        b.iter(|| fit_rf(black_box(&x), &y, 5, &ForestParams::with_trees(500, 3)).unwrap())
    });
    let kernel = kernel_bandwidth(&x).unwrap();
    g.bench_function("svm_c10", |b| b.iter(|| fit_svm(black_box(&x), &y, 5, &SvmParams::new(10.0, kernel)).unwrap()));
    let knn = fit_knn(&x, &y, 5, 3).unwrap();
    g.bench_function("knn3_predict", |b| b.iter(|| knn.predict(black_box(&test)).unwrap()));
    g.finish();
}

criterion_group!(benches, reduction, classifiers);
criterion_main!(benches);
