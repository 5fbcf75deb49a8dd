//! Hot-path micro-benchmarks: link-adaptation table lookups, detector and
//! readout training, per-window scoring, posterior queries, and ROC math.
//!
//! Every input is derived from the default seeded pipeline configuration so
//! the numbers line up with the CLI's own timing report. Training fits run
//! on a trimmed row count to keep a full `cargo bench` pass short.

use std::collections::BTreeMap;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use jamguard::config::PipelineConfig;
use jamguard::pipeline::{compute_split, features_and_labels};
use jamguard_core::bayes::{
    fit_kpi_model, KpiBayesModel, NODE_CQI, NODE_DL_MCS, NODE_SNR, NODE_UL_MCS,
};
use jamguard_core::datagen::{compute_feature_stats, generate_dataset};
use jamguard_core::detect::{Detector, TrainedDetector};
use jamguard_core::esn::{extract_windows, EsnModel};
use jamguard_core::eval::{roc_curve, youden_threshold};
use jamguard_core::kpi::{snr_to_spectral_efficiency, LookupRule, MappingTables};

/// Rows used by the training-fit benchmarks.
const FIT_ROWS: usize = 1000;

struct Fixture {
    seed: u64,
    x_train: Vec<Vec<f64>>,
    y_train: Vec<bool>,
    x_test: Vec<Vec<f64>>,
    esn: EsnModel,
    train_windows: Vec<Vec<Vec<f64>>>,
    window_labels: Vec<bool>,
    test_window: Vec<Vec<f64>>,
    forest: TrainedDetector,
    knn: TrainedDetector,
    bayes: KpiBayesModel,
    evidence: BTreeMap<String, String>,
    scores: Vec<f64>,
    labels: Vec<bool>,
}

impl Fixture {
    fn build() -> Self {
        let mut config = PipelineConfig::default();
        config.finalize(None).expect("default config is valid");
        let scenarios = config.scenarios();
        let dataset = generate_dataset(&config.generator, &scenarios, &MappingTables::standard())
            .expect("default dataset generates");
        let split = compute_split(&dataset, &config).expect("split");
        let train = split.train();
        let stats = compute_feature_stats(&dataset, &train).expect("stats");
        let (x_train, y_train) = features_and_labels(&dataset, &train, &stats).expect("train");
        let (x_test, labels) = features_and_labels(&dataset, &split.test, &stats).expect("test");

        let train_set =
            extract_windows(&dataset, &train, config.esn.window_len, Some(&stats)).expect("train windows");
        let test_set =
            extract_windows(&dataset, &split.test, config.esn.window_len, Some(&stats))
                .expect("test windows");
        let mut esn = EsnModel::new(config.esn).expect("reservoir");
        esn.fit_readout(&train_set.windows, &train_set.labels).expect("readout");

        let mut forest = TrainedDetector::from_name("forest", config.seed).expect("forest");
        forest.fit(&x_train, &y_train).expect("forest fit");
        let mut knn = TrainedDetector::from_name("knn", config.seed).expect("knn");
        knn.fit(&x_train, &y_train).expect("knn fit");

        let bayes = fit_kpi_model(&dataset, &train, &config.bnm).expect("belief net");
        let snr_d = bayes.config().snr_discretizer().expect("snr bins");
        let cqi_d = bayes.config().cqi_discretizer().expect("cqi bins");
        let mcs_d = bayes.config().mcs_discretizer().expect("mcs bins");
        let evidence = BTreeMap::from([
            (NODE_SNR.to_string(), snr_d.label_of(12.7).expect("bin").to_string()),
            (NODE_CQI.to_string(), cqi_d.label_of(15.0).expect("bin").to_string()),
            (NODE_DL_MCS.to_string(), mcs_d.label_of(26.0).expect("bin").to_string()),
            (NODE_UL_MCS.to_string(), mcs_d.label_of(19.0).expect("bin").to_string()),
        ]);

        let scores: Vec<f64> = x_test.iter().map(|row| forest.score(row).expect("score")).collect();

        Fixture {
            seed: config.seed,
            x_train,
            y_train,
            x_test,
            esn,
            train_windows: train_set.windows,
            window_labels: train_set.labels,
            test_window: test_set.windows.first().expect("nonempty test").clone(),
            forest,
            knn,
            bayes,
            evidence,
            scores,
            labels,
        }
    }
}

fn bench_kpi(c: &mut Criterion) {
    let tables = MappingTables::standard();
    c.bench_function("kpi/snr_to_mcs_and_cqi", |b| {
        b.iter(|| {
            let eta = snr_to_spectral_efficiency(black_box(15.0)).unwrap();
            let mcs = tables.efficiency_to_mcs(eta, LookupRule::NearestEfficiency).unwrap();
            let cqi = tables.efficiency_to_cqi(eta).unwrap();
            black_box((mcs.index, cqi.index))
        })
    });
}

fn bench_training(c: &mut Criterion, fx: &Fixture) {
    let mut group = c.benchmark_group("train");
    group.sample_size(10);
    let n = FIT_ROWS.min(fx.x_train.len());
    let x = &fx.x_train[..n];
    let y = &fx.y_train[..n];
    group.bench_function(format!("forest_fit_{n}_rows"), |b| {
        b.iter_batched(
            || TrainedDetector::from_name("forest", fx.seed).unwrap(),
            |mut detector| {
                detector.fit(x, y).unwrap();
                detector
            },
            BatchSize::SmallInput,
        )
    });
    group.bench_function("esn_readout_fit", |b| {
        b.iter_batched(
            || fx.esn.clone(),
            |mut esn| {
                esn.fit_readout(&fx.train_windows, &fx.window_labels).unwrap();
                esn
            },
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

fn bench_scoring(c: &mut Criterion, fx: &Fixture) {
    let mut group = c.benchmark_group("score_per_window");
    let row = fx.x_test.first().expect("nonempty test");
    group.bench_function("forest", |b| b.iter(|| fx.forest.score(black_box(row)).unwrap()));
    group.bench_function("knn", |b| b.iter(|| fx.knn.score(black_box(row)).unwrap()));
    group.bench_function("esn", |b| {
        b.iter(|| fx.esn.score(black_box(&fx.test_window)).unwrap())
    });
    group.finish();
}

fn bench_posterior(c: &mut Criterion, fx: &Fixture) {
    c.bench_function("bayes/posterior_full_evidence", |b| {
        b.iter(|| fx.bayes.posterior_jamming(black_box(&fx.evidence)).unwrap())
    });
}

fn bench_roc(c: &mut Criterion, fx: &Fixture) {
    c.bench_function("eval/roc_auc_and_youden", |b| {
        b.iter(|| {
            let curve = roc_curve(black_box(&fx.scores), black_box(&fx.labels)).unwrap();
            let youden = youden_threshold(&curve).unwrap();
            black_box((curve.auc, youden.threshold))
        })
    });
}

fn benches(c: &mut Criterion) {
    let fx = Fixture::build();
    bench_kpi(c);
    bench_training(c, &fx);
    bench_scoring(c, &fx);
    bench_posterior(c, &fx);
    bench_roc(c, &fx);
}

criterion_group!(pipeline, benches);
criterion_main!(pipeline);
