//! Exit criteria. Runs every check, prints one PASS/FAIL line each and
//! exits non-zero when any check fails.

use std::collections::HashSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use mcd_bench::ablation::{run_ablation, AblationCell};
use mcd_bench::density_bench::{run_density_bench, EvalOptions};
use mcd_bench::methods::{McdSettings, MethodKind};
use mcd_core::constructions::{
    build_id, build_id_additional, build_id_multitarget, build_iid, build_iid_additional,
    id_additional_mismatched_pool, id_mismatched_pool, multitarget_mismatched_pool,
    ratio_to_counts, ContrastDataset, RowOrigin,
};
use mcd_core::contrast::{conditional_from_contrast, contrast_from_conditional, marginal_contrast};
use mcd_core::density_models::{BivariateGauss, DensityModel};
use mcd_core::discriminators::logistic::LogisticObjective;
use mcd_core::discriminators::mlp::Network;
use mcd_core::estimator::{linspace, rescale, trapezoid};
use mcd_core::kde::std_normal_pdf;
use mcd_core::metrics::{EvaluationReport, KlNormalization};
use mcd_core::{
    seeded_rng, Construction, DensityTriple, Discriminator, DiscriminatorSpec, MarginalDatasets,
    MarginalDensityModel, McdConfig, McdEstimator, MultiTargetDataset, Ratio, SupervisedDataset,
};
use ndarray::{Array2, ArrayView1};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn ratio(r: f64) -> Ratio {
    Ratio::new(r).unwrap()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn gaussian_data(n: usize, p: usize, seed: u64) -> SupervisedDataset {
    let mut rng = seeded_rng(seed);
    let x = Array2::from_shape_simple_fn((n, p), || rng.random_range(-2.0..2.0));
    let y = Array2::from_shape_simple_fn((n, 1), || rng.random_range(-2.0..2.0));
    SupervisedDataset::new(x, y).unwrap()
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed <= Duration::from_secs(limit_secs)
}

// 1

fn construction_sizes() -> Outcome {
    let start = Instant::now();
    let d = gaussian_data(100, 3, 1);
    let mut rng = seeded_rng(2);
    let mut ok = true;
    let mut seen = Vec::new();
    for (r, want) in [
        (0.01, 10_000),
        (0.015, 6666),
        (0.05, 2000),
        (0.15, 666),
        (0.5, 200),
    ] {
        let (nj, nm) = ratio_to_counts(100, ratio(r), id_mismatched_pool(100)).unwrap();
        let c = build_id(&d, nj, nm, &mut rng).unwrap();
        ok &= c.len() == want;
        seen.push(format!("{r}->{}", c.len()));
    }
    for r in [0.01, 0.015, 0.05, 0.15, 0.5, 0.85] {
        let c = build_iid(&d, ratio(r), &mut rng).unwrap();
        ok &= c.len() == 50;
    }
    let t = start.elapsed();
    outcome(
        ok && t < Duration::from_secs(1),
        format!(
            "id N: {}; iid N = 50; {:.3}s",
            seen.join(" "),
            t.as_secs_f64()
        ),
    )
}

// 2

fn check_rows(
    c: &ContrastDataset,
    x: impl Fn(RowOrigin) -> Vec<f64>,
    y: impl Fn(RowOrigin, usize) -> f64,
) -> bool {
    let p = c.feature_dim();
    let faithful = c
        .w()
        .rows()
        .into_iter()
        .zip(c.sources())
        .zip(c.z())
        .all(|((row, s), &z)| {
            (z == 1) == s.is_matched()
                && row.slice(ndarray::s![..p]).to_vec() == x(s.x)
                && row[p] == y(s.y, s.draw)
        });
    let distinct: HashSet<_> = c.sources().iter().map(|s| (s.x, s.y, s.draw)).collect();
    faithful && distinct.len() == c.len()
}

fn paired_rows(c: &ContrastDataset, d: &SupervisedDataset, e: &MarginalDatasets) -> bool {
    check_rows(
        c,
        |o| match o {
            RowOrigin::Paired(i) => d.x_row(i).to_vec(),
            RowOrigin::Extra(i) => e.extra_x().row(i).to_vec(),
        },
        |o, _| match o {
            RowOrigin::Paired(i) => d.y()[[i, 0]],
            RowOrigin::Extra(i) => e.extra_y()[[i, 0]],
        },
    )
}

fn bernoulli_ok(build: impl Fn(u64) -> ContrastDataset, r: f64) -> (bool, String) {
    let (mut ones, mut total, mut seed) = (0usize, 0usize, 0u64);
    while total < 10_000 {
        let c = build(seed);
        ones += c.n_joint();
        total += c.len();
        seed += 1;
    }
    let z = (ones as f64 - r * total as f64) / (total as f64 * r * (1.0 - r)).sqrt();
    (z.abs() <= 3.0, format!("{z:+.2}sd"))
}

fn structural_checks() -> Outcome {
    let start = Instant::now();
    let d = gaussian_data(150, 3, 3);
    let mut erng = seeded_rng(4);
    let e = MarginalDatasets::new(
        Array2::from_shape_simple_fn((40, 3), || erng.random_range(-3.0..3.0)),
        Array2::from_shape_simple_fn((60, 1), || erng.random_range(-3.0..3.0)),
    )
    .unwrap();
    let none = MarginalDatasets::empty(3, 1);
    let mut ok = true;
    let mut notes = Vec::new();

    // construction 1
    let r = 0.3;
    let (b, z) = bernoulli_ok(|s| build_iid(&d, ratio(r), &mut seeded_rng(s)).unwrap(), r);
    ok &= b
        && paired_rows(
            &build_iid(&d, ratio(r), &mut seeded_rng(99)).unwrap(),
            &d,
            &none,
        );
    notes.push(format!("c1 {z}"));

    // construction 2
    let c = build_id(&d, 150, 3000, &mut seeded_rng(5)).unwrap();
    ok &= (c.n_joint(), c.n_marg()) == (150, 3000) && paired_rows(&c, &d, &none);

    // construction 3
    let (b, z) = bernoulli_ok(
        |s| build_iid_additional(&d, &e, ratio(r), &mut seeded_rng(s)).unwrap(),
        r,
    );
    ok &= b
        && paired_rows(
            &build_iid_additional(&d, &e, ratio(r), &mut seeded_rng(98)).unwrap(),
            &d,
            &e,
        );
    notes.push(format!("c3 {z}"));

    // construction 4
    let pool = id_additional_mismatched_pool(150, 40, 60);
    let c = build_id_additional(&d, &e, 150, pool / 2, &mut seeded_rng(6)).unwrap();
    ok &= (c.n_joint(), c.n_marg()) == (150, pool / 2) && paired_rows(&c, &d, &e);

    // construction 5
    let mut mrng = seeded_rng(7);
    let md = MultiTargetDataset::new(
        Array2::from_shape_simple_fn((50, 2), || mrng.random_range(-2.0..2.0)),
        Array2::from_shape_simple_fn((50, 4), || mrng.random_range(-2.0..2.0)),
    )
    .unwrap();
    let pool = multitarget_mismatched_pool(50, 4);
    let c = build_id_multitarget(&md, 200, pool, &mut seeded_rng(8)).unwrap();
    ok &= (c.n_joint(), c.n_marg()) == (200, pool)
        && check_rows(
            &c,
            |o| match o {
                RowOrigin::Paired(i) => md.x().row(i).to_vec(),
                RowOrigin::Extra(_) => vec![],
            },
            |o, l| match o {
                RowOrigin::Paired(k) => md.y()[[k, l]],
                RowOrigin::Extra(_) => f64::NAN,
            },
        );
    let t = start.elapsed();
    notes.push(format!("{:.2}s", t.as_secs_f64()));
    outcome(ok && within(t, 30), notes.join(", "))
}

// 3

fn contrast_roundtrip() -> Outcome {
    let mut rng = seeded_rng(11);
    let mut worst: f64 = 0.0;
    for _ in 0..100_000 {
        let r = ratio(rng.random_range(0.01..0.99));
        let p_cond = rng.random_range(0.0..5.0);
        let p_y = rng.random_range(0.05..5.0);
        let p_x = rng.random_range(0.05..5.0);
        let via_conditional = contrast_from_conditional(p_cond, p_y, r).unwrap();
        let back = conditional_from_contrast(p_y, via_conditional, r).unwrap();
        worst = worst.max((back - p_cond).abs() / p_cond.max(1e-300));
        // the same q from the joint density
        let joint = DensityTriple::new(p_cond * p_x, p_x, p_y).unwrap();
        let via_joint = marginal_contrast(joint, r).unwrap();
        worst = worst.max((via_joint - via_conditional).abs() / via_conditional.max(1e-300));
    }
    let mut indep_exact = true;
    for _ in 0..10_000 {
        let r = rng.random_range(0.01..0.99);
        let (px, py) = (rng.random_range(0.05..5.0), rng.random_range(0.05..5.0));
        let q = marginal_contrast(DensityTriple::new(px * py, px, py).unwrap(), ratio(r)).unwrap();
        indep_exact &= (q - r).abs() <= 4.0 * f64::EPSILON;
    }
    outcome(
        worst <= 1e-12 && indep_exact,
        format!("max relative error {worst:.2e}; independence q = r: {indep_exact}"),
    )
}

// 4 and 5

fn bivariate_estimator(rho: f64, seed: u64) -> (BivariateGauss, McdEstimator) {
    let model = BivariateGauss::new(rho).unwrap();
    let train = model.sample(2000, &mut seeded_rng(seed)).unwrap();
    let cfg = McdConfig::new(
        ratio(0.05),
        Construction::Id,
        DiscriminatorSpec::mlp().with_seed(seed + 1),
    )
    .with_seed(seed + 2);
    let est = McdEstimator::train(&train, None, &cfg).unwrap();
    (model, est)
}

fn analytic_contrast(
    fitted: &(BivariateGauss, McdEstimator),
    zero: &(BivariateGauss, McdEstimator),
    took: Duration,
) -> Outcome {
    let (model, est) = fitted;
    let r = est.ratio();
    let test = model.sample(500, &mut seeded_rng(404)).unwrap();
    let mae = (0..500)
        .map(|i| {
            let (x, y) = (test.x()[[i, 0]], test.y()[[i, 0]]);
            (est.predict_contrast(test.x_row(i), y).unwrap() - model.contrast(x, y, r).unwrap())
                .abs()
        })
        .sum::<f64>()
        / 500.0;
    let (zmodel, zest) = zero;
    let ztest = zmodel.sample(500, &mut seeded_rng(405)).unwrap();
    let mean_q = (0..500)
        .map(|i| {
            zest.predict_contrast(ztest.x_row(i), ztest.y()[[i, 0]])
                .unwrap()
        })
        .sum::<f64>()
        / 500.0;
    let gap = (mean_q - zest.ratio().value()).abs();
    outcome(
        mae <= 0.1 && gap <= 0.05 && within(took, 120),
        format!(
            "MAE {mae:.4}, independent mean q {mean_q:.4} vs r {:.4}, training {:.1}s",
            zest.ratio().value(),
            took.as_secs_f64()
        ),
    )
}

fn conditional_recovery(fitted: &(BivariateGauss, McdEstimator), took: Duration) -> Outcome {
    let start = Instant::now();
    let (model, est) = fitted;
    let rho = model.rho();
    let sd = (1.0 - rho * rho).sqrt();
    let grid = linspace(-5.0, 5.0, 1000).unwrap();
    let xs = model.sample_features(50, &mut seeded_rng(505));
    let pred = est.predict_pdf_on_grid_rows(&xs, &grid).unwrap();
    let mean_l1 = xs
        .column(0)
        .iter()
        .zip(&pred)
        .map(|(&x, g)| {
            let g = rescale(g, &grid).unwrap();
            let diff: Vec<f64> = grid
                .iter()
                .zip(&g)
                .map(|(&y, &gv)| (gv - std_normal_pdf((y - rho * x) / sd) / sd).abs())
                .collect();
            trapezoid(&diff, &grid).unwrap()
        })
        .sum::<f64>()
        / 50.0;
    let total = took + start.elapsed();
    outcome(
        mean_l1 <= 0.25 && within(total, 180),
        format!(
            "mean L1 {mean_l1:.4} over 50 x, {:.1}s",
            total.as_secs_f64()
        ),
    )
}

// 6, 7 and 8

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

fn protocol(model: &str) -> EvalOptions {
    EvalOptions {
        model: model.into(),
        p: 10,
        n_train: 100,
        n_test: 100,
        grid_points: 10_000,
        seeds: SEEDS.to_vec(),
        rescale: false,
        normalization: KlNormalization::Total,
        parallel: true,
        timing: false,
    }
}

fn medians_by_setting(reports: &[EvaluationReport], settings: &[String]) -> Vec<f64> {
    settings
        .iter()
        .map(|s| {
            median(
                reports
                    .iter()
                    .filter(|r| &r.setting == s)
                    .map(|r| r.value)
                    .collect(),
            )
        })
        .collect()
}

fn ablation_ratio() -> Outcome {
    let start = Instant::now();
    let cells = [
        AblationCell::new(Construction::Id, 0.05).unwrap(),
        AblationCell::new(Construction::Iid, 0.5).unwrap(),
    ];
    let reports = run_ablation(
        &protocol("asymmetric_linear"),
        &McdSettings::default(),
        MethodKind::McdMlp,
        &cells,
    )
    .unwrap();
    let labels: Vec<String> = cells.iter().map(|c| c.to_string()).collect();
    let m = medians_by_setting(&reports, &labels);
    let t = start.elapsed();
    outcome(
        2.0 * m[0] <= m[1] && within(t, 600),
        format!(
            "median KL id r=0.05 {:.4e} vs iid r=0.5 {:.4e} (ratio {:.2}), {:.0}s",
            m[0],
            m[1],
            m[1] / m[0],
            t.as_secs_f64()
        ),
    )
}

fn multitarget_ordering() -> Outcome {
    let start = Instant::now();
    let cells = [
        AblationCell::new(Construction::IdMultitarget, 0.15)
            .unwrap()
            .with_draws(10),
        AblationCell::new(Construction::IdMultitarget, 0.15)
            .unwrap()
            .with_draws(1),
    ];
    let reports = run_ablation(
        &protocol("asymmetric_linear"),
        &McdSettings::default(),
        MethodKind::McdMlp,
        &cells,
    )
    .unwrap();
    let labels: Vec<String> = cells.iter().map(|c| c.to_string()).collect();
    let m = medians_by_setting(&reports, &labels);
    let t = start.elapsed();
    outcome(
        m[0] < m[1] && within(t, 600),
        format!(
            "median KL m=10 {:.4e} vs m=1 {:.4e}, {:.0}s",
            m[0],
            m[1],
            t.as_secs_f64()
        ),
    )
}

fn baseline_dominance() -> Outcome {
    let start = Instant::now();
    let reports = run_density_bench(
        &protocol("basic_linear"),
        &McdSettings::default(),
        &[MethodKind::McdMlp, MethodKind::Marginal],
    )
    .unwrap();
    let by = |k: MethodKind| {
        median(
            reports
                .iter()
                .filter(|r| r.method == k.name())
                .map(|r| r.value)
                .collect(),
        )
    };
    let (mcd, marginal) = (by(MethodKind::McdMlp), by(MethodKind::Marginal));
    let t = start.elapsed();
    outcome(
        mcd < marginal && mcd < 0.5 && within(t, 600),
        format!(
            "median KL MCD:MLP {mcd:.4e} vs marginal {marginal:.4e}; below baseline: {}; below 0.5: {}; {:.0}s",
            mcd < marginal,
            mcd < 0.5,
            t.as_secs_f64()
        ),
    )
}

// 9

struct AlwaysOne(usize);

impl Discriminator for AlwaysOne {
    fn input_width(&self) -> usize {
        self.0
    }

    fn predict_proba(&self, _: ArrayView1<f64>) -> mcd_core::Result<f64> {
        Ok(1.0)
    }
}

fn kde_and_rescaling() -> Outcome {
    let mut rng = seeded_rng(9);
    let samples: Vec<f64> = (0..500)
        .map(|_| rng.random_range(-3.0..3.0f64).powi(3))
        .collect();
    let kde = MarginalDensityModel::fit(&samples).unwrap();
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min) - 12.0 * kde.bandwidth();
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 12.0 * kde.bandwidth();
    let grid = linspace(lo, hi, 200_001).unwrap();
    let mass = trapezoid(&kde.pdf_batch(&grid), &grid).unwrap();

    let coarse = linspace(-2.0, 3.0, 97).unwrap();
    let bumpy: Vec<f64> = coarse
        .iter()
        .map(|&t| (t * 3.0).sin().abs() + 0.1)
        .collect();
    let rescaled_mass = trapezoid(&rescale(&bumpy, &coarse).unwrap(), &coarse).unwrap();

    let est = McdEstimator::from_parts(kde, AlwaysOne(3), ratio(0.05), 1e-6).unwrap();
    let xs = Array2::from_shape_fn((4, 2), |(i, j)| (i * 2 + j) as f64 * 0.5 - 1.0);
    let grid_pred = est.predict_pdf_on_grid_rows(&xs, &coarse).unwrap();
    let finite = grid_pred.iter().flatten().all(|v| v.is_finite())
        && est
            .predict_pairs(&xs, &[0.0, 1.0, 2.0, -1.0])
            .unwrap()
            .iter()
            .all(|v| v.is_finite());
    outcome(
        (mass - 1.0).abs() <= 1e-3 && (rescaled_mass - 1.0).abs() <= 1e-12 && finite,
        format!(
            "KDE mass {mass:.6}; rescaled mass - 1 = {:.1e}; stubbed q = 1 finite: {finite}",
            rescaled_mass - 1.0
        ),
    )
}

// 10

const STEP: f64 = 1e-5;

fn central_difference(f: impl Fn(&[f64]) -> f64, theta: &[f64]) -> Vec<f64> {
    let mut t = theta.to_vec();
    (0..theta.len())
        .map(|i| {
            t[i] = theta[i] + STEP;
            let up = f(&t);
            t[i] = theta[i] - STEP;
            let down = f(&t);
            t[i] = theta[i];
            (up - down) / (2.0 * STEP)
        })
        .collect()
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff) / norm(a).max(norm(b)).max(1e-12)
}

fn small_instance(rng: &mut impl Rng) -> (Array2<f64>, Vec<u8>) {
    let n = rng.random_range(5..30);
    let d = rng.random_range(1..5);
    let x = Array2::from_shape_simple_fn((n, d), || rng.random_range(-2.0..2.0));
    let mut z: Vec<u8> = (0..n).map(|_| rng.random_bool(0.4) as u8).collect();
    z[0] = 1;
    z[1] = 0;
    (x, z)
}

fn gradient_checks() -> Outcome {
    let mut rng = seeded_rng(10);
    let (mut worst_logistic, mut worst_mlp) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let (x, z) = small_instance(&mut rng);
        let obj = LogisticObjective::new(x.view(), &z, rng.random_range(0.0..0.5)).unwrap();
        let theta: Vec<f64> = (0..obj.dim())
            .map(|_| rng.random_range(-1.5..1.5))
            .collect();
        worst_logistic = worst_logistic.max(relative_error(
            &obj.gradient(&theta),
            &central_difference(|t| obj.loss(t), &theta),
        ));
    }
    for _ in 0..20 {
        let (x, z) = small_instance(&mut rng);
        let hidden = [rng.random_range(2..7), rng.random_range(2..7)];
        let mut net = Network::init(x.ncols(), &hidden, false, &mut rng);
        let theta: Vec<f64> = net
            .flat_params()
            .iter()
            .map(|v| v + rng.random_range(-0.3..0.3))
            .collect();
        net.set_flat_params(&theta).unwrap();
        let (_, analytic) = net.loss_and_gradient(x.view(), &z);
        let numeric = central_difference(
            |t| {
                let mut probe = net.clone();
                probe.set_flat_params(t).unwrap();
                probe.loss(x.view(), &z)
            },
            &theta,
        );
        worst_mlp = worst_mlp.max(relative_error(&analytic, &numeric));
    }
    outcome(
        worst_logistic < 1e-4 && worst_mlp < 1e-4,
        format!("worst relative error logistic {worst_logistic:.2e}, MLP {worst_mlp:.2e}"),
    )
}

// 11

fn run_cli(config: &std::path::Path, out: &std::path::Path, serial: bool) -> Vec<u8> {
    let mut cmd = std::process::Command::new(env!("CARGO_BIN_EXE_mcd"));
    cmd.args(["bench-density", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(["--seed", "17"]);
    if serial {
        cmd.arg("--serial");
    }
    let status = cmd.env_remove("MCD_SEED").status().unwrap();
    assert!(status.success());
    std::fs::read(out).unwrap()
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bench.cfg");
    std::fs::write(
        &config,
        "[bench-density]\nmodel = basic_linear\nseeds = 1, 2\nmethods = mcd_mlp, mcd_logistic, marginal\n",
    )
    .unwrap();
    let a = run_cli(&config, &dir.path().join("a.csv"), false);
    let b = run_cli(&config, &dir.path().join("b.csv"), false);
    let s = run_cli(&config, &dir.path().join("s.csv"), true);
    let rows = String::from_utf8_lossy(&a).lines().count() - 1;
    outcome(
        a == b && a == s && rows == 6,
        format!(
            "{rows} rows; repeat identical: {}; serial identical: {}",
            a == b,
            a == s
        ),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut record = |id: u32, name: &'static str, run: &dyn Fn() -> Outcome| {
        let o = std::panic::catch_unwind(std::panic::AssertUnwindSafe(run))
            .unwrap_or_else(|_| outcome(false, "panicked".into()));
        println!(
            "criterion {id:>2} {}: {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push((id, name, o));
    };
    record(1, "construction sizes", &construction_sizes);
    record(2, "contrast set structure", &structural_checks);
    record(3, "contrast algebra roundtrip", &contrast_roundtrip);

    let start = Instant::now();
    let fitted = bivariate_estimator(0.8, 40);
    let zero = bivariate_estimator(0.0, 41);
    let took = start.elapsed();
    record(4, "analytic contrast recovery", &|| {
        analytic_contrast(&fitted, &zero, took)
    });
    record(5, "conditional density recovery", &|| {
        conditional_recovery(&fitted, took / 2)
    });

    record(6, "ablation ordering over ratio", &ablation_ratio);
    record(7, "multi-target ordering", &multitarget_ordering);
    record(8, "baseline dominance", &baseline_dominance);
    record(9, "KDE and rescaling", &kde_and_rescaling);
    record(10, "gradient checks", &gradient_checks);
    record(11, "determinism", &determinism);

    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "{} of {} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed: {failed:?}");
        ExitCode::FAILURE
    }
}
