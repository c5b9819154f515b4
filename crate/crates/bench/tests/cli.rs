use std::path::Path;
use std::process::Command;

fn mcd(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_mcd"))
        .args(args)
        .env_remove("MCD_SEED")
        .output()
        .expect("run mcd")
}

fn ok(args: &[&str]) -> String {
    let out = mcd(args);
    assert!(
        out.status.success(),
        "mcd {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL_MLP: &str = "[mcd]\nhidden = 16\nepochs = 20\nbatch_size = 128\n";

#[test]
fn simulate_train_predict_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let sim_cfg = write(
        dir.path(),
        "sim.toml",
        "[simulate]\nmodel = basic_linear\np = 3\nn = 120\n",
    );
    let data = dir.path().join("data.csv");
    let data = data.to_str().unwrap();
    ok(&[
        "simulate", "--config", &sim_cfg, "--seed", "4", "--out", data,
    ]);
    let text = std::fs::read_to_string(data).unwrap();
    assert_eq!(text.lines().next().unwrap(), "x1,x2,x3,y");
    assert_eq!(text.lines().count(), 121);
    assert_eq!(ok(&["simulate", "--config", &sim_cfg, "--seed", "4"]), text);

    let model = dir.path().join("model.json");
    let model = model.to_str().unwrap();
    let train_cfg = write(
        dir.path(),
        "train.toml",
        &format!("[train]\ndata = {data}\ntarget = y\n{SMALL_MLP}"),
    );
    ok(&[
        "train", "--config", &train_cfg, "--seed", "1", "--out", model,
    ]);

    let pred_cfg = write(
        dir.path(),
        "pred.toml",
        &format!("[predict]\nmodel = {model}\ndata = {data}\n"),
    );
    let pointwise = ok(&["predict", "--config", &pred_cfg]);
    let mut lines = pointwise.lines();
    assert_eq!(lines.next().unwrap(), "row,y,density");
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 120);
    assert!(rows.iter().all(|r| r[2].is_finite() && r[2] >= 0.0));

    let features = write(
        dir.path(),
        "features.csv",
        "x1,x2,x3\n0.1,0.2,0.3\n-1,0,1\n",
    );
    let grid_cfg = write(
        dir.path(),
        "grid.toml",
        &format!("[predict]\nmodel = {model}\ndata = {features}\ngrid_points = 300\n"),
    );
    let on_grid = ok(&["predict", "--config", &grid_cfg]);
    let rows: Vec<Vec<f64>> = on_grid
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 600);
    for row in 0..2 {
        let pts: Vec<&Vec<f64>> = rows.iter().filter(|r| r[0] == row as f64).collect();
        let mass: f64 = pts
            .windows(2)
            .map(|w| 0.5 * (w[0][2] + w[1][2]) * (w[1][1] - w[0][1]))
            .sum();
        assert!(mass > 0.2 && mass < 5.0, "row {row}: mass {mass}");
    }
}

#[test]
fn real_bench_prefers_mcd_on_a_dependent_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let sim_cfg = write(
        dir.path(),
        "sim.toml",
        "[simulate]\nmodel = bivariate_gauss\nn = 400\n",
    );
    let data = dir.path().join("biv.csv");
    let data = data.to_str().unwrap();
    ok(&[
        "simulate", "--config", &sim_cfg, "--seed", "8", "--out", data,
    ]);
    let cfg = write(
        dir.path(),
        "real.toml",
        &format!("[bench-real]\ndata = {data}\ntarget = y\nseeds = 1\nmethods = mcd_mlp, marginal\n{SMALL_MLP}"),
    );
    let out = ok(&["bench-real", "--config", &cfg]);
    let reports = mcd_bench::output::parse_csv_reports(&out).unwrap();
    assert_eq!(reports.len(), 2);
    assert_eq!(reports[0].model, "biv");
    assert_eq!(reports[0].n_test, 100);
    assert!(reports[0].value < reports[1].value, "{out}");

    let md = ok(&["bench-real", "--config", &cfg, "--format", "markdown"]);
    assert!(md.contains("Medians over seeds"));
}

#[test]
fn bad_input_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.toml",
        "[bench-density]\nmodel = no_such_model\n",
    );
    let out = mcd(&["bench-density", "--config", &cfg]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));

    let out = mcd(&["train", "--config", "/nonexistent/config.toml"]);
    assert!(!out.status.success());

    let cfg = write(dir.path(), "abl.toml", "[ablation]\ncells = id:0.5:m=3\n");
    assert!(!mcd(&["ablation", "--config", &cfg]).status.success());
}

#[test]
fn seed_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sim.toml", "[simulate]\nn = 5\np = 2\n");
    let run = |seed: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_mcd"))
            .args(["simulate", "--config", &cfg])
            .env("MCD_SEED", seed)
            .output()
            .unwrap();
        String::from_utf8(out.stdout).unwrap()
    };
    assert_eq!(run("3"), ok(&["simulate", "--config", &cfg, "--seed", "3"]));
    assert_ne!(run("3"), run("4"));
}
