//! End-to-end checks of the command-line interface and file formats:
//! deterministic outputs, exact ledger round trips, snapshot inspection and
//! error paths with nonzero exit codes.

use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_elastoflow"))
}

fn write_config(dir: &Path, out: &Path, extra: &str) -> std::path::PathBuf {
    let path = dir.join("run.cfg");
    let text = format!(
        "grid.n = 16\nindices.n_v = 4\nindices.l_b = 4\nindices.n_cut = 4\n\
         scheme.dt = 1e-2\nscheme.t_end = 0.1\nic.preset = perturbed\n\
         ic.b_amp = 0.2\nic.v_amp = 0.2\nic.k_max = 2\nic.seed = 31\n\
         output.dir = {}\noutput.snapshot_every = 5\n{extra}",
        out.display()
    );
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn run_produces_the_full_output_set_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let out1 = tmp.path().join("out1");
    let out2 = tmp.path().join("out2");
    let cfg1 = write_config(tmp.path(), &out1, "");
    let status = bin().arg("run").arg(&cfg1).status().unwrap();
    assert!(status.success());
    for name in [
        "manifest.cfg",
        "ledger.csv",
        "final.vbsnap",
        "report.txt",
        "energies.svg",
        "budget_residual.svg",
        "minmax.svg",
        "snap_000000.vbsnap",
        "snap_000001.vbsnap",
        "snap_000002.vbsnap",
    ] {
        assert!(out1.join(name).exists(), "missing {name}");
    }

    // identical config (fresh directory) gives bit-identical outputs
    let cfg2 = write_config(tmp.path(), &out2, "");
    assert!(bin().arg("run").arg(&cfg2).status().unwrap().success());
    for name in ["ledger.csv", "final.vbsnap", "energies.svg"] {
        let a = fs::read(out1.join(name)).unwrap();
        let b = fs::read(out2.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }

    // the manifest echoes a parseable config
    let manifest = fs::read_to_string(out1.join("manifest.cfg")).unwrap();
    assert!(manifest.contains("ic.seed = 31"));
}

#[test]
fn plot_regenerates_identical_svgs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), &out, "");
    assert!(bin().arg("run").arg(&cfg).status().unwrap().success());
    let plots = tmp.path().join("plots");
    let status = bin()
        .arg("plot")
        .arg(out.join("ledger.csv"))
        .arg("--out")
        .arg(&plots)
        .status()
        .unwrap();
    assert!(status.success());
    let a = fs::read(out.join("energies.svg")).unwrap();
    let b = fs::read(plots.join("energies.svg")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn inspect_reports_header_and_ranges() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), &out, "");
    assert!(bin().arg("run").arg(&cfg).status().unwrap().success());
    let output = bin().arg("inspect").arg(out.join("final.vbsnap")).output().unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    assert!(text.contains("grid        : 16 x 16"));
    assert!(text.contains("b range"));
}

#[test]
fn invalid_configs_fail_with_named_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.cfg");
    fs::write(&path, "params.nu = -1\n").unwrap();
    let output = bin().arg("run").arg(&path).output().unwrap();
    assert!(!output.status.success());
    let err = String::from_utf8(output.stderr).unwrap();
    assert!(err.contains("nu must be positive"), "{err}");

    fs::write(&path, "no.such.key = 3\n").unwrap();
    let output = bin().arg("run").arg(&path).output().unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8(output.stderr).unwrap().contains("unknown key"));
}

#[test]
fn blowup_returns_nonzero_and_keeps_partial_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let path = tmp.path().join("explode.cfg");
    fs::write(
        &path,
        format!(
            "grid.n = 16\nindices.n_v = 4\nindices.l_b = 4\nindices.n_cut = 4\n\
             params.nu = 1e-6\nparams.sigma = 0\nscheme.dt = 1.0\nscheme.t_end = 40\n\
             ic.preset = taylor_green\nic.amplitude = 30\noutput.dir = {}",
            out.display()
        ),
    )
    .unwrap();
    let output = bin().arg("run").arg(&path).output().unwrap();
    assert!(!output.status.success());
    assert!(out.join("manifest.cfg").exists());
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("FAILED") || report.contains("failed"), "{report}");
    assert!(report.contains("step"), "report does not name the failing step: {report}");
}

#[test]
fn converge_writes_a_rate_table() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("logistic.cfg");
    let out = tmp.path().join("rates");
    fs::write(
        &path,
        format!(
            "grid.n = 16\nindices.n_v = 4\nindices.l_b = 4\nindices.n_cut = 4\n\
             params.mu = 2.0\nscheme.t_end = 1.0\nic.preset = uniform\nic.b0 = 0.5\n\
             output.dir = {}",
            out.display()
        ),
    )
    .unwrap();
    let output = bin()
        .arg("converge")
        .arg(&path)
        .arg("--axis")
        .arg("dt")
        .arg("--levels")
        .arg("0.2,0.1,0.05")
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let table = fs::read_to_string(out.join("rates_dt.txt")).unwrap();
    assert!(table.contains("axis dt"));
    let text = String::from_utf8(output.stdout).unwrap();
    assert!(text.contains("order"));
}

#[test]
fn run_pipeline_reproduces_the_logistic_value() {
    // the full orchestration (config -> preset -> stepping -> ledger) lands
    // on the analytic logistic value for the uniform preset
    use elastoflow::config::RunConfig;
    use elastoflow::oracle;
    use elastoflow::run::simulate;
    let cfg = RunConfig::parse(
        "grid.n = 16\nindices.n_v = 4\nindices.l_b = 4\nindices.n_cut = 4\n\
         scheme.dt = 1e-3\nscheme.t_end = 5.0\nic.preset = uniform\nic.b0 = 2.0\n\
         output.ledger_every = 100",
    )
    .unwrap();
    let (summary, state) = simulate(&cfg).unwrap();
    assert!(summary.failure.is_none());
    let exact = oracle::logistic(2.0, 1.0, 5.0);
    assert!(
        (state.b.mean() - exact).abs() <= 1e-6,
        "final uniform b {} vs logistic {exact}",
        state.b.mean()
    );
    // ledger rows are identical across the uniform field
    let last = summary.rows.last().unwrap();
    assert!((last.b_min_obs - last.b_max_obs).abs() < 1e-12);
}

#[test]
fn verify_exits_zero() {
    let output = bin().arg("verify").output().unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    assert!(text.contains("all 9 checks passed"), "{text}");
}
