use nlslab_cli::config::{ConfigError, ExperimentConfig};
use nlslab_cli::plot::{self, PlotError, PlotSpec};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nlslab-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn nlslab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlslab")).arg("--out-dir").arg(out).args(args).output().unwrap()
}

// a coarse radial grid keeps the binary tests fast
const COARSE: [&str; 4] = ["--set", "groundstate.spacing=0.02", "--set", "groundstate.r_max=30"];

#[test]
fn groundstate_writes_stamped_artifacts() {
    let dir = scratch("gs");
    let out = nlslab(&dir, &[&COARSE[..], &["groundstate"]].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let q = std::fs::read_to_string(dir.join("q.csv")).unwrap();
    let mut lines = q.lines();
    assert!(lines.next().unwrap().starts_with("# nlslab "));
    assert_eq!(lines.next().unwrap(), "r,value");
    let constants: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("constants.json")).unwrap()).unwrap();
    for key in ["q_at_0", "mass_q", "c_q", "i_q", "rho_dot_q", "q_csv", "rho_csv", "provenance"] {
        assert!(constants.get(key).is_some(), "missing {key}");
    }
    assert!(dir.join("rho.csv").exists());
}

#[test]
fn identical_configs_give_identical_bodies() {
    let (a, b) = (scratch("det-a"), scratch("det-b"));
    let args = [&COARSE[..], &["--set", "interactions.norms=8,10", "--set", "interactions.spacing=0.1", "interactions"]].concat();
    assert!(nlslab(&a, &args).status.success());
    assert!(nlslab(&b, &args).status.success());
    let read = |d: &Path| std::fs::read_to_string(d.join("sweep.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    let body = nlslab_core::provenance::csv_body(&read(&a));
    assert!(body.starts_with("omega_norm,quadrature,asymptotic,ratio\n"));
    assert_eq!(body.lines().count(), 3);
}

#[test]
fn shoot_honours_command_line_overrides() {
    let dir = scratch("shoot");
    let out = nlslab(&dir, &[&COARSE[..], &["reduced-ode", "shoot", "--s-in", "1e4", "--s0", "1e3", "--tol", "1e-10", "--out", "t.csv"]].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("t.json")).unwrap()).unwrap();
    assert_eq!(summary["s_in"], 1e4);
    let csv = std::fs::read_to_string(dir.join("t.csv")).unwrap();
    assert_eq!(nlslab_core::provenance::csv_body(&csv).lines().next().unwrap(), "s,lambda,z,gamma,beta,b,a,zeta,xi,t");
}

#[test]
fn pde_run_logs_conserved_quantities() {
    let dir = scratch("pde");
    let sets = ["pde.initial=gaussian", "pde.n=32", "pde.half_width=10", "pde.dt=1e-3", "pde.t_end=0.01", "pde.stride=5"];
    let mut args: Vec<&str> = Vec::new();
    for s in &sets {
        args.extend(["--set", s]);
    }
    args.push("pde");
    let out = nlslab(&dir, &args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let log = std::fs::read_to_string(dir.join("runlog.csv")).unwrap();
    assert_eq!(nlslab_core::provenance::csv_body(&log).lines().count(), 4);
    assert_eq!(std::fs::metadata(dir.join("final.bin")).unwrap().len(), 16 * 32 * 32);
    assert!(dir.join("final.bin.json").exists());
}

#[test]
fn exit_codes_follow_the_failure_category() {
    let dir = scratch("codes");
    assert_eq!(nlslab(&dir, &["frobnicate"]).status.code(), Some(2));
    assert_eq!(nlslab(&dir, &["acceptance", "--suite", "secondary"]).status.code(), Some(2));
    assert_eq!(nlslab(&dir, &["--set", "geometry.k=1", "groundstate"]).status.code(), Some(3));
    assert_eq!(nlslab(&dir, &["--set", "nosuch.key=1", "groundstate"]).status.code(), Some(3));
    let cfg = dir.join("bad.cfg");
    std::fs::write(&cfg, "groundstate.tol 1e-12\n").unwrap();
    assert_eq!(nlslab(&dir, &["--config", cfg.to_str().unwrap(), "groundstate"]).status.code(), Some(3));
    // the shooting interval needs s_in > s0
    assert_eq!(nlslab(&dir, &[&COARSE[..], &["reduced-ode", "shoot", "--s-in", "100", "--s0", "1000"]].concat()).status.code(), Some(4));
    let empty = dir.join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let out = nlslab(&dir, &["plot", "--csv", empty.to_str().unwrap(), "--x", "s", "--y", "b"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing column"));
}

#[test]
fn acceptance_subset_emits_json() {
    let dir = scratch("acc");
    let out = nlslab(&dir, &["acceptance", "--suite", "primary", "--only", "2,3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("criterion 2 PASS"));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("acceptance.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["criteria"].as_array().unwrap().len(), 2);
    assert!(dir.join("criterion_3.csv").exists());
}

#[test]
fn config_files_parse_sections_lists_and_comments() {
    let cfg = ExperimentConfig::parse(
        "# comment\n\ngroundstate.r_max = 25\ninteractions.norms = 8, 9.5\ngeometry.k=3\ntrack.splitting = strang\ntrack.zeta_sharp = -0.25\nansatz.heatmaps = false\n",
    )
    .unwrap();
    assert_eq!(cfg.groundstate.r_max, 25.0);
    assert_eq!(cfg.interactions.norms, vec![8.0, 9.5]);
    assert_eq!(cfg.geometry.k, 3);
    assert_eq!(cfg.track.splitting, nlslab_core::pde::Splitting::Strang);
    assert_eq!(cfg.track.zeta_sharp, Some(-0.25));
    assert!(!cfg.ansatz.heatmaps);
    let single = ExperimentConfig::parse("interactions.norms = 10").unwrap();
    assert_eq!(single.interactions.norms, vec![10.0]);
    assert_eq!(ExperimentConfig::default().provenance(), ExperimentConfig::parse("").unwrap().provenance());
    assert_ne!(ExperimentConfig::default().provenance(), cfg.provenance());
}

#[test]
fn config_errors_are_specific() {
    assert!(matches!(ExperimentConfig::parse("nonsense"), Err(ConfigError::Syntax { line: 1, .. })));
    assert!(matches!(ExperimentConfig::parse("x.y = 1"), Err(ConfigError::UnknownSection(_))));
    assert!(matches!(ExperimentConfig::parse("pde.nope = 1"), Err(ConfigError::Invalid { .. })));
    assert!(matches!(ExperimentConfig::parse("reduced_ode.tol = 0"), Err(ConfigError::Invalid { .. })));
    assert!(matches!(ExperimentConfig::parse("pde.initial = square"), Err(ConfigError::Invalid { .. })));
    assert!(matches!(ExperimentConfig::parse("acceptance.bogus = 1"), Err(ConfigError::Invalid { .. })));
}

#[test]
fn plots_draw_one_polyline_per_series() {
    let csv = "# stamp\ns,lambda,b\n10,0.5,0.1\n100,0.25,0.01\n1000,0.15,0.001\n";
    let spec = PlotSpec { x: "s".into(), y: vec!["lambda".into(), "b".into()], log_x: true, log_y: true, title: "a < b".into() };
    let svg = plot::plot(csv, &spec).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<polyline").count(), 2);
    assert!(svg.contains("a &lt; b"));
    let missing = PlotSpec { y: vec!["gamma".into()], ..spec.clone() };
    assert!(matches!(plot::plot(csv, &missing), Err(PlotError::MissingColumn(c)) if c == "gamma"));
    assert!(matches!(plot::plot("", &spec), Err(PlotError::MissingColumn(_))));
    let negative = "x,y\n1,-1\n2,-2\n";
    let log = PlotSpec { x: "x".into(), y: vec!["y".into()], log_x: false, log_y: true, title: String::new() };
    assert!(matches!(plot::plot(negative, &log), Err(PlotError::NoPoints(_))));
}
