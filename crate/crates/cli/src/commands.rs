//! Subcommand implementations. Each writes its artifacts into the output directory and
//! stamps them with the configuration hash.

use crate::config::{ConfigError, ExperimentConfig};
use crate::plot::{self, PlotError, PlotSpec};
use nlslab_core::acceptance::{self, Context};
use nlslab_core::ansatz::{self, AnsatzGrid};
use nlslab_core::groundstate::GroundStateData;
use nlslab_core::interactions::{self, CartesianQuadrature, GeometryConstants};
use nlslab_core::modulation_fit::{self, TrackConfig};
use nlslab_core::pde::{self, EvolutionConfig};
use nlslab_core::provenance::Provenance;
use nlslab_core::reduced_ode::{self, ReducedState, ShootingConfig};
use nlslab_core::{ParamState, RadialGrid};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("output error: {0}")]
    Output(String),
    #[error(transparent)]
    Numerical(#[from] nlslab_core::Error),
    #[error(transparent)]
    Plot(#[from] PlotError),
    #[error("acceptance failed: {0}")]
    AcceptanceFailed(String),
}

impl CliError {
    /// Process exit status: 3 configuration, 4 numerical or module failure, 5 acceptance failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Output(_) => 3,
            CliError::Numerical(_) | CliError::Plot(_) => 4,
            CliError::AcceptanceFailed(_) => 5,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Output directory, provenance and verbosity shared by every subcommand.
pub struct Session {
    pub cfg: ExperimentConfig,
    pub out_dir: PathBuf,
    pub verbose: bool,
    provenance: Provenance,
}

impl Session {
    pub fn new(cfg: ExperimentConfig, out_dir: PathBuf, verbose: bool) -> CliResult<Self> {
        std::fs::create_dir_all(&out_dir).map_err(|e| CliError::Output(format!("{}: {e}", out_dir.display())))?;
        let probe = out_dir.join(".nlslab-write-check");
        std::fs::write(&probe, b"").map_err(|e| CliError::Output(format!("{} is not writable: {e}", out_dir.display())))?;
        let _ = std::fs::remove_file(probe);
        let provenance = cfg.provenance();
        Ok(Self { cfg, out_dir, verbose, provenance })
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    fn log(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("nlslab: {}", msg.as_ref());
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    /// Writes a CSV body below a provenance comment line.
    pub fn write_csv(&self, name: &str, body: &str) -> CliResult<PathBuf> {
        let path = self.path(name);
        let text = format!("{}{body}", self.provenance.csv_header());
        std::fs::write(&path, text).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
        self.log(format!("wrote {}", path.display()));
        Ok(path)
    }

    /// Writes a JSON object with a `provenance` entry added.
    pub fn write_json(&self, name: &str, mut value: Value) -> CliResult<PathBuf> {
        if let Value::Object(map) = &mut value {
            map.insert("provenance".into(), serde_json::to_value(&self.provenance).expect("provenance serializes"));
        }
        let path = self.path(name);
        let text = serde_json::to_string_pretty(&value).expect("json serializes");
        std::fs::write(&path, text + "\n").map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
        self.log(format!("wrote {}", path.display()));
        Ok(path)
    }

    fn ground_state(&self) -> CliResult<GroundStateData> {
        let g = &self.cfg.groundstate;
        self.log(format!("solving ground state: r_max {} spacing {}", g.r_max, g.spacing));
        let grid = RadialGrid::with_spacing(g.r_max, g.spacing)?;
        Ok(GroundStateData::compute(&grid, g.tol)?)
    }

    fn geometry(&self, gs: &GroundStateData) -> CliResult<GeometryConstants> {
        Ok(GeometryConstants::new(self.cfg.geometry.k, &gs.scalars)?)
    }
}

fn profile_csv(p: &nlslab_core::RadialProfile) -> CliResult<String> {
    let mut buf = Vec::new();
    p.write_csv(&mut buf)?;
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}

pub fn groundstate(session: &Session) -> CliResult<()> {
    let gs = session.ground_state()?;
    session.write_csv("q.csv", &profile_csv(&gs.q)?)?;
    session.write_csv("rho.csv", &profile_csv(&gs.rho)?)?;
    let s = gs.scalars;
    let [grad, quartic, energy] = gs.pohozaev_defects();
    session.write_json(
        "constants.json",
        json!({
            "q_at_0": s.q_at_0,
            "mass_q": s.mass_q,
            "grad_q_sq": s.grad_q_sq,
            "quartic_q": s.quartic_q,
            "c_q": s.c_q,
            "i_q": s.i_q,
            "rho_dot_q": s.rho_dot_q,
            "pohozaev_gradient_defect": grad,
            "pohozaev_quartic_defect": quartic,
            "energy_over_mass": energy,
            "q_csv": "q.csv",
            "rho_csv": "rho.csv",
        }),
    )?;
    println!("Q(0) = {:.12}, mass = {:.12}, c_Q = {:.8}, I_Q = {:.8}", s.q_at_0, s.mass_q, s.c_q, s.i_q);
    Ok(())
}

pub fn interactions(session: &Session) -> CliResult<()> {
    let gs = session.ground_state()?;
    let cfg = &session.cfg.interactions;
    let quad = CartesianQuadrature::for_profile(&gs.q, cfg.spacing);
    let rows = interactions::interaction_sweep(&gs, &cfg.norms, &quad)?;
    let mut body = String::from("omega_norm,quadrature,asymptotic,ratio\n");
    for r in &rows {
        body.push_str(&format!("{:.16e},{:.16e},{:.16e},{:.16e}\n", r.omega_norm, r.quadrature, r.asymptotic, r.ratio));
        println!("|omega| = {:>5}: ratio {:.6}", r.omega_norm, r.ratio);
    }
    session.write_csv("sweep.csv", &body)?;
    if rows.len() >= 2 {
        println!("residual exponent {:.4}", interactions::residual_exponent(&rows));
    }
    Ok(())
}

pub fn ansatz(session: &Session) -> CliResult<()> {
    let gs = session.ground_state()?;
    let consts = session.geometry(&gs)?;
    let a = &session.cfg.ansatz;
    let p = ParamState::new(a.lambda, a.z, a.gamma, a.beta, a.b);
    // the error field differentiates in z, so leave room beyond the clearance
    let half_width = if a.half_width > 0.0 { a.half_width } else { a.z + ansatz::BOX_CLEARANCE + 1.0 };
    let grid = AnsatzGrid { n: a.n, half_width };
    let big_p = ansatz::build_ansatz(&gs, &consts, &p, &grid)?;
    let pdot = reduced_ode::reduced_rhs(&ReducedState { s: 1.0, p }, &consts);
    let report = ansatz::error_field(&gs, &consts, &p, &pdot, &grid)?;
    let floor = ansatz::spectral_floor(&gs, &grid)?;
    let sidecar = json!({ "p": p, "provenance": session.provenance() });
    big_p.save(&session.path("ansatz.bin"), sidecar)?;
    if a.heatmaps {
        let mut abs = Vec::new();
        big_p.write_heatmap(&mut abs, |z| z.norm())?;
        session.write_csv("ansatz_abs.csv", &String::from_utf8(abs).expect("utf-8"))?;
        let mut arg = Vec::new();
        big_p.write_heatmap(&mut arg, |z| z.arg())?;
        session.write_csv("ansatz_arg.csv", &String::from_utf8(arg).expect("utf-8"))?;
        let mut err = Vec::new();
        report.direct.write_heatmap(&mut err, |z| z.norm())?;
        session.write_csv("error_abs.csv", &String::from_utf8(err).expect("utf-8"))?;
    }
    session.write_json(
        "ansatz.json",
        json!({
            "p": p,
            "n": grid.n,
            "L": grid.half_width,
            "mass": big_p.mass(),
            "error_norm": report.direct_norm,
            "route_discrepancy": report.discrepancy,
            "spectral_floor": floor,
        }),
    )?;
    println!("|E_P| = {:.6e}, route discrepancy {:.3e}, spectral floor {:.3e}", report.direct_norm, report.discrepancy, floor);
    Ok(())
}

/// Command-line overrides of the shooting section.
#[derive(Debug, Clone, Default)]
pub struct ShootArgs {
    pub s_in: Option<f64>,
    pub s0: Option<f64>,
    pub tol: Option<f64>,
    pub out: Option<String>,
}

pub fn shoot(session: &Session, args: &ShootArgs) -> CliResult<()> {
    let gs = session.ground_state()?;
    let consts = session.geometry(&gs)?;
    let r = &session.cfg.reduced_ode;
    let cfg = ShootingConfig::new(args.s_in.unwrap_or(r.s_in), args.s0.unwrap_or(r.s0), args.tol.unwrap_or(r.tol));
    cfg.validate()?;
    session.log(format!("shooting from s_in = {} to s0 = {}", cfg.s_in, cfg.s0));
    let out = reduced_ode::shoot(&cfg, &consts)?;
    let name = args.out.as_deref().unwrap_or("traj.csv");
    session.write_csv(name, &out.trajectory.to_csv(&consts))?;
    let stem = Path::new(name).file_stem().and_then(|s| s.to_str()).unwrap_or("traj");
    session.write_json(
        &format!("{stem}.json"),
        json!({
            "s_in": cfg.s_in,
            "s0": cfg.s0,
            "zeta_sharp_star": out.zeta_sharp_star,
            "survived": out.survived,
            "bracket": out.bracket,
            "shots": out.history.len(),
            "sign_monotone": out.sign_monotone(),
            "transversality_failures": out.transversality_failures().len(),
        }),
    )?;
    println!("zeta_sharp* = {:.15e}, survived {}, {} shots", out.zeta_sharp_star, out.survived, out.history.len());
    Ok(())
}

pub fn pde(session: &Session) -> CliResult<()> {
    let c = &session.cfg.pde;
    let mut u = match c.initial.as_str() {
        "gaussian" => pde::gaussian(c.n, c.half_width, c.amplitude, c.width)?,
        _ => {
            let gs = session.ground_state()?;
            pde::radial_field(&gs.q, c.n, c.half_width)?
        }
    };
    let run = EvolutionConfig { n: c.n, half_width: c.half_width, dt: c.dt, t_span: [0.0, c.t_end], monitor_stride: c.stride };
    session.log(format!("evolving {} steps", run.steps()));
    let log = pde::evolve(&mut u, &run)?;
    session.write_csv("runlog.csv", &log.to_csv())?;
    u.save(&session.path("final.bin"), json!({ "t": c.t_end, "provenance": session.provenance() }))?;
    for w in &log.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "mass drift {:.3e}, energy drift {:.3e}, {} snapshots",
        log.max_relative_mass_drift(),
        log.max_relative_energy_drift(),
        log.snapshots.len()
    );
    Ok(())
}

pub fn track(session: &Session) -> CliResult<()> {
    let gs = session.ground_state()?;
    let consts = session.geometry(&gs)?;
    let t = &session.cfg.track;
    let zeta_sharp = match t.zeta_sharp {
        Some(z) => z,
        None => {
            session.log(format!("selecting final data by shooting from s = {} to {}", t.s_in, t.s0));
            reduced_ode::shoot(&ShootingConfig::new(t.s_in, t.s0, 1e-12), &consts)?.zeta_sharp_star
        }
    };
    let cfg = TrackConfig {
        s_in: t.s_in,
        zeta_sharp,
        n: t.n,
        half_width: t.half_width,
        dt: t.dt,
        duration: t.duration,
        cadence: t.cadence,
        tol: t.tol,
        closeness: t.closeness,
        splitting: t.splitting,
    };
    let record = modulation_fit::track(&gs, &consts, &cfg)?;
    session.write_csv("track.csv", &record.to_csv())?;
    session.write_json(
        "track.json",
        json!({ "zeta_sharp": zeta_sharp, "rows": record.rows.len(), "truncated": record.truncated, "warnings": record.warnings }),
    )?;
    if let Some(tr) = &record.truncated {
        eprintln!("warning: tracking truncated at t = {}: {}", tr.t, tr.reason);
    }
    println!("{} cadence points", record.rows.len());
    Ok(())
}

pub fn plot_command(session: &Session, csv: &Path, spec: &PlotSpec, out: Option<&str>) -> CliResult<()> {
    let text = std::fs::read_to_string(csv).map_err(|e| CliError::Output(format!("{}: {e}", csv.display())))?;
    let svg = plot::plot(&text, spec)?;
    let default_name = format!("{}.svg", csv.file_stem().and_then(|s| s.to_str()).unwrap_or("plot"));
    let path = session.path(out.unwrap_or(&default_name));
    std::fs::write(&path, svg).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
    session.log(format!("wrote {}", path.display()));
    Ok(())
}

pub fn acceptance_command(session: &Session, only: Option<&[u8]>) -> CliResult<()> {
    let ctx = Context::new(session.cfg.acceptance.clone())?;
    let ids: Vec<u8> = only.map_or_else(|| (1..=9).collect(), <[u8]>::to_vec);
    let outcomes = acceptance::run_suite(&ctx, &ids, |o| println!("{}", o.summary_line()));
    for o in &outcomes {
        if !o.csv.is_empty() {
            session.write_csv(&format!("criterion_{}.csv", o.id), &o.csv)?;
        }
    }
    let blocking: Vec<u8> = outcomes.iter().filter(|o| o.is_blocking()).map(|o| o.id).collect();
    session.write_json(
        "acceptance.json",
        json!({
            "suite": "primary",
            "passed": outcomes.iter().all(|o| o.passed()),
            "blocking_failures": blocking,
            "criteria": outcomes,
        }),
    )?;
    if blocking.is_empty() {
        Ok(())
    } else {
        Err(CliError::AcceptanceFailed(format!("criteria {blocking:?}")))
    }
}
