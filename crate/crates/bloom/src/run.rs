//! Subcommand drivers. Each writes its outputs, `summary.txt` and `manifest.json`
//! into the output directory.

use std::fmt;
use std::path::{Path, PathBuf};

use bloom_core::fem::{simulate_2d, Field2D, Stabilization};
use bloom_core::kernels::{b_bar, r0};
use bloom_core::mesh::{lake_mesh, TriMesh};
use bloom_core::ode::{find_equilibrium, integrate_homogeneous, EquilibriumKind};
use bloom_core::solver1d::{build_grid, integrate_1d, Field1D};
use bloom_core::stability::mode_sweep;
use bloom_core::wind::{ConstantWind, OscillatoryWind, Wind};
use bloom_core::SECONDS_PER_DAY;
use serde::Serialize;
use serde_json::json;

use crate::config::{Config, EquilibriumChoice, WindMode, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::export::{self, num};
use crate::{driver, gmsh, vtk, wind_csv};

/// Final biomass below this fraction of the initial maximum counts as extinction.
pub const EXTINCTION_RATIO: f64 = 1e-3;
/// Spatial `max B / min B` below this counts as uniform.
pub const UNIFORM_RATIO: f64 = 1.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Homogeneous system, no transport.
    Ode,
    /// Mode-by-mode linear stability of an equilibrium.
    Stability,
    /// Finite differences on an interval.
    Sim1d,
    /// Finite elements on a lake mesh.
    Sim2d,
    /// Sobol' indices of the 1D model.
    Sobol,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Command::Ode => "ode",
            Command::Stability => "stability",
            Command::Sim1d => "sim1d",
            Command::Sim2d => "sim2d",
            Command::Sobol => "sobol",
        };
        f.write_str(s)
    }
}

/// Files written (relative to the output directory) and human-readable summary lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub files: Vec<String>,
    pub summary: Vec<String>,
}

impl Report {
    fn line(&mut self, s: impl Into<String>) {
        self.summary.push(s.into());
    }
}

/// Builds the configured wind, reading the series file if needed.
pub fn build_wind(cfg: &Config) -> Result<Box<dyn Wind>> {
    let w = &cfg.wind;
    Ok(match w.mode {
        WindMode::None => Box::new(ConstantWind([0.0, 0.0])),
        WindMode::Constant => Box::new(ConstantWind(w.velocity_mps.map(|c| c * SECONDS_PER_DAY))),
        WindMode::Oscillatory => Box::new(OscillatoryWind::new(w.amplitude_mps, w.period_days, w.phase)?),
        WindMode::Series => {
            let path = w.file.as_ref().ok_or_else(|| Error::Config("wind.file is not set".into()))?;
            let series = wind_csv::read_wind_file(path, w.start.as_deref())?;
            if w.daily {
                let (daily, filled) = series.aggregate_daily()?;
                if !filled.is_empty() {
                    log::warn!("{}: {} days without records carried forward", path.display(), filled.len());
                }
                Box::new(daily)
            } else {
                Box::new(series)
            }
        }
    })
}

/// Checks that files named in the config exist before any work starts.
pub fn check_inputs(cmd: Command, cfg: &Config) -> Result<()> {
    let mut needed: Vec<&PathBuf> = Vec::new();
    if matches!(cmd, Command::Sim1d | Command::Sim2d | Command::Sobol) && cfg.wind.mode == WindMode::Series {
        needed.extend(cfg.wind.file.as_ref());
    }
    if cmd == Command::Sim2d {
        needed.extend(cfg.sim2d.mesh.as_ref());
    }
    for p in needed {
        if !p.is_file() {
            return Err(Error::io(p, std::io::Error::new(std::io::ErrorKind::NotFound, "input file not found")));
        }
    }
    Ok(())
}

/// Runs `cmd` with outputs in `out`. `threads` bounds the worker pool of `sobol`.
pub fn run(cmd: Command, cfg: &Config, out: &Path, threads: Option<usize>) -> Result<Report> {
    cfg.validate()?;
    check_inputs(cmd, cfg)?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut report = match cmd {
        Command::Ode => run_ode(cfg, out)?,
        Command::Stability => run_stability(cfg, out)?,
        Command::Sim1d => run_sim1d(cfg, out)?,
        Command::Sim2d => run_sim2d(cfg, out)?,
        Command::Sobol => {
            let mut pool = rayon::ThreadPoolBuilder::new();
            if let Some(n) = threads {
                pool = pool.num_threads(n);
            }
            let pool = pool.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            pool.install(|| run_sobol(cfg, out))?
        }
    };
    let summary_path = out.join("summary.txt");
    let mut text = report.summary.join("\n");
    text.push('\n');
    std::fs::write(&summary_path, text).map_err(|e| Error::io(&summary_path, e))?;
    report.files.push("summary.txt".into());
    write_manifest(cmd, cfg, out, &report)?;
    Ok(report)
}

fn write_manifest(cmd: Command, cfg: &Config, out: &Path, report: &Report) -> Result<()> {
    let manifest = json!({
        "command": cmd,
        "config_sha256": cfg.hash(),
        "seed": cfg.seed,
        "versions": {
            "bloom": env!("CARGO_PKG_VERSION"),
            "bloom-core": bloom_core::VERSION,
            "config_schema": SCHEMA_VERSION,
        },
        "outputs": report.files,
        "summary": report.summary,
        "config": cfg,
    });
    let path = out.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn run_ode(cfg: &Config, out: &Path) -> Result<Report> {
    let o = &cfg.ode;
    let p = &cfg.params;
    let traj = integrate_homogeneous(&o.initial.to_state(), p, o.t_end, o.rtol, o.atol)?;
    let mut report = Report::default();
    export::write_ode_csv(&traj, &out.join("ode.csv"))?;
    report.files.push("ode.csv".into());
    let last = bloom_core::ode::Trajectory { times: traj.times.last().copied().into_iter().collect(), states: traj.last().copied().into_iter().collect(), ..Default::default() };
    export::write_ode_csv(&last, &out.join("ode_final.csv"))?;
    report.files.push("ode_final.csv".into());
    report.line(format!("R0: {}", num(r0(p))));
    if let Some(s) = traj.last() {
        report.line(format!("final: t = {} B = {} p = {} P = {}", num(o.t_end), num(s.biomass), num(s.internal_p), num(s.dissolved_p)));
    }
    report.line(format!("steps: {}", traj.stats.steps));
    Ok(report)
}

fn run_stability(cfg: &Config, out: &Path) -> Result<Report> {
    let p = &cfg.params;
    let s = &cfg.stability;
    let r0v = r0(p);
    let want_positive = match s.equilibrium {
        EquilibriumChoice::Auto => r0v > 1.0,
        EquilibriumChoice::Extinction => false,
        EquilibriumChoice::Positive => true,
    };
    let (eq, kind) = if want_positive {
        let guess = cfg.ode.initial.to_state();
        let (eq, kind) = find_equilibrium(p, &guess, cfg.ode.rtol)?;
        if kind != EquilibriumKind::Positive {
            return Err(Error::Config(format!("no positive equilibrium: R0 = {r0v} <= 1")));
        }
        (eq, kind)
    } else {
        (bloom_core::ode::extinction_state(p), EquilibriumKind::Extinction)
    };
    let sweep = mode_sweep(&eq, s.n_max, s.wind, p)?;
    for spec in sweep.spectra.iter().filter(|x| x.near_defective) {
        log::warn!("mode {}: eigenvalues nearly coincide, the first-order estimate is unreliable", spec.n);
    }
    let kind_name = match kind {
        EquilibriumKind::Extinction => "extinction",
        EquilibriumKind::Positive => "positive",
    };
    let unstable = sweep.unstable_modes(0);
    let unstable_list = unstable.iter().map(u32::to_string).collect::<Vec<_>>().join(";");
    let mut report = Report::default();
    export::write_spectrum_csv(&sweep.rows(), &out.join("spectrum.csv"))?;
    report.files.push("spectrum.csv".into());
    export::write_csv(
        &out.join("stability.csv"),
        &["R0", "equilibrium", "B", "p", "P", "wind", "n_max", "stable", "max_leading_real", "unstable_modes"],
        [vec![
            num(r0v),
            kind_name.into(),
            num(eq.biomass),
            num(eq.internal_p),
            num(eq.dissolved_p),
            num(s.wind),
            s.n_max.to_string(),
            sweep.is_stable().to_string(),
            num(sweep.max_leading_real()),
            unstable_list.clone(),
        ]],
    )?;
    report.files.push("stability.csv".into());
    report.line(format!("R0: {}", num(r0v)));
    report.line(format!("equilibrium: {kind_name} (B = {}, p = {}, P = {})", num(eq.biomass), num(eq.internal_p), num(eq.dissolved_p)));
    report.line(format!("stable: {}", sweep.is_stable()));
    report.line(format!("unstable modes: [{}]", unstable_list.replace(';', ", ")));
    Ok(report)
}

fn sample_times(t_end: f64, every: f64) -> Result<Vec<f64>> {
    if !(t_end > 0.0 && every > 0.0) {
        return Err(Error::Config(format!("need t_end > 0 and output_every > 0, got {t_end} and {every}")));
    }
    let mut times: Vec<f64> = (0..).map(|k| k as f64 * every).take_while(|&t| t < t_end * (1.0 - 1e-12)).collect();
    times.push(t_end);
    Ok(times)
}

fn extinct(initial_max: f64, final_max: f64) -> bool {
    final_max < EXTINCTION_RATIO * initial_max
}

fn run_sim1d(cfg: &Config, out: &Path) -> Result<Report> {
    let s = &cfg.sim1d;
    let p = &cfg.params;
    let grid = build_grid(s.length, s.nx)?;
    let initial = Field1D::default_initial(&grid, p);
    let wind = build_wind(cfg)?;
    let times = sample_times(s.t_end, s.output_every)?;
    let traj = integrate_1d(&initial, &grid, wind.as_ref(), p, s.t_end, s.rtol, s.atol, &times)?;
    let mut report = Report::default();
    export::write_sim1d_csv(&traj, &grid, &out.join("sim1d.csv"))?;
    report.files.push("sim1d.csv".into());
    let last = traj.fields.last().expect("t_end is always sampled");
    let (b0, b1, bmin) = (initial.max_biomass(), last.max_biomass(), last.min_biomass());
    report.line(format!("extinction: {}", extinct(b0, b1)));
    report.line(format!("uniform: {}", bmin > 0.0 && b1 / bmin < UNIFORM_RATIO));
    report.line(format!("max B: initial {} final {}", num(b0), num(b1)));
    report.line(format!("min B final: {}", num(bmin)));
    report.line(format!("max |p - QB| / max p: {}", num(traj.max_consistency_gap)));
    report.line(format!("steps: {}", traj.stats.steps));
    Ok(report)
}

fn load_mesh(cfg: &Config) -> Result<TriMesh> {
    match &cfg.sim2d.mesh {
        Some(path) => Ok(gmsh::load_gmsh_mesh(path)?.mesh),
        None => Ok(lake_mesh(cfg.sim2d.lake_radius, cfg.sim2d.lake_rings)?),
    }
}

fn run_sim2d(cfg: &Config, out: &Path) -> Result<Report> {
    let s = &cfg.sim2d;
    let p = &cfg.params;
    let mesh = load_mesh(cfg)?;
    let initial = Field2D::default_initial(&mesh, p);
    let wind = build_wind(cfg)?;
    let times = sample_times(s.t_end, s.output_every)?;
    let sim = simulate_2d(&initial, &mesh, wind.as_ref(), p, s.options(), s.t_end, &times)?;
    let mut report = Report::default();
    let width = (sim.times.len().max(2) - 1).to_string().len().max(4);
    let mut entries = Vec::with_capacity(sim.times.len());
    for (k, (t, f)) in sim.times.iter().zip(&sim.snapshots).enumerate() {
        let name = format!("sim2d_{k:0width$}.vtk");
        vtk::write_vtk(f, &mesh, &out.join(&name), &format!("bloom sim2d t = {}", num(*t)), s.eps)?;
        entries.push((*t, name.clone()));
        report.files.push(name);
    }
    export::write_snapshot_manifest(&entries, &out.join("sim2d.csv"))?;
    report.files.push("sim2d.csv".into());
    let last = sim.snapshots.last().expect("t_end is always recorded");
    let (b0, b1) = (initial.max_biomass(), last.max_biomass());
    let log = &sim.log;
    report.line(format!("mesh: {} nodes, {} triangles", mesh.node_count(), mesh.triangle_count()));
    report.line(format!("extinction: {}", extinct(b0, b1)));
    report.line(format!("max B: initial {} final {}", num(b0), num(b1)));
    report.line(format!("bound max(B0, b_bar): {}", num(b0.max(b_bar(p)))));
    report.line(format!("steps: {} (halvings {}, Newton iterations {}, factorizations {})", log.steps, log.halvings, log.newton_iterations, log.factorizations));
    report.line(format!("max cell Peclet: {}", num(log.max_peclet)));
    if log.max_peclet > 1.0 && s.stabilization == Stabilization::None {
        log::warn!("cell Peclet number {:.3e} > 1: Galerkin advection may oscillate; consider stabilization = \"discrete_upwind\"", log.max_peclet);
    }
    Ok(report)
}

fn run_sobol(cfg: &Config, out: &Path) -> Result<Report> {
    let seed = cfg.seed.ok_or_else(|| Error::Config("sobol needs a seed (`seed` in the config or --seed)".into()))?;
    let s = &cfg.sobol;
    let problem = s.problem();
    let scenario = s.scenario();
    let bins = scenario.bins()?;
    let wind = build_wind(cfg)?;
    let wind = wind.as_ref();
    let result = driver::run_sensitivity_parallel(&problem, &cfg.params, s.n, &bins, seed, |p| scenario.evaluate(p, wind))?;
    let mut report = Report::default();
    export::write_sobol_csv(&result, &out.join("sobol.csv"))?;
    report.files.push("sobol.csv".into());
    let d = problem.dim();
    report.line(format!("design rows: {} (N = {}, d = {d})", s.n * (d + 2), s.n));
    report.line(format!("failed rows: {}", result.failed_rows));
    let mut ranking: Vec<(f64, &str)> = (0..d).map(|f| (result.mean_total(f), result.factors[f].as_str())).collect();
    ranking.sort_by(|a, b| b.0.total_cmp(&a.0));
    let ranked: Vec<String> = ranking.iter().map(|(v, name)| format!("{name} {v:.4}")).collect();
    report.line(format!("mean ST ranking: {}", ranked.join(", ")));
    let flagged = result.out_of_range();
    if !flagged.is_empty() {
        let list: Vec<String> = flagged.iter().map(|&(f, b)| format!("{}@{}", result.factors[f], num(result.bins[b].0))).collect();
        report.line(format!("indices outside [0, 1] (sampling noise): {}", list.join(", ")));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_times_end_on_t_end() {
        assert_eq!(sample_times(10.0, 4.0).unwrap(), [0.0, 4.0, 8.0, 10.0]);
        assert_eq!(sample_times(8.0, 4.0).unwrap(), [0.0, 4.0, 8.0]);
        assert!(sample_times(8.0, 0.0).is_err());
    }

    #[test]
    fn command_names() {
        assert_eq!(Command::Sim2d.to_string(), "sim2d");
        assert_eq!(serde_json::to_string(&Command::Sobol).unwrap(), "\"sobol\"");
    }
}
