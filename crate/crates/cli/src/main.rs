use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use freqlump_core::analysis::{bound_check, linspace, pole_sweep, reduce, simulate_pair, Reduction};
use freqlump_core::design::{design, DesignTargets, TransientTarget};
use freqlump_core::linalg::C64;
use freqlump_core::network::solve_equilibrium;
use freqlump_core::sim::{simulate_nonlinear, step_metrics, Integrator, PoleZero, StepScenario, Trajectory};
use freqlump_core::system::{BusId, SystemDescription};
use freqlump_core::{Error, Result};

#[derive(Parser)]
#[command(name = "freqlump", version, about = "Lumped frequency models, DER design and step simulation")]
struct Cli {
    /// System description (TOML). Defaults to the bundled four-bus system.
    #[arg(long, short, global = true)]
    system: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimise the lumped time constant and report model health.
    Reduce {
        /// Write the τ̂ search trace here.
        #[arg(long)]
        trace_csv: Option<PathBuf>,
    },
    /// Size DER droop and inertia for regulation and transient targets.
    Design {
        #[arg(long)]
        rreg: f64,
        #[arg(long, conflicts_with = "omega_n", required_unless_present = "omega_n")]
        zeta: Option<f64>,
        #[arg(long)]
        omega_n: Option<f64>,
        /// Writes design_report.txt and system_designed.toml here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Step-response simulation of one or more models.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum, default_value_t = ModelSel::All)]
        model: ModelSel,
        #[arg(long, value_enum, default_value_t = IntegratorSel::Exact)]
        integrator: IntegratorSel,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Check the full/reduced frequency error against its a-priori bound.
    Bound {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Poles and zeros over a grid of D_eff and M_eff multipliers.
    Poles {
        #[arg(long, default_value_t = 0.5)]
        d_min: f64,
        #[arg(long, default_value_t = 2.0)]
        d_max: f64,
        #[arg(long, default_value_t = 5)]
        d_count: usize,
        #[arg(long, default_value_t = 0.5)]
        m_min: f64,
        #[arg(long, default_value_t = 2.0)]
        m_max: f64,
        #[arg(long, default_value_t = 5)]
        m_count: usize,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// Bus whose load steps up. Defaults to the lowest-id bus carrying load.
    #[arg(long)]
    bus: Option<BusId>,
    /// Step size in MW (converted on the system base).
    #[arg(long, conflicts_with = "dp_pu", required_unless_present = "dp_pu")]
    dp_mw: Option<f64>,
    /// Step size in pu.
    #[arg(long)]
    dp_pu: Option<f64>,
    #[arg(long, default_value_t = StepScenario::DEFAULT_HORIZON)]
    horizon: f64,
    /// Output sample step. Defaults to min(τ)/20.
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelSel {
    Full,
    Reduced,
    Nonlinear,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum IntegratorSel {
    Exact,
    Rk4,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let system = match &cli.system {
        Some(path) => SystemDescription::load(path)?,
        None => SystemDescription::four_bus(),
    };
    match cli.command {
        Command::Reduce { trace_csv } => cmd_reduce(&system, trace_csv.as_deref()),
        Command::Design { rreg, zeta, omega_n, out_dir } => {
            let transient = match (zeta, omega_n) {
                (Some(z), None) => TransientTarget::Zeta(z),
                (None, Some(w)) => TransientTarget::OmegaN(w),
                _ => return Err(Error::InvalidArgument("give exactly one of --zeta, --omega-n".into())),
            };
            cmd_design(&system, DesignTargets { r_reg: rreg, transient }, out_dir.as_deref())
        }
        Command::Simulate { scenario, model, integrator, out_dir } => {
            let integrator = match integrator {
                IntegratorSel::Exact => Integrator::Exact,
                IntegratorSel::Rk4 => Integrator::Rk4,
            };
            cmd_simulate(&system, &scenario.resolve(&system)?, model, integrator, &out_dir)
        }
        Command::Bound { scenario, out_dir } => cmd_bound(&system, &scenario.resolve(&system)?, &out_dir),
        Command::Poles { d_min, d_max, d_count, m_min, m_max, m_count, out_dir } => {
            if d_count == 0 || m_count == 0 {
                return Err(Error::InvalidArgument("sweep counts must be >= 1".into()));
            }
            if [d_min, d_max, m_min, m_max].iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::InvalidArgument("sweep multipliers must be finite and > 0".into()));
            }
            cmd_poles(&system, &linspace(d_min, d_max, d_count), &linspace(m_min, m_max, m_count), &out_dir)
        }
    }
}

impl ScenarioArgs {
    fn resolve(&self, system: &SystemDescription) -> Result<StepScenario> {
        let bus = match self.bus {
            Some(b) => b,
            None => system
                .buses
                .iter()
                .filter(|b| b.injection < 0.0)
                .map(|b| b.id)
                .min()
                .unwrap_or_else(|| system.reference_bus_id()),
        };
        if system.bus(bus).is_none() {
            return Err(Error::InvalidArgument(format!("bus {bus} does not exist")));
        }
        let delta_p = match (self.dp_mw, self.dp_pu) {
            (Some(mw), None) => system.mw_to_pu(mw),
            (None, Some(pu)) => pu,
            _ => return Err(Error::InvalidArgument("give exactly one of --dp-mw, --dp-pu".into())),
        };
        let scenario = StepScenario {
            bus,
            delta_p,
            horizon: self.horizon,
            dt: self.dt.unwrap_or_else(|| system.min_turbine_tc() / 20.0),
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn cmd_reduce(system: &SystemDescription, trace_csv: Option<&Path>) -> Result<()> {
    let red = reduce(system)?;
    print!("{}", red.report());
    if let Some(path) = trace_csv {
        fs::write(path, red.tau.trace_csv())?;
        println!("search trace written to {}", path.display());
    }
    Ok(())
}

fn cmd_design(system: &SystemDescription, targets: DesignTargets, out_dir: Option<&Path>) -> Result<()> {
    let tau_bar = reduce(system)?.tau.tau_bar;
    let result = design(system, targets, tau_bar)?;
    let report = result.report();
    print!("{report}");
    if let Some(dir) = out_dir {
        ensure_dir(dir)?;
        fs::write(dir.join("design_report.txt"), &report)?;
        result.apply(system).save(dir.join("system_designed.toml"))?;
    }
    Ok(())
}

fn with_model<T>(kind: &str, r: Result<T>) -> Result<T> {
    r.inspect_err(|_| eprintln!("{kind} model failed"))
}

fn cmd_simulate(
    system: &SystemDescription,
    scenario: &StepScenario,
    model: ModelSel,
    integrator: Integrator,
    out_dir: &Path,
) -> Result<()> {
    let want = |m: ModelSel| model == ModelSel::All || model == m;
    let mut runs: Vec<(&str, Trajectory)> = Vec::new();
    if want(ModelSel::Full) || want(ModelSel::Reduced) {
        let red = reduce(system)?;
        let (full, reduced) = with_model("linear", simulate_pair(system, &red, scenario, integrator))?;
        if want(ModelSel::Full) {
            runs.push(("full", full));
        }
        if want(ModelSel::Reduced) {
            runs.push(("reduced", reduced));
        }
    }
    if want(ModelSel::Nonlinear) {
        let angles = with_model("nonlinear", solve_equilibrium(system))?;
        runs.push(("nonlinear", with_model("nonlinear", simulate_nonlinear(system, &angles, scenario))?));
    }

    ensure_dir(out_dir)?;
    let mut report = String::new();
    let _ = writeln!(report, "scenario  bus {} dp {:.10e} pu horizon {} s dt {} s", scenario.bus, scenario.delta_p, scenario.horizon, scenario.dt);
    for (name, traj) in &runs {
        let path = out_dir.join(format!("{name}.csv"));
        traj.write_csv(&path)?;
        match step_metrics(traj, traj.freq_index) {
            Ok(m) => {
                let _ = writeln!(
                    report,
                    "{name:<10} nadir {:.10e} rad/s at {:.4} s, steady state {:.10e} rad/s, overshoot {:.6}, settling (2%) {:.4} s",
                    m.nadir, m.nadir_time, m.steady_state, m.overshoot, m.settling_time_2pct
                );
            }
            Err(Error::NotSettled { variation, tolerance }) => {
                let _ = writeln!(
                    report,
                    "{name:<10} not settled: final-window variation {variation:.3e} > {tolerance:.1e}; extend --horizon"
                );
            }
            Err(e) => return Err(e),
        }
    }

    if model == ModelSel::All {
        let freq: Vec<(&str, Vec<f64>)> = runs.iter().map(|(n, t)| (*n, t.frequency())).collect();
        let times = &runs[0].1.times;
        if runs.iter().any(|(_, t)| !t.same_grid(&runs[0].1)) {
            return Err(Error::GridMismatch("model outputs are on different grids".into()));
        }
        let pairs = [(1, 0), (1, 2), (0, 2)];
        let mut csv = String::from("time");
        for (i, j) in pairs {
            let _ = write!(csv, ",{}_minus_{}", freq[i].0, freq[j].0);
        }
        csv.push('\n');
        for (k, t) in times.iter().enumerate() {
            let _ = write!(csv, "{t:.16e}");
            for (i, j) in pairs {
                let _ = write!(csv, ",{:.16e}", freq[i].1[k] - freq[j].1[k]);
            }
            csv.push('\n');
        }
        fs::write(out_dir.join("frequency_error.csv"), csv)?;
        for (i, j) in pairs {
            let worst = freq[i].1.iter().zip(&freq[j].1).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let _ = writeln!(report, "max |{} - {}| = {worst:.6e} rad/s", freq[i].0, freq[j].0);
        }
    }
    fs::write(out_dir.join("metrics.txt"), &report)?;
    print!("{report}");
    Ok(())
}

fn cmd_bound(system: &SystemDescription, scenario: &StepScenario, out_dir: &Path) -> Result<()> {
    let red = reduce(system)?;
    let report = bound_check(system, &red, scenario)?;
    ensure_dir(out_dir)?;
    fs::write(out_dir.join("bound.csv"), report.to_csv())?;
    println!("||E||_2     {:.10e}", report.e_norm);
    println!("k           {:.10e}", report.envelope.k);
    println!("lambda      {:.10e}", report.envelope.lambda);
    println!("max err/bnd {:.6e}", report.max_ratio());
    println!("violations  {}", report.violations());
    println!("{}", if report.satisfied { "SATISFIED" } else { "VIOLATED" });
    Ok(())
}

fn pole_rows(csv: &mut String, prefix: &str, model: &str, pz: &PoleZero) {
    for p in &pz.poles {
        let _ = writeln!(csv, "{prefix},{model},pole,{:.16e},{:.16e}", p.re, p.im);
    }
    for z in &pz.zeros {
        let _ = writeln!(csv, "{prefix},{model},zero,{:.16e},{:.16e}", z.re, z.im);
    }
}

fn cmd_poles(system: &SystemDescription, d_mults: &[f64], m_mults: &[f64], out_dir: &Path) -> Result<()> {
    let red: Reduction = reduce(system)?;
    let sweep = pole_sweep(system, red.tau.tau_bar, d_mults, m_mults)?;
    let mut csv = String::from("d_mult,m_mult,d_eff,m_eff,model,kind,re,im\n");
    println!("tau_bar {:.10} s, reduced zero -1/tau_bar = {:.10e}", red.tau.tau_bar, -1.0 / red.tau.tau_bar);
    println!("{:>8} {:>8} {:>26} {:>26} {:>10}", "d_mult", "m_mult", "full pair", "reduced pair", "rel dev");
    for pt in &sweep {
        let prefix = format!("{:.16e},{:.16e},{:.16e},{:.16e}", pt.d_mult, pt.m_mult, pt.d_eff, pt.m_eff);
        for (model, res) in [("full", &pt.full), ("reduced", &pt.reduced)] {
            match res {
                Ok(pz) => pole_rows(&mut csv, &prefix, model, pz),
                Err(e) => eprintln!("skipping {model} at d_mult {} m_mult {}: {e}", pt.d_mult, pt.m_mult),
            }
        }
        let pair = |r: &Result<PoleZero>| r.as_ref().ok().and_then(|pz| pz.upper_complex_poles().first().copied());
        let fmt = |p: Option<C64>| match p {
            Some(c) => format!("{:.5} +/- {:.5}i", c.re, c.im),
            None => "-".to_string(),
        };
        let (f, r) = (pair(&pt.full), pair(&pt.reduced));
        let dev = match (f, r) {
            (Some(f), Some(r)) => format!("{:.4}", ((r.re - f.re) / f.re).abs().max(((r.im - f.im) / f.im).abs())),
            _ => "-".to_string(),
        };
        println!("{:>8.4} {:>8.4} {:>26} {:>26} {:>10}", pt.d_mult, pt.m_mult, fmt(f), fmt(r), dev);
    }
    ensure_dir(out_dir)?;
    fs::write(out_dir.join("poles.csv"), csv)?;
    Ok(())
}
