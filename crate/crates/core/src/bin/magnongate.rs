//! Command-line front end. Reports go to stdout as JSON (CSV for tables),
//! warnings and errors to stderr as JSON lines.

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use magnongate::config::{load_config_for, MagnonInitConfig, RunConfig, SweepGrid};
use magnongate::error::{Error, Result};
use magnongate::model::GateKind;
use magnongate::output::{dynamics_csv, emit, sweep_csv, Format};
use magnongate::reports::{geometry_report, params_report, sw_report};
use magnongate::sweep::{find_optimum, run_dynamics, run_scenarios, run_sweep};

#[derive(Parser)]
#[command(name = "magnongate", version, about = "Magnon-mediated two-qubit gate simulator")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Gate to simulate; selects the device preset when the config has no gate key.
    #[arg(long, global = true, value_enum)]
    gate: Option<GateArg>,
    /// Derive couplings from the magnet (derived) or pin them to the reference values (direct).
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,
    /// Run seed, recorded in the CSV header (the gate pipeline itself is deterministic).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Fock sizes as q1,q2,m.
    #[arg(long, global = true, value_name = "A,B,C", value_parser = parse_dims)]
    dims: Option<[usize; 3]>,
    /// Initial magnon state.
    #[arg(long, global = true, value_enum)]
    magnon_init: Option<InitArg>,
    /// Geometrical factor I_x (1/m).
    #[arg(long, global = true, allow_hyphen_values = true)]
    i_x_per_m: Option<f64>,
    /// Effective gate coupling (rad/s).
    #[arg(long, global = true)]
    coupling_rad_s: Option<f64>,
    /// Evaluate sweep points one after another.
    #[arg(long, global = true)]
    serial: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum GateArg {
    Iswap,
    SqrtIswap,
    Cz,
    Icnot,
}

impl From<GateArg> for GateKind {
    fn from(g: GateArg) -> Self {
        match g {
            GateArg::Iswap => GateKind::Iswap,
            GateArg::SqrtIswap => GateKind::SqrtIswap,
            GateArg::Cz => GateKind::Cz,
            GateArg::Icnot => GateKind::Icnot,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Derived,
    Direct,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Vacuum,
    Thermal,
}

#[derive(Subcommand)]
enum Command {
    /// Device parameters and the derived working point.
    Params {
        /// Operating ratio ω_m/ω_q.
        #[arg(long)]
        ratio: Option<f64>,
    },
    /// Geometrical factors, dipole and sphere checks, critical field.
    Geometry,
    /// Fidelity sweep over ω_m/ω_q.
    Sweep {
        /// Explicit ratios instead of the configured grid.
        #[arg(long, value_delimiter = ',')]
        ratios: Option<Vec<f64>>,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// SVG plot destination.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Record wall times in the CSV.
        #[arg(long)]
        wall_time: bool,
    },
    /// Time traces of the populations for one input state.
    Dynamics {
        /// Input label such as `|10>` or `|1+>`.
        #[arg(long)]
        input: Option<String>,
        #[arg(long)]
        ratio: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        /// End time (s); the gate time when absent.
        #[arg(long)]
        t_max: Option<f64>,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// √iSWAP, vacuum and thermal CZ, and the decoupling check.
    Scenarios,
    /// Generator, effective Hamiltonian and dynamics checks of the transformation.
    VerifySw {
        #[arg(long)]
        ratio: Option<f64>,
    },
}

fn parse_dims(s: &str) -> std::result::Result<[usize; 3], String> {
    let parts = s.split(',').map(|p| p.trim().parse::<usize>()).collect::<std::result::Result<Vec<_>, _>>();
    match parts {
        Ok(v) if v.len() == 3 => Ok([v[0], v[1], v[2]]),
        _ => Err(format!("expected three Fock sizes A,B,C, got `{s}`")),
    }
}

fn report(level: &str, kind: &str, message: &str) {
    let line = json!({ "level": level, "kind": kind, "message": message });
    let _ = writeln!(std::io::stderr(), "{line}");
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.into()))?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}")?;
    Ok(())
}

fn write_or_print(path: Option<&PathBuf>, body: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, body)?,
        None => std::io::stdout().lock().write_all(body.as_bytes())?,
    }
    Ok(())
}

fn build_config(g: &GlobalArgs) -> Result<RunConfig> {
    let gate = g.gate.map(GateKind::from);
    let mut cfg = match &g.config {
        Some(path) => load_config_for(path, gate)?,
        None => RunConfig::defaults(gate.unwrap_or(GateKind::Iswap)),
    };
    if let Some(m) = g.mode {
        cfg.direct = matches!(m, ModeArg::Direct);
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(d) = g.dims {
        cfg.dims = d;
    }
    if let Some(i) = g.magnon_init {
        cfg.magnon_init = match i {
            InitArg::Vacuum => MagnonInitConfig::Vacuum,
            InitArg::Thermal => MagnonInitConfig::Thermal(None),
        };
    }
    if let Some(i_x) = g.i_x_per_m {
        cfg.overrides.i_x = Some(i_x);
    }
    if let Some(c) = g.coupling_rad_s {
        cfg.overrides.coupling = Some(c);
    }
    if g.serial {
        cfg.parallel = false;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = build_config(&cli.global)?;
    match &cli.command {
        Command::Params { ratio } | Command::VerifySw { ratio } => {
            if ratio.is_some() {
                cfg.dynamics.ratio = *ratio;
            }
        }
        Command::Sweep { ratios, wall_time, .. } => {
            if let Some(r) = ratios {
                cfg.sweep = SweepGrid::List(r.clone());
            }
            cfg.output.wall_time |= *wall_time;
        }
        Command::Dynamics { input, ratio, points, t_max, .. } => {
            if let Some(i) = input {
                cfg.dynamics.input = i.clone();
            }
            if ratio.is_some() {
                cfg.dynamics.ratio = *ratio;
            }
            if let Some(p) = points {
                cfg.dynamics.points = *p;
            }
            if t_max.is_some() {
                cfg.dynamics.t_max = *t_max;
            }
        }
        Command::Geometry | Command::Scenarios => {}
    }
    cfg.validate()?;
    for w in cfg.lowered_dims() {
        report("warning", "dims", &w);
    }

    match cli.command {
        Command::Params { .. } => print_json(&params_report(&cfg)?),
        Command::Geometry => {
            let device = cfg.resolved_device()?;
            print_json(&geometry_report(&device.magnet, device.b_c)?)
        }
        Command::Sweep { out, svg, .. } => {
            let rows = run_sweep(&cfg)?;
            for r in rows.iter().filter(|r| !r.is_ok()) {
                if let Some(e) = &r.error {
                    report("warning", &e.kind, &format!("omega_m_ratio={}: {}", r.omega_m_ratio, e.message));
                }
            }
            let csv_path = out.or_else(|| cfg.output.csv.clone());
            let svg_path = svg.or_else(|| cfg.output.svg.clone());
            if let Some(p) = &svg_path {
                emit(&rows, &cfg, Format::Svg, p)?;
            }
            match &csv_path {
                Some(p) => {
                    emit(&rows, &cfg, Format::Csv, p)?;
                    let best = find_optimum(&rows)?;
                    print_json(&json!({
                        "gate": cfg.gate,
                        "points": rows.len(),
                        "failed": rows.iter().filter(|r| !r.is_ok()).count(),
                        "optimum": best,
                        "csv": p,
                        "svg": svg_path,
                    }))
                }
                None => write_or_print(None, &sweep_csv(&rows, &cfg)),
            }
        }
        Command::Dynamics { out, .. } => {
            let input = cfg.dynamics.input.clone();
            let table = run_dynamics(&cfg, &input, None)?;
            write_or_print(out.as_ref(), &dynamics_csv(&table))
        }
        Command::Scenarios => print_json(&run_scenarios(&cfg)?),
        Command::VerifySw { .. } => print_json(&sw_report(&cfg)?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.render().to_string();
            let message = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            report("error", "usage", message.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        // A closed stdout reader (e.g. `| head`) is not a failure.
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            report("error", e.kind(), &e.to_string());
            match e {
                Error::Config { .. } | Error::Parse { .. } | Error::InvalidArgument(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
