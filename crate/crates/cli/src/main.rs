use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use biped5_core::control::{ControllerGains, TorqueLimits};
use biped5_core::gait::{solve_gait, GaitSolution, GaitSpec};
use biped5_core::io::{
    desired_table, format_value, frame_indices, postures_from_table, render_svg,
    write_trajectory_csv, CsvTable, RenderOptions,
};
use biped5_core::simulation::{simulate_closed_loop, Method, SimConfig};
use biped5_core::validation::{offset_start, run_validation, GravityFault, ValidationConfig};
use biped5_core::{default_params, load_params, Backend, Joints, RobotParams};

#[derive(Parser)]
#[command(
    name = "biped5",
    version,
    about = "Five-link biped gait generation, tracking and validation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the desired joint trajectory for one single-support phase.
    Generate {
        #[command(flatten)]
        common: Common,
    },
    /// Track the desired trajectory with computed-torque control.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Run the self-check suite and print a report.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Scale gravity entry JOINT (1-5) by 1.01 to exercise the gravity gate.
        #[arg(long, value_name = "JOINT", hide = true)]
        corrupt_gravity: Option<usize>,
    },
    /// Draw superimposed stick figures from a trajectory CSV.
    Render {
        #[command(flatten)]
        common: Common,
        /// Trajectory CSV written by `generate` or `simulate`.
        #[arg(long, short)]
        input: PathBuf,
        /// Number of figures, spread uniformly over the rows.
        #[arg(long, default_value_t = 8)]
        frames: usize,
        /// Horizontal shift between successive figures (m).
        #[arg(long, default_value_t = 0.15)]
        stride: f64,
    },
}

#[derive(Args)]
struct Common {
    /// Parameter file (`link<i>.mass = ...`); built-in defaults otherwise.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Constant hip offset between swing thigh and stance leg (rad).
    #[arg(long, default_value_t = 0.3, allow_negative_numbers = true)]
    alpha: f64,
    /// Gait period T (s).
    #[arg(long, default_value_t = 1.0)]
    period: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    t0: f64,
    /// End of the window (s); `t0 + period` by default.
    #[arg(long, allow_negative_numbers = true)]
    tf: Option<f64>,
    /// Stance-ankle angle at t0 (rad); π/2 + 0.1 by default.
    #[arg(long)]
    theta1_start: Option<f64>,
    /// Stance-ankle angle at tf (rad); π/2 − 0.1 by default.
    #[arg(long)]
    theta1_end: Option<f64>,
    /// Proportional gain, one value or five comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "100")]
    kp: Vec<f64>,
    /// Derivative gain, one value or five comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "20")]
    kv: Vec<f64>,
    #[arg(long, value_enum, default_value_t = BackendArg::Printed)]
    backend: BackendArg,
    /// Output grid spacing (ms).
    #[arg(long, default_value_t = 1.0)]
    grid_ms: f64,
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Seed for randomised sampling.
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct SimArgs {
    /// Start exactly on the desired trajectory (the default).
    #[arg(long, conflicts_with = "offset")]
    start_on_trajectory: bool,
    /// Initial angle error added to every joint (rad).
    #[arg(long, allow_negative_numbers = true)]
    offset: Option<f64>,
    /// Model used by the controller; the plant model by default.
    #[arg(long, value_enum)]
    controller_backend: Option<BackendArg>,
    #[arg(long, value_enum, default_value_t = MethodArg::Rkf45)]
    method: MethodArg,
    /// RK4 step (ms).
    #[arg(long, default_value_t = 1.0)]
    dt_ms: f64,
    #[arg(long, default_value_t = 1e-9)]
    rtol: f64,
    #[arg(long, default_value_t = 1e-9)]
    atol: f64,
    /// Hold each torque for this long (ms) instead of updating continuously.
    #[arg(long)]
    control_period_ms: Option<f64>,
    /// Clamp every joint torque to ±LIMIT (N·m).
    #[arg(long, value_name = "LIMIT")]
    saturation: Option<f64>,
    /// Apply no torque at the stance ankle.
    #[arg(long)]
    zero_ankle_torque: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Printed,
    Oracle,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Printed => Backend::Printed,
            BackendArg::Oracle => Backend::Oracle,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Rkf45,
    Rk4,
}

impl Common {
    fn params(&self) -> Result<RobotParams> {
        match &self.params {
            None => Ok(default_params()),
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                load_params(&text).with_context(|| format!("in {}", path.display()))
            }
        }
    }

    fn spec(&self) -> GaitSpec {
        let d = GaitSpec::default();
        GaitSpec {
            alpha: self.alpha,
            period: self.period,
            t_start: self.t0,
            t_end: self.tf.unwrap_or(self.t0 + self.period),
            theta1_start: self.theta1_start.unwrap_or(d.theta1_start),
            theta1_end: self.theta1_end.unwrap_or(d.theta1_end),
            ..d
        }
    }

    fn gains(&self) -> Result<ControllerGains> {
        let expand = |name: &str, v: &[f64]| -> Result<Joints> {
            match v {
                [x] => Ok(Joints::repeat(*x)),
                _ if v.len() == 5 => Ok(Joints::from_column_slice(v)),
                _ => bail!("--{name} takes one value or five, got {}", v.len()),
            }
        };
        Ok(ControllerGains::new(
            expand("kp", &self.kp)?,
            expand("kv", &self.kv)?,
        )?)
    }

    fn grid(&self) -> Result<f64> {
        if !(self.grid_ms.is_finite() && self.grid_ms > 0.0) {
            bail!("--grid-ms must be > 0, got {}", self.grid_ms);
        }
        Ok(self.grid_ms * 1e-3)
    }

    fn solve(&self) -> Result<(RobotParams, GaitSolution)> {
        let params = self.params()?;
        let sol = solve_gait(&self.spec(), &params).context("gait generation failed")?;
        Ok((params, sol))
    }
}

fn print_coefficients(sol: &GaitSolution) {
    let r = &sol.reduced;
    for (key, v) in [
        ("M1", r.m1),
        ("H1", r.h1),
        ("K", r.k_const),
        ("M2", r.m2),
        ("C1", sol.c1),
        ("C2", sol.c2),
        ("C3", sol.c3),
        ("r1", sol.r1),
        ("r2", sol.r2),
        ("offset", sol.offset),
    ] {
        println!("{key}={}", format_value(v));
    }
}

fn out_path(common: &Common, default: &str) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn generate(common: &Common) -> Result<ExitCode> {
    let grid = common.grid()?;
    let (_, sol) = common.solve()?;
    print_coefficients(&sol);
    let path = out_path(common, "gait.csv");
    desired_table(&sol, grid)?.write_file(&path)?;
    println!("csv={}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn simulate(common: &Common, args: &SimArgs) -> Result<ExitCode> {
    let grid = common.grid()?;
    let gains = common.gains()?;
    let (params, sol) = common.solve()?;
    let cfg = SimConfig {
        dt: args.dt_ms * 1e-3,
        rel_tol: args.rtol,
        abs_tol: args.atol,
        backend: common.backend.into(),
        controller_backend: args.controller_backend.map(Into::into),
        method: match args.method {
            MethodArg::Rkf45 => Method::Rkf45,
            MethodArg::Rk4 => Method::Rk4,
        },
        control_period: args.control_period_ms.map(|ms| ms * 1e-3),
        limits: TorqueLimits {
            saturation: args.saturation,
            zero_stance_ankle: args.zero_ankle_torque,
        },
        ..SimConfig::default()
    };
    let offset = if args.start_on_trajectory {
        0.0
    } else {
        args.offset.unwrap_or(0.0)
    };
    let start = offset_start(&sol, offset)?;
    let traj =
        simulate_closed_loop(&params, &sol, &gains, &cfg, &start).context("simulation failed")?;

    let summary = traj.tracking_summary();
    for i in 0..5 {
        println!(
            "joint{}: max_abs_error={} final_error={}",
            i + 1,
            format_value(summary.max_abs_error[i]),
            format_value(summary.final_error[i])
        );
    }
    println!("max_abs_error={}", format_value(summary.overall_max()));
    println!("final_error={}", format_value(summary.final_error.amax()));
    println!("saturation_events={}", traj.saturation_events);

    let path = out_path(common, "simulation.csv");
    write_trajectory_csv(&traj, Some((grid, &sol)), &path)?;
    println!("csv={}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn validate(common: &Common, corrupt_gravity: Option<usize>) -> Result<ExitCode> {
    let params = common.params()?;
    let gravity_fault = match corrupt_gravity {
        None => None,
        Some(j @ 1..=5) => Some(GravityFault {
            joint: j - 1,
            scale: 1.01,
        }),
        Some(j) => bail!("--corrupt-gravity takes a joint in 1..=5, got {j}"),
    };
    let cfg = ValidationConfig {
        seed: common.seed,
        backend: common.backend.into(),
        gains: common.gains()?,
        gravity_fault,
        ..ValidationConfig::default()
    };
    let report = run_validation(&params, &common.spec(), &cfg).context("validation aborted")?;
    let text = report.to_text();
    print!("{text}");
    if let Some(path) = &common.out {
        write_text(path, &text)?;
    }
    Ok(if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn render(common: &Common, input: &Path, frames: usize, stride: f64) -> Result<ExitCode> {
    if frames == 0 {
        bail!("--frames must be at least 1");
    }
    let params = common.params()?;
    let table =
        CsvTable::read_file(input).with_context(|| format!("reading {}", input.display()))?;
    let postures = postures_from_table(&table)?;
    if postures.is_empty() {
        bail!("{} has no rows", input.display());
    }
    let picked: Vec<Joints> = frame_indices(postures.len(), frames)
        .into_iter()
        .map(|i| postures[i])
        .collect();
    let opts = RenderOptions {
        stride,
        ..RenderOptions::default()
    };
    let path = out_path(common, "walk.svg");
    write_text(&path, &render_svg(&picked, &params, &opts))?;
    println!("frames={}", picked.len());
    println!("svg={}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Generate { common } => generate(common),
        Command::Simulate { common, sim } => simulate(common, sim),
        Command::Validate {
            common,
            corrupt_gravity,
        } => validate(common, *corrupt_gravity),
        Command::Render {
            common,
            input,
            frames,
            stride,
        } => render(common, input, *frames, *stride),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
