use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ccmpc::config::{ConfigFile, Problem, ReplayFile};
use ccmpc::extraction::DEFAULT_RANK_TOL;
use ccmpc::mpc::{
    bound_probability, bound_steps, build_controller, mc_validate, phat_limit, simulate, step,
    ControllerOptions, DisturbanceSource, Terminal, DISTURBANCE_STREAM,
};
use ccmpc::relaxation::build_relaxation;
use ccmpc::sdp::sdpa::write_sdpa;
use ccmpc::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_VALIDATION: u8 = 3;

/// Chance-constrained MPC for polynomial systems.
///
/// Log verbosity is read from CCMPC_LOG (error, warn, info, debug, trace).
#[derive(Parser, Debug)]
#[command(name = "ccmpc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Steps to the epsilon level set and the probability bound.
    Bound {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        p0: Option<f64>,
        /// Use this step count instead of deriving it from epsilon and p0.
        #[arg(long)]
        khat: Option<u64>,
    },
    /// Solve one step and print the extracted input.
    Plan {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        state: String,
        #[arg(long)]
        order: Option<u32>,
        /// Write the step plan as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Closed-loop run, or replay of recorded inputs and disturbances.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
        #[arg(long)]
        seed: Option<u64>,
        /// JSON trace; a CSV twin is written next to it unless --csv is given.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        replay: Option<PathBuf>,
        #[arg(long)]
        max_steps: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        order: Option<u32>,
        #[arg(long)]
        strict: bool,
    },
    /// Monte Carlo estimate of the contraction probability for one input.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        state: String,
        #[arg(long, allow_hyphen_values = true)]
        input: String,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        strict: bool,
    },
    /// Describe the relaxation built at a state; optionally export it.
    InspectMoments {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        state: String,
        #[arg(long)]
        order: Option<u32>,
        /// Write the SDP in SDPA sparse format.
        #[arg(long)]
        sdpa: Option<PathBuf>,
    },
}

/// A failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Solver { .. } => EXIT_SOLVER,
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn parse_vector(flag: &str, text: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Failure::usage(format!("--{flag}: cannot read {s:?} as a number")))
        })
        .collect()
}

fn load(path: &Path, order: Option<u32>) -> Result<Problem, Failure> {
    let mut cfg = ConfigFile::load(path)?;
    if let Some(r) = order {
        cfg.parameters.r = r;
    }
    Ok(cfg.build()?)
}

fn check_state(problem: &Problem, flag: &str, x: &[f64]) -> CmdResult {
    let n = problem.spec.model.n_x;
    if x.len() != n {
        return Err(Failure::usage(format!(
            "--{flag} needs {n} entries, got {}",
            x.len()
        )));
    }
    Ok(())
}

fn bound(
    alpha: f64,
    beta: f64,
    epsilon: Option<f64>,
    p0: Option<f64>,
    khat: Option<u64>,
) -> CmdResult {
    let khat = match (khat, epsilon, p0) {
        (Some(k), _, _) => k,
        (None, Some(e), Some(p)) => bound_steps(e, alpha, p)?,
        _ => return Err(Failure::usage("give --epsilon and --p0, or --khat")),
    };
    let phat = bound_probability(alpha, beta, khat)?;
    let limit = phat_limit(alpha, beta)?;
    println!("khat  {khat}");
    println!("phat  {phat:.6}");
    println!("limit {limit:.6}");
    Ok(())
}

fn plan(config: &Path, state: &str, order: Option<u32>, json: Option<&Path>) -> CmdResult {
    let problem = load(config, order)?;
    let x = parse_vector("state", state)?;
    check_state(&problem, "state", &x)?;
    let distance = problem.spec.distance(&x)?;
    if distance <= 0.0 {
        println!("target reached (P_D = {distance:.6}); nothing to solve");
        return Ok(());
    }
    let plan = step(
        &problem.spec,
        &x,
        &problem.relaxation,
        &problem.solver,
        DEFAULT_RANK_TOL,
    )?;
    let d = plan
        .diagnostics
        .as_ref()
        .expect("solver plans carry diagnostics");
    println!("input       {:?}", plan.input);
    println!("sequence    {:?}", d.planned_inputs);
    println!("objective   {:.6}", d.objective);
    println!("trace       {:.6}", d.trace);
    println!("rank ratio  {:.3e}", d.rank_ratio);
    println!("certified   {}", if d.certified { "yes" } else { "no" });
    println!("required    {:.6}", d.required_probability);
    println!("iterations  {}", d.iterations);
    if let Some(path) = json {
        let text = serde_json::to_string_pretty(d).map_err(Error::from)?;
        std::fs::write(path, text).map_err(Error::from)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_simulation(
    config: &Path,
    x0: &str,
    seed: Option<u64>,
    out: &Path,
    csv: Option<&Path>,
    replay: Option<&Path>,
    max_steps: Option<usize>,
    samples: Option<usize>,
    order: Option<u32>,
    strict: bool,
) -> CmdResult {
    let mut problem = load(config, order)?;
    let x0 = parse_vector("x0", x0)?;
    check_state(&problem, "x0", &x0)?;
    if let Some(s) = seed {
        problem.run.seed = s;
    }
    if let Some(m) = max_steps {
        if m == 0 {
            return Err(Failure::usage("--max-steps must be at least 1"));
        }
        problem.run.max_steps = m;
    }
    if let Some(n) = samples {
        problem.run.samples = n;
    }
    problem.run.strict |= strict;

    let mut opts = ControllerOptions {
        relaxation: problem.relaxation.clone(),
        solver: problem.solver.clone(),
        ..ControllerOptions::default()
    };
    let (kind, source) = match replay {
        Some(path) => {
            let r = ReplayFile::load(path)?;
            opts.inputs = r.inputs;
            ("replay", DisturbanceSource::Recorded(r.disturbances))
        }
        None => ("moment-sdp", DisturbanceSource::Seeded),
    };
    let controller = build_controller(kind, &opts)?;
    let log = simulate(
        &problem.spec,
        &x0,
        &problem.run,
        controller.as_ref(),
        &source,
        &problem.relaxation,
    )?;
    log.save_json(out)?;
    let csv_path = csv
        .map(Path::to_path_buf)
        .unwrap_or_else(|| out.with_extension("csv"));
    log.save_csv(&csv_path)?;

    for s in &log.steps {
        let est = s
            .estimate
            .map(|e| format!("  p {:.4} +- {:.4}", e.probability, e.halfwidth))
            .unwrap_or_default();
        println!(
            "k {:>2}  x {:?}  u {:?}  w {:?}  P_D {:.4}  req {:.4}{est}",
            s.k, s.state, s.input, s.disturbance, s.distance, s.required_probability
        );
    }
    println!("final {:?}  terminal {:?}", log.final_state, log.terminal);
    if let Some(b) = log.bound {
        println!(
            "bound khat {}  phat {:.6}  limit {:.6}",
            b.khat, b.phat, b.limit
        );
    }
    match log.terminal {
        Terminal::SolverFailure { status } => Err(Failure {
            code: EXIT_SOLVER,
            message: format!(
                "solver returned {status:?}; trace written to {}",
                out.display()
            ),
        }),
        Terminal::ValidationFailure { step } => Err(Failure {
            code: EXIT_VALIDATION,
            message: format!("step {step}: estimated probability below the requirement"),
        }),
        _ => Ok(()),
    }
}

fn validate(
    config: &Path,
    state: &str,
    input: &str,
    samples: usize,
    seed: u64,
    strict: bool,
) -> CmdResult {
    let problem = load(config, None)?;
    let x = parse_vector("state", state)?;
    check_state(&problem, "state", &x)?;
    let u = parse_vector("input", input)?;
    let required = ccmpc::dynamics::required_probability(&problem.spec, &x)?;
    let est = mc_validate(
        &problem.spec,
        &x,
        &u,
        samples,
        seed,
        DISTURBANCE_STREAM + 1,
        problem.relaxation.sign,
    )?;
    println!("probability {:.4} +- {:.4}", est.probability, est.halfwidth);
    println!("required    {required:.4}");
    if strict && est.probability < required - 3.0 * est.halfwidth {
        return Err(Failure {
            code: EXIT_VALIDATION,
            message: "estimate is more than three halfwidths below the requirement".into(),
        });
    }
    Ok(())
}

fn inspect(config: &Path, state: &str, order: Option<u32>, sdpa: Option<&Path>) -> CmdResult {
    let problem = load(config, order)?;
    let x = parse_vector("state", state)?;
    check_state(&problem, "state", &x)?;
    let relax = build_relaxation(&problem.spec, &x, &problem.relaxation)?;
    let sdp = &relax.problem;
    println!(
        "order {}  required probability {:.6}",
        relax.order, relax.required_probability
    );
    println!("variables {}", sdp.num_vars);
    for s in &sdp.segments {
        println!(
            "segment {:<4} offset {:>5}  length {:>5}  over {} variables",
            s.name,
            s.offset,
            s.len(),
            s.num_vars
        );
    }
    for b in &sdp.blocks {
        println!("block {:<32} side {}", b.name, b.dim());
    }
    println!(
        "equalities {}  inequalities {}",
        sdp.equalities.len(),
        sdp.inequalities.len()
    );
    if let Some(path) = sdpa {
        std::fs::write(path, write_sdpa(sdp)).map_err(Error::from)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CCMPC_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Bound {
            alpha,
            beta,
            epsilon,
            p0,
            khat,
        } => bound(alpha, beta, epsilon, p0, khat),
        Command::Plan {
            config,
            state,
            order,
            json,
        } => plan(&config, &state, order, json.as_deref()),
        Command::Simulate {
            config,
            x0,
            seed,
            out,
            csv,
            replay,
            max_steps,
            samples,
            order,
            strict,
        } => run_simulation(
            &config,
            &x0,
            seed,
            &out,
            csv.as_deref(),
            replay.as_deref(),
            max_steps,
            samples,
            order,
            strict,
        ),
        Command::Validate {
            config,
            state,
            input,
            samples,
            seed,
            strict,
        } => validate(&config, &state, &input, samples, seed, strict),
        Command::InspectMoments {
            config,
            state,
            order,
            sdpa,
        } => inspect(&config, &state, order, sdpa.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
