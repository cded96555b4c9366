//! Batch front end: parses a run configuration, dispatches the computation,
//! and emits a machine-readable report.
//!
//! Exit codes: 0 success, 1 numerical failure (tolerance breach in a verify
//! command, or a module domain error, printed verbatim), 2 configuration
//! error. Identical config bytes and seed produce byte-identical reports.

mod config;
mod report;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use config::{parse_config, Command, RawConfig};
use report::Json;
use run::{execute, RunError};

const HELP: &str = "phaselab - geometric-phase laboratory for integrable Hamiltonian families

USAGE:
    phaselab <COMMAND> --config <PATH> [--out <PATH>] [--seed <N>] [--workers <N>]

COMMANDS:
    hannay           Hannay angle of a parameter loop (optional slow-drive oracle)
    berry            Berry phase of lifted eigenstates over a loop
    aa-phase         Aharonov-Anandan phase of a Koopman evolution loop
    verify-relation  Hannay vs Berry relation residuals; exit 1 on breach
    koopman-check    unitarity, group law, composition-operator cross-check
    liouville-check  Monte Carlo Liouville-measure drift check
    resonance        integer-resonance scan of a frequency vector

OPTIONS:
    --config <PATH>   JSON run configuration (required)
    --out <PATH>      report destination (default: phaselab-<command>.json in
                      the current directory, or in $PHASELAB_OUT_DIR when set)
    --seed <N>        64-bit seed override for randomized checks
    --workers <N>     scheduling hint; report bytes are independent of it
    -h, --help        this text

The report is a JSON document with sections schema_version, command, config,
results, oracle (optional), convergence (optional), timing, status. Floats
carry 17 significant digits and round-trip exactly; the timing section holds
deterministic work counters, never wall-clock values.
";

const SCHEMA_VERSION: &str = "1";

struct Cli {
    command: Command,
    config_path: PathBuf,
    out: Option<PathBuf>,
    seed: Option<u64>,
    workers: usize,
}

fn parse_args(args: &[String]) -> Result<Option<Cli>, String> {
    if args.is_empty() || args.iter().any(|a| a == "--help" || a == "-h" || a == "help") {
        return Ok(None);
    }
    let command = Command::parse(&args[0]).ok_or_else(|| {
        format!(
            "unknown command `{}`; expected one of {}",
            args[0],
            Command::ALL.map(|c| c.name()).join(", ")
        )
    })?;
    let mut config_path = None;
    let mut out = None;
    let mut seed = None;
    let mut workers = 1usize;
    let mut i = 1;
    while i < args.len() {
        let flag = &args[i];
        let mut take_value = || -> Result<&String, String> {
            i += 1;
            args.get(i).ok_or_else(|| format!("flag `{flag}` needs a value"))
        };
        match flag.as_str() {
            "--config" => config_path = Some(PathBuf::from(take_value()?)),
            "--out" => out = Some(PathBuf::from(take_value()?)),
            "--seed" => {
                seed = Some(
                    take_value()?
                        .parse::<u64>()
                        .map_err(|e| format!("flag `--seed`: {e}"))?,
                )
            }
            "--workers" => {
                workers = take_value()?
                    .parse::<usize>()
                    .map_err(|e| format!("flag `--workers`: {e}"))?;
                if workers == 0 {
                    return Err("flag `--workers` must be at least 1".into());
                }
            }
            other => return Err(format!("unknown flag `{other}`")),
        }
        i += 1;
    }
    let config_path = config_path.ok_or("flag `--config <PATH>` is required")?;
    Ok(Some(Cli { command, config_path, out, seed, workers }))
}

fn config_echo(command: Command, raw: &RawConfig, seed: u64, workers: usize) -> Json {
    let mut echo = Json::object();
    echo.push("command", Json::Str(command.name().into()));
    if let Some(f) = &raw.family {
        echo.push(
            "family",
            Json::Str(
                match f {
                    config::FamilySpec::Oscillator => "oscillator",
                    config::FamilySpec::ActionQuadratic => "action-quadratic",
                }
                .into(),
            ),
        );
    }
    if let Some(mu) = &raw.mu {
        echo.push("mu", Json::floats(mu));
    }
    if let Some(x0) = &raw.x0 {
        echo.push("x0", Json::floats(x0));
    }
    if let Some(spec) = &raw.loop_spec {
        let mut l = Json::object();
        match spec {
            config::LoopSpec::Constant { at } => {
                l.push("kind", Json::Str("constant".into()));
                l.push("at", Json::floats(at));
            }
            config::LoopSpec::Circle { center, radius, plane } => {
                l.push("kind", Json::Str("circle".into()));
                l.push("center", Json::floats(center));
                l.push("radius", Json::Float(*radius));
                l.push("plane", Json::ints(&[plane.0 as i64, plane.1 as i64]));
            }
            config::LoopSpec::Polyline { vertices } => {
                l.push("kind", Json::Str("polyline".into()));
                l.push(
                    "vertices",
                    Json::Array(vertices.iter().map(|v| Json::floats(v)).collect()),
                );
            }
        }
        l.push(
            "orientation",
            Json::Str(raw.orientation.clone().unwrap_or_else(|| "forward".into())),
        );
        if let Some(turns) = raw.turns {
            l.push("turns", Json::UInt(turns as u64));
        }
        echo.push("loop", l);
    }
    match command {
        Command::Hannay | Command::Berry | Command::VerifyRelation => {
            echo.push("segments", Json::UInt(config::segments(raw) as u64));
            echo.push("quadrature", Json::UInt(config::quadrature(raw) as u64));
        }
        _ => {}
    }
    if let Some(modes) = &raw.modes {
        echo.push("modes", Json::Array(modes.iter().map(|m| Json::ints(m)).collect()));
    }
    if let Some(eps) = &raw.epsilons {
        echo.push("epsilons", Json::floats(eps));
        echo.push("phi0_samples", Json::UInt(raw.phi0_samples.unwrap_or(8) as u64));
    }
    if let Some(omega) = &raw.omega {
        echo.push("omega", Json::floats(omega));
    }
    if let Some(n_max) = raw.n_max {
        echo.push("n_max", Json::Int(n_max));
    }
    if let Some(t_loop) = raw.t_loop {
        echo.push("t_loop", Json::Float(t_loop));
    }
    if let Some(steps) = raw.steps {
        echo.push("steps", Json::UInt(steps as u64));
    }
    if let Some(k_max) = raw.k_max {
        echo.push("k_max", Json::Int(k_max));
    }
    if let Some(tol) = raw.tol {
        echo.push("tol", Json::Float(tol));
    }
    echo.push("seed", Json::UInt(seed));
    echo.push("workers", Json::UInt(workers as u64));
    echo
}

fn out_path(cli: &Cli, raw: &RawConfig) -> PathBuf {
    if let Some(p) = &cli.out {
        return p.clone();
    }
    if let Some(p) = &raw.out {
        return PathBuf::from(p);
    }
    let dir = std::env::var_os("PHASELAB_OUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    dir.join(format!("phaselab-{}.json", cli.command.name()))
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cli = match parse_args(&args) {
        Ok(Some(cli)) => cli,
        Ok(None) => {
            print!("{HELP}");
            return ExitCode::SUCCESS;
        }
        Err(msg) => {
            eprintln!("config error: {msg}");
            eprintln!("run `phaselab --help` for usage");
            return ExitCode::from(2);
        }
    };

    let config_text = match std::fs::read_to_string(&cli.config_path) {
        Ok(text) => text,
        Err(e) => {
            eprintln!("config error: cannot read `{}`: {e}", cli.config_path.display());
            return ExitCode::from(2);
        }
    };
    let raw = match parse_config(&config_text) {
        Ok(raw) => raw,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let seed = cli.seed.or(raw.seed).unwrap_or(42);

    let outcome = match execute(cli.command, &raw, seed) {
        Ok(outcome) => outcome,
        Err(RunError::Config(e)) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
        Err(RunError::Module(e)) => {
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };

    let status = if outcome.pass { "ok" } else { "tolerance-breach" };
    let mut doc = Json::object();
    doc.push("schema_version", Json::Str(SCHEMA_VERSION.into()));
    doc.push("command", Json::Str(cli.command.name().into()));
    doc.push("config", config_echo(cli.command, &raw, seed, cli.workers));
    doc.push("results", outcome.results);
    if let Some(oracle) = outcome.oracle {
        doc.push("oracle", oracle);
    }
    if let Some(convergence) = outcome.convergence {
        doc.push("convergence", convergence);
    }
    let mut timing = Json::object();
    timing.push("deterministic", Json::Bool(true));
    timing.push("work", outcome.work);
    doc.push("timing", timing);
    doc.push("status", Json::Str(status.into()));

    let path = out_path(&cli, &raw);
    if let Err(e) = std::fs::write(&path, doc.render()) {
        eprintln!("cannot write report `{}`: {e}", path.display());
        return ExitCode::from(1);
    }
    for (suffix, csv) in &outcome.tables {
        let table_path = path.with_extension(format!("{suffix}.csv"));
        if let Err(e) = std::fs::write(&table_path, csv) {
            eprintln!("cannot write table `{}`: {e}", table_path.display());
            return ExitCode::from(1);
        }
    }

    println!("{}", outcome.summary);
    println!("status: {status}");
    println!("report: {}", path.display());
    if outcome.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
