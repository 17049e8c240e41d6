use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use perkit::demo::{planted_noise, run_tfim, summary_text, TfimConfig};
use perkit::executor::{FileExecutor, SimExecutor};
use perkit::per::{results_csv, results_json, PerConfig, PerExperiment, DEFAULT_NOISE_STRENGTHS};
use perkit::pnt::{NoiseDataFrame, TomographyConfig, TomographyExperiment};
use perkit::qpd::{overhead, QpdProblem};
use perkit::{Circuit, Error, NoiseSpec, PauliString, Result};

#[derive(Parser, Debug)]
#[command(name = "perkit", version, about = "Pauli noise tomography and probabilistic error reduction")]
struct Cli {
    /// Master seed for twirls, PER sampling and the simulator.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// `sim` for the built-in simulator, `files:<dir>` to exchange batches through a directory.
    #[arg(long, global = true, default_value = "sim")]
    executor: String,
    /// Noise for the simulator (JSON); noiseless when absent.
    #[arg(long, global = true)]
    noise_spec: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Learn sparse Pauli noise models for every Clifford layer in a set of circuits.
    Tomo(TomoArgs),
    /// Mitigated expectation values by PER and vZNE.
    Per(PerArgs),
    /// Transverse-field Ising Trotter demo on the simulator.
    DemoTfim(DemoArgs),
    /// Sampling overhead (γ − ξ(γ − 1))^l.
    Overhead(OverheadArgs),
}

#[derive(Args, Debug)]
struct TomoBudget {
    /// Twirl samples per pair basis and depth.
    #[arg(long, default_value_t = 32)]
    samples: usize,
    /// Twirl samples per single-depth basis.
    #[arg(long, default_value_t = 200)]
    single_samples: usize,
    /// Even layer repetition counts.
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 4, 8, 16])]
    depths: Vec<usize>,
}

#[derive(Args, Debug)]
struct PerBudget {
    /// Noise strengths ξ.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_NOISE_STRENGTHS.to_vec())]
    noise_strengths: Vec<f64>,
    /// PER circuits per circuit, measurement basis and noise strength.
    #[arg(long, default_value_t = 1000)]
    per_samples: usize,
}

#[derive(Args, Debug)]
struct TomoArgs {
    /// JSON circuit or array of circuits.
    #[arg(long)]
    circuits: PathBuf,
    /// `path`, `ring` or an edge list such as `0-1,1-2`.
    #[arg(long, default_value = "path")]
    connectivity: String,
    #[command(flatten)]
    budget: TomoBudget,
    #[arg(long, default_value_t = 250)]
    shots: u64,
}

#[derive(Args, Debug)]
struct PerArgs {
    #[arg(long)]
    circuits: PathBuf,
    /// Learned model as written by `tomo`.
    #[arg(long)]
    noise_model: PathBuf,
    /// Pauli observables such as `ZIII,IZII`.
    #[arg(long, value_delimiter = ',', required = true)]
    observables: Vec<String>,
    #[command(flatten)]
    budget: PerBudget,
    #[arg(long, default_value_t = 1024)]
    shots: u64,
}

#[derive(Args, Debug)]
struct DemoArgs {
    #[arg(long, default_value_t = 15)]
    steps: usize,
    #[arg(long, default_value_t = 4)]
    qubits: usize,
    /// γ^(0) of the deepest circuit under the planted noise.
    #[arg(long, default_value_t = 7.25)]
    gamma: f64,
    #[command(flatten)]
    tomo: TomoBudget,
    #[command(flatten)]
    per: PerBudget,
    #[arg(long, default_value_t = 1024)]
    shots: u64,
}

#[derive(Args, Debug)]
struct OverheadArgs {
    /// Per-layer overhead γ at ξ = 0.
    #[arg(long, required_unless_present = "problem")]
    gamma: Option<f64>,
    /// Take γ from the optimal decomposition of a QPD problem file instead.
    #[arg(long, conflicts_with = "gamma")]
    problem: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.5, 1.0])]
    xi: Vec<f64>,
    /// Largest depth l; rows run from 1.
    #[arg(long, default_value_t = 8)]
    depth: usize,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Coverage(_)
        | Error::Fit { .. }
        | Error::Numeric { .. }
        | Error::Mitigation(_)
        | Error::Decomposition { .. }
        | Error::Basis { .. } => 3,
        Error::Executor(_) | Error::Io(_) => 4,
        _ => 2,
    }
}

fn read_input(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Argument(format!("cannot read {}: {e}", path.display())))
}

fn load_circuits(path: &Path) -> Result<Vec<Circuit>> {
    let text = read_input(path)?;
    let circuits: Vec<Circuit> = match serde_json::from_str::<serde_json::Value>(&text)? {
        v @ serde_json::Value::Array(_) => serde_json::from_value(v)?,
        v => vec![serde_json::from_value(v)?],
    };
    if circuits.is_empty() {
        return Err(Error::Argument(format!("{} holds no circuits", path.display())));
    }
    for c in &circuits {
        c.validate()?;
    }
    Ok(circuits)
}

fn parse_connectivity(s: &str, n: usize) -> Result<Vec<(usize, usize)>> {
    match s {
        "path" => Ok((1..n).map(|q| (q - 1, q)).collect()),
        "ring" => {
            let mut e: Vec<_> = (1..n).map(|q| (q - 1, q)).collect();
            if n > 2 {
                e.push((0, n - 1));
            }
            Ok(e)
        }
        _ => s
            .split(',')
            .map(|pair| {
                let (a, b) = pair
                    .split_once('-')
                    .ok_or_else(|| Error::Argument(format!("edge `{pair}` is not of the form a-b")))?;
                let parse = |t: &str| {
                    t.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Argument(format!("bad qubit index in edge `{pair}`")))
                };
                let (a, b) = (parse(a)?, parse(b)?);
                if a == b || a >= n || b >= n {
                    return Err(Error::Argument(format!("edge `{pair}` invalid for {n} qubits")));
                }
                Ok((a.min(b), a.max(b)))
            })
            .collect(),
    }
}

fn load_noise(cli: &Cli, n_qubits: usize) -> Result<NoiseSpec> {
    match &cli.noise_spec {
        Some(p) => {
            let spec = NoiseSpec::from_json(&read_input(p)?)?;
            if spec.n_qubits != n_qubits {
                return Err(Error::Dimension {
                    expected: n_qubits,
                    found: spec.n_qubits,
                });
            }
            Ok(spec)
        }
        None => Ok(NoiseSpec::noiseless(n_qubits)),
    }
}

enum Backend {
    Sim(SimExecutor<f64>),
    Files(FileExecutor),
}

fn backend(cli: &Cli, noise: NoiseSpec) -> Result<Backend> {
    match cli.executor.as_str() {
        "sim" => Ok(Backend::Sim(SimExecutor::new(noise, cli.seed))),
        s => match s.strip_prefix("files:") {
            Some(dir) if !dir.is_empty() => Ok(Backend::Files(FileExecutor::new(dir))),
            _ => Err(Error::Argument(format!("unknown executor `{s}`; use sim or files:<dir>"))),
        },
    }
}

macro_rules! with_backend {
    ($b:expr, |$e:ident| $body:expr) => {
        match $b {
            Backend::Sim(mut $e) => $body,
            Backend::Files(mut $e) => $body,
        }
    };
}

fn write_out(dir: &Path, name: &str, body: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, body)?;
    info!("wrote {}", path.display());
    Ok(())
}

fn check_per_budget(b: &PerBudget, shots: u64) -> Result<()> {
    if b.per_samples == 0 || shots == 0 {
        return Err(Error::Argument("sample and shot counts must be positive".into()));
    }
    if b.noise_strengths.is_empty() {
        return Err(Error::Argument("at least one noise strength is required".into()));
    }
    if let Some(x) = b.noise_strengths.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
        return Err(Error::Argument(format!("noise strength {x} must be finite and non-negative")));
    }
    if b.noise_strengths.len() < 2 {
        warn!("fewer than two noise strengths: results carry no extrapolation");
    }
    Ok(())
}

fn tomo(cli: &Cli, args: &TomoArgs) -> Result<()> {
    let circuits = load_circuits(&args.circuits)?;
    let n = circuits[0].n_qubits;
    let edges = parse_connectivity(&args.connectivity, n)?;
    let config = TomographyConfig {
        depths: args.budget.depths.clone(),
        samples: args.budget.samples,
        single_samples: args.budget.single_samples,
        shots: args.shots,
        seed: cli.seed,
    };
    config.validate()?;
    let exp = TomographyExperiment::from_circuits(&circuits, &edges, config)?;
    info!("{} distinct layers, {} model terms", exp.layers.len(), exp.terms.len());
    let result = with_backend!(backend(cli, load_noise(cli, n)?)?, |e| exp.run(&mut e))?;
    for l in &result.layers {
        info!("layer {}: NNLS residual {:.3e}", l.layer.id(), l.solve.residual);
    }
    write_out(&cli.out, "noise_model.json", &result.frame.to_json()?)?;
    write_out(&cli.out, "decay.csv", &result.decay_csv())
}

fn per(cli: &Cli, args: &PerArgs) -> Result<()> {
    let circuits = load_circuits(&args.circuits)?;
    let n = circuits[0].n_qubits;
    let frame = NoiseDataFrame::from_json(&read_input(&args.noise_model)?)?;
    let observables = args
        .observables
        .iter()
        .map(|s| s.parse::<PauliString>())
        .collect::<Result<Vec<_>>>()?;
    check_per_budget(&args.budget, args.shots)?;
    let config = PerConfig {
        noise_strengths: args.budget.noise_strengths.clone(),
        samples: args.budget.per_samples,
        shots: args.shots,
        seed: cli.seed,
    };
    let exp = PerExperiment::new(&circuits, observables, frame, config)?;
    info!("{} measurement bases", exp.groups().len());
    write_out(&cli.out, "per_manifest.json", &serde_json::to_string_pretty(&exp.manifest())?)?;
    let results = with_backend!(backend(cli, load_noise(cli, n)?)?, |e| exp.run(&mut e))?;
    for r in results.iter().filter(|r| r.fit.is_some_and(|f| f.linear_fallback)) {
        warn!("circuit {} {}: vZNE used the linear fallback", r.circuit_index, r.observable);
    }
    write_out(&cli.out, "per_results.json", &results_json(&results)?)?;
    write_out(&cli.out, "per_results.csv", &results_csv(&results))
}

fn demo(cli: &Cli, args: &DemoArgs) -> Result<()> {
    if args.qubits < 2 {
        return Err(Error::Argument("the demo needs at least two qubits".into()));
    }
    check_per_budget(&args.per, args.shots)?;
    let base = TfimConfig::default();
    let mut config = TfimConfig {
        n_qubits: args.qubits,
        steps: args.steps,
        gamma_target: args.gamma,
        tomography: TomographyConfig {
            depths: args.tomo.depths.clone(),
            samples: args.tomo.samples,
            single_samples: args.tomo.single_samples,
            shots: args.shots,
            seed: cli.seed,
        },
        per: PerConfig {
            noise_strengths: args.per.noise_strengths.clone(),
            samples: args.per.per_samples,
            shots: args.shots,
            seed: cli.seed,
        },
        ..base
    };
    config.tomography.validate()?;
    let noise = match &cli.noise_spec {
        Some(_) => load_noise(cli, args.qubits)?,
        None => planted_noise(&config.circuits(), args.gamma, &config.readout, cli.seed)?,
    };
    config.noise = Some(noise.clone());
    let output = with_backend!(backend(cli, noise.clone())?, |e| run_tfim(&config, &noise, &mut e))?;
    for (name, body) in &output.files {
        write_out(&cli.out, name, body)?;
    }
    print!("{}", summary_text(&output.summary));
    Ok(())
}

fn overhead_table(args: &OverheadArgs) -> Result<()> {
    let gamma = match (&args.problem, args.gamma) {
        (Some(p), _) => QpdProblem::from_json(&read_input(p)?)?.solve()?.gamma(),
        (None, Some(g)) => g,
        (None, None) => return Err(Error::Argument("--gamma or --problem is required".into())),
    };
    if !(gamma >= 1.0) || !gamma.is_finite() {
        return Err(Error::Argument(format!("gamma {gamma} must be at least 1")));
    }
    if args.depth == 0 {
        return Err(Error::Argument("depth must be positive".into()));
    }
    if let Some(x) = args.xi.iter().find(|x| !(**x >= 0.0)) {
        return Err(Error::Argument(format!("noise strength {x} must be non-negative")));
    }
    println!("gamma = {gamma:.6}");
    let header: Vec<String> = args.xi.iter().map(|x| format!("xi={x}")).collect();
    println!("depth,{}", header.join(","));
    for l in 1..=args.depth {
        let row: Vec<String> = args
            .xi
            .iter()
            .map(|&x| format!("{:.6}", overhead(gamma, x).powi(l as i32)))
            .collect();
        println!("{l},{}", row.join(","));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Tomo(a) => tomo(&cli, a),
        Command::Per(a) => per(&cli, a),
        Command::DemoTfim(a) => demo(&cli, a),
        Command::Overhead(a) => overhead_table(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
