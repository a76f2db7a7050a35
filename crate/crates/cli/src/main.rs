use std::fs;
use std::io::{self, Write};
use std::net::TcpListener;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use consensus_core::io::{parse_batch_file, BatchFormat};
use consensus_core::latency::measure_selection;
use consensus_core::protocol::{Response, Service};
use consensus_core::simulator::{
    ablation_sweep, estimate_success, Policy, RolloutPlan, Scenario, SweepAxes, SweepRow,
    SweepTable,
};
use consensus_core::{select, Execution, Metric, SelectError, SelectorConfig};

#[derive(Parser, Debug)]
#[command(
    name = "consensus",
    version,
    about = "Consensus selection over sampled action chunks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Select one candidate from a batch file
    Select(SelectArgs),
    /// Estimate episode success for a scenario
    Simulate(SimulateArgs),
    /// Run an ablation sweep over metric, K and C
    Sweep(SweepArgs),
    /// Answer selection requests, one JSON object per line
    Serve(ServeArgs),
    /// Time selection calls and report latency percentiles
    Bench(BenchArgs),
}

/// Selector settings shared by `select` and `serve`.
#[derive(Args, Debug)]
struct SelectorFlags {
    /// Number of k-means clusters
    #[arg(long)]
    clusters: Option<usize>,
    /// Unimodality threshold; scores below it skip clustering
    #[arg(long, allow_negative_numbers = true)]
    tau: Option<f64>,
    /// Added to the median distance in the guard score
    #[arg(long, allow_negative_numbers = true)]
    eps: Option<f64>,
    /// Distance used for medoids, the guard denominator and cluster ties
    #[arg(long, value_parser = parse_metric)]
    metric: Option<Metric>,
    /// Seed for k-means initialization
    #[arg(long)]
    seed: Option<u64>,
}

impl SelectorFlags {
    fn config(&self) -> SelectorConfig {
        let base = SelectorConfig::default();
        SelectorConfig {
            num_clusters: self.clusters.unwrap_or(base.num_clusters),
            tau: self.tau.unwrap_or(base.tau),
            eps: self.eps.unwrap_or(base.eps),
            metric: self.metric.unwrap_or(base.metric),
            seed: self.seed.unwrap_or(base.seed),
            ..base
        }
    }
}

#[derive(Args, Debug)]
struct SelectArgs {
    /// Batch file (JSON document or K,T,A-headed CSV)
    #[arg(long)]
    input: PathBuf,
    /// File format; guessed from the extension when omitted
    #[arg(long, value_parser = parse_format)]
    format: Option<BatchFormat>,
    /// Use only the first N candidates
    #[arg(long, value_name = "N")]
    k_override: Option<usize>,
    #[command(flatten)]
    selector: SelectorFlags,
    /// Where to write the result: a path or `stdout`
    #[arg(long, default_value = "stdout")]
    output: String,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum PolicyChoice {
    SingleSample,
    Consensus,
    Both,
}

/// Overrides of a scenario's `[simulation]` section.
#[derive(Args, Debug)]
struct RunFlags {
    /// Scenario file (TOML)
    #[arg(long)]
    scenario: PathBuf,
    /// Episodes per repeat
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Master seed for every derived stream
    #[arg(long)]
    seed: Option<u64>,
    /// Run episodes on one thread
    #[arg(long)]
    sequential: bool,
    /// Where to write the table: a path or `stdout`
    #[arg(long, default_value = "stdout")]
    output: String,
}

impl RunFlags {
    fn load(&self) -> Result<(Scenario, RolloutPlan), Failure> {
        let scenario =
            Scenario::from_path(&self.scenario).map_err(|e| Failure::Data(e.to_string()))?;
        let sim = &scenario.simulation;
        let execution = if self.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        };
        let plan = RolloutPlan::new(
            self.episodes.unwrap_or(sim.episodes),
            self.repeats.unwrap_or(sim.repeats),
            self.seed.unwrap_or(sim.seed),
        )
        .with_execution(execution);
        if plan.episodes_per_repeat == 0 || plan.repeats == 0 {
            return Err(Failure::Usage(
                "--episodes and --repeats must be at least 1".into(),
            ));
        }
        Ok((scenario, plan))
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    run: RunFlags,
    #[arg(long, value_enum, default_value = "both")]
    policy: PolicyChoice,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    run: RunFlags,
    /// Metrics to try, e.g. `euclidean,cosine`
    #[arg(long, value_delimiter = ',', value_parser = parse_metric)]
    metrics: Vec<Metric>,
    /// Sample counts to try, e.g. `4,8,16`
    #[arg(long, value_delimiter = ',')]
    k_values: Vec<usize>,
    /// Cluster counts to try, e.g. `2,4`
    #[arg(long, value_delimiter = ',')]
    c_values: Vec<usize>,
    /// Leave out the single-sample row
    #[arg(long)]
    no_baseline: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Transport {
    Stdio,
    Tcp,
}

#[derive(Args, Debug)]
struct ServeArgs {
    #[arg(long, value_enum, default_value = "stdio")]
    transport: Transport,
    /// TCP port; 0 picks a free one
    #[arg(long, default_value_t = 7878)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[command(flatten)]
    selector: SelectorFlags,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Batch sizes, e.g. `4,16`
    #[arg(long, value_delimiter = ',', default_value = "16")]
    k_list: Vec<usize>,
    /// Flattened chunk lengths, e.g. `256,2048`
    #[arg(long, value_delimiter = ',', default_value = "2048")]
    dim_list: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    iterations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    s.parse()
}

fn parse_format(s: &str) -> Result<BatchFormat, String> {
    s.parse()
}

#[derive(Debug)]
enum Failure {
    /// Bad flags or flag values. Exit code 1.
    Usage(String),
    /// Unreadable or invalid input data, or an I/O failure. Exit code 2.
    Data(String),
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

fn config_failure(e: SelectError) -> Failure {
    match e {
        SelectError::Config(_) => Failure::Usage(e.to_string()),
        other => Failure::Data(other.to_string()),
    }
}

fn emit(output: &str, text: &str) -> Result<(), Failure> {
    if output == "stdout" || output == "-" {
        let mut out = io::stdout().lock();
        out.write_all(text.as_bytes())?;
        out.flush()?;
    } else {
        fs::write(output, text)
            .map_err(|e| Failure::Data(format!("cannot write {output}: {e}")))?;
    }
    Ok(())
}

fn run_select(args: SelectArgs) -> Result<(), Failure> {
    let config = args.selector.config();
    config.validate().map_err(config_failure)?;
    let format = args
        .format
        .unwrap_or_else(|| BatchFormat::from_path(&args.input));
    let mut batch =
        parse_batch_file(&args.input, format).map_err(|e| Failure::Data(e.to_string()))?;
    if let Some(k) = args.k_override {
        if k == 0 {
            return Err(Failure::Usage("--k-override must be at least 1".into()));
        }
        if k > batch.len() {
            return Err(Failure::Data(format!(
                "--k-override {k} exceeds the {} candidates in {}",
                batch.len(),
                args.input.display()
            )));
        }
        batch = batch
            .truncated(k)
            .map_err(|e| Failure::Data(e.to_string()))?;
    }
    let result = select(&batch, &config).map_err(config_failure)?;
    let response = Response::success(
        Some(args.input.display().to_string()),
        batch.chunk(result.selected_index).to_rows(),
        &result,
    );
    emit(&args.output, &(response.to_line() + "\n"))
}

fn run_simulate(args: SimulateArgs) -> Result<(), Failure> {
    let (scenario, plan) = args.run.load()?;
    let mut table = SweepTable { rows: Vec::new() };
    let mut policies = Vec::new();
    if args.policy != PolicyChoice::Consensus {
        policies.push(("single_sample", Policy::SingleSample));
    }
    if args.policy != PolicyChoice::SingleSample {
        policies.push(("consensus", Policy::Consensus(scenario.policy)));
    }
    for (config_id, policy) in policies {
        let stats = estimate_success(&scenario.episode, &policy, &plan)
            .map_err(|e| Failure::Data(e.to_string()))?;
        table.rows.push(SweepRow {
            config_id: config_id.to_string(),
            policy,
            stats,
        });
    }
    emit(&args.run.output, &table.to_csv())
}

fn run_sweep(args: SweepArgs) -> Result<(), Failure> {
    let (scenario, plan) = args.run.load()?;
    let flags = SweepAxes {
        metrics: args.metrics,
        k_values: args.k_values,
        c_values: args.c_values,
    };
    let axes = if flags.is_empty() {
        scenario.sweep.clone()
    } else {
        flags
    };
    if axes.k_values.contains(&0) || axes.c_values.iter().any(|&c| c < 2) {
        return Err(Failure::Usage(
            "K values must be at least 1 and C values at least 2".into(),
        ));
    }
    let table = ablation_sweep(
        &scenario.episode,
        &scenario.policy,
        &axes,
        &plan,
        !args.no_baseline,
    )
    .map_err(|e| Failure::Data(e.to_string()))?;
    emit(&args.run.output, &table.to_csv())
}

fn run_serve(args: ServeArgs) -> Result<(), Failure> {
    let config = args.selector.config();
    config.validate().map_err(config_failure)?;
    let service = Service::new(config);
    match args.transport {
        Transport::Stdio => {
            service.serve_stdio()?;
        }
        Transport::Tcp => {
            let listener = TcpListener::bind((args.host.as_str(), args.port)).map_err(|e| {
                Failure::Data(format!("cannot listen on {}:{}: {e}", args.host, args.port))
            })?;
            eprintln!("listening on {}", listener.local_addr()?);
            Arc::new(service).serve_tcp(listener)?;
        }
    }
    Ok(())
}

fn run_bench(args: BenchArgs) -> Result<(), Failure> {
    if args.iterations == 0 || args.k_list.contains(&0) || args.dim_list.contains(&0) {
        return Err(Failure::Usage(
            "K, dimension and iteration counts must be at least 1".into(),
        ));
    }
    let config = SelectorConfig::default();
    let mut out = String::from("K,D,iterations,p50_us,p99_us,mean_us,max_us\n");
    for &k in &args.k_list {
        for &dim in &args.dim_list {
            let r = measure_selection(k, dim, args.iterations, &config, args.seed)
                .map_err(config_failure)?;
            let us = |d: std::time::Duration| d.as_secs_f64() * 1e6;
            out.push_str(&format!(
                "{k},{dim},{},{:.1},{:.1},{:.1},{:.1}\n",
                r.iterations,
                us(r.p50),
                us(r.p99),
                us(r.mean),
                us(r.max)
            ));
        }
    }
    emit("stdout", &out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::Select(args) => run_select(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Serve(args) => run_serve(args),
        Command::Bench(args) => run_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
