use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dkpp::enumerate::LogWeightTable;
use dkpp::experiments::{
    dependence_sweep, linspace_step, write_csv, z_comparison, z_variance, CsvRecord,
    DependenceSweepConfig, ZComparisonConfig, ZVarianceConfig,
};
use dkpp::inference::{
    conditional_prob_between, conditional_prob_given_cardinality, elbo, importance_log_partition,
    mean_field_fit, rb_marginal_between, rb_marginal_cardinality, ElboConfig, EstimateWithError,
    McConfig, MeanFieldConfig,
};
use dkpp::learning::{sgd_fit, BasketDataset, TrainConfig};
use dkpp::model::write_factor_model;
use dkpp::modeopt::{
    double_greedy, exhaustive_cardinality_mode, exhaustive_mode, greedy_mode,
    random_greedy_cardinality, OptResult,
};
use dkpp::sampling::{run_chain, ChainConfig};
use dkpp::{random_wishart_kernel, BernoulliProduct, Dkpp, Error, SpectralFunction, Subset};

#[derive(Parser)]
#[command(name = "dkpp", version, about = "Discrete kernel point processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Conditional probability of scattered and gathered grid subsets across λ.
    DependenceSweep(SweepArgs),
    /// ELBO and importance-sampling normalizers against enumeration.
    ZComparison(ZCompArgs),
    /// Importance-sampling variance with and without the mean-field proposal.
    ZVariance(ZVarArgs),
    /// Fit a factored kernel to a basket file by ratio matching.
    Learn(LearnArgs),
    /// Enumerate all subset probabilities of a model.
    Exact(ExactArgs),
    /// Estimate a normalizer, marginal or conditional probability.
    Estimate(EstimateArgs),
    /// Run a Gibbs chain.
    Sample(SampleArgs),
    /// Search for a high-probability subset.
    Mode(ModeArgs),
    /// Draw baskets from a model by exact enumeration.
    GenerateBaskets(GenBasketArgs),
    /// Write a random Wishart-kernel model file.
    GenerateModel(GenModelArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PhiKind {
    Log,
    Affine,
    Quadratic,
    Boxcox,
}

#[derive(Args)]
struct PhiArgs {
    #[arg(long, value_enum)]
    phi: Option<PhiKind>,
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    c: Option<f64>,
    /// Box–Cox parameter; a comma-separated list where a sweep is run.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    lambda: Vec<f64>,
}

impl PhiArgs {
    fn resolve(&self, default: SpectralFunction) -> Result<SpectralFunction, CliError> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| CliError::Usage(format!("--{name} is required for this --phi")))
        };
        Ok(match self.phi {
            None if self.lambda.len() == 1 => SpectralFunction::boxcox(self.lambda[0]),
            None => default,
            Some(PhiKind::Log) => SpectralFunction::Log,
            Some(PhiKind::Affine) => SpectralFunction::affine(need(self.b, "b")?, need(self.c, "c")?),
            Some(PhiKind::Quadratic) => SpectralFunction::quadratic(
                need(self.a, "a")?,
                need(self.b, "b")?,
                need(self.c, "c")?,
            ),
            Some(PhiKind::Boxcox) => match self.lambda[..] {
                [l] => SpectralFunction::boxcox(l),
                _ => return Err(CliError::Usage("--phi boxcox needs one --lambda".into())),
            },
        })
    }
}

#[derive(Args)]
struct Output {
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Output {
    fn open(&self) -> Result<Box<dyn Write>, CliError> {
        Ok(match &self.out {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).map_err(|e| CliError::File(p.clone(), e.into()))?,
            )),
            None => Box::new(BufWriter::new(io::stdout())),
        })
    }
}

#[derive(Args)]
struct SweepArgs {
    /// Grid side length.
    #[arg(long, default_value_t = 10)]
    side: usize,
    #[arg(long, default_value_t = 1.0)]
    bandwidth: f64,
    #[arg(long, default_value_t = 9)]
    k: usize,
    #[arg(long, value_delimiter = ',')]
    lambda: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 30)]
    seeds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct ZCompArgs {
    #[arg(long, default_value_t = 16)]
    n: usize,
    #[arg(long, value_delimiter = ',')]
    lambda: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 30)]
    seeds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Monte Carlo draws per mean-field expectation.
    #[arg(long, default_value_t = 64)]
    mc_samples: usize,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct ZVarArgs {
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, value_delimiter = ',')]
    lambda: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 20)]
    seeds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    mc_samples: usize,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct LearnArgs {
    /// Basket file.
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    phi: PhiArgs,
    /// Columns of the factor V.
    #[arg(long, default_value_t = 10)]
    rank: usize,
    #[arg(long, default_value_t = 1e-2)]
    lr: f64,
    #[arg(long, default_value_t = 1000)]
    iters: usize,
    /// Pairs per minibatch.
    #[arg(long, default_value_t = 100)]
    batch: usize,
    #[arg(long, default_value_t = 0.0)]
    momentum: f64,
    #[arg(long, default_value_t = 10)]
    eval_every: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to save the fitted model; defaults to `<out>.model` when --out is given.
    #[arg(long)]
    model_out: Option<PathBuf>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct ModelArg {
    /// Model file.
    #[arg(long)]
    model: PathBuf,
}

#[derive(Args)]
struct ExactArgs {
    #[command(flatten)]
    model: ModelArg,
    #[command(flatten)]
    out: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum Quantity {
    /// Normalizer by importance sampling.
    LogZ,
    /// Evidence lower bound at the mean-field fit.
    Elbo,
    /// P(|A| = k).
    Cardinality,
    /// P(lower ⊆ A ⊆ upper).
    Interval,
    /// log P(A = subset | |A| = |subset|).
    ConditionalCardinality,
    /// log P(A = subset | lower ⊆ A ⊆ upper).
    ConditionalInterval,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProposalKind {
    MeanField,
    Uniform,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long, value_enum)]
    quantity: Quantity,
    #[arg(long)]
    k: Option<usize>,
    /// Space-separated item indices.
    #[arg(long)]
    subset: Option<String>,
    #[arg(long)]
    lower: Option<String>,
    #[arg(long)]
    upper: Option<String>,
    #[arg(long, value_enum, default_value = "mean-field")]
    proposal: ProposalKind,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long, default_value_t = 1000)]
    sweeps: usize,
    #[arg(long, default_value_t = 100)]
    burn_in: usize,
    #[arg(long, default_value_t = 1)]
    thin: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Initial state; the empty set when omitted.
    #[arg(long)]
    init: Option<String>,
    #[command(flatten)]
    out: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeMethod {
    Exhaustive,
    Greedy,
    DoubleGreedy,
    DoubleGreedyRandomized,
    RandomGreedy,
}

#[derive(Args)]
struct ModeArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long, value_enum, default_value = "double-greedy")]
    method: ModeMethod,
    /// Cardinality for random-greedy, or for a constrained exhaustive search.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct GenBasketArgs {
    #[command(flatten)]
    model: ModelArg,
    /// Number of baskets.
    #[arg(long, default_value_t = 2000)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct GenModelArgs {
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[command(flatten)]
    phi: PhiArgs,
    /// Write a factor of this rank instead of a full Wishart kernel.
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: Output,
}

enum CliError {
    Usage(String),
    Lib(Error),
    File(PathBuf, Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Lib(Error::Io(e))
    }
}

type CliResult = Result<(), CliError>;

fn command_line() -> String {
    let mut parts = vec!["dkpp".to_string()];
    for arg in std::env::args().skip(1) {
        if arg.is_empty() || arg.contains(char::is_whitespace) {
            parts.push(format!("\"{arg}\""));
        } else {
            parts.push(arg);
        }
    }
    parts.join(" ")
}

fn metadata(seed: u64, extra: Vec<(&'static str, String)>) -> Vec<(&'static str, String)> {
    let mut m = vec![("command", command_line()), ("seed", seed.to_string())];
    m.extend(extra);
    m
}

fn subset_arg(s: &Option<String>, name: &str) -> Result<Subset, CliError> {
    let s = s
        .as_ref()
        .ok_or_else(|| CliError::Usage(format!("--{name} is required")))?;
    Subset::parse(s).map_err(|e| CliError::Usage(format!("--{name}: {e}")))
}

fn or_default(lambdas: &[f64], default: Vec<f64>) -> Vec<f64> {
    if lambdas.is_empty() {
        default
    } else {
        lambdas.to_vec()
    }
}

fn cmd_dependence_sweep(a: &SweepArgs) -> CliResult {
    let config = DependenceSweepConfig {
        grid_side: a.side,
        bandwidth: a.bandwidth,
        k: a.k,
        lambdas: or_default(&a.lambda, linspace_step(0.0, 2.0, 0.25)),
        n_samples: a.samples,
        seeds: a.seeds,
        seed: a.seed,
    };
    if config.k == 0 || config.k > a.side * a.side {
        return Err(CliError::Usage(format!("--k must lie in 1..={}", a.side * a.side)));
    }
    let rows = dependence_sweep(&config)?;
    write_csv(a.out.open()?, &metadata(a.seed, vec![]), &rows)?;
    Ok(())
}

fn cmd_z_comparison(a: &ZCompArgs) -> CliResult {
    if a.n > dkpp::DEFAULT_ENUMERATION_CAP {
        return Err(CliError::Lib(Error::EnumerationCap {
            n: a.n,
            cap: dkpp::DEFAULT_ENUMERATION_CAP,
        }));
    }
    let config = ZComparisonConfig {
        n: a.n,
        lambdas: or_default(&a.lambda, linspace_step(0.0, 2.0, 0.25)),
        n_samples: a.samples,
        seeds: a.seeds,
        seed: a.seed,
        mean_field: MeanFieldConfig {
            mc_samples: a.mc_samples,
            ..MeanFieldConfig::default()
        },
    };
    let rows = z_comparison(&config)?;
    write_csv(a.out.open()?, &metadata(a.seed, vec![]), &rows)?;
    Ok(())
}

fn cmd_z_variance(a: &ZVarArgs) -> CliResult {
    let config = ZVarianceConfig {
        n: a.n,
        lambdas: or_default(&a.lambda, vec![0.0, 0.5, 1.0, 1.5, 2.0]),
        n_samples: a.samples,
        seeds: a.seeds,
        seed: a.seed,
        mean_field: MeanFieldConfig {
            mc_samples: a.mc_samples,
            ..MeanFieldConfig::default()
        },
    };
    let rows = z_variance(&config)?;
    write_csv(a.out.open()?, &metadata(a.seed, vec![]), &rows)?;
    Ok(())
}

struct TraceRow(dkpp::learning::TracePoint);

impl CsvRecord for TraceRow {
    fn header() -> &'static [&'static str] {
        &["iter", "loss", "wall_ms"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.0.iter.to_string(),
            format!("{:?}", self.0.loss),
            format!("{:.3}", self.0.wall_ms),
        ]
    }
}

fn cmd_learn(a: &LearnArgs) -> CliResult {
    let data = BasketDataset::load(&a.data).map_err(|e| CliError::File(a.data.clone(), e))?;
    let config = TrainConfig {
        learning_rate: a.lr,
        n_iters: a.iters,
        batch_size: a.batch,
        seed: a.seed,
        phi: a.phi.resolve(SpectralFunction::boxcox(0.5))?,
        rank: a.rank,
        momentum: a.momentum,
        eval_every: a.eval_every,
    };
    let fit = sgd_fit(&data, &config)?;
    let last = fit.trace.last().expect("trace has the initial point");
    if a.iters > 0 {
        eprintln!(
            "{} iterations, {:.4} ms per iteration",
            a.iters,
            last.wall_ms / a.iters as f64
        );
    }
    let model_path = a
        .model_out
        .clone()
        .or_else(|| {
            a.out.out.as_ref().map(|p| {
                let mut s = p.clone().into_os_string();
                s.push(".model");
                PathBuf::from(s)
            })
        });
    if let Some(path) = &model_path {
        let file = File::create(path).map_err(|e| CliError::File(path.clone(), e.into()))?;
        let mut w = BufWriter::new(file);
        write_factor_model(&mut w, &config.phi, fit.kernel.v())?;
        w.flush()?;
    }
    let rows: Vec<TraceRow> = fit.trace.into_iter().map(TraceRow).collect();
    let extra = vec![
        ("phi", config.phi.to_string()),
        ("baskets", data.len().to_string()),
        ("eval_subsampled", fit.eval_subsampled.to_string()),
        (
            "model",
            model_path.map_or("not saved".into(), |p| p.display().to_string()),
        ),
    ];
    write_csv(a.out.open()?, &metadata(a.seed, extra), &rows)?;
    Ok(())
}

struct ExactRow {
    items: Subset,
    log_weight: f64,
    probability: f64,
}

impl CsvRecord for ExactRow {
    fn header() -> &'static [&'static str] {
        &["items", "log_weight", "probability"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.items.to_string(),
            format!("{:?}", self.log_weight),
            format!("{:?}", self.probability),
        ]
    }
}

fn load_model(m: &ModelArg) -> Result<Dkpp, CliError> {
    Dkpp::load(&m.model).map_err(|e| CliError::File(m.model.clone(), e))
}

fn cmd_exact(a: &ExactArgs) -> CliResult {
    let model = load_model(&a.model)?;
    let table = LogWeightTable::build(&model, dkpp::DEFAULT_ENUMERATION_CAP)?;
    let log_z = table.log_partition();
    let rows: Vec<ExactRow> = table
        .values()
        .iter()
        .enumerate()
        .map(|(mask, &lw)| ExactRow {
            items: Subset::from_mask(mask as u64, model.n()),
            log_weight: lw,
            probability: (lw - log_z).exp(),
        })
        .collect();
    let extra = vec![("phi", model.phi().to_string()), ("log_z", format!("{log_z:?}"))];
    write_csv(a.out.open()?, &metadata(0, extra), &rows)?;
    Ok(())
}

struct EstimateRow {
    quantity: &'static str,
    estimate: EstimateWithError,
}

impl CsvRecord for EstimateRow {
    fn header() -> &'static [&'static str] {
        &["quantity", "value", "std_error", "n_samples", "seed", "exact"]
    }

    fn fields(&self) -> Vec<String> {
        let e = &self.estimate;
        vec![
            self.quantity.to_string(),
            format!("{:?}", e.value),
            format!("{:?}", e.std_error),
            e.n_samples.to_string(),
            e.seed.to_string(),
            e.exact.to_string(),
        ]
    }
}

fn cmd_estimate(a: &EstimateArgs) -> CliResult {
    let model = load_model(&a.model)?;
    let mc = McConfig {
        n_samples: a.samples,
        seed: a.seed,
        ..McConfig::default()
    };
    let proposal = || -> Result<BernoulliProduct, CliError> {
        Ok(match a.proposal {
            ProposalKind::MeanField => {
                let cfg = MeanFieldConfig {
                    seed: a.seed,
                    ..MeanFieldConfig::default()
                };
                mean_field_fit(&model, &cfg)?.q
            }
            ProposalKind::Uniform => BernoulliProduct::uniform(model.n(), 0.5)?,
        })
    };
    let (name, estimate) = match a.quantity {
        Quantity::LogZ => (
            "log_z",
            importance_log_partition(&model, &proposal()?, a.samples, a.seed)?,
        ),
        Quantity::Elbo => {
            let q = proposal()?;
            let cfg = ElboConfig {
                mc_samples: a.samples,
                seed: a.seed,
                ..ElboConfig::default()
            };
            ("elbo", elbo(&model, &q, &cfg)?)
        }
        Quantity::Cardinality => {
            let k = a
                .k
                .ok_or_else(|| CliError::Usage("--k is required".into()))?;
            ("cardinality", rb_marginal_cardinality(&model, k, &mc)?)
        }
        Quantity::Interval => {
            let (lo, hi) = (subset_arg(&a.lower, "lower")?, subset_arg(&a.upper, "upper")?);
            let model = match model.log_partition() {
                Ok(z) => model.clone().with_log_partition(z)?,
                Err(_) => model.clone(),
            };
            let m = rb_marginal_between(&model, &lo, &hi, &proposal()?, &mc)?;
            let mut e = m.log_unnormalized;
            let name = match m.probability {
                Some(p) => {
                    e.std_error *= p;
                    e.value = p;
                    "interval_probability"
                }
                None => "interval_log_unnormalized",
            };
            (name, e)
        }
        Quantity::ConditionalCardinality => {
            let s = subset_arg(&a.subset, "subset")?;
            (
                "log_conditional_cardinality",
                conditional_prob_given_cardinality(&model, &s, &mc)?,
            )
        }
        Quantity::ConditionalInterval => {
            let s = subset_arg(&a.subset, "subset")?;
            let (lo, hi) = (subset_arg(&a.lower, "lower")?, subset_arg(&a.upper, "upper")?);
            (
                "log_conditional_interval",
                conditional_prob_between(&model, &s, &lo, &hi, &proposal()?, &mc)?,
            )
        }
    };
    let rows = [EstimateRow {
        quantity: name,
        estimate,
    }];
    write_csv(a.out.open()?, &metadata(a.seed, vec![]), &rows)?;
    Ok(())
}

fn cmd_sample(a: &SampleArgs) -> CliResult {
    let model = load_model(&a.model)?;
    let init = match &a.init {
        Some(s) => Subset::parse(s).map_err(|e| CliError::Usage(format!("--init: {e}")))?,
        None => Subset::empty(),
    };
    let config = ChainConfig {
        sweeps: a.sweeps,
        burn_in: a.burn_in,
        thin: a.thin,
        seed: a.seed,
    };
    let chain = run_chain(&model, &init, &config)?;
    let mut w = a.out.open()?;
    chain.write_to(&mut w)?;
    w.flush()?;
    Ok(())
}

struct ModeRow(OptResult);

impl CsvRecord for ModeRow {
    fn header() -> &'static [&'static str] {
        &["method", "seed", "objective", "items"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.0.method.clone(),
            self.0.seed.map_or(String::new(), |s| s.to_string()),
            format!("{:?}", self.0.objective),
            self.0.subset.to_string(),
        ]
    }
}

fn cmd_mode(a: &ModeArgs) -> CliResult {
    let model = load_model(&a.model)?;
    let result = match (a.method, a.k) {
        (ModeMethod::Exhaustive, None) => exhaustive_mode(&model)?,
        (ModeMethod::Exhaustive, Some(k)) => exhaustive_cardinality_mode(&model, k)?,
        (ModeMethod::Greedy, _) => greedy_mode(&model)?,
        (ModeMethod::DoubleGreedy, _) => double_greedy(&model, false, a.seed)?,
        (ModeMethod::DoubleGreedyRandomized, _) => double_greedy(&model, true, a.seed)?,
        (ModeMethod::RandomGreedy, Some(k)) => random_greedy_cardinality(&model, k, a.seed)?,
        (ModeMethod::RandomGreedy, None) => {
            return Err(CliError::Usage("--method random-greedy needs --k".into()))
        }
    };
    write_csv(a.out.open()?, &metadata(a.seed, vec![]), &[ModeRow(result)])?;
    Ok(())
}

fn cmd_generate_baskets(a: &GenBasketArgs) -> CliResult {
    let model = load_model(&a.model)?;
    let data = BasketDataset::sample_from(&model, a.m, a.seed)?;
    let mut w = a.out.open()?;
    writeln!(w, "# {}", command_line())?;
    data.write_to(&mut w)?;
    w.flush()?;
    Ok(())
}

fn cmd_generate_model(a: &GenModelArgs) -> CliResult {
    if a.n == 0 {
        return Err(CliError::Usage("--n must be positive".into()));
    }
    let phi = a.phi.resolve(SpectralFunction::Log)?;
    let mut w = a.out.open()?;
    writeln!(w, "# {}", command_line())?;
    match a.rank {
        Some(d) => {
            let fk = dkpp::learning::FactorizedKernel::random(a.n, d, a.seed)?;
            write_factor_model(&mut w, &phi, fk.v())?;
        }
        None => Dkpp::new(random_wishart_kernel(a.n, a.seed), phi).write_to(&mut w)?,
    }
    w.flush()?;
    Ok(())
}

fn run(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::DependenceSweep(a) => cmd_dependence_sweep(a),
        Command::ZComparison(a) => cmd_z_comparison(a),
        Command::ZVariance(a) => cmd_z_variance(a),
        Command::Learn(a) => cmd_learn(a),
        Command::Exact(a) => cmd_exact(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Mode(a) => cmd_mode(a),
        Command::GenerateBaskets(a) => cmd_generate_baskets(a),
        Command::GenerateModel(a) => cmd_generate_model(a),
    }
}

fn is_broken_pipe(e: &Error) -> bool {
    let io = match e {
        Error::Io(io) => io,
        Error::Csv(c) => match c.kind() {
            csv::ErrorKind::Io(io) => io,
            _ => return false,
        },
        _ => return false,
    };
    io.kind() == io::ErrorKind::BrokenPipe
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        // A closed stdout (e.g. piped into `head`) is not an error.
        Err(CliError::Lib(e)) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 1 })
        }
        Err(CliError::File(path, e)) => {
            eprintln!("error: {}: {e}", path.display());
            ExitCode::from(if e.is_numerical() { 3 } else { 1 })
        }
    }
}
