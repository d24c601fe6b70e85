//! `mipost`: posterior mutual information, Monte Carlo checks, feature
//! filters and the incremental naive Bayes experiment from the command line.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use mi_posterior::dist::{fit_or_fallback, DistApprox, Family};
use mi_posterior::filters::{decide_all, Filter, FilterConfig, FilterDecision};
use mi_posterior::harness::{
    attribute_tables, compare_runs, discretize_csv, load_dataset, paired_t_test, prepare, read_report,
    run_incremental, write_report, ClassColumn, LoadOptions, MissingMode, ReportFormat,
};
use mi_posterior::info::{i_max, mutual_information};
use mi_posterior::missing::mi_variance_missing;
use mi_posterior::moments::mi_variance_approx;
use mi_posterior::oracle::{ks_distance, sample_mi, sample_raw, write_samples_le, Empirical};
use mi_posterior::tables::{apply_prior, ContingencyTable, Prior};
use mi_posterior::{Error, Result};

#[derive(Parser)]
#[command(name = "mipost", version, about = "Posterior distribution of mutual information and robust feature filters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Empirical mutual information and its posterior mean and variance.
    Mi(MiArgs),
    /// Monte Carlo samples of the posterior of mutual information.
    Mc(McArgs),
    /// Apply one filter to every attribute of a dataset.
    Select(SelectArgs),
    /// Incremental classify-then-update experiment.
    Run(RunArgs),
    /// Paired t-test between two filters of a JSON run report.
    Ttest(TtestArgs),
    /// Equal-frequency discretization of numeric columns.
    Discretize(DiscretizeArgs),
}

#[derive(Args)]
struct MiArgs {
    /// JSON table: {"r", "s", "counts", "missing_class"?, "missing_feature"?}
    #[arg(long)]
    table: PathBuf,
    #[arg(long, default_value = "uniform")]
    prior: Prior,
    /// Also fit this family and report tail probabilities.
    #[arg(long)]
    dist: Option<Family>,
    #[arg(long, default_value_t = 0.003)]
    epsilon: f64,
}

#[derive(Args)]
struct McArgs {
    #[arg(long)]
    table: PathBuf,
    #[arg(long, default_value = "uniform")]
    prior: Prior,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fit this family to the analytic moments and report its KS distance.
    #[arg(long)]
    fit: Option<Family>,
    /// Write the raw draws as little-endian f64 values.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    /// Class column, by header name or 0-based index (default: last).
    #[arg(long)]
    class_column: Option<String>,
    #[arg(long, default_value = "?")]
    missing_token: String,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    #[arg(long)]
    no_header: bool,
}

impl DataArgs {
    fn options(&self) -> Result<LoadOptions> {
        if !self.delimiter.is_ascii() {
            return Err(Error::Config(format!("delimiter {:?} is not ASCII", self.delimiter)));
        }
        Ok(LoadOptions {
            delimiter: self.delimiter as u8,
            has_header: !self.no_header,
            class_column: class_column(&self.class_column),
            missing_token: self.missing_token.clone(),
        })
    }
}

fn class_column(arg: &Option<String>) -> ClassColumn {
    match arg {
        None => ClassColumn::Last,
        Some(c) => match c.parse::<usize>() {
            Ok(k) => ClassColumn::Index(k),
            Err(_) => ClassColumn::Name(c.clone()),
        },
    }
}

#[derive(Args)]
struct FilterArgs {
    #[arg(long, default_value_t = 0.003)]
    epsilon: f64,
    #[arg(long = "p", default_value_t = 0.95)]
    p_level: f64,
    #[arg(long, default_value = "beta")]
    family: Family,
    #[arg(long, default_value = "uniform")]
    prior: Prior,
}

impl FilterArgs {
    fn config(&self) -> FilterConfig {
        FilterConfig {
            epsilon: self.epsilon,
            p_level: self.p_level,
            family: self.family,
            prior: self.prior,
        }
    }
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    filter: Filter,
    #[command(flatten)]
    cfg: FilterArgs,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_delimiter = ',', default_value = "f,ff,bf")]
    filters: Vec<Filter>,
    #[command(flatten)]
    cfg: FilterArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "drop")]
    missing: MissingMode,
    #[arg(long)]
    out: PathBuf,
    /// Defaults to csv for a .csv output path, json otherwise.
    #[arg(long)]
    format: Option<ReportFormat>,
}

#[derive(Args)]
struct TtestArgs {
    #[arg(long)]
    report: PathBuf,
    /// Two filters, e.g. ff,f
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pair: Vec<Filter>,
}

#[derive(Args)]
struct DiscretizeArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    bins: usize,
    #[arg(long)]
    out: PathBuf,
    /// Column left untouched, by name or 0-based index (default: last).
    #[arg(long)]
    class_column: Option<String>,
    #[arg(long, default_value = "?")]
    missing_token: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Mi(a) => cmd_mi(a),
        Command::Mc(a) => cmd_mc(a),
        Command::Select(a) => cmd_select(a),
        Command::Run(a) => cmd_run(a),
        Command::Ttest(a) => cmd_ttest(a),
        Command::Discretize(a) => cmd_discretize(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn read_table(path: &Path) -> Result<ContingencyTable> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

#[derive(Serialize)]
struct MiOutput {
    r: usize,
    s: usize,
    prior: Prior,
    /// Empirical mutual information of the complete counts.
    j: f64,
    mean: f64,
    variance: f64,
    i_max: f64,
    variance_clamped: bool,
    incomplete: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit: Option<FitOutput>,
}

#[derive(Serialize)]
struct FitOutput {
    dist: DistApprox,
    fallback: Option<String>,
    epsilon: f64,
    prob_exceeds_eps: f64,
    q05: f64,
    q95: f64,
}

fn cmd_mi(a: MiArgs) -> Result<()> {
    let table = read_table(&a.table)?;
    let (r, s) = (table.rows(), table.cols());
    let observed: Vec<f64> = table.counts().iter().map(|&c| c as f64).collect();
    let (mean, variance, variance_clamped) = if table.has_missing() {
        let m = mi_variance_missing(&table, a.prior)?;
        (m.mean, m.variance, m.variance_clamped)
    } else {
        let m = mi_variance_approx(&apply_prior(&table, a.prior)?)?;
        (m.mean, m.variance, m.variance_clamped)
    };
    let upper = i_max(r, s);
    let fit = match a.dist {
        None => None,
        Some(family) => {
            let f = fit_or_fallback(family, mean, variance, upper)?;
            Some(FitOutput {
                prob_exceeds_eps: f.dist.prob_exceeds(a.epsilon),
                q05: f.dist.quantile(0.05),
                q95: f.dist.quantile(0.95),
                dist: f.dist,
                fallback: f.fallback,
                epsilon: a.epsilon,
            })
        }
    };
    print_json(&MiOutput {
        r,
        s,
        prior: a.prior,
        j: mutual_information(r, s, &observed),
        mean,
        variance,
        i_max: upper,
        variance_clamped,
        incomplete: table.has_missing(),
        fit,
    })
}

#[derive(Serialize)]
struct McOutput {
    sample_count: u64,
    seed: u64,
    mean: f64,
    variance: f64,
    mean_std_error: f64,
    i_max: f64,
    storage: &'static str,
    analytic_mean: f64,
    analytic_variance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit: Option<DistApprox>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ks_distance: Option<f64>,
}

fn cmd_mc(a: McArgs) -> Result<()> {
    let table = read_table(&a.table)?;
    if table.has_missing() {
        return Err(Error::Input("Monte Carlo sampling needs a table without missing counts".into()));
    }
    let pc = apply_prior(&table, a.prior)?;
    let summary = sample_mi(&pc, a.samples, a.seed)?;
    let moments = mi_variance_approx(&pc)?;
    let fit = match a.fit {
        Some(family) => Some(fit_or_fallback(family, moments.mean, moments.variance, summary.i_max)?.dist),
        None => None,
    };
    if let Some(path) = &a.dump {
        write_samples_le(path, &sample_raw(&pc, a.samples, a.seed)?)?;
    }
    print_json(&McOutput {
        sample_count: summary.sample_count,
        seed: summary.seed,
        mean: summary.mean,
        variance: summary.variance,
        mean_std_error: summary.mean_std_error,
        i_max: summary.i_max,
        storage: match summary.empirical {
            Empirical::Sorted(_) => "sorted",
            Empirical::Histogram { .. } => "histogram",
        },
        analytic_mean: moments.mean,
        analytic_variance: moments.variance,
        ks_distance: fit.as_ref().map(|d| ks_distance(&summary, d)),
        fit,
    })
}

#[derive(Serialize)]
struct NamedDecision<'a> {
    name: &'a str,
    #[serde(flatten)]
    decision: &'a FilterDecision,
}

#[derive(Serialize)]
struct Kept<'a> {
    filter: Filter,
    kept: Vec<usize>,
    names: Vec<&'a str>,
}

fn cmd_select(a: SelectArgs) -> Result<()> {
    let cfg = a.cfg.config();
    cfg.validate(&[a.filter])?;
    let ds = load_dataset(&a.data.data, &a.data.options()?)?;
    let decisions = decide_all(&attribute_tables(&ds)?, &cfg)?;
    let mut out = std::io::stdout().lock();
    for d in &decisions {
        let name = &ds.attribute_names[d.attribute];
        serde_json::to_writer(&mut out, &NamedDecision { name, decision: d })?;
        writeln!(out)?;
    }
    let kept: Vec<usize> = decisions.iter().filter(|d| d.keeps(a.filter)).map(|d| d.attribute).collect();
    let names = kept.iter().map(|&k| ds.attribute_names[k].as_str()).collect();
    serde_json::to_writer(&mut out, &Kept { filter: a.filter, kept, names })?;
    writeln!(out)?;
    Ok(())
}

#[derive(Serialize)]
struct RunSummary {
    filter: Filter,
    final_accuracy: f64,
    average_selected: f64,
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let cfg = a.cfg.config();
    cfg.validate(&a.filters)?;
    let ds = load_dataset(&a.data.data, &a.data.options()?)?;
    let ds = prepare(&ds, a.missing, a.seed);
    let report = run_incremental(&ds, &cfg, &a.filters)?;
    let format = a.format.unwrap_or_else(|| {
        match a.out.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => ReportFormat::Csv,
            _ => ReportFormat::Json,
        }
    });
    write_report(&report, &a.out, format)?;
    let mut out = std::io::stdout().lock();
    for run in &report.runs {
        let line = RunSummary {
            filter: run.filter,
            final_accuracy: run.final_accuracy,
            average_selected: run.average_selected,
        };
        serde_json::to_writer(&mut out, &line)?;
        writeln!(out)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct TtestOutput {
    a: Filter,
    b: Filter,
    k: usize,
    /// `null` when the differences are constant and non-zero.
    t: Option<f64>,
    df: usize,
    critical: f64,
    significant: bool,
    /// Prefix lengths `k` at which the difference is significant.
    significant_steps: usize,
}

fn cmd_ttest(a: TtestArgs) -> Result<()> {
    let [fa, fb] = a.pair[..] else {
        return Err(Error::Input(format!("--pair needs exactly two filters, got {}", a.pair.len())));
    };
    let report = read_report(&a.report)?;
    let per_k = compare_runs(&report, fa, fb)?;
    let (ra, rb) = (report.run(fa).unwrap(), report.run(fb).unwrap());
    let k = ra.correct.len();
    let test = paired_t_test(&ra.correct, &rb.correct, k)?;
    print_json(&TtestOutput {
        a: fa,
        b: fb,
        k,
        t: test.t.is_finite().then_some(test.t),
        df: test.df,
        critical: test.critical,
        significant: test.significant,
        significant_steps: per_k.significant.iter().filter(|&&s| s).count(),
    })
}

fn cmd_discretize(a: DiscretizeArgs) -> Result<()> {
    let input = BufReader::new(File::open(&a.data)?);
    let mut out = BufWriter::new(File::create(&a.out)?);
    let warnings = discretize_csv(input, &mut out, a.bins, &a.missing_token, &class_column(&a.class_column))?;
    out.flush()?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}
