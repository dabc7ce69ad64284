//! `lonely`: command-line front end for the lonely-core library.
//!
//! Exit status: 0 on success, 2 on usage errors, 1 when an instance is
//! rejected (guards, invalid parameters, I/O) or a check fails.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use lonely_core::experiments::{
    self, ExperimentConfig, ExperimentKind, RecordFormat, SurveyOutput,
};
use lonely_core::fourier::{certify_kappa, invariant_suite};
use lonely_core::graph::{build_coloring, coloring_report};
use lonely_core::independence::{
    count_dependent_subsets, dependent_fraction_bound, dependent_subset_bound, is_l_independent,
    sample_independent_fraction,
};
use lonely_core::{
    conjectured_bound, kappa_at_least, kappa_exact, kappa_grid, known_lower_bound, normalize,
    Rational, SpeedSet,
};

/// Environment variable read for `--seed` when the flag is absent.
pub const SEED_ENV: &str = "LONELY_SEED";

#[derive(Parser)]
#[command(
    name = "lonely",
    version,
    about = "Exact computations around the lonely runner conjecture"
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Human)]
    format: OutputFormat,

    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Human,
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Exact kappa(D) = sup_x min_d ||x d|| with its smallest witness.
    /// Checks the sharp sets {1..k} and the proven lower bounds (trivial 1/(2k), Chen, Chen-Cusick).
    Kappa(KappaArgs),
    /// L-independence in Z_p: relation search, exhaustive counts of dependent
    /// sets against (2L+1)^k C(p-1,k-1), and sampled independent fractions.
    #[command(subcommand)]
    Independence(IndependenceCommand),
    /// Certificate kappa(D) >= 1/2 - eps for sets that are L-independent in Z_p
    /// with L above sqrt(k^3 3^(k-1) / (2^(k+1) eps^(2k))).
    Certify(CertifyArgs),
    /// Spectral invariant suite over Z_p: symmetry, inversion, |A^(0)| = |A|,
    /// interval bound |A^(r)| <= p/(2r), convolution theorem, counting-sum identity.
    FourierCheck(FourierArgs),
    /// Monte Carlo: P(kappa(D) >= 1/2 - eps) for random k-subsets of {1..n}
    /// (random sets are lonely), or L-independent fractions in Z_p with --p.
    Survey(SurveyArgs),
    /// Coloring of the distance graph G(D) from a kappa witness, chi(D) <= ceil(1/kappa(D)).
    Color(ColorArgs),
}

/// Comma-separated integer list as a single argument value.
#[derive(Clone, Debug)]
struct List(Vec<u64>);

fn parse_set(s: &str) -> Result<List, String> {
    s.split(',')
        .map(|tok| {
            let t = tok.trim();
            match t.parse::<u64>() {
                Ok(0) | Err(_) => Err(format!("invalid speed {t:?}: expected a positive integer")),
                Ok(v) => Ok(v),
            }
        })
        .collect::<Result<_, _>>()
        .map(List)
}

fn parse_list(s: &str) -> Result<List, String> {
    s.split(',')
        .map(|tok| {
            let t = tok.trim();
            t.parse::<u64>()
                .map_err(|_| format!("invalid integer {t:?}"))
        })
        .collect::<Result<_, _>>()
        .map(List)
}

fn parse_rational(s: &str) -> Result<Rational, String> {
    s.parse::<Rational>()
        .map_err(|_| format!("invalid rational {s:?}: expected num/den, e.g. 9/20"))
}

#[derive(Args)]
struct SetArg {
    /// Comma-separated positive speeds, e.g. 1,2,3 (duplicates are dropped).
    #[arg(long = "set", value_parser = parse_set)]
    set: List,
}

impl SetArg {
    fn speeds(&self) -> anyhow::Result<SpeedSet> {
        let (set, dropped) = SpeedSet::new_dedup(self.set.0.clone())?;
        if dropped > 0 {
            eprintln!("warning: dropped {dropped} duplicate speed(s)");
        }
        Ok(set)
    }
}

#[derive(Args)]
struct KappaArgs {
    #[command(flatten)]
    set: SetArg,
    /// Also report the grid oracle max_j f_D(j/G).
    #[arg(long)]
    grid: Option<u64>,
    /// Also decide kappa(D) >= THETA with early exit (THETA as num/den).
    #[arg(long, value_parser = parse_rational)]
    threshold: Option<Rational>,
}

#[derive(Subcommand)]
enum IndependenceCommand {
    /// Search for a relation sum d_i x_i = 0 (mod p) with 0 < sum |x_i| <= L.
    Check {
        #[command(flatten)]
        set: SetArg,
        #[arg(long)]
        p: u64,
        #[arg(long)]
        l: u64,
    },
    /// Count k-subsets of Z_p^* that are not L-independent.
    Count {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        k: u64,
        #[arg(long)]
        l: u64,
    },
    /// Estimate the L-independent fraction of random k-subsets.
    Sample {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        k: u64,
        #[arg(long)]
        l: u64,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        /// Master seed [env: LONELY_SEED]
        #[arg(long, env = SEED_ENV, hide_env = true, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    set: SetArg,
    #[arg(long)]
    p: u64,
    /// Rational epsilon in (0, 1/2), e.g. 9/20.
    #[arg(long, value_parser = parse_rational)]
    epsilon: Rational,
    /// Skip the exact kappa and counting-sum cross-checks.
    #[arg(long)]
    no_cross_check: bool,
}

#[derive(Args)]
struct FourierArgs {
    /// Primes to check.
    #[arg(long, value_parser = parse_list, default_value = "7,101,499")]
    p: List,
    /// Random intervals per prime for the interval bound.
    #[arg(long, default_value_t = 20)]
    intervals: u64,
    /// Seed [env: LONELY_SEED]
    #[arg(long, env = SEED_ENV, hide_env = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SurveyArgs {
    /// JSON experiment config; other flags are then not allowed except --seed.
    #[arg(long, conflicts_with_all = ["k", "epsilon", "n", "p", "trials", "threshold_mode", "l", "timing"])]
    config: Option<PathBuf>,
    #[arg(long)]
    k: Option<u64>,
    #[arg(long, value_parser = parse_rational)]
    epsilon: Option<Rational>,
    /// Ranges {1..n} to sample from (kappa survey).
    #[arg(long, value_parser = parse_list, conflicts_with = "p")]
    n: Option<List>,
    /// Primes for an L-independence sweep.
    #[arg(long, value_parser = parse_list)]
    p: Option<List>,
    #[arg(long, default_value_t = 100)]
    trials: u64,
    /// Master seed; overrides the config file and LONELY_SEED.
    #[arg(long, env = SEED_ENV, hide_env = true)]
    seed: Option<u64>,
    /// Decide kappa >= 1/2 - eps with early exit instead of computing kappa.
    #[arg(long)]
    threshold_mode: bool,
    /// Relation bound for sweeps (default: smallest L above the certificate threshold).
    #[arg(long)]
    l: Option<u64>,
    /// Record per-trial wall time (makes output non-reproducible).
    #[arg(long)]
    timing: bool,
    /// Also write the records to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = RecordsFormat::Csv)]
    out_format: RecordsFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum RecordsFormat {
    Csv,
    JsonLines,
}

impl From<RecordsFormat> for RecordFormat {
    fn from(f: RecordsFormat) -> Self {
        match f {
            RecordsFormat::Csv => RecordFormat::Csv,
            RecordsFormat::JsonLines => RecordFormat::JsonLines,
        }
    }
}

#[derive(Args)]
struct ColorArgs {
    #[command(flatten)]
    set: SetArg,
    /// Window {1..M} of vertices to color and verify.
    #[arg(long, default_value_t = 1000)]
    m: u64,
    /// Write the vertex,color table to this file.
    #[arg(long)]
    colors_out: Option<PathBuf>,
}

/// Emits one result in the requested format. `csv` is the full CSV body.
fn emit(format: OutputFormat, value: &Value, human: &str, csv: &str) -> anyhow::Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match format {
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, value)?;
            writeln!(out)?;
        }
        OutputFormat::Human => out.write_all(human.as_bytes())?,
        OutputFormat::Csv => {
            if let Some(config) = value.get("config") {
                eprintln!("# config: {config}");
            }
            out.write_all(csv.as_bytes())?;
        }
    }
    Ok(())
}

fn csv_row(header: &[&str], row: &[String]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    w.write_record(row).expect("in-memory write");
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

fn kappa_cmd(args: &KappaArgs, format: OutputFormat) -> anyhow::Result<ExitCode> {
    let d = args.set.speeds()?;
    let k = d.len() as u64;
    let r = kappa_exact(&d);
    let lower = known_lower_bound(k)?;
    let conj = conjectured_bound(k)?;
    let mut value = json!({
        "config": { "D": d, "grid": args.grid, "threshold": args.threshold },
        "kappa": r.value,
        "witness": r.witness,
        "candidates_evaluated": r.candidates_evaluated,
        "normalized": normalize(&d),
        "known_lower_bound": lower,
        "conjectured_bound": conj,
    });
    let mut human = format!(
        "# kappa D={{{d}}}\nkappa(D) = {} at x = {}\n",
        r.value, r.witness
    );
    human += &format!("candidates evaluated: {}\nproven lower bound for k={k}: {lower}\nconjectured bound: {conj}\n", r.candidates_evaluated);
    if let Some(g) = args.grid {
        let grid = kappa_grid(&d, g)?;
        human += &format!("grid oracle (G={g}): {grid}\n");
        value["grid_value"] = json!(grid);
    }
    if let Some(theta) = &args.threshold {
        let t = kappa_at_least(&d, theta)?;
        human += &format!("kappa >= {theta}: {}\n", t.reached);
        value["threshold_reached"] = json!(t.reached);
        value["threshold_witness"] = json!(t.witness);
    }
    let csv = csv_row(
        &["D", "kappa_num", "kappa_den", "witness_num", "witness_den"],
        &[
            d.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(";"),
            r.value.numer().to_string(),
            r.value.denom().to_string(),
            r.witness.numer().to_string(),
            r.witness.denom().to_string(),
        ],
    );
    emit(format, &value, &human, &csv)?;
    Ok(ExitCode::SUCCESS)
}

fn independence_cmd(cmd: &IndependenceCommand, format: OutputFormat) -> anyhow::Result<ExitCode> {
    match cmd {
        IndependenceCommand::Check { set, p, l } => {
            let d = set.speeds()?;
            let r = is_l_independent(&d, *p, *l)?;
            let value = json!({
                "config": { "D": d, "p": p, "L": l },
                "independent": r.independent,
                "witness": r.witness,
                "vectors_checked": r.vectors_checked,
            });
            let human = format!(
                "# independence check D={{{d}}} p={p} L={l}\nindependent: {}\n{}",
                r.independent,
                r.witness
                    .as_ref()
                    .map(|w| format!("relation: {w:?}\n"))
                    .unwrap_or_default()
            );
            let witness = r
                .witness
                .as_ref()
                .map(|w| {
                    w.iter()
                        .map(|x| x.to_string())
                        .collect::<Vec<_>>()
                        .join(";")
                })
                .unwrap_or_default();
            let csv = csv_row(
                &["p", "L", "independent", "witness", "vectors_checked"],
                &[
                    p.to_string(),
                    l.to_string(),
                    r.independent.to_string(),
                    witness,
                    r.vectors_checked.to_string(),
                ],
            );
            emit(format, &value, &human, &csv)?;
        }
        IndependenceCommand::Count { p, k, l } => {
            let count = count_dependent_subsets(*p, *k, *l)?;
            let bound = dependent_subset_bound(*p, *k, *l).context("bound overflows u128")?;
            let fraction = dependent_fraction_bound(*p, *k, *l)?;
            let value = json!({
                "config": { "p": p, "k": k, "L": l },
                "dependent": count,
                "bound": bound.to_string(),
                "fraction_bound": fraction,
            });
            let human = format!(
                "# independence count p={p} k={k} L={l}\ndependent subsets: {count}\nbound (2L+1)^k C(p-1,k-1): {bound}\nfraction bound: {fraction}\n"
            );
            let csv = csv_row(
                &["p", "k", "L", "dependent", "bound"],
                &[
                    p.to_string(),
                    k.to_string(),
                    l.to_string(),
                    count.to_string(),
                    bound.to_string(),
                ],
            );
            emit(format, &value, &human, &csv)?;
        }
        IndependenceCommand::Sample {
            p,
            k,
            l,
            trials,
            seed,
        } => {
            let e = sample_independent_fraction(*p, *k, *l, *trials, *seed)?;
            let bound = dependent_fraction_bound(*p, *k, *l)?;
            let value = json!({
                "config": { "p": p, "k": k, "L": l, "trials": trials, "seed": seed },
                "independent": e.independent,
                "fraction": e.fraction,
                "stderr": e.stderr,
                "dependent_fraction_bound": bound,
            });
            let human = format!(
                "# independence sample p={p} k={k} L={l} trials={trials} seed={seed}\nindependent fraction: {:.6} +- {:.6}\ndependent fraction bound: {bound}\n",
                e.fraction, e.stderr
            );
            let csv = csv_row(
                &[
                    "p",
                    "k",
                    "L",
                    "trials",
                    "seed",
                    "independent",
                    "fraction",
                    "stderr",
                ],
                &[
                    p.to_string(),
                    k.to_string(),
                    l.to_string(),
                    trials.to_string(),
                    seed.to_string(),
                    e.independent.to_string(),
                    e.fraction.to_string(),
                    e.stderr.to_string(),
                ],
            );
            emit(format, &value, &human, &csv)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn certify_cmd(args: &CertifyArgs, format: OutputFormat) -> anyhow::Result<ExitCode> {
    let d = args.set.speeds()?;
    let r = certify_kappa(&d, args.p, &args.epsilon, !args.no_cross_check)?;
    let mut value = r.diagnostic_json();
    value["config"] = json!({
        "D": d, "p": args.p, "epsilon": args.epsilon, "cross_check": !args.no_cross_check,
    });
    value["certified"] = json!(r.certified);
    value["threshold"] = json!(r.threshold);
    value["tail"] = json!(r.tail);
    let mut human = format!(
        "# certify D={{{d}}} p={} epsilon={}\nL threshold: sqrt({}) = {:.4}, L_used = {}\n",
        args.p, args.epsilon, r.threshold_radicand, r.threshold, r.l_used
    );
    match &r.independence.witness {
        None => {
            human += &format!(
                "{}-independent: yes => kappa(D) >= {}\n",
                r.l_used,
                Rational::half() - args.epsilon.clone()
            )
        }
        Some(w) => human += &format!("{}-independent: no, relation {w:?}\n", r.l_used),
    }
    human += &format!("arc size |C| = {}\n", r.arc_size);
    if let Some(c) = r.lonely_count {
        human += &format!("counting sum I = {c}, first lonely t = {:?}\n", r.witness_t);
    }
    if let Some(k) = &r.kappa_cross_check {
        human += &format!("exact kappa(D) = {} at x = {}\n", k.value, k.witness);
    }
    let csv = csv_row(
        &[
            "p",
            "epsilon",
            "D",
            "L_used",
            "independent",
            "I",
            "witness_t",
            "kappa",
            "arc_size",
        ],
        &[
            args.p.to_string(),
            args.epsilon.to_string(),
            d.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(";"),
            r.l_used.to_string(),
            r.certified.to_string(),
            r.lonely_count.map(|c| c.to_string()).unwrap_or_default(),
            r.witness_t.map(|t| t.to_string()).unwrap_or_default(),
            r.kappa_cross_check
                .as_ref()
                .map(|k| k.value.to_string())
                .unwrap_or_default(),
            r.arc_size.to_string(),
        ],
    );
    emit(format, &value, &human, &csv)?;
    Ok(ExitCode::SUCCESS)
}

fn fourier_cmd(args: &FourierArgs, format: OutputFormat) -> anyhow::Result<ExitCode> {
    let primes: Vec<u64> = args.p.0.clone();
    let mut checks = Vec::new();
    for &p in &primes {
        checks.extend(invariant_suite(p, args.intervals, args.seed)?);
    }
    let all = checks.iter().all(|c| c.passed);
    let value = json!({
        "config": { "p": primes, "intervals": args.intervals, "seed": args.seed },
        "passed": all,
        "checks": checks,
    });
    let mut human = format!(
        "# fourier-check p={primes:?} intervals={} seed={}\n",
        args.intervals, args.seed
    );
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["check", "p", "cases", "max_error", "tolerance", "passed"])?;
    for c in &checks {
        human += &format!(
            "{} {:<32} p={:<5} cases={:<6} max_error={:.3e} tol={:.0e}\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.p,
            c.cases,
            c.max_error,
            c.tolerance
        );
        w.write_record([
            c.name.clone(),
            c.p.to_string(),
            c.cases.to_string(),
            c.max_error.to_string(),
            c.tolerance.to_string(),
            c.passed.to_string(),
        ])?;
    }
    let csv = String::from_utf8(w.into_inner()?)?;
    emit(format, &value, &human, &csv)?;
    Ok(if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn survey_config(args: &SurveyArgs) -> anyhow::Result<ExperimentConfig> {
    let mut config = if let Some(path) = &args.config {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str::<ExperimentConfig>(&text)
            .with_context(|| format!("parsing {}", path.display()))?
    } else {
        let (Some(k), Some(epsilon)) = (args.k, args.epsilon.clone()) else {
            bail!("survey needs --k and --epsilon (or --config)");
        };
        let (kind, n_values, p_values) = match (&args.n, &args.p) {
            (Some(n), None) => (ExperimentKind::KappaSurvey, n.0.clone(), vec![]),
            (None, Some(p)) => (ExperimentKind::IndependenceSweep, vec![], p.0.clone()),
            _ => bail!("survey needs exactly one of --n or --p"),
        };
        ExperimentConfig {
            kind,
            n_values,
            p_values,
            k,
            epsilon,
            trials_per_point: args.trials,
            master_seed: 0,
            threshold_mode: args.threshold_mode,
            l: args.l,
            record_timing: args.timing,
        }
    };
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    Ok(config)
}

fn survey_cmd(args: &SurveyArgs, format: OutputFormat) -> anyhow::Result<ExitCode> {
    let config = survey_config(args)?;
    let out: SurveyOutput = experiments::run(&config)?;
    if let Some(path) = &args.out {
        experiments::persist(&out.records, path, args.out_format.into())?;
    }
    let value = serde_json::to_value(&out)?;
    let mut human = format!(
        "# survey {} k={} epsilon={} trials={} seed={} threshold_mode={}{}\n",
        config.kind.as_str(),
        config.k,
        config.epsilon,
        config.trials_per_point,
        config.master_seed,
        config.threshold_mode,
        out.l.map(|l| format!(" L={l}")).unwrap_or_default()
    );
    for s in &out.summary {
        human += &format!(
            "{:>12}  passed {:>6}/{:<6}  P = {:.4} +- {:.4}{}\n",
            s.n_or_p,
            s.passed,
            s.trials,
            s.probability,
            s.stderr,
            s.dependent_bound
                .as_ref()
                .map(|b| format!("  dependent bound {b}"))
                .unwrap_or_default()
        );
    }
    let mut csv = Vec::new();
    experiments::write_records(&out.records, &mut csv, RecordFormat::Csv)?;
    emit(format, &value, &human, &String::from_utf8(csv)?)?;
    Ok(ExitCode::SUCCESS)
}

fn color_cmd(args: &ColorArgs, format: OutputFormat) -> anyhow::Result<ExitCode> {
    let d = args.set.speeds()?;
    if args.m == 0 {
        bail!("--m must be at least 1");
    }
    let coloring = build_coloring(&d, args.m);
    let report = coloring_report(&coloring);
    if let Some(path) = &args.colors_out {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        coloring
            .write_csv(BufWriter::new(file))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let mut value = serde_json::to_value(&report)?;
    value["config"] = json!({ "D": d, "M": args.m });
    let human = format!(
        "# color D={{{d}}} M={}\nkappa(D) = {} at t = {}\ncolors N = ceil(1/kappa) = {}\ntrivial bound |D|+1 = {}\nfirst-fit bound on window = {}\nproper on window: {}\n",
        args.m,
        coloring.kappa,
        coloring.t,
        report.n_colors,
        report.trivial_bound,
        report.greedy_bound,
        report.proper
    );
    let mut csv = Vec::new();
    coloring.write_csv(&mut csv)?;
    emit(format, &value, &human, &String::from_utf8(csv)?)?;
    Ok(if report.proper {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn run(cli: &Cli) -> anyhow::Result<ExitCode> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring thread pool")?;
    }
    match &cli.command {
        Command::Kappa(a) => kappa_cmd(a, cli.format),
        Command::Independence(c) => independence_cmd(c, cli.format),
        Command::Certify(a) => certify_cmd(a, cli.format),
        Command::FourierCheck(a) => fourier_cmd(a, cli.format),
        Command::Survey(a) => survey_cmd(a, cli.format),
        Command::Color(a) => color_cmd(a, cli.format),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
