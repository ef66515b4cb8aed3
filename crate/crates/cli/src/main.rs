use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use folnerlab_core::density::{
    banach_densities, build_partition, class_counts, class_counts_csv, verify_partition, SetPredicate,
};
use folnerlab_core::dynamics::{
    independence_window, test_eps_independence, ConditioningSpec, Observable, SystemDescriptor,
};
use folnerlab_core::experiment::{run_convergence, ExperimentConfig, ObservableFile, SystemSpec};
use folnerlab_core::folner::{check_summability, temperedness_ratios, FolnerSequence, SizeMap};
use folnerlab_core::martingale::{azuma_harness, azuma_uniform, composite_tail_bound, gamma_constants, WalkSpec};
use folnerlab_core::{Error, ErrorKind, FiniteSubset, GroupDescriptor, GroupElement, Rational};

#[derive(Parser, Debug)]
#[command(name = "folnerlab", version, about = "Følner averages, density partitions and concentration experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Experiment config file (`converge`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for reports.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Sample or trial count.
    #[arg(long, global = true)]
    samples: Option<u64>,
    /// Comma-separated eps values.
    #[arg(long, global = true, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    /// Print only the final verdict.
    #[arg(long, global = true)]
    quiet: bool,
    /// Worker threads (overrides FOLNERLAB_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Summability and temperedness diagnostics for a Følner sequence.
    Folner(FolnerArgs),
    /// Lower and upper Banach densities of a residue set.
    Density(DensityArgs),
    /// Build the coset partition for K and verify its three conditions.
    Partition(PartitionArgs),
    /// Test eps-independence of an observable from the translates outside K.
    Independence(IndependenceArgs),
    /// Run a configured convergence experiment.
    Converge,
    /// Evaluate the gamma constants and composite tail bounds.
    Tails(TailsArgs),
    /// Compare Azuma's bound with simulated ±1 walks.
    Azuma(AzumaArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SeqKind {
    Interval,
    Box,
    Jump,
}

#[derive(Args, Debug)]
struct SeqArgs {
    #[arg(long, value_enum, default_value = "interval")]
    kind: SeqKind,
    /// Dimension for `box`.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Base for `jump`.
    #[arg(long, default_value_t = 4)]
    base: u64,
    /// Size exponent for `jump`: `|F_n| = n^p`.
    #[arg(long, default_value_t = 2)]
    power: u32,
}

impl SeqArgs {
    fn build(&self) -> Result<FolnerSequence, Error> {
        match self.kind {
            SeqKind::Interval => Ok(FolnerSequence::interval()),
            SeqKind::Box => FolnerSequence::boxes(self.dim),
            SeqKind::Jump => FolnerSequence::jump_shifted(self.base, SizeMap::Power(self.power)),
        }
    }
}

#[derive(Args, Debug)]
struct FolnerArgs {
    #[command(flatten)]
    seq: SeqArgs,
    #[arg(long, default_value_t = 8)]
    n_max: u64,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.9, 0.99])]
    alphas: Vec<f64>,
}

#[derive(Args, Debug)]
struct DensityArgs {
    #[arg(long)]
    modulus: i64,
    #[arg(long, value_delimiter = ',')]
    residues: Vec<i64>,
    #[arg(long, default_value_t = 16)]
    n_max: u64,
    #[arg(long, default_value_t = 64)]
    window: i64,
}

#[derive(Args, Debug)]
struct PartitionArgs {
    #[arg(long, default_value = "z")]
    group: String,
    /// `K = {0, ..., s-1}^d`.
    #[arg(long, conflicts_with = "k")]
    k_box: Option<i64>,
    /// Explicit K: elements separated by `;`, coordinates by `,`.
    #[arg(long)]
    k: Option<String>,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    /// Radius of the window scanned for violations.
    #[arg(long, default_value_t = 50)]
    window: i64,
    /// Index of the box Følner set used for the density conditions.
    #[arg(long, default_value_t = 12)]
    n_probe: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SystemKindArg {
    Bernoulli,
    Rotation,
}

#[derive(Args, Debug)]
struct IndependenceArgs {
    /// Observable definition file; overrides `--system`, `--group`, `--p`,
    /// `--window` and `--theta`.
    #[arg(long)]
    observable: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "bernoulli")]
    system: SystemKindArg,
    #[arg(long, default_value = "z")]
    group: String,
    /// Bernoulli success probability of symbol 1.
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Window of the all-ones indicator, `;`-separated elements.
    #[arg(long, default_value = "0")]
    window: String,
    /// K; defaults to `W^{-1} W` for Bernoulli and `{0}` for rotations.
    #[arg(long)]
    k: Option<String>,
    /// Rotation angle; defaults to `sqrt(2) - 1`.
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, default_value_t = ConditioningSpec::default().probe_radius)]
    probe_radius: i64,
    #[arg(long, default_value_t = ConditioningSpec::default().max_coords)]
    max_coords: usize,
}

#[derive(Args, Debug)]
struct TailsArgs {
    #[arg(long, default_value_t = 1)]
    r: usize,
    #[arg(long)]
    min_cell: usize,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// `|F_n|`; defaults to `min_cell`.
    #[arg(long)]
    size: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    sup_norm: f64,
}

#[derive(Args, Debug)]
struct AzumaArgs {
    #[arg(long, default_value_t = 400)]
    steps: u64,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
}

/// An outcome that is reported but counts as a failed verification.
struct Verdict(bool);

fn parse_elements(group: GroupDescriptor, text: &str) -> Result<FiniteSubset, Error> {
    let elems = text
        .split(';')
        .map(|e| {
            let coords = e
                .split(',')
                .map(|c| {
                    c.trim()
                        .parse::<i64>()
                        .map_err(|_| Error::InvalidParameter(format!("`{c}` is not an integer")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            GroupElement::new(&coords)
        })
        .collect::<Result<Vec<_>, _>>()?;
    FiniteSubset::from_elements(group, elems)
}

fn say(quiet: bool, line: impl AsRef<str>) {
    if !quiet {
        println!("{}", line.as_ref());
    }
}

fn folner(g: &Global, a: &FolnerArgs) -> Result<Verdict, Error> {
    let seq = a.seq.build()?;
    let summ = check_summability(&seq, a.n_max.max(2), &a.alphas)?;
    say(g.quiet, format!("sizes {:?}", summ.sizes));
    for s in &summ.partial_sums {
        say(
            g.quiet,
            format!("alpha={} partial sum {} last increment {:e}", s.alpha, s.partial_sums.last().copied().unwrap_or(0.0), s.last_increment()),
        );
    }
    let temp = temperedness_ratios(&seq, a.n_max)?;
    for (n, ratio) in &temp.ratios {
        say(g.quiet, format!("n={n} shulman ratio {ratio}"));
    }
    say(g.quiet, format!("temperedness on prefix: {:?}", temp.verdict));
    println!("summability {}", if summ.passes() { "certified" } else { "FAILED" });
    Ok(Verdict(summ.passes()))
}

fn density(g: &Global, a: &DensityArgs) -> Result<Verdict, Error> {
    let line = GroupDescriptor::integer_line();
    let s = SetPredicate::residues(line, a.modulus, &a.residues)?;
    let series = banach_densities(&s, &FolnerSequence::interval(), a.n_max, a.window)?;
    for p in &series.per_n {
        say(g.quiet, format!("n={} lower {} upper {}", p.n, p.lower.estimate, p.upper.estimate));
    }
    let (lo, hi) = series.limit();
    println!("lower density {} upper density {} ({:?})", lo.estimate, hi.estimate, lo.mode);
    if let Some(dir) = &g.out {
        let rows = class_counts(&FolnerSequence::interval(), a.n_max, 2, |x| usize::from(s.contains(x)))?;
        write_file(dir, "density.csv", &class_counts_csv(&rows))?;
    }
    Ok(Verdict(true))
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<(), Error> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), text)?;
    Ok(())
}

fn partition(g: &Global, a: &PartitionArgs) -> Result<Verdict, Error> {
    let group = GroupDescriptor::parse(&a.group)?;
    let k = match (&a.k, a.k_box) {
        (Some(text), _) => parse_elements(group, text)?,
        (None, Some(s)) if s >= 1 => FiniteSubset::cube(group, 0, s)?,
        (None, Some(s)) => return Err(Error::InvalidParameter(format!("--k-box must be >= 1, got {s}"))),
        (None, None) => return Err(Error::InvalidParameter("give --k or --k-box".into())),
    };
    let p = build_partition(&k, a.delta, group)?;
    let seq = match group.dim() {
        1 if group == GroupDescriptor::integer_line() => FolnerSequence::interval(),
        d => FolnerSequence::boxes(d)?,
    };
    let report = verify_partition(&p, &k, &seq, a.delta, a.window, a.n_probe)?;
    say(g.quiet, format!("|K| = {}, construction {:?}", k.len(), p.construction()));
    say(g.quiet, format!("D0 upper density {}", report.d0_upper.estimate));
    for (i, d) in report.class_lower.iter().enumerate() {
        say(g.quiet, format!("D{} lower density {}", i + 1, d.estimate));
    }
    for (x, y) in &report.violations {
        say(g.quiet, format!("violation: K{x} meets K{y}"));
    }
    if let Some(dir) = &g.out {
        let rows = class_counts(&seq, a.n_probe, p.r() + 1, |x| p.classify(x))?;
        write_file(dir, "partition.csv", &class_counts_csv(&rows))?;
        let mut v = String::from("x,y\n");
        for (x, y) in &report.violations {
            v.push_str(&format!("\"{x}\",\"{y}\"\n"));
        }
        write_file(dir, "violations.csv", &v)?;
    }
    println!(
        "r = {}, violations = {}, conditions {}/{}/{}",
        report.r,
        report.violation_count,
        report.condition1,
        report.condition2,
        report.condition3()
    );
    Ok(Verdict(report.passes()))
}

fn independence(g: &Global, a: &IndependenceArgs) -> Result<Verdict, Error> {
    let eps = g.eps.as_ref().and_then(|e| e.first().copied()).unwrap_or(0.1);
    let spec = ConditioningSpec {
        probe_radius: a.probe_radius,
        max_coords: a.max_coords,
        ..ConditioningSpec::default()
    };
    let (f, k) = if let Some(path) = &a.observable {
        let file = ObservableFile::from_path(path)?;
        let (sys, f) = file.build()?;
        let group = sys.group();
        let k = match (&a.k, &file.system) {
            (Some(text), _) => parse_elements(group, text)?,
            (None, SystemSpec::Bernoulli { .. }) => independence_window(&f)?,
            (None, SystemSpec::Rotation { .. }) => FiniteSubset::singleton(group, group.identity())?,
        };
        (f, k)
    } else {
        match a.system {
            SystemKindArg::Bernoulli => {
                let group = GroupDescriptor::parse(&a.group)?;
                let sys = SystemDescriptor::bernoulli(group, vec![0.0, 1.0], vec![1.0 - a.p, a.p])?;
                let f = Observable::all_equal(&sys, parse_elements(group, &a.window)?, 1)?;
                let k = match &a.k {
                    Some(text) => parse_elements(group, text)?,
                    None => independence_window(&f)?,
                };
                (f, k)
            }
            SystemKindArg::Rotation => {
                let sys = SystemDescriptor::rotation(a.theta.unwrap_or(std::f64::consts::SQRT_2 - 1.0))?;
                let f = Observable::arc(&sys, Rational::from_integer(0), Rational::new(1, 2))?;
                let line = GroupDescriptor::integer_line();
                let k = match &a.k {
                    Some(text) => parse_elements(line, text)?,
                    None => FiniteSubset::singleton(line, line.identity())?,
                };
                (f, k)
            }
        }
    };
    let r = test_eps_independence(&f, &k, eps, &spec)?;
    say(g.quiet, format!("K has {} elements; {} conditioning events checked", k.len(), r.events_checked));
    if let Some(w) = &r.witness {
        say(g.quiet, format!("witness {w}"));
    }
    if let Some(exact) = &r.exact_deviation {
        say(g.quiet, format!("exact deviation {exact}"));
    }
    println!(
        "max deviation {} ({:?}) vs eps {eps}: {}",
        r.max_deviation,
        r.exactness,
        if r.passes { "independent" } else { "NOT independent" }
    );
    Ok(Verdict(r.passes))
}

fn converge(g: &Global) -> Result<Verdict, Error> {
    let path = g
        .config
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("converge needs --config".into()))?;
    let mut cfg = ExperimentConfig::from_path(path)?;
    if let Some(seed) = g.seed {
        cfg.master_seed = seed;
    }
    if let Some(samples) = g.samples {
        cfg.samples = samples;
    }
    if let Some(eps) = &g.eps {
        cfg.eps = eps.clone();
    }
    let out = g
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("folnerlab-out"));
    let report = run_convergence(&cfg, g.threads)?;
    let files = report.write_to(&out)?;
    if !g.quiet {
        print!("{}", report.summary());
        for f in &files {
            println!("wrote {}", f.display());
        }
    }
    let dominated = report.tails.iter().all(|t| {
        [t.bound_paper, t.bound_derived]
            .into_iter()
            .flatten()
            .all(|b| t.empirical_tail <= b)
    });
    Ok(Verdict(dominated))
}

fn tails(g: &Global, a: &TailsArgs) -> Result<Verdict, Error> {
    let size = a.size.unwrap_or(a.min_cell);
    for eps in g.eps.clone().unwrap_or_else(|| vec![0.1]) {
        let gamma = gamma_constants(eps, a.sup_norm)?;
        let paper = composite_tail_bound(a.r, gamma.paper, a.min_cell, a.beta, size)?;
        let derived = composite_tail_bound(a.r, gamma.derived, a.min_cell, a.beta, size)?;
        let direct = azuma_uniform(eps * a.min_cell as f64 / 6.0, 2.0 * a.sup_norm, a.min_cell.max(1))?;
        println!(
            "eps={eps} gamma_paper={} gamma_derived={} per_n paper={} derived={} via_alpha paper={} derived={} azuma(eps|H|/6)={}",
            gamma.paper, gamma.derived, paper.per_n, derived.per_n, paper.via_alpha, derived.via_alpha, direct.raw
        );
    }
    Ok(Verdict(true))
}

fn azuma(g: &Global, a: &AzumaArgs) -> Result<Verdict, Error> {
    let trials = g.samples.unwrap_or(a.trials);
    let eps = g.eps.clone().unwrap_or_else(|| vec![10.0, 20.0, 40.0, 80.0]);
    let pool = rayon_threads(g.threads)?;
    let rows = pool.install(|| azuma_harness(WalkSpec { steps: a.steps }, trials, &eps, g.seed.unwrap_or(0)))?;
    let mut ok = true;
    for row in &rows {
        let within = row.empirical <= row.bound.capped;
        ok &= within;
        println!(
            "eps={} empirical={} bound={} (raw {}) {}",
            row.eps,
            row.empirical,
            row.bound.capped,
            row.bound.raw,
            if within { "ok" } else { "EXCEEDED" }
        );
    }
    Ok(Verdict(ok))
}

fn rayon_threads(threads: Option<usize>) -> Result<folnerlab_core::experiment::runner::Pool, Error> {
    folnerlab_core::experiment::runner::pool(threads)
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Usage | ErrorKind::Io => 1,
        ErrorKind::Resource => 2,
        ErrorKind::Verification => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let g = &cli.global;
    let result = match &cli.command {
        Command::Folner(a) => folner(g, a),
        Command::Density(a) => density(g, a),
        Command::Partition(a) => partition(g, a),
        Command::Independence(a) => independence(g, a),
        Command::Converge => converge(g),
        Command::Tails(a) => tails(g, a),
        Command::Azuma(a) => azuma(g, a),
    };
    match result {
        Ok(Verdict(true)) => ExitCode::SUCCESS,
        Ok(Verdict(false)) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
