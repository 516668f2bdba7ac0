use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use gwz_core::genfun::fixed_point_iterate;
use gwz_core::meanrec::{denominator_root_hint, PoleSearch};
use gwz_core::quadrec::{glued_occupation, glued_occupation_exact, verify_mean_quadratic};
use gwz_core::suite::FIXED_POINT_MAX_ITER;
use gwz_core::{
    beta_infinity_gcpf, conjecture_experiment, mc_mean_z, mc_mean_z_adaptive, mean_gcpf, mean_z,
    mean_z_sweep, verify_all, verify_fixed_point, verify_functional_equation,
    verify_q_power_identity, verify_regular_quadratic, AdaptiveDepth, BranchingLaw, EnergyCostSeq,
    Error, GluedSystem, McEstimate, Report,
};
use gwz_exact::json::parse_rational;
use gwz_exact::{BigInt, BigRational, RationalFn, TruncSeries};
use serde::Serialize;
use serde_json::json;

/// Default seed, so that runs without `--seed` are reproducible.
const DEFAULT_SEED: u64 = 42;

#[derive(Parser, Debug)]
#[command(
    name = "gwz",
    version,
    about = "Mean partition functions of log-Coulomb gases on Galton-Watson trees"
)]
struct Cli {
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Pretty)]
    format: Format,

    /// Write data here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Pretty,
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact mean canonical partition function Z̄_N.
    Meanz(MeanzArgs),
    /// Mean grand-canonical partition function through order T.
    Gcpf(GcpfArgs),
    /// Monte Carlo estimate of Z̄_N(β) from sampled trees.
    Mc(McArgs),
    /// Quadratic recurrences and occupation numbers.
    Quad(QuadArgs),
    /// Runs every exact verification for one law.
    VerifyAll(VerifyAllArgs),
    /// Z̄_N(β) on a grid of β as CSV rows `beta,value,status`.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
struct MeanzArgs {
    #[arg(long)]
    law: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    /// Emit JSON, to PATH when given.
    #[arg(long, value_name = "PATH", num_args = 0..=1)]
    json: Option<Option<PathBuf>>,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("mode").args(["verify", "fixed_point", "beta_inf"])))]
struct GcpfArgs {
    #[arg(long)]
    law: PathBuf,
    #[arg(long)]
    order: usize,
    /// Check the functional equation coefficientwise.
    #[arg(long)]
    verify: bool,
    /// Iterate the operator from 1 + t and compare with the recursion.
    #[arg(long)]
    fixed_point: bool,
    /// The β → ∞ limit series.
    #[arg(long)]
    beta_inf: bool,
    #[arg(long, default_value_t = FIXED_POINT_MAX_ITER)]
    max_iter: usize,
}

#[derive(Args, Debug)]
struct McArgs {
    #[arg(long)]
    law: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long, allow_hyphen_values = true)]
    beta: f64,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Fixed truncation depth; without it the depth adapts to `--tol`.
    #[arg(long)]
    depth: Option<usize>,
    /// Target enclosure width under adaptive depth.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Emit JSON, to PATH when given.
    #[arg(long, value_name = "PATH", num_args = 0..=1)]
    json: Option<Option<PathBuf>>,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("mode").required(true).args(["regular", "qpower", "glued", "conjecture"])))]
struct QuadArgs {
    /// Regular-tree quadratic recurrence, e.g. `q=2`.
    #[arg(long, value_name = "q=Q", value_parser = parse_q)]
    regular: Option<u32>,
    /// q-power identity for the regular tree, e.g. `q=3`.
    #[arg(long, value_name = "q=Q", value_parser = parse_q)]
    qpower: Option<u32>,
    /// Two law files: the tree T and the glued tree P.
    #[arg(long, num_args = 2, value_names = ["LAW_T", "LAW_P"])]
    glued: Option<Vec<PathBuf>>,
    /// Law file for the occupation-law experiment.
    #[arg(long)]
    conjecture: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    nmax: usize,
    #[arg(long, default_value_t = 10)]
    order: usize,
    /// zero, linear:c, pairlog:b, scaled:b or explicit:e0,e1,...
    #[arg(long, default_value = "zero", allow_hyphen_values = true)]
    costs: String,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 8)]
    depth: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args, Debug)]
struct VerifyAllArgs {
    #[arg(long)]
    law: PathBuf,
    #[arg(long, default_value_t = 8)]
    nmax: usize,
    #[arg(long, default_value_t = 8)]
    order: usize,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    law: PathBuf,
    #[arg(long)]
    n: usize,
    /// Comma-separated β values.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    betas: Vec<f64>,
}

fn parse_q(s: &str) -> Result<u32, String> {
    let v = s.strip_prefix("q=").unwrap_or(s);
    match v.parse::<u32>() {
        Ok(q) if q >= 2 => Ok(q),
        _ => Err(format!("expected q=Q with an integer Q >= 2, got `{s}`")),
    }
}

fn parse_costs(s: &str) -> Result<EnergyCostSeq, Error> {
    let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
    let num = |a: &str| {
        parse_rational(a.trim()).map_err(|e| Error::InvalidArgument(format!("cost `{s}`: {e}")))
    };
    match kind {
        "zero" => Ok(EnergyCostSeq::Zero),
        "linear" => Ok(EnergyCostSeq::Linear(num(arg)?)),
        "pairlog" => EnergyCostSeq::pair_log(num(arg)?),
        "scaled" => EnergyCostSeq::subtree_scaled(num(arg)?),
        "explicit" => EnergyCostSeq::explicit(arg.split(',').map(num).collect::<Result<_, _>>()?),
        _ => Err(Error::InvalidArgument(format!(
            "unknown cost `{s}`; use zero, linear:c, pairlog:b, scaled:b or explicit:e0,e1,..."
        ))),
    }
}

/// A failed run: exit 1 for a failed verification, 2 for bad input.
enum Failure {
    Verification,
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NoConvergence { .. } => {
                eprintln!("error[{}]: {e}", e.kind());
                Failure::Verification
            }
            e => Failure::Usage(format!("error[{}]: {e}", e.kind())),
        }
    }
}

type Outcome = Result<bool, Failure>;

fn load_law(path: &Path) -> Result<BranchingLaw, Failure> {
    let text = fs::read_to_string(path).map_err(|e| {
        Failure::Usage(format!(
            "error[LawFormat]: cannot read {}: {e}",
            path.display()
        ))
    })?;
    Ok(BranchingLaw::from_json(&text)?)
}

/// Six significant digits, like C's `%g`.
fn approx(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..6).contains(&exp) {
        return format!("{x:.5e}");
    }
    let digits = (5 - exp).max(0) as usize;
    let s = format!("{x:.digits$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// `u_q = q^{-β}` is rational when `β` is a small non-negative integer.
fn exact_at(z: &RationalFn, beta: f64) -> Option<BigRational> {
    if beta < 0.0 || beta.fract() != 0.0 || beta > 256.0 {
        return None;
    }
    let k = beta as u32;
    z.eval_exact(|q| BigRational::new(BigInt::from(1), BigInt::from(q).pow(k)))
        .ok()
}

struct Sink {
    format: Format,
    out: Option<PathBuf>,
}

impl Sink {
    fn emit(&self, text: &str) -> Result<(), Failure> {
        let mut text = text.to_string();
        if !text.ends_with('\n') {
            text.push('\n');
        }
        match &self.out {
            Some(path) => fs::write(path, text).map_err(|e| {
                Failure::Usage(format!("error: cannot write {}: {e}", path.display()))
            }),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    fn json<T: Serialize>(&self, value: &T) -> Result<(), Failure> {
        let text = serde_json::to_string_pretty(value).expect("serializable output");
        self.emit(&text)
    }

    fn reports(&self, reports: &[Report]) -> Outcome {
        match self.format {
            Format::Json if reports.len() == 1 => self.json(&reports[0])?,
            Format::Json => self.json(&reports)?,
            Format::Csv => {
                let mut s = String::from("check,order,zero,value\n");
                for r in reports {
                    for res in &r.residuals {
                        s.push_str(&format!(
                            "{},{},{},\"{}\"\n",
                            r.check, res.order, res.zero, res.value
                        ));
                    }
                }
                self.emit(&s)?;
            }
            Format::Pretty => {
                let lines: Vec<String> = reports
                    .iter()
                    .map(|r| match r.first_failure_order {
                        None => format!("{}: pass ({} orders)", r.check, r.residuals.len()),
                        Some(n) => {
                            format!("{}: FAIL, first nonzero residual at order {n}", r.check)
                        }
                    })
                    .collect();
                self.emit(&lines.join("\n"))?;
            }
        }
        Ok(reports.iter().all(|r| r.pass))
    }

    fn series(&self, label: &str, s: &TruncSeries) -> Outcome {
        match self.format {
            Format::Json => self.json(&json!({ "series": label, "coefficients": s.coeffs() }))?,
            Format::Csv => {
                let mut out = String::from("n,coefficient\n");
                for (n, c) in s.coeffs().iter().enumerate() {
                    out.push_str(&format!("{n},\"{c}\"\n"));
                }
                self.emit(&out)?;
            }
            Format::Pretty => {
                let lines: Vec<String> = s
                    .coeffs()
                    .iter()
                    .enumerate()
                    .map(|(n, c)| format!("t^{n}: {c}"))
                    .collect();
                self.emit(&lines.join("\n"))?;
            }
        }
        Ok(true)
    }
}

fn with_json(sink: &Sink, json: &Option<Option<PathBuf>>) -> Sink {
    match json {
        None => Sink {
            format: sink.format,
            out: sink.out.clone(),
        },
        Some(path) => Sink {
            format: Format::Json,
            out: path.clone().or_else(|| sink.out.clone()),
        },
    }
}

fn meanz(args: &MeanzArgs, sink: &Sink) -> Outcome {
    let law = load_law(&args.law)?;
    let z = mean_z(&law, args.n)?;
    let sink = with_json(sink, &args.json);
    let value = match args.beta {
        Some(b) => Some(
            z.eval_beta(b, gwz_exact::DEFAULT_POLE_EPS)
                .map_err(Error::from)?,
        ),
        None => None,
    };
    let exact = args.beta.and_then(|b| exact_at(&z, b));
    match sink.format {
        Format::Json => {
            let hint = denominator_root_hint(&z, &PoleSearch::default());
            sink.json(&json!({
                "law": law.to_json_value(),
                "N": args.n,
                "beta": args.beta,
                "mean_z": z,
                "value": value,
                "exact_value": exact.map(|e| e.to_string()),
                "denominator_roots_hint": hint.into_iter().collect::<Vec<f64>>(),
            }))?;
        }
        Format::Csv => {
            let v = value.map(|v| v.to_string()).unwrap_or_default();
            sink.emit(&format!(
                "n,beta,value,mean_z\n{},{},{v},\"{z}\"",
                args.n,
                args.beta.map(|b| b.to_string()).unwrap_or_default()
            ))?;
        }
        Format::Pretty => match (exact, value) {
            (Some(e), Some(v)) => sink.emit(&format!("{e} ≈ {}", approx(v)))?,
            (None, Some(v)) => sink.emit(&approx(v))?,
            _ => sink.emit(&z.to_string())?,
        },
    }
    Ok(true)
}

fn gcpf(args: &GcpfArgs, sink: &Sink) -> Outcome {
    let law = load_law(&args.law)?;
    if args.verify {
        return sink.reports(&[verify_functional_equation(&law, args.order)?]);
    }
    if args.fixed_point {
        if sink.format == Format::Pretty {
            let it = fixed_point_iterate(&law, args.order, args.max_iter)?;
            sink.series("fixed_point", &it)?;
        }
        let report = verify_fixed_point(&law, args.order, args.max_iter)?;
        return if sink.format == Format::Pretty {
            eprintln!(
                "{}",
                if report.pass {
                    "fixed point matches the recursion"
                } else {
                    "fixed point differs from the recursion"
                }
            );
            Ok(report.pass)
        } else {
            sink.reports(&[report])
        };
    }
    if args.beta_inf {
        return sink.series("beta_infinity", &beta_infinity_gcpf(&law, args.order));
    }
    sink.series("mean_gcpf", &mean_gcpf(&law, args.order)?.series)
}

fn mc(args: &McArgs, sink: &Sink) -> Outcome {
    let law = load_law(&args.law)?;
    let est: McEstimate = match args.depth {
        Some(d) => mc_mean_z(&law, args.n, args.beta, args.samples, d, args.seed)?,
        None => {
            let ctl = AdaptiveDepth {
                tol: args.tol,
                ..AdaptiveDepth::default()
            };
            mc_mean_z_adaptive(&law, args.n, args.beta, args.samples, args.seed, &ctl)?
        }
    };
    let sink = with_json(sink, &args.json);
    match sink.format {
        Format::Json => sink.json(&est)?,
        Format::Csv => sink.emit(&format!(
            "mean,std_error,samples,enclosure_width_max,depth,seed\n{},{},{},{},{},{}",
            est.mean, est.std_error, est.samples, est.enclosure_width_max, est.depth, est.seed
        ))?,
        Format::Pretty => sink.emit(&format!(
            "{} ± {} ({} samples, depth {}, enclosure width ≤ {})",
            approx(est.mean),
            approx(est.std_error),
            est.samples,
            est.depth,
            approx(est.enclosure_width_max)
        ))?,
    }
    Ok(true)
}

fn required<T: Copy>(v: Option<T>, name: &str) -> Result<T, Failure> {
    v.ok_or_else(|| Failure::Usage(format!("error: --{name} is required here")))
}

fn quad(args: &QuadArgs, sink: &Sink) -> Outcome {
    if let Some(q) = args.regular {
        return sink.reports(&[verify_regular_quadratic(q, args.nmax)?]);
    }
    if let Some(q) = args.qpower {
        return sink.reports(&[verify_q_power_identity(q, args.order)?]);
    }
    if let Some(paths) = &args.glued {
        let sys = GluedSystem::new(
            load_law(&paths[0])?,
            load_law(&paths[1])?,
            parse_costs(&args.costs)?,
            required(args.n, "n")?,
        );
        let beta = required(args.beta, "beta")?;
        let occupation = glued_occupation(&sys, beta)?;
        let report = verify_mean_quadratic(&sys, beta)?;
        let exact = match glued_occupation_exact(&sys) {
            Ok(e) => Some(e),
            Err(Error::UnsupportedExactCost) => None,
            Err(e) => return Err(e.into()),
        };
        let pass = report.pass;
        match sink.format {
            Format::Pretty => sink.emit(&format!(
                "E[N_P] = {}{}\n{}: {}",
                approx(occupation),
                exact.map(|e| format!(" (exactly {e})")).unwrap_or_default(),
                report.check,
                if pass { "pass" } else { "FAIL" }
            ))?,
            _ => sink.json(&json!({
                "law_t": sys.law_t.to_json_value(),
                "law_p": sys.law_p.to_json_value(),
                "costs": sys.costs.label(),
                "N": sys.n,
                "beta": beta,
                "occupation": occupation,
                "occupation_exact": exact,
                "report": report,
            }))?,
        }
        return Ok(pass);
    }
    let path = args.conjecture.as_ref().expect("clap enforces one mode");
    let law = load_law(path)?;
    let obs = conjecture_experiment(
        &law,
        required(args.beta, "beta")?,
        required(args.n, "n")?,
        args.samples,
        args.depth,
        args.seed,
    )?;
    match sink.format {
        Format::Pretty => sink.emit(&format!(
            "N/(E[Q]+1) = {}\nannealed, pair-log costs: {} (gap {})\nannealed, subtree-scaled costs: {} (gap {})\nquenched: {} ± {}",
            approx(obs.conjectured),
            approx(obs.literal),
            approx(obs.literal_gap),
            approx(obs.scaled),
            approx(obs.scaled_gap),
            approx(obs.quenched_mean),
            approx(obs.quenched_std_error)
        ))?,
        _ => sink.json(&obs)?,
    }
    Ok(true)
}

fn sweep(args: &SweepArgs, sink: &Sink) -> Outcome {
    let law = load_law(&args.law)?;
    let points = mean_z_sweep(&law, args.n, &args.betas)?;
    if sink.format == Format::Json {
        sink.json(&points)?;
        return Ok(true);
    }
    let mut s = String::from("beta,value,status\n");
    for p in &points {
        match p.value {
            Some(v) => s.push_str(&format!("{},{v},ok\n", p.beta)),
            None => s.push_str(&format!("{},,pole\n", p.beta)),
        }
    }
    sink.emit(&s)?;
    Ok(true)
}

fn run(cli: &Cli) -> Outcome {
    let sink = Sink {
        format: cli.format,
        out: cli.out.clone(),
    };
    match &cli.command {
        Command::Meanz(a) => meanz(a, &sink),
        Command::Gcpf(a) => gcpf(a, &sink),
        Command::Mc(a) => mc(a, &sink),
        Command::Quad(a) => quad(a, &sink),
        Command::VerifyAll(a) => {
            let law = load_law(&a.law)?;
            sink.reports(&verify_all(&law, a.nmax, a.order)?)
        }
        Command::Sweep(a) => sweep(a, &sink),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot start {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) | Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}
