//! `copos`: command-line front end for the copositive toolkit.
//!
//! Exit codes: 0 verified or certified, 2 verified negative (a witness was
//! found), 3 inconclusive, 4 input error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use copositive::cones::{
    DEFAULT_MAX_DEPTH, DEFAULT_MAX_ITER, DEFAULT_SPN_TOL, DEFAULT_WITNESS_TOL,
};
use copositive::document::MatrixDocument;
use copositive::generate::{generate, GenKind, GenParams};
use copositive::harness::{search_t6, SampleMode, SearchParams};
use copositive::linalg::sym_eigen;
use copositive::{
    certify_k2n_with, certify_t5, check_copositive, check_spn, classify_s, is_nonneg, is_psd,
    CopositivityStatus, Error, K2nOptions, SpnOutcome, ThetaVector,
};
use serde_json::json;

const OUT_DIR_ENV: &str = "COPOS_OUT_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Outcome {
    Verified = 0,
    Negative = 2,
    Inconclusive = 3,
    InputError = 4,
}

#[derive(Parser)]
#[command(name = "copos", version, about = "Copositive and SPN cone toolkit")]
struct Cli {
    /// Directory for generated files when --out is not given.
    #[arg(long, env = OUT_DIR_ENV, global = true)]
    out_dir: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a matrix document.
    Gen(GenArgs),
    /// Test cone membership of a matrix document.
    Check(CheckArgs),
    /// Build an SPN certificate for a T5 or K2,n matrix.
    Certify(CertifyArgs),
    /// Classify S(theta) by its angles.
    Classify(ClassifyArgs),
    /// Search T6-patterned matrices for copositive matrices with no SPN split found.
    SearchT6(SearchArgs),
}

#[derive(Args)]
struct GenArgs {
    /// horn, hildebrand, s-theta, t5-spn, t5-theta, t5-bordered, t5-schur, k2n, tn, dominating
    kind: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Five comma-separated angles.
    #[arg(long, value_delimiter = ',')]
    theta: Option<Vec<f64>>,
    /// n of K2,n, or the order of T_n.
    #[arg(long)]
    n: Option<usize>,
    /// Upper bound on the nonnegative slack added by slack-taking kinds.
    #[arg(long)]
    slack: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Which {
    Psd,
    Nonneg,
    Copositive,
    Spn,
}

#[derive(Args)]
struct CheckArgs {
    file: PathBuf,
    #[arg(value_enum)]
    which: Which,
    /// PSD/nonnegativity tolerance, SPN certificate tolerance, or witness
    /// tolerance for copositivity.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
    max_depth: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
    /// Where to write the certificate or witness (default: next to FILE).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Target {
    T5,
    K2n,
}

#[derive(Args)]
struct CertifyArgs {
    file: PathBuf,
    #[arg(value_enum)]
    target: Target,
    /// Attempt K2,n with n > 4 heuristically.
    #[arg(long)]
    allow_beyond_proved: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Document whose metadata carries theta.
    file: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    theta: Option<Vec<f64>>,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "mixed")]
    mode: String,
    #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
    max_depth: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
    /// Witness tolerance for the copositivity check.
    #[arg(long, default_value_t = DEFAULT_WITNESS_TOL)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Ctx {
    out_dir: Option<PathBuf>,
    format: Format,
}

impl Ctx {
    /// `--out`, else `$COPOS_OUT_DIR/<default_name>`, else `fallback`.
    fn target(&self, out: &Option<PathBuf>, default_name: &str, fallback: Option<PathBuf>) -> Option<PathBuf> {
        out.clone()
            .or_else(|| self.out_dir.as_ref().map(|d| d.join(default_name)))
            .or(fallback)
    }

    fn emit(&self, text: String, value: serde_json::Value) {
        match self.format {
            Format::Text => println!("{text}"),
            Format::Json => println!("{}", serde_json::to_string_pretty(&value).unwrap()),
        }
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn sibling(file: &Path, suffix: &str) -> PathBuf {
    let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or("matrix");
    file.with_file_name(format!("{stem}.{suffix}.json"))
}

fn file_name(file: &Path, suffix: &str) -> String {
    let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or("matrix");
    format!("{stem}.{suffix}.json")
}

fn read_doc(path: &Path) -> anyhow::Result<MatrixDocument> {
    MatrixDocument::read(path).with_context(|| format!("reading {}", path.display()))
}

fn theta_arg(v: &Option<Vec<f64>>) -> anyhow::Result<Option<[f64; 5]>> {
    match v {
        None => Ok(None),
        Some(t) if t.len() == 5 => Ok(Some([t[0], t[1], t[2], t[3], t[4]])),
        Some(t) => bail!("--theta takes 5 comma-separated angles, got {}", t.len()),
    }
}

fn cmd_gen(ctx: &Ctx, args: &GenArgs) -> anyhow::Result<Outcome> {
    let kind: GenKind = args.kind.parse()?;
    let params = GenParams {
        theta: theta_arg(&args.theta)?,
        n: args.n,
        slack: args.slack,
    };
    let doc = generate(kind, &params, args.seed)?;
    let name = format!("{kind}-{}.json", args.seed);
    match ctx.target(&args.out, &name, None) {
        Some(path) => {
            write_json(&path, &doc)?;
            eprintln!("wrote {}", path.display());
        }
        None => println!("{}", doc.to_json()),
    }
    Ok(Outcome::Verified)
}

fn cmd_check(ctx: &Ctx, args: &CheckArgs) -> anyhow::Result<Outcome> {
    let doc = read_doc(&args.file)?;
    let a = doc.matrix()?;
    let which = format!("{:?}", args.which).to_lowercase();
    let target = ctx.target(
        &args.out,
        &file_name(&args.file, &which),
        Some(sibling(&args.file, &which)),
    );
    let (outcome, text, value) = match args.which {
        Which::Psd => {
            let tol = args.tol.unwrap_or(1e-9);
            let (ok, lambda) = is_psd(&a, tol);
            let eig = sym_eigen(&a);
            let value = json!({ "psd": ok, "lambda_min": lambda, "tol": tol, "eigenvector": eig.vectors[0] });
            let outcome = if ok { Outcome::Verified } else { Outcome::Negative };
            (outcome, format!("psd: {ok} (lambda_min = {lambda:e})"), value)
        }
        Which::Nonneg => {
            let tol = args.tol.unwrap_or(0.0);
            let (ok, m) = is_nonneg(&a, tol);
            let value = json!({ "nonneg": ok, "min_entry": m, "tol": tol });
            let outcome = if ok { Outcome::Verified } else { Outcome::Negative };
            (outcome, format!("nonneg: {ok} (min entry = {m:e})"), value)
        }
        Which::Copositive => {
            let tol = args.tol.unwrap_or(DEFAULT_WITNESS_TOL);
            let v = check_copositive(&a, args.max_depth, tol)?;
            let outcome = match v.status {
                CopositivityStatus::Copositive => Outcome::Verified,
                CopositivityStatus::NotCopositive => Outcome::Negative,
                CopositivityStatus::Inconclusive => Outcome::Inconclusive,
            };
            let mut text = format!("{} (depth {}, {} cells)", v.status, v.depth, v.cells);
            if let (Some(x), Some(q)) = (&v.witness, v.witness_value) {
                text.push_str(&format!("\nwitness x = {x:?}, x'Ax = {q:e}"));
            }
            (outcome, text, serde_json::to_value(&v)?)
        }
        Which::Spn => {
            let tol = args.tol.unwrap_or(DEFAULT_SPN_TOL);
            let out = check_spn(&a, args.max_iter, tol);
            let (outcome, text) = match &out {
                SpnOutcome::Certified { iterations, .. } => {
                    (Outcome::Verified, format!("CERTIFIED after {iterations} iterations"))
                }
                SpnOutcome::NotFound { gap, iterations } => (
                    Outcome::Inconclusive,
                    format!("NOT_FOUND after {iterations} iterations, gap = {gap:e} (numerical evidence, not a proof)"),
                ),
            };
            (outcome, text, serde_json::to_value(&out)?)
        }
    };
    if let Some(path) = target {
        write_json(&path, &value)?;
        eprintln!("wrote {}", path.display());
    }
    ctx.emit(text, value);
    Ok(outcome)
}

fn cmd_certify(ctx: &Ctx, args: &CertifyArgs) -> anyhow::Result<Outcome> {
    let doc = read_doc(&args.file)?;
    let a = doc.matrix()?;
    let result = match args.target {
        Target::T5 => certify_t5(&a),
        Target::K2n => certify_k2n_with(
            &a,
            K2nOptions {
                allow_beyond_proved: args.allow_beyond_proved,
            },
        ),
    };
    let trace = match result {
        Ok(t) => t,
        Err(Error::CertificationFailed(diag)) => {
            eprintln!("certification failed:");
            for d in &diag {
                eprintln!("  {d}");
            }
            return Ok(Outcome::Inconclusive);
        }
        Err(e) => return Err(e.into()),
    };
    let report = trace.certificate.report(&a);
    let path = ctx
        .target(&args.out, &file_name(&args.file, "trace"), Some(sibling(&args.file, "trace")))
        .expect("fallback given");
    write_json(&path, &trace)?;
    eprintln!("wrote {}", path.display());
    let chain: Vec<String> = trace.chain.iter().map(|r| r.to_string()).collect();
    ctx.emit(
        format!(
            "route {} (chain {}), residual {:e}, lambda_min(P) {:e}, min(N) {:e}, valid {}",
            trace.route,
            chain.join(" -> "),
            report.residual,
            report.lambda_min_p,
            report.min_entry_n,
            report.valid
        ),
        json!({ "route": trace.route, "chain": trace.chain, "report": report }),
    );
    Ok(if report.valid { Outcome::Verified } else { Outcome::Inconclusive })
}

fn cmd_classify(ctx: &Ctx, args: &ClassifyArgs) -> anyhow::Result<Outcome> {
    let theta = match (theta_arg(&args.theta)?, &args.file) {
        (Some(t), _) => ThetaVector::new(t)?,
        (None, Some(f)) => read_doc(f)?
            .metadata
            .theta
            .ok_or_else(|| anyhow!("{} has no theta in its metadata", f.display()))?,
        (None, None) => bail!("give --theta or a document with theta metadata"),
    };
    let class = classify_s(&theta);
    ctx.emit(
        format!("{class}"),
        json!({ "theta": theta, "class": class, "sum": theta.sum() }),
    );
    Ok(Outcome::Verified)
}

fn cmd_search(ctx: &Ctx, args: &SearchArgs) -> anyhow::Result<Outcome> {
    let params = SearchParams {
        samples: args.samples,
        seed: args.seed,
        mode: args.mode.parse::<SampleMode>()?,
        max_depth: args.max_depth,
        max_iter: args.max_iter,
        tol_w: args.tol,
        spn_tol: DEFAULT_SPN_TOL,
    };
    let report = search_t6(&params)?;
    let name = format!("search-t6-{}.json", args.seed);
    if let Some(path) = ctx.target(&args.out, &name, None) {
        fs::write(&path, report.to_json() + "\n").with_context(|| format!("writing {}", path.display()))?;
        eprintln!("wrote {}", path.display());
    }
    eprintln!("wall time {:.2} s", report.wall_time_s);
    ctx.emit(
        format!(
            "{} samples: {} not copositive, {} inconclusive, {} certified SPN, {} unresolved candidates",
            report.samples,
            report.not_copositive,
            report.inconclusive,
            report.certified,
            report.candidates.len()
        ),
        serde_json::to_value(&report)?,
    );
    Ok(Outcome::Verified)
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(Outcome::InputError as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let ctx = Ctx {
        out_dir: cli.out_dir,
        format: cli.format,
    };
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(&ctx, a),
        Command::Check(a) => cmd_check(&ctx, a),
        Command::Certify(a) => cmd_certify(&ctx, a),
        Command::Classify(a) => cmd_classify(&ctx, a),
        Command::SearchT6(a) => cmd_search(&ctx, a),
    };
    match result {
        Ok(o) => ExitCode::from(o as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(Outcome::InputError as u8)
        }
    }
}
