//! `lipfree` command line: build diamond spaces, compute norms and
//! extensions, play and verify derivation games, and run the check suite.
//!
//! Exit codes: 0 pass, 1 check failure, 2 usage or input error, 3 point
//! budget exceeded.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use lipfree::decomposition::{
    bottom_neighborhood, build_cover, ell1_additivity_check, equivalence_constants,
    projection_identity_check, summing_metric, EquivalenceConstants,
};
use lipfree::derivation::{
    prover_certify, transcript_survives, verify_transcript, AdversaryConfig, AdversaryKind,
};
use lipfree::diamond::{Diamond, DiamondSpec, DEFAULT_POINT_BUDGET};
use lipfree::freespace::{free_norm, FreeVector};
use lipfree::io::{
    to_dot, FunctionFile, LoadedSpace, PartitionFile, SpaceFile, SpaceRef, TranscriptFile,
    VectorFile,
};
use lipfree::lipschitz::mcshane_extend;
use lipfree::ordinal::Ordinal;
use lipfree::rational::{format_rational, parse_rational, Rational};
use lipfree::suite::{run_suite, SuiteConfig};
use lipfree::Error;

#[derive(Parser)]
#[command(name = "lipfree", version, about = "Diamond spaces, exact free-space norms and derivation games")]
struct Cli {
    /// Worker threads; commands other than `suite` default to one.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SpaceArgs {
    /// Ordinal expression such as `3`, `w`, `w+2`, `w^2`.
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long, default_value_t = 3)]
    branches: usize,
    #[arg(long, default_value_t = 3)]
    limit_width: usize,
    /// Read the space from a space file instead.
    #[arg(long, conflicts_with = "alpha")]
    space: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_POINT_BUDGET as u64)]
    budget_points: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Build a diamond and write its space file.
    Gen {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the finest edges as a DOT graph.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Print the distance between two labelled points.
    Dist {
        #[command(flatten)]
        space: SpaceArgs,
        x: String,
        y: String,
    },
    /// Exact norm of a vector file, with its transport certificate.
    Norm {
        vector: PathBuf,
        #[arg(long, default_value_t = DEFAULT_POINT_BUDGET as u64)]
        budget_points: u64,
        /// Write the certificate here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// McShane extension of a (partial) function file.
    Extend {
        function: PathBuf,
        /// Lipschitz bound, as `p/q`.
        #[arg(long, default_value = "1")]
        bound: String,
        #[arg(long, default_value_t = DEFAULT_POINT_BUDGET as u64)]
        budget_points: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certify the pole molecule against a seeded adversary.
    Game {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long)]
        depth: usize,
        #[arg(long, default_value = "random_lipschitz")]
        adversary: AdversaryKind,
        #[arg(long, default_value_t = 3)]
        count: usize,
        #[arg(long, default_value = "1/20")]
        eta: String,
        #[arg(long, default_value = "1")]
        epsilon: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check a transcript file from scratch.
    Verify {
        transcript: PathBuf,
        /// Also require the root to survive the finite derivation oracle.
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = DEFAULT_POINT_BUDGET as u64)]
        budget_points: u64,
        /// Write the transcript annotated with per-node status here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Cover, summing metric and l1-sum checks on a limit diamond.
    Decomp {
        #[command(flatten)]
        space: SpaceArgs,
        /// Random vectors for the additivity checks.
        #[arg(long, default_value_t = 30)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Write the partition of the bottom neighborhood here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run every acceptance check and write a report.
    Suite {
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Override the branch count of the escape-based checks.
        #[arg(long)]
        branches: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_POINT_BUDGET as u64)]
        budget_points: u64,
        /// Record wall times (makes the report machine dependent).
        #[arg(long)]
        timings: bool,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

enum Failure {
    Check(String),
    Usage(String),
    Budget(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::BudgetExceeded { .. } => Failure::Budget(e.to_string()),
            e => Failure::Usage(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn write_or_print(path: Option<&Path>, text: &str) -> Outcome {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn rational(s: &str) -> Result<Rational, Failure> {
    Ok(parse_rational(s)?)
}

fn parent(path: &Path) -> &Path {
    path.parent().unwrap_or(Path::new("."))
}

impl SpaceArgs {
    fn spec(&self) -> Result<DiamondSpec, Failure> {
        let alpha = self
            .alpha
            .as_deref()
            .ok_or_else(|| Failure::Usage("--alpha or --space is required".into()))?;
        let alpha: Ordinal = alpha.parse()?;
        Ok(DiamondSpec::new(alpha, self.branches, self.limit_width)?)
    }

    fn load(&self) -> Result<(LoadedSpace, SpaceRef), Failure> {
        let r = match &self.space {
            Some(p) => SpaceRef::File(p.clone()),
            None => SpaceRef::Diamond(self.spec()?),
        };
        Ok((r.load(Path::new("."), u128::from(self.budget_points))?, r))
    }

    fn diamond(&self) -> Result<Arc<Diamond>, Failure> {
        match self.load()?.0 {
            LoadedSpace::Diamond(d) => Ok(d),
            LoadedSpace::Plain(_) => Err(Failure::Usage("this command needs a diamond space".into())),
        }
    }
}

#[derive(Serialize)]
struct CertificateFile {
    value: String,
    plan: Vec<(String, String, String)>,
    potential: FunctionFile,
}

#[derive(Serialize)]
struct DecompReport {
    spec: DiamondSpec,
    points: usize,
    covers: bool,
    min_separation: String,
    min_separation_at: String,
    bottom_neighborhood_points: usize,
    constants: EquivalenceConstants,
    vectors: usize,
    additivity_failures: usize,
    projection_failures: usize,
}

fn gen(space: &SpaceArgs, out: Option<&Path>, dot: Option<&Path>) -> Outcome {
    let d = Diamond::build_with_budget(&space.spec()?, u128::from(space.budget_points))?;
    write_or_print(out, &SpaceFile::from_diamond(&d).to_json()?)?;
    if let Some(p) = dot {
        write_or_print(Some(p), &to_dot(&d.space))?;
    }
    Ok(())
}

fn dist(space: &SpaceArgs, x: &str, y: &str) -> Outcome {
    let (loaded, _) = space.load()?;
    let s = loaded.space();
    println!("{}", format_rational(s.d(s.index_of(x)?, s.index_of(y)?)));
    Ok(())
}

fn norm_cmd(path: &Path, budget: u64, out: Option<&Path>) -> Outcome {
    let file = VectorFile::from_json(&read(path)?)?;
    let loaded = file.space.load(parent(path), u128::from(budget))?;
    let space = loaded.space();
    let v: FreeVector = file.to_vector(space)?;
    let (value, cert) = free_norm(space, &v)?;
    println!("{}", format_rational(&value));
    for (s, t, m) in &cert.plan {
        println!("  {} -> {} : {}", space.label(*s), space.label(*t), format_rational(m));
    }
    if let Some(p) = out {
        let c = CertificateFile {
            value: format_rational(&value),
            plan: cert
                .plan
                .iter()
                .map(|(s, t, m)| (space.label(*s).into(), space.label(*t).into(), format_rational(m)))
                .collect(),
            potential: FunctionFile::new(file.space.clone(), space, &cert.potential)?,
        };
        let mut text = serde_json::to_string_pretty(&c).map_err(|e| Failure::Usage(e.to_string()))?;
        text.push('\n');
        write_or_print(Some(p), &text)?;
    }
    Ok(())
}

fn extend(path: &Path, bound: &str, budget: u64, out: Option<&Path>) -> Outcome {
    let file = FunctionFile::from_json(&read(path)?)?;
    let loaded = file.space.load(parent(path), u128::from(budget))?;
    let space = loaded.space();
    let f = file.to_function(space)?;
    let g = match mcshane_extend(space, &f, &rational(bound)?) {
        Err(e @ Error::NotLipschitz { .. }) => return Err(Failure::Check(e.to_string())),
        r => r?,
    };
    write_or_print(out, &FunctionFile::new(file.space.clone(), space, &g)?.to_json()?)
}

#[allow(clippy::too_many_arguments)]
fn game(
    space: &SpaceArgs,
    depth: usize,
    kind: AdversaryKind,
    count: usize,
    eta: &str,
    epsilon: &str,
    seed: u64,
    out: Option<&Path>,
) -> Outcome {
    let d = space.diamond()?;
    let config = AdversaryConfig::new(kind, count, rational(eta)?, seed)?;
    let t = match prover_certify(&d, depth, &config, &rational(epsilon)?) {
        Err(e @ Error::InsufficientBranching { .. }) => return Err(Failure::Check(e.to_string())),
        r => r?,
    };
    let report = verify_transcript(&d.space, &t);
    write_or_print(out, &TranscriptFile::new(&d.space, &t, Some(&report))?.to_json()?)?;
    if !report.passed() {
        return Err(Failure::Check("the generated transcript fails verification".into()));
    }
    eprintln!("certified depth {depth} on {} with {} nodes", d.spec, t.root.node_count());
    Ok(())
}

fn verify(path: &Path, oracle: bool, budget: u64, report_path: Option<&Path>) -> Outcome {
    let file = TranscriptFile::from_json(&read(path)?)?;
    let d = Diamond::build_with_budget(&file.space, u128::from(budget))?;
    let t = file.to_transcript(&d.space)?;
    let report = verify_transcript(&d.space, &t);
    if let Some(p) = report_path {
        write_or_print(Some(p), &TranscriptFile::new(&d.space, &t, Some(&report))?.to_json()?)?;
    }
    for node in report.failures() {
        for v in &node.violations {
            println!("FAIL {}: {v}", node.path);
        }
    }
    if !report.passed() {
        return Err(Failure::Check(format!("{} of {} nodes fail", report.failures().count(), report.nodes.len())));
    }
    if oracle && !transcript_survives(&d.space, &t)? {
        return Err(Failure::Check("root does not survive the derivation oracle".into()));
    }
    println!("pass: {} nodes verified", report.nodes.len());
    Ok(())
}

fn decomp(space: &SpaceArgs, count: usize, seed: u64, out: Option<&Path>, report: Option<&Path>) -> Outcome {
    use rand::{Rng, SeedableRng};
    let d = space.diamond()?;
    let cover = build_cover(&d)?;
    let (z, min) = cover.min_separation().expect("nonempty space");
    let (a, partition, _) = bottom_neighborhood(&d)?;
    let d1 = summing_metric(&a, &partition)?;
    let constants = equivalence_constants(&a, &d1)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (mut additivity_failures, mut projection_failures) = (0, 0);
    for _ in 0..count {
        let mut v = FreeVector::new();
        for _ in 0..rng.gen_range(1..=6) {
            let x = rng.gen_range(0..a.len());
            v.add_at(x, &Rational::new(rng.gen_range(-8..=8i64).into(), 4.into()));
        }
        if !ell1_additivity_check(&d1, &partition, &v)?.holds {
            additivity_failures += 1;
        }
        if projection_identity_check(&d1, &partition, &v)?.iter().any(|r| !r.holds) {
            projection_failures += 1;
        }
    }
    let r = DecompReport {
        spec: d.spec.clone(),
        points: d.len(),
        covers: cover.covers(d.len()),
        min_separation: min.to_string(),
        min_separation_at: d.space.label(z).into(),
        bottom_neighborhood_points: a.len(),
        constants,
        vectors: count,
        additivity_failures,
        projection_failures,
    };
    let mut text = serde_json::to_string_pretty(&r).map_err(|e| Failure::Usage(e.to_string()))?;
    text.push('\n');
    write_or_print(report, &text)?;
    if let Some(p) = out {
        write_or_print(Some(p), &PartitionFile::new(&a, &partition).to_json()?)?;
    }
    let pass = r.covers
        && min >= &lipfree::decomposition::Extended::Finite(Rational::new(1.into(), 2.into()))
        && additivity_failures == 0
        && projection_failures == 0;
    if pass {
        Ok(())
    } else {
        Err(Failure::Check("decomposition checks fail".into()))
    }
}

fn suite(config: SuiteConfig, report: Option<&Path>) -> Outcome {
    let r = run_suite(&config);
    for c in &r.checks {
        eprintln!("[{:?}] {}: {}", c.status, c.id, c.details);
    }
    write_or_print(report, &r.to_json()?)?;
    if r.passed() {
        Ok(())
    } else {
        Err(Failure::Check("suite failed".into()))
    }
}

fn run(cli: Cli) -> Outcome {
    let threads = match &cli.command {
        Command::Suite { .. } => cli.threads.unwrap_or(0),
        _ => cli.threads.unwrap_or(1),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    match &cli.command {
        Command::Gen { space, out, dot } => gen(space, out.as_deref(), dot.as_deref()),
        Command::Dist { space, x, y } => dist(space, x, y),
        Command::Norm { vector, budget_points, out } => norm_cmd(vector, *budget_points, out.as_deref()),
        Command::Extend { function, bound, budget_points, out } => {
            extend(function, bound, *budget_points, out.as_deref())
        }
        Command::Game { space, depth, adversary, count, eta, epsilon, seed, out } => {
            game(space, *depth, *adversary, *count, eta, epsilon, *seed, out.as_deref())
        }
        Command::Verify { transcript, oracle, budget_points, report } => {
            verify(transcript, *oracle, *budget_points, report.as_deref())
        }
        Command::Decomp { space, count, seed, out, report } => {
            decomp(space, *count, *seed, out.as_deref(), report.as_deref())
        }
        Command::Suite { quick, seed, branches, budget_points, timings, report } => {
            let base = if *quick { SuiteConfig::quick() } else { SuiteConfig::default() };
            let config = SuiteConfig {
                seed: *seed,
                branches: *branches,
                budget_points: *budget_points,
                timings: *timings,
                ..base
            };
            suite(config, report.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(m)) => {
            eprintln!("fail: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Budget(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
