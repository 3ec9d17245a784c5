//! The end-to-end check suite: every acceptance property of the library,
//! run at configurable sizes and summarised in a byte-stable report.
//!
//! Checks draw their randomness from ChaCha8 streams keyed by the suite seed
//! and the check id, so a report depends only on its configuration. Wall
//! times are recorded only when `timings` is set.

use std::time::{Duration, Instant};

use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomposition::{
    bottom_neighborhood, build_cover, ell1_additivity_check, equivalence_constants,
    projection_identity_check, summing_metric, Extended,
};
use crate::derivation::{
    in_neighborhood, midpoint_lift, play, pole_molecule, prover_certify, prover_escape,
    transcript_survives, verify_transcript, Adversary, AdversaryConfig, AdversaryKind,
    PoleMolecule, Strategy,
};
use crate::diamond::{Diamond, DiamondSpec, Side};
use crate::error::Error;
use crate::freespace::{free_norm, molecule, norm, norm_on_support, norm_statistics, pair, push_to_copy, FreeVector};
use crate::io::{FunctionFile, PartitionFile, SpaceFile, SpaceRef, TranscriptFile, VectorFile};
use crate::lipschitz::{check_lipschitz, copy_function, glue_poles, lip_constant, LipschitzFunction};
use crate::metric::MetricSpace;
use crate::ordinal::Ordinal;
use crate::rational::{format_rational, half, int, rat, Rational};

/// Time allowed for the metric oracle check.
pub const METRIC_ORACLE_LIMIT: Duration = Duration::from_secs(60);
/// Time allowed for the depth-3 games.
pub const DEPTH_THREE_LIMIT: Duration = Duration::from_secs(120);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Samples {
    pub random_molecules: usize,
    pub isometry_pairs: usize,
    pub subspace_vectors: usize,
    pub escape_families: usize,
    pub midpoints: usize,
    pub gluings: usize,
    pub decomposition_vectors: usize,
    pub mutants: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Adversary seeds for the depth games.
    pub game_seeds: Vec<u64>,
    pub budget_points: u64,
    /// Replaces the branch count of every space an escape runs on.
    pub branches: Option<usize>,
    pub samples: Samples,
    #[serde(skip)]
    pub timings: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 0,
            game_seeds: vec![1, 2, 3],
            budget_points: crate::diamond::DEFAULT_POINT_BUDGET as u64,
            branches: None,
            samples: Samples {
                random_molecules: 100,
                isometry_pairs: 100,
                subspace_vectors: 50,
                escape_families: 20,
                midpoints: 10,
                gluings: 50,
                decomposition_vectors: 30,
                mutants: 20,
            },
            timings: false,
        }
    }
}

impl SuiteConfig {
    /// Every check at reduced sample counts.
    pub fn quick() -> Self {
        SuiteConfig {
            game_seeds: vec![1],
            samples: Samples {
                random_molecules: 10,
                isometry_pairs: 10,
                subspace_vectors: 10,
                escape_families: 5,
                midpoints: 3,
                gluings: 10,
                decomposition_vectors: 5,
                mutants: 5,
            },
            ..Self::default()
        }
    }

    fn rng(&self, id: &str) -> ChaCha8Rng {
        let mut seed = [0u8; 32];
        seed[..8].copy_from_slice(&self.seed.to_le_bytes());
        for (k, b) in id.bytes().enumerate() {
            seed[8 + k % 24] ^= b;
        }
        ChaCha8Rng::from_seed(seed)
    }

    fn branches_or(&self, n: usize) -> usize {
        self.branches.unwrap_or(n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: String,
    /// The statement the check exercises.
    pub anchor: String,
    pub status: Status,
    pub details: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub game_seeds: Vec<u64>,
    pub config: SuiteConfig,
    pub checks: Vec<CheckResult>,
    /// `pass` iff no check failed.
    pub verdict: Status,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.verdict == Status::Pass
    }

    pub fn to_json(&self) -> crate::Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

enum Stop {
    Fail(String),
    Skip(String),
}

impl From<Error> for Stop {
    fn from(e: Error) -> Self {
        match e {
            Error::BudgetExceeded { .. } => Stop::Skip(e.to_string()),
            e => Stop::Fail(e.to_string()),
        }
    }
}

type Outcome = Result<String, Stop>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(Stop::Fail(format!($($msg)+)));
        }
    };
}

struct Check {
    id: &'static str,
    anchor: &'static str,
    run: fn(&SuiteConfig) -> Outcome,
}

const CHECKS: &[Check] = &[
    Check {
        id: "metric-oracle",
        anchor: "the recursive metric is the path metric of the finest edges",
        run: metric_oracle,
    },
    Check {
        id: "molecule-norms",
        anchor: "molecules have norm one",
        run: molecule_norms,
    },
    Check {
        id: "isometry",
        anchor: "x -> delta(x) is an isometry; norms are computed in any subspace containing the support",
        run: isometry,
    },
    Check {
        id: "duality-gap",
        anchor: "transport plan cost equals the dual pairing on every norm computation",
        run: duality_gap,
    },
    Check {
        id: "escape",
        anchor: "every weak neighborhood of the pole molecule holds a point at distance one",
        run: escape,
    },
    Check {
        id: "depth-games",
        anchor: "the pole molecule of a depth-k diamond survives k derivations",
        run: depth_games,
    },
    Check {
        id: "midpoint",
        anchor: "midpoints of certified points are certified at half the separation",
        run: midpoint,
    },
    Check {
        id: "gluing",
        anchor: "functions on opposite pole copies glue to a 1-Lipschitz function",
        run: gluing,
    },
    Check {
        id: "decomposition",
        anchor: "limit diamonds split into two pole neighborhoods with l1-sum structure",
        run: decomposition,
    },
    Check {
        id: "determinism",
        anchor: "identical seeds reproduce reports and transcripts; files round-trip; tampering is caught",
        run: determinism,
    },
];

/// Check ids in report order.
pub fn check_ids() -> Vec<&'static str> {
    CHECKS.iter().map(|c| c.id).collect()
}

fn execute(check: &Check, config: &SuiteConfig) -> CheckResult {
    let start = Instant::now();
    let (status, details) = match (check.run)(config) {
        Ok(d) => (Status::Pass, d),
        Err(Stop::Fail(d)) => (Status::Fail, d),
        Err(Stop::Skip(d)) => (Status::Skip, d),
    };
    CheckResult {
        id: check.id.into(),
        anchor: check.anchor.into(),
        status,
        details,
        wall_ms: config.timings.then(|| start.elapsed().as_millis() as u64),
    }
}

/// Runs one check by id.
pub fn run_check(id: &str, config: &SuiteConfig) -> Option<CheckResult> {
    CHECKS.iter().find(|c| c.id == id).map(|c| execute(c, config))
}

/// Runs the named checks (all when `ids` is empty) in parallel; the duality
/// check runs last so that it covers every norm computed before it.
pub fn run_checks(ids: &[&str], config: &SuiteConfig) -> SuiteReport {
    let selected: Vec<&Check> = CHECKS
        .iter()
        .filter(|c| ids.is_empty() || ids.contains(&c.id))
        .collect();
    let (last, first): (Vec<&Check>, Vec<&Check>) = selected.iter().partition(|c| c.id == "duality-gap");
    let before = norm_statistics();
    let mut results: Vec<CheckResult> = first.par_iter().map(|c| execute(c, config)).collect();
    for c in last {
        let mut r = execute(c, config);
        let after = norm_statistics();
        if r.status == Status::Pass && after.1 != before.1 {
            r.status = Status::Fail;
            r.details = format!("{} certificate failures during the suite", after.1 - before.1);
        }
        results.push(r);
    }
    results.sort_by_key(|r| CHECKS.iter().position(|c| c.id == r.id));
    let verdict = if results.iter().any(|r| r.status == Status::Fail) {
        Status::Fail
    } else {
        Status::Pass
    };
    SuiteReport {
        tool: "lipfree".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: config.seed,
        game_seeds: config.game_seeds.clone(),
        config: config.clone(),
        checks: results,
        verdict,
    }
}

pub fn run_suite(config: &SuiteConfig) -> SuiteReport {
    run_checks(&[], config)
}

fn build(config: &SuiteConfig, alpha: Ordinal, n: usize, width: usize) -> Result<std::sync::Arc<Diamond>, Stop> {
    Ok(Diamond::build_with_budget(
        &DiamondSpec::new(alpha, n, width)?,
        u128::from(config.budget_points),
    )?)
}

fn finite(config: &SuiteConfig, k: u64, n: usize) -> Result<std::sync::Arc<Diamond>, Stop> {
    build(config, Ordinal::finite(k), n, 1)
}

fn omega(config: &SuiteConfig) -> Result<std::sync::Arc<Diamond>, Stop> {
    build(config, Ordinal::omega(), 3, 3)
}

fn random_vector(rng: &mut ChaCha8Rng, points: usize, max_support: usize) -> FreeVector {
    let size = rng.gen_range(1..=max_support.min(points));
    let mut v = FreeVector::new();
    for x in rand::seq::index::sample(rng, points, size) {
        let k = loop {
            let k: i64 = rng.gen_range(-8..=8);
            if k != 0 {
                break k;
            }
        };
        v.add_at(x, &rat(k, 4));
    }
    v
}

fn distinct_pair(rng: &mut ChaCha8Rng, points: usize) -> (usize, usize) {
    let x = rng.gen_range(0..points);
    let y = (x + rng.gen_range(1..points)) % points;
    (x, y)
}

/// All-pairs shortest paths over `edges`, in units of `1/denom`.
fn floyd_warshall(n: usize, edges: &[(usize, usize, i64)]) -> Vec<i64> {
    let inf = i64::MAX / 4;
    let mut d = vec![inf; n * n];
    for x in 0..n {
        d[x * n + x] = 0;
    }
    for &(x, y, w) in edges {
        d[x * n + y] = d[x * n + y].min(w);
        d[y * n + x] = d[y * n + x].min(w);
    }
    for k in 0..n {
        for i in 0..n {
            let dik = d[i * n + k];
            if dik == inf {
                continue;
            }
            for j in 0..n {
                let via = dik + d[k * n + j];
                if via < d[i * n + j] {
                    d[i * n + j] = via;
                }
            }
        }
    }
    d
}

fn metric_oracle(config: &SuiteConfig) -> Outcome {
    let start = Instant::now();
    let mut specs: Vec<(Ordinal, usize, usize)> = Vec::new();
    for k in 1..=3 {
        for n in [3, 4] {
            specs.push((Ordinal::finite(k), n, 1));
        }
    }
    specs.push((Ordinal::omega(), 3, 3));
    let mut pairs = 0usize;
    for (alpha, n, width) in specs {
        let label = format!("{alpha}[{n}]");
        let d = build(config, alpha, n, width)?;
        let space = &d.space;
        let scaled = space.scaled().ok_or_else(|| Stop::Fail(format!("{label}: distances too large")))?;
        let scale = Rational::from_integer(scaled.denom.clone());
        let edges: Vec<(usize, usize, i64)> = space
            .finest_edges()
            .into_iter()
            .map(|(x, y, w)| (x, y, (w * &scale).to_integer().try_into().unwrap_or(i64::MAX / 4)))
            .collect();
        let closure = floyd_warshall(space.len(), &edges);
        for x in 0..space.len() {
            for y in 0..space.len() {
                let expected = Rational::new(closure[x * space.len() + y].into(), scaled.denom.clone());
                ensure!(
                    &expected == space.d(x, y),
                    "{label}: d({}, {}) = {} but the shortest path has length {}",
                    space.label(x),
                    space.label(y),
                    format_rational(space.d(x, y)),
                    format_rational(&expected)
                );
            }
        }
        pairs += space.len() * space.len();
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < METRIC_ORACLE_LIMIT, "took {elapsed:?}, limit {METRIC_ORACLE_LIMIT:?}");
    Ok(format!("7 spaces, {pairs} ordered pairs agree exactly"))
}

fn molecule_norms(config: &SuiteConfig) -> Outcome {
    let mut count = 0usize;
    for (k, n) in [(1, 4), (2, 3)] {
        let d = finite(config, k, n)?;
        let pairs: Vec<(usize, usize)> = (0..d.len())
            .flat_map(|x| (x + 1..d.len()).map(move |y| (x, y)))
            .collect();
        let bad = pairs
            .par_iter()
            .map(|&(x, y)| -> crate::Result<Option<String>> {
                let v = norm(&d.space, &molecule(&d.space, x, y)?)?;
                Ok((!v.is_one()).then(|| format!("D_{k}[{n}] m({x},{y}) has norm {}", format_rational(&v))))
            })
            .collect::<crate::Result<Vec<_>>>()?;
        if let Some(Some(m)) = bad.into_iter().find(Option::is_some) {
            return Err(Stop::Fail(m));
        }
        count += pairs.len();
    }
    let d = finite(config, 3, 3)?;
    let mut rng = config.rng("molecule-norms");
    for _ in 0..config.samples.random_molecules {
        let (x, y) = distinct_pair(&mut rng, d.len());
        let v = norm(&d.space, &molecule(&d.space, x, y)?)?;
        ensure!(v.is_one(), "D_3[3] m({x},{y}) has norm {}", format_rational(&v));
    }
    count += config.samples.random_molecules;
    Ok(format!("{count} molecules of norm exactly 1"))
}

fn isometry(config: &SuiteConfig) -> Outcome {
    let d = finite(config, 3, 3)?;
    let space = &d.space;
    let mut rng = config.rng("isometry");
    for _ in 0..config.samples.isometry_pairs {
        let (x, y) = distinct_pair(&mut rng, d.len());
        let v = &FreeVector::delta(x) - &FreeVector::delta(y);
        let n = norm(space, &v)?;
        ensure!(&n == space.d(x, y), "||delta({x}) - delta({y})|| = {} != d", format_rational(&n));
    }
    for _ in 0..config.samples.subspace_vectors {
        let v = random_vector(&mut rng, d.len(), 6);
        let whole = norm(space, &v)?;
        let local = norm_on_support(space, &v)?;
        ensure!(whole == local, "norm {} changes to {} on the support", format_rational(&whole), format_rational(&local));
    }
    Ok(format!(
        "{} pairs isometric, {} vectors invariant under restriction",
        config.samples.isometry_pairs, config.samples.subspace_vectors
    ))
}

/// Rechecks a certificate from scratch: feasible plan, cost, pairing and a
/// globally 1-Lipschitz potential all agree with the value.
fn duality_holds(space: &MetricSpace, v: &FreeVector) -> crate::Result<bool> {
    let (value, cert) = free_norm(space, v)?;
    let w = v.balanced(space.base());
    let mut marginal = FreeVector::new();
    let mut cost = Rational::zero();
    for (s, t, m) in &cert.plan {
        marginal.add_at(*s, m);
        marginal.add_at(*t, &-m);
        cost += m * space.d(*s, *t);
    }
    let dual = pair(&cert.potential, &w)?;
    Ok(marginal == w
        && cert.plan.iter().all(|(_, _, m)| m.is_positive())
        && cost == value
        && dual == value
        && lip_constant(space, &cert.potential)? <= int(1))
}

fn duality_gap(config: &SuiteConfig) -> Outcome {
    let mut rng = config.rng("duality-gap");
    let spaces = [finite(config, 2, 4)?, finite(config, 3, 3)?, omega(config)?];
    let before = norm_statistics();
    let mut checked = 0usize;
    for d in &spaces {
        for _ in 0..config.samples.subspace_vectors {
            let v = random_vector(&mut rng, d.len(), 8);
            ensure!(duality_holds(&d.space, &v)?, "gap on {v:?} in {}", d.spec);
            checked += 1;
        }
    }
    let after = norm_statistics();
    ensure!(after.0 > before.0, "no norm computations recorded");
    ensure!(after.1 == before.1, "{} certificate failures", after.1 - before.1);
    Ok(format!("{checked} certificates rechecked; no gap on any norm computation"))
}

fn escape(config: &SuiteConfig) -> Outcome {
    let d = finite(config, 1, config.branches_or(8))?;
    let space = &d.space;
    let pole = pole_molecule(&d);
    let mut pairs = Vec::new();
    for s in 0..config.samples.escape_families {
        let kind = AdversaryKind::ALL[s % 3];
        let cfg = AdversaryConfig::new(kind, 1 + s % 5, rat(1, 20), config.seed.wrapping_add(s as u64))?;
        let adv = Adversary::new(&cfg, d.clone())?;
        let nb = adv.pose("root", 1, &pole, &[])?;
        let e = prover_escape(&d, &nb)?;
        ensure!(in_neighborhood(space, &nb, &e.vector)?, "family {s}: escape outside the neighborhood");
        let sep = norm(space, &(&e.vector - &pole))?;
        ensure!(sep.is_one(), "family {s}: separation {}", format_rational(&sep));
        pairs.push(format!("({},{})", e.i, e.j));
    }
    Ok(format!(
        "{} families escaped at distance exactly 1; pairs {}",
        config.samples.escape_families,
        pairs.join(" ")
    ))
}

fn depth_games(config: &SuiteConfig) -> Outcome {
    let mut cases = Vec::new();
    for (k, n) in [(1u64, 8usize), (2, 4), (3, 3)] {
        let d = finite(config, k, config.branches_or(n))?;
        for kind in AdversaryKind::ALL {
            for &seed in &config.game_seeds {
                cases.push((d.clone(), k, kind, seed));
            }
        }
    }
    let outcomes: Vec<(u64, Duration, Result<usize, String>)> = cases
        .par_iter()
        .map(|(d, k, kind, seed)| {
            let start = Instant::now();
            let run = || -> Result<usize, String> {
                let cfg = AdversaryConfig::new(*kind, 3, rat(1, 20), *seed).map_err(|e| e.to_string())?;
                let t = prover_certify(d, *k as usize, &cfg, &int(1)).map_err(|e| e.to_string())?;
                let report = verify_transcript(&d.space, &t);
                if let Some(bad) = report.failures().next() {
                    return Err(format!("{} at {}: {:?}", d.spec, bad.path, bad.violations));
                }
                if !transcript_survives(&d.space, &t).map_err(|e| e.to_string())? {
                    return Err(format!("{}: root does not survive {k} oracle rounds", d.spec));
                }
                Ok(t.root.node_count())
            };
            let r = run().map_err(|e| format!("{kind} seed {seed}: {e}"));
            (*k, start.elapsed(), r)
        })
        .collect();
    let mut nodes = 0;
    let mut deepest = Duration::ZERO;
    for (k, elapsed, r) in outcomes {
        nodes += r.map_err(Stop::Fail)?;
        if k == 3 {
            deepest += elapsed;
        }
    }
    ensure!(deepest < DEPTH_THREE_LIMIT, "depth-3 games took {deepest:?}");
    Ok(format!("{} games certified, verified and surviving; {nodes} nodes", cases.len()))
}

fn midpoint(config: &SuiteConfig) -> Outcome {
    let shapes = [(1u64, 8usize, 1usize), (2, 4, 2), (2, 3, 1), (1, 4, 1), (2, 4, 1)];
    for s in 0..config.samples.midpoints {
        let (kk, n, k) = shapes[s % shapes.len()];
        let d = finite(config, kk, config.branches_or(n))?;
        let kind = AdversaryKind::ALL[s % 3];
        let adv = Adversary::new(&AdversaryConfig::new(kind, 3, rat(1, 20), config.seed.wrapping_add(s as u64))?, d.clone())?;
        let inner: std::sync::Arc<dyn Strategy> = std::sync::Arc::new(PoleMolecule::new(d.clone(), k, int(1))?);
        let t = play(inner.clone(), &adv)?;
        ensure!(verify_transcript(&d.space, &t).passed(), "case {s}: the inner certificate fails");
        let lifted = midpoint_lift(inner.clone(), -inner.target())?;
        ensure!(lifted.target().is_zero(), "case {s}: lifted target is not zero");
        ensure!(lifted.epsilon() == &half(), "case {s}: epsilon {}", format_rational(lifted.epsilon()));
        let t = play(lifted, &adv)?;
        let report = verify_transcript(&d.space, &t);
        ensure!(report.passed(), "case {s}: lifted certificate fails at {:?}", report.failures().next());
    }
    Ok(format!("{} zero-vector certificates at epsilon 1/2 verified", config.samples.midpoints))
}

fn gluing(config: &SuiteConfig) -> Outcome {
    let spaces = [finite(config, 2, 3)?, finite(config, 3, 3)?];
    let mut rng = config.rng("gluing");
    for s in 0..config.samples.gluings {
        let d = &spaces[s % 2];
        let pred = d.predecessor().expect("successor stage");
        let n = d.branches();
        let mut branches: Vec<usize> = (2..=n).collect();
        branches.shuffle(&mut rng);
        let (plus, minus) = (branches[0], branches[1]);
        let mut halves = Vec::new();
        for (side, b) in [(Side::Plus, plus), (Side::Minus, minus)] {
            let w = loop {
                let w = random_vector(&mut rng, pred.len(), 4).balanced(pred.base());
                if !w.is_zero() {
                    break w;
                }
            };
            let (_, cert) = free_norm(&pred.space, &w)?;
            let f = copy_function(d, side, b, &cert.potential)?;
            let gamma = push_to_copy(d, side, b, &w)?;
            halves.push((gamma, f));
        }
        let glued: LipschitzFunction = glue_poles(d, plus, &halves[0].1, minus, &halves[1].1)?;
        check_lipschitz(&d.space, &glued, &int(1))?;
        ensure!(glued.value(d.base())?.is_zero(), "gluing {s} does not vanish at the base");
        let np = norm(&d.space, &halves[0].0)?;
        let nm = norm(&d.space, &halves[1].0)?;
        let avg = (&halves[0].0 + &halves[1].0).scale(&half());
        let na = norm(&d.space, &avg)?;
        let epsilon = np.clone().min(nm.clone());
        ensure!(na >= epsilon, "gluing {s}: average norm {} below {}", format_rational(&na), format_rational(&epsilon));
        let witnessed = pair(&glued, &avg.balanced(d.base()))?;
        ensure!(
            witnessed == (&np + &nm) * half(),
            "gluing {s}: glued function pairs to {} with the average",
            format_rational(&witnessed)
        );
    }
    Ok(format!("{} gluings 1-Lipschitz, vanishing at the base and norming the average", config.samples.gluings))
}

fn decomposition(config: &SuiteConfig) -> Outcome {
    let d = omega(config)?;
    let cover = build_cover(&d)?;
    ensure!(cover.covers(d.len()), "A and B miss a point");
    let (z, min) = cover.min_separation().expect("nonempty space");
    ensure!(min >= &Extended::Finite(rat(1, 2)), "D({}) = {min} < 1/2", d.space.label(z));
    let min = min.clone();
    let (a, partition, _) = bottom_neighborhood(&d)?;
    let d1 = summing_metric(&a, &partition)?;
    let c = equivalence_constants(&a, &d1)?;
    ensure!(c.low >= rat(1, 3), "lower constant {}", format_rational(&c.low));
    ensure!(c.high <= int(1), "upper constant {}", format_rational(&c.high));
    let mut rng = config.rng("decomposition");
    for s in 0..config.samples.decomposition_vectors {
        let v = random_vector(&mut rng, a.len(), 6);
        let r = ell1_additivity_check(&d1, &partition, &v)?;
        ensure!(r.holds, "vector {s}: norm {} but parts sum to {}", format_rational(&r.whole), format_rational(&r.sum));
        for row in projection_identity_check(&d1, &partition, &v)? {
            ensure!(row.holds, "vector {s}: projection identity fails at n = {}: {row:?}", row.n);
        }
    }
    Ok(format!(
        "cover of {} points, min D = {min}, constants [{}, {}], {} vectors additive",
        d.len(),
        format_rational(&c.low),
        format_rational(&c.high),
        config.samples.decomposition_vectors
    ))
}

/// Adds a nonzero amount to one off-base coefficient of one vector in the
/// file, which no honest transcript can absorb.
fn mutate(file: &mut TranscriptFile, base: &str, rng: &mut ChaCha8Rng) {
    fn slots<'a>(node: &'a mut crate::io::NodeFile, out: &mut Vec<&'a mut Vec<(String, String)>>) {
        out.push(&mut node.target);
        for m in &mut node.moves {
            out.push(&mut m.center);
            out.push(&mut m.response);
            slots(&mut m.response_subtree, out);
            slots(&mut m.target_subtree, out);
        }
    }
    let mut all = Vec::new();
    slots(&mut file.root, &mut all);
    let mut candidates: Vec<(usize, usize)> = Vec::new();
    for (s, entries) in all.iter().enumerate() {
        for (e, (label, _)) in entries.iter().enumerate() {
            if label != base {
                candidates.push((s, e));
            }
        }
    }
    let (s, e) = *candidates.choose(rng).expect("transcript has vectors");
    let entry = &mut all[s][e];
    let delta = rat(rng.gen_range(1..=8) * if rng.gen_bool(0.5) { 1 } else { -1 }, 16);
    let old = crate::rational::parse_rational(&entry.1).expect("canonical file");
    entry.1 = format_rational(&(old + delta));
}

fn determinism(config: &SuiteConfig) -> Outcome {
    let d = finite(config, 2, 4)?;
    let space = &d.space;
    let spec_ref = SpaceRef::Diamond(d.spec.clone());
    let cfg = AdversaryConfig::new(AdversaryKind::AdaptiveDual, 3, rat(1, 20), config.seed)?;
    let t1 = prover_certify(&d, 2, &cfg, &int(1))?;
    let t2 = prover_certify(&d, 2, &cfg, &int(1))?;
    let report = verify_transcript(space, &t1);
    let j1 = TranscriptFile::new(space, &t1, Some(&report))?.to_json()?;
    let j2 = TranscriptFile::new(space, &t2, Some(&verify_transcript(space, &t2)))?.to_json()?;
    ensure!(j1 == j2, "two runs with seed {} give different transcripts", config.seed);

    let mut sub = config.clone();
    sub.timings = false;
    let r1 = run_checks(&["escape", "isometry"], &sub).to_json()?;
    let r2 = run_checks(&["escape", "isometry"], &sub).to_json()?;
    ensure!(r1 == r2, "two runs give different reports");

    let file = TranscriptFile::from_json(&j1)?;
    ensure!(file.to_json()? == j1, "transcript file is not byte-stable");
    ensure!(file.to_transcript(space)? == t1, "transcript does not re-import");

    let sf = SpaceFile::from_diamond(&d).to_json()?;
    let back = SpaceFile::from_json(&sf)?;
    ensure!(back.to_json()? == sf && &back.to_space()? == space, "space file does not round-trip");

    let mut rng = config.rng("determinism");
    for _ in 0..10 {
        let v = random_vector(&mut rng, d.len(), 5);
        let vf = VectorFile::new(spec_ref.clone(), space, &v)?.to_json()?;
        let back = VectorFile::from_json(&vf)?;
        ensure!(back.to_json()? == vf && back.to_vector(space)? == v, "vector file does not round-trip");
        let (_, cert) = free_norm(space, &v)?;
        let ff = FunctionFile::new(spec_ref.clone(), space, &cert.potential)?.to_json()?;
        let back = FunctionFile::from_json(&ff)?;
        ensure!(back.to_json()? == ff && back.to_function(space)? == cert.potential, "function file does not round-trip");
    }
    let w = omega(config)?;
    let (a, partition, _) = bottom_neighborhood(&w)?;
    let pf = PartitionFile::new(&a, &partition).to_json()?;
    let back = PartitionFile::from_json(&pf)?;
    ensure!(back.to_json()? == pf && back.to_partition(&a)? == partition, "partition file does not round-trip");

    let base = space.label(space.base()).to_string();
    for k in 0..config.samples.mutants {
        let mut m = file.clone();
        mutate(&mut m, &base, &mut rng);
        let tampered = m.to_transcript(space)?;
        ensure!(!verify_transcript(space, &tampered).passed(), "mutant {k} passes verification");
    }
    Ok(format!(
        "transcripts and reports reproducible; 5 file kinds round-trip; {} mutants rejected",
        config.samples.mutants
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floyd_warshall_on_a_path() {
        let d = floyd_warshall(3, &[(0, 1, 2), (1, 2, 3)]);
        assert_eq!(d, vec![0, 2, 5, 2, 0, 3, 5, 3, 0]);
    }

    #[test]
    fn report_serialisation_omits_wall_time_by_default() {
        let r = run_checks(&["isometry"], &SuiteConfig::quick());
        assert!(r.passed());
        assert!(!r.to_json().unwrap().contains("wall_ms"));
        let timed = SuiteConfig { timings: true, ..SuiteConfig::quick() };
        assert!(run_checks(&["isometry"], &timed).to_json().unwrap().contains("wall_ms"));
    }

    #[test]
    fn two_branches_fail_the_escape_with_advice() {
        let cfg = SuiteConfig { branches: Some(2), ..SuiteConfig::quick() };
        let r = run_check("escape", &cfg).unwrap();
        assert_eq!(r.status, Status::Fail);
        assert!(r.details.contains("retry with at least 3 branches"), "{}", r.details);
    }

    #[test]
    fn budget_overflow_is_a_skip() {
        let cfg = SuiteConfig { budget_points: 10, ..SuiteConfig::quick() };
        let r = run_checks(&["molecule-norms"], &cfg);
        assert_eq!(r.checks[0].status, Status::Skip);
        assert!(r.passed());
    }
}
