//! Seeded adversaries posing weak neighborhoods.
//!
//! Round 0 at every node poses one fixed family drawn from the seed alone.
//! Later rounds draw from a generator seeded by `(seed, node path, round)`, so
//! a transcript is a pure function of the configuration.
//!
//! Random families are built from values on "resolved" points, whose
//! addresses only use branch indices up to the configured resolution, plus a
//! small global perturbation bounded by `eta`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::WeakNeighborhood;
use crate::diamond::Diamond;
use crate::error::{Error, Result};
use crate::freespace::FreeVector;
use crate::lipschitz::{mcshane_extend, LipschitzFunction};
use crate::metric::MetricSpace;
use crate::rational::{int, rat, serde_rational, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryKind {
    RandomLipschitz,
    DistanceFunctions,
    /// Reuses the norming potentials of earlier targets on the current branch.
    AdaptiveDual,
}

impl AdversaryKind {
    pub const ALL: [AdversaryKind; 3] = [
        AdversaryKind::RandomLipschitz,
        AdversaryKind::DistanceFunctions,
        AdversaryKind::AdaptiveDual,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AdversaryKind::RandomLipschitz => "random_lipschitz",
            AdversaryKind::DistanceFunctions => "distance_functions",
            AdversaryKind::AdaptiveDual => "adaptive_dual",
        }
    }
}

impl fmt::Display for AdversaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AdversaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AdversaryKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown adversary kind {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversaryConfig {
    pub kind: AdversaryKind,
    /// Functionals per neighborhood.
    pub count: usize,
    #[serde(with = "serde_rational")]
    pub eta: Rational,
    pub seed: u64,
    /// Neighborhoods posed at every internal node.
    pub rounds: usize,
    /// Largest branch index a resolved point may use.
    pub resolution: usize,
}

impl AdversaryConfig {
    pub const DEFAULT_ROUNDS: usize = 2;
    pub const DEFAULT_RESOLUTION: usize = 1;

    pub fn new(kind: AdversaryKind, count: usize, eta: Rational, seed: u64) -> Result<Self> {
        let c = AdversaryConfig {
            kind,
            count,
            eta,
            seed,
            rounds: Self::DEFAULT_ROUNDS,
            resolution: Self::DEFAULT_RESOLUTION,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::Invalid("adversary count must be at least 1".into()));
        }
        if !self.eta.is_positive() {
            return Err(Error::Invalid("eta must be positive".into()));
        }
        if self.rounds == 0 {
            return Err(Error::Invalid("at least one round per node".into()));
        }
        if self.resolution == 0 {
            return Err(Error::Invalid("resolution must be at least 1".into()));
        }
        Ok(())
    }
}

/// `d(., p) - d(base, p)`.
pub fn distance_function(space: &MetricSpace, p: usize) -> LipschitzFunction {
    let shift = space.d(space.base(), p).clone();
    LipschitzFunction::total((0..space.len()).map(|x| space.d(x, p) - &shift).collect())
}

/// A 1-Lipschitz function vanishing at the base point, McShane-extended from
/// random values at a few points of `pool` (values on a grid of step 1/8,
/// each within the interval left feasible by the earlier ones).
fn random_anchored(space: &MetricSpace, rng: &mut ChaCha8Rng, pool: &[usize]) -> Result<LipschitzFunction> {
    let base = space.base();
    let mut assigned: Vec<(usize, Rational)> = vec![(base, int(0))];
    let anchors = rng.gen_range(1..=4usize);
    for _ in 0..anchors {
        let x = *pool.choose(rng).ok_or(Error::EmptyDomain)?;
        if assigned.iter().any(|(y, _)| *y == x) {
            continue;
        }
        let lo = assigned
            .iter()
            .map(|(y, v)| v - space.d(x, *y))
            .max()
            .unwrap();
        let hi = assigned
            .iter()
            .map(|(y, v)| v + space.d(x, *y))
            .min()
            .unwrap();
        let steps = ((&hi - &lo) * int(8)).floor().to_integer().to_u64().unwrap_or(0);
        let k = rng.gen_range(0..=steps.min(64)) as i64;
        assigned.push((x, lo + rat(k, 8)));
    }
    let partial = LipschitzFunction::partial(space.len(), assigned)?;
    mcshane_extend(space, &partial, &int(1))
}

/// `(1 - theta) s + theta p` with `s` anchored at resolved points, `p`
/// anchored anywhere and `0 < theta <= min(eta, 1)`.
pub fn random_lipschitz(
    space: &MetricSpace,
    rng: &mut ChaCha8Rng,
    resolved: &[usize],
    eta: &Rational,
) -> Result<LipschitzFunction> {
    let s = random_anchored(space, rng, resolved)?;
    let everything: Vec<usize> = (0..space.len()).collect();
    let p = random_anchored(space, rng, &everything)?;
    let cap = if eta < &Rational::one() { eta.clone() } else { Rational::one() };
    let theta = cap * rat(rng.gen_range(1..=8), 8);
    s.combine(&(Rational::one() - &theta), &p, &theta)
}

/// 64-bit mixing of the seed with a node path and round.
fn node_seed(seed: u64, path: &str, round: usize) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    let mut h = mix(seed);
    for b in path.bytes() {
        h = mix(h ^ u64::from(b));
    }
    mix(h ^ round as u64)
}

#[derive(Debug)]
pub struct Adversary {
    config: AdversaryConfig,
    diamond: Arc<Diamond>,
    resolved: Vec<usize>,
    base_family: Vec<LipschitzFunction>,
}

impl Adversary {
    pub fn new(config: &AdversaryConfig, diamond: Arc<Diamond>) -> Result<Self> {
        config.validate()?;
        let resolved = diamond.resolved_points(config.resolution);
        let mut adv = Adversary {
            config: config.clone(),
            diamond,
            resolved,
            base_family: Vec::new(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(node_seed(config.seed, "base", 0));
        adv.base_family = adv.family(&mut rng, &[])?;
        Ok(adv)
    }

    pub fn config(&self) -> &AdversaryConfig {
        &self.config
    }

    /// The family posed in round 0 at every internal node.
    pub fn base_family(&self) -> &[LipschitzFunction] {
        &self.base_family
    }

    fn distance_family(&self, rng: &mut ChaCha8Rng, count: usize) -> Vec<LipschitzFunction> {
        (0..count)
            .map(|_| {
                let p = *self.resolved.choose(rng).expect("base point is resolved");
                distance_function(&self.diamond.space, p)
            })
            .collect()
    }

    fn family(&self, rng: &mut ChaCha8Rng, pool: &[LipschitzFunction]) -> Result<Vec<LipschitzFunction>> {
        let count = self.config.count;
        let space = &self.diamond.space;
        match self.config.kind {
            AdversaryKind::DistanceFunctions => Ok(self.distance_family(rng, count)),
            AdversaryKind::RandomLipschitz => (0..count)
                .map(|_| random_lipschitz(space, rng, &self.resolved, &self.config.eta))
                .collect(),
            AdversaryKind::AdaptiveDual => {
                let mut picked: Vec<LipschitzFunction> = pool.to_vec();
                picked.shuffle(rng);
                picked.truncate(count);
                let missing = count - picked.len();
                picked.extend(self.distance_family(rng, missing));
                Ok(picked)
            }
        }
    }

    /// The neighborhood posed at `path` in `round`. `pool` holds the potentials
    /// an adaptive adversary may reuse; other kinds ignore it.
    pub fn pose(
        &self,
        path: &str,
        round: usize,
        center: &FreeVector,
        pool: &[LipschitzFunction],
    ) -> Result<WeakNeighborhood> {
        let functionals = if round == 0 {
            self.base_family.clone()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(node_seed(self.config.seed, path, round));
            self.family(&mut rng, pool)?
        };
        debug_assert!(functionals
            .iter()
            .all(|f| f.value(self.diamond.base()).is_ok_and(Zero::is_zero)));
        WeakNeighborhood::new(functionals, center.clone(), self.config.eta.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diamond::DiamondSpec;
    use crate::lipschitz::lip_constant;

    #[test]
    fn kinds_round_trip_names() {
        for k in AdversaryKind::ALL {
            assert_eq!(k.name().parse::<AdversaryKind>().unwrap(), k);
        }
        assert!("bogus".parse::<AdversaryKind>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(AdversaryConfig::new(AdversaryKind::DistanceFunctions, 0, rat(1, 20), 1).is_err());
        assert!(AdversaryConfig::new(AdversaryKind::DistanceFunctions, 1, int(0), 1).is_err());
    }

    #[test]
    fn generated_functionals_are_one_lipschitz_and_vanish_at_base() {
        let d = Diamond::build(&DiamondSpec::finite(2, 3).unwrap()).unwrap();
        for kind in AdversaryKind::ALL {
            for seed in 0..5 {
                let cfg = AdversaryConfig::new(kind, 4, rat(1, 20), seed).unwrap();
                let adv = Adversary::new(&cfg, d.clone()).unwrap();
                let v = adv.pose("root", 1, &FreeVector::new(), &[]).unwrap();
                assert_eq!(v.functionals.len(), 4);
                for f in v.functionals.iter().chain(adv.base_family()) {
                    assert_eq!(f.value(d.base()).unwrap(), &int(0));
                    assert!(lip_constant(&d.space, f).unwrap() <= int(1));
                }
            }
        }
    }

    #[test]
    fn posing_is_deterministic_and_path_dependent() {
        let d = Diamond::build(&DiamondSpec::finite(1, 5).unwrap()).unwrap();
        let cfg = AdversaryConfig::new(AdversaryKind::RandomLipschitz, 3, rat(1, 20), 9).unwrap();
        let a = Adversary::new(&cfg, d.clone()).unwrap();
        let b = Adversary::new(&cfg, d.clone()).unwrap();
        let c = FreeVector::new();
        assert_eq!(a.pose("root/0r", 1, &c, &[]).unwrap(), b.pose("root/0r", 1, &c, &[]).unwrap());
        assert_eq!(a.pose("x", 0, &c, &[]).unwrap(), a.pose("y", 0, &c, &[]).unwrap());
        assert_ne!(node_seed(9, "root/0r", 1), node_seed(9, "root/0t", 1));
    }
}
