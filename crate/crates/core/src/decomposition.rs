//! Summing metrics over a partition through the base point, and the covering
//! of a limit diamond by the two pole neighborhoods.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::diamond::Diamond;
use crate::error::{Error, Result};
use crate::freespace::{norm, FreeVector};
use crate::metric::MetricSpace;
use crate::ordinal::OrdinalKind;
use crate::rational::{format_rational, rat, Rational};

/// Disjoint summands covering every point except the base point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SummandPartition {
    pub base: usize,
    pub summands: Vec<Vec<usize>>,
    owner: Vec<Option<usize>>,
}

impl SummandPartition {
    pub fn new(points: usize, base: usize, summands: Vec<Vec<usize>>) -> Result<Self> {
        if base >= points {
            return Err(Error::IndexOutOfRange { index: base, len: points });
        }
        let mut owner = vec![None; points];
        for (k, s) in summands.iter().enumerate() {
            for &x in s {
                if x >= points {
                    return Err(Error::IndexOutOfRange { index: x, len: points });
                }
                if x == base {
                    return Err(Error::InvalidPartition("the base point belongs to no summand".into()));
                }
                if owner[x].replace(k).is_some() {
                    return Err(Error::InvalidPartition(format!("point {x} lies in two summands")));
                }
            }
        }
        if let Some(x) = (0..points).find(|&x| x != base && owner[x].is_none()) {
            return Err(Error::InvalidPartition(format!("point {x} lies in no summand")));
        }
        Ok(SummandPartition {
            base,
            summands,
            owner,
        })
    }

    pub fn len(&self) -> usize {
        self.owner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.owner.is_empty()
    }

    pub fn summand_of(&self, x: usize) -> Option<usize> {
        self.owner.get(x).copied().flatten()
    }

    /// The part of `v` on the summands in `range`, balanced at the base.
    pub fn restrict(&self, v: &FreeVector, range: std::ops::Range<usize>) -> FreeVector {
        FreeVector::from_entries(
            v.iter()
                .filter(|(x, _)| self.summand_of(*x).is_some_and(|k| range.contains(&k)))
                .map(|(x, a)| (x, a.clone())),
        )
        .balanced(self.base)
    }
}

fn check_partition(space: &MetricSpace, p: &SummandPartition) -> Result<()> {
    if p.len() != space.len() || p.base != space.base() {
        return Err(Error::InvalidPartition(
            "partition does not match the space or its base point".into(),
        ));
    }
    Ok(())
}

/// Same points with cross-summand distances forced through the base point.
pub fn summing_metric(space: &MetricSpace, partition: &SummandPartition) -> Result<MetricSpace> {
    check_partition(space, partition)?;
    let n = space.len();
    let b = partition.base;
    let mut dist = Vec::with_capacity(n * n);
    for x in 0..n {
        for y in 0..n {
            let cross = match (partition.summand_of(x), partition.summand_of(y)) {
                (Some(i), Some(j)) => i != j,
                _ => false,
            };
            dist.push(if cross {
                space.d(x, b) + space.d(b, y)
            } else {
                space.d(x, y).clone()
            });
        }
    }
    let out = space.with_distances(dist)?;
    out.check_metric()?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquivalenceConstants {
    /// `min d / d1` and the pair attaining it.
    #[serde(serialize_with = "crate::rational::serde_rational::serialize")]
    pub low: Rational,
    pub low_pair: Option<(usize, usize)>,
    /// `max d / d1` and the pair attaining it.
    #[serde(serialize_with = "crate::rational::serde_rational::serialize")]
    pub high: Rational,
    pub high_pair: Option<(usize, usize)>,
}

/// Exact extremes of `d / d1` over distinct pairs. `(1, 1)` on a single point.
pub fn equivalence_constants(d: &MetricSpace, d1: &MetricSpace) -> Result<EquivalenceConstants> {
    if d.labels() != d1.labels() {
        return Err(Error::MismatchedSpaces("the two metrics live on different points".into()));
    }
    let mut out = EquivalenceConstants {
        low: Rational::one(),
        low_pair: None,
        high: Rational::one(),
        high_pair: None,
    };
    for x in 0..d.len() {
        for y in x + 1..d.len() {
            let r = d.d(x, y) / d1.d(x, y);
            if out.low_pair.is_none() || r < out.low {
                out.low = r.clone();
                out.low_pair = Some((x, y));
            }
            if out.high_pair.is_none() || r > out.high {
                out.high = r;
                out.high_pair = Some((x, y));
            }
        }
    }
    Ok(out)
}

/// A distance or the sentinel for the distance to an empty set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Extended {
    Finite(Rational),
    Infinite,
}

impl Extended {
    fn add(&self, other: &Extended) -> Extended {
        match (self, other) {
            (Extended::Finite(a), Extended::Finite(b)) => Extended::Finite(a + b),
            _ => Extended::Infinite,
        }
    }
}

impl std::fmt::Display for Extended {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Extended::Finite(q) => f.write_str(&format_rational(q)),
            Extended::Infinite => f.write_str("inf"),
        }
    }
}

/// The two pole neighborhoods of a limit diamond and the separation function
/// `D(z) = dist(z, complement of A) + dist(z, complement of B)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cover {
    /// Points at distance `< 3/2` from the bottom pole.
    pub a: Vec<usize>,
    /// Points at distance `< 3/2` from the top pole.
    pub b: Vec<usize>,
    pub separation: Vec<Extended>,
}

impl Cover {
    pub fn covers(&self, points: usize) -> bool {
        let mut seen = vec![false; points];
        for &x in self.a.iter().chain(&self.b) {
            seen[x] = true;
        }
        seen.into_iter().all(|s| s)
    }

    pub fn min_separation(&self) -> Option<(usize, &Extended)> {
        self.separation.iter().enumerate().min_by(|a, b| a.1.cmp(b.1))
    }
}

fn require_limit(diamond: &Diamond) -> Result<()> {
    if diamond.alpha().classify() != OrdinalKind::Limit {
        return Err(Error::NotLimit(diamond.alpha().to_string()));
    }
    Ok(())
}

pub fn build_cover(diamond: &Diamond) -> Result<Cover> {
    require_limit(diamond)?;
    let space = &diamond.space;
    let radius = rat(3, 2);
    let n = space.len();
    let (a, not_a): (Vec<usize>, Vec<usize>) =
        (0..n).partition(|&z| space.d(z, diamond.bottom()) < &radius);
    let (b, not_b): (Vec<usize>, Vec<usize>) =
        (0..n).partition(|&z| space.d(z, diamond.top()) < &radius);
    let dist_to = |z: usize, set: &[usize]| -> Extended {
        set.iter()
            .map(|&w| space.d(z, w).clone())
            .min()
            .map_or(Extended::Infinite, Extended::Finite)
    };
    let separation = (0..n)
        .map(|z| dist_to(z, &not_a).add(&dist_to(z, &not_b)))
        .collect();
    Ok(Cover { a, b, separation })
}

/// The bottom neighborhood `A` as a space based at the bottom pole,
/// partitioned by limit summand, together with the original indices.
pub fn bottom_neighborhood(diamond: &Diamond) -> Result<(MetricSpace, SummandPartition, Vec<usize>)> {
    let cover = build_cover(diamond)?;
    let bottom = diamond.bottom();
    let points = cover.a;
    let sub = diamond.space.subspace(&points, bottom)?;
    let mut local = vec![usize::MAX; diamond.len()];
    for (k, &p) in points.iter().enumerate() {
        local[p] = k;
    }
    let mut summands = vec![Vec::new(); diamond.landmarks.summands.len()];
    for (k, (_, map)) in diamond.landmarks.summands.iter().enumerate() {
        for &x in &map[2..] {
            if local[x] != usize::MAX {
                summands[k].push(local[x]);
            }
        }
    }
    let partition = SummandPartition::new(points.len(), sub.base(), summands)?;
    Ok((sub, partition, points))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdditivityReport {
    #[serde(serialize_with = "crate::rational::serde_rational::serialize")]
    pub whole: Rational,
    pub parts: Vec<String>,
    #[serde(serialize_with = "crate::rational::serde_rational::serialize")]
    pub sum: Rational,
    pub holds: bool,
}

/// Compares the norm of `v` in the summing metric with the sum of the norms
/// of its per-summand parts, each measured inside its summand plus the base.
pub fn ell1_additivity_check(
    space: &MetricSpace,
    partition: &SummandPartition,
    v: &FreeVector,
) -> Result<AdditivityReport> {
    check_partition(space, partition)?;
    let whole = norm(space, v)?;
    let mut parts = Vec::with_capacity(partition.summands.len());
    let mut sum = Rational::zero();
    for (k, members) in partition.summands.iter().enumerate() {
        let part = partition.restrict(v, k..k + 1);
        let mut points = members.clone();
        points.push(partition.base);
        let sub = space.subspace(&points, partition.base)?;
        let local = crate::freespace::restrict_to(&part, &points)?;
        let p = norm(&sub, &local)?;
        sum += &p;
        parts.push(format_rational(&p));
    }
    Ok(AdditivityReport {
        holds: whole == sum,
        whole,
        parts,
        sum,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProjectionRow {
    pub n: usize,
    pub whole: String,
    pub head: String,
    pub tail: String,
    pub holds: bool,
}

/// `||v|| = ||P_n v|| + ||v - P_n v||` for every `n`, with `P_n` the
/// restriction to the first `n` summands.
pub fn projection_identity_check(
    space: &MetricSpace,
    partition: &SummandPartition,
    v: &FreeVector,
) -> Result<Vec<ProjectionRow>> {
    check_partition(space, partition)?;
    let v = v.balanced(partition.base);
    let whole = norm(space, &v)?;
    (0..=partition.summands.len())
        .map(|n| {
            let head = partition.restrict(&v, 0..n);
            let tail = (&v - &head).balanced(partition.base);
            let hn = norm(space, &head)?;
            let tn = norm(space, &tail)?;
            Ok(ProjectionRow {
                n,
                holds: whole == &hn + &tn,
                whole: format_rational(&whole),
                head: format_rational(&hn),
                tail: format_rational(&tn),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diamond::DiamondSpec;
    use crate::rational::int;

    fn omega() -> std::sync::Arc<Diamond> {
        Diamond::build(&DiamondSpec::new("w".parse().unwrap(), 3, 3).unwrap()).unwrap()
    }

    #[test]
    fn partition_validation() {
        assert!(SummandPartition::new(4, 0, vec![vec![1, 2], vec![3]]).is_ok());
        assert!(matches!(
            SummandPartition::new(4, 0, vec![vec![1, 2], vec![2, 3]]),
            Err(Error::InvalidPartition(_))
        ));
        assert!(matches!(
            SummandPartition::new(4, 0, vec![vec![1]]),
            Err(Error::InvalidPartition(_))
        ));
        assert!(matches!(
            SummandPartition::new(3, 0, vec![vec![0, 1, 2]]),
            Err(Error::InvalidPartition(_))
        ));
    }

    #[test]
    fn single_summand_keeps_the_metric() {
        let d = Diamond::build(&DiamondSpec::finite(2, 3).unwrap()).unwrap();
        let others: Vec<usize> = (0..d.len()).filter(|&x| x != d.base()).collect();
        let p = SummandPartition::new(d.len(), d.base(), vec![others]).unwrap();
        let d1 = summing_metric(&d.space, &p).unwrap();
        assert_eq!(d1, d.space);
        let c = equivalence_constants(&d.space, &d1).unwrap();
        assert_eq!((c.low, c.high), (int(1), int(1)));
    }

    #[test]
    fn cover_of_omega_truncation() {
        let w = omega();
        let c = build_cover(&w).unwrap();
        assert!(c.covers(w.len()));
        let (_, min) = c.min_separation().unwrap();
        assert!(min >= &Extended::Finite(rat(1, 2)));
        assert!(c.separation[w.bottom()] >= Extended::Finite(rat(3, 2)));
        let finite = Diamond::build(&DiamondSpec::finite(2, 3).unwrap()).unwrap();
        assert!(matches!(build_cover(&finite), Err(Error::NotLimit(_))));
    }

    #[test]
    fn bottom_neighborhood_constants() {
        let w = omega();
        let (a, part, _) = bottom_neighborhood(&w).unwrap();
        assert_eq!(part.summands.len(), 3);
        let d1 = summing_metric(&a, &part).unwrap();
        let c = equivalence_constants(&a, &d1).unwrap();
        assert!(c.low >= rat(1, 3));
        assert!(c.high <= int(1));
        for x in 0..a.len() {
            for y in 0..a.len() {
                assert!(a.d(x, y) <= d1.d(x, y));
            }
        }
    }

    #[test]
    fn cross_molecule_splits_into_halves() {
        let w = omega();
        let (a, part, _) = bottom_neighborhood(&w).unwrap();
        let d1 = summing_metric(&a, &part).unwrap();
        let x = part.summands[0][0];
        let y = part.summands[2][0];
        let v = crate::freespace::molecule(&d1, x, y).unwrap();
        let r = ell1_additivity_check(&d1, &part, &v).unwrap();
        assert!(r.holds);
        assert_eq!(r.whole, int(1));
        for row in projection_identity_check(&d1, &part, &v).unwrap() {
            assert!(row.holds, "{row:?}");
        }
    }
}
