//! Finite metric spaces with exact rational distances.

use std::collections::HashMap;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::rational::{common_denominator, format_rational, Rational};

/// A pointed finite metric space. Points are identified by index; labels are
/// the canonical addresses used in files.
#[derive(Debug)]
pub struct MetricSpace {
    labels: Vec<String>,
    dist: Vec<Rational>,
    base: usize,
    lookup: HashMap<String, usize>,
    scaled: OnceLock<Option<ScaledMatrix>>,
}

/// The distance matrix times a common denominator, as machine integers.
#[derive(Debug, Clone)]
pub struct ScaledMatrix {
    pub denom: BigInt,
    pub entries: Vec<i64>,
    pub n: usize,
}

impl ScaledMatrix {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> i64 {
        self.entries[x * self.n + y]
    }
}

impl Clone for MetricSpace {
    fn clone(&self) -> Self {
        MetricSpace {
            labels: self.labels.clone(),
            dist: self.dist.clone(),
            base: self.base,
            lookup: self.lookup.clone(),
            scaled: OnceLock::new(),
        }
    }
}

impl PartialEq for MetricSpace {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels && self.base == other.base && self.dist == other.dist
    }
}

impl MetricSpace {
    /// Builds a space from a row-major distance matrix. Only the shape and
    /// label uniqueness are checked; see [`MetricSpace::check_metric`].
    pub fn new(labels: Vec<String>, dist: Vec<Rational>, base: usize) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::Invalid("a metric space needs at least one point".into()));
        }
        if dist.len() != n * n {
            return Err(Error::Invalid(format!(
                "distance matrix has {} entries, expected {}",
                dist.len(),
                n * n
            )));
        }
        if base >= n {
            return Err(Error::IndexOutOfRange { index: base, len: n });
        }
        let mut lookup = HashMap::with_capacity(n);
        for (i, l) in labels.iter().enumerate() {
            if lookup.insert(l.clone(), i).is_some() {
                return Err(Error::Invalid(format!("duplicate point label {l:?}")));
            }
        }
        Ok(MetricSpace {
            labels,
            dist,
            base,
            lookup,
            scaled: OnceLock::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, x: usize) -> &str {
        &self.labels[x]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.lookup
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownAddress(label.to_string()))
    }

    pub fn check_index(&self, x: usize) -> Result<()> {
        if x < self.len() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: x,
                len: self.len(),
            })
        }
    }

    #[inline]
    pub fn d(&self, x: usize, y: usize) -> &Rational {
        &self.dist[x * self.labels.len() + y]
    }

    pub fn distance(&self, x: usize, y: usize) -> Result<Rational> {
        self.check_index(x)?;
        self.check_index(y)?;
        Ok(self.d(x, y).clone())
    }

    pub fn matrix(&self) -> &[Rational] {
        &self.dist
    }

    /// Same points with a different base point.
    pub fn with_base(&self, base: usize) -> Result<MetricSpace> {
        self.check_index(base)?;
        MetricSpace::new(self.labels.clone(), self.dist.clone(), base)
    }

    /// Same points and base with a replacement distance matrix.
    pub fn with_distances(&self, dist: Vec<Rational>) -> Result<MetricSpace> {
        MetricSpace::new(self.labels.clone(), dist, self.base)
    }

    /// The metric subspace on `points` (in the given order), based at `base`,
    /// which must be one of `points`.
    pub fn subspace(&self, points: &[usize], base: usize) -> Result<MetricSpace> {
        for &p in points {
            self.check_index(p)?;
        }
        let base_local = points
            .iter()
            .position(|&p| p == base)
            .ok_or_else(|| Error::Invalid("subspace must contain its base point".into()))?;
        let n = points.len();
        let mut dist = Vec::with_capacity(n * n);
        for &x in points {
            for &y in points {
                dist.push(self.d(x, y).clone());
            }
        }
        let labels = points.iter().map(|&p| self.labels[p].clone()).collect();
        MetricSpace::new(labels, dist, base_local)
    }

    /// Integer view of the distance matrix, when a common denominator makes
    /// every entry fit in an `i64` with headroom for sums.
    pub fn scaled(&self) -> Option<&ScaledMatrix> {
        self.scaled
            .get_or_init(|| {
                let denom = common_denominator(self.dist.iter());
                let scale = Rational::from_integer(denom.clone());
                let mut entries = Vec::with_capacity(self.dist.len());
                for q in &self.dist {
                    let v = (q * &scale).to_integer().to_i64()?;
                    if v.abs() > i64::MAX / 4 {
                        return None;
                    }
                    entries.push(v);
                }
                Some(ScaledMatrix {
                    denom,
                    entries,
                    n: self.len(),
                })
            })
            .as_ref()
    }

    /// Exhaustive check of the metric axioms. Reports the first violation.
    pub fn check_metric(&self) -> Result<()> {
        let n = self.len();
        for x in 0..n {
            for y in 0..n {
                let d = self.d(x, y);
                if (x == y) != d.is_zero() {
                    return Err(Error::NotMetric(format!(
                        "d({}, {}) = {}",
                        self.labels[x],
                        self.labels[y],
                        format_rational(d)
                    )));
                }
                if d < &Rational::zero() {
                    return Err(Error::NotMetric(format!("negative distance at ({x}, {y})")));
                }
                if d != self.d(y, x) {
                    return Err(Error::NotMetric(format!("asymmetric at ({x}, {y})")));
                }
            }
        }
        self.check_triangles(|_, _, _| true)
    }

    /// Triangle inequality over all triples accepted by `filter`.
    pub fn check_triangles<F>(&self, filter: F) -> Result<()>
    where
        F: Fn(usize, usize, usize) -> bool,
    {
        let n = self.len();
        let violation = |x: usize, y: usize, z: usize| {
            Error::NotMetric(format!(
                "triangle inequality fails: d({0},{2}) > d({0},{1}) + d({1},{2})",
                self.labels[x], self.labels[y], self.labels[z]
            ))
        };
        if let Some(m) = self.scaled() {
            for x in 0..n {
                for y in 0..n {
                    let dxy = m.get(x, y);
                    for z in 0..n {
                        if m.get(x, z) > dxy + m.get(y, z) && filter(x, y, z) {
                            return Err(violation(x, y, z));
                        }
                    }
                }
            }
        } else {
            for x in 0..n {
                for y in 0..n {
                    for z in 0..n {
                        if filter(x, y, z) && self.d(x, z) > &(self.d(x, y) + self.d(y, z)) {
                            return Err(violation(x, y, z));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Pairs `(x, y)`, `x < y`, with no point strictly between them, i.e. no
    /// `z` with `d(x,z) + d(z,y) = d(x,y)` and both summands positive.
    pub fn finest_edges(&self) -> Vec<(usize, usize, Rational)> {
        let n = self.len();
        let mut out = Vec::new();
        if let Some(m) = self.scaled() {
            for x in 0..n {
                for y in x + 1..n {
                    let dxy = m.get(x, y);
                    let between = (0..n).any(|z| {
                        z != x && z != y && m.get(x, z) + m.get(z, y) == dxy
                    });
                    if !between {
                        out.push((x, y, self.d(x, y).clone()));
                    }
                }
            }
        } else {
            for x in 0..n {
                for y in x + 1..n {
                    let between = (0..n).any(|z| {
                        z != x && z != y && &(self.d(x, z) + self.d(z, y)) == self.d(x, y)
                    });
                    if !between {
                        out.push((x, y, self.d(x, y).clone()));
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn path3() -> MetricSpace {
        let d = [0, 1, 2, 1, 0, 1, 2, 1, 0].iter().map(|&v| int(v)).collect();
        MetricSpace::new(vec!["a".into(), "b".into(), "c".into()], d, 0).unwrap()
    }

    #[test]
    fn path_is_metric_with_two_finest_edges() {
        let s = path3();
        s.check_metric().unwrap();
        let e = s.finest_edges();
        assert_eq!(e, vec![(0, 1, int(1)), (1, 2, int(1))]);
    }

    #[test]
    fn triangle_violation_detected() {
        let d = [0, 1, 3, 1, 0, 1, 3, 1, 0].iter().map(|&v| int(v)).collect();
        let s = MetricSpace::new(vec!["a".into(), "b".into(), "c".into()], d, 0).unwrap();
        assert!(matches!(s.check_metric(), Err(Error::NotMetric(_))));
    }

    #[test]
    fn subspace_keeps_distances() {
        let s = path3();
        let sub = s.subspace(&[2, 0], 0).unwrap();
        assert_eq!(sub.base(), 1);
        assert_eq!(sub.d(0, 1), &int(2));
        assert_eq!(sub.label(0), "c");
        assert!(s.subspace(&[1, 2], 0).is_err());
    }

    #[test]
    fn out_of_range_and_lookup() {
        let s = path3();
        assert!(matches!(
            s.distance(0, 3),
            Err(Error::IndexOutOfRange { index: 3, len: 3 })
        ));
        assert_eq!(s.index_of("c").unwrap(), 2);
        assert!(s.index_of("zz").is_err());
    }
}
