//! Finitely supported elements of the Lipschitz-free space and their exact
//! norms.
//!
//! A vector is a finite combination of point evaluations. The base point
//! evaluates to zero, so the base coefficient carries no information: before
//! measuring, a vector is balanced by setting its base coefficient to minus
//! the sum of the others. The norm of a balanced vector is the optimal
//! transport cost between its positive and negative parts.

use std::collections::BTreeMap;
use std::ops::{Add, Neg, Sub};
use std::sync::atomic::{AtomicU64, Ordering};

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::diamond::{Diamond, Side};
use crate::error::{Error, Result};
use crate::lipschitz::LipschitzFunction;
use crate::metric::MetricSpace;
use crate::rational::{common_denominator, from_scaled, int, scaled_i128, Rational};
use crate::transport::TransportProblem;

/// A finitely supported vector, stored without zero coefficients.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct FreeVector {
    coeffs: BTreeMap<usize, Rational>,
}

impl FreeVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sums repeated indices and drops zeros.
    pub fn from_entries<I>(entries: I) -> Self
    where
        I: IntoIterator<Item = (usize, Rational)>,
    {
        let mut v = FreeVector::new();
        for (x, a) in entries {
            v.add_at(x, &a);
        }
        v
    }

    pub fn delta(x: usize) -> Self {
        Self::from_entries([(x, int(1))])
    }

    pub fn add_at(&mut self, x: usize, a: &Rational) {
        let entry = self.coeffs.entry(x).or_insert_with(Rational::zero);
        *entry += a;
        if entry.is_zero() {
            self.coeffs.remove(&x);
        }
    }

    pub fn get(&self, x: usize) -> Rational {
        self.coeffs.get(&x).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Rational)> {
        self.coeffs.iter().map(|(&x, a)| (x, a))
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.coeffs.keys().copied()
    }

    pub fn support_len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn mass(&self) -> Rational {
        self.coeffs.values().sum()
    }

    pub fn scale(&self, c: &Rational) -> FreeVector {
        if c.is_zero() {
            return FreeVector::new();
        }
        FreeVector {
            coeffs: self.coeffs.iter().map(|(&x, a)| (x, a * c)).collect(),
        }
    }

    /// Representative of the same element with total mass zero.
    pub fn balanced(&self, base: usize) -> FreeVector {
        let mut v = self.clone();
        v.coeffs.remove(&base);
        let m = v.mass();
        v.add_at(base, &-m);
        v
    }

    /// True when both represent the same element of the free space.
    pub fn same_element(&self, other: &FreeVector, base: usize) -> bool {
        self.balanced(base) == other.balanced(base)
    }

    /// Relabels the support through an index map.
    pub fn map_indices(&self, map: &[usize]) -> Result<FreeVector> {
        let mut out = FreeVector::new();
        for (x, a) in self.iter() {
            let y = *map.get(x).ok_or(Error::IndexOutOfRange {
                index: x,
                len: map.len(),
            })?;
            out.add_at(y, a);
        }
        Ok(out)
    }

    pub fn check_in(&self, space: &MetricSpace) -> Result<()> {
        for x in self.support() {
            space.check_index(x)?;
        }
        Ok(())
    }
}

impl Add for &FreeVector {
    type Output = FreeVector;
    fn add(self, rhs: &FreeVector) -> FreeVector {
        let mut out = self.clone();
        for (x, a) in rhs.iter() {
            out.add_at(x, a);
        }
        out
    }
}

impl Sub for &FreeVector {
    type Output = FreeVector;
    fn sub(self, rhs: &FreeVector) -> FreeVector {
        let mut out = self.clone();
        for (x, a) in rhs.iter() {
            out.add_at(x, &-a);
        }
        out
    }
}

impl Neg for &FreeVector {
    type Output = FreeVector;
    fn neg(self) -> FreeVector {
        self.scale(&int(-1))
    }
}

/// The normalized molecule `(delta(x) - delta(y)) / d(x, y)`.
pub fn molecule(space: &MetricSpace, x: usize, y: usize) -> Result<FreeVector> {
    let d = space.distance(x, y)?;
    if x == y {
        return Err(Error::SamePoint(x));
    }
    let inv = int(1) / d;
    Ok(FreeVector::from_entries([(x, inv.clone()), (y, -inv)]))
}

/// `<f, v> = sum_x v_x f(x)`. `f` must be defined on the support of `v`, and
/// should vanish at the base point for the pairing to be well defined on the
/// free space.
pub fn pair(f: &LipschitzFunction, v: &FreeVector) -> Result<Rational> {
    let mut total = Rational::zero();
    for (x, a) in v.iter() {
        total += a * f.value(x)?;
    }
    Ok(total)
}

/// An optimal plan and a matching 1-Lipschitz potential.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportCertificate {
    /// `(from, to, mass)` moving the positive part onto the negative part.
    pub plan: Vec<(usize, usize, Rational)>,
    /// Total and 1-Lipschitz on the whole space, zero at the base point, with
    /// `<potential, v> = value`.
    pub potential: LipschitzFunction,
    pub value: Rational,
}

impl TransportCertificate {
    /// Re-checks the certificate against the vector on `support(v) + base`:
    /// marginals, plan cost, potential constant and pairing all agree.
    pub fn verify(&self, space: &MetricSpace, v: &FreeVector) -> Result<()> {
        let fail = |m: String| Err(Error::Certificate(m));
        let w = v.balanced(space.base());
        let mut marg = FreeVector::new();
        let mut cost = Rational::zero();
        for (s, t, m) in &self.plan {
            if !m.is_positive() {
                return fail(format!("nonpositive plan entry {s}->{t}"));
            }
            marg.add_at(*s, m);
            marg.add_at(*t, &-m);
            cost += m * space.distance(*s, *t)?;
        }
        if marg != w {
            return fail("plan marginals differ from the vector".into());
        }
        if cost != self.value {
            return fail("plan cost differs from the value".into());
        }
        if !self.potential.value(space.base())?.is_zero() {
            return fail("potential does not vanish at the base point".into());
        }
        let pts: Vec<usize> = w.support().chain([space.base()]).collect();
        for (k, &x) in pts.iter().enumerate() {
            let fx = self.potential.value(x)?;
            for &y in &pts[k + 1..] {
                if (fx - self.potential.value(y)?).abs() > *space.d(x, y) {
                    return fail(format!("potential is not 1-Lipschitz at ({x}, {y})"));
                }
            }
        }
        if pair(&self.potential, &w)? != self.value {
            return fail("potential does not attain the value".into());
        }
        Ok(())
    }
}

static NORM_CALLS: AtomicU64 = AtomicU64::new(0);
static CERTIFICATE_FAILURES: AtomicU64 = AtomicU64::new(0);

/// `(norm computations, certificate failures)` since process start.
pub fn norm_statistics() -> (u64, u64) {
    (
        NORM_CALLS.load(Ordering::Relaxed),
        CERTIFICATE_FAILURES.load(Ordering::Relaxed),
    )
}

/// Exact norm of `v`, with a primal plan and a dual potential certifying it.
pub fn free_norm(space: &MetricSpace, v: &FreeVector) -> Result<(Rational, TransportCertificate)> {
    NORM_CALLS.fetch_add(1, Ordering::Relaxed);
    v.check_in(space)?;
    let cert = solve_norm(space, v)?;
    if let Err(e) = cert.verify(space, v) {
        CERTIFICATE_FAILURES.fetch_add(1, Ordering::Relaxed);
        return Err(e);
    }
    Ok((cert.value.clone(), cert))
}

/// The norm alone.
pub fn norm(space: &MetricSpace, v: &FreeVector) -> Result<Rational> {
    free_norm(space, v).map(|(n, _)| n)
}

/// Distances between the given rows and columns as integers over a common
/// denominator.
fn scaled_costs(space: &MetricSpace, rows: &[usize], cols: &[usize]) -> Result<(Vec<i128>, BigInt)> {
    if let Some(m) = space.scaled() {
        let cost = rows
            .iter()
            .flat_map(|&s| cols.iter().map(move |&t| m.get(s, t) as i128))
            .collect();
        return Ok((cost, m.denom.clone()));
    }
    let denom = common_denominator(
        rows.iter()
            .flat_map(|&s| cols.iter().map(move |&t| space.d(s, t))),
    );
    let mut cost = Vec::with_capacity(rows.len() * cols.len());
    for &s in rows {
        for &t in cols {
            cost.push(scaled_i128(space.d(s, t), &denom)?);
        }
    }
    Ok((cost, denom))
}

fn solve_norm(space: &MetricSpace, v: &FreeVector) -> Result<TransportCertificate> {
    let n = space.len();
    let w = v.balanced(space.base());
    if w.is_zero() {
        return Ok(TransportCertificate {
            plan: Vec::new(),
            potential: LipschitzFunction::zero(n),
            value: Rational::zero(),
        });
    }
    let mass_denom = common_denominator(w.iter().map(|(_, a)| a));
    let mut sources = Vec::new();
    let mut sinks = Vec::new();
    let mut supply = Vec::new();
    let mut demand = Vec::new();
    for (x, a) in w.iter() {
        let m = scaled_i128(a, &mass_denom)?;
        if m > 0 {
            sources.push(x);
            supply.push(m);
        } else {
            sinks.push(x);
            demand.push(-m);
        }
    }
    let (cost, cost_denom) = scaled_costs(space, &sources, &sinks)?;
    let sol = TransportProblem {
        supply,
        demand,
        cost,
    }
    .solve()?;

    let value = Rational::new(
        BigInt::from(sol.total_cost),
        &mass_denom * &cost_denom,
    );
    let plan = sol
        .flow
        .iter()
        .map(|&(s, t, m)| (sources[s], sinks[t], from_scaled(m, &mass_denom)))
        .collect();

    // c-transform of the sink prices: a minimum of 1-Lipschitz functions that
    // dominates every source price and stays below every sink price.
    let scaled_min = |x: usize| -> Result<i128> {
        let mut best: Option<i128> = None;
        for (k, &t) in sinks.iter().enumerate() {
            let dxt = match space.scaled() {
                Some(m) => m.get(x, t) as i128,
                None => scaled_i128(space.d(x, t), &cost_denom)?,
            };
            let cand = sol.sink_price[k].checked_add(dxt).ok_or(Error::Overflow)?;
            best = Some(best.map_or(cand, |b| b.min(cand)));
        }
        Ok(best.expect("a nonzero balanced vector has a sink"))
    };
    let shift = scaled_min(space.base())?;
    let mut values = Vec::with_capacity(n);
    for x in 0..n {
        let fx = scaled_min(x)?.checked_sub(shift).ok_or(Error::Overflow)?;
        values.push(from_scaled(fx, &cost_denom));
    }
    Ok(TransportCertificate {
        plan,
        potential: LipschitzFunction::total(values),
        value,
    })
}

/// The vector on the subspace `points` (which must contain the support and
/// the base point) that represents `v` there, with `points[k]` renamed `k`.
pub fn restrict_to(v: &FreeVector, points: &[usize]) -> Result<FreeVector> {
    let mut index = BTreeMap::new();
    for (k, &p) in points.iter().enumerate() {
        index.insert(p, k);
    }
    let mut out = FreeVector::new();
    for (x, a) in v.iter() {
        let k = index
            .get(&x)
            .ok_or_else(|| Error::Invalid(format!("point {x} is outside the subspace")))?;
        out.add_at(*k, a);
    }
    Ok(out)
}

/// Norm computed in the subspace spanned by the support and the base point.
pub fn norm_on_support(space: &MetricSpace, v: &FreeVector) -> Result<Rational> {
    let base = space.base();
    let w = v.balanced(base);
    let mut points: Vec<usize> = w.support().collect();
    if !points.contains(&base) {
        points.push(base);
    }
    let sub = space.subspace(&points, base)?;
    norm(&sub, &restrict_to(&w, &points)?)
}

/// The isometric image of `w` (a vector on the predecessor) in the copy
/// `(side, branch)`: `2 sum_u w_u (delta(phi u) - delta(phi l))`, with `l`
/// the predecessor's base point. The factor 2 undoes the copy's scaling.
pub fn push_to_copy(diamond: &Diamond, side: Side, branch: usize, w: &FreeVector) -> Result<FreeVector> {
    let map = diamond.subcopy_map(side, branch)?;
    let pred = diamond.predecessor().expect("successor has a predecessor");
    let w = w.balanced(pred.base());
    Ok(w.map_indices(map)?.scale(&int(2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diamond::DiamondSpec;
    use crate::rational::rat;

    fn diamond(k: u64, n: usize) -> std::sync::Arc<Diamond> {
        Diamond::build(&DiamondSpec::finite(k, n).unwrap()).unwrap()
    }

    /// Optimal cost over every integer plan with the given marginals.
    fn lattice_oracle(supply: &[i64], demand: &[i64], cost: &dyn Fn(usize, usize) -> Rational) -> Rational {
        fn rec(
            s: usize,
            supply: &[i64],
            rem: &mut Vec<i64>,
            cost: &dyn Fn(usize, usize) -> Rational,
            acc: Rational,
            best: &mut Option<Rational>,
        ) {
            if s == supply.len() {
                if rem.iter().all(|&r| r == 0) && best.as_ref().is_none_or(|b| &acc < b) {
                    *best = Some(acc);
                }
                return;
            }
            split(s, 0, supply[s], supply, rem, cost, acc, best);
        }
        #[allow(clippy::too_many_arguments)]
        fn split(
            s: usize,
            t: usize,
            left: i64,
            supply: &[i64],
            rem: &mut Vec<i64>,
            cost: &dyn Fn(usize, usize) -> Rational,
            acc: Rational,
            best: &mut Option<Rational>,
        ) {
            if t == rem.len() {
                if left == 0 {
                    rec(s + 1, supply, rem, cost, acc, best);
                }
                return;
            }
            for m in 0..=left.min(rem[t]) {
                rem[t] -= m;
                let acc2 = &acc + cost(s, t) * int(m);
                split(s, t + 1, left - m, supply, rem, cost, acc2, best);
                rem[t] += m;
            }
        }
        let mut best = None;
        rec(0, supply, &mut demand.to_vec(), cost, Rational::zero(), &mut best);
        best.unwrap()
    }

    #[test]
    fn molecule_has_norm_one() {
        let d = diamond(2, 3);
        for x in [0, 1, 5, 9] {
            for y in [2, 3, 7, 22] {
                if x != y {
                    let m = molecule(&d.space, x, y).unwrap();
                    assert_eq!(norm(&d.space, &m).unwrap(), int(1));
                }
            }
        }
        assert_eq!(molecule(&d.space, 4, 4), Err(Error::SamePoint(4)));
    }

    #[test]
    fn delta_norm_is_distance_to_base() {
        let d = diamond(2, 3);
        for x in 0..d.len() {
            let n = norm(&d.space, &FreeVector::delta(x)).unwrap();
            assert_eq!(&n, d.space.d(x, d.base()));
        }
    }

    #[test]
    fn matches_lattice_enumeration() {
        let d = diamond(2, 3);
        let cases: [&[(usize, i64)]; 4] = [
            &[(0, 2), (1, -1), (5, -1)],
            &[(3, 1), (4, 1), (7, -1), (12, -1)],
            &[(0, 3), (1, -2), (9, 1), (17, -2)],
            &[(6, 2), (8, -1), (11, -1), (19, 1), (20, -1)],
        ];
        for case in cases {
            let v = FreeVector::from_entries(case.iter().map(|&(x, a)| (x, int(a))));
            let w = v.balanced(d.base());
            let pos: Vec<(usize, i64)> = w.iter().filter(|(_, a)| a.is_positive()).map(|(x, a)| (x, a.to_integer().try_into().unwrap())).collect();
            let neg: Vec<(usize, i64)> = w.iter().filter(|(_, a)| a.is_negative()).map(|(x, a)| (x, (-a).to_integer().try_into().unwrap())).collect();
            let supply: Vec<i64> = pos.iter().map(|p| p.1).collect();
            let demand: Vec<i64> = neg.iter().map(|p| p.1).collect();
            let expected = lattice_oracle(&supply, &demand, &|s, t| d.space.d(pos[s].0, neg[t].0).clone());
            assert_eq!(norm(&d.space, &v).unwrap(), expected, "case {case:?}");
        }
    }

    #[test]
    fn certificate_potential_is_globally_one_lipschitz() {
        let d = diamond(2, 3);
        let v = FreeVector::from_entries([(3, rat(1, 3)), (9, rat(-5, 2)), (14, int(2))]);
        let (n, cert) = free_norm(&d.space, &v).unwrap();
        assert!(crate::lipschitz::lip_constant(&d.space, &cert.potential).unwrap() <= int(1));
        assert_eq!(pair(&cert.potential, &v.balanced(d.base())).unwrap(), n);
        assert_eq!(cert.potential.value(d.base()).unwrap(), &int(0));
    }

    #[test]
    fn tampered_certificate_fails() {
        let d = diamond(1, 3);
        let v = molecule(&d.space, d.top(), d.bottom()).unwrap();
        let (_, mut cert) = free_norm(&d.space, &v).unwrap();
        cert.value = int(2);
        assert!(matches!(cert.verify(&d.space, &v), Err(Error::Certificate(_))));
    }

    #[test]
    fn zero_and_base_only_vectors() {
        let d = diamond(1, 3);
        assert_eq!(norm(&d.space, &FreeVector::new()).unwrap(), int(0));
        assert_eq!(norm(&d.space, &FreeVector::delta(d.base()).scale(&int(7))).unwrap(), int(0));
    }

    #[test]
    fn subspace_norm_agrees() {
        let d = diamond(2, 4);
        let v = FreeVector::from_entries([(0, int(1)), (1, int(-1)), (7, rat(1, 2)), (30, rat(-3, 4))]);
        assert_eq!(norm(&d.space, &v).unwrap(), norm_on_support(&d.space, &v).unwrap());
    }

    #[test]
    fn copy_push_is_isometric_and_pairs_with_pullback() {
        let d = diamond(2, 3);
        let pred = d.predecessor().unwrap();
        let w = molecule(&pred.space, pred.top(), pred.mid(2).unwrap()).unwrap();
        for side in [Side::Plus, Side::Minus] {
            for b in 1..=3 {
                let t = push_to_copy(&d, side, b, &w).unwrap();
                assert_eq!(t.mass(), int(0));
                assert_eq!(norm(&d.space, &t).unwrap(), norm(&pred.space, &w).unwrap());
                let f = LipschitzFunction::total(
                    (0..d.len()).map(|x| d.space.d(x, d.top()) - d.space.d(d.base(), d.top())).collect(),
                );
                let g = crate::lipschitz::pull_back(&d, side, b, &f).unwrap();
                assert_eq!(pair(&g, &w.balanced(pred.base())).unwrap(), pair(&f, &t).unwrap());
            }
        }
    }

    #[test]
    fn statistics_count_calls() {
        let d = diamond(1, 2);
        let (before, _) = norm_statistics();
        norm(&d.space, &FreeVector::delta(0)).unwrap();
        let (after, fails) = norm_statistics();
        assert!(after > before);
        assert_eq!(fails, 0);
    }
}
