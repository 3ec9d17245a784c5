//! Lipschitz functions on finite spaces: best constants, McShane extension and
//! pole gluing on successor diamonds.

use std::sync::OnceLock;

use num_traits::{Signed, Zero};

use crate::diamond::{Diamond, Side};
use crate::error::{Error, Result};
use crate::metric::MetricSpace;
use crate::rational::{format_rational, half, int, Rational};

/// Exact rational values on (a subset of) the points of a space.
#[derive(Debug, Clone, Default)]
pub struct LipschitzFunction {
    values: Vec<Option<Rational>>,
    constant: OnceLock<Rational>,
}

impl PartialEq for LipschitzFunction {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values
    }
}

impl Eq for LipschitzFunction {}

impl LipschitzFunction {
    pub fn total(values: Vec<Rational>) -> Self {
        LipschitzFunction {
            values: values.into_iter().map(Some).collect(),
            constant: OnceLock::new(),
        }
    }

    pub fn zero(n: usize) -> Self {
        Self::total(vec![int(0); n])
    }

    /// A function on a space of `n` points defined only at the given entries.
    pub fn partial<I>(n: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, Rational)>,
    {
        let mut values = vec![None; n];
        for (x, v) in entries {
            if x >= n {
                return Err(Error::IndexOutOfRange { index: x, len: n });
            }
            values[x] = Some(v);
        }
        Ok(LipschitzFunction {
            values,
            constant: OnceLock::new(),
        })
    }

    pub fn from_options(values: Vec<Option<Rational>>) -> Self {
        LipschitzFunction {
            values,
            constant: OnceLock::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_total(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    pub fn get(&self, x: usize) -> Option<&Rational> {
        self.values.get(x).and_then(Option::as_ref)
    }

    pub fn value(&self, x: usize) -> Result<&Rational> {
        self.get(x).ok_or(Error::PartialFunction(x))
    }

    pub fn values(&self) -> &[Option<Rational>] {
        &self.values
    }

    pub fn domain(&self) -> impl Iterator<Item = usize> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(x, v)| v.as_ref().map(|_| x))
    }

    /// `a * self + b * other` on a common total domain.
    pub fn combine(&self, a: &Rational, other: &Self, b: &Rational) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::MismatchedSpaces("functions of different lengths".into()));
        }
        let mut out = Vec::with_capacity(self.len());
        for x in 0..self.len() {
            out.push(a * self.value(x)? + b * other.value(x)?);
        }
        Ok(Self::total(out))
    }

    /// The same function shifted by a constant so that it vanishes at `x`.
    pub fn vanishing_at(&self, x: usize) -> Result<Self> {
        let c = self.value(x)?.clone();
        Ok(LipschitzFunction::from_options(
            self.values
                .iter()
                .map(|v| v.as_ref().map(|v| v - &c))
                .collect(),
        ))
    }

    /// Best constant, computed once and cached.
    pub fn best_constant(&self, space: &MetricSpace) -> Result<Rational> {
        if let Some(c) = self.constant.get() {
            return Ok(c.clone());
        }
        let c = lip_constant(space, self)?;
        let _ = self.constant.set(c.clone());
        Ok(c)
    }
}

fn check_len(space: &MetricSpace, f: &LipschitzFunction) -> Result<()> {
    if f.len() != space.len() {
        return Err(Error::MismatchedSpaces(format!(
            "function has {} values, space has {} points",
            f.len(),
            space.len()
        )));
    }
    Ok(())
}

/// Exact best Lipschitz constant of a total function.
pub fn lip_constant(space: &MetricSpace, f: &LipschitzFunction) -> Result<Rational> {
    check_len(space, f)?;
    if let Some(x) = (0..f.len()).find(|&x| f.get(x).is_none()) {
        return Err(Error::PartialFunction(x));
    }
    domain_lip_constant(space, f)
}

/// Best constant of `f` restricted to its domain (0 when the domain has fewer
/// than two points).
pub fn domain_lip_constant(space: &MetricSpace, f: &LipschitzFunction) -> Result<Rational> {
    check_len(space, f)?;
    let dom: Vec<(usize, &Rational)> = f.domain().map(|x| (x, f.get(x).unwrap())).collect();
    let mut best = int(0);
    for (k, &(x, fx)) in dom.iter().enumerate() {
        for &(y, fy) in &dom[k + 1..] {
            let gap = (fx - fy).abs();
            if gap.is_zero() {
                continue;
            }
            // Skip the division when the pair cannot beat the current best.
            if gap <= &best * space.d(x, y) {
                continue;
            }
            best = gap / space.d(x, y);
        }
    }
    Ok(best)
}

/// Verifies `|f(x) - f(y)| <= bound * d(x, y)` on the domain of `f`,
/// reporting the first violating pair.
pub fn check_lipschitz(space: &MetricSpace, f: &LipschitzFunction, bound: &Rational) -> Result<()> {
    check_len(space, f)?;
    let dom: Vec<usize> = f.domain().collect();
    for (k, &x) in dom.iter().enumerate() {
        let fx = f.get(x).unwrap();
        for &y in &dom[k + 1..] {
            let gap = (fx - f.get(y).unwrap()).abs();
            let allowed = bound * space.d(x, y);
            if gap > allowed {
                return Err(Error::NotLipschitz {
                    x,
                    y,
                    gap: format_rational(&gap),
                    allowed: format_rational(&allowed),
                    bound: format_rational(bound),
                });
            }
        }
    }
    Ok(())
}

/// McShane extension `g(x) = min_y f(y) + L d(x, y)` of an `L`-Lipschitz
/// partial function. Agrees with `f` on its domain and is `L`-Lipschitz.
pub fn mcshane_extend(
    space: &MetricSpace,
    f: &LipschitzFunction,
    bound: &Rational,
) -> Result<LipschitzFunction> {
    check_len(space, f)?;
    if bound < &int(0) {
        return Err(Error::Invalid("Lipschitz bound must be nonnegative".into()));
    }
    let dom: Vec<(usize, &Rational)> = f.domain().map(|x| (x, f.get(x).unwrap())).collect();
    if dom.is_empty() {
        return Err(Error::EmptyDomain);
    }
    check_lipschitz(space, f, bound)?;
    let values = (0..space.len())
        .map(|x| {
            if let Some(v) = f.get(x) {
                return v.clone();
            }
            dom.iter()
                .map(|&(y, fy)| fy + bound * space.d(x, y))
                .min()
                .unwrap()
        })
        .collect();
    Ok(LipschitzFunction::total(values))
}

/// Pulls a functional on a successor diamond back to the predecessor through
/// the copy `(side, branch)`: `g(u) = 2 (f(phi u) - f(phi l))`, where `l` is
/// the predecessor's base point. `g` has the same best constant as `f` on the
/// copy, vanishes at `l`, and `<g, w> = <f, T w>` for every balanced `w`,
/// where `T` is [`crate::freespace::push_to_copy`].
pub fn pull_back(
    diamond: &Diamond,
    side: Side,
    branch: usize,
    f: &LipschitzFunction,
) -> Result<LipschitzFunction> {
    let map = diamond.subcopy_map(side, branch)?;
    let pred = diamond.predecessor().expect("successor has a predecessor");
    let origin = f.value(map[pred.base()])?.clone();
    let two = int(2);
    let mut out = Vec::with_capacity(map.len());
    for &x in map {
        out.push(&two * (f.value(x)? - &origin));
    }
    Ok(LipschitzFunction::total(out))
}

/// Transports a function on the predecessor onto the copy `(side, branch)` at
/// copy scale: the result takes the value `g(u) / 2` at `phi u` and is
/// undefined off the copy.
pub fn copy_function(
    diamond: &Diamond,
    side: Side,
    branch: usize,
    g: &LipschitzFunction,
) -> Result<LipschitzFunction> {
    let map = diamond.subcopy_map(side, branch)?;
    if g.len() != map.len() {
        return Err(Error::MismatchedSpaces(
            "function does not live on the predecessor".into(),
        ));
    }
    let mut entries = Vec::with_capacity(map.len());
    for (u, &x) in map.iter().enumerate() {
        entries.push((x, g.value(u)? * half()));
    }
    LipschitzFunction::partial(diamond.len(), entries)
}

fn validate_gluing_branch(diamond: &Diamond, b: usize) -> Result<()> {
    if b < 2 || b > diamond.branches() {
        return Err(Error::BranchIndex {
            branch: b,
            min: 2,
            max: diamond.branches(),
        });
    }
    Ok(())
}

/// Glues a 1-Lipschitz `f_plus` on the copy `(j, +)` and a 1-Lipschitz
/// `f_minus` on the copy `(i, -)`, both vanishing at their copy's image of
/// the predecessor base point, with the value 0 at the base point, and
/// extends the result to the whole space.
///
/// The partial function's constant is checked directly rather than assumed.
pub fn glue_poles(
    diamond: &Diamond,
    plus_branch: usize,
    f_plus: &LipschitzFunction,
    minus_branch: usize,
    f_minus: &LipschitzFunction,
) -> Result<LipschitzFunction> {
    validate_gluing_branch(diamond, plus_branch)?;
    validate_gluing_branch(diamond, minus_branch)?;
    if plus_branch == minus_branch {
        return Err(Error::SameBranch(plus_branch));
    }
    let pred_base = diamond
        .predecessor()
        .ok_or_else(|| Error::NotSuccessor(diamond.alpha().to_string()))?
        .base();
    let one = int(1);
    let mut entries = vec![(diamond.base(), int(0))];
    for (side, branch, f) in [
        (Side::Plus, plus_branch, f_plus),
        (Side::Minus, minus_branch, f_minus),
    ] {
        let map = diamond.subcopy_map(side, branch)?;
        let origin = map[pred_base];
        let at_origin = f.value(origin)?;
        if !at_origin.is_zero() {
            return Err(Error::NonZeroAtOrigin {
                point: origin,
                value: format_rational(at_origin),
            });
        }
        let mut on_copy = Vec::with_capacity(map.len());
        for &x in map {
            on_copy.push((x, f.value(x)?.clone()));
        }
        let restricted = LipschitzFunction::partial(diamond.len(), on_copy.iter().cloned())?;
        check_lipschitz(&diamond.space, &restricted, &one)?;
        entries.extend(on_copy);
    }
    let partial = LipschitzFunction::partial(diamond.len(), entries)?;
    check_lipschitz(&diamond.space, &partial, &one)?;
    mcshane_extend(&diamond.space, &partial, &one)
}
