//! Prover strategies. A strategy of depth `k` for a target answers any
//! neighborhood of the target and hands back strategies of depth `k - 1` for
//! both its answer and the target itself.

use std::fmt;
use std::sync::Arc;

use num_traits::Signed;

use super::{pole_molecule, prover_escape, WeakNeighborhood};
use crate::diamond::{Diamond, Side};
use crate::error::{Error, Result};
use crate::freespace::{norm, push_to_copy, FreeVector};
use crate::lipschitz::pull_back;
use crate::ordinal::OrdinalKind;
use crate::rational::{half, int, Rational};

pub struct Reply {
    pub response: FreeVector,
    pub response_strategy: Arc<dyn Strategy>,
    pub target_strategy: Arc<dyn Strategy>,
}

pub trait Strategy: Send + Sync + fmt::Debug {
    /// The space the target lives in.
    fn space(&self) -> &Arc<Diamond>;
    /// Balanced at the space's base point.
    fn target(&self) -> &FreeVector;
    fn depth(&self) -> usize;
    fn epsilon(&self) -> &Rational;
    /// Answers a neighborhood centered at the target. Only called when
    /// `depth() >= 1`.
    fn respond(&self, nbhd: &WeakNeighborhood) -> Result<Reply>;
}

fn check_center(strategy: &dyn Strategy, nbhd: &WeakNeighborhood) -> Result<()> {
    if !nbhd
        .center
        .same_element(strategy.target(), strategy.space().base())
    {
        return Err(Error::CenterMismatch);
    }
    Ok(())
}

/// A depth-0 certificate: the target only has to lie in the unit ball.
#[derive(Debug)]
pub struct Leaf {
    space: Arc<Diamond>,
    target: FreeVector,
    epsilon: Rational,
}

impl Leaf {
    pub fn new(space: Arc<Diamond>, target: FreeVector, epsilon: Rational) -> Self {
        let target = target.balanced(space.base());
        Leaf {
            space,
            target,
            epsilon,
        }
    }
}

impl Strategy for Leaf {
    fn space(&self) -> &Arc<Diamond> {
        &self.space
    }
    fn target(&self) -> &FreeVector {
        &self.target
    }
    fn depth(&self) -> usize {
        0
    }
    fn epsilon(&self) -> &Rational {
        &self.epsilon
    }
    fn respond(&self, _: &WeakNeighborhood) -> Result<Reply> {
        Err(Error::DepthMismatch("a depth-0 certificate answers no moves".into()))
    }
}

/// The pole molecule of `D_alpha` at depth `k`: escape, then keep both halves
/// of the escape alive in the two copies through an [`Average`].
#[derive(Debug)]
pub struct PoleMolecule {
    space: Arc<Diamond>,
    depth: usize,
    epsilon: Rational,
    target: FreeVector,
}

impl PoleMolecule {
    /// Requires `0 < epsilon <= 1` and, for depth `k >= 2`, a successor space
    /// whose predecessor supports depth `k - 1`.
    pub fn new(space: Arc<Diamond>, depth: usize, epsilon: Rational) -> Result<Self> {
        if !epsilon.is_positive() || epsilon > int(1) {
            return Err(Error::Invalid("epsilon must lie in (0, 1]".into()));
        }
        let mut level = &space;
        for remaining in (2..=depth).rev() {
            match (level.alpha().classify(), level.predecessor()) {
                (OrdinalKind::Successor(_), Some(p)) => level = p,
                _ => {
                    return Err(Error::DepthMismatch(format!(
                        "D_{} cannot carry depth {remaining}",
                        level.alpha()
                    )))
                }
            }
        }
        let target = pole_molecule(&space);
        Ok(PoleMolecule {
            space,
            depth,
            epsilon,
            target,
        })
    }
}

impl Strategy for PoleMolecule {
    fn space(&self) -> &Arc<Diamond> {
        &self.space
    }
    fn target(&self) -> &FreeVector {
        &self.target
    }
    fn depth(&self) -> usize {
        self.depth
    }
    fn epsilon(&self) -> &Rational {
        &self.epsilon
    }

    fn respond(&self, nbhd: &WeakNeighborhood) -> Result<Reply> {
        if self.depth == 0 {
            return Leaf::new(self.space.clone(), self.target.clone(), self.epsilon.clone())
                .respond(nbhd);
        }
        check_center(self, nbhd)?;
        let escape = prover_escape(&self.space, nbhd)?;
        let lower = self.depth - 1;
        let response_strategy: Arc<dyn Strategy> = if lower == 0 {
            Arc::new(Leaf::new(
                self.space.clone(),
                escape.vector.clone(),
                self.epsilon.clone(),
            ))
        } else {
            let pred = self
                .space
                .predecessor()
                .ok_or_else(|| Error::NotSuccessor(self.space.alpha().to_string()))?;
            let half_molecule =
                |d: &Arc<Diamond>| PoleMolecule::new(d.clone(), lower, self.epsilon.clone());
            Arc::new(Average::new(
                self.space.clone(),
                escape.j,
                Arc::new(half_molecule(pred)?),
                escape.i,
                Arc::new(half_molecule(pred)?),
            )?)
        };
        Ok(Reply {
            response: escape.vector,
            response_strategy,
            target_strategy: Arc::new(PoleMolecule::new(
                self.space.clone(),
                lower,
                self.epsilon.clone(),
            )?),
        })
    }
}

/// `(T+ a + T- b) / 2` for strategies `a` on the copy `(plus_branch, +)` and
/// `b` on the copy `(minus_branch, -)`, where `T` is the isometric copy map.
/// Neighborhoods are pulled back into both copies with the same tolerance
/// and the two answers are averaged.
#[derive(Debug)]
pub struct Average {
    space: Arc<Diamond>,
    plus_branch: usize,
    minus_branch: usize,
    plus: Arc<dyn Strategy>,
    minus: Arc<dyn Strategy>,
    target: FreeVector,
}

impl Average {
    pub fn new(
        space: Arc<Diamond>,
        plus_branch: usize,
        plus: Arc<dyn Strategy>,
        minus_branch: usize,
        minus: Arc<dyn Strategy>,
    ) -> Result<Self> {
        let pred = space
            .predecessor()
            .ok_or_else(|| Error::NotSuccessor(space.alpha().to_string()))?
            .clone();
        for b in [plus_branch, minus_branch] {
            if b < 2 || b > space.branches() {
                return Err(Error::BranchIndex {
                    branch: b,
                    min: 2,
                    max: space.branches(),
                });
            }
        }
        if plus_branch == minus_branch {
            return Err(Error::SameBranch(plus_branch));
        }
        for s in [&plus, &minus] {
            let sp = &s.space().spec;
            if sp.alpha != pred.spec.alpha || sp.branches != pred.spec.branches {
                return Err(Error::MismatchedSpaces(format!(
                    "sub-certificate lives on {}, expected {}",
                    sp, pred.spec
                )));
            }
            if let Some(x) = s.target().support().find(|&x| x >= pred.len()) {
                return Err(Error::SupportLeak(format!(
                    "point {x} lies outside the copy of {}",
                    pred.spec
                )));
            }
        }
        if plus.depth() != minus.depth() {
            return Err(Error::DepthMismatch(format!(
                "halves have depths {} and {}",
                plus.depth(),
                minus.depth()
            )));
        }
        if plus.epsilon() != minus.epsilon() {
            return Err(Error::DepthMismatch("halves have different epsilons".into()));
        }
        let up = push_to_copy(&space, Side::Plus, plus_branch, plus.target())?;
        let down = push_to_copy(&space, Side::Minus, minus_branch, minus.target())?;
        let target = (&up + &down).scale(&half()).balanced(space.base());
        Ok(Average {
            space,
            plus_branch,
            minus_branch,
            plus,
            minus,
            target,
        })
    }
}

impl Strategy for Average {
    fn space(&self) -> &Arc<Diamond> {
        &self.space
    }
    fn target(&self) -> &FreeVector {
        &self.target
    }
    fn depth(&self) -> usize {
        self.plus.depth()
    }
    fn epsilon(&self) -> &Rational {
        self.plus.epsilon()
    }

    fn respond(&self, nbhd: &WeakNeighborhood) -> Result<Reply> {
        check_center(self, nbhd)?;
        let sub = |side: Side, branch: usize, s: &Arc<dyn Strategy>| -> Result<Reply> {
            let functionals = nbhd
                .functionals
                .iter()
                .map(|f| pull_back(&self.space, side, branch, f))
                .collect::<Result<Vec<_>>>()?;
            let w = WeakNeighborhood::new(functionals, s.target().clone(), nbhd.eta.clone())?;
            s.respond(&w)
        };
        let up = sub(Side::Plus, self.plus_branch, &self.plus)?;
        let down = sub(Side::Minus, self.minus_branch, &self.minus)?;
        let response = (&push_to_copy(&self.space, Side::Plus, self.plus_branch, &up.response)?
            + &push_to_copy(&self.space, Side::Minus, self.minus_branch, &down.response)?)
            .scale(&half())
            .balanced(self.space.base());
        let rebuild = |a: Arc<dyn Strategy>, b: Arc<dyn Strategy>| -> Result<Arc<dyn Strategy>> {
            Ok(Arc::new(Average::new(
                self.space.clone(),
                self.plus_branch,
                a,
                self.minus_branch,
                b,
            )?))
        };
        Ok(Reply {
            response,
            response_strategy: rebuild(up.response_strategy, down.response_strategy)?,
            target_strategy: rebuild(up.target_strategy, down.target_strategy)?,
        })
    }
}

/// `x / 2 + y / 2` at half the inner epsilon, for a strategy of `x` and a
/// fixed `y` in the unit ball. Neighborhoods are translated back to `x` with
/// the same functionals and tolerance.
#[derive(Debug)]
pub struct Midpoint {
    inner: Arc<dyn Strategy>,
    y: FreeVector,
    epsilon: Rational,
    target: FreeVector,
}

impl Midpoint {
    pub fn new(inner: Arc<dyn Strategy>, y: FreeVector) -> Result<Self> {
        let space = inner.space().clone();
        let y = y.balanced(space.base());
        y.check_in(&space.space)?;
        let n = norm(&space.space, &y)?;
        if n > int(1) {
            return Err(Error::NormTooLarge(crate::rational::format_rational(&n)));
        }
        Ok(Self::unchecked(inner, y))
    }

    fn unchecked(inner: Arc<dyn Strategy>, y: FreeVector) -> Self {
        let base = inner.space().base();
        let target = (&inner.target().scale(&half()) + &y.scale(&half())).balanced(base);
        let epsilon = inner.epsilon() * half();
        Midpoint {
            inner,
            y,
            epsilon,
            target,
        }
    }

    fn answer(&self, x: &FreeVector) -> FreeVector {
        (&x.scale(&half()) + &self.y.scale(&half())).balanced(self.inner.space().base())
    }
}

impl Strategy for Midpoint {
    fn space(&self) -> &Arc<Diamond> {
        self.inner.space()
    }
    fn target(&self) -> &FreeVector {
        &self.target
    }
    fn depth(&self) -> usize {
        self.inner.depth()
    }
    fn epsilon(&self) -> &Rational {
        &self.epsilon
    }

    fn respond(&self, nbhd: &WeakNeighborhood) -> Result<Reply> {
        check_center(self, nbhd)?;
        let reply = self
            .inner
            .respond(&nbhd.recentered(self.inner.target().clone()))?;
        Ok(Reply {
            response: self.answer(&reply.response),
            response_strategy: Arc::new(Midpoint::unchecked(reply.response_strategy, self.y.clone())),
            target_strategy: Arc::new(Midpoint::unchecked(reply.target_strategy, self.y.clone())),
        })
    }
}

/// Strategy-level form of averaging two certificates living on the copies
/// `(plus_branch, +)` and `(minus_branch, -)` of a successor diamond.
pub fn average_lift(
    space: Arc<Diamond>,
    plus_branch: usize,
    plus: Arc<dyn Strategy>,
    minus_branch: usize,
    minus: Arc<dyn Strategy>,
) -> Result<Arc<dyn Strategy>> {
    Ok(Arc::new(Average::new(space, plus_branch, plus, minus_branch, minus)?))
}

/// A certificate for `x / 2 + y / 2` at half the epsilon of the one for `x`.
pub fn midpoint_lift(inner: Arc<dyn Strategy>, y: FreeVector) -> Result<Arc<dyn Strategy>> {
    Ok(Arc::new(Midpoint::new(inner, y)?))
}
