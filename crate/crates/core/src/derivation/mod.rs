//! A finite game shadowing weak derivations of the unit ball.
//!
//! An adversary poses weak neighborhoods of a target vector, given by finitely
//! many Lipschitz functionals and a tolerance. The prover answers with a
//! vector in the neighborhood, inside the unit ball, at distance at least
//! `epsilon` from the target, and must keep both the answer and the target
//! alive one level lower. A transcript of such a game is checked independently
//! by [`verify_transcript`]; accepted transcripts of depth `k` make the target
//! survive `k` rounds of [`relative_derivation_oracle`] for every family posed
//! at every internal node.
//!
//! The game is a sound proxy relative to the posed functionals only. It says
//! nothing about functionals the adversary did not present.

mod adversary;
mod game;
mod oracle;
mod strategy;
mod verify;

pub use adversary::{distance_function, random_lipschitz, Adversary, AdversaryConfig, AdversaryKind};
pub use game::{play, prover_certify, GameTranscript, Move, TranscriptNode};
pub use oracle::{relative_derivation_oracle, transcript_survives};
pub use strategy::{average_lift, midpoint_lift, Average, Leaf, Midpoint, PoleMolecule, Reply, Strategy};
pub use verify::{verify_transcript, NodeReport, VerificationReport, Violation};

use num_traits::Signed;

use crate::diamond::Diamond;
use crate::error::{Error, Result};
use crate::freespace::{molecule, pair, FreeVector};
use crate::lipschitz::LipschitzFunction;
use crate::metric::MetricSpace;
use crate::rational::{half, Rational};

/// `{v : |<f_r, v - center>| <= eta for every r}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeakNeighborhood {
    pub functionals: Vec<LipschitzFunction>,
    pub center: FreeVector,
    pub eta: Rational,
}

impl WeakNeighborhood {
    pub fn new(functionals: Vec<LipschitzFunction>, center: FreeVector, eta: Rational) -> Result<Self> {
        if functionals.is_empty() {
            return Err(Error::Invalid("a neighborhood needs at least one functional".into()));
        }
        if !eta.is_positive() {
            return Err(Error::Invalid("eta must be positive".into()));
        }
        Ok(WeakNeighborhood {
            functionals,
            center,
            eta,
        })
    }

    /// The same functionals and tolerance around another center.
    pub fn recentered(&self, center: FreeVector) -> WeakNeighborhood {
        WeakNeighborhood {
            functionals: self.functionals.clone(),
            center,
            eta: self.eta.clone(),
        }
    }
}

/// Exact closed membership test. The difference is balanced first, so
/// functionals not vanishing at the base point are still handled as elements
/// of the dual.
pub fn in_neighborhood(space: &MetricSpace, nbhd: &WeakNeighborhood, v: &FreeVector) -> Result<bool> {
    let diff = (v - &nbhd.center).balanced(space.base());
    for f in &nbhd.functionals {
        if pair(f, &diff)?.abs() > nbhd.eta {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `m_{top, bottom}`.
pub fn pole_molecule(diamond: &Diamond) -> FreeVector {
    molecule(&diamond.space, diamond.top(), diamond.bottom()).expect("poles are distinct")
}

/// The escape answer `(m_{top, x^j} + m_{x^i, bottom}) / 2` and its pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Escape {
    pub i: usize,
    pub j: usize,
    pub vector: FreeVector,
}

/// Answers a neighborhood of the pole molecule with the lexicographically
/// smallest `(i, j)`, `2 <= i < j <= n`, whose escape vector lies in it. The
/// escape vector differs from the pole molecule by `(delta(x^i) - delta(x^j))/2`,
/// which has norm exactly 1.
pub fn prover_escape(diamond: &Diamond, nbhd: &WeakNeighborhood) -> Result<Escape> {
    let space = &diamond.space;
    let pole = pole_molecule(diamond);
    if !nbhd.center.same_element(&pole, space.base()) {
        return Err(Error::CenterMismatch);
    }
    let n = diamond.branches();
    for i in 2..=n {
        for j in i + 1..=n {
            let up = molecule(space, diamond.top(), diamond.mid(j)?)?;
            let down = molecule(space, diamond.mid(i)?, diamond.bottom())?;
            let vector = (&up + &down).scale(&half()).balanced(space.base());
            if in_neighborhood(space, nbhd, &vector)? {
                return Ok(Escape { i, j, vector });
            }
        }
    }
    Err(Error::InsufficientBranching {
        level: diamond.alpha().to_string(),
        branches: n,
        retry_with: n.max(2) + 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diamond::DiamondSpec;
    use crate::freespace::norm;
    use crate::rational::{int, rat};

    fn d(k: u64, n: usize) -> std::sync::Arc<Diamond> {
        Diamond::build(&DiamondSpec::finite(k, n).unwrap()).unwrap()
    }

    #[test]
    fn center_and_boundary_are_inside() {
        let dm = d(1, 3);
        let f = distance_function(&dm.space, dm.top());
        let c = pole_molecule(&dm);
        let v = WeakNeighborhood::new(vec![f.clone()], c.clone(), rat(1, 2)).unwrap();
        assert!(in_neighborhood(&dm.space, &v, &c).unwrap());
        // <f, delta(top)/2> = -1/2 exactly on the boundary
        let w = &c + &FreeVector::delta(dm.top()).scale(&half());
        assert_eq!(pair(&f, &(&w - &c)).unwrap().abs(), rat(1, 2));
        assert!(in_neighborhood(&dm.space, &v, &w).unwrap());
        let far = &c + &FreeVector::delta(dm.top());
        assert!(!in_neighborhood(&dm.space, &v, &far).unwrap());
    }

    #[test]
    fn symmetric_family_escapes_at_two_three() {
        let dm = d(1, 8);
        let f = distance_function(&dm.space, dm.top());
        let v = WeakNeighborhood::new(vec![f], pole_molecule(&dm), rat(1, 10)).unwrap();
        let e = prover_escape(&dm, &v).unwrap();
        assert_eq!((e.i, e.j), (2, 3));
        let sep = norm(&dm.space, &(&e.vector - &pole_molecule(&dm))).unwrap();
        assert_eq!(sep, int(1));
    }

    #[test]
    fn two_branches_cannot_escape() {
        let dm = d(1, 2);
        let f = distance_function(&dm.space, dm.top());
        let v = WeakNeighborhood::new(vec![f], pole_molecule(&dm), rat(1, 10)).unwrap();
        assert!(matches!(
            prover_escape(&dm, &v),
            Err(Error::InsufficientBranching { branches: 2, retry_with: 3, .. })
        ));
    }

    #[test]
    fn escape_rejects_foreign_center() {
        let dm = d(1, 3);
        let f = distance_function(&dm.space, dm.top());
        let v = WeakNeighborhood::new(vec![f], FreeVector::delta(0), rat(1, 10)).unwrap();
        assert_eq!(prover_escape(&dm, &v), Err(Error::CenterMismatch));
    }

    #[test]
    fn separating_family_exhausts_pairs() {
        // f = d(., x^2) separates x^2 from x^3 by 2 > 2 eta.
        let dm = d(1, 3);
        let f = distance_function(&dm.space, dm.mid(2).unwrap());
        let v = WeakNeighborhood::new(vec![f], pole_molecule(&dm), rat(1, 2)).unwrap();
        assert!(matches!(
            prover_escape(&dm, &v),
            Err(Error::InsufficientBranching { retry_with: 4, .. })
        ));
    }
}
