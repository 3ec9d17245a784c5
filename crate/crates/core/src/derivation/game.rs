//! Playing strategies against an adversary into transcripts.

use std::collections::HashSet;
use std::sync::Arc;

use num_traits::Signed;

use super::adversary::{Adversary, AdversaryConfig, AdversaryKind};
use super::strategy::{PoleMolecule, Strategy};
use super::WeakNeighborhood;
use crate::diamond::{Diamond, DiamondSpec};
use crate::error::{Error, Result};
use crate::freespace::{free_norm, FreeVector};
use crate::lipschitz::LipschitzFunction;
use crate::rational::{int, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptNode {
    pub target: FreeVector,
    pub depth: usize,
    pub epsilon: Rational,
    pub moves: Vec<Move>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Move {
    pub neighborhood: WeakNeighborhood,
    pub response: FreeVector,
    pub response_subtree: TranscriptNode,
    pub target_subtree: TranscriptNode,
}

impl TranscriptNode {
    /// Depth-first visit with node paths `root`, `root/0r`, `root/0t`, ...:
    /// `{round}r` descends into the response subtree, `{round}t` into the
    /// target subtree.
    pub fn walk<'a>(&'a self, path: String, visit: &mut dyn FnMut(&str, &'a TranscriptNode)) {
        visit(&path, self);
        for (r, m) in self.moves.iter().enumerate() {
            m.response_subtree.walk(format!("{path}/{r}r"), visit);
            m.target_subtree.walk(format!("{path}/{r}t"), visit);
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self
            .moves
            .iter()
            .map(|m| m.response_subtree.node_count() + m.target_subtree.node_count())
            .sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameTranscript {
    pub spec: DiamondSpec,
    /// How the neighborhoods were generated, when known.
    pub adversary: Option<AdversaryConfig>,
    pub root: TranscriptNode,
}

impl GameTranscript {
    pub fn nodes(&self) -> Vec<(String, &TranscriptNode)> {
        let mut out = Vec::new();
        self.root
            .walk("root".to_string(), &mut |p, n| out.push((p.to_string(), n)));
        out
    }

    /// Every target and response, deduplicated, in first-visit order.
    pub fn vectors(&self) -> Vec<FreeVector> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (_, node) in self.nodes() {
            let vs = std::iter::once(&node.target).chain(node.moves.iter().map(|m| &m.response));
            for v in vs {
                if seen.insert(v) {
                    out.push(v.clone());
                }
            }
        }
        out
    }

    /// Families (functionals and tolerance) posed at every internal node.
    pub fn universal_families(&self) -> Vec<(Vec<LipschitzFunction>, Rational)> {
        let nodes = self.nodes();
        let internal: Vec<&TranscriptNode> = nodes
            .iter()
            .map(|(_, n)| *n)
            .filter(|n| n.depth > 0)
            .collect();
        let Some(first) = internal.first() else {
            return Vec::new();
        };
        let mut out: Vec<(Vec<LipschitzFunction>, Rational)> = Vec::new();
        for m in &first.moves {
            let fam = (m.neighborhood.functionals.clone(), m.neighborhood.eta.clone());
            if out.contains(&fam) {
                continue;
            }
            let everywhere = internal.iter().all(|n| {
                n.moves.iter().any(|o| {
                    o.neighborhood.functionals == fam.0 && o.neighborhood.eta == fam.1
                })
            });
            if everywhere {
                out.push(fam);
            }
        }
        out
    }
}

/// Norming potential of `v`, used as an adaptive functional.
fn potential_of(diamond: &Diamond, v: &FreeVector) -> Result<LipschitzFunction> {
    Ok(free_norm(&diamond.space, v)?.1.potential)
}

fn play_node(
    strategy: &Arc<dyn Strategy>,
    adversary: &Adversary,
    path: &str,
    pool: &[(FreeVector, LipschitzFunction)],
) -> Result<TranscriptNode> {
    let target = strategy.target().clone();
    let depth = strategy.depth();
    let mut moves = Vec::new();
    if depth > 0 {
        let usable: Vec<LipschitzFunction> = pool
            .iter()
            .filter(|(t, _)| t != &target)
            .map(|(_, f)| f.clone())
            .collect();
        let mut child_pool = pool.to_vec();
        if adversary.config().kind == AdversaryKind::AdaptiveDual {
            child_pool.push((target.clone(), potential_of(strategy.space(), &target)?));
        }
        for round in 0..adversary.config().rounds {
            let nbhd = adversary.pose(path, round, &target, &usable)?;
            let reply = strategy.respond(&nbhd)?;
            let (response_subtree, target_subtree) = rayon::join(
                || {
                    play_node(
                        &reply.response_strategy,
                        adversary,
                        &format!("{path}/{round}r"),
                        &child_pool,
                    )
                },
                || play_node(&reply.target_strategy, adversary, &format!("{path}/{round}t"), pool),
            );
            moves.push(Move {
                neighborhood: nbhd,
                response: reply.response,
                response_subtree: response_subtree?,
                target_subtree: target_subtree?,
            });
        }
    }
    Ok(TranscriptNode {
        target,
        depth,
        epsilon: strategy.epsilon().clone(),
        moves,
    })
}

/// Plays `strategy` against `adversary`, which must pose functionals on the
/// strategy's space.
pub fn play(strategy: Arc<dyn Strategy>, adversary: &Adversary) -> Result<GameTranscript> {
    let root = play_node(&strategy, adversary, "root", &[])?;
    Ok(GameTranscript {
        spec: strategy.space().spec.clone(),
        adversary: Some(adversary.config().clone()),
        root,
    })
}

/// A depth-`depth` transcript for the pole molecule of `diamond`.
pub fn prover_certify(
    diamond: &Arc<Diamond>,
    depth: usize,
    config: &AdversaryConfig,
    epsilon: &Rational,
) -> Result<GameTranscript> {
    if !epsilon.is_positive() || epsilon > &int(1) {
        return Err(Error::Invalid("epsilon must lie in (0, 1]".into()));
    }
    let strategy: Arc<dyn Strategy> = Arc::new(PoleMolecule::new(diamond.clone(), depth, epsilon.clone())?);
    let adversary = Adversary::new(config, diamond.clone())?;
    play(strategy, &adversary)
}
