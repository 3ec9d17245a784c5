//! Independent re-checking of transcripts.

use std::fmt;

use num_traits::{Signed, Zero};
use rayon::prelude::*;

use super::game::{GameTranscript, TranscriptNode};
use crate::error::Result;
use crate::freespace::{norm, pair, FreeVector};
use crate::metric::MetricSpace;
use crate::rational::{format_rational, int, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// `what` is `target` or `response`.
    UnitBall { what: &'static str, round: Option<usize>, norm: String },
    MissingMoves,
    MovesAtDepthZero,
    CenterMismatch { round: usize },
    EmptyFamily { round: usize },
    NonPositiveEta { round: usize },
    Functional { round: usize, index: usize, problem: String },
    Neighborhood { round: usize, index: usize, gap: String, eta: String },
    Separation { round: usize, distance: String, epsilon: String },
    NonPositiveEpsilon,
    /// `which` is `response` or `target`.
    Subtree { round: usize, which: &'static str, problem: String },
    Malformed(String),
}

impl Violation {
    /// Short name of the violated condition.
    pub fn condition(&self) -> &'static str {
        match self {
            Violation::UnitBall { .. } => "unit ball",
            Violation::MissingMoves => "missing moves",
            Violation::MovesAtDepthZero => "moves at depth zero",
            Violation::CenterMismatch { .. } => "center",
            Violation::EmptyFamily { .. } => "empty family",
            Violation::NonPositiveEta { .. } => "eta",
            Violation::Functional { .. } => "functional",
            Violation::Neighborhood { .. } => "neighborhood",
            Violation::Separation { .. } => "separation",
            Violation::NonPositiveEpsilon => "epsilon",
            Violation::Subtree { .. } => "subtree",
            Violation::Malformed(_) => "malformed",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnitBall { what, round, norm } => match round {
                Some(r) => write!(f, "unit ball: {what} of round {r} has norm {norm}"),
                None => write!(f, "unit ball: {what} has norm {norm}"),
            },
            Violation::MissingMoves => f.write_str("missing moves: internal node answers nothing"),
            Violation::MovesAtDepthZero => f.write_str("moves at depth zero"),
            Violation::CenterMismatch { round } => {
                write!(f, "center: round {round} is not centered at the target")
            }
            Violation::EmptyFamily { round } => write!(f, "empty family in round {round}"),
            Violation::NonPositiveEta { round } => write!(f, "eta: nonpositive in round {round}"),
            Violation::Functional { round, index, problem } => {
                write!(f, "functional {index} of round {round}: {problem}")
            }
            Violation::Neighborhood { round, index, gap, eta } => write!(
                f,
                "neighborhood: round {round}, functional {index} moves by {gap} > {eta}"
            ),
            Violation::Separation { round, distance, epsilon } => write!(
                f,
                "separation: round {round} response at distance {distance} < {epsilon}"
            ),
            Violation::NonPositiveEpsilon => f.write_str("epsilon: nonpositive"),
            Violation::Subtree { round, which, problem } => {
                write!(f, "subtree: {which} subtree of round {round}: {problem}")
            }
            Violation::Malformed(m) => write!(f, "malformed: {m}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeReport {
    pub path: String,
    pub depth: usize,
    pub violations: Vec<Violation>,
}

impl NodeReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationReport {
    pub nodes: Vec<NodeReport>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.nodes.iter().all(NodeReport::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &NodeReport> {
        self.nodes.iter().filter(|n| !n.passed())
    }

    pub fn node(&self, path: &str) -> Option<&NodeReport> {
        self.nodes.iter().find(|n| n.path == path)
    }
}

/// Checks every node of `t` against `space`: norms through exact transport,
/// neighborhoods through exact pairings. Nothing about how the transcript was
/// produced is trusted.
pub fn verify_transcript(space: &MetricSpace, t: &GameTranscript) -> VerificationReport {
    let nodes = t.nodes();
    let reports = nodes
        .par_iter()
        .map(|(path, node)| {
            let violations = match check_node(space, node) {
                Ok(v) => v,
                Err(e) => vec![Violation::Malformed(e.to_string())],
            };
            NodeReport {
                path: path.clone(),
                depth: node.depth,
                violations,
            }
        })
        .collect();
    VerificationReport { nodes: reports }
}

fn balanced_norm(space: &MetricSpace, v: &FreeVector) -> Result<Rational> {
    v.check_in(space)?;
    norm(space, v)
}

fn check_node(space: &MetricSpace, node: &TranscriptNode) -> Result<Vec<Violation>> {
    let base = space.base();
    let one = int(1);
    let mut out = Vec::new();
    if !node.epsilon.is_positive() {
        out.push(Violation::NonPositiveEpsilon);
    }
    let target_norm = balanced_norm(space, &node.target)?;
    if target_norm > one {
        out.push(Violation::UnitBall {
            what: "target",
            round: None,
            norm: format_rational(&target_norm),
        });
    }
    match (node.depth, node.moves.is_empty()) {
        (0, false) => out.push(Violation::MovesAtDepthZero),
        (d, true) if d > 0 => out.push(Violation::MissingMoves),
        _ => {}
    }
    for (round, m) in node.moves.iter().enumerate() {
        let nb = &m.neighborhood;
        if !nb.center.same_element(&node.target, base) {
            out.push(Violation::CenterMismatch { round });
        }
        if nb.functionals.is_empty() {
            out.push(Violation::EmptyFamily { round });
        }
        if !nb.eta.is_positive() {
            out.push(Violation::NonPositiveEta { round });
        }
        let diff = (&m.response - &node.target).balanced(base);
        for (index, f) in nb.functionals.iter().enumerate() {
            if f.len() != space.len() || !f.is_total() {
                out.push(Violation::Functional {
                    round,
                    index,
                    problem: "not defined on every point".into(),
                });
                continue;
            }
            if !f.value(base)?.is_zero() {
                out.push(Violation::Functional {
                    round,
                    index,
                    problem: "does not vanish at the base point".into(),
                });
            }
            let gap = pair(f, &diff)?.abs();
            if gap > nb.eta {
                out.push(Violation::Neighborhood {
                    round,
                    index,
                    gap: format_rational(&gap),
                    eta: format_rational(&nb.eta),
                });
            }
        }
        let response_norm = balanced_norm(space, &m.response)?;
        if response_norm > one {
            out.push(Violation::UnitBall {
                what: "response",
                round: Some(round),
                norm: format_rational(&response_norm),
            });
        }
        let distance = norm(space, &diff)?;
        if distance < node.epsilon {
            out.push(Violation::Separation {
                round,
                distance: format_rational(&distance),
                epsilon: format_rational(&node.epsilon),
            });
        }
        for (which, sub, expected) in [
            ("response", &m.response_subtree, &m.response),
            ("target", &m.target_subtree, &node.target),
        ] {
            let mut problems = Vec::new();
            if !sub.target.same_element(expected, base) {
                problems.push("target differs".to_string());
            }
            if sub.depth + 1 != node.depth {
                problems.push(format!("depth {} under depth {}", sub.depth, node.depth));
            }
            if sub.epsilon != node.epsilon {
                problems.push("epsilon differs".to_string());
            }
            out.extend(problems.into_iter().map(|problem| Violation::Subtree {
                round,
                which,
                problem,
            }));
        }
    }
    Ok(out)
}
