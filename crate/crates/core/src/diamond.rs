//! Finite truncations of the countably branching diamond spaces `D_alpha`.
//!
//! `D_1` has two poles at distance 2 and `n` midpoints at distance 1 from
//! both poles. A successor stage replaces each of the `2n` edges of `D_1` by a
//! half-scaled copy of the predecessor, gluing copy poles to the edge
//! endpoints. A limit stage glues the first `L` spaces of the canonical
//! fundamental sequence together at their poles.
//!
//! Every built space puts `top` at index 0 and `bottom` at index 1; the base
//! point is the left-most midpoint `mids[0]`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::MetricSpace;
use crate::ordinal::{Ordinal, OrdinalKind};
use crate::rational::{half, int, Rational};

pub const DEFAULT_POINT_BUDGET: u128 = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiamondSpec {
    pub alpha: Ordinal,
    pub branches: usize,
    pub limit_width: usize,
}

impl DiamondSpec {
    pub fn new(alpha: Ordinal, branches: usize, limit_width: usize) -> Result<Self> {
        let spec = DiamondSpec {
            alpha,
            branches,
            limit_width,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `D_k` with `n` branches; the limit width is irrelevant and set to 1.
    pub fn finite(k: u64, branches: usize) -> Result<Self> {
        Self::new(Ordinal::finite(k), branches, 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha.is_zero() {
            return Err(Error::InvalidSpec("alpha must be positive".into()));
        }
        if self.branches < 2 {
            return Err(Error::InvalidSpec(format!(
                "at least 2 branches required, got {}",
                self.branches
            )));
        }
        if self.limit_width < 1 {
            return Err(Error::InvalidSpec("limit width must be at least 1".into()));
        }
        Ok(())
    }

    fn with_alpha(&self, alpha: Ordinal) -> DiamondSpec {
        DiamondSpec {
            alpha,
            ..self.clone()
        }
    }

    /// Number of points of the truncation, saturating at `u128::MAX`.
    pub fn point_count(&self) -> Result<u128> {
        self.validate()?;
        let mut memo = HashMap::new();
        count_points(&self.alpha, self.branches as u128, self.limit_width, &mut memo)
    }
}

impl fmt::Display for DiamondSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "D[{}; n={}", self.alpha, self.branches)?;
        if !self.alpha.as_finite().is_some() {
            write!(f, ", L={}", self.limit_width)?;
        }
        f.write_str("]")
    }
}

fn count_points(
    alpha: &Ordinal,
    n: u128,
    width: usize,
    memo: &mut HashMap<Ordinal, u128>,
) -> Result<u128> {
    if let Some(&c) = memo.get(alpha) {
        return Ok(c);
    }
    let c = match alpha.classify() {
        OrdinalKind::Zero => return Err(Error::InvalidSpec("alpha must be positive".into())),
        OrdinalKind::Successor(pred) if pred.is_zero() => n.saturating_add(2),
        OrdinalKind::Successor(pred) => {
            let p = count_points(&pred, n, width, memo)?;
            (2 * n)
                .saturating_mul(p.saturating_sub(2))
                .saturating_add(n + 2)
        }
        OrdinalKind::Limit => {
            let mut total: u128 = 2;
            for m in 1..=width as u64 {
                let beta = alpha.fundamental_sequence(m)?;
                total = total.saturating_add(count_points(&beta, n, width, memo)? - 2);
            }
            total
        }
    };
    memo.insert(alpha.clone(), c);
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Plus,
    Minus,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Segment {
    Edge { side: Side, branch: usize },
    Summand(Ordinal),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Terminal {
    Top,
    Bottom,
    Mid(usize),
}

/// Canonical name of a point: the chain of sub-copies descended into, then a
/// landmark of the innermost copy. Poles shared between copies are always
/// named at the outermost level.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PointAddress {
    pub path: Vec<Segment>,
    pub terminal: Terminal,
}

impl PointAddress {
    pub fn landmark(terminal: Terminal) -> Self {
        PointAddress {
            path: Vec::new(),
            terminal,
        }
    }

    fn prefixed(&self, seg: Segment) -> Self {
        let mut path = Vec::with_capacity(self.path.len() + 1);
        path.push(seg);
        path.extend(self.path.iter().cloned());
        PointAddress {
            path,
            terminal: self.terminal,
        }
    }

    /// True when every branch index along the address is at most `m`.
    pub fn within_branches(&self, m: usize) -> bool {
        let path_ok = self.path.iter().all(|s| match s {
            Segment::Edge { branch, .. } => *branch <= m,
            Segment::Summand(_) => true,
        });
        path_ok
            && match self.terminal {
                Terminal::Mid(i) => i <= m,
                _ => true,
            }
    }
}

impl fmt::Display for PointAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for seg in &self.path {
            match seg {
                Segment::Edge { side, branch } => {
                    let s = if *side == Side::Plus { '+' } else { '-' };
                    write!(f, "{s}{branch}/")?;
                }
                Segment::Summand(beta) => write!(f, "[{beta}]/")?,
            }
        }
        match self.terminal {
            Terminal::Top => f.write_str("top"),
            Terminal::Bottom => f.write_str("bottom"),
            Terminal::Mid(i) => write!(f, "mid{i}"),
        }
    }
}

impl FromStr for PointAddress {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::UnknownAddress(s.to_string());
        let parts: Vec<&str> = s.split('/').collect();
        let (last, segs) = parts.split_last().ok_or_else(bad)?;
        let mut path = Vec::with_capacity(segs.len());
        for seg in segs {
            if let Some(inner) = seg.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
                path.push(Segment::Summand(inner.parse()?));
            } else if let Some(b) = seg.strip_prefix('+') {
                let branch = b.parse().map_err(|_| bad())?;
                path.push(Segment::Edge {
                    side: Side::Plus,
                    branch,
                });
            } else if let Some(b) = seg.strip_prefix('-') {
                let branch = b.parse().map_err(|_| bad())?;
                path.push(Segment::Edge {
                    side: Side::Minus,
                    branch,
                });
            } else {
                return Err(bad());
            }
        }
        let terminal = match *last {
            "top" => Terminal::Top,
            "bottom" => Terminal::Bottom,
            t => Terminal::Mid(
                t.strip_prefix("mid")
                    .and_then(|i| i.parse().ok())
                    .ok_or_else(bad)?,
            ),
        };
        Ok(PointAddress { path, terminal })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiamondLandmarks {
    pub top: usize,
    pub bottom: usize,
    pub ell: usize,
    /// `mids[i - 1]` is the midpoint `x^i`.
    pub mids: Vec<usize>,
    /// Successor stages: predecessor index -> index here, for each edge copy.
    pub subcopies: BTreeMap<(Side, usize), Vec<usize>>,
    /// Limit stages: predecessor index -> index here, for each kept summand.
    pub summands: Vec<(Ordinal, Vec<usize>)>,
}

#[derive(Debug)]
pub enum Stage {
    One,
    Successor(Arc<Diamond>),
    Limit(Vec<Arc<Diamond>>),
}

#[derive(Debug)]
pub struct Diamond {
    pub spec: DiamondSpec,
    pub space: MetricSpace,
    pub addresses: Vec<PointAddress>,
    pub landmarks: DiamondLandmarks,
    pub stage: Stage,
}

impl Diamond {
    pub fn build(spec: &DiamondSpec) -> Result<Arc<Diamond>> {
        Self::build_with_budget(spec, DEFAULT_POINT_BUDGET)
    }

    pub fn build_with_budget(spec: &DiamondSpec, budget: u128) -> Result<Arc<Diamond>> {
        let estimated = spec.point_count()?;
        if estimated > budget {
            return Err(Error::BudgetExceeded { estimated, budget });
        }
        let mut memo = HashMap::new();
        build_rec(spec, &mut memo)
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn alpha(&self) -> &Ordinal {
        &self.spec.alpha
    }

    pub fn branches(&self) -> usize {
        self.spec.branches
    }

    pub fn top(&self) -> usize {
        self.landmarks.top
    }

    pub fn bottom(&self) -> usize {
        self.landmarks.bottom
    }

    pub fn base(&self) -> usize {
        self.landmarks.ell
    }

    /// The midpoint `x^i`, 1-based.
    pub fn mid(&self, i: usize) -> Result<usize> {
        if i == 0 || i > self.landmarks.mids.len() {
            return Err(Error::BranchIndex {
                branch: i,
                min: 1,
                max: self.landmarks.mids.len(),
            });
        }
        Ok(self.landmarks.mids[i - 1])
    }

    pub fn predecessor(&self) -> Option<&Arc<Diamond>> {
        match &self.stage {
            Stage::Successor(p) => Some(p),
            _ => None,
        }
    }

    /// The injection of the predecessor truncation onto the copy `(side, branch)`.
    /// It sends the predecessor's top/bottom to `(top, x^branch)` for `Plus`
    /// and `(x^branch, bottom)` for `Minus`, and halves every distance.
    pub fn subcopy_map(&self, side: Side, branch: usize) -> Result<&[usize]> {
        if self.predecessor().is_none() {
            return Err(Error::NotSuccessor(self.alpha().to_string()));
        }
        self.landmarks
            .subcopies
            .get(&(side, branch))
            .map(Vec::as_slice)
            .ok_or(Error::BranchIndex {
                branch,
                min: 1,
                max: self.branches(),
            })
    }

    /// Inverse of [`Diamond::subcopy_map`] on its image.
    pub fn subcopy_inverse(&self, side: Side, branch: usize) -> Result<Vec<Option<usize>>> {
        let map = self.subcopy_map(side, branch)?;
        let mut inv = vec![None; self.len()];
        for (u, &x) in map.iter().enumerate() {
            inv[x] = Some(u);
        }
        Ok(inv)
    }

    pub fn point(&self, address: &PointAddress) -> Result<usize> {
        self.space.index_of(&address.to_string())
    }

    /// Points whose address only uses branch indices `<= m`.
    pub fn resolved_points(&self, m: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&x| self.addresses[x].within_branches(m))
            .collect()
    }

    /// Pole-preserving isometric embedding of `self` into `into`, as a map of
    /// indices. Supported when `self` has finite depth and `into` has at least
    /// as many branches and is at least as deep.
    pub fn embed_into(&self, into: &Diamond) -> Result<Vec<usize>> {
        if self.branches() > into.branches() {
            return Err(Error::MismatchedSpaces(format!(
                "cannot embed {} branches into {}",
                self.branches(),
                into.branches()
            )));
        }
        if self.alpha() > into.alpha() {
            return Err(Error::MismatchedSpaces(format!(
                "cannot embed D_{} into D_{}",
                self.alpha(),
                into.alpha()
            )));
        }
        self.addresses
            .iter()
            .map(|a| {
                let target = embed_address(self, into, a)?;
                into.point(&target)
            })
            .collect()
    }
}

fn embed_address(from: &Diamond, into: &Diamond, addr: &PointAddress) -> Result<PointAddress> {
    if from.alpha() == into.alpha() {
        return Ok(addr.clone());
    }
    let unsupported = || {
        Error::MismatchedSpaces(format!(
            "no pole embedding from D_{} into D_{}",
            from.alpha(),
            into.alpha()
        ))
    };
    match &into.stage {
        Stage::Limit(summands) => {
            let host = summands
                .iter()
                .find(|s| s.alpha() >= from.alpha())
                .ok_or_else(unsupported)?;
            let inner = embed_address(from, host, addr)?;
            let is_pole = inner.path.is_empty()
                && matches!(inner.terminal, Terminal::Top | Terminal::Bottom);
            if is_pole {
                Ok(inner)
            } else {
                Ok(inner.prefixed(Segment::Summand(host.alpha().clone())))
            }
        }
        Stage::Successor(into_pred) => match &from.stage {
            Stage::One => Ok(addr.clone()),
            Stage::Successor(from_pred) => {
                let Some((first, rest)) = addr.path.split_first() else {
                    return Ok(addr.clone());
                };
                let inner = PointAddress {
                    path: rest.to_vec(),
                    terminal: addr.terminal,
                };
                let mapped = embed_address(from_pred, into_pred, &inner)?;
                Ok(mapped.prefixed(first.clone()))
            }
            Stage::Limit(_) => Err(unsupported()),
        },
        Stage::One => Err(unsupported()),
    }
}

fn build_rec(spec: &DiamondSpec, memo: &mut HashMap<Ordinal, Arc<Diamond>>) -> Result<Arc<Diamond>> {
    if let Some(d) = memo.get(&spec.alpha) {
        return Ok(d.clone());
    }
    let built = match spec.alpha.classify() {
        OrdinalKind::Zero => return Err(Error::InvalidSpec("alpha must be positive".into())),
        OrdinalKind::Successor(pred) if pred.is_zero() => build_one(spec)?,
        OrdinalKind::Successor(pred) => {
            let p = build_rec(&spec.with_alpha(pred), memo)?;
            build_successor(spec, p)?
        }
        OrdinalKind::Limit => {
            let mut parts = Vec::with_capacity(spec.limit_width);
            for m in 1..=spec.limit_width as u64 {
                let beta = spec.alpha.fundamental_sequence(m)?;
                parts.push(build_rec(&spec.with_alpha(beta), memo)?);
            }
            build_limit(spec, parts)?
        }
    };
    let built = Arc::new(built);
    memo.insert(spec.alpha.clone(), built.clone());
    Ok(built)
}

/// Distances of `D_1` between its landmarks, indexed top=0, bottom=1, x^i=i+1.
fn one_skeleton(n: usize) -> Vec<Rational> {
    let k = n + 2;
    let mut d = vec![int(0); k * k];
    for x in 0..k {
        for y in 0..k {
            d[x * k + y] = match (x, y) {
                _ if x == y => int(0),
                (0, 1) | (1, 0) => int(2),
                (0, _) | (1, _) | (_, 0) | (_, 1) => int(1),
                _ => int(2),
            };
        }
    }
    d
}

fn one_addresses(n: usize) -> Vec<PointAddress> {
    let mut a = vec![
        PointAddress::landmark(Terminal::Top),
        PointAddress::landmark(Terminal::Bottom),
    ];
    a.extend((1..=n).map(|i| PointAddress::landmark(Terminal::Mid(i))));
    a
}

fn build_one(spec: &DiamondSpec) -> Result<Diamond> {
    let n = spec.branches;
    let addresses = one_addresses(n);
    let labels = addresses.iter().map(|a| a.to_string()).collect();
    let space = MetricSpace::new(labels, one_skeleton(n), 2)?;
    Ok(Diamond {
        spec: spec.clone(),
        space,
        addresses,
        landmarks: DiamondLandmarks {
            top: 0,
            bottom: 1,
            ell: 2,
            mids: (2..n + 2).collect(),
            subcopies: BTreeMap::new(),
            summands: Vec::new(),
        },
        stage: Stage::One,
    })
}

/// A scaled copy of `inner` glued into a skeleton at two skeleton points.
struct Block<'a> {
    inner: &'a Diamond,
    scale: Rational,
    top_pole: usize,
    bottom_pole: usize,
    segment: Segment,
}

struct Glued {
    addresses: Vec<PointAddress>,
    dist: Vec<Rational>,
    /// Per block: inner index -> glued index.
    maps: Vec<Vec<usize>>,
}

/// Glues block interiors onto a skeleton. Paths between different blocks
/// (or between a block and the skeleton) must pass through block poles,
/// and the skeleton distances are already geodesic in the glued space.
fn glue(skeleton: &[Rational], skeleton_addresses: Vec<PointAddress>, blocks: &[Block<'_>]) -> Glued {
    let k = skeleton_addresses.len();
    let mut addresses = skeleton_addresses;
    // (block, local index) for every glued point; skeleton points have None.
    let mut owner: Vec<Option<(usize, usize)>> = vec![None; k];
    let mut maps = Vec::with_capacity(blocks.len());
    for (b, block) in blocks.iter().enumerate() {
        let mut map = vec![0; block.inner.len()];
        map[0] = block.top_pole;
        map[1] = block.bottom_pole;
        for (u, slot) in map.iter_mut().enumerate().skip(2) {
            *slot = addresses.len();
            addresses.push(block.inner.addresses[u].prefixed(block.segment.clone()));
            owner.push(Some((b, u)));
        }
        maps.push(map);
    }
    let n = addresses.len();
    let anchors: Vec<Vec<(usize, Rational)>> = owner
        .iter()
        .enumerate()
        .map(|(p, o)| match o {
            None => vec![(p, int(0))],
            Some((b, u)) => {
                let blk = &blocks[*b];
                vec![
                    (blk.top_pole, &blk.scale * blk.inner.space.d(*u, 0)),
                    (blk.bottom_pole, &blk.scale * blk.inner.space.d(*u, 1)),
                ]
            }
        })
        .collect();
    let mut dist = vec![int(0); n * n];
    for p in 0..n {
        for q in p + 1..n {
            let mut best: Option<Rational> = None;
            if let (Some((bp, up)), Some((bq, uq))) = (owner[p], owner[q]) {
                if bp == bq {
                    best = Some(&blocks[bp].scale * blocks[bp].inner.space.d(up, uq));
                }
            }
            for (a, da) in &anchors[p] {
                for (c, dc) in &anchors[q] {
                    let cand = da + &skeleton[a * k + c] + dc;
                    if best.as_ref().is_none_or(|b| &cand < b) {
                        best = Some(cand);
                    }
                }
            }
            let best = best.expect("every point has an anchor");
            dist[q * n + p] = best.clone();
            dist[p * n + q] = best;
        }
    }
    Glued {
        addresses,
        dist,
        maps,
    }
}

fn build_successor(spec: &DiamondSpec, pred: Arc<Diamond>) -> Result<Diamond> {
    let n = spec.branches;
    let mut blocks = Vec::with_capacity(2 * n);
    for side in [Side::Plus, Side::Minus] {
        for branch in 1..=n {
            let mid = branch + 1;
            let (top_pole, bottom_pole) = match side {
                Side::Plus => (0, mid),
                Side::Minus => (mid, 1),
            };
            blocks.push(Block {
                inner: &pred,
                scale: half(),
                top_pole,
                bottom_pole,
                segment: Segment::Edge { side, branch },
            });
        }
    }
    let glued = glue(&one_skeleton(n), one_addresses(n), &blocks);
    let mut subcopies = BTreeMap::new();
    for (block, map) in blocks.iter().zip(glued.maps) {
        if let Segment::Edge { side, branch } = block.segment {
            subcopies.insert((side, branch), map);
        }
    }
    drop(blocks);
    let labels = glued.addresses.iter().map(|a| a.to_string()).collect();
    let space = MetricSpace::new(labels, glued.dist, 2)?;
    Ok(Diamond {
        spec: spec.clone(),
        space,
        addresses: glued.addresses,
        landmarks: DiamondLandmarks {
            top: 0,
            bottom: 1,
            ell: 2,
            mids: (2..n + 2).collect(),
            subcopies,
            summands: Vec::new(),
        },
        stage: Stage::Successor(pred),
    })
}

fn build_limit(spec: &DiamondSpec, parts: Vec<Arc<Diamond>>) -> Result<Diamond> {
    let skeleton = vec![int(0), int(2), int(2), int(0)];
    let skeleton_addresses = vec![
        PointAddress::landmark(Terminal::Top),
        PointAddress::landmark(Terminal::Bottom),
    ];
    let blocks: Vec<Block<'_>> = parts
        .iter()
        .map(|p| Block {
            inner: p,
            scale: int(1),
            top_pole: 0,
            bottom_pole: 1,
            segment: Segment::Summand(p.alpha().clone()),
        })
        .collect();
    let glued = glue(&skeleton, skeleton_addresses, &blocks);
    drop(blocks);
    let summands: Vec<(Ordinal, Vec<usize>)> = parts
        .iter()
        .zip(glued.maps)
        .map(|(p, m)| (p.alpha().clone(), m))
        .collect();
    let first = &parts[0];
    let mids: Vec<usize> = first
        .landmarks
        .mids
        .iter()
        .map(|&x| summands[0].1[x])
        .collect();
    let ell = mids[0];
    let labels = glued.addresses.iter().map(|a| a.to_string()).collect();
    let space = MetricSpace::new(labels, glued.dist, ell)?;
    Ok(Diamond {
        spec: spec.clone(),
        space,
        addresses: glued.addresses,
        landmarks: DiamondLandmarks {
            top: 0,
            bottom: 1,
            ell,
            mids,
            subcopies: BTreeMap::new(),
            summands,
        },
        stage: Stage::Limit(parts),
    })
}
