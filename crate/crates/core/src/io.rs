//! Canonical JSON files for spaces, vectors, functions, partitions and
//! transcripts, plus DOT export.
//!
//! Every number is an exact `"p/q"` string and every point is named by its
//! label, so files are byte-stable: writing what was read reproduces the
//! input exactly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::decomposition::SummandPartition;
use crate::derivation::{
    AdversaryConfig, GameTranscript, Move, TranscriptNode, VerificationReport, WeakNeighborhood,
};
use crate::diamond::{Diamond, DiamondSpec};
use crate::error::{Error, Result};
use crate::freespace::FreeVector;
use crate::lipschitz::LipschitzFunction;
use crate::metric::MetricSpace;
use crate::rational::{format_rational, parse_rational};

pub const SPACE_FORMAT: &str = "lipfree-space/1";
pub const VECTOR_FORMAT: &str = "lipfree-vector/1";
pub const FUNCTION_FORMAT: &str = "lipfree-function/1";
pub const PARTITION_FORMAT: &str = "lipfree-partition/1";
pub const TRANSCRIPT_FORMAT: &str = "lipfree-transcript/1";

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn from_json<T: DeserializeOwned>(text: &str, format: &str, found: impl Fn(&T) -> &str) -> Result<T> {
    let value: T = serde_json::from_str(text)?;
    if found(&value) != format {
        return Err(Error::Format(format!(
            "expected a {format} file, found {}",
            found(&value)
        )));
    }
    Ok(value)
}

fn entries(space: &MetricSpace, v: &FreeVector) -> Result<Vec<(String, String)>> {
    v.check_in(space)?;
    Ok(v.iter()
        .map(|(x, a)| (space.label(x).to_string(), format_rational(a)))
        .collect())
}

fn vector_from_entries(space: &MetricSpace, entries: &[(String, String)]) -> Result<FreeVector> {
    let mut v = FreeVector::new();
    for (label, value) in entries {
        v.add_at(space.index_of(label)?, &parse_rational(value)?);
    }
    Ok(v)
}

/// Where a file's points live.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceRef {
    Diamond(DiamondSpec),
    File(PathBuf),
}

/// A space loaded from a [`SpaceRef`].
#[derive(Debug, Clone)]
pub enum LoadedSpace {
    Diamond(Arc<Diamond>),
    Plain(Arc<MetricSpace>),
}

impl LoadedSpace {
    pub fn space(&self) -> &MetricSpace {
        match self {
            LoadedSpace::Diamond(d) => &d.space,
            LoadedSpace::Plain(s) => s,
        }
    }
}

impl SpaceRef {
    /// Builds or reads the space; relative file paths are taken from `dir`.
    pub fn load(&self, dir: &Path, budget: u128) -> Result<LoadedSpace> {
        match self {
            SpaceRef::Diamond(spec) => Ok(LoadedSpace::Diamond(Diamond::build_with_budget(spec, budget)?)),
            SpaceRef::File(p) => {
                let path = if p.is_absolute() { p.clone() } else { dir.join(p) };
                let text = std::fs::read_to_string(&path)?;
                let file = SpaceFile::from_json(&text)?;
                if let Some(spec) = &file.spec {
                    return Ok(LoadedSpace::Diamond(Diamond::build_with_budget(spec, budget)?));
                }
                Ok(LoadedSpace::Plain(Arc::new(file.to_space()?)))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LandmarkFile {
    pub top: String,
    pub bottom: String,
    pub mids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceFile {
    pub format: String,
    pub spec: Option<DiamondSpec>,
    pub base: String,
    pub landmarks: Option<LandmarkFile>,
    pub labels: Vec<String>,
    /// Row-major, one row per label.
    pub distances: Vec<Vec<String>>,
}

impl SpaceFile {
    pub fn from_space(space: &MetricSpace) -> Self {
        SpaceFile {
            format: SPACE_FORMAT.into(),
            spec: None,
            base: space.label(space.base()).into(),
            landmarks: None,
            labels: space.labels().to_vec(),
            distances: (0..space.len())
                .map(|x| (0..space.len()).map(|y| format_rational(space.d(x, y))).collect())
                .collect(),
        }
    }

    pub fn from_diamond(d: &Diamond) -> Self {
        let label = |x: usize| d.space.label(x).to_string();
        SpaceFile {
            spec: Some(d.spec.clone()),
            landmarks: Some(LandmarkFile {
                top: label(d.top()),
                bottom: label(d.bottom()),
                mids: d.landmarks.mids.iter().map(|&x| label(x)).collect(),
            }),
            ..Self::from_space(&d.space)
        }
    }

    pub fn to_space(&self) -> Result<MetricSpace> {
        let n = self.labels.len();
        if self.distances.len() != n || self.distances.iter().any(|r| r.len() != n) {
            return Err(Error::Format("distance matrix is not square".into()));
        }
        let dist = self
            .distances
            .iter()
            .flatten()
            .map(|s| parse_rational(s))
            .collect::<Result<Vec<_>>>()?;
        let base = self
            .labels
            .iter()
            .position(|l| l == &self.base)
            .ok_or_else(|| Error::UnknownAddress(self.base.clone()))?;
        MetricSpace::new(self.labels.clone(), dist, base)
    }

    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        from_json(text, SPACE_FORMAT, |f: &SpaceFile| &f.format)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VectorFile {
    pub format: String,
    pub space: SpaceRef,
    /// `(point label, coefficient)` in point order.
    pub entries: Vec<(String, String)>,
}

impl VectorFile {
    pub fn new(space_ref: SpaceRef, space: &MetricSpace, v: &FreeVector) -> Result<Self> {
        Ok(VectorFile {
            format: VECTOR_FORMAT.into(),
            space: space_ref,
            entries: entries(space, v)?,
        })
    }

    pub fn to_vector(&self, space: &MetricSpace) -> Result<FreeVector> {
        vector_from_entries(space, &self.entries)
    }

    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        from_json(text, VECTOR_FORMAT, |f: &VectorFile| &f.format)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Total,
    Partial,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionFile {
    pub format: String,
    pub space: SpaceRef,
    /// `partial` marks that points missing from `values` are undefined.
    pub domain: Domain,
    pub values: Vec<(String, String)>,
}

impl FunctionFile {
    pub fn new(space_ref: SpaceRef, space: &MetricSpace, f: &LipschitzFunction) -> Result<Self> {
        if f.len() != space.len() {
            return Err(Error::MismatchedSpaces("function does not match the space".into()));
        }
        Ok(FunctionFile {
            format: FUNCTION_FORMAT.into(),
            space: space_ref,
            domain: if f.is_total() { Domain::Total } else { Domain::Partial },
            values: f
                .domain()
                .map(|x| (space.label(x).to_string(), format_rational(f.get(x).unwrap())))
                .collect(),
        })
    }

    pub fn to_function(&self, space: &MetricSpace) -> Result<LipschitzFunction> {
        let mut entries = Vec::with_capacity(self.values.len());
        for (label, value) in &self.values {
            entries.push((space.index_of(label)?, parse_rational(value)?));
        }
        let f = LipschitzFunction::partial(space.len(), entries)?;
        if self.domain == Domain::Total && !f.is_total() {
            let missing = (0..space.len()).find(|&x| f.get(x).is_none()).unwrap();
            return Err(Error::PartialFunction(missing));
        }
        Ok(f)
    }

    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        from_json(text, FUNCTION_FORMAT, |f: &FunctionFile| &f.format)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionFile {
    pub format: String,
    pub base: String,
    pub summands: Vec<Vec<String>>,
}

impl PartitionFile {
    pub fn new(space: &MetricSpace, p: &SummandPartition) -> Self {
        PartitionFile {
            format: PARTITION_FORMAT.into(),
            base: space.label(p.base).into(),
            summands: p
                .summands
                .iter()
                .map(|s| s.iter().map(|&x| space.label(x).to_string()).collect())
                .collect(),
        }
    }

    pub fn to_partition(&self, space: &MetricSpace) -> Result<SummandPartition> {
        let summands = self
            .summands
            .iter()
            .map(|s| s.iter().map(|l| space.index_of(l)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        SummandPartition::new(space.len(), space.index_of(&self.base)?, summands)
    }

    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        from_json(text, PARTITION_FORMAT, |f: &PartitionFile| &f.format)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveFile {
    pub eta: String,
    pub center: Vec<(String, String)>,
    /// Dense values in point order, one row per functional.
    pub functionals: Vec<Vec<String>>,
    pub response: Vec<(String, String)>,
    pub response_subtree: NodeFile,
    pub target_subtree: NodeFile,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeFile {
    pub path: String,
    /// Verification outcome recorded when the file was written; ignored when
    /// reading.
    pub status: Option<String>,
    pub depth: usize,
    pub epsilon: String,
    pub target: Vec<(String, String)>,
    pub moves: Vec<MoveFile>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptFile {
    pub format: String,
    pub space: DiamondSpec,
    pub adversary: Option<AdversaryConfig>,
    pub root: NodeFile,
}

fn node_status(report: Option<&VerificationReport>, path: &str) -> Option<String> {
    let node = report?.node(path)?;
    Some(if node.passed() {
        "pass".to_string()
    } else {
        let reasons: Vec<String> = node.violations.iter().map(|v| v.to_string()).collect();
        format!("fail: {}", reasons.join("; "))
    })
}

fn node_to_file(
    space: &MetricSpace,
    node: &TranscriptNode,
    path: String,
    report: Option<&VerificationReport>,
) -> Result<NodeFile> {
    let moves = node
        .moves
        .iter()
        .enumerate()
        .map(|(r, m)| {
            Ok(MoveFile {
                eta: format_rational(&m.neighborhood.eta),
                center: entries(space, &m.neighborhood.center)?,
                functionals: m
                    .neighborhood
                    .functionals
                    .iter()
                    .map(|f| {
                        (0..f.len())
                            .map(|x| f.value(x).map(format_rational))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<_>>()?,
                response: entries(space, &m.response)?,
                response_subtree: node_to_file(space, &m.response_subtree, format!("{path}/{r}r"), report)?,
                target_subtree: node_to_file(space, &m.target_subtree, format!("{path}/{r}t"), report)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(NodeFile {
        status: node_status(report, &path),
        path,
        depth: node.depth,
        epsilon: format_rational(&node.epsilon),
        target: entries(space, &node.target)?,
        moves,
    })
}

fn node_from_file(space: &MetricSpace, file: &NodeFile) -> Result<TranscriptNode> {
    let moves = file
        .moves
        .iter()
        .map(|m| {
            let functionals = m
                .functionals
                .iter()
                .map(|row| {
                    Ok(LipschitzFunction::total(
                        row.iter().map(|s| parse_rational(s)).collect::<Result<_>>()?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Move {
                neighborhood: WeakNeighborhood {
                    functionals,
                    center: vector_from_entries(space, &m.center)?,
                    eta: parse_rational(&m.eta)?,
                },
                response: vector_from_entries(space, &m.response)?,
                response_subtree: node_from_file(space, &m.response_subtree)?,
                target_subtree: node_from_file(space, &m.target_subtree)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(TranscriptNode {
        target: vector_from_entries(space, &file.target)?,
        depth: file.depth,
        epsilon: parse_rational(&file.epsilon)?,
        moves,
    })
}

impl TranscriptFile {
    /// `report`, when given, fills the per-node status fields.
    pub fn new(space: &MetricSpace, t: &GameTranscript, report: Option<&VerificationReport>) -> Result<Self> {
        Ok(TranscriptFile {
            format: TRANSCRIPT_FORMAT.into(),
            space: t.spec.clone(),
            adversary: t.adversary.clone(),
            root: node_to_file(space, &t.root, "root".into(), report)?,
        })
    }

    /// Reads the tree against `space`, which must be the space named in the
    /// file. Functional rows must have one value per point.
    pub fn to_transcript(&self, space: &MetricSpace) -> Result<GameTranscript> {
        Ok(GameTranscript {
            spec: self.space.clone(),
            adversary: self.adversary.clone(),
            root: node_from_file(space, &self.root)?,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        from_json(text, TRANSCRIPT_FORMAT, |f: &TranscriptFile| &f.format)
    }
}

/// Undirected graph of the finest edges, labelled with their lengths.
pub fn to_dot(space: &MetricSpace) -> String {
    let mut out = String::from("graph space {\n");
    for (k, label) in space.labels().iter().enumerate() {
        let shape = if k == space.base() { " [shape=box]" } else { "" };
        let _ = writeln!(out, "  {label:?}{shape};");
    }
    for (x, y, d) in space.finest_edges() {
        let _ = writeln!(
            out,
            "  {:?} -- {:?} [label={:?}];",
            space.label(x),
            space.label(y),
            format_rational(&d)
        );
    }
    out.push_str("}\n");
    out
}
