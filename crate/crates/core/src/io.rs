//! File formats: edge lists and parameter documents.
//!
//! An edge list is UTF-8 text with one `source<TAB>target` edge per line.
//! Blank lines and lines starting with `#` are skipped. If every id parses
//! as a non-negative integer the ids are used as node indices; otherwise
//! every id is a label and labels get indices in order of first appearance.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LcrError, Result};
use crate::graph::{DirectedGraph, IngestStats};
use crate::model::{MisspecParams, ModelParams};

/// A parsed edge list.
#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: DirectedGraph,
    /// `labels[i]` is the name of node `i`; `None` for integer ids.
    pub labels: Option<Vec<String>>,
    pub stats: IngestStats,
    /// Hex SHA-256 of the raw input bytes.
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct RawEdge<'a> {
    line: usize,
    source: &'a str,
    target: &'a str,
}

fn split_lines(text: &str) -> Result<Vec<RawEdge<'_>>> {
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split('\t').map(str::trim);
        let (Some(source), Some(target)) = (fields.next(), fields.next()) else {
            return Err(LcrError::parse(
                Some(line),
                "expected two tab-separated fields",
            ));
        };
        if source.is_empty() || target.is_empty() {
            return Err(LcrError::parse(Some(line), "empty node id"));
        }
        if fields.next().is_some() {
            return Err(LcrError::parse(Some(line), "more than two fields"));
        }
        edges.push(RawEdge {
            line,
            source,
            target,
        });
    }
    Ok(edges)
}

/// Parses edge-list text.
///
/// With integer ids, `n` defaults to one more than the largest id; a given
/// `n` must exceed every id. With labels, `n` must be absent or at least the
/// number of distinct labels (extra nodes are isolated and unlabeled).
pub fn parse_edge_list(text: &str, n: Option<usize>) -> Result<LoadedGraph> {
    let raw = split_lines(text)?;
    let n = n.or_else(|| declared_node_count(text));
    let numeric: Option<Vec<(usize, usize)>> = raw
        .iter()
        .map(|e| Some((e.source.parse().ok()?, e.target.parse().ok()?)))
        .collect();

    let (edges, labels, n) = match numeric {
        Some(edges) => {
            let max_id = edges.iter().map(|&(s, t)| s.max(t) + 1).max().unwrap_or(0);
            let n = n.unwrap_or(max_id);
            if let Some((k, _)) = edges.iter().enumerate().find(|(_, &(s, t))| s >= n || t >= n) {
                return Err(LcrError::parse(
                    Some(raw[k].line),
                    format!("node id out of range for n = {n}"),
                ));
            }
            (edges, None, n)
        }
        None => {
            let mut index = std::collections::HashMap::new();
            let mut names: Vec<String> = Vec::new();
            let mut id = |s: &str| -> usize {
                *index.entry(s.to_owned()).or_insert_with(|| {
                    names.push(s.to_owned());
                    names.len() - 1
                })
            };
            let edges: Vec<(usize, usize)> = raw.iter().map(|e| (id(e.source), id(e.target))).collect();
            let distinct = names.len();
            let n = match n {
                Some(n) if n < distinct => {
                    return Err(LcrError::parse(
                        None,
                        format!("{distinct} distinct labels but n = {n}"),
                    ))
                }
                Some(n) => n,
                None => distinct,
            };
            (edges, Some(names), n)
        }
    };
    let (graph, stats) = DirectedGraph::from_edge_list(&edges, n).map_err(|e| match e {
        LcrError::Parse { line: Some(pos), message } => LcrError::Parse {
            line: Some(raw[pos - 1].line),
            message,
        },
        other => other,
    })?;
    if stats.self_loops > 0 {
        log::warn!("dropped {} self-loop(s)", stats.self_loops);
    }
    if stats.duplicates > 0 {
        log::info!("collapsed {} duplicate edge(s)", stats.duplicates);
    }
    Ok(LoadedGraph {
        graph,
        labels,
        stats,
        sha256: sha256_hex(text.as_bytes()),
    })
}

pub fn read_edge_list(path: &Path, n: Option<usize>) -> Result<LoadedGraph> {
    let bytes = std::fs::read(path)?;
    let text = String::from_utf8(bytes).map_err(|e| LcrError::parse(None, format!("input is not UTF-8: {e}")))?;
    parse_edge_list(&text, n)
}

/// Reads from any buffered source, e.g. standard input.
pub fn read_edge_list_from(mut reader: impl BufRead, n: Option<usize>) -> Result<LoadedGraph> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| LcrError::parse(None, format!("cannot read input: {e}")))?;
    parse_edge_list(&text, n)
}

/// Writes edges in lexicographic order, preceded by a `# nodes` comment.
pub fn write_edge_list(g: &DirectedGraph, labels: Option<&[String]>, mut w: impl Write) -> Result<()> {
    writeln!(w, "# nodes {}", g.n())?;
    for (s, t) in g.to_edge_list() {
        match labels {
            Some(l) => writeln!(w, "{}\t{}", l[s], l[t])?,
            None => writeln!(w, "{s}\t{t}")?,
        }
    }
    Ok(())
}

/// Reads the `# nodes N` header written by [`write_edge_list`], if present.
pub fn declared_node_count(text: &str) -> Option<usize> {
    text.lines()
        .take_while(|l| l.trim().is_empty() || l.trim_start().starts_with('#'))
        .find_map(|l| l.trim_start().strip_prefix("# nodes")?.trim().parse().ok())
}

pub const PARAM_FORMAT_VERSION: u32 = 1;

/// On-disk parameter document (TOML).
///
/// ```toml
/// format_version = 1
/// n = 3
/// rho = 0.5
/// gamma = -1.0
/// alpha = [0.1, 0.0, -0.1]
/// beta = [0.0, 0.0, 0.0]
/// theta = 0.2            # optional
/// community = [0, 0, 1]  # optional
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamFile {
    pub format_version: u32,
    pub n: usize,
    pub rho: f64,
    pub gamma: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub community: Option<Vec<u8>>,
}

impl ParamFile {
    pub fn from_params(p: &ModelParams) -> Self {
        ParamFile {
            format_version: PARAM_FORMAT_VERSION,
            n: p.n(),
            rho: p.rho(),
            gamma: p.gamma(),
            alpha: p.alpha().to_vec(),
            beta: p.beta().to_vec(),
            theta: None,
            community: None,
        }
    }

    pub fn from_misspec(p: &MisspecParams) -> Self {
        ParamFile {
            theta: Some(p.theta),
            community: Some(p.community.clone()),
            ..Self::from_params(&p.base)
        }
    }

    pub fn model(&self) -> Result<ModelParams> {
        if self.format_version != PARAM_FORMAT_VERSION {
            return Err(LcrError::parse(
                None,
                format!("unsupported parameter format_version {}", self.format_version),
            ));
        }
        if self.alpha.len() != self.n || self.beta.len() != self.n {
            return Err(LcrError::parse(
                None,
                format!(
                    "n = {} but alpha has {} and beta has {} entries",
                    self.n,
                    self.alpha.len(),
                    self.beta.len()
                ),
            ));
        }
        ModelParams::new(self.rho, self.gamma, self.alpha.clone(), self.beta.clone())
    }

    /// The misspecified model when `theta` is present.
    pub fn misspec(&self) -> Result<Option<MisspecParams>> {
        match self.theta {
            Some(theta) => Ok(Some(MisspecParams::new(self.model()?, theta, self.community.clone())?)),
            None if self.community.is_some() => Err(LcrError::parse(None, "community given without theta")),
            None => Ok(None),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("parameter document serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| LcrError::parse(toml_line(text, e.span()), e.message().to_owned()))
    }
}

/// 1-based line of a byte offset reported by the TOML parser.
pub(crate) fn toml_line(text: &str, span: Option<std::ops::Range<usize>>) -> Option<usize> {
    span.map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
}
