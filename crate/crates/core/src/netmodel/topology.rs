use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a node inside its [`Topology`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

/// Index of a directed link inside its [`Topology`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LinkId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub src: NodeId,
    pub dst: NodeId,
    /// Traffic units per interval; strictly positive.
    pub capacity: f64,
    /// Routing weight; strictly positive.
    pub weight: f64,
}

/// Unvalidated link record, as read from a file or built by hand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub src: String,
    pub dst: String,
    pub capacity: f64,
    #[serde(default)]
    pub weight: Option<f64>,
}

/// Unvalidated description of a topology.
///
/// When `nodes` is empty the node set is taken from the link endpoints.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TopologySpec {
    #[serde(default)]
    pub nodes: Vec<String>,
    pub links: Vec<LinkSpec>,
}

impl TopologySpec {
    pub fn link(mut self, src: &str, dst: &str, capacity: f64, weight: f64) -> Self {
        self.links.push(LinkSpec {
            src: src.to_owned(),
            dst: dst.to_owned(),
            capacity,
            weight: Some(weight),
        });
        self
    }

    pub fn with_nodes<S: AsRef<str>>(mut self, nodes: &[S]) -> Self {
        self.nodes = nodes.iter().map(|n| n.as_ref().to_owned()).collect();
        self
    }
}

/// Directed graph with per-link capacity and weight.
///
/// Nodes are sorted by name (numerically when every name is an integer) and
/// links by `(src, dst)`, so indices are deterministic for a given input.
#[derive(Debug, Clone)]
pub struct Topology {
    nodes: Vec<String>,
    links: Vec<Link>,
    out_links: Vec<Vec<LinkId>>,
    node_index: HashMap<String, NodeId>,
    link_index: HashMap<(NodeId, NodeId), LinkId>,
}

fn node_order(names: &mut [String]) {
    if names.iter().all(|n| n.parse::<i64>().is_ok()) {
        names.sort_by_key(|n| n.parse::<i64>().unwrap());
    } else {
        names.sort();
    }
}

/// Validates a [`TopologySpec`] and builds the immutable [`Topology`].
pub fn build_topology(spec: &TopologySpec) -> Result<Topology> {
    let mut names: Vec<String> = if spec.nodes.is_empty() {
        let mut seen = HashSet::new();
        spec.links
            .iter()
            .flat_map(|l| [l.src.clone(), l.dst.clone()])
            .filter(|n| seen.insert(n.clone()))
            .collect()
    } else {
        let mut seen = HashSet::new();
        for n in &spec.nodes {
            if !seen.insert(n.as_str()) {
                return Err(Error::Topology(format!("duplicate node id {n:?}")));
            }
        }
        spec.nodes.clone()
    };
    if names.is_empty() {
        return Err(Error::Topology("no nodes".into()));
    }
    node_order(&mut names);
    let node_index: HashMap<String, NodeId> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), NodeId(i)))
        .collect();

    let mut links = Vec::with_capacity(spec.links.len());
    let mut seen = HashSet::new();
    for l in &spec.links {
        let lookup = |name: &str| {
            node_index
                .get(name)
                .copied()
                .ok_or_else(|| Error::Topology(format!("link endpoint {name:?} is not a declared node")))
        };
        let (src, dst) = (lookup(&l.src)?, lookup(&l.dst)?);
        if src == dst {
            return Err(Error::Topology(format!("self-loop on {:?}", l.src)));
        }
        if !(l.capacity > 0.0 && l.capacity.is_finite()) {
            return Err(Error::Topology(format!(
                "link {}->{} has non-positive capacity {}",
                l.src, l.dst, l.capacity
            )));
        }
        let weight = l.weight.unwrap_or(1.0);
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::Topology(format!(
                "link {}->{} has non-positive weight {}",
                l.src, l.dst, weight
            )));
        }
        if !seen.insert((src, dst)) {
            return Err(Error::Topology(format!("duplicate link {}->{}", l.src, l.dst)));
        }
        links.push(Link {
            src,
            dst,
            capacity: l.capacity,
            weight,
        });
    }
    links.sort_by_key(|l| (l.src, l.dst));

    let mut out_links = vec![Vec::new(); names.len()];
    let mut link_index = HashMap::with_capacity(links.len());
    for (i, l) in links.iter().enumerate() {
        out_links[l.src.0].push(LinkId(i));
        link_index.insert((l.src, l.dst), LinkId(i));
    }

    Ok(Topology {
        nodes: names,
        links,
        out_links,
        node_index,
        link_index,
    })
}

impl Topology {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.0]
    }

    pub fn out_links(&self, node: NodeId) -> &[LinkId] {
        &self.out_links[node.0]
    }

    pub fn node_name(&self, node: NodeId) -> &str {
        &self.nodes[node.0]
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.node_index.get(name).copied()
    }

    pub fn link_between(&self, src: NodeId, dst: NodeId) -> Option<LinkId> {
        self.link_index.get(&(src, dst)).copied()
    }

    pub fn link_label(&self, id: LinkId) -> String {
        let l = self.link(id);
        format!("{}->{}", self.node_name(l.src), self.node_name(l.dst))
    }

    /// Returns a copy with every capacity replaced by `f(link index, link)`.
    pub fn with_capacities(&self, mut f: impl FnMut(usize, &Link) -> f64) -> Result<Topology> {
        let mut spec = self.to_spec();
        for (i, (ls, l)) in spec.links.iter_mut().zip(&self.links).enumerate() {
            ls.capacity = f(i, l);
        }
        build_topology(&spec)
    }

    pub fn to_spec(&self) -> TopologySpec {
        TopologySpec {
            nodes: self.nodes.clone(),
            links: self
                .links
                .iter()
                .map(|l| LinkSpec {
                    src: self.node_name(l.src).to_owned(),
                    dst: self.node_name(l.dst).to_owned(),
                    capacity: l.capacity,
                    weight: Some(l.weight),
                })
                .collect(),
        }
    }

    /// Serializes to the native text format (see [`parse_topology`]).
    pub fn to_text(&self) -> String {
        let mut out = format!("nodes {} links {}\n", self.node_count(), self.link_count());
        for n in &self.nodes {
            out.push_str(&format!("node {n}\n"));
        }
        for l in &self.links {
            out.push_str(&format!(
                "{} {} {} {}\n",
                self.node_name(l.src),
                self.node_name(l.dst),
                l.capacity,
                l.weight
            ));
        }
        out
    }
}

/// Parses the native topology text format.
///
/// ```text
/// # comment
/// nodes N links M
/// node NAME        (optional, N lines; otherwise nodes are 0..N-1)
/// SRC DST CAPACITY [WEIGHT]
/// ```
///
/// Missing weights default to 1.
pub fn parse_topology(text: &str) -> Result<Topology> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines
        .next()
        .ok_or_else(|| Error::parse("line 1", "empty topology file"))?;
    let tok: Vec<&str> = header.split_whitespace().collect();
    let (n, m) = match tok.as_slice() {
        ["nodes", n, "links", m] => (
            n.parse::<usize>()
                .map_err(|e| Error::parse(format!("line {hline}"), e.to_string()))?,
            m.parse::<usize>()
                .map_err(|e| Error::parse(format!("line {hline}"), e.to_string()))?,
        ),
        _ => {
            return Err(Error::parse(
                format!("line {hline}"),
                "expected header `nodes N links M`",
            ))
        }
    };

    let mut spec = TopologySpec::default();
    for (lineno, line) in lines {
        let tok: Vec<&str> = line.split_whitespace().collect();
        let loc = || format!("line {lineno}");
        match tok.as_slice() {
            ["node", name] => spec.nodes.push((*name).to_owned()),
            [src, dst, cap, rest @ ..] if rest.len() <= 1 => {
                let capacity = cap
                    .parse::<f64>()
                    .map_err(|e| Error::parse(loc(), format!("capacity: {e}")))?;
                let weight = match rest.first() {
                    Some(w) => Some(
                        w.parse::<f64>()
                            .map_err(|e| Error::parse(loc(), format!("weight: {e}")))?,
                    ),
                    None => None,
                };
                spec.links.push(LinkSpec {
                    src: (*src).to_owned(),
                    dst: (*dst).to_owned(),
                    capacity,
                    weight,
                });
            }
            _ => return Err(Error::parse(loc(), format!("unrecognized line {line:?}"))),
        }
    }
    if spec.nodes.is_empty() {
        spec.nodes = (0..n).map(|i| i.to_string()).collect();
    } else if spec.nodes.len() != n {
        return Err(Error::parse(
            "header",
            format!("declared {n} nodes, found {}", spec.nodes.len()),
        ));
    }
    if spec.links.len() != m {
        return Err(Error::parse(
            "header",
            format!("declared {m} links, found {}", spec.links.len()),
        ));
    }
    build_topology(&spec)
}

pub fn load_topology(path: impl AsRef<FsPath>) -> Result<Topology> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_topology(&text).map_err(|e| match e {
        Error::Parse { location, message } => Error::Parse {
            location: format!("{}:{location}", path.display()),
            message,
        },
        other => other,
    })
}
