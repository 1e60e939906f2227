//! Leveled cover-tree storage with one explicit record per point.
//!
//! Level sets shrink as the level index decreases: `C_i` holds every point
//! whose explicit level is at least `i`, so nesting is a property of the
//! representation rather than something to maintain. A point is stored
//! exactly once — the level where it first becomes explicit plus its parent
//! — which keeps the structure at `O(n)` regardless of height. Querying the
//! children of `p` at a level always yields `p` itself (its implicit copy)
//! plus the children that first appear there.
//!
//! The tree is immutable during queries: any number of concurrent searches
//! may run against a frozen tree, each with its own oracle stream. Insertion
//! and removal require exclusive access; nothing locks internally.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Node {
    /// Level of the point's first (and only) explicit appearance.
    pub top_level: i32,
    /// Parent point, explicit at a strictly higher level; `None` for the
    /// root.
    pub parent: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoverTree {
    nodes: BTreeMap<usize, Node>,
    /// `(parent, level)` -> children first appearing at that level, sorted.
    children: BTreeMap<(usize, i32), Vec<usize>>,
    root: Option<usize>,
    i_top: i32,
    i_bottom: i32,
}

impl CoverTree {
    pub fn new() -> Self {
        Self::default()
    }

    /// Tree holding a single root point at level 0.
    pub fn singleton(root: usize) -> Self {
        let mut tree = Self::new();
        tree.nodes.insert(
            root,
            Node {
                top_level: 0,
                parent: None,
            },
        );
        tree.root = Some(root);
        tree.i_top = 0;
        tree.i_bottom = 0;
        tree
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, p: usize) -> bool {
        self.nodes.contains_key(&p)
    }

    pub fn root(&self) -> Option<usize> {
        self.root
    }

    /// Highest explicit level (the root's level). Meaningless when empty.
    pub fn i_top(&self) -> i32 {
        debug_assert!(!self.is_empty());
        self.i_top
    }

    /// Lowest explicit level. Meaningless when empty.
    pub fn i_bottom(&self) -> i32 {
        debug_assert!(!self.is_empty());
        self.i_bottom
    }

    pub fn node(&self, p: usize) -> Option<&Node> {
        self.nodes.get(&p)
    }

    pub fn points(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.keys().copied()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (usize, &Node)> + '_ {
        self.nodes.iter().map(|(&p, node)| (p, node))
    }

    /// Children of `p` in the cover at `level`: `p` itself plus the explicit
    /// children first appearing at `level`, sorted ascending.
    pub fn children_at(&self, p: usize, level: i32) -> Vec<usize> {
        let mut out = vec![p];
        if let Some(kids) = self.children.get(&(p, level)) {
            for &c in kids {
                match out.binary_search(&c) {
                    Ok(_) => {}
                    Err(pos) => out.insert(pos, c),
                }
            }
        }
        out
    }

    /// All explicit children of `p` across levels, with their levels,
    /// ordered by descending level then ascending index.
    pub fn explicit_children(&self, p: usize) -> Vec<(i32, usize)> {
        let mut out = Vec::new();
        for ((_, level), kids) in self.children.range((p, i32::MIN)..=(p, i32::MAX)) {
            for &c in kids {
                out.push((*level, c));
            }
        }
        out.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        out
    }

    /// Members of the cover set `C_level`: all points explicit at or above
    /// `level`.
    pub fn cover_members(&self, level: i32) -> Vec<usize> {
        self.nodes
            .iter()
            .filter(|(_, node)| node.top_level >= level)
            .map(|(&p, _)| p)
            .collect()
    }

    /// Adds `p` as an explicit node under `parent` at `level`.
    pub(crate) fn add_node(&mut self, p: usize, level: i32, parent: usize) {
        debug_assert!(!self.nodes.contains_key(&p));
        debug_assert!(self.nodes.contains_key(&parent));
        self.nodes.insert(
            p,
            Node {
                top_level: level,
                parent: Some(parent),
            },
        );
        let kids = self.children.entry((parent, level)).or_default();
        if let Err(pos) = kids.binary_search(&p) {
            kids.insert(pos, p);
        }
        self.i_bottom = self.i_bottom.min(level);
    }

    /// Raises the root's explicit level (and `i_top`) to `level`.
    pub(crate) fn raise_root(&mut self, level: i32) {
        let root = self.root.expect("raise_root on an empty tree");
        let node = self.nodes.get_mut(&root).expect("root node exists");
        debug_assert!(level >= node.top_level);
        node.top_level = level;
        self.i_top = level;
        // A singleton's floor follows its root upward.
        self.recompute_bounds();
    }

    /// Detaches `p` and returns its explicit children as `(level, child)`
    /// pairs; the children keep their records but lose their parent link.
    pub(crate) fn detach(&mut self, p: usize) -> Vec<(i32, usize)> {
        let node = self.nodes.remove(&p).expect("detach of a missing node");
        if let Some(parent) = node.parent {
            if let Some(kids) = self.children.get_mut(&(parent, node.top_level)) {
                kids.retain(|&c| c != p);
                if kids.is_empty() {
                    self.children.remove(&(parent, node.top_level));
                }
            }
        }
        let orphan_keys: Vec<(usize, i32)> = self
            .children
            .range((p, i32::MIN)..=(p, i32::MAX))
            .map(|(&key, _)| key)
            .collect();
        let mut orphans = Vec::new();
        for key in orphan_keys {
            for c in self.children.remove(&key).unwrap_or_default() {
                self.nodes.get_mut(&c).expect("child exists").parent = None;
                orphans.push((key.1, c));
            }
        }
        orphans.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
        orphans
    }

    /// Resets the root's level, e.g. to roll back a raise after a failed
    /// insertion.
    pub(crate) fn force_root_level(&mut self, level: i32) {
        let root = self.root.expect("force_root_level on an empty tree");
        self.nodes
            .get_mut(&root)
            .expect("root node exists")
            .top_level = level;
        self.i_top = level;
        self.recompute_bounds();
    }

    /// Makes `p` the root at `level`.
    pub(crate) fn promote_to_root(&mut self, p: usize, level: i32) {
        let node = self.nodes.get_mut(&p).expect("promote of a missing node");
        node.parent = None;
        node.top_level = level;
        self.root = Some(p);
        self.i_top = level;
    }

    /// Raises a detached node's explicit level.
    pub(crate) fn set_top_level(&mut self, p: usize, level: i32) {
        let node = self.nodes.get_mut(&p).expect("missing node");
        debug_assert!(node.parent.is_none(), "only detached nodes move levels");
        node.top_level = level;
    }

    /// Attaches a detached node under `parent` at its current level.
    pub(crate) fn attach(&mut self, p: usize, parent: usize) {
        let level = self.nodes[&p].top_level;
        debug_assert!(self.nodes[&parent].top_level > level);
        self.nodes.get_mut(&p).expect("missing node").parent = Some(parent);
        let kids = self.children.entry((parent, level)).or_default();
        if let Err(pos) = kids.binary_search(&p) {
            kids.insert(pos, p);
        }
    }

    /// Recomputes `i_bottom` (and `i_top`) from the stored nodes.
    pub(crate) fn recompute_bounds(&mut self) {
        if let Some(root) = self.root {
            self.i_top = self.nodes[&root].top_level;
            self.i_bottom = self
                .nodes
                .values()
                .map(|n| n.top_level)
                .min()
                .unwrap_or(self.i_top);
        }
    }

    #[cfg(test)]
    pub(crate) fn raw_children_mut(&mut self) -> &mut BTreeMap<(usize, i32), Vec<usize>> {
        &mut self.children
    }

    #[cfg(test)]
    pub(crate) fn raw_node_mut(&mut self, p: usize) -> &mut Node {
        self.nodes.get_mut(&p).expect("missing node")
    }

    /// Serializes as NDJSON: a header line followed by one record per node
    /// in ascending id order. The round-trip is bit-exact.
    pub fn write_ndjson<W: Write>(&self, mut writer: W) -> Result<()> {
        let root = self.root.ok_or(Error::EmptyTree)?;
        let header = TreeHeader {
            schema: 1,
            i_top: self.i_top,
            i_bottom: self.i_bottom,
            root,
            n: self.nodes.len(),
        };
        serde_json::to_writer(&mut writer, &header)?;
        writeln!(writer)?;
        for (&id, node) in &self.nodes {
            let rec = TreeRecord {
                id,
                top_level: node.top_level,
                parent: node.parent,
            };
            serde_json::to_writer(&mut writer, &rec)?;
            writeln!(writer)?;
        }
        Ok(())
    }

    pub fn read_ndjson<R: Read>(reader: R) -> Result<Self> {
        let mut lines = BufReader::new(reader).lines();
        let header_line = lines
            .next()
            .ok_or_else(|| Error::Parse("empty tree file".into()))??;
        let header: TreeHeader = serde_json::from_str(&header_line)?;
        if header.schema != 1 {
            return Err(Error::Parse(format!(
                "unsupported tree schema {}",
                header.schema
            )));
        }
        let mut tree = CoverTree::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: TreeRecord = serde_json::from_str(&line)?;
            if tree.nodes.contains_key(&rec.id) {
                return Err(Error::Parse(format!(
                    "duplicate node record for id {}",
                    rec.id
                )));
            }
            tree.nodes.insert(
                rec.id,
                Node {
                    top_level: rec.top_level,
                    parent: rec.parent,
                },
            );
        }
        if tree.nodes.len() != header.n {
            return Err(Error::Parse(format!(
                "header announces {} nodes, file holds {}",
                header.n,
                tree.nodes.len()
            )));
        }
        // Rebuild the children index and validate the structure.
        let records: Vec<(usize, Node)> = tree.nodes.iter().map(|(&p, &n)| (p, n)).collect();
        for (p, node) in &records {
            match node.parent {
                None => {
                    if *p != header.root {
                        return Err(Error::Parse(format!(
                            "node {p} has no parent but the root is {}",
                            header.root
                        )));
                    }
                }
                Some(parent) => {
                    let parent_node = tree.nodes.get(&parent).ok_or_else(|| {
                        Error::Parse(format!("node {p} references missing parent {parent}"))
                    })?;
                    if parent_node.top_level <= node.top_level {
                        return Err(Error::Parse(format!(
                            "parent {parent} of {p} must be explicit at a higher level"
                        )));
                    }
                    let kids = tree.children.entry((parent, node.top_level)).or_default();
                    if let Err(pos) = kids.binary_search(p) {
                        kids.insert(pos, *p);
                    }
                }
            }
        }
        if !tree.nodes.contains_key(&header.root) {
            return Err(Error::Parse(format!(
                "root {} not present in the file",
                header.root
            )));
        }
        tree.root = Some(header.root);
        tree.recompute_bounds();
        if tree.i_top != header.i_top || tree.i_bottom != header.i_bottom {
            return Err(Error::Parse(format!(
                "header levels ({}, {}) disagree with records ({}, {})",
                header.i_top, header.i_bottom, tree.i_top, tree.i_bottom
            )));
        }
        Ok(tree)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_ndjson(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_ndjson(file)
    }
}

#[derive(Serialize, Deserialize)]
struct TreeHeader {
    schema: u32,
    i_top: i32,
    i_bottom: i32,
    root: usize,
    n: usize,
}

#[derive(Serialize, Deserialize)]
struct TreeRecord {
    id: usize,
    top_level: i32,
    parent: Option<usize>,
}
