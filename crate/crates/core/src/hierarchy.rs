//! Class tree: parsing, validation and structural queries.
//!
//! Hierarchy files hold one `parent child` edge per line. The root is the
//! unique node that never appears as a child, and children keep the order in
//! which they first appear, which makes every downstream tie-break
//! deterministic.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Identifier of a node in the class tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for NodeId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(NodeId)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HierarchyError {
    #[error("hierarchy input contains no edges")]
    EmptyInput,
    #[error("line {line}: expected two non-negative integers \"parent child\"")]
    MalformedLine { line: usize },
    #[error("node {child} is listed under more than one parent (line {line})")]
    DuplicateParent { child: NodeId, line: usize },
    #[error("hierarchy has more than one root: {0:?}")]
    MultipleRoots(Vec<NodeId>),
    #[error("hierarchy contains a cycle")]
    CycleDetected,
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
}

/// Rooted tree over node identifiers. Leaves are the class labels.
///
/// Nodes are stored densely; `index_of` maps external ids to slots.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    ids: Vec<NodeId>,
    index_of: HashMap<NodeId, usize>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    depth: Vec<usize>,
    root: usize,
    /// Leaf slots in ascending `NodeId` order.
    leaves: Vec<usize>,
    /// Slots in depth-first preorder, children visited in file order.
    preorder: Vec<usize>,
}

impl Hierarchy {
    /// Parses `parent child` lines. Blank lines are ignored and `\r\n`
    /// endings are accepted.
    pub fn parse<I, S>(lines: I) -> Result<Self, HierarchyError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut edges = Vec::new();
        for (i, line) in lines.into_iter().enumerate() {
            let line = line.as_ref().trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |tok: Option<&str>| tok.and_then(|t| t.parse::<NodeId>().ok());
            match (parse(it.next()), parse(it.next()), it.next()) {
                (Some(p), Some(c), None) => edges.push((p, c, i + 1)),
                _ => return Err(HierarchyError::MalformedLine { line: i + 1 }),
            }
        }
        Self::from_edges(edges)
    }

    /// Builds a tree from `(parent, child)` pairs in order.
    pub fn from_pairs<I>(pairs: I) -> Result<Self, HierarchyError>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        Self::from_edges(
            pairs
                .into_iter()
                .enumerate()
                .map(|(i, (p, c))| (p, c, i + 1))
                .collect(),
        )
    }

    fn from_edges(edges: Vec<(NodeId, NodeId, usize)>) -> Result<Self, HierarchyError> {
        if edges.is_empty() {
            return Err(HierarchyError::EmptyInput);
        }
        let mut ids = Vec::new();
        let mut index_of = HashMap::new();
        let mut intern = |id: NodeId, ids: &mut Vec<NodeId>| -> usize {
            *index_of.entry(id).or_insert_with(|| {
                ids.push(id);
                ids.len() - 1
            })
        };
        let mut slots = Vec::with_capacity(edges.len());
        for &(p, c, line) in &edges {
            let ps = intern(p, &mut ids);
            let cs = intern(c, &mut ids);
            slots.push((ps, cs, line));
        }
        let n = ids.len();
        let mut parent = vec![None; n];
        let mut children = vec![Vec::new(); n];
        for (ps, cs, line) in slots {
            if parent[cs].is_some() {
                return Err(HierarchyError::DuplicateParent {
                    child: ids[cs],
                    line,
                });
            }
            parent[cs] = Some(ps);
            children[ps].push(cs);
        }

        let roots: Vec<usize> = (0..n).filter(|&s| parent[s].is_none()).collect();
        let root = match roots.as_slice() {
            [] => return Err(HierarchyError::CycleDetected),
            [r] => *r,
            _ => {
                let mut r: Vec<NodeId> = roots.iter().map(|&s| ids[s]).collect();
                r.sort();
                return Err(HierarchyError::MultipleRoots(r));
            }
        };

        // With one parent per node, anything unreachable from the root sits on a cycle.
        let mut depth = vec![usize::MAX; n];
        let mut preorder = Vec::with_capacity(n);
        let mut stack = vec![(root, 0usize)];
        while let Some((s, d)) = stack.pop() {
            depth[s] = d;
            preorder.push(s);
            for &c in children[s].iter().rev() {
                stack.push((c, d + 1));
            }
        }
        if preorder.len() != n {
            return Err(HierarchyError::CycleDetected);
        }

        let mut leaves: Vec<usize> = (0..n).filter(|&s| children[s].is_empty()).collect();
        leaves.sort_by_key(|&s| ids[s]);

        let index_of = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        Ok(Hierarchy {
            ids,
            index_of,
            parent,
            children,
            depth,
            root,
            leaves,
            preorder,
        })
    }

    /// Writes the tree back as `parent child` lines (preorder, children in
    /// their stored order).
    pub fn to_lines(&self) -> Vec<String> {
        self.preorder
            .iter()
            .flat_map(|&p| {
                self.children[p]
                    .iter()
                    .map(move |&c| format!("{} {}", self.ids[p], self.ids[c]))
            })
            .collect()
    }

    pub fn root(&self) -> NodeId {
        self.ids[self.root]
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, n: NodeId) -> bool {
        self.index_of.contains_key(&n)
    }

    /// All node ids in depth-first preorder (root first).
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.preorder.iter().map(|&s| self.ids[s])
    }

    /// Leaf ids in ascending order.
    pub fn leaves(&self) -> impl ExactSizeIterator<Item = NodeId> + '_ {
        self.leaves.iter().map(|&s| self.ids[s])
    }

    pub fn num_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_leaf(&self, n: NodeId) -> bool {
        self.slot(n).is_ok_and(|s| self.children[s].is_empty())
    }

    pub fn parent(&self, n: NodeId) -> Result<Option<NodeId>, HierarchyError> {
        Ok(self.parent[self.slot(n)?].map(|p| self.ids[p]))
    }

    pub fn children(&self, n: NodeId) -> Result<Vec<NodeId>, HierarchyError> {
        Ok(self.children[self.slot(n)?]
            .iter()
            .map(|&c| self.ids[c])
            .collect())
    }

    /// Other children of `n`'s parent, in stored order. Empty for the root.
    pub fn siblings(&self, n: NodeId) -> Result<Vec<NodeId>, HierarchyError> {
        let s = self.slot(n)?;
        Ok(match self.parent[s] {
            None => Vec::new(),
            Some(p) => self.children[p]
                .iter()
                .filter(|&&c| c != s)
                .map(|&c| self.ids[c])
                .collect(),
        })
    }

    pub fn depth(&self, n: NodeId) -> Result<usize, HierarchyError> {
        Ok(self.depth[self.slot(n)?])
    }

    pub fn max_depth(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    /// Leaves in the subtree rooted at `n`; `{n}` when `n` is a leaf.
    pub fn leaf_descendants(&self, n: NodeId) -> Result<BTreeSet<NodeId>, HierarchyError> {
        let mut out = BTreeSet::new();
        let mut stack = vec![self.slot(n)?];
        while let Some(s) = stack.pop() {
            if self.children[s].is_empty() {
                out.insert(self.ids[s]);
            } else {
                stack.extend_from_slice(&self.children[s]);
            }
        }
        Ok(out)
    }

    /// Path from `n`'s parent up to the root, child-to-root order.
    pub fn ancestors(&self, n: NodeId) -> Result<Vec<NodeId>, HierarchyError> {
        let mut out = Vec::new();
        let mut cur = self.parent[self.slot(n)?];
        while let Some(p) = cur {
            out.push(self.ids[p]);
            cur = self.parent[p];
        }
        Ok(out)
    }

    /// Number of edges on the path between `a` and `b`.
    pub fn tree_distance(&self, a: NodeId, b: NodeId) -> Result<usize, HierarchyError> {
        let (mut x, mut y) = (self.slot(a)?, self.slot(b)?);
        let (da, db) = (self.depth[x], self.depth[y]);
        while self.depth[x] > self.depth[y] {
            x = self.parent[x].expect("non-root has parent");
        }
        while self.depth[y] > self.depth[x] {
            y = self.parent[y].expect("non-root has parent");
        }
        while x != y {
            x = self.parent[x].expect("non-root has parent");
            y = self.parent[y].expect("non-root has parent");
        }
        Ok(da + db - 2 * self.depth[x])
    }

    pub(crate) fn slot(&self, n: NodeId) -> Result<usize, HierarchyError> {
        self.index_of
            .get(&n)
            .copied()
            .ok_or(HierarchyError::UnknownNode(n))
    }

    pub(crate) fn id_at(&self, slot: usize) -> NodeId {
        self.ids[slot]
    }

    pub(crate) fn root_slot(&self) -> usize {
        self.root
    }

    pub(crate) fn child_slots(&self, slot: usize) -> &[usize] {
        &self.children[slot]
    }

    pub(crate) fn parent_slot(&self, slot: usize) -> Option<usize> {
        self.parent[slot]
    }

    pub(crate) fn preorder_slots(&self) -> &[usize] {
        &self.preorder
    }
}

impl PartialEq for Hierarchy {
    /// Structural equality: same root and same ordered children per node id.
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len()
            && self.root() == other.root()
            && self.ids.iter().all(|&id| match other.children(id) {
                Ok(theirs) => self.children(id).ok() == Some(theirs),
                Err(_) => false,
            })
    }
}

impl Eq for Hierarchy {}
