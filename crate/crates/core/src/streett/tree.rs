//! History trees and their letter successors.

use std::fmt;

/// Node name: the sequence of child indices from the root.
pub type Name = Vec<u8>;

/// An ordered tree with nonempty state-set labels, stored in preorder.
/// Children of a node are listed in index order right after it (with their
/// subtrees), so the names are implied by the order and kept only for
/// convenience.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HistoryTree {
    nodes: Vec<(Name, u64)>,
}

/// Outcome of one history transition. Names refer to the tree before
/// compression; for stable nodes they coincide with the new names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HistoryStep {
    pub tree: HistoryTree,
    pub stable: Vec<Name>,
    pub collapsing: Vec<Name>,
    /// Nodes of the old tree that are gone after steps two and three.
    pub removed: Vec<Name>,
    /// New children that survived.
    pub spawned: Vec<Name>,
}

#[derive(Clone, Debug)]
struct Node {
    idx: u8,
    label: u64,
    children: Vec<Node>,
    fresh: bool,
}

impl HistoryTree {
    pub fn empty() -> Self {
        HistoryTree { nodes: Vec::new() }
    }

    /// The single-node tree labelled with `states`; empty if `states` is.
    pub fn initial(states: u64) -> Self {
        if states == 0 {
            Self::empty()
        } else {
            HistoryTree { nodes: vec![(Vec::new(), states)] }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[(Name, u64)] {
        &self.nodes
    }

    pub fn label(&self, name: &[u8]) -> Option<u64> {
        self.nodes.iter().find(|(n, _)| n.as_slice() == name).map(|&(_, l)| l)
    }

    /// Labels are nonempty and strictly contain the union of the children's
    /// labels, sibling labels are disjoint, and the names form an ordered
    /// tree listed in preorder.
    pub fn is_valid(&self) -> bool {
        let Some(root) = self.nodes.first() else { return true };
        if !root.0.is_empty() {
            return false;
        }
        for (i, (name, label)) in self.nodes.iter().enumerate() {
            if *label == 0 {
                return false;
            }
            if i > 0 {
                let (prev, _) = &self.nodes[i - 1];
                let (last, parent) = name.split_last().expect("non-root name");
                // Preorder: either the first child of the previous node or the
                // next sibling of one of its ancestors.
                let first_child = *last == 0 && parent == prev.as_slice();
                let next_sibling =
                    prev.len() >= name.len() && prev[..parent.len()] == *parent && prev[parent.len()] + 1 == *last;
                if !first_child && !next_sibling {
                    return false;
                }
            }
            let children: Vec<u64> = self
                .nodes
                .iter()
                .filter(|(n, _)| n.len() == name.len() + 1 && n.starts_with(name))
                .map(|&(_, l)| l)
                .collect();
            let mut union = 0u64;
            for &c in &children {
                if union & c != 0 || c & !label != 0 {
                    return false;
                }
                union |= c;
            }
            if !children.is_empty() && union == *label {
                return false;
            }
        }
        true
    }

    fn to_node(&self) -> Option<Node> {
        fn parse(nodes: &[(Name, u64)], pos: &mut usize) -> Node {
            let (name, label) = &nodes[*pos];
            *pos += 1;
            let mut children = Vec::new();
            while *pos < nodes.len() && nodes[*pos].0.len() == name.len() + 1 {
                children.push(parse(nodes, pos));
            }
            Node { idx: name.last().copied().unwrap_or(0), label: *label, children, fresh: false }
        }
        if self.nodes.is_empty() {
            None
        } else {
            Some(parse(&self.nodes, &mut 0))
        }
    }

    /// The `letter`-successor for an automaton given by `post(S)` (all
    /// successors of the state set) and `accepting_post(S)` (successors via
    /// accepting transitions).
    pub fn successor(&self, post: impl Fn(u64) -> u64, accepting_post: impl Fn(u64) -> u64) -> HistoryStep {
        let Some(root) = self.to_node() else {
            return HistoryStep {
                tree: Self::empty(),
                stable: Vec::new(),
                collapsing: Vec::new(),
                removed: Vec::new(),
                spawned: Vec::new(),
            };
        };

        // Step 1: move every label and spawn a child of accepting successors.
        fn grow(n: &Node, post: &dyn Fn(u64) -> u64, acc: &dyn Fn(u64) -> u64) -> Node {
            let mut children: Vec<Node> = n.children.iter().map(|c| grow(c, post, acc)).collect();
            children.push(Node { idx: n.children.len() as u8, label: acc(n.label), children: Vec::new(), fresh: true });
            Node { idx: n.idx, label: post(n.label), children, fresh: n.fresh }
        }
        let mut root = grow(&root, &post, &accepting_post);

        // Step 2: a state stays only with its oldest claimant among siblings.
        fn exclude(n: &mut Node, forbidden: u64) {
            n.label &= !forbidden;
            let mut older = forbidden;
            for c in &mut n.children {
                let own = c.label;
                exclude(c, older);
                older |= own;
            }
        }
        exclude(&mut root, 0);

        // Step 3a: drop empty nodes (their subtrees are empty as well).
        fn prune(n: &mut Node) {
            n.children.retain(|c| c.label != 0);
            for c in &mut n.children {
                prune(c);
            }
        }
        // Step 3b: nodes partitioned by their children lose all descendants.
        fn collapse(n: &mut Node, name: &mut Name, out: &mut Vec<Name>) {
            let union = n.children.iter().fold(0u64, |u, c| u | c.label);
            if !n.children.is_empty() && union == n.label {
                n.children.clear();
                out.push(name.clone());
                return;
            }
            for c in &mut n.children {
                name.push(c.idx);
                collapse(c, name, out);
                name.pop();
            }
        }
        let mut collapsed = Vec::new();
        if root.label != 0 {
            prune(&mut root);
            collapse(&mut root, &mut Vec::new(), &mut collapsed);
        }

        // Stability, surviving names, and compression.
        let mut stable = Vec::new();
        let mut spawned = Vec::new();
        let mut survivors: Vec<Name> = Vec::new();
        let mut nodes = Vec::new();
        fn walk(
            n: &Node,
            old: &mut Name,
            new: &mut Name,
            is_stable: bool,
            out: &mut (&mut Vec<Name>, &mut Vec<Name>, &mut Vec<Name>, &mut Vec<(Name, u64)>),
        ) {
            if is_stable {
                out.0.push(old.clone());
            }
            if n.fresh {
                out.1.push(old.clone());
            } else {
                out.2.push(old.clone());
            }
            out.3.push((new.clone(), n.label));
            for (pos, c) in n.children.iter().enumerate() {
                old.push(c.idx);
                new.push(pos as u8);
                walk(c, old, new, is_stable && pos == c.idx as usize, out);
                old.pop();
                new.pop();
            }
        }
        if root.label != 0 {
            walk(
                &root,
                &mut Vec::new(),
                &mut Vec::new(),
                true,
                &mut (&mut stable, &mut spawned, &mut survivors, &mut nodes),
            );
        }
        stable.sort();
        let collapsing = collapsed.into_iter().filter(|c| stable.binary_search(c).is_ok()).collect();
        survivors.sort();
        let removed = self.nodes.iter().map(|(n, _)| n.clone()).filter(|n| survivors.binary_search(n).is_err()).collect();
        HistoryStep { tree: HistoryTree { nodes }, stable, collapsing, removed, spawned }
    }
}

fn fmt_set(f: &mut fmt::Formatter<'_>, mask: u64) -> fmt::Result {
    write!(f, "{{")?;
    let mut first = true;
    for q in 0..64 {
        if mask >> q & 1 == 1 {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{q}")?;
            first = false;
        }
    }
    write!(f, "}}")
}

impl fmt::Display for HistoryTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.nodes.is_empty() {
            return write!(f, "(empty)");
        }
        for (i, (name, label)) in self.nodes.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            if name.is_empty() {
                write!(f, "e")?;
            } else {
                let parts: Vec<String> = name.iter().map(u8::to_string).collect();
                write!(f, "{}", parts.join("."))?;
            }
            write!(f, ":")?;
            fmt_set(f, *label)?;
        }
        Ok(())
    }
}
