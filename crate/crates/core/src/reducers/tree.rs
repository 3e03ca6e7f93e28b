use rand::Rng as _;

use crate::error::{invalid, Error, Result};

/// Full binary tree shape. Nodes live in an arena in preorder; internal
/// nodes are numbered `0..k-1` and leaves (slots) `0..k` in the same
/// left-to-right preorder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeShape {
    nodes: Vec<Node>,
    internal: Vec<usize>,
    leaves: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    Leaf { slot: usize },
    Internal { id: usize, left: usize, right: usize },
}

/// Nested form used to build and enumerate shapes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Nested {
    Leaf,
    Split(Box<Nested>, Box<Nested>),
}

impl Nested {
    pub fn split(left: Nested, right: Nested) -> Nested {
        Nested::Split(Box::new(left), Box::new(right))
    }

    fn leaves(&self) -> usize {
        match self {
            Nested::Leaf => 1,
            Nested::Split(l, r) => l.leaves() + r.leaves(),
        }
    }
}

impl TreeShape {
    pub fn from_nested(shape: &Nested) -> TreeShape {
        let mut tree = TreeShape {
            nodes: Vec::new(),
            internal: Vec::new(),
            leaves: Vec::new(),
        };
        tree.push(shape);
        tree
    }

    fn push(&mut self, shape: &Nested) -> usize {
        let idx = self.nodes.len();
        match shape {
            Nested::Leaf => {
                self.nodes.push(Node::Leaf {
                    slot: self.leaves.len(),
                });
                self.leaves.push(idx);
            }
            Nested::Split(l, r) => {
                let id = self.internal.len();
                self.internal.push(idx);
                self.nodes.push(Node::Internal {
                    id,
                    left: 0,
                    right: 0,
                });
                let left = self.push(l);
                let right = self.push(r);
                self.nodes[idx] = Node::Internal { id, left, right };
            }
        }
        idx
    }

    /// Halves the leaf count at every node, `⌊k/2⌋` leaves on the left.
    pub fn balanced(k: usize) -> Result<TreeShape> {
        check_k(k)?;
        fn build(k: usize) -> Nested {
            if k == 1 {
                Nested::Leaf
            } else {
                Nested::split(build(k / 2), build(k - k / 2))
            }
        }
        Ok(Self::from_nested(&build(k)))
    }

    /// Every internal node has a leaf as its left child (one-vs-all shaped).
    pub fn chain(k: usize) -> Result<TreeShape> {
        check_k(k)?;
        let mut shape = Nested::Leaf;
        for _ in 1..k {
            shape = Nested::split(Nested::Leaf, shape);
        }
        Ok(Self::from_nested(&shape))
    }

    /// Random shape: each node splits its leaves at a uniform position.
    pub fn random(k: usize, seed: u64) -> Result<TreeShape> {
        check_k(k)?;
        let mut rng = crate::rng(seed);
        fn build(k: usize, rng: &mut crate::Rng) -> Nested {
            if k == 1 {
                return Nested::Leaf;
            }
            let left = rng.random_range(1..k);
            let l = build(left, rng);
            let r = build(k - left, rng);
            Nested::split(l, r)
        }
        Ok(Self::from_nested(&build(k, &mut rng)))
    }

    /// Every full binary tree with `k` leaves (Catalan many).
    pub fn all_shapes(k: usize) -> Result<Vec<TreeShape>> {
        check_k(k)?;
        if k > 12 {
            return Err(Error::BudgetExceeded(format!(
                "enumerating all shapes with {k} leaves"
            )));
        }
        fn all(k: usize) -> Vec<Nested> {
            if k == 1 {
                return vec![Nested::Leaf];
            }
            let mut out = Vec::new();
            for left in 1..k {
                for l in all(left) {
                    for r in all(k - left) {
                        out.push(Nested::split(l.clone(), r));
                    }
                }
            }
            out
        }
        Ok(all(k).iter().map(Self::from_nested).collect())
    }

    pub fn num_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn num_internal(&self) -> usize {
        self.internal.len()
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn node(&self, idx: usize) -> Node {
        self.nodes[idx]
    }

    /// Arena index of internal node `id`.
    pub fn internal_node(&self, id: usize) -> usize {
        self.internal[id]
    }

    /// Arena index of leaf `slot`.
    pub fn leaf_node(&self, slot: usize) -> usize {
        self.leaves[slot]
    }

    /// Root-to-leaf path as `(internal id, goes right)` steps.
    pub fn path_to_leaf(&self, slot: usize) -> Vec<(usize, bool)> {
        let mut steps = Vec::new();
        let target = self.leaves[slot];
        let mut idx = self.root();
        while let Node::Internal { id, left, right } = self.nodes[idx] {
            // preorder: the left subtree occupies (idx, right)
            let go_right = target >= right;
            steps.push((id, go_right));
            idx = if go_right { right } else { left };
        }
        debug_assert_eq!(idx, target);
        steps
    }

    /// Number of classifiers evaluated on the way to `slot`.
    pub fn depth_of_leaf(&self, slot: usize) -> usize {
        self.path_to_leaf(slot).len()
    }

    pub fn max_depth(&self) -> usize {
        (0..self.num_leaves())
            .map(|s| self.depth_of_leaf(s))
            .max()
            .unwrap_or(0)
    }

    /// Leaf slots in the subtree rooted at arena index `idx`.
    pub fn leaves_under(&self, idx: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![idx];
        while let Some(i) = stack.pop() {
            match self.nodes[i] {
                Node::Leaf { slot } => out.push(slot),
                Node::Internal { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        out
    }

    /// Children `(left, right)` of internal node `id` as arena indices.
    pub fn children(&self, id: usize) -> (usize, usize) {
        match self.nodes[self.internal[id]] {
            Node::Internal { left, right, .. } => (left, right),
            Node::Leaf { .. } => unreachable!("internal id points at a leaf"),
        }
    }

    /// In-order rank of every internal node: nodes of a left subtree come
    /// before the node, nodes of the right subtree after it.
    pub fn inorder_ranks(&self) -> Vec<usize> {
        let mut ranks = vec![0; self.num_internal()];
        let mut next = 0;
        fn walk(t: &TreeShape, idx: usize, ranks: &mut [usize], next: &mut usize) {
            if let Node::Internal { id, left, right } = t.nodes[idx] {
                walk(t, left, ranks, next);
                ranks[id] = *next;
                *next += 1;
                walk(t, right, ranks, next);
            }
        }
        walk(self, self.root(), &mut ranks, &mut next);
        ranks
    }

    /// Leaf reached from arena index `idx` by one step in direction
    /// `first_right`, then always the opposite direction.
    pub fn zigzag_leaf(&self, id: usize, first_right: bool) -> usize {
        let (left, right) = self.children(id);
        let mut idx = if first_right { right } else { left };
        loop {
            match self.nodes[idx] {
                Node::Leaf { slot } => return slot,
                Node::Internal { left, right, .. } => {
                    idx = if first_right { left } else { right };
                }
            }
        }
    }

    /// Preorder token string: `N` for internal nodes, `L` for leaves.
    pub fn to_tokens(&self) -> String {
        self.nodes
            .iter()
            .map(|n| match n {
                Node::Leaf { .. } => 'L',
                Node::Internal { .. } => 'N',
            })
            .collect()
    }

    pub fn from_tokens(tokens: &str) -> Result<TreeShape> {
        fn parse(it: &mut std::str::Chars<'_>) -> Result<Nested> {
            match it.next() {
                Some('L') => Ok(Nested::Leaf),
                Some('N') => {
                    let l = parse(it)?;
                    let r = parse(it)?;
                    Ok(Nested::split(l, r))
                }
                Some(c) => Err(Error::Parse(format!("bad tree token `{c}`"))),
                None => Err(Error::Parse("truncated tree shape".into())),
            }
        }
        let mut it = tokens.trim().chars();
        let nested = parse(&mut it)?;
        if it.next().is_some() {
            return Err(Error::Parse("trailing tokens after tree shape".into()));
        }
        debug_assert!(nested.leaves() >= 1);
        Ok(Self::from_nested(&nested))
    }
}

fn check_k(k: usize) -> Result<()> {
    if k < 2 {
        return invalid(format!("a tree for k classes needs k >= 2, got {k}"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_depths() {
        for k in 2..40usize {
            let t = TreeShape::balanced(k).unwrap();
            assert_eq!(t.num_leaves(), k);
            assert_eq!(t.num_internal(), k - 1);
            let ceil_log = (k as f64).log2().ceil() as usize;
            assert!(t.max_depth() <= ceil_log, "k={k}");
        }
    }

    #[test]
    fn chain_has_leaf_left_children() {
        let t = TreeShape::chain(5).unwrap();
        for id in 0..4 {
            let (left, _) = t.children(id);
            assert!(matches!(t.node(left), Node::Leaf { .. }));
        }
        assert_eq!(t.depth_of_leaf(0), 1);
        assert_eq!(t.depth_of_leaf(4), 4);
    }

    #[test]
    fn catalan_counts() {
        let counts: Vec<usize> = (2..=7)
            .map(|k| TreeShape::all_shapes(k).unwrap().len())
            .collect();
        assert_eq!(counts, vec![1, 2, 5, 14, 42, 132]);
    }

    #[test]
    fn paths_partition_leaves() {
        let t = TreeShape::random(9, 5).unwrap();
        let (left, right) = t.children(0);
        let mut l = t.leaves_under(left);
        let r = t.leaves_under(right);
        l.extend(&r);
        l.sort();
        assert_eq!(l, (0..9).collect::<Vec<_>>());
        for slot in 0..9 {
            let path = t.path_to_leaf(slot);
            assert_eq!(path[0].0, 0);
            assert_eq!(path[0].1, r.contains(&slot));
        }
    }

    #[test]
    fn inorder_respects_subtrees() {
        for t in TreeShape::all_shapes(6).unwrap() {
            let ranks = t.inorder_ranks();
            for id in 0..t.num_internal() {
                let (left, right) = t.children(id);
                for (sub, before) in [(left, true), (right, false)] {
                    let ids = internal_ids_under(&t, sub);
                    for other in ids {
                        assert_eq!(ranks[other] < ranks[id], before);
                    }
                }
            }
        }
    }

    fn internal_ids_under(t: &TreeShape, idx: usize) -> Vec<usize> {
        match t.node(idx) {
            Node::Leaf { .. } => vec![],
            Node::Internal { id, left, right } => {
                let mut v = vec![id];
                v.extend(internal_ids_under(t, left));
                v.extend(internal_ids_under(t, right));
                v
            }
        }
    }

    #[test]
    fn tokens_round_trip() {
        for t in TreeShape::all_shapes(5).unwrap() {
            assert_eq!(TreeShape::from_tokens(&t.to_tokens()).unwrap(), t);
        }
        assert!(TreeShape::from_tokens("NL").is_err());
        assert!(TreeShape::from_tokens("NLLL").is_err());
    }

    #[test]
    fn random_is_deterministic() {
        assert_eq!(TreeShape::random(12, 3).unwrap(), TreeShape::random(12, 3).unwrap());
        assert!(TreeShape::random(1, 0).is_err());
    }
}
