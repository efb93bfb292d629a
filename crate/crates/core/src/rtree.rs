//! A 2D R-tree over lon/lat boxes (Guttman, quadratic split).
//!
//! Nodes hold at most [`MAX_ENTRIES`] entries. Deletion condenses the tree by
//! re-inserting the entries of any node that drops below [`MIN_ENTRIES`].
//! [`RTree::bulk_load`] packs a tree with sort-tile-recursive ordering.

use crate::temporal::BBox;

pub const MAX_ENTRIES: usize = 16;
pub const MIN_ENTRIES: usize = 6;

#[derive(Debug, Clone)]
enum Node<T> {
    Leaf(Vec<(BBox, T)>),
    Internal(Vec<(BBox, Box<Node<T>>)>),
}

impl<T> Node<T> {
    fn len(&self) -> usize {
        match self {
            Node::Leaf(e) => e.len(),
            Node::Internal(c) => c.len(),
        }
    }

    fn bbox(&self) -> Option<BBox> {
        match self {
            Node::Leaf(e) => e.iter().map(|(b, _)| *b).reduce(|a, b| a.union(&b)),
            Node::Internal(c) => c.iter().map(|(b, _)| *b).reduce(|a, b| a.union(&b)),
        }
    }

    fn drain_into(self, out: &mut Vec<(BBox, T)>) {
        match self {
            Node::Leaf(e) => out.extend(e),
            Node::Internal(c) => c.into_iter().for_each(|(_, n)| n.drain_into(out)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RTree<T> {
    root: Node<T>,
    len: usize,
}

impl<T> Default for RTree<T> {
    fn default() -> Self {
        RTree {
            root: Node::Leaf(Vec::new()),
            len: 0,
        }
    }
}

fn enlargement(b: &BBox, add: &BBox) -> f64 {
    b.union(add).area() - b.area()
}

impl<T: PartialEq> RTree<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Height of the tree; a lone leaf has height 1.
    pub fn height(&self) -> usize {
        let mut h = 1;
        let mut node = &self.root;
        while let Node::Internal(children) = node {
            h += 1;
            node = &children[0].1;
        }
        h
    }

    /// Build a packed tree in one pass.
    pub fn bulk_load(mut entries: Vec<(BBox, T)>) -> Self {
        let len = entries.len();
        if len <= MAX_ENTRIES {
            return RTree {
                root: Node::Leaf(entries),
                len,
            };
        }
        let mut level: Vec<(BBox, Node<T>)> = str_pack(&mut entries)
            .into_iter()
            .map(|group| {
                let node = Node::Leaf(group);
                (node.bbox().expect("packed groups are non-empty"), node)
            })
            .collect();
        while level.len() > MAX_ENTRIES {
            let mut boxed: Vec<(BBox, Box<Node<T>>)> =
                level.into_iter().map(|(b, n)| (b, Box::new(n))).collect();
            level = str_pack(&mut boxed)
                .into_iter()
                .map(|group| {
                    let node = Node::Internal(group);
                    (node.bbox().expect("packed groups are non-empty"), node)
                })
                .collect();
        }
        let root = Node::Internal(level.into_iter().map(|(b, n)| (b, Box::new(n))).collect());
        RTree { root, len }
    }

    pub fn insert(&mut self, bbox: BBox, item: T) {
        self.len += 1;
        if let Some(split) = insert_rec(&mut self.root, bbox, item) {
            let old = std::mem::replace(&mut self.root, Node::Leaf(Vec::new()));
            let old_bbox = old.bbox().expect("a node that split is non-empty");
            self.root = Node::Internal(vec![(old_bbox, Box::new(old)), split]);
        }
    }

    /// Remove the entry equal to `item` whose box is `bbox`. Returns whether
    /// one was found.
    pub fn remove(&mut self, bbox: &BBox, item: &T) -> bool {
        let mut orphans = Vec::new();
        if !remove_rec(&mut self.root, bbox, item, &mut orphans) {
            return false;
        }
        self.len -= 1;
        loop {
            match &mut self.root {
                Node::Internal(children) if children.len() == 1 => {
                    let (_, only) = children.pop().expect("checked length");
                    self.root = *only;
                }
                Node::Internal(children) if children.is_empty() => {
                    self.root = Node::Leaf(Vec::new());
                }
                _ => break,
            }
        }
        for (b, t) in orphans {
            self.len -= 1;
            self.insert(b, t);
        }
        true
    }

    /// Every item whose box intersects `query`.
    pub fn search(&self, query: &BBox) -> Vec<&T> {
        let mut out = Vec::new();
        search_rec(&self.root, query, &mut out);
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BBox, &T)> {
        let mut all = Vec::with_capacity(self.len);
        collect_rec(&self.root, &mut all);
        all.into_iter()
    }
}

fn collect_rec<'a, T>(node: &'a Node<T>, out: &mut Vec<(&'a BBox, &'a T)>) {
    match node {
        Node::Leaf(e) => out.extend(e.iter().map(|(b, t)| (b, t))),
        Node::Internal(c) => c.iter().for_each(|(_, n)| collect_rec(n, out)),
    }
}

fn search_rec<'a, T>(node: &'a Node<T>, query: &BBox, out: &mut Vec<&'a T>) {
    match node {
        Node::Leaf(entries) => out.extend(
            entries
                .iter()
                .filter(|(b, _)| b.intersects(query))
                .map(|(_, t)| t),
        ),
        Node::Internal(children) => {
            for (b, child) in children {
                if b.intersects(query) {
                    search_rec(child, query, out);
                }
            }
        }
    }
}

fn insert_rec<T>(node: &mut Node<T>, bbox: BBox, item: T) -> Option<(BBox, Box<Node<T>>)> {
    match node {
        Node::Leaf(entries) => {
            entries.push((bbox, item));
            if entries.len() > MAX_ENTRIES {
                let (keep, moved) = quadratic_split(std::mem::take(entries));
                *entries = keep;
                let sibling = Node::Leaf(moved);
                return Some((sibling.bbox().expect("split halves are non-empty"), Box::new(sibling)));
            }
            None
        }
        Node::Internal(children) => {
            let i = choose_subtree(children, &bbox);
            let split = insert_rec(&mut children[i].1, bbox, item);
            children[i].0 = children[i].0.union(&bbox);
            if let Some((split_box, split_node)) = split {
                children[i].0 = children[i].1.bbox().expect("child stays non-empty");
                children.push((split_box, split_node));
                if children.len() > MAX_ENTRIES {
                    let (keep, moved) = quadratic_split(std::mem::take(children));
                    *children = keep;
                    let sibling = Node::Internal(moved);
                    return Some((sibling.bbox().expect("split halves are non-empty"), Box::new(sibling)));
                }
            }
            None
        }
    }
}

fn choose_subtree<E>(children: &[(BBox, E)], bbox: &BBox) -> usize {
    let mut best = 0;
    let mut best_key = (f64::INFINITY, f64::INFINITY);
    for (i, (b, _)) in children.iter().enumerate() {
        let key = (enlargement(b, bbox), b.area());
        if key < best_key {
            best_key = key;
            best = i;
        }
    }
    best
}

fn remove_rec<T: PartialEq>(
    node: &mut Node<T>,
    bbox: &BBox,
    item: &T,
    orphans: &mut Vec<(BBox, T)>,
) -> bool {
    match node {
        Node::Leaf(entries) => match entries.iter().position(|(b, t)| t == item && b == bbox) {
            Some(i) => {
                entries.swap_remove(i);
                true
            }
            None => false,
        },
        Node::Internal(children) => {
            for i in 0..children.len() {
                if !covers(&children[i].0, bbox) {
                    continue;
                }
                if remove_rec(&mut children[i].1, bbox, item, orphans) {
                    if children[i].1.len() < MIN_ENTRIES {
                        let (_, orphan) = children.swap_remove(i);
                        orphan.drain_into(orphans);
                    } else {
                        children[i].0 = children[i].1.bbox().expect("child is non-empty");
                    }
                    return true;
                }
            }
            false
        }
    }
}

fn covers(outer: &BBox, inner: &BBox) -> bool {
    outer.min_lon <= inner.min_lon
        && outer.min_lat <= inner.min_lat
        && outer.max_lon >= inner.max_lon
        && outer.max_lat >= inner.max_lat
}

type Split<E> = (Vec<(BBox, E)>, Vec<(BBox, E)>);

fn quadratic_split<E>(mut entries: Vec<(BBox, E)>) -> Split<E> {
    // pick the pair that would waste the most area together
    let (mut s1, mut s2, mut worst) = (0, 1, f64::NEG_INFINITY);
    for i in 0..entries.len() {
        for j in i + 1..entries.len() {
            let (a, b) = (&entries[i].0, &entries[j].0);
            let waste = a.union(b).area() - a.area() - b.area();
            if waste > worst {
                (s1, s2, worst) = (i, j, waste);
            }
        }
    }
    // remove the higher index first so the lower one stays valid
    let seed2 = entries.swap_remove(s2);
    let seed1 = entries.swap_remove(s1);
    let (mut box1, mut box2) = (seed1.0, seed2.0);
    let (mut g1, mut g2) = (vec![seed1], vec![seed2]);

    while !entries.is_empty() {
        if g1.len() + entries.len() == MIN_ENTRIES {
            g1.append(&mut entries);
            break;
        }
        if g2.len() + entries.len() == MIN_ENTRIES {
            g2.append(&mut entries);
            break;
        }
        let mut pick = 0;
        let mut best_diff = f64::NEG_INFINITY;
        for (i, (b, _)) in entries.iter().enumerate() {
            let diff = (enlargement(&box1, b) - enlargement(&box2, b)).abs();
            if diff > best_diff {
                best_diff = diff;
                pick = i;
            }
        }
        let entry = entries.swap_remove(pick);
        let (d1, d2) = (enlargement(&box1, &entry.0), enlargement(&box2, &entry.0));
        let to_first = if d1 != d2 {
            d1 < d2
        } else if box1.area() != box2.area() {
            box1.area() < box2.area()
        } else {
            g1.len() <= g2.len()
        };
        if to_first {
            box1 = box1.union(&entry.0);
            g1.push(entry);
        } else {
            box2 = box2.union(&entry.0);
            g2.push(entry);
        }
    }
    (g1, g2)
}

/// Sort-tile-recursive grouping into runs of at most `MAX_ENTRIES`.
fn str_pack<E>(entries: &mut Vec<(BBox, E)>) -> Vec<Vec<(BBox, E)>> {
    let n = entries.len();
    let pages = n.div_ceil(MAX_ENTRIES);
    let slices = (pages as f64).sqrt().ceil() as usize;
    let per_slice = slices * MAX_ENTRIES;

    let cx = |b: &BBox| b.min_lon + b.max_lon;
    let cy = |b: &BBox| b.min_lat + b.max_lat;
    entries.sort_by(|a, b| cx(&a.0).total_cmp(&cx(&b.0)));

    let mut groups = Vec::with_capacity(pages);
    let mut rest = std::mem::take(entries);
    while !rest.is_empty() {
        let tail = rest.split_off(per_slice.min(rest.len()));
        let mut slice = rest;
        rest = tail;
        slice.sort_by(|a, b| cy(&a.0).total_cmp(&cy(&b.0)));
        while !slice.is_empty() {
            let tail = slice.split_off(MAX_ENTRIES.min(slice.len()));
            groups.push(slice);
            slice = tail;
        }
    }
    groups
}
