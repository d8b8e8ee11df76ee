//! The tree bijection `G_n` and the BDG bijection between labelled mobiles
//! (with a sign) and rooted pointed bipartite maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planarmap::PlanarMap;
use crate::trees::PlanarTree;

/// Rebuild a planar tree from child lists over arbitrary ids. Returns the
/// tree and, for every old id, its new depth-first index.
pub(crate) fn tree_from_children(root: usize, children: &[Vec<usize>]) -> (PlanarTree, Vec<usize>) {
    let mut new_id = vec![usize::MAX; children.len()];
    let mut outdeg = Vec::with_capacity(children.len());
    let mut stack = vec![root];
    while let Some(v) = stack.pop() {
        new_id[v] = outdeg.len();
        outdeg.push(children[v].len());
        stack.extend(children[v].iter().rev());
    }
    let t = PlanarTree::from_outdeg(outdeg).expect("child lists describe a tree");
    (t, new_id)
}

/// A two-coloured tree read as a simply generated tree: every white vertex
/// becomes a leaf and a black vertex with `k` neighbours gets `k` children.
/// The second component maps each input vertex to its output index.
pub fn gn_forward_with_map(t: &PlanarTree) -> (PlanarTree, Vec<usize>) {
    let nv = t.n_vertices();
    if nv == 1 {
        return (t.clone(), vec![0]);
    }
    let head = |w: usize| t.children(w).first().copied().unwrap_or(w);
    let mut kids: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for b in t.black_vertices() {
        let p = t.parent(b).expect("black vertices have a parent");
        let siblings = t.children(p);
        let pos = siblings.iter().position(|&x| x == b).expect("child of its parent");
        let next = siblings.get(pos + 1).copied().unwrap_or(p);
        kids[b] = t
            .children(b)
            .iter()
            .map(|&w| head(w))
            .chain(std::iter::once(next))
            .collect();
    }
    tree_from_children(t.children(0)[0], &kids)
}

pub fn gn_forward(t: &PlanarTree) -> PlanarTree {
    gn_forward_with_map(t).0
}

/// Inverse of [`gn_forward`]. Each non-last child `h` of an internal vertex
/// starts a chain along last children; the leaf ending the chain is a white
/// vertex whose black children are the chain's internal vertices. The chain
/// from the root ends at the white root.
pub fn gn_inverse_with_map(t: &PlanarTree) -> (PlanarTree, Vec<usize>) {
    let nv = t.n_vertices();
    if nv == 1 {
        return (t.clone(), vec![0]);
    }
    let mut kids: Vec<Vec<usize>> = vec![Vec::new(); nv];
    // follow last children from `h`, returning the terminal leaf and the path
    let chain = |h: usize| -> (usize, Vec<usize>) {
        let mut path = Vec::new();
        let mut x = h;
        while t.outdeg(x) > 0 {
            path.push(x);
            x = *t.children(x).last().unwrap();
        }
        (x, path)
    };
    let (root, top) = chain(0);
    kids[root] = top;
    for v in 0..nv {
        let ch = t.children(v);
        if ch.is_empty() {
            continue;
        }
        for &h in &ch[..ch.len() - 1] {
            let (w, path) = chain(h);
            kids[v].push(w);
            kids[w] = path;
        }
    }
    tree_from_children(root, &kids)
}

pub fn gn_inverse(t: &PlanarTree) -> PlanarTree {
    gn_inverse_with_map(t).0
}

/// A labelled two-coloured tree with a sign. Labels are stored for white
/// vertices only, in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "MobileRepr", into = "MobileRepr")]
pub struct Mobile {
    tree: PlanarTree,
    labels: Vec<i64>,
    epsilon: i8,
    #[serde(skip)]
    white_rank: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct MobileRepr {
    outdeg: Vec<usize>,
    labels: Vec<i64>,
    epsilon: i8,
}

impl TryFrom<MobileRepr> for Mobile {
    type Error = Error;
    fn try_from(r: MobileRepr) -> Result<Self> {
        Mobile::new(PlanarTree::from_outdeg(r.outdeg)?, r.labels, r.epsilon)
    }
}

impl From<Mobile> for MobileRepr {
    fn from(m: Mobile) -> Self {
        MobileRepr {
            outdeg: m.tree.outdeg_seq().to_vec(),
            labels: m.labels,
            epsilon: m.epsilon,
        }
    }
}

/// Ranks of white vertices in lexicographic order (`usize::MAX` for black).
pub(crate) fn white_ranks(t: &PlanarTree) -> Vec<usize> {
    let mut rank = vec![usize::MAX; t.n_vertices()];
    let mut k = 0;
    for (v, r) in rank.iter_mut().enumerate() {
        if t.is_white(v) {
            *r = k;
            k += 1;
        }
    }
    rank
}

/// Check the increment rule around every black vertex: going around
/// `u_0 = parent, u_1, ..., u_{k-1}` cyclically, each step is `>= -1`.
pub fn check_label_rule(t: &PlanarTree, label_of: impl Fn(usize) -> i64) -> Result<()> {
    for b in t.black_vertices() {
        let p = t.parent(b).expect("black vertices have a parent");
        let ring: Vec<usize> = std::iter::once(p).chain(t.children(b).iter().copied()).collect();
        for j in 0..ring.len() {
            let x = label_of(ring[(j + 1) % ring.len()]) - label_of(ring[j]);
            if x < -1 {
                return Err(Error::LabelRule(format!(
                    "increment {x} around black vertex {b} (from {} to {})",
                    ring[j],
                    ring[(j + 1) % ring.len()]
                )));
            }
        }
    }
    Ok(())
}

impl Mobile {
    pub fn new(tree: PlanarTree, labels: Vec<i64>, epsilon: i8) -> Result<Self> {
        let white_rank = white_ranks(&tree);
        let n_white = tree.n_vertices() - tree.black_vertices().len();
        if labels.len() != n_white {
            return Err(Error::Invalid(format!(
                "{} labels for {} white vertices",
                labels.len(),
                n_white
            )));
        }
        if labels[0] != 0 {
            return Err(Error::LabelRule(format!("root label is {}, not 0", labels[0])));
        }
        if epsilon != 1 && epsilon != -1 {
            return Err(Error::Invalid(format!("epsilon must be ±1, got {epsilon}")));
        }
        check_label_rule(&tree, |v| labels[white_rank[v]])?;
        Ok(Self {
            tree,
            labels,
            epsilon,
            white_rank,
        })
    }

    pub fn tree(&self) -> &PlanarTree {
        &self.tree
    }

    /// Labels of the white vertices in lexicographic order.
    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn epsilon(&self) -> i8 {
        self.epsilon
    }

    pub fn n_white(&self) -> usize {
        self.labels.len()
    }

    /// Label of white vertex `v` (a vertex id of the tree).
    pub fn label(&self, v: usize) -> i64 {
        debug_assert!(self.tree.is_white(v));
        self.labels[self.white_rank[v]]
    }

    pub fn white_rank(&self, v: usize) -> usize {
        self.white_rank[v]
    }

    pub fn with_epsilon(&self, epsilon: i8) -> Result<Self> {
        Mobile::new(self.tree.clone(), self.labels.clone(), epsilon)
    }
}

/// White vertices at the even positions of the contour: `c_0, ..., c_{n-1}`.
pub fn white_contour(t: &PlanarTree) -> Vec<usize> {
    full_contour(t).into_iter().step_by(2).take(t.n_edges()).collect()
}

/// Vertices visited by the contour walk, `2n + 1` entries from root to root.
pub fn full_contour(t: &PlanarTree) -> Vec<usize> {
    let mut out = Vec::with_capacity(2 * t.n_edges() + 1);
    let mut stack = vec![(0usize, 0usize)];
    out.push(0);
    while let Some(top) = stack.last_mut() {
        let (v, i) = *top;
        if i < t.outdeg(v) {
            top.1 += 1;
            let c = t.children(v)[i];
            out.push(c);
            stack.push((c, 0));
        } else {
            stack.pop();
            if let Some(&(p, _)) = stack.last() {
                out.push(p);
            }
        }
    }
    out
}

/// For each corner `i < n`, the first later corner (in the periodic
/// extension, as an index `< 2n`) with a strictly smaller label, or `None`
/// when the label is a global minimum.
pub fn successors(labels: &[i64]) -> Vec<Option<usize>> {
    let n = labels.len();
    let mut next_smaller = vec![None; 2 * n];
    let mut stack: Vec<usize> = Vec::new();
    for i in (0..2 * n).rev() {
        let li = labels[i % n];
        while let Some(&j) = stack.last() {
            if labels[j % n] >= li {
                stack.pop();
            } else {
                break;
            }
        }
        next_smaller[i] = stack.last().copied();
        stack.push(i);
    }
    next_smaller.truncate(n);
    next_smaller
}

/// Mobile and sign to rooted pointed bipartite map.
///
/// Map vertices are the white vertices (by lexicographic rank) followed by
/// the extra vertex `ρ`. Arc `k` joins corner `c_k` (half-edge `2k`) to its
/// successor (half-edge `2k+1`). Around a white vertex the half-edges are
/// listed corner by corner in contour order; inside a corner the incoming
/// arcs come first, shortest first, then the outgoing arc. Around `ρ` the
/// arcs are listed by decreasing source corner. The root arc is arc `0`,
/// pointing to the mobile root when `ε = +1`.
pub fn bdg_inverse(m: &Mobile) -> Result<PlanarMap> {
    bdg_inverse_with_fault(m, None)
}

/// Deliberate defects, used to check that the verification driver catches
/// them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Every successor corner is shifted one corner further.
    SuccessorOffByOne,
}

/// [`bdg_inverse`], optionally with an injected [`Fault`].
pub fn bdg_inverse_with_fault(m: &Mobile, fault: Option<Fault>) -> Result<PlanarMap> {
    let t = m.tree();
    let n = t.n_edges();
    if n == 0 {
        return Err(Error::Invalid("the one-vertex mobile has no map image".into()));
    }
    check_label_rule(t, |v| m.label(v))?;
    let c = white_contour(t);
    let lab: Vec<i64> = c.iter().map(|&v| m.label(v)).collect();
    let mut sigma = successors(&lab);
    if fault == Some(Fault::SuccessorOffByOne) {
        for s in sigma.iter_mut().flatten() {
            *s += 1;
        }
    }
    let rho = m.n_white();
    let mut vertex_of = vec![0; 2 * n];
    let mut incoming: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut at_rho = Vec::new();
    for k in 0..n {
        vertex_of[2 * k] = m.white_rank(c[k]);
        match sigma[k] {
            Some(s) => {
                vertex_of[2 * k + 1] = m.white_rank(c[s % n]);
                incoming[s % n].push((s - k, 2 * k + 1));
            }
            None => {
                vertex_of[2 * k + 1] = rho;
                at_rho.push(2 * k + 1);
            }
        }
    }
    let mut around: Vec<Vec<usize>> = vec![Vec::new(); rho + 1];
    for i in 0..n {
        let list = &mut incoming[i];
        list.sort_unstable();
        let v = m.white_rank(c[i]);
        around[v].extend(list.iter().map(|&(_, h)| h));
        around[v].push(2 * i);
    }
    at_rho.reverse();
    around[rho] = at_rho;
    let mut next = vec![0; 2 * n];
    for list in &around {
        for j in 0..list.len() {
            next[list[j]] = list[(j + 1) % list.len()];
        }
    }
    let root_arc = if m.epsilon() == 1 { 1 } else { 0 };
    PlanarMap::new(rho + 1, vertex_of, next, root_arc, rho)
}

/// Rooted pointed bipartite map to mobile and sign; inverse of
/// [`bdg_inverse`].
///
/// Vertices are labelled by their distance to `ρ`. Every half-edge `h` at
/// `v` whose other end is one closer to `ρ` contributes a mobile edge from
/// `v` to the black vertex of the face containing the sector after `h`.
/// Around a black vertex the edges follow the face boundary backwards.
pub fn bdg_forward(map: &PlanarMap) -> Result<Mobile> {
    let nh = map.n_half_edges();
    if nh == 0 {
        return Err(Error::Invalid("map has no edges".into()));
    }
    let rho = map.rho();
    let d = map.bfs_distances(rho);
    if d.contains(&usize::MAX) {
        return Err(Error::Invalid("map is not connected".into()));
    }
    for h in 0..nh {
        if d[map.vertex_of(h)] % 2 == d[map.head(h)] % 2 {
            return Err(Error::NotBipartite);
        }
    }
    let is_down = |h: usize| map.vertex_of(h) != rho && d[map.head(h)] + 1 == d[map.vertex_of(h)];
    let (face_id, n_faces) = map.face_ids();
    let nv = map.n_vertices();

    // mobile edges are indexed by their down half-edge
    let mut white_ring: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for (v, ring) in white_ring.iter_mut().enumerate() {
        if v != rho {
            ring.extend(map.half_edges_at(v).into_iter().filter(|&h| is_down(h)));
        }
    }
    let mut black_ring: Vec<Vec<usize>> = vec![Vec::new(); n_faces];
    for face in map.faces() {
        let f = face_id[face[0]];
        // the face is traced against the mobile's orientation around black vertices
        black_ring[f].extend(face.iter().rev().copied().filter(|&h| is_down(h)));
    }

    let ra = map.root_arc();
    let (a, b) = (map.vertex_of(ra), map.head(ra));
    let (r, h0, epsilon) = if d[a] > d[b] { (a, ra, -1) } else { (b, map.twin(ra), 1) };

    // tree nodes: white map vertex v ↦ v, face f ↦ nv + f
    let mut kids: Vec<Vec<usize>> = vec![Vec::new(); nv + n_faces];
    let rotate_after = |ring: &[usize], e: usize, include: bool| -> Vec<usize> {
        let p = ring.iter().position(|&x| x == e).expect("edge in ring");
        let start = if include { p } else { p + 1 };
        let end = p + ring.len();
        (start..end).map(|j| ring[j % ring.len()]).collect()
    };
    // (node, entering edge)
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for e in rotate_after(&white_ring[r], h0, true) {
        let f = face_id[e];
        kids[r].push(nv + f);
        stack.push((nv + f, e));
    }
    while let Some((node, e)) = stack.pop() {
        if node >= nv {
            for e2 in rotate_after(&black_ring[node - nv], e, false) {
                let w = map.vertex_of(e2);
                kids[node].push(w);
                stack.push((w, e2));
            }
        } else {
            for e2 in rotate_after(&white_ring[node], e, false) {
                let f = nv + face_id[e2];
                kids[node].push(f);
                stack.push((f, e2));
            }
        }
    }
    let (tree, new_id) = tree_from_children(r, &kids);
    let mut labels = vec![0i64; tree.n_vertices() - tree.black_vertices().len()];
    let ranks = white_ranks(&tree);
    for v in (0..nv).filter(|&v| v != rho) {
        if new_id[v] == usize::MAX {
            return Err(Error::Invalid(
                "map vertex missing from the reconstructed mobile".into(),
            ));
        }
        labels[ranks[new_id[v]]] = d[v] as i64 - d[r] as i64;
    }
    if tree.n_vertices() != nv - 1 + n_faces {
        return Err(Error::Invalid("reconstructed mobile does not cover the map".into()));
    }
    Mobile::new(tree, labels, epsilon)
}
