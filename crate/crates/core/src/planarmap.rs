//! Half-edge planar maps.
//!
//! Half-edges are `0..2E`, with `twin(h) = h ^ 1` for everything built in
//! this crate. The rotation system `next_around_vertex` lists half-edges
//! around each vertex; faces are the orbits of `h ↦ twin(next(h))`, and
//! the orbit of `h` is the face containing the sector that follows `h`
//! around its vertex.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MapRepr", into = "MapRepr")]
pub struct PlanarMap {
    vertex_of: Vec<usize>,
    next: Vec<usize>,
    twin: Vec<usize>,
    n_vertices: usize,
    root_arc: usize,
    rho: usize,
    /// One half-edge per vertex (`usize::MAX` for isolated vertices).
    first: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct MapRepr {
    half_edges: Vec<usize>,
    next_around_vertex: Vec<usize>,
    root_arc: usize,
    rho: usize,
    n_vertices: usize,
}

impl TryFrom<MapRepr> for PlanarMap {
    type Error = Error;
    fn try_from(r: MapRepr) -> Result<Self> {
        PlanarMap::new(r.n_vertices, r.half_edges, r.next_around_vertex, r.root_arc, r.rho)
    }
}

impl From<PlanarMap> for MapRepr {
    fn from(m: PlanarMap) -> Self {
        MapRepr {
            half_edges: m.vertex_of,
            next_around_vertex: m.next,
            root_arc: m.root_arc,
            rho: m.rho,
            n_vertices: m.n_vertices,
        }
    }
}

/// One line of a [`MapReport`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapReport {
    pub checks: Vec<Check>,
}

impl MapReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<bool> {
        self.checks.iter().find(|c| c.name == name).map(|c| c.passed)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeProfile {
    /// Face degree → number of faces.
    pub histogram: BTreeMap<usize, usize>,
    pub max_face: usize,
    pub max_multiplicity: usize,
}

impl PlanarMap {
    /// Build a map with `twin(h) = h ^ 1`. Only array shapes are checked
    /// here; [`PlanarMap::validate`] certifies the rest.
    pub fn new(
        n_vertices: usize,
        vertex_of: Vec<usize>,
        next: Vec<usize>,
        root_arc: usize,
        rho: usize,
    ) -> Result<Self> {
        let h = vertex_of.len();
        if !h.is_multiple_of(2) || next.len() != h {
            return Err(Error::Invalid("half-edge arrays must have equal, even length".into()));
        }
        if h > 0 && root_arc >= h {
            return Err(Error::Invalid(format!("root arc {root_arc} out of range")));
        }
        if rho >= n_vertices || vertex_of.iter().any(|&v| v >= n_vertices) || next.iter().any(|&x| x >= h) {
            return Err(Error::Invalid("vertex or half-edge id out of range".into()));
        }
        let twin = (0..h).map(|x| x ^ 1).collect();
        Ok(Self::from_parts(n_vertices, vertex_of, next, twin, root_arc, rho))
    }

    fn from_parts(
        n_vertices: usize,
        vertex_of: Vec<usize>,
        next: Vec<usize>,
        twin: Vec<usize>,
        root_arc: usize,
        rho: usize,
    ) -> Self {
        let mut first = vec![usize::MAX; n_vertices];
        for (h, &v) in vertex_of.iter().enumerate() {
            if first[v] == usize::MAX {
                first[v] = h;
            }
        }
        Self {
            vertex_of,
            next,
            twin,
            n_vertices,
            root_arc,
            rho,
            first,
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_edges(&self) -> usize {
        self.vertex_of.len() / 2
    }

    pub fn n_half_edges(&self) -> usize {
        self.vertex_of.len()
    }

    pub fn twin(&self, h: usize) -> usize {
        self.twin[h]
    }

    pub fn next_around_vertex(&self, h: usize) -> usize {
        self.next[h]
    }

    pub fn vertex_of(&self, h: usize) -> usize {
        self.vertex_of[h]
    }

    /// Vertex the half-edge points to.
    pub fn head(&self, h: usize) -> usize {
        self.vertex_of[self.twin[h]]
    }

    pub fn root_arc(&self) -> usize {
        self.root_arc
    }

    pub fn rho(&self) -> usize {
        self.rho
    }

    /// Next half-edge along the face containing the sector after `h`.
    pub fn next_in_face(&self, h: usize) -> usize {
        self.twin[self.next[h]]
    }

    /// Half-edges around `v` in rotation order.
    pub fn half_edges_at(&self, v: usize) -> Vec<usize> {
        let start = self.first[v];
        if start == usize::MAX {
            return Vec::new();
        }
        let mut out = vec![start];
        let mut h = self.next[start];
        while h != start && out.len() <= self.n_half_edges() {
            out.push(h);
            h = self.next[h];
        }
        out
    }

    pub fn degree(&self, v: usize) -> usize {
        self.half_edges_at(v).len()
    }

    /// Face id of every half-edge, and the number of faces.
    pub fn face_ids(&self) -> (Vec<usize>, usize) {
        let mut id = vec![usize::MAX; self.n_half_edges()];
        let mut count = 0;
        for s in 0..self.n_half_edges() {
            if id[s] != usize::MAX {
                continue;
            }
            let mut h = s;
            while id[h] == usize::MAX {
                id[h] = count;
                h = self.next_in_face(h);
            }
            count += 1;
        }
        (id, count)
    }

    /// Faces as cyclic half-edge sequences.
    pub fn faces(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n_half_edges()];
        let mut out = Vec::new();
        for s in 0..self.n_half_edges() {
            if seen[s] {
                continue;
            }
            let mut face = Vec::new();
            let mut h = s;
            while !seen[h] {
                seen[h] = true;
                face.push(h);
                h = self.next_in_face(h);
            }
            out.push(face);
        }
        out
    }

    pub fn face_degrees(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.faces().iter().map(Vec::len).collect();
        d.sort_unstable();
        d
    }

    pub fn n_faces(&self) -> usize {
        self.face_ids().1
    }

    /// Graph distances from `src`; `usize::MAX` marks unreachable vertices.
    pub fn bfs_distances(&self, src: usize) -> Vec<usize> {
        let mut dist = Vec::new();
        let mut queue = VecDeque::new();
        self.bfs_into(src, &mut dist, &mut queue);
        dist
    }

    /// [`PlanarMap::bfs_distances`] with caller-owned buffers.
    pub fn bfs_into(&self, src: usize, dist: &mut Vec<usize>, queue: &mut VecDeque<usize>) {
        dist.clear();
        dist.resize(self.n_vertices, usize::MAX);
        queue.clear();
        dist[src] = 0;
        queue.push_back(src);
        while let Some(v) = queue.pop_front() {
            let start = self.first[v];
            if start == usize::MAX {
                continue;
            }
            let mut h = start;
            loop {
                let u = self.head(h);
                if dist[u] == usize::MAX {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
                h = self.next[h];
                if h == start {
                    break;
                }
            }
        }
    }

    /// Neighbour lists (with multiplicity) in rotation order.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        (0..self.n_vertices)
            .map(|v| self.half_edges_at(v).into_iter().map(|h| self.head(h)).collect())
            .collect()
    }

    pub fn degree_profile(&self) -> DegreeProfile {
        let mut histogram = BTreeMap::new();
        for d in self.face_degrees() {
            *histogram.entry(d).or_insert(0) += 1;
        }
        let (max_face, max_multiplicity) = histogram.iter().next_back().map(|(&k, &v)| (k, v)).unwrap_or((0, 0));
        DegreeProfile {
            histogram,
            max_face,
            max_multiplicity,
        }
    }

    /// Check every structural invariant, collecting all failures.
    pub fn validate(&self) -> MapReport {
        let nh = self.n_half_edges();
        let mut checks = Vec::new();
        let mut push = |name: &str, passed: bool, detail: String| {
            checks.push(Check {
                name: name.to_string(),
                passed,
                detail,
            })
        };

        let bad_twin = (0..nh).find(|&h| self.twin[h] >= nh || self.twin[h] == h || self.twin[self.twin[h]] != h);
        push(
            "twin_involution",
            bad_twin.is_none(),
            bad_twin.map_or_else(String::new, |h| format!("fails at half-edge {h}")),
        );

        let mut hit = vec![false; nh];
        let mut perm = true;
        for &x in &self.next {
            if hit[x] {
                perm = false;
            }
            hit[x] = true;
        }
        push("rotation_permutation", perm, String::new());

        let consistent = perm && (0..nh).all(|h| self.vertex_of[self.next[h]] == self.vertex_of[h]);
        let orbits_match = consistent
            && (0..self.n_vertices).all(|v| {
                let around = self.half_edges_at(v);
                around.len() == self.vertex_of.iter().filter(|&&u| u == v).count()
            });
        push("rotation_matches_vertices", orbits_match, String::new());

        let structural = bad_twin.is_none() && orbits_match;
        let dist = if structural {
            self.bfs_distances(self.rho)
        } else {
            Vec::new()
        };
        let connected = structural && dist.iter().all(|&d| d != usize::MAX);
        push("connected", connected, String::new());

        if structural {
            let f = self.n_faces();
            let chi = self.n_vertices as i64 - self.n_edges() as i64 + f as i64;
            push(
                "euler",
                chi == 2,
                format!("V={} E={} F={} V-E+F={}", self.n_vertices, self.n_edges(), f, chi),
            );
            let degs = self.face_degrees();
            let odd = degs.iter().filter(|&&d| d % 2 == 1).count();
            push("even_faces", odd == 0, format!("{odd} odd faces"));
            push("face_degree_sum", degs.iter().sum::<usize>() == nh, String::new());
        } else {
            push("euler", false, "structure invalid".into());
            push("even_faces", false, "structure invalid".into());
            push("face_degree_sum", false, "structure invalid".into());
        }

        let bip = connected && (0..nh).all(|h| dist[self.vertex_of[h]] % 2 != dist[self.head(h)] % 2);
        push("bipartite", bip, String::new());

        push(
            "root_and_rho",
            (nh == 0 || self.root_arc < nh) && self.rho < self.n_vertices,
            String::new(),
        );
        MapReport { checks }
    }

    /// Canonical code of the rooted pointed map: half-edges renumbered in
    /// discovery order from the root arc. Two maps are isomorphic (as rooted,
    /// pointed maps) iff their codes are equal.
    pub fn canonical_code(&self) -> Vec<usize> {
        let nh = self.n_half_edges();
        if nh == 0 {
            return vec![self.n_vertices];
        }
        let mut id = vec![usize::MAX; nh];
        let mut order = Vec::with_capacity(nh);
        let mut queue = VecDeque::new();
        id[self.root_arc] = 0;
        order.push(self.root_arc);
        queue.push_back(self.root_arc);
        while let Some(h) = queue.pop_front() {
            for x in [self.twin[h], self.next[h]] {
                if id[x] == usize::MAX {
                    id[x] = order.len();
                    order.push(x);
                    queue.push_back(x);
                }
            }
        }
        let mut code = Vec::with_capacity(2 * nh + 2);
        for &h in &order {
            code.push(id[self.twin[h]]);
            code.push(id[self.next[h]]);
        }
        let rho_mark = order
            .iter()
            .filter(|&&h| self.vertex_of[h] == self.rho)
            .map(|&h| id[h])
            .min()
            .unwrap_or(usize::MAX);
        code.push(rho_mark);
        code
    }

    #[cfg(test)]
    pub(crate) fn corrupt_twin_for_test(&mut self, h: usize) {
        self.twin[h] = h;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Path `0 - 1 - 2` with ρ = 2.
    fn path2() -> PlanarMap {
        // edge 0: half-edges 0 (at 0), 1 (at 1); edge 1: 2 (at 1), 3 (at 2)
        PlanarMap::new(3, vec![0, 1, 1, 2], vec![0, 2, 1, 3], 0, 2).unwrap()
    }

    #[test]
    fn single_edge() {
        let m = PlanarMap::new(2, vec![0, 1], vec![0, 1], 0, 1).unwrap();
        assert_eq!(m.face_degrees(), vec![2]);
        assert_eq!(m.degree_profile().histogram, BTreeMap::from([(2, 1)]));
        assert!(m.validate().passed());
    }

    #[test]
    fn path_distances_and_face() {
        let m = path2();
        assert_eq!(m.bfs_distances(0), vec![0, 1, 2]);
        assert_eq!(m.face_degrees(), vec![4]);
        assert!(m.validate().passed());
        assert_eq!(m.adjacency(), vec![vec![1], vec![0, 2], vec![1]]);
    }

    #[test]
    fn corrupted_twin_is_reported() {
        let mut m = path2();
        m.corrupt_twin_for_test(1);
        let r = m.validate();
        assert_eq!(r.check("twin_involution"), Some(false));
        assert!(!r.passed());
    }

    #[test]
    fn triangle_fails_bipartite() {
        // triangle 0-1-2: edges (0,1), (1,2), (2,0)
        let vertex_of = vec![0, 1, 1, 2, 2, 0];
        // around 0: 0, 5; around 1: 1, 2; around 2: 3, 4
        let next = vec![5, 2, 1, 4, 3, 0];
        let m = PlanarMap::new(3, vertex_of, next, 0, 0).unwrap();
        let r = m.validate();
        assert_eq!(r.check("euler"), Some(true));
        assert_eq!(r.check("even_faces"), Some(false));
        assert_eq!(r.check("bipartite"), Some(false));
    }

    #[test]
    fn json_round_trip() {
        let m = path2();
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"next_around_vertex\""));
        assert_eq!(serde_json::from_str::<PlanarMap>(&s).unwrap(), m);
    }

    #[test]
    fn canonical_code_ignores_relabelling() {
        let a = path2();
        // the same path with ids permuted: edge 0 joins 1-0, edge 1 joins 2-1,
        // root arc 2 points from the leaf 2 to 1, ρ is the other leaf
        let b = PlanarMap::new(3, vec![1, 0, 2, 1], vec![3, 1, 2, 0], 2, 0).unwrap();
        assert!(b.validate().passed());
        assert_eq!(a.canonical_code(), b.canonical_code());
        let c = PlanarMap::new(3, vec![0, 1, 1, 2], vec![0, 2, 1, 3], 0, 0).unwrap();
        assert_ne!(a.canonical_code(), c.canonical_code());
    }
}
