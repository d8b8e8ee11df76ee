//! The correspondence between a map and its star map, and the distortion
//! bound driven by the label oscillation `K` inside each piece.

use serde::{Deserialize, Serialize};

use crate::bijections::{bdg_inverse, Mobile};
use crate::error::{Error, Result};
use crate::planarmap::PlanarMap;
use crate::trees::{CondensateView, PlanarTree};

/// Largest map (in edges) accepted by [`exact_distortion`].
pub const DISTORTION_CAP: usize = 500;

/// Piece index of every tree vertex: `0` outside the subtree of `s`,
/// `i` inside the subtree of the `i`-th child of `s`, and `usize::MAX` for
/// `s` itself.
pub fn piece_of_vertex(t: &PlanarTree, cv: &CondensateView) -> Vec<usize> {
    let s = cv.s_index;
    let mut piece = vec![0; t.n_vertices()];
    piece[s] = usize::MAX;
    for (i, &c) in t.children(s).iter().enumerate() {
        let end = t.subtree_end(c);
        for p in &mut piece[c..end] {
            *p = i + 1;
        }
    }
    piece
}

/// `π: {0, ..., N°} → {0, ..., Δ}` on white ranks. Whites inside the
/// subtree of `s_j` go to `j`; whites of piece `0` up to `s_0` in
/// lexicographic order go to `0` and those after the subtree of `s` go to
/// `Δ`; finally `π(N°) = Δ`.
pub fn pi_map(t: &PlanarTree, cv: &CondensateView) -> Vec<usize> {
    let piece = piece_of_vertex(t, cv);
    let s0 = cv.neighbours[0];
    let mut pi = Vec::with_capacity(cv.n_white + 1);
    for v in (0..t.n_vertices()).filter(|&v| t.is_white(v)) {
        pi.push(match piece[v] {
            0 if v <= s0 => 0,
            0 => cv.delta_n,
            j => j,
        });
    }
    pi.push(cv.delta_n);
    pi
}

/// `K = max_i max_{v ∈ τ_i} |ℓ(v) - ℓ(s_i)|` over white `v`.
pub fn distortion_k(m: &Mobile, cv: &CondensateView) -> i64 {
    let t = m.tree();
    let piece = piece_of_vertex(t, cv);
    let anchor: Vec<i64> = cv.neighbours.iter().map(|&v| m.label(v)).collect();
    (0..t.n_vertices())
        .filter(|&v| t.is_white(v))
        .map(|v| (m.label(v) - anchor[piece[v]]).abs())
        .max()
        .unwrap_or(0)
}

/// The mobile cut down to `s` and its white neighbours (labels shifted so
/// that `s_0` is the root at label 0), and its map.
pub fn star_map(m: &Mobile, cv: &CondensateView) -> Result<(Mobile, PlanarMap)> {
    let d = cv.delta_n;
    let mut outdeg = vec![1, d - 1];
    outdeg.extend(std::iter::repeat_n(0, d - 1));
    let base = m.label(cv.neighbours[0]);
    let labels: Vec<i64> = cv.neighbours.iter().map(|&v| m.label(v) - base).collect();
    let trimmed = Mobile::new(PlanarTree::from_outdeg(outdeg)?, labels, m.epsilon())?;
    let map = bdg_inverse(&trimmed)?;
    Ok((trimmed, map))
}

/// Pairs `(vertex of M, vertex of M*)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Correspondence {
    pub pairs: Vec<(usize, usize)>,
}

impl Correspondence {
    /// `{(ρ, ρ*)} ∪ {(v_i, s*_{π(i)})}`, with `s*_Δ = s*_0`.
    pub fn from_pi(pi: &[usize], delta: usize, rho: usize, rho_star: usize) -> Self {
        let n_white = pi.len() - 1;
        let mut pairs = vec![(rho, rho_star)];
        pairs.extend((0..n_white).map(|i| (i, if pi[i] == delta { 0 } else { pi[i] })));
        Self { pairs }
    }

    /// Every vertex on each side appears in some pair.
    pub fn covers(&self, n1: usize, n2: usize) -> bool {
        let mut a = vec![false; n1];
        let mut b = vec![false; n2];
        for &(x, y) in &self.pairs {
            if x >= n1 || y >= n2 {
                return false;
            }
            a[x] = true;
            b[y] = true;
        }
        a.into_iter().chain(b).all(|x| x)
    }
}

fn all_pairs(map: &PlanarMap) -> Vec<Vec<usize>> {
    (0..map.n_vertices()).map(|v| map.bfs_distances(v)).collect()
}

/// `sup |d_1(x_1, y_1) - d_2(x_2, y_2)|` over pairs of correspondence pairs.
pub fn exact_distortion(m1: &PlanarMap, m2: &PlanarMap, r: &Correspondence) -> Result<u64> {
    for m in [m1, m2] {
        if m.n_edges() > DISTORTION_CAP {
            return Err(Error::CapExceeded {
                n: m.n_edges(),
                cap: DISTORTION_CAP,
            });
        }
    }
    let (d1, d2) = (all_pairs(m1), all_pairs(m2));
    let mut dis = 0u64;
    for &(x1, x2) in &r.pairs {
        for &(y1, y2) in &r.pairs {
            dis = dis.max((d1[x1][y1] as i64 - d2[x2][y2] as i64).unsigned_abs());
        }
    }
    Ok(dis)
}

/// Outcome of the correspondence construction on one mobile.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistortionRecord {
    pub k: i64,
    /// Absent above [`DISTORTION_CAP`].
    pub dis: Option<u64>,
    pub star_edges: usize,
    pub star_faces: usize,
    pub star_acyclic: bool,
}

pub fn distortion_record(m: &Mobile, cv: &CondensateView, with_dis: bool) -> Result<DistortionRecord> {
    let k = distortion_k(m, cv);
    let (_, star) = star_map(m, cv)?;
    let star_acyclic = star.validate().passed() && star.n_edges() + 1 == star.n_vertices();
    let dis = if with_dis {
        let map = bdg_inverse(m)?;
        let pi = pi_map(m.tree(), cv);
        let r = Correspondence::from_pi(&pi, cv.delta_n, map.rho(), star.rho());
        Some(exact_distortion(&map, &star, &r)?)
    } else {
        None
    };
    Ok(DistortionRecord {
        k,
        dis,
        star_edges: star.n_edges(),
        star_faces: star.n_faces(),
        star_acyclic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bijections::gn_inverse;
    use crate::labels::sample_labels;
    use crate::rng::replicate_rng;
    use crate::trees::{condensate_view, TreeSampler};
    use crate::weights::WeightSequence;

    fn path_mobile() -> Mobile {
        Mobile::new(PlanarTree::from_outdeg(vec![1, 1, 0]).unwrap(), vec![0, -1], 1).unwrap()
    }

    fn random_mobile(n: usize, seed: u64) -> Mobile {
        let w = WeightSequence::power_law(3.0, 1.0).unwrap();
        let mut rng = replicate_rng(seed, 0);
        let t = gn_inverse(&TreeSampler::new(n, &w).unwrap().sample_tree(&mut rng));
        let l = sample_labels(&t, &mut rng);
        Mobile::new(t, l, 1).unwrap()
    }

    #[test]
    fn pi_on_path() {
        let m = path_mobile();
        let cv = condensate_view(m.tree()).unwrap();
        assert_eq!(pi_map(m.tree(), &cv), vec![0, 1, 2]);
        assert_eq!(distortion_k(&m, &cv), 0);
    }

    #[test]
    fn star_mobile_has_zero_k() {
        let t = PlanarTree::from_outdeg(vec![1, 3, 0, 0, 0]).unwrap();
        let m = Mobile::new(t, vec![0, 1, 0, -1], 1).unwrap();
        let cv = condensate_view(m.tree()).unwrap();
        assert_eq!(distortion_k(&m, &cv), 0);
        let (trimmed, star) = star_map(&m, &cv).unwrap();
        assert_eq!(trimmed, m);
        assert_eq!((star.n_vertices(), star.n_edges(), star.n_faces()), (5, 4, 1));
    }

    #[test]
    fn identity_correspondence_has_zero_distortion() {
        let m = random_mobile(60, 1);
        let map = bdg_inverse(&m).unwrap();
        let r = Correspondence {
            pairs: (0..map.n_vertices()).map(|v| (v, v)).collect(),
        };
        assert_eq!(exact_distortion(&map, &map, &r).unwrap(), 0);
    }

    fn brute_k(m: &Mobile, cv: &CondensateView) -> i64 {
        let t = m.tree();
        let mut best = 0;
        for v in (0..t.n_vertices()).filter(|&v| t.is_white(v)) {
            // climb to find which neighbour of s owns v
            let mut u = v;
            let mut owner = cv.neighbours[0];
            while let Some(p) = t.parent(u) {
                if p == cv.s_index {
                    owner = u;
                    break;
                }
                u = p;
            }
            best = best.max((m.label(v) - m.label(owner)).abs());
        }
        best
    }

    #[test]
    fn k_matches_brute_force_and_pi_preimages() {
        for seed in 0..50 {
            let m = random_mobile(500, 100 + seed);
            let cv = condensate_view(m.tree()).unwrap();
            assert_eq!(distortion_k(&m, &cv), brute_k(&m, &cv));
            let pi = pi_map(m.tree(), &cv);
            assert_eq!(pi[0], 0);
            assert_eq!(*pi.last().unwrap(), cv.delta_n);
            for j in 1..cv.delta_n {
                assert_eq!(pi.iter().filter(|&&x| x == j).count(), cv.white_counts[j]);
            }
        }
    }

    #[test]
    fn distortion_bound_and_symmetry() {
        for seed in 0..20 {
            let m = random_mobile(80, 300 + seed);
            let cv = condensate_view(m.tree()).unwrap();
            let rec = distortion_record(&m, &cv, true).unwrap();
            assert!(rec.dis.unwrap() as i64 <= 10 * rec.k, "{rec:?}");
            assert!(rec.star_acyclic);
            let map = bdg_inverse(&m).unwrap();
            let (_, star) = star_map(&m, &cv).unwrap();
            let r = Correspondence::from_pi(&pi_map(m.tree(), &cv), cv.delta_n, map.rho(), star.rho());
            assert!(r.covers(map.n_vertices(), star.n_vertices()));
            let swapped = Correspondence {
                pairs: r.pairs.iter().map(|&(a, b)| (b, a)).collect(),
            };
            assert_eq!(
                exact_distortion(&map, &star, &r).unwrap(),
                exact_distortion(&star, &map, &swapped).unwrap()
            );
        }
    }

    #[test]
    fn distortion_is_invariant_under_relabelling() {
        let m = random_mobile(40, 7);
        let map = bdg_inverse(&m).unwrap();
        let nv = map.n_vertices();
        let r = Correspondence {
            pairs: (0..nv).map(|v| (v, (v * 7) % nv)).collect(),
        };
        let base = exact_distortion(&map, &map, &r).unwrap();
        // relabel the second copy by a cyclic shift of vertex ids
        let shift = |v: usize| (v + 3) % nv;
        let vertex_of: Vec<usize> = (0..map.n_half_edges()).map(|h| shift(map.vertex_of(h))).collect();
        let next: Vec<usize> = (0..map.n_half_edges()).map(|h| map.next_around_vertex(h)).collect();
        let relabelled = PlanarMap::new(nv, vertex_of, next, map.root_arc(), shift(map.rho())).unwrap();
        let r2 = Correspondence {
            pairs: r.pairs.iter().map(|&(a, b)| (a, shift(b))).collect(),
        };
        assert_eq!(exact_distortion(&map, &relabelled, &r2).unwrap(), base);
    }

    #[test]
    fn cap_is_enforced() {
        let m = random_mobile(600, 2);
        let map = bdg_inverse(&m).unwrap();
        let r = Correspondence { pairs: vec![(0, 0)] };
        assert!(matches!(
            exact_distortion(&map, &map, &r),
            Err(Error::CapExceeded { .. })
        ));
    }
}
