//! Rooted planar trees, exhaustive enumeration, exact `ν_n` sampling and the
//! decomposition of a two-coloured tree around its largest black vertex.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{log_convolve, log_sum_exp, sample_log_weights};
use crate::weights::WeightSequence;

/// Hard limit for exhaustive enumeration.
pub const ENUMERATION_CAP: usize = 10;

/// Default cap on `n` for [`TreeSampler`].
pub const DEFAULT_SAMPLER_CAP: usize = 30_000;

/// Sampler cap, overridable through `CONDMAP_CAP_N`.
pub fn sampler_cap() -> usize {
    std::env::var("CONDMAP_CAP_N")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_SAMPLER_CAP)
}

/// A rooted planar tree stored as its outdegree sequence in depth-first
/// (lexicographic) order. Vertex `0` is the root. When the tree is read as
/// a two-coloured tree, vertices at even depth are white.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "TreeRepr", into = "TreeRepr")]
pub struct PlanarTree {
    outdeg: Vec<usize>,
    #[serde(skip)]
    parent: Vec<usize>,
    #[serde(skip)]
    child_off: Vec<usize>,
    #[serde(skip)]
    children: Vec<usize>,
    #[serde(skip)]
    depth: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct TreeRepr {
    n: usize,
    outdeg: Vec<usize>,
}

impl TryFrom<TreeRepr> for PlanarTree {
    type Error = Error;
    fn try_from(r: TreeRepr) -> Result<Self> {
        let t = PlanarTree::from_outdeg(r.outdeg)?;
        if t.n_edges() != r.n {
            return Err(Error::Invalid(format!(
                "n = {} but outdegrees sum to {}",
                r.n,
                t.n_edges()
            )));
        }
        Ok(t)
    }
}

impl From<PlanarTree> for TreeRepr {
    fn from(t: PlanarTree) -> Self {
        TreeRepr {
            n: t.n_edges(),
            outdeg: t.outdeg,
        }
    }
}

/// Sentinel parent of the root.
pub const NO_PARENT: usize = usize::MAX;

/// Whether the partial sums of `d_i - 1` stay non-negative until the last
/// step, where they reach `-1`.
pub fn is_lukasiewicz(outdeg: &[usize]) -> bool {
    let mut s: i64 = 0;
    for (k, &d) in outdeg.iter().enumerate() {
        s += d as i64 - 1;
        if s < 0 {
            return k + 1 == outdeg.len() && s == -1;
        }
    }
    false
}

impl PlanarTree {
    pub fn from_outdeg(outdeg: Vec<usize>) -> Result<Self> {
        if !is_lukasiewicz(&outdeg) {
            return Err(Error::Invalid(format!("not a Łukasiewicz sequence: {outdeg:?}")));
        }
        let nv = outdeg.len();
        let mut child_off = Vec::with_capacity(nv + 1);
        child_off.push(0);
        for &d in &outdeg {
            child_off.push(child_off.last().unwrap() + d);
        }
        let mut children = vec![0; nv - 1];
        let mut fill = child_off.clone();
        let mut parent = vec![NO_PARENT; nv];
        let mut depth = vec![0; nv];
        // stack of vertices still waiting for children
        let mut stack: Vec<usize> = Vec::new();
        for v in 0..nv {
            if let Some(&p) = stack.last() {
                parent[v] = p;
                depth[v] = depth[p] + 1;
                children[fill[p]] = v;
                fill[p] += 1;
                if fill[p] == child_off[p + 1] {
                    stack.pop();
                }
            }
            if outdeg[v] > 0 {
                stack.push(v);
            }
        }
        Ok(Self {
            outdeg,
            parent,
            child_off,
            children,
            depth,
        })
    }

    /// The tree with one vertex and no edges.
    pub fn singleton() -> Self {
        Self::from_outdeg(vec![0]).expect("singleton is valid")
    }

    pub fn n_edges(&self) -> usize {
        self.outdeg.len() - 1
    }

    pub fn n_vertices(&self) -> usize {
        self.outdeg.len()
    }

    pub fn outdeg_seq(&self) -> &[usize] {
        &self.outdeg
    }

    pub fn outdeg(&self, v: usize) -> usize {
        self.outdeg[v]
    }

    /// Number of neighbours: outdegree plus one for non-root vertices.
    pub fn degree(&self, v: usize) -> usize {
        self.outdeg[v] + usize::from(v != 0)
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        let p = self.parent[v];
        (p != NO_PARENT).then_some(p)
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[self.child_off[v]..self.child_off[v + 1]]
    }

    pub fn depth(&self, v: usize) -> usize {
        self.depth[v]
    }

    pub fn is_white(&self, v: usize) -> bool {
        self.depth[v].is_multiple_of(2)
    }

    /// One past the last descendant of `v` (descendants are contiguous).
    pub fn subtree_end(&self, v: usize) -> usize {
        let mut need = 1i64;
        let mut u = v;
        while need > 0 {
            need += self.outdeg[u] as i64 - 1;
            u += 1;
        }
        u
    }

    /// Sizes (in vertices) of all subtrees.
    pub fn subtree_sizes(&self) -> Vec<usize> {
        let mut size = vec![1; self.n_vertices()];
        for v in (1..self.n_vertices()).rev() {
            size[self.parent[v]] += size[v];
        }
        size
    }

    pub fn max_outdeg(&self) -> usize {
        self.outdeg.iter().copied().max().unwrap_or(0)
    }

    pub fn leaf_count(&self) -> usize {
        self.outdeg.iter().filter(|&&d| d == 0).count()
    }

    /// White vertices in lexicographic order.
    pub fn white_vertices(&self) -> Vec<usize> {
        (0..self.n_vertices()).filter(|&v| self.is_white(v)).collect()
    }

    /// Black vertices in lexicographic order.
    pub fn black_vertices(&self) -> Vec<usize> {
        (0..self.n_vertices()).filter(|&v| !self.is_white(v)).collect()
    }

    pub fn height(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    /// LEB128 varint stream of the outdegrees, prefixed by the vertex count.
    pub fn to_varint_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.n_vertices() + 4);
        write_varint(&mut out, self.n_vertices() as u64);
        for &d in &self.outdeg {
            write_varint(&mut out, d as u64);
        }
        out
    }

    pub fn from_varint_bytes(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0;
        let nv = read_varint(bytes, &mut pos)? as usize;
        let mut outdeg = Vec::with_capacity(nv);
        for _ in 0..nv {
            outdeg.push(read_varint(bytes, &mut pos)? as usize);
        }
        if pos != bytes.len() {
            return Err(Error::Invalid("trailing bytes after tree".into()));
        }
        Self::from_outdeg(outdeg)
    }
}

pub(crate) fn write_varint(out: &mut Vec<u8>, mut x: u64) {
    loop {
        let byte = (x & 0x7f) as u8;
        x >>= 7;
        if x == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

pub(crate) fn read_varint(bytes: &[u8], pos: &mut usize) -> Result<u64> {
    let mut x = 0u64;
    let mut shift = 0;
    loop {
        let byte = *bytes
            .get(*pos)
            .ok_or_else(|| Error::Invalid("truncated varint".into()))?;
        *pos += 1;
        if shift >= 64 {
            return Err(Error::Invalid("varint overflow".into()));
        }
        x |= u64::from(byte & 0x7f) << shift;
        if byte & 0x80 == 0 {
            return Ok(x);
        }
        shift += 7;
    }
}

/// All planar trees with `n` edges, in lexicographic order of their
/// outdegree sequences.
pub fn enumerate_trees(n: usize) -> Result<Vec<PlanarTree>> {
    if n > ENUMERATION_CAP {
        return Err(Error::Invalid(format!(
            "enumeration is capped at n = {ENUMERATION_CAP}, got {n}"
        )));
    }
    fn rec(prefix: &mut Vec<usize>, open: usize, left: usize, out: &mut Vec<PlanarTree>) {
        // `open` vertices still to be placed, `left` edges still unassigned
        if open == 0 {
            if left == 0 {
                out.push(PlanarTree::from_outdeg(prefix.clone()).expect("valid by construction"));
            }
            return;
        }
        for d in 0..=left {
            // a leaf that closes the last open slot is only allowed at the very end
            if open - 1 + d == 0 && left - d > 0 {
                continue;
            }
            prefix.push(d);
            rec(prefix, open - 1 + d, left - d, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n + 1), 1, n, &mut out);
    Ok(out)
}

/// `Σ_v log w_{outdeg(v)}`.
pub fn tree_weight(t: &PlanarTree, w: &WeightSequence) -> f64 {
    t.outdeg.iter().map(|&d| w.log_w(d)).sum()
}

/// The law `ν_n(τ) ∝ Π_v w_{outdeg(v)}` over all trees with `n` edges.
pub fn exact_nu_distribution(n: usize, w: &WeightSequence) -> Result<Vec<(PlanarTree, f64)>> {
    let trees = enumerate_trees(n)?;
    let logs: Vec<f64> = trees.iter().map(|t| tree_weight(t, w)).collect();
    let z = log_sum_exp(&logs);
    if z == f64::NEG_INFINITY {
        return Err(Error::EmptySupport(format!(
            "no tree with {n} edges has positive weight"
        )));
    }
    Ok(trees.into_iter().zip(logs).map(|(t, l)| (t, (l - z).exp())).collect())
}

/// The unique cyclic rotation of `d` (with `Σ d = len - 1`) that is a
/// Łukasiewicz sequence: start right after the first minimum of the
/// partial sums of `d_i - 1`.
pub fn cycle_lemma_rotate(d: &[usize]) -> Result<PlanarTree> {
    if d.is_empty() || d.iter().sum::<usize>() + 1 != d.len() {
        return Err(Error::Invalid(format!(
            "cycle lemma needs n+1 entries summing to n, got {} entries summing to {}",
            d.len(),
            d.iter().sum::<usize>()
        )));
    }
    let mut s: i64 = 0;
    let mut best = i64::MAX;
    let mut cut = 0;
    for (k, &x) in d.iter().enumerate() {
        s += x as i64 - 1;
        if s < best {
            best = s;
            cut = k + 1;
        }
    }
    let cut = cut % d.len();
    let rotated: Vec<usize> = d[cut..].iter().chain(&d[..cut]).copied().collect();
    debug_assert!(is_lukasiewicz(&rotated));
    PlanarTree::from_outdeg(rotated)
}

/// Exact sampler for `n+1` slot values with law `∝ Π w_{d_i}` conditioned
/// on `Σ d_i = n`.
///
/// The slot weights are convolved with themselves in the log domain to get
/// `F_k = f^{*2^k}` (truncated at `n`). The `n+1` slots are split into
/// power-of-two blocks following the binary expansion of `n+1`; block sums
/// are drawn one by one against suffix convolutions of the remaining blocks,
/// and each block is then halved recursively with
/// `P(left = m) ∝ F_{k-1}(m) F_{k-1}(s-m)`.
#[derive(Clone, Debug)]
pub struct TreeSampler {
    n: usize,
    /// `powers[k][m] = log F_k(m)`.
    powers: Vec<Vec<f64>>,
    /// Exponents of the blocks, largest first.
    blocks: Vec<usize>,
    /// `suffix[j] = F_{blocks[j]} * ... * F_{blocks[last]}`.
    suffix: Vec<Vec<f64>>,
}

impl TreeSampler {
    pub fn new(n: usize, w: &WeightSequence) -> Result<Self> {
        Self::with_cap(n, w, sampler_cap())
    }

    pub fn with_cap(n: usize, w: &WeightSequence, cap: usize) -> Result<Self> {
        if n > cap {
            return Err(Error::CapExceeded { n, cap });
        }
        let slots = n + 1;
        let top = usize::BITS as usize - 1 - slots.leading_zeros() as usize;
        let mut powers = vec![w.log_prefix(n)];
        for k in 1..=top {
            let prev = &powers[k - 1];
            powers.push(log_convolve(prev, prev, n + 1));
        }
        let blocks: Vec<usize> = (0..=top).rev().filter(|&k| slots >> k & 1 == 1).collect();
        let mut suffix = vec![Vec::new(); blocks.len()];
        let last = blocks.len() - 1;
        suffix[last] = powers[blocks[last]].clone();
        for j in (0..last).rev() {
            suffix[j] = log_convolve(&powers[blocks[j]], &suffix[j + 1], n + 1);
        }
        if suffix[0][n] == f64::NEG_INFINITY {
            return Err(Error::EmptySupport(format!(
                "no degree sequence of length {slots} sums to {n}"
            )));
        }
        Ok(Self {
            n,
            powers,
            blocks,
            suffix,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `log Σ_{d_1+...+d_{n+1}=n} Π w_{d_i}`.
    pub fn log_partition(&self) -> f64 {
        self.suffix[0][self.n]
    }

    /// `log F_k(m)`, the total weight of `2^k` slots summing to `m`.
    pub fn log_power(&self, k: usize, m: usize) -> f64 {
        self.powers[k][m]
    }

    pub fn sample_degrees<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n + 1);
        let mut rest = self.n;
        let mut buf = Vec::new();
        for j in 0..self.blocks.len() {
            let k = self.blocks[j];
            let s = if j + 1 == self.blocks.len() {
                rest
            } else {
                let next = &self.suffix[j + 1];
                let f = &self.powers[k];
                buf.clear();
                buf.extend((0..=rest).map(|m| f[m] + next[rest - m]));
                sample_log_weights(&buf, rng)
            };
            self.split(k, s, &mut out, &mut buf, rng);
            rest -= s;
        }
        out
    }

    fn split<R: Rng + ?Sized>(&self, k: usize, s: usize, out: &mut Vec<usize>, buf: &mut Vec<f64>, rng: &mut R) {
        if k == 0 {
            out.push(s);
            return;
        }
        let f = &self.powers[k - 1];
        buf.clear();
        buf.extend((0..=s).map(|m| f[m] + f[s - m]));
        let left = sample_log_weights(buf, rng);
        self.split(k - 1, left, out, buf, rng);
        self.split(k - 1, s - left, out, buf, rng);
    }

    pub fn sample_tree<R: Rng + ?Sized>(&self, rng: &mut R) -> PlanarTree {
        cycle_lemma_rotate(&self.sample_degrees(rng)).expect("sampled sequence sums to n")
    }
}

pub fn sample_degree_sequence<R: Rng + ?Sized>(n: usize, w: &WeightSequence, rng: &mut R) -> Result<Vec<usize>> {
    Ok(TreeSampler::new(n, w)?.sample_degrees(rng))
}

pub fn sample_tree<R: Rng + ?Sized>(n: usize, w: &WeightSequence, rng: &mut R) -> Result<PlanarTree> {
    Ok(TreeSampler::new(n, w)?.sample_tree(rng))
}

/// The two-coloured tree seen from its lexicographically first black vertex
/// of maximal degree `s`. Piece `0` is the tree with the subtree of `s`
/// removed; piece `i >= 1` is the subtree of the `i`-th child of `s`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CondensateView {
    pub s_index: usize,
    pub delta_n: usize,
    /// `s_0` (the parent of `s`) followed by the children of `s`.
    pub neighbours: Vec<usize>,
    /// Edge counts of the pieces.
    pub subtree_sizes: Vec<usize>,
    /// White vertices per piece.
    pub white_counts: Vec<usize>,
    pub n_white: usize,
}

pub fn condensate_view(t: &PlanarTree) -> Result<CondensateView> {
    let s = t
        .black_vertices()
        .into_iter()
        .fold(None::<usize>, |best, v| match best {
            Some(b) if t.degree(b) >= t.degree(v) => Some(b),
            _ => Some(v),
        })
        .ok_or_else(|| Error::Invalid("tree has no black vertex".into()))?;
    let delta_n = t.degree(s);
    let whites_in = |lo: usize, hi: usize| (lo..hi).filter(|&v| t.is_white(v)).count();
    let n_white = whites_in(0, t.n_vertices());
    let mut neighbours = vec![t.parent(s).expect("black vertices are not the root")];
    neighbours.extend_from_slice(t.children(s));
    let mut subtree_sizes = vec![0; delta_n];
    let mut white_counts = vec![0; delta_n];
    let end_s = t.subtree_end(s);
    for (i, &c) in t.children(s).iter().enumerate() {
        let end = t.subtree_end(c);
        subtree_sizes[i + 1] = end - c - 1;
        white_counts[i + 1] = whites_in(c, end);
    }
    subtree_sizes[0] = t.n_vertices() - (end_s - s) - 1;
    white_counts[0] = n_white - white_counts[1..].iter().sum::<usize>();
    Ok(CondensateView {
        s_index: s,
        delta_n,
        neighbours,
        subtree_sizes,
        white_counts,
        n_white,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replicate_rng;
    use num_bigint::BigUint;
    use num_traits::{One, ToPrimitive, Zero};
    use proptest::prelude::*;

    fn catalan(n: u64) -> u64 {
        (0..n).fold(1u64, |c, k| c * 2 * (2 * k + 1) / (k + 2))
    }

    #[test]
    fn enumeration_counts_and_order() {
        for n in 0..=9 {
            let ts = enumerate_trees(n).unwrap();
            assert_eq!(ts.len() as u64, catalan(n as u64), "n = {n}");
            for pair in ts.windows(2) {
                assert!(pair[0].outdeg_seq() < pair[1].outdeg_seq());
            }
        }
        let two = enumerate_trees(2).unwrap();
        assert_eq!(two[0].outdeg_seq(), &[1, 1, 0]);
        assert_eq!(two[1].outdeg_seq(), &[2, 0, 0]);
        assert!(enumerate_trees(11).is_err());
    }

    #[test]
    fn structure_arrays() {
        let t = PlanarTree::from_outdeg(vec![2, 1, 0, 0]).unwrap();
        assert_eq!(t.children(0), &[1, 3]);
        assert_eq!(t.children(1), &[2]);
        assert_eq!(t.parent(2), Some(1));
        assert_eq!(t.depth(2), 2);
        assert_eq!(t.subtree_end(1), 3);
        assert_eq!(t.subtree_sizes(), vec![4, 2, 1, 1]);
        assert!(PlanarTree::from_outdeg(vec![1, 0, 0]).is_err());
        assert!(PlanarTree::from_outdeg(vec![0, 1, 0]).is_err());
    }

    #[test]
    fn tree_weights() {
        let w = WeightSequence::power_law(3.0, 1.0).unwrap();
        let path = PlanarTree::from_outdeg(vec![1, 1, 0]).unwrap();
        let cherry = PlanarTree::from_outdeg(vec![2, 0, 0]).unwrap();
        assert_eq!(tree_weight(&path, &w), 0.0);
        assert!((tree_weight(&cherry, &w) - (1.0f64 / 8.0).ln()).abs() < 1e-15);
        let w0 = WeightSequence::explicit_linear(&[1.0, 1.0, 0.0]).unwrap();
        assert_eq!(tree_weight(&cherry, &w0), f64::NEG_INFINITY);
    }

    #[test]
    fn exact_nu_small_cases() {
        let w = WeightSequence::power_law(3.0, 1.0).unwrap();
        let d = exact_nu_distribution(2, &w).unwrap();
        assert!((d[0].1 - 8.0 / 9.0).abs() < 1e-15);
        assert!((d[1].1 - 1.0 / 9.0).abs() < 1e-15);
        let w1 = WeightSequence::explicit_linear(&[1.0, 0.0, 1.0]).unwrap();
        let d = exact_nu_distribution(2, &w1).unwrap();
        assert_eq!(d[1].1, 1.0);
        assert_eq!(exact_nu_distribution(1, &w).unwrap()[0].1, 1.0);
        for n in 0..=8 {
            let total: f64 = exact_nu_distribution(n, &w).unwrap().iter().map(|x| x.1).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        let dead = WeightSequence::explicit_linear(&[1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(exact_nu_distribution(2, &dead), Err(Error::EmptySupport(_))));
    }

    fn valid_rotations(d: &[usize]) -> Vec<usize> {
        (0..d.len())
            .filter(|&c| {
                let r: Vec<usize> = d[c..].iter().chain(&d[..c]).copied().collect();
                is_lukasiewicz(&r)
            })
            .collect()
    }

    /// All sequences of `len` entries summing to `len - 1`.
    fn compositions(len: usize) -> Vec<Vec<usize>> {
        fn rec(cur: &mut Vec<usize>, len: usize, left: usize, out: &mut Vec<Vec<usize>>) {
            if cur.len() + 1 == len {
                cur.push(left);
                out.push(cur.clone());
                cur.pop();
                return;
            }
            for x in 0..=left {
                cur.push(x);
                rec(cur, len, left - x, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(&mut Vec::new(), len, len - 1, &mut out);
        out
    }

    #[test]
    fn cycle_lemma_against_brute_force() {
        assert_eq!(cycle_lemma_rotate(&[0, 2, 0]).unwrap().outdeg_seq(), &[2, 0, 0]);
        for len in 1..=6 {
            for d in compositions(len) {
                let rots = valid_rotations(&d);
                assert_eq!(rots.len(), 1, "{d:?}");
                let t = cycle_lemma_rotate(&d).unwrap();
                let c = rots[0];
                let expect: Vec<usize> = d[c..].iter().chain(&d[..c]).copied().collect();
                assert_eq!(t.outdeg_seq(), expect.as_slice());
            }
        }
        // malformed input: four entries summing to two
        assert!(cycle_lemma_rotate(&[1, 0, 1, 0]).is_err());
    }

    /// Exact `F_k(m)` for weights `w_i = (L/i)^3`, `w_0 = L^3`, by integer DP.
    fn exact_powers(n: usize, top: usize) -> (Vec<Vec<BigUint>>, f64) {
        let l = (1..=n as u64).fold(BigUint::one(), |acc, i| {
            let g = num_integer_gcd(&acc, i);
            acc * (i / g)
        });
        let f: Vec<BigUint> = (0..=n)
            .map(|i| {
                let base = if i == 0 {
                    l.clone()
                } else {
                    &l / BigUint::from(i as u64)
                };
                base.pow(3)
            })
            .collect();
        let mut pw = vec![f];
        for k in 1..=top {
            let p = &pw[k - 1];
            let mut c = vec![BigUint::zero(); n + 1];
            for i in 0..=n {
                for j in 0..=n - i {
                    c[i + j] += &p[i] * &p[j];
                }
            }
            pw.push(c);
        }
        (pw, 3.0 * big_ln(&l))
    }

    fn num_integer_gcd(a: &BigUint, b: u64) -> u64 {
        let r = (a % BigUint::from(b)).to_u64().unwrap();
        let (mut x, mut y) = (b, r);
        while y != 0 {
            (x, y) = (y, x % y);
        }
        x
    }

    fn big_ln(x: &BigUint) -> f64 {
        let bits = x.bits();
        let shift = bits.saturating_sub(60);
        let top = (x >> shift).to_f64().unwrap();
        top.ln() + shift as f64 * std::f64::consts::LN_2
    }

    #[test]
    fn convolution_powers_match_exact_integers() {
        let n = 64;
        let w = WeightSequence::power_law(3.0, 1.0).unwrap();
        let s = TreeSampler::with_cap(n, &w, 100).unwrap();
        let (exact, ln_scale) = exact_powers(n, 6);
        for k in 0..=6 {
            let slots = 1u64 << k;
            for m in 0..=n {
                let e = big_ln(&exact[k][m]) - slots as f64 * ln_scale;
                let got = s.log_power(k, m);
                // relative error of F_k(m) below 1e-9
                assert!((got - e).abs() < 1e-9, "k={k} m={m}: {got} vs {e}");
            }
        }
    }

    #[test]
    fn degree_sampler_equal_weights() {
        let w = WeightSequence::explicit_linear(&[1.0, 1.0]).unwrap();
        let s = TreeSampler::new(3, &w).unwrap();
        let mut rng = replicate_rng(1, 0);
        let mut counts = std::collections::HashMap::new();
        for _ in 0..40_000 {
            let d = s.sample_degrees(&mut rng);
            let mut sorted = d.clone();
            sorted.sort();
            assert_eq!(sorted, vec![0, 1, 1, 1]);
            *counts.entry(d).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 4);
        for &c in counts.values() {
            assert!((c as f64 - 10_000.0).abs() < 500.0);
        }
    }

    #[test]
    fn sampler_rejects_large_n_and_empty_support() {
        let w = WeightSequence::power_law(3.0, 1.0).unwrap();
        assert!(matches!(
            TreeSampler::with_cap(101, &w, 100),
            Err(Error::CapExceeded { .. })
        ));
        let dead = WeightSequence::explicit_linear(&[1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(TreeSampler::new(3, &dead), Err(Error::EmptySupport(_))));
        let mut rng = replicate_rng(0, 0);
        assert_eq!(sample_tree(1, &w, &mut rng).unwrap().outdeg_seq(), &[1, 0]);
        assert_eq!(sample_tree(0, &w, &mut rng).unwrap().outdeg_seq(), &[0]);
    }

    #[test]
    fn sampling_is_reproducible() {
        let w = WeightSequence::power_law(2.5, 1.0).unwrap();
        let s = TreeSampler::new(300, &w).unwrap();
        let a = s.sample_tree(&mut replicate_rng(11, 5));
        let b = s.sample_tree(&mut replicate_rng(11, 5));
        assert_eq!(a.to_varint_bytes(), b.to_varint_bytes());
    }

    #[test]
    fn condensate_hand_cases() {
        // white root - black - white leaf
        let path = PlanarTree::from_outdeg(vec![1, 1, 0]).unwrap();
        let v = condensate_view(&path).unwrap();
        assert_eq!(v.s_index, 1);
        assert_eq!(v.delta_n, 2);
        assert_eq!(v.subtree_sizes, vec![0, 0]);
        assert_eq!(v.white_counts, vec![1, 1]);
        // one black vertex of degree 4
        let star = PlanarTree::from_outdeg(vec![1, 3, 0, 0, 0]).unwrap();
        let v = condensate_view(&star).unwrap();
        assert_eq!(v.delta_n, 4);
        assert!(v.subtree_sizes.iter().all(|&x| x == 0));
        assert!(condensate_view(&PlanarTree::singleton()).is_err());
    }

    #[test]
    fn condensate_ties_pick_first_black_vertex() {
        // two black vertices of degree 2 under the root
        let t = PlanarTree::from_outdeg(vec![2, 1, 0, 1, 0]).unwrap();
        assert_eq!(condensate_view(&t).unwrap().s_index, 1);
    }

    #[test]
    fn serialisation_round_trips() {
        let t = PlanarTree::from_outdeg(vec![3, 0, 1, 0, 0]).unwrap();
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(json, r#"{"n":4,"outdeg":[3,0,1,0,0]}"#);
        assert_eq!(serde_json::from_str::<PlanarTree>(&json).unwrap(), t);
        assert!(serde_json::from_str::<PlanarTree>(r#"{"n":3,"outdeg":[3,0,1,0,0]}"#).is_err());
        let mut big = vec![300];
        big.extend(std::iter::repeat_n(0, 300));
        let t = PlanarTree::from_outdeg(big).unwrap();
        assert_eq!(PlanarTree::from_varint_bytes(&t.to_varint_bytes()).unwrap(), t);
    }

    proptest! {
        #[test]
        fn sampled_trees_are_valid(seed in any::<u64>(), n in 0usize..200) {
            let w = WeightSequence::power_law(3.0, 1.0).unwrap();
            let s = TreeSampler::new(n, &w).unwrap();
            let t = s.sample_tree(&mut replicate_rng(seed, 0));
            prop_assert!(is_lukasiewicz(t.outdeg_seq()));
            prop_assert_eq!(t.n_edges(), n);
        }

        #[test]
        fn condensate_pieces_partition_edges(seed in any::<u64>(), n in 1usize..150) {
            let w = WeightSequence::factorial(0.5).unwrap();
            let t = TreeSampler::new(n, &w).unwrap().sample_tree(&mut replicate_rng(seed, 1));
            if let Ok(v) = condensate_view(&t) {
                prop_assert_eq!(v.delta_n + v.subtree_sizes.iter().sum::<usize>(), n);
                prop_assert_eq!(v.white_counts.iter().sum::<usize>(), v.n_white);
            }
        }
    }
}
