//! Mobile labels: counting, exact uniform sampling, a conditioned random
//! walk oracle, and the label / star / distance processes.

use std::io::Write;
use std::path::Path;

use num_bigint::BigUint;
use num_traits::One;
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bijections::{white_ranks, Mobile};
use crate::error::{Error, Result};
use crate::planarmap::PlanarMap;
use crate::trees::{CondensateView, PlanarTree};

/// Format version written into trace headers.
pub const TRACE_SCHEMA_VERSION: u32 = 1;

fn binomial_big(n: u64, k: u64) -> BigUint {
    let mut acc = BigUint::one();
    for j in 0..k {
        acc = acc * BigUint::from(n - j) / BigUint::from(j + 1);
    }
    acc
}

/// Number of valid labellings: `Π_black C(2 deg - 1, deg - 1)`.
pub fn count_labelings(t: &PlanarTree) -> BigUint {
    t.black_vertices()
        .into_iter()
        .map(|b| {
            let d = t.degree(b) as u64;
            binomial_big(2 * d - 1, d - 1)
        })
        .product()
}

/// All compositions of `total` into `parts` non-negative parts.
fn compositions(parts: usize, total: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, parts: usize, left: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() + 1 == parts {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for x in 0..=left {
            cur.push(x);
            rec(cur, parts, left - x, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(parts), parts, total, &mut out);
    out
}

/// Write labels of the children of black vertex `b` from composition parts
/// `y` (increments `y_j - 1`), starting at the label of its parent.
fn apply_increments(t: &PlanarTree, b: usize, y: &[usize], vertex_label: &mut [i64]) {
    let mut cur = vertex_label[t.parent(b).unwrap()];
    for (&c, &yj) in t.children(b).iter().zip(y) {
        cur += yj as i64 - 1;
        vertex_label[c] = cur;
    }
}

fn to_white_order(t: &PlanarTree, vertex_label: &[i64]) -> Vec<i64> {
    (0..t.n_vertices())
        .filter(|&v| t.is_white(v))
        .map(|v| vertex_label[v])
        .collect()
}

/// Every valid labelling (root label 0), as label vectors over white
/// vertices in lexicographic order. Exponential; meant for small trees.
pub fn enumerate_labelings(t: &PlanarTree) -> Vec<Vec<i64>> {
    let blacks = t.black_vertices();
    let choices: Vec<Vec<Vec<usize>>> = blacks.iter().map(|&b| compositions(t.degree(b), t.degree(b))).collect();
    let mut out = Vec::new();
    let mut vertex_label = vec![0i64; t.n_vertices()];
    // blacks are in depth-first order, so parents are labelled first
    fn rec(
        t: &PlanarTree,
        k: usize,
        blacks: &[usize],
        choices: &[Vec<Vec<usize>>],
        vl: &mut Vec<i64>,
        out: &mut Vec<Vec<i64>>,
    ) {
        if k == blacks.len() {
            out.push(to_white_order(t, vl));
            return;
        }
        for y in &choices[k] {
            apply_increments(t, blacks[k], y, vl);
            rec(t, k + 1, blacks, choices, vl, out);
        }
    }
    rec(t, 0, &blacks, &choices, &mut vertex_label, &mut out);
    out
}

/// Uniform composition of `d` into `d` non-negative parts: choose `d - 1`
/// bar positions among `2d - 1` slots.
fn uniform_composition<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<usize> {
    if d == 1 {
        return vec![1];
    }
    let mut bars = sample_indices(rng, 2 * d - 1, d - 1).into_vec();
    bars.sort_unstable();
    let mut y = Vec::with_capacity(d);
    let mut prev = 0usize;
    for &b in &bars {
        y.push(b - prev);
        prev = b + 1;
    }
    y.push(2 * d - 1 - prev);
    y
}

/// Uniform random valid labelling.
pub fn sample_labels<R: Rng + ?Sized>(t: &PlanarTree, rng: &mut R) -> Vec<i64> {
    let mut vl = vec![0i64; t.n_vertices()];
    for b in t.black_vertices() {
        let y = uniform_composition(t.degree(b), rng);
        apply_increments(t, b, &y, &mut vl);
    }
    to_white_order(t, &vl)
}

/// Raw jump `ξ` with `P(ξ = i) = 2^{-i-2}`, `i >= -1`.
pub fn sample_jump<R: Rng + ?Sized>(rng: &mut R) -> i64 {
    loop {
        let u: u64 = rng.gen();
        if u != 0 {
            return u.trailing_zeros() as i64 - 1;
        }
    }
}

/// Largest block size handled by literal rejection.
const REJECTION_MAX_DEGREE: usize = 12;

/// `d` jumps `ξ_1, ..., ξ_d` conditioned on summing to zero, returned as
/// `y_j = ξ_j + 1`.
fn conditioned_jumps<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<usize> {
    if d <= REJECTION_MAX_DEGREE {
        loop {
            let xs: Vec<i64> = (0..d).map(|_| sample_jump(rng)).collect();
            if xs.iter().sum::<i64>() == 0 {
                return xs.into_iter().map(|x| (x + 1) as usize).collect();
            }
        }
    }
    // Given the remaining sum R over m slots, the first slot has
    // P(y) ∝ C(R - y + m - 2, m - 2): geometric sums conditioned on their
    // total are uniform compositions.
    let mut y = Vec::with_capacity(d);
    let mut rest = d;
    for m in (2..=d).rev() {
        let (r, mf) = (rest as f64, m as f64);
        let mut p = (mf - 1.0) / (r + mf - 1.0);
        let mut u: f64 = rng.gen();
        let mut k = 0usize;
        while u >= p && k < rest {
            u -= p;
            k += 1;
            let kf = k as f64;
            p *= (r - kf + 1.0) / (r - kf + mf - 1.0);
        }
        y.push(k);
        rest -= k;
    }
    y.push(rest);
    y
}

/// Labels from the geometric random walk conditioned to return to its
/// start around each black vertex. Same law as [`sample_labels`].
pub fn conditioned_walk_labels<R: Rng + ?Sized>(t: &PlanarTree, rng: &mut R) -> Vec<i64> {
    let mut vl = vec![0i64; t.n_vertices()];
    for b in t.black_vertices() {
        let y = conditioned_jumps(t.degree(b), rng);
        apply_increments(t, b, &y, &mut vl);
    }
    to_white_order(t, &vl)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    L,
    Lstar,
    D,
    Profile,
}

/// An integer-valued process on `0..=index_scale`, linearly interpolated
/// between integer times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessTrace {
    pub kind: ProcessKind,
    pub values: Vec<i64>,
    pub index_scale: usize,
    pub amplitude_scale: f64,
    /// Shift applied to a distance process (first minimum of the labels).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<usize>,
}

#[derive(Serialize)]
struct TraceHeader<'a> {
    schema_version: u32,
    kind: ProcessKind,
    index_scale: usize,
    amplitude_scale: f64,
    len: usize,
    shift: &'a Option<usize>,
}

/// `√(2(1-κ)n)`.
pub fn amplitude(n: usize, kappa: f64) -> f64 {
    (2.0 * (1.0 - kappa) * n as f64).sqrt()
}

impl ProcessTrace {
    /// Value at real time `x ∈ [0, index_scale]` by linear interpolation.
    pub fn at(&self, x: f64) -> f64 {
        let last = self.values.len() - 1;
        let x = x.clamp(0.0, last as f64);
        let i = (x.floor() as usize).min(last);
        if i == last {
            return self.values[last] as f64;
        }
        let f = x - i as f64;
        self.values[i] as f64 * (1.0 - f) + self.values[i + 1] as f64 * f
    }

    /// `value(t · index_scale) / amplitude_scale` for `t ∈ [0, 1]`.
    pub fn rescaled(&self, t: f64) -> f64 {
        self.at(t * self.index_scale as f64) / self.amplitude_scale
    }

    pub fn max(&self) -> i64 {
        self.values.iter().copied().max().unwrap_or(0)
    }

    pub fn min(&self) -> i64 {
        self.values.iter().copied().min().unwrap_or(0)
    }

    pub fn header_json(&self) -> String {
        serde_json::to_string(&TraceHeader {
            schema_version: TRACE_SCHEMA_VERSION,
            kind: self.kind,
            index_scale: self.index_scale,
            amplitude_scale: self.amplitude_scale,
            len: self.values.len(),
            shift: &self.shift,
        })
        .expect("header serialises")
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(12 * self.values.len() + 16);
        s.push_str("index,value\n");
        for (i, v) in self.values.iter().enumerate() {
            s.push_str(&format!("{i},{v}\n"));
        }
        s
    }

    /// Write `<stem>.csv` and `<stem>.json` (header).
    pub fn write(&self, stem: &Path) -> Result<()> {
        let csv = stem.with_extension("csv");
        let json = stem.with_extension("json");
        let mut f = std::fs::File::create(&csv).map_err(|e| Error::io(&csv, e))?;
        f.write_all(self.to_csv().as_bytes()).map_err(|e| Error::io(&csv, e))?;
        std::fs::write(&json, self.header_json()).map_err(|e| Error::io(&json, e))?;
        Ok(())
    }
}

/// `L(i) = ℓ(v_i)` over white vertices in lexicographic order, closed by
/// `L(N°) = ℓ(v_0) = 0`.
pub fn label_process(m: &Mobile, kappa: f64) -> ProcessTrace {
    let mut values = m.labels().to_vec();
    values.push(values[0]);
    ProcessTrace {
        kind: ProcessKind::L,
        index_scale: m.n_white(),
        amplitude_scale: amplitude(m.tree().n_edges(), kappa),
        values,
        shift: None,
    }
}

/// `L*(i) = ℓ(s_i)` around the condensate vertex, closed by `s_Δ = s_0`.
pub fn star_label_process(m: &Mobile, cv: &CondensateView, kappa: f64) -> ProcessTrace {
    let mut values: Vec<i64> = cv.neighbours.iter().map(|&v| m.label(v)).collect();
    values.push(values[0]);
    ProcessTrace {
        kind: ProcessKind::Lstar,
        index_scale: cv.delta_n,
        amplitude_scale: amplitude(m.tree().n_edges(), kappa),
        values,
        shift: None,
    }
}

/// `D = L - min L + 1`, rotated to start at the first minimum of the labels.
pub fn distance_process(m: &Mobile, kappa: f64) -> ProcessTrace {
    let labels = m.labels();
    let nw = labels.len();
    let min = *labels.iter().min().unwrap();
    let ix = labels.iter().position(|&l| l == min).unwrap();
    let mut values: Vec<i64> = (0..nw).map(|i| labels[(i + ix) % nw] - min + 1).collect();
    values.push(values[0]);
    ProcessTrace {
        kind: ProcessKind::D,
        index_scale: nw,
        amplitude_scale: amplitude(m.tree().n_edges(), kappa),
        values,
        shift: Some(ix),
    }
}

/// Unshifted `D(i) = ℓ(v_i) - min ℓ + 1`, `i = 0..=N°`.
pub fn unshifted_distances(m: &Mobile) -> Vec<i64> {
    let min = *m.labels().iter().min().unwrap();
    let mut v: Vec<i64> = m.labels().iter().map(|l| l - min + 1).collect();
    v.push(v[0]);
    v
}

/// Number of map vertices at each distance from `ρ`.
pub fn distance_profile(map: &PlanarMap, n: usize, kappa: f64) -> ProcessTrace {
    let d = map.bfs_distances(map.rho());
    let r = d.iter().copied().max().unwrap_or(0);
    let mut values = vec![0i64; r + 1];
    for x in d {
        values[x] += 1;
    }
    ProcessTrace {
        kind: ProcessKind::Profile,
        index_scale: r,
        amplitude_scale: amplitude(n, kappa),
        values,
        shift: None,
    }
}

/// `max |ℓ|` over white vertices.
pub fn max_abs_label(m: &Mobile) -> i64 {
    m.labels().iter().map(|l| l.abs()).max().unwrap_or(0)
}

/// Label of every tree vertex (black vertices get `i64::MIN`).
pub fn vertex_labels(m: &Mobile) -> Vec<i64> {
    let ranks = white_ranks(m.tree());
    (0..m.tree().n_vertices())
        .map(|v| {
            if m.tree().is_white(v) {
                m.labels()[ranks[v]]
            } else {
                i64::MIN
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bijections::check_label_rule;
    use crate::rng::replicate_rng;
    use crate::stats::{chi_square_gof, chi_square_two_sample};
    use crate::trees::{condensate_view, enumerate_trees};
    use num_traits::ToPrimitive;
    use std::collections::HashMap;

    fn star(d: usize) -> PlanarTree {
        let mut o = vec![1, d - 1];
        o.extend(std::iter::repeat_n(0, d - 1));
        PlanarTree::from_outdeg(o).unwrap()
    }

    #[test]
    fn counts() {
        assert_eq!(count_labelings(&star(2)), BigUint::from(3u32));
        assert_eq!(count_labelings(&star(3)), BigUint::from(10u32));
        for n in 1..=4 {
            for t in enumerate_trees(n).unwrap() {
                let all = enumerate_labelings(&t);
                assert_eq!(BigUint::from(all.len()), count_labelings(&t));
                let ranks = white_ranks(&t);
                for l in &all {
                    assert!(check_label_rule(&t, |v| l[ranks[v]]).is_ok());
                }
                let distinct: std::collections::HashSet<_> = all.iter().collect();
                assert_eq!(distinct.len(), all.len());
            }
        }
    }

    #[test]
    fn degree_one_and_two() {
        let mut rng = replicate_rng(3, 0);
        assert_eq!(sample_labels(&star(1), &mut rng), vec![0]);
        let mut freq = HashMap::new();
        let draws = 100_000;
        for _ in 0..draws {
            *freq.entry(sample_labels(&star(2), &mut rng)[1]).or_insert(0usize) += 1;
        }
        for l in [-1, 0, 1] {
            let f = freq[&l] as f64 / draws as f64;
            assert!((f - 1.0 / 3.0).abs() < 0.01, "{l}: {f}");
        }
        assert_eq!(freq.len(), 3);
    }

    #[test]
    fn uniform_over_all_labelings() {
        let t = PlanarTree::from_outdeg(vec![1, 2, 1, 1, 0, 0]).unwrap();
        let all = enumerate_labelings(&t);
        let index: HashMap<Vec<i64>, usize> = all.iter().cloned().enumerate().map(|(i, l)| (l, i)).collect();
        let mut rng = replicate_rng(4, 0);
        let mut counts = vec![0u64; all.len()];
        for _ in 0..100_000 {
            counts[index[&sample_labels(&t, &mut rng)]] += 1;
        }
        let p = vec![1.0 / all.len() as f64; all.len()];
        let (_, pv) = chi_square_gof(&counts, &p);
        assert!(pv > 0.001, "p = {pv}");
    }

    #[test]
    fn walk_oracle_agrees_with_compositions() {
        let t = PlanarTree::from_outdeg(vec![1, 3, 0, 1, 0, 0]).unwrap();
        let mut rng = replicate_rng(5, 0);
        let mut a: HashMap<Vec<i64>, u64> = HashMap::new();
        let mut b: HashMap<Vec<i64>, u64> = HashMap::new();
        for _ in 0..100_000 {
            *a.entry(sample_labels(&t, &mut rng)).or_default() += 1;
            *b.entry(conditioned_walk_labels(&t, &mut rng)).or_default() += 1;
        }
        let keys: Vec<_> = a
            .keys()
            .chain(b.keys())
            .cloned()
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let ca: Vec<u64> = keys.iter().map(|k| *a.get(k).unwrap_or(&0)).collect();
        let cb: Vec<u64> = keys.iter().map(|k| *b.get(k).unwrap_or(&0)).collect();
        let (_, pv) = chi_square_two_sample(&ca, &cb);
        assert!(pv > 0.001, "p = {pv}");
        assert_eq!(keys.len(), count_labelings(&t).to_usize().unwrap());
    }

    #[test]
    fn large_blocks_use_sequential_path() {
        let mut rng = replicate_rng(6, 0);
        for d in [13usize, 50, 400] {
            for _ in 0..200 {
                let y = conditioned_jumps(d, &mut rng);
                assert_eq!(y.len(), d);
                assert_eq!(y.iter().sum::<usize>(), d);
            }
        }
        // the first part of a uniform composition of d into d parts has
        // mean 1 and P(y = 0) = (d - 1)/(2d - 1)
        let d = 40;
        let draws = 50_000;
        let zeros = (0..draws).filter(|_| conditioned_jumps(d, &mut rng)[0] == 0).count();
        let p = (d - 1) as f64 / (2 * d - 1) as f64;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        assert!((zeros as f64 / draws as f64 - p).abs() < 5.0 * se);
    }

    #[test]
    fn jump_moments() {
        let mut rng = replicate_rng(7, 0);
        let n = 400_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_jump(&mut rng) as f64).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 0.01, "{mean}");
        assert!((var - 2.0).abs() < 0.05, "{var}");
        assert!(xs.iter().all(|&x| x >= -1.0));
    }

    #[test]
    fn processes_on_the_path_mobile() {
        let m = Mobile::new(PlanarTree::from_outdeg(vec![1, 1, 0]).unwrap(), vec![0, -1], 1).unwrap();
        assert_eq!(label_process(&m, 0.0).values, vec![0, -1, 0]);
        assert_eq!(unshifted_distances(&m), vec![2, 1, 2]);
        let d = distance_process(&m, 0.0);
        assert_eq!(d.shift, Some(1));
        assert_eq!(d.values, vec![1, 2, 1]);
        let cv = condensate_view(m.tree()).unwrap();
        let s = star_label_process(&m, &cv, 0.0);
        assert_eq!(s.values, vec![0, -1, 0]);
        assert_eq!(s.index_scale, 2);
    }

    #[test]
    fn trace_interpolation_and_export() {
        let tr = ProcessTrace {
            kind: ProcessKind::L,
            values: vec![0, 2, -2, 0],
            index_scale: 3,
            amplitude_scale: 2.0,
            shift: None,
        };
        assert_eq!(tr.at(0.5), 1.0);
        assert_eq!(tr.at(1.75), -1.0);
        assert_eq!(tr.rescaled(1.0), 0.0);
        assert!(tr.to_csv().starts_with("index,value\n0,0\n1,2\n"));
        assert!(tr.header_json().contains("\"schema_version\":1"));
        let dir = tempfile::tempdir().unwrap();
        tr.write(&dir.path().join("trace")).unwrap();
        assert!(dir.path().join("trace.csv").exists());
    }
}
