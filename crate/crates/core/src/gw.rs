//! Galton–Watson views of a weight sequence.
//!
//! For weights `w` and `t > 0` with `g(t) < ∞`, `p_i = w_i t^i / g(t)` is an
//! offspring law; at the tilt root `t = Z` (smallest positive solution of
//! `g(z) = z`) this is `p̂_i = w_i Z^{i-1}`. Conditioned on `n` edges every
//! such tree has law `ν_n`. The module also covers the two-type picture
//! (white vertices geometric, black vertices `(ξ - 1 | ξ > 0)`), the law of
//! `ξ⁽⁰⁾` whose progeny counts leaves, and the twig decomposition behind
//! that equivalence.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bijections::gn_inverse;
use crate::error::{Error, Result};
use crate::numeric::zeta;
use crate::rng::replicate_rng;
use crate::trees::{enumerate_trees, exact_nu_distribution, PlanarTree};
use crate::weights::{Family, WeightSequence};

/// Default tail mass below which the `ξ⁽⁰⁾` law is truncated.
pub const XI0_TAIL_TOL: f64 = 1e-10;
/// Hard cap on the length of the truncated `ξ⁽⁰⁾` law (the recursion is
/// quadratic in the length).
pub const XI0_MAX_LEN: usize = 20_000;
/// Offspring tables stop once the remaining mass is below this; the
/// remainder is dropped unless an exact tail sampler exists.
const NEGLIGIBLE_TAIL: f64 = 1e-15;
const TABLE_MAX: usize = 1 << 16;

/// Smallest positive root of `g(z) = z`, to machine precision.
///
/// `h(z) = g(z) - z` is convex with `h(0) = w_0 > 0`. The minimiser of `h`
/// on `(0, R]` is located by bisection on `g' - 1`; a root exists iff the
/// minimum is `<= 0`, and a minimum within `1e-12 z` of zero is reported as
/// a double root.
pub fn solve_z(w: &WeightSequence) -> Result<f64> {
    let (r, _) = w.radius();
    if r <= 0.0 {
        return Err(Error::NotAdmissible("g diverges on (0, ∞)".into()));
    }
    let h = |z: f64| w.series(z).g - z;
    let dh = |z: f64| w.series(z).dg - 1.0;
    if dh(0.0) >= 0.0 {
        return Err(Error::NotAdmissible("g(z) > z for all z > 0".into()));
    }
    let mut hi = if r.is_finite() { r } else { 1.0 };
    if !r.is_finite() {
        while dh(hi) < 0.0 {
            hi *= 2.0;
            if hi > 1e300 {
                return Err(Error::NotAdmissible("could not bracket the minimum of g(z) - z".into()));
            }
        }
    }
    let zmin = if dh(hi) <= 0.0 {
        hi
    } else {
        let mut lo = 0.0;
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if dh(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let hmin = h(zmin);
    let tol = 1e-12 * zmin;
    if !(hmin <= tol) {
        return Err(Error::NotAdmissible(format!(
            "min of g(z) - z on (0, R] is {hmin:e} > 0 at z = {zmin}"
        )));
    }
    if hmin >= -tol {
        return Ok(zmin);
    }
    let (mut lo, mut hi) = (0.0, zmin);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// The offspring law `p_i = w_i t^i / g(t)`.
#[derive(Clone, Debug)]
pub struct GwSpec {
    weights: WeightSequence,
    t: f64,
    log_norm: f64,
    mean: f64,
    variance: f64,
    z: Option<f64>,
}

/// Serialisable summary of a [`GwSpec`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GwSummary {
    pub family: String,
    pub t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    pub p0: f64,
    pub mean: f64,
    pub variance: f64,
    pub critical: bool,
}

impl GwSpec {
    pub fn boltzmann(weights: &WeightSequence, t: f64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("t must be positive, got {t}")));
        }
        let s = weights.series(t);
        if !s.g.is_finite() || !s.dg.is_finite() {
            return Err(Error::Domain(format!("g or g' diverges at t = {t}")));
        }
        let mean = t * s.dg / s.g;
        let variance = t * t * s.d2g / s.g + mean - mean * mean;
        Ok(Self {
            weights: weights.clone(),
            t,
            log_norm: s.g.ln(),
            mean,
            variance,
            z: None,
        })
    }

    /// The law `w_i / g(1)`.
    pub fn offspring_of(weights: &WeightSequence) -> Result<Self> {
        Self::boltzmann(weights, 1.0)
    }

    /// `p̂_i = w_i Z^{i-1}`; fails unless `g(Z) = Z` to `1e-12`.
    pub fn tilt(weights: &WeightSequence, z: f64) -> Result<Self> {
        let s = weights.series(z);
        if !((s.g / z - 1.0).abs() < 1e-12) {
            return Err(Error::NotAdmissible(format!("Σ p̂ = g(Z)/Z = {} at Z = {z}", s.g / z)));
        }
        let mut spec = Self::boltzmann(weights, z)?;
        spec.log_norm = z.ln();
        spec.mean = s.dg;
        spec.variance = z * s.d2g + s.dg * (1.0 - s.dg);
        spec.z = Some(z);
        Ok(spec)
    }

    pub fn weights(&self) -> &WeightSequence {
        &self.weights
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn z(&self) -> Option<f64> {
        self.z
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn prob(&self, i: usize) -> f64 {
        (self.weights.log_w(i) + i as f64 * self.t.ln() - self.log_norm).exp()
    }

    pub fn p0(&self) -> f64 {
        self.prob(0)
    }

    pub fn probs(&self, len: usize) -> Vec<f64> {
        (0..len).map(|i| self.prob(i)).collect()
    }

    pub fn is_critical(&self, tol: f64) -> bool {
        (self.mean - 1.0).abs() <= tol
    }

    pub fn is_subcritical(&self) -> bool {
        self.mean < 1.0
    }

    pub fn summary(&self) -> GwSummary {
        GwSummary {
            family: self.weights.spec_string(),
            t: self.t,
            z: self.z,
            p0: self.p0(),
            mean: self.mean,
            variance: self.variance,
            critical: self.is_critical(1e-10),
        }
    }

    /// `(w, t)` for which tails can be sampled exactly: `c i^{-β}` at `t = 1`.
    fn power_tail(&self) -> Option<(f64, f64)> {
        match self.weights.family() {
            Family::PowerLaw { beta, c } if self.t == 1.0 => Some((*beta, *c)),
            _ => None,
        }
    }
}

/// White law `((1 - p̂_0)^k p̂_0)` and black law `(p̂_{i+1} / (1 - p̂_0))`,
/// each truncated to `len` entries.
pub fn two_type_offspring(spec: &GwSpec, len: usize) -> (Vec<f64>, Vec<f64>) {
    let p0 = spec.p0();
    let white = (0..len).map(|k| (1.0 - p0).powi(k as i32) * p0).collect();
    let black = (0..len).map(|i| spec.prob(i + 1) / (1.0 - p0)).collect();
    (white, black)
}

fn normalise(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    for x in v {
        *x /= s;
    }
}

fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// TV distance, over trees with `n` edges, between `G_n⁻¹` of the single-type
/// tree conditioned on size and the conditioned two-type product law.
pub fn two_type_tv(spec: &GwSpec, n: usize) -> Result<f64> {
    let trees = enumerate_trees(n)?;
    let p = spec.probs(n + 1);
    let (white, black) = two_type_offspring(spec, n + 1);
    let mut a: Vec<f64> = trees
        .iter()
        .map(|t| t.outdeg_seq().iter().map(|&k| p[k]).product())
        .collect();
    let mut b: Vec<f64> = trees
        .iter()
        .map(|t| {
            let tau = gn_inverse(t);
            (0..tau.n_vertices())
                .map(|v| {
                    let k = tau.outdeg(v);
                    if tau.is_white(v) {
                        white[k]
                    } else {
                        black[k]
                    }
                })
                .product()
        })
        .collect();
    // `a` is indexed by τ', `b` by τ = G_n⁻¹(τ'); both index the same list
    normalise(&mut a);
    normalise(&mut b);
    Ok(total_variation(&a, &b))
}

/// Largest absolute difference between the GW tree conditioned on `n` edges
/// and `ν_n(w)`, tree by tree.
pub fn conditioned_gw_vs_nu(spec: &GwSpec, n: usize) -> Result<f64> {
    let p = spec.probs(n + 1);
    let nu = exact_nu_distribution(n, spec.weights())?;
    let mut gw: Vec<f64> = nu
        .iter()
        .map(|(t, _)| t.outdeg_seq().iter().map(|&k| p[k]).product())
        .collect();
    normalise(&mut gw);
    Ok(nu.iter().zip(&gw).map(|((_, x), y)| (x - y).abs()).fold(0.0, f64::max))
}

fn from_usize<T: Num + Clone>(k: usize) -> T {
    (0..k).fold(T::zero(), |acc, _| acc + T::one())
}

/// Law of `ξ⁽⁰⁾` from `E x^{ξ⁽⁰⁾} = p_0 / (1 - Σ_{k≥1} p_k x^{k-1})`:
/// `q = p_0 c` with `(1 - p_1) c_m = [m = 0] + Σ_{k=1}^m p_{k+1} c_{m-k}`.
/// Needs `p` up to index `len`.
pub fn xi0_coefficients<T: Num + Clone>(p: &[T], len: usize) -> Vec<T> {
    let denom = T::one() - p[1].clone();
    let mut c: Vec<T> = Vec::with_capacity(len);
    for m in 0..len {
        let mut acc = if m == 0 { T::one() } else { T::zero() };
        for k in 1..=m {
            if let Some(pk) = p.get(k + 1) {
                acc = acc + pk.clone() * c[m - k].clone();
            }
        }
        c.push(acc / denom.clone());
    }
    c.into_iter().map(|x| p[0].clone() * x).collect()
}

/// `P(N⁽⁰⁾ = m)`, `m = 0..=m_max`, for the leaf count of GW(`p`), from
/// `F = p_0 x + Σ_{k≥1} p_k F^k` solved degree by degree.
pub fn leaf_law<T: Num + Clone>(p: &[T], m_max: usize) -> Vec<T> {
    let zero = || T::zero();
    // pow[k][m] = [x^m] F^k
    let mut pow: Vec<Vec<T>> = vec![vec![zero(); m_max + 1]; m_max + 1];
    let denom = T::one() - p.get(1).cloned().unwrap_or_else(zero);
    for m in 1..=m_max {
        for k in 2..=m {
            let mut s = zero();
            for j in 1..m {
                s = s + pow[1][j].clone() * pow[k - 1][m - j].clone();
            }
            pow[k][m] = s;
        }
        let mut acc = if m == 1 { p[0].clone() } else { zero() };
        for k in 2..=m {
            if let Some(pk) = p.get(k) {
                acc = acc + pk.clone() * pow[k][m].clone();
            }
        }
        pow[1][m] = acc / denom.clone();
    }
    let mut f = pow.swap_remove(1);
    f[0] = zero();
    f
}

/// `P(N = k) = P(S_k = k - 1) / k`, `k = 0..=m_max`, for the progeny of
/// GW(`q`).
pub fn progeny_law<T: Num + Clone>(q: &[T], m_max: usize) -> Vec<T> {
    let mut out = vec![T::zero(); m_max + 1];
    let mut s: Vec<T> = (0..m_max).map(|i| q.get(i).cloned().unwrap_or_else(T::zero)).collect();
    for (k, slot) in out.iter_mut().enumerate().skip(1) {
        *slot = s[k - 1].clone() / from_usize::<T>(k);
        let mut next = vec![T::zero(); m_max];
        for (i, si) in s.iter().enumerate() {
            if si.is_zero() {
                continue;
            }
            for (j, qj) in q.iter().enumerate().take(m_max - i) {
                next[i + j] = next[i + j].clone() + si.clone() * qj.clone();
            }
        }
        s = next;
    }
    out
}

/// Truncated law of `ξ⁽⁰⁾`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Xi0Law {
    pub probs: Vec<f64>,
    pub tail_mass: f64,
    pub tail_tol: f64,
    /// Mean of the truncated law.
    pub mean_truncated: f64,
    /// `1 - (1 - κ)/p_0`.
    pub mean_formula: f64,
}

/// The `ξ⁽⁰⁾` law, grown in blocks until the remaining mass is below `tol`
/// or [`XI0_MAX_LEN`] is reached.
pub fn xi0_law(spec: &GwSpec, tol: f64) -> Result<Xi0Law> {
    if spec.mean() > 1.0 + 1e-12 {
        return Err(Error::Regime(format!("offspring mean {} > 1", spec.mean())));
    }
    let mut len = 256;
    loop {
        let p = spec.probs(len + 1);
        let q = xi0_coefficients(&p, len);
        let tail = (1.0 - q.iter().sum::<f64>()).max(0.0);
        if tail < tol || len >= XI0_MAX_LEN {
            let mean_truncated = q.iter().enumerate().map(|(i, x)| i as f64 * x).sum();
            return Ok(Xi0Law {
                probs: q,
                tail_mass: tail,
                tail_tol: tol,
                mean_truncated,
                mean_formula: 1.0 - (1.0 - spec.mean()) / spec.p0(),
            });
        }
        len = (len * 4).min(XI0_MAX_LEN);
    }
}

/// Exact sampler for an offspring law: a CDF table plus, for power-law
/// weights at `t = 1`, a rejection sampler for the tail.
#[derive(Clone, Debug)]
pub struct OffspringSampler {
    cdf: Vec<f64>,
    table_mass: f64,
    tail: Option<PowerTail>,
}

#[derive(Clone, Copy, Debug)]
struct PowerTail {
    k0: usize,
    beta: f64,
}

impl PowerTail {
    /// `i^{-β}` over `∫_i^{i+1} x^{-β} dx`, decreasing in `i`.
    fn ratio(&self, i: f64) -> f64 {
        let b = self.beta;
        i.powf(-b) * (b - 1.0) / (i.powf(1.0 - b) - (i + 1.0).powf(1.0 - b))
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let k0 = self.k0 as f64;
        let bound = self.ratio(k0);
        loop {
            let u: f64 = rng.gen();
            let x = k0 * (1.0 - u).powf(-1.0 / (self.beta - 1.0));
            let k = x.floor();
            if !k.is_finite() || k > 1e18 {
                continue;
            }
            if rng.gen::<f64>() * bound <= self.ratio(k) {
                return k as usize;
            }
        }
    }
}

impl OffspringSampler {
    pub fn new(spec: &GwSpec) -> Result<Self> {
        let mut cdf = Vec::new();
        let mut acc = 0.0;
        let power = spec.power_tail();
        let mut i = 0;
        loop {
            acc += spec.prob(i);
            cdf.push(acc);
            i += 1;
            let done = match power {
                Some(_) => i >= 4096,
                None => 1.0 - acc < NEGLIGIBLE_TAIL || i >= TABLE_MAX,
            };
            if done {
                break;
            }
        }
        let (table_mass, tail) = match power {
            Some((beta, c)) => {
                let head: f64 = (1..=i).rev().map(|k| (k as f64).powf(-beta)).sum();
                let tail_mass = c * (zeta(beta) - head) / spec.log_norm.exp();
                (1.0 - tail_mass, Some(PowerTail { k0: i, beta }))
            }
            None if 1.0 - acc < NEGLIGIBLE_TAIL => (acc, None),
            None => {
                return Err(Error::Invalid(format!(
                    "no exact tail sampler for {} (remaining mass {:e})",
                    spec.weights().spec_string(),
                    1.0 - acc
                )))
            }
        };
        Ok(Self { cdf, table_mass, tail })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen::<f64>();
        match self.tail {
            Some(t) if u >= self.table_mass => t.sample(rng),
            _ => {
                let u = u * self.table_mass.min(*self.cdf.last().unwrap());
                self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
            }
        }
    }
}

/// `(vertices, leaves)` of one GW tree, or an error past `cap` vertices.
pub fn gw_progeny<R: Rng + ?Sized>(sampler: &OffspringSampler, rng: &mut R, cap: usize) -> Result<(usize, usize)> {
    let (mut pending, mut vertices, mut leaves) = (1usize, 0usize, 0usize);
    while pending > 0 {
        pending -= 1;
        vertices += 1;
        let k = sampler.sample(rng);
        if k == 0 {
            leaves += 1;
        }
        pending += k;
        if vertices + pending > cap {
            return Err(Error::CapExceeded {
                n: vertices + pending,
                cap,
            });
        }
    }
    Ok((vertices, leaves))
}

/// Samples `ξ⁽⁰⁾ = Σ_{j=1}^{ζ} ξ̃_j` by composition.
#[derive(Clone, Debug)]
pub struct Xi0Sampler {
    offspring: OffspringSampler,
    p0: f64,
}

impl Xi0Sampler {
    pub fn new(spec: &GwSpec) -> Result<Self> {
        Ok(Self {
            offspring: OffspringSampler::new(spec)?,
            p0: spec.p0(),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let mut total = 0;
        while rng.gen::<f64>() >= self.p0 {
            let k = loop {
                let k = self.offspring.sample(rng);
                if k > 0 {
                    break k;
                }
            };
            total += k - 1;
        }
        total
    }
}

/// Twigs: vertices in lexicographic order, cut after every leaf. Returns
/// the twig index of every vertex and the contracted tree, in which twig
/// `j`'s parent is the twig holding the parent of its first vertex.
pub fn twig_decompose(t: &PlanarTree) -> (Vec<usize>, PlanarTree) {
    let nv = t.n_vertices();
    let mut twig = vec![0; nv];
    let mut current = 0;
    for (v, slot) in twig.iter_mut().enumerate() {
        *slot = current;
        if t.outdeg(v) == 0 && v + 1 < nv {
            current += 1;
        }
    }
    let n_twigs = current + 1;
    let mut outdeg = vec![0; n_twigs];
    for v in 1..nv {
        if twig[v] != twig[v - 1] {
            let p = t.parent(v).expect("non-root");
            outdeg[twig[p]] += 1;
        }
    }
    let contracted = PlanarTree::from_outdeg(outdeg).expect("twig parents precede their children");
    (twig, contracted)
}

/// Leaf-law equivalence, moments and tail diagnostic for a subcritical law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeafCountReport {
    pub gw: GwSummary,
    pub n_max: usize,
    /// `P(N⁽⁰⁾ = k)`, `k = 0..=n_max`, from the leaf recursion.
    pub leaf_law: Vec<f64>,
    /// The same from the progeny of GW(`ξ⁽⁰⁾`).
    pub progeny_law: Vec<f64>,
    pub tv: f64,
    pub draws: usize,
    pub en: f64,
    pub en_se: f64,
    pub en_target: f64,
    pub en0: f64,
    pub en0_se: f64,
    pub en0_target: f64,
    /// `(n, P(N⁽⁰⁾ = n) n^β / (c L̃(n)))` for power-law weights.
    pub tail_ratio: Vec<(usize, f64)>,
}

pub fn leaf_count_checks(spec: &GwSpec, n_max: usize, draws: usize, seed: u64) -> Result<LeafCountReport> {
    if !spec.is_subcritical() {
        return Err(Error::Regime(format!(
            "leaf-count checks need a subcritical law, mean is {}",
            spec.mean()
        )));
    }
    let p = spec.probs(n_max + 2);
    let a = leaf_law(&p, n_max);
    let b = progeny_law(&xi0_coefficients(&p, n_max), n_max);
    let tv = total_variation(&a, &b);

    let sampler = OffspringSampler::new(spec)?;
    const CHUNK: usize = 1000;
    let chunks = draws.div_ceil(CHUNK);
    let samples: Vec<(usize, usize)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = replicate_rng(seed, c as u64);
            let m = CHUNK.min(draws - c * CHUNK);
            (0..m)
                .map(|_| gw_progeny(&sampler, &mut rng, 1 << 32))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let nv: Vec<f64> = samples.iter().map(|s| s.0 as f64).collect();
    let nl: Vec<f64> = samples.iter().map(|s| s.1 as f64).collect();
    let (en, en_se) = crate::stats::mean_se(&nv);
    let (en0, en0_se) = crate::stats::mean_se(&nl);
    let kappa = spec.mean();
    let p0 = spec.p0();

    let tail_ratio = match spec.power_tail() {
        Some((beta, c)) => {
            let l_tilde = c / spec.log_norm.exp();
            let c_tail = p0.powf(beta - 1.0) * (1.0 - kappa).powf(-beta);
            (1..=n_max)
                .map(|n| (n, b[n] * (n as f64).powf(beta) / (c_tail * l_tilde)))
                .collect()
        }
        None => Vec::new(),
    };
    Ok(LeafCountReport {
        gw: spec.summary(),
        n_max,
        leaf_law: a,
        progeny_law: b,
        tv,
        draws,
        en,
        en_se,
        en_target: 1.0 / (1.0 - kappa),
        en0,
        en0_se,
        en0_target: p0 / (1.0 - kappa),
        tail_ratio,
    })
}

/// `r` as a decimal string with `digits` digits after the point (rounded
/// half away from zero).
pub fn decimal_string(r: &BigRational, digits: usize) -> String {
    let scale = BigInt::from(10u32).pow(digits as u32);
    let scaled = r.abs() * BigRational::from_integer(scale.clone());
    let rounded = (scaled + BigRational::new(BigInt::one(), BigInt::from(2)))
        .floor()
        .to_integer();
    let int = &rounded / &scale;
    let frac = (&rounded % &scale).to_string();
    let sign = if r.is_negative() && !rounded.is_zero() { "-" } else { "" };
    format!("{sign}{int}.{frac:0>digits$}")
}

/// Exact leaf-law equivalence for a rational offspring law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactLeafReport {
    pub n_max: usize,
    pub leaf_law: Vec<String>,
    pub progeny_law: Vec<String>,
    pub equal: bool,
}

pub fn exact_leaf_check(p: &[BigRational], n_max: usize) -> ExactLeafReport {
    let a = leaf_law(p, n_max);
    let b = progeny_law(&xi0_coefficients(p, n_max), n_max);
    ExactLeafReport {
        n_max,
        equal: a == b,
        leaf_law: a.iter().map(|x| decimal_string(x, 20)).collect(),
        progeny_law: b.iter().map(|x| decimal_string(x, 20)).collect(),
    }
}

/// `p_i = 2^{-i-1}` as exact rationals, `i < len`.
pub fn geometric_half_rational(len: usize) -> Vec<BigRational> {
    (0..len)
        .map(|i| BigRational::new(BigInt::one(), BigInt::from(2u32).pow(i as u32 + 1)))
        .collect()
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::Offspring;

    fn geometric() -> WeightSequence {
        WeightSequence::tilted_offspring(Offspring::Geometric { p0: 0.5 }).unwrap()
    }

    fn pl3() -> WeightSequence {
        WeightSequence::power_law(3.0, 1.0).unwrap()
    }

    #[test]
    fn geometric_tilt_root_is_a_double_root() {
        let w = geometric();
        let z = solve_z(&w).unwrap();
        assert!((z - 2.0).abs() < 1e-12, "{z}");
        let s = w.series(z);
        assert!((s.dg - 1.0).abs() < 1e-10);
        let spec = GwSpec::tilt(&w, z).unwrap();
        assert!(spec.is_critical(1e-10));
        for i in 0..20 {
            assert!((spec.prob(i) - 0.5f64.powi(i as i32 + 1)).abs() < 1e-14);
        }
    }

    #[test]
    fn power_law_is_not_admissible_but_its_tilt_is() {
        assert!(matches!(solve_z(&pl3()), Err(Error::NotAdmissible(_))));
        assert!(matches!(
            solve_z(&WeightSequence::factorial(1.0).unwrap()),
            Err(Error::NotAdmissible(_))
        ));
        let base = GwSpec::offspring_of(&pl3()).unwrap();
        assert!((base.mean() - 0.746998892).abs() < 1e-8);
        assert!((base.p0() - 0.454120872).abs() < 1e-8);
        // w'_i = p_0^{i-1} p_i over a long explicit prefix
        let p = base.probs(200_000);
        let p0 = p[0];
        let log_w: Vec<f64> = p
            .iter()
            .enumerate()
            .map(|(i, x)| (i as f64 - 1.0) * p0.ln() + x.ln())
            .collect();
        let w = WeightSequence::explicit(&crate::weights::Sequence::Log(log_w), false).unwrap();
        let z = solve_z(&w).unwrap();
        let s = w.series(z);
        assert!((s.g - z).abs() < 1e-12 * z);
        assert!((z - 1.0 / p0).abs() < 1e-6 * z, "{z} vs {}", 1.0 / p0);
        let spec = GwSpec::tilt(&w, z).unwrap();
        assert!(spec.is_subcritical());
        assert!((spec.probs(200_000).iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn subcritical_explicit_tilt() {
        let w = WeightSequence::explicit_linear(&[1.0, 0.1, 0.05]).unwrap();
        let z = solve_z(&w).unwrap();
        assert!((w.series(z).g - z).abs() < 1e-12 * z);
        let spec = GwSpec::tilt(&w, z).unwrap();
        assert!(spec.mean() < 1.0 && !spec.is_critical(1e-10));
        let p = spec.probs(3);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let var = p[1] + 4.0 * p[2] - spec.mean().powi(2);
        assert!((spec.variance() - var).abs() < 1e-12);
    }

    #[test]
    fn two_type_laws() {
        let spec = GwSpec::tilt(&geometric(), 2.0).unwrap();
        let (white, black) = two_type_offspring(&spec, 60);
        for (k, x) in white.iter().enumerate().take(10) {
            assert!((x - 0.5f64.powi(k as i32 + 1)).abs() < 1e-15);
        }
        assert!((black.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for n in 1..=5 {
            assert!(two_type_tv(&spec, n).unwrap() < 1e-10);
            let pl = GwSpec::offspring_of(&pl3()).unwrap();
            assert!(two_type_tv(&pl, n).unwrap() < 1e-10);
        }
    }

    #[test]
    fn conditioned_gw_is_nu() {
        let pl = GwSpec::offspring_of(&pl3()).unwrap();
        let geo = GwSpec::tilt(&geometric(), 2.0).unwrap();
        let geo_off = GwSpec::boltzmann(&geometric(), 1.0).unwrap();
        for n in 1..=6 {
            for spec in [&pl, &geo, &geo_off] {
                assert!(conditioned_gw_vs_nu(spec, n).unwrap() < 1e-10);
            }
        }
    }

    #[test]
    fn xi0_mean() {
        let spec = GwSpec::offspring_of(&pl3()).unwrap();
        let law = xi0_law(&spec, XI0_TAIL_TOL).unwrap();
        assert!((law.mean_formula - 0.442877164).abs() < 1e-8);
        assert!((law.mean_truncated - law.mean_formula).abs() < 1e-3, "{law:?}");
        assert!(law.probs[0] >= spec.p0());
        assert!(law.mean_formula < 1.0);
        let sampler = Xi0Sampler::new(&spec).unwrap();
        let mut rng = replicate_rng(3, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| sampler.sample(&mut rng) as f64).collect();
        let (m, se) = crate::stats::mean_se(&xs);
        assert!((m - law.mean_formula).abs() < 3.0 * se, "{m} ± {se}");
    }

    #[test]
    fn xi0_is_subcritical_for_subcritical_laws() {
        for p0 in [0.55, 0.7, 0.9] {
            let spec =
                GwSpec::offspring_of(&WeightSequence::tilted_offspring(Offspring::Geometric { p0 }).unwrap()).unwrap();
            let law = xi0_law(&spec, 1e-12).unwrap();
            assert!(spec.mean() < 1.0 && law.mean_formula < 1.0);
        }
    }

    #[test]
    fn offspring_sampler_matches_law() {
        let spec = GwSpec::offspring_of(&pl3()).unwrap();
        let s = OffspringSampler::new(&spec).unwrap();
        let mut rng = replicate_rng(5, 0);
        let draws = 200_000;
        let mut counts = vec![0u64; 6];
        let mut big = 0u64;
        for _ in 0..draws {
            let k = s.sample(&mut rng);
            if k < 5 {
                counts[k] += 1;
            } else {
                counts[5] += 1;
            }
            if k > 4096 {
                big += 1;
            }
        }
        let mut probs = spec.probs(5);
        probs.push(1.0 - probs.iter().sum::<f64>());
        let (_, p) = crate::stats::chi_square_gof(&counts, &probs);
        assert!(p > 1e-3, "{p}");
        // tail above the table: mass ≈ 1.4e-8, so essentially never hit
        assert!(big <= 2);
        let t = PowerTail { k0: 10, beta: 3.0 };
        let xs: Vec<usize> = (0..100_000).map(|_| t.sample(&mut rng)).collect();
        let z10: f64 = (10..100_000).map(|k| (k as f64).powi(-3)).sum();
        let frac10 = xs.iter().filter(|&&k| k == 10).count() as f64 / xs.len() as f64;
        let want = 10f64.powi(-3) / z10;
        assert!((frac10 - want).abs() < 4.0 * (want * (1.0 - want) / 1e5).sqrt());
    }

    #[test]
    fn leaf_law_equivalence() {
        let exact = exact_leaf_check(&geometric_half_rational(12), 8);
        assert!(exact.equal);
        // a chain of single children ending in a leaf: p_0 / (1 - p_1)
        assert_eq!(exact.leaf_law[1], "0.66666666666666666667");
        let spec = GwSpec::offspring_of(&pl3()).unwrap();
        let r = leaf_count_checks(&spec, 8, 20_000, 1).unwrap();
        assert!(r.tv < 1e-10, "{}", r.tv);
        assert!((r.en_target - 3.952551860).abs() < 1e-6);
        assert!((r.en0_target - 1.794936296).abs() < 1e-6);
        assert!((r.leaf_law[1] - spec.p0() / (1.0 - spec.prob(1))).abs() < 1e-15);
        assert!(leaf_count_checks(&GwSpec::tilt(&geometric(), 2.0).unwrap(), 4, 10, 1).is_err());
    }

    #[test]
    fn twigs() {
        let path = PlanarTree::from_outdeg(vec![1, 1, 1, 0]).unwrap();
        assert_eq!(twig_decompose(&path).1.n_vertices(), 1);
        let cherry = PlanarTree::from_outdeg(vec![2, 0, 0]).unwrap();
        let (idx, c) = twig_decompose(&cherry);
        assert_eq!(idx, vec![0, 0, 1]);
        assert_eq!(c.outdeg_seq(), &[1, 0]);
        for n in 0..=8 {
            for t in enumerate_trees(n).unwrap() {
                let (_, c) = twig_decompose(&t);
                assert_eq!(c.n_vertices(), t.leaf_count());
                assert_eq!(twig_decompose(&t).1, c);
            }
        }
    }

    #[test]
    fn decimal_rendering() {
        let r = BigRational::new(BigInt::from(-1), BigInt::from(3));
        assert_eq!(decimal_string(&r, 5), "-0.33333");
        assert_eq!(
            decimal_string(&BigRational::new(BigInt::from(2), BigInt::from(3)), 3),
            "0.667"
        );
        assert_eq!(
            rational_to_f64(&BigRational::new(BigInt::from(1), BigInt::from(4))),
            0.25
        );
    }
}
