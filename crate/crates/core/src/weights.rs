//! Weight sequences and their generating-function analytics.
//!
//! Face weights `q_i` (indexed from 1) and vertex weights `w_i` (indexed from
//! 0) are related by `w_0 = 1`, `w_i = C(2i-1, i-1) q_i`. Everything below
//! works with `w`; [`q_to_w`] and [`w_to_q`] convert between the two.
//!
//! With `g(t) = Σ w_i t^i` of radius `R`, the condensation regimes are
//!
//! * C1: `0 < R < ∞` and `κ = lim_{t↗R} t g'(t)/g(t) < 1`,
//! * C2: `R = 0` (with `κ = 0` by convention).

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{ext_f64, ln_label_count, zeta};

/// A finite sequence stored either linearly or as natural logarithms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "domain", content = "values", rename_all = "lowercase")]
pub enum Sequence {
    Linear(Vec<f64>),
    Log(Vec<f64>),
}

/// Log values above this threshold are kept in the log domain.
const LINEAR_LOG_LIMIT: f64 = 700.0;

impl Sequence {
    pub fn len(&self) -> usize {
        self.values().len()
    }

    pub fn is_empty(&self) -> bool {
        self.values().is_empty()
    }

    pub fn values(&self) -> &[f64] {
        match self {
            Sequence::Linear(v) | Sequence::Log(v) => v,
        }
    }

    pub fn is_log(&self) -> bool {
        matches!(self, Sequence::Log(_))
    }

    /// Natural logarithms of the entries (`-inf` for zeros).
    pub fn to_log(&self) -> Vec<f64> {
        match self {
            Sequence::Linear(v) => v.iter().map(|x| x.ln()).collect(),
            Sequence::Log(v) => v.clone(),
        }
    }

    fn check_domain(&self, what: &str) -> Result<()> {
        for (i, &x) in self.values().iter().enumerate() {
            let bad = match self {
                Sequence::Linear(_) => !(x.is_finite() && x >= 0.0),
                Sequence::Log(_) => x.is_nan() || x == f64::INFINITY,
            };
            if bad {
                return Err(Error::Domain(format!(
                    "{what}[{i}] = {x} is not a finite non-negative weight"
                )));
            }
        }
        Ok(())
    }
}

/// `C(n, k)` as a float, exact while the result fits in 53 bits.
fn binomial_f64(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for j in 0..k {
        acc = acc * (n - j) as f64 / (j + 1) as f64;
    }
    acc
}

fn label_count_f64(i: u64) -> f64 {
    binomial_f64(2 * i - 1, i - 1)
}

/// Map face weights `q = (q_1, q_2, ...)` to vertex weights
/// `w = (1, w_1, w_2, ...)`. Switches to the log domain when any
/// `log w_i` exceeds 700 instead of overflowing.
pub fn q_to_w(q: &Sequence) -> Result<Sequence> {
    q.check_domain("q")?;
    let log_q = q.to_log();
    let mut log_w = Vec::with_capacity(log_q.len() + 1);
    log_w.push(0.0);
    for (k, &lq) in log_q.iter().enumerate() {
        log_w.push(ln_label_count(k as u64 + 1) + lq);
    }
    if q.is_log() || log_w.iter().any(|&x| x > LINEAR_LOG_LIMIT) {
        return Ok(Sequence::Log(log_w));
    }
    let Sequence::Linear(qv) = q else { unreachable!() };
    let mut w = Vec::with_capacity(qv.len() + 1);
    w.push(1.0);
    for (k, &qi) in qv.iter().enumerate() {
        w.push(label_count_f64(k as u64 + 1) * qi);
    }
    Ok(Sequence::Linear(w))
}

/// Inverse of [`q_to_w`]. Requires `w_0 = 1`.
pub fn w_to_q(w: &Sequence) -> Result<Sequence> {
    w.check_domain("w")?;
    let first = w.values().first().copied();
    let unit = match w {
        Sequence::Linear(_) => first == Some(1.0),
        Sequence::Log(_) => first == Some(0.0),
    };
    if !unit {
        return Err(Error::Domain(format!("w_0 must equal 1, got {first:?}")));
    }
    match w {
        Sequence::Linear(v) => Ok(Sequence::Linear(
            v.iter()
                .enumerate()
                .skip(1)
                .map(|(i, &wi)| wi / label_count_f64(i as u64))
                .collect(),
        )),
        Sequence::Log(v) => Ok(Sequence::Log(
            v.iter()
                .enumerate()
                .skip(1)
                .map(|(i, &lw)| lw - ln_label_count(i as u64))
                .collect(),
        )),
    }
}

/// A user-supplied slowly varying function `L` for the family
/// `w_i = L(i) i^{-β}`.
#[derive(Clone)]
pub struct SlowlyVarying {
    pub name: String,
    pub func: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for SlowlyVarying {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SlowlyVarying").field("name", &self.name).finish()
    }
}

/// Offspring laws accepted by [`Family::TiltedOffspring`].
#[derive(Clone, Debug, PartialEq)]
pub enum Offspring {
    /// `p_i = p0 (1 - p0)^i`.
    Geometric { p0: f64 },
    /// Finite list `p_0, p_1, ...`.
    Explicit(Vec<f64>),
}

#[derive(Clone, Debug)]
pub enum Family {
    /// `w_i = c i^{-β}` for `i >= 1`.
    PowerLaw { beta: f64, c: f64 },
    /// `w_i = L(i) i^{-β}` with a user-supplied `L`.
    RegularlyVarying { beta: f64, l: SlowlyVarying },
    /// `w_i = (i!)^α`.
    Factorial { alpha: f64 },
    /// Finite explicit list, stored as logs.
    Explicit { log_w: Vec<f64> },
    /// `w_i = p_0^{i-1} p_i` for an offspring law `p`.
    TiltedOffspring(Offspring),
    /// Support `{0} ∪ {3^j}`, `log w_{3^j} = α 3^j log 3^j`.
    Sparse3 { alpha: f64 },
}

/// Values of `g`, `g'` and `g''` at one point; `+inf` marks divergence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Series {
    pub g: f64,
    pub dg: f64,
    pub d2g: f64,
}

impl Series {
    const DIVERGENT: Series = Series {
        g: f64::INFINITY,
        dg: f64::INFINITY,
        d2g: f64::INFINITY,
    };
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    C1Condensation,
    C2Condensation,
    GenericOrCritical,
    Trivial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    #[serde(with = "ext_f64")]
    pub radius: f64,
    /// Set when `radius` comes from a ratio test on a finite prefix.
    pub radius_estimated: bool,
    #[serde(with = "ext_f64")]
    pub kappa: f64,
    pub regime: Regime,
    /// `1/g(1)`; `1` by convention when `R = 0`; absent when `g(1) = ∞`.
    #[serde(with = "ext_f64::option", default)]
    pub p0: Option<f64>,
    /// Variance of the offspring law `w_i/g(1)`.
    #[serde(with = "ext_f64::option", default)]
    pub sigma2: Option<f64>,
}

/// A weight sequence `(w_i)_{i >= 0}`.
#[derive(Clone, Debug)]
pub struct WeightSequence {
    family: Family,
}

impl WeightSequence {
    pub fn power_law(beta: f64, c: f64) -> Result<Self> {
        if !(beta > 2.0 && beta.is_finite()) || !(c > 0.0 && c.is_finite()) {
            return Err(Error::Domain(format!(
                "power law needs β > 2 and c > 0, got β={beta}, c={c}"
            )));
        }
        Ok(Self {
            family: Family::PowerLaw { beta, c },
        })
    }

    pub fn regularly_varying(beta: f64, l: SlowlyVarying) -> Result<Self> {
        if !(beta > 2.0 && beta.is_finite()) {
            return Err(Error::Domain(format!("β must exceed 2, got {beta}")));
        }
        Ok(Self {
            family: Family::RegularlyVarying { beta, l },
        })
    }

    pub fn factorial(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Domain(format!("factorial family needs α > 0, got {alpha}")));
        }
        Ok(Self {
            family: Family::Factorial { alpha },
        })
    }

    pub fn sparse3(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Domain(format!("sparse3 family needs α > 0, got {alpha}")));
        }
        Ok(Self {
            family: Family::Sparse3 { alpha },
        })
    }

    /// Explicit weights. `w_0 = 1` is required unless `allow_nonunit_w0`.
    pub fn explicit(w: &Sequence, allow_nonunit_w0: bool) -> Result<Self> {
        w.check_domain("w")?;
        let log_w = w.to_log();
        if log_w.is_empty() {
            return Err(Error::Domain("explicit weight list is empty".into()));
        }
        if !allow_nonunit_w0 && log_w[0] != 0.0 {
            return Err(Error::Domain(
                "explicit weights must have w_0 = 1 (pass the override flag to relax)".into(),
            ));
        }
        Ok(Self {
            family: Family::Explicit { log_w },
        })
    }

    pub fn explicit_linear(w: &[f64]) -> Result<Self> {
        Self::explicit(&Sequence::Linear(w.to_vec()), false)
    }

    /// `w_i = p_0^{i-1} p_i`, so that `w_0 = 1` and the tilt root is `Z = 1/p_0`.
    pub fn tilted_offspring(p: Offspring) -> Result<Self> {
        match &p {
            Offspring::Geometric { p0 } => {
                if !(*p0 > 0.0 && *p0 < 1.0) {
                    return Err(Error::Domain(format!("geometric p0 must lie in (0,1), got {p0}")));
                }
            }
            Offspring::Explicit(v) => {
                let s: f64 = v.iter().sum();
                if v.is_empty() || v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || (s - 1.0).abs() > 1e-12 {
                    return Err(Error::Domain("offspring law must be a probability vector".into()));
                }
                if !(v[0] > 0.0) {
                    return Err(Error::Domain("offspring law needs p_0 > 0".into()));
                }
            }
        }
        Ok(Self {
            family: Family::TiltedOffspring(p),
        })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Parse `powerlaw:beta=3,c=1`, `factorial:alpha=1`, `sparse3:alpha=1`,
    /// `geometric:p0=0.5`, `tilted:p=0.5;0.25;0.25` or
    /// `explicit:file=weights.json[,allow_nonunit_w0=true]`.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = |reason: &str| Error::FamilySpec {
            spec: spec.to_string(),
            reason: reason.to_string(),
        };
        let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let mut params: Vec<(&str, &str)> = Vec::new();
        for part in rest.split(',').filter(|s| !s.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| bad("expected key=value"))?;
            params.push((k.trim(), v.trim()));
        }
        let get = |key: &str| params.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
        let num = |key: &str, default: Option<f64>| -> Result<f64> {
            match get(key) {
                Some(v) => v.parse::<f64>().map_err(|_| bad(&format!("`{key}` is not a number"))),
                None => default.ok_or_else(|| bad(&format!("missing `{key}`"))),
            }
        };
        for (k, _) in &params {
            let known: &[&str] = match kind {
                "powerlaw" => &["beta", "c"],
                "factorial" | "sparse3" => &["alpha"],
                "geometric" => &["p0"],
                "tilted" => &["p"],
                "explicit" => &["file", "allow_nonunit_w0"],
                _ => &[],
            };
            if !known.contains(k) {
                return Err(bad(&format!("unknown parameter `{k}`")));
            }
        }
        match kind {
            "powerlaw" => Self::power_law(num("beta", None)?, num("c", Some(1.0))?),
            "factorial" => Self::factorial(num("alpha", None)?),
            "sparse3" => Self::sparse3(num("alpha", Some(1.0))?),
            "geometric" => Self::tilted_offspring(Offspring::Geometric { p0: num("p0", None)? }),
            "tilted" => {
                let p = get("p")
                    .ok_or_else(|| bad("missing `p`"))?
                    .split(';')
                    .map(|s| s.trim().parse::<f64>().map_err(|_| bad("bad probability")))
                    .collect::<Result<Vec<_>>>()?;
                Self::tilted_offspring(Offspring::Explicit(p))
            }
            "explicit" => {
                let file = get("file").ok_or_else(|| bad("missing `file`"))?;
                let allow = matches!(get("allow_nonunit_w0"), Some("true" | "1"));
                Self::from_json_file(Path::new(file), allow)
            }
            _ => Err(bad("unknown family")),
        }
    }

    /// Load `{"domain": "linear"|"log", "values": [...]}`.
    pub fn from_json_file(path: &Path, allow_nonunit_w0: bool) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let seq: Sequence = serde_json::from_str(&text)?;
        Self::explicit(&seq, allow_nonunit_w0)
    }

    /// Canonical string form, parseable by [`WeightSequence::parse`] for the
    /// parametric families.
    pub fn spec_string(&self) -> String {
        match &self.family {
            Family::PowerLaw { beta, c } => format!("powerlaw:beta={beta},c={c}"),
            Family::RegularlyVarying { beta, l } => format!("regvar:beta={beta},L={}", l.name),
            Family::Factorial { alpha } => format!("factorial:alpha={alpha}"),
            Family::Sparse3 { alpha } => format!("sparse3:alpha={alpha}"),
            Family::Explicit { log_w } => format!("explicit:len={}", log_w.len()),
            Family::TiltedOffspring(Offspring::Geometric { p0 }) => format!("geometric:p0={p0}"),
            Family::TiltedOffspring(Offspring::Explicit(p)) => {
                let parts: Vec<String> = p.iter().map(|x| x.to_string()).collect();
                format!("tilted:p={}", parts.join(";"))
            }
        }
    }

    /// `log w_i` (`-inf` when `w_i = 0`).
    pub fn log_w(&self, i: usize) -> f64 {
        match &self.family {
            Family::PowerLaw { beta, c } => {
                if i == 0 {
                    0.0
                } else {
                    c.ln() - beta * (i as f64).ln()
                }
            }
            Family::RegularlyVarying { beta, l } => {
                if i == 0 {
                    0.0
                } else {
                    (l.func)(i as f64).ln() - beta * (i as f64).ln()
                }
            }
            Family::Factorial { alpha } => alpha * statrs::function::gamma::ln_gamma(i as f64 + 1.0),
            Family::Sparse3 { alpha } => {
                if i == 0 {
                    0.0
                } else if is_power_of_three(i) {
                    alpha * (i as f64) * (i as f64).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Family::Explicit { log_w } => log_w.get(i).copied().unwrap_or(f64::NEG_INFINITY),
            Family::TiltedOffspring(Offspring::Geometric { p0 }) => (i as f64) * (p0 * (1.0 - p0)).ln(),
            Family::TiltedOffspring(Offspring::Explicit(p)) => match p.get(i) {
                Some(&pi) if pi > 0.0 => (i as f64 - 1.0) * p[0].ln() + pi.ln(),
                _ => f64::NEG_INFINITY,
            },
        }
    }

    pub fn w(&self, i: usize) -> f64 {
        self.log_w(i).exp()
    }

    /// `(log w_0, ..., log w_n)`.
    pub fn log_prefix(&self, n: usize) -> Vec<f64> {
        (0..=n).map(|i| self.log_w(i)).collect()
    }

    /// Index of the last possibly non-zero weight, when the support is finite.
    fn support_len(&self) -> Option<usize> {
        match &self.family {
            Family::Explicit { log_w } => Some(log_w.len()),
            Family::TiltedOffspring(Offspring::Explicit(p)) => Some(p.len()),
            _ => None,
        }
    }

    /// Whether `w_k > 0` for some `k >= 2`.
    pub fn is_nontrivial(&self) -> bool {
        match self.support_len() {
            Some(len) => (2..len).any(|k| self.log_w(k) > f64::NEG_INFINITY),
            None => true,
        }
    }

    /// Radius of convergence of `g`, and whether it is a ratio-test estimate.
    pub fn radius(&self) -> (f64, bool) {
        match &self.family {
            Family::PowerLaw { .. } | Family::RegularlyVarying { .. } => (1.0, false),
            Family::Factorial { .. } | Family::Sparse3 { .. } => (0.0, false),
            Family::TiltedOffspring(Offspring::Geometric { p0 }) => (1.0 / (p0 * (1.0 - p0)), false),
            Family::Explicit { .. } | Family::TiltedOffspring(Offspring::Explicit(_)) => {
                (self.ratio_test_radius(), true)
            }
        }
    }

    /// Ratio test on the last two consecutive positive weights; falls back to
    /// the root test on the last positive one.
    fn ratio_test_radius(&self) -> f64 {
        let len = self.support_len().unwrap_or(0);
        let lw: Vec<f64> = (0..len).map(|i| self.log_w(i)).collect();
        for k in (1..len).rev() {
            if lw[k] > f64::NEG_INFINITY && lw[k - 1] > f64::NEG_INFINITY && k >= 1 {
                return (lw[k - 1] - lw[k]).exp();
            }
        }
        match (1..len).rev().find(|&k| lw[k] > f64::NEG_INFINITY) {
            Some(k) => (-lw[k] / k as f64).exp(),
            None => f64::INFINITY,
        }
    }

    /// `g`, `g'` and `g''` at `t >= 0`. Divergent values are `+inf`.
    pub fn series(&self, t: f64) -> Series {
        assert!(t >= 0.0, "series evaluated at negative t");
        if t == 0.0 {
            return Series {
                g: self.w(0),
                dg: self.w(1),
                d2g: 2.0 * self.w(2),
            };
        }
        match &self.family {
            Family::Factorial { .. } | Family::Sparse3 { .. } => Series::DIVERGENT,
            Family::PowerLaw { beta, c } => {
                if t > 1.0 {
                    Series::DIVERGENT
                } else if t == 1.0 {
                    let z = |s: f64| zeta(s);
                    let g = 1.0 + c * z(*beta);
                    let dg = c * z(beta - 1.0);
                    // Σ i(i-1) i^{-β} = ζ(β-2) - ζ(β-1)
                    let d2g = if *beta > 3.0 {
                        c * (z(beta - 2.0) - z(beta - 1.0))
                    } else {
                        f64::INFINITY
                    };
                    Series { g, dg, d2g }
                } else {
                    self.direct_series(t)
                }
            }
            Family::RegularlyVarying { .. } => {
                if t > 1.0 {
                    Series::DIVERGENT
                } else {
                    self.direct_series(t)
                }
            }
            Family::TiltedOffspring(Offspring::Geometric { p0 }) => {
                let a = p0 * (1.0 - p0);
                let d = 1.0 - a * t;
                if d <= 0.0 {
                    Series::DIVERGENT
                } else {
                    Series {
                        g: 1.0 / d,
                        dg: a / (d * d),
                        d2g: 2.0 * a * a / (d * d * d),
                    }
                }
            }
            Family::Explicit { .. } | Family::TiltedOffspring(Offspring::Explicit(_)) => self.direct_series(t),
        }
    }

    /// Direct summation, stopping when terms are negligible. Finite supports
    /// are summed exactly; infinite ones are truncated once the term ratio
    /// guarantees a tail below `1e-17` relative, or after `5·10^7` terms
    /// with an integral tail estimate.
    fn direct_series(&self, t: f64) -> Series {
        let lt = t.ln();
        let (mut g, mut dg, mut d2g) = (0.0f64, 0.0f64, 0.0f64);
        let limit = self.support_len().unwrap_or(50_000_000);
        let mut i = 0usize;
        while i < limit {
            let lw = self.log_w(i);
            if lw > f64::NEG_INFINITY {
                let fi = i as f64;
                let term = (lw + fi * lt).exp();
                g += term;
                if i >= 1 {
                    dg += fi * term / t;
                }
                if i >= 2 {
                    d2g += fi * (fi - 1.0) * term / (t * t);
                }
                if self.support_len().is_none() && i > 16 && fi * fi * term < 1e-18 * g.max(1e-300) {
                    break;
                }
            }
            i += 1;
        }
        Series { g, dg, d2g }
    }

    /// Radius, `κ`, `p_0 = 1/g(1)`, `σ²` and the regime.
    pub fn analyze(&self, tol: f64) -> Result<RegimeReport> {
        if !(tol > 0.0) {
            return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
        }
        let (radius, radius_estimated) = self.radius();
        let kappa = self.kappa(radius, tol);
        let (p0, sigma2) = if radius == 0.0 {
            (Some(1.0), None)
        } else if radius >= 1.0 {
            let s = self.series(1.0);
            if s.g.is_finite() {
                let m = s.dg / s.g;
                (Some(1.0 / s.g), Some(s.d2g / s.g + m * (1.0 - m)))
            } else {
                (None, None)
            }
        } else {
            (None, None)
        };
        let regime = if !self.is_nontrivial() {
            Regime::Trivial
        } else if radius == 0.0 {
            Regime::C2Condensation
        } else if radius.is_finite() && kappa < 1.0 {
            Regime::C1Condensation
        } else {
            Regime::GenericOrCritical
        };
        Ok(RegimeReport {
            radius,
            radius_estimated,
            kappa,
            regime,
            p0,
            sigma2,
        })
    }

    /// `κ = lim_{t↗R} t g'(t)/g(t)`. When both series converge at `R` the
    /// limit is their ratio there (Abel); otherwise it is followed along
    /// `t_k = R(1 - 2^{-k})` until successive values differ by less than
    /// `tol`, and reported as `+inf` once it runs past `1/tol`.
    fn kappa(&self, radius: f64, tol: f64) -> f64 {
        if radius == 0.0 {
            return 0.0;
        }
        if radius.is_infinite() {
            // polynomial: t g'/g tends to the degree
            let len = self.support_len().unwrap_or(0);
            return (0..len).rev().find(|&k| self.log_w(k) > f64::NEG_INFINITY).unwrap_or(0) as f64;
        }
        let at_r = self.series(radius);
        if at_r.g.is_finite() && at_r.dg.is_finite() {
            return radius * at_r.dg / at_r.g;
        }
        let mut prev = f64::NAN;
        for k in 1..=64 {
            let t = radius * (1.0 - 0.5f64.powi(k));
            let s = self.series(t);
            let v = t * s.dg / s.g;
            if !v.is_finite() || v > 1.0 / tol {
                return f64::INFINITY;
            }
            if (v - prev).abs() < tol {
                return v;
            }
            prev = v;
        }
        prev
    }
}

fn is_power_of_three(mut i: usize) -> bool {
    if i == 0 {
        return false;
    }
    while i.is_multiple_of(3) {
        i /= 3;
    }
    i == 1
}

#[cfg(test)]
mod tests {
    use super::*;

    /// ζ(s) by plain summation to 10^6 terms with the integral tail bound
    /// (independent of the Euler–Maclaurin routine in the implementation).
    fn zeta_oracle(s: f64) -> f64 {
        let n = 1_000_000usize;
        let mut acc = 0.0;
        for k in (1..=n).rev() {
            acc += (k as f64).powf(-s);
        }
        // midpoint integral tail: ∫_{n+1/2}^∞ x^{-s} dx
        acc + (n as f64 + 0.5).powf(1.0 - s) / (s - 1.0)
    }

    #[test]
    fn q_to_w_small_cases() {
        let w = q_to_w(&Sequence::Linear(vec![0.0, 1.0])).unwrap();
        assert_eq!(w, Sequence::Linear(vec![1.0, 0.0, 3.0]));
        let w = q_to_w(&Sequence::Linear(vec![5.0])).unwrap();
        assert_eq!(w.values()[1], 5.0);
        let w = q_to_w(&Sequence::Linear(vec![0.0, 0.0, 2.0])).unwrap();
        assert_eq!(w.values()[3], 20.0);
    }

    #[test]
    fn w_to_q_small_cases() {
        let q = w_to_q(&Sequence::Linear(vec![1.0, 5.0, 3.0])).unwrap();
        assert_eq!(q, Sequence::Linear(vec![5.0, 1.0]));
        assert!(w_to_q(&Sequence::Linear(vec![2.0, 1.0])).is_err());
        assert!(q_to_w(&Sequence::Linear(vec![-1.0])).is_err());
    }

    #[test]
    fn round_trip_power_law_prefix() {
        let w = WeightSequence::power_law(3.0, 1.0).unwrap();
        let prefix: Vec<f64> = (0..=100).map(|i| w.w(i)).collect();
        let seq = Sequence::Linear(prefix.clone());
        let back = q_to_w(&w_to_q(&seq).unwrap()).unwrap();
        for (a, b) in prefix.iter().zip(back.values()) {
            assert!(((a - b) / a).abs() < 1e-12);
        }
    }

    #[test]
    fn overflow_switches_to_log_domain() {
        let q = Sequence::Linear(vec![1e300; 400]);
        let w = q_to_w(&q).unwrap();
        assert!(w.is_log());
        let q2 = w_to_q(&w).unwrap();
        for (a, b) in q2.values().iter().zip(q.to_log()) {
            assert!((a - b).abs() < 1e-9 * b.abs());
        }
    }

    #[test]
    fn power_law_beta3_analytics() {
        let z2 = zeta_oracle(2.0);
        let z3 = zeta_oracle(3.0);
        let w = WeightSequence::power_law(3.0, 1.0).unwrap();
        let s = w.series(1.0);
        assert!((s.g - (1.0 + z3)).abs() < 1e-10);
        assert!((s.dg - z2).abs() < 1e-10);
        let r = w.analyze(1e-12).unwrap();
        assert_eq!(r.regime, Regime::C1Condensation);
        assert_eq!(r.radius, 1.0);
        assert!((r.kappa - z2 / (1.0 + z3)).abs() < 1e-10);
        assert!((r.kappa - 0.74699).abs() < 1e-5);
        assert!((r.p0.unwrap() - 0.45412).abs() < 1e-5);
        // g''(1) = ζ(1) - ζ(2) diverges at β = 3
        assert_eq!(r.sigma2, Some(f64::INFINITY));
    }

    #[test]
    fn power_law_grid_is_c1() {
        for beta in [3.0, 3.5, 4.0, 10.0] {
            let r = WeightSequence::power_law(beta, 1.0).unwrap().analyze(1e-10).unwrap();
            assert_eq!(r.regime, Regime::C1Condensation, "beta = {beta}");
            assert!(r.kappa > 0.0 && r.kappa < 1.0);
        }
        // ζ(1.5)/(1+ζ(2.5)) > 1 with c = 1
        let r = WeightSequence::power_law(2.5, 1.0).unwrap().analyze(1e-10).unwrap();
        assert!(r.kappa > 1.0);
        assert_eq!(r.regime, Regime::GenericOrCritical);
    }

    #[test]
    fn factorial_is_c2() {
        let r = WeightSequence::factorial(1.0).unwrap().analyze(1e-10).unwrap();
        assert_eq!(r.radius, 0.0);
        assert_eq!(r.kappa, 0.0);
        assert_eq!(r.regime, Regime::C2Condensation);
        assert_eq!(r.p0, Some(1.0));
    }

    #[test]
    fn geometric_tilt_has_divergent_kappa() {
        // p_i = 2^{-i-1} gives w_i = 4^{-i}, g(t) = 1/(1 - t/4)
        let w = WeightSequence::tilted_offspring(Offspring::Geometric { p0: 0.5 }).unwrap();
        for i in 0..10 {
            assert!((w.w(i) - 4f64.powi(-(i as i32))).abs() < 1e-15);
        }
        let r = w.analyze(1e-10).unwrap();
        assert_eq!(r.radius, 4.0);
        assert_eq!(r.kappa, f64::INFINITY);
        assert_eq!(r.regime, Regime::GenericOrCritical);
    }

    #[test]
    fn probabilities_sum_to_one() {
        for w in [
            WeightSequence::power_law(3.0, 1.0).unwrap(),
            WeightSequence::power_law(4.0, 2.0).unwrap(),
            WeightSequence::tilted_offspring(Offspring::Geometric { p0: 0.3 }).unwrap(),
        ] {
            let g1 = w.series(1.0).g;
            // partial sums with the analytic tail Σ_{i>N} c i^{-β} added back
            let n = 200_000;
            let head: f64 = (0..=n).rev().map(|i| w.w(i) / g1).sum();
            let tail = match w.family() {
                Family::PowerLaw { beta, c } => c * zeta_tail(*beta, n) / g1,
                _ => 0.0,
            };
            assert!((head + tail - 1.0).abs() < 1e-12, "{}", w.spec_string());
        }
    }

    fn zeta_tail(s: f64, n: usize) -> f64 {
        (n as f64 + 0.5).powf(1.0 - s) / (s - 1.0)
    }

    #[test]
    fn analyze_is_deterministic() {
        let w = WeightSequence::power_law(2.5, 0.7).unwrap();
        let a = w.analyze(1e-10).unwrap();
        let b = w.analyze(1e-10).unwrap();
        assert_eq!(a.kappa.to_bits(), b.kappa.to_bits());
        assert_eq!(a.p0.unwrap().to_bits(), b.p0.unwrap().to_bits());
    }

    #[test]
    fn explicit_finite_sequence_flags_estimate() {
        let w = WeightSequence::explicit_linear(&[1.0, 0.5, 0.25, 0.125]).unwrap();
        let r = w.analyze(1e-10).unwrap();
        assert!(r.radius_estimated);
        assert!((r.radius - 2.0).abs() < 1e-12);
        assert!(WeightSequence::explicit_linear(&[2.0, 1.0]).is_err());
        let trivial = WeightSequence::explicit_linear(&[1.0, 1.0]).unwrap();
        assert_eq!(trivial.analyze(1e-10).unwrap().regime, Regime::Trivial);
    }

    #[test]
    fn parse_family_specs() {
        let w = WeightSequence::parse("powerlaw:beta=3,c=1").unwrap();
        assert_eq!(w.spec_string(), "powerlaw:beta=3,c=1");
        let w = WeightSequence::parse("factorial:alpha=1").unwrap();
        assert!(matches!(w.family(), Family::Factorial { alpha } if *alpha == 1.0));
        assert!(WeightSequence::parse("sparse3:alpha=2").is_ok());
        assert!(WeightSequence::parse("geometric:p0=0.5").is_ok());
        assert!(WeightSequence::parse("tilted:p=0.5;0.25;0.25").is_ok());
        assert!(WeightSequence::parse("powerlaw:beta=1.5").is_err());
        assert!(WeightSequence::parse("nosuch:x=1").is_err());
        assert!(WeightSequence::parse("powerlaw:beta=3,gamma=2").is_err());
    }

    #[test]
    fn explicit_json_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.json");
        std::fs::write(&path, r#"{"domain":"log","values":[0.0,-1.0,-2.0]}"#).unwrap();
        let spec = format!("explicit:file={}", path.display());
        let w = WeightSequence::parse(&spec).unwrap();
        assert!((w.log_w(2) + 2.0).abs() < 1e-15);
        assert_eq!(w.log_w(3), f64::NEG_INFINITY);
    }

    #[test]
    fn sparse3_support() {
        let w = WeightSequence::sparse3(1.0).unwrap();
        assert_eq!(w.log_w(0), 0.0);
        assert_eq!(w.log_w(1), 0.0);
        assert_eq!(w.log_w(2), f64::NEG_INFINITY);
        assert!(w.log_w(9) > 0.0);
        assert_eq!(w.analyze(1e-10).unwrap().regime, Regime::C2Condensation);
    }
}
