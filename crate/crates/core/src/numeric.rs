//! Small numerical helpers shared across modules.

use rand::Rng;
use statrs::function::gamma::ln_gamma;

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    let s: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + s.ln()
}

/// `ln C(n, k)`; exact multiplicative evaluation for small arguments.
pub(crate) fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    if n <= 60 {
        let mut acc = 1.0f64;
        for j in 0..k {
            acc = acc * (n - j) as f64 / (j + 1) as f64;
        }
        return acc.ln();
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// `ln C(2i-1, i-1)`, the number of label configurations around a black
/// vertex of degree `i`.
pub(crate) fn ln_label_count(i: u64) -> f64 {
    if i == 0 {
        0.0
    } else {
        ln_binomial(2 * i - 1, i - 1)
    }
}

/// Riemann zeta by direct summation plus an Euler–Maclaurin tail.
/// Returns `+inf` for `s <= 1`.
pub(crate) fn zeta(s: f64) -> f64 {
    if s <= 1.0 {
        return f64::INFINITY;
    }
    const N: usize = 2000;
    let mut head = 0.0;
    // summing small terms first keeps the rounding error at the ulp level
    for k in (1..N).rev() {
        head += (k as f64).powf(-s);
    }
    let n = N as f64;
    let tail = n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s) + s * n.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * n.powf(-s - 3.0) / 720.0;
    head + tail
}

/// Truncated log-domain convolution: `c_m = log Σ_j exp(a_j + b_{m-j})` for
/// `m < len`.
///
/// Each cell first finds its exact maximum term. When that maximum lies within
/// `e^{-600}` of `max a + max b`, the cell is summed in the linear domain from
/// pre-exponentiated copies (terms lost to underflow are below `e^{-108}`
/// relative). Otherwise it falls back to a max-shifted sum that skips terms
/// below `e^{-50}` of the maximum.
pub(crate) fn log_convolve(a: &[f64], b: &[f64], len: usize) -> Vec<f64> {
    use rayon::prelude::*;
    let amax = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bmax = b.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if amax == f64::NEG_INFINITY || bmax == f64::NEG_INFINITY {
        return vec![f64::NEG_INFINITY; len];
    }
    let ea: Vec<f64> = a.iter().map(|&x| (x - amax).exp()).collect();
    let eb: Vec<f64> = b.iter().map(|&x| (x - bmax).exp()).collect();
    let support: Vec<usize> = (0..a.len()).filter(|&j| a[j] > f64::NEG_INFINITY).collect();
    let sparse = support.len() * 4 < a.len();
    let cell = |m: usize| -> f64 {
        let lo = (m + 1).saturating_sub(b.len());
        let hi = m.min(a.len() - 1);
        if lo > hi {
            return f64::NEG_INFINITY;
        }
        if sparse {
            let mut best = f64::NEG_INFINITY;
            for &j in support.iter().filter(|&&j| j >= lo && j <= hi) {
                best = best.max(a[j] + b[m - j]);
            }
            if best == f64::NEG_INFINITY {
                return best;
            }
            let s: f64 = support
                .iter()
                .filter(|&&j| j >= lo && j <= hi)
                .map(|&j| (a[j] + b[m - j] - best).exp())
                .sum();
            return best + s.ln();
        }
        let mut best = f64::NEG_INFINITY;
        for j in lo..=hi {
            best = best.max(a[j] + b[m - j]);
        }
        if best == f64::NEG_INFINITY {
            return best;
        }
        if best - amax - bmax > -600.0 {
            let mut s = 0.0;
            for j in lo..=hi {
                s += ea[j] * eb[m - j];
            }
            s.ln() + amax + bmax
        } else {
            let mut s = 0.0;
            for j in lo..=hi {
                let x = a[j] + b[m - j] - best;
                if x > -50.0 {
                    s += x.exp();
                }
            }
            best + s.ln()
        }
    };
    (0..len).into_par_iter().map(cell).collect()
}

/// Draw an index with probability proportional to `exp(log_w[i])`.
/// Panics if every entry is `-inf`.
pub(crate) fn sample_log_weights<R: Rng + ?Sized>(log_w: &[f64], rng: &mut R) -> usize {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!(max > f64::NEG_INFINITY, "no positive weight to sample from");
    let total: f64 = log_w.iter().map(|&x| (x - max).exp()).sum();
    let mut u = rng.gen::<f64>() * total;
    let mut last = 0;
    for (i, &x) in log_w.iter().enumerate() {
        let p = (x - max).exp();
        if p > 0.0 {
            last = i;
            if u < p {
                return i;
            }
            u -= p;
        }
    }
    last
}

/// Serde helpers that write non-finite floats as the strings `"inf"`,
/// `"-inf"` and `"nan"` (plain JSON has no representation for them).
pub(crate) mod ext_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("bad float `{other}`"))),
            },
        }
    }

    pub mod option {
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            match x {
                Some(v) => super::serialize(v, s),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            #[derive(Deserialize)]
            struct W(#[serde(deserialize_with = "super::deserialize")] f64);
            Ok(Option::<W>::deserialize(d)?.map(|w| w.0))
        }
    }
}
