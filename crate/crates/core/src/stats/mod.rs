//! Experiment runners, goodness-of-fit tests and the distortion machinery.
//!
//! Each runner draws `reps` independent replicates, replicate `i` using
//! the stream `replicate_rng(seed, i)`, so summaries do not depend on the
//! rayon thread count.

pub mod distortion;
pub mod htest;
pub mod oracle;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::bijections::{bdg_inverse, gn_inverse, Mobile};
use crate::error::{Error, Result};
use crate::io::write_new;
use crate::labels::{amplitude, distance_process, label_process, sample_labels, star_label_process};
use crate::planarmap::PlanarMap;
use crate::rng::{replicate_rng, Rng};
use crate::trees::{condensate_view, CondensateView, PlanarTree, TreeSampler};
use crate::weights::{Family, Regime, RegimeReport, WeightSequence};

pub use distortion::{
    distortion_k, distortion_record, exact_distortion, pi_map, star_map, Correspondence, DistortionRecord,
};
pub use htest::{
    chi_square_gof, chi_square_two_sample, ks_one_sample, ks_two_sample, mean_se, median, quantile, variance,
};
pub use oracle::{excursion_oracle, ExcursionSample};

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

/// Stream index reserved for the excursion oracle.
const ORACLE_STREAM: u64 = u64::MAX;

/// Regime analysis tolerance used by the runners.
const ANALYSIS_TOL: f64 = 1e-12;

/// A weight sequence with its regime report and a sampler for `ν_n`.
pub struct Model {
    pub weights: WeightSequence,
    pub report: RegimeReport,
    pub sampler: TreeSampler,
}

impl Model {
    pub fn new(weights: WeightSequence, n: usize) -> Result<Self> {
        Self::with_cap(weights, n, crate::trees::sampler_cap())
    }

    pub fn with_cap(weights: WeightSequence, n: usize, cap: usize) -> Result<Self> {
        let report = weights.analyze(ANALYSIS_TOL)?;
        let sampler = TreeSampler::with_cap(n, &weights, cap)?;
        Ok(Self {
            weights,
            report,
            sampler,
        })
    }

    pub fn n(&self) -> usize {
        self.sampler.n()
    }

    /// `κ`, taken as 0 when `R = 0`.
    pub fn kappa(&self) -> f64 {
        match self.report.regime {
            Regime::C2Condensation => 0.0,
            _ => self.report.kappa,
        }
    }

    pub fn amplitude(&self) -> f64 {
        amplitude(self.n(), self.kappa())
    }

    fn condensation(&self) -> Result<()> {
        match self.report.regime {
            Regime::C1Condensation | Regime::C2Condensation => Ok(()),
            r => Err(Error::Regime(format!(
                "{} is {r:?}, a condensation regime is required",
                self.weights.spec_string()
            ))),
        }
    }

    /// A two-coloured tree `τ = G_n⁻¹(T)` with `T ~ ν_n`.
    pub fn sample_two_coloured(&self, rng: &mut Rng) -> PlanarTree {
        gn_inverse(&self.sampler.sample_tree(rng))
    }

    /// A uniformly labelled mobile over a fresh `τ`, with `ε = +1`.
    pub fn sample_mobile(&self, rng: &mut Rng) -> Mobile {
        let t = self.sample_two_coloured(rng);
        let labels = sample_labels(&t, rng);
        Mobile::new(t, labels, 1).expect("sampled labels obey the increment rule")
    }
}

/// One reported statistic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatEntry {
    pub name: String,
    pub estimate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks_statistic: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
}

impl StatEntry {
    fn new(name: impl Into<String>, estimate: f64) -> Self {
        Self {
            name: name.into(),
            estimate,
            std_error: None,
            target: None,
            ks_statistic: None,
            p_value: None,
        }
    }

    fn mean(name: impl Into<String>, xs: &[f64]) -> Self {
        let (m, se) = mean_se(xs);
        Self {
            std_error: se.is_finite().then_some(se),
            ..Self::new(name, m)
        }
    }

    fn target(mut self, t: f64) -> Self {
        self.target = Some(t);
        self
    }

    fn ks(mut self, (d, p): (f64, f64)) -> Self {
        self.ks_statistic = Some(d);
        self.p_value = Some(p);
        self
    }
}

/// Per-replicate values, one row per replicate.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RawTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl RawTable {
    fn new(columns: &[&str], rows: Vec<Vec<f64>>) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows,
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("replicate,");
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for (i, r) in self.rows.iter().enumerate() {
            s.push_str(&i.to_string());
            for x in r {
                s.push(',');
                s.push_str(&x.to_string());
            }
            s.push('\n');
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub schema_version: u32,
    pub experiment: String,
    pub family: String,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub kappa: f64,
    pub stats: Vec<StatEntry>,
    #[serde(skip)]
    pub raw: RawTable,
}

impl ExperimentSummary {
    fn new(experiment: &str, model: &Model, reps: usize, seed: u64, stats: Vec<StatEntry>, raw: RawTable) -> Self {
        Self {
            schema_version: SUMMARY_SCHEMA_VERSION,
            experiment: experiment.into(),
            family: model.weights.spec_string(),
            n: model.n(),
            replicates: reps,
            seed,
            kappa: model.kappa(),
            stats,
            raw,
        }
    }

    pub fn stat(&self, name: &str) -> Option<&StatEntry> {
        self.stats.iter().find(|s| s.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serialises")
    }

    /// Write `<stem>.json` (summary) and `<stem>.csv` (raw rows); neither
    /// may exist yet.
    pub fn write(&self, stem: &Path) -> Result<()> {
        write_new(&stem.with_extension("json"), self.to_json().as_bytes())?;
        write_new(&stem.with_extension("csv"), self.raw.to_csv().as_bytes())
    }
}

fn replicate_rows<F>(reps: usize, seed: u64, f: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&mut Rng) -> Result<Vec<f64>> + Sync,
{
    if reps == 0 {
        return Err(Error::Invalid("at least one replicate is required".into()));
    }
    (0..reps)
        .into_par_iter()
        .map(|i| f(&mut replicate_rng(seed, i as u64)))
        .collect()
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn view(t: &PlanarTree) -> Result<CondensateView> {
    condensate_view(t)
}

/// `Δ_n/n`, `N°_n/n` and the size of the first piece under the condensate,
/// for a family in regime C1.
pub fn run_prop_scgw(model: &Model, reps: usize, seed: u64) -> Result<ExperimentSummary> {
    if model.report.regime != Regime::C1Condensation {
        return Err(Error::Regime(format!(
            "{} is {:?}, regime C1 is required",
            model.weights.spec_string(),
            model.report.regime
        )));
    }
    let n = model.n() as f64;
    let rows = replicate_rows(reps, seed, |rng| {
        let t = model.sample_two_coloured(rng);
        let cv = view(&t)?;
        let sup_white = cv.white_counts[1..].iter().copied().max().unwrap_or(0);
        Ok(vec![
            cv.delta_n as f64 / n,
            cv.n_white as f64 / n,
            cv.subtree_sizes.get(1).copied().unwrap_or(0) as f64,
            sup_white as f64,
        ])
    })?;
    let raw = RawTable::new(&["delta_over_n", "white_over_n", "tau1_edges", "sup_white_piece"], rows);
    let col = |c: &str| raw.column(c).unwrap();
    let mut stats = vec![
        StatEntry::mean("delta_over_n", &col("delta_over_n")).target(1.0 - model.kappa()),
        StatEntry::mean("white_over_n", &col("white_over_n")),
        StatEntry::new("tau1_edges_q99", quantile(&col("tau1_edges"), 0.99)),
        StatEntry::mean("sup_white_piece", &col("sup_white_piece")),
    ];
    if let Some(p0) = model.report.p0 {
        stats[1].target = Some(p0);
    }
    Ok(ExperimentSummary::new("prop-scgw", model, reps, seed, stats, raw))
}

/// Law of `n - Δ_n` for the factorial family, with the frequencies of the
/// events "s is the only black child of the root" and
/// "`sup_i N°_{n,i} ≤ ⌊1/α⌋ ∨ 1`".
pub fn run_prop_super(model: &Model, reps: usize, seed: u64) -> Result<ExperimentSummary> {
    let alpha = match model.weights.family() {
        Family::Factorial { alpha } => *alpha,
        _ => {
            return Err(Error::Regime(format!(
                "{} is not a factorial family",
                model.weights.spec_string()
            )))
        }
    };
    let bound = ((1.0 / alpha).floor() as usize).max(1);
    let n = model.n();
    let rows = replicate_rows(reps, seed, |rng| {
        let t = model.sample_two_coloured(rng);
        let cv = view(&t)?;
        let unique_child = t.children(0) == [cv.s_index];
        let sup_white = cv.white_counts[1..].iter().copied().max().unwrap_or(0);
        Ok(vec![
            n as f64 - cv.delta_n as f64,
            indicator(cv.delta_n == n),
            indicator(unique_child),
            indicator(sup_white <= bound),
            cv.n_white as f64 / n as f64,
        ])
    })?;
    let raw = RawTable::new(
        &[
            "n_minus_delta",
            "delta_is_n",
            "s_unique_root_child",
            "sup_bound_holds",
            "white_over_n",
        ],
        rows,
    );
    let col = |c: &str| raw.column(c).unwrap();
    let gap = col("n_minus_delta");
    let var = variance(&gap);
    let stats = vec![
        StatEntry::mean("n_minus_delta_mean", &gap),
        StatEntry {
            std_error: Some(var * (2.0 / (gap.len() as f64 - 1.0)).sqrt()),
            ..StatEntry::new("n_minus_delta_var", var)
        },
        StatEntry::mean("n_minus_delta_zero", &col("delta_is_n")),
        StatEntry::mean("s_unique_root_child", &col("s_unique_root_child")),
        StatEntry::mean("sup_bound_holds", &col("sup_bound_holds")),
        StatEntry::mean("white_over_n", &col("white_over_n")).target(1.0),
    ];
    Ok(ExperimentSummary::new("prop-super", model, reps, seed, stats, raw))
}

fn normal_cdf(var: f64) -> impl Fn(f64) -> f64 {
    let d = Normal::new(0.0, var.sqrt()).expect("positive variance");
    move |x| d.cdf(x)
}

fn variance_entry(name: String, xs: &[f64], target: f64) -> StatEntry {
    let v = variance(xs);
    StatEntry {
        std_error: Some(v * (2.0 / (xs.len() as f64 - 1.0)).sqrt()),
        ..StatEntry::new(name, v)
    }
    .target(target)
}

/// Standardised `L_n(tN°)` and `L*_n(tΔ_n)` at each `t`, tested against
/// the bridge marginal `Normal(0, t(1-t))`.
pub fn run_thm_inv(model: &Model, reps: usize, t_grid: &[f64], seed: u64) -> Result<ExperimentSummary> {
    model.condensation()?;
    if t_grid.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
        return Err(Error::Invalid("t_grid values must lie in (0, 1)".into()));
    }
    let kappa = model.kappa();
    let rows = replicate_rows(reps, seed, |rng| {
        let m = model.sample_mobile(rng);
        let cv = view(m.tree())?;
        let l = label_process(&m, kappa);
        let ls = star_label_process(&m, &cv, kappa);
        let mut row: Vec<f64> = t_grid.iter().map(|&t| l.rescaled(t)).collect();
        row.extend(t_grid.iter().map(|&t| ls.rescaled(t)));
        Ok(row)
    })?;
    let mut columns: Vec<String> = t_grid.iter().map(|t| format!("l_{t}")).collect();
    columns.extend(t_grid.iter().map(|t| format!("lstar_{t}")));
    let raw = RawTable { columns, rows };
    let mut stats = Vec::new();
    for prefix in ["l", "lstar"] {
        for &t in t_grid {
            let name = format!("{prefix}_{t}");
            let xs = raw.column(&name).unwrap();
            let var = t * (1.0 - t);
            stats.push(variance_entry(format!("{name}_var"), &xs, var).ks(ks_one_sample(&xs, normal_cdf(var))));
        }
    }
    Ok(ExperimentSummary::new("thm-inv", model, reps, seed, stats, raw))
}

/// `max_v d(v, ρ)` from BFS on the map.
pub fn map_radius(map: &PlanarMap) -> usize {
    map.bfs_distances(map.rho()).into_iter().max().unwrap_or(0)
}

/// Normalised map radius and the shifted distance process at `t = 1/2`,
/// each compared with the discrete excursion oracle by a two-sample KS test.
pub fn run_thm_dinv(
    model: &Model,
    reps: usize,
    oracle_m: usize,
    oracle_draws: usize,
    seed: u64,
) -> Result<ExperimentSummary> {
    model.condensation()?;
    let kappa = model.kappa();
    let amp = model.amplitude();
    let rows = replicate_rows(reps, seed, |rng| {
        let m = model.sample_mobile(rng);
        let map = bdg_inverse(&m)?;
        let radius = map_radius(&map);
        let d = distance_process(&m, kappa);
        Ok(vec![
            radius as f64 / amp,
            d.rescaled(0.5),
            radius as f64,
            d.min() as f64,
        ])
    })?;
    let raw = RawTable::new(&["radius", "d_half", "radius_raw", "d_min"], rows);
    let col = |c: &str| raw.column(c).unwrap();
    let oracle = excursion_oracle(oracle_m, oracle_draws, &mut replicate_rng(seed, ORACLE_STREAM));
    let o_max: Vec<f64> = oracle.iter().map(|e| e.max).collect();
    let o_half: Vec<f64> = oracle.iter().map(|e| e.at_half).collect();
    let (radius, d_half) = (col("radius"), col("d_half"));
    let stats = vec![
        StatEntry::mean("radius", &radius)
            .target(mean_se(&o_max).0)
            .ks(ks_two_sample(&radius, &o_max)),
        StatEntry::mean("d_half", &d_half)
            .target(mean_se(&o_half).0)
            .ks(ks_two_sample(&d_half, &o_half)),
        StatEntry::new(
            "radius_raw_min",
            col("radius_raw").into_iter().fold(f64::INFINITY, f64::min),
        ),
        StatEntry::new("d_min_max", col("d_min").into_iter().fold(f64::NEG_INFINITY, f64::max)),
        StatEntry::new("d_min_min", col("d_min").into_iter().fold(f64::INFINITY, f64::min)),
    ];
    Ok(ExperimentSummary::new("thm-dinv", model, reps, seed, stats, raw))
}

/// `K`, the exact distortion (when `with_dis`) and the star map checks.
pub fn run_distortion(model: &Model, reps: usize, with_dis: bool, seed: u64) -> Result<ExperimentSummary> {
    let sqrt_n = (model.n() as f64).sqrt();
    let rows = replicate_rows(reps, seed, |rng| {
        let m = model.sample_mobile(rng);
        let cv = view(m.tree())?;
        let rec = distortion_record(&m, &cv, with_dis)?;
        let dis = rec.dis.map_or(f64::NAN, |d| d as f64);
        let bound = rec.dis.map_or(f64::NAN, |d| indicator(d as i64 <= 10 * rec.k));
        let star_ok = rec.star_acyclic && rec.star_edges == cv.delta_n && rec.star_faces == 1;
        Ok(vec![
            rec.k as f64,
            rec.k as f64 / sqrt_n,
            dis,
            bound,
            indicator(star_ok),
        ])
    })?;
    let raw = RawTable::new(&["k", "k_over_sqrt_n", "dis", "bound_holds", "star_ok"], rows);
    let col = |c: &str| raw.column(c).unwrap();
    let mut stats = vec![
        StatEntry::new("k_over_sqrt_n_median", median(&col("k_over_sqrt_n"))),
        StatEntry::mean("star_ok", &col("star_ok")).target(1.0),
    ];
    if with_dis {
        stats.push(StatEntry::mean("bound_holds", &col("bound_holds")).target(1.0));
        stats.push(StatEntry::mean("dis", &col("dis")));
    }
    Ok(ExperimentSummary::new("distortion", model, reps, seed, stats, raw))
}

/// `E sup|ℓ|³ / n^{3/2}` with `labelings` label draws per tree.
pub fn run_label_moments(model: &Model, trees: usize, labelings: usize, seed: u64) -> Result<ExperimentSummary> {
    let scale = (model.n() as f64).powf(1.5);
    let rows = replicate_rows(trees, seed, |rng| {
        let t = model.sample_two_coloured(rng);
        let total: f64 = (0..labelings.max(1))
            .map(|_| {
                let labels = sample_labels(&t, rng);
                labels.iter().map(|l| l.abs()).max().unwrap_or(0).pow(3) as f64
            })
            .sum();
        Ok(vec![total / labelings.max(1) as f64 / scale])
    })?;
    let raw = RawTable::new(&["sup_abs_label_cubed_scaled"], rows);
    let stats = vec![StatEntry::mean(
        "sup_abs_label_cubed_scaled",
        &raw.column("sup_abs_label_cubed_scaled").unwrap(),
    )];
    Ok(ExperimentSummary::new("label-moments", model, trees, seed, stats, raw))
}

/// Largest face degree over `2n` and its multiplicity.
pub fn run_degree_profile(model: &Model, reps: usize, seed: u64) -> Result<ExperimentSummary> {
    let n = model.n() as f64;
    let rows = replicate_rows(reps, seed, |rng| {
        let map = bdg_inverse(&model.sample_mobile(rng))?;
        let valid = map.validate().passed();
        let p = map.degree_profile();
        Ok(vec![
            p.max_face as f64 / (2.0 * n),
            p.max_multiplicity as f64,
            indicator(valid),
        ])
    })?;
    let raw = RawTable::new(&["max_face_over_2n", "max_multiplicity", "valid"], rows);
    let col = |c: &str| raw.column(c).unwrap();
    let mut max_face = StatEntry::mean("max_face_over_2n", &col("max_face_over_2n"));
    if model.report.regime == Regime::C1Condensation || model.report.regime == Regime::C2Condensation {
        max_face = max_face.target(1.0 - model.kappa());
    }
    let stats = vec![
        max_face,
        StatEntry::mean("max_multiplicity", &col("max_multiplicity")),
        StatEntry::mean("valid", &col("valid")).target(1.0),
    ];
    Ok(ExperimentSummary::new("degree-profile", model, reps, seed, stats, raw))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pl(n: usize) -> Model {
        Model::new(WeightSequence::power_law(3.0, 1.0).unwrap(), n).unwrap()
    }

    #[test]
    fn runners_are_deterministic_across_thread_counts() {
        let model = pl(300);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| run_thm_dinv(&model, 40, 100, 50, 9).unwrap());
        let b = three.install(|| run_thm_dinv(&model, 40, 100, 50, 9).unwrap());
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.raw, b.raw);
    }

    #[test]
    fn scgw_rejects_non_c1() {
        let model = Model::new(WeightSequence::factorial(1.0).unwrap(), 50).unwrap();
        assert!(matches!(run_prop_scgw(&model, 5, 1), Err(Error::Regime(_))));
        assert!(run_prop_super(&pl(50), 5, 1).is_err());
    }

    #[test]
    fn dinv_trivial_bounds() {
        let s = run_thm_dinv(&pl(400), 30, 100, 30, 3).unwrap();
        assert!(s.stat("radius_raw_min").unwrap().estimate >= 1.0);
        assert_eq!(s.stat("d_min_max").unwrap().estimate, 1.0);
        assert_eq!(s.stat("d_min_min").unwrap().estimate, 1.0);
        let p = s.stat("radius").unwrap().p_value.unwrap();
        assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn bridge_symmetry() {
        let s = run_thm_inv(&pl(2000), 400, &[0.2, 0.8, 0.01], 5).unwrap();
        let a = s.stat("l_0.2_var").unwrap();
        let b = s.stat("l_0.8_var").unwrap();
        let se = (a.std_error.unwrap().powi(2) + b.std_error.unwrap().powi(2)).sqrt();
        assert!((a.estimate - b.estimate).abs() < 2.0 * se + 0.01, "{a:?} {b:?}");
        assert!(s.stat("l_0.01_var").unwrap().estimate < 0.02);
    }

    #[test]
    fn summary_round_trips_and_csv_has_one_row_per_replicate() {
        let s = run_prop_scgw(&pl(200), 12, 4).unwrap();
        let back: ExperimentSummary = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(back.stats, s.stats);
        assert_eq!(s.raw.to_csv().lines().count(), 13);
        for st in &s.stats {
            if let Some(p) = st.p_value {
                assert!((0.0..=1.0).contains(&p));
            }
        }
    }

    #[test]
    fn star_maps_are_trees() {
        let s = run_distortion(&pl(1000), 100, false, 8).unwrap();
        assert_eq!(s.stat("star_ok").unwrap().estimate, 1.0);
    }
}
