//! Run configuration, the `sample` / `verify` / `experiment` / `stats`
//! commands, and the exhaustive verification driver.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bijections::{bdg_forward, bdg_inverse_with_fault, gn_forward, gn_inverse, Fault, Mobile};
use crate::error::{Error, Result};
use crate::gw::{
    conditioned_gw_vs_nu, exact_leaf_check, geometric_half_rational, leaf_count_checks, solve_z, two_type_tv, GwSpec,
};
use crate::io::{Format, Manifest, SampleRecord, SCHEMA_VERSION};
use crate::labels::{count_labelings, enumerate_labelings};
use crate::planarmap::PlanarMap;
use crate::rng::{replicate_rng, ALGORITHM};
use crate::stats::{
    distortion_record, map_radius, run_degree_profile, run_distortion, run_label_moments, run_prop_scgw,
    run_prop_super, run_thm_dinv, run_thm_inv, ExperimentSummary, Model,
};
use crate::trees::{condensate_view, enumerate_trees, sampler_cap};
use crate::weights::{Offspring, WeightSequence};

pub const TOOL: &str = "condmap";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Experiments understood by [`cmd_experiment`].
pub const EXPERIMENTS: &[&str] = &[
    "prop-scgw",
    "prop-super",
    "thm-inv",
    "thm-dinv",
    "distortion",
    "label-moments",
    "degree-profile",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub family: Option<String>,
    pub n: usize,
    pub replicates: usize,
    pub seed: Option<u64>,
    pub t_grid: Vec<f64>,
    pub out_dir: PathBuf,
    pub format: Format,
    /// Sampler cap; `None` means `CONDMAP_CAP_N` or the built-in default.
    pub cap: Option<usize>,
    pub threads: Option<usize>,
    pub oracle_m: usize,
    pub oracle_draws: usize,
    pub labelings: usize,
    /// Compute the exact distortion in the `distortion` experiment.
    pub exact_distortion: bool,
    pub fault: Option<Fault>,
    pub input: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: String::new(),
            family: None,
            n: 1000,
            replicates: 10,
            seed: None,
            t_grid: vec![0.25, 0.5, 0.75],
            out_dir: PathBuf::from("out"),
            format: Format::Json,
            cap: None,
            threads: None,
            oracle_m: 10_000,
            oracle_draws: 500,
            labelings: 50,
            exact_distortion: false,
            fault: None,
            input: None,
        }
    }
}

impl RunConfig {
    pub fn cap(&self) -> usize {
        self.cap.unwrap_or_else(sampler_cap)
    }

    fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Invalid(format!("`{}` needs an explicit --seed", self.command)))
    }

    fn weights(&self) -> Result<WeightSequence> {
        let spec = self
            .family
            .as_deref()
            .ok_or_else(|| Error::Invalid(format!("`{}` needs --family", self.command)))?;
        WeightSequence::parse(spec)
    }

    fn check_cap(&self) -> Result<()> {
        if self.n > self.cap() {
            return Err(Error::CapExceeded {
                n: self.n,
                cap: self.cap(),
            });
        }
        Ok(())
    }

    fn model(&self) -> Result<Model> {
        self.check_cap()?;
        Model::with_cap(self.weights()?, self.n, self.cap())
    }
}

/// Run `f` on a pool of `threads` workers (the global pool when `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Sample `replicates` maps and write one file per replicate plus
/// `manifest.json`. Nothing is written unless every replicate succeeds.
pub fn cmd_sample(cfg: &RunConfig) -> Result<PathBuf> {
    let seed = cfg.seed()?;
    let model = cfg.model()?;
    if cfg.n == 0 {
        return Err(Error::Invalid("maps need n >= 1".into()));
    }
    let family = model.weights.spec_string();
    let files = with_threads(cfg.threads, || {
        (0..cfg.replicates)
            .into_par_iter()
            .map(|i| {
                let mut rng = replicate_rng(seed, i as u64);
                let mobile = model.sample_mobile(&mut rng);
                let eps = if rand::Rng::gen::<bool>(&mut rng) { 1 } else { -1 };
                let mobile = mobile.with_epsilon(eps)?;
                let map = bdg_inverse_with_fault(&mobile, None)?;
                let rec = SampleRecord {
                    schema_version: SCHEMA_VERSION,
                    family: family.clone(),
                    seed,
                    replicate: i as u64,
                    mobile,
                    map,
                };
                Ok((format!("rep_{i:05}.{}", cfg.format.extension()), rec.encode(cfg.format)))
            })
            .collect::<Result<Vec<_>>>()
    })??;
    create_dir(&cfg.out_dir)?;
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        tool: TOOL.into(),
        version: VERSION.into(),
        rng: ALGORITHM.into(),
        command: "sample".into(),
        family,
        n: cfg.n,
        replicates: cfg.replicates,
        seed,
        format: cfg.format,
        files: Vec::new(),
    };
    manifest.write_with_files(&cfg.out_dir, &files)
}

/// One line of the verification report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyCheck {
    pub name: String,
    pub instances: u64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Value>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl VerifyCheck {
    fn new(name: impl Into<String>, instances: u64, counterexample: Option<Value>) -> Self {
        Self {
            name: name.into(),
            instances,
            passed: counterexample.is_none(),
            counterexample,
            detail: String::new(),
        }
    }

    fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = d.into();
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<Fault>,
    pub checks: Vec<VerifyCheck>,
}

impl VerifyReport {
    pub fn check(&self, name: &str) -> Option<&VerifyCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// The first failing check's counterexample.
    pub fn first_counterexample(&self) -> Option<(&str, &Value)> {
        self.checks
            .iter()
            .find_map(|c| c.counterexample.as_ref().map(|v| (c.name.as_str(), v)))
    }
}

/// `G_n` round trip over every tree with `n` edges.
pub fn check_gn_round_trip(n: usize) -> Result<VerifyCheck> {
    let trees = enumerate_trees(n)?;
    let bad = trees
        .iter()
        .find(|t| gn_inverse(&gn_forward(t)) != **t || gn_forward(&gn_inverse(t)) != **t)
        .map(|t| json!({ "outdeg": t.outdeg_seq() }));
    Ok(VerifyCheck::new(
        format!("gn_round_trip[n={n}]"),
        trees.len() as u64,
        bad,
    ))
}

/// Every `(tree, labelling, ε)` with `n` edges.
pub fn all_mobiles(n: usize) -> Result<Vec<Mobile>> {
    let mut out = Vec::new();
    for t in enumerate_trees(n)? {
        for labels in enumerate_labelings(&t) {
            for eps in [1, -1] {
                out.push(Mobile::new(t.clone(), labels.clone(), eps)?);
            }
        }
    }
    Ok(out)
}

/// BDG round trip, map certificates and injectivity over all mobiles with
/// `n` edges.
pub fn check_bdg_round_trip(n: usize, fault: Option<Fault>) -> Result<VerifyCheck> {
    let mobiles = all_mobiles(n)?;
    let mut codes = HashSet::new();
    let mut bad = None;
    for m in &mobiles {
        let fail = match bdg_inverse_with_fault(m, fault) {
            Err(e) => Some(json!({ "mobile": m, "error": e.to_string() })),
            Ok(map) => {
                let report = map.validate();
                if !report.passed() {
                    Some(json!({ "mobile": m, "map": map, "report": report }))
                } else if !codes.insert(map.canonical_code()) {
                    Some(json!({ "mobile": m, "map": map, "error": "duplicate image" }))
                } else {
                    match bdg_forward(&map) {
                        Ok(back) if back == *m => None,
                        Ok(back) => Some(json!({ "mobile": m, "map": map, "back": back })),
                        Err(e) => Some(json!({ "mobile": m, "map": map, "error": e.to_string() })),
                    }
                }
            }
        };
        if fail.is_some() {
            bad = fail;
            break;
        }
    }
    Ok(VerifyCheck::new(
        format!("bdg_round_trip[n={n}]"),
        mobiles.len() as u64,
        bad,
    ))
}

/// Enumerated labellings versus the product formula.
pub fn check_label_counts(n: usize) -> Result<VerifyCheck> {
    let trees = enumerate_trees(n)?;
    let bad = trees
        .iter()
        .find(|t| num_bigint::BigUint::from(enumerate_labelings(t).len()) != count_labelings(t))
        .map(|t| json!({ "outdeg": t.outdeg_seq() }));
    Ok(VerifyCheck::new(format!("label_count[n={n}]"), trees.len() as u64, bad))
}

fn binomial(n: u64, k: u64) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, j| acc * BigInt::from(n - j) / BigInt::from(j + 1))
}

/// `w_i = i^{-3}` exactly.
fn pl3_w(i: usize) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(i as u64).pow(3))
}

/// `q_i = w_i / C(2i-1, i-1)` for `w_i = i^{-3}`, exactly.
pub fn pl3_q(i: usize) -> BigRational {
    pl3_w(i) / BigRational::from_integer(binomial(2 * i as u64 - 1, i as u64 - 1))
}

/// Map-side partition function `Σ_m Π_f q_{deg f / 2}` over the images of
/// all `(mobile, ε)`, and `2 Σ_τ Π_black w_{deg}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transport {
    pub n: usize,
    pub maps: u64,
    pub map_side: BigRational,
    pub tree_side: BigRational,
}

pub fn weight_transport(n: usize) -> Result<Transport> {
    let mut map_side = BigRational::zero();
    let mut tree_side = BigRational::zero();
    let mut maps = 0;
    for t in enumerate_trees(n)? {
        tree_side += t
            .black_vertices()
            .into_iter()
            .map(|v| pl3_w(t.degree(v)))
            .fold(BigRational::one(), |a, b| a * b);
        for labels in enumerate_labelings(&t) {
            for eps in [1, -1] {
                let map = bdg_inverse_with_fault(&Mobile::new(t.clone(), labels.clone(), eps)?, None)?;
                map_side += map
                    .face_degrees()
                    .into_iter()
                    .map(|d| pl3_q(d / 2))
                    .fold(BigRational::one(), |a, b| a * b);
                maps += 1;
            }
        }
    }
    Ok(Transport {
        n,
        maps,
        map_side,
        tree_side: tree_side * BigRational::from_integer(BigInt::from(2)),
    })
}

/// `d(v, ρ) = ℓ(v) - min ℓ + 1` for every white vertex and `d(ρ, ρ) = 0`;
/// returns the first offending vertex.
pub fn distance_identity(m: &Mobile, map: &PlanarMap) -> Option<Value> {
    let d = map.bfs_distances(map.rho());
    let min = *m.labels().iter().min().unwrap();
    if d[map.rho()] != 0 {
        return Some(json!({ "vertex": map.rho(), "bfs": d[map.rho()], "expected": 0 }));
    }
    m.labels().iter().enumerate().find_map(|(i, &l)| {
        let want = l - min + 1;
        (d[i] as i64 != want).then(|| json!({ "vertex": i, "bfs": d[i], "expected": want }))
    })
}

fn distance_identity_on(m: &Mobile, fault: Option<Fault>) -> Option<Value> {
    let fail = match bdg_inverse_with_fault(m, fault) {
        Ok(map) => distance_identity(m, &map),
        Err(e) => Some(json!({ "error": e.to_string() })),
    };
    fail.map(|f| json!({ "mobile": m, "failure": f }))
}

/// Distance identity on every mobile with `n_small` edges and on `reps`
/// sampled mobiles of size `n` for each family.
pub fn check_distance_identity(
    families: &[WeightSequence],
    n: usize,
    reps: usize,
    n_small: usize,
    seed: u64,
    fault: Option<Fault>,
) -> Result<VerifyCheck> {
    let mut instances = 0u64;
    for k in 1..=n_small {
        for m in all_mobiles(k)? {
            instances += 1;
            if let Some(c) = distance_identity_on(&m, fault) {
                return Ok(VerifyCheck::new("distance_identity", instances, Some(c)));
            }
        }
    }
    for w in families {
        let model = Model::new(w.clone(), n)?;
        let first = (0..reps)
            .into_par_iter()
            .map(|i| distance_identity_on(&model.sample_mobile(&mut replicate_rng(seed, i as u64)), fault))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .next();
        instances += reps as u64;
        if let Some(c) = first {
            return Ok(VerifyCheck::new(
                "distance_identity",
                instances,
                Some(json!({ "family": w.spec_string(), "case": c })),
            ));
        }
    }
    Ok(VerifyCheck::new("distance_identity", instances, None).detail(format!(
        "all mobiles with n <= {n_small}, {reps} samples at n = {n} per family"
    )))
}

/// `dis(R) <= 10 K` and the star map is a tree with `Δ` edges.
pub fn check_distortion_bound(
    families: &[WeightSequence],
    ns: &[usize],
    reps: usize,
    seed: u64,
) -> Result<VerifyCheck> {
    let mut instances = 0;
    for w in families {
        for &n in ns {
            let model = Model::new(w.clone(), n)?;
            let fails: Vec<Value> = (0..reps)
                .into_par_iter()
                .map(|i| -> Result<Option<Value>> {
                    let m = model.sample_mobile(&mut replicate_rng(seed, i as u64));
                    let cv = condensate_view(m.tree())?;
                    let rec = distortion_record(&m, &cv, true)?;
                    let ok = rec.dis.is_some_and(|d| d as i64 <= 10 * rec.k)
                        && rec.star_acyclic
                        && rec.star_edges == cv.delta_n
                        && rec.star_faces == 1;
                    Ok((!ok).then(|| json!({ "family": w.spec_string(), "mobile": m, "record": rec })))
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .flatten()
                .collect();
            instances += reps as u64;
            if let Some(f) = fails.into_iter().next() {
                return Ok(VerifyCheck::new("distortion_bound", instances, Some(f)));
            }
        }
    }
    Ok(VerifyCheck::new("distortion_bound", instances, None))
}

fn geometric_half() -> WeightSequence {
    WeightSequence::tilted_offspring(Offspring::Geometric { p0: 0.5 }).expect("valid law")
}

fn pl3() -> WeightSequence {
    WeightSequence::power_law(3.0, 1.0).expect("valid family")
}

fn factorial1() -> WeightSequence {
    WeightSequence::factorial(1.0).expect("valid family")
}

/// The Galton–Watson identities: tilt root, two-type laws, conditioned
/// laws and the leaf-count equivalence.
pub fn check_gw() -> Result<Vec<VerifyCheck>> {
    let mut out = Vec::new();
    let z = solve_z(&geometric_half())?;
    let dg = geometric_half().series(z).dg;
    let ok = (z - 2.0).abs() < 1e-12 && (dg - 1.0).abs() < 1e-10;
    out.push(VerifyCheck::new(
        "solve_z_geometric",
        1,
        (!ok).then(|| json!({ "z": z, "dg": dg })),
    ));

    let geo = GwSpec::tilt(&geometric_half(), z)?;
    let pl = GwSpec::offspring_of(&pl3())?;
    let mut tv_max: f64 = 0.0;
    let mut nu_max: f64 = 0.0;
    let mut count = 0;
    for spec in [&geo, &pl] {
        for n in 1..=5 {
            tv_max = tv_max.max(two_type_tv(spec, n)?);
        }
        for n in 1..=6 {
            nu_max = nu_max.max(conditioned_gw_vs_nu(spec, n)?);
            count += 1;
        }
    }
    out.push(
        VerifyCheck::new("two_type_law", 10, (tv_max >= 1e-10).then(|| json!({ "tv": tv_max })))
            .detail(format!("max TV {tv_max:e}")),
    );
    out.push(
        VerifyCheck::new(
            "tilt_equivalence",
            count,
            (nu_max >= 1e-10).then(|| json!({ "max_diff": nu_max })),
        )
        .detail(format!("max difference {nu_max:e}")),
    );

    let exact = exact_leaf_check(&geometric_half_rational(10), 8);
    let approx = leaf_count_checks(&pl, 8, 0, 0)?;
    let ok = exact.equal && approx.tv < 1e-10;
    out.push(
        VerifyCheck::new(
            "leaf_law_equivalence",
            2,
            (!ok).then(|| json!({ "exact": exact, "power_law_tv": approx.tv })),
        )
        .detail(format!(
            "exact rational equality {}, power-law TV {:e}",
            exact.equal, approx.tv
        )),
    );
    Ok(out)
}

/// The full exact suite. Random parts (distance identity, distortion) use
/// `seed`.
pub fn cmd_verify(cfg: &RunConfig) -> Result<VerifyReport> {
    let seed = cfg.seed.unwrap_or(0);
    let fault = cfg.fault;
    with_threads(cfg.threads, || -> Result<VerifyReport> {
        let mut checks = Vec::new();
        for n in 0..=7 {
            checks.push(check_gn_round_trip(n)?);
        }
        for n in 1..=4 {
            checks.push(check_bdg_round_trip(n, fault)?);
        }
        for n in 0..=5 {
            checks.push(check_label_counts(n)?);
        }
        for n in 1..=5 {
            let t = weight_transport(n)?;
            let bad = (t.map_side != t.tree_side)
                .then(|| json!({ "map_side": t.map_side.to_string(), "tree_side": t.tree_side.to_string() }));
            checks.push(
                VerifyCheck::new(format!("weight_transport[n={n}]"), t.maps, bad).detail(format!(
                    "Σ W = {} = {:.15e}",
                    t.map_side,
                    crate::gw::rational_to_f64(&t.map_side)
                )),
            );
        }
        let families = [pl3(), factorial1()];
        checks.push(check_distance_identity(&families, 1000, 100, 4, seed, fault)?);
        checks.push(check_distortion_bound(&families, &[50, 200], 100, seed)?);
        checks.extend(check_gw()?);
        Ok(VerifyReport {
            schema_version: SCHEMA_VERSION,
            passed: checks.iter().all(|c| c.passed),
            fault,
            checks,
        })
    })?
}

/// Dispatch to a stats runner and write `<out_dir>/<name>.{json,csv}`.
pub fn cmd_experiment(cfg: &RunConfig, name: &str) -> Result<ExperimentSummary> {
    if !EXPERIMENTS.contains(&name) {
        return Err(Error::Invalid(format!(
            "unknown experiment `{name}`; expected one of {}",
            EXPERIMENTS.join(", ")
        )));
    }
    let seed = cfg.seed()?;
    let model = cfg.model()?;
    let reps = cfg.replicates;
    let summary = with_threads(cfg.threads, || match name {
        "prop-scgw" => run_prop_scgw(&model, reps, seed),
        "prop-super" => run_prop_super(&model, reps, seed),
        "thm-inv" => run_thm_inv(&model, reps, &cfg.t_grid, seed),
        "thm-dinv" => run_thm_dinv(&model, reps, cfg.oracle_m, cfg.oracle_draws, seed),
        "distortion" => run_distortion(&model, reps, cfg.exact_distortion, seed),
        "label-moments" => run_label_moments(&model, reps, cfg.labelings, seed),
        "degree-profile" => run_degree_profile(&model, reps, seed),
        _ => unreachable!("checked above"),
    })??;
    create_dir(&cfg.out_dir)?;
    summary.write(&cfg.out_dir.join(name))?;
    Ok(summary)
}

/// Per-replicate structure of a sample directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub file: String,
    pub n_edges: usize,
    pub n_vertices: usize,
    pub n_faces: usize,
    pub max_face_degree: usize,
    pub radius: usize,
    pub valid: bool,
    pub max_abs_label: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub schema_version: u32,
    pub family: String,
    pub n: usize,
    /// Files whose hash does not match the manifest.
    pub corrupted: Vec<String>,
    pub replicates: Vec<SampleStats>,
}

/// Read a directory written by [`cmd_sample`] and summarise every map.
pub fn cmd_stats(cfg: &RunConfig) -> Result<StatsReport> {
    let dir = cfg
        .input
        .as_deref()
        .ok_or_else(|| Error::Invalid("`stats` needs --input <sample dir>".into()))?;
    let manifest = Manifest::read(&dir.join(Manifest::FILE_NAME))?;
    let corrupted = manifest.verify(dir)?;
    let replicates = manifest
        .files
        .iter()
        .map(|f| {
            let bytes = crate::io::read_file(&dir.join(&f.path))?;
            let rec = match manifest.format {
                Format::Json => serde_json::from_slice::<SampleRecord>(&bytes)?,
                Format::Bin => SampleRecord::from_bin(&bytes)?,
            };
            let map = &rec.map;
            Ok(SampleStats {
                file: f.path.clone(),
                n_edges: map.n_edges(),
                n_vertices: map.n_vertices(),
                n_faces: map.n_faces(),
                max_face_degree: map.face_degrees().last().copied().unwrap_or(0),
                radius: map_radius(map),
                valid: map.validate().passed(),
                max_abs_label: crate::labels::max_abs_label(&rec.mobile),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StatsReport {
        schema_version: SCHEMA_VERSION,
        family: manifest.family,
        n: manifest.n,
        corrupted,
        replicates,
    })
}
