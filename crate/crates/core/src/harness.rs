//! Batch experiments: validated JSON specs, deterministic parallel runs,
//! decomposition audits, and bit-stable CSV/JSON reports.
//!
//! Spec schema `wnc-spec/1`:
//!
//! ```json
//! {
//!   "schema": "wnc-spec/1",
//!   "generator": { "name": "lp_basis", "params": { "p": 2 } },
//!   "dimensions": [2, 3, 4],
//!   "instances": 1,
//!   "quantities": [
//!     { "name": "uwn_profile", "args": [1, 2], "mode": "exact" },
//!     { "name": "dz_index", "eps": 0.49 }
//!   ],
//!   "seed": 7,
//!   "mode": "exact",
//!   "budgets": { "search": 10000000, "samples": 256 },
//!   "outputs": { "csv": "out/report.csv", "json": "out/report.json" }
//! }
//! ```
//!
//! Generators (`dimension` is the swept value):
//!
//! | name | params | instance |
//! |------|--------|----------|
//! | `lp_basis` | `p` | unit vectors of `lp(p)^d` |
//! | `random_points` | `p`, `count` | seeded points in `[-1,1]^d` |
//! | `characteristic_family` | `count`, `min_size`, `max_size` | indicators of a seeded family over `0..d` in `lp(∞)` |
//! | `dyadic_tree` | `eps` | separated tree of height `d` |
//!
//! Quantities: `uwn_profile`, `cesaro_subset_profile`, `cesaro_prefix_profile`,
//! `overlap_profile` (characteristic families only), `chain_value`,
//! `separation_value` emit one record per entry of `args`; `dz_index`
//! (needs `eps`) and `type_ratio` (needs `p`) emit a single record with
//! argument 0.
//!
//! Each instance draws its randomness from a seed hashed from the spec seed
//! and the instance index, so thread count never changes the output.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::dentability::{build_dyadic_tree, dz_index, DerivationConfig};
use crate::error::{Error, Result};
use crate::profiles::{
    cesaro_prefix_profile, cesaro_subset_profile, chain_value, separation_value, uwn_profile, Profile, SearchConfig,
    SearchMode,
};
use crate::sets::{
    characteristic_family, lp_basis, overlap_profile, random_point_set, type_constant_estimate, SetFamily,
};
use crate::space::{Exponent, PointSet, SpaceSpec};

pub const SPEC_SCHEMA: &str = "wnc-spec/1";
pub const REPORT_SCHEMA: &str = "wnc-report/1";

pub const GENERATORS: [&str; 4] = ["lp_basis", "random_points", "characteristic_family", "dyadic_tree"];
pub const QUANTITIES: [&str; 8] = [
    "uwn_profile",
    "cesaro_subset_profile",
    "cesaro_prefix_profile",
    "overlap_profile",
    "chain_value",
    "separation_value",
    "dz_index",
    "type_ratio",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub name: String,
    #[serde(default = "empty_object")]
    pub params: serde_json::Value,
}

fn empty_object() -> serde_json::Value {
    serde_json::Value::Object(Default::default())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantitySpec {
    pub name: String,
    #[serde(default = "default_args")]
    pub args: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<SearchMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

fn default_args() -> Vec<usize> {
    vec![1]
}

impl QuantitySpec {
    pub fn new(name: &str, args: Vec<usize>) -> Self {
        QuantitySpec { name: name.into(), args, mode: None, eps: None, p: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    /// Cap on planned solver calls per exact search.
    #[serde(default = "default_search")]
    pub search: u64,
    /// Samples for greedy profiles and sampled sign patterns.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_search() -> u64 {
    10_000_000
}

fn default_samples() -> usize {
    256
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets { search: default_search(), samples: default_samples() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub schema: String,
    pub generator: GeneratorSpec,
    pub dimensions: Vec<usize>,
    #[serde(default = "one")]
    pub instances: usize,
    #[serde(default)]
    pub quantities: Vec<QuantitySpec>,
    pub seed: u64,
    /// Default mode for quantities without their own.
    #[serde(default = "exact")]
    pub mode: SearchMode,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub outputs: Outputs,
}

fn one() -> usize {
    1
}

fn exact() -> SearchMode {
    SearchMode::Exact
}

fn spec_err(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::InvalidSpec { field: field.into(), message: message.into() }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LpParams {
    p: Exponent,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RandomParams {
    p: Exponent,
    count: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyParams {
    count: usize,
    min_size: usize,
    max_size: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeParams {
    eps: f64,
}

fn params<T: DeserializeOwned>(v: &serde_json::Value) -> Result<T> {
    serde_json::from_value(v.clone()).map_err(|e| spec_err("generator.params", e.to_string()))
}

struct Instance {
    points: PointSet,
    family: Option<SetFamily>,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = serde_json::from_str(text).map_err(|e| spec_err("spec", e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SPEC_SCHEMA {
            return Err(spec_err("schema", format!("expected {SPEC_SCHEMA:?}, found {:?}", self.schema)));
        }
        let g = &self.generator;
        match g.name.as_str() {
            "lp_basis" => {
                params::<LpParams>(&g.params)?;
            }
            "random_points" => {
                let r = params::<RandomParams>(&g.params)?;
                if r.count == 0 {
                    return Err(spec_err("generator.params.count", "must be positive"));
                }
            }
            "characteristic_family" => {
                let f = params::<FamilyParams>(&g.params)?;
                if f.count == 0 || f.min_size == 0 || f.min_size > f.max_size {
                    return Err(spec_err("generator.params", "need count >= 1 and 1 <= min_size <= max_size"));
                }
                if let Some(&d) = self.dimensions.iter().find(|&&d| d < f.max_size) {
                    return Err(spec_err("dimensions", format!("universe {d} is smaller than max_size")));
                }
            }
            "dyadic_tree" => {
                let t = params::<TreeParams>(&g.params)?;
                if !(t.eps > 0.0 && t.eps.is_finite()) {
                    return Err(spec_err("generator.params.eps", "must be positive"));
                }
            }
            other => {
                return Err(spec_err(
                    "generator.name",
                    format!("unknown generator {other:?}; expected one of {}", GENERATORS.join(", ")),
                ))
            }
        }
        if self.dimensions.is_empty() {
            return Err(spec_err("dimensions", "empty sweep"));
        }
        if self.dimensions.contains(&0) {
            return Err(spec_err("dimensions", "dimensions must be positive"));
        }
        if self.instances == 0 {
            return Err(spec_err("instances", "must be positive"));
        }
        if self.budgets.search == 0 || self.budgets.samples == 0 {
            return Err(spec_err("budgets", "budgets must be positive"));
        }
        for (i, q) in self.quantities.iter().enumerate() {
            let field = |s: &str| format!("quantities[{i}].{s}");
            if !QUANTITIES.contains(&q.name.as_str()) {
                return Err(spec_err(
                    field("name"),
                    format!("unknown quantity {:?}; expected one of {}", q.name, QUANTITIES.join(", ")),
                ));
            }
            if q.args.is_empty() {
                return Err(spec_err(field("args"), "empty argument list"));
            }
            match q.name.as_str() {
                "dz_index" if !q.eps.is_some_and(|e| e > 0.0 && e.is_finite()) => {
                    return Err(spec_err(field("eps"), "dz_index needs eps > 0"));
                }
                "type_ratio" if !q.p.is_some_and(|p| (1.0..=2.0).contains(&p)) => {
                    return Err(spec_err(field("p"), "type_ratio needs p in [1, 2]"));
                }
                "overlap_profile" if self.generator.name != "characteristic_family" => {
                    return Err(spec_err(field("name"), "overlap_profile needs the characteristic_family generator"));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical (sorted-key) JSON of the spec without its
    /// output paths.
    pub fn hash(&self) -> String {
        let mut s = self.clone();
        s.outputs = Outputs::default();
        let canon = serde_json::to_value(&s).expect("spec serializes").to_string();
        hex::encode(Sha256::digest(canon.as_bytes()))
    }

    fn generate(&self, dimension: usize, seed: u64) -> Result<Instance> {
        let g = &self.generator.params;
        match self.generator.name.as_str() {
            "lp_basis" => {
                let p: LpParams = params(g)?;
                Ok(Instance { points: lp_basis(p.p.value(), dimension)?, family: None })
            }
            "random_points" => {
                let r: RandomParams = params(g)?;
                let space = SpaceSpec::lp(r.p.value(), dimension)?;
                Ok(Instance { points: random_point_set(space, r.count, seed)?, family: None })
            }
            "characteristic_family" => {
                let f: FamilyParams = params(g)?;
                let fam = SetFamily::random(dimension, f.count, f.min_size..=f.max_size, seed)?;
                Ok(Instance { points: characteristic_family(&fam)?, family: Some(fam) })
            }
            "dyadic_tree" => {
                let t: TreeParams = params(g)?;
                let (space, tree) = build_dyadic_tree(dimension, t.eps)?;
                Ok(Instance { points: tree.to_point_set(space)?, family: None })
            }
            other => Err(spec_err("generator.name", format!("unknown generator {other:?}"))),
        }
    }
}

/// Per-instance seed: the first 8 bytes of SHA-256 over the spec seed and
/// instance index.
pub fn instance_seed(seed: u64, index: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(b"wnc-instance");
    h.update(seed.to_le_bytes());
    h.update((index as u64).to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

/// Rounds to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if x.is_finite() {
        let r: f64 = format!("{x:.11e}").parse().expect("float round trip");
        if r == 0.0 {
            0.0
        } else {
            r
        }
    } else {
        x
    }
}

/// Fixed 12-significant-digit text: `d.ddddddddddde±x`, or `inf`/`-inf`/`nan`.
pub fn format12(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{:.11e}", round12(x))
    }
}

mod stable {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match x {
            None => s.serialize_none(),
            Some(v) if v.is_finite() => s.serialize_f64(round12(*v)),
            Some(v) => s.serialize_str(&format12(*v)),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<f64>, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        Ok(match Option::<Raw>::deserialize(d)? {
            None => None,
            Some(Raw::Num(v)) => Some(v),
            Some(Raw::Text(t)) => Some(match t.as_str() {
                "inf" => f64::INFINITY,
                "-inf" => f64::NEG_INFINITY,
                "nan" => f64::NAN,
                _ => return Err(serde::de::Error::custom(format!("bad float {t:?}"))),
            }),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub instance: usize,
    pub generator: String,
    /// Canonical JSON of the generator parameters.
    pub params: String,
    pub dimension: usize,
    pub seed: u64,
    pub quantity: String,
    pub argument: usize,
    pub mode: SearchMode,
    #[serde(with = "stable")]
    pub value: Option<f64>,
    #[serde(with = "stable")]
    pub gap: Option<f64>,
    pub lower_bound_only: bool,
    pub error: Option<String>,
    /// Not serialized: timing would break byte-identical reruns.
    #[serde(skip)]
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub package: String,
    pub version: String,
    pub os: String,
    pub arch: String,
}

impl Environment {
    pub fn current() -> Self {
        Environment {
            package: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub spec_hash: String,
    pub environment: Environment,
    pub records: Vec<Record>,
    #[serde(skip)]
    pub wall_time_ms: f64,
}

impl Report {
    pub fn error_count(&self) -> usize {
        self.records.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn matches_spec(&self, spec: &ExperimentSpec) -> bool {
        self.spec_hash == spec.hash()
    }
}

/// Checks that two reports come from the same spec and carry identical
/// values.
pub fn compare_reports(a: &Report, b: &Report) -> Result<()> {
    if a.spec_hash != b.spec_hash {
        return Err(Error::InvalidArgument(format!("spec hash mismatch: {} vs {}", a.spec_hash, b.spec_hash)));
    }
    if a.records.len() != b.records.len() {
        return Err(Error::InvalidArgument(format!(
            "record count differs: {} vs {}",
            a.records.len(),
            b.records.len()
        )));
    }
    let key = |r: &Record| (render_row(r), r.seed);
    if let Some((i, _)) = a.records.iter().zip(&b.records).enumerate().find(|(_, (x, y))| key(x) != key(y)) {
        return Err(Error::InvalidArgument(format!("record {i} differs")));
    }
    Ok(())
}

struct Job<'a> {
    instance: usize,
    dimension: usize,
    seed: u64,
    quantity: &'a QuantitySpec,
}

/// Runs every (instance, quantity) pair on the current rayon pool.
pub fn run(spec: &ExperimentSpec) -> Result<Report> {
    spec.validate()?;
    let start = Instant::now();
    let mut instances = Vec::new();
    for &d in &spec.dimensions {
        for _ in 0..spec.instances {
            let i = instances.len();
            instances.push((i, d, instance_seed(spec.seed, i)));
        }
    }
    let generated: Vec<std::result::Result<Instance, String>> =
        instances.par_iter().map(|&(_, d, s)| spec.generate(d, s).map_err(|e| e.to_string())).collect();
    let jobs: Vec<Job> = instances
        .iter()
        .flat_map(|&(instance, dimension, seed)| {
            spec.quantities.iter().map(move |quantity| Job { instance, dimension, seed, quantity })
        })
        .collect();
    let params = serde_json::to_string(&spec.generator.params)?;
    let records: Vec<Vec<Record>> = jobs
        .par_iter()
        .map(|job| {
            let t0 = Instant::now();
            let mode = job.quantity.mode.unwrap_or(spec.mode);
            let rows = match &generated[job.instance] {
                Ok(inst) => evaluate(inst, job, mode, spec),
                Err(e) => single_args(job.quantity).into_iter().map(|a| (a, Err(e.clone()))).collect(),
            };
            let ms = t0.elapsed().as_secs_f64() * 1e3;
            rows.into_iter()
                .map(|(argument, out)| {
                    let (value, gap, lbo, error) = match out {
                        Ok((v, g, l)) => (Some(v), Some(g), l, None),
                        Err(e) => (None, None, false, Some(e)),
                    };
                    Record {
                        instance: job.instance,
                        generator: spec.generator.name.clone(),
                        params: params.clone(),
                        dimension: job.dimension,
                        seed: job.seed,
                        quantity: job.quantity.name.clone(),
                        argument,
                        mode,
                        value,
                        gap,
                        lower_bound_only: lbo,
                        error,
                        wall_time_ms: ms,
                    }
                })
                .collect()
        })
        .collect();
    Ok(Report {
        schema: REPORT_SCHEMA.into(),
        spec_hash: spec.hash(),
        environment: Environment::current(),
        records: records.into_iter().flatten().collect(),
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// [`run`] on a dedicated pool of `threads` workers.
pub fn run_with_threads(spec: &ExperimentSpec, threads: usize) -> Result<Report> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| run(spec))
}

fn single_args(q: &QuantitySpec) -> Vec<usize> {
    match q.name.as_str() {
        "dz_index" | "type_ratio" => vec![0],
        _ => q.args.clone(),
    }
}

type Row = (usize, std::result::Result<(f64, f64, bool), String>);

fn profile_rows(q: &QuantitySpec, valid: impl Fn(usize) -> bool, compute: impl FnOnce(usize) -> Result<Profile>) -> Vec<Row> {
    let top = q.args.iter().copied().filter(|&k| valid(k)).max();
    let profile = top.map(compute);
    q.args
        .iter()
        .map(|&k| {
            let out = if !valid(k) {
                Err(format!("argument {k} out of range"))
            } else {
                match profile.as_ref().expect("some valid argument") {
                    Ok(p) => p
                        .entries
                        .get(&k)
                        .map(|e| (e.value, e.gap, e.lower_bound_only))
                        .ok_or_else(|| format!("no entry for {k}")),
                    Err(e) => Err(e.to_string()),
                }
            };
            (k, out)
        })
        .collect()
}

fn evaluate(inst: &Instance, job: &Job, mode: SearchMode, spec: &ExperimentSpec) -> Vec<Row> {
    let a = &inst.points;
    let m = a.len();
    let q = job.quantity;
    let cfg = SearchConfig {
        budget: spec.budgets.search as u128,
        samples: spec.budgets.samples,
        seed: job.seed,
        ..SearchConfig::default()
    };
    let wrap = |r: Result<(f64, f64, bool)>| r.map_err(|e| e.to_string());
    match q.name.as_str() {
        "uwn_profile" => profile_rows(q, |_| true, |k| uwn_profile(a, k, mode, &cfg)),
        "cesaro_subset_profile" => {
            profile_rows(q, |k| k >= 1 && k <= m, |k| cesaro_subset_profile(a, k, mode, &cfg))
        }
        "cesaro_prefix_profile" => profile_rows(q, |k| k >= 1 && k <= m, |_| cesaro_prefix_profile(a)),
        "overlap_profile" => match &inst.family {
            Some(f) => profile_rows(q, |k| k >= 1 && k <= f.len(), |k| overlap_profile(f, k)),
            None => q.args.iter().map(|&k| (k, Err("overlap_profile needs a set family".to_string()))).collect(),
        },
        "chain_value" => q
            .args
            .iter()
            .map(|&n| (n, wrap(chain_value(a, n, mode, &cfg).map(|r| (r.value, r.gap, r.lower_bound_only)))))
            .collect(),
        "separation_value" => q
            .args
            .iter()
            .map(|&n| (n, wrap(separation_value(a, n, mode, &cfg).map(|r| (r.value, r.gap, r.lower_bound_only)))))
            .collect(),
        "dz_index" => {
            let dc = DerivationConfig { budget: spec.budgets.search as u128, ..DerivationConfig::default() };
            let eps = q.eps.unwrap_or(f64::NAN);
            vec![(0, wrap(dz_index(a, eps, &dc).map(|(n, _)| (n as f64, 0.0, false))))]
        }
        "type_ratio" => {
            let p = q.p.unwrap_or(f64::NAN);
            vec![(0, wrap(type_constant_estimate(a, p, spec.budgets.samples, job.seed).map(|t| (t.ratio, 0.0, !t.exact))))]
        }
        other => q.args.iter().map(|&k| (k, Err(format!("unknown quantity {other:?}")))).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceAudit {
    /// 1-based piece index `n`; the piece is audited at `k = n`.
    pub piece: usize,
    pub size: usize,
    #[serde(with = "stable")]
    pub uwn: Option<f64>,
    #[serde(with = "stable")]
    pub gap: Option<f64>,
    pub lower_bound_only: bool,
    /// `U(A_n, n) − eps`; positive means the counting condition fails.
    #[serde(with = "stable")]
    pub margin: Option<f64>,
    pub passed: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub eps: f64,
    pub tol: f64,
    pub pieces: Vec<PieceAudit>,
    /// Every piece audited and passed.
    pub passed: bool,
    pub errors: usize,
}

/// Checks `U(A_n, n) ≤ eps + tol` for each piece: no unit functional exceeds
/// `eps` in absolute value on more than `n` points of `A_n`.
pub fn decomposition_audit(
    pieces: &[PointSet],
    eps: f64,
    tol: f64,
    mode: SearchMode,
    cfg: &SearchConfig,
) -> Result<DecompositionReport> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument("eps must be finite and >= 0".into()));
    }
    let rows: Vec<PieceAudit> = pieces
        .par_iter()
        .enumerate()
        .map(|(i, a)| {
            let n = i + 1;
            let base = PieceAudit {
                piece: n,
                size: a.len(),
                uwn: None,
                gap: None,
                lower_bound_only: false,
                margin: None,
                passed: None,
                error: None,
            };
            if a.len() <= n {
                return PieceAudit { uwn: Some(0.0), gap: Some(0.0), margin: Some(-eps), passed: Some(true), ..base };
            }
            match uwn_profile(a, n, mode, cfg) {
                Ok(p) => {
                    let e = &p.entries[&n];
                    let margin = e.value - eps;
                    PieceAudit {
                        uwn: Some(e.value),
                        gap: Some(e.gap),
                        lower_bound_only: e.lower_bound_only,
                        margin: Some(margin),
                        passed: Some(margin <= tol),
                        ..base
                    }
                }
                Err(e) => PieceAudit { error: Some(e.to_string()), ..base },
            }
        })
        .collect();
    let errors = rows.iter().filter(|r| r.error.is_some()).count();
    let passed = errors == 0 && rows.iter().all(|r| r.passed == Some(true));
    Ok(DecompositionReport { eps, tol, pieces: rows, passed, errors })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::InvalidArgument(format!("unknown format {s:?}"))),
        }
    }
}

pub const CSV_COLUMNS: [&str; 12] = [
    "instance",
    "generator",
    "params",
    "dimension",
    "seed",
    "quantity",
    "argument",
    "value",
    "gap",
    "mode",
    "lower_bound_only",
    "error",
];

fn render_row(r: &Record) -> [String; 12] {
    let f = |x: Option<f64>| x.map(format12).unwrap_or_default();
    [
        r.instance.to_string(),
        r.generator.clone(),
        r.params.clone(),
        r.dimension.to_string(),
        r.seed.to_string(),
        r.quantity.clone(),
        r.argument.to_string(),
        f(r.value),
        f(r.gap),
        r.mode.as_str().into(),
        r.lower_bound_only.to_string(),
        r.error.clone().unwrap_or_default(),
    ]
}

pub fn render_csv(report: &Report) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    for r in &report.records {
        w.write_record(render_row(r))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Pretty JSON with keys sorted at every level.
pub fn render_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

pub fn emit(report: &Report, format: Format, path: &Path) -> Result<()> {
    let text = match format {
        Format::Csv => render_csv(report)?,
        Format::Json => render_json(report)?,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_report(path: &Path) -> Result<Report> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Record values grouped by `(quantity, argument)` across instances.
pub fn summarize(report: &Report) -> BTreeMap<(String, usize), Vec<f64>> {
    let mut out: BTreeMap<(String, usize), Vec<f64>> = BTreeMap::new();
    for r in &report.records {
        if let Some(v) = r.value {
            out.entry((r.quantity.clone(), r.argument)).or_default().push(v);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub instance: usize,
    /// `min_norm_point` or `hull_distance`.
    pub problem: String,
    pub space: String,
    pub points: usize,
    #[serde(with = "stable")]
    pub solver_value: Option<f64>,
    #[serde(with = "stable")]
    pub solver_lower: Option<f64>,
    #[serde(with = "stable")]
    pub grid_value: Option<f64>,
    /// Bound on how far the grid minimum can sit above the true minimum.
    #[serde(with = "stable")]
    pub slack: Option<f64>,
    pub passed: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub seed: u64,
    pub mesh: usize,
    pub rows: Vec<OracleRow>,
    pub passed: bool,
}

/// All weight vectors on `m` points with coordinates in `(1/mesh)ℕ`.
pub fn simplex_grid(m: usize, mesh: usize) -> Vec<Vec<f64>> {
    fn rec(left: usize, slots: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(left - c, slots - 1, cur, out);
            cur.pop();
        }
    }
    let mut raw = Vec::new();
    if m > 0 {
        rec(mesh, m, &mut Vec::new(), &mut raw);
    }
    raw.into_iter().map(|v| v.into_iter().map(|c| c as f64 / mesh as f64).collect()).collect()
}

fn oracle_space(kind: usize, d: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Result<SpaceSpec> {
    use rand::Rng;
    match kind % 7 {
        0 => SpaceSpec::lp(1.0, d),
        1 => SpaceSpec::lp(1.5, d),
        2 => SpaceSpec::lp(2.0, d),
        3 => SpaceSpec::lp(3.0, d),
        4 => SpaceSpec::lp(f64::INFINITY, d),
        5 => {
            let mut w: Vec<f64> = (0..d).map(|_| rng.gen_range(0.1..=1.0)).collect();
            w.sort_by(|a, b| b.total_cmp(a));
            SpaceSpec::symmetric(w)
        }
        _ => {
            let mut gens = Vec::new();
            for i in 0..d {
                let e: Vec<f64> = (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect();
                gens.push(e.iter().map(|x| -x).collect());
                gens.push(e);
            }
            let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.5..=1.5)).collect();
            gens.push(v.iter().map(|x| -x).collect());
            gens.push(v);
            SpaceSpec::gauge(gens, true)
        }
    }
}

fn combine(w: &[f64], pts: &[crate::space::Vector], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d];
    for (wi, p) in w.iter().zip(pts) {
        out.iter_mut().zip(p.iter()).for_each(|(o, x)| *o += wi * x);
    }
    out
}

/// Compares `min_norm_point` and `hull_distance` against exhaustive search
/// over a simplex grid of the given mesh, on seeded instances (dimension
/// ≤ 3, at most 5 points, all space kinds). A row passes when
/// `lower ≤ grid + tol` and `value ≥ grid − slack − tol`.
pub fn oracle_check(instances: usize, seed: u64, mesh: usize, tol: f64) -> Result<OracleReport> {
    use crate::normed::{hull_distance, min_norm_point, norm};
    use crate::space::Vector;
    use rand::{Rng, SeedableRng};
    if mesh == 0 {
        return Err(Error::InvalidArgument("mesh must be positive".into()));
    }
    let rows: Vec<OracleRow> = (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(instance_seed(seed, i));
            let d = rng.gen_range(1..=3);
            let hull = i % 2 == 1;
            let mut row = OracleRow {
                instance: i,
                problem: if hull { "hull_distance" } else { "min_norm_point" }.into(),
                space: String::new(),
                points: 0,
                solver_value: None,
                solver_lower: None,
                grid_value: None,
                slack: None,
                passed: false,
                error: None,
            };
            let mut body = || -> Result<()> {
                let space = oracle_space(i / 2, d, &mut rng)?;
                row.space = space.short_name();
                let draw = |rng: &mut rand_chacha::ChaCha8Rng, n: usize| -> Result<Vec<Vector>> {
                    (0..n).map(|_| Vector::new((0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect())).collect()
                };
                let maxnorm = |v: &[Vector]| -> Result<f64> {
                    v.iter().map(|x| norm(&space, x)).try_fold(0.0f64, |a, b| Ok(a.max(b?)))
                };
                let (cert, grid, slack) = if hull {
                    let (np, nq) = (rng.gen_range(1..=3), rng.gen_range(1..=2));
                    let (p, q) = (draw(&mut rng, np)?, draw(&mut rng, nq)?);
                    row.points = np + nq;
                    let cert = hull_distance(&space, &p, &q)?;
                    let gq: Vec<Vec<f64>> = simplex_grid(nq, mesh).iter().map(|b| combine(b, &q, d)).collect();
                    let mut best = f64::INFINITY;
                    for a in simplex_grid(np, mesh) {
                        let x = combine(&a, &p, d);
                        for y in &gq {
                            let diff: Vec<f64> = x.iter().zip(y).map(|(u, v)| u - v).collect();
                            best = best.min(norm(&space, &diff)?);
                        }
                    }
                    let slack = (np as f64 * maxnorm(&p)? + nq as f64 * maxnorm(&q)?) / mesh as f64;
                    (cert, best, slack)
                } else {
                    let m = rng.gen_range(1..=5);
                    let p = draw(&mut rng, m)?;
                    row.points = m;
                    let cert = min_norm_point(&space, &p)?;
                    let mut best = f64::INFINITY;
                    for a in simplex_grid(m, mesh) {
                        best = best.min(norm(&space, &combine(&a, &p, d))?);
                    }
                    (cert, best, m as f64 * maxnorm(&p)? / mesh as f64)
                };
                row.solver_value = Some(cert.value);
                row.solver_lower = Some(cert.lower());
                row.grid_value = Some(grid);
                row.slack = Some(slack);
                row.passed = cert.lower() <= grid + tol && cert.value >= grid - slack - tol;
                Ok(())
            };
            if let Err(e) = body() {
                row.error = Some(e.to_string());
            }
            row
        })
        .collect();
    let passed = rows.iter().all(|r| r.passed);
    Ok(OracleReport { seed, mesh, rows, passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis_spec(dims: Vec<usize>, quantities: Vec<QuantitySpec>) -> ExperimentSpec {
        ExperimentSpec {
            schema: SPEC_SCHEMA.into(),
            generator: GeneratorSpec { name: "lp_basis".into(), params: serde_json::json!({"p": 2}) },
            dimensions: dims,
            instances: 1,
            quantities,
            seed: 3,
            mode: SearchMode::Exact,
            budgets: Budgets::default(),
            outputs: Outputs::default(),
        }
    }

    #[test]
    fn lp2_sweep_matches_closed_form() {
        let spec = basis_spec((1..=8).collect(), vec![QuantitySpec::new("uwn_profile", vec![1])]);
        let r = run(&spec).unwrap();
        assert_eq!(r.records.len(), 8);
        for rec in &r.records {
            let expect = if rec.dimension > 1 { 0.5f64.sqrt() } else { 0.0 };
            assert!((rec.value.unwrap() - expect).abs() < 1e-6, "{rec:?}");
        }
    }

    #[test]
    fn empty_quantities_and_bad_names() {
        let r = run(&basis_spec(vec![2], vec![])).unwrap();
        assert!(r.records.is_empty() && r.environment.package == "wnc-core");
        assert_eq!(render_csv(&r).unwrap().lines().count(), 1);
        let mut s = basis_spec(vec![2], vec![]);
        s.generator.name = "hilbert_cube".into();
        let e = s.validate().unwrap_err().to_string();
        assert!(e.contains("generator.name"), "{e}");
        let s = basis_spec(vec![2], vec![QuantitySpec::new("nope", vec![1])]);
        assert!(s.validate().unwrap_err().to_string().contains("quantities[0].name"));
        let text = r#"{"schema":"wnc-spec/1","generator":{"name":"lp_basis","params":{"p":1}},"dimensions":[2],"seed":1,"extra":1}"#;
        assert!(ExperimentSpec::from_json(text).is_err());
    }

    #[test]
    fn per_record_errors_do_not_abort() {
        let mut s = basis_spec(vec![3], vec![QuantitySpec::new("cesaro_subset_profile", vec![1, 5])]);
        s.quantities.push(QuantitySpec::new("chain_value", vec![2]));
        s.budgets.search = 3;
        let r = run(&s).unwrap();
        assert_eq!(r.records.len(), 3);
        assert!(r.records[1].error.as_deref().unwrap().contains("out of range"));
        assert!(r.records[2].error.as_deref().unwrap().contains("budget"));
        assert_eq!(r.error_count(), 2);
    }

    #[test]
    fn stable_output_and_hash() {
        let spec = basis_spec(vec![2, 3], vec![QuantitySpec::new("cesaro_subset_profile", vec![1, 2])]);
        let a = run_with_threads(&spec, 1).unwrap();
        let b = run_with_threads(&spec, 4).unwrap();
        assert_eq!(render_csv(&a).unwrap(), render_csv(&b).unwrap());
        assert_eq!(render_json(&a).unwrap(), render_json(&b).unwrap());
        assert!(a.matches_spec(&spec));
        compare_reports(&a, &b).unwrap();
        let back: Report = serde_json::from_str(&render_json(&a).unwrap()).unwrap();
        assert_eq!(render_json(&back).unwrap(), render_json(&a).unwrap());
        let mut other = spec.clone();
        other.seed = 4;
        assert_ne!(other.hash(), spec.hash());
        other = spec.clone();
        other.outputs.csv = Some("x.csv".into());
        assert_eq!(other.hash(), spec.hash());
    }

    #[test]
    fn float_text() {
        assert_eq!(format12(1.0 / 3.0), "3.33333333333e-1");
        assert_eq!(format12(-0.0), "0.00000000000e0");
        assert_eq!(format12(f64::INFINITY), "inf");
        assert_eq!(round12(0.1 + 0.2), 0.3);
    }

    #[test]
    fn decomposition_examples() {
        let cfg = SearchConfig::default();
        let l1 = lp_basis(1.0, 5).unwrap();
        let r = decomposition_audit(&[l1.clone()], 0.3, 1e-9, SearchMode::Exact, &cfg).unwrap();
        assert!(!r.passed);
        assert!((r.pieces[0].margin.unwrap() - 0.7).abs() < 1e-9);
        let sp = SpaceSpec::lp(2.0, 2).unwrap();
        let singles: Vec<PointSet> =
            (0..3).map(|i| PointSet::from_rows(sp.clone(), vec![vec![0.1 * i as f64, 0.0]]).unwrap()).collect();
        assert!(decomposition_audit(&singles, 0.2, 1e-9, SearchMode::Exact, &cfg).unwrap().passed);
        let tight = SearchConfig { budget: 1, ..cfg };
        let r = decomposition_audit(&[l1, lp_basis(1.0, 1).unwrap()], 0.3, 1e-9, SearchMode::Exact, &tight).unwrap();
        assert_eq!(r.errors, 1);
        assert_eq!(r.pieces[1].passed, Some(true));
    }

    #[test]
    fn grid_oracle_agrees() {
        assert_eq!(simplex_grid(3, 4).len(), 15);
        let r = oracle_check(14, 5, 20, 1e-9).unwrap();
        assert!(r.passed, "{:?}", r.rows.iter().find(|x| !x.passed));
    }
}
