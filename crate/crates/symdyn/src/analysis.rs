//! The full pipeline behind the CLI: a declarative config naming a map, a
//! partition, and a matrix is resolved, verified, and analyzed, and the
//! results land in one self-contained JSON report.
//!
//! [`run_analysis`] never fails on analysis problems: each stage that
//! breaks leaves a structured error record in the report and the dependent
//! stages are skipped, so a report always comes back and scripts can key
//! off the error list (the CLI turns a nonempty list into a nonzero exit
//! status). Reports are deterministic for a fixed config except for the
//! timings block.

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::coupled::{entropy_verdict, infer_matrix, verify, EntropyVerdict, VerificationReport};
use crate::cylinder::{
    cylinder_counts, entropy_by_cylinders, preimage_count, singleton_check, SingletonEvidence,
};
use crate::map1d::{
    linear_branch, make_builtin, BuiltinParams, Domain, Partition, PiecewiseMonotoneMap, Segment,
};
use crate::matrix::{is_irreducible, is_primitive, spectral_radius, TransitionMatrix};

/// Version stamp of the report layout.
pub const SCHEMA_VERSION: &str = "1.0.0";

// ---------------------------------------------------------------------------
// config
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub enum ConfigError {
    Invalid { reason: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Invalid { reason } => write!(f, "invalid config: {reason}"),
        }
    }
}

impl std::error::Error for ConfigError {}

fn invalid(reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { reason: reason.into() }
}

/// The map to analyze: exactly one of `builtin` (with optional params) or
/// `piecewise_linear` must be given.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    /// Parameters for builtins that take them (`linear_markov` needs a
    /// `matrix`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<MapParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub piecewise_linear: Option<PiecewiseLinearSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<u8>>>,
}

/// A user map given as breakpoint/lift-value pairs `(x_i, v_i)`: the graph
/// connects them by straight lines, one monotone branch per gap. The
/// breakpoints must start at 0, increase strictly, and end at the domain
/// length; on the circle the last value must close up with the first
/// modulo one turn.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseLinearSpec {
    pub domain: Domain,
    pub breakpoints: Vec<[f64; 2]>,
}

/// Either the literal string `"canonical"` or explicit `[start, len]`
/// pieces.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PartitionSpec {
    Named(String),
    Explicit(Vec<[f64; 2]>),
}

impl Default for PartitionSpec {
    fn default() -> Self {
        PartitionSpec::Named("canonical".to_string())
    }
}

/// Either the literal string `"infer"` or explicit 0/1 rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Named(String),
    Explicit(Vec<Vec<u8>>),
}

impl Default for MatrixSpec {
    fn default() -> Self {
        MatrixSpec::Named("infer".to_string())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisOptions {
    /// Depth for singleton evidence and preimage sampling.
    pub depth: u32,
    /// Deepest cylinder-count level in the entropy-estimate table.
    pub n_max: u32,
    /// Geometric and spectral tolerance.
    pub tol: f64,
    /// Ceiling on enumerated cylinders per depth.
    pub enumeration_cap: usize,
    /// CSV series to write next to the report: any of
    /// `entropy_estimates`, `cylinder_counts`, `singleton_diameters`.
    pub emit_csv: Vec<String>,
    /// Where to write the JSON report; `None` keeps it in memory only.
    pub output_path: Option<String>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            depth: 10,
            n_max: 12,
            tol: 1e-9,
            enumeration_cap: 1_000_000,
            emit_csv: Vec::new(),
            output_path: None,
        }
    }
}

pub const CSV_SERIES: [&str; 3] = ["entropy_estimates", "cylinder_counts", "singleton_diameters"];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub map: MapSpec,
    #[serde(default)]
    pub partition: PartitionSpec,
    #[serde(default)]
    pub matrix: MatrixSpec,
    #[serde(default)]
    pub options: AnalysisOptions,
}

impl AnalysisConfig {
    /// Checks the structural invariants that do not need the map built.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let named = self.map.builtin.is_some();
        let pl = self.map.piecewise_linear.is_some();
        if named == pl {
            return Err(invalid(
                "map must give exactly one of `builtin` or `piecewise_linear`",
            ));
        }
        if let PartitionSpec::Named(name) = &self.partition {
            if name != "canonical" {
                return Err(invalid(format!(
                    "unknown partition name {name:?}; use \"canonical\" or explicit pieces"
                )));
            }
        }
        if let MatrixSpec::Named(name) = &self.matrix {
            if name != "infer" {
                return Err(invalid(format!(
                    "unknown matrix name {name:?}; use \"infer\" or explicit rows"
                )));
            }
        }
        let o = &self.options;
        if o.depth < 2 {
            return Err(invalid(format!("depth must be at least 2, got {}", o.depth)));
        }
        if o.n_max < 2 {
            return Err(invalid(format!("n_max must be at least 2, got {}", o.n_max)));
        }
        if !(o.tol > 0.0) {
            return Err(invalid(format!("tol must be positive, got {}", o.tol)));
        }
        if o.enumeration_cap < 1_000 {
            return Err(invalid(format!(
                "enumeration_cap must be at least 1000, got {}",
                o.enumeration_cap
            )));
        }
        for name in &o.emit_csv {
            if !CSV_SERIES.contains(&name.as_str()) {
                return Err(invalid(format!(
                    "unknown csv series {name:?}; available: {CSV_SERIES:?}"
                )));
            }
        }
        if !o.emit_csv.is_empty() && o.output_path.is_none() {
            return Err(invalid("emit_csv needs an output_path to name the files"));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct SpectralSummary {
    pub lambda: f64,
    pub log_lambda: f64,
    pub iterations: u64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MatrixFlags {
    pub irreducible: bool,
    pub primitive: bool,
    pub max_row_sum: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropySection {
    pub verdict: EntropyVerdict,
    /// `(n, N_n)` nonempty-cylinder counts.
    pub cylinder_counts: Vec<(u32, u64)>,
    /// `(n, (1/n)·ln N_n)` estimates.
    pub estimates: Vec<(u32, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChaosSection {
    pub li_yorke: bool,
    pub devaney: bool,
    pub justifications: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PreimageSample {
    pub y: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportError {
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub symdyn: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timings {
    pub total_ms: f64,
    pub stages: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub schema_version: String,
    /// Echo of the config that produced this report.
    pub input: AnalysisConfig,
    /// The resolved 0/1 matrix, row-major.
    pub matrix: Option<Vec<Vec<u8>>>,
    pub spectral: Option<SpectralSummary>,
    pub matrix_flags: Option<MatrixFlags>,
    pub verification: Option<VerificationReport>,
    pub singleton: Option<SingletonEvidence>,
    pub entropy: Option<EntropySection>,
    pub chaos: Option<ChaosSection>,
    pub preimage_samples: Option<Vec<PreimageSample>>,
    pub versions: Versions,
    pub timings: Timings,
    pub errors: Vec<ReportError>,
}

// ---------------------------------------------------------------------------
// resolution
// ---------------------------------------------------------------------------

fn build_piecewise_linear(spec: &PiecewiseLinearSpec) -> Result<PiecewiseMonotoneMap, String> {
    let d = spec.domain;
    let pts = &spec.breakpoints;
    if pts.len() < 2 {
        return Err("piecewise_linear needs at least two breakpoints".to_string());
    }
    if pts[0][0].abs() > 1e-12 {
        return Err(format!("breakpoints must start at 0, got {}", pts[0][0]));
    }
    if (pts[pts.len() - 1][0] - d.length()).abs() > 1e-9 {
        return Err(format!(
            "breakpoints must end at the domain length {}, got {}",
            d.length(),
            pts[pts.len() - 1][0]
        ));
    }
    let mut branches = Vec::with_capacity(pts.len() - 1);
    for w in pts.windows(2) {
        let ([x0, v0], [x1, v1]) = (w[0], w[1]);
        if x1 - x0 <= 1e-9 {
            return Err(format!("breakpoints must increase strictly at x = {x1}"));
        }
        branches.push(linear_branch(d, x0, x1, v0, v1).map_err(|e| e.to_string())?);
    }
    PiecewiseMonotoneMap::new(d, branches).map_err(|e| e.to_string())
}

/// The canonical partition of a map with no builtin one: its monotone laps.
fn lap_partition(map: &PiecewiseMonotoneMap) -> Result<Partition, String> {
    let d = map.domain();
    if map.branch_count() < 2 {
        return Err(
            "a one-branch map has no canonical partition; give pieces explicitly".to_string(),
        );
    }
    let pieces = (0..map.branch_count())
        .map(|b| map.branch(b).support().clone())
        .collect();
    Partition::new(d, pieces).map_err(|e| e.to_string())
}

/// Builds the map, the partition, and (unless it is to be inferred) the
/// explicit matrix named by the config.
fn resolve(
    config: &AnalysisConfig,
) -> Result<(PiecewiseMonotoneMap, Partition, Option<TransitionMatrix>), String> {
    let (map, canonical_partition, builtin_matrix) = match (&config.map.builtin, &config.map.piecewise_linear) {
        (Some(name), None) => {
            let params = BuiltinParams {
                matrix: match &config.map.params {
                    Some(MapParams { matrix: Some(rows) }) => {
                        Some(TransitionMatrix::new(rows).map_err(|e| e.to_string())?)
                    }
                    _ => None,
                },
            };
            let (map, part, a) = make_builtin(name, &params).map_err(|e| e.to_string())?;
            (map, Some(part), Some(a))
        }
        (None, Some(spec)) => (build_piecewise_linear(spec)?, None, None),
        _ => return Err("map must give exactly one of `builtin` or `piecewise_linear`".to_string()),
    };

    let partition = match (&config.partition, canonical_partition) {
        (PartitionSpec::Named(_), Some(part)) => part,
        (PartitionSpec::Named(_), None) => lap_partition(&map)?,
        (PartitionSpec::Explicit(pieces), _) => {
            let d = map.domain();
            let segments = pieces
                .iter()
                .map(|&[start, len]| Segment::new(d, start, len))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| e.to_string())?;
            Partition::new(d, segments).map_err(|e| e.to_string())?
        }
    };

    let matrix = match &config.matrix {
        MatrixSpec::Named(_) => None, // inferred later, against the resolved partition
        MatrixSpec::Explicit(rows) => {
            Some(TransitionMatrix::new(rows).map_err(|e| e.to_string())?)
        }
    };
    // an explicit builtin matrix only stands in when the partition is also
    // the builtin one; for explicit partitions the matrix must be inferred
    // or given explicitly
    let matrix = match (matrix, &config.partition) {
        (Some(m), _) => Some(m),
        (None, PartitionSpec::Named(_)) => builtin_matrix,
        (None, PartitionSpec::Explicit(_)) => None,
    };
    Ok((map, partition, matrix))
}

// ---------------------------------------------------------------------------
// the pipeline
// ---------------------------------------------------------------------------

/// Runs every stage the config asks for and collects the results. Stage
/// failures become entries in `errors` and the stages depending on them
/// are skipped; the report itself always comes back. When
/// `options.output_path` is set the report (and any requested CSV series)
/// is also written there; IO failures are appended to `errors` as an `io`
/// stage.
pub fn run_analysis(config: &AnalysisConfig) -> AnalysisReport {
    let start = Instant::now();
    let mut stages: Vec<(String, f64)> = Vec::new();
    let mut errors: Vec<ReportError> = Vec::new();
    let mut report = AnalysisReport {
        schema_version: SCHEMA_VERSION.to_string(),
        input: config.clone(),
        matrix: None,
        spectral: None,
        matrix_flags: None,
        verification: None,
        singleton: None,
        entropy: None,
        chaos: None,
        preimage_samples: None,
        versions: Versions { symdyn: env!("CARGO_PKG_VERSION").to_string() },
        timings: Timings { total_ms: 0.0, stages: Vec::new() },
        errors: Vec::new(),
    };

    fn fail(errors: &mut Vec<ReportError>, stage: &str, message: String) {
        errors.push(ReportError { stage: stage.to_string(), message });
    }

    // Every exit goes through here so a requested output file is written even
    // when the pipeline stops at the first stage.
    fn finish(
        mut report: AnalysisReport,
        errors: Vec<ReportError>,
        stages: Vec<(String, f64)>,
        start: Instant,
        options: &AnalysisOptions,
    ) -> AnalysisReport {
        report.errors = errors;
        report.timings = Timings { total_ms: start.elapsed().as_secs_f64() * 1e3, stages };
        if let Some(path) = &options.output_path {
            if let Err(e) = write_outputs(&report, path, &options.emit_csv) {
                report
                    .errors
                    .push(ReportError { stage: "io".to_string(), message: e.to_string() });
            }
        }
        report
    }

    macro_rules! timed {
        ($name:expr, $body:expr) => {{
            let t = Instant::now();
            let out = $body;
            stages.push(($name.to_string(), t.elapsed().as_secs_f64() * 1e3));
            out
        }};
    }

    if let Err(e) = config.validate() {
        fail(&mut errors, "config", e.to_string());
        return finish(report, errors, stages, start, &config.options);
    }
    let o = &config.options;

    // resolve the triple
    let resolved = timed!("resolve", resolve(config));
    let (map, partition, explicit) = match resolved {
        Ok(t) => t,
        Err(message) => {
            fail(&mut errors, "resolve", message);
            return finish(report, errors, stages, start, o);
        }
    };

    let matrix = match explicit {
        Some(m) => Some(m),
        None => match timed!("infer_matrix", infer_matrix(&map, &partition, o.tol)) {
            Ok(m) => Some(m),
            Err(e) => {
                fail(&mut errors, "infer_matrix", e.to_string());
                None
            }
        },
    };

    if let Some(a) = &matrix {
        report.matrix = Some(a.rows());

        match timed!("spectral", spectral_radius(a, o.tol)) {
            Ok(s) => {
                report.spectral = Some(SpectralSummary {
                    lambda: s.lambda,
                    log_lambda: s.lambda.ln(),
                    iterations: s.iterations,
                    residual: s.residual,
                });
            }
            Err(e) => fail(&mut errors, "spectral", e.to_string()),
        }
        report.matrix_flags = Some(MatrixFlags {
            irreducible: is_irreducible(a),
            primitive: is_primitive(a).0,
            max_row_sum: a.max_row_sum() as u64,
        });

        let verification = match timed!("verify", verify(&map, &partition, a, o.tol)) {
            Ok(v) => {
                report.verification = Some(v.clone());
                Some(v)
            }
            Err(e) => {
                fail(&mut errors, "verify", e.to_string());
                None
            }
        };

        let singleton = match timed!(
            "singleton_check",
            singleton_check(&map, &partition, a, o.depth, o.tol, o.enumeration_cap)
        ) {
            Ok(ev) => {
                report.singleton = Some(ev.clone());
                Some(ev)
            }
            Err(e) => {
                fail(&mut errors, "singleton_check", e.to_string());
                None
            }
        };

        let counts = match timed!(
            "cylinder_counts",
            cylinder_counts(&map, &partition, o.n_max, o.enumeration_cap)
        ) {
            Ok(c) => Some(c),
            Err(e) => {
                fail(&mut errors, "cylinder_counts", e.to_string());
                None
            }
        };
        let estimates = match timed!(
            "entropy_estimates",
            entropy_by_cylinders(&map, &partition, o.n_max, o.enumeration_cap)
        ) {
            Ok(t) => Some(t),
            Err(e) => {
                fail(&mut errors, "entropy_estimates", e.to_string());
                None
            }
        };

        if let Some(v) = &verification {
            match timed!(
                "entropy_verdict",
                entropy_verdict(a, v, singleton.as_ref(), o.tol)
            ) {
                Ok(verdict) => {
                    report.chaos = Some(ChaosSection {
                        li_yorke: verdict.li_yorke,
                        devaney: verdict.devaney,
                        justifications: verdict.justifications.clone(),
                    });
                    report.entropy = Some(EntropySection {
                        verdict,
                        cylinder_counts: counts.unwrap_or_default(),
                        estimates: estimates.unwrap_or_default(),
                    });
                }
                Err(e) => fail(&mut errors, "entropy_verdict", e.to_string()),
            }
        }

        // preimage sampling stays optional: skip when the word tree at the
        // sampling depth is too big to enumerate cheaply
        let sample_depth = o.depth.min(8);
        let tree = crate::subshift::count_words(a, sample_depth);
        if tree <= num_bigint::BigUint::from(100_000u64) {
            let sampled = timed!("preimage_samples", {
                let d = map.domain();
                let mut points: Vec<f64> = Vec::new();
                for i in 1..=partition.piece_count() {
                    let piece = partition.piece(i);
                    points.push(piece.midpoint(d));
                    points.push(piece.start());
                    points.push(d.reduce(piece.end()));
                }
                points.sort_by(|a, b| a.partial_cmp(b).unwrap());
                points.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
                let mut out = Vec::with_capacity(points.len());
                let mut failure = None;
                for y in points {
                    match preimage_count(
                        &map,
                        &partition,
                        a,
                        y,
                        sample_depth,
                        o.tol,
                        o.enumeration_cap,
                    ) {
                        Ok(count) => out.push(PreimageSample { y, count }),
                        Err(e) => {
                            failure = Some(e.to_string());
                            break;
                        }
                    }
                }
                (out, failure)
            });
            match sampled {
                (out, None) => report.preimage_samples = Some(out),
                (_, Some(message)) => fail(&mut errors, "preimage_samples", message),
            }
        }
    }

    finish(report, errors, stages, start, o)
}

/// Serializes a report to pretty JSON with a trailing newline.
pub fn report_to_json(report: &AnalysisReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

/// Renders one CSV series from a report with the fixed `n,value` header.
pub fn csv_series(report: &AnalysisReport, name: &str) -> Option<String> {
    let mut rows: Vec<(u32, String)> = Vec::new();
    match name {
        "entropy_estimates" => {
            for &(n, v) in &report.entropy.as_ref()?.estimates {
                rows.push((n, format!("{v}")));
            }
        }
        "cylinder_counts" => {
            for &(n, c) in &report.entropy.as_ref()?.cylinder_counts {
                rows.push((n, format!("{c}")));
            }
        }
        "singleton_diameters" => {
            for &(n, d) in &report.singleton.as_ref()?.diameter_table {
                rows.push((n, format!("{d}")));
            }
        }
        _ => return None,
    }
    let mut out = String::from("n,value\n");
    for (n, v) in rows {
        out.push_str(&format!("{n},{v}\n"));
    }
    Some(out)
}

fn write_outputs(
    report: &AnalysisReport,
    path: &str,
    emit_csv: &[String],
) -> std::io::Result<()> {
    std::fs::write(path, report_to_json(report))?;
    for name in emit_csv {
        if let Some(content) = csv_series(report, name) {
            let base = path.strip_suffix(".json").unwrap_or(path);
            std::fs::write(format!("{base}.{name}.csv"), content)?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------
