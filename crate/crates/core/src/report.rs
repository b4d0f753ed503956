//! Serialization helpers, run manifests and the artifact formats written by
//! the command line tool.
//!
//! Integers and rationals are always written as decimal strings so that
//! re-parsing is lossless.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Duration;

use rug::{Float, Integer, Rational};
use serde::{Deserialize, Serialize, Serializer};

use crate::engine::{BestApproxRecord, ExponentEstimate};
use crate::error::{Error, Result};
use crate::interval::{decimal_with_error, RatInterval};
use crate::lattice::IntVec;
use crate::pattern::{KEstimate, SchmidtReport};
use crate::synth::geom::QPoint;
use crate::synth::{ConditionReport, Kind, NeighborhoodSpec, StepLog, SynthConfig, SynthResult};

pub fn ser_integer<S: Serializer>(x: &Integer, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

pub fn ser_integers<S: Serializer>(xs: &[Integer], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(xs.iter().map(|x| x.to_string()))
}

/// Output format of tabular commands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Provenance block embedded in every output file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub version: String,
    pub precision_bits: u32,
    pub precision_cap: u32,
    /// Every computation is deterministic; kept for format stability.
    pub seed: Option<u64>,
    pub elapsed_ms: u64,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, precision_bits: u32, precision_cap: u32) -> Self {
        RunManifest {
            command: command.to_string(),
            config,
            version: crate::VERSION.to_string(),
            precision_bits,
            precision_cap,
            seed: None,
            elapsed_ms: 0,
        }
    }

    pub fn finish(mut self, elapsed: Duration) -> Self {
        self.elapsed_ms = elapsed.as_millis() as u64;
        self
    }
}

pub fn rational_string(x: &Rational) -> String {
    x.to_string()
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    Rational::parse(s.trim())
        .map(Rational::from)
        .map_err(|e| Error::Parse(format!("bad rational {s:?}: {e}")))
}

/// The constructed point: the last ball, centre `num / den` and radius.
/// The coordinate box used as an engine target is rebuilt from these on read.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlphaRecord {
    pub center_num: Vec<String>,
    pub center_den: String,
    pub radius: String,
}

impl AlphaRecord {
    pub fn of(ball: &NeighborhoodSpec) -> Self {
        AlphaRecord {
            center_num: ball.center.num.iter().map(Integer::to_string).collect(),
            center_den: ball.center.den.to_string(),
            radius: rational_string(&ball.radius),
        }
    }

    pub fn center(&self) -> Result<QPoint> {
        let int = |s: &str| -> Result<Integer> {
            s.trim().parse().map_err(|e| Error::Parse(format!("bad integer in alpha: {e}")))
        };
        if self.center_num.len() != 3 {
            return Err(Error::Parse(format!("alpha has {} coordinates, expected 3", self.center_num.len())));
        }
        let den = int(&self.center_den)?;
        if den.cmp0().is_le() {
            return Err(Error::Parse("alpha denominator must be positive".into()));
        }
        let num = [int(&self.center_num[0])?, int(&self.center_num[1])?, int(&self.center_num[2])?];
        Ok(QPoint { num, den })
    }

    pub fn ball(&self) -> Result<NeighborhoodSpec> {
        let radius = parse_rational(&self.radius)?;
        if radius.cmp0().is_le() {
            return Err(Error::Parse("alpha radius must be positive".into()));
        }
        Ok(NeighborhoodSpec { center: self.center()?, radius, anchor_prev: None, kind: Kind::W })
    }

    pub fn enclosure(&self) -> Result<Vec<RatInterval>> {
        Ok(self.ball()?.enclosure())
    }
}

/// Everything a synthesis run produces; `verify` needs only `config`, `vectors` and `alpha`.
#[derive(Clone, Debug, Serialize)]
pub struct SynthArtifact {
    pub manifest: RunManifest,
    pub config: SynthConfig,
    #[serde(serialize_with = "ser_integer")]
    pub q1_used: Integer,
    pub attempts: u32,
    pub vectors: Vec<IntVec>,
    pub alpha: AlphaRecord,
    pub realized_word: Option<String>,
    pub period: Option<String>,
    pub k_estimate: Option<KEstimate>,
    pub g_k: f64,
    pub g_kj: Vec<f64>,
    pub realized_ratios: Vec<f64>,
    pub expected_ratios: Vec<f64>,
    pub estimates: Option<ExponentEstimate>,
    pub conditions: ConditionReport,
    pub steps: Vec<StepLog>,
}

impl SynthArtifact {
    pub fn new(manifest: RunManifest, res: &SynthResult, estimates: Option<ExponentEstimate>) -> Self {
        SynthArtifact {
            manifest,
            config: res.config.clone(),
            q1_used: res.q1_used.clone(),
            attempts: res.attempts,
            vectors: res.vectors.clone(),
            alpha: AlphaRecord::of(res.alpha()),
            realized_word: res.realized_word.as_ref().map(|w| w.to_string()),
            period: res.realized_word.as_ref().and_then(|w| w.eventual_period(0)),
            k_estimate: res.k_estimate.clone(),
            g_k: res.chain.g_k.to_f64(),
            g_kj: res.chain.g_kj.iter().map(Float::to_f64).collect(),
            realized_ratios: res.realized_ratios.clone(),
            expected_ratios: res.expected_ratios.clone(),
            estimates,
            conditions: res.conditions.clone(),
            steps: res.steps.clone(),
        }
    }
}

/// The part of a stored artifact that `verify` re-derives everything from.
#[derive(Clone, Debug, Deserialize)]
pub struct StoredArtifact {
    pub config: SynthConfig,
    pub vectors: Vec<IntVec>,
    pub alpha: AlphaRecord,
    #[serde(default)]
    pub realized_word: Option<String>,
}

impl StoredArtifact {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        if text.trim().is_empty() {
            return Err(Error::Parse(format!("{}: empty artifact", path.display())));
        }
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }
}

/// One record of an analysis, with the remainder as a decimal and an error bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecordRow {
    pub index: usize,
    pub q: String,
    pub a: Vec<String>,
    pub xi: String,
    pub xi_error: String,
    pub exact_hit: bool,
}

impl RecordRow {
    pub fn of(index: usize, r: &BestApproxRecord) -> Self {
        let (xi, xi_error) = xi_decimal(&r.xi_sq);
        RecordRow {
            index,
            q: r.q.to_string(),
            a: r.a.iter().map(Integer::to_string).collect(),
            xi,
            xi_error,
            exact_hit: r.is_exact_hit(),
        }
    }
}

/// `sqrt` of a squared-remainder enclosure as a decimal string and error bound.
fn xi_decimal(xi_sq: &RatInterval) -> (String, String) {
    if xi_sq.hi().cmp0().is_eq() {
        return ("0".into(), "0".into());
    }
    let lo = Float::with_val(128, xi_sq.lo()).sqrt();
    let hi = Float::with_val(128, xi_sq.hi()).sqrt();
    let (lo, hi) = (lo.to_rational(), hi.to_rational());
    match (lo, hi) {
        (Some(lo), Some(hi)) if lo <= hi => {
            // sqrt is rounded to nearest; widen by a relative 2^-120
            let pad = Rational::from(&hi >> 120u32);
            let iv = RatInterval::new(Rational::from(&lo - &pad), hi + pad).expect("ordered");
            decimal_with_error(&iv, 20)
        }
        _ => ("nan".into(), "inf".into()),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalyzeReport {
    pub manifest: RunManifest,
    pub target: String,
    pub dim: usize,
    pub q_max: String,
    pub records: Vec<RecordRow>,
    /// The target is rational and the last record hits it exactly.
    pub terminated: bool,
    pub word: Option<String>,
    pub k_estimate: Option<KEstimate>,
    pub estimates: Option<ExponentEstimate>,
    pub schmidt: Vec<SchmidtReport>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundTrip {
    pub checked: usize,
    /// Index of the first record equal to `z_1`.
    pub offset: Option<usize>,
    pub matched: usize,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub manifest: RunManifest,
    pub vectors: usize,
    pub conditions: ConditionReport,
    pub word: Option<String>,
    pub stored_word: Option<String>,
    pub word_matches: bool,
    pub k_estimate: Option<KEstimate>,
    pub round_trip: RoundTrip,
    pub schmidt: Vec<SchmidtReport>,
    pub schmidt_holds: bool,
    pub passed: bool,
}

/// One `(lambda, k)` row of the root table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RootRow {
    pub lambda: String,
    pub k: u32,
    pub g_k: String,
    pub g_lambda: String,
    pub gbar: String,
    pub g_kj: Vec<String>,
    /// `u_1, ..., u_{k+1}`
    pub u_period: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RootTable {
    pub manifest: RunManifest,
    pub rows: Vec<RootRow>,
}

/// Decimal rendering with `digits` significant digits.
pub fn decimal(x: &Float, digits: usize) -> String {
    x.to_string_radix(10, Some(digits))
}

pub fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    write_text(&text, out)
}

fn write_text(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            let mut f = fs::File::create(path)?;
            f.write_all(text.as_bytes())?;
            f.write_all(b"\n")?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            match writeln!(out, "{text}") {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                r => r?,
            }
        }
    }
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Parse(format!("{other:?}")),
    }
}

/// Manifest lines as `# key: value` comments, then the CSV body.
fn write_csv(manifest: &RunManifest, header: Vec<String>, rows: Vec<Vec<String>>, out: Option<&Path>) -> Result<()> {
    let mut buf = Vec::new();
    let m = serde_json::to_string(manifest).map_err(|e| Error::Parse(e.to_string()))?;
    writeln!(buf, "# manifest: {m}")?;
    {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(&mut buf);
        w.write_record(&header).map_err(csv_err)?;
        for r in rows {
            w.write_record(&r).map_err(csv_err)?;
        }
        w.flush()?;
    }
    let text = String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))?;
    write_text(text.trim_end(), out)
}

impl RootTable {
    pub fn write(&self, format: Format, out: Option<&Path>) -> Result<()> {
        match format {
            Format::Json => write_json(self, out),
            Format::Csv => {
                let width = self.rows.iter().map(|r| r.g_kj.len()).max().unwrap_or(0);
                let mut header: Vec<String> =
                    ["lambda", "k", "g_k", "G_lambda", "gbar"].iter().map(|s| s.to_string()).collect();
                header.extend((0..width).map(|j| format!("g_k{j}")));
                header.push("u_period".into());
                let rows = self
                    .rows
                    .iter()
                    .map(|r| {
                        let mut row = vec![r.lambda.clone(), r.k.to_string(), r.g_k.clone(), r.g_lambda.clone(), r.gbar.clone()];
                        row.extend((0..width).map(|j| r.g_kj.get(j).cloned().unwrap_or_default()));
                        row.push(r.u_period.join(";"));
                        row
                    })
                    .collect();
                write_csv(&self.manifest, header, rows, out)
            }
        }
    }
}

impl AnalyzeReport {
    pub fn write(&self, format: Format, out: Option<&Path>) -> Result<()> {
        match format {
            Format::Json => write_json(self, out),
            Format::Csv => {
                let dim = self.dim;
                let mut header = vec!["index".to_string(), "q".to_string()];
                header.extend((1..=dim).map(|i| format!("a{i}")));
                header.extend(["xi", "xi_error", "exact_hit"].map(String::from));
                let rows = self
                    .records
                    .iter()
                    .map(|r| {
                        let mut row = vec![r.index.to_string(), r.q.clone()];
                        row.extend(r.a.iter().cloned());
                        row.extend([r.xi.clone(), r.xi_error.clone(), r.exact_hit.to_string()]);
                        row
                    })
                    .collect();
                write_csv(&self.manifest, header, rows, out)
            }
        }
    }
}
