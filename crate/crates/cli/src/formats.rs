//! File formats. Reals are written with 17 significant digits everywhere,
//! which makes every `f64` round-trip exactly.

use std::collections::BTreeMap;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use gwrk_core::diagnostics::ExperimentReport;
use gwrk_core::trees::NodeSpec;
use gwrk_core::{ExplorationPath, FellerPath, Forest, PopulationTrajectory};
use serde::ser::Serialize;
use serde::Deserialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{CliError, CliResult};

/// `{:.16e}`: 17 significant digits.
pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Pretty JSON with 17-digit reals.
struct Digits17<'a>(PrettyFormatter<'a>);

impl Formatter for Digits17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(real(value).as_bytes())
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("in-memory JSON serialization");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON is UTF-8")
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, origin: &Path) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| CliError::Invalid(format!("{}: {e}", origin.display())))
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_file(path: &Path, contents: &[u8]) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// JSON metadata stored next to a path CSV.
#[derive(Debug, Clone, PartialEq, serde::Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSidecar {
    pub p: f64,
    /// Ceiling; `null` for none.
    pub a: Option<f64>,
    pub m: usize,
    pub seed: Option<u64>,
    pub params: BTreeMap<String, f64>,
    #[serde(default = "unit")]
    pub local_time_scale: f64,
}

fn unit() -> f64 {
    1.0
}

impl PathSidecar {
    pub fn for_path(path: &ExplorationPath, seed: Option<u64>, params: BTreeMap<String, f64>) -> Self {
        Self {
            p: path.slope(),
            a: path.ceiling().is_finite().then_some(path.ceiling()),
            m: path.excursion_count(),
            seed,
            params,
            local_time_scale: path.local_time_scale(),
        }
    }
}

/// `x.csv` -> `x.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

pub fn path_csv(path: &ExplorationPath) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Invalid(e.to_string());
    w.write_record(["time", "height"]).map_err(csv_err)?;
    for (t, h) in path.breakpoint_times().into_iter().zip(path.extrema()) {
        w.write_record([real(t), real(*h)]).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| CliError::Invalid(e.to_string()))
}

/// Reads a path CSV and its sidecar. Times must agree with the heights and
/// the slope to within `1e-9` relative.
pub fn read_path(csv_path: &Path) -> CliResult<ExplorationPath> {
    let side_path = sidecar_path(csv_path);
    let side: PathSidecar = parse_json(&read_text(&side_path)?, &side_path)?;
    let file = std::fs::File::open(csv_path).map_err(|e| CliError::io(csv_path, e))?;
    parse_path_csv(file, &side, csv_path)
}

pub fn parse_path_csv<R: Read>(input: R, side: &PathSidecar, origin: &Path) -> CliResult<ExplorationPath> {
    let bad = |msg: String| CliError::Invalid(format!("{}: {msg}", origin.display()));
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(|e| bad(e.to_string()))?;
    if header != vec!["time", "height"] {
        return Err(bad(format!("expected header time,height, got {}", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut times = Vec::new();
    let mut heights = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |i: usize| -> CliResult<f64> {
            rec.get(i)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| bad(format!("row {}: bad number", line + 2)))
        };
        times.push(num(0)?);
        heights.push(num(1)?);
    }
    let path = ExplorationPath::new(side.p, side.a.unwrap_or(f64::INFINITY), heights)?
        .with_local_time_scale(side.local_time_scale)?;
    if path.excursion_count() != side.m {
        return Err(bad(format!(
            "sidecar declares {} excursions, path has {}",
            side.m,
            path.excursion_count()
        )));
    }
    for (k, (t, expected)) in times.iter().zip(path.breakpoint_times()).enumerate() {
        if (t - expected).abs() > 1e-9 * expected.abs().max(1.0) {
            return Err(bad(format!("row {}: time {t} disagrees with slope (expected {expected})", k + 2)));
        }
    }
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRecord {
    pub id: usize,
    pub parent: Option<usize>,
    pub birth: f64,
    pub death: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestFile {
    /// Ceiling; `null` for none.
    pub a: Option<f64>,
    pub roots: Vec<usize>,
    pub nodes: Vec<NodeRecord>,
}

impl ForestFile {
    pub fn from_forest(f: &Forest) -> Self {
        Self {
            a: f.ceiling().is_finite().then_some(f.ceiling()),
            roots: f.roots().to_vec(),
            nodes: f
                .nodes()
                .iter()
                .map(|n| NodeRecord {
                    id: n.id,
                    parent: n.parent,
                    birth: n.birth_time,
                    death: n.death_time,
                })
                .collect(),
        }
    }

    /// Validates and canonicalizes; ids must be `0..n` in any order.
    pub fn to_forest(&self) -> CliResult<Forest> {
        let n = self.nodes.len();
        let mut specs: Vec<Option<NodeSpec>> = vec![None; n];
        for r in &self.nodes {
            let slot = specs
                .get_mut(r.id)
                .ok_or_else(|| CliError::Invalid(format!("node id {} out of range 0..{n}", r.id)))?;
            if slot.is_some() {
                return Err(CliError::Invalid(format!("duplicate node id {}", r.id)));
            }
            *slot = Some(NodeSpec {
                parent: r.parent,
                birth_time: r.birth,
                death_time: r.death,
            });
        }
        let specs: Vec<NodeSpec> = specs.into_iter().map(|s| s.expect("ids fill 0..n")).collect();
        let mut declared = self.roots.clone();
        declared.sort_unstable();
        let actual: Vec<usize> = (0..n).filter(|&i| specs[i].parent.is_none()).collect();
        if declared != actual {
            return Err(CliError::Invalid("root list does not match parentless nodes".into()));
        }
        Ok(Forest::from_specs(&specs, self.a.unwrap_or(f64::INFINITY))?)
    }
}

pub fn read_forest(path: &Path) -> CliResult<Forest> {
    let file: ForestFile = parse_json(&read_text(path)?, path)?;
    file.to_forest()
}

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Invalid(e.to_string());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    w.into_inner().map_err(|e| CliError::Invalid(e.to_string()))
}

/// `time,count,x` with `x = count / N`, one row at 0 then one per jump.
pub fn population_csv(traj: &PopulationTrajectory, big_n: u64) -> CliResult<Vec<u8>> {
    let n = big_n as f64;
    let rows = std::iter::once((0.0, traj.initial_count()))
        .chain(traj.jump_times().iter().copied().zip(traj.counts().iter().copied()))
        .map(|(t, z)| vec![real(t), z.to_string(), real(z as f64 / n)]);
    csv_bytes(&["time", "count", "x"], rows)
}

pub fn feller_csv(path: &FellerPath) -> CliResult<Vec<u8>> {
    let rows = path
        .times()
        .zip(&path.values)
        .map(|(t, v)| vec![real(t), real(*v)]);
    csv_bytes(&["time", "value"], rows)
}

pub const REPORT_CSV_HEADER: [&str; 14] = [
    "kind",
    "name",
    "n",
    "mean",
    "variance",
    "se_mean",
    "se_variance",
    "distance",
    "p_value",
    "observed",
    "expected",
    "tolerance",
    "relation",
    "passed",
];

/// One row per summary, KS test and check; empty cells where a column does
/// not apply.
pub fn report_csv(report: &ExperimentReport) -> CliResult<Vec<u8>> {
    let blank = || String::new();
    let mut rows: Vec<Vec<String>> = Vec::new();
    for s in &report.summaries {
        let m = &s.moments;
        rows.push(vec![
            "summary".into(),
            s.statistic.clone(),
            m.n.to_string(),
            real(m.mean),
            real(m.variance),
            real(m.se_mean),
            real(m.se_variance),
            blank(),
            blank(),
            blank(),
            blank(),
            blank(),
            blank(),
            blank(),
        ]);
    }
    for k in &report.ks_tests {
        let mut r = vec![blank(); REPORT_CSV_HEADER.len()];
        r[0] = "ks".into();
        r[1] = k.statistic.clone();
        r[7] = real(k.distance);
        r[8] = real(k.p_value);
        rows.push(r);
    }
    for c in &report.checks {
        let mut r = vec![blank(); REPORT_CSV_HEADER.len()];
        r[0] = "check".into();
        r[1] = c.name.clone();
        r[9] = real(c.observed);
        r[10] = real(c.expected);
        r[11] = real(c.tolerance);
        r[12] = serde_json::to_value(c.relation)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default();
        r[13] = c.passed.to_string();
        rows.push(r);
    }
    csv_bytes(&REPORT_CSV_HEADER, rows.into_iter())
}
