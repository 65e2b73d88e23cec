//! Line-delimited JSON interchange files and numeric CSV inputs.
//!
//! Floats are written in the shortest form that parses back to the same
//! bits, so every file round-trips exactly.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::pips::{ContinuousSamples, DiscreteSamples, PipTable, SampleSet, SusieAlphas};
use crate::types::{CandidateGroup, DetectionSet, Discovery, ErrorRateSpec, GroupId, LocationSpace, Region, RepairMethod};

fn parse_err(line: usize, e: impl std::fmt::Display) -> Error {
    Error::Parse { line, msg: e.to_string() }
}

/// Non-blank, non-comment lines with their 1-based line numbers.
fn records<R: BufRead>(reader: R) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if !t.is_empty() && !t.starts_with('#') {
            out.push((i + 1, t.to_string()));
        }
    }
    Ok(out)
}

fn parse_lines<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>> {
    records(reader)?
        .into_iter()
        .map(|(n, l)| serde_json::from_str(&l).map_err(|e| parse_err(n, e)))
        .collect()
}

fn write_line<W: Write, T: Serialize>(w: &mut W, value: &T) -> Result<()> {
    serde_json::to_writer(&mut *w, value).map_err(|e| Error::Internal(format!("serialize: {e}")))?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn read_groups<R: BufRead>(reader: R) -> Result<Vec<CandidateGroup>> {
    let groups: Vec<CandidateGroup> = parse_lines(reader)?;
    for g in &groups {
        g.validate()?;
    }
    Ok(groups)
}

pub fn write_groups<W: Write>(mut w: W, groups: &[CandidateGroup]) -> Result<()> {
    for g in groups {
        write_line(&mut w, g)?;
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct PipRecord {
    id: GroupId,
    pip: f64,
}

pub fn read_pips<R: BufRead>(reader: R) -> Result<PipTable> {
    let mut table = PipTable::default();
    for (n, l) in records(reader)? {
        let r: PipRecord = serde_json::from_str(&l).map_err(|e| parse_err(n, e))?;
        if !(0.0..=1.0).contains(&r.pip) {
            return Err(parse_err(n, format!("pip {} outside [0,1]", r.pip)));
        }
        if table.pips.insert(r.id, r.pip).is_some() {
            return Err(parse_err(n, format!("duplicate group id {}", r.id)));
        }
    }
    Ok(table)
}

pub fn write_pips<W: Write>(mut w: W, table: &PipTable) -> Result<()> {
    for (&id, &pip) in &table.pips {
        write_line(&mut w, &PipRecord { id, pip })?;
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceHeader {
    space: LocationSpace,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SignalRecord {
    #[serde(default)]
    chain: Option<u32>,
    signals: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointRecord {
    #[serde(default)]
    chain: Option<u32>,
    points: Vec<Vec<f64>>,
}

/// Reads a sample file. An optional first record `{"space": ...}` fixes the
/// location space; without it a discrete file gets `p = max index + 1` (or
/// `p_hint` when larger) and a continuous file the unit cube.
pub fn read_samples<R: BufRead>(reader: R, p_hint: Option<usize>) -> Result<SampleSet> {
    let recs = records(reader)?;
    let mut space = None;
    let mut body = &recs[..];
    if let Some((n, first)) = recs.first() {
        if let Ok(h) = serde_json::from_str::<SpaceHeader>(first) {
            h.space.validate().map_err(|e| parse_err(*n, e))?;
            space = Some(h.space);
            body = &recs[1..];
        }
    }
    let continuous = match (&space, body.first()) {
        (Some(s), _) => !s.is_discrete(),
        (None, Some((_, l))) => l.contains("\"points\""),
        (None, None) => false,
    };
    if continuous {
        let mut draws = Vec::with_capacity(body.len());
        let mut chains = Vec::with_capacity(body.len());
        for (n, l) in body {
            let r: PointRecord = serde_json::from_str(l).map_err(|e| parse_err(*n, e))?;
            draws.push(r.points);
            chains.push(r.chain);
        }
        let space = match space {
            Some(s) => s,
            None => LocationSpace::unit_cube(draws.iter().flatten().next().map_or(2, |x| x.len()))?,
        };
        return Ok(SampleSet::Continuous(ContinuousSamples::new(space, draws, Some(chains))?));
    }
    let mut draws = Vec::with_capacity(body.len());
    let mut chains = Vec::with_capacity(body.len());
    for (n, l) in body {
        let r: SignalRecord = serde_json::from_str(l).map_err(|e| parse_err(*n, e))?;
        draws.push(r.signals);
        chains.push(r.chain);
    }
    let p = match space {
        Some(LocationSpace::Discrete { p }) => p,
        _ => {
            let seen = draws.iter().flatten().max().map_or(0, |&m| m as usize + 1);
            seen.max(p_hint.unwrap_or(0)).max(1)
        }
    };
    Ok(SampleSet::Discrete(DiscreteSamples::new(p, draws, Some(chains))?))
}

pub fn write_samples<W: Write>(mut w: W, samples: &SampleSet) -> Result<()> {
    match samples {
        SampleSet::Discrete(s) => {
            write_line(&mut w, &SpaceHeader { space: LocationSpace::discrete(s.p())? })?;
            for (d, &chain) in s.draws().iter().zip(s.chains()) {
                write_line(&mut w, &SignalRecord { chain, signals: d.clone() })?;
            }
        }
        SampleSet::Continuous(s) => {
            write_line(&mut w, &SpaceHeader { space: s.space().clone() })?;
            for (d, &chain) in s.draws().iter().zip(s.chains()) {
                write_line(&mut w, &PointRecord { chain, points: d.clone() })?;
            }
        }
    }
    Ok(())
}

/// Headerless numeric CSV; `#` lines are skipped.
pub fn read_matrix_csv<R: std::io::Read>(reader: R) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(i + 1, e))?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| parse_err(i + 1, format!("{f:?}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(i + 1, format!("{} fields, expected {}", row.len(), first.len())));
            }
        }
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, |r| r.len());
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn write_matrix_csv<W: Write>(w: W, m: &DMatrix<f64>) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for i in 0..m.nrows() {
        wtr.write_record(m.row(i).iter().map(|v| v.to_string())).map_err(|e| Error::Internal(e.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_susie_csv<R: std::io::Read>(reader: R) -> Result<SusieAlphas> {
    let m = read_matrix_csv(reader)?;
    SusieAlphas::new((0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect())
}

/// Regression data: first column the response, remaining columns the design.
pub fn read_regression_csv<R: std::io::Read>(reader: R) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let m = read_matrix_csv(reader)?;
    if m.ncols() < 2 || m.nrows() == 0 {
        return invalid("regression data needs a response column and at least one covariate");
    }
    let y = m.column(0).iter().copied().collect();
    Ok((y, m.columns(1, m.ncols() - 1).into_owned()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryRecord {
    pub id: GroupId,
    pub region: Region,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count_interval: Option<(u32, u32)>,
    pub pip: f64,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelaxedRecord {
    pub id: GroupId,
    pub x: f64,
}

/// The detection output document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub error_spec: ErrorRateSpec,
    pub discoveries: Vec<DiscoveryRecord>,
    pub objective: f64,
    pub upper_bound: f64,
    pub budget_used: f64,
    pub flags: Vec<String>,
    pub relaxed: Vec<RelaxedRecord>,
    pub n_nonintegers: usize,
    pub repair: RepairMethod,
}

impl From<&DetectionSet> for DetectionReport {
    fn from(det: &DetectionSet) -> Self {
        DetectionReport {
            error_spec: det.error_spec,
            discoveries: det
                .discoveries
                .iter()
                .map(|d| DiscoveryRecord {
                    id: d.group.id,
                    region: d.group.region.clone(),
                    count_interval: d.group.count_interval,
                    pip: d.pip(),
                    weight: d.weight(),
                })
                .collect(),
            objective: det.objective,
            upper_bound: det.upper_bound,
            budget_used: det.error_budget_used,
            flags: det.stats.flags.clone(),
            relaxed: det.relaxed.iter().map(|&(id, x)| RelaxedRecord { id, x }).collect(),
            n_nonintegers: det.stats.n_nonintegers,
            repair: det.stats.repair,
        }
    }
}

impl DetectionReport {
    /// Rebuilds the detection set. Group counts and backtracks are not
    /// stored in the report and come back as zero.
    pub fn to_detection_set(&self) -> DetectionSet {
        let mut det = DetectionSet::empty(self.error_spec);
        det.discoveries = self
            .discoveries
            .iter()
            .map(|d| Discovery {
                group: CandidateGroup {
                    id: d.id,
                    region: d.region.clone(),
                    count_interval: d.count_interval,
                    weight: Some(d.weight),
                    pip: Some(d.pip),
                },
                selection_prob: 1.0,
            })
            .collect();
        det.objective = self.objective;
        det.upper_bound = self.upper_bound;
        det.error_budget_used = self.budget_used;
        det.relaxed = self.relaxed.iter().map(|r| (r.id, r.x)).collect();
        det.stats.flags = self.flags.clone();
        det.stats.n_nonintegers = self.n_nonintegers;
        det.stats.repair = self.repair;
        det
    }
}

pub fn write_detections<W: Write>(mut w: W, det: &DetectionSet) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, &DetectionReport::from(det)).map_err(|e| Error::Internal(e.to_string()))?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn read_detections<R: std::io::Read>(reader: R) -> Result<DetectionReport> {
    serde_json::from_reader(reader).map_err(|e| parse_err(e.line(), e))
}
