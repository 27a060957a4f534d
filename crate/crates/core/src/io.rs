//! File formats for graphs, coordinates, fronts, predictions and plans.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{GaugeCoords, GaugeGraph};
use crate::removal::{nse_band, GaugeStatus, RemovalEntry, RemovalPlan};
use crate::sgm::{CandidatePoint, ParetoFront};

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    Ok(serde_json::from_reader(open(path)?)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub gauge_ids: Vec<String>,
    pub edges: Vec<[usize; 2]>,
}

impl From<&GaugeGraph> for GraphFile {
    fn from(g: &GaugeGraph) -> Self {
        Self {
            gauge_ids: g.gauge_ids().to_vec(),
            edges: g.edges().map(|(i, j)| [i, j]).collect(),
        }
    }
}

impl GraphFile {
    pub fn into_graph(self) -> Result<GaugeGraph> {
        GaugeGraph::from_edges(self.gauge_ids, self.edges.into_iter().map(|[i, j]| (i, j)))
    }
}

pub fn write_graph(path: impl AsRef<Path>, g: &GaugeGraph) -> Result<()> {
    write_json(path, &GraphFile::from(g))
}

pub fn read_graph(path: impl AsRef<Path>) -> Result<GaugeGraph> {
    read_json::<GraphFile>(path)?.into_graph()
}

#[derive(Debug, Serialize, Deserialize)]
struct CoordRow {
    gauge_id: String,
    lat: f64,
    lon: f64,
}

/// Reads a `gauge_id,lat,lon` CSV.
pub fn read_coords_from<R: Read>(reader: R) -> Result<GaugeCoords> {
    let mut ids = Vec::new();
    let mut lat = Vec::new();
    let mut lon = Vec::new();
    for row in csv::Reader::from_reader(reader).deserialize() {
        let row: CoordRow = row?;
        ids.push(row.gauge_id);
        lat.push(row.lat);
        lon.push(row.lon);
    }
    GaugeCoords::new(ids, lat, lon)
}

pub fn read_coords(path: impl AsRef<Path>) -> Result<GaugeCoords> {
    read_coords_from(open(path.as_ref())?)
}

pub fn write_coords(path: impl AsRef<Path>, coords: &GaugeCoords) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(create(path)?);
    for i in 0..coords.len() {
        w.serialize(CoordRow {
            gauge_id: coords.gauge_ids[i].clone(),
            lat: coords.lat[i],
            lon: coords.lon[i],
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One grid point of a front file; the graph is stored as its edge list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointRecord {
    pub lambda_index: usize,
    pub k_requested: usize,
    pub edge_count: usize,
    pub error_val: f64,
    pub lambda: f64,
    pub tau: f64,
    pub converged: bool,
    pub edges: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrontFile {
    pub gauge_ids: Vec<String>,
    pub points: Vec<PointRecord>,
}

impl FrontFile {
    pub fn from_front(front: &ParetoFront) -> Self {
        let gauge_ids = front
            .points
            .first()
            .map(|c| c.graph.gauge_ids().to_vec())
            .unwrap_or_default();
        let points = front
            .points
            .iter()
            .map(|c| PointRecord {
                lambda_index: c.lambda_index,
                k_requested: c.k_requested,
                edge_count: c.edge_count,
                error_val: c.error_val,
                lambda: c.lambda,
                tau: c.tau,
                converged: c.converged,
                edges: c.graph.edges().map(|(i, j)| [i, j]).collect(),
            })
            .collect();
        Self { gauge_ids, points }
    }

    pub fn graphs(&self) -> Result<Vec<GaugeGraph>> {
        self.points
            .iter()
            .map(|r| GaugeGraph::from_edges(self.gauge_ids.clone(), r.edges.iter().map(|&[i, j]| (i, j))))
            .collect()
    }
}

/// `edge_count,error_val,lambda,tau,dominated` for every grid point.
pub fn write_scatter<W: Write>(writer: W, points: &[CandidatePoint], front_indices: &[usize]) -> Result<()> {
    let mut on_front = vec![false; points.len()];
    for &i in front_indices {
        on_front[i] = true;
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["edge_count", "error_val", "lambda", "tau", "dominated"])?;
    for (c, &f) in points.iter().zip(&on_front) {
        w.write_record([
            c.edge_count.to_string(),
            c.error_val.to_string(),
            c.lambda.to_string(),
            c.tau.to_string(),
            (!f).to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<scatter>", e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub edge_count: usize,
    pub error_val: f64,
    pub lambda: f64,
    pub tau: f64,
    pub dominated: bool,
}

pub fn read_scatter(path: impl AsRef<Path>) -> Result<Vec<ScatterRow>> {
    csv::Reader::from_reader(open(path.as_ref())?)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub date: NaiveDate,
    pub gauge_id: String,
    pub observed: f64,
    pub predicted: f64,
}

pub fn write_predictions(path: impl AsRef<Path>, rows: &[PredictionRow]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionRow>> {
    csv::Reader::from_reader(open(path.as_ref())?)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanEntryRecord {
    pub gauge: usize,
    pub gauge_id: String,
    pub nse: f64,
    pub band: String,
    pub donors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeStatusRecord {
    pub gauge_id: String,
    pub status: GaugeStatus,
}

/// Removal plan with gauge ids spelled out and NSE colour bands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub gauge_ids: Vec<String>,
    pub delta: f64,
    pub max_rem_rank: usize,
    pub confident: Vec<String>,
    pub queue: Vec<PlanEntryRecord>,
    pub status: Vec<GaugeStatusRecord>,
}

impl PlanFile {
    pub fn new(plan: &RemovalPlan, gauge_ids: &[String], delta: f64) -> Self {
        Self {
            gauge_ids: gauge_ids.to_vec(),
            delta,
            max_rem_rank: plan.max_rem_rank,
            confident: crate::removal::confident_removals(plan, delta)
                .into_iter()
                .map(|j| gauge_ids[j].clone())
                .collect(),
            queue: plan
                .queue
                .iter()
                .map(|e| PlanEntryRecord {
                    gauge: e.gauge,
                    gauge_id: gauge_ids[e.gauge].clone(),
                    nse: e.nse,
                    band: nse_band(e.nse).to_string(),
                    donors: e.donors.iter().map(|&d| gauge_ids[d].clone()).collect(),
                })
                .collect(),
            status: plan
                .status
                .iter()
                .zip(gauge_ids)
                .map(|(&status, id)| GaugeStatusRecord {
                    gauge_id: id.clone(),
                    status,
                })
                .collect(),
        }
    }

    pub fn to_plan(&self) -> Result<RemovalPlan> {
        let index = |id: &str| {
            self.gauge_ids
                .iter()
                .position(|g| g == id)
                .ok_or_else(|| Error::UnknownGauge(id.to_string()))
        };
        let queue = self
            .queue
            .iter()
            .map(|e| {
                Ok(RemovalEntry {
                    gauge: index(&e.gauge_id)?,
                    nse: e.nse,
                    donors: e.donors.iter().map(|d| index(d)).collect::<Result<_>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RemovalPlan {
            queue,
            max_rem_rank: self.max_rem_rank,
            status: self.status.iter().map(|s| s.status).collect(),
        })
    }
}
