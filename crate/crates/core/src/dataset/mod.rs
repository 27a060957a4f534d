//! Daily streamflow panels: loading, log/z-score transforms, the
//! train/validation/test split and sample covariance.

mod synthetic;

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use synthetic::{
    generate_synthetic_network, generate_synthetic_panel, planted_spatial_network, EdgeSpec,
    SyntheticNetwork, SyntheticSpec,
};

/// Offset used by Farmer's small-constant variant of the log transform (m³/s).
pub const FARMER_OFFSET: f64 = 0.00003;

/// An n×p matrix of daily discharge (m³/s), one column per gauge.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamflowPanel {
    dates: Vec<NaiveDate>,
    gauge_ids: Vec<String>,
    q: Array2<f64>,
}

impl StreamflowPanel {
    /// Builds a panel, checking shape, id uniqueness, finite non-negative
    /// values and strictly increasing dates. Consecutive-day coverage is
    /// only enforced by [`load_panel`] and [`StreamflowPanel::require_consecutive`],
    /// since train and validation subsets are not contiguous.
    pub fn new(dates: Vec<NaiveDate>, gauge_ids: Vec<String>, q: Array2<f64>) -> Result<Self> {
        if q.nrows() != dates.len() || q.ncols() != gauge_ids.len() {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{} but {} dates and {} gauges were given",
                q.nrows(),
                q.ncols(),
                dates.len(),
                gauge_ids.len()
            )));
        }
        let mut seen = HashSet::new();
        for id in &gauge_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateGauge(id.clone()));
            }
        }
        for w in dates.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::DatesNotIncreasing {
                    prev: w[0].to_string(),
                    next: w[1].to_string(),
                });
            }
        }
        for ((row, col), &v) in q.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::MissingValue { row, col });
            }
            if v < 0.0 {
                return Err(Error::NegativeDischarge { row, col });
            }
        }
        Ok(Self {
            dates,
            gauge_ids,
            q,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn gauge_ids(&self) -> &[String] {
        &self.gauge_ids
    }

    pub fn q(&self) -> ArrayView2<'_, f64> {
        self.q.view()
    }

    pub fn n_days(&self) -> usize {
        self.q.nrows()
    }

    pub fn n_gauges(&self) -> usize {
        self.q.ncols()
    }

    pub fn gauge_index(&self, id: &str) -> Option<usize> {
        self.gauge_ids.iter().position(|g| g == id)
    }

    pub fn require_consecutive(&self) -> Result<()> {
        for w in self.dates.windows(2) {
            if w[0].succ_opt() != Some(w[1]) {
                return Err(Error::DateGap {
                    prev: w[0].to_string(),
                    next: w[1].to_string(),
                });
            }
        }
        Ok(())
    }

    /// Sub-panel made of the given rows, in the order given.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let dates = rows.iter().map(|&r| self.dates[r]).collect();
        let q = self.q.select(Axis(0), rows);
        Self::new(dates, self.gauge_ids.clone(), q)
    }

    fn reject_constant_columns(&self) -> Result<()> {
        for (j, col) in self.q.axis_iter(Axis(1)).enumerate() {
            let first = col[0];
            if col.iter().all(|&v| v == first) {
                return Err(Error::ConstantColumn(self.gauge_ids[j].clone()));
            }
        }
        Ok(())
    }
}

/// What the loader does with empty or `NaN` cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    #[default]
    Reject,
    DropRows,
}

pub fn load_panel(path: impl AsRef<Path>, on_missing: MissingPolicy) -> Result<StreamflowPanel> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_panel(file, on_missing)
}

/// Parses the panel CSV format: header `date,<id_1>,...,<id_p>`, ISO dates,
/// decimal discharge, missing cells empty or `NaN`.
pub fn read_panel<R: Read>(reader: R, on_missing: MissingPolicy) -> Result<StreamflowPanel> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() < 2 || !header[0].eq_ignore_ascii_case("date") {
        return Err(Error::MalformedHeader(
            "expected `date,<gauge_id_1>,...`".to_string(),
        ));
    }
    let gauge_ids: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    if gauge_ids.iter().any(|g| g.is_empty()) {
        return Err(Error::MalformedHeader("empty gauge id".to_string()));
    }
    let p = gauge_ids.len();

    let mut dates = Vec::new();
    let mut values = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let line = row + 2;
        if record.len() != p + 1 {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", p + 1, record.len()),
            });
        }
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d").map_err(|e| Error::Parse {
            line,
            message: format!("bad date {:?}: {e}", &record[0]),
        })?;
        let mut cells = Vec::with_capacity(p);
        let mut has_missing = false;
        for (col, cell) in record.iter().skip(1).enumerate() {
            if cell.is_empty() || cell.eq_ignore_ascii_case("nan") {
                if on_missing == MissingPolicy::Reject {
                    return Err(Error::MissingValue { row, col });
                }
                has_missing = true;
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                row,
                col,
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonNumeric {
                    row,
                    col,
                    value: cell.to_string(),
                });
            }
            if v < 0.0 {
                return Err(Error::NegativeDischarge { row, col });
            }
            cells.push(v);
        }
        if has_missing {
            continue;
        }
        dates.push(date);
        values.extend(cells);
    }
    if dates.is_empty() {
        return Err(Error::TooFewRows { needed: 1, got: 0 });
    }
    let q = Array2::from_shape_vec((dates.len(), p), values)
        .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
    let panel = StreamflowPanel::new(dates, gauge_ids, q)?;
    if on_missing == MissingPolicy::Reject {
        panel.require_consecutive()?;
    }
    panel.reject_constant_columns()?;
    Ok(panel)
}

pub fn write_panel<W: std::io::Write>(panel: &StreamflowPanel, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["date".to_string()];
    header.extend(panel.gauge_ids.iter().cloned());
    wtr.write_record(&header)?;
    for (date, row) in panel.dates.iter().zip(panel.q.axis_iter(Axis(0))) {
        let mut rec = vec![date.format("%Y-%m-%d").to_string()];
        rec.extend(row.iter().map(|v| format!("{v}")));
        wtr.write_record(&rec)?;
    }
    wtr.flush().map_err(|e| Error::io("<panel csv>", e))?;
    Ok(())
}

/// Log transform `y = ln(q + offset)`. The default offset of 1 maps zero
/// flow to zero; [`FARMER_OFFSET`] gives the small-constant variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogTransform {
    pub offset: f64,
}

impl Default for LogTransform {
    fn default() -> Self {
        Self { offset: 1.0 }
    }
}

impl LogTransform {
    pub fn farmer() -> Self {
        Self {
            offset: FARMER_OFFSET,
        }
    }

    pub fn forward(&self, q: f64) -> f64 {
        if self.offset == 1.0 {
            q.ln_1p()
        } else {
            (q + self.offset).ln()
        }
    }

    pub fn inverse(&self, y: f64) -> f64 {
        if self.offset == 1.0 {
            y.exp_m1()
        } else {
            y.exp() - self.offset
        }
    }

    pub fn apply(&self, q: ArrayView2<f64>) -> Array2<f64> {
        q.mapv(|v| self.forward(v))
    }
}

/// `y = ln(q + 1)` elementwise.
pub fn to_log(panel: &StreamflowPanel) -> Array2<f64> {
    LogTransform::default().apply(panel.q())
}

/// Per-gauge mean and sample standard deviation removed by [`standardize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformStats {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl TransformStats {
    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// Applies these statistics to another matrix of the same width.
    pub fn apply(&self, y: ArrayView2<f64>) -> Result<Array2<f64>> {
        if y.ncols() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "stats have {} columns, matrix has {}",
                self.len(),
                y.ncols()
            )));
        }
        let mut z = y.to_owned();
        for (j, mut col) in z.axis_iter_mut(Axis(1)).enumerate() {
            let (mu, sd) = (self.mu[j], self.sigma[j]);
            col.mapv_inplace(|v| (v - mu) / sd);
        }
        Ok(z)
    }
}

/// Column-wise z-score with sample (n−1) standard deviation.
pub fn standardize(y: ArrayView2<f64>) -> Result<(Array2<f64>, TransformStats)> {
    let n = y.nrows();
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, got: n });
    }
    let mut mu = Vec::with_capacity(y.ncols());
    let mut sigma = Vec::with_capacity(y.ncols());
    for (j, col) in y.axis_iter(Axis(1)).enumerate() {
        let m = col.sum() / n as f64;
        let ss: f64 = col.iter().map(|v| (v - m) * (v - m)).sum();
        let sd = (ss / (n - 1) as f64).sqrt();
        if !(sd > 0.0) || !sd.is_finite() {
            return Err(Error::ZeroVariance(j));
        }
        mu.push(m);
        sigma.push(sd);
    }
    let stats = TransformStats { mu, sigma };
    let z = stats.apply(y)?;
    Ok((z, stats))
}

/// Discharge rebuilt from standardized estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub q: Array2<f64>,
    /// Number of entries that came out negative and were clamped to zero.
    pub clamped: usize,
}

/// `q̂ = exp(ẑ·σ + μ) − 1` per column, clamped at zero.
pub fn invert_transform(z_hat: ArrayView2<f64>, stats: &TransformStats) -> Result<Reconstruction> {
    invert_transform_with(z_hat, stats, &LogTransform::default())
}

pub fn invert_transform_with(
    z_hat: ArrayView2<f64>,
    stats: &TransformStats,
    transform: &LogTransform,
) -> Result<Reconstruction> {
    if z_hat.ncols() != stats.len() {
        return Err(Error::DimensionMismatch(format!(
            "stats have {} columns, estimates have {}",
            stats.len(),
            z_hat.ncols()
        )));
    }
    let mut q = Array2::zeros(z_hat.raw_dim());
    let mut clamped = 0;
    for ((row, col), &z) in z_hat.indexed_iter() {
        let y = z * stats.sigma[col] + stats.mu[col];
        let v = transform.inverse(y);
        if !v.is_finite() {
            return Err(Error::Overflow { row, col });
        }
        q[[row, col]] = if v < 0.0 {
            clamped += 1;
            0.0
        } else {
            v
        };
    }
    Ok(Reconstruction { q, clamped })
}

/// Chronological test suffix plus a seeded train/validation partition of
/// the earlier rows.
#[derive(Debug, Clone)]
pub struct DataSplits {
    pub train: StreamflowPanel,
    pub val: StreamflowPanel,
    pub test: StreamflowPanel,
    pub train_rows: Vec<usize>,
    pub val_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub seed: u64,
    pub train_fraction_of_early: f64,
}

pub fn split(panel: &StreamflowPanel, seed: u64) -> Result<DataSplits> {
    split_with_fraction(panel, seed, 0.5)
}

/// The last ⌈n/3⌉ rows become the test set; the remaining rows are shuffled
/// with a seeded ChaCha generator and the first `fraction` of them (rounded)
/// become training rows. Index lists are returned in chronological order.
pub fn split_with_fraction(
    panel: &StreamflowPanel,
    seed: u64,
    fraction: f64,
) -> Result<DataSplits> {
    let n = panel.n_days();
    if n < 6 {
        return Err(Error::TooFewRows { needed: 6, got: n });
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction {fraction} outside (0, 1)"
        )));
    }
    let n_test = n.div_ceil(3);
    let n_early = n - n_test;
    let mut early: Vec<usize> = (0..n_early).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    early.shuffle(&mut rng);
    let n_train = ((n_early as f64) * fraction).round() as usize;
    let n_train = n_train.clamp(2, n_early - 2);
    let mut train_rows = early[..n_train].to_vec();
    let mut val_rows = early[n_train..].to_vec();
    train_rows.sort_unstable();
    val_rows.sort_unstable();
    let test_rows: Vec<usize> = (n_early..n).collect();
    Ok(DataSplits {
        train: panel.select_rows(&train_rows)?,
        val: panel.select_rows(&val_rows)?,
        test: panel.select_rows(&test_rows)?,
        train_rows,
        val_rows,
        test_rows,
        seed,
        train_fraction_of_early: fraction,
    })
}

/// `S = Zᵀ Z / (n − 1)`.
pub fn sample_covariance(z: ArrayView2<f64>) -> Result<Array2<f64>> {
    let n = z.nrows();
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, got: n });
    }
    let mut s = z.t().dot(&z) / (n - 1) as f64;
    crate::linalg::symmetrize(&mut s);
    Ok(s)
}

/// Log-transform and standardize a panel with its own statistics.
pub fn standardized(panel: &StreamflowPanel, transform: &LogTransform) -> Result<(Array2<f64>, TransformStats)> {
    standardize(transform.apply(panel.q()).view())
}
