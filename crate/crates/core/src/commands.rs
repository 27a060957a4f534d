//! The pipeline steps behind the `gaugenet` binary, one function per
//! subcommand. Every command writes its files, reloads each one to check it
//! parses back to the same content, and removes what it wrote if anything
//! fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dataset::{generate_synthetic_network, planted_spatial_network, EdgeSpec, SyntheticSpec};
use crate::dataset::{load_panel, split_with_fraction, write_panel, DataSplits, LogTransform, MissingPolicy, StreamflowPanel};
use crate::error::{Error, Result};
use crate::graph::{corr_graph, dist_graph, GaugeGraph};
use crate::inference::{evaluate_with, EvaluationReport, InferenceApproach};
use crate::io::{self, FrontFile, PlanFile, PredictionRow};
use crate::removal::{confident_removals, run_rg};
use crate::scoring::{graph_score, one_tailed_t_test, resample_mean_error_with, ResampleSummary, WelchTest};
use crate::sgm::{pareto_front, run_sgm, select_graph, SelectionPolicy, SgmConfig};
use crate::svg::scatter_svg;

/// Settings shared by the commands. Read from a JSON file; command-line
/// flags override file values, which override the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub k_min: usize,
    pub k_max: Option<usize>,
    pub res: usize,
    pub gamma: f64,
    pub donor_group: Vec<String>,
    pub target_group: Vec<String>,
    pub penalize_diagonal: bool,
    /// Minimum NSE for a removal to count as confident.
    pub delta: f64,
    pub seed: u64,
    pub train_fraction_of_early: f64,
    pub on_missing: MissingPolicy,
    /// 1 = z-score, 2 = log-space regression, 3 = raw regression.
    pub approach: u8,
    /// `knee`, `min_error` or `edges=<k>`.
    pub policy: String,
    pub panel: Option<PathBuf>,
    pub coords: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = SgmConfig::default();
        Self {
            lambda_min: s.lambda_min,
            lambda_max: s.lambda_max,
            k_min: s.k_min,
            k_max: s.k_max,
            res: s.res,
            gamma: s.gamma,
            donor_group: s.donor_group,
            target_group: s.target_group,
            penalize_diagonal: s.penalize_diagonal,
            delta: 0.7,
            seed: 0,
            train_fraction_of_early: 0.5,
            on_missing: MissingPolicy::Reject,
            approach: 2,
            policy: "knee".to_string(),
            panel: None,
            coords: None,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        io::read_json(path)
    }

    pub fn sgm(&self) -> SgmConfig {
        SgmConfig {
            lambda_min: self.lambda_min,
            lambda_max: self.lambda_max,
            k_min: self.k_min,
            k_max: self.k_max,
            res: self.res,
            gamma: self.gamma,
            donor_group: self.donor_group.clone(),
            target_group: self.target_group.clone(),
            penalize_diagonal: self.penalize_diagonal,
        }
    }

    pub fn inference_approach(&self) -> Result<InferenceApproach> {
        InferenceApproach::from_number(self.approach)
    }

    pub fn selection_policy(&self) -> Result<SelectionPolicy> {
        self.policy.parse()
    }

    /// Checks everything that does not depend on the panel.
    pub fn validate(&self) -> Result<()> {
        self.inference_approach()?;
        self.selection_policy()?;
        if !self.delta.is_finite() {
            return Err(Error::InvalidParameter(format!("delta {}", self.delta)));
        }
        if !(self.train_fraction_of_early > 0.0 && self.train_fraction_of_early < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "train_fraction_of_early {} outside (0, 1)",
                self.train_fraction_of_early
            )));
        }
        self.sgm().validate(2 + self.k_min.max(self.k_max.unwrap_or(0)))
    }

    pub fn load_panel(&self) -> Result<StreamflowPanel> {
        let path = self
            .panel
            .as_ref()
            .ok_or_else(|| Error::MissingInput("panel CSV (--panel)".to_string()))?;
        load_panel(path, self.on_missing)
    }

    pub fn splits(&self, panel: &StreamflowPanel) -> Result<DataSplits> {
        split_with_fraction(panel, self.seed, self.train_fraction_of_early)
    }

    fn out_path(&self, explicit: Option<&Path>, name: &str) -> PathBuf {
        explicit.map(Path::to_path_buf).unwrap_or_else(|| self.out_dir.join(name))
    }
}

/// Command-line overrides for [`RunConfig`].
#[derive(Debug, Clone, Default, clap::Args)]
pub struct ConfigArgs {
    /// JSON config file; flags given here take precedence over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub panel: Option<PathBuf>,
    #[arg(long)]
    pub coords: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub lambda_min: Option<f64>,
    #[arg(long)]
    pub lambda_max: Option<f64>,
    #[arg(long)]
    pub k_min: Option<usize>,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub res: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Inference approach: 1 z-score, 2 log regression, 3 raw regression.
    #[arg(long)]
    pub approach: Option<u8>,
    /// knee, min_error or edges=<k>.
    #[arg(long)]
    pub policy: Option<String>,
    /// Comma-separated gauge ids that may only act as donors.
    #[arg(long, value_delimiter = ',')]
    pub donors: Option<Vec<String>>,
    /// Comma-separated gauge ids that may only act as targets.
    #[arg(long, value_delimiter = ',')]
    pub targets: Option<Vec<String>>,
    /// Drop rows with missing values instead of failing.
    #[arg(long)]
    pub drop_missing: bool,
    /// Leave the precision diagonal unpenalized.
    #[arg(long)]
    pub no_diagonal_penalty: bool,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($f:ident => $t:ident),*) => {$(
                if let Some(v) = &self.$f {
                    c.$t = v.clone();
                }
            )*};
        }
        set!(seed => seed, lambda_min => lambda_min, lambda_max => lambda_max, k_min => k_min,
             res => res, gamma => gamma, delta => delta, approach => approach, policy => policy,
             donors => donor_group, targets => target_group, out_dir => out_dir);
        if self.panel.is_some() {
            c.panel = self.panel.clone();
        }
        if self.coords.is_some() {
            c.coords = self.coords.clone();
        }
        if self.k_max.is_some() {
            c.k_max = self.k_max;
        }
        if self.drop_missing {
            c.on_missing = MissingPolicy::DropRows;
        }
        if self.no_diagonal_penalty {
            c.penalize_diagonal = false;
        }
        c.validate()?;
        Ok(c)
    }
}

/// Files written so far by one command; deleted on drop unless committed.
struct Outputs {
    paths: Vec<PathBuf>,
    committed: bool,
}

impl Outputs {
    fn new() -> Self {
        Self {
            paths: Vec::new(),
            committed: false,
        }
    }

    fn prepare(&mut self, path: &Path) -> Result<PathBuf> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        self.paths.push(path.to_path_buf());
        Ok(path.to_path_buf())
    }

    /// Writes JSON and checks the file reads back to identical content.
    fn json<T: Serialize + DeserializeOwned>(&mut self, path: &Path, value: &T) -> Result<PathBuf> {
        let path = self.prepare(path)?;
        io::write_json(&path, value)?;
        let back: T = io::read_json(&path)?;
        if serde_json::to_value(&back)? != serde_json::to_value(value)? {
            return Err(Error::Parse {
                line: 0,
                message: format!("{} did not round-trip", path.display()),
            });
        }
        Ok(path)
    }

    fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.paths)
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if !self.committed {
            for p in &self.paths {
                let _ = fs::remove_file(p);
            }
        }
    }
}

fn round_trip_failed(path: &Path, what: &str) -> Error {
    Error::Parse {
        line: 0,
        message: format!("{} did not round-trip: {what}", path.display()),
    }
}

pub fn cmd_fetch(sites: &[String], start: NaiveDate, end: NaiveDate, endpoint: Option<&str>, out: &Path) -> Result<PathBuf> {
    let endpoint = endpoint.map(str::to_string).unwrap_or_else(crate::nwis::endpoint_from_env);
    let panel = crate::nwis::fetch_panel(sites, start, end, &endpoint)?;
    let mut outputs = Outputs::new();
    let path = outputs.prepare(out)?;
    write_panel_file(&path, &panel)?;
    let back = load_panel(&path, MissingPolicy::DropRows)?;
    if back.dates() != panel.dates() || back.gauge_ids() != panel.gauge_ids() || back.q() != panel.q() {
        return Err(round_trip_failed(&path, "panel"));
    }
    outputs.commit();
    Ok(path)
}

fn write_panel_file(path: &Path, panel: &StreamflowPanel) -> Result<()> {
    let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_panel(panel, std::io::BufWriter::new(f))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectOutcome {
    pub files: Vec<PathBuf>,
    pub points: usize,
    pub front_size: usize,
    pub chosen_edges: usize,
    pub chosen_error: f64,
}

/// Split, grid search, Pareto front and graph selection. Writes
/// `front.json`, `graph.json`, `scatter.csv` and optionally `scatter.svg`
/// into the output directory.
pub fn cmd_select(cfg: &RunConfig, svg: bool) -> Result<SelectOutcome> {
    let policy = cfg.selection_policy()?;
    let panel = cfg.load_panel()?;
    let sgm = cfg.sgm();
    sgm.validate(panel.n_gauges())?;
    let splits = cfg.splits(&panel)?;
    let points = run_sgm(&splits, &sgm)?;
    let front = pareto_front(&points)?;
    let chosen = select_graph(&front, policy)?;

    let mut outputs = Outputs::new();
    outputs.json(&cfg.out_dir.join("front.json"), &FrontFile::from_front(&front))?;
    outputs.json(&cfg.out_dir.join("graph.json"), &io::GraphFile::from(chosen.graph.as_ref()))?;

    let scatter = outputs.prepare(&cfg.out_dir.join("scatter.csv"))?;
    let f = fs::File::create(&scatter).map_err(|e| Error::io(&scatter, e))?;
    io::write_scatter(std::io::BufWriter::new(f), &points, &front.source_indices)?;
    let rows = io::read_scatter(&scatter)?;
    if rows.len() != points.len() || rows.iter().filter(|r| !r.dominated).count() != front.points.len() {
        return Err(round_trip_failed(&scatter, "scatter rows"));
    }

    if svg {
        let path = outputs.prepare(&cfg.out_dir.join("scatter.svg"))?;
        let doc = scatter_svg(&points, &front.source_indices);
        fs::write(&path, &doc).map_err(|e| Error::io(&path, e))?;
        let back = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        if back != doc {
            return Err(round_trip_failed(&path, "svg"));
        }
    }
    let outcome = SelectOutcome {
        points: points.len(),
        front_size: front.points.len(),
        chosen_edges: chosen.edge_count,
        chosen_error: chosen.error_val,
        files: Vec::new(),
    };
    Ok(SelectOutcome {
        files: outputs.commit(),
        ..outcome
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BaselineMethod {
    Dist,
    Corr,
}

/// The `m`-nearest (distance) or `m`-most-correlated donor graph.
/// Correlations use the training rows of the configured split.
pub fn cmd_baseline(cfg: &RunConfig, method: BaselineMethod, m: usize, out: Option<&Path>) -> Result<PathBuf> {
    let graph = match method {
        BaselineMethod::Dist => {
            let path = cfg.coords.as_ref().ok_or_else(|| {
                Error::MissingInput("coordinates CSV (--coords) is required for the dist baseline".to_string())
            })?;
            let coords = io::read_coords(path)?;
            let coords = match &cfg.panel {
                Some(_) => coords.aligned_to(cfg.load_panel()?.gauge_ids())?,
                None => coords,
            };
            dist_graph(&coords, m)?
        }
        BaselineMethod::Corr => {
            let panel = cfg.load_panel()?;
            let splits = cfg.splits(&panel)?;
            let (z, _) = crate::dataset::standardized(&splits.train, &LogTransform::default())?;
            corr_graph(z.view(), panel.gauge_ids().to_vec(), m)?
        }
    };
    let name = match method {
        BaselineMethod::Dist => format!("dist{m}.json"),
        BaselineMethod::Corr => format!("corr{m}.json"),
    };
    let mut outputs = Outputs::new();
    let path = outputs.json(&cfg.out_path(out, &name), &io::GraphFile::from(&graph))?;
    outputs.commit();
    Ok(path)
}

fn load_graph_for(path: &Path, panel: &StreamflowPanel) -> Result<GaugeGraph> {
    let graph = io::read_graph(path)?;
    if graph.gauge_ids() != panel.gauge_ids() {
        return Err(Error::DimensionMismatch(format!(
            "gauge ids in {} differ from the panel columns",
            path.display()
        )));
    }
    Ok(graph)
}

/// Fits donor regressions on the training rows and predicts the test rows.
/// Writes the evaluation report and a long-format predictions CSV.
pub fn cmd_infer(cfg: &RunConfig, graph_path: &Path, out: Option<&Path>) -> Result<Vec<PathBuf>> {
    let panel = cfg.load_panel()?;
    let graph = load_graph_for(graph_path, &panel)?;
    let splits = cfg.splits(&panel)?;
    let report = evaluate_with(&graph, &splits, cfg.gamma, cfg.inference_approach()?)?;

    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.out_dir.clone());
    let mut outputs = Outputs::new();
    outputs.json(&dir.join("evaluation.json"), &report)?;

    let ids = panel.gauge_ids();
    let mut rows = Vec::with_capacity(splits.test.n_days() * report.targets.len());
    for (t, date) in splits.test.dates().iter().enumerate() {
        for (k, &j) in report.targets.iter().enumerate() {
            rows.push(PredictionRow {
                date: *date,
                gauge_id: ids[j].clone(),
                observed: splits.test.q()[[t, j]],
                predicted: report.predictions[[t, k]],
            });
        }
    }
    let pred_path = outputs.prepare(&dir.join("predictions.csv"))?;
    io::write_predictions(&pred_path, &rows)?;
    let back = io::read_predictions(&pred_path)?;
    if back != rows {
        return Err(round_trip_failed(&pred_path, "predictions"));
    }
    Ok(outputs.commit())
}

/// Per-gauge NSE from an evaluation report or a `{gauge_id: nse}` object,
/// in the order of `gauge_ids`. Gauges without a value get NaN.
pub fn load_nse(path: &Path, gauge_ids: &[String]) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let by_id: BTreeMap<String, f64> = match serde_json::from_str::<EvaluationReport>(&text) {
        Ok(r) => r
            .targets
            .iter()
            .zip(&r.per_gauge_nse)
            .map(|(&j, &v)| (r.gauge_ids[j].clone(), v))
            .collect(),
        Err(_) => serde_json::from_str(&text)?,
    };
    if let Some(unknown) = by_id.keys().find(|k| !gauge_ids.contains(k)) {
        return Err(Error::UnknownGauge(unknown.clone()));
    }
    Ok(gauge_ids
        .iter()
        .map(|id| by_id.get(id).copied().unwrap_or(f64::NAN))
        .collect())
}

/// Greedy removal plan for a graph. NSE values come from `nse_path` when
/// given, otherwise from evaluating the graph on the configured panel.
pub fn cmd_remove(cfg: &RunConfig, graph_path: &Path, nse_path: Option<&Path>, out: Option<&Path>) -> Result<PathBuf> {
    let graph = io::read_graph(graph_path)?;
    let nse = match nse_path {
        Some(p) => load_nse(p, graph.gauge_ids())?,
        None => {
            let panel = cfg.load_panel()?;
            let graph = load_graph_for(graph_path, &panel)?;
            let report = evaluate_with(&graph, &cfg.splits(&panel)?, cfg.gamma, cfg.inference_approach()?)?;
            report
                .nse_by_gauge()
                .into_iter()
                .map(|v| v.unwrap_or(f64::NAN))
                .collect()
        }
    };
    let plan = run_rg(&nse, &graph)?;
    let file = PlanFile::new(&plan, graph.gauge_ids(), cfg.delta);
    let mut outputs = Outputs::new();
    let path = outputs.json(&cfg.out_path(out, "plan.json"), &file)?;
    outputs.commit();
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphScoreRecord {
    pub name: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TTestRecord {
    /// Alternative hypothesis: mean error of `a` is below that of `b`.
    pub a: String,
    pub b: String,
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreFile {
    pub delta: f64,
    pub m_rem: usize,
    pub scores: Vec<GraphScoreRecord>,
    pub t_tests: Vec<TTestRecord>,
}

fn label(p: &Path) -> String {
    p.display().to_string()
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

#[derive(Debug, Clone, Default)]
pub struct ScoreInputs {
    /// Evaluation reports or NSE maps, one per graph.
    pub nse: Vec<PathBuf>,
    /// Removal plans; `M_rem` is the largest confident-removal count.
    pub plans: Vec<PathBuf>,
    /// Resampling summaries compared pairwise with one-tailed t-tests.
    pub resamples: Vec<PathBuf>,
    pub m_rem: Option<usize>,
}

/// Graph scores (mean of the top `M_rem` NSE values) with a shared
/// `M_rem`, plus pairwise t-tests on resampled errors.
pub fn cmd_score(cfg: &RunConfig, inputs: &ScoreInputs, out: Option<&Path>) -> Result<PathBuf> {
    let m_rem = match inputs.m_rem {
        Some(m) => m,
        None if !inputs.plans.is_empty() => {
            let mut m = 0;
            for p in &inputs.plans {
                let plan = io::read_json::<PlanFile>(p)?.to_plan()?;
                m = m.max(confident_removals(&plan, cfg.delta).len());
            }
            m
        }
        None if inputs.nse.is_empty() => 0,
        None => return Err(Error::MissingInput("removal plans (--plan) or --m-rem".to_string())),
    };
    let mut scores = Vec::with_capacity(inputs.nse.len());
    for p in &inputs.nse {
        let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
        let values: Vec<f64> = match serde_json::from_str::<EvaluationReport>(&text) {
            Ok(r) => r.per_gauge_nse,
            Err(_) => serde_json::from_str::<BTreeMap<String, f64>>(&text)?.into_values().collect(),
        };
        scores.push(GraphScoreRecord {
            name: label(p),
            score: graph_score(&values, m_rem)?,
        });
    }
    let summaries = inputs
        .resamples
        .iter()
        .map(|p| Ok((label(p), io::read_json::<ResampleSummary>(p)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut t_tests = Vec::new();
    for (a, sa) in &summaries {
        for (b, sb) in &summaries {
            if std::ptr::eq(sa, sb) {
                continue;
            }
            let WelchTest { t, df, p_value } = one_tailed_t_test(&sa.errors, &sb.errors)?;
            t_tests.push(TTestRecord {
                a: a.clone(),
                b: b.clone(),
                t,
                df,
                p_value,
            });
        }
    }
    let file = ScoreFile {
        delta: cfg.delta,
        m_rem,
        scores,
        t_tests,
    };
    let mut outputs = Outputs::new();
    let path = outputs.json(&cfg.out_path(out, "score.json"), &file)?;
    outputs.commit();
    Ok(path)
}

/// Test error of a fixed graph over `runs` re-drawn train/validation
/// splits with seeds `seed, seed + 1, ...`.
pub fn cmd_resample(cfg: &RunConfig, graph_path: &Path, runs: usize, out: Option<&Path>) -> Result<PathBuf> {
    let panel = cfg.load_panel()?;
    let graph = load_graph_for(graph_path, &panel)?;
    let summary = resample_mean_error_with(
        &panel,
        &graph,
        runs,
        cfg.seed,
        cfg.gamma,
        cfg.inference_approach()?,
        cfg.train_fraction_of_early,
    )?;
    let name = format!("resample_{}.json", stem(graph_path));
    let mut outputs = Outputs::new();
    let path = outputs.json(&cfg.out_path(out, &name), &summary)?;
    outputs.commit();
    Ok(path)
}

/// Synthetic panel with a planted spatial network: writes `panel.csv`,
/// `coords.csv` and the generating graph as `truth.json`.
pub fn cmd_synth(p: usize, n: usize, edges: usize, seed: u64, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let (edge_list, coords) = planted_spatial_network(p, edges, seed)?;
    let net = generate_synthetic_network(&SyntheticSpec::new(p, n, EdgeSpec::List(edge_list), seed))?;
    let mut outputs = Outputs::new();
    let panel_path = outputs.prepare(&out_dir.join("panel.csv"))?;
    write_panel_file(&panel_path, &net.panel)?;
    if load_panel(&panel_path, MissingPolicy::Reject)?.gauge_ids() != net.panel.gauge_ids() {
        return Err(round_trip_failed(&panel_path, "panel"));
    }
    let coords_path = outputs.prepare(&out_dir.join("coords.csv"))?;
    io::write_coords(&coords_path, &coords)?;
    if io::read_coords(&coords_path)? != coords {
        return Err(round_trip_failed(&coords_path, "coordinates"));
    }
    outputs.json(&out_dir.join("truth.json"), &io::GraphFile::from(&net.graph))?;
    Ok(outputs.commit())
}
