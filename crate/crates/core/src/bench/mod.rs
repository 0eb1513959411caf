//! Benchmark harness: grid runs, best-known-solution comparison and
//! aggregation tables.

pub mod oracle;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clustering::{ClusteringMethod, QPolicy};
use crate::error::{Error, Result};
use crate::improve::{error_gap, Strategy};
use crate::instance::{parse_instance, Instance};
use crate::pipeline::{run_dri, DriConfig};
use crate::synthetic::SyntheticSpec;

pub use oracle::{oracle_suite, OracleReport, OracleResult};

/// Version of the results CSV column set.
pub const RESULTS_SCHEMA_VERSION: u32 = 1;

/// Best-known costs keyed by instance name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BksTable {
    entries: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
struct BksRow {
    instance: String,
    bks: f64,
}

impl BksTable {
    pub fn new(entries: BTreeMap<String, f64>) -> Result<Self> {
        if let Some((name, z)) = entries.iter().find(|(_, z)| !(**z > 0.0) || !z.is_finite()) {
            return Err(Error::InvalidConfig(format!("best-known cost for {name} must be positive, got {z}")));
        }
        Ok(BksTable { entries })
    }

    /// Reads a CSV with `instance` and `bks` columns.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut entries = BTreeMap::new();
        for row in reader.deserialize() {
            let row: BksRow = row?;
            entries.insert(row.instance, row.bks);
        }
        Self::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::from_csv_str(&text)
    }

    pub fn get(&self, instance: &str) -> Option<f64> {
        self.entries.get(instance).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Values swept by the grid. An absent axis keeps the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridAxes {
    pub q: Option<Vec<usize>>,
    pub methods: Option<Vec<ClusteringMethod>>,
    pub lambda: Option<Vec<f64>>,
    pub alpha: Option<Vec<f64>>,
    pub theta: Option<Vec<f64>>,
    pub phi: Option<Vec<usize>>,
    pub varphi: Option<Vec<usize>>,
    pub rho: Option<Vec<f64>>,
    pub strategy: Option<Vec<Strategy>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentGrid {
    /// Glob of instance files, relative to the grid file when loaded from disk.
    #[serde(default)]
    pub instances: Option<String>,
    /// Generated instances added to the file set.
    #[serde(default)]
    pub synthetic: Vec<SyntheticSpec>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub axes: GridAxes,
    #[serde(default)]
    pub base: DriConfig,
}

impl ExperimentGrid {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let grid: ExperimentGrid = toml::from_str(text)?;
        grid.validate()?;
        Ok(grid)
    }

    /// Loads a grid and anchors a relative instance glob at the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let mut grid = Self::from_toml_str(&text)?;
        if let (Some(pattern), Some(dir)) = (&grid.instances, path.parent()) {
            if Path::new(pattern).is_relative() && !dir.as_os_str().is_empty() {
                grid.instances = Some(dir.join(pattern).to_string_lossy().into_owned());
            }
        }
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("grid has no seeds".into()));
        }
        if self.instances.is_none() && self.synthetic.is_empty() {
            return Err(Error::InvalidConfig("grid has neither an instance glob nor synthetic instances".into()));
        }
        let a = &self.axes;
        let lens = [
            ("q", a.q.as_ref().map(Vec::len)),
            ("methods", a.methods.as_ref().map(Vec::len)),
            ("lambda", a.lambda.as_ref().map(Vec::len)),
            ("alpha", a.alpha.as_ref().map(Vec::len)),
            ("theta", a.theta.as_ref().map(Vec::len)),
            ("phi", a.phi.as_ref().map(Vec::len)),
            ("varphi", a.varphi.as_ref().map(Vec::len)),
            ("rho", a.rho.as_ref().map(Vec::len)),
            ("strategy", a.strategy.as_ref().map(Vec::len)),
        ];
        if let Some((name, _)) = lens.iter().find(|(_, l)| *l == Some(0)) {
            return Err(Error::InvalidConfig(format!("grid axis {name} is empty")));
        }
        for config in self.configs() {
            config.validate()?;
        }
        Ok(())
    }

    /// Cartesian product of the axes applied to the base config.
    pub fn configs(&self) -> Vec<DriConfig> {
        let mut out = vec![self.base.clone()];
        fn sweep<T: Clone>(out: Vec<DriConfig>, values: &Option<Vec<T>>, set: impl Fn(&mut DriConfig, T)) -> Vec<DriConfig> {
            let Some(values) = values else { return out };
            out.into_iter()
                .flat_map(|c| {
                    values.iter().map(|v| {
                        let mut c = c.clone();
                        set(&mut c, v.clone());
                        c
                    }).collect::<Vec<_>>()
                })
                .collect()
        }
        let a = &self.axes;
        out = sweep(out, &a.methods, |c, m| c.clustering = m);
        out = sweep(out, &a.q, |c, q| c.q_policy = QPolicy::Fixed { q });
        out = sweep(out, &a.lambda, |c, l| c.similarity.lambda = l);
        out = sweep(out, &a.alpha, |c, v| c.alpha = v);
        out = sweep(out, &a.phi, |c, v| c.vicinity.phi = v);
        out = sweep(out, &a.varphi, |c, v| c.vicinity.varphi = v);
        out = sweep(out, &a.rho, |c, v| c.vicinity.rho = Some(v));
        out = sweep(out, &a.strategy, |c, v| c.strategy = v);
        out = sweep(out, &a.theta, |c, v| c.theta = v);
        out
    }

    /// Instance files matched by the glob, sorted, plus generated instances.
    pub fn resolve_instances(&self) -> Result<Vec<Instance>> {
        let mut out = Vec::new();
        if let Some(pattern) = &self.instances {
            let paths = glob::glob(pattern).map_err(|e| Error::InvalidConfig(format!("bad instance glob {pattern}: {e}")))?;
            let mut paths: Vec<PathBuf> = paths.filter_map(|p| p.ok()).filter(|p| p.is_file()).collect();
            paths.sort();
            for path in paths {
                let text = fs::read_to_string(&path).map_err(|e| Error::file(&path, e))?;
                out.push(parse_instance(&text).map_err(|e| e.in_stage("parse"))?);
            }
        }
        for spec in &self.synthetic {
            out.push(spec.generate()?);
        }
        if out.is_empty() {
            return Err(Error::InvalidConfig("grid resolved to no instances".into()));
        }
        Ok(out)
    }
}

fn short_hash(value: &impl Serialize) -> Result<String> {
    let json = serde_json::to_string(value)?;
    let digest = Sha256::digest(json.as_bytes());
    Ok(digest.iter().take(6).map(|b| format!("{b:02x}")).collect())
}

/// Identity of a config with the seed removed.
pub fn config_id(config: &DriConfig) -> Result<String> {
    let mut c = config.clone();
    c.master_seed = 0;
    c.bks = None;
    short_hash(&c)
}

/// Identity of a config with seed and runtime removed, grouping the
/// runtime columns of the summary.
pub fn variant_id(config: &DriConfig) -> Result<String> {
    let mut c = config.clone();
    c.master_seed = 0;
    c.bks = None;
    c.theta = 0.0;
    short_hash(&c)
}

/// Benchmark family of an instance name: `C1_10_1` belongs to `C1`.
pub fn instance_class(name: &str) -> String {
    let head = name.split(['_', '-']).next().unwrap_or(name);
    let known = head.len() <= 3
        && head.starts_with(['C', 'R', 'c', 'r'])
        && head.chars().last().is_some_and(|c| c.is_ascii_digit());
    if known {
        head.to_ascii_uppercase()
    } else {
        "other".to_string()
    }
}

/// One (instance, config, seed) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub schema_version: u32,
    pub instance: String,
    pub class: String,
    pub customers: usize,
    pub config_id: String,
    pub variant_id: String,
    pub method: String,
    pub q: usize,
    pub lambda: f64,
    pub alpha: f64,
    pub theta: f64,
    pub phi: usize,
    pub varphi: usize,
    pub rho: Option<f64>,
    pub strategy: String,
    pub seed: u64,
    pub z_before: f64,
    pub z_after: f64,
    pub routes_before: usize,
    pub routes_after: usize,
    pub feasible: bool,
    pub fleet_feasible: bool,
    pub bks: Option<f64>,
    pub xi_before: Option<f64>,
    pub xi_after: Option<f64>,
    pub xi_tilde: Option<f64>,
    pub edge_reduction: f64,
    pub t_similarity: f64,
    pub t_clustering: f64,
    pub t_routing: f64,
    pub t_improvement: f64,
    pub t_total: f64,
    /// Lowest `z_after` over the seeds of the same instance and config.
    pub best_of_seeds: f64,
}

/// Columns whose values depend on the wall clock.
pub const TIMING_COLUMNS: [&str; 5] = ["t_similarity", "t_clustering", "t_routing", "t_improvement", "t_total"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResults {
    pub rows: Vec<ResultRow>,
    pub summary: Summary,
}

fn strategy_label(s: Strategy) -> &'static str {
    match s {
        Strategy::FirstDescent => "first_descent",
        Strategy::SteepestDescent => "steepest_descent",
    }
}

fn run_cell(instance: &Instance, config: &DriConfig, seed: u64, bks: &BksTable) -> Result<ResultRow> {
    let mut config = config.clone();
    config.master_seed = seed;
    config.bks = bks.get(instance.name());
    if config.bks.is_none() {
        warn!("no best-known cost for {}; gap columns left blank", instance.name());
    }
    let outcome = run_dri(instance, &config)?;
    let r = &outcome.report;
    let gap = r.gap.as_ref();
    Ok(ResultRow {
        schema_version: RESULTS_SCHEMA_VERSION,
        instance: instance.name().to_string(),
        class: instance_class(instance.name()),
        customers: instance.num_customers(),
        config_id: config_id(&config)?,
        variant_id: variant_id(&config)?,
        method: config.clustering.label(),
        q: r.q,
        lambda: config.similarity.lambda,
        alpha: config.alpha,
        theta: config.theta,
        phi: config.vicinity.phi,
        varphi: config.vicinity.varphi,
        rho: config.vicinity.rho,
        strategy: strategy_label(config.strategy).to_string(),
        seed,
        z_before: r.z_before,
        z_after: r.z_after,
        routes_before: r.routes_before,
        routes_after: r.routes_after,
        feasible: r.feasible,
        fleet_feasible: r.fleet_feasible,
        bks: config.bks,
        xi_before: gap.map(|g| g.xi_before),
        xi_after: gap.map(|g| g.xi_after),
        xi_tilde: gap.and_then(|g| g.xi_tilde),
        edge_reduction: r.edge_reduction,
        t_similarity: r.timings.similarity,
        t_clustering: r.timings.clustering,
        t_routing: r.timings.routing,
        t_improvement: r.timings.improvement,
        t_total: r.timings.total,
        best_of_seeds: f64::NAN,
    })
}

/// Fills `best_of_seeds` from the raw rows.
pub fn fill_best_of_seeds(rows: &mut [ResultRow]) {
    let mut best: BTreeMap<(String, String), f64> = BTreeMap::new();
    for r in rows.iter() {
        let e = best.entry((r.instance.clone(), r.config_id.clone())).or_insert(f64::INFINITY);
        *e = e.min(r.z_after);
    }
    for r in rows.iter_mut() {
        r.best_of_seeds = best[&(r.instance.clone(), r.config_id.clone())];
    }
}

/// Runs every (instance, config, seed) cell in a fixed order.
pub fn run_grid_on(instances: &[Instance], grid: &ExperimentGrid, bks: &BksTable) -> Result<GridResults> {
    let configs = grid.configs();
    let mut rows = Vec::with_capacity(instances.len() * configs.len() * grid.seeds.len());
    for instance in instances {
        for config in &configs {
            for &seed in &grid.seeds {
                info!("bench: {} config {} seed {seed}", instance.name(), config_id(config)?);
                rows.push(run_cell(instance, config, seed, bks)?);
            }
        }
    }
    fill_best_of_seeds(&mut rows);
    let summary = summarize(&rows);
    Ok(GridResults { rows, summary })
}

pub fn run_grid(grid: &ExperimentGrid, bks: &BksTable) -> Result<GridResults> {
    grid.validate()?;
    let instances = grid.resolve_instances()?;
    run_grid_on(&instances, grid, bks)
}

/// Best solution per runtime for one instance (or a class mean).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub instance: String,
    pub class: String,
    pub variant_id: String,
    pub method: String,
    /// Best `z_after` per Θ column.
    pub best: Vec<Option<f64>>,
    /// Gap of that best value, when a best-known cost exists.
    pub xi: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub thetas: Vec<f64>,
    pub rows: Vec<SummaryRow>,
}

/// Per-instance best over seeds for every runtime, followed by class means.
pub fn summarize(rows: &[ResultRow]) -> Summary {
    let thetas: Vec<f64> = {
        let set: BTreeSet<u64> = rows.iter().map(|r| r.theta.to_bits()).collect();
        let mut t: Vec<f64> = set.into_iter().map(f64::from_bits).collect();
        t.sort_by(f64::total_cmp);
        t
    };
    let col = |theta: f64| thetas.iter().position(|t| t.to_bits() == theta.to_bits()).expect("theta listed");
    let mut per: BTreeMap<(String, String), SummaryRow> = BTreeMap::new();
    for r in rows {
        let entry = per.entry((r.instance.clone(), r.variant_id.clone())).or_insert_with(|| SummaryRow {
            instance: r.instance.clone(),
            class: r.class.clone(),
            variant_id: r.variant_id.clone(),
            method: r.method.clone(),
            best: vec![None; thetas.len()],
            xi: vec![None; thetas.len()],
        });
        let k = col(r.theta);
        if entry.best[k].is_none_or(|b| r.z_after < b) {
            entry.best[k] = Some(r.z_after);
            entry.xi[k] = r.bks.map(|b| error_gap(r.z_after, b));
        }
    }
    let mut out: Vec<SummaryRow> = per.into_values().collect();

    let mut classes: BTreeMap<(String, String), Vec<&SummaryRow>> = BTreeMap::new();
    for r in &out {
        classes.entry((r.class.clone(), r.variant_id.clone())).or_default().push(r);
    }
    let mean = |vals: Vec<Option<f64>>| -> Option<f64> {
        let v: Option<Vec<f64>> = vals.into_iter().collect();
        v.filter(|v| !v.is_empty()).map(|v| v.iter().sum::<f64>() / v.len() as f64)
    };
    let mut means = Vec::new();
    for ((class, variant), group) in classes {
        means.push(SummaryRow {
            instance: format!("mean:{class}"),
            class,
            variant_id: variant,
            method: group[0].method.clone(),
            best: (0..thetas.len()).map(|k| mean(group.iter().map(|r| r.best[k]).collect())).collect(),
            xi: (0..thetas.len()).map(|k| mean(group.iter().map(|r| r.xi[k]).collect())).collect(),
        });
    }
    out.extend(means);
    Summary { thetas, rows: out }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn fmt_theta(t: f64) -> String {
    if t.fract() == 0.0 {
        format!("{t:.0}")
    } else {
        format!("{t}")
    }
}

impl Summary {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["instance".to_string(), "class".into(), "variant_id".into(), "method".into()];
        for &t in &self.thetas {
            header.push(format!("best_theta_{}", fmt_theta(t)));
            header.push(format!("xi_theta_{}", fmt_theta(t)));
        }
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.instance.clone(), r.class.clone(), r.variant_id.clone(), r.method.clone()];
            for k in 0..self.thetas.len() {
                rec.push(fmt_opt(r.best[k]));
                rec.push(fmt_opt(r.xi[k]));
            }
            w.write_record(&rec)?;
        }
        csv_string(w)
    }
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

impl GridResults {
    pub fn rows_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        csv_string(w)
    }

    /// Writes `results.csv`, `results.json` and `summary.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
        let put = |name: &str, body: String| {
            let p = dir.join(name);
            fs::write(&p, body).map_err(|e| Error::file(&p, e))
        };
        put("results.csv", self.rows_csv()?)?;
        put("results.json", serde_json::to_string_pretty(self)?)?;
        put("summary.csv", self.summary.to_csv()?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(instance: &str, theta: f64, seed: u64, z: f64) -> ResultRow {
        ResultRow {
            schema_version: 1,
            instance: instance.into(),
            class: instance_class(instance),
            customers: 10,
            config_id: format!("c{theta}"),
            variant_id: "v".into(),
            method: "k-m".into(),
            q: 2,
            lambda: 0.1,
            alpha: 0.8,
            theta,
            phi: 5,
            varphi: 10,
            rho: None,
            strategy: "steepest_descent".into(),
            seed,
            z_before: z,
            z_after: z,
            routes_before: 1,
            routes_after: 1,
            feasible: true,
            fleet_feasible: true,
            bks: Some(100.0),
            xi_before: None,
            xi_after: None,
            xi_tilde: None,
            edge_reduction: 0.5,
            t_similarity: 0.0,
            t_clustering: 0.0,
            t_routing: 0.0,
            t_improvement: 0.0,
            t_total: 0.0,
            best_of_seeds: f64::NAN,
        }
    }

    #[test]
    fn bks_parsing_and_validation() {
        let t = BksTable::from_csv_str("instance,bks\nC1_10_1, 42444.8\n").unwrap();
        assert_eq!(t.get("C1_10_1"), Some(42444.8));
        assert!(BksTable::from_csv_str("instance,bks\nX,0\n").is_err());
    }

    #[test]
    fn classes() {
        assert_eq!(instance_class("C1_10_1"), "C1");
        assert_eq!(instance_class("RC2_8_4"), "RC2");
        assert_eq!(instance_class("synthetic-200-3"), "other");
    }

    #[test]
    fn per_theta_summary_and_class_means() {
        let mut rows = vec![
            row("C1_10_1", 15.0, 1, 120.0),
            row("C1_10_1", 15.0, 2, 110.0),
            row("C1_10_1", 30.0, 1, 105.0),
            row("C1_10_2", 15.0, 1, 130.0),
            row("C1_10_2", 30.0, 1, 125.0),
        ];
        fill_best_of_seeds(&mut rows);
        assert_eq!(rows[0].best_of_seeds, 110.0);
        let s = summarize(&rows);
        assert_eq!(s.thetas, vec![15.0, 30.0]);
        assert_eq!(s.rows.len(), 3);
        assert_eq!(s.rows[0].best, vec![Some(110.0), Some(105.0)]);
        assert_eq!(s.rows[2].instance, "mean:C1");
        assert_eq!(s.rows[2].best, vec![Some(120.0), Some(115.0)]);
        let csv = s.to_csv().unwrap();
        assert!(csv.starts_with("instance,class,variant_id,method,best_theta_15,xi_theta_15,best_theta_30,xi_theta_30\n"));
    }

    #[test]
    fn grid_expansion() {
        let grid = ExperimentGrid::from_toml_str(
            r#"
            seeds = [1, 2]
            [[synthetic]]
            customers = 20
            seed = 3
            [axes]
            theta = [15.0, 30.0]
            q = [2, 4]
            "#,
        )
        .unwrap();
        let configs = grid.configs();
        assert_eq!(configs.len(), 4);
        assert!(ExperimentGrid::from_toml_str("seeds = []\n[[synthetic]]\ncustomers = 5\n").is_err());
        assert!(ExperimentGrid::from_toml_str("seeds = [1]\n[[synthetic]]\ncustomers=5\n[axes]\nq = []\n").is_err());
    }

    #[test]
    fn missing_bks_leaves_blanks() {
        let grid = ExperimentGrid::from_toml_str(
            r#"
            seeds = [7]
            [[synthetic]]
            customers = 12
            seed = 1
            [base]
            theta = 2.0
            q_policy = { kind = "fixed", q = 2 }
            "#,
        )
        .unwrap();
        let res = run_grid(&grid, &BksTable::default()).unwrap();
        assert_eq!(res.rows.len(), 1);
        assert!(res.rows[0].xi_after.is_none());
        let csv = res.rows_csv().unwrap();
        let line = csv.lines().nth(1).unwrap();
        assert!(line.contains(",,"));
    }
}
