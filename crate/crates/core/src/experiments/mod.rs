//! Declarative runs: configs, parameter sweeps, seeding, chain merging and
//! result tables.

pub mod critical;
mod kinds;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Bc, LatticeBox, Point, Region};
use crate::report::IdentityReport;

pub use critical::{estimate_lambda_c_1d, magnetization_curves, CriticalEstimate, HeatBathPlan, MagnetizationCurve, Scaling};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Correlation,
    MagnetizationSweep,
    SwitchingVerify,
    IrbCheck,
    PercolationSweep,
    IdentitySuite,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Correlation => "correlation",
            ExperimentKind::MagnetizationSweep => "magnetization-sweep",
            ExperimentKind::SwitchingVerify => "switching-verify",
            ExperimentKind::IrbCheck => "irb-check",
            ExperimentKind::PercolationSweep => "percolation-sweep",
            ExperimentKind::IdentitySuite => "identity-suite",
        }
    }

    /// Kinds whose rows carry pass/fail verdicts.
    pub fn is_verification(self) -> bool {
        matches!(self, ExperimentKind::SwitchingVerify | ExperimentKind::IrbCheck | ExperimentKind::IdentitySuite)
    }

    pub fn is_sweep(self) -> bool {
        matches!(self, ExperimentKind::MagnetizationSweep | ExperimentKind::PercolationSweep)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

fn one() -> usize {
    1
}

fn wired() -> Bc {
    Bc::Wired
}

fn unit() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionParams {
    #[serde(default = "one")]
    pub dim: usize,
    /// Box half-widths `N`, one region per entry.
    pub sizes: Vec<usize>,
    /// Absent for the ground-state proxy `r = 2N`.
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default = "wired")]
    pub space: Bc,
    #[serde(default = "wired")]
    pub time: Bc,
    /// Use `{-N+1, …, N}^d` instead of `{-N, …, N}^d`.
    #[serde(default)]
    pub even_side: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub lambdas: Vec<f64>,
    #[serde(default = "unit")]
    pub delta: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingParams {
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default = "one")]
    pub n_chains: usize,
    /// Heat-bath sweeps discarded per chain.
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    /// Exhaustive enumeration instead of Monte Carlo, where supported.
    #[serde(default)]
    pub exact: bool,
    /// Second point as an offset from the origin; defaults to the first
    /// neighbour along axis 0.
    #[serde(default)]
    pub target: Option<Vec<i64>>,
    #[serde(default)]
    pub target_time: f64,
    /// Frequency cutoff of the infrared check.
    #[serde(default = "default_l_max")]
    pub l_max: f64,
    /// Inner box half-width for local bounds and trifurcation probes.
    #[serde(default = "one")]
    pub n0: usize,
    /// Probe block length; defaults to `2·n0`.
    #[serde(default)]
    pub r0: Option<f64>,
}

fn default_samples() -> usize {
    10_000
}

fn default_burn_in() -> usize {
    200
}

fn default_l_max() -> f64 {
    100.0 * std::f64::consts::PI
}

impl Default for SamplingParams {
    fn default() -> Self {
        Self {
            n_samples: default_samples(),
            n_chains: 1,
            burn_in: default_burn_in(),
            exact: false,
            target: None,
            target_time: 0.0,
            l_max: default_l_max(),
            n0: 1,
            r0: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticalParams {
    #[serde(default)]
    pub scaling: Scaling,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputParams {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub format: Format,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputParams {
    fn default() -> Self {
        Self { dir: default_dir(), format: Format::Csv }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub region: RegionParams,
    pub model: ModelParams,
    #[serde(default)]
    pub sampling: SamplingParams,
    /// Crossing estimate for magnetization sweeps.
    #[serde(default)]
    pub critical: Option<CriticalParams>,
    #[serde(default)]
    pub output: OutputParams,
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl RunConfig {
    /// JSON when the extension is `.json`, TOML otherwise.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let config = if json { Self::from_json(&text)? } else { Self::from_toml(&text)? };
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| config_error(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| config_error(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let lambdas = &self.model.lambdas;
        if lambdas.is_empty() {
            return Err(config_error("the λ grid is empty"));
        }
        if lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(config_error("λ values must be finite and non-negative"));
        }
        if lambdas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config_error("the λ grid must be strictly increasing"));
        }
        if !(self.model.delta.is_finite() && self.model.delta > 0.0) {
            return Err(config_error("δ must be positive"));
        }
        let region = &self.region;
        if region.sizes.is_empty() {
            return Err(config_error("no box sizes given"));
        }
        if region.dim == 0 {
            return Err(config_error("dimension must be at least 1"));
        }
        if let Some(b) = region.beta {
            if !(b.is_finite() && b > 0.0) {
                return Err(config_error("β must be positive and finite; omit it for the ground state"));
            }
        } else if region.sizes.contains(&0) {
            return Err(config_error("ground-state regions need N >= 1"));
        }
        if self.sampling.n_samples == 0 || self.sampling.n_chains == 0 {
            return Err(config_error("n_samples and n_chains must be positive"));
        }
        if let Some(t) = &self.sampling.target {
            if t.len() != region.dim {
                return Err(config_error("target offset must have one entry per dimension"));
            }
        }
        if self.critical.is_some() && self.kind != ExperimentKind::MagnetizationSweep {
            return Err(config_error("a [critical] section needs kind = \"magnetization-sweep\""));
        }
        Ok(())
    }

    pub fn lattice(&self, n: usize) -> Result<LatticeBox> {
        if self.region.even_side {
            LatticeBox::even_side(self.region.dim, n)
        } else {
            LatticeBox::symmetric(self.region.dim, n)
        }
    }

    pub fn region(&self, n: usize) -> Result<Region> {
        let lattice = self.lattice(n)?;
        match self.region.beta {
            Some(beta) => Region::finite(lattice, beta, self.region.space, self.region.time),
            None => Region::ground_state(lattice, self.region.space, self.region.time),
        }
    }

    /// Origin at time 0 and the configured second point.
    pub fn points(&self, region: &Region) -> Result<(Point, Point)> {
        let lattice = region.lattice();
        let o = lattice.origin();
        let offset = self.sampling.target.clone().unwrap_or_else(|| {
            let mut v = vec![0; self.region.dim];
            v[0] = 1;
            v
        });
        let x: Vec<i64> = lattice.coords(o).iter().zip(&offset).map(|(a, b)| a + b).collect();
        let site = lattice.index(&x).ok_or_else(|| config_error(format!("target {x:?} outside the box")))?;
        Ok((Point::new(o, 0.0), Point::new(site, self.sampling.target_time)))
    }
}

/// One line of a result table. Columns are the same for every kind; fields
/// that do not apply are left empty.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub kind: String,
    pub quantity: String,
    pub dim: usize,
    pub n: usize,
    pub sites: usize,
    pub r: f64,
    pub ground_state: bool,
    pub bc: String,
    pub lambda: f64,
    pub delta: f64,
    pub seed: u64,
    pub estimate: f64,
    pub stderr: f64,
    pub n_effective: f64,
    pub reference: Option<f64>,
    pub holds: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub rows: usize,
    /// Quantities of rows whose check failed.
    pub failures: Vec<String>,
    /// Estimates nondecreasing in `λ` at every size, within 3 SE.
    pub monotone: Option<bool>,
    pub critical: Option<CriticalEstimate>,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunOutcome {
    pub rows: Vec<ResultRow>,
    pub summary: Summary,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.summary.failures.is_empty()
    }
}

/// Fills the region and parameter columns of a row.
pub(crate) struct RowContext<'a> {
    pub config: &'a RunConfig,
    pub n: usize,
    pub region: &'a Region,
    pub lambda: f64,
    pub seed: u64,
}

impl RowContext<'_> {
    pub fn row(&self, quantity: impl Into<String>, estimate: f64, stderr: f64, n_effective: f64) -> ResultRow {
        ResultRow {
            kind: self.config.kind.name().to_string(),
            quantity: quantity.into(),
            dim: self.config.region.dim,
            n: self.n,
            sites: self.region.n_sites(),
            r: self.region.length(),
            ground_state: self.region.is_ground_state(),
            bc: self.region.bc_label(),
            lambda: self.lambda,
            delta: self.config.model.delta,
            seed: self.seed,
            estimate,
            stderr,
            n_effective,
            reference: None,
            holds: None,
        }
    }

    pub fn report(&self, report: &IdentityReport) -> ResultRow {
        let mut row = self.row(report.identity.clone(), report.lhs, report.se_lhs, report.n as f64);
        row.reference = Some(report.rhs);
        row.holds = Some(report.holds);
        row
    }
}

/// Runs `config` on up to `workers` threads per parameter point.
pub fn run(config: &RunConfig, workers: usize) -> Result<RunOutcome> {
    config.validate()?;
    let start = Instant::now();
    let (rows, monotone, critical) = kinds::dispatch(config, workers.max(1))?;
    let failures = rows
        .iter()
        .filter(|r| r.holds == Some(false))
        .map(|r| format!("{} (N={}, λ={}, {})", r.quantity, r.n, r.lambda, r.bc))
        .collect();
    let summary = Summary {
        kind: config.kind,
        seed: config.seed,
        rows: rows.len(),
        failures,
        monotone,
        critical,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(RunOutcome { rows, summary })
}

/// Writes `<kind>.csv` or `<kind>.json` and `<kind>.summary.json` into `dir`;
/// returns the table path. The table depends only on config and seed.
pub fn write_outputs(outcome: &RunOutcome, dir: &Path, format: Format) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let name = outcome.summary.kind.name();
    let table = match format {
        Format::Csv => {
            let path = dir.join(format!("{name}.csv"));
            write_csv(&outcome.rows, std::fs::File::create(&path)?)?;
            path
        }
        Format::Json => {
            let path = dir.join(format!("{name}.json"));
            std::fs::write(&path, serde_json::to_string_pretty(&outcome.rows)?)?;
            path
        }
    };
    let summary = dir.join(format!("{name}.summary.json"));
    std::fs::write(summary, serde_json::to_string_pretty(&outcome.summary)?)?;
    Ok(table)
}

pub fn write_csv<W: std::io::Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
kind = "correlation"
seed = 7

[region]
sizes = [1]
beta = 1.0

[model]
lambdas = [0.5, 1.0]
"#;

    #[test]
    fn toml_defaults() {
        let c = RunConfig::from_toml(BASE).unwrap();
        assert_eq!(c.region.dim, 1);
        assert_eq!(c.region.space, Bc::Wired);
        assert_eq!(c.model.delta, 1.0);
        assert_eq!(c.sampling.n_chains, 1);
        assert_eq!(c.output.format, Format::Csv);
    }

    #[test]
    fn json_matches_toml() {
        let t = RunConfig::from_toml(BASE).unwrap();
        let j = RunConfig::from_json(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(serde_json::to_value(&t).unwrap(), serde_json::to_value(&j).unwrap());
    }

    #[test]
    fn invalid_grids_are_config_errors() {
        for bad in ["lambdas = []", "lambdas = [1.0, 0.5]", "lambdas = [1.0, 1.0]"] {
            let text = BASE.replace("lambdas = [0.5, 1.0]", bad);
            assert!(matches!(RunConfig::from_toml(&text), Err(Error::Config(_))), "{bad}");
        }
        assert!(matches!(RunConfig::from_toml(&BASE.replace("seed = 7\n", "")), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_toml(&BASE.replace("beta = 1.0", "beta = -1.0")), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_toml(&format!("{BASE}\nextra = 1")), Err(Error::Config(_))));
    }

    #[test]
    fn target_defaults_to_neighbour() {
        let c = RunConfig::from_toml(BASE).unwrap();
        let region = c.region(1).unwrap();
        let (o, t) = c.points(&region).unwrap();
        let l = region.lattice();
        assert_eq!(l.coords(t.site)[0] - l.coords(o.site)[0], 1);
    }
}
