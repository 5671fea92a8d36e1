use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indexspace::{adaptive_adetf, ade_subspace, adetf, AdaptiveConfig, AdeConfig, AdetfConfig};
use crate::integrator::{
    boundary_corrected_design, integrate_kde_corrected_with_table, integrate_kde_with_table, plain_mc,
    BoxRegion, NamedIntegrand,
};
use crate::inverse_regression::{save, sir, SliceConfig};
use crate::kernels::{default_bandwidth_integration, KernelSpec};
use crate::density::{loo_density, loo_variance, FloorPolicy};
use crate::rng::{derive_seed, rng_from_seed};
use crate::sample::Sample;

use super::models::{generate_with_rng, ModelKind, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Adetf,
    AdaptiveAdetf,
    Ade,
    Sir,
    Save,
    /// Plain Monte Carlo with the known uniform density on `[0,1]^d`.
    Mc,
    /// Kernel smoothing with the design uniform on `[0,1]^d`.
    Ks,
    /// Kernel smoothing with the design uniform on `[-h, 1+h]^d`.
    Ksbc,
    /// Variance-corrected kernel smoothing, design on `[0,1]^d`.
    Kscor,
    /// Variance-corrected kernel smoothing, design on `[-h, 1+h]^d`.
    Ksbccor,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Adetf => "adetf",
            Method::AdaptiveAdetf => "adaptive-adetf",
            Method::Ade => "ade",
            Method::Sir => "sir",
            Method::Save => "save",
            Method::Mc => "mc",
            Method::Ks => "ks",
            Method::Ksbc => "ksbc",
            Method::Kscor => "kscor",
            Method::Ksbccor => "ksbccor",
        }
    }

    pub fn is_integration(self) -> bool {
        matches!(
            self,
            Method::Mc | Method::Ks | Method::Ksbc | Method::Kscor | Method::Ksbccor
        )
    }
}

/// One row of a grid: every combination of `n`, `d` and `param` becomes a cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub model: ModelKind,
    pub methods: Vec<Method>,
    pub n: Vec<usize>,
    pub d: Vec<usize>,
    #[serde(default)]
    pub param: Vec<f64>,
}

/// Bench configuration, read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default = "default_replications")]
    pub replications: usize,
    /// Master seed; the command line may override it.
    #[serde(default)]
    pub seed: u64,
    /// Write per-method wall time; off by default so output is reproducible
    /// byte for byte.
    #[serde(default)]
    pub record_timing: bool,
    pub grid: Vec<GridSpec>,
    #[serde(default)]
    pub adetf: AdetfConfig,
    #[serde(default)]
    pub adaptive: AdaptiveConfig,
    #[serde(default)]
    pub ade: AdeConfig,
    #[serde(default)]
    pub slices: SliceConfig,
}

fn default_replications() -> usize {
    100
}

impl BenchConfig {
    pub fn new(grid: Vec<GridSpec>, replications: usize, seed: u64) -> Self {
        Self {
            replications,
            seed,
            record_timing: false,
            grid,
            adetf: AdetfConfig::default(),
            adaptive: AdaptiveConfig::default(),
            ade: AdeConfig::default(),
            slices: SliceConfig::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        for g in &self.grid {
            if g.methods.is_empty() || g.n.is_empty() || g.d.is_empty() {
                return Err(Error::Config(format!(
                    "grid entry for {} needs methods, n and d",
                    g.model.tag()
                )));
            }
            for m in &g.methods {
                let integration_model = g.model == ModelKind::IntegrationSin;
                if m.is_integration() != integration_model {
                    return Err(Error::Config(format!(
                        "method {} does not apply to model {}",
                        m.tag(),
                        g.model.tag()
                    )));
                }
            }
            for &n in &g.n {
                for &d in &g.d {
                    for &param in g.params().iter() {
                        ModelSpec::new(g.model, d, n, param).map_err(|e| Error::Config(e.to_string()))?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Cells in grid order: for each entry, `n` outermost, then `d`, then `param`.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for g in &self.grid {
            for &n in &g.n {
                for &d in &g.d {
                    for param in g.params() {
                        out.push(Cell {
                            index: out.len(),
                            spec: ModelSpec::new(g.model, d, n, param).expect("validated"),
                            methods: g.methods.clone(),
                        });
                    }
                }
            }
        }
        out
    }
}

impl GridSpec {
    fn params(&self) -> Vec<f64> {
        if self.param.is_empty() {
            vec![self.model.default_param()]
        } else {
            self.param.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub spec: ModelSpec,
    pub methods: Vec<Method>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationResult {
    pub model: String,
    pub method: String,
    pub n: usize,
    pub d: usize,
    pub param: f64,
    pub replicate: usize,
    pub seed: u64,
    /// `None` when the method failed on this dataset.
    pub error: Option<f64>,
    pub ms: Option<f64>,
}

pub const RESULT_COLUMNS: [&str; 9] = ["model", "method", "n", "d", "param", "replicate", "seed", "error", "ms"];

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

impl ReplicationResult {
    fn record(&self) -> [String; 9] {
        [
            self.model.clone(),
            self.method.clone(),
            self.n.to_string(),
            self.d.to_string(),
            fmt_float(self.param),
            self.replicate.to_string(),
            self.seed.to_string(),
            self.error.map(fmt_float).unwrap_or_default(),
            self.ms.map(|m| format!("{m:.3}")).unwrap_or_default(),
        ]
    }
}

/// Writes results as CSV with [`RESULT_COLUMNS`].
pub struct ResultWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> ResultWriter<W> {
    pub fn new(out: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(RESULT_COLUMNS)?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, results: &[ReplicationResult]) -> Result<()> {
        for r in results {
            self.inner.write_record(r.record())?;
        }
        self.inner.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> Result<W> {
        self.inner
            .into_inner()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }
}

pub fn write_results_csv<W: Write>(out: W, results: &[ReplicationResult]) -> Result<()> {
    let mut w = ResultWriter::new(out)?;
    w.write(results)
}

pub fn read_results_csv<R: std::io::Read>(input: R) -> Result<Vec<ReplicationResult>> {
    let mut reader = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let field = |k: usize| rec.get(k).unwrap_or("");
        let parse_f = |k: usize| -> Result<Option<f64>> {
            let s = field(k);
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| Error::Parse {
                    line: rec.position().map_or(0, |p| p.line() as usize),
                    message: format!("bad number '{s}'"),
                })
            }
        };
        let parse_u = |k: usize| -> Result<u64> {
            field(k).parse().map_err(|_| Error::Parse {
                line: rec.position().map_or(0, |p| p.line() as usize),
                message: format!("bad integer '{}'", field(k)),
            })
        };
        out.push(ReplicationResult {
            model: field(0).to_string(),
            method: field(1).to_string(),
            n: parse_u(2)? as usize,
            d: parse_u(3)? as usize,
            param: parse_f(4)?.unwrap_or(0.0),
            replicate: parse_u(5)? as usize,
            seed: parse_u(6)?,
            error: parse_f(7)?,
            ms: parse_f(8)?,
        });
    }
    Ok(out)
}

/// Seed of replicate `replicate` in cell `cell`.
pub fn replicate_seed(master: u64, cell: usize, replicate: usize) -> u64 {
    derive_seed(master, &[cell as u64, replicate as u64])
}

/// Dataset seen by every method of a cell replicate.
pub fn replicate_data(cell: &Cell, master: u64, replicate: usize) -> (u64, Sample) {
    let seed = replicate_seed(master, cell.index, replicate);
    let data = generate_with_rng(&cell.spec, &mut rng_from_seed(seed));
    (seed, data.sample)
}

fn integration_error(method: Method, spec: &ModelSpec, data: &Sample) -> Result<f64> {
    let d = spec.d;
    let target = NamedIntegrand::SinPi;
    let phi = target.integrand(d);
    let truth = target.exact_integral(d);
    let kernel = KernelSpec::epanechnikov(d);
    let h = default_bandwidth_integration(data.n(), d, kernel.order())?;
    let unit = BoxRegion::unit_cube(d);
    let inflated = boundary_corrected_design(&unit, h.value())?;
    let on_inflated = || -> Result<Sample> {
        let pts: Vec<f64> = data.rows().flat_map(|u| inflated.from_unit(u)).collect();
        Sample::new(pts, d, None)
    };
    let value = match method {
        Method::Mc => plain_mc(data, &phi, |_| 1.0)?.value,
        Method::Ks => integrate_kde_with_table(data, &phi, &loo_density(data, &kernel, h)?, FloorPolicy::Skip)?.value,
        Method::Kscor => {
            integrate_kde_corrected_with_table(data, &phi, &loo_variance(data, &kernel, h)?, FloorPolicy::Skip)?.value
        }
        Method::Ksbc => {
            let x = on_inflated()?;
            integrate_kde_with_table(&x, &phi, &loo_density(&x, &kernel, h)?, FloorPolicy::Skip)?.value
        }
        Method::Ksbccor => {
            let x = on_inflated()?;
            integrate_kde_corrected_with_table(&x, &phi, &loo_variance(&x, &kernel, h)?, FloorPolicy::Skip)?.value
        }
        _ => unreachable!("not an integration method"),
    };
    Ok((value - truth).abs())
}

/// Runs one method on one dataset and returns its error.
pub fn method_error(method: Method, spec: &ModelSpec, data: &Sample, config: &BenchConfig) -> Result<f64> {
    if method.is_integration() {
        return integration_error(method, spec, data);
    }
    let p = spec.kind.index_dim();
    let est = match method {
        Method::Adetf => adetf(data, p, &config.adetf)?,
        Method::AdaptiveAdetf => adaptive_adetf(data, p, &config.adaptive)?,
        Method::Ade => {
            if p != 1 {
                return Err(Error::invalid("ADE recovers a single direction"));
            }
            ade_subspace(data, &config.ade)?
        }
        Method::Sir => sir(data, p, config.slices)?,
        Method::Save => save(data, p, config.slices)?,
        _ => unreachable!(),
    };
    est.error_against(&spec.true_projector())
}

fn run_replicate(cell: &Cell, config: &BenchConfig, master: u64, replicate: usize) -> Vec<ReplicationResult> {
    let (seed, data) = replicate_data(cell, master, replicate);
    cell.methods
        .iter()
        .map(|&m| {
            let start = Instant::now();
            let error = match method_error(m, &cell.spec, &data, config) {
                Ok(e) => Some(e),
                Err(e) => {
                    log::warn!(
                        "{} on {} (n={}, d={}, replicate {replicate}) failed: {e}",
                        m.tag(),
                        cell.spec.kind.tag(),
                        cell.spec.n,
                        cell.spec.d
                    );
                    None
                }
            };
            let ms = config.record_timing.then(|| start.elapsed().as_secs_f64() * 1e3);
            ReplicationResult {
                model: cell.spec.kind.tag().to_string(),
                method: m.tag().to_string(),
                n: cell.spec.n,
                d: cell.spec.d,
                param: cell.spec.param,
                replicate,
                seed,
                error,
                ms,
            }
        })
        .collect()
}

/// Runs every cell, handing each finished cell's results (ordered by
/// replicate, then method) to `sink` before starting the next.
pub fn run_benchmark_with(
    config: &BenchConfig,
    master_seed: u64,
    mut sink: impl FnMut(&Cell, Vec<ReplicationResult>) -> Result<()>,
) -> Result<()> {
    for cell in config.cells() {
        let batch: Vec<ReplicationResult> = (0..config.replications)
            .into_par_iter()
            .map(|r| run_replicate(&cell, config, master_seed, r))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect();
        sink(&cell, batch)?;
    }
    Ok(())
}

/// All results in (cell, replicate, method) order.
pub fn run_benchmark(config: &BenchConfig, master_seed: u64) -> Result<Vec<ReplicationResult>> {
    let mut all = Vec::new();
    run_benchmark_with(config, master_seed, |_, batch| {
        all.extend(batch);
        Ok(())
    })?;
    Ok(all)
}
