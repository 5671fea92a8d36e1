//! Command-line front end: argument parsing and the pipelines behind each
//! subcommand.
//!
//! Every subcommand prints a one-line JSON record to stdout on success. On
//! failure [`main_entry`] prints a JSON error record to stderr and returns the
//! exit code of the error class (see [`Error::exit_code`]).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::density::{loo_density, loo_variance, FloorPolicy};
use crate::error::{Error, Result};
use crate::indexspace::{adaptive_adetf, adetf, ade_subspace, AdaptiveConfig, AdeConfig, AdetfConfig};
use crate::integrator::{
    boundary_corrected_design, integrate_kde_corrected_with_table, integrate_kde_with_table, plain_mc, BoxRegion,
    Integrand, NamedIntegrand,
};
use crate::inverse_regression::{sdr, SdrMethod, SliceConfig};
use crate::io::{parse_dataset, save_dataset, write_matrix};
use crate::kernels::{integration_bandwidth, Bandwidth, IntegrationRule, KernelFamily, KernelSpec};
use crate::linalg::SubspaceEstimate;
use crate::regfun::{
    bandwidth_condition_warnings, clt_check, estimate_functional_with_table, loo_nadaraya_watson, BandwidthChoice,
    RegressionModel, Weighting,
};
use crate::rng::rng_from_seed;
use crate::sample::Sample;
use crate::simbench::{self, BenchConfig, ModelKind, ModelSpec, ResultWriter};

/// Bandwidth flag: `auto` picks the rule that fits the subcommand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandwidthArg {
    Auto,
    Value(f64),
}

impl FromStr for BandwidthArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(Self::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 => Ok(Self::Value(v)),
            _ => Err(format!("expected 'auto' or a positive number, got '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Epanechnikov,
    Gaussian,
}

impl From<KernelArg> for KernelFamily {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Epanechnikov => KernelFamily::EpanechnikovRadial,
            KernelArg::Gaussian => KernelFamily::Gaussian,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "smoothmc", version, about = "Kernel-smoothed Monte Carlo and index-space estimation")]
pub struct RunConfig {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate an integral from a sample.
    Integrate(IntegrateArgs),
    /// Estimate a linear functional of a regression, or run a CLT check.
    Functional(FunctionalArgs),
    /// Estimate an index space with test functions (or ADE).
    Adetf(AdetfArgs),
    /// Estimate an index space with SIR or SAVE.
    Sdr(SdrArgs),
    /// Run a replication grid from a JSON config.
    Bench(BenchArgs),
    /// Write a dataset drawn from one of the simulation models.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IntegrateMethod {
    /// Plain Monte Carlo with the known uniform density.
    Mc,
    /// Leave-one-out kernel smoothing.
    Ks,
    /// Kernel smoothing with the variance correction.
    Kscor,
}

#[derive(Debug, Args)]
pub struct IntegrateArgs {
    #[arg(long, default_value = "sin_pi")]
    pub integrand: String,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long, default_value = "auto")]
    pub h: BandwidthArg,
    /// Draw the design on the cube inflated by `h` (boundary correction).
    #[arg(long)]
    pub bc: bool,
    #[arg(long, value_enum, default_value = "ks")]
    pub method: IntegrateMethod,
    #[arg(long, value_enum, default_value = "epanechnikov")]
    pub kernel: KernelArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Read the points from a dataset instead of drawing them.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PsiArg {
    /// Indicator of the unit cube.
    One,
    SinPi,
    IndicatorBall,
    Polynomial,
}

impl PsiArg {
    fn integrand(self, d: usize) -> Integrand {
        match self {
            PsiArg::One => Integrand::indicator(BoxRegion::unit_cube(d)),
            PsiArg::SinPi => NamedIntegrand::SinPi.integrand(d),
            PsiArg::IndicatorBall => NamedIntegrand::IndicatorBall.integrand(d),
            PsiArg::Polynomial => NamedIntegrand::Polynomial.integrand(d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LinkArg {
    Zero,
    SinPi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightingArg {
    PlugIn,
    Known,
}

#[derive(Debug, Args)]
pub struct FunctionalArgs {
    /// Dataset with a `y` column.
    #[arg(long, required_unless_present = "clt")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "one")]
    pub psi: PsiArg,
    #[arg(long, default_value = "auto")]
    pub h: BandwidthArg,
    #[arg(long, value_enum, default_value = "epanechnikov")]
    pub kernel: KernelArg,
    /// Replicate the estimator under a known one-dimensional model instead.
    #[arg(long, conflicts_with = "input")]
    pub clt: bool,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    #[arg(long, value_enum, default_value = "zero")]
    pub link: LinkArg,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, value_enum, default_value = "plug-in")]
    pub weighting: WeightingArg,
    /// Draw the design on `[-h, 1 + h]`.
    #[arg(long)]
    pub bc: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV of the replication draws `sqrt(n) (c_hat - c)`.
    #[arg(long)]
    pub draws: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IndexMethod {
    Adetf,
    Ade,
}

#[derive(Debug, Args)]
pub struct AdetfArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub p: usize,
    #[arg(long, default_value = "auto")]
    pub h: BandwidthArg,
    /// Test-function radius; defaults to the design spread.
    #[arg(long)]
    pub h0: Option<f64>,
    #[arg(long)]
    pub adaptive: bool,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 1)]
    pub iters: usize,
    #[arg(long, value_enum, default_value = "adetf")]
    pub method: IndexMethod,
    #[arg(long, value_enum, default_value = "epanechnikov")]
    pub kernel: KernelArg,
    /// Projector CSV; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Basis CSV.
    #[arg(long)]
    pub basis: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SdrArg {
    Sir,
    Save,
}

#[derive(Debug, Args)]
pub struct SdrArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub method: SdrArg,
    #[arg(long, default_value_t = 1)]
    pub p: usize,
    #[arg(long, default_value_t = 10)]
    pub slices: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub basis: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Per-replicate results CSV.
    #[arg(long, default_value = "results.csv")]
    pub out: PathBuf,
    /// Boxplot statistics CSV.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    M1,
    M2,
    M3,
    M4,
    IntegrationSin,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::M1 => ModelKind::M1,
            ModelArg::M2 => ModelKind::M2,
            ModelArg::M3 => ModelKind::M3,
            ModelArg::M4 => ModelKind::M4,
            ModelArg::IntegrationSin => ModelKind::IntegrationSin,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    #[arg(long, default_value_t = 400)]
    pub n: usize,
    #[arg(long, default_value_t = 6)]
    pub d: usize,
    /// `mu`, `tau` or `sigma` depending on the model.
    #[arg(long)]
    pub param: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses the process arguments, runs, and returns the exit code.
pub fn main_entry() -> i32 {
    let config = RunConfig::parse();
    match run(&config) {
        Ok(()) => 0,
        Err(e) => {
            let record = json!({ "error": e.kind(), "message": e.to_string(), "exit_code": e.exit_code() });
            eprintln!("{record}");
            e.exit_code()
        }
    }
}

pub fn run(config: &RunConfig) -> Result<()> {
    let mut stdout = std::io::stdout();
    match config.threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::invalid(e.to_string()))?;
            pool.install(|| execute(&config.command, &mut stdout))
        }
        None => execute(&config.command, &mut stdout),
    }
}

/// Runs one subcommand, writing its JSON record to `out`.
pub fn execute(command: &Command, out: &mut impl Write) -> Result<()> {
    let record = match command {
        Command::Integrate(a) => integrate(a)?,
        Command::Functional(a) => functional(a)?,
        Command::Adetf(a) => index_space(a, out)?,
        Command::Sdr(a) => inverse_regression(a, out)?,
        Command::Bench(a) => bench(a)?,
        Command::Generate(a) => generate(a)?,
    };
    writeln!(out, "{record}")?;
    Ok(())
}

fn open_input(path: &Path) -> Result<Sample> {
    if !path.exists() {
        return Err(Error::invalid(format!("input file {} does not exist", path.display())));
    }
    parse_dataset(path)
}

fn integrate(a: &IntegrateArgs) -> Result<serde_json::Value> {
    let named = NamedIntegrand::parse(&a.integrand)?;
    let family: KernelFamily = a.kernel.into();
    let given = a.input.as_deref().map(open_input).transpose()?;
    let d = given.as_ref().map_or(a.d, Sample::d);
    let n = given.as_ref().map_or(a.n, Sample::n);
    let kernel = KernelSpec::new(family, d)?;
    let rule = match a.method {
        IntegrateMethod::Kscor => IntegrationRule::Corrected,
        _ => IntegrationRule::Plain,
    };
    let h = match a.h {
        BandwidthArg::Auto => integration_bandwidth(n, d, kernel.order(), 1.0, rule)?,
        BandwidthArg::Value(v) => Bandwidth::new(v)?,
    };
    let cube = BoxRegion::unit_cube(d);
    let design = if a.bc { boundary_corrected_design(&cube, h.value())? } else { cube };
    let sample = match given {
        Some(s) => s.without_response(),
        None => design.sample_uniform(n, &mut rng_from_seed(a.seed)),
    };
    let integrand = named.integrand(d);
    let est = match a.method {
        IntegrateMethod::Mc => {
            let density = 1.0 / design.volume();
            let box_ = design.clone();
            plain_mc(&sample, &integrand, move |x| if box_.contains(x) { density } else { 0.0 })?
        }
        IntegrateMethod::Ks => {
            let table = loo_density(&sample, &kernel, h)?;
            integrate_kde_with_table(&sample, &integrand, &table, FloorPolicy::Skip)?
        }
        IntegrateMethod::Kscor => {
            let table = loo_variance(&sample, &kernel, h)?;
            integrate_kde_corrected_with_table(&sample, &integrand, &table, FloorPolicy::Skip)?
        }
    };
    let exact = named.exact_integral(d);
    Ok(json!({
        "integrand": named.name(),
        "method": format!("{:?}", a.method).to_lowercase(),
        "n": sample.n(),
        "d": d,
        "h": h.value(),
        "bc": a.bc,
        "value": est.value,
        "n_used": est.n_used,
        "exact": exact,
        "error": est.value - exact,
    }))
}

fn functional(a: &FunctionalArgs) -> Result<serde_json::Value> {
    let family: KernelFamily = a.kernel.into();
    if a.clt {
        return functional_clt(a, family);
    }
    let path = a.input.as_deref().ok_or_else(|| Error::invalid("--input is required without --clt"))?;
    let sample = open_input(path)?;
    sample.require_response()?;
    let kernel = KernelSpec::new(family, sample.d())?;
    let h = match a.h {
        BandwidthArg::Auto => integration_bandwidth(sample.n(), sample.d(), kernel.order(), 1.0, IntegrationRule::Plain)?,
        BandwidthArg::Value(v) => Bandwidth::new(v)?,
    };
    let warnings = bandwidth_condition_warnings(sample.n(), sample.d(), kernel.order(), h.value());
    for w in &warnings {
        log::warn!("{w}");
    }
    let table = loo_density(&sample, &kernel, h)?;
    let pilot = loo_nadaraya_watson(&sample, &kernel, h)?;
    let est = estimate_functional_with_table(&sample, &a.psi.integrand(sample.d()), &table, &pilot, FloorPolicy::Skip)?;
    Ok(json!({
        "c_hat": est.c_hat,
        "v_hat": est.v_hat,
        "n_used": est.n_used,
        "h": h.value(),
        "warnings": warnings,
    }))
}

fn functional_clt(a: &FunctionalArgs, family: KernelFamily) -> Result<serde_json::Value> {
    let kernel = KernelSpec::new(family, 1)?;
    let bandwidth = match a.h {
        BandwidthArg::Auto => BandwidthChoice::Power {
            constant: 1.0,
            exponent: 1.0 / (kernel.order() as f64 + 1.0),
        },
        BandwidthArg::Value(v) => BandwidthChoice::Fixed(v),
    };
    let h = bandwidth.resolve(a.n)?;
    let cube = BoxRegion::unit_cube(1);
    let design = if a.bc { boundary_corrected_design(&cube, h.value())? } else { cube };
    if !(a.sigma.is_finite() && a.sigma >= 0.0) {
        return Err(Error::invalid(format!("sigma must be non-negative, got {}", a.sigma)));
    }
    let model = match a.link {
        LinkArg::Zero => RegressionModel::homoscedastic(design, |_| 0.0, a.sigma),
        LinkArg::SinPi => RegressionModel::homoscedastic(design, |x| (std::f64::consts::PI * x[0]).sin(), a.sigma),
    };
    let weighting = match a.weighting {
        WeightingArg::PlugIn => Weighting::PlugIn,
        WeightingArg::Known => Weighting::KnownDensity,
    };
    let report = clt_check(&model, &a.psi.integrand(1), &kernel, bandwidth, weighting, a.n, a.reps, a.seed)?;
    if let Some(path) = &a.draws {
        report.write_draws_csv(BufWriter::new(File::create(path)?))?;
    }
    Ok(json!({
        "n": report.n,
        "replications": report.replications,
        "h": report.bandwidth,
        "c": report.c,
        "v": report.v,
        "mean": report.mean,
        "variance": report.variance,
        "ratio": report.variance / report.v,
        "anderson_darling": report.anderson_darling,
        "normality_p_value": report.normality_p_value,
        "failures": report.failures,
        "warnings": report.warnings,
    }))
}

fn write_subspace(
    est: &SubspaceEstimate,
    projector_path: Option<&Path>,
    basis_path: Option<&Path>,
    out: &mut impl Write,
) -> Result<()> {
    match projector_path {
        Some(p) => write_matrix(BufWriter::new(File::create(p)?), est.projector(), "p")?,
        None => write_matrix(&mut *out, est.projector(), "p")?,
    }
    if let Some(b) = basis_path {
        write_matrix(BufWriter::new(File::create(b)?), est.basis(), "b")?;
    }
    Ok(())
}

fn subspace_record(method: &str, sample: &Sample, est: &SubspaceEstimate) -> serde_json::Value {
    json!({
        "method": method,
        "n": sample.n(),
        "d": sample.d(),
        "p": est.dim(),
        "trace": est.projector().trace(),
        "eigenvalues": est.eigenvalues(),
    })
}

fn index_space(a: &AdetfArgs, out: &mut impl Write) -> Result<serde_json::Value> {
    let sample = open_input(&a.input)?;
    sample.require_response()?;
    let bandwidth = match a.h {
        BandwidthArg::Auto => None,
        BandwidthArg::Value(v) => Some(v),
    };
    let (label, est) = match a.method {
        IndexMethod::Ade => {
            if a.p != 1 {
                return Err(Error::invalid("ADE estimates a single direction; use --p 1"));
            }
            let cfg = AdeConfig {
                kernel: a.kernel.into(),
                bandwidth,
                ..AdeConfig::default()
            };
            ("ade", ade_subspace(&sample, &cfg)?)
        }
        IndexMethod::Adetf => {
            let base = AdetfConfig {
                kernel: a.kernel.into(),
                bandwidth,
                h0: a.h0,
                ..AdetfConfig::default()
            };
            if a.adaptive {
                let cfg = AdaptiveConfig {
                    base,
                    eps: a.eps,
                    iterations: a.iters,
                    ..AdaptiveConfig::default()
                };
                ("adaptive-adetf", adaptive_adetf(&sample, a.p, &cfg)?)
            } else {
                ("adetf", adetf(&sample, a.p, &base)?)
            }
        }
    };
    write_subspace(&est, a.out.as_deref(), a.basis.as_deref(), out)?;
    Ok(subspace_record(label, &sample, &est))
}

fn inverse_regression(a: &SdrArgs, out: &mut impl Write) -> Result<serde_json::Value> {
    let sample = open_input(&a.input)?;
    let (method, label) = match a.method {
        SdrArg::Sir => (SdrMethod::Sir, "sir"),
        SdrArg::Save => (SdrMethod::Save, "save"),
    };
    let est = sdr(&sample, method, a.p, SliceConfig { n_slices: a.slices })?;
    write_subspace(&est, a.out.as_deref(), a.basis.as_deref(), out)?;
    Ok(subspace_record(label, &sample, &est))
}

fn bench(a: &BenchArgs) -> Result<serde_json::Value> {
    if !a.config.exists() {
        return Err(Error::invalid(format!("config file {} does not exist", a.config.display())));
    }
    let config = BenchConfig::from_path(&a.config)?;
    let seed = a.seed.unwrap_or(config.seed);
    let mut writer = ResultWriter::new(BufWriter::new(File::create(&a.out)?))?;
    let mut all = Vec::new();
    let mut cells = 0;
    // each finished cell is flushed, so a failure keeps earlier results
    simbench::run_benchmark_with(&config, seed, |cell, batch| {
        log::info!("cell {} ({} n={} d={}) done", cell.index, cell.spec.kind.tag(), cell.spec.n, cell.spec.d);
        writer.write(&batch)?;
        all.extend(batch);
        cells += 1;
        Ok(())
    })?;
    writer.into_inner()?.flush()?;
    let failures = all.iter().filter(|r| r.error.is_none()).count();
    if let Some(path) = &a.summary {
        simbench::write_summary_csv(BufWriter::new(File::create(path)?), &simbench::summarize(&all))?;
    }
    Ok(json!({
        "seed": seed,
        "cells": cells,
        "rows": all.len(),
        "failures": failures,
        "results": a.out,
    }))
}

fn generate(a: &GenerateArgs) -> Result<serde_json::Value> {
    let kind: ModelKind = a.model.into();
    let spec = ModelSpec::new(kind, a.d, a.n, a.param.unwrap_or_else(|| kind.default_param()))?;
    let sample = simbench::generate(&spec, a.seed);
    save_dataset(&a.out, &sample)?;
    Ok(json!({
        "model": kind.tag(),
        "n": sample.n(),
        "d": sample.d(),
        "param": spec.param,
        "seed": a.seed,
        "checksum": format!("{:016x}", sample.checksum()),
        "out": a.out,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bandwidth_flag() {
        assert_eq!("auto".parse::<BandwidthArg>().unwrap(), BandwidthArg::Auto);
        assert_eq!("0.25".parse::<BandwidthArg>().unwrap(), BandwidthArg::Value(0.25));
        assert!("-1".parse::<BandwidthArg>().is_err());
        assert!("x".parse::<BandwidthArg>().is_err());
    }

    #[test]
    fn arguments_parse() {
        use clap::CommandFactory;
        RunConfig::command().debug_assert();
        let cfg = RunConfig::try_parse_from(["smoothmc", "integrate", "--n", "50", "--bc"]).unwrap();
        assert!(matches!(cfg.command, Command::Integrate(IntegrateArgs { n: 50, bc: true, .. })));
        assert!(RunConfig::try_parse_from(["smoothmc", "integrate", "--bogus"]).is_err());
    }
}
