//! A linear functional `c = int g psi` of a random-design regression, its
//! plug-in variance, and a replication check of the normal limit.
//!
//! Run with `cargo run --release --example regression_functional`.

use smoothmc::integrator::{boundary_corrected_design, Integrand};
use smoothmc::regfun::{clt_check, estimate_functional, BandwidthChoice, RegressionModel, Weighting};
use smoothmc::rng::rng_from_seed;
use smoothmc::{Bandwidth, BoxRegion, KernelSpec};

fn main() -> smoothmc::Result<()> {
    let kernel = KernelSpec::epanechnikov(1);
    let n = 1000;
    let h = (n as f64).powf(-1.0 / 3.0);
    let design = boundary_corrected_design(&BoxRegion::unit_cube(1), h)?;
    let model = RegressionModel::homoscedastic(design, |x| (std::f64::consts::PI * x[0]).sin(), 0.5);
    let psi = Integrand::indicator(BoxRegion::unit_cube(1));

    let data = model.generate(n, &mut rng_from_seed(5));
    let est = estimate_functional(&data, &psi, &kernel, Bandwidth::new(h)?)?;
    println!("c_hat = {:.5} (true 2/pi = {:.5}), v_hat = {:.4}", est.c_hat, 2.0 / std::f64::consts::PI, est.v_hat);

    for weighting in [Weighting::PlugIn, Weighting::KnownDensity] {
        let report = clt_check(&model, &psi, &kernel, BandwidthChoice::Fixed(h), weighting, n, 200, 9)?;
        println!(
            "{weighting:?}: var of sqrt(n)(c_hat - c) = {:.4}, analytic v = {:.4}, normality p = {:.3}",
            report.variance, report.v, report.normality_p_value
        );
    }
    Ok(())
}
