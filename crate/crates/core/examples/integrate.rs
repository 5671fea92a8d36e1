//! Plain Monte Carlo against leave-one-out kernel smoothing for
//! `int_0^1 sin(pi x) dx = 2/pi`, with and without the boundary-corrected
//! design.
//!
//! Run with `cargo run --release --example integrate`.

use smoothmc::integrator::{boundary_corrected_design, integrate_kde, plain_mc, NamedIntegrand};
use smoothmc::kernels::default_bandwidth_integration;
use smoothmc::rng::{derive_seed, rng_from_seed};
use smoothmc::stats::median;
use smoothmc::{BoxRegion, KernelSpec};

fn main() -> smoothmc::Result<()> {
    let phi = NamedIntegrand::SinPi.integrand(1);
    let exact = NamedIntegrand::SinPi.exact_integral(1);
    let kernel = KernelSpec::epanechnikov(1);
    let cube = BoxRegion::unit_cube(1);
    println!("{:>6} {:>12} {:>12} {:>12}", "n", "mc", "ks", "ksbc");
    for n in [250, 1000, 4000] {
        let h = default_bandwidth_integration(n, 1, kernel.order())?;
        let bc = boundary_corrected_design(&cube, h.value())?;
        let (mut mc, mut ks, mut ksbc) = (Vec::new(), Vec::new(), Vec::new());
        for rep in 0..50u64 {
            let mut rng = rng_from_seed(derive_seed(1, &[n as u64, rep]));
            let x = cube.sample_uniform(n, &mut rng);
            mc.push((plain_mc(&x, &phi, |_| 1.0)?.value - exact).abs());
            ks.push((integrate_kde(&x, &phi, &kernel, h)?.value - exact).abs());
            let xb = bc.sample_uniform(n, &mut rng);
            ksbc.push((integrate_kde(&xb, &phi, &kernel, h)?.value - exact).abs());
        }
        println!("{n:>6} {:>12.3e} {:>12.3e} {:>12.3e}", median(&mc), median(&ks), median(&ksbc));
    }
    Ok(())
}
