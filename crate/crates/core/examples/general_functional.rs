//! Integrals of the form `int T(x, f(x)) dx`. With `T = phi(x)` the
//! smoothed estimator beats the Monte Carlo rate; with `T = f(x)^2` the
//! density enters nonlinearly and the scaled error stays of order one.
//!
//! Run with `cargo run --release --example general_functional`.

use smoothmc::integrator::{boundary_corrected_design, integrate_general};
use smoothmc::rng::{derive_seed, rng_from_seed};
use smoothmc::stats::std_dev;
use smoothmc::{Bandwidth, BoxRegion, KernelSpec};

fn main() -> smoothmc::Result<()> {
    let kernel = KernelSpec::epanechnikov(1);
    let cube = BoxRegion::unit_cube(1);
    for n in [250usize, 1000, 4000] {
        let h = Bandwidth::new((n as f64).powf(-1.0 / 3.0))?;
        let design = boundary_corrected_design(&cube, h.value())?;
        let inside = cube.clone();
        // the design density is 1/(1 + 2h) on an interval of length 1 + 2h
        let f2_target = 1.0 / (1.0 + 2.0 * h.value());
        let (mut square, mut sine) = (Vec::new(), Vec::new());
        for rep in 0..100u64 {
            let x = design.sample_uniform(n, &mut rng_from_seed(derive_seed(3, &[n as u64, rep])));
            let t_sq = integrate_general(&x, |_, f| f * f, &kernel, h)?.value;
            let t_phi = integrate_general(
                &x,
                |p, _| if inside.contains(p) { (std::f64::consts::PI * p[0]).sin() } else { 0.0 },
                &kernel,
                h,
            )?
            .value;
            square.push((n as f64).sqrt() * (t_sq - f2_target));
            sine.push((n as f64).sqrt() * (t_phi - 2.0 / std::f64::consts::PI));
        }
        println!("n = {n:>5}: std sqrt(n)*err  T=f^2 {:.4}   T=phi {:.4}", std_dev(&square), std_dev(&sine));
    }
    Ok(())
}
