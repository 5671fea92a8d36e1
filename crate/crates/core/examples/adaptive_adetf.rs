//! Adaptive refinement on a two-index model: re-estimate on `A X` with
//! `A = B B' + eps I` built from the first pass.
//!
//! Run with `cargo run --release --example adaptive_adetf`.

use smoothmc::indexspace::{adaptive_adetf, adetf, AdaptiveConfig};
use smoothmc::simbench::{generate, ModelKind, ModelSpec};
use smoothmc::stats::median;

fn main() -> smoothmc::Result<()> {
    let spec = ModelSpec::new(ModelKind::M4, 6, 400, 0.25)?;
    let truth = spec.true_projector();
    let cfg = AdaptiveConfig::default();
    let (mut plain, mut adaptive) = (Vec::new(), Vec::new());
    for seed in 0..20 {
        let data = generate(&spec, seed);
        plain.push(adetf(&data, 2, &cfg.base)?.error_against(&truth)?);
        adaptive.push(adaptive_adetf(&data, 2, &cfg)?.error_against(&truth)?);
    }
    println!("median |P_hat - P|_F over 20 datasets");
    println!("  adetf          {:.3}", median(&plain));
    println!("  adaptive-adetf {:.3}", median(&adaptive));
    Ok(())
}
