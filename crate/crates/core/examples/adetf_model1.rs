//! Index-space estimation on a single-index model `Y = t sin(t) + e`,
//! `t = b'X`, where the average derivative vanishes: ADE fails while the
//! test-function estimator and SAVE recover the direction.
//!
//! Run with `cargo run --release --example adetf_model1`.

use smoothmc::indexspace::{adetf, ade_subspace, AdeConfig, AdetfConfig};
use smoothmc::inverse_regression::{save, sir, SliceConfig};
use smoothmc::simbench::{generate, ModelKind, ModelSpec};

fn main() -> smoothmc::Result<()> {
    let spec = ModelSpec::new(ModelKind::M1, 6, 400, 0.0)?;
    let truth = spec.true_projector();
    let data = generate(&spec, 2024);
    let estimates = [
        ("adetf", adetf(&data, 1, &AdetfConfig::default())?),
        ("ade", ade_subspace(&data, &AdeConfig::default())?),
        ("sir", sir(&data, 1, SliceConfig::default())?),
        ("save", save(&data, 1, SliceConfig::default())?),
    ];
    for (name, est) in &estimates {
        let b: Vec<String> = est.basis().column(0).iter().map(|v| format!("{v:+.3}")).collect();
        println!("{name:<6} |P_hat - P|_F = {:.3}   basis [{}]", est.error_against(&truth)?, b.join(", "));
    }
    Ok(())
}
