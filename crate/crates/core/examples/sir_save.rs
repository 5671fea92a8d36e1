//! SIR and SAVE on the symmetric link `cos(pi/2 (x1 - mu))`: SIR needs the
//! shift `mu` to see anything, SAVE works best when the link is even.
//!
//! Run with `cargo run --release --example sir_save`.

use smoothmc::inverse_regression::{sdr, SdrMethod, SliceConfig};
use smoothmc::simbench::{generate, ModelKind, ModelSpec};

fn main() -> smoothmc::Result<()> {
    for mu in [0.0, 0.5, 1.0] {
        let spec = ModelSpec::new(ModelKind::M2, 6, 400, mu)?;
        let data = generate(&spec, 77);
        let truth = spec.true_projector();
        let e_sir = sdr(&data, SdrMethod::Sir, 1, SliceConfig::default())?.error_against(&truth)?;
        let e_save = sdr(&data, SdrMethod::Save, 1, SliceConfig::default())?.error_against(&truth)?;
        println!("mu = {mu:.1}: sir {e_sir:.3}  save {e_save:.3}");
    }
    Ok(())
}
