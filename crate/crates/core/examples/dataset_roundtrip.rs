//! Writes a generated dataset to CSV, reads it back, and checks that every
//! value survives bit for bit.
//!
//! Run with `cargo run --release --example dataset_roundtrip`.

use smoothmc::io::{read_dataset, write_dataset};
use smoothmc::simbench::{generate, ModelKind, ModelSpec};

fn main() -> smoothmc::Result<()> {
    let data = generate(&ModelSpec::new(ModelKind::M3, 4, 50, 2.0)?, 1);
    let mut buf = Vec::new();
    write_dataset(&mut buf, &data)?;
    let back = read_dataset(buf.as_slice())?;
    println!("{} rows, {} bytes, identical: {}", back.n(), buf.len(), back == data);
    print!("{}", String::from_utf8_lossy(&buf).lines().take(3).collect::<Vec<_>>().join("\n"));
    println!();
    Ok(())
}
