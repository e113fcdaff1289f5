//! Finite-difference gradient checks of the desk generator and PatchGAN.
//!
//! `cargo run --release --example gradient_check`

use std::error::Error;

use normalforge::neural::{build_discriminator, build_generator, grad_check, TrainConfig};

fn main() -> Result<(), Box<dyn Error>> {
    let cfg = TrainConfig::default();
    for (name, spec) in [
        ("generator", build_generator(&cfg)?),
        ("discriminator", build_discriminator(&cfg)?),
    ] {
        let report = grad_check(&spec, 1)?;
        println!(
            "{name}: {} parameter groups, max relative error {:.2e}, {}",
            report.groups.len(),
            report.max_rel_error(),
            if report.passed() { "passed" } else { "FAILED" }
        );
        for g in report.failures() {
            println!("  {} checked {} max {:.2e}", g.name, g.checked, g.max_rel_error);
        }
    }
    Ok(())
}
