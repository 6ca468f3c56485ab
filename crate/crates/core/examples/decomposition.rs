//! Radial/tangential decomposition of a vector with respect to a reference
//! direction, including the degenerate zero-reference case.
//!
//!     cargo run --example decomposition

use adamo::geometry::{decompose, DEFAULT_EPS_NORM};
use adamo::vecmath::{dot, norm};

fn show(z: &[f64], w: &[f64]) -> adamo::Result<()> {
    let d = decompose(z, w, DEFAULT_EPS_NORM)?;
    println!("z = {z:?}, w = {w:?}");
    println!("  radial     = {:?}", d.radial);
    println!("  tangential = {:?}", d.tangential);
    println!(
        "  <tangential, w> = {:.3e}, |radial|² + |tangential|² - |z|² = {:.3e}",
        dot(&d.tangential, w)?,
        norm(&d.radial).powi(2) + norm(&d.tangential).powi(2) - norm(z).powi(2)
    );
    Ok(())
}

fn main() -> adamo::Result<()> {
    show(&[1.0, 0.0], &[3.0, 4.0])?;
    show(&[3.0, 4.0], &[3.0, 4.0])?;
    show(&[2.0, -1.0, 0.5], &[0.0, 0.0, 1e-3])?;
    // A zero reference has no direction: everything counts as tangential.
    show(&[1.0, 1.0], &[0.0, 0.0])?;
    Ok(())
}
