pub mod mesh2d;
pub mod spectrum1d;
pub mod svd_study;
pub mod torus3d;

use std::fs::File;
use std::io::BufWriter;

use kle_core::{KLSpectrum, Result};

/// `k,lambda,fraction` with the cumulative variance fraction.
pub fn write_spectrum(w: &mut BufWriter<File>, s: &KLSpectrum) -> Result<()> {
    use std::io::Write;
    writeln!(w, "k,lambda,fraction")?;
    for (k, (l, f)) in s.eigenvalues.iter().zip(s.cumulative_fraction()).enumerate() {
        writeln!(w, "{},{l:.16e},{f:.16e}", k + 1)?;
    }
    Ok(())
}
