use std::io::Write;
use std::path::PathBuf;

use kle_core::{kl_divergence_study_with, KlStudyConfig};
use serde::Serialize;

use crate::commands::write_spectrum;
use crate::output::{check_positive, memory_guard, CliError, Run};

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    /// Correlation length of the exponential reference kernel.
    #[arg(long, default_value_t = 0.1)]
    pub lc: f64,
    #[arg(long, default_value_t = 1024)]
    pub nx: usize,
    /// Ensemble sizes.
    #[arg(long, value_delimiter = ',', default_value = "32,128,512,2048")]
    pub nspls: Vec<usize>,
    /// Number of seeds per ensemble size; seeds are 0..seeds.
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,
    /// Modes whose coefficients are tested.
    #[arg(long, default_value_t = 16)]
    pub modes: usize,
    /// Modes used to synthesize the realizations.
    #[arg(long, default_value_t = 64)]
    pub generating_modes: usize,
    #[arg(long, default_value = "kle-out/svd-study")]
    pub out: PathBuf,
    #[arg(long)]
    pub force: bool,
}

pub fn run(args: &Args) -> Result<(), CliError> {
    check_positive("lc", args.lc)?;
    if args.seeds == 0 {
        return Err(CliError::usage("--seeds must be at least 1"));
    }
    if args.nspls.is_empty() {
        return Err(CliError::usage("--nspls needs at least one ensemble size"));
    }
    memory_guard(args.nx, 3, args.force, "reference spectrum")?;
    let config = KlStudyConfig {
        ell_c: args.lc,
        n_x: args.nx,
        sample_counts: args.nspls.clone(),
        seeds: (0..args.seeds).collect(),
        generating_modes: args.generating_modes,
        tested_modes: args.modes,
    };
    config.validate()?;
    let mut run = Run::start("svd-study", &args.out, args)?;
    run.seeds(&config.seeds);

    let reference = config.reference_spectrum()?;
    run.write("fredholm_reference.csv", |w| write_spectrum(w, &reference))?;
    run.write("reference_eigenvectors.csv", |w| {
        reference.write_eigenvectors_csv(w)
    })?;

    let mut spectra = Vec::new();
    let mut coefficients = Vec::new();
    let mut first_seed_vectors = Vec::new();
    let study = kl_divergence_study_with(&config, |a| {
        for (k, l) in a.svd.eigenvalues.iter().enumerate() {
            writeln!(spectra, "{},{},{},{l:.16e}", a.n_samples, a.seed, k + 1)?;
        }
        if a.seed == config.seeds[0] {
            for (r, mode) in a.coefficients.modes.iter().enumerate() {
                for p in 0..a.coefficients.xi.ncols() {
                    writeln!(
                        coefficients,
                        "{},{},{mode},{},{:.16e}",
                        a.n_samples,
                        a.seed,
                        p + 1,
                        a.coefficients.xi[(r, p)]
                    )?;
                }
            }
            let mut buf = Vec::new();
            a.svd.write_eigenvectors_csv(&mut buf)?;
            first_seed_vectors.push((a.n_samples, buf));
        }
        Ok(())
    })?;

    run.write("svd_spectra.csv", |w| {
        writeln!(w, "n_samples,seed,k,lambda")?;
        w.write_all(&spectra)?;
        Ok(())
    })?;
    run.write("coefficients.csv", |w| {
        writeln!(w, "n_samples,seed,mode,sample,xi")?;
        w.write_all(&coefficients)?;
        Ok(())
    })?;
    for (n, buf) in &first_seed_vectors {
        run.write(&format!("svd_eigenvectors_n{n}.csv"), |w| Ok(w.write_all(buf)?))?;
    }
    run.write("kl_detail.csv", |w| study.write_detail_csv(w))?;
    run.write("kl_summary.csv", |w| study.write_summary_csv(w))?;

    for r in &study.reports {
        println!(
            "n_samples {:>6}: mean D_KL {:.5} (std {:.5})",
            r.n_samples, r.mean, r.std
        );
    }
    println!("fit: D_KL ~ {:.4} n^{:.3}", study.fit.c, study.fit.slope);
    run.note("fit_c", study.fit.c);
    run.note("fit_slope", study.fit.slope);
    run.note("mean_d_kl", study.means());
    println!("wrote {}", args.out.display());
    run.finish()
}
