use std::path::PathBuf;

use clap::ValueEnum;
use kle_core::analytic::{exp_kernel_eigenpairs, SqExpSpectrum};
use kle_core::fredholm::write_eigenvalues_csv;
use kle_core::quadrature::MAX_GAUSS_HERMITE_ORDER;
use kle_core::{
    covariance_matrix, gauss_hermite_1d, mc_gaussian_1d, orthonormality_residual, solve_fredholm,
    uniform_midpoint_1d, DistanceField, Grid, Kernel, KernelFamily,
};
use serde::Serialize;

use crate::commands::write_spectrum;
use crate::output::{check_positive, memory_guard, CliError, Run};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelArg {
    Exp,
    Sqexp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GridArg {
    /// Midpoint rule on [0, 1].
    Uniform,
    /// Monte Carlo nodes from N(0, sigma_x^2), equal weights.
    Mc,
    /// Gauss-Hermite rule for N(0, sigma_x^2).
    Gh,
}

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    #[arg(long, value_enum, default_value = "exp")]
    pub kernel: KernelArg,
    /// Correlation length.
    #[arg(long)]
    pub lc: f64,
    #[arg(long, default_value_t = 512)]
    pub nx: usize,
    #[arg(long, value_enum, default_value = "uniform")]
    pub grid: GridArg,
    /// Standard deviation of the Gaussian density (mc and gh grids).
    #[arg(long, default_value_t = 1.0)]
    pub sigma_x: f64,
    #[arg(long, default_value_t = 30)]
    pub modes: usize,
    /// Seed for Monte Carlo nodes.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "kle-out/spectrum-1d")]
    pub out: PathBuf,
    /// Skip the memory estimate check.
    #[arg(long)]
    pub force: bool,
}

/// Closed-form eigenvalues and eigenfunctions at the grid nodes, when the
/// kernel/density pair has them.
struct Oracle {
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<Vec<f64>>,
}

fn oracle(args: &Args, grid: &Grid) -> Result<Option<Oracle>, CliError> {
    let xs = grid.coords();
    match (args.kernel, args.grid) {
        (KernelArg::Exp, GridArg::Uniform) => {
            let pairs = exp_kernel_eigenpairs(args.lc, args.modes)?;
            Ok(Some(Oracle {
                eigenvalues: pairs.iter().map(|p| p.lambda).collect(),
                eigenvectors: pairs
                    .iter()
                    .map(|p| xs.iter().map(|&x| p.eval(x)).collect())
                    .collect(),
            }))
        }
        (KernelArg::Sqexp, GridArg::Mc | GridArg::Gh) => {
            let s = SqExpSpectrum::new(args.sigma_x, args.lc)?;
            let eigenvalues: Vec<f64> = (1..=args.modes).map(|k| s.eigenvalue(k)).collect();
            let eigenvectors = (1..=args.modes)
                .map(|k| {
                    xs.iter()
                        .map(|&x| s.eigenfunction(k, x))
                        .collect::<kle_core::Result<Vec<_>>>()
                })
                .collect::<kle_core::Result<Vec<_>>>()?;
            Ok(Some(Oracle {
                eigenvalues,
                eigenvectors,
            }))
        }
        _ => Ok(None),
    }
}

pub fn run(args: &Args) -> Result<(), CliError> {
    check_positive("lc", args.lc)?;
    check_positive("sigma-x", args.sigma_x)?;
    if args.nx == 0 {
        return Err(CliError::usage("--nx must be positive"));
    }
    if args.modes == 0 || args.modes > args.nx {
        return Err(CliError::usage(format!("--modes must be in 1..={}", args.nx)));
    }
    if args.grid == GridArg::Gh && args.nx > MAX_GAUSS_HERMITE_ORDER {
        return Err(CliError::usage(format!(
            "--grid gh supports --nx up to {MAX_GAUSS_HERMITE_ORDER}"
        )));
    }
    memory_guard(args.nx, 3, args.force, "spectrum")?;
    let mut run = Run::start("spectrum-1d", &args.out, args)?;
    if args.grid == GridArg::Mc {
        run.seeds(&[args.seed]);
    }

    let grid = match args.grid {
        GridArg::Uniform => uniform_midpoint_1d(args.nx, 1.0)?,
        GridArg::Mc => mc_gaussian_1d(args.nx, args.sigma_x, args.seed)?,
        GridArg::Gh => gauss_hermite_1d(args.nx, args.sigma_x)?,
    };
    let family = match args.kernel {
        KernelArg::Exp => KernelFamily::Exponential,
        KernelArg::Sqexp => KernelFamily::SquaredExponential,
    };
    let kernel = Kernel::new(family, args.lc, 1.0)?;
    let k = covariance_matrix(&kernel, &grid, &DistanceField::Euclidean)?;
    let spectrum = solve_fredholm(&k, &grid, Some(args.modes))?;
    drop(k);

    run.write("grid.csv", |w| grid.write_csv(w))?;
    run.write("eigenvalues.csv", |w| write_spectrum(w, &spectrum))?;
    run.write("eigenvectors.csv", |w| spectrum.write_eigenvectors_csv(w))?;
    run.note("n_clamped", spectrum.n_clamped);
    run.note("most_negative", spectrum.most_negative);
    run.note("trace", spectrum.raw_trace);
    run.note("orthonormality_residual", orthonormality_residual(&spectrum));

    if let Some(o) = oracle(args, &grid)? {
        run.write("analytic_eigenvalues.csv", |w| {
            write_eigenvalues_csv(w, &o.eigenvalues)
        })?;
        run.write("analytic_eigenvectors.csv", |w| {
            use std::io::Write;
            let header: Vec<String> = (1..=o.eigenvectors.len()).map(|k| format!("f_{k}")).collect();
            writeln!(w, "node_index,x0,{}", header.join(","))?;
            for (i, x) in grid.coords().iter().enumerate() {
                write!(w, "{i},{x:.16e}")?;
                for f in &o.eigenvectors {
                    write!(w, ",{:.16e}", f[i])?;
                }
                writeln!(w)?;
            }
            Ok(())
        })?;
        let err = spectrum
            .eigenvalues
            .iter()
            .zip(&o.eigenvalues)
            .map(|(a, b)| ((a - b) / b).abs())
            .fold(0.0, f64::max);
        println!(
            "max relative eigenvalue error over {} modes: {err:.3e}",
            args.modes
        );
        run.note("max_rel_eigenvalue_error", err);
    } else {
        println!(
            "no closed-form oracle for kernel {:?} on grid {:?}",
            args.kernel, args.grid
        );
    }
    println!("wrote {}", args.out.display());
    run.finish()
}
