use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use kle_core::{
    align_mode_signs, barycentric_to_vertices, covariance_matrix, from_triangle_mesh, solve_fredholm,
    DistanceField, KLSpectrum, Kernel, KernelFamily, TriangleMesh,
};
use serde::Serialize;

use crate::commands::spectrum1d::KernelArg;
use crate::commands::write_spectrum;
use crate::output::{check_positive, lc_tag, memory_guard, CliError, Run};

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    /// Triangle mesh JSON: {"vertices": [[x, y], ...], "triangles": [[i, j, k], ...]}.
    #[arg(long)]
    pub mesh: PathBuf,
    /// Correlation lengths.
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.5,1,2")]
    pub lc: Vec<f64>,
    #[arg(long, default_value_t = 30)]
    pub modes: usize,
    #[arg(long, value_enum, default_value = "sqexp")]
    pub kernel: KernelArg,
    /// Output directory of an earlier mesh2d run; modes are sign-aligned to it.
    #[arg(long)]
    pub align_to: Option<PathBuf>,
    #[arg(long, default_value = "kle-out/mesh2d")]
    pub out: PathBuf,
    #[arg(long)]
    pub force: bool,
}

fn load_reference(dir: &Path, tag: &str) -> Result<KLSpectrum, CliError> {
    let open = |name: String| {
        let path = dir.join(&name);
        File::open(&path).map_err(|e| CliError::input(format!("cannot open {}: {e}", path.display())))
    };
    let values = open(format!("spectrum_{tag}.csv"))?;
    let vectors = open(format!("eigenvectors_{tag}.csv"))?;
    KLSpectrum::read_csv(values, vectors)
        .map_err(|e| CliError::input(format!("reference in {}: {e}", dir.display())))
}

pub fn run(args: &Args) -> Result<(), CliError> {
    for &lc in &args.lc {
        check_positive("lc", lc)?;
    }
    if args.lc.is_empty() {
        return Err(CliError::usage("--lc needs at least one value"));
    }
    let mesh = TriangleMesh::load(&args.mesh)
        .map_err(|e| CliError::input(format!("{}: {e}", args.mesh.display())))?;
    let grid =
        from_triangle_mesh(&mesh).map_err(|e| CliError::input(format!("{}: {e}", args.mesh.display())))?;
    if args.modes == 0 || args.modes > grid.len() {
        return Err(CliError::usage(format!("--modes must be in 1..={}", grid.len())));
    }
    memory_guard(grid.len(), 3, args.force, "mesh spectrum")?;
    let mut run = Run::start("mesh2d", &args.out, args)?;
    run.note("elements", grid.len());
    run.note("area", grid.total_weight());
    run.note("max_element_area", mesh.max_area());
    run.write("grid.csv", |w| grid.write_csv(w))?;

    let family = match args.kernel {
        KernelArg::Exp => KernelFamily::Exponential,
        KernelArg::Sqexp => KernelFamily::SquaredExponential,
    };
    for &lc in &args.lc {
        let tag = lc_tag(lc);
        let k = covariance_matrix(&Kernel::new(family, lc, 1.0)?, &grid, &DistanceField::Euclidean)?;
        let mut spectrum = solve_fredholm(&k, &grid, Some(args.modes))?;
        drop(k);

        if let Some(dir) = &args.align_to {
            let reference = load_reference(dir, &tag)?;
            let m = reference.n_modes().min(spectrum.n_modes());
            let alignment = align_mode_signs(&reference.truncated(m), &spectrum.truncated(m))?;
            for (j, s) in alignment.signs.iter().enumerate() {
                if *s < 0.0 {
                    spectrum
                        .eigenvectors
                        .col_as_slice_mut(j)
                        .iter_mut()
                        .for_each(|v| *v = -*v);
                }
            }
            run.write(&format!("alignment_{tag}.csv"), |w| {
                writeln!(w, "mode,sign,alignable")?;
                for (j, (s, bad)) in alignment.signs.iter().zip(&alignment.unalignable).enumerate() {
                    writeln!(w, "{},{s},{}", j + 1, !bad)?;
                }
                Ok(())
            })?;
            let flipped = alignment.signs.iter().filter(|s| **s < 0.0).count();
            println!(
                "{tag}: aligned to {}, {flipped} of {m} modes flipped",
                dir.display()
            );
        }

        let vertex_modes = (0..spectrum.n_modes())
            .map(|j| barycentric_to_vertices(&mesh, spectrum.eigenvector(j)))
            .collect::<kle_core::Result<Vec<_>>>()?;
        run.write(&format!("spectrum_{tag}.csv"), |w| write_spectrum(w, &spectrum))?;
        run.write(&format!("eigenvectors_{tag}.csv"), |w| {
            spectrum.write_eigenvectors_csv(w)
        })?;
        run.write(&format!("vertex_modes_{tag}.csv"), |w| {
            let header: Vec<String> = (1..=vertex_modes.len()).map(|k| format!("f_{k}")).collect();
            writeln!(w, "vertex_index,x0,x1,{}", header.join(","))?;
            for (v, p) in mesh.vertices().iter().enumerate() {
                write!(w, "{v},{:.16e},{:.16e}", p[0], p[1])?;
                for f in &vertex_modes {
                    write!(w, ",{:.16e}", f[v])?;
                }
                writeln!(w)?;
            }
            Ok(())
        })?;
        let n95 = spectrum.modes_for_fraction(0.95);
        match n95 {
            Some(n) => println!(
                "{tag}: lambda_1 {:.5e}, {n} modes for 95% variance",
                spectrum.eigenvalues[0]
            ),
            None => println!(
                "{tag}: lambda_1 {:.5e}, 95% variance not reached within {} modes",
                spectrum.eigenvalues[0],
                spectrum.n_modes()
            ),
        }
        run.note(&format!("{tag}_modes_for_95"), n95);
        run.note(&format!("{tag}_n_clamped"), spectrum.n_clamped);
    }
    println!("wrote {}", args.out.display());
    run.finish()
}
