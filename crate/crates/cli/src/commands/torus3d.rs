use std::io::Write;
use std::path::PathBuf;

use clap::ValueEnum;
use kle_core::geometry::{TORUS_BOX_MAX, TORUS_BOX_MIN, TORUS_COUNTS_FULL, TORUS_COUNTS_LOW};
use kle_core::{
    all_pairs_shortest_paths, covariance_matrix, from_voxel_domain, knn_graph, make_torus_domain,
    pairwise_distance_histogram, solve_fredholm, CornerRule, DistanceField, Kernel,
};
use serde::Serialize;

use crate::commands::write_spectrum;
use crate::output::{check_positive, lc_tag, memory_guard, CliError, Run};

/// Torus radii of the study domain.
const MAJOR_RADIUS: f64 = 3.0;
const MINOR_RADIUS: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Resolution {
    /// 21 cells per axis.
    Low,
    /// 40 cells per axis (N = 22168 with the all-corners rule).
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclid,
    Sip,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Corners {
    All,
    Any,
}

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    #[arg(long, value_enum, default_value = "low")]
    pub resolution: Resolution,
    /// Correlation lengths of the squared-exponential kernel.
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
    pub lc: Vec<f64>,
    #[arg(long, value_enum, default_value = "both")]
    pub metric: Metric,
    /// Neighbors per cell in the shortest-interior-path graph.
    #[arg(long, default_value_t = 100)]
    pub knn: usize,
    #[arg(long, default_value_t = 20)]
    pub modes: usize,
    /// Random cell pairs for the distance histogram.
    #[arg(long, default_value_t = 100_000)]
    pub pairs: usize,
    #[arg(long, default_value_t = 60)]
    pub bins: usize,
    /// Seed for the histogram pairs.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Which cell corners must lie inside the torus.
    #[arg(long, value_enum, default_value = "all")]
    pub corners: Corners,
    /// Run even when the dense matrices exceed the memory budget.
    #[arg(long)]
    pub force: bool,
    #[arg(long, default_value = "kle-out/torus3d")]
    pub out: PathBuf,
}

pub fn run(args: &Args) -> Result<(), CliError> {
    for &lc in &args.lc {
        check_positive("lc", lc)?;
    }
    if args.pairs == 0 || args.bins == 0 {
        return Err(CliError::usage("--pairs and --bins must be positive"));
    }
    let counts = match args.resolution {
        Resolution::Low => TORUS_COUNTS_LOW,
        Resolution::Full => TORUS_COUNTS_FULL,
    };
    let rule = match args.corners {
        Corners::All => CornerRule::All,
        Corners::Any => CornerRule::Any,
    };
    let vox = make_torus_domain(
        MAJOR_RADIUS,
        MINOR_RADIUS,
        counts,
        TORUS_BOX_MIN,
        TORUS_BOX_MAX,
        rule,
    )?;
    let grid = from_voxel_domain(&vox)?;
    let n = grid.len();
    if args.modes == 0 || args.modes > n {
        return Err(CliError::usage(format!("--modes must be in 1..={n}")));
    }
    let want_sip = args.metric != Metric::Euclid;
    // covariance + eigen workspace, plus the distance matrix for SIP
    memory_guard(n, if want_sip { 4 } else { 3 }, args.force, "torus study")?;

    let mut run = Run::start("torus3d", &args.out, args)?;
    run.seeds(&[args.seed]);
    run.note("cells", n);
    run.note("volume", grid.total_weight());
    println!("torus: {n} cells");

    let pts = vox.cell_centers();
    let mut fields = Vec::new();
    if args.metric != Metric::Sip {
        fields.push(("euclid", DistanceField::Euclidean));
    }
    if want_sip {
        let graph = knn_graph(pts, args.knn)?;
        let sip = all_pairs_shortest_paths(&graph)?;
        if let Some(m) = sip.as_matrix() {
            run.write("sip_distances.bin", |w| m.write_binary(w))?;
        }
        fields.push(("sip", sip));
    }

    let mut histograms = Vec::new();
    for (name, field) in &fields {
        let h = pairwise_distance_histogram(pts, field, args.pairs, args.bins, args.seed)?;
        println!("{name}: mean pair distance {:.4}, mode {:.3}", h.mean, h.mode());
        run.note(&format!("{name}_mean_distance"), h.mean);
        run.note(&format!("{name}_distance_mode"), h.mode());
        histograms.push((*name, h));
    }
    run.write("distance_histogram.csv", |w| {
        writeln!(w, "metric,bin,lo,hi,count,density")?;
        for (name, h) in &histograms {
            for (b, (c, d)) in h.counts.iter().zip(h.density()).enumerate() {
                writeln!(
                    w,
                    "{name},{},{:.16e},{:.16e},{c},{d:.16e}",
                    b + 1,
                    h.edges[b],
                    h.edges[b + 1]
                )?;
            }
        }
        Ok(())
    })?;

    let slice = vox.slice_z(0.0);
    for &lc in &args.lc {
        let tag = lc_tag(lc);
        let kernel = Kernel::squared_exponential(lc)?;
        for (name, field) in &fields {
            let k = covariance_matrix(&kernel, &grid, field)?;
            let spectrum = solve_fredholm(&k, &grid, Some(args.modes))?;
            drop(k);
            println!("{tag} {name}: lambda_1 {:.6}", spectrum.eigenvalues[0]);
            run.note(&format!("{tag}_{name}_lambda_1"), spectrum.eigenvalues[0]);
            run.note(&format!("{tag}_{name}_n_clamped"), spectrum.n_clamped);
            run.note(&format!("{tag}_{name}_most_negative"), spectrum.most_negative);
            run.write(&format!("spectrum_{name}_{tag}.csv"), |w| {
                write_spectrum(w, &spectrum)
            })?;
            run.write(&format!("slice_z0_{name}_{tag}.csv"), |w| {
                let header: Vec<String> = (1..=spectrum.n_modes()).map(|k| format!("f_{k}")).collect();
                writeln!(w, "node_index,x0,x1,{}", header.join(","))?;
                for &c in &slice {
                    let p = grid.point(c);
                    write!(w, "{c},{:.16e},{:.16e}", p[0], p[1])?;
                    for j in 0..spectrum.n_modes() {
                        write!(w, ",{:.16e}", spectrum.eigenvectors[(c, j)])?;
                    }
                    writeln!(w)?;
                }
                Ok(())
            })?;
        }
    }
    println!("wrote {}", args.out.display());
    run.finish()
}
