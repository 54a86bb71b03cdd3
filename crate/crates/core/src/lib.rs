//! Karhunen-Loève expansions of random fields on discretized domains.
//!
//! The expansion is computed either from a covariance kernel, by solving the
//! Nyström-discretized Fredholm eigenproblem ([`solve_fredholm`]), or from a
//! sample ensemble through the SVD of the weight-scaled sample matrix
//! ([`svd_spectrum`]). Closed-form spectra for the exponential and
//! squared-exponential kernels live in [`analytic`].
//!
//! ```
//! use kle_core::{covariance_matrix, solve_fredholm, uniform_midpoint_1d, DistanceField, Kernel};
//!
//! let grid = uniform_midpoint_1d(128, 1.0)?;
//! let k = covariance_matrix(&Kernel::exponential(0.2)?, &grid, &DistanceField::Euclidean)?;
//! let spectrum = solve_fredholm(&k, &grid, Some(10))?;
//! assert!(spectrum.eigenvalues[0] > spectrum.eigenvalues[1]);
//! # Ok::<(), kle_core::KleError>(())
//! ```

// `!(x > 0.0)` is deliberate: NaN must fail the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod diagnostics;
mod error;
pub mod fredholm;
pub mod geometry;
pub mod kernels;
mod linalg;
pub mod quadrature;
pub mod sampling;

pub use faer::Mat;

pub use analytic::{
    exp_kernel_eigenpairs, exp_kernel_roots, sqexp_eigenfunction, sqexp_eigenvalues, ExpEigenpair,
    SqExpSpectrum,
};
pub use diagnostics::{
    align_mode_signs, analyze_ensemble, fit_inverse_sqrt_trend, kl_divergence_study,
    kl_divergence_study_with, kl_divergence_to_standard_normal, orthonormality_residual, EnsembleAnalysis,
    KLDivergenceReport, KlStudy, KlStudyConfig, SignAlignment, TrendFit,
};
pub use error::{KleError, Result};
pub use fredholm::{fredholm_eigenvalues, mercer_residual, solve_fredholm, KLSpectrum, Provenance};
pub use geometry::{
    all_pairs_shortest_paths, barycentric_to_vertices, knn_graph, make_torus_domain,
    pairwise_distance_histogram, CornerRule, DistanceField, DistanceMatrix, TriangleMesh, VoxelDomain,
};
pub use kernels::{covariance_matrix, Kernel, KernelFamily};
pub use quadrature::{
    from_triangle_mesh, from_voxel_domain, gauss_hermite_1d, mc_gaussian_1d, trapezoid_1d,
    uniform_midpoint_1d, Grid,
};
pub use sampling::{draw_realizations, project_coefficients, svd_spectrum, CoefficientSet, SampleEnsemble};

/// Caps the worker threads used by rayon loops and by faer's dense kernels.
/// Must be called before any parallel work; fails if the rayon pool has
/// already been built.
pub fn configure_threads(n: usize) -> Result<()> {
    if n == 0 {
        return Err(KleError::InvalidArgument("thread count must be positive".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| KleError::InvalidArgument(format!("cannot size thread pool: {e}")))?;
    faer::set_global_parallelism(if n == 1 {
        faer::Par::Seq
    } else {
        faer::Par::rayon(n)
    });
    Ok(())
}
