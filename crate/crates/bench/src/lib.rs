//! Fixtures shared by the criterion benchmarks.

use kle_core::geometry::{TORUS_BOX_MAX, TORUS_BOX_MIN, TORUS_COUNTS_LOW};
use kle_core::{
    covariance_matrix, draw_realizations, knn_graph, make_torus_domain, solve_fredholm, uniform_midpoint_1d,
    CornerRule, DistanceField, Grid, KLSpectrum, Kernel, Mat, SampleEnsemble,
};

pub fn exp_grid(n: usize) -> Grid {
    uniform_midpoint_1d(n, 1.0).expect("valid grid")
}

pub fn exp_covariance(grid: &Grid, lc: f64) -> Mat<f64> {
    let kernel = Kernel::exponential(lc).expect("valid kernel");
    covariance_matrix(&kernel, grid, &DistanceField::Euclidean).expect("covariance")
}

pub fn exp_spectrum(n: usize, lc: f64, modes: usize) -> KLSpectrum {
    let grid = exp_grid(n);
    solve_fredholm(&exp_covariance(&grid, lc), &grid, Some(modes)).expect("spectrum")
}

/// Ensemble of `n_samples` realizations on `n` nodes.
pub fn ensemble(n: usize, n_samples: usize, seed: u64) -> SampleEnsemble {
    draw_realizations(&exp_spectrum(n, 0.1, 64), 64, n_samples, seed).expect("ensemble")
}

/// Standard normal draws, deterministic per seed.
pub fn normal_samples(n: usize, seed: u64) -> Vec<f64> {
    let xi = kle_core::sampling::draw_coefficients(1, n, seed);
    (0..n).map(|j| xi[(0, j)]).collect()
}

/// Cell centers of the low-resolution torus.
pub fn torus_points() -> Vec<[f64; 3]> {
    make_torus_domain(
        3.0,
        1.0,
        TORUS_COUNTS_LOW,
        TORUS_BOX_MIN,
        TORUS_BOX_MAX,
        CornerRule::All,
    )
    .expect("torus")
    .cell_centers()
    .to_vec()
}

pub fn torus_graph(k: usize) -> kle_core::geometry::SparseGraph {
    knn_graph(&torus_points(), k).expect("connected graph")
}
