//! Nyström discretization of the Fredholm eigenproblem.
//!
//! `K W f = lambda f` is solved through the symmetric form
//! `A = W^1/2 K W^1/2`, `h = W^1/2 f`, so `f = W^-1/2 h` is orthonormal
//! under the quadrature weights.

use std::fmt;
use std::io::{Read, Write};

use faer::Mat;

use crate::error::{KleError, Result};
use crate::linalg;
use crate::quadrature::{fmt_f64, Grid};

/// Largest size accepted by [`fredholm_eigenvalues_unsymmetrized`].
pub const MAX_UNSYMMETRIZED_N: usize = 64;

/// Relative gap (against `lambda_1`) under which neighboring modes count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Fredholm,
    Svd,
    Analytic,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Fredholm => "fredholm",
            Provenance::Svd => "svd",
            Provenance::Analytic => "analytic",
        })
    }
}

/// Eigenvalues (descending) with eigenvectors tabulated on a grid.
///
/// Column `k` of `eigenvectors` is `f_{k+1}` at the grid nodes, normalized
/// so that `sum_j w_j f_k(x_j) f_l(x_j) = delta_kl`.
#[derive(Clone, Debug)]
pub struct KLSpectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Mat<f64>,
    pub grid: Grid,
    pub provenance: Provenance,
    /// Negative eigenvalues set to zero.
    pub n_clamped: usize,
    /// Most negative eigenvalue before clamping, if any.
    pub most_negative: Option<f64>,
    /// Sum of all eigenvalues before clamping and truncation.
    pub raw_trace: f64,
    /// `degenerate[k]` is set when mode `k` is within [`DEGENERACY_TOL`] of a neighbor.
    pub degenerate: Vec<bool>,
}

impl KLSpectrum {
    pub(crate) fn from_parts(
        eigenvalues: Vec<f64>,
        mut eigenvectors: Mat<f64>,
        grid: Grid,
        provenance: Provenance,
        raw_trace: f64,
    ) -> Self {
        let mut n_clamped = 0;
        let mut most_negative: Option<f64> = None;
        let eigenvalues: Vec<f64> = eigenvalues
            .into_iter()
            .map(|l| {
                if l < 0.0 {
                    n_clamped += 1;
                    most_negative = Some(most_negative.map_or(l, |m: f64| m.min(l)));
                    0.0
                } else {
                    l
                }
            })
            .collect();
        if n_clamped > 0 {
            log::warn!(
                "{n_clamped} negative eigenvalues clamped to zero (most negative {:e})",
                most_negative.unwrap_or(0.0)
            );
        }
        for j in 0..eigenvectors.ncols() {
            fix_sign(eigenvectors.col_as_slice_mut(j));
        }
        let degenerate = degeneracy_flags(&eigenvalues);
        KLSpectrum {
            eigenvalues,
            eigenvectors,
            grid,
            provenance,
            n_clamped,
            most_negative,
            raw_trace,
            degenerate,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `f_k` on the grid nodes, `k` counted from zero.
    pub fn eigenvector(&self, k: usize) -> &[f64] {
        self.eigenvectors.col_as_slice(k)
    }

    /// Keeps the leading `n_modes` modes.
    pub fn truncated(&self, n_modes: usize) -> KLSpectrum {
        let n = n_modes.min(self.n_modes());
        let rows = self.eigenvectors.nrows();
        KLSpectrum {
            eigenvalues: self.eigenvalues[..n].to_vec(),
            eigenvectors: Mat::from_fn(rows, n, |i, j| self.eigenvectors[(i, j)]),
            grid: self.grid.clone(),
            provenance: self.provenance,
            n_clamped: self.n_clamped,
            most_negative: self.most_negative,
            raw_trace: self.raw_trace,
            degenerate: self.degenerate[..n].to_vec(),
        }
    }

    /// Fraction of the total variance carried by each prefix of modes.
    pub fn cumulative_fraction(&self) -> Vec<f64> {
        let total = self.raw_trace;
        let mut acc = 0.0;
        self.eigenvalues
            .iter()
            .map(|l| {
                acc += l;
                acc / total
            })
            .collect()
    }

    /// Smallest number of modes whose cumulative variance reaches `fraction`.
    pub fn modes_for_fraction(&self, fraction: f64) -> Option<usize> {
        self.cumulative_fraction()
            .iter()
            .position(|&c| c >= fraction)
            .map(|i| i + 1)
    }

    /// Writes `k,lambda`.
    pub fn write_eigenvalues_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_eigenvalues_csv(writer, &self.eigenvalues)
    }

    /// Writes `node_index,x0[,x1[,x2]],f_1,...,f_n`.
    pub fn write_eigenvectors_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let dim = self.grid.dim();
        let mut header = vec!["node_index".to_string()];
        header.extend((0..dim).map(|d| format!("x{d}")));
        header.extend((1..=self.n_modes()).map(|k| format!("f_{k}")));
        out.write_record(&header)?;
        for i in 0..self.grid.len() {
            let mut row = vec![i.to_string()];
            row.extend(self.grid.point(i).iter().map(|v| fmt_f64(*v)));
            row.extend((0..self.n_modes()).map(|k| fmt_f64(self.eigenvectors[(i, k)])));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

impl KLSpectrum {
    /// Reads back the `k,lambda` and `node_index,x0..,f_1..` tables written by
    /// [`KLSpectrum::write_eigenvalues_csv`] and
    /// [`KLSpectrum::write_eigenvectors_csv`]. Quadrature weights are not
    /// stored, so the grid gets unit weights.
    pub fn read_csv<R1: Read, R2: Read>(eigenvalues: R1, eigenvectors: R2) -> Result<KLSpectrum> {
        let mut values = Vec::new();
        for (row, rec) in csv::Reader::from_reader(eigenvalues).records().enumerate() {
            let rec = rec?;
            let lam = rec
                .get(1)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| KleError::Format(format!("eigenvalue row {}: expected k,lambda", row + 1)))?;
            values.push(lam);
        }
        let mut reader = csv::Reader::from_reader(eigenvectors);
        let header = reader.headers()?.clone();
        let dim = header.iter().filter(|h| h.starts_with('x')).count();
        let n_modes = header.iter().filter(|h| h.starts_with("f_")).count();
        if dim == 0 || header.len() != 1 + dim + n_modes {
            return Err(KleError::Format(
                "eigenvector header must be node_index,x0..,f_1..".into(),
            ));
        }
        if n_modes != values.len() {
            return Err(KleError::Format(format!(
                "{} eigenvalues but {n_modes} eigenvector columns",
                values.len()
            )));
        }
        let mut coords = Vec::new();
        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); n_modes];
        for (row, rec) in reader.records().enumerate() {
            let rec = rec?;
            let parsed: Vec<f64> = rec
                .iter()
                .skip(1)
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| KleError::Format(format!("eigenvector row {}: {e}", row + 1)))?;
            if parsed.len() != dim + n_modes {
                return Err(KleError::Format(format!(
                    "eigenvector row {} has the wrong width",
                    row + 1
                )));
            }
            coords.extend_from_slice(&parsed[..dim]);
            for (k, col) in columns.iter_mut().enumerate() {
                col.push(parsed[dim + k]);
            }
        }
        let n = coords.len() / dim;
        let grid = Grid::from_flat(coords, vec![1.0; n], dim, "csv")?;
        let eigenvectors = Mat::from_fn(n, n_modes, |i, k| columns[k][i]);
        let raw_trace = values.iter().sum();
        let degenerate = degeneracy_flags(&values);
        Ok(KLSpectrum {
            eigenvalues: values,
            eigenvectors,
            grid,
            provenance: Provenance::Fredholm,
            n_clamped: 0,
            most_negative: None,
            raw_trace,
            degenerate,
        })
    }
}

/// Writes a `k,lambda` table, `k` counted from one.
pub fn write_eigenvalues_csv<W: Write>(writer: W, eigenvalues: &[f64]) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["k", "lambda"])?;
    for (k, l) in eigenvalues.iter().enumerate() {
        out.write_record([(k + 1).to_string(), fmt_f64(*l)])?;
    }
    out.flush()?;
    Ok(())
}

// largest-magnitude entry made positive; first index wins ties
fn fix_sign(v: &mut [f64]) {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for &x in v.iter() {
        if x.abs() > best {
            best = x.abs();
            sign = x.signum();
        }
    }
    if sign < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn degeneracy_flags(values: &[f64]) -> Vec<bool> {
    let scale = values.first().copied().unwrap_or(0.0).abs();
    let mut flags = vec![false; values.len()];
    for i in 1..values.len() {
        if (values[i - 1] - values[i]).abs() < DEGENERACY_TOL * scale {
            flags[i - 1] = true;
            flags[i] = true;
        }
    }
    flags
}

fn check_inputs(k: &Mat<f64>, grid: &Grid) -> Result<()> {
    let n = grid.len();
    if k.nrows() != n || k.ncols() != n {
        return Err(KleError::invalid(format!(
            "covariance is {}x{} but the grid has {n} nodes",
            k.nrows(),
            k.ncols()
        )));
    }
    for j in 0..n {
        if k.col_as_slice(j).iter().any(|v| !v.is_finite()) {
            return Err(KleError::invalid(format!(
                "covariance column {j} has non-finite entries"
            )));
        }
    }
    Ok(())
}

/// `W^1/2 K W^1/2` restricted to the nodes with positive weight.
fn symmetrized(k: &Mat<f64>, grid: &Grid, active: &[usize]) -> Mat<f64> {
    let sw: Vec<f64> = active.iter().map(|&i| grid.weights()[i].sqrt()).collect();
    Mat::from_fn(active.len(), active.len(), |a, b| {
        sw[a] * k[(active[a], active[b])] * sw[b]
    })
}

fn active_nodes(grid: &Grid) -> Vec<usize> {
    (0..grid.len()).filter(|&i| grid.weights()[i] > 0.0).collect()
}

/// Solves the discretized Fredholm equation for the leading `n_modes` modes
/// (all modes when `None`).
///
/// Zero-weight nodes are left out of the solve and get `f = 0`. Negative
/// eigenvalues are clamped to zero and counted. A request for more modes
/// than nodes is clamped with a warning.
pub fn solve_fredholm(k: &Mat<f64>, grid: &Grid, n_modes: Option<usize>) -> Result<KLSpectrum> {
    check_inputs(k, grid)?;
    let n = grid.len();
    let active = active_nodes(grid);
    let mut wanted = n_modes.unwrap_or(n);
    if wanted > n {
        log::warn!("requested {wanted} modes from a grid of {n} nodes; clamping");
        wanted = n;
    }
    let wanted = wanted.min(active.len());
    let a = symmetrized(k, grid, &active);
    let eig = linalg::symmetric_eigen(&a)?;
    drop(a);
    let raw_trace = eig.values.iter().sum();
    let inv_sw: Vec<f64> = active.iter().map(|&i| 1.0 / grid.weights()[i].sqrt()).collect();
    let mut f = Mat::<f64>::zeros(n, wanted);
    for m in 0..wanted {
        for (a_idx, &node) in active.iter().enumerate() {
            f[(node, m)] = eig.vectors[(a_idx, m)] * inv_sw[a_idx];
        }
    }
    Ok(KLSpectrum::from_parts(
        eig.values[..wanted].to_vec(),
        f,
        grid.clone(),
        Provenance::Fredholm,
        raw_trace,
    ))
}

/// All eigenvalues of the discretized problem (descending, unclamped),
/// without eigenvectors.
///
/// Takes `K` by value and scales it in place when every weight is positive,
/// so large problems need a single `N x N` buffer.
pub fn fredholm_eigenvalues(mut k: Mat<f64>, grid: &Grid) -> Result<Vec<f64>> {
    check_inputs(&k, grid)?;
    let active = active_nodes(grid);
    if active.len() == grid.len() {
        let sw: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
        for j in 0..grid.len() {
            let col = k.col_as_slice_mut(j);
            for (i, v) in col.iter_mut().enumerate() {
                *v *= sw[i] * sw[j];
            }
        }
        linalg::symmetric_eigenvalues(&k)
    } else {
        let a = symmetrized(&k, grid, &active);
        drop(k);
        linalg::symmetric_eigenvalues(&a)
    }
}

/// Eigenvalues of the nonsymmetric product `K W` through a general
/// eigensolver. Cross-check for the symmetric route on small grids only.
pub fn fredholm_eigenvalues_unsymmetrized(k: &Mat<f64>, grid: &Grid) -> Result<Vec<f64>> {
    check_inputs(k, grid)?;
    let n = grid.len();
    if n > MAX_UNSYMMETRIZED_N {
        return Err(KleError::invalid(format!(
            "unsymmetrized solve limited to {MAX_UNSYMMETRIZED_N} nodes, got {n}"
        )));
    }
    let w = grid.weights();
    let kw = Mat::from_fn(n, n, |i, j| k[(i, j)] * w[j]);
    let scale = (0..n)
        .map(|i| k[(i, i)].abs() * w[i])
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    linalg::general_real_eigenvalues(&kw, 1e-8 * scale)
}

/// Max-abs entry of `K - sum_{k < n_modes} lambda_k f_k f_k^T`.
pub fn mercer_residual(spectrum: &KLSpectrum, k: &Mat<f64>, n_modes: usize) -> Result<f64> {
    let n = spectrum.grid.len();
    if k.nrows() != n || k.ncols() != n {
        return Err(KleError::invalid(
            "covariance size does not match the spectrum grid",
        ));
    }
    if n_modes > spectrum.n_modes() {
        return Err(KleError::invalid(format!(
            "asked for {n_modes} modes, spectrum has {}",
            spectrum.n_modes()
        )));
    }
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let mut approx = 0.0;
            for m in 0..n_modes {
                approx +=
                    spectrum.eigenvalues[m] * spectrum.eigenvectors[(i, m)] * spectrum.eigenvectors[(j, m)];
            }
            worst = worst.max((k[(i, j)] - approx).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::exp_kernel_eigenvalues;
    use crate::geometry::DistanceField;
    use crate::kernels::{covariance_matrix, Kernel};
    use crate::quadrature::{mc_gaussian_1d, uniform_midpoint_1d};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn weighted_gram(s: &KLSpectrum) -> f64 {
        let w = s.grid.weights();
        let mut worst = 0.0f64;
        for a in 0..s.n_modes() {
            for b in 0..s.n_modes() {
                let dot: f64 = (0..w.len())
                    .map(|j| w[j] * s.eigenvectors[(j, a)] * s.eigenvectors[(j, b)])
                    .sum();
                worst = worst.max((dot - if a == b { 1.0 } else { 0.0 }).abs());
            }
        }
        worst
    }

    fn exp_problem(n: usize, ell: f64) -> (Mat<f64>, Grid) {
        let g = uniform_midpoint_1d(n, 1.0).unwrap();
        let k = covariance_matrix(&Kernel::exponential(ell).unwrap(), &g, &DistanceField::Euclidean).unwrap();
        (k, g)
    }

    #[test]
    fn one_node() {
        let g = Grid::new(&[[0.0]], vec![0.25], "one").unwrap();
        let k = Mat::from_fn(1, 1, |_, _| 3.0);
        let s = solve_fredholm(&k, &g, None).unwrap();
        assert_relative_eq!(s.eigenvalues[0], 0.75, max_relative = 1e-15);
        assert_relative_eq!(s.eigenvectors[(0, 0)], 2.0, max_relative = 1e-15);
    }

    #[test]
    fn orthonormal_and_trace_preserving() {
        let g = mc_gaussian_1d(120, 1.5, 9).unwrap();
        let k = covariance_matrix(
            &Kernel::squared_exponential(0.8).unwrap(),
            &g,
            &DistanceField::Euclidean,
        )
        .unwrap();
        let s = solve_fredholm(&k, &g, None).unwrap();
        assert!(weighted_gram(&s) < 1e-10);
        let wtrace: f64 = (0..g.len()).map(|j| g.weights()[j] * k[(j, j)]).sum();
        assert_relative_eq!(s.raw_trace, wtrace, max_relative = 1e-10);
        assert!(s.eigenvalues.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn matches_exponential_oracle() {
        let (k, g) = exp_problem(512, 0.2);
        let s = solve_fredholm(&k, &g, Some(30)).unwrap();
        let exact = exp_kernel_eigenvalues(0.2, 30).unwrap();
        for (num, ana) in s.eigenvalues.iter().zip(&exact) {
            assert!((num / ana - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn refinement_improves_every_leading_mode() {
        let exact = exp_kernel_eigenvalues(0.2, 10).unwrap();
        let (kc, gc) = exp_problem(32, 0.2);
        let (kf, gf) = exp_problem(512, 0.2);
        let coarse = fredholm_eigenvalues(kc, &gc).unwrap();
        let fine = fredholm_eigenvalues(kf, &gf).unwrap();
        for m in 0..10 {
            assert!(
                (fine[m] - exact[m]).abs() < (coarse[m] - exact[m]).abs(),
                "mode {}",
                m + 1
            );
        }
    }

    #[test]
    fn eigenvalues_only_matches_full_solve() {
        let (k, g) = exp_problem(200, 0.3);
        let full = solve_fredholm(&k, &g, None).unwrap();
        let vals = fredholm_eigenvalues(k, &g).unwrap();
        for (a, b) in full.eigenvalues.iter().zip(&vals) {
            assert!((a - b.max(0.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn unsymmetrized_route_agrees() {
        let g = mc_gaussian_1d(40, 1.0, 3).unwrap();
        let k = covariance_matrix(&Kernel::exponential(0.5).unwrap(), &g, &DistanceField::Euclidean).unwrap();
        let sym = fredholm_eigenvalues(k.clone(), &g).unwrap();
        let gen = fredholm_eigenvalues_unsymmetrized(&k, &g).unwrap();
        for (a, b) in sym.iter().zip(&gen) {
            assert!((a - b).abs() < 1e-10 * sym[0]);
        }
        let big = uniform_midpoint_1d(65, 1.0).unwrap();
        let kb = Mat::<f64>::identity(65, 65);
        assert!(fredholm_eigenvalues_unsymmetrized(&kb, &big).is_err());
    }

    #[test]
    fn zero_weight_nodes_are_excluded() {
        let g = Grid::new(&[[0.0], [0.5], [1.0]], vec![0.5, 0.0, 0.5], "gap").unwrap();
        let k = covariance_matrix(&Kernel::exponential(1.0).unwrap(), &g, &DistanceField::Euclidean).unwrap();
        let s = solve_fredholm(&k, &g, None).unwrap();
        assert_eq!(s.n_modes(), 2);
        assert!(s.eigenvector(0)[1] == 0.0 && s.eigenvector(1)[1] == 0.0);
        assert!(weighted_gram(&s) < 1e-12);
    }

    #[test]
    fn too_many_modes_are_clamped() {
        let (k, g) = exp_problem(8, 0.2);
        assert_eq!(solve_fredholm(&k, &g, Some(50)).unwrap().n_modes(), 8);
    }

    #[test]
    fn rejects_bad_covariance() {
        let g = uniform_midpoint_1d(3, 1.0).unwrap();
        let mut k = Mat::<f64>::identity(3, 3);
        k[(0, 1)] = f64::NAN;
        assert!(solve_fredholm(&k, &g, None).is_err());
        assert!(solve_fredholm(&Mat::<f64>::identity(2, 2), &g, None).is_err());
    }

    #[test]
    fn negative_eigenvalues_are_clamped_and_reported() {
        let g = uniform_midpoint_1d(2, 2.0).unwrap();
        // eigenvalues 3 and -1
        let k = Mat::from_fn(2, 2, |i, j| if i == j { 1.0 } else { 2.0 });
        let s = solve_fredholm(&k, &g, None).unwrap();
        assert_eq!(s.n_clamped, 1);
        assert_relative_eq!(s.most_negative.unwrap(), -1.0, max_relative = 1e-14);
        assert_eq!(s.eigenvalues[1], 0.0);
        assert_relative_eq!(s.raw_trace, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn sign_convention() {
        let (k, g) = exp_problem(64, 0.4);
        let s = solve_fredholm(&k, &g, Some(10)).unwrap();
        for m in 0..10 {
            let v = s.eigenvector(m);
            let top = v
                .iter()
                .cloned()
                .fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
            assert!(top > 0.0);
        }
    }

    #[test]
    fn degenerate_pairs_flagged() {
        let g = uniform_midpoint_1d(3, 3.0).unwrap();
        let k = Mat::from_fn(3, 3, |i, j| {
            if i == j {
                if i == 2 {
                    1.0
                } else {
                    2.0
                }
            } else {
                0.0
            }
        });
        let s = solve_fredholm(&k, &g, None).unwrap();
        assert_eq!(s.degenerate, vec![true, true, false]);
    }

    #[test]
    fn mercer_residual_behaviour() {
        let (k, g) = exp_problem(128, 0.2);
        let s = solve_fredholm(&k, &g, None).unwrap();
        assert!(mercer_residual(&s, &k, 128).unwrap() < 1e-8);
        assert_eq!(mercer_residual(&s, &k, 0).unwrap(), 1.0);
        assert!(mercer_residual(&s, &k, 30).unwrap() < mercer_residual(&s, &k, 10).unwrap());
        assert!(mercer_residual(&s, &k, 129).is_err());
    }

    #[test]
    fn csv_exports() {
        let (k, g) = exp_problem(4, 0.5);
        let s = solve_fredholm(&k, &g, Some(2)).unwrap();
        let mut buf = Vec::new();
        s.write_eigenvalues_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("k,lambda\n1,"));
        assert_eq!(text.lines().count(), 3);
        let mut buf = Vec::new();
        s.write_eigenvectors_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("node_index,x0,f_1,f_2\n0,"));
        assert_eq!(text.lines().count(), 5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn uniform_scaling_law(n in 4usize..60, ell in 0.05f64..1.0, seed in 0u64..1000) {
            let g = mc_gaussian_1d(n, 1.0, seed).unwrap();
            let k = covariance_matrix(&Kernel::exponential(ell).unwrap(), &g, &DistanceField::Euclidean).unwrap();
            let k4 = Mat::from_fn(n, n, |i, j| 4.0 * k[(i, j)]);
            let a = solve_fredholm(&k, &g, None).unwrap();
            let b = solve_fredholm(&k4, &g, None).unwrap();
            for m in 0..n {
                if a.eigenvalues[m] > 1e-12 {
                    prop_assert!((b.eigenvalues[m] / a.eigenvalues[m] - 4.0).abs() < 4e-12);
                }
            }
            for m in 0..n {
                if a.degenerate[m] || a.eigenvalues[m] < 1e-8 * a.eigenvalues[0] {
                    continue;
                }
                let (u, v) = (a.eigenvector(m), b.eigenvector(m));
                let diff = u.iter().zip(v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                prop_assert!(diff < 1e-6, "mode {} differs by {}", m, diff);
            }
        }
    }

    #[test]
    fn csv_round_trip() {
        let grid = uniform_midpoint_1d(20, 1.0).unwrap();
        let k = covariance_matrix(
            &Kernel::exponential(0.3).unwrap(),
            &grid,
            &DistanceField::Euclidean,
        )
        .unwrap();
        let s = solve_fredholm(&k, &grid, Some(4)).unwrap();
        let (mut ev, mut vec) = (Vec::new(), Vec::new());
        s.write_eigenvalues_csv(&mut ev).unwrap();
        s.write_eigenvectors_csv(&mut vec).unwrap();
        let back = KLSpectrum::read_csv(ev.as_slice(), vec.as_slice()).unwrap();
        assert_eq!(back.eigenvalues, s.eigenvalues);
        assert_eq!(back.eigenvectors, s.eigenvectors);
        assert_eq!(back.grid.coords(), grid.coords());
        assert!(KLSpectrum::read_csv(ev.as_slice(), &b"node_index,f_1\n0,1\n"[..]).is_err());
    }
}
