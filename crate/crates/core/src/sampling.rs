//! Realizations from a truncated expansion, coefficient projection, and
//! the sample-based (SVD) spectrum.

use std::io::Write;

use faer::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{KleError, Result};
use crate::fredholm::{KLSpectrum, Provenance};
use crate::linalg;
use crate::quadrature::{fmt_f64, Grid};

/// Modes with `lambda <= SKIP_TOL * lambda_1` are not projected.
pub const SKIP_TOL: f64 = 1e-12;

/// Field realizations; column `p` is sample `p`, row `j` is grid node `j`.
#[derive(Clone, Debug)]
pub struct SampleEnsemble {
    pub values: Mat<f64>,
    pub grid: Grid,
    pub seed: Option<u64>,
    pub n_modes_used: usize,
    centered: bool,
}

impl SampleEnsemble {
    pub fn new(values: Mat<f64>, grid: Grid) -> Result<Self> {
        if values.nrows() != grid.len() {
            return Err(KleError::invalid(format!(
                "ensemble has {} rows, grid has {} nodes",
                values.nrows(),
                grid.len()
            )));
        }
        for p in 0..values.ncols() {
            if values.col_as_slice(p).iter().any(|v| !v.is_finite()) {
                return Err(KleError::invalid(format!("sample {p} has non-finite values")));
            }
        }
        Ok(SampleEnsemble {
            values,
            grid,
            seed: None,
            n_modes_used: 0,
            centered: false,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.values.ncols()
    }

    pub fn n_nodes(&self) -> usize {
        self.values.nrows()
    }

    /// Subtracts the per-node sample mean. A second call is a no-op, so
    /// centering is idempotent bit for bit.
    pub fn center(&mut self) {
        if self.centered {
            return;
        }
        let (n, m) = (self.n_nodes(), self.n_samples());
        if m > 0 {
            for i in 0..n {
                let mean = (0..m).map(|p| self.values[(i, p)]).sum::<f64>() / m as f64;
                for p in 0..m {
                    self.values[(i, p)] -= mean;
                }
            }
        }
        self.centered = true;
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn centered(&self) -> SampleEnsemble {
        let mut c = self.clone();
        c.center();
        c
    }

    /// Writes `node_index,y_1,...,y_n`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let mut header = vec!["node_index".to_string()];
        header.extend((1..=self.n_samples()).map(|p| format!("y_{p}")));
        out.write_record(&header)?;
        for i in 0..self.n_nodes() {
            let mut row = vec![i.to_string()];
            row.extend((0..self.n_samples()).map(|p| fmt_f64(self.values[(i, p)])));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Standard normal coefficients, `n_modes x n_samples`.
///
/// Mode `k` draws from its own ChaCha8 stream (`stream = k`) of the seeded
/// generator, so adding modes leaves earlier rows unchanged.
pub fn draw_coefficients(n_modes: usize, n_samples: usize, seed: u64) -> Mat<f64> {
    let mut xi = Mat::<f64>::zeros(n_modes, n_samples);
    for k in 0..n_modes {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        for p in 0..n_samples {
            xi[(k, p)] = StandardNormal.sample(&mut rng);
        }
    }
    xi
}

/// `Y^(p) = sum_k xi_k^(p) sqrt(lambda_k) f_k` for given coefficients
/// (`n_modes x n_samples`).
pub fn synthesize(spectrum: &KLSpectrum, xi: &Mat<f64>) -> Result<SampleEnsemble> {
    let n_modes = xi.nrows();
    if n_modes > spectrum.n_modes() {
        return Err(KleError::invalid(format!(
            "{n_modes} modes requested, spectrum has {}",
            spectrum.n_modes()
        )));
    }
    if let Some(l) = spectrum.eigenvalues[..n_modes].iter().find(|l| !(**l >= 0.0)) {
        return Err(KleError::invalid(format!(
            "negative eigenvalue {l} cannot be sampled"
        )));
    }
    let scaled = Mat::from_fn(n_modes, xi.ncols(), |k, p| {
        spectrum.eigenvalues[k].sqrt() * xi[(k, p)]
    });
    let values = spectrum.eigenvectors.subcols(0, n_modes) * &scaled;
    let mut ens = SampleEnsemble::new(values, spectrum.grid.clone())?;
    ens.n_modes_used = n_modes;
    Ok(ens)
}

/// Draws `n_samples` realizations of the `n_modes`-term expansion.
pub fn draw_realizations(
    spectrum: &KLSpectrum,
    n_modes: usize,
    n_samples: usize,
    seed: u64,
) -> Result<SampleEnsemble> {
    let xi = draw_coefficients(n_modes, n_samples, seed);
    let mut ens = synthesize(spectrum, &xi)?;
    ens.seed = Some(seed);
    Ok(ens)
}

/// Projected coefficients; row `r` belongs to mode `modes[r]` (counted from one).
#[derive(Clone, Debug)]
pub struct CoefficientSet {
    pub modes: Vec<usize>,
    /// Standardized coefficients `xi = zeta / sqrt(lambda)`.
    pub xi: Mat<f64>,
    /// `zeta_k = sum_j w_j Y_j f_k(x_j)`.
    pub zeta: Mat<f64>,
    /// Requested modes left out because their eigenvalue is not positive.
    pub skipped: Vec<usize>,
}

impl CoefficientSet {
    /// Writes `mode,sample,xi,zeta`, sample counted from one.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["mode", "sample", "xi", "zeta"])?;
        for (r, mode) in self.modes.iter().enumerate() {
            for p in 0..self.xi.ncols() {
                out.write_record([
                    mode.to_string(),
                    (p + 1).to_string(),
                    fmt_f64(self.xi[(r, p)]),
                    fmt_f64(self.zeta[(r, p)]),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Row of standardized coefficients for `mode` (counted from one).
    pub fn xi_for(&self, mode: usize) -> Option<Vec<f64>> {
        let r = self.modes.iter().position(|&m| m == mode)?;
        Some((0..self.xi.ncols()).map(|p| self.xi[(r, p)]).collect())
    }
}

/// Quadrature projection of each realization onto the leading `n_modes` modes.
pub fn project_coefficients(
    ensemble: &SampleEnsemble,
    spectrum: &KLSpectrum,
    n_modes: usize,
) -> Result<CoefficientSet> {
    let n = ensemble.n_nodes();
    if spectrum.grid.len() != n {
        return Err(KleError::invalid("ensemble and spectrum live on different grids"));
    }
    if n_modes > spectrum.n_modes() {
        return Err(KleError::invalid(format!(
            "{n_modes} modes requested, spectrum has {}",
            spectrum.n_modes()
        )));
    }
    let floor = SKIP_TOL * spectrum.eigenvalues.first().copied().unwrap_or(0.0);
    let (modes, skipped): (Vec<usize>, Vec<usize>) =
        (0..n_modes).partition(|&k| spectrum.eigenvalues[k] > floor && spectrum.eigenvalues[k] > 0.0);
    if !skipped.is_empty() {
        log::warn!("skipping {} modes with non-positive eigenvalues", skipped.len());
    }
    let w = spectrum.grid.weights();
    let fw = Mat::from_fn(n, modes.len(), |j, r| w[j] * spectrum.eigenvectors[(j, modes[r])]);
    let zeta = fw.transpose() * &ensemble.values;
    let xi = Mat::from_fn(zeta.nrows(), zeta.ncols(), |r, p| {
        zeta[(r, p)] / spectrum.eigenvalues[modes[r]].sqrt()
    });
    Ok(CoefficientSet {
        modes: modes.iter().map(|k| k + 1).collect(),
        xi,
        zeta,
        skipped: skipped.iter().map(|k| k + 1).collect(),
    })
}

/// The weight-scaled sample matrix `(n-1)^-1/2 W^1/2 S` of a centered
/// ensemble, restricted to positive-weight nodes.
fn scaled_sample_matrix(ensemble: &SampleEnsemble, active: &[usize]) -> Mat<f64> {
    let m = ensemble.n_samples();
    let scale = 1.0 / ((m - 1) as f64).sqrt();
    let w = ensemble.grid.weights();
    Mat::from_fn(active.len(), m, |a, p| {
        scale * w[active[a]].sqrt() * ensemble.values[(active[a], p)]
    })
}

/// Spectrum from the thin SVD of the weight-scaled, centered sample matrix:
/// `lambda = sigma^2`, `f = W^-1/2 U`.
pub fn svd_spectrum(ensemble: &SampleEnsemble, n_modes: Option<usize>) -> Result<KLSpectrum> {
    let m = ensemble.n_samples();
    if m < 2 {
        return Err(KleError::invalid(format!("need at least two samples, got {m}")));
    }
    let centered = ensemble.centered();
    let grid = &ensemble.grid;
    let n = grid.len();
    let active: Vec<usize> = (0..n).filter(|&i| grid.weights()[i] > 0.0).collect();
    let a = scaled_sample_matrix(&centered, &active);
    let svd = linalg::thin_svd(&a)?;
    let raw_trace = svd.values.iter().map(|s| s * s).sum();
    let available = svd.values.len();
    let wanted = n_modes.unwrap_or(available).min(available);
    let mut f = Mat::<f64>::zeros(n, wanted);
    for k in 0..wanted {
        for (a_idx, &node) in active.iter().enumerate() {
            f[(node, k)] = svd.left[(a_idx, k)] / grid.weights()[node].sqrt();
        }
    }
    let values = svd.values[..wanted].iter().map(|s| s * s).collect();
    Ok(KLSpectrum::from_parts(
        values,
        f,
        grid.clone(),
        Provenance::Svd,
        raw_trace,
    ))
}

/// Squared singular values of `(n-1)^-1/2 W^1/2 S` for an ensemble, without
/// centering; used by the equivalence checks.
pub fn scaled_sample_singular_values_squared(values: &Mat<f64>, weights: &[f64]) -> Result<Vec<f64>> {
    let m = values.ncols();
    if m < 2 {
        return Err(KleError::invalid("need at least two samples"));
    }
    if weights.len() != values.nrows() {
        return Err(KleError::invalid("weights do not match the sample matrix"));
    }
    let scale = 1.0 / ((m - 1) as f64).sqrt();
    let a = Mat::from_fn(values.nrows(), m, |i, p| {
        scale * weights[i].sqrt() * values[(i, p)]
    });
    Ok(linalg::singular_values(&a)?.into_iter().map(|s| s * s).collect())
}

/// `S S^T / (n - 1)`.
pub fn sample_covariance(values: &Mat<f64>) -> Result<Mat<f64>> {
    let m = values.ncols();
    if m < 2 {
        return Err(KleError::invalid("need at least two samples"));
    }
    let c = values * values.transpose();
    let inv = 1.0 / (m - 1) as f64;
    Ok(Mat::from_fn(c.nrows(), c.ncols(), |i, j| {
        // exact symmetry for the downstream symmetric solver
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        c[(a, b)] * inv
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fredholm::{fredholm_eigenvalues, solve_fredholm};
    use crate::geometry::DistanceField;
    use crate::kernels::{covariance_matrix, Kernel};
    use crate::quadrature::{mc_gaussian_1d, uniform_midpoint_1d};
    use proptest::prelude::*;
    use rand::Rng;

    fn exp_spectrum(n: usize, ell: f64, modes: usize) -> KLSpectrum {
        let g = uniform_midpoint_1d(n, 1.0).unwrap();
        let k = covariance_matrix(&Kernel::exponential(ell).unwrap(), &g, &DistanceField::Euclidean).unwrap();
        solve_fredholm(&k, &g, Some(modes)).unwrap()
    }

    #[test]
    fn single_term_synthesis() {
        let s = exp_spectrum(50, 0.3, 5);
        let xi = Mat::from_fn(1, 1, |_, _| 1.0);
        let y = synthesize(&s, &xi).unwrap();
        for j in 0..50 {
            assert_eq!(y.values[(j, 0)], s.eigenvalues[0].sqrt() * s.eigenvectors[(j, 0)]);
        }
    }

    #[test]
    fn zero_spectrum_gives_zero_field() {
        let mut s = exp_spectrum(20, 0.3, 4);
        s.eigenvalues.iter_mut().for_each(|l| *l = 0.0);
        let y = draw_realizations(&s, 4, 10, 1).unwrap();
        assert!(y.values.col_iter().all(|c| c.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn substreams_are_per_mode() {
        let a = draw_coefficients(3, 40, 11);
        let b = draw_coefficients(7, 40, 11);
        for k in 0..3 {
            for p in 0..40 {
                assert_eq!(a[(k, p)], b[(k, p)]);
            }
        }
        let c = draw_coefficients(3, 40, 12);
        assert_ne!(a[(0, 0)], c[(0, 0)]);
    }

    #[test]
    fn projection_recovers_hand_built_fields() {
        let s = exp_spectrum(64, 0.2, 8);
        let xi = Mat::from_fn(8, 2, |k, p| match (k, p) {
            (0, 0) => 1.0,
            (2, 1) => 2.0,
            (4, 1) => -1.0,
            _ => 0.0,
        });
        let y = synthesize(&s, &xi).unwrap();
        let c = project_coefficients(&y, &s, 8).unwrap();
        for k in 0..8 {
            for p in 0..2 {
                assert!((c.xi[(k, p)] - xi[(k, p)]).abs() < 1e-10);
                let zeta = s.eigenvalues[k].sqrt() * c.xi[(k, p)];
                assert!((c.zeta[(k, p)] - zeta).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn projection_skips_zero_modes() {
        let mut s = exp_spectrum(16, 0.2, 4);
        s.eigenvalues[3] = 0.0;
        let y = draw_realizations(&s, 4, 5, 0).unwrap();
        let c = project_coefficients(&y, &s, 4).unwrap();
        assert_eq!(c.modes, vec![1, 2, 3]);
        assert_eq!(c.skipped, vec![4]);
        assert!(c.xi.col_iter().all(|col| col.iter().all(|v| v.is_finite())));
    }

    #[test]
    fn round_trip_128_samples() {
        let s = exp_spectrum(256, 0.1, 30);
        let xi = draw_coefficients(30, 128, 4);
        let y = synthesize(&s, &xi).unwrap();
        let c = project_coefficients(&y, &s, 30).unwrap();
        let worst = (0..30)
            .flat_map(|k| (0..128).map(move |p| (k, p)))
            .map(|(k, p)| (c.xi[(k, p)] - xi[(k, p)]).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-9, "{worst}");
    }

    #[test]
    fn coefficients_are_white() {
        let s = exp_spectrum(256, 0.1, 10);
        let y = draw_realizations(&s, 10, 2048, 21).unwrap();
        let c = project_coefficients(&y, &s, 10).unwrap();
        let n = 2048.0;
        for a in 0..10 {
            for b in 0..=a {
                let cov: f64 = (0..2048).map(|p| c.xi[(a, p)] * c.xi[(b, p)]).sum::<f64>() / n;
                if a == b {
                    assert!((0.85..=1.15).contains(&cov), "var {a}: {cov}");
                } else {
                    assert!(cov.abs() < 0.1, "cov {a},{b}: {cov}");
                }
            }
        }
    }

    #[test]
    fn per_node_variance_converges() {
        let s = exp_spectrum(1024, 0.1, 64);
        let y = draw_realizations(&s, 64, 2048, 5).unwrap();
        let mut good = 0;
        for j in 0..1024 {
            let target: f64 = (0..64)
                .map(|k| s.eigenvalues[k] * s.eigenvectors[(j, k)].powi(2))
                .sum();
            let var: f64 = (0..2048).map(|p| y.values[(j, p)].powi(2)).sum::<f64>() / 2048.0;
            if (var / target - 1.0).abs() < 0.15 {
                good += 1;
            }
        }
        assert!(good as f64 >= 0.95 * 1024.0, "{good}");
    }

    #[test]
    fn constant_ensemble_has_zero_spectrum() {
        let g = uniform_midpoint_1d(5, 1.0).unwrap();
        let v = Mat::from_fn(5, 2, |i, _| i as f64 * 0.3 - 1.0);
        let e = SampleEnsemble::new(v, g).unwrap();
        let s = svd_spectrum(&e, None).unwrap();
        assert!(s.eigenvalues.iter().all(|&l| l.abs() < 1e-28));
    }

    #[test]
    fn svd_needs_two_samples() {
        let g = uniform_midpoint_1d(5, 1.0).unwrap();
        let e = SampleEnsemble::new(Mat::zeros(5, 1), g).unwrap();
        assert!(svd_spectrum(&e, None).is_err());
    }

    #[test]
    fn svd_matches_fredholm_of_sample_covariance() {
        let g = mc_gaussian_1d(40, 1.0, 8).unwrap();
        let k = covariance_matrix(
            &Kernel::squared_exponential(0.7).unwrap(),
            &g,
            &DistanceField::Euclidean,
        )
        .unwrap();
        let reference = solve_fredholm(&k, &g, Some(20)).unwrap();
        let ens = draw_realizations(&reference, 20, 25, 3).unwrap();
        let svd = svd_spectrum(&ens, None).unwrap();
        let centered = ens.centered();
        let c = sample_covariance(&centered.values).unwrap();
        let fred = fredholm_eigenvalues(c, &g).unwrap();
        assert!(svd.n_modes() <= 25);
        for (a, b) in svd.eigenvalues.iter().zip(&fred) {
            // roundoff in either solver is ~eps * lambda_1 in absolute terms
            assert!(
                (a - b).abs() <= 1e-10 * a.max(1e-4 * svd.eigenvalues[0]),
                "{a} vs {b}"
            );
        }
        let w = g.weights();
        for a in 0..svd.n_modes() {
            if svd.eigenvalues[a] < 1e-12 * svd.eigenvalues[0] {
                continue;
            }
            let dot: f64 = (0..40).map(|j| w[j] * svd.eigenvectors[(j, a)].powi(2)).sum();
            assert!((dot - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn csv_exports() {
        let s = exp_spectrum(3, 0.5, 2);
        let y = draw_realizations(&s, 2, 2, 0).unwrap();
        let mut buf = Vec::new();
        y.write_csv(&mut buf).unwrap();
        let t = String::from_utf8(buf).unwrap();
        assert!(t.starts_with("node_index,y_1,y_2\n"));
        let c = project_coefficients(&y, &s, 2).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let t = String::from_utf8(buf).unwrap();
        assert!(t.starts_with("mode,sample,xi,zeta\n1,1,"));
        assert_eq!(t.lines().count(), 5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn centering_is_idempotent(rows in 1usize..12, cols in 1usize..12, seed in 0u64..10_000, offset in -1e3f64..1e3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = Mat::from_fn(rows, cols, |_, _| offset + rng.random::<f64>() * 10.0);
            let g = uniform_midpoint_1d(rows, 1.0).unwrap();
            let once = SampleEnsemble::new(v, g).unwrap().centered();
            let twice = once.centered();
            prop_assert!(once.is_centered());
            for i in 0..rows {
                let mean = (0..cols).map(|p| once.values[(i, p)]).sum::<f64>() / cols as f64;
                prop_assert!(mean.abs() <= 1e-12 * (offset.abs() + 10.0));
            }
            for i in 0..rows {
                for p in 0..cols {
                    prop_assert_eq!(once.values[(i, p)].to_bits(), twice.values[(i, p)].to_bits());
                }
            }
        }

        #[test]
        fn svd_fredholm_equivalence(m in 1usize..=20, n in 2usize..=15, seed in 0u64..100_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = Mat::from_fn(m, n, |_, _| StandardNormal.sample(&mut rng));
            let w: Vec<f64> = (0..m).map(|_| rng.random_range(0.01..2.0)).collect();
            let sv2 = scaled_sample_singular_values_squared(&s, &w).unwrap();
            let g = Grid::new(&(0..m).map(|i| [i as f64]).collect::<Vec<_>>(), w, "rand").unwrap();
            let eig = fredholm_eigenvalues(sample_covariance(&s).unwrap(), &g).unwrap();
            let top = eig[0];
            for (i, e) in eig.iter().enumerate() {
                let s2 = sv2.get(i).copied().unwrap_or(0.0);
                prop_assert!((e - s2).abs() <= 1e-10 * top, "{} vs {}", e, s2);
            }
        }
    }
}
