//! Diagnostics: KL divergence of coefficient marginals against `N(0, 1)`,
//! power-law trend fits, cross-grid sign alignment and orthonormality checks.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{KleError, Result};
use crate::fredholm::KLSpectrum;
use crate::geometry::DistanceField;
use crate::kernels::{covariance_matrix, Kernel};
use crate::quadrature::{fmt_f64, uniform_midpoint_1d};
use crate::sampling::{draw_realizations, project_coefficients, svd_spectrum, CoefficientSet};

pub const KL_WINDOW: f64 = 8.0;
pub const KL_POINTS: usize = 4096;
pub const KDE_FLOOR: f64 = 1e-12;
pub const MIN_KDE_SAMPLES: usize = 8;

/// Gaussian kernel density estimate with Silverman's bandwidth
/// `1.06 sigma n^(-1/5)`.
#[derive(Clone, Debug)]
pub struct GaussianKde {
    sorted: Vec<f64>,
    bandwidth: f64,
}

impl GaussianKde {
    pub fn new(samples: &[f64]) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(KleError::invalid("density estimate needs at least two samples"));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(KleError::invalid("samples must be finite"));
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        if !(var > 0.0) {
            return Err(KleError::invalid("samples have zero spread"));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(GaussianKde {
            sorted,
            bandwidth: 1.06 * var.sqrt() * (n as f64).powf(-0.2),
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn eval(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        // contributions beyond 10 bandwidths are below exp(-50)
        let lo = self.sorted.partition_point(|&s| s < x - 10.0 * h);
        let hi = self.sorted.partition_point(|&s| s <= x + 10.0 * h);
        let sum: f64 = self.sorted[lo..hi]
            .iter()
            .map(|&s| {
                let u = (x - s) / h;
                (-0.5 * u * u).exp()
            })
            .sum();
        sum / (self.sorted.len() as f64 * h * (2.0 * PI).sqrt())
    }

    /// The estimate at `start + i * step`, `i < n`, with the same 10-bandwidth
    /// cutoff as [`GaussianKde::eval`]. Walks each sample's Gaussian across the
    /// grid by the ratio recurrence `g_{i+1} = g_i r_i`, `r_{i+1} = r_i q`,
    /// restarting from exact values every 64 steps.
    pub fn eval_uniform(&self, start: f64, step: f64, n: usize) -> Vec<f64> {
        const RESEED: usize = 64;
        let h = self.bandwidth;
        let d = step / h;
        let q = (-d * d).exp();
        let mut out = vec![0.0; n];
        if n == 0 {
            return out;
        }
        let last = (n - 1) as f64;
        for &s in &self.sorted {
            let lo = ((s - 10.0 * h - start) / step).ceil().max(0.0);
            let hi = ((s + 10.0 * h - start) / step).floor().min(last);
            if lo > hi {
                continue;
            }
            let (lo, hi) = (lo as usize, hi as usize);
            let center = (((s - start) / step).round().max(0.0) as usize).clamp(lo, hi);
            let u_at = |i: usize| (start + i as f64 * step - s) / h;
            // upward from center
            let mut i = center;
            while i <= hi {
                let u = u_at(i);
                let mut g = (-0.5 * u * u).exp();
                let mut r = (-u * d - 0.5 * d * d).exp();
                let stop = (i + RESEED).min(hi + 1);
                while i < stop {
                    out[i] += g;
                    g *= r;
                    r *= q;
                    i += 1;
                }
            }
            // downward from center - 1
            let mut i = center as isize - 1;
            while i >= lo as isize {
                let u = u_at(i as usize);
                let mut g = (-0.5 * u * u).exp();
                let mut r = (u * d - 0.5 * d * d).exp();
                let stop = (i - RESEED as isize).max(lo as isize - 1);
                while i > stop {
                    out[i as usize] += g;
                    g *= r;
                    r *= q;
                    i -= 1;
                }
            }
        }
        let norm = 1.0 / (self.sorted.len() as f64 * h * (2.0 * PI).sqrt());
        out.iter_mut().for_each(|v| *v *= norm);
        out
    }
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

fn window_nodes() -> impl Iterator<Item = f64> {
    let dx = 2.0 * KL_WINDOW / KL_POINTS as f64;
    (0..KL_POINTS).map(move |i| -KL_WINDOW + (i as f64 + 0.5) * dx)
}

/// `int p ln(p / q) dxi` with `p = N(0, 1)` and `q` the KDE of `samples`,
/// by the midpoint rule on `[-8, 8]` with 4096 points; `q` is floored at 1e-12.
pub fn kl_divergence_to_standard_normal(samples: &[f64]) -> Result<f64> {
    if samples.len() < MIN_KDE_SAMPLES {
        return Err(KleError::invalid(format!(
            "need at least {MIN_KDE_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    let kde = GaussianKde::new(samples)?;
    let dx = 2.0 * KL_WINDOW / KL_POINTS as f64;
    let q = kde.eval_uniform(-KL_WINDOW + 0.5 * dx, dx, KL_POINTS);
    Ok(window_nodes()
        .zip(q)
        .map(|(x, q)| {
            let p = std_normal_pdf(x);
            p * (p.ln() - q.max(KDE_FLOOR).ln()) * dx
        })
        .sum())
}

/// Midpoint integral of the KDE over the divergence window.
pub fn kde_mass(samples: &[f64]) -> Result<f64> {
    let kde = GaussianKde::new(samples)?;
    let dx = 2.0 * KL_WINDOW / KL_POINTS as f64;
    Ok(window_nodes().map(|x| kde.eval(x) * dx).sum())
}

/// Least-squares fit `ln(mean) = ln(c) + slope ln(n)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrendFit {
    pub c: f64,
    pub slope: f64,
}

pub fn fit_inverse_sqrt_trend(ns: &[usize], means: &[f64]) -> Result<TrendFit> {
    if ns.len() != means.len() {
        return Err(KleError::invalid("ns and means differ in length"));
    }
    if let Some(m) = means.iter().find(|m| !(**m > 0.0)) {
        return Err(KleError::invalid(format!("means must be positive, got {m}")));
    }
    let mut distinct = ns.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 || distinct[0] == 0 {
        return Err(KleError::invalid(
            "need at least two distinct positive sample counts",
        ));
    }
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = means.iter().map(|m| m.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Ok(TrendFit {
        c: (my - slope * mx).exp(),
        slope,
    })
}

/// Per-mode sign match between two spectra on different grids.
#[derive(Clone, Debug, PartialEq)]
pub struct SignAlignment {
    /// `+1` or `-1`; multiply the target mode by it.
    pub signs: Vec<f64>,
    /// Modes whose matched target value is too small to decide a sign.
    pub unalignable: Vec<bool>,
}

/// For each mode, takes the reference node with the largest `|f|`, finds the
/// nearest target node (lowest index on ties) and compares signs there.
/// The target is not modified.
pub fn align_mode_signs(reference: &KLSpectrum, target: &KLSpectrum) -> Result<SignAlignment> {
    if reference.n_modes() != target.n_modes() {
        return Err(KleError::invalid(format!(
            "reference has {} modes, target {}",
            reference.n_modes(),
            target.n_modes()
        )));
    }
    if reference.grid.dim() != target.grid.dim() {
        return Err(KleError::invalid("grids differ in dimension"));
    }
    let mut signs = Vec::with_capacity(reference.n_modes());
    let mut unalignable = Vec::with_capacity(reference.n_modes());
    for k in 0..reference.n_modes() {
        let f_ref = reference.eigenvector(k);
        let f_tgt = target.eigenvector(k);
        let (peak, _) =
            f_ref.iter().enumerate().fold(
                (0, -1.0),
                |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc },
            );
        let p = reference.grid.point(peak);
        let nearest = (0..target.grid.len())
            .map(|j| {
                let d: f64 = target
                    .grid
                    .point(j)
                    .iter()
                    .zip(p)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (j, d)
            })
            .fold(
                (0, f64::INFINITY),
                |acc, (j, d)| if d < acc.1 { (j, d) } else { acc },
            )
            .0;
        let tgt_max = f_tgt.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let value = f_tgt[nearest];
        if value.abs() < 1e-8 * tgt_max || f_ref[peak] == 0.0 {
            signs.push(1.0);
            unalignable.push(true);
        } else {
            signs.push(if value.signum() == f_ref[peak].signum() {
                1.0
            } else {
                -1.0
            });
            unalignable.push(false);
        }
    }
    Ok(SignAlignment { signs, unalignable })
}

/// `max_{k,l} |sum_j w_j f_k f_l - delta_kl|` over the retained modes.
pub fn orthonormality_residual(spectrum: &KLSpectrum) -> f64 {
    let w = spectrum.grid.weights();
    let n = spectrum.n_modes();
    let mut worst = 0.0f64;
    for a in 0..n {
        let fa = spectrum.eigenvector(a);
        for b in a..n {
            let fb = spectrum.eigenvector(b);
            let dot: f64 = w.iter().zip(fa).zip(fb).map(|((w, x), y)| w * x * y).sum();
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).abs());
        }
    }
    worst
}

/// KL divergences for one sample count: `d_kl[s][m]` for seed index `s`, mode `m`.
#[derive(Clone, Debug)]
pub struct KLDivergenceReport {
    pub n_samples: usize,
    pub seeds: Vec<u64>,
    pub d_kl: Vec<Vec<f64>>,
    pub mean: f64,
    pub std: f64,
}

impl KLDivergenceReport {
    pub fn new(n_samples: usize, seeds: Vec<u64>, d_kl: Vec<Vec<f64>>) -> Self {
        let all: Vec<f64> = d_kl.iter().flatten().copied().collect();
        let n = all.len().max(1) as f64;
        let mean = all.iter().sum::<f64>() / n;
        let std = (all.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        KLDivergenceReport {
            n_samples,
            seeds,
            d_kl,
            mean,
            std,
        }
    }
}

/// Sample-count study of coefficient normality for the exponential kernel
/// on a uniform 1D grid.
#[derive(Clone, Debug)]
pub struct KlStudyConfig {
    pub ell_c: f64,
    pub n_x: usize,
    pub sample_counts: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Modes used to synthesize realizations.
    pub generating_modes: usize,
    /// Leading sample-based modes whose coefficients are tested.
    pub tested_modes: usize,
}

impl Default for KlStudyConfig {
    fn default() -> Self {
        KlStudyConfig {
            ell_c: 0.1,
            n_x: 1024,
            sample_counts: vec![32, 128, 512, 2048],
            seeds: (0..20).collect(),
            generating_modes: 64,
            tested_modes: 16,
        }
    }
}

#[derive(Clone, Debug)]
pub struct KlStudy {
    pub reports: Vec<KLDivergenceReport>,
    pub fit: TrendFit,
}

impl KlStudy {
    pub fn means(&self) -> Vec<f64> {
        self.reports.iter().map(|r| r.mean).collect()
    }

    /// Writes `mode,seed,n_samples,d_kl`.
    pub fn write_detail_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["mode", "seed", "n_samples", "d_kl"])?;
        for r in &self.reports {
            for (seed, row) in r.seeds.iter().zip(&r.d_kl) {
                for (m, d) in row.iter().enumerate() {
                    out.write_record([
                        (m + 1).to_string(),
                        seed.to_string(),
                        r.n_samples.to_string(),
                        fmt_f64(*d),
                    ])?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Writes `n_samples,mean,std,fit_c,fit_slope`.
    pub fn write_summary_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["n_samples", "mean", "std", "fit_c", "fit_slope"])?;
        for r in &self.reports {
            out.write_record([
                r.n_samples.to_string(),
                fmt_f64(r.mean),
                fmt_f64(r.std),
                fmt_f64(self.fit.c),
                fmt_f64(self.fit.slope),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// One ensemble of the sampling study: its SVD spectrum, the coefficients
/// projected onto that spectrum and their per-mode D_KL.
#[derive(Clone, Debug)]
pub struct EnsembleAnalysis {
    pub n_samples: usize,
    pub seed: u64,
    pub svd: KLSpectrum,
    pub coefficients: CoefficientSet,
    pub d_kl: Vec<f64>,
}

/// Draws `n_samples` realizations from the leading `generating_modes` of
/// `reference`, recovers the spectrum by SVD and tests the first
/// `tested_modes` coefficient marginals against `N(0, 1)`.
pub fn analyze_ensemble(
    reference: &KLSpectrum,
    generating_modes: usize,
    tested_modes: usize,
    n_samples: usize,
    seed: u64,
) -> Result<EnsembleAnalysis> {
    let ens = draw_realizations(reference, generating_modes, n_samples, seed)?;
    let svd = svd_spectrum(&ens, Some(tested_modes))?;
    let coefficients = project_coefficients(&ens.centered(), &svd, tested_modes.min(svd.n_modes()))?;
    let d_kl = (0..coefficients.modes.len())
        .map(|r| {
            let xi: Vec<f64> = (0..coefficients.xi.ncols())
                .map(|p| coefficients.xi[(r, p)])
                .collect();
            kl_divergence_to_standard_normal(&xi)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EnsembleAnalysis {
        n_samples,
        seed,
        svd,
        coefficients,
        d_kl,
    })
}

/// D_KL of the sample-based coefficients of one ensemble, per tested mode.
pub fn ensemble_kl_divergences(
    reference: &KLSpectrum,
    generating_modes: usize,
    tested_modes: usize,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    Ok(analyze_ensemble(reference, generating_modes, tested_modes, n_samples, seed)?.d_kl)
}

impl KlStudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(KleError::invalid("at least one seed is required"));
        }
        if self.sample_counts.is_empty() {
            return Err(KleError::invalid("at least one sample count is required"));
        }
        if self.sample_counts.iter().any(|&n| n < MIN_KDE_SAMPLES) {
            return Err(KleError::invalid(format!(
                "sample counts must be at least {MIN_KDE_SAMPLES}"
            )));
        }
        if self.tested_modes == 0 || self.tested_modes > self.generating_modes {
            return Err(KleError::invalid("tested modes must be in 1..=generating modes"));
        }
        if self.generating_modes > self.n_x {
            return Err(KleError::invalid("more generating modes than grid nodes"));
        }
        Ok(())
    }

    /// Fredholm spectrum of the exponential kernel on the uniform grid,
    /// truncated to the generating modes.
    pub fn reference_spectrum(&self) -> Result<KLSpectrum> {
        let grid = uniform_midpoint_1d(self.n_x, 1.0)?;
        let kernel = Kernel::exponential(self.ell_c)?;
        let k = covariance_matrix(&kernel, &grid, &DistanceField::Euclidean)?;
        crate::fredholm::solve_fredholm(&k, &grid, Some(self.generating_modes))
    }
}

pub fn kl_divergence_study(config: &KlStudyConfig) -> Result<KlStudy> {
    kl_divergence_study_with(config, |_| Ok(()))
}

/// Runs the study, handing every ensemble to `visit` in order of sample
/// count, then seed. Seeds run in parallel; results do not depend on the
/// thread count.
pub fn kl_divergence_study_with(
    config: &KlStudyConfig,
    mut visit: impl FnMut(&EnsembleAnalysis) -> Result<()>,
) -> Result<KlStudy> {
    config.validate()?;
    let reference = config.reference_spectrum()?;
    let mut reports = Vec::new();
    for &n in &config.sample_counts {
        let analyses = config
            .seeds
            .par_iter()
            .map(|&seed| analyze_ensemble(&reference, reference.n_modes(), config.tested_modes, n, seed))
            .collect::<Result<Vec<_>>>()?;
        let mut rows = Vec::with_capacity(analyses.len());
        for a in analyses {
            visit(&a)?;
            rows.push(a.d_kl);
        }
        let report = KLDivergenceReport::new(n, config.seeds.clone(), rows);
        log::info!(
            "n_samples {n}: mean D_KL {:.5} (std {:.5})",
            report.mean,
            report.std
        );
        reports.push(report);
    }
    let ns: Vec<usize> = reports.iter().map(|r| r.n_samples).collect();
    let means: Vec<f64> = reports.iter().map(|r| r.mean).collect();
    let fit = fit_inverse_sqrt_trend(&ns, &means)?;
    Ok(KlStudy { reports, fit })
}
