//! Covariance kernels and dense covariance assembly.

use std::fmt;
use std::str::FromStr;

use faer::Mat;
use rayon::prelude::*;

use crate::error::{KleError, Result};
use crate::geometry::DistanceField;
use crate::quadrature::Grid;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelFamily {
    /// `exp(-d / l)`
    Exponential,
    /// `exp(-d^2 / (2 l^2))`
    SquaredExponential,
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelFamily::Exponential => "exp",
            KernelFamily::SquaredExponential => "sqexp",
        })
    }
}

impl FromStr for KernelFamily {
    type Err = KleError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp" | "exponential" => Ok(KernelFamily::Exponential),
            "sqexp" | "squared_exponential" | "squared-exponential" => Ok(KernelFamily::SquaredExponential),
            other => Err(KleError::invalid(format!("unknown kernel family `{other}`"))),
        }
    }
}

/// Stationary isotropic covariance function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kernel {
    family: KernelFamily,
    corr_length: f64,
    variance: f64,
}

impl Kernel {
    pub fn new(family: KernelFamily, corr_length: f64, variance: f64) -> Result<Self> {
        if !(corr_length > 0.0 && corr_length.is_finite()) {
            return Err(KleError::invalid(format!(
                "correlation length must be positive, got {corr_length}"
            )));
        }
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(KleError::invalid(format!(
                "variance must be positive, got {variance}"
            )));
        }
        Ok(Kernel {
            family,
            corr_length,
            variance,
        })
    }

    pub fn exponential(corr_length: f64) -> Result<Self> {
        Self::new(KernelFamily::Exponential, corr_length, 1.0)
    }

    pub fn squared_exponential(corr_length: f64) -> Result<Self> {
        Self::new(KernelFamily::SquaredExponential, corr_length, 1.0)
    }

    pub fn with_variance(self, variance: f64) -> Result<Self> {
        Self::new(self.family, self.corr_length, variance)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn corr_length(&self) -> f64 {
        self.corr_length
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Covariance at distance `d >= 0`.
    pub fn eval(&self, d: f64) -> Result<f64> {
        if !(d >= 0.0) {
            return Err(KleError::invalid(format!(
                "distance must be non-negative, got {d}"
            )));
        }
        Ok(self.eval_unchecked(d))
    }

    #[inline]
    fn eval_unchecked(&self, d: f64) -> f64 {
        let l = self.corr_length;
        match self.family {
            KernelFamily::Exponential => self.variance * (-d / l).exp(),
            KernelFamily::SquaredExponential => self.variance * (-d * d / (2.0 * l * l)).exp(),
        }
    }
}

/// Dense covariance matrix `K_ij = C(d(x_i, x_j))`.
///
/// Each unordered pair is evaluated once and mirrored, so `K` is exactly
/// symmetric; the diagonal is exactly the kernel variance.
pub fn covariance_matrix(kernel: &Kernel, grid: &Grid, field: &DistanceField) -> Result<Mat<f64>> {
    let n = grid.len();
    if let DistanceField::Matrix(m) = field {
        if m.len() != n {
            return Err(KleError::invalid(format!(
                "distance matrix has {} nodes but the grid has {n}",
                m.len()
            )));
        }
    }
    let value = |i: usize, j: usize| {
        if i == j {
            return kernel.variance;
        }
        // canonical pair order keeps K bit-symmetric
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let d = match field {
            DistanceField::Euclidean => grid.distance(a, b),
            DistanceField::Matrix(m) => m.get(a, b),
        };
        kernel.eval_unchecked(d)
    };
    let mut k = Mat::<f64>::zeros(n, n);
    k.par_col_iter_mut().enumerate().for_each(|(j, mut col)| {
        for i in 0..n {
            col[i] = value(i, j);
        }
    });
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DistanceMatrix;
    use approx::assert_relative_eq;

    #[test]
    fn kernel_values() {
        let e = Kernel::exponential(0.5).unwrap();
        assert_eq!(e.eval(0.0).unwrap(), 1.0);
        assert_relative_eq!(
            e.eval(0.5).unwrap(),
            0.367_879_441_171_442_3,
            max_relative = 1e-15
        );
        let g = Kernel::squared_exponential(1.0)
            .unwrap()
            .with_variance(4.0)
            .unwrap();
        assert_relative_eq!(g.eval(1.0).unwrap(), 2.426_122_638_850_534, max_relative = 1e-15);
        assert!(e.eval(-1e-3).is_err());
        assert!(e.eval(f64::NAN).is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Kernel::exponential(0.0).is_err());
        assert!(Kernel::exponential(-1.0).is_err());
        assert!(Kernel::exponential(1.0).unwrap().with_variance(0.0).is_err());
    }

    #[test]
    fn monotone_in_distance() {
        for k in [
            Kernel::exponential(0.3).unwrap(),
            Kernel::squared_exponential(0.3).unwrap(),
        ] {
            let vals: Vec<f64> = (0..200).map(|i| k.eval(i as f64 * 0.01).unwrap()).collect();
            assert!(vals.windows(2).all(|w| w[1] < w[0]));
            assert!(vals.iter().all(|&v| v > 0.0 && v <= 1.0));
        }
    }

    #[test]
    fn family_parsing() {
        assert_eq!("exp".parse::<KernelFamily>().unwrap(), KernelFamily::Exponential);
        assert_eq!(
            "sqexp".parse::<KernelFamily>().unwrap(),
            KernelFamily::SquaredExponential
        );
        assert!("matern".parse::<KernelFamily>().is_err());
    }

    #[test]
    fn small_matrices() {
        let k = Kernel::exponential(0.7).unwrap().with_variance(2.5).unwrap();
        let g = Grid::new(&[[0.3]], vec![1.0], "one").unwrap();
        let m = covariance_matrix(&k, &g, &DistanceField::Euclidean).unwrap();
        assert_eq!(m[(0, 0)], 2.5);

        let k = Kernel::exponential(0.7).unwrap();
        let g = Grid::new(&[[0.0, 0.0], [0.7, 0.0]], vec![0.5, 0.5], "two").unwrap();
        let m = covariance_matrix(&k, &g, &DistanceField::Euclidean).unwrap();
        assert_relative_eq!(m[(0, 1)], (-1.0f64).exp(), max_relative = 1e-15);
        assert_eq!(m[(0, 1)], m[(1, 0)]);
    }

    #[test]
    fn matrix_field_is_used_and_checked() {
        let g = Grid::new(&[[0.0], [1.0], [2.0]], vec![1.0; 3], "line").unwrap();
        let d = DistanceMatrix::from_raw(3, vec![0.0, 1.0, 3.0, 1.0, 0.0, 1.5, 3.0, 1.5, 0.0]).unwrap();
        let k = Kernel::squared_exponential(1.0).unwrap();
        let geo = covariance_matrix(&k, &g, &DistanceField::Matrix(d)).unwrap();
        let euc = covariance_matrix(&k, &g, &DistanceField::Euclidean).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!(geo[(i, j)] <= euc[(i, j)] + 1e-12);
                assert_eq!(geo[(i, j)], geo[(j, i)]);
            }
        }
        assert_relative_eq!(geo[(0, 2)], (-4.5f64).exp(), max_relative = 1e-15);

        let d2 = DistanceMatrix::from_raw(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!(covariance_matrix(&k, &g, &DistanceField::Matrix(d2)).is_err());
    }
}
