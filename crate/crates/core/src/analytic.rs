//! Closed-form KLE eigenpairs used as reference solutions.
//!
//! * Exponential kernel `exp(-|x - y| / l)` on `[0, 1]` with unit density.
//! * Squared-exponential kernel `exp(-(x - y)^2 / (2 l^2))` on the real line
//!   under the Gaussian density `N(0, sigma^2)`.

use std::f64::consts::PI;

use crate::error::{KleError, Result};

/// Eigenvalues below this are dropped from squared-exponential spectra.
pub const SQEXP_UNDERFLOW: f64 = 1e-300;

const ROOT_TOL: f64 = 1e-12;

/// Sign-carrying form of the root equation `tan w = 2 l w / (l^2 w^2 - 1)`,
/// free of poles.
fn root_function(ell: f64, w: f64) -> f64 {
    w.sin() * (ell * ell * w * w - 1.0) - 2.0 * ell * w * w.cos()
}

/// First `n_modes` positive roots `w_k` of the exponential-kernel equation.
///
/// Root `k` is bracketed in `((k - 1) pi, k pi)`: `root_function` changes sign
/// across every bracket since its value at `m pi` is `-2 l m pi (-1)^m`.
pub fn exp_kernel_roots(ell_c: f64, n_modes: usize) -> Result<Vec<f64>> {
    if !(ell_c > 0.0 && ell_c.is_finite()) {
        return Err(KleError::invalid(format!(
            "correlation length must be positive, got {ell_c}"
        )));
    }
    if n_modes == 0 {
        return Err(KleError::invalid("n_modes must be at least 1"));
    }
    (1..=n_modes)
        .map(|k| {
            let lo = if k == 1 { 1e-9 } else { (k - 1) as f64 * PI };
            bisect(|w| root_function(ell_c, w), lo, k as f64 * PI)
                .ok_or_else(|| KleError::Numerical(format!("root {k} not bracketed for l = {ell_c}")))
        })
        .collect()
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < ROOT_TOL || mid == lo || mid == hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// One analytic eigenpair of the exponential kernel on `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpEigenpair {
    pub k: usize,
    pub omega: f64,
    pub lambda: f64,
    ell_c: f64,
    norm: f64,
}

impl ExpEigenpair {
    fn new(k: usize, omega: f64, ell_c: f64) -> Self {
        let lw = ell_c * omega;
        ExpEigenpair {
            k,
            omega,
            lambda: 2.0 * ell_c / (lw * lw + 1.0),
            ell_c,
            norm: (2.0f64).sqrt() * lw / (lw * lw + 2.0 * ell_c + 1.0).sqrt(),
        }
    }

    /// `f_k(x)`, normalized so that `int_0^1 f_k^2 dx = 1`.
    pub fn eval(&self, x: f64) -> f64 {
        let wx = self.omega * x;
        self.norm * (wx.cos() + wx.sin() / (self.ell_c * self.omega))
    }
}

pub fn exp_kernel_eigenpairs(ell_c: f64, n_modes: usize) -> Result<Vec<ExpEigenpair>> {
    Ok(exp_kernel_roots(ell_c, n_modes)?
        .into_iter()
        .enumerate()
        .map(|(i, w)| ExpEigenpair::new(i + 1, w, ell_c))
        .collect())
}

pub fn exp_kernel_eigenvalues(ell_c: f64, n_modes: usize) -> Result<Vec<f64>> {
    Ok(exp_kernel_eigenpairs(ell_c, n_modes)?
        .iter()
        .map(|p| p.lambda)
        .collect())
}

/// Large-`k` asymptote `2 / (pi^2 l k^2)` of the exponential-kernel spectrum.
pub fn exp_kernel_asymptote(ell_c: f64, k: usize) -> f64 {
    2.0 / (PI * PI * ell_c * (k * k) as f64)
}

/// Parameters of the squared-exponential spectrum under `N(0, sigma^2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SqExpSpectrum {
    pub sigma_x: f64,
    pub ell_c: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// `a + b + c`
    pub big_a: f64,
    /// `b / A`, the ratio between consecutive eigenvalues.
    pub big_b: f64,
}

impl SqExpSpectrum {
    pub fn new(sigma_x: f64, ell_c: f64) -> Result<Self> {
        if !(sigma_x > 0.0 && sigma_x.is_finite() && ell_c > 0.0 && ell_c.is_finite()) {
            return Err(KleError::invalid(format!(
                "sigma_x and ell_c must be positive, got {sigma_x}, {ell_c}"
            )));
        }
        let a = 1.0 / (4.0 * sigma_x * sigma_x);
        let b = 1.0 / (2.0 * ell_c * ell_c);
        let c = (a * a + 2.0 * a * b).sqrt();
        let big_a = a + b + c;
        Ok(SqExpSpectrum {
            sigma_x,
            ell_c,
            a,
            b,
            c,
            big_a,
            big_b: b / big_a,
        })
    }

    pub fn rho(&self) -> f64 {
        self.ell_c / self.sigma_x
    }

    /// `sqrt(2a / A) B^(k-1)`
    pub fn eigenvalue(&self, k: usize) -> f64 {
        (2.0 * self.a / self.big_a).sqrt() * self.big_b.powi(k as i32 - 1)
    }

    /// Same eigenvalue through the ratio `rho = l / sigma` only:
    /// `2^(k-1/2) rho / (rho^2 + 2 + rho sqrt(rho^2 + 4))^(k-1/2)`.
    pub fn eigenvalue_from_rho(&self, k: usize) -> f64 {
        let rho = self.rho();
        let e = k as f64 - 0.5;
        let den = rho * rho + 2.0 + rho * (rho * rho + 4.0).sqrt();
        rho * (2.0 / den).powf(e)
    }

    /// Width scale `1 / sqrt(c - a)` of the eigenfunction envelope.
    pub fn support_factor(&self) -> f64 {
        1.0 / (self.c - self.a).sqrt()
    }

    /// `f_k(x)`, orthonormal under `N(0, sigma^2)`.
    pub fn eigenfunction(&self, k: usize, x: f64) -> Result<f64> {
        sqexp_eigenfunction_with(self, k, x)
    }
}

/// First `n_modes` squared-exponential eigenvalues, dropping any that fall
/// below [`SQEXP_UNDERFLOW`].
pub fn sqexp_eigenvalues(sigma_x: f64, ell_c: f64, n_modes: usize) -> Result<Vec<f64>> {
    let s = SqExpSpectrum::new(sigma_x, ell_c)?;
    let mut out = Vec::with_capacity(n_modes);
    for k in 1..=n_modes {
        let lam = s.eigenvalue(k);
        if lam < SQEXP_UNDERFLOW {
            log::warn!(
                "squared-exponential spectrum truncated at {} of {n_modes} modes (underflow)",
                k - 1
            );
            break;
        }
        out.push(lam);
    }
    Ok(out)
}

/// Largest mode index accepted by [`sqexp_eigenfunction`].
pub const MAX_SQEXP_MODE: usize = 100_000;

pub fn sqexp_eigenfunction(sigma_x: f64, ell_c: f64, k: usize, x: f64) -> Result<f64> {
    sqexp_eigenfunction_with(&SqExpSpectrum::new(sigma_x, ell_c)?, k, x)
}

// f_k(x) = sqrt(2 sigma sqrt(c) / (2^(k-1) (k-1)!)) exp(-(c-a) x^2) H_{k-1}(sqrt(2c) x).
// The factorial prefactor is folded into the normalized Hermite recursion,
// which is evaluated with a running log scale.
fn sqexp_eigenfunction_with(s: &SqExpSpectrum, k: usize, x: f64) -> Result<f64> {
    if k == 0 {
        return Err(KleError::invalid("mode index starts at 1"));
    }
    if k > MAX_SQEXP_MODE {
        return Err(KleError::OutOfRange(format!("mode {k} exceeds {MAX_SQEXP_MODE}")));
    }
    let t = (2.0 * s.c).sqrt() * x;
    let (h, log_scale) = normalized_hermite(k - 1, t);
    if h == 0.0 {
        return Ok(0.0);
    }
    let log_mag = log_scale + h.abs().ln() - (s.c - s.a) * x * x + 0.5 * (2.0 * s.sigma_x * s.c.sqrt()).ln();
    Ok(h.signum() * log_mag.exp())
}

/// `H_n(t) / sqrt(2^n n!)` as `(mantissa, log_scale)` with the value equal
/// to `mantissa * exp(log_scale)`.
fn normalized_hermite(n: usize, t: f64) -> (f64, f64) {
    let mut prev = 0.0;
    let mut cur = 1.0;
    let mut log_scale = 0.0;
    for m in 0..n {
        let mf = m as f64;
        let next = t * (2.0 / (mf + 1.0)).sqrt() * cur - (mf / (mf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        let mag = cur.abs();
        if mag > 1e150 {
            prev /= mag;
            cur /= mag;
            log_scale += mag.ln();
        }
    }
    (cur, log_scale)
}

/// Physicists' Hermite polynomial `H_n(t)` by the three-term recursion
/// `H_{n+1} = 2t H_n - 2n H_{n-1}`.
pub fn hermite(n: usize, t: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = 1.0;
    for m in 0..n {
        let next = 2.0 * t * cur - 2.0 * m as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}
