//! Quadrature grids: nodes and weights discretizing the measure `p(x) dx`.

use std::io::{Read, Write};

use faer::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{KleError, Result};
use crate::geometry::{TriangleMesh, VoxelDomain};
use crate::linalg;

/// Largest Gauss-Hermite order accepted; beyond this the tail weights
/// underflow double precision.
pub const MAX_GAUSS_HERMITE_ORDER: usize = 200;

/// Gauss-Hermite weights below this are flushed to zero.
pub const WEIGHT_UNDERFLOW: f64 = 1e-300;

/// Quadrature nodes and weights over a `dim`-dimensional domain.
///
/// Points are stored flat, row by row.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    coords: Vec<f64>,
    weights: Vec<f64>,
    dim: usize,
    label: String,
}

impl Grid {
    /// Builds a grid from flat coordinates (`len == weights.len() * dim`).
    pub fn from_flat(
        coords: Vec<f64>,
        weights: Vec<f64>,
        dim: usize,
        label: impl Into<String>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(KleError::invalid("grid dimension must be positive"));
        }
        if weights.is_empty() {
            return Err(KleError::invalid("grid must have at least one node"));
        }
        if coords.len() != weights.len() * dim {
            return Err(KleError::invalid(format!(
                "{} coordinates do not match {} nodes of dimension {dim}",
                coords.len(),
                weights.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(KleError::invalid(format!(
                "weight {i} is negative or not finite: {}",
                weights[i]
            )));
        }
        if !weights.iter().any(|&w| w > 0.0) {
            return Err(KleError::invalid("all grid weights are zero"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(KleError::invalid("grid coordinates must be finite"));
        }
        Ok(Grid {
            coords,
            weights,
            dim,
            label: label.into(),
        })
    }

    /// Builds a grid from a list of points.
    pub fn new<P: AsRef<[f64]>>(points: &[P], weights: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        let dim = points.first().map_or(0, |p| p.as_ref().len());
        if let Some(i) = points.iter().position(|p| p.as_ref().len() != dim) {
            return Err(KleError::invalid(format!(
                "point {i} does not have {dim} coordinates"
            )));
        }
        let coords = points.iter().flat_map(|p| p.as_ref().iter().copied()).collect();
        Self::from_flat(coords, weights, dim, label)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Euclidean distance between nodes `i` and `j`.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.point(i)
            .iter()
            .zip(self.point(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Returns a copy with every weight multiplied by `factor`.
    pub fn scaled_weights(&self, factor: f64) -> Result<Grid> {
        Grid::from_flat(
            self.coords.clone(),
            self.weights.iter().map(|w| w * factor).collect(),
            self.dim,
            self.label.clone(),
        )
    }

    /// Writes `x0[,x1[,x2]],weight` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..self.dim).map(|d| format!("x{d}")).collect();
        header.push("weight".into());
        out.write_record(&header)?;
        for (p, w) in self.points().zip(&self.weights) {
            let row: Vec<String> = p.iter().chain(std::iter::once(w)).map(|v| fmt_f64(*v)).collect();
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads a grid written by [`Grid::write_csv`].
    pub fn read_csv<R: Read>(reader: R, label: impl Into<String>) -> Result<Grid> {
        let mut rdr = csv::Reader::from_reader(reader);
        let header = rdr.headers()?.clone();
        let ncols = header.len();
        if ncols < 2 || &header[ncols - 1] != "weight" {
            return Err(KleError::Format(
                "grid csv must end with a `weight` column".into(),
            ));
        }
        for (d, name) in header.iter().take(ncols - 1).enumerate() {
            if name != format!("x{d}") {
                return Err(KleError::Format(format!("unexpected grid column `{name}`")));
            }
        }
        let dim = ncols - 1;
        let mut coords = Vec::new();
        let mut weights = Vec::new();
        for record in rdr.records() {
            let record = record?;
            for (d, field) in record.iter().enumerate() {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| KleError::Format(format!("bad number `{field}`")))?;
                if d < dim {
                    coords.push(v);
                } else {
                    weights.push(v);
                }
            }
        }
        Grid::from_flat(coords, weights, dim, label)
    }
}

/// Formats a float with 17 significant digits.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Cell-centered uniform grid on `[0, length]`: `x_i = (i - 1/2) length / n`,
/// `w_i = length / n`.
pub fn uniform_midpoint_1d(n: usize, length: f64) -> Result<Grid> {
    if n == 0 {
        return Err(KleError::invalid("number of cells must be positive"));
    }
    if !(length > 0.0 && length.is_finite()) {
        return Err(KleError::invalid(format!(
            "length must be positive, got {length}"
        )));
    }
    let h = length / n as f64;
    let coords = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
    Grid::from_flat(
        coords,
        vec![h; n],
        1,
        format!("uniform-midpoint n={n} L={length}"),
    )
}

/// Monte Carlo grid: `n` nodes drawn i.i.d. from `N(0, sigma_x^2)`, sorted
/// ascending, with weights proportional to the Gaussian density at each node
/// and normalized to sum to one.
pub fn mc_gaussian_1d(n: usize, sigma_x: f64, seed: u64) -> Result<Grid> {
    if n == 0 {
        return Err(KleError::invalid("number of nodes must be positive"));
    }
    if !(sigma_x > 0.0 && sigma_x.is_finite()) {
        return Err(KleError::invalid(format!(
            "sigma_x must be positive, got {sigma_x}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes: Vec<f64> = (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sigma_x * z
        })
        .collect();
    nodes.sort_by(f64::total_cmp);
    let density: Vec<f64> = nodes
        .iter()
        .map(|x| (-0.5 * (x / sigma_x).powi(2)).exp())
        .collect();
    let total: f64 = density.iter().sum();
    let weights = density.iter().map(|d| d / total).collect();
    Grid::from_flat(
        nodes,
        weights,
        1,
        format!("mc-gaussian n={n} sigma={sigma_x} seed={seed}"),
    )
}

/// Gauss-Hermite rule for the weight `exp(-t^2)`, normalized to unit mass.
#[derive(Clone, Debug)]
pub struct GaussHermiteRule {
    /// Nodes in ascending order.
    pub nodes: Vec<f64>,
    /// Weights summing to one.
    pub weights: Vec<f64>,
    /// Number of weights flushed to zero because they fell below [`WEIGHT_UNDERFLOW`].
    pub n_underflow: usize,
}

/// Nodes are the eigenvalues of the Jacobi matrix of the Hermite recurrence
/// (Golub-Welsch); weights are the matching Christoffel numbers.
pub fn gauss_hermite_rule(n: usize) -> Result<GaussHermiteRule> {
    if n == 0 || n > MAX_GAUSS_HERMITE_ORDER {
        return Err(KleError::invalid(format!(
            "Gauss-Hermite order must be in 1..={MAX_GAUSS_HERMITE_ORDER}, got {n}"
        )));
    }
    let jacobi = Mat::from_fn(n, n, |i, j| {
        if i.abs_diff(j) == 1 {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let values = linalg::symmetric_eigenvalues(&jacobi)?;
    // eigen output is descending; reverse to ascending
    let raw_nodes: Vec<f64> = values.iter().rev().copied().collect();
    // Christoffel weights 1 / sum_k p_k(t)^2 keep full relative accuracy in
    // the tails, where squared eigenvector entries bottom out near 1e-32.
    let raw_weights: Vec<f64> = raw_nodes.iter().map(|&t| christoffel_weight(n, t)).collect();

    // Enforce the exact symmetry of the rule about zero.
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let m = n - 1 - i;
        nodes[i] = 0.5 * (raw_nodes[i] - raw_nodes[m]);
        weights[i] = 0.5 * (raw_weights[i] + raw_weights[m]);
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let n_underflow = flush_underflow(&mut weights);
    Ok(GaussHermiteRule {
        nodes,
        weights,
        n_underflow,
    })
}

/// Zeroes weights below [`WEIGHT_UNDERFLOW`], renormalizes the rest to sum
/// to one and returns how many were zeroed.
fn flush_underflow(weights: &mut [f64]) -> usize {
    let mut flushed = 0;
    for w in weights.iter_mut() {
        if *w < WEIGHT_UNDERFLOW {
            *w = 0.0;
            flushed += 1;
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    flushed
}

// Orthonormal Hermite polynomials for the weight exp(-t^2) / sqrt(pi):
// t p_k = sqrt((k+1)/2) p_{k+1} + sqrt(k/2) p_{k-1}.
fn christoffel_weight(n: usize, t: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = 1.0;
    let mut sum = 1.0;
    for k in 0..n - 1 {
        let kf = k as f64;
        let next = (t * cur - (kf / 2.0).sqrt() * prev) / ((kf + 1.0) / 2.0).sqrt();
        prev = cur;
        cur = next;
        sum += cur * cur;
    }
    1.0 / sum
}

/// Gauss-Hermite grid for `N(0, sigma_x^2)`: nodes `sigma_x * sqrt(2) * t_i`,
/// weights summing to one.
pub fn gauss_hermite_1d(n: usize, sigma_x: f64) -> Result<Grid> {
    if !(sigma_x > 0.0 && sigma_x.is_finite()) {
        return Err(KleError::invalid(format!(
            "sigma_x must be positive, got {sigma_x}"
        )));
    }
    let rule = gauss_hermite_rule(n)?;
    if rule.n_underflow > 0 {
        log::warn!(
            "Gauss-Hermite order {n}: {} weights below {WEIGHT_UNDERFLOW:e} set to zero",
            rule.n_underflow
        );
    }
    let scale = sigma_x * std::f64::consts::SQRT_2;
    let coords = rule.nodes.iter().map(|t| scale * t).collect();
    Grid::from_flat(
        coords,
        rule.weights,
        1,
        format!("gauss-hermite n={n} sigma={sigma_x}"),
    )
}

/// Trapezoidal weights for strictly increasing 1D points.
pub fn trapezoid_1d(points: &[f64]) -> Result<Grid> {
    if points.len() < 2 {
        return Err(KleError::invalid("trapezoid rule needs at least two points"));
    }
    if points.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(KleError::invalid("trapezoid points must be strictly increasing"));
    }
    let n = points.len();
    let weights = (0..n)
        .map(|i| {
            let left = if i > 0 { points[i] - points[i - 1] } else { 0.0 };
            let right = if i + 1 < n { points[i + 1] - points[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect();
    Grid::from_flat(points.to_vec(), weights, 1, format!("trapezoid n={n}"))
}

/// Midpoint rule on a triangle mesh: one node per element at its centroid,
/// weighted by the element area.
pub fn from_triangle_mesh(mesh: &TriangleMesh) -> Result<Grid> {
    let n = mesh.n_triangles();
    let mut coords = Vec::with_capacity(2 * n);
    let mut weights = Vec::with_capacity(n);
    for e in 0..n {
        let area = mesh.area(e);
        if !(area > 0.0) {
            return Err(KleError::InvalidElement {
                element: e,
                reason: format!("non-positive area {area}"),
            });
        }
        coords.extend_from_slice(&mesh.centroid(e));
        weights.push(area);
    }
    Grid::from_flat(coords, weights, 2, format!("triangle-mesh elements={n}"))
}

/// One node per retained voxel at its center, weighted by the cell volume.
pub fn from_voxel_domain(vox: &VoxelDomain) -> Result<Grid> {
    if vox.is_empty() {
        return Err(KleError::invalid("voxel domain has no retained cells"));
    }
    let volume = vox.cell_volume();
    let coords = vox
        .cell_centers()
        .iter()
        .flat_map(|c| c.iter().copied())
        .collect();
    Grid::from_flat(
        coords,
        vec![volume; vox.len()],
        3,
        format!("voxels n={}", vox.len()),
    )
}
