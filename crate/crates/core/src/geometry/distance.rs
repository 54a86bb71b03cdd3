use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{KleError, Result};

/// Magic bytes opening a binary distance/covariance matrix file.
pub const MATRIX_MAGIC: &[u8; 8] = b"KLEDIST1";

/// Dense symmetric distance matrix with a zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Wraps row-major data after checking shape, symmetry (1e-12), zero
    /// diagonal and non-negativity.
    pub fn from_raw(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(KleError::invalid(format!(
                "distance matrix of size {n} needs {} entries, got {}",
                n * n,
                data.len()
            )));
        }
        for i in 0..n {
            if data[i * n + i] != 0.0 {
                return Err(KleError::invalid(format!("diagonal entry {i} is not zero")));
            }
            for j in (i + 1)..n {
                let (a, b) = (data[i * n + j], data[j * n + i]);
                if !(a >= 0.0 && a.is_finite() && b >= 0.0 && b.is_finite()) {
                    return Err(KleError::invalid(format!(
                        "entry ({i}, {j}) is negative or not finite"
                    )));
                }
                if (a - b).abs() > 1e-12 {
                    return Err(KleError::invalid(format!("matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(DistanceMatrix { n, data })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Writes the `KLEDIST1` binary layout.
    pub fn write_binary<W: Write>(&self, writer: W) -> Result<()> {
        write_matrix_binary(writer, self.n, &self.data)
    }

    pub fn read_binary<R: Read>(reader: R) -> Result<Self> {
        let (n, data) = read_matrix_binary(reader)?;
        Self::from_raw(n, data)
    }
}

/// Writes an `n x n` row-major matrix: 8-byte magic `KLEDIST1`, `n` as
/// little-endian u64, then `n*n` little-endian f64.
pub fn write_matrix_binary<W: Write>(mut writer: W, n: usize, data: &[f64]) -> Result<()> {
    if data.len() != n * n {
        return Err(KleError::invalid("matrix data does not match its size"));
    }
    writer.write_all(MATRIX_MAGIC)?;
    writer.write_all(&(n as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(8 * n);
    for row in data.chunks(n.max(1)) {
        buf.clear();
        for v in row {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        writer.write_all(&buf)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_matrix_binary<R: Read>(mut reader: R) -> Result<(usize, Vec<f64>)> {
    let mut header = [0u8; 16];
    reader.read_exact(&mut header)?;
    if &header[..8] != MATRIX_MAGIC {
        return Err(KleError::Format("missing KLEDIST1 header".into()));
    }
    let n = u64::from_le_bytes(header[8..].try_into().expect("8 bytes")) as usize;
    let len = n
        .checked_mul(n)
        .ok_or_else(|| KleError::Format(format!("matrix size {n} overflows")))?;
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * len {
        return Err(KleError::Format(format!(
            "expected {} payload bytes, found {}",
            8 * len,
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok((n, data))
}

/// Source of pairwise distances between grid nodes.
#[derive(Clone, Debug)]
pub enum DistanceField {
    /// Straight-line distance between node coordinates.
    Euclidean,
    /// Precomputed symmetric matrix, e.g. shortest interior paths.
    Matrix(DistanceMatrix),
}

impl DistanceField {
    /// Distance between nodes `i` and `j` of `points`.
    pub fn distance<P: AsRef<[f64]>>(&self, points: &[P], i: usize, j: usize) -> f64 {
        match self {
            DistanceField::Euclidean => {
                let (a, b) = (points[i].as_ref(), points[j].as_ref());
                a.iter()
                    .zip(b)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt()
            }
            DistanceField::Matrix(m) => m.get(i, j),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            DistanceField::Euclidean => "euclidean",
            DistanceField::Matrix(_) => "matrix",
        }
    }

    pub fn as_matrix(&self) -> Option<&DistanceMatrix> {
        match self {
            DistanceField::Matrix(m) => Some(m),
            DistanceField::Euclidean => None,
        }
    }
}

/// Binned pairwise distances from random node pairs.
#[derive(Clone, Debug)]
pub struct DistanceHistogram {
    /// `counts.len() + 1` bin edges from 0 to the largest sampled distance.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub mean: f64,
    pub n_pairs: usize,
}

impl DistanceHistogram {
    /// Center of the most populated bin.
    pub fn mode(&self) -> f64 {
        let (best, _) = self
            .counts
            .iter()
            .enumerate()
            .fold((0, 0), |acc, (i, &c)| if c > acc.1 { (i, c) } else { acc });
        0.5 * (self.edges[best] + self.edges[best + 1])
    }

    /// Probability density per bin (integrates to one).
    pub fn density(&self) -> Vec<f64> {
        let total = self.n_pairs as f64;
        self.counts
            .iter()
            .zip(self.edges.windows(2))
            .map(|(&c, e)| c as f64 / (total * (e[1] - e[0])))
            .collect()
    }
}

/// Samples `n_pairs` index pairs `(i, j)`, `i != j`, uniformly with
/// replacement and bins their distances.
pub fn pairwise_distance_histogram<P: AsRef<[f64]>>(
    points: &[P],
    field: &DistanceField,
    n_pairs: usize,
    n_bins: usize,
    seed: u64,
) -> Result<DistanceHistogram> {
    let n = points.len();
    if n < 2 {
        return Err(KleError::invalid("need at least two points"));
    }
    if n_pairs == 0 || n_bins == 0 {
        return Err(KleError::invalid("n_pairs and n_bins must be positive"));
    }
    if let DistanceField::Matrix(m) = field {
        if m.len() != n {
            return Err(KleError::invalid(format!(
                "distance matrix has {} nodes, point set has {n}",
                m.len()
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<f64> = (0..n_pairs)
        .map(|_| {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            field.distance(points, i, j)
        })
        .collect();
    let mean = samples.iter().sum::<f64>() / n_pairs as f64;
    let max = samples.iter().cloned().fold(0.0, f64::max);
    let width = if max > 0.0 { max / n_bins as f64 } else { 1.0 };
    let mut counts = vec![0u64; n_bins];
    for d in &samples {
        let b = ((d / width) as usize).min(n_bins - 1);
        counts[b] += 1;
    }
    let edges = (0..=n_bins).map(|b| b as f64 * width).collect();
    Ok(DistanceHistogram {
        edges,
        counts,
        mean,
        n_pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_layout() {
        let m = DistanceMatrix::from_raw(2, vec![0.0, 1.5, 1.5, 0.0]).unwrap();
        let mut buf = Vec::new();
        m.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 4 * 8);
        assert_eq!(&buf[..8], b"KLEDIST1");
        assert_eq!(u64::from_le_bytes(buf[8..16].try_into().unwrap()), 2);
        assert_eq!(f64::from_le_bytes(buf[24..32].try_into().unwrap()), 1.5);
        assert_eq!(DistanceMatrix::read_binary(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn binary_rejects_bad_input() {
        assert!(DistanceMatrix::read_binary(&b"NOTMAGIC\x01\0\0\0\0\0\0\0"[..]).is_err());
        let mut buf = Vec::new();
        buf.extend_from_slice(b"KLEDIST1");
        buf.extend_from_slice(&3u64.to_le_bytes());
        buf.extend_from_slice(&0f64.to_le_bytes());
        assert!(DistanceMatrix::read_binary(buf.as_slice()).is_err());
    }

    #[test]
    fn matrix_invariants() {
        assert!(DistanceMatrix::from_raw(2, vec![0.0, 1.0, 2.0, 0.0]).is_err());
        assert!(DistanceMatrix::from_raw(2, vec![1.0, 1.0, 1.0, 0.0]).is_err());
        assert!(DistanceMatrix::from_raw(2, vec![0.0, -1.0, -1.0, 0.0]).is_err());
        assert!(DistanceMatrix::from_raw(2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn two_points_histogram() {
        let pts = [[0.0, 0.0], [1.0, 0.0]];
        let h = pairwise_distance_histogram(&pts, &DistanceField::Euclidean, 1000, 10, 5).unwrap();
        assert_eq!(h.mean, 1.0);
        assert_eq!(h.counts.iter().sum::<u64>(), 1000);
    }

    #[test]
    fn histogram_deterministic_per_seed() {
        let pts: Vec<[f64; 1]> = (0..50).map(|i| [i as f64 * 0.37]).collect();
        let a = pairwise_distance_histogram(&pts, &DistanceField::Euclidean, 5000, 20, 1).unwrap();
        let b = pairwise_distance_histogram(&pts, &DistanceField::Euclidean, 5000, 20, 1).unwrap();
        assert_eq!(a.counts, b.counts);
        assert_eq!(a.mean, b.mean);
        let density: f64 = a
            .density()
            .iter()
            .zip(a.edges.windows(2))
            .map(|(d, e)| d * (e[1] - e[0]))
            .sum();
        assert!((density - 1.0).abs() < 1e-12);
    }
}
