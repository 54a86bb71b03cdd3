use crate::error::{KleError, Result};

/// Bounding box of the torus study, `[-4.05, 4.05]^2 x [-1.05, 1.05]`.
pub const TORUS_BOX_MIN: [f64; 3] = [-4.05, -4.05, -1.05];
pub const TORUS_BOX_MAX: [f64; 3] = [4.05, 4.05, 1.05];
/// 41 grid planes per axis, i.e. 40 cells: spacing 0.2025 x 0.2025 x 0.0525.
pub const TORUS_COUNTS_FULL: [usize; 3] = [40, 40, 40];
pub const TORUS_COUNTS_LOW: [usize; 3] = [21, 21, 21];

/// Which corners of a cell must lie inside the domain for the cell to be kept.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CornerRule {
    /// At least one of the eight corners.
    Any,
    /// All eight corners.
    All,
}

/// Cartesian cells of a box clipped to a domain.
#[derive(Clone, Debug)]
pub struct VoxelDomain {
    box_min: [f64; 3],
    box_max: [f64; 3],
    counts: [usize; 3],
    spacing: [f64; 3],
    retained: Vec<[usize; 3]>,
    cell_centers: Vec<[f64; 3]>,
}

impl VoxelDomain {
    /// Splits the box into `counts` cells per axis and keeps the cells whose
    /// corners satisfy `inside` according to `rule`. Cells are ordered
    /// lexicographically by `(ix, iy, iz)`.
    pub fn clip(
        counts: [usize; 3],
        box_min: [f64; 3],
        box_max: [f64; 3],
        rule: CornerRule,
        inside: impl Fn([f64; 3]) -> bool,
    ) -> Result<Self> {
        if counts.contains(&0) {
            return Err(KleError::invalid("cell counts must be positive"));
        }
        if (0..3).any(|d| !(box_max[d] > box_min[d])) {
            return Err(KleError::invalid("box_max must exceed box_min on every axis"));
        }
        let spacing: [f64; 3] = std::array::from_fn(|d| (box_max[d] - box_min[d]) / counts[d] as f64);
        let [nx, ny, nz] = counts.map(|c| c + 1);
        let node = |i: usize, d: usize| box_min[d] + i as f64 * spacing[d];
        let mut node_inside = vec![false; nx * ny * nz];
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    node_inside[(i * ny + j) * nz + k] = inside([node(i, 0), node(j, 1), node(k, 2)]);
                }
            }
        }
        let mut retained = Vec::new();
        let mut cell_centers = Vec::new();
        for i in 0..counts[0] {
            for j in 0..counts[1] {
                for k in 0..counts[2] {
                    let mut hits = 0;
                    for (di, dj, dk) in CORNERS {
                        if node_inside[((i + di) * ny + j + dj) * nz + k + dk] {
                            hits += 1;
                        }
                    }
                    let keep = match rule {
                        CornerRule::Any => hits > 0,
                        CornerRule::All => hits == 8,
                    };
                    if keep {
                        retained.push([i, j, k]);
                        cell_centers.push([
                            box_min[0] + (i as f64 + 0.5) * spacing[0],
                            box_min[1] + (j as f64 + 0.5) * spacing[1],
                            box_min[2] + (k as f64 + 0.5) * spacing[2],
                        ]);
                    }
                }
            }
        }
        if retained.is_empty() {
            return Err(KleError::invalid("no cells retained"));
        }
        Ok(VoxelDomain {
            box_min,
            box_max,
            counts,
            spacing,
            retained,
            cell_centers,
        })
    }

    pub fn len(&self) -> usize {
        self.retained.len()
    }

    pub fn is_empty(&self) -> bool {
        self.retained.is_empty()
    }

    pub fn box_min(&self) -> [f64; 3] {
        self.box_min
    }

    pub fn box_max(&self) -> [f64; 3] {
        self.box_max
    }

    pub fn counts(&self) -> [usize; 3] {
        self.counts
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn retained(&self) -> &[[usize; 3]] {
        &self.retained
    }

    pub fn cell_centers(&self) -> &[[f64; 3]] {
        &self.cell_centers
    }

    /// Retained cells whose z-extent `[lo, hi)` contains `z0`.
    pub fn slice_z(&self, z0: f64) -> Vec<usize> {
        let h = 0.5 * self.spacing[2];
        (0..self.len())
            .filter(|&c| {
                let z = self.cell_centers[c][2];
                z - h <= z0 && z0 < z + h
            })
            .collect()
    }
}

const CORNERS: [(usize, usize, usize); 8] = [
    (0, 0, 0),
    (0, 0, 1),
    (0, 1, 0),
    (0, 1, 1),
    (1, 0, 0),
    (1, 0, 1),
    (1, 1, 0),
    (1, 1, 1),
];

/// Solid torus `(sqrt(x^2 + y^2) - R)^2 + z^2 <= r^2` around the z-axis.
#[derive(Clone, Copy, Debug)]
pub struct Torus {
    pub major: f64,
    pub minor: f64,
}

impl Torus {
    pub fn contains(&self, p: [f64; 3]) -> bool {
        let rho = (p[0] * p[0] + p[1] * p[1]).sqrt() - self.major;
        rho * rho + p[2] * p[2] <= self.minor * self.minor
    }
}

/// Voxelizes the solid torus with major radius `major` and tube radius `minor`.
pub fn make_torus_domain(
    major: f64,
    minor: f64,
    counts: [usize; 3],
    box_min: [f64; 3],
    box_max: [f64; 3],
    rule: CornerRule,
) -> Result<VoxelDomain> {
    if !(minor > 0.0 && major > minor) {
        return Err(KleError::invalid(format!(
            "torus radii must satisfy 0 < r < R, got R={major}, r={minor}"
        )));
    }
    let reach = major + minor;
    let encloses = box_min[0] <= -reach
        && box_min[1] <= -reach
        && box_min[2] <= -minor
        && box_max[0] >= reach
        && box_max[1] >= reach
        && box_max[2] >= minor;
    if !encloses {
        return Err(KleError::invalid("box does not enclose the torus"));
    }
    let torus = Torus { major, minor };
    VoxelDomain::clip(counts, box_min, box_max, rule, |p| torus.contains(p))
}
