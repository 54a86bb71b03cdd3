use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{KleError, Result};

#[derive(Serialize, Deserialize)]
struct MeshFile {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
}

/// A 2D triangle mesh with counter-clockwise elements.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
}

fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

impl TriangleMesh {
    /// Validates and canonicalizes a mesh. Clockwise elements are flipped.
    pub fn new(vertices: Vec<[f64; 2]>, mut triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(KleError::invalid("mesh has no triangles"));
        }
        if let Some(v) = vertices
            .iter()
            .position(|p| !(p[0].is_finite() && p[1].is_finite()))
        {
            return Err(KleError::InvalidVertex {
                vertex: v,
                reason: "non-finite coordinate".into(),
            });
        }
        let mut seen = HashSet::with_capacity(triangles.len());
        for (e, tri) in triangles.iter_mut().enumerate() {
            if let Some(&i) = tri.iter().find(|&&i| i >= vertices.len()) {
                return Err(KleError::InvalidElement {
                    element: e,
                    reason: format!("vertex index {i} out of range ({} vertices)", vertices.len()),
                });
            }
            let mut key = *tri;
            key.sort_unstable();
            if !seen.insert(key) {
                return Err(KleError::InvalidElement {
                    element: e,
                    reason: "duplicate vertex triple".into(),
                });
            }
            let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if area == 0.0 || !area.is_finite() {
                return Err(KleError::InvalidElement {
                    element: e,
                    reason: "degenerate element with zero area".into(),
                });
            }
            if area < 0.0 {
                tri.swap(1, 2);
            }
        }
        Ok(TriangleMesh { vertices, triangles })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: MeshFile = serde_json::from_str(text)?;
        Self::new(file.vertices, file.triangles)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&MeshFile {
            vertices: self.vertices.clone(),
            triangles: self.triangles.clone(),
        })?)
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn area(&self, e: usize) -> f64 {
        let [a, b, c] = self.triangles[e];
        signed_area(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn centroid(&self, e: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[e].map(|i| self.vertices[i]);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn centroids(&self) -> Vec<[f64; 2]> {
        (0..self.n_triangles()).map(|e| self.centroid(e)).collect()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|e| self.area(e)).sum()
    }

    pub fn max_area(&self) -> f64 {
        (0..self.n_triangles()).map(|e| self.area(e)).fold(0.0, f64::max)
    }
}

/// Maps per-element (centroid) values to vertices by area-weighted averaging
/// over the elements incident to each vertex.
pub fn barycentric_to_vertices(mesh: &TriangleMesh, centroid_values: &[f64]) -> Result<Vec<f64>> {
    if centroid_values.len() != mesh.n_triangles() {
        return Err(KleError::invalid(format!(
            "expected {} element values, got {}",
            mesh.n_triangles(),
            centroid_values.len()
        )));
    }
    let mut sum = vec![0.0; mesh.n_vertices()];
    let mut weight = vec![0.0; mesh.n_vertices()];
    for (e, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.area(e);
        for &v in tri {
            sum[v] += area * centroid_values[e];
            weight[v] += area;
        }
    }
    if let Some(v) = weight.iter().position(|&w| w == 0.0) {
        return Err(KleError::InvalidVertex {
            vertex: v,
            reason: "isolated vertex (no incident element)".into(),
        });
    }
    Ok(sum.iter().zip(&weight).map(|(s, w)| s / w).collect())
}
