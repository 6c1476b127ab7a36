use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `N` points in `d`-dimensional Euclidean space, stored one point per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    points: DMatrix<f64>,
}

impl PointSet {
    /// Wraps an `N x d` matrix. Rejects empty shapes and non-finite coordinates.
    pub fn new(points: DMatrix<f64>) -> Result<Self> {
        if points.nrows() == 0 || points.ncols() == 0 {
            return Err(Error::InvalidPoints(format!(
                "shape {}x{} is empty",
                points.nrows(),
                points.ncols()
            )));
        }
        if let Some(bad) = points.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidPoints(format!("non-finite coordinate {bad}")));
        }
        Ok(Self { points })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if let Some(row) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::SizeMismatch { expected: d, got: row.len() });
        }
        Self::new(DMatrix::from_fn(n, d, |i, j| rows[i][j]))
    }

    pub fn n_points(&self) -> usize {
        self.points.nrows()
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        self.points.row(i).iter().copied().collect()
    }

    pub fn sq_dist(&self, i: usize, j: usize) -> f64 {
        (0..self.dim())
            .map(|c| {
                let t = self.points[(i, c)] - self.points[(j, c)];
                t * t
            })
            .sum()
    }

    /// Points at the given indices, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&index) = indices.iter().find(|&&i| i >= self.n_points()) {
            return Err(Error::IndexOutOfRange { index, len: self.n_points() });
        }
        Self::new(self.points.select_rows(indices))
    }

    /// Returns a copy with every coordinate multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(&self.points * s)
    }

    /// Returns a copy with `shift` added to every point.
    pub fn translated(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.dim() {
            return Err(Error::SizeMismatch { expected: self.dim(), got: shift.len() });
        }
        let mut m = self.points.clone();
        for mut row in m.row_iter_mut() {
            for (v, s) in row.iter_mut().zip(shift) {
                *v += s;
            }
        }
        Self::new(m)
    }

    /// Mean of the given members.
    pub fn centroid(&self, members: &[usize]) -> Result<Vec<f64>> {
        if members.is_empty() {
            return Err(Error::EmptyMembers);
        }
        let mut c = vec![0.0; self.dim()];
        for &i in members {
            if i >= self.n_points() {
                return Err(Error::IndexOutOfRange { index: i, len: self.n_points() });
            }
            for (j, cj) in c.iter_mut().enumerate() {
                *cj += self.points[(i, j)];
            }
        }
        let inv = 1.0 / members.len() as f64;
        c.iter_mut().for_each(|v| *v *= inv);
        Ok(c)
    }

    /// Stacks two point sets of equal dimension.
    pub fn concat(&self, other: &PointSet) -> Result<Self> {
        if other.dim() != self.dim() {
            return Err(Error::SizeMismatch { expected: self.dim(), got: other.dim() });
        }
        let (n1, n2) = (self.n_points(), other.n_points());
        Self::new(DMatrix::from_fn(n1 + n2, self.dim(), |i, j| {
            if i < n1 {
                self.points[(i, j)]
            } else {
                other.points[(i - n1, j)]
            }
        }))
    }
}

/// Squared Euclidean distances between every pair of points.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    entries: DMatrix<f64>,
}

impl DistanceMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.nrows() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn max(&self) -> f64 {
        self.entries.max()
    }

    /// Builds a distance matrix from raw entries, checking symmetry, zero diagonal and
    /// nonnegativity. Used when the distances come from somewhere other than coordinates.
    pub fn from_matrix(entries: DMatrix<f64>) -> Result<Self> {
        let n = entries.nrows();
        if entries.ncols() != n {
            return Err(Error::SizeMismatch { expected: n, got: entries.ncols() });
        }
        for i in 0..n {
            if entries[(i, i)] != 0.0 {
                return Err(Error::InvalidPoints("nonzero diagonal".into()));
            }
            for j in 0..n {
                let v = entries[(i, j)];
                if !v.is_finite() || v < 0.0 || v != entries[(j, i)] {
                    return Err(Error::InvalidPoints(format!("bad entry at ({i}, {j})")));
                }
            }
        }
        Ok(Self { entries })
    }
}

/// `D_ij = |x_i - x_j|^2`, computed through the Gram matrix and cleaned so the result
/// is exactly symmetric with a zero diagonal and no negative round-off.
pub fn squared_distance_matrix(points: &PointSet) -> DistanceMatrix {
    let x = points.matrix();
    let n = x.nrows();
    let gram = x * x.transpose();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (gram[(i, i)] + gram[(j, j)] - 2.0 * gram[(i, j)]).max(0.0);
            // The Gram route loses precision for nearby points far from the origin.
            let v = if v < 1e-6 * (gram[(i, i)] + gram[(j, j)]) { points.sq_dist(i, j) } else { v };
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    DistanceMatrix { entries: d }
}

/// `m(X)`: the smallest squared distance between two distinct points.
pub fn min_pairwise_sq_distance(points: &PointSet) -> Result<f64> {
    let n = points.n_points();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            best = best.min(points.sq_dist(i, j));
        }
    }
    Ok(best)
}
