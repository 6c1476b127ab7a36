//! Euclidean projections used by the splitting solver.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Symmetric eigendecomposition with a bounded iteration count.
pub fn symmetric_eigen(m: DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let n = m.nrows();
    SymmetricEigen::try_new(m, f64::EPSILON, 1000 * n.max(1)).ok_or(Error::Eigen(n))
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
    let sym = (m + m.transpose()) * 0.5;
    Ok(symmetric_eigen(sym)?.eigenvalues.min())
}

/// Nearest positive semidefinite matrix in Frobenius norm, by clipping the negative
/// eigenvalues of the symmetric part of `m` to zero.
pub fn psd_project(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidParameter(format!(
            "psd_project needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = symmetric_eigen(sym.clone())?;
    let negatives: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&i| eig.eigenvalues[i] < 0.0).collect();
    let positives: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&i| eig.eigenvalues[i] > 0.0).collect();
    // Whichever spectral part is smaller gets reconstructed.
    if negatives.len() <= positives.len() {
        Ok(sym - outer_part(&eig, &negatives))
    } else {
        let mut out = outer_part(&eig, &positives);
        out = (&out + out.transpose()) * 0.5;
        Ok(out)
    }
}

fn outer_part(eig: &SymmetricEigen<f64, nalgebra::Dyn>, idx: &[usize]) -> DMatrix<f64> {
    let n = eig.eigenvectors.nrows();
    if idx.is_empty() {
        return DMatrix::zeros(n, n);
    }
    let v = eig.eigenvectors.select_columns(idx);
    let mut scaled = v.clone();
    for (c, &i) in idx.iter().enumerate() {
        scaled.column_mut(c).scale_mut(eig.eigenvalues[i]);
    }
    scaled * v.transpose()
}

/// Projects every row of `m` onto `{0 <= m_pq <= m_pp for q != p}` in place.
pub fn dominance_project(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    let mut off: Vec<f64> = Vec::with_capacity(n);
    for p in 0..n {
        off.clear();
        off.extend((0..n).filter(|&q| q != p).map(|q| m[(p, q)]).filter(|&v| v > 0.0));
        off.sort_unstable_by(|a, b| b.total_cmp(a));
        let a0 = m[(p, p)];
        // The optimal diagonal solves (a - a0) + sum_{b_q > a} (a - b_q) = 0.
        let mut sum = a0;
        let mut a = a0;
        for j in 0..=off.len() {
            a = sum / (j + 1) as f64;
            let below_next = j == off.len() || a >= off[j];
            if below_next {
                break;
            }
            sum += off[j];
        }
        let a = a.max(0.0);
        for q in 0..n {
            if q == p {
                m[(p, q)] = a;
            } else {
                m[(p, q)] = m[(p, q)].clamp(0.0, a);
            }
        }
    }
}

/// Weighted projection onto `{Tr Z = k, sym(Z) 1 + y = 1}` with `Z` kept symmetric:
/// minimises `|Z - Z0|^2 + ratio |y - y0|^2`. Without `y` the constraint is `sym(Z) 1 = 1`.
///
/// `z0` must be symmetric.
pub fn affine_project_symmetric(z: &mut DMatrix<f64>, y: Option<&mut DVector<f64>>, k: f64, ratio: f64) {
    let n = z.nrows();
    let nf = n as f64;
    let b = if y.is_some() { 1.0 / ratio } else { 0.0 };
    let mut r = DVector::from_element(n, 1.0) - row_sums(z);
    if let Some(y) = y.as_deref() {
        r -= y;
    }
    let big_r = r.sum();
    let t = k - z.trace();
    let c = 0.5 * nf + b;
    let s = (big_r - t) / (nf - 1.0 + b);
    let mu = (t - s) / nf;
    let nu = r.map(|rj| (rj - mu - 0.5 * s) / c);
    for j in 0..n {
        for i in 0..n {
            z[(i, j)] += 0.5 * (nu[i] + nu[j]);
        }
        z[(j, j)] += mu;
    }
    if let Some(y) = y {
        y.axpy(b, &nu, 1.0);
    }
}

/// Weighted projection onto `{Tr Z = k, Z 1 + y = 1}` for a general square `Z`.
pub fn affine_project_rows(z: &mut DMatrix<f64>, y: Option<&mut DVector<f64>>, k: f64, ratio: f64) {
    let n = z.nrows();
    let nf = n as f64;
    let b = if y.is_some() { 1.0 / ratio } else { 0.0 };
    let mut r = DVector::from_element(n, 1.0) - row_sums(z);
    if let Some(y) = y.as_deref() {
        r -= y;
    }
    let big_r = r.sum();
    let t = k - z.trace();
    let c = nf + b;
    let s = (big_r - t) / (nf - 1.0 + b);
    let mu = (t - s) / nf;
    let nu = r.map(|rj| (rj - mu) / c);
    for j in 0..n {
        for i in 0..n {
            z[(i, j)] += nu[i];
        }
        z[(j, j)] += mu;
    }
    if let Some(y) = y {
        y.axpy(b, &nu, 1.0);
    }
}

pub(crate) fn row_sums(z: &DMatrix<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(z.nrows());
    for j in 0..z.ncols() {
        out += z.column(j);
    }
    out
}
