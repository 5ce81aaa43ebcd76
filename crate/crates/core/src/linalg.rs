//! Dense column-major matrices and the Householder QR used by IRLS.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative size of `|R_jj|` against the norm of column `j` below which the
/// column is treated as dependent on its predecessors.
const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    /// Builds a matrix from equal-length columns.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let nrows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != nrows) {
            return Err(Error::InvalidSpec("columns have different lengths".into()));
        }
        Ok(Self {
            nrows,
            ncols: columns.len(),
            data: columns.concat(),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::InvalidSpec("rows have different lengths".into()));
        }
        let mut m = Self::zeros(rows.len(), ncols);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.nrows + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.nrows + i] = v;
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.ncols).map(|j| self.get(i, j)).collect()
    }

    /// `self · v`
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.ncols);
        let mut out = vec![0.0; self.nrows];
        for (j, &vj) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.column(j)) {
                *o += a * vj;
            }
        }
        out
    }

    /// Column-major view of the entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Householder factorization `A = QR` of a tall matrix with full column rank.
#[derive(Debug, Clone)]
pub struct Qr {
    n: usize,
    k: usize,
    /// Reflector `j` acts on rows `j..n`; `reflectors[j][0]` corresponds to row `j`.
    reflectors: Vec<Vec<f64>>,
    /// Upper triangle of R, column-major k×k.
    r: Vec<f64>,
}

impl Qr {
    /// Factorizes `diag(row_scale) · a`.
    pub fn new_scaled(a: &Matrix, row_scale: &[f64]) -> Result<Self> {
        let (n, k) = (a.nrows(), a.ncols());
        assert_eq!(row_scale.len(), n);
        if k == 0 || n < k {
            return Err(Error::InsufficientData {
                needed: k.max(1),
                got: n,
            });
        }
        let mut work: Vec<f64> = Vec::with_capacity(n * k);
        for j in 0..k {
            work.extend(a.column(j).iter().zip(row_scale).map(|(x, s)| x * s));
        }
        let col_norms: Vec<f64> = (0..k).map(|j| norm(&work[j * n..(j + 1) * n])).collect();

        let mut reflectors = Vec::with_capacity(k);
        let mut r = vec![0.0; k * k];
        for j in 0..k {
            let x = &work[j * n + j..(j + 1) * n];
            let xnorm = norm(x);
            let alpha = if x[0] > 0.0 { -xnorm } else { xnorm };
            let mut v = x.to_vec();
            v[0] -= alpha;
            let vnorm2: f64 = v.iter().map(|t| t * t).sum();
            if !(alpha.abs() > RANK_TOL * col_norms[j]) || col_norms[j] == 0.0 {
                let collinear_with =
                    dependent_partner(&r, k, j, &work[j * n..j * n + j], &col_norms);
                return Err(Error::SingularDesign {
                    column: j,
                    collinear_with,
                });
            }
            if vnorm2 > 0.0 {
                let scale = (2.0 / vnorm2).sqrt();
                v.iter_mut().for_each(|t| *t *= scale);
            }
            // Apply to the remaining columns; the current one becomes alpha·e₁.
            for c in j + 1..k {
                let col = &mut work[c * n + j..(c + 1) * n];
                let d: f64 = v.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
                col.iter_mut().zip(&v).for_each(|(t, vi)| *t -= d * vi);
            }
            for i in 0..j {
                r[j * k + i] = work[j * n + i];
            }
            r[j * k + j] = alpha;
            reflectors.push(v);
        }
        Ok(Self {
            n,
            k,
            reflectors,
            r,
        })
    }

    pub fn new(a: &Matrix) -> Result<Self> {
        Self::new_scaled(a, &vec![1.0; a.nrows()])
    }

    /// `Qᵀ b`, in place.
    fn apply_qt(&self, b: &mut [f64]) {
        for (j, v) in self.reflectors.iter().enumerate() {
            let seg = &mut b[j..];
            let d: f64 = v.iter().zip(seg.iter()).map(|(a, c)| a * c).sum();
            seg.iter_mut().zip(v).for_each(|(t, vi)| *t -= d * vi);
        }
    }

    /// `Q b`, in place.
    fn apply_q(&self, b: &mut [f64]) {
        for (j, v) in self.reflectors.iter().enumerate().rev() {
            let seg = &mut b[j..];
            let d: f64 = v.iter().zip(seg.iter()).map(|(a, c)| a * c).sum();
            seg.iter_mut().zip(v).for_each(|(t, vi)| *t -= d * vi);
        }
    }

    /// Least-squares solution of `A x ≈ b` for the factorized `A`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut qtb = b.to_vec();
        self.apply_qt(&mut qtb);
        back_substitute(&self.r, self.k, &qtb[..self.k])
    }

    /// Diagonal of the projection `A (AᵀA)⁻¹ Aᵀ`, i.e. squared row norms of the thin Q.
    pub fn hat_diagonal(&self) -> Vec<f64> {
        let mut h = vec![0.0; self.n];
        let mut e = vec![0.0; self.n];
        for j in 0..self.k {
            e.iter_mut().for_each(|t| *t = 0.0);
            e[j] = 1.0;
            self.apply_q(&mut e);
            h.iter_mut().zip(&e).for_each(|(hi, qi)| *hi += qi * qi);
        }
        h
    }

    /// Diagonal entries of R.
    pub fn r_diagonal(&self) -> Vec<f64> {
        (0..self.k).map(|j| self.r[j * self.k + j]).collect()
    }

    /// `(AᵀA)⁻¹ = R⁻¹R⁻ᵀ`, row-major k×k.
    pub fn inverse_gram(&self) -> Vec<Vec<f64>> {
        let k = self.k;
        // Columns of R⁻¹.
        let rinv: Vec<Vec<f64>> = (0..k)
            .map(|j| {
                let mut e = vec![0.0; k];
                e[j] = 1.0;
                back_substitute(&self.r, k, &e)
            })
            .collect();
        (0..k)
            .map(|a| {
                (0..k)
                    .map(|b| (0..k).map(|m| rinv[m][a] * rinv[m][b]).sum())
                    .collect()
            })
            .collect()
    }
}

fn norm(x: &[f64]) -> f64 {
    let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * x.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt()
}

fn back_substitute(r: &[f64], k: usize, rhs: &[f64]) -> Vec<f64> {
    let mut x = rhs.to_vec();
    for i in (0..k).rev() {
        let mut s = x[i];
        for c in i + 1..k {
            s -= r[c * k + i] * x[c];
        }
        x[i] = s / r[i * k + i];
    }
    x
}

/// The earlier column contributing most to column `j`, given `above = (Qᵀa_j)[..j]`.
fn dependent_partner(r: &[f64], k: usize, j: usize, above: &[f64], col_norms: &[f64]) -> usize {
    if j == 0 {
        return 0;
    }
    let mut lead = vec![0.0; j * j];
    for c in 0..j {
        for i in 0..=c {
            lead[c * j + i] = r[c * k + i];
        }
    }
    let coef = back_substitute(&lead, j, above);
    (0..j)
        .max_by(|&a, &b| {
            (coef[a] * col_norms[a])
                .abs()
                .total_cmp(&(coef[b] * col_norms[b]).abs())
        })
        .unwrap_or(0)
}
