//! Approximate total variation on a column-major `rows × cols` image.
//!
//! With `∇ᵢF` the vertical and `∇ⱼF` the horizontal backward difference
//! (zero on the first row/column), the Wirtinger gradient of
//! `Σ √(|∇ᵢF|² + |∇ⱼF|² + β)` is `W(f) f` with
//!
//! ```text
//! W(f) = W′D′ + W′D″ + W″D‴ + W‴D⁗
//! ```
//!
//! where `D′f = ∇ᵢF`, `D″f = ∇ⱼF`, `D‴f = −(∇ⱼF)_{i,j+1}`,
//! `D⁗f = −(∇ᵢF)_{i+1,j}`, and the diagonals hold `1 / (2√(·))` evaluated at
//! `(i, j)`, `(i, j+1)` and `(i+1, j)` respectively. Rows of `D‴`/`D⁗` that
//! would reach past the last column/row are zero; the matching `S″`/`S‴`
//! entries are set to `1/(2√β)` (all differences zero) so every diagonal
//! stays strictly positive.

use alloc::vec;
use alloc::vec::Vec;

use super::{Penalty, RegularizerSpec};
use crate::error::{Error, Result};
use crate::forward_model::ComplexImage;
use crate::math;
use crate::Complex;

/// Backward differences `(∇ᵢF, ∇ⱼF)` in column-major order, zero on the
/// first row / first column respectively.
pub fn tv_gradients(f: &ComplexImage) -> (Vec<Complex>, Vec<Complex>) {
    let (rows, cols) = f.shape();
    let v = f.as_slice();
    let zero = Complex::new(0.0, 0.0);
    let mut dv = vec![zero; v.len()];
    let mut dh = vec![zero; v.len()];
    for j in 0..cols {
        for i in 0..rows {
            let k = j * rows + i;
            if i > 0 {
                dv[k] = v[k] - v[k - 1];
            }
            if j > 0 {
                dh[k] = v[k] - v[k - rows];
            }
        }
    }
    (dv, dh)
}

/// Sparse matrix with entries in `{−1, 0, 1}`, stored by rows.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceMatrix {
    dim: usize,
    rows: Vec<Vec<(usize, i8)>>,
}

impl DifferenceMatrix {
    fn build(rows: usize, cols: usize, neighbour: impl Fn(usize, usize) -> Option<(usize, usize, i8)>) -> Self {
        let dim = rows * cols;
        let mut out = vec![Vec::new(); dim];
        for j in 0..cols {
            for i in 0..rows {
                if let Some((ni, nj, sign)) = neighbour(i, j) {
                    let k = j * rows + i;
                    out[k].push((k, sign));
                    out[k].push((nj * rows + ni, -sign));
                }
            }
        }
        Self { dim, rows: out }
    }

    /// `D′`: `(D′f)_{i,j} = F_{i,j} − F_{i−1,j}`.
    pub fn vertical(rows: usize, cols: usize) -> Self {
        Self::build(rows, cols, |i, j| (i > 0).then(|| (i - 1, j, 1)))
    }

    /// `D″`: `(D″f)_{i,j} = F_{i,j} − F_{i,j−1}`.
    pub fn horizontal(rows: usize, cols: usize) -> Self {
        Self::build(rows, cols, |i, j| (j > 0).then(|| (i, j - 1, 1)))
    }

    /// `D‴`: `(D‴f)_{i,j} = −(F_{i,j+1} − F_{i,j})`.
    pub fn negated_next_horizontal(rows: usize, cols: usize) -> Self {
        Self::build(rows, cols, |i, j| (j + 1 < cols).then(|| (i, j + 1, 1)))
    }

    /// `D⁗`: `(D⁗f)_{i,j} = −(F_{i+1,j} − F_{i,j})`.
    pub fn negated_next_vertical(rows: usize, cols: usize) -> Self {
        Self::build(rows, cols, |i, j| (i + 1 < rows).then(|| (i + 1, j, 1)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Non-zero entries `(column, value)` of row `r`.
    pub fn row(&self, r: usize) -> &[(usize, i8)] {
        &self.rows[r]
    }

    pub fn apply(&self, v: &[Complex]) -> Vec<Complex> {
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .fold(Complex::new(0.0, 0.0), |acc, &(c, s)| acc + v[c] * f64::from(s))
            })
            .collect()
    }

    /// Dense row-major copy, for inspection and tests.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim * self.dim];
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, s) in row {
                out[r * self.dim + c] += f64::from(s);
            }
        }
        out
    }
}

/// Total-variation weight operator `W(f)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TvWeightOperator {
    rows: usize,
    cols: usize,
    s1: Vec<f64>,
    s2: Vec<f64>,
    s3: Vec<f64>,
    d1: DifferenceMatrix,
    d2: DifferenceMatrix,
    d3: DifferenceMatrix,
    d4: DifferenceMatrix,
}

impl TvWeightOperator {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// `vec(S′)`
    pub fn s_prime(&self) -> &[f64] {
        &self.s1
    }

    /// `vec(S″)`
    pub fn s_double_prime(&self) -> &[f64] {
        &self.s2
    }

    /// `vec(S‴)`
    pub fn s_triple_prime(&self) -> &[f64] {
        &self.s3
    }

    /// `[D′, D″, D‴, D⁗]`
    pub fn differences(&self) -> [&DifferenceMatrix; 4] {
        [&self.d1, &self.d2, &self.d3, &self.d4]
    }

    pub fn apply_into(&self, v: &[Complex], out: &mut [Complex]) {
        let a = self.d1.apply(v);
        let b = self.d2.apply(v);
        let c = self.d3.apply(v);
        let d = self.d4.apply(v);
        for k in 0..out.len() {
            out[k] = (a[k] + b[k]) * self.s1[k] + c[k] * self.s2[k] + d[k] * self.s3[k];
        }
    }

    /// Dense row-major `N × N` assembly of `W(f)`.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n * n];
        let parts: [(&DifferenceMatrix, &[f64]); 4] = [
            (&self.d1, &self.s1),
            (&self.d2, &self.s1),
            (&self.d3, &self.s2),
            (&self.d4, &self.s3),
        ];
        for (d, s) in parts {
            for r in 0..n {
                for &(c, sign) in d.row(r) {
                    out[r * n + c] += s[r] * f64::from(sign);
                }
            }
        }
        out
    }
}

/// Assemble `W(f)` for an approximate-TV spec.
pub fn tv_weight_operator(spec: &RegularizerSpec, f: &ComplexImage) -> Result<TvWeightOperator> {
    spec.validate()?;
    let beta = match spec.penalty {
        Penalty::ApproxTv { beta } => beta,
        other => {
            return Err(Error::Unsupported {
                operation: "tv_weight_operator",
                penalty: other.name(),
            })
        }
    };
    let (rows, cols) = f.shape();
    let (dv, dh) = tv_gradients(f);
    let half_inv: Vec<f64> = dv
        .iter()
        .zip(&dh)
        .map(|(a, c)| 0.5 / math::sqrt(a.norm_sqr() + c.norm_sqr() + beta))
        .collect();
    let flat = 0.5 / math::sqrt(beta);
    let mut s2 = vec![flat; rows * cols];
    let mut s3 = vec![flat; rows * cols];
    for j in 0..cols {
        for i in 0..rows {
            let k = j * rows + i;
            if j + 1 < cols {
                s2[k] = half_inv[k + rows];
            }
            if i + 1 < rows {
                s3[k] = half_inv[k + 1];
            }
        }
    }
    Ok(TvWeightOperator {
        rows,
        cols,
        s1: half_inv,
        s2,
        s3,
        d1: DifferenceMatrix::vertical(rows, cols),
        d2: DifferenceMatrix::horizontal(rows, cols),
        d3: DifferenceMatrix::negated_next_horizontal(rows, cols),
        d4: DifferenceMatrix::negated_next_vertical(rows, cols),
    })
}
