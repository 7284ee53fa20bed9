use crate::error::{FcgError, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor2 {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

/// Below this fraction of non-zeros the left operand takes the sparse path.
const SPARSE_DENSITY: f64 = 0.15;

impl Tensor2 {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor2 {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(FcgError::shape(format!(
                "{} values for a {rows}x{cols} tensor",
                data.len()
            )));
        }
        Ok(Tensor2 { rows, cols, data })
    }

    pub fn row_vector(values: &[f64]) -> Self {
        Tensor2 {
            rows: 1,
            cols: values.len(),
            data: values.to_vec(),
        }
    }

    /// Stack equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(FcgError::shape("ragged rows"));
            }
            data.extend_from_slice(r);
        }
        Ok(Tensor2 {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor2 {
        Tensor2 {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Tensor2, f: impl Fn(f64, f64) -> f64) -> Result<Tensor2> {
        self.expect_shape(other.shape(), "elementwise operand")?;
        Ok(Tensor2 {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add_assign(&mut self, other: &Tensor2) -> Result<()> {
        self.expect_shape(other.shape(), "accumulated tensor")?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn expect_shape(&self, shape: (usize, usize), what: &str) -> Result<()> {
        if self.shape() != shape {
            return Err(FcgError::shape(format!(
                "{what}: expected {}x{}, got {}x{}",
                shape.0, shape.1, self.rows, self.cols
            )));
        }
        Ok(())
    }

    /// Add a 1×cols row to every row.
    pub fn add_row(&mut self, bias: &Tensor2) -> Result<()> {
        bias.expect_shape((1, self.cols), "bias")?;
        for r in 0..self.rows {
            for (v, b) in self.row_mut(r).iter_mut().zip(&bias.data) {
                *v += b;
            }
        }
        Ok(())
    }

    /// Column sums as a 1×cols tensor.
    pub fn sum_rows(&self) -> Tensor2 {
        let mut out = Tensor2::zeros(1, self.cols);
        for r in 0..self.rows {
            for (o, v) in out.data.iter_mut().zip(self.row(r)) {
                *o += v;
            }
        }
        out
    }

    /// Columns `start..start+width` as a new tensor.
    pub fn columns(&self, start: usize, width: usize) -> Tensor2 {
        let mut out = Tensor2::zeros(self.rows, width);
        for r in 0..self.rows {
            out.row_mut(r)
                .copy_from_slice(&self.row(r)[start..start + width]);
        }
        out
    }

    fn density(&self) -> f64 {
        if self.data.is_empty() {
            return 1.0;
        }
        self.data.iter().filter(|&&v| v != 0.0).count() as f64 / self.data.len() as f64
    }

    /// self · rhs
    pub fn matmul(&self, rhs: &Tensor2) -> Result<Tensor2> {
        if self.cols != rhs.rows {
            return Err(FcgError::shape(format!(
                "matmul {}x{} · {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Tensor2::zeros(self.rows, rhs.cols);
        if self.density() < SPARSE_DENSITY {
            for r in 0..self.rows {
                let orow = &mut out.data[r * rhs.cols..(r + 1) * rhs.cols];
                for (k, &a) in self.row(r).iter().enumerate() {
                    if a != 0.0 {
                        for (o, &b) in orow.iter_mut().zip(rhs.row(k)) {
                            *o += a * b;
                        }
                    }
                }
            }
            return Ok(out);
        }
        gemm(
            self.rows,
            self.cols,
            rhs.cols,
            &self.data,
            (self.cols as isize, 1),
            &rhs.data,
            (rhs.cols as isize, 1),
            &mut out.data,
        );
        Ok(out)
    }

    /// selfᵀ · rhs
    pub fn t_matmul(&self, rhs: &Tensor2) -> Result<Tensor2> {
        if self.rows != rhs.rows {
            return Err(FcgError::shape(format!(
                "matmul ({}x{})ᵀ · {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Tensor2::zeros(self.cols, rhs.cols);
        if self.density() < SPARSE_DENSITY {
            for r in 0..self.rows {
                let grad_row = rhs.row(r);
                for (k, &a) in self.row(r).iter().enumerate() {
                    if a != 0.0 {
                        let orow = &mut out.data[k * rhs.cols..(k + 1) * rhs.cols];
                        for (o, &b) in orow.iter_mut().zip(grad_row) {
                            *o += a * b;
                        }
                    }
                }
            }
            return Ok(out);
        }
        gemm(
            self.cols,
            self.rows,
            rhs.cols,
            &self.data,
            (1, self.cols as isize),
            &rhs.data,
            (rhs.cols as isize, 1),
            &mut out.data,
        );
        Ok(out)
    }

    /// self · rhsᵀ
    pub fn matmul_t(&self, rhs: &Tensor2) -> Result<Tensor2> {
        if self.cols != rhs.cols {
            return Err(FcgError::shape(format!(
                "matmul {}x{} · ({}x{})ᵀ",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Tensor2::zeros(self.rows, rhs.rows);
        gemm(
            self.rows,
            self.cols,
            rhs.rows,
            &self.data,
            (self.cols as isize, 1),
            &rhs.data,
            (1, rhs.cols as isize),
            &mut out.data,
        );
        Ok(out)
    }
}

#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_strides: (isize, isize),
    b: &[f64],
    b_strides: (isize, isize),
    c: &mut [f64],
) {
    if m == 0 || n == 0 {
        return;
    }
    debug_assert_eq!(c.len(), m * n);
    // SAFETY: the caller sized `a`, `b` and `c` for the given dimensions and
    // strides; the output does not alias either input.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            a_strides.0,
            a_strides.1,
            b.as_ptr(),
            b_strides.0,
            b_strides.1,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}
