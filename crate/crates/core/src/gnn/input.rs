use ndarray::{Array2, Axis};

/// Layer input: sparse bag-of-words rows for the first layer, dense activations after.
#[derive(Clone, Copy)]
pub enum Input<'a> {
    Sparse { rows: &'a [Vec<(u32, u32)>], dim: usize },
    Dense(&'a Array2<f64>),
}

impl Input<'_> {
    pub fn n_rows(&self) -> usize {
        match self {
            Input::Sparse { rows, .. } => rows.len(),
            Input::Dense(x) => x.nrows(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Input::Sparse { dim, .. } => *dim,
            Input::Dense(x) => x.ncols(),
        }
    }

    /// `X · W`
    pub fn matmul(&self, w: &Array2<f64>) -> Array2<f64> {
        match self {
            Input::Dense(x) => x.dot(w),
            Input::Sparse { rows, .. } => {
                let mut out = Array2::zeros((rows.len(), w.ncols()));
                for (i, row) in rows.iter().enumerate() {
                    let mut o = out.row_mut(i);
                    for &(c, n) in row {
                        o.scaled_add(f64::from(n), &w.row(c as usize));
                    }
                }
                out
            }
        }
    }

    /// `acc += Xᵀ · G`
    pub fn add_transpose_matmul(&self, g: &Array2<f64>, acc: &mut Array2<f64>) {
        match self {
            Input::Dense(x) => *acc += &x.t().dot(g),
            Input::Sparse { rows, .. } => {
                for (i, row) in rows.iter().enumerate() {
                    let gi = g.index_axis(Axis(0), i);
                    for &(c, n) in row {
                        acc.row_mut(c as usize).scaled_add(f64::from(n), &gi);
                    }
                }
            }
        }
    }
}
