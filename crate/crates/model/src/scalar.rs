//! Floating-point element type and strided matrix products.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Element type of parameters and activations.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
{
    const DTYPE: &'static str;
    const BYTES: usize;

    fn of(x: f64) -> Self;

    fn f64(self) -> f64;

    fn put_le(self, out: &mut Vec<u8>);

    /// Reads one value from exactly `BYTES` little-endian bytes.
    fn get_le(bytes: &[u8]) -> Self;

    /// # Safety
    /// Every strided index reached for the given shapes must lie inside the
    /// allocations behind `a`, `b` and `c`.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );
}

impl Real for f32 {
    const DTYPE: &'static str = "f32";
    const BYTES: usize = 4;

    fn of(x: f64) -> Self {
        x as f32
    }

    fn f64(self) -> f64 {
        self as f64
    }

    fn put_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn get_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes.try_into().expect("4 bytes"))
    }

    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::sgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

impl Real for f64 {
    const DTYPE: &'static str = "f64";
    const BYTES: usize = 8;

    fn of(x: f64) -> Self {
        x
    }

    fn f64(self) -> f64 {
        self
    }

    fn put_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn get_le(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes.try_into().expect("8 bytes"))
    }

    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

/// Strided matrix view: element `(i, j)` sits at `offset + i·rs + j·cs`.
#[derive(Debug, Clone, Copy)]
pub struct View {
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
    pub rs: usize,
    pub cs: usize,
}

impl View {
    /// Dense row-major `rows × cols` at the start of the buffer.
    pub fn dense(rows: usize, cols: usize) -> View {
        View {
            offset: 0,
            rows,
            cols,
            rs: cols,
            cs: 1,
        }
    }

    /// `rows × cols` block of a row-major matrix with `ld` columns, starting
    /// at `(row, col)`.
    pub fn block(ld: usize, row: usize, col: usize, rows: usize, cols: usize) -> View {
        View {
            offset: row * ld + col,
            rows,
            cols,
            rs: ld,
            cs: 1,
        }
    }

    pub fn at(mut self, offset: usize) -> View {
        self.offset += offset;
        self
    }

    pub fn t(self) -> View {
        View {
            offset: self.offset,
            rows: self.cols,
            cols: self.rows,
            rs: self.cs,
            cs: self.rs,
        }
    }

    fn last(&self) -> usize {
        self.offset + (self.rows.max(1) - 1) * self.rs + (self.cols.max(1) - 1) * self.cs
    }
}

/// `c ← alpha · a·b + beta · c` over strided views.
///
/// Panics when a view reaches outside its buffer or the shapes disagree.
pub fn gemm<T: Real>(alpha: T, a: &[T], av: View, b: &[T], bv: View, beta: T, c: &mut [T], cv: View) {
    assert_eq!(av.cols, bv.rows, "inner dimensions");
    assert_eq!((av.rows, bv.cols), (cv.rows, cv.cols), "output shape");
    if cv.rows == 0 || cv.cols == 0 {
        return;
    }
    if av.cols == 0 {
        for i in 0..cv.rows {
            for j in 0..cv.cols {
                let x = &mut c[cv.offset + i * cv.rs + j * cv.cs];
                *x = if beta == T::zero() { T::zero() } else { *x * beta };
            }
        }
        return;
    }
    assert!(av.last() < a.len() && bv.last() < b.len() && cv.last() < c.len(), "view out of bounds");
    // SAFETY: the bounds check above covers the farthest element of each view.
    unsafe {
        T::gemm_raw(
            av.rows,
            av.cols,
            bv.cols,
            alpha,
            a.as_ptr().add(av.offset),
            av.rs as isize,
            av.cs as isize,
            b.as_ptr().add(bv.offset),
            bv.rs as isize,
            bv.cs as isize,
            beta,
            c.as_mut_ptr().add(cv.offset),
            cv.rs as isize,
            cv.cs as isize,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
        let mut c = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                for p in 0..k {
                    c[i * n + j] += a[i * k + p] * b[p * n + j];
                }
            }
        }
        c
    }

    #[test]
    fn dense_and_transposed_products() {
        let a: Vec<f64> = (0..6).map(|v| v as f64).collect();
        let b: Vec<f64> = (0..12).map(|v| (v as f64) * 0.5 - 1.0).collect();
        let mut c = vec![0.0; 8];
        gemm(1.0, &a, View::dense(2, 3), &b, View::dense(3, 4), 0.0, &mut c, View::dense(2, 4));
        assert_eq!(c, naive(&a, &b, 2, 3, 4));

        // aᵀ stored as 3×2
        let at: Vec<f64> = vec![0.0, 3.0, 1.0, 4.0, 2.0, 5.0];
        let mut c2 = vec![1.0; 8];
        gemm(1.0, &at, View::dense(3, 2).t(), &b, View::dense(3, 4), 1.0, &mut c2, View::dense(2, 4));
        let expected: Vec<f64> = naive(&a, &b, 2, 3, 4).iter().map(|v| v + 1.0).collect();
        assert_eq!(c2, expected);
    }

    #[test]
    fn blocks_of_wider_matrices() {
        // Columns 2..4 of a 2×5 matrix times a 2×2 identity.
        let a: Vec<f32> = (0..10).map(|v| v as f32).collect();
        let id = [1.0f32, 0.0, 0.0, 1.0];
        let mut c = vec![0.0f32; 4];
        gemm(1.0, &a, View::block(5, 0, 2, 2, 2), &id, View::dense(2, 2), 0.0, &mut c, View::dense(2, 2));
        assert_eq!(c, vec![2.0, 3.0, 7.0, 8.0]);
    }

    #[test]
    fn round_trip_bytes() {
        let mut out = Vec::new();
        1.5f64.put_le(&mut out);
        (-2.25f32).put_le(&mut out);
        assert_eq!(f64::get_le(&out[..8]), 1.5);
        assert_eq!(f32::get_le(&out[8..]), -2.25);
    }
}
