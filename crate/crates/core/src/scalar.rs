//! Scalar abstraction shared by the dense linear algebra, the waveform
//! builder and the neural fine detector.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + FromStr
    + Send
    + Sync
    + 'static
{
    /// Literal conversion; every constant used in this crate is representable.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    /// `c <- alpha * a·b + beta * c` for an `m×k` by `k×n` product with
    /// arbitrary row/column strides (in elements).
    #[allow(clippy::too_many_arguments)]
    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: &[Self],
        a_strides: (isize, isize),
        b: &[Self],
        b_strides: (isize, isize),
        beta: Self,
        c: &mut [Self],
        c_strides: (isize, isize),
    );
}

fn extent(rows: usize, cols: usize, (rs, cs): (isize, isize)) -> usize {
    if rows == 0 || cols == 0 {
        return 0;
    }
    assert!(rs >= 0 && cs >= 0, "negative strides are not used");
    (rows - 1) * rs as usize + (cols - 1) * cs as usize + 1
}

macro_rules! impl_real {
    ($t:ty, $kernel:ident) => {
        impl Real for $t {
            fn gemm(
                m: usize,
                k: usize,
                n: usize,
                alpha: Self,
                a: &[Self],
                a_strides: (isize, isize),
                b: &[Self],
                b_strides: (isize, isize),
                beta: Self,
                c: &mut [Self],
                c_strides: (isize, isize),
            ) {
                assert!(extent(m, k, a_strides) <= a.len(), "gemm: lhs out of bounds");
                assert!(extent(k, n, b_strides) <= b.len(), "gemm: rhs out of bounds");
                assert!(extent(m, n, c_strides) <= c.len(), "gemm: output out of bounds");
                if m == 0 || n == 0 {
                    return;
                }
                // SAFETY: the three extents were bounds-checked above and the
                // output slice is uniquely borrowed.
                unsafe {
                    matrixmultiply::$kernel(
                        m,
                        k,
                        n,
                        alpha,
                        a.as_ptr(),
                        a_strides.0,
                        a_strides.1,
                        b.as_ptr(),
                        b_strides.0,
                        b_strides.1,
                        beta,
                        c.as_mut_ptr(),
                        c_strides.0,
                        c_strides.1,
                    );
                }
            }
        }
    };
}

impl_real!(f32, sgemm);
impl_real!(f64, dgemm);
