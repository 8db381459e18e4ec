//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All physics is written against [`Real`], implemented for `f32` and `f64`.
//! Amplitudes and matrix entries are `Complex<T>`. Dense Hermitian
//! eigenproblems dispatch to LAPACK `?heevr` for the matching precision.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::os::raw::{c_char, c_int};

use lapack_sys::__BindgenComplex;
use ndarray::ScalarOperand;
use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point type usable by the solvers.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Sum
    + ScalarOperand
    + 'static
{
    /// Eigenvalues (ascending, written to `w`) and orthonormal eigenvectors
    /// (column-major, written to `z`) of the `n x n` Hermitian matrix stored
    /// column-major in `a`. Only the lower triangle of `a` is read; `a` is
    /// overwritten. Returns the LAPACK `info` code on failure.
    fn hermitian_eigen(n: usize, a: &mut [Complex<Self>], w: &mut [Self], z: &mut [Complex<Self>]) -> Result<(), i32>;
}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in target precision")
}

#[inline]
pub(crate) fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

macro_rules! impl_real {
    ($t:ty, $heevr:path) => {
        impl Real for $t {
            fn hermitian_eigen(
                n: usize,
                a: &mut [Complex<$t>],
                w: &mut [$t],
                z: &mut [Complex<$t>],
            ) -> Result<(), i32> {
                assert_eq!(a.len(), n * n);
                assert_eq!(w.len(), n);
                assert_eq!(z.len(), n * n);
                if n == 0 {
                    return Ok(());
                }
                let jobz = b'V' as c_char;
                let range = b'A' as c_char;
                let uplo = b'L' as c_char;
                let nn = n as c_int;
                let (vl, vu): ($t, $t) = (0.0, 0.0);
                let (il, iu): (c_int, c_int) = (0, 0);
                let abstol: $t = 0.0;
                let mut m: c_int = 0;
                let mut isuppz = vec![0 as c_int; 2 * n];
                let mut info: c_int = 0;

                // Complex<T> is #[repr(C)] { re, im }, layout-identical to the
                // bindgen complex type.
                let a_ptr = a.as_mut_ptr() as *mut __BindgenComplex<$t>;
                let z_ptr = z.as_mut_ptr() as *mut __BindgenComplex<$t>;

                let mut work_q = [__BindgenComplex::<$t> { re: 0.0, im: 0.0 }];
                let mut rwork_q: [$t; 1] = [0.0];
                let mut iwork_q: [c_int; 1] = [0];
                let query: c_int = -1;
                unsafe {
                    $heevr(
                        &jobz,
                        &range,
                        &uplo,
                        &nn,
                        a_ptr,
                        &nn,
                        &vl,
                        &vu,
                        &il,
                        &iu,
                        &abstol,
                        &mut m,
                        w.as_mut_ptr(),
                        z_ptr,
                        &nn,
                        isuppz.as_mut_ptr(),
                        work_q.as_mut_ptr(),
                        &query,
                        rwork_q.as_mut_ptr(),
                        &query,
                        iwork_q.as_mut_ptr(),
                        &query,
                        &mut info,
                    );
                }
                if info != 0 {
                    return Err(info);
                }
                let lwork = (work_q[0].re as usize).max(2 * n);
                let lrwork = (rwork_q[0] as usize).max(24 * n);
                let liwork = (iwork_q[0] as usize).max(10 * n);
                let mut work = vec![__BindgenComplex::<$t> { re: 0.0, im: 0.0 }; lwork];
                let mut rwork: Vec<$t> = vec![0.0; lrwork];
                let mut iwork: Vec<c_int> = vec![0; liwork];
                let (lw, lrw, liw) = (lwork as c_int, lrwork as c_int, liwork as c_int);
                unsafe {
                    $heevr(
                        &jobz,
                        &range,
                        &uplo,
                        &nn,
                        a_ptr,
                        &nn,
                        &vl,
                        &vu,
                        &il,
                        &iu,
                        &abstol,
                        &mut m,
                        w.as_mut_ptr(),
                        z_ptr,
                        &nn,
                        isuppz.as_mut_ptr(),
                        work.as_mut_ptr(),
                        &lw,
                        rwork.as_mut_ptr(),
                        &lrw,
                        iwork.as_mut_ptr(),
                        &liw,
                        &mut info,
                    );
                }
                if info != 0 {
                    return Err(info);
                }
                if m != nn {
                    return Err(-1000 - m);
                }
                Ok(())
            }
        }
    };
}

impl_real!(f32, lapack_sys::cheevr_);
impl_real!(f64, lapack_sys::zheevr_);

#[cfg(test)]
mod tests {
    use super::*;

    fn check_2x2<T: Real>() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3.
        let i = Complex::new(T::zero(), T::one());
        let two = Complex::new(lit::<T>(2.0), T::zero());
        // column-major
        let mut a = vec![two, -i, i, two];
        let mut w = vec![T::zero(); 2];
        let mut z = vec![Complex::new(T::zero(), T::zero()); 4];
        T::hermitian_eigen(2, &mut a, &mut w, &mut z).unwrap();
        let tol = lit::<T>(1e3) * T::epsilon();
        assert!((w[0] - T::one()).abs() < tol);
        assert!((w[1] - lit::<T>(3.0)).abs() < tol);
    }

    #[test]
    fn heevr_both_precisions() {
        check_2x2::<f32>();
        check_2x2::<f64>();
    }
}
