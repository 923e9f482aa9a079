//! Length-N vector kernels.
//!
//! Every kernel has a sequential form in [`seq`] and, with the `parallel`
//! feature, a rayon form in [`par`]. The unqualified functions re-exported
//! from the parent module dispatch to the parallel form for vectors long
//! enough to amortize the thread-pool overhead.

/// Below this length the dispatchers always run sequentially.
pub const PAR_MIN_LEN: usize = 1 << 14;

pub mod seq {
    pub fn dot(x: &[f64], y: &[f64]) -> f64 {
        x.iter().zip(y).map(|(a, b)| a * b).sum()
    }

    /// `y += a * x`
    pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi += a * xi;
        }
    }

    pub fn scale(a: f64, x: &mut [f64]) {
        for xi in x.iter_mut() {
            *xi *= a;
        }
    }
}

#[cfg(feature = "parallel")]
pub mod par {
    use rayon::prelude::*;

    pub fn dot(x: &[f64], y: &[f64]) -> f64 {
        x.par_iter().zip(y.par_iter()).map(|(a, b)| a * b).sum()
    }

    pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().zip(x.par_iter()).for_each(|(yi, xi)| *yi += a * xi);
    }

    pub fn scale(a: f64, x: &mut [f64]) {
        x.par_iter_mut().for_each(|xi| *xi *= a);
    }
}

#[inline]
pub(crate) fn use_parallel(len: usize) -> bool {
    cfg!(feature = "parallel") && len >= PAR_MIN_LEN
}

macro_rules! dispatch {
    ($len:expr, $name:ident ( $($arg:expr),* )) => {{
        #[cfg(feature = "parallel")]
        {
            if use_parallel($len) {
                par::$name($($arg),*)
            } else {
                seq::$name($($arg),*)
            }
        }
        #[cfg(not(feature = "parallel"))]
        {
            seq::$name($($arg),*)
        }
    }};
}

pub(crate) use dispatch;
