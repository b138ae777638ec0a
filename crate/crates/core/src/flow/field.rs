use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use super::Result;
use crate::network::{MlpVectorField, Tape};
use crate::transport::KrTransport;

/// A time-dependent vector field `v(x, t)` on `[0,1]^d`.
pub trait VectorField: Sync {
    /// Per-thread evaluation buffers.
    type Scratch: Send;

    fn dim(&self) -> usize;

    fn scratch(&self) -> Self::Scratch;

    fn eval(&self, x: &[f64], t: f64, out: &mut [f64], scratch: &mut Self::Scratch) -> Result<()>;

    /// Evaluates into `out` and returns `div_x v(x, t)`. The default uses
    /// central differences with step `1e-6`, one-sided at the faces.
    fn eval_div(&self, x: &[f64], t: f64, out: &mut [f64], scratch: &mut Self::Scratch) -> Result<f64> {
        self.eval(x, t, out, scratch)?;
        let d = self.dim();
        let h = 1e-6;
        let mut probe = x.to_vec();
        let mut buf = vec![0.0; d];
        let mut div = 0.0;
        for i in 0..d {
            let hi = (x[i] + h).min(1.0);
            let lo = (x[i] - h).max(0.0);
            probe[i] = hi;
            self.eval(&probe, t, &mut buf, scratch)?;
            let up = buf[i];
            probe[i] = lo;
            self.eval(&probe, t, &mut buf, scratch)?;
            div += (up - buf[i]) / (hi - lo);
            probe[i] = x[i];
        }
        Ok(div)
    }
}

impl<T: VectorField + ?Sized> VectorField for &T {
    type Scratch = T::Scratch;

    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn scratch(&self) -> Self::Scratch {
        (**self).scratch()
    }

    fn eval(&self, x: &[f64], t: f64, out: &mut [f64], scratch: &mut Self::Scratch) -> Result<()> {
        (**self).eval(x, t, out, scratch)
    }

    fn eval_div(&self, x: &[f64], t: f64, out: &mut [f64], scratch: &mut Self::Scratch) -> Result<f64> {
        (**self).eval_div(x, t, out, scratch)
    }
}

impl VectorField for MlpVectorField {
    type Scratch = Tape;

    fn dim(&self) -> usize {
        MlpVectorField::dim(self)
    }

    fn scratch(&self) -> Tape {
        self.tape()
    }

    fn eval(&self, x: &[f64], t: f64, out: &mut [f64], tape: &mut Tape) -> Result<()> {
        Ok(self.eval_into(x, t, out, tape)?)
    }

    fn eval_div(&self, x: &[f64], t: f64, out: &mut [f64], tape: &mut Tape) -> Result<f64> {
        Ok(self.eval_div_into(x, t, out, tape)?)
    }
}

/// The displacement-interpolation field `u_s(y) = T(G(y,s)) - G(y,s)`;
/// points are clamped into the cube before evaluation.
impl VectorField for KrTransport {
    type Scratch = Vec<f64>;

    fn dim(&self) -> usize {
        KrTransport::dim(self)
    }

    fn scratch(&self) -> Vec<f64> {
        vec![0.0; KrTransport::dim(self)]
    }

    fn eval(&self, x: &[f64], t: f64, out: &mut [f64], clamped: &mut Vec<f64>) -> Result<()> {
        for (c, &v) in clamped.iter_mut().zip(x) {
            *c = v.clamp(0.0, 1.0);
        }
        let u = self.target_field(clamped, t.clamp(0.0, 1.0))?;
        out.copy_from_slice(&u);
        Ok(())
    }
}

/// `v ≡ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZeroField {
    dim: usize,
}

impl ZeroField {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl VectorField for ZeroField {
    type Scratch = ();

    fn dim(&self) -> usize {
        self.dim
    }

    fn scratch(&self) {}

    fn eval(&self, _x: &[f64], _t: f64, out: &mut [f64], _: &mut ()) -> Result<()> {
        out.iter_mut().for_each(|v| *v = 0.0);
        Ok(())
    }

    fn eval_div(&self, x: &[f64], t: f64, out: &mut [f64], s: &mut ()) -> Result<f64> {
        self.eval(x, t, out, s)?;
        Ok(0.0)
    }
}

type FieldFn = dyn Fn(&[f64], f64, &mut [f64]) + Send + Sync;

/// A field given by a closure; the divergence falls back to differences.
#[derive(Clone)]
pub struct FnField {
    dim: usize,
    f: Arc<FieldFn>,
}

impl FnField {
    pub fn new<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&[f64], f64, &mut [f64]) + Send + Sync + 'static,
    {
        Self { dim, f: Arc::new(f) }
    }
}

impl fmt::Debug for FnField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnField").field("dim", &self.dim).finish_non_exhaustive()
    }
}

impl VectorField for FnField {
    type Scratch = ();

    fn dim(&self) -> usize {
        self.dim
    }

    fn scratch(&self) {}

    fn eval(&self, x: &[f64], t: f64, out: &mut [f64], _: &mut ()) -> Result<()> {
        (self.f)(x, t, out);
        Ok(())
    }
}
