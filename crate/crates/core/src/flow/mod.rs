//! Fixed-step RK4 flow maps of vector fields on `[0,1]^d`, their inverses
//! and the log-density of the pushforward by the instantaneous change of
//! variables.

mod adjoint;
mod field;

pub use adjoint::{log_density_gradient, AdjointWorkspace};
pub use field::{FnField, VectorField, ZeroField};

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::math::ln;
use crate::network::NetworkError;
use crate::transport::{Density, TransportError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite state at step {step}")]
    IntegrationFailure { step: usize },
    #[error("source density vanishes at the preimage {point:?}")]
    Domain { point: Vec<f64> },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Transport(#[from] TransportError),
}

pub type Result<T> = core::result::Result<T, FlowError>;

pub const DEFAULT_STEPS: usize = 64;

/// Endpoint of an integration together with the largest distance by which
/// any step state left the cube before clamping.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowOutcome {
    pub point: Vec<f64>,
    pub excursion: f64,
}

/// `Φ_t` of a field `v`, integrated with `steps` uniform RK4 steps.
#[derive(Debug, Clone)]
pub struct FlowMap<F> {
    field: F,
    steps: usize,
}

#[derive(Clone, Copy)]
enum Direction {
    Forward,
    Backward,
}

struct Stages {
    k: [Vec<f64>; 4],
    probe: Vec<f64>,
}

impl Stages {
    fn new(d: usize) -> Self {
        Self { k: [vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]], probe: vec![0.0; d] }
    }
}

pub(crate) fn excursion(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, &v| m.max(-v).max(v - 1.0))
}

impl<F: VectorField> FlowMap<F> {
    pub fn new(field: F, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(FlowError::InvalidArgument("RK4 needs at least one step".into()));
        }
        Ok(Self { field, steps })
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    fn check(&self, x: &[f64], t_end: f64) -> Result<()> {
        if x.len() != self.dim() {
            return Err(FlowError::InvalidArgument(alloc::format!(
                "point of dimension {}, field of dimension {}",
                x.len(),
                self.dim()
            )));
        }
        if !(0.0..=1.0).contains(&t_end) {
            return Err(FlowError::InvalidArgument(alloc::format!("end time {t_end} outside [0, 1]")));
        }
        Ok(())
    }

    /// Right-hand side in the integration variable `τ`, with the optional
    /// divergence channel.
    fn rhs(
        &self,
        dir: Direction,
        t_end: f64,
        z: &[f64],
        tau: f64,
        out: &mut [f64],
        with_div: bool,
        scratch: &mut F::Scratch,
    ) -> Result<f64> {
        let (t, sign) = match dir {
            Direction::Forward => (tau, 1.0),
            Direction::Backward => (t_end - tau, -1.0),
        };
        let div = if with_div {
            self.field.eval_div(z, t, out, scratch)?
        } else {
            self.field.eval(z, t, out, scratch)?;
            0.0
        };
        if sign < 0.0 {
            out.iter_mut().for_each(|v| *v = -*v);
        }
        Ok(sign * div)
    }

    fn integrate(&self, x: &[f64], t_end: f64, dir: Direction, with_div: bool) -> Result<(FlowOutcome, f64)> {
        self.check(x, t_end)?;
        let d = self.dim();
        let mut scratch = self.field.scratch();
        let mut st = Stages::new(d);
        let mut z = x.to_vec();
        let mut ell = 0.0;
        let mut worst = 0.0f64;
        let h = t_end / self.steps as f64;
        if h == 0.0 {
            return Ok((FlowOutcome { point: z, excursion: 0.0 }, 0.0));
        }
        for n in 0..self.steps {
            let tau = n as f64 * h;
            let mut dl = [0.0; 4];
            let offsets = [0.0, 0.5 * h, 0.5 * h, h];
            for s in 0..4 {
                let (done, rest) = st.k.split_at_mut(s);
                if s == 0 {
                    st.probe.copy_from_slice(&z);
                } else {
                    let prev = &done[s - 1];
                    for i in 0..d {
                        st.probe[i] = z[i] + offsets[s] * prev[i];
                    }
                }
                dl[s] = self.rhs(dir, t_end, &st.probe, tau + offsets[s], &mut rest[0], with_div, &mut scratch)?;
            }
            for i in 0..d {
                z[i] += h / 6.0 * (st.k[0][i] + 2.0 * st.k[1][i] + 2.0 * st.k[2][i] + st.k[3][i]);
            }
            ell += h / 6.0 * (dl[0] + 2.0 * dl[1] + 2.0 * dl[2] + dl[3]);
            if z.iter().any(|v| !v.is_finite()) || !ell.is_finite() {
                return Err(FlowError::IntegrationFailure { step: n });
            }
            worst = worst.max(excursion(&z));
        }
        for v in z.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
        Ok((FlowOutcome { point: z, excursion: worst }, ell))
    }

    /// `Φ_{t_end}(x)`.
    pub fn forward(&self, x: &[f64], t_end: f64) -> Result<Vec<f64>> {
        Ok(self.forward_traced(x, t_end)?.point)
    }

    pub fn forward_traced(&self, x: &[f64], t_end: f64) -> Result<FlowOutcome> {
        Ok(self.integrate(x, t_end, Direction::Forward, false)?.0)
    }

    /// `Φ_{t_end}^{-1}(y)`, integrating `dz/dτ = -v(z, t_end - τ)`.
    pub fn inverse(&self, y: &[f64], t_end: f64) -> Result<Vec<f64>> {
        Ok(self.inverse_traced(y, t_end)?.point)
    }

    pub fn inverse_traced(&self, y: &[f64], t_end: f64) -> Result<FlowOutcome> {
        Ok(self.integrate(y, t_end, Direction::Backward, false)?.0)
    }

    /// `ln f_{Φ_*ν}(y) = ln f_ν(Φ^{-1}(y)) - ∫_0^1 div v(x(t), t) dt` along
    /// the trajectory ending at `y`, integrated backwards jointly with the
    /// state.
    pub fn log_pushforward_density(&self, source: &Density, y: &[f64]) -> Result<f64> {
        if source.dim() != self.dim() {
            return Err(FlowError::InvalidArgument("source density has the wrong dimension".into()));
        }
        let (end, ell) = self.integrate(y, 1.0, Direction::Backward, true)?;
        let f = source.eval(&end.point);
        if !(f > 0.0) {
            return Err(FlowError::Domain { point: end.point });
        }
        Ok(ln(f) + ell)
    }
}
