use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{Activation, Architecture, Mlp, NetworkError, Result, Tape};

/// `v^θ_t(x) ⊗ η_d(x)` with `η_d(x)_i = x_i (1 - x_i)`, time as the last
/// network input.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpVectorField {
    net: Mlp,
    dim: usize,
    masked: bool,
}

impl MlpVectorField {
    /// Widths `(d+1, hidden…, d)`.
    pub fn zeros(dim: usize, hidden: &[usize], activation: Activation, masked: bool) -> Result<Self> {
        Self::from_mlp(Mlp::zeros(Self::arch(dim, hidden, activation)?), masked)
    }

    pub fn random<R: Rng + ?Sized>(
        dim: usize,
        hidden: &[usize],
        activation: Activation,
        masked: bool,
        rng: &mut R,
    ) -> Result<Self> {
        Self::from_mlp(Mlp::random(Self::arch(dim, hidden, activation)?, rng), masked)
    }

    fn arch(dim: usize, hidden: &[usize], activation: Activation) -> Result<Architecture> {
        let mut widths = Vec::with_capacity(hidden.len() + 2);
        widths.push(dim + 1);
        widths.extend_from_slice(hidden);
        widths.push(dim);
        Architecture::new(widths, activation)
    }

    pub fn from_mlp(net: Mlp, masked: bool) -> Result<Self> {
        let arch = net.architecture();
        let dim = arch.output_dim();
        if arch.input_dim() != dim + 1 {
            return Err(NetworkError::InvalidArgument(alloc::format!(
                "vector field needs input width d+1 = {}, got {}",
                dim + 1,
                arch.input_dim()
            )));
        }
        Ok(Self { net, dim, masked })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn masked(&self) -> bool {
        self.masked
    }

    pub fn mlp(&self) -> &Mlp {
        &self.net
    }

    pub fn mlp_mut(&mut self) -> &mut Mlp {
        &mut self.net
    }

    pub fn params(&self) -> &[f64] {
        self.net.params()
    }

    pub fn param_count(&self) -> usize {
        self.net.params().len()
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        self.net.set_params(params)
    }

    pub fn project(&mut self) {
        self.net.project()
    }

    /// A tape able to carry the `d` tangents used for the divergence.
    pub fn tape(&self) -> Tape {
        self.net.tape(self.dim)
    }

    #[inline]
    fn eta(&self, x: f64) -> (f64, f64) {
        if self.masked {
            (x * (1.0 - x), 1.0 - 2.0 * x)
        } else {
            (1.0, 0.0)
        }
    }

    fn run(&self, x: &[f64], t: f64, tangents: bool, tape: &mut Tape) -> Result<()> {
        let d = self.dim;
        if x.len() != d {
            return Err(NetworkError::InvalidArgument(alloc::format!(
                "point of dimension {}, field of dimension {d}",
                x.len()
            )));
        }
        let mut input = [0.0; 9];
        let mut owned;
        let input: &mut [f64] = if d < 9 {
            &mut input[..d + 1]
        } else {
            owned = vec![0.0; d + 1];
            &mut owned[..]
        };
        input[..d].copy_from_slice(x);
        input[d] = t;
        if tangents {
            let mut seeds = vec![0.0; d * (d + 1)];
            for k in 0..d {
                seeds[k * (d + 1) + k] = 1.0;
            }
            self.net.forward(input, &seeds, tape)
        } else {
            self.net.forward(input, &[], tape)
        }
    }

    /// Field value written into `out`.
    pub fn eval_into(&self, x: &[f64], t: f64, out: &mut [f64], tape: &mut Tape) -> Result<()> {
        self.run(x, t, false, tape)?;
        for (i, (o, v)) in out.iter_mut().zip(tape.output()).enumerate() {
            *o = v * self.eta(x[i]).0;
        }
        Ok(())
    }

    /// Field value into `out`; returns the exact divergence in `x`.
    pub fn eval_div_into(&self, x: &[f64], t: f64, out: &mut [f64], tape: &mut Tape) -> Result<f64> {
        self.run(x, t, true, tape)?;
        let mut div = 0.0;
        for i in 0..self.dim {
            let v = tape.output()[i];
            let (eta, deta) = self.eta(x[i]);
            out[i] = v * eta;
            div += tape.output_tangent(i)[i] * eta + v * deta;
        }
        Ok(div)
    }

    pub fn forward(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(x, t, &mut out, &mut self.net.tape(0))?;
        Ok(out)
    }

    pub fn divergence(&self, x: &[f64], t: f64) -> Result<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_div_into(x, t, &mut out, &mut self.tape())
    }

    /// Vector–Jacobian product of `x ↦ a·u(x,t) + b·div u(x,t)`.
    ///
    /// The parameter gradient is accumulated into `grad_theta`; the spatial
    /// gradient overwrites `grad_x`. With `b == 0` no tangents are carried.
    #[allow(clippy::too_many_arguments)]
    pub fn vjp(
        &self,
        x: &[f64],
        t: f64,
        a: &[f64],
        b: f64,
        grad_theta: &mut [f64],
        grad_x: &mut [f64],
        tape: &mut Tape,
    ) -> Result<()> {
        let d = self.dim;
        let with_div = b != 0.0;
        self.run(x, t, with_div, tape)?;
        let mut explicit = [0.0; 8];
        let mut owned;
        let explicit: &mut [f64] = if d <= 8 {
            &mut explicit[..d]
        } else {
            owned = vec![0.0; d];
            &mut owned[..]
        };
        for i in 0..d {
            let v = tape.output()[i];
            let deta = self.eta(x[i]).1;
            let dd = if self.masked { -2.0 } else { 0.0 };
            let mut e = a[i] * v * deta;
            if with_div {
                e += b * (tape.output_tangent(i)[i] * deta + v * dd);
            }
            explicit[i] = e;
        }
        {
            let (bar_o, bar_ot) = tape.seed_mut();
            for i in 0..d {
                let (eta, deta) = self.eta(x[i]);
                bar_o[i] = a[i] * eta + b * deta;
            }
            if with_div {
                bar_ot.iter_mut().for_each(|v| *v = 0.0);
                for k in 0..d {
                    bar_ot[k * d + k] = b * self.eta(x[k]).0;
                }
            }
        }
        self.net.backward(tape, grad_theta);
        let bar_in = tape.input_cotangent();
        for i in 0..d {
            grad_x[i] = bar_in[i] + explicit[i];
        }
        Ok(())
    }

    /// Gradient of `cot · u(x,t)` with respect to `θ` and `x`.
    pub fn backward(&self, x: &[f64], t: f64, cot: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut g = vec![0.0; self.param_count()];
        let mut gx = vec![0.0; self.dim];
        self.vjp(x, t, cot, 0.0, &mut g, &mut gx, &mut self.tape())?;
        Ok((g, gx))
    }
}
