use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{Architecture, NetworkError, Result};

/// A fully connected network `θ_L ∘ σ ∘ θ_{L-1} ∘ … ∘ σ ∘ θ_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    arch: Architecture,
    params: Vec<f64>,
}

/// Forward state and reverse-mode scratch space for one [`Mlp`].
///
/// Besides primal values the tape carries up to `tangents` forward-mode
/// directions, which is how exact spatial Jacobian columns are obtained.
#[derive(Debug, Clone)]
pub struct Tape {
    tangents: usize,
    active: usize,
    // acts[0] is the input, acts[l + 1] the output of layer l
    acts: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    tan_acts: Vec<Vec<f64>>,
    tan_pre: Vec<Vec<f64>>,
    bar_acts: Vec<Vec<f64>>,
    bar_tan_acts: Vec<Vec<f64>>,
    bar_pre: Vec<f64>,
    bar_tan_pre: Vec<f64>,
}

impl Tape {
    pub fn new(arch: &Architecture, tangents: usize) -> Self {
        let w = &arch.widths;
        let layers = arch.layers();
        let width = arch.width();
        Self {
            tangents,
            active: 0,
            acts: w.iter().map(|&n| vec![0.0; n]).collect(),
            pre: (0..layers).map(|l| vec![0.0; w[l + 1]]).collect(),
            tan_acts: w.iter().map(|&n| vec![0.0; n * tangents]).collect(),
            tan_pre: (0..layers).map(|l| vec![0.0; w[l + 1] * tangents]).collect(),
            bar_acts: w.iter().map(|&n| vec![0.0; n]).collect(),
            bar_tan_acts: w.iter().map(|&n| vec![0.0; n * tangents]).collect(),
            bar_pre: vec![0.0; width],
            bar_tan_pre: vec![0.0; width * tangents],
        }
    }

    pub fn capacity(&self) -> usize {
        self.tangents
    }

    /// Output of the last forward pass.
    pub fn output(&self) -> &[f64] {
        &self.acts[self.acts.len() - 1]
    }

    /// Tangent `k` of the output from the last forward pass.
    pub fn output_tangent(&self, k: usize) -> &[f64] {
        let out = &self.tan_acts[self.tan_acts.len() - 1];
        let n = out.len() / self.tangents.max(1);
        &out[k * n..(k + 1) * n]
    }

    /// Cotangent of the network input after the last reverse pass.
    pub fn input_cotangent(&self) -> &[f64] {
        &self.bar_acts[0]
    }

    /// Scratch for the output cotangents to seed a reverse pass with:
    /// `(ō, ō̇)` where `ō̇` holds `active` rows.
    pub fn seed_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        let last = self.bar_acts.len() - 1;
        let n = self.bar_acts[last].len();
        let active = self.active;
        let (a, t) = (&mut self.bar_acts[last], &mut self.bar_tan_acts[last]);
        (&mut a[..], &mut t[..n * active])
    }
}

impl Mlp {
    pub fn new(arch: Architecture, params: Vec<f64>) -> Result<Self> {
        if params.len() != arch.param_count() {
            return Err(NetworkError::InvalidArgument(alloc::format!(
                "architecture needs {} parameters, got {}",
                arch.param_count(),
                params.len()
            )));
        }
        Ok(Self { arch, params })
    }

    pub fn zeros(arch: Architecture) -> Self {
        let q = arch.param_count();
        Self { arch, params: vec![0.0; q] }
    }

    /// Uniform on `[-r, r]`, `r = min(1, 1/√W)`.
    pub fn random<R: Rng + ?Sized>(arch: Architecture, rng: &mut R) -> Self {
        let r = (1.0 / crate::math::sqrt(arch.width() as f64)).min(1.0);
        let params = (0..arch.param_count()).map(|_| rng.random_range(-r..=r)).collect();
        Self { arch, params }
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(NetworkError::InvalidArgument(alloc::format!(
                "expected {} parameters, got {}",
                self.params.len(),
                params.len()
            )));
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    /// Clamp every parameter into `[-1, 1]`.
    pub fn project(&mut self) {
        for p in self.params.iter_mut() {
            *p = p.clamp(-1.0, 1.0);
        }
    }

    pub fn tape(&self, tangents: usize) -> Tape {
        Tape::new(&self.arch, tangents)
    }

    /// Plain evaluation.
    pub fn eval(&self, input: &[f64]) -> Result<Vec<f64>> {
        let mut tape = self.tape(0);
        self.forward(input, &[], &mut tape)?;
        Ok(tape.output().to_vec())
    }

    /// Forward pass with `seeds.len() / d_0` tangent directions (row-major).
    pub fn forward(&self, input: &[f64], seeds: &[f64], tape: &mut Tape) -> Result<()> {
        let w = &self.arch.widths;
        if input.len() != w[0] || seeds.len() % w[0] != 0 {
            return Err(NetworkError::InvalidArgument(alloc::format!(
                "input of width {} with {} seed entries, expected width {}",
                input.len(),
                seeds.len(),
                w[0]
            )));
        }
        let k = seeds.len() / w[0];
        if k > tape.tangents {
            return Err(NetworkError::InvalidArgument(alloc::format!(
                "tape holds {} tangents, {k} requested",
                tape.tangents
            )));
        }
        tape.active = k;
        tape.acts[0].copy_from_slice(input);
        tape.tan_acts[0][..seeds.len()].copy_from_slice(seeds);
        let layers = self.arch.layers();
        let mut offset = 0;
        for l in 0..layers {
            let (n_in, n_out) = (w[l], w[l + 1]);
            let weights = &self.params[offset..offset + n_in * n_out];
            let bias = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            offset += n_in * n_out + n_out;
            let last = l + 1 == layers;
            let (before, after) = tape.acts.split_at_mut(l + 1);
            let a_in = &before[l];
            let a_out = &mut after[0];
            let (tb, ta) = tape.tan_acts.split_at_mut(l + 1);
            let t_in = &tb[l];
            let t_out = &mut ta[0];
            let z = &mut tape.pre[l];
            let zt = &mut tape.tan_pre[l];
            for i in 0..n_out {
                let row = &weights[i * n_in..(i + 1) * n_in];
                let zi = bias[i] + dot(row, a_in);
                z[i] = zi;
                for r in 0..k {
                    zt[r * n_out + i] = dot(row, &t_in[r * n_in..(r + 1) * n_in]);
                }
                if last {
                    a_out[i] = zi;
                    for r in 0..k {
                        t_out[r * n_out + i] = zt[r * n_out + i];
                    }
                } else {
                    let (v, d1, _) = self.arch.activation.eval3(zi);
                    a_out[i] = v;
                    for r in 0..k {
                        t_out[r * n_out + i] = d1 * zt[r * n_out + i];
                    }
                }
            }
            if a_out.iter().any(|v| !v.is_finite()) {
                return Err(NetworkError::Overflow { layer: l });
            }
        }
        Ok(())
    }

    /// Reverse pass over the last forward pass recorded in `tape`.
    ///
    /// The output cotangents must already be in place (see
    /// [`Tape::seed_mut`]). Parameter gradients are accumulated into `grad`;
    /// the input cotangent is left in [`Tape::input_cotangent`].
    pub fn backward(&self, tape: &mut Tape, grad: &mut [f64]) {
        let w = &self.arch.widths;
        let k = tape.active;
        let layers = self.arch.layers();
        let act = self.arch.activation;
        let mut end = self.params.len();
        for l in (0..layers).rev() {
            let (n_in, n_out) = (w[l], w[l + 1]);
            let start = end - n_in * n_out - n_out;
            let weights = &self.params[start..start + n_in * n_out];
            let last = l + 1 == layers;
            let bar_z = &mut tape.bar_pre[..n_out];
            let bar_zt = &mut tape.bar_tan_pre[..n_out * k];
            {
                let bar_a = &tape.bar_acts[l + 1];
                let bar_at = &tape.bar_tan_acts[l + 1];
                if last {
                    bar_z.copy_from_slice(bar_a);
                    bar_zt.copy_from_slice(&bar_at[..n_out * k]);
                } else {
                    let z = &tape.pre[l];
                    let zt = &tape.tan_pre[l];
                    for i in 0..n_out {
                        let (_, d1, d2) = act.eval3(z[i]);
                        let mut acc = bar_a[i] * d1;
                        for r in 0..k {
                            let idx = r * n_out + i;
                            acc += bar_at[idx] * zt[idx] * d2;
                            bar_zt[idx] = bar_at[idx] * d1;
                        }
                        bar_z[i] = acc;
                    }
                }
            }
            let a_in = &tape.acts[l];
            let t_in = &tape.tan_acts[l];
            let (gw, gb) = grad[start..end].split_at_mut(n_in * n_out);
            for i in 0..n_out {
                gb[i] += bar_z[i];
                let row = &mut gw[i * n_in..(i + 1) * n_in];
                axpy(bar_z[i], a_in, row);
                for r in 0..k {
                    axpy(bar_zt[r * n_out + i], &t_in[r * n_in..(r + 1) * n_in], row);
                }
            }
            let bar_in = &mut tape.bar_acts[l];
            let bar_tin = &mut tape.bar_tan_acts[l];
            bar_in.iter_mut().for_each(|v| *v = 0.0);
            bar_tin[..n_in * k].iter_mut().for_each(|v| *v = 0.0);
            for i in 0..n_out {
                let row = &weights[i * n_in..(i + 1) * n_in];
                axpy(bar_z[i], row, bar_in);
                for r in 0..k {
                    axpy(bar_zt[r * n_out + i], row, &mut bar_tin[r * n_in..(r + 1) * n_in]);
                }
            }
            end = start;
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    if alpha == 0.0 {
        return;
    }
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Activation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_net(widths: Vec<usize>, act: Activation, seed: u64) -> Mlp {
        let arch = Architecture::new(widths, act).unwrap();
        Mlp::random(arch, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    #[test]
    fn zero_parameters_give_zero() {
        let net = Mlp::zeros(Architecture::new(vec![3, 5, 2], Activation::ReluPower(2)).unwrap());
        assert_eq!(net.eval(&[0.1, 0.2, 0.3]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn init_is_inside_box() {
        let net = random_net(vec![2, 64, 1], Activation::ReluPower(2), 1);
        assert!(net.params().iter().all(|p| p.abs() <= 0.125));
        let mut big = net.clone();
        big.params_mut()[0] = 7.0;
        big.project();
        assert_eq!(big.params()[0], 1.0);
    }

    #[test]
    fn tangents_match_finite_differences() {
        let net = random_net(vec![3, 7, 5, 2], Activation::ReluPower(3), 4);
        let x = [0.3, -0.2, 0.8];
        let mut tape = net.tape(3);
        let seeds = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        net.forward(&x, &seeds, &mut tape).unwrap();
        for k in 0..3 {
            let mut p = x;
            let h = 1e-6;
            p[k] += h;
            let up = net.eval(&p).unwrap();
            p[k] -= 2.0 * h;
            let dn = net.eval(&p).unwrap();
            for i in 0..2 {
                let fd = (up[i] - dn[i]) / (2.0 * h);
                assert!((tape.output_tangent(k)[i] - fd).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let net = random_net(vec![2, 6, 4, 3], Activation::ReluPower(2), 9);
        let x = [0.4, 0.9];
        let cot = [0.5, -1.0, 2.0];
        let loss = |n: &Mlp| n.eval(&x).unwrap().iter().zip(&cot).map(|(a, b)| a * b).sum::<f64>();
        let mut tape = net.tape(0);
        net.forward(&x, &[], &mut tape).unwrap();
        tape.seed_mut().0.copy_from_slice(&cot);
        let mut grad = vec![0.0; net.params().len()];
        net.backward(&mut tape, &mut grad);
        let h = 1e-5;
        for j in 0..grad.len() {
            let mut p = net.clone();
            p.params_mut()[j] += h;
            let up = loss(&p);
            p.params_mut()[j] -= 2.0 * h;
            let dn = loss(&p);
            let fd = (up - dn) / (2.0 * h);
            assert!((grad[j] - fd).abs() <= 1e-6 * fd.abs().max(1.0), "{j}: {} vs {fd}", grad[j]);
        }
    }

    #[test]
    fn overflow_reports_layer() {
        let arch = Architecture::new(vec![1, 1, 1, 1], Activation::ReluPower(3)).unwrap();
        let net = Mlp::new(arch, vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(net.eval(&[1e60]).unwrap_err(), NetworkError::Overflow { layer: 1 });
    }
}
