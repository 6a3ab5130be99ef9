//! Dense LSTM and convolutional LSTM cells.
//!
//! The ConvLSTM gates are convolutions over a (height, width, channels)
//! state grid and include Hadamard peephole terms on the cell state; the
//! dense cell is the matrix-product analog without peepholes. Gate kernels
//! start from a fan-scaled uniform distribution, forget-gate biases at 1,
//! everything else at 0.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::CoreResult;
use crate::math;

use super::{ParamId, ParamSet, Tape, Tensor, Var};

fn uniform_init(rng: &mut impl Rng, shape: &[usize], fan_in: usize, fan_out: usize) -> Tensor {
    let limit = math::sqrt(6.0 / (fan_in + fan_out) as f64);
    let data: Vec<f64> = (0..shape.iter().product())
        .map(|_| rng.random_range(-limit..limit))
        .collect();
    Tensor::from_vec(shape, data).expect("shape/data agree by construction")
}

fn bias_init(shape: &[usize], value: f64) -> Tensor {
    let mut t = Tensor::zeros(shape);
    t.data_mut().iter_mut().for_each(|v| *v = value);
    t
}

/// Dense LSTM cell (no peepholes).
#[derive(Debug, Clone)]
pub struct LstmCell {
    pub input_size: usize,
    pub hidden_size: usize,
    w_xi: ParamId,
    w_hi: ParamId,
    w_xf: ParamId,
    w_hf: ParamId,
    w_xc: ParamId,
    w_hc: ParamId,
    w_xo: ParamId,
    w_ho: ParamId,
    b_i: ParamId,
    b_f: ParamId,
    b_c: ParamId,
    b_o: ParamId,
}

/// Tape-bound parameter handles for one forward pass.
pub struct LstmVars {
    pub input_size: usize,
    pub hidden_size: usize,
    w_xi: Var,
    w_hi: Var,
    w_xf: Var,
    w_hf: Var,
    w_xc: Var,
    w_hc: Var,
    w_xo: Var,
    w_ho: Var,
    b_i: Var,
    b_f: Var,
    b_c: Var,
    b_o: Var,
}

impl LstmCell {
    pub fn init(
        params: &mut ParamSet,
        prefix: &str,
        input_size: usize,
        hidden_size: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let xs = [hidden_size, input_size];
        let hs = [hidden_size, hidden_size];
        let w_xi = params.add(
            &format!("{prefix}.w_xi"),
            uniform_init(rng, &xs, input_size, hidden_size),
        );
        let w_hi = params.add(
            &format!("{prefix}.w_hi"),
            uniform_init(rng, &hs, hidden_size, hidden_size),
        );
        let w_xf = params.add(
            &format!("{prefix}.w_xf"),
            uniform_init(rng, &xs, input_size, hidden_size),
        );
        let w_hf = params.add(
            &format!("{prefix}.w_hf"),
            uniform_init(rng, &hs, hidden_size, hidden_size),
        );
        let w_xc = params.add(
            &format!("{prefix}.w_xc"),
            uniform_init(rng, &xs, input_size, hidden_size),
        );
        let w_hc = params.add(
            &format!("{prefix}.w_hc"),
            uniform_init(rng, &hs, hidden_size, hidden_size),
        );
        let w_xo = params.add(
            &format!("{prefix}.w_xo"),
            uniform_init(rng, &xs, input_size, hidden_size),
        );
        let w_ho = params.add(
            &format!("{prefix}.w_ho"),
            uniform_init(rng, &hs, hidden_size, hidden_size),
        );
        let b_i = params.add(&format!("{prefix}.b_i"), Tensor::zeros(&[hidden_size]));
        let b_f = params.add(
            &format!("{prefix}.b_f"),
            bias_init(&[hidden_size], 1.0),
        );
        let b_c = params.add(&format!("{prefix}.b_c"), Tensor::zeros(&[hidden_size]));
        let b_o = params.add(&format!("{prefix}.b_o"), Tensor::zeros(&[hidden_size]));
        Self {
            input_size,
            hidden_size,
            w_xi,
            w_hi,
            w_xf,
            w_hf,
            w_xc,
            w_hc,
            w_xo,
            w_ho,
            b_i,
            b_f,
            b_c,
            b_o,
        }
    }

    pub fn zero_state(&self) -> (Tensor, Tensor) {
        (
            Tensor::zeros(&[self.hidden_size]),
            Tensor::zeros(&[self.hidden_size]),
        )
    }

    pub fn bind(&self, tape: &mut Tape, params: &ParamSet) -> CoreResult<LstmVars> {
        Ok(LstmVars {
            input_size: self.input_size,
            hidden_size: self.hidden_size,
            w_xi: tape.param(params, self.w_xi)?,
            w_hi: tape.param(params, self.w_hi)?,
            w_xf: tape.param(params, self.w_xf)?,
            w_hf: tape.param(params, self.w_hf)?,
            w_xc: tape.param(params, self.w_xc)?,
            w_hc: tape.param(params, self.w_hc)?,
            w_xo: tape.param(params, self.w_xo)?,
            w_ho: tape.param(params, self.w_ho)?,
            b_i: tape.param(params, self.b_i)?,
            b_f: tape.param(params, self.b_f)?,
            b_c: tape.param(params, self.b_c)?,
            b_o: tape.param(params, self.b_o)?,
        })
    }
}

impl LstmVars {
    fn gate(
        &self,
        tape: &mut Tape,
        wx: Var,
        wh: Var,
        b: Var,
        x: Var,
        h: Var,
    ) -> CoreResult<Var> {
        let xa = tape.matvec(wx, x)?;
        let ha = tape.matvec(wh, h)?;
        let s = tape.add(xa, ha)?;
        tape.add(s, b)
    }

    /// One recurrence step; returns `(h_t, c_t)`.
    pub fn step(&self, tape: &mut Tape, x: Var, h_prev: Var, c_prev: Var) -> CoreResult<(Var, Var)> {
        let i_pre = self.gate(tape, self.w_xi, self.w_hi, self.b_i, x, h_prev)?;
        let i = tape.sigmoid(i_pre)?;
        let f_pre = self.gate(tape, self.w_xf, self.w_hf, self.b_f, x, h_prev)?;
        let f = tape.sigmoid(f_pre)?;
        let g_pre = self.gate(tape, self.w_xc, self.w_hc, self.b_c, x, h_prev)?;
        let g = tape.tanh(g_pre)?;
        let keep = tape.mul(f, c_prev)?;
        let write = tape.mul(i, g)?;
        let c = tape.add(keep, write)?;
        let o_pre = self.gate(tape, self.w_xo, self.w_ho, self.b_o, x, h_prev)?;
        let o = tape.sigmoid(o_pre)?;
        let c_tanh = tape.tanh(c)?;
        let h = tape.mul(o, c_tanh)?;
        Ok((h, c))
    }
}

/// Convolutional LSTM cell with Hadamard peephole connections.
///
/// Gate transforms are same-padded convolutions; the peephole tensors match
/// the full (height, width, out_channels) state shape, so the cell is tied
/// to fixed spatial dimensions at construction.
#[derive(Debug, Clone)]
pub struct ConvLstmCell {
    pub kernel: (usize, usize),
    pub in_channels: usize,
    pub out_channels: usize,
    pub state_h: usize,
    pub state_w: usize,
    w_xi: ParamId,
    w_hi: ParamId,
    w_xf: ParamId,
    w_hf: ParamId,
    w_xc: ParamId,
    w_hc: ParamId,
    w_xo: ParamId,
    w_ho: ParamId,
    w_ci: ParamId,
    w_cf: ParamId,
    w_co: ParamId,
    b_i: ParamId,
    b_f: ParamId,
    b_c: ParamId,
    b_o: ParamId,
}

/// Tape-bound ConvLSTM parameters for one forward pass.
pub struct ConvLstmVars {
    pub state_h: usize,
    pub state_w: usize,
    pub out_channels: usize,
    w_xi: Var,
    w_hi: Var,
    w_xf: Var,
    w_hf: Var,
    w_xc: Var,
    w_hc: Var,
    w_xo: Var,
    w_ho: Var,
    w_ci: Var,
    w_cf: Var,
    w_co: Var,
    b_i: Var,
    b_f: Var,
    b_c: Var,
    b_o: Var,
}

impl ConvLstmCell {
    #[allow(clippy::too_many_arguments)]
    pub fn init(
        params: &mut ParamSet,
        prefix: &str,
        kernel: (usize, usize),
        in_channels: usize,
        out_channels: usize,
        state_h: usize,
        state_w: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let (kh, kw) = kernel;
        let x_kernel = [kh, kw, in_channels, out_channels];
        let h_kernel = [kh, kw, out_channels, out_channels];
        let (x_fan_in, h_fan_in) = (kh * kw * in_channels, kh * kw * out_channels);
        let fan_out = kh * kw * out_channels;
        let w_xi = params.add(
            &format!("{prefix}.w_xi"),
            uniform_init(rng, &x_kernel, x_fan_in, fan_out),
        );
        let w_hi = params.add(
            &format!("{prefix}.w_hi"),
            uniform_init(rng, &h_kernel, h_fan_in, fan_out),
        );
        let w_xf = params.add(
            &format!("{prefix}.w_xf"),
            uniform_init(rng, &x_kernel, x_fan_in, fan_out),
        );
        let w_hf = params.add(
            &format!("{prefix}.w_hf"),
            uniform_init(rng, &h_kernel, h_fan_in, fan_out),
        );
        let w_xc = params.add(
            &format!("{prefix}.w_xc"),
            uniform_init(rng, &x_kernel, x_fan_in, fan_out),
        );
        let w_hc = params.add(
            &format!("{prefix}.w_hc"),
            uniform_init(rng, &h_kernel, h_fan_in, fan_out),
        );
        let w_xo = params.add(
            &format!("{prefix}.w_xo"),
            uniform_init(rng, &x_kernel, x_fan_in, fan_out),
        );
        let w_ho = params.add(
            &format!("{prefix}.w_ho"),
            uniform_init(rng, &h_kernel, h_fan_in, fan_out),
        );

        let state_shape = [state_h, state_w, out_channels];
        let w_ci = params.add(
            &format!("{prefix}.w_ci"),
            uniform_init(rng, &state_shape, out_channels, out_channels),
        );
        let w_cf = params.add(
            &format!("{prefix}.w_cf"),
            uniform_init(rng, &state_shape, out_channels, out_channels),
        );
        let w_co = params.add(
            &format!("{prefix}.w_co"),
            uniform_init(rng, &state_shape, out_channels, out_channels),
        );

        let b_i = params.add(&format!("{prefix}.b_i"), Tensor::zeros(&[out_channels]));
        let b_f = params.add(
            &format!("{prefix}.b_f"),
            bias_init(&[out_channels], 1.0),
        );
        let b_c = params.add(&format!("{prefix}.b_c"), Tensor::zeros(&[out_channels]));
        let b_o = params.add(&format!("{prefix}.b_o"), Tensor::zeros(&[out_channels]));

        Self {
            kernel,
            in_channels,
            out_channels,
            state_h,
            state_w,
            w_xi,
            w_hi,
            w_xf,
            w_hf,
            w_xc,
            w_hc,
            w_xo,
            w_ho,
            w_ci,
            w_cf,
            w_co,
            b_i,
            b_f,
            b_c,
            b_o,
        }
    }

    pub fn zero_state(&self) -> (Tensor, Tensor) {
        let shape = [self.state_h, self.state_w, self.out_channels];
        (Tensor::zeros(&shape), Tensor::zeros(&shape))
    }

    pub fn bind(&self, tape: &mut Tape, params: &ParamSet) -> CoreResult<ConvLstmVars> {
        Ok(ConvLstmVars {
            state_h: self.state_h,
            state_w: self.state_w,
            out_channels: self.out_channels,
            w_xi: tape.param(params, self.w_xi)?,
            w_hi: tape.param(params, self.w_hi)?,
            w_xf: tape.param(params, self.w_xf)?,
            w_hf: tape.param(params, self.w_hf)?,
            w_xc: tape.param(params, self.w_xc)?,
            w_hc: tape.param(params, self.w_hc)?,
            w_xo: tape.param(params, self.w_xo)?,
            w_ho: tape.param(params, self.w_ho)?,
            w_ci: tape.param(params, self.w_ci)?,
            w_cf: tape.param(params, self.w_cf)?,
            w_co: tape.param(params, self.w_co)?,
            b_i: tape.param(params, self.b_i)?,
            b_f: tape.param(params, self.b_f)?,
            b_c: tape.param(params, self.b_c)?,
            b_o: tape.param(params, self.b_o)?,
        })
    }
}

impl ConvLstmVars {
    fn gate_pre(
        &self,
        tape: &mut Tape,
        wx: Var,
        wh: Var,
        b: Var,
        x: Var,
        h: Var,
        peephole: Option<(Var, Var)>,
    ) -> CoreResult<Var> {
        let xa = tape.conv2d_same(x, wx)?;
        let ha = tape.conv2d_same(h, wh)?;
        let mut s = tape.add(xa, ha)?;
        if let Some((w_c, c)) = peephole {
            let p = tape.mul(w_c, c)?;
            s = tape.add(s, p)?;
        }
        tape.add_bias(s, b)
    }

    /// One convolutional recurrence step; returns `(h_t, c_t)`.
    ///
    /// The update is
    /// `i = sig(Wxi*X + Whi*H + Wci.C + bi)`,
    /// `f = sig(Wxf*X + Whf*H + Wcf.C + bf)`,
    /// `C' = f.C + i.tanh(Wxc*X + Whc*H + bc)`,
    /// `o = sig(Wxo*X + Who*H + Wco.C' + bo)`,
    /// `H' = o.tanh(C')`,
    /// with `*` same-padded convolution and `.` the Hadamard product.
    pub fn step(&self, tape: &mut Tape, x: Var, h_prev: Var, c_prev: Var) -> CoreResult<(Var, Var)> {
        let i_pre = self.gate_pre(
            tape,
            self.w_xi,
            self.w_hi,
            self.b_i,
            x,
            h_prev,
            Some((self.w_ci, c_prev)),
        )?;
        let i = tape.sigmoid(i_pre)?;
        let f_pre = self.gate_pre(
            tape,
            self.w_xf,
            self.w_hf,
            self.b_f,
            x,
            h_prev,
            Some((self.w_cf, c_prev)),
        )?;
        let f = tape.sigmoid(f_pre)?;
        let g_pre = self.gate_pre(tape, self.w_xc, self.w_hc, self.b_c, x, h_prev, None)?;
        let g = tape.tanh(g_pre)?;
        let keep = tape.mul(f, c_prev)?;
        let write = tape.mul(i, g)?;
        let c = tape.add(keep, write)?;
        let o_pre = self.gate_pre(
            tape,
            self.w_xo,
            self.w_ho,
            self.b_o,
            x,
            h_prev,
            Some((self.w_co, c)),
        )?;
        let o = tape.sigmoid(o_pre)?;
        let c_tanh = tape.tanh(c)?;
        let h = tape.mul(o, c_tanh)?;
        Ok((h, c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::gradcheck;
    use alloc::vec;
    use alloc::vec::Vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn zeroed(params: &mut ParamSet) {
        for id in params.ids().collect::<Vec<_>>() {
            params.value_mut(id).data_mut().iter_mut().for_each(|v| *v = 0.0);
        }
    }

    #[test]
    fn zero_convlstm_params_give_zero_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut params = ParamSet::new();
        let cell = ConvLstmCell::init(&mut params, "cell", (3, 1), 1, 2, 4, 1, &mut rng);
        zeroed(&mut params);

        let mut tape = Tape::new();
        let vars = cell.bind(&mut tape, &params).unwrap();
        let (h0, c0) = cell.zero_state();
        let mut h = tape.constant(h0).unwrap();
        let mut c = tape.constant(c0).unwrap();
        for step in 0..3 {
            let x = tape
                .constant(Tensor::from_vec(&[4, 1, 1], vec![step as f64, 1.0, -2.0, 0.5]).unwrap())
                .unwrap();
            let (nh, nc) = vars.step(&mut tape, x, h, c).unwrap();
            h = nh;
            c = nc;
            // Gates are 0.5 but the candidate is 0, so states stay at 0.
            assert!(tape.value(h).data().iter().all(|&v| v == 0.0));
            assert!(tape.value(c).data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn hidden_state_is_bounded_by_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut params = ParamSet::new();
        let cell = ConvLstmCell::init(&mut params, "cell", (3, 1), 1, 3, 5, 1, &mut rng);
        // Exaggerate the parameters; tanh * sigmoid still bounds |H| < 1.
        for id in params.ids().collect::<Vec<_>>() {
            params
                .value_mut(id)
                .data_mut()
                .iter_mut()
                .for_each(|v| *v *= 50.0);
        }
        let mut tape = Tape::new();
        let vars = cell.bind(&mut tape, &params).unwrap();
        let (h0, c0) = cell.zero_state();
        let mut h = tape.constant(h0).unwrap();
        let mut c = tape.constant(c0).unwrap();
        for step in 0..4 {
            let x = tape
                .constant(
                    Tensor::from_vec(&[5, 1, 1], (0..5).map(|i| (i + step) as f64 * 7.0).collect())
                        .unwrap(),
                )
                .unwrap();
            let (nh, nc) = vars.step(&mut tape, x, h, c).unwrap();
            h = nh;
            c = nc;
            assert!(tape.value(h).data().iter().all(|&v| v.abs() < 1.0));
        }
    }

    #[test]
    fn dense_lstm_zero_params_and_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut params = ParamSet::new();
        let cell = LstmCell::init(&mut params, "lstm", 2, 4, &mut rng);
        zeroed(&mut params);
        let mut tape = Tape::new();
        let vars = cell.bind(&mut tape, &params).unwrap();
        let (h0, c0) = cell.zero_state();
        let h = tape.constant(h0).unwrap();
        let c = tape.constant(c0).unwrap();
        let x = tape
            .constant(Tensor::from_vec(&[2], vec![3.0, -1.0]).unwrap())
            .unwrap();
        let (h1, _) = vars.step(&mut tape, x, h, c).unwrap();
        assert!(tape.value(h1).data().iter().all(|&v| v == 0.0));

        // Random params, large inputs: |h| < 1 always.
        let mut params = ParamSet::new();
        let cell = LstmCell::init(&mut params, "lstm", 2, 4, &mut rng);
        let mut tape = Tape::new();
        let vars = cell.bind(&mut tape, &params).unwrap();
        let (h0, c0) = cell.zero_state();
        let mut h = tape.constant(h0).unwrap();
        let mut c = tape.constant(c0).unwrap();
        for i in 0..6 {
            let x = tape
                .constant(Tensor::from_vec(&[2], vec![100.0 * i as f64, -55.0]).unwrap())
                .unwrap();
            let (nh, nc) = vars.step(&mut tape, x, h, c).unwrap();
            h = nh;
            c = nc;
            assert!(tape.value(h).data().iter().all(|&v| v.abs() < 1.0));
        }
    }

    fn unrolled_convlstm_loss(
        params: &ParamSet,
        cell: &ConvLstmCell,
        inputs: &[Tensor],
    ) -> CoreResult<f64> {
        let mut tape = Tape::new();
        let vars = cell.bind(&mut tape, params)?;
        let (h0, c0) = cell.zero_state();
        let mut h = tape.constant(h0)?;
        let mut c = tape.constant(c0)?;
        for x in inputs {
            let xv = tape.constant(x.clone())?;
            let (nh, nc) = vars.step(&mut tape, xv, h, c)?;
            h = nh;
            c = nc;
        }
        let sq = tape.mul(h, h)?;
        let loss = tape.mean(sq)?;
        Ok(tape.value(loss).data()[0])
    }

    #[test]
    fn convlstm_gradients_match_finite_differences() {
        for trial in 0..3 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + trial);
            let mut params = ParamSet::new();
            let cell = ConvLstmCell::init(&mut params, "cell", (3, 1), 2, 2, 4, 1, &mut rng);
            let inputs: Vec<Tensor> = (0..3)
                .map(|_| {
                    Tensor::from_vec(
                        &[4, 1, 2],
                        (0..8).map(|_| rng.random_range(-1.0..1.0)).collect(),
                    )
                    .unwrap()
                })
                .collect();

            let mut tape = Tape::new();
            let vars = cell.bind(&mut tape, &params).unwrap();
            let (h0, c0) = cell.zero_state();
            let mut h = tape.constant(h0).unwrap();
            let mut c = tape.constant(c0).unwrap();
            for x in &inputs {
                let xv = tape.constant(x.clone()).unwrap();
                let (nh, nc) = vars.step(&mut tape, xv, h, c).unwrap();
                h = nh;
                c = nc;
            }
            let sq = tape.mul(h, h).unwrap();
            let loss = tape.mean(sq).unwrap();
            tape.backward(loss, &mut params).unwrap();

            let max_rel = gradcheck::max_relative_error(&mut params, |p| {
                unrolled_convlstm_loss(p, &cell, &inputs)
            })
            .unwrap();
            assert!(max_rel < 1e-4, "trial {trial}: max rel err {max_rel}");
        }
    }

    #[test]
    fn lstm_gradients_match_finite_differences() {
        for trial in 0..3 {
            let mut rng = ChaCha8Rng::seed_from_u64(200 + trial);
            let mut params = ParamSet::new();
            let cell = LstmCell::init(&mut params, "lstm", 3, 4, &mut rng);
            let inputs: Vec<Tensor> = (0..3)
                .map(|_| {
                    Tensor::from_vec(&[3], (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
                        .unwrap()
                })
                .collect();

            let loss_fn = |p: &ParamSet| -> CoreResult<f64> {
                let mut tape = Tape::new();
                let vars = cell.bind(&mut tape, p)?;
                let (h0, c0) = cell.zero_state();
                let mut h = tape.constant(h0)?;
                let mut c = tape.constant(c0)?;
                for x in &inputs {
                    let xv = tape.constant(x.clone())?;
                    let (nh, nc) = vars.step(&mut tape, xv, h, c)?;
                    h = nh;
                    c = nc;
                }
                let sq = tape.mul(h, h)?;
                let loss = tape.mean(sq)?;
                Ok(tape.value(loss).data()[0])
            };

            let mut tape = Tape::new();
            let vars = cell.bind(&mut tape, &params).unwrap();
            let (h0, c0) = cell.zero_state();
            let mut h = tape.constant(h0).unwrap();
            let mut c = tape.constant(c0).unwrap();
            for x in &inputs {
                let xv = tape.constant(x.clone()).unwrap();
                let (nh, nc) = vars.step(&mut tape, xv, h, c).unwrap();
                h = nh;
                c = nc;
            }
            let sq = tape.mul(h, h).unwrap();
            let loss = tape.mean(sq).unwrap();
            tape.backward(loss, &mut params).unwrap();

            let max_rel = gradcheck::max_relative_error(&mut params, loss_fn).unwrap();
            assert!(max_rel < 1e-4, "trial {trial}: max rel err {max_rel}");
        }
    }

    // Reference peephole LSTM step computed with plain scalar arithmetic.
    #[allow(clippy::too_many_arguments)]
    fn dense_peephole_reference(
        x: &[f64],
        h: &[f64],
        c: &[f64],
        w_x: [&Tensor; 4],
        w_h: [&Tensor; 4],
        peep: [&Tensor; 3],
        bias: [&Tensor; 4],
        cout: usize,
        cin: usize,
    ) -> (Vec<f64>, Vec<f64>) {
        // 1x1 conv kernels have layout [1,1,cin,cout]: k[ci*cout + co].
        let matmul = |k: &Tensor, v: &[f64], vin: usize| -> Vec<f64> {
            (0..cout)
                .map(|co| (0..vin).map(|ci| v[ci] * k.data()[ci * cout + co]).sum())
                .collect()
        };
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let ix = matmul(w_x[0], x, cin);
        let ih = matmul(w_h[0], h, cout);
        let fx = matmul(w_x[1], x, cin);
        let fh = matmul(w_h[1], h, cout);
        let gx = matmul(w_x[2], x, cin);
        let gh = matmul(w_h[2], h, cout);
        let ox = matmul(w_x[3], x, cin);
        let oh = matmul(w_h[3], h, cout);
        let mut new_c = vec![0.0; cout];
        let mut new_h = vec![0.0; cout];
        for j in 0..cout {
            let i = sig(ix[j] + ih[j] + peep[0].data()[j] * c[j] + bias[0].data()[j]);
            let f = sig(fx[j] + fh[j] + peep[1].data()[j] * c[j] + bias[1].data()[j]);
            let g = (gx[j] + gh[j] + bias[2].data()[j]).tanh();
            new_c[j] = f * c[j] + i * g;
            let o = sig(ox[j] + oh[j] + peep[2].data()[j] * new_c[j] + bias[3].data()[j]);
            new_h[j] = o * new_c[j].tanh();
        }
        (new_h, new_c)
    }

    #[test]
    fn convlstm_with_unit_grid_reduces_to_peephole_lstm() {
        let mut rng = ChaCha8Rng::seed_from_u64(900);
        let (cin, cout) = (3, 2);
        let mut params = ParamSet::new();
        let cell = ConvLstmCell::init(&mut params, "cell", (1, 1), cin, cout, 1, 1, &mut rng);

        let x: Vec<f64> = (0..cin).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h: Vec<f64> = (0..cout).map(|_| rng.random_range(-0.5..0.5)).collect();
        let c: Vec<f64> = (0..cout).map(|_| rng.random_range(-0.5..0.5)).collect();

        let mut tape = Tape::new();
        let vars = cell.bind(&mut tape, &params).unwrap();
        let xv = tape
            .constant(Tensor::from_vec(&[1, 1, cin], x.clone()).unwrap())
            .unwrap();
        let hv = tape
            .constant(Tensor::from_vec(&[1, 1, cout], h.clone()).unwrap())
            .unwrap();
        let cv = tape
            .constant(Tensor::from_vec(&[1, 1, cout], c.clone()).unwrap())
            .unwrap();
        let (nh, nc) = vars.step(&mut tape, xv, hv, cv).unwrap();

        let ids: Vec<_> = params.ids().collect();
        let val = |i: usize| params.value(ids[i]);
        // Creation order: w_xi, w_hi, w_xf, w_hf, w_xc, w_hc, w_xo, w_ho,
        // w_ci, w_cf, w_co, b_i, b_f, b_c, b_o.
        let (rh, rc) = dense_peephole_reference(
            &x,
            &h,
            &c,
            [val(0), val(2), val(4), val(6)],
            [val(1), val(3), val(5), val(7)],
            [val(8), val(9), val(10)],
            [val(11), val(12), val(13), val(14)],
            cout,
            cin,
        );
        for j in 0..cout {
            assert!((tape.value(nh).data()[j] - rh[j]).abs() < 1e-12);
            assert!((tape.value(nc).data()[j] - rc[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_seeds_reproduce_bitwise() {
        let run = || -> (Vec<f64>, Vec<f64>) {
            let mut rng = ChaCha8Rng::seed_from_u64(4242);
            let mut params = ParamSet::new();
            let cell = ConvLstmCell::init(&mut params, "cell", (3, 1), 1, 2, 4, 1, &mut rng);
            let inputs: Vec<Tensor> = (0..3)
                .map(|_| {
                    Tensor::from_vec(
                        &[4, 1, 1],
                        (0..4).map(|_| rng.random_range(-1.0..1.0)).collect(),
                    )
                    .unwrap()
                })
                .collect();
            let mut tape = Tape::new();
            let vars = cell.bind(&mut tape, &params).unwrap();
            let (h0, c0) = cell.zero_state();
            let mut h = tape.constant(h0).unwrap();
            let mut c = tape.constant(c0).unwrap();
            for x in &inputs {
                let xv = tape.constant(x.clone()).unwrap();
                let (nh, nc) = vars.step(&mut tape, xv, h, c).unwrap();
                h = nh;
                c = nc;
            }
            let sq = tape.mul(h, h).unwrap();
            let loss = tape.mean(sq).unwrap();
            tape.backward(loss, &mut params).unwrap();
            let forward = tape.value(h).data().to_vec();
            let grads: Vec<f64> = params
                .ids()
                .flat_map(|id| params.grad(id).data().to_vec())
                .collect();
            (forward, grads)
        };
        let (f1, g1) = run();
        let (f2, g2) = run();
        assert_eq!(f1, f2);
        assert_eq!(g1, g2);
    }
}
