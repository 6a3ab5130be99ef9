//! Network assembly for the three neural forecasters.
//!
//! `Lstm` is the time-domain baseline: the raw window drives a single dense
//! LSTM whose final hidden state feeds one linear output.
//!
//! `ConvAuto` is the shared backbone of the wavelet models: a stacked
//! ConvLSTM encoder unrolled over the image's time columns (convolution acts
//! along the scale axis while recurrence carries time), a mirrored ConvLSTM
//! decoder reconstructing the input sequence through a linear 1x1 projection
//! (the autoencoder auxiliary loss), and one or two MLP regression heads on
//! the flattened final encoder state.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, CoreResult};
use crate::neural::{ConvLstmCell, LstmCell, ParamId, ParamSet, Tape, Tensor, Var};

#[derive(Debug, Clone)]
struct MlpHead {
    w1: ParamId,
    b1: ParamId,
    w2: ParamId,
    b2: ParamId,
}

#[derive(Debug, Clone)]
enum Body {
    Lstm {
        cell: LstmCell,
        out_w: ParamId,
        out_b: ParamId,
    },
    ConvAuto {
        encoder: Vec<ConvLstmCell>,
        decoder: Vec<ConvLstmCell>,
        proj_w: ParamId,
        proj_b: ParamId,
        heads: Vec<MlpHead>,
    },
}

/// One trainable predictor with its own parameter set.
#[derive(Debug, Clone)]
pub struct Network {
    pub params: ParamSet,
    /// (height, time steps, channels) of one input sample.
    pub input_shape: (usize, usize, usize),
    pub n_heads: usize,
    body: Body,
}

fn relu_mlp(
    tape: &mut Tape,
    params: &ParamSet,
    head: &MlpHead,
    latent: Var,
    dropout_mask: Option<&Tensor>,
) -> CoreResult<Var> {
    let w1 = tape.param(params, head.w1)?;
    let b1 = tape.param(params, head.b1)?;
    let w2 = tape.param(params, head.w2)?;
    let b2 = tape.param(params, head.b2)?;
    let a1 = tape.matvec(w1, latent)?;
    let a1 = tape.add(a1, b1)?;
    let mut h = tape.relu(a1)?;
    if let Some(mask) = dropout_mask {
        h = tape.mul_mask(h, mask.clone())?;
    }
    let out = tape.matvec(w2, h)?;
    tape.add(out, b2)
}

/// Forward products needed by training and prediction.
pub struct Forward {
    /// One scalar prediction node per head.
    pub predictions: Vec<Var>,
    /// Mean reconstruction MSE over the unrolled steps (`ConvAuto` only).
    pub reconstruction: Option<Var>,
}

impl Network {
    /// Time-domain baseline: window -> LSTM(hidden) -> dense -> scalar.
    pub fn lstm_baseline(window_len: usize, hidden: usize, rng: &mut ChaCha8Rng) -> CoreResult<Self> {
        if window_len < 2 || hidden < 1 {
            return Err(CoreError::ConfigError(format!(
                "baseline needs window_len >= 2 and hidden >= 1, got {window_len}, {hidden}"
            )));
        }
        let mut params = ParamSet::new();
        let cell = LstmCell::init(&mut params, "lstm", 1, hidden, rng);
        let limit = crate::math::sqrt(6.0 / (hidden + 1) as f64);
        let out_w = params.add(
            "out.w",
            Tensor::from_vec(
                &[1, hidden],
                (0..hidden).map(|_| rng.random_range(-limit..limit)).collect(),
            )?,
        );
        let out_b = params.add("out.b", Tensor::zeros(&[1]));
        Ok(Self {
            params,
            input_shape: (1, window_len, 1),
            n_heads: 1,
            body: Body::Lstm { cell, out_w, out_b },
        })
    }

    /// ConvLSTM stacked autoencoder over an
    /// `(image_h, steps, in_channels)` input with `n_heads` MLP outputs.
    #[allow(clippy::too_many_arguments)]
    pub fn conv_autoencoder(
        image_h: usize,
        steps: usize,
        in_channels: usize,
        encoder_filters: &[usize],
        kernel: (usize, usize),
        mlp_hidden: usize,
        n_heads: usize,
        rng: &mut ChaCha8Rng,
    ) -> CoreResult<Self> {
        if encoder_filters.is_empty() {
            return Err(CoreError::ConfigError("encoder_filters must be non-empty".into()));
        }
        if kernel.0 % 2 == 0 || kernel.1 % 2 == 0 {
            return Err(CoreError::ConfigError(format!(
                "kernel dims must be odd, got {:?}",
                kernel
            )));
        }
        if mlp_hidden < 1 || n_heads < 1 || image_h < 1 || steps < 1 || in_channels < 1 {
            return Err(CoreError::ConfigError("all network dimensions must be >= 1".into()));
        }
        if encoder_filters.iter().any(|&f| f < 1) {
            return Err(CoreError::ConfigError("encoder filter counts must be >= 1".into()));
        }

        let mut params = ParamSet::new();
        let mut encoder = Vec::with_capacity(encoder_filters.len());
        let mut cin = in_channels;
        for (i, &cout) in encoder_filters.iter().enumerate() {
            encoder.push(ConvLstmCell::init(
                &mut params,
                &format!("enc{i}"),
                kernel,
                cin,
                cout,
                image_h,
                1,
                rng,
            ));
            cin = cout;
        }

        // Mirrored decoder: channel path f_L -> f_{L-1} -> ... -> f_1 -> f_1,
        // then a linear 1x1 projection back to the input channels.
        let mut decoder = Vec::with_capacity(encoder_filters.len());
        let mut dec_in = *encoder_filters.last().expect("non-empty");
        for i in 0..encoder_filters.len() {
            let dec_out = if i + 1 < encoder_filters.len() {
                encoder_filters[encoder_filters.len() - 2 - i]
            } else {
                encoder_filters[0]
            };
            decoder.push(ConvLstmCell::init(
                &mut params,
                &format!("dec{i}"),
                kernel,
                dec_in,
                dec_out,
                image_h,
                1,
                rng,
            ));
            dec_in = dec_out;
        }
        let proj_limit = crate::math::sqrt(6.0 / (dec_in + in_channels) as f64);
        let proj_w = params.add(
            "recon.w",
            Tensor::from_vec(
                &[1, 1, dec_in, in_channels],
                (0..dec_in * in_channels)
                    .map(|_| rng.random_range(-proj_limit..proj_limit))
                    .collect(),
            )?,
        );
        let proj_b = params.add("recon.b", Tensor::zeros(&[in_channels]));

        let latent_len = image_h * encoder_filters.last().unwrap();
        let mut heads = Vec::with_capacity(n_heads);
        for h in 0..n_heads {
            let l1 = crate::math::sqrt(6.0 / (latent_len + mlp_hidden) as f64);
            let w1 = params.add(
                &format!("head{h}.w1"),
                Tensor::from_vec(
                    &[mlp_hidden, latent_len],
                    (0..mlp_hidden * latent_len)
                        .map(|_| rng.random_range(-l1..l1))
                        .collect(),
                )?,
            );
            let b1 = params.add(&format!("head{h}.b1"), Tensor::zeros(&[mlp_hidden]));
            let l2 = crate::math::sqrt(6.0 / (mlp_hidden + 1) as f64);
            let w2 = params.add(
                &format!("head{h}.w2"),
                Tensor::from_vec(
                    &[1, mlp_hidden],
                    (0..mlp_hidden).map(|_| rng.random_range(-l2..l2)).collect(),
                )?,
            );
            let b2 = params.add(&format!("head{h}.b2"), Tensor::zeros(&[1]));
            heads.push(MlpHead { w1, b1, w2, b2 });
        }

        Ok(Self {
            params,
            input_shape: (image_h, steps, in_channels),
            n_heads,
            body: Body::ConvAuto {
                encoder,
                decoder,
                proj_w,
                proj_b,
                heads,
            },
        })
    }

    pub fn mlp_hidden_len(&self) -> usize {
        match &self.body {
            Body::Lstm { .. } => 0,
            Body::ConvAuto { heads, .. } => {
                // All heads share the hidden width.
                heads
                    .first()
                    .map(|h| self.params.value(h.b1).len())
                    .unwrap_or(0)
            }
        }
    }

    pub fn latent_len(&self) -> usize {
        match &self.body {
            Body::Lstm { cell, .. } => cell.hidden_size,
            Body::ConvAuto { encoder, .. } => {
                self.input_shape.0 * encoder.last().map(|c| c.out_channels).unwrap_or(0)
            }
        }
    }

    fn check_input(&self, input: &Tensor) -> CoreResult<()> {
        let (h, steps, c) = self.input_shape;
        let expected: &[usize] = &[h, steps, c];
        if input.shape() != expected {
            return Err(CoreError::ShapeMismatch {
                op: "network_forward",
                detail: format!("expected {:?}, got {:?}", expected, input.shape()),
            });
        }
        Ok(())
    }

    /// Extracts time column `t` as an `[h, 1, c]` tensor.
    fn column(input: &Tensor, t: usize) -> Tensor {
        let (h, steps, c) = (input.shape()[0], input.shape()[1], input.shape()[2]);
        let mut data = Vec::with_capacity(h * c);
        for i in 0..h {
            let base = (i * steps + t) * c;
            data.extend_from_slice(&input.data()[base..base + c]);
        }
        Tensor::from_vec(&[h, 1, c], data).expect("column shape consistent")
    }

    /// Builds the forward graph for one sample.
    ///
    /// `with_reconstruction` controls whether the decoder runs (skipped when
    /// the auxiliary weight is zero); `dropout_masks`, when given, holds one
    /// mask per head applied to the MLP hidden layer.
    pub fn forward(
        &self,
        tape: &mut Tape,
        input: &Tensor,
        with_reconstruction: bool,
        dropout_masks: Option<&[Tensor]>,
    ) -> CoreResult<Forward> {
        self.check_input(input)?;
        match &self.body {
            Body::Lstm { cell, out_w, out_b } => {
                let vars = cell.bind(tape, &self.params)?;
                let (h0, c0) = cell.zero_state();
                let mut h = tape.constant(h0)?;
                let mut c = tape.constant(c0)?;
                let steps = self.input_shape.1;
                for t in 0..steps {
                    let x = tape.constant(Tensor::from_vec(&[1], alloc::vec![input.data()[t]])?)?;
                    let (nh, nc) = vars.step(tape, x, h, c)?;
                    h = nh;
                    c = nc;
                }
                let w = tape.param(&self.params, *out_w)?;
                let b = tape.param(&self.params, *out_b)?;
                let y = tape.matvec(w, h)?;
                let y = tape.add(y, b)?;
                Ok(Forward {
                    predictions: alloc::vec![y],
                    reconstruction: None,
                })
            }
            Body::ConvAuto {
                encoder,
                decoder,
                proj_w,
                proj_b,
                heads,
            } => {
                let steps = self.input_shape.1;
                let columns: Vec<Var> = (0..steps)
                    .map(|t| tape.constant(Self::column(input, t)))
                    .collect::<CoreResult<_>>()?;

                // Encoder stack: each layer consumes the previous layer's
                // hidden sequence.
                let mut sequence = columns.clone();
                let mut final_hidden = None;
                for cell in encoder {
                    let vars = cell.bind(tape, &self.params)?;
                    let (h0, c0) = cell.zero_state();
                    let mut h = tape.constant(h0)?;
                    let mut c = tape.constant(c0)?;
                    let mut outputs = Vec::with_capacity(steps);
                    for &x in &sequence {
                        let (nh, nc) = vars.step(tape, x, h, c)?;
                        h = nh;
                        c = nc;
                        outputs.push(h);
                    }
                    final_hidden = Some(h);
                    sequence = outputs;
                }
                let latent_src = final_hidden.expect("encoder non-empty");
                let latent = tape.reshape(latent_src, &[self.latent_len()])?;

                let reconstruction = if with_reconstruction {
                    let mut dec_sequence = sequence.clone();
                    for cell in decoder {
                        let vars = cell.bind(tape, &self.params)?;
                        let (h0, c0) = cell.zero_state();
                        let mut h = tape.constant(h0)?;
                        let mut c = tape.constant(c0)?;
                        let mut outputs = Vec::with_capacity(steps);
                        for &x in &dec_sequence {
                            let (nh, nc) = vars.step(tape, x, h, c)?;
                            h = nh;
                            c = nc;
                            outputs.push(h);
                        }
                        dec_sequence = outputs;
                    }
                    let pw = tape.param(&self.params, *proj_w)?;
                    let pb = tape.param(&self.params, *proj_b)?;
                    let mut total: Option<Var> = None;
                    for (t, &dec_h) in dec_sequence.iter().enumerate() {
                        let recon = tape.conv2d_same(dec_h, pw)?;
                        let recon = tape.add_bias(recon, pb)?;
                        let err = tape.mse(recon, columns[t])?;
                        total = Some(match total {
                            Some(acc) => tape.add(acc, err)?,
                            None => err,
                        });
                    }
                    let total = total.expect("steps >= 1");
                    Some(tape.scale(total, 1.0 / steps as f64)?)
                } else {
                    None
                };

                let mut predictions = Vec::with_capacity(heads.len());
                for (i, head) in heads.iter().enumerate() {
                    let mask = dropout_masks.map(|m| &m[i]);
                    predictions.push(relu_mlp(tape, &self.params, head, latent, mask)?);
                }
                Ok(Forward {
                    predictions,
                    reconstruction,
                })
            }
        }
    }

    /// Inference: per-head scalar outputs in the network's training units.
    pub fn predict_one(&self, input: &Tensor) -> CoreResult<Vec<f64>> {
        let mut tape = Tape::new();
        let fwd = self.forward(&mut tape, input, false, None)?;
        Ok(fwd
            .predictions
            .iter()
            .map(|&v| tape.value(v).data()[0])
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::SeedableRng;

    #[test]
    fn baseline_lstm_emits_one_scalar() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let net = Network::lstm_baseline(12, 8, &mut rng).unwrap();
        let input = Tensor::from_vec(&[1, 12, 1], (0..12).map(|i| i as f64 * 0.1).collect()).unwrap();
        let out = net.predict_one(&input).unwrap();
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn baseline_with_zero_output_layer_predicts_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut net = Network::lstm_baseline(12, 8, &mut rng).unwrap();
        // Zero the dense output layer only.
        let ids: Vec<_> = net.params.ids().collect();
        for id in ids {
            if net.params.name(id).starts_with("out.") {
                net.params.value_mut(id).data_mut().iter_mut().for_each(|v| *v = 0.0);
            }
        }
        let input = Tensor::from_vec(&[1, 12, 1], vec![3.0; 12]).unwrap();
        assert_eq!(net.predict_one(&input).unwrap(), vec![0.0]);
    }

    #[test]
    fn conv_autoencoder_latent_is_scales_times_last_filter() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net =
            Network::conv_autoencoder(16, 12, 1, &[16, 8], (3, 1), 64, 1, &mut rng).unwrap();
        assert_eq!(net.latent_len(), 128);
        let input = Tensor::from_vec(&[16, 12, 1], vec![0.25; 192]).unwrap();
        let out = net.predict_one(&input).unwrap();
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn two_headed_network_emits_two_scalars() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let net = Network::conv_autoencoder(8, 6, 3, &[4, 2], (3, 1), 16, 2, &mut rng).unwrap();
        let input =
            Tensor::from_vec(&[8, 6, 3], (0..144).map(|i| (i as f64 * 0.01).sin()).collect())
                .unwrap();
        let out = net.predict_one(&input).unwrap();
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn input_shape_is_validated() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let net = Network::conv_autoencoder(8, 6, 1, &[4], (3, 1), 16, 1, &mut rng).unwrap();
        let wrong = Tensor::from_vec(&[8, 5, 1], vec![0.0; 40]).unwrap();
        assert!(matches!(
            net.predict_one(&wrong),
            Err(CoreError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn even_kernel_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        assert!(matches!(
            Network::conv_autoencoder(8, 6, 1, &[4], (2, 1), 16, 1, &mut rng),
            Err(CoreError::ConfigError(_))
        ));
    }

    #[test]
    fn reconstruction_loss_runs_and_is_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut net = Network::conv_autoencoder(6, 5, 2, &[4, 3], (3, 1), 8, 1, &mut rng).unwrap();
        let input = Tensor::from_vec(
            &[6, 5, 2],
            (0..60).map(|i| (i as f64 * 0.13).cos()).collect(),
        )
        .unwrap();
        let mut tape = Tape::new();
        let fwd = net.forward(&mut tape, &input, true, None).unwrap();
        let rec = fwd.reconstruction.expect("requested reconstruction");
        let target = tape
            .constant(Tensor::from_vec(&[1], vec![0.0]).unwrap())
            .unwrap();
        let pred_err = tape.mse(fwd.predictions[0], target).unwrap();
        let scaled = tape.scale(rec, 0.1).unwrap();
        let loss = tape.add(pred_err, scaled).unwrap();
        tape.backward(loss, &mut net.params).unwrap();
        // Decoder parameters received gradient through the reconstruction.
        let mut dec_grad = 0.0;
        for id in net.params.ids() {
            if net.params.name(id).starts_with("dec0") {
                dec_grad += net.params.grad(id).data().iter().map(|g| g.abs()).sum::<f64>();
            }
        }
        assert!(dec_grad > 0.0);
    }
}
