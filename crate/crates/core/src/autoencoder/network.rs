use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
// unused only when another crate in the build links std
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::channel::NoiseVarianceModel;
use crate::constellation::{moments, normalize, Constellation};
use crate::metrics::POSTERIOR_FLOOR;
use crate::{Error, Result};

/// Negative-side slope of the decoder's hidden activation.
pub const LEAKY_RELU_SLOPE: f64 = 0.01;

/// Linear encoder without bias: one-hot index `i` selects row `i`, and the
/// rows are jointly scaled to unit average power.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    // row i is (weights[2i], weights[2i + 1])
    weights: Vec<f64>,
}

impl Encoder {
    pub fn from_points(points: &[Complex64]) -> Result<Self> {
        let m = points.len();
        if m == 0 || !m.is_power_of_two() {
            return Err(Error::InvalidCardinality(m));
        }
        Ok(Encoder {
            weights: points.iter().flat_map(|p| [p.re, p.im]).collect(),
        })
    }

    pub fn cardinality(&self) -> usize {
        self.weights.len() / 2
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    fn row(&self, i: usize) -> Complex64 {
        Complex64::new(self.weights[2 * i], self.weights[2 * i + 1])
    }

    pub fn rows(&self) -> Vec<Complex64> {
        (0..self.cardinality()).map(|i| self.row(i)).collect()
    }

    /// `1/sqrt(mean |row|^2)` over all rows.
    pub fn normalization_factor(&self) -> f64 {
        let p: f64 = self.weights.iter().map(|w| w * w).sum::<f64>() / self.cardinality() as f64;
        1.0 / p.sqrt()
    }

    pub fn forward(&self, index: usize) -> Result<Complex64> {
        if index >= self.cardinality() {
            return Err(Error::IndexOutOfRange {
                index,
                m: self.cardinality(),
            });
        }
        Ok(self.row(index) * self.normalization_factor())
    }

    /// The normalized constellation the encoder currently represents.
    pub fn constellation(&self) -> Result<Constellation> {
        normalize(&self.rows())
    }
}

/// `2 → M/2 → M` network: affine, leaky ReLU, affine, softmax.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoder {
    m: usize,
    hidden: usize,
    /// `w1[d * hidden + h]`, `d ∈ {re, im}`.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// `w2[h * m + k]`.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Decoder {
    pub fn zeros(m: usize) -> Self {
        let hidden = (m / 2).max(1);
        Decoder {
            m,
            hidden,
            w1: vec![0.0; 2 * hidden],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden * m],
            b2: vec![0.0; m],
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Self {
        let mut d = Decoder::zeros(m);
        let a1 = (6.0 / (2 + d.hidden) as f64).sqrt();
        let a2 = (6.0 / (d.hidden + m) as f64).sqrt();
        for w in d.w1.iter_mut() {
            *w = a1 * (2.0 * rng.random::<f64>() - 1.0);
        }
        for w in d.w2.iter_mut() {
            *w = a2 * (2.0 * rng.random::<f64>() - 1.0);
        }
        d
    }

    pub fn cardinality(&self) -> usize {
        self.m
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    fn activations(&self, y: Complex64, pre: &mut [f64], act: &mut [f64], probs: &mut [f64]) {
        let h = self.hidden;
        for j in 0..h {
            let a = self.w1[j] * y.re + self.w1[h + j] * y.im + self.b1[j];
            pre[j] = a;
            act[j] = if a > 0.0 { a } else { LEAKY_RELU_SLOPE * a };
        }
        probs.copy_from_slice(&self.b2);
        for (j, &a) in act.iter().enumerate() {
            let row = &self.w2[j * self.m..(j + 1) * self.m];
            for (z, w) in probs.iter_mut().zip(row) {
                *z += a * w;
            }
        }
        softmax_in_place(probs);
    }

    /// Posterior vector for one received sample.
    pub fn forward(&self, y: Complex64) -> Vec<f64> {
        let mut pre = vec![0.0; self.hidden];
        let mut act = vec![0.0; self.hidden];
        let mut probs = vec![0.0; self.m];
        self.activations(y, &mut pre, &mut act, &mut probs);
        probs
    }
}

pub(crate) fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

/// One batch of the training surrogate with every random draw recorded, so
/// the forward pass can be replayed exactly.
///
/// The channel output seen by the decoder is `(x + σ·ε_k)·e^{iφ_k}` where `x`
/// is the unit-power encoder output, `ε_k ~ CN(0, 1)` and
/// `σ² = noise.variance(moments(x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub indices: Vec<usize>,
    pub noise: Vec<Complex64>,
    pub phases: Vec<f64>,
    pub noise_model: NoiseVarianceModel,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    fn validate(&self, m: usize) -> Result<()> {
        if self.noise.len() != self.len() || self.phases.len() != self.len() {
            return Err(Error::LengthMismatch {
                left: self.len(),
                right: self.noise.len().min(self.phases.len()),
            });
        }
        if self.is_empty() {
            return Err(Error::InvalidParameter("empty batch".into()));
        }
        if let Some(&index) = self.indices.iter().find(|&&i| i >= m) {
            return Err(Error::IndexOutOfRange { index, m });
        }
        Ok(())
    }
}

/// Gradients with the same layout as the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub encoder: Vec<f64>,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Gradients {
    fn zeros(enc: &Encoder, dec: &Decoder) -> Self {
        Gradients {
            encoder: vec![0.0; enc.weights.len()],
            w1: vec![0.0; dec.w1.len()],
            b1: vec![0.0; dec.b1.len()],
            w2: vec![0.0; dec.w2.len()],
            b2: vec![0.0; dec.b2.len()],
        }
    }

    pub fn tensors(&self) -> [&[f64]; 5] {
        [&self.encoder, &self.w1, &self.b1, &self.w2, &self.b2]
    }
}

/// Decoder posteriors for every sample of a batch.
pub fn batch_posteriors(enc: &Encoder, dec: &Decoder, batch: &Batch) -> Result<Vec<Vec<f64>>> {
    let points = prepare(enc, dec, batch)?;
    let sigma = points.sigma;
    Ok(batch
        .indices
        .iter()
        .zip(&batch.noise)
        .zip(&batch.phases)
        .map(|((&i, &eps), &phi)| dec.forward((points.x[i] + eps * sigma) * Complex64::from_polar(1.0, phi)))
        .collect())
}

struct Prepared {
    scale: f64,
    x: Vec<Complex64>,
    sigma: f64,
}

fn prepare(enc: &Encoder, dec: &Decoder, batch: &Batch) -> Result<Prepared> {
    let m = enc.cardinality();
    if dec.cardinality() != m {
        return Err(Error::LengthMismatch {
            left: m,
            right: dec.cardinality(),
        });
    }
    batch.validate(m)?;
    let scale = enc.normalization_factor();
    let x: Vec<Complex64> = enc.rows().iter().map(|r| r * scale).collect();
    let variance = if batch.noise_model.depends_on_moments() {
        batch.noise_model.variance(moments(&x)?)
    } else {
        batch.noise_model.base
    };
    if !(variance >= 0.0) {
        return Err(Error::InvalidParameter(alloc::format!("noise variance {variance}")));
    }
    Ok(Prepared {
        scale,
        x,
        sigma: variance.sqrt(),
    })
}

/// Mean cross-entropy (nats) of the batch.
pub fn batch_loss(enc: &Encoder, dec: &Decoder, batch: &Batch) -> Result<f64> {
    let post = batch_posteriors(enc, dec, batch)?;
    crate::metrics::cross_entropy(&batch.indices, &post)
}

/// Mean cross-entropy of the batch and its exact gradient with respect to
/// every encoder and decoder weight, with the recorded draws held fixed.
///
/// The chain runs decoder → rotation `e^{iφ}` → additive noise → encoder
/// normalization. When the noise variance depends on the constellation
/// moments, the path through `σ(μ4, μ6)` is included too.
pub fn backward(enc: &Encoder, dec: &Decoder, batch: &Batch) -> Result<(f64, Gradients)> {
    let Prepared { scale, x, sigma } = prepare(enc, dec, batch)?;
    let m = enc.cardinality();
    let h = dec.hidden;
    let inv_b = 1.0 / batch.len() as f64;

    let mut g = Gradients::zeros(enc, dec);
    // dL/dx for each normalized point, and dL/dσ
    let mut gx = vec![Complex64::new(0.0, 0.0); m];
    let mut gsigma = 0.0;

    let mut pre = vec![0.0; h];
    let mut act = vec![0.0; h];
    let mut probs = vec![0.0; m];
    let mut dact = vec![0.0; h];
    let mut loss = 0.0;

    for ((&i, &eps), &phi) in batch.indices.iter().zip(&batch.noise).zip(&batch.phases) {
        let rot = Complex64::from_polar(1.0, phi);
        let y = (x[i] + eps * sigma) * rot;
        dec.activations(y, &mut pre, &mut act, &mut probs);

        let p = probs[i];
        if p < POSTERIOR_FLOOR {
            // the clamped loss is flat here
            loss -= POSTERIOR_FLOOR.ln();
            continue;
        }
        loss -= p.ln();

        // dz = (p - onehot) / B, stored in place of probs
        for v in probs.iter_mut() {
            *v *= inv_b;
        }
        probs[i] -= inv_b;
        let dz = &probs;

        for (k, d) in dz.iter().enumerate() {
            g.b2[k] += d;
        }
        for j in 0..h {
            let a = act[j];
            let row = &dec.w2[j * m..(j + 1) * m];
            let grow = &mut g.w2[j * m..(j + 1) * m];
            let mut back = 0.0;
            for ((gw, w), d) in grow.iter_mut().zip(row).zip(dz) {
                *gw += a * d;
                back += w * d;
            }
            dact[j] = if pre[j] > 0.0 { back } else { LEAKY_RELU_SLOPE * back };
        }
        let mut dy = Complex64::new(0.0, 0.0);
        for j in 0..h {
            let d = dact[j];
            g.w1[j] += y.re * d;
            g.w1[h + j] += y.im * d;
            g.b1[j] += d;
            dy.re += dec.w1[j] * d;
            dy.im += dec.w1[h + j] * d;
        }
        // y = R(φ)·u, so dL/du = R(−φ)·dL/dy; u = x + σε
        let du = dy * rot.conj();
        gx[i] += du;
        gsigma += du.re * eps.re + du.im * eps.im;
    }

    let nm = &batch.noise_model;
    if nm.depends_on_moments() && sigma > 0.0 {
        add_moment_gradient(&x, nm, sigma, gsigma, &mut gx);
    }

    // x_j = s·r_j with s = (mean |r|^2)^(-1/2):
    // dL/dr_j = s·gx_j − (s³/M)·(Σ_i gx_i·r_i)·r_j
    let rows = enc.rows();
    let dot: f64 = gx.iter().zip(&rows).map(|(a, r)| a.re * r.re + a.im * r.im).sum();
    let c = scale * scale * scale / m as f64 * dot;
    for (j, r) in rows.iter().enumerate() {
        g.encoder[2 * j] = scale * gx[j].re - c * r.re;
        g.encoder[2 * j + 1] = scale * gx[j].im - c * r.im;
    }

    Ok((loss * inv_b, g))
}

/// Adds `dL/dσ · dσ/dx_j` through `σ² = base + a·μ4(x) + b·μ6(x)`.
fn add_moment_gradient(x: &[Complex64], nm: &NoiseVarianceModel, sigma: f64, gsigma: f64, gx: &mut [Complex64]) {
    let m = x.len() as f64;
    let (mut s2, mut s4, mut s6) = (0.0, 0.0, 0.0);
    for p in x {
        let a = p.norm_sqr();
        s2 += a;
        s4 += a * a;
        s6 += a * a * a;
    }
    let dsig_dmu4 = nm.per_mu4 / (2.0 * sigma);
    let dsig_dmu6 = nm.per_mu6 / (2.0 * sigma);
    // dμ4/dx_j = (4M/S2²)(|x_j|² − S4/S2)·x_j
    // dμ6/dx_j = (6M²/S2³)(|x_j|⁴ − S6/S2)·x_j
    let c4 = 4.0 * m / (s2 * s2);
    let c6 = 6.0 * m * m / (s2 * s2 * s2);
    for (g, p) in gx.iter_mut().zip(x) {
        let a = p.norm_sqr();
        let dmu4 = c4 * (a - s4 / s2);
        let dmu6 = c6 * (a * a - s6 / s2);
        *g += p * (gsigma * (dsig_dmu4 * dmu4 + dsig_dmu6 * dmu6));
    }
}
