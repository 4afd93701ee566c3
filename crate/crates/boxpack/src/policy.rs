//! Pointer-network policy over packing orders.
//!
//! The actor embeds each object's dimensions with a shared width-1
//! convolution (a per-object linear map), runs a GRU over the sequence of
//! chosen embeddings, and scores the remaining objects at every step with
//! additive attention. Already-chosen objects are masked out, so a full
//! decode always yields a permutation. The critic reuses the actor's
//! embedding layer, stacks three more width-1 convolutions, and mean-pools
//! to predict the expected packing cost of an instance.
//!
//! Parameter count is independent of the object count: the same weights
//! score 10 or 70 objects.

use crate::error::{Error, Result};
use crate::instance::{Instance, PackingOrder};
use crate::mat::{dot, sigmoid, Mat};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Network shape and initialization seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Input channels: 2 or 3 object dimensions.
    pub m: usize,
    /// Embedding and hidden width.
    pub d_h: usize,
    /// Seed for the initial weight draw.
    pub init_seed: u64,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m != 2 && self.m != 3 {
            return Err(Error::Config(format!("model m must be 2 or 3, got {}", self.m)));
        }
        if self.d_h == 0 {
            return Err(Error::Config("d_h must be >= 1".into()));
        }
        Ok(())
    }
}

/// Shared object embedding: `e_j = W s_j + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    pub w: Mat,
    pub b: Vec<f64>,
}

/// Gated recurrent unit with input and hidden width `d_h`.
///
/// z = sigmoid(W_z y + U_z h + b_z)
/// r = sigmoid(W_r y + U_r h + b_r)
/// n = tanh(W_n y + U_n (r .* h) + b_n)
/// h' = (1 - z) .* n + z .* h
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GruParams {
    pub w_z: Mat,
    pub u_z: Mat,
    pub b_z: Vec<f64>,
    pub w_r: Mat,
    pub u_r: Mat,
    pub b_r: Vec<f64>,
    pub w_n: Mat,
    pub u_n: Mat,
    pub b_n: Vec<f64>,
}

/// Additive attention scoring: `u_j = v . tanh(W1 e_j + W2 h)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionParams {
    pub w1: Mat,
    pub w2: Mat,
    pub v: Vec<f64>,
}

/// Every learnable tensor of the actor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorParams {
    pub encoder: EncoderParams,
    pub gru: GruParams,
    pub attention: AttentionParams,
    /// Learned initial hidden state.
    pub h0: Vec<f64>,
}

/// Critic layers above the shared embedding: three more width-1
/// convolutions narrowing d_h -> d_h -> d_h -> 1, rectified between
/// layers, mean-pooled into a scalar value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticTail {
    pub w2: Mat,
    pub b2: Vec<f64>,
    pub w3: Mat,
    pub b3: Vec<f64>,
    pub w4: Mat,
    pub b4: Vec<f64>,
}

/// Actor and critic together. The embedding layer lives in `actor` and is
/// the critic's first layer as well; there is exactly one copy of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub config: ModelConfig,
    pub actor: ActorParams,
    pub critic: CriticTail,
}

impl EncoderParams {
    pub fn zeros(d_h: usize, m: usize) -> Self {
        Self { w: Mat::zeros(d_h, m), b: vec![0.0; d_h] }
    }
}

impl GruParams {
    pub fn zeros(d: usize) -> Self {
        Self {
            w_z: Mat::zeros(d, d),
            u_z: Mat::zeros(d, d),
            b_z: vec![0.0; d],
            w_r: Mat::zeros(d, d),
            u_r: Mat::zeros(d, d),
            b_r: vec![0.0; d],
            w_n: Mat::zeros(d, d),
            u_n: Mat::zeros(d, d),
            b_n: vec![0.0; d],
        }
    }
}

impl AttentionParams {
    pub fn zeros(d: usize) -> Self {
        Self { w1: Mat::zeros(d, d), w2: Mat::zeros(d, d), v: vec![0.0; d] }
    }
}

impl ActorParams {
    /// All-zero parameter set; used as a gradient accumulator.
    pub fn zeros(config: &ModelConfig) -> Self {
        Self {
            encoder: EncoderParams::zeros(config.d_h, config.m),
            gru: GruParams::zeros(config.d_h),
            attention: AttentionParams::zeros(config.d_h),
            h0: vec![0.0; config.d_h],
        }
    }
}

impl CriticTail {
    /// All-zero layer stack; used as a gradient accumulator.
    pub fn zeros(d: usize) -> Self {
        Self {
            w2: Mat::zeros(d, d),
            b2: vec![0.0; d],
            w3: Mat::zeros(d, d),
            b3: vec![0.0; d],
            w4: Mat::zeros(1, d),
            b4: vec![0.0; 1],
        }
    }
}

impl Model {
    /// Fresh model: weights uniform in [-1/sqrt(d_h), 1/sqrt(d_h)] drawn
    /// in declaration order from a ChaCha8 stream seeded by `init_seed`;
    /// biases and the initial hidden state start at zero.
    pub fn init(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let (m, d) = (config.m, config.d_h);
        let bound = 1.0 / (d as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(config.init_seed);
        let draw = |rng: &mut ChaCha8Rng, rows: usize, cols: usize| -> Mat {
            let mut mat = Mat::zeros(rows, cols);
            for v in &mut mat.data {
                *v = rng.gen_range(-bound..bound);
            }
            mat
        };

        let encoder = EncoderParams { w: draw(&mut rng, d, m), b: vec![0.0; d] };
        let gru = GruParams {
            w_z: draw(&mut rng, d, d),
            u_z: draw(&mut rng, d, d),
            b_z: vec![0.0; d],
            w_r: draw(&mut rng, d, d),
            u_r: draw(&mut rng, d, d),
            b_r: vec![0.0; d],
            w_n: draw(&mut rng, d, d),
            u_n: draw(&mut rng, d, d),
            b_n: vec![0.0; d],
        };
        let attention = AttentionParams {
            w1: draw(&mut rng, d, d),
            w2: draw(&mut rng, d, d),
            v: draw(&mut rng, 1, d).data,
        };
        let critic = CriticTail {
            w2: draw(&mut rng, d, d),
            b2: vec![0.0; d],
            w3: draw(&mut rng, d, d),
            b3: vec![0.0; d],
            w4: draw(&mut rng, 1, d),
            b4: vec![0.0; 1],
        };
        Ok(Self { config, actor: ActorParams { encoder, gru, attention, h0: vec![0.0; d] }, critic })
    }
}

/// Raw per-object feature rows: the integer dimensions as floats.
pub fn object_features(instance: &Instance) -> Vec<Vec<f64>> {
    instance
        .objects()
        .iter()
        .map(|o| o.dims().iter().map(|&d| d as f64).collect())
        .collect()
}

/// Embeds every object. Rows depend only on the object's own dimensions,
/// so identical objects embed identically and reordering objects reorders
/// rows without changing them.
pub fn encode(instance: &Instance, actor: &ActorParams) -> Result<Vec<Vec<f64>>> {
    if instance.m() != actor.encoder.w.cols {
        return Err(Error::Config(format!(
            "instance has {} dims per object, encoder expects {}",
            instance.m(),
            actor.encoder.w.cols
        )));
    }
    Ok(object_features(instance)
        .iter()
        .map(|s| {
            let mut e = actor.encoder.w.matvec(s);
            for (ei, bi) in e.iter_mut().zip(&actor.encoder.b) {
                *ei += bi;
            }
            e
        })
        .collect())
}

/// Attention scores of every object row against the decoder state.
pub fn attention_logits(e: &[Vec<f64>], h: &[f64], att: &AttentionParams) -> Vec<f64> {
    let w2h = att.w2.matvec(h);
    e.iter()
        .map(|ej| {
            let mut pre = att.w1.matvec(ej);
            for (p, q) in pre.iter_mut().zip(&w2h) {
                *p = (*p + q).tanh();
            }
            dot(&att.v, &pre)
        })
        .collect()
}

/// Log-probabilities with masked entries pinned to negative infinity and
/// the rest normalized to sum to one. Max-subtraction keeps the
/// exponentials in range.
pub fn masked_log_softmax(logits: &[f64], masked: &[bool]) -> Result<Vec<f64>> {
    debug_assert_eq!(logits.len(), masked.len());
    let mut max = f64::NEG_INFINITY;
    for (l, &m) in logits.iter().zip(masked) {
        if !m && *l > max {
            max = *l;
        }
    }
    if max == f64::NEG_INFINITY {
        return Err(Error::Contract("all positions are masked".into()));
    }
    let mut sum = 0.0;
    for (l, &m) in logits.iter().zip(masked) {
        if !m {
            sum += (l - max).exp();
        }
    }
    // Normalize the shifted logits; subtracting an already-shifted max
    // keeps full precision even for huge raw logits.
    let log_sum = sum.ln();
    Ok(logits
        .iter()
        .zip(masked)
        .map(|(l, &m)| if m { f64::NEG_INFINITY } else { (l - max) - log_sum })
        .collect())
}

/// One GRU transition; returns the new hidden state.
pub fn gru_step(gru: &GruParams, y: &[f64], h: &[f64]) -> Vec<f64> {
    let d = h.len();
    let mut z = gru.w_z.matvec(y);
    let uz = gru.u_z.matvec(h);
    let mut r = gru.w_r.matvec(y);
    let ur = gru.u_r.matvec(h);
    for i in 0..d {
        z[i] = sigmoid(z[i] + uz[i] + gru.b_z[i]);
        r[i] = sigmoid(r[i] + ur[i] + gru.b_r[i]);
    }
    let c: Vec<f64> = r.iter().zip(h).map(|(ri, hi)| ri * hi).collect();
    let mut n = gru.w_n.matvec(y);
    let un = gru.u_n.matvec(&c);
    for i in 0..d {
        n[i] = (n[i] + un[i] + gru.b_n[i]).tanh();
    }
    (0..d).map(|i| (1.0 - z[i]) * n[i] + z[i] * h[i]).collect()
}

/// Whether a decode samples the distribution or follows its mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecodeMode {
    /// Draw each step from the masked distribution (training).
    Sample,
    /// Argmax with lowest-index tie-break (testing); deterministic.
    Greedy,
}

/// A decoded packing order with its per-step log-probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeTrace {
    pub order: PackingOrder,
    pub step_log_probs: Vec<f64>,
    pub mode: DecodeMode,
}

impl DecodeTrace {
    /// Joint log-probability of the whole order.
    pub fn total_log_prob(&self) -> f64 {
        self.step_log_probs.iter().sum()
    }
}

/// Picks an index from masked log-probabilities.
fn choose<R: Rng>(log_probs: &[f64], mode: DecodeMode, rng: &mut R) -> usize {
    match mode {
        DecodeMode::Greedy => {
            let mut best = 0;
            let mut best_lp = f64::NEG_INFINITY;
            for (j, &lp) in log_probs.iter().enumerate() {
                if lp > best_lp {
                    best = j;
                    best_lp = lp;
                }
            }
            best
        }
        DecodeMode::Sample => {
            let draw: f64 = rng.gen_range(0.0..1.0);
            let mut cum = 0.0;
            let mut last_unmasked = 0;
            for (j, &lp) in log_probs.iter().enumerate() {
                if lp == f64::NEG_INFINITY {
                    continue;
                }
                last_unmasked = j;
                cum += lp.exp();
                if draw < cum {
                    return j;
                }
            }
            // Rounding can leave cum marginally below 1; fall back to the
            // last candidate.
            last_unmasked
        }
    }
}

/// One decode transition: advances the hidden state, scores and masks,
/// then picks the next object. Returns (chosen index, its log-prob, new
/// hidden state).
pub fn decode_step<R: Rng>(
    e: &[Vec<f64>],
    h: &[f64],
    selected: &[bool],
    y: &[f64],
    actor: &ActorParams,
    mode: DecodeMode,
    rng: &mut R,
) -> Result<(usize, f64, Vec<f64>)> {
    let h_next = gru_step(&actor.gru, y, h);
    let logits = attention_logits(e, &h_next, &actor.attention);
    let log_probs = masked_log_softmax(&logits, selected)?;
    let idx = choose(&log_probs, mode, rng);
    Ok((idx, log_probs[idx], h_next))
}

/// Decodes a full packing order for `instance`. Greedy mode ignores the
/// RNG and is deterministic.
pub fn decode<R: Rng>(
    instance: &Instance,
    actor: &ActorParams,
    mode: DecodeMode,
    rng: &mut R,
) -> Result<DecodeTrace> {
    let n = instance.len();
    let e = encode(instance, actor)?;
    let d = actor.h0.len();
    let mut h = actor.h0.clone();
    let mut y = vec![0.0; d];
    let mut selected = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut lps = Vec::with_capacity(n);
    for _ in 0..n {
        let (idx, lp, h_next) = decode_step(&e, &h, &selected, &y, actor, mode, rng)?;
        selected[idx] = true;
        order.push(idx);
        lps.push(lp);
        h = h_next;
        y = e[idx].clone();
    }
    Ok(DecodeTrace {
        order: PackingOrder::new(order, n)?,
        step_log_probs: lps,
        mode,
    })
}

/// Greedy decode without threading an RNG through.
pub fn decode_greedy(instance: &Instance, actor: &ActorParams) -> Result<DecodeTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    decode(instance, actor, DecodeMode::Greedy, &mut rng)
}

/// Log-probability the policy assigns to a specific order: the same
/// forward pass with each step's choice forced.
pub fn log_prob_of_order(
    instance: &Instance,
    actor: &ActorParams,
    order: &PackingOrder,
) -> Result<f64> {
    if order.len() != instance.len() {
        return Err(Error::Contract("order length does not match instance".into()));
    }
    let e = encode(instance, actor)?;
    let d = actor.h0.len();
    let mut h = actor.h0.clone();
    let mut y = vec![0.0; d];
    let mut selected = vec![false; instance.len()];
    let mut total = 0.0;
    for &idx in order.indices() {
        let h_next = gru_step(&actor.gru, &y, &h);
        let logits = attention_logits(&e, &h_next, &actor.attention);
        let log_probs = masked_log_softmax(&logits, &selected)?;
        total += log_probs[idx];
        selected[idx] = true;
        h = h_next;
        y = e[idx].clone();
    }
    Ok(total)
}

/// Critic forward pass: shared embedding, three rectified layers, mean
/// pool. Permutation-invariant in the objects.
pub fn critic_value(instance: &Instance, actor: &ActorParams, critic: &CriticTail) -> Result<f64> {
    let e = encode(instance, actor)?;
    let mut acc = 0.0;
    for ej in &e {
        let g1: Vec<f64> = ej.iter().map(|&x| x.max(0.0)).collect();
        let mut a2 = critic.w2.matvec(&g1);
        for (x, b) in a2.iter_mut().zip(&critic.b2) {
            *x = (*x + b).max(0.0);
        }
        let mut a3 = critic.w3.matvec(&a2);
        for (x, b) in a3.iter_mut().zip(&critic.b3) {
            *x = (*x + b).max(0.0);
        }
        acc += dot(critic.w4.row(0), &a3) + critic.b4[0];
    }
    Ok(acc / e.len() as f64)
}
