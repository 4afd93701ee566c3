//! Hand-written backward passes for the actor and critic losses, plus
//! flat parameter views for the optimizer and the finite-difference
//! tests.
//!
//! The actor loss is `advantage * sum_t log P(choice_t)` with the
//! advantage treated as a constant, so its gradient never touches the
//! critic stack. The critic loss is `(R - V)^2` and its gradient flows
//! through the critic layers into the shared embedding. Both passes
//! replay the forward computation, cache activations, then walk the chain
//! rule backwards through attention, GRU, and embedding.

use crate::error::{Error, Result};
use crate::instance::{Instance, PackingOrder};
use crate::mat::{axpy, dot, Mat};
use crate::policy::{
    encode, masked_log_softmax, object_features, ActorParams, CriticTail, EncoderParams,
    ModelConfig,
};

/// Number of scalars in the actor group.
pub fn actor_flat_len(config: &ModelConfig) -> usize {
    let (d, m) = (config.d_h, config.m);
    // encoder + 6 GRU matrices + 3 GRU biases + attention + h0
    d * m + d + 6 * d * d + 3 * d + 2 * d * d + d + d
}

/// Number of scalars in the critic group (shared embedding included).
pub fn critic_flat_len(config: &ModelConfig) -> usize {
    let (d, m) = (config.d_h, config.m);
    d * m + d + d * d + d + d * d + d + d + 1
}

fn push_mat(out: &mut Vec<f64>, mat: &Mat) {
    out.extend_from_slice(&mat.data);
}

fn take(mat: &mut Mat, flat: &[f64], pos: &mut usize) {
    let len = mat.data.len();
    mat.data.copy_from_slice(&flat[*pos..*pos + len]);
    *pos += len;
}

fn take_vec(v: &mut [f64], flat: &[f64], pos: &mut usize) {
    v.copy_from_slice(&flat[*pos..*pos + v.len()]);
    *pos += v.len();
}

/// Serializes the actor parameters in a fixed order: embedding, GRU
/// gates, attention, initial hidden state.
pub fn flatten_actor(actor: &ActorParams) -> Vec<f64> {
    let mut out = Vec::new();
    push_mat(&mut out, &actor.encoder.w);
    out.extend_from_slice(&actor.encoder.b);
    push_mat(&mut out, &actor.gru.w_z);
    push_mat(&mut out, &actor.gru.u_z);
    out.extend_from_slice(&actor.gru.b_z);
    push_mat(&mut out, &actor.gru.w_r);
    push_mat(&mut out, &actor.gru.u_r);
    out.extend_from_slice(&actor.gru.b_r);
    push_mat(&mut out, &actor.gru.w_n);
    push_mat(&mut out, &actor.gru.u_n);
    out.extend_from_slice(&actor.gru.b_n);
    push_mat(&mut out, &actor.attention.w1);
    push_mat(&mut out, &actor.attention.w2);
    out.extend_from_slice(&actor.attention.v);
    out.extend_from_slice(&actor.h0);
    out
}

/// Rebuilds actor parameters from [`flatten_actor`]'s layout.
pub fn unflatten_actor(config: &ModelConfig, flat: &[f64]) -> Result<ActorParams> {
    if flat.len() != actor_flat_len(config) {
        return Err(Error::Contract(format!(
            "actor parameter vector has {} entries, expected {}",
            flat.len(),
            actor_flat_len(config)
        )));
    }
    let mut actor = ActorParams::zeros(config);
    let mut pos = 0;
    take(&mut actor.encoder.w, flat, &mut pos);
    take_vec(&mut actor.encoder.b, flat, &mut pos);
    take(&mut actor.gru.w_z, flat, &mut pos);
    take(&mut actor.gru.u_z, flat, &mut pos);
    take_vec(&mut actor.gru.b_z, flat, &mut pos);
    take(&mut actor.gru.w_r, flat, &mut pos);
    take(&mut actor.gru.u_r, flat, &mut pos);
    take_vec(&mut actor.gru.b_r, flat, &mut pos);
    take(&mut actor.gru.w_n, flat, &mut pos);
    take(&mut actor.gru.u_n, flat, &mut pos);
    take_vec(&mut actor.gru.b_n, flat, &mut pos);
    take(&mut actor.attention.w1, flat, &mut pos);
    take(&mut actor.attention.w2, flat, &mut pos);
    take_vec(&mut actor.attention.v, flat, &mut pos);
    take_vec(&mut actor.h0, flat, &mut pos);
    debug_assert_eq!(pos, flat.len());
    Ok(actor)
}

/// Serializes the critic group: shared embedding first, then the three
/// upper layers.
pub fn flatten_critic(encoder: &EncoderParams, tail: &CriticTail) -> Vec<f64> {
    let mut out = Vec::new();
    push_mat(&mut out, &encoder.w);
    out.extend_from_slice(&encoder.b);
    push_mat(&mut out, &tail.w2);
    out.extend_from_slice(&tail.b2);
    push_mat(&mut out, &tail.w3);
    out.extend_from_slice(&tail.b3);
    push_mat(&mut out, &tail.w4);
    out.extend_from_slice(&tail.b4);
    out
}

/// Rebuilds the critic group from [`flatten_critic`]'s layout.
pub fn unflatten_critic(
    config: &ModelConfig,
    flat: &[f64],
) -> Result<(EncoderParams, CriticTail)> {
    if flat.len() != critic_flat_len(config) {
        return Err(Error::Contract(format!(
            "critic parameter vector has {} entries, expected {}",
            flat.len(),
            critic_flat_len(config)
        )));
    }
    let mut encoder = EncoderParams::zeros(config.d_h, config.m);
    let mut tail = CriticTail::zeros(config.d_h);
    let mut pos = 0;
    take(&mut encoder.w, flat, &mut pos);
    take_vec(&mut encoder.b, flat, &mut pos);
    take(&mut tail.w2, flat, &mut pos);
    take_vec(&mut tail.b2, flat, &mut pos);
    take(&mut tail.w3, flat, &mut pos);
    take_vec(&mut tail.b3, flat, &mut pos);
    take(&mut tail.w4, flat, &mut pos);
    take_vec(&mut tail.b4, flat, &mut pos);
    debug_assert_eq!(pos, flat.len());
    Ok((encoder, tail))
}

pub fn l2_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Scales `x` down so its norm is at most `max_norm`.
pub fn clip_to_norm(x: &mut [f64], max_norm: f64) {
    let norm = l2_norm(x);
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        for v in x.iter_mut() {
            *v *= s;
        }
    }
}

/// Cached activations of one decode step, recorded during replay.
struct StepCache {
    /// GRU input (zeros at step 0, embedding of the previous pick after).
    y: Vec<f64>,
    h_in: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    /// r .* h_in, the candidate's hidden input.
    c: Vec<f64>,
    n: Vec<f64>,
    h_out: Vec<f64>,
    /// tanh rows of the attention for every unmasked object.
    att: Vec<Option<Vec<f64>>>,
    /// Selection probabilities; zero where masked.
    probs: Vec<f64>,
    chosen: usize,
}

/// Loss and gradient of `advantage * sum_t log P(order_t)` with respect
/// to every actor parameter. The advantage is a constant multiplier.
pub fn actor_loss_grad(
    instance: &Instance,
    actor: &ActorParams,
    order: &PackingOrder,
    advantage: f64,
) -> Result<(f64, ActorParams)> {
    let n = instance.len();
    if order.len() != n {
        return Err(Error::Contract("order length does not match instance".into()));
    }
    let d = actor.h0.len();
    let e = encode(instance, actor)?;
    let features = object_features(instance);

    // Forward replay with caches.
    let mut caches: Vec<StepCache> = Vec::with_capacity(n);
    let mut selected = vec![false; n];
    let mut h = actor.h0.clone();
    let mut y = vec![0.0; d];
    let mut total_lp = 0.0;
    for &chosen in order.indices() {
        // GRU, spelled out so every intermediate is kept.
        let gru = &actor.gru;
        let mut z = gru.w_z.matvec(&y);
        let uz = gru.u_z.matvec(&h);
        let mut r = gru.w_r.matvec(&y);
        let ur = gru.u_r.matvec(&h);
        for i in 0..d {
            z[i] = crate::mat::sigmoid(z[i] + uz[i] + gru.b_z[i]);
            r[i] = crate::mat::sigmoid(r[i] + ur[i] + gru.b_r[i]);
        }
        let c: Vec<f64> = r.iter().zip(&h).map(|(ri, hi)| ri * hi).collect();
        let mut ncand = gru.w_n.matvec(&y);
        let un = gru.u_n.matvec(&c);
        for i in 0..d {
            ncand[i] = (ncand[i] + un[i] + gru.b_n[i]).tanh();
        }
        let h_out: Vec<f64> =
            (0..d).map(|i| (1.0 - z[i]) * ncand[i] + z[i] * h[i]).collect();

        // Attention over unmasked objects.
        let att = &actor.attention;
        let w2h = att.w2.matvec(&h_out);
        let mut rows: Vec<Option<Vec<f64>>> = vec![None; n];
        let mut logits = vec![f64::NEG_INFINITY; n];
        for j in 0..n {
            if selected[j] {
                continue;
            }
            let mut pre = att.w1.matvec(&e[j]);
            for (p, q) in pre.iter_mut().zip(&w2h) {
                *p = (*p + q).tanh();
            }
            logits[j] = dot(&att.v, &pre);
            rows[j] = Some(pre);
        }
        let log_probs = masked_log_softmax(&logits, &selected)?;
        let probs: Vec<f64> =
            log_probs.iter().map(|&lp| if lp == f64::NEG_INFINITY { 0.0 } else { lp.exp() }).collect();
        total_lp += log_probs[chosen];

        caches.push(StepCache {
            y: y.clone(),
            h_in: h.clone(),
            z,
            r,
            c,
            n: ncand,
            h_out: h_out.clone(),
            att: rows,
            probs,
            chosen,
        });
        selected[chosen] = true;
        y = e[chosen].clone();
        h = h_out;
    }

    // Backward.
    let config = ModelConfig { m: instance.m(), d_h: d, init_seed: 0 };
    let mut g = ActorParams::zeros(&config);
    let mut de = vec![vec![0.0; d]; n];
    let mut dh_next = vec![0.0; d];

    for (t, cache) in caches.iter().enumerate().rev() {
        let att = &actor.attention;
        // d loss / d logit_j for this step's masked softmax.
        let mut dh_out = std::mem::take(&mut dh_next);
        let mut dm_sum = vec![0.0; d];
        for (j, row) in cache.att.iter().enumerate() {
            let Some(a) = row else { continue };
            let du = advantage * ((j == cache.chosen) as u8 as f64 - cache.probs[j]);
            if du == 0.0 {
                continue;
            }
            // Through the tanh into both attention inputs.
            let dm: Vec<f64> =
                a.iter().zip(&att.v).map(|(ai, vi)| du * vi * (1.0 - ai * ai)).collect();
            axpy(&mut g.attention.v, a, du);
            g.attention.w1.add_outer(&dm, &e[j], 1.0);
            axpy(&mut de[j], &att.w1.matvec_t(&dm), 1.0);
            axpy(&mut dm_sum, &dm, 1.0);
        }
        g.attention.w2.add_outer(&dm_sum, &cache.h_out, 1.0);
        axpy(&mut dh_out, &att.w2.matvec_t(&dm_sum), 1.0);

        // GRU backward: dh_out -> (dy, dh_in, gate parameter grads).
        let gru = &actor.gru;
        let d_ = d;
        let mut dh_in = vec![0.0; d_];
        let mut dy = vec![0.0; d_];
        let mut dz = vec![0.0; d_];
        let mut dn = vec![0.0; d_];
        for i in 0..d_ {
            dz[i] = dh_out[i] * (cache.h_in[i] - cache.n[i]);
            dn[i] = dh_out[i] * (1.0 - cache.z[i]);
            dh_in[i] += dh_out[i] * cache.z[i];
        }
        let dan: Vec<f64> = dn.iter().zip(&cache.n).map(|(dni, ni)| dni * (1.0 - ni * ni)).collect();
        g.gru.w_n.add_outer(&dan, &cache.y, 1.0);
        g.gru.u_n.add_outer(&dan, &cache.c, 1.0);
        axpy(&mut g.gru.b_n, &dan, 1.0);
        axpy(&mut dy, &gru.w_n.matvec_t(&dan), 1.0);
        let dc = gru.u_n.matvec_t(&dan);
        let mut dr = vec![0.0; d_];
        for i in 0..d_ {
            dr[i] = dc[i] * cache.h_in[i];
            dh_in[i] += dc[i] * cache.r[i];
        }
        let daz: Vec<f64> =
            dz.iter().zip(&cache.z).map(|(dzi, zi)| dzi * zi * (1.0 - zi)).collect();
        let dar: Vec<f64> =
            dr.iter().zip(&cache.r).map(|(dri, ri)| dri * ri * (1.0 - ri)).collect();
        g.gru.w_z.add_outer(&daz, &cache.y, 1.0);
        g.gru.u_z.add_outer(&daz, &cache.h_in, 1.0);
        axpy(&mut g.gru.b_z, &daz, 1.0);
        axpy(&mut dy, &gru.w_z.matvec_t(&daz), 1.0);
        axpy(&mut dh_in, &gru.u_z.matvec_t(&daz), 1.0);
        g.gru.w_r.add_outer(&dar, &cache.y, 1.0);
        g.gru.u_r.add_outer(&dar, &cache.h_in, 1.0);
        axpy(&mut g.gru.b_r, &dar, 1.0);
        axpy(&mut dy, &gru.w_r.matvec_t(&dar), 1.0);
        axpy(&mut dh_in, &gru.u_r.matvec_t(&dar), 1.0);

        // The step's GRU input was the previous pick's embedding; step 0
        // fed a constant zero vector.
        if t > 0 {
            axpy(&mut de[caches[t - 1].chosen], &dy, 1.0);
        }
        dh_next = dh_in;
    }
    g.h0 = dh_next;

    // Embedding backward over the accumulated row gradients.
    for (j, dej) in de.iter().enumerate() {
        g.encoder.w.add_outer(dej, &features[j], 1.0);
        axpy(&mut g.encoder.b, dej, 1.0);
    }

    Ok((advantage * total_lp, g))
}

/// Loss `(reward - V)^2`, the value V, and gradients for the critic
/// group including the shared embedding.
pub fn critic_loss_grad(
    instance: &Instance,
    actor: &ActorParams,
    tail: &CriticTail,
    reward: f64,
) -> Result<(f64, f64, EncoderParams, CriticTail)> {
    let e = encode(instance, actor)?;
    let features = object_features(instance);
    let n = e.len();
    let d = actor.h0.len();

    struct Col {
        g1: Vec<f64>,
        a2: Vec<f64>,
        g2: Vec<f64>,
        a3: Vec<f64>,
        g3: Vec<f64>,
    }
    let mut cols = Vec::with_capacity(n);
    let mut value = 0.0;
    for ej in &e {
        let g1: Vec<f64> = ej.iter().map(|&x| x.max(0.0)).collect();
        let mut a2 = tail.w2.matvec(&g1);
        for (x, b) in a2.iter_mut().zip(&tail.b2) {
            *x += b;
        }
        let g2: Vec<f64> = a2.iter().map(|&x| x.max(0.0)).collect();
        let mut a3 = tail.w3.matvec(&g2);
        for (x, b) in a3.iter_mut().zip(&tail.b3) {
            *x += b;
        }
        let g3: Vec<f64> = a3.iter().map(|&x| x.max(0.0)).collect();
        value += dot(tail.w4.row(0), &g3) + tail.b4[0];
        cols.push(Col { g1, a2, g2, a3, g3 });
    }
    value /= n as f64;
    let loss = (reward - value) * (reward - value);

    let mut genc = EncoderParams::zeros(d, instance.m());
    let mut gtail = CriticTail::zeros(d);
    // dL/dV = -2 (reward - V); each column contributes V/n.
    let dv = -2.0 * (reward - value) / n as f64;
    for (j, col) in cols.iter().enumerate() {
        gtail.w4.add_outer(&[dv], &col.g3, 1.0);
        gtail.b4[0] += dv;
        let dg3: Vec<f64> = tail.w4.row(0).iter().map(|&w| w * dv).collect();
        let da3: Vec<f64> =
            dg3.iter().zip(&col.a3).map(|(g, &a)| if a > 0.0 { *g } else { 0.0 }).collect();
        gtail.w3.add_outer(&da3, &col.g2, 1.0);
        axpy(&mut gtail.b3, &da3, 1.0);
        let dg2 = tail.w3.matvec_t(&da3);
        let da2: Vec<f64> =
            dg2.iter().zip(&col.a2).map(|(g, &a)| if a > 0.0 { *g } else { 0.0 }).collect();
        gtail.w2.add_outer(&da2, &col.g1, 1.0);
        axpy(&mut gtail.b2, &da2, 1.0);
        let dg1 = tail.w2.matvec_t(&da2);
        let dej: Vec<f64> =
            dg1.iter().zip(&e[j]).map(|(g, &x)| if x > 0.0 { *g } else { 0.0 }).collect();
        genc.w.add_outer(&dej, &features[j], 1.0);
        axpy(&mut genc.b, &dej, 1.0);
    }
    Ok((loss, value, genc, gtail))
}

/// Smallest rectifier preactivation magnitude in the critic's forward
/// pass; the finite-difference tests skip parameter draws where this is
/// tiny, because the loss is not differentiable at a rectifier kink.
pub fn critic_kink_margin(instance: &Instance, actor: &ActorParams, tail: &CriticTail) -> Result<f64> {
    let e = encode(instance, actor)?;
    let mut margin = f64::INFINITY;
    for ej in &e {
        let g1: Vec<f64> = ej.iter().map(|&x| x.max(0.0)).collect();
        let mut a2 = tail.w2.matvec(&g1);
        for (x, b) in a2.iter_mut().zip(&tail.b2) {
            *x += b;
        }
        let g2: Vec<f64> = a2.iter().map(|&x| x.max(0.0)).collect();
        let mut a3 = tail.w3.matvec(&g2);
        for (x, b) in a3.iter_mut().zip(&tail.b3) {
            *x += b;
        }
        for &x in ej.iter().chain(&a2).chain(&a3) {
            margin = margin.min(x.abs());
        }
    }
    Ok(margin)
}
