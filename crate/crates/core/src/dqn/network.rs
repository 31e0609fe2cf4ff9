//! Q(s, a) network: a small conv stack over the tile tensor, embeddings for
//! the action fields, and a dense head to one scalar.
//!
//! All parameters live in one flat vector so the optimizer, the target copy
//! and checkpoints treat them uniformly.

use serde::{Deserialize, Serialize};

use crate::env::{
    ActionEncoding, Observation, ACTION_TYPES, BINARY_ACTIONS, CHANNELS, ENTITY_TYPES, SCALARS, SUBTYPES,
    TERRAIN_TYPES, VIEW, WEAPON_TYPES,
};
use crate::rng::RngStream;

pub const CONV_CHANNELS: [usize; 4] = [CHANNELS, 16, 32, 64];
pub const KERNEL: usize = 3;
pub const EMBED_DIMS: [usize; 6] = [64, 16, 16, 32, 32, 32];
pub const EMBED_VOCAB: [usize; 6] = [ACTION_TYPES, BINARY_ACTIONS, SUBTYPES, WEAPON_TYPES, ENTITY_TYPES, TERRAIN_TYPES];
pub const CONV_OUT: usize = 64;
pub const EMBED_WIDTH: usize = 64 + 16 + 16 + 32 + 32 + 32;
/// Width of the concatenated input to the dense head.
pub const CONCAT: usize = CONV_OUT + EMBED_WIDTH + SCALARS;
pub const HIDDEN: [usize; 3] = [64, 32, 16];

/// Spatial side after each conv layer (valid padding): 7, 5, 3, 1.
const fn side(layer: usize) -> usize {
    VIEW - layer * (KERNEL - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub offset: usize,
    pub len: usize,
}

/// Offsets of each parameter tensor in the flat vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub conv_w: [Block; 3],
    pub conv_b: [Block; 3],
    pub embed: [Block; 6],
    pub fc_w: [Block; 4],
    pub fc_b: [Block; 4],
    pub total: usize,
}

impl Layout {
    pub fn new() -> Layout {
        let mut offset = 0;
        let mut take = |len: usize| {
            let b = Block { offset, len };
            offset += len;
            b
        };
        let mut conv_w = [Block { offset: 0, len: 0 }; 3];
        let mut conv_b = conv_w;
        for l in 0..3 {
            conv_w[l] = take(CONV_CHANNELS[l + 1] * CONV_CHANNELS[l] * KERNEL * KERNEL);
            conv_b[l] = take(CONV_CHANNELS[l + 1]);
        }
        let mut embed = [Block { offset: 0, len: 0 }; 6];
        for (i, e) in embed.iter_mut().enumerate() {
            *e = take(EMBED_VOCAB[i] * EMBED_DIMS[i]);
        }
        let dims = [CONCAT, HIDDEN[0], HIDDEN[1], HIDDEN[2], 1];
        let mut fc_w = [Block { offset: 0, len: 0 }; 4];
        let mut fc_b = fc_w;
        for l in 0..4 {
            fc_w[l] = take(dims[l + 1] * dims[l]);
            fc_b[l] = take(dims[l + 1]);
        }
        Layout {
            conv_w,
            conv_b,
            embed,
            fc_w,
            fc_b,
            total: offset,
        }
    }

    /// Named blocks, for gradient checks and summaries.
    pub fn named_blocks(&self) -> Vec<(String, Block)> {
        let mut out = Vec::new();
        for l in 0..3 {
            out.push((format!("conv{}.weight", l + 1), self.conv_w[l]));
            out.push((format!("conv{}.bias", l + 1), self.conv_b[l]));
        }
        for (name, b) in ["action", "binary", "subtype", "weapon", "entity", "terrain"]
            .iter()
            .zip(self.embed)
        {
            out.push((format!("embed.{name}"), b));
        }
        for l in 0..4 {
            out.push((format!("fc{}.weight", l + 1), self.fc_w[l]));
            out.push((format!("fc{}.bias", l + 1), self.fc_b[l]));
        }
        out
    }
}

impl Default for Layout {
    fn default() -> Self {
        Self::new()
    }
}

fn layout() -> &'static Layout {
    static LAYOUT: std::sync::OnceLock<Layout> = std::sync::OnceLock::new();
    LAYOUT.get_or_init(Layout::new)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QNetwork {
    pub params: Vec<f64>,
}

/// Activations of the state-only part, reused for every action of a state.
#[derive(Debug, Clone)]
pub struct StateActs {
    /// Post-ReLU conv outputs per layer (layer 0 is the input tensor).
    acts: [Vec<f64>; 4],
    scalars: [f64; SCALARS],
    /// fc1 bias plus the contribution of conv features and scalars.
    z1_state: Vec<f64>,
}

/// Per-action forward values needed for backprop.
struct HeadActs {
    input: Vec<f64>,
    h: [Vec<f64>; 3],
    q: f64,
}

impl QNetwork {
    pub fn zeros() -> QNetwork {
        QNetwork {
            params: vec![0.0; layout().total],
        }
    }

    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases, unit
    /// normal embeddings.
    pub fn new(seed: u64) -> QNetwork {
        let l = layout();
        let mut rng = RngStream::new(seed);
        let mut params = vec![0.0; l.total];
        let fill_uniform = |params: &mut [f64], b: Block, fan_in: usize, rng: &mut RngStream| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for p in &mut params[b.offset..b.offset + b.len] {
                *p = (rng.unit() * 2.0 - 1.0) * bound;
            }
        };
        for i in 0..3 {
            let fan_in = CONV_CHANNELS[i] * KERNEL * KERNEL;
            fill_uniform(&mut params, l.conv_w[i], fan_in, &mut rng);
            fill_uniform(&mut params, l.conv_b[i], fan_in, &mut rng);
        }
        for b in l.embed {
            for p in &mut params[b.offset..b.offset + b.len] {
                *p = rng.normal();
            }
        }
        let dims = [CONCAT, HIDDEN[0], HIDDEN[1], HIDDEN[2]];
        for i in 0..4 {
            fill_uniform(&mut params, l.fc_w[i], dims[i], &mut rng);
            fill_uniform(&mut params, l.fc_b[i], dims[i], &mut rng);
        }
        QNetwork { params }
    }

    pub fn layout() -> &'static Layout {
        layout()
    }

    pub fn parameter_count(&self) -> usize {
        self.params.len()
    }

    fn block(&self, b: Block) -> &[f64] {
        &self.params[b.offset..b.offset + b.len]
    }

    pub fn forward_state(&self, obs: &Observation) -> StateActs {
        let l = layout();
        let mut acts: [Vec<f64>; 4] = [obs.tiles.clone(), Vec::new(), Vec::new(), Vec::new()];
        for layer in 0..3 {
            let (cin, cout) = (CONV_CHANNELS[layer], CONV_CHANNELS[layer + 1]);
            let (sin, sout) = (side(layer), side(layer + 1));
            let w = self.block(l.conv_w[layer]);
            let b = self.block(l.conv_b[layer]);
            let input = &acts[layer];
            let mut out = vec![0.0; cout * sout * sout];
            for o in 0..cout {
                for y in 0..sout {
                    for x in 0..sout {
                        let mut z = b[o];
                        for c in 0..cin {
                            let wbase = (o * cin + c) * KERNEL * KERNEL;
                            let ibase = c * sin * sin;
                            for ky in 0..KERNEL {
                                let row = ibase + (y + ky) * sin + x;
                                let wrow = wbase + ky * KERNEL;
                                for kx in 0..KERNEL {
                                    z += w[wrow + kx] * input[row + kx];
                                }
                            }
                        }
                        out[(o * sout + y) * sout + x] = z.max(0.0);
                    }
                }
            }
            acts[layer + 1] = out;
        }
        let w1 = self.block(l.fc_w[0]);
        let mut z1_state = self.block(l.fc_b[0]).to_vec();
        for (j, z) in z1_state.iter_mut().enumerate() {
            let row = &w1[j * CONCAT..(j + 1) * CONCAT];
            let mut s = 0.0;
            for k in 0..CONV_OUT {
                s += row[k] * acts[3][k];
            }
            for k in 0..SCALARS {
                s += row[CONV_OUT + EMBED_WIDTH + k] * obs.scalars[k];
            }
            *z += s;
        }
        StateActs {
            acts,
            scalars: obs.scalars,
            z1_state,
        }
    }

    fn embedding_input(&self, enc: &ActionEncoding) -> Vec<f64> {
        let l = layout();
        let ids = [
            enc.action_type,
            enc.binary_action,
            enc.binary_subtype,
            enc.weapon_type,
            enc.entity_type,
            enc.terrain_type,
        ];
        let mut out = Vec::with_capacity(EMBED_WIDTH);
        for (i, &id) in ids.iter().enumerate() {
            let d = EMBED_DIMS[i];
            let table = self.block(l.embed[i]);
            let id = id as usize;
            assert!(id < EMBED_VOCAB[i], "encoding field {i} id {id} outside vocabulary");
            out.extend_from_slice(&table[id * d..(id + 1) * d]);
        }
        out
    }

    fn head(&self, st: &StateActs, enc: &ActionEncoding) -> HeadActs {
        let l = layout();
        let emb = self.embedding_input(enc);
        let w1 = self.block(l.fc_w[0]);
        let mut h1 = st.z1_state.clone();
        for (j, z) in h1.iter_mut().enumerate() {
            let row = &w1[j * CONCAT + CONV_OUT..j * CONCAT + CONV_OUT + EMBED_WIDTH];
            let mut s = 0.0;
            for k in 0..EMBED_WIDTH {
                s += row[k] * emb[k];
            }
            *z = (*z + s).max(0.0);
        }
        let mut h = [h1, Vec::new(), Vec::new()];
        for layer in 1..3 {
            let (din, dout) = (HIDDEN[layer - 1], HIDDEN[layer]);
            let w = self.block(l.fc_w[layer]);
            let b = self.block(l.fc_b[layer]);
            let input = &h[layer - 1];
            let out: Vec<f64> = (0..dout)
                .map(|j| {
                    let row = &w[j * din..(j + 1) * din];
                    let z = b[j] + row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
                    z.max(0.0)
                })
                .collect();
            h[layer] = out;
        }
        let w4 = self.block(l.fc_w[3]);
        let q = self.block(l.fc_b[3])[0] + w4.iter().zip(&h[2]).map(|(a, b)| a * b).sum::<f64>();
        HeadActs { input: emb, h, q }
    }

    pub fn q_from_state(&self, st: &StateActs, enc: &ActionEncoding) -> f64 {
        self.head(st, enc).q
    }

    pub fn q_value(&self, obs: &Observation, enc: &ActionEncoding) -> f64 {
        self.q_from_state(&self.forward_state(obs), enc)
    }

    /// Q for every legal action of `obs`, in menu order.
    pub fn q_values(&self, obs: &Observation) -> Vec<f64> {
        if obs.legal.is_empty() {
            return Vec::new();
        }
        let st = self.forward_state(obs);
        obs.legal.iter().map(|e| self.q_from_state(&st, e)).collect()
    }

    /// Highest Q over the legal actions; `None` when there are none.
    pub fn max_q(&self, obs: &Observation) -> Option<f64> {
        self.q_values(obs).into_iter().reduce(f64::max)
    }

    /// Add `scale * dQ(obs, enc)/dθ` into `grad`. Returns Q.
    pub fn accumulate_gradient(&self, obs: &Observation, enc: &ActionEncoding, scale: f64, grad: &mut [f64]) -> f64 {
        let l = layout();
        let st = self.forward_state(obs);
        let ha = self.head(&st, enc);

        // Dense head, top down. `dz` is the gradient w.r.t. pre-activations.
        let mut dz = vec![scale];
        let inputs = [&ha.h[2], &ha.h[1], &ha.h[0]];
        for (step, layer) in [3usize, 2, 1].into_iter().enumerate() {
            let input = inputs[step];
            let din = input.len();
            let wb = l.fc_w[layer];
            let bb = l.fc_b[layer];
            let w = &self.params[wb.offset..wb.offset + wb.len];
            let mut dinput = vec![0.0; din];
            for (j, &g) in dz.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                grad[bb.offset + j] += g;
                let row = wb.offset + j * din;
                for k in 0..din {
                    grad[row + k] += g * input[k];
                    dinput[k] += g * w[j * din + k];
                }
            }
            // ReLU on the layer below.
            dz = dinput
                .iter()
                .zip(input.iter())
                .map(|(d, a)| if *a > 0.0 { *d } else { 0.0 })
                .collect();
        }

        // fc1 over [conv, embeddings, scalars].
        let wb = l.fc_w[0];
        let w1 = &self.params[wb.offset..wb.offset + wb.len];
        let mut dconv = vec![0.0; CONV_OUT];
        let mut demb = vec![0.0; EMBED_WIDTH];
        for (j, &g) in dz.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            grad[l.fc_b[0].offset + j] += g;
            let row = wb.offset + j * CONCAT;
            let wrow = &w1[j * CONCAT..(j + 1) * CONCAT];
            for k in 0..CONV_OUT {
                grad[row + k] += g * st.acts[3][k];
                dconv[k] += g * wrow[k];
            }
            for k in 0..EMBED_WIDTH {
                grad[row + CONV_OUT + k] += g * ha.input[k];
                demb[k] += g * wrow[CONV_OUT + k];
            }
            for k in 0..SCALARS {
                grad[row + CONV_OUT + EMBED_WIDTH + k] += g * st.scalars[k];
            }
        }

        // Embedding rows.
        let ids = [
            enc.action_type,
            enc.binary_action,
            enc.binary_subtype,
            enc.weapon_type,
            enc.entity_type,
            enc.terrain_type,
        ];
        let mut at = 0;
        for (i, &id) in ids.iter().enumerate() {
            let d = EMBED_DIMS[i];
            let base = l.embed[i].offset + id as usize * d;
            for k in 0..d {
                grad[base + k] += demb[at + k];
            }
            at += d;
        }

        // Conv stack, top down.
        let mut dout: Vec<f64> = dconv
            .iter()
            .zip(&st.acts[3])
            .map(|(d, a)| if *a > 0.0 { *d } else { 0.0 })
            .collect();
        for layer in (0..3).rev() {
            let (cin, cout) = (CONV_CHANNELS[layer], CONV_CHANNELS[layer + 1]);
            let (sin, sout) = (side(layer), side(layer + 1));
            let wb = l.conv_w[layer];
            let bb = l.conv_b[layer];
            let w = &self.params[wb.offset..wb.offset + wb.len];
            let input = &st.acts[layer];
            let mut din = vec![0.0; cin * sin * sin];
            for o in 0..cout {
                for y in 0..sout {
                    for x in 0..sout {
                        let g = dout[(o * sout + y) * sout + x];
                        if g == 0.0 {
                            continue;
                        }
                        grad[bb.offset + o] += g;
                        for c in 0..cin {
                            let wbase = (o * cin + c) * KERNEL * KERNEL;
                            let ibase = c * sin * sin;
                            for ky in 0..KERNEL {
                                for kx in 0..KERNEL {
                                    let ii = ibase + (y + ky) * sin + x + kx;
                                    let wi = wbase + ky * KERNEL + kx;
                                    grad[wb.offset + wi] += g * input[ii];
                                    din[ii] += g * w[wi];
                                }
                            }
                        }
                    }
                }
            }
            if layer > 0 {
                dout = din
                    .iter()
                    .zip(input.iter())
                    .map(|(d, a)| if *a > 0.0 { *d } else { 0.0 })
                    .collect();
            }
        }
        ha.q
    }
}

/// Adam with the usual defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Adam {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mh = self.m[i] / bc1;
            let vh = self.v[i] / bc2;
            params[i] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}
