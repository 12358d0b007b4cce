//! The reconstruction network: a small gated residual CNN (or
//! spectral-mixing variant) with hand-written reverse-mode gradients.
//!
//! Both block types use multiplicative gating (a gated linear unit): masked
//! inputs demand mask-dependent renormalization of interpolated values,
//! which purely additive blocks approximate poorly.
//!
//! Inputs are seven groups of channels on one grid: the masked mid-flow
//! interpolants of both fields, the masked clean observations of both
//! fields, the two conditioning-mask indicators, and broadcast time
//! embedding channels. Before the lift layer the network derives
//! parameter-free interpolation features from the conditioning pairs
//! (mask-normalized smoothing at several scales, as in partial
//! convolutions); see [`smoothing_features`] for why. Outputs are the two
//! reconstructed fields. Parameters live in one flat `f64` vector whose
//! layout is fixed by the [`ModelDescriptor`]; the descriptor round-trips
//! through a text form and is stored in checkpoints.
//!
//! Checkpoint layout (little-endian):
//! `"APRM" | u32 descriptor-text length | descriptor text | u64 parameter
//! count | f64 parameters`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::ops::Range;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;

use crate::error::{Error, Result};
use crate::fft::fft2;
use crate::field::Field;
use crate::mask::Mask;
use crate::par::map_indexed;

/// Field-channel count before time embedding: masked interpolants (2),
/// masked observations (2), mask indicators (2).
pub const BASE_CHANNELS: usize = 6;

/// Smoothing depths (in 3×3 binomial passes) of the derived interpolation
/// features; pass count `k` gives a kernel of bandwidth σ ≈ √(k/2) pixels
/// and reach ±k pixels.
const SMOOTH_PASSES: [usize; 3] = [2, 8, 32];

/// Derived interpolation channels prepended to the time embedding: one per
/// smoothing depth per conditioning pair.
pub const AUX_CHANNELS: usize = 2 * SMOOTH_PASSES.len();

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backbone {
    /// Residual blocks of two 3×3 convolutions with a gated linear unit
    /// between them.
    Conv,
    /// Spectral mixing over a fixed set of low Fourier modes plus a gated
    /// pointwise path — translation-equivariant on periodic data.
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaddingMode {
    /// Wrap around — for periodic problems.
    Periodic,
    /// Mirror across the boundary (no edge duplication) — for Dirichlet
    /// problems.
    Reflect,
}

/// Architecture description. Parameters depend only on this, never on the
/// grid size, so one checkpoint applies across resolutions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelDescriptor {
    pub backbone: Backbone,
    pub width: usize,
    pub blocks: usize,
    /// Time-embedding dimension; even, at least 2.
    pub embed_dim: usize,
    pub padding: PaddingMode,
    /// Per-axis mode radius of the spectral mixer (ignored by Conv).
    pub modes: usize,
}

impl ModelDescriptor {
    pub fn conv(width: usize, blocks: usize, embed_dim: usize, padding: PaddingMode) -> Self {
        ModelDescriptor {
            backbone: Backbone::Conv,
            width,
            blocks,
            embed_dim,
            padding,
            modes: 0,
        }
    }

    pub fn spectral(width: usize, blocks: usize, embed_dim: usize, modes: usize) -> Self {
        ModelDescriptor {
            backbone: Backbone::Spectral,
            width,
            blocks,
            embed_dim,
            padding: PaddingMode::Periodic,
            modes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 {
            return Err(Error::config("width must be positive"));
        }
        if self.embed_dim < 2 || self.embed_dim % 2 != 0 {
            return Err(Error::config("embed_dim must be even and at least 2"));
        }
        if self.backbone == Backbone::Spectral && self.modes == 0 {
            return Err(Error::config("spectral backbone needs modes >= 1"));
        }
        Ok(())
    }

    pub fn in_channels(&self) -> usize {
        BASE_CHANNELS + AUX_CHANNELS + self.embed_dim
    }

    /// Retained spectral modes: the full square of signed wavenumbers with
    /// `|k| ≤ modes` on each axis.
    pub fn mode_count(&self) -> usize {
        let m = 2 * self.modes + 1;
        m * m
    }

    pub fn param_count(&self) -> usize {
        layout(self).total
    }

    /// Flat-parameter range of the two head biases `(coeff, sol)`. With the
    /// head weights zero (as after [`init_network`]) the network output
    /// equals these biases everywhere, which makes constant-predictor
    /// diagnostics possible without touching internals.
    pub fn head_bias_range(&self) -> Range<usize> {
        layout(self).head_b
    }

    /// Compact text form, stored inside checkpoints. Round-trips exactly.
    pub fn to_text(&self) -> String {
        let backbone = match self.backbone {
            Backbone::Conv => "conv",
            Backbone::Spectral => "spectral",
        };
        let padding = match self.padding {
            PaddingMode::Periodic => "periodic",
            PaddingMode::Reflect => "reflect",
        };
        format!(
            "backbone={backbone};width={};blocks={};embed={};padding={padding};modes={}",
            self.width, self.blocks, self.embed_dim, self.modes
        )
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut backbone = None;
        let mut width = None;
        let mut blocks = None;
        let mut embed = None;
        let mut padding = None;
        let mut modes = None;
        for part in text.split(';') {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::config(format!("bad descriptor entry '{part}'")))?;
            let parse_usize = || {
                value
                    .parse::<usize>()
                    .map_err(|_| Error::config(format!("bad descriptor value '{part}'")))
            };
            match key {
                "backbone" => {
                    backbone = Some(match value {
                        "conv" => Backbone::Conv,
                        "spectral" => Backbone::Spectral,
                        other => {
                            return Err(Error::config(format!("unknown backbone '{other}'")))
                        }
                    })
                }
                "width" => width = Some(parse_usize()?),
                "blocks" => blocks = Some(parse_usize()?),
                "embed" => embed = Some(parse_usize()?),
                "padding" => {
                    padding = Some(match value {
                        "periodic" => PaddingMode::Periodic,
                        "reflect" => PaddingMode::Reflect,
                        other => return Err(Error::config(format!("unknown padding '{other}'"))),
                    })
                }
                "modes" => modes = Some(parse_usize()?),
                other => return Err(Error::config(format!("unknown descriptor key '{other}'"))),
            }
        }
        let d = ModelDescriptor {
            backbone: backbone.ok_or_else(|| Error::config("descriptor missing backbone"))?,
            width: width.ok_or_else(|| Error::config("descriptor missing width"))?,
            blocks: blocks.ok_or_else(|| Error::config("descriptor missing blocks"))?,
            embed_dim: embed.ok_or_else(|| Error::config("descriptor missing embed"))?,
            padding: padding.ok_or_else(|| Error::config("descriptor missing padding"))?,
            modes: modes.ok_or_else(|| Error::config("descriptor missing modes"))?,
        };
        d.validate()?;
        Ok(d)
    }
}

// ===================================================================
// Parameter layout
// ===================================================================

/// Flat-vector extents of every layer, in one place so initialization,
/// forward, and backward can never disagree about offsets.
struct Layout {
    lift_w: Range<usize>,
    lift_b: Range<usize>,
    /// Conv: (w1, b1, w2, b2). Spectral: (spectral_w, point_w, point_b, empty).
    blocks: Vec<(Range<usize>, Range<usize>, Range<usize>, Range<usize>)>,
    head_w: Range<usize>,
    head_b: Range<usize>,
    total: usize,
}

fn layout(d: &ModelDescriptor) -> Layout {
    let cin = d.in_channels();
    let w = d.width;
    let mut pos = 0;
    let mut take = |n: usize| {
        let r = pos..pos + n;
        pos += n;
        r
    };
    match d.backbone {
        Backbone::Conv => {
            let lift_w = take(w * cin * 9);
            let lift_b = take(w);
            let blocks = (0..d.blocks)
                .map(|_| (take(2 * w * w * 9), take(2 * w), take(w * w * 9), take(w)))
                .collect();
            let head_w = take(2 * w);
            let head_b = take(2);
            Layout {
                lift_w,
                lift_b,
                blocks,
                head_w,
                head_b,
                total: pos,
            }
        }
        Backbone::Spectral => {
            let lift_w = take(w * cin);
            let lift_b = take(w);
            let nm = d.mode_count();
            let blocks = (0..d.blocks)
                .map(|_| (take(w * w * nm * 2), take(2 * w * w), take(2 * w), take(0)))
                .collect();
            let head_w = take(2 * w);
            let head_b = take(2);
            Layout {
                lift_w,
                lift_b,
                blocks,
                head_w,
                head_b,
                total: pos,
            }
        }
    }
}

/// Network parameters: architecture plus one flat value vector.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub descriptor: ModelDescriptor,
    pub values: Vec<f64>,
}

/// Initialize a network: uniform `±1/√fan_in` weights, zero biases, and a
/// zero output head (so the untrained network predicts exactly zero).
pub fn init_network(descriptor: &ModelDescriptor, seed: u64) -> Result<NetworkParams> {
    descriptor.validate()?;
    let lay = layout(descriptor);
    let mut values = vec![0.0; lay.total];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cin = descriptor.in_channels();
    let w = descriptor.width;

    let mut fill = |range: Range<usize>, fan_in: usize, values: &mut Vec<f64>| {
        let scale = 1.0 / (fan_in as f64).sqrt();
        for i in range {
            values[i] = rng.random_range(-scale..scale);
        }
    };

    match descriptor.backbone {
        Backbone::Conv => {
            fill(lay.lift_w, cin * 9, &mut values);
            for (w1, _b1, w2, _b2) in &lay.blocks {
                fill(w1.clone(), w * 9, &mut values);
                fill(w2.clone(), w * 9, &mut values);
            }
        }
        Backbone::Spectral => {
            fill(lay.lift_w, cin, &mut values);
            let nm = descriptor.mode_count();
            for (ws, wp, _bp, _) in &lay.blocks {
                fill(ws.clone(), w * nm, &mut values);
                fill(wp.clone(), w, &mut values);
            }
        }
    }
    // head stays zero — biases too
    Ok(NetworkParams {
        descriptor: descriptor.clone(),
        values,
    })
}

// ===================================================================
// Time embedding
// ===================================================================

/// Sinusoidal embedding of `t ∈ [0, 1]`: pairs `(sin 2πω_j t, cos 2πω_j t)`
/// with geometric frequencies `ω_j = 2^j / 2`. The lowest pair spans half a
/// period on [0, 1], so the map is injective there; every entry lies in
/// [−1, 1]; `t = 0` gives `(0, 1, 0, 1, …)`.
pub fn time_embedding(t: f64, dim: usize) -> Vec<f64> {
    assert!(dim >= 2 && dim % 2 == 0, "embedding dim must be even >= 2");
    let mut out = Vec::with_capacity(dim);
    for j in 0..dim / 2 {
        let omega = 0.5 * (1u64 << j) as f64;
        let angle = 2.0 * std::f64::consts::PI * omega * t;
        out.push(angle.sin());
        out.push(angle.cos());
    }
    out
}

// ===================================================================
// Inputs and outputs
// ===================================================================

/// One network input: the six field channels plus the flow time.
#[derive(Debug, Clone)]
pub struct ModelInput {
    /// `[B̃_a·a_t, B̃_u·u_t, B̃_a·a, B̃_u·u, B̃_a, B̃_u]` as fields.
    pub channels: Vec<Field>,
    pub t: f64,
}

impl ModelInput {
    pub fn new(channels: Vec<Field>, t: f64) -> Result<ModelInput> {
        if channels.len() != BASE_CHANNELS {
            return Err(Error::config(format!(
                "expected {BASE_CHANNELS} input channels, got {}",
                channels.len()
            )));
        }
        let size = channels[0].size();
        if channels.iter().any(|c| c.size() != size) {
            return Err(Error::config("input channels must share one grid"));
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::config(format!("flow time {t} outside [0, 1]")));
        }
        Ok(ModelInput { channels, t })
    }

    pub fn size(&self) -> usize {
        self.channels[0].size()
    }
}

/// Reconstructed coefficient and solution fields.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutput {
    pub coeff: Field,
    pub sol: Field,
}

// ===================================================================
// Shared numeric kernels
// ===================================================================

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
fn silu(x: f64) -> f64 {
    x * sigmoid(x)
}

#[inline]
fn silu_grad(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 + x * (1.0 - s))
}

/// Map a (possibly out-of-range) index onto `0..n` per the padding rule.
#[inline]
fn map_idx(i: i64, n: usize, padding: PaddingMode) -> usize {
    let n_i = n as i64;
    let m = match padding {
        PaddingMode::Periodic => i.rem_euclid(n_i),
        PaddingMode::Reflect => {
            if i < 0 {
                -i
            } else if i >= n_i {
                2 * n_i - 2 - i
            } else {
                i
            }
        }
    };
    debug_assert!((0..n_i).contains(&m));
    m as usize
}

/// Copy one channel into an `(n+2)²` buffer with a 1-pixel halo.
fn pad_channel(src: &[f64], n: usize, padding: PaddingMode, dst: &mut [f64]) {
    let np = n + 2;
    debug_assert_eq!(dst.len(), np * np);
    for pr in 0..np {
        let sr = map_idx(pr as i64 - 1, n, padding);
        for pc in 0..np {
            let sc = map_idx(pc as i64 - 1, n, padding);
            dst[pr * np + pc] = src[sr * n + sc];
        }
    }
}

/// Fold a padded-gradient buffer back onto the unpadded channel, routing
/// halo cells to the source pixels the padding copied them from.
fn fold_padded(gpad: &[f64], n: usize, padding: PaddingMode, gout: &mut [f64]) {
    let np = n + 2;
    for pr in 0..np {
        let sr = map_idx(pr as i64 - 1, n, padding);
        for pc in 0..np {
            let sc = map_idx(pc as i64 - 1, n, padding);
            gout[sr * n + sc] += gpad[pr * np + pc];
        }
    }
}

/// `out[co] = b[co] + Σ_ci w[co,ci,·,·] ∗ inp[ci]` with 3×3 kernels.
fn conv3x3_forward(
    inp: &[f64],
    c_in: usize,
    w: &[f64],
    b: &[f64],
    c_out: usize,
    n: usize,
    padding: PaddingMode,
    out: &mut [f64],
    pad: &mut [f64],
) {
    let nn = n * n;
    let np = n + 2;
    for co in 0..c_out {
        out[co * nn..(co + 1) * nn].fill(b[co]);
    }
    for ci in 0..c_in {
        pad_channel(&inp[ci * nn..(ci + 1) * nn], n, padding, pad);
        for co in 0..c_out {
            let wbase = (co * c_in + ci) * 9;
            for ky in 0..3 {
                for kx in 0..3 {
                    let v = w[wbase + ky * 3 + kx];
                    if v == 0.0 {
                        continue;
                    }
                    let och = &mut out[co * nn..(co + 1) * nn];
                    for y in 0..n {
                        let prow = (y + ky) * np + kx;
                        let orow = y * n;
                        for x in 0..n {
                            och[orow + x] += v * pad[prow + x];
                        }
                    }
                }
            }
        }
    }
}

/// Reverse-mode step for [`conv3x3_forward`]: accumulates input, weight,
/// and bias gradients.
#[allow(clippy::too_many_arguments)]
fn conv3x3_backward(
    gout: &[f64],
    inp: &[f64],
    c_in: usize,
    w: &[f64],
    c_out: usize,
    n: usize,
    padding: PaddingMode,
    gin: &mut [f64],
    gw: &mut [f64],
    gb: &mut [f64],
    pad: &mut [f64],
    gpad: &mut [f64],
) {
    let nn = n * n;
    let np = n + 2;
    for co in 0..c_out {
        gb[co] += gout[co * nn..(co + 1) * nn].iter().sum::<f64>();
    }
    for ci in 0..c_in {
        pad_channel(&inp[ci * nn..(ci + 1) * nn], n, padding, pad);
        gpad.fill(0.0);
        for co in 0..c_out {
            let wbase = (co * c_in + ci) * 9;
            let goch = &gout[co * nn..(co + 1) * nn];
            for ky in 0..3 {
                for kx in 0..3 {
                    let v = w[wbase + ky * 3 + kx];
                    let mut acc = 0.0;
                    for y in 0..n {
                        let prow = (y + ky) * np + kx;
                        let orow = y * n;
                        for x in 0..n {
                            let g = goch[orow + x];
                            acc += g * pad[prow + x];
                            gpad[prow + x] += v * g;
                        }
                    }
                    gw[wbase + ky * 3 + kx] += acc;
                }
            }
        }
        fold_padded(gpad, n, padding, &mut gin[ci * nn..(ci + 1) * nn]);
    }
}

/// Pointwise (1×1) convolution: `out[co] = b[co] + Σ_ci w[co,ci]·inp[ci]`.
fn conv1x1_forward(
    inp: &[f64],
    c_in: usize,
    w: &[f64],
    b: &[f64],
    c_out: usize,
    nn: usize,
    out: &mut [f64],
) {
    for co in 0..c_out {
        let och = &mut out[co * nn..(co + 1) * nn];
        och.fill(b[co]);
        for ci in 0..c_in {
            let v = w[co * c_in + ci];
            if v == 0.0 {
                continue;
            }
            let ich = &inp[ci * nn..(ci + 1) * nn];
            for p in 0..nn {
                och[p] += v * ich[p];
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn conv1x1_backward(
    gout: &[f64],
    inp: &[f64],
    c_in: usize,
    w: &[f64],
    c_out: usize,
    nn: usize,
    gin: &mut [f64],
    gw: &mut [f64],
    gb: &mut [f64],
) {
    for co in 0..c_out {
        let goch = &gout[co * nn..(co + 1) * nn];
        gb[co] += goch.iter().sum::<f64>();
        for ci in 0..c_in {
            let ich = &inp[ci * nn..(ci + 1) * nn];
            let mut acc = 0.0;
            for p in 0..nn {
                acc += goch[p] * ich[p];
            }
            gw[co * c_in + ci] += acc;
            let v = w[co * c_in + ci];
            if v != 0.0 {
                let gich = &mut gin[ci * nn..(ci + 1) * nn];
                for p in 0..nn {
                    gich[p] += v * goch[p];
                }
            }
        }
    }
}

/// Flat FFT-grid indices of the retained spectral modes, in a canonical
/// order independent of the grid size.
fn kept_mode_indices(n: usize, modes: usize) -> Vec<usize> {
    let m = modes as i64;
    let mut idx = Vec::with_capacity((2 * modes + 1) * (2 * modes + 1));
    for ky in -m..=m {
        for kx in -m..=m {
            let row = ky.rem_euclid(n as i64) as usize;
            let col = kx.rem_euclid(n as i64) as usize;
            idx.push(row * n + col);
        }
    }
    idx
}

// ===================================================================
// Forward with cache, and backward
// ===================================================================

struct ConvBlockCache {
    x_in: Vec<f64>,
    s1: Vec<f64>,
    /// Pre-gate conv output: value half then gate half (2w channels).
    c1: Vec<f64>,
    /// Gated hidden state `v · σ(g)`.
    h: Vec<f64>,
}

struct SpecBlockCache {
    x_in: Vec<f64>,
    xhat: Vec<Complex<f64>>,
    /// Pointwise value half plus the spectral mix.
    z: Vec<f64>,
    /// Gate pre-activations (pointwise second half).
    gate: Vec<f64>,
}

enum BlockCaches {
    Conv(Vec<ConvBlockCache>),
    Spectral(Vec<SpecBlockCache>),
}

struct ForwardCache {
    input: Vec<f64>,
    blocks: BlockCaches,
    final_x: Vec<f64>,
    n: usize,
}

/// Mask-normalized interpolation features, written into the aux-channel
/// slots of `stack`.
///
/// For each conditioning pair (masked values `v`, mask indicator `m`) this
/// computes `smooth(v) / smooth(m)` after each depth in [`SMOOTH_PASSES`] —
/// a distance-weighted average of the measurements reachable at that scale
/// (zero where none are). This renormalized averaging is what a network fed
/// raw masked channels must otherwise discover by gradient descent, which
/// small stacks do slowly and badly; providing it as parameter-free input
/// features (they carry no parameters, so no backward step is needed) lets
/// the learned layers spend capacity on corrections toward the exact
/// conditional estimator instead.
fn smoothing_features(padding: PaddingMode, input: &ModelInput, stack: &mut [f64]) {
    let n = input.size();
    let nn = n * n;
    let kernel: [f64; 9] = [
        1.0 / 16.0,
        2.0 / 16.0,
        1.0 / 16.0,
        2.0 / 16.0,
        4.0 / 16.0,
        2.0 / 16.0,
        1.0 / 16.0,
        2.0 / 16.0,
        1.0 / 16.0,
    ];
    let bias = [0.0];
    let mut pad = vec![0.0; (n + 2) * (n + 2)];
    let mut tmp = vec![0.0; nn];
    for (pair, (vals, mask)) in [(2usize, 4usize), (3, 5)].into_iter().enumerate() {
        let mut num = input.channels[vals].as_slice().to_vec();
        let mut den = input.channels[mask].as_slice().to_vec();
        let mut written = 0;
        for pass in 1..=SMOOTH_PASSES[SMOOTH_PASSES.len() - 1] {
            conv3x3_forward(&num, 1, &kernel, &bias, 1, n, padding, &mut tmp, &mut pad);
            num.copy_from_slice(&tmp);
            conv3x3_forward(&den, 1, &kernel, &bias, 1, n, padding, &mut tmp, &mut pad);
            den.copy_from_slice(&tmp);
            if SMOOTH_PASSES.contains(&pass) {
                let c = BASE_CHANNELS + pair * SMOOTH_PASSES.len() + written;
                let out = &mut stack[c * nn..(c + 1) * nn];
                for i in 0..nn {
                    out[i] = if den[i] > 0.0 { num[i] / den[i] } else { 0.0 };
                }
                written += 1;
            }
        }
    }
}

/// Stack the six field channels, the derived interpolation features, and
/// broadcast time-embedding channels.
fn build_input_stack(d: &ModelDescriptor, input: &ModelInput) -> Vec<f64> {
    let n = input.size();
    let nn = n * n;
    let cin = d.in_channels();
    let mut stack = vec![0.0; cin * nn];
    for (c, ch) in input.channels.iter().enumerate() {
        stack[c * nn..(c + 1) * nn].copy_from_slice(ch.as_slice());
    }
    smoothing_features(d.padding, input, &mut stack);
    let emb = time_embedding(input.t, d.embed_dim);
    for (j, &e) in emb.iter().enumerate() {
        let c = BASE_CHANNELS + AUX_CHANNELS + j;
        stack[c * nn..(c + 1) * nn].fill(e);
    }
    stack
}

fn forward_cached(params: &NetworkParams, input: &ModelInput) -> Result<(ForwardCache, Vec<f64>)> {
    let d = &params.descriptor;
    d.validate()?;
    if params.values.len() != d.param_count() {
        return Err(Error::config(format!(
            "parameter vector length {} does not match descriptor ({})",
            params.values.len(),
            d.param_count()
        )));
    }
    let lay = layout(d);
    let p = &params.values;
    let n = input.size();
    let nn = n * n;
    let w = d.width;
    let cin = d.in_channels();
    let stack = build_input_stack(d, input);

    let mut x = vec![0.0; w * nn];
    let caches;
    match d.backbone {
        Backbone::Conv => {
            let mut pad = vec![0.0; (n + 2) * (n + 2)];
            conv3x3_forward(
                &stack,
                cin,
                &p[lay.lift_w.clone()],
                &p[lay.lift_b.clone()],
                w,
                n,
                d.padding,
                &mut x,
                &mut pad,
            );
            let mut block_caches = Vec::with_capacity(d.blocks);
            for (w1, b1, w2, b2) in &lay.blocks {
                let x_in = x.clone();
                let s1: Vec<f64> = x_in.iter().map(|&v| silu(v)).collect();
                let mut c1 = vec![0.0; 2 * w * nn];
                conv3x3_forward(&s1, w, &p[w1.clone()], &p[b1.clone()], 2 * w, n, d.padding, &mut c1, &mut pad);
                // gated linear unit: value channels scaled by the gate half
                let mut h = vec![0.0; w * nn];
                for i in 0..w * nn {
                    h[i] = c1[i] * sigmoid(c1[w * nn + i]);
                }
                let mut c2 = vec![0.0; w * nn];
                conv3x3_forward(&h, w, &p[w2.clone()], &p[b2.clone()], w, n, d.padding, &mut c2, &mut pad);
                for i in 0..x.len() {
                    x[i] = x_in[i] + c2[i];
                }
                block_caches.push(ConvBlockCache { x_in, s1, c1, h });
            }
            caches = ForwardCache {
                input: stack,
                blocks: BlockCaches::Conv(block_caches),
                final_x: x.clone(),
                n,
            };
        }
        Backbone::Spectral => {
            conv1x1_forward(
                &stack,
                cin,
                &p[lay.lift_w.clone()],
                &p[lay.lift_b.clone()],
                w,
                nn,
                &mut x,
            );
            let kept = kept_mode_indices(n, d.modes);
            let nm = kept.len();
            let mut block_caches = Vec::with_capacity(d.blocks);
            for (ws, wp, bp, _) in &lay.blocks {
                let x_in = x.clone();
                // FFT every input channel once
                let mut xhat = vec![Complex::new(0.0, 0.0); w * nn];
                for c in 0..w {
                    for i in 0..nn {
                        xhat[c * nn + i] = Complex::new(x_in[c * nn + i], 0.0);
                    }
                    fft2(&mut xhat[c * nn..(c + 1) * nn], n, false);
                }
                // spectral mix + gated pointwise path
                let wspec = &p[ws.clone()];
                let mut pw = vec![0.0; 2 * w * nn];
                conv1x1_forward(&x_in, w, &p[wp.clone()], &p[bp.clone()], 2 * w, nn, &mut pw);
                let gate = pw[w * nn..].to_vec();
                let mut z = pw;
                z.truncate(w * nn);
                let mut yhat = vec![Complex::new(0.0, 0.0); nn];
                for o in 0..w {
                    yhat.fill(Complex::new(0.0, 0.0));
                    for i in 0..w {
                        let base = ((o * w) + i) * nm * 2;
                        for (mi, &idx) in kept.iter().enumerate() {
                            let wc = Complex::new(wspec[base + 2 * mi], wspec[base + 2 * mi + 1]);
                            yhat[idx] += wc * xhat[i * nn + idx];
                        }
                    }
                    fft2(&mut yhat, n, true);
                    let zch = &mut z[o * nn..(o + 1) * nn];
                    for pix in 0..nn {
                        zch[pix] += yhat[pix].re;
                    }
                }
                for i in 0..x.len() {
                    x[i] = x_in[i] + z[i] * sigmoid(gate[i]);
                }
                block_caches.push(SpecBlockCache { x_in, xhat, z, gate });
            }
            caches = ForwardCache {
                input: stack,
                blocks: BlockCaches::Spectral(block_caches),
                final_x: x.clone(),
                n,
            };
        }
    }

    let mut out = vec![0.0; 2 * nn];
    conv1x1_forward(
        &caches.final_x,
        w,
        &p[lay.head_w.clone()],
        &p[lay.head_b.clone()],
        2,
        nn,
        &mut out,
    );
    Ok((caches, out))
}

/// Gradient of a scalar loss with respect to all parameters, given the
/// gradient with respect to the two output channels.
fn backward(
    params: &NetworkParams,
    cache: &ForwardCache,
    gout: &[f64],
    grad: &mut [f64],
) {
    let d = &params.descriptor;
    let lay = layout(d);
    let p = &params.values;
    let n = cache.n;
    let nn = n * n;
    let w = d.width;
    let cin = d.in_channels();

    // head
    let mut gx = vec![0.0; w * nn];
    {
        let (gw_head, gb_head) = split_two(grad, lay.head_w.clone(), lay.head_b.clone());
        conv1x1_backward(
            gout,
            &cache.final_x,
            w,
            &p[lay.head_w.clone()],
            2,
            nn,
            &mut gx,
            gw_head,
            gb_head,
        );
    }

    match (&cache.blocks, d.backbone) {
        (BlockCaches::Conv(blocks), Backbone::Conv) => {
            let mut pad = vec![0.0; (n + 2) * (n + 2)];
            let mut gpad = vec![0.0; (n + 2) * (n + 2)];
            for (bi, blk) in blocks.iter().enumerate().rev() {
                let (w1r, b1r, w2r, b2r) = lay.blocks[bi].clone();
                // x_out = x_in + c2;  c2 = conv2(h);  h = v·σ(g);
                // (v, g) = split(c1);  c1 = conv1(s1);  s1 = silu(x_in)
                let g_c2 = gx.clone();
                let mut g_h = vec![0.0; w * nn];
                {
                    let (gw2, gb2) = split_two(grad, w2r.clone(), b2r.clone());
                    conv3x3_backward(
                        &g_c2, &blk.h, w, &p[w2r.clone()], w, n, d.padding, &mut g_h, gw2,
                        gb2, &mut pad, &mut gpad,
                    );
                }
                let mut g_c1 = vec![0.0; 2 * w * nn];
                for i in 0..w * nn {
                    let v = blk.c1[i];
                    let s = sigmoid(blk.c1[w * nn + i]);
                    g_c1[i] = s * g_h[i];
                    g_c1[w * nn + i] = v * s * (1.0 - s) * g_h[i];
                }
                let mut g_s1 = vec![0.0; w * nn];
                {
                    let (gw1, gb1) = split_two(grad, w1r.clone(), b1r.clone());
                    conv3x3_backward(
                        &g_c1, &blk.s1, w, &p[w1r.clone()], 2 * w, n, d.padding, &mut g_s1, gw1,
                        gb1, &mut pad, &mut gpad,
                    );
                }
                // gx (wrt x_in) = residual skip + silu'(x_in)·g_s1
                for i in 0..gx.len() {
                    gx[i] += silu_grad(blk.x_in[i]) * g_s1[i];
                }
            }
            // lift
            let mut g_input = vec![0.0; cin * nn];
            let (gwl, gbl) = split_two(grad, lay.lift_w.clone(), lay.lift_b.clone());
            conv3x3_backward(
                &gx,
                &cache.input,
                cin,
                &p[lay.lift_w.clone()],
                w,
                n,
                d.padding,
                &mut g_input,
                gwl,
                gbl,
                &mut pad,
                &mut gpad,
            );
        }
        (BlockCaches::Spectral(blocks), Backbone::Spectral) => {
            let kept = kept_mode_indices(n, d.modes);
            let nm = kept.len();
            let scale = 1.0 / nn as f64;
            for (bi, blk) in blocks.iter().enumerate().rev() {
                let (wsr, wpr, bpr, _) = lay.blocks[bi].clone();
                // x_out = x_in + z·σ(g);  z = spectral(x_in) + v;
                // (v, g) = pointwise(x_in)
                let mut g_z = vec![0.0; w * nn];
                let mut g_pw = vec![0.0; 2 * w * nn];
                for i in 0..w * nn {
                    let s = sigmoid(blk.gate[i]);
                    g_z[i] = s * gx[i];
                    g_pw[i] = g_z[i];
                    g_pw[w * nn + i] = blk.z[i] * s * (1.0 - s) * gx[i];
                }
                // pointwise path (value and gate halves share the input)
                let mut g_x_in = vec![0.0; w * nn];
                {
                    let (gwp, gbp) = split_two(grad, wpr.clone(), bpr.clone());
                    conv1x1_backward(
                        &g_pw, &blk.x_in, w, &p[wpr.clone()], 2 * w, nn, &mut g_x_in, gwp, gbp,
                    );
                }
                // spectral path: ĝ_o = FFT(g_z_o); grad_W = conj(x̂)·ĝ/N;
                // grad_x = Re(IFFT(conj(W)·ĝ))
                let wspec = &p[wsr.clone()];
                let gws = &mut grad[wsr.clone()];
                let mut acc = vec![Complex::new(0.0, 0.0); w * nn];
                let mut ghat = vec![Complex::new(0.0, 0.0); nn];
                for o in 0..w {
                    for pix in 0..nn {
                        ghat[pix] = Complex::new(g_z[o * nn + pix], 0.0);
                    }
                    fft2(&mut ghat, n, false);
                    for i in 0..w {
                        let base = ((o * w) + i) * nm * 2;
                        for (mi, &idx) in kept.iter().enumerate() {
                            let xh = blk.xhat[i * nn + idx];
                            let gh = ghat[idx];
                            let gw_c = xh.conj() * gh * scale;
                            gws[base + 2 * mi] += gw_c.re;
                            gws[base + 2 * mi + 1] += gw_c.im;
                            let wc = Complex::new(wspec[base + 2 * mi], wspec[base + 2 * mi + 1]);
                            acc[i * nn + idx] += wc.conj() * gh;
                        }
                    }
                }
                for i in 0..w {
                    let ch = &mut acc[i * nn..(i + 1) * nn];
                    fft2(ch, n, true);
                    let gch = &mut g_x_in[i * nn..(i + 1) * nn];
                    for pix in 0..nn {
                        gch[pix] += ch[pix].re;
                    }
                }
                // residual skip: gx ← gx + g_x_in
                for i in 0..gx.len() {
                    gx[i] += g_x_in[i];
                }
            }
            // lift
            let mut g_input = vec![0.0; cin * nn];
            let (gwl, gbl) = split_two(grad, lay.lift_w.clone(), lay.lift_b.clone());
            conv1x1_backward(
                &gx,
                &cache.input,
                cin,
                &p[lay.lift_w.clone()],
                w,
                nn,
                &mut g_input,
                gwl,
                gbl,
            );
        }
        _ => unreachable!("cache kind always matches backbone"),
    }
}

/// Disjoint mutable slices of the flat gradient for one layer's weight and
/// bias ranges. [`layout`] always places the weight range before the bias
/// range, so a single split suffices.
fn split_two(grad: &mut [f64], a: Range<usize>, b: Range<usize>) -> (&mut [f64], &mut [f64]) {
    assert!(a.end <= b.start, "layout ranges out of order");
    let (left, right) = grad.split_at_mut(b.start);
    (&mut left[a.start..a.end], &mut right[..b.end - b.start])
}

/// Run the network. Fails with a numeric error if the output picks up
/// non-finite values (e.g. NaNs fed in or parameter blow-up).
pub fn forward(params: &NetworkParams, input: &ModelInput) -> Result<ModelOutput> {
    let (_cache, out) = forward_cached(params, input)?;
    let n = input.size();
    let nn = n * n;
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("network output contains non-finite values"));
    }
    Ok(ModelOutput {
        coeff: Field::from_vec(n, out[..nn].to_vec()),
        sol: Field::from_vec(n, out[nn..].to_vec()),
    })
}

// ===================================================================
// Loss
// ===================================================================

/// One supervised example: input channels plus the full targets and the
/// measurement masks the loss may look at.
#[derive(Debug, Clone)]
pub struct TrainExample<'a> {
    pub input: ModelInput,
    pub target_coeff: &'a Field,
    pub target_sol: &'a Field,
    pub observe_coeff: &'a Mask,
    pub observe_sol: &'a Mask,
}

/// Masked squared error of one output channel against its target, averaged
/// over observed entries; also writes the loss gradient for that channel.
fn masked_mse_and_grad(
    pred: &[f64],
    target: &Field,
    mask: &Mask,
    batch: usize,
    gout: &mut [f64],
) -> f64 {
    let count = mask.observed_count();
    if count == 0 {
        log::warn!("empty observation mask: field term contributes zero loss");
        return 0.0;
    }
    let t = target.as_slice();
    let mut acc = 0.0;
    let inv = 1.0 / count as f64;
    let gscale = 2.0 * inv / batch as f64;
    for i in 0..pred.len() {
        if mask.get(i) {
            let d = pred[i] - t[i];
            acc += d * d;
            gout[i] = gscale * d;
        }
    }
    acc * inv
}

/// Mean over the batch of the per-field observed-entry mean squared errors
/// (coefficient term plus solution term), with the full parameter gradient.
///
/// Per-example work fans out across the rayon pool when the `parallel`
/// feature is on; gradients are reduced in index order, so the result is
/// bit-identical to the sequential build.
pub fn loss_and_grad(
    params: &NetworkParams,
    batch: &[TrainExample<'_>],
) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::config("empty training batch"));
    }
    let pcount = params.values.len();
    let b = batch.len();

    let per_sample: Vec<Result<(f64, Vec<f64>)>> = map_indexed(b, |bi| {
        let ex = &batch[bi];
        let (cache, out) = forward_cached(params, &ex.input)?;
        let n = ex.input.size();
        let nn = n * n;
        let mut gout = vec![0.0; 2 * nn];
        let loss_a =
            masked_mse_and_grad(&out[..nn], ex.target_coeff, ex.observe_coeff, b, &mut gout[..nn]);
        let loss_u = masked_mse_and_grad(
            &out[nn..],
            ex.target_sol,
            ex.observe_sol,
            b,
            &mut gout[nn..],
        );
        let mut grad = vec![0.0; pcount];
        backward(params, &cache, &gout, &mut grad);
        Ok((loss_a + loss_u, grad))
    });

    let mut total = 0.0;
    let mut grad = vec![0.0; pcount];
    for item in per_sample {
        let (l, g) = item?;
        total += l;
        for i in 0..pcount {
            grad[i] += g[i];
        }
    }
    total /= b as f64;
    if !total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::numeric("loss or gradient became non-finite"));
    }
    Ok((total, grad))
}

// ===================================================================
// Checkpoints
// ===================================================================

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"APRM";

/// Write parameters to the checkpoint container (f64, bit-exact round trip).
pub fn write_checkpoint(path: &Path, params: &NetworkParams) -> Result<()> {
    let text = params.descriptor.to_text();
    let mut buf = Vec::with_capacity(16 + text.len() + params.values.len() * 8);
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&(text.len() as u32).to_le_bytes());
    buf.extend_from_slice(text.as_bytes());
    buf.extend_from_slice(&(params.values.len() as u64).to_le_bytes());
    for &v in &params.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

/// Read a checkpoint back; validates magic, descriptor, and length.
pub fn read_checkpoint(path: &Path) -> Result<NetworkParams> {
    let mut r = BufReader::new(File::open(path)?);
    let disp = path.display().to_string();
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::format(disp.clone(), "truncated magic"))?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::format(disp, "bad magic, not a checkpoint file"));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)
        .map_err(|_| Error::format(disp.clone(), "truncated descriptor length"))?;
    let tlen = u32::from_le_bytes(u32buf) as usize;
    let mut text = vec![0u8; tlen];
    r.read_exact(&mut text)
        .map_err(|_| Error::format(disp.clone(), "truncated descriptor"))?;
    let text = String::from_utf8(text)
        .map_err(|_| Error::format(disp.clone(), "descriptor is not UTF-8"))?;
    let descriptor = ModelDescriptor::from_text(&text)?;
    let mut u64buf = [0u8; 8];
    r.read_exact(&mut u64buf)
        .map_err(|_| Error::format(disp.clone(), "truncated parameter count"))?;
    let count = u64::from_le_bytes(u64buf) as usize;
    if count != descriptor.param_count() {
        return Err(Error::format(
            disp,
            format!(
                "parameter count {count} does not match descriptor ({})",
                descriptor.param_count()
            ),
        ));
    }
    let mut bytes = vec![0u8; count * 8];
    r.read_exact(&mut bytes)
        .map_err(|_| Error::format(disp.clone(), "truncated parameters"))?;
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::format(disp, "trailing bytes after parameters"));
    }
    Ok(NetworkParams { descriptor, values })
}
