//! Masked rectified-flow training and Euler sampling.
//!
//! Training interpolates each masked field toward unit Gaussian noise,
//! `x_t = t·(B̃x) + (1−t)·ε`, asks the network for the clean pair, and
//! supervises only on the measured entries `A` — while conditioning only on
//! the sub-masked entries `B̃ ⊆ A`, so the network can never tell truly
//! unobserved pixels from artificially withheld ones. Sampling integrates
//! the flow ODE with Euler steps at `t_k = k/K`, written in blend form
//! `x ← (1−c)·x + c·x̂` with `c = 1/(K−k)`, which is algebraically the
//! textbook update `x + v/K` for the `x̂`-parameterized velocity
//! `v = (x̂ − x)/(1 − t_k)` and lands bit-exactly on the prediction at the
//! final step.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::mask::{sample_submask, Mask, PartialObservation, SubmaskPolicy};
use crate::model::{forward, loss_and_grad, ModelInput, NetworkParams, TrainExample};
use crate::optim::{AdamW, OptimizerConfig};
use crate::seeds;

// ===================================================================
// Configuration
// ===================================================================

/// Which field the direct-regression mode conditions on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegressionDirection {
    /// Condition on coefficient observations, withhold all solution values.
    CoeffToSolution,
    /// Condition on solution observations, withhold all coefficient values.
    SolutionToCoeff,
    /// Condition on sub-masked observations of both fields.
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrainMode {
    /// Condition on everything measured: `B̃ = A`.
    Naive,
    /// Withhold a random sub-mask of the measurements from conditioning.
    Ambient,
    /// One-shot regression: no noise, no flow time.
    DirectRegression(RegressionDirection),
}

/// How often the conditioning sub-mask is redrawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResampleCadence {
    /// Fresh draw every time a sample is visited (default).
    PerStep,
    /// One draw per (epoch, sample).
    PerEpoch,
    /// One draw per sample, shared by all epochs.
    Fixed,
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub mode: TrainMode,
    pub submask: SubmaskPolicy,
    /// Feed the network `B̃∘x_t` (true, default) or the raw interpolant
    /// `x_t` of the masked field (false): the standard-inpainting variant
    /// where noise outside `B̃` stays visible.
    pub mask_midflow: bool,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerConfig,
    pub resample: ResampleCadence,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(mode: TrainMode, seed: u64) -> TrainConfig {
        TrainConfig {
            mode,
            submask: SubmaskPolicy::KeepFraction(2.0 / 3.0),
            mask_midflow: true,
            epochs: 1,
            batch_size: 16,
            optimizer: OptimizerConfig::default(),
            resample: ResampleCadence::PerStep,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("epochs must be positive"));
        }
        if self.batch_size == 0 || self.batch_size > MAX_BATCH {
            return Err(Error::config(format!(
                "batch size must be in 1..={MAX_BATCH}"
            )));
        }
        Ok(())
    }
}

/// Sampler settings.
#[derive(Debug, Clone)]
pub struct SampleConfig {
    /// Number of Euler steps = network evaluations (K ≥ 1).
    pub nfe: usize,
    pub seed: u64,
    /// Independent (noise, sub-mask) draws to average over.
    pub ensemble: usize,
    /// Sub-mask policy applied to the test-time measurement masks.
    pub submask: SubmaskPolicy,
    /// Must match the training-time flag.
    pub mask_midflow: bool,
    /// One-shot direct-regression prediction instead of flow integration.
    pub regression: bool,
    /// Snap the coefficient output to the nearer of two levels (binary
    /// media such as thresholded permeability).
    pub clamp_levels: Option<(f64, f64)>,
}

impl SampleConfig {
    pub fn new(nfe: usize, seed: u64) -> SampleConfig {
        SampleConfig {
            nfe,
            seed,
            ensemble: 1,
            submask: SubmaskPolicy::All,
            mask_midflow: true,
            regression: false,
            clamp_levels: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.nfe == 0 {
            return Err(Error::config("sampler needs at least one step"));
        }
        if self.ensemble == 0 {
            return Err(Error::config("ensemble size must be at least 1"));
        }
        Ok(())
    }
}

// ===================================================================
// Training data
// ===================================================================

/// Coefficient–solution pairs plus their fixed per-sample measurement
/// masks. The masks are part of the data: sample `i` keeps the same
/// `(A_a, A_u)` across every epoch.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub coefficients: Vec<Field>,
    pub solutions: Vec<Field>,
    pub coeff_masks: Vec<Mask>,
    pub sol_masks: Vec<Mask>,
}

impl TrainingSet {
    pub fn new(
        coefficients: Vec<Field>,
        solutions: Vec<Field>,
        coeff_masks: Vec<Mask>,
        sol_masks: Vec<Mask>,
    ) -> Result<TrainingSet> {
        let n = coefficients.len();
        if n == 0 {
            return Err(Error::config("training set is empty"));
        }
        if solutions.len() != n || coeff_masks.len() != n || sol_masks.len() != n {
            return Err(Error::config("training-set columns must have equal length"));
        }
        let size = coefficients[0].size();
        for i in 0..n {
            if coefficients[i].size() != size
                || solutions[i].size() != size
                || coeff_masks[i].size() != size
                || sol_masks[i].size() != size
            {
                return Err(Error::config("training-set grids must all match"));
            }
        }
        Ok(TrainingSet {
            coefficients,
            solutions,
            coeff_masks,
            sol_masks,
        })
    }

    /// Draw the fixed per-sample measurement masks from a policy, seeding
    /// each from the dedicated coefficient/solution mask streams.
    pub fn from_pairs(
        pairs: Vec<(Field, Field)>,
        coeff_policy: &crate::mask::MaskPolicy,
        sol_policy: &crate::mask::MaskPolicy,
        mask_seed: u64,
    ) -> Result<TrainingSet> {
        let size = pairs
            .first()
            .ok_or_else(|| Error::config("training set is empty"))?
            .0
            .size();
        let mut coefficients = Vec::with_capacity(pairs.len());
        let mut solutions = Vec::with_capacity(pairs.len());
        let mut coeff_masks = Vec::with_capacity(pairs.len());
        let mut sol_masks = Vec::with_capacity(pairs.len());
        for (i, (a, u)) in pairs.into_iter().enumerate() {
            coeff_masks.push(crate::mask::make_mask(
                size,
                coeff_policy,
                seeds::derive(mask_seed, seeds::stream::MASK_COEFF, i as u64),
            )?);
            sol_masks.push(crate::mask::make_mask(
                size,
                sol_policy,
                seeds::derive(mask_seed, seeds::stream::MASK_SOL, i as u64),
            )?);
            coefficients.push(a);
            solutions.push(u);
        }
        TrainingSet::new(coefficients, solutions, coeff_masks, sol_masks)
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn grid_size(&self) -> usize {
        self.coefficients[0].size()
    }
}

// ===================================================================
// Flow primitives
// ===================================================================

/// Linear mid-flow blend `t·x + (1−t)·ε`, exact at both endpoints.
pub fn interpolate(x_masked: &Field, noise: &Field, t: f64) -> Field {
    assert_eq!(x_masked.size(), noise.size());
    assert!((0.0..=1.0).contains(&t), "flow time outside [0,1]");
    Field::from_vec(
        x_masked.size(),
        x_masked
            .as_slice()
            .iter()
            .zip(noise.as_slice())
            .map(|(&x, &e)| t * x + (1.0 - t) * e)
            .collect(),
    )
}

/// Rectified-flow velocity under the clean-sample parameterization:
/// `v = (x̂ − x)/(1 − t)`. Guarded against `t ≥ 1`.
pub fn velocity(prediction: &Field, state: &Field, t: f64) -> Result<Field> {
    if t >= 1.0 {
        return Err(Error::config(format!(
            "velocity undefined at flow time {t} >= 1"
        )));
    }
    let inv = 1.0 / (1.0 - t);
    let mut v = prediction.clone();
    let s = state.as_slice();
    for (i, val) in v.as_mut_slice().iter_mut().enumerate() {
        *val = (*val - s[i]) * inv;
    }
    Ok(v)
}

/// Standard-normal field drawn entry by entry in row-major order.
pub fn noise_field(size: usize, rng: &mut ChaCha8Rng) -> Field {
    let mut f = Field::zeros(size);
    for v in f.as_mut_slice() {
        *v = rng.sample(StandardNormal);
    }
    f
}

fn indicator(mask: &Mask) -> Field {
    let n = mask.size();
    Field::from_vec(
        n,
        (0..n * n).map(|i| if mask.get(i) { 1.0 } else { 0.0 }).collect(),
    )
}

fn masked(field: &Field, mask: &Mask) -> Field {
    crate::mask::apply_mask(field, mask).values
}

/// Stack the six network input channels from per-field states and
/// conditioning data. Public so callers can reproduce the exact inputs the
/// trainer and sampler build (e.g. to verify sampling identities).
#[allow(clippy::too_many_arguments)]
pub fn assemble_input(
    state_a: &Field,
    state_u: &Field,
    cond_a: &PartialObservation,
    cond_u: &PartialObservation,
    t: f64,
    mask_midflow: bool,
    regression: bool,
) -> Result<ModelInput> {
    let size = state_a.size();
    let (ch0, ch1) = if regression {
        (Field::zeros(size), Field::zeros(size))
    } else if mask_midflow {
        (masked(state_a, &cond_a.mask), masked(state_u, &cond_u.mask))
    } else {
        (state_a.clone(), state_u.clone())
    };
    ModelInput::new(
        vec![
            ch0,
            ch1,
            cond_a.values.clone(),
            cond_u.values.clone(),
            indicator(&cond_a.mask),
            indicator(&cond_u.mask),
        ],
        if regression { 0.0 } else { t },
    )
}

// ===================================================================
// Training
// ===================================================================

/// Largest supported batch; per-sample seeds pack the slot into the low
/// bits of the derivation index.
pub const MAX_BATCH: usize = 256;

/// One recorded optimizer step.
#[derive(Debug, Clone, PartialEq)]
pub struct LossRecord {
    pub epoch: usize,
    pub step: usize,
    pub loss: f64,
    /// Gradient norm before clipping.
    pub grad_norm: f64,
    pub lr: f64,
}

/// Training output: the per-step trace plus per-epoch aggregates.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub records: Vec<LossRecord>,
    pub epoch_mean_loss: Vec<f64>,
    /// Masked-reconstruction loss on the held-out set after each epoch
    /// (empty when no held-out set was supplied).
    pub heldout_loss: Vec<f64>,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.loss)
    }
}

/// Sub-mask seed for one (epoch, sample) visit under the cadence rules.
fn conditioning_seed(
    cfg: &TrainConfig,
    stream: u64,
    epoch: usize,
    data_len: usize,
    sample: usize,
    rng: &mut ChaCha8Rng,
) -> u64 {
    match cfg.resample {
        ResampleCadence::PerStep => rng.random(),
        ResampleCadence::PerEpoch => seeds::derive(
            cfg.seed,
            stream,
            (epoch * data_len + sample) as u64,
        ),
        ResampleCadence::Fixed => seeds::derive(cfg.seed, stream, sample as u64),
    }
}

/// Conditioning masks for one visit of one sample, per training mode.
fn draw_conditioning(
    cfg: &TrainConfig,
    a_mask: &Mask,
    u_mask: &Mask,
    epoch: usize,
    data_len: usize,
    sample: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Mask, Mask)> {
    let policy_a;
    let policy_u;
    match cfg.mode {
        TrainMode::Naive => {
            policy_a = SubmaskPolicy::All;
            policy_u = SubmaskPolicy::All;
        }
        TrainMode::Ambient => {
            policy_a = cfg.submask.clone();
            policy_u = cfg.submask.clone();
        }
        TrainMode::DirectRegression(direction) => match direction {
            RegressionDirection::CoeffToSolution => {
                policy_a = SubmaskPolicy::All;
                policy_u = SubmaskPolicy::Nothing;
            }
            RegressionDirection::SolutionToCoeff => {
                policy_a = SubmaskPolicy::Nothing;
                policy_u = SubmaskPolicy::All;
            }
            RegressionDirection::Joint => {
                policy_a = cfg.submask.clone();
                policy_u = cfg.submask.clone();
            }
        },
    }
    let seed_a = conditioning_seed(cfg, seeds::stream::MASK_COEFF, epoch, data_len, sample, rng);
    let seed_u = conditioning_seed(cfg, seeds::stream::MASK_SOL, epoch, data_len, sample, rng);
    Ok((
        sample_submask(a_mask, &policy_a, seed_a)?,
        sample_submask(u_mask, &policy_u, seed_u)?,
    ))
}

/// Build the supervised example for one visit of sample `i`.
///
/// Per-visit randomness comes from a dedicated stream seeded by
/// `(config seed, global step, batch slot)`, so traces are reproducible
/// and independent of thread count. Draw order: flow time, coefficient
/// noise, solution noise, sub-mask seeds.
#[allow(clippy::too_many_arguments)]
fn build_example<'a>(
    data: &'a TrainingSet,
    cfg: &TrainConfig,
    epoch: usize,
    gstep: usize,
    slot: usize,
    i: usize,
) -> Result<TrainExample<'a>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(
        cfg.seed,
        seeds::stream::TRAIN,
        ((gstep as u64) << 8) | slot as u64,
    ));
    let regression = matches!(cfg.mode, TrainMode::DirectRegression(_));
    let size = data.grid_size();
    let t: f64 = rng.random(); // U[0, 1)
    let eps_a = noise_field(size, &mut rng);
    let eps_u = noise_field(size, &mut rng);
    let (b_a, b_u) = draw_conditioning(
        cfg,
        &data.coeff_masks[i],
        &data.sol_masks[i],
        epoch,
        data.len(),
        i,
        &mut rng,
    )?;
    let cond_a = crate::mask::apply_mask(&data.coefficients[i], &b_a);
    let cond_u = crate::mask::apply_mask(&data.solutions[i], &b_u);
    let (state_a, state_u) = if regression {
        (Field::zeros(size), Field::zeros(size))
    } else {
        (
            interpolate(&cond_a.values, &eps_a, t),
            interpolate(&cond_u.values, &eps_u, t),
        )
    };
    let input = assemble_input(
        &state_a,
        &state_u,
        &cond_a,
        &cond_u,
        t,
        cfg.mask_midflow,
        regression,
    )?;
    Ok(TrainExample {
        input,
        target_coeff: &data.coefficients[i],
        target_sol: &data.solutions[i],
        observe_coeff: &data.coeff_masks[i],
        observe_sol: &data.sol_masks[i],
    })
}

/// One optimizer update on the given sample indices.
#[allow(clippy::too_many_arguments)]
pub fn train_step(
    params: &mut NetworkParams,
    optimizer: &mut AdamW,
    data: &TrainingSet,
    batch: &[usize],
    cfg: &TrainConfig,
    epoch: usize,
    step: usize,
    gstep: usize,
) -> Result<LossRecord> {
    let examples = batch
        .iter()
        .enumerate()
        .map(|(slot, &i)| build_example(data, cfg, epoch, gstep, slot, i))
        .collect::<Result<Vec<_>>>()?;
    let (loss, mut grad) = loss_and_grad(params, &examples).map_err(|e| match e {
        Error::Numeric(msg) => {
            Error::numeric(format!("{msg} (epoch {epoch}, step {step})"))
        }
        other => other,
    })?;
    let grad_norm = optimizer.clip(&mut grad);
    optimizer.update(&mut params.values, &grad);
    Ok(LossRecord {
        epoch,
        step,
        loss,
        grad_norm,
        lr: cfg.optimizer.lr,
    })
}

/// Masked-reconstruction loss of the current parameters on a dataset
/// (no gradient, no update) — used for held-out tracking.
pub fn evaluate_loss(params: &NetworkParams, data: &TrainingSet, cfg: &TrainConfig) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..data.len() {
        // deterministic per-sample randomness independent of training steps
        let ex = build_example(data, cfg, 0, usize::MAX >> 9, i % MAX_BATCH, i)?;
        let (loss, _) = loss_and_grad(params, &[ex])?;
        total += loss;
    }
    Ok(total / data.len() as f64)
}

/// Full training loop: deterministic shuffling, mini-batches (final
/// partial batch included), one optimizer step each.
pub fn train(
    params: &mut NetworkParams,
    data: &TrainingSet,
    cfg: &TrainConfig,
    heldout: Option<&TrainingSet>,
) -> Result<TrainReport> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::config("training set is empty"));
    }
    let mut optimizer = AdamW::new(cfg.optimizer.clone(), params.values.len());
    let mut records = Vec::new();
    let mut epoch_mean_loss = Vec::with_capacity(cfg.epochs);
    let mut heldout_loss = Vec::new();
    let mut gstep = 0usize;
    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut shuffle_rng = ChaCha8Rng::seed_from_u64(seeds::derive(
            cfg.seed,
            seeds::stream::TRAIN,
            (1 << 63) | epoch as u64,
        ));
        order.shuffle(&mut shuffle_rng);
        let mut epoch_sum = 0.0;
        let mut steps = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            let record = train_step(params, &mut optimizer, data, batch, cfg, epoch, steps, gstep)?;
            epoch_sum += record.loss;
            records.push(record);
            steps += 1;
            gstep += 1;
        }
        epoch_mean_loss.push(epoch_sum / steps as f64);
        if let Some(h) = heldout {
            heldout_loss.push(evaluate_loss(params, h, cfg)?);
        }
        log::info!(
            "epoch {epoch}: mean loss {:.6e}{}",
            epoch_mean_loss[epoch],
            heldout_loss
                .last()
                .map(|h| format!(", heldout {h:.6e}"))
                .unwrap_or_default()
        );
    }
    Ok(TrainReport {
        records,
        epoch_mean_loss,
        heldout_loss,
    })
}

// ===================================================================
// Sampling
// ===================================================================

/// One generated pair plus observed-entry agreement diagnostics.
#[derive(Debug, Clone)]
pub struct SampleResult {
    pub coeff: Field,
    pub sol: Field,
    /// Relative L2 disagreement with the measurements at A-observed
    /// entries, per field (NaN when a field has no observations).
    pub agreement_coeff: f64,
    pub agreement_sol: f64,
}

/// Relative L2 distance at observed entries only.
fn observed_agreement(output: &Field, obs: &PartialObservation) -> f64 {
    let idx = obs.mask.observed_indices();
    if idx.is_empty() {
        return f64::NAN;
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for &i in &idx {
        let d = output.as_slice()[i] - obs.values.as_slice()[i];
        num += d * d;
        den += obs.values.as_slice()[i].powi(2);
    }
    if den == 0.0 {
        return num.sqrt();
    }
    (num / den).sqrt()
}

fn snap_levels(field: &mut Field, lo: f64, hi: f64) {
    for v in field.as_mut_slice() {
        *v = if (*v - lo).abs() <= (*v - hi).abs() { lo } else { hi };
    }
}

/// Core sampler over an arbitrary predictor; the public entry points pass
/// the network forward. `draw` indexes the ensemble member and fixes all
/// randomness.
fn sample_with<F>(
    mut predict: F,
    obs_a: &PartialObservation,
    obs_u: &PartialObservation,
    cfg: &SampleConfig,
    draw: u64,
) -> Result<SampleResult>
where
    F: FnMut(&ModelInput) -> Result<(Field, Field)>,
{
    cfg.validate()?;
    let size = obs_a.values.size();
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(cfg.seed, seeds::stream::SAMPLE, draw));
    let sub_seed_a: u64 = rng.random();
    let sub_seed_u: u64 = rng.random();
    let b_a = sample_submask(&obs_a.mask, &cfg.submask, sub_seed_a)?;
    let b_u = sample_submask(&obs_u.mask, &cfg.submask, sub_seed_u)?;
    let cond_a = crate::mask::apply_mask(&obs_a.values, &b_a);
    let cond_u = crate::mask::apply_mask(&obs_u.values, &b_u);

    let mut a = noise_field(size, &mut rng);
    let mut u = noise_field(size, &mut rng);

    if cfg.regression {
        let input = assemble_input(&a, &u, &cond_a, &cond_u, 0.0, cfg.mask_midflow, true)?;
        let (pa, pu) = predict(&input)?;
        a = pa;
        u = pu;
    } else {
        let k_total = cfg.nfe;
        for k in 0..k_total {
            let t_k = k as f64 / k_total as f64;
            let input = assemble_input(&a, &u, &cond_a, &cond_u, t_k, cfg.mask_midflow, false)?;
            let (pred_a, pred_u) = predict(&input)?;
            // Euler step x += v/K in blend form; exact at the last step.
            let c = 1.0 / (k_total - k) as f64;
            a.blend_toward(&pred_a, c);
            u.blend_toward(&pred_u, c);
        }
    }
    if let Some((lo, hi)) = cfg.clamp_levels {
        snap_levels(&mut a, lo, hi);
    }
    let agreement_coeff = observed_agreement(&a, obs_a);
    let agreement_sol = observed_agreement(&u, obs_u);
    Ok(SampleResult {
        coeff: a,
        sol: u,
        agreement_coeff,
        agreement_sol,
    })
}

/// Generate one pair conditioned on partial observations of both fields.
pub fn sample(
    params: &NetworkParams,
    obs_a: &PartialObservation,
    obs_u: &PartialObservation,
    cfg: &SampleConfig,
) -> Result<SampleResult> {
    sample_with(
        |input| {
            let out = forward(params, input)?;
            Ok((out.coeff, out.sol))
        },
        obs_a,
        obs_u,
        cfg,
        0,
    )
}

/// Ensemble statistics over independent (noise, sub-mask) draws.
#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub mean_coeff: Field,
    pub mean_sol: Field,
    pub std_coeff: Field,
    pub std_sol: Field,
    pub members: Vec<SampleResult>,
}

/// Draw `cfg.ensemble` independent samples and reduce to per-pixel mean
/// and (population) standard deviation.
pub fn sample_ensemble(
    params: &NetworkParams,
    obs_a: &PartialObservation,
    obs_u: &PartialObservation,
    cfg: &SampleConfig,
) -> Result<EnsembleResult> {
    cfg.validate()?;
    let members = (0..cfg.ensemble)
        .map(|j| {
            sample_with(
                |input| {
                    let out = forward(params, input)?;
                    Ok((out.coeff, out.sol))
                },
                obs_a,
                obs_u,
                cfg,
                j as u64,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let size = obs_a.values.size();
    let n = members.len() as f64;
    let stats = |pick: fn(&SampleResult) -> &Field| {
        let mut mean = Field::zeros(size);
        for m in &members {
            mean = mean.add_scaled(pick(m), 1.0 / n);
        }
        let mut var = Field::zeros(size);
        for m in &members {
            let f = pick(m);
            for (i, v) in var.as_mut_slice().iter_mut().enumerate() {
                let d = f.as_slice()[i] - mean.as_slice()[i];
                *v += d * d / n;
            }
        }
        let std = var.map(|v| v.sqrt());
        (mean, std)
    };
    let (mean_coeff, std_coeff) = stats(|m| &m.coeff);
    let (mean_sol, std_sol) = stats(|m| &m.sol);
    Ok(EnsembleResult {
        mean_coeff,
        mean_sol,
        std_coeff,
        std_sol,
        members,
    })
}
