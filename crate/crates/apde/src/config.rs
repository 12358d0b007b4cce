//! Flat key=value experiment configuration.
//!
//! One document drives every command: lines of `section.key = value` with
//! `#` comments. Parsing validates each key against a fixed registry (typos
//! fail loudly instead of silently falling back to defaults), seeds are
//! always explicit, and a short content hash of the canonicalized document
//! is embedded in every output filename so artifacts can never be mixed up
//! across configs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::flow::{RegressionDirection, ResampleCadence, SampleConfig, TrainConfig, TrainMode};
use crate::mask::{MaskPolicy, SubmaskPolicy};
use crate::model::{Backbone, ModelDescriptor, PaddingMode};
use crate::optim::OptimizerConfig;
use crate::pde::PdeSpec;

/// Every key a configuration document may contain. Anything else is a
/// hard parse error.
pub const KNOWN_KEYS: &[&str] = &[
    // Dataset synthesis.
    "data.source",
    "data.kind",
    "data.resolution",
    "data.n_train",
    "data.n_test",
    "data.seed",
    // Gaussian-prior source (when data.source = prior).
    "prior.lengthscale",
    "prior.variance",
    "prior.jitter",
    // Per-family physical parameters (when data.source = pde).
    "pde.grf_amplitude",
    "pde.grf_exponent",
    "pde.helmholtz_k",
    "pde.darcy_threshold",
    "pde.darcy_low",
    "pde.darcy_high",
    "pde.darcy_forcing",
    "pde.ns_viscosity",
    "pde.ns_horizon",
    "pde.ns_steps",
    // Measurement masks.
    "mask.policy",
    "mask.keep_fraction",
    "mask.patch_size",
    "mask.window_col0",
    "mask.window_row0",
    "mask.window_width",
    "mask.window_height",
    "mask.factor",
    "mask.shift_row",
    "mask.shift_col",
    "mask.seed",
    // Training.
    "train.mode",
    "train.submask",
    "train.submask_fraction",
    "train.submask_count",
    "train.submask_patch_size",
    "train.mask_midflow",
    "train.epochs",
    "train.batch_size",
    "train.lr",
    "train.weight_decay",
    "train.beta1",
    "train.beta2",
    "train.eps",
    "train.clip_norm",
    "train.resample",
    "train.backbone",
    "train.width",
    "train.blocks",
    "train.embed_dim",
    "train.padding",
    "train.modes",
    "train.resume",
    "train.seed",
    // Sampling and evaluation.
    "sample.nfe",
    "sample.nfe_list",
    "sample.ensemble",
    "sample.submask",
    "sample.submask_fraction",
    "sample.submask_count",
    "sample.submask_patch_size",
    "sample.mask_midflow",
    "sample.regression",
    "sample.clamp_levels",
    "sample.count",
    "sample.seed",
    // One-point sweep.
    "sweep.counts",
    // Super-resolution protocol.
    "superres.factor",
    "superres.base",
    "superres.fractions",
    "superres.n_train",
    "superres.n_test",
];

/// A validated, immutable-by-convention key=value document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExperimentConfig {
    entries: BTreeMap<String, String>,
}

fn known(key: &str) -> bool {
    KNOWN_KEYS.contains(&key)
}

impl ExperimentConfig {
    /// An empty document; populate with [`ExperimentConfig::set`].
    pub fn empty() -> ExperimentConfig {
        ExperimentConfig::default()
    }

    /// Parse a document. Blank lines and `#` comments are skipped; every
    /// other line must be `key = value` with a registered key, and no key
    /// may appear twice.
    pub fn parse_str(text: &str) -> Result<ExperimentConfig> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(format!("line {}: expected `key = value`, got `{line}`", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            if !known(key) {
                return Err(Error::config(format!("line {}: unknown key `{key}`", lineno + 1)));
            }
            if value.is_empty() {
                return Err(Error::config(format!("line {}: key `{key}` has an empty value", lineno + 1)));
            }
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(Error::config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
        }
        Ok(ExperimentConfig { entries })
    }

    /// Read and parse a config file.
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::format(path.display().to_string(), format!("cannot read config: {e}")))?;
        ExperimentConfig::parse_str(&text)
    }

    /// Set (or overwrite) one entry. The key must be registered.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !known(key) {
            return Err(Error::config(format!("unknown key `{key}`")));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Overwrite every `*.seed` entry with one value (the `--seed` flag).
    /// Seeds the config never mentioned stay absent.
    pub fn override_seeds(&mut self, seed: u64) {
        let keys: Vec<String> = self
            .entries
            .keys()
            .filter(|k| k.ends_with(".seed"))
            .cloned()
            .collect();
        for k in keys {
            self.entries.insert(k, seed.to_string());
        }
    }

    /// The canonical text: sorted `key=value` lines, one per line. Two
    /// documents that differ only in comments, ordering, or whitespace
    /// canonicalize identically.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    /// Eight hex characters of SHA-256 over the canonical text. This is the
    /// tag embedded in every output filename.
    pub fn hash8(&self) -> String {
        let digest = Sha256::digest(self.canonical_text().as_bytes());
        let mut tag = String::with_capacity(8);
        for byte in &digest[..4] {
            let _ = write!(tag, "{byte:02x}");
        }
        tag
    }

    /// Raw lookup.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                Error::config(format!("key `{key}`: `{raw}` is not a valid {what}"))
            }),
        }
    }

    /// A required integer seed; absence is an error (seeds are never
    /// defaulted).
    pub fn require_seed(&self, key: &str) -> Result<u64> {
        self.parsed::<u64>(key, "seed (unsigned integer)")?
            .ok_or_else(|| Error::config(format!("missing required key `{key}`: all seeds must be explicit")))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.parsed::<usize>(key, "unsigned integer")?.unwrap_or(default))
    }

    pub fn require_usize(&self, key: &str) -> Result<usize> {
        self.parsed::<usize>(key, "unsigned integer")?
            .ok_or_else(|| Error::config(format!("missing required key `{key}`")))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.parsed::<f64>(key, "number")?.unwrap_or(default))
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(raw) => Err(Error::config(format!(
                "key `{key}`: `{raw}` is not a valid boolean (use true or false)"
            ))),
        }
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.get(key).unwrap_or(default)
    }

    fn usize_list_or(&self, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(raw) => raw
                .split(',')
                .map(|tok| {
                    tok.trim().parse::<usize>().map_err(|_| {
                        Error::config(format!("key `{key}`: `{tok}` is not an unsigned integer"))
                    })
                })
                .collect(),
        }
    }

    fn f64_list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(raw) => raw
                .split(',')
                .map(|tok| {
                    tok.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::config(format!("key `{key}`: `{tok}` is not a number")))
                })
                .collect(),
        }
    }

    // ----- section assembly -------------------------------------------------

    /// `data.source`: synthesize pairs from a PDE solve or draw both fields
    /// from a Gaussian prior.
    pub fn data_source(&self) -> Result<DataSource> {
        match self.str_or("data.source", "pde") {
            "pde" => Ok(DataSource::Pde),
            "prior" => Ok(DataSource::Prior),
            other => Err(Error::config(format!(
                "data.source must be pde or prior, got `{other}`"
            ))),
        }
    }

    /// Problem family plus physical parameters, resolved against defaults.
    pub fn pde_spec(&self) -> Result<PdeSpec> {
        let resolution = self.require_usize("data.resolution")?;
        let mut spec = match self.str_or("data.kind", "poisson") {
            "poisson" => PdeSpec::poisson(resolution),
            "helmholtz" => PdeSpec::helmholtz(resolution),
            "darcy" => PdeSpec::darcy(resolution),
            "navier_stokes" => PdeSpec::navier_stokes(resolution),
            other => {
                return Err(Error::config(format!(
                    "data.kind must be poisson, helmholtz, darcy, or navier_stokes, got `{other}`"
                )))
            }
        };
        spec.grf.amplitude = self.f64_or("pde.grf_amplitude", spec.grf.amplitude)?;
        spec.grf.exponent = self.f64_or("pde.grf_exponent", spec.grf.exponent)?;
        spec.helmholtz_k = self.f64_or("pde.helmholtz_k", spec.helmholtz_k)?;
        spec.darcy_threshold = self.f64_or("pde.darcy_threshold", spec.darcy_threshold)?;
        spec.darcy_levels = (
            self.f64_or("pde.darcy_low", spec.darcy_levels.0)?,
            self.f64_or("pde.darcy_high", spec.darcy_levels.1)?,
        );
        spec.darcy_forcing = self.f64_or("pde.darcy_forcing", spec.darcy_forcing)?;
        spec.ns_viscosity = self.f64_or("pde.ns_viscosity", spec.ns_viscosity)?;
        spec.ns_horizon = self.f64_or("pde.ns_horizon", spec.ns_horizon)?;
        spec.ns_steps = self.usize_or("pde.ns_steps", spec.ns_steps)?;
        Ok(spec)
    }

    /// Measurement-mask policy (`mask.*`).
    pub fn mask_policy(&self) -> Result<MaskPolicy> {
        let keep = self.f64_or("mask.keep_fraction", 0.1)?;
        match self.str_or("mask.policy", "random") {
            "random" => Ok(MaskPolicy::Random { keep_fraction: keep }),
            "patch" => Ok(MaskPolicy::Patch {
                keep_fraction: keep,
                patch_size: self.usize_or("mask.patch_size", 4)?,
            }),
            "column" => Ok(MaskPolicy::Column { keep_fraction: keep }),
            "window" => Ok(MaskPolicy::Window {
                col0: self.require_usize("mask.window_col0")?,
                row0: self.require_usize("mask.window_row0")?,
                width: self.require_usize("mask.window_width")?,
                height: self.require_usize("mask.window_height")?,
            }),
            "lattice" => Ok(MaskPolicy::SuperResLattice {
                factor: self.require_usize("mask.factor")?,
                shift: (
                    self.usize_or("mask.shift_row", 0)?,
                    self.usize_or("mask.shift_col", 0)?,
                ),
            }),
            other => Err(Error::config(format!(
                "mask.policy must be random, patch, column, window, or lattice, got `{other}`"
            ))),
        }
    }

    fn submask_policy(&self, section: &str, default: SubmaskPolicy) -> Result<SubmaskPolicy> {
        let key = format!("{section}.submask");
        let Some(token) = self.get(&key) else {
            return Ok(default);
        };
        match token {
            "all" => Ok(SubmaskPolicy::All),
            "nothing" => Ok(SubmaskPolicy::Nothing),
            "keep_fraction" => Ok(SubmaskPolicy::KeepFraction(
                self.f64_or(&format!("{section}.submask_fraction"), 2.0 / 3.0)?,
            )),
            "withhold_count" => Ok(SubmaskPolicy::WithholdCount(
                self.require_usize(&format!("{section}.submask_count"))?,
            )),
            "withhold_columns" => Ok(SubmaskPolicy::WithholdColumns(
                self.require_usize(&format!("{section}.submask_count"))?,
            )),
            "withhold_patches" => Ok(SubmaskPolicy::WithholdPatches {
                count: self.require_usize(&format!("{section}.submask_count"))?,
                size: self.usize_or(&format!("{section}.submask_patch_size"), 4)?,
            }),
            other => Err(Error::config(format!(
                "{key} must be all, nothing, keep_fraction, withhold_count, \
                 withhold_columns, or withhold_patches, got `{other}`"
            ))),
        }
    }

    /// Training mode (`train.mode`).
    pub fn train_mode(&self) -> Result<TrainMode> {
        match self.str_or("train.mode", "ambient") {
            "ambient" => Ok(TrainMode::Ambient),
            "naive" => Ok(TrainMode::Naive),
            "coeff_to_sol" => Ok(TrainMode::DirectRegression(RegressionDirection::CoeffToSolution)),
            "sol_to_coeff" => Ok(TrainMode::DirectRegression(RegressionDirection::SolutionToCoeff)),
            "joint" => Ok(TrainMode::DirectRegression(RegressionDirection::Joint)),
            other => Err(Error::config(format!(
                "train.mode must be ambient, naive, coeff_to_sol, sol_to_coeff, or joint, got `{other}`"
            ))),
        }
    }

    /// Full training configuration (`train.*`), seed required.
    pub fn train_config(&self) -> Result<TrainConfig> {
        let mut cfg = TrainConfig::new(self.train_mode()?, self.require_seed("train.seed")?);
        cfg.submask = self.submask_policy("train", cfg.submask.clone())?;
        cfg.mask_midflow = self.bool_or("train.mask_midflow", cfg.mask_midflow)?;
        cfg.epochs = self.usize_or("train.epochs", cfg.epochs)?;
        cfg.batch_size = self.usize_or("train.batch_size", cfg.batch_size)?;
        let base = OptimizerConfig::default();
        cfg.optimizer = OptimizerConfig {
            lr: self.f64_or("train.lr", base.lr)?,
            weight_decay: self.f64_or("train.weight_decay", base.weight_decay)?,
            beta1: self.f64_or("train.beta1", base.beta1)?,
            beta2: self.f64_or("train.beta2", base.beta2)?,
            eps: self.f64_or("train.eps", base.eps)?,
            clip_norm: self.f64_or("train.clip_norm", base.clip_norm)?,
        };
        cfg.resample = match self.str_or("train.resample", "per_step") {
            "per_step" => ResampleCadence::PerStep,
            "per_epoch" => ResampleCadence::PerEpoch,
            "fixed" => ResampleCadence::Fixed,
            other => {
                return Err(Error::config(format!(
                    "train.resample must be per_step, per_epoch, or fixed, got `{other}`"
                )))
            }
        };
        Ok(cfg)
    }

    /// Network architecture (`train.backbone` and friends).
    pub fn model_descriptor(&self) -> Result<ModelDescriptor> {
        let backbone = match self.str_or("train.backbone", "conv") {
            "conv" => Backbone::Conv,
            "spectral" => Backbone::Spectral,
            other => {
                return Err(Error::config(format!(
                    "train.backbone must be conv or spectral, got `{other}`"
                )))
            }
        };
        let padding = match self.str_or("train.padding", "periodic") {
            "periodic" => PaddingMode::Periodic,
            "reflect" => PaddingMode::Reflect,
            other => {
                return Err(Error::config(format!(
                    "train.padding must be periodic or reflect, got `{other}`"
                )))
            }
        };
        let descriptor = ModelDescriptor {
            backbone,
            width: self.usize_or("train.width", 16)?,
            blocks: self.usize_or("train.blocks", 2)?,
            embed_dim: self.usize_or("train.embed_dim", 4)?,
            padding,
            modes: self.usize_or("train.modes", if backbone == Backbone::Spectral { 8 } else { 0 })?,
        };
        descriptor.validate()?;
        Ok(descriptor)
    }

    /// Sampling configuration (`sample.*`), seed required. Regression mode
    /// defaults to on when the training mode is a direct regressor.
    pub fn sample_config(&self) -> Result<SampleConfig> {
        let mut cfg = SampleConfig::new(
            self.usize_or("sample.nfe", 4)?,
            self.require_seed("sample.seed")?,
        );
        cfg.ensemble = self.usize_or("sample.ensemble", cfg.ensemble)?;
        cfg.submask = self.submask_policy("sample", cfg.submask.clone())?;
        cfg.mask_midflow = self.bool_or(
            "sample.mask_midflow",
            self.bool_or("train.mask_midflow", cfg.mask_midflow)?,
        )?;
        let regresses = matches!(self.train_mode()?, TrainMode::DirectRegression(_));
        cfg.regression = self.bool_or("sample.regression", regresses)?;
        cfg.clamp_levels = match self.get("sample.clamp_levels") {
            None => None,
            Some(raw) => {
                let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
                if parts.len() != 2 {
                    return Err(Error::config(format!(
                        "sample.clamp_levels must be `low,high`, got `{raw}`"
                    )));
                }
                let lo = parts[0].parse::<f64>().map_err(|_| {
                    Error::config(format!("sample.clamp_levels: `{}` is not a number", parts[0]))
                })?;
                let hi = parts[1].parse::<f64>().map_err(|_| {
                    Error::config(format!("sample.clamp_levels: `{}` is not a number", parts[1]))
                })?;
                Some((lo, hi))
            }
        };
        Ok(cfg)
    }

    /// Step-count grid reported by the evaluate command.
    pub fn nfe_list(&self) -> Result<Vec<usize>> {
        let list = self.usize_list_or("sample.nfe_list", &[1, 4, 16])?;
        if list.is_empty() || list.contains(&0) {
            return Err(Error::config("sample.nfe_list must be nonempty positive integers"));
        }
        Ok(list)
    }

    /// Withheld-point counts for the one-point sweep (must start at 0).
    pub fn sweep_counts(&self) -> Result<Vec<usize>> {
        self.usize_list_or("sweep.counts", &[0, 1, 2, 4, 8, 16, 32, 64, 128, 256])
    }

    /// Gaussian-prior parameters (`prior.*`).
    pub fn prior_params(&self) -> Result<PriorParams> {
        let variance = self.f64_or("prior.variance", 1.0)?;
        Ok(PriorParams {
            lengthscale: self.f64_or("prior.lengthscale", 0.3)?,
            variance,
            jitter: self.parsed::<f64>("prior.jitter", "number")?,
        })
    }

    /// Super-resolution protocol parameters (`superres.*`).
    pub fn superres_params(&self) -> Result<SuperResParams> {
        let factor = self.usize_or("superres.factor", 4)?;
        let base = self.usize_or("superres.base", 8)?;
        let fractions = self.f64_list_or("superres.fractions", &[93.75, 97.0, 98.0, 99.0, 99.5])?;
        for &f in &fractions {
            if !(0.0..100.0).contains(&f) {
                return Err(Error::config(format!(
                    "superres.fractions entries must lie in [0, 100), got {f}"
                )));
            }
        }
        Ok(SuperResParams {
            factor,
            base,
            fractions,
            n_train: self.usize_or("superres.n_train", 200)?,
            n_test: self.usize_or("superres.n_test", 8)?,
        })
    }
}

/// Where training pairs come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataSource {
    /// Coefficient drawn from a random field, solution from the solver.
    Pde,
    /// Both fields drawn independently from the Gaussian prior (analytic
    /// ground truth available).
    Prior,
}

/// Parameters of the squared-exponential Gaussian prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorParams {
    pub lengthscale: f64,
    pub variance: f64,
    /// Explicit diagonal jitter; `None` selects the scale-aware default.
    pub jitter: Option<f64>,
}

/// Parameters of the super-resolution experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperResParams {
    /// Inflation factor between the coarse lattice and the fine grid.
    pub factor: usize,
    /// Coarse grid side; the fine side is `base * factor`.
    pub base: usize,
    /// Target total-unobserved percentages for the extra-mask sweep.
    pub fractions: Vec<f64>,
    pub n_train: usize,
    pub n_test: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::PdeKind;

    fn sample_text() -> &'static str {
        "\
# toy experiment
data.kind = darcy
data.resolution = 16
data.n_train = 8
data.n_test = 2
data.seed = 11

mask.policy = random
mask.keep_fraction = 0.25
mask.seed = 12

train.mode = ambient
train.epochs = 3
train.lr = 0.002
train.seed = 13

sample.nfe = 4
sample.seed = 14
"
    }

    #[test]
    fn parses_comments_blanks_and_whitespace() {
        let cfg = ExperimentConfig::parse_str(sample_text()).unwrap();
        assert_eq!(cfg.get("data.kind"), Some("darcy"));
        assert_eq!(cfg.require_usize("data.resolution").unwrap(), 16);
        assert_eq!(cfg.require_seed("train.seed").unwrap(), 13);
    }

    #[test]
    fn rejects_unknown_duplicate_and_malformed_keys() {
        let unknown = ExperimentConfig::parse_str("data.sede = 3\n").unwrap_err();
        assert!(unknown.to_string().contains("unknown key `data.sede`"), "{unknown}");

        let dup = ExperimentConfig::parse_str("data.seed = 1\ndata.seed = 2\n").unwrap_err();
        assert!(dup.to_string().contains("duplicate key"), "{dup}");

        let bare = ExperimentConfig::parse_str("data.seed\n").unwrap_err();
        assert!(bare.to_string().contains("expected `key = value`"), "{bare}");

        let empty = ExperimentConfig::parse_str("data.seed =\n").unwrap_err();
        assert!(empty.to_string().contains("empty value"), "{empty}");
    }

    #[test]
    fn hash_ignores_formatting_but_tracks_values() {
        let a = ExperimentConfig::parse_str(sample_text()).unwrap();
        let shuffled = "\
sample.seed=14
sample.nfe=4
train.seed=13
train.lr=0.002
train.epochs=3
train.mode=ambient
mask.seed=12
mask.keep_fraction=0.25
mask.policy=random
data.seed=11
data.n_test=2
data.n_train=8
data.resolution=16
data.kind=darcy
";
        let b = ExperimentConfig::parse_str(shuffled).unwrap();
        assert_eq!(a.hash8(), b.hash8());
        assert_eq!(a.hash8().len(), 8);
        assert!(a.hash8().chars().all(|c| c.is_ascii_hexdigit()));

        let mut c = a.clone();
        c.set("train.lr", "0.003").unwrap();
        assert_ne!(a.hash8(), c.hash8());
    }

    #[test]
    fn seed_override_touches_every_seed_key() {
        let mut cfg = ExperimentConfig::parse_str(sample_text()).unwrap();
        let before = cfg.hash8();
        cfg.override_seeds(99);
        for key in ["data.seed", "mask.seed", "train.seed", "sample.seed"] {
            assert_eq!(cfg.get(key), Some("99"), "{key}");
        }
        assert_ne!(cfg.hash8(), before);
        assert_eq!(cfg.get("train.lr"), Some("0.002"));
    }

    #[test]
    fn missing_seed_is_an_error_not_a_default() {
        let cfg = ExperimentConfig::parse_str("data.resolution = 16\n").unwrap();
        let err = cfg.require_seed("train.seed").unwrap_err();
        assert!(err.to_string().contains("train.seed"), "{err}");
        assert!(err.to_string().contains("explicit"), "{err}");
    }

    #[test]
    fn assembles_pde_spec_with_overrides() {
        let mut cfg = ExperimentConfig::parse_str(sample_text()).unwrap();
        cfg.set("pde.darcy_high", "9.0").unwrap();
        let spec = cfg.pde_spec().unwrap();
        assert_eq!(spec.kind, PdeKind::Darcy);
        assert_eq!(spec.resolution, 16);
        assert_eq!(spec.darcy_levels.1, 9.0);
        // Untouched values keep the family defaults.
        assert_eq!(spec.darcy_levels.0, PdeSpec::darcy(16).darcy_levels.0);
    }

    #[test]
    fn assembles_train_and_sample_configs() {
        let cfg = ExperimentConfig::parse_str(sample_text()).unwrap();
        let train = cfg.train_config().unwrap();
        assert_eq!(train.mode, TrainMode::Ambient);
        assert_eq!(train.epochs, 3);
        assert_eq!(train.optimizer.lr, 0.002);
        assert_eq!(train.seed, 13);
        assert_eq!(train.submask, SubmaskPolicy::KeepFraction(2.0 / 3.0));

        let sample = cfg.sample_config().unwrap();
        assert_eq!(sample.nfe, 4);
        assert_eq!(sample.seed, 14);
        assert!(!sample.regression);
        assert_eq!(cfg.nfe_list().unwrap(), vec![1, 4, 16]);
    }

    #[test]
    fn direct_modes_parse_and_imply_regression_sampling() {
        let mut cfg = ExperimentConfig::parse_str(sample_text()).unwrap();
        cfg.set("train.mode", "coeff_to_sol").unwrap();
        assert_eq!(
            cfg.train_mode().unwrap(),
            TrainMode::DirectRegression(RegressionDirection::CoeffToSolution)
        );
        assert!(cfg.sample_config().unwrap().regression);

        cfg.set("train.mode", "sideways").unwrap();
        let err = cfg.train_mode().unwrap_err();
        assert!(err.to_string().contains("train.mode"), "{err}");
    }

    #[test]
    fn submask_variants_parse_with_parameters() {
        let mut cfg = ExperimentConfig::parse_str(sample_text()).unwrap();
        cfg.set("train.submask", "withhold_count").unwrap();
        cfg.set("train.submask_count", "5").unwrap();
        assert_eq!(
            cfg.train_config().unwrap().submask,
            SubmaskPolicy::WithholdCount(5)
        );

        cfg.set("train.submask", "withhold_patches").unwrap();
        assert_eq!(
            cfg.train_config().unwrap().submask,
            SubmaskPolicy::WithholdPatches { count: 5, size: 4 }
        );

        cfg.set("train.submask", "keep_fraction").unwrap();
        cfg.set("train.submask_fraction", "0.5").unwrap();
        assert_eq!(
            cfg.train_config().unwrap().submask,
            SubmaskPolicy::KeepFraction(0.5)
        );
    }

    #[test]
    fn descriptor_validation_surfaces_config_errors() {
        let mut cfg = ExperimentConfig::parse_str(sample_text()).unwrap();
        let d = cfg.model_descriptor().unwrap();
        assert_eq!(d.backbone, Backbone::Conv);
        assert_eq!(d.width, 16);

        cfg.set("train.embed_dim", "3").unwrap();
        assert!(cfg.model_descriptor().is_err());

        cfg.set("train.embed_dim", "4").unwrap();
        cfg.set("train.backbone", "spectral").unwrap();
        let d = cfg.model_descriptor().unwrap();
        assert_eq!(d.backbone, Backbone::Spectral);
        assert_eq!(d.modes, 8);
    }

    #[test]
    fn mask_policies_parse() {
        let mut cfg = ExperimentConfig::parse_str(sample_text()).unwrap();
        assert_eq!(
            cfg.mask_policy().unwrap(),
            MaskPolicy::Random { keep_fraction: 0.25 }
        );
        cfg.set("mask.policy", "lattice").unwrap();
        cfg.set("mask.factor", "4").unwrap();
        assert_eq!(
            cfg.mask_policy().unwrap(),
            MaskPolicy::SuperResLattice { factor: 4, shift: (0, 0) }
        );
        cfg.set("mask.policy", "hexagonal").unwrap();
        assert!(cfg.mask_policy().is_err());
    }

    #[test]
    fn superres_and_sweep_defaults() {
        let cfg = ExperimentConfig::parse_str(sample_text()).unwrap();
        let sr = cfg.superres_params().unwrap();
        assert_eq!(sr.factor, 4);
        assert_eq!(sr.base, 8);
        assert_eq!(sr.fractions, vec![93.75, 97.0, 98.0, 99.0, 99.5]);
        assert_eq!(
            cfg.sweep_counts().unwrap(),
            vec![0, 1, 2, 4, 8, 16, 32, 64, 128, 256]
        );
        let prior = cfg.prior_params().unwrap();
        assert_eq!(prior.lengthscale, 0.3);
        assert_eq!(prior.variance, 1.0);
        assert_eq!(prior.jitter, None);
    }
}
