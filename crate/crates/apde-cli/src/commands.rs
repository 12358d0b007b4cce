//! Subcommand implementations.
//!
//! Shared plumbing: every command loads the config, applies the `--seed`
//! override, and computes the content hash that tags each artifact. Train
//! and test splits (both pairs and masks) are derived from the user-facing
//! seeds through a dedicated split stream, so the two sets never share
//! randomness while still being reproducible from one seed apiece.

use std::path::{Path, PathBuf};

use apde::config::{DataSource, ExperimentConfig, PriorParams};
use apde::dataset::{generate_dataset, read_dataset, write_dataset, PairedSample};
use apde::flow::{self, TrainingSet};
use apde::mask::{apply_mask, make_mask, MaskPolicy, SubmaskPolicy};
use apde::metrics::{self, restricted_error, Region};
use apde::model::{init_network, read_checkpoint, write_checkpoint, NetworkParams};
use apde::oracle::{build_prior, default_jitter, GaussianPrior};
use apde::pde::PdeKind;
use apde::seeds;
use apde::{Error, Field, Result};

use crate::plot::{line_plot, Series};
use crate::{Cli, Command};

pub fn run(cli: &Cli) -> Result<()> {
    let ctx = Ctx::new(cli)?;
    match cli.command {
        Command::Generate => generate(&ctx),
        Command::Train => train(&ctx),
        Command::Evaluate => evaluate(&ctx),
        Command::Sample => sample(&ctx),
        Command::Sweep => sweep(&ctx),
        Command::Superres => superres(&ctx),
    }
}

struct Ctx {
    cfg: ExperimentConfig,
    hash: String,
    out: PathBuf,
}

impl Ctx {
    fn new(cli: &Cli) -> Result<Ctx> {
        let path = cli
            .config
            .as_ref()
            .ok_or_else(|| Error::config("--config PATH is required"))?;
        let mut cfg = ExperimentConfig::load(path)?;
        if let Some(seed) = cli.seed {
            cfg.override_seeds(seed);
        }
        let hash = cfg.hash8();
        std::fs::create_dir_all(&cli.out)?;
        Ok(Ctx {
            cfg,
            hash,
            out: cli.out.clone(),
        })
    }

    /// `<out>/<stem>-<hash>.<ext>` — the hash ties every artifact to the
    /// configuration that produced it.
    fn artifact(&self, stem: &str, ext: &str) -> PathBuf {
        self.out.join(format!("{stem}-{}.{ext}", self.hash))
    }
}

/// Disjoint (train, test) sub-seeds from one user-facing seed.
fn split_seeds(seed: u64) -> (u64, u64) {
    (
        seeds::derive(seed, seeds::stream::SPLIT, 0),
        seeds::derive(seed, seeds::stream::SPLIT, 1),
    )
}

fn build_prior_from(params: &PriorParams, resolution: usize) -> Result<GaussianPrior> {
    build_prior(
        resolution,
        params.lengthscale,
        params.variance,
        params.jitter.unwrap_or_else(|| default_jitter(params.variance)),
    )
}

fn pairs_to_samples(pairs: Vec<(Field, Field)>) -> Vec<PairedSample> {
    pairs
        .into_iter()
        .map(|(coefficient, solution)| PairedSample {
            coefficient,
            solution,
        })
        .collect()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

// ===================================================================
// generate
// ===================================================================

fn generate(ctx: &Ctx) -> Result<()> {
    let n_train = ctx.cfg.require_usize("data.n_train")?;
    let n_test = ctx.cfg.require_usize("data.n_test")?;
    let (seed_train, seed_test) = split_seeds(ctx.cfg.require_seed("data.seed")?);
    let train_path = ctx.artifact("train", "apde");
    let test_path = ctx.artifact("test", "apde");

    match ctx.cfg.data_source()? {
        DataSource::Pde => {
            let spec = ctx.cfg.pde_spec()?;
            let r = generate_dataset(&spec, n_train, spec.resolution, seed_train, &train_path)?;
            println!(
                "wrote {} ({} pairs, max residual {:.3e})",
                train_path.display(),
                r.count,
                r.max_residual
            );
            let r = generate_dataset(&spec, n_test, spec.resolution, seed_test, &test_path)?;
            println!(
                "wrote {} ({} pairs, max residual {:.3e})",
                test_path.display(),
                r.count,
                r.max_residual
            );
        }
        DataSource::Prior => {
            let resolution = ctx.cfg.require_usize("data.resolution")?;
            let prior = build_prior_from(&ctx.cfg.prior_params()?, resolution)?;
            let tr = pairs_to_samples(apde::oracle::sample_prior_pairs(&prior, n_train, seed_train));
            let te = pairs_to_samples(apde::oracle::sample_prior_pairs(&prior, n_test, seed_test));
            write_dataset(&train_path, PdeKind::GaussianField, &tr)?;
            write_dataset(&test_path, PdeKind::GaussianField, &te)?;
            println!("wrote {} ({} prior pairs)", train_path.display(), tr.len());
            println!("wrote {} ({} prior pairs)", test_path.display(), te.len());
        }
    }
    Ok(())
}

// ===================================================================
// shared loading
// ===================================================================

fn require_file(path: &PathBuf, hint: &str) -> Result<()> {
    if !path.exists() {
        return Err(Error::format(
            path.display().to_string(),
            format!("not found; run `apde {hint}` with this config first"),
        ));
    }
    Ok(())
}

/// Read one split and attach its per-sample measurement masks.
fn load_split(ctx: &Ctx, which: &str) -> Result<(PdeKind, TrainingSet)> {
    let path = ctx.artifact(which, "apde");
    require_file(&path, "generate")?;
    let (kind, samples) = read_dataset(&path)?;
    let policy = ctx.cfg.mask_policy()?;
    let (m_train, m_test) = split_seeds(ctx.cfg.require_seed("mask.seed")?);
    let mask_seed = if which == "train" { m_train } else { m_test };
    let pairs = samples
        .into_iter()
        .map(|p| (p.coefficient, p.solution))
        .collect();
    let set = TrainingSet::from_pairs(pairs, &policy, &policy, mask_seed)?;
    Ok((kind, set))
}

fn load_checkpoint(ctx: &Ctx) -> Result<NetworkParams> {
    let path = ctx.artifact("checkpoint", "aprm");
    require_file(&path, "train")?;
    read_checkpoint(&path)
}

// ===================================================================
// train
// ===================================================================

fn train(ctx: &Ctx) -> Result<()> {
    let (_, set) = load_split(ctx, "train")?;
    let descriptor = ctx.cfg.model_descriptor()?;
    let tcfg = ctx.cfg.train_config()?;

    let mut params = match ctx.cfg.get("train.resume") {
        Some(resume) => {
            let path = Path::new(resume);
            let name = path
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            if !name.contains(&ctx.hash) {
                return Err(Error::config(format!(
                    "resume checkpoint `{name}` does not carry this config's hash `{}`; \
                     refusing to mix configurations",
                    ctx.hash
                )));
            }
            let params = read_checkpoint(path)?;
            if params.descriptor != descriptor {
                return Err(Error::config(
                    "resume checkpoint architecture differs from the configured model",
                ));
            }
            params
        }
        None => init_network(&descriptor, seeds::derive(tcfg.seed, seeds::stream::INIT, 0))?,
    };

    let report = flow::train(&mut params, &set, &tcfg, None)?;

    let ckpt = ctx.artifact("checkpoint", "aprm");
    write_checkpoint(&ckpt, &params)?;
    let mut csv = String::from("epoch,step,loss,lr\n");
    for r in &report.records {
        csv.push_str(&format!("{},{},{},{}\n", r.epoch, r.step, r.loss, r.lr));
    }
    let loss_path = ctx.artifact("loss", "csv");
    write_text(&loss_path, &csv)?;

    println!(
        "trained {} epoch(s) on {} pairs; final epoch mean loss {:.6e}",
        tcfg.epochs,
        set.len(),
        report.final_loss()
    );
    println!("wrote {}", ckpt.display());
    println!("wrote {}", loss_path.display());
    Ok(())
}

// ===================================================================
// evaluate
// ===================================================================

fn darcy_levels(ctx: &Ctx, kind: PdeKind) -> Result<Option<(f64, f64)>> {
    if kind == PdeKind::Darcy {
        Ok(Some(ctx.cfg.pde_spec()?.darcy_levels))
    } else {
        Ok(None)
    }
}

fn evaluate(ctx: &Ctx) -> Result<()> {
    let (kind, test) = load_split(ctx, "test")?;
    let params = load_checkpoint(ctx)?;
    let levels = darcy_levels(ctx, kind)?;
    let base = ctx.cfg.sample_config()?;
    let mode = ctx.cfg.str_or("train.mode", "ambient").to_string();

    // Direct regressors need a single network call; the step-count grid
    // only applies to flow sampling.
    let nfes = if base.regression {
        vec![base.nfe]
    } else {
        ctx.cfg.nfe_list()?
    };

    let mut csv = String::from("pde,mode,nfe,field,metric,value\n");
    for nfe in nfes {
        let mut scfg = base.clone();
        scfg.nfe = nfe;
        let report = metrics::evaluate(&params, &test, &scfg, levels)?;
        for (field, metric, value) in report.rows() {
            println!(
                "nfe {:>3}  {:<6} {:<22} {:>10.4}",
                report.nfe, field, metric, value
            );
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                kind.name(),
                mode,
                report.nfe,
                field,
                metric,
                value
            ));
        }
    }
    let path = ctx.artifact("eval", "csv");
    write_text(&path, &csv)?;
    println!("wrote {}", path.display());
    Ok(())
}

// ===================================================================
// sample
// ===================================================================

fn sample(ctx: &Ctx) -> Result<()> {
    let (kind, test) = load_split(ctx, "test")?;
    let params = load_checkpoint(ctx)?;
    let scfg = ctx.cfg.sample_config()?;
    let count = ctx.cfg.usize_or("sample.count", 1)?.min(test.len());
    if count == 0 {
        return Err(Error::config("sample.count must be at least 1"));
    }

    let mut outputs = Vec::with_capacity(count);
    let mut csv = String::from("case,field,agreement_pct\n");
    for i in 0..count {
        let mut cfg_i = scfg.clone();
        cfg_i.seed = seeds::derive(scfg.seed, seeds::stream::SAMPLE, i as u64);
        let obs_a = apply_mask(&test.coefficients[i], &test.coeff_masks[i]);
        let obs_u = apply_mask(&test.solutions[i], &test.sol_masks[i]);
        let r = flow::sample_ensemble(&params, &obs_a, &obs_u, &cfg_i)?;
        let agree_a = 100.0 * mean_finite(r.members.iter().map(|m| m.agreement_coeff));
        let agree_u = 100.0 * mean_finite(r.members.iter().map(|m| m.agreement_sol));
        println!("case {i}: observed agreement coeff {agree_a:.3}% sol {agree_u:.3}%");
        csv.push_str(&format!("{i},coeff,{agree_a}\n{i},sol,{agree_u}\n"));
        outputs.push(PairedSample {
            coefficient: r.mean_coeff,
            solution: r.mean_sol,
        });
    }

    let fields_path = ctx.artifact("samples", "apde");
    write_dataset(&fields_path, kind, &outputs)?;
    let csv_path = ctx.artifact("samples", "csv");
    write_text(&csv_path, &csv)?;
    println!("wrote {}", fields_path.display());
    println!("wrote {}", csv_path.display());
    Ok(())
}

fn mean_finite(values: impl Iterator<Item = f64>) -> f64 {
    let finite: Vec<f64> = values.filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return f64::NAN;
    }
    finite.iter().sum::<f64>() / finite.len() as f64
}

// ===================================================================
// sweep
// ===================================================================

/// Draw the error plot, falling back to a linear error axis if a value is
/// exactly zero (log axes need positive data).
fn write_error_plot(path: &Path, title: &str, xlabel: &str, series: &[Series]) -> Result<()> {
    let svg = match line_plot(title, xlabel, "relative error (%)", false, true, series) {
        Ok(svg) => svg,
        Err(_) => {
            log::warn!("non-positive error value; plotting {title} with a linear axis");
            line_plot(title, xlabel, "relative error (%)", false, false, series)?
        }
    };
    write_text(path, &svg)
}

fn sweep(ctx: &Ctx) -> Result<()> {
    let (_, train_set) = load_split(ctx, "train")?;
    let (_, test_set) = load_split(ctx, "test")?;
    let descriptor = ctx.cfg.model_descriptor()?;
    let tcfg = ctx.cfg.train_config()?;
    let scfg = ctx.cfg.sample_config()?;
    let counts = ctx.cfg.sweep_counts()?;
    let init = init_network(&descriptor, seeds::derive(tcfg.seed, seeds::stream::INIT, 0))?;

    let rows = metrics::one_point_sweep(&init, &train_set, &test_set, &counts, &tcfg, &scfg)?;

    let mut full = String::from("count,coeff_err_pct,sol_err_pct\n");
    let mut unobs = String::from("count,coeff_err_pct,sol_err_pct\n");
    for r in &rows {
        println!(
            "withheld {:>4}: full coeff {:.3}% sol {:.3}% | unobserved coeff {:.3}% sol {:.3}%",
            r.count, r.coeff_err_pct, r.sol_err_pct, r.coeff_unobserved_pct, r.sol_unobserved_pct
        );
        full.push_str(&format!("{},{},{}\n", r.count, r.coeff_err_pct, r.sol_err_pct));
        unobs.push_str(&format!(
            "{},{},{}\n",
            r.count, r.coeff_unobserved_pct, r.sol_unobserved_pct
        ));
    }
    let full_path = ctx.artifact("sweep-full", "csv");
    let unobs_path = ctx.artifact("sweep-unobserved", "csv");
    write_text(&full_path, &full)?;
    write_text(&unobs_path, &unobs)?;

    let series = vec![
        Series {
            label: "coeff unobserved".into(),
            points: rows.iter().map(|r| (r.count as f64, r.coeff_unobserved_pct)).collect(),
        },
        Series {
            label: "sol unobserved".into(),
            points: rows.iter().map(|r| (r.count as f64, r.sol_unobserved_pct)).collect(),
        },
    ];
    let svg_path = ctx.artifact("sweep", "svg");
    write_error_plot(&svg_path, "error vs withheld points", "withheld points", &series)?;

    println!("wrote {}", full_path.display());
    println!("wrote {}", unobs_path.display());
    println!("wrote {}", svg_path.display());
    Ok(())
}

// ===================================================================
// superres
// ===================================================================

/// Deterministic lattice shift for sample `i`, uniform over the
/// `factor × factor` offsets.
fn lattice_shift(mask_seed: u64, i: usize, factor: usize) -> (usize, usize) {
    let s = seeds::derive(mask_seed, seeds::stream::MASK_COEFF, i as u64);
    ((s as usize) % factor, ((s >> 16) as usize) % factor)
}

fn superres(ctx: &Ctx) -> Result<()> {
    let sr = ctx.cfg.superres_params()?;
    let prior_params = ctx.cfg.prior_params()?;
    let fine = sr.base * sr.factor;
    let prior = build_prior_from(&prior_params, fine)?;
    let (seed_train, seed_test) = split_seeds(ctx.cfg.require_seed("data.seed")?);
    let mask_seed = ctx.cfg.require_seed("mask.seed")?;

    // Training observations live on per-sample randomly shifted lattices:
    // across the set every pixel is measured somewhere, so conditional
    // inpainting learned between lattice points transfers off-lattice.
    let train_pairs = apde::oracle::sample_prior_pairs(&prior, sr.n_train, seed_train);
    let mut coeffs = Vec::with_capacity(sr.n_train);
    let mut sols = Vec::with_capacity(sr.n_train);
    let mut masks = Vec::with_capacity(sr.n_train);
    for (i, (a, u)) in train_pairs.into_iter().enumerate() {
        let shift = lattice_shift(mask_seed, i, sr.factor);
        let policy = MaskPolicy::SuperResLattice { factor: sr.factor, shift };
        masks.push(make_mask(fine, &policy, 0)?);
        coeffs.push(a);
        sols.push(u);
    }
    let train_set = TrainingSet::new(coeffs, sols, masks.clone(), masks)?;

    // Test cases condition on the canonical (unshifted) lattice.
    let test_pairs = apde::oracle::sample_prior_pairs(&prior, sr.n_test, seed_test);
    let lattice = make_mask(
        fine,
        &MaskPolicy::SuperResLattice { factor: sr.factor, shift: (0, 0) },
        0,
    )?;
    let (test_coeffs, test_sols): (Vec<Field>, Vec<Field>) = test_pairs.into_iter().unzip();
    let n_test = test_coeffs.len();
    let test_set = TrainingSet::new(
        test_coeffs,
        test_sols,
        vec![lattice.clone(); n_test],
        vec![lattice; n_test],
    )?;

    let descriptor = ctx.cfg.model_descriptor()?;
    let base_tcfg = ctx.cfg.train_config()?;
    let base_scfg = ctx.cfg.sample_config()?;
    let init = init_network(&descriptor, seeds::derive(base_tcfg.seed, seeds::stream::INIT, 0))?;
    let lattice_frac = 1.0 / (sr.factor * sr.factor) as f64;

    let mut csv = String::from(
        "target_unobserved_pct,actual_unobserved_pct,coeff_off_lattice_pct,sol_off_lattice_pct,\
         coeff_on_lattice_pct,sol_on_lattice_pct\n",
    );
    let mut coeff_points = Vec::new();
    let mut sol_points = Vec::new();

    for (fi, &target) in sr.fractions.iter().enumerate() {
        // Extra-mask strength that hits the requested total-unobserved
        // fraction: keep this share of each sample's lattice points.
        let mut keep = (1.0 - target / 100.0) / lattice_frac;
        if keep > 1.0 {
            log::warn!(
                "target {target}% total unobserved is weaker than the lattice spacing \
                 (the lattice alone leaves {:.2}% unobserved); clamping to no extra mask",
                100.0 * (1.0 - lattice_frac)
            );
            keep = 1.0;
        }
        let actual = 100.0 * (1.0 - keep * lattice_frac);

        let mut tcfg = base_tcfg.clone();
        tcfg.submask = SubmaskPolicy::KeepFraction(keep);
        let mut params = init.clone();
        let report = flow::train(&mut params, &train_set, &tcfg, None)?;
        log::info!(
            "target {target}%: trained to final loss {:.4e}",
            report.final_loss()
        );

        let mut acc = [0.0f64; 4];
        for i in 0..test_set.len() {
            let mut scfg = base_scfg.clone();
            scfg.seed = seeds::derive(
                base_scfg.seed,
                seeds::stream::SAMPLE,
                ((fi as u64) << 32) | i as u64,
            );
            let obs_a = apply_mask(&test_set.coefficients[i], &test_set.coeff_masks[i]);
            let obs_u = apply_mask(&test_set.solutions[i], &test_set.sol_masks[i]);
            let r = flow::sample_ensemble(&params, &obs_a, &obs_u, &scfg)?;
            let mask = &test_set.coeff_masks[i];
            acc[0] += restricted_error(&test_set.coefficients[i], &r.mean_coeff, mask, Region::Unobserved)?;
            acc[1] += restricted_error(&test_set.solutions[i], &r.mean_sol, mask, Region::Unobserved)?;
            acc[2] += restricted_error(&test_set.coefficients[i], &r.mean_coeff, mask, Region::Observed)?;
            acc[3] += restricted_error(&test_set.solutions[i], &r.mean_sol, mask, Region::Observed)?;
        }
        for v in &mut acc {
            *v /= test_set.len() as f64;
        }
        println!(
            "target {target:>6.2}% (actual {actual:.2}%): off-lattice coeff {:.3}% sol {:.3}% | \
             on-lattice coeff {:.3}% sol {:.3}%",
            acc[0], acc[1], acc[2], acc[3]
        );
        csv.push_str(&format!(
            "{target},{actual},{},{},{},{}\n",
            acc[0], acc[1], acc[2], acc[3]
        ));
        coeff_points.push((actual, acc[0]));
        sol_points.push((actual, acc[1]));
    }

    let csv_path = ctx.artifact("superres", "csv");
    write_text(&csv_path, &csv)?;
    let series = vec![
        Series { label: "coeff off-lattice".into(), points: coeff_points },
        Series { label: "sol off-lattice".into(), points: sol_points },
    ];
    let svg_path = ctx.artifact("superres", "svg");
    write_error_plot(
        &svg_path,
        "off-lattice error vs training mask strength",
        "total unobserved during training (%)",
        &series,
    )?;
    println!("wrote {}", csv_path.display());
    println!("wrote {}", svg_path.display());
    Ok(())
}
