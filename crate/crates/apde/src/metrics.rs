//! Error metrics, region-restricted variants, and the withheld-count sweep.
//!
//! All percentages are relative L2 errors `100·‖truth − pred‖/‖truth‖`,
//! optionally restricted to the observed or unobserved index set of a
//! mask. Binary media additionally get a misclassification rate after
//! snapping predictions to the nearer level. Errors across a test set are
//! averaged as a mean of per-example percentages.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::flow::{
    sample_ensemble, train, SampleConfig, TrainConfig, TrainingSet,
};
use crate::mask::{apply_mask, Mask, SubmaskPolicy};
use crate::model::NetworkParams;
use crate::seeds;

/// Index set selector for restricted errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Observed,
    Unobserved,
}

/// Relative L2 error as a percentage. The truth must have nonzero norm.
pub fn relative_l2(truth: &Field, pred: &Field) -> Result<f64> {
    assert_eq!(truth.size(), pred.size(), "field sizes must match");
    let norm = truth.l2_norm();
    if norm == 0.0 {
        return Err(Error::config("relative error undefined for zero truth"));
    }
    Ok(100.0 * truth.l2_distance(pred) / norm)
}

/// Snap every value to the nearer of two levels.
pub fn snap_to_levels(field: &Field, lo: f64, hi: f64) -> Field {
    field.map(|v| if (v - lo).abs() <= (v - hi).abs() { lo } else { hi })
}

/// Fraction of pixels (as a percentage) whose snapped prediction disagrees
/// with the snapped truth.
pub fn misclassification_rate(truth: &Field, pred: &Field, levels: (f64, f64)) -> f64 {
    assert_eq!(truth.size(), pred.size(), "field sizes must match");
    let t = snap_to_levels(truth, levels.0, levels.1);
    let p = snap_to_levels(pred, levels.0, levels.1);
    let mismatches = t
        .as_slice()
        .iter()
        .zip(p.as_slice())
        .filter(|(a, b)| a != b)
        .count();
    100.0 * mismatches as f64 / t.as_slice().len() as f64
}

/// Squared errors and squared truth norms split by mask region, computed
/// in one pass so `full = observed + unobserved` holds exactly.
pub struct SquaredDecomposition {
    pub err_observed: f64,
    pub err_unobserved: f64,
    pub norm_observed: f64,
    pub norm_unobserved: f64,
}

impl SquaredDecomposition {
    pub fn err_full(&self) -> f64 {
        self.err_observed + self.err_unobserved
    }

    pub fn norm_full(&self) -> f64 {
        self.norm_observed + self.norm_unobserved
    }
}

pub fn squared_decomposition(truth: &Field, pred: &Field, mask: &Mask) -> SquaredDecomposition {
    assert_eq!(truth.size(), pred.size(), "field sizes must match");
    assert_eq!(truth.size(), mask.size(), "mask size must match");
    let mut out = SquaredDecomposition {
        err_observed: 0.0,
        err_unobserved: 0.0,
        norm_observed: 0.0,
        norm_unobserved: 0.0,
    };
    for (i, (&t, &p)) in truth.as_slice().iter().zip(pred.as_slice()).enumerate() {
        let e = (t - p) * (t - p);
        if mask.get(i) {
            out.err_observed += e;
            out.norm_observed += t * t;
        } else {
            out.err_unobserved += e;
            out.norm_unobserved += t * t;
        }
    }
    out
}

/// Relative L2 error (%) over one mask region only.
pub fn restricted_error(truth: &Field, pred: &Field, mask: &Mask, region: Region) -> Result<f64> {
    let count = match region {
        Region::Observed => mask.observed_count(),
        Region::Unobserved => mask.size() * mask.size() - mask.observed_count(),
    };
    if count == 0 {
        return Err(Error::config(format!("{region:?} region is empty")));
    }
    let d = squared_decomposition(truth, pred, mask);
    let (err, norm) = match region {
        Region::Observed => (d.err_observed, d.norm_observed),
        Region::Unobserved => (d.err_unobserved, d.norm_unobserved),
    };
    if norm == 0.0 {
        return Err(Error::config(format!(
            "relative error undefined: zero truth norm on the {region:?} region"
        )));
    }
    Ok(100.0 * (err / norm).sqrt())
}

// ===================================================================
// Test-set evaluation
// ===================================================================

/// Averaged errors for one output field.
#[derive(Debug, Clone)]
pub struct FieldMetrics {
    pub rel_l2_pct: f64,
    pub observed_pct: f64,
    pub unobserved_pct: f64,
    /// Only for binary media (two levels supplied).
    pub misclassification_pct: Option<f64>,
}

/// Table-style evaluation summary over a test set.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub coeff: FieldMetrics,
    pub sol: FieldMetrics,
    pub sample_count: usize,
    pub nfe: usize,
}

impl EvalReport {
    /// Rows in (field, metric, value) order for CSV emission.
    pub fn rows(&self) -> Vec<(&'static str, &'static str, f64)> {
        let mut rows = Vec::new();
        for (name, m) in [("coeff", &self.coeff), ("sol", &self.sol)] {
            rows.push((name, "rel_l2_pct", m.rel_l2_pct));
            rows.push((name, "observed_pct", m.observed_pct));
            rows.push((name, "unobserved_pct", m.unobserved_pct));
            if let Some(mis) = m.misclassification_pct {
                rows.push((name, "misclassification_pct", mis));
            }
        }
        rows
    }
}

fn mean_of(values: &[f64]) -> f64 {
    if values.is_empty() {
        log::warn!("metric undefined on every test example");
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Evaluate a trained network on a test set: ensemble-mean prediction per
/// example, then per-field full-grid / observed / unobserved errors
/// averaged across examples.
///
/// `levels` enables the misclassification rate on the coefficient field
/// (binary media). Per-example sampler seeds derive from `cfg.seed`.
pub fn evaluate(
    params: &NetworkParams,
    test: &TrainingSet,
    cfg: &SampleConfig,
    levels: Option<(f64, f64)>,
) -> Result<EvalReport> {
    let mut full = [Vec::new(), Vec::new()];
    let mut obs = [Vec::new(), Vec::new()];
    let mut unobs = [Vec::new(), Vec::new()];
    let mut misclass = Vec::new();
    for i in 0..test.len() {
        let mut case_cfg = cfg.clone();
        case_cfg.seed = seeds::derive(cfg.seed, seeds::stream::SAMPLE, i as u64);
        let obs_a = apply_mask(&test.coefficients[i], &test.coeff_masks[i]);
        let obs_u = apply_mask(&test.solutions[i], &test.sol_masks[i]);
        let ensemble = sample_ensemble(params, &obs_a, &obs_u, &case_cfg)?;
        let preds = [&ensemble.mean_coeff, &ensemble.mean_sol];
        let truths = [&test.coefficients[i], &test.solutions[i]];
        let masks = [&test.coeff_masks[i], &test.sol_masks[i]];
        for f in 0..2 {
            full[f].push(relative_l2(truths[f], preds[f])?);
            if let Ok(e) = restricted_error(truths[f], preds[f], masks[f], Region::Observed) {
                obs[f].push(e);
            }
            if let Ok(e) = restricted_error(truths[f], preds[f], masks[f], Region::Unobserved) {
                unobs[f].push(e);
            }
        }
        if let Some(lv) = levels {
            misclass.push(misclassification_rate(truths[0], preds[0], lv));
        }
    }
    let metrics = |f: usize, mis: Option<f64>| FieldMetrics {
        rel_l2_pct: mean_of(&full[f]),
        observed_pct: mean_of(&obs[f]),
        unobserved_pct: mean_of(&unobs[f]),
        misclassification_pct: mis,
    };
    Ok(EvalReport {
        coeff: metrics(0, levels.map(|_| mean_of(&misclass))),
        sol: metrics(1, None),
        sample_count: test.len(),
        nfe: if cfg.regression { 1 } else { cfg.nfe },
    })
}

// ===================================================================
// Withheld-count sweep
// ===================================================================

/// One sweep row: errors after training with exactly `count` withheld
/// observed points (count 0 is the no-withholding baseline).
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub count: usize,
    pub coeff_err_pct: f64,
    pub sol_err_pct: f64,
    pub coeff_unobserved_pct: f64,
    pub sol_unobserved_pct: f64,
}

/// Train one model per withheld count and evaluate each on the same test
/// set. Counts must be ascending and start at 0; counts exceeding the
/// smallest per-sample observation budget are skipped with a warning.
/// Everything else (initialization, seeds, data, epochs) is shared, so the
/// rows differ only in the sub-mask policy.
pub fn one_point_sweep(
    init: &NetworkParams,
    train_data: &TrainingSet,
    test_data: &TrainingSet,
    counts: &[usize],
    base: &TrainConfig,
    sample_cfg: &SampleConfig,
) -> Result<Vec<SweepRow>> {
    if counts.is_empty() || counts[0] != 0 {
        return Err(Error::config("sweep counts must start at 0"));
    }
    if counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("sweep counts must be strictly ascending"));
    }
    let budget = (0..train_data.len())
        .map(|i| {
            train_data.coeff_masks[i]
                .observed_count()
                .min(train_data.sol_masks[i].observed_count())
        })
        .min()
        .unwrap_or(0);
    let mut rows = Vec::new();
    for &count in counts {
        if count > budget {
            log::warn!("skipping withheld count {count}: exceeds observation budget {budget}");
            continue;
        }
        let mut cfg = base.clone();
        cfg.submask = if count == 0 {
            SubmaskPolicy::All
        } else {
            SubmaskPolicy::WithholdCount(count)
        };
        let mut params = init.clone();
        train(&mut params, train_data, &cfg, None)?;
        let report = evaluate(&params, test_data, sample_cfg, None)?;
        log::info!(
            "sweep count {count}: coeff {:.2}% / sol {:.2}% (unobserved {:.2}% / {:.2}%)",
            report.coeff.rel_l2_pct,
            report.sol.rel_l2_pct,
            report.coeff.unobserved_pct,
            report.sol.unobserved_pct
        );
        rows.push(SweepRow {
            count,
            coeff_err_pct: report.coeff.rel_l2_pct,
            sol_err_pct: report.sol.rel_l2_pct,
            coeff_unobserved_pct: report.coeff.unobserved_pct,
            sol_unobserved_pct: report.sol.unobserved_pct,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::TrainMode;
    use crate::mask::{make_mask, MaskPolicy};
    use crate::model::{init_network, ModelDescriptor, PaddingMode};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn wavy(n: usize, k: f64) -> Field {
        Field::from_fn(n, |y, x| ((y as f64 * 0.7 + x as f64) * k).sin() + 0.2)
    }

    #[test]
    fn relative_l2_basics() {
        let t = wavy(8, 0.31);
        assert_eq!(relative_l2(&t, &t).unwrap(), 0.0);
        let zero = Field::zeros(8);
        assert!((relative_l2(&t, &zero).unwrap() - 100.0).abs() < 1e-12);
        let double = t.map(|v| 2.0 * v);
        assert!((relative_l2(&t, &double).unwrap() - 100.0).abs() < 1e-12);
        assert!(relative_l2(&zero, &t).is_err());
    }

    #[test]
    fn relative_l2_depends_only_on_scaled_perturbation() {
        let t = wavy(8, 0.13);
        let e = wavy(8, 0.57);
        let perturbed = t.add_scaled(&e, 0.01);
        let err = relative_l2(&t, &perturbed).unwrap();
        // scale truth and perturbation together: error unchanged
        let t3 = t.map(|v| 3.0 * v);
        let p3 = perturbed.map(|v| 3.0 * v);
        let err3 = relative_l2(&t3, &p3).unwrap();
        assert!((err - err3).abs() < 1e-10);
    }

    #[test]
    fn misclassification_counts_flipped_pixels() {
        let n = 8;
        let lo_hi = (3.0, 12.0);
        let t = Field::from_fn(n, |y, _| if y < 4 { 3.0 } else { 12.0 });
        assert_eq!(misclassification_rate(&t, &t, lo_hi), 0.0);
        let swapped = t.map(|v| if v == 3.0 { 12.0 } else { 3.0 });
        assert_eq!(misclassification_rate(&t, &swapped, lo_hi), 100.0);
        let half = Field::from_fn(n, |y, x| {
            let v = if y < 4 { 3.0 } else { 12.0 };
            if x < 4 {
                v
            } else if v == 3.0 {
                12.0
            } else {
                3.0
            }
        });
        assert_eq!(misclassification_rate(&t, &half, lo_hi), 50.0);
        // snapping happens before comparison
        let noisy = t.map(|v| v + 0.4);
        assert_eq!(misclassification_rate(&t, &noisy, lo_hi), 0.0);
    }

    #[test]
    fn restricted_error_matches_brute_force() {
        let n = 8;
        let t = wavy(n, 0.41);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = t.map(|v| v + rng.random_range(-0.3..0.3));
        let mask = make_mask(n, &MaskPolicy::Random { keep_fraction: 0.3 }, 7).unwrap();

        for region in [Region::Observed, Region::Unobserved] {
            let got = restricted_error(&t, &p, &mask, region).unwrap();
            // independent recomputation over an explicit index filter
            let mut err = 0.0;
            let mut norm = 0.0;
            for i in 0..n * n {
                let inside = match region {
                    Region::Observed => mask.get(i),
                    Region::Unobserved => !mask.get(i),
                };
                if inside {
                    err += (t.as_slice()[i] - p.as_slice()[i]).powi(2);
                    norm += t.as_slice()[i].powi(2);
                }
            }
            let want = 100.0 * (err / norm).sqrt();
            assert!((got - want).abs() < 1e-12, "{region:?}: {got} vs {want}");
        }
    }

    #[test]
    fn observed_error_on_full_mask_equals_relative_l2() {
        let n = 8;
        let t = wavy(n, 0.23);
        let p = t.map(|v| v * 1.05);
        let full = make_mask(n, &MaskPolicy::Random { keep_fraction: 1.0 }, 0).unwrap();
        let a = restricted_error(&t, &p, &full, Region::Observed).unwrap();
        let b = relative_l2(&t, &p).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!(restricted_error(&t, &p, &full, Region::Unobserved).is_err());
    }

    #[test]
    fn perfect_on_observed_garbage_elsewhere() {
        let n = 8;
        let t = wavy(n, 0.17);
        let mask = make_mask(n, &MaskPolicy::Random { keep_fraction: 0.4 }, 3).unwrap();
        let p = Field::from_vec(
            n,
            (0..n * n)
                .map(|i| if mask.get(i) { t.as_slice()[i] } else { 9.9 })
                .collect(),
        );
        assert_eq!(
            restricted_error(&t, &p, &mask, Region::Observed).unwrap(),
            0.0
        );
        assert!(restricted_error(&t, &p, &mask, Region::Unobserved).unwrap() > 100.0);
    }

    #[test]
    fn squared_errors_decompose_exactly() {
        let n = 16;
        let t = wavy(n, 0.29);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = t.map(|v| v + rng.random_range(-0.5..0.5));
        let mask = make_mask(n, &MaskPolicy::Random { keep_fraction: 0.37 }, 5).unwrap();
        let d = squared_decomposition(&t, &p, &mask);
        // exact by construction: the two partial sums are disjoint
        let full = d.err_full();
        assert!(full > 0.0);
        assert_eq!(full, d.err_observed + d.err_unobserved);
        // and consistent with the unrestricted error up to fp association
        let l2 = t.l2_distance(&p);
        assert!((full.sqrt() - l2).abs() < 1e-12 * l2.max(1.0));
    }

    #[test]
    fn evaluate_zero_network_scores_full_error() {
        // a zero-head network predicts zero everywhere, so every relative
        // error is exactly 100%
        let n = 8;
        let d = ModelDescriptor::conv(4, 1, 2, PaddingMode::Periodic);
        let params = init_network(&d, 0).unwrap();
        let pairs: Vec<(Field, Field)> = (0..3).map(|i| (wavy(n, 0.3 + i as f64 * 0.1), wavy(n, 0.7 + i as f64 * 0.1))).collect();
        let test = TrainingSet::from_pairs(
            pairs,
            &MaskPolicy::Random { keep_fraction: 0.3 },
            &MaskPolicy::Random { keep_fraction: 0.3 },
            99,
        )
        .unwrap();
        let cfg = SampleConfig::new(2, 5);
        let report = evaluate(&params, &test, &cfg, None).unwrap();
        assert_eq!(report.sample_count, 3);
        assert_eq!(report.nfe, 2);
        for m in [&report.coeff, &report.sol] {
            assert!((m.rel_l2_pct - 100.0).abs() < 1e-9, "{}", m.rel_l2_pct);
            assert!((m.observed_pct - 100.0).abs() < 1e-9);
            assert!((m.unobserved_pct - 100.0).abs() < 1e-9);
            assert!(m.misclassification_pct.is_none());
        }
        assert_eq!(report.rows().len(), 6);
    }

    #[test]
    fn evaluate_reports_misclassification_when_levels_given() {
        let n = 8;
        let d = ModelDescriptor::conv(4, 1, 2, PaddingMode::Periodic);
        let params = init_network(&d, 0).unwrap();
        let binary = Field::from_fn(n, |y, _| if y % 2 == 0 { 3.0 } else { 12.0 });
        let test = TrainingSet::from_pairs(
            vec![(binary.clone(), wavy(n, 0.3))],
            &MaskPolicy::Random { keep_fraction: 0.3 },
            &MaskPolicy::Random { keep_fraction: 0.3 },
            1,
        )
        .unwrap();
        let cfg = SampleConfig::new(1, 2);
        let report = evaluate(&params, &test, &cfg, Some((3.0, 12.0))).unwrap();
        // zero prediction snaps to the low level: exactly the 12.0 rows err
        assert_eq!(report.coeff.misclassification_pct, Some(50.0));
        assert_eq!(report.rows().len(), 7);
    }

    #[test]
    fn sweep_validates_its_counts() {
        let n = 8;
        let d = ModelDescriptor::conv(4, 1, 2, PaddingMode::Periodic);
        let params = init_network(&d, 0).unwrap();
        let pairs = vec![(wavy(n, 0.3), wavy(n, 0.5))];
        let data = TrainingSet::from_pairs(
            pairs,
            &MaskPolicy::Random { keep_fraction: 0.3 },
            &MaskPolicy::Random { keep_fraction: 0.3 },
            7,
        )
        .unwrap();
        let t_cfg = TrainConfig::new(TrainMode::Ambient, 1);
        let s_cfg = SampleConfig::new(1, 1);
        assert!(one_point_sweep(&params, &data, &data, &[1, 2], &t_cfg, &s_cfg).is_err());
        assert!(one_point_sweep(&params, &data, &data, &[0, 2, 1], &t_cfg, &s_cfg).is_err());
        assert!(one_point_sweep(&params, &data, &data, &[], &t_cfg, &s_cfg).is_err());
    }

    #[test]
    fn sweep_runs_and_skips_overbudget_counts() {
        let n = 8;
        let d = ModelDescriptor::conv(3, 1, 2, PaddingMode::Periodic);
        let params = init_network(&d, 0).unwrap();
        let pairs: Vec<(Field, Field)> =
            (0..2).map(|i| (wavy(n, 0.3 + i as f64 * 0.2), wavy(n, 0.6))).collect();
        let data = TrainingSet::from_pairs(
            pairs,
            &MaskPolicy::Random { keep_fraction: 0.25 }, // 16 points per 8² mask
            &MaskPolicy::Random { keep_fraction: 0.25 },
            7,
        )
        .unwrap();
        let mut t_cfg = TrainConfig::new(TrainMode::Ambient, 1);
        t_cfg.epochs = 1;
        t_cfg.batch_size = 2;
        let s_cfg = SampleConfig::new(1, 1);
        let rows =
            one_point_sweep(&params, &data, &data, &[0, 1, 500], &t_cfg, &s_cfg).unwrap();
        // the over-budget count 500 is skipped
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].count, 0);
        assert_eq!(rows[1].count, 1);
        assert!(rows.iter().all(|r| r.coeff_err_pct.is_finite()));
    }
}
