//! Density differences, the normalized squared-difference metric `I`, and the
//! `eta_c` calibration scan.

use std::collections::HashMap;

use crate::fields::{integrate, ScalarField};
use crate::{Error, Result};

/// Relative tolerance below which a density value counts as negative.
const NEGATIVE_TOL: f64 = 1e-12;

fn check_density(rho: &ScalarField) -> Result<()> {
    let scale = rho.max_abs().max(1.0);
    match rho.values().iter().position(|&v| v < -NEGATIVE_TOL * scale) {
        Some(index) => Err(Error::NegativeDensity { index, value: rho.values()[index] }),
        None => Ok(()),
    }
}

/// `rho_in - rho_out` pointwise.
pub fn delta_rho(rho_in: &ScalarField, rho_out: &ScalarField) -> Result<ScalarField> {
    rho_in.grid().ensure_same(rho_out.grid())?;
    check_density(rho_in)?;
    check_density(rho_out)?;
    rho_in.sub(rho_out)
}

/// `I = int (a - b)^2 / (int a^2 + int b^2)`, in `[0, 2]`.
pub fn i_metric(a: &ScalarField, b: &ScalarField) -> Result<f64> {
    a.grid().ensure_same(b.grid())?;
    let diff = a.sub(b)?;
    let num = integrate(&diff.map(|v| v * v));
    let den = integrate(&a.map(|v| v * v)) + integrate(&b.map(|v| v * v));
    if den == 0.0 {
        return Err(Error::ZeroMetric);
    }
    Ok(num / den)
}

/// In-cavity and cavity-free densities with their difference.
#[derive(Debug, Clone)]
pub struct DensityPair {
    pub rho_in: ScalarField,
    pub rho_out: ScalarField,
    pub delta: ScalarField,
}

impl DensityPair {
    pub fn new(rho_in: ScalarField, rho_out: ScalarField) -> Result<Self> {
        let delta = delta_rho(&rho_in, &rho_out)?;
        let net = integrate(&delta);
        if net.abs() > 1e-8 {
            log::warn!("density pair does not conserve charge: int delta = {net:e}");
        }
        Ok(Self { rho_in, rho_out, delta })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanOptions {
    pub eta_min: f64,
    pub eta_max: f64,
    /// Step of the first, coarse stage.
    pub step: f64,
    /// Refinement continues while the relative improvement of the best `I`
    /// exceeds this.
    pub min_improvement: f64,
    pub max_stages: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { eta_min: 0.0, eta_max: 1.5, step: 0.1, min_improvement: 1e-3, max_stages: 4 }
    }
}

impl ScanOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.eta_min >= 0.0
            && self.eta_max > self.eta_min
            && self.step > 0.0
            && self.step.is_finite()
            && self.eta_max.is_finite()
            && self.max_stages >= 1
            && self.min_improvement >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid scan options {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanStage {
    pub stage: usize,
    pub step: f64,
    /// `(eta_c, I)` in ascending `eta_c`.
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CalibrationTrace {
    pub stages: Vec<ScanStage>,
}

impl CalibrationTrace {
    /// Lowest `I` seen so far, first occurrence in scan order.
    pub fn best(&self) -> Option<(f64, f64)> {
        let mut best: Option<(f64, f64)> = None;
        for &(eta, i) in self.stages.iter().flat_map(|s| &s.points) {
            if best.is_none_or(|(_, b)| i < b) {
                best = Some((eta, i));
            }
        }
        best
    }

    /// `stage,eta_c,I` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("stage,eta_c,I\n");
        for s in &self.stages {
            for (eta, i) in &s.points {
                out.push_str(&format!("{},{:.17e},{:.17e}\n", s.stage, eta, i));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    /// Every distinct evaluated `(eta_c, I)`, ascending in `eta_c`.
    pub scan: Vec<(f64, f64)>,
    pub eta_star: f64,
    pub i_star: f64,
    pub trace: CalibrationTrace,
}

impl CalibrationResult {
    /// Step of the last stage, the resolution of `eta_star`.
    pub fn final_step(&self) -> f64 {
        self.trace.stages.last().map_or(0.0, |s| s.step)
    }

    /// `I` at an evaluated `eta_c`.
    pub fn i_at(&self, eta: f64) -> Option<f64> {
        self.scan.iter().find(|(e, _)| (e - eta).abs() < 1e-12).map(|&(_, i)| i)
    }
}

/// Points `center + j * step` for `|j * step| <= half`, clipped to the range.
fn window(center: f64, half: f64, step: f64, opts: &ScanOptions) -> Vec<f64> {
    let m = (half / step + 1e-9).floor() as i64;
    (-m..=m)
        .map(|j| center + j as f64 * step)
        .filter(|&e| e >= opts.eta_min - 1e-12 && e <= opts.eta_max + 1e-12)
        .map(|e| e.clamp(opts.eta_min, opts.eta_max))
        .collect()
}

/// Find the `eta_c` whose density difference best matches `reference.delta`.
///
/// Stage 1 scans `[eta_min, eta_max]` with the coarse step. Stage 2 rescans
/// `eta0 +- eta0 / 2` with step `eta0 / 10` around the coarse minimum `eta0`.
/// Later stages shrink the step five-fold over a window of one previous step
/// each side, while the best `I` keeps improving by more than
/// `min_improvement` relative. A coarse minimum at `eta0 = 0` refines over half
/// a coarse step with a tenth of the coarse step.
pub fn calibrate_eta<F>(reference: &DensityPair, mut runner: F, opts: &ScanOptions) -> Result<CalibrationResult>
where
    F: FnMut(f64) -> Result<DensityPair>,
{
    opts.validate()?;
    if reference.delta.max_abs() == 0.0 {
        return Err(Error::InvalidInput("reference density difference is identically zero".into()));
    }
    let mut trace = CalibrationTrace::default();
    let mut cache: HashMap<u64, f64> = HashMap::new();

    let mut run_stage = |trace: &mut CalibrationTrace, etas: Vec<f64>, step: f64| -> Result<()> {
        let mut points = Vec::with_capacity(etas.len());
        for eta in etas {
            let i = match cache.get(&eta.to_bits()) {
                Some(&i) => i,
                None => {
                    let i = runner(eta)
                        .and_then(|pair| i_metric(&reference.delta, &pair.delta))
                        .map_err(|e| {
                            let mut partial = trace.clone();
                            partial.stages.push(ScanStage { stage: trace.stages.len() + 1, step, points: points.clone() });
                            Error::Runner { eta, source: Box::new(e), partial: Box::new(partial) }
                        })?;
                    log::info!("eta_c = {eta:.6} I = {i:.6e}");
                    cache.insert(eta.to_bits(), i);
                    i
                }
            };
            points.push((eta, i));
        }
        trace.stages.push(ScanStage { stage: trace.stages.len() + 1, step, points });
        Ok(())
    };

    let n = ((opts.eta_max - opts.eta_min) / opts.step + 1e-9).floor() as usize;
    let coarse: Vec<f64> = (0..=n).map(|i| opts.eta_min + i as f64 * opts.step).collect();
    run_stage(&mut trace, coarse, opts.step)?;

    let first = &trace.stages[0].points;
    let (lo, hi) = first.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, i)| (lo.min(i), hi.max(i)));
    if hi - lo < 1e-12 {
        return Err(Error::FlatScan { spread: hi - lo });
    }

    let (mut center, mut best) = trace.best().expect("non-empty coarse stage");
    let mut step = opts.step;
    while trace.stages.len() < opts.max_stages {
        let (half, next_step) = if trace.stages.len() == 1 {
            if center > 0.0 {
                (0.5 * center, 0.1 * center)
            } else {
                (0.5 * opts.step, 0.1 * opts.step)
            }
        } else {
            (step, step / 5.0)
        };
        step = next_step;
        run_stage(&mut trace, window(center, half, step, opts), step)?;
        let (eta, i) = trace.best().expect("non-empty trace");
        let improvement = if best > 0.0 { (best - i) / best } else { 0.0 };
        center = eta;
        best = i;
        if trace.stages.len() > 2 && improvement <= opts.min_improvement {
            break;
        }
    }

    let mut scan: Vec<(f64, f64)> = trace.stages.iter().flat_map(|s| s.points.iter().copied()).collect();
    scan.sort_by(|a, b| a.0.total_cmp(&b.0));
    scan.dedup_by(|a, b| a.0.to_bits() == b.0.to_bits());
    Ok(CalibrationResult { scan, eta_star: center, i_star: best, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;
    use proptest::prelude::*;

    fn grid() -> Grid {
        Grid::centered([8; 3], 0.5).unwrap()
    }

    fn bump(c: [f64; 3]) -> ScalarField {
        ScalarField::from_fn(&grid(), |[x, y, z]| (-((x - c[0]).powi(2) + (y - c[1]).powi(2) + (z - c[2]).powi(2))).exp())
    }

    #[test]
    fn closed_forms() {
        let a = bump([0.3, 0.0, -0.2]);
        assert_eq!(i_metric(&a, &a).unwrap(), 0.0);
        assert!((i_metric(&a, &a.scaled(2.0)).unwrap() - 0.2).abs() < 1e-12);
        assert!((i_metric(&a, &a.scaled(-1.0)).unwrap() - 2.0).abs() < 1e-12);
        let left = ScalarField::from_fn(&grid(), |[x, _, _]| if x < 0.0 { 1.0 + x * x } else { 0.0 });
        let right = ScalarField::from_fn(&grid(), |[x, _, _]| if x > 0.0 { 2.0 } else { 0.0 });
        assert!((i_metric(&left, &right).unwrap() - 1.0).abs() < 1e-12);
        let zero = ScalarField::zeros(&grid());
        assert!(matches!(i_metric(&zero, &zero), Err(Error::ZeroMetric)));
        assert!((i_metric(&zero, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn delta_rho_checks() {
        let a = bump([0.0; 3]);
        assert_eq!(delta_rho(&a, &a).unwrap().max_abs(), 0.0);
        let other = ScalarField::zeros(&Grid::centered([9; 3], 0.5).unwrap());
        assert!(matches!(delta_rho(&a, &other), Err(Error::GridMismatch { .. })));
        assert!(matches!(delta_rho(&a.scaled(-1.0), &a), Err(Error::NegativeDensity { .. })));
        let b = bump([0.5, 0.0, 0.0]);
        let scale = integrate(&a) / integrate(&b);
        assert!(integrate(&delta_rho(&a, &b.scaled(scale)).unwrap()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn metric_symmetry_and_bounds(
            xs in proptest::collection::vec(-2.0f64..2.0, 512),
            ys in proptest::collection::vec(-2.0f64..2.0, 512),
            c in -5.0f64..5.0,
        ) {
            let a = ScalarField::new(grid(), xs).unwrap();
            let b = ScalarField::new(grid(), ys).unwrap();
            let ab = i_metric(&a, &b).unwrap();
            let ba = i_metric(&b, &a).unwrap();
            prop_assert!((ab - ba).abs() < 1e-14);
            prop_assert!((0.0..=2.0 + 1e-14).contains(&ab));
            let closed = (1.0 - c).powi(2) / (1.0 + c * c);
            prop_assert!((i_metric(&a, &a.scaled(c)).unwrap() - closed).abs() < 1e-12);
        }
    }

    /// Synthetic runner whose density shift grows linearly in `eta`.
    fn synthetic(eta: f64) -> Result<DensityPair> {
        let out = bump([0.0; 3]);
        let shifted = bump([0.0, 0.0, 0.4 * eta]);
        let rho_in = out.scaled(1.0 - eta * 0.2).sub(&shifted.scaled(-eta * 0.2))?;
        DensityPair::new(rho_in, out)
    }

    #[test]
    fn self_reference_recovers_eta() {
        let reference = synthetic(0.3).unwrap();
        let res = calibrate_eta(&reference, synthetic, &ScanOptions::default()).unwrap();
        assert!((res.eta_star - 0.3).abs() <= res.final_step(), "{res:?}");
        assert!(res.i_star <= res.i_at(1.0).unwrap());
        let bests: Vec<f64> = (1..=res.trace.stages.len())
            .map(|n| CalibrationTrace { stages: res.trace.stages[..n].to_vec() }.best().unwrap().1)
            .collect();
        assert!(bests.windows(2).all(|w| w[1] <= w[0]));
        let again = calibrate_eta(&reference, synthetic, &ScanOptions::default()).unwrap();
        assert_eq!(res, again);
    }

    #[test]
    fn refinement_follows_the_tenth_rule() {
        let reference = synthetic(0.47).unwrap();
        let res = calibrate_eta(&reference, synthetic, &ScanOptions::default()).unwrap();
        let s2 = &res.trace.stages[1];
        assert!((s2.step - 0.05).abs() < 1e-12, "{s2:?}");
        assert!(res.trace.stages.len() <= 4);
        assert!((res.eta_star - 0.47).abs() <= res.final_step());
    }

    #[test]
    fn zero_reference_is_rejected() {
        let reference = synthetic(0.0).unwrap();
        assert!(calibrate_eta(&reference, synthetic, &ScanOptions::default()).is_err());
    }

    /// Delta of fixed shape with amplitude `1 + 50 (eta - 0.02)^2`.
    fn parabolic(eta: f64) -> Result<DensityPair> {
        let out = bump([0.0; 3]);
        let c = 0.005 * (1.0 + 50.0 * (eta - 0.02).powi(2));
        let mut rho_in = out.scaled(1.0 - c);
        rho_in.axpy(c, &bump([0.0, 0.3, 0.0]))?;
        DensityPair::new(rho_in, out)
    }

    #[test]
    fn zero_coarse_minimum_still_refines() {
        let reference = parabolic(0.02).unwrap();
        let res = calibrate_eta(&reference, parabolic, &ScanOptions::default()).unwrap();
        assert_eq!(res.trace.stages[0].points.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0, 0.0);
        assert!((res.trace.stages[1].step - 0.01).abs() < 1e-15);
        assert!((res.eta_star - 0.02).abs() <= res.final_step() + 1e-12, "{res:?}");
    }

    #[test]
    fn flat_scan_is_an_error() {
        let reference = synthetic(0.3).unwrap();
        let flat = |_| synthetic(0.5);
        assert!(matches!(calibrate_eta(&reference, flat, &ScanOptions::default()), Err(Error::FlatScan { .. })));
    }

    #[test]
    fn runner_failure_keeps_partial_trace() {
        let reference = synthetic(0.3).unwrap();
        let failing = |eta: f64| if eta > 0.55 { Err(Error::InvalidInput("boom".into())) } else { synthetic(eta) };
        match calibrate_eta(&reference, failing, &ScanOptions::default()) {
            Err(Error::Runner { eta, partial, .. }) => {
                assert!((eta - 0.6).abs() < 1e-12);
                assert_eq!(partial.stages[0].points.len(), 6);
            }
            other => panic!("{other:?}"),
        }
    }
}
