//! Fits of linewidth, frequency and occupation against cavity detuning.
//! All inputs are angular (rad/s); heating rates are phonons per second.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::lm::{fit_curve, LmOptions, Weighting};
use super::FitError;

pub const MIN_SCAN_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanDatum {
    pub detuning: f64,
    pub value: f64,
    /// 1σ
    pub err: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutlierRule {
    /// Points beyond this many σ are dropped; `None` disables clipping.
    pub clip_sigma: Option<f64>,
    pub max_rounds: usize,
}

impl Default for OutlierRule {
    fn default() -> Self {
        Self { clip_sigma: Some(5.0), max_rounds: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanFitKind {
    Linewidth,
    Frequency,
    Occupation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedParam {
    pub name: String,
    pub value: f64,
    pub err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanFitResult {
    pub kind: ScanFitKind,
    pub g_abs: f64,
    /// Fitted by the frequency fit, otherwise the value supplied.
    pub omega_bare: f64,
    pub gamma_intrinsic: Option<f64>,
    pub gamma_total_heating: Option<f64>,
    pub n_phase: Option<f64>,
    /// Free parameters in fit order.
    pub params: Vec<FittedParam>,
    pub covariance: Vec<Vec<f64>>,
    /// (data − model)/err for every input point, excluded ones included.
    pub residuals: Vec<f64>,
    pub excluded: Vec<usize>,
    pub reduced_chi2: f64,
    pub converged: bool,
}

impl ScanFitResult {
    pub fn param(&self, name: &str) -> Option<&FittedParam> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn g_err(&self) -> Option<f64> {
        self.param("g").map(|p| p.err)
    }

    /// Thermal share of the fitted heating: total minus the recoil part.
    pub fn thermal_heating(&self, recoil: f64) -> Option<f64> {
        self.gamma_total_heating.map(|t| t - recoil)
    }
}

fn lorentz_pair(kappa: f64, detuning: f64, omega: f64) -> (f64, f64) {
    let hk2 = 0.25 * kappa * kappa;
    (kappa / (hk2 + (detuning - omega).powi(2)), kappa / (hk2 + (detuning + omega).powi(2)))
}

/// γ_eff(Δ) − γ per unit |g|², evaluated at the mechanical frequency.
pub fn linewidth_kernel(detuning: f64, omega: f64, kappa: f64) -> f64 {
    let (m, p) = lorentz_pair(kappa, detuning, omega);
    m - p
}

/// Ω_eff(Δ) with ω evaluated at Ω_b, and its partials in (g, Ω_b).
pub fn spring_frequency(g: f64, omega_b: f64, detuning: f64, kappa: f64) -> Option<(f64, [f64; 2])> {
    let hk2 = 0.25 * kappa * kappa;
    let d_plus = hk2 + (omega_b + detuning).powi(2);
    let d_minus = hk2 + (omega_b - detuning).powi(2);
    let p = d_plus * d_minus;
    let n = hk2 - omega_b * omega_b + detuning * detuning;
    let c = 4.0 * g * g * detuning;
    let spring = c * omega_b * n / p;
    let radicand = omega_b * omega_b - spring;
    if !(radicand > 0.0) {
        return None;
    }
    let f = radicand.sqrt();
    let dp = 2.0 * (omega_b + detuning) * d_minus + 2.0 * (omega_b - detuning) * d_plus;
    let dn = -2.0 * omega_b;
    let dspring = c * (n * p + omega_b * dn * p - omega_b * n * dp) / (p * p);
    let dg = -spring / (g * f);
    let dw = (2.0 * omega_b - dspring) / (2.0 * f);
    Some((f, [if g == 0.0 { 0.0 } else { dg }, dw]))
}

fn validate(points: &[ScanDatum]) -> Result<(), FitError> {
    if points.len() < MIN_SCAN_POINTS {
        return Err(FitError::Underdetermined { inliers: points.len(), need: MIN_SCAN_POINTS });
    }
    for (i, p) in points.iter().enumerate() {
        if !p.detuning.is_finite() || !p.value.is_finite() || !(p.err > 0.0) || !p.err.is_finite() {
            return Err(FitError::InvalidInput(format!("scan point {i} has a non-finite value or non-positive error")));
        }
        if points[..i].iter().any(|q| q.detuning == p.detuning) {
            return Err(FitError::InvalidInput(format!("duplicate detuning {}", p.detuning)));
        }
    }
    Ok(())
}

/// Weighted 2-parameter linear least squares y ≈ a·x0 + b·x1.
fn linear2(rows: &[(f64, f64, f64, f64)]) -> Option<(f64, f64)> {
    let (mut s00, mut s01, mut s11, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x0, x1, y, err) in rows {
        let w = 1.0 / (err * err);
        s00 += w * x0 * x0;
        s01 += w * x0 * x1;
        s11 += w * x1 * x1;
        t0 += w * x0 * y;
        t1 += w * x1 * y;
    }
    let det = s00 * s11 - s01 * s01;
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some(((s11 * t0 - s01 * t1) / det, (s00 * t1 - s01 * t0) / det))
}

struct Outcome {
    params: Vec<f64>,
    errors: Vec<f64>,
    covariance: Vec<Vec<f64>>,
    residuals: Vec<f64>,
    excluded: Vec<usize>,
    reduced_chi2: f64,
    converged: bool,
}

/// Fits with iterative σ-clipping. `model` returns the value and gradient at a
/// detuning, or `None` outside its domain.
fn clipped_fit<M>(points: &[ScanDatum], p0: Vec<f64>, rule: OutlierRule, model: M) -> Result<Outcome, FitError>
where
    M: Fn(&[f64], f64) -> Option<(f64, Vec<f64>)>,
{
    let mut inliers: Vec<usize> = (0..points.len()).collect();
    let mut p = p0;
    let mut round = 0;
    loop {
        if inliers.len() < MIN_SCAN_POINTS.max(p.len() + 1) {
            return Err(FitError::Underdetermined { inliers: inliers.len(), need: MIN_SCAN_POINTS.max(p.len() + 1) });
        }
        let data: Vec<f64> = inliers.iter().map(|&i| points[i].value).collect();
        let sig: Vec<f64> = inliers.iter().map(|&i| points[i].err).collect();
        let fit = fit_curve(
            &data,
            Some(&sig),
            &p,
            Weighting::Absolute,
            &LmOptions::default(),
            |q: &[f64], out: &mut [f64], jac: Option<&mut DMatrix<f64>>| {
                let mut jac = jac;
                for (row, &i) in inliers.iter().enumerate() {
                    let Some((v, grad)) = model(q, points[i].detuning) else {
                        return false;
                    };
                    out[row] = v;
                    if let Some(j) = jac.as_deref_mut() {
                        for (k, d) in grad.iter().enumerate() {
                            j[(row, k)] = *d;
                        }
                    }
                }
                true
            },
        )?;
        p = fit.params.clone();
        let residuals: Vec<f64> =
            points.iter().map(|pt| model(&p, pt.detuning).map_or(f64::NAN, |(v, _)| (pt.value - v) / pt.err)).collect();
        // one point per round, the worst beyond the threshold
        let worst = match rule.clip_sigma {
            Some(k) if round < rule.max_rounds => inliers
                .iter()
                .copied()
                .filter(|&i| !(residuals[i].abs() <= k))
                .max_by(|&a, &b| residuals[a].abs().total_cmp(&residuals[b].abs())),
            _ => None,
        };
        let Some(worst) = worst else {
            let m = p.len();
            return Ok(Outcome {
                errors: fit.errors(),
                covariance: (0..m).map(|i| (0..m).map(|j| fit.covariance[(i, j)]).collect()).collect(),
                excluded: (0..points.len()).filter(|i| !inliers.contains(i)).collect(),
                reduced_chi2: fit.reduced_chi2(),
                converged: fit.converged,
                residuals,
                params: p,
            });
        };
        inliers.retain(|&i| i != worst);
        round += 1;
    }
}

fn named(names: &[&str], o: &Outcome) -> Vec<FittedParam> {
    names
        .iter()
        .zip(o.params.iter().zip(&o.errors))
        .map(|(n, (v, e))| FittedParam { name: n.to_string(), value: *v, err: *e })
        .collect()
}

/// Fits γ_eff(Δ) = γ + |g|²κ[1/((κ/2)² + (Δ−Ω)²) − 1/((κ/2)² + (Δ+Ω)²)]
/// with free (|g|, γ).
pub fn fit_scan_linewidth(
    points: &[ScanDatum],
    omega: f64,
    kappa: f64,
    rule: OutlierRule,
) -> Result<ScanFitResult, FitError> {
    validate(points)?;
    let rows: Vec<_> =
        points.iter().map(|p| (linewidth_kernel(p.detuning, omega, kappa), 1.0, p.value, p.err)).collect();
    let (g2, gamma0) = linear2(&rows).ok_or(FitError::Degenerate)?;
    let scale = points.iter().map(|p| p.value.abs()).fold(0.0, f64::max);
    let p0 = vec![g2.max(1e-300).sqrt(), gamma0.max(1e-9 * scale)];
    let o = clipped_fit(points, p0, rule, |q, d| {
        if !(q[0] >= 0.0 && q[1] >= 0.0) {
            return None;
        }
        let h = linewidth_kernel(d, omega, kappa);
        Some((q[1] + q[0] * q[0] * h, vec![2.0 * q[0] * h, 1.0]))
    })?;
    Ok(ScanFitResult {
        kind: ScanFitKind::Linewidth,
        g_abs: o.params[0],
        omega_bare: omega,
        gamma_intrinsic: Some(o.params[1]),
        gamma_total_heating: None,
        n_phase: None,
        params: named(&["g", "gamma_intrinsic"], &o),
        covariance: o.covariance,
        residuals: o.residuals,
        excluded: o.excluded,
        reduced_chi2: o.reduced_chi2,
        converged: o.converged,
    })
}

/// Fits the optical-spring frequency Ω_eff(Δ) with free (|g|, Ω_b).
/// `g_hint` seeds |g| when the linear start is unusable.
pub fn fit_scan_frequency(
    points: &[ScanDatum],
    kappa: f64,
    g_hint: Option<f64>,
    rule: OutlierRule,
) -> Result<ScanFitResult, FitError> {
    validate(points)?;
    let w: f64 = points.iter().map(|p| 1.0 / (p.err * p.err)).sum();
    let omega_guess = points.iter().map(|p| p.value / (p.err * p.err)).sum::<f64>() / w;
    // Ω_eff² = Ω_b² − |g|² k(Δ) with k frozen at the mean frequency
    let rows: Vec<_> = points
        .iter()
        .map(|p| {
            let spring_per_g2 = omega_guess * omega_guess
                - spring_frequency(1.0, omega_guess, p.detuning, kappa).map_or(omega_guess, |v| v.0).powi(2);
            (1.0, -spring_per_g2, p.value * p.value, 2.0 * p.value * p.err)
        })
        .collect();
    let (w2, g2) = linear2(&rows).ok_or(FitError::Degenerate)?;
    let g0 = if g2 > 0.0 { g2.sqrt() } else { g_hint.unwrap_or(1e-3 * omega_guess) };
    let w0 = if w2 > 0.0 { w2.sqrt() } else { omega_guess };
    let o = clipped_fit(points, vec![g0, w0], rule, |q, d| {
        if !(q[0] >= 0.0 && q[1] > 0.0) {
            return None;
        }
        spring_frequency(q[0], q[1], d, kappa).map(|(v, grad)| (v, grad.to_vec()))
    })?;
    Ok(ScanFitResult {
        kind: ScanFitKind::Frequency,
        g_abs: o.params[0],
        omega_bare: o.params[1],
        gamma_intrinsic: None,
        gamma_total_heating: None,
        n_phase: None,
        params: named(&["g", "omega_bare"], &o),
        covariance: o.covariance,
        residuals: o.residuals,
        excluded: o.excluded,
        reduced_chi2: o.reduced_chi2,
        converged: o.converged,
    })
}

/// Mode constants for the occupation curve. n(Δ) depends on Γ and |g| only
/// through Γ/|g|², so |g| is pinned, normally from the linewidth fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OccupationModel {
    pub omega: f64,
    pub kappa: f64,
    pub g: f64,
}

/// Fits n(Δ) = (Γ + A⁺)/(A⁻ − A⁺) + n_φ with free (Γ, n_φ).
pub fn fit_occupation_curve(
    points: &[ScanDatum],
    mode: OccupationModel,
    rule: OutlierRule,
) -> Result<ScanFitResult, FitError> {
    validate(points)?;
    let OccupationModel { omega, kappa, g } = mode;
    if !(g > 0.0) {
        return Err(FitError::InvalidInput(format!("coupling must be > 0, got {g}")));
    }
    for (i, p) in points.iter().enumerate() {
        let (m, pl) = lorentz_pair(kappa, p.detuning, omega);
        if !(m > pl) {
            return Err(FitError::InvalidInput(format!("scan point {i} has no net cooling")));
        }
    }
    let rates = move |g: f64, d: f64| {
        let (m, p) = lorentz_pair(kappa, d, omega);
        (g * g * m, g * g * p)
    };
    let rows: Vec<_> = points
        .iter()
        .map(|p| {
            let (am, ap) = rates(g, p.detuning);
            let u = 1.0 / (am - ap);
            (u, 1.0, p.value - ap * u, p.err)
        })
        .collect();
    let (gamma0, nphi0) = linear2(&rows).ok_or(FitError::Degenerate)?;
    let n_scale = points.iter().map(|p| p.value.abs()).fold(0.0, f64::max);
    let p0 = vec![gamma0.max(1e-9), nphi0.max(1e-9 * n_scale)];
    let o = clipped_fit(points, p0, rule, |q, d| {
        if !(q[0] >= 0.0 && q[1] >= 0.0) {
            return None;
        }
        let (am, ap) = rates(g, d);
        let net = am - ap;
        Some(((q[0] + ap) / net + q[1], vec![1.0 / net, 1.0]))
    })?;
    Ok(ScanFitResult {
        kind: ScanFitKind::Occupation,
        g_abs: g,
        omega_bare: omega,
        gamma_intrinsic: None,
        gamma_total_heating: Some(o.params[0]),
        n_phase: Some(o.params[1]),
        params: named(&["gamma_total_heating", "n_phase"], &o),
        covariance: o.covariance,
        residuals: o.residuals,
        excluded: o.excluded,
        reduced_chi2: o.reduced_chi2,
        converged: o.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{effective_frequency, effective_linewidth, steady_state_occupation, ModeLabel};
    use crate::scenarios::{cluster_1d, KAPPA};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::TAU;

    fn detunings(k: usize) -> Vec<f64> {
        (0..k).map(|i| TAU * (950e3 + 150e3 * i as f64 / (k - 1) as f64)).collect()
    }

    fn exact<F: Fn(f64) -> f64>(f: F, k: usize, rel_err: f64) -> Vec<ScanDatum> {
        detunings(k)
            .into_iter()
            .map(|d| {
                let v = f(d);
                ScanDatum { detuning: d, value: v, err: rel_err * v.abs() }
            })
            .collect()
    }

    fn jitter(points: &[ScanDatum], seed: u64) -> Vec<ScanDatum> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = Normal::new(0.0, 1.0).unwrap();
        points.iter().map(|p| ScanDatum { value: p.value + p.err * n.sample(&mut rng), ..*p }).collect()
    }

    #[test]
    fn spring_gradient_matches_finite_differences() {
        let (g, w, d) = (5.05e4, TAU * 1030e3, TAU * 1042e3);
        let (_, grad) = spring_frequency(g, w, d, KAPPA).unwrap();
        let h = [1.0, 10.0];
        let f = |g: f64, w: f64| spring_frequency(g, w, d, KAPPA).unwrap().0;
        let dg = (f(g + h[0], w) - f(g - h[0], w)) / (2.0 * h[0]);
        let dw = (f(g, w + h[1]) - f(g, w - h[1])) / (2.0 * h[1]);
        assert_relative_eq!(grad[0], dg, max_relative = 1e-5);
        assert_relative_eq!(grad[1], dw, max_relative = 1e-7);
    }

    #[test]
    fn spring_matches_physics_module() {
        let s = cluster_1d();
        let m = s.mode(ModeLabel::Alpha);
        for d in detunings(7) {
            let o = s.optics.with_detuning(d);
            let direct = effective_frequency(&m, &o, m.omega).unwrap();
            assert_relative_eq!(
                spring_frequency(m.g.norm(), m.omega, d, KAPPA).unwrap().0,
                direct,
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn exact_linewidths_recover_coupling() {
        let s = cluster_1d();
        let mut m = s.mode(ModeLabel::Alpha);
        m.gamma_intrinsic = 40.0;
        let pts = exact(|d| effective_linewidth(&m, &s.optics.with_detuning(d), m.omega), 12, 0.01);
        let fit = fit_scan_linewidth(&pts, m.omega, KAPPA, OutlierRule::default()).unwrap();
        assert_relative_eq!(fit.g_abs, m.g.norm(), max_relative = 1e-6);
        assert_relative_eq!(fit.gamma_intrinsic.unwrap(), 40.0, max_relative = 1e-6);
        assert!(fit.excluded.is_empty());
    }

    #[test]
    fn noisy_linewidths_recover_coupling_within_three_percent() {
        let s = cluster_1d();
        let m = s.mode(ModeLabel::Alpha);
        let truth = exact(|d| effective_linewidth(&m, &s.optics.with_detuning(d), m.omega), 20, 0.10);
        // the spread of |g| at this noise is about 1.7%, so ~91% of scans land within 3%
        let trials = 400;
        let mut within = 0;
        let mut bias = 0.0;
        for seed in 0..trials {
            let fit = fit_scan_linewidth(&jitter(&truth, seed), m.omega, KAPPA, OutlierRule::default()).unwrap();
            let rel = fit.g_abs / m.g.norm() - 1.0;
            bias += rel / trials as f64;
            if rel.abs() < 0.03 {
                within += 1;
            }
        }
        assert!(within as f64 >= 0.85 * trials as f64, "{within}");
        assert!(bias.abs() < 0.005, "{bias}");
    }

    #[test]
    fn gross_outliers_are_clipped() {
        let s = cluster_1d();
        let m = s.mode(ModeLabel::Alpha);
        let mut pts = exact(|d| effective_linewidth(&m, &s.optics.with_detuning(d), m.omega), 12, 0.02);
        pts = jitter(&pts, 3);
        pts[4].value *= 3.0;
        let fit = fit_scan_linewidth(&pts, m.omega, KAPPA, OutlierRule::default()).unwrap();
        assert_eq!(fit.excluded, vec![4]);
        assert!((fit.g_abs / m.g.norm() - 1.0).abs() < 0.02);
        let kept = fit_scan_linewidth(&pts, m.omega, KAPPA, OutlierRule { clip_sigma: None, max_rounds: 0 }).unwrap();
        assert!(kept.excluded.is_empty());
    }

    #[test]
    fn too_few_points_is_underdetermined() {
        let pts: Vec<_> = (0..3).map(|i| ScanDatum { detuning: i as f64, value: 1.0, err: 0.1 }).collect();
        assert!(matches!(
            fit_scan_linewidth(&pts, 1.0, 1.0, OutlierRule::default()),
            Err(FitError::Underdetermined { .. })
        ));
    }

    #[test]
    fn duplicate_detunings_are_rejected() {
        let pts: Vec<_> = (0..5).map(|i| ScanDatum { detuning: (i / 2) as f64, value: 1.0, err: 0.1 }).collect();
        assert!(matches!(fit_scan_linewidth(&pts, 1.0, 1.0, OutlierRule::default()), Err(FitError::InvalidInput(_))));
    }

    #[test]
    fn exact_frequencies_recover_coupling() {
        let s = cluster_1d();
        let m = s.mode(ModeLabel::Alpha);
        let pts: Vec<_> = exact(|d| effective_frequency(&m, &s.optics.with_detuning(d), m.omega).unwrap(), 12, 1e-6)
            .into_iter()
            .map(|p| ScanDatum { err: TAU * 5.0, ..p })
            .collect();
        let fit = fit_scan_frequency(&pts, KAPPA, None, OutlierRule::default()).unwrap();
        assert_relative_eq!(fit.g_abs, m.g.norm(), max_relative = 1e-6);
        assert_relative_eq!(fit.omega_bare, m.omega, max_relative = 1e-9);
    }

    #[test]
    fn per_mille_spring_yields_coupling_within_ten_percent() {
        let s = cluster_1d();
        let m = s.mode(ModeLabel::Alpha);
        let truth: Vec<_> = exact(|d| effective_frequency(&m, &s.optics.with_detuning(d), m.omega).unwrap(), 12, 0.0)
            .into_iter()
            .map(|p| ScanDatum { err: TAU * 3.0, ..p })
            .collect();
        let span = truth.iter().map(|p| p.value).fold(f64::MIN, f64::max)
            - truth.iter().map(|p| p.value).fold(f64::MAX, f64::min);
        assert!(span / m.omega < 5e-3);
        let mut hits = 0;
        for seed in 0..100 {
            let fit = fit_scan_frequency(&jitter(&truth, seed), KAPPA, None, OutlierRule::default()).unwrap();
            if (fit.g_abs / m.g.norm() - 1.0).abs() < 0.10 {
                hits += 1;
            }
        }
        assert!(hits >= 95, "{hits}");
    }

    #[test]
    fn linewidth_and_frequency_estimates_agree() {
        let s = cluster_1d();
        let m = s.mode(ModeLabel::Alpha);
        let lw = jitter(&exact(|d| effective_linewidth(&m, &s.optics.with_detuning(d), m.omega), 12, 0.05), 11);
        let fq: Vec<_> = exact(|d| effective_frequency(&m, &s.optics.with_detuning(d), m.omega).unwrap(), 12, 0.0)
            .into_iter()
            .map(|p| ScanDatum { err: TAU * 3.0, ..p })
            .collect();
        let fq = jitter(&fq, 12);
        let a = fit_scan_linewidth(&lw, m.omega, KAPPA, OutlierRule::default()).unwrap();
        let b = fit_scan_frequency(&fq, KAPPA, None, OutlierRule::default()).unwrap();
        let joint = (a.g_err().unwrap().powi(2) + b.g_err().unwrap().powi(2)).sqrt();
        assert!((a.g_abs - b.g_abs).abs() < 3.0 * joint);
    }

    fn occupation_points(rel_err: f64) -> (Vec<ScanDatum>, OccupationModel, f64) {
        let s = cluster_1d();
        let m = s.mode(ModeLabel::Alpha);
        let pts = exact(
            |d| steady_state_occupation(&m, &s.optics.with_detuning(d), 0.0).unwrap().n_total + 0.05,
            12,
            rel_err,
        );
        (pts, OccupationModel { omega: m.omega, kappa: KAPPA, g: m.g.norm() }, m.heating_rate())
    }

    #[test]
    fn exact_occupation_curve_recovers_heating() {
        let (pts, model, gamma) = occupation_points(0.05);
        let fit = fit_occupation_curve(&pts, model, OutlierRule::default()).unwrap();
        assert_relative_eq!(fit.gamma_total_heating.unwrap(), gamma, max_relative = 1e-6);
        assert_relative_eq!(fit.n_phase.unwrap(), 0.05, max_relative = 1e-6);
        assert_relative_eq!(fit.thermal_heating(3.2e3).unwrap(), 3.6e3, max_relative = 1e-6);

        // only Γ/|g|² is identifiable: a 10% larger |g| absorbs into Γ
        let scaled = fit_occupation_curve(&pts, OccupationModel { g: model.g * 1.1, ..model }, OutlierRule::default());
        assert_relative_eq!(scaled.unwrap().gamma_total_heating.unwrap(), 1.21 * gamma, max_relative = 1e-6);
    }

    #[test]
    fn scan_fits_are_deterministic() {
        let (pts, model, _) = occupation_points(0.05);
        let pts = jitter(&pts, 8);
        let a = fit_occupation_curve(&pts, model, OutlierRule::default()).unwrap();
        let b = fit_occupation_curve(&pts, model, OutlierRule::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn heating_rejects_points_without_cooling() {
        let (mut pts, model, _) = occupation_points(0.05);
        pts[0].detuning = -pts[0].detuning;
        assert!(fit_occupation_curve(&pts, model, OutlierRule::default()).is_err());
    }
}
