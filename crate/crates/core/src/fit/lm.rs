//! Damped Gauss-Newton (Levenberg-Marquardt) least squares with Marquardt
//! column scaling and a gain-ratio damping schedule.

use nalgebra::{DMatrix, DVector};

use super::FitError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Relative scaled parameter step.
    pub xtol: f64,
    /// Relative cost decrease.
    pub ftol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self { max_iter: 200, xtol: 1e-10, ftol: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmReport {
    pub params: Vec<f64>,
    /// Sum of squared weighted residuals.
    pub chi2: f64,
    /// (JᵀJ)⁻¹ of the weighted problem.
    pub covariance: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes Σ r_i² where the callback fills weighted residuals
/// r = (model − data)/σ and, when asked, J = ∂r/∂p. Returning `false` marks
/// the parameters as outside the model's domain.
pub fn minimize<F>(p0: &[f64], n_obs: usize, opts: &LmOptions, mut eval: F) -> Result<LmReport, FitError>
where
    F: FnMut(&[f64], &mut [f64], Option<&mut DMatrix<f64>>) -> bool,
{
    let m = p0.len();
    if n_obs < m {
        return Err(FitError::InsufficientData { need: m, got: n_obs });
    }
    let mut p = DVector::from_column_slice(p0);
    let mut r = DVector::zeros(n_obs);
    let mut jac = DMatrix::zeros(n_obs, m);
    if !eval(p.as_slice(), r.as_mut_slice(), Some(&mut jac)) {
        return Err(FitError::InvalidInput("initial guess outside the model domain".into()));
    }
    let mut cost = r.norm_squared();
    let mut scale = column_norms(&jac);
    if scale.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(FitError::Degenerate);
    }

    let mut lambda = 1e-3;
    let mut nu = 2.0;
    let mut converged = cost == 0.0;
    let mut iterations = 0;
    let mut r_new = DVector::zeros(n_obs);

    while !converged && iterations < opts.max_iter {
        iterations += 1;
        // work in scaled coordinates q = D p so every column has unit norm
        let js = scaled(&jac, &scale);
        let jtj = js.tr_mul(&js);
        let grad = js.tr_mul(&r);
        let mut a = jtj.clone();
        for k in 0..m {
            a[(k, k)] += lambda;
        }
        let Some(chol) = a.cholesky() else {
            lambda *= nu;
            nu *= 2.0;
            continue;
        };
        let dq = -chol.solve(&grad);
        let dp = dq.component_div(&scale);
        let p_new = &p + &dp;
        let step = dq.norm();
        let size = p.component_mul(&scale).norm();

        let mut accepted = false;
        if eval(p_new.as_slice(), r_new.as_mut_slice(), None) {
            let cost_new = r_new.norm_squared();
            let predicted = -(2.0 * dq.dot(&grad) + dq.dot(&(&jtj * &dq)));
            let actual = cost - cost_new;
            if cost_new.is_finite() && actual > 0.0 && predicted > 0.0 {
                let rho = actual / predicted;
                p = p_new;
                eval(p.as_slice(), r.as_mut_slice(), Some(&mut jac));
                let old = cost;
                cost = r.norm_squared();
                let fresh = column_norms(&jac);
                for k in 0..m {
                    if fresh[k] > scale[k] && fresh[k].is_finite() {
                        scale[k] = fresh[k];
                    }
                }
                lambda *= (1.0 / 3.0f64).max(1.0 - (2.0 * rho - 1.0).powi(3));
                nu = 2.0;
                accepted = true;
                let small_step = step <= opts.xtol * (size + opts.xtol);
                let small_gain = actual <= opts.ftol * old && predicted <= opts.ftol * old;
                if cost == 0.0 || small_step || small_gain {
                    converged = true;
                }
            }
        }
        if !accepted {
            if step <= opts.xtol * (size + opts.xtol) {
                converged = true;
            }
            lambda *= nu;
            nu *= 2.0;
            if !lambda.is_finite() {
                break;
            }
        }
    }

    let covariance = covariance(&jac).ok_or(FitError::Degenerate)?;
    Ok(LmReport { params: p.as_slice().to_vec(), chi2: cost, covariance, iterations, converged })
}

fn column_norms(jac: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(jac.ncols(), jac.column_iter().map(|c| c.norm()))
}

fn scaled(jac: &DMatrix<f64>, scale: &DVector<f64>) -> DMatrix<f64> {
    let mut js = jac.clone();
    for (k, mut col) in js.column_iter_mut().enumerate() {
        col /= scale[k];
    }
    js
}

/// (JᵀJ)⁻¹ evaluated with column equilibration.
pub fn covariance(jac: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let scale = column_norms(jac);
    if scale.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return None;
    }
    let js = scaled(jac, &scale);
    let inv = js.tr_mul(&js).cholesky()?.inverse();
    let m = jac.ncols();
    let cov = DMatrix::from_fn(m, m, |i, j| inv[(i, j)] / (scale[i] * scale[j]));
    // reject numerically singular problems
    let cond_ok = (0..m).all(|k| inv[(k, k)].is_finite() && inv[(k, k)] < 1e14);
    cond_ok.then_some(cov)
}

/// Weighted curve fit of `data` against a model filling values and ∂/∂p.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveFit {
    pub params: Vec<f64>,
    pub covariance: DMatrix<f64>,
    pub chi2: f64,
    pub dof: usize,
    pub converged: bool,
    pub iterations: usize,
    /// Unweighted RMS of data − model.
    pub residual_rms: f64,
}

impl CurveFit {
    pub fn errors(&self) -> Vec<f64> {
        (0..self.params.len()).map(|k| self.covariance[(k, k)].sqrt()).collect()
    }

    pub fn reduced_chi2(&self) -> f64 {
        if self.dof == 0 {
            f64::NAN
        } else {
            self.chi2 / self.dof as f64
        }
    }
}

/// Variance model for spectral data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weighting {
    /// var = model² / averages, iterated to self-consistency.
    Periodogram { averages: u64 },
    /// Unit weights, covariance rescaled by the reduced χ².
    Unit,
    /// Known absolute 1σ per point.
    Absolute,
}

const REWEIGHT_PASSES: usize = 8;

/// Fits `model` to `data`. For [`Weighting::Absolute`] the per-point errors
/// come from `sigma`; otherwise it is ignored.
pub fn fit_curve<M>(
    data: &[f64],
    sigma: Option<&[f64]>,
    p0: &[f64],
    weighting: Weighting,
    opts: &LmOptions,
    model: M,
) -> Result<CurveFit, FitError>
where
    M: Fn(&[f64], &mut [f64], Option<&mut DMatrix<f64>>) -> bool,
{
    let n = data.len();
    let m = p0.len();
    if n < m {
        return Err(FitError::InsufficientData { need: m, got: n });
    }
    let mut values = vec![0.0; n];
    let mut sig = match (weighting, sigma) {
        (Weighting::Absolute, Some(s)) => {
            if s.len() != n || s.iter().any(|e| !(*e > 0.0)) {
                return Err(FitError::InvalidInput("errors must be positive, one per point".into()));
            }
            s.to_vec()
        }
        (Weighting::Absolute, None) => return Err(FitError::InvalidInput("absolute weighting needs errors".into())),
        _ => vec![1.0; n],
    };
    let mut params = p0.to_vec();
    let passes = if matches!(weighting, Weighting::Periodogram { .. }) { REWEIGHT_PASSES } else { 1 };
    let mut report = None;
    for _ in 0..passes {
        if let Weighting::Periodogram { averages } = weighting {
            if !model(&params, &mut values, None) {
                return Err(FitError::InvalidInput("parameters outside the model domain".into()));
            }
            let floor = 1e-12 * data.iter().map(|v| v.abs()).sum::<f64>() / n as f64;
            let root = (averages as f64).sqrt();
            for (s, v) in sig.iter_mut().zip(&values) {
                *s = v.abs().max(floor).max(f64::MIN_POSITIVE) / root;
            }
        }
        let r = minimize(&params, n, opts, |p, res, jac| {
            let mut mv = vec![0.0; n];
            let ok = match jac {
                Some(j) => {
                    let ok = model(p, &mut mv, Some(&mut *j));
                    for (i, mut row) in j.row_iter_mut().enumerate() {
                        row /= sig[i];
                    }
                    ok
                }
                None => model(p, &mut mv, None),
            };
            for i in 0..n {
                res[i] = (mv[i] - data[i]) / sig[i];
            }
            ok && res.iter().all(|x| x.is_finite())
        })?;
        let settled = report.as_ref().is_some_and(|prev: &LmReport| {
            prev.params
                .iter()
                .zip(&r.params)
                .enumerate()
                .all(|(k, (a, b))| (a - b).abs() <= 1e-6 * r.covariance[(k, k)].sqrt() || a == b)
        });
        params = r.params.clone();
        report = Some(r);
        if settled {
            break;
        }
    }
    let report = report.expect("at least one pass");
    model(&report.params, &mut values, None);
    let residual_rms = (values.iter().zip(data).map(|(m, d)| (m - d).powi(2)).sum::<f64>() / n as f64).sqrt();
    let dof = n - m;
    let mut covariance = report.covariance;
    if weighting == Weighting::Unit && dof > 0 {
        covariance *= report.chi2 / dof as f64;
    }
    Ok(CurveFit {
        params: report.params,
        covariance,
        chi2: report.chi2,
        dof,
        converged: report.converged,
        iterations: report.iterations,
        residual_rms,
    })
}
