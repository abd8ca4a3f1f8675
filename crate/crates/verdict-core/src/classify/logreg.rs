//! Binary logistic regression fit by iteratively reweighted least squares
//! (Newton steps on the Bernoulli log-likelihood) with Wald standard errors
//! from the inverse observed information.

use nalgebra::{DMatrix, DVector};

use super::ClassifyError;

#[derive(Debug, Clone, Copy)]
pub struct LogRegConfig {
    pub max_iter: usize,
    /// Convergence threshold on the absolute deviance change.
    pub tol: f64,
    /// Tiny L2 penalty stabilizing separated designs.
    pub ridge: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-8,
            ridge: 1e-8,
        }
    }
}

/// Coefficients past this magnitude mean fitted probabilities are
/// numerically 0/1 on unit-to-double-digit scale predictors; the likelihood
/// has no interior optimum there.
const SEPARATION_COEF_BOUND: f64 = 50.0;

#[derive(Debug, Clone)]
pub struct LogRegFit {
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Wald standard errors ordered [intercept, weights...].
    pub standard_errors: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub deviance: f64,
    /// Set when the fit stopped without converging (e.g. separation).
    pub diagnostic: Option<String>,
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// log sigma(eta), stable on both tails.
fn log_sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        -(-eta).exp().ln_1p()
    } else {
        eta - eta.exp().ln_1p()
    }
}

/// Bernoulli log-likelihood of labels `y` under coefficients
/// `beta = [intercept, weights...]` on design `x` (rows are observations,
/// without the intercept column). Kahan-compensated so finite differences of
/// the result stay meaningful at large n.
pub fn logistic_log_likelihood(x: &[Vec<f64>], y: &[u8], beta: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut compensation = 0.0;
    for (row, &label) in x.iter().zip(y) {
        let eta = beta[0]
            + row
                .iter()
                .zip(&beta[1..])
                .map(|(v, w)| v * w)
                .sum::<f64>();
        // log(1 - sigma(eta)) = log sigma(eta) - eta
        let term = if label == 1 {
            log_sigmoid(eta)
        } else {
            log_sigmoid(eta) - eta
        };
        let adjusted = term - compensation;
        let next = sum + adjusted;
        compensation = (next - sum) - adjusted;
        sum = next;
    }
    sum
}

/// Gradient of the log-likelihood at `beta`, ordered [intercept, weights...].
pub fn logistic_log_likelihood_gradient(x: &[Vec<f64>], y: &[u8], beta: &[f64]) -> Vec<f64> {
    let d = beta.len();
    let mut grad = vec![0.0; d];
    for (row, &label) in x.iter().zip(y) {
        let eta = beta[0]
            + row
                .iter()
                .zip(&beta[1..])
                .map(|(v, w)| v * w)
                .sum::<f64>();
        let residual = label as f64 - sigmoid(eta);
        grad[0] += residual;
        for (g, v) in grad[1..].iter_mut().zip(row) {
            *g += residual * v;
        }
    }
    grad
}

/// Maximize the Bernoulli log-likelihood over `beta` by IRLS. Labels must be
/// 0/1 and the design needs more rows than columns. Perfect separation is
/// reported via `converged = false` with a diagnostic; coefficients are
/// still returned.
pub fn logreg_fit(x: &[Vec<f64>], y: &[u8], config: LogRegConfig) -> Result<LogRegFit, ClassifyError> {
    let n = x.len();
    if n == 0 || n != y.len() {
        return Err(ClassifyError::DegenerateDesign(format!(
            "{n} rows vs {} labels",
            y.len()
        )));
    }
    let d = x[0].len();
    if n <= d + 1 {
        return Err(ClassifyError::Underdetermined { n, d: d + 1 });
    }
    for (i, row) in x.iter().enumerate() {
        if row.len() != d {
            return Err(ClassifyError::DegenerateDesign(format!(
                "row {i} has {} columns, expected {d}",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(ClassifyError::NonFiniteInput(i));
        }
    }
    if y.iter().any(|&l| l > 1) {
        return Err(ClassifyError::BadLabel);
    }

    let p = d + 1; // intercept + weights
    let design = |i: usize, j: usize| if j == 0 { 1.0 } else { x[i][j - 1] };

    // Ridge-stabilized observed information and score at `beta`.
    let info_and_score = |beta: &DVector<f64>| {
        let mut info = DMatrix::zeros(p, p);
        let mut score = DVector::zeros(p);
        for (i, &label) in y.iter().enumerate() {
            let eta: f64 = (0..p).map(|j| design(i, j) * beta[j]).sum();
            let mu = sigmoid(eta);
            let w = (mu * (1.0 - mu)).max(1e-300);
            let residual = label as f64 - mu;
            for j in 0..p {
                let xj = design(i, j);
                score[j] += xj * residual;
                for k in j..p {
                    info[(j, k)] += w * xj * design(i, k);
                }
            }
        }
        for j in 0..p {
            for k in 0..j {
                info[(j, k)] = info[(k, j)];
            }
            info[(j, j)] += config.ridge;
            score[j] -= config.ridge * beta[j];
        }
        (info, score)
    };

    let mut beta = DVector::zeros(p);
    let mut deviance = -2.0 * logistic_log_likelihood(x, y, beta.as_slice());
    let mut converged = false;
    let mut diagnostic = None;
    let mut iterations = 0;

    for iter in 1..=config.max_iter {
        iterations = iter;
        let (info, score) = info_and_score(&beta);
        let Some(step) = info.lu().solve(&score) else {
            return Err(ClassifyError::DegenerateDesign(
                "information matrix is singular".into(),
            ));
        };
        beta += &step;
        let new_deviance = -2.0 * logistic_log_likelihood(x, y, beta.as_slice());
        let delta = (deviance - new_deviance).abs();
        deviance = new_deviance;

        if beta.amax() > SEPARATION_COEF_BOUND || deviance < 1e-6 {
            diagnostic = Some(format!(
                "fitted probabilities numerically 0/1 after {iter} iterations \
                 (possible separation; max |coef| = {:.3}, deviance = {:.3e})",
                beta.amax(),
                deviance
            ));
            break;
        }
        if delta < config.tol {
            converged = true;
            break;
        }
    }
    if !converged && diagnostic.is_none() {
        diagnostic = Some(format!(
            "no convergence after {iterations} iterations (max |coef| = {:.3})",
            beta.amax()
        ));
    }

    // Wald errors from the information at the returned coefficients.
    let (info, _) = info_and_score(&beta);
    let standard_errors = match info.try_inverse() {
        Some(inv) => (0..p).map(|j| inv[(j, j)].max(0.0).sqrt()).collect(),
        None => vec![f64::NAN; p],
    };

    Ok(LogRegFit {
        weights: beta.as_slice()[1..].to_vec(),
        intercept: beta[0],
        standard_errors,
        converged,
        iterations,
        deviance,
        diagnostic,
    })
}

/// sigmoid(intercept + w . x)
pub fn logreg_predict(fit: &LogRegFit, x: &[f64]) -> f64 {
    assert_eq!(x.len(), fit.weights.len(), "dimension mismatch");
    let eta = fit.intercept
        + fit
            .weights
            .iter()
            .zip(x)
            .map(|(w, v)| w * v)
            .sum::<f64>();
    sigmoid(eta)
}
