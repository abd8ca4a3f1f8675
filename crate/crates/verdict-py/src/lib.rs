//! Python bindings exposing the core types and operations: tokenization,
//! label extraction, the naive Bayes classifier, and the statistics toolkit.

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use verdict_core::classify::{self, LogRegConfig};
use verdict_core::ingest::RawComment;
use verdict_core::labels::{self, JudgementLabel, LabeledComment, Valence};
use verdict_core::stats;
use verdict_core::text::TermDistribution;
use verdict_core::{allotax, demographics};

fn value_error<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_valence(s: &str) -> PyResult<Valence> {
    Valence::parse(s).ok_or_else(|| {
        PyValueError::new_err(format!("valence must be \"positive\" or \"negative\", got {s:?}"))
    })
}

fn stub_comment(id: String, body: String) -> RawComment {
    RawComment {
        id,
        link_id: "p".into(),
        parent_id: "p".into(),
        body,
        score: 0,
        created_utc: 1,
        author: String::new(),
    }
}

/// Lowercase tokens split on non-alphanumeric characters.
#[pyfunction]
fn tokenize(text: &str) -> Vec<String> {
    verdict_core::text::tokenize(text)
}

/// Judgement prefix of a comment body ("NTA", "YTA", "NAH", "ESH", "INFO"),
/// or None.
#[pyfunction]
fn extract_label(text: &str) -> Option<&'static str> {
    labels::extract_label(text).map(|l| l.as_str())
}

/// Map a label to its binary valence; INFO and unknown labels raise.
#[pyfunction]
fn label_valence(label: &str) -> PyResult<&'static str> {
    let parsed = JudgementLabel::from_token(label)
        .ok_or_else(|| PyValueError::new_err(format!("unknown label {label:?}")))?;
    parsed
        .valence()
        .map(|v| v.as_str())
        .ok_or_else(|| PyValueError::new_err("INFO carries no valence"))
}

/// First self-reported (gender, age) tag in a title, e.g. "\[M27\]" -> ("M", 27).
#[pyfunction]
fn parse_demo_tag(title: &str) -> Option<(String, u32)> {
    demographics::parse_demo_tag(title).map(|t| (t.gender.as_str().to_string(), t.age))
}

/// Multinomial naive Bayes over 1-gram counts; class order (positive,
/// negative).
#[pyclass]
struct NbModel {
    inner: classify::NbModel,
}

#[pymethods]
impl NbModel {
    /// Train from parallel lists of texts and valence strings.
    #[staticmethod]
    #[pyo3(signature = (texts, valences, alpha = 1.0))]
    fn train(texts: Vec<String>, valences: Vec<String>, alpha: f64) -> PyResult<Self> {
        if texts.len() != valences.len() {
            return Err(PyValueError::new_err(format!(
                "{} texts vs {} valences",
                texts.len(),
                valences.len()
            )));
        }
        let corpus: Vec<LabeledComment> = texts
            .into_iter()
            .zip(valences)
            .enumerate()
            .map(|(i, (body, valence))| {
                let valence = parse_valence(&valence)?;
                Ok(LabeledComment {
                    comment: stub_comment(format!("c{i}"), body),
                    label: match valence {
                        Valence::Positive => JudgementLabel::Nta,
                        Valence::Negative => JudgementLabel::Yta,
                    },
                    valence,
                    post_id: "p".into(),
                })
            })
            .collect::<PyResult<_>>()?;
        let inner = classify::nb_train(&corpus, alpha).map_err(value_error)?;
        Ok(NbModel { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let file = std::fs::File::open(path).map_err(value_error)?;
        let inner = classify::NbModel::load(std::io::BufReader::new(file)).map_err(value_error)?;
        Ok(NbModel { inner })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        let file = std::fs::File::create(path).map_err(value_error)?;
        self.inner.save(file).map_err(value_error)
    }

    /// (valence, (log_posterior_positive, log_posterior_negative))
    fn predict(&self, text: &str) -> (&'static str, (f64, f64)) {
        let (valence, scores) = self.inner.predict(text);
        (valence.as_str(), (scores[0], scores[1]))
    }

    fn classify(&self, text: &str) -> &'static str {
        use verdict_core::classify::TextClassifier;
        self.inner.classify(text).as_str()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    #[getter]
    fn vocabulary_size(&self) -> usize {
        self.inner.vocab().len()
    }
}

/// Two-tailed Mann-Whitney test; exact enumeration for pooled n <= 12.
#[pyfunction]
fn mann_whitney<'py>(
    py: Python<'py>,
    xs: Vec<f64>,
    ys: Vec<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    if xs.is_empty() || ys.is_empty() {
        return Err(PyValueError::new_err("both samples must be nonempty"));
    }
    let r = stats::mann_whitney(&xs, &ys);
    let d = PyDict::new(py);
    d.set_item("u", r.u)?;
    d.set_item("z", r.z)?;
    d.set_item("p_two_tailed", r.p_two_tailed)?;
    d.set_item("effect_cles", r.effect_cles)?;
    d.set_item("effect_rank_biserial", r.effect_rank_biserial)?;
    Ok(d)
}

/// P(X >= k) under Binomial(n, p0), log-space.
#[pyfunction]
fn binomial_test_one_sided(k: u64, n: u64, p0: f64) -> PyResult<f64> {
    if k > n {
        return Err(PyValueError::new_err("k must not exceed n"));
    }
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(PyValueError::new_err("p0 must be in (0, 1)"));
    }
    Ok(stats::binomial_test_one_sided(k, n, p0))
}

/// Lorenz curve points and Gini coefficient of nonnegative quantities.
#[pyfunction]
fn lorenz_gini<'py>(py: Python<'py>, quantities: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let r = stats::lorenz_gini(&quantities).map_err(value_error)?;
    let d = PyDict::new(py);
    d.set_item("gini", r.gini)?;
    d.set_item("points", r.points)?;
    Ok(d)
}

/// Chi-square independence test with phi for a 2x2 table.
#[pyfunction]
fn chi_square_phi<'py>(py: Python<'py>, table: Vec<Vec<u64>>) -> PyResult<Bound<'py, PyDict>> {
    if table.len() != 2 || table.iter().any(|row| row.len() != 2) {
        return Err(PyValueError::new_err("table must be 2x2"));
    }
    let r = stats::chi_square_phi([[table[0][0], table[0][1]], [table[1][0], table[1][1]]])
        .map_err(value_error)?;
    let d = PyDict::new(py);
    d.set_item("chi2", r.chi2)?;
    d.set_item("dof", r.dof)?;
    d.set_item("p", r.p)?;
    d.set_item("phi", r.phi)?;
    Ok(d)
}

/// Family-wise Bonferroni adjustment min(1, m * p).
#[pyfunction]
#[pyo3(signature = (pvals, m = None))]
fn bonferroni(pvals: Vec<f64>, m: Option<usize>) -> Vec<f64> {
    stats::bonferroni(&pvals, m)
}

/// Percent change in odds implied by a logistic coefficient.
#[pyfunction]
fn odds_ratio_percent(coefficient: f64) -> f64 {
    stats::odds_ratio_percent(coefficient)
}

/// Rank-turbulence divergence between two term-count mappings. Returns the
/// normalized total and per-term signed contributions (positive = first
/// corpus).
#[pyfunction]
#[pyo3(signature = (counts_1, counts_2, alpha = 1.0 / 3.0))]
fn rank_turbulence_divergence<'py>(
    py: Python<'py>,
    counts_1: BTreeMap<String, u64>,
    counts_2: BTreeMap<String, u64>,
    alpha: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let mut d1 = TermDistribution::new();
    for (t, c) in &counts_1 {
        d1.add(t, *c);
    }
    let mut d2 = TermDistribution::new();
    for (t, c) in &counts_2 {
        d2.add(t, *c);
    }
    let r = allotax::rtd_contributions(&d1, &d2, alpha).map_err(value_error)?;
    let d = PyDict::new(py);
    d.set_item("alpha", r.alpha)?;
    d.set_item("total", r.total)?;
    d.set_item("normalization", r.normalization)?;
    let contributions: Vec<(String, f64, f64, f64)> = r
        .contributions
        .iter()
        .map(|c| (c.term.clone(), c.rank_1, c.rank_2, c.contribution))
        .collect();
    d.set_item("contributions", contributions)?;
    Ok(d)
}

/// Fit a binary logistic regression by IRLS; labels are 0/1.
#[pyfunction]
fn logreg_fit<'py>(
    py: Python<'py>,
    x: Vec<Vec<f64>>,
    y: Vec<u8>,
) -> PyResult<Bound<'py, PyDict>> {
    let fit = classify::logreg_fit(&x, &y, LogRegConfig::default()).map_err(value_error)?;
    let d = PyDict::new(py);
    d.set_item("intercept", fit.intercept)?;
    d.set_item("weights", fit.weights.clone())?;
    d.set_item("standard_errors", fit.standard_errors.clone())?;
    d.set_item("converged", fit.converged)?;
    d.set_item("iterations", fit.iterations)?;
    d.set_item("deviance", fit.deviance)?;
    Ok(d)
}

/// Confusion metrics (percent) with the negative class as detection target.
#[pyfunction]
fn evaluate<'py>(
    py: Python<'py>,
    predictions: Vec<String>,
    truth: Vec<String>,
) -> PyResult<Bound<'py, PyDict>> {
    let predictions: Vec<Valence> = predictions
        .iter()
        .map(|s| parse_valence(s))
        .collect::<PyResult<_>>()?;
    let truth: Vec<Valence> = truth
        .iter()
        .map(|s| parse_valence(s))
        .collect::<PyResult<_>>()?;
    let m = classify::evaluate(&predictions, &truth).map_err(value_error)?;
    let d = PyDict::new(py);
    d.set_item("tp", m.tp)?;
    d.set_item("fp", m.fp)?;
    d.set_item("fn", m.fn_)?;
    d.set_item("tn", m.tn)?;
    d.set_item("accuracy", m.accuracy)?;
    d.set_item("precision", m.precision)?;
    d.set_item("recall", m.recall)?;
    d.set_item("f1", m.f1)?;
    d.set_item("fpr", m.fpr)?;
    Ok(d)
}

#[pymodule]
fn verdict(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<NbModel>()?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(extract_label, m)?)?;
    m.add_function(wrap_pyfunction!(label_valence, m)?)?;
    m.add_function(wrap_pyfunction!(parse_demo_tag, m)?)?;
    m.add_function(wrap_pyfunction!(mann_whitney, m)?)?;
    m.add_function(wrap_pyfunction!(binomial_test_one_sided, m)?)?;
    m.add_function(wrap_pyfunction!(lorenz_gini, m)?)?;
    m.add_function(wrap_pyfunction!(chi_square_phi, m)?)?;
    m.add_function(wrap_pyfunction!(bonferroni, m)?)?;
    m.add_function(wrap_pyfunction!(odds_ratio_percent, m)?)?;
    m.add_function(wrap_pyfunction!(rank_turbulence_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(logreg_fit, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    Ok(())
}
