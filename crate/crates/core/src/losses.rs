//! Loss and gradient kernels with respect to the logits `eta`.
//!
//! | Loss | Value for label `i` |
//! |------|---------------------|
//! | CE | `-log softmax(eta)_i` |
//! | re-weighted CE | `-log(e^{eta_i} / sum_j w_ij e^{eta_j})`, `w_ii = 1` |
//! | category discriminating (CDL) | re-weighted CE with `w_ij` chosen from the frequency ratio `n_j / n_i` and the lattice correlation ratio `s_ij / s_ii` |
//! | entity discriminating (EDL) | `mean_{j in V_i} max(0, p_j - p_i + delta) * n_j / n_i` with `p = softmax(eta)` |
//! | combined | `CDL + lambda * EDL` |
//!
//! Every kernel works on max-shifted exponentials and returns the exact
//! gradient (hinge sub-gradient 0 at the kink).

use serde::{Deserialize, Serialize};

use crate::dataset::ClassFrequencies;
use crate::error::{FgplError, Result};
use crate::lattice::{correlation_ratio, PredicateLattice};
use crate::model::softmax;

/// Ablation toggles. All enabled is the full method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossSwitches {
    /// CDL: use the correlation ratio to pick the weight branch.
    pub cdl_pc: bool,
    /// CDL: apply re-weighting at all; off reduces CDL to plain CE.
    pub cdl_rf: bool,
    /// EDL: restrict the margin terms to the lattice neighbors `V_i`.
    pub edl_pc: bool,
    /// EDL: scale each margin term by `n_j / n_i`.
    pub edl_bf: bool,
}

impl Default for LossSwitches {
    fn default() -> Self {
        LossSwitches {
            cdl_pc: true,
            cdl_rf: true,
            edl_pc: true,
            edl_bf: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    pub alpha: f64,
    pub beta: f64,
    /// Correlation threshold; `-1` forces every pair into the strong branch.
    pub xi: f64,
    pub delta: f64,
    pub lambda: f64,
    /// Neighbors per class, `|V_i|`.
    pub max_neighbors: usize,
    pub switches: LossSwitches,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            alpha: 1.5,
            beta: 2.0,
            xi: 0.9,
            delta: 0.5,
            lambda: 0.1,
            max_neighbors: 5,
            switches: LossSwitches::default(),
        }
    }
}

impl LossConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            v.push(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            v.push(format!("beta must be positive, got {}", self.beta));
        }
        if !((0.0..=1.0).contains(&self.xi) || self.xi == -1.0) {
            v.push(format!("xi must lie in [0, 1] or equal -1, got {}", self.xi));
        }
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            v.push(format!("delta must be non-negative, got {}", self.delta));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            v.push(format!("lambda must be non-negative, got {}", self.lambda));
        }
        if self.max_neighbors == 0 {
            v.push("max_neighbors must be >= 1".to_string());
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(FgplError::Config(v.join("; ")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    pub value: f64,
    /// `d loss / d eta`.
    pub grad: Vec<f64>,
}

fn check_inputs(eta: &[f64], label: usize) -> Result<()> {
    if label >= eta.len() {
        return Err(FgplError::validation(format!(
            "label {label} out of range for C={}",
            eta.len()
        )));
    }
    if eta.iter().any(|e| !e.is_finite()) {
        return Err(FgplError::Numeric("non-finite logits".into()));
    }
    Ok(())
}

/// `(n_j / n_i)^alpha` when `n_j > n_i`, else 1.
pub fn seesaw_weight(n_i: usize, n_j: usize, alpha: f64) -> f64 {
    let mu = n_j as f64 / n_i as f64;
    if mu > 1.0 {
        mu.powf(alpha)
    } else {
        1.0
    }
}

/// Weight from the four-way split on `mu = n_j / n_i` and the correlation
/// ratio `phi`; ties `phi == xi` fall to the weak branch.
fn correlated_weight(n_i: usize, n_j: usize, phi: f64, config: &LossConfig) -> f64 {
    let mu = n_j as f64 / n_i as f64;
    let strong = phi > config.xi;
    match (mu >= 1.0, strong) {
        (true, true) => mu.powf(config.beta),
        (true, false) | (false, true) => 1.0,
        (false, false) => mu.powf(config.alpha),
    }
}

/// `w_ij` of the category discriminating loss.
pub fn cdl_weight(i: usize, j: usize, lattice: &PredicateLattice, config: &LossConfig) -> Result<f64> {
    let c = lattice.num_classes();
    if i >= c || j >= c {
        return Err(FgplError::validation(format!(
            "class pair ({i}, {j}) out of range for C={c}"
        )));
    }
    if i == j || !config.switches.cdl_rf {
        return Ok(1.0);
    }
    let (n_i, n_j) = (lattice.n.counts[i], lattice.n.counts[j]);
    if n_i == 0 {
        return Err(FgplError::validation(format!("class {i} has no training samples")));
    }
    if !config.switches.cdl_pc {
        return Ok(seesaw_weight(n_i, n_j, config.alpha));
    }
    let phi = correlation_ratio(lattice, i, j)?;
    Ok(correlated_weight(n_i, n_j, phi, config))
}

/// `ln w`, falling back to `beta * ln mu` (or `alpha * ln mu`) when the
/// weight itself is not representable.
fn log_weight(w: f64, n_i: usize, n_j: usize, config: &LossConfig) -> f64 {
    if w.is_finite() && w > 0.0 {
        return w.ln();
    }
    let ln_mu = (n_j as f64).ln() - (n_i as f64).ln();
    if ln_mu >= 0.0 {
        config.beta.max(config.alpha) * ln_mu
    } else {
        config.alpha * ln_mu
    }
}

fn cdl_log_weight_row(
    i: usize,
    lattice: &PredicateLattice,
    config: &LossConfig,
) -> Result<Option<Vec<f64>>> {
    if !config.switches.cdl_rf {
        return Ok(None);
    }
    let c = lattice.num_classes();
    let mut row = vec![0.0; c];
    for (j, lw) in row.iter_mut().enumerate() {
        let w = cdl_weight(i, j, lattice, config)?;
        *lw = log_weight(w, lattice.n.counts[i], lattice.n.counts[j], config);
    }
    Ok(Some(row))
}

/// Re-weighted softmax cross-entropy; `log_weights = None` is plain CE.
fn weighted_ce(eta: &[f64], label: usize, log_weights: Option<&[f64]>) -> LossOutput {
    let shifted: Vec<f64> = match log_weights {
        Some(lw) => eta.iter().zip(lw).map(|(e, w)| e + w).collect(),
        None => eta.to_vec(),
    };
    let max = shifted.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = shifted.iter().map(|a| (a - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let value = max + total.ln() - shifted[label];
    let mut grad: Vec<f64> = exps.into_iter().map(|e| e / total).collect();
    grad[label] -= 1.0;
    LossOutput {
        value: value.max(0.0),
        grad,
    }
}

pub fn ce_loss_grad(eta: &[f64], label: usize) -> Result<LossOutput> {
    check_inputs(eta, label)?;
    Ok(weighted_ce(eta, label, None))
}

pub fn cdl_loss_grad(
    eta: &[f64],
    label: usize,
    lattice: &PredicateLattice,
    config: &LossConfig,
) -> Result<LossOutput> {
    check_inputs(eta, label)?;
    if eta.len() != lattice.num_classes() {
        return Err(FgplError::validation(format!(
            "logits have C={}, lattice has C={}",
            eta.len(),
            lattice.num_classes()
        )));
    }
    let row = cdl_log_weight_row(label, lattice, config)?;
    Ok(weighted_ce(eta, label, row.as_deref()))
}

/// `(j, factor)` margin terms of class `i`.
fn edl_terms(i: usize, lattice: &PredicateLattice, config: &LossConfig) -> Result<Vec<(usize, f64)>> {
    let c = lattice.num_classes();
    let members: Vec<usize> = if config.switches.edl_pc {
        lattice.neighbors[i].clone()
    } else {
        (0..c).filter(|&j| j != i).collect()
    };
    if members.is_empty() {
        return Err(FgplError::Config(format!(
            "class {i} has an empty neighbor set"
        )));
    }
    let n_i = lattice.n.counts[i];
    if config.switches.edl_bf && n_i == 0 {
        return Err(FgplError::validation(format!("class {i} has no training samples")));
    }
    Ok(members
        .into_iter()
        .map(|j| {
            let factor = if config.switches.edl_bf {
                lattice.n.counts[j] as f64 / n_i as f64
            } else {
                1.0
            };
            (j, factor)
        })
        .collect())
}

fn edl_kernel(eta: &[f64], label: usize, terms: &[(usize, f64)], delta: f64) -> LossOutput {
    let probs = softmax(eta);
    let scale = 1.0 / terms.len() as f64;
    let mut value = 0.0;
    // upstream[k] = d loss / d p_k
    let mut upstream = vec![0.0; eta.len()];
    for &(j, factor) in terms {
        let margin = probs[j] - probs[label] + delta;
        if margin > 0.0 {
            value += margin * factor;
            upstream[j] += scale * factor;
            upstream[label] -= scale * factor;
        }
    }
    value *= scale;
    let weighted: f64 = probs.iter().zip(&upstream).map(|(p, u)| p * u).sum();
    let grad = probs
        .iter()
        .zip(&upstream)
        .map(|(p, u)| p * (u - weighted))
        .collect();
    LossOutput { value, grad }
}

pub fn edl_loss_grad(
    eta: &[f64],
    label: usize,
    lattice: &PredicateLattice,
    config: &LossConfig,
) -> Result<LossOutput> {
    check_inputs(eta, label)?;
    if eta.len() != lattice.num_classes() {
        return Err(FgplError::validation(format!(
            "logits have C={}, lattice has C={}",
            eta.len(),
            lattice.num_classes()
        )));
    }
    let terms = edl_terms(label, lattice, config)?;
    Ok(edl_kernel(eta, label, &terms, config.delta))
}

fn combine(cdl: LossOutput, edl: &LossOutput, lambda: f64) -> LossOutput {
    LossOutput {
        value: cdl.value + lambda * edl.value,
        grad: cdl
            .grad
            .iter()
            .zip(&edl.grad)
            .map(|(a, b)| a + lambda * b)
            .collect(),
    }
}

pub fn fgpl_loss_grad(
    eta: &[f64],
    label: usize,
    lattice: &PredicateLattice,
    config: &LossConfig,
) -> Result<LossOutput> {
    let cdl = cdl_loss_grad(eta, label, lattice, config)?;
    let edl = edl_loss_grad(eta, label, lattice, config)?;
    Ok(combine(cdl, &edl, config.lambda))
}

/// Training objectives exposed by the trainer and CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    Ce,
    Reweight,
    Cdl,
    CdlEdl,
}

impl LossKind {
    pub fn needs_lattice(self) -> bool {
        matches!(self, LossKind::Cdl | LossKind::CdlEdl)
    }

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Ce => "ce",
            LossKind::Reweight => "reweight",
            LossKind::Cdl => "cdl",
            LossKind::CdlEdl => "cdl-edl",
        }
    }
}

impl std::str::FromStr for LossKind {
    type Err = FgplError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "ce" => Ok(LossKind::Ce),
            "reweight" | "re-weight" => Ok(LossKind::Reweight),
            "cdl" => Ok(LossKind::Cdl),
            "cdl-edl" | "fgpl" => Ok(LossKind::CdlEdl),
            other => Err(FgplError::Config(format!("unknown loss kind `{other}`"))),
        }
    }
}

/// A loss with every per-class table precomputed, ready for the trainer.
///
/// Produces bit-identical results to the corresponding free function.
#[derive(Debug, Clone)]
pub struct Objective {
    kind: LossKind,
    num_classes: usize,
    lambda: f64,
    delta: f64,
    /// Row-major `C x C` log weights; absent for plain CE.
    log_weights: Option<Vec<f64>>,
    edl_terms: Option<Vec<Vec<(usize, f64)>>>,
}

impl Objective {
    pub fn new(
        kind: LossKind,
        config: &LossConfig,
        lattice: Option<&PredicateLattice>,
        frequencies: &ClassFrequencies,
    ) -> Result<Self> {
        config.validate()?;
        let c = frequencies.num_classes();
        let lattice = match (kind.needs_lattice(), lattice) {
            (true, None) => {
                return Err(FgplError::Config(format!(
                    "loss `{}` requires a predicate lattice",
                    kind.name()
                )))
            }
            (_, l) => l,
        };
        if let Some(l) = lattice {
            if l.num_classes() != c {
                return Err(FgplError::validation(format!(
                    "lattice has C={}, frequencies have C={c}",
                    l.num_classes()
                )));
            }
        }
        let mut log_weights = None;
        let mut edl_terms_table = None;
        match kind {
            LossKind::Ce => {}
            LossKind::Reweight => {
                frequencies.ensure_positive()?;
                let mut table = vec![0.0; c * c];
                for i in 0..c {
                    for j in 0..c {
                        let (n_i, n_j) = (frequencies.counts[i], frequencies.counts[j]);
                        let w = if i == j { 1.0 } else { seesaw_weight(n_i, n_j, config.alpha) };
                        table[i * c + j] = log_weight(w, n_i, n_j, config);
                    }
                }
                log_weights = Some(table);
            }
            LossKind::Cdl | LossKind::CdlEdl => {
                let lattice = lattice.expect("checked above");
                if config.switches.cdl_rf {
                    let mut table = Vec::with_capacity(c * c);
                    for i in 0..c {
                        table.extend(cdl_log_weight_row(i, lattice, config)?.expect("rf enabled"));
                    }
                    log_weights = Some(table);
                }
                if kind == LossKind::CdlEdl {
                    edl_terms_table = Some(
                        (0..c)
                            .map(|i| edl_terms(i, lattice, config))
                            .collect::<Result<Vec<_>>>()?,
                    );
                }
            }
        }
        Ok(Objective {
            kind,
            num_classes: c,
            lambda: config.lambda,
            delta: config.delta,
            log_weights,
            edl_terms: edl_terms_table,
        })
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn loss_grad(&self, eta: &[f64], label: usize) -> Result<LossOutput> {
        check_inputs(eta, label)?;
        if eta.len() != self.num_classes {
            return Err(FgplError::validation(format!(
                "logits have C={}, loss expects C={}",
                eta.len(),
                self.num_classes
            )));
        }
        let c = self.num_classes;
        let row = self
            .log_weights
            .as_ref()
            .map(|t| &t[label * c..(label + 1) * c]);
        let base = weighted_ce(eta, label, row);
        let out = match &self.edl_terms {
            Some(terms) => combine(base, &edl_kernel(eta, label, &terms[label], self.delta), self.lambda),
            None => base,
        };
        if !out.value.is_finite() || out.grad.iter().any(|g| !g.is_finite()) {
            return Err(FgplError::Numeric("loss evaluation produced a non-finite value".into()));
        }
        Ok(out)
    }
}
