//! Predicate lattice: confusion statistics of a biased baseline, normalized
//! into per-class correlation rows with top-M neighbor sets.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{ClassFrequencies, TripletSample};
use crate::error::{FgplError, Result};
use crate::model::{self, header_fields, header_value, Classifier};

/// `counts[i * C + j]` = samples labeled `i` and predicted `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub num_classes: usize,
    pub counts: Vec<u64>,
}

impl ConfusionCounts {
    pub fn zeros(num_classes: usize) -> Self {
        ConfusionCounts {
            num_classes,
            counts: vec![0; num_classes * num_classes],
        }
    }

    pub fn get(&self, label: usize, predicted: usize) -> u64 {
        self.counts[label * self.num_classes + predicted]
    }

    pub fn add(&mut self, label: usize, predicted: usize) {
        self.counts[label * self.num_classes + predicted] += 1;
    }

    pub fn row(&self, label: usize) -> &[u64] {
        &self.counts[label * self.num_classes..(label + 1) * self.num_classes]
    }

    fn merge(mut self, other: ConfusionCounts) -> ConfusionCounts {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self
    }
}

/// Top-1 predictions of `model` over every sample, tallied per label.
pub fn collect_biased_predictions(
    model: &Classifier,
    samples: &[TripletSample],
) -> Result<ConfusionCounts> {
    let c = model.num_classes();
    samples
        .par_chunks(1024)
        .map(|chunk| {
            let mut local = ConfusionCounts::zeros(c);
            for s in chunk {
                if s.label >= c {
                    return Err(FgplError::validation(format!(
                        "label {} out of range for C={c}",
                        s.label
                    )));
                }
                local.add(s.label, model::predict_scores(model, s)?.top1);
            }
            Ok(local)
        })
        .try_reduce(|| ConfusionCounts::zeros(c), |a, b| Ok(a.merge(b)))
}

/// Row-normalized `C x C` matrix. Rows of classes without samples are all
/// zero and flagged as absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowStochastic {
    pub num_classes: usize,
    pub values: Vec<f64>,
    pub present: Vec<bool>,
}

impl RowStochastic {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.num_classes + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.num_classes..(i + 1) * self.num_classes]
    }

    pub fn identity(num_classes: usize) -> Self {
        let mut values = vec![0.0; num_classes * num_classes];
        for i in 0..num_classes {
            values[i * num_classes + i] = 1.0;
        }
        RowStochastic {
            num_classes,
            values,
            present: vec![true; num_classes],
        }
    }

    /// The `k` off-diagonal columns of row `i` with the largest values,
    /// descending, lowest index first on ties.
    pub fn top_off_diagonal(&self, i: usize, k: usize) -> Vec<usize> {
        let row = self.row(i);
        let mut cols: Vec<usize> = (0..self.num_classes).filter(|&j| j != i).collect();
        cols.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        cols.truncate(k);
        cols
    }
}

/// `s_ij = counts(i, j) / n_i`. Shared by lattice construction and by the
/// evaluation confusion matrix; classes with `n_i = 0` are marked absent.
pub fn row_normalize(counts: &ConfusionCounts, n: &ClassFrequencies) -> Result<RowStochastic> {
    let c = counts.num_classes;
    if n.num_classes() != c {
        return Err(FgplError::validation(format!(
            "confusion matrix has C={c}, frequencies have C={}",
            n.num_classes()
        )));
    }
    let mut values = vec![0.0; c * c];
    let mut present = vec![false; c];
    for i in 0..c {
        let row_total: u64 = counts.row(i).iter().sum();
        if row_total != n.counts[i] as u64 {
            return Err(FgplError::validation(format!(
                "row {i} of the confusion matrix sums to {row_total}, but n_{i} = {}",
                n.counts[i]
            )));
        }
        if n.counts[i] == 0 {
            continue;
        }
        present[i] = true;
        let ni = n.counts[i] as f64;
        for j in 0..c {
            values[i * c + j] = counts.get(i, j) as f64 / ni;
        }
    }
    Ok(RowStochastic {
        num_classes: c,
        values,
        present,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredicateLattice {
    pub s: RowStochastic,
    pub n: ClassFrequencies,
    pub max_neighbors: usize,
    /// `V_i`: `min(M, C - 1)` most-confused classes per class.
    pub neighbors: Vec<Vec<usize>>,
}

impl PredicateLattice {
    pub fn num_classes(&self) -> usize {
        self.s.num_classes
    }
}

pub fn normalize_confusion(
    counts: &ConfusionCounts,
    n: &ClassFrequencies,
    max_neighbors: usize,
) -> Result<PredicateLattice> {
    if max_neighbors == 0 {
        return Err(FgplError::validation("neighbor count M must be >= 1"));
    }
    n.ensure_positive()?;
    let s = row_normalize(counts, n)?;
    let neighbors = (0..s.num_classes)
        .map(|i| s.top_off_diagonal(i, max_neighbors))
        .collect();
    Ok(PredicateLattice {
        s,
        n: n.clone(),
        max_neighbors,
        neighbors,
    })
}

/// `s_ij / s_ii`, or `+inf` when the baseline never recognized class `i`.
pub fn correlation_ratio(lattice: &PredicateLattice, i: usize, j: usize) -> Result<f64> {
    let c = lattice.num_classes();
    if i >= c || j >= c {
        return Err(FgplError::Domain(format!(
            "class pair ({i}, {j}) out of range for C={c}"
        )));
    }
    if i == j {
        return Err(FgplError::Domain(format!(
            "correlation ratio needs distinct classes, got ({i}, {i})"
        )));
    }
    let sii = lattice.s.get(i, i);
    let sij = lattice.s.get(i, j);
    if sii == 0.0 {
        return Ok(if sij > 0.0 { f64::INFINITY } else { 0.0 });
    }
    Ok(sij / sii)
}

pub fn lattice_to_string(lattice: &PredicateLattice) -> String {
    let c = lattice.num_classes();
    let mut out = format!("# C={} M={}\n", c, lattice.max_neighbors);
    for i in 0..c {
        let row: Vec<String> = lattice.s.row(i).iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    let n: Vec<String> = lattice.n.counts.iter().map(|v| v.to_string()).collect();
    out.push_str(&n.join(","));
    out.push('\n');
    for v in &lattice.neighbors {
        let ids: Vec<String> = v.iter().map(|j| j.to_string()).collect();
        out.push_str(&ids.join(","));
        out.push('\n');
    }
    out
}

/// Parses a lattice file and re-checks every lattice invariant.
pub fn lattice_from_str(text: &str) -> Result<PredicateLattice> {
    let lines: Vec<&str> = text.lines().collect();
    let header = lines
        .first()
        .ok_or_else(|| FgplError::parse(1, "empty lattice file"))?;
    let fields = header_fields(header.trim(), 1)?;
    let c = header_value(&fields, "C", 1)?;
    let m = header_value(&fields, "M", 1)?;
    if lines.len() < 1 + c + 1 + c {
        return Err(FgplError::parse(
            lines.len(),
            format!("expected {} lines, found {}", 2 + 2 * c, lines.len()),
        ));
    }
    let mut values = Vec::with_capacity(c * c);
    for (k, line) in lines[1..=c].iter().enumerate() {
        let row = line
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| FgplError::parse(k + 2, format!("`{v}` is not a real number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != c {
            return Err(FgplError::parse(k + 2, format!("expected {c} values")));
        }
        values.extend(row);
    }
    let n_line = c + 1;
    let counts = lines[n_line]
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| FgplError::parse(n_line + 1, format!("`{v}` is not a count")))
        })
        .collect::<Result<Vec<usize>>>()?;
    if counts.len() != c {
        return Err(FgplError::parse(n_line + 1, format!("expected {c} counts")));
    }
    let mut neighbors = Vec::with_capacity(c);
    for (k, line) in lines[n_line + 1..n_line + 1 + c].iter().enumerate() {
        let lineno = n_line + 2 + k;
        let ids = if line.trim().is_empty() {
            Vec::new()
        } else {
            line.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<usize>()
                        .map_err(|_| FgplError::parse(lineno, format!("`{v}` is not a class id")))
                })
                .collect::<Result<Vec<usize>>>()?
        };
        neighbors.push(ids);
    }
    let lattice = PredicateLattice {
        s: RowStochastic {
            num_classes: c,
            values,
            present: counts.iter().map(|&n| n > 0).collect(),
        },
        n: ClassFrequencies { counts },
        max_neighbors: m,
        neighbors,
    };
    check_lattice(&lattice)?;
    Ok(lattice)
}

/// Row sums, value ranges and neighbor-set ordering.
pub fn check_lattice(lattice: &PredicateLattice) -> Result<()> {
    let c = lattice.num_classes();
    lattice.n.ensure_positive()?;
    for i in 0..c {
        let row = lattice.s.row(i);
        if row.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(FgplError::validation(format!("row {i} has entries outside [0, 1]")));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(FgplError::validation(format!("row {i} sums to {sum}")));
        }
        let expected = lattice.s.top_off_diagonal(i, lattice.max_neighbors);
        if lattice.neighbors[i] != expected {
            return Err(FgplError::validation(format!(
                "neighbor set of class {i} is not the top-{} of its row",
                lattice.max_neighbors
            )));
        }
    }
    Ok(())
}

pub fn save_lattice(lattice: &PredicateLattice, path: &Path) -> Result<()> {
    fs::write(path, lattice_to_string(lattice)).map_err(|e| FgplError::io(path, e))
}

pub fn load_lattice(path: &Path) -> Result<PredicateLattice> {
    let text = fs::read_to_string(path).map_err(|e| FgplError::io(path, e))?;
    lattice_from_str(&text)
}
