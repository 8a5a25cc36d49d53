//! Dense matrices of functional values at a fixed extent, with CSV and JSON
//! export. Row and column labels are configuration strings; the pair-valued
//! functionals label rows as `field|record`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::decoherence::{branch_map, gram, tpow, ChainKind};
use crate::environment::joint_gram;
use crate::error::{Error, Result};
use crate::event::FieldConfig;
use crate::model::Model;

/// Hard cap on rows; keeps every table at most a few megabytes.
pub const MAX_TABLE_ROWS: usize = 1 << 10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Which functional fills the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionalKind {
    /// Projective branch overlaps.
    Quantum,
    /// Kraus branch norms on the diagonal.
    Classical,
    /// Pairs of field and record, weighted by their disagreement.
    Combined,
    /// Record average of the quantum functional, in closed form.
    CoarseQuantum,
    /// Joint system and environment overlaps under the dilated dynamics.
    Dilated,
}

impl FunctionalKind {
    pub const ALL: [FunctionalKind; 5] = [
        FunctionalKind::Quantum,
        FunctionalKind::Classical,
        FunctionalKind::Combined,
        FunctionalKind::CoarseQuantum,
        FunctionalKind::Dilated,
    ];

    pub fn token(self) -> &'static str {
        match self {
            FunctionalKind::Quantum => "q",
            FunctionalKind::Classical => "c",
            FunctionalKind::Combined => "qc",
            FunctionalKind::CoarseQuantum => "qtilde",
            FunctionalKind::Dilated => "qe",
        }
    }

    /// Tables over (field, record) pairs instead of single configurations.
    pub fn is_paired(self) -> bool {
        matches!(self, FunctionalKind::Combined | FunctionalKind::Dilated)
    }
}

impl fmt::Display for FunctionalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for FunctionalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FunctionalKind::ALL
            .into_iter()
            .find(|k| k.token() == s)
            .ok_or_else(|| Error::UnknownFunctional {
                token: s.to_string(),
            })
    }
}

/// A functional evaluated on every pair of rows at one extent.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceTable {
    pub kind: FunctionalKind,
    pub extent: usize,
    pub labels: Vec<String>,
    pub entries: Vec<Vec<Complex64>>,
}

/// Evaluates `kind` on all pairs of extent-`extent` configurations (or
/// configuration pairs, for the pair-valued functionals).
pub fn build_table(model: &Model, kind: FunctionalKind, extent: usize) -> Result<DecoherenceTable> {
    model.check_extent(extent)?;
    let n = extent;
    let configs = 1usize << (2 * n);
    let side = if kind.is_paired() {
        configs
            .checked_mul(configs)
            .ok_or(Error::TableTooLarge {
                rows: usize::MAX,
                dim: configs,
            })?
    } else {
        configs
    };
    if side > MAX_TABLE_ROWS {
        return Err(Error::TableTooLarge {
            rows: side,
            dim: 1 << model.geometry().num_slots(),
        });
    }
    let config_label = |bits: usize| {
        FieldConfig::new(n, bits as u64)
            .expect("bits below 4^extent")
            .to_string()
    };
    let entries = match kind {
        FunctionalKind::Quantum => gram(model, n, ChainKind::Projective)?,
        FunctionalKind::Classical => {
            let mut m = vec![vec![ZERO; configs]; configs];
            for (k, (w, _)) in model.components().iter().enumerate() {
                let branches = branch_map(model, k, n, ChainKind::Kraus)?;
                for (i, b) in branches.iter().enumerate() {
                    m[i][i] += Complex64::new(w * b.norm_sqr(), 0.0);
                }
            }
            m
        }
        FunctionalKind::CoarseQuantum => {
            let x = model.coupling().value();
            let t = 2.0 * x / (1.0 + x * x);
            let mut m = gram(model, n, ChainKind::Projective)?;
            for (i, row) in m.iter_mut().enumerate() {
                for (j, e) in row.iter_mut().enumerate() {
                    *e *= tpow(t, (i ^ j).count_ones() as usize);
                }
            }
            m
        }
        FunctionalKind::Combined => {
            let g = gram(model, n, ChainKind::Projective)?;
            let x = model.coupling();
            let denom = (1.0 + x.value() * x.value()).powi(2 * n as i32);
            let mut m = vec![vec![ZERO; side]; side];
            for f1 in 0..configs {
                for r in 0..configs {
                    let p1 = f1 | (r << (2 * n));
                    let w1 = x.pow((f1 ^ r).count_ones() as usize);
                    for f2 in 0..configs {
                        let p2 = f2 | (r << (2 * n));
                        let w2 = x.pow((f2 ^ r).count_ones() as usize);
                        m[p1][p2] = g[f1][f2] * (w1 * w2 / denom);
                    }
                }
            }
            m
        }
        FunctionalKind::Dilated => joint_gram(model, n)?,
    };
    let labels = if kind.is_paired() {
        let mut labels = Vec::with_capacity(side);
        for p in 0..side {
            let f = p & (configs - 1);
            let r = p >> (2 * n);
            labels.push(format!("{}|{}", config_label(f), config_label(r)));
        }
        labels
    } else {
        (0..configs).map(config_label).collect()
    };
    Ok(DecoherenceTable {
        kind,
        extent: n,
        labels,
        entries,
    })
}

impl DecoherenceTable {
    pub fn rows(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i][j]
    }

    /// Largest `|m[i][j] - conj(m[j][i])|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, row) in self.entries.iter().enumerate() {
            for (j, &e) in row.iter().enumerate() {
                worst = worst.max((e - self.entries[j][i].conj()).norm());
            }
        }
        worst
    }

    /// How far any diagonal entry strays from being real and nonnegative.
    pub fn diagonal_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, row) in self.entries.iter().enumerate() {
            let d = row[i];
            worst = worst.max(d.im.abs()).max(-d.re);
        }
        worst.max(0.0)
    }

    pub fn total(&self) -> Complex64 {
        self.entries.iter().flatten().sum()
    }

    /// Distance of the grand total from one.
    pub fn normalization_defect(&self) -> f64 {
        (self.total() - Complex64::new(1.0, 0.0)).norm()
    }

    /// Checks hermiticity, diagonal positivity and normalization against a
    /// single tolerance; the exporters are expected to refuse tables that
    /// fail this.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let checks = [
            ("hermiticity", self.hermiticity_defect()),
            ("diagonal positivity", self.diagonal_defect()),
            ("normalization", self.normalization_defect()),
        ];
        for (check, deviation) in checks {
            if !(deviation <= tol) {
                return Err(Error::TableCheckFailed {
                    check: check.to_string(),
                    deviation,
                });
            }
        }
        Ok(())
    }

    /// Header row `label,re:<l1>,im:<l1>,...`, then one row per label.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("label");
        for l in &self.labels {
            s.push_str(&format!(",re:{l},im:{l}"));
        }
        s.push('\n');
        for (l, row) in self.labels.iter().zip(&self.entries) {
            s.push_str(l);
            for e in row {
                s.push_str(&format!(",{},{}", e.re, e.im));
            }
            s.push('\n');
        }
        s
    }

    /// Entries as `[re, im]` pairs, row major.
    pub fn to_json(&self) -> Value {
        json!({
            "functional": self.kind.token(),
            "extent": self.extent,
            "labels": self.labels,
            "entries": self
                .entries
                .iter()
                .map(|row| row.iter().map(|e| vec![e.re, e.im]).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        })
    }
}
