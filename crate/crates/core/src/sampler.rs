//! Sequential sampling of measurement records, one vertex at a time.
//!
//! Conditioned on the record so far, the four possible outcomes of the next
//! step carry the probabilities `|J J R branch|^2 / |branch|^2`; multiplying
//! the chosen conditionals back together recovers the measure of the sampled
//! record exactly. Sampling is deterministic given (base seed, trajectory
//! index): each trajectory runs on its own stream of one seeded generator.

use std::collections::HashMap;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::decoherence::{chain_component, ChainKind};
use crate::error::{Error, Result};
use crate::event::{Event, FieldConfig};
use crate::kernel::{apply_link_operator, apply_vertex_unitary, make_kraus, SurfaceState};
use crate::model::Model;

/// Probabilities below this are treated as exactly zero.
pub const ZERO_PROB: f64 = 1e-14;

/// One step of a sampled record: the two outgoing field values, the full
/// conditional distribution they were drawn from, and the weight of the
/// drawn outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub left: u8,
    pub right: u8,
    pub probabilities: [f64; 4],
    pub chosen_probability: f64,
}

/// A full sampled record plus everything needed to audit it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub index: u64,
    pub base_seed: u64,
    /// Sampled configuration as a bit string, link 1 first.
    pub config: String,
    /// Product of the chosen conditionals; equals the measure of the record.
    pub probability: f64,
    pub steps: Vec<StepRecord>,
    /// Normalized conditioned state, as (re, im) pairs; absent for mixtures.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_state: Option<Vec<[f64; 2]>>,
}

impl TrajectoryRecord {
    pub fn field_config(&self) -> FieldConfig {
        self.config.parse().expect("records store valid bit strings")
    }
}

/// Conditional distribution over the four outcomes of step `extent + 1`,
/// given the record `prefix`. Outcome index: left value is bit 0, right
/// value is bit 1.
pub fn step_distribution(model: &Model, prefix: FieldConfig) -> Result<[f64; 4]> {
    let n = prefix.extent();
    model.check_extent(n + 1)?;
    let g = model.geometry();
    let vid = model.labelling().vertex_at_step(n + 1);
    let v = g.vertex(vid)?;
    let mut num = [0.0f64; 4];
    let mut den = 0.0f64;
    for (k, (w, _)) in model.components().iter().enumerate() {
        let base = chain_component(model, k, prefix, ChainKind::Kraus)?;
        den += w * base.norm_sqr();
        let mut evolved = base;
        apply_vertex_unitary(&mut evolved, g, vid, model.unitary(vid))?;
        for o in 0..4u8 {
            let mut st = evolved.clone();
            apply_link_operator(&mut st, v.left_slot, &make_kraus(o & 1, model.coupling()))?;
            apply_link_operator(&mut st, v.right_slot, &make_kraus(o >> 1, model.coupling()))?;
            num[o as usize] += w * st.norm_sqr();
        }
    }
    if den <= ZERO_PROB {
        return Err(Error::DeadEnd {
            prefix: prefix.to_string(),
            threshold: ZERO_PROB,
        });
    }
    Ok(num.map(|p| p / den))
}

/// The normalized state conditioned on a record. Needs a pure initial state
/// and a record of measure above [`ZERO_PROB`].
pub fn conditioned_state(model: &Model, prefix: FieldConfig) -> Result<SurfaceState> {
    if !model.is_pure() {
        return Err(Error::MixedState);
    }
    let mut st = chain_component(model, 0, prefix, ChainKind::Kraus)?;
    let n2 = st.norm_sqr();
    if n2 <= ZERO_PROB {
        return Err(Error::DeadEnd {
            prefix: prefix.to_string(),
            threshold: ZERO_PROB,
        });
    }
    st.scale(Complex64::new(1.0 / n2.sqrt(), 0.0));
    Ok(st)
}

/// Samples one record of `steps` steps. Trajectory `index` under the same
/// `base_seed` always returns the same record.
pub fn sample_trajectory(
    model: &Model,
    steps: usize,
    base_seed: u64,
    index: u64,
) -> Result<TrajectoryRecord> {
    let mut memo = HashMap::new();
    sample_with_memo(model, steps, base_seed, index, &mut memo)
}

/// Samples `count` records on streams `0..count` of `base_seed`.
pub fn sample_ensemble(
    model: &Model,
    steps: usize,
    count: u64,
    base_seed: u64,
) -> Result<Vec<TrajectoryRecord>> {
    let mut memo = HashMap::new();
    (0..count)
        .map(|i| sample_with_memo(model, steps, base_seed, i, &mut memo))
        .collect()
}

fn sample_with_memo(
    model: &Model,
    steps: usize,
    base_seed: u64,
    index: u64,
    memo: &mut HashMap<(usize, u64), [f64; 4]>,
) -> Result<TrajectoryRecord> {
    model.check_extent(steps)?;
    let mut rng = ChaCha12Rng::seed_from_u64(base_seed);
    rng.set_stream(index);
    let mut prefix = FieldConfig::trivial();
    let mut records = Vec::with_capacity(steps);
    let mut probability = 1.0;
    for _ in 0..steps {
        let key = (prefix.extent(), prefix.bits());
        let probs = match memo.get(&key) {
            Some(p) => *p,
            None => {
                let p = step_distribution(model, prefix)?;
                memo.insert(key, p);
                p
            }
        };
        let kept = probs.map(|p| if p < ZERO_PROB { 0.0 } else { p });
        let total: f64 = kept.iter().sum();
        if total <= 0.0 {
            return Err(Error::DeadEnd {
                prefix: prefix.to_string(),
                threshold: ZERO_PROB,
            });
        }
        let u: f64 = rng.random();
        let mut outcome = None;
        let mut acc = 0.0;
        for (o, &p) in kept.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            acc += p / total;
            if u < acc {
                outcome = Some(o);
                break;
            }
        }
        // Rounding can leave u just above the last edge; take the topmost
        // live outcome then.
        let o = match outcome {
            Some(o) => o,
            None => kept
                .iter()
                .rposition(|&p| p > 0.0)
                .expect("total > 0 guarantees a live outcome"),
        };
        probability *= probs[o];
        records.push(StepRecord {
            left: (o & 1) as u8,
            right: (o >> 1) as u8,
            probabilities: probs,
            chosen_probability: probs[o],
        });
        prefix = prefix.extend((o & 1) as u8, (o >> 1) as u8)?;
    }
    let final_state = if model.is_pure() {
        let mut st = chain_component(model, 0, prefix, ChainKind::Kraus)?;
        let n2 = st.norm_sqr();
        if n2 > 0.0 {
            st.scale(Complex64::new(1.0 / n2.sqrt(), 0.0));
            Some(st.amplitudes().iter().map(|a| [a.re, a.im]).collect())
        } else {
            None
        }
    } else {
        None
    };
    Ok(TrajectoryRecord {
        index,
        base_seed,
        config: prefix.to_string(),
        probability,
        steps: records,
        final_state,
    })
}

/// Counts per configuration, alongside the exact measure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyRow {
    pub config: String,
    pub count: u64,
    pub frequency: f64,
    pub exact: f64,
}

/// One row per configuration at the sampled extent, including unseen ones.
pub fn frequency_summary(model: &Model, records: &[TrajectoryRecord]) -> Result<Vec<FrequencyRow>> {
    let Some(first) = records.first() else {
        return Ok(Vec::new());
    };
    let extent = first.field_config().extent();
    let mut counts: HashMap<u64, u64> = HashMap::new();
    for r in records {
        let c = r.field_config();
        if c.extent() != extent {
            return Err(Error::ExtentMismatch {
                left: extent,
                right: c.extent(),
            });
        }
        *counts.entry(c.bits()).or_default() += 1;
    }
    let total = records.len() as f64;
    let mut rows = Vec::with_capacity(1 << (2 * extent));
    for bits in 0..1u64 << (2 * extent) {
        let config = FieldConfig::new(extent, bits)?;
        let count = counts.get(&bits).copied().unwrap_or(0);
        rows.push(FrequencyRow {
            config: config.to_string(),
            count,
            frequency: count as f64 / total,
            exact: crate::decoherence::mu_c(model, &Event::cylinder(config))?,
        });
    }
    Ok(rows)
}

/// One JSON document per line, in trajectory order.
pub fn write_jsonl<W: Write>(records: &[TrajectoryRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(std::io::Error::other)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn frequency_csv(rows: &[FrequencyRow]) -> String {
    let mut s = String::from("config,count,frequency,exact_measure\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{}\n",
            r.config, r.count, r.frequency, r.exact
        ));
    }
    s
}
