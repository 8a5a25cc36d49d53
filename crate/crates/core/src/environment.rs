//! Unitary dilation of the measured dynamics: every outgoing link kicks a
//! fresh environment qubit through the partial-measurement unitary, and the
//! record lives in those qubits instead of a Kraus chain.
//!
//! Joint basis index layout: the low `2N` bits are the field slots, bit
//! `2N + a - 1` is the environment qubit attached to link `a`. Qubits are
//! allocated step by step, so a state after `k` steps has `2N + 2k` qubits.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::decoherence::{chain_component, ChainKind};
use crate::error::{Error, Result};
use crate::event::{Event, FieldConfig};
use crate::kernel::{
    apply_one_bit, apply_two_bit, dot, make_partial_measurement, projector, Coupling,
};
use crate::model::Model;

/// Hard cap on the joint register: `2N + 2n` qubits.
pub const MAX_JOINT_QUBITS: usize = 24;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Field register plus however many environment qubits have been emitted.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    amps: Vec<Complex64>,
    field_links: usize,
    env_links: usize,
}

impl JointState {
    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn field_links(&self) -> usize {
        self.field_links
    }

    pub fn env_links(&self) -> usize {
        self.env_links
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`, conjugate-linear on the left.
    pub fn inner(&self, other: &JointState) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::WrongDimension {
                got: other.dim(),
                expected: self.dim(),
            });
        }
        Ok(dot(&self.amps, &other.amps))
    }
}

/// Fails when `2N + 2 * extent` would blow the qubit cap.
pub fn check_joint_size(model: &Model, extent: usize) -> Result<()> {
    let qubits = model.geometry().num_slots() + 2 * extent;
    if qubits > MAX_JOINT_QUBITS {
        return Err(Error::JointTooLarge {
            qubits,
            max_qubits: MAX_JOINT_QUBITS,
        });
    }
    Ok(())
}

/// Joint chain for one pure component: per step the vertex unitary, one
/// entangling unitary per outgoing link, then projectors pinning the field
/// to `field` and the environment qubits to `env`.
pub(crate) fn joint_chain(
    model: &Model,
    component: usize,
    field: FieldConfig,
    env: FieldConfig,
) -> Result<JointState> {
    if field.extent() != env.extent() {
        return Err(Error::ExtentMismatch {
            left: field.extent(),
            right: env.extent(),
        });
    }
    let n = field.extent();
    model.check_extent(n)?;
    check_joint_size(model, n)?;

    let g = model.geometry();
    let field_links = g.num_slots();
    let u = make_partial_measurement(model.coupling());
    let mut amps = model.components()[component].1.amplitudes().to_vec();
    for i in 1..=n {
        let vid = model.labelling().vertex_at_step(i);
        let v = g.vertex(vid)?;
        apply_two_bit(
            &mut amps,
            v.left_slot,
            v.right_slot,
            model.unitary(vid).matrix(),
        );
        // Two fresh environment qubits in |0>, then the entangling kicks.
        amps.resize(amps.len() * 4, ZERO);
        let env_left = field_links + 2 * i - 2;
        let env_right = field_links + 2 * i - 1;
        apply_two_bit(&mut amps, v.left_slot, env_left, u.matrix());
        apply_two_bit(&mut amps, v.right_slot, env_right, u.matrix());
        apply_one_bit(&mut amps, v.left_slot, projector(field.bit(2 * i - 1)).matrix());
        apply_one_bit(&mut amps, v.right_slot, projector(field.bit(2 * i)).matrix());
        apply_one_bit(&mut amps, env_left, projector(env.bit(2 * i - 1)).matrix());
        apply_one_bit(&mut amps, env_right, projector(env.bit(2 * i)).matrix());
    }
    Ok(JointState {
        amps,
        field_links,
        env_links: 2 * n,
    })
}

/// Joint branch amplitude for a field history and an environment record.
/// Requires a pure initial state.
pub fn joint_branch(model: &Model, field: FieldConfig, env: FieldConfig) -> Result<JointState> {
    if !model.is_pure() {
        return Err(Error::MixedState);
    }
    joint_chain(model, 0, field, env)
}

/// How far the joint branch strays from its product form
/// `x^(hamming) / (1 + x^2)^n * branch ⊗ |env>`: the largest amplitude
/// mismatch over the whole joint register.
pub fn factorization_deviation(
    model: &Model,
    field: FieldConfig,
    env: FieldConfig,
) -> Result<f64> {
    if !model.is_pure() {
        return Err(Error::MixedState);
    }
    let joint = joint_chain(model, 0, field, env)?;
    let plain = chain_component(model, 0, field, ChainKind::Projective)?;
    let n = field.extent();
    let x: Coupling = model.coupling();
    let d = field.hamming(env)?;
    let scale = x.pow(d) / (1.0 + x.value() * x.value()).powi(n as i32);
    let field_dim = plain.dim();
    let env_offset = (env.bits() as usize) * field_dim;
    let mut worst: f64 = 0.0;
    for (idx, amp) in joint.amplitudes().iter().enumerate() {
        let expected = if idx >= env_offset && idx - env_offset < field_dim {
            plain.amplitudes()[idx - env_offset] * scale
        } else {
            ZERO
        };
        worst = worst.max((amp - expected).norm());
    }
    Ok(worst)
}

/// The dilated functional on pairs (field event, record event).
pub fn d_qe(model: &Model, a: (&Event, &Event), b: (&Event, &Event)) -> Result<Complex64> {
    let n = a
        .0
        .extent()
        .max(a.1.extent())
        .max(b.0.extent())
        .max(b.1.extent());
    model.check_extent(n)?;
    check_joint_size(model, n)?;
    let (aq, ae) = (a.0.refine(n)?, a.1.refine(n)?);
    let (bq, be) = (b.0.refine(n)?, b.1.refine(n)?);
    if aq.is_empty() || ae.is_empty() || bq.is_empty() || be.is_empty() {
        return Ok(ZERO);
    }
    let mut total = ZERO;
    for (k, (w, _)) in model.components().iter().enumerate() {
        let mut cache: HashMap<(u64, u64), JointState> = HashMap::new();
        let fetch = |f: u64, e: u64, cache: &mut HashMap<(u64, u64), JointState>| -> Result<()> {
            if !cache.contains_key(&(f, e)) {
                let state = joint_chain(
                    model,
                    k,
                    FieldConfig::new(n, f)?,
                    FieldConfig::new(n, e)?,
                )?;
                cache.insert((f, e), state);
            }
            Ok(())
        };
        for &f in aq.bases() {
            for &e in ae.bases() {
                fetch(f, e, &mut cache)?;
            }
        }
        for &f in bq.bases() {
            for &e in be.bases() {
                fetch(f, e, &mut cache)?;
            }
        }
        let mut acc = ZERO;
        for &fa in aq.bases() {
            for &ea in ae.bases() {
                let left = &cache[&(fa, ea)];
                for &fb in bq.bases() {
                    for &eb in be.bases() {
                        acc += left.inner(&cache[&(fb, eb)])?;
                    }
                }
            }
        }
        total += w * acc;
    }
    Ok(total)
}

/// Weighted Gram matrix of all joint branches at one extent, indexed by
/// `field_bits | env_bits << 2n`.
pub(crate) fn joint_gram(model: &Model, extent: usize) -> Result<Vec<Vec<Complex64>>> {
    check_joint_size(model, extent)?;
    let side = 1usize.checked_shl(4 * extent as u32).unwrap_or(usize::MAX);
    if side > 1 << 10 {
        return Err(Error::TableTooLarge {
            rows: side,
            dim: 1 << (model.geometry().num_slots() + 2 * extent),
        });
    }
    let configs = 1u64 << (2 * extent);
    let mut out = vec![vec![ZERO; side]; side];
    for (k, (w, _)) in model.components().iter().enumerate() {
        let mut branches = Vec::with_capacity(side);
        for e in 0..configs {
            for f in 0..configs {
                branches.push(joint_chain(
                    model,
                    k,
                    FieldConfig::new(extent, f)?,
                    FieldConfig::new(extent, e)?,
                )?);
            }
        }
        for i in 0..side {
            for j in 0..side {
                out[i][j] += w * branches[i].inner(&branches[j])?;
            }
        }
    }
    Ok(out)
}
