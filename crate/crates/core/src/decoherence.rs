//! The history functionals. Four live here: the projective one, the
//! measured (classical) one, the combined field-plus-record functional, and
//! its coarse-grained closed form. The unitarily dilated one lives in
//! [`crate::environment`].
//!
//! Every functional takes events, refines them to a common extent, and sums
//! branch amplitudes in a fixed order, so values do not depend on how an
//! event is represented.

use num_complex::Complex64;

use crate::environment;
use crate::error::{Error, Result};
use crate::event::{Event, FieldConfig};
use crate::geometry::NaturalLabelling;
use crate::kernel::{
    apply_link_operator, apply_vertex_unitary, dot, make_kraus, projector, SurfaceState,
};
use crate::model::Model;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Cap on dense enumeration: chains are tabulated for all `4^n` configs.
const MAX_DENSE_EXTENT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ChainKind {
    /// Project the outgoing fields onto the configured values.
    Projective,
    /// Read the outgoing fields through the strength-x Kraus operators.
    Kraus,
}

/// Amplitude chain for one pure component: per step, the vertex unitary
/// followed by one single-link operator on each outgoing slot.
pub(crate) fn chain_component(
    model: &Model,
    component: usize,
    config: FieldConfig,
    kind: ChainKind,
) -> Result<SurfaceState> {
    model.check_extent(config.extent())?;
    let g = model.geometry();
    let mut st = model.components()[component].1.clone();
    for i in 1..=config.extent() {
        let vid = model.labelling().vertex_at_step(i);
        apply_vertex_unitary(&mut st, g, vid, model.unitary(vid))?;
        let v = g.vertex(vid)?;
        let (bl, br) = (config.bit(2 * i - 1), config.bit(2 * i));
        let (op_l, op_r) = match kind {
            ChainKind::Projective => (projector(bl), projector(br)),
            ChainKind::Kraus => (
                make_kraus(bl, model.coupling()),
                make_kraus(br, model.coupling()),
            ),
        };
        apply_link_operator(&mut st, v.left_slot, &op_l)?;
        apply_link_operator(&mut st, v.right_slot, &op_r)?;
    }
    Ok(st)
}

/// Branch amplitude of a field configuration with projective readout.
/// Requires a pure initial state.
pub fn branch_q(model: &Model, config: FieldConfig) -> Result<SurfaceState> {
    require_pure(model)?;
    chain_component(model, 0, config, ChainKind::Projective)
}

/// Branch amplitude with the strength-x Kraus readout.
pub fn branch_c(model: &Model, config: FieldConfig) -> Result<SurfaceState> {
    require_pure(model)?;
    chain_component(model, 0, config, ChainKind::Kraus)
}

fn require_pure(model: &Model) -> Result<()> {
    if model.is_pure() {
        Ok(())
    } else {
        Err(Error::MixedState)
    }
}

/// All `4^extent` chains of one component, indexed by config bits.
pub(crate) fn branch_map(
    model: &Model,
    component: usize,
    extent: usize,
    kind: ChainKind,
) -> Result<Vec<SurfaceState>> {
    if extent > MAX_DENSE_EXTENT {
        return Err(Error::EventTooLarge {
            bases: 1usize.checked_shl(2 * extent as u32).unwrap_or(usize::MAX),
        });
    }
    (0..1u64 << (2 * extent))
        .map(|bits| chain_component(model, component, FieldConfig::new(extent, bits)?, kind))
        .collect()
}

/// Weighted Gram matrix of all branches at one extent: entry `(i, j)` is the
/// mixture average of `<branch(i)|branch(j)>`.
pub(crate) fn gram(model: &Model, extent: usize, kind: ChainKind) -> Result<Vec<Vec<Complex64>>> {
    let dim = 1usize << (2 * extent);
    let mut out = vec![vec![ZERO; dim]; dim];
    for (k, (w, _)) in model.components().iter().enumerate() {
        let branches = branch_map(model, k, extent, kind)?;
        for i in 0..dim {
            for j in 0..dim {
                out[i][j] += w * dot(branches[i].amplitudes(), branches[j].amplitudes());
            }
        }
    }
    Ok(out)
}

fn sorted_intersection(a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// The projective functional on a pair of events.
pub fn d_q(model: &Model, a: &Event, b: &Event) -> Result<Complex64> {
    let n = a.extent().max(b.extent());
    model.check_extent(n)?;
    let (ar, br) = (a.refine(n)?, b.refine(n)?);
    if ar.is_empty() || br.is_empty() {
        return Ok(ZERO);
    }
    let mut total = ZERO;
    for (k, (w, _)) in model.components().iter().enumerate() {
        let branches = branch_map(model, k, n, ChainKind::Projective)?;
        let mut acc = ZERO;
        for &fa in ar.bases() {
            for &fb in br.bases() {
                acc += dot(
                    branches[fa as usize].amplitudes(),
                    branches[fb as usize].amplitudes(),
                );
            }
        }
        total += w * acc;
    }
    Ok(total)
}

pub fn mu_q(model: &Model, a: &Event) -> Result<f64> {
    Ok(d_q(model, a, a)?.re)
}

/// The measured functional: diagonal in the configuration, so the value
/// only sees the intersection of the two events.
pub fn d_c(model: &Model, a: &Event, b: &Event) -> Result<Complex64> {
    let n = a.extent().max(b.extent());
    model.check_extent(n)?;
    let common = sorted_intersection(a.refine(n)?.bases(), b.refine(n)?.bases());
    if common.is_empty() {
        return Ok(ZERO);
    }
    let mut total = 0.0;
    for (k, (w, _)) in model.components().iter().enumerate() {
        let branches = branch_map(model, k, n, ChainKind::Kraus)?;
        for &base in &common {
            total += w * branches[base as usize].norm_sqr();
        }
    }
    Ok(Complex64::new(total, 0.0))
}

pub fn mu_c(model: &Model, a: &Event) -> Result<f64> {
    Ok(d_c(model, a, a)?.re)
}

/// The functional over pairs (field event, record event). The record factor
/// weighs each branch pair by `x` to the number of links where field and
/// record disagree, with `x^0 = 1` throughout, so `x = 0` reproduces exact
/// records and `x = 1` erases them.
pub fn d_qc(model: &Model, a: (&Event, &Event), b: (&Event, &Event)) -> Result<Complex64> {
    let n = a
        .0
        .extent()
        .max(a.1.extent())
        .max(b.0.extent())
        .max(b.1.extent());
    model.check_extent(n)?;
    let (aq, ac) = (a.0.refine(n)?, a.1.refine(n)?);
    let (bq, bc) = (b.0.refine(n)?, b.1.refine(n)?);
    let common = sorted_intersection(ac.bases(), bc.bases());
    if common.is_empty() || aq.is_empty() || bq.is_empty() {
        return Ok(ZERO);
    }
    let x = model.coupling();
    let denom = (1.0 + x.value() * x.value()).powi(2 * n as i32);
    let mut total = ZERO;
    for (k, (w, _)) in model.components().iter().enumerate() {
        let branches = branch_map(model, k, n, ChainKind::Projective)?;
        let mut acc = ZERO;
        for &fa in aq.bases() {
            for &fb in bq.bases() {
                let ip = dot(
                    branches[fa as usize].amplitudes(),
                    branches[fb as usize].amplitudes(),
                );
                let mut weight = 0.0;
                for &record in &common {
                    let da = (fa ^ record).count_ones() as usize;
                    let db = (fb ^ record).count_ones() as usize;
                    weight += x.pow(da + db);
                }
                acc += ip * (weight / denom);
            }
        }
        total += w * acc;
    }
    Ok(total)
}

pub(crate) fn tpow(t: f64, d: usize) -> f64 {
    if d == 0 {
        1.0
    } else {
        t.powi(d as i32)
    }
}

/// Closed form of the record-averaged functional: the projective value
/// damped by `(2x / (1 + x^2))^hamming` per branch pair.
pub fn dtilde_q(model: &Model, f: &Event, g: &Event) -> Result<Complex64> {
    let n = f.extent().max(g.extent());
    model.check_extent(n)?;
    let (fr, gr) = (f.refine(n)?, g.refine(n)?);
    if fr.is_empty() || gr.is_empty() {
        return Ok(ZERO);
    }
    let x = model.coupling().value();
    let t = 2.0 * x / (1.0 + x * x);
    let mut total = ZERO;
    for (k, (w, _)) in model.components().iter().enumerate() {
        let branches = branch_map(model, k, n, ChainKind::Projective)?;
        let mut acc = ZERO;
        for &fa in fr.bases() {
            for &fb in gr.bases() {
                let ip = dot(
                    branches[fa as usize].amplitudes(),
                    branches[fb as usize].amplitudes(),
                );
                acc += ip * tpow(t, (fa ^ fb).count_ones() as usize);
            }
        }
        total += w * acc;
    }
    Ok(total)
}

pub fn mu_qtilde(model: &Model, a: &Event) -> Result<f64> {
    Ok(dtilde_q(model, a, a)?.re)
}

/// Sums the combined functional over the full field factor, leaving record
/// events. Equals [`d_c`] on those events.
pub fn coarse_grain_quantum(model: &Model, a: &Event, b: &Event) -> Result<Complex64> {
    let omega = Event::omega();
    d_qc(model, (&omega, a), (&omega, b))
}

/// Sums the combined functional over the full record factor, leaving field
/// events. Equals [`dtilde_q`] on those events.
pub fn coarse_grain_classical(model: &Model, f: &Event, g: &Event) -> Result<Complex64> {
    let omega = Event::omega();
    d_qc(model, (f, &omega), (g, &omega))
}

/// Which diagonal measure to feed the alternating sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureKind {
    Quantum,
    Classical,
    CoarseQuantum,
}

pub fn measure(model: &Model, kind: MeasureKind, event: &Event) -> Result<f64> {
    match kind {
        MeasureKind::Quantum => mu_q(model, event),
        MeasureKind::Classical => mu_c(model, event),
        MeasureKind::CoarseQuantum => mu_qtilde(model, event),
    }
}

/// Alternating interference sum of order `events.len()` (1, 2 or 3) over
/// pairwise disjoint events. Order 2 vanishing means the measure adds up
/// classically; order 3 vanishing is the weaker sum rule obeyed by any
/// measure coming from a bi-additive functional.
pub fn interference(model: &Model, kind: MeasureKind, events: &[Event]) -> Result<f64> {
    for i in 0..events.len() {
        for j in i + 1..events.len() {
            if !events[i].is_disjoint(&events[j])? {
                return Err(Error::NotDisjoint { i, j });
            }
        }
    }
    let mu = |e: &Event| measure(model, kind, e);
    match events {
        [a] => mu(a),
        [a, b] => Ok(mu(&a.union(b)?)? - mu(a)? - mu(b)?),
        [a, b, c] => {
            let ab = a.union(b)?;
            let bc = b.union(c)?;
            let ca = c.union(a)?;
            let abc = ab.union(c)?;
            Ok(mu(&abc)? - mu(&ab)? - mu(&bc)? - mu(&ca)? + mu(a)? + mu(b)? + mu(c)?)
        }
        _ => Err(Error::BadInterferenceOrder {
            order: events.len(),
        }),
    }
}

/// Rewrites a configuration from one labelling to another. Both labellings
/// must evolve the same vertex set over the first `config.extent()` steps;
/// the bits move to wherever the other labelling numbers the same physical
/// link.
pub fn relabel_config(
    from: &NaturalLabelling,
    to: &NaturalLabelling,
    config: FieldConfig,
) -> Result<FieldConfig> {
    let n = config.extent();
    let mut bits = 0u64;
    for a in 1..=2 * n {
        let link = from.link(a);
        let a2 = to
            .label_of(link)
            .filter(|&a2| a2 <= 2 * n)
            .ok_or(Error::RelabelVertexSetMismatch { extent: n })?;
        if config.bit(a) == 1 {
            bits |= 1 << (a2 - 1);
        }
    }
    FieldConfig::new(n, bits)
}

pub fn relabel_event(
    from: &NaturalLabelling,
    to: &NaturalLabelling,
    event: &Event,
) -> Result<Event> {
    let configs = event
        .configs()
        .map(|c| relabel_config(from, to, c))
        .collect::<Result<Vec<_>>>()?;
    Event::from_configs(&configs)
}

/// Worst entrywise disagreement between two evolution orders, per
/// functional, over all cylinder pairs at one extent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabellingDeviation {
    pub quantum: f64,
    pub classical: f64,
    pub combined: f64,
    pub coarse_quantum: f64,
    pub environment: Option<f64>,
}

impl LabellingDeviation {
    pub fn worst(&self) -> f64 {
        [
            self.quantum,
            self.classical,
            self.combined,
            self.coarse_quantum,
            self.environment.unwrap_or(0.0),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Compares every functional entrywise under a change of labelling. Entries
/// are matched through [`relabel_config`], so both labellings must evolve
/// the same vertices over the first `extent` steps.
pub fn labelling_invariance_check(
    model: &Model,
    alt: &NaturalLabelling,
    extent: usize,
    with_environment: bool,
) -> Result<LabellingDeviation> {
    model.check_extent(extent)?;
    if extent > 4 {
        // The combined functional scans 4^(3 extent) triples.
        return Err(Error::EventTooLarge {
            bases: 1 << (2 * extent),
        });
    }
    let alt_model = model.with_labelling(alt.clone())?;
    let n = extent;
    let count = 1usize << (2 * n);

    // perm[a - 1] = label under `alt` of the link labelled `a` now.
    let from = model.labelling();
    let perm: Vec<usize> = (1..=2 * n)
        .map(|a| {
            alt.label_of(from.link(a))
                .filter(|&a2| a2 <= 2 * n)
                .ok_or(Error::RelabelVertexSetMismatch { extent: n })
        })
        .collect::<Result<_>>()?;
    let remap = |bits: u64| -> u64 {
        let mut out = 0u64;
        for (a, &a2) in perm.iter().enumerate() {
            if bits >> a & 1 == 1 {
                out |= 1 << (a2 - 1);
            }
        }
        out
    };

    let g1 = gram(model, n, ChainKind::Projective)?;
    let g2 = gram(&alt_model, n, ChainKind::Projective)?;
    let k1 = gram(model, n, ChainKind::Kraus)?;
    let k2 = gram(&alt_model, n, ChainKind::Kraus)?;

    let x = model.coupling();
    let t = 2.0 * x.value() / (1.0 + x.value() * x.value());
    let denom = (1.0 + x.value() * x.value()).powi(2 * n as i32);

    let mut dev = LabellingDeviation {
        quantum: 0.0,
        classical: 0.0,
        combined: 0.0,
        coarse_quantum: 0.0,
        environment: None,
    };
    for i in 0..count {
        let i2 = remap(i as u64) as usize;
        dev.classical = dev.classical.max((k1[i][i].re - k2[i2][i2].re).abs());
        for j in 0..count {
            let j2 = remap(j as u64) as usize;
            let dq = (g1[i][j] - g2[i2][j2]).norm();
            dev.quantum = dev.quantum.max(dq);
            let d = (i ^ j).count_ones() as usize;
            dev.coarse_quantum = dev.coarse_quantum.max(dq * tpow(t, d));
            // Combined entries on cylinder pairs ((i, r), (j, r)); records
            // with r' != r vanish identically on both sides.
            for r in 0..count as u64 {
                let da = (i as u64 ^ r).count_ones() as usize;
                let db = (j as u64 ^ r).count_ones() as usize;
                dev.combined = dev.combined.max(dq * x.pow(da + db) / denom);
            }
        }
    }

    if with_environment {
        let jg1 = environment::joint_gram(model, n)?;
        let jg2 = environment::joint_gram(&alt_model, n)?;
        let mut worst: f64 = 0.0;
        for f in 0..count {
            for e in 0..count {
                let p1 = f | (e << (2 * n));
                let p2 = remap(f as u64) as usize | ((remap(e as u64) as usize) << (2 * n));
                for f2 in 0..count {
                    for e2 in 0..count {
                        let q1 = f2 | (e2 << (2 * n));
                        let q2 =
                            remap(f2 as u64) as usize | ((remap(e2 as u64) as usize) << (2 * n));
                        worst = worst.max((jg1[p1][q1] - jg2[p2][q2]).norm());
                    }
                }
            }
        }
        dev.environment = Some(worst);
    }
    Ok(dev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_lattice, validate_labelling, LatticeSpec};
    use crate::kernel::{Coupling, VertexUnitary};
    use crate::model::{
        amplitude_initial_state, basis_initial_state, default_model, preset_unitaries,
        UnitaryPreset,
    };
    use approx::assert_relative_eq;

    fn width1_model(depth: usize, preset: UnitaryPreset, x: f64) -> Model {
        let g = build_lattice(LatticeSpec { width: 1, depth }).unwrap();
        let lab = g.row_major_labelling();
        let us = preset_unitaries(depth, preset);
        let st = basis_initial_state(&g, "00").unwrap();
        Model::pure(g, lab, us, st, Coupling::new(x).unwrap()).unwrap()
    }

    fn cfg(s: &str) -> FieldConfig {
        s.parse().unwrap()
    }

    #[test]
    fn identity_dynamics_pin_the_branch() {
        let m = width1_model(2, UnitaryPreset::Identity, 0.3);
        // Fields stay zero: only the all-zeros configuration survives.
        assert_relative_eq!(mu_q(&m, &Event::cylinder(cfg("0000"))).unwrap(), 1.0);
        assert_relative_eq!(mu_q(&m, &Event::cylinder(cfg("0100"))).unwrap(), 0.0);
        assert_eq!(branch_q(&m, cfg("01")).unwrap().norm_sqr(), 0.0);
    }

    #[test]
    fn swap_moves_the_excitation() {
        let g = build_lattice(LatticeSpec { width: 1, depth: 1 }).unwrap();
        let lab = g.row_major_labelling();
        let st = basis_initial_state(&g, "10").unwrap();
        let m = Model::pure(
            g,
            lab,
            vec![VertexUnitary::swap()],
            st,
            Coupling::new(0.0).unwrap(),
        )
        .unwrap();
        // Slot 0 held a 1; after the swap the right-moving link carries it.
        assert_relative_eq!(mu_q(&m, &Event::cylinder(cfg("01"))).unwrap(), 1.0);
        assert_relative_eq!(mu_q(&m, &Event::cylinder(cfg("10"))).unwrap(), 0.0);
    }

    #[test]
    fn rotation_splits_the_measure() {
        let theta = 0.4f64;
        let m = width1_model(
            1,
            UnitaryPreset::Rotation {
                theta_left: theta,
                theta_right: 0.0,
            },
            0.3,
        );
        assert_relative_eq!(
            mu_q(&m, &Event::cylinder(cfg("00"))).unwrap(),
            theta.cos().powi(2),
            epsilon = 1e-14
        );
        assert_relative_eq!(
            mu_q(&m, &Event::cylinder(cfg("10"))).unwrap(),
            theta.sin().powi(2),
            epsilon = 1e-14
        );
    }

    #[test]
    fn functionals_are_normalized_and_refinement_stable() {
        let m = default_model();
        let omega = Event::omega();
        for n in [0usize, 1, 2, 3] {
            let refined = omega.refine(n).unwrap();
            assert_relative_eq!(
                d_q(&m, &refined, &refined).unwrap().re,
                1.0,
                epsilon = 1e-12
            );
            assert_relative_eq!(
                d_c(&m, &refined, &refined).unwrap().re,
                1.0,
                epsilon = 1e-12
            );
            assert_relative_eq!(
                d_qc(&m, (&refined, &refined), (&refined, &refined))
                    .unwrap()
                    .re,
                1.0,
                epsilon = 1e-12
            );
            assert_relative_eq!(
                dtilde_q(&m, &refined, &refined).unwrap().re,
                1.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn kraus_chains_at_full_strength_are_uniform() {
        // x = 1 reads nothing: every configuration weighs 4^-n.
        for preset in [UnitaryPreset::Identity, UnitaryPreset::Random { seed: 5 }] {
            let m = width1_model(2, preset, 1.0);
            for bits in 0..16u64 {
                let e = Event::cylinder(FieldConfig::new(2, bits).unwrap());
                assert_relative_eq!(mu_c(&m, &e).unwrap(), 1.0 / 16.0, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn measured_functional_sees_only_the_intersection() {
        let m = default_model();
        let a: Event = "1:00,01".parse().unwrap();
        let b: Event = "1:01,10".parse().unwrap();
        let meet = a.intersect(&b).unwrap();
        let lhs = d_c(&m, &a, &b).unwrap();
        let rhs = d_c(&m, &meet, &meet).unwrap();
        assert!((lhs - rhs).norm() < 1e-15);
        // Fully disjoint events decohere exactly.
        let c: Event = "1:11".parse().unwrap();
        assert_eq!(d_c(&m, &a, &c).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn interference_witness_by_hand() {
        // Superpose the two left-slot values, rotate by pi/4 at step two:
        // branches interfere destructively and the union carries no measure.
        let g = build_lattice(LatticeSpec { width: 1, depth: 2 }).unwrap();
        let lab = g.row_major_labelling();
        let inv = 0.5f64.sqrt();
        let st = amplitude_initial_state(
            &g,
            vec![
                Complex64::new(inv, 0.0),
                Complex64::new(inv, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        )
        .unwrap();
        let us = vec![
            VertexUnitary::identity(),
            VertexUnitary::rotation_pair(std::f64::consts::FRAC_PI_4, 0.0),
        ];
        let m = Model::pure(g, lab, us, st, Coupling::new(0.3).unwrap()).unwrap();
        let a = Event::cylinder(cfg("0000"));
        let b = Event::cylinder(cfg("1000"));
        assert_relative_eq!(mu_q(&m, &a).unwrap(), 0.25, epsilon = 1e-14);
        assert_relative_eq!(mu_q(&m, &b).unwrap(), 0.25, epsilon = 1e-14);
        let i2 = interference(&m, MeasureKind::Quantum, &[a.clone(), b.clone()]).unwrap();
        assert_relative_eq!(i2, -0.5, epsilon = 1e-14);
        assert_relative_eq!(mu_q(&m, &a.union(&b).unwrap()).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn measured_interference_vanishes_where_quantum_does_not() {
        let m = default_model();
        let a = Event::cylinder(cfg("00"));
        let b = Event::cylinder(cfg("1000").truncate(1).unwrap()); // "10"
        let i2c = interference(&m, MeasureKind::Classical, &[a.clone(), b.clone()]).unwrap();
        assert!(i2c.abs() < 1e-14);
        let overlapping = Event::omega();
        assert!(matches!(
            interference(&m, MeasureKind::Quantum, &[a, overlapping]),
            Err(Error::NotDisjoint { .. })
        ));
    }

    #[test]
    fn third_order_sum_rule_holds_for_all_three_measures() {
        let m = default_model();
        let a: Event = "1:00".parse().unwrap();
        let b: Event = "1:01,10".parse().unwrap();
        let c: Event = "2:1100,1110".parse().unwrap();
        for kind in [
            MeasureKind::Quantum,
            MeasureKind::Classical,
            MeasureKind::CoarseQuantum,
        ] {
            let i3 = interference(&m, kind, &[a.clone(), b.clone(), c.clone()]).unwrap();
            assert!(i3.abs() < 1e-12, "{kind:?} gave {i3}");
        }
    }

    #[test]
    fn record_average_matches_the_closed_form() {
        let m = default_model();
        for bits_a in 0..4u64 {
            for bits_b in 0..4u64 {
                let f = Event::cylinder(FieldConfig::new(1, bits_a).unwrap());
                let g = Event::cylinder(FieldConfig::new(1, bits_b).unwrap());
                let direct = coarse_grain_classical(&m, &f, &g).unwrap();
                let closed = dtilde_q(&m, &f, &g).unwrap();
                assert!((direct - closed).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn field_average_matches_the_measured_functional() {
        let m = default_model();
        for bits_a in 0..4u64 {
            for bits_b in 0..4u64 {
                let a = Event::cylinder(FieldConfig::new(1, bits_a).unwrap());
                let b = Event::cylinder(FieldConfig::new(1, bits_b).unwrap());
                let direct = coarse_grain_quantum(&m, &a, &b).unwrap();
                let expect = d_c(&m, &a, &b).unwrap();
                assert!((direct - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_coupling_makes_the_measured_diagonal_quantum() {
        let m = default_model().with_coupling(Coupling::new(0.0).unwrap());
        for bits in 0..16u64 {
            let e = Event::cylinder(FieldConfig::new(2, bits).unwrap());
            let q = mu_q(&m, &e).unwrap();
            let c = mu_c(&m, &e).unwrap();
            assert_relative_eq!(q, c, epsilon = 1e-14);
        }
    }

    #[test]
    fn full_coupling_makes_the_closed_form_quantum() {
        let m = default_model().with_coupling(Coupling::new(1.0).unwrap());
        for bits_a in 0..16u64 {
            for bits_b in 0..16u64 {
                let a = Event::cylinder(FieldConfig::new(2, bits_a).unwrap());
                let b = Event::cylinder(FieldConfig::new(2, bits_b).unwrap());
                let dt = dtilde_q(&m, &a, &b).unwrap();
                let dq = d_q(&m, &a, &b).unwrap();
                assert!((dt - dq).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn hermiticity_on_random_events() {
        let m = default_model();
        let a: Event = "2:0000,0110,1011".parse().unwrap();
        let b: Event = "1:01,11".parse().unwrap();
        let ab = d_q(&m, &a, &b).unwrap();
        let ba = d_q(&m, &b, &a).unwrap();
        assert!((ab - ba.conj()).norm() < 1e-13);
        let qc_ab = d_qc(&m, (&a, &b), (&b, &a)).unwrap();
        let qc_ba = d_qc(&m, (&b, &a), (&a, &b)).unwrap();
        assert!((qc_ab - qc_ba.conj()).norm() < 1e-13);
    }

    #[test]
    fn additivity_under_disjoint_union() {
        let m = default_model();
        let a: Event = "1:00".parse().unwrap();
        let b: Event = "1:11".parse().unwrap();
        let c: Event = "2:0110,1001".parse().unwrap();
        let merged = a.union(&b).unwrap();
        let lhs = d_q(&m, &merged, &c).unwrap();
        let rhs = d_q(&m, &a, &c).unwrap() + d_q(&m, &b, &c).unwrap();
        assert!((lhs - rhs).norm() < 1e-13);
    }

    #[test]
    fn relabelling_moves_bits_with_their_links() {
        let g = build_lattice(LatticeSpec { width: 2, depth: 4 }).unwrap();
        let rm = g.row_major_labelling();
        let swapped = validate_labelling(&g, &[2, 1, 3, 4]).unwrap();
        // Links of step 1 and step 2 trade labels wholesale.
        let c = relabel_config(&rm, &swapped, cfg("1001")).unwrap();
        assert_eq!(c.to_string(), "0110");
        // Round trip is the identity.
        let back = relabel_config(&swapped, &rm, c).unwrap();
        assert_eq!(back, cfg("1001"));
        // Different vertex sets cannot be matched.
        assert!(relabel_config(&rm, &swapped, cfg("10")).is_err());
    }

    #[test]
    fn spacelike_transposition_leaves_functionals_alone() {
        let m = default_model();
        let g = m.geometry().clone();
        let swapped = validate_labelling(&g, &[2, 1, 3, 4]).unwrap();
        let dev = labelling_invariance_check(&m, &swapped, 2, false).unwrap();
        assert!(dev.worst() < 1e-12, "worst deviation {dev:?}");
    }
}
