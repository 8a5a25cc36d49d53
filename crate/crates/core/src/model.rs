//! A runnable model: lattice, evolution order, vertex dynamics, initial
//! state and measurement strength.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{
    build_lattice, validate_labelling, LatticeGeometry, LatticeSpec, NaturalLabelling, VertexId,
};
use crate::kernel::{Coupling, SurfaceState, VertexUnitary, OPERATOR_TOL};

/// One way to pick the per-vertex unitaries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnitaryPreset {
    Identity,
    Swap,
    Rotation { theta_left: f64, theta_right: f64 },
    /// Seeded random unitaries; vertex `k` (1-based) uses `seed + k - 1`.
    Random { seed: u64 },
}

/// Builds one unitary per vertex from a preset.
pub fn preset_unitaries(depth: usize, preset: UnitaryPreset) -> Vec<VertexUnitary> {
    (0..depth)
        .map(|k| match preset {
            UnitaryPreset::Identity => VertexUnitary::identity(),
            UnitaryPreset::Swap => VertexUnitary::swap(),
            UnitaryPreset::Rotation {
                theta_left,
                theta_right,
            } => VertexUnitary::rotation_pair(theta_left, theta_right),
            UnitaryPreset::Random { seed } => VertexUnitary::random(seed.wrapping_add(k as u64)),
        })
        .collect()
}

/// Normalized state from a bit string, one character per slot, slot 0 first.
pub fn basis_initial_state(geometry: &LatticeGeometry, bits: &str) -> Result<SurfaceState> {
    if bits.len() != geometry.num_slots() {
        return Err(Error::BadBitString {
            input: bits.to_owned(),
            reason: format!("need one bit per slot, {} slots", geometry.num_slots()),
        });
    }
    let mut index = 0u64;
    for (slot, ch) in bits.chars().enumerate() {
        match ch {
            '0' => {}
            '1' => index |= 1 << slot,
            _ => {
                return Err(Error::BadBitString {
                    input: bits.to_owned(),
                    reason: format!("unexpected character {ch:?}"),
                })
            }
        }
    }
    SurfaceState::basis(geometry.num_slots(), index)
}

/// State from an explicit amplitude vector; must be normalized to 1 within
/// [`OPERATOR_TOL`].
pub fn amplitude_initial_state(
    geometry: &LatticeGeometry,
    amps: Vec<Complex64>,
) -> Result<SurfaceState> {
    let expected = 1usize << geometry.num_slots();
    if amps.len() != expected {
        return Err(Error::WrongDimension {
            got: amps.len(),
            expected,
        });
    }
    let state = SurfaceState::from_amplitudes(amps)?;
    let norm = state.norm();
    if (norm - 1.0).abs() > OPERATOR_TOL {
        return Err(Error::NotNormalized { norm });
    }
    Ok(state)
}

/// Everything the functionals need. Initial data may be a mixture: a list of
/// weighted pure states with weights summing to one.
#[derive(Debug, Clone)]
pub struct Model {
    geometry: LatticeGeometry,
    labelling: NaturalLabelling,
    /// Indexed by vertex id minus one, so a unitary stays attached to its
    /// vertex no matter the evolution order.
    unitaries: Vec<VertexUnitary>,
    initial: Vec<(f64, SurfaceState)>,
    coupling: Coupling,
}

impl Model {
    pub fn new(
        geometry: LatticeGeometry,
        labelling: NaturalLabelling,
        unitaries: Vec<VertexUnitary>,
        initial: Vec<(f64, SurfaceState)>,
        coupling: Coupling,
    ) -> Result<Self> {
        // The labelling might come from a different geometry; re-validate.
        let order: Vec<usize> = labelling.order().iter().map(|v| v.0).collect();
        let labelling = validate_labelling(&geometry, &order)?;

        if unitaries.len() != geometry.depth() {
            return Err(Error::UnitaryCountMismatch {
                got: unitaries.len(),
                expected: geometry.depth(),
            });
        }
        if initial.is_empty() {
            return Err(Error::NoComponents);
        }
        let mut total = 0.0;
        for (w, state) in &initial {
            if !w.is_finite() || *w <= 0.0 {
                return Err(Error::BadMixtureWeights { total: *w });
            }
            total += w;
            if state.num_links() != geometry.num_slots() {
                return Err(Error::WrongDimension {
                    got: state.dim(),
                    expected: 1usize << geometry.num_slots(),
                });
            }
            let norm = state.norm();
            if (norm - 1.0).abs() > OPERATOR_TOL {
                return Err(Error::NotNormalized { norm });
            }
        }
        if (total - 1.0).abs() > OPERATOR_TOL {
            return Err(Error::BadMixtureWeights { total });
        }
        Ok(Model {
            geometry,
            labelling,
            unitaries,
            initial,
            coupling,
        })
    }

    /// Model with a single pure initial state.
    pub fn pure(
        geometry: LatticeGeometry,
        labelling: NaturalLabelling,
        unitaries: Vec<VertexUnitary>,
        state: SurfaceState,
        coupling: Coupling,
    ) -> Result<Self> {
        Model::new(geometry, labelling, unitaries, vec![(1.0, state)], coupling)
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn labelling(&self) -> &NaturalLabelling {
        &self.labelling
    }

    pub fn coupling(&self) -> Coupling {
        self.coupling
    }

    pub fn unitary(&self, vertex: VertexId) -> &VertexUnitary {
        &self.unitaries[vertex.0 - 1]
    }

    pub fn components(&self) -> &[(f64, SurfaceState)] {
        &self.initial
    }

    pub fn is_pure(&self) -> bool {
        self.initial.len() == 1
    }

    pub fn width(&self) -> usize {
        self.geometry.width()
    }

    pub fn depth(&self) -> usize {
        self.geometry.depth()
    }

    pub fn check_extent(&self, extent: usize) -> Result<()> {
        if extent > self.depth() {
            return Err(Error::ExtentExceedsDepth {
                extent,
                depth: self.depth(),
            });
        }
        Ok(())
    }

    /// Same physics, different evolution order.
    pub fn with_labelling(&self, labelling: NaturalLabelling) -> Result<Self> {
        Model::new(
            self.geometry.clone(),
            labelling,
            self.unitaries.clone(),
            self.initial.clone(),
            self.coupling,
        )
    }

    /// Same model at a different measurement strength.
    pub fn with_coupling(&self, coupling: Coupling) -> Self {
        let mut m = self.clone();
        m.coupling = coupling;
        m
    }
}

/// The configuration used by the command line tool when none is given:
/// width 2, depth 4, row-major order, seeded random unitaries (seed 42),
/// all-zeros initial state, coupling 0.3.
pub fn default_model() -> Model {
    let geometry = build_lattice(LatticeSpec { width: 2, depth: 4 }).expect("fixed spec");
    let labelling = geometry.row_major_labelling();
    let unitaries = preset_unitaries(4, UnitaryPreset::Random { seed: 42 });
    let state = basis_initial_state(&geometry, "0000").expect("fixed spec");
    Model::pure(
        geometry,
        labelling,
        unitaries,
        state,
        Coupling::new(0.3).expect("fixed spec"),
    )
    .expect("fixed spec")
}
