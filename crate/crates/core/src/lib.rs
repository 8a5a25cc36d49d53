//! Decoherence functionals for a scalar field on a 1+1 dimensional null
//! lattice, with continuous readout of the field into records.
//!
//! The lattice is a periodic row of light-cone vertices evolved one vertex
//! at a time along a chosen linear order. Each step applies a two-link
//! unitary and then reads the two outgoing links at coupling `x`: `x = 0`
//! is a projective measurement, `x = 1` reads nothing. On top of that
//! dynamics the crate evaluates five history functionals,
//!
//! * projective branch overlaps ([`decoherence::d_q`]),
//! * the measured, diagonal functional ([`decoherence::d_c`]),
//! * the combined functional over (field, record) pairs
//!   ([`decoherence::d_qc`]),
//! * its record average in closed form ([`decoherence::dtilde_q`]),
//! * and the same readout dilated to unitary dynamics on field plus
//!   environment qubits ([`environment::d_qe`]),
//!
//! together with interference sums, dense tables, a record sampler and a
//! built-in check suite for the identities connecting them.
//!
//! ```
//! use qmlattice::model::default_model;
//! use qmlattice::event::{Event, FieldConfig};
//! use qmlattice::decoherence::{mu_c, mu_q};
//!
//! let model = default_model();
//! let event = Event::cylinder("10".parse::<FieldConfig>().unwrap());
//! let (q, c) = (mu_q(&model, &event).unwrap(), mu_c(&model, &event).unwrap());
//! assert!(q >= 0.0 && c >= 0.0);
//! ```

pub mod decoherence;
pub mod environment;
pub mod error;
pub mod event;
pub mod geometry;
pub mod kernel;
pub mod model;
pub mod sampler;
pub mod table;
pub mod verify;

pub use decoherence::{
    branch_c, branch_q, coarse_grain_classical, coarse_grain_quantum, d_c, d_q, d_qc, dtilde_q,
    interference, labelling_invariance_check, measure, mu_c, mu_q, mu_qtilde, relabel_config,
    relabel_event, LabellingDeviation, MeasureKind,
};
pub use environment::{d_qe, factorization_deviation, joint_branch, JointState};
pub use error::{Error, Result};
pub use event::{Event, FieldConfig};
pub use geometry::{
    build_lattice, surface_at, validate_labelling, Direction, LatticeGeometry, LatticeSpec,
    LinkId, NaturalLabelling, SpatialSurface, VertexId,
};
pub use kernel::{Coupling, SurfaceState, VertexUnitary};
pub use model::{
    amplitude_initial_state, basis_initial_state, default_model, preset_unitaries, Model,
    UnitaryPreset,
};
pub use sampler::{
    conditioned_state, frequency_summary, sample_ensemble, sample_trajectory, step_distribution,
    FrequencyRow, StepRecord, TrajectoryRecord,
};
pub use table::{build_table, DecoherenceTable, FunctionalKind};
pub use verify::{all_passed, run_suite, CheckReport, VerifyOptions};
