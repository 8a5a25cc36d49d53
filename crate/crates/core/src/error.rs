//! Error type shared by every module in the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("lattice needs width >= 1 and depth >= 1, got width {width}, depth {depth}")]
    InvalidLatticeSpec { width: usize, depth: usize },

    #[error("vertex id {id} out of range 1..={depth}")]
    VertexOutOfRange { id: usize, depth: usize },

    #[error("slot {slot} out of range for a surface with {slots} slots")]
    SlotOutOfRange { slot: usize, slots: usize },

    #[error("labelling has {got} entries, lattice has {expected} vertices")]
    LabellingWrongLength { got: usize, expected: usize },

    #[error("labelling lists vertex {id} more than once")]
    LabellingDuplicate { id: usize },

    #[error(
        "labelling violates the causal order: vertex {vertex_j} at position {j} \
         precedes vertex {vertex_i} at position {i}"
    )]
    LabellingOrderViolation {
        i: usize,
        j: usize,
        vertex_i: usize,
        vertex_j: usize,
    },

    #[error("step {step} out of range 0..={depth}")]
    StepOutOfRange { step: usize, depth: usize },

    #[error("amplitude vector of length {dim} is not a power of four")]
    NotSurfaceDimension { dim: usize },

    #[error("state dimension {got} does not match expected {expected}")]
    WrongDimension { got: usize, expected: usize },

    #[error("state norm {norm} differs from 1 by more than the tolerance")]
    NotNormalized { norm: f64 },

    #[error("matrix fails the unitarity check, defect {defect:.3e}")]
    NotUnitary { defect: f64 },

    #[error("coupling must lie in [0, 1], got {value}")]
    CouplingOutOfRange { value: f64 },

    #[error("time extent {extent} exceeds the supported maximum {max}")]
    ExtentTooLarge { extent: usize, max: usize },

    #[error("time extent {extent} exceeds the lattice depth {depth}")]
    ExtentExceedsDepth { extent: usize, depth: usize },

    #[error("configurations have different extents: {left} vs {right}")]
    ExtentMismatch { left: usize, right: usize },

    #[error("cannot refine from extent {from} down to {to}")]
    RefineBelowExtent { from: usize, to: usize },

    #[error("config bits {bits:#x} out of range for extent {extent}")]
    BitsOutOfRange { bits: u64, extent: usize },

    #[error("bad field bit string {input:?}: {reason}")]
    BadBitString { input: String, reason: String },

    #[error("bad event literal {input:?}: {reason}")]
    BadEventLiteral { input: String, reason: String },

    #[error("event would need {bases} base configurations, over the enumeration cap")]
    EventTooLarge { bases: usize },

    #[error("config of extent {config_extent} is too short to test against an event of extent {event_extent}")]
    ConfigTooShort {
        config_extent: usize,
        event_extent: usize,
    },

    #[error("operation requires a pure initial state, this model carries a mixture")]
    MixedState,

    #[error("mixture weights must be positive and sum to 1, got total {total}")]
    BadMixtureWeights { total: f64 },

    #[error("model needs at least one initial-state component")]
    NoComponents,

    #[error("model carries {got} vertex unitaries, lattice has {expected} vertices")]
    UnitaryCountMismatch { got: usize, expected: usize },

    #[error("events {i} and {j} overlap; the alternating sum needs pairwise disjoint events")]
    NotDisjoint { i: usize, j: usize },

    #[error("interference order {order} not supported, expected 1, 2 or 3")]
    BadInterferenceOrder { order: usize },

    #[error("the two labellings evolve different vertex sets over the first {extent} steps")]
    RelabelVertexSetMismatch { extent: usize },

    #[error("joint state would need {qubits} qubits, more than the cap of {max_qubits}")]
    JointTooLarge { qubits: usize, max_qubits: usize },

    #[error("unknown functional {token:?}, expected one of q, c, qc, qtilde, qe")]
    UnknownFunctional { token: String },

    #[error("table with {rows} rows over dimension {dim} exceeds the size cap")]
    TableTooLarge { rows: usize, dim: usize },

    #[error("table failed its {check} check, worst deviation {deviation:e}")]
    TableCheckFailed { check: String, deviation: f64 },

    #[error("prefix {prefix} has measure below {threshold:e}; cannot condition on it")]
    DeadEnd { prefix: String, threshold: f64 },
}
