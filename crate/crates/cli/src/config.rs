//! JSON run configuration. Every field has a default, so `{}` (or no config
//! file at all) describes the same model as [`qmlattice::default_model`].

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use serde::Deserialize;

use qmlattice::geometry::{build_lattice, LatticeSpec};
use qmlattice::kernel::Coupling;
use qmlattice::model::{
    amplitude_initial_state, basis_initial_state, preset_unitaries, Model, UnitaryPreset,
};
use qmlattice::{validate_labelling, SurfaceState};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_width")]
    pub width: usize,
    #[serde(default = "default_depth")]
    pub depth: usize,
    /// `"row-major"` or an explicit vertex order like `[2, 1, 3, 4]`.
    #[serde(default)]
    pub labelling: LabellingSpec,
    #[serde(default)]
    pub unitaries: UnitarySpec,
    /// Defaults to the all-zeros basis state.
    #[serde(default)]
    pub initial_state: Option<InitialStateSpec>,
    /// A single readout coupling, or a list to sweep under `verify`.
    #[serde(default)]
    pub coupling: CouplingSpec,
    #[serde(default = "default_extent")]
    pub extent: usize,
    #[serde(default = "default_trajectories")]
    pub trajectories: u64,
    /// Steps per sampled record; defaults to `extent`.
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Overrides every per-check tolerance when set.
    #[serde(default)]
    pub tolerance: Option<f64>,
}

fn default_width() -> usize {
    2
}

fn default_depth() -> usize {
    4
}

fn default_extent() -> usize {
    2
}

fn default_trajectories() -> u64 {
    1000
}

fn default_seed() -> u64 {
    7
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config is valid")
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum LabellingSpec {
    Named(String),
    Order(Vec<usize>),
}

impl Default for LabellingSpec {
    fn default() -> Self {
        LabellingSpec::Named("row-major".to_string())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum UnitarySpec {
    Identity,
    Swap,
    Rotation { theta_left: f64, theta_right: f64 },
    Random { seed: u64 },
}

impl Default for UnitarySpec {
    fn default() -> Self {
        UnitarySpec::Random { seed: 42 }
    }
}

impl UnitarySpec {
    fn preset(&self) -> UnitaryPreset {
        match *self {
            UnitarySpec::Identity => UnitaryPreset::Identity,
            UnitarySpec::Swap => UnitaryPreset::Swap,
            UnitarySpec::Rotation {
                theta_left,
                theta_right,
            } => UnitaryPreset::Rotation {
                theta_left,
                theta_right,
            },
            UnitarySpec::Random { seed } => UnitaryPreset::Random { seed },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialStateSpec {
    /// One basis configuration, e.g. `"0100"`; character `k` is slot `k`.
    Basis { bits: String },
    /// A full state vector, complex numbers as `[re, im]` pairs.
    Amplitudes { amplitudes: Vec<[f64; 2]> },
    /// A classical mixture of pure components.
    Mixture { components: Vec<MixtureComponent> },
}

// No deny_unknown_fields here: serde cannot combine it with flatten.
#[derive(Debug, Clone, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    #[serde(flatten)]
    pub state: PureComponent,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PureComponent {
    Basis { bits: String },
    Amplitudes { amplitudes: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum CouplingSpec {
    Single(f64),
    Grid(Vec<f64>),
}

impl Default for CouplingSpec {
    fn default() -> Self {
        CouplingSpec::Single(0.3)
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<RunConfig> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing config {}", p.display()))
            }
        }
    }

    pub fn couplings(&self) -> Vec<f64> {
        match &self.coupling {
            CouplingSpec::Single(x) => vec![*x],
            CouplingSpec::Grid(xs) => xs.clone(),
        }
    }

    /// The single configured coupling; lists are only meaningful for the
    /// sweep in `verify`.
    pub fn single_coupling(&self) -> Result<f64> {
        match &self.coupling {
            CouplingSpec::Single(x) => Ok(*x),
            CouplingSpec::Grid(xs) if xs.len() == 1 => Ok(xs[0]),
            CouplingSpec::Grid(xs) => {
                bail!(
                    "a coupling grid of {} values only makes sense for verify; \
                     pick one value for this command",
                    xs.len()
                )
            }
        }
    }

    pub fn build_model(&self, coupling: f64) -> Result<Model> {
        let geometry = build_lattice(LatticeSpec {
            width: self.width,
            depth: self.depth,
        })?;
        let labelling = match &self.labelling {
            LabellingSpec::Named(name) if name == "row-major" => geometry.row_major_labelling(),
            LabellingSpec::Named(name) => bail!("unknown labelling {name:?}; use \"row-major\""),
            LabellingSpec::Order(order) => validate_labelling(&geometry, order)?,
        };
        let unitaries = preset_unitaries(self.depth, self.unitaries.preset());
        let zeros = "0".repeat(2 * self.width);
        let components = match &self.initial_state {
            None => vec![(1.0, basis_initial_state(&geometry, &zeros)?)],
            Some(InitialStateSpec::Basis { bits }) => {
                vec![(1.0, basis_initial_state(&geometry, bits)?)]
            }
            Some(InitialStateSpec::Amplitudes { amplitudes }) => {
                vec![(1.0, amplitude_initial_state(&geometry, complex(amplitudes))?)]
            }
            Some(InitialStateSpec::Mixture { components }) => components
                .iter()
                .map(|c| {
                    let state: SurfaceState = match &c.state {
                        PureComponent::Basis { bits } => basis_initial_state(&geometry, bits)?,
                        PureComponent::Amplitudes { amplitudes } => {
                            amplitude_initial_state(&geometry, complex(amplitudes))?
                        }
                    };
                    Ok((c.weight, state))
                })
                .collect::<Result<Vec<_>>>()?,
        };
        Ok(Model::new(
            geometry,
            labelling,
            unitaries,
            components,
            Coupling::new(coupling)?,
        )?)
    }
}

fn complex(pairs: &[[f64; 2]]) -> Vec<Complex64> {
    pairs.iter().map(|p| Complex64::new(p[0], p[1])).collect()
}
