//! Browser bindings for the lattice crate.
//!
//! Three operations, each returning a JSON string so the page needs no
//! generated glue types: a dense functional table for the heatmap, sampled
//! record frequencies against the exact measure, and the check suite.
//! The heavy lifting lives in plain `Result<String, String>` functions so
//! they run in host tests too; the `wasm_bindgen` exports are shims.

use qmlattice::geometry::{build_lattice, LatticeSpec};
use qmlattice::kernel::Coupling;
use qmlattice::model::{basis_initial_state, preset_unitaries, Model, UnitaryPreset};
use qmlattice::sampler::{frequency_summary, sample_ensemble};
use qmlattice::table::{build_table, FunctionalKind};
use qmlattice::verify::{all_passed, run_suite, VerifyOptions};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn text(err: impl std::fmt::Display) -> String {
    err.to_string()
}

fn build_model(width: u32, depth: u32, coupling: f64, unitary_seed: u32) -> Result<Model, String> {
    let geometry = build_lattice(LatticeSpec {
        width: width as usize,
        depth: depth as usize,
    })
    .map_err(text)?;
    let labelling = geometry.row_major_labelling();
    let unitaries = preset_unitaries(
        geometry.depth(),
        UnitaryPreset::Random {
            seed: unitary_seed as u64,
        },
    );
    let state = basis_initial_state(&geometry, &"0".repeat(geometry.num_slots())).map_err(text)?;
    let coupling = Coupling::new(coupling).map_err(text)?;
    Model::pure(geometry, labelling, unitaries, state, coupling).map_err(text)
}

fn table_impl(
    functional: &str,
    extent: u32,
    width: u32,
    depth: u32,
    coupling: f64,
    unitary_seed: u32,
) -> Result<String, String> {
    let kind: FunctionalKind = functional.parse().map_err(text)?;
    let model = build_model(width, depth, coupling, unitary_seed)?;
    let table = build_table(&model, kind, extent as usize).map_err(text)?;
    let mut value = table.to_json();
    value["hermiticity_defect"] = json!(table.hermiticity_defect());
    value["normalization_defect"] = json!(table.normalization_defect());
    Ok(value.to_string())
}

fn frequencies_impl(
    steps: u32,
    trajectories: u32,
    seed: u32,
    width: u32,
    depth: u32,
    coupling: f64,
    unitary_seed: u32,
) -> Result<String, String> {
    let model = build_model(width, depth, coupling, unitary_seed)?;
    let records = sample_ensemble(
        &model,
        steps as usize,
        trajectories as u64,
        seed as u64,
    )
    .map_err(text)?;
    let rows = frequency_summary(&model, &records).map_err(text)?;
    Ok(json!({
        "steps": steps,
        "trajectories": trajectories,
        "seed": seed,
        "rows": rows,
    })
    .to_string())
}

fn checks_impl(
    extent: u32,
    width: u32,
    depth: u32,
    coupling: f64,
    unitary_seed: u32,
) -> Result<String, String> {
    let model = build_model(width, depth, coupling, unitary_seed)?;
    let opts = VerifyOptions {
        extent: extent as usize,
        ..VerifyOptions::default()
    };
    let reports = run_suite(&model, &opts).map_err(text)?;
    Ok(json!({
        "coupling": coupling,
        "extent": extent,
        "all_passed": all_passed(&reports),
        "checks": reports,
    })
    .to_string())
}

/// Dense table of one functional as JSON: labels, complex entries and the
/// hermiticity / normalization defects. `functional` is one of
/// `q, c, qc, qtilde, qe`.
#[wasm_bindgen]
pub fn functional_table(
    functional: &str,
    extent: u32,
    width: u32,
    depth: u32,
    coupling: f64,
    unitary_seed: u32,
) -> Result<String, JsValue> {
    table_impl(functional, extent, width, depth, coupling, unitary_seed)
        .map_err(|e| JsValue::from_str(&e))
}

/// Samples `trajectories` record sequences of `steps` steps and returns the
/// per-outcome counts next to the exact measured distribution.
#[wasm_bindgen]
pub fn sample_frequencies(
    steps: u32,
    trajectories: u32,
    seed: u32,
    width: u32,
    depth: u32,
    coupling: f64,
    unitary_seed: u32,
) -> Result<String, JsValue> {
    frequencies_impl(steps, trajectories, seed, width, depth, coupling, unitary_seed)
        .map_err(|e| JsValue::from_str(&e))
}

/// Runs the built-in identity checks on the chosen model and reports each
/// deviation against its tolerance.
#[wasm_bindgen]
pub fn check_suite(
    extent: u32,
    width: u32,
    depth: u32,
    coupling: f64,
    unitary_seed: u32,
) -> Result<String, JsValue> {
    checks_impl(extent, width, depth, coupling, unitary_seed).map_err(|e| JsValue::from_str(&e))
}
