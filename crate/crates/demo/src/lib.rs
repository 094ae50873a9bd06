//! WebAssembly bindings for the static page in `www/`.
//!
//! Every export returns a flat `Float64Array`: first the abscissae, then the
//! values, both of the same length.

// `!(x > 0.0)` is used on purpose so that NaN fails the check too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::sync::Arc;

use neckpinch_core::bryant::{solve_bryant, BryantProfile};
use neckpinch_core::numerics::linspace;
use neckpinch_core::regions::{intermediate_profile, matching_constants, BlendConfig, CompositeModel};
use wasm_bindgen::prelude::*;

thread_local! {
    static SOLITONS: RefCell<BTreeMap<usize, Arc<BryantProfile>>> = const { RefCell::new(BTreeMap::new()) };
}

fn soliton(n: usize) -> Result<Arc<BryantProfile>, String> {
    if let Some(b) = SOLITONS.with(|c| c.borrow().get(&n).cloned()) {
        return Ok(b);
    }
    let b = Arc::new(solve_bryant(n, 1e-10).map_err(|e| e.to_string())?);
    SOLITONS.with(|c| c.borrow_mut().insert(n, b.clone()));
    Ok(b)
}

fn flat(x: Vec<f64>, y: Vec<f64>) -> Vec<f64> {
    let mut out = x;
    out.extend(y);
    out
}

/// `B(r)` on `points` uniform radii in `[0, r_max]`.
pub fn bryant_curve(n: usize, r_max: f64, points: usize) -> Result<Vec<f64>, String> {
    if !(r_max > 0.0) || points < 2 {
        return Err(format!("need r_max > 0 and at least two points, got {r_max} and {points}"));
    }
    let b = soliton(n)?;
    let r = linspace(0.0, r_max, points);
    let v = r.iter().map(|x| b.eval(*x)).collect();
    Ok(flat(r, v))
}

/// `ψ(s)` of the composite formal solution at `τ`, with `T = 0`.
pub fn composite_curve(n: usize, k: usize, c: f64, tau: f64, nodes: usize) -> Result<Vec<f64>, String> {
    let mc = matching_constants(n, k, c).map_err(|e| e.to_string())?;
    let model = CompositeModel::new(mc, 0.0, BlendConfig::default(), soliton(n)?).map_err(|e| e.to_string())?;
    let p = model.sample(model.time_at(tau), nodes).map_err(|e| e.to_string())?;
    Ok(flat(p.s, p.psi))
}

/// `W̃(ρ) = √(1 - (ρ/c)^k)` on `ρ ∈ [0, c]`.
pub fn intermediate_curve(c: f64, k: usize, points: usize) -> Result<Vec<f64>, String> {
    if points < 2 {
        return Err("need at least two points".into());
    }
    let rho = linspace(0.0, c, points);
    let w =
        rho.iter().map(|r| intermediate_profile(*r, c, k)).collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
    Ok(flat(rho, w))
}

#[wasm_bindgen]
pub fn bryant(n: usize, r_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    bryant_curve(n, r_max, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn composite(n: usize, k: usize, c: f64, tau: f64, nodes: usize) -> Result<Vec<f64>, JsError> {
    composite_curve(n, k, c, tau, nodes).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn intermediate(c: f64, k: usize, points: usize) -> Result<Vec<f64>, JsError> {
    intermediate_curve(c, k, points).map_err(|e| JsError::new(&e))
}
