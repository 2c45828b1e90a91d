//! Browser bindings: twist spectra, flat spectra and the fold rule.
//!
//! Each export wraps a plain function returning JSON so the logic is
//! testable off the browser.

use degenlab::charvar::{fuchsian_base, length_spectrum, projectivize, Family};
use degenlab::flat::{flat_length_spectrum_with, Convention, QuadDiffHandle, SquareTiledSurface, SurfaceJson};
use degenlab::rtree::{check_fold_validity, MetricTree};
use degenlab::words::{enumerate_classes, Presentation};
use num_rational::Ratio;
use serde_json::json;
use wasm_bindgen::prelude::*;

const MAX_N: usize = 5;

fn cutoff(n: usize) -> Result<usize, String> {
    if (1..=MAX_N).contains(&n) {
        Ok(n)
    } else {
        Err(format!("class cutoff must be in 1..={MAX_N}"))
    }
}

/// Projectivized translation spectrum of the twist along `a1` at `t`.
pub fn twist_spectrum_json(t: f64, n: usize) -> Result<String, String> {
    let p = Presentation::new(2).map_err(|e| e.to_string())?;
    let c = enumerate_classes(&p, cutoff(n)?);
    let family = Family::twist(fuchsian_base(2).map_err(|e| e.to_string())?, 1);
    let rep = family.sample(t).map_err(|e| e.to_string())?;
    let raw = length_spectrum(&rep, &c);
    let proj = projectivize(&raw).map_err(|e| e.to_string())?;
    let rows: Vec<_> = c
        .classes()
        .iter()
        .enumerate()
        .map(|(i, w)| json!({"class": w.to_string(), "length": raw.values[i], "projective": proj.values[i]}))
        .collect();
    Ok(json!({"t": t, "classes": rows}).to_string())
}

/// Flat lengths of the classes in `C_n` on a marked square-tiled surface
/// given in the JSON wire format.
pub fn flat_spectrum_json(surface: &str, n: usize, convention: &str) -> Result<String, String> {
    let j: SurfaceJson = serde_json::from_str(surface).map_err(|e| e.to_string())?;
    let s = SquareTiledSurface::from_json(&j).map_err(|e| e.to_string())?;
    let conv: Convention = convention.parse()?;
    let c = enumerate_classes(&Presentation::new(s.genus()).map_err(|e| e.to_string())?, cutoff(n)?);
    let q = QuadDiffHandle::new(s.clone(), 1.0).map_err(|e| e.to_string())?;
    let spec = flat_length_spectrum_with(&q, &c, conv).map_err(|e| e.to_string())?;
    let rows: Vec<_> =
        c.classes().iter().zip(&spec.values).map(|(w, v)| json!({"class": w.to_string(), "flat": v})).collect();
    Ok(json!({"genus": s.genus(), "norm": q.norm(), "classes": rows}).to_string())
}

/// Whether folding prongs `i` and `j` at a vertex with `prongs` prongs is
/// allowed.
pub fn fold_allowed(prongs: usize, i: usize, j: usize) -> Result<bool, String> {
    if !(2..=64).contains(&prongs) {
        return Err("prong count must be in 2..=64".into());
    }
    let star = MetricTree::star(&vec![Ratio::from_integer(1); prongs]).map_err(|e| e.to_string())?;
    Ok(check_fold_validity(&star, 0, prongs, &[(i, j)]))
}

#[wasm_bindgen]
pub fn twist_spectrum(t: f64, n: usize) -> Result<String, JsValue> {
    twist_spectrum_json(t, n).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn flat_spectrum(surface: &str, n: usize, convention: &str) -> Result<String, JsValue> {
    flat_spectrum_json(surface, n, convention).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn fold_valid(prongs: usize, i: usize, j: usize) -> Result<bool, JsValue> {
    fold_allowed(prongs, i, j).map_err(|e| JsValue::from_str(&e))
}
