//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each exported function returns plain numbers or RGBA bytes so the page
//! can paint them straight into an `ImageData`.

use std::f64::consts::PI;

use oam_qkd::optics::{beam_radius, lg_field, BeamParams, GridSpec, ModeIndex};
use oam_qkd::quantum::key_rate_per_photon;
use oam_qkd::seeding::rng_from_seed;
use oam_qkd::turbulence::{generate_phase_screen, TurbulenceProfile};
use wasm_bindgen::prelude::*;

const WAVELENGTH: f64 = 1064e-9;

fn to_js(e: oam_qkd::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn hsv_to_rgb(h: f64, v: f64) -> [u8; 3] {
    let h6 = (h.rem_euclid(1.0)) * 6.0;
    let x = 1.0 - (h6 % 2.0 - 1.0).abs();
    let (r, g, b) = match h6 as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    [r, g, b].map(|c| (255.0 * c * v).round() as u8)
}

/// RGBA image of an LG mode at distance `z_km` from a waist `w0`:
/// brightness is intensity, hue is phase. The window spans five beam
/// radii.
pub fn mode_rgba(l: i32, z_km: f64, w0: f64, size: usize) -> oam_qkd::Result<Vec<u8>> {
    let beam = BeamParams::new(w0, WAVELENGTH)?;
    let z = z_km * 1e3;
    let w = beam_radius(&beam, z);
    let grid = GridSpec::new(size, 5.0 * w / size as f64)?;
    let field = lg_field(ModeIndex::new(l), z, &beam, &grid)?;
    let peak = field.amplitudes().iter().map(|a| a.norm_sqr()).fold(0.0, f64::max);
    let mut out = Vec::with_capacity(4 * grid.len());
    for a in field.amplitudes() {
        let [r, g, b] = hsv_to_rgb(a.arg() / (2.0 * PI), (a.norm_sqr() / peak).sqrt());
        out.extend_from_slice(&[r, g, b, 255]);
    }
    Ok(out)
}

/// Grayscale RGBA image of a von Karman phase screen plus its RMS phase
/// (radians) in the returned tuple.
pub fn screen_rgba(r0: f64, seed: u64, size: usize, delta: f64) -> oam_qkd::Result<(Vec<u8>, f64)> {
    let grid = GridSpec::new(size, delta)?;
    let profile = TurbulenceProfile::reference();
    let screen = generate_phase_screen(r0, &grid, &profile, &mut rng_from_seed(seed));
    let (lo, hi) = screen
        .phases
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| (lo.min(p), hi.max(p)));
    let span = (hi - lo).max(1e-300);
    let mut out = Vec::with_capacity(4 * grid.len());
    for &p in &screen.phases {
        let v = (255.0 * (p - lo) / span).round() as u8;
        out.extend_from_slice(&[v, v, v, 255]);
    }
    Ok((out, screen.variance().sqrt()))
}

/// `[Q0, K1(Q0), Q1, K1(Q1), …]` on `samples` evenly spaced error rates
/// from 0 to `(d−1)/d`.
pub fn key_rate_samples(d: usize, samples: usize) -> oam_qkd::Result<Vec<f64>> {
    let q_max = (d as f64 - 1.0) / d as f64;
    let n = samples.max(2);
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let q = q_max * i as f64 / (n - 1) as f64;
        out.push(q);
        out.push(key_rate_per_photon(q, d)?);
    }
    Ok(out)
}

/// Smallest error rate with zero key, by bisection.
pub fn zero_key_threshold(d: usize) -> oam_qkd::Result<f64> {
    let (mut lo, mut hi) = (0.0, (d as f64 - 1.0) / d as f64);
    key_rate_per_photon(lo, d)?;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if key_rate_per_photon(mid, d)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

#[wasm_bindgen(js_name = modeImage)]
pub fn mode_image(l: i32, z_km: f64, w0: f64, size: usize) -> Result<Vec<u8>, JsError> {
    mode_rgba(l, z_km, w0, size).map_err(to_js)
}

#[wasm_bindgen]
pub struct ScreenImage {
    rgba: Vec<u8>,
    rms: f64,
}

#[wasm_bindgen]
impl ScreenImage {
    #[wasm_bindgen(getter)]
    pub fn rgba(&self) -> Vec<u8> {
        self.rgba.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn rms(&self) -> f64 {
        self.rms
    }
}

#[wasm_bindgen(js_name = phaseScreen)]
pub fn phase_screen(r0: f64, seed: u32, size: usize, delta: f64) -> Result<ScreenImage, JsError> {
    let (rgba, rms) = screen_rgba(r0, u64::from(seed), size, delta).map_err(to_js)?;
    Ok(ScreenImage { rgba, rms })
}

#[wasm_bindgen(js_name = keyRateCurve)]
pub fn key_rate_curve(d: usize, samples: usize) -> Result<Vec<f64>, JsError> {
    key_rate_samples(d, samples).map_err(to_js)
}

#[wasm_bindgen(js_name = keyRateThreshold)]
pub fn key_rate_threshold(d: usize) -> Result<f64, JsError> {
    zero_key_threshold(d).map_err(to_js)
}
