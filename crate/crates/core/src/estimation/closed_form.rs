//! Closed-form first-order biases in terms of probe weak values.
//!
//! Both are independent of the true coupling `g0`.

use crate::error::{Error, Result};
use crate::linalg::tol;
use crate::quantum::{probe_weak_values, WeakMeasurementSetup};

/// Bias without postselection,
/// `ε_D t Σ_k r_k Im H′_w Im G_w / (⟨A⟩_i Σ_k r_k Im² G_w)`.
pub fn systematic_error_standard(setup: &WeakMeasurementSetup) -> Result<f64> {
    let mean_a = setup.expectation_a();
    if mean_a.abs() <= tol::STRUCTURAL {
        return Err(Error::UninformativeModel { fisher: 0.0 });
    }
    let w = probe_weak_values(setup)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for ((r, gw), hw) in w.baseline.iter().zip(&w.observable).zip(&w.decoherence) {
        num += r * hw.im * gw.im;
        den += r * gw.im * gw.im;
    }
    if !(den > 0.0) {
        return Err(Error::UninformativeModel { fisher: 0.0 });
    }
    Ok(setup.decoherence_scale() * num / (mean_a * den))
}

/// Bias with postselection,
/// `ε_D t Σ_k r_k Im H′_w Im(A_w G_w) / Σ_k r_k Im²(A_w G_w)`.
///
/// The expression drops the renormalization of the postselected probe, so it
/// is exact at first order only when `Im A_w ⟨G⟩_D = 0`.
pub fn systematic_error_postselected(setup: &WeakMeasurementSetup) -> Result<f64> {
    let aw = setup.weak_value()?;
    let w = probe_weak_values(setup)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for ((r, gw), hw) in w.baseline.iter().zip(&w.observable).zip(&w.decoherence) {
        let x = (aw * gw).im;
        num += r * hw.im * x;
        den += r * x * x;
    }
    if !(den > 0.0) {
        return Err(Error::UninformativeModel { fisher: 0.0 });
    }
    Ok(setup.decoherence_scale() * num / den)
}
