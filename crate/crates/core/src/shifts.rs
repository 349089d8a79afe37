//! Shift operators on discrete signals.
//!
//! Integer shifts move samples by whole pixels. Fractional shifts need an
//! interpolant between gridpoints; three are offered and none of them is
//! canonical. Shift amounts here are in pixels.

use std::f64::consts::PI;
use std::fmt;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::convnet::Boundary;
use crate::error::{ensure_finite, Error, Result};
use crate::sampling::DiscreteSignal;

/// Interpolant used by [`shift_frac`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Two-tap linear interpolation.
    Linear,
    /// Four-tap Catmull-Rom spline.
    Cubic,
    /// Phase ramp on the DFT of the circular extension.
    Fourier,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Linear => "linear",
            Scheme::Cubic => "cubic",
            Scheme::Fourier => "fourier",
        }
    }

    /// Checks that this scheme can run with `boundary`.
    pub fn check_boundary(self, boundary: Boundary) -> Result<()> {
        if self == Scheme::Fourier && boundary != Boundary::Circular {
            return Err(Error::config(format!(
                "fourier shift requires circular boundary, got {boundary}"
            )));
        }
        Ok(())
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `out[j] = in[j - l]`, out-of-range reads resolved by `boundary`.
pub fn shift_int(b: &DiscreteSignal, l: isize, boundary: Boundary) -> DiscreteSignal {
    let out = shift_int_slice(b.samples(), l, boundary);
    b.with_samples(out).expect("shifting preserves length and finiteness")
}

pub(crate) fn shift_int_slice(v: &[f64], l: isize, boundary: Boundary) -> Vec<f64> {
    (0..v.len() as isize).map(|j| boundary.fetch(v, j - l)).collect()
}

/// Shifts by `delta_px` pixels toward higher indices: `out[j]` approximates
/// the interpolant at position `j - delta_px`.
///
/// Whole-pixel shifts take the exact [`shift_int`] path for every scheme.
pub fn shift_frac(
    b: &DiscreteSignal,
    delta_px: f64,
    scheme: Scheme,
    boundary: Boundary,
) -> Result<DiscreteSignal> {
    ensure_finite("shift", delta_px)?;
    scheme.check_boundary(boundary)?;
    if delta_px.fract() == 0.0 && delta_px.abs() < isize::MAX as f64 {
        return Ok(shift_int(b, delta_px as isize, boundary));
    }
    let v = b.samples();
    let out = match scheme {
        Scheme::Linear => linear(v, delta_px, boundary),
        Scheme::Cubic => catmull_rom(v, delta_px, boundary),
        Scheme::Fourier => fourier(v, delta_px),
    };
    b.with_samples(out)
}

/// Splits `j - delta` into its integer cell and the offset within it.
fn cell(j: usize, delta: f64) -> (isize, f64) {
    let p = j as f64 - delta;
    let i0 = p.floor();
    (i0 as isize, p - i0)
}

fn linear(v: &[f64], delta: f64, boundary: Boundary) -> Vec<f64> {
    (0..v.len())
        .map(|j| {
            let (i0, t) = cell(j, delta);
            (1.0 - t) * boundary.fetch(v, i0) + t * boundary.fetch(v, i0 + 1)
        })
        .collect()
}

fn catmull_rom(v: &[f64], delta: f64, boundary: Boundary) -> Vec<f64> {
    (0..v.len())
        .map(|j| {
            let (i0, t) = cell(j, delta);
            let p0 = boundary.fetch(v, i0 - 1);
            let p1 = boundary.fetch(v, i0);
            let p2 = boundary.fetch(v, i0 + 1);
            let p3 = boundary.fetch(v, i0 + 2);
            p1 + 0.5
                * t
                * (p2 - p0 + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + t * (3.0 * (p1 - p2) + p3 - p0)))
        })
        .collect()
}

fn fourier(v: &[f64], delta: f64) -> Vec<f64> {
    let n = v.len();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);

    let mut spectrum: Vec<Complex<f64>> = v.iter().map(|&x| Complex::new(x, 0.0)).collect();
    forward.process(&mut spectrum);

    for (k, bin) in spectrum.iter_mut().enumerate() {
        if 2 * k == n {
            // Nyquist bin: keep only the real part of the ramp so the output
            // stays real.
            *bin *= (PI * delta).cos();
        } else {
            let freq = if 2 * k < n { k as f64 } else { k as f64 - n as f64 };
            let angle = -2.0 * PI * freq * delta / n as f64;
            *bin *= Complex::from_polar(1.0, angle);
        }
    }

    inverse.process(&mut spectrum);
    let scale = 1.0 / n as f64;
    spectrum.into_iter().map(|c| c.re * scale).collect()
}
