//! Discrete convolution and the single convolutional layer built on it.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::sampling::DiscreteSignal;

/// How indices outside `0..n` are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// `000|abcd|000`
    Zero,
    /// `bcd|abcd|abc`
    Circular,
    /// Half-sample symmetric: `cba|abcd|dcb`
    Reflect,
}

impl Boundary {
    /// Maps a possibly out-of-range index to a sample index, or `None` when
    /// the value there is zero.
    #[inline]
    pub fn resolve(self, i: isize, n: usize) -> Option<usize> {
        let n = n as isize;
        if (0..n).contains(&i) {
            return Some(i as usize);
        }
        match self {
            Boundary::Zero => None,
            Boundary::Circular => Some(i.rem_euclid(n) as usize),
            Boundary::Reflect => {
                let m = i.rem_euclid(2 * n);
                Some(if m < n { m } else { 2 * n - 1 - m } as usize)
            }
        }
    }

    /// Value of `v` at index `i` under this boundary rule.
    #[inline]
    pub fn fetch(self, v: &[f64], i: isize) -> f64 {
        self.resolve(i, v.len()).map_or(0.0, |k| v[k])
    }

    pub fn name(self) -> &'static str {
        match self {
            Boundary::Zero => "zero",
            Boundary::Circular => "circular",
            Boundary::Reflect => "reflect",
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Convolution taps with an explicit alignment.
///
/// `out[j] = sum_i taps[i] * in[j - (i - origin)]`, so `taps[origin]` multiplies
/// `in[j]` and lower tap indices reach to the right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelRepr", into = "KernelRepr")]
pub struct Kernel {
    taps: Vec<f64>,
    origin: usize,
}

#[derive(Serialize, Deserialize)]
struct KernelRepr {
    taps: Vec<f64>,
    origin: usize,
}

impl TryFrom<KernelRepr> for Kernel {
    type Error = Error;

    fn try_from(r: KernelRepr) -> Result<Self> {
        Kernel::new(r.taps, r.origin)
    }
}

impl From<Kernel> for KernelRepr {
    fn from(k: Kernel) -> Self {
        KernelRepr { taps: k.taps, origin: k.origin }
    }
}

impl Kernel {
    pub fn new(taps: Vec<f64>, origin: usize) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::domain("kernel needs at least one tap"));
        }
        if origin >= taps.len() {
            return Err(Error::domain(format!(
                "kernel origin {origin} out of range for {} taps",
                taps.len()
            )));
        }
        for t in &taps {
            ensure_finite("kernel tap", *t)?;
        }
        Ok(Kernel { taps, origin })
    }

    /// Single unit tap.
    pub fn delta() -> Self {
        Kernel { taps: vec![1.0], origin: 0 }
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn origin(&self) -> usize {
        self.origin
    }

    /// Sum of absolute tap values, an upper bound on the operator 2-norm of
    /// circular and zero-padded convolution.
    pub fn l1_norm(&self) -> f64 {
        self.taps.iter().map(|t| t.abs()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nonlinearity {
    Identity,
    Relu,
    Tanh,
}

impl Nonlinearity {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Nonlinearity::Identity => x,
            Nonlinearity::Relu => x.max(0.0),
            Nonlinearity::Tanh => x.tanh(),
        }
    }
}

/// `nonlinearity(conv(kernel, input) + bias)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvLayer {
    #[serde(flatten)]
    pub kernel: Kernel,
    pub bias: f64,
    pub nonlinearity: Nonlinearity,
    pub boundary: Boundary,
}

impl ConvLayer {
    pub fn new(kernel: Kernel, bias: f64, nonlinearity: Nonlinearity, boundary: Boundary) -> Self {
        ConvLayer { kernel, bias, nonlinearity, boundary }
    }

    /// Edge detector from the worked step example: `relu(2 b[j+1] - 2 b[j] - 1)`
    /// with zero padding.
    pub fn edge_detector() -> Self {
        ConvLayer {
            kernel: Kernel { taps: vec![2.0, -2.0], origin: 1 },
            bias: -1.0,
            nonlinearity: Nonlinearity::Relu,
            boundary: Boundary::Zero,
        }
    }

    pub fn apply(&self, input: &DiscreteSignal) -> Result<DiscreteSignal> {
        apply_layer(self, input)
    }
}

pub fn convolve(kernel: &Kernel, input: &DiscreteSignal, boundary: Boundary) -> Result<DiscreteSignal> {
    if input.is_empty() {
        return Err(Error::domain("cannot convolve an empty signal"));
    }
    let out = convolve_slice(kernel, input.samples(), boundary);
    input.with_samples(out)
}

pub(crate) fn convolve_slice(kernel: &Kernel, v: &[f64], boundary: Boundary) -> Vec<f64> {
    let origin = kernel.origin as isize;
    (0..v.len() as isize)
        .map(|j| {
            kernel
                .taps
                .iter()
                .enumerate()
                .map(|(i, t)| t * boundary.fetch(v, j - (i as isize - origin)))
                .sum()
        })
        .collect()
}

pub fn apply_layer(layer: &ConvLayer, input: &DiscreteSignal) -> Result<DiscreteSignal> {
    if input.is_empty() {
        return Err(Error::domain("cannot apply a layer to an empty signal"));
    }
    let out = convolve_slice(&layer.kernel, input.samples(), layer.boundary)
        .into_iter()
        .map(|y| layer.nonlinearity.apply(y + layer.bias))
        .collect();
    input.with_samples(out)
}
