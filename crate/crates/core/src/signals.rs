//! Continuous 1D signals with exact evaluation and exact antiderivatives.
//!
//! A [`Signal`] is a finite expression tree over a handful of analytic
//! primitives. Every node has a closed-form integral, so pixel averages of a
//! signal carry no quadrature error. Products (which only arise inside
//! [`continuous_convolve`]) fall back to adaptive Simpson.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::quadrature;

/// Tolerance used by [`continuous_convolve`].
pub const CONVOLVE_TOL: f64 = 1e-10;

/// Equal panels each breakpoint-free segment is cut into before the adaptive
/// recursion starts, so a narrow bump cannot hide between the first three
/// Simpson nodes.
const CONVOLVE_PANELS: usize = 8;

/// Which side a one-sided limit is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Continuous signal expression tree.
///
/// Construct through the associated functions; invariants (finite
/// parameters, `width > 0`, `lo <= hi`) are checked there and on
/// deserialization, so any `Signal` value is valid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Node", into = "Node")]
pub struct Signal {
    node: Node,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum Node {
    /// 1 for `x > step`, 0 otherwise.
    Heaviside { step: f64 },
    Constant { value: f64 },
    /// `sum_i coefficients[i] * x^i` on the closed interval `support`, 0 outside.
    Polynomial { coefficients: Vec<f64>, support: [f64; 2] },
    /// `amplitude * sin(omega * x + phase)`, `omega` in radians per unit x.
    Sinusoid { amplitude: f64, omega: f64, phase: f64 },
    /// `amplitude * exp(-(x - center)^2 / (2 width^2))`.
    Gaussian { amplitude: f64, center: f64, width: f64 },
    Sum { terms: Vec<Signal> },
    Scale { factor: f64, signal: Box<Signal> },
    /// `signal(x - offset)`.
    Translate { offset: f64, signal: Box<Signal> },
}

impl TryFrom<Node> for Signal {
    type Error = Error;

    fn try_from(node: Node) -> Result<Self> {
        match &node {
            Node::Heaviside { step } => ensure_finite("heaviside step", *step)?,
            Node::Constant { value } => ensure_finite("constant value", *value)?,
            Node::Polynomial { coefficients, support } => {
                for c in coefficients {
                    ensure_finite("polynomial coefficient", *c)?;
                }
                let [lo, hi] = *support;
                ensure_finite("polynomial support", lo)?;
                ensure_finite("polynomial support", hi)?;
                if lo > hi {
                    return Err(Error::domain(format!(
                        "polynomial support [{lo}, {hi}] is reversed"
                    )));
                }
            }
            Node::Sinusoid { amplitude, omega, phase } => {
                ensure_finite("sinusoid amplitude", *amplitude)?;
                ensure_finite("sinusoid omega", *omega)?;
                ensure_finite("sinusoid phase", *phase)?;
            }
            Node::Gaussian { amplitude, center, width } => {
                ensure_finite("gaussian amplitude", *amplitude)?;
                ensure_finite("gaussian center", *center)?;
                ensure_finite("gaussian width", *width)?;
                if *width <= 0.0 {
                    return Err(Error::domain(format!("gaussian width must be > 0, got {width}")));
                }
            }
            Node::Sum { .. } => {}
            Node::Scale { factor, .. } => ensure_finite("scale factor", *factor)?,
            Node::Translate { offset, .. } => ensure_finite("translation offset", *offset)?,
        }
        Ok(Signal { node })
    }
}

impl From<Signal> for Node {
    fn from(s: Signal) -> Node {
        s.node
    }
}

impl Signal {
    pub fn heaviside(step: f64) -> Result<Self> {
        Node::Heaviside { step }.try_into()
    }

    pub fn constant(value: f64) -> Result<Self> {
        Node::Constant { value }.try_into()
    }

    pub fn polynomial(coefficients: Vec<f64>, lo: f64, hi: f64) -> Result<Self> {
        Node::Polynomial { coefficients, support: [lo, hi] }.try_into()
    }

    /// Unit-height box on `[lo, hi]`.
    pub fn boxcar(lo: f64, hi: f64) -> Result<Self> {
        Self::polynomial(vec![1.0], lo, hi)
    }

    pub fn sinusoid(amplitude: f64, omega: f64, phase: f64) -> Result<Self> {
        Node::Sinusoid { amplitude, omega, phase }.try_into()
    }

    pub fn gaussian(amplitude: f64, center: f64, width: f64) -> Result<Self> {
        Node::Gaussian { amplitude, center, width }.try_into()
    }

    pub fn sum(terms: Vec<Signal>) -> Self {
        Signal { node: Node::Sum { terms } }
    }

    pub fn scale(self, factor: f64) -> Result<Self> {
        Node::Scale { factor, signal: Box::new(self) }.try_into()
    }

    /// Moves the signal content by `delta` toward +x: the result evaluates
    /// to `self(x - delta)`.
    pub fn translate(&self, delta: f64) -> Result<Self> {
        Node::Translate { offset: delta, signal: Box::new(self.clone()) }.try_into()
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        ensure_finite("evaluation point", x)?;
        Ok(self.value(x))
    }

    /// One-sided limit of the signal at `x`.
    pub fn eval_limit(&self, x: f64, side: Side) -> Result<f64> {
        ensure_finite("evaluation point", x)?;
        Ok(self.limit(x, side))
    }

    /// Exact integral over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64) -> Result<f64> {
        ensure_finite("lower limit", a)?;
        ensure_finite("upper limit", b)?;
        if a > b {
            return Err(Error::domain(format!("integration bounds reversed: {a} > {b}")));
        }
        Ok(self.antiderivative_diff(a, b))
    }

    /// Locations where the signal may be discontinuous, unsorted.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect_breakpoints(0.0, &mut out);
        out
    }

    fn collect_breakpoints(&self, shift: f64, out: &mut Vec<f64>) {
        match &self.node {
            Node::Heaviside { step } => out.push(step + shift),
            Node::Polynomial { support, .. } => {
                out.push(support[0] + shift);
                out.push(support[1] + shift);
            }
            Node::Sum { terms } => terms.iter().for_each(|t| t.collect_breakpoints(shift, out)),
            Node::Scale { signal, .. } => signal.collect_breakpoints(shift, out),
            Node::Translate { offset, signal } => signal.collect_breakpoints(shift + offset, out),
            Node::Constant { .. } | Node::Sinusoid { .. } | Node::Gaussian { .. } => {}
        }
    }

    pub(crate) fn value(&self, x: f64) -> f64 {
        match &self.node {
            Node::Heaviside { step } => {
                if x > *step {
                    1.0
                } else {
                    0.0
                }
            }
            Node::Constant { value } => *value,
            Node::Polynomial { coefficients, support } => {
                if x < support[0] || x > support[1] {
                    0.0
                } else {
                    horner(coefficients, x)
                }
            }
            Node::Sinusoid { amplitude, omega, phase } => amplitude * (omega * x + phase).sin(),
            Node::Gaussian { amplitude, center, width } => {
                let z = (x - center) / width;
                amplitude * (-0.5 * z * z).exp()
            }
            Node::Sum { terms } => terms.iter().map(|t| t.value(x)).sum(),
            Node::Scale { factor, signal } => factor * signal.value(x),
            Node::Translate { offset, signal } => signal.value(x - offset),
        }
    }

    fn limit(&self, x: f64, side: Side) -> f64 {
        match &self.node {
            Node::Heaviside { step } => match side {
                Side::Left => {
                    if x > *step {
                        1.0
                    } else {
                        0.0
                    }
                }
                Side::Right => {
                    if x >= *step {
                        1.0
                    } else {
                        0.0
                    }
                }
            },
            Node::Polynomial { coefficients, support } => {
                let [lo, hi] = *support;
                let inside = match side {
                    Side::Left => x > lo && x <= hi,
                    Side::Right => x >= lo && x < hi,
                };
                if inside {
                    horner(coefficients, x)
                } else {
                    0.0
                }
            }
            Node::Sum { terms } => terms.iter().map(|t| t.limit(x, side)).sum(),
            Node::Scale { factor, signal } => factor * signal.limit(x, side),
            Node::Translate { offset, signal } => signal.limit(x - offset, side),
            Node::Constant { .. } | Node::Sinusoid { .. } | Node::Gaussian { .. } => self.value(x),
        }
    }

    fn antiderivative_diff(&self, a: f64, b: f64) -> f64 {
        match &self.node {
            Node::Heaviside { step } => {
                if b <= *step {
                    0.0
                } else {
                    b - a.max(*step)
                }
            }
            Node::Constant { value } => value * (b - a),
            Node::Polynomial { coefficients, support } => {
                let lo = a.max(support[0]);
                let hi = b.min(support[1]);
                if lo >= hi {
                    0.0
                } else {
                    poly_antiderivative(coefficients, hi) - poly_antiderivative(coefficients, lo)
                }
            }
            Node::Sinusoid { amplitude, omega, phase } => {
                if *omega == 0.0 {
                    return amplitude * phase.sin() * (b - a);
                }
                // cos(wa + p) - cos(wb + p) as a product of sines, which keeps
                // precision on short intervals.
                let mid = 0.5 * omega * (a + b) + phase;
                let half = 0.5 * omega * (b - a);
                amplitude / omega * 2.0 * mid.sin() * half.sin()
            }
            Node::Gaussian { amplitude, center, width } => {
                let scale = width * std::f64::consts::SQRT_2;
                let ua = (a - center) / scale;
                let ub = (b - center) / scale;
                amplitude * 0.5 * scale * std::f64::consts::PI.sqrt() * erf_diff(ua, ub)
            }
            Node::Sum { terms } => terms.iter().map(|t| t.antiderivative_diff(a, b)).sum(),
            Node::Scale { factor, signal } => factor * signal.antiderivative_diff(a, b),
            Node::Translate { offset, signal } => signal.antiderivative_diff(a - offset, b - offset),
        }
    }
}

fn horner(coefficients: &[f64], x: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn poly_antiderivative(coefficients: &[f64], x: f64) -> f64 {
    coefficients
        .iter()
        .enumerate()
        .rev()
        .fold(0.0, |acc, (i, c)| acc * x + c / (i as f64 + 1.0))
        * x
}

/// `erf(ub) - erf(ua)` for `ua <= ub`, switching to `erfc` when both points
/// sit in the same tail.
fn erf_diff(ua: f64, ub: f64) -> f64 {
    if ua >= 0.0 {
        libm::erfc(ua) - libm::erfc(ub)
    } else if ub <= 0.0 {
        libm::erfc(-ub) - libm::erfc(-ua)
    } else {
        libm::erf(ub) - libm::erf(ua)
    }
}

/// Reference continuous convolution `int a(t) b(x - t) dt` over `window`.
///
/// The integrand is assumed to vanish outside the window; that is the
/// caller's responsibility. Known discontinuities of both operands are split
/// out before adaptive Simpson runs on each smooth piece.
pub fn continuous_convolve(a: &Signal, b: &Signal, x: f64, window: (f64, f64)) -> Result<f64> {
    let (lo, hi) = window;
    ensure_finite("evaluation point", x)?;
    ensure_finite("window start", lo)?;
    ensure_finite("window end", hi)?;
    if lo > hi {
        return Err(Error::domain(format!("convolution window reversed: {lo} > {hi}")));
    }
    if lo == hi {
        return Ok(0.0);
    }

    let mut cuts: Vec<f64> = a
        .breakpoints()
        .into_iter()
        .chain(b.breakpoints().into_iter().map(|p| x - p))
        .filter(|&t| t > lo && t < hi)
        .collect();
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut panels = Vec::with_capacity((cuts.len() - 1) * CONVOLVE_PANELS);
    for w in cuts.windows(2) {
        let (p, q) = (w[0], w[1]);
        let h = (q - p) / CONVOLVE_PANELS as f64;
        for k in 0..CONVOLVE_PANELS {
            let s = if k == 0 { p } else { p + k as f64 * h };
            let e = if k + 1 == CONVOLVE_PANELS { q } else { p + (k + 1) as f64 * h };
            panels.push((s, e, k == 0, k + 1 == CONVOLVE_PANELS));
        }
    }

    let tol = CONVOLVE_TOL / panels.len() as f64;
    let integrand = |t: f64| a.value(t) * b.value(x - t);
    let total = panels
        .into_iter()
        .filter(|(s, e, _, _)| s < e)
        .map(|(s, e, at_cut_start, at_cut_end)| {
            // Segment ends that coincide with a breakpoint take the limit from inside.
            let fs = if at_cut_start {
                a.limit(s, Side::Right) * b.limit(x - s, Side::Left)
            } else {
                integrand(s)
            };
            let fe = if at_cut_end {
                a.limit(e, Side::Left) * b.limit(x - e, Side::Right)
            } else {
                integrand(e)
            };
            quadrature::adaptive_simpson_with_ends(&integrand, s, e, fs, fe, tol, quadrature::MAX_DEPTH)
        })
        .sum();
    Ok(total)
}
