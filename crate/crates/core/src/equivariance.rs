//! Equivariance residuals, Lipschitz estimates and parameter sweeps.
//!
//! Every residual computes both sides of an equivariance identity on the same
//! grid and reports the Euclidean and max-abs norms of their difference. No
//! `dx` weighting is applied.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convnet::{apply_layer, Boundary, ConvLayer};
use crate::error::{ensure_finite, Error, Result};
use crate::sampling::{DiscreteSignal, Discretizer, Grid};
use crate::shifts::{shift_frac, shift_int, Scheme};
use crate::signals::Signal;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub l2: f64,
    pub linf: f64,
}

impl Norms {
    pub const ZERO: Norms = Norms { l2: 0.0, linf: 0.0 };

    /// Norms of `a - b`.
    pub fn of_difference(a: &[f64], b: &[f64]) -> Norms {
        debug_assert_eq!(a.len(), b.len());
        let (sq, linf) = a.iter().zip(b).fold((0.0_f64, 0.0_f64), |(sq, m), (x, y)| {
            let d = x - y;
            (sq + d * d, m.max(d.abs()))
        });
        Norms { l2: sq.sqrt(), linf }
    }
}

/// One translation or commutation measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualRecord {
    pub n: usize,
    /// Translation in signal units.
    pub delta: f64,
    /// Translation in pixels.
    pub delta_px: f64,
    pub scheme: Scheme,
    pub boundary: Boundary,
    pub discretizer: Discretizer,
    pub l2: f64,
    pub linf: f64,
}

impl ResidualRecord {
    pub fn norms(&self) -> Norms {
        Norms { l2: self.l2, linf: self.linf }
    }
}

/// Residual of the discrete symmetry `layer(shift(b, l)) = shift(layer(b), l)`.
pub fn shift_equiv_residual(layer: &ConvLayer, b: &DiscreteSignal, l: isize) -> Result<Norms> {
    let lhs = apply_layer(layer, &shift_int(b, l, layer.boundary))?;
    let rhs = shift_int(&apply_layer(layer, b)?, l, layer.boundary);
    Ok(Norms::of_difference(lhs.samples(), rhs.samples()))
}

/// Residual of the continuous symmetry: the layer applied to the discretized
/// translated signal, against the layer output shifted by `delta / dx`
/// pixels with `scheme`.
pub fn translation_equiv_residual(
    layer: &ConvLayer,
    s: &Signal,
    grid: &Grid,
    delta: f64,
    scheme: Scheme,
    discretizer: Discretizer,
) -> Result<ResidualRecord> {
    ensure_finite("delta", delta)?;
    scheme.check_boundary(layer.boundary)?;
    let delta_px = delta / grid.dx();
    let lhs = apply_layer(layer, &discretizer.apply(&s.translate(delta)?, grid)?)?;
    let rhs = shift_frac(
        &apply_layer(layer, &discretizer.apply(s, grid)?)?,
        delta_px,
        scheme,
        layer.boundary,
    )?;
    let norms = Norms::of_difference(lhs.samples(), rhs.samples());
    Ok(ResidualRecord {
        n: grid.n(),
        delta,
        delta_px,
        scheme,
        boundary: layer.boundary,
        discretizer,
        l2: norms.l2,
        linf: norms.linf,
    })
}

/// Residual of `discretize(translate(s, delta)) = shift(discretize(s), delta / dx)`.
pub fn discretization_commutation_residual(
    s: &Signal,
    grid: &Grid,
    delta: f64,
    scheme: Scheme,
    boundary: Boundary,
    discretizer: Discretizer,
) -> Result<ResidualRecord> {
    ensure_finite("delta", delta)?;
    scheme.check_boundary(boundary)?;
    let delta_px = delta / grid.dx();
    let lhs = discretizer.apply(&s.translate(delta)?, grid)?;
    let rhs = shift_frac(&discretizer.apply(s, grid)?, delta_px, scheme, boundary)?;
    let norms = Norms::of_difference(lhs.samples(), rhs.samples());
    Ok(ResidualRecord {
        n: grid.n(),
        delta,
        delta_px,
        scheme,
        boundary,
        discretizer,
        l2: norms.l2,
        linf: norms.linf,
    })
}

/// Largest observed `|layer(b + eps u) - layer(b)| / |eps u|` over `trials`
/// seeded random unit directions `u`.
pub fn lipschitz_estimate(
    layer: &ConvLayer,
    b: &DiscreteSignal,
    trials: usize,
    eps: f64,
    seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::domain("lipschitz estimate needs at least one trial"));
    }
    ensure_finite("eps", eps)?;
    if eps <= 0.0 {
        return Err(Error::domain(format!("eps must be > 0, got {eps}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = apply_layer(layer, b)?;
    let mut best = 0.0_f64;
    for _ in 0..trials {
        let u = random_unit(&mut rng, b.len());
        let perturbed: Vec<f64> = b.samples().iter().zip(&u).map(|(x, d)| x + eps * d).collect();
        let out = apply_layer(layer, &b.with_samples(perturbed.clone())?)?;
        let num = Norms::of_difference(out.samples(), base.samples()).l2;
        let den = Norms::of_difference(&perturbed, b.samples()).l2;
        if den > 0.0 {
            best = best.max(num / den);
        }
    }
    Ok(best)
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// A translation amount, either absolute or relative to each grid's pixel width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Delta {
    /// Signal units.
    Absolute(f64),
    /// Pixels of whichever grid the row uses.
    Pixels { px: f64 },
}

impl Delta {
    pub fn resolve(self, grid: &Grid) -> f64 {
        match self {
            Delta::Absolute(d) => d,
            Delta::Pixels { px } => px * grid.dx(),
        }
    }
}

/// Cartesian product of everything a translation sweep varies.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub signals: Vec<Signal>,
    pub layers: Vec<ConvLayer>,
    pub grids: Vec<Grid>,
    pub deltas: Vec<Delta>,
    pub schemes: Vec<Scheme>,
    pub discretizers: Vec<Discretizer>,
}

/// One sweep row. Skipped rows carry no norms and say why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Index into `SweepSpec::signals`.
    pub signal: usize,
    /// Index into `SweepSpec::layers`.
    pub layer: usize,
    /// Index into `SweepSpec::grids`.
    pub grid: usize,
    /// Index into `SweepSpec::deltas`.
    pub delta_index: usize,
    pub n: usize,
    pub delta: f64,
    pub delta_px: f64,
    pub scheme: Scheme,
    pub boundary: Boundary,
    pub discretizer: Discretizer,
    pub l2: Option<f64>,
    pub linf: Option<f64>,
    pub skipped: bool,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    signal: usize,
    layer: usize,
    grid: usize,
    delta: usize,
    scheme: usize,
    discretizer: usize,
}

impl SweepSpec {
    pub fn len(&self) -> usize {
        self.signals.len()
            * self.layers.len()
            * self.grids.len()
            * self.deltas.len()
            * self.schemes.len()
            * self.discretizers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cells in config order; the last axis varies fastest.
    fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::with_capacity(self.len());
        for signal in 0..self.signals.len() {
            for layer in 0..self.layers.len() {
                for grid in 0..self.grids.len() {
                    for delta in 0..self.deltas.len() {
                        for scheme in 0..self.schemes.len() {
                            for discretizer in 0..self.discretizers.len() {
                                out.push(Cell { signal, layer, grid, delta, scheme, discretizer });
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn evaluate(&self, c: Cell) -> Result<SweepRow> {
        let layer = &self.layers[c.layer];
        let grid = &self.grids[c.grid];
        let scheme = self.schemes[c.scheme];
        let discretizer = self.discretizers[c.discretizer];
        let delta = self.deltas[c.delta].resolve(grid);
        let mut row = SweepRow {
            signal: c.signal,
            layer: c.layer,
            grid: c.grid,
            delta_index: c.delta,
            n: grid.n(),
            delta,
            delta_px: delta / grid.dx(),
            scheme,
            boundary: layer.boundary,
            discretizer,
            l2: None,
            linf: None,
            skipped: false,
            reason: None,
        };
        match translation_equiv_residual(layer, &self.signals[c.signal], grid, delta, scheme, discretizer) {
            Ok(rec) => {
                row.l2 = Some(rec.l2);
                row.linf = Some(rec.linf);
            }
            Err(Error::Config(reason)) => {
                row.skipped = true;
                row.reason = Some(reason);
            }
            Err(e) => return Err(e),
        }
        Ok(row)
    }
}

/// Runs the sweep on the global rayon pool.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.cells().into_par_iter().map(|c| spec.evaluate(c)).collect()
}

/// Runs the sweep on a dedicated pool of `threads` workers (0 = rayon's default).
pub fn sweep_with_threads(spec: &SweepSpec, threads: usize) -> Result<Vec<SweepRow>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config(format!("cannot build thread pool: {e}")))?;
    pool.install(|| sweep(spec))
}

pub const CSV_HEADER: [&str; 10] =
    ["n", "delta", "delta_px", "scheme", "boundary", "discretizer", "l2", "linf", "skipped", "reason"];

/// Writes rows as CSV. Floats use shortest round-trip formatting.
pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.delta.to_string(),
            r.delta_px.to_string(),
            r.scheme.to_string(),
            r.boundary.to_string(),
            r.discretizer.to_string(),
            opt(r.l2),
            opt(r.linf),
            r.skipped.to_string(),
            r.reason.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()
}
