//! Discretization of continuous signals onto uniform pixel grids.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::signals::Signal;

/// Uniform pixel grid. Pixel `j` covers `[x0 + j*dx, x0 + (j+1)*dx]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct Grid {
    x0: f64,
    dx: f64,
    n: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridRepr {
    x0: f64,
    dx: f64,
    n: usize,
}

impl TryFrom<GridRepr> for Grid {
    type Error = Error;

    fn try_from(r: GridRepr) -> Result<Self> {
        Grid::new(r.x0, r.dx, r.n)
    }
}

impl From<Grid> for GridRepr {
    fn from(g: Grid) -> Self {
        GridRepr { x0: g.x0, dx: g.dx, n: g.n }
    }
}

impl Grid {
    pub fn new(x0: f64, dx: f64, n: usize) -> Result<Self> {
        ensure_finite("grid x0", x0)?;
        ensure_finite("grid dx", dx)?;
        if dx <= 0.0 {
            return Err(Error::domain(format!("grid dx must be > 0, got {dx}")));
        }
        if n == 0 {
            return Err(Error::domain("grid needs at least one pixel"));
        }
        Ok(Grid { x0, dx, n })
    }

    /// `n` pixels tiling `[lo, hi]`.
    pub fn over(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("grid needs at least one pixel"));
        }
        Grid::new(lo, (hi - lo) / n as f64, n)
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Left boundary of pixel `j` (`j == n` gives the right domain edge).
    pub fn edge(&self, j: usize) -> f64 {
        self.x0 + j as f64 * self.dx
    }

    pub fn center(&self, j: usize) -> f64 {
        self.x0 + (j as f64 + 0.5) * self.dx
    }
}

/// Pixel values bound to the grid they were taken on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DiscreteRepr", into = "DiscreteRepr")]
pub struct DiscreteSignal {
    grid: Grid,
    samples: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DiscreteRepr {
    x0: f64,
    dx: f64,
    samples: Vec<f64>,
}

impl TryFrom<DiscreteRepr> for DiscreteSignal {
    type Error = Error;

    fn try_from(r: DiscreteRepr) -> Result<Self> {
        let grid = Grid::new(r.x0, r.dx, r.samples.len())?;
        DiscreteSignal::new(grid, r.samples)
    }
}

impl From<DiscreteSignal> for DiscreteRepr {
    fn from(d: DiscreteSignal) -> Self {
        DiscreteRepr { x0: d.grid.x0, dx: d.grid.dx, samples: d.samples }
    }
}

impl DiscreteSignal {
    pub fn new(grid: Grid, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.n {
            return Err(Error::domain(format!(
                "{} samples on a grid of {} pixels",
                samples.len(),
                grid.n
            )));
        }
        if let Some(bad) = samples.iter().find(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite sample {bad}")));
        }
        Ok(DiscreteSignal { grid, samples })
    }

    /// Samples on the unit-spaced grid starting at 0.
    pub fn from_samples(samples: Vec<f64>) -> Result<Self> {
        let grid = Grid::new(0.0, 1.0, samples.len())?;
        DiscreteSignal::new(grid, samples)
    }

    /// Same grid, new values.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        DiscreteSignal::new(self.grid, samples)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

/// Choice of discretization operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Discretizer {
    /// Pixel average: `(1/dx) * integral over the pixel`.
    #[serde(rename = "avg")]
    Average,
    /// Point sample at the pixel center.
    #[serde(rename = "sample")]
    Sample,
}

impl Discretizer {
    pub fn apply(self, s: &Signal, g: &Grid) -> Result<DiscreteSignal> {
        match self {
            Discretizer::Average => discretize_avg(s, g),
            Discretizer::Sample => discretize_sample(s, g),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Discretizer::Average => "avg",
            Discretizer::Sample => "sample",
        }
    }
}

impl fmt::Display for Discretizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn discretize_avg(s: &Signal, g: &Grid) -> Result<DiscreteSignal> {
    let samples = (0..g.n)
        .map(|j| Ok(s.integrate(g.edge(j), g.edge(j + 1))? / g.dx))
        .collect::<Result<Vec<_>>>()?;
    DiscreteSignal::new(*g, samples)
}

pub fn discretize_sample(s: &Signal, g: &Grid) -> Result<DiscreteSignal> {
    let samples = (0..g.n).map(|j| s.eval(g.center(j))).collect::<Result<Vec<_>>>()?;
    DiscreteSignal::new(*g, samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_grid() -> Grid {
        Grid::new(-1.0, 0.5, 4).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(0.0, 0.0, 4).is_err());
        assert!(Grid::new(0.0, -1.0, 4).is_err());
        assert!(Grid::new(0.0, 1.0, 0).is_err());
        assert!(Grid::new(f64::NAN, 1.0, 3).is_err());
        assert_eq!(Grid::over(-1.0, 1.0, 4).unwrap(), step_grid());
    }

    #[test]
    fn step_pixels() {
        let h = Signal::heaviside(0.0).unwrap();
        assert_eq!(discretize_avg(&h, &step_grid()).unwrap().samples(), &[0.0, 0.0, 1.0, 1.0]);
        let shifted = h.translate(0.25).unwrap();
        assert_eq!(
            discretize_avg(&shifted, &step_grid()).unwrap().samples(),
            &[0.0, 0.0, 0.5, 1.0]
        );
        // centers -0.75, -0.25, 0.25, 0.75
        assert_eq!(discretize_sample(&h, &step_grid()).unwrap().samples(), &[0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn constant_signal() {
        let c = Signal::constant(-2.5).unwrap();
        let g = Grid::new(3.0, 0.7, 9).unwrap();
        for d in [Discretizer::Average, Discretizer::Sample] {
            let v = d.apply(&c, &g).unwrap();
            assert!(v.samples().iter().all(|&x| (x + 2.5).abs() < 1e-14), "{d}");
        }
    }

    #[test]
    fn sampling_converges_to_average() {
        let s = Signal::sinusoid(1.0, 3.0, 0.2).unwrap();
        let max_diff = |n| {
            let g = Grid::over(-1.0, 1.0, n).unwrap();
            let a = discretize_avg(&s, &g).unwrap();
            let b = discretize_sample(&s, &g).unwrap();
            a.samples().iter().zip(b.samples()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
        };
        assert!(max_diff(64) < max_diff(16));
    }

    #[test]
    fn discrete_signal_json_shape() {
        let d = DiscreteSignal::new(step_grid(), vec![0.0, 0.0, 0.5, 1.0]).unwrap();
        let v: serde_json::Value = serde_json::to_value(&d).unwrap();
        assert_eq!(v, serde_json::json!({"x0": -1.0, "dx": 0.5, "samples": [0.0, 0.0, 0.5, 1.0]}));
        let back: DiscreteSignal = serde_json::from_value(v).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(DiscreteSignal::new(step_grid(), vec![1.0; 3]).is_err());
        assert!(DiscreteSignal::new(step_grid(), vec![1.0, f64::NAN, 0.0, 0.0]).is_err());
    }
}
