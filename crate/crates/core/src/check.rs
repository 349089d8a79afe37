//! Seeded self-check: runs the invariant suite of every module and reports
//! one line per property.
//!
//! Each property gets its own RNG stream derived from the seed and its
//! position in the suite, so the report is a pure function of the seed.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::convnet::{apply_layer, convolve, Boundary, ConvLayer, Kernel, Nonlinearity};
use crate::equivariance::{
    discretization_commutation_residual, lipschitz_estimate, shift_equiv_residual, sweep,
    translation_equiv_residual, write_csv, Delta, Norms, SweepRow, SweepSpec,
};
use crate::error::Result;
use crate::sampling::{discretize_avg, DiscreteSignal, Discretizer, Grid};
use crate::shifts::{shift_frac, shift_int, Scheme};
use crate::signals::{Side, Signal};

/// Deliberate defects used to prove the suite can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Circular padding silently behaves like zero padding.
    BrokenCircular,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CheckOptions {
    pub seed: u64,
    pub fault: Option<Fault>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub module: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Outcome {
    pub fn id(&self) -> String {
        format!("{}/{}", self.module, self.name)
    }
}

type PropResult = std::result::Result<String, String>;

struct Ctx {
    rng: ChaCha8Rng,
    fault: Option<Fault>,
}

impl Ctx {
    fn apply(&self, layer: &ConvLayer, b: &DiscreteSignal) -> Result<DiscreteSignal> {
        match (self.fault, layer.boundary) {
            (Some(Fault::BrokenCircular), Boundary::Circular) => {
                let broken = ConvLayer { boundary: Boundary::Zero, ..layer.clone() };
                apply_layer(&broken, b)
            }
            _ => apply_layer(layer, b),
        }
    }

    fn shift_residual(&self, layer: &ConvLayer, b: &DiscreteSignal, l: isize) -> Result<Norms> {
        if self.fault.is_none() {
            return shift_equiv_residual(layer, b, l);
        }
        let lhs = self.apply(layer, &shift_int(b, l, layer.boundary))?;
        let rhs = shift_int(&self.apply(layer, b)?, l, layer.boundary);
        Ok(Norms::of_difference(lhs.samples(), rhs.samples()))
    }
}

struct Property {
    module: &'static str,
    name: &'static str,
    run: fn(&mut Ctx) -> PropResult,
}

const PROPERTIES: &[Property] = &[
    Property { module: "signals", name: "translation_exactness", run: translation_exactness },
    Property { module: "signals", name: "translation_composition", run: translation_composition },
    Property { module: "signals", name: "integrate_linearity", run: integrate_linearity },
    Property { module: "signals", name: "integrate_additivity", run: integrate_additivity },
    Property { module: "sampling", name: "integer_shift_commutation", run: integer_shift_commutation },
    Property { module: "sampling", name: "discretize_linearity", run: discretize_linearity },
    Property { module: "sampling", name: "range_preservation", run: range_preservation },
    Property { module: "convnet", name: "convolve_matches_oracle", run: convolve_matches_oracle },
    Property { module: "convnet", name: "circular_shift_equivariance", run: circular_shift_equivariance },
    Property { module: "convnet", name: "convolve_linearity", run: convolve_linearity },
    Property { module: "convnet", name: "nonlinearity_commutes_with_rotation", run: nonlinearity_rotation },
    Property { module: "shifts", name: "integer_reduction", run: integer_reduction },
    Property { module: "shifts", name: "fourier_composition", run: fourier_composition },
    Property { module: "shifts", name: "fourier_commutes_with_convolution", run: fourier_commutes },
    Property { module: "shifts", name: "no_scheme_commutes_with_discretization", run: no_scheme_commutes },
    Property { module: "equivariance", name: "circular_integer_residual_zero", run: circular_residual_zero },
    Property { module: "equivariance", name: "relabel_invariance", run: relabel_invariance },
    Property { module: "equivariance", name: "nonlinearity_breaks_symmetry", run: nonlinearity_isolation },
    Property { module: "equivariance", name: "record_norm_bounds", run: record_norm_bounds },
    Property { module: "equivariance", name: "lipschitz_l1_bound", run: lipschitz_bound },
    Property { module: "cli", name: "csv_json_agree", run: csv_json_agree },
];

pub fn run_checks(opts: CheckOptions) -> Vec<Outcome> {
    PROPERTIES
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let stream = opts.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64);
            let mut ctx = Ctx { rng: ChaCha8Rng::seed_from_u64(stream), fault: opts.fault };
            let (passed, detail) = match (p.run)(&mut ctx) {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            Outcome { module: p.module, name: p.name, passed, detail }
        })
        .collect()
}

pub fn render_report(seed: u64, outcomes: &[Outcome]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "equivprobe check, seed {seed}");
    for o in outcomes {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(s, "{tag} {}: {}", o.id(), o.detail);
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    let _ = writeln!(s, "{} passed, {} failed", outcomes.len() - failed, failed);
    s
}

fn fail<T>(msg: String) -> std::result::Result<T, String> {
    Err(msg)
}

fn lib<T>(r: Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

// generators

fn random_primitive(rng: &mut ChaCha8Rng) -> Signal {
    match rng.gen_range(0..5) {
        0 => Signal::heaviside(rng.gen_range(-1.0..1.0)).unwrap(),
        1 => Signal::constant(rng.gen_range(-2.0..2.0)).unwrap(),
        2 => {
            let deg = rng.gen_range(0..4);
            let coeffs = (0..=deg).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lo = rng.gen_range(-1.5..0.5);
            let hi = lo + rng.gen_range(0.0..1.5);
            Signal::polynomial(coeffs, lo, hi).unwrap()
        }
        3 => Signal::sinusoid(rng.gen_range(-2.0..2.0), rng.gen_range(-8.0..8.0), rng.gen_range(-PI..PI))
            .unwrap(),
        _ => Signal::gaussian(rng.gen_range(-2.0..2.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.05..1.0))
            .unwrap(),
    }
}

fn random_signal(rng: &mut ChaCha8Rng) -> Signal {
    let terms = (0..rng.gen_range(1..4)).map(|_| random_primitive(rng)).collect();
    let s = Signal::sum(terms);
    if rng.gen_bool(0.5) {
        s.translate(rng.gen_range(-0.5..0.5)).unwrap()
    } else {
        s
    }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn random_kernel(rng: &mut ChaCha8Rng) -> Kernel {
    let len = rng.gen_range(1..6);
    Kernel::new(random_vec(rng, len).into_iter().map(|t| 2.0 * t).collect(), rng.gen_range(0..len)).unwrap()
}

fn random_nonlinearity(rng: &mut ChaCha8Rng) -> Nonlinearity {
    [Nonlinearity::Identity, Nonlinearity::Relu, Nonlinearity::Tanh][rng.gen_range(0..3)]
}

fn random_layer(rng: &mut ChaCha8Rng, boundary: Boundary) -> ConvLayer {
    ConvLayer::new(random_kernel(rng), rng.gen_range(-1.0..1.0), random_nonlinearity(rng), boundary)
}

fn random_boundary(rng: &mut ChaCha8Rng) -> Boundary {
    [Boundary::Zero, Boundary::Circular, Boundary::Reflect][rng.gen_range(0..3)]
}

fn random_grid(rng: &mut ChaCha8Rng) -> Grid {
    Grid::new(rng.gen_range(-1.5..-0.5), rng.gen_range(0.05..0.5), rng.gen_range(1..24)).unwrap()
}

/// Sum of sinusoids that complete whole cycles over `[lo, lo + len]` and
/// stay below the Nyquist rate of `n` pixels.
fn periodic_sinusoids(rng: &mut ChaCha8Rng, len: f64, n: usize) -> Signal {
    let max_k = (n - 1) / 2;
    let terms = (0..rng.gen_range(1..4))
        .map(|_| {
            let k = rng.gen_range(1..=max_k) as f64;
            Signal::sinusoid(rng.gen_range(-1.0..1.0), 2.0 * PI * k / len, rng.gen_range(-PI..PI)).unwrap()
        })
        .collect();
    Signal::sum(terms)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    Norms::of_difference(a, b).linf
}

/// Brute-force convolution with the boundary rules spelled out case by case.
pub(crate) fn oracle_convolve(taps: &[f64], origin: usize, v: &[f64], boundary: Boundary) -> Vec<f64> {
    let n = v.len() as i64;
    let mut out = vec![0.0; v.len()];
    for (j, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (i, t) in taps.iter().enumerate() {
            let mut idx = j as i64 - i as i64 + origin as i64;
            let value = match boundary {
                Boundary::Zero => {
                    if idx < 0 || idx >= n {
                        0.0
                    } else {
                        v[idx as usize]
                    }
                }
                Boundary::Circular => {
                    while idx < 0 {
                        idx += n;
                    }
                    while idx >= n {
                        idx -= n;
                    }
                    v[idx as usize]
                }
                Boundary::Reflect => {
                    loop {
                        if idx < 0 {
                            idx = -idx - 1;
                        } else if idx >= n {
                            idx = 2 * n - idx - 1;
                        } else {
                            break;
                        }
                    }
                    v[idx as usize]
                }
            };
            acc += t * value;
        }
        *o = acc;
    }
    out
}

// signals

fn translation_exactness(ctx: &mut Ctx) -> PropResult {
    let cases = 500;
    for c in 0..cases {
        let s = random_signal(&mut ctx.rng);
        let x = ctx.rng.gen_range(-3.0..3.0);
        let d = ctx.rng.gen_range(-2.0..2.0);
        let lhs = lib(lib(s.translate(d))?.eval(x))?;
        let rhs = lib(s.eval(x - d))?;
        if lhs.to_bits() != rhs.to_bits() {
            return fail(format!("case {c}: {lhs} != {rhs} at x={x}, delta={d}"));
        }
    }
    Ok(format!("{cases} cases, bitwise"))
}

fn translation_composition(ctx: &mut Ctx) -> PropResult {
    let cases = 50;
    for c in 0..cases {
        let s = random_signal(&mut ctx.rng);
        let a = ctx.rng.gen_range(-1.0..1.0);
        let b = ctx.rng.gen_range(-1.0..1.0);
        let twice = lib(lib(s.translate(a))?.translate(b))?;
        let once = lib(s.translate(a + b))?;
        for _ in 0..20 {
            let x = ctx.rng.gen_range(-3.0..3.0);
            let (u, v) = (lib(twice.eval(x))?, lib(once.eval(x))?);
            if (u - v).abs() > 1e-12 {
                return fail(format!("case {c}: {u} vs {v} at x={x}"));
            }
        }
    }
    Ok(format!("{} points, tol 1e-12", cases * 20))
}

fn integrate_linearity(ctx: &mut Ctx) -> PropResult {
    let cases = 300;
    for c in 0..cases {
        let s1 = random_signal(&mut ctx.rng);
        let s2 = random_signal(&mut ctx.rng);
        let a = ctx.rng.gen_range(-2.0..1.0);
        let b = a + ctx.rng.gen_range(0.0..1.0);
        let sum = Signal::sum(vec![s1.clone(), s2.clone()]);
        let lhs = lib(sum.integrate(a, b))?;
        let rhs = lib(s1.integrate(a, b))? + lib(s2.integrate(a, b))?;
        if (lhs - rhs).abs() > 1e-13 {
            return fail(format!("case {c}: {lhs} vs {rhs}"));
        }
    }
    Ok(format!("{cases} cases, tol 1e-13"))
}

fn integrate_additivity(ctx: &mut Ctx) -> PropResult {
    let cases = 300;
    for c in 0..cases {
        let s = random_signal(&mut ctx.rng);
        let mut p = [ctx.rng.gen_range(-2.0..2.0), ctx.rng.gen_range(-2.0..2.0), ctx.rng.gen_range(-2.0..2.0)];
        p.sort_by(f64::total_cmp);
        let whole = lib(s.integrate(p[0], p[2]))?;
        let parts = lib(s.integrate(p[0], p[1]))? + lib(s.integrate(p[1], p[2]))?;
        if (whole - parts).abs() > 1e-12 {
            return fail(format!("case {c}: {whole} vs {parts}"));
        }
    }
    Ok(format!("{cases} cases, tol 1e-12"))
}

// sampling

fn integer_shift_commutation(ctx: &mut Ctx) -> PropResult {
    let cases = 100;
    for c in 0..cases {
        let s = random_signal(&mut ctx.rng);
        let g = random_grid(&mut ctx.rng);
        if g.n() < 2 {
            continue;
        }
        let m = ctx.rng.gen_range(1..g.n());
        let base = lib(discretize_avg(&s, &g))?;
        let moved = lib(discretize_avg(&lib(s.translate(m as f64 * g.dx()))?, &g))?;
        for j in m..g.n() {
            let (u, v) = (moved.samples()[j], base.samples()[j - m]);
            if (u - v).abs() > 1e-13 {
                return fail(format!("case {c}: pixel {j}, shift {m}: {u} vs {v}"));
            }
        }
    }
    Ok(format!("{cases} cases, tol 1e-13"))
}

fn discretize_linearity(ctx: &mut Ctx) -> PropResult {
    let cases = 100;
    for c in 0..cases {
        let s1 = random_signal(&mut ctx.rng);
        let s2 = random_signal(&mut ctx.rng);
        let g = random_grid(&mut ctx.rng);
        for d in [Discretizer::Average, Discretizer::Sample] {
            let sum = lib(d.apply(&Signal::sum(vec![s1.clone(), s2.clone()]), &g))?;
            let a = lib(d.apply(&s1, &g))?;
            let b = lib(d.apply(&s2, &g))?;
            let parts: Vec<f64> = a.samples().iter().zip(b.samples()).map(|(x, y)| x + y).collect();
            let err = max_abs_diff(sum.samples(), &parts);
            if err > 1e-13 {
                return fail(format!("case {c} ({d}): max diff {err:e}"));
            }
        }
    }
    Ok(format!("{cases} cases x 2 discretizers, tol 1e-13"))
}

fn range_preservation(ctx: &mut Ctx) -> PropResult {
    let cases = 100;
    for c in 0..cases {
        // Monotone on every pixel: a step or a ramp.
        let s = if ctx.rng.gen_bool(0.5) {
            lib(Signal::heaviside(ctx.rng.gen_range(-1.0..1.0)))?
                .scale(ctx.rng.gen_range(-2.0..2.0))
                .map_err(|e| e.to_string())?
        } else {
            lib(Signal::polynomial(
                vec![ctx.rng.gen_range(-1.0..1.0), ctx.rng.gen_range(-3.0..3.0)],
                -10.0,
                10.0,
            ))?
        };
        let g = random_grid(&mut ctx.rng);
        let v = lib(discretize_avg(&s, &g))?;
        for j in 0..g.n() {
            let a = lib(s.eval_limit(g.edge(j), Side::Right))?;
            let b = lib(s.eval_limit(g.edge(j + 1), Side::Left))?;
            let (lo, hi) = (a.min(b), a.max(b));
            let x = v.samples()[j];
            if x < lo - 1e-14 || x > hi + 1e-14 {
                return fail(format!("case {c}: pixel {j} = {x} outside [{lo}, {hi}]"));
            }
        }
    }
    Ok(format!("{cases} cases"))
}

// convnet

fn convolve_matches_oracle(ctx: &mut Ctx) -> PropResult {
    let cases = 200;
    for c in 0..cases {
        let k = random_kernel(&mut ctx.rng);
        let n = ctx.rng.gen_range(1..=32);
        let v = random_vec(&mut ctx.rng, n);
        let boundary = random_boundary(&mut ctx.rng);
        let layer = ConvLayer::new(k.clone(), 0.0, Nonlinearity::Identity, boundary);
        let got = lib(ctx.apply(&layer, &lib(DiscreteSignal::from_samples(v.clone()))?))?;
        let want = oracle_convolve(k.taps(), k.origin(), &v, boundary);
        let err = max_abs_diff(got.samples(), &want);
        if err > 1e-12 {
            return fail(format!("case {c} ({boundary}, n={n}): max diff {err:e}"));
        }
    }
    Ok(format!("{cases} cases, tol 1e-12"))
}

fn circular_shift_equivariance(ctx: &mut Ctx) -> PropResult {
    let mut cases = 0;
    for n in 1..=8usize {
        for _ in 0..10 {
            let layer = random_layer(&mut ctx.rng, Boundary::Circular);
            let b = lib(DiscreteSignal::from_samples(random_vec(&mut ctx.rng, n)))?;
            for l in 0..n as isize {
                let lhs = lib(ctx.apply(&layer, &shift_int(&b, l, Boundary::Circular)))?;
                let rhs = shift_int(&lib(ctx.apply(&layer, &b))?, l, Boundary::Circular);
                if lhs.samples() != rhs.samples() {
                    return fail(format!("n={n}, l={l}: layer(shift(b)) != shift(layer(b))"));
                }
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} cases, bitwise"))
}

fn convolve_linearity(ctx: &mut Ctx) -> PropResult {
    let cases = 200;
    for c in 0..cases {
        let k = random_kernel(&mut ctx.rng);
        let n = ctx.rng.gen_range(1..=32);
        let boundary = random_boundary(&mut ctx.rng);
        let b1 = random_vec(&mut ctx.rng, n);
        let b2 = random_vec(&mut ctx.rng, n);
        let (alpha, beta) = (ctx.rng.gen_range(-2.0..2.0), ctx.rng.gen_range(-2.0..2.0));
        let mix: Vec<f64> = b1.iter().zip(&b2).map(|(x, y)| alpha * x + beta * y).collect();
        let conv = |v: Vec<f64>| -> std::result::Result<Vec<f64>, String> {
            Ok(lib(convolve(&k, &lib(DiscreteSignal::from_samples(v))?, boundary))?.into_samples())
        };
        let lhs = conv(mix)?;
        let rhs: Vec<f64> = conv(b1)?.iter().zip(conv(b2)?).map(|(x, y)| alpha * x + beta * y).collect();
        let err = max_abs_diff(&lhs, &rhs);
        if err > 1e-12 {
            return fail(format!("case {c}: max diff {err:e}"));
        }
    }
    Ok(format!("{cases} cases, tol 1e-12"))
}

fn nonlinearity_rotation(ctx: &mut Ctx) -> PropResult {
    let cases = 100;
    for c in 0..cases {
        let n = ctx.rng.gen_range(1..=16);
        let v = lib(DiscreteSignal::from_samples(random_vec(&mut ctx.rng, n)))?;
        let l = ctx.rng.gen_range(-20..20);
        for f in [Nonlinearity::Identity, Nonlinearity::Relu, Nonlinearity::Tanh] {
            let map = |d: &DiscreteSignal| -> Vec<f64> { d.samples().iter().map(|&x| f.apply(x)).collect() };
            let lhs = map(&shift_int(&v, l, Boundary::Circular));
            let rhs = shift_int(&lib(v.with_samples(map(&v)))?, l, Boundary::Circular).into_samples();
            if lhs != rhs {
                return fail(format!("case {c}: {f:?} does not commute with rotation by {l}"));
            }
        }
    }
    Ok(format!("{cases} cases, bitwise"))
}

// shifts

fn integer_reduction(ctx: &mut Ctx) -> PropResult {
    let cases = 100;
    for c in 0..cases {
        let n = ctx.rng.gen_range(1..=16);
        let v = lib(DiscreteSignal::from_samples(random_vec(&mut ctx.rng, n)))?;
        let m = ctx.rng.gen_range(-20..=20);
        for scheme in [Scheme::Linear, Scheme::Cubic, Scheme::Fourier] {
            let boundary = if scheme == Scheme::Fourier { Boundary::Circular } else { random_boundary(&mut ctx.rng) };
            let frac = lib(shift_frac(&v, m as f64, scheme, boundary))?;
            let int = shift_int(&v, m, boundary);
            let err = max_abs_diff(frac.samples(), int.samples());
            if err > 1e-12 {
                return fail(format!("case {c}: {scheme} shift by {m} off by {err:e}"));
            }
        }
    }
    Ok(format!("{cases} cases x 3 schemes, tol 1e-12"))
}

/// Random vector with no energy in the Nyquist bin.
fn nyquist_free(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut v = random_vec(rng, n);
    if n.is_multiple_of(2) {
        let sign = |j: usize| if j.is_multiple_of(2) { 1.0 } else { -1.0 };
        let coef = v.iter().enumerate().map(|(j, x)| sign(j) * x).sum::<f64>() / n as f64;
        v.iter_mut().enumerate().for_each(|(j, x)| *x -= coef * sign(j));
    }
    v
}

fn fourier_composition(ctx: &mut Ctx) -> PropResult {
    let cases = 100;
    for c in 0..cases {
        let n = ctx.rng.gen_range(1..=32);
        let v = lib(DiscreteSignal::from_samples(nyquist_free(&mut ctx.rng, n)))?;
        let (a, b) = (ctx.rng.gen_range(-3.0..3.0), ctx.rng.gen_range(-3.0..3.0));
        let two = lib(shift_frac(&lib(shift_frac(&v, a, Scheme::Fourier, Boundary::Circular))?, b, Scheme::Fourier, Boundary::Circular))?;
        let one = lib(shift_frac(&v, a + b, Scheme::Fourier, Boundary::Circular))?;
        let err = max_abs_diff(two.samples(), one.samples());
        if err > 1e-10 {
            return fail(format!("case {c}: n={n}, a={a}, b={b}: off by {err:e}"));
        }
    }
    Ok(format!("{cases} Nyquist-free cases, tol 1e-10"))
}

fn fourier_commutes(ctx: &mut Ctx) -> PropResult {
    let cases = 100;
    for c in 0..cases {
        let n = ctx.rng.gen_range(1..=32);
        let k = random_kernel(&mut ctx.rng);
        let v = lib(DiscreteSignal::from_samples(random_vec(&mut ctx.rng, n)))?;
        let d = ctx.rng.gen_range(-3.0..3.0);
        let lhs = lib(convolve(&k, &lib(shift_frac(&v, d, Scheme::Fourier, Boundary::Circular))?, Boundary::Circular))?;
        let rhs = lib(shift_frac(&lib(convolve(&k, &v, Boundary::Circular))?, d, Scheme::Fourier, Boundary::Circular))?;
        let err = max_abs_diff(lhs.samples(), rhs.samples());
        if err > 1e-9 {
            return fail(format!("case {c}: off by {err:e}"));
        }
    }
    Ok(format!("{cases} cases, tol 1e-9"))
}

fn no_scheme_commutes(_ctx: &mut Ctx) -> PropResult {
    let g = lib(Signal::gaussian(1.0, 0.0, 0.3))?;
    let grid = lib(Grid::new(-1.0, 0.5, 4))?;
    let mut worst = f64::INFINITY;
    for (scheme, boundary) in [
        (Scheme::Linear, Boundary::Zero),
        (Scheme::Cubic, Boundary::Zero),
        (Scheme::Fourier, Boundary::Circular),
    ] {
        for d in [Discretizer::Average, Discretizer::Sample] {
            let rec = lib(discretization_commutation_residual(&g, &grid, 0.125, scheme, boundary, d))?;
            if rec.linf <= 1e-3 {
                return fail(format!("{scheme}/{d}: residual {} not above 1e-3", rec.linf));
            }
            worst = worst.min(rec.linf);
        }
    }
    Ok(format!("smallest gaussian residual {worst:.6e}"))
}

// equivariance

fn circular_residual_zero(ctx: &mut Ctx) -> PropResult {
    let mut cases = 0;
    for n in 1..=8usize {
        for _ in 0..12 {
            let layer = random_layer(&mut ctx.rng, Boundary::Circular);
            let b = lib(DiscreteSignal::from_samples(random_vec(&mut ctx.rng, n)))?;
            for l in -(n as isize)..=n as isize {
                let r = lib(ctx.shift_residual(&layer, &b, l))?;
                if r != Norms::ZERO {
                    return fail(format!("n={n}, l={l}: residual l2={:e}", r.l2));
                }
                cases += 1;
            }
        }
    }
    for _ in 0..20 {
        let n = ctx.rng.gen_range(9..=64);
        let layer = random_layer(&mut ctx.rng, Boundary::Circular);
        let b = lib(DiscreteSignal::from_samples(random_vec(&mut ctx.rng, n)))?;
        let l = ctx.rng.gen_range(-100..100);
        let r = lib(ctx.shift_residual(&layer, &b, l))?;
        if r != Norms::ZERO {
            return fail(format!("n={n}, l={l}: residual l2={:e}", r.l2));
        }
        cases += 1;
    }
    Ok(format!("{cases} cases, exact"))
}

fn relabel_invariance(ctx: &mut Ctx) -> PropResult {
    let cases = 50;
    for c in 0..cases {
        let s = random_signal(&mut ctx.rng);
        let g = random_grid(&mut ctx.rng);
        let boundary = random_boundary(&mut ctx.rng);
        let layer = random_layer(&mut ctx.rng, boundary);
        let scheme = [Scheme::Linear, Scheme::Cubic][ctx.rng.gen_range(0..2)];
        let delta = ctx.rng.gen_range(-0.5..0.5) * g.dx() * 3.0;
        let offset = ctx.rng.gen_range(-2.0..2.0);
        let moved_grid = lib(Grid::new(g.x0() + offset, g.dx(), g.n()))?;
        let moved = lib(s.translate(offset))?;
        for d in [Discretizer::Average, Discretizer::Sample] {
            let a = lib(translation_equiv_residual(&layer, &s, &g, delta, scheme, d))?;
            let b = lib(translation_equiv_residual(&layer, &moved, &moved_grid, delta, scheme, d))?;
            if (a.l2 - b.l2).abs() > 1e-12 || (a.linf - b.linf).abs() > 1e-12 {
                return fail(format!("case {c} ({d}): {} vs {}", a.l2, b.l2));
            }
        }
    }
    Ok(format!("{cases} cases, tol 1e-12"))
}

fn nonlinearity_isolation(ctx: &mut Ctx) -> PropResult {
    let cases = 20;
    let mut relu_max = 0.0_f64;
    for c in 0..cases {
        let n = ctx.rng.gen_range(8..=32);
        let grid = lib(Grid::over(-1.0, 1.0, n))?;
        let s = periodic_sinusoids(&mut ctx.rng, 2.0, n);
        let k = random_kernel(&mut ctx.rng);
        let delta = ctx.rng.gen_range(0.05..0.95) * grid.dx();
        let linear = ConvLayer::new(k.clone(), 0.0, Nonlinearity::Identity, Boundary::Circular);
        for d in [Discretizer::Average, Discretizer::Sample] {
            let rec = lib(translation_equiv_residual(&linear, &s, &grid, delta, Scheme::Fourier, d))?;
            if rec.linf > 1e-9 {
                return fail(format!("case {c} ({d}): linear layer residual {:e}", rec.linf));
            }
        }
        let relu = ConvLayer::new(k, 0.0, Nonlinearity::Relu, Boundary::Circular);
        let rec = lib(translation_equiv_residual(&relu, &s, &grid, delta, Scheme::Fourier, Discretizer::Average))?;
        relu_max = relu_max.max(rec.linf);
    }
    if relu_max <= 1e-3 {
        return fail(format!("relu never broke the symmetry (max residual {relu_max:e})"));
    }
    Ok(format!("{cases} cases, linear <= 1e-9, relu max {relu_max:.6e}"))
}

fn record_norm_bounds(ctx: &mut Ctx) -> PropResult {
    let cases = 200;
    for c in 0..cases {
        let s = random_signal(&mut ctx.rng);
        let g = random_grid(&mut ctx.rng);
        let boundary = random_boundary(&mut ctx.rng);
        let layer = random_layer(&mut ctx.rng, boundary);
        let scheme = [Scheme::Linear, Scheme::Cubic][ctx.rng.gen_range(0..2)];
        let delta = ctx.rng.gen_range(-2.0..2.0) * g.dx();
        let r = lib(translation_equiv_residual(&layer, &s, &g, delta, scheme, Discretizer::Average))?;
        let root_n = (r.n as f64).sqrt();
        let slack = 1e-12 * r.l2.max(r.linf);
        if r.linf > r.l2 + slack || r.l2 > root_n * r.linf + slack {
            return fail(format!("case {c}: l2={} linf={} n={}", r.l2, r.linf, r.n));
        }
    }
    Ok(format!("{cases} cases"))
}

fn lipschitz_bound(ctx: &mut Ctx) -> PropResult {
    let cases = 100;
    let mut tightest = f64::INFINITY;
    for c in 0..cases {
        let boundary = [Boundary::Zero, Boundary::Circular][ctx.rng.gen_range(0..2)];
        let layer = ConvLayer { nonlinearity: Nonlinearity::Relu, ..random_layer(&mut ctx.rng, boundary) };
        let n = ctx.rng.gen_range(1..=32);
        let b = lib(DiscreteSignal::from_samples(random_vec(&mut ctx.rng, n)))?;
        let seed = ctx.rng.gen();
        let est = lib(lipschitz_estimate(&layer, &b, 20, 1e-3, seed))?;
        let bound = layer.kernel.l1_norm();
        if est > bound + 1e-9 {
            return fail(format!("case {c}: estimate {est} exceeds bound {bound}"));
        }
        tightest = tightest.min(bound - est);
    }
    Ok(format!("{cases} relu layers, smallest margin {tightest:.6e}"))
}

// cli

fn csv_json_agree(ctx: &mut Ctx) -> PropResult {
    let spec = SweepSpec {
        signals: (0..2).map(|_| random_signal(&mut ctx.rng)).collect(),
        layers: vec![
            random_layer(&mut ctx.rng, Boundary::Zero),
            random_layer(&mut ctx.rng, Boundary::Circular),
        ],
        grids: (0..2).map(|_| random_grid(&mut ctx.rng)).collect(),
        deltas: vec![Delta::Absolute(ctx.rng.gen_range(-0.3..0.3)), Delta::Pixels { px: 0.5 }],
        schemes: vec![Scheme::Linear, Scheme::Cubic, Scheme::Fourier],
        discretizers: vec![Discretizer::Average, Discretizer::Sample],
    };
    let rows = lib(sweep(&spec))?;
    let mut csv_buf = Vec::new();
    write_csv(&rows, &mut csv_buf).map_err(|e| e.to_string())?;
    let json = serde_json::to_string(&rows).map_err(|e| e.to_string())?;
    let from_json: Vec<SweepRow> = serde_json::from_str(&json).map_err(|e| e.to_string())?;

    let mut reader = csv::Reader::from_reader(csv_buf.as_slice());
    let parse = |s: &str| -> std::result::Result<Option<f64>, String> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse::<f64>().map(Some).map_err(|e| e.to_string())
        }
    };
    let mut count = 0;
    for (i, (rec, row)) in reader.records().zip(&from_json).enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let same = |a: Option<f64>, b: Option<f64>| a.map(f64::to_bits) == b.map(f64::to_bits);
        if !same(parse(&rec[1])?, Some(row.delta))
            || !same(parse(&rec[2])?, Some(row.delta_px))
            || !same(parse(&rec[6])?, row.l2)
            || !same(parse(&rec[7])?, row.linf)
            || !same(row.l2, rows[i].l2)
        {
            return fail(format!("row {i}: csv and json values differ"));
        }
        count += 1;
    }
    if count != rows.len() {
        return fail(format!("csv has {count} rows, json has {}", rows.len()));
    }
    Ok(format!("{count} rows, bit-identical"))
}
