//! Values checked against independent brute-force oracles or frozen from a
//! high-precision reference computation.

use std::f64::consts::PI;

use equivprobe::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Composite Simpson with a fixed, large panel count.
fn brute_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Midpoint Riemann sum.
fn riemann(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
}

#[test]
fn gaussian_integral_matches_quadrature() {
    let g = Signal::gaussian(1.0, 0.0, 0.3).unwrap();
    let closed = g.integrate(-1.0, 1.0).unwrap();
    let brute = brute_simpson(|x| (-x * x / 0.18).exp(), -1.0, 1.0, 20_000);
    assert!((closed - brute).abs() < 1e-10, "{closed} vs {brute}");
    // 40-digit reference
    assert!((closed - 0.7513431855316719).abs() < 1e-15);
}

#[test]
fn gaussian_partial_integrals_match_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let (amp, c, w) = (rng.gen_range(-2.0..2.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.05..1.0));
        let g = Signal::gaussian(amp, c, w).unwrap();
        let a = rng.gen_range(-3.0..1.0);
        let b = a + rng.gen_range(0.0..2.0);
        let brute = brute_simpson(|x| amp * (-0.5 * ((x - c) / w).powi(2)).exp(), a, b, 20_000);
        assert!((g.integrate(a, b).unwrap() - brute).abs() < 1e-10);
    }
}

#[test]
fn box_convolution_is_a_triangle() {
    let b = Signal::boxcar(-0.5, 0.5).unwrap();
    for (x, apex) in [(0.0, 1.0), (0.5, 0.5), (-0.25, 0.75), (1.2, 0.0)] {
        let v = continuous_convolve(&b, &b, x, (-2.0, 2.0)).unwrap();
        let oracle = riemann(
            |t| b.eval(t).unwrap() * b.eval(x - t).unwrap(),
            -2.0,
            2.0,
            400_000,
        );
        assert!((v - oracle).abs() <= 1e-8, "x={x}: {v} vs riemann {oracle}");
        assert!((v - apex).abs() <= 1e-10, "x={x}: {v} vs {apex}");
    }
}

#[test]
fn gaussian_convolution_commutes_and_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let (a1, c1, s1) = (rng.gen_range(0.2..2.0), rng.gen_range(-0.5..0.5), rng.gen_range(0.1..0.5));
        let (a2, c2, s2) = (rng.gen_range(0.2..2.0), rng.gen_range(-0.5..0.5), rng.gen_range(0.1..0.5));
        let g1 = Signal::gaussian(a1, c1, s1).unwrap();
        let g2 = Signal::gaussian(a2, c2, s2).unwrap();
        let x = rng.gen_range(-1.0..1.0);
        let window = (-6.0, 6.0);
        let ab = continuous_convolve(&g1, &g2, x, window).unwrap();
        let ba = continuous_convolve(&g2, &g1, x, window).unwrap();
        assert!((ab - ba).abs() <= 1e-9, "{ab} vs {ba}");
        let var = s1 * s1 + s2 * s2;
        let exact = a1 * a2 * (2.0 * PI).sqrt() * s1 * s2 / var.sqrt()
            * (-(x - c1 - c2).powi(2) / (2.0 * var)).exp();
        assert!((ab - exact).abs() <= 1e-9, "{ab} vs closed form {exact}");
    }
}

#[test]
fn translation_composes_at_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s = Signal::sum(vec![
        Signal::gaussian(1.0, 0.2, 0.3).unwrap(),
        Signal::sinusoid(0.5, 4.0, 0.1).unwrap(),
        Signal::polynomial(vec![1.0, -0.5, 0.25], -0.7, 0.9).unwrap(),
    ]);
    let (a, b) = (0.31, -0.77);
    let twice = s.translate(a).unwrap().translate(b).unwrap();
    let once = s.translate(a + b).unwrap();
    for _ in 0..1000 {
        let x = rng.gen_range(-3.0..3.0);
        assert!((twice.eval(x).unwrap() - once.eval(x).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn step_shift_residual_has_a_boundary_effect() {
    // Both sides by hand: shifting [0,0,1,1] two pixels with zero fill gives
    // all zeros, whose layer output is relu(-1) = 0 everywhere; the shifted
    // layer output is [0,0,0,1].
    let layer = ConvLayer::edge_detector();
    let b = DiscreteSignal::from_samples(vec![0.0, 0.0, 1.0, 1.0]).unwrap();
    let brute_layer = |v: &[f64]| -> Vec<f64> {
        (0..v.len())
            .map(|j| {
                let next = if j + 1 < v.len() { v[j + 1] } else { 0.0 };
                (2.0 * next - 2.0 * v[j] - 1.0).max(0.0)
            })
            .collect()
    };
    let brute_shift = |v: &[f64], l: usize| -> Vec<f64> {
        (0..v.len()).map(|j| if j >= l { v[j - l] } else { 0.0 }).collect()
    };
    let lhs = brute_layer(&brute_shift(b.samples(), 2));
    let rhs = brute_shift(&brute_layer(b.samples()), 2);
    assert_eq!(lhs, vec![0.0; 4]);
    assert_eq!(rhs, vec![0.0, 0.0, 0.0, 1.0]);

    let r = shift_equiv_residual(&layer, &b, 2).unwrap();
    assert_eq!(r, Norms { l2: 1.0, linf: 1.0 });
}

#[test]
fn gaussian_commutation_residual_frozen() {
    // Both sides evaluated with 40-digit quadrature, linear interpolation
    // with zero fill.
    let g = Signal::gaussian(1.0, 0.0, 0.3).unwrap();
    let grid = Grid::new(-1.0, 0.5, 4).unwrap();
    let cases = [
        (0.25, 0.21526962276573175, 0.2450755319699535),
        (0.125, 0.15593151819999093, 0.1779907550154623),
    ];
    for (delta, linf, l2) in cases {
        let r = discretization_commutation_residual(&g, &grid, delta, Scheme::Linear, Boundary::Zero, Discretizer::Average)
            .unwrap();
        assert!((r.linf - linf).abs() < 1e-12, "delta={delta}: {}", r.linf);
        assert!((r.l2 - l2).abs() < 1e-12, "delta={delta}: {}", r.l2);
    }
}

#[test]
fn whole_pixel_translation_of_periodic_signal() {
    let n = 16;
    let grid = Grid::over(-1.0, 1.0, n).unwrap();
    let s = Signal::sum(vec![
        Signal::sinusoid(1.0, PI, 0.3).unwrap(),
        Signal::sinusoid(0.4, 3.0 * PI, -1.0).unwrap(),
    ]);
    let layer = ConvLayer::new(Kernel::new(vec![0.5, -1.0, 0.25], 1).unwrap(), 0.1, Nonlinearity::Relu, Boundary::Circular);
    for m in [1, 3, -2] {
        for scheme in [Scheme::Linear, Scheme::Cubic, Scheme::Fourier] {
            for d in [Discretizer::Average, Discretizer::Sample] {
                let r = translation_equiv_residual(&layer, &s, &grid, m as f64 * grid.dx(), scheme, d).unwrap();
                assert!(r.linf <= 1e-12, "m={m} {scheme}/{d}: {}", r.linf);
            }
        }
    }
}

#[test]
fn lipschitz_regression_pin() {
    let b = DiscreteSignal::from_samples(vec![0.0, 0.0, 1.0, 1.0]).unwrap();
    let layer = ConvLayer::edge_detector();
    let first = lipschitz_estimate(&layer, &b, 100, 1e-3, 42).unwrap();
    let again = lipschitz_estimate(&layer, &b, 100, 1e-3, 42).unwrap();
    assert_eq!(first.to_bits(), again.to_bits());
    assert!((first - 2.6662041828187624).abs() < 1e-12, "{first}");
    assert!(first <= layer.kernel.l1_norm());
}

#[test]
fn lipschitz_bound_holds_for_tanh_and_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for seed in 0..50 {
        let len = rng.gen_range(1..=4);
        let kernel = Kernel::new((0..len).map(|_| rng.gen_range(-2.0..2.0)).collect(), rng.gen_range(0..len)).unwrap();
        let nl = [Nonlinearity::Identity, Nonlinearity::Tanh][seed as usize % 2];
        let layer = ConvLayer::new(kernel, rng.gen_range(-1.0..1.0), nl, Boundary::Circular);
        let b = DiscreteSignal::from_samples((0..12).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let est = lipschitz_estimate(&layer, &b, 30, 1e-4, seed).unwrap();
        assert!(est <= layer.kernel.l1_norm() + 1e-9);
    }
}

#[test]
fn sweep_singleton_and_refinement() {
    let step_spec = SweepSpec {
        signals: vec![Signal::heaviside(0.0).unwrap()],
        layers: vec![ConvLayer::edge_detector()],
        grids: vec![Grid::new(-1.0, 0.5, 4).unwrap()],
        deltas: vec![Delta::Absolute(0.25)],
        schemes: vec![Scheme::Linear],
        discretizers: vec![Discretizer::Average],
    };
    let rows = sweep(&step_spec).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].linf, Some(0.5));

    let smooth = ConvLayer::new(Kernel::new(vec![0.25, 0.5, 0.25], 1).unwrap(), 0.0, Nonlinearity::Tanh, Boundary::Zero);
    let spec = SweepSpec {
        signals: vec![Signal::gaussian(1.0, 0.0, 0.3).unwrap()],
        layers: vec![smooth],
        grids: vec![Grid::over(-1.0, 1.0, 16).unwrap(), Grid::over(-1.0, 1.0, 256).unwrap()],
        deltas: vec![Delta::Pixels { px: 0.5 }],
        schemes: vec![Scheme::Linear],
        discretizers: vec![Discretizer::Average],
    };
    let rows = sweep(&spec).unwrap();
    assert_eq!((rows[0].n, rows[1].n), (16, 256));
    assert!(rows[1].linf.unwrap() < rows[0].linf.unwrap());
}

#[test]
fn sweep_order_follows_config() {
    let spec = SweepSpec {
        signals: vec![Signal::gaussian(1.0, 0.0, 0.3).unwrap(), Signal::heaviside(0.1).unwrap()],
        layers: vec![ConvLayer::edge_detector()],
        grids: vec![Grid::over(-1.0, 1.0, 8).unwrap(), Grid::over(-1.0, 1.0, 5).unwrap()],
        deltas: vec![Delta::Absolute(0.1), Delta::Absolute(-0.2)],
        schemes: vec![Scheme::Linear, Scheme::Cubic],
        discretizers: vec![Discretizer::Average, Discretizer::Sample],
    };
    let rows = sweep_with_threads(&spec, 3).unwrap();
    assert_eq!(rows.len(), spec.len());
    let mut i = 0;
    for s in 0..2 {
        for g in 0..2 {
            for d in 0..2 {
                for scheme in [Scheme::Linear, Scheme::Cubic] {
                    for disc in [Discretizer::Average, Discretizer::Sample] {
                        let r = &rows[i];
                        assert_eq!((r.signal, r.grid, r.delta_index, r.scheme, r.discretizer), (s, g, d, scheme, disc));
                        i += 1;
                    }
                }
            }
        }
    }
}
