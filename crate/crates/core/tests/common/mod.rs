//! Oracles and generators shared by the integration suites.
#![allow(dead_code)]

use gpke::jets::Jet2;
use gpke::quartic::QuarticCoefficients;
use rand::rngs::StdRng;
use rand::Rng;

/// `n (n-1) … (n-k+1)`, zero when `k > n`.
pub fn falling(n: usize, k: usize) -> f64 {
    if k > n {
        0.0
    } else {
        (0..k).map(|m| (n - m) as f64).product()
    }
}

/// Analytic `∂ⁱ_x ∂ʲ_y (xᵃ yᵇ)` at `(x, y)`.
pub fn monomial_partial(a: usize, b: usize, i: usize, j: usize, x: f64, y: f64) -> f64 {
    if i > a || j > b {
        return 0.0;
    }
    falling(a, i) * falling(b, j) * x.powi((a - i) as i32) * y.powi((b - j) as i32)
}

pub fn monomial_jet(a: usize, b: usize, x: f64, y: f64) -> Jet2 {
    let mut out = Jet2::var_x(x, y).constant_like(1.0);
    for _ in 0..a {
        out = out * Jet2::var_x(x, y);
    }
    for _ in 0..b {
        out = out * Jet2::var_y(x, y);
    }
    out
}

/// Orders `(i, j)` with `i + j ≤ 4`.
pub fn orders() -> impl Iterator<Item = (usize, usize)> {
    (0..=4).flat_map(|i| (0..=4 - i).map(move |j| (i, j)))
}

/// A smooth function given both pointwise and as a jet.
pub struct Transcendental {
    pub name: &'static str,
    pub f: fn(f64, f64) -> f64,
    pub jet: fn(f64, f64) -> Jet2,
}

pub fn transcendentals() -> Vec<Transcendental> {
    vec![
        Transcendental {
            name: "exp(xy)",
            f: |x, y| (x * y).exp(),
            jet: |x, y| (Jet2::var_x(x, y) * Jet2::var_y(x, y)).exp(),
        },
        Transcendental {
            name: "ln(1 + x² + y²)",
            f: |x, y| (1.0 + x * x + y * y).ln(),
            jet: |x, y| {
                let (a, b) = (Jet2::var_x(x, y), Jet2::var_y(x, y));
                (a * a + b * b + 1.0).ln().unwrap()
            },
        },
        Transcendental {
            name: "(3 + x² - y)^(4/3)",
            f: |x, y| (3.0 + x * x - y).powf(4.0 / 3.0),
            jet: |x, y| {
                let (a, b) = (Jet2::var_x(x, y), Jet2::var_y(x, y));
                (a * a - b + 3.0).powf(4.0 / 3.0).unwrap()
            },
        },
        Transcendental {
            name: "sqrt(4 + x - y) / (2 + y)",
            f: |x, y| (4.0 + x - y).sqrt() / (2.0 + y),
            jet: |x, y| {
                let (a, b) = (Jet2::var_x(x, y), Jet2::var_y(x, y));
                (a - b + 4.0).sqrt().unwrap().try_div(&(b + 2.0), "2 + y").unwrap()
            },
        },
        Transcendental {
            name: "exp(-atan(x / (y + 3)))",
            f: |x, y| (-(x / (y + 3.0)).atan()).exp(),
            jet: |x, y| {
                let (a, b) = (Jet2::var_x(x, y), Jet2::var_y(x, y));
                (-a.try_div(&(b + 3.0), "y + 3").unwrap().atan()).exp()
            },
        },
    ]
}

/// Central difference for first and second partials.
pub fn central(f: fn(f64, f64) -> f64, x: f64, y: f64, order: (usize, usize), h: f64) -> f64 {
    match order {
        (1, 0) => (f(x + h, y) - f(x - h, y)) / (2.0 * h),
        (0, 1) => (f(x, y + h) - f(x, y - h)) / (2.0 * h),
        (2, 0) => (f(x + h, y) - 2.0 * f(x, y) + f(x - h, y)) / (h * h),
        (0, 2) => (f(x, y + h) - 2.0 * f(x, y) + f(x, y - h)) / (h * h),
        (1, 1) => (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4.0 * h * h),
        _ => panic!("order {order:?} not covered"),
    }
}

/// One Richardson elimination over steps `h` and `h/2`.
pub fn richardson(f: fn(f64, f64) -> f64, x: f64, y: f64, order: (usize, usize), h: f64) -> f64 {
    (4.0 * central(f, x, y, order, h / 2.0) - central(f, x, y, order, h)) / 3.0
}

/// Quartic from roots `(re, im)`; a nonzero `im` contributes the conjugate
/// pair.
pub fn quartic_from_roots(rs: &[(f64, f64)], lead: f64) -> QuarticCoefficients {
    let mut poly = vec![lead];
    for &(a, b) in rs {
        let factor: Vec<f64> = if b == 0.0 { vec![-a, 1.0] } else { vec![a * a + b * b, -2.0 * a, 1.0] };
        let mut next = vec![0.0; poly.len() + factor.len() - 1];
        for (i, p) in poly.iter().enumerate() {
            for (j, f) in factor.iter().enumerate() {
                next[i + j] += p * f;
            }
        }
        poly = next;
    }
    assert_eq!(poly.len(), 5);
    QuarticCoefficients::new(poly[4], poly[3] / 4.0, poly[2] / 6.0, poly[1] / 4.0, poly[0])
}

/// Uniform coefficients in `[-1, 1]` half of the time; otherwise a quartic
/// with a random number (0, 2 or 4) of real roots.
pub fn random_quartic(rng: &mut StdRng) -> QuarticCoefficients {
    if rng.gen_bool(0.5) {
        let c: [f64; 5] = std::array::from_fn(|_| rng.gen_range(-1.0..=1.0));
        return QuarticCoefficients::from_slice(&c).unwrap();
    }
    let kind = rng.gen_range(0..3);
    let mut re = || rng.gen_range(-2.0f64..2.0);
    let roots = match kind {
        0 => vec![(re(), 0.0), (re(), 0.0), (re(), 0.0), (re(), 0.0)],
        1 => vec![(re(), 0.0), (re(), 0.0), (re(), 0.5 + re().abs())],
        _ => vec![(re(), 0.3 + re().abs()), (re(), 0.3 + re().abs())],
    };
    let lead = rng.gen_range(0.2..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    quartic_from_roots(&roots, lead)
}
