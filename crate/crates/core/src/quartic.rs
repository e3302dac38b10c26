//! ASD Weyl quartic: coefficients from key-function jets, the invariants
//! I, J, D, P, R, the real-slice type criteria, and an independent
//! root-pattern oracle built on companion-matrix eigenvalues.

use std::fmt;

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jets::Jet2;

/// Default relative width of the `D = 0` band.
pub const DEFAULT_EPS: f64 = 1e-9;

/// Coefficients of `c5 ξ⁴ + 4 c4 ξ³ + 6 c3 ξ² + 4 c2 ξ + c1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarticCoefficients {
    pub c5: f64,
    pub c4: f64,
    pub c3: f64,
    pub c2: f64,
    pub c1: f64,
}

impl QuarticCoefficients {
    pub fn new(c5: f64, c4: f64, c3: f64, c2: f64, c1: f64) -> Self {
        Self { c5, c4, c3, c2, c1 }
    }

    pub fn from_slice(c: &[f64]) -> Result<Self> {
        match c {
            [c5, c4, c3, c2, c1] => Ok(Self::new(*c5, *c4, *c3, *c2, *c1)),
            _ => Err(Error::Schema(format!(
                "expected five quartic coefficients, got {}",
                c.len()
            ))),
        }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.c5, self.c4, self.c3, self.c2, self.c1]
    }

    pub fn scaled(&self, s: f64) -> Self {
        let [a, b, c, d, e] = self.as_array().map(|v| v * s);
        Self::new(a, b, c, d, e)
    }

    pub fn max_abs(&self) -> f64 {
        self.as_array().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Monomial coefficients `b[j]` of `ξʲ`.
    fn monomial(&self) -> [f64; 5] {
        [
            self.c1,
            4.0 * self.c2,
            6.0 * self.c3,
            4.0 * self.c4,
            self.c5,
        ]
    }
}

/// Doubled fourth partials of the key function.
pub fn weyl_from_theta(theta: &Jet2) -> QuarticCoefficients {
    QuarticCoefficients {
        c5: 2.0 * theta.coeff(4, 0),
        c4: 2.0 * theta.coeff(3, 1),
        c3: 2.0 * theta.coeff(2, 2),
        c2: 2.0 * theta.coeff(1, 3),
        c1: 2.0 * theta.coeff(0, 4),
    }
}

/// The invariants of the quartic plus cancellation-free magnitudes of the
/// terms entering D, P and R, used as scales for the zero bands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarticInvariants {
    #[serde(rename = "I")]
    pub i: f64,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "P")]
    pub p: f64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(skip)]
    pub d_scale: f64,
    #[serde(skip)]
    pub p_scale: f64,
    #[serde(skip)]
    pub r_scale: f64,
}

pub fn invariants(q: &QuarticCoefficients) -> QuarticInvariants {
    let QuarticCoefficients { c5, c4, c3, c2, c1 } = *q;
    let i = c1 * c5 - 4.0 * c2 * c4 + 3.0 * c3 * c3;
    let j = c5 * (c3 * c1 - c2 * c2) - c4 * (c4 * c1 - c2 * c3) + c3 * (c4 * c2 - c3 * c3);
    let d = i * i * i - 27.0 * j * j;
    // Magnitudes of I and J before cancellation; D's rounding error and its
    // natural size are both bounded by these.
    let i_abs = (c1 * c5).abs() + 4.0 * (c2 * c4).abs() + 3.0 * c3 * c3;
    let j_abs = (c5 * c3 * c1).abs()
        + (c5 * c2 * c2).abs()
        + (c4 * c4 * c1).abs()
        + 2.0 * (c4 * c2 * c3).abs()
        + (c3 * c3 * c3).abs();
    let p = 48.0 * (c3 * c5 - c4 * c4);
    let r_terms = [
        c1 * c5 * c5 * c5,
        -9.0 * c3 * c3 * c5 * c5,
        24.0 * c3 * c5 * c4 * c4,
        -4.0 * c2 * c4 * c5 * c5,
        -12.0 * c4 * c4 * c4 * c4,
    ];
    let r = 64.0 * r_terms.iter().sum::<f64>();
    QuarticInvariants {
        i,
        j,
        d,
        p,
        r,
        // First-order propagation of the rounding in I and J through
        // I^3 - 27 J^2. Term magnitudes of D itself overstate the error by
        // many orders when the quartic is far from degenerate but I^3 and
        // 27 J^2 are individually huge.
        d_scale: 3.0 * i * i * i_abs + 54.0 * j.abs() * j_abs,
        p_scale: 48.0 * (c3 * c5).abs().max(c4 * c4),
        r_scale: 64.0 * r_terms.iter().fold(0.0f64, |m, t| m.max(t.abs())),
    }
}

/// Algebraic type of the ASD Weyl quartic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PetrovTag {
    /// Four distinct real roots.
    #[serde(rename = "I_r")]
    Ir,
    /// No real roots.
    #[serde(rename = "I_c")]
    Ic,
    /// Two real roots and a conjugate pair.
    #[serde(rename = "I_rc")]
    Irc,
    /// Algebraically general over the complex numbers (`D ≠ 0`).
    #[serde(rename = "I_complex")]
    IComplex,
    /// `D` inside the zero band.
    Degenerate,
    /// `D > 0` but P or R too close to zero to decide the real subtype.
    Unresolved,
}

impl fmt::Display for PetrovTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PetrovTag::Ir => "I_r",
            PetrovTag::Ic => "I_c",
            PetrovTag::Irc => "I_rc",
            PetrovTag::IComplex => "I_complex",
            PetrovTag::Degenerate => "Degenerate",
            PetrovTag::Unresolved => "Unresolved",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PetrovType {
    pub tag: PetrovTag,
    /// `|D| - eps·scale`; negative inside the degeneracy band.
    pub margin: f64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Sign {
    Neg,
    Zero,
    Pos,
}

fn banded_sign(v: f64, band: f64) -> Sign {
    if v.abs() <= band {
        Sign::Zero
    } else if v > 0.0 {
        Sign::Pos
    } else {
        Sign::Neg
    }
}

/// Real neutral-slice criteria: `D < 0` → I_rc; `D > 0` with `P < 0` and
/// `R < 0` → I_r; `D > 0` with `P > 0` or `R > 0` → I_c.
pub fn classify_real(inv: &QuarticInvariants, eps: f64) -> PetrovType {
    let band = eps * inv.d_scale;
    let margin = inv.d.abs() - band;
    let tag = if inv.d.abs() <= band {
        PetrovTag::Degenerate
    } else if inv.d < 0.0 {
        PetrovTag::Irc
    } else {
        let p = banded_sign(inv.p, eps * inv.p_scale);
        let r = banded_sign(inv.r, eps * inv.r_scale);
        if p == Sign::Pos || r == Sign::Pos {
            PetrovTag::Ic
        } else if p == Sign::Neg && r == Sign::Neg {
            PetrovTag::Ir
        } else {
            PetrovTag::Unresolved
        }
    };
    PetrovType { tag, margin }
}

/// Complex criterion: general iff `D ≠ 0`.
pub fn classify_complex(inv: &QuarticInvariants, eps: f64) -> PetrovType {
    let band = eps * inv.d_scale;
    let margin = inv.d.abs() - band;
    let tag = if inv.d.abs() <= band {
        PetrovTag::Degenerate
    } else {
        PetrovTag::IComplex
    };
    PetrovType { tag, margin }
}

/// A root of the binary quartic on the projective line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ProjectiveRoot {
    Finite { re: f64, im: f64 },
    Infinity,
}

/// Multiplicity pattern reported by [`classify_by_roots`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootPattern {
    /// Real roots counted with multiplicity (a root at infinity is real).
    pub real_count: usize,
    /// Cluster sizes, descending.
    pub multiplicities: Vec<usize>,
    /// Multiplicity of the root at `ξ = ∞` in the `ξ = ξ¹/ξ²` chart.
    pub at_infinity: usize,
    /// Set when the leading coefficient vanishes and the chart misses roots.
    pub chart_degenerate: bool,
    pub roots: Vec<ProjectiveRoot>,
}

impl RootPattern {
    pub fn all_simple(&self) -> bool {
        self.multiplicities.iter().all(|&m| m == 1)
    }

    /// Type predicted by the pattern: repeated root → Degenerate, otherwise
    /// 4/2/0 real roots → I_r / I_rc / I_c.
    pub fn implied_tag(&self) -> PetrovTag {
        if !self.all_simple() {
            return PetrovTag::Degenerate;
        }
        match self.real_count {
            4 => PetrovTag::Ir,
            2 => PetrovTag::Irc,
            0 => PetrovTag::Ic,
            _ => PetrovTag::Unresolved,
        }
    }
}

/// Coefficients (constant term first) of the quartic after the real
/// projective rotation `ξ¹ = c u − s`, `ξ² = s u + c`.
fn rotate(b: &[f64; 5], theta: f64) -> [f64; 5] {
    let (s, c) = theta.sin_cos();
    let mut out = [0.0; 5];
    for (j, bj) in b.iter().enumerate() {
        // (c u - s)^j (s u + c)^(4-j)
        let mut poly = [0.0; 5];
        poly[0] = 1.0;
        let mut deg = 0;
        let mul = |poly: &mut [f64; 5], a1: f64, a0: f64, deg: &mut usize| {
            let mut next = [0.0; 5];
            for k in 0..=*deg {
                next[k] += a0 * poly[k];
                next[k + 1] += a1 * poly[k];
            }
            *poly = next;
            *deg += 1;
        };
        for _ in 0..j {
            mul(&mut poly, c, -s, &mut deg);
        }
        for _ in j..4 {
            mul(&mut poly, s, c, &mut deg);
        }
        for k in 0..5 {
            out[k] += bj * poly[k];
        }
    }
    out
}

/// Roots of `Σ b[k] uᵏ` (constant term first, nonzero leading entry).
fn companion_roots(b: &[f64]) -> Vec<Complex<f64>> {
    let n = b.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let lead = b[n];
    let mut m = DMatrix::<f64>::zeros(n, n);
    for k in 0..n - 1 {
        m[(k + 1, k)] = 1.0;
    }
    for k in 0..n {
        m[(k, n - 1)] = -b[k] / lead;
    }
    // A 2x2 Schur block holding a nearly double real pair can come back with
    // a NaN imaginary part (square root of a rounding-negative quantity).
    m.complex_eigenvalues()
        .iter()
        .map(|z| if z.im.is_nan() && z.re.is_finite() { Complex::new(z.re, 0.0) } else { *z })
        .collect()
}

/// Chordal distance on the Riemann sphere, `None` standing for infinity.
fn chordal(a: Option<Complex<f64>>, b: Option<Complex<f64>>) -> f64 {
    match (a, b) {
        (None, None) => 0.0,
        (Some(z), None) | (None, Some(z)) => 1.0 / (1.0 + z.norm_sqr()).sqrt(),
        (Some(a), Some(b)) => {
            (a - b).norm() / ((1.0 + a.norm_sqr()).sqrt() * (1.0 + b.norm_sqr()).sqrt())
        }
    }
}

/// Rescales the chart variable by `s` (returned) so the monomial
/// coefficients have the smallest spread. Roots of the result times `s` are
/// roots of the input; multiplicities and reality are unchanged, but the
/// chordal clustering no longer merges roots that only look close because
/// the coefficients span many decades.
fn balance(b: &[f64; 5]) -> ([f64; 5], f64) {
    let logs: Vec<(f64, f64)> = b
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(k, v)| (k as f64 - 2.0, v.abs().ln()))
        .collect();
    // Without weights of both signs the spread has no interior minimum.
    let has = |pos: bool| logs.iter().any(|(w, _)| if pos { *w > 0.0 } else { *w < 0.0 });
    if !(has(true) && has(false)) {
        return (*b, 1.0);
    }
    let spread = |t: f64| logs.iter().fold(f64::MIN, |m, (w, l)| m.max(l + w * t));
    let (mut lo, mut hi) = (-800.0f64, 800.0f64);
    for _ in 0..200 {
        let (m1, m2) = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
        if spread(m1) <= spread(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let t = 0.5 * (lo + hi);
    let top = spread(t);
    let mut out = [0.0; 5];
    for (k, v) in b.iter().enumerate() {
        if *v != 0.0 {
            out[k] = v.signum() * (v.abs().ln() + (k as f64 - 2.0) * t - top).exp();
        }
    }
    (out, t.exp())
}

/// Root-pattern oracle: roots of the binary quartic by companion-matrix
/// eigenvalues, clustered at chordal distance `tol` on the projective line.
///
/// Roots at `ξ = ∞` (vanishing leading coefficients) are deflated exactly.
/// Otherwise the eigenproblem is solved in the real chart with the largest
/// leading coefficient; real rotations preserve reality and chordal distance.
pub fn classify_by_roots(q: &QuarticCoefficients, tol: f64) -> Result<RootPattern> {
    let scale = q.max_abs();
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::UndefinedPattern);
    }
    let (b, shift) = balance(&q.monomial().map(|v| v / scale));

    // Exact zeros only: after balancing, a small leading coefficient is a
    // large finite root, which the rotated chart below resolves.
    let at_infinity = (0..5).rev().take_while(|&k| b[k] == 0.0).count();

    let xis: Vec<Option<Complex<f64>>> = if at_infinity > 0 {
        let mut r: Vec<_> = companion_roots(&b[..5 - at_infinity])
            .into_iter()
            .map(Some)
            .collect();
        r.extend(std::iter::repeat_n(None, at_infinity));
        r
    } else {
        let (theta, rb) = (0..16)
            .map(|k| {
                let th = k as f64 * std::f64::consts::PI / 16.0;
                (th, rotate(&b, th))
            })
            .max_by(|a, b| a.1[4].abs().total_cmp(&b.1[4].abs()))
            .expect("nonempty");
        let (s, c) = theta.sin_cos();
        companion_roots(&rb)
            .into_iter()
            .map(|u| {
                let den = u * s + c;
                if den.norm() == 0.0 {
                    None
                } else {
                    Some((u * c - s) / den)
                }
            })
            .collect()
    };

    // Single-linkage clustering.
    let mut label: Vec<usize> = (0..xis.len()).collect();
    for i in 0..xis.len() {
        for j in (i + 1)..xis.len() {
            if label[i] != label[j] && chordal(xis[i], xis[j]) <= tol {
                let (from, to) = (label[j], label[i]);
                label.iter_mut().filter(|l| **l == from).for_each(|l| *l = to);
            }
        }
    }
    let mut groups: Vec<(usize, Vec<Option<Complex<f64>>>)> = Vec::new();
    for (k, l) in label.iter().enumerate() {
        match groups.iter_mut().find(|g| g.0 == *l) {
            Some(g) => g.1.push(xis[k]),
            None => groups.push((*l, vec![xis[k]])),
        }
    }
    let is_real = |z: &Option<Complex<f64>>| match z {
        None => true,
        Some(z) => z.im.abs() / (1.0 + z.norm_sqr()) <= tol,
    };
    let real_count = groups
        .iter()
        .filter(|g| {
            let real_members = g.1.iter().filter(|z| is_real(z)).count();
            2 * real_members >= g.1.len()
        })
        .map(|g| g.1.len())
        .sum();
    let mut multiplicities: Vec<usize> = groups.iter().map(|g| g.1.len()).collect();
    multiplicities.sort_unstable_by(|a, b| b.cmp(a));

    let roots = xis
        .iter()
        .map(|z| match z.map(|z| z * shift) {
            Some(z) if z.re.is_finite() && z.im.is_finite() => {
                ProjectiveRoot::Finite { re: z.re, im: z.im }
            }
            _ => ProjectiveRoot::Infinity,
        })
        .collect();

    Ok(RootPattern {
        real_count,
        multiplicities,
        at_infinity,
        chart_degenerate: at_infinity > 0,
        roots,
    })
}
