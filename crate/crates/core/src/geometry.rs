//! Metrics, curvature and Killing residuals.
//!
//! Coordinates are ordered `(q, p, x, y)` in the hyperheavenly chart and
//! `(q, p, x, w)` in the chart of the worked example. The stored metric is
//! `ds² = g_ab dxᵃ dxᵇ`, twice the half line element the field equations are
//! usually written with.
//!
//! Ricci contracts the last Riemann index, `Ric_bd = Rᵃ_bda`, so an Einstein
//! space with cosmological constant `Λ` has `Ric = -Λ g` and `R = -4Λ`.

use std::sync::Arc;

use nalgebra::{Matrix4, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::cases::StructureConstants;
use crate::error::{Error, Result};
use crate::example::ExampleParams;
use crate::jets::Jet2;

pub type Point = [f64; 4];

/// Threshold on `|eigenvalue| / max |eigenvalue|` below which a sample is
/// treated as degenerate instead of being assigned a signature.
pub const SIGNATURE_THRESHOLD: f64 = 1e-10;

const Q: usize = 0;
const P: usize = 1;
const X: usize = 2;
const Y: usize = 3;

/// A metric at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSample {
    pub coords: Point,
    pub g: Matrix4<f64>,
}

/// JSON form of a [`MetricSample`]; `g` is row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub coords: Point,
    pub g: Vec<f64>,
    pub det: f64,
    pub signature: Option<(usize, usize)>,
}

impl MetricSample {
    pub fn is_symmetric(&self) -> bool {
        self.g == self.g.transpose()
    }

    pub fn det(&self) -> f64 {
        self.g.determinant()
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let ev = SymmetricEigen::new(self.g).eigenvalues;
        let mut out = [ev[0], ev[1], ev[2], ev[3]];
        out.sort_by(|a, b| b.total_cmp(a));
        out
    }

    /// `(positive, negative)` eigenvalue counts, or `None` when an eigenvalue
    /// is too small relative to the largest one to trust its sign.
    ///
    /// The counts are read from `D g D` with `D` equilibrating the rows, a
    /// congruence that keeps the signature but removes the spread between
    /// large and small metric entries.
    pub fn signature(&self) -> Option<(usize, usize)> {
        let mut d = [0.0; 4];
        for (i, di) in d.iter_mut().enumerate() {
            let row = self.g.row(i).amax();
            if !(row > 0.0 && row.is_finite()) {
                return None;
            }
            *di = row.sqrt().recip();
        }
        let scaled = Matrix4::from_fn(|i, j| d[i] * self.g[(i, j)] * d[j]);
        let ev = SymmetricEigen::new(scaled).eigenvalues;
        let top = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if top == 0.0 || !top.is_finite() || ev.iter().any(|v| v.abs() <= SIGNATURE_THRESHOLD * top) {
            return None;
        }
        let pos = ev.iter().filter(|v| **v > 0.0).count();
        Some((pos, 4 - pos))
    }

    pub fn is_neutral(&self) -> bool {
        self.signature() == Some((2, 2))
    }

    pub fn record(&self) -> MetricRecord {
        MetricRecord {
            coords: self.coords,
            g: self.g.transpose().iter().copied().collect(),
            det: self.det(),
            signature: self.signature(),
        }
    }
}

/// Hyperheavenly metric from the second partials of the key function.
///
/// The jet must be the plain jet in `(x, y)` at `coords[2..4]`.
pub fn metric_from_key(theta: &Jet2, coords: Point, lambda: f64) -> MetricSample {
    let (x, y) = (coords[X], coords[Y]);
    let l3 = lambda / 3.0;
    let a = theta.coeff(2, 0) - l3 * y * y;
    let b = theta.coeff(1, 1) + l3 * x * y;
    let c = theta.coeff(0, 2) - l3 * x * x;
    let mut g = Matrix4::zeros();
    g[(Q, Y)] = 1.0;
    g[(Y, Q)] = 1.0;
    g[(P, X)] = -1.0;
    g[(X, P)] = -1.0;
    g[(Q, Q)] = -2.0 * a;
    g[(Q, P)] = -2.0 * b;
    g[(P, Q)] = -2.0 * b;
    g[(P, P)] = -2.0 * c;
    MetricSample { coords, g }
}

/// Metric of the worked example in the `(q, p, x, w)` chart.
pub fn metric_example(coords: Point, params: &ExampleParams) -> Result<MetricSample> {
    let (l, z0) = (params.lambda, params.z0);
    let (x, w) = (coords[X], coords[Y]);
    let s = 12.0 * w + l;
    let t = 2.0 * w + l;
    if w == 0.0 || t == 0.0 {
        return Err(Error::Pole { what: "example metric".into(), at: w });
    }
    if !(s > 0.0) {
        return Err(Error::Domain(format!("12w + Λ = {s} must be positive")));
    }
    if x == 0.0 {
        return Err(Error::Domain("x must be nonzero".into()));
    }
    let l3 = l / 3.0;
    let a = z0 * s.powf(1.5) / (w.powi(4) * x.powi(3));
    let mut g = Matrix4::zeros();
    let mut set = |i: usize, j: usize, v: f64| {
        g[(i, j)] = v;
        g[(j, i)] = v;
    };
    set(Q, Y, -3.0 * a * x * t);
    set(Q, X, -2.0 * a * w * s);
    set(X, P, -1.0);
    set(P, P, -2.0 * x * x * (3.0 * w - l) / t * l3);
    set(Q, P, -(2.0 * z0 / (w.powi(3) * x)) * s.powf(3.5) / t * l3);
    set(
        Q,
        Q,
        2.0 * z0 * z0 * s.powi(5) * (36.0 * w * w + l * l) / (3.0 * w.powi(6) * x.powi(4) * t),
    );
    let sample = MetricSample { coords, g };
    if sample.g.iter().all(|v| v.is_finite()) {
        Ok(sample)
    } else {
        Err(Error::Domain(format!("non-finite example metric at {coords:?}")))
    }
}

/// Jacobian `∂(q, p, x, y)/∂(q, p, x, w)` of the example chart, `y = Z(w)/x²`.
pub fn example_chart_jacobian(coords: Point, params: &ExampleParams) -> Result<Matrix4<f64>> {
    let (x, w) = (coords[X], coords[Y]);
    if x == 0.0 {
        return Err(Error::Domain("x must be nonzero".into()));
    }
    let [z, z1, ..] = params.z_derivatives(w)?;
    let mut j = Matrix4::identity();
    j[(Y, X)] = -2.0 * z / x.powi(3);
    j[(Y, Y)] = z1 / (x * x);
    Ok(j)
}

/// `Jᵀ g J`.
pub fn pullback(g: &Matrix4<f64>, jacobian: &Matrix4<f64>) -> Matrix4<f64> {
    jacobian.transpose() * g * jacobian
}

/// Example metric assembled the long way: the key function's jet in the
/// hyperheavenly chart, pulled back through `y = Z(w)/x²`.
pub fn example_metric_via_key(coords: Point, params: &ExampleParams) -> Result<MetricSample> {
    let (x, w) = (coords[X], coords[Y]);
    let y = params.y_of(x, w)?;
    let theta = params.theta_jet(x, w)?;
    let hh = metric_from_key(&theta, [coords[Q], coords[P], x, y], params.lambda);
    let j = example_chart_jacobian(coords, params)?;
    let mut g = pullback(&hh.g, &j);
    // Symmetrize the rounding of the triple product.
    g = (g + g.transpose()) * 0.5;
    Ok(MetricSample { coords, g })
}

/// A metric field on a chart.
pub trait MetricField: Sync {
    fn metric(&self, point: &Point) -> Result<Matrix4<f64>>;

    /// Exact first and second partials, for fields that can provide them.
    fn metric_partials(&self, _point: &Point) -> Option<Result<MetricPartials>> {
        None
    }
}

/// A metric with its first partials `dg[c] = ∂_c g` and second partials
/// `ddg[c][d] = ∂_c ∂_d g`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricPartials {
    pub g: Matrix4<f64>,
    pub dg: [Matrix4<f64>; 4],
    pub ddg: [[Matrix4<f64>; 4]; 4],
}

impl MetricPartials {
    /// From jets of the independent components in the `(x, ·)` pair of
    /// coordinates the metric depends on; everything else is constant.
    fn from_entry_jets(entries: &[(usize, usize, Jet2)]) -> Self {
        let mut out = Self {
            g: Matrix4::zeros(),
            dg: [Matrix4::zeros(); 4],
            ddg: [[Matrix4::zeros(); 4]; 4],
        };
        for (i, j, e) in entries {
            let put = |m: &mut Matrix4<f64>, v: f64| {
                m[(*i, *j)] = v;
                m[(*j, *i)] = v;
            };
            put(&mut out.g, e.coeff(0, 0));
            put(&mut out.dg[X], e.coeff(1, 0));
            put(&mut out.dg[Y], e.coeff(0, 1));
            put(&mut out.ddg[X][X], e.coeff(2, 0));
            put(&mut out.ddg[Y][Y], e.coeff(0, 2));
            let m = e.coeff(1, 1);
            put(&mut out.ddg[X][Y], m);
            put(&mut out.ddg[Y][X], m);
        }
        out
    }
}

impl<F> MetricField for F
where
    F: Fn(&Point) -> Result<Matrix4<f64>> + Sync,
{
    fn metric(&self, point: &Point) -> Result<Matrix4<f64>> {
        self(point)
    }
}

/// The worked example as a [`MetricField`] on `(q, p, x, w)`.
#[derive(Debug, Clone, Copy)]
pub struct ExampleMetric(pub ExampleParams);

impl MetricField for ExampleMetric {
    fn metric(&self, point: &Point) -> Result<Matrix4<f64>> {
        Ok(metric_example(*point, &self.0)?.g)
    }

    fn metric_partials(&self, point: &Point) -> Option<Result<MetricPartials>> {
        Some(example_partials(point, &self.0))
    }
}

/// The example metric evaluated in Taylor arithmetic over `(x, w)`.
fn example_partials(point: &Point, params: &ExampleParams) -> Result<MetricPartials> {
    // Validates the point with the same messages as the plain evaluation.
    metric_example(*point, params)?;
    let (l, z0) = (params.lambda, params.z0);
    let (x0, w0) = (point[X], point[Y]);
    let x = Jet2::var_x(x0, w0);
    let w = Jet2::var_y(x0, w0);
    let l3 = l / 3.0;
    let s = w * 12.0 + l;
    let t = w * 2.0 + l;
    let a = (s.powf(1.5)? * z0).try_div(&(w.powi(4) * x.powi(3)), "w⁴x³")?;
    let g_qw = a * x * t * -3.0;
    let g_qx = a * w * s * -2.0;
    let g_pp = (x * x * (w * 3.0 - l)).try_div(&t, "2w + Λ")? * (-2.0 * l3);
    let g_qp = (s.powf(3.5)? * (-2.0 * z0 * l3)).try_div(&(w.powi(3) * x * t), "w³x(2w + Λ)")?;
    let g_qq = (s.powi(5) * (w * w * 36.0 + l * l) * (2.0 * z0 * z0))
        .try_div(&(w.powi(6) * x.powi(4) * t * 3.0), "w⁶x⁴(2w + Λ)")?;
    let one = x.constant_like(1.0);
    Ok(MetricPartials::from_entry_jets(&[
        (Q, Y, g_qw),
        (Q, X, g_qx),
        (X, P, -one),
        (P, P, g_pp),
        (Q, P, g_qp),
        (Q, Q, g_qq),
    ]))
}

/// Hyperheavenly metric of a key function given by its jet at `(x, y)`.
pub struct KeyMetric<F> {
    pub lambda: f64,
    pub key: F,
}

impl<F> MetricField for KeyMetric<F>
where
    F: Fn(f64, f64) -> Result<Jet2> + Sync,
{
    fn metric(&self, point: &Point) -> Result<Matrix4<f64>> {
        let theta = (self.key)(point[X], point[Y])?;
        Ok(metric_from_key(&theta, *point, self.lambda).g)
    }

    /// Exact through order 2, reading the third and fourth partials of the
    /// key function's jet.
    fn metric_partials(&self, point: &Point) -> Option<Result<MetricPartials>> {
        Some((|| {
            let theta = (self.key)(point[X], point[Y])?;
            let (x0, y0) = (point[X], point[Y]);
            let second = |a: usize, b: usize| {
                let mut d = [[0.0; 5]; 5];
                for (i, row) in d.iter_mut().enumerate().take(3) {
                    for (j, v) in row.iter_mut().enumerate().take(3 - i) {
                        *v = theta.coeff(i + a, j + b);
                    }
                }
                Jet2::from_partials(x0, y0, &d)
            };
            let (x, y) = (Jet2::var_x(x0, y0), Jet2::var_y(x0, y0));
            let l3 = self.lambda / 3.0;
            let a = second(2, 0) - y * y * l3;
            let b = second(1, 1) + x * y * l3;
            let c = second(0, 2) - x * x * l3;
            let one = x.constant_like(1.0);
            Ok(MetricPartials::from_entry_jets(&[
                (Q, Y, one),
                (P, X, -one),
                (Q, Q, a * -2.0),
                (Q, P, b * -2.0),
                (P, P, c * -2.0),
            ]))
        })())
    }
}

/// Finite-difference settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdConfig {
    /// Base step as a fraction of the local scale.
    pub rel_step: f64,
    /// Lower bound on the coordinate scale (coordinates near zero).
    pub min_scale: f64,
    /// Number of step sizes, each half the previous; at least 2.
    pub levels: usize,
    /// Halvings allowed when the metric varies faster than the coordinate
    /// scale suggests (close to a pole).
    pub max_shrink: u32,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self { rel_step: 1e-2, min_scale: 1e-2, levels: 3, max_shrink: 12 }
    }
}

impl FdConfig {
    fn validate(&self) -> Result<()> {
        if self.levels < 2 || !(self.rel_step > 0.0 && self.rel_step < 1.0) || !(self.min_scale > 0.0) {
            return Err(Error::Schema("fd config needs levels ≥ 2, 0 < rel_step < 1 and min_scale > 0".into()));
        }
        Ok(())
    }

    /// Base step per coordinate: `rel_step` times the coordinate scale,
    /// halved until the metric changes by at most a `rel_step` fraction of
    /// its size across the stencil, so steps track the local scale of
    /// variation near poles.
    fn steps(&self, field: &dyn MetricField, point: &Point, g0: &Matrix4<f64>) -> Result<[f64; 4]> {
        self.validate()?;
        let size = g0.amax();
        let mut out = [0.0; 4];
        for (c, h_out) in out.iter_mut().enumerate() {
            let mut h = self.rel_step * point[c].abs().max(self.min_scale);
            for shrink in 0..=self.max_shrink {
                let plus = field.metric(&shifted(point, &[(c, h)]));
                let minus = field.metric(&shifted(point, &[(c, -h)]));
                let ok = match (&plus, &minus) {
                    (Ok(a), Ok(b)) => (a - g0).amax().max((b - g0).amax()) <= self.rel_step * size,
                    _ => false,
                };
                if ok {
                    break;
                }
                if shrink == self.max_shrink {
                    if let (Err(e), _) | (_, Err(e)) = (&plus, &minus) {
                        return Err(Error::Stencil(format!(
                            "stencil along coordinate {c} with step {h:.3e} leaves the domain at {point:?}: {e}"
                        )));
                    }
                    break;
                }
                h *= 0.5;
            }
            *h_out = h;
        }
        Ok(out)
    }
}

impl MetricPartials {
    fn richardson(fine: &Self, coarse: &Self) -> Self {
        let r = |f: &Matrix4<f64>, c: &Matrix4<f64>| (f * 4.0 - c) / 3.0;
        Self {
            g: fine.g,
            dg: std::array::from_fn(|i| r(&fine.dg[i], &coarse.dg[i])),
            ddg: std::array::from_fn(|i| std::array::from_fn(|j| r(&fine.ddg[i][j], &coarse.ddg[i][j]))),
        }
    }
}

fn eval_at(field: &dyn MetricField, point: &Point) -> Result<Matrix4<f64>> {
    field
        .metric(point)
        .map_err(|e| Error::Stencil(format!("stencil point {point:?} left the domain: {e}")))
}

fn shifted(point: &Point, moves: &[(usize, f64)]) -> Point {
    let mut p = *point;
    for &(i, d) in moves {
        p[i] += d;
    }
    p
}

fn fd_partials(field: &dyn MetricField, point: &Point, g0: &Matrix4<f64>, h: &[f64; 4]) -> Result<MetricPartials> {
    let mut plus = [Matrix4::zeros(); 4];
    let mut minus = [Matrix4::zeros(); 4];
    for i in 0..4 {
        plus[i] = eval_at(field, &shifted(point, &[(i, h[i])]))?;
        minus[i] = eval_at(field, &shifted(point, &[(i, -h[i])]))?;
    }
    let dg = std::array::from_fn(|i| (plus[i] - minus[i]) / (2.0 * h[i]));
    let mut ddg = [[Matrix4::zeros(); 4]; 4];
    for i in 0..4 {
        ddg[i][i] = (plus[i] - g0 * 2.0 + minus[i]) / (h[i] * h[i]);
        for j in (i + 1)..4 {
            let f = |si: f64, sj: f64| eval_at(field, &shifted(point, &[(i, si * h[i]), (j, sj * h[j])]));
            let m = (f(1.0, 1.0)? - f(1.0, -1.0)? - f(-1.0, 1.0)? + f(-1.0, -1.0)?) / (4.0 * h[i] * h[j]);
            ddg[i][j] = m;
            ddg[j][i] = m;
        }
    }
    Ok(MetricPartials { g: *g0, dg, ddg })
}

/// Ricci tensor and scalar of a metric from its first and second partials.
#[derive(Debug, Clone, PartialEq)]
pub struct Curvature {
    pub ricci: Matrix4<f64>,
    pub scalar: f64,
}

impl Curvature {
    /// `Ric_ab - (R/4) g_ab`.
    pub fn traceless(&self, g: &Matrix4<f64>) -> Matrix4<f64> {
        self.ricci - g * (self.scalar / 4.0)
    }
}

pub fn curvature_from_partials(d: &MetricPartials) -> Result<Curvature> {
    let gi = d
        .g
        .try_inverse()
        .ok_or_else(|| Error::Domain("metric is singular".into()))?;
    // Γ_dbc (first index lowered), Γᵃ_bc and ∂_e Γᵃ_bc.
    let lower = |b: usize, c: usize, dd: usize, dg: &[Matrix4<f64>; 4]| {
        0.5 * (dg[b][(dd, c)] + dg[c][(dd, b)] - dg[dd][(b, c)])
    };
    let mut gamma = [[[0.0; 4]; 4]; 4];
    for (a, ga) in gamma.iter_mut().enumerate() {
        for (b, gab) in ga.iter_mut().enumerate() {
            for (c, v) in gab.iter_mut().enumerate() {
                *v = (0..4).map(|dd| gi[(a, dd)] * lower(b, c, dd, &d.dg)).sum();
            }
        }
    }
    let dgi: [Matrix4<f64>; 4] = std::array::from_fn(|e| -(gi * d.dg[e] * gi));
    let mut dgamma = [[[[0.0; 4]; 4]; 4]; 4];
    for (e, de) in dgamma.iter_mut().enumerate() {
        for (a, da) in de.iter_mut().enumerate() {
            for (b, dab) in da.iter_mut().enumerate() {
                for (c, v) in dab.iter_mut().enumerate() {
                    *v = (0..4)
                        .map(|dd| {
                            dgi[e][(a, dd)] * lower(b, c, dd, &d.dg)
                                + gi[(a, dd)]
                                    * 0.5
                                    * (d.ddg[e][b][(dd, c)] + d.ddg[e][c][(dd, b)] - d.ddg[e][dd][(b, c)])
                        })
                        .sum();
                }
            }
        }
    }
    // Rᵃ_bcd = ∂_c Γᵃ_db − ∂_d Γᵃ_cb + Γᵃ_ce Γᵉ_db − Γᵃ_de Γᵉ_cb
    let riemann = |a: usize, b: usize, c: usize, dd: usize| {
        let quad: f64 = (0..4)
            .map(|e| gamma[a][c][e] * gamma[e][dd][b] - gamma[a][dd][e] * gamma[e][c][b])
            .sum();
        dgamma[c][a][dd][b] - dgamma[dd][a][c][b] + quad
    };
    let ricci = Matrix4::from_fn(|b, dd| (0..4).map(|a| riemann(a, b, dd, a)).sum());
    let ricci = (ricci + ricci.transpose()) * 0.5;
    let scalar = (gi.component_mul(&ricci)).sum();
    Ok(Curvature { ricci, scalar })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMethod {
    /// Central differences with Richardson extrapolation.
    FiniteDifference,
    /// Taylor arithmetic, exact up to rounding.
    Exact,
}

/// Residuals at one refinement level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureLevel {
    /// Multiple of the base step (1, 1/2, 1/4, …).
    pub fd_step: f64,
    /// 0 for plain central differences, 1 after one Richardson elimination.
    pub richardson_order: usize,
    pub max_traceless_ricci: f64,
    pub scalar_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub coords: Point,
    pub lambda: f64,
    pub method: DerivativeMethod,
    /// `max |Ric_ab - (R/4) g_ab|`.
    pub max_traceless_ricci: f64,
    /// `|R + 4Λ|`.
    pub scalar_defect: f64,
    pub scalar_curvature: f64,
    /// `max |g_ab|`, the natural size of the traceless Ricci components.
    pub metric_scale: f64,
    /// Base steps per coordinate (zero for exact partials).
    pub base_steps: [f64; 4],
    /// Finest step multiple that entered the result.
    pub fd_step: f64,
    pub richardson_order: usize,
    pub history: Vec<CurvatureLevel>,
    /// Set when refinement did not reduce the residuals between the two
    /// finest extrapolated levels.
    pub warning: Option<String>,
}

impl CurvatureReport {
    /// `max |C_ab| / max |g_ab|`.
    pub fn relative_traceless_ricci(&self) -> f64 {
        self.max_traceless_ricci / self.metric_scale
    }
}

/// Traceless Ricci and scalar defect of `field` at `point`, by central
/// differences with one Richardson elimination over `cfg.levels` steps.
pub fn curvature(field: &dyn MetricField, point: &Point, lambda: f64, cfg: &FdConfig) -> Result<CurvatureReport> {
    cfg.validate()?;
    let g = eval_at(field, point)?;
    let base = cfg.steps(field, point, &g)?;
    let raw: Vec<(f64, MetricPartials)> = (0..cfg.levels)
        .map(|k| {
            let s = 0.5f64.powi(k as i32);
            fd_partials(field, point, &g, &base.map(|h| h * s)).map(|d| (s, d))
        })
        .collect::<Result<_>>()?;
    // A second elimination would need the h⁴ term to dominate rounding,
    // which second differences at these steps do not deliver.
    let extrapolated: Vec<(f64, MetricPartials)> = raw
        .windows(2)
        .map(|w| (w[1].0, MetricPartials::richardson(&w[1].1, &w[0].1)))
        .collect();
    let mut history = Vec::new();
    for (order, table) in [(0, &raw), (1, &extrapolated)] {
        for (step, d) in table {
            let c = curvature_from_partials(d)?;
            history.push(CurvatureLevel {
                fd_step: *step,
                richardson_order: order,
                max_traceless_ricci: c.traceless(&g).amax(),
                scalar_defect: (c.scalar + 4.0 * lambda).abs(),
            });
        }
    }
    let (fd_step, finest) = extrapolated.last().expect("levels ≥ 2");
    let c = curvature_from_partials(finest)?;
    let top: Vec<&CurvatureLevel> = history.iter().filter(|l| l.richardson_order == 1).collect();
    // Second differences cannot resolve better than about eps/h².
    let h_min = base.iter().fold(f64::INFINITY, |m, &h| m.min(h * fd_step));
    let floor = 10.0 * f64::EPSILON / (h_min * h_min);
    let warning = match top.as_slice() {
        [.., prev, last]
            if last.max_traceless_ricci > 2.0 * prev.max_traceless_ricci.max(floor * g.amax())
                || last.scalar_defect > 2.0 * prev.scalar_defect.max(floor) =>
        {
            Some(format!(
                "Richardson not converging: traceless {:.3e} -> {:.3e}, scalar {:.3e} -> {:.3e}",
                prev.max_traceless_ricci, last.max_traceless_ricci, prev.scalar_defect, last.scalar_defect
            ))
        }
        _ => None,
    };
    Ok(CurvatureReport {
        coords: *point,
        lambda,
        method: DerivativeMethod::FiniteDifference,
        max_traceless_ricci: c.traceless(&g).amax(),
        scalar_defect: (c.scalar + 4.0 * lambda).abs(),
        scalar_curvature: c.scalar,
        metric_scale: g.amax(),
        base_steps: base,
        fd_step: *fd_step,
        richardson_order: 1,
        history,
        warning,
    })
}

/// As [`curvature`], from the field's exact partials.
pub fn curvature_exact(field: &dyn MetricField, point: &Point, lambda: f64) -> Result<CurvatureReport> {
    let d = field
        .metric_partials(point)
        .ok_or_else(|| Error::Schema("metric field has no exact partials".into()))??;
    let c = curvature_from_partials(&d)?;
    Ok(CurvatureReport {
        coords: *point,
        lambda,
        method: DerivativeMethod::Exact,
        max_traceless_ricci: c.traceless(&d.g).amax(),
        scalar_defect: (c.scalar + 4.0 * lambda).abs(),
        scalar_curvature: c.scalar,
        metric_scale: d.g.amax(),
        base_steps: [0.0; 4],
        fd_step: 0.0,
        richardson_order: 0,
        history: Vec::new(),
        warning: None,
    })
}

type Components = dyn Fn(&Point) -> Result<Point> + Send + Sync;
type Jacobian = dyn Fn(&Point) -> Result<Matrix4<f64>> + Send + Sync;

/// A vector field on a chart, given by its components and optionally by
/// its exact Jacobian `J[(c, a)] = ∂_a Kᶜ`.
#[derive(Clone)]
pub struct KillingVectorField {
    pub name: String,
    components: Arc<Components>,
    jacobian: Option<Arc<Jacobian>>,
}

impl std::fmt::Debug for KillingVectorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KillingVectorField").field("name", &self.name).finish()
    }
}

impl KillingVectorField {
    pub fn new(name: impl Into<String>, components: impl Fn(&Point) -> Result<Point> + Send + Sync + 'static) -> Self {
        Self { name: name.into(), components: Arc::new(components), jacobian: None }
    }

    pub fn with_jacobian(mut self, jacobian: impl Fn(&Point) -> Result<Matrix4<f64>> + Send + Sync + 'static) -> Self {
        self.jacobian = Some(Arc::new(jacobian));
        self
    }

    pub fn at(&self, point: &Point) -> Result<Point> {
        (self.components)(point)
    }

    pub fn jacobian(&self, point: &Point) -> Option<Result<Matrix4<f64>>> {
        self.jacobian.as_ref().map(|j| j(point))
    }

    /// `∂_q`.
    pub fn k1() -> Self {
        Self::new("K1", |_| Ok([1.0, 0.0, 0.0, 0.0])).with_jacobian(|_| Ok(Matrix4::zeros()))
    }

    /// `∂_p`.
    pub fn k2() -> Self {
        Self::new("K2", |_| Ok([0.0, 1.0, 0.0, 0.0])).with_jacobian(|_| Ok(Matrix4::zeros()))
    }

    /// The third generator in the hyperheavenly chart,
    /// `a0(p∂q + y∂x) + b0(q∂q − y∂y) + n0(q∂p + x∂y) + m0(p∂p − x∂x)`.
    pub fn k3(c: StructureConstants) -> Self {
        #[rustfmt::skip]
        let m = Matrix4::new(
            c.b0, c.a0, 0.0, 0.0,
            c.n0, c.m0, 0.0, 0.0,
            0.0, 0.0, -c.m0, c.a0,
            0.0, 0.0, c.n0, -c.b0,
        );
        Self::new("K3", move |v| {
            let k = m * nalgebra::Vector4::from(*v);
            Ok([k[0], k[1], k[2], k[3]])
        })
        .with_jacobian(move |_| Ok(m))
    }

    /// The third generator carried to the `(q, p, x, w)` chart of the
    /// example through `y = Z(w)/x²`.
    pub fn k3_example(c: StructureConstants, params: ExampleParams) -> Self {
        let jets = move |v: &Point| -> Result<(Jet2, Jet2)> {
            let (x0, w0) = (v[X], v[Y]);
            let (x, w) = (Jet2::var_x(x0, w0), Jet2::var_y(x0, w0));
            let zd = params.z_derivatives(w0)?;
            let z = w.lift(&zd);
            let z1 = w.lift(&[zd[1], zd[2], zd[3], zd[4], 0.0]);
            let y = z.try_div(&(x * x), "x²")?;
            let kx = y * c.a0 - x * c.m0;
            let ky = y * -c.b0 + x * c.n0;
            let kw = (x * x * ky + x * y * kx * 2.0).try_div(&z1, "Z'")?;
            Ok((kx, kw))
        };
        let linear = move |v: &Point| [c.a0 * v[P] + c.b0 * v[Q], c.n0 * v[Q] + c.m0 * v[P]];
        Self::new("K3", move |v| {
            let (kx, kw) = jets(v)?;
            let [kq, kp] = linear(v);
            Ok([kq, kp, kx.value(), kw.value()])
        })
        .with_jacobian(move |v| {
            let (kx, kw) = jets(v)?;
            let mut m = Matrix4::zeros();
            m[(Q, Q)] = c.b0;
            m[(Q, P)] = c.a0;
            m[(P, Q)] = c.n0;
            m[(P, P)] = c.m0;
            m[(X, X)] = kx.coeff(1, 0);
            m[(X, Y)] = kx.coeff(0, 1);
            m[(Y, X)] = kw.coeff(1, 0);
            m[(Y, Y)] = kw.coeff(0, 1);
            Ok(m)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KillingReport {
    pub name: String,
    pub coords: Point,
    pub method: DerivativeMethod,
    /// `max |(L_K g)_ab|`.
    pub residual: f64,
    pub metric_scale: f64,
}

impl KillingReport {
    pub fn relative_residual(&self) -> f64 {
        self.residual / self.metric_scale
    }
}

fn lie_derivative(k: &Point, g: &Matrix4<f64>, dg: &[Matrix4<f64>; 4], dk: &Matrix4<f64>) -> Matrix4<f64> {
    Matrix4::from_fn(|a, b| {
        (0..4)
            .map(|c| k[c] * dg[c][(a, b)] + g[(c, b)] * dk[(c, a)] + g[(a, c)] * dk[(c, b)])
            .sum::<f64>()
    })
}

/// `max |(L_K g)_ab|` at `point`, with
/// `(L_K g)_ab = Kᶜ ∂_c g_ab + g_cb ∂_a Kᶜ + g_ac ∂_b Kᶜ`. Partials of the
/// metric and of `K` are Richardson-extrapolated central differences.
pub fn killing_residual(k: &KillingVectorField, field: &dyn MetricField, point: &Point, cfg: &FdConfig) -> Result<KillingReport> {
    cfg.validate()?;
    let g = eval_at(field, point)?;
    let base = cfg.steps(field, point, &g)?;
    let kv = k.at(point)?;
    let first = |s: f64| -> Result<([Matrix4<f64>; 4], Matrix4<f64>)> {
        let mut dg = [Matrix4::zeros(); 4];
        let mut dk = Matrix4::zeros();
        for a in 0..4 {
            let h = base[a] * s;
            let (pp, pm) = (shifted(point, &[(a, h)]), shifted(point, &[(a, -h)]));
            dg[a] = (eval_at(field, &pp)? - eval_at(field, &pm)?) / (2.0 * h);
            let kp = k.at(&pp).map_err(|e| Error::Stencil(format!("{pp:?}: {e}")))?;
            let km = k.at(&pm).map_err(|e| Error::Stencil(format!("{pm:?}: {e}")))?;
            for c in 0..4 {
                dk[(c, a)] = (kp[c] - km[c]) / (2.0 * h);
            }
        }
        Ok((dg, dk))
    };
    let levels = (0..cfg.levels)
        .map(|k| first(0.5f64.powi(k as i32)))
        .collect::<Result<Vec<_>>>()?;
    let (coarse, fine) = (&levels[levels.len() - 2], &levels[levels.len() - 1]);
    let dg: [Matrix4<f64>; 4] = std::array::from_fn(|i| (fine.0[i] * 4.0 - coarse.0[i]) / 3.0);
    let dk = (fine.1 * 4.0 - coarse.1) / 3.0;
    Ok(KillingReport {
        name: k.name.clone(),
        coords: *point,
        method: DerivativeMethod::FiniteDifference,
        residual: lie_derivative(&kv, &g, &dg, &dk).amax(),
        metric_scale: g.amax(),
    })
}

/// As [`killing_residual`], from the exact partials of the metric and the
/// exact Jacobian of `K`.
pub fn killing_residual_exact(k: &KillingVectorField, field: &dyn MetricField, point: &Point) -> Result<KillingReport> {
    let d = field
        .metric_partials(point)
        .ok_or_else(|| Error::Schema("metric field has no exact partials".into()))??;
    let dk = k
        .jacobian(point)
        .ok_or_else(|| Error::Schema(format!("{} has no exact Jacobian", k.name)))??;
    let kv = k.at(point)?;
    Ok(KillingReport {
        name: k.name.clone(),
        coords: *point,
        method: DerivativeMethod::Exact,
        residual: lie_derivative(&kv, &d.g, &d.dg, &dk).amax(),
        metric_scale: d.g.amax(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ex(l: f64, z0: f64) -> ExampleParams {
        ExampleParams::new(l, z0).unwrap()
    }

    #[test]
    fn flat_key_reads_off_the_cosmological_terms() {
        let (x, y, l) = (0.7, -1.3, 2.0);
        let theta = Jet2::var_x(x, y).constant_like(0.0);
        let s = metric_from_key(&theta, [0.1, 0.2, x, y], l);
        let l3 = l / 3.0;
        assert_relative_eq!(s.g[(Q, Q)], 2.0 * l3 * y * y, epsilon = 1e-15);
        assert_relative_eq!(s.g[(Q, P)], -2.0 * l3 * x * y, epsilon = 1e-15);
        assert_relative_eq!(s.g[(P, P)], 2.0 * l3 * x * x, epsilon = 1e-15);
        assert_eq!((s.g[(Q, Y)], s.g[(P, X)]), (1.0, -1.0));
        assert!(s.is_symmetric());
    }

    #[test]
    fn flat_block_at_origin_is_neutral() {
        let theta = Jet2::var_x(0.0, 0.0).constant_like(0.0);
        let s = metric_from_key(&theta, [0.0; 4], 1.0);
        assert_relative_eq!(s.det(), 1.0, epsilon = 1e-15);
        assert!(s.is_neutral());
    }

    #[test]
    fn signature_survives_spread_and_rejects_degeneracy() {
        let mut g = Matrix4::zeros();
        g[(0, 0)] = 1e9;
        for (a, b) in [(0, 3), (1, 2)] {
            g[(a, b)] = 1.0;
            g[(b, a)] = 1.0;
        }
        let s = MetricSample { coords: [0.0; 4], g };
        assert_eq!(s.signature(), Some((2, 2)));
        let mut bad = Matrix4::identity();
        bad[(1, 0)] = 1.0;
        bad[(0, 1)] = 1.0;
        bad[(1, 1)] = 1.0 + 1e-13;
        assert_eq!(MetricSample { coords: [0.0; 4], g: bad }.signature(), None);
        assert_eq!(MetricSample { coords: [0.0; 4], g: Matrix4::zeros() }.signature(), None);
    }

    #[test]
    fn example_metric_at_unit_point() {
        let s = metric_example([0.0, 0.0, 1.0, 1.0], &ex(1.0, 1.0)).unwrap();
        assert!(s.is_symmetric());
        assert!(s.g.iter().all(|v| v.is_finite()));
        assert_eq!(s.signature(), Some((2, 2)));
    }

    #[test]
    fn example_dp2_coefficient() {
        for (l, x, w) in [(1.0, 1.3, 0.7), (-1.0, -0.4, 2.5), (2.0, 3.0, 0.05)] {
            let s = metric_example([0.0, 0.0, x, w], &ex(l, 1.5)).unwrap();
            let expect = -2.0 * x * x * (3.0 * w - l) / (2.0 * w + l) * (l / 3.0);
            assert_relative_eq!(s.g[(P, P)], expect, max_relative = 1e-15);
        }
    }

    #[test]
    fn example_metric_ignores_q_and_p() {
        let e = ex(-1.0, 2.0);
        let a = metric_example([0.0, 0.0, 1.1, 0.8], &e).unwrap();
        let b = metric_example([5.0, -3.0, 1.1, 0.8], &e).unwrap();
        assert_eq!(a.g, b.g);
    }

    #[test]
    fn example_poles_are_rejected() {
        let e = ex(1.0, 1.0);
        assert!(matches!(metric_example([0.0, 0.0, 1.0, 0.0], &e), Err(Error::Pole { .. })));
        assert!(matches!(metric_example([0.0, 0.0, 1.0, -0.5], &e), Err(Error::Pole { .. })));
        assert!(metric_example([0.0, 0.0, 1.0, -0.1], &e).is_err());
        assert!(metric_example([0.0, 0.0, 0.0, 1.0], &e).is_err());
    }

    #[test]
    fn chart_coherence() {
        for (l, z0, x, w) in [(1.0, 1.0, 1.0, 1.0), (-1.0, 2.0, 0.6, 0.3), (1.0, -1.0, 1.7, 0.02), (-1.0, 1.0, 2.0, 4.0)] {
            let e = ex(l, z0);
            let a = metric_example([0.0, 0.0, x, w], &e).unwrap();
            let b = example_metric_via_key([0.0, 0.0, x, w], &e).unwrap();
            let scale = a.g.amax();
            assert!((a.g - b.g).amax() <= 1e-12 * scale, "({l},{z0},{x},{w}): {}", (a.g - b.g).amax() / scale);
        }
    }

    #[test]
    fn constant_metric_is_flat() {
        let flat = |_: &Point| Ok(Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 1.0, -1.0, -1.0)));
        let r = curvature(&flat, &[0.3, -0.2, 1.0, 2.0], 0.0, &FdConfig::default()).unwrap();
        assert_eq!(r.max_traceless_ricci, 0.0);
        assert_eq!(r.scalar_defect, 0.0);
    }

    #[test]
    fn product_of_unit_spheres() {
        // S² × S², each of unit radius: Ric = g in the usual sign, so
        // R = -4 here, i.e. Λ = 1.
        let metric = |v: &Point| {
            let (s1, s2) = (v[0].sin(), v[2].sin());
            Ok(Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, s1 * s1, 1.0, s2 * s2)))
        };
        let r = curvature(&metric, &[1.1, 0.3, 0.7, -2.0], 1.0, &FdConfig::default()).unwrap();
        assert!(r.scalar_defect < 1e-9, "{r:?}");
        assert!(r.max_traceless_ricci < 1e-9, "{r:?}");
        assert!(r.warning.is_none(), "{r:?}");
    }

    #[test]
    fn heaven_limit_is_ricci_flat() {
        // Λ = 0 and a quadratic key function give a constant metric.
        let key = KeyMetric { lambda: 0.0, key: |x: f64, y: f64| {
            let (xj, yj) = (Jet2::var_x(x, y), Jet2::var_y(x, y));
            Ok(xj * xj * 0.5 + xj * yj * 0.25 - yj * yj)
        } };
        let r = curvature(&key, &[0.2, 0.1, 0.4, -0.3], 0.0, &FdConfig::default()).unwrap();
        assert!(r.max_traceless_ricci < 1e-9 && r.scalar_defect < 1e-9, "{r:?}");
    }

    #[test]
    fn example_is_einstein() {
        for (l, z0, x, w) in [(1.0, 1.0, 1.0, 1.0), (-1.0, 1.0, 1.3, 0.3), (1.0, 2.0, 0.8, 0.2)] {
            let r = curvature(&ExampleMetric(ex(l, z0)), &[0.0, 0.0, x, w], l, &FdConfig::default()).unwrap();
            assert!(r.scalar_defect <= 1e-6, "{r:?}");
            assert!(r.max_traceless_ricci <= 1e-6 * r.metric_scale, "{r:?}");
        }
    }

    #[test]
    fn stencil_outside_domain_is_reported() {
        let e = ex(1.0, 1.0);
        // 12w + Λ > 0 fails within the smallest allowed step of w = -1/12.
        let w = -1.0 / 12.0 + 1e-12;
        let err = curvature(&ExampleMetric(e), &[0.0, 0.0, 1.0, w], 1.0, &FdConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Stencil(_)), "{err:?}");
    }

    #[test]
    fn translations_are_exact_symmetries() {
        let e = ExampleMetric(ex(1.0, 1.0));
        for k in [KillingVectorField::k1(), KillingVectorField::k2()] {
            let r = killing_residual(&k, &e, &[0.3, -0.7, 1.2, 0.9], &FdConfig::default()).unwrap();
            assert!(r.residual <= 1e-9, "{r:?}");
        }
    }

    #[test]
    fn third_generator_of_the_example() {
        let p = ex(-1.0, 1.0);
        let consts = StructureConstants { b0: 1.0, n0: 0.0, a0: 0.0, m0: -0.5 };
        let k = KillingVectorField::k3_example(consts, p);
        let kv = k.at(&[1.0, 2.0, 3.0, 0.7]).unwrap();
        assert!(kv[3].abs() <= 1e-14 * kv[2].abs(), "{kv:?}");
        let r = killing_residual(&k, &ExampleMetric(p), &[0.4, 0.5, 1.1, 0.7], &FdConfig::default()).unwrap();
        assert!(r.residual <= 1e-6 * r.metric_scale, "{r:?}");

        // A different row of constants is not a symmetry of this metric.
        let other = StructureConstants { b0: 1.0, n0: 0.0, a0: 0.0, m0: -1.0 };
        let bad = KillingVectorField::k3_example(other, p);
        let r = killing_residual(&bad, &ExampleMetric(p), &[0.4, 0.5, 1.1, 0.7], &FdConfig::default()).unwrap();
        assert!(r.residual > 1e-3 * r.metric_scale, "{r:?}");
    }

    #[test]
    fn record_is_row_major() {
        let s = metric_example([0.0, 0.0, 1.0, 1.0], &ex(1.0, 1.0)).unwrap();
        let rec = s.record();
        assert_eq!(rec.g[4 * Q + X], s.g[(Q, X)]);
        assert_eq!(rec.g.len(), 16);
        let json = serde_json::to_string(&rec).unwrap();
        let back: MetricRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rec);
    }
}
