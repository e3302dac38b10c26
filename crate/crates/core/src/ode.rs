//! Dormand–Prince 5(4) integrator with Hairer's continuous extension,
//! event location on the dense output, and CSV export.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::roots::brent;

/// Scalar event function `g(t, y)`; a sign change marks or halts the run.
#[derive(Clone)]
pub struct Event {
    pub name: String,
    pub terminal: bool,
    pub func: Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>,
}

impl Event {
    pub fn new(
        name: impl Into<String>,
        terminal: bool,
        func: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            terminal,
            func: Arc::new(func),
        }
    }
}

impl fmt::Debug for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Event")
            .field("name", &self.name)
            .field("terminal", &self.terminal)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// Smallest step tolerated before the run is declared singular.
    pub min_step: f64,
    pub max_steps: usize,
    pub events: Vec<Event>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: f64::INFINITY,
            min_step: 1e-13,
            max_steps: 200_000,
            events: Vec::new(),
        }
    }
}

impl IntegratorConfig {
    pub fn with_tol(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..Self::default()
        }
    }

    pub fn with_event(mut self, e: Event) -> Self {
        self.events.push(e);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.max_step > 0.0) {
            return Err(Error::Schema(
                "tolerances and max_step must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventRecord {
    pub name: String,
    pub t: f64,
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Status {
    Completed,
    TerminalEvent(String),
    /// Step size collapsed or the right-hand side failed; the trajectory
    /// stops at the last accepted point.
    Singular { at: f64, reason: String },
}

/// One accepted step's continuous extension.
#[derive(Debug, Clone)]
struct Segment {
    t0: f64,
    h: f64,
    r: [Vec<f64>; 5],
}

impl Segment {
    fn eval(&self, t: f64) -> Vec<f64> {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let [r1, r2, r3, r4, r5] = &self.r;
        (0..r1.len())
            .map(|i| r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i]))))
            .collect()
    }
}

/// Accepted mesh, states, derivatives, dense output and event log.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    pub dy: Vec<Vec<f64>>,
    pub events: Vec<EventRecord>,
    pub status: Status,
    segments: Vec<Segment>,
}

impl Trajectory {
    pub fn t_start(&self) -> f64 {
        self.t[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.t.last().expect("nonempty mesh")
    }

    /// Covered interval as `(lo, hi)` regardless of direction.
    pub fn interval(&self) -> (f64, f64) {
        let (a, b) = (self.t_start(), self.t_end());
        (a.min(b), a.max(b))
    }

    pub fn contains(&self, t: f64) -> bool {
        let (lo, hi) = self.interval();
        t >= lo && t <= hi
    }

    pub fn dim(&self) -> usize {
        self.y[0].len()
    }

    pub fn is_complete(&self) -> bool {
        self.status == Status::Completed
    }

    /// Dense-output state at `t`.
    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        let (lo, hi) = self.interval();
        if !(t >= lo && t <= hi) {
            return Err(Error::Extrapolation { at: t, lo, hi });
        }
        if self.segments.is_empty() {
            return Ok(self.y[0].clone());
        }
        let forward = self.t_end() >= self.t_start();
        // Index of the first mesh point past t.
        let k = self
            .t
            .partition_point(|&s| if forward { s <= t } else { s >= t })
            .clamp(1, self.segments.len());
        Ok(self.segments[k - 1].eval(t))
    }

    /// `n` equally spaced samples over the covered interval.
    pub fn sample(&self, n: usize) -> Result<Vec<(f64, Vec<f64>)>> {
        let (a, b) = (self.t_start(), self.t_end());
        (0..n)
            .map(|k| {
                let t = if n == 1 {
                    a
                } else {
                    a + (b - a) * k as f64 / (n - 1) as f64
                };
                Ok((t, self.eval(t)?))
            })
            .collect()
    }

    /// CSV with columns `t, <names>, d_<names>` on the accepted mesh.
    pub fn write_csv<W: Write>(&self, out: W, names: &[&str]) -> Result<()> {
        if names.len() != self.dim() {
            return Err(Error::Schema(format!(
                "{} column names for a {}-dimensional state",
                names.len(),
                self.dim()
            )));
        }
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend(names.iter().map(|n| n.to_string()));
        header.extend(names.iter().map(|n| format!("d_{n}")));
        w.write_record(&header)?;
        for k in 0..self.t.len() {
            let mut row = vec![format!("{:.17e}", self.t[k])];
            row.extend(self.y[k].iter().map(|v| format!("{v:.17e}")));
            row.extend(self.dy[k].iter().map(|v| format!("{v:.17e}")));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn combo(y: &[f64], h: f64, terms: &[(f64, &[f64])]) -> Vec<f64> {
    (0..y.len())
        .map(|i| y[i] + h * terms.iter().map(|(a, k)| a * k[i]).sum::<f64>())
        .collect()
}

fn checked<F>(rhs: &F, t: f64, y: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
{
    let f = rhs(t, y)?;
    if f.iter().all(|v| v.is_finite()) {
        Ok(f)
    } else {
        Err(Error::Domain(format!("non-finite derivative at t = {t}")))
    }
}

struct StepResult {
    y1: Vec<f64>,
    k7: Vec<f64>,
    err: f64,
    seg: Segment,
}

fn dp_step<F>(rhs: &F, t: f64, y: &[f64], k1: &[f64], h: f64, cfg: &IntegratorConfig) -> Result<StepResult>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
{
    let k2 = checked(rhs, t + C2 * h, &combo(y, h, &[(A21, k1)]))?;
    let k3 = checked(rhs, t + C3 * h, &combo(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = checked(
        rhs,
        t + C4 * h,
        &combo(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]),
    )?;
    let k5 = checked(
        rhs,
        t + C5 * h,
        &combo(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    )?;
    let k6 = checked(
        rhs,
        t + h,
        &combo(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    )?;
    let y1 = combo(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = checked(rhs, t + h, &y1)?;

    let n = y.len();
    let mut acc = 0.0;
    for i in 0..n {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sk = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y1[i].abs());
        acc += (e / sk).powi(2);
    }
    let err = (acc / n as f64).sqrt();

    let r2: Vec<f64> = (0..n).map(|i| y1[i] - y[i]).collect();
    let r3: Vec<f64> = (0..n).map(|i| h * k1[i] - r2[i]).collect();
    let r4: Vec<f64> = (0..n).map(|i| r2[i] - h * k7[i] - r3[i]).collect();
    let r5: Vec<f64> = (0..n)
        .map(|i| {
            h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
        })
        .collect();
    Ok(StepResult {
        y1,
        k7,
        err,
        seg: Segment {
            t0: t,
            h,
            r: [y.to_vec(), r2, r3, r4, r5],
        },
    })
}

fn initial_step<F>(rhs: &F, t0: f64, y0: &[f64], f0: &[f64], dir: f64, cfg: &IntegratorConfig) -> f64
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
{
    let n = y0.len() as f64;
    let sk: Vec<f64> = y0.iter().map(|v| cfg.abs_tol + cfg.rel_tol * v.abs()).collect();
    let norm = |v: &[f64]| (v.iter().zip(&sk).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / n).sqrt();
    let (d0, d1) = (norm(y0), norm(f0));
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(cfg.max_step);
    let y1 = combo(y0, dir * h0, &[(1.0, f0)]);
    let d2 = match rhs(t0 + dir * h0, &y1) {
        Ok(f1) => {
            let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
            norm(&diff) / h0
        }
        Err(_) => return h0 * 1e-3,
    };
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(cfg.max_step)
}

/// Integrate `y' = rhs(t, y)` from `span.0` to `span.1`.
///
/// Errors only for invalid inputs or a failing right-hand side at the
/// initial point; later failures yield a partial trajectory whose status
/// carries the singularity report.
pub fn integrate<F>(rhs: F, y0: &[f64], span: (f64, f64), cfg: &IntegratorConfig) -> Result<Trajectory>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
{
    cfg.validate()?;
    let (t0, tf) = span;
    if !(t0.is_finite() && tf.is_finite()) || t0 == tf {
        return Err(Error::Schema(format!("degenerate span [{t0}, {tf}]")));
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Schema("non-finite initial state".into()));
    }
    let dir = (tf - t0).signum();
    let f0 = checked(&rhs, t0, y0)?;

    let mut traj = Trajectory {
        t: vec![t0],
        y: vec![y0.to_vec()],
        dy: vec![f0.clone()],
        events: Vec::new(),
        status: Status::Completed,
        segments: Vec::new(),
    };
    let mut g_prev: Vec<f64> = cfg.events.iter().map(|e| (e.func)(t0, y0)).collect();

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = f0;
    let mut h = initial_step(&rhs, t0, y0, &k1, dir, cfg);
    let mut rejected_last = false;

    for _ in 0..cfg.max_steps {
        let remaining = (tf - t).abs();
        if remaining <= 1e-14 * t.abs().max(1.0) {
            return Ok(traj);
        }
        h = h.min(cfg.max_step).min(remaining);
        if h < cfg.min_step * t.abs().max(1.0) {
            traj.status = Status::Singular {
                at: t,
                reason: format!("step size underflow (h = {h:e})"),
            };
            return Ok(traj);
        }
        let step = match dp_step(&rhs, t, &y, &k1, dir * h, cfg) {
            Ok(s) if s.err.is_finite() => s,
            Ok(_) | Err(_) => {
                h *= 0.25;
                rejected_last = true;
                continue;
            }
        };
        if step.err > 1.0 {
            let fac = (0.9 * step.err.powf(-0.2)).max(0.2);
            h *= fac;
            rejected_last = true;
            continue;
        }

        let t_new = if h == remaining { tf } else { t + dir * h };
        let seg = step.seg;
        let mut y_new = step.y1;
        let mut k_new = step.k7;
        let mut t_stop = t_new;
        let mut hit: Option<(usize, f64)> = None;

        // Earliest event sign change inside the step.
        for (ei, ev) in cfg.events.iter().enumerate() {
            let g1 = (ev.func)(t_new, &y_new);
            let g0 = g_prev[ei];
            if g0 != 0.0 && (g1 == 0.0 || g0.signum() != g1.signum()) {
                let loc = brent(|s| Ok((ev.func)(s, &seg.eval(s))), t, t_new, 1e-13)?;
                let earlier = match hit {
                    None => true,
                    Some((_, tl)) => (loc - t).abs() < (tl - t).abs(),
                };
                if earlier {
                    hit = Some((ei, loc));
                }
            }
        }
        if let Some((ei, loc)) = hit {
            let ev = &cfg.events[ei];
            traj.events.push(EventRecord {
                name: ev.name.clone(),
                t: loc,
                terminal: ev.terminal,
            });
            if ev.terminal {
                t_stop = loc;
                y_new = seg.eval(loc);
                k_new = checked(&rhs, loc, &y_new).unwrap_or_else(|_| vec![f64::NAN; y.len()]);
                traj.status = Status::TerminalEvent(ev.name.clone());
            }
        }
        traj.t.push(t_stop);
        traj.y.push(y_new.clone());
        traj.dy.push(k_new.clone());
        traj.segments.push(seg);
        if matches!(traj.status, Status::TerminalEvent(_)) {
            return Ok(traj);
        }
        g_prev = cfg.events.iter().map(|e| (e.func)(t_stop, &y_new)).collect();

        let mut fac = if step.err == 0.0 { 5.0 } else { 0.9 * step.err.powf(-0.2) };
        fac = fac.clamp(0.2, 5.0);
        if rejected_last {
            fac = fac.min(1.0);
        }
        rejected_last = false;
        h *= fac;
        t = t_stop;
        y = y_new;
        k1 = k_new;
    }
    traj.status = Status::Singular {
        at: t,
        reason: format!("step budget {} exhausted", cfg.max_steps),
    };
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn exp_rhs(_: f64, y: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![y[0]])
    }

    #[test]
    fn exponential_growth() {
        let cfg = IntegratorConfig::with_tol(1e-10, 1e-12);
        let tr = integrate(exp_rhs, &[1.0], (0.0, 1.0), &cfg).unwrap();
        assert!(tr.is_complete());
        assert_relative_eq!(tr.y.last().unwrap()[0], std::f64::consts::E, max_relative = 1e-9);
        assert_relative_eq!(tr.eval(0.37).unwrap()[0], 0.37f64.exp(), max_relative = 1e-9);
    }

    #[test]
    fn backward_integration() {
        let cfg = IntegratorConfig::default();
        let tr = integrate(exp_rhs, &[1.0], (0.0, -2.0), &cfg).unwrap();
        assert_relative_eq!(tr.t_end(), -2.0);
        assert_relative_eq!(tr.eval(-1.3).unwrap()[0], (-1.3f64).exp(), max_relative = 1e-9);
    }

    #[test]
    fn error_scales_with_tolerance() {
        let mut errs = Vec::new();
        for tol in [1e-6, 1e-8, 1e-10] {
            let cfg = IntegratorConfig::with_tol(tol, tol * 1e-2);
            let tr = integrate(exp_rhs, &[1.0], (0.0, 1.0), &cfg).unwrap();
            errs.push(((tr.y.last().unwrap()[0] - std::f64::consts::E) / std::f64::consts::E).abs());
        }
        for (e, tol) in errs.iter().zip([1e-6, 1e-8, 1e-10]) {
            assert!(*e <= 10.0 * tol, "error {e:e} at tol {tol:e}");
        }
    }

    #[test]
    fn terminal_event_is_bracketed() {
        // y = cos t hits zero at π/2.
        let cfg = IntegratorConfig::with_tol(1e-10, 1e-12)
            .with_event(Event::new("zero", true, |_, y| y[0]));
        let tr = integrate(|_, y| Ok(vec![y[1], -y[0]]), &[1.0, 0.0], (0.0, 5.0), &cfg).unwrap();
        assert_eq!(tr.status, Status::TerminalEvent("zero".into()));
        assert!((tr.t_end() - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
        assert_eq!(tr.events.len(), 1);
    }

    #[test]
    fn marking_event_does_not_stop() {
        let cfg = IntegratorConfig::default().with_event(Event::new("half", false, |t, _| t - 0.5));
        let tr = integrate(exp_rhs, &[1.0], (0.0, 1.0), &cfg).unwrap();
        assert!(tr.is_complete());
        assert!((tr.events[0].t - 0.5).abs() < 1e-12);
    }

    #[test]
    fn blow_up_gives_partial_trajectory() {
        // y' = y², y(0) = 1 blows up at t = 1.
        let tr = integrate(|_, y| Ok(vec![y[0] * y[0]]), &[1.0], (0.0, 2.0), &IntegratorConfig::default())
            .unwrap();
        match tr.status {
            Status::Singular { at, .. } => assert!((at - 1.0).abs() < 1e-3),
            s => panic!("unexpected status {s:?}"),
        }
        assert!(tr.eval(1.5).is_err());
    }

    #[test]
    fn rhs_failure_is_reported_as_singular() {
        let rhs = |t: f64, y: &[f64]| {
            if t > 0.7 {
                Err(Error::SingularState {
                    factor: "test".into(),
                    value: 0.0,
                })
            } else {
                Ok(vec![y[0]])
            }
        };
        let tr = integrate(rhs, &[1.0], (0.0, 1.0), &IntegratorConfig::default()).unwrap();
        assert!(matches!(tr.status, Status::Singular { .. }));
        assert!(tr.t_end() <= 0.7 && tr.t_end() > 0.69);
    }

    #[test]
    fn deterministic() {
        let cfg = IntegratorConfig::default();
        let a = integrate(|t, y| Ok(vec![t.sin() * y[0]]), &[1.0], (0.0, 3.0), &cfg).unwrap();
        let b = integrate(|t, y| Ok(vec![t.sin() * y[0]]), &[1.0], (0.0, 3.0), &cfg).unwrap();
        assert_eq!(a.t, b.t);
        assert_eq!(a.y, b.y);
    }

    #[test]
    fn csv_export() {
        let tr = integrate(exp_rhs, &[1.0], (0.0, 0.1), &IntegratorConfig::default()).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf, &["u"]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,u,d_u\n"));
        assert_eq!(text.lines().count(), tr.t.len() + 1);
    }
}
