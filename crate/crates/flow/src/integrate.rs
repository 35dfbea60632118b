use crate::rhs::{flow_rhs, FlowKind, FlowRhs};
use grflab_functional::{lambda_min, FunctionalError};
use grflab_geometry::{Geometry, GeometryError, GeometryState};
use grflab_tensor::{min_eigenvalue, Tensor};
use serde::Serialize;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum FlowError {
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowControl {
    pub t_end: f64,
    pub dt_initial: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Target local error per step (max-norm on `(g, b)`).
    pub tol: f64,
    /// Stop once `max(r_g, r_b)` falls below this.
    pub stop_residual: f64,
    pub kind: FlowKind,
    pub max_steps: usize,
}

impl FlowControl {
    /// Defaults for the given backend: local error `1e-10` homogeneous, `1e-7` lattice.
    pub fn for_state(state: &GeometryState, t_end: f64, kind: FlowKind) -> Self {
        FlowControl {
            t_end,
            dt_initial: 1e-2,
            dt_min: 1e-6,
            dt_max: 0.1,
            tol: if state.is_homogeneous() { 1e-10 } else { 1e-7 },
            stop_residual: 1e-9,
            kind,
            max_steps: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    ReachedEnd,
    /// `g` stopped being positive definite, or a step could not be made
    /// accurate enough at `dt_min`.
    Blowup { t: f64, detail: BlowupKind },
    StepLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowupKind {
    MetricDegenerate,
    StepUnderflow,
}

/// One CSV row of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub lambda: f64,
    pub r_g: f64,
    pub r_b: f64,
    pub min_eig_g: f64,
}

impl TrajectoryRow {
    pub fn residual(&self) -> f64 {
        self.r_g.max(self.r_b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    /// Decay rate `a` in `residual ≈ C e^{−a t}`; `None` when `r² < 0.99`.
    pub rate: Option<f64>,
    pub r_squared: f64,
    pub points: usize,
}

#[derive(Debug, Clone)]
pub struct FlowTrajectory {
    pub states: Vec<GeometryState>,
    pub rows: Vec<TrajectoryRow>,
    pub stop: StopReason,
    pub rate_fit: Option<RateFit>,
    pub rejected_steps: usize,
}

impl FlowTrajectory {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn lambda_series(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.lambda).collect()
    }

    pub fn final_state(&self) -> &GeometryState {
        self.states.last().expect("trajectory has its initial state")
    }

    pub fn final_residual(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.residual())
    }

    /// Largest decrease of λ between consecutive samples (0 if monotone).
    pub fn monotonicity_violation(&self) -> f64 {
        self.rows.windows(2).map(|w| w[0].lambda - w[1].lambda).fold(0.0, f64::max)
    }
}

fn advance(state: &GeometryState, rhs: &FlowRhs, dt: f64) -> Result<GeometryState, GeometryError> {
    state.with_gb(state.g().axpy(dt, &rhs.dg), state.b().axpy(dt, &rhs.db))
}

/// One classical RK4 step of size `dt` (negative `dt` integrates backwards).
pub fn rk4_step(state: &GeometryState, dt: f64, kind: FlowKind) -> Result<GeometryState, FlowError> {
    let k1 = flow_rhs(state, kind)?;
    let k2 = flow_rhs(&advance(state, &k1, 0.5 * dt)?, kind)?;
    let k3 = flow_rhs(&advance(state, &k2, 0.5 * dt)?, kind)?;
    let k4 = flow_rhs(&advance(state, &k3, dt)?, kind)?;
    let dg = k1.dg.axpy(2.0, &k2.dg).axpy(2.0, &k3.dg).axpy(1.0, &k4.dg);
    let db = k1.db.axpy(2.0, &k2.db).axpy(2.0, &k3.db).axpy(1.0, &k4.db);
    Ok(state.with_gb(state.g().axpy(dt / 6.0, &dg), state.b().axpy(dt / 6.0, &db))?)
}

fn record(state: &GeometryState, t: f64) -> Result<(GeometryState, TrajectoryRow), FlowError> {
    let res = lambda_min(state)?;
    let s = state.with_f(res.f.clone());
    let (r_g, r_b) = Geometry::new(&s).soliton_residual();
    let min_eig_g = min_eigenvalue(s.g()).data().iter().copied().fold(f64::INFINITY, f64::min);
    Ok((
        s,
        TrajectoryRow {
            t,
            lambda: res.lambda,
            r_g,
            r_b,
            min_eig_g,
        },
    ))
}

fn distance(a: &GeometryState, b: &GeometryState) -> f64 {
    (a.g() - b.g()).max_abs().max((a.b() - b.b()).max_abs())
}

fn richardson(fine: &GeometryState, coarse: &GeometryState) -> Result<GeometryState, GeometryError> {
    let extrap = |x: &Tensor, y: &Tensor| x.axpy(1.0 / 15.0, &(x - y));
    fine.with_gb(extrap(fine.g(), coarse.g()).sym(), extrap(fine.b(), coarse.b()).skew())
}

/// RK4 with step-doubling error control.
pub fn integrate(state0: &GeometryState, control: &FlowControl) -> Result<FlowTrajectory, FlowError> {
    let (s0, row0) = record(state0, 0.0)?;
    let mut states = vec![s0];
    let mut rows = vec![row0];
    let mut t = 0.0;
    let mut dt = control.dt_initial.clamp(control.dt_min, control.dt_max);
    let mut rejected = 0;
    let mut steps = 0;
    let stop = loop {
        let last = rows.last().unwrap();
        if last.residual() < control.stop_residual {
            break StopReason::Converged;
        }
        if t >= control.t_end * (1.0 - 1e-12) {
            break StopReason::ReachedEnd;
        }
        if steps >= control.max_steps {
            break StopReason::StepLimit;
        }
        let h = dt.min(control.t_end - t);
        let cur = states.last().unwrap();
        let attempt = rk4_step(cur, h, control.kind).and_then(|coarse| {
            let mid = rk4_step(cur, 0.5 * h, control.kind)?;
            let fine = rk4_step(&mid, 0.5 * h, control.kind)?;
            Ok((coarse, fine))
        });
        let (coarse, fine) = match attempt {
            Ok(pair) => pair,
            Err(FlowError::Geometry(GeometryError::Metric(_))) => {
                if h <= control.dt_min {
                    break StopReason::Blowup {
                        t,
                        detail: BlowupKind::MetricDegenerate,
                    };
                }
                rejected += 1;
                dt = (0.25 * h).max(control.dt_min);
                continue;
            }
            Err(e) => return Err(e),
        };
        let err = distance(&coarse, &fine) / 15.0;
        if err > control.tol && h > control.dt_min {
            rejected += 1;
            dt = (h * (0.9 * (control.tol / err).powf(0.2)).max(0.2)).max(control.dt_min);
            continue;
        }
        if err > control.tol * 1e3 {
            break StopReason::Blowup {
                t,
                detail: BlowupKind::StepUnderflow,
            };
        }
        let next = richardson(&fine, &coarse)?;
        t += h;
        steps += 1;
        let (s, row) = record(&next, t)?;
        states.push(s);
        rows.push(row);
        let grow = if err == 0.0 { 2.0 } else { (0.9 * (control.tol / err).powf(0.2)).clamp(0.2, 2.0) };
        dt = (h * grow).clamp(control.dt_min, control.dt_max);
    };
    let rate_fit = fit_rate(&rows);
    Ok(FlowTrajectory {
        states,
        rows,
        stop,
        rate_fit,
        rejected_steps: rejected,
    })
}

/// Least-squares fit of `ln residual` against `t` over the final decade of decay.
pub fn fit_rate(rows: &[TrajectoryRow]) -> Option<RateFit> {
    let last = rows.last()?.residual();
    if !(last > 0.0) {
        return None;
    }
    let start = rows.iter().rposition(|r| r.residual() > 10.0 * last).map_or(0, |i| i + 1);
    let window: Vec<(f64, f64)> = rows[start..]
        .iter()
        .filter(|r| r.residual() > 0.0)
        .map(|r| (r.t, r.residual().ln()))
        .collect();
    let n = window.len();
    if n < 3 {
        return None;
    }
    let nf = n as f64;
    let mt = window.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = window.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = window.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = window.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let syy: f64 = window.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = sxy * sxy / (sxx * syy);
    Some(RateFit {
        rate: (r_squared >= 0.99).then_some(-slope),
        r_squared,
        points: n,
    })
}
