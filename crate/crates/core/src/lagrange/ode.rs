//! Dormand-Prince 5(4) integration and Euler-Lagrange residuals along
//! integrated trajectories.

use std::collections::BTreeSet;

use super::{euler_lagrange_full, Lagrangian};
use crate::error::LagrangeError;
use crate::expr::{Expr, Guard, Var};
use crate::geometry::PathStructure;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h0: f64,
    pub hmin: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-10, atol: 1e-12, h0: 1e-3, hmin: 1e-12, max_steps: 1_000_000 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One trial step; `None` if a stage leaves the domain.
fn try_step<F>(rhs: &mut F, t: f64, y: &[f64], h: f64) -> Option<(Vec<f64>, Vec<f64>)>
where
    F: FnMut(f64, &[f64]) -> Option<Vec<f64>>,
{
    let d = y.len();
    let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
    for s in 0..7 {
        let mut ys = y.to_vec();
        for (j, kj) in k.iter().enumerate() {
            let a = A[s][j];
            if a != 0.0 {
                for i in 0..d {
                    ys[i] += h * a * kj[i];
                }
            }
        }
        k.push(rhs(t + C[s] * h, &ys)?);
    }
    let mut y5 = y.to_vec();
    let mut err = vec![0.0; d];
    for s in 0..7 {
        for i in 0..d {
            y5[i] += h * B[s] * k[s][i];
            err[i] += h * (B[s] - B4[s]) * k[s][i];
        }
    }
    Some((y5, err))
}

/// Integrate `y' = rhs(t, y)` from `t0` to `t1`. `admissible` names a
/// violated guard, if any; `observe` sees every accepted state.
pub fn dormand_prince<F, G, O>(
    mut rhs: F,
    mut admissible: G,
    t0: f64,
    y0: &[f64],
    t1: f64,
    opts: OdeOptions,
    mut observe: O,
) -> Result<(Vec<f64>, OdeStats), LagrangeError>
where
    F: FnMut(f64, &[f64]) -> Option<Vec<f64>>,
    G: FnMut(&[f64]) -> Option<String>,
    O: FnMut(f64, &[f64]) -> Result<(), LagrangeError>,
{
    if let Some(g) = admissible(y0) {
        return Err(LagrangeError::SingularTrajectory { t: t0, guard: g });
    }
    let mut stats = OdeStats::default();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut h = opts.h0.min(t1 - t0);
    observe(t, &y)?;
    let mut last_guard = String::from("right-hand side undefined");
    while t < t1 {
        if stats.accepted + stats.rejected > opts.max_steps {
            return Err(LagrangeError::StepUnderflow(t));
        }
        h = h.min(t1 - t);
        if h < opts.hmin {
            return Err(LagrangeError::SingularTrajectory { t, guard: last_guard });
        }
        let Some((y5, err)) = try_step(&mut rhs, t, &y, h) else {
            stats.rejected += 1;
            h *= 0.5;
            continue;
        };
        if let Some(g) = admissible(&y5) {
            last_guard = g;
            stats.rejected += 1;
            h *= 0.5;
            continue;
        }
        let mut norm = 0.0f64;
        for i in 0..y.len() {
            let sc = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
            norm = norm.max((err[i] / sc).abs());
        }
        if !norm.is_finite() {
            stats.rejected += 1;
            h *= 0.5;
            continue;
        }
        if norm <= 1.0 {
            t += h;
            y = y5;
            stats.accepted += 1;
            observe(t, &y)?;
        } else {
            stats.rejected += 1;
        }
        let factor = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    Ok((y, stats))
}

/// Initial data `(x, y, dy)` for a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub x: f64,
    pub y: Vec<f64>,
    pub dy: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtremalReport {
    pub max_residual: f64,
    pub per_trajectory: Vec<f64>,
    pub samples: usize,
    pub stats: OdeStats,
}

fn lookup<'a>(n: usize, t: f64, s: &'a [f64], acc: &'a [f64]) -> impl Fn(Var) -> Option<f64> + 'a {
    move |v| match v {
        Var::X => Some(t),
        Var::Y(i) if (i as usize) >= 1 && (i as usize) <= n => Some(s[i as usize - 1]),
        Var::Dy(i) if (i as usize) >= 1 && (i as usize) <= n => Some(s[n + i as usize - 1]),
        Var::Ddy(i) if (i as usize) >= 1 && (i as usize) <= acc.len() => Some(acc[i as usize - 1]),
        _ => None,
    }
}

/// Integrate `y'' = f` from each jet over `[x, x + horizon]` and report the
/// largest Euler-Lagrange residual of `l` along the trajectories, with the
/// accelerations taken from `f`.
pub fn numeric_extremal_check(
    l: &Lagrangian,
    p: &PathStructure,
    jets: &[Jet],
    horizon: f64,
    rtol: f64,
) -> Result<ExtremalReport, LagrangeError> {
    let n = p.n();
    if l.n() != n {
        return Err(LagrangeError::DimensionMismatch { expected: n, got: l.n() });
    }
    let el: Vec<Expr> = euler_lagrange_full(l);
    let mut guards: BTreeSet<Guard> = l.guards();
    guards.extend(p.guards());
    for e in &el {
        guards.extend(e.guards());
    }
    let f = p.f().to_vec();
    let opts = OdeOptions { rtol, ..OdeOptions::default() };

    let mut per_trajectory = Vec::with_capacity(jets.len());
    let mut samples = 0;
    let mut stats = OdeStats::default();
    for jet in jets {
        if jet.y.len() != n || jet.dy.len() != n {
            return Err(LagrangeError::DimensionMismatch { expected: n, got: jet.y.len() });
        }
        let mut y0 = jet.y.clone();
        y0.extend_from_slice(&jet.dy);
        let eval_f = |t: f64, s: &[f64]| -> Option<Vec<f64>> {
            let look = lookup(n, t, s, &[]);
            f.iter().map(|e| e.eval_f64(&look).ok().filter(|v| v.is_finite())).collect()
        };
        let rhs = |t: f64, s: &[f64]| -> Option<Vec<f64>> {
            let acc = eval_f(t, s)?;
            let mut out = s[n..].to_vec();
            out.extend(acc);
            Some(out)
        };
        // guards are checked at the start of the step; `t` is only known
        // through the observer, so x-dependent guards use the last time
        let t_cell = std::cell::Cell::new(jet.x);
        let admissible = |s: &[f64]| -> Option<String> {
            let look = lookup(n, t_cell.get(), s, &[]);
            guards.iter().find(|g| !g.holds(&look, 0.0)).map(|g| g.to_string())
        };
        let mut worst = 0.0f64;
        let observe = |t: f64, s: &[f64]| -> Result<(), LagrangeError> {
            t_cell.set(t);
            let acc = eval_f(t, s).ok_or_else(|| LagrangeError::SingularTrajectory {
                t,
                guard: "right-hand side undefined".into(),
            })?;
            let look = lookup(n, t, s, &acc);
            for e in &el {
                let r = e.eval_f64(&look)?;
                worst = worst.max(r.abs());
            }
            samples += 1;
            Ok(())
        };
        let (_, st) = dormand_prince(rhs, admissible, jet.x, &y0, jet.x + horizon, opts, observe)?;
        stats.accepted += st.accepted;
        stats.rejected += st.rejected;
        per_trajectory.push(worst);
    }
    let max_residual = per_trajectory.iter().copied().fold(0.0, f64::max);
    Ok(ExtremalReport { max_residual, per_trajectory, samples, stats })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_period() {
        let rhs = |_t: f64, y: &[f64]| Some(vec![y[1], -y[0]]);
        let (y, _) = dormand_prince(
            rhs,
            |_| None,
            0.0,
            &[1.0, 0.0],
            2.0 * std::f64::consts::PI,
            OdeOptions::default(),
            |_, _| Ok(()),
        )
        .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-8 && y[1].abs() < 1e-8);
    }

    #[test]
    fn blow_up_is_reported() {
        // y' = y^2 from y(0) = 1 blows up at t = 1; guard y < 10
        let rhs = |_t: f64, y: &[f64]| Some(vec![y[0] * y[0]]);
        let adm = |y: &[f64]| (y[0] >= 10.0).then(|| "y < 10".to_string());
        let err = dormand_prince(rhs, adm, 0.0, &[1.0], 2.0, OdeOptions::default(), |_, _| Ok(())).unwrap_err();
        match err {
            LagrangeError::SingularTrajectory { t, .. } => assert!((t - 0.9).abs() < 1e-3),
            other => panic!("{other:?}"),
        }
    }
}
