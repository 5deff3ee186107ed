//! Adaptive Dormand–Prince 5(4) integrator with cubic Hermite dense output.

use crate::error::{Error, Result};

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
/// Fifth-order weights minus the embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, max_steps: 200_000 }
    }
}

/// Accepted steps `(t, y, y')` of one integration, for interpolation.
#[derive(Debug, Clone)]
pub struct Trajectory<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub dy: Vec<[f64; N]>,
}

impl<const N: usize> Trajectory<N> {
    pub fn last(&self) -> [f64; N] {
        *self.y.last().expect("trajectory has at least one point")
    }

    /// Cubic Hermite interpolant; clamps `t` to the integration interval.
    pub fn eval(&self, t: f64) -> [f64; N] {
        let n = self.t.len();
        if t <= self.t[0] {
            return self.y[0];
        }
        if t >= self.t[n - 1] {
            return self.y[n - 1];
        }
        let i = self.t.partition_point(|s| *s <= t) - 1;
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        let dt = t1 - t0;
        let s = (t - t0) / dt;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let mut out = [0.0; N];
        for k in 0..N {
            out[k] = h00 * self.y[i][k] + h10 * dt * self.dy[i][k] + h01 * self.y[i + 1][k] + h11 * dt * self.dy[i + 1][k];
        }
        out
    }
}

/// Integrates `y' = f(t, y)` from `t0` to `t1 > t0`.
pub fn integrate<const N: usize, F>(f: F, t0: f64, y0: [f64; N], t1: f64, tol: Tolerances) -> Result<Trajectory<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut t = t0;
    let mut y = y0;
    let mut k = [[0.0; N]; 7];
    k[0] = f(t, &y);
    let mut traj = Trajectory { t: vec![t], y: vec![y], dy: vec![k[0]] };
    let span = t1 - t0;
    let mut h = span * 1e-3;
    let mut steps = 0usize;
    while t < t1 {
        if steps >= tol.max_steps {
            return Err(Error::IterationCap {
                what: "ode integration",
                iterations: steps,
                residual: t1 - t,
                history: vec![t, h],
            });
        }
        steps += 1;
        if t + h > t1 {
            h = t1 - t;
        }
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    for m in 0..N {
                        ys[m] += h * a * kj[m];
                    }
                }
            }
            k[s] = f(t + C[s] * h, &ys);
        }
        let mut ynew = y;
        for m in 0..N {
            for (s, ks) in k.iter().enumerate().take(6) {
                ynew[m] += h * A[6][s] * ks[m];
            }
        }
        // FSAL: the last stage is evaluated at the new point
        let mut err = 0.0f64;
        for m in 0..N {
            let e: f64 = (0..7).map(|s| E[s] * k[s][m]).sum::<f64>() * h;
            let sc = tol.atol + tol.rtol * y[m].abs().max(ynew[m].abs());
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() {
            h *= 0.1;
            if h < span * 1e-16 {
                return Err(Error::Shooting(format!("step size underflow at t = {t:e}")));
            }
            continue;
        }
        if err <= 1.0 {
            t += h;
            y = ynew;
            k[0] = k[6];
            traj.t.push(t);
            traj.y.push(y);
            traj.dy.push(k[0]);
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h < span * 1e-16 {
            return Err(Error::Shooting(format!("step size underflow at t = {t:e}")));
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let traj = integrate(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [0.0, 1.0], 10.0, Tolerances::default()).unwrap();
        let end = traj.last();
        assert!((end[0] - 10f64.sin()).abs() < 1e-9);
        assert!((end[1] - 10f64.cos()).abs() < 1e-9);
        let mid = traj.eval(3.3);
        assert!((mid[0] - 3.3f64.sin()).abs() < 1e-7, "{}", mid[0] - 3.3f64.sin());
    }

    #[test]
    fn tighter_tolerance_is_more_accurate() {
        let run = |rtol| {
            let tol = Tolerances { rtol, atol: rtol * 1e-2, ..Default::default() };
            let y = integrate(|_, y: &[f64; 1]| [-2.0 * y[0]], 0.0, [1.0], 3.0, tol).unwrap().last()[0];
            (y - (-6f64).exp()).abs()
        };
        assert!(run(1e-10) < run(1e-6));
    }
}
