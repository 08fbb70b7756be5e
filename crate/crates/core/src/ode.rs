//! Fixed-step classical Runge-Kutta.

use crate::error::Result;

pub fn rk4_step<const N: usize, F>(f: &F, t: f64, y: &[f64; N], h: f64) -> Result<[f64; N]>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let axpy = |a: &[f64; N], s: f64, b: &[f64; N]| -> [f64; N] { std::array::from_fn(|i| a[i] + s * b[i]) };
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k1))?;
    let k3 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k2))?;
    let k4 = f(t + h, &axpy(y, h, &k3))?;
    Ok(std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])))
}

/// Number of equal steps needed to cover `[t0, t1]` with steps of at most
/// `max_step`.
pub fn step_count(t0: f64, t1: f64, max_step: f64) -> usize {
    (((t1 - t0).abs() / max_step).ceil() as usize).max(1)
}

/// Integrate from `t0` to `t1` in equal steps no longer than `max_step`.
///
/// `post` runs after every step and may project the state (for example to
/// re-orthonormalize a frame). Returns the grid and the state at every grid
/// point, including the initial one.
pub fn integrate<const N: usize, F, P>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    max_step: f64,
    post: P,
) -> Result<(Vec<f64>, Vec<[f64; N]>)>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
    P: FnMut(f64, &mut [f64; N]) -> Result<()>,
{
    integrate_substeps(f, t0, y0, t1, max_step, 1, post)
}

/// Like [`integrate`], but every output interval is covered by `substeps`
/// RK4 steps. Tables built from the output then carry values and
/// derivatives that agree to a much smaller local error.
pub fn integrate_substeps<const N: usize, F, P>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    max_step: f64,
    substeps: usize,
    mut post: P,
) -> Result<(Vec<f64>, Vec<[f64; N]>)>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
    P: FnMut(f64, &mut [f64; N]) -> Result<()>,
{
    let m = substeps.max(1);
    let n = step_count(t0, t1, max_step);
    let h = (t1 - t0) / (n * m) as f64;
    let mut ts = Vec::with_capacity(n + 1);
    let mut ys = Vec::with_capacity(n + 1);
    let mut y = y0;
    post(t0, &mut y)?;
    ts.push(t0);
    ys.push(y);
    for k in 0..n * m {
        let t = t0 + k as f64 * h;
        y = rk4_step(&f, t, &y, h)?;
        let tn = if k + 1 == n * m { t1 } else { t0 + (k + 1) as f64 * h };
        post(tn, &mut y)?;
        if (k + 1) % m == 0 {
            ts.push(tn);
            ys.push(y);
        }
    }
    Ok((ts, ys))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_fourth_order() {
        let f = |_t: f64, y: &[f64; 2]| Ok([y[1], -y[0]]);
        let err = |h: f64| {
            let (_, ys) = integrate(f, 0.0, [1.0, 0.0], 2.0, h, |_, _| Ok(())).unwrap();
            (ys.last().unwrap()[0] - 2f64.cos()).abs()
        };
        let r = err(0.1) / err(0.05);
        assert!((14.0..18.0).contains(&r), "ratio {r}");
    }

    #[test]
    fn integrates_backwards() {
        let (ts, ys) = integrate(|_t, y: &[f64; 1]| Ok([y[0]]), 1.0, [1.0], 0.0, 1e-3, |_, _| Ok(())).unwrap();
        assert_eq!(*ts.last().unwrap(), 0.0);
        assert!((ys.last().unwrap()[0] - (-1f64).exp()).abs() < 1e-12);
    }
}
