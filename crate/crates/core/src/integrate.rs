//! Classical fixed-step fourth-order Runge–Kutta.

use nalgebra::SVector;

/// One RK4 step of `y' = f(t, y)`. The derivative may fail; the first error
/// aborts the step.
pub fn rk4_step<const N: usize, E>(
    t: f64,
    y: &SVector<f64, N>,
    dt: f64,
    mut f: impl FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>, E>,
) -> Result<SVector<f64, N>, E> {
    let h2 = 0.5 * dt;
    let k1 = f(t, y)?;
    let k2 = f(t + h2, &(y + k1 * h2))?;
    let k3 = f(t + h2, &(y + k2 * h2))?;
    let k4 = f(t + dt, &(y + k3 * dt))?;
    Ok(y + (k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0))
}
