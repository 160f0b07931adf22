//! Fixed-step integrators over `[f64; N]` state vectors.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorKind {
    #[default]
    Rk4,
    SemiImplicitEuler,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepError<E> {
    Rhs(E),
    NonFinite { time: f64, state: Vec<f64> },
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, k: &[f64; N]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * k[i])
}

fn finite_or<const N: usize, E>(time: f64, y: [f64; N]) -> Result<[f64; N], StepError<E>> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(y)
    } else {
        Err(StepError::NonFinite {
            time,
            state: y.to_vec(),
        })
    }
}

/// Classical fourth-order Runge-Kutta step of `dy/dt = rhs(t, y)`.
pub fn rk4_step<const N: usize, E, F>(
    mut rhs: F,
    t: f64,
    y: &[f64; N],
    dt: f64,
) -> Result<[f64; N], StepError<E>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
{
    let half = 0.5 * dt;
    let mut eval = |t: f64, y: &[f64; N]| -> Result<[f64; N], StepError<E>> {
        let k = rhs(t, y).map_err(StepError::Rhs)?;
        finite_or(t, k)
    };
    let k1 = eval(t, y)?;
    let y2 = finite_or(t + half, axpy(y, half, &k1))?;
    let k2 = eval(t + half, &y2)?;
    let y3 = finite_or(t + half, axpy(y, half, &k2))?;
    let k3 = eval(t + half, &y3)?;
    let y4 = finite_or(t + dt, axpy(y, dt, &k3))?;
    let k4 = eval(t + dt, &y4)?;
    let next = std::array::from_fn(|i| {
        y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    });
    finite_or(t + dt, next)
}

/// Symplectic Euler: each `(position, velocity)` pair advances its velocity
/// first and moves the position with the new velocity; every other component
/// takes an explicit Euler step.
pub fn semi_implicit_euler_step<const N: usize, E, F>(
    mut rhs: F,
    t: f64,
    y: &[f64; N],
    dt: f64,
    coupled: &[(usize, usize)],
) -> Result<[f64; N], StepError<E>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
{
    let k = finite_or(t, rhs(t, y).map_err(StepError::Rhs)?)?;
    let mut next = axpy(y, dt, &k);
    for &(pos, vel) in coupled {
        next[pos] = y[pos] + dt * next[vel];
    }
    finite_or(t + dt, next)
}
