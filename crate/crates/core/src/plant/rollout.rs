use crate::control::{Reference, TrackingController};
use crate::disturbances::Scenario;
use crate::error::{Error, Result};
use crate::estimators::{DisturbanceSensor, Estimator, EstimatorInput};
use crate::scalar::{all_finite, Real};

use super::PlantConfig;

/// States beyond this norm are treated as a lost vehicle.
const DIVERGENCE_NORM: f64 = 1e6;

#[derive(Clone, Debug, PartialEq)]
pub struct LogRow<T> {
    pub t: T,
    pub x: Vec<T>,
    pub u: Vec<T>,
    /// Injected disturbance `scenario.eval(t, x)`.
    pub d: Vec<T>,
    /// Estimate used at this step; zeros when no estimator runs.
    pub d_hat: Vec<T>,
    pub x_d: Vec<T>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RolloutLog<T> {
    pub rows: Vec<LogRow<T>>,
    pub diverged: bool,
    /// Parameter clamp activated at some step.
    pub saturated: bool,
}

/// Closed-loop simulation over `[0, duration]`, starting on the reference.
///
/// Each step runs measure, estimate, control, log, then integrates to the
/// next sample. Non-finite or runaway states end the run early with
/// `diverged` set; the rows logged so far are kept.
pub fn rollout<T: Real>(
    controller: &TrackingController<T>,
    mut estimator: Option<&mut Estimator<T>>,
    scenario: &Scenario<T>,
    reference: &Reference,
    duration: T,
    plant: &PlantConfig<T>,
    sensor: &mut DisturbanceSensor<T>,
) -> Result<RolloutLog<T>> {
    plant.validate()?;
    reference.validate()?;
    scenario.validate()?;
    if !(duration > T::zero()) {
        return Err(Error::BadParams("rollout duration must be positive".into()));
    }
    if reference.dof() != plant.dof || scenario.dim().is_some_and(|d| d != plant.dof) {
        return Err(Error::dims("scenario or reference does not match plant"));
    }
    let dt = plant.dt;
    let steps = (duration / dt).round().to_usize().unwrap_or(0);
    let mut log = RolloutLog {
        rows: Vec::with_capacity(steps + 1),
        ..Default::default()
    };

    let mut x = reference.eval(T::zero()).state();
    let mut x_prev = x.clone();
    let mut u_prev: Vec<T> = plant.gravity.iter().map(|&g| -g).collect();
    let zeros = vec![T::zero(); plant.dof];

    for k in 0..=steps {
        let t = T::from_usize_lossy(k) * dt;
        let rp = reference.eval(t);
        let f_plus_gu = plant.drift_plus_input(&u_prev);
        let d_meas = (k > 0)
            .then(|| sensor.measure(plant.velocity(&x_prev), plant.velocity(&x), &f_plus_gu, dt));

        let d_hat = match estimator.as_deref_mut() {
            Some(est) => {
                let input = EstimatorInput {
                    x: &x,
                    x_d: &rp.state(),
                    f_plus_gu: &f_plus_gu,
                    d_meas: d_meas.as_deref(),
                    dt,
                };
                match est.step(&input) {
                    Ok(d) => {
                        log.saturated |= est.saturated();
                        d
                    }
                    Err(_) => {
                        log.diverged = true;
                        break;
                    }
                }
            }
            None => zeros.clone(),
        };

        let u = controller.command(&x, &rp, Some(&d_hat), plant)?;
        log.rows.push(LogRow {
            t,
            d: scenario.eval(t, &x),
            x: x.clone(),
            u: u.clone(),
            d_hat,
            x_d: rp.state(),
        });
        if k == steps {
            break;
        }
        match plant.rk4_step(&x, &u, |s, y| scenario.eval(s, y), t, dt) {
            Ok(next)
                if all_finite(&next) && next.iter().all(|v| v.abs() < T::lit(DIVERGENCE_NORM)) =>
            {
                x_prev = std::mem::replace(&mut x, next);
                u_prev = u;
            }
            Ok(_) | Err(Error::NonFiniteState { .. }) => {
                log.diverged = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(log)
}
