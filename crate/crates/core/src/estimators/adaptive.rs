use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm, sym_eigenvalues, Cholesky, Mat};
use crate::representation::FeatureMatrix;
use crate::scalar::{all_finite, Real};

/// Upper bound on Euler sub-steps per call.
const MAX_SUBSTEPS: usize = 10_000;

/// Which form of the concurrent-learning law to integrate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawForm {
    /// `theta' = P sum_i phi_i^T (d_i - phi_i theta) + Gamma phi^T s`
    #[default]
    Standard,
    /// `theta' = -P sum_i phi_i^T (d_i - phi(z) theta) + Gamma phi^T s`
    Printed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BufferRecord<T> {
    pub phi: Vec<T>,
    pub d: Vec<T>,
    pub time: T,
}

/// Replay buffer of `(phi(z_i), d_i)` pairs.
///
/// The stacked regressor of the block-diagonal features is `I_n (x) Phi`, so
/// its singular values are those of the `k`-column matrix `Phi` of stored
/// feature rows; admission works on `Phi^T Phi`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcurrentBuffer<T> {
    capacity: usize,
    max_age: Option<T>,
    records: Vec<BufferRecord<T>>,
}

fn min_eig_of<T: Real>(k: usize, rows: impl Iterator<Item = impl AsRef<[T]>>) -> T {
    let mut g = Mat::zeros(k, k);
    for r in rows {
        let r = r.as_ref();
        for i in 0..k {
            for j in 0..k {
                g[(i, j)] += r[i] * r[j];
            }
        }
    }
    sym_eigenvalues(&g)
        .first()
        .copied()
        .unwrap_or(T::zero())
        .max(T::zero())
}

impl<T: Real> ConcurrentBuffer<T> {
    pub fn new(capacity: usize, max_age: Option<T>) -> Self {
        Self {
            capacity,
            max_age,
            records: Vec::with_capacity(capacity),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn records(&self) -> &[BufferRecord<T>] {
        &self.records
    }

    /// Smallest singular value of the stacked feature rows.
    pub fn min_singular_value(&self) -> T {
        match self.records.first() {
            None => T::zero(),
            Some(r) => min_eig_of(r.phi.len(), self.records.iter().map(|r| &r.phi)).sqrt(),
        }
    }

    /// Drops records older than `max_age` at time `now`.
    pub fn expire(&mut self, now: T) {
        if let Some(age) = self.max_age {
            self.records.retain(|r| now - r.time <= age);
        }
    }

    /// Admission: always while not full; when full, swap in the candidate
    /// for the record whose replacement maximizes the smallest singular
    /// value, provided that strictly improves on the current buffer.
    /// Exact duplicates are never admitted.
    pub fn admit(&mut self, phi: &[T], d: &[T], now: T) -> bool {
        if self.capacity == 0 || !all_finite(phi) || !all_finite(d) {
            return false;
        }
        self.expire(now);
        if self.records.iter().any(|r| r.phi == phi && r.d == d) {
            return false;
        }
        let record = BufferRecord {
            phi: phi.to_vec(),
            d: d.to_vec(),
            time: now,
        };
        if self.records.len() < self.capacity {
            self.records.push(record);
            return true;
        }
        let k = phi.len();
        let current = min_eig_of(k, self.records.iter().map(|r| &r.phi));
        let mut best: Option<(usize, T)> = None;
        for j in 0..self.records.len() {
            let rows =
                self.records
                    .iter()
                    .enumerate()
                    .map(|(i, r)| if i == j { phi } else { r.phi.as_slice() });
            let score = min_eig_of(k, rows);
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        match best {
            Some((j, score)) if score > current * (T::one() + T::lit(1e-12)) => {
                self.records[j] = record;
                true
            }
            _ => false,
        }
    }
}

/// Concurrent-learning parameter estimator for `d_model = phi_t(z) theta`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptiveState<T> {
    pub theta: Vec<T>,
    gain: Mat<T>,
    pub gamma: T,
    pub buffer: ConcurrentBuffer<T>,
    pub theta_max: T,
    pub form: LawForm,
    /// Set once the norm clamp has activated.
    pub saturated: bool,
    clock: T,
}

impl<T: Real> AdaptiveState<T> {
    pub fn new(
        theta0: Vec<T>,
        gain: Mat<T>,
        gamma: T,
        buffer: ConcurrentBuffer<T>,
        theta_max: T,
    ) -> Result<Self> {
        if gain.rows() != theta0.len() || gain.cols() != theta0.len() {
            return Err(Error::dims("adaptation gain must be nk x nk"));
        }
        if !gain.is_symmetric(T::lit(1e-12)) || Cholesky::factor(&gain).is_err() {
            return Err(Error::BadParams(
                "adaptation gain must be positive definite".into(),
            ));
        }
        if gamma < T::zero() || !(theta_max > T::zero()) {
            return Err(Error::BadParams(
                "gamma must be >= 0 and theta_max > 0".into(),
            ));
        }
        Ok(Self {
            theta: theta0,
            gain,
            gamma,
            buffer,
            theta_max,
            form: LawForm::Standard,
            saturated: false,
            clock: T::zero(),
        })
    }

    pub fn gain(&self) -> &Mat<T> {
        &self.gain
    }

    pub fn clock(&self) -> T {
        self.clock
    }

    /// `(theta - theta*)^T P^-1 (theta - theta*)`
    pub fn lyapunov(&self, theta_star: &[T]) -> Result<T> {
        let e: Vec<T> = self
            .theta
            .iter()
            .zip(theta_star)
            .map(|(&a, &b)| a - b)
            .collect();
        let chol = Cholesky::factor(&self.gain)?;
        Ok(crate::linalg::dot(&e, &chol.solve(&e)))
    }

    /// Offers the sample `(phi, d)` to the buffer at the current clock.
    pub fn buffer_admit(&mut self, phi_t: &FeatureMatrix<T>, d_meas: &[T]) -> bool {
        if d_meas.len() != phi_t.rows() {
            return false;
        }
        self.buffer.admit(phi_t.phi(), d_meas, self.clock)
    }

    /// Offers `(phi_t, d_meas)` to the buffer, then integrates the law over
    /// `dt` with explicit Euler, sub-stepping so that each step stays inside
    /// the stability region of the buffer term.
    ///
    /// `tracking_err` is `s = (v - v_d) + lambda (p - p_d)` on the actuated
    /// rows; positive `gamma` raises the model along the direction that
    /// reduces it under disturbance feedforward.
    pub fn adapt_step(
        &mut self,
        phi_t: &FeatureMatrix<T>,
        d_meas: Option<&[T]>,
        tracking_err: &[T],
        dt: T,
    ) -> Result<()> {
        let n = phi_t.rows();
        let k = phi_t.features();
        if phi_t.cols() != self.theta.len() || tracking_err.len() != n {
            return Err(Error::dims("adapt_step sizes do not match theta"));
        }
        if !(dt > T::zero()) {
            return Err(Error::BadParams("dt must be positive".into()));
        }
        if let Some(d) = d_meas {
            self.buffer_admit(phi_t, d);
        }
        self.clock += dt;
        self.buffer.expire(self.clock);

        // Buffer term is b - (I_n (x) Q) theta, with Q = sum phi_i phi_i^T
        // (standard) or (sum phi_i) phi^T (printed).
        let mut q = Mat::zeros(k, k);
        let mut b = vec![T::zero(); n * k];
        let mut s = vec![T::zero(); k];
        let mut trace = T::zero();
        let phi = phi_t.phi();
        for r in self.buffer.records() {
            for i in 0..k {
                s[i] += r.phi[i];
                for (j, bj) in r.d.iter().enumerate() {
                    b[j * k + i] += *bj * r.phi[i];
                }
                if self.form == LawForm::Standard {
                    for j in 0..k {
                        q[(i, j)] += r.phi[i] * r.phi[j];
                    }
                }
            }
            trace += match self.form {
                LawForm::Standard => crate::linalg::dot(&r.phi, &r.phi),
                LawForm::Printed => norm(&r.phi) * norm(phi),
            };
        }
        if self.form == LawForm::Printed {
            for i in 0..k {
                for j in 0..k {
                    q[(i, j)] = s[i] * phi[j];
                }
            }
        }
        let sign = match self.form {
            LawForm::Standard => T::one(),
            LawForm::Printed => -T::one(),
        };
        let drive: Vec<T> = phi_t
            .tr_mul_vec(tracking_err)?
            .into_iter()
            .map(|v| v * self.gamma)
            .collect();

        let rate = self.gain.norm_inf() * trace;
        let substeps =
            ((dt * rate).ceil().to_usize().unwrap_or(MAX_SUBSTEPS)).clamp(1, MAX_SUBSTEPS);
        let h = dt / T::from_usize_lossy(substeps);
        let mut grad = vec![T::zero(); n * k];
        for _ in 0..substeps {
            for blk in 0..n {
                let th = &self.theta[blk * k..(blk + 1) * k];
                for i in 0..k {
                    let qi = crate::linalg::dot(q.row(i), th);
                    grad[blk * k + i] = b[blk * k + i] - qi;
                }
            }
            let step = self.gain.mul_vec(&grad);
            for i in 0..self.theta.len() {
                self.theta[i] += h * (sign * step[i] + drive[i]);
            }
        }
        if !all_finite(&self.theta) {
            return Err(Error::NonFinite("adaptive parameters".into()));
        }
        let nrm = norm(&self.theta);
        if nrm > self.theta_max {
            let c = self.theta_max / nrm;
            self.theta.iter_mut().for_each(|v| *v *= c);
            self.saturated = true;
        }
        Ok(())
    }
}
