//! Finite-difference ascent on the defender's softmax parameters against a
//! best-responding adversary.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chain::satisfaction;
use crate::controller::{softmax_policy, FscStructure};
use crate::product::ProductPosg;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeOptions {
    pub steps: usize,
    pub step_size: f64,
    pub fd_eps: f64,
    pub seed: u64,
    /// Descent steps the adversary takes per best-response computation.
    pub inner_steps: usize,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            steps: 50,
            step_size: 1.0,
            fd_eps: 1e-4,
            seed: 0,
            inner_steps: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizeResult {
    pub def_params: Vec<f64>,
    pub adv_params: Vec<f64>,
    /// Worst-case value before any step, then after each step. A rejected
    /// step repeats the previous value.
    pub trace: Vec<f64>,
    /// Whether step `t` (trace entry `t + 1`) was accepted.
    pub accepted: Vec<bool>,
}

struct Objective<'a> {
    p: &'a ProductPosg,
    st_def: &'a FscStructure,
    st_adv: &'a FscStructure,
}

impl Objective<'_> {
    fn value(&self, def: &[f64], adv: &[f64]) -> Result<f64> {
        satisfaction(
            self.p,
            &softmax_policy(self.st_def, def)?,
            &softmax_policy(self.st_adv, adv)?,
        )
    }

    /// Central differences of `f` on the support of `st`.
    fn gradient(st: &FscStructure, x: &[f64], eps: f64, f: impl Fn(&[f64]) -> Result<f64>) -> Result<Vec<f64>> {
        let mut grad = vec![0.0; x.len()];
        let mut probe = x.to_vec();
        for i in (0..x.len()).filter(|&i| st.mask()[i]) {
            probe[i] = x[i] + eps;
            let up = f(&probe)?;
            probe[i] = x[i] - eps;
            let down = f(&probe)?;
            probe[i] = x[i];
            grad[i] = (up - down) / (2.0 * eps);
        }
        Ok(grad)
    }

    /// Adversary descent from `start`; only improving steps are taken.
    fn best_response(&self, def: &[f64], start: &[f64], opts: &OptimizeOptions) -> Result<(Vec<f64>, f64)> {
        let mut adv = start.to_vec();
        let mut value = self.value(def, &adv)?;
        for _ in 0..opts.inner_steps {
            let grad = Self::gradient(self.st_adv, &adv, opts.fd_eps, |a| self.value(def, a))?;
            if grad.iter().all(|g| g.abs() < 1e-12) {
                break;
            }
            let mut improved = false;
            for h in [opts.step_size, opts.step_size / 2.0, opts.step_size / 4.0] {
                let trial: Vec<f64> = adv.iter().zip(&grad).map(|(x, g)| x - h * g).collect();
                let v = self.value(def, &trial)?;
                if v < value {
                    adv = trial;
                    value = v;
                    improved = true;
                    break;
                }
            }
            if !improved {
                break;
            }
        }
        Ok((adv, value))
    }
}

/// Adversary parameters reached by finite-difference descent from `start`
/// against fixed defender parameters, with the value they attain.
pub fn adversary_best_response(
    p: &ProductPosg,
    st_def: &FscStructure,
    def_params: &[f64],
    st_adv: &FscStructure,
    start: &[f64],
    opts: &OptimizeOptions,
) -> Result<(Vec<f64>, f64)> {
    Objective { p, st_def, st_adv }.best_response(def_params, start, opts)
}

/// Alternating scheme: the adversary best-responds by descent, the
/// defender ascends the resulting worst case. Defender steps that lower the
/// recorded worst case are rejected, so `trace` is nondecreasing.
/// Deterministic for a given seed.
pub fn optimize_parameters(
    p: &ProductPosg,
    st_def: &FscStructure,
    st_adv: &FscStructure,
    opts: &OptimizeOptions,
) -> Result<OptimizeResult> {
    if !(opts.step_size > 0.0 && opts.fd_eps > 0.0) {
        return Err(Error::Schema(
            "step size and finite-difference epsilon must be positive".into(),
        ));
    }
    let obj = Objective { p, st_def, st_adv };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut def = vec![0.0; st_def.mask().len()];
    let (mut adv, mut worst) = obj.best_response(&def, &vec![0.0; st_adv.mask().len()], opts)?;
    let mut trace = vec![worst];
    let mut accepted = Vec::with_capacity(opts.steps);

    for _ in 0..opts.steps {
        let mut dir = Objective::gradient(st_def, &def, opts.fd_eps, |d| obj.value(d, &adv))?;
        if dir.iter().all(|g| g.abs() < 1e-12) {
            for (i, d) in dir.iter_mut().enumerate() {
                if st_def.mask()[i] {
                    *d = rng.gen_range(-1.0..1.0);
                }
            }
        }
        let mut step = None;
        for h in [opts.step_size, opts.step_size / 2.0, opts.step_size / 4.0] {
            let trial: Vec<f64> = def.iter().zip(&dir).map(|(x, g)| x + h * g).collect();
            let (trial_adv, v) = obj.best_response(&trial, &adv, opts)?;
            if v >= worst {
                step = Some((trial, trial_adv, v));
                break;
            }
        }
        match step {
            Some((d, a, v)) => {
                def = d;
                adv = a;
                worst = v;
                accepted.push(true);
            }
            None => accepted.push(false),
        }
        trace.push(worst);
    }
    Ok(OptimizeResult {
        def_params: def,
        adv_params: adv,
        trace,
        accepted,
    })
}
