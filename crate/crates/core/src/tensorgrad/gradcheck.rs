//! Central finite-difference checks of tape gradients.
//!
//! The numeric side only ever runs forward passes, so it stays independent
//! of the backward rules it is checking.

use crate::error::Result;

use super::{Bound, ParamStore, Tape, Tensor, Var};

#[derive(Clone, Debug)]
pub struct GradCheckOptions {
    /// Central-difference step.
    pub step: f64,
    /// Denominator floor of the relative error, so that coordinates whose
    /// true gradient is ~0 are judged by absolute error instead.
    pub floor: f64,
    /// Check at most this many coordinates per input (evenly strided).
    pub max_coords: Option<usize>,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            step: 1e-4,
            floor: 1e-6,
            max_coords: None,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    pub coords_checked: usize,
    /// (input index, flat coordinate) of the worst relative error.
    pub worst: Option<(usize, usize)>,
}

impl GradCheckReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_rel_error < tol
    }
}

pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

fn eval<F>(f: &F, inputs: &[Tensor]) -> Result<f64>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
    let out = f(&mut tape, &vars)?;
    Ok(tape.scalar(out))
}

/// Compare the reverse-mode gradient of the scalar `f(inputs)` with central
/// differences for every (or every strided) input coordinate.
pub fn check_gradients<F>(inputs: &[Tensor], opts: &GradCheckOptions, f: F) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
    let out = f(&mut tape, &vars)?;
    let grads = tape.backward(out)?;
    let analytic: Vec<Vec<f64>> = vars.iter().map(|v| grads.get_or_zeros(*v)).collect();
    drop(tape);

    let mut report = GradCheckReport::default();
    let mut work: Vec<Tensor> = inputs.to_vec();
    for (ti, input) in inputs.iter().enumerate() {
        let n = input.len();
        let stride = match opts.max_coords {
            Some(cap) if cap > 0 && n > cap => n.div_ceil(cap),
            _ => 1,
        };
        for j in (0..n).step_by(stride) {
            let orig = input.data()[j];
            work[ti].data_mut()[j] = orig + opts.step;
            let plus = eval(&f, &work)?;
            work[ti].data_mut()[j] = orig - opts.step;
            let minus = eval(&f, &work)?;
            work[ti].data_mut()[j] = orig;

            let numeric = (plus - minus) / (2.0 * opts.step);
            let a = analytic[ti][j];
            let rel = relative_error(a, numeric, opts.floor);
            report.coords_checked += 1;
            report.max_abs_error = report.max_abs_error.max((a - numeric).abs());
            if rel > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = report.max_rel_error.max(rel);
                report.worst = Some((ti, j));
            }
        }
    }
    Ok(report)
}

/// [`check_gradients`] over every tensor of a parameter store.
pub fn check_store_gradients<F>(store: &ParamStore, opts: &GradCheckOptions, f: F) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &Bound) -> Result<Var>,
{
    let inputs: Vec<Tensor> = store.iter().map(|(_, t)| t.clone()).collect();
    check_gradients(&inputs, opts, |tape, vars| f(tape, &Bound::from_vars(vars.to_vec())))
}
