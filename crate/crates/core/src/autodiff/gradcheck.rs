//! Finite-difference gradient checking.

use super::{NumError, Tape, Tensor, TensorId};

/// Compares the tape gradient of a scalar-valued function against central
/// finite differences and returns the maximum relative error
/// `|analytic - numeric| / max(1, |numeric|)` over the elements of `x`.
///
/// `f` must build the same graph every call; non-finite intermediates are
/// reported with the name of the primitive that produced them.
pub fn grad_check<F>(f: F, x: &Tensor, h: f64) -> Result<f64, NumError>
where
    F: Fn(&mut Tape, TensorId) -> Result<TensorId, NumError>,
{
    assert!(h > 0.0, "step must be positive");

    let eval = |t: &Tensor| -> Result<f64, NumError> {
        let mut tape = Tape::new();
        let xid = tape.constant(t);
        let loss = f(&mut tape, xid)?;
        if tape.value(loss).len() != 1 {
            return Err(NumError::LossNotScalar(tape.shape(loss).to_vec()));
        }
        if let Some(op) = tape.first_non_finite() {
            return Err(NumError::NonFinite(op));
        }
        Ok(tape.value(loss)[0])
    };

    // Analytic pass.
    let mut tape = Tape::new();
    let xid = tape.leaf(x);
    let loss = f(&mut tape, xid)?;
    if tape.value(loss).len() != 1 {
        return Err(NumError::LossNotScalar(tape.shape(loss).to_vec()));
    }
    if let Some(op) = tape.first_non_finite() {
        return Err(NumError::NonFinite(op));
    }
    let grads = tape.backward(loss)?;
    let analytic: Vec<f64> = match grads.get(xid) {
        Some(g) => g.data.clone(),
        None => vec![0.0; x.len()],
    };

    let mut max_err: f64 = 0.0;
    let mut probe = x.clone();
    for i in 0..x.len() {
        let orig = probe.data[i];
        probe.data[i] = orig + h;
        let fp = eval(&probe)?;
        probe.data[i] = orig - h;
        let fm = eval(&probe)?;
        probe.data[i] = orig;
        let numeric = (fp - fm) / (2.0 * h);
        let err = (analytic[i] - numeric).abs() / numeric.abs().max(1.0);
        max_err = max_err.max(err);
    }
    Ok(max_err)
}
