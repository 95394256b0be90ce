use super::tape::{NodeId, Tape};
use super::tensor::Tensor;
use crate::error::Result;

/// Floor for the relative-error denominator.
const DENOM_FLOOR: f64 = 1e-8;

/// Compares tape gradients of a scalar function against central finite
/// differences, coordinate by coordinate.
///
/// `f` must be deterministic (any dropout masks baked in as constants). It
/// receives a fresh tape and one leaf node per input tensor, in order, and
/// builds a scalar loss. Returns the maximum relative error
/// `|analytic - numeric| / max(|analytic|, |numeric|, 1e-8)`.
pub fn grad_check<F>(f: F, params: &[Tensor], step: f64) -> Result<f64>
where
    F: Fn(&mut Tape, &[NodeId]) -> Result<NodeId>,
{
    let eval = |values: &[Tensor]| -> Result<(Tape, Vec<NodeId>, NodeId)> {
        let mut tape = Tape::new();
        let nodes: Vec<NodeId> = values.iter().map(|t| tape.leaf(t.clone())).collect();
        let loss = f(&mut tape, &nodes)?;
        Ok((tape, nodes, loss))
    };

    let (tape, nodes, loss) = eval(params)?;
    let grads = tape.backward(loss)?;
    let analytic: Vec<Tensor> = nodes
        .iter()
        .zip(params)
        .map(|(&id, p)| {
            grads
                .get(id)
                .cloned()
                .unwrap_or_else(|| Tensor::zeros(p.rows(), p.cols()))
        })
        .collect();

    let mut worst = 0.0f64;
    let mut perturbed = params.to_vec();
    for (pi, param) in params.iter().enumerate() {
        for ci in 0..param.len() {
            let original = param.data()[ci];
            perturbed[pi].data_mut()[ci] = original + step;
            let up = eval(&perturbed).map(|(t, _, l)| t.value(l).item())?;
            perturbed[pi].data_mut()[ci] = original - step;
            let down = eval(&perturbed).map(|(t, _, l)| t.value(l).item())?;
            perturbed[pi].data_mut()[ci] = original;

            let numeric = (up - down) / (2.0 * step);
            let a = analytic[pi].data()[ci];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(DENOM_FLOOR);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_matches_closed_form() {
        // f(w) = w^2 at w = 3: analytic 6, central difference exact for quadratics.
        let err = grad_check(
            |tape, nodes| tape.hadamard(nodes[0], nodes[0]),
            &[Tensor::scalar(3.0)],
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-8, "relative error {err}");
    }

    #[test]
    fn unused_parameter_checks_out_as_zero() {
        let err = grad_check(
            |tape, nodes| tape.hadamard(nodes[0], nodes[0]),
            &[Tensor::scalar(2.0), Tensor::scalar(5.0)],
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-8, "relative error {err}");
    }
}
