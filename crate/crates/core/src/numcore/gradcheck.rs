use super::ParameterBlock;
use crate::error::{Error, Result};

/// Outcome of a central-difference comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    /// max over coordinates of |g_analytic − g_central| / max(1, |g_central|)
    pub max_rel_error: f64,
    pub coordinates: usize,
    /// (block index, coordinate) of the worst mismatch.
    pub worst: (usize, usize),
}

/// Compares the analytic gradients stored in `blocks[..].grad` with central
/// differences of `f` over every trainable coordinate.
///
/// `f` is evaluated on perturbed copies; `blocks` is left untouched.
pub fn check_gradient<F>(blocks: &[ParameterBlock], eps: f64, mut f: F) -> Result<GradientCheck>
where
    F: FnMut(&[ParameterBlock]) -> Result<f64>,
{
    if !(1e-7..=1e-4).contains(&eps) {
        return Err(Error::Config(format!(
            "finite-difference step {eps:e} outside [1e-7, 1e-4]"
        )));
    }
    let mut probe = blocks.to_vec();
    let mut out = GradientCheck {
        max_rel_error: 0.0,
        coordinates: 0,
        worst: (0, 0),
    };
    for b in 0..probe.len() {
        if !probe[b].trainable {
            continue;
        }
        for i in 0..probe[b].values.len() {
            let orig = probe[b].values[i];
            probe[b].values[i] = orig + eps;
            let up = f(&probe)?;
            probe[b].values[i] = orig - eps;
            let down = f(&probe)?;
            probe[b].values[i] = orig;
            if !up.is_finite() || !down.is_finite() {
                return Err(Error::NonFinite(format!(
                    "objective near {}[{i}]",
                    probe[b].name
                )));
            }
            let central = (up - down) / (2.0 * eps);
            let analytic = blocks[b].grad[i];
            let rel = (analytic - central).abs() / central.abs().max(1.0);
            out.coordinates += 1;
            if rel >= out.max_rel_error {
                out.max_rel_error = rel;
                out.worst = (b, i);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_exact() {
        let mut x = ParameterBlock::scalar("x", 3.0);
        x.grad[0] = 6.0;
        for eps in [1e-7, 1e-5, 1e-4] {
            let r = check_gradient(std::slice::from_ref(&x), eps, |b| Ok(b[0].values[0].powi(2)))
                .unwrap();
            assert!(r.max_rel_error < 1e-8, "eps {eps}: {}", r.max_rel_error);
            assert_eq!(r.coordinates, 1);
        }
    }

    #[test]
    fn detects_wrong_gradient() {
        let mut x = ParameterBlock::scalar("x", 3.0);
        x.grad[0] = 5.0;
        let r = check_gradient(&[x], 1e-5, |b| Ok(b[0].values[0].powi(2))).unwrap();
        assert!(r.max_rel_error > 0.1);
    }

    #[test]
    fn skips_frozen_blocks() {
        let mut x = ParameterBlock::scalar("x", 1.0);
        x.trainable = false;
        let r = check_gradient(&[x], 1e-5, |b| Ok(b[0].values[0])).unwrap();
        assert_eq!(r.coordinates, 0);
    }

    #[test]
    fn rejects_bad_step_and_non_finite_objective() {
        let x = ParameterBlock::scalar("x", 1.0);
        assert!(check_gradient(std::slice::from_ref(&x), 1e-2, |_| Ok(0.0)).is_err());
        assert!(matches!(
            check_gradient(&[x], 1e-5, |_| Ok(f64::NAN)),
            Err(Error::NonFinite(_))
        ));
    }
}
