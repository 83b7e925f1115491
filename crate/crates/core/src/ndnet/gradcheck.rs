//! Central finite-difference verification of tape gradients.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::tape::{GradBuffer, NodeId, Tape};
use super::tensor::{ParamId, ParamSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckConfig {
    /// Finite-difference step `h`.
    pub step: f64,
    /// Check a random subset of this many coordinates; `None` checks all.
    pub sample: Option<usize>,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            step: 1e-5,
            sample: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coordinate {
    pub param: ParamId,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub worst: Option<Coordinate>,
    pub checked: usize,
    /// Coordinates whose ±h probes flipped a ReLU input across zero.
    pub skipped: usize,
}

/// `|a − n| / max(|a|, |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compares reverse-mode gradients of `loss_fn` with
/// `(f(x + h) − f(x − h)) / 2h` for each checked coordinate.
///
/// Only coordinates the graph actually reads are candidates (whole tensors
/// for [`Tape::param`], single rows for [`Tape::gather`]). A coordinate is
/// skipped when either probe changes which ReLU inputs are positive, since
/// the difference quotient then straddles a kink; in particular any ReLU
/// input within `h` of zero that depends on the coordinate is excluded.
pub fn grad_check<F>(loss_fn: F, params: &ParamSet, config: &GradCheckConfig) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape<'_>) -> Result<NodeId>,
{
    let (analytic, candidates, base_pattern) = {
        let mut tape = Tape::new(params);
        let loss = loss_fn(&mut tape)?;
        let value = tape.scalar(loss);
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("loss = {value}")));
        }
        let mut grads = GradBuffer::new(params);
        tape.backward(loss, 1.0, &mut grads)?;
        (
            grads.to_tensors(params),
            tape.touched_coordinates(),
            tape.relu_pattern().to_vec(),
        )
    };

    let chosen: Vec<Coordinate> = match config.sample {
        Some(n) if n < candidates.len() => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let mut picks = rand::seq::index::sample(&mut rng, candidates.len(), n).into_vec();
            picks.sort_unstable();
            picks.into_iter().map(|i| candidates[i]).collect()
        }
        _ => candidates,
    };

    let h = config.step;
    let mut probe = params.clone();
    let mut evaluate = |coord: Coordinate, value: f64| -> Result<(f64, bool)> {
        probe.get_mut(coord.param).data_mut()[coord.index] = value;
        let mut tape = Tape::new(&probe);
        let loss = loss_fn(&mut tape)?;
        let f = tape.scalar(loss);
        if !f.is_finite() {
            return Err(Error::NonFinite(format!("loss = {f} while probing {coord:?}")));
        }
        Ok((f, tape.relu_pattern() == base_pattern.as_slice()))
    };

    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst: None,
        checked: 0,
        skipped: 0,
    };
    for coord in chosen {
        let x = params.get(coord.param).data()[coord.index];
        let (plus, same_plus) = evaluate(coord, x + h)?;
        let (minus, same_minus) = evaluate(coord, x - h)?;
        evaluate(coord, x)?;
        if !(same_plus && same_minus) {
            report.skipped += 1;
            continue;
        }
        let numeric = (plus - minus) / (2.0 * h);
        let err = relative_error(analytic[coord.param.0].data()[coord.index], numeric);
        report.checked += 1;
        if report.worst.is_none() || err > report.max_relative_error {
            report.max_relative_error = err;
            report.worst = Some(coord);
        }
    }
    Ok(report)
}
