use super::EvalError;
use std::collections::BTreeSet;

/// Macro-averaged F1 over the classes present in `truth`; a class with no
/// true or predicted positives scores 0.
pub fn f_score(predicted: &[usize], truth: &[usize]) -> Result<f64, EvalError> {
    if predicted.len() != truth.len() {
        return Err(EvalError::DimensionMismatch(format!(
            "{} predictions for {} labels",
            predicted.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(EvalError::InvalidArgument("F-score of an empty set".into()));
    }
    let classes: BTreeSet<usize> = truth.iter().copied().collect();
    let mut total = 0.0;
    for &c in &classes {
        let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
        for (&p, &t) in predicted.iter().zip(truth) {
            match (p == c, t == c) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                _ => {}
            }
        }
        // 2PR / (P + R) simplifies to 2tp / (2tp + fp + fn)
        if tp > 0 {
            total += 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64;
        }
    }
    Ok(total / classes.len() as f64)
}
