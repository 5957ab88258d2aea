use super::PipelineError;

/// `(1/Q) * sum (a(n) - b(n))^2`.
pub fn compute_mse(a: &[f64], b: &[f64]) -> Result<f64, PipelineError> {
    if a.len() != b.len() {
        return Err(PipelineError::SeriesLengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(PipelineError::EmptySeries);
    }
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sum / a.len() as f64)
}
