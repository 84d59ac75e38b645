//! Attribution postprocessing: trailing moving average, then normalisation
//! by per-sensor train-set mean attribution so curves begin near 1.

use crate::bae::{AttributionMatrix, BaeError};

use super::PipelineError;

/// Divisor substituted when a sensor's train-mean attribution is zero
/// (perfect reconstruction on the training set).
pub const ZERO_MEAN_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct PostprocessOutcome {
    pub attr: AttributionMatrix,
    /// Sensors whose train mean was zero and received the epsilon divisor.
    pub flagged_sensors: Vec<usize>,
}

/// Trailing moving average per sensor column (partial windows at the start
/// average over the available prefix) followed by division by that sensor's
/// mean attribution over the training set.
pub fn postprocess(
    attr: &AttributionMatrix,
    window: usize,
    train_attr_mean: &[f64],
) -> Result<PostprocessOutcome, PipelineError> {
    if window == 0 {
        return Err(PipelineError::InvalidArgument(
            "moving-average window must be >= 1".into(),
        ));
    }
    if train_attr_mean.len() != attr.sensors() {
        return Err(PipelineError::InvalidArgument(format!(
            "{} train means for {} sensors",
            train_attr_mean.len(),
            attr.sensors()
        )));
    }

    let n = attr.cycles();
    let k = attr.sensors();
    let mut flagged = Vec::new();
    let mut scores = vec![0.0; n * k];
    for sensor in 0..k {
        let divisor = if train_attr_mean[sensor] > 0.0 {
            train_attr_mean[sensor]
        } else {
            flagged.push(sensor);
            ZERO_MEAN_EPSILON
        };
        let column = attr.column(sensor);
        let mut running = 0.0;
        for cycle in 0..n {
            running += column[cycle];
            if cycle >= window {
                running -= column[cycle - window];
            }
            let span = (cycle + 1).min(window);
            scores[cycle * k + sensor] = running / span as f64 / divisor;
        }
    }

    let attr = AttributionMatrix::new(scores, n, k, attr.method(), attr.config())
        .map_err(|e: BaeError| PipelineError::InvalidArgument(e.to_string()))?;
    Ok(PostprocessOutcome {
        attr,
        flagged_sensors: flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bae::{AttributionMethod, Configuration};

    fn matrix(columns: &[Vec<f64>]) -> AttributionMatrix {
        let k = columns.len();
        let n = columns[0].len();
        let mut scores = vec![0.0; n * k];
        for (sensor, col) in columns.iter().enumerate() {
            for (cycle, v) in col.iter().enumerate() {
                scores[cycle * k + sensor] = *v;
            }
        }
        AttributionMatrix::new(
            scores,
            n,
            k,
            AttributionMethod::MeanNll,
            Configuration::Centralised,
        )
        .unwrap()
    }

    #[test]
    fn window_one_is_identity_before_normalisation() {
        let attr = matrix(&[vec![1.0, 2.0, 3.0]]);
        let out = postprocess(&attr, 1, &[1.0]).unwrap();
        assert_eq!(out.attr.column(0), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn constant_column_with_matching_mean_becomes_ones() {
        let attr = matrix(&[vec![2.5; 5]]);
        let out = postprocess(&attr, 3, &[2.5]).unwrap();
        for v in out.attr.column(0) {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn trailing_average_with_partial_prefix() {
        // column [1,2,3,4], window 2 -> [1, 1.5, 2.5, 3.5]
        let attr = matrix(&[vec![1.0, 2.0, 3.0, 4.0]]);
        let out = postprocess(&attr, 2, &[1.0]).unwrap();
        assert_eq!(out.attr.column(0), vec![1.0, 1.5, 2.5, 3.5]);
    }

    #[test]
    fn zero_train_mean_flags_sensor_and_uses_epsilon() {
        let attr = matrix(&[vec![1.0, 1.0], vec![2.0, 2.0]]);
        let out = postprocess(&attr, 1, &[0.0, 2.0]).unwrap();
        assert_eq!(out.flagged_sensors, vec![0]);
        assert!((out.attr.get(0, 0) - 1.0 / ZERO_MEAN_EPSILON).abs() < 1e3);
        assert!((out.attr.get(0, 1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_zero_window_and_wrong_mean_count() {
        let attr = matrix(&[vec![1.0, 2.0]]);
        assert!(postprocess(&attr, 0, &[1.0]).is_err());
        assert!(postprocess(&attr, 1, &[1.0, 2.0]).is_err());
    }
}
