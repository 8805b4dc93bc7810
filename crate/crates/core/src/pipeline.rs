//! End-to-end task pipeline: fit normalization bounds on the training
//! split, encode, train the circuit, and evaluate either split of a task
//! against a trained model.

use crate::ansatz::{
    label_from_score, AnsatzError, Backend, ClassMapping, StaircaseCircuit, TrainedModel,
};
use crate::data::{BinaryTask, Split};
use crate::encoding::{EncodedSample, EncodingError, NormalizationBounds};
use crate::metrics::{EvalReport, MetricsError};
use crate::training::{self, TrainConfig, TrainError, TrainRun};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("task '{0}' has an empty {1} split")]
    EmptySplit(String, Split),
    #[error("model does not fit task '{task}': {reason}")]
    ModelTaskMismatch { task: String, reason: String },
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Ansatz(#[from] AnsatzError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

fn class_mapping(task: &BinaryTask) -> ClassMapping {
    ClassMapping {
        negative: task.negative_class,
        positive: task.positive_class,
        negative_name: task.negative_name.clone(),
        positive_name: task.positive_name.clone(),
    }
}

/// Normalizes and encodes one split of a task with the given bounds.
pub fn encode_split(
    task: &BinaryTask,
    split: Split,
    bounds: &NormalizationBounds,
) -> Result<Vec<EncodedSample>, PipelineError> {
    let mut samples = Vec::new();
    for (row, label) in task.split_samples(split) {
        samples.push(EncodedSample::new(bounds.normalize(row)?, label));
    }
    if samples.is_empty() {
        return Err(PipelineError::EmptySplit(task.name.clone(), split));
    }
    Ok(samples)
}

/// Trains a model on a task's training split. Bounds are fit on that
/// split only; test rows are later clamped into the same angle range.
pub fn train_task(
    task: &BinaryTask,
    config: &TrainConfig,
    use_ancilla: bool,
) -> Result<(TrainedModel, TrainRun), PipelineError> {
    let train_rows: Vec<Vec<f64>> = task
        .split_samples(Split::Train)
        .map(|(row, _)| row.to_vec())
        .collect();
    if train_rows.is_empty() {
        return Err(PipelineError::EmptySplit(task.name.clone(), Split::Train));
    }
    let bounds = NormalizationBounds::fit(&train_rows)?;
    let encoded = encode_split(task, Split::Train, &bounds)?;
    let circuit = StaircaseCircuit::new(task.n_features(), use_ancilla)?;
    let run = training::train(&circuit, &encoded, config)?;
    let model = TrainedModel::new(
        circuit,
        run.theta.clone(),
        bounds,
        class_mapping(task),
        run.history.clone(),
    )?;
    Ok((model, run))
}

/// Scores every sample of one split and assembles the metric report.
pub fn evaluate_split(
    model: &TrainedModel,
    task: &BinaryTask,
    split: Split,
    backend: Backend,
) -> Result<EvalReport, PipelineError> {
    check_model_matches_task(model, task)?;
    let mut actual = Vec::new();
    let mut scores = Vec::new();
    let mut predicted = Vec::new();
    for (row, label) in task.split_samples(split) {
        let m = model.score(row, backend)?;
        actual.push(label);
        scores.push(m);
        predicted.push(label_from_score(m));
    }
    if actual.is_empty() {
        return Err(PipelineError::EmptySplit(task.name.clone(), split));
    }
    Ok(EvalReport::new(&actual, &scores, &predicted)?)
}

fn check_model_matches_task(model: &TrainedModel, task: &BinaryTask) -> Result<(), PipelineError> {
    if model.n_data != task.n_features() {
        return Err(PipelineError::ModelTaskMismatch {
            task: task.name.clone(),
            reason: format!(
                "model encodes {} feature(s), task has {}",
                model.n_data,
                task.n_features()
            ),
        });
    }
    if model.classes.negative != task.negative_class
        || model.classes.positive != task.positive_class
    {
        return Err(PipelineError::ModelTaskMismatch {
            task: task.name.clone(),
            reason: format!(
                "model maps classes {}→0 / {}→1, task maps {}→0 / {}→1",
                model.classes.negative,
                model.classes.positive,
                task.negative_class,
                task.positive_class
            ),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::make_pairwise_tasks;
    use crate::training::OptimizerKind;

    fn toy_task() -> BinaryTask {
        // One feature on [0, 8]. The angle map is π-periodic up to sign,
        // so the range endpoints collide; class 0 owns both extremes
        // (which encode the same state) and class 1 sits mid-range at a
        // cleanly separated effective angle.
        let rows: Vec<(f64, u8)> = vec![
            (0.0, 0),
            (0.05, 0),
            (0.1, 0),
            (7.9, 0),
            (7.95, 0),
            (8.0, 0),
            (2.9, 1),
            (2.95, 1),
            (3.0, 1),
            (3.05, 1),
            (3.1, 1),
        ];
        BinaryTask {
            name: "toy".to_string(),
            negative_class: 1,
            positive_class: 2,
            negative_name: "edges".to_string(),
            positive_name: "middle".to_string(),
            feature_names: vec!["x".to_string()],
            rows: rows.iter().map(|&(v, _)| vec![v]).collect(),
            labels: rows.iter().map(|&(_, l)| l).collect(),
            // the range extremes stay in train so the bounds cover test rows
            train_idx: vec![0, 1, 3, 5, 6, 7, 9, 10],
            test_idx: vec![2, 4, 8],
            seed: 1,
        }
    }

    #[test]
    fn toy_task_trains_to_perfect_accuracy() {
        let task = toy_task();
        let config = TrainConfig {
            max_iters: 80,
            restarts: 2,
            seed: 5,
            ..TrainConfig::default()
        };
        let (model, run) = train_task(&task, &config, true).unwrap();
        assert!(run.final_cost < 0.05, "final cost {}", run.final_cost);
        let report = evaluate_split(&model, &task, Split::Train, Backend::Dense).unwrap();
        assert_eq!(report.accuracy, 100.0);
        let report = evaluate_split(&model, &task, Split::Test, Backend::Dense).unwrap();
        assert_eq!(report.accuracy, 100.0);
        assert_eq!(report.per_sample.len(), 3);
    }

    #[test]
    fn setosa_virginica_model_rejects_held_out_setosa() {
        let data = crate::data::load_iris_fixture();
        let task = make_pairwise_tasks(&data, &[(1, 3)], 0.8, 7).unwrap().remove(0);
        let config = TrainConfig {
            max_iters: 80,
            restarts: 2,
            seed: 2,
            ..TrainConfig::default()
        };
        let (model, _) = train_task(&task, &config, true).unwrap();
        // a held-out setosa row must come back as label 0 with m < 0.5
        let (row, label) = task
            .split_samples(Split::Test)
            .find(|&(_, label)| label == 0)
            .unwrap();
        assert_eq!(label, 0);
        let (predicted, score) = model.predict(row).unwrap();
        assert_eq!(predicted, 0);
        assert!(score < 0.5, "score {score}");
    }

    #[test]
    fn mismatched_model_and_task_are_rejected() {
        let task = toy_task();
        let config = TrainConfig {
            max_iters: 5,
            restarts: 1,
            ..TrainConfig::default()
        };
        let (model, _) = train_task(&task, &config, true).unwrap();

        let mut other = toy_task();
        other.positive_class = 9;
        assert!(matches!(
            evaluate_split(&model, &other, Split::Test, Backend::Dense),
            Err(PipelineError::ModelTaskMismatch { .. })
        ));

        let mut wide = toy_task();
        wide.feature_names.push("y".to_string());
        for row in &mut wide.rows {
            row.push(0.0);
        }
        assert!(matches!(
            evaluate_split(&model, &wide, Split::Test, Backend::Dense),
            Err(PipelineError::ModelTaskMismatch { .. })
        ));
    }

    #[test]
    fn empty_split_is_reported() {
        let mut task = toy_task();
        task.test_idx.clear();
        let config = TrainConfig {
            max_iters: 5,
            restarts: 1,
            ..TrainConfig::default()
        };
        let (model, _) = train_task(&task, &config, true).unwrap();
        assert!(matches!(
            evaluate_split(&model, &task, Split::Test, Backend::Dense),
            Err(PipelineError::EmptySplit(_, Split::Test))
        ));
    }

    #[test]
    fn sgd_path_works_end_to_end() {
        let task = toy_task();
        let config = TrainConfig {
            optimizer: OptimizerKind::Sgd,
            max_iters: 120,
            learning_rate: 0.5,
            batch_size: 4,
            restarts: 1,
            seed: 8,
            ..TrainConfig::default()
        };
        let (model, run) = train_task(&task, &config, true).unwrap();
        assert!(run.final_cost <= run.history[0]);
        let report = evaluate_split(&model, &task, Split::Train, Backend::Dense).unwrap();
        assert!(report.accuracy >= 75.0);
    }
}
