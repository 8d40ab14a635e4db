use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{train, TaskModel, TrainingConfig};
use crate::corpus::{DataSplit, Task, TaskInstance};
use crate::error::Result;
use crate::textproc::StopList;
use crate::vectorizer::{SparseVector, Vectorizer, VectorizerConfig};

/// Penalty parameter per task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerTaskC {
    pub p: f64,
    pub i: f64,
    pub o: f64,
}

impl Default for PerTaskC {
    fn default() -> Self {
        PerTaskC {
            p: 1.0,
            i: 1.0,
            o: 0.6,
        }
    }
}

impl PerTaskC {
    pub fn get(&self, task: Task) -> f64 {
        match task {
            Task::P => self.p,
            Task::I => self.i,
            Task::O => self.o,
        }
    }

    pub fn set(&mut self, task: Task, c: f64) {
        match task {
            Task::P => self.p = c,
            Task::I => self.i = c,
            Task::O => self.o = c,
        }
    }
}

/// Fit a vocabulary on `train` only, then train the SVM on its vectors.
pub fn fit_task(
    task: Task,
    train_set: &[TaskInstance<'_>],
    vconfig: VectorizerConfig,
    stoplist: &StopList,
    tconfig: &TrainingConfig,
) -> Result<TaskModel> {
    let texts: Vec<&str> = train_set.iter().map(|i| i.sentence.text.as_str()).collect();
    let vectorizer = Vectorizer::fit(texts.iter().copied(), vconfig, stoplist.clone())?;
    let x: Vec<SparseVector> = vectorizer.vectorize_all(&texts);
    let y: Vec<f64> = train_set.iter().map(TaskInstance::sign).collect();
    let model = train(&x, &y, tconfig)?;
    Ok(TaskModel {
        task,
        vectorizer,
        model,
    })
}

/// Train one model per split, in parallel. Each model sees only its own
/// training part and gets the task's penalty from `cs`.
pub fn train_multitask(
    splits: &[(Task, DataSplit<'_>)],
    vconfig: VectorizerConfig,
    stoplist: &StopList,
    cs: PerTaskC,
    base: &TrainingConfig,
) -> Result<Vec<TaskModel>> {
    splits
        .par_iter()
        .map(|(task, split)| {
            let cfg = base.with_c(cs.get(*task));
            fit_task(*task, &split.train, vconfig, stoplist, &cfg)
        })
        .collect()
}
