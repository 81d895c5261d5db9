use rand::seq::SliceRandom;

use super::{PretrainingSet, TaskTag, TrainingPair};
use crate::error::{Error, Result};
use crate::seed;

/// A multi-task mini-batch with exactly `size / 4` pairs from each task.
#[derive(Clone, Debug)]
pub struct Batch<'a> {
    pub size: usize,
    pub pairs: Vec<&'a TrainingPair>,
    /// Index of each pair within its task's dataset.
    pub positions: Vec<usize>,
}

impl Batch<'_> {
    pub fn count(&self, task: TaskTag) -> usize {
        self.pairs.iter().filter(|p| p.task == task).count()
    }
}

/// Evenly mixed batches over the four task datasets.
///
/// Each task is read through its own seeded permutation; a task that runs out
/// wraps around to the start of its permutation. The stream ends once the
/// largest task has been seen in full.
pub struct BatchStream<'a> {
    data: &'a PretrainingSet,
    orders: [Vec<usize>; 4],
    cursors: [usize; 4],
    per_task: usize,
    remaining: usize,
}

pub fn make_batches(data: &PretrainingSet, batch_size: usize, seed: u64) -> Result<BatchStream<'_>> {
    if batch_size == 0 || batch_size % 4 != 0 {
        return Err(Error::Param(format!(
            "batch size {batch_size} is not a positive multiple of 4"
        )));
    }
    if let Some(task) = TaskTag::ALL.iter().find(|&&t| data.get(t).is_empty()) {
        return Err(Error::Param(format!("task dataset {} is empty", task.as_str())));
    }
    let per_task = batch_size / 4;
    let orders = TaskTag::ALL.map(|task| {
        let mut order: Vec<usize> = (0..data.get(task).len()).collect();
        order.shuffle(&mut seed::rng_for(seed, &format!("batch\u{1f}{}", task.as_str())));
        order
    });
    let largest = TaskTag::ALL.iter().map(|&t| data.get(t).len()).max().unwrap_or(0);
    Ok(BatchStream {
        data,
        orders,
        cursors: [0; 4],
        per_task,
        remaining: largest.div_ceil(per_task),
    })
}

impl<'a> BatchStream<'a> {
    pub fn per_task(&self) -> usize {
        self.per_task
    }
}

impl<'a> Iterator for BatchStream<'a> {
    type Item = Batch<'a>;

    fn next(&mut self) -> Option<Batch<'a>> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let size = self.per_task * 4;
        let mut pairs = Vec::with_capacity(size);
        let mut positions = Vec::with_capacity(size);
        for (t, task) in TaskTag::ALL.iter().enumerate() {
            let dataset = self.data.get(*task);
            let order = &self.orders[t];
            for _ in 0..self.per_task {
                let idx = order[self.cursors[t] % order.len()];
                self.cursors[t] += 1;
                pairs.push(&dataset[idx]);
                positions.push(idx);
            }
        }
        Some(Batch {
            size,
            pairs,
            positions,
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

impl ExactSizeIterator for BatchStream<'_> {}
