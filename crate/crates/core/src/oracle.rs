//! Brute-force ground truth for small instances.

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{orient, Item, OrientationCode, OrientedBox};
use crate::strategy::{evaluate, PackingState, Solution, Strategy, StrategyError};

pub const DEFAULT_CAP: usize = 5;
pub const DEFAULT_FULL_CAP: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("instance has {n} items, oracle cap is {cap}")]
    CapExceeded { n: usize, cap: usize },
    #[error(transparent)]
    Strategy(#[from] StrategyError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub best: Solution,
    /// Complete assignments evaluated.
    pub explored: u64,
}

/// Advances `seq` to the next permutation in lexicographic order.
fn next_permutation(seq: &mut [usize]) -> bool {
    let Some(i) = seq.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = seq.iter().rposition(|&x| x > seq[i]).expect("pivot has a successor");
    seq.swap(i, j);
    seq[i + 1..].reverse();
    true
}

/// Advances a base-6 counter of orientation codes; `false` on wrap-around.
fn next_orientations(codes: &mut [OrientationCode]) -> bool {
    for c in codes.iter_mut().rev() {
        if c.get() < 6 {
            *c = OrientationCode::ALL[c.get() as usize];
            return true;
        }
        *c = OrientationCode::ALL[0];
    }
    false
}

fn check_size(items: &[Item], cap: usize) -> Result<(), OracleError> {
    if items.is_empty() {
        return Err(StrategyError::EmptyInstance.into());
    }
    if items.len() > cap {
        return Err(OracleError::CapExceeded { n: items.len(), cap });
    }
    Ok(())
}

type Key = (u64, Vec<usize>, Vec<OrientationCode>);

fn key(sol: &Solution) -> Key {
    (sol.sa, sol.sequence.clone(), sol.orientations.clone())
}

/// Minimum objective over every sequence × orientation assignment, with
/// spaces chosen by `strategy`. Ties go to the lexicographically smallest
/// (sequence, orientations).
pub fn exhaustive(items: &[Item], strategy: &Strategy, cap: usize) -> Result<OracleResult, OracleError> {
    check_size(items, cap)?;
    let n = items.len();

    // one subtree per leading item
    let partial: Vec<(Solution, u64)> = (0..n)
        .into_par_iter()
        .map(|first| -> Result<(Solution, u64), OracleError> {
            let mut rest: Vec<usize> = (0..n).filter(|&i| i != first).collect();
            let mut best: Option<Solution> = None;
            let mut explored = 0u64;
            loop {
                let seq: Vec<usize> = std::iter::once(first).chain(rest.iter().copied()).collect();
                let mut codes = vec![OrientationCode::ALL[0]; n];
                loop {
                    let sol = evaluate(items, &seq, &codes, strategy)?;
                    explored += 1;
                    if best.as_ref().is_none_or(|b| sol.sa < b.sa) {
                        best = Some(sol);
                    }
                    if !next_orientations(&mut codes) {
                        break;
                    }
                }
                if !next_permutation(&mut rest) {
                    break;
                }
            }
            Ok((best.expect("at least one assignment"), explored))
        })
        .collect::<Result<_, _>>()?;

    let explored = partial.iter().map(|(_, e)| e).sum();
    let best = partial
        .into_iter()
        .map(|(s, _)| s)
        .min_by_key(key)
        .expect("non-empty instance");
    Ok(OracleResult { best, explored })
}

struct FullSearch<'a> {
    items: &'a [Item],
    boxes: Vec<Vec<(OrientationCode, OrientedBox)>>,
    best: Option<Solution>,
    explored: u64,
    sequence: Vec<usize>,
    orientations: Vec<OrientationCode>,
}

impl FullSearch<'_> {
    fn descend(&mut self, state: &PackingState<'_>, placed: &mut [bool]) {
        if self.sequence.len() == self.items.len() {
            self.explored += 1;
            let sa = state.current_objective();
            if self.best.as_ref().is_none_or(|b| sa < b.sa) {
                let sol = evaluate_layout(state, &self.sequence, &self.orientations);
                self.best = Some(sol);
            }
            return;
        }
        for id in 0..self.items.len() {
            if placed[id] {
                continue;
            }
            for k in 0..self.boxes[id].len() {
                let (code, b) = self.boxes[id][k];
                for space in state.spaces().candidates(&b) {
                    let bound = state.objective_if_placed(space, &b);
                    // the objective never shrinks as items are added
                    if self.best.as_ref().is_some_and(|best| bound >= best.sa) {
                        continue;
                    }
                    let mut next = state.clone();
                    next.commit(&self.items[id], code, space);
                    placed[id] = true;
                    self.sequence.push(id);
                    self.orientations.push(code);
                    self.descend(&next, placed);
                    self.orientations.pop();
                    self.sequence.pop();
                    placed[id] = false;
                }
            }
        }
    }
}

fn evaluate_layout(
    state: &PackingState<'_>,
    sequence: &[usize],
    orientations: &[OrientationCode],
) -> Solution {
    let bbox = state.bbox().expect("complete packing");
    Solution {
        sequence: sequence.to_vec(),
        orientations: orientations.to_vec(),
        layout: state.placed().clone(),
        bbox,
        sa: crate::geometry::objective(&bbox),
    }
}

/// Global optimum under the EMS placement scheme: branches over item,
/// orientation and every fitting space at each step.
///
/// Partial packings whose objective already reaches the incumbent are
/// pruned, so `explored` counts only the complete packings reached.
pub fn exhaustive_full(items: &[Item], cap: usize) -> Result<OracleResult, OracleError> {
    check_size(items, cap)?;
    let boxes = items
        .iter()
        .map(|item| {
            let mut distinct: Vec<(OrientationCode, OrientedBox)> = Vec::with_capacity(6);
            for code in OrientationCode::ALL {
                let b = orient(item, code);
                if !distinct.iter().any(|(_, d)| *d == b) {
                    distinct.push((code, b));
                }
            }
            distinct
        })
        .collect();
    let mut search = FullSearch {
        items,
        boxes,
        best: None,
        explored: 0,
        sequence: Vec::with_capacity(items.len()),
        orientations: Vec::with_capacity(items.len()),
    };
    let state = PackingState::new(items);
    search.descend(&state, &mut vec![false; items.len()]);
    Ok(OracleResult {
        best: search.best.expect("default container admits every packing"),
        explored: search.explored,
    })
}
