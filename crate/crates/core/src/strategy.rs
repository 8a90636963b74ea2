//! Constructive placement: the LWSC, DBLF and DFTRC space-selection rules,
//! the sequence/orientation evaluator, and the greedy and random baselines.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ems::{Space, SpaceList};
use crate::geometry::{
    objective, orient, BoundingBox, Item, Layout, OrientationCode, OrientedBox, Placement,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StrategyError {
    #[error("instance has no items")]
    EmptyInstance,
    #[error("no empty space can hold item {item_id}")]
    NoFit { item_id: usize },
    #[error("not a permutation")]
    NotAPermutation,
    #[error("expected {expected} orientations, got {got}")]
    OrientationCount { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyId {
    Lwsc,
    Dftrc,
    Dblf,
}

/// A space-selection rule, with the target bin DFTRC measures against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Least increase of the bin objective.
    Lwsc,
    /// Deepest, then bottom-most, then left-most space.
    Dblf,
    /// Space farthest from the front-top-right corner of `target`.
    Dftrc { target: BoundingBox },
}

impl Strategy {
    pub fn id(&self) -> StrategyId {
        match self {
            Strategy::Lwsc => StrategyId::Lwsc,
            Strategy::Dblf => StrategyId::Dblf,
            Strategy::Dftrc { .. } => StrategyId::Dftrc,
        }
    }
}

/// Cube container with side `Σ max(l, w, h)`; every packing of the
/// instance fits inside it.
pub fn default_container(items: &[Item]) -> BoundingBox {
    let side: u32 = items.iter().map(Item::max_side).sum();
    BoundingBox::new(side.max(1), side.max(1), side.max(1))
}

fn grown(bb: Option<BoundingBox>, origin: [u32; 3], b: &OrientedBox) -> BoundingBox {
    let end = [origin[0] + b.l, origin[1] + b.w, origin[2] + b.h];
    match bb {
        None => BoundingBox::new(end[0], end[1], end[2]),
        Some(bb) => BoundingBox::new(bb.l.max(end[0]), bb.w.max(end[1]), bb.h.max(end[2])),
    }
}

/// A partial packing: what has been placed and the free spaces left.
#[derive(Debug, Clone)]
pub struct PackingState<'a> {
    items: &'a [Item],
    placed: Layout,
    spaces: SpaceList,
    container: BoundingBox,
    bbox: Option<BoundingBox>,
}

impl<'a> PackingState<'a> {
    pub fn new(items: &'a [Item]) -> Self {
        Self::with_container(items, default_container(items))
    }

    pub fn with_container(items: &'a [Item], container: BoundingBox) -> Self {
        Self {
            items,
            placed: Layout::default(),
            spaces: SpaceList::init(&container),
            container,
            bbox: None,
        }
    }

    pub fn items(&self) -> &'a [Item] {
        self.items
    }

    pub fn placed(&self) -> &Layout {
        &self.placed
    }

    pub fn spaces(&self) -> &SpaceList {
        &self.spaces
    }

    pub fn container(&self) -> BoundingBox {
        self.container
    }

    /// Tight box of everything placed so far.
    pub fn bbox(&self) -> Option<BoundingBox> {
        self.bbox
    }

    /// Objective of the current tight box; zero while nothing is placed.
    pub fn current_objective(&self) -> u64 {
        self.bbox.as_ref().map_or(0, objective)
    }

    /// Objective of the tight box after putting `b` at the origin of `space`.
    pub fn objective_if_placed(&self, space: &Space, b: &OrientedBox) -> u64 {
        objective(&grown(self.bbox, space.origin(), b))
    }

    /// Places `item` at the origin of `space` and updates the free spaces.
    pub fn commit(&mut self, item: &Item, code: OrientationCode, space: &Space) -> Placement {
        let b = orient(item, code);
        let p = Placement { item_id: item.id, orientation: code, x: space.x, y: space.y, z: space.z };
        self.spaces.split_in_place(&p, &b);
        self.bbox = Some(grown(self.bbox, p.origin(), &b));
        self.placed.placements.push(p);
        p
    }

    fn best_lwsc_space(&self, b: &OrientedBox) -> Option<(u64, Space)> {
        let mut best: Option<(u64, Space)> = None;
        for s in self.spaces.candidates(b) {
            let value = self.objective_if_placed(s, b);
            if best.is_none_or(|(v, _)| value < v) {
                best = Some((value, *s));
            }
        }
        best
    }
}

/// Least-increase (orientation, space) pair for `item`.
///
/// Ties go to the earlier space, then to the lower orientation code.
pub fn place_step_lwsc(
    state: &PackingState<'_>,
    item: &Item,
) -> Result<(OrientationCode, Space), StrategyError> {
    let boxes = OrientationCode::ALL.map(|c| orient(item, c));
    let mut best: Option<(u64, OrientationCode, Space)> = None;
    for s in state.spaces.spaces() {
        for (code, b) in OrientationCode::ALL.iter().zip(&boxes) {
            if !s.fits(b) {
                continue;
            }
            let value = state.objective_if_placed(s, b);
            if best.is_none_or(|(v, _, _)| value < v) {
                best = Some((value, *code, *s));
            }
        }
    }
    best.map(|(_, c, s)| (c, s)).ok_or(StrategyError::NoFit { item_id: item.id })
}

pub fn place_step_lwsc_fixed_orientation(
    state: &PackingState<'_>,
    item: &Item,
    code: OrientationCode,
) -> Result<Space, StrategyError> {
    state
        .best_lwsc_space(&orient(item, code))
        .map(|(_, s)| s)
        .ok_or(StrategyError::NoFit { item_id: item.id })
}

/// First fitting space in `(z, y, x)` order.
pub fn place_step_dblf(state: &PackingState<'_>, b: &OrientedBox) -> Option<Space> {
    // the list is kept sorted by (z, y, x, ..)
    state.spaces.candidates(b).next().copied()
}

/// Fitting space whose origin is farthest (squared Euclidean) from the
/// front-top-right corner of `target`; ties go to the earlier space.
pub fn place_step_dftrc(
    state: &PackingState<'_>,
    b: &OrientedBox,
    target: &BoundingBox,
) -> Option<Space> {
    let corner = target.extents();
    let mut best: Option<(i64, Space)> = None;
    for s in state.spaces.candidates(b) {
        let d: i64 = (0..3)
            .map(|k| {
                let diff = corner[k] as i64 - s.origin()[k] as i64;
                diff * diff
            })
            .sum();
        if best.is_none_or(|(v, _)| d > v) {
            best = Some((d, *s));
        }
    }
    best.map(|(_, s)| s)
}

/// A complete packing of an instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Solution {
    /// Item ids in packing order.
    pub sequence: Vec<usize>,
    /// Orientation used at each packing step.
    pub orientations: Vec<OrientationCode>,
    pub layout: Layout,
    pub bbox: BoundingBox,
    pub sa: u64,
}

impl Solution {
    fn from_state(state: PackingState<'_>, orientations: Vec<OrientationCode>) -> Self {
        let bbox = state.bbox.expect("solution built from a non-empty packing");
        Self {
            sequence: state.placed.placements.iter().map(|p| p.item_id).collect(),
            orientations,
            sa: objective(&bbox),
            bbox,
            layout: state.placed,
        }
    }
}

pub fn check_permutation(sequence: &[usize], n: usize) -> Result<(), StrategyError> {
    if sequence.len() != n {
        return Err(StrategyError::NotAPermutation);
    }
    let mut seen = vec![false; n];
    for &id in sequence {
        match seen.get_mut(id) {
            Some(slot) if !*slot => *slot = true,
            _ => return Err(StrategyError::NotAPermutation),
        }
    }
    Ok(())
}

/// Packs `items` in `sequence`, rotating the item at step `t` by
/// `orientations[t]`, choosing spaces with `strategy`.
pub fn evaluate(
    items: &[Item],
    sequence: &[usize],
    orientations: &[OrientationCode],
    strategy: &Strategy,
) -> Result<Solution, StrategyError> {
    if items.is_empty() {
        return Err(StrategyError::EmptyInstance);
    }
    check_permutation(sequence, items.len())?;
    if orientations.len() != items.len() {
        return Err(StrategyError::OrientationCount {
            expected: items.len(),
            got: orientations.len(),
        });
    }

    let mut state = PackingState::new(items);
    for (&id, &code) in sequence.iter().zip(orientations) {
        let item = &items[id];
        let b = orient(item, code);
        let space = match strategy {
            Strategy::Lwsc => state.best_lwsc_space(&b).map(|(_, s)| s),
            Strategy::Dblf => place_step_dblf(&state, &b),
            Strategy::Dftrc { target } => place_step_dftrc(&state, &b, target),
        }
        .ok_or(StrategyError::NoFit { item_id: id })?;
        state.commit(item, code, &space);
    }
    Ok(Solution::from_state(state, orientations.to_vec()))
}

/// Full LWSC greedy: each step commits the (item, orientation, space) with
/// least objective increase, ties by item id, orientation code, space order.
pub fn greedy_lwsc(items: &[Item]) -> Result<Solution, StrategyError> {
    if items.is_empty() {
        return Err(StrategyError::EmptyInstance);
    }
    let mut state = PackingState::new(items);
    let mut placed = vec![false; items.len()];
    let mut orientations = Vec::with_capacity(items.len());
    for _ in 0..items.len() {
        let mut best: Option<(u64, usize, OrientationCode, Space)> = None;
        for item in items.iter().filter(|it| !placed[it.id]) {
            for code in OrientationCode::ALL {
                if let Some((value, s)) = state.best_lwsc_space(&orient(item, code)) {
                    if best.is_none_or(|(v, ..)| value < v) {
                        best = Some((value, item.id, code, s));
                    }
                }
            }
        }
        let (_, id, code, s) = best.ok_or_else(|| StrategyError::NoFit {
            item_id: items.iter().find(|it| !placed[it.id]).map_or(0, |it| it.id),
        })?;
        state.commit(&items[id], code, &s);
        placed[id] = true;
        orientations.push(code);
    }
    Ok(Solution::from_state(state, orientations))
}

/// Uniform random sequence and orientations, spaces chosen by LWSC.
pub fn random_solution(items: &[Item], seed: u64) -> Result<Solution, StrategyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_solution_with(items, &mut rng)
}

pub fn random_solution_with<R: Rng + ?Sized>(
    items: &[Item],
    rng: &mut R,
) -> Result<Solution, StrategyError> {
    let mut sequence: Vec<usize> = (0..items.len()).collect();
    sequence.shuffle(rng);
    let orientations: Vec<OrientationCode> = (0..items.len())
        .map(|_| OrientationCode::ALL[rng.gen_range(0..6)])
        .collect();
    evaluate(items, &sequence, &orientations, &Strategy::Lwsc)
}
