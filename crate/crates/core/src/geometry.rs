//! Exact integer geometry for the flexible bin.
//!
//! All lengths are positive integers in abstract units. Decimal inputs are
//! scaled to integers at load time (see [`crate::dataio`]), so overlap and
//! containment tests never depend on floating-point rounding.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A side length. Always `>= 1` once it is part of an [`Item`].
pub type Dim = u32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("item {item_id} has a zero-length side")]
    ZeroDim { item_id: usize },
    #[error("orientation code {0} is outside 1..=6")]
    InvalidOrientation(u8),
    #[error("layout is empty")]
    EmptyLayout,
}

/// A cuboid to be packed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Item {
    pub id: usize,
    pub l: Dim,
    pub w: Dim,
    pub h: Dim,
}

impl Item {
    pub fn new(id: usize, l: Dim, w: Dim, h: Dim) -> Result<Self, GeometryError> {
        if l == 0 || w == 0 || h == 0 {
            return Err(GeometryError::ZeroDim { item_id: id });
        }
        Ok(Self { id, l, w, h })
    }

    pub fn dims(&self) -> [Dim; 3] {
        [self.l, self.w, self.h]
    }

    pub fn volume(&self) -> u64 {
        self.l as u64 * self.w as u64 * self.h as u64
    }

    pub fn max_side(&self) -> Dim {
        self.l.max(self.w).max(self.h)
    }
}

/// Builds an item table from raw `(l, w, h)` triples, assigning ids by index.
pub fn items_from_dims(dims: &[[Dim; 3]]) -> Result<Vec<Item>, GeometryError> {
    dims.iter()
        .enumerate()
        .map(|(id, &[l, w, h])| Item::new(id, l, w, h))
        .collect()
}

/// One of the six axis-aligned rotations of a cuboid, numbered 1 through 6.
///
/// | code | (length, width, height) |
/// |------|-------------------------|
/// | 1    | (l, w, h)               |
/// | 2    | (l, h, w)               |
/// | 3    | (w, l, h)               |
/// | 4    | (w, h, l)               |
/// | 5    | (h, l, w)               |
/// | 6    | (h, w, l)               |
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct OrientationCode(u8);

impl OrientationCode {
    pub const ALL: [OrientationCode; 6] = [
        OrientationCode(1),
        OrientationCode(2),
        OrientationCode(3),
        OrientationCode(4),
        OrientationCode(5),
        OrientationCode(6),
    ];

    pub fn new(code: u8) -> Result<Self, GeometryError> {
        if (1..=6).contains(&code) {
            Ok(Self(code))
        } else {
            Err(GeometryError::InvalidOrientation(code))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Source axis (0 = l, 1 = w, 2 = h) feeding each oriented axis.
    fn permutation(self) -> [usize; 3] {
        match self.0 {
            1 => [0, 1, 2],
            2 => [0, 2, 1],
            3 => [1, 0, 2],
            4 => [1, 2, 0],
            5 => [2, 0, 1],
            6 => [2, 1, 0],
            _ => unreachable!("orientation code validated at construction"),
        }
    }
}

impl TryFrom<u8> for OrientationCode {
    type Error = GeometryError;

    fn try_from(code: u8) -> Result<Self, Self::Error> {
        Self::new(code)
    }
}

impl From<OrientationCode> for u8 {
    fn from(code: OrientationCode) -> u8 {
        code.0
    }
}

impl fmt::Display for OrientationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Extents of an item after rotation, along the bin's x, y and z axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OrientedBox {
    pub l: Dim,
    pub w: Dim,
    pub h: Dim,
}

impl OrientedBox {
    pub fn new(l: Dim, w: Dim, h: Dim) -> Self {
        Self { l, w, h }
    }

    pub fn extents(&self) -> [Dim; 3] {
        [self.l, self.w, self.h]
    }

    pub fn volume(&self) -> u64 {
        self.l as u64 * self.w as u64 * self.h as u64
    }
}

pub fn orient(item: &Item, code: OrientationCode) -> OrientedBox {
    let dims = item.dims();
    let [a, b, c] = code.permutation();
    OrientedBox::new(dims[a], dims[b], dims[c])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// An item committed to a front-left-bottom coordinate in a given orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Placement {
    pub item_id: usize,
    pub orientation: OrientationCode,
    pub x: u32,
    pub y: u32,
    pub z: u32,
}

impl Placement {
    pub fn origin(&self) -> [u32; 3] {
        [self.x, self.y, self.z]
    }
}

/// True iff the open interiors of the two boxes intersect.
///
/// Boxes that only share a face, an edge or a corner do not overlap.
pub fn overlaps(a: &Placement, box_a: &OrientedBox, b: &Placement, box_b: &OrientedBox) -> bool {
    let (oa, ea) = (a.origin(), box_a.extents());
    let (ob, eb) = (b.origin(), box_b.extents());
    (0..3).all(|k| {
        let (a0, a1) = (oa[k] as u64, oa[k] as u64 + ea[k] as u64);
        let (b0, b1) = (ob[k] as u64, ob[k] as u64 + eb[k] as u64);
        a0 < b1 && b0 < a1
    })
}

/// Placements in packing order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Layout {
    pub placements: Vec<Placement>,
}

impl Layout {
    pub fn new(placements: Vec<Placement>) -> Self {
        Self { placements }
    }

    pub fn len(&self) -> usize {
        self.placements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.placements.is_empty()
    }
}

/// The flexible bin: length, width and height of the enclosing box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoundingBox {
    pub l: Dim,
    pub w: Dim,
    pub h: Dim,
}

impl BoundingBox {
    pub fn new(l: Dim, w: Dim, h: Dim) -> Self {
        Self { l, w, h }
    }

    pub fn extents(&self) -> [Dim; 3] {
        [self.l, self.w, self.h]
    }

    pub fn volume(&self) -> u64 {
        self.l as u64 * self.w as u64 * self.h as u64
    }
}

/// Tight enclosing box of a layout: per-axis maximum of origin plus extent.
///
/// Placements whose `item_id` is not in `items` are ignored here; use
/// [`validate`] to detect them.
pub fn bounding_box(layout: &Layout, items: &[Item]) -> Result<BoundingBox, GeometryError> {
    if layout.is_empty() {
        return Err(GeometryError::EmptyLayout);
    }
    let mut max = [0u32; 3];
    for p in &layout.placements {
        let Some(item) = items.get(p.item_id) else {
            continue;
        };
        let ext = orient(item, p.orientation).extents();
        for k in 0..3 {
            max[k] = max[k].max(p.origin()[k] + ext[k]);
        }
    }
    Ok(BoundingBox::new(max[0], max[1], max[2]))
}

/// `L·W + L·H + W·H`, i.e. half the geometric surface area of the bin.
pub fn objective(bb: &BoundingBox) -> u64 {
    let (l, w, h) = (bb.l as u64, bb.w as u64, bb.h as u64);
    l * w + l * h + w * h
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    /// An item of the instance was never placed.
    Missing { item_id: usize },
    /// An item was placed more than once.
    Duplicate { item_id: usize },
    /// No separating axis exists between the two items.
    Overlap { a: usize, b: usize },
    /// The item sticks out of the bin along `axis`.
    OutsideBin { item_id: usize, axis: Axis },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Missing { item_id } => write!(f, "item {item_id} is not placed"),
            Violation::Duplicate { item_id } => write!(f, "item {item_id} is placed more than once"),
            Violation::Overlap { a, b } => write!(f, "items {a} and {b} overlap"),
            Violation::OutsideBin { item_id, axis } => {
                write!(f, "item {item_id} exceeds the bin along {axis:?}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("placement references unknown item {item_id}")]
    UnknownItem { item_id: usize },
    #[error("layout violates {} constraint(s); first: {}", .0.len(), .0[0])]
    Infeasible(Vec<Violation>),
}

/// How item `i` is separated from item `j`, if at all.
///
/// Returns the axis along which `i` lies entirely before `j`
/// (left of, back of, under), or `None`.
pub fn separation(a: &Placement, box_a: &OrientedBox, b: &Placement) -> Option<Axis> {
    let (oa, ea, ob) = (a.origin(), box_a.extents(), b.origin());
    Axis::ALL
        .into_iter()
        .find(|axis| oa[axis.index()] as u64 + ea[axis.index()] as u64 <= ob[axis.index()] as u64)
}

/// Full feasibility check of a layout against an instance and a bin.
pub fn validate(layout: &Layout, items: &[Item], bb: &BoundingBox) -> Result<(), ValidationError> {
    let mut boxes = Vec::with_capacity(layout.len());
    let mut seen: HashMap<usize, usize> = HashMap::new();
    for p in &layout.placements {
        let item = items
            .get(p.item_id)
            .filter(|it| it.id == p.item_id)
            .ok_or(ValidationError::UnknownItem { item_id: p.item_id })?;
        boxes.push(orient(item, p.orientation));
        *seen.entry(p.item_id).or_default() += 1;
    }

    let mut violations = Vec::new();
    for item in items {
        match seen.get(&item.id).copied().unwrap_or(0) {
            0 => violations.push(Violation::Missing { item_id: item.id }),
            1 => {}
            _ => violations.push(Violation::Duplicate { item_id: item.id }),
        }
    }

    let ps = &layout.placements;
    for i in 0..ps.len() {
        for j in i + 1..ps.len() {
            let separated = separation(&ps[i], &boxes[i], &ps[j]).is_some()
                || separation(&ps[j], &boxes[j], &ps[i]).is_some();
            if !separated {
                violations.push(Violation::Overlap {
                    a: ps[i].item_id.min(ps[j].item_id),
                    b: ps[i].item_id.max(ps[j].item_id),
                });
            }
        }
    }

    let limit = bb.extents();
    for (p, b) in ps.iter().zip(&boxes) {
        let (o, e) = (p.origin(), b.extents());
        for axis in Axis::ALL {
            let k = axis.index();
            if o[k] as u64 + e[k] as u64 > limit[k] as u64 {
                violations.push(Violation::OutsideBin { item_id: p.item_id, axis });
            }
        }
    }

    if violations.is_empty() {
        Ok(())
    } else {
        Err(ValidationError::Infeasible(violations))
    }
}
