//! Empty-maximal-space (EMS) bookkeeping.
//!
//! The free region of a container is kept as a list of axis-aligned boxes,
//! none contained in another. Placing an item replaces every space it cuts
//! with the (up to six) slabs of that space lying left, right, behind, in
//! front of, below and above the item.

use serde::{Deserialize, Serialize};

use crate::geometry::{BoundingBox, OrientedBox, Placement};

/// A free box with its front-left-bottom corner at `(x, y, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Space {
    pub x: u32,
    pub y: u32,
    pub z: u32,
    pub lx: u32,
    pub ly: u32,
    pub lz: u32,
}

impl Space {
    pub fn new(x: u32, y: u32, z: u32, lx: u32, ly: u32, lz: u32) -> Self {
        Self { x, y, z, lx, ly, lz }
    }

    pub fn origin(&self) -> [u32; 3] {
        [self.x, self.y, self.z]
    }

    pub fn extents(&self) -> [u32; 3] {
        [self.lx, self.ly, self.lz]
    }

    fn end(&self) -> [u32; 3] {
        [self.x + self.lx, self.y + self.ly, self.z + self.lz]
    }

    pub fn volume(&self) -> u64 {
        self.lx as u64 * self.ly as u64 * self.lz as u64
    }

    pub fn fits(&self, b: &OrientedBox) -> bool {
        self.lx >= b.l && self.ly >= b.w && self.lz >= b.h
    }

    pub fn contains(&self, other: &Space) -> bool {
        let (so, se) = (self.origin(), self.end());
        let (oo, oe) = (other.origin(), other.end());
        (0..3).all(|k| so[k] <= oo[k] && oe[k] <= se[k])
    }

    pub fn contains_point(&self, p: [u32; 3]) -> bool {
        let (o, e) = (self.origin(), self.end());
        (0..3).all(|k| o[k] <= p[k] && p[k] < e[k])
    }

    fn sort_key(&self) -> (u32, u32, u32, u32, u32, u32) {
        (self.z, self.y, self.x, self.lx, self.ly, self.lz)
    }

    /// Pieces of `self` left over once `[lo, hi)` is carved out, one slab per
    /// face of the carved box, tagged with the face (`2 * axis + side`).
    /// Slabs overlap each other at the corners.
    fn difference(&self, lo: [u32; 3], hi: [u32; 3], out: &mut Vec<(u8, Space)>) {
        let (so, se) = (self.origin(), self.end());
        for k in 0..3 {
            if lo[k] > so[k] {
                let mut ext = self.extents();
                ext[k] = lo[k] - so[k];
                out.push((2 * k as u8, Space::from_parts(so, ext)));
            }
            if hi[k] < se[k] {
                let mut origin = so;
                let mut ext = self.extents();
                origin[k] = hi[k];
                ext[k] = se[k] - hi[k];
                out.push((2 * k as u8 + 1, Space::from_parts(origin, ext)));
            }
        }
    }

    fn from_parts(o: [u32; 3], e: [u32; 3]) -> Self {
        Self::new(o[0], o[1], o[2], e[0], e[1], e[2])
    }
}

thread_local! {
    static FRESH: std::cell::RefCell<Vec<(u8, Space)>> = const { std::cell::RefCell::new(Vec::new()) };
}

/// Maximal free spaces, kept sorted by `(z, y, x, lx, ly, lz)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceList {
    spaces: Vec<Space>,
}

impl SpaceList {
    pub fn init(container: &BoundingBox) -> Self {
        Self {
            spaces: vec![Space::new(0, 0, 0, container.l, container.w, container.h)],
        }
    }

    /// Builds a list from arbitrary spaces, restoring the canonical order.
    pub fn from_spaces(mut spaces: Vec<Space>) -> Self {
        spaces.sort_unstable_by_key(Space::sort_key);
        spaces.dedup();
        Self { spaces }
    }

    pub fn spaces(&self) -> &[Space] {
        &self.spaces
    }

    pub fn len(&self) -> usize {
        self.spaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spaces.is_empty()
    }

    /// Returns the list that remains after `placed` is committed.
    pub fn split(&self, placed: &Placement, b: &OrientedBox) -> SpaceList {
        let mut next = self.clone();
        next.split_in_place(placed, b);
        next
    }

    pub fn split_in_place(&mut self, placed: &Placement, b: &OrientedBox) {
        let lo = placed.origin();
        let ext = b.extents();
        let hi = [lo[0] + ext[0], lo[1] + ext[1], lo[2] + ext[2]];

        FRESH.with_borrow_mut(|fresh| {
            fresh.clear();
            self.spaces.retain(|s| {
                let (so, se) = (s.origin(), s.end());
                let cut = (0..3).all(|k| so[k] < hi[k] && lo[k] < se[k]);
                if cut {
                    s.difference(lo, hi, fresh);
                }
                !cut
            });

            // Survivors were mutually maximal before, and a fresh slab lies
            // inside a removed parent, so only fresh slabs can be dominated.
            // A slab bounded by one face of the box reaches past every other
            // face, so it can only sit inside a survivor or a slab bounded by
            // the same face.
            let survivors = self.spaces.len();
            for (i, (face, s)) in fresh.iter().enumerate() {
                let dominated = self.spaces[..survivors].iter().any(|k| k.contains(s))
                    || fresh.iter().enumerate().any(|(j, (other_face, t))| {
                        j != i && other_face == face && t.contains(s) && (t != s || j < i)
                    });
                if !dominated {
                    self.spaces.push(*s);
                }
            }
        });
        self.spaces.sort_unstable_by_key(Space::sort_key);
    }

    /// Spaces that can hold `b` at their origin, in list order.
    pub fn candidates<'a>(&'a self, b: &OrientedBox) -> impl Iterator<Item = &'a Space> + 'a {
        let b = *b;
        self.spaces.iter().filter(move |s| s.fits(&b))
    }
}
