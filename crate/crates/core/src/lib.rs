//! Solvers for the 3D flexible bin packing problem: pack every item of an
//! order into one box whose dimensions are free, minimizing
//! `L·W + L·H + W·H`.

pub mod dataio;
pub mod ems;
pub mod ga;
pub mod geometry;
pub mod oracle;
pub mod strategy;

pub use ems::{Space, SpaceList};
pub use geometry::{
    bounding_box, objective, orient, overlaps, validate, BoundingBox, Dim, Item, Layout,
    OrientationCode, OrientedBox, Placement, ValidationError, Violation,
};
pub use strategy::{evaluate, greedy_lwsc, random_solution, Solution, Strategy, StrategyId};
