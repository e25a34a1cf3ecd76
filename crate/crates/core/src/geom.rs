//! Grid coordinates, headings and poses shared by the world, belief and
//! planning modules.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Cell { x, y }
    }

    pub fn manhattan(self, other: Cell) -> usize {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridDims {
    pub width: usize,
    pub height: usize,
}

impl GridDims {
    pub const fn new(width: usize, height: usize) -> Self {
        GridDims { width, height }
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, c: Cell) -> usize {
        c.y * self.width + c.x
    }

    #[inline]
    pub fn cell(&self, index: usize) -> Cell {
        Cell::new(index % self.width, index / self.width)
    }

    #[inline]
    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    /// Cell displaced by `(dx, dy)`, if still inside the grid.
    pub fn offset(&self, c: Cell, dx: i64, dy: i64) -> Option<Cell> {
        let (x, y) = (c.x as i64 + dx, c.y as i64 + dy);
        self.contains(x, y).then(|| Cell::new(x as usize, y as usize))
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.len()).map(move |i| self.cell(i))
    }
}

/// One of eight compass directions in 45° steps, counter-clockwise from +x.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Heading(u8);

impl Heading {
    pub const EAST: Heading = Heading(0);
    pub const NORTH: Heading = Heading(2);
    pub const WEST: Heading = Heading(4);
    pub const SOUTH: Heading = Heading(6);

    pub fn new(eighths: i32) -> Self {
        Heading(eighths.rem_euclid(8) as u8)
    }

    pub fn eighths(self) -> u8 {
        self.0
    }

    /// Rotated by `eighths` × 45°, positive counter-clockwise.
    pub fn turned(self, eighths: i32) -> Self {
        Heading::new(self.0 as i32 + eighths)
    }

    /// Unit grid step for this heading (diagonals move in both axes).
    pub fn step(self) -> (i64, i64) {
        const STEPS: [(i64, i64); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];
        STEPS[self.0 as usize]
    }

    pub fn unit(self) -> (f64, f64) {
        let a = self.0 as f64 * std::f64::consts::FRAC_PI_4;
        (a.cos(), a.sin())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pose {
    pub cell: Cell,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heading: Option<Heading>,
}

impl Pose {
    pub fn at(x: usize, y: usize) -> Self {
        Pose {
            cell: Cell::new(x, y),
            heading: None,
        }
    }

    pub fn facing(x: usize, y: usize, heading: Heading) -> Self {
        Pose {
            cell: Cell::new(x, y),
            heading: Some(heading),
        }
    }
}
