//! Row-major 2D grids used for event images, surfaces and masks.

use serde::{Deserialize, Serialize};

/// A `height × width` raster stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid<C> {
    width: usize,
    height: usize,
    data: Vec<C>,
}

impl<C: Clone> Grid<C> {
    pub fn filled(width: usize, height: usize, value: C) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

impl<C> Grid<C> {
    /// Builds a grid from row-major data. Panics if the length does not match.
    pub fn from_vec(width: usize, height: usize, data: Vec<C>) -> Self {
        assert_eq!(data.len(), width * height, "grid data length mismatch");
        Self {
            width,
            height,
            data,
        }
    }

    /// Builds a grid from nested rows (handy in tests).
    pub fn from_rows(rows: Vec<Vec<C>>) -> Self {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        let data: Vec<C> = rows.into_iter().flatten().collect();
        Self::from_vec(width, height, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn index_of(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &C {
        &self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: C) {
        let i = self.index_of(x, y);
        self.data[i] = value;
    }

    pub fn as_slice(&self) -> &[C] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C> {
        self.data
    }

    /// Iterates `(x, y, &cell)` in row-major order.
    pub fn iter_cells(&self) -> impl Iterator<Item = (usize, usize, &C)> + '_ {
        let w = self.width.max(1);
        self.data.iter().enumerate().map(move |(i, c)| (i % w, i / w, c))
    }

    pub fn map<D>(&self, f: impl FnMut(&C) -> D) -> Grid<D> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = &[C]> + '_ {
        self.data.chunks(self.width.max(1))
    }
}
