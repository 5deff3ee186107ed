//! Cartesian node lattice restricted to a shape, with cut-cell links and area weights.

use crate::error::{Error, Result};

use super::shape::{Point, Shape};

/// Unit directions in link order: east, west, north, south.
pub const DIRECTIONS: [Point; 4] = [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]];

const OFFSETS: [[i64; 2]; 4] = [[1, 0], [-1, 0], [0, 1], [0, -1]];

/// Neighbor of a node along one lattice direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Link {
    /// Interior neighbor at distance `h`.
    Node(usize),
    /// The boundary is crossed at distance `theta · h`, `theta ∈ (0, 1]`.
    Boundary(f64),
}

#[derive(Debug, Clone)]
pub struct Node {
    pub ij: [i64; 2],
    pub pos: Point,
    pub links: [Link; 4],
}

/// Interior lattice nodes of spacing `h = 1/n`, ordered row by row (south to north,
/// west to east).
///
/// Each node carries the area of its cell intersected with the shape; the area of
/// cut cells whose center lies outside is handed to adjacent interior nodes, so the
/// weights sum to the shape area.
#[derive(Debug, Clone)]
pub struct Grid {
    n: usize,
    h: f64,
    origin: Point,
    nodes: Vec<Node>,
    weights: Vec<f64>,
    lo: [i64; 2],
    dims: [usize; 2],
    lookup: Vec<usize>,
}

const NONE: usize = usize::MAX;

/// Lower bound on `theta`, keeping the stencil finite for nodes grazing the boundary.
pub const THETA_MIN: f64 = 1e-6;

impl Grid {
    pub(crate) fn build(shape: &Shape, origin: Point, n: usize) -> Result<Self> {
        let h = 1.0 / n as f64;
        let (blo, bhi) = shape.bounding_box();
        let lo = [
            ((blo[0] - origin[0]) / h).floor() as i64 - 1,
            ((blo[1] - origin[1]) / h).floor() as i64 - 1,
        ];
        let hi = [
            ((bhi[0] - origin[0]) / h).ceil() as i64 + 1,
            ((bhi[1] - origin[1]) / h).ceil() as i64 + 1,
        ];
        let dims = [(hi[0] - lo[0] + 1) as usize, (hi[1] - lo[1] + 1) as usize];
        let pos_of = |i: i64, j: i64| [origin[0] + i as f64 * h, origin[1] + j as f64 * h];

        let mut lookup = vec![NONE; dims[0] * dims[1]];
        let mut nodes = Vec::new();
        for j in lo[1]..=hi[1] {
            for i in lo[0]..=hi[0] {
                let pos = pos_of(i, j);
                if shape.depth(pos) > 1e-9 * h {
                    lookup[(j - lo[1]) as usize * dims[0] + (i - lo[0]) as usize] = nodes.len();
                    nodes.push(Node { ij: [i, j], pos, links: [Link::Boundary(1.0); 4] });
                }
            }
        }

        let mut grid = Self { n, h, origin, nodes, weights: Vec::new(), lo, dims, lookup };
        grid.check_resolution()?;

        for k in 0..grid.nodes.len() {
            let [i, j] = grid.nodes[k].ij;
            let pos = grid.nodes[k].pos;
            for (d, off) in OFFSETS.iter().enumerate() {
                grid.nodes[k].links[d] = match grid.index_of([i + off[0], j + off[1]]) {
                    Some(idx) => Link::Node(idx),
                    None => {
                        let dist = shape.ray_exit(pos, DIRECTIONS[d], h * (1.0 + 1e-12)).unwrap_or(h);
                        Link::Boundary((dist / h).clamp(THETA_MIN, 1.0))
                    }
                };
            }
        }

        grid.weights = grid.cut_cell_weights(shape);
        Ok(grid)
    }

    fn check_resolution(&self) -> Result<()> {
        let count = self.nodes.len();
        if count < 100 {
            return Err(Error::GridTooCoarse(format!(
                "{count} interior nodes at n = {} (need at least 100)",
                self.n
            )));
        }
        let mut rows = vec![0usize; self.dims[1]];
        let mut cols = vec![0usize; self.dims[0]];
        for node in &self.nodes {
            rows[(node.ij[1] - self.lo[1]) as usize] += 1;
            cols[(node.ij[0] - self.lo[0]) as usize] += 1;
        }
        let widest = rows.iter().copied().max().unwrap_or(0);
        let tallest = cols.iter().copied().max().unwrap_or(0);
        if widest < 4 || tallest < 4 {
            return Err(Error::GridTooCoarse(format!(
                "only {} x {} nodes across the domain at n = {}",
                widest, tallest, self.n
            )));
        }
        Ok(())
    }

    fn cut_cell_weights(&self, shape: &Shape) -> Vec<f64> {
        let h = self.h;
        let full = h * h;
        let mut w = vec![0.0; self.nodes.len()];
        let reach = 0.75 * h; // > h/√2: beyond it the cell is entirely in or out
        let mut orphans = Vec::new();
        for jj in 0..self.dims[1] as i64 {
            for ii in 0..self.dims[0] as i64 {
                let ij = [ii + self.lo[0], jj + self.lo[1]];
                let c = self.lattice_pos(ij);
                let depth = shape.depth(c);
                let area = if depth >= reach {
                    full
                } else if depth <= -reach {
                    0.0
                } else {
                    shape.box_overlap([c[0] - 0.5 * h, c[1] - 0.5 * h], [c[0] + 0.5 * h, c[1] + 0.5 * h])
                };
                if area <= 0.0 {
                    continue;
                }
                match self.index_of(ij) {
                    Some(k) => w[k] += area,
                    None => orphans.push((ij, area)),
                }
            }
        }
        for (ij, area) in orphans {
            let near: Vec<usize> = OFFSETS
                .iter()
                .filter_map(|o| self.index_of([ij[0] + o[0], ij[1] + o[1]]))
                .collect();
            let targets = if near.is_empty() {
                [[1, 1], [1, -1], [-1, 1], [-1, -1]]
                    .iter()
                    .filter_map(|o| self.index_of([ij[0] + o[0], ij[1] + o[1]]))
                    .collect()
            } else {
                near
            };
            if targets.is_empty() {
                let p = self.lattice_pos(ij);
                let k = self.closest_node(p);
                w[k] += area;
            } else {
                let share = area / targets.len() as f64;
                for k in targets {
                    w[k] += share;
                }
            }
        }
        w
    }

    fn lattice_pos(&self, ij: [i64; 2]) -> Point {
        [self.origin[0] + ij[0] as f64 * self.h, self.origin[1] + ij[1] as f64 * self.h]
    }

    fn closest_node(&self, p: Point) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (k, node) in self.nodes.iter().enumerate() {
            let d = (node.pos[0] - p[0]).hypot(node.pos[1] - p[1]);
            if d < best.0 {
                best = (d, k);
            }
        }
        best.1
    }

    /// Index of the interior node at lattice coordinates `ij`.
    pub fn index_of(&self, ij: [i64; 2]) -> Option<usize> {
        let i = ij[0] - self.lo[0];
        let j = ij[1] - self.lo[1];
        if i < 0 || j < 0 || i >= self.dims[0] as i64 || j >= self.dims[1] as i64 {
            return None;
        }
        let k = self.lookup[j as usize * self.dims[0] + i as usize];
        (k != NONE).then_some(k)
    }

    /// Interior node closest to `p`; rejects points whose nearest lattice site is
    /// not an interior node.
    pub fn nearest_node(&self, p: Point) -> Result<usize> {
        let ij = [
            ((p[0] - self.origin[0]) / self.h).round() as i64,
            ((p[1] - self.origin[1]) / self.h).round() as i64,
        ];
        self.index_of(ij).ok_or(Error::OutsideMask { x: p[0], y: p[1] })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn pos(&self, k: usize) -> Point {
        self.nodes[k].pos
    }

    /// Cut-cell area weights; they sum to the domain area.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Node count times `h²`.
    pub fn mask_area(&self) -> f64 {
        self.nodes.len() as f64 * self.h * self.h
    }

    /// `Σ w_k f_k`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// `Σ w_k a_k b_k`.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.weights.iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum()
    }
}
