//! One-dimensional partitions of `[−R, R]` with P1 or P2 node layouts.
//!
//! Nodes are numbered left to right; for P2 the midpoint of element `j` sits between
//! its two vertices, so every assembled matrix is banded with half-bandwidth equal to
//! the element order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ElementOrder {
    P1,
    P2,
}

impl ElementOrder {
    /// Nodes per element.
    pub fn nodes_per_element(self) -> usize {
        match self {
            ElementOrder::P1 => 2,
            ElementOrder::P2 => 3,
        }
    }

    /// Half-bandwidth of the assembled matrices.
    pub fn half_bandwidth(self) -> usize {
        match self {
            ElementOrder::P1 => 1,
            ElementOrder::P2 => 2,
        }
    }
}

impl std::str::FromStr for ElementOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "p1" | "1" => Ok(ElementOrder::P1),
            "p2" | "2" => Ok(ElementOrder::P2),
            other => Err(Error::Config(format!("unknown element order '{other}'"))),
        }
    }
}

impl std::fmt::Display for ElementOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ElementOrder::P1 => write!(f, "P1"),
            ElementOrder::P2 => write!(f, "P2"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh1D {
    order: ElementOrder,
    element_edges: Vec<f64>,
    nodes: Vec<f64>,
}

impl Mesh1D {
    /// Equispaced mesh with `n_elements` elements of size `2R/n_elements`.
    pub fn build_uniform(half_width: f64, n_elements: usize, order: ElementOrder) -> Result<Self> {
        if n_elements < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 elements, got {n_elements}")));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidArgument(format!("half-width must be positive, got {half_width}")));
        }
        let h = 2.0 * half_width / n_elements as f64;
        let mut edges: Vec<f64> = (0..=n_elements).map(|i| -half_width + i as f64 * h).collect();
        // pin the end points so the boundary nodes sit exactly at ±R
        edges[n_elements] = half_width;
        Self::build_graded(&edges, order)
    }

    /// Mesh from explicit, strictly increasing element edges.
    pub fn build_graded(edges: &[f64], order: ElementOrder) -> Result<Self> {
        if edges.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "need at least 3 edges (2 elements), got {}",
                edges.len()
            )));
        }
        if edges.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("edges must be finite".into()));
        }
        if let Some(w) = edges.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(format!(
                "edges not strictly increasing at index {}: {} >= {}",
                w + 1,
                edges[w],
                edges[w + 1]
            )));
        }
        let nodes = match order {
            ElementOrder::P1 => edges.to_vec(),
            ElementOrder::P2 => {
                let mut nodes = Vec::with_capacity(2 * edges.len() - 1);
                for w in edges.windows(2) {
                    nodes.push(w[0]);
                    nodes.push(0.5 * (w[0] + w[1]));
                }
                nodes.push(edges[edges.len() - 1]);
                nodes
            }
        };
        Ok(Mesh1D { order, element_edges: edges.to_vec(), nodes })
    }

    /// Uniform mesh whose element size is adjusted from `h_target` by the smallest
    /// amount needed to put a vertex exactly on `anchor`, and whose half-width is
    /// the smallest multiple of that size not below `min_half_width`.
    pub fn build_aligned(
        anchor: f64,
        h_target: f64,
        min_half_width: f64,
        order: ElementOrder,
    ) -> Result<Self> {
        let (half_width, n_elements) = aligned_layout(anchor, h_target, min_half_width)?;
        Self::build_uniform(half_width, n_elements, order)
    }

    pub fn order(&self) -> ElementOrder {
        self.order
    }

    pub fn element_edges(&self) -> &[f64] {
        &self.element_edges
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn n_elements(&self) -> usize {
        self.element_edges.len() - 1
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_interior(&self) -> usize {
        self.nodes.len() - 2
    }

    /// Indices of the left and right boundary nodes.
    pub fn boundary_ids(&self) -> [usize; 2] {
        [0, self.nodes.len() - 1]
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.element_edges[self.element_edges.len() - 1] - self.element_edges[0])
    }

    pub fn left(&self) -> f64 {
        self.element_edges[0]
    }

    pub fn right(&self) -> f64 {
        self.element_edges[self.element_edges.len() - 1]
    }

    /// Size of element `j` (zero-based).
    pub fn element_size(&self, j: usize) -> f64 {
        self.element_edges[j + 1] - self.element_edges[j]
    }

    pub fn element_sizes(&self) -> impl Iterator<Item = f64> + '_ {
        self.element_edges.windows(2).map(|w| w[1] - w[0])
    }

    pub fn max_element_size(&self) -> f64 {
        self.element_sizes().fold(0.0, f64::max)
    }

    /// Global node indices of element `j`, left to right.
    pub fn element_dofs(&self, j: usize) -> std::ops::Range<usize> {
        match self.order {
            ElementOrder::P1 => j..j + 2,
            ElementOrder::P2 => 2 * j..2 * j + 3,
        }
    }

    /// Index of the node closest to `x`.
    pub fn nearest_node(&self, x: f64) -> usize {
        let idx = self.nodes.partition_point(|&n| n < x);
        if idx == 0 {
            0
        } else if idx == self.nodes.len() {
            idx - 1
        } else if (self.nodes[idx] - x).abs() < (x - self.nodes[idx - 1]).abs() {
            idx
        } else {
            idx - 1
        }
    }
}

/// `(R, n_elements)` for a symmetric uniform grid with a vertex on `anchor`.
///
/// Vertices are `−R + i·h` with `R = N·h`, so `anchor` is a vertex iff `anchor/h` is an
/// integer. The element size becomes `anchor/m` with `m = round(anchor/h_target)`,
/// unless the anchor is within half a cell of zero.
pub fn aligned_layout(anchor: f64, h_target: f64, min_half_width: f64) -> Result<(f64, usize)> {
    if !(h_target > 0.0) || !h_target.is_finite() {
        return Err(Error::InvalidArgument(format!("element size must be positive, got {h_target}")));
    }
    if !(min_half_width > 0.0) || !min_half_width.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "half-width must be positive, got {min_half_width}"
        )));
    }
    let m = (anchor / h_target).round();
    let h = if m == 0.0 { h_target } else { anchor / m };
    let half_cells = ((min_half_width / h) - 1e-9).ceil().max(1.0) as usize;
    Ok((half_cells as f64 * h, 2 * half_cells))
}
