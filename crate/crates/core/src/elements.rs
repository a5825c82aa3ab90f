//! Element matrices for linear (P1) and quadratic (P2) Lagrange elements.
//!
//! Test and trial spaces coincide. On an element of size `h` with local nodes
//! `x_0 < … < x_{p}` the four matrices are
//!
//! * mass        `M[a][b] = ∫ ψ_a ψ_b`
//! * stiffness   `K[a][b] = −∫ ψ_a' ψ_b'`
//! * convection  `P[a][b] = ∫ ψ_a ψ_b'`
//! * abs-mass    `M̄`, multiplying nodal `|v|` in the approximation of `∫ ψ_a |Σ v_b ψ_b|`.
//!
//! For P1 the basis is nonnegative, so `M̄ = M`. For P2 the end-node functions change
//! sign at the midpoint and are split into positive and negative parts; the end-node
//! rows of `M̄` are `∫ (|ψ_a⁺ ψ_b| − |ψ_a⁻ ψ_b|)`. The midpoint function is
//! nonnegative and its row is `∫ ψ_a ψ_b`, which is what the closed form
//! `(h/120)[[15,8,0],[8,64,8],[0,8,15]]` contains.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::ElementOrder;
use crate::quadrature::integrate_piecewise;

/// Square element matrix of size 2 (P1) or 3 (P2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalMatrix {
    size: usize,
    entries: [[f64; 3]; 3],
}

impl LocalMatrix {
    fn from_rows<const N: usize>(scale: f64, rows: [[f64; N]; N]) -> Self {
        let mut entries = [[0.0; 3]; 3];
        for (a, row) in rows.iter().enumerate() {
            for (b, v) in row.iter().enumerate() {
                entries[a][b] = scale * v;
            }
        }
        LocalMatrix { size: N, entries }
    }

    fn zeros(size: usize) -> Self {
        LocalMatrix { size, entries: [[0.0; 3]; 3] }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        assert!(a < self.size && b < self.size);
        self.entries[a][b]
    }

    pub fn row_sum(&self, a: usize) -> f64 {
        self.entries[a][..self.size].iter().sum()
    }

    pub fn max_abs_diff(&self, other: &LocalMatrix) -> f64 {
        assert_eq!(self.size, other.size);
        let mut d = 0.0f64;
        for a in 0..self.size {
            for b in 0..self.size {
                d = d.max((self.entries[a][b] - other.entries[a][b]).abs());
            }
        }
        d
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.size).map(|a| self.entries[a][..self.size].to_vec()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementMatrices {
    pub mass: LocalMatrix,
    /// Negative semidefinite; sign follows `−∫ψ'ψ'`.
    pub stiffness: LocalMatrix,
    pub convection: LocalMatrix,
    pub abs_mass: LocalMatrix,
}

impl ElementMatrices {
    pub fn new(order: ElementOrder, h: f64) -> Result<Self> {
        match order {
            ElementOrder::P1 => p1_matrices(h),
            ElementOrder::P2 => p2_matrices(h),
        }
    }
}

fn check_size(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("element size must be positive, got {h}")))
    }
}

pub fn p1_matrices(h: f64) -> Result<ElementMatrices> {
    check_size(h)?;
    let mass = LocalMatrix::from_rows(h / 6.0, [[2.0, 1.0], [1.0, 2.0]]);
    Ok(ElementMatrices {
        mass,
        stiffness: LocalMatrix::from_rows(-1.0 / h, [[1.0, -1.0], [-1.0, 1.0]]),
        convection: LocalMatrix::from_rows(0.5, [[-1.0, 1.0], [-1.0, 1.0]]),
        abs_mass: mass,
    })
}

pub fn p2_matrices(h: f64) -> Result<ElementMatrices> {
    check_size(h)?;
    Ok(ElementMatrices {
        mass: LocalMatrix::from_rows(
            h / 30.0,
            [[4.0, 2.0, -1.0], [2.0, 16.0, 2.0], [-1.0, 2.0, 4.0]],
        ),
        stiffness: LocalMatrix::from_rows(
            -1.0 / (3.0 * h),
            [[7.0, -8.0, 1.0], [-8.0, 16.0, -8.0], [1.0, -8.0, 7.0]],
        ),
        convection: LocalMatrix::from_rows(
            1.0 / 6.0,
            [[-3.0, 4.0, -1.0], [-4.0, 0.0, 4.0], [1.0, -4.0, 3.0]],
        ),
        abs_mass: LocalMatrix::from_rows(
            h / 120.0,
            [[15.0, 8.0, 0.0], [8.0, 64.0, 8.0], [0.0, 8.0, 15.0]],
        ),
    })
}

/// Lagrange basis on an element given by its nodal coordinates.
///
/// Works in physical coordinates straight from the product formula, so it shares
/// nothing with the closed forms above.
#[derive(Debug, Clone)]
pub struct LagrangeBasis {
    nodes: Vec<f64>,
}

impl LagrangeBasis {
    pub fn new(order: ElementOrder, left: f64, h: f64) -> Self {
        let nodes = match order {
            ElementOrder::P1 => vec![left, left + h],
            ElementOrder::P2 => vec![left, left + 0.5 * h, left + h],
        };
        LagrangeBasis { nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, a: usize, x: f64) -> f64 {
        let xa = self.nodes[a];
        self.nodes
            .iter()
            .enumerate()
            .filter(|&(b, _)| b != a)
            .map(|(_, &xb)| (x - xb) / (xa - xb))
            .product()
    }

    pub fn derivative(&self, a: usize, x: f64) -> f64 {
        let xa = self.nodes[a];
        let others: Vec<f64> =
            self.nodes.iter().enumerate().filter(|&(b, _)| b != a).map(|(_, &xb)| xb).collect();
        let denom: f64 = others.iter().map(|xb| xa - xb).product();
        let mut sum = 0.0;
        for skip in 0..others.len() {
            let term: f64 = others
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != skip)
                .map(|(_, xb)| x - xb)
                .product();
            sum += term;
        }
        sum / denom
    }

    /// Element end points plus every interior node. The basis functions of
    /// the end nodes vanish (and change sign) at interior nodes, so each piece
    /// is free of kinks in the split integrands.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.nodes.clone()
    }

    fn is_end_node(&self, a: usize) -> bool {
        a == 0 || a + 1 == self.nodes.len()
    }
}

const QUADRATURE_POINTS: usize = 10;

/// Recomputes all four element matrices by Gauss–Legendre quadrature of their
/// defining integrals.
pub fn quadrature_matrices(order: ElementOrder, h: f64) -> Result<ElementMatrices> {
    check_size(h)?;
    // an off-origin element keeps the check honest about translation invariance
    let basis = LagrangeBasis::new(order, 0.37, h);
    let n = basis.len();
    let breaks = basis.breakpoints();
    let integrate = |f: &dyn Fn(f64) -> f64| integrate_piecewise(f, &breaks, QUADRATURE_POINTS);

    let mut m = ElementMatrices {
        mass: LocalMatrix::zeros(n),
        stiffness: LocalMatrix::zeros(n),
        convection: LocalMatrix::zeros(n),
        abs_mass: LocalMatrix::zeros(n),
    };
    for a in 0..n {
        for b in 0..n {
            m.mass.entries[a][b] = integrate(&|x| basis.value(a, x) * basis.value(b, x));
            m.stiffness.entries[a][b] =
                -integrate(&|x| basis.derivative(a, x) * basis.derivative(b, x));
            m.convection.entries[a][b] = integrate(&|x| basis.value(a, x) * basis.derivative(b, x));
            m.abs_mass.entries[a][b] = if basis.is_end_node(a) {
                integrate(&|x| {
                    let pa = basis.value(a, x);
                    let pb = basis.value(b, x);
                    (pa.max(0.0) * pb).abs() - (pa.min(0.0) * pb).abs()
                })
            } else {
                integrate(&|x| basis.value(a, x).max(0.0) * basis.value(b, x))
            };
        }
    }
    Ok(m)
}

/// Maximum entrywise deviation between the closed-form matrices and their
/// quadrature recomputation.
pub fn verify_by_quadrature(order: ElementOrder, h: f64) -> Result<f64> {
    let closed = ElementMatrices::new(order, h)?;
    let quad = quadrature_matrices(order, h)?;
    Ok([
        closed.mass.max_abs_diff(&quad.mass),
        closed.stiffness.max_abs_diff(&quad.stiffness),
        closed.convection.max_abs_diff(&quad.convection),
        closed.abs_mass.max_abs_diff(&quad.abs_mass),
    ]
    .into_iter()
    .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn assert_matrix(m: &LocalMatrix, expected: &[&[f64]]) {
        for (a, row) in expected.iter().enumerate() {
            for (b, &v) in row.iter().enumerate() {
                assert_relative_eq!(m.get(a, b), v, epsilon = 1e-15, max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn p1_unit_element() {
        let m = p1_matrices(1.0).unwrap();
        assert_matrix(&m.mass, &[&[1.0 / 3.0, 1.0 / 6.0], &[1.0 / 6.0, 1.0 / 3.0]]);
        assert_matrix(&m.stiffness, &[&[-1.0, 1.0], &[1.0, -1.0]]);
        assert_matrix(&m.convection, &[&[-0.5, 0.5], &[-0.5, 0.5]]);
        for a in 0..2 {
            assert_eq!(m.convection.row_sum(a), 0.0);
        }
    }

    #[test]
    fn p1_abs_mass_equals_mass() {
        for h in [0.0125, 0.3, 2.0] {
            let m = p1_matrices(h).unwrap();
            assert_eq!(m.abs_mass, m.mass);
        }
    }

    #[test]
    fn p2_unit_element() {
        let m = p2_matrices(1.0).unwrap();
        let s = 1.0 / 30.0;
        assert_matrix(
            &m.mass,
            &[&[4.0 * s, 2.0 * s, -s], &[2.0 * s, 16.0 * s, 2.0 * s], &[-s, 2.0 * s, 4.0 * s]],
        );
        let t = 1.0 / 120.0;
        assert_matrix(
            &m.abs_mass,
            &[&[15.0 * t, 8.0 * t, 0.0], &[8.0 * t, 64.0 * t, 8.0 * t], &[0.0, 8.0 * t, 15.0 * t]],
        );
        assert_eq!(m.abs_mass.get(0, 2), 0.0);
        assert_eq!(m.abs_mass.get(2, 0), 0.0);
    }

    #[test]
    fn p2_abs_mass_differs_from_mass() {
        for h in [0.05, 1.0] {
            let m = p2_matrices(h).unwrap();
            assert_ne!(m.abs_mass.get(0, 0), m.mass.get(0, 0));
            assert_ne!(m.abs_mass.get(0, 2), m.mass.get(0, 2));
        }
    }

    #[test]
    fn rejects_nonpositive_size() {
        assert!(matches!(p1_matrices(0.0), Err(Error::Domain(_))));
        assert!(matches!(p2_matrices(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn zero_row_sums() {
        for order in [ElementOrder::P1, ElementOrder::P2] {
            let m = ElementMatrices::new(order, 0.21).unwrap();
            for a in 0..m.mass.size() {
                assert!(m.stiffness.row_sum(a).abs() < 1e-14);
                assert!(m.convection.row_sum(a).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn scaling_in_h() {
        for order in [ElementOrder::P1, ElementOrder::P2] {
            let a = ElementMatrices::new(order, 0.3).unwrap();
            let b = ElementMatrices::new(order, 0.6).unwrap();
            for i in 0..a.mass.size() {
                for j in 0..a.mass.size() {
                    assert_relative_eq!(b.mass.get(i, j), 2.0 * a.mass.get(i, j), max_relative = 1e-15);
                    assert_relative_eq!(
                        b.abs_mass.get(i, j),
                        2.0 * a.abs_mass.get(i, j),
                        max_relative = 1e-15
                    );
                    assert_relative_eq!(
                        b.stiffness.get(i, j),
                        0.5 * a.stiffness.get(i, j),
                        max_relative = 1e-15
                    );
                    assert_eq!(b.convection.get(i, j), a.convection.get(i, j));
                }
            }
        }
    }

    #[test]
    fn symmetry_and_definiteness() {
        for order in [ElementOrder::P1, ElementOrder::P2] {
            let m = ElementMatrices::new(order, 0.4).unwrap();
            let n = m.mass.size();
            for a in 0..n {
                for b in 0..n {
                    assert_eq!(m.mass.get(a, b), m.mass.get(b, a));
                    assert_eq!(m.stiffness.get(a, b), m.stiffness.get(b, a));
                    assert_eq!(m.abs_mass.get(a, b), m.abs_mass.get(b, a));
                    assert!(m.abs_mass.get(a, b) >= 0.0);
                }
                // diagonal sign checks
                assert!(m.mass.get(a, a) > 0.0);
                assert!(m.stiffness.get(a, a) < 0.0);
            }
        }
    }

    #[test]
    fn quadrature_agrees_with_closed_forms() {
        assert!(verify_by_quadrature(ElementOrder::P1, 0.7).unwrap() < 1e-12);
        assert!(verify_by_quadrature(ElementOrder::P2, 0.7).unwrap() < 1e-10);
        let q = quadrature_matrices(ElementOrder::P1, 1.0).unwrap();
        let c = p1_matrices(1.0).unwrap();
        assert!(q.stiffness.max_abs_diff(&c.stiffness) < 1e-15);
    }

    #[test]
    fn lagrange_basis_is_nodal_and_partitions_unity() {
        let basis = LagrangeBasis::new(ElementOrder::P2, -0.2, 0.5);
        for (i, &xi) in basis.breakpoints().iter().enumerate() {
            for a in 0..3 {
                let expected = if a == i { 1.0 } else { 0.0 };
                assert!((basis.value(a, xi) - expected).abs() < 1e-14);
            }
        }
        for x in [-0.2, -0.1, 0.11, 0.3] {
            let s: f64 = (0..3).map(|a| basis.value(a, x)).sum();
            let ds: f64 = (0..3).map(|a| basis.derivative(a, x)).sum();
            assert!((s - 1.0).abs() < 1e-14);
            assert!(ds.abs() < 1e-12);
        }
    }

    #[test]
    fn midpoint_row_with_outer_absolute_value_is_not_the_tabulated_row() {
        // ∫|ψ_mid ψ_end| over the element is 15h/120, whereas the tabulated M̄ row
        // carries the signed value 8h/120.
        let h = 1.0;
        let basis = LagrangeBasis::new(ElementOrder::P2, 0.0, h);
        let v = integrate_piecewise(
            |x| (basis.value(1, x) * basis.value(0, x)).abs(),
            &basis.breakpoints(),
            QUADRATURE_POINTS,
        );
        assert!((v - 15.0 / 120.0).abs() < 1e-14);
        assert!((p2_matrices(h).unwrap().abs_mass.get(1, 0) - 8.0 / 120.0).abs() < 1e-16);
    }
}
