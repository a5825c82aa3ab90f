//! Global Galerkin matrices and the boundary contributions of the Dirichlet nodes.
//!
//! The semi-discrete system over interior unknowns `u` is
//!
//! ```text
//! d/dτ (M u + b_M) = M v + Le·M̄|v| =: F,     v = M⁻¹(K u − P u + b_K − b_P)
//! ```
//!
//! where the `b` vectors carry the columns of the two boundary nodes multiplied by
//! their prescribed values.
//!
//! The `v` equation can be closed two ways ([`VRows`]). By default it is tested
//! against the interior functions only, and the two boundary values of `v` are
//! those of the boundary data (`g_xx − g_x`, zero for both call boundaries). The
//! alternative tests against every node function with the full mass matrix and
//! leaves `v` free at the ends; the boundary rows then miss the flux term
//! `u_x(±R)`, which is about `e^R` on the right, and the resulting large boundary
//! `v` leaks into the interior through the inverse mass matrix.

pub use crate::banded::{solve_banded, BandedLu, BandedMatrix};
use crate::elements::ElementMatrices;
use crate::error::{Error, Result};
use crate::mesh::Mesh1D;
use crate::model::{boundary_values, MarketParams};
use serde::{Deserialize, Serialize};

/// The four global matrices over one index set.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSet {
    pub mass: BandedMatrix,
    pub stiffness: BandedMatrix,
    pub convection: BandedMatrix,
    pub abs_mass: BandedMatrix,
}

/// Interior-row contributions of the boundary nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryVectors {
    pub b_mass: Vec<f64>,
    pub b_stiffness: Vec<f64>,
    pub b_convection: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GlobalSystem {
    /// Matrices over all nodes, boundary nodes included.
    pub full: MatrixSet,
    /// Interior-node blocks of `full`.
    pub interior: MatrixSet,
    pub boundary_u: [f64; 2],
    pub boundary: BoundaryVectors,
    pub v_rows: VRows,
    /// `v` at the two boundary nodes when only interior rows are solved.
    pub boundary_v: [f64; 2],
    full_mass_lu: BandedLu,
    interior_mass_lu: BandedLu,
}

/// Which test functions close the equation for `v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VRows {
    /// Interior test functions only; boundary `v` comes from the boundary data.
    Interior,
    /// Every node's test function, full mass matrix, no boundary values for `v`.
    AllNodes,
}

impl std::str::FromStr for VRows {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "interior" => Ok(VRows::Interior),
            "all" | "all-nodes" => Ok(VRows::AllNodes),
            other => Err(Error::Config(format!("unknown v rows `{other}` (expected interior or all)"))),
        }
    }
}

impl std::fmt::Display for VRows {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            VRows::Interior => "interior",
            VRows::AllNodes => "all",
        })
    }
}

/// Scatters element matrices into all-node banded matrices.
pub fn assemble_full(mesh: &Mesh1D) -> Result<MatrixSet> {
    let n = mesh.n_nodes();
    let hb = mesh.order().half_bandwidth();
    let mut set = MatrixSet {
        mass: BandedMatrix::zeros(n, hb),
        stiffness: BandedMatrix::zeros(n, hb),
        convection: BandedMatrix::zeros(n, hb),
        abs_mass: BandedMatrix::zeros(n, hb),
    };
    for j in 0..mesh.n_elements() {
        let em = ElementMatrices::new(mesh.order(), mesh.element_size(j))?;
        let dofs = mesh.element_dofs(j);
        for (a, ga) in dofs.clone().enumerate() {
            for (b, gb) in dofs.clone().enumerate() {
                set.mass.add(ga, gb, em.mass.get(a, b));
                set.stiffness.add(ga, gb, em.stiffness.get(a, b));
                set.convection.add(ga, gb, em.convection.get(a, b));
                set.abs_mass.add(ga, gb, em.abs_mass.get(a, b));
            }
        }
    }
    Ok(set)
}

fn interior_block(full: &BandedMatrix) -> BandedMatrix {
    let n = full.dim() - 2;
    let mut m = BandedMatrix::zeros(n, full.half_bandwidth());
    for i in 0..n {
        for j in m.row_range(i) {
            m.set(i, j, full.get(i + 1, j + 1));
        }
    }
    m
}

/// `Σ_{b ∈ boundary} A[i][b]·u_b` for each interior row `i`.
fn boundary_column_sum(full: &BandedMatrix, boundary_u: [f64; 2]) -> Vec<f64> {
    let last = full.dim() - 1;
    (1..last).map(|i| full.get(i, 0) * boundary_u[0] + full.get(i, last) * boundary_u[1]).collect()
}

impl GlobalSystem {
    /// Assembles the system with the given Dirichlet values `[u(−R), u(R)]`.
    pub fn assemble(mesh: &Mesh1D, boundary_u: [f64; 2]) -> Result<Self> {
        let full = assemble_full(mesh)?;
        let interior = MatrixSet {
            mass: interior_block(&full.mass),
            stiffness: interior_block(&full.stiffness),
            convection: interior_block(&full.convection),
            abs_mass: interior_block(&full.abs_mass),
        };
        let full_mass_lu = full.mass.factorize()?;
        let interior_mass_lu = interior.mass.factorize()?;
        let mut sys = GlobalSystem {
            boundary: BoundaryVectors { b_mass: vec![], b_stiffness: vec![], b_convection: vec![] },
            full,
            interior,
            boundary_u,
            v_rows: VRows::Interior,
            boundary_v: [0.0, 0.0],
            full_mass_lu,
            interior_mass_lu,
        };
        sys.boundary = sys.boundary_vectors(boundary_u);
        Ok(sys)
    }

    /// Assembles with the call-option boundary data `u(−R) = 0`, `u(R) = e^R − K`.
    /// Both satisfy `g_xx − g_x = 0`, so the boundary `v` is zero.
    pub fn assemble_for(mesh: &Mesh1D, params: &MarketParams) -> Result<Self> {
        let (left, right) = boundary_values(0.0, mesh.right(), params.strike)?;
        Self::assemble(mesh, [left, right])
    }

    pub fn n_nodes(&self) -> usize {
        self.full.mass.dim()
    }

    pub fn n_interior(&self) -> usize {
        self.interior.mass.dim()
    }

    /// Boundary vectors for arbitrary boundary values; the system's own are cached.
    pub fn boundary_vectors(&self, boundary_u: [f64; 2]) -> BoundaryVectors {
        BoundaryVectors {
            b_mass: boundary_column_sum(&self.full.mass, boundary_u),
            b_stiffness: boundary_column_sum(&self.full.stiffness, boundary_u),
            b_convection: boundary_column_sum(&self.full.convection, boundary_u),
        }
    }

    /// Interior values extended with the system's boundary values.
    pub fn full_state(&self, u_interior: &[f64]) -> Result<Vec<f64>> {
        if u_interior.len() != self.n_interior() {
            return Err(Error::DimensionMismatch { expected: self.n_interior(), got: u_interior.len() });
        }
        let mut u = Vec::with_capacity(u_interior.len() + 2);
        u.push(self.boundary_u[0]);
        u.extend_from_slice(u_interior);
        u.push(self.boundary_u[1]);
        Ok(u)
    }

    pub fn with_v_rows(mut self, rows: VRows) -> Self {
        self.v_rows = rows;
        self
    }

    /// Nodal `v ≈ u_xx − u_x` on every node, from `M v = K u − P u + b_K − b_P`
    /// over the rows selected by `v_rows`.
    pub fn compute_v(&self, u_interior: &[f64]) -> Result<Vec<f64>> {
        let u = self.full_state(u_interior)?;
        let ku = self.full.stiffness.apply(&u)?;
        let pu = self.full.convection.apply(&u)?;
        let rhs: Vec<f64> = ku.iter().zip(&pu).map(|(k, p)| k - p).collect();
        match self.v_rows {
            VRows::AllNodes => self.full_mass_lu.solve(&rhs),
            VRows::Interior => {
                let last = rhs.len() - 1;
                let vb = self.boundary_v;
                let m = &self.full.mass;
                let rhs_i: Vec<f64> =
                    (1..last).map(|i| rhs[i] - m.get(i, 0) * vb[0] - m.get(i, last) * vb[1]).collect();
                let mut v = Vec::with_capacity(rhs.len());
                v.push(vb[0]);
                v.extend(self.interior_mass_lu.solve(&rhs_i)?);
                v.push(vb[1]);
                Ok(v)
            }
        }
    }

    /// Interior rows of `F = M v + Le·M̄|v|`, with `abs_mass` chosen by the caller.
    pub fn forcing(&self, v: &[f64], leland: f64, abs_mass: &BandedMatrix) -> Result<Vec<f64>> {
        let mv = self.full.mass.apply(v)?;
        let abs_v: Vec<f64> = v.iter().map(|x| x.abs()).collect();
        let mbar = abs_mass.apply(&abs_v)?;
        let last = self.n_nodes() - 1;
        Ok((1..last).map(|i| mv[i] + leland * mbar[i]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::ElementOrder;

    /// Dense scatter of the element matrices, kept separate from the banded path.
    fn dense_assembly(mesh: &Mesh1D) -> [Vec<Vec<f64>>; 4] {
        let n = mesh.n_nodes();
        let mut out = [vec![vec![0.0; n]; n], vec![vec![0.0; n]; n], vec![vec![0.0; n]; n], vec![
            vec![0.0; n];
            n
        ]];
        let per = mesh.order().nodes_per_element();
        for j in 0..mesh.n_elements() {
            let em = ElementMatrices::new(mesh.order(), mesh.element_size(j)).unwrap();
            let first = (per - 1) * j;
            for a in 0..per {
                for b in 0..per {
                    out[0][first + a][first + b] += em.mass.get(a, b);
                    out[1][first + a][first + b] += em.stiffness.get(a, b);
                    out[2][first + a][first + b] += em.convection.get(a, b);
                    out[3][first + a][first + b] += em.abs_mass.get(a, b);
                }
            }
        }
        out
    }

    #[test]
    fn two_element_p1_interior_mass() {
        let mesh = Mesh1D::build_uniform(1.0, 2, ElementOrder::P1).unwrap();
        let sys = GlobalSystem::assemble(&mesh, [0.0, 0.0]).unwrap();
        assert_eq!(sys.n_interior(), 1);
        assert!((sys.interior.mass.get(0, 0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn banded_matches_dense_scatter() {
        for order in [ElementOrder::P1, ElementOrder::P2] {
            for n in [2, 5, 20] {
                let edges: Vec<f64> =
                    (0..=n).map(|i| -1.0 + 2.0 * (i as f64 / n as f64).powf(1.3)).collect();
                let mesh = Mesh1D::build_graded(&edges, order).unwrap();
                let full = assemble_full(&mesh).unwrap();
                let dense = dense_assembly(&mesh);
                let banded = [&full.mass, &full.stiffness, &full.convection, &full.abs_mass];
                for (b, d) in banded.iter().zip(&dense) {
                    let nodes = mesh.n_nodes();
                    for i in 0..nodes {
                        for j in 0..nodes {
                            assert!((b.get(i, j) - d[i][j]).abs() <= 1e-14);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn interior_mass_is_symmetric() {
        let mesh = Mesh1D::build_uniform(3.0, 17, ElementOrder::P2).unwrap();
        let sys = GlobalSystem::assemble(&mesh, [0.0, 1.0]).unwrap();
        let m = &sys.interior.mass;
        for i in 0..m.dim() {
            for j in m.row_range(i) {
                assert!((m.get(i, j) - m.get(j, i)).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn stiffness_and_convection_annihilate_constants() {
        for order in [ElementOrder::P1, ElementOrder::P2] {
            let mesh = Mesh1D::build_uniform(2.0, 9, order).unwrap();
            let full = assemble_full(&mesh).unwrap();
            let ones = vec![1.0; mesh.n_nodes()];
            for m in [&full.stiffness, &full.convection] {
                for (i, r) in m.apply(&ones).unwrap().iter().enumerate() {
                    assert!(r.abs() < 1e-12, "row {i}: {r}");
                }
            }
        }
    }

    #[test]
    fn boundary_vectors_only_touch_adjacent_rows() {
        let mesh = Mesh1D::build_uniform(6.0, 12, ElementOrder::P2).unwrap();
        let sys = GlobalSystem::assemble(&mesh, [0.0, 303.0]).unwrap();
        let n = sys.n_interior();
        for b in [&sys.boundary.b_mass, &sys.boundary.b_stiffness, &sys.boundary.b_convection] {
            assert_eq!(b.len(), n);
            // the left value is zero, and only the last element's nodes see the right one
            for (i, v) in b.iter().enumerate() {
                if i + 2 < n {
                    assert_eq!(*v, 0.0);
                }
            }
        }
        assert!(sys.boundary.b_stiffness[n - 1] != 0.0);
    }

    #[test]
    fn zero_data_gives_zero_v() {
        let mesh = Mesh1D::build_uniform(2.0, 8, ElementOrder::P1).unwrap();
        let sys = GlobalSystem::assemble(&mesh, [0.0, 0.0]).unwrap();
        let v = sys.compute_v(&vec![0.0; sys.n_interior()]).unwrap();
        assert!(v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn v_of_affine_data_tends_to_minus_one() {
        // u = x + 3, so u_xx − u_x = −1; boundary rows see the dropped flux term,
        // so only interior nodes away from the ends are checked.
        let mut last = f64::INFINITY;
        for order in [ElementOrder::P1, ElementOrder::P2] {
            for n in [8, 16, 32, 64] {
                let mesh = Mesh1D::build_uniform(1.0, n, order).unwrap();
                let sys = GlobalSystem::assemble(&mesh, [2.0, 4.0]).unwrap();
                let nodes = mesh.nodes();
                let u: Vec<f64> = nodes[1..nodes.len() - 1].iter().map(|x| x + 3.0).collect();
                let v = sys.compute_v(&u).unwrap();
                let dev = nodes
                    .iter()
                    .zip(&v)
                    .filter(|(x, _)| x.abs() <= 0.5)
                    .map(|(_, v)| (v + 1.0).abs())
                    .fold(0.0, f64::max);
                if order == ElementOrder::P1 {
                    assert!(dev < last, "n = {n}: {dev} >= {last}");
                    last = dev;
                }
                assert!(dev < 0.05 || n < 32, "{order} n = {n}: {dev}");
            }
        }
    }

    #[test]
    fn dimension_checks() {
        let mesh = Mesh1D::build_uniform(1.0, 4, ElementOrder::P1).unwrap();
        let sys = GlobalSystem::assemble(&mesh, [0.0, 0.0]).unwrap();
        assert!(matches!(sys.compute_v(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }
}
