//! Lagrangian mesh with precomputed quadrature tables, boundary facets and
//! the consistent mass matrix.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{Matrix2, Matrix3, Vector3};

use super::element::ElementType;
use crate::error::{Error, Result};
use crate::linalg::{conjugate_gradient, CgSettings, CsrMatrix};
use crate::materials::DefGrad;

/// Per-node vector values (positions, velocities or force coefficients).
pub type NodalField = Vec<Vector3<f64>>;

/// Quadrature point of a boundary facet.
#[derive(Clone, Debug)]
pub struct FacetQp {
    /// Values of all basis functions of the parent element.
    pub phi: Vec<f64>,
    /// Reference-configuration area (or length) weight.
    pub weight: f64,
    /// Outward unit normal in the reference configuration.
    pub normal: Vector3<f64>,
    pub position: Vector3<f64>,
}

#[derive(Clone, Debug)]
pub struct BoundaryFacet {
    pub element: usize,
    pub local_index: usize,
    /// Global node ids on the facet (vertices first).
    pub nodes: Vec<usize>,
    pub qps: Vec<FacetQp>,
}

impl BoundaryFacet {
    pub fn centroid(&self, mesh: &LagrangianMesh) -> Vector3<f64> {
        let nv = self.nodes.len().min(mesh.element_type.facets()[self.local_index].corners.len());
        self.nodes[..nv]
            .iter()
            .map(|&n| mesh.nodes[n])
            .sum::<Vector3<f64>>()
            / nv as f64
    }

    pub fn measure(&self) -> f64 {
        self.qps.iter().map(|q| q.weight).sum()
    }
}

#[derive(Clone, Debug)]
pub struct LagrangianMesh {
    pub element_type: ElementType,
    pub nodes: NodalField,
    /// Flat connectivity, `n_nodes_per_element` entries per element.
    connectivity: Vec<usize>,
    n_qp: usize,
    /// Reference quadrature coordinates, one per point of the element rule.
    qp_ref: Vec<[f64; 3]>,
    /// Physical weights `w_Q` (reference Jacobian times rule weight), per element and point.
    weights: Vec<f64>,
    /// Basis values, `[e][q][a]` flattened.
    phi: Vec<f64>,
    /// Basis gradients with respect to `X`, same layout as `phi`.
    grad: Vec<[f64; 3]>,
    pub facets: Vec<BoundaryFacet>,
    facet_sets: BTreeMap<String, Vec<usize>>,
    mass: CsrMatrix,
    mass_inv_diag: Vec<f64>,
}

impl LagrangianMesh {
    /// Builds a mesh from reference nodes and element connectivity. For 2D
    /// elements the third coordinate of every node must be zero.
    pub fn new(
        element_type: ElementType,
        nodes: NodalField,
        elements: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let nn = element_type.n_nodes();
        let dim = element_type.dim();
        if elements.is_empty() {
            return Err(Error::Parameter("mesh has no elements".into()));
        }
        let mut connectivity = Vec::with_capacity(elements.len() * nn);
        for (e, conn) in elements.iter().enumerate() {
            if conn.len() != nn {
                return Err(Error::Parameter(format!(
                    "element {e} has {} nodes, {element_type:?} needs {nn}",
                    conn.len()
                )));
            }
            if let Some(&bad) = conn.iter().find(|&&n| n >= nodes.len()) {
                return Err(Error::Parameter(format!(
                    "element {e} references missing node {bad}"
                )));
            }
            connectivity.extend_from_slice(conn);
        }
        if dim == 2 && nodes.iter().any(|x| x[2] != 0.0) {
            return Err(Error::Parameter("2D mesh nodes must have zero z coordinate".into()));
        }

        let rule = element_type.quadrature();
        let n_qp = rule.len();
        let shapes: Vec<_> = rule
            .iter()
            .map(|q| element_type.shape_eval_unchecked(q.xi))
            .collect();
        let n_elem = elements.len();
        let mut weights = Vec::with_capacity(n_elem * n_qp);
        let mut phi = Vec::with_capacity(n_elem * n_qp * nn);
        let mut grad = Vec::with_capacity(n_elem * n_qp * nn);
        for (e, conn) in elements.iter().enumerate() {
            for (q, s) in rule.iter().zip(&shapes) {
                let jac = reference_jacobian(&nodes, conn, &s.gradients, dim);
                let det = jac.determinant();
                if !(det > 0.0) {
                    return Err(Error::InvertedElement {
                        element: Some(e),
                        det,
                    });
                }
                let jinv_t = jac.try_inverse().expect("positive determinant").transpose();
                weights.push(q.weight * det);
                phi.extend_from_slice(&s.values);
                for g in &s.gradients {
                    let gx = jinv_t * Vector3::new(g[0], g[1], g[2]);
                    grad.push(if dim == 2 { [gx[0], gx[1], 0.0] } else { [gx[0], gx[1], gx[2]] });
                }
            }
        }

        let mut mesh = Self {
            element_type,
            nodes,
            connectivity,
            n_qp,
            qp_ref: rule.iter().map(|q| q.xi).collect(),
            weights,
            phi,
            grad,
            facets: Vec::new(),
            facet_sets: BTreeMap::new(),
            mass: CsrMatrix::from_triplets(0, Vec::new()),
            mass_inv_diag: Vec::new(),
        };
        mesh.facets = mesh.find_boundary_facets();
        mesh.assemble_mass();
        Ok(mesh)
    }

    pub fn dim(&self) -> usize {
        self.element_type.dim()
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.connectivity.len() / self.element_type.n_nodes()
    }

    pub fn n_qp_per_element(&self) -> usize {
        self.n_qp
    }

    pub fn n_qp_total(&self) -> usize {
        self.weights.len()
    }

    pub fn element(&self, e: usize) -> &[usize] {
        let nn = self.element_type.n_nodes();
        &self.connectivity[e * nn..(e + 1) * nn]
    }

    pub fn qp_reference_coords(&self) -> &[[f64; 3]] {
        &self.qp_ref
    }

    /// Physical weight of quadrature point `q` of element `e`.
    pub fn weight(&self, e: usize, q: usize) -> f64 {
        self.weights[e * self.n_qp + q]
    }

    /// All physical weights, indexed by global quadrature id `e * n_qp + q`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn phi(&self, e: usize, q: usize) -> &[f64] {
        let nn = self.element_type.n_nodes();
        let k = (e * self.n_qp + q) * nn;
        &self.phi[k..k + nn]
    }

    pub fn grad_phi(&self, e: usize, q: usize) -> &[[f64; 3]] {
        let nn = self.element_type.n_nodes();
        let k = (e * self.n_qp + q) * nn;
        &self.grad[k..k + nn]
    }

    pub fn element_measure(&self, e: usize) -> f64 {
        self.weights[e * self.n_qp..(e + 1) * self.n_qp].iter().sum()
    }

    pub fn reference_volume(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Smallest distance between two vertices of the same element, used as ΔX.
    pub fn min_edge_length(&self) -> f64 {
        let nv = self.element_type.n_vertices();
        let mut best = f64::INFINITY;
        for e in 0..self.n_elements() {
            let conn = self.element(e);
            for a in 0..nv {
                for b in a + 1..nv {
                    best = best.min((self.nodes[conn[a]] - self.nodes[conn[b]]).norm());
                }
            }
        }
        best
    }

    /// Largest element edge length measured along the vertex cycle.
    pub fn max_edge_length(&self) -> f64 {
        let nv = self.element_type.n_vertices();
        let mut best: f64 = 0.0;
        for e in 0..self.n_elements() {
            let conn = self.element(e);
            for a in 0..nv {
                for b in a + 1..nv {
                    best = best.max((self.nodes[conn[a]] - self.nodes[conn[b]]).norm());
                }
            }
        }
        best
    }

    /// Evaluates a nodal field at quadrature point `q` of element `e`.
    pub fn eval_at(&self, field: &[Vector3<f64>], e: usize, q: usize) -> Vector3<f64> {
        self.element(e)
            .iter()
            .zip(self.phi(e, q))
            .map(|(&n, &p)| field[n] * p)
            .sum()
    }

    /// Evaluates a nodal field at every quadrature point, ordered by global id.
    pub fn eval_at_qps(&self, field: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
        let mut out = Vec::with_capacity(self.n_qp_total());
        for e in 0..self.n_elements() {
            for q in 0..self.n_qp {
                out.push(self.eval_at(field, e, q));
            }
        }
        out
    }

    /// `F = Σ χ_ℓ ⊗ ∇_X φ_ℓ` at quadrature point `q` of element `e`. Not
    /// checked for admissibility.
    pub fn deformation_gradient(&self, chi: &[Vector3<f64>], e: usize, q: usize) -> DefGrad {
        let mut f = Matrix3::zeros();
        for (&n, g) in self.element(e).iter().zip(self.grad_phi(e, q)) {
            f += chi[n] * Vector3::new(g[0], g[1], g[2]).transpose();
        }
        if self.dim() == 2 {
            DefGrad::from_plane(Matrix2::new(f[(0, 0)], f[(0, 1)], f[(1, 0)], f[(1, 1)]))
        } else {
            DefGrad::new(f)
        }
    }

    pub fn mass_matrix(&self) -> &CsrMatrix {
        &self.mass
    }

    /// Load vector `b_ℓ = Σ_Q φ_ℓ(X_Q) s_Q w_Q` from per-quadrature samples.
    pub fn integrate_against_basis(&self, samples: &[Vector3<f64>]) -> NodalField {
        let mut b = vec![Vector3::zeros(); self.n_nodes()];
        for e in 0..self.n_elements() {
            for q in 0..self.n_qp {
                let s = samples[e * self.n_qp + q] * self.weight(e, q);
                for (&n, &p) in self.element(e).iter().zip(self.phi(e, q)) {
                    b[n] += s * p;
                }
            }
        }
        b
    }

    /// Solves `M x = b` componentwise, warm-starting from `x`.
    pub fn solve_mass(&self, b: &[Vector3<f64>], x: &mut [Vector3<f64>]) -> Result<()> {
        let n = self.n_nodes();
        let settings = CgSettings {
            rel_tol: 1e-12,
            ..CgSettings::default()
        };
        let mut rhs = vec![0.0; n];
        let mut sol = vec![0.0; n];
        for c in 0..self.dim() {
            for i in 0..n {
                rhs[i] = b[i][c];
                sol[i] = x[i][c];
            }
            conjugate_gradient(
                "mass",
                |v, out| self.mass.mul_vec(v, out),
                &self.mass_inv_diag,
                &rhs,
                &mut sol,
                settings,
            )?;
            for i in 0..n {
                x[i][c] = sol[i];
            }
        }
        Ok(())
    }

    /// L2 projection of quadrature-point samples onto the nodal basis.
    pub fn l2_project(&self, samples: &[Vector3<f64>]) -> Result<NodalField> {
        let mut x = vec![Vector3::zeros(); self.n_nodes()];
        self.l2_project_into(samples, &mut x)?;
        Ok(x)
    }

    /// As [`l2_project`](Self::l2_project), using `out` as the initial guess.
    pub fn l2_project_into(&self, samples: &[Vector3<f64>], out: &mut [Vector3<f64>]) -> Result<()> {
        if samples.len() != self.n_qp_total() {
            return Err(Error::Parameter(format!(
                "expected {} quadrature samples, got {}",
                self.n_qp_total(),
                samples.len()
            )));
        }
        let b = self.integrate_against_basis(samples);
        self.solve_mass(&b, out)
    }

    /// Registers a named facet set from a predicate on facet centroids and
    /// outward normals. Returns the number of facets selected.
    pub fn add_facet_set<P>(&mut self, name: &str, predicate: P) -> usize
    where
        P: Fn(&Vector3<f64>, &Vector3<f64>) -> bool,
    {
        let ids: Vec<usize> = (0..self.facets.len())
            .filter(|&i| {
                let f = &self.facets[i];
                predicate(&f.centroid(self), &f.qps[0].normal)
            })
            .collect();
        let count = ids.len();
        self.facet_sets.insert(name.to_string(), ids);
        count
    }

    pub fn set_facet_set(&mut self, name: &str, ids: Vec<usize>) {
        self.facet_sets.insert(name.to_string(), ids);
    }

    pub fn facet_set(&self, name: &str) -> Result<&[usize]> {
        self.facet_sets
            .get(name)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::Config(format!("unknown facet set `{name}`")))
    }

    pub fn facet_set_names(&self) -> impl Iterator<Item = &str> {
        self.facet_sets.keys().map(|s| s.as_str())
    }

    /// Nodes lying on any facet of the set, sorted and unique.
    pub fn facet_set_nodes(&self, name: &str) -> Result<Vec<usize>> {
        let mut nodes: Vec<usize> = self
            .facet_set(name)?
            .iter()
            .flat_map(|&f| self.facets[f].nodes.iter().copied())
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        Ok(nodes)
    }

    /// Node closest to `x` in the reference configuration.
    pub fn nearest_node(&self, x: &Vector3<f64>) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, n) in self.nodes.iter().enumerate() {
            let d = (n - x).norm_squared();
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }

    fn find_boundary_facets(&self) -> Vec<BoundaryFacet> {
        let local = self.element_type.facets();
        let mut count: HashMap<Vec<usize>, usize> = HashMap::new();
        let key = |e: usize, lf: &super::element::LocalFacet| {
            let conn = self.element(e);
            let mut k: Vec<usize> = lf.nodes[..lf.corners.len()].iter().map(|&i| conn[i]).collect();
            k.sort_unstable();
            k
        };
        for e in 0..self.n_elements() {
            for lf in &local {
                *count.entry(key(e, lf)).or_insert(0) += 1;
            }
        }
        let dim = self.dim();
        let mut facets = Vec::new();
        for e in 0..self.n_elements() {
            let conn = self.element(e);
            let centroid: Vector3<f64> = conn[..self.element_type.n_vertices()]
                .iter()
                .map(|&n| self.nodes[n])
                .sum::<Vector3<f64>>()
                / self.element_type.n_vertices() as f64;
            for (li, lf) in local.iter().enumerate() {
                if count[&key(e, lf)] != 1 {
                    continue;
                }
                let mut qps = Vec::new();
                for fq in self.element_type.facet_quadrature(lf) {
                    let s = self.element_type.shape_eval_unchecked(fq.xi);
                    let jac = reference_jacobian(&self.nodes, conn, &s.gradients, dim);
                    let t1 = jac * Vector3::from(fq.tangents[0]);
                    let (mut normal, scale) = if dim == 2 {
                        let n = Vector3::new(t1[1], -t1[0], 0.0);
                        let len = n.norm();
                        (n / len, len)
                    } else {
                        let t2 = jac * Vector3::from(fq.tangents[1]);
                        let n = t1.cross(&t2);
                        let len = n.norm();
                        (n / len, len)
                    };
                    let position: Vector3<f64> = conn
                        .iter()
                        .zip(&s.values)
                        .map(|(&n, &p)| self.nodes[n] * p)
                        .sum();
                    if normal.dot(&(position - centroid)) < 0.0 {
                        normal = -normal;
                    }
                    qps.push(FacetQp {
                        phi: s.values,
                        weight: fq.weight * scale,
                        normal,
                        position,
                    });
                }
                facets.push(BoundaryFacet {
                    element: e,
                    local_index: li,
                    nodes: lf.nodes.iter().map(|&i| conn[i]).collect(),
                    qps,
                });
            }
        }
        facets
    }

    fn assemble_mass(&mut self) {
        let nn = self.element_type.n_nodes();
        let mut trip = Vec::with_capacity(self.n_elements() * nn * nn);
        for e in 0..self.n_elements() {
            let conn = self.element(e);
            let mut local = vec![0.0; nn * nn];
            for q in 0..self.n_qp {
                let w = self.weight(e, q);
                let p = self.phi(e, q);
                for a in 0..nn {
                    for b in 0..nn {
                        local[a * nn + b] += w * p[a] * p[b];
                    }
                }
            }
            for a in 0..nn {
                for b in 0..nn {
                    trip.push((conn[a], conn[b], local[a * nn + b]));
                }
            }
        }
        self.mass = CsrMatrix::from_triplets(self.n_nodes(), trip);
        self.mass_inv_diag = self.mass.diagonal().iter().map(|d| 1.0 / d).collect();
    }
}

/// `∂X/∂ξ` at a reference point; for 2D elements the (2,2) entry is 1.
fn reference_jacobian(
    nodes: &[Vector3<f64>],
    conn: &[usize],
    ref_grads: &[[f64; 3]],
    dim: usize,
) -> Matrix3<f64> {
    let mut j = Matrix3::zeros();
    for (&n, g) in conn.iter().zip(ref_grads) {
        j += nodes[n] * Vector3::new(g[0], g[1], g[2]).transpose();
    }
    if dim == 2 {
        j[(2, 2)] = 1.0;
    }
    j
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square(et: ElementType) -> LagrangianMesh {
        match et {
            ElementType::Tri3 => LagrangianMesh::new(
                et,
                vec![
                    Vector3::new(0.0, 0.0, 0.0),
                    Vector3::new(1.0, 0.0, 0.0),
                    Vector3::new(1.0, 1.0, 0.0),
                    Vector3::new(0.0, 1.0, 0.0),
                ],
                vec![vec![0, 1, 2], vec![0, 2, 3]],
            )
            .unwrap(),
            ElementType::Quad4 => LagrangianMesh::new(
                et,
                vec![
                    Vector3::new(0.0, 0.0, 0.0),
                    Vector3::new(1.0, 0.0, 0.0),
                    Vector3::new(1.0, 1.0, 0.0),
                    Vector3::new(0.0, 1.0, 0.0),
                ],
                vec![vec![0, 1, 2, 3]],
            )
            .unwrap(),
            _ => unreachable!(),
        }
    }

    #[test]
    fn identity_map_gives_identity_gradient() {
        for et in [ElementType::Tri3, ElementType::Quad4] {
            let mesh = unit_square(et);
            for e in 0..mesh.n_elements() {
                for q in 0..mesh.n_qp_per_element() {
                    let f = mesh.deformation_gradient(&mesh.nodes, e, q);
                    assert!((f.tensor() - Matrix3::identity()).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn boundary_facets_and_normals() {
        let mesh = unit_square(ElementType::Tri3);
        assert_eq!(mesh.facets.len(), 4);
        let perimeter: f64 = mesh.facets.iter().map(|f| f.measure()).sum();
        assert!((perimeter - 4.0).abs() < 1e-14);
        for f in &mesh.facets {
            let c = f.centroid(&mesh);
            let n = f.qps[0].normal;
            assert!((n.norm() - 1.0).abs() < 1e-14);
            // Outward: the normal points away from the square centre.
            assert!(n.dot(&(c - Vector3::new(0.5, 0.5, 0.0))) > 0.0);
        }
    }

    #[test]
    fn mass_row_sums_integrate_basis() {
        let mesh = unit_square(ElementType::Quad4);
        for s in mesh.mass_matrix().row_sums() {
            assert!((s - 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn facet_sets_select_by_centroid() {
        let mut mesh = unit_square(ElementType::Quad4);
        assert_eq!(mesh.add_facet_set("left", |c, _| c[0] < 1e-9), 1);
        assert_eq!(mesh.facet_set_nodes("left").unwrap(), vec![0, 3]);
        assert!(matches!(mesh.facet_set("nope"), Err(Error::Config(_))));
    }

    #[test]
    fn inverted_element_rejected() {
        let nodes = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
        ];
        let err = LagrangianMesh::new(ElementType::Tri3, nodes, vec![vec![0, 1, 2]]).unwrap_err();
        assert!(matches!(err, Error::InvertedElement { element: Some(0), .. }));
    }

    #[test]
    fn constant_projection() {
        let mesh = unit_square(ElementType::Tri3);
        let c = Vector3::new(1.5, -2.0, 0.0);
        let proj = mesh.l2_project(&vec![c; mesh.n_qp_total()]).unwrap();
        for v in proj {
            assert!((v - c).norm() < 1e-11);
        }
    }
}
