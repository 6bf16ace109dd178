//! Structured mesh generators over mapped parameter boxes.

use nalgebra::Vector3;

use super::element::{ElementKind, ElementType};
use super::mesh::LagrangianMesh;
use crate::error::{Error, Result};

/// Meshes the image of `[0,1]²` under `map` with `a × b` cells.
///
/// Vertices are placed by the map; P2/Q2 midside and centre nodes are
/// averages of the cell vertices, so element edges stay straight. P1 and P2
/// split every cell along the diagonal from its lower-left corner.
pub fn quad_patch<M>(kind: ElementKind, a: usize, b: usize, map: M) -> Result<LagrangianMesh>
where
    M: Fn(f64, f64) -> Vector3<f64>,
{
    if a == 0 || b == 0 {
        return Err(Error::Parameter("subdivision counts must be positive".into()));
    }
    let et = kind.for_dim(2)?;
    let order = match kind {
        ElementKind::P2 | ElementKind::Q2 => 2,
        _ => 1,
    };
    let nx = order * a + 1;
    let ny = order * b + 1;
    let id = |i: usize, j: usize| j * nx + i;
    let mut nodes = vec![Vector3::zeros(); nx * ny];
    for j in 0..=b {
        for i in 0..=a {
            nodes[id(order * i, order * j)] = map(i as f64 / a as f64, j as f64 / b as f64);
        }
    }
    if order == 2 {
        for j in 0..ny {
            for i in 0..nx {
                match (i % 2, j % 2) {
                    (1, 0) => nodes[id(i, j)] = 0.5 * (nodes[id(i - 1, j)] + nodes[id(i + 1, j)]),
                    (0, 1) => nodes[id(i, j)] = 0.5 * (nodes[id(i, j - 1)] + nodes[id(i, j + 1)]),
                    _ => {}
                }
            }
        }
        for j in (1..ny).step_by(2) {
            for i in (1..nx).step_by(2) {
                let c00 = nodes[id(i - 1, j - 1)];
                let c11 = nodes[id(i + 1, j + 1)];
                nodes[id(i, j)] = if kind == ElementKind::P2 {
                    0.5 * (c00 + c11)
                } else {
                    0.25 * (c00 + c11 + nodes[id(i + 1, j - 1)] + nodes[id(i - 1, j + 1)])
                };
            }
        }
    }

    let mut elements = Vec::new();
    for cj in 0..b {
        for ci in 0..a {
            let (i, j) = (order * ci, order * cj);
            match et {
                ElementType::Tri3 => {
                    let (n00, n10, n11, n01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                    elements.push(vec![n00, n10, n11]);
                    elements.push(vec![n00, n11, n01]);
                }
                ElementType::Quad4 => {
                    elements.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
                }
                ElementType::Tri6 => {
                    let (n00, n20, n22, n02) = (id(i, j), id(i + 2, j), id(i + 2, j + 2), id(i, j + 2));
                    let diag = id(i + 1, j + 1);
                    elements.push(vec![n00, n20, n22, id(i + 1, j), id(i + 2, j + 1), diag]);
                    elements.push(vec![n00, n22, n02, diag, id(i + 1, j + 2), id(i, j + 1)]);
                }
                ElementType::Quad9 => {
                    elements.push(vec![
                        id(i, j),
                        id(i + 2, j),
                        id(i + 2, j + 2),
                        id(i, j + 2),
                        id(i + 1, j),
                        id(i + 2, j + 1),
                        id(i + 1, j + 2),
                        id(i, j + 1),
                        id(i + 1, j + 1),
                    ]);
                }
                _ => unreachable!("2D element"),
            }
        }
    }
    LagrangianMesh::new(et, nodes, elements)
}

/// Trilinear hexahedral mesh of the image of `[0,1]³` with `a × b × c` cells.
pub fn hex_block<M>(a: usize, b: usize, c: usize, map: M) -> Result<LagrangianMesh>
where
    M: Fn(f64, f64, f64) -> Vector3<f64>,
{
    if a == 0 || b == 0 || c == 0 {
        return Err(Error::Parameter("subdivision counts must be positive".into()));
    }
    let id = |i: usize, j: usize, k: usize| (k * (b + 1) + j) * (a + 1) + i;
    let mut nodes = Vec::with_capacity((a + 1) * (b + 1) * (c + 1));
    for k in 0..=c {
        for j in 0..=b {
            for i in 0..=a {
                nodes.push(map(i as f64 / a as f64, j as f64 / b as f64, k as f64 / c as f64));
            }
        }
    }
    let mut elements = Vec::with_capacity(a * b * c);
    for k in 0..c {
        for j in 0..b {
            for i in 0..a {
                let mut hex = vec![
                    id(i, j, k),
                    id(i + 1, j, k),
                    id(i + 1, j + 1, k),
                    id(i, j + 1, k),
                    id(i, j, k + 1),
                    id(i + 1, j, k + 1),
                    id(i + 1, j + 1, k + 1),
                    id(i, j + 1, k + 1),
                ];
                if signed_volume_tet(&nodes, &[hex[0], hex[1], hex[3], hex[4]]) < 0.0 {
                    // Left-handed map: mirror the cell so the reference Jacobian is positive.
                    hex.swap(1, 3);
                    hex.swap(5, 7);
                }
                elements.push(hex);
            }
        }
    }
    LagrangianMesh::new(ElementType::Hex8, nodes, elements)
}

/// Tetrahedral mesh of the image of `[0,1]³`: the `(s, t)` cross-section is
/// triangulated, extruded through `c` layers along `u`, and each prism is
/// split into three tetrahedra by the minimum-index rule, which keeps shared
/// quadrilateral faces conforming.
///
/// With `crossed`, every cross-section cell gets a centre node and four
/// triangles, giving `(a+1)(b+1) + ab` nodes per layer.
pub fn prism_block<M>(a: usize, b: usize, c: usize, crossed: bool, map: M) -> Result<LagrangianMesh>
where
    M: Fn(f64, f64, f64) -> Vector3<f64>,
{
    if a == 0 || b == 0 || c == 0 {
        return Err(Error::Parameter("subdivision counts must be positive".into()));
    }
    let mut params: Vec<(f64, f64)> = Vec::new();
    for j in 0..=b {
        for i in 0..=a {
            params.push((i as f64 / a as f64, j as f64 / b as f64));
        }
    }
    let vid = |i: usize, j: usize| j * (a + 1) + i;
    let mut tris = Vec::new();
    for j in 0..b {
        for i in 0..a {
            let (n00, n10, n11, n01) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            if crossed {
                let centre = params.len();
                params.push(((i as f64 + 0.5) / a as f64, (j as f64 + 0.5) / b as f64));
                tris.push([n00, n10, centre]);
                tris.push([n10, n11, centre]);
                tris.push([n11, n01, centre]);
                tris.push([n01, n00, centre]);
            } else {
                tris.push([n00, n10, n11]);
                tris.push([n00, n11, n01]);
            }
        }
    }
    let per_layer = params.len();
    let mut nodes = Vec::with_capacity(per_layer * (c + 1));
    for k in 0..=c {
        let u = k as f64 / c as f64;
        for &(s, t) in &params {
            nodes.push(map(s, t, u));
        }
    }
    let mut elements = Vec::with_capacity(3 * tris.len() * c);
    for k in 0..c {
        for tri in &tris {
            let prism = [
                tri[0] + k * per_layer,
                tri[1] + k * per_layer,
                tri[2] + k * per_layer,
                tri[0] + (k + 1) * per_layer,
                tri[1] + (k + 1) * per_layer,
                tri[2] + (k + 1) * per_layer,
            ];
            for mut tet in split_prism(prism) {
                if signed_volume_tet(&nodes, &tet) < 0.0 {
                    tet.swap(1, 2);
                }
                elements.push(tet.to_vec());
            }
        }
    }
    LagrangianMesh::new(ElementType::Tet4, nodes, elements)
}

/// Splits a prism (bottom triangle `0,1,2`, top `3,4,5` with `i+3` above `i`)
/// into three tetrahedra whose quadrilateral face diagonals all pass through
/// the smallest global index on each face.
fn split_prism(v: [usize; 6]) -> [[usize; 4]; 3] {
    const ROT: [[usize; 6]; 6] = [
        [0, 1, 2, 3, 4, 5],
        [1, 2, 0, 4, 5, 3],
        [2, 0, 1, 5, 3, 4],
        [3, 5, 4, 0, 2, 1],
        [4, 3, 5, 1, 0, 2],
        [5, 4, 3, 2, 1, 0],
    ];
    let min_pos = (0..6).min_by_key(|&i| v[i]).unwrap();
    let r = ROT[min_pos].map(|i| v[i]);
    if r[1].min(r[5]) < r[2].min(r[4]) {
        [[r[0], r[1], r[2], r[5]], [r[0], r[1], r[5], r[4]], [r[0], r[4], r[5], r[3]]]
    } else {
        [[r[0], r[1], r[2], r[4]], [r[0], r[4], r[2], r[5]], [r[0], r[4], r[5], r[3]]]
    }
}

fn signed_volume_tet(nodes: &[Vector3<f64>], t: &[usize]) -> f64 {
    let a = nodes[t[1]] - nodes[t[0]];
    let b = nodes[t[2]] - nodes[t[0]];
    let c = nodes[t[3]] - nodes[t[0]];
    a.dot(&b.cross(&c)) / 6.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn skewed(s: f64, t: f64) -> Vector3<f64> {
        Vector3::new(2.0 * s + 0.5 * t, 1.0 * t + 0.2 * s * t, 0.0)
    }

    #[test]
    fn node_counts_match_between_orders() {
        let p1 = quad_patch(ElementKind::P1, 4, 4, skewed).unwrap();
        let q2 = quad_patch(ElementKind::Q2, 2, 2, skewed).unwrap();
        let p2 = quad_patch(ElementKind::P2, 2, 2, skewed).unwrap();
        assert_eq!(p1.n_nodes(), 25);
        assert_eq!(q2.n_nodes(), 25);
        assert_eq!(p2.n_nodes(), 25);
        assert_eq!(p1.n_elements(), 32);
    }

    #[test]
    fn areas_agree_across_element_types() {
        let reference = quad_patch(ElementKind::Q1, 6, 6, skewed).unwrap().reference_volume();
        for kind in [ElementKind::P1, ElementKind::P2, ElementKind::Q2] {
            let a = if matches!(kind, ElementKind::P1) { 6 } else { 3 };
            let v = quad_patch(kind, a, a, skewed).unwrap().reference_volume();
            // Straight-edged meshes of a curved map differ slightly at second order.
            assert!((v - reference).abs() / reference < 5e-3, "{kind:?}");
        }
    }

    #[test]
    fn crossed_prism_counts_and_volume() {
        let mesh = prism_block(2, 2, 4, true, |s, t, u| Vector3::new(1.5 * s, 6.0 * u, 1.5 * t)).unwrap();
        assert_eq!(mesh.n_nodes(), 65);
        assert!((mesh.reference_volume() - 13.5).abs() < 1e-12);
    }

    #[test]
    fn tet_faces_conform() {
        let mesh = prism_block(3, 2, 3, false, Vector3::new).unwrap();
        let mut faces: HashMap<[usize; 3], usize> = HashMap::new();
        for e in 0..mesh.n_elements() {
            let t = mesh.element(e);
            for skip in 0..4 {
                let mut f: Vec<usize> = (0..4).filter(|&i| i != skip).map(|i| t[i]).collect();
                f.sort_unstable();
                *faces.entry([f[0], f[1], f[2]]).or_default() += 1;
            }
        }
        assert!(faces.values().all(|&c| c <= 2));
        let boundary = faces.values().filter(|&&c| c == 1).count();
        // Two triangles per boundary quad: 2(ab + bc + ca) quads.
        assert_eq!(boundary, 2 * 2 * (3 * 2 + 2 * 3 + 3 * 3));
        assert_eq!(mesh.facets.len(), boundary);
        let area: f64 = mesh.facets.iter().map(|f| f.measure()).sum();
        assert!((area - 6.0).abs() < 1e-12);
    }

    #[test]
    fn hex_block_volume_and_facets() {
        let mesh = hex_block(2, 3, 4, |s, t, u| Vector3::new(s, 2.0 * t, 3.0 * u)).unwrap();
        assert_eq!(mesh.n_nodes(), 3 * 4 * 5);
        assert!((mesh.reference_volume() - 6.0).abs() < 1e-12);
        let area: f64 = mesh.facets.iter().map(|f| f.measure()).sum();
        assert!((area - 22.0).abs() < 1e-12);
    }

    #[test]
    fn mirrored_hex_map_is_accepted() {
        let mesh = hex_block(2, 2, 2, |s, t, u| Vector3::new(s, u, t)).unwrap();
        assert!((mesh.reference_volume() - 1.0).abs() < 1e-12);
    }
}
