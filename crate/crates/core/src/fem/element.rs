//! Reference elements: Lagrange shape functions, quadrature rules and facets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lagrange element on its reference cell.
///
/// Triangles and tetrahedra live on the unit simplex, quadrilaterals and
/// hexahedra on `[-1, 1]^d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ElementType {
    Tri3,
    Tri6,
    Quad4,
    Quad9,
    Tet4,
    Hex8,
}

/// Element family as named in benchmark configurations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ElementKind {
    P1,
    P2,
    Q1,
    Q2,
}

impl ElementKind {
    pub fn for_dim(self, dim: usize) -> Result<ElementType> {
        match (self, dim) {
            (ElementKind::P1, 2) => Ok(ElementType::Tri3),
            (ElementKind::P2, 2) => Ok(ElementType::Tri6),
            (ElementKind::Q1, 2) => Ok(ElementType::Quad4),
            (ElementKind::Q2, 2) => Ok(ElementType::Quad9),
            (ElementKind::P1, 3) => Ok(ElementType::Tet4),
            (ElementKind::Q1, 3) => Ok(ElementType::Hex8),
            (kind, dim) => Err(Error::Config(format!(
                "element family {kind:?} is not available in {dim}D"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ElementKind::P1 => "P1",
            ElementKind::P2 => "P2",
            ElementKind::Q1 => "Q1",
            ElementKind::Q2 => "Q2",
        }
    }
}

impl std::str::FromStr for ElementKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "P1" => Ok(ElementKind::P1),
            "P2" => Ok(ElementKind::P2),
            "Q1" => Ok(ElementKind::Q1),
            "Q2" => Ok(ElementKind::Q2),
            other => Err(Error::Parse(format!("unknown element type `{other}`"))),
        }
    }
}

impl std::str::FromStr for ElementType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Tri3" => Ok(ElementType::Tri3),
            "Tri6" => Ok(ElementType::Tri6),
            "Quad4" => Ok(ElementType::Quad4),
            "Quad9" => Ok(ElementType::Quad9),
            "Tet4" => Ok(ElementType::Tet4),
            "Hex8" => Ok(ElementType::Hex8),
            other => Err(Error::Parse(format!("unknown element type `{other}`"))),
        }
    }
}

/// Quadrature point in reference coordinates (unused trailing entries are zero).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadPoint {
    pub xi: [f64; 3],
    pub weight: f64,
}

/// Shape function values and reference gradients at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeEval {
    pub values: Vec<f64>,
    pub gradients: Vec<[f64; 3]>,
}

/// Local facet: its nodes, its vertex corners in reference coordinates, and
/// whether it is a segment, triangle or quadrilateral.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalFacet {
    pub nodes: Vec<usize>,
    pub corners: Vec<[f64; 3]>,
    pub shape: FacetShape,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FacetShape {
    Segment,
    Triangle,
    Quadrilateral,
}

const GAUSS2: [(f64, f64); 2] = [(-0.577_350_269_189_625_8, 1.0), (0.577_350_269_189_625_8, 1.0)];
const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

fn lagrange_1d_quadratic(x: f64) -> ([f64; 3], [f64; 3]) {
    // Nodes at -1, 0, 1.
    (
        [0.5 * x * (x - 1.0), 1.0 - x * x, 0.5 * x * (x + 1.0)],
        [x - 0.5, -2.0 * x, x + 0.5],
    )
}

/// Gauss–Legendre points on [0, 1].
pub fn gauss_unit(n: usize) -> Vec<(f64, f64)> {
    let rule: &[(f64, f64)] = if n <= 2 { &GAUSS2 } else { &GAUSS3 };
    rule.iter().map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect()
}

impl ElementType {
    pub fn dim(&self) -> usize {
        match self {
            ElementType::Tri3 | ElementType::Tri6 | ElementType::Quad4 | ElementType::Quad9 => 2,
            ElementType::Tet4 | ElementType::Hex8 => 3,
        }
    }

    pub fn kind(&self) -> ElementKind {
        match self {
            ElementType::Tri3 | ElementType::Tet4 => ElementKind::P1,
            ElementType::Tri6 => ElementKind::P2,
            ElementType::Quad4 | ElementType::Hex8 => ElementKind::Q1,
            ElementType::Quad9 => ElementKind::Q2,
        }
    }

    pub fn n_nodes(&self) -> usize {
        match self {
            ElementType::Tri3 => 3,
            ElementType::Tri6 => 6,
            ElementType::Quad4 => 4,
            ElementType::Quad9 => 9,
            ElementType::Tet4 => 4,
            ElementType::Hex8 => 8,
        }
    }

    /// Number of vertex nodes (they come first in the local ordering).
    pub fn n_vertices(&self) -> usize {
        match self {
            ElementType::Tri3 | ElementType::Tri6 => 3,
            ElementType::Quad4 | ElementType::Quad9 | ElementType::Tet4 => 4,
            ElementType::Hex8 => 8,
        }
    }

    /// Measure of the reference cell.
    pub fn reference_measure(&self) -> f64 {
        match self {
            ElementType::Tri3 | ElementType::Tri6 => 0.5,
            ElementType::Quad4 | ElementType::Quad9 => 4.0,
            ElementType::Tet4 => 1.0 / 6.0,
            ElementType::Hex8 => 8.0,
        }
    }

    pub fn reference_nodes(&self) -> Vec<[f64; 3]> {
        match self {
            ElementType::Tri3 => vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            ElementType::Tri6 => vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.5, 0.0, 0.0],
                [0.5, 0.5, 0.0],
                [0.0, 0.5, 0.0],
            ],
            ElementType::Quad4 => vec![
                [-1.0, -1.0, 0.0],
                [1.0, -1.0, 0.0],
                [1.0, 1.0, 0.0],
                [-1.0, 1.0, 0.0],
            ],
            ElementType::Quad9 => vec![
                [-1.0, -1.0, 0.0],
                [1.0, -1.0, 0.0],
                [1.0, 1.0, 0.0],
                [-1.0, 1.0, 0.0],
                [0.0, -1.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [-1.0, 0.0, 0.0],
                [0.0, 0.0, 0.0],
            ],
            ElementType::Tet4 => vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, 0.0, 1.0],
            ],
            ElementType::Hex8 => vec![
                [-1.0, -1.0, -1.0],
                [1.0, -1.0, -1.0],
                [1.0, 1.0, -1.0],
                [-1.0, 1.0, -1.0],
                [-1.0, -1.0, 1.0],
                [1.0, -1.0, 1.0],
                [1.0, 1.0, 1.0],
                [-1.0, 1.0, 1.0],
            ],
        }
    }

    /// Checks that `xi` lies in the closed reference cell (with a small slack).
    pub fn contains(&self, xi: [f64; 3]) -> bool {
        const SLACK: f64 = 1e-12;
        match self {
            ElementType::Tri3 | ElementType::Tri6 => {
                xi[0] >= -SLACK && xi[1] >= -SLACK && xi[0] + xi[1] <= 1.0 + SLACK
            }
            ElementType::Quad4 | ElementType::Quad9 => {
                xi[0].abs() <= 1.0 + SLACK && xi[1].abs() <= 1.0 + SLACK
            }
            ElementType::Tet4 => {
                xi.iter().all(|&x| x >= -SLACK) && xi[0] + xi[1] + xi[2] <= 1.0 + SLACK
            }
            ElementType::Hex8 => xi.iter().all(|x| x.abs() <= 1.0 + SLACK),
        }
    }

    /// Shape function values and reference gradients at `xi`.
    pub fn shape_eval(&self, xi: [f64; 3]) -> Result<ShapeEval> {
        if !self.contains(xi) {
            return Err(Error::Parameter(format!(
                "point {xi:?} lies outside the reference {self:?}"
            )));
        }
        Ok(self.shape_eval_unchecked(xi))
    }

    pub(crate) fn shape_eval_unchecked(&self, xi: [f64; 3]) -> ShapeEval {
        let [x, y, z] = xi;
        let (values, gradients) = match self {
            ElementType::Tri3 => (
                vec![1.0 - x - y, x, y],
                vec![[-1.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            ),
            ElementType::Tri6 => {
                let l = [1.0 - x - y, x, y];
                let dl = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
                let mut v = Vec::with_capacity(6);
                let mut g = Vec::with_capacity(6);
                for i in 0..3 {
                    v.push(l[i] * (2.0 * l[i] - 1.0));
                    let s = 4.0 * l[i] - 1.0;
                    g.push([s * dl[i][0], s * dl[i][1], 0.0]);
                }
                for (a, b) in [(0, 1), (1, 2), (2, 0)] {
                    v.push(4.0 * l[a] * l[b]);
                    g.push([
                        4.0 * (dl[a][0] * l[b] + l[a] * dl[b][0]),
                        4.0 * (dl[a][1] * l[b] + l[a] * dl[b][1]),
                        0.0,
                    ]);
                }
                (v, g)
            }
            ElementType::Quad4 => {
                let signs = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
                let v = signs
                    .iter()
                    .map(|(sx, sy)| 0.25 * (1.0 + sx * x) * (1.0 + sy * y))
                    .collect();
                let g = signs
                    .iter()
                    .map(|(sx, sy)| {
                        [
                            0.25 * sx * (1.0 + sy * y),
                            0.25 * sy * (1.0 + sx * x),
                            0.0,
                        ]
                    })
                    .collect();
                (v, g)
            }
            ElementType::Quad9 => {
                let (lx, dx) = lagrange_1d_quadratic(x);
                let (ly, dy) = lagrange_1d_quadratic(y);
                // (1D index in x, 1D index in y) per local node.
                const IDX: [(usize, usize); 9] = [
                    (0, 0),
                    (2, 0),
                    (2, 2),
                    (0, 2),
                    (1, 0),
                    (2, 1),
                    (1, 2),
                    (0, 1),
                    (1, 1),
                ];
                let v = IDX.iter().map(|&(i, j)| lx[i] * ly[j]).collect();
                let g = IDX
                    .iter()
                    .map(|&(i, j)| [dx[i] * ly[j], lx[i] * dy[j], 0.0])
                    .collect();
                (v, g)
            }
            ElementType::Tet4 => (
                vec![1.0 - x - y - z, x, y, z],
                vec![
                    [-1.0, -1.0, -1.0],
                    [1.0, 0.0, 0.0],
                    [0.0, 1.0, 0.0],
                    [0.0, 0.0, 1.0],
                ],
            ),
            ElementType::Hex8 => {
                let nodes = self.reference_nodes();
                let v = nodes
                    .iter()
                    .map(|n| 0.125 * (1.0 + n[0] * x) * (1.0 + n[1] * y) * (1.0 + n[2] * z))
                    .collect();
                let g = nodes
                    .iter()
                    .map(|n| {
                        [
                            0.125 * n[0] * (1.0 + n[1] * y) * (1.0 + n[2] * z),
                            0.125 * n[1] * (1.0 + n[0] * x) * (1.0 + n[2] * z),
                            0.125 * n[2] * (1.0 + n[0] * x) * (1.0 + n[1] * y),
                        ]
                    })
                    .collect();
                (v, g)
            }
        };
        ShapeEval { values, gradients }
    }

    /// Volume quadrature; every rule integrates products of basis functions
    /// exactly on affine cells.
    pub fn quadrature(&self) -> Vec<QuadPoint> {
        match self {
            ElementType::Tri3 => [[1.0 / 6.0, 1.0 / 6.0], [2.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 2.0 / 3.0]]
                .iter()
                .map(|p| QuadPoint {
                    xi: [p[0], p[1], 0.0],
                    weight: 1.0 / 6.0,
                })
                .collect(),
            ElementType::Tri6 => {
                let s15 = 15f64.sqrt();
                let b1 = (6.0 + s15) / 21.0;
                let b2 = (6.0 - s15) / 21.0;
                let w1 = (155.0 + s15) / 1200.0;
                let w2 = (155.0 - s15) / 1200.0;
                let mut pts = vec![QuadPoint {
                    xi: [1.0 / 3.0, 1.0 / 3.0, 0.0],
                    weight: 0.5 * 0.225,
                }];
                for (b, w) in [(b1, w1), (b2, w2)] {
                    let a = 1.0 - 2.0 * b;
                    for xy in [[a, b], [b, a], [b, b]] {
                        pts.push(QuadPoint {
                            xi: [xy[0], xy[1], 0.0],
                            weight: 0.5 * w,
                        });
                    }
                }
                pts
            }
            ElementType::Quad4 | ElementType::Quad9 => {
                let rule: &[(f64, f64)] = if *self == ElementType::Quad4 { &GAUSS2 } else { &GAUSS3 };
                let mut pts = Vec::new();
                for &(y, wy) in rule {
                    for &(x, wx) in rule {
                        pts.push(QuadPoint {
                            xi: [x, y, 0.0],
                            weight: wx * wy,
                        });
                    }
                }
                pts
            }
            ElementType::Tet4 => {
                let a = (5.0 - 5f64.sqrt()) / 20.0;
                let b = (5.0 + 3.0 * 5f64.sqrt()) / 20.0;
                [[a, a, a], [b, a, a], [a, b, a], [a, a, b]]
                    .iter()
                    .map(|&xi| QuadPoint {
                        xi,
                        weight: 1.0 / 24.0,
                    })
                    .collect()
            }
            ElementType::Hex8 => {
                let mut pts = Vec::new();
                for &(z, wz) in &GAUSS2 {
                    for &(y, wy) in &GAUSS2 {
                        for &(x, wx) in &GAUSS2 {
                            pts.push(QuadPoint {
                                xi: [x, y, z],
                                weight: wx * wy * wz,
                            });
                        }
                    }
                }
                pts
            }
        }
    }

    pub fn facets(&self) -> Vec<LocalFacet> {
        let nodes = self.reference_nodes();
        let make = |ids: &[usize], extra: &[usize], shape: FacetShape| LocalFacet {
            nodes: ids.iter().chain(extra).copied().collect(),
            corners: ids.iter().map(|&i| nodes[i]).collect(),
            shape,
        };
        match self {
            ElementType::Tri3 => vec![
                make(&[0, 1], &[], FacetShape::Segment),
                make(&[1, 2], &[], FacetShape::Segment),
                make(&[2, 0], &[], FacetShape::Segment),
            ],
            ElementType::Tri6 => vec![
                make(&[0, 1], &[3], FacetShape::Segment),
                make(&[1, 2], &[4], FacetShape::Segment),
                make(&[2, 0], &[5], FacetShape::Segment),
            ],
            ElementType::Quad4 => vec![
                make(&[0, 1], &[], FacetShape::Segment),
                make(&[1, 2], &[], FacetShape::Segment),
                make(&[2, 3], &[], FacetShape::Segment),
                make(&[3, 0], &[], FacetShape::Segment),
            ],
            ElementType::Quad9 => vec![
                make(&[0, 1], &[4], FacetShape::Segment),
                make(&[1, 2], &[5], FacetShape::Segment),
                make(&[2, 3], &[6], FacetShape::Segment),
                make(&[3, 0], &[7], FacetShape::Segment),
            ],
            ElementType::Tet4 => vec![
                make(&[0, 2, 1], &[], FacetShape::Triangle),
                make(&[0, 1, 3], &[], FacetShape::Triangle),
                make(&[1, 2, 3], &[], FacetShape::Triangle),
                make(&[0, 3, 2], &[], FacetShape::Triangle),
            ],
            ElementType::Hex8 => vec![
                make(&[0, 3, 2, 1], &[], FacetShape::Quadrilateral),
                make(&[4, 5, 6, 7], &[], FacetShape::Quadrilateral),
                make(&[0, 1, 5, 4], &[], FacetShape::Quadrilateral),
                make(&[1, 2, 6, 5], &[], FacetShape::Quadrilateral),
                make(&[2, 3, 7, 6], &[], FacetShape::Quadrilateral),
                make(&[3, 0, 4, 7], &[], FacetShape::Quadrilateral),
            ],
        }
    }

    /// Facet quadrature: the element's volume rule restricted to its facets.
    /// Returns parametric points on the facet with weights on the unit
    /// parameter domain and the tangent directions in reference coordinates.
    pub(crate) fn facet_quadrature(&self, facet: &LocalFacet) -> Vec<FacetQuadPoint> {
        let c = &facet.corners;
        let lerp = |a: [f64; 3], b: [f64; 3], t: f64| -> [f64; 3] {
            [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])]
        };
        let sub = |a: [f64; 3], b: [f64; 3]| [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        match facet.shape {
            FacetShape::Segment => {
                let n = match self {
                    ElementType::Tri6 | ElementType::Quad9 => 3,
                    _ => 2,
                };
                gauss_unit(n)
                    .into_iter()
                    .map(|(s, w)| FacetQuadPoint {
                        xi: lerp(c[0], c[1], s),
                        weight: w,
                        tangents: [sub(c[0], c[1]), [0.0; 3]],
                    })
                    .collect()
            }
            FacetShape::Triangle => {
                let t1 = sub(c[0], c[1]);
                let t2 = sub(c[0], c[2]);
                [[1.0 / 6.0, 1.0 / 6.0], [2.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 2.0 / 3.0]]
                    .iter()
                    .map(|p| FacetQuadPoint {
                        xi: [
                            c[0][0] + p[0] * t1[0] + p[1] * t2[0],
                            c[0][1] + p[0] * t1[1] + p[1] * t2[1],
                            c[0][2] + p[0] * t1[2] + p[1] * t2[2],
                        ],
                        weight: 1.0 / 6.0,
                        tangents: [t1, t2],
                    })
                    .collect()
            }
            FacetShape::Quadrilateral => {
                let mut pts = Vec::new();
                for (t, wt) in gauss_unit(2) {
                    for (s, ws) in gauss_unit(2) {
                        let bottom = lerp(c[0], c[1], s);
                        let top = lerp(c[3], c[2], s);
                        let xi = lerp(bottom, top, t);
                        let ds = sub(lerp(c[0], c[3], t), lerp(c[1], c[2], t));
                        let dt = sub(bottom, top);
                        pts.push(FacetQuadPoint {
                            xi,
                            weight: ws * wt,
                            tangents: [ds, dt],
                        });
                    }
                }
                pts
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct FacetQuadPoint {
    pub xi: [f64; 3],
    pub weight: f64,
    pub tangents: [[f64; 3]; 2],
}
