//! Volume and displacement diagnostics, run reports and output writers.

use std::io::{Read, Write};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{ElementType, LagrangianMesh};

/// Quadrature-weighted mean of `J` per element. Negative values are reported as is.
pub fn element_avg_j(mesh: &LagrangianMesh, chi: &[Vector3<f64>]) -> Vec<f64> {
    (0..mesh.n_elements())
        .map(|e| {
            let mut num = 0.0;
            for q in 0..mesh.n_qp_per_element() {
                num += mesh.deformation_gradient(chi, e, q).det() * mesh.weight(e, q);
            }
            num / mesh.element_measure(e)
        })
        .collect()
}

/// Current volume `Σ_e Σ_Q J(X_Q) w_Q`.
pub fn current_volume(mesh: &LagrangianMesh, chi: &[Vector3<f64>]) -> f64 {
    let mut v = 0.0;
    for e in 0..mesh.n_elements() {
        for q in 0..mesh.n_qp_per_element() {
            v += mesh.deformation_gradient(chi, e, q).det() * mesh.weight(e, q);
        }
    }
    v
}

/// Signed percent change of the total volume relative to the reference.
pub fn total_volume_change_pct(mesh: &LagrangianMesh, chi: &[Vector3<f64>]) -> f64 {
    let v_ref = mesh.reference_volume();
    100.0 * (current_volume(mesh, chi) - v_ref) / v_ref
}

/// Displacement `χ_ℓ − X_ℓ` of node `node`.
pub fn track_point(mesh: &LagrangianMesh, chi: &[Vector3<f64>], node: usize) -> Result<Vector3<f64>> {
    if node >= mesh.n_nodes() || chi.len() != mesh.n_nodes() {
        return Err(Error::Config(format!(
            "tracked node {node} does not exist (mesh has {} nodes)",
            mesh.n_nodes()
        )));
    }
    Ok(chi[node] - mesh.nodes[node])
}

/// One row of a run's time series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub disp_x: f64,
    pub disp_y: f64,
    pub disp_z: f64,
    pub volume_change_pct: f64,
    pub max_speed: f64,
    pub min_avg_j: f64,
}

impl Sample {
    pub fn displacement(&self) -> [f64; 3] {
        [self.disp_x, self.disp_y, self.disp_z]
    }
}

/// Identifies a run; also used to build report file names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub benchmark: String,
    pub mode: String,
    pub nu_s: f64,
    pub element: String,
    pub n_nodes: usize,
    pub grid_n: usize,
    pub dt: f64,
}

impl RunMeta {
    /// `<benchmark>_<mode>_<nu>_<m>`.
    pub fn file_stem(&self) -> String {
        format!("{}_{}_{}_{}", self.benchmark, self.mode, self.nu_s, self.n_nodes)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub meta: RunMeta,
    pub samples: Vec<Sample>,
    /// Element-averaged `J` at the last recorded state.
    pub final_avg_j: Vec<f64>,
    /// Largest fluid speed observed over the run.
    pub peak_speed: f64,
    /// Error that aborted the run, if any.
    pub failure: Option<String>,
    /// Echo of the configuration that produced the run.
    pub config_echo: String,
}

impl RunReport {
    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn terminal(&self) -> Option<&Sample> {
        self.samples.last()
    }

    pub fn terminal_displacement(&self) -> [f64; 3] {
        self.terminal().map_or([f64::NAN; 3], |s| s.displacement())
    }

    pub fn terminal_volume_change_pct(&self) -> f64 {
        self.terminal().map_or(f64::NAN, |s| s.volume_change_pct)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_samples(&self.samples, out)
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

/// Writes samples as CSV with a header row.
pub fn write_samples<W: Write>(samples: &[Sample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in samples {
        w.serialize(s).map_err(csv_err)?;
    }
    if samples.is_empty() {
        w.write_record(["t", "disp_x", "disp_y", "disp_z", "volume_change_pct", "max_speed", "min_avg_j"])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_samples<R: Read>(input: R) -> Result<Vec<Sample>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(csv_err))
        .collect()
}

fn vtk_cell_type(et: ElementType) -> u8 {
    match et {
        ElementType::Tri3 => 5,
        ElementType::Tri6 => 22,
        ElementType::Quad4 => 9,
        ElementType::Quad9 => 28,
        ElementType::Tet4 => 10,
        ElementType::Hex8 => 12,
    }
}

/// Legacy ASCII VTK unstructured grid of the deformed mesh with the
/// element-averaged `J` as cell data and the displacement as point data.
pub fn write_vtk<W: Write>(mesh: &LagrangianMesh, chi: &[Vector3<f64>], title: &str, mut out: W) -> Result<()> {
    let avg_j = element_avg_j(mesh, chi);
    let nn = mesh.element_type.n_nodes();
    let ne = mesh.n_elements();
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{}", title.replace('\n', " "))?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", mesh.n_nodes())?;
    for x in chi {
        writeln!(out, "{} {} {}", x[0], x[1], x[2])?;
    }
    writeln!(out, "CELLS {ne} {}", ne * (nn + 1))?;
    for e in 0..ne {
        let ids: Vec<String> = mesh.element(e).iter().map(|n| n.to_string()).collect();
        writeln!(out, "{nn} {}", ids.join(" "))?;
    }
    writeln!(out, "CELL_TYPES {ne}")?;
    let ct = vtk_cell_type(mesh.element_type);
    for _ in 0..ne {
        writeln!(out, "{ct}")?;
    }
    writeln!(out, "CELL_DATA {ne}")?;
    writeln!(out, "SCALARS avg_J double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for j in avg_j {
        writeln!(out, "{j}")?;
    }
    writeln!(out, "POINT_DATA {}", mesh.n_nodes())?;
    writeln!(out, "VECTORS displacement double")?;
    for (x, x0) in chi.iter().zip(&mesh.nodes) {
        let d = x - x0;
        writeln!(out, "{} {} {}", d[0], d[1], d[2])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{quad_patch, ElementKind};

    fn mesh() -> LagrangianMesh {
        quad_patch(ElementKind::P2, 3, 2, |s, t| Vector3::new(1.0 + 2.0 * s + 0.3 * t, 1.0 + t, 0.0)).unwrap()
    }

    fn map(mesh: &LagrangianMesh, f: impl Fn(&Vector3<f64>) -> Vector3<f64>) -> Vec<Vector3<f64>> {
        mesh.nodes.iter().map(f).collect()
    }

    #[test]
    fn affine_maps() {
        let m = mesh();
        assert!(element_avg_j(&m, &m.nodes).iter().all(|j| (j - 1.0).abs() < 1e-14));
        assert!(total_volume_change_pct(&m, &m.nodes).abs() < 1e-12);

        let stretch = map(&m, |x| Vector3::new(2.0 * x[0], 0.5 * x[1], 0.0));
        assert!(element_avg_j(&m, &stretch).iter().all(|j| (j - 1.0).abs() < 1e-12));
        assert!(total_volume_change_pct(&m, &stretch).abs() < 1e-10);

        let dilate = map(&m, |x| x * 1.1);
        assert!(element_avg_j(&m, &dilate).iter().all(|j| (j - 1.21).abs() < 1e-12));
        assert!((total_volume_change_pct(&m, &dilate) - 21.0).abs() < 1e-10);
    }

    #[test]
    fn tracked_displacement() {
        let m = mesh();
        let c = Vector3::new(0.3, -0.1, 0.0);
        let moved = map(&m, |x| x + c);
        assert!((track_point(&m, &moved, 4).unwrap() - c).norm() < 1e-15);
        assert!(track_point(&m, &m.nodes, 0).unwrap().norm() == 0.0);
        assert!(matches!(track_point(&m, &m.nodes, 10_000), Err(Error::Config(_))));
    }

    #[test]
    fn samples_round_trip() {
        let samples = vec![
            Sample {
                t: 0.1,
                disp_x: 1.0 / 3.0,
                disp_y: -2.5e-7,
                disp_z: 0.0,
                volume_change_pct: 0.012345678901234,
                max_speed: 3.0,
                min_avg_j: 0.99,
            },
            Sample {
                t: 0.2,
                disp_x: f64::MIN_POSITIVE,
                disp_y: 1e300,
                disp_z: -0.0,
                volume_change_pct: -7.45,
                max_speed: 0.0,
                min_avg_j: 1.0,
            },
        ];
        let mut buf = Vec::new();
        write_samples(&samples, &mut buf).unwrap();
        assert_eq!(read_samples(buf.as_slice()).unwrap(), samples);
        let mut empty = Vec::new();
        write_samples(&[], &mut empty).unwrap();
        assert!(read_samples(empty.as_slice()).unwrap().is_empty());
    }

    #[test]
    fn vtk_structure() {
        let m = mesh();
        let mut buf = Vec::new();
        write_vtk(&m, &m.nodes, "test", &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 3.0\n"));
        assert!(text.contains(&format!("CELLS {} {}", m.n_elements(), m.n_elements() * 7)));
        assert!(text.contains("SCALARS avg_J double 1"));
    }

    #[test]
    fn file_stem_layout() {
        let meta = RunMeta {
            benchmark: "cook2d".into(),
            mode: "modified".into(),
            nu_s: 0.4,
            element: "P1".into(),
            n_nodes: 289,
            grid_n: 64,
            dt: 1e-3,
        };
        assert_eq!(meta.file_stem(), "cook2d_modified_0.4_289");
    }
}
