//! Plain-text mesh export and import.
//!
//! ```text
//! mesh <ElementType>
//! nodes <count>
//! <x> <y> <z>            (one line per node)
//! elements <count>
//! <n0> <n1> ...          (one line per element)
//! facet_set <name> <count> <facet ids...>
//! ```

use std::io::{BufRead, Write};

use nalgebra::Vector3;

use super::element::ElementType;
use super::mesh::LagrangianMesh;
use crate::error::{Error, Result};

pub fn write_mesh<W: Write>(mesh: &LagrangianMesh, mut out: W) -> Result<()> {
    writeln!(out, "mesh {:?}", mesh.element_type)?;
    writeln!(out, "nodes {}", mesh.n_nodes())?;
    for x in &mesh.nodes {
        writeln!(out, "{:e} {:e} {:e}", x[0], x[1], x[2])?;
    }
    writeln!(out, "elements {}", mesh.n_elements())?;
    for e in 0..mesh.n_elements() {
        let line: Vec<String> = mesh.element(e).iter().map(|n| n.to_string()).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    for name in mesh.facet_set_names() {
        let ids = mesh.facet_set(name)?;
        let ids: Vec<String> = ids.iter().map(|n| n.to_string()).collect();
        writeln!(out, "facet_set {name} {} {}", ids.len(), ids.join(" "))?;
    }
    Ok(())
}

pub fn read_mesh<R: BufRead>(input: R) -> Result<LagrangianMesh> {
    let mut lines = input
        .lines()
        .map(|l| l.map_err(Error::from))
        .filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
    let mut next = |what: &str| -> Result<String> {
        lines
            .next()
            .unwrap_or_else(|| Err(Error::Parse(format!("unexpected end of mesh file, expected {what}"))))
    };
    let header = |line: &str, key: &str| -> Result<String> {
        let mut it = line.split_whitespace();
        match (it.next(), it.next()) {
            (Some(k), Some(v)) if k == key => Ok(v.to_string()),
            _ => Err(Error::Parse(format!("expected `{key} <value>`, found `{line}`"))),
        }
    };
    let count = |s: String| -> Result<usize> {
        s.parse().map_err(|_| Error::Parse(format!("bad count `{s}`")))
    };

    let element_type: ElementType = header(&next("mesh header")?, "mesh")?.parse()?;
    let n_nodes = count(header(&next("node count")?, "nodes")?)?;
    let mut nodes = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let line = next("node")?;
        let v: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad coordinate in `{line}`"))))
            .collect::<Result<_>>()?;
        if v.len() != 3 {
            return Err(Error::Parse(format!("node line needs 3 coordinates: `{line}`")));
        }
        nodes.push(Vector3::new(v[0], v[1], v[2]));
    }
    let n_elem = count(header(&next("element count")?, "elements")?)?;
    let mut elements = Vec::with_capacity(n_elem);
    for _ in 0..n_elem {
        let line = next("element")?;
        let conn: Vec<usize> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad node id in `{line}`"))))
            .collect::<Result<_>>()?;
        elements.push(conn);
    }
    let mut mesh = LagrangianMesh::new(element_type, nodes, elements)?;
    for line in lines {
        let line = line?;
        let mut it = line.split_whitespace();
        if it.next() != Some("facet_set") {
            return Err(Error::Parse(format!("unexpected line `{line}`")));
        }
        let name = it.next().ok_or_else(|| Error::Parse("facet_set without name".into()))?;
        let n = count(it.next().unwrap_or("").to_string())?;
        let ids: Vec<usize> = it
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad facet id `{t}`"))))
            .collect::<Result<_>>()?;
        if ids.len() != n || ids.iter().any(|&i| i >= mesh.facets.len()) {
            return Err(Error::Parse(format!("malformed facet set `{name}`")));
        }
        mesh.set_facet_set(name, ids);
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{quad_patch, ElementKind};

    #[test]
    fn round_trip() {
        let mut mesh = quad_patch(ElementKind::Q2, 2, 3, |s, t| Vector3::new(s, 2.0 * t, 0.0)).unwrap();
        mesh.add_facet_set("left", |c, _| c[0] < 1e-9);
        let mut buf = Vec::new();
        write_mesh(&mesh, &mut buf).unwrap();
        let back = read_mesh(buf.as_slice()).unwrap();
        assert_eq!(back.nodes, mesh.nodes);
        assert_eq!(back.n_elements(), mesh.n_elements());
        assert_eq!(back.facet_set("left").unwrap(), mesh.facet_set("left").unwrap());
    }

    #[test]
    fn truncated_file_is_a_parse_error() {
        let err = read_mesh("mesh Tri3\nnodes 3\n0 0 0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
    }
}
