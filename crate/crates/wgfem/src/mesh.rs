//! 2D polygonal meshes with full edge topology and cached geometry.
//!
//! A mesh is immutable after construction. Each element is a simple
//! counter-clockwise polygon; each edge stores its one or two adjacent
//! elements and every (element, edge) incidence caches the outward unit
//! normal, since every local weak problem consumes it.

use std::collections::HashMap;
use std::num::NonZeroU32;

use nalgebra::{Point2, Vector2};

use crate::error::{Result, WgError};
use crate::real::{real, Real};

/// An undirected mesh edge.
#[derive(Clone, Debug)]
pub struct Edge {
    /// Endpoint vertex indices, in the orientation of first discovery.
    pub vertices: [usize; 2],
    /// Adjacent element ids: one for boundary edges, two for interior ones.
    pub elements: (usize, Option<usize>),
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.elements.1.is_none()
    }
}

/// Per-element geometric quantities.
#[derive(Clone, Debug)]
pub struct ElementGeometry<T: Real> {
    /// Area centroid of the polygon.
    pub centroid: Point2<T>,
    /// Signed shoelace area; strictly positive for a valid element.
    pub area: T,
    /// Element diameter: the maximum vertex-pair distance.
    pub diameter: T,
}

/// Geometric frame of an edge: arc-length parametrization onto `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct EdgeFrame<T: Real> {
    pub edge: usize,
    pub start: Point2<T>,
    pub end: Point2<T>,
    pub length: T,
    pub tangent: Vector2<T>,
    pub midpoint: Point2<T>,
}

impl<T: Real> EdgeFrame<T> {
    /// Maps a parameter `t` in `[-1, 1]` to the physical point on the edge.
    #[inline]
    pub fn point(&self, t: T) -> Point2<T> {
        self.midpoint + self.tangent * (t * self.length / real(2.0))
    }

    /// Jacobian of the parametrization, `ds = jacobian * dt`.
    #[inline]
    pub fn jacobian(&self) -> T {
        self.length / real(2.0)
    }
}

/// A single invariant violation found by [`Mesh::validate`].
#[derive(Clone, Debug)]
pub struct Violation {
    /// Entity the violation refers to, e.g. `element 3` or `edge 7`.
    pub entity: String,
    /// Which invariant failed.
    pub invariant: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.entity, self.invariant)
    }
}

/// Immutable 2D polygonal mesh.
#[derive(Clone, Debug)]
pub struct Mesh<T: Real> {
    pub(crate) vertices: Vec<Point2<T>>,
    pub(crate) elements: Vec<Vec<usize>>,
    pub(crate) edges: Vec<Edge>,
    /// Edge ids per element, in the element's CCW traversal order.
    pub(crate) element_edges: Vec<Vec<usize>>,
    /// Outward unit normal per (element, local edge) incidence.
    pub(crate) element_normals: Vec<Vec<Vector2<T>>>,
    pub(crate) geometry: Vec<ElementGeometry<T>>,
    pub(crate) h: T,
}

impl<T: Real> Mesh<T> {
    /// Builds a mesh from vertices and CCW element polygons, deriving the
    /// edge topology and geometry cache.
    pub fn new(vertices: Vec<Point2<T>>, elements: Vec<Vec<usize>>) -> Result<Self> {
        for (el, poly) in elements.iter().enumerate() {
            if poly.len() < 3 {
                return Err(WgError::Topology {
                    element: el,
                    message: format!("polygon has only {} vertices", poly.len()),
                });
            }
            for &v in poly {
                if v >= vertices.len() {
                    return Err(WgError::Topology {
                        element: el,
                        message: format!("vertex index {v} out of range"),
                    });
                }
            }
            let mut sorted = poly.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(WgError::Topology {
                    element: el,
                    message: "degenerate polygon (repeated vertex index)".into(),
                });
            }
        }

        let geometry: Vec<ElementGeometry<T>> = elements
            .iter()
            .map(|poly| polygon_geometry(&vertices, poly))
            .collect();
        for (el, geo) in geometry.iter().enumerate() {
            if geo.area <= T::zero() {
                return Err(WgError::Topology {
                    element: el,
                    message: "zero-area or clockwise polygon".into(),
                });
            }
        }

        // Edge discovery in deterministic element order.
        let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut element_edges: Vec<Vec<usize>> = Vec::with_capacity(elements.len());
        for (el, poly) in elements.iter().enumerate() {
            let mut ids = Vec::with_capacity(poly.len());
            for i in 0..poly.len() {
                let a = poly[i];
                let b = poly[(i + 1) % poly.len()];
                let key = (a.min(b), a.max(b));
                match edge_ids.get(&key) {
                    Some(&id) => {
                        if edges[id].elements.1.is_some() {
                            return Err(WgError::Topology {
                                element: el,
                                message: format!(
                                    "non-manifold edge ({a}, {b}) shared by more than two elements"
                                ),
                            });
                        }
                        edges[id].elements.1 = Some(el);
                        ids.push(id);
                    }
                    None => {
                        let id = edges.len();
                        edge_ids.insert(key, id);
                        edges.push(Edge {
                            vertices: [a, b],
                            elements: (el, None),
                        });
                        ids.push(id);
                    }
                }
            }
            element_edges.push(ids);
        }

        // Outward normals: the CCW traversal tangent rotated by -90 degrees.
        let mut element_normals = Vec::with_capacity(elements.len());
        for poly in &elements {
            let mut normals = Vec::with_capacity(poly.len());
            for i in 0..poly.len() {
                let a = vertices[poly[i]];
                let b = vertices[poly[(i + 1) % poly.len()]];
                let t = b - a;
                let n = Vector2::new(t.y, -t.x);
                normals.push(n / n.norm());
            }
            element_normals.push(normals);
        }

        let h = geometry
            .iter()
            .map(|g| g.diameter)
            .fold(T::zero(), |a, b| if b > a { b } else { a });

        Ok(Mesh {
            vertices,
            elements,
            edges,
            element_edges,
            element_normals,
            geometry,
            h,
        })
    }

    /// Uniform triangulation of the unit square: `n x n` cells, each split
    /// along the lower-left to upper-right diagonal.
    pub fn uniform_triangles(n: NonZeroU32) -> Self {
        let n = n.get() as usize;
        let step = T::one() / real(n as f64);
        let idx = |i: usize, j: usize| j * (n + 1) + i;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push(Point2::new(step * real(i as f64), step * real(j as f64)));
            }
        }
        let mut elements = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let v00 = idx(i, j);
                let v10 = idx(i + 1, j);
                let v11 = idx(i + 1, j + 1);
                let v01 = idx(i, j + 1);
                elements.push(vec![v00, v10, v11]);
                elements.push(vec![v00, v11, v01]);
            }
        }
        Mesh::new(vertices, elements).expect("generated mesh is valid")
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_boundary_edges(&self) -> usize {
        self.edges.iter().filter(|e| e.is_boundary()).count()
    }

    pub fn vertex(&self, v: usize) -> Point2<T> {
        self.vertices[v]
    }

    pub fn element(&self, el: usize) -> &[usize] {
        &self.elements[el]
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Edge ids around an element in CCW traversal order.
    pub fn element_edge_ids(&self, el: usize) -> &[usize] {
        &self.element_edges[el]
    }

    /// Cached outward unit normal of the local edge `le` of element `el`.
    pub fn outward_normal(&self, el: usize, le: usize) -> Vector2<T> {
        self.element_normals[el][le]
    }

    pub fn geometry(&self, el: usize) -> &ElementGeometry<T> {
        &self.geometry[el]
    }

    /// Global mesh size `h = max_T h_T`.
    pub fn mesh_size(&self) -> T {
        self.h
    }

    pub fn edge_frame(&self, e: usize) -> EdgeFrame<T> {
        let [a, b] = self.edges[e].vertices;
        let start = self.vertices[a];
        let end = self.vertices[b];
        let d = end - start;
        let length = d.norm();
        EdgeFrame {
            edge: e,
            start,
            end,
            length,
            tangent: d / length,
            midpoint: Point2::from((start.coords + end.coords) / real(2.0)),
        }
    }

    /// Checks every mesh invariant, returning an empty report iff all hold.
    pub fn validate(&self) -> Vec<Violation> {
        let mut report = Vec::new();
        let tol: T = real(1e-12);
        let tight: T = real(1e-14);

        for (el, poly) in self.elements.iter().enumerate() {
            let entity = format!("element {el}");
            let mut sorted = poly.clone();
            sorted.sort_unstable();
            if poly.len() < 3 || sorted.windows(2).any(|w| w[0] == w[1]) {
                report.push(Violation {
                    entity: entity.clone(),
                    invariant: "degenerate polygon".into(),
                });
                continue;
            }
            let geo = polygon_geometry(&self.vertices, poly);
            if geo.area <= T::zero() {
                report.push(Violation {
                    entity: entity.clone(),
                    invariant: "non-positive shoelace area (clockwise polygon)".into(),
                });
            }
            if (geo.area - self.geometry[el].area).abs() > tol * geo.diameter * geo.diameter {
                report.push(Violation {
                    entity: entity.clone(),
                    invariant: "cached area disagrees with shoelace formula".into(),
                });
            }
            if (geo.diameter - self.geometry[el].diameter).abs() > tol * geo.diameter {
                report.push(Violation {
                    entity: entity.clone(),
                    invariant: "cached diameter is not the maximum vertex-pair distance".into(),
                });
            }

            for (le, &e) in self.element_edges[el].iter().enumerate() {
                let n = self.element_normals[el][le];
                if (n.norm() - T::one()).abs() > tight {
                    report.push(Violation {
                        entity: format!("element {el}, edge {e}"),
                        invariant: "normal is not unit length".into(),
                    });
                }
                let frame = self.edge_frame(e);
                let to_mid = frame.midpoint - self.geometry[el].centroid;
                if n.dot(&to_mid) <= T::zero() {
                    report.push(Violation {
                        entity: format!("element {el}, edge {e}"),
                        invariant: "normal orientation (does not point out of the element)".into(),
                    });
                }
                if n.dot(&frame.tangent).abs() > real(1e-13) {
                    report.push(Violation {
                        entity: format!("element {el}, edge {e}"),
                        invariant: "normal is not orthogonal to the edge tangent".into(),
                    });
                }
            }
        }

        for (e, edge) in self.edges.iter().enumerate() {
            let count = 1 + edge.elements.1.is_some() as usize;
            let incident = self
                .element_edges
                .iter()
                .filter(|ids| ids.contains(&e))
                .count();
            if incident != count {
                report.push(Violation {
                    entity: format!("edge {e}"),
                    invariant: "adjacency record disagrees with element incidence".into(),
                });
            }
        }

        // Boundary edges must close into loops: every boundary vertex sees
        // exactly two boundary edges.
        let mut boundary_count = vec![0usize; self.vertices.len()];
        for edge in &self.edges {
            if edge.is_boundary() {
                boundary_count[edge.vertices[0]] += 1;
                boundary_count[edge.vertices[1]] += 1;
            }
        }
        for (v, &c) in boundary_count.iter().enumerate() {
            if c != 0 && c != 2 {
                report.push(Violation {
                    entity: format!("vertex {v}"),
                    invariant: format!("boundary edges do not form closed loops ({c} incident)"),
                });
            }
        }

        report
    }
}

fn polygon_geometry<T: Real>(vertices: &[Point2<T>], poly: &[usize]) -> ElementGeometry<T> {
    let m = poly.len();
    let mut area2 = T::zero();
    let mut cx = T::zero();
    let mut cy = T::zero();
    for i in 0..m {
        let a = vertices[poly[i]];
        let b = vertices[poly[(i + 1) % m]];
        let cross = a.x * b.y - b.x * a.y;
        area2 += cross;
        cx += (a.x + b.x) * cross;
        cy += (a.y + b.y) * cross;
    }
    let area = area2 / real(2.0);
    let six_a = real::<T>(6.0) * area;
    let centroid = if area.abs() > T::zero() {
        Point2::new(cx / six_a, cy / six_a)
    } else {
        Point2::new(T::zero(), T::zero())
    };
    let mut diameter = T::zero();
    for i in 0..m {
        for j in (i + 1)..m {
            let d = (vertices[poly[i]] - vertices[poly[j]]).norm();
            if d > diameter {
                diameter = d;
            }
        }
    }
    ElementGeometry {
        centroid,
        area,
        diameter,
    }
}

/// Parses the `wgmesh` text format.
///
/// Line 1: `wgmesh 2d`. Line 2: `<nv> <ne>`. Then `nv` vertex lines `x y`
/// followed by `ne` element lines `<m> i0 i1 ... i(m-1)` with 0-based CCW
/// vertex indices. `#` starts a comment; tokens are whitespace-separated.
pub fn parse_wgmesh<T: Real>(text: &str) -> Result<Mesh<T>> {
    let mut records: Vec<(usize, Vec<&str>)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if !tokens.is_empty() {
            records.push((lineno + 1, tokens));
        }
    }
    let mut it = records.into_iter();

    let (line, header) = it.next().ok_or(WgError::Parse {
        line: 1,
        message: "empty file".into(),
    })?;
    if header != ["wgmesh", "2d"] {
        return Err(WgError::Parse {
            line,
            message: "expected header `wgmesh 2d`".into(),
        });
    }

    let (line, counts) = it.next().ok_or(WgError::Parse {
        line,
        message: "missing `<nv> <ne>` line".into(),
    })?;
    if counts.len() != 2 {
        return Err(WgError::Parse {
            line,
            message: "expected `<nv> <ne>`".into(),
        });
    }
    let nv: usize = parse_token(counts[0], line, "vertex count")?;
    let ne: usize = parse_token(counts[1], line, "element count")?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, tokens) = it.next().ok_or(WgError::Parse {
            line,
            message: format!("expected {nv} vertex lines"),
        })?;
        if tokens.len() != 2 {
            return Err(WgError::Parse {
                line,
                message: "expected `x y`".into(),
            });
        }
        let x: f64 = parse_token(tokens[0], line, "x coordinate")?;
        let y: f64 = parse_token(tokens[1], line, "y coordinate")?;
        vertices.push(Point2::new(real(x), real(y)));
    }

    let mut elements = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (line, tokens) = it.next().ok_or(WgError::Parse {
            line,
            message: format!("expected {ne} element lines"),
        })?;
        let m: usize = parse_token(tokens[0], line, "vertex count")?;
        if tokens.len() != m + 1 {
            return Err(WgError::Parse {
                line,
                message: format!("expected {m} vertex indices"),
            });
        }
        let mut poly = Vec::with_capacity(m);
        for tok in &tokens[1..] {
            poly.push(parse_token(tok, line, "vertex index")?);
        }
        elements.push(poly);
    }

    if let Some((line, _)) = it.next() {
        return Err(WgError::Parse {
            line,
            message: "trailing content after final element".into(),
        });
    }

    Mesh::new(vertices, elements)
}

fn parse_token<V: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<V> {
    tok.parse().map_err(|_| WgError::Parse {
        line,
        message: format!("invalid {what}: `{tok}`"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(v: u32) -> NonZeroU32 {
        NonZeroU32::new(v).unwrap()
    }

    #[test]
    fn one_cell_counts() {
        let mesh: Mesh<f64> = Mesh::uniform_triangles(n(1));
        assert_eq!(mesh.num_elements(), 2);
        assert_eq!(mesh.num_vertices(), 4);
        assert_eq!(mesh.num_edges(), 5);
        assert_eq!(mesh.num_boundary_edges(), 4);
    }

    #[test]
    fn two_cell_counts_and_mesh_size() {
        let mesh: Mesh<f64> = Mesh::uniform_triangles(n(2));
        assert_eq!(mesh.num_elements(), 8);
        assert_eq!(mesh.num_vertices(), 9);
        assert!((mesh.mesh_size() - std::f64::consts::SQRT_2 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn paper_table_resolution() {
        let mesh: Mesh<f64> = Mesh::uniform_triangles(n(32));
        assert_eq!(mesh.num_elements(), 2048);
        assert_eq!(mesh.num_vertices(), 33 * 33);
    }

    #[test]
    fn areas_sum_to_one_and_euler_relation() {
        for k in [1u32, 3, 8, 17, 64] {
            let mesh: Mesh<f64> = Mesh::uniform_triangles(n(k));
            let total: f64 = (0..mesh.num_elements())
                .map(|el| mesh.geometry(el).area)
                .sum();
            assert!((total - 1.0).abs() < 1e-13, "area sum at n={k}: {total}");
            let euler = mesh.num_vertices() as i64 - mesh.num_edges() as i64
                + mesh.num_elements() as i64;
            assert_eq!(euler, 1, "euler relation at n={k}");
        }
    }

    #[test]
    fn interior_normals_are_opposite() {
        let mesh: Mesh<f64> = Mesh::uniform_triangles(n(4));
        for (e, edge) in mesh.edges().iter().enumerate() {
            let Some(el2) = edge.elements.1 else { continue };
            let el1 = edge.elements.0;
            let le1 = mesh.element_edge_ids(el1).iter().position(|&x| x == e).unwrap();
            let le2 = mesh.element_edge_ids(el2).iter().position(|&x| x == e).unwrap();
            let n1 = mesh.outward_normal(el1, le1);
            let n2 = mesh.outward_normal(el2, le2);
            assert!((n1 + n2).norm() < 1e-14);
        }
    }

    #[test]
    fn generated_meshes_validate_clean() {
        let mesh: Mesh<f64> = Mesh::uniform_triangles(n(4));
        assert!(mesh.validate().is_empty());
    }

    #[test]
    fn h_t_is_max_vertex_distance() {
        let mesh: Mesh<f64> = Mesh::uniform_triangles(n(3));
        for el in 0..mesh.num_elements() {
            let poly = mesh.element(el);
            let mut expected: f64 = 0.0;
            for i in 0..poly.len() {
                for j in i + 1..poly.len() {
                    expected = expected.max((mesh.vertex(poly[i]) - mesh.vertex(poly[j])).norm());
                }
            }
            assert!((mesh.geometry(el).diameter - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn wgmesh_roundtrip_matches_generator() {
        let text = "wgmesh 2d\n4 2\n0 0\n1 0\n1 1\n0 1\n3 0 1 2\n3 0 2 3\n";
        let loaded: Mesh<f64> = parse_wgmesh(text).unwrap();
        let generated: Mesh<f64> = Mesh::uniform_triangles(n(1));
        assert_eq!(loaded.num_elements(), generated.num_elements());
        assert_eq!(loaded.num_edges(), generated.num_edges());
        for v in 0..4 {
            assert!((loaded.vertex(v) - generated.vertex(v)).norm() < 1e-15);
        }
        assert!(loaded.validate().is_empty());
    }

    #[test]
    fn wgmesh_comments_and_whitespace() {
        let text = "# a comment\nwgmesh 2d\n4 2 # counts\n0 0\n1 0\n1 1\n0 1\n\n3 0 1 2\n3 0 2 3\n";
        let mesh: Mesh<f64> = parse_wgmesh(text).unwrap();
        assert_eq!(mesh.num_vertices(), 4);
    }

    #[test]
    fn wgmesh_quad_partition() {
        // 2x2 mesh of unit-square quarters: 4 quadrilaterals, 12 edges.
        let text = "wgmesh 2d\n9 4\n\
            0 0\n0.5 0\n1 0\n0 0.5\n0.5 0.5\n1 0.5\n0 1\n0.5 1\n1 1\n\
            4 0 1 4 3\n4 1 2 5 4\n4 3 4 7 6\n4 4 5 8 7\n";
        let mesh: Mesh<f64> = parse_wgmesh(text).unwrap();
        assert_eq!(mesh.num_elements(), 4);
        assert_eq!(mesh.num_edges(), 12);
        assert!(mesh.validate().is_empty());
        let total: f64 = (0..4).map(|el| mesh.geometry(el).area).sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn clockwise_polygon_is_rejected_with_element_id() {
        let text = "wgmesh 2d\n4 2\n0 0\n1 0\n1 1\n0 1\n3 0 2 1\n3 0 2 3\n";
        match parse_wgmesh::<f64>(text) {
            Err(WgError::Topology { element, .. }) => assert_eq!(element, 0),
            other => panic!("expected topology error, got {other:?}"),
        }
    }

    #[test]
    fn parse_error_carries_line_number() {
        let text = "wgmesh 2d\n4 2\n0 0\n1 zzz\n1 1\n0 1\n3 0 1 2\n3 0 2 3\n";
        match parse_wgmesh::<f64>(text) {
            Err(WgError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn validate_flags_degenerate_polygon() {
        let good: Mesh<f64> = Mesh::uniform_triangles(n(1));
        let mut bad = good.clone();
        bad.elements[0] = vec![0, 1, 1];
        let report = bad.validate();
        assert!(report
            .iter()
            .any(|v| v.entity == "element 0" && v.invariant.contains("degenerate")));
    }

    #[test]
    fn validate_flags_inward_normal() {
        let good: Mesh<f64> = Mesh::uniform_triangles(n(1));
        let mut bad = good.clone();
        bad.element_normals[0][0] = -bad.element_normals[0][0];
        let report = bad.validate();
        assert!(report
            .iter()
            .any(|v| v.invariant.contains("normal orientation")));
    }

    #[test]
    fn non_manifold_edge_is_rejected() {
        let vertices = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
            Point2::new(0.5, -1.0),
        ];
        let elements = vec![vec![0, 1, 2], vec![0, 2, 3], vec![0, 1, 2].clone()];
        match Mesh::new(vertices, elements) {
            Err(WgError::Topology { element, .. }) => assert_eq!(element, 2),
            other => panic!("expected topology error, got {other:?}"),
        }
    }

    #[test]
    fn mesh_works_in_f32() {
        let mesh: Mesh<f32> = Mesh::uniform_triangles(n(2));
        assert_eq!(mesh.num_elements(), 8);
        let total: f32 = (0..8).map(|el| mesh.geometry(el).area).sum();
        assert!((total - 1.0).abs() < 1e-5);
    }
}
