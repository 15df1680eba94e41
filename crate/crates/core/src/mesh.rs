//! Unstructured triangular meshes with cached geometry and piecewise-linear
//! bathymetry.
//!
//! Cells are stored counter-clockwise. Local edge `k` of a cell joins its
//! vertices `k` and `k + 1 (mod 3)`; all per-edge cell arrays (`lengths`,
//! `inward_normals`, `offsets`, `b_mid`) use that local index.
//!
//! Every global [`Edge`] has an owning `left` cell and a unit `normal`
//! pointing out of it. The inward normal stored on the owner is the exact
//! negation of `normal`, and the neighbour's inward normal is bitwise equal
//! to `normal`, so fluxes and hydrostatic terms cancel without rounding.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Wall,
    Outflow,
}

impl FromStr for BoundaryTag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "wall" => Ok(BoundaryTag::Wall),
            "outflow" => Ok(BoundaryTag::Outflow),
            other => Err(format!("unknown boundary tag '{other}' (expected wall|outflow)")),
        }
    }
}

impl std::fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BoundaryTag::Wall => "wall",
            BoundaryTag::Outflow => "outflow",
        })
    }
}

/// Side of the mesh bounding box, used to tag boundary edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
    All,
}

impl FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            "bottom" => Ok(Side::Bottom),
            "top" => Ok(Side::Top),
            "all" => Ok(Side::All),
            other => Err(format!(
                "unknown side '{other}' (expected left|right|bottom|top|all)"
            )),
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Bottom => "bottom",
            Side::Top => "top",
            Side::All => "all",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    pub x: f64,
    pub y: f64,
    /// Bottom elevation [m].
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighbor {
    Cell(usize),
    Boundary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Endpoints in the owning cell's counter-clockwise order.
    pub vertices: [usize; 2],
    pub left: usize,
    /// Local edge index inside `left`.
    pub left_slot: usize,
    /// Neighbouring cell and its local edge index, `None` on the boundary.
    pub right: Option<(usize, usize)>,
    /// Boundary condition; always `Some` for boundary edges.
    pub tag: Option<BoundaryTag>,
    pub length: f64,
    pub midpoint: Point,
    /// Unit normal pointing out of `left`.
    pub normal: Point,
    /// Bottom elevation at the midpoint, mean of the endpoint values.
    pub b_mid: f64,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.right.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub vertices: [usize; 3],
    pub edges: [usize; 3],
    pub neighbors: [Neighbor; 3],
    pub area: f64,
    pub centroid: Point,
    pub lengths: [f64; 3],
    pub inward_normals: [Point; 3],
    /// Edge midpoint minus centroid, `P_jk - G_j`.
    pub offsets: [Point; 3],
    pub b_mid: [f64; 3],
    /// Bottom at the centroid, mean of the three midpoint values.
    pub b_center: f64,
    /// Gradient of the bottom plane through the three vertices.
    pub b_grad: Point,
    /// `2 |E| / perimeter`.
    pub inradius: f64,
}

impl Cell {
    pub fn perimeter(&self) -> f64 {
        self.lengths[0] + self.lengths[1] + self.lengths[2]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    pub cells: Vec<Cell>,
}

impl Mesh {
    /// Builds a mesh from vertices and triangles, reorienting clockwise
    /// triangles and computing every geometry cache. All boundary edges are
    /// tagged [`BoundaryTag::Wall`].
    pub fn from_triangles(vertices: Vec<Vertex>, triangles: &[[usize; 3]]) -> Result<Mesh> {
        if triangles.is_empty() {
            return Err(Error::Mesh("mesh has no cells".into()));
        }
        for (i, v) in vertices.iter().enumerate() {
            if !(v.x.is_finite() && v.y.is_finite() && v.b.is_finite()) {
                return Err(Error::Mesh(format!("vertex {i} has non-finite data")));
            }
        }

        let mut oriented = Vec::with_capacity(triangles.len());
        for (id, tri) in triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::Mesh(format!(
                    "cell {id} references vertex {bad}, but only {} vertices exist",
                    vertices.len()
                )));
            }
            let [a, b, c] = tri.map(|v| vertices[v]);
            let twice_area = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
            let tri = if twice_area < 0.0 { [tri[0], tri[2], tri[1]] } else { *tri };
            if twice_area == 0.0 || tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::Mesh(format!(
                    "cell {id} is degenerate (vertices {} {} {}, zero area)",
                    tri[0], tri[1], tri[2]
                )));
            }
            oriented.push(tri);
        }

        let mut edges: Vec<Edge> = Vec::with_capacity(oriented.len() * 3 / 2 + 2);
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::with_capacity(oriented.len() * 2);
        let mut cells = Vec::with_capacity(oriented.len());

        for (id, tri) in oriented.iter().enumerate() {
            let mut cell_edges = [0usize; 3];
            let mut neighbors = [Neighbor::Boundary; 3];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                match lookup.get(&key) {
                    None => {
                        lookup.insert(key, edges.len());
                        cell_edges[k] = edges.len();
                        let (pa, pb) = (vertices[a], vertices[b]);
                        let (dx, dy) = (pb.x - pa.x, pb.y - pa.y);
                        let length = (dx * dx + dy * dy).sqrt();
                        edges.push(Edge {
                            vertices: [a, b],
                            left: id,
                            left_slot: k,
                            right: None,
                            tag: Some(BoundaryTag::Wall),
                            length,
                            midpoint: [0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y)],
                            normal: [dy / length, -dx / length],
                            b_mid: 0.5 * (pa.b + pb.b),
                        });
                    }
                    Some(&e) => {
                        let edge = &mut edges[e];
                        if edge.right.is_some() {
                            return Err(Error::Mesh(format!(
                                "edge {a}-{b} is shared by more than two cells (cell {id})"
                            )));
                        }
                        if edge.vertices != [b, a] {
                            return Err(Error::Mesh(format!(
                                "cell {id} overlaps cell {} across edge {a}-{b}",
                                edge.left
                            )));
                        }
                        edge.right = Some((id, k));
                        edge.tag = None;
                        cell_edges[k] = e;
                        neighbors[k] = Neighbor::Cell(edge.left);
                        cells_set_neighbor(&mut cells, edge.left, edge.left_slot, id);
                    }
                }
            }
            cells.push(Cell {
                vertices: *tri,
                edges: cell_edges,
                neighbors,
                area: 0.0,
                centroid: [0.0; 2],
                lengths: [0.0; 3],
                inward_normals: [[0.0; 2]; 3],
                offsets: [[0.0; 2]; 3],
                b_mid: [0.0; 3],
                b_center: 0.0,
                b_grad: [0.0; 2],
                inradius: 0.0,
            });
        }

        let mut mesh = Mesh {
            vertices,
            edges,
            cells,
        };
        mesh.update_geometry()?;
        Ok(mesh)
    }

    fn update_geometry(&mut self) -> Result<()> {
        for (id, cell) in self.cells.iter_mut().enumerate() {
            let [a, b, c] = cell.vertices.map(|v| self.vertices[v]);
            let twice_area = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
            if !(twice_area > 0.0) {
                return Err(Error::Mesh(format!("cell {id} has non-positive area")));
            }
            cell.area = 0.5 * twice_area;
            cell.centroid = [(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0];
            let pts = [a, b, c];
            for k in 0..3 {
                let (pa, pb) = (pts[k], pts[(k + 1) % 3]);
                let (dx, dy) = (pb.x - pa.x, pb.y - pa.y);
                let length = (dx * dx + dy * dy).sqrt();
                cell.lengths[k] = length;
                cell.inward_normals[k] = [-dy / length, dx / length];
                let mid = [0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y)];
                cell.offsets[k] = [mid[0] - cell.centroid[0], mid[1] - cell.centroid[1]];
                cell.b_mid[k] = 0.5 * (pa.b + pb.b);
            }
            cell.b_center = (cell.b_mid[0] + cell.b_mid[1] + cell.b_mid[2]) / 3.0;
            cell.b_grad = [
                ((b.b - a.b) * (c.y - a.y) - (c.b - a.b) * (b.y - a.y)) / twice_area,
                ((c.b - a.b) * (b.x - a.x) - (b.b - a.b) * (c.x - a.x)) / twice_area,
            ];
            cell.inradius = twice_area / cell.perimeter();
        }
        for edge in &mut self.edges {
            let (pa, pb) = (self.vertices[edge.vertices[0]], self.vertices[edge.vertices[1]]);
            edge.b_mid = 0.5 * (pa.b + pb.b);
            let inward = self.cells[edge.left].inward_normals[edge.left_slot];
            edge.normal = [-inward[0], -inward[1]];
            edge.length = self.cells[edge.left].lengths[edge.left_slot];
        }
        Ok(())
    }

    /// Resamples the vertex bottom elevations and refreshes the bathymetry
    /// caches.
    pub fn set_bottom(&mut self, bottom: impl Fn(f64, f64) -> f64) -> Result<()> {
        for (i, v) in self.vertices.iter_mut().enumerate() {
            v.b = bottom(v.x, v.y);
            if !v.b.is_finite() {
                return Err(Error::Mesh(format!(
                    "bottom is not finite at vertex {i} ({}, {})",
                    v.x, v.y
                )));
            }
        }
        self.update_geometry()
    }

    /// Sets one bottom elevation per vertex and refreshes the caches.
    pub fn set_vertex_bottom(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.vertices.len() {
            return Err(Error::Mesh(format!("{} bottom values for {} vertices", values.len(), self.vertices.len())));
        }
        for (i, (v, &b)) in self.vertices.iter_mut().zip(values).enumerate() {
            if !b.is_finite() {
                return Err(Error::Mesh(format!("bottom is not finite at vertex {i}")));
            }
            v.b = b;
        }
        self.update_geometry()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn total_area(&self) -> f64 {
        self.cells.iter().map(|c| c.area).sum()
    }

    /// `(min_x, min_y, max_x, max_y)` of the vertices.
    pub fn bounding_box(&self) -> [f64; 4] {
        self.vertices.iter().fold(
            [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY],
            |bb, v| [bb[0].min(v.x), bb[1].min(v.y), bb[2].max(v.x), bb[3].max(v.y)],
        )
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = (usize, &Edge)> {
        self.edges.iter().enumerate().filter(|(_, e)| e.is_boundary())
    }

    pub fn set_boundary_tag(&mut self, edge: usize, tag: BoundaryTag) -> Result<()> {
        let e = self
            .edges
            .get_mut(edge)
            .ok_or_else(|| Error::Mesh(format!("edge {edge} does not exist")))?;
        if !e.is_boundary() {
            return Err(Error::Mesh(format!("edge {edge} is not a boundary edge")));
        }
        e.tag = Some(tag);
        Ok(())
    }

    /// Tags every boundary edge lying on one side of the bounding box.
    /// Returns how many edges were tagged.
    pub fn tag_side(&mut self, side: Side, tag: BoundaryTag) -> usize {
        let bb = self.bounding_box();
        let tol = 1e-9 * (bb[2] - bb[0]).max(bb[3] - bb[1]);
        let verts = &self.vertices;
        let on_side = |e: &Edge| {
            let (a, b) = (verts[e.vertices[0]], verts[e.vertices[1]]);
            let both = |f: &dyn Fn(&Vertex) -> bool| f(&a) && f(&b);
            match side {
                Side::Left => both(&|v| (v.x - bb[0]).abs() <= tol),
                Side::Right => both(&|v| (v.x - bb[2]).abs() <= tol),
                Side::Bottom => both(&|v| (v.y - bb[1]).abs() <= tol),
                Side::Top => both(&|v| (v.y - bb[3]).abs() <= tol),
                Side::All => true,
            }
        };
        let mut count = 0;
        for e in self.edges.iter_mut().filter(|e| e.is_boundary()) {
            if on_side(e) {
                e.tag = Some(tag);
                count += 1;
            }
        }
        count
    }

    /// Tags the boundary edge joining two vertices.
    pub fn tag_edge_by_vertices(&mut self, a: usize, b: usize, tag: BoundaryTag) -> Result<()> {
        let idx = self
            .edges
            .iter()
            .position(|e| e.vertices == [a, b] || e.vertices == [b, a])
            .ok_or_else(|| Error::Mesh(format!("no edge joins vertices {a} and {b}")))?;
        self.set_boundary_tag(idx, tag)
    }

    /// Bottom elevation at the three edge midpoints of a cell.
    pub fn bottom_at_midpoints(&self, cell: usize) -> [f64; 3] {
        self.cells[cell].b_mid
    }

    pub fn to_node_text(&self) -> String {
        let mut s = format!("{} 2\n", self.vertices.len());
        for (i, v) in self.vertices.iter().enumerate() {
            let _ = writeln!(s, "{i} {} {} {}", v.x, v.y, v.b);
        }
        s
    }

    pub fn to_ele_text(&self) -> String {
        let mut s = format!("{} 3\n", self.cells.len());
        for (i, c) in self.cells.iter().enumerate() {
            let _ = writeln!(s, "{i} {} {} {}", c.vertices[0], c.vertices[1], c.vertices[2]);
        }
        s
    }

    /// Boundary tag table, one `vertex_a vertex_b TAG` line per boundary edge.
    pub fn to_boundary_text(&self) -> String {
        let mut s = String::new();
        for (_, e) in self.boundary_edges() {
            let tag = e.tag.unwrap_or(BoundaryTag::Wall);
            let _ = writeln!(s, "{} {} {}", e.vertices[0], e.vertices[1], tag.to_string().to_uppercase());
        }
        s
    }
}

fn cells_set_neighbor(cells: &mut [Cell], cell: usize, slot: usize, neighbor: usize) {
    cells[cell].neighbors[slot] = Neighbor::Cell(neighbor);
}

/// How the rectangles of [`generate_rect_mesh_with`] are split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Diagonal {
    /// Every rectangle split from its lower-left to its upper-right corner.
    /// Neighbouring centroids are then symmetric about the shared edge
    /// midpoint, so Green-Gauss gradients with averaged interface values are
    /// exact for linear fields.
    #[default]
    Uniform,
    /// Diagonal direction alternating in a checkerboard.
    Alternating,
}

/// Structured triangulation of `[0, lx] × [0, ly]` into `nx × ny`
/// rectangles, each split along its lower-left to upper-right diagonal.
pub fn generate_rect_mesh(
    lx: f64,
    ly: f64,
    nx: usize,
    ny: usize,
    bottom: impl Fn(f64, f64) -> f64,
) -> Result<Mesh> {
    generate_rect_mesh_with(lx, ly, nx, ny, Diagonal::Uniform, bottom)
}

pub fn generate_rect_mesh_with(
    lx: f64,
    ly: f64,
    nx: usize,
    ny: usize,
    diagonal: Diagonal,
    bottom: impl Fn(f64, f64) -> f64,
) -> Result<Mesh> {
    if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
        return Err(Error::config("domain", format!("dimensions must be positive, got {lx} x {ly}")));
    }
    if nx == 0 || ny == 0 {
        return Err(Error::config("nx/ny", format!("cell counts must be at least 1, got {nx} x {ny}")));
    }
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let x = lx * i as f64 / nx as f64;
            let y = ly * j as f64 / ny as f64;
            vertices.push(Vertex { x, y, b: bottom(x, y) });
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (v00, v10, v01, v11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            if diagonal == Diagonal::Uniform || (i + j) % 2 == 0 {
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            } else {
                triangles.push([v00, v10, v01]);
                triangles.push([v10, v11, v01]);
            }
        }
    }
    Mesh::from_triangles(vertices, &triangles)
}

fn data_lines<'a>(text: &'a str) -> impl Iterator<Item = (usize, Vec<&'a str>)> + 'a {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.split('#').next().unwrap_or("");
        let fields: Vec<&str> = line.split_whitespace().collect();
        (!fields.is_empty()).then_some((i + 1, fields))
    })
}

fn parse_field<T: FromStr>(name: &str, line: usize, token: &str, what: &str) -> Result<T> {
    token
        .parse()
        .map_err(|_| Error::parse(name, line, format!("invalid {what} '{token}'")))
}

fn parse_header<'a>(name: &str, rows: &mut impl Iterator<Item = (usize, Vec<&'a str>)>, width: usize) -> Result<(usize, usize)> {
    let (line, fields) = rows
        .next()
        .ok_or_else(|| Error::parse(name, 1, "missing header line"))?;
    if fields.len() != 2 {
        return Err(Error::parse(name, line, format!("header must be `<count> {width}`")));
    }
    let count: usize = parse_field(name, line, fields[0], "count")?;
    let w: usize = parse_field(name, line, fields[1], "column count")?;
    if w != width {
        return Err(Error::parse(name, line, format!("expected `{width}` in header, found {w}")));
    }
    Ok((line, count))
}

/// Parses a node table (`N 2` header, then `id x y b`).
pub fn parse_nodes(text: &str) -> Result<Vec<Vertex>> {
    const NAME: &str = "node table";
    let mut rows = data_lines(text);
    let (header_line, count) = parse_header(NAME, &mut rows, 2)?;
    let mut vertices = Vec::with_capacity(count);
    for (line, fields) in rows {
        if fields.len() != 4 {
            return Err(Error::parse(NAME, line, "expected `id x y b`"));
        }
        let id: usize = parse_field(NAME, line, fields[0], "vertex id")?;
        if id != vertices.len() {
            return Err(Error::parse(NAME, line, format!("expected vertex id {}, found {id}", vertices.len())));
        }
        let x = parse_field(NAME, line, fields[1], "x")?;
        let y = parse_field(NAME, line, fields[2], "y")?;
        let b = parse_field(NAME, line, fields[3], "b")?;
        vertices.push(Vertex { x, y, b });
    }
    if vertices.len() != count {
        return Err(Error::parse(NAME, header_line, format!("header declares {count} vertices, found {}", vertices.len())));
    }
    Ok(vertices)
}

/// Parses a triangle table (`M 3` header, then `id v0 v1 v2`), checking
/// vertex indices against `num_vertices`.
pub fn parse_elements(text: &str, num_vertices: usize) -> Result<Vec<[usize; 3]>> {
    const NAME: &str = "element table";
    let mut rows = data_lines(text);
    let (header_line, count) = parse_header(NAME, &mut rows, 3)?;
    let mut triangles = Vec::with_capacity(count);
    for (line, fields) in rows {
        if fields.len() != 4 {
            return Err(Error::parse(NAME, line, "expected `id v0 v1 v2`"));
        }
        let id: usize = parse_field(NAME, line, fields[0], "cell id")?;
        if id != triangles.len() {
            return Err(Error::parse(NAME, line, format!("expected cell id {}, found {id}", triangles.len())));
        }
        let mut tri = [0usize; 3];
        for k in 0..3 {
            tri[k] = parse_field(NAME, line, fields[k + 1], "vertex index")?;
            if tri[k] >= num_vertices {
                return Err(Error::parse(
                    NAME,
                    line,
                    format!("vertex index {} out of range (have {num_vertices} vertices)", tri[k]),
                ));
            }
        }
        triangles.push(tri);
    }
    if triangles.len() != count {
        return Err(Error::parse(NAME, header_line, format!("header declares {count} cells, found {}", triangles.len())));
    }
    Ok(triangles)
}

/// Loads a mesh from node and element tables. `b_values`, when given,
/// replaces the bottom column of the node table.
pub fn load_mesh(node_text: &str, ele_text: &str, b_values: Option<&[f64]>) -> Result<Mesh> {
    let mut vertices = parse_nodes(node_text)?;
    if let Some(b) = b_values {
        if b.len() != vertices.len() {
            return Err(Error::Mesh(format!(
                "{} bottom values given for {} vertices",
                b.len(),
                vertices.len()
            )));
        }
        for (v, &b) in vertices.iter_mut().zip(b) {
            v.b = b;
        }
    }
    let triangles = parse_elements(ele_text, vertices.len())?;
    Mesh::from_triangles(vertices, &triangles)
}

/// Applies a boundary tag table (`vertex_a vertex_b TAG` per line).
pub fn apply_boundary_tags(mesh: &mut Mesh, text: &str) -> Result<()> {
    const NAME: &str = "boundary table";
    for (line, fields) in data_lines(text) {
        if fields.len() != 3 {
            return Err(Error::parse(NAME, line, "expected `vertex_a vertex_b TAG`"));
        }
        let a: usize = parse_field(NAME, line, fields[0], "vertex index")?;
        let b: usize = parse_field(NAME, line, fields[1], "vertex index")?;
        let tag: BoundaryTag = fields[2].parse().map_err(|e: String| Error::parse(NAME, line, e))?;
        mesh.tag_edge_by_vertices(a, b, tag)
            .map_err(|e| Error::parse(NAME, line, e.to_string()))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> (String, String) {
        (
            "4 2\n0 0 0 0\n1 1 0 0\n2 1 1 0\n3 0 1 0\n".to_string(),
            "2 3\n0 0 1 2\n1 0 2 3\n".to_string(),
        )
    }

    #[test]
    fn two_cell_rectangle() {
        let mesh = generate_rect_mesh(2.0, 1.0, 1, 1, |_, _| 0.0).unwrap();
        assert_eq!(mesh.num_cells(), 2);
        for c in &mesh.cells {
            assert_eq!(c.area, 1.0);
        }
        assert_eq!(mesh.total_area(), 2.0);
    }

    #[test]
    fn conservation_domain_cell_area() {
        let mesh = generate_rect_mesh(2.0, 1.0, 56, 28, |_, _| 0.0).unwrap();
        assert_eq!(mesh.num_cells(), 3136);
        let mean = mesh.total_area() / mesh.num_cells() as f64;
        assert!((mean - 6.3776e-4).abs() < 1e-7);
        assert!((mean - 6.3735e-4).abs() / 6.3735e-4 < 0.01);
    }

    #[test]
    fn basin_vertex_origin() {
        let basin = |x: f64, y: f64| {
            use std::f64::consts::PI;
            0.01 * y + 0.01 * (x - 0.5).abs() - 0.01 * (PI * x / 2.0).sin() - 0.01 * (PI * y / 2.0).sin() + 1.0
        };
        let mesh = generate_rect_mesh(10.0, 8.0, 20, 16, basin).unwrap();
        assert_eq!(mesh.vertices[0].x, 0.0);
        assert_eq!(mesh.vertices[0].y, 0.0);
        assert!((mesh.vertices[0].b - 1.005).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(matches!(generate_rect_mesh(0.0, 1.0, 1, 1, |_, _| 0.0), Err(Error::Config { .. })));
        assert!(matches!(generate_rect_mesh(1.0, -1.0, 1, 1, |_, _| 0.0), Err(Error::Config { .. })));
        assert!(matches!(generate_rect_mesh(1.0, 1.0, 0, 1, |_, _| 0.0), Err(Error::Config { .. })));
    }

    #[test]
    fn load_unit_square() {
        let (n, e) = unit_square();
        let mesh = load_mesh(&n, &e, None).unwrap();
        assert_eq!(mesh.num_cells(), 2);
        assert_eq!(mesh.edges.len(), 5);
        assert_eq!(mesh.boundary_edges().count(), 4);
        assert!(mesh.boundary_edges().all(|(_, e)| e.tag == Some(BoundaryTag::Wall)));
    }

    #[test]
    fn load_reorients_clockwise() {
        let n = "3 2\n0 0 0 0\n1 1 0 0\n2 0 1 0\n";
        let mesh = load_mesh(n, "1 3\n0 0 2 1\n", None).unwrap();
        assert_eq!(mesh.cells[0].vertices, [0, 1, 2]);
        assert!(mesh.cells[0].area > 0.0);
    }

    #[test]
    fn degenerate_triangle_named() {
        let (n, _) = unit_square();
        let err = load_mesh(&n, "1 3\n0 0 1 1\n", None).unwrap_err();
        assert!(matches!(err, Error::Mesh(ref m) if m.contains("cell 0") && m.contains("degenerate")), "{err}");
        let err = load_mesh("3 2\n0 0 0 0\n1 1 1 0\n2 2 2 0\n", "1 3\n0 0 1 2\n", None).unwrap_err();
        assert!(matches!(err, Error::Mesh(ref m) if m.contains("cell 0")), "{err}");
    }

    #[test]
    fn dangling_index_reports_line() {
        let (n, _) = unit_square();
        let err = load_mesh(&n, "2 3\n0 0 1 2\n1 0 2 7\n", None).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn overlapping_cells_rejected() {
        let n = "4 2\n0 0 0 0\n1 1 0 0\n2 0 1 0\n3 0.2 0.2 0\n";
        // both triangles own edge 0-1 in the same direction
        let err = load_mesh(n, "2 3\n0 0 1 2\n1 0 1 3\n", None).unwrap_err();
        assert!(matches!(err, Error::Mesh(_)));
    }

    #[test]
    fn reload_is_bitwise_equal() {
        let mesh = generate_rect_mesh(2.0, 1.0, 4, 2, |x, y| 0.3 * x - 0.1 * y * y + 0.7).unwrap();
        let again = load_mesh(&mesh.to_node_text(), &mesh.to_ele_text(), None).unwrap();
        assert_eq!(mesh, again);
    }

    #[test]
    fn midpoint_values() {
        let n = "3 2\n0 0 0 1\n1 1 0 3\n2 0 1 5\n";
        let mesh = load_mesh(n, "1 3\n0 0 1 2\n", None).unwrap();
        assert_eq!(mesh.bottom_at_midpoints(0), [2.0, 4.0, 3.0]);
        let n = "3 2\n0 0 0 0.25\n1 1 0 0.25\n2 0 1 0.25\n";
        let mesh = load_mesh(n, "1 3\n0 0 1 2\n", None).unwrap();
        assert_eq!(mesh.bottom_at_midpoints(0), [0.25; 3]);
    }

    #[test]
    fn side_tagging() {
        let mut mesh = generate_rect_mesh(3.0, 2.0, 3, 2, |_, _| 0.0).unwrap();
        assert_eq!(mesh.tag_side(Side::Right, BoundaryTag::Outflow), 2);
        assert_eq!(mesh.tag_side(Side::Bottom, BoundaryTag::Outflow), 3);
        let outflow = mesh.boundary_edges().filter(|(_, e)| e.tag == Some(BoundaryTag::Outflow)).count();
        assert_eq!(outflow, 5);
        let text = mesh.to_boundary_text();
        let mut other = generate_rect_mesh(3.0, 2.0, 3, 2, |_, _| 0.0).unwrap();
        apply_boundary_tags(&mut other, &text).unwrap();
        assert_eq!(mesh, other);
    }

    #[test]
    fn interior_tag_rejected() {
        let mut mesh = generate_rect_mesh(1.0, 1.0, 1, 1, |_, _| 0.0).unwrap();
        let interior = mesh.edges.iter().position(|e| !e.is_boundary()).unwrap();
        assert!(mesh.set_boundary_tag(interior, BoundaryTag::Outflow).is_err());
    }
}
