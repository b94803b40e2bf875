//! Polygonal meshes: topology, geometry, generators, JSON I/O and the
//! star-shapedness / edge-ratio quality audit.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VemError};
use crate::quad::{is_simple, signed_area};

/// An edge with global orientation `v[0] → v[1]`, `v[0] < v[1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub v: [usize; 2],
    pub cells: Vec<usize>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.cells.len() == 1
    }
}

/// Edge of a cell as seen from the cell: local edge `i` joins local vertices
/// `i` and `i + 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellEdge {
    pub edge: usize,
    /// `+1` when the global orientation agrees with the counterclockwise
    /// traversal of the cell, i.e. the global normal is the outward normal.
    pub sign: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CellMetrics {
    pub area: f64,
    pub centroid: [f64; 2],
    pub diameter: f64,
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Domain {
    pub const UNIT_SQUARE: Domain = Domain {
        min: [0.0, 0.0],
        max: [1.0, 1.0],
    };

    pub fn area(&self) -> f64 {
        (self.max[0] - self.min[0]) * (self.max[1] - self.min[1])
    }
}

#[derive(Clone, Debug)]
pub struct PolygonalMesh {
    vertices: Vec<[f64; 2]>,
    cells: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    cell_edges: Vec<Vec<CellEdge>>,
    boundary_vertex: Vec<bool>,
    metrics: Vec<CellMetrics>,
    vertex_scale: Vec<f64>,
}

pub(crate) fn diameter(poly: &[[f64; 2]]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in poly.iter().enumerate() {
        for b in &poly[i + 1..] {
            d = d.max(dist(*a, *b));
        }
    }
    d
}

pub(crate) fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

pub(crate) fn polygon_metrics(poly: &[[f64; 2]]) -> CellMetrics {
    let area = signed_area(poly);
    let n = poly.len();
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        let c = p[0] * q[1] - q[0] * p[1];
        cx += (p[0] + q[0]) * c;
        cy += (p[1] + q[1]) * c;
    }
    CellMetrics {
        area,
        centroid: [cx / (6.0 * area), cy / (6.0 * area)],
        diameter: diameter(poly),
    }
}

impl PolygonalMesh {
    /// Builds and validates a mesh from vertex coordinates and CCW cells.
    pub fn new(vertices: Vec<[f64; 2]>, cells: Vec<Vec<usize>>) -> Result<Self> {
        if cells.is_empty() {
            return Err(VemError::InvalidMesh("mesh has no cells".into()));
        }
        for (c, cell) in cells.iter().enumerate() {
            if cell.len() < 3 {
                return Err(VemError::InvalidCell {
                    cell: c,
                    reason: format!("{} vertices, need at least 3", cell.len()),
                });
            }
            if let Some(&bad) = cell.iter().find(|&&v| v >= vertices.len()) {
                return Err(VemError::InvalidCell {
                    cell: c,
                    reason: format!("vertex index {bad} out of range ({} vertices)", vertices.len()),
                });
            }
            for i in 0..cell.len() {
                if cell[i] == cell[(i + 1) % cell.len()] {
                    return Err(VemError::InvalidCell {
                        cell: c,
                        reason: format!("repeated consecutive vertex {}", cell[i]),
                    });
                }
            }
            let poly: Vec<[f64; 2]> = cell.iter().map(|&v| vertices[v]).collect();
            if !is_simple(&poly) {
                return Err(VemError::InvalidCell {
                    cell: c,
                    reason: "polygon is not simple".into(),
                });
            }
            if signed_area(&poly) <= 0.0 {
                return Err(VemError::InvalidCell {
                    cell: c,
                    reason: "clockwise or degenerate orientation".into(),
                });
            }
        }

        let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut cell_edges = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            let mut local = Vec::with_capacity(cell.len());
            for i in 0..cell.len() {
                let (a, b) = (cell[i], cell[(i + 1) % cell.len()]);
                let key = (a.min(b), a.max(b));
                let id = *edge_ids.entry(key).or_insert_with(|| {
                    edges.push(Edge {
                        v: [key.0, key.1],
                        cells: Vec::new(),
                    });
                    edges.len() - 1
                });
                edges[id].cells.push(c);
                local.push(CellEdge {
                    edge: id,
                    sign: if a < b { 1.0 } else { -1.0 },
                });
            }
            cell_edges.push(local);
        }
        for (e, edge) in edges.iter().enumerate() {
            if edge.cells.len() > 2 {
                return Err(VemError::InvalidMesh(format!(
                    "edge {e} ({}-{}) shared by {} cells",
                    edge.v[0],
                    edge.v[1],
                    edge.cells.len()
                )));
            }
            if edge.cells.len() == 2 {
                let (c0, c1) = (edge.cells[0], edge.cells[1]);
                let s0 = cell_edges[c0].iter().find(|ce| ce.edge == e).unwrap().sign;
                let s1 = cell_edges[c1].iter().find(|ce| ce.edge == e).unwrap().sign;
                if s0 == s1 {
                    return Err(VemError::InvalidMesh(format!(
                        "cells {c0} and {c1} traverse edge {e} in the same direction"
                    )));
                }
            }
        }

        let mut boundary_vertex = vec![false; vertices.len()];
        for edge in edges.iter().filter(|e| e.is_boundary()) {
            boundary_vertex[edge.v[0]] = true;
            boundary_vertex[edge.v[1]] = true;
        }

        let metrics: Vec<CellMetrics> = cells
            .iter()
            .map(|cell| {
                let poly: Vec<[f64; 2]> = cell.iter().map(|&v| vertices[v]).collect();
                polygon_metrics(&poly)
            })
            .collect();

        let mut sum = vec![0.0; vertices.len()];
        let mut count = vec![0usize; vertices.len()];
        for (c, cell) in cells.iter().enumerate() {
            for &v in cell {
                sum[v] += metrics[c].diameter;
                count[v] += 1;
            }
        }
        let vertex_scale = sum
            .iter()
            .zip(&count)
            .map(|(s, &n)| if n > 0 { s / n as f64 } else { 0.0 })
            .collect();

        Ok(Self {
            vertices,
            cells,
            edges,
            cell_edges,
            boundary_vertex,
            metrics,
            vertex_scale,
        })
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn cell_edges(&self, cell: usize) -> &[CellEdge] {
        &self.cell_edges[cell]
    }

    pub fn cell_polygon(&self, cell: usize) -> Vec<[f64; 2]> {
        self.cells[cell].iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn metrics(&self, cell: usize) -> &CellMetrics {
        &self.metrics[cell]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    /// `h_v`: mean diameter of the cells sharing vertex `v`.
    pub fn vertex_scale(&self, v: usize) -> f64 {
        self.vertex_scale[v]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e].v;
        dist(self.vertices[a], self.vertices[b])
    }

    /// Mesh size `h = max h_P`.
    pub fn h(&self) -> f64 {
        self.metrics.iter().fold(0.0, |m, c| m.max(c.diameter))
    }

    pub fn total_area(&self) -> f64 {
        self.metrics.iter().map(|c| c.area).sum()
    }

    /// Cells whose vertex list is rotated by `shift` positions (orientation and
    /// geometry are unchanged).
    pub fn with_rotated_cell(&self, cell: usize, shift: usize) -> Result<Self> {
        let mut cells = self.cells.clone();
        let len = cells[cell].len();
        cells[cell].rotate_left(shift % len);
        Self::new(self.vertices.clone(), cells)
    }

    pub fn to_json(&self) -> String {
        // keys in the documented order: vertices, then cells
        let mut s = String::from("{\"vertices\":[");
        for (i, v) in self.vertices.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&format!("[{:?},{:?}]", v[0], v[1]));
        }
        s.push_str("],\"cells\":[");
        for (i, c) in self.cells.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let ids: Vec<String> = c.iter().map(|v| v.to_string()).collect();
            s.push('[');
            s.push_str(&ids.join(","));
            s.push(']');
        }
        s.push_str("]}\n");
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct MeshFile {
            vertices: Vec<[f64; 2]>,
            cells: Vec<Vec<usize>>,
        }
        let file: MeshFile =
            serde_json::from_str(text).map_err(|e| VemError::Parse(e.to_string()))?;
        Self::new(file.vertices, file.cells)
    }
}

pub fn save_mesh(mesh: &PolygonalMesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, mesh.to_json())?;
    Ok(())
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<PolygonalMesh> {
    let text = std::fs::read_to_string(path)?;
    PolygonalMesh::from_json(&text)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeshKind {
    SquareGrid,
    TriangleGrid,
    PerturbedGrid,
    HexDominant,
}

impl MeshKind {
    pub fn name(self) -> &'static str {
        match self {
            MeshKind::SquareGrid => "square-grid",
            MeshKind::TriangleGrid => "triangle-grid",
            MeshKind::PerturbedGrid => "perturbed-grid",
            MeshKind::HexDominant => "hex-dominant",
        }
    }
}

impl fmt::Display for MeshKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MeshKind {
    type Err = VemError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "square-grid" => Ok(MeshKind::SquareGrid),
            "triangle-grid" => Ok(MeshKind::TriangleGrid),
            "perturbed-grid" => Ok(MeshKind::PerturbedGrid),
            "hex-dominant" => Ok(MeshKind::HexDominant),
            other => Err(VemError::Config(format!("unknown mesh kind '{other}'"))),
        }
    }
}

pub const DEFAULT_SEED: u64 = 20180515;

/// Builds one of the structured meshes on `domain` with `n` subdivisions per
/// side. `seed` only affects `perturbed-grid`.
pub fn generate_mesh(kind: MeshKind, n: usize, domain: Domain, seed: u64) -> Result<PolygonalMesh> {
    if n == 0 {
        return Err(VemError::Config("subdivision count must be at least 1".into()));
    }
    let (w, h) = (domain.max[0] - domain.min[0], domain.max[1] - domain.min[1]);
    if !(w > 0.0 && h > 0.0) {
        return Err(VemError::Config("degenerate domain".into()));
    }
    match kind {
        MeshKind::SquareGrid => square_grid(n, domain, false),
        MeshKind::TriangleGrid => square_grid(n, domain, true),
        MeshKind::PerturbedGrid => {
            let mesh = square_grid(n, domain, false)?;
            perturb_interior(&mesh, 0.2 * (w / n as f64).min(h / n as f64), seed)
        }
        MeshKind::HexDominant => hex_dominant(n, domain),
    }
}

fn grid_vertex(domain: Domain, n: usize, i: usize, j: usize) -> [f64; 2] {
    let (w, h) = (domain.max[0] - domain.min[0], domain.max[1] - domain.min[1]);
    // pin the far side exactly so the covered area is the domain
    let x = if i == n { domain.max[0] } else { domain.min[0] + w * i as f64 / n as f64 };
    let y = if j == n { domain.max[1] } else { domain.min[1] + h * j as f64 / n as f64 };
    [x, y]
}

fn square_grid(n: usize, domain: Domain, split: bool) -> Result<PolygonalMesh> {
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(grid_vertex(domain, n, i, j));
        }
    }
    let mut cells = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if split {
                cells.push(vec![a, b, c]);
                cells.push(vec![a, c, d]);
            } else {
                cells.push(vec![a, b, c, d]);
            }
        }
    }
    PolygonalMesh::new(vertices, cells)
}

/// Moves every interior vertex by a uniformly random offset in
/// `[-amplitude, amplitude]²` drawn from a seeded ChaCha stream.
pub fn perturb_interior(mesh: &PolygonalMesh, amplitude: f64, seed: u64) -> Result<PolygonalMesh> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vertices = mesh.vertices.clone();
    for (v, x) in vertices.iter_mut().enumerate() {
        let dx: f64 = rng.random_range(-1.0..=1.0);
        let dy: f64 = rng.random_range(-1.0..=1.0);
        if !mesh.boundary_vertex[v] {
            x[0] += amplitude * dx;
            x[1] += amplitude * dy;
        }
    }
    PolygonalMesh::new(vertices, mesh.cells.clone())
}

/// Staggered "brick" layout: odd rows are shifted by half a brick, and every
/// interior T-junction is pushed along its wall so that interior bricks become
/// convex hexagons. Rows ends are closed by pentagons/quadrilaterals.
fn hex_dominant(n: usize, domain: Domain) -> Result<PolygonalMesh> {
    let (w, h) = (domain.max[0] - domain.min[0], domain.max[1] - domain.min[1]);
    let cols = 2 * n; // half-brick columns
    let dy = h / n as f64;
    let delta = 0.15 * dy;
    let id = |i: usize, j: usize| j * (cols + 1) + i;
    let mut vertices = Vec::with_capacity((cols + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=cols {
            let x = if i == cols { domain.max[0] } else { domain.min[0] + w * i as f64 / cols as f64 };
            let mut y = if j == n { domain.max[1] } else { domain.min[1] + h * j as f64 / n as f64 };
            let interior = i > 0 && i < cols && j > 0 && j < n;
            if interior {
                // brick walls of row j sit on columns with parity of j; a wall
                // above (row j) pushes the junction up, a wall below pushes down
                let wall_above = i % 2 == j % 2;
                y += if wall_above { delta } else { -delta };
            }
            vertices.push([x, y]);
        }
    }
    let mut cells = Vec::new();
    for j in 0..n {
        let mut starts: Vec<usize> = (0..cols).filter(|i| i % 2 == j % 2).collect();
        if starts.first() != Some(&0) {
            starts.insert(0, 0);
        }
        starts.push(cols);
        for win in starts.windows(2) {
            let (i0, i1) = (win[0], win[1]);
            let mut cell = Vec::new();
            for i in i0..=i1 {
                cell.push(id(i, j));
            }
            for i in (i0..=i1).rev() {
                cell.push(id(i, j + 1));
            }
            cells.push(cell);
        }
    }
    PolygonalMesh::new(vertices, cells)
}

/// Per-cell regularity figures.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellQuality {
    /// `max_e h_e / h_P`.
    pub edge_ratio: f64,
    /// Radius of the largest disc inside the polygon kernel, over `h_P`.
    pub ball_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeshQualityReport {
    pub cells: Vec<CellQuality>,
    pub max_edge_ratio: f64,
    pub min_ball_ratio: f64,
    /// Estimated regularity constant: the smallest ball ratio over all cells.
    pub gamma: f64,
    pub threshold: f64,
    pub flagged: Vec<usize>,
}

/// Smallest signed distance from `c` to the edge lines of a CCW polygon
/// (positive inside every half-plane).
fn kernel_clearance(poly: &[[f64; 2]], c: [f64; 2]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            let len = dist(a, b);
            ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])) / len
        })
        .fold(f64::INFINITY, f64::min)
}

/// Estimates the kernel inradius by sampling candidate centers around the
/// centroid on a grid, then refining with a shrinking pattern search.
pub fn kernel_inradius(poly: &[[f64; 2]]) -> f64 {
    let m = polygon_metrics(poly);
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in poly {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let mut best = m.centroid;
    let mut best_r = kernel_clearance(poly, best);
    let samples = 24;
    for a in 0..=samples {
        for b in 0..=samples {
            let c = [
                lo[0] + (hi[0] - lo[0]) * a as f64 / samples as f64,
                lo[1] + (hi[1] - lo[1]) * b as f64 / samples as f64,
            ];
            let r = kernel_clearance(poly, c);
            if r > best_r {
                best_r = r;
                best = c;
            }
        }
    }
    let mut step = (hi[0] - lo[0]).max(hi[1] - lo[1]) / samples as f64;
    while step > 1e-12 * m.diameter {
        let mut improved = false;
        for d in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0], [1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]] {
            let c = [best[0] + step * d[0], best[1] + step * d[1]];
            let r = kernel_clearance(poly, c);
            if r > best_r {
                best_r = r;
                best = c;
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best_r.max(0.0)
}

pub fn cell_quality(poly: &[[f64; 2]]) -> CellQuality {
    let hp = diameter(poly);
    let n = poly.len();
    let he = (0..n).map(|i| dist(poly[i], poly[(i + 1) % n])).fold(0.0, f64::max);
    CellQuality {
        edge_ratio: he / hp,
        ball_ratio: kernel_inradius(poly) / hp,
    }
}

/// Regularity audit; cells whose ball ratio falls below `threshold` are flagged.
pub fn audit_quality(mesh: &PolygonalMesh, threshold: f64) -> MeshQualityReport {
    let cells: Vec<CellQuality> = (0..mesh.num_cells())
        .map(|c| cell_quality(&mesh.cell_polygon(c)))
        .collect();
    let max_edge_ratio = cells.iter().map(|q| q.edge_ratio).fold(0.0, f64::max);
    let min_ball_ratio = cells.iter().map(|q| q.ball_ratio).fold(f64::INFINITY, f64::min);
    let flagged = cells
        .iter()
        .enumerate()
        .filter(|(_, q)| q.ball_ratio < threshold)
        .map(|(i, _)| i)
        .collect();
    MeshQualityReport {
        cells,
        max_edge_ratio,
        min_ball_ratio,
        gamma: min_ball_ratio,
        threshold,
        flagged,
    }
}
