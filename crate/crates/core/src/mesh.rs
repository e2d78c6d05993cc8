//! Tetrahedral meshes: loading, derived connectivity and a structured unit
//! ball generator.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::warn;
use nalgebra::Vector3;

use crate::error::MeshError;

/// Vertex connectivity used by the smoother.
pub trait VertexGraph {
    fn vertex_count(&self) -> usize;
    fn neighbors(&self, v: usize) -> &[usize];
    /// Each undirected edge once, as `[lo, hi]`.
    fn edges(&self) -> &[[usize; 2]];
}

/// Plain undirected graph, for fields that do not come from a mesh.
#[derive(Debug, Clone)]
pub struct Graph {
    edges: Vec<[usize; 2]>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Duplicate edges and self loops are dropped.
    pub fn new(vertex_count: usize, edges: impl IntoIterator<Item = [usize; 2]>) -> Result<Self, MeshError> {
        let mut list = Vec::new();
        for [a, b] in edges {
            if a >= vertex_count || b >= vertex_count {
                return Err(MeshError::Topology(format!(
                    "edge ({a}, {b}) references a vertex outside 0..{vertex_count}"
                )));
            }
            if a != b {
                list.push([a.min(b), a.max(b)]);
            }
        }
        list.sort_unstable();
        list.dedup();
        let adjacency = adjacency_from_edges(vertex_count, &list);
        Ok(Self { edges: list, adjacency })
    }

    /// `0 – 1 – … – (n−1)`.
    pub fn path(n: usize) -> Self {
        Self::new(n, (1..n).map(|i| [i - 1, i])).expect("indices in range")
    }
}

impl VertexGraph for Graph {
    fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }
    fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }
    fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }
}

fn adjacency_from_edges(n: usize, edges: &[[usize; 2]]) -> Vec<Vec<usize>> {
    let mut adjacency = vec![Vec::new(); n];
    for &[a, b] in edges {
        adjacency[a].push(b);
        adjacency[b].push(a);
    }
    for list in &mut adjacency {
        list.sort_unstable();
    }
    adjacency
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryTriangle {
    pub vertices: [usize; 3],
    /// Outward unit normal.
    pub normal: Vector3<f64>,
    pub area: f64,
}

#[derive(Debug, Clone)]
pub struct TetMesh {
    vertices: Vec<Vector3<f64>>,
    tets: Vec<[usize; 4]>,
    edges: Vec<[usize; 2]>,
    boundary: Vec<BoundaryTriangle>,
    adjacency: Vec<Vec<usize>>,
}

impl TetMesh {
    /// Build a mesh and its derived data. Faces shared by more than two
    /// tetrahedra, out-of-range indices and zero-area boundary faces are
    /// rejected.
    pub fn new(vertices: Vec<Vector3<f64>>, tets: Vec<[usize; 4]>) -> Result<Self, MeshError> {
        let n = vertices.len();
        for (t, tet) in tets.iter().enumerate() {
            if let Some(&bad) = tet.iter().find(|&&i| i >= n) {
                return Err(MeshError::Topology(format!(
                    "tetrahedron {t} references vertex {bad} but the mesh has {n} vertices"
                )));
            }
            for i in 0..4 {
                for j in i + 1..4 {
                    if tet[i] == tet[j] {
                        return Err(MeshError::Topology(format!(
                            "tetrahedron {t} repeats vertex {}",
                            tet[i]
                        )));
                    }
                }
            }
        }

        let mut edges: Vec<[usize; 2]> = Vec::with_capacity(tets.len() * 6);
        for tet in &tets {
            for i in 0..4 {
                for j in i + 1..4 {
                    edges.push([tet[i].min(tet[j]), tet[i].max(tet[j])]);
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();

        // Sorted face key -> (owner count, first owning tet, opposite vertex)
        let mut faces: HashMap<[usize; 3], (u32, usize, usize)> = HashMap::with_capacity(tets.len() * 2);
        for (t, tet) in tets.iter().enumerate() {
            for skip in 0..4 {
                let mut key = [0usize; 3];
                let mut k = 0;
                for (i, &v) in tet.iter().enumerate() {
                    if i != skip {
                        key[k] = v;
                        k += 1;
                    }
                }
                key.sort_unstable();
                let entry = faces.entry(key).or_insert((0, t, tet[skip]));
                entry.0 += 1;
                if entry.0 > 2 {
                    return Err(MeshError::Topology(format!(
                        "face {key:?} is shared by more than two tetrahedra"
                    )));
                }
            }
        }

        let mut boundary = Vec::new();
        let mut keys: Vec<_> = faces.into_iter().filter(|(_, (count, _, _))| *count == 1).collect();
        keys.sort_unstable_by_key(|(key, _)| *key);
        for (key, (_, t, _)) in keys {
            let [a, b, c] = key.map(|i| vertices[i]);
            let cross = (b - a).cross(&(c - a));
            let norm = cross.norm();
            if norm <= f64::EPSILON * (b - a).norm() * (c - a).norm() || norm == 0.0 {
                return Err(MeshError::Topology(format!("boundary face {key:?} has zero area")));
            }
            let mut normal = cross / norm;
            let mut tri = key;
            let face_centroid = (a + b + c) / 3.0;
            let tet_centroid = tets[t].iter().map(|&i| vertices[i]).sum::<Vector3<f64>>() / 4.0;
            if normal.dot(&(face_centroid - tet_centroid)) < 0.0 {
                normal = -normal;
                tri.swap(1, 2);
            }
            boundary.push(BoundaryTriangle {
                vertices: tri,
                normal,
                area: 0.5 * norm,
            });
        }

        let adjacency = adjacency_from_edges(n, &edges);
        Ok(Self {
            vertices,
            tets,
            edges,
            boundary,
            adjacency,
        })
    }

    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn boundary_triangles(&self) -> &[BoundaryTriangle] {
        &self.boundary
    }

    pub fn vertex_adjacency(&self) -> &[Vec<usize>] {
        &self.adjacency
    }

    /// Vertices touched by at least one boundary triangle.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut on = vec![false; self.vertices.len()];
        for tri in &self.boundary {
            for &v in &tri.vertices {
                on[v] = true;
            }
        }
        on
    }

    /// Area-weighted sum of incident boundary normals, unnormalized. Zero
    /// for interior vertices.
    pub fn weighted_vertex_normals(&self) -> Vec<Vector3<f64>> {
        let mut normals = vec![Vector3::zeros(); self.vertices.len()];
        for tri in &self.boundary {
            for &v in &tri.vertices {
                normals[v] += tri.normal * tri.area;
            }
        }
        normals
    }
}

impl VertexGraph for TetMesh {
    fn vertex_count(&self) -> usize {
        self.vertices.len()
    }
    fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }
    fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    /// Gmsh MSH 2.2 ASCII.
    Msh,
    /// `nv nt`, then `nv` coordinate lines, then `nt` lines of 0-based indices.
    SimpleTet,
}

impl MeshFormat {
    /// `.msh` selects Gmsh, anything else the simple format.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("msh") => MeshFormat::Msh,
            _ => MeshFormat::SimpleTet,
        }
    }
}

pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<TetMesh, MeshError> {
    let text = std::fs::read_to_string(path).map_err(|source| MeshError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    match format {
        MeshFormat::Msh => parse_msh(&text, path),
        MeshFormat::SimpleTet => parse_simple_tet(&text, path),
    }
}

/// A token and its 1-based column.
type Token<'a> = (usize, &'a str);
/// A line number and its tokens.
type Line<'a> = (usize, Vec<Token<'a>>);

/// Whitespace tokens with 1-based line and column.
struct Tokens<'a> {
    path: PathBuf,
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    current: Vec<Token<'a>>,
    line: usize,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str, path: &Path) -> Self {
        Self {
            path: path.to_path_buf(),
            lines: text.lines().enumerate().peekable(),
            current: Vec::new(),
            line: 0,
            pos: 0,
        }
    }

    fn error(&self, line: usize, column: usize, message: impl Into<String>) -> MeshError {
        MeshError::Parse {
            path: self.path.clone(),
            line,
            column,
            message: message.into(),
        }
    }

    /// Advance to the next non-blank line and return all of its tokens.
    fn next_line(&mut self) -> Option<Line<'a>> {
        for (i, line) in self.lines.by_ref() {
            let toks = split_columns(line);
            if !toks.is_empty() {
                self.line = i + 1;
                self.current = Vec::new();
                self.pos = 0;
                return Some((i + 1, toks));
            }
        }
        None
    }

    fn expect_line(&mut self, what: &str) -> Result<Line<'a>, MeshError> {
        let last = self.line;
        self.next_line()
            .ok_or_else(|| self.error(last + 1, 1, format!("unexpected end of file, expected {what}")))
    }

    /// Token stream across lines, used by the simple format.
    fn next_token(&mut self) -> Option<(usize, usize, &'a str)> {
        while self.pos >= self.current.len() {
            let (line, toks) = self.next_line()?;
            self.line = line;
            self.current = toks;
        }
        let (col, tok) = self.current[self.pos];
        self.pos += 1;
        Some((self.line, col, tok))
    }
}

fn split_columns(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

fn parse_num<T: std::str::FromStr>(
    tokens: &Tokens<'_>,
    line: usize,
    (col, tok): (usize, &str),
    what: &str,
) -> Result<T, MeshError> {
    tok.parse()
        .map_err(|_| tokens.error(line, col, format!("invalid {what} '{tok}'")))
}

fn field<'a>(
    tokens: &Tokens<'_>,
    line: usize,
    toks: &[(usize, &'a str)],
    i: usize,
    what: &str,
) -> Result<(usize, &'a str), MeshError> {
    toks.get(i).copied().ok_or_else(|| {
        let col = toks.last().map(|(c, t)| c + t.len()).unwrap_or(1);
        tokens.error(line, col, format!("missing {what}"))
    })
}

fn simple_token<T: std::str::FromStr>(tokens: &mut Tokens<'_>, what: &str) -> Result<T, MeshError> {
    match tokens.next_token() {
        Some((l, c, t)) => t
            .parse()
            .map_err(|_| tokens.error(l, c, format!("invalid {what} '{t}'"))),
        None => Err(tokens.error(tokens.line + 1, 1, format!("unexpected end of file, expected {what}"))),
    }
}

pub fn parse_simple_tet(text: &str, path: &Path) -> Result<TetMesh, MeshError> {
    let mut tokens = Tokens::new(text, path);
    let nv = simple_token::<usize>(&mut tokens, "vertex count")?;
    let nt = simple_token::<usize>(&mut tokens, "tetrahedron count")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let x = simple_token::<f64>(&mut tokens, "coordinate")?;
        let y = simple_token::<f64>(&mut tokens, "coordinate")?;
        let z = simple_token::<f64>(&mut tokens, "coordinate")?;
        vertices.push(Vector3::new(x, y, z));
    }
    let mut tets = Vec::with_capacity(nt);
    for _ in 0..nt {
        let mut tet = [0usize; 4];
        for slot in &mut tet {
            *slot = simple_token::<usize>(&mut tokens, "vertex index")?;
        }
        tets.push(tet);
    }
    if let Some((l, c, t)) = tokens.next_token() {
        return Err(tokens.error(l, c, format!("unexpected trailing token '{t}'")));
    }
    TetMesh::new(vertices, tets)
}

pub fn parse_msh(text: &str, path: &Path) -> Result<TetMesh, MeshError> {
    let mut tokens = Tokens::new(text, path);
    let mut vertices: Vec<Vector3<f64>> = Vec::new();
    let mut tag_to_index: HashMap<i64, usize> = HashMap::new();
    let mut raw_tets: Vec<(usize, usize, [i64; 4])> = Vec::new();
    let mut skipped: HashMap<i64, usize> = HashMap::new();
    let mut seen_format = false;

    while let Some((line, toks)) = tokens.next_line() {
        let (col, head) = toks[0];
        match head {
            "$MeshFormat" => {
                let (l, t) = tokens.expect_line("mesh format")?;
                let version = field(&tokens, l, &t, 0, "version")?;
                if !version.1.starts_with("2.") {
                    return Err(tokens.error(l, version.0, format!("unsupported MSH version {}", version.1)));
                }
                let file_type = field(&tokens, l, &t, 1, "file type")?;
                if file_type.1 != "0" {
                    return Err(tokens.error(l, file_type.0, "only ASCII MSH files are supported"));
                }
                expect_end(&mut tokens, "$EndMeshFormat")?;
                seen_format = true;
            }
            "$Nodes" => {
                let (l, t) = tokens.expect_line("node count")?;
                let count: usize = parse_num(&tokens, l, field(&tokens, l, &t, 0, "node count")?, "node count")?;
                vertices.reserve(count);
                for _ in 0..count {
                    let (l, t) = tokens.expect_line("node")?;
                    let tag: i64 = parse_num(&tokens, l, field(&tokens, l, &t, 0, "node tag")?, "node tag")?;
                    let mut x = [0.0; 3];
                    for (k, c) in x.iter_mut().enumerate() {
                        *c = parse_num(&tokens, l, field(&tokens, l, &t, k + 1, "coordinate")?, "coordinate")?;
                    }
                    if tag_to_index.insert(tag, vertices.len()).is_some() {
                        return Err(tokens.error(l, t[0].0, format!("duplicate node tag {tag}")));
                    }
                    vertices.push(Vector3::from(x));
                }
                expect_end(&mut tokens, "$EndNodes")?;
            }
            "$Elements" => {
                let (l, t) = tokens.expect_line("element count")?;
                let count: usize = parse_num(&tokens, l, field(&tokens, l, &t, 0, "element count")?, "element count")?;
                for _ in 0..count {
                    let (l, t) = tokens.expect_line("element")?;
                    let kind: i64 = parse_num(&tokens, l, field(&tokens, l, &t, 1, "element type")?, "element type")?;
                    let ntags: usize = parse_num(&tokens, l, field(&tokens, l, &t, 2, "tag count")?, "tag count")?;
                    if kind != 4 {
                        *skipped.entry(kind).or_default() += 1;
                        continue;
                    }
                    let mut nodes = [0i64; 4];
                    for (k, node) in nodes.iter_mut().enumerate() {
                        let tok = field(&tokens, l, &t, 3 + ntags + k, "node reference")?;
                        *node = parse_num(&tokens, l, tok, "node reference")?;
                    }
                    if let Some(extra) = t.get(3 + ntags + 4) {
                        return Err(tokens.error(l, extra.0, "too many nodes for a tetrahedron"));
                    }
                    raw_tets.push((l, t[3 + ntags].0, nodes));
                }
                expect_end(&mut tokens, "$EndElements")?;
            }
            other if other.starts_with("$End") => {
                return Err(tokens.error(line, col, format!("unmatched section terminator {other}")));
            }
            other if other.starts_with('$') => {
                // Unknown section: skip to its terminator.
                let end = format!("$End{}", &other[1..]);
                loop {
                    let (_, t) = tokens.expect_line(&end)?;
                    if t[0].1 == end {
                        break;
                    }
                }
            }
            other => return Err(tokens.error(line, col, format!("unexpected token '{other}' outside a section"))),
        }
    }
    if !seen_format {
        return Err(tokens.error(1, 1, "missing $MeshFormat section"));
    }
    for (kind, count) in &skipped {
        warn!(
            "{}: skipped {count} elements of unsupported type {kind}",
            path.display()
        );
    }

    let mut tets = Vec::with_capacity(raw_tets.len());
    for (line, _, nodes) in raw_tets {
        let mut tet = [0usize; 4];
        for (slot, tag) in tet.iter_mut().zip(nodes) {
            *slot = *tag_to_index.get(&tag).ok_or_else(|| {
                MeshError::Topology(format!("element on line {line} references undefined node {tag}"))
            })?;
        }
        tets.push(tet);
    }
    TetMesh::new(vertices, tets)
}

fn expect_end(tokens: &mut Tokens<'_>, end: &str) -> Result<(), MeshError> {
    let (l, t) = tokens.expect_line(end)?;
    if t[0].1 != end {
        return Err(tokens.error(l, t[0].0, format!("expected {end}, found '{}'", t[0].1)));
    }
    Ok(())
}

pub fn write_msh(mesh: &TetMesh) -> String {
    let mut out = String::from("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n");
    let _ = writeln!(out, "{}", mesh.vertices.len());
    for (i, v) in mesh.vertices.iter().enumerate() {
        let _ = writeln!(out, "{} {:e} {:e} {:e}", i + 1, v.x, v.y, v.z);
    }
    let _ = writeln!(out, "$EndNodes\n$Elements\n{}", mesh.tets.len());
    for (i, t) in mesh.tets.iter().enumerate() {
        let _ = writeln!(
            out,
            "{} 4 2 0 1 {} {} {} {}",
            i + 1,
            t[0] + 1,
            t[1] + 1,
            t[2] + 1,
            t[3] + 1
        );
    }
    out.push_str("$EndElements\n");
    out
}

pub fn write_simple_tet(mesh: &TetMesh) -> String {
    let mut out = format!("{} {}\n", mesh.vertices.len(), mesh.tets.len());
    for v in &mesh.vertices {
        let _ = writeln!(out, "{:e} {:e} {:e}", v.x, v.y, v.z);
    }
    for t in &mesh.tets {
        let _ = writeln!(out, "{} {} {} {}", t[0], t[1], t[2], t[3]);
    }
    out
}

/// Unit ball from an `n × n × n` grid of cubes, each split into six
/// tetrahedra along its main diagonal, then mapped onto the ball by the
/// volume-smooth cube-to-sphere map. `6n³` tetrahedra, `(n+1)³` vertices.
pub fn unit_ball(n: usize) -> TetMesh {
    structured(n, cube_to_ball)
}

/// The cube `[−1, 1]³` split the same way as [`unit_ball`].
pub fn cube(n: usize) -> TetMesh {
    structured(n, |p| p)
}

fn structured(n: usize, map: impl Fn(Vector3<f64>) -> Vector3<f64>) -> TetMesh {
    assert!(n >= 1, "structured meshes need at least one cell per axis");
    let id = |i: usize, j: usize, k: usize| (i * (n + 1) + j) * (n + 1) + k;
    let mut vertices = Vec::with_capacity((n + 1).pow(3));
    for i in 0..=n {
        for j in 0..=n {
            for k in 0..=n {
                let c = |t: usize| -1.0 + 2.0 * t as f64 / n as f64;
                vertices.push(map(Vector3::new(c(i), c(j), c(k))));
            }
        }
    }

    const PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut tets = Vec::with_capacity(6 * n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for perm in PERMUTATIONS {
                    let mut p = [i, j, k];
                    let mut tet = [id(p[0], p[1], p[2]); 4];
                    for (step, &axis) in perm.iter().enumerate() {
                        p[axis] += 1;
                        tet[step + 1] = id(p[0], p[1], p[2]);
                    }
                    let [a, b, c, d] = tet.map(|v| vertices[v]);
                    if (b - a).cross(&(c - a)).dot(&(d - a)) < 0.0 {
                        tet.swap(2, 3);
                    }
                    tets.push(tet);
                }
            }
        }
    }
    TetMesh::new(vertices, tets).expect("structured mesh is valid")
}

fn cube_to_ball(p: Vector3<f64>) -> Vector3<f64> {
    let (x2, y2, z2) = (p.x * p.x, p.y * p.y, p.z * p.z);
    Vector3::new(
        p.x * (1.0 - y2 / 2.0 - z2 / 2.0 + y2 * z2 / 3.0).sqrt(),
        p.y * (1.0 - z2 / 2.0 - x2 / 2.0 + z2 * x2 / 3.0).sqrt(),
        p.z * (1.0 - x2 / 2.0 - y2 / 2.0 + x2 * y2 / 3.0).sqrt(),
    )
}
