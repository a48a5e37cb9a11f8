//! The double graph Λ = Γ ⊔ Γ*.
//!
//! Γ joins black corners along surfel diagonals, Γ* joins white ones. Each
//! surfel (or abstract quad, once flips have been applied) owns exactly one
//! primal and one dual edge; edge `2q` is the primal diagonal `x → x'` of
//! quad `q` and edge `2q + 1` its dual diagonal `y → y'`. Faces of Λ are in
//! bijection with vertices: the face `v*` is bounded by the opposite
//! diagonals of the quads around `v`, traversed counterclockwise.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::surface::{Color, CornerId, SurfelId, SurfelSurface};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VertexKey {
    Corner(CornerId),
    /// Vertex introduced by a flip; it has no lattice position.
    Virtual(u32),
}

impl fmt::Display for VertexKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexKey::Corner(c) => write!(f, "{}:{}:{}", c.cx, c.cy, c.cz),
            VertexKey::Virtual(i) => write!(f, "#{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QuadKey {
    Surfel(SurfelId),
    Virtual(u32),
}

impl fmt::Display for QuadKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuadKey::Surfel(s) => write!(
                f,
                "{}:{}:{}:{}",
                s.voxel.x, s.voxel.y, s.voxel.z, s.face
            ),
            QuadKey::Virtual(i) => write!(f, "#{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Vertex {
    pub key: VertexKey,
    pub color: Color,
}

/// A quad of ◊ with its oriented cycle `(x, y, x', y')`, `x` and `x'` black.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Quad {
    pub key: QuadKey,
    pub cycle: [usize; 4],
}

impl Quad {
    /// The cycle rotated so that it starts at `v`: `(v, a, o, b)` where `o` is
    /// opposite to `v` and the sector at `v` runs counterclockwise from `a` to `b`.
    pub fn rotated_at(&self, v: usize) -> Option<[usize; 4]> {
        let k = self.cycle.iter().position(|&c| c == v)?;
        Some([0, 1, 2, 3].map(|i| self.cycle[(k + i) % 4]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Primal,
    Dual,
}

/// Quads around a vertex in counterclockwise order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fan {
    pub quads: Vec<usize>,
    /// False for vertices on the surface boundary.
    pub closed: bool,
}

/// Λ with its duality maps. Immutable once built; flips produce a new graph.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleGraph {
    vertices: Vec<Vertex>,
    quads: Vec<Quad>,
    fans: Vec<Fan>,
    next_virtual: u32,
}

pub fn build_double_graph(surface: &SurfelSurface) -> Result<DoubleGraph> {
    let vertices = surface
        .corners()
        .iter()
        .map(|&c| Vertex {
            key: VertexKey::Corner(c),
            color: c.color(),
        })
        .collect();
    let quads = surface
        .surfels()
        .iter()
        .zip(surface.cycles())
        .map(|(&s, &cycle)| Quad {
            key: QuadKey::Surfel(s),
            cycle,
        })
        .collect();
    DoubleGraph::from_parts(vertices, quads, 0)
}

impl DoubleGraph {
    /// Assembles a double graph from vertices and oriented quads. Quads must
    /// alternate colors black, white, black, white along their cycle.
    pub fn from_parts(vertices: Vec<Vertex>, quads: Vec<Quad>, next_virtual: u32) -> Result<Self> {
        for q in &quads {
            let colors = q.cycle.map(|v| vertices.get(v).map(|x| x.color));
            if colors
                != [
                    Some(Color::Black),
                    Some(Color::White),
                    Some(Color::Black),
                    Some(Color::White),
                ]
            {
                return Err(Error::InvalidConfiguration(format!(
                    "quad {} does not alternate black/white",
                    q.key
                )));
            }
        }
        let fans = compute_fans(&vertices, &quads)?;
        Ok(Self {
            vertices,
            quads,
            fans,
            next_virtual,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn quad_count(&self) -> usize {
        self.quads.len()
    }

    pub fn edge_count(&self) -> usize {
        2 * self.quads.len()
    }

    /// Λ₂ is indexed by the vertex it is dual to.
    pub fn face_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Vertex {
        self.vertices[v]
    }

    pub fn quads(&self) -> &[Quad] {
        &self.quads
    }

    pub fn quad(&self, q: usize) -> &Quad {
        &self.quads[q]
    }

    pub fn fan(&self, v: usize) -> &Fan {
        &self.fans[v]
    }

    pub(crate) fn next_virtual(&self) -> u32 {
        self.next_virtual
    }

    pub fn vertex_index(&self, key: VertexKey) -> Option<usize> {
        // corners are stored sorted; virtual vertices are rare
        if let VertexKey::Corner(_) = key {
            if let Ok(i) = self
                .vertices
                .binary_search_by(|v| v.key.cmp(&key))
            {
                return Some(i);
            }
        }
        self.vertices.iter().position(|v| v.key == key)
    }

    pub fn edge_kind(e: usize) -> EdgeKind {
        if e % 2 == 0 {
            EdgeKind::Primal
        } else {
            EdgeKind::Dual
        }
    }

    pub fn edge_quad(e: usize) -> usize {
        e / 2
    }

    /// Involution pairing the two diagonals of a quad.
    pub fn dual_edge(e: usize) -> usize {
        e ^ 1
    }

    pub fn primal_edge(q: usize) -> usize {
        2 * q
    }

    pub fn dual_edge_of_quad(q: usize) -> usize {
        2 * q + 1
    }

    /// `(tail, head)` of edge `e` in its stored orientation.
    pub fn edge_ends(&self, e: usize) -> (usize, usize) {
        let c = self.quads[e / 2].cycle;
        match Self::edge_kind(e) {
            EdgeKind::Primal => (c[0], c[2]),
            EdgeKind::Dual => (c[1], c[3]),
        }
    }

    pub fn edge_color(&self, e: usize) -> Color {
        match Self::edge_kind(e) {
            EdgeKind::Primal => Color::Black,
            EdgeKind::Dual => Color::White,
        }
    }

    /// Oriented boundary of the face `v*` as `(edge, ±1)` in fan order.
    pub fn face_boundary(&self, v: usize) -> Vec<(usize, f64)> {
        self.fans[v]
            .quads
            .iter()
            .map(|&q| {
                let [_, a, _, _] = self.quads[q].rotated_at(v).unwrap();
                let e = if self.vertices[v].color == Color::Black {
                    Self::dual_edge_of_quad(q)
                } else {
                    Self::primal_edge(q)
                };
                let sign = if self.edge_ends(e).0 == a { 1.0 } else { -1.0 };
                (e, sign)
            })
            .collect()
    }

    pub fn is_face_closed(&self, v: usize) -> bool {
        self.fans[v].closed
    }

    pub fn is_closed(&self) -> bool {
        self.fans.iter().all(|f| f.closed)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.fans[v].quads.len()
    }

    pub fn count_color(&self, color: Color) -> usize {
        self.vertices.iter().filter(|v| v.color == color).count()
    }

    /// Sizes of the k-cell sets of Γ (k = 0, 1, 2): black vertices, primal
    /// edges, faces dual to white vertices.
    pub fn gamma_cells(&self) -> [usize; 3] {
        [
            self.count_color(Color::Black),
            self.quads.len(),
            self.count_color(Color::White),
        ]
    }

    /// Sizes of the k-cell sets of Γ*.
    pub fn gamma_star_cells(&self) -> [usize; 3] {
        [
            self.count_color(Color::White),
            self.quads.len(),
            self.count_color(Color::Black),
        ]
    }

    /// Euler characteristic of the quad complex: V − E + F over ◊.
    pub fn euler_characteristic(&self) -> i64 {
        let mut edgels = std::collections::HashSet::new();
        for q in &self.quads {
            for k in 0..4 {
                let (a, b) = (q.cycle[k], q.cycle[(k + 1) % 4]);
                edgels.insert((a.min(b), a.max(b)));
            }
        }
        self.vertices.len() as i64 - edgels.len() as i64 + self.quads.len() as i64
    }

    /// Connected components of Γ (black) and Γ* (white) as vertex lists.
    pub fn color_components(&self) -> Vec<Vec<usize>> {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for e in 0..self.edge_count() {
            let (a, b) = self.edge_ends(e);
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for v in 0..n {
            let r = find(&mut parent, v);
            groups.entry(r).or_default().push(v);
        }
        groups.into_values().collect()
    }

    pub fn vertex_label(&self, v: usize) -> String {
        self.vertices[v].key.to_string()
    }

    pub fn edge_label(&self, e: usize) -> String {
        let tag = match Self::edge_kind(e) {
            EdgeKind::Primal => 'p',
            EdgeKind::Dual => 'd',
        };
        format!("{tag}:{}", self.quads[e / 2].key)
    }

    pub fn quad_label(&self, q: usize) -> String {
        format!("s:{}", self.quads[q].key)
    }

    /// Canonical key of the `index`-th k-cell of Λ, used in serialized
    /// cochains and operators: `v:…` for vertices, `p:…`/`d:…` for primal and
    /// dual edges, `f:…` for the face dual to a vertex.
    pub fn cell_key(&self, degree: usize, index: usize) -> String {
        match degree {
            0 => format!("v:{}", self.vertices[index].key),
            1 => self.edge_label(index),
            _ => format!("f:{}", self.vertices[index].key),
        }
    }

    /// Number of k-cells of Λ.
    pub fn cell_count(&self, degree: usize) -> usize {
        match degree {
            0 => self.vertex_count(),
            1 => self.edge_count(),
            _ => self.face_count(),
        }
    }

    /// Deterministic text listing of Γ, Γ* and the faces of Λ.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# double graph: {} vertices, {} edges, {} faces",
            self.vertex_count(),
            self.edge_count(),
            self.face_count()
        );
        for (title, color) in [("gamma", Color::Black), ("gamma*", Color::White)] {
            let _ = writeln!(out, "[{title}]");
            let mut adjacency: Vec<(String, Vec<String>)> = Vec::new();
            for v in 0..self.vertex_count() {
                if self.vertices[v].color != color {
                    continue;
                }
                let mut nbrs: Vec<String> = self.fans[v]
                    .quads
                    .iter()
                    .map(|&q| {
                        let [_, _, o, _] = self.quads[q].rotated_at(v).unwrap();
                        self.vertex_label(o)
                    })
                    .collect();
                nbrs.sort();
                adjacency.push((self.vertex_label(v), nbrs));
            }
            adjacency.sort();
            for (v, nbrs) in adjacency {
                let _ = writeln!(out, "{v} -> {}", nbrs.join(" "));
            }
        }
        let _ = writeln!(out, "[faces]");
        let mut faces: Vec<String> = (0..self.face_count())
            .map(|v| {
                let cycle: Vec<String> = self
                    .face_boundary(v)
                    .iter()
                    .map(|&(e, s)| format!("{}{}", if s > 0.0 { '+' } else { '-' }, self.edge_label(e)))
                    .collect();
                let tag = if self.fans[v].closed { "" } else { " (open)" };
                format!("{}*{tag}: {}", self.vertex_label(v), cycle.join(" "))
            })
            .collect();
        faces.sort();
        for f in faces {
            let _ = writeln!(out, "{f}");
        }
        out
    }
}

fn compute_fans(vertices: &[Vertex], quads: &[Quad]) -> Result<Vec<Fan>> {
    let mut around: Vec<Vec<usize>> = vec![Vec::new(); vertices.len()];
    for (q, quad) in quads.iter().enumerate() {
        for &v in &quad.cycle {
            around[v].push(q);
        }
    }
    let mut fans = Vec::with_capacity(vertices.len());
    for (v, incident) in around.iter().enumerate() {
        if incident.is_empty() {
            return Err(Error::InvalidConfiguration(format!(
                "vertex {} has no incident quad",
                vertices[v].key
            )));
        }
        // sector (a -> b) for each incident quad
        let sectors: Vec<(usize, usize, usize)> = incident
            .iter()
            .map(|&q| {
                let [_, a, _, b] = quads[q].rotated_at(v).unwrap();
                (a, b, q)
            })
            .collect();
        let by_start: HashMap<usize, usize> =
            sectors.iter().enumerate().map(|(i, s)| (s.0, i)).collect();
        let ends: std::collections::HashSet<usize> = sectors.iter().map(|s| s.1).collect();
        let open_start = sectors.iter().position(|s| !ends.contains(&s.0));
        let start = open_start.unwrap_or_else(|| {
            // closed fan: start at the smallest quad index for determinism
            (0..sectors.len()).min_by_key(|&i| sectors[i].2).unwrap()
        });
        let mut order = Vec::with_capacity(sectors.len());
        let mut i = start;
        let mut closed = false;
        loop {
            order.push(sectors[i].2);
            match by_start.get(&sectors[i].1) {
                Some(&j) if j == start => {
                    closed = true;
                    break;
                }
                Some(&j) if order.len() < sectors.len() => i = j,
                _ => break,
            }
        }
        if order.len() != sectors.len() {
            return Err(Error::NonManifoldVertex {
                corner: vertices[v].key.to_string(),
                fans: crate::surface::count_fans(
                    &sectors.iter().map(|s| (s.0, s.1)).collect::<Vec<_>>(),
                ),
            });
        }
        fans.push(Fan {
            quads: order,
            closed: closed && open_start.is_none(),
        });
    }
    Ok(fans)
}

/// A formal complex combination of k-cells of Λ.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub degree: usize,
    pub coeffs: Vec<Complex64>,
}

impl Chain {
    pub fn zero(graph: &DoubleGraph, degree: usize) -> Self {
        let n = graph.cell_count(degree);
        Self {
            degree,
            coeffs: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn cell(graph: &DoubleGraph, degree: usize, index: usize) -> Self {
        let mut c = Self::zero(graph, degree);
        c.coeffs[index] = Complex64::new(1.0, 0.0);
        c
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm() == 0.0)
    }
}

/// The boundary operator ∂ on 1- and 2-chains.
pub fn boundary(graph: &DoubleGraph, chain: &Chain) -> Result<Chain> {
    match chain.degree {
        1 => {
            let mut out = Chain::zero(graph, 0);
            for (e, &c) in chain.coeffs.iter().enumerate() {
                if c != Complex64::new(0.0, 0.0) {
                    let (t, h) = graph.edge_ends(e);
                    out.coeffs[h] += c;
                    out.coeffs[t] -= c;
                }
            }
            Ok(out)
        }
        2 => {
            let mut out = Chain::zero(graph, 1);
            for (v, &c) in chain.coeffs.iter().enumerate() {
                if c != Complex64::new(0.0, 0.0) {
                    for (e, s) in graph.face_boundary(v) {
                        out.coeffs[e] += c * s;
                    }
                }
            }
            Ok(out)
        }
        degree => Err(Error::DimensionError {
            op: "boundary",
            degree,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{extract_surface, VoxelCoord};

    fn cube() -> DoubleGraph {
        let s = extract_surface([VoxelCoord::new(0, 0, 0)]).unwrap();
        build_double_graph(&s).unwrap()
    }

    #[test]
    fn cube_gamma_is_complete_graph_on_four_vertices() {
        let g = cube();
        assert_eq!(g.gamma_cells(), [4, 6, 4]);
        assert_eq!(g.gamma_star_cells(), [4, 6, 4]);
        for v in 0..g.vertex_count() {
            assert_eq!(g.degree(v), 3);
            let mut nbrs: Vec<usize> = g
                .fan(v)
                .quads
                .iter()
                .map(|&q| g.quad(q).rotated_at(v).unwrap()[2])
                .collect();
            nbrs.sort();
            nbrs.dedup();
            assert_eq!(nbrs.len(), 3, "three distinct diagonal neighbours");
        }
        assert!(g.is_closed());
        assert_eq!(g.euler_characteristic(), 2);
    }

    #[test]
    fn dual_edge_is_a_fixed_point_free_involution() {
        let g = cube();
        for e in 0..g.edge_count() {
            let d = DoubleGraph::dual_edge(e);
            assert_ne!(d, e);
            assert_eq!(DoubleGraph::dual_edge(d), e);
            assert_ne!(DoubleGraph::edge_kind(d), DoubleGraph::edge_kind(e));
            assert_eq!(DoubleGraph::edge_quad(d), DoubleGraph::edge_quad(e));
        }
    }

    #[test]
    fn boundary_of_edge_and_boundary_squared() {
        let g = cube();
        let (t, h) = g.edge_ends(0);
        let b = boundary(&g, &Chain::cell(&g, 1, 0)).unwrap();
        assert_eq!(b.coeffs[h], Complex64::new(1.0, 0.0));
        assert_eq!(b.coeffs[t], Complex64::new(-1.0, 0.0));
        for v in 0..g.face_count() {
            let bb = boundary(&g, &boundary(&g, &Chain::cell(&g, 2, v)).unwrap()).unwrap();
            assert!(bb.is_zero());
        }
        let all = Chain {
            degree: 2,
            coeffs: vec![Complex64::new(1.0, 0.0); g.face_count()],
        };
        assert!(boundary(&g, &all).unwrap().is_zero());
        assert!(matches!(
            boundary(&g, &Chain::cell(&g, 0, 0)),
            Err(Error::DimensionError { .. })
        ));
    }

    #[test]
    fn degree_matches_dual_face_length() {
        let s = extract_surface([
            VoxelCoord::new(0, 0, 0),
            VoxelCoord::new(1, 0, 0),
            VoxelCoord::new(1, 1, 0),
        ])
        .unwrap();
        let g = build_double_graph(&s).unwrap();
        for v in 0..g.vertex_count() {
            assert_eq!(g.degree(v), g.face_boundary(v).len());
        }
    }

    #[test]
    fn dump_is_deterministic() {
        let a = cube().dump();
        let b = cube().dump();
        assert_eq!(a, b);
        assert!(a.starts_with("# double graph: 8 vertices, 12 edges, 8 faces"));
        assert!(a.contains("[gamma*]"));
    }
}
