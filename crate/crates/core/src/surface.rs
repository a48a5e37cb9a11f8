//! Surfel surfaces: the quad complex of corners, edgels and surfels bounding a
//! voxel set.
//!
//! A voxel `(x, y, z)` occupies the unit cube `[x, x+1] × [y, y+1] × [z, z+1]`,
//! so every corner lives on the integer lattice and the black/white coloring
//! of corners is the parity of the coordinate sum.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VoxelCoord {
    pub x: i64,
    pub y: i64,
    pub z: i64,
}

impl VoxelCoord {
    pub const fn new(x: i64, y: i64, z: i64) -> Self {
        Self { x, y, z }
    }

    fn offset(self, axis: Axis, delta: i64) -> Self {
        let mut c = [self.x, self.y, self.z];
        c[axis.index()] += delta;
        Self::new(c[0], c[1], c[2])
    }
}

impl fmt::Display for VoxelCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.x, self.y, self.z)
    }
}

/// A lattice point shared by the cubes around it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CornerId {
    pub cx: i64,
    pub cy: i64,
    pub cz: i64,
}

impl CornerId {
    pub const fn new(cx: i64, cy: i64, cz: i64) -> Self {
        Self { cx, cy, cz }
    }

    pub fn color(self) -> Color {
        if (self.cx + self.cy + self.cz).rem_euclid(2) == 0 {
            Color::Black
        } else {
            Color::White
        }
    }

    pub fn position(self) -> [f64; 3] {
        [self.cx as f64, self.cy as f64, self.cz as f64]
    }
}

impl fmt::Display for CornerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.cx, self.cy, self.cz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Minus => -1.0,
            Sign::Plus => 1.0,
        }
    }
}

/// One of the six faces of a voxel, named by its outward normal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Face {
    pub axis: Axis,
    pub sign: Sign,
}

impl Face {
    pub const ALL: [Face; 6] = [
        Face::new(Axis::X, Sign::Minus),
        Face::new(Axis::X, Sign::Plus),
        Face::new(Axis::Y, Sign::Minus),
        Face::new(Axis::Y, Sign::Plus),
        Face::new(Axis::Z, Sign::Minus),
        Face::new(Axis::Z, Sign::Plus),
    ];

    pub const fn new(axis: Axis, sign: Sign) -> Self {
        Self { axis, sign }
    }

    pub fn normal(self) -> [f64; 3] {
        let mut n = [0.0; 3];
        n[self.axis.index()] = self.sign.as_f64();
        n
    }
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.sign {
            Sign::Minus => '-',
            Sign::Plus => '+',
        };
        let a = match self.axis {
            Axis::X => 'X',
            Axis::Y => 'Y',
            Axis::Z => 'Z',
        };
        write!(f, "{s}{a}")
    }
}

impl std::str::FromStr for Face {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        // Accept the unicode minus as well as '-'.
        let s = s.trim().replace('\u{2212}', "-");
        let mut chars = s.chars();
        let sign = match chars.next() {
            Some('+') => Sign::Plus,
            Some('-') => Sign::Minus,
            _ => return Err(format!("bad face '{s}'")),
        };
        let axis = match chars.next().map(|c| c.to_ascii_uppercase()) {
            Some('X') => Axis::X,
            Some('Y') => Axis::Y,
            Some('Z') => Axis::Z,
            _ => return Err(format!("bad face '{s}'")),
        };
        if chars.next().is_some() {
            return Err(format!("bad face '{s}'"));
        }
        Ok(Face::new(axis, sign))
    }
}

/// A surfel, stored against the voxel of the set that owns it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SurfelId {
    pub voxel: VoxelCoord,
    pub face: Face,
}

impl SurfelId {
    pub const fn new(voxel: VoxelCoord, face: Face) -> Self {
        Self { voxel, face }
    }

    pub fn outward_normal(self) -> [f64; 3] {
        self.face.normal()
    }

    pub fn center(self) -> [f64; 3] {
        let mut c = [
            self.voxel.x as f64 + 0.5,
            self.voxel.y as f64 + 0.5,
            self.voxel.z as f64 + 0.5,
        ];
        c[self.face.axis.index()] += 0.5 * self.face.sign.as_f64();
        c
    }

    /// The four corners counterclockwise as seen from the outward normal,
    /// starting at the lexicographically smallest black corner. The result is
    /// the cycle `(x, y, x', y')` with `x`, `x'` black.
    pub fn oriented_corners(self) -> [CornerId; 4] {
        let a = self.face.axis.index();
        let b = (a + 1) % 3;
        let c = (a + 2) % 3;
        let base = [self.voxel.x, self.voxel.y, self.voxel.z];
        let plane = base[a] + i64::from(self.face.sign == Sign::Plus);
        // e_b × e_c = e_a, so this order is counterclockwise seen from +e_a.
        let mut offsets = [(0, 0), (1, 0), (1, 1), (0, 1)];
        if self.face.sign == Sign::Minus {
            offsets.reverse();
        }
        let square = offsets.map(|(db, dc)| {
            let mut p = [0i64; 3];
            p[a] = plane;
            p[b] = base[b] + db;
            p[c] = base[c] + dc;
            CornerId::new(p[0], p[1], p[2])
        });
        let start = (0..4)
            .filter(|&k| square[k].color() == Color::Black)
            .min_by_key(|&k| square[k])
            .expect("a unit square has two black corners");
        [0, 1, 2, 3].map(|k| square[(start + k) % 4])
    }
}

impl fmt::Display for SurfelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.voxel, self.face)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Color {
    Black,
    White,
}

impl Color {
    pub fn opposite(self) -> Self {
        match self {
            Color::Black => Color::White,
            Color::White => Color::Black,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edgel {
    /// Corner indices, smaller first.
    pub ends: [usize; 2],
    /// Incident surfel indices (one for boundary edgels, two otherwise).
    pub surfels: Vec<usize>,
}

impl Edgel {
    pub fn is_boundary(&self) -> bool {
        self.surfels.len() == 1
    }
}

/// The cellular complex ◊ of a connected surfel surface.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfelSurface {
    surfels: Vec<SurfelId>,
    corners: Vec<CornerId>,
    cycles: Vec<[usize; 4]>,
    edgels: Vec<Edgel>,
    surfel_edgels: Vec<[usize; 4]>,
    dropped_components: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologySummary {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub euler_characteristic: i64,
    pub boundary_edgels: usize,
    /// Only defined for closed surfaces.
    pub genus: Option<i64>,
}

impl fmt::Display for TopologySummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "V={} E={} F={}", self.vertices, self.edges, self.faces)?;
        match self.genus {
            Some(g) => write!(f, " genus={g}"),
            None => write!(f, " boundary_edgels={}", self.boundary_edgels),
        }
    }
}

/// Boundary surface of a voxel set: every voxel face whose neighbor across it
/// is absent.
pub fn extract_surface<I>(voxels: I) -> Result<SurfelSurface>
where
    I: IntoIterator<Item = VoxelCoord>,
{
    let set: BTreeSet<VoxelCoord> = voxels.into_iter().collect();
    if set.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut surfels = Vec::new();
    for &v in &set {
        for face in Face::ALL {
            let delta = match face.sign {
                Sign::Plus => 1,
                Sign::Minus => -1,
            };
            if !set.contains(&v.offset(face.axis, delta)) {
                surfels.push(SurfelId::new(v, face));
            }
        }
    }
    SurfelSurface::from_surfels(surfels)
}

impl SurfelSurface {
    /// Builds the complex from an explicit surfel set. Unlike
    /// [`extract_surface`] this admits surfaces with boundary edgels.
    pub fn from_surfels<I>(surfels: I) -> Result<Self>
    where
        I: IntoIterator<Item = SurfelId>,
    {
        let set: BTreeSet<SurfelId> = surfels.into_iter().collect();
        if set.is_empty() {
            return Err(Error::EmptyInput);
        }
        let all: Vec<SurfelId> = set.into_iter().collect();
        let full = Self::assemble(all)?;
        let components = full.components();
        if components.len() == 1 {
            return Ok(full);
        }
        // Largest component wins; ties go to the one holding the smallest surfel.
        let keep = components
            .iter()
            .enumerate()
            .max_by(|(i, a), (j, b)| a.len().cmp(&b.len()).then(j.cmp(i)))
            .map(|(i, _)| i)
            .unwrap();
        let dropped: Vec<usize> = components
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != keep)
            .map(|(_, c)| c.len())
            .collect();
        log::warn!(
            "surface has {} connected components; keeping the largest ({} surfels), dropping sizes {:?}",
            components.len(),
            components[keep].len(),
            dropped
        );
        let kept: Vec<SurfelId> = components[keep].iter().map(|&s| full.surfels[s]).collect();
        let mut surface = Self::assemble(kept)?;
        surface.dropped_components = dropped;
        Ok(surface)
    }

    fn assemble(surfels: Vec<SurfelId>) -> Result<Self> {
        let oriented: Vec<[CornerId; 4]> = surfels.iter().map(|s| s.oriented_corners()).collect();
        let corner_set: BTreeSet<CornerId> = oriented.iter().flatten().copied().collect();
        let corners: Vec<CornerId> = corner_set.into_iter().collect();
        let corner_index: HashMap<CornerId, usize> =
            corners.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let cycles: Vec<[usize; 4]> = oriented
            .iter()
            .map(|q| q.map(|c| corner_index[&c]))
            .collect();

        // (min, max) -> [(surfel, traversed from min to max)]
        let mut incidence: BTreeMap<(usize, usize), Vec<(usize, bool)>> = BTreeMap::new();
        for (s, cycle) in cycles.iter().enumerate() {
            for k in 0..4 {
                let (a, b) = (cycle[k], cycle[(k + 1) % 4]);
                incidence
                    .entry((a.min(b), a.max(b)))
                    .or_default()
                    .push((s, a < b));
            }
        }
        for (&(a, b), list) in &incidence {
            if list.len() > 2 {
                return Err(Error::NonManifoldEdge {
                    a: corners[a],
                    b: corners[b],
                    count: list.len(),
                });
            }
        }
        for (&(a, b), list) in &incidence {
            if list.len() == 2 && list[0].1 == list[1].1 {
                return Err(Error::InconsistentOrientation {
                    a: corners[a],
                    b: corners[b],
                });
            }
        }

        let mut edgels = Vec::with_capacity(incidence.len());
        let mut surfel_edgels = vec![[usize::MAX; 4]; surfels.len()];
        let mut edgel_index = HashMap::with_capacity(incidence.len());
        for (i, (&(a, b), list)) in incidence.iter().enumerate() {
            edgel_index.insert((a, b), i);
            edgels.push(Edgel {
                ends: [a, b],
                surfels: list.iter().map(|&(s, _)| s).collect(),
            });
        }
        for (s, cycle) in cycles.iter().enumerate() {
            for k in 0..4 {
                let (a, b) = (cycle[k], cycle[(k + 1) % 4]);
                surfel_edgels[s][k] = edgel_index[&(a.min(b), a.max(b))];
            }
        }

        let surface = Self {
            surfels,
            corners,
            cycles,
            edgels,
            surfel_edgels,
            dropped_components: Vec::new(),
        };
        surface.check_vertex_fans()?;
        Ok(surface)
    }

    /// Rejects corners where the incident surfels form more than one fan.
    /// Only meaningful for edgel-connected surfaces; the caller drops other
    /// components first when it matters, but a pinch inside one component
    /// is always an error.
    fn check_vertex_fans(&self) -> Result<()> {
        let mut around: Vec<Vec<(usize, usize)>> = vec![Vec::new(); self.corners.len()];
        for cycle in &self.cycles {
            for k in 0..4 {
                // sector at cycle[k] runs from the next corner to the previous one
                around[cycle[k]].push((cycle[(k + 1) % 4], cycle[(k + 3) % 4]));
            }
        }
        for (v, sectors) in around.iter().enumerate() {
            let fans = count_fans(sectors);
            if fans > 1 {
                return Err(Error::NonManifoldVertex {
                    corner: self.corners[v].to_string(),
                    fans,
                });
            }
        }
        Ok(())
    }

    fn components(&self) -> Vec<Vec<usize>> {
        let n = self.surfels.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for e in &self.edgels {
            if let [a, b] = e.surfels[..] {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for s in 0..n {
            let r = find(&mut parent, s);
            groups.entry(r).or_default().push(s);
        }
        groups.into_values().collect()
    }

    pub fn surfels(&self) -> &[SurfelId] {
        &self.surfels
    }

    pub fn corners(&self) -> &[CornerId] {
        &self.corners
    }

    pub fn edgels(&self) -> &[Edgel] {
        &self.edgels
    }

    /// Oriented corner cycle `(x, y, x', y')` of surfel `s`, as corner indices.
    pub fn cycle(&self, s: usize) -> [usize; 4] {
        self.cycles[s]
    }

    pub fn cycles(&self) -> &[[usize; 4]] {
        &self.cycles
    }

    pub fn surfel_edgels(&self, s: usize) -> [usize; 4] {
        self.surfel_edgels[s]
    }

    pub fn corner_index(&self, c: CornerId) -> Option<usize> {
        self.corners.binary_search(&c).ok()
    }

    pub fn surfel_index(&self, s: SurfelId) -> Option<usize> {
        self.surfels.binary_search(&s).ok()
    }

    /// Sizes of connected components discarded during construction.
    pub fn dropped_components(&self) -> &[usize] {
        &self.dropped_components
    }

    pub fn boundary_edgel_count(&self) -> usize {
        self.edgels.iter().filter(|e| e.is_boundary()).count()
    }

    pub fn is_closed(&self) -> bool {
        self.boundary_edgel_count() == 0
    }

    /// Surfels sharing an edgel with `s`.
    pub fn neighbors(&self, s: usize) -> impl Iterator<Item = usize> + '_ {
        self.surfel_edgels[s]
            .iter()
            .flat_map(move |&e| self.edgels[e].surfels.iter().copied().filter(move |&t| t != s))
    }
}

/// Counts maximal chains in a set of sectors `(from, to)` around a vertex,
/// where consecutive sectors satisfy `prev.to == next.from`.
pub(crate) fn count_fans(sectors: &[(usize, usize)]) -> usize {
    let mut visited = vec![false; sectors.len()];
    let next_of: HashMap<usize, usize> = sectors
        .iter()
        .enumerate()
        .map(|(i, &(from, _))| (from, i))
        .collect();
    let has_pred: BTreeSet<usize> = sectors.iter().map(|&(_, to)| to).collect();
    let mut fans = 0;
    // open chains first, from their unmatched start
    let starts: Vec<usize> = (0..sectors.len())
        .filter(|&i| !has_pred.contains(&sectors[i].0))
        .collect();
    for start in starts.into_iter().chain(0..sectors.len()) {
        if visited[start] {
            continue;
        }
        fans += 1;
        let mut i = start;
        while !visited[i] {
            visited[i] = true;
            match next_of.get(&sectors[i].1) {
                Some(&j) => i = j,
                None => break,
            }
        }
    }
    fans
}

/// Black/white color of every corner of the surface, by coordinate parity.
pub fn bicolor(surface: &SurfelSurface) -> Vec<Color> {
    surface.corners().iter().map(|c| c.color()).collect()
}

pub fn euler_genus(surface: &SurfelSurface) -> TopologySummary {
    let vertices = surface.corners.len();
    let edges = surface.edgels.len();
    let faces = surface.surfels.len();
    let euler = vertices as i64 - edges as i64 + faces as i64;
    let boundary_edgels = surface.boundary_edgel_count();
    let genus = (boundary_edgels == 0).then(|| (2 - euler) / 2);
    TopologySummary {
        vertices,
        edges,
        faces,
        euler_characteristic: euler,
        boundary_edgels,
        genus,
    }
}
