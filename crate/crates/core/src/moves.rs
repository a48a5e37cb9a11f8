//! Electrical moves: the star-triangle transformation and flips of three
//! quads arranged in a hexagon.
//!
//! A hexagon is centred at a vertex `c` of degree three. Going around `c`
//! counterclockwise, its ring is `[n₀, s₀, n₁, s₁, n₂, s₂]` and quad `k` has
//! the cycle `(c, sₖ₋₁, nₖ, sₖ)`. The diagonals `c nₖ` form a star in the
//! colour of `c`, the diagonals `sₖ₋₁ sₖ` a triangle in the other colour.
//! A flip replaces `c` by a vertex `c'` of the other colour joined to the
//! `sₖ`, turning the star into a triangle and the triangle into a star.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::conformal::ConformalStructure;
use crate::dec::Cochain;
use crate::error::{Error, Result};
use crate::graph::{DoubleGraph, Quad, QuadKey, Vertex, VertexKey};
use crate::surface::Color;

/// Star parameters from triangle parameters:
/// `ρ'ᵢ = (ρ₁ρ₂ + ρ₂ρ₃ + ρ₃ρ₁) / ρᵢ`, where `ρ'ᵢ` sits opposite `ρᵢ`.
pub fn star_triangle(rho: [Complex64; 3]) -> Result<[Complex64; 3]> {
    if rho.iter().any(|r| r.norm() == 0.0) {
        return Err(Error::DegenerateMove("zero conformal parameter".into()));
    }
    let s = rho[0] * rho[1] + rho[1] * rho[2] + rho[2] * rho[0];
    if s.norm() == 0.0 || !s.is_finite() {
        return Err(Error::DegenerateMove(
            "vanishing elementary symmetric sum".into(),
        ));
    }
    Ok(rho.map(|r| s / r))
}

/// Inverse of [`star_triangle`]: `ρᵢ = (ρ'₁ρ'₂ρ'₃ / (ρ'₁ + ρ'₂ + ρ'₃)) / ρ'ᵢ`.
pub fn triangle_star(star: [Complex64; 3]) -> Result<[Complex64; 3]> {
    if star.iter().any(|r| r.norm() == 0.0) {
        return Err(Error::DegenerateMove("zero conformal parameter".into()));
    }
    let sum: Complex64 = star.iter().sum();
    if sum.norm() == 0.0 {
        return Err(Error::DegenerateMove("vanishing parameter sum".into()));
    }
    let k = star[0] * star[1] * star[2] / sum;
    Ok(star.map(|r| k / r))
}

/// Three quads around a degree-three vertex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HexagonConfig {
    pub center: usize,
    /// `[n₀, s₀, n₁, s₁, n₂, s₂]`, counterclockwise.
    pub ring: [usize; 6],
    /// Quad `k` has the cycle `(c, sₖ₋₁, nₖ, sₖ)`.
    pub quads: [usize; 3],
    /// `ρ(c, nₖ)`: the star parameters at the centre.
    pub rho: [Complex64; 3],
}

impl HexagonConfig {
    pub fn branch(&self, k: usize) -> usize {
        self.ring[2 * (k % 3)]
    }

    pub fn side(&self, k: usize) -> usize {
        self.ring[2 * (k % 3) + 1]
    }

    /// Triangle parameters `ρ(sₖ₋₁, sₖ) = 1/ρ(c, nₖ)`.
    pub fn triangle(&self) -> [Complex64; 3] {
        self.rho.map(|r| r.inv())
    }

    /// Star parameters of the flipped hexagon, in its own ring order
    /// (the ring shifted by one step, so that `n'ⱼ = sⱼ`).
    pub fn flipped_rho(&self) -> Result<[Complex64; 3]> {
        // triangle edge sₖ₋₁sₖ lies opposite the branch to sₖ₊₁
        let star = star_triangle(self.triangle())?;
        Ok([star[2], star[0], star[1]])
    }
}

/// ρ of the diagonal through `v` in quad `q`.
fn own_rho(structure: &ConformalStructure, v: usize, q: usize) -> Complex64 {
    match structure.graph().vertex(v).color {
        Color::Black => structure.rho(DoubleGraph::primal_edge(q)),
        Color::White => structure.rho(DoubleGraph::dual_edge_of_quad(q)),
    }
}

/// The hexagon centred at `center`, if that vertex is interior of degree three.
pub fn hexagon_at(structure: &ConformalStructure, center: usize) -> Result<HexagonConfig> {
    let graph = structure.graph();
    if center >= graph.vertex_count() {
        return Err(Error::UnknownCell(format!("vertex index {center}")));
    }
    let fan = graph.fan(center);
    let label = graph.vertex_label(center);
    if !fan.closed || fan.quads.len() != 3 {
        return Err(Error::InvalidConfiguration(format!(
            "vertex {label} is not an interior vertex of degree 3"
        )));
    }
    let quads = [fan.quads[0], fan.quads[1], fan.quads[2]];
    let sectors = quads.map(|q| graph.quad(q).rotated_at(center).unwrap());
    let mut ring = [0; 6];
    for k in 0..3 {
        let [_, a, o, b] = sectors[k];
        ring[2 * k] = o;
        ring[2 * k + 1] = b;
        if sectors[(k + 2) % 3][3] != a {
            return Err(Error::InvalidConfiguration(format!(
                "fan around {label} is not a hexagon"
            )));
        }
    }
    let mut sorted = ring;
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) || ring.contains(&center) {
        return Err(Error::InvalidConfiguration(format!(
            "hexagon around {label} has repeated vertices"
        )));
    }
    let rho = quads.map(|q| own_rho(structure, center, q));
    Ok(HexagonConfig {
        center,
        ring,
        quads,
        rho,
    })
}

/// All vertices admitting a flip, in index order.
pub fn flippable_vertices(structure: &ConformalStructure) -> Vec<usize> {
    (0..structure.graph().vertex_count())
        .filter(|&v| hexagon_at(structure, v).is_ok())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlipExtension {
    /// Least-squares value at the centre.
    pub center: Complex64,
    /// Largest disagreement between the three single-quad predictions.
    pub residual: f64,
    pub estimates: [Complex64; 3],
}

/// Extends a function given on the ring of a hexagon to its centre. Each
/// quad `(c, sₖ₋₁, nₖ, sₖ)` predicts
/// `f(c) = f(nₖ) − (f(sₖ) − f(sₖ₋₁)) / (iρₖ)`.
pub fn flip_extend(hexagon: &HexagonConfig, boundary: [Complex64; 6]) -> Result<FlipExtension> {
    let i = Complex64::i();
    let mut estimates = [Complex64::new(0.0, 0.0); 3];
    for k in 0..3 {
        let coeff = i * hexagon.rho[k];
        if coeff.norm() == 0.0 || !coeff.is_finite() {
            return Err(Error::DegenerateMove(format!(
                "quad {k} does not constrain the centre"
            )));
        }
        let n = boundary[2 * k];
        let s_prev = boundary[(2 * k + 5) % 6];
        let s = boundary[2 * k + 1];
        estimates[k] = n - (s - s_prev) / coeff;
    }
    let weights = hexagon.rho.map(|r| r.norm_sqr());
    let center = estimates
        .iter()
        .zip(weights)
        .map(|(e, w)| e * w)
        .sum::<Complex64>()
        / weights.iter().sum::<f64>();
    let mut residual: f64 = 0.0;
    for a in 0..3 {
        for b in a + 1..3 {
            residual = residual.max((estimates[a] - estimates[b]).norm());
        }
    }
    Ok(FlipExtension {
        center,
        residual,
        estimates,
    })
}

/// Result of [`apply_flip`].
#[derive(Debug, Clone)]
pub struct Flip {
    pub structure: ConformalStructure,
    /// Index of the new centre in the new graph.
    pub center: usize,
    /// Old vertex index → new vertex index; `None` for the removed centre.
    pub vertex_map: Vec<Option<usize>>,
}

impl Flip {
    /// Carries a 0-form across the flip, extending it to the new centre.
    pub fn transport(&self, f: &Cochain) -> Result<(Cochain, FlipExtension)> {
        let hex = hexagon_at(&self.structure, self.center)?;
        let graph = self.structure.graph();
        let mut values = vec![Complex64::new(0.0, 0.0); graph.vertex_count()];
        for (old, new) in self.vertex_map.iter().enumerate() {
            if let Some(new) = new {
                values[*new] = f.values[old];
            }
        }
        let ext = flip_extend(&hex, hex.ring.map(|v| values[v]))?;
        values[self.center] = ext.center;
        Ok((Cochain { degree: 0, values }, ext))
    }
}

/// Rewrites the hexagon at `center` into the flipped configuration on the
/// abstract double graph, transforming the parameters by the star-triangle
/// relation. No voxel geometry is involved.
pub fn apply_flip(structure: &ConformalStructure, center: usize) -> Result<Flip> {
    let hex = hexagon_at(structure, center)?;
    let new_rho = hex.flipped_rho()?;
    let graph = structure.graph();

    let mut vertex_map = vec![None; graph.vertex_count()];
    let mut vertices: Vec<Vertex> = Vec::with_capacity(graph.vertex_count());
    for (v, vertex) in graph.vertices().iter().enumerate() {
        if v != center {
            vertex_map[v] = Some(vertices.len());
            vertices.push(*vertex);
        }
    }
    let mut next = graph.next_virtual();
    let new_center = vertices.len();
    let color = graph.vertex(center).color.opposite();
    vertices.push(Vertex {
        key: VertexKey::Virtual(next),
        color,
    });
    next += 1;
    let map = |v: usize| vertex_map[v].expect("ring vertices survive the flip");

    let mut quads: Vec<Quad> = graph
        .quads()
        .iter()
        .map(|q| Quad {
            key: q.key,
            cycle: q.cycle.map(|v| vertex_map[v].unwrap_or(usize::MAX)),
        })
        .collect();
    let mut primal: Vec<Complex64> = (0..graph.quad_count())
        .map(|q| structure.primal_rho(q))
        .collect();
    for j in 0..3 {
        let n = map(hex.branch(j));
        let s = map(hex.side(j));
        let n_next = map(hex.branch(j + 1));
        // new quad (c', nⱼ, sⱼ, nⱼ₊₁); its c'-coloured diagonal c'sⱼ carries ρ'ⱼ
        let (cycle, rho) = match color {
            Color::Black => ([new_center, n, s, n_next], new_rho[j]),
            Color::White => ([n, s, n_next, new_center], new_rho[j].inv()),
        };
        let slot = hex.quads[j];
        quads[slot] = Quad {
            key: QuadKey::Virtual(next),
            cycle,
        };
        primal[slot] = rho;
        next += 1;
    }
    let new_graph = DoubleGraph::from_parts(vertices, quads, next)?;
    let structure =
        ConformalStructure::from_primal_rho(Arc::new(new_graph), &primal, structure.tolerances())?;
    Ok(Flip {
        structure,
        center: new_center,
        vertex_map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::{compute_rho, NormalField, Tolerances};
    use crate::dec::holomorphy_defect;
    use crate::graph::build_double_graph;
    use crate::shapes;
    use crate::surface::CornerId;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn plane(n: i64) -> ConformalStructure {
        let s = shapes::standard_plane_patch(n).unwrap();
        let normals = NormalField::constant(&s, shapes::standard_plane_normal()).unwrap();
        compute_rho(
            Arc::new(build_double_graph(&s).unwrap()),
            &normals,
            Tolerances::default(),
        )
        .unwrap()
    }

    fn projection(structure: &ConformalStructure) -> Cochain {
        let (u, w) = crate::conformal::tangent_frame(shapes::standard_plane_normal());
        let g = structure.graph();
        Cochain::from_fn(g, |v| match g.vertex(v).key {
            VertexKey::Corner(k) => project(k, u, w),
            VertexKey::Virtual(_) => unreachable!(),
        })
    }

    fn project(k: CornerId, u: [f64; 3], w: [f64; 3]) -> Complex64 {
        let p = k.position();
        c(
            p[0] * u[0] + p[1] * u[1] + p[2] * u[2],
            p[0] * w[0] + p[1] * w[1] + p[2] * w[2],
        )
    }

    #[test]
    fn star_triangle_examples() {
        let one = c(1.0, 0.0);
        assert_eq!(star_triangle([one; 3]).unwrap(), [c(3.0, 0.0); 3]);
        let out = star_triangle([one, c(0.0, 1.0), c(1.0, 1.0)]).unwrap();
        let expected = [c(0.0, 3.0), c(3.0, 0.0), c(1.5, 1.5)];
        for k in 0..3 {
            assert!((out[k] - expected[k]).norm() < 1e-15);
        }
        assert!(matches!(
            star_triangle([one, c(0.0, 0.0), one]),
            Err(Error::DegenerateMove(_))
        ));
        // 1·i + i·(−i) + (−i)·1 = 1, fine; i, i, −i/2 sums to zero
        assert!(matches!(
            star_triangle([c(0.0, 1.0), c(0.0, 1.0), c(0.0, -0.5)]),
            Err(Error::DegenerateMove(_))
        ));
    }

    #[test]
    fn standard_plane_hexagons() {
        let s = plane(6);
        let flippable = flippable_vertices(&s);
        assert!(!flippable.is_empty());
        for &v in &flippable {
            let hex = hexagon_at(&s, v).unwrap();
            // the degree-three vertices are the hexagonal-lattice ones
            for r in hex.rho {
                assert!((r - c(3f64.sqrt(), 0.0)).norm() < 1e-12);
            }
            for r in hex.flipped_rho().unwrap() {
                assert!((r - c(3f64.sqrt(), 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn flip_extension_of_projection() {
        let s = plane(6);
        let z = projection(&s);
        let (u, w) = crate::conformal::tangent_frame(shapes::standard_plane_normal());
        let v = flippable_vertices(&s)[2];
        let flip = apply_flip(&s, v).unwrap();
        let (f, ext) = flip.transport(&z).unwrap();
        assert!(ext.residual < 1e-12, "{ext:?}");
        // the flipped centre is the opposite corner of the voxel removed
        // (convex corner) or added (concave corner)
        let VertexKey::Corner(old) = s.graph().vertex(v).key else {
            unreachable!()
        };
        let step = if old.cx + old.cy + old.cz == 2 { -1 } else { 1 };
        let opposite = CornerId::new(old.cx + step, old.cy + step, old.cz + step);
        assert!((ext.center - project(opposite, u, w)).norm() < 1e-12);
        let defect = holomorphy_defect(&flip.structure, &f).unwrap();
        assert!(defect.iter().all(|d| d.norm() < 1e-12));
    }

    #[test]
    fn constants_extend_trivially_and_noise_is_reported() {
        let s = plane(5);
        let hex = hexagon_at(&s, flippable_vertices(&s)[0]).unwrap();
        let k = c(2.0, -1.0);
        let ext = flip_extend(&hex, [k; 6]).unwrap();
        assert!((ext.center - k).norm() < 1e-15);
        assert_eq!(ext.residual, 0.0);
        let noisy = [c(0.1, 0.0), c(1.0, 2.0), c(-1.0, 0.3), c(0.0, 0.0), c(5.0, 1.0), c(2.0, 2.0)];
        assert!(flip_extend(&hex, noisy).unwrap().residual > 1e-3);
    }

    #[test]
    fn flip_twice_restores_the_configuration() {
        let s = plane(5);
        let v = flippable_vertices(&s)[1];
        let once = apply_flip(&s, v).unwrap();
        let twice = apply_flip(&once.structure, once.center).unwrap();
        let g0 = s.graph();
        let g2 = twice.structure.graph();
        assert_eq!(g0.vertex_count(), g2.vertex_count());
        assert_eq!(g0.euler_characteristic(), once.structure.graph().euler_characteristic());
        // old index → index after two flips
        let map = |old: usize| -> usize {
            if old == v {
                twice.center
            } else {
                twice.vertex_map[once.vertex_map[old].unwrap()].unwrap()
            }
        };
        let canon = |cycle: [usize; 4]| {
            let mut best = cycle;
            for k in 1..4 {
                let r = [0, 1, 2, 3].map(|i| cycle[(k + i) % 4]);
                best = best.min(r);
            }
            best
        };
        let mut before: Vec<_> = (0..g0.quad_count())
            .map(|q| (canon(g0.quad(q).cycle.map(map)), s.primal_rho(q)))
            .collect();
        let mut after: Vec<_> = (0..g2.quad_count())
            .map(|q| (canon(g2.quad(q).cycle), twice.structure.primal_rho(q)))
            .collect();
        before.sort_by(|a, b| a.0.cmp(&b.0));
        after.sort_by(|a, b| a.0.cmp(&b.0));
        assert_eq!(before.len(), after.len());
        for (a, b) in before.iter().zip(&after) {
            assert_eq!(a.0, b.0);
            assert!((a.1 - b.1).norm() < 1e-12);
        }
    }

    #[test]
    fn boundary_vertices_are_not_hexagons() {
        let s = plane(3);
        let g = s.graph();
        let boundary = (0..g.vertex_count()).find(|&v| !g.is_face_closed(v)).unwrap();
        assert!(matches!(hexagon_at(&s, boundary), Err(Error::InvalidConfiguration(_))));
    }

    fn arb_rho() -> impl Strategy<Value = Complex64> {
        (0.05f64..5.0, -5.0f64..5.0).prop_map(|(re, im)| Complex64::new(re, im))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn both_identities_and_round_trip(a in arb_rho(), b in arb_rho(), d in arb_rho()) {
            let rho = [a, b, d];
            let star = star_triangle(rho).unwrap();
            let s = a * b + b * d + d * a;
            let q = star[0] * star[1] * star[2] / (star[0] + star[1] + star[2]);
            for k in 0..3 {
                prop_assert!((rho[k] * star[k] - s).norm() <= 1e-12 * s.norm());
                prop_assert!((rho[k] * star[k] - q).norm() <= 1e-12 * s.norm());
            }
            let back = triangle_star(star).unwrap();
            for k in 0..3 {
                prop_assert!((back[k] - rho[k]).norm() <= 1e-12 * rho[k].norm());
            }
        }
    }
}
