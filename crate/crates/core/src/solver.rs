//! Sparse solves: harmonic Dirichlet problems and least-conformal-energy
//! parametrization.
//!
//! Both problems are reduced to real symmetric positive definite systems on
//! the unpinned vertices and factored once with a sparse Cholesky
//! decomposition.

use std::collections::BTreeMap;

use log::debug;
use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix, CsrMatrix};
use num_complex::Complex64;
use serde::Serialize;

use crate::conformal::ConformalStructure;
use crate::dec::{gram_block, hodge_block, Cochain};
use crate::error::{Error, Result};
use crate::graph::{DoubleGraph, VertexKey};
use crate::operators::{self, EnergyReport, SparseOperator, REAL_TOL};

/// Default relative residual for solves.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Cap on the refinement steps of [`parametrize`].
const MAX_ITERATIONS: usize = 1000;

/// Relative weight of the parallelogram regularizer in [`parametrize`].
const REGULARIZATION: f64 = 1e-2;

/// Prescribed values on a set of vertices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundaryCondition {
    values: BTreeMap<usize, Complex64>,
}

impl BoundaryCondition {
    pub fn new() -> Self {
        Self::default()
    }

    /// Pins every vertex in `vertices` to `f(v)`.
    pub fn from_fn(vertices: impl IntoIterator<Item = usize>, mut f: impl FnMut(usize) -> Complex64) -> Self {
        Self {
            values: vertices.into_iter().map(|v| (v, f(v))).collect(),
        }
    }

    /// Resolves vertex keys against `graph`.
    pub fn from_keys(
        graph: &DoubleGraph,
        pins: impl IntoIterator<Item = (VertexKey, Complex64)>,
    ) -> Result<Self> {
        let mut bc = Self::new();
        for (key, value) in pins {
            let v = graph
                .vertex_index(key)
                .ok_or_else(|| Error::UnknownCell(format!("vertex {key}")))?;
            bc.insert(v, value);
        }
        Ok(bc)
    }

    pub fn insert(&mut self, v: usize, value: Complex64) -> Option<Complex64> {
        self.values.insert(v, value)
    }

    pub fn get(&self, v: usize) -> Option<Complex64> {
        self.values.get(&v).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        self.values.iter().map(|(&v, &z)| (v, z))
    }

    fn check(&self, graph: &DoubleGraph) -> Result<()> {
        match self.values.keys().find(|&&v| v >= graph.vertex_count()) {
            Some(v) => Err(Error::UnknownCell(format!("vertex index {v}"))),
            None => Ok(()),
        }
    }
}

/// Vertices on the boundary of the surface, i.e. with an open fan.
pub fn boundary_vertices(graph: &DoubleGraph) -> Vec<usize> {
    (0..graph.vertex_count())
        .filter(|&v| !graph.fan(v).closed)
        .collect()
}

/// Which Laplacian [`solve_dirichlet`] should make harmonic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LaplacianChoice {
    Real,
    Complex,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub method: String,
    pub unknowns: usize,
    pub pins: usize,
    pub iterations: usize,
    /// Relative residual of the normal equations on the unpinned vertices.
    pub residual: f64,
    pub energies: EnergyReport,
}

/// Splits vertices into free unknowns and pinned values.
struct Partition {
    /// Vertex → index among the free vertices.
    free: Vec<Option<usize>>,
    free_count: usize,
}

impl Partition {
    fn new(n: usize, bc: &BoundaryCondition) -> Self {
        let mut free = vec![None; n];
        let mut free_count = 0;
        for (v, slot) in free.iter_mut().enumerate() {
            if bc.get(v).is_none() {
                *slot = Some(free_count);
                free_count += 1;
            }
        }
        Self { free, free_count }
    }
}

fn factor(matrix: &CooMatrix<f64>) -> Result<CscCholesky<f64>> {
    CscCholesky::factor(&CscMatrix::from(matrix))
        .map_err(|e| Error::SingularSystem(format!("Cholesky factorization failed: {e}")))
}

fn relative(residual: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        residual / scale
    } else {
        residual
    }
}

/// Solves `Δf = 0` off the pinned set with `f = bc` on it.
///
/// The closed-form Laplacians are real symmetric, so the real and imaginary
/// parts are solved as two right-hand sides of one factorization. Every
/// connected component of Γ and Γ* needs a pin; otherwise the system keeps
/// the component's constant in its kernel.
pub fn solve_dirichlet(
    structure: &ConformalStructure,
    choice: LaplacianChoice,
    bc: &BoundaryCondition,
    tol: f64,
) -> Result<(Cochain, SolveReport)> {
    let graph = structure.graph();
    bc.check(graph)?;
    let laplacian = laplacian_for(structure, choice)?;
    for component in graph.color_components() {
        if component.iter().all(|&v| bc.get(v).is_none()) {
            return Err(Error::SingularSystem(format!(
                "no pinned vertex in the component of {}",
                graph.vertex_label(component[0])
            )));
        }
    }

    let n = graph.vertex_count();
    let part = Partition::new(n, bc);
    let m = part.free_count;
    let mut coo = CooMatrix::new(m, m);
    let mut rhs = DMatrix::<f64>::zeros(m, 2);
    for &(r, c, value) in laplacian.entries() {
        debug_assert!(value.im.abs() <= REAL_TOL);
        let Some(fr) = part.free[r] else { continue };
        match (part.free[c], bc.get(c)) {
            (Some(fc), _) => coo.push(fr, fc, value.re),
            (None, Some(z)) => {
                rhs[(fr, 0)] -= value.re * z.re;
                rhs[(fr, 1)] -= value.re * z.im;
            }
            (None, None) => unreachable!(),
        }
    }

    let mut values: Vec<Complex64> = (0..n).map(|v| bc.get(v).unwrap_or_default()).collect();
    let mut residual = 0.0;
    if m > 0 {
        let solution = factor(&coo)?.solve(&rhs);
        let csr = CsrMatrix::from(&coo);
        let lhs = &csr * &solution;
        residual = relative((&lhs - &rhs).norm(), rhs.norm());
        for (v, slot) in part.free.iter().enumerate() {
            if let Some(i) = slot {
                values[v] = Complex64::new(solution[(*i, 0)], solution[(*i, 1)]);
            }
        }
    }
    debug!("dirichlet solve: {m} unknowns, relative residual {residual:e}");
    if residual > tol {
        return Err(Error::NotConverged {
            iterations: 1,
            residual,
        });
    }
    let f = Cochain::from_values(graph, 0, values)?;
    let report = SolveReport {
        method: format!("dirichlet-{}", laplacian_name(choice)),
        unknowns: m,
        pins: bc.len(),
        iterations: 1,
        residual,
        energies: operators::energies(structure, &f)?,
    };
    Ok((f, report))
}

fn laplacian_name(choice: LaplacianChoice) -> &'static str {
    match choice {
        LaplacianChoice::Real => "real",
        LaplacianChoice::Complex => "complex",
    }
}

/// `|Δf|` at every vertex, using the closed-form complex Laplacian.
pub fn harmonicity_report(structure: &ConformalStructure, f: &Cochain) -> Result<Vec<f64>> {
    let laplacian = operators::laplacian_closed_complex(structure)?;
    Ok(laplacian.apply(&f.values)?.iter().map(|z| z.norm()).collect())
}

/// Per-quad Hermitian 2×2 block `K` with `E_C = Σ_q uᴴ K u`, `u` the pair
/// of diagonal differences.
fn conformal_block(rho: Complex64) -> [[Complex64; 2]; 2] {
    let g = gram_block(rho);
    let h = hodge_block(rho);
    // B = I − iH
    let b = |r: usize, c: usize| -> Complex64 {
        let id = if r == c { 1.0 } else { 0.0 };
        Complex64::new(id, -h[r][c])
    };
    let mut k = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (r, row) in k.iter_mut().enumerate() {
        for (c, entry) in row.iter_mut().enumerate() {
            for s in 0..2 {
                for t in 0..2 {
                    *entry += 0.5 * b(s, r).conj() * g[s][t] * b(t, c);
                }
            }
        }
    }
    k
}

/// Real symmetric matrices on the interleaved unknowns `(Re f(v), Im f(v))`,
/// restricted to the free vertices, plus the pinned contributions moved to
/// the right-hand side.
struct ReducedSystem {
    matrix: CooMatrix<f64>,
    rhs: DVector<f64>,
}

impl ReducedSystem {
    fn new(m: usize) -> Self {
        Self {
            matrix: CooMatrix::new(2 * m, 2 * m),
            rhs: DVector::zeros(2 * m),
        }
    }

    /// Adds the Hermitian form `conj(z_a) value z_b` to the system.
    fn add(&mut self, part: &Partition, bc: &BoundaryCondition, a: usize, b: usize, value: Complex64) {
        let Some(fa) = part.free[a] else { return };
        let block = [[value.re, -value.im], [value.im, value.re]];
        match part.free[b] {
            Some(fb) => {
                for (r, row) in block.iter().enumerate() {
                    for (c, &x) in row.iter().enumerate() {
                        if x != 0.0 {
                            self.matrix.push(2 * fa + r, 2 * fb + c, x);
                        }
                    }
                }
            }
            None => {
                let z = bc.get(b).expect("vertex is either free or pinned");
                let pinned = [z.re, z.im];
                for (r, row) in block.iter().enumerate() {
                    self.rhs[2 * fa + r] -= row[0] * pinned[0] + row[1] * pinned[1];
                }
            }
        }
    }
}

/// Least-conformal-energy map with the given pins.
///
/// Minimizers of `E_C` form an affine space as large as the space of
/// holomorphic functions, which on a surface with boundary is far bigger
/// than the similitudes fixed by two pins. Among them the solver picks the
/// one closest to mapping every quad to a parallelogram, via proximal
/// iterations `x ← argmin E_C(x) + δ R(x − x_prev)` started from the
/// minimizer of `E_C + δR`, where `R` sums `|f(x) + f(x') − f(y) − f(y')|²`.
/// Each step reuses one Cholesky factorization, and the limit minimizes
/// `E_C` exactly.
pub fn parametrize(
    structure: &ConformalStructure,
    pins: &BoundaryCondition,
    tol: f64,
) -> Result<(Cochain, SolveReport)> {
    let graph = structure.graph();
    if pins.len() < 2 {
        return Err(Error::Underconstrained { pins: pins.len() });
    }
    pins.check(graph)?;
    structure.require_nonsingular()?;

    let n = graph.vertex_count();
    let part = Partition::new(n, pins);
    let m = part.free_count;
    let mut energy = ReducedSystem::new(m);
    let mut defect = ReducedSystem::new(m);
    const SIGNS: [f64; 4] = [1.0, -1.0, 1.0, -1.0];
    for (q, quad) in graph.quads().iter().enumerate() {
        let k = conformal_block(structure.primal_rho(q));
        // u = D z with rows x' − x and y' − y over the cycle (x, y, x', y')
        let d = [[-1.0, 0.0, 1.0, 0.0], [0.0, -1.0, 0.0, 1.0]];
        for a in 0..4 {
            for b in 0..4 {
                let mut value = Complex64::new(0.0, 0.0);
                for r in 0..2 {
                    for c in 0..2 {
                        value += d[r][a] * k[r][c] * d[c][b];
                    }
                }
                if value != Complex64::new(0.0, 0.0) {
                    energy.add(&part, pins, quad.cycle[a], quad.cycle[b], value);
                }
                let r = Complex64::new(SIGNS[a] * SIGNS[b], 0.0);
                defect.add(&part, pins, quad.cycle[a], quad.cycle[b], r);
            }
        }
    }

    let mut values: Vec<Complex64> = (0..n).map(|v| pins.get(v).unwrap_or_default()).collect();
    let mut iterations = 0;
    let mut residual = 0.0;
    if m > 0 {
        let trace = |coo: &CooMatrix<f64>| -> f64 {
            coo.triplet_iter()
                .filter(|(r, c, _)| r == c)
                .map(|(_, _, v)| *v)
                .sum()
        };
        let delta = REGULARIZATION * trace(&energy.matrix) / trace(&defect.matrix).max(f64::MIN_POSITIVE);
        let mut combined = energy.matrix.clone();
        for (r, c, v) in defect.matrix.triplet_iter() {
            combined.push(r, c, delta * v);
        }
        let cholesky = factor(&combined)?;
        let energy_csr = CsrMatrix::from(&energy.matrix);
        let defect_csr = CsrMatrix::from(&defect.matrix);

        let mut x = cholesky.solve(&(&energy.rhs + &defect.rhs * delta)).column(0).into_owned();
        iterations = 1;
        let scale = energy.rhs.norm().max((&energy_csr * &x).norm());
        loop {
            residual = relative((&energy_csr * &x - &energy.rhs).norm(), scale);
            if residual <= tol || iterations >= MAX_ITERATIONS {
                break;
            }
            let rhs = &energy.rhs + (&defect_csr * &x) * delta;
            x = cholesky.solve(&rhs).column(0).into_owned();
            iterations += 1;
        }
        debug!("parametrize: {m} free vertices, {iterations} iterations, residual {residual:e}");
        if residual > tol {
            return Err(Error::NotConverged {
                iterations,
                residual,
            });
        }
        for (v, slot) in part.free.iter().enumerate() {
            if let Some(i) = slot {
                values[v] = Complex64::new(x[2 * i], x[2 * i + 1]);
            }
        }
    }
    let f = Cochain::from_values(graph, 0, values)?;
    let report = SolveReport {
        method: "least-conformal-energy".into(),
        unknowns: 2 * m,
        pins: pins.len(),
        iterations,
        residual,
        energies: operators::energies(structure, &f)?,
    };
    Ok((f, report))
}

/// Best similitude `z ↦ a z + b` from `source` onto `target` in the least
/// squares sense, with the RMS of the residual.
pub fn fit_similitude(source: &[Complex64], target: &[Complex64]) -> Result<(Complex64, Complex64, f64)> {
    if source.len() != target.len() {
        return Err(Error::LengthMismatch {
            expected: source.len(),
            found: target.len(),
        });
    }
    if source.is_empty() {
        return Err(Error::EmptyInput);
    }
    let count = source.len() as f64;
    let ms = source.iter().sum::<Complex64>() / count;
    let mt = target.iter().sum::<Complex64>() / count;
    let (mut num, mut den) = (Complex64::new(0.0, 0.0), 0.0);
    for (s, t) in source.iter().zip(target) {
        num += (s - ms).conj() * (t - mt);
        den += (s - ms).norm_sqr();
    }
    if den == 0.0 {
        return Err(Error::SingularSystem("source points coincide".into()));
    }
    let a = num / den;
    let b = mt - a * ms;
    let rms = (source
        .iter()
        .zip(target)
        .map(|(s, t)| (a * s + b - t).norm_sqr())
        .sum::<f64>()
        / count)
        .sqrt();
    Ok((a, b, rms))
}

/// The Laplacian used by [`solve_dirichlet`] for the given choice.
pub fn laplacian_for(structure: &ConformalStructure, choice: LaplacianChoice) -> Result<SparseOperator> {
    match choice {
        LaplacianChoice::Real => operators::laplacian_closed_real(structure),
        LaplacianChoice::Complex => operators::laplacian_closed_complex(structure),
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::conformal::{compute_rho, tangent_frame, NormalField, Tolerances};
    use crate::graph::build_double_graph;
    use crate::shapes;
    use crate::surface::{CornerId, SurfelSurface};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn face_structure(s: &SurfelSurface) -> ConformalStructure {
        let g = Arc::new(build_double_graph(s).unwrap());
        compute_rho(g, &NormalField::face_normals(s), Tolerances::default()).unwrap()
    }

    fn plane_structure(n: i64) -> ConformalStructure {
        let s = shapes::standard_plane_patch(n).unwrap();
        let normals = NormalField::constant(&s, shapes::standard_plane_normal()).unwrap();
        let g = Arc::new(build_double_graph(&s).unwrap());
        compute_rho(g, &normals, Tolerances::default()).unwrap()
    }

    fn corner(structure: &ConformalStructure, v: usize) -> CornerId {
        match structure.graph().vertex(v).key {
            VertexKey::Corner(c) => c,
            VertexKey::Virtual(_) => panic!("virtual vertex"),
        }
    }

    /// `z = x + iy` of a corner of the flat patch.
    fn planar(structure: &ConformalStructure, v: usize) -> Complex64 {
        let p = corner(structure, v);
        c(p.cx as f64, p.cy as f64)
    }

    /// Orthogonal projection of every corner onto the standard plane.
    fn projection(structure: &ConformalStructure) -> Vec<Complex64> {
        let n = shapes::standard_plane_normal();
        let (u, w) = tangent_frame(n);
        (0..structure.graph().vertex_count())
            .map(|v| {
                let p = corner(structure, v).position();
                let dot = |a: [f64; 3]| a[0] * p[0] + a[1] * p[1] + a[2] * p[2];
                c(dot(u), dot(w))
            })
            .collect()
    }

    #[test]
    fn constants_are_reproduced() {
        let st = face_structure(&shapes::flat_patch(4, 4).unwrap());
        let value = c(2.5, -1.0);
        let bc = BoundaryCondition::from_fn(boundary_vertices(st.graph()), |_| value);
        for choice in [LaplacianChoice::Real, LaplacianChoice::Complex] {
            let (f, report) = solve_dirichlet(&st, choice, &bc, DEFAULT_TOL).unwrap();
            assert!(f.values.iter().all(|z| (z - value).norm() < 1e-12));
            assert!(report.energies.dirichlet < 1e-20);
        }
    }

    #[test]
    fn real_part_of_z_is_harmonic_on_flat_patch() {
        let st = face_structure(&shapes::flat_patch(6, 5).unwrap());
        let bc = BoundaryCondition::from_fn(boundary_vertices(st.graph()), |v| c(planar(&st, v).re, 0.0));
        let (f, report) = solve_dirichlet(&st, LaplacianChoice::Real, &bc, DEFAULT_TOL).unwrap();
        assert!(report.unknowns > 0);
        for v in 0..st.graph().vertex_count() {
            assert!((f.values[v] - planar(&st, v).re).norm() < 1e-10);
        }
        let lap = harmonicity_report(&st, &f).unwrap();
        for v in 0..lap.len() {
            if bc.get(v).is_none() {
                assert!(lap[v] <= 1e-10);
            }
        }
    }

    #[test]
    fn missing_component_pin_is_singular() {
        let st = face_structure(&shapes::single_voxel());
        // pin only black corners: the white component floats
        let black: Vec<usize> = (0..8)
            .filter(|&v| st.graph().vertex(v).color == crate::surface::Color::Black)
            .collect();
        let bc = BoundaryCondition::from_fn(black, |_| c(1.0, 0.0));
        let err = solve_dirichlet(&st, LaplacianChoice::Real, &bc, DEFAULT_TOL).unwrap_err();
        assert_eq!(err.kind(), "SingularSystem");
    }

    #[test]
    fn real_laplacian_refuses_complex_structure() {
        let g = Arc::new(build_double_graph(&shapes::single_voxel()).unwrap());
        let st = ConformalStructure::from_primal_rho(g, &[c(1.0, 0.3); 6], Tolerances::default()).unwrap();
        let bc = BoundaryCondition::from_fn(0..2, |_| c(0.0, 0.0));
        let err = solve_dirichlet(&st, LaplacianChoice::Real, &bc, DEFAULT_TOL).unwrap_err();
        assert_eq!(err.kind(), "NotRealStructure");
    }

    #[test]
    fn real_structure_gives_real_output() {
        let st = face_structure(&shapes::flat_patch(5, 5).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bc = BoundaryCondition::from_fn(boundary_vertices(st.graph()), |_| c(rng.gen_range(-1.0..1.0), 0.0));
        let (f, _) = solve_dirichlet(&st, LaplacianChoice::Real, &bc, DEFAULT_TOL).unwrap();
        assert!(f.values.iter().all(|z| z.im.abs() <= 1e-12));
    }

    #[test]
    fn identity_is_recovered_on_flat_patch() {
        let st = face_structure(&shapes::flat_patch(6, 6).unwrap());
        let graph = st.graph();
        let a = graph.vertex_index(VertexKey::Corner(CornerId::new(0, 0, 1))).unwrap();
        let b = graph.vertex_index(VertexKey::Corner(CornerId::new(6, 6, 1))).unwrap();
        let pins = BoundaryCondition::from_fn([a, b], |v| planar(&st, v));
        let (f, report) = parametrize(&st, &pins, DEFAULT_TOL).unwrap();
        for v in 0..graph.vertex_count() {
            assert!((f.values[v] - planar(&st, v)).norm() < 1e-10, "vertex {v}");
        }
        assert!(report.energies.conformal <= 1e-20);
    }

    #[test]
    fn one_pin_is_underconstrained() {
        let st = face_structure(&shapes::flat_patch(2, 2).unwrap());
        let pins = BoundaryCondition::from_fn([0], |_| c(0.0, 0.0));
        assert!(matches!(
            parametrize(&st, &pins, DEFAULT_TOL),
            Err(Error::Underconstrained { pins: 1 })
        ));
    }

    #[test]
    fn standard_plane_parametrization_matches_projection() {
        let st = plane_structure(8);
        let z = projection(&st);
        let pins = BoundaryCondition::from_fn([0, st.graph().vertex_count() - 1], |v| z[v]);
        let (f, report) = parametrize(&st, &pins, DEFAULT_TOL).unwrap();
        assert!(report.energies.conformal <= 1e-16 * report.energies.dirichlet);
        let (_, _, rms) = fit_similitude(&z, &f.values).unwrap();
        assert!(rms <= 1e-8, "rms {rms:e}");
    }

    #[test]
    fn parametrization_beats_projection_on_curved_patch() {
        // a staircase of the standard plane with smoothed normals is not flat
        let s = shapes::standard_plane_patch(5).unwrap();
        let normals = crate::conformal::estimate_normals(&s, 1);
        let g = Arc::new(build_double_graph(&s).unwrap());
        let st = compute_rho(g, &normals, Tolerances::default()).unwrap();
        let z = projection(&st);
        let pins = BoundaryCondition::from_fn([0, st.graph().vertex_count() - 1], |v| z[v]);
        let (_, report) = parametrize(&st, &pins, DEFAULT_TOL).unwrap();
        let reference = operators::energies(&st, &Cochain::from_values(st.graph(), 0, z).unwrap()).unwrap();
        assert!(report.energies.conformal <= reference.conformal * (1.0 + 1e-9) + 1e-14);
    }

    #[test]
    fn gauge_covariance() {
        let st = plane_structure(4);
        let z = projection(&st);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noisy: Vec<Complex64> = z.iter().map(|w| w + c(rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2))).collect();
        let pinned = [0, 5, st.graph().vertex_count() - 1];
        let pins = BoundaryCondition::from_fn(pinned, |v| noisy[v]);
        let (f, report) = parametrize(&st, &pins, DEFAULT_TOL).unwrap();
        let (a, b) = (c(0.7, -1.2), c(3.0, 0.5));
        let moved = BoundaryCondition::from_fn(pinned, |v| a * noisy[v] + b);
        let (g, moved_report) = parametrize(&st, &moved, DEFAULT_TOL).unwrap();
        let scale = a.norm_sqr();
        assert!((moved_report.energies.conformal - scale * report.energies.conformal).abs() <= 1e-9 * moved_report.energies.conformal.max(1e-12));
        for v in 0..f.len() {
            assert!((g.values[v] - (a * f.values[v] + b)).norm() < 1e-8);
        }
    }

    #[test]
    fn similitude_fit_recovers_parameters() {
        let src = [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 2.0), c(-1.0, 1.0)];
        let (a, b) = (c(0.5, 2.0), c(-3.0, 1.0));
        let dst: Vec<Complex64> = src.iter().map(|s| a * s + b).collect();
        let (fa, fb, rms) = fit_similitude(&src, &dst).unwrap();
        assert!((fa - a).norm() < 1e-14 && (fb - b).norm() < 1e-14 && rms < 1e-14);
    }

    #[test]
    fn harmonicity_of_constants_and_random_functions() {
        let st = face_structure(&shapes::single_voxel());
        let constant = Cochain::constant(st.graph(), 0, c(1.0, 2.0));
        assert!(harmonicity_report(&st, &constant).unwrap().iter().all(|&x| x == 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = Cochain::from_fn(st.graph(), |_| c(rng.gen(), rng.gen()));
        assert!(harmonicity_report(&st, &f).unwrap().iter().any(|&x| x > 1e-3));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn maximum_principle(seed in any::<u64>()) {
            let s = shapes::flat_patch(5, 4).unwrap();
            let g = Arc::new(build_double_graph(&s).unwrap());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho: Vec<Complex64> = (0..g.quad_count()).map(|_| c(rng.gen_range(0.1..10.0), 0.0)).collect();
            let st = ConformalStructure::from_primal_rho(g, &rho, Tolerances::default()).unwrap();
            let bc = BoundaryCondition::from_fn(boundary_vertices(st.graph()), |_| c(rng.gen_range(-5.0..5.0), 0.0));
            let (lo, hi) = bc.iter().fold((f64::MAX, f64::MIN), |(lo, hi), (_, z)| (lo.min(z.re), hi.max(z.re)));
            let (f, _) = solve_dirichlet(&st, LaplacianChoice::Real, &bc, DEFAULT_TOL).unwrap();
            for z in &f.values {
                prop_assert!(z.re >= lo - 1e-12 && z.re <= hi + 1e-12);
            }
        }
    }
}
