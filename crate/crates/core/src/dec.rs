//! Discrete exterior calculus on Λ.
//!
//! Cochains are dense complex vectors over the canonical cell order of the
//! double graph: vertices for 0-forms, edges `2q`/`2q + 1` for 1-forms and
//! faces (indexed by their dual vertex) for 2-forms. Two-forms produced by
//! the wedge product live on the quads of ◊ instead and are kept apart as
//! [`QuadForm`].

use log::warn;
use num_complex::Complex64;
use serde::Serialize;

use crate::conformal::ConformalStructure;
use crate::error::{Error, Result};
use crate::graph::DoubleGraph;
use crate::operators::SparseOperator;
use crate::surface::Color;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A complex k-cochain on Λ.
#[derive(Debug, Clone, PartialEq)]
pub struct Cochain {
    pub degree: usize,
    pub values: Vec<Complex64>,
}

impl Cochain {
    pub fn zero(graph: &DoubleGraph, degree: usize) -> Self {
        Self {
            degree,
            values: vec![ZERO; graph.cell_count(degree)],
        }
    }

    pub fn from_values(graph: &DoubleGraph, degree: usize, values: Vec<Complex64>) -> Result<Self> {
        if degree > 2 {
            return Err(Error::DimensionError {
                op: "cochain",
                degree,
            });
        }
        let expected = graph.cell_count(degree);
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                found: values.len(),
            });
        }
        Ok(Self { degree, values })
    }

    pub fn constant(graph: &DoubleGraph, degree: usize, c: Complex64) -> Self {
        Self {
            degree,
            values: vec![c; graph.cell_count(degree)],
        }
    }

    /// A 0-form given by a function of the vertex index.
    pub fn from_fn(graph: &DoubleGraph, f: impl FnMut(usize) -> Complex64) -> Self {
        Self {
            degree: 0,
            values: (0..graph.vertex_count()).map(f).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|z| z * s)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            degree: self.degree,
            values: self.values.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn zip_with(
        &self,
        other: &Self,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self> {
        if self.degree != other.degree || self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(Self {
            degree: self.degree,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Sup norm.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Pairing with a chain of the same degree.
    pub fn evaluate(&self, chain: &crate::graph::Chain) -> Result<Complex64> {
        if chain.degree != self.degree || chain.coeffs.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: chain.coeffs.len(),
            });
        }
        Ok(chain
            .coeffs
            .iter()
            .zip(&self.values)
            .map(|(a, b)| a * b)
            .sum())
    }
}

/// A 2-form on the quads of ◊.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadForm {
    pub values: Vec<Complex64>,
}

impl QuadForm {
    /// The integral over the whole surface.
    pub fn total(&self) -> Complex64 {
        self.values.iter().sum()
    }
}

fn check_degree(c: &Cochain, graph: &DoubleGraph, degree: usize, op: &'static str) -> Result<()> {
    if c.degree != degree {
        return Err(Error::DimensionError {
            op,
            degree: c.degree,
        });
    }
    let expected = graph.cell_count(degree);
    if c.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            found: c.len(),
        });
    }
    Ok(())
}

/// Integrals of a 1-form over the primal and dual diagonal of quad `q`.
#[inline]
fn pair(alpha: &Cochain, q: usize) -> (Complex64, Complex64) {
    (alpha.values[2 * q], alpha.values[2 * q + 1])
}

/// The exterior derivative, defined by Stokes' formula.
pub fn coboundary(graph: &DoubleGraph, c: &Cochain) -> Result<Cochain> {
    match c.degree {
        0 => {
            check_degree(c, graph, 0, "coboundary")?;
            let values = (0..graph.edge_count())
                .map(|e| {
                    let (t, h) = graph.edge_ends(e);
                    c.values[h] - c.values[t]
                })
                .collect();
            Ok(Cochain { degree: 1, values })
        }
        1 => {
            check_degree(c, graph, 1, "coboundary")?;
            let values = (0..graph.face_count())
                .map(|v| {
                    graph
                        .face_boundary(v)
                        .into_iter()
                        .map(|(e, s)| c.values[e] * s)
                        .sum()
                })
                .collect();
            Ok(Cochain { degree: 2, values })
        }
        degree => Err(Error::DimensionError {
            op: "coboundary",
            degree,
        }),
    }
}

/// Matrix of `d` on k-cochains.
pub fn coboundary_matrix(graph: &DoubleGraph, degree: usize) -> Result<SparseOperator> {
    let mut triplets = Vec::new();
    match degree {
        0 => {
            for e in 0..graph.edge_count() {
                let (t, h) = graph.edge_ends(e);
                triplets.push((e, h, ONE));
                triplets.push((e, t, -ONE));
            }
        }
        1 => {
            for v in 0..graph.face_count() {
                for (e, s) in graph.face_boundary(v) {
                    triplets.push((v, e, Complex64::new(s, 0.0)));
                }
            }
        }
        degree => {
            return Err(Error::DimensionError {
                op: "coboundary",
                degree,
            })
        }
    }
    Ok(SparseOperator::from_triplets(
        cell_keys(graph, degree + 1),
        cell_keys(graph, degree),
        triplets,
    ))
}

pub(crate) fn cell_keys(graph: &DoubleGraph, degree: usize) -> Vec<String> {
    (0..graph.cell_count(degree))
        .map(|i| graph.cell_key(degree, i))
        .collect()
}

/// Exterior product of two 1-forms, integrated over each quad:
/// `½ (∫ₓₓ' α ∫ᵧᵧ' β − ∫ᵧᵧ' α ∫ₓₓ' β)`.
pub fn wedge(graph: &DoubleGraph, alpha: &Cochain, beta: &Cochain) -> Result<QuadForm> {
    check_degree(alpha, graph, 1, "wedge")?;
    check_degree(beta, graph, 1, "wedge")?;
    let values = (0..graph.quad_count())
        .map(|q| {
            let (ap, aq) = pair(alpha, q);
            let (bp, bq) = pair(beta, q);
            0.5 * (ap * bq - aq * bp)
        })
        .collect();
    Ok(QuadForm { values })
}

/// Real 2×2 matrix of the Hodge star on the pair (primal, dual) of a quad
/// whose primal ratio is `rho = a + ib`:
/// `[[−b/a, −1/a], [|ρ|²/a, b/a]]`.
pub fn hodge_block(rho: Complex64) -> [[f64; 2]; 2] {
    let a = rho.re;
    let b = rho.im;
    [[-b / a, -1.0 / a], [rho.norm_sqr() / a, b / a]]
}

/// Gram matrix of the scalar product on the pair (primal, dual) of a quad:
/// `(α, β) = Σ_q uᵀ G conj(v)` with `u`, `v` the diagonal integrals.
pub fn gram_block(rho: Complex64) -> [[f64; 2]; 2] {
    let a = rho.re;
    let b = rho.im;
    let s = 0.5 / a;
    [[s * rho.norm_sqr(), s * b], [s * b, s]]
}

/// The Hodge star `Cᵏ(Λ) → C²⁻ᵏ(Λ)`.
pub fn hodge_star(structure: &ConformalStructure, c: &Cochain) -> Result<Cochain> {
    let graph = structure.graph();
    match c.degree {
        0 | 2 => {
            check_degree(c, graph, c.degree, "hodge_star")?;
            // faces and vertices share their index
            Ok(Cochain {
                degree: 2 - c.degree,
                values: c.values.clone(),
            })
        }
        1 => {
            check_degree(c, graph, 1, "hodge_star")?;
            structure.require_nonsingular()?;
            let mut values = vec![ZERO; c.len()];
            for q in 0..graph.quad_count() {
                let m = hodge_block(structure.primal_rho(q));
                let (p, d) = pair(c, q);
                values[2 * q] = m[0][0] * p + m[0][1] * d;
                values[2 * q + 1] = m[1][0] * p + m[1][1] * d;
            }
            Ok(Cochain { degree: 1, values })
        }
        degree => Err(Error::DimensionError {
            op: "hodge_star",
            degree,
        }),
    }
}

/// Matrix of the Hodge star on k-cochains.
pub fn hodge_matrix(structure: &ConformalStructure, degree: usize) -> Result<SparseOperator> {
    let graph = structure.graph();
    let mut triplets = Vec::new();
    match degree {
        0 | 2 => {
            for v in 0..graph.vertex_count() {
                triplets.push((v, v, ONE));
            }
        }
        1 => {
            structure.require_nonsingular()?;
            for q in 0..graph.quad_count() {
                let m = hodge_block(structure.primal_rho(q));
                for (i, row) in m.iter().enumerate() {
                    for (j, &x) in row.iter().enumerate() {
                        triplets.push((2 * q + i, 2 * q + j, Complex64::new(x, 0.0)));
                    }
                }
            }
        }
        degree => {
            return Err(Error::DimensionError {
                op: "hodge_star",
                degree,
            })
        }
    }
    Ok(SparseOperator::from_triplets(
        cell_keys(graph, 2 - degree.min(2)),
        cell_keys(graph, degree),
        triplets,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FormType {
    /// `∗α = −iα`
    Holomorphic,
    /// `∗α = +iα`
    AntiHolomorphic,
    Mixed,
}

/// Splits a 1-form into its (1,0) and (0,1) parts.
pub fn type_decompose(structure: &ConformalStructure, alpha: &Cochain) -> Result<(Cochain, Cochain)> {
    let star = hodge_star(structure, alpha)?;
    let i = Complex64::i();
    let a10 = alpha.zip_with(&star, |a, s| 0.5 * (a + i * s))?;
    let a01 = alpha.zip_with(&star, |a, s| 0.5 * (a - i * s))?;
    Ok((a10, a01))
}

/// Classifies a 1-form; parts with sup norm below `tol` count as zero.
pub fn form_type(structure: &ConformalStructure, alpha: &Cochain, tol: f64) -> Result<FormType> {
    let (a10, a01) = type_decompose(structure, alpha)?;
    Ok(match (a10.max_abs() <= tol, a01.max_abs() <= tol) {
        (_, true) => FormType::Holomorphic,
        (true, false) => FormType::AntiHolomorphic,
        (false, false) => FormType::Mixed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolomorphyCheck {
    pub holomorphic: bool,
    /// Largest `|dα|` over closed faces.
    pub closedness: f64,
    /// Largest `|∗α + iα|` over edges.
    pub type_defect: f64,
    pub residual: f64,
}

/// A holomorphic form is a closed form of type (1,0). Faces around boundary
/// vertices are open and do not take part in the closedness test.
pub fn is_holomorphic_form(
    structure: &ConformalStructure,
    alpha: &Cochain,
    tol: f64,
) -> Result<HolomorphyCheck> {
    let graph = structure.graph();
    let d = coboundary(graph, alpha)?;
    let closedness = (0..graph.face_count())
        .filter(|&v| graph.is_face_closed(v))
        .map(|v| d.values[v].norm())
        .fold(0.0, f64::max);
    let star = hodge_star(structure, alpha)?;
    let type_defect = star
        .values
        .iter()
        .zip(&alpha.values)
        .map(|(s, a)| (s + Complex64::i() * a).norm())
        .fold(0.0, f64::max);
    let residual = closedness.max(type_defect);
    Ok(HolomorphyCheck {
        holomorphic: residual <= tol,
        closedness,
        type_defect,
        residual,
    })
}

/// Raw circulation of `alpha` around the face `v*` (no 2πi normalization).
pub fn residue(structure: &ConformalStructure, alpha: &Cochain, v: usize) -> Result<Complex64> {
    let graph = structure.graph();
    check_degree(alpha, graph, 1, "residue")?;
    if v >= graph.face_count() {
        return Err(Error::UnknownCell(format!("face index {v}")));
    }
    let (_, a01) = type_decompose(structure, alpha)?;
    if a01.max_abs() > 1e-9 * alpha.max_abs().max(1.0) {
        warn!("residue of a form that is not of type (1,0)");
    }
    Ok(graph
        .face_boundary(v)
        .into_iter()
        .map(|(e, s)| alpha.values[e] * s)
        .sum())
}

/// Residues at every face of Λ.
pub fn residues(structure: &ConformalStructure, alpha: &Cochain) -> Result<Vec<Complex64>> {
    Ok(coboundary(structure.graph(), alpha)?.values)
}

/// Pushes a 2-form on the faces of Λ to the quads of ◊. Each face `v*` is
/// made of `deg v` half-quads and Λ covers the surface twice.
pub fn faces_to_quads(graph: &DoubleGraph, omega: &Cochain) -> Result<QuadForm> {
    check_degree(omega, graph, 2, "faces_to_quads")?;
    let values = graph
        .quads()
        .iter()
        .map(|quad| {
            quad.cycle
                .iter()
                .map(|&v| omega.values[v] / (2.0 * graph.degree(v) as f64))
                .sum()
        })
        .collect();
    Ok(QuadForm { values })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivationReport {
    /// Largest deviation of `d(fg) = f dg + g df` over edges.
    pub functions: f64,
    /// Largest deviation of `d(fα) = df ∧ α + f dα` over interior quads.
    pub forms: f64,
}

impl DerivationReport {
    pub fn max(&self) -> f64 {
        self.functions.max(self.forms)
    }
}

/// Measures how far the Leibniz rules are from holding under the fixed
/// product conventions: a function times a 1-form uses the average of the
/// function over the edge ends, and a function times a 2-form on a quad uses
/// the average over its four corners.
pub fn check_derivation(
    graph: &DoubleGraph,
    f: &Cochain,
    g: &Cochain,
    alpha: &Cochain,
) -> Result<DerivationReport> {
    check_degree(f, graph, 0, "check_derivation")?;
    check_degree(g, graph, 0, "check_derivation")?;
    check_degree(alpha, graph, 1, "check_derivation")?;
    let times = |h: &Cochain, form: &Cochain| -> Cochain {
        let values = (0..graph.edge_count())
            .map(|e| {
                let (t, s) = graph.edge_ends(e);
                0.5 * (h.values[t] + h.values[s]) * form.values[e]
            })
            .collect();
        Cochain { degree: 1, values }
    };

    let fg = f.zip_with(g, |a, b| a * b)?;
    let df = coboundary(graph, f)?;
    let dg = coboundary(graph, g)?;
    let lhs = coboundary(graph, &fg)?;
    let rhs = times(f, &dg).add(&times(g, &df))?;
    let functions = lhs.sub(&rhs)?.max_abs();

    let lhs = faces_to_quads(graph, &coboundary(graph, &times(f, alpha))?)?;
    let wedge_part = wedge(graph, &df, alpha)?;
    let d_alpha = faces_to_quads(graph, &coboundary(graph, alpha)?)?;
    let mut forms: f64 = 0.0;
    for (q, quad) in graph.quads().iter().enumerate() {
        if !quad.cycle.iter().all(|&v| graph.is_face_closed(v)) {
            continue;
        }
        let f_avg: Complex64 = quad.cycle.iter().map(|&v| f.values[v]).sum::<Complex64>() / 4.0;
        let rhs = wedge_part.values[q] + f_avg * d_alpha.values[q];
        forms = forms.max((lhs.values[q] - rhs).norm());
    }
    Ok(DerivationReport { functions, forms })
}

/// Per-quad defect of the discrete Cauchy–Riemann equation
/// `f(y') − f(y) = iρ(x, x')(f(x') − f(x))`.
pub fn holomorphy_defect(structure: &ConformalStructure, f: &Cochain) -> Result<Vec<Complex64>> {
    let graph = structure.graph();
    check_degree(f, graph, 0, "holomorphy_defect")?;
    Ok(graph
        .quads()
        .iter()
        .enumerate()
        .map(|(q, quad)| {
            let [x, y, x1, y1] = quad.cycle.map(|v| f.values[v]);
            (y1 - y) - Complex64::i() * structure.primal_rho(q) * (x1 - x)
        })
        .collect())
}

/// Indicator 0-form of a color class.
pub fn color_indicator(graph: &DoubleGraph, color: Color) -> Cochain {
    Cochain::from_fn(graph, |v| {
        if graph.vertex(v).color == color {
            ONE
        } else {
            ZERO
        }
    })
}
