//! Laplacians, scalar products and energies.
//!
//! Sign convention: every Laplacian here follows the weighted averaged
//! difference `Δf(x) = Σ ρ(x, xₖ)(f(x) − f(xₖ))`, which makes its real part
//! positive semidefinite. The closed form for complex structures is the
//! negative of the expression written with `f(xₖ) − f(x)`; operators record
//! this in their metadata under `sign`.

use std::collections::BTreeMap;

use nalgebra_sparse::{CooMatrix, CsrMatrix};
use num_complex::Complex64;
use serde::Serialize;

use crate::conformal::ConformalStructure;
use crate::dec::{self, coboundary, gram_block, hodge_block, hodge_star, Cochain};
use crate::error::{Error, Result};
use crate::graph::DoubleGraph;
use crate::surface::Color;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Tolerance below which `Im ρ` is treated as zero.
pub const REAL_TOL: f64 = 1e-12;

/// A sparse complex matrix whose rows and columns are labelled by cell keys.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    row_keys: Vec<String>,
    col_keys: Vec<String>,
    /// Sorted by `(row, col)`, duplicates summed, exact zeros dropped.
    entries: Vec<(usize, usize, Complex64)>,
    metadata: BTreeMap<String, String>,
}

impl SparseOperator {
    pub fn from_triplets(
        row_keys: Vec<String>,
        col_keys: Vec<String>,
        triplets: impl IntoIterator<Item = (usize, usize, Complex64)>,
    ) -> Self {
        let mut acc: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for (r, c, v) in triplets {
            debug_assert!(r < row_keys.len() && c < col_keys.len());
            *acc.entry((r, c)).or_insert(ZERO) += v;
        }
        let entries = acc
            .into_iter()
            .filter(|(_, v)| *v != ZERO)
            .map(|((r, c), v)| (r, c, v))
            .collect();
        Self {
            row_keys,
            col_keys,
            entries,
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<String>) -> Self {
        self.metadata.insert(key.to_owned(), value.into());
        self
    }

    pub fn nrows(&self) -> usize {
        self.row_keys.len()
    }

    pub fn ncols(&self) -> usize {
        self.col_keys.len()
    }

    pub fn row_keys(&self) -> &[String] {
        &self.row_keys
    }

    pub fn col_keys(&self) -> &[String] {
        &self.col_keys
    }

    pub fn entries(&self) -> &[(usize, usize, Complex64)] {
        &self.entries
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries
            .binary_search_by(|&(r, c, _)| (r, c).cmp(&(row, col)))
            .map(|i| self.entries[i].2)
            .unwrap_or(ZERO)
    }

    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.ncols() {
            return Err(Error::LengthMismatch {
                expected: self.ncols(),
                found: x.len(),
            });
        }
        let mut y = vec![ZERO; self.nrows()];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        Ok(y)
    }

    pub fn to_csr(&self) -> CsrMatrix<Complex64> {
        let mut coo = CooMatrix::new(self.nrows(), self.ncols());
        for &(r, c, v) in &self.entries {
            coo.push(r, c, v);
        }
        CsrMatrix::from(&coo)
    }

    /// The product `self · rhs`.
    pub fn compose(&self, rhs: &SparseOperator) -> Result<SparseOperator> {
        if self.ncols() != rhs.nrows() {
            return Err(Error::LengthMismatch {
                expected: self.ncols(),
                found: rhs.nrows(),
            });
        }
        let product = &self.to_csr() * &rhs.to_csr();
        let triplets = product
            .triplet_iter()
            .map(|(r, c, &v)| (r, c, v))
            .collect::<Vec<_>>();
        Ok(Self::from_triplets(
            self.row_keys.clone(),
            rhs.col_keys.clone(),
            triplets,
        ))
    }

    pub fn scaled(&self, s: Complex64) -> SparseOperator {
        Self::from_triplets(
            self.row_keys.clone(),
            self.col_keys.clone(),
            self.entries.iter().map(|&(r, c, v)| (r, c, v * s)),
        )
        .with_metadata(self.metadata.clone())
    }

    fn with_metadata(mut self, metadata: BTreeMap<String, String>) -> Self {
        self.metadata = metadata;
        self
    }

    /// `max |self − scalar · other|` over all entries.
    pub fn max_deviation(&self, other: &SparseOperator, scalar: Complex64) -> Result<f64> {
        if self.nrows() != other.nrows() || self.ncols() != other.ncols() {
            return Err(Error::LengthMismatch {
                expected: self.nrows() * self.ncols(),
                found: other.nrows() * other.ncols(),
            });
        }
        let mut acc: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for &(r, c, v) in &self.entries {
            *acc.entry((r, c)).or_insert(ZERO) += v;
        }
        for &(r, c, v) in &other.entries {
            *acc.entry((r, c)).or_insert(ZERO) -= scalar * v;
        }
        Ok(acc.values().map(|v| v.norm()).fold(0.0, f64::max))
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.entries.iter().all(|(_, _, v)| v.im.abs() <= tol)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.entries
            .iter()
            .all(|&(r, c, v)| (v - self.get(c, r)).norm() <= tol)
    }

    pub fn row_sums(&self) -> Vec<Complex64> {
        let mut s = vec![ZERO; self.nrows()];
        for &(r, _, v) in &self.entries {
            s[r] += v;
        }
        s
    }
}

fn vertex_keys(graph: &DoubleGraph) -> Vec<String> {
    dec::cell_keys(graph, 0)
}

/// ρ of the diagonal through `v` in quad `q`.
fn own_rho(structure: &ConformalStructure, v: usize, q: usize) -> Complex64 {
    match structure.graph().vertex(v).color {
        Color::Black => structure.rho(DoubleGraph::primal_edge(q)),
        Color::White => structure.rho(DoubleGraph::dual_edge_of_quad(q)),
    }
}

/// The weighted graph Laplacian of a real structure, acting on Γ and Γ*
/// independently.
pub fn laplacian_closed_real(structure: &ConformalStructure) -> Result<SparseOperator> {
    structure.require_real(REAL_TOL)?;
    let graph = structure.graph();
    let mut triplets = Vec::new();
    for v in 0..graph.vertex_count() {
        for &q in &graph.fan(v).quads {
            let [_, _, o, _] = graph.quad(q).rotated_at(v).unwrap();
            let w = Complex64::new(own_rho(structure, v, q).re, 0.0);
            triplets.push((v, v, w));
            triplets.push((v, o, -w));
        }
    }
    let keys = vertex_keys(graph);
    Ok(SparseOperator::from_triplets(keys.clone(), keys, triplets)
        .with_meta("operator", "laplacian_closed_real")
        .with_meta("sign", "+sum rho (f(x) - f(x_k))"))
}

/// The closed-form Laplacian of a complex structure. Around `x₀`, with the
/// sector of quad k running from `yₖ` to `yₖ₊₁` and `xₖ` opposite,
/// `Δf(x₀) = −Σₖ (1/Re ρ)(|ρ|²(f(xₖ) − f(x₀)) + Im ρ (f(yₖ₊₁) − f(yₖ)))`.
pub fn laplacian_closed_complex(structure: &ConformalStructure) -> Result<SparseOperator> {
    structure.require_nonsingular()?;
    let graph = structure.graph();
    let mut triplets = Vec::new();
    for v in 0..graph.vertex_count() {
        for &q in &graph.fan(v).quads {
            let [_, a, o, b] = graph.quad(q).rotated_at(v).unwrap();
            let rho = own_rho(structure, v, q);
            let radial = Complex64::new(rho.norm_sqr() / rho.re, 0.0);
            let tangential = Complex64::new(rho.im / rho.re, 0.0);
            triplets.push((v, o, -radial));
            triplets.push((v, v, radial));
            triplets.push((v, b, -tangential));
            triplets.push((v, a, tangential));
        }
    }
    let keys = vertex_keys(graph);
    Ok(SparseOperator::from_triplets(keys.clone(), keys, triplets)
        .with_meta("operator", "laplacian_closed_complex")
        .with_meta(
            "sign",
            "-sum (1/Re rho)(|rho|^2 (f(x_k) - f(x)) + Im rho (f(y_k+1) - f(y_k)))",
        )
        .with_meta("scalar_vs_compositional", "1"))
}

/// `Δ = −d∗d∗ − ∗d∗d` assembled from the coboundary and Hodge star
/// matrices. On 0-forms `∗f` is a 2-form whose derivative vanishes, so only
/// `−∗d∗d` contributes.
pub fn laplacian_compositional(structure: &ConformalStructure) -> Result<SparseOperator> {
    let graph = structure.graph();
    let d0 = dec::coboundary_matrix(graph, 0)?;
    let d1 = dec::coboundary_matrix(graph, 1)?;
    let star1 = dec::hodge_matrix(structure, 1)?;
    let star2 = dec::hodge_matrix(structure, 2)?;
    let op = star2
        .compose(&d1)?
        .compose(&star1)?
        .compose(&d0)?
        .scaled(Complex64::new(-1.0, 0.0));
    Ok(op
        .with_meta("operator", "laplacian_compositional")
        .with_meta("formula", "-*d*d"))
}

/// `(α, β) = ∬ α ∧ ∗β̄`.
pub fn scalar_product(structure: &ConformalStructure, alpha: &Cochain, beta: &Cochain) -> Result<Complex64> {
    let star = hodge_star(structure, &beta.conj())?;
    Ok(dec::wedge(structure.graph(), alpha, &star)?.total())
}

/// `½ Σₑ ρ(e) ∫ₑα ∫ₑβ̄`, valid for real structures.
pub fn scalar_product_real_sum(
    structure: &ConformalStructure,
    alpha: &Cochain,
    beta: &Cochain,
) -> Result<Complex64> {
    structure.require_real(REAL_TOL)?;
    check_one_forms(structure, alpha, beta)?;
    Ok(0.5
        * (0..structure.graph().edge_count())
            .map(|e| structure.rho(e).re * alpha.values[e] * beta.values[e].conj())
            .sum::<Complex64>())
}

/// The mixed expression of the scalar product for complex structures,
/// `½ Σₑ (∫ₑα / Re ρ)(|ρ|² ∫ₑβ̄ + Im ρ ∫ₑ*β̄)`, where the dual of a primal
/// edge is the dual diagonal and the dual of a dual edge is the reversed
/// primal diagonal.
pub fn scalar_product_mixed(
    structure: &ConformalStructure,
    alpha: &Cochain,
    beta: &Cochain,
) -> Result<Complex64> {
    structure.require_nonsingular()?;
    check_one_forms(structure, alpha, beta)?;
    let mut sum = ZERO;
    for e in 0..structure.graph().edge_count() {
        let rho = structure.rho(e);
        let de = DoubleGraph::dual_edge(e);
        let sign = if e % 2 == 0 { 1.0 } else { -1.0 };
        let beta_dual = sign * beta.values[de].conj();
        sum += alpha.values[e] / rho.re * (rho.norm_sqr() * beta.values[e].conj() + rho.im * beta_dual);
    }
    Ok(0.5 * sum)
}

fn check_one_forms(structure: &ConformalStructure, alpha: &Cochain, beta: &Cochain) -> Result<()> {
    let n = structure.graph().edge_count();
    for c in [alpha, beta] {
        if c.degree != 1 {
            return Err(Error::DimensionError {
                op: "scalar_product",
                degree: c.degree,
            });
        }
        if c.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: c.len(),
            });
        }
    }
    Ok(())
}

/// Dirichlet energy, conformal energy and area of a function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    pub dirichlet: f64,
    pub conformal: f64,
    pub area: f64,
    /// `|E_C − (E_D − 2𝒜)|`.
    pub identity_residual: f64,
}

/// Differences of `f` along the primal and dual diagonal of every quad.
fn diagonal_differences(graph: &DoubleGraph, f: &Cochain) -> Result<Vec<(Complex64, Complex64)>> {
    if f.degree != 0 || f.len() != graph.vertex_count() {
        return Err(Error::LengthMismatch {
            expected: graph.vertex_count(),
            found: f.len(),
        });
    }
    Ok(graph
        .quads()
        .iter()
        .map(|quad| {
            let [x, y, x1, y1] = quad.cycle.map(|v| f.values[v]);
            (x1 - x, y1 - y)
        })
        .collect())
}

fn gram_norm(g: [[f64; 2]; 2], p: Complex64, q: Complex64) -> f64 {
    g[0][0] * p.norm_sqr() + 2.0 * g[0][1] * (p * q.conj()).re + g[1][1] * q.norm_sqr()
}

/// Per-quad energies `(E_D, E_C, 𝒜)`.
pub fn energy_densities(structure: &ConformalStructure, f: &Cochain) -> Result<Vec<[f64; 3]>> {
    structure.require_nonsingular()?;
    let diffs = diagonal_differences(structure.graph(), f)?;
    let i = Complex64::i();
    Ok(diffs
        .iter()
        .enumerate()
        .map(|(q, &(p, d))| {
            let rho = structure.primal_rho(q);
            let g = gram_block(rho);
            let h = hodge_block(rho);
            let sp = h[0][0] * p + h[0][1] * d;
            let sd = h[1][0] * p + h[1][1] * d;
            let dirichlet = gram_norm(g, p, d);
            let conformal = 0.5 * gram_norm(g, p - i * sp, d - i * sd);
            let area = -0.5 * (p * d.conj()).im;
            [dirichlet, conformal, area]
        })
        .collect())
}

pub fn energies(structure: &ConformalStructure, f: &Cochain) -> Result<EnergyReport> {
    let densities = energy_densities(structure, f)?;
    let mut total = [0.0; 3];
    for d in &densities {
        for k in 0..3 {
            total[k] += d[k];
        }
    }
    let [dirichlet, conformal, area] = total;
    Ok(EnergyReport {
        dirichlet,
        conformal,
        area,
        identity_residual: (conformal - (dirichlet - 2.0 * area)).abs(),
    })
}

/// The Dirichlet energy written edge by edge with the ratio of dual
/// differences, `½ Σₑ |Δₑf|²/Re ρ (|ρ|² + Im ρ conj(Δₑ*f)/conj(Δₑf))`.
/// Individual terms are complex; only the sum is real. Terms with `Δₑf = 0`
/// contribute their limit, zero.
pub fn dirichlet_literal(structure: &ConformalStructure, f: &Cochain) -> Result<Complex64> {
    structure.require_nonsingular()?;
    let graph = structure.graph();
    let df = coboundary(graph, f)?;
    let mut sum = ZERO;
    for e in 0..graph.edge_count() {
        let rho = structure.rho(e);
        let diff = df.values[e];
        if diff == ZERO {
            continue;
        }
        let sign = if e % 2 == 0 { 1.0 } else { -1.0 };
        let dual_diff = sign * df.values[DoubleGraph::dual_edge(e)];
        sum += diff.norm_sqr() / rho.re * (rho.norm_sqr() + rho.im * dual_diff.conj() / diff.conj());
    }
    Ok(0.5 * sum)
}

/// Usual Dirichlet energy of the restriction of `f` to the graph of one color.
pub fn graph_dirichlet(structure: &ConformalStructure, f: &Cochain, color: Color) -> Result<f64> {
    let graph = structure.graph();
    let df = coboundary(graph, f)?;
    Ok((0..graph.edge_count())
        .filter(|&e| graph.edge_color(e) == color)
        .map(|e| structure.rho(e).re * df.values[e].norm_sqr())
        .sum())
}

/// `|E_D(f) − (E_D(f|Γ) + E_D(f|Γ*))/2|` for a real structure.
pub fn dirichlet_split_check(structure: &ConformalStructure, f: &Cochain) -> Result<f64> {
    structure.require_real(REAL_TOL)?;
    let total = energies(structure, f)?.dirichlet;
    let black = graph_dirichlet(structure, f, Color::Black)?;
    let white = graph_dirichlet(structure, f, Color::White)?;
    Ok((total - 0.5 * (black + white)).abs())
}
