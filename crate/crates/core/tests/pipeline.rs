//! Text input through extraction, structure, solve and text output.

use std::sync::Arc;

use num_complex::Complex64;

use surfel_riemann::conformal::{compute_rho, NormalField, Tolerances};
use surfel_riemann::graph::{build_double_graph, VertexKey};
use surfel_riemann::io;
use surfel_riemann::operators;
use surfel_riemann::solver::{self, BoundaryCondition, LaplacianChoice};
use surfel_riemann::surface::{euler_genus, extract_surface, SurfelSurface};
use surfel_riemann::Error;

#[test]
fn torus_from_text_has_genus_one() {
    // a 3×3 ring of voxels with the centre missing
    let text: String = (0..3)
        .flat_map(|x| (0..3).map(move |y| (x, y)))
        .filter(|&(x, y)| (x, y) != (1, 1))
        .map(|(x, y)| format!("{x} {y} 0\n"))
        .collect();
    let surface = extract_surface(io::parse_voxels(&text).unwrap()).unwrap();
    let topo = euler_genus(&surface);
    assert_eq!(topo.genus, Some(1));
    assert_eq!(topo.euler_characteristic, 0);
}

#[test]
fn slab_energies_and_dirichlet_solve() {
    let surface = extract_surface(io::parse_voxels("0 0 0\n1 0 0\n2 0 0\n").unwrap()).unwrap();
    let normals = NormalField::face_normals(&surface);
    let graph = Arc::new(build_double_graph(&surface).unwrap());
    let st = compute_rho(graph.clone(), &normals, Tolerances::default()).unwrap();

    // pin one vertex of each colour component; the rest is harmonic
    let pins: Vec<_> = graph
        .color_components()
        .iter()
        .enumerate()
        .map(|(k, comp)| (graph.vertex(comp[0]).key, Complex64::new(k as f64, 1.0)))
        .collect();
    let bc = BoundaryCondition::from_keys(&graph, pins).unwrap();
    let (f, report) = solver::solve_dirichlet(&st, LaplacianChoice::Real, &bc, solver::DEFAULT_TOL).unwrap();
    // a single pin per component forces the constant
    for comp in graph.color_components() {
        let first = f.values[comp[0]];
        assert!(comp.iter().all(|&v| (f.values[v] - first).norm() < 1e-10));
    }
    assert!(report.energies.dirichlet < 1e-20);

    let written = io::write_cochain(&graph, &f);
    let back = io::parse_cochain(&graph, 0, &written).unwrap();
    assert_eq!(back.values, f.values);
    let e = operators::energies(&st, &back).unwrap();
    assert!(e.dirichlet.abs() < 1e-20);
}

#[test]
fn surfel_file_round_trip_through_parametrize() {
    let mut text = String::new();
    for i in 0..4 {
        for j in 0..3 {
            text.push_str(&format!("{i} {j} 0 +Z\n"));
        }
    }
    let (surfels, normals) = io::parse_surfels(&text).unwrap();
    let surface = SurfelSurface::from_surfels(surfels).unwrap();
    let normals = if normals.is_empty() { NormalField::face_normals(&surface) } else { normals };
    let graph = Arc::new(build_double_graph(&surface).unwrap());
    let st = compute_rho(graph.clone(), &normals, Tolerances::default()).unwrap();

    let pins = io::parse_pins("0,0,1=0,0;4,3,1=4,3").unwrap();
    let bc = BoundaryCondition::from_keys(&graph, pins.into_iter().map(|(c, z)| (VertexKey::Corner(c), z))).unwrap();
    let (f, _) = solver::parametrize(&st, &bc, solver::DEFAULT_TOL).unwrap();
    let csv = io::write_solution(&graph, &f).unwrap();
    for line in csv.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((v[3] - v[0]).abs() < 1e-9 && (v[4] - v[1]).abs() < 1e-9, "{line}");
    }
}

#[test]
fn unknown_pin_corner_is_reported() {
    let surface = extract_surface(io::parse_voxels("0 0 0").unwrap()).unwrap();
    let graph = build_double_graph(&surface).unwrap();
    let pins = io::parse_pins("5,5,5=0,0").unwrap();
    let err = BoundaryCondition::from_keys(&graph, pins.into_iter().map(|(c, z)| (VertexKey::Corner(c), z)));
    assert!(matches!(err, Err(Error::UnknownCell(_))));
}
