//! Fixtures shared by the benchmarks.

use errdom::driver::{base_mesh, Preset};
use errdom::fem::solve_galerkin;
use errdom::{Load, Mesh, P1Function};
use std::sync::Arc;

/// The face-Dirac benchmark load and its Galerkin solution on the initial
/// mesh refined `level` times.
pub fn fixture(level: usize) -> (Arc<Mesh>, Arc<Load>, P1Function) {
    let mesh = Arc::new(base_mesh().refine_uniform_times(level));
    let load = Preset::FaceDirac.load();
    let u = solve_galerkin(&mesh, &load).expect("benchmark problem solves");
    (mesh, load, u)
}
