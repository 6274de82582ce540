//! Instance builders shared by the integration tests.
#![allow(dead_code)]

use drsub_core::instances::{erdos_renyi, location_stream, location_constraint, revenue_constraint, LocationParams};
use drsub_core::objectives::{make_qp_instance, LocationObjective, QpDistribution, QuadraticObjective, RevenueObjective};
use drsub_core::polytope::{Decomposition, HPolytope, Halfspace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Packing QP on the unit box: `N = {0}`, `D` the packing rows.
pub fn qp(n: usize, seed: u64) -> (QuadraticObjective<f64>, Decomposition<f64>) {
    let inst = make_qp_instance::<f64>(n, n, QpDistribution::Uniform, seed).unwrap();
    (inst.objective, inst.decomposition)
}

/// Same objective, `D = {0}` and `N` the packing rows plus a floor on the
/// coordinate sum at `frac` of its largest feasible value.
pub fn general_qp(n: usize, seed: u64, frac: f64) -> (QuadraticObjective<f64>, Decomposition<f64>) {
    let (obj, dec) = qp(n, seed);
    let packing = dec.down();
    let top = packing.maximize_linear(&vec![1.0; n]).unwrap().objective;
    let mut rows: Vec<Halfspace<f64>> = packing.rows().to_vec();
    rows.push(Halfspace::le((0..n).map(|j| (j, -1.0)).collect(), -frac * top));
    let general = HPolytope::new(n, rows, false).unwrap();
    (obj, Decomposition::new(general, HPolytope::origin(n)).unwrap())
}

/// `N` with a sum floor from [`general_qp`] and `D` the packing body scaled by a half.
pub fn mixed_qp(n: usize, seed: u64) -> (QuadraticObjective<f64>, Decomposition<f64>) {
    let (obj, dec) = qp(n, seed);
    let top = dec.down().maximize_linear(&vec![1.0; n]).unwrap().objective;
    let general = HPolytope::new(
        n,
        vec![Halfspace::eq((0..n).map(|j| (j, 1.0)).collect(), 0.3 * top.min(1.0))],
        false,
    )
    .unwrap();
    let halved: Vec<Halfspace<f64>> = dec
        .down()
        .rows()
        .iter()
        .map(|h| Halfspace::le(h.coeffs.clone(), 0.5 * h.rhs))
        .collect();
    let down = HPolytope::new(n, halved, true).unwrap();
    (obj, Decomposition::new(general, down).unwrap())
}

/// Weighted `G(n, 0.4)` revenue with `p = 0.3` under the band constraint.
pub fn revenue(n: usize, seed: u64) -> (RevenueObjective<f64>, Decomposition<f64>) {
    let mut r = rng(seed);
    let g = erdos_renyi::<f64, _>(n, 0.4, true, &mut r).unwrap().revenue(0.3).unwrap();
    (g, revenue_constraint(n).unwrap())
}

/// One synthetic user over `n` locations under the `1 <= ‖x‖₁ <= 2` band.
pub fn location(n: usize, seed: u64) -> (LocationObjective<f64>, Decomposition<f64>) {
    let params = LocationParams {
        locations: n,
        ..LocationParams::default()
    };
    let mut r = rng(seed);
    let obj = location_stream::<f64, _>(&params, 1, &mut r).unwrap().pop().unwrap();
    (obj, location_constraint(n).unwrap())
}

/// Random concave-ish quadratic with non-positive Hessian and an offset that
/// keeps it non-negative on the box.
pub fn box_quadratic(n: usize, seed: u64) -> QuadraticObjective<f64> {
    let mut r = rng(seed);
    let mut hess = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = -r.random::<f64>();
            hess[i * n + j] = v;
            hess[j * n + i] = v;
        }
    }
    let lin: Vec<f64> = (0..n).map(|_| r.random_range(0.0..1.5)).collect();
    let offset = drsub_core::objectives::qp_offset(&hess, &lin, &vec![1.0; n]).unwrap();
    QuadraticObjective::new(n, hess, lin, offset).unwrap()
}

pub fn random_point<R: Rng>(n: usize, r: &mut R) -> Vec<f64> {
    (0..n).map(|_| r.random::<f64>()).collect()
}
