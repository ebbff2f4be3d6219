//! Exact Euclidean projection onto the probability simplex.
//!
//! The diagonal POVM parametrization turns operator positivity and
//! completeness into per-Fock-level simplex membership, so this projection
//! is the entire constraint handling of the reconstruction solver.

use nalgebra::DMatrix;

/// Project `v` in place onto {θ : θ ≥ 0, Σθ = 1} (sort-based exact
/// algorithm). Ties at the zero threshold resolve deterministically because
/// the projection itself is unique and entries are processed in index order.
pub fn project_row(v: &mut [f64]) {
    let n = v.len();
    debug_assert!(n > 0);
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.partial_cmp(a).expect("finite projection input"));
    let mut cumulative = 0.0;
    let mut tau = sorted[0] - 1.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            tau = candidate;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - tau).max(0.0);
    }
}

/// Project every row of `m` onto the simplex.
pub fn project_rows(m: &mut DMatrix<f64>) {
    let cols = m.ncols();
    let mut buf = vec![0.0; cols];
    for i in 0..m.nrows() {
        for (j, b) in buf.iter_mut().enumerate() {
            *b = m[(i, j)];
        }
        project_row(&mut buf);
        for (j, &b) in buf.iter().enumerate() {
            m[(i, j)] = b;
        }
    }
}
