//! Operator-splitting engine for the constrained reconstruction
//!
//!   minimize   ‖(FΘ − P)D‖₂ + Σ_n θ_nᵀ R θ_n
//!   subject to each Fock-level row of Θ on the probability simplex,
//!
//! where the data term carries the (unsquared) Frobenius norm, D is an
//! optional positive column weighting and R a quadratic penalty (smoothing
//! or damping).
//!
//! Splitting: introduce E = (FΘ − P)D and a feasible copy Z = Θ. The
//! Θ-update is a cached Cholesky solve, the E-update the Frobenius-norm
//! shrinkage, the Z-update the exact per-row simplex projection. The
//! penalty parameter is rebalanced only during the first iterations and
//! then frozen, which makes the combined step-norm residual monotonically
//! nonincreasing afterwards (the fixed-ρ iteration is an averaged
//! operator).

use nalgebra::{Cholesky, DMatrix, Dyn};

use super::simplex;

/// Data of one reconstruction instance.
pub(crate) struct SplitProblem {
    /// FᵀF.
    pub gram: DMatrix<f64>,
    /// FᵀP.
    pub cross: DMatrix<f64>,
    /// Quadratic penalty matrix R, (M+1)×(M+1).
    pub reg: DMatrix<f64>,
    /// Per-outcome residual weights d_n (all 1 when unweighted).
    pub col_weight: Vec<f64>,
    pub response: DMatrix<f64>,
    pub stats: DMatrix<f64>,
}

impl SplitProblem {
    pub fn new(
        response: DMatrix<f64>,
        stats: DMatrix<f64>,
        reg: DMatrix<f64>,
        col_weight: Vec<f64>,
    ) -> Self {
        let gram = response.transpose() * &response;
        let cross = response.transpose() * &stats;
        Self { gram, cross, reg, col_weight, response, stats }
    }

    pub fn rows(&self) -> usize {
        self.gram.nrows()
    }

    pub fn cols(&self) -> usize {
        self.cross.ncols()
    }

    fn uniform_weights(&self) -> bool {
        let w0 = self.col_weight[0];
        self.col_weight.iter().all(|&w| w == w0)
    }

    /// Weighted residual matrix (FΘ − P)D.
    fn weighted_residual(&self, theta: &DMatrix<f64>) -> DMatrix<f64> {
        let mut resid = &self.response * theta - &self.stats;
        for (n, &w) in self.col_weight.iter().enumerate() {
            if w != 1.0 {
                resid.column_mut(n).scale_mut(w);
            }
        }
        resid
    }

    /// Full objective ‖(FΘ − P)D‖₂ + Σ_n θ_nᵀ R θ_n.
    pub fn objective(&self, theta: &DMatrix<f64>) -> f64 {
        let mut val = self.weighted_residual(theta).norm();
        for n in 0..self.cols() {
            let t = theta.column(n);
            val += (t.transpose() * &self.reg * t)[(0, 0)];
        }
        val
    }

    /// Unweighted data residual ‖FΘ − P‖₂ (the reported quantity).
    pub fn data_residual(&self, theta: &DMatrix<f64>) -> f64 {
        (&self.response * theta - &self.stats).norm()
    }
}

pub(crate) struct AdmmSettings {
    pub eps_primal: f64,
    pub eps_dual: f64,
    pub max_iterations: usize,
    pub record_history: bool,
}

pub(crate) struct AdmmOutcome {
    /// Feasible solution (every row exactly on the simplex).
    pub solution: DMatrix<f64>,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub converged: bool,
    pub history: Vec<f64>,
}

/// Iterations during which ρ may be rebalanced; frozen afterwards.
const BALANCE_WINDOW: usize = 100;
const BALANCE_EVERY: usize = 10;
const BALANCE_RATIO: f64 = 10.0;
/// Active-set polish rounds attempted after the splitting loop.
const POLISH_ROUNDS: usize = 4;

struct Factorization {
    factors: Vec<Cholesky<f64, Dyn>>,
    uniform: bool,
}

/// Θ-update matrix K_n = (2/ρ)R + d_n²·FᵀF + I.
fn factorize(problem: &SplitProblem, rho: f64) -> Factorization {
    let m1 = problem.rows();
    let eye = DMatrix::<f64>::identity(m1, m1);
    let build = |w: f64| {
        let mat = &problem.reg * (2.0 / rho) + &problem.gram * (w * w) + &eye;
        Cholesky::new(mat).expect("Θ-update matrix is positive definite")
    };
    if problem.uniform_weights() {
        Factorization { factors: vec![build(problem.col_weight[0])], uniform: true }
    } else {
        Factorization {
            factors: problem.col_weight.iter().map(|&w| build(w)).collect(),
            uniform: false,
        }
    }
}

pub(crate) fn solve(problem: &SplitProblem, settings: &AdmmSettings) -> AdmmOutcome {
    let m1 = problem.rows();
    let n = problem.cols();
    let d = problem.response.nrows();
    let primal_scale = ((d * n + m1 * n) as f64).sqrt();
    let dual_scale = ((m1 * n) as f64).sqrt();
    let total_count = ((d + 2 * m1) * n) as f64;

    let mut rho = 1.0;
    let mut factor = factorize(problem, rho);

    let mut z = DMatrix::from_element(m1, n, 1.0 / n as f64);
    let mut theta = z.clone();
    let mut e = problem.weighted_residual(&theta);
    let mut u_e = DMatrix::<f64>::zeros(d, n);
    let mut u_z = DMatrix::<f64>::zeros(m1, n);

    let mut history = Vec::new();
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    for k in 0..settings.max_iterations {
        iterations = k + 1;

        // Θ-update: K_n θ_n = d_n·Fᵀ(d_n p_n + e_n − uE_n) + z_n − uZ_n
        let mut rhs = DMatrix::<f64>::zeros(m1, n);
        let adj = problem.response.transpose() * (&e - &u_e);
        for c in 0..n {
            let w = problem.col_weight[c];
            let mut col = rhs.column_mut(c);
            col.copy_from(&(problem.cross.column(c) * (w * w)));
            col.axpy(w, &adj.column(c), 1.0);
            col += z.column(c) - u_z.column(c);
        }
        if factor.uniform {
            factor.factors[0].solve_mut(&mut rhs);
        } else {
            for c in 0..n {
                let solved = factor.factors[c].solve(&rhs.column(c).clone_owned());
                rhs.column_mut(c).copy_from(&solved);
            }
        }
        theta = rhs;

        // E-update: Frobenius shrinkage of V = (FΘ − P)D + U_E
        let resid_w = problem.weighted_residual(&theta);
        let v = &resid_w + &u_e;
        let v_norm = v.norm();
        let shrink = if rho * v_norm > 1.0 { 1.0 - 1.0 / (rho * v_norm) } else { 0.0 };
        let e_prev = e;
        e = v * shrink;

        // Z-update: exact row-wise simplex projection
        let z_prev = z.clone();
        z = &theta + &u_z;
        simplex::project_rows(&mut z);

        // dual updates
        let r_e = &resid_w - &e;
        let r_z = &theta - &z;
        u_e += &r_e;
        u_z += &r_z;

        let r_norm = (r_e.norm_squared() + r_z.norm_squared()).sqrt() / primal_scale;
        let delta_e = &e - &e_prev;
        let delta_z = &z - &z_prev;
        let mut dual_vec = problem.response.transpose() * &delta_e;
        for c in 0..n {
            dual_vec.column_mut(c).scale_mut(problem.col_weight[c]);
        }
        dual_vec += &delta_z;
        let s_norm = rho * dual_vec.norm() / dual_scale;
        primal = r_norm;
        dual = s_norm;

        if settings.record_history {
            let step = rho
                * (delta_e.norm_squared()
                    + delta_z.norm_squared()
                    + r_e.norm_squared()
                    + r_z.norm_squared());
            history.push((step / total_count).sqrt());
        }

        if r_norm <= settings.eps_primal && s_norm <= settings.eps_dual {
            converged = true;
            break;
        }

        if k < BALANCE_WINDOW && (k + 1) % BALANCE_EVERY == 0 {
            let mut changed = false;
            if r_norm > BALANCE_RATIO * s_norm {
                rho *= 2.0;
                u_e /= 2.0;
                u_z /= 2.0;
                changed = true;
            } else if s_norm > BALANCE_RATIO * r_norm {
                rho /= 2.0;
                u_e *= 2.0;
                u_z *= 2.0;
                changed = true;
            }
            if changed {
                factor = factorize(problem, rho);
            }
        }
    }

    // z is feasible by construction; polish it on the identified active set.
    let mut best = z;
    let mut best_obj = problem.objective(&best);
    for _ in 0..POLISH_ROUNDS {
        match polish(problem, &best) {
            Some(candidate) => {
                let obj = problem.objective(&candidate);
                if obj < best_obj - 1e-15 * best_obj.abs().max(1.0) {
                    best = candidate;
                    best_obj = obj;
                } else {
                    break;
                }
            }
            None => break,
        }
    }

    AdmmOutcome {
        solution: best,
        iterations,
        primal_residual: primal,
        dual_residual: dual,
        converged,
        history,
    }
}

/// Solve the equality-constrained problem on the active set the projection
/// identified (zeros pinned, row sums one), then re-project. The unsquared
/// data norm is handled by one reweighting step: at weight t = ‖residual‖
/// the norm is modeled by its quadratic majorant ‖·‖²/(2t). The caller
/// keeps the result only if the true objective improves.
fn polish(problem: &SplitProblem, z: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let m1 = problem.rows();
    let n = problem.cols();

    let t = problem.weighted_residual(z).norm().max(1e-12);

    let mut free_index = vec![usize::MAX; m1 * n];
    let mut free_list = Vec::new();
    for c in 0..n {
        for r in 0..m1 {
            if z[(r, c)] > 0.0 {
                free_index[c * m1 + r] = free_list.len();
                free_list.push((r, c));
            }
        }
    }
    let nf = free_list.len();
    if nf == 0 {
        return None;
    }

    let dim = nf + m1;
    let mut kkt = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = nalgebra::DVector::<f64>::zeros(dim);

    // Stationarity of w²/(2t)·‖Fθ − p‖² + θᵀRθ − Σ_k μ_k θ_k on free entries.
    for (eq, &(r, c)) in free_list.iter().enumerate() {
        let w2t = problem.col_weight[c] * problem.col_weight[c] / t;
        for r2 in 0..m1 {
            let idx = free_index[c * m1 + r2];
            if idx != usize::MAX {
                kkt[(eq, idx)] = w2t * problem.gram[(r, r2)] + 2.0 * problem.reg[(r, r2)];
            }
        }
        kkt[(eq, nf + r)] = -1.0;
        rhs[eq] = w2t * problem.cross[(r, c)];
    }
    for r in 0..m1 {
        for c in 0..n {
            let idx = free_index[c * m1 + r];
            if idx != usize::MAX {
                kkt[(nf + r, idx)] = 1.0;
            }
        }
        rhs[nf + r] = 1.0;
    }

    let solution = kkt.lu().solve(&rhs)?;
    if solution.iter().any(|v| !v.is_finite()) {
        return None;
    }

    let mut out = DMatrix::<f64>::zeros(m1, n);
    for (idx, &(r, c)) in free_list.iter().enumerate() {
        out[(r, c)] = solution[idx];
    }
    // The equality solve can step slightly outside the orthant; projection
    // restores exact feasibility.
    simplex::project_rows(&mut out);
    Some(out)
}
