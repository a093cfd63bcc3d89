//! Operator-splitting solver for `min ½‖x‖²  s.t.  Ax + s = b, s ∈ K`
//! where `K` is a product of nonnegative orthants and second-order cones.

use nalgebra::{Cholesky, DMatrix, DVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cone {
    NonNeg(usize),
    /// `{(t, v) : ‖v‖ ≤ t}` with the given total dimension.
    Soc(usize),
}

impl Cone {
    fn dim(self) -> usize {
        match self {
            Cone::NonNeg(d) | Cone::Soc(d) => d,
        }
    }
}

/// Sparse rows of `A`, right-hand side `b` and the cone layout of `s`.
#[derive(Clone, Debug, Default)]
pub struct ConeProgram {
    pub n: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
    pub b: Vec<f64>,
    pub cones: Vec<Cone>,
}

impl ConeProgram {
    pub fn new(n: usize) -> Self {
        ConeProgram { n, ..Default::default() }
    }

    /// Appends a cone block given as `(row entries, rhs)` pairs.
    pub fn push_cone(&mut self, cone: Cone, rows: Vec<(Vec<(usize, f64)>, f64)>) {
        debug_assert_eq!(cone.dim(), rows.len());
        for (r, b) in rows {
            self.rows.push(r);
            self.b.push(b);
        }
        self.cones.push(cone);
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    fn mul(&self, x: &[f64], out: &mut [f64]) {
        for (o, r) in out.iter_mut().zip(&self.rows) {
            *o = r.iter().map(|&(j, a)| a * x[j]).sum();
        }
    }

    fn mul_t(&self, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (r, &yi) in self.rows.iter().zip(y) {
            if yi != 0.0 {
                for &(j, a) in r {
                    out[j] += a * yi;
                }
            }
        }
    }

    fn gram(&self) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.n, self.n);
        for r in &self.rows {
            for &(i, a) in r {
                for &(j, bb) in r {
                    g[(i, j)] += a * bb;
                }
            }
        }
        g
    }
}

pub fn project_soc(v: &mut [f64]) {
    let t = v[0];
    let nv = v[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
    if nv <= t {
        return;
    }
    if nv <= -t {
        v.iter_mut().for_each(|x| *x = 0.0);
        return;
    }
    let a = 0.5 * (t + nv);
    v[0] = a;
    let s = a / nv;
    v[1..].iter_mut().for_each(|x| *x *= s);
}

fn project_cones(cones: &[Cone], v: &mut [f64]) {
    let mut off = 0;
    for &c in cones {
        let d = c.dim();
        match c {
            Cone::NonNeg(_) => v[off..off + d].iter_mut().for_each(|x| *x = x.max(0.0)),
            Cone::Soc(_) => project_soc(&mut v[off..off + d]),
        }
        off += d;
    }
}

#[derive(Clone, Debug)]
pub struct AdmmSettings {
    pub rho: f64,
    pub alpha: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub eps_infeasible: f64,
    pub max_iter: usize,
    pub check_every: usize,
    pub adapt_every: usize,
    pub max_refactor: usize,
    /// Weight `w` of the objective `½w‖x‖²`; zero turns the solve into a
    /// pure feasibility search.
    pub objective_weight: f64,
    /// Proximal weight on the previous iterate.
    pub sigma: f64,
}

impl Default for AdmmSettings {
    fn default() -> Self {
        AdmmSettings {
            rho: 0.1,
            alpha: 1.6,
            eps_abs: 1e-9,
            eps_rel: 1e-9,
            eps_infeasible: 1e-7,
            max_iter: 20_000,
            check_every: 25,
            adapt_every: 50,
            max_refactor: 12,
            objective_weight: 1.0,
            sigma: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConeStatus {
    Solved,
    /// The caller's acceptance test passed before full convergence.
    Accepted,
    Infeasible,
    MaxIter,
}

/// Iterates that can seed a later solve with the same row layout.
#[derive(Clone, Debug)]
pub struct AdmmState {
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub u: Vec<f64>,
    pub rho: f64,
}

#[derive(Clone, Debug)]
pub struct ConeResult {
    pub status: ConeStatus,
    pub x: Vec<f64>,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub state: AdmmState,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `(wI + σI + ρAᵀA)⁻¹`, kept dense: a matrix-vector product per iteration is
/// cheaper than two triangular solves at these sizes.
fn factor(gram: &DMatrix<f64>, rho: f64, diag: f64) -> DMatrix<f64> {
    let n = gram.nrows();
    let mut k = gram * rho;
    for i in 0..n {
        k[(i, i)] += diag;
    }
    Cholesky::new(k).expect("wI + σI + ρAᵀA is positive definite").inverse()
}

pub fn solve(
    prog: &ConeProgram,
    settings: &AdmmSettings,
    warm: Option<&AdmmState>,
    mut accept: impl FnMut(&[f64]) -> bool,
) -> ConeResult {
    let (n, m) = (prog.n, prog.m());
    let gram = prog.gram();
    let (mut x, mut s, mut u, mut rho) = match warm {
        Some(w) if w.x.len() == n && w.s.len() == m => (w.x.clone(), w.s.clone(), w.u.clone(), w.rho),
        _ => (vec![0.0; n], vec![0.0; m], vec![0.0; m], settings.rho),
    };
    let mut chol = factor(&gram, rho, settings.objective_weight + settings.sigma);
    let mut refactors = 0;
    let mut ax = vec![0.0; m];
    let mut rhs_m = vec![0.0; m];
    let mut rhs_n = DVector::zeros(n);
    let mut xv = DVector::zeros(n);
    let mut s_prev = vec![0.0; m];
    let mut u_prev = vec![0.0; m];
    let mut tmp_n = vec![0.0; n];
    let (mut rp, mut rd) = (f64::INFINITY, f64::INFINITY);
    let mut status = ConeStatus::MaxIter;
    let mut iter = 0;
    while iter < settings.max_iter {
        iter += 1;
        for i in 0..m {
            rhs_m[i] = prog.b[i] - s[i] - u[i];
        }
        prog.mul_t(&rhs_m, rhs_n.as_mut_slice());
        if settings.sigma > 0.0 {
            rhs_n.iter_mut().zip(&x).for_each(|(r, xi)| *r = rho * *r + settings.sigma * xi);
            xv.gemv(1.0, &chol, &rhs_n, 0.0);
        } else {
            xv.gemv(rho, &chol, &rhs_n, 0.0);
        }
        x.copy_from_slice(xv.as_slice());
        prog.mul(&x, &mut ax);
        s_prev.copy_from_slice(&s);
        u_prev.copy_from_slice(&u);
        for i in 0..m {
            let axh = settings.alpha * ax[i] + (1.0 - settings.alpha) * (prog.b[i] - s[i]);
            rhs_m[i] = axh;
            s[i] = prog.b[i] - axh - u[i];
        }
        project_cones(&prog.cones, &mut s);
        for i in 0..m {
            u[i] += rhs_m[i] + s[i] - prog.b[i];
        }
        let check = iter % settings.check_every == 0 || iter == settings.max_iter;
        let adapt = iter % settings.adapt_every == 0;
        if !(check || adapt) {
            continue;
        }
        let r: Vec<f64> = (0..m).map(|i| ax[i] + s[i] - prog.b[i]).collect();
        rp = inf_norm(&r);
        let ds: Vec<f64> = (0..m).map(|i| s[i] - s_prev[i]).collect();
        prog.mul_t(&ds, &mut tmp_n);
        rd = rho * inf_norm(&tmp_n);
        let scale_p = inf_norm(&ax).max(inf_norm(&s)).max(inf_norm(&prog.b));
        prog.mul_t(&u, &mut tmp_n);
        let scale_d = (rho * inf_norm(&tmp_n)).max(inf_norm(&x));
        if check {
            if accept(&x) {
                status = ConeStatus::Accepted;
                break;
            }
            if rp <= settings.eps_abs + settings.eps_rel * scale_p && rd <= settings.eps_abs + settings.eps_rel * scale_d {
                status = ConeStatus::Solved;
                break;
            }
            let du: Vec<f64> = (0..m).map(|i| u[i] - u_prev[i]).collect();
            let dn = inf_norm(&du);
            if dn > 1e-14 {
                prog.mul_t(&du, &mut tmp_n);
                let bty: f64 = prog.b.iter().zip(&du).map(|(b, d)| b * d).sum();
                if inf_norm(&tmp_n) <= settings.eps_infeasible * dn && bty < -settings.eps_infeasible * dn {
                    status = ConeStatus::Infeasible;
                    break;
                }
            }
        }
        if adapt && refactors < settings.max_refactor {
            let np = rp / scale_p.max(1e-300);
            let nd = rd / scale_d.max(1e-300);
            if np > 0.0 && nd > 0.0 {
                let new_rho = (rho * (np / nd).sqrt()).clamp(1e-6, 1e6);
                if new_rho > 5.0 * rho || new_rho < rho / 5.0 {
                    let ratio = rho / new_rho;
                    u.iter_mut().for_each(|v| *v *= ratio);
                    rho = new_rho;
                    chol = factor(&gram, rho, settings.objective_weight + settings.sigma);
                    refactors += 1;
                }
            }
        }
    }
    ConeResult {
        status,
        x: x.clone(),
        iterations: iter,
        primal_residual: rp,
        dual_residual: rd,
        state: AdmmState { x, s, u, rho },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_norm_on_halfspace() {
        // x0 + x1 ≥ 2 → minimiser (1, 1).
        let mut p = ConeProgram::new(2);
        p.push_cone(Cone::NonNeg(1), vec![(vec![(0, -1.0), (1, -1.0)], -2.0)]);
        let r = solve(&p, &AdmmSettings::default(), None, |_| false);
        assert_eq!(r.status, ConeStatus::Solved);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{:?}", r.x);
    }

    #[test]
    fn soc_constraint() {
        // x0 ≥ ‖(x1 - 1, 0)‖ with x1 = 3 fixed by two halfspaces → x0 = 2.
        let mut p = ConeProgram::new(2);
        p.push_cone(Cone::NonNeg(2), vec![(vec![(1, -1.0)], -3.0), (vec![(1, 1.0)], 3.0)]);
        p.push_cone(Cone::Soc(2), vec![(vec![(0, -1.0)], 0.0), (vec![(1, -1.0)], -1.0)]);
        let r = solve(&p, &AdmmSettings::default(), None, |_| false);
        assert_eq!(r.status, ConeStatus::Solved);
        assert!((r.x[0] - 2.0).abs() < 1e-5, "{:?}", r.x);
    }

    #[test]
    fn detects_infeasibility() {
        // x ≥ 1 and x ≤ 0.
        let mut p = ConeProgram::new(1);
        p.push_cone(Cone::NonNeg(2), vec![(vec![(0, -1.0)], -1.0), (vec![(0, 1.0)], 0.0)]);
        let r = solve(&p, &AdmmSettings::default(), None, |_| false);
        assert_eq!(r.status, ConeStatus::Infeasible);
    }

    #[test]
    fn projection_is_idempotent() {
        let mut v = [0.5, 3.0, -4.0];
        project_soc(&mut v);
        let w = v;
        project_soc(&mut v);
        assert!(v.iter().zip(&w).all(|(a, b)| (a - b).abs() < 1e-12));
        assert!((v[0] - (v[1] * v[1] + v[2] * v[2]).sqrt()).abs() < 1e-12);
    }
}
