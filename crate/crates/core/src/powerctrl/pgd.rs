use super::PowerProblem;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct PgdOptions {
    pub max_iter: usize,
    /// Stop once an accepted step moves less than this (sup norm).
    pub tol: f64,
    pub initial_step: f64,
    pub armijo: f64,
    pub prelog: f64,
}

impl Default for PgdOptions {
    fn default() -> Self {
        PgdOptions { max_iter: 5000, tol: 1e-10, initial_step: 1.0, armijo: 1e-4, prelog: 1.0 }
    }
}

#[derive(Clone, Debug)]
pub struct PgdSolution {
    pub mu: Vec<f64>,
    pub objective: f64,
    pub user_se: Vec<f64>,
    pub iterations: usize,
    /// `‖x − Π(x + ∇f)‖∞` in normalised coordinates.
    pub kkt_residual: f64,
    /// Set when the step length collapsed before convergence.
    pub stagnated: bool,
    /// Objective after every accepted step.
    pub history: Vec<f64>,
}

#[derive(Clone, Copy, PartialEq)]
enum Objective {
    SumSe,
    PropFair,
}

struct Scaled<'a> {
    p: &'a PowerProblem,
    /// Per variable: (group, scale) when free.
    owner: Vec<Option<(usize, f64)>>,
}

impl<'a> Scaled<'a> {
    fn new(p: &'a PowerProblem) -> Self {
        let owner = p
            .free_vars()
            .into_iter()
            .map(|o| o.map(|(g, w)| (g, (p.groups[g].budget / w).sqrt())))
            .collect();
        Scaled { p, owner }
    }

    fn mu(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.owner).map(|(v, o)| o.map_or(0.0, |(_, s)| v * s)).collect()
    }

    fn project(&self, x: &mut [f64]) {
        let mut norms = vec![0.0; self.p.groups.len()];
        for (v, o) in x.iter_mut().zip(&self.owner) {
            match o {
                Some((g, _)) => {
                    *v = v.max(0.0);
                    norms[*g] += *v * *v;
                }
                None => *v = 0.0,
            }
        }
        for (v, o) in x.iter_mut().zip(&self.owner) {
            if let Some((g, _)) = o {
                if norms[*g] > 1.0 {
                    *v /= norms[*g].sqrt();
                }
            }
        }
    }

    /// User SE and the gradient of the objective in `x`.
    fn eval(&self, x: &[f64], obj: Objective, prelog: f64) -> (f64, Vec<f64>, Vec<f64>) {
        let p = self.p;
        let mu = self.mu(x);
        let loads = p.group_loads(&mu);
        let dot = |v: &[(usize, f64)]| v.iter().map(|&(i, a)| a * mu[i]).sum::<f64>();
        let mut grad_mu = vec![0.0; p.n_vars];
        let mut value = 0.0;
        let mut ses = Vec::with_capacity(p.users.len());
        for links in &p.users {
            let (mut best, mut best_l) = (f64::INFINITY, links[0]);
            let mut parts = (0.0, 0.0);
            for &l in links {
                let link = &p.links[l];
                let num = dot(&link.signal).powi(2);
                let den = link.coherent.iter().map(|c| dot(c).powi(2)).sum::<f64>()
                    + link.load_gain.iter().map(|&(g, a)| a * loads[g]).sum::<f64>()
                    + link.noise;
                if num / den < best {
                    best = num / den;
                    best_l = l;
                    parts = (num, den);
                }
            }
            let se = prelog * best.ln_1p() / std::f64::consts::LN_2;
            ses.push(se);
            let dse_dsinr = prelog / ((1.0 + best) * std::f64::consts::LN_2);
            let outer = match obj {
                Objective::SumSe => {
                    value += se;
                    dse_dsinr
                }
                Objective::PropFair => {
                    value += se.max(1e-300).ln();
                    dse_dsinr / se.max(1e-300)
                }
            };
            let link = &p.links[best_l];
            let (num, den) = parts;
            let sig = dot(&link.signal);
            for &(i, a) in &link.signal {
                grad_mu[i] += outer * 2.0 * sig * a / den;
            }
            let k = -outer * num / (den * den);
            for c in &link.coherent {
                let cv = dot(c);
                for &(i, a) in c {
                    grad_mu[i] += k * 2.0 * cv * a;
                }
            }
            for &(g, a) in &link.load_gain {
                for &(v, w) in &p.groups[g].members {
                    grad_mu[v] += k * a * 2.0 * w * mu[v];
                }
            }
        }
        let grad = grad_mu.iter().zip(&self.owner).map(|(g, o)| o.map_or(0.0, |(_, s)| g * s)).collect();
        (value, grad, ses)
    }
}

fn run(p: &PowerProblem, opts: &PgdOptions, obj: Objective, start: Option<&[f64]>) -> Result<PgdSolution> {
    p.validate()?;
    let sc = Scaled::new(p);
    let mut x: Vec<f64> = match start {
        Some(mu) => mu.iter().zip(&sc.owner).map(|(m, o)| o.map_or(0.0, |(_, s)| m / s)).collect(),
        None => {
            let u = p.uniform_full_power();
            u.iter().zip(&sc.owner).map(|(m, o)| o.map_or(0.0, |(_, s)| m / s)).collect()
        }
    };
    sc.project(&mut x);
    let (mut f, mut g, mut ses) = sc.eval(&x, obj, opts.prelog);
    if !f.is_finite() {
        return Err(Error::NumericalDomain("objective is not finite at the starting point".into()));
    }
    let mut step = opts.initial_step;
    let mut history = vec![f];
    let mut stagnated = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut accepted = None;
        while step >= 1e-12 {
            let mut xn: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a + step * b).collect();
            sc.project(&mut xn);
            let lin: f64 = g.iter().zip(xn.iter().zip(&x)).map(|(gi, (a, b))| gi * (a - b)).sum();
            let (fnew, gn, sn) = sc.eval(&xn, obj, opts.prelog);
            if fnew.is_finite() && fnew >= f + opts.armijo * lin {
                accepted = Some((xn, fnew, gn, sn));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fnew, gn, sn)) = accepted else {
            stagnated = true;
            break;
        };
        let moved = xn.iter().zip(&x).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        x = xn;
        f = fnew;
        g = gn;
        ses = sn;
        history.push(f);
        step = (step * 2.0).min(1e6);
        if moved < opts.tol {
            break;
        }
    }
    let mut probe: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a + b).collect();
    sc.project(&mut probe);
    let kkt_residual = probe.iter().zip(&x).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let mut mu = sc.mu(&x);
    p.repair(&mut mu);
    Ok(PgdSolution { mu, objective: f, user_se: ses, iterations, kkt_residual, stagnated, history })
}

/// Projected gradient ascent on `Σ_k SE_k`.
pub fn solve_sumse_pgd(p: &PowerProblem, opts: &PgdOptions, start: Option<&[f64]>) -> Result<PgdSolution> {
    run(p, opts, Objective::SumSe, start)
}

/// Projected gradient ascent on `Σ_k ln SE_k`; `objective` is the geometric mean of SE.
pub fn solve_propfair_pgd(p: &PowerProblem, opts: &PgdOptions, start: Option<&[f64]>) -> Result<PgdSolution> {
    let mut s = run(p, opts, Objective::PropFair, start)?;
    s.objective = (s.objective / p.users.len() as f64).exp();
    for h in s.history.iter_mut() {
        *h = (*h / p.users.len() as f64).exp();
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn history_is_monotone_and_feasible() {
        let beta = DMatrix::from_row_slice(2, 3, &[1.0, 0.2, 0.05, 0.1, 0.8, 0.6]);
        let pil = crate::training::PilotBook::round_robin(3, 3, 1.0).unwrap();
        let gamma = crate::training::gamma_uncorrelated(&beta, &pil, 5.0);
        let p = PowerProblem::cb_downlink(&beta, &gamma, 50.0, 2, None).unwrap();
        let s = solve_sumse_pgd(&p, &PgdOptions::default(), None).unwrap();
        assert!(s.history.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        assert!(p.violation(&s.mu) <= 1e-8);
        let pf = solve_propfair_pgd(&p, &PgdOptions::default(), None).unwrap();
        assert!(pf.user_se.iter().all(|x| *x > 0.0));
        assert!(p.violation(&pf.mu) <= 1e-8);
    }
}
