//! Bounded-variable revised primal simplex.
//!
//! Works in computational form `A x - s = 0` where each row slack `s_i`
//! carries the row range as its bounds. Rows whose starting activity is out
//! of range receive an artificial column; phase 1 drives their sum to zero.
//! The basis inverse is kept dense and updated by rank-one pivots, with
//! periodic reinversion. Pricing is Dantzig with a Harris two-pass ratio
//! test, falling back to Bland's rule while the objective stalls.

use super::{LinearProgram, LpError, LpSolution, LpSolver, LpStatus};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub pivot_tol: f64,
    /// Defaults to `50 * (rows + cols)` when `None`.
    pub max_iters: Option<usize>,
    pub refactor_every: usize,
    /// Non-improving iterations before switching to Bland's rule.
    pub stall_limit: usize,
    pub scale: bool,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-9,
            opt_tol: 1e-9,
            pivot_tol: 1e-9,
            max_iters: None,
            refactor_every: 400,
            stall_limit: 30,
            scale: true,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SimplexSolver {
    pub options: SimplexOptions,
}

impl SimplexSolver {
    pub fn new(options: SimplexOptions) -> Self {
        Self { options }
    }
}

impl LpSolver for SimplexSolver {
    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution, LpError> {
        lp.validate()?;
        let opts = self.options;
        let mut t = Tableau::new(lp, opts.scale);
        let max_iters = opts
            .max_iters
            .unwrap_or(50 * (lp.n_rows() + lp.n_vars()).max(1));
        let mut iters = 0;

        if t.n_art > 0 {
            t.set_phase_one_costs();
            let outcome = t.run(&opts, &mut iters, max_iters)?;
            if outcome == Outcome::IterationLimit {
                return Ok(t.solution(lp, LpStatus::IterationLimit, iters));
            }
            if t.objective() > 10.0 * opts.feas_tol {
                return Ok(t.solution(lp, LpStatus::Infeasible, iters));
            }
            t.retire_artificials();
        }
        t.set_phase_two_costs();
        let status = match t.run(&opts, &mut iters, max_iters)? {
            Outcome::Optimal => LpStatus::Optimal,
            Outcome::Unbounded => LpStatus::Unbounded,
            Outcome::IterationLimit => LpStatus::IterationLimit,
        };
        Ok(t.solution(lp, status, iters))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum State {
    Basic,
    Lower,
    Upper,
    /// Nonbasic free variable held at zero.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

enum Step {
    Flip(f64),
    Pivot(usize, f64),
    Unbounded,
}

fn pow2_near(v: f64) -> f64 {
    if v.is_finite() && v > 0.0 {
        2f64.powi(v.log2().round() as i32)
    } else {
        1.0
    }
}

/// Columns are ordered structurals, then row slacks, then artificials.
struct Tableau {
    m: usize,
    n: usize,
    n_art: usize,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    art_row: Vec<usize>,
    art_sign: Vec<f64>,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
    scaled_cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    state: Vec<State>,
    basis: Vec<usize>,
    /// Dense row-major `m x m` inverse of the basis matrix.
    binv: Vec<f64>,
    obj: f64,
}

impl Tableau {
    fn new(lp: &LinearProgram, scale: bool) -> Self {
        let m = lp.n_rows();
        let n = lp.n_vars();

        let mut row_scale = vec![1.0; m];
        let mut col_scale = vec![1.0; n];
        if scale {
            for (i, r) in lp.rows().iter().enumerate() {
                let big = r.terms.iter().fold(0.0f64, |b, t| b.max(t.1.abs()));
                if big > 0.0 {
                    row_scale[i] = pow2_near(1.0 / big);
                }
            }
            let mut big = vec![0.0f64; n];
            for (i, r) in lp.rows().iter().enumerate() {
                for &(j, a) in &r.terms {
                    big[j] = big[j].max((a * row_scale[i]).abs());
                }
            }
            for j in 0..n {
                if big[j] > 0.0 {
                    col_scale[j] = pow2_near(1.0 / big[j]);
                }
            }
        }

        // column-compressed scaled matrix; duplicate entries are summed
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (i, r) in lp.rows().iter().enumerate() {
            for &(j, a) in &r.terms {
                entries.push((j, i, a * row_scale[i] * col_scale[j]));
            }
        }
        entries.sort_by_key(|e| (e.0, e.1));
        let mut col_start = vec![0usize; n + 1];
        let mut col_row = Vec::with_capacity(entries.len());
        let mut col_val: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (j, i, v) in entries {
            if last == Some((j, i)) {
                *col_val.last_mut().expect("entry present") += v;
                continue;
            }
            last = Some((j, i));
            col_row.push(i);
            col_val.push(v);
            col_start[j + 1] = col_row.len();
        }
        for j in 0..n {
            col_start[j + 1] = col_start[j + 1].max(col_start[j]);
        }

        let mut lower = Vec::with_capacity(n + 2 * m);
        let mut upper = Vec::with_capacity(n + 2 * m);
        for (j, s) in col_scale.iter().enumerate() {
            lower.push(lp.col_lower()[j] / s);
            upper.push(lp.col_upper()[j] / s);
        }
        for (i, r) in lp.rows().iter().enumerate() {
            lower.push(r.lower * row_scale[i]);
            upper.push(r.upper * row_scale[i]);
        }
        let scaled_cost: Vec<f64> = (0..n).map(|j| lp.objective()[j] * col_scale[j]).collect();

        let mut t = Tableau {
            m,
            n,
            n_art: 0,
            col_start,
            col_row,
            col_val,
            art_row: Vec::new(),
            art_sign: Vec::new(),
            row_scale,
            col_scale,
            scaled_cost,
            lower,
            upper,
            cost: Vec::new(),
            x: vec![0.0; n + m],
            state: vec![State::Lower; n + m],
            basis: vec![0; m],
            binv: vec![0.0; m * m],
            obj: 0.0,
        };
        t.crash();
        t
    }

    /// Starting point: structurals at a bound, in-range slacks basic,
    /// artificials covering the rest.
    fn crash(&mut self) {
        let (m, n) = (self.m, self.n);
        for j in 0..n {
            let (l, u) = (self.lower[j], self.upper[j]);
            let (s, v) = if l.is_finite() {
                (State::Lower, l)
            } else if u.is_finite() {
                (State::Upper, u)
            } else {
                (State::Zero, 0.0)
            };
            self.state[j] = s;
            self.x[j] = v;
        }
        let mut act = vec![0.0; m];
        for j in 0..n {
            let xj = self.x[j];
            if xj != 0.0 {
                for k in self.col_start[j]..self.col_start[j + 1] {
                    act[self.col_row[k]] += self.col_val[k] * xj;
                }
            }
        }
        let mut diag = vec![0.0; m];
        for i in 0..m {
            let s = n + i;
            let (l, u) = (self.lower[s], self.upper[s]);
            if act[i] >= l && act[i] <= u {
                self.state[s] = State::Basic;
                self.x[s] = act[i];
                self.basis[i] = s;
                diag[i] = -1.0;
            } else {
                let (b, st) = if act[i] < l {
                    (l, State::Lower)
                } else {
                    (u, State::Upper)
                };
                self.state[s] = st;
                self.x[s] = b;
                let sign = if b - act[i] >= 0.0 { 1.0 } else { -1.0 };
                let a = n + m + self.n_art;
                self.art_row.push(i);
                self.art_sign.push(sign);
                self.lower.push(0.0);
                self.upper.push(f64::INFINITY);
                self.x.push((b - act[i]) * sign);
                self.state.push(State::Basic);
                self.basis[i] = a;
                diag[i] = sign;
                self.n_art += 1;
            }
        }
        for (i, d) in diag.iter().enumerate() {
            self.binv[i * m + i] = 1.0 / d;
        }
    }

    fn n_cols(&self) -> usize {
        self.n + self.m + self.n_art
    }

    fn for_col(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        if j < self.n {
            for k in self.col_start[j]..self.col_start[j + 1] {
                f(self.col_row[k], self.col_val[k]);
            }
        } else if j < self.n + self.m {
            f(j - self.n, -1.0);
        } else {
            let a = j - self.n - self.m;
            f(self.art_row[a], self.art_sign[a]);
        }
    }

    fn set_phase_one_costs(&mut self) {
        let (n, m) = (self.n, self.m);
        self.cost = vec![0.0; self.n_cols()];
        for c in &mut self.cost[n + m..] {
            *c = 1.0;
        }
        self.obj = self.compute_objective();
    }

    fn set_phase_two_costs(&mut self) {
        self.cost = vec![0.0; self.n_cols()];
        self.cost[..self.n].copy_from_slice(&self.scaled_cost);
        self.obj = self.compute_objective();
    }

    fn retire_artificials(&mut self) {
        for j in self.n + self.m..self.n_cols() {
            self.upper[j] = 0.0;
            if self.state[j] != State::Basic {
                self.state[j] = State::Lower;
                self.x[j] = 0.0;
            }
        }
    }

    fn compute_objective(&self) -> f64 {
        self.cost.iter().zip(&self.x).map(|(c, x)| c * x).sum()
    }

    fn objective(&self) -> f64 {
        self.obj
    }

    fn compute_pi(&self) -> Vec<f64> {
        let m = self.m;
        let mut pi = vec![0.0; m];
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = self.cost[b];
            if cb != 0.0 {
                let row = &self.binv[i * m..(i + 1) * m];
                for (p, r) in pi.iter_mut().zip(row) {
                    *p += cb * r;
                }
            }
        }
        pi
    }

    fn reduced_cost(&self, j: usize, pi: &[f64]) -> f64 {
        let mut d = self.cost[j];
        self.for_col(j, |i, a| d -= pi[i] * a);
        d
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut alpha = vec![0.0; m];
        self.for_col(j, |r, a| {
            for (i, al) in alpha.iter_mut().enumerate() {
                *al += self.binv[i * m + r] * a;
            }
        });
        alpha
    }

    fn reinvert(&mut self) -> Result<(), LpError> {
        let m = self.m;
        if m == 0 {
            return Ok(());
        }
        let w = 2 * m;
        let mut aug = vec![0.0; m * w];
        for (pos, &b) in self.basis.iter().enumerate() {
            self.for_col(b, |i, a| aug[i * w + pos] += a);
        }
        for i in 0..m {
            aug[i * w + m + i] = 1.0;
        }
        for col in 0..m {
            let (mut piv, mut best) = (col, aug[col * w + col].abs());
            for r in col + 1..m {
                let v = aug[r * w + col].abs();
                if v > best {
                    piv = r;
                    best = v;
                }
            }
            if best < 1e-12 {
                return Err(LpError::SingularBasis);
            }
            if piv != col {
                for k in 0..w {
                    aug.swap(piv * w + k, col * w + k);
                }
            }
            let inv = 1.0 / aug[col * w + col];
            for k in 0..w {
                aug[col * w + k] *= inv;
            }
            let (head, rest) = aug.split_at_mut(col * w);
            let (prow, tail) = rest.split_at_mut(w);
            for r in (0..col).chain(col + 1..m) {
                let row = if r < col {
                    &mut head[r * w..(r + 1) * w]
                } else {
                    let o = (r - col - 1) * w;
                    &mut tail[o..o + w]
                };
                let f = row[col];
                if f != 0.0 {
                    for k in col..w {
                        row[k] -= f * prow[k];
                    }
                }
            }
        }
        for i in 0..m {
            self.binv[i * m..(i + 1) * m].copy_from_slice(&aug[i * w + m..(i + 1) * w]);
        }
        Ok(())
    }

    /// Recomputes basic values from the nonbasic ones.
    fn recompute_basics(&mut self) {
        let m = self.m;
        let mut rhs = vec![0.0; m];
        for j in 0..self.n_cols() {
            if self.state[j] != State::Basic && self.x[j] != 0.0 {
                let xj = self.x[j];
                self.for_col(j, |i, a| rhs[i] -= a * xj);
            }
        }
        for (i, &b) in self.basis.iter().enumerate() {
            let row = &self.binv[i * m..(i + 1) * m];
            self.x[b] = row.iter().zip(&rhs).map(|(r, v)| r * v).sum();
        }
        self.obj = self.compute_objective();
    }

    fn price(&self, pi: &[f64], opt_tol: f64, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.n_cols() {
            let dir = match self.state[j] {
                State::Basic => continue,
                _ if self.lower[j] == self.upper[j] => continue,
                State::Lower => {
                    let d = self.reduced_cost(j, pi);
                    if d < -opt_tol {
                        (1.0, d)
                    } else {
                        continue;
                    }
                }
                State::Upper => {
                    let d = self.reduced_cost(j, pi);
                    if d > opt_tol {
                        (-1.0, d)
                    } else {
                        continue;
                    }
                }
                State::Zero => {
                    let d = self.reduced_cost(j, pi);
                    if d.abs() > opt_tol {
                        (-d.signum(), d)
                    } else {
                        continue;
                    }
                }
            };
            if bland {
                return Some((j, dir.0));
            }
            if best.is_none_or(|b| dir.1.abs() > b.2) {
                best = Some((j, dir.0, dir.1.abs()));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn ratio_test(
        &self,
        q: usize,
        dir: f64,
        alpha: &[f64],
        opts: &SimplexOptions,
        bland: bool,
    ) -> Step {
        let flip = self.upper[q] - self.lower[q];
        let exact = |i: usize, w: f64| -> Option<f64> {
            let b = self.basis[i];
            if w > opts.pivot_tol && self.lower[b].is_finite() {
                Some(((self.x[b] - self.lower[b]) / w).max(0.0))
            } else if w < -opts.pivot_tol && self.upper[b].is_finite() {
                Some(((self.upper[b] - self.x[b]) / -w).max(0.0))
            } else {
                None
            }
        };

        if bland {
            let mut pick: Option<(usize, f64)> = None;
            for (i, &a) in alpha.iter().enumerate() {
                if let Some(r) = exact(i, dir * a) {
                    let better = match pick {
                        None => true,
                        Some((pi, pr)) => r < pr || (r == pr && self.basis[i] < self.basis[pi]),
                    };
                    if better {
                        pick = Some((i, r));
                    }
                }
            }
            return match pick {
                Some((_, r)) if flip <= r => Step::Flip(flip),
                Some((i, r)) => Step::Pivot(i, r),
                None if flip.is_finite() => Step::Flip(flip),
                None => Step::Unbounded,
            };
        }

        let mut tmax = f64::INFINITY;
        for (i, &a) in alpha.iter().enumerate() {
            let w = dir * a;
            let b = self.basis[i];
            if w > opts.pivot_tol && self.lower[b].is_finite() {
                tmax = tmax.min((self.x[b] - self.lower[b] + opts.feas_tol) / w);
            } else if w < -opts.pivot_tol && self.upper[b].is_finite() {
                tmax = tmax.min((self.upper[b] - self.x[b] + opts.feas_tol) / -w);
            }
        }
        if tmax == f64::INFINITY && flip == f64::INFINITY {
            return Step::Unbounded;
        }
        if flip <= tmax {
            return Step::Flip(flip);
        }
        let mut pick: Option<(usize, f64, f64)> = None;
        for (i, &a) in alpha.iter().enumerate() {
            if let Some(r) = exact(i, dir * a) {
                if r <= tmax && pick.is_none_or(|p| a.abs() > p.2) {
                    pick = Some((i, r, a.abs()));
                }
            }
        }
        match pick {
            Some((i, r, _)) => Step::Pivot(i, r),
            None => Step::Unbounded,
        }
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[f64]) {
        let m = self.m;
        let inv = 1.0 / alpha[r];
        for v in &mut self.binv[r * m..(r + 1) * m] {
            *v *= inv;
        }
        let prow: Vec<f64> = self.binv[r * m..(r + 1) * m].to_vec();
        for (i, &a) in alpha.iter().enumerate() {
            if i != r && a != 0.0 {
                let row = &mut self.binv[i * m..(i + 1) * m];
                for (v, p) in row.iter_mut().zip(&prow) {
                    *v -= a * p;
                }
            }
        }
        self.basis[r] = q;
    }

    fn run(
        &mut self,
        opts: &SimplexOptions,
        iters: &mut usize,
        max_iters: usize,
    ) -> Result<Outcome, LpError> {
        let mut since_refactor = 0usize;
        let mut fresh = false;
        let mut stall = 0usize;
        let mut bland = false;
        let mut best_obj = self.obj;
        loop {
            if since_refactor >= opts.refactor_every {
                self.reinvert()?;
                self.recompute_basics();
                since_refactor = 0;
                fresh = true;
            }
            if *iters >= max_iters {
                return Ok(Outcome::IterationLimit);
            }
            let pi = self.compute_pi();
            let Some((q, dir)) = self.price(&pi, opts.opt_tol, bland) else {
                if fresh {
                    return Ok(Outcome::Optimal);
                }
                self.reinvert()?;
                self.recompute_basics();
                since_refactor = 0;
                fresh = true;
                continue;
            };
            let d_q = self.reduced_cost(q, &pi);
            let alpha = self.ftran(q);
            let step = self.ratio_test(q, dir, &alpha, opts, bland);
            let t = match step {
                Step::Unbounded => return Ok(Outcome::Unbounded),
                Step::Flip(t) | Step::Pivot(_, t) => t,
            };

            self.x[q] += dir * t;
            for (i, &a) in alpha.iter().enumerate() {
                let b = self.basis[i];
                self.x[b] -= dir * t * a;
            }
            match step {
                Step::Flip(_) => {
                    let (s, v) = if dir > 0.0 {
                        (State::Upper, self.upper[q])
                    } else {
                        (State::Lower, self.lower[q])
                    };
                    self.state[q] = s;
                    self.x[q] = v;
                }
                Step::Pivot(r, _) => {
                    let leaving = self.basis[r];
                    let (s, v) = if dir * alpha[r] > 0.0 {
                        (State::Lower, self.lower[leaving])
                    } else {
                        (State::Upper, self.upper[leaving])
                    };
                    self.state[leaving] = s;
                    self.x[leaving] = v;
                    self.state[q] = State::Basic;
                    self.pivot(r, q, &alpha);
                }
                Step::Unbounded => unreachable!(),
            }
            self.obj += d_q * dir * t;
            *iters += 1;
            since_refactor += 1;
            fresh = false;

            if self.obj < best_obj - 1e-12 * best_obj.abs().max(1.0) {
                best_obj = self.obj;
                stall = 0;
                bland = false;
            } else {
                stall += 1;
                if stall >= opts.stall_limit {
                    bland = true;
                }
            }
        }
    }

    fn solution(&self, lp: &LinearProgram, status: LpStatus, iterations: usize) -> LpSolution {
        let n = self.n;
        let x: Vec<f64> = (0..n).map(|j| self.x[j] * self.col_scale[j]).collect();
        let pi = self.compute_pi();
        let duals: Vec<f64> = (0..self.m).map(|i| pi[i] * self.row_scale[i]).collect();
        let reduced_costs = (0..n)
            .map(|j| {
                let mut d = lp.objective()[j];
                for k in self.col_start[j]..self.col_start[j + 1] {
                    let i = self.col_row[k];
                    d -= pi[i] * self.col_val[k] / self.col_scale[j];
                }
                d
            })
            .collect();
        LpSolution {
            status,
            objective: lp.objective_value(&x),
            x,
            duals,
            reduced_costs,
            iterations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(lp: &LinearProgram) -> LpSolution {
        SimplexSolver::default().solve(lp).unwrap()
    }

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18
        let mut lp = LinearProgram::new(2);
        lp.set_cost(0, -3.0);
        lp.set_cost(1, -5.0);
        lp.add_le_row(vec![(0, 1.0)], 4.0);
        lp.add_le_row(vec![(1, 2.0)], 12.0);
        lp.add_le_row(vec![(0, 3.0), (1, 2.0)], 18.0);
        let s = solve(&lp);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 36.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
        // duals of the binding rows: 0, 1.5, 1 (sign flipped for minimization)
        assert!((s.duals[1] + 1.5).abs() < 1e-9);
        assert!((s.duals[2] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn needs_phase_one() {
        // min x + y s.t. x + y >= 2, x - y = 0.5
        let mut lp = LinearProgram::new(2);
        lp.set_cost(0, 1.0);
        lp.set_cost(1, 1.0);
        lp.add_ge_row(vec![(0, 1.0), (1, 1.0)], 2.0);
        lp.add_eq_row(vec![(0, 1.0), (1, -1.0)], 0.5);
        let s = solve(&lp);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 2.0).abs() < 1e-9);
        assert!((s.x[0] - 1.25).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible() {
        let mut lp = LinearProgram::new(1);
        lp.add_ge_row(vec![(0, 1.0)], 2.0);
        lp.add_le_row(vec![(0, 1.0)], 1.0);
        assert_eq!(solve(&lp).status, LpStatus::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        let mut lp = LinearProgram::new(2);
        lp.set_cost(0, -1.0);
        lp.add_le_row(vec![(0, 1.0), (1, -1.0)], 1.0);
        assert_eq!(solve(&lp).status, LpStatus::Unbounded);
    }

    #[test]
    fn free_and_boxed_variables() {
        // min |x - 3| via x free, t >= x - 3, t >= 3 - x, with x in [-10, 2]
        let mut lp = LinearProgram::new(2);
        lp.set_bounds(0, -10.0, 2.0);
        lp.set_bounds(1, f64::NEG_INFINITY, f64::INFINITY);
        lp.set_cost(1, 1.0);
        lp.add_ge_row(vec![(1, 1.0), (0, -1.0)], -3.0);
        lp.add_ge_row(vec![(1, 1.0), (0, 1.0)], 3.0);
        let s = solve(&lp);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn bound_flip_only() {
        let mut lp = LinearProgram::new(3);
        for j in 0..3 {
            lp.set_bounds(j, -1.0, 1.0);
            lp.set_cost(j, (j as f64) - 1.0);
        }
        let s = solve(&lp);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 2.0).abs() < 1e-12);
    }

    #[test]
    fn badly_scaled_rows() {
        let mut lp = LinearProgram::new(2);
        lp.set_cost(0, 1.0);
        lp.set_cost(1, 1.0);
        lp.add_ge_row(vec![(0, 1e6), (1, 2e6)], 3e6);
        lp.add_ge_row(vec![(0, 3e-5), (1, 1e-5)], 4e-5);
        let s = solve(&lp);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 2.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example cycles under naive Dantzig pricing.
        let mut lp = LinearProgram::new(4);
        for (j, c) in [-0.75, 150.0, -0.02, 6.0].into_iter().enumerate() {
            lp.set_cost(j, c);
        }
        lp.add_le_row(vec![(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)], 0.0);
        lp.add_le_row(vec![(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)], 0.0);
        lp.add_le_row(vec![(2, 1.0)], 1.0);
        let s = SimplexSolver::new(SimplexOptions {
            scale: false,
            ..Default::default()
        })
        .solve(&lp)
        .unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 0.05).abs() < 1e-9);
    }

    #[test]
    fn rejects_invalid_problem() {
        let mut lp = LinearProgram::new(1);
        lp.add_le_row(vec![(3, 1.0)], 1.0);
        assert!(matches!(
            SimplexSolver::default().solve(&lp),
            Err(LpError::VariableOutOfRange { .. })
        ));
        let mut lp = LinearProgram::new(1);
        lp.set_bounds(0, 2.0, 1.0);
        assert!(matches!(
            SimplexSolver::default().solve(&lp),
            Err(LpError::EmptyRange { .. })
        ));
    }

    #[test]
    fn empty_problem() {
        let lp = LinearProgram::new(0);
        let s = solve(&lp);
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.objective, 0.0);
    }
}
