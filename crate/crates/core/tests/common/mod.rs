//! A deliberately plain one-step re-implementation used as an oracle.
//!
//! It uses the Lagrange product formula, monomial-expanded exact weights,
//! normal equations and Gaussian elimination, and shares no code with the
//! library beyond the comparison setup.

#![allow(clippy::needless_range_loop)]

use std::f64::consts::PI;
use std::sync::Arc;

use slsem::remap1d::{step_1d, StepContext};
use slsem::remap2d::step_2d;
use slsem::*;

fn nodes(n: usize) -> Vec<f64> {
    (0..n).map(|j| 0.5 * (1.0 - ((2 * j + 1) as f64 * PI / (2 * n) as f64).cos())).collect()
}

fn lagrange(xs: &[f64], j: usize, x: f64) -> f64 {
    let mut p = 1.0;
    for (m, &xm) in xs.iter().enumerate() {
        if m != j {
            p *= (x - xm) / (xs[j] - xm);
        }
    }
    p
}

fn interp(xs: &[f64], vals: &[f64], x: f64) -> f64 {
    (0..xs.len()).map(|j| vals[j] * lagrange(xs, j, x)).sum()
}

/// `int_0^1 h_j` by expanding `h_j` into monomials.
fn weights(xs: &[f64]) -> Vec<f64> {
    (0..xs.len())
        .map(|j| {
            let mut coef = vec![1.0];
            for (m, &xm) in xs.iter().enumerate() {
                if m == j {
                    continue;
                }
                let d = xs[j] - xm;
                let mut next = vec![0.0; coef.len() + 1];
                for (k, &c) in coef.iter().enumerate() {
                    next[k + 1] += c / d;
                    next[k] -= c * xm / d;
                }
                coef = next;
            }
            coef.iter().enumerate().map(|(k, c)| c / (k + 1) as f64).sum()
        })
        .collect()
}

fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap()).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

fn normal_equations(rows: &[Vec<f64>], rhs: &[f64]) -> Vec<f64> {
    let n = rows[0].len();
    let mut ata = vec![vec![0.0; n]; n];
    let mut atb = vec![0.0; n];
    for (r, &y) in rows.iter().zip(rhs) {
        for i in 0..n {
            atb[i] += r[i] * y;
            for j in 0..n {
                ata[i][j] += r[i] * r[j];
            }
        }
    }
    gauss_solve(ata, atb)
}

/// One explicit RK step of `(x, q)' = (v(x), -q * d(x))`.
fn rk(order: u32, dt: f64, x: f64, q: f64, v: &dyn Fn(f64) -> f64, d: &dyn Fn(f64) -> f64) -> (f64, f64) {
    let f = |x: f64, q: f64| (v(x), -q * d(x));
    match order {
        1 => {
            let k = f(x, q);
            (x + dt * k.0, q + dt * k.1)
        }
        2 => {
            let k1 = f(x, q);
            let (x1, q1) = (x + dt * k1.0, q + dt * k1.1);
            let k2 = f(x1, q1);
            (x + 0.5 * dt * (k1.0 + k2.0), q + 0.5 * dt * (k1.1 + k2.1))
        }
        _ => {
            let k1 = f(x, q);
            let (x1, q1) = (x + dt * k1.0, q + dt * k1.1);
            let k2 = f(x1, q1);
            let (x2, q2) = (0.75 * x + 0.25 * (x1 + dt * k2.0), 0.75 * q + 0.25 * (q1 + dt * k2.1));
            let k3 = f(x2, q2);
            (x / 3.0 + 2.0 / 3.0 * (x2 + dt * k3.0), q / 3.0 + 2.0 / 3.0 * (q2 + dt * k3.1))
        }
    }
}

fn time_rule(order: u32, dt: f64) -> Vec<(f64, f64)> {
    match order {
        1 => vec![(0.0, dt)],
        2 => vec![(0.5 * dt, dt)],
        _ => vec![(0.0, dt / 6.0), (0.5 * dt, 4.0 * dt / 6.0), (dt, dt / 6.0)],
    }
}

pub struct Naive1d {
    pub n: usize,
    pub k: usize,
    pub lo: f64,
    pub w: f64,
    pub order: u32,
    pub mass: bool,
    pub energy: bool,
    pub backtrack: bool,
}

impl Naive1d {
    pub fn step(&self, phi: &[Vec<f64>], dt: f64) -> Vec<Vec<f64>> {
        let xs = nodes(self.n);
        let q = weights(&xs);
        let u = |x: f64| -x.sin();
        let back = |x: f64| x.sin();
        let div = |x: f64| -x.cos();
        let length = self.w * self.k as f64;
        let eval_old = |x: f64| {
            let mut y = (x - self.lo) % length;
            if y < 0.0 {
                y += length;
            }
            let c = ((y / self.w).floor() as usize).min(self.k - 1);
            interp(&xs, &phi[c], (y - c as f64 * self.w) / self.w)
        };
        let mut fitted = Vec::new();
        let mut cand = Vec::new();
        for c in 0..self.k {
            let lo = self.lo + c as f64 * self.w;
            let mut p = Vec::new();
            let mut v = Vec::new();
            for j in 0..self.n {
                let (x, val) = rk(self.order, dt, lo + self.w * xs[j], phi[c][j], &u, &div);
                p.push((x - lo) / self.w);
                v.push(val);
            }
            fitted.push(xs.iter().map(|&x| interp(&p, &v, x)).collect::<Vec<_>>());
            let at = |xb: f64, xi: f64| {
                if self.backtrack {
                    let (o, g) = rk(self.order, dt, xb, 1.0, &back, &div);
                    // an origin on the subdomain's own closure stays in that subdomain
                    if o >= lo - 1e-12 && o <= lo + self.w + 1e-12 {
                        g * interp(&xs, &phi[c], (o - lo) / self.w)
                    } else {
                        g * eval_old(o)
                    }
                } else {
                    interp(&p, &v, xi)
                }
            };
            cand.push((at(lo, 0.0), at(lo + self.w, 1.0)));
        }
        let iface = |i: usize| {
            let x = self.lo + i as f64 * self.w;
            let left = cand[(i + self.k - 1) % self.k].1;
            let right = cand[i % self.k].0;
            let s = u(x);
            if s > 1e-14 {
                left
            } else if s < -1e-14 {
                right
            } else {
                0.5 * (left + right)
            }
        };
        (0..self.k)
            .map(|c| {
                let lo = self.lo + c as f64 * self.w;
                let own = |x: f64| interp(&xs, &phi[c], (x - lo) / self.w);
                let target = |power: i32| {
                    let now: f64 = self.w * (0..self.n).map(|j| q[j] * phi[c][j].powi(power)).sum::<f64>();
                    let mut flow = 0.0;
                    for (tau, wt) in time_rule(self.order, dt) {
                        let state = |xb: f64| {
                            if tau == 0.0 {
                                own(xb)
                            } else {
                                let (o, g) = rk(self.order, tau, xb, 1.0, &back, &div);
                                g * own(o)
                            }
                        };
                        let xr = lo + self.w;
                        flow += wt * (u(lo) * state(lo).powi(power) - u(xr) * state(xr).powi(power));
                    }
                    now + flow
                };
                let mut rows: Vec<Vec<f64>> =
                    (0..self.n).map(|i| (0..self.n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
                let mut rhs = fitted[c].clone();
                rows.push((0..self.n).map(|j| lagrange(&xs, j, 1.0)).collect());
                rhs.push(iface(c + 1));
                rows.push((0..self.n).map(|j| lagrange(&xs, j, 0.0)).collect());
                rhs.push(iface(c));
                if self.mass {
                    rows.push(q.iter().map(|wj| self.w * wj).collect());
                    rhs.push(target(1));
                }
                let mut sol = normal_equations(&rows, &rhs);
                if self.energy {
                    let e = target(2);
                    for _ in 0..100 {
                        let mut r = rows.clone();
                        let mut b = rhs.clone();
                        r.push((0..self.n).map(|j| self.w * q[j] * sol[j]).collect());
                        b.push(e);
                        let next = normal_equations(&r, &b);
                        let change = next.iter().zip(&sol).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                        sol = next;
                        if change < 1e-8 {
                            break;
                        }
                    }
                }
                sol
            })
            .collect()
    }
}

pub struct Naive2d {
    pub n: usize,
    pub h: usize,
    pub w: f64,
    pub a: f64,
    pub b: f64,
    pub order: u32,
    pub mass: bool,
    pub backtrack: bool,
}

impl Naive2d {
    fn tensor(&self, xs: &[f64], c: &[f64], xi: f64, eta: f64) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for l in 0..n {
            for m in 0..n {
                s += c[l * n + m] * lagrange(xs, l, xi) * lagrange(xs, m, eta);
            }
        }
        s
    }

    pub fn step(&self, phi: &[Vec<f64>], dt: f64) -> Vec<Vec<f64>> {
        let (n, h, w) = (self.n, self.h, self.w);
        let xs = nodes(n);
        let q = weights(&xs);
        let idx = |cx: usize, cy: usize| cx * h + cy;
        let wrap = |c: isize| ((c + h as isize) % h as isize) as usize;
        let eval_old = |x: f64, y: f64| {
            let (x, y) = (x.rem_euclid(1.0), y.rem_euclid(1.0));
            let (cx, cy) = (((x / w) as usize).min(h - 1), ((y / w) as usize).min(h - 1));
            self.tensor(&xs, &phi[idx(cx, cy)], (x - cx as f64 * w) / w, (y - cy as f64 * w) / w)
        };
        // fitted[k] and candidate edges [left, right, bottom, top][s]
        let mut fitted = Vec::new();
        let mut edges = Vec::new();
        for cx in 0..h {
            for cy in 0..h {
                let k = idx(cx, cy);
                let (x0, y0) = (cx as f64 * w, cy as f64 * w);
                let mut mat = Vec::new();
                for i in 0..n {
                    for j in 0..n {
                        let xi = xs[i] + self.a * dt / w;
                        let eta = xs[j] + self.b * dt / w;
                        let mut row = Vec::new();
                        for l in 0..n {
                            for m in 0..n {
                                row.push(lagrange(&xs, l, xi) * lagrange(&xs, m, eta));
                            }
                        }
                        mat.push(row);
                    }
                }
                let c = gauss_solve(mat, phi[k].clone());
                let edge = |e: usize, s: usize| -> f64 {
                    let (xi, eta) = match e {
                        0 => (0.0, xs[s]),
                        1 => (1.0, xs[s]),
                        2 => (xs[s], 0.0),
                        _ => (xs[s], 1.0),
                    };
                    if self.backtrack {
                        eval_old(x0 + w * xi - self.a * dt, y0 + w * eta - self.b * dt)
                    } else {
                        self.tensor(&xs, &c, xi, eta)
                    }
                };
                edges.push((0..4).map(|e| (0..n).map(|s| edge(e, s)).collect::<Vec<_>>()).collect::<Vec<_>>());
                fitted.push(c);
            }
        }
        let mut out = Vec::new();
        for cx in 0..h {
            for cy in 0..h {
                let k = idx(cx, cy);
                let mut rows = Vec::new();
                let mut rhs = fitted[k].clone();
                for p in 0..n * n {
                    rows.push((0..n * n).map(|r| if r == p { 1.0 } else { 0.0 }).collect::<Vec<_>>());
                }
                // positive a and b: left and bottom come from the neighbours
                let left_nb = idx(wrap(cx as isize - 1), cy);
                let right_own = &edges[k][1];
                let bottom_nb = idx(cx, wrap(cy as isize - 1));
                let top_own = &edges[k][3];
                for s in 0..n {
                    let mut r = vec![0.0; n * n];
                    for l in 0..n {
                        r[l * n + s] = lagrange(&xs, l, 0.0);
                    }
                    rows.push(r);
                    rhs.push(edges[left_nb][1][s]);
                    let mut r = vec![0.0; n * n];
                    for l in 0..n {
                        r[l * n + s] = lagrange(&xs, l, 1.0);
                    }
                    rows.push(r);
                    rhs.push(right_own[s]);
                    let mut r = vec![0.0; n * n];
                    for m in 0..n {
                        r[s * n + m] = lagrange(&xs, m, 0.0);
                    }
                    rows.push(r);
                    rhs.push(edges[bottom_nb][3][s]);
                    let mut r = vec![0.0; n * n];
                    for m in 0..n {
                        r[s * n + m] = lagrange(&xs, m, 1.0);
                    }
                    rows.push(r);
                    rhs.push(top_own[s]);
                }
                if self.mass {
                    let mut r = vec![0.0; n * n];
                    let mut now = 0.0;
                    for i in 0..n {
                        for j in 0..n {
                            r[i * n + j] = w * w * q[i] * q[j];
                            now += w * w * q[i] * q[j] * phi[k][i * n + j];
                        }
                    }
                    let mut flow = 0.0;
                    for (tau, wt) in time_rule(self.order, dt) {
                        let st = |xi: f64, eta: f64| {
                            self.tensor(&xs, &phi[k], xi - self.a * tau / w, eta - self.b * tau / w)
                        };
                        let mut f = 0.0;
                        for s in 0..n {
                            f += w * q[s] * self.a * (st(0.0, xs[s]) - st(1.0, xs[s]));
                            f += w * q[s] * self.b * (st(xs[s], 0.0) - st(xs[s], 1.0));
                        }
                        flow += wt * f;
                    }
                    rows.push(r);
                    rhs.push(now + flow);
                }
                out.push(normal_equations(&rows, &rhs));
            }
        }
        out
    }
}

/// Largest one-step difference to the library in 1D on `[0, 2pi]` with
/// `u = -sin x`, as `(without energy row, with energy row)`.
pub fn compare_1d() -> (f64, f64) {
    let (k, n, dt) = (4, 5, 0.01);
    let mesh = Mesh::uniform_1d(0.0, 2.0 * PI, k, BoundaryCondition::Periodic).unwrap();
    let basis = NodeBasis::<f64>::new(n, NodeRule::Standard).unwrap();
    let velocity = VelocityModel::analytic(
        &mesh,
        Arc::new(|p: Point<f64>| [-p[0].sin(), 0.0]),
        Arc::new(|p: Point<f64>| -p[0].cos()),
        [1.0, 0.0],
    )
    .unwrap();
    let field = init_field(&mesh, &basis, |p| 1.0 + 0.5 * (p[0] + 0.3).sin()).unwrap();
    let (mut plain, mut energy) = (0.0f64, 0.0f64);
    for constraints in [Constraints::BoundaryOnly, Constraints::Mass, Constraints::MassEnergy] {
        for order in 1..=3u32 {
            for backtrack in [false, true] {
                let method = if backtrack { BoundaryMethod::Backtrack } else { BoundaryMethod::Interp };
                let scheme = SchemeSpec::new(constraints, TimeOrder::from_int(order).unwrap()).with_boundary(method);
                let ctx = StepContext { mesh: &mesh, basis: &basis, velocity: &velocity, scheme, ghost: None };
                let got = step_1d(&ctx, &field, 0.0, dt).unwrap().field;
                let naive = Naive1d {
                    n,
                    k,
                    lo: 0.0,
                    w: 2.0 * PI / k as f64,
                    order,
                    mass: constraints.has_mass(),
                    energy: constraints.has_energy(),
                    backtrack,
                }
                .step(&field.values, dt);
                let d = got
                    .values
                    .iter()
                    .flatten()
                    .zip(naive.iter().flatten())
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                if constraints.has_energy() {
                    energy = energy.max(d);
                } else {
                    plain = plain.max(d);
                }
            }
        }
    }
    (plain, energy)
}

/// Largest one-step difference to the library on a periodic 2x2 mesh, P = 3, `u = (2, 1)`.
pub fn compare_2d() -> f64 {
    let (h, n, dt) = (2, 4, 0.005);
    let per = (BoundaryCondition::Periodic, BoundaryCondition::Periodic);
    let mesh = Mesh::uniform_2d((0.0, 1.0), (0.0, 1.0), (h, h), per).unwrap();
    let basis = NodeBasis::<f64>::new(n, NodeRule::Standard).unwrap();
    let velocity = VelocityModel::constant(2, [2.0, 1.0]);
    let field = init_field(&mesh, &basis, |p| (2.0 * PI * p[0]).sin() * (2.0 * PI * p[1]).cos() + 0.3).unwrap();
    let mut worst = 0.0f64;
    for constraints in [Constraints::BoundaryOnly, Constraints::Mass] {
        for order in 1..=3u32 {
            for backtrack in [false, true] {
                let method = if backtrack { BoundaryMethod::Backtrack } else { BoundaryMethod::Interp };
                let scheme = SchemeSpec::new(constraints, TimeOrder::from_int(order).unwrap()).with_boundary(method);
                let ctx = StepContext { mesh: &mesh, basis: &basis, velocity: &velocity, scheme, ghost: None };
                let got = step_2d(&ctx, &field, 0.0, dt).unwrap().field;
                let naive = Naive2d { n, h, w: 0.5, a: 2.0, b: 1.0, order, mass: constraints.has_mass(), backtrack }
                    .step(&field.values, dt);
                worst = got
                    .values
                    .iter()
                    .flatten()
                    .zip(naive.iter().flatten())
                    .fold(worst, |m, (a, b)| m.max((a - b).abs()));
            }
        }
    }
    worst
}
