//! Built-in test problems with closed-form solutions.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mesh::{BoundaryCondition, Mesh};
use crate::scalar::{Point, Real};
use crate::transport::{DivergenceFn, VelocityFn, VelocityModel};

pub type InitialFn<T> = Arc<dyn Fn(Point<T>) -> T + Send + Sync>;
pub type ExactFn<T> = Arc<dyn Fn(Point<T>, T) -> T + Send + Sync>;

const VERIFY_SEED: u64 = 0x5eed_2024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemId {
    /// `u = 1` on `[0, 1]`, `phi0 = sin(2 pi x)`.
    Advect1dConst,
    /// `u = -sin x` on `[0, 2 pi]`.
    Advect1dSine,
    /// `(u, v) = (2, 1)` on the unit square.
    Advect2dConst,
}

impl ProblemId {
    pub const ALL: [ProblemId; 3] = [Self::Advect1dConst, Self::Advect1dSine, Self::Advect2dConst];

    pub fn name(self) -> &'static str {
        match self {
            Self::Advect1dConst => "advect1d_const",
            Self::Advect1dSine => "advect1d_sine",
            Self::Advect2dConst => "advect2d_const",
        }
    }
}

impl std::fmt::Display for ProblemId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ProblemId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown problem `{s}`")))
    }
}

/// A transport problem: domain, velocity, initial and exact solution.
#[derive(Clone)]
pub struct ProblemSpec<T> {
    pub id: ProblemId,
    pub dim: usize,
    /// Lower domain corner; unused components are zero.
    pub lo: Point<T>,
    pub hi: Point<T>,
    pub velocity: VelocityFn<T>,
    pub divergence: DivergenceFn<T>,
    pub u_max: Point<T>,
    /// Set for spatially uniform velocities.
    pub constant_velocity: Option<Point<T>>,
    pub initial: InitialFn<T>,
    pub exact: ExactFn<T>,
    pub default_bc: BoundaryCondition,
    pub t_end: T,
}

impl<T: Real> std::fmt::Debug for ProblemSpec<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("id", &self.id)
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .field("u_max", &self.u_max)
            .field("t_end", &self.t_end)
            .finish()
    }
}

pub fn make_problem<T: Real>(id: ProblemId) -> ProblemSpec<T> {
    let two_pi = T::TAU();
    let zero = T::zero();
    let one = T::one();
    match id {
        ProblemId::Advect1dConst => ProblemSpec {
            id,
            dim: 1,
            lo: [zero, zero],
            hi: [one, zero],
            velocity: Arc::new(move |_| [T::one(), T::zero()]),
            divergence: Arc::new(|_| T::zero()),
            u_max: [one, zero],
            constant_velocity: Some([one, zero]),
            initial: Arc::new(move |p| (two_pi * p[0]).sin()),
            exact: Arc::new(move |p, t| (two_pi * (p[0] - t)).sin()),
            default_bc: BoundaryCondition::Periodic,
            t_end: T::lit(10.0),
        },
        ProblemId::Advect1dSine => ProblemSpec {
            id,
            dim: 1,
            lo: [zero, zero],
            hi: [two_pi, zero],
            velocity: Arc::new(|p| [-p[0].sin(), T::zero()]),
            divergence: Arc::new(|p| -p[0].cos()),
            u_max: [one, zero],
            constant_velocity: None,
            initial: Arc::new(|p| sine_exact(p[0], T::zero())),
            exact: Arc::new(|p, t| sine_exact(p[0], t)),
            default_bc: BoundaryCondition::Periodic,
            t_end: one,
        },
        ProblemId::Advect2dConst => {
            let (a, b) = (T::lit(2.0), T::one());
            ProblemSpec {
                id,
                dim: 2,
                lo: [zero, zero],
                hi: [one, one],
                velocity: Arc::new(move |_| [a, b]),
                divergence: Arc::new(|_| T::zero()),
                u_max: [a, b],
                constant_velocity: Some([a, b]),
                initial: Arc::new(move |p| (two_pi * p[0]).sin() * (two_pi * p[1]).sin()),
                exact: Arc::new(move |p, t| (two_pi * (p[0] - a * t)).sin() * (two_pi * (p[1] - b * t)).sin()),
                default_bc: BoundaryCondition::Periodic,
                t_end: one,
            }
        }
    }
}

/// `s / (cos^2(x/2) + s^2 sin^2(x/2))` with `s = exp(t - 1)`.
fn sine_exact<T: Real>(x: T, t: T) -> T {
    let s = (t - T::one()).exp();
    let half = T::lit(0.5) * x;
    let (c, sn) = (half.cos(), half.sin());
    s / (c * c + s * s * sn * sn)
}

impl<T: Real> ProblemSpec<T> {
    /// The same problem with the velocity multiplied by `scale`.
    ///
    /// Every built-in velocity is autonomous, so the exact solution is the
    /// original one evaluated at time `scale * t`. A zero scale keeps the
    /// initial condition for all times.
    pub fn with_velocity_scale(mut self, scale: T) -> Self {
        if scale == T::one() {
            return self;
        }
        let (u, div, exact) = (self.velocity.clone(), self.divergence.clone(), self.exact.clone());
        self.velocity = Arc::new(move |p| {
            let v = u(p);
            [scale * v[0], scale * v[1]]
        });
        self.divergence = Arc::new(move |p| scale * div(p));
        self.exact = Arc::new(move |p, t| exact(p, scale * t));
        self.u_max = [scale.abs() * self.u_max[0], scale.abs() * self.u_max[1]];
        self.constant_velocity = self.constant_velocity.map(|c| [scale * c[0], scale * c[1]]);
        self
    }

    /// Uniform mesh of the problem domain with `counts[d]` subdomains per direction.
    pub fn mesh(&self, counts: [usize; 2], bc: BoundaryCondition) -> Result<Mesh<T>> {
        match self.dim {
            1 => Mesh::uniform_1d(self.lo[0], self.hi[0], counts[0], bc),
            _ => Mesh::uniform_2d((self.lo[0], self.hi[0]), (self.lo[1], self.hi[1]), (counts[0], counts[1]), (bc, bc)),
        }
    }

    pub fn velocity_model(&self, mesh: &Mesh<T>) -> Result<VelocityModel<T>> {
        if mesh.dim() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "{} is {}-dimensional but the mesh is {}-dimensional",
                self.id,
                self.dim,
                mesh.dim()
            )));
        }
        match self.constant_velocity {
            Some(c) => Ok(VelocityModel::constant(self.dim, c)),
            None => VelocityModel::analytic(mesh, self.velocity.clone(), self.divergence.clone(), self.u_max),
        }
    }
}

/// Largest central-difference residual of `phi_t + div(u phi)` at seeded
/// random interior space-time points.
pub fn verify_exact<T: Real>(problem: &ProblemSpec<T>, samples: usize, h: T) -> Result<T> {
    if !(h >= T::lit(1e-6) && h <= T::lit(1e-3)) {
        return Err(Error::InvalidArgument(format!("finite-difference step {h} outside [1e-6, 1e-3]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(VERIFY_SEED);
    let exact = &problem.exact;
    let u = &problem.velocity;
    let two_h = h + h;
    let mut worst = T::zero();
    for _ in 0..samples {
        let mut p = [T::zero(); 2];
        for d in 0..problem.dim {
            let r = T::lit(rng.gen_range(0.0..1.0));
            p[d] = problem.lo[d] + h + r * (problem.hi[d] - problem.lo[d] - two_h);
        }
        let t = h + T::lit(rng.gen_range(0.0..1.0)) * (problem.t_end - two_h);
        let mut residual = (exact(p, t + h) - exact(p, t - h)) / two_h;
        for d in 0..problem.dim {
            let (mut plus, mut minus) = (p, p);
            plus[d] = plus[d] + h;
            minus[d] = minus[d] - h;
            let flux = |q: Point<T>| u(q)[d] * exact(q, t);
            residual = residual + (flux(plus) - flux(minus)) / two_h;
        }
        worst = worst.max(residual.abs());
    }
    Ok(worst)
}
