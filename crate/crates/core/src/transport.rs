//! Velocity models, the containment time-step limit and explicit
//! Runge-Kutta integration of the particles and their transported values.
//!
//! Along a characteristic the particle obeys `dx/dt = u(x)` and the carried
//! scalar obeys `dphi/dt = -phi div(u)`. Both are advanced together as one
//! three-component state `[x, y, phi]` (`y` is inert in 1D).

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{Field, Mesh};
use crate::scalar::{Point, Real};
use crate::spectral::NodeBasis;

pub type VelocityFn<T> = Arc<dyn Fn(Point<T>) -> Point<T> + Send + Sync>;
pub type DivergenceFn<T> = Arc<dyn Fn(Point<T>) -> T + Send + Sync>;

/// Autonomous velocity field with its divergence and a componentwise speed bound.
#[derive(Clone)]
pub struct VelocityModel<T> {
    dim: usize,
    u: VelocityFn<T>,
    div: DivergenceFn<T>,
    u_max: Point<T>,
    constant: Option<Point<T>>,
}

impl<T: Real> std::fmt::Debug for VelocityModel<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VelocityModel")
            .field("dim", &self.dim)
            .field("u_max", &self.u_max)
            .field("constant", &self.constant)
            .finish()
    }
}

const BOUND_SAMPLES: usize = 10_000;

impl<T: Real> VelocityModel<T> {
    /// Spatially uniform velocity.
    pub fn constant(dim: usize, velocity: Point<T>) -> Self {
        let v = if dim == 1 { [velocity[0], T::zero()] } else { velocity };
        Self {
            dim,
            u: Arc::new(move |_| v),
            div: Arc::new(|_| T::zero()),
            u_max: [v[0].abs(), v[1].abs()],
            constant: Some(v),
        }
    }

    /// Analytic velocity. The bound `u_max` is spot-checked on a dense
    /// sample of the mesh domain and rejected if any sample exceeds it.
    pub fn analytic(mesh: &Mesh<T>, u: VelocityFn<T>, div: DivergenceFn<T>, u_max: Point<T>) -> Result<Self> {
        let dim = mesh.dim();
        let model = Self { dim, u, div, u_max, constant: None };
        model.check_bound(mesh)?;
        Ok(model)
    }

    /// Velocity interpolated from nodal values on the grid (1D only).
    ///
    /// `u` comes from the subdomain interpolant and `div u` from its
    /// derivative scaled by the inverse element width.
    pub fn from_grid(mesh: &Mesh<T>, basis: &NodeBasis<T>, nodal: &Field<T>) -> Result<Self> {
        if mesh.dim() != 1 {
            return Err(Error::InvalidArgument("grid velocity is only supported in 1D".into()));
        }
        if nodal.values.len() != mesh.subdomain_count() || nodal.values.iter().any(|v| v.len() != basis.len()) {
            return Err(Error::InvalidArgument("nodal velocity shape does not match mesh".into()));
        }
        let axis = *mesh.axis(0);
        let basis = Arc::new(basis.clone());
        let values = Arc::new(nodal.values.clone());
        let locate = move |x: T| -> (usize, T) {
            let x = axis.wrap(x);
            let k = axis.locate(x);
            (k, axis.to_reference(k, x))
        };
        let (b1, v1, l1) = (basis.clone(), values.clone(), locate);
        let u: VelocityFn<T> = Arc::new(move |p| {
            let (k, xi) = l1(p[0]);
            [b1.eval(&v1[k], xi), T::zero()]
        });
        let (b2, v2) = (basis.clone(), values.clone());
        let div: DivergenceFn<T> = Arc::new(move |p| {
            let (k, xi) = locate(p[0]);
            b2.deriv(&v2[k], xi) / axis.width
        });
        let mut u_max = T::zero();
        for s in 0..=BOUND_SAMPLES {
            let x = axis.lo + axis.length() * T::from_usize_lossy(s) / T::from_usize_lossy(BOUND_SAMPLES);
            u_max = u_max.max(u([x, T::zero()])[0].abs());
        }
        for v in nodal.values.iter().flatten() {
            u_max = u_max.max(v.abs());
        }
        Ok(Self { dim: 1, u, div, u_max: [u_max, T::zero()], constant: None })
    }

    fn check_bound(&self, mesh: &Mesh<T>) -> Result<()> {
        let tol = T::lit(1e-12);
        let per_dir = match self.dim {
            1 => BOUND_SAMPLES,
            _ => (BOUND_SAMPLES as f64).sqrt() as usize,
        };
        let sample = |d: usize, s: usize| {
            let a = mesh.axis(d);
            a.lo + a.length() * T::from_usize_lossy(s) / T::from_usize_lossy(per_dir)
        };
        let ys: Vec<T> = if self.dim == 1 { vec![T::zero()] } else { (0..=per_dir).map(|s| sample(1, s)).collect() };
        for sx in 0..=per_dir {
            let x = sample(0, sx);
            for &y in &ys {
                let v = (self.u)([x, y]);
                for d in 0..self.dim {
                    if v[d].abs() > self.u_max[d] + tol {
                        return Err(Error::InvalidArgument(format!(
                            "velocity bound violated at ({x}, {y}): |{}| > {}",
                            v[d], self.u_max[d]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn velocity(&self, p: Point<T>) -> Point<T> {
        (self.u)(p)
    }

    #[inline]
    pub fn divergence(&self, p: Point<T>) -> T {
        (self.div)(p)
    }

    pub fn u_max(&self) -> Point<T> {
        self.u_max
    }

    /// The uniform velocity when the model is spatially constant.
    pub fn as_constant(&self) -> Option<Point<T>> {
        self.constant
    }
}

/// Explicit Runge-Kutta scheme used for particles and flux quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TimeOrder {
    /// Forward Euler.
    First,
    /// Heun's method.
    Second,
    /// Three-stage strong-stability-preserving RK.
    Third,
}

impl TimeOrder {
    pub fn from_int(order: u32) -> Result<Self> {
        match order {
            1 => Ok(Self::First),
            2 => Ok(Self::Second),
            3 => Ok(Self::Third),
            _ => Err(Error::Config(format!("time order must be 1, 2 or 3 (got {order})"))),
        }
    }

    pub fn as_int(self) -> u32 {
        match self {
            Self::First => 1,
            Self::Second => 2,
            Self::Third => 3,
        }
    }
}

type State<T> = [T; 3];

#[inline]
fn axpy<T: Real>(a: &State<T>, s: T, b: &State<T>) -> State<T> {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

/// One explicit RK step of `dy/dt = f(y)`.
pub(crate) fn rk_step<T: Real, F>(order: TimeOrder, dt: T, y: State<T>, f: F) -> State<T>
where
    F: Fn(&State<T>) -> State<T>,
{
    match order {
        TimeOrder::First => axpy(&y, dt, &f(&y)),
        TimeOrder::Second => {
            let k1 = f(&y);
            let y1 = axpy(&y, dt, &k1);
            let k2 = f(&y1);
            let half = T::lit(0.5) * dt;
            [y[0] + half * (k1[0] + k2[0]), y[1] + half * (k1[1] + k2[1]), y[2] + half * (k1[2] + k2[2])]
        }
        TimeOrder::Third => {
            let y1 = axpy(&y, dt, &f(&y));
            let y1s = axpy(&y1, dt, &f(&y1));
            let (q, tq) = (T::lit(0.25), T::lit(0.75));
            let y2 = [tq * y[0] + q * y1s[0], tq * y[1] + q * y1s[1], tq * y[2] + q * y1s[2]];
            let y2s = axpy(&y2, dt, &f(&y2));
            let third = T::one() / T::lit(3.0);
            let two_thirds = T::lit(2.0) * third;
            [third * y[0] + two_thirds * y2s[0], third * y[1] + two_thirds * y2s[1], third * y[2] + two_thirds * y2s[2]]
        }
    }
}

/// Advances one particle and its carried value forward by `dt`.
pub fn integrate_particle<T: Real>(
    velocity: &VelocityModel<T>,
    p: Point<T>,
    phi: T,
    dt: T,
    order: TimeOrder,
) -> (Point<T>, T) {
    let out = rk_step(order, dt, [p[0], p[1], phi], |s| {
        let pos = [s[0], s[1]];
        let v = velocity.velocity(pos);
        [v[0], v[1], -s[2] * velocity.divergence(pos)]
    });
    ([out[0], out[1]], out[2])
}

/// Traces the characteristic through `p` at the new time back by `dt`.
///
/// Returns the origin and the growth factor `R` such that the value arriving
/// at `p` equals `R` times the value at the origin.
pub fn trace_back<T: Real>(velocity: &VelocityModel<T>, p: Point<T>, dt: T, order: TimeOrder) -> (Point<T>, T) {
    let out = rk_step(order, dt, [p[0], p[1], T::one()], |s| {
        let pos = [s[0], s[1]];
        let v = velocity.velocity(pos);
        [-v[0], -v[1], -s[2] * velocity.divergence(pos)]
    });
    ([out[0], out[1]], out[2])
}

/// How the minimum node spacing is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DtRule {
    /// Adjacent-node gaps and the edge-node-to-boundary gaps; guarantees containment.
    #[default]
    Strict,
    /// Adjacent-node gaps only.
    Paper,
}

impl std::str::FromStr for DtRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "strict" => Ok(Self::Strict),
            "paper" => Ok(Self::Paper),
            _ => Err(Error::Config(format!("unknown dt rule `{s}`"))),
        }
    }
}

/// Largest time step that keeps particles within their subdomain:
/// `safety * min_d (dxi_min,d / u_max,d)` in physical units.
pub fn stable_dt<T: Real>(
    mesh: &Mesh<T>,
    basis: &NodeBasis<T>,
    velocity: &VelocityModel<T>,
    rule: DtRule,
    safety: T,
) -> Result<T> {
    if !(safety > T::zero() && safety <= T::one()) {
        return Err(Error::InvalidArgument(format!("safety factor {safety} outside (0, 1]")));
    }
    let gap = match (rule, basis.min_interior_gap()) {
        (DtRule::Strict, Some(g)) => g.min(basis.min_edge_gap()),
        (DtRule::Strict, None) | (DtRule::Paper, None) => basis.min_edge_gap(),
        (DtRule::Paper, Some(g)) => g,
    };
    let u_max = velocity.u_max();
    let mut dt: Option<T> = None;
    for d in 0..mesh.dim() {
        if !u_max[d].is_finite() {
            return Err(Error::InvalidArgument("velocity bound is not finite".into()));
        }
        if u_max[d] > T::zero() {
            let limit = gap * mesh.axis(d).width / u_max[d];
            dt = Some(dt.map_or(limit, |m| m.min(limit)));
        }
    }
    dt.map(|d| d * safety).ok_or(Error::UnboundedTimeStep)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DtMode {
    #[default]
    Auto,
    Fixed,
}

impl std::str::FromStr for DtMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(Self::Auto),
            "fixed" => Ok(Self::Fixed),
            _ => Err(Error::Config(format!("unknown dt mode `{s}`"))),
        }
    }
}

/// Resolved time step and the schedule that lands exactly on the final time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl<T> {
    pub dt: T,
    pub mode: DtMode,
    pub safety: T,
    pub dt_rule: DtRule,
}

impl<T: Real> StepControl<T> {
    /// Resolves the step: the stable limit in auto mode, the given `dt` in fixed mode.
    pub fn resolve(
        mesh: &Mesh<T>,
        basis: &NodeBasis<T>,
        velocity: &VelocityModel<T>,
        mode: DtMode,
        fixed_dt: Option<T>,
        dt_rule: DtRule,
        safety: T,
    ) -> Result<Self> {
        let dt = match mode {
            DtMode::Auto => stable_dt(mesh, basis, velocity, dt_rule, safety)?,
            DtMode::Fixed => fixed_dt
                .filter(|d| *d > T::zero() && d.is_finite())
                .ok_or_else(|| Error::Config("fixed dt mode needs a positive dt".into()))?,
        };
        Ok(Self { dt, mode, safety, dt_rule })
    }

    /// `(dt, t_after)` for every step from 0 to `t_end`; the last step is truncated.
    pub fn schedule(&self, t_end: T) -> Vec<(T, T)> {
        let mut out = Vec::new();
        let mut t = T::zero();
        let slack = T::lit(1e-12) * t_end.max(T::one());
        let mut n = 0usize;
        while t_end - t > slack {
            n += 1;
            let next = T::from_usize_lossy(n) * self.dt;
            let next = if t_end - next <= slack { t_end } else { next };
            out.push((next - t, next));
            t = next;
        }
        out
    }
}

/// Advected particle positions and transported values per subdomain.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvectedState<T> {
    pub positions: Vec<Vec<Point<T>>>,
    pub values: Vec<Vec<T>>,
}

/// Tolerance on the closed subdomain bounds for the containment check.
pub(crate) fn containment_slack<T: Real>(lo: T, hi: T) -> T {
    T::epsilon() * T::lit(64.0) * (lo.abs() + hi.abs() + (hi - lo))
}

/// Moves every Gauss-node particle forward by `dt`.
///
/// With `strict` set, a particle that leaves its subdomain's closed bounds
/// is reported as [`Error::Containment`].
pub fn advect<T: Real>(
    mesh: &Mesh<T>,
    basis: &NodeBasis<T>,
    field: &Field<T>,
    velocity: &VelocityModel<T>,
    dt: T,
    order: TimeOrder,
    strict: bool,
) -> Result<AdvectedState<T>> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("time step {dt} must be positive")));
    }
    let per_subdomain: Vec<(Vec<Point<T>>, Vec<T>)> = (0..mesh.subdomain_count())
        .into_par_iter()
        .map(|k| {
            let nodes = mesh.physical_nodes(basis, k);
            let bounds = mesh.bounds(k);
            let mut pos = Vec::with_capacity(nodes.len());
            let mut vals = Vec::with_capacity(nodes.len());
            for (p, &phi) in nodes.iter().zip(field.subdomain(k)) {
                let (q, v) = integrate_particle(velocity, *p, phi, dt, order);
                if !(q[0].is_finite() && q[1].is_finite() && v.is_finite()) {
                    return Err(Error::Numerical(format!("advected state in subdomain {k}")));
                }
                if strict {
                    for (d, &(lo, hi)) in bounds.iter().enumerate() {
                        let slack = containment_slack(lo, hi);
                        if q[d] < lo - slack || q[d] > hi + slack {
                            return Err(Error::Containment {
                                subdomain: k,
                                position: q[d].to_f64_lossy(),
                                lo: lo.to_f64_lossy(),
                                hi: hi.to_f64_lossy(),
                            });
                        }
                    }
                }
                pos.push(q);
                vals.push(v);
            }
            Ok((pos, vals))
        })
        .collect::<Result<_>>()?;
    let (positions, values) = per_subdomain.into_iter().unzip();
    Ok(AdvectedState { positions, values })
}
