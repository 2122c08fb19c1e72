//! One-dimensional remap of the advected polynomial onto the Gauss nodes.
//!
//! A step runs in three phases. Phase A (per subdomain) advects the
//! particles, interpolates the advected polynomial back to the Gauss nodes
//! and computes the boundary candidates the subdomain owns. Phase B resolves
//! each interface by upwinding, touching only neighbour pairs. Phase C (per
//! subdomain) builds the mass/energy targets and solves the constrained
//! least-squares system.

use rayon::prelude::*;

use crate::densela::{solve_least_squares, DenseMatrix};
use crate::error::{Error, Result};
use crate::mesh::{Field, Mesh};
use crate::scalar::{Point, Real};
use crate::scheme::{BoundaryMethod, SchemeSpec};
use crate::spectral::{barycentric_eval, barycentric_weights, NodeBasis};
use crate::transport::{advect, containment_slack, trace_back, AdvectedState, DtRule, TimeOrder, VelocityModel};

/// Fixed-point tolerance on the energy-constrained iterate.
pub const ENERGY_TOLERANCE: f64 = 1e-8;
/// Iteration cap for the energy-constrained solve.
pub const ENERGY_MAX_ITERATIONS: usize = 100;

/// Speeds at or below this are treated as zero when upwinding.
pub const UPWIND_ZERO: f64 = 1e-14;

/// Subdomain side: `Left` is `b = 1`, `Right` is `b = 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn reference_coordinate<T: Real>(self) -> T {
        match self {
            Side::Left => T::zero(),
            Side::Right => T::one(),
        }
    }
}

/// Interpolant through advected particles, in reference coordinates of its subdomain.
#[derive(Debug, Clone)]
pub struct AdvectedInterpolant<T> {
    nodes: Vec<T>,
    bary: Vec<T>,
    values: Vec<T>,
}

impl<T: Real> AdvectedInterpolant<T> {
    /// Fails when the advected positions are not strictly increasing.
    pub fn new(reference_positions: Vec<T>, values: Vec<T>) -> Result<Self> {
        if reference_positions.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::IllPosedInterpolant("advected positions are not strictly increasing".into()));
        }
        let bary = barycentric_weights(&reference_positions).map_err(|e| Error::IllPosedInterpolant(e.to_string()))?;
        Ok(Self { nodes: reference_positions, bary, values })
    }

    /// Builds the interpolant of subdomain `k` from an advected state.
    pub fn from_state(mesh: &Mesh<T>, state: &AdvectedState<T>, k: usize) -> Result<Self> {
        let axis = mesh.axis(0);
        let cell = mesh.cell(k)[0];
        let xi = state.positions[k].iter().map(|p| axis.to_reference(cell, p[0])).collect();
        Self::new(xi, state.values[k].clone())
    }

    pub fn eval(&self, xi: T) -> T {
        barycentric_eval(&self.nodes, &self.bary, &self.values, xi)
    }
}

/// Values of the advected interpolant at the fixed Gauss nodes.
pub fn remap_interior<T: Real>(
    mesh: &Mesh<T>,
    basis: &NodeBasis<T>,
    state: &AdvectedState<T>,
    k: usize,
) -> Result<Vec<T>> {
    let interp = AdvectedInterpolant::from_state(mesh, state, k)?;
    Ok(basis.nodes().iter().map(|&xi| interp.eval(xi)).collect())
}

/// Boundary candidate from the advected interpolant.
pub fn boundary_value_interp<T: Real>(mesh: &Mesh<T>, state: &AdvectedState<T>, k: usize, side: Side) -> Result<T> {
    Ok(AdvectedInterpolant::from_state(mesh, state, k)?.eval(side.reference_coordinate()))
}

/// Boundary candidate from the characteristic through the boundary point.
///
/// The origin is traced back with the same RK order and the old solution of
/// the subdomain holding the origin is evaluated there; the transported
/// growth factor along the characteristic is applied.
#[allow(clippy::too_many_arguments)]
pub fn boundary_value_backtrack<T: Real>(
    mesh: &Mesh<T>,
    basis: &NodeBasis<T>,
    field_n: &Field<T>,
    velocity: &VelocityModel<T>,
    dt: T,
    k: usize,
    side: Side,
    order: TimeOrder,
) -> Result<T> {
    let axis = mesh.axis(0);
    let (lo, hi) = axis.cell_bounds(k);
    let xb = match side {
        Side::Left => lo,
        Side::Right => hi,
    };
    let (origin, growth) = trace_back(velocity, [xb, T::zero()], dt, order);
    let x0 = origin[0];
    let slack = containment_slack(lo, hi);
    let (owner, x_local) = if x0 >= lo - slack && x0 <= hi + slack {
        (k, x0)
    } else {
        let upper = x0 > hi;
        let nb = mesh.neighbor(k, 0, upper).ok_or(Error::BacktrackRange { subdomain: k, origin: x0.to_f64_lossy() })?;
        // periodic wrap when stepping past either end of the axis
        let shift = match (upper, k) {
            (false, 0) => axis.length(),
            (true, k) if k + 1 == axis.count => -axis.length(),
            _ => T::zero(),
        };
        let x = x0 + shift;
        let (nlo, nhi) = axis.cell_bounds(nb);
        let nslack = containment_slack(nlo, nhi);
        if x < nlo - nslack || x > nhi + nslack {
            return Err(Error::BacktrackRange { subdomain: k, origin: x0.to_f64_lossy() });
        }
        (nb, x)
    };
    let xi = axis.to_reference(mesh.cell(owner)[0], x_local);
    Ok(growth * basis.eval(field_n.subdomain(owner), xi))
}

/// Upwind selection of the shared interface value.
///
/// `left_candidate` is the right-boundary value of the left subdomain,
/// `right_candidate` the left-boundary value of the right subdomain.
pub fn resolve_interface<T: Real>(left_candidate: T, right_candidate: T, u: T) -> T {
    if u > T::lit(UPWIND_ZERO) {
        left_candidate
    } else if u < -T::lit(UPWIND_ZERO) {
        right_candidate
    } else {
        T::lit(0.5) * (left_candidate + right_candidate)
    }
}

/// Active constraint rows and their right-hand sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintTargets<T> {
    /// `[left, right]` interface values after upwinding.
    pub boundary: Option<[T; 2]>,
    pub mass: Option<T>,
    pub energy: Option<T>,
}

impl<T: Real> ConstraintTargets<T> {
    pub fn none() -> Self {
        Self { boundary: None, mass: None, energy: None }
    }
}

/// Nodal weights of an RK-order quadrature on `[0, dt]` as `(tau, weight)`.
pub(crate) fn flux_quadrature<T: Real>(order: TimeOrder, dt: T) -> Vec<(T, T)> {
    let half = T::lit(0.5) * dt;
    match order {
        TimeOrder::First => vec![(T::zero(), dt)],
        TimeOrder::Second => vec![(half, dt)],
        TimeOrder::Third => {
            let sixth = dt / T::lit(6.0);
            vec![(T::zero(), sixth), (half, T::lit(4.0) * sixth), (dt, sixth)]
        }
    }
}

/// `width * int_0^1 phi^power` and its flux-updated value after `dt`.
#[allow(clippy::too_many_arguments)]
fn conserved_target<T: Real>(
    values_n: &[T],
    basis: &NodeBasis<T>,
    lo: T,
    width: T,
    velocity: &VelocityModel<T>,
    dt: T,
    order: TimeOrder,
    power: i32,
) -> (T, T) {
    let current = width * basis.quad_weights().iter().zip(values_n).map(|(&w, &v)| w * v.powi(power)).sum::<T>();
    // phi at a boundary point `tau` after t^n, traced back into the old interpolant
    let state_at = |xb: T, tau: T| -> T {
        if tau == T::zero() {
            return basis.eval(values_n, (xb - lo) / width);
        }
        let (origin, growth) = trace_back(velocity, [xb, T::zero()], tau, order);
        growth * basis.eval(values_n, (origin[0] - lo) / width)
    };
    let (xl, xr) = (lo, lo + width);
    let (ul, ur) = (velocity.velocity([xl, T::zero()])[0], velocity.velocity([xr, T::zero()])[0]);
    let integral: T = flux_quadrature(order, dt)
        .into_iter()
        .map(|(tau, w)| w * (ul * state_at(xl, tau).powi(power) - ur * state_at(xr, tau).powi(power)))
        .sum();
    (current, current + integral)
}

/// Mass `M^n` of subdomain `k` and the inflow-minus-outflow target `M^{n+1}`.
pub fn mass_target<T: Real>(
    mesh: &Mesh<T>,
    basis: &NodeBasis<T>,
    field_n: &Field<T>,
    k: usize,
    velocity: &VelocityModel<T>,
    dt: T,
    order: TimeOrder,
) -> (T, T) {
    let axis = mesh.axis(0);
    let lo = axis.cell_bounds(k).0;
    conserved_target(field_n.subdomain(k), basis, lo, axis.width, velocity, dt, order, 1)
}

/// Energy `E^n` of subdomain `k` and its flux-updated target `E^{n+1}`.
pub fn energy_target<T: Real>(
    mesh: &Mesh<T>,
    basis: &NodeBasis<T>,
    field_n: &Field<T>,
    k: usize,
    velocity: &VelocityModel<T>,
    dt: T,
    order: TimeOrder,
) -> (T, T) {
    let axis = mesh.axis(0);
    let lo = axis.cell_bounds(k).0;
    conserved_target(field_n.subdomain(k), basis, lo, axis.width, velocity, dt, order, 2)
}

/// Outcome of one constrained least-squares remap.
#[derive(Debug, Clone, PartialEq)]
pub struct RemapSolution<T> {
    pub values: Vec<T>,
    /// Fixed-point iterations spent on the energy row (0 without it).
    pub energy_iterations: usize,
    /// False when the energy iteration hit the cap before converging.
    pub converged: bool,
}

/// Generic row builder: identity rows, boundary rows, mass row, optional energy row.
pub(crate) fn constrained_rows<T: Real>(
    n: usize,
    boundary_rows: &[(Vec<T>, T)],
    mass_row: Option<(Vec<T>, T)>,
    intermediate: &[T],
) -> (DenseMatrix<T>, Vec<T>) {
    let mut a = DenseMatrix::identity(n);
    let mut b = intermediate.to_vec();
    for (row, rhs) in boundary_rows {
        a.push_row(row);
        b.push(*rhs);
    }
    if let Some((row, rhs)) = mass_row {
        a.push_row(&row);
        b.push(rhs);
    }
    (a, b)
}

/// Solves the overdetermined remap system with an optional energy row
/// `width * w_j * phi^(k-1)_j` iterated to a fixed point.
pub(crate) fn solve_with_energy<T: Real>(
    a: DenseMatrix<T>,
    b: Vec<T>,
    energy: Option<(Vec<T>, T)>,
    seed: Option<&[T]>,
) -> Result<RemapSolution<T>> {
    let Some((scaled_weights, target)) = energy else {
        let values = solve_least_squares(&a, &b)?;
        return Ok(RemapSolution { values, energy_iterations: 0, converged: true });
    };
    let mut prev = match seed {
        Some(s) => s.to_vec(),
        None => solve_least_squares(&a, &b)?,
    };
    let tol = T::lit(ENERGY_TOLERANCE);
    for it in 1..=ENERGY_MAX_ITERATIONS {
        let mut ak = a.clone();
        let row: Vec<T> = scaled_weights.iter().zip(&prev).map(|(&w, &p)| w * p).collect();
        ak.push_row(&row);
        let mut bk = b.clone();
        bk.push(target);
        let next = solve_least_squares(&ak, &bk)?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("energy iteration produced a non-finite value".into()));
        }
        let change = next.iter().zip(&prev).fold(T::zero(), |m, (x, y)| m.max((*x - *y).abs()));
        prev = next;
        if change < tol {
            return Ok(RemapSolution { values: prev, energy_iterations: it, converged: true });
        }
    }
    Ok(RemapSolution { values: prev, energy_iterations: ENERGY_MAX_ITERATIONS, converged: false })
}

/// Builds and solves the 1D constrained least-squares system.
///
/// Rows: `N` identity rows against the intermediate values, boundary rows
/// `h_j(xi_b)`, the mass row `width * w_j` and the energy row
/// `width * w_j * phi^(k-1)_j`. `seed` replaces the first energy iterate.
pub fn assemble_and_solve<T: Real>(
    intermediate: &[T],
    targets: &ConstraintTargets<T>,
    basis: &NodeBasis<T>,
    width: T,
    seed: Option<&[T]>,
) -> Result<RemapSolution<T>> {
    let n = basis.len();
    if intermediate.len() != n {
        return Err(Error::InvalidArgument(format!("{} intermediate values for {n} nodes", intermediate.len())));
    }
    let boundary_rows: Vec<(Vec<T>, T)> = match targets.boundary {
        Some([left, right]) => vec![(basis.cardinals(T::one()), right), (basis.cardinals(T::zero()), left)],
        None => Vec::new(),
    };
    let scaled: Vec<T> = basis.quad_weights().iter().map(|&w| width * w).collect();
    let mass_row = targets.mass.map(|m| (scaled.clone(), m));
    let (a, b) = constrained_rows(n, &boundary_rows, mass_row, intermediate);
    solve_with_energy(a, b, targets.energy.map(|e| (scaled, e)), seed)
}

/// Ghost solution `g(x, t)` imposed outside Dirichlet boundaries.
pub type GhostFn<'a, T> = &'a (dyn Fn(Point<T>, T) -> T + Sync);

/// Everything a step needs besides the solution itself.
#[derive(Clone, Copy)]
pub struct StepContext<'a, T> {
    pub mesh: &'a Mesh<T>,
    pub basis: &'a NodeBasis<T>,
    pub velocity: &'a VelocityModel<T>,
    pub scheme: SchemeSpec,
    /// Required when any direction is Dirichlet.
    pub ghost: Option<GhostFn<'a, T>>,
}

/// Result of one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome<T> {
    pub field: Field<T>,
    pub energy_iterations_max: usize,
    /// Subdomains whose energy iteration hit the cap.
    pub energy_unconverged: usize,
}

struct PhaseA<T> {
    intermediate: Vec<T>,
    left: Option<T>,
    right: Option<T>,
}

pub(crate) fn is_upwind<T: Real>(u: T, outward_positive: bool) -> bool {
    let z = T::lit(UPWIND_ZERO);
    if u.abs() <= z {
        return true;
    }
    (u > T::zero()) == outward_positive
}

/// Advances a 1D field from `t_n` to `t_n + dt`.
pub fn step_1d<T: Real>(ctx: &StepContext<'_, T>, field: &Field<T>, t_n: T, dt: T) -> Result<StepOutcome<T>> {
    let StepContext { mesh, basis, velocity, scheme, ghost } = *ctx;
    if mesh.dim() != 1 {
        return Err(Error::InvalidArgument("step_1d needs a 1D mesh".into()));
    }
    let axis = *mesh.axis(0);
    let count = axis.count;
    let strict = scheme.dt_rule == DtRule::Strict;
    let state = advect(mesh, basis, field, velocity, dt, scheme.time_order, strict)?;
    let speed = |x: T| velocity.velocity([x, T::zero()])[0];

    // phase A
    let phase_a: Vec<PhaseA<T>> = (0..count)
        .into_par_iter()
        .map(|k| {
            let interp = AdvectedInterpolant::from_state(mesh, &state, k)?;
            let intermediate = basis.nodes().iter().map(|&xi| interp.eval(xi)).collect();
            let (lo, hi) = axis.cell_bounds(k);
            let candidate = |side: Side, xb: T, outward_positive: bool| -> Result<Option<T>> {
                if !is_upwind(speed(xb), outward_positive) {
                    return Ok(None);
                }
                Ok(Some(match scheme.boundary {
                    BoundaryMethod::Interp => interp.eval(side.reference_coordinate()),
                    BoundaryMethod::Backtrack => {
                        boundary_value_backtrack(mesh, basis, field, velocity, dt, k, side, scheme.time_order)?
                    }
                }))
            };
            Ok(PhaseA {
                intermediate,
                left: candidate(Side::Left, lo, false)?,
                right: candidate(Side::Right, hi, true)?,
            })
        })
        .collect::<Result<_>>()?;

    // phase B: interface i sits between subdomain i-1 and i; interface `count` is the right end
    let t_next = t_n + dt;
    let ghost_value = |x: T| -> Result<T> {
        let g = ghost.ok_or_else(|| Error::InvalidArgument("Dirichlet boundary needs a ghost solution".into()))?;
        Ok(g([x, T::zero()], t_next))
    };
    let mut interface = Vec::with_capacity(count + 1);
    for i in 0..=count {
        let x = if i == count { axis.hi } else { axis.cell_bounds(i).0 };
        let left_owner = if i == 0 { axis.lower(0) } else { Some(i - 1) };
        let right_owner = if i == count { axis.upper(count - 1) } else { Some(i) };
        let from_left = match left_owner {
            Some(k) => phase_a[k].right,
            None => Some(ghost_value(x)?),
        };
        let from_right = match right_owner {
            Some(k) => phase_a[k].left,
            None => Some(ghost_value(x)?),
        };
        let u = speed(x);
        let missing = || Error::Numerical(format!("upwind candidate missing at interface {i}"));
        let value = if u > T::lit(UPWIND_ZERO) {
            from_left.ok_or_else(missing)?
        } else if u < -T::lit(UPWIND_ZERO) {
            from_right.ok_or_else(missing)?
        } else {
            resolve_interface(from_left.ok_or_else(missing)?, from_right.ok_or_else(missing)?, u)
        };
        interface.push(value);
    }

    // phase C
    let solved: Vec<RemapSolution<T>> = (0..count)
        .into_par_iter()
        .map(|k| {
            let c = scheme.constraints;
            let targets = ConstraintTargets {
                boundary: Some([interface[k], interface[k + 1]]),
                mass: c.has_mass().then(|| mass_target(mesh, basis, field, k, velocity, dt, scheme.time_order).1),
                energy: c.has_energy().then(|| energy_target(mesh, basis, field, k, velocity, dt, scheme.time_order).1),
            };
            assemble_and_solve(&phase_a[k].intermediate, &targets, basis, axis.width, None)
        })
        .collect::<Result<_>>()?;

    let energy_iterations_max = solved.iter().map(|s| s.energy_iterations).max().unwrap_or(0);
    let energy_unconverged = solved.iter().filter(|s| !s.converged).count();
    let field = Field::new(solved.into_iter().map(|s| s.values).collect());
    if !field.is_finite() {
        return Err(Error::Numerical("non-finite solution after remap".into()));
    }
    Ok(StepOutcome { field, energy_iterations_max, energy_unconverged })
}
