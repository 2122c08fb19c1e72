//! Error and conservation norms.
//!
//! All integrals use an oversampled interpolatory rule: the nodal polynomial
//! of each subdomain is evaluated on `2N` nodes of the same family and
//! integrated there, so squared integrands of degree up to `2N - 2` are exact.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{Field, Mesh};
use crate::scalar::{Point, Real};
use crate::spectral::NodeBasis;

/// Exact integrals below this magnitude make a ratio norm meaningless.
pub const DEGENERATE_THRESHOLD: f64 = 1e-12;

/// Exact solution as a function of position and time.
pub type ExactRef<'a, T> = &'a (dyn Fn(Point<T>, T) -> T + Sync);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormReport<T> {
    pub t: T,
    pub l2_error: T,
    /// `None` when the exact global mass is degenerate.
    pub mass_norm: Option<T>,
    pub energy_norm: Option<T>,
    pub mass_raw: T,
}

/// Per-subdomain integrals of one field against the exact solution.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LocalIntegrals<T> {
    pub mass: T,
    pub energy: T,
    pub exact_mass: T,
    pub exact_energy: T,
    pub squared_error: T,
}

/// Oversampled quadrature tied to a coarse nodal basis.
#[derive(Debug, Clone)]
pub struct NormEvaluator<T> {
    coarse: NodeBasis<T>,
    fine: NodeBasis<T>,
    /// `fine.len() x coarse.len()` cardinal values, row-major.
    map: Vec<T>,
}

impl<T: Real> NormEvaluator<T> {
    /// Oversampling by a factor of two.
    pub fn new(basis: &NodeBasis<T>) -> Result<Self> {
        Self::with_factor(basis, 2)
    }

    pub fn with_factor(basis: &NodeBasis<T>, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidArgument("oversampling factor must be positive".into()));
        }
        let fine = NodeBasis::new(factor * basis.len(), basis.rule())?;
        let map = fine.nodes().iter().flat_map(|&xi| basis.cardinals(xi)).collect();
        Ok(Self { coarse: basis.clone(), fine, map })
    }

    pub fn fine_basis(&self) -> &NodeBasis<T> {
        &self.fine
    }

    fn refine_1d(&self, values: &[T]) -> Vec<T> {
        let n = self.coarse.len();
        self.map.chunks(n).map(|row| row.iter().zip(values).map(|(&c, &v)| c * v).sum()).collect()
    }

    /// Nodal values interpolated to the fine nodes (tensor product in 2D).
    pub fn refine(&self, dim: usize, values: &[T]) -> Vec<T> {
        if dim == 1 {
            return self.refine_1d(values);
        }
        let n = self.coarse.len();
        let m = self.fine.len();
        // along eta first, one coarse xi-row at a time
        let half: Vec<Vec<T>> = values.chunks(n).map(|row| self.refine_1d(row)).collect();
        let mut out = vec![T::zero(); m * m];
        for b in 0..m {
            let column: Vec<T> = half.iter().map(|r| r[b]).collect();
            for (a, v) in self.refine_1d(&column).into_iter().enumerate() {
                out[a * m + b] = v;
            }
        }
        out
    }

    /// Physical quadrature weights of the fine rule on one subdomain.
    fn weights(&self, mesh: &Mesh<T>) -> Vec<T> {
        let w = self.fine.quad_weights();
        let jac = mesh.jacobian();
        if mesh.dim() == 1 {
            return w.iter().map(|&wi| wi * jac).collect();
        }
        w.iter().flat_map(|&wi| w.iter().map(move |&wj| wi * wj * jac)).collect()
    }

    /// Integrals of subdomain `k`.
    pub fn local(&self, mesh: &Mesh<T>, field: &Field<T>, exact: ExactRef<'_, T>, t: T, k: usize) -> LocalIntegrals<T> {
        let phi = self.refine(mesh.dim(), field.subdomain(k));
        let points = mesh.physical_nodes(&self.fine, k);
        let mut acc = LocalIntegrals::default();
        for ((w, p), v) in self.weights(mesh).into_iter().zip(points).zip(phi) {
            let e = exact(p, t);
            acc.mass = acc.mass + w * v;
            acc.energy = acc.energy + w * v * v;
            acc.exact_mass = acc.exact_mass + w * e;
            acc.exact_energy = acc.exact_energy + w * e * e;
            acc.squared_error = acc.squared_error + w * (v - e) * (v - e);
        }
        acc
    }

    /// Integrals of every subdomain, in subdomain order.
    pub fn all_local(&self, mesh: &Mesh<T>, field: &Field<T>, exact: ExactRef<'_, T>, t: T) -> Vec<LocalIntegrals<T>> {
        (0..mesh.subdomain_count()).into_par_iter().map(|k| self.local(mesh, field, exact, t, k)).collect()
    }

    pub fn report(&self, mesh: &Mesh<T>, field: &Field<T>, exact: ExactRef<'_, T>, t: T) -> NormReport<T> {
        let local = self.all_local(mesh, field, exact, t);
        let sum = |f: fn(&LocalIntegrals<T>) -> T| local.iter().fold(T::zero(), |s, l| s + f(l));
        let l2_error = local.iter().fold(T::zero(), |s, l| s + l.squared_error.max(T::zero()).sqrt());
        let mass_raw = sum(|l| l.mass);
        NormReport {
            t,
            l2_error,
            mass_norm: ratio(mass_raw, sum(|l| l.exact_mass)).ok(),
            energy_norm: ratio(sum(|l| l.energy), sum(|l| l.exact_energy)).ok(),
            mass_raw,
        }
    }
}

fn ratio<T: Real>(num: T, den: T) -> Result<T> {
    if !(den.abs() > T::lit(DEGENERATE_THRESHOLD)) {
        return Err(Error::DegenerateNormalization(den.to_f64_lossy()));
    }
    Ok(num / den)
}

/// Sum over subdomains of the local L2 error norms.
pub fn l2_error<T: Real>(
    mesh: &Mesh<T>,
    basis: &NodeBasis<T>,
    field: &Field<T>,
    exact: ExactRef<'_, T>,
    t: T,
) -> Result<T> {
    Ok(NormEvaluator::new(basis)?.report(mesh, field, exact, t).l2_error)
}

/// Global mass over global exact mass.
pub fn mass_norm<T: Real>(
    mesh: &Mesh<T>,
    basis: &NodeBasis<T>,
    field: &Field<T>,
    exact: ExactRef<'_, T>,
    t: T,
) -> Result<T> {
    let local = NormEvaluator::new(basis)?.all_local(mesh, field, exact, t);
    let num = local.iter().fold(T::zero(), |s, l| s + l.mass);
    ratio(num, local.iter().fold(T::zero(), |s, l| s + l.exact_mass))
}

/// Global energy over global exact energy.
pub fn energy_norm<T: Real>(
    mesh: &Mesh<T>,
    basis: &NodeBasis<T>,
    field: &Field<T>,
    exact: ExactRef<'_, T>,
    t: T,
) -> Result<T> {
    let local = NormEvaluator::new(basis)?.all_local(mesh, field, exact, t);
    let num = local.iter().fold(T::zero(), |s, l| s + l.energy);
    ratio(num, local.iter().fold(T::zero(), |s, l| s + l.exact_energy))
}

/// Global integral of the field.
pub fn mass_raw<T: Real>(mesh: &Mesh<T>, basis: &NodeBasis<T>, field: &Field<T>) -> Result<T> {
    let zero = |_: Point<T>, _: T| T::zero();
    let local = NormEvaluator::new(basis)?.all_local(mesh, field, &zero, T::zero());
    Ok(local.iter().fold(T::zero(), |s, l| s + l.mass))
}
