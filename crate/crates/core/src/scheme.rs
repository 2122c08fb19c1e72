//! Scheme configuration: constraint set, time order, boundary method.

use crate::error::{Error, Result};
use crate::transport::{DtRule, TimeOrder};

/// Extra least-squares rows beyond the interior and boundary rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constraints {
    /// Boundary rows only ("Basecase").
    BoundaryOnly,
    /// Boundary rows plus the local mass row ("MF").
    Mass,
    /// Boundary rows plus mass and energy rows ("MEF").
    MassEnergy,
}

impl Constraints {
    pub fn has_mass(self) -> bool {
        !matches!(self, Self::BoundaryOnly)
    }

    pub fn has_energy(self) -> bool {
        matches!(self, Self::MassEnergy)
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::BoundaryOnly => "Basecase",
            Self::Mass => "MF",
            Self::MassEnergy => "MEF",
        }
    }
}

impl std::str::FromStr for Constraints {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "basecase" | "boundary" => Ok(Self::BoundaryOnly),
            "mf" | "mass" => Ok(Self::Mass),
            "mef" | "mass_energy" => Ok(Self::MassEnergy),
            _ => Err(Error::Config(format!("unknown scheme `{s}`"))),
        }
    }
}

/// Source of the candidate interface values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum BoundaryMethod {
    /// Trace the characteristic through the boundary point back into the old solution.
    Backtrack,
    /// Evaluate the advected interpolant at the boundary point.
    #[default]
    Interp,
}

impl std::str::FromStr for BoundaryMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "backtrack" => Ok(Self::Backtrack),
            "interp" | "interpolation" => Ok(Self::Interp),
            _ => Err(Error::Config(format!("unknown boundary method `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SchemeSpec {
    pub constraints: Constraints,
    pub time_order: TimeOrder,
    pub boundary: BoundaryMethod,
    pub dt_rule: DtRule,
}

impl SchemeSpec {
    pub fn new(constraints: Constraints, time_order: TimeOrder) -> Self {
        Self { constraints, time_order, boundary: BoundaryMethod::default(), dt_rule: DtRule::default() }
    }

    pub fn with_boundary(mut self, boundary: BoundaryMethod) -> Self {
        self.boundary = boundary;
        self
    }

    /// Case name such as `Basecase1`, `MF2` or `MEF1`.
    pub fn name(&self) -> String {
        format!("{}{}", self.constraints.label(), self.time_order.as_int())
    }

    /// Parses a case name (`basecase2`, `MF3`, ...) into constraints and order.
    pub fn parse_name(name: &str) -> Result<Self> {
        let lower = name.trim().to_ascii_lowercase();
        let split = lower
            .find(|c: char| c.is_ascii_digit())
            .ok_or_else(|| Error::Config(format!("case name `{name}` lacks a time order digit")))?;
        let (label, digits) = lower.split_at(split);
        let order: u32 = digits.parse().map_err(|_| Error::Config(format!("bad time order in `{name}`")))?;
        Ok(Self::new(label.parse()?, TimeOrder::from_int(order)?))
    }
}
