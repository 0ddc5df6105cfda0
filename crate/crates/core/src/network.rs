//! Impedance algebra and single-node harmonic circuit composition.
//!
//! [`ImpedanceExpr`] is an immutable expression tree over analytic elements
//! (R, L, C), fitted models, series/parallel composition, scaling, and
//! structural open/short markers. Open and short are markers rather than
//! huge/tiny numbers, which keeps near-resonance arithmetic free of float
//! overflow artifacts: `parallel(x, open) == x` and `series(x, short) == x`
//! hold exactly.
//!
//! [`HarmonicNetwork`] is the one-node circuit of grid branch, inverter
//! branch and shunt/tank branch meeting at the point of common coupling.
//! Harmonic current injection and background-voltage division at that node
//! are the two magnification mechanisms this crate quantifies.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fitting::RationalModel;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("expression is an open circuit at {frequency} Hz")]
    OpenCircuitEvaluation { frequency: f64 },
    #[error("admittance of an exact short requested at {frequency} Hz")]
    DivisionByZeroImpedance { frequency: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("branch count must be >= 1, got {0}")]
    InvalidCount(usize),
    #[error("degenerate node at {frequency} Hz: parallel impedance is unbounded or absent")]
    DegenerateNode { frequency: f64 },
    #[error("undamped series resonance hit exactly at {frequency} Hz; add damping or perturb the frequency")]
    DegenerateLoop { frequency: f64 },
    #[error("cannot load referenced model: {0}")]
    ModelLoad(String),
}

/// Closed, evaluable impedance term.
#[derive(Debug, Clone, PartialEq)]
pub enum ImpedanceExpr {
    /// Ideal resistor, ohms.
    Resistor(f64),
    /// Ideal inductor, henries.
    Inductor(f64),
    /// Ideal capacitor, farads; open circuit at f = 0 by convention.
    Capacitor(f64),
    /// Fitted pole-residue model.
    Model(RationalModel),
    Series(Vec<ImpedanceExpr>),
    Parallel(Vec<ImpedanceExpr>),
    /// Impedance multiplied by a positive real factor.
    Scaled(Box<ImpedanceExpr>, f64),
    Open,
    Short,
}

impl ImpedanceExpr {
    pub fn series(terms: Vec<ImpedanceExpr>) -> Self {
        Self::Series(terms)
    }

    pub fn parallel(terms: Vec<ImpedanceExpr>) -> Self {
        Self::Parallel(terms)
    }
}

/// Structural value of a branch at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BranchValue {
    Open,
    Z(Complex64),
}

impl BranchValue {
    pub fn finite(self) -> Option<Complex64> {
        match self {
            BranchValue::Open => None,
            BranchValue::Z(z) => Some(z),
        }
    }
}

/// Structural evaluation: opens propagate through series, vanish from
/// parallels, and an exact short inside a parallel wins outright. A parallel
/// whose admittances cancel exactly is an open (unbounded tank impedance).
pub fn eval_structural(expr: &ImpedanceExpr, f_hz: f64) -> BranchValue {
    let omega = 2.0 * PI * f_hz;
    match expr {
        ImpedanceExpr::Resistor(r) => BranchValue::Z(Complex64::new(*r, 0.0)),
        ImpedanceExpr::Inductor(l) => BranchValue::Z(Complex64::new(0.0, omega * l)),
        ImpedanceExpr::Capacitor(c) => {
            if omega == 0.0 {
                BranchValue::Open
            } else {
                BranchValue::Z(Complex64::new(0.0, -1.0 / (omega * c)))
            }
        }
        ImpedanceExpr::Model(m) => BranchValue::Z(m.evaluate(f_hz)),
        ImpedanceExpr::Series(terms) => {
            let mut sum = Complex64::new(0.0, 0.0);
            for t in terms {
                match eval_structural(t, f_hz) {
                    BranchValue::Open => return BranchValue::Open,
                    BranchValue::Z(z) => sum += z,
                }
            }
            BranchValue::Z(sum)
        }
        ImpedanceExpr::Parallel(terms) => {
            let zero = Complex64::new(0.0, 0.0);
            let mut finite = Vec::with_capacity(terms.len());
            for t in terms {
                match eval_structural(t, f_hz) {
                    BranchValue::Open => {}
                    BranchValue::Z(z) if z == zero => return BranchValue::Z(zero),
                    BranchValue::Z(z) => finite.push(z),
                }
            }
            match finite.len() {
                0 => BranchValue::Open,
                // single live term passes through untouched so that
                // parallel(x, open) == x is bit-exact
                1 => BranchValue::Z(finite[0]),
                _ => {
                    let y: Complex64 = finite.iter().map(|z| z.inv()).sum();
                    if y == zero {
                        BranchValue::Open
                    } else {
                        BranchValue::Z(y.inv())
                    }
                }
            }
        }
        ImpedanceExpr::Scaled(inner, k) => match eval_structural(inner, f_hz) {
            BranchValue::Open => BranchValue::Open,
            BranchValue::Z(z) => BranchValue::Z(z * *k),
        },
        ImpedanceExpr::Open => BranchValue::Open,
        ImpedanceExpr::Short => BranchValue::Z(Complex64::new(0.0, 0.0)),
    }
}

/// Scalar impedance at `f_hz`; a bare open circuit is an error.
pub fn eval_expr(expr: &ImpedanceExpr, f_hz: f64) -> Result<Complex64, NetworkError> {
    match eval_structural(expr, f_hz) {
        BranchValue::Open => Err(NetworkError::OpenCircuitEvaluation { frequency: f_hz }),
        BranchValue::Z(z) => Ok(z),
    }
}

/// Anything with a scalar driving-point impedance over frequency.
pub trait Evaluable {
    fn impedance(&self, f_hz: f64) -> Result<Complex64, NetworkError>;
}

impl Evaluable for ImpedanceExpr {
    fn impedance(&self, f_hz: f64) -> Result<Complex64, NetworkError> {
        eval_expr(self, f_hz)
    }
}

impl Evaluable for RationalModel {
    fn impedance(&self, f_hz: f64) -> Result<Complex64, NetworkError> {
        Ok(self.evaluate(f_hz))
    }
}

impl Evaluable for crate::ingest::ImpedanceSweep {
    /// Linear interpolation of the measured samples; frequencies outside
    /// the sweep range are an error rather than an extrapolation.
    fn impedance(&self, f_hz: f64) -> Result<Complex64, NetworkError> {
        let (lo, hi) = self.range();
        if f_hz < lo || f_hz > hi {
            return Err(NetworkError::InvalidParams(format!(
                "frequency {f_hz} Hz outside sweep range {lo}..{hi} Hz"
            )));
        }
        Ok(self.interpolate(f_hz))
    }
}

/// Admittance at `f_hz`. Opens have zero admittance; a bare exact short is
/// the one guarded inversion.
pub fn admittance(expr: &ImpedanceExpr, f_hz: f64) -> Result<Complex64, NetworkError> {
    match eval_structural(expr, f_hz) {
        BranchValue::Open => Ok(Complex64::new(0.0, 0.0)),
        BranchValue::Z(z) if z == Complex64::new(0.0, 0.0) => {
            Err(NetworkError::DivisionByZeroImpedance { frequency: f_hz })
        }
        BranchValue::Z(z) => Ok(z.inv()),
    }
}

/// LCL filter parameters: inverter-side and grid-side inductors, shunt
/// capacitor, damping resistor, and the damping arrangement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LclParams {
    pub l1: f64,
    pub l2: f64,
    pub c: f64,
    /// Damping resistance in ohms, >= 0.
    pub rd: f64,
    pub variant: LclVariant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LclVariant {
    Plain,
    /// Series bypass inductor that shorts the damping resistor out at
    /// f_bypass = 1 / (2 pi sqrt(bypass_l * c)).
    CType { bypass_l: f64 },
}

impl LclParams {
    pub fn validate(&self) -> Result<(), NetworkError> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.l1) || !pos(self.l2) || !pos(self.c) {
            return Err(NetworkError::InvalidParams(
                "l1, l2 and c must be positive".into(),
            ));
        }
        if !(self.rd.is_finite() && self.rd >= 0.0) {
            return Err(NetworkError::InvalidParams("rd must be >= 0".into()));
        }
        if let LclVariant::CType { bypass_l } = self.variant {
            if !pos(bypass_l) {
                return Err(NetworkError::InvalidParams(
                    "C-type variant needs bypass_l > 0".into(),
                ));
            }
        }
        Ok(())
    }

    /// Resonance of the bypass trap for C-type parameters.
    pub fn bypass_frequency(&self) -> Option<f64> {
        match self.variant {
            LclVariant::CType { bypass_l } => Some(1.0 / (2.0 * PI * (bypass_l * self.c).sqrt())),
            LclVariant::Plain => None,
        }
    }
}

/// Which series inductor of the LCL a fragment set carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LclSide {
    /// Series fragment is the inverter-side inductor l1.
    InverterFacing,
    /// Series fragment is the grid-side inductor l2.
    GridFacing,
}

/// Branch fragments of an LCL filter as seen from the capacitor node.
/// The grid branch itself is left to the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct LclFragments {
    /// Series inductor on the requested side.
    pub z_series: ImpedanceExpr,
    /// Shunt branch: C (+ damping) for plain, damping resistor bridged by
    /// the series bypass_l + c trap for C-type.
    pub z_shunt: ImpedanceExpr,
}

pub fn lcl_expr(p: &LclParams, side: LclSide) -> Result<LclFragments, NetworkError> {
    p.validate()?;
    let z_series = match side {
        LclSide::InverterFacing => ImpedanceExpr::Inductor(p.l1),
        LclSide::GridFacing => ImpedanceExpr::Inductor(p.l2),
    };
    let z_shunt = match p.variant {
        LclVariant::Plain => {
            if p.rd == 0.0 {
                ImpedanceExpr::Capacitor(p.c)
            } else {
                ImpedanceExpr::series(vec![
                    ImpedanceExpr::Capacitor(p.c),
                    ImpedanceExpr::Resistor(p.rd),
                ])
            }
        }
        LclVariant::CType { bypass_l } => ImpedanceExpr::parallel(vec![
            ImpedanceExpr::Resistor(p.rd),
            ImpedanceExpr::series(vec![
                ImpedanceExpr::Inductor(bypass_l),
                ImpedanceExpr::Capacitor(p.c),
            ]),
        ]),
    };
    Ok(LclFragments { z_series, z_shunt })
}

/// Undamped LCL resonance with an extra grid inductance in series with l2:
/// f = (1/2pi) sqrt((l1 + l2 + l_grid) / (l1 (l2 + l_grid) c)).
pub fn lcl_resonance_freq(p: &LclParams, l_grid: f64) -> Result<f64, NetworkError> {
    p.validate()?;
    if !(l_grid.is_finite() && l_grid >= 0.0) {
        return Err(NetworkError::InvalidParams("l_grid must be >= 0".into()));
    }
    let num = p.l1 + p.l2 + l_grid;
    let den = p.l1 * (p.l2 + l_grid) * p.c;
    Ok((num / den).sqrt() / (2.0 * PI))
}

/// Parallel combination of `n` identical copies of a branch, represented
/// as a 1/n impedance scaling.
pub fn branch_scaled(branch: &ImpedanceExpr, n: usize) -> Result<ImpedanceExpr, NetworkError> {
    match n {
        0 => Err(NetworkError::InvalidCount(0)),
        1 => Ok(branch.clone()),
        _ => Ok(ImpedanceExpr::Scaled(
            Box::new(branch.clone()),
            1.0 / n as f64,
        )),
    }
}

/// Single-node circuit at the point of common coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicNetwork {
    /// Grid Thevenin branch.
    pub z_grid: ImpedanceExpr,
    /// Inverter-side branch.
    pub z_inv: ImpedanceExpr,
    /// Shunt/tank branch hanging off the node.
    pub z_shunt: ImpedanceExpr,
}

impl HarmonicNetwork {
    /// The three branches as one parallel expression.
    pub fn node_expr(&self) -> ImpedanceExpr {
        ImpedanceExpr::parallel(vec![
            self.z_grid.clone(),
            self.z_inv.clone(),
            self.z_shunt.clone(),
        ])
    }

    /// Parallel node impedance of the three branches.
    pub fn node_impedance(&self, f_hz: f64) -> Result<Complex64, NetworkError> {
        eval_expr(&self.node_expr(), f_hz)
            .map_err(|_| NetworkError::DegenerateNode { frequency: f_hz })
    }
}

/// Node response to a harmonic current injected into the PCC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InjectionResult {
    pub v_pcc: Complex64,
    pub i_grid: Complex64,
    pub i_inv: Complex64,
    pub i_shunt: Complex64,
}

/// Injects `i_h` into the node: v_pcc = i_h * (z_grid || z_inv || z_shunt),
/// branch currents v_pcc / z_branch (zero through opens). A shorted branch
/// takes the whole injection at zero volts.
pub fn pcc_current_injection(
    net: &HarmonicNetwork,
    i_h: Complex64,
    f_hz: f64,
) -> Result<InjectionResult, NetworkError> {
    let zero = Complex64::new(0.0, 0.0);
    let branches = [
        eval_structural(&net.z_grid, f_hz),
        eval_structural(&net.z_inv, f_hz),
        eval_structural(&net.z_shunt, f_hz),
    ];
    if branches.iter().all(|b| *b == BranchValue::Open) {
        return Err(NetworkError::DegenerateNode { frequency: f_hz });
    }

    // exact short: all current sinks into the first shorted branch
    if let Some(short_idx) = branches.iter().position(|b| *b == BranchValue::Z(zero)) {
        let mut currents = [zero; 3];
        currents[short_idx] = i_h;
        return Ok(InjectionResult {
            v_pcc: zero,
            i_grid: currents[0],
            i_inv: currents[1],
            i_shunt: currents[2],
        });
    }

    let y: Complex64 = branches
        .iter()
        .filter_map(|b| b.finite())
        .map(|z| z.inv())
        .sum();
    if y == zero {
        return Err(NetworkError::DegenerateNode { frequency: f_hz });
    }
    let v_pcc = i_h / y;
    let current = |b: &BranchValue| b.finite().map(|z| v_pcc / z).unwrap_or(zero);
    Ok(InjectionResult {
        v_pcc,
        i_grid: current(&branches[0]),
        i_inv: current(&branches[1]),
        i_shunt: current(&branches[2]),
    })
}

/// Node response to a background harmonic voltage behind the grid branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DividerResult {
    pub v_pcc: Complex64,
    pub i_grid: Complex64,
}

/// Voltage divider v_pcc = v_h * Z_down / (z_grid + Z_down) with
/// Z_down = z_inv || z_shunt. A series-resonant (near-short) shunt collapses
/// v_pcc and magnifies i_grid; hitting an undamped resonance exactly is the
/// DegenerateLoop error.
pub fn pcc_background_voltage(
    net: &HarmonicNetwork,
    v_h: Complex64,
    f_hz: f64,
) -> Result<DividerResult, NetworkError> {
    let zero = Complex64::new(0.0, 0.0);
    let z_grid = match eval_structural(&net.z_grid, f_hz) {
        BranchValue::Open => return Err(NetworkError::OpenCircuitEvaluation { frequency: f_hz }),
        BranchValue::Z(z) => z,
    };
    let down = ImpedanceExpr::parallel(vec![net.z_inv.clone(), net.z_shunt.clone()]);
    match eval_structural(&down, f_hz) {
        // nothing downstream: direct transfer, no grid current
        BranchValue::Open => Ok(DividerResult {
            v_pcc: v_h,
            i_grid: zero,
        }),
        BranchValue::Z(z_down) => {
            let denom = z_grid + z_down;
            if denom == zero {
                return Err(NetworkError::DegenerateLoop { frequency: f_hz });
            }
            Ok(DividerResult {
                v_pcc: v_h * z_down / denom,
                i_grid: v_h / denom,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// network description files

/// Serializable impedance expression; `model` nodes reference fitted-model
/// JSON files by path.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ExprSpec {
    #[serde(rename = "R")]
    R { ohms: f64 },
    #[serde(rename = "L")]
    L { henries: f64 },
    #[serde(rename = "C")]
    C { farads: f64 },
    Model { path: String },
    Series { terms: Vec<ExprSpec> },
    Parallel { terms: Vec<ExprSpec> },
    Scaled { term: Box<ExprSpec>, factor: f64 },
    Open,
    Short,
}

impl ExprSpec {
    /// Resolves into an evaluable expression; `load_model` maps a path to a
    /// fitted model (the caller owns file IO).
    pub fn resolve(
        &self,
        load_model: &dyn Fn(&str) -> Result<RationalModel, String>,
    ) -> Result<ImpedanceExpr, NetworkError> {
        let pos = |v: f64, what: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(v)
            } else {
                Err(NetworkError::InvalidParams(format!("{what} must be positive, got {v}")))
            }
        };
        Ok(match self {
            ExprSpec::R { ohms } => {
                if !(ohms.is_finite() && *ohms >= 0.0) {
                    return Err(NetworkError::InvalidParams(format!(
                        "resistance must be >= 0, got {ohms}"
                    )));
                }
                ImpedanceExpr::Resistor(*ohms)
            }
            ExprSpec::L { henries } => ImpedanceExpr::Inductor(pos(*henries, "inductance")?),
            ExprSpec::C { farads } => ImpedanceExpr::Capacitor(pos(*farads, "capacitance")?),
            ExprSpec::Model { path } => ImpedanceExpr::Model(
                load_model(path).map_err(NetworkError::ModelLoad)?,
            ),
            ExprSpec::Series { terms } => ImpedanceExpr::Series(
                terms
                    .iter()
                    .map(|t| t.resolve(load_model))
                    .collect::<Result<_, _>>()?,
            ),
            ExprSpec::Parallel { terms } => ImpedanceExpr::Parallel(
                terms
                    .iter()
                    .map(|t| t.resolve(load_model))
                    .collect::<Result<_, _>>()?,
            ),
            ExprSpec::Scaled { term, factor } => ImpedanceExpr::Scaled(
                Box::new(term.resolve(load_model)?),
                pos(*factor, "scale factor")?,
            ),
            ExprSpec::Open => ImpedanceExpr::Open,
            ExprSpec::Short => ImpedanceExpr::Short,
        })
    }
}

/// On-disk description of the three PCC branches.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub z_grid: ExprSpec,
    pub z_inv: ExprSpec,
    pub z_shunt: ExprSpec,
}

impl NetworkSpec {
    pub fn resolve(
        &self,
        load_model: &dyn Fn(&str) -> Result<RationalModel, String>,
    ) -> Result<HarmonicNetwork, NetworkError> {
        Ok(HarmonicNetwork {
            z_grid: self.z_grid.resolve(load_model)?,
            z_inv: self.z_inv.resolve(load_model)?,
            z_shunt: self.z_shunt.resolve(load_model)?,
        })
    }
}
