//! Rational pole-residue fitting of measured impedance sweeps.
//!
//! The model form is
//!
//! ```text
//! Z(s) = d + s*e + sum_i r_i / (s - p_i)
//! ```
//!
//! with every pole strictly in the left half plane. Complex poles are stored
//! as one representative per conjugate pair (positive imaginary part); the
//! pairing rule expands them on evaluation so Z(-jw) = conj(Z(jw)) holds.
//!
//! Fitting iterates a weighted linear least-squares solve for the residues
//! of Z and of an auxiliary scaling function sharing the current poles, then
//! relocates the poles to the zeros of the scaling function (eigenvalues of
//! the pole matrix minus a rank-one update). Unstable poles are reflected
//! across the imaginary axis rather than pruned, so the order stays fixed.
//! Passivity (Re Z >= 0) is checked and reported, never enforced.

use std::f64::consts::PI;
use std::io::Write as IoWrite;

use nalgebra::{Complex, DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::ImpedanceSweep;

/// Weight floor in ohms: sample weight is 1 / max(|Z_k|, WEIGHT_FLOOR).
pub const WEIGHT_FLOOR: f64 = 1e-6;

/// Relative singular-value floor for the pole-relocation solve.
const RELOCATION_RANK_TOL: f64 = 2e-15;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("model order must be >= 1 (use a d/e-only fit for order 0)")]
    InvalidOrder,
    #[error("invalid frequency range: need 0 < f_min < f_max")]
    InvalidRange,
    #[error("fit tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("sweep has {got} samples, order {order} needs at least {needed}")]
    TooFewSamples {
        order: usize,
        needed: usize,
        got: usize,
    },
    #[error("rank-deficient least squares ({0}); order is likely too high for this data")]
    SingularSystem(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

/// Stable pole-residue impedance model (constant + proportional + poles).
#[derive(Debug, Clone, PartialEq)]
pub struct RationalModel {
    d: f64,
    e: f64,
    /// Real poles carry im == 0; conjugate pairs store the im > 0 member.
    poles: Vec<Complex64>,
    /// Aligned with `poles`; real poles carry purely real residues.
    residues: Vec<Complex64>,
}

impl RationalModel {
    /// Builds a model, validating stability and conjugate consistency.
    /// Pair representatives with negative imaginary part are conjugated
    /// into canonical form rather than rejected.
    pub fn new(
        d: f64,
        e: f64,
        poles: Vec<Complex64>,
        residues: Vec<Complex64>,
    ) -> Result<Self, FitError> {
        if poles.len() != residues.len() {
            return Err(FitError::InvalidModel(format!(
                "{} poles vs {} residues",
                poles.len(),
                residues.len()
            )));
        }
        if !(d.is_finite() && e.is_finite()) {
            return Err(FitError::InvalidModel("non-finite d or e".into()));
        }
        let mut canon_poles = Vec::with_capacity(poles.len());
        let mut canon_res = Vec::with_capacity(poles.len());
        for (p, r) in poles.into_iter().zip(residues) {
            if !(p.re.is_finite() && p.im.is_finite() && r.re.is_finite() && r.im.is_finite()) {
                return Err(FitError::InvalidModel("non-finite pole or residue".into()));
            }
            if p.re >= 0.0 {
                return Err(FitError::InvalidModel(format!(
                    "pole {p} is not strictly stable"
                )));
            }
            if p.im == 0.0 && r.im != 0.0 {
                return Err(FitError::InvalidModel(format!(
                    "real pole {p} has complex residue {r}"
                )));
            }
            if p.im < 0.0 {
                canon_poles.push(p.conj());
                canon_res.push(r.conj());
            } else {
                canon_poles.push(p);
                canon_res.push(r);
            }
        }
        let mut order: Vec<usize> = (0..canon_poles.len()).collect();
        order.sort_by(|&a, &b| {
            canon_poles[a]
                .im
                .total_cmp(&canon_poles[b].im)
                .then(canon_poles[a].re.total_cmp(&canon_poles[b].re))
        });
        Ok(Self {
            d,
            e,
            poles: order.iter().map(|&i| canon_poles[i]).collect(),
            residues: order.iter().map(|&i| canon_res[i]).collect(),
        })
    }

    /// Constant term in ohms.
    pub fn d(&self) -> f64 {
        self.d
    }

    /// Proportional term in ohm-seconds.
    pub fn e(&self) -> f64 {
        self.e
    }

    /// Stored poles in rad/s (one representative per conjugate pair).
    pub fn poles(&self) -> &[Complex64] {
        &self.poles
    }

    pub fn residues(&self) -> &[Complex64] {
        &self.residues
    }

    /// True when the i-th stored pole stands for a conjugate pair.
    pub fn is_pair(&self, i: usize) -> bool {
        self.poles[i].im != 0.0
    }

    /// Model order counting each conjugate pair as two.
    pub fn order(&self) -> usize {
        self.poles
            .iter()
            .map(|p| if p.im != 0.0 { 2 } else { 1 })
            .sum()
    }

    /// Z(j 2 pi f). Well defined for any real `f`; negative frequencies
    /// return the conjugate of the positive-frequency value.
    pub fn evaluate(&self, f_hz: f64) -> Complex64 {
        let s = Complex64::new(0.0, 2.0 * PI * f_hz);
        let mut z = Complex64::new(self.d, 0.0) + s * self.e;
        for (p, r) in self.poles.iter().zip(&self.residues) {
            if p.im == 0.0 {
                z += r / (s - p);
            } else {
                z += r / (s - p) + r.conj() / (s - p.conj());
            }
        }
        z
    }

    /// Serializes to the model JSON format (17 significant digits per number).
    pub fn to_json(&self, report: Option<&FitReport>) -> String {
        let file = ModelJson {
            d: self.d,
            e: self.e,
            poles: self.poles.iter().map(ComplexJson::from).collect(),
            residues: self.residues.iter().map(ComplexJson::from).collect(),
            report: report.cloned(),
        };
        to_json_17(&file)
    }

    /// Parses the model JSON format, re-validating model invariants.
    pub fn from_json(text: &str) -> Result<(Self, Option<FitReport>), FitError> {
        let file: ModelJson = serde_json::from_str(text)
            .map_err(|e| FitError::InvalidModel(format!("bad model JSON: {e}")))?;
        let model = Self::new(
            file.d,
            file.e,
            file.poles.iter().map(Complex64::from).collect(),
            file.residues.iter().map(Complex64::from).collect(),
        )?;
        Ok((model, file.report))
    }
}

/// Fit quality summary attached to a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Weighted RMS of (Z_model - Z_k) / max(|Z_k|, floor) over the sweep.
    pub rms_rel_error: f64,
    pub max_rel_error: f64,
    pub max_rel_error_freq_hz: f64,
    pub iterations_used: usize,
    /// True iff the requested tolerance was reached.
    pub converged: bool,
    /// Whether Re Z(j2pif) >= 0 held at every fitting-grid frequency.
    pub passive_on_fit_grid: bool,
    /// Frequency intervals with Re Z < 0 on a dense check grid.
    pub passivity_violations: Vec<(f64, f64)>,
}

/// Starting poles: conjugate pairs with imaginary parts geometrically spaced
/// over [2 pi f_min, 2 pi f_max] and real parts -imag/100; odd orders add one
/// real pole at -2 pi f_min.
pub fn initial_poles(order: usize, f_min: f64, f_max: f64) -> Result<Vec<Complex64>, FitError> {
    if order == 0 {
        return Err(FitError::InvalidOrder);
    }
    if !(f_min > 0.0 && f_max > f_min && f_max.is_finite()) {
        return Err(FitError::InvalidRange);
    }
    let mut poles = Vec::with_capacity(order / 2 + 1);
    if order % 2 == 1 {
        poles.push(Complex64::new(-2.0 * PI * f_min, 0.0));
    }
    for w in geomspace(2.0 * PI * f_min, 2.0 * PI * f_max, order / 2) {
        poles.push(Complex64::new(-w / 100.0, w));
    }
    Ok(poles)
}

/// Geometric spacing over [a, b]; a single point lands on the geometric mean.
fn geomspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![(a * b).sqrt()],
        _ => {
            let (la, lb) = (a.ln(), b.ln());
            (0..n)
                .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
                .collect()
        }
    }
}

/// Fits `sweep` to a stable order-`order` pole-residue model.
///
/// Each iteration solves one weighted least-squares system for the residues
/// of Z and of the scaling function sharing the current poles, relocates the
/// poles to the scaling function's zeros, reflects any unstable pole, and
/// re-solves the residues with poles fixed. Stops when the rms relative
/// error falls below `tol`, changes by less than `tol/10`, or `max_iter`
/// is reached.
pub fn fit_rational(
    sweep: &ImpedanceSweep,
    order: usize,
    include_e: bool,
    max_iter: usize,
    tol: f64,
) -> Result<(RationalModel, FitReport), FitError> {
    if order == 0 {
        return Err(FitError::InvalidOrder);
    }
    if !(tol > 0.0) {
        return Err(FitError::InvalidTolerance(tol));
    }
    let needed = 2 * order + 2;
    if sweep.len() < needed {
        return Err(FitError::TooFewSamples {
            order,
            needed,
            got: sweep.len(),
        });
    }

    let freqs = sweep.frequencies();
    let zs = sweep.samples();
    let s: Vec<Complex64> = freqs
        .iter()
        .map(|&f| Complex64::new(0.0, 2.0 * PI * f))
        .collect();
    let weights: Vec<f64> = zs.iter().map(|z| 1.0 / z.norm().max(WEIGHT_FLOOR)).collect();

    // Starting poles span the positive part of the sweep grid.
    let f_lo = freqs.iter().copied().find(|&f| f > 0.0).unwrap();
    let f_hi = *freqs.last().unwrap();
    let mut poles = initial_poles(order, f_lo, f_hi)?;

    let max_iter = max_iter.max(1);
    let mut prev_rms = f64::INFINITY;
    let mut result: Option<(RationalModel, f64, f64, f64)> = None;
    let mut iterations_used = 0;

    for it in 1..=max_iter {
        iterations_used = it;
        if let Some(new_poles) = relocate_poles(&poles, &s, zs, &weights, include_e, tol)? {
            poles = new_poles;
        }
        // Rank loss here is fatal: the pole set cannot carry the data.
        let model = solve_residues(&poles, &s, zs, &weights, include_e)?;
        let (rms, max_err, max_f) = weighted_errors(&model, freqs, zs, &weights);
        result = Some((model, rms, max_err, max_f));
        if rms < tol || (prev_rms - rms).abs() < tol / 10.0 {
            break;
        }
        prev_rms = rms;
    }

    let (model, rms, max_err, max_f) = result.unwrap();
    let passive_on_fit_grid = freqs.iter().all(|&f| model.evaluate(f).re >= 0.0);
    let (scan_lo, scan_hi) = sweep.range();
    let passivity_violations = passivity_scan(&model, scan_lo, scan_hi, (scan_hi - scan_lo) / 2000.0);
    let report = FitReport {
        rms_rel_error: rms,
        max_rel_error: max_err,
        max_rel_error_freq_hz: max_f,
        iterations_used,
        converged: rms <= tol,
        passive_on_fit_grid,
        passivity_violations,
    };
    Ok((model, report))
}

/// Auto-order fit: tries even orders 2, 4, ..., 20 until the tolerance is
/// met, returning the first converged fit, else the best attempt.
pub fn fit_auto(
    sweep: &ImpedanceSweep,
    include_e: bool,
    max_iter: usize,
    tol: f64,
) -> Result<(RationalModel, FitReport), FitError> {
    let mut best: Option<(RationalModel, FitReport)> = None;
    let mut last_err = None;
    for order in (2..=20).step_by(2) {
        match fit_rational(sweep, order, include_e, max_iter, tol) {
            Ok((model, report)) => {
                let done = report.converged;
                let better = best
                    .as_ref()
                    .map(|(_, b)| report.rms_rel_error < b.rms_rel_error)
                    .unwrap_or(true);
                if better {
                    best = Some((model, report));
                }
                if done {
                    break;
                }
            }
            Err(e @ FitError::TooFewSamples { .. }) | Err(e @ FitError::SingularSystem(_)) => {
                // higher orders only get worse on this data
                last_err = Some(e);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    match best {
        Some(found) => Ok(found),
        None => Err(last_err.unwrap_or(FitError::InvalidOrder)),
    }
}

/// Frequency intervals where Re Z(j2pif) < 0 over [f_min, f_max] scanned at
/// `step`, with crossing endpoints refined by bisection to +-step/100.
pub fn passivity_scan(model: &RationalModel, f_min: f64, f_max: f64, step: f64) -> Vec<(f64, f64)> {
    assert!(
        f_min >= 0.0 && f_max > f_min && step > 0.0 && step.is_finite(),
        "passivity_scan needs 0 <= f_min < f_max and step > 0"
    );
    let re_at = |f: f64| model.evaluate(f).re;
    let mut grid = Vec::new();
    let mut k = 0u64;
    loop {
        let f = f_min + k as f64 * step;
        if f > f_max * (1.0 + 1e-12) {
            break;
        }
        grid.push(f.min(f_max));
        k += 1;
    }

    let refine = |lo: f64, hi: f64| -> f64 {
        // sign change bracketed in [lo, hi]
        let (mut lo, mut hi) = (lo, hi);
        let mut f_lo = re_at(lo);
        while hi - lo > step / 100.0 {
            let mid = 0.5 * (lo + hi);
            let f_mid = re_at(mid);
            if (f_lo < 0.0) == (f_mid < 0.0) {
                lo = mid;
                f_lo = f_mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };

    let mut intervals = Vec::new();
    let mut start: Option<f64> = None;
    for (i, &f) in grid.iter().enumerate() {
        let neg = re_at(f) < 0.0;
        match (start, neg) {
            (None, true) => {
                start = Some(if i == 0 { f } else { refine(grid[i - 1], f) });
            }
            (Some(lo), false) => {
                intervals.push((lo, refine(grid[i - 1], f)));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(lo) = start {
        intervals.push((lo, *grid.last().unwrap()));
    }
    intervals
}

/// Weighted rms / max relative error of a model against samples.
pub fn weighted_errors(
    model: &RationalModel,
    freqs: &[f64],
    zs: &[Complex64],
    weights: &[f64],
) -> (f64, f64, f64) {
    let mut sum_sq = 0.0;
    let mut max_err = 0.0;
    let mut max_f = freqs[0];
    for ((&f, z), &w) in freqs.iter().zip(zs).zip(weights) {
        let err = (model.evaluate(f) - z).norm() * w;
        sum_sq += err * err;
        if err > max_err {
            max_err = err;
            max_f = f;
        }
    }
    ((sum_sq / freqs.len() as f64).sqrt(), max_err, max_f)
}

// ---------------------------------------------------------------------------
// least-squares internals

/// Appends the real-unknown basis columns for the pole set at one `s` point:
/// real pole -> 1/(s-p); pair -> [1/(s-p) + 1/(s-p~), j/(s-p) - j/(s-p~)].
fn basis_row(poles: &[Complex64], s: Complex64, row: &mut Vec<Complex64>) {
    for p in poles {
        if p.im == 0.0 {
            row.push((s - p).inv());
        } else {
            let t1 = (s - p).inv();
            let t2 = (s - p.conj()).inv();
            row.push(t1 + t2);
            row.push(Complex64::i() * (t1 - t2));
        }
    }
}

fn pole_count(poles: &[Complex64]) -> usize {
    poles.iter().map(|p| if p.im != 0.0 { 2 } else { 1 }).sum()
}

/// One pole-relocation step. Returns the new pole set, or None when the
/// joint system is rank deficient (the data is already representable with
/// the current poles, so relocation is unnecessary).
fn relocate_poles(
    poles: &[Complex64],
    s: &[Complex64],
    zs: &[Complex64],
    weights: &[f64],
    include_e: bool,
    tol: f64,
) -> Result<Option<Vec<Complex64>>, FitError> {
    let n = s.len();
    let order = pole_count(poles);
    let n_model = order + 1 + usize::from(include_e);
    let ncols = n_model + order;

    let mut a = DMatrix::<f64>::zeros(2 * n, ncols);
    let mut b = DVector::<f64>::zeros(2 * n);
    let mut row = Vec::with_capacity(order);
    for k in 0..n {
        row.clear();
        basis_row(poles, s[k], &mut row);
        let w = weights[k];
        for (j, phi) in row.iter().enumerate() {
            a[(k, j)] = w * phi.re;
            a[(n + k, j)] = w * phi.im;
            // sigma columns: -Z_k * phi
            let zp = -zs[k] * phi;
            a[(k, n_model + j)] = w * zp.re;
            a[(n + k, n_model + j)] = w * zp.im;
        }
        a[(k, order)] = w;
        a[(n + k, order)] = 0.0;
        if include_e {
            a[(k, order + 1)] = w * s[k].re;
            a[(n + k, order + 1)] = w * s[k].im;
        }
        b[k] = w * zs[k].re;
        b[n + k] = w * zs[k].im;
    }

    // Exact column dependence (data already representable with the current
    // poles) collapses singular values to the machine floor; the relocation
    // system is otherwise routinely conditioned at 1e12..1e14, which is not
    // deficiency. Only the floor skips relocation.
    let x = match solve_ls(a, b, RELOCATION_RANK_TOL) {
        Ok(x) => x,
        Err(RankDeficient) => return Ok(None),
    };
    let sigma_res = x.rows(n_model, order).into_owned();

    // zeros of sigma = eig(A - b * c~^T) over the real block form
    let mut h = DMatrix::<f64>::zeros(order, order);
    let mut bvec = DVector::<f64>::zeros(order);
    let mut col = 0;
    for p in poles {
        if p.im == 0.0 {
            h[(col, col)] = p.re;
            bvec[col] = 1.0;
            col += 1;
        } else {
            h[(col, col)] = p.re;
            h[(col, col + 1)] = p.im;
            h[(col + 1, col)] = -p.im;
            h[(col + 1, col + 1)] = p.re;
            bvec[col] = 2.0;
            col += 2;
        }
    }
    for i in 0..order {
        for j in 0..order {
            h[(i, j)] -= bvec[i] * sigma_res[j];
        }
    }

    let eigs = h.complex_eigenvalues();
    let mut new_poles = group_eigenvalues(eigs.as_slice(), order);
    enforce_stability(&mut new_poles, tol);
    Ok(Some(new_poles))
}

/// Residue/d/e identification with poles fixed. Rank deficiency here is the
/// fatal over-parameterization signal.
fn solve_residues(
    poles: &[Complex64],
    s: &[Complex64],
    zs: &[Complex64],
    weights: &[f64],
    include_e: bool,
) -> Result<RationalModel, FitError> {
    let n = s.len();
    let order = pole_count(poles);
    let ncols = order + 1 + usize::from(include_e);

    let mut a = DMatrix::<f64>::zeros(2 * n, ncols);
    let mut b = DVector::<f64>::zeros(2 * n);
    let mut row = Vec::with_capacity(order);
    for k in 0..n {
        row.clear();
        basis_row(poles, s[k], &mut row);
        let w = weights[k];
        for (j, phi) in row.iter().enumerate() {
            a[(k, j)] = w * phi.re;
            a[(n + k, j)] = w * phi.im;
        }
        a[(k, order)] = w;
        if include_e {
            a[(k, order + 1)] = w * s[k].re;
            a[(n + k, order + 1)] = w * s[k].im;
        }
        b[k] = w * zs[k].re;
        b[n + k] = w * zs[k].im;
    }

    let rank_tol = (2 * n).max(ncols) as f64 * f64::EPSILON;
    let x = solve_ls(a, b, rank_tol).map_err(|RankDeficient| {
        FitError::SingularSystem(format!(
            "residue system for {order} pole columns is rank deficient"
        ))
    })?;

    let mut residues = Vec::with_capacity(poles.len());
    let mut col = 0;
    for p in poles {
        if p.im == 0.0 {
            residues.push(Complex64::new(x[col], 0.0));
            col += 1;
        } else {
            residues.push(Complex64::new(x[col], x[col + 1]));
            col += 2;
        }
    }
    let d = x[order];
    let e = if include_e { x[order + 1] } else { 0.0 };
    RationalModel::new(d, e, poles.to_vec(), residues)
}

struct RankDeficient;

/// Column-scaled SVD least squares with a rank check; deficiency is
/// reported, never silently regularized away.
fn solve_ls(
    mut a: DMatrix<f64>,
    b: DVector<f64>,
    rank_tol: f64,
) -> Result<DVector<f64>, RankDeficient> {
    let ncols = a.ncols();
    let mut scale = vec![1.0f64; ncols];
    for j in 0..ncols {
        let norm = a.column(j).norm();
        if norm > 0.0 {
            scale[j] = 1.0 / norm;
            for i in 0..a.nrows() {
                a[(i, j)] *= scale[j];
            }
        }
    }
    let svd = a.svd(true, true);
    let sv_max = svd.singular_values.max();
    let eps = sv_max * rank_tol;
    if svd.rank(eps) < ncols {
        return Err(RankDeficient);
    }
    let mut x = svd.solve(&b, eps).map_err(|_| RankDeficient)?;
    for j in 0..ncols {
        x[j] *= scale[j];
    }
    Ok(x)
}

/// Collapses an eigenvalue set of a real matrix into stored-pole form:
/// real eigenvalues stay, conjugate pairs keep their im > 0 member.
fn group_eigenvalues(eigs: &[Complex<f64>], order: usize) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = eigs
        .iter()
        .filter(|l| l.im >= 0.0)
        .map(|l| Complex64::new(l.re, l.im))
        .collect();
    // Real Schur form yields exact conjugate pairs, so the im >= 0 half
    // carries the full order; guard against a lost pair regardless.
    while pole_count(&out) > order {
        let i = out
            .iter()
            .enumerate()
            .filter(|(_, p)| p.im > 0.0)
            .min_by(|a, b| a.1.im.total_cmp(&b.1.im))
            .map(|(i, _)| i)
            .unwrap();
        out[i] = Complex64::new(out[i].re, 0.0);
    }
    while pole_count(&out) < order {
        // unreachable in practice; pad with a benign real pole that the
        // next relocation pass will move
        out.push(Complex64::new(-1.0, 0.0));
    }
    out
}

/// Reflects unstable poles into the left half plane; a pole exactly on the
/// axis is nudged left proportionally to its imaginary part.
fn enforce_stability(poles: &mut [Complex64], tol: f64) {
    for p in poles.iter_mut() {
        if p.re > 0.0 {
            *p = Complex64::new(-p.re, p.im);
        } else if p.re == 0.0 {
            *p = Complex64::new(-tol * p.im.abs() - 1e-9, p.im);
        }
    }
}

// ---------------------------------------------------------------------------
// model JSON with fixed 17-significant-digit floats

#[derive(Serialize, Deserialize)]
struct ComplexJson {
    re: f64,
    im: f64,
}

impl From<&Complex64> for ComplexJson {
    fn from(z: &Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<&ComplexJson> for Complex64 {
    fn from(z: &ComplexJson) -> Self {
        Self::new(z.re, z.im)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    d: f64,
    e: f64,
    poles: Vec<ComplexJson>,
    residues: Vec<ComplexJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    report: Option<FitReport>,
}

/// Pretty JSON with every float written as 17 significant digits, so files
/// are diffable and round-trip bit-exactly.
pub fn to_json_17<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter::new());
    value.serialize(&mut ser).expect("JSON serialization");
    String::from_utf8(out).expect("JSON is UTF-8")
}

struct SciFormatter<'a> {
    inner: serde_json::ser::PrettyFormatter<'a>,
}

impl SciFormatter<'_> {
    fn new() -> Self {
        Self {
            inner: serde_json::ser::PrettyFormatter::new(),
        }
    }
}

impl serde_json::ser::Formatter for SciFormatter<'_> {
    fn write_f64<W: ?Sized + IoWrite>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + IoWrite>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.inner.begin_array(writer)
    }

    fn end_array<W: ?Sized + IoWrite>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + IoWrite>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> std::io::Result<()> {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + IoWrite>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + IoWrite>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.inner.begin_object(writer)
    }

    fn end_object<W: ?Sized + IoWrite>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + IoWrite>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> std::io::Result<()> {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + IoWrite>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + IoWrite>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.inner.end_object_value(writer)
    }
}
