//! Assembly of the truncated action: the gauge-invariant template terms with
//! their cutoff-moment weights, the gauge-fixing and ghost sectors, the
//! quadratic part and its momentum-space kernel, the Weitzenbock identity for
//! the squared Dirac-type operator, and counterterm-absorption bookkeeping.
//!
//! The heat-type expansion of the regularized trace produces one invariant
//! per even order m: a volume term at m = 0 and, from m = 4 on, the template
//! c_k tr F Delta_A^k F at m = 4 + 2k, weighted by Lambda^{4-m} f_{4-m}.
//! Orders beyond the truncation carry weight zero and are not represented.
//! All cutoff data enters through formal parameters (FM, CK, Phi, Lambda,
//! Xi) with numeric values recorded side by side, so symbolic identities are
//! exact and numeric checks are reproducible.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::brst::{self, BrstConfig};
use crate::coeff::{Param, Scalar};
use crate::cutoff::{build_form_factor, CutoffError, FormFactor, MomentTable};
use crate::propagators::{self, Momentum, PropError};
use crate::symfield::{
    abelian_curvature, clifford_contract, covariant_laplacian_power, curvature, Expression,
    FieldKind, Idx, Level, SymError, MU, NU, RHO, SIG,
};

#[derive(Debug, Error)]
pub enum ActionError {
    #[error(transparent)]
    Cutoff(#[from] CutoffError),
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error(transparent)]
    Prop(#[from] PropError),
    #[error("degenerate rescaling: 1 + deltaZ must be positive, got 1 + ({0})")]
    DegenerateRescaling(f64),
    #[error("remainder rejected: {0}")]
    Remainder(String),
    #[error("no template term at k = {0}")]
    NoSuchTerm(u32),
    #[error("parameter {0:?} has no bound numeric value")]
    Unbound(Param),
    #[error("quadratic kernel monomial is not bilinear in the gauge field")]
    NotBilinear,
}

/// Where the coupling constant lives, as a documented bookkeeping switch.
///
/// Stored expressions never carry explicit coupling powers: the BRST
/// transformation acts on undressed fields, and invariance of a template
/// rests on cancellations between monomials of different gauge degree, which
/// explicit per-monomial coupling powers would spoil. The convention says
/// how an implied grading distributes the coupling and therefore how the
/// field-and-coupling counterterm absorption rescales each monomial.
///
/// `Canonical`: coupling-free kinetic term, one power of the coupling per
/// gauge field beyond the quadratic ones (grading g^(a-2) on a gauge-sector
/// monomial with a gauge fields, g^a in the ghost sector). `Geometric`: the
/// field absorbs the coupling and each curvature template carries an overall
/// g^-2 instead. The redefinition identity g_0 A_0 = g A holds in either
/// convention, but only the canonical grading makes the two absorption modes
/// agree on the lowest-order quadratic coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum CouplingConvention {
    Canonical,
    Geometric,
}

/// One invariant of the expansion: the heat order m and the integrated
/// functional carrying its full formal weight.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionTerm {
    pub m: u32,
    /// Template index with m = 4 + 2k; `None` for the volume term.
    pub k: Option<u32>,
    pub integrand: Expression,
}

/// The assembled truncated action: gauge-invariant terms, gauge-fixing and
/// ghost sectors, and the numeric values bound to the formal parameters.
#[derive(Debug, Clone)]
pub struct SpectralActionExpansion {
    pub n: u32,
    pub convention: CouplingConvention,
    pub terms: Vec<ActionTerm>,
    pub gauge_fixing: Expression,
    pub ghost: Expression,
    /// Form factor built from the same moments and coefficients; its
    /// polynomial coefficients agree with the Phi bindings by construction.
    pub form: FormFactor,
    pub param_values: BTreeMap<Param, f64>,
}

impl SpectralActionExpansion {
    /// Largest template index, n/2 - 2.
    pub fn kmax(&self) -> u32 {
        self.n / 2 - 2
    }

    pub fn template(&self, k: u32) -> Result<&ActionTerm, ActionError> {
        self.terms
            .iter()
            .find(|t| t.k == Some(k))
            .ok_or(ActionError::NoSuchTerm(k))
    }

    /// Sum of the gauge-invariant terms.
    pub fn gauge_invariant(&self) -> Expression {
        let mut out = Expression::zero(Level::Integrated);
        for t in &self.terms {
            out = out.add(&t.integrand);
        }
        out
    }

    /// Full action: gauge-invariant sector plus gauge fixing plus ghosts.
    pub fn total(&self) -> Expression {
        self.gauge_invariant().add(&self.gauge_fixing).add(&self.ghost)
    }

    /// Bind a numeric coupling value for evaluations (defaults to 1).
    pub fn set_coupling_value(&mut self, g: f64) {
        self.param_values.insert(Param::Coupling, g);
    }
}

fn gauge_count(m: &crate::symfield::Monomial) -> i32 {
    m.word.iter().filter(|f| f.kind == FieldKind::Gauge).count() as i32
}

/// Bare template invariant tr F Delta_A^k F as an integrated functional,
/// without weights.
pub fn template_term(k: u32) -> Result<Expression, SymError> {
    let left = curvature(MU, NU);
    let right = covariant_laplacian_power(&curvature(RHO, SIG), k as usize)?;
    left.mul_fresh(&right)
        .contract_free(MU, RHO)
        .contract_free(NU, SIG)
        .trace()?
        .integrate()
}

/// Abelian counterpart tr Fhat Delta^k Fhat with the flat Laplacian, used as
/// the independent quadratic reference.
fn abelian_template(k: u32) -> Result<Expression, SymError> {
    let mut right = abelian_curvature(RHO, SIG);
    for _ in 0..k {
        right = brst::flat_laplacian(&right);
    }
    abelian_curvature(MU, NU)
        .mul_fresh(&right)
        .contract_free(MU, RHO)
        .contract_free(NU, SIG)
        .trace()?
        .integrate()
}

/// Builds the truncated action with the canonical coupling convention.
///
/// `moments` must contain the cutoff moments f_0, f_-2, ..., f_-(n-4); when
/// it also contains a finite f_4 the volume term gets a numeric binding,
/// otherwise the volume term stays purely formal. `c` supplies the template
/// constants c_0..c_{n/2-2} and is rescaled uniformly so that f_0 c_0 =
/// -1/4.
pub fn build_action(
    n: u32,
    moments: &MomentTable,
    c: &[f64],
    lambda: f64,
    xi: f64,
) -> Result<SpectralActionExpansion, ActionError> {
    build_action_with(n, moments, c, lambda, xi, CouplingConvention::Canonical)
}

/// As [`build_action`] with an explicit coupling convention.
pub fn build_action_with(
    n: u32,
    moments: &MomentTable,
    c: &[f64],
    lambda: f64,
    xi: f64,
    convention: CouplingConvention,
) -> Result<SpectralActionExpansion, ActionError> {
    let form = build_form_factor(moments, c, n, lambda)?;
    let kmax = n / 2 - 2;

    let mut terms = Vec::with_capacity(kmax as usize + 2);
    let volume = Expression::unit()
        .integrate()?
        .with_param(Param::Lambda, 4)
        .with_param(Param::FM(4), 1);
    terms.push(ActionTerm { m: 0, k: None, integrand: volume });
    for k in 0..=kmax {
        let bare = template_term(k)?;
        debug_assert_eq!(bare.homogeneous_order()?, (4 + 2 * k) as i64);
        let weighted = bare
            .with_param(Param::Lambda, -2 * k as i32)
            .with_param(Param::FM(-2 * (k as i32)), 1)
            .with_param(Param::CK(k), 1);
        terms.push(ActionTerm { m: 4 + 2 * k, k: Some(k), integrand: weighted });
    }

    let gauge_fixing = brst::gauge_fixing_action(kmax);
    let ghost = brst::ghost_action(kmax);

    let mut param_values = BTreeMap::new();
    param_values.insert(Param::Lambda, lambda);
    param_values.insert(Param::Xi, xi);
    param_values.insert(Param::Coupling, 1.0);
    for k in 0..=kmax {
        let ku = k as usize;
        param_values.insert(Param::FM(-2 * (k as i32)), form.f_neg[ku]);
        param_values.insert(Param::CK(k), form.c[ku]);
        param_values.insert(Param::Phi(k), form.coeffs[ku] * lambda.powi(-2 * k as i32));
    }
    if let Some(f4) = moments.get(4) {
        if f4.value.is_finite() {
            param_values.insert(Param::FM(4), f4.value);
        }
    }

    Ok(SpectralActionExpansion {
        n,
        convention,
        terms,
        gauge_fixing,
        ghost,
        form,
        param_values,
    })
}

/// Attaches a user-supplied higher-in-F remainder to the template at index
/// k. The remainder must be integrated, homogeneous of order 4 + 2k, free of
/// quadratic gauge content, and invariant under the BRST transformation; it
/// is weighted by the same Lambda^{-2k} f_{-2k} as the template (but not by
/// c_k) and graded by the active coupling convention.
pub fn add_remainder(
    exp: &mut SpectralActionExpansion,
    k: u32,
    remainder: &Expression,
) -> Result<(), ActionError> {
    if remainder.level != Level::Integrated {
        return Err(ActionError::Remainder("remainder must be integrated".into()));
    }
    let want = (4 + 2 * k) as i64;
    let ord = remainder.homogeneous_order()?;
    if ord != want {
        return Err(ActionError::Remainder(format!(
            "order {ord} does not match the template order {want}"
        )));
    }
    for degree in 0..=2 {
        if !remainder.linearize(FieldKind::Gauge, degree).is_zero()? {
            return Err(ActionError::Remainder(format!(
                "contributes at gauge degree {degree}; remainders must be cubic or higher"
            )));
        }
    }
    if !brst::check_invariance(remainder, &BrstConfig::minimal())? {
        return Err(ActionError::Remainder("not BRST-closed".into()));
    }
    let decorated = remainder
        .with_param(Param::Lambda, -2 * k as i32)
        .with_param(Param::FM(-2 * (k as i32)), 1);
    let term = exp
        .terms
        .iter_mut()
        .find(|t| t.k == Some(k))
        .ok_or(ActionError::NoSuchTerm(k))?;
    term.integrand = term.integrand.add(&decorated);
    Ok(())
}

/// Part of the gauge-invariant sector exactly quadratic in the gauge field,
/// in canonical form.
pub fn quadratic_part(exp: &SpectralActionExpansion) -> Result<Expression, ActionError> {
    Ok(exp
        .gauge_invariant()
        .linearize(FieldKind::Gauge, 2)
        .normal_form()?)
}

/// Checks that the quadratic part of each template term equals the flat
/// reference tr Fhat Delta^k Fhat with the same weights, term by term modulo
/// total derivatives.
pub fn verify_quadratic_form(exp: &SpectralActionExpansion) -> Result<bool, ActionError> {
    for k in 0..=exp.kmax() {
        let term = exp.template(k)?;
        let lin = term.integrand.linearize(FieldKind::Gauge, 2);
        let reference = abelian_template(k)?
            .with_param(Param::Lambda, -2 * k as i32)
            .with_param(Param::FM(-2 * (k as i32)), 1)
            .with_param(Param::CK(k), 1);
        if !lin.equal_mod_total_derivative(&reference)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Checks that every term of the gauge-invariant sector is BRST-closed on
/// its own.
pub fn verify_brst_closure(exp: &SpectralActionExpansion) -> Result<bool, ActionError> {
    for t in &exp.terms {
        if !brst::check_invariance(&t.integrand, &BrstConfig::minimal())? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Checks BRST invariance of the full action, gauge fixing and ghosts
/// included, with the minimal transformation.
pub fn verify_total_invariance(exp: &SpectralActionExpansion) -> Result<bool, ActionError> {
    Ok(brst::check_invariance(&exp.total(), &BrstConfig::minimal())?)
}

fn left_covariant_derivative(x: &Expression, idx: Idx) -> Expression {
    x.deriv(idx)
        .sub(&Expression::gauge(idx).mul(x).scaled(&Scalar::i()))
}

/// One application of the Dirac-type operator i gamma^a (d_a - i A_a) by
/// left multiplication.
fn dirac(x: &Expression) -> Expression {
    let a = x.fresh_dummy();
    Expression::gamma(a)
        .mul(&left_covariant_derivative(x, a))
        .scaled(&Scalar::i())
}

#[derive(Debug, Clone, Serialize)]
pub struct WeitzenbockReport {
    /// Full nonabelian identity
    /// D^2 = -(d - iA)(d - iA) + (i/2) gamma gamma F.
    pub full: bool,
    /// Same identity truncated to at most one gauge factor, with the linear
    /// part of the curvature on the right-hand side.
    pub abelian: bool,
    /// Gauge field switched off: D^2 = -d^2.
    pub flat: bool,
}

/// Squares the Dirac-type operator on a generic section and compares with
/// the curvature decomposition, exactly.
pub fn weitzenbock_report() -> Result<WeitzenbockReport, SymError> {
    let x = Expression::generic('x');
    let lhs = dirac(&dirac(&x));

    let a = Idx::Dummy(50);
    let laplacian = left_covariant_derivative(&left_covariant_derivative(&x, a), a).neg();
    let (g1, g2) = (Idx::Dummy(60), Idx::Dummy(61));
    let curvature_part = |f: Expression| {
        Expression::gamma(g1)
            .mul(&Expression::gamma(g2))
            .mul(&f)
            .mul(&x)
            .scaled(&Scalar::i())
            .scaled(&Scalar::ratio(1, 2))
    };
    let rhs = laplacian.add(&curvature_part(curvature(g1, g2)));
    let full = clifford_contract(&lhs.sub(&rhs))?.normal_form()?.is_empty();

    let truncate = |e: &Expression| {
        e.linearize(FieldKind::Gauge, 0)
            .add(&e.linearize(FieldKind::Gauge, 1))
    };
    let rhs_abelian = truncate(&laplacian).add(&curvature_part(abelian_curvature(g1, g2)));
    let abelian = clifford_contract(&truncate(&lhs).sub(&rhs_abelian))?
        .normal_form()?
        .is_empty();

    let b = Idx::Dummy(70);
    let flat_expected = x.deriv(b).deriv(b).neg();
    let flat = clifford_contract(&lhs.linearize(FieldKind::Gauge, 0).sub(&flat_expected))?
        .normal_form()?
        .is_empty();

    Ok(WeitzenbockReport { full, abelian, flat })
}

/// True when the full nonabelian identity holds.
pub fn weitzenbock_check() -> Result<bool, SymError> {
    Ok(weitzenbock_report()?.full)
}

/// Momentum-space kernel of the quadratic action (gauge-invariant quadratic
/// part plus gauge fixing): the second functional derivative with respect to
/// the gauge field at momenta +p and -p, as a 4x4 matrix in the Lorentz
/// indices. Color is normalized away (the kernel is diagonal in color).
pub fn momentum_kernel(
    exp: &SpectralActionExpansion,
    p: [f64; 4],
) -> Result<[[Complex64; 4]; 4], ActionError> {
    let quadratic = quadratic_part(exp)?
        .add(&exp.gauge_fixing.linearize(FieldKind::Gauge, 2))
        .normal_form()?;
    let mut kernel = [[Complex64::new(0.0, 0.0); 4]; 4];
    for m in &quadratic.terms {
        let coeff = {
            let (re, im) = m.coeff.to_f64();
            let params = m
                .params
                .eval(&exp.param_values)
                .map_err(ActionError::Unbound)?;
            Complex64::new(re, im) * params
        };
        let gauges: Vec<usize> = m
            .word
            .iter()
            .enumerate()
            .filter(|(_, f)| f.kind == FieldKind::Gauge)
            .map(|(j, _)| j)
            .collect();
        let [first, second] = gauges.as_slice() else {
            return Err(ActionError::NotBilinear);
        };
        if m.word.len() != 2 || !m.gammas.is_empty() {
            return Err(ActionError::NotBilinear);
        }
        let mut labels: Vec<Idx> = Vec::new();
        let mut note = |i: Idx| {
            if !labels.contains(&i) {
                labels.push(i);
            }
        };
        for &(x, y) in &m.metrics {
            note(x);
            note(y);
        }
        for f in &m.word {
            if let Some(b) = f.base {
                note(b);
            }
            for &d in &f.derivs {
                note(d);
            }
        }
        let nl = labels.len();
        let mut assignment = vec![0usize; nl];
        loop {
            let value = |i: Idx| assignment[labels.iter().position(|&l| l == i).unwrap()];
            let metrics_ok = m.metrics.iter().all(|&(x, y)| value(x) == value(y));
            if metrics_ok {
                let b1 = value(m.word[*first].base.unwrap());
                let b2 = value(m.word[*second].base.unwrap());
                let phase = |derivs: &[Idx], sign: f64| {
                    derivs
                        .iter()
                        .map(|&d| Complex64::new(0.0, sign * p[value(d)]))
                        .product::<Complex64>()
                };
                // Both functional derivatives: first factor at +p, second at
                // -p, and the transposed assignment.
                kernel[b1][b2] +=
                    coeff * phase(&m.word[*first].derivs, 1.0) * phase(&m.word[*second].derivs, -1.0);
                kernel[b2][b1] +=
                    coeff * phase(&m.word[*first].derivs, -1.0) * phase(&m.word[*second].derivs, 1.0);
            }
            // Advance the mixed-radix counter over label values.
            let mut pos = 0;
            while pos < nl {
                assignment[pos] += 1;
                if assignment[pos] < 4 {
                    break;
                }
                assignment[pos] = 0;
                pos += 1;
            }
            if pos == nl {
                break;
            }
        }
    }
    Ok(kernel)
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelReport {
    /// Fitted proportionality constant between the derived kernel and the
    /// inversion-contract kernel phi (p^2 g - p p) + phi/xi p p.
    pub constant: f64,
    /// Largest entrywise deviation from exact proportionality, relative to
    /// the kernel scale.
    pub max_relative_residual: f64,
    /// Largest residual of the propagator-side inversion check at the same
    /// momenta.
    pub max_inversion_residual: f64,
    pub samples: usize,
    pub ok: bool,
}

/// Compares the derived quadratic kernel against the kernel the propagator
/// module inverts, over the given Euclidean momenta. The two must be exactly
/// proportional; the constant is the normalization convention relating
/// second functional derivatives to the inversion contract and is reported,
/// not assumed.
pub fn kernel_consistency(
    exp: &SpectralActionExpansion,
    momenta: &[[f64; 4]],
) -> Result<KernelReport, ActionError> {
    let xi = *exp
        .param_values
        .get(&Param::Xi)
        .ok_or(ActionError::Unbound(Param::Xi))?;
    let mut dot = 0.0;
    let mut norm = 0.0;
    let mut pairs = Vec::new();
    let mut max_inv = 0.0f64;
    for &p in momenta {
        let derived = momentum_kernel(exp, p)?;
        let psq: f64 = p.iter().map(|x| x * x).sum();
        let phi = exp.form.eval(psq);
        let mut reference = [[0.0f64; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                let delta = if a == b { 1.0 } else { 0.0 };
                reference[a][b] = phi * (psq * delta - p[a] * p[b]) + phi / xi * p[a] * p[b];
            }
        }
        for a in 0..4 {
            for b in 0..4 {
                dot += derived[a][b].re * reference[a][b];
                norm += reference[a][b] * reference[a][b];
                pairs.push((derived[a][b], reference[a][b]));
            }
        }
        let mom = Momentum::euclidean(p);
        let inv = propagators::inversion_check(&mom, xi, &exp.form)?;
        max_inv = max_inv.max(inv);
    }
    let constant = if norm > 0.0 { dot / norm } else { 0.0 };
    let scale = pairs
        .iter()
        .map(|(d, _)| d.norm())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let max_relative_residual = pairs
        .iter()
        .map(|(d, r)| (d - Complex64::new(constant * r, 0.0)).norm())
        .fold(0.0f64, f64::max)
        / scale;
    let ok = max_relative_residual <= 1e-9 && max_inv <= 1e-10;
    Ok(KernelReport {
        constant,
        max_relative_residual,
        max_inversion_residual: max_inv,
        samples: momenta.len(),
        ok,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum RenormMode {
    /// A -> sqrt(1 + deltaZ) A together with g -> g / sqrt(1 + deltaZ).
    FieldAndCoupling,
    /// f_0 -> (1 + deltaZ) f_0 with every other moment fixed.
    CutoffShift,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RenormalizationStep {
    pub delta_z: f64,
    pub mode: RenormMode,
}

#[derive(Debug, Clone, Serialize)]
pub struct RenormReport {
    pub delta_z: f64,
    pub mode: RenormMode,
    /// g_0 A_0 = g A holds symbolically under the field-and-coupling
    /// substitution.
    pub coupling_product_invariant: bool,
    /// Ratio of the quadratic template coefficients after/before the step,
    /// per template index k, for each mode.
    pub quadratic_ratios_field_and_coupling: Vec<f64>,
    pub quadratic_ratios_cutoff_shift: Vec<f64>,
    /// The two modes produce the same k = 0 quadratic coefficient.
    pub modes_agree_at_k0: bool,
    /// For deltaZ != 0 every k >= 1 quadratic coefficient differs between
    /// the modes: only the lowest moment shifts under the cutoff mode.
    pub modes_differ_beyond_k0: bool,
    pub consistency: bool,
}

/// Literal field-and-coupling substitution on an arbitrary expression:
/// every gauge factor picks up one power of the rescale root and every
/// coupling power one inverse power.
fn substitute_field_and_coupling(e: &Expression) -> Expression {
    let mut out = e.clone();
    for m in &mut out.terms {
        let exp = gauge_count(m) - m.params.exponent(Param::Coupling);
        if exp != 0 {
            m.params = m
                .params
                .mul(&crate::coeff::ParamPow::of(Param::RescaleRoot, exp));
        }
    }
    out
}

/// Cutoff-shift substitution: each power of f_0 picks up two powers of the
/// rescale root, representing the factor (1 + deltaZ).
fn substitute_cutoff_shift(e: &Expression) -> Expression {
    let mut out = e.clone();
    for m in &mut out.terms {
        let exp = 2 * m.params.exponent(Param::FM(0));
        if exp != 0 {
            m.params = m
                .params
                .mul(&crate::coeff::ParamPow::of(Param::RescaleRoot, exp));
        }
    }
    out
}

fn transformed_expansion(
    exp: &SpectralActionExpansion,
    mode: RenormMode,
    delta_z: f64,
) -> SpectralActionExpansion {
    let map = |e: &Expression, ghost_sector: bool| match mode {
        RenormMode::FieldAndCoupling => match exp.convention {
            // With the canonical grading the substitution collapses to a
            // uniform factor (1 + deltaZ) on the gauge sector: g^(a-2) picks
            // up R^(2-a) against the field's R^a. Ghosts carry g^a and are
            // untouched.
            CouplingConvention::Canonical => {
                if ghost_sector {
                    e.clone()
                } else {
                    e.with_param(Param::RescaleRoot, 2)
                }
            }
            CouplingConvention::Geometric => {
                let with_fields = substitute_field_and_coupling(e);
                if ghost_sector {
                    with_fields
                } else {
                    // The overall g^-2 prefactor contributes R^2 on top of
                    // the per-field powers.
                    with_fields.with_param(Param::RescaleRoot, 2)
                }
            }
        },
        RenormMode::CutoffShift => substitute_cutoff_shift(e),
    };
    let mut out = exp.clone();
    for t in &mut out.terms {
        let is_volume = t.k.is_none();
        if !is_volume || mode == RenormMode::CutoffShift {
            t.integrand = map(&t.integrand, false);
        }
    }
    out.gauge_fixing = match mode {
        RenormMode::FieldAndCoupling => out.gauge_fixing.with_param(Param::RescaleRoot, 2),
        RenormMode::CutoffShift => substitute_cutoff_shift(&out.gauge_fixing),
    };
    out.ghost = map(&exp.ghost, true);
    out.param_values
        .insert(Param::RescaleRoot, (1.0 + delta_z).sqrt());
    out
}

/// Ratio of numeric quadratic coefficients after/before, per template index.
/// The ratio must be constant over the monomials of each template.
fn quadratic_ratios(
    before: &SpectralActionExpansion,
    after: &SpectralActionExpansion,
) -> Result<Vec<f64>, ActionError> {
    let mut bindings = after.param_values.clone();
    bindings.entry(Param::RescaleRoot).or_insert(1.0);
    let mut out = Vec::new();
    for k in 0..=before.kmax() {
        let b = before.template(k)?.integrand.linearize(FieldKind::Gauge, 2);
        let a = after.template(k)?.integrand.linearize(FieldKind::Gauge, 2);
        let mut ratio: Option<f64> = None;
        for (mb, ma) in b.terms.iter().zip(a.terms.iter()) {
            let vb = mb.params.eval(&bindings).map_err(ActionError::Unbound)?;
            let va = ma.params.eval(&bindings).map_err(ActionError::Unbound)?;
            let r = va / vb;
            match ratio {
                None => ratio = Some(r),
                Some(prev) => {
                    if (prev - r).abs() > 1e-12 * prev.abs().max(1.0) {
                        return Err(ActionError::Remainder(format!(
                            "nonuniform quadratic rescaling at k = {k}"
                        )));
                    }
                }
            }
        }
        out.push(ratio.unwrap_or(1.0));
    }
    Ok(out)
}

/// Applies a renormalization step and reports the bookkeeping consistency:
/// the coupling-field product is invariant, the two absorption modes agree
/// on the lowest quadratic coefficient, and for a nonzero step they differ
/// on every higher one.
pub fn absorb_counterterm(
    exp: &SpectralActionExpansion,
    step: &RenormalizationStep,
) -> Result<(SpectralActionExpansion, RenormReport), ActionError> {
    if 1.0 + step.delta_z <= 0.0 || !step.delta_z.is_finite() {
        return Err(ActionError::DegenerateRescaling(step.delta_z));
    }
    let identity = step.delta_z == 0.0;
    let field_mode = if identity {
        exp.clone()
    } else {
        transformed_expansion(exp, RenormMode::FieldAndCoupling, step.delta_z)
    };
    let cutoff_mode = if identity {
        exp.clone()
    } else {
        transformed_expansion(exp, RenormMode::CutoffShift, step.delta_z)
    };

    // g_0 A_0 = g A under the literal substitution.
    let g_a = Expression::gauge(MU).with_param(Param::Coupling, 1);
    let coupling_product_invariant = substitute_field_and_coupling(&g_a) == g_a;

    let ratios_field = quadratic_ratios(exp, &field_mode)?;
    let ratios_cutoff = quadratic_ratios(exp, &cutoff_mode)?;
    let tol = 1e-12;
    let modes_agree_at_k0 = (ratios_field[0] - ratios_cutoff[0]).abs() <= tol;
    let modes_differ_beyond_k0 = identity
        || ratios_field
            .iter()
            .zip(ratios_cutoff.iter())
            .skip(1)
            .all(|(f, c)| (f - c).abs() > tol);
    let consistency = coupling_product_invariant && modes_agree_at_k0 && modes_differ_beyond_k0;
    let chosen = match step.mode {
        RenormMode::FieldAndCoupling => field_mode,
        RenormMode::CutoffShift => cutoff_mode,
    };
    let report = RenormReport {
        delta_z: step.delta_z,
        mode: step.mode,
        coupling_product_invariant,
        quadratic_ratios_field_and_coupling: ratios_field,
        quadratic_ratios_cutoff_shift: ratios_cutoff,
        modes_agree_at_k0,
        modes_differ_beyond_k0,
        consistency,
    };
    Ok((chosen, report))
}
