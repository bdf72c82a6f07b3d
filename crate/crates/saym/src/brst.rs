//! BRST transformation, invariance and nilpotency checks, gauge-fixing
//! fermion, and elimination of the auxiliary field.
//!
//! The transformation `s` is an odd left derivation:
//!   s A_mu = d_mu C - i [A_mu, C]
//!   s C    = i C C
//!   s Cb   = xi^-1 d.A            (minimal variant)
//!   s Cb   = -h,  s h = 0         (extended variant)
//! The relative factor of i between the derivative and commutator pieces is
//! the unique choice compatible with the curvature convention
//! F = dA - dA - i[A, A]: it gives s F = -i[F, C], hence invariance of every
//! trace of covariant objects, while keeping s nilpotent. The sign in the
//! extended antighost rule is fixed so that eliminating h from s(Psi)
//! reproduces the gauge-fixing and ghost actions with their conventional
//! signs.

use serde::Serialize;
use thiserror::Error;

use crate::coeff::{Param, Scalar};
use crate::symfield::{
    splice_at, Expression, Factor, FieldKind, Idx, Level, SymError,
};

#[derive(Debug, Error, PartialEq)]
pub enum BrstError {
    #[error("auxiliary sector is linear only: stationarity is degenerate")]
    DegenerateStationarity,
    #[error("unsupported structure: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Sym(#[from] SymError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Minimal,
    Extended,
}

#[derive(Debug, Clone, Copy)]
pub struct BrstConfig {
    pub variant: Variant,
}

impl BrstConfig {
    pub fn minimal() -> Self {
        BrstConfig {
            variant: Variant::Minimal,
        }
    }

    pub fn extended() -> Self {
        BrstConfig {
            variant: Variant::Extended,
        }
    }

    /// Sign in `s Cb = sign * h` for the extended variant.
    pub fn auxiliary_sign(&self) -> i64 {
        -1
    }
}

/// The generic field name reserved for stationarity probes.
const PROBE: char = 'v';

fn apply_derivs(mut e: Expression, derivs: &[Idx]) -> Expression {
    for &d in derivs {
        e = e.deriv(d);
    }
    e
}

/// Image of one derived factor under `s`. `fresh` is a dummy id the image
/// may allocate new contraction labels from.
fn brst_factor(f: &Factor, cfg: &BrstConfig, fresh: u16) -> Option<Expression> {
    let core = match f.kind {
        FieldKind::Gauge => {
            let mu = f.base.expect("gauge index");
            Expression::ghost().deriv(mu).sub(
                &Expression::gauge(mu)
                    .commutator(&Expression::ghost())
                    .scaled(&Scalar::i()),
            )
        }
        FieldKind::Ghost => Expression::ghost()
            .mul(&Expression::ghost())
            .scaled(&Scalar::i()),
        FieldKind::Antighost => match cfg.variant {
            Variant::Minimal => {
                let d = Idx::Dummy(fresh);
                Expression::gauge(d).deriv(d).with_param(Param::Xi, -1)
            }
            Variant::Extended => Expression::aux().neg(),
        },
        _ => return None,
    };
    Some(apply_derivs(core, &f.derivs))
}

/// BRST transformation of an expression, acting as an odd left derivation:
/// crossing an odd factor flips the sign of everything to its right.
pub fn brst(e: &Expression, cfg: &BrstConfig) -> Expression {
    let mut out = Expression::zero(e.level);
    for m in &e.terms {
        let fresh = m.max_dummy().map_or(0, |d| d + 1);
        let mut flip = false;
        for j in 0..m.word.len() {
            let f = &m.word[j];
            if let Some(image) = brst_factor(f, cfg, fresh) {
                let mut spliced = splice_at(m, j, &image);
                if flip {
                    spliced = spliced.neg();
                }
                out.terms.extend(spliced.terms);
            }
            if f.kind.is_odd() {
                flip = !flip;
            }
        }
    }
    out
}

/// Whether `s e` vanishes modulo total derivatives.
pub fn check_invariance(e: &Expression, cfg: &BrstConfig) -> Result<bool, SymError> {
    if e.level != Level::Integrated {
        return Err(SymError::IntegratedRequired);
    }
    brst(e, cfg).is_zero()
}

#[derive(Debug)]
pub struct NilpotencyReport {
    /// Generator name and the normal form of `s s` applied to it.
    pub residuals: Vec<(String, Expression)>,
    pub exact: bool,
}

/// Apply `s` twice to every generator of the variant.
pub fn nilpotency_report(cfg: &BrstConfig) -> NilpotencyReport {
    let mut gens: Vec<(String, Expression)> = vec![
        ("gauge".into(), Expression::gauge(crate::symfield::MU)),
        ("ghost".into(), Expression::ghost()),
        ("antighost".into(), Expression::antighost()),
    ];
    if cfg.variant == Variant::Extended {
        gens.push(("auxiliary".into(), Expression::aux()));
    }
    let residuals: Vec<(String, Expression)> = gens
        .into_iter()
        .map(|(name, g)| (name, brst(&brst(&g, cfg), cfg).nf()))
        .collect();
    let exact = residuals.iter().all(|(_, r)| r.is_empty());
    NilpotencyReport { residuals, exact }
}

/// Divergence d_mu A^mu as a density.
pub fn divergence() -> Expression {
    let d = Idx::Dummy(0);
    Expression::gauge(d).deriv(d)
}

/// Flat nonnegative Laplacian -d_mu d^mu applied once.
pub fn flat_laplacian(e: &Expression) -> Expression {
    let d = e.fresh_dummy();
    e.deriv(d).deriv(d).neg()
}

/// Formal regulator series applied to a density:
/// sum_k phi_k Delta^k e for k = 0..=kmax, with Delta the flat Laplacian.
pub fn phi_apply(e: &Expression, kmax: u32) -> Expression {
    let mut out = Expression::zero(e.level);
    let mut power = e.clone();
    for k in 0..=kmax {
        out = out.add(&power.with_param(Param::Phi(k), 1));
        if k < kmax {
            power = flat_laplacian(&power);
        }
    }
    out
}

/// Gauge-fixing action
/// -1/(2 xi) int tr( d.A phi(Delta) d.A ).
pub fn gauge_fixing_action(kmax: u32) -> Expression {
    divergence()
        .mul_fresh(&phi_apply(&divergence(), kmax))
        .trace()
        .expect("no gammas")
        .integrate()
        .expect("density")
        .scaled(&Scalar::ratio(-1, 2))
        .with_param(Param::Xi, -1)
}

/// Ghost action
/// -int tr( d_mu Cb phi(Delta)(d^mu C - i [A^mu, C]) ).
pub fn ghost_action(kmax: u32) -> Expression {
    let lhs_label = Idx::Free(40);
    let rhs_label = Idx::Free(41);
    let lhs = Expression::antighost().deriv(lhs_label);
    let core = Expression::ghost().deriv(rhs_label).sub(
        &Expression::gauge(rhs_label)
            .commutator(&Expression::ghost())
            .scaled(&Scalar::i()),
    );
    lhs.mul_fresh(&phi_apply(&core, kmax))
        .contract_free(lhs_label, rhs_label)
        .trace()
        .expect("no gammas")
        .integrate()
        .expect("density")
        .neg()
}

/// Gauge-fixing fermion of the extended variant:
/// Psi = -int tr( phi(Delta)(Cb) (xi/2 h + d.A) ).
pub fn gauge_fixing_fermion(kmax: u32) -> Expression {
    let source = Expression::aux()
        .with_param(Param::Xi, 1)
        .scaled(&Scalar::ratio(1, 2))
        .add(&divergence());
    phi_apply(&Expression::antighost(), kmax)
        .mul_fresh(&source)
        .trace()
        .expect("no gammas")
        .integrate()
        .expect("density")
        .neg()
}

/// Eliminate the auxiliary field at its stationary point.
///
/// The input must be at most quadratic in h with an invertible bare-h
/// stationarity coefficient. The candidate stationary value is read off the
/// lowest regulator sector and then verified exactly: the full variation of
/// the input must vanish after substitution, otherwise the structure is
/// reported as unsupported.
pub fn eliminate_auxiliary(e: &Expression) -> Result<Expression, BrstError> {
    if e.level != Level::Integrated {
        return Err(BrstError::Sym(SymError::IntegratedRequired));
    }
    let nf = e.normal_form()?;
    let aux_count = |m: &crate::symfield::Monomial| {
        m.word.iter().filter(|f| f.kind == FieldKind::Aux).count()
    };
    let max_deg = nf.terms.iter().map(&aux_count).max().unwrap_or(0);
    if max_deg == 0 {
        return Ok(nf);
    }
    if max_deg > 2 {
        return Err(BrstError::Unsupported(format!(
            "auxiliary field appears with degree {max_deg}"
        )));
    }
    if nf.terms.iter().all(|m| aux_count(m) != 2) {
        return Err(BrstError::DegenerateStationarity);
    }

    let probe_image = |f: &Factor, _: u16| apply_derivs(Expression::generic(PROBE), &f.derivs);
    let full_var = nf.variation(FieldKind::Aux, probe_image).normal_form()?;

    let stripped = strip_probe(&full_var)?;
    let quad: Vec<_> = stripped
        .iter()
        .filter(|m| aux_count(m) == 1)
        .cloned()
        .collect();
    let linear: Vec<_> = stripped
        .iter()
        .filter(|m| aux_count(m) == 0)
        .cloned()
        .collect();

    let bare: Vec<_> = quad
        .iter()
        .filter(|m| m.word.len() == 1 && m.word[0].derivs.is_empty())
        .collect();
    let [bare_h] = bare.as_slice() else {
        return Err(BrstError::Unsupported(
            "stationarity equation has no unique bare auxiliary term".into(),
        ));
    };
    let inv_coeff = bare_h.coeff.inv();
    let inv_params = bare_h.params.inv();

    let select_lowest = bare_h.params.exponent(Param::Phi(0)) >= 1;
    let source: Vec<_> = linear
        .into_iter()
        .filter(|m| !select_lowest || m.params.exponent(Param::Phi(0)) >= 1)
        .collect();
    let mut h_star = Expression {
        terms: source,
        level: Level::Density,
    }
    .scaled(&inv_coeff)
    .neg();
    for m in &mut h_star.terms {
        m.params = m.params.mul(&inv_params);
    }
    let h_star = h_star.nf();

    let h_image =
        |f: &Factor, fresh: u16| apply_derivs(h_star.shifted_dummies(fresh), &f.derivs);
    let residual = full_var.substitute(FieldKind::Aux, &h_image).normal_form()?;
    if !residual.is_empty() {
        return Err(BrstError::Unsupported(
            "no exact stationary point of the supported form".into(),
        ));
    }
    Ok(nf.substitute(FieldKind::Aux, &h_image).normal_form()?)
}

/// Drop the leading bare probe factor from every term of an integrated
/// variation, leaving densities.
fn strip_probe(
    e: &Expression,
) -> Result<Vec<crate::symfield::Monomial>, BrstError> {
    let is_probe = |f: &Factor| {
        matches!(f.kind, FieldKind::Generic { name, .. } if name == PROBE)
    };
    let mut out = Vec::new();
    for m in &e.terms {
        let ok = !m.word.is_empty() && is_probe(&m.word[0]) && m.word[0].derivs.is_empty();
        if !ok {
            return Err(BrstError::Unsupported(
                "variation does not reduce to a bare probe against a local density".into(),
            ));
        }
        let mut t = m.clone();
        t.word.remove(0);
        t.traced = false;
        out.push(t);
    }
    Ok(out)
}
