//! Differential-geometric builders on top of the core algebra.

use crate::coeff::Scalar;

use super::{Expression, Idx, Level, SymError};

/// Field strength F_{mu nu} = d_mu A_nu - d_nu A_mu - i [A_mu, A_nu].
pub fn curvature(mu: Idx, nu: Idx) -> Expression {
    let amu = Expression::gauge(mu);
    let anu = Expression::gauge(nu);
    anu.deriv(mu)
        .sub(&amu.deriv(nu))
        .sub(&amu.commutator(&anu).scaled(&Scalar::i()))
}

/// Linear part of the field strength.
pub fn abelian_curvature(mu: Idx, nu: Idx) -> Expression {
    Expression::gauge(nu)
        .deriv(mu)
        .sub(&Expression::gauge(mu).deriv(nu))
}

/// Gauge-covariant Laplacian acting in the adjoint,
/// -(d_mu - i ad A_mu)(d^mu - i ad A^mu).
pub fn covariant_laplacian(e: &Expression) -> Result<Expression, SymError> {
    if e.level != Level::Density {
        return Err(SymError::DensityRequired);
    }
    if e.terms.iter().any(|m| m.traced) {
        return Err(SymError::Unsupported(
            "covariant Laplacian needs matrix covariance, got a traced scalar".into(),
        ));
    }
    let a = e.fresh_dummy();
    let gauge = Expression::gauge(a);
    let step = |x: &Expression| {
        x.deriv(a)
            .sub(&gauge.commutator(x).scaled(&Scalar::i()))
    };
    let inner = step(e);
    Ok(step(&inner).neg())
}

/// k-fold application of the covariant Laplacian.
pub fn covariant_laplacian_power(e: &Expression, k: usize) -> Result<Expression, SymError> {
    let mut out = e.clone();
    for _ in 0..k {
        out = covariant_laplacian(&out)?.nf();
    }
    Ok(out)
}

/// Linearized gauge transformation of every gauge factor,
/// delta A_mu = i d_mu eps + [A_mu, eps], extended to derived factors by the
/// Leibniz rule. The parameter is the even generic field named `eps_name`.
pub fn gauge_variation(e: &Expression, eps_name: char) -> Expression {
    let eps = Expression::generic(eps_name);
    e.variation(super::FieldKind::Gauge, |f, _| {
        let mu = f.base.expect("gauge index");
        let mut image = eps
            .deriv(mu)
            .scaled(&Scalar::i())
            .add(&Expression::gauge(mu).commutator(&eps));
        for &d in &f.derivs {
            image = image.deriv(d);
        }
        image
    })
}
