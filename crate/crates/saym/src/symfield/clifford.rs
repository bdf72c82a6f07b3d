//! Gamma-matrix contraction identities, enough to reduce the spinor
//! structures arising from squares of Dirac-type operators.
//!
//! Rules, applied to adjacent pairs until none fires:
//! - a mutually contracted pair contributes the spacetime dimension;
//! - a pair contracted into one symmetric derivative multiset becomes a
//!   metric, because the antisymmetric part of the pair drops against the
//!   symmetric derivatives;
//! - a pair whose partner slots sit in noncanonical order is anticommuted,
//!   `gam{a} gam{b} = 2 g{a,b} - gam{b} gam{a}`.

use super::normal::DIM;
use super::{Expression, Idx, Level, Monomial, SymError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum PartnerRank {
    Gamma(usize),
    Deriv(usize),
    Base(usize),
    Free(Idx),
}

fn partner_rank(m: &Monomial, self_pos: usize, idx: Idx) -> PartnerRank {
    for (q, &g) in m.gammas.iter().enumerate() {
        if q != self_pos && g == idx {
            return PartnerRank::Gamma(q);
        }
    }
    for (j, f) in m.word.iter().enumerate() {
        if f.derivs.contains(&idx) {
            return PartnerRank::Deriv(j);
        }
        if f.base == Some(idx) {
            return PartnerRank::Base(j);
        }
    }
    PartnerRank::Free(idx)
}

fn renorm(t: Monomial, level: Level) -> Vec<Monomial> {
    Expression {
        terms: vec![t],
        level,
    }
    .algebraic_normal_form()
    .expect("rewriting preserves well-formedness")
    .terms
}

/// Reduce gamma strings. Errors when a monomial is left with an odd gamma
/// string, which cannot be part of a spinor scalar.
pub fn clifford_contract(e: &Expression) -> Result<Expression, SymError> {
    let nf = e.algebraic_normal_form()?;
    let level = nf.level;
    let mut work: Vec<Monomial> = nf.terms;
    let mut done: Vec<Monomial> = Vec::new();
    let mut steps = 0usize;
    'outer: while let Some(m) = work.pop() {
        steps += 1;
        if steps > 100_000 {
            return Err(SymError::Unsupported(
                "gamma reduction did not stabilize".into(),
            ));
        }
        for p in 0..m.gammas.len().saturating_sub(1) {
            let (a, b) = (m.gammas[p], m.gammas[p + 1]);
            if a == b {
                let mut t = m.clone();
                t.gammas.drain(p..=p + 1);
                t.coeff = t.coeff.scale_int(DIM);
                work.extend(renorm(t, level));
                continue 'outer;
            }
            let ra = partner_rank(&m, p, a);
            let rb = partner_rank(&m, p + 1, b);
            if let (PartnerRank::Deriv(fa), PartnerRank::Deriv(fb)) = (ra, rb) {
                if fa == fb {
                    let mut t = m.clone();
                    t.gammas.drain(p..=p + 1);
                    t.metrics.push((a, b));
                    work.extend(renorm(t, level));
                    continue 'outer;
                }
            }
            if rb < ra {
                let mut sym = m.clone();
                sym.gammas.drain(p..=p + 1);
                sym.metrics.push((a, b));
                sym.coeff = sym.coeff.scale_int(2);
                let mut swapped = m.clone();
                swapped.gammas.swap(p, p + 1);
                swapped.coeff = swapped.coeff.neg();
                work.extend(renorm(sym, level));
                work.extend(renorm(swapped, level));
                continue 'outer;
            }
        }
        done.push(m);
    }
    let out = Expression { terms: done, level }.algebraic_normal_form()?;
    for m in &out.terms {
        if m.gammas.len() % 2 == 1 {
            return Err(SymError::OddSpinorResidue);
        }
    }
    Ok(out)
}
