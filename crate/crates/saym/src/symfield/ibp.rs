//! Reduction of integrated functionals modulo total derivatives.
//!
//! Strategy: in each canonical monomial the first word factor is minimal for
//! the (kind, derivative count) order. While that pivot carries derivatives,
//! strip one and redistribute it over the remaining factors with a sign,
//! which is the rewrite `int d(pivot) rest = -sum_j int pivot .. d(f_j) ..`.
//! An integrated derivative of a single factor vanishes outright. The
//! minimal derivative count over minimal-kind factors drops by one at each
//! step, so the rewriting terminates with every pivot bare.

use super::{Expression, Level, Monomial};

impl Expression {
    pub(super) fn ibp_reduce(&self) -> Expression {
        debug_assert_eq!(self.level, Level::Integrated);
        let mut work: Vec<Monomial> = self.terms.clone();
        let mut done: Vec<Monomial> = Vec::new();
        while let Some(m) = work.pop() {
            if m.word.is_empty() || m.word[0].derivs.is_empty() {
                done.push(m);
                continue;
            }
            if m.word.len() == 1 {
                continue;
            }
            let mut pivot = m.word[0].clone();
            let idx = pivot.derivs.remove(0);
            for j in 1..m.word.len() {
                if m.word[j].kind.is_constant() {
                    continue;
                }
                let mut t = m.clone();
                t.coeff = t.coeff.neg();
                t.word[0] = pivot.clone();
                t.word[j].derivs.push(idx);
                let renorm = Expression {
                    terms: vec![t],
                    level: Level::Integrated,
                }
                .algebraic_normal_form()
                .expect("rewriting preserves well-formedness");
                work.extend(renorm.terms);
            }
        }
        Expression {
            terms: done,
            level: Level::Integrated,
        }
        .algebraic_normal_form()
        .expect("rewriting preserves well-formedness")
    }
}
