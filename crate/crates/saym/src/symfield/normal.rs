//! Canonicalization: structural validation, metric elimination, trace
//! rotation with graded signs, dummy-index relabeling, term collection.

use std::collections::{BTreeMap, HashMap};

use crate::coeff::{Param, ParamPow, Scalar};

use super::{Expression, Factor, FieldKind, Idx, Monomial, SymError};

pub(super) const DIM: i64 = 4;

type Cand = (Vec<Factor>, Vec<Idx>, Vec<(Idx, Idx)>);
type MonKey = (bool, ParamPow, Vec<(Idx, Idx)>, Vec<Idx>, Vec<Factor>);

impl Expression {
    pub(super) fn algebraic_normal_form(&self) -> Result<Expression, SymError> {
        let mut collected: BTreeMap<MonKey, Scalar> = BTreeMap::new();
        for m in &self.terms {
            let Some(mut m) = prefold(m) else { continue };
            validate(&m)?;
            eliminate_metrics(&mut m);
            let (cand, negate) = canonical_candidate(&m);
            let (word, gammas, metrics) = cand;
            let mut coeff = m.coeff.clone();
            if negate {
                coeff = coeff.neg();
            }
            let key = (m.traced, m.params.clone(), metrics, gammas, word);
            match collected.get_mut(&key) {
                Some(c) => *c = c.add(&coeff),
                None => {
                    collected.insert(key, coeff);
                }
            }
        }
        let terms = collected
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|((traced, params, metrics, gammas, word), coeff)| Monomial {
                coeff,
                params,
                metrics,
                gammas,
                word,
                traced,
            })
            .collect();
        Ok(Expression {
            terms,
            level: self.level,
        })
    }
}

/// Fold units and couplings out of the word, relocate stray gamma factors to
/// the spinor prefix, kill derivatives of constants. `None` means the term
/// vanished.
fn prefold(m: &Monomial) -> Option<Monomial> {
    if m.coeff.is_zero() {
        return None;
    }
    let mut out = m.clone();
    let mut word = Vec::with_capacity(out.word.len());
    for f in out.word.drain(..) {
        match f.kind {
            FieldKind::Unit | FieldKind::Coupling | FieldKind::Gamma if !f.derivs.is_empty() => {
                return None;
            }
            FieldKind::Unit => {}
            FieldKind::Coupling => {
                out.params = out.params.mul(&ParamPow::of(Param::Coupling, 1));
            }
            FieldKind::Gamma => out.gammas.push(f.base.expect("gamma index")),
            _ => word.push(f),
        }
    }
    out.word = word;
    Some(out)
}

fn occurrence_counts(m: &Monomial) -> HashMap<Idx, usize> {
    let mut counts = HashMap::new();
    for i in m.slots() {
        *counts.entry(i).or_insert(0) += 1;
    }
    counts
}

fn validate(m: &Monomial) -> Result<(), SymError> {
    for (idx, n) in occurrence_counts(m) {
        if n > 2 {
            return Err(SymError::MalformedContraction(
                super::display::idx_name(idx),
                n,
            ));
        }
        if n == 1 {
            if let Idx::Dummy(_) = idx {
                return Err(SymError::UnpairedDummy(super::display::idx_name(idx)));
            }
        }
    }
    Ok(())
}

/// Contract metric factors into the rest of the monomial. A self-paired
/// metric contributes the spacetime dimension. Afterwards every surviving
/// metric carries two indices occurring nowhere else.
fn eliminate_metrics(m: &mut Monomial) {
    loop {
        let counts = occurrence_counts(m);
        let mut action: Option<(usize, bool)> = None;
        for (i, &(a, b)) in m.metrics.iter().enumerate() {
            if a == b {
                action = Some((i, true));
                break;
            }
            if counts[&a] == 2 || counts[&b] == 2 {
                action = Some((i, false));
                break;
            }
        }
        let Some((i, self_paired)) = action else { break };
        let (a, b) = m.metrics.remove(i);
        if self_paired {
            m.coeff = m.coeff.scale_int(DIM);
            continue;
        }
        let counts = occurrence_counts(m);
        let (from, to) = if counts.get(&a) == Some(&1) {
            (a, b)
        } else {
            (b, a)
        };
        rename_one(m, from, to);
    }
    for pair in &mut m.metrics {
        if pair.1 < pair.0 {
            *pair = (pair.1, pair.0);
        }
    }
    m.metrics.sort_unstable();
}

/// Rename the single remaining occurrence of `from` to `to`.
fn rename_one(m: &mut Monomial, from: Idx, to: Idx) {
    for g in &mut m.gammas {
        if *g == from {
            *g = to;
            return;
        }
    }
    for f in &mut m.word {
        if f.base == Some(from) {
            f.base = Some(to);
            return;
        }
        for d in &mut f.derivs {
            if *d == from {
                *d = to;
                return;
            }
        }
    }
    for pair in &mut m.metrics {
        if pair.0 == from {
            pair.0 = to;
            return;
        }
        if pair.1 == from {
            pair.1 = to;
            return;
        }
    }
    unreachable!("paired index lost during metric elimination");
}

/// Pick the least representative over trace rotations and dummy relabelings.
/// Returns the canonical (word, gammas, metrics) and whether the coefficient
/// flips sign. Among rotations producing the same least structure the
/// smallest offset fixes the sign, so a word mapped to its own negative is
/// kept rather than cancelled.
fn canonical_candidate(m: &Monomial) -> (Cand, bool) {
    let rotations = if m.traced && m.word.len() > 1 {
        m.word.len()
    } else {
        1
    };
    let mut best: Option<(Cand, bool)> = None;
    for r in 0..rotations {
        let mut word: Vec<Factor> = Vec::with_capacity(m.word.len());
        word.extend_from_slice(&m.word[r..]);
        word.extend_from_slice(&m.word[..r]);
        let pre_parity: usize = m.word[..r].iter().filter(|f| f.kind.is_odd()).count();
        let suf_parity: usize = m.word[r..].iter().filter(|f| f.kind.is_odd()).count();
        let negate = pre_parity % 2 == 1 && suf_parity % 2 == 1;
        let cand = best_relabeling(&word, &m.gammas, &m.metrics);
        match &best {
            Some((b, _)) if *b <= cand => {}
            _ => best = Some((cand, negate)),
        }
    }
    best.expect("at least one rotation candidate")
}

/// Minimal canonical relabeling of contracted indices for a fixed word order.
/// Contracted labels are renamed to dummy ids in scan order (gamma prefix,
/// then per factor base and derivative slots); where several not-yet-named
/// labels sit in one derivative multiset the naming order is ambiguous, so
/// all orders are tried and the least result kept.
fn best_relabeling(word: &[Factor], gammas: &[Idx], metrics: &[(Idx, Idx)]) -> Cand {
    let mut counts: HashMap<Idx, usize> = HashMap::new();
    for &(a, b) in metrics {
        *counts.entry(a).or_insert(0) += 1;
        *counts.entry(b).or_insert(0) += 1;
    }
    for &g in gammas {
        *counts.entry(g).or_insert(0) += 1;
    }
    for f in word {
        for i in f.base.iter().chain(f.derivs.iter()) {
            *counts.entry(*i).or_insert(0) += 1;
        }
    }
    let paired = |i: Idx| counts[&i] == 2;

    let mut assign: HashMap<Idx, u16> = HashMap::new();
    let mut next: u16 = 0;
    for &g in gammas {
        if paired(g) && !assign.contains_key(&g) {
            assign.insert(g, next);
            next += 1;
        }
    }
    let mut best: Option<Cand> = None;
    descend(word, gammas, metrics, &paired, &mut assign, next, 0, &mut best);
    best.expect("relabeling produces at least one candidate")
}

fn descend(
    word: &[Factor],
    gammas: &[Idx],
    metrics: &[(Idx, Idx)],
    paired: &dyn Fn(Idx) -> bool,
    assign: &mut HashMap<Idx, u16>,
    mut next: u16,
    at: usize,
    best: &mut Option<Cand>,
) {
    if at == word.len() {
        let cand = apply_assignment(word, gammas, metrics, assign);
        match best {
            Some(b) if *b <= cand => {}
            _ => *best = Some(cand),
        }
        return;
    }
    let f = &word[at];
    let mut base_named = false;
    if let Some(b) = f.base {
        if paired(b) && !assign.contains_key(&b) {
            assign.insert(b, next);
            next += 1;
            base_named = true;
        }
    }
    let mut fresh: Vec<Idx> = f
        .derivs
        .iter()
        .copied()
        .filter(|&d| paired(d) && !assign.contains_key(&d))
        .collect();
    fresh.sort_unstable();
    fresh.dedup();
    if fresh.is_empty() {
        descend(word, gammas, metrics, paired, assign, next, at + 1, best);
    } else {
        let k = fresh.len();
        permute_orders(&mut fresh, 0, &mut |order: &[Idx]| {
            for (i, &lab) in order.iter().enumerate() {
                assign.insert(lab, next + i as u16);
            }
            descend(
                word,
                gammas,
                metrics,
                paired,
                assign,
                next + k as u16,
                at + 1,
                best,
            );
            for &lab in order {
                assign.remove(&lab);
            }
        });
    }
    if base_named {
        assign.remove(&f.base.unwrap());
    }
}

fn permute_orders(items: &mut Vec<Idx>, at: usize, visit: &mut dyn FnMut(&[Idx])) {
    if at == items.len() {
        visit(items);
        return;
    }
    for i in at..items.len() {
        items.swap(at, i);
        permute_orders(items, at + 1, visit);
        items.swap(at, i);
    }
}

fn apply_assignment(
    word: &[Factor],
    gammas: &[Idx],
    metrics: &[(Idx, Idx)],
    assign: &HashMap<Idx, u16>,
) -> Cand {
    let map = |i: Idx| assign.get(&i).map_or(i, |&d| Idx::Dummy(d));
    let new_word: Vec<Factor> = word
        .iter()
        .map(|f| {
            let mut derivs: Vec<Idx> = f.derivs.iter().map(|&d| map(d)).collect();
            derivs.sort_unstable();
            Factor {
                kind: f.kind,
                base: f.base.map(map),
                derivs,
            }
        })
        .collect();
    let new_gammas: Vec<Idx> = gammas.iter().map(|&g| map(g)).collect();
    let mut new_metrics: Vec<(Idx, Idx)> = metrics
        .iter()
        .map(|&(a, b)| {
            let (a, b) = (map(a), map(b));
            if b < a {
                (b, a)
            } else {
                (a, b)
            }
        })
        .collect();
    new_metrics.sort_unstable();
    (new_word, new_gammas, new_metrics)
}
