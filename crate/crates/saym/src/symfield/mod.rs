//! Symbolic algebra for Lie-algebra-valued fields under a formal trace.
//!
//! Expressions are sums of monomials. A monomial is an ordered word of derived
//! field factors (matrix-valued, noncommuting) with Lorentz index slots, an
//! optional gamma-matrix prefix (spinor space commutes with the gauge word), a
//! list of symmetric metric factors, and an exact coefficient times a Laurent
//! monomial in formal parameters. Index contraction follows the summation
//! convention: a label occurring twice in one monomial is a contracted pair, a
//! label occurring once is free, three or more occurrences are malformed.
//!
//! Canonical forms relabel contracted indices, rotate traced words to a least
//! representative with graded signs, and collect like terms. A monomial is not
//! identified with its own negative by a self-mapping rotation; odd-odd words
//! like tr(CC) survive as written.

mod normal;
mod ibp;
mod calculus;
mod clifford;
mod display;

pub use calculus::{
    abelian_curvature, covariant_laplacian, covariant_laplacian_power, curvature, gauge_variation,
};
pub use clifford::clifford_contract;

use crate::coeff::{Param, ParamPow, Scalar};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SymError {
    #[error("malformed contraction: index {0} occurs {1} times in one monomial")]
    MalformedContraction(String, usize),
    #[error("dummy index {0} occurs only once in a monomial")]
    UnpairedDummy(String),
    #[error("expression is not order-homogeneous; per-term orders {0:?}")]
    InhomogeneousOrder(Vec<i64>),
    #[error("operation requires a density-level expression")]
    DensityRequired,
    #[error("operation requires an integrated functional")]
    IntegratedRequired,
    #[error("trace applied to a monomial that is already traced")]
    AlreadyTraced,
    #[error("trace over spinor factors is not supported")]
    SpinorTrace,
    #[error("leftover odd gamma string where a spinor scalar was expected")]
    OddSpinorResidue,
    #[error("unsupported structure: {0}")]
    Unsupported(String),
}

/// Lorentz index label. `Free` labels are externally meaningful names;
/// `Dummy` labels are canonical contraction ids assigned by normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Idx {
    Free(u16),
    Dummy(u16),
}

pub const MU: Idx = Idx::Free(0);
pub const NU: Idx = Idx::Free(1);
pub const RHO: Idx = Idx::Free(2);
pub const SIG: Idx = Idx::Free(3);

pub fn free(n: u16) -> Idx {
    Idx::Free(n)
}

pub(crate) fn free_name(n: u16) -> String {
    const NAMES: [&str; 8] = ["mu", "nu", "rho", "sig", "alp", "bet", "kap", "tau"];
    if (n as usize) < NAMES.len() {
        NAMES[n as usize].to_string()
    } else {
        format!("x{n}")
    }
}

/// Field symbol kinds. Variant order fixes the pivot order used by trace
/// rotation and integration by parts (earlier variants are stripped first).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FieldKind {
    /// Inert test field; `odd` sets its Grassmann parity.
    Generic { name: char, odd: bool },
    /// Faddeev-Popov antighost.
    Antighost,
    /// Faddeev-Popov ghost.
    Ghost,
    /// Nakanishi-Lautrup auxiliary field.
    Aux,
    /// Gauge connection component; carries one Lorentz index.
    Gauge,
    /// Gamma matrix; carries one Lorentz index, lives in the spinor prefix.
    Gamma,
    /// Coupling constant; folded into the parameter monomial.
    Coupling,
    /// Identity factor; dropped by normalization.
    Unit,
}

impl FieldKind {
    pub fn is_odd(self) -> bool {
        matches!(
            self,
            FieldKind::Ghost | FieldKind::Antighost | FieldKind::Generic { odd: true, .. }
        )
    }

    pub fn ghost_number(self) -> i64 {
        match self {
            FieldKind::Ghost => 1,
            FieldKind::Antighost => -1,
            _ => 0,
        }
    }

    /// Constant matrices and scalars: derivatives annihilate them and the
    /// Leibniz rule skips them.
    pub fn is_constant(self) -> bool {
        matches!(self, FieldKind::Gamma | FieldKind::Coupling | FieldKind::Unit)
    }

    fn wants_base_index(self) -> bool {
        matches!(self, FieldKind::Gauge | FieldKind::Gamma)
    }
}

/// A derived field: base symbol plus an ordered (canonically sorted)
/// multi-index of partial derivatives.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Factor {
    pub kind: FieldKind,
    pub base: Option<Idx>,
    pub derivs: Vec<Idx>,
}

impl Factor {
    pub fn new(kind: FieldKind, base: Option<Idx>) -> Self {
        assert_eq!(
            kind.wants_base_index(),
            base.is_some(),
            "base index mismatch for {kind:?}"
        );
        Factor {
            kind,
            base,
            derivs: Vec::new(),
        }
    }

    pub fn with_derivs(mut self, derivs: &[Idx]) -> Self {
        self.derivs.extend_from_slice(derivs);
        self
    }

    pub fn order(&self) -> i64 {
        let base = if self.kind == FieldKind::Gauge { 1 } else { 0 };
        base + self.derivs.len() as i64
    }

    fn sort_key(&self) -> (FieldKind, usize, Option<Idx>, &[Idx]) {
        (self.kind, self.derivs.len(), self.base, &self.derivs)
    }
}

impl PartialOrd for Factor {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Factor {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

/// One term: coefficient, parameter monomial, metric factors, gamma prefix,
/// matrix word, trace flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Monomial {
    pub coeff: Scalar,
    pub params: ParamPow,
    pub metrics: Vec<(Idx, Idx)>,
    pub gammas: Vec<Idx>,
    pub word: Vec<Factor>,
    pub traced: bool,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial {
            coeff: Scalar::one(),
            params: ParamPow::unit(),
            metrics: Vec::new(),
            gammas: Vec::new(),
            word: Vec::new(),
            traced: false,
        }
    }

    pub fn from_factor(f: Factor) -> Self {
        let mut m = Monomial::one();
        match f.kind {
            FieldKind::Gamma => m.gammas.push(f.base.expect("gamma index")),
            FieldKind::Unit => {}
            FieldKind::Coupling => {
                m.params = ParamPow::of(Param::Coupling, 1);
            }
            _ => m.word.push(f),
        }
        m
    }

    pub fn parity(&self) -> u8 {
        (self
            .word
            .iter()
            .filter(|f| f.kind.is_odd())
            .count()
            % 2) as u8
    }

    pub fn ghost_number(&self) -> i64 {
        self.word.iter().map(|f| f.kind.ghost_number()).sum()
    }

    pub fn order(&self) -> i64 {
        self.word.iter().map(|f| f.order()).sum()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        assert!(
            !self.traced && !other.traced,
            "monomial products are formed before tracing"
        );
        let mut m = self.clone();
        m.coeff = m.coeff.mul(&other.coeff);
        m.params = m.params.mul(&other.params);
        m.metrics.extend_from_slice(&other.metrics);
        m.gammas.extend_from_slice(&other.gammas);
        m.word.extend_from_slice(&other.word);
        m
    }

    /// Largest dummy id in use, if any.
    pub(crate) fn max_dummy(&self) -> Option<u16> {
        self.slots()
            .filter_map(|i| match i {
                Idx::Dummy(d) => Some(d),
                _ => None,
            })
            .max()
    }

    pub(crate) fn shift_dummies(&mut self, offset: u16) {
        let bump = |i: &mut Idx| {
            if let Idx::Dummy(d) = i {
                *d += offset;
            }
        };
        for (a, b) in &mut self.metrics {
            bump(a);
            bump(b);
        }
        for g in &mut self.gammas {
            bump(g);
        }
        for f in &mut self.word {
            if let Some(b) = &mut f.base {
                bump(b);
            }
            for d in &mut f.derivs {
                bump(d);
            }
        }
    }

    fn slots(&self) -> impl Iterator<Item = Idx> + '_ {
        self.metrics
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .chain(self.gammas.iter().copied())
            .chain(self.word.iter().flat_map(|f| {
                f.base.into_iter().chain(f.derivs.iter().copied())
            }))
    }
}

/// Functional level of an expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Density,
    Integrated,
}

/// A sum of monomials at a common level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expression {
    pub terms: Vec<Monomial>,
    pub level: Level,
}

impl Expression {
    pub fn zero(level: Level) -> Self {
        Expression {
            terms: Vec::new(),
            level,
        }
    }

    pub fn from_monomial(m: Monomial) -> Self {
        Expression {
            terms: vec![m],
            level: Level::Density,
        }
    }

    pub fn unit() -> Self {
        Expression::from_monomial(Monomial::one())
    }

    pub fn field(kind: FieldKind, base: Option<Idx>) -> Self {
        Expression::from_monomial(Monomial::from_factor(Factor::new(kind, base)))
    }

    pub fn gauge(mu: Idx) -> Self {
        Expression::field(FieldKind::Gauge, Some(mu))
    }

    pub fn ghost() -> Self {
        Expression::field(FieldKind::Ghost, None)
    }

    pub fn antighost() -> Self {
        Expression::field(FieldKind::Antighost, None)
    }

    pub fn aux() -> Self {
        Expression::field(FieldKind::Aux, None)
    }

    pub fn generic(name: char) -> Self {
        Expression::field(FieldKind::Generic { name, odd: false }, None)
    }

    pub fn generic_odd(name: char) -> Self {
        Expression::field(FieldKind::Generic { name, odd: true }, None)
    }

    pub fn gamma(mu: Idx) -> Self {
        Expression::field(FieldKind::Gamma, Some(mu))
    }

    pub fn metric(a: Idx, b: Idx) -> Self {
        let mut m = Monomial::one();
        m.metrics.push((a, b));
        Expression::from_monomial(m)
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Expression) -> Expression {
        assert_eq!(self.level, other.level, "level mismatch in add");
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Expression {
            terms,
            level: self.level,
        }
    }

    pub fn sub(&self, other: &Expression) -> Expression {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Expression {
        self.scaled(&Scalar::from_int(-1))
    }

    pub fn scaled(&self, s: &Scalar) -> Expression {
        let mut e = self.clone();
        for m in &mut e.terms {
            m.coeff = m.coeff.mul(s);
        }
        e
    }

    pub fn with_param(&self, p: Param, exp: i32) -> Expression {
        let pw = ParamPow::of(p, exp);
        let mut e = self.clone();
        for m in &mut e.terms {
            m.params = m.params.mul(&pw);
        }
        e
    }

    pub fn mul(&self, other: &Expression) -> Expression {
        assert_eq!(self.level, Level::Density, "products act on densities");
        assert_eq!(other.level, Level::Density, "products act on densities");
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(a.mul(b));
            }
        }
        Expression {
            terms,
            level: Level::Density,
        }
    }

    /// Product with the dummy ids of `other` shifted clear of this factor's,
    /// so independently built pieces never alias contraction labels.
    pub fn mul_fresh(&self, other: &Expression) -> Expression {
        let offset = self.max_dummy_id().map_or(0, |d| d + 1);
        let mut rhs = other.clone();
        for m in &mut rhs.terms {
            m.shift_dummies(offset);
        }
        self.mul(&rhs)
    }

    pub(crate) fn max_dummy_id(&self) -> Option<u16> {
        self.terms.iter().filter_map(|m| m.max_dummy()).max()
    }

    /// Copy with every dummy id shifted up by `offset`.
    pub fn shifted_dummies(&self, offset: u16) -> Expression {
        let mut e = self.clone();
        for m in &mut e.terms {
            m.shift_dummies(offset);
        }
        e
    }

    /// Commutator [self, other] of two densities.
    pub fn commutator(&self, other: &Expression) -> Expression {
        self.mul(other).sub(&other.mul(self))
    }

    /// Partial derivative of the density: Leibniz over non-constant factors.
    pub fn deriv(&self, idx: Idx) -> Expression {
        assert_eq!(self.level, Level::Density, "derivatives act on densities");
        let mut terms = Vec::new();
        for m in &self.terms {
            for (j, f) in m.word.iter().enumerate() {
                if f.kind.is_constant() {
                    continue;
                }
                let mut t = m.clone();
                t.word[j].derivs.push(idx);
                terms.push(t);
            }
        }
        Expression {
            terms,
            level: Level::Density,
        }
    }

    /// Rename the free label `b` to `a` in every monomial (contracting the
    /// pair when `a` already occurs).
    pub fn contract_free(&self, a: Idx, b: Idx) -> Expression {
        let mut e = self.clone();
        for m in &mut e.terms {
            for (x, y) in &mut m.metrics {
                if *x == b {
                    *x = a;
                }
                if *y == b {
                    *y = a;
                }
            }
            for g in &mut m.gammas {
                if *g == b {
                    *g = a;
                }
            }
            for f in &mut m.word {
                if f.base == Some(b) {
                    f.base = Some(a);
                }
                for d in &mut f.derivs {
                    if *d == b {
                        *d = a;
                    }
                }
            }
        }
        e
    }

    pub fn trace(&self) -> Result<Expression, SymError> {
        let mut e = self.clone();
        for m in &mut e.terms {
            if m.traced {
                return Err(SymError::AlreadyTraced);
            }
            if !m.gammas.is_empty() {
                return Err(SymError::SpinorTrace);
            }
            m.traced = true;
        }
        Ok(e)
    }

    pub fn integrate(&self) -> Result<Expression, SymError> {
        match self.level {
            Level::Density => Ok(Expression {
                terms: self.terms.clone(),
                level: Level::Integrated,
            }),
            Level::Integrated => Err(SymError::DensityRequired),
        }
    }

    /// Part of the expression exactly homogeneous of `degree` in factors of
    /// the given kind (derivatives of the field count as occurrences).
    pub fn linearize(&self, kind: FieldKind, degree: usize) -> Expression {
        let base = match kind {
            FieldKind::Generic { name, .. } => FieldKind::Generic { name, odd: false },
            k => k,
        };
        let matches_kind = |f: &Factor| match (f.kind, base) {
            (FieldKind::Generic { name: a, .. }, FieldKind::Generic { name: b, .. }) => a == b,
            (x, y) => x == y,
        };
        let terms = self
            .terms
            .iter()
            .filter(|m| m.word.iter().filter(|f| matches_kind(f)).count() == degree)
            .cloned()
            .collect();
        Expression {
            terms,
            level: self.level,
        }
    }

    /// Common order of all monomials; errors when mixed.
    pub fn homogeneous_order(&self) -> Result<i64, SymError> {
        let nf = self.normal_form()?;
        let mut orders: Vec<i64> = nf.terms.iter().map(|m| m.order()).collect();
        orders.dedup();
        match orders.as_slice() {
            [] => Ok(0),
            [o] => Ok(*o),
            _ => Err(SymError::InhomogeneousOrder(orders)),
        }
    }

    /// Ghost number when homogeneous.
    pub fn ghost_number(&self) -> Result<i64, SymError> {
        let nf = self.normal_form()?;
        let mut gs: Vec<i64> = nf.terms.iter().map(|m| m.ghost_number()).collect();
        gs.sort_unstable();
        gs.dedup();
        match gs.as_slice() {
            [] => Ok(0),
            [g] => Ok(*g),
            _ => Err(SymError::Unsupported(format!(
                "mixed ghost numbers {gs:?}"
            ))),
        }
    }

    /// A dummy id unused by any term.
    pub fn fresh_dummy(&self) -> Idx {
        let next = self
            .terms
            .iter()
            .filter_map(|m| m.max_dummy())
            .max()
            .map_or(0, |d| d + 1);
        Idx::Dummy(next)
    }

    /// Normal form without crossing total derivatives; used internally where
    /// inputs are valid by construction.
    pub(crate) fn nf(&self) -> Expression {
        self.algebraic_normal_form()
            .expect("expression valid by construction")
    }

    /// Canonical form. Integrated functionals are additionally reduced by the
    /// fixed integration-by-parts strategy.
    pub fn normal_form(&self) -> Result<Expression, SymError> {
        let alg = self.algebraic_normal_form()?;
        match self.level {
            Level::Density => Ok(alg),
            Level::Integrated => Ok(alg.ibp_reduce()),
        }
    }

    pub fn is_zero(&self) -> Result<bool, SymError> {
        Ok(self.normal_form()?.is_empty())
    }

    /// Equality of integrated functionals modulo vanishing boundary terms.
    pub fn equal_mod_total_derivative(&self, other: &Expression) -> Result<bool, SymError> {
        if self.level != Level::Integrated || other.level != Level::Integrated {
            return Err(SymError::IntegratedRequired);
        }
        self.sub(other).is_zero()
    }

    /// Replace every factor of `kind`, one at a time, by `image(factor,
    /// fresh)`: the directional derivative of the expression along the
    /// replacement. `fresh` is a dummy id from which the image may allocate
    /// new contraction labels without touching the host monomial's.
    pub fn variation<F>(&self, kind: FieldKind, image: F) -> Expression
    where
        F: Fn(&Factor, u16) -> Expression,
    {
        let mut out = Expression::zero(self.level);
        for m in &self.terms {
            let fresh = m.max_dummy().map_or(0, |d| d + 1);
            for j in 0..m.word.len() {
                if m.word[j].kind != kind {
                    continue;
                }
                let repl = image(&m.word[j], fresh);
                out.terms.extend(splice_at(m, j, &repl).terms);
            }
        }
        out
    }

    /// Replace every factor of `kind` simultaneously by `image(factor,
    /// fresh)`. The image must not itself contain `kind`.
    pub fn substitute<F>(&self, kind: FieldKind, image: &F) -> Expression
    where
        F: Fn(&Factor, u16) -> Expression,
    {
        let mut current = self.clone();
        loop {
            let mut next = Expression::zero(current.level);
            let mut changed = false;
            for m in &current.terms {
                if let Some(j) = m.word.iter().position(|f| f.kind == kind) {
                    changed = true;
                    let fresh = m.max_dummy().map_or(0, |d| d + 1);
                    let repl = image(&m.word[j], fresh);
                    assert!(
                        repl.terms
                            .iter()
                            .all(|t| t.word.iter().all(|f| f.kind != kind)),
                        "substitution image reintroduces the substituted kind"
                    );
                    next.terms.extend(splice_at(m, j, &repl).terms);
                } else {
                    next.terms.push(m.clone());
                }
            }
            current = next;
            if !changed {
                return current;
            }
        }
    }
}

/// Replace `word[j]` of `m` by the expression `repl` (a density), keeping the
/// surrounding word. No reordering happens, so no Grassmann signs arise here.
pub(crate) fn splice_at(m: &Monomial, j: usize, repl: &Expression) -> Expression {
    assert_eq!(repl.level, Level::Density);
    let mut out = Expression::zero(Level::Density);
    for r in &repl.terms {
        let mut t = m.clone();
        t.coeff = t.coeff.mul(&r.coeff);
        t.params = t.params.mul(&r.params);
        t.metrics.extend_from_slice(&r.metrics);
        t.gammas.extend_from_slice(&r.gammas);
        t.word.splice(j..=j, r.word.iter().cloned());
        out.terms.push(t);
    }
    out.level = Level::Density;
    out
}
