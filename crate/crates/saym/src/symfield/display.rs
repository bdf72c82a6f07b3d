//! Deterministic text form: one monomial per line, canonical term order when
//! printed after normalization.

use std::fmt;

use super::{Expression, Factor, FieldKind, Idx, Level, Monomial};

pub(crate) fn idx_name(i: Idx) -> String {
    match i {
        Idx::Free(n) => super::free_name(n),
        Idx::Dummy(d) => format!("i{d}"),
    }
}

impl fmt::Display for Idx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&idx_name(*self))
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.derivs.is_empty() {
            write!(f, "d{{")?;
            for (i, d) in self.derivs.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{d}")?;
            }
            write!(f, "}}")?;
        }
        match self.kind {
            FieldKind::Gauge => write!(f, "A{{{}}}", self.base.expect("gauge index")),
            FieldKind::Gamma => write!(f, "gam{{{}}}", self.base.expect("gamma index")),
            FieldKind::Ghost => write!(f, "C"),
            FieldKind::Antighost => write!(f, "Cb"),
            FieldKind::Aux => write!(f, "h"),
            FieldKind::Coupling => write!(f, "g_c"),
            FieldKind::Unit => write!(f, "one"),
            FieldKind::Generic { name, .. } => write!(f, "{name}"),
        }
    }
}

impl Monomial {
    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, level: Level) -> fmt::Result {
        write!(f, "{}", self.coeff)?;
        if !self.params.is_unit() {
            write!(f, " * {}", self.params)?;
        }
        write!(f, " * ")?;
        if level == Level::Integrated {
            write!(f, "int( ")?;
        }
        let mut wrote = false;
        for &(a, b) in &self.metrics {
            if wrote {
                write!(f, " ")?;
            }
            write!(f, "g{{{a},{b}}}")?;
            wrote = true;
        }
        for &g in &self.gammas {
            if wrote {
                write!(f, " ")?;
            }
            write!(f, "gam{{{g}}}")?;
            wrote = true;
        }
        if self.traced {
            if wrote {
                write!(f, " ")?;
            }
            write!(f, "tr(")?;
            for w in &self.word {
                write!(f, " {w}")?;
            }
            write!(f, " )")?;
            wrote = true;
        } else {
            for w in &self.word {
                if wrote {
                    write!(f, " ")?;
                }
                write!(f, "{w}")?;
                wrote = true;
            }
        }
        if !wrote {
            write!(f, "1")?;
        }
        if level == Level::Integrated {
            write!(f, " )")?;
        }
        Ok(())
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, Level::Density)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, m) in self.terms.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            m.fmt_at(f, self.level)?;
        }
        Ok(())
    }
}
