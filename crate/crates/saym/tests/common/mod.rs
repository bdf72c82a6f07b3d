//! Shared helpers for the integration suites: a seeded generator of random
//! symbolic expressions over the field algebra.
//!
//! Every index the generator hands out comes from a strictly increasing
//! free-label counter, so no accidental contractions (and no dummy-index
//! bookkeeping) can arise.  The resulting expressions are safe to normalize,
//! derive, multiply, trace, and feed to the BRST operator.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use saym::coeff::Scalar;
use saym::symfield::{free, Expression};

/// One primitive factor: a field symbol with up to two partial derivatives,
/// all indices drawn from the shared counter.
fn random_factor(rng: &mut ChaCha8Rng, next_free: &mut u16) -> Expression {
    let take = |c: &mut u16| {
        let i = free(*c);
        *c += 1;
        i
    };
    let base = match rng.gen_range(0..6) {
        0 => Expression::gauge(take(next_free)),
        1 => Expression::ghost(),
        2 => Expression::antighost(),
        3 => Expression::aux(),
        4 => Expression::generic('x'),
        _ => Expression::generic_odd('w'),
    };
    let derivs = rng.gen_range(0..=2);
    let mut e = base;
    for _ in 0..derivs {
        e = e.deriv(take(next_free));
    }
    e
}

/// A single product of `1..=max_len` factors with a random nonzero rational
/// (possibly imaginary) coefficient.
pub fn random_product(rng: &mut ChaCha8Rng, max_len: usize, next_free: &mut u16) -> Expression {
    let len = rng.gen_range(1..=max_len);
    let mut e = random_factor(rng, next_free);
    for _ in 1..len {
        e = e.mul(&random_factor(rng, next_free));
    }
    let s = random_scale(rng);
    e.scaled(&s)
}

/// A random nonzero rational or imaginary-rational scale factor.
fn random_scale(rng: &mut ChaCha8Rng) -> Scalar {
    let mut num = rng.gen_range(-4i64..=4);
    if num == 0 {
        num = 1;
    }
    let den = rng.gen_range(1i64..=4);
    if rng.gen_bool(0.5) {
        Scalar::ratio(num, den)
    } else {
        Scalar::imag_ratio(num, den)
    }
}

/// A product whose factors have pairwise distinct field kinds (generic names
/// count as distinct kinds), in random order with random derivative dressing.
///
/// On this fragment the traced cyclic pivot is rigid (the unique minimal
/// kind always rotates to the front), so the deterministic
/// integration-by-parts rewrite cancels total derivatives completely.  With
/// repeated kinds the trace rotation can pick inconsistent pivots across
/// Leibniz terms and the fixed strategy deliberately stops short of full
/// completion.
pub fn random_distinct_product(
    rng: &mut ChaCha8Rng,
    max_len: usize,
    next_free: &mut u16,
) -> Expression {
    let take = |c: &mut u16| {
        let i = free(*c);
        *c += 1;
        i
    };
    let mut picks: Vec<u8> = (0..8).collect();
    picks.shuffle(rng);
    let len = rng.gen_range(1..=max_len.min(8));
    let mut e: Option<Expression> = None;
    for &p in picks.iter().take(len) {
        let base = match p {
            0 => Expression::gauge(take(next_free)),
            1 => Expression::ghost(),
            2 => Expression::antighost(),
            3 => Expression::aux(),
            4 => Expression::generic('x'),
            5 => Expression::generic('y'),
            6 => Expression::generic_odd('w'),
            _ => Expression::generic_odd('u'),
        };
        let mut f = base;
        let derivs = rng.gen_range(0..=2);
        for _ in 0..derivs {
            f = f.deriv(take(next_free));
        }
        e = Some(match e {
            None => f,
            Some(prev) => prev.mul(&f),
        });
    }
    e.unwrap().scaled(&random_scale(rng))
}

/// A sum of `1..=max_terms` random products sharing one label counter, so all
/// indices across the whole expression are distinct.
pub fn random_density(rng: &mut ChaCha8Rng, max_terms: usize, max_len: usize) -> Expression {
    let mut next_free = 100u16;
    let terms = rng.gen_range(1..=max_terms);
    let mut e = random_product(rng, max_len, &mut next_free);
    for _ in 1..terms {
        e = e.add(&random_product(rng, max_len, &mut next_free));
    }
    e
}

/// A sum of `1..=max_terms` distinct-kind products sharing one label counter.
pub fn random_distinct_density(
    rng: &mut ChaCha8Rng,
    max_terms: usize,
    max_len: usize,
) -> Expression {
    let mut next_free = 100u16;
    let terms = rng.gen_range(1..=max_terms);
    let mut e = random_distinct_product(rng, max_len, &mut next_free);
    for _ in 1..terms {
        e = e.add(&random_distinct_product(rng, max_len, &mut next_free));
    }
    e
}
