//! Brute-force reference implementations written straight from the
//! definitions, sharing no code with the library's evaluation paths.

#![allow(dead_code)]

use covergame::{CoverageGame, Rational};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type Q = Rational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

fn counts(game: &CoverageGame, profile: &[usize]) -> Vec<usize> {
    let mut c = vec![0; game.n_resources()];
    for (i, &a) in profile.iter().enumerate() {
        for &r in &game.action_sets()[i][a] {
            c[r] += 1;
        }
    }
    c
}

fn share(table: &[Q], k: usize) -> Q {
    if k == 0 {
        Q::zero()
    } else {
        table[k - 1].clone()
    }
}

pub fn welfare(game: &CoverageGame, profile: &[usize], v: &[Q]) -> Q {
    let c = counts(game, profile);
    let mut w = Q::zero();
    for r in 0..v.len() {
        if c[r] > 0 {
            w += &v[r];
        }
    }
    w
}

pub fn utility(game: &CoverageGame, profile: &[usize], v: &[Q], table: &[Q], agent: usize) -> Q {
    let c = counts(game, profile);
    let mut u = Q::zero();
    for &r in &game.action_sets()[agent][profile[agent]] {
        u += &v[r] * share(table, c[r]);
    }
    u
}

pub fn potential(game: &CoverageGame, profile: &[usize], v: &[Q], table: &[Q]) -> Q {
    let c = counts(game, profile);
    let mut phi = Q::zero();
    for r in 0..v.len() {
        for j in 1..=c[r] {
            phi += &v[r] * share(table, j);
        }
    }
    phi
}

pub fn profiles(game: &CoverageGame) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for i in 0..game.n_agents() {
        let mut next = Vec::new();
        for p in &out {
            for a in 0..game.action_sets()[i].len() {
                let mut p = p.clone();
                p.push(a);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

pub fn is_nash(game: &CoverageGame, profile: &[usize], v: &[Q], table: &[Q]) -> bool {
    (0..game.n_agents()).all(|i| {
        let here = utility(game, profile, v, table, i);
        (0..game.action_sets()[i].len()).all(|a| {
            let mut dev = profile.to_vec();
            dev[i] = a;
            utility(game, &dev, v, table, i) <= here
        })
    })
}

pub fn nash(game: &CoverageGame, v: &[Q], table: &[Q]) -> Vec<Vec<usize>> {
    profiles(game).into_iter().filter(|p| is_nash(game, p, v, table)).collect()
}

pub fn w_star(game: &CoverageGame, v: &[Q]) -> Q {
    profiles(game).iter().map(|p| welfare(game, p, v)).max().expect("at least one profile")
}

fn factorial(k: usize) -> Q {
    (1..=k).fold(Q::one(), |acc, i| acc * q(i as i64, 1))
}

/// The price-of-anarchy maximizing share table for `n >= 2` agents, from its
/// defining formula.
pub fn gairing_table(n: usize) -> Vec<Q> {
    let c = Q::one() / (q(n as i64 - 1, 1) * factorial(n - 1));
    let tail = |from: usize| (from..n).fold(Q::zero(), |acc, i| acc + Q::one() / factorial(i));
    let den = &c + tail(1);
    (1..=n).map(|x| factorial(x - 1) * (&c + tail(x)) / &den).collect()
}

/// Rational enclosure `lo < e < hi` from the first terms of the exponential
/// series; the tail after `k` terms is below `1 / (k! k)`.
pub fn e_enclosure(k: usize) -> (Q, Q) {
    let lo = (0..=k).fold(Q::zero(), |acc, i| acc + Q::one() / factorial(i));
    let hi = &lo + Q::one() / (factorial(k) * q(k as i64, 1));
    (lo, hi)
}

pub fn random_rational(rng: &mut ChaCha8Rng, max_num: i64, max_den: i64) -> Q {
    let d = rng.random_range(1..=max_den);
    q(rng.random_range(0..=max_num * d), d)
}

pub fn random_values(rng: &mut ChaCha8Rng, n: usize) -> Vec<Q> {
    (0..n).map(|_| random_rational(rng, 2, 12)).collect()
}
