//! Exact integer tables: Stirling numbers of both kinds and the commutator
//! coefficients `C±(n, k) = (-1)^(n+k) s1(n+1, k+1) ± s1(n, k)`.
//!
//! With `N = a†a` these give the diagonal forms
//!
//! ```text
//! a^n a†^n = Σ_k |s1(n+1, k+1)| N^k
//! a†^n a^n = Σ_k  s1(n, k)      N^k
//! [X+, X-] = σz Σ_k C+(n, k) N^k + Σ_k C-(n, k) N^k,   X± = σ- a†^n ± σ+ a^n
//! ```
//!
//! Entries are arbitrary precision, so `n_max` is only a table size.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub const DEFAULT_N_MAX: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

/// Immutable coefficient table for orders `1..=n_max`.
#[derive(Clone, Debug)]
pub struct CoeffTable {
    n_max: usize,
    // rows 0..=n_max+1
    s1: Vec<Vec<BigInt>>,
    s2: Vec<Vec<BigInt>>,
    // rows 0..=n_max
    cplus: Vec<Vec<BigInt>>,
    cminus: Vec<Vec<BigInt>>,
}

fn triangle(rows: usize, step: impl Fn(&[BigInt], usize, usize) -> BigInt) -> Vec<Vec<BigInt>> {
    let mut out: Vec<Vec<BigInt>> = Vec::with_capacity(rows);
    out.push(vec![BigInt::one()]);
    for n in 0..rows.saturating_sub(1) {
        let prev = &out[n];
        let row = (0..=n + 1).map(|k| step(prev, n, k)).collect();
        out.push(row);
    }
    out
}

fn at(row: &[BigInt], k: isize) -> BigInt {
    if k < 0 {
        BigInt::zero()
    } else {
        row.get(k as usize).cloned().unwrap_or_else(BigInt::zero)
    }
}

impl CoeffTable {
    pub fn new(n_max: usize) -> Self {
        let n_max = n_max.max(1);
        let rows = n_max + 2;
        // s1(n+1, k) = s1(n, k-1) - n s1(n, k)
        let s1 = triangle(rows, |prev, n, k| {
            at(prev, k as isize - 1) - BigInt::from(n) * at(prev, k as isize)
        });
        // s2(n+1, k) = k s2(n, k) + s2(n, k-1)
        let s2 = triangle(rows, |prev, _, k| {
            BigInt::from(k) * at(prev, k as isize) + at(prev, k as isize - 1)
        });
        let coeff = |sign: Sign| -> Vec<Vec<BigInt>> {
            (0..=n_max)
                .map(|n| {
                    (0..=n)
                        .map(|k| {
                            let lead = &s1[n + 1][k + 1];
                            let lead = if (n + k) % 2 == 0 { lead.clone() } else { -lead };
                            match sign {
                                Sign::Plus => lead + &s1[n][k],
                                Sign::Minus => lead - &s1[n][k],
                            }
                        })
                        .collect()
                })
                .collect()
        };
        let cplus = coeff(Sign::Plus);
        let cminus = coeff(Sign::Minus);
        CoeffTable { n_max, s1, s2, cplus, cminus }
    }

    /// Shared table with `n_max = 12`.
    pub fn shared() -> &'static CoeffTable {
        static TABLE: OnceLock<CoeffTable> = OnceLock::new();
        TABLE.get_or_init(|| CoeffTable::new(DEFAULT_N_MAX))
    }

    /// The shared table if it covers `n`, otherwise a freshly built one.
    pub fn covering(n: usize) -> std::borrow::Cow<'static, CoeffTable> {
        let shared = Self::shared();
        if n <= shared.n_max {
            std::borrow::Cow::Borrowed(shared)
        } else {
            std::borrow::Cow::Owned(CoeffTable::new(n))
        }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    fn check(&self, n: usize, k: usize, n_limit: usize, what: &str) -> Result<()> {
        if k > n || n > n_limit {
            return Err(Error::Domain(format!(
                "{what}({n}, {k}) requires k <= n <= {n_limit}"
            )));
        }
        Ok(())
    }

    pub fn stirling1_signed(&self, n: usize, k: usize) -> Result<BigInt> {
        self.check(n, k, self.n_max + 1, "s1")?;
        Ok(self.s1[n][k].clone())
    }

    pub fn stirling2(&self, n: usize, k: usize) -> Result<BigInt> {
        self.check(n, k, self.n_max + 1, "s2")?;
        Ok(self.s2[n][k].clone())
    }

    pub fn c_coeff(&self, n: usize, k: usize, sign: Sign) -> Result<BigInt> {
        if n == 0 {
            return Err(Error::Domain("C(n, k) requires n >= 1".into()));
        }
        self.check(n, k, self.n_max, "C")?;
        Ok(match sign {
            Sign::Plus => self.cplus[n][k].clone(),
            Sign::Minus => self.cminus[n][k].clone(),
        })
    }

    fn check_order(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.n_max {
            return Err(Error::Domain(format!("order {n} outside 1..={}", self.n_max)));
        }
        Ok(())
    }

    /// Coefficients `c_k`, `k = 0..=n`, with `a^n a†^n = Σ c_k N^k`.
    pub fn normal_order_aadag(&self, n: usize) -> Result<Vec<BigInt>> {
        self.check_order(n)?;
        Ok((0..=n).map(|k| self.s1[n + 1][k + 1].abs()).collect())
    }

    /// Coefficients `c_k`, `k = 0..=n`, with `a†^n a^n = Σ c_k N^k`.
    pub fn normal_order_adaga(&self, n: usize) -> Result<Vec<BigInt>> {
        self.check_order(n)?;
        Ok(self.s1[n][..=n].to_vec())
    }

    /// `(C+ over k = 0..=n, C- over k = 0..n)`; the omitted `C-(n, n)` is zero.
    pub fn commutator_poly(&self, n: usize) -> Result<(Vec<BigInt>, Vec<BigInt>)> {
        self.check_order(n)?;
        Ok((self.cplus[n].clone(), self.cminus[n][..n].to_vec()))
    }

    /// `C+(n, k)` for `k = 0..=n` as floats.
    pub fn cplus_f64(&self, n: usize) -> Result<Vec<f64>> {
        self.check_order(n)?;
        Ok(to_f64(&self.cplus[n]))
    }

    /// `C-(n, k)` for `k = 0..=n` as floats (last entry is zero).
    pub fn cminus_f64(&self, n: usize) -> Result<Vec<f64>> {
        self.check_order(n)?;
        Ok(to_f64(&self.cminus[n]))
    }

    /// `s2(k, l)` for `l = 0..=k` as floats.
    pub fn stirling2_row_f64(&self, k: usize) -> Result<Vec<f64>> {
        self.check(k, 0, self.n_max + 1, "s2")?;
        Ok(to_f64(&self.s2[k]))
    }
}

pub fn to_f64(v: &[BigInt]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()
}

/// `Σ_{k >= from} c[k] x^k` evaluated by Horner's rule.
pub fn poly_eval_from(coeffs: &[f64], from: usize, x: f64) -> f64 {
    let mut acc = 0.0;
    for (k, &c) in coeffs.iter().enumerate().rev() {
        acc = acc * x + if k >= from { c } else { 0.0 };
    }
    acc
}

pub fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    poly_eval_from(coeffs, 0, x)
}
