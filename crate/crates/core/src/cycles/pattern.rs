use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{LcrError, Result};
use crate::graph::EdgeCode;

/// Edge types along the closed tour `i_1 -> i_2 -> ... -> i_m -> i_1`.
///
/// Code `k` (0-based) is the type of the ordered pair `(i_{k+1}, i_{k+2})`,
/// wrapping at the end.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CyclePattern {
    codes: Vec<EdgeCode>,
}

impl CyclePattern {
    pub fn new(codes: Vec<EdgeCode>) -> Result<Self> {
        if codes.len() < 3 {
            return Err(LcrError::domain(format!(
                "a cycle pattern needs at least 3 edges, got {}",
                codes.len()
            )));
        }
        Ok(CyclePattern { codes })
    }

    pub fn codes(&self) -> &[EdgeCode] {
        &self.codes
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    /// Pattern number `index` in base 4 over `00, 10, 01, 11`, first code
    /// most significant.
    pub(crate) fn from_index(m: usize, mut index: usize) -> Self {
        let mut codes = vec![EdgeCode::Null; m];
        for slot in codes.iter_mut().rev() {
            *slot = EdgeCode::ALL[index % 4];
            index /= 4;
        }
        CyclePattern { codes }
    }

    /// Start the tour at position `r`.
    pub fn rotated(&self, r: usize) -> Self {
        let m = self.len();
        CyclePattern {
            codes: (0..m).map(|k| self.codes[(k + r) % m]).collect(),
        }
    }

    /// Walk the tour backwards; every edge is seen from the other end.
    pub fn reversed(&self) -> Self {
        CyclePattern {
            codes: self.codes.iter().rev().map(|c| c.transpose()).collect(),
        }
    }

    pub fn monomial(&self) -> CycleMonomial {
        let m = self.len();
        let mut mono = CycleMonomial {
            mu_exp: vec![0; m],
            nu_exp: vec![0; m],
            rho_power: 0,
        };
        for (k, &code) in self.codes.iter().enumerate() {
            let (p, q) = (k, (k + 1) % m);
            match code {
                EdgeCode::Null => {}
                EdgeCode::Forward => {
                    mono.mu_exp[p] += 1;
                    mono.nu_exp[q] += 1;
                }
                EdgeCode::Backward => {
                    mono.mu_exp[q] += 1;
                    mono.nu_exp[p] += 1;
                }
                EdgeCode::Mutual => {
                    mono.mu_exp[p] += 1;
                    mono.nu_exp[p] += 1;
                    mono.mu_exp[q] += 1;
                    mono.nu_exp[q] += 1;
                    mono.rho_power += 1;
                }
            }
        }
        mono
    }
}

impl fmt::Display for CyclePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, c) in self.codes.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            f.write_str(c.as_str())?;
        }
        Ok(())
    }
}

impl FromStr for CyclePattern {
    type Err = LcrError;

    fn from_str(s: &str) -> Result<Self> {
        let codes = s
            .split(',')
            .map(str::parse)
            .collect::<Result<Vec<EdgeCode>>>()?;
        CyclePattern::new(codes)
    }
}

impl TryFrom<String> for CyclePattern {
    type Error = LcrError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<CyclePattern> for String {
    fn from(p: CyclePattern) -> String {
        p.to_string()
    }
}

/// Product of the unnormalized weights along a tour, as exponents.
///
/// For nodes `v_1..v_m` the product equals
/// `e^{ρ·rho_power} · Π_k μ_{v_k}^{mu_exp[k]} ν_{v_k}^{nu_exp[k]}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CycleMonomial {
    pub mu_exp: Vec<u32>,
    pub nu_exp: Vec<u32>,
    pub rho_power: u32,
}

impl CycleMonomial {
    pub fn evaluate(&self, mu: &[f64], nu: &[f64], rho: f64, nodes: &[usize]) -> f64 {
        let mut v = (rho * self.rho_power as f64).exp();
        for (k, &node) in nodes.iter().enumerate() {
            v *= mu[node].powi(self.mu_exp[k] as i32) * nu[node].powi(self.nu_exp[k] as i32);
        }
        v
    }
}

/// Two patterns whose weight products differ only by `e^{c0·ρ}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CancellationPair {
    pub a: CyclePattern,
    pub b: CyclePattern,
    pub c0: u32,
}

impl CancellationPair {
    pub fn new(a: CyclePattern, b: CyclePattern) -> Result<Self> {
        let c0 = is_cancellation_pair(&a, &b)
            .ok_or_else(|| LcrError::domain(format!("({a}) / ({b}) is not a cancellation pair")))?;
        Ok(CancellationPair { a, b, c0 })
    }

    /// A length-4 pair by number: 1 is the default, 2 has `c0 = 2`, 3 the
    /// remaining class.
    pub fn quadrilateral(id: usize) -> Result<Self> {
        let (a, b) = match id {
            1 => ("11,00,01,00", "10,10,00,10"),
            2 => ("11,00,11,00", "10,10,10,10"),
            3 => ("11,01,11,00", "10,11,10,10"),
            _ => return Err(LcrError::domain(format!("no quadrilateral pair {id}; use 1, 2 or 3"))),
        };
        Self::new(a.parse()?, b.parse()?)
    }

    pub fn default_pair() -> Self {
        Self::quadrilateral(1).expect("built-in pair is valid")
    }

    pub fn quadrilaterals() -> [Self; 3] {
        [1, 2, 3].map(|id| Self::quadrilateral(id).expect("built-in pair is valid"))
    }
}

/// `Some(c0)` when the two weight products agree up to `e^{c0·ρ}`, `c0 > 0`.
pub fn is_cancellation_pair(a: &CyclePattern, b: &CyclePattern) -> Option<u32> {
    if a.len() != b.len() {
        return None;
    }
    let (ma, mb) = (a.monomial(), b.monomial());
    (ma.mu_exp == mb.mu_exp && ma.nu_exp == mb.nu_exp && ma.rho_power > mb.rho_power)
        .then(|| ma.rho_power - mb.rho_power)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pat(s: &str) -> CyclePattern {
        s.parse().unwrap()
    }

    #[test]
    fn null_pattern_has_trivial_monomial() {
        let m = pat("00,00,00,00").monomial();
        assert_eq!(m.mu_exp, vec![0; 4]);
        assert_eq!(m.nu_exp, vec![0; 4]);
        assert_eq!(m.rho_power, 0);
    }

    #[test]
    fn default_numerator_expansion() {
        // mutual edge on positions 1-2, then 3 <- 4 one-way
        let m = pat("11,00,01,00").monomial();
        assert_eq!(m.mu_exp, vec![1, 1, 0, 1]);
        assert_eq!(m.nu_exp, vec![1, 1, 1, 0]);
        assert_eq!(m.rho_power, 1);
    }

    #[test]
    fn default_pair_has_unit_offset() {
        assert_eq!(is_cancellation_pair(&pat("11,00,01,00"), &pat("10,10,00,10")), Some(1));
        assert_eq!(is_cancellation_pair(&pat("10,10,00,10"), &pat("11,00,01,00")), None);
        let p = pat("11,00,01,00");
        assert_eq!(is_cancellation_pair(&p, &p), None);
    }

    #[test]
    fn built_in_offsets() {
        let c: Vec<u32> = CancellationPair::quadrilaterals().iter().map(|p| p.c0).collect();
        assert_eq!(c, vec![1, 2, 1]);
        assert!(CancellationPair::quadrilateral(4).is_err());
    }

    #[test]
    fn reversal_is_an_involution() {
        let p = pat("11,10,01,00,10");
        assert_eq!(p.reversed().reversed(), p);
        assert_eq!(p.rotated(2).rotated(3), p);
    }

    #[test]
    fn parse_errors() {
        assert!("11,00".parse::<CyclePattern>().is_err());
        assert!("11,00,0x".parse::<CyclePattern>().is_err());
        assert_eq!(pat(" 11, 00,01").to_string(), "11,00,01");
    }
}
