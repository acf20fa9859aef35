use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which `ζ` is used in a given slot: `1` picks `γ`, `2` the determinant-built one.
pub type ZetaKind = u8;

fn parse_digits<const K: usize>(s: &str) -> Result<[ZetaKind; K]> {
    let t = s.trim();
    if t.len() != K {
        return Err(Error::InvalidSelector(s.to_string()));
    }
    let mut out = [1; K];
    for (slot, ch) in out.iter_mut().zip(t.bytes()) {
        *slot = match ch {
            b'1' => 1,
            b'2' => 2,
            _ => return Err(Error::InvalidSelector(s.to_string())),
        };
    }
    Ok(out)
}

fn write_digits(f: &mut fmt::Formatter<'_>, d: &[ZetaKind]) -> fmt::Result {
    d.iter().try_for_each(|k| write!(f, "{k}"))
}

fn random_digits<const K: usize, R: Rng + ?Sized>(rng: &mut R) -> [ZetaKind; K] {
    let mut out = [1; K];
    for d in &mut out {
        *d = rng.gen_range(1..=2);
    }
    out
}

/// `r = (r1, …, r5) ∈ {1,2}^5`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TorsionSelector(pub [ZetaKind; 5]);

impl TorsionSelector {
    pub const ONES: TorsionSelector = TorsionSelector([1; 5]);
    pub const TWOS: TorsionSelector = TorsionSelector([2; 5]);

    /// All 32 selectors in lexicographic order.
    pub fn all() -> impl Iterator<Item = TorsionSelector> {
        (0u8..32).map(|bits| {
            let mut r = [1; 5];
            for (k, d) in r.iter_mut().enumerate() {
                *d = 1 + ((bits >> (4 - k)) & 1);
            }
            TorsionSelector(r)
        })
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        TorsionSelector(random_digits(rng))
    }
}

/// `s = (s1, s2, s3) ∈ {1,2}^3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SigmaSelector(pub [ZetaKind; 3]);

impl SigmaSelector {
    pub fn all() -> impl Iterator<Item = SigmaSelector> {
        (0u8..8).map(|bits| {
            SigmaSelector([1 + ((bits >> 2) & 1), 1 + ((bits >> 1) & 1), 1 + (bits & 1)])
        })
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        SigmaSelector(random_digits(rng))
    }
}

/// `ρ = (s¹, s², r¹, …, r⁸)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct RhoSelector {
    pub s: [SigmaSelector; 2],
    pub r: [TorsionSelector; 8],
}

impl RhoSelector {
    pub const ONES: RhoSelector = RhoSelector {
        s: [SigmaSelector([1; 3]); 2],
        r: [TorsionSelector::ONES; 8],
    };
    pub const TWOS: RhoSelector = RhoSelector {
        s: [SigmaSelector([2; 3]); 2],
        r: [TorsionSelector::TWOS; 8],
    };

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let s = [SigmaSelector::random(rng), SigmaSelector::random(rng)];
        let mut r = [TorsionSelector::ONES; 8];
        for slot in &mut r {
            *slot = TorsionSelector::random(rng);
        }
        RhoSelector { s, r }
    }

    /// `count` seeded draws followed by the all-ones and all-twos corners.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, count: usize) -> Vec<RhoSelector> {
        let mut out: Vec<_> = (0..count).map(|_| Self::random(rng)).collect();
        out.push(Self::ONES);
        out.push(Self::TWOS);
        out
    }
}

macro_rules! digit_selector_impls {
    ($ty:ident, $k:expr) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                parse_digits::<$k>(s).map($ty)
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write_digits(f, &self.0)
            }
        }

        impl TryFrom<String> for $ty {
            type Error = Error;
            fn try_from(s: String) -> Result<Self> {
                s.parse()
            }
        }

        impl From<$ty> for String {
            fn from(v: $ty) -> String {
                v.to_string()
            }
        }
    };
}

digit_selector_impls!(TorsionSelector, 5);
digit_selector_impls!(SigmaSelector, 3);

/// `"s1,s2,r1,r2,r3,r4,r5,r6,r7,r8"`, e.g. `"121,212,12121,…"`.
impl FromStr for RhoSelector {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(',').collect();
        if parts.len() != 10 {
            return Err(Error::InvalidSelector(text.to_string()));
        }
        let bad = |_| Error::InvalidSelector(text.to_string());
        let s = [
            parts[0].parse().map_err(bad)?,
            parts[1].parse().map_err(bad)?,
        ];
        let mut r = [TorsionSelector::ONES; 8];
        for (slot, part) in r.iter_mut().zip(&parts[2..]) {
            *slot = part.parse().map_err(bad)?;
        }
        Ok(RhoSelector { s, r })
    }
}

impl fmt::Display for RhoSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.s[0], self.s[1])?;
        for r in &self.r {
            write!(f, ",{r}")?;
        }
        Ok(())
    }
}

impl TryFrom<String> for RhoSelector {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<RhoSelector> for String {
    fn from(v: RhoSelector) -> String {
        v.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn torsion_selector_parsing() {
        assert_eq!(
            "12121".parse::<TorsionSelector>().unwrap(),
            TorsionSelector([1, 2, 1, 2, 1])
        );
        for bad in ["13121", "1212", "121212", "", "1212a"] {
            assert!(bad.parse::<TorsionSelector>().is_err(), "{bad}");
        }
    }

    #[test]
    fn all_torsion_selectors_are_distinct() {
        let all: Vec<_> = TorsionSelector::all().collect();
        assert_eq!(all.len(), 32);
        assert_eq!(all[0], TorsionSelector::ONES);
        assert_eq!(all[31], TorsionSelector::TWOS);
        let mut sorted = all.clone();
        sorted.dedup();
        assert_eq!(sorted.len(), 32);
        assert_eq!(SigmaSelector::all().count(), 8);
    }

    #[test]
    fn rho_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let rho = RhoSelector::random(&mut rng);
            assert_eq!(rho.to_string().parse::<RhoSelector>().unwrap(), rho);
        }
        assert!("121,212,11111".parse::<RhoSelector>().is_err());
    }

    #[test]
    fn sample_is_seeded_and_ends_with_corners() {
        let a = RhoSelector::sample(&mut ChaCha8Rng::seed_from_u64(7), 20);
        let b = RhoSelector::sample(&mut ChaCha8Rng::seed_from_u64(7), 20);
        assert_eq!(a, b);
        assert_eq!(a.len(), 22);
        assert_eq!(a[20], RhoSelector::ONES);
        assert_eq!(a[21], RhoSelector::TWOS);
    }

    #[test]
    fn serde_uses_string_form() {
        let r = TorsionSelector([2, 1, 1, 2, 2]);
        assert_eq!(serde_json::to_string(&r).unwrap(), "\"21122\"");
    }
}
