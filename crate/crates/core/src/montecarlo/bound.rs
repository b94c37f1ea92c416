//! Exact expectations and the union bound, in big rationals.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::adversary::binomial;
use crate::error::{Error, Result};
use crate::instances::DifferenceSet;
use crate::poly::Polynomial;

/// Mean of `count_instances` over a uniform `r`-subset of `[n]`.
///
/// Each of the `e([n],[n])` edges survives when both endpoints are drawn,
/// which happens with probability `r(r-1) / (n(n-1))`.
pub fn expected_instances(poly: &Polynomial, n: u64, r: u64) -> Result<BigRational> {
    expected_instances_with(&DifferenceSet::new(poly, n)?, r)
}

pub fn expected_instances_with(ds: &DifferenceSet, r: u64) -> Result<BigRational> {
    let n = ds.n();
    if r > n {
        return Err(Error::InvalidArgument(format!("r = {r} exceeds n = {n}")));
    }
    if r < 2 {
        return Ok(BigRational::zero());
    }
    let edges = BigInt::from(ds.edge_count_total()?);
    let numer = edges * BigInt::from(r) * BigInt::from(r - 1);
    let denom = BigInt::from(n) * BigInt::from(n - 1);
    Ok(BigRational::new(numer, denom))
}

/// `alpha^s * C(n, s) * C(n - s, r - s) / C(n, r)`.
pub fn union_bound_value(alpha: &BigRational, n: u64, s: u64, r: u64) -> Result<BigRational> {
    if !alpha.is_positive() || alpha > &BigRational::one() {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} not in (0, 1]")));
    }
    if s > r {
        return Err(Error::InvalidArgument(format!("s = {s} exceeds r = {r}")));
    }
    if r > n {
        return Err(Error::InvalidArgument(format!("r = {r} exceeds n = {n}")));
    }
    let s_exp = u32::try_from(s)
        .map_err(|_| Error::InvalidArgument(format!("s = {s} too large")))?;
    let power = num_traits::pow(alpha.clone(), s_exp as usize);
    let numer = BigInt::from(binomial(n, s)) * BigInt::from(binomial(n - s, r - s));
    let denom = BigInt::from(binomial(n, r));
    Ok(power * BigRational::new(numer, denom))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ratio(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    #[test]
    fn expected_examples() {
        let sq = Polynomial::monomial(2).unwrap();
        assert_eq!(expected_instances(&sq, 10, 4).unwrap(), ratio(32, 15));
        assert_eq!(expected_instances(&sq, 10, 1).unwrap(), ratio(0, 1));
        assert_eq!(expected_instances(&sq, 10, 10).unwrap(), ratio(16, 1));
        assert!(expected_instances(&sq, 10, 11).is_err());
    }

    #[test]
    fn union_bound_examples() {
        for n in 1..12u64 {
            for s in 0..=n {
                assert_eq!(union_bound_value(&ratio(1, 1), n, s, s).unwrap(), ratio(1, 1));
            }
        }
        assert_eq!(union_bound_value(&ratio(1, 2), 4, 2, 2).unwrap(), ratio(1, 4));
        assert_eq!(union_bound_value(&ratio(1, 1), 5, 1, 1).unwrap(), ratio(1, 1));
        assert_eq!(union_bound_value(&ratio(2, 3), 9, 3, 3).unwrap(), ratio(8, 27));
        assert!(union_bound_value(&ratio(1, 1), 5, 3, 2).is_err());
        assert!(union_bound_value(&ratio(0, 1), 5, 1, 2).is_err());
        assert!(union_bound_value(&ratio(3, 2), 5, 1, 2).is_err());
    }

    #[test]
    fn union_bound_monotone_in_alpha() {
        let mut prev = BigRational::zero();
        for a in 1..=10 {
            let v = union_bound_value(&ratio(a, 10), 40, 5, 12).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }
}
