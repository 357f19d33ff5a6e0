//! Vandermonde (Reed–Solomon style) combinations: any `g` evaluations of the
//! degree-`g−1` polynomial whose coefficients are the `g` source symbols
//! determine the symbols.

use crate::error::MdsError;
use crate::field::PrimeField;

/// `Σ_m x_m · point^m`
pub fn combo_value(field: &PrimeField, symbols: &[u32], point: u32) -> u32 {
    symbols
        .iter()
        .rev()
        .fold(0, |acc, &x| field.add(field.mul(acc, point), x))
}

/// `count` combinations at points `0, 1, …, count−1`.
pub fn mds_combine(field: &PrimeField, symbols: &[u32], count: usize) -> Result<Vec<(u32, u32)>, MdsError> {
    if count > field.modulus() as usize {
        return Err(MdsError::FieldTooSmall {
            count,
            modulus: field.modulus(),
        });
    }
    Ok((0..count as u32)
        .map(|pt| (pt, combo_value(field, symbols, pt)))
        .collect())
}

/// Recovers `g` symbols from any `g` received `(point, value)` pairs with
/// distinct points. Extra pairs beyond the first `g` are ignored.
pub fn mds_recover(field: &PrimeField, received: &[(u32, u32)], g: usize) -> Result<Vec<u32>, MdsError> {
    if received.len() < g {
        return Err(MdsError::Insufficient {
            needed: g,
            received: received.len(),
        });
    }
    let pts: Vec<u32> = received[..g].iter().map(|&(a, _)| a % field.modulus()).collect();
    let mut coef: Vec<u32> = received[..g].iter().map(|&(_, v)| v).collect();
    // Newton divided differences
    for j in 1..g {
        for i in (j..g).rev() {
            let den = field.sub(pts[i], pts[i - j]);
            let inv = field.inv(den).ok_or(MdsError::Singular(pts[i]))?;
            coef[i] = field.mul(field.sub(coef[i], coef[i - 1]), inv);
        }
    }
    // Newton form to monomial coefficients
    let mut poly = vec![0u32; g];
    if g > 0 {
        poly[0] = coef[g - 1];
    }
    for i in (0..g.saturating_sub(1)).rev() {
        // poly ← poly · (z − pts[i]) + coef[i]
        for m in (1..g).rev() {
            poly[m] = field.sub(poly[m - 1], field.mul(poly[m], pts[i]));
        }
        poly[0] = field.add(field.neg(field.mul(poly[0], pts[i])), coef[i]);
    }
    Ok(poly)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_and_single() {
        let f = PrimeField::default();
        assert_eq!(mds_recover(&f, &[], 0).unwrap(), Vec::<u32>::new());
        let combos = mds_combine(&f, &[1234], 1).unwrap();
        assert_eq!(mds_recover(&f, &combos, 1).unwrap(), vec![1234]);
        // a lone symbol sent at a nonzero point is recovered the same way
        assert_eq!(mds_recover(&f, &[(9, combo_value(&f, &[77], 9))], 1).unwrap(), vec![77]);
    }

    #[test]
    fn every_three_of_five() {
        let f = PrimeField::default();
        let symbols = [11, 65_000, 3];
        let combos = mds_combine(&f, &symbols, 5).unwrap();
        for a in 0..5 {
            for b in a + 1..5 {
                for c in b + 1..5 {
                    let pick = [combos[a], combos[b], combos[c]];
                    assert_eq!(mds_recover(&f, &pick, 3).unwrap(), symbols);
                }
            }
        }
    }

    #[test]
    fn errors() {
        let f = PrimeField::new(7).unwrap();
        assert!(matches!(mds_combine(&f, &[1], 8), Err(MdsError::FieldTooSmall { .. })));
        assert!(matches!(
            mds_recover(&f, &[(1, 2)], 2),
            Err(MdsError::Insufficient { needed: 2, received: 1 })
        ));
        assert!(matches!(mds_recover(&f, &[(1, 2), (1, 3)], 2), Err(MdsError::Singular(_))));
    }

    proptest! {
        #[test]
        fn recovers_from_random_subsets(
            symbols in prop::collection::vec(0u32..65_537, 1..40),
            extra in 0usize..20,
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let f = PrimeField::default();
            let g = symbols.len();
            let mut combos = mds_combine(&f, &symbols, g + extra).unwrap();
            combos.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(mds_recover(&f, &combos[..g], g).unwrap(), symbols);
        }
    }
}
