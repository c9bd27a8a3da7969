use polar_awgn::constellation::build_constellation;
use polar_awgn::gf2::{polar_inverse, polar_transform, transform_in_place, BitWord};
use proptest::prelude::*;

/// Row-vector times `[[1,0],[1,1]]^{⊗m}`, with the matrix built explicitly.
fn kronecker_encode(u: &[u8]) -> Vec<u8> {
    let n = u.len();
    let mut g = vec![vec![1u8]];
    while g.len() < n {
        let h = g.len();
        let mut next = vec![vec![0u8; 2 * h]; 2 * h];
        for r in 0..h {
            for c in 0..h {
                next[r][c] = g[r][c];
                next[h + r][c] = g[r][c];
                next[h + r][h + c] = g[r][c];
            }
        }
        g = next;
    }
    (0..n).map(|c| (0..n).fold(0u8, |acc, r| acc ^ (u[r] & g[r][c]))).collect()
}

fn word(max_log2: u32) -> impl Strategy<Value = Vec<u8>> {
    (0..=max_log2).prop_flat_map(|m| prop::collection::vec(0u8..=1, 1usize << m))
}

proptest! {
    #[test]
    fn transform_is_an_involution(u in word(12)) {
        let w = BitWord::new(u.clone()).unwrap();
        let x = polar_transform(&w).unwrap();
        prop_assert_eq!(polar_transform(&x).unwrap().into_bits(), u.clone());
        prop_assert_eq!(polar_inverse(&x).unwrap().into_bits(), u);
    }

    #[test]
    fn transform_is_linear(pair in (0u32..=12).prop_flat_map(|m| {
        let n = 1usize << m;
        (prop::collection::vec(0u8..=1, n), prop::collection::vec(0u8..=1, n))
    })) {
        let (a, b) = pair;
        let wa = BitWord::new(a).unwrap();
        let wb = BitWord::new(b).unwrap();
        let lhs = polar_transform(&wa.xor(&wb).unwrap()).unwrap();
        let rhs = polar_transform(&wa).unwrap().xor(&polar_transform(&wb).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn transform_matches_kronecker_matrix(u in word(6)) {
        let mut x = u.clone();
        transform_in_place(&mut x);
        prop_assert_eq!(x, kronecker_encode(&u));
    }

    #[test]
    fn quantizer_is_idempotent_and_monotone(
        m in 2u32..=10,
        power in 0.1f64..10.0,
        gamma in 0.0f64..0.95,
        x in -20.0f64..20.0,
        y in -20.0f64..20.0,
    ) {
        let c = build_constellation(1 << m, power, gamma).unwrap();
        let qx = c.quantize(x).unwrap();
        prop_assert_eq!(c.quantize(qx).unwrap(), qx);
        prop_assert!(c.amplitudes().contains(&qx));
        prop_assert!(qx.abs() <= x.abs());
        if x <= y {
            prop_assert!(qx <= c.quantize(y).unwrap());
        }
    }

    #[test]
    fn constellation_is_symmetric_with_bounded_energy(m in 2u32..=12, power in 0.1f64..10.0, gamma in 0.0f64..0.95) {
        let c = build_constellation(1 << m, power, gamma).unwrap();
        let mut a = c.amplitudes().to_vec();
        a.sort_by(f64::total_cmp);
        let mut neg: Vec<f64> = a.iter().map(|v| -v).collect();
        neg.sort_by(f64::total_cmp);
        prop_assert_eq!(a, neg);
        prop_assert!(c.mean_energy() <= c.shaping_variance());
        prop_assert!(c.alphabet_power() <= power);
    }
}

#[test]
fn rejects_non_power_of_two_lengths() {
    for n in [0usize, 3, 6, 100] {
        assert!(polar_transform(&BitWord::zeros(n)).is_err(), "n = {n}");
    }
}
