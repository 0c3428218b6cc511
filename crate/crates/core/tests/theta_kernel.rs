mod common;

use common::{assert_close, rel_log2, Gen};
use ehs_core::theta::{delta_ratio, multi_poch, poch, theta, theta_closed_form, theta_product, weyl_delta};
use ehs_core::{ComplexAp, Error, NomeFrame, PochSpec};
use proptest::prelude::*;

/// θ(x) as a plain product over j < terms, with no factoring or truncation logic.
fn long_product(x: &ComplexAp, p: &ComplexAp, terms: usize, prec: u32) -> ComplexAp {
    let one = ComplexAp::one(prec);
    let inv = x.recip().unwrap();
    let mut pj = one.clone();
    let mut acc = one.clone();
    for _ in 0..terms {
        let pj1 = &pj * p;
        acc = &acc * &(&one - &(&pj * x));
        acc = &acc * &(&one - &(&pj1 * &inv));
        pj = pj1;
    }
    acc
}

#[test]
fn theta_matches_long_product_oracle() {
    let frame = NomeFrame::from_f64(0.1, (0.5, 0.0), 128).unwrap();
    let p = ComplexAp::from_f64(0.1, 0.0, 512);
    for (re, im) in [(2.0, 0.0), (0.3, -1.7), (-5.0, 0.25)] {
        let x = ComplexAp::from_f64(re, im, 512);
        let oracle = long_product(&x, &p, 500, 512);
        let value = theta(&x, &frame).unwrap();
        assert_close(&value, &oracle, 127.0, "theta vs long product");
    }
}

#[test]
fn theta_at_p_zero_is_one_minus_x_bit_for_bit() {
    let frame = NomeFrame::from_f64(0.0, (0.7, 0.1), 200).unwrap();
    let mut g = Gen::new(11, 0.0, 200);
    for _ in 0..20 {
        let x = g.c();
        let closed = theta_closed_form(&x, &frame).unwrap();
        assert_eq!(theta_product(&x, &frame).unwrap(), closed);
        assert_eq!(theta(&x, &frame).unwrap(), closed);
        assert_eq!(closed, &frame.one() - &frame.lift(&x));
    }
}

#[test]
fn theta_vanishes_at_integer_powers_of_p() {
    let frame = NomeFrame::from_f64(0.25, (0.6, 0.0), 128).unwrap();
    let p = frame.p().clone();
    let mut x = frame.one();
    for _ in 0..4 {
        assert!(theta(&x, &frame).unwrap().is_zero());
        x = &x * &p;
    }
}

#[test]
fn frame_rejects_bad_nomes() {
    let q = (0.5, 0.0);
    assert!(matches!(NomeFrame::from_f64(1.0, q, 128), Err(Error::InvalidFrame(_))));
    assert!(matches!(NomeFrame::from_f64(-1.5, q, 128), Err(Error::InvalidFrame(_))));
    assert!(NomeFrame::from_f64(0.2, (0.0, 0.0), 128).is_err());
    assert!(NomeFrame::from_f64(0.2, q, 16).is_err());
    assert!(NomeFrame::from_f64(f64::NAN, q, 128).is_err());
}

#[test]
fn zero_argument_is_a_domain_error() {
    let frame = NomeFrame::from_f64(0.2, (0.6, 0.0), 128).unwrap();
    assert!(matches!(theta(&frame.zero(), &frame), Err(Error::Domain(_))));
    assert!(matches!(
        poch(&PochSpec::new(frame.zero(), 2), &frame),
        Err(Error::Domain(_))
    ));
}

#[test]
fn poch_lengths_and_products() {
    let mut g = Gen::new(3, 0.2, 160);
    let f = g.frame.clone();
    let a = g.c();
    assert_eq!(poch(&PochSpec::new(a.clone(), 0), &f).unwrap(), f.one());
    let one_step = poch(&PochSpec::new(a.clone(), 1), &f).unwrap();
    assert_eq!(one_step, theta(&a, &f).unwrap());
    assert!(matches!(
        poch(&PochSpec::new(a.clone(), -1), &f),
        Err(Error::Argument(_))
    ));
    let b = g.c();
    let joint = multi_poch(&[a.clone(), b.clone()], 3, &f).unwrap();
    let separate = &poch(&PochSpec::new(a, 3), &f).unwrap() * &poch(&PochSpec::new(b, 3), &f).unwrap();
    assert_close(&joint, &separate, 150.0, "multi_poch");
}

#[test]
fn weyl_delta_and_delta_ratio_agree() {
    for seed in 0..10 {
        let mut g = Gen::new(seed, 0.2, 192);
        let f = g.frame.clone();
        let n = g.usize(1, 4);
        let z = g.cs(n);
        let y: Vec<usize> = (0..n).map(|_| g.usize(0, 4)).collect();
        let shifted: Vec<ComplexAp> = z.iter().zip(&y).map(|(zk, &yk)| zk * &f.q_pow(yk as i64)).collect();
        let ratio = delta_ratio(&z, &y, &f).unwrap();
        let quotient = weyl_delta(&shifted, &f)
            .unwrap()
            .checked_div(&weyl_delta(&z, &f).unwrap())
            .unwrap();
        assert_close(&ratio, &quotient, 170.0, "delta ratio");
    }
}

#[test]
fn coincident_points_make_delta_ratio_singular() {
    let f = NomeFrame::from_f64(0.2, (0.6, 0.2), 128).unwrap();
    let z = vec![f.scalar(0.8, 0.1), f.scalar(0.8, 0.1)];
    assert!(delta_ratio(&z, &[1, 0], &f).is_err());
}

fn case() -> impl Strategy<Value = (u64, f64)> {
    (any::<u64>(), prop_oneof![Just(0.0), Just(0.2), Just(0.45)])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn inversion((seed, p) in case()) {
        let mut g = Gen::new(seed, p, 192);
        let f = g.frame.clone();
        let x = g.c();
        let lhs = theta(&x.recip().unwrap(), &f).unwrap();
        let rhs = -(theta(&x, &f).unwrap().checked_div(&x).unwrap());
        prop_assert!(rel_log2(&lhs, &rhs) < -180.0);
    }

    #[test]
    fn quasi_periodicity(seed in any::<u64>(), p in 0.05f64..0.6) {
        let mut g = Gen::new(seed, p, 192);
        let f = g.frame.clone();
        let x = g.c();
        let lhs = theta(&(&x * f.p()), &f).unwrap();
        let rhs = -(theta(&x, &f).unwrap().checked_div(&x).unwrap());
        prop_assert!(rel_log2(&lhs, &rhs) < -180.0);
    }

    #[test]
    fn poch_split((seed, p) in case(), n in 0i64..6, k in 0i64..6) {
        let mut g = Gen::new(seed, p, 192);
        let f = g.frame.clone();
        let a = g.c();
        let lhs = poch(&PochSpec::new(a.clone(), n + k), &f).unwrap();
        let rhs = &poch(&PochSpec::new(a.clone(), n), &f).unwrap()
            * &poch(&PochSpec::new(&a * &f.q_pow(n), k), &f).unwrap();
        prop_assert!(rel_log2(&lhs, &rhs) < -180.0);
    }

    #[test]
    fn poch_reversal((seed, p) in case(), n in 0i64..6) {
        let mut g = Gen::new(seed, p, 192);
        let f = g.frame.clone();
        let a = g.c();
        let c = f.q_pow(1 - n).checked_div(&a).unwrap();
        let lhs = poch(&PochSpec::new(a.clone(), n), &f).unwrap();
        let sign = if n % 2 == 1 { -f.one() } else { f.one() };
        let rhs = &(&(&sign * &f.q_pow(n * (n - 1) / 2)) * &a.powi(n).unwrap())
            * &poch(&PochSpec::new(c, n), &f).unwrap();
        prop_assert!(rel_log2(&lhs, &rhs) < -180.0);
    }
}
