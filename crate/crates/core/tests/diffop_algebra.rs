use std::sync::Arc;

use frobstruct_core::arith::Level;
use frobstruct_core::chart::{Chart, RingElem};
use frobstruct_core::diffop::DiffOp;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_poly(c: &Arc<Chart>, rng: &mut ChaCha8Rng, deg: i64) -> RingElem {
    let mut f = RingElem::zero(c);
    for _ in 0..3 {
        let e: Vec<i64> = (0..c.nvars()).map(|_| rng.gen_range(0..=deg)).collect();
        f = f.add(&RingElem::monomial(c, e, rng.gen_range(0..c.p() as i64)).unwrap());
    }
    f
}

fn random_op(c: &Arc<Chart>, m: u32, rng: &mut ChaCha8Rng) -> DiffOp {
    let p = c.p();
    let max = p.pow(m + 1) + p;
    let mut op = DiffOp::zero(c, Level::Finite(m));
    for _ in 0..2 {
        let r: Vec<u64> = (0..c.nvars()).map(|_| rng.gen_range(0..=max)).collect();
        let f = random_poly(c, rng, 2 * p as i64);
        op = op.add(&DiffOp::term(f, r, Level::Finite(m))).unwrap();
    }
    op
}

#[test]
fn associativity_and_action_compatibility() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for p in [3u64, 5] {
        let c = Chart::polynomial(p, &["t"]).unwrap();
        for m in 0..=2 {
            for _ in 0..40 {
                let (a, b, d) = (random_op(&c, m, &mut rng), random_op(&c, m, &mut rng), random_op(&c, m, &mut rng));
                let left = a.mul(&b).unwrap().mul(&d).unwrap();
                let right = a.mul(&b.mul(&d).unwrap()).unwrap();
                assert_eq!(left, right, "p={p} m={m}\n a={a}\n b={b}\n d={d}");
                let f = random_poly(&c, &mut rng, (p * p * p) as i64 + 5);
                assert_eq!(a.mul(&b).unwrap().apply(&f).unwrap(), a.apply(&b.apply(&f).unwrap()).unwrap());
            }
        }
    }
}

#[test]
fn bivariate_associativity() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let c = Chart::polynomial(3, &["s", "t"]).unwrap();
    for m in 0..=1 {
        for _ in 0..20 {
            let (a, b, d) = (random_op(&c, m, &mut rng), random_op(&c, m, &mut rng), random_op(&c, m, &mut rng));
            assert_eq!(a.mul(&b).unwrap().mul(&d).unwrap(), a.mul(&b.mul(&d).unwrap()).unwrap());
        }
    }
}

#[test]
fn level_map_is_multiplicative() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let c = Chart::polynomial(3, &["t"]).unwrap();
    for _ in 0..40 {
        let a = random_op(&c, 0, &mut rng);
        let b = random_op(&c, 0, &mut rng);
        for m2 in [Level::Finite(1), Level::Finite(2), Level::Infinity] {
            let lhs = a.mul(&b).unwrap().level_map(m2).unwrap();
            let rhs = a.level_map(m2).unwrap().mul(&b.level_map(m2).unwrap()).unwrap();
            assert_eq!(lhs, rhs);
        }
    }
}

#[test]
fn constant_symbols_commute() {
    let c = Chart::polynomial(5, &["t"]).unwrap();
    for m in 0..=2 {
        for a in 0..30 {
            for b in 0..30 {
                let x = DiffOp::basis(&c, Level::Finite(m), vec![a]);
                let y = DiffOp::basis(&c, Level::Finite(m), vec![b]);
                assert_eq!(x.mul(&y).unwrap(), y.mul(&x).unwrap());
            }
        }
    }
}
