//! Ladder-operator identities on guard-banded truncated spaces.

use nphoton_core::combinatorics::{to_f64, CoeffTable};
use nphoton_core::fockspace::{create, destroy, embed, identity, pauli, GuardBand, HilbertLayout, Pauli, SparseOperator, Subsystem};
use nphoton_core::models::number_polynomial;
use nphoton_core::C64;

struct Ops {
    layout: HilbertLayout,
    sz: SparseOperator,
    sp: SparseOperator,
    sm: SparseOperator,
    an: SparseOperator,
    adn: SparseOperator,
}

fn ops(n: usize, trunc: usize) -> Ops {
    let layout = HilbertLayout::new(vec![Subsystem::qubit(), Subsystem::oscillator(trunc)]).unwrap();
    let q = |p| embed(&layout, &[(0, &pauli(p))]).unwrap();
    let an = destroy(trunc).unwrap().pow(n as u32).unwrap();
    let adn = create(trunc).unwrap().pow(n as u32).unwrap();
    Ops {
        sz: q(Pauli::Z),
        sp: q(Pauli::Plus),
        sm: q(Pauli::Minus),
        an: embed(&layout, &[(1, &an)]).unwrap(),
        adn: embed(&layout, &[(1, &adn)]).unwrap(),
        layout,
    }
}

fn mul(a: &SparseOperator, b: &SparseOperator) -> SparseOperator {
    a.matmul(b).unwrap()
}

fn poly(layout: &HilbertLayout, trunc: usize, coeffs: &[f64]) -> SparseOperator {
    embed(layout, &[(1, &number_polynomial(trunc, coeffs, 0).unwrap())]).unwrap()
}

#[test]
fn normal_ordered_commutator_is_exact_in_band() {
    let table = CoeffTable::shared();
    for n in 1..=8 {
        let trunc = 4 * n + 2 * n;
        let o = ops(n, trunc);
        let (cp, cm) = table.commutator_poly(n).unwrap();
        // sigma_z {a^n, a^dag n} + [a^n, a^dag n]
        let lhs = mul(&o.sz, &o.an.anticommutator(&o.adn).unwrap()).add(&o.an.commutator(&o.adn).unwrap()).unwrap();
        let rhs = mul(&o.sz, &poly(&o.layout, trunc, &to_f64(&cp))).add(&poly(&o.layout, trunc, &to_f64(&cm))).unwrap();
        let band = GuardBand::new(n);
        let scale = lhs.max_abs_entry();
        assert!(band.max_abs_diff(&lhs, &rhs).unwrap() <= 1e-13 * scale, "n={n}");
    }
}

#[test]
fn guard_band_is_necessary() {
    // the edge entries are wrong, so an unrestricted comparison must fail
    let n = 2;
    let trunc = 16;
    let o = ops(n, trunc);
    let (cp, _) = CoeffTable::shared().commutator_poly(n).unwrap();
    let lhs = mul(&o.sz, &o.an.anticommutator(&o.adn).unwrap());
    let rhs = mul(&o.sz, &poly(&o.layout, trunc, &to_f64(&cp)));
    assert!(lhs.max_abs_diff(&rhs).unwrap() > 1.0);
    assert!(GuardBand::new(n).max_abs_diff(&lhs, &rhs).unwrap() <= 1e-13 * lhs.max_abs_entry());
}

#[test]
fn xy_mixed_commutators_are_hermitian_squeezing() {
    for n in 1..=5 {
        let trunc = 8 * n;
        let o = ops(n, trunc);
        let xp = mul(&o.sm, &o.adn).add(&mul(&o.sp, &o.an)).unwrap();
        let xm = mul(&o.sm, &o.adn).sub(&mul(&o.sp, &o.an)).unwrap();
        let yp = mul(&o.sm, &o.an).add(&mul(&o.sp, &o.adn)).unwrap();
        let ym = mul(&o.sm, &o.an).sub(&mul(&o.sp, &o.adn)).unwrap();
        let squeeze = mul(&o.sz, &mul(&o.adn, &o.adn).add(&mul(&o.an, &o.an)).unwrap());
        let band = GuardBand::new(n);
        let scale = squeeze.max_abs_entry();
        let xy = xp.commutator(&ym).unwrap();
        let yx = yp.commutator(&xm).unwrap();
        assert!(band.max_abs_diff(&xy, &squeeze).unwrap() <= 1e-12 * scale, "n={n}");
        assert!(band.max_abs_diff(&yx, &squeeze).unwrap() <= 1e-12 * scale, "n={n}");
        assert!(xy.hermitian_defect() <= 1e-13 * scale);
    }
}

#[test]
fn qubit_algebra() {
    let id = identity(HilbertLayout::qubit());
    let (x, y, z) = (pauli(Pauli::X), pauli(Pauli::Y), pauli(Pauli::Z));
    for p in [&x, &y, &z] {
        assert_eq!(p.matmul(p).unwrap().max_abs_diff(&id).unwrap(), 0.0);
    }
    let i2 = C64::new(0.0, 2.0);
    assert_eq!(x.commutator(&y).unwrap().max_abs_diff(&z.scale(i2)).unwrap(), 0.0);
    assert_eq!(y.commutator(&z).unwrap().max_abs_diff(&x.scale(i2)).unwrap(), 0.0);
    assert_eq!(z.commutator(&x).unwrap().max_abs_diff(&y.scale(i2)).unwrap(), 0.0);
}
