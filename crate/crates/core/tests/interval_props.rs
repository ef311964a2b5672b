use intervalcg::interval::{self, Interval};
use proptest::prelude::*;

fn iv() -> impl Strategy<Value = Interval> {
    (-1e3f64..1e3, 0f64..1e3).prop_map(|(lo, w)| Interval::new(lo, lo + w).unwrap())
}

fn well_formed(a: Interval) -> bool {
    a.lo() <= a.hi() && a.lo().is_finite() && a.hi().is_finite()
}

proptest! {
    #[test]
    fn operations_stay_well_formed(a in iv(), b in iv(), alpha in -10f64..10.0) {
        prop_assert!(well_formed(a + b));
        prop_assert!(well_formed(alpha * a));
        prop_assert!(well_formed(a.gh_diff(&b)));
        prop_assert!(well_formed(-a));
    }

    #[test]
    fn gh_diff_self_is_zero(a in iv()) {
        prop_assert_eq!(a.gh_diff(&a), Interval::ZERO);
    }

    #[test]
    fn gh_diff_reconstructs_wider_operand(a in iv(), b in iv()) {
        let (wide, narrow) = if a.width() >= b.width() { (a, b) } else { (b, a) };
        let back = narrow + wide.gh_diff(&narrow);
        prop_assert!(back.approx_eq(&wide, 1e-9 * (1.0 + wide.norm())), "{} vs {}", back, wide);
    }

    #[test]
    fn dominance_is_a_partial_order(a in iv(), b in iv(), c in iv()) {
        prop_assert!(a.dominates(&a));
        if a.dominates(&b) && b.dominates(&a) {
            prop_assert_eq!(a, b);
        }
        if a.dominates(&b) && b.dominates(&c) {
            prop_assert!(a.dominates(&c));
        }
        if a.strictly_dominates(&b) {
            prop_assert!(a.dominates(&b) && a != b);
        }
    }

    #[test]
    fn norm_triangle(a in iv(), b in iv()) {
        prop_assert!((a + b).norm() <= a.norm() + b.norm());
        prop_assert!(a.norm() >= 0.0);
    }

    #[test]
    fn scalar_mul_composes(a in iv(), x in 0f64..10.0, y in 0f64..10.0, neg in any::<bool>()) {
        let (x, y) = if neg { (-x, -y) } else { (x, y) };
        let lhs = interval::scalar_mul(x, interval::scalar_mul(y, a));
        let rhs = interval::scalar_mul(x * y, a);
        prop_assert!(lhs.approx_eq(&rhs, 1e-9 * (1.0 + rhs.norm())));
    }

    #[test]
    fn text_form_round_trips(a in iv()) {
        let back: Interval = a.to_string().parse().unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn constructor_rejects_inversions(lo in -1e3f64..1e3, gap in 1e-6f64..1e3) {
        prop_assert!(Interval::new(lo + gap, lo).is_err());
    }
}
