//! Property tests for the arithmetic and scanning layers.

use proptest::prelude::*;

use hoplab_core::crossings::{crossings, wells};
use hoplab_core::operator::FiniteOperator;
use hoplab_core::signedlog::SignedLog;
use hoplab_core::weights::{Provenance, WeightSequence};

fn walk_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.5f64..2.5, 1..200).prop_map(|steps| {
        let mut x = 0.0;
        let mut path = vec![0.0];
        for s in steps {
            x += s;
            path.push(x);
        }
        path
    })
}

fn nonzero_weights() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(
        (0.05f64..4.0, prop::bool::ANY).prop_map(|(m, neg)| if neg { -m } else { m }),
        1..40,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn signedlog_tracks_f64(a in -40.0f64..40.0, b in -40.0f64..40.0) {
        prop_assume!(a != 0.0 && b != 0.0);
        let (sa, sb) = (SignedLog::from_f64(a), SignedLog::from_f64(b));
        prop_assert!((sa.mul(&sb).to_f64() - a * b).abs() <= 1e-10 * (a * b).abs().max(1e-300));
        prop_assert!((sa.div(&sb).to_f64() - a / b).abs() <= 1e-10 * (a / b).abs());
        match sa.try_add(&sb) {
            Ok(s) => {
                prop_assert!((s.to_f64() - (a + b)).abs() <= 1e-9 * (a.abs() + b.abs()));
            }
            Err(_) => {
                // only possible under near-exact cancellation
                prop_assert!((a + b).abs() <= 1e-11 * a.abs());
            }
        }
        // ordering agrees with f64
        prop_assert_eq!(sa.cmp_value(&sb), a.partial_cmp(&b).unwrap());
    }

    #[test]
    fn crossing_scale_equivariance(path in walk_strategy(), alpha in 0.05f64..4.0, c in 0.1f64..16.0) {
        let scaled: Vec<f64> = path.iter().map(|x| x * c).collect();
        let base = crossings(&path, alpha);
        let eq = crossings(&scaled, alpha * c);
        prop_assert_eq!(base.down_times, eq.down_times);
        prop_assert_eq!(base.up_times, eq.up_times);
    }

    #[test]
    fn crossing_counts_monotone_in_alpha(path in walk_strategy(), alpha in 0.05f64..2.0, bump in 1.0f64..3.0) {
        let small = crossings(&path, alpha);
        let large = crossings(&path, alpha * bump);
        prop_assert!(large.down() <= small.down());
        prop_assert!(large.total() <= small.total());
    }

    #[test]
    fn crossings_alternate_starting_down(path in walk_strategy(), alpha in 0.05f64..3.0) {
        let rep = crossings(&path, alpha);
        // Down and up events interleave: d1 < u1 < d2 < u2 < ...
        prop_assert!(rep.down() == rep.up() || rep.down() == rep.up() + 1);
        for (d, u) in rep.down_times.iter().zip(&rep.up_times) {
            prop_assert!(d < u);
        }
        for (u, d) in rep.up_times.iter().zip(rep.down_times.iter().skip(1)) {
            prop_assert!(u < d);
        }
    }

    #[test]
    fn wells_match_downcrossings_and_are_disjoint(path in walk_strategy(), s in 0.05f64..4.0) {
        // the count identity is asserted inside wells(); here we check shape
        let ws = wells(&path, s);
        prop_assert_eq!(ws.len(), crossings(&path, s).down());
        for pair in ws.windows(2) {
            prop_assert!(pair[0].end <= pair[1].start + 1e-9);
        }
        for w in &ws {
            prop_assert!(w.start < w.end + 1e-12);
        }
    }

    #[test]
    fn negcount_monotone_and_bipartite(values in nonzero_weights()) {
        let w = WeightSequence::from_values(values, Provenance {
            label: "prop".into(), seed: 0, stream: 0,
        }).unwrap();
        let h = FiniteOperator::new(&w);
        let radius = 2.0 * w.values().iter().fold(0.0f64, |m, a| m.max(a.abs())) + 1.0;
        let mut last = 0;
        for i in 0..=20 {
            let x = -radius + (2.0 * radius) * i as f64 / 20.0;
            let c = h.negcount(SignedLog::from_f64(x)).unwrap().below;
            prop_assert!(c >= last, "count decreased at x = {x}");
            last = c;
        }
        prop_assert_eq!(h.negcount(SignedLog::from_f64(radius)).unwrap().below, h.dim());
        // spectrum symmetric: counts below -x and below +x add to dim when
        // neither hits an eigenvalue; probe generic points
        let x = 0.37 * radius;
        let plus = h.negcount(SignedLog::from_f64(x)).unwrap().below;
        let minus = h.negcount(SignedLog::from_f64(-x)).unwrap().below;
        prop_assert!(plus + minus == h.dim() || plus + minus == h.dim() - 1);
    }
}
