use heatlab::functionals::{entropy, second_moment};
use heatlab::heat::{kernel_axis, kernel_measure, kernel_measure_auto};
use heatlab::rigidity::{contraction_record, gradient_estimate_record, sharpness_sc_detect};
use heatlab::space::geodesic_point;
use heatlab::transport::{potential_from_monotone_map, Exponent};
use heatlab::{Grid, KernelSpec, TestFunction, WeightedLine, WeightedSpace};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn contraction_never_beats_the_bound(
        k in -2.0f64..1.0,
        a in -1.0f64..1.0,
        t in 0.05f64..1.0,
        x in -2.0f64..2.0,
        d in 0.1f64..2.0,
        p in prop::sample::select(vec![1.0, 2.0, 3.0]),
    ) {
        let space = WeightedSpace::line(WeightedLine::new(k, a));
        let r = contraction_record(&space, &[x], &[x + d], t, Exponent::Finite(p)).unwrap();
        prop_assert!(r.ratio <= 1.0 + 1e-4, "ratio {}", r.ratio);
    }

    #[test]
    fn products_contract_at_the_smallest_curvature(
        k0 in -1.0f64..1.0,
        k1 in -1.0f64..1.0,
        t in 0.1f64..1.0,
        x in prop::array::uniform2(-1.0f64..1.0),
        y in prop::array::uniform2(-1.0f64..1.0),
    ) {
        prop_assume!(x != y);
        let space = WeightedSpace::new(vec![WeightedLine::new(k0, 0.0), WeightedLine::new(k1, 0.5)]).unwrap();
        let r = contraction_record(&space, &x, &y, t, Exponent::Finite(2.0)).unwrap();
        prop_assert!(r.ratio <= 1.0 + 1e-4, "ratio {}", r.ratio);
    }
}

#[test]
fn sharpness_propagates_to_sub_pairs() {
    for k in [-2.0, 0.0, 1.0] {
        let space = WeightedSpace::line(WeightedLine::new(k, 0.3));
        let (x, y, t) = (-0.4, 1.1, 0.6);
        let whole = contraction_record(&space, &[x], &[y], t, Exponent::Finite(2.0)).unwrap();
        assert!(whole.ratio >= 1.0 - 1e-4);
        for (a, b) in [(0.0, 0.5), (0.25, 0.75), (0.1, 0.9), (0.6, 1.0)] {
            let ga = geodesic_point(&[x], &[y], a).unwrap();
            let gb = geodesic_point(&[x], &[y], b).unwrap();
            for s in [0.1, 0.3, t] {
                let r = contraction_record(&space, &ga, &gb, s, Exponent::Finite(2.0)).unwrap();
                assert!(
                    r.ratio >= 1.0 - 1e-3,
                    "k={k} a={a} b={b} s={s}: {}",
                    r.ratio
                );
            }
        }
    }
}

#[test]
fn sharp_contraction_matches_sharp_gradient_estimate() {
    let t = 0.5;
    for k in [-2.0, 0.0, 1.0] {
        let line = WeightedLine::new(k, 0.0);
        let space = WeightedSpace::line(line);
        let spec = KernelSpec::new(line, t).unwrap();
        let grid = Grid::new(vec![kernel_axis(&spec, &[-2.0, 2.0], 10.0, 4097).unwrap()]).unwrap();
        let f = TestFunction::Identity.field(&grid).unwrap();
        let sg =
            gradient_estimate_record(&line, &f, t, Exponent::Infinity, &[-1.0, 0.0, 1.0], 1e-4)
                .unwrap()
                .sharp;
        for p in [1.0, 2.0] {
            let records: Vec<_> = [(-1.0, 0.0), (0.0, 2.0), (-1.5, 1.5), (0.3, 0.8)]
                .iter()
                .map(|&(x, y)| {
                    contraction_record(&space, &[x], &[y], t, Exponent::Finite(p)).unwrap()
                })
                .collect();
            let sc = sharpness_sc_detect(&records, 1e-4).unwrap().len() == records.len();
            assert_eq!(sg, sc, "k={k} p={p}");
            assert!(sc);
        }
    }
}

#[test]
fn potential_lipschitz_constant_is_the_contracted_distance() {
    for (k, t, x, y) in [
        (-2.0, 0.3, 0.0, 1.0),
        (0.0, 0.5, -1.0, 0.5),
        (1.0, 1.0, 0.0, 2.0),
    ] {
        let line = WeightedLine::new(k, 0.0);
        let spec = KernelSpec::new(line, t).unwrap();
        let grid = Grid::new(vec![kernel_axis(&spec, &[x, y], 8.0, 4097).unwrap()]).unwrap();
        let mu = kernel_measure(&spec, x, &grid).unwrap();
        let nu = kernel_measure(&spec, y, &grid).unwrap();
        let phi = potential_from_monotone_map(&mu, &nu, 2.0).unwrap();
        let want = (-k * t).exp() * (y - x).abs();
        let lip = phi.lipschitz_bound().unwrap();
        assert!(
            (lip - want).abs() <= 1e-3 * want.max(1.0),
            "k={k}: {lip} vs {want}"
        );
    }
}

#[test]
fn kernel_functionals_are_locally_bounded_and_continuous() {
    for k in [-2.0, 0.0, 1.0] {
        let line = WeightedLine::new(k, 0.0);
        let at = |t: f64, x: f64| {
            let rho = kernel_measure_auto(&KernelSpec::new(line, t).unwrap(), x, 2049).unwrap();
            (entropy(&rho), second_moment(&rho, &[x]).unwrap())
        };
        for t in [0.1, 0.5, 1.0] {
            for x in [-2.0, 0.0, 2.0] {
                let (e, m) = at(t, x);
                assert!(e.is_finite() && m.is_finite());
                // discrete modulus: neighbour differences shrink with the step
                let mut last = f64::INFINITY;
                for delta in [1e-2, 5e-3, 2.5e-3] {
                    let (ex, mx) = at(t, x + delta);
                    let (et, mt) = at(t + delta, x);
                    let diff = [
                        (ex - e).abs(),
                        (mx - m).abs(),
                        (et - e).abs(),
                        (mt - m).abs(),
                    ]
                    .into_iter()
                    .fold(0.0, f64::max);
                    assert!(diff < 0.75 * last, "k={k} t={t} x={x} delta={delta}");
                    last = diff;
                }
            }
        }
    }
}
