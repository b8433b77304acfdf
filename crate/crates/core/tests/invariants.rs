use std::sync::Arc;

use proptest::prelude::*;

use sleepcell_core::association::{
    best_case_access_rr, product_bernoulli_states, AccessModel, Competitor,
};
use sleepcell_core::channel::{
    cross_signal_stat_approx, local_signal_stat, CrossExact, CrossSeries, GammaFit, LinkParams,
    SignalStat,
};
use sleepcell_core::geometry::{
    select_sleep_pattern, CellLayout, CellRadius, Discretization, ZoneWeighting,
};
use sleepcell_core::metrics::{network_power, PowerConstituents, PowerModel};
use sleepcell_core::scenario::{Association, EnumerationPolicy, Scenario, Scheduling, Scheme};
use sleepcell_core::sigint::{InterferenceStat, Interferer};
use sleepcell_core::Error;

fn coarse_grid() -> Discretization {
    Discretization {
        rings: 6,
        sectors: 8,
        weighting: ZoneWeighting::Area,
    }
}

fn check_law(law: &SignalStat) -> Result<(), TestCaseError> {
    let (lo, hi) = law.support_hint();
    let mut prev = 0.0;
    for i in 0..=40 {
        let x = lo * (hi / lo).powf(i as f64 / 40.0);
        let f = law.cdf(x);
        prop_assert!(f >= prev - 1e-12, "cdf decreased at {x}: {f} < {prev}");
        prop_assert!((0.0..=1.0 + 1e-12).contains(&f));
        prev = f;
    }
    prop_assert!(law.cdf(0.0).abs() < 1e-12);
    prop_assert!(law.cdf(hi * 1e6) > 1.0 - 1e-6);
    prop_assert!((law.mgf(0.0) - 1.0).abs() < 1e-12);
    for f in [0.01, 1.0, 100.0] {
        let m = law.mgf(f / law.mean());
        prop_assert!(m > 0.0 && m <= 1.0, "transform {m} at {f}");
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn layout_spacing_along_axis(tiers in 1usize..4, radius in 100.0f64..2000.0) {
        let layout = CellLayout::hexagonal(tiers, CellRadius::new(radius).unwrap());
        prop_assert_eq!(layout.len(), 1 + 3 * tiers * (tiers + 1));
        prop_assert_eq!(layout.center(0).unwrap(), (0.0, 0.0));
        for n in 1..=tiers {
            // The first cell of ring n sits on the positive x axis.
            let first = 1 + 3 * n * (n - 1);
            let d = layout.distance(0, first).unwrap();
            prop_assert!((d - 2.0 * n as f64 * radius).abs() < 1e-9 * radius);
        }
    }

    #[test]
    fn threshold_partition(loads in prop::collection::vec(0u32..12, 7), threshold in 0u32..12) {
        match select_sleep_pattern(&loads, threshold) {
            Ok(p) => {
                let (s, a) = (p.sleeping(), p.active());
                prop_assert_eq!(s.len() + a.len(), loads.len());
                for (l, &u) in loads.iter().enumerate() {
                    prop_assert_eq!(p.is_sleeping(l), u <= threshold);
                    prop_assert!(s.contains(&l) != a.contains(&l));
                }
            }
            Err(e) => {
                prop_assert_eq!(e, Error::AllSleeping);
                prop_assert!(loads.iter().all(|&u| u <= threshold));
            }
        }
    }

    #[test]
    fn link_laws_are_distributions(
        shape in 0.5f64..4.0,
        scale in 0.2f64..5.0,
        path_loss in 2.05f64..4.0,
        zoom in 1.0f64..8.0,
    ) {
        let fit = GammaFit::new(shape, scale).unwrap();
        let link = LinkParams::new(1.0, path_loss, zoom).unwrap();
        check_law(&local_signal_stat(fit, link, 500.0).unwrap())?;
        check_law(&cross_signal_stat_approx(fit, link, 1000.0, 0.3, 500.0, &coarse_grid()).unwrap())?;
        match CrossExact::new(fit, link, 1732.0, 500.0, CrossSeries::default()) {
            Ok(e) => check_law(&SignalStat::CrossExact(e))?,
            Err(Error::SeriesTruncation { .. }) => {}
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }

    #[test]
    fn interference_mixture_is_factored(
        distances in prop::collection::vec(1000.0f64..4000.0, 1..6),
        zooms in prop::collection::vec(0.0f64..1.0, 6),
        zoom in 1.0f64..6.0,
        t in 0.01f64..100.0,
    ) {
        let fit = GammaFit::new(2.0, 1.0).unwrap();
        let link = LinkParams::new(1.0, 2.6, 1.0).unwrap();
        let interferers: Vec<Interferer> = distances
            .iter()
            .zip(&zooms)
            .enumerate()
            .map(|(bs, (&d, &p))| Interferer {
                bs,
                law: Arc::new(cross_signal_stat_approx(fit, link, d, 0.0, 500.0, &coarse_grid()).unwrap()),
                zoom_probability: p,
            })
            .collect();
        let stat = InterferenceStat::new(interferers, zoom);
        let mass: f64 = stat.combinations().iter().map(|c| c.1).sum();
        prop_assert!((mass - 1.0).abs() < 1e-9);
        prop_assert!((stat.mgf(0.0) - 1.0).abs() < 1e-12);
        let s = t / stat.mean();
        let (a, b) = (stat.mgf(s), stat.mgf_enumerated(s));
        prop_assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn enumeration_mass(probs in prop::collection::vec(0.0f64..1.0, 0..12)) {
        let competitors: Vec<Competitor> =
            probs.iter().map(|&prob| Competitor { cell: 0, prob }).collect();
        let e = product_bernoulli_states(&competitors, EnumerationPolicy::Exact).unwrap();
        prop_assert_eq!(e.states.len(), 1 << probs.len());
        prop_assert!((e.total_probability() - 1.0).abs() < 1e-9);
        let s = product_bernoulli_states(
            &competitors,
            EnumerationPolicy::Sampled { draws: 50, seed: 3 },
        )
        .unwrap();
        prop_assert!((s.total_probability() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn power_after_zoom_grows_with_zoom(
        sleeping in 0usize..19,
        frac in 0.0f64..1.0,
        zoom in 1.0f64..8.0,
        extra in 0.0f64..4.0,
    ) {
        let model = |zoom: f64| PowerModel {
            transmit_power: 1.0,
            static_power: 200.0,
            sleep_power: 2.0,
            dynamic_slope: 3.77,
            zoom,
            cells: 19,
            active: 19 - sleeping,
            sleeping,
            zooming: frac * (19 - sleeping) as f64,
            constituents: None,
        };
        let low = network_power(&model(zoom)).unwrap();
        let high = network_power(&model(zoom + extra)).unwrap();
        prop_assert!(low.after_sleep <= low.total);
        prop_assert!(low.after_zoom >= low.after_sleep);
        prop_assert!(high.after_zoom >= low.after_zoom);
    }

    #[test]
    fn constituents_identity(
        processing in 10.0f64..200.0,
        cooling in 0.0f64..1.0,
        supply in 0.0f64..1.0,
        efficiency in 0.1f64..1.0,
    ) {
        let c = PowerConstituents { processing, cooling, supply, amplifier_efficiency: efficiency };
        let mut m = PowerModel {
            transmit_power: 1.0,
            static_power: c.static_power(),
            sleep_power: 2.0,
            dynamic_slope: c.dynamic_slope(),
            zoom: 1.0,
            cells: 7,
            active: 7,
            sleeping: 0,
            zooming: 0.0,
            constituents: Some(c),
        };
        prop_assert!(network_power(&m).is_ok());
        m.static_power *= 1.01;
        prop_assert!(network_power(&m).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn greedy_best_case_decreases_and_trails_round_robin(
        path_loss in 2.2f64..4.0,
        local in 1u32..8,
        more in 1u32..4,
    ) {
        let access = |users: u32| {
            let mut loads = vec![1; 7];
            loads[1] = users;
            let mut s = Scenario::with_sleep_set(1, 500.0, loads, &[0]).unwrap();
            s.link = LinkParams::new(1.0, path_loss, 1.0).unwrap();
            s.discretization = coarse_grid();
            AccessModel::build(&s).unwrap().best_case_access_greedy(0, 1).unwrap()
        };
        let (few, many) = (access(local), access(local + more));
        prop_assert!(many < few, "{many} !< {few}");
        prop_assert!(few <= best_case_access_rr(local));
        prop_assert!(many <= best_case_access_rr(local + more));
    }

    #[test]
    fn mmap_access_within_best_case(
        loads in prop::collection::vec(1u32..6, 7),
        threshold in 1u32..4,
        greedy in any::<bool>(),
    ) {
        let Ok(mut s) = Scenario::with_threshold(1, 500.0, loads, threshold) else {
            return Ok(());
        };
        prop_assume!(!s.sleeping().is_empty());
        s.discretization = coarse_grid();
        let scheduling = if greedy { Scheduling::Greedy } else { Scheduling::RoundRobin };
        let scheme = Scheme::new(Association::Mmap, scheduling);
        s.scheme = scheme;
        let model = AccessModel::build(&s).unwrap();
        let report = model.access_report(scheme).unwrap();
        for (j, &exact) in &report.exact {
            let k = report.chosen[j];
            let best = report.best_case[&(*j, k)];
            prop_assert!((0.0..=1.0).contains(&exact));
            prop_assert!(exact <= best + 1e-9, "cell {j}: {exact} > {best}");
            prop_assert_eq!(report.association[&(*j, k)], 1.0);
        }
    }

    #[test]
    fn mrsp_rows_are_distributions(loads in prop::collection::vec(1u32..6, 7), threshold in 1u32..4) {
        let Ok(mut s) = Scenario::with_threshold(1, 500.0, loads, threshold) else {
            return Ok(());
        };
        prop_assume!(!s.sleeping().is_empty());
        s.discretization = coarse_grid();
        let model = AccessModel::build(&s).unwrap();
        for j in s.populated_sleeping() {
            let row = model.mrsp_row(j).unwrap();
            prop_assert!(row.iter().all(|e| (0.0..=1.0).contains(&e.1)));
            let sum: f64 = row.iter().map(|e| e.1).sum();
            prop_assert!((sum - 1.0).abs() < 1e-6, "row {j} sums to {sum}");
        }
    }
}
