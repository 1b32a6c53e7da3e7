use cmotion::chaos::{same_orbit, scrambled_pair_estimate, ChaosConfig, OrbitVerdict};
use cmotion::dynamics::InverseConfig;
use cmotion::invariants::{bipartite_phi, BipartiteInvariant};
use cmotion::objectives::{ObjectiveSpec, PayoffData, Region};
use cmotion::{MapInstance, State};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn payoff_strategy() -> impl Strategy<Value = PayoffData> {
    (1usize..=2, 1usize..=2, 1usize..=3, 1usize..=3).prop_flat_map(|(n, m, k1, k2)| {
        prop::collection::vec(-1.0f64..1.0, n * m * k1 * k2).prop_map(move |v| {
            let mut it = v.into_iter();
            let blocks: Vec<Vec<DMatrix<f64>>> = (0..n)
                .map(|_| (0..m).map(|_| DMatrix::from_iterator(k1, k2, it.by_ref().take(k1 * k2))).collect())
                .collect();
            PayoffData::from_blocks(&blocks).unwrap()
        })
    })
}

fn alt_play_case() -> impl Strategy<Value = (MapInstance, State)> {
    (payoff_strategy(), 0.01f64..0.5, 0.01f64..0.5).prop_flat_map(|(p, e1, e2)| {
        let (nx, ny) = (p.x_dim(), p.y_dim());
        (
            Just(MapInstance::alt_play(p, e1, e2).unwrap()),
            prop::collection::vec(-10.0f64..10.0, nx),
            prop::collection::vec(-10.0f64..10.0, ny),
        )
            .prop_map(|(map, x, y)| (map, State::bipartite(&x, &y)))
    })
}

fn simplex_point(blocks: &'static [usize]) -> impl Strategy<Value = State> {
    let d: usize = blocks.iter().sum();
    prop::collection::vec(0.05f64..1.0, d).prop_map(move |v| State::simplex_normalized(v, blocks.to_vec()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn alt_play_inverse_undoes_step((map, z) in alt_play_case()) {
        let back = map.inverse(&map.step(&z).unwrap(), &InverseConfig::default()).unwrap();
        prop_assert!(back.distance(&z) <= 1e-12 * (1.0 + z.coords().iter().fold(0.0_f64, |m, c| m.max(c.abs()))));
    }

    #[test]
    fn closed_form_survives_one_step((map, z) in alt_play_case()) {
        let inv = BipartiteInvariant::from_map(&map).unwrap();
        let (a, b) = (inv.value(&z).unwrap(), inv.value(&map.step(&z).unwrap()).unwrap());
        let scale = 1.0 + z.coords().iter().map(|c| c * c).sum::<f64>() / 0.01;
        prop_assert!((a - b).abs() <= 1e-13 * scale);
    }

    #[test]
    fn payoff_json_roundtrip(p in payoff_strategy()) {
        let text = serde_json::to_string(&p).unwrap();
        let back: PayoffData = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn phi_is_quadratic_under_scaling(p in payoff_strategy(), s in -3.0f64..3.0) {
        let d = p.x_dim() + p.y_dim();
        let z: Vec<f64> = (0..d).map(|i| 1.0 + i as f64 * 0.7).collect();
        let zs: Vec<f64> = z.iter().map(|c| c * s).collect();
        let (a, b) = (bipartite_phi(&p, 0.1, 0.2, &z), bipartite_phi(&p, 0.1, 0.2, &zs));
        prop_assert!((b - s * s * a).abs() <= 1e-12 * (1.0 + b.abs()));
    }

    #[test]
    fn mwu_steps_stay_on_the_simplices(x in simplex_point(&[3, 2]), e1 in 0.01f64..0.5, e2 in 0.01f64..0.5) {
        let obj = ObjectiveSpec::bump(5).with_region(Region::SimplexProduct { blocks: vec![3, 2] });
        for map in [
            MapInstance::mwu_exp(obj.clone(), vec![3, 2], vec![e1, e2]).unwrap(),
            MapInstance::mwu_lin(obj.clone(), vec![3, 2], vec![e1, e2]).unwrap(),
        ] {
            let y = map.step(&x).unwrap();
            let c = y.coords();
            prop_assert!(c.iter().all(|v| *v > 0.0));
            prop_assert!((c[..3].iter().sum::<f64>() - 1.0).abs() <= 1e-15);
            prop_assert!((c[3..].iter().sum::<f64>() - 1.0).abs() <= 1e-15);
            let back = map.inverse(&y, &InverseConfig::default()).unwrap();
            prop_assert!(back.distance(&x) <= 1e-10);
        }
    }

    #[test]
    fn rgd_step_keeps_unit_norm(v in prop::collection::vec(-1.0f64..1.0, 3).prop_filter("nonzero", |v| v.iter().any(|c| c.abs() > 1e-3))) {
        let map = MapInstance::rgd_sphere(ObjectiveSpec::quadratic(3), 0.2, Some(2.0)).unwrap();
        let x = State::sphere_normalized(v).unwrap();
        let y = map.step(&x).unwrap();
        let n = y.coords().iter().map(|c| c * c).sum::<f64>().sqrt();
        prop_assert!((n - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn gd_inverse_roundtrip_in_the_double_well_box(x in prop::collection::vec(-1.5f64..1.5, 2)) {
        let map = MapInstance::gd(ObjectiveSpec::double_well(2), 0.1).unwrap();
        let x = State::euclidean(x);
        let back = map.inverse(&map.step(&x).unwrap(), &InverseConfig::default()).unwrap();
        prop_assert!(back.distance(&x) <= 1e-10);
    }

    #[test]
    fn pair_verdict_is_symmetric((map, z) in alt_play_case(), shift in 0.1f64..2.0) {
        let w = z.with_coords(z.coords().iter().map(|c| c + shift).collect()).unwrap();
        let cfg = ChaosConfig::default();
        let a = scrambled_pair_estimate(&map, &z, &w, 300, &cfg, None).unwrap();
        let b = scrambled_pair_estimate(&map, &w, &z, 300, &cfg, None).unwrap();
        prop_assert_eq!(a.verdict, b.verdict);
        prop_assert_eq!(a.log10_liminf, b.log10_liminf);
    }

    #[test]
    fn iterates_are_found_on_the_orbit((map, z) in alt_play_case(), k in -6i64..=6) {
        let cfg = InverseConfig::default();
        let mut y = z.clone();
        for _ in 0..k.unsigned_abs() {
            y = if k > 0 { map.step(&y).unwrap() } else { map.inverse(&y, &cfg).unwrap() };
        }
        let r = same_orbit(&map, &z, &y, 10, 1e-9, None, &cfg).unwrap();
        match r.verdict {
            OrbitVerdict::Yes { index, .. } => {
                // a periodic or fixed orbit can meet y at a smaller |k|
                prop_assert!(index.abs() <= k.abs());
            }
            other => prop_assert!(false, "{:?}", other),
        }
    }
}
