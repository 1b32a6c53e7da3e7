use cmotion::dynamics::{detect_fixed_point, InverseConfig};
use cmotion::maps::{local_diffeomorphism_spot_check, retract, riemannian_gradient};
use cmotion::objectives::{ObjectiveSpec, PayoffData, Region};
use cmotion::{Error, InverseStrategy, MapInstance, MapKind, State};

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

#[test]
fn gd_examples() {
    let q = MapInstance::gd(ObjectiveSpec::quadratic(2), 0.1).unwrap();
    assert!(close(q.step(&State::euclidean(vec![2.0, 0.0])).unwrap().coords(), &[1.8, 0.0], 1e-15));
    let dw = MapInstance::gd(ObjectiveSpec::double_well(1), 0.1).unwrap();
    assert_eq!(dw.step(&State::euclidean(vec![1.0])).unwrap().coords(), &[1.0]);
    assert!(close(dw.step(&State::euclidean(vec![0.5])).unwrap().coords(), &[0.5375], 1e-15));
    assert_eq!(dw.inverse_strategy(), InverseStrategy::Newton);
}

fn two_simplex(kind: MapKind, eps: f64) -> MapInstance {
    let obj = ObjectiveSpec::linear_on_simplices(vec![1.0, 0.0], vec![2]);
    match kind {
        MapKind::MwuExp => MapInstance::mwu_exp(obj, vec![2], vec![eps]).unwrap(),
        _ => MapInstance::mwu_lin(obj, vec![2], vec![eps]).unwrap(),
    }
}

#[test]
fn mwu_reweights_by_the_gradient() {
    let half = State::simplex(vec![0.5, 0.5], vec![2]).unwrap();
    let exp = two_simplex(MapKind::MwuExp, std::f64::consts::LN_2).step(&half).unwrap();
    assert!(close(exp.coords(), &[1.0 / 3.0, 2.0 / 3.0], 1e-15));
    let lin = two_simplex(MapKind::MwuLin, 0.5).step(&half).unwrap();
    assert!(close(lin.coords(), &[1.0 / 3.0, 2.0 / 3.0], 1e-15));
}

#[test]
fn mwu_fixes_vertices_and_constant_gradients() {
    for kind in [MapKind::MwuExp, MapKind::MwuLin] {
        let map = two_simplex(kind, 0.3);
        for v in [[1.0, 0.0], [0.0, 1.0]] {
            let e = State::simplex(v.to_vec(), vec![2]).unwrap();
            assert_eq!(map.step(&e).unwrap().coords(), &v);
        }
        let flat = ObjectiveSpec::linear_on_simplices(vec![0.4; 5], vec![3, 2]);
        let map = match kind {
            MapKind::MwuExp => MapInstance::mwu_exp(flat, vec![3, 2], vec![0.2, 0.7]).unwrap(),
            _ => MapInstance::mwu_lin(flat, vec![3, 2], vec![0.2, 0.7]).unwrap(),
        };
        let x = State::simplex(vec![0.2, 0.3, 0.5, 0.6, 0.4], vec![3, 2]).unwrap();
        assert!(close(map.step(&x).unwrap().coords(), x.coords(), 1e-15));
        assert!(detect_fixed_point(&map, &x, 1e-15).unwrap());
    }
}

#[test]
fn mwu_construction_checks() {
    let obj = ObjectiveSpec::quadratic(3).with_region(Region::SimplexProduct { blocks: vec![3] });
    assert!(matches!(MapInstance::mwu_exp(obj.clone(), vec![3], vec![0.0]), Err(Error::InvalidParameter(_))));
    assert!(MapInstance::mwu_lin(obj.clone(), vec![3], vec![0.1, 0.1]).is_err());
    assert!(MapInstance::mwu_exp(obj.clone(), vec![2], vec![0.1]).is_err());
    let map = MapInstance::mwu_exp(obj, vec![3], vec![0.1]).unwrap();
    assert!(local_diffeomorphism_spot_check(&map, 20, 1).unwrap());
    assert!(map.step(&State::euclidean(vec![0.2, 0.3, 0.5])).is_err());
}

#[test]
fn alt_play_examples() {
    let map = MapInstance::alt_play(PayoffData::scalar(1.0), 0.1, 0.2).unwrap();
    assert_eq!(map.step(&State::bipartite(&[60.0], &[-25.0])).unwrap().coords(), &[57.5, -13.5]);
    assert_eq!(map.step(&State::bipartite(&[0.0], &[0.0])).unwrap().coords(), &[0.0, 0.0]);
    // with y = 0 only y moves, by η₂·Aᵀx
    let y0 = map.step(&State::bipartite(&[3.0], &[0.0])).unwrap();
    assert!(close(y0.coords(), &[3.0, 0.6000000000000001], 0.0));
    assert_eq!(map.inverse(&y0, &InverseConfig::default()).unwrap().coords(), &[3.0, 0.0]);
    assert_eq!(map.inverse_strategy(), InverseStrategy::ClosedForm);
    assert!(map.is_linear());
    assert!(MapInstance::alt_play(PayoffData::scalar(1.0), 0.0, 0.2).is_err());
    assert!(MapInstance::alt_play(PayoffData::scalar(1.0), 0.1, f64::NAN).is_err());
    assert!(map.step(&State::euclidean(vec![1.0, 2.0])).is_err());
}

#[test]
fn sphere_examples() {
    let obj = ObjectiveSpec::linear(vec![1.0, 0.0]);
    let map = MapInstance::rgd_sphere(obj, 0.1, Some(1.0)).unwrap();
    let y = map.step(&State::sphere(vec![0.0, 1.0]).unwrap()).unwrap();
    let n = (1.0f64 + 0.01).sqrt();
    assert!(close(y.coords(), &[-0.1 / n, 1.0 / n], 1e-15));
    assert!((y.coords()[0] + 0.0995037190209989).abs() < 1e-15);

    // gradient parallel to x has no tangent part
    let aligned = MapInstance::rgd_sphere(ObjectiveSpec::linear(vec![0.0, 2.0]), 0.1, Some(1.0)).unwrap();
    let top = State::sphere(vec![0.0, 1.0]).unwrap();
    assert_eq!(aligned.step(&top).unwrap().coords(), top.coords());
    assert_eq!(riemannian_gradient(aligned.objective(), top.coords()), vec![0.0, 0.0]);
}

#[test]
fn retraction_axioms() {
    let x = [0.6, 0.0, 0.8];
    assert!(close(&retract(&x, &[0.0; 3]), &x, 1e-16));
    // first order: (Retr_x(h·s) − x)/h → s for tangent s
    let s = [0.8, 0.3, -0.6];
    for h in [1e-4, 1e-5, 1e-6] {
        let r = retract(&x, &s.map(|c| c * h));
        let fd: Vec<f64> = r.iter().zip(&x).map(|(a, b)| (a - b) / h).collect();
        assert!(close(&fd, &s, 10.0 * h), "h = {h}: {fd:?}");
    }
}

#[test]
fn out_of_range_step_sizes_are_flagged() {
    let obj = ObjectiveSpec::quadratic(3);
    assert!(MapInstance::rgd_sphere(obj.clone(), 0.4, Some(2.0)).unwrap().validation().validated);
    assert!(!MapInstance::rgd_sphere(obj.clone(), 0.5, Some(2.0)).unwrap().validation().validated);
    assert!(!MapInstance::gd(ObjectiveSpec::quadratic(2), 1.0).unwrap().validation().validated);
    let estimated = MapInstance::rgd_sphere(obj, 0.1, None).unwrap();
    assert!(estimated.validation().verdict.as_ref().unwrap().estimated);
}
