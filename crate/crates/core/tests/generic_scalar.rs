use spacelike::graphgeom::{point_geometry, GraphMap};
use spacelike::lagrangian::{lagrangian_forms, Potential};

#[test]
fn hyperboloid_in_single_precision() {
    let map: GraphMap<f32> = GraphMap::parse(2, &["sqrt(1 + x1^2 + x2^2)"]).unwrap();
    let pg = point_geometry(&map, &[0.3f32, -0.2]).unwrap();
    assert!((pg.forms.h_norm - 1.0).abs() < 1e-4);
    assert!((pg.forms.s - 2.0).abs() < 1e-4);
}

#[test]
fn single_and_double_precision_agree() {
    let f32_map: GraphMap<f32> = GraphMap::parse(2, &["0.2*x1^3 - 0.1*x1*x2 + 0.3*x2^2"]).unwrap();
    let f64_map: spacelike::GraphMap = GraphMap::parse(2, &["0.2*x1^3 - 0.1*x1*x2 + 0.3*x2^2"]).unwrap();
    let a = point_geometry(&f32_map, &[0.4f32, 0.1]).unwrap();
    let b = point_geometry(&f64_map, &[0.4f64, 0.1]).unwrap();
    assert!((a.forms.s as f64 - b.forms.s).abs() < 1e-4 * (1.0 + b.forms.s));
}

#[test]
fn lagrangian_in_single_precision() {
    let p: Potential<f32> = Potential::parse(2, "0.5*(x1^2 + x2^2)").unwrap();
    let lf = lagrangian_forms(&p, &[0.2f32, 0.7]).unwrap();
    assert!(lf.s.abs() < 1e-6);
}
