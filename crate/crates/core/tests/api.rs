use medjn::{
    canonical_function, cantor_space, grid_boman_decomposition, grid_space, jn_median_norm, maximal_median,
    median_oscillation, verify_boman, BomanDecomposition, FunctionKind, MetricInput, PackingOptions, SampleFunction,
    Space, WeightProfile,
};

fn two_point() -> (Space, SampleFunction) {
    let space = Space::new(
        vec!["a".into(), "b".into()],
        vec![1.0, 1.0],
        MetricInput::Euclidean(vec![vec![0.0], vec![1.0]]),
    )
    .unwrap();
    let f = SampleFunction::new(&space, vec![0.0, 1.0]).unwrap();
    (space, f)
}

#[test]
fn two_point_values() {
    let (space, f) = two_point();
    assert_eq!(maximal_median(&space, &f, &space.all(), 0.5).unwrap(), 1.0);
    let norm = jn_median_norm(&space, &f, &space.all(), 2.0, 0.5, PackingOptions::exact()).unwrap();
    assert!((norm.norm - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    let osc = median_oscillation(&space, &f, &space.all(), 0.5).unwrap();
    assert!((osc.value - 0.5).abs() < 1e-12);
}

#[test]
fn json_round_trips() {
    let space = cantor_space(4, 8.0, WeightProfile::Random { seed: 9 }).unwrap();
    let back = Space::from_json(&space.to_json().to_string()).unwrap();
    assert_eq!(back.to_json(), space.to_json());

    let f = canonical_function(&FunctionKind::RandomPiecewise { pieces: 3 }, &space, 4).unwrap();
    let g = SampleFunction::from_json(&space, &f.to_json(&space).to_string()).unwrap();
    assert_eq!(g.values(), f.values());

    let grid = grid_space(1, 32, 1.0, WeightProfile::Uniform).unwrap();
    let whole = grid.ball(0, grid.full_radius()).unwrap();
    let dec = grid_boman_decomposition(&grid, &whole, 1.5).unwrap();
    let text = dec.to_json(&grid).to_string();
    let dec2 = BomanDecomposition::from_json(&grid, &text).unwrap();
    assert_eq!(dec2.to_json(&grid), dec.to_json(&grid));
    assert!(verify_boman(&grid, &dec2).pass);
}

#[test]
fn malformed_inputs_are_rejected() {
    assert!(Space::from_json("{}").is_err());
    let (space, _) = two_point();
    assert!(SampleFunction::from_json(&space, r#"{"values": {"a": 1.0}}"#).is_err());
    assert!(SampleFunction::from_json(&space, r#"{"values": {"a": 1.0, "b": 2.0, "c": 3.0}}"#).is_err());
    let f = SampleFunction::new(&space, vec![0.0, 1.0]).unwrap();
    assert!(maximal_median(&space, &f, &space.all(), 0.0).is_err());
}
