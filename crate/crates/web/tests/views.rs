use qkd_web::{chsh_curve, plate_view, session_view};

#[test]
fn thick_plate_gives_separable_bars() {
    let v = plate_view(8.0, 0.0, 0.0).unwrap();
    assert!((v.delay_fs - 207.0).abs() < 1.0);
    assert!(v.gamma > 0.999);
    assert_eq!(v.bars.len(), 16);
    let corner = v
        .bars
        .iter()
        .find(|b| b.row == "HH" && b.col == "VV")
        .unwrap();
    assert!(corner.value.abs() < 1e-3);
    assert!(v.tangle < 1e-3 && v.chsh <= 2.0);
}

#[test]
fn no_plate_is_the_bell_state() {
    let v = plate_view(0.0, 0.0, 0.0).unwrap();
    assert_eq!(v.gamma, 0.0);
    assert!((v.tangle - 1.0).abs() < 1e-9);
    assert!((v.chsh - 2.0 * 2f64.sqrt()).abs() < 1e-9);
    assert!(plate_view(-1.0, 0.0, 0.0).is_err());
    assert!(plate_view(1.0, 0.0, 2.0).is_err());
}

#[test]
fn chsh_falls_with_thickness() {
    let curve = chsh_curve(8.0, 45.0, 0.0, 9).unwrap();
    assert_eq!(curve.len(), 9);
    assert!(curve.windows(2).all(|w| w[1].s <= w[0].s + 1e-12));
    assert!(curve[0].s > 2.8 && curve[8].s < 2.0);
    assert!(chsh_curve(0.0, 0.0, 0.0, 9).is_err());
}

#[test]
fn sessions_detect_interception() {
    let clean = session_view(5000, 0.0, 0.0, 0.0, 1).unwrap();
    assert!(!clean.aborted && clean.final_key_bits > 0);
    let tapped = session_view(5000, 1.0, 0.0, 0.0, 1).unwrap();
    assert!(tapped.aborted && tapped.final_key_bits == 0);
    let json = serde_json::to_string(&clean).unwrap();
    assert!(json.contains("\"final_key_hex\""));
}
