mod common;

use ceenet::ingest::haversine_km;
use proptest::prelude::*;

#[test]
fn warsaw_budapest() {
    let d = haversine_km(52.2297, 21.0122, 47.4979, 19.0402);
    assert!((d - 545.0).abs() <= 5.0, "{d}");
    assert!((d - common::chord_distance_km(52.2297, 21.0122, 47.4979, 19.0402)).abs() < 1e-6);
}

#[test]
fn antipodes() {
    let d = haversine_km(10.0, 20.0, -10.0, -160.0);
    assert!((d - 20015.1).abs() <= 0.1, "{d}");
}

proptest! {
    #[test]
    fn symmetric_and_matches_chord_formula(
        lat1 in -90.0f64..=90.0, lon1 in -180.0f64..=180.0,
        lat2 in -90.0f64..=90.0, lon2 in -180.0f64..=180.0,
    ) {
        let d = haversine_km(lat1, lon1, lat2, lon2);
        prop_assert_eq!(d, haversine_km(lat2, lon2, lat1, lon1));
        prop_assert!((d - common::chord_distance_km(lat1, lon1, lat2, lon2)).abs() < 1e-6);
        prop_assert!((0.0..=20015.2).contains(&d));
    }
}
