use std::f64::consts::FRAC_PI_2;

use proptest::prelude::*;
use rfclutter::formats::{parse_dem, parse_landcover, write_dem, write_landcover};
use rfclutter::scattering::{patch_power_scale, Band, LinkBudget, ScatteringTable};
use rfclutter::terrain::{
    build_patch_grid, grazing_angle, line_of_sight_between, line_of_sight_clipped, los_map, terrain_profile, ElevationGrid, GeoPoint, LandCover,
    LandCoverGrid, Vec3,
};
use rfclutter::Error;

fn stepped() -> ElevationGrid {
    let heights = (0..3).flat_map(|r| (0..4).map(move |c| (r * 10 + c * c) as f64)).collect();
    ElevationGrid::new(GeoPoint { lat_deg: 0.0, lon_deg: 0.0 }, 10.0, 3, 4, heights).unwrap()
}

#[test]
fn bilinear_heights_match_oracle() {
    let dem = stepped();
    assert!((dem.height(17.0, 12.0).unwrap() - 14.600000000000001).abs() < 1e-12);
    // The outer half-cell border holds the edge value.
    assert!((dem.height(33.0, 27.5).unwrap() - 8.0).abs() < 1e-12);
    assert_eq!(dem.height(0.0, 30.0).unwrap(), 0.0);
    assert!(matches!(dem.height(41.0, 5.0), Err(Error::Domain(_))));
}

#[test]
fn profile_endpoints_and_spacing() {
    let dem = stepped();
    let a = Vec3::new(2.0, 2.0, 0.0);
    let b = Vec3::new(38.0, 28.0, 0.0);
    let prof = terrain_profile(&dem, &a, &b, 3.0).unwrap();
    let d = (36.0f64).hypot(26.0);
    assert!((prof.last().unwrap().0 - d).abs() < 1e-12);
    assert_eq!(prof[0].0, 0.0);
    assert!(prof.windows(2).all(|w| w[1].0 - w[0].0 <= 3.0 + 1e-12));
}

#[test]
fn flat_patch_facing_up() {
    let dem = ElevationGrid::flat(10.0, 4, 6, 5.0).unwrap();
    let patches = build_patch_grid(&dem, &LandCoverGrid::uniform(&dem, LandCover::Forest), 10.0).unwrap();
    assert_eq!(patches.len(), 24);
    let p = &patches[9];
    assert!((grazing_angle(p, &(p.center + Vec3::new(0.0, 0.0, 100.0))).unwrap() - FRAC_PI_2).abs() < 1e-12);
    assert!((grazing_angle(p, &(p.center + Vec3::new(100.0, 0.0, 100.0))).unwrap() - FRAC_PI_2 / 2.0).abs() < 1e-12);
    assert!(los_map(&dem, &Vec3::new(30.0, -500.0, 100.0), &patches).iter().all(|v| *v));
}

#[test]
fn partial_edge_patches_cover_the_extent() {
    let dem = ElevationGrid::flat(10.0, 7, 5, 0.0).unwrap();
    let patches = build_patch_grid(&dem, &LandCoverGrid::uniform(&dem, LandCover::Grass), 30.0).unwrap();
    assert_eq!(patches.len(), 3 * 2);
    let area: f64 = patches.iter().map(|p| p.area).sum();
    assert!((area - 70.0 * 50.0).abs() < 1e-9);
}

#[test]
fn ascii_rasters_round_trip() {
    let dem = ElevationGrid::from_fn(25.0, 5, 7, |x, y| 0.01 * x * y - 3.25).unwrap();
    let mut buf = Vec::new();
    write_dem(&dem, &mut buf).unwrap();
    let back = parse_dem(std::str::from_utf8(&buf).unwrap(), "dem.asc").unwrap();
    assert_eq!(back, dem);
    let lc = LandCoverGrid::from_fn(&dem, |x, _| if x < 60.0 { LandCover::Water } else { LandCover::Urban });
    let mut buf = Vec::new();
    write_landcover(&lc, dem.origin, &mut buf).unwrap();
    assert_eq!(parse_landcover(std::str::from_utf8(&buf).unwrap(), "lc.asc").unwrap(), lc);
    assert!(parse_dem("nrows 2\nncols 2\ncellsize 1\n1 2\n3\n", "short").is_err());
}

#[test]
fn bistatic_power_matches_oracle() {
    let tx = Vec3::new(0.0, 0.0, 1000.0);
    let rx = Vec3::new(2000.0, 0.0, 1000.0);
    let p = Vec3::new(1000.0, 3000.0, 0.0);
    let g = patch_power_scale(&LinkBudget {
        sigma0: 0.05,
        area: 900.0,
        tx_gain: 3.0,
        rx_gain: 2.0,
        wavelength: 0.03,
        range_tx: (p - tx).norm(),
        range_rx: (p - rx).norm(),
        shadowed: false,
    })
    .unwrap();
    assert!(((g - 1.012025163645077e-18) / g).abs() < 1e-13);
}

#[test]
fn band_lookup() {
    assert_eq!(Band::from_carrier(10e9).unwrap(), Band::X);
    assert_eq!(Band::from_carrier(1.3e9).unwrap(), Band::L);
    assert_eq!(Band::from_carrier(35e9).unwrap(), Band::Ka);
    assert!(Band::from_carrier(20e9).is_err());
}

fn random_dem() -> impl Strategy<Value = ElevationGrid> {
    (2usize..12, 2usize..12, prop::collection::vec(0.0f64..50.0, 144)).prop_map(|(r, c, h)| {
        ElevationGrid::new(GeoPoint { lat_deg: 0.0, lon_deg: 0.0 }, 10.0, r, c, h[..r * c].to_vec()).unwrap()
    })
}

proptest! {
    #[test]
    fn los_is_symmetric(dem in random_dem(), fa in (0.0f64..1.0, 0.0f64..1.0, 0.0f64..80.0), fb in (0.0f64..1.0, 0.0f64..1.0, 0.0f64..80.0)) {
        let (w, h) = dem.extent();
        let a = Vec3::new(fa.0 * w, fa.1 * h, fa.2);
        let b = Vec3::new(fb.0 * w, fb.1 * h, fb.2);
        prop_assert_eq!(line_of_sight_between(&dem, &a, &b).unwrap(), line_of_sight_between(&dem, &b, &a).unwrap());
    }

    #[test]
    fn raising_the_observer_never_blocks(dem in random_dem(), fa in (0.0f64..1.0, 0.0f64..1.0, 0.0f64..80.0), fb in (0.0f64..1.0, 0.0f64..1.0), lift in 0.0f64..100.0) {
        let (w, h) = dem.extent();
        let b = Vec3::new(fb.0 * w, fb.1 * h, dem.height(fb.0 * w, fb.1 * h).unwrap());
        let low = Vec3::new(fa.0 * w, fa.1 * h, fa.2);
        let high = low + Vec3::new(0.0, 0.0, lift);
        if line_of_sight_clipped(&dem, &low, &b) {
            prop_assert!(line_of_sight_clipped(&dem, &high, &b));
        }
    }

    #[test]
    fn above_the_highest_point_everything_is_visible(dem in random_dem(), fb in (0.0f64..1.0, 0.0f64..1.0)) {
        let (w, h) = dem.extent();
        let top = dem.max_height() + 1.0;
        let a = Vec3::new(0.3 * w, 0.6 * h, top);
        let b = Vec3::new(fb.0 * w, fb.1 * h, top);
        prop_assert!(line_of_sight_between(&dem, &a, &b).unwrap());
    }

    #[test]
    fn patch_normals_are_unit_and_upward(dem in random_dem()) {
        let lc = LandCoverGrid::uniform(&dem, LandCover::Shrub);
        for p in build_patch_grid(&dem, &lc, 10.0).unwrap() {
            prop_assert!((p.normal.norm() - 1.0).abs() < 1e-12);
            prop_assert!(p.normal.z > 0.0);
            prop_assert!(p.area >= 100.0 - 1e-9);
        }
    }

    #[test]
    fn power_scale_is_linear_in_transmit_gain(k in 0.0f64..1e3, r in 10.0f64..1e5) {
        let base = LinkBudget { sigma0: 0.1, area: 50.0, tx_gain: 1.0, rx_gain: 4.0, wavelength: 0.03, range_tx: r, range_rx: 2.0 * r, shadowed: false };
        let g1 = patch_power_scale(&base).unwrap();
        let gk = patch_power_scale(&LinkBudget { tx_gain: k, ..base }).unwrap();
        prop_assert_eq!(gk, k * g1);
        let g2 = patch_power_scale(&LinkBudget { range_tx: 2.0 * r, range_rx: 4.0 * r, ..base }).unwrap();
        prop_assert!(((g1 / g2) - 16.0).abs() < 1e-10);
    }

    #[test]
    fn constant_gamma_grows_with_grazing(a in 0.0f64..FRAC_PI_2, b in 0.0f64..FRAC_PI_2) {
        let t = ScatteringTable::default_constant_gamma();
        for class in LandCover::ALL {
            let (sa, sb) = (t.sigma0(class, Band::X, a).unwrap(), t.sigma0(class, Band::X, b).unwrap());
            prop_assert!(sa >= 0.0);
            if a < b {
                prop_assert!(sa <= sb);
            }
        }
    }
}
