use edt::edtg::{EdtgFile, Kind};
use edt::grids::*;
use edt::parallel::{forward_full_par, solve_parameters_par};
use edt_core::elastic::{Background, Side};
use edt_core::forward::{Excitation, Pose, XiGrid};
use edt_core::inversion::{accumulate, samples_from_mode_grid, KGrid, SampleWeight, SolveConfig, VolumeGrid};
use edt_core::linalg::C64;
use edt_core::modesep::{separate_all, SepConfig};
use edt_core::phantom::{GaussianBlob, IncidentWave, Phantom};
use proptest::prelude::*;
use serde_json::Map;

fn rewrite(f: &EdtgFile) -> (Vec<u8>, EdtgFile) {
    let b = f.to_bytes().unwrap();
    let g = EdtgFile::from_bytes(&b).unwrap();
    assert_eq!(g.to_bytes().unwrap(), b, "write → read → write must be byte-identical");
    assert_eq!(g.crc(), f.crc());
    (b, g)
}

fn plane(side: Side, wave: IncidentWave) -> edt_core::forward::MeasurementPlane {
    let bg = Background::new(1.0, 1.0, 1.0, 3.0).unwrap();
    let b = GaussianBlob { center: [0.1, 0.0, -0.05], sigma: 0.2, amp_mu: 0.1, amp_lambda: 0.05, amp_rho: 0.08 };
    let ph = Phantom::new(vec![b], 1.0).unwrap();
    let pose = Pose { axis: [1.0, 0.0, 0.0], theta: 0.3 };
    forward_full_par(&ph, &Excitation::single(wave), &bg, side, 2.0, XiGrid::midpoint(20, 3.2), pose).unwrap()
}

#[test]
fn planes_and_mode_grids_round_trip() {
    for (side, wave) in [
        (Side::Transmission, IncidentWave::p(1.0).unwrap()),
        (Side::Reflection, IncidentWave::s(0.6, -0.8).unwrap()),
    ] {
        let p = plane(side, wave);
        let (b, g) = rewrite(&plane_to_edtg(&p).unwrap());
        assert_eq!(b[8], Kind::Plane as u8);
        assert_eq!(plane_from_edtg(&g).unwrap(), p);
        for m in separate_all(&p, SepConfig::default()).unwrap() {
            let (b, g) = rewrite(&mode_grid_to_edtg(&m).unwrap());
            assert_eq!(b[8], Kind::ModeGrid as u8);
            let back = mode_grid_from_edtg(&g).unwrap();
            assert_eq!(back.tag, m.tag);
            assert_eq!(back.values, m.values);
            assert_eq!(back.mask, m.mask);
            assert_eq!((back.bg, back.side, back.pose, back.wave, back.r_m), (m.bg, m.side, m.pose, m.wave, m.r_m));
            for (a, c) in back.locus.iter().zip(&m.locus) {
                assert!(a.iter().zip(c).all(|(x, y)| x.to_bits() == y.to_bits()));
            }
        }
    }
}

#[test]
fn solved_grids_volumes_and_occupancy_round_trip() {
    let p = plane(Side::Transmission, IncidentWave::p(1.0).unwrap());
    let mut kg = KGrid::new(8, 6.0).unwrap();
    for m in separate_all(&p, SepConfig::default()).unwrap() {
        accumulate(&samples_from_mode_grid(&m, SampleWeight::Area).unwrap(), &mut kg);
    }
    let solved = solve_parameters_par(&kg, SolveConfig::default());
    let (_, g) = rewrite(&solved_to_edtg(&solved, Map::new()).unwrap());
    let (grid, comps) = solved_from_edtg(&g).unwrap();
    assert_eq!((grid.n, grid.dy), (kg.n, kg.dy));
    for (v, c) in solved.voxels.iter().zip(&comps) {
        assert_eq!(&v.components(), c);
    }
    assert!(comps.iter().any(|c| c[0].is_none()), "undetermined voxels are stored as NaN");

    let vol = VolumeGrid { n: 6, dr: 0.5 };
    let vals: Vec<C64> = (0..vol.len()).map(|i| C64::new(i as f64, -0.5 * i as f64)).collect();
    let (b, g) = rewrite(&volume_to_edtg(&vals, vol, 1, Map::new()).unwrap());
    assert_eq!(b[8], Kind::Volume as u8);
    assert_eq!(volume_from_edtg(&g).unwrap(), (vol, vals));

    let mask: Vec<bool> = (0..216).map(|i| i % 3 == 0).collect();
    let (b, g) = rewrite(&occupancy_to_edtg(&mask, 6, 0.25, Map::new()).unwrap());
    assert_eq!(b[8], Kind::Occupancy as u8);
    assert_eq!(occupancy_from_edtg(&g).unwrap(), mask);
}

#[test]
fn files_on_disk_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.edtg");
    let f = plane_to_edtg(&plane(Side::Reflection, IncidentWave::p(-1.0).unwrap())).unwrap();
    f.write(&path).unwrap();
    let g = EdtgFile::read(&path).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), g.to_bytes().unwrap());
    // no temp files left behind
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

proptest! {
    #[test]
    fn arbitrary_real_grids_round_trip(
        dims in proptest::collection::vec(1u32..5, 1..4),
        seed in any::<u64>(),
        note in "[a-z]{0,8}",
    ) {
        let n: usize = dims.iter().map(|d| *d as usize).product();
        let vals: Vec<f64> = (0..n).map(|i| f64::from_bits(seed.rotate_left(i as u32) >> 2)).collect();
        let r = dims.len();
        let mut m = Map::new();
        m.insert("note".into(), note.into());
        m.insert("x".into(), serde_json::json!(0.1 + seed as f64 * 1e-7));
        let f = EdtgFile::real(Kind::Volume, dims, vec![0.1; r], vec![-0.3; r], m, &vals).unwrap();
        let b = f.to_bytes().unwrap();
        let g = EdtgFile::from_bytes(&b).unwrap();
        prop_assert_eq!(&g, &f);
        prop_assert_eq!(g.to_bytes().unwrap(), b);
    }
}
