//! Golden-file parsing, bit-exact round trips and corrupt-input rejection for
//! COLMAP text, EDGC and PLY.

use std::path::PathBuf;

use edgs_init::camera::{load_colmap, write_colmap};
use edgs_init::correspondence::{
    decode, encode, read_corr, write_corr, CorrespondenceSet, MatchRecord, HEADER_LEN, RECORD_LEN,
};
use edgs_init::sh::ShCoefficients;
use edgs_init::splat::{read_ply, write_ply, SplatInit, PLY_PROPERTIES};
use edgs_init::synth::{make_scene, Layout};
use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use proptest::prelude::*;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

#[test]
fn colmap_golden_two_views() {
    let set = load_colmap(fixture("colmap_two")).unwrap();
    assert_eq!(set.len(), 2);
    let ids: Vec<u32> = set.iter().map(|v| v.id()).collect();
    assert_eq!(ids, vec![3, 7]);

    let left = set.get(3).unwrap();
    assert_eq!(left.image_name(), "left.jpg");
    let k = left.intrinsics();
    assert_eq!(
        (
            k.focal_x,
            k.focal_y,
            k.principal_x,
            k.principal_y,
            k.width,
            k.height
        ),
        (1100.5, 1098.25, 512.0, 384.0, 1024, 768)
    );
    assert_eq!(*left.rotation(), Matrix3::identity());
    assert_eq!(*left.translation(), Vector3::new(0.0, 0.0, 4.0));

    let right = set.get(7).unwrap();
    let k = right.intrinsics();
    assert_eq!((k.focal_x, k.focal_y), (500.0, 500.0));
    assert_eq!((k.principal_x, k.principal_y), (320.0, 240.0));
    // 90 degrees about +y
    let expected = Matrix3::new(0.0, 0.0, 1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0);
    assert!((right.rotation() - expected).amax() < 1e-15);
    assert_eq!(*right.translation(), Vector3::new(1.5, -0.25, 3.0));
}

#[test]
fn colmap_write_then_load() {
    let scene = make_scene(10, 5, Layout::Arc, 4).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_colmap(&scene.cameras, dir.path()).unwrap();
    let back = load_colmap(dir.path()).unwrap();
    assert_eq!(back.len(), scene.cameras.len());
    for (a, b) in scene.cameras.iter().zip(back.iter()) {
        assert_eq!(a.id(), b.id());
        assert_eq!(a.image_name(), b.image_name());
        assert_eq!(a.intrinsics(), b.intrinsics());
        assert!((a.rotation() - b.rotation()).amax() < 1e-14);
        assert_eq!(a.translation(), b.translation());
    }
}

#[test]
fn edgc_golden_two_records() {
    let set = read_corr(fixture("two_records.edgc")).unwrap();
    assert_eq!((set.ref_view_id, set.nbr_view_id), (3, 7));
    assert_eq!((set.ref_size, set.nbr_size), ((1024, 768), (640, 480)));
    assert_eq!(
        set.records,
        vec![
            MatchRecord {
                u_i: 10.5,
                v_i: 20.25,
                u_j: 30.0,
                v_j: 40.75,
                confidence: 0.5
            },
            MatchRecord {
                u_i: 1023.0,
                v_i: 767.5,
                u_j: 0.0,
                v_j: 0.125,
                confidence: 1.0
            },
        ]
    );
    let bytes = std::fs::read(fixture("two_records.edgc")).unwrap();
    assert_eq!(encode(&set), bytes);
}

#[test]
fn edgc_sizes() {
    let empty = CorrespondenceSet::new(1, 2, (8, 8), (8, 8), vec![]).unwrap();
    assert_eq!(encode(&empty).len(), HEADER_LEN);
    let rec = MatchRecord {
        u_i: 1.0,
        v_i: 1.0,
        u_j: 1.0,
        v_j: 1.0,
        confidence: 0.5,
    };
    let three = CorrespondenceSet::new(1, 2, (8, 8), (8, 8), vec![rec; 3]).unwrap();
    assert_eq!(encode(&three).len(), HEADER_LEN + 3 * RECORD_LEN);
    assert_eq!(HEADER_LEN, 30);
    assert_eq!(RECORD_LEN, 20);
}

#[test]
fn edgc_corrupt_inputs() {
    let good = std::fs::read(fixture("two_records.edgc")).unwrap();

    let mut magic = good.clone();
    magic[..4].copy_from_slice(b"XXXX");
    assert_eq!(decode(&magic).unwrap_err().to_string(), "not an EDGC file");

    // declared 10, payload 9
    let rec = MatchRecord {
        u_i: 1.0,
        v_i: 2.0,
        u_j: 3.0,
        v_j: 4.0,
        confidence: 0.5,
    };
    let nine = CorrespondenceSet::new(1, 2, (8, 8), (8, 8), vec![rec; 9]).unwrap();
    let mut bytes = encode(&nine);
    bytes[22..30].copy_from_slice(&10u64.to_le_bytes());
    assert_eq!(decode(&bytes).unwrap_err().to_string(), "truncated file");

    let mut short = good.clone();
    short.pop();
    assert_eq!(decode(&short).unwrap_err().to_string(), "truncated file");

    let mut conf = good.clone();
    let off = HEADER_LEN + RECORD_LEN + 16;
    conf[off..off + 4].copy_from_slice(&(-0.25f32).to_le_bytes());
    assert_eq!(
        decode(&conf).unwrap_err().to_string(),
        "corrupt record at index 1"
    );

    let mut nan = good.clone();
    nan[HEADER_LEN..HEADER_LEN + 4].copy_from_slice(&f32::NAN.to_le_bytes());
    assert_eq!(
        decode(&nan).unwrap_err().to_string(),
        "corrupt record at index 0"
    );

    let mut outside = good;
    outside[HEADER_LEN..HEADER_LEN + 4].copy_from_slice(&2000f32.to_le_bytes());
    assert!(decode(&outside).is_err());
}

fn splat_with(sh: ShCoefficients) -> SplatInit {
    SplatInit {
        position: Vector3::new(0.25, -1.5, 3.0),
        sh,
        opacity_logit: -2.1972245773362196,
        scale_log: Vector3::new(-6.0, -6.5, -7.0),
        rotation: UnitQuaternion::from_quaternion(Quaternion::new(0.9, 0.1, -0.2, 0.3)),
    }
}

#[test]
fn ply_f_rest_channel_major_layout() {
    let mut sh = ShCoefficients::zeros();
    sh.0[(0, 0)] = -1.0;
    sh.0[(0, 1)] = -2.0;
    sh.0[(0, 2)] = -3.0;
    // coefficient 1 = (1, 2, 3), coefficient 2 = (4, 5, 6)
    for c in 0..3 {
        sh.0[(1, c)] = (c + 1) as f64;
        sh.0[(2, c)] = (c + 4) as f64;
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("layout.ply");
    write_ply(&[splat_with(sh)], &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    let header_end = bytes
        .windows(11)
        .position(|w| w == b"end_header\n")
        .unwrap()
        + 11;
    let header = std::str::from_utf8(&bytes[..header_end]).unwrap();
    let props: Vec<&str> = header
        .lines()
        .filter_map(|l| l.strip_prefix("property float "))
        .collect();
    assert_eq!(props.len(), PLY_PROPERTIES);
    let value = |name: &str| {
        let i = props.iter().position(|p| *p == name).unwrap();
        let o = header_end + i * 4;
        f32::from_le_bytes(bytes[o..o + 4].try_into().unwrap())
    };
    assert_eq!(
        [value("f_dc_0"), value("f_dc_1"), value("f_dc_2")],
        [-1.0, -2.0, -3.0]
    );
    assert_eq!(value("f_rest_0"), 1.0);
    assert_eq!(value("f_rest_1"), 4.0);
    assert_eq!(value("f_rest_15"), 2.0);
    assert_eq!(value("f_rest_16"), 5.0);
    assert_eq!(value("f_rest_30"), 3.0);
    assert_eq!(value("f_rest_31"), 6.0);
    assert_eq!(value("f_rest_2"), 0.0);
    assert_eq!([value("nx"), value("ny"), value("nz")], [0.0; 3]);
    let q = UnitQuaternion::from_quaternion(Quaternion::new(0.9, 0.1, -0.2, 0.3));
    assert_eq!(value("rot_0"), q.w as f32);
    assert_eq!(value("rot_3"), q.k as f32);
    assert_eq!(value("scale_1"), -6.5);
}

#[test]
fn ply_exact_header_text() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.ply");
    write_ply(&vec![splat_with(ShCoefficients::zeros()); 3], &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    let mut expected = String::from("ply\nformat binary_little_endian 1.0\nelement vertex 3\n");
    let mut names: Vec<String> = ["x", "y", "z", "nx", "ny", "nz"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    names.extend((0..3).map(|i| format!("f_dc_{i}")));
    names.extend((0..45).map(|i| format!("f_rest_{i}")));
    names.push("opacity".into());
    names.extend((0..3).map(|i| format!("scale_{i}")));
    names.extend((0..4).map(|i| format!("rot_{i}")));
    for n in names {
        expected += &format!("property float {n}\n");
    }
    expected += "end_header\n";
    assert_eq!(&bytes[..expected.len()], expected.as_bytes());
    assert_eq!(bytes.len(), expected.len() + 3 * 62 * 4);
}

fn f32_exact(x: f64) -> f64 {
    x as f32 as f64
}

prop_compose! {
    fn arb_splat()(
        p in prop::array::uniform3(-100f64..100.0),
        sh in prop::collection::vec(-3f64..3.0, 48),
        op in -8f64..8.0,
        s in prop::array::uniform3(-12f64..2.0),
        q in prop::array::uniform4(-1f64..1.0),
    ) -> SplatInit {
        let quat = Quaternion::new(q[0], q[1], q[2], q[3] + 2.0);
        let unit = UnitQuaternion::from_quaternion(quat);
        let qq = unit.quaternion();
        SplatInit {
            position: Vector3::from(p.map(f32_exact)),
            sh: ShCoefficients(nalgebra::SMatrix::from_fn(|r, c| f32_exact(sh[r * 3 + c]))),
            opacity_logit: f32_exact(op),
            scale_log: Vector3::from(s.map(f32_exact)),
            rotation: UnitQuaternion::new_unchecked(Quaternion::new(
                f32_exact(qq.w), f32_exact(qq.i), f32_exact(qq.j), f32_exact(qq.k),
            )),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ply_round_trip_is_field_exact(splats in prop::collection::vec(arb_splat(), 1..20)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.ply");
        write_ply(&splats, &path).unwrap();
        let back = read_ply(&path).unwrap();
        prop_assert_eq!(&back, &splats);
        for s in &back {
            prop_assert!(s.validate().is_ok());
        }
        let path2 = dir.path().join("rt2.ply");
        write_ply(&back, &path2).unwrap();
        prop_assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }
}

#[test]
fn ply_corrupt_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.ply");
    write_ply(&[splat_with(ShCoefficients::zeros())], &path).unwrap();
    let mut bytes = std::fs::read(&path).unwrap();
    bytes.pop();
    std::fs::write(&path, &bytes).unwrap();
    assert!(read_ply(&path).is_err());
    std::fs::write(&path, b"ply\nformat ascii 1.0\nend_header\n").unwrap();
    assert!(read_ply(&path).is_err());
    std::fs::write(&path, b"not a ply").unwrap();
    assert!(read_ply(&path).is_err());
}

#[test]
fn edgc_file_round_trip_via_disk() {
    let dir = tempfile::tempdir().unwrap();
    let set = read_corr(fixture("two_records.edgc")).unwrap();
    let path = dir.path().join("x.edgc");
    write_corr(&set, &path).unwrap();
    assert_eq!(
        std::fs::read(&path).unwrap(),
        std::fs::read(fixture("two_records.edgc")).unwrap()
    );
}
