//! COLMAP text export reader and writer (`cameras.txt`, `images.txt`).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{Quaternion, Rotation3, UnitQuaternion, Vector3};

use super::{CameraSet, CameraView, Intrinsics};
use crate::{Error, Result};

const DISTORTED_MODELS: &[&str] = &[
    "SIMPLE_RADIAL",
    "RADIAL",
    "OPENCV",
    "OPENCV_FISHEYE",
    "FULL_OPENCV",
    "FOV",
    "SIMPLE_RADIAL_FISHEYE",
    "RADIAL_FISHEYE",
    "THIN_PRISM_FISHEYE",
];

fn parse_err(file: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        file: file.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn field<T: std::str::FromStr>(file: &Path, line: usize, token: &str, name: &str) -> Result<T> {
    token
        .parse()
        .map_err(|_| parse_err(file, line, format!("invalid {name} `{token}`")))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_cameras(path: &Path, text: &str) -> Result<HashMap<u32, Intrinsics>> {
    let mut cams = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        if tok.len() < 4 {
            return Err(parse_err(
                path,
                line_no,
                "expected CAMERA_ID MODEL WIDTH HEIGHT PARAMS...",
            ));
        }
        let id: u32 = field(path, line_no, tok[0], "camera id")?;
        let model = tok[1];
        let width: u32 = field(path, line_no, tok[2], "width")?;
        let height: u32 = field(path, line_no, tok[3], "height")?;
        let params = tok[4..]
            .iter()
            .map(|t| field::<f64>(path, line_no, t, "camera parameter"))
            .collect::<Result<Vec<_>>>()?;
        let (fx, fy, cx, cy) = match model {
            "PINHOLE" => match params[..] {
                [fx, fy, cx, cy] => (fx, fy, cx, cy),
                _ => return Err(parse_err(path, line_no, "PINHOLE expects 4 parameters")),
            },
            "SIMPLE_PINHOLE" => match params[..] {
                [f, cx, cy] => (f, f, cx, cy),
                _ => {
                    return Err(parse_err(
                        path,
                        line_no,
                        "SIMPLE_PINHOLE expects 3 parameters",
                    ))
                }
            },
            m if DISTORTED_MODELS.contains(&m) => {
                return Err(parse_err(
                    path,
                    line_no,
                    format!(
                        "unsupported camera model {m}: undistort the images first \
                         (e.g. `colmap image_undistorter`); only PINHOLE and SIMPLE_PINHOLE are accepted"
                    ),
                ))
            }
            m => {
                return Err(parse_err(
                    path,
                    line_no,
                    format!("unsupported camera model {m}"),
                ))
            }
        };
        let intr = Intrinsics {
            focal_x: fx,
            focal_y: fy,
            principal_x: cx,
            principal_y: cy,
            width,
            height,
        };
        if cams.insert(id, intr).is_some() {
            return Err(parse_err(
                path,
                line_no,
                format!("duplicate camera id {id}"),
            ));
        }
    }
    Ok(cams)
}

fn parse_images(
    path: &Path,
    text: &str,
    cams: &HashMap<u32, Intrinsics>,
    cameras_path: &Path,
) -> Result<Vec<CameraView>> {
    let mut views = Vec::new();
    let mut expect_points = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if raw.trim_start().starts_with('#') {
            continue;
        }
        // Every image line is followed by one POINTS2D line, possibly blank.
        if expect_points {
            expect_points = false;
            continue;
        }
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let tok: Vec<&str> = line.splitn(10, char::is_whitespace).collect();
        if tok.len() < 10 {
            return Err(parse_err(
                path,
                line_no,
                "expected IMAGE_ID QW QX QY QZ TX TY TZ CAMERA_ID NAME",
            ));
        }
        let id: u32 = field(path, line_no, tok[0], "image id")?;
        let mut q = [0.0f64; 4];
        for (k, t) in tok[1..5].iter().enumerate() {
            q[k] = field(path, line_no, t, "quaternion component")?;
        }
        let mut t = [0.0f64; 3];
        for (k, tk) in tok[5..8].iter().enumerate() {
            t[k] = field(path, line_no, tk, "translation component")?;
        }
        let cam_id: u32 = field(path, line_no, tok[8], "camera id")?;
        let name = tok[9].trim();
        let quat = Quaternion::new(q[0], q[1], q[2], q[3]);
        if !q.iter().all(|v| v.is_finite()) || quat.norm() <= 1e-12 {
            return Err(parse_err(path, line_no, "degenerate quaternion"));
        }
        let rotation = UnitQuaternion::from_quaternion(quat)
            .to_rotation_matrix()
            .into_inner();
        let intr = cams.get(&cam_id).ok_or_else(|| {
            parse_err(
                path,
                line_no,
                format!(
                    "camera id {cam_id} not defined in {}",
                    cameras_path.display()
                ),
            )
        })?;
        let view = CameraView::new(id, name, rotation, Vector3::from(t), *intr)
            .map_err(|e| parse_err(path, line_no, e.to_string()))?;
        views.push(view);
        expect_points = true;
    }
    Ok(views)
}

/// Reads `cameras.txt` and `images.txt` from `dir`. Views are ordered by image id.
pub fn load_colmap(dir: impl AsRef<Path>) -> Result<CameraSet> {
    let dir = dir.as_ref();
    let cameras_path = dir.join("cameras.txt");
    let images_path = dir.join("images.txt");
    let cams = parse_cameras(&cameras_path, &read_text(&cameras_path)?)?;
    let mut views = parse_images(
        &images_path,
        &read_text(&images_path)?,
        &cams,
        &cameras_path,
    )?;
    if views.is_empty() {
        return Err(Error::NoRegisteredImages);
    }
    views.sort_by_key(|v| v.id());
    CameraSet::new(views)
}

/// Writes one PINHOLE camera per view (camera id = view id) and the matching
/// image entries with empty 2D-point lines.
pub fn write_colmap(set: &CameraSet, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut cameras = String::from(
        "# Camera list with one line of data per camera:\n\
         #   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n",
    );
    let mut images = String::from(
        "# Image list with two lines of data per image:\n\
         #   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n\
         #   POINTS2D[] as (X, Y, POINT3D_ID)\n",
    );
    for v in set {
        let k = v.intrinsics();
        let _ = writeln!(
            cameras,
            "{} PINHOLE {} {} {} {} {} {}",
            v.id(),
            k.width,
            k.height,
            k.focal_x,
            k.focal_y,
            k.principal_x,
            k.principal_y
        );
        let q =
            UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(*v.rotation()));
        let t = v.translation();
        let _ = writeln!(
            images,
            "{} {} {} {} {} {} {} {} {} {}\n",
            v.id(),
            q.w,
            q.i,
            q.j,
            q.k,
            t.x,
            t.y,
            t.z,
            v.id(),
            v.image_name()
        );
    }
    let write = |p: PathBuf, s: &str| fs::write(&p, s).map_err(|e| Error::io(p, e));
    write(dir.join("cameras.txt"), &cameras)?;
    write(dir.join("images.txt"), &images)
}
