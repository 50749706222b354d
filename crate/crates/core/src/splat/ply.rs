//! Binary little-endian PLY export in the layout splat trainers consume.
//!
//! Per vertex, 62 `float` properties: `x y z`, `nx ny nz` (zero), `f_dc_0..2`,
//! `f_rest_0..44` stored channel-major (`f_rest_{c*15 + k-1}` holds
//! coefficient `k` of channel `c`), `opacity`, `scale_0..2` (log) and
//! `rot_0..3` (quaternion `w, x, y, z`).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{Quaternion, SMatrix, UnitQuaternion, Vector3};

use super::SplatInit;
use crate::sh::{ShCoefficients, SH_COEFFS};
use crate::{Error, Result};

pub const PLY_PROPERTIES: usize = 62;

fn property_names() -> Vec<String> {
    let mut names: Vec<String> = ["x", "y", "z", "nx", "ny", "nz"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    names.extend((0..3).map(|i| format!("f_dc_{i}")));
    names.extend((0..3 * (SH_COEFFS - 1)).map(|i| format!("f_rest_{i}")));
    names.push("opacity".into());
    names.extend((0..3).map(|i| format!("scale_{i}")));
    names.extend((0..4).map(|i| format!("rot_{i}")));
    names
}

fn header(count: usize) -> String {
    let mut h = format!("ply\nformat binary_little_endian 1.0\nelement vertex {count}\n");
    for name in property_names() {
        h.push_str("property float ");
        h.push_str(&name);
        h.push('\n');
    }
    h.push_str("end_header\n");
    h
}

fn vertex(s: &SplatInit) -> [f32; PLY_PROPERTIES] {
    let mut v = [0f32; PLY_PROPERTIES];
    v[0] = s.position.x as f32;
    v[1] = s.position.y as f32;
    v[2] = s.position.z as f32;
    for c in 0..3 {
        v[6 + c] = s.sh.0[(0, c)] as f32;
        for k in 1..SH_COEFFS {
            v[9 + c * (SH_COEFFS - 1) + (k - 1)] = s.sh.0[(k, c)] as f32;
        }
    }
    v[54] = s.opacity_logit as f32;
    for i in 0..3 {
        v[55 + i] = s.scale_log[i] as f32;
    }
    let q = s.rotation.quaternion();
    v[58] = q.w as f32;
    v[59] = q.i as f32;
    v[60] = q.j as f32;
    v[61] = q.k as f32;
    v
}

pub fn write_ply(splats: &[SplatInit], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if splats.is_empty() {
        return Err(Error::Ply("refusing to write an empty splat list".into()));
    }
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    w.write_all(header(splats.len()).as_bytes()).map_err(io)?;
    for s in splats {
        for f in vertex(s) {
            w.write_all(&f.to_le_bytes()).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

/// Reads a PLY produced by [`write_ply`] (or any binary little-endian vertex
/// list whose float properties include the same names, in any order).
pub fn read_ply(path: impl AsRef<Path>) -> Result<Vec<SplatInit>> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut r = BufReader::new(File::open(path).map_err(io)?);
    let mut line = String::new();
    let mut next_line = |r: &mut BufReader<File>| -> Result<String> {
        line.clear();
        if r.read_line(&mut line).map_err(io)? == 0 {
            return Err(Error::Ply("unexpected end of header".into()));
        }
        Ok(line.trim_end().to_string())
    };
    if next_line(&mut r)? != "ply" {
        return Err(Error::Ply("missing `ply` magic".into()));
    }
    let mut count: Option<usize> = None;
    let mut props: Vec<String> = Vec::new();
    loop {
        let l = next_line(&mut r)?;
        let tok: Vec<&str> = l.split_whitespace().collect();
        match tok.as_slice() {
            ["end_header"] => break,
            ["format", "binary_little_endian", "1.0"] => {}
            ["format", other, ..] => {
                return Err(Error::Ply(format!("unsupported format {other}")));
            }
            ["comment", ..] | ["obj_info", ..] => {}
            ["element", "vertex", n] => {
                count = Some(
                    n.parse()
                        .map_err(|_| Error::Ply(format!("bad vertex count `{n}`")))?,
                );
            }
            ["element", other, ..] => {
                return Err(Error::Ply(format!("unsupported element {other}")));
            }
            ["property", "float", name] => props.push(name.to_string()),
            ["property", ty, ..] => {
                return Err(Error::Ply(format!("unsupported property type {ty}")));
            }
            _ => return Err(Error::Ply(format!("unexpected header line `{l}`"))),
        }
    }
    let count = count.ok_or_else(|| Error::Ply("no vertex element".into()))?;
    let index = |name: &str| -> Result<usize> {
        props
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| Error::Ply(format!("missing property {name}")))
    };
    let expected = property_names();
    let slots: Vec<usize> = expected.iter().map(|n| index(n)).collect::<Result<_>>()?;

    let stride = props.len() * 4;
    let mut body = Vec::new();
    r.read_to_end(&mut body).map_err(io)?;
    if Some(body.len()) != count.checked_mul(stride) {
        return Err(Error::Ply(format!(
            "payload has {} bytes, expected {count} x {stride}",
            body.len()
        )));
    }
    let mut out = Vec::with_capacity(count);
    for chunk in body.chunks_exact(stride) {
        let f = |slot: usize| {
            let o = slots[slot] * 4;
            f32::from_le_bytes(chunk[o..o + 4].try_into().unwrap()) as f64
        };
        let sh = SMatrix::<f64, SH_COEFFS, 3>::from_fn(|k, c| {
            if k == 0 {
                f(6 + c)
            } else {
                f(9 + c * (SH_COEFFS - 1) + (k - 1))
            }
        });
        let q = Quaternion::new(f(58), f(59), f(60), f(61));
        let splat = SplatInit {
            position: Vector3::new(f(0), f(1), f(2)),
            sh: ShCoefficients(sh),
            opacity_logit: f(54),
            scale_log: Vector3::new(f(55), f(56), f(57)),
            rotation: UnitQuaternion::new_unchecked(q),
        };
        splat.validate()?;
        out.push(splat);
    }
    Ok(out)
}
