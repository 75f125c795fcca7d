//! Fixed-w slices of the achievable-correlation sets, as polytopes
//! (vertices plus faces) or sampled surface grids.

use std::f64::consts::PI;
use std::io::Write;
use std::str::FromStr;

use serde::Serialize;

use crate::census::distinct_type1_correlations;
use crate::error::{Error, Result};
use crate::fine::{vertex_matrix, w_case, WCase};
use crate::scalar::{Rational, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SliceModel {
    Qm,
    BellReal,
    BellLocal,
    Cube,
    DetPoints,
}

impl SliceModel {
    pub const ALL: [SliceModel; 5] =
        [SliceModel::Qm, SliceModel::BellReal, SliceModel::BellLocal, SliceModel::Cube, SliceModel::DetPoints];

    pub fn tag(self) -> &'static str {
        match self {
            SliceModel::Qm => "qm",
            SliceModel::BellReal => "bellreal",
            SliceModel::BellLocal => "belllocal",
            SliceModel::Cube => "cube",
            SliceModel::DetPoints => "detpoints",
        }
    }
}

impl FromStr for SliceModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SliceModel::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::Instance(format!("unknown slice model `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SlicePayload {
    /// Faces list 0-based vertex indices, counter-clockwise seen from outside.
    Polytope { vertices: Vec<[f64; 3]>, faces: Vec<Vec<usize>> },
    Points { points: Vec<[f64; 3]> },
    Grid { points: Vec<[f64; 3]>, labels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceData {
    pub model: SliceModel,
    pub w: f64,
    #[serde(flatten)]
    pub payload: SlicePayload,
}

impl SliceData {
    /// Every emitted (x, y, z) with its label.
    pub fn labelled_points(&self) -> Vec<([f64; 3], String)> {
        match &self.payload {
            SlicePayload::Polytope { vertices, .. } => vertices.iter().map(|v| (*v, "vertex".to_string())).collect(),
            SlicePayload::Points { points } => points.iter().map(|p| (*p, "point".to_string())).collect(),
            SlicePayload::Grid { points, labels } => points.iter().copied().zip(labels.iter().cloned()).collect(),
        }
    }

    /// CSV with columns w,x,y,z,label.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Instance(e.to_string());
        w.write_record(["w", "x", "y", "z", "label"]).map_err(err)?;
        for (p, label) in self.labelled_points() {
            w.write_record([self.w.to_string(), p[0].to_string(), p[1].to_string(), p[2].to_string(), label])
                .map_err(err)?;
        }
        w.flush().map_err(|e| Error::Instance(e.to_string()))
    }
}

/// Builds the slice of `model` at `w`. `density` is the number of samples
/// per grid axis and is ignored for polytopes.
pub fn slice(model: SliceModel, w: &Rational, density: usize) -> Result<SliceData> {
    let case = w_case(w)?;
    let wf = w.to_f64();
    let needs_grid = matches!(model, SliceModel::Qm | SliceModel::BellLocal);
    if needs_grid && density < 2 {
        return Err(Error::Instance(format!("grid density {density} must be at least 2")));
    }
    let payload = match model {
        SliceModel::BellReal => bell_real_polytope(w)?,
        SliceModel::Cube => cube(),
        SliceModel::DetPoints => {
            if case == WCase::Interior {
                return Err(Error::Instance("deterministic points exist only at w = -1 or w = 1".into()));
            }
            let points = distinct_type1_correlations()
                .iter()
                .map(|c| c.to_f64())
                .filter(|c| c[0] == wf)
                .map(|c| [c[1], c[2], c[3]])
                .collect();
            SlicePayload::Points { points }
        }
        SliceModel::Qm => qm_grid(wf, density),
        SliceModel::BellLocal => bell_local_grid(wf, density),
    };
    Ok(SliceData { model, w: wf, payload })
}

fn axis(density: usize, lo: f64, hi: f64) -> impl Iterator<Item = f64> {
    (0..density).map(move |i| lo + (hi - lo) * i as f64 / (density - 1) as f64)
}

/// Points (cos2θ₂, cos2θ₃, cos2θ₄) with cos2(θ₂+θ₃+θ₄) = w, over both
/// branches θ₁ = ±½·arccos(w).
fn qm_grid(w: f64, density: usize) -> SlicePayload {
    let half = 0.5 * w.clamp(-1.0, 1.0).acos();
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (theta1, label) in [(half, "qm+"), (-half, "qm-")] {
        for t2 in axis(density, 0.0, PI) {
            for t3 in axis(density, 0.0, PI) {
                let t4 = theta1 - t2 - t3;
                points.push([(2.0 * t2).cos(), (2.0 * t3).cos(), (2.0 * t4).cos()]);
                labels.push(label.to_string());
            }
        }
    }
    SlicePayload::Grid { points, labels }
}

/// z = xy/w inside the cube, or the planes x = 0 and y = 0 when w = 0.
fn bell_local_grid(w: f64, density: usize) -> SlicePayload {
    let mut points = Vec::new();
    let mut labels = Vec::new();
    if w == 0.0 {
        for a in axis(density, -1.0, 1.0) {
            for b in axis(density, -1.0, 1.0) {
                points.push([0.0, a, b]);
                labels.push("belllocal-x0".to_string());
                points.push([a, 0.0, b]);
                labels.push("belllocal-y0".to_string());
            }
        }
    } else {
        for x in axis(density, -1.0, 1.0) {
            for y in axis(density, -1.0, 1.0) {
                let z = x * y / w;
                if z.abs() <= 1.0 {
                    points.push([x, y, z]);
                    labels.push("belllocal".to_string());
                }
            }
        }
    }
    SlicePayload::Grid { points, labels }
}

fn cube() -> SlicePayload {
    let vertices: Vec<[f64; 3]> = (0..8)
        .map(|i| [(i >> 2) & 1, (i >> 1) & 1, i & 1].map(|b| if b == 1 { 1.0 } else { -1.0 }))
        .collect();
    let exact: Vec<[Rational; 3]> = vertices.iter().map(|v| v.map(Rational::from_f64)).collect();
    SlicePayload::Polytope { vertices, faces: hull_faces(&exact) }
}

fn bell_real_polytope(w: &Rational) -> Result<SlicePayload> {
    let v = vertex_matrix(w)?;
    let exact: Vec<[Rational; 3]> =
        v.columns.iter().map(|c| [c[1].clone(), c[2].clone(), c[3].clone()]).collect();
    let vertices = exact.iter().map(|p| p.clone().map(|x| x.to_f64())).collect();
    Ok(SlicePayload::Polytope { vertices, faces: hull_faces(&exact) })
}

fn sub(a: &[Rational; 3], b: &[Rational; 3]) -> [Rational; 3] {
    std::array::from_fn(|i| a[i].clone() - b[i].clone())
}

fn cross(a: &[Rational; 3], b: &[Rational; 3]) -> [Rational; 3] {
    [
        a[1].clone() * b[2].clone() - a[2].clone() * b[1].clone(),
        a[2].clone() * b[0].clone() - a[0].clone() * b[2].clone(),
        a[0].clone() * b[1].clone() - a[1].clone() * b[0].clone(),
    ]
}

fn dot(a: &[Rational; 3], b: &[Rational; 3]) -> Rational {
    (0..3).fold(Rational::zero(), |acc, i| acc + a[i].clone() * b[i].clone())
}

/// Facets of the convex hull of a full-dimensional point set, found exactly
/// by testing every vertex triple as a supporting plane.
pub fn hull_faces(points: &[[Rational; 3]]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut faces: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let mut normal = cross(&sub(&points[j], &points[i]), &sub(&points[k], &points[i]));
                if normal.iter().all(|c| c.is_zero_tol(0.0)) {
                    continue;
                }
                let side: Vec<Rational> = points.iter().map(|p| dot(&normal, &sub(p, &points[i]))).collect();
                let pos = side.iter().any(|s| s.sign_tol(0.0).is_gt());
                let neg = side.iter().any(|s| s.sign_tol(0.0).is_lt());
                if pos && neg {
                    continue;
                }
                if pos {
                    normal = normal.map(|c| -c);
                }
                let mut on: Vec<usize> = (0..n).filter(|&m| side[m].is_zero_tol(0.0)).collect();
                on.sort_unstable();
                if faces.iter().any(|f| {
                    let mut g = f.clone();
                    g.sort_unstable();
                    g == on
                }) {
                    continue;
                }
                faces.push(order_face(points, on, &normal));
            }
        }
    }
    faces
}

fn order_face(points: &[[Rational; 3]], mut face: Vec<usize>, normal: &[Rational; 3]) -> Vec<usize> {
    let f = |p: &[Rational; 3]| p.clone().map(|x| x.to_f64());
    let pts: Vec<[f64; 3]> = face.iter().map(|&m| f(&points[m])).collect();
    let c: [f64; 3] = std::array::from_fn(|i| pts.iter().map(|p| p[i]).sum::<f64>() / pts.len() as f64);
    let n = f(normal);
    let e1: [f64; 3] = std::array::from_fn(|i| pts[0][i] - c[i]);
    let e2 = [n[1] * e1[2] - n[2] * e1[1], n[2] * e1[0] - n[0] * e1[2], n[0] * e1[1] - n[1] * e1[0]];
    let angle = |m: usize| {
        let p = f(&points[m]);
        let d: [f64; 3] = std::array::from_fn(|i| p[i] - c[i]);
        let (a, b) = ((0..3).map(|i| d[i] * e1[i]).sum::<f64>(), (0..3).map(|i| d[i] * e2[i]).sum::<f64>());
        b.atan2(a)
    };
    face.sort_by(|&a, &b| angle(a).total_cmp(&angle(b)));
    face
}
