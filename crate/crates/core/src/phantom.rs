//! Synthetic 2D phantoms and the dose-influence matrix built over them.
//!
//! Coordinates are in millimetres with the origin at the lower-left grid
//! corner. Beams are parallel-ray fields at equispaced gantry angles; each
//! beamlet is traced through the grid with optional exponential attenuation.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{DoseInfluenceMatrix, MatrixError};
use crate::raytrace::{trace_ray, GridGeometry, Ray};

/// Name given to the implicit structure holding every unclaimed voxel.
pub const BODY: &str = "Body";

#[derive(Debug, Error, PartialEq)]
pub enum PhantomError {
    #[error("invalid phantom spec: {field}: {reason}")]
    InvalidSpec { field: String, reason: String },
    #[error("structure `{0}` rasterizes to zero voxels")]
    EmptyStructure(String),
    #[error("targets `{0}` and `{1}` share voxel {2}")]
    OverlappingTargets(String, String, usize),
    #[error("beamlet {beamlet} of field {field} intersects no voxel")]
    DeadBeamlet { field: usize, beamlet: usize },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> PhantomError {
    PhantomError::InvalidSpec {
        field: field.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub voxel_size_mm: f64,
}

impl GridSpec {
    pub fn geometry(&self) -> GridGeometry {
        GridGeometry {
            nx: self.nx,
            ny: self.ny,
            voxel_size_mm: self.voxel_size_mm,
        }
    }

    pub fn num_voxels(&self) -> usize {
        self.nx * self.ny
    }

    /// Centre of voxel `j` in mm.
    pub fn voxel_center(&self, j: usize) -> [f64; 2] {
        let (ix, iy) = (j % self.nx, j / self.nx);
        [
            (ix as f64 + 0.5) * self.voxel_size_mm,
            (iy as f64 + 0.5) * self.voxel_size_mm,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureKind {
    Target,
    Oar,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Circle { cx: f64, cy: f64, r: f64 },
    Rectangle { x0: f64, y0: f64, x1: f64, y1: f64 },
}

impl Shape {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        match *self {
            Shape::Circle { cx, cy, r } => {
                let (dx, dy) = (p[0] - cx, p[1] - cy);
                dx * dx + dy * dy <= r * r
            }
            Shape::Rectangle { x0, y0, x1, y1 } => {
                p[0] >= x0 && p[0] <= x1 && p[1] >= y0 && p[1] <= y1
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureSpec {
    pub name: String,
    pub kind: StructureKind,
    pub shape: Shape,
    pub lower_gy: f64,
    pub upper_gy: f64,
}

fn default_mu() -> f64 {
    0.005
}

fn default_rays() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSpec {
    pub num_fields: usize,
    pub beamlets_per_field: usize,
    #[serde(default = "default_mu")]
    pub attenuation_mu_per_mm: f64,
    #[serde(default)]
    pub source_clearance_mm: f64,
    /// Parallel sub-rays traced per beamlet; the column is their average.
    #[serde(default = "default_rays")]
    pub rays_per_beamlet: usize,
    /// Width of the field aperture. Defaults to the grid's inscribed
    /// diameter so every beamlet crosses the grid at every gantry angle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aperture_mm: Option<f64>,
}

impl BeamSpec {
    pub fn num_beamlets(&self) -> usize {
        self.num_fields * self.beamlets_per_field
    }

    /// Gantry angle of field `f` in radians.
    pub fn field_angle(&self, f: usize) -> f64 {
        2.0 * PI * f as f64 / self.num_fields as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomSpec {
    pub grid: GridSpec,
    pub structures: Vec<StructureSpec>,
    pub beams: BeamSpec,
    /// Upper dose bound for voxels outside every named structure.
    pub body_upper_gy: f64,
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<(), PhantomError> {
        let g = &self.grid;
        if g.nx < 8 || g.ny < 8 {
            return Err(invalid("grid", "nx and ny must be at least 8"));
        }
        if !(g.voxel_size_mm.is_finite() && g.voxel_size_mm > 0.0) {
            return Err(invalid("grid.voxel_size_mm", "must be positive"));
        }
        let b = &self.beams;
        if b.num_fields == 0 {
            return Err(invalid("beams.num_fields", "must be at least 1"));
        }
        if b.beamlets_per_field == 0 {
            return Err(invalid("beams.beamlets_per_field", "must be at least 1"));
        }
        if b.rays_per_beamlet == 0 {
            return Err(invalid("beams.rays_per_beamlet", "must be at least 1"));
        }
        if !(b.attenuation_mu_per_mm.is_finite() && b.attenuation_mu_per_mm >= 0.0) {
            return Err(invalid("beams.attenuation_mu_per_mm", "must be nonnegative"));
        }
        if !(b.source_clearance_mm.is_finite() && b.source_clearance_mm >= 0.0) {
            return Err(invalid("beams.source_clearance_mm", "must be nonnegative"));
        }
        if let Some(w) = b.aperture_mm {
            if !(w.is_finite() && w > 0.0) {
                return Err(invalid("beams.aperture_mm", "must be positive"));
            }
        }
        if !(self.body_upper_gy.is_finite() && self.body_upper_gy > 0.0) {
            return Err(invalid("body_upper_gy", "must be positive"));
        }
        if !self.structures.iter().any(|s| s.kind == StructureKind::Target) {
            return Err(invalid("structures", "at least one target is required"));
        }
        for (k, s) in self.structures.iter().enumerate() {
            let field = |f: &str| format!("structures[{k}].{f}");
            if s.name.is_empty() || s.name == BODY {
                return Err(invalid(field("name"), format!("`{}` is reserved or empty", s.name)));
            }
            if self.structures[..k].iter().any(|o| o.name == s.name) {
                return Err(invalid(field("name"), format!("duplicate name `{}`", s.name)));
            }
            match s.shape {
                Shape::Circle { r, .. } if !(r > 0.0) => {
                    return Err(invalid(field("shape.r"), "must be positive"));
                }
                Shape::Rectangle { x0, y0, x1, y1 } if !(x1 > x0 && y1 > y0) => {
                    return Err(invalid(field("shape"), "needs x1 > x0 and y1 > y0"));
                }
                _ => {}
            }
            if !(s.lower_gy.is_finite() && s.lower_gy >= 0.0) {
                return Err(invalid(field("lower_gy"), "must be finite and nonnegative"));
            }
            if !s.upper_gy.is_finite() {
                return Err(invalid(field("upper_gy"), "must be finite"));
            }
            match s.kind {
                StructureKind::Oar if s.lower_gy != 0.0 => {
                    return Err(invalid(field("lower_gy"), "organs at risk have lower bound 0"));
                }
                StructureKind::Target if s.lower_gy <= 0.0 => {
                    return Err(invalid(field("lower_gy"), "targets need a positive lower bound"));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Resolved structure with its dose interval. Index 0 is always Body.
#[derive(Debug, Clone, PartialEq)]
pub struct Structure {
    pub name: String,
    pub kind: StructureKind,
    pub lower_gy: f64,
    pub upper_gy: f64,
    pub voxels: Vec<usize>,
}

/// A rasterized phantom. Immutable once generated.
#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    spec: PhantomSpec,
    labels: Vec<usize>,
    structures: Vec<Structure>,
}

impl Phantom {
    pub fn spec(&self) -> &PhantomSpec {
        &self.spec
    }

    pub fn grid(&self) -> &GridSpec {
        &self.spec.grid
    }

    pub fn beams(&self) -> &BeamSpec {
        &self.spec.beams
    }

    pub fn num_voxels(&self) -> usize {
        self.labels.len()
    }

    /// Structure index of every voxel (0 = Body).
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Body first, then the named structures in declaration order.
    pub fn structures(&self) -> &[Structure] {
        &self.structures
    }

    pub fn structure(&self, name: &str) -> Option<&Structure> {
        self.structures.iter().find(|s| s.name == name)
    }

    /// Voxel indices of the named structure.
    pub fn mask(&self, name: &str) -> Option<&[usize]> {
        self.structure(name).map(|s| s.voxels.as_slice())
    }

    /// Label grid as CSV: one line per grid row `iy`, one structure name
    /// per column `ix`.
    pub fn labels_csv(&self) -> String {
        let nx = self.spec.grid.nx;
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        for row in self.labels.chunks(nx) {
            w.write_record(row.iter().map(|&l| self.structures[l].name.as_str()))
                .expect("in-memory csv write");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("utf8 names")
    }
}

/// Rasterizes the structures of `spec` by voxel-centre inclusion.
///
/// A target wins over an OAR, an earlier-declared OAR wins over a later
/// one, and any named structure wins over Body.
pub fn generate_phantom(spec: &PhantomSpec) -> Result<Phantom, PhantomError> {
    spec.validate()?;
    let grid = &spec.grid;
    let mut labels = vec![0usize; grid.num_voxels()];
    for (j, label) in labels.iter_mut().enumerate() {
        let c = grid.voxel_center(j);
        let mut target: Option<usize> = None;
        let mut oar: Option<usize> = None;
        for (k, s) in spec.structures.iter().enumerate() {
            if !s.shape.contains(c) {
                continue;
            }
            match s.kind {
                StructureKind::Target => {
                    if let Some(t) = target {
                        return Err(PhantomError::OverlappingTargets(
                            spec.structures[t].name.clone(),
                            s.name.clone(),
                            j,
                        ));
                    }
                    target = Some(k);
                }
                StructureKind::Oar => {
                    oar.get_or_insert(k);
                }
            }
        }
        *label = target.or(oar).map_or(0, |k| k + 1);
    }

    let mut structures = Vec::with_capacity(spec.structures.len() + 1);
    structures.push(Structure {
        name: BODY.to_string(),
        kind: StructureKind::Oar,
        lower_gy: 0.0,
        upper_gy: spec.body_upper_gy,
        voxels: Vec::new(),
    });
    structures.extend(spec.structures.iter().map(|s| Structure {
        name: s.name.clone(),
        kind: s.kind,
        lower_gy: s.lower_gy,
        upper_gy: s.upper_gy,
        voxels: Vec::new(),
    }));
    for (j, &l) in labels.iter().enumerate() {
        structures[l].voxels.push(j);
    }
    if let Some(empty) = structures[1..].iter().find(|s| s.voxels.is_empty()) {
        return Err(PhantomError::EmptyStructure(empty.name.clone()));
    }
    Ok(Phantom {
        spec: spec.clone(),
        labels,
        structures,
    })
}

/// The parallel sub-rays making up beamlet `b` of field `f`.
pub fn beamlet_rays(grid: &GridSpec, beams: &BeamSpec, f: usize, b: usize) -> Vec<Ray> {
    let (w, h) = (grid.geometry().width_mm(), grid.geometry().height_mm());
    let center = [0.5 * w, 0.5 * h];
    let half_diag = 0.5 * w.hypot(h);
    let aperture = beams.aperture_mm.unwrap_or_else(|| w.min(h));
    let width = aperture / beams.beamlets_per_field as f64;
    let theta = beams.field_angle(f);
    let dir = [theta.cos(), theta.sin()];
    let perp = [-dir[1], dir[0]];
    let back = half_diag + beams.source_clearance_mm;
    let n = beams.rays_per_beamlet;
    (0..n)
        .map(|r| {
            let offset = -0.5 * aperture + (b as f64 + (r as f64 + 0.5) / n as f64) * width;
            Ray {
                origin: [
                    center[0] + offset * perp[0] - back * dir[0],
                    center[1] + offset * perp[1] - back * dir[1],
                ],
                dir,
            }
        })
        .collect()
}

/// Column of `A` for one beamlet: every sub-ray contributes
/// `L·exp(−μ·depth) / n` to each voxel it crosses. Sorted by voxel.
pub fn trace_beamlet(grid: &GridSpec, rays: &[Ray], mu: f64) -> Vec<(usize, f64)> {
    let geom = grid.geometry();
    let weight = 1.0 / rays.len() as f64;
    let mut entries: Vec<(usize, f64)> = rays
        .iter()
        .flat_map(|ray| trace_ray(&geom, ray))
        .map(|c| (c.voxel, weight * c.length_mm * (-mu * c.depth_mm).exp()))
        .collect();
    // Stable sort keeps sub-ray order for repeated voxels.
    entries.sort_by_key(|e| e.0);
    let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
    for (voxel, value) in entries {
        match merged.last_mut() {
            Some(last) if last.0 == voxel => last.1 += value,
            _ => merged.push((voxel, value)),
        }
    }
    merged
}

/// Builds the dose-influence matrix by tracing every beamlet.
///
/// Columns are traced in parallel and assembled in beamlet order, so the
/// result does not depend on the thread count.
pub fn build_dose_matrix(phantom: &Phantom) -> Result<DoseInfluenceMatrix, PhantomError> {
    let grid = phantom.grid();
    let beams = phantom.beams();
    let per_field = beams.beamlets_per_field;
    let columns: Vec<Vec<(usize, f64)>> = (0..beams.num_beamlets())
        .into_par_iter()
        .map(|i| {
            let rays = beamlet_rays(grid, beams, i / per_field, i % per_field);
            trace_beamlet(grid, &rays, beams.attenuation_mu_per_mm)
        })
        .collect();
    if let Some(i) = columns.iter().position(Vec::is_empty) {
        return Err(PhantomError::DeadBeamlet {
            field: i / per_field,
            beamlet: i % per_field,
        });
    }
    Ok(DoseInfluenceMatrix::from_columns(grid.num_voxels(), &columns)?)
}
