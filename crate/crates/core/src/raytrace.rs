//! Incremental traversal of a straight ray through a uniform 2D voxel grid.
//!
//! The grid occupies `[0, nx·s] × [0, ny·s]` in millimetres with voxel
//! `j = iy·nx + ix` covering `[ix·s, (ix+1)·s] × [iy·s, (iy+1)·s]`.

/// A parametrised ray `origin + t·dir`, `t ≥ 0`, with `dir` of unit length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: [f64; 2],
    pub dir: [f64; 2],
}

impl Ray {
    /// Builds a ray, normalising the direction.
    pub fn new(origin: [f64; 2], dir: [f64; 2]) -> Self {
        let norm = dir[0].hypot(dir[1]);
        Self {
            origin,
            dir: [dir[0] / norm, dir[1] / norm],
        }
    }
}

/// One voxel visited by a ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub voxel: usize,
    /// Intersection length of the ray with the voxel (mm).
    pub length_mm: f64,
    /// Path length from the grid entry point to the midpoint of the chord (mm).
    pub depth_mm: f64,
}

/// Lightweight view of the grid geometry used by the tracer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeometry {
    pub nx: usize,
    pub ny: usize,
    pub voxel_size_mm: f64,
}

impl GridGeometry {
    pub fn width_mm(&self) -> f64 {
        self.nx as f64 * self.voxel_size_mm
    }

    pub fn height_mm(&self) -> f64 {
        self.ny as f64 * self.voxel_size_mm
    }

    /// Parametric interval `[t_in, t_out]` over which the ray is inside the
    /// grid box, or `None` when it misses (or only grazes) the box.
    pub fn clip(&self, ray: &Ray) -> Option<(f64, f64)> {
        let upper = [self.width_mm(), self.height_mm()];
        let mut t_in = 0.0_f64;
        let mut t_out = f64::INFINITY;
        for axis in 0..2 {
            let o = ray.origin[axis];
            let d = ray.dir[axis];
            if d == 0.0 {
                if o <= 0.0 || o >= upper[axis] {
                    return None;
                }
                continue;
            }
            let (mut t0, mut t1) = ((0.0 - o) / d, (upper[axis] - o) / d);
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
            }
            t_in = t_in.max(t0);
            t_out = t_out.min(t1);
        }
        (t_out > t_in).then_some((t_in, t_out))
    }
}

/// Visits every voxel pierced by `ray`, in order along the ray.
///
/// Crossings with zero length (a ray passing exactly through a grid corner)
/// are dropped. The chord lengths sum to the total path length inside the
/// grid.
pub fn trace_ray(grid: &GridGeometry, ray: &Ray) -> Vec<Crossing> {
    let Some((t_in, t_out)) = grid.clip(ray) else {
        return Vec::new();
    };
    let s = grid.voxel_size_mm;
    let mut out = Vec::with_capacity(grid.nx + grid.ny);

    // Locate the entry voxel from a point slightly inside the chord.
    let t_probe = t_in + 1e-9 * (t_out - t_in).min(s);
    let cell = |axis: usize, t: f64, n: usize| -> i64 {
        let p = ray.origin[axis] + t * ray.dir[axis];
        ((p / s).floor() as i64).clamp(0, n as i64 - 1)
    };
    let mut ix = cell(0, t_probe, grid.nx);
    let mut iy = cell(1, t_probe, grid.ny);
    let step = [sign(ray.dir[0]), sign(ray.dir[1])];

    // Parameter of the next boundary crossing on one axis, recomputed from
    // the cell index each time rather than accumulated.
    let next_boundary = |axis: usize, idx: i64| -> f64 {
        let d = ray.dir[axis];
        if d == 0.0 {
            return f64::INFINITY;
        }
        let edge = if d > 0.0 { (idx + 1) as f64 } else { idx as f64 } * s;
        (edge - ray.origin[axis]) / d
    };

    let mut t_cur = t_in;
    loop {
        let tx = next_boundary(0, ix);
        let ty = next_boundary(1, iy);
        let t_next = tx.min(ty).min(t_out);
        let length = t_next - t_cur;
        if length > 0.0 {
            out.push(Crossing {
                voxel: iy as usize * grid.nx + ix as usize,
                length_mm: length,
                depth_mm: 0.5 * (t_cur + t_next) - t_in,
            });
        }
        if t_next >= t_out {
            break;
        }
        if tx <= t_next {
            ix += step[0];
        }
        if ty <= t_next {
            iy += step[1];
        }
        if ix < 0 || iy < 0 || ix >= grid.nx as i64 || iy >= grid.ny as i64 {
            break;
        }
        t_cur = t_cur.max(t_next);
    }
    out
}

fn sign(v: f64) -> i64 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}
