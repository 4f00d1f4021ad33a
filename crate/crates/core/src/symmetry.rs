//! Label-preserving cell permutations of `m x n` grids.
//!
//! A [`GridTransform`] is a grid isometry ([`PointOp`]) followed by a toroidal
//! translation. Square grids carry the eight-element dihedral group, other
//! grids the four elements that map an `m x n` rectangle onto itself. Several
//! parameterisations can induce the same cell permutation on small grids;
//! [`collapse`] reduces a transform list to its distinct [`Permutation`]s.
//!
//! Grids are flattened row-major, single channel: a point of dimension `m*n`
//! holds cell `(r, c)` at index `r*n + c`.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::filterdemo::LabelRaster;
use crate::model::{euclidean, DecisionFunction, Point};
use crate::rng::seeded_stream;
use crate::special::ln_gamma;

/// A grid isometry fixing the rectangle `[0,m) x [0,n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PointOp {
    Identity,
    /// Quarter turn clockwise; square grids only.
    Rot90,
    Rot180,
    /// Quarter turn counter-clockwise; square grids only.
    Rot270,
    /// Mirror left-right (columns reversed).
    FlipH,
    /// Mirror top-bottom (rows reversed).
    FlipV,
    /// Reflection in the main diagonal; square grids only.
    Transpose,
    /// Reflection in the anti-diagonal; square grids only.
    AntiTranspose,
}

type Matrix = [[i64; 2]; 2];

impl PointOp {
    pub const ALL: [PointOp; 8] = [
        PointOp::Identity,
        PointOp::Rot90,
        PointOp::Rot180,
        PointOp::Rot270,
        PointOp::FlipH,
        PointOp::FlipV,
        PointOp::Transpose,
        PointOp::AntiTranspose,
    ];

    const RECTANGULAR: [PointOp; 4] = [
        PointOp::Identity,
        PointOp::Rot180,
        PointOp::FlipH,
        PointOp::FlipV,
    ];

    /// The point group of an `m x n` grid.
    pub fn group(m: usize, n: usize) -> &'static [PointOp] {
        if m == n {
            &Self::ALL
        } else {
            &Self::RECTANGULAR
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PointOp::Identity => "identity",
            PointOp::Rot90 => "rot90",
            PointOp::Rot180 => "rot180",
            PointOp::Rot270 => "rot270",
            PointOp::FlipH => "flip_h",
            PointOp::FlipV => "flip_v",
            PointOp::Transpose => "transpose",
            PointOp::AntiTranspose => "anti_transpose",
        }
    }

    fn needs_square(self) -> bool {
        matches!(
            self,
            PointOp::Rot90 | PointOp::Rot270 | PointOp::Transpose | PointOp::AntiTranspose
        )
    }

    /// Linear part acting on `(row, col)`.
    fn matrix(self) -> Matrix {
        match self {
            PointOp::Identity => [[1, 0], [0, 1]],
            PointOp::Rot90 => [[0, 1], [-1, 0]],
            PointOp::Rot180 => [[-1, 0], [0, -1]],
            PointOp::Rot270 => [[0, -1], [1, 0]],
            PointOp::FlipH => [[1, 0], [0, -1]],
            PointOp::FlipV => [[-1, 0], [0, 1]],
            PointOp::Transpose => [[0, 1], [1, 0]],
            PointOp::AntiTranspose => [[0, -1], [-1, 0]],
        }
    }

    fn from_matrix(a: Matrix) -> PointOp {
        *Self::ALL
            .iter()
            .find(|op| op.matrix() == a)
            .expect("product of two signed permutation matrices is in the group")
    }

    pub fn inverse(self) -> PointOp {
        match self {
            PointOp::Rot90 => PointOp::Rot270,
            PointOp::Rot270 => PointOp::Rot90,
            other => other,
        }
    }

    /// Image of cell `(r, c)`; rows run over `m`, columns over `n`.
    fn apply(self, r: i64, c: i64, m: i64, n: i64) -> (i64, i64) {
        match self {
            PointOp::Identity => (r, c),
            PointOp::Rot90 => (c, n - 1 - r),
            PointOp::Rot180 => (m - 1 - r, n - 1 - c),
            PointOp::Rot270 => (m - 1 - c, r),
            PointOp::FlipH => (r, n - 1 - c),
            PointOp::FlipV => (m - 1 - r, c),
            PointOp::Transpose => (c, r),
            PointOp::AntiTranspose => (m - 1 - c, n - 1 - r),
        }
    }
}

impl fmt::Display for PointOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn mat_mul(a: Matrix, b: Matrix) -> Matrix {
    let mut out = [[0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn mat_vec(a: Matrix, v: (i64, i64)) -> (i64, i64) {
    (a[0][0] * v.0 + a[0][1] * v.1, a[1][0] * v.0 + a[1][1] * v.1)
}

/// A permutation of grid cells: `map[i]` is where cell `i` is sent.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn identity(len: usize) -> Self {
        Self {
            map: (0..len).collect(),
        }
    }

    pub fn from_map(map: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; map.len()];
        for &i in &map {
            if i >= map.len() || std::mem::replace(&mut seen[i], true) {
                return invalid("not a permutation");
            }
        }
        Ok(Self { map })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation {
            map: other.map.iter().map(|&i| self.map[i]).collect(),
        }
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.map.len()];
        for (i, &j) in self.map.iter().enumerate() {
            inv[j] = i;
        }
        Permutation { map: inv }
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// Moves the value at index `i` to index `map[i]`.
    pub fn permute<T: Clone>(&self, values: &[T]) -> Vec<T> {
        let mut out = values.to_vec();
        for (i, v) in values.iter().enumerate() {
            out[self.map[i]] = v.clone();
        }
        out
    }
}

/// Point operation followed by the toroidal translation `(dr, dc)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridTransform {
    m: usize,
    n: usize,
    dr: usize,
    dc: usize,
    op: PointOp,
}

impl GridTransform {
    pub fn new(m: usize, n: usize, dr: i64, dc: i64, op: PointOp) -> Result<Self> {
        if m == 0 || n == 0 {
            return invalid("grid sides must be positive");
        }
        if m != n && op.needs_square() {
            return invalid(format!("{op} needs a square grid, got {m}x{n}"));
        }
        Ok(Self {
            m,
            n,
            dr: dr.rem_euclid(m as i64) as usize,
            dc: dc.rem_euclid(n as i64) as usize,
            op,
        })
    }

    pub fn identity(m: usize, n: usize) -> Result<Self> {
        Self::new(m, n, 0, 0, PointOp::Identity)
    }

    pub fn translation(m: usize, n: usize, dr: i64, dc: i64) -> Result<Self> {
        Self::new(m, n, dr, dc, PointOp::Identity)
    }

    pub fn grid(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    pub fn offset(&self) -> (usize, usize) {
        (self.dr, self.dc)
    }

    pub fn point_op(&self) -> PointOp {
        self.op
    }

    pub fn map_cell(&self, r: usize, c: usize) -> (usize, usize) {
        let (m, n) = (self.m as i64, self.n as i64);
        let (r2, c2) = self.op.apply(r as i64, c as i64, m, n);
        (
            (r2 + self.dr as i64).rem_euclid(m) as usize,
            (c2 + self.dc as i64).rem_euclid(n) as usize,
        )
    }

    pub fn permutation(&self) -> Permutation {
        let mut map = Vec::with_capacity(self.m * self.n);
        for r in 0..self.m {
            for c in 0..self.n {
                let (r2, c2) = self.map_cell(r, c);
                map.push(r2 * self.n + c2);
            }
        }
        Permutation { map }
    }

    /// The transform undoing `self`.
    pub fn inverse(&self) -> GridTransform {
        // x -> op(x) + t inverts to y -> op^-1(y) - A^-1 t, and A^-1 = A^T.
        let a = self.op.matrix();
        let a_t = [[a[0][0], a[1][0]], [a[0][1], a[1][1]]];
        let (tr, tc) = mat_vec(a_t, (self.dr as i64, self.dc as i64));
        GridTransform::new(self.m, self.n, -tr, -tc, self.op.inverse())
            .expect("inverse of a valid transform is valid")
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &GridTransform) -> Result<GridTransform> {
        if self.grid() != other.grid() {
            return invalid("cannot compose transforms of different grids");
        }
        let a = self.op.matrix();
        let op = PointOp::from_matrix(mat_mul(a, other.op.matrix()));
        let (tr, tc) = mat_vec(a, (other.dr as i64, other.dc as i64));
        GridTransform::new(self.m, self.n, tr + self.dr as i64, tc + self.dc as i64, op)
    }

    /// Applies the transform to a flattened row-major grid of values.
    pub fn apply_to_values<T: Clone>(&self, values: &[T]) -> Result<Vec<T>> {
        if values.len() != self.m * self.n {
            return Err(Error::DimensionMismatch {
                expected: self.m * self.n,
                got: values.len(),
            });
        }
        Ok(self.permutation().permute(values))
    }
}

/// Every translation of an `m x n` torus, optionally composed with the point
/// group. Parameterisations are returned as-is, so distinct entries may induce
/// the same permutation.
pub fn enumerate_group(m: usize, n: usize, include_point_ops: bool) -> Result<Vec<GridTransform>> {
    if m == 0 || n == 0 {
        return invalid("grid sides must be positive");
    }
    let ops: &[PointOp] = if include_point_ops {
        PointOp::group(m, n)
    } else {
        &[PointOp::Identity]
    };
    let mut out = Vec::with_capacity(ops.len() * m * n);
    for &op in ops {
        for dr in 0..m {
            for dc in 0..n {
                out.push(GridTransform { m, n, dr, dc, op });
            }
        }
    }
    Ok(out)
}

/// Distinct cell permutations induced by `transforms`, in first-seen order.
pub fn collapse(transforms: &[GridTransform]) -> Vec<Permutation> {
    let mut seen = HashSet::new();
    transforms
        .iter()
        .map(GridTransform::permutation)
        .filter(|p| seen.insert(p.clone()))
        .collect()
}

pub fn apply_transform(t: &GridTransform, raster: &LabelRaster) -> Result<LabelRaster> {
    if (raster.height(), raster.width()) != t.grid() {
        return invalid(format!(
            "raster is {}x{} but the transform acts on {}x{} grids",
            raster.height(),
            raster.width(),
            t.m,
            t.n
        ));
    }
    LabelRaster::from_labels(
        raster.width(),
        raster.height(),
        raster.extent(),
        raster.cardinality(),
        t.apply_to_values(raster.labels())?,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViolationRow {
    pub transform_id: usize,
    pub transform: GridTransform,
    pub violations: u64,
    pub samples: u64,
}

impl ViolationRow {
    pub fn rate(&self) -> f64 {
        self.violations as f64 / self.samples as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceReport {
    pub seed: u64,
    pub rows: Vec<ViolationRow>,
}

impl InvarianceReport {
    pub fn total_violations(&self) -> u64 {
        self.rows.iter().map(|r| r.violations).sum()
    }
}

/// Counts, per transform, how many uniform sample grids change label under it.
///
/// Sample `i` is drawn from stream `(seed, i)`.
pub fn check_invariance<F>(
    f: &F,
    m: usize,
    n: usize,
    transforms: &[GridTransform],
    samples: u64,
    seed: u64,
) -> Result<InvarianceReport>
where
    F: DecisionFunction + ?Sized,
{
    if f.dim() != m * n {
        return Err(Error::DimensionMismatch {
            expected: m * n,
            got: f.dim(),
        });
    }
    if let Some(t) = transforms.iter().find(|t| t.grid() != (m, n)) {
        return invalid(format!(
            "transform for {:?} grid in a {m}x{n} check",
            t.grid()
        ));
    }
    let perms: Vec<Permutation> = transforms.iter().map(GridTransform::permutation).collect();
    let counts = (0..samples)
        .into_par_iter()
        .map(|i| {
            let x = seeded_stream(seed, i).unit_point(m * n);
            let base = f.label_of(&x);
            perms
                .iter()
                .map(|p| u64::from(f.label_of(&p.permute(&x)) != base))
                .collect::<Vec<u64>>()
        })
        .reduce(
            || vec![0; perms.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let rows = transforms
        .iter()
        .zip(counts)
        .enumerate()
        .map(|(transform_id, (t, violations))| ViolationRow {
            transform_id,
            transform: *t,
            violations,
            samples,
        })
        .collect();
    Ok(InvarianceReport { seed, rows })
}

/// Images `alpha(y)` of a ball centre under a set of transforms.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub epsilon: f64,
    pub centers: Vec<Vec<f64>>,
}

impl Orbit {
    pub fn count(&self) -> usize {
        self.centers.len()
    }

    /// Number of bitwise-distinct centres.
    pub fn distinct_count(&self) -> usize {
        self.centers
            .iter()
            .map(|c| c.iter().map(|v| v.to_bits()).collect::<Vec<u64>>())
            .collect::<HashSet<_>>()
            .len()
    }
}

pub fn orbit_of_ball(
    center: &Point,
    m: usize,
    n: usize,
    epsilon: f64,
    transforms: &[GridTransform],
) -> Result<Orbit> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return invalid(format!("epsilon must be positive, got {epsilon}"));
    }
    if center.dim() != m * n {
        return Err(Error::DimensionMismatch {
            expected: m * n,
            got: center.dim(),
        });
    }
    let centers = transforms
        .iter()
        .map(|t| {
            if t.grid() != (m, n) {
                return invalid("transform grid does not match the centre");
            }
            t.apply_to_values(center.coords())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Orbit { epsilon, centers })
}

/// Smallest Euclidean distance from `z` to an orbit centre.
pub fn nearest_orbit_distance(z: &Point, orbit: &Orbit) -> Result<f64> {
    let first = orbit
        .centers
        .first()
        .ok_or_else(|| Error::InvalidInput("empty orbit".into()))?;
    if first.len() != z.dim() {
        return Err(Error::DimensionMismatch {
            expected: first.len(),
            got: z.dim(),
        });
    }
    Ok(orbit
        .centers
        .iter()
        .map(|c| euclidean(z.coords(), c))
        .fold(f64::INFINITY, f64::min))
}

/// How the size of the label-preserving permutation set grows with input
/// dimension `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryClass {
    /// `k^2` transforms (grid images).
    ImagePoly,
    /// `k!` transforms (graphs: every relabelling of the nodes).
    GraphFactorial,
}

impl SymmetryClass {
    pub fn log_count(self, k: u64) -> f64 {
        let k = k as f64;
        match self {
            SymmetryClass::ImagePoly => 2.0 * k.ln(),
            SymmetryClass::GraphFactorial => ln_gamma(k + 1.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SymmetryClass::ImagePoly => "image_poly",
            SymmetryClass::GraphFactorial => "graph_factorial",
        }
    }
}

impl FromStr for SymmetryClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "image_poly" => Ok(SymmetryClass::ImagePoly),
            "graph_factorial" => Ok(SymmetryClass::GraphFactorial),
            _ => invalid(format!(
                "unknown symmetry class `{s}` (expected image_poly or graph_factorial)"
            )),
        }
    }
}
