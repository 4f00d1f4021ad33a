//! Prototype filter banks and the label maps they induce on the unit square.
//!
//! A [`FilterBank`] labels a point by its winning prototype: the nearest one in
//! L1 distance, or the one with the largest dot product. Rendering the L1 bank
//! over the unit square gives a label map whose boundaries are far from
//! smooth; the rest of this module measures that: [`rasterize`] samples cell
//! centres, [`unstable_cells`] marks cells with a differently labelled
//! neighbour, [`refine_and_count`] box-counts the boundary over successive
//! dyadic refinements, and [`soft_rasterize`] replaces the hard winner with a
//! temperature softmax over the prototype scores.

use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::model::{argmax, softmax, DecisionFunction, Label, Point, SoftDecisionFunction};

/// Largest refinement depth accepted by [`refine_and_count`] (2^28 cells).
pub const MAX_DEPTH: u32 = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoringMode {
    /// Winner is the prototype with the smallest L1 distance.
    L1Distance,
    /// Winner is the prototype with the largest dot product.
    DotProduct,
}

impl ScoringMode {
    pub fn name(self) -> &'static str {
        match self {
            ScoringMode::L1Distance => "l1",
            ScoringMode::DotProduct => "dot",
        }
    }
}

impl FromStr for ScoringMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" | "l1_distance" => Ok(ScoringMode::L1Distance),
            "dot" | "dot_product" => Ok(ScoringMode::DotProduct),
            _ => invalid(format!("unknown scoring mode `{s}` (expected l1 or dot)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    prototypes: Vec<Vec<f64>>,
    mode: ScoringMode,
    dim: usize,
}

impl FilterBank {
    pub fn new(prototypes: Vec<Vec<f64>>, mode: ScoringMode) -> Result<Self> {
        if prototypes.len() < 2 {
            return invalid("a filter bank needs at least two prototypes");
        }
        let dim = prototypes[0].len();
        if dim == 0 {
            return invalid("prototypes must be non-empty");
        }
        for (i, p) in prototypes.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return invalid(format!("prototype {i} leaves the unit cube"));
            }
        }
        Ok(Self {
            prototypes,
            mode,
            dim,
        })
    }

    /// The four-prototype bank `(1/2,1/2), (2/3,1/3), (1/3,2/3), (1/4,3/4)` in
    /// L1 mode.
    pub fn paper() -> Self {
        Self {
            prototypes: vec![
                vec![1.0 / 2.0, 1.0 / 2.0],
                vec![2.0 / 3.0, 1.0 / 3.0],
                vec![1.0 / 3.0, 2.0 / 3.0],
                vec![1.0 / 4.0, 3.0 / 4.0],
            ],
            mode: ScoringMode::L1Distance,
            dim: 2,
        }
    }

    pub fn with_mode(mut self, mode: ScoringMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn prototypes(&self) -> &[Vec<f64>] {
        &self.prototypes
    }

    pub fn mode(&self) -> ScoringMode {
        self.mode
    }

    /// Raw score of prototype `i` at `x`: L1 distance or dot product.
    fn raw_score(&self, i: usize, x: &[f64]) -> f64 {
        let p = &self.prototypes[i];
        match self.mode {
            ScoringMode::L1Distance => p.iter().zip(x).map(|(a, b)| (b - a).abs()).sum(),
            ScoringMode::DotProduct => p.iter().zip(x).map(|(a, b)| a * b).sum(),
        }
    }

    /// Scores oriented so that larger is better: negated distances in L1 mode,
    /// dot products in dot mode.
    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        (0..self.prototypes.len())
            .map(|i| match self.mode {
                ScoringMode::L1Distance => -self.raw_score(i, x),
                ScoringMode::DotProduct => self.raw_score(i, x),
            })
            .collect()
    }

    fn winner_raw(&self, x: &[f64]) -> (usize, f64) {
        let mut best = 0;
        let mut best_score = self.raw_score(0, x);
        for i in 1..self.prototypes.len() {
            let s = self.raw_score(i, x);
            let better = match self.mode {
                ScoringMode::L1Distance => s < best_score,
                ScoringMode::DotProduct => s > best_score,
            };
            if better {
                best = i;
                best_score = s;
            }
        }
        (best, best_score)
    }

    /// Winning prototype and its raw score (distance or dot value).
    pub fn winner(&self, x: &Point) -> Result<(Label, f64)> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.dim(),
            });
        }
        let (i, score) = self.winner_raw(x.coords());
        Ok((Label::new(i, self.prototypes.len())?, score))
    }
}

impl DecisionFunction for FilterBank {
    fn dim(&self) -> usize {
        self.dim
    }

    fn labels(&self) -> usize {
        self.prototypes.len()
    }

    fn label_of(&self, x: &[f64]) -> usize {
        self.winner_raw(x).0
    }
}

/// A filter bank whose hard winner is replaced by `softmax(temperature * logits)`.
#[derive(Debug, Clone)]
pub struct SoftFilterBank {
    bank: FilterBank,
    temperature: f64,
}

impl SoftFilterBank {
    pub fn new(bank: FilterBank, temperature: f64) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return invalid(format!("temperature must be positive, got {temperature}"));
        }
        Ok(Self { bank, temperature })
    }
}

impl SoftDecisionFunction for SoftFilterBank {
    fn dim(&self) -> usize {
        self.bank.dim
    }

    fn labels(&self) -> usize {
        self.bank.prototypes.len()
    }

    fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        let logits: Vec<f64> = self
            .bank
            .logits(x)
            .into_iter()
            .map(|z| z * self.temperature)
            .collect();
        softmax(&logits)
    }
}

/// Axis-aligned rectangle inside the unit square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extent {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Extent {
    pub const UNIT: Extent = Extent {
        x_min: 0.0,
        x_max: 1.0,
        y_min: 0.0,
        y_max: 1.0,
    };

    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let e = Self {
            x_min,
            x_max,
            y_min,
            y_max,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        let inside = |v: f64| (0.0..=1.0).contains(&v);
        if ![self.x_min, self.x_max, self.y_min, self.y_max]
            .into_iter()
            .all(inside)
        {
            return invalid(format!("extent {self:?} leaves the unit square"));
        }
        if !(self.x_max > self.x_min && self.y_max > self.y_min) {
            return invalid(format!("extent {self:?} has zero area"));
        }
        Ok(())
    }

    /// Centre of cell `(row, col)` in a `width x height` grid; row 0 is the top.
    pub fn cell_center(&self, row: usize, col: usize, width: usize, height: usize) -> [f64; 2] {
        let x = self.x_min + (self.x_max - self.x_min) * (col as f64 + 0.5) / width as f64;
        let y = self.y_max - (self.y_max - self.y_min) * (row as f64 + 0.5) / height as f64;
        [x, y]
    }

    /// Corner `(i, j)` of a grid with `cells` cells per side; `j = 0` is the top edge.
    fn corner(&self, i: usize, j: usize, cells: usize) -> [f64; 2] {
        let x = self.x_min + (self.x_max - self.x_min) * i as f64 / cells as f64;
        let y = self.y_max - (self.y_max - self.y_min) * j as f64 / cells as f64;
        [x, y]
    }
}

/// Row-major grid of labels over an [`Extent`]; row 0 is the top.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRaster {
    width: usize,
    height: usize,
    extent: Extent,
    cardinality: usize,
    labels: Vec<usize>,
}

impl LabelRaster {
    pub fn from_labels(
        width: usize,
        height: usize,
        extent: Extent,
        cardinality: usize,
        labels: Vec<usize>,
    ) -> Result<Self> {
        extent.validate()?;
        if width == 0 || height == 0 {
            return invalid("raster sides must be positive");
        }
        if labels.len() != width * height {
            return invalid(format!(
                "{} labels for a {width}x{height} raster",
                labels.len()
            ));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= cardinality) {
            return invalid(format!("label {bad} out of range for {cardinality} labels"));
        }
        Ok(Self {
            width,
            height,
            extent,
            cardinality,
            labels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn extent(&self) -> Extent {
        self.extent
    }

    pub fn cardinality(&self) -> usize {
        self.cardinality
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn get(&self, row: usize, col: usize) -> usize {
        self.labels[row * self.width + col]
    }

    /// Number of cells carrying each label, indexed by label.
    pub fn label_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.cardinality];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

fn check_raster_args(f_dim: usize, extent: &Extent, width: usize, height: usize) -> Result<()> {
    if f_dim != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: f_dim,
        });
    }
    extent.validate()?;
    if width < 2 || height < 2 {
        return invalid(format!("raster must be at least 2x2, got {width}x{height}"));
    }
    Ok(())
}

/// Labels every cell centre of a `width x height` grid over `extent`.
pub fn rasterize<F>(f: &F, extent: Extent, width: usize, height: usize) -> Result<LabelRaster>
where
    F: DecisionFunction + ?Sized,
{
    check_raster_args(f.dim(), &extent, width, height)?;
    let labels: Vec<usize> = (0..height)
        .into_par_iter()
        .flat_map_iter(|r| {
            (0..width).map(move |c| f.label_of(&extent.cell_center(r, c, width, height)))
        })
        .collect();
    Ok(LabelRaster {
        width,
        height,
        extent,
        cardinality: f.labels(),
        labels,
    })
}

/// Per-cell probability vectors, row-major, `labels` entries per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftRaster {
    width: usize,
    height: usize,
    extent: Extent,
    labels: usize,
    probs: Vec<f64>,
}

impl SoftRaster {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell(&self, row: usize, col: usize) -> &[f64] {
        let start = (row * self.width + col) * self.labels;
        &self.probs[start..start + self.labels]
    }

    /// Hard raster of per-cell argmax (lowest index on ties).
    pub fn argmax_raster(&self) -> LabelRaster {
        let labels = self.probs.chunks(self.labels).map(argmax).collect();
        LabelRaster {
            width: self.width,
            height: self.height,
            extent: self.extent,
            cardinality: self.labels,
            labels,
        }
    }

    /// Fraction of cells whose argmax equals the corresponding cell of `hard`.
    pub fn agreement(&self, hard: &LabelRaster) -> Result<f64> {
        if hard.width != self.width || hard.height != self.height {
            return invalid("raster shapes differ");
        }
        let soft = self.argmax_raster();
        let same = soft
            .labels
            .iter()
            .zip(&hard.labels)
            .filter(|(a, b)| a == b)
            .count();
        Ok(same as f64 / (self.width * self.height) as f64)
    }
}

/// Evaluates `softmax(temperature * logits)` of the bank at every cell centre.
pub fn soft_rasterize(
    bank: &FilterBank,
    extent: Extent,
    width: usize,
    height: usize,
    temperature: f64,
) -> Result<SoftRaster> {
    let soft = SoftFilterBank::new(bank.clone(), temperature)?;
    check_raster_args(bank.dim, &extent, width, height)?;
    let probs: Vec<f64> = (0..height)
        .into_par_iter()
        .flat_map_iter(|r| {
            let soft = &soft;
            (0..width)
                .flat_map(move |c| soft.probabilities(&extent.cell_center(r, c, width, height)))
        })
        .collect();
    Ok(SoftRaster {
        width,
        height,
        extent,
        labels: bank.prototypes.len(),
        probs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighborhood {
    Four,
    Eight,
}

impl Neighborhood {
    fn offsets(self) -> &'static [(isize, isize)] {
        const FOUR: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
        const EIGHT: [(isize, isize); 8] = [
            (-1, -1),
            (-1, 0),
            (-1, 1),
            (0, -1),
            (0, 1),
            (1, -1),
            (1, 0),
            (1, 1),
        ];
        match self {
            Neighborhood::Four => &FOUR,
            Neighborhood::Eight => &EIGHT,
        }
    }
}

impl TryFrom<u32> for Neighborhood {
    type Error = Error;

    fn try_from(n: u32) -> Result<Self> {
        match n {
            4 => Ok(Neighborhood::Four),
            8 => Ok(Neighborhood::Eight),
            _ => invalid(format!("neighborhood must be 4 or 8, got {n}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstabilityMap {
    raster: LabelRaster,
    unstable: Vec<bool>,
    unstable_count: usize,
    unstable_fraction: f64,
}

impl InstabilityMap {
    pub fn raster(&self) -> &LabelRaster {
        &self.raster
    }

    pub fn unstable(&self) -> &[bool] {
        &self.unstable
    }

    pub fn is_unstable(&self, row: usize, col: usize) -> bool {
        self.unstable[row * self.raster.width + col]
    }

    pub fn unstable_count(&self) -> usize {
        self.unstable_count
    }

    pub fn unstable_fraction(&self) -> f64 {
        self.unstable_fraction
    }
}

/// Marks every cell that has a differently labelled neighbour. Neighbourhoods
/// stop at the raster edge.
pub fn unstable_cells(raster: &LabelRaster, neighborhood: Neighborhood) -> InstabilityMap {
    let (w, h) = (raster.width as isize, raster.height as isize);
    let offsets = neighborhood.offsets();
    let unstable: Vec<bool> = (0..h)
        .into_par_iter()
        .flat_map_iter(|r| {
            (0..w).map(move |c| {
                let here = raster.labels[(r * w + c) as usize];
                offsets.iter().any(|&(dr, dc)| {
                    let (nr, nc) = (r + dr, c + dc);
                    nr >= 0
                        && nr < h
                        && nc >= 0
                        && nc < w
                        && raster.labels[(nr * w + nc) as usize] != here
                })
            })
        })
        .collect();
    let unstable_count = unstable.iter().filter(|&&u| u).count();
    InstabilityMap {
        unstable_fraction: unstable_count as f64 / unstable.len() as f64,
        raster: raster.clone(),
        unstable,
        unstable_count,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxCountLevel {
    pub depth: u32,
    pub cells_per_side: usize,
    pub boundary_cells: u64,
    /// Cell side relative to the extent, `2^-depth`.
    pub cell_size: f64,
}

impl BoxCountLevel {
    pub fn log_inv_size(&self) -> f64 {
        -self.cell_size.ln()
    }

    /// `ln N`, or `None` when no boundary cell was found.
    pub fn log_count(&self) -> Option<f64> {
        (self.boundary_cells > 0).then(|| (self.boundary_cells as f64).ln())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxCountRecord {
    pub levels: Vec<BoxCountLevel>,
    /// Least-squares slope of `ln N` against `ln(1/s)` over the last three
    /// levels; absent when any of them has no boundary cell or fewer than two
    /// levels were requested.
    pub dimension: Option<f64>,
}

/// Box-counts the label boundary of `f` over dyadic grids on `extent`.
///
/// At depth `d` the extent is split into `2^d x 2^d` cells; a cell counts when
/// its four corners do not all share a label.
pub fn refine_and_count<F>(f: &F, extent: Extent, depths: &[u32]) -> Result<BoxCountRecord>
where
    F: DecisionFunction + ?Sized,
{
    if f.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: f.dim(),
        });
    }
    extent.validate()?;
    if depths.is_empty() {
        return invalid("at least one depth is required");
    }
    if depths.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("depths must be strictly increasing");
    }
    if let Some(&d) = depths.iter().find(|&&d| d > MAX_DEPTH) {
        return invalid(format!("depth {d} exceeds the maximum of {MAX_DEPTH}"));
    }

    let levels: Vec<BoxCountLevel> = depths
        .iter()
        .map(|&depth| {
            let cells = 1usize << depth;
            BoxCountLevel {
                depth,
                cells_per_side: cells,
                boundary_cells: count_boundary_cells(f, &extent, cells),
                cell_size: (-(depth as f64)).exp2(),
            }
        })
        .collect();

    let tail = &levels[levels.len().saturating_sub(3)..];
    let dimension = if tail.len() < 2 {
        None
    } else {
        tail.iter()
            .map(|l| l.log_count().map(|y| (l.log_inv_size(), y)))
            .collect::<Option<Vec<_>>>()
            .map(|pts| least_squares_slope(&pts))
    };
    Ok(BoxCountRecord { levels, dimension })
}

const ROW_BLOCK: usize = 32;

fn count_boundary_cells<F>(f: &F, extent: &Extent, cells: usize) -> u64
where
    F: DecisionFunction + ?Sized,
{
    let corner_row = |j: usize| -> Vec<usize> {
        (0..=cells)
            .map(|i| f.label_of(&extent.corner(i, j, cells)))
            .collect()
    };
    let blocks = cells.div_ceil(ROW_BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let first = b * ROW_BLOCK;
            let last = (first + ROW_BLOCK).min(cells);
            let mut upper = corner_row(first);
            let mut count = 0u64;
            for j in first..last {
                let lower = corner_row(j + 1);
                for i in 0..cells {
                    let a = upper[i];
                    if upper[i + 1] != a || lower[i] != a || lower[i + 1] != a {
                        count += 1;
                    }
                }
                upper = lower;
            }
            count
        })
        .sum()
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Constant, HalfSpace};

    fn pt(x: f64, y: f64) -> Point {
        Point::new(vec![x, y]).unwrap()
    }

    #[test]
    fn paper_bank_contents() {
        let bank = FilterBank::paper();
        assert_eq!(bank.mode(), ScoringMode::L1Distance);
        assert_eq!(bank.dim(), 2);
        assert_eq!(
            bank.prototypes(),
            &[
                vec![0.5, 0.5],
                vec![2.0 / 3.0, 1.0 / 3.0],
                vec![1.0 / 3.0, 2.0 / 3.0],
                vec![0.25, 0.75]
            ]
        );
        assert_eq!(bank.winner(&pt(0.5, 0.5)).unwrap().0.index(), 0);
        assert_eq!(bank.winner(&pt(2.0 / 3.0, 1.0 / 3.0)).unwrap().0.index(), 1);
    }

    #[test]
    fn winner_examples() {
        let l1 = FilterBank::paper();
        let (label, score) = l1.winner(&pt(0.5, 0.5)).unwrap();
        assert_eq!((label.index(), score), (0, 0.0));

        let dot = FilterBank::paper().with_mode(ScoringMode::DotProduct);
        let x = pt(1.0, 0.0);
        // Brute force: the four dot products are the first coordinates.
        let dots: Vec<f64> = dot.prototypes().iter().map(|p| p[0]).collect();
        assert_eq!(dots, vec![0.5, 2.0 / 3.0, 1.0 / 3.0, 0.25]);
        let (label, score) = dot.winner(&x).unwrap();
        assert_eq!((label.index(), score), (1, 2.0 / 3.0));

        let centre = [0.5, 0.5];
        let dots: Vec<f64> = dot
            .prototypes()
            .iter()
            .map(|p| p[0] * centre[0] + p[1] * centre[1])
            .collect();
        assert!(dots.iter().all(|d| (d - 0.5).abs() < 1e-15));
        assert!(dots.iter().all(|d| *d <= 0.5));
        let (label, score) = dot.winner(&pt(0.5, 0.5)).unwrap();
        assert_eq!((label.index(), score), (0, 0.5));

        assert!(l1.winner(&Point::new(vec![0.5]).unwrap()).is_err());
    }

    #[test]
    fn bank_validation() {
        assert!(FilterBank::new(vec![vec![0.5, 0.5]], ScoringMode::L1Distance).is_err());
        assert!(FilterBank::new(vec![vec![0.5, 0.5], vec![0.5]], ScoringMode::L1Distance).is_err());
        assert!(FilterBank::new(vec![vec![0.5], vec![1.5]], ScoringMode::L1Distance).is_err());
        assert!("dot".parse::<ScoringMode>().is_ok());
        assert!("max".parse::<ScoringMode>().is_err());
    }

    #[test]
    fn constant_raster() {
        let f = Constant::new(2, 1, 3).unwrap();
        let r = rasterize(&f, Extent::new(0.2, 0.4, 0.1, 0.9).unwrap(), 8, 8).unwrap();
        assert!(r.labels().iter().all(|&l| l == 1));
        assert_eq!(r.label_counts(), vec![0, 64, 0]);
        assert_eq!(
            unstable_cells(&r, Neighborhood::Eight).unstable_fraction(),
            0.0
        );
    }

    #[test]
    fn half_plane_raster_and_instability() {
        let f = HalfSpace::half_plane_2d(0.5);
        let r = rasterize(&f, Extent::UNIT, 4, 4).unwrap();
        for row in 0..4 {
            let labels: Vec<usize> = (0..4).map(|c| r.get(row, c)).collect();
            assert_eq!(labels, vec![0, 0, 1, 1]);
        }
        let m = unstable_cells(&r, Neighborhood::Four);
        for row in 0..4 {
            let flags: Vec<bool> = (0..4).map(|c| m.is_unstable(row, c)).collect();
            assert_eq!(flags, vec![false, true, true, false]);
        }
        assert_eq!(m.unstable_fraction(), 0.5);
        assert_eq!(m.unstable_count(), 8);
    }

    #[test]
    fn row_zero_is_top() {
        // label 1 in the upper half (y > 0.5)
        let f = HalfSpace::new(vec![0.0, 1.0], 0.5).unwrap();
        let r = rasterize(&f, Extent::UNIT, 2, 2).unwrap();
        assert_eq!(r.labels(), &[1, 1, 0, 0]);
    }

    #[test]
    fn raster_rejects_bad_args() {
        let f = HalfSpace::half_plane_2d(0.5);
        assert!(rasterize(&f, Extent::UNIT, 1, 4).is_err());
        let flat = Extent {
            x_min: 0.3,
            x_max: 0.3,
            y_min: 0.0,
            y_max: 1.0,
        };
        assert!(rasterize(&f, flat, 4, 4).is_err());
        assert!(Extent::new(-0.1, 0.5, 0.0, 1.0).is_err());
        assert!(rasterize(&HalfSpace::threshold_1d(0.5), Extent::UNIT, 4, 4).is_err());
    }

    #[test]
    fn soft_raster_limits() {
        let bank = FilterBank::paper();
        let cold = soft_rasterize(&bank, Extent::UNIT, 8, 8, 1e-9).unwrap();
        for r in 0..8 {
            for c in 0..8 {
                let p = cold.cell(r, c);
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                assert!(p.iter().all(|v| (v - 0.25).abs() < 1e-6));
            }
        }
        for t in [0.1, 1.0, 50.0] {
            let soft = SoftFilterBank::new(bank.clone(), t).unwrap();
            let p = soft.probabilities(&[0.5, 0.5]);
            assert!(p[1..].iter().all(|&v| p[0] > v));
        }
        assert!(soft_rasterize(&bank, Extent::UNIT, 8, 8, 0.0).is_err());
        assert!(soft_rasterize(&bank, Extent::UNIT, 8, 8, -1.0).is_err());
    }

    #[test]
    fn soft_argmax_tracks_hard_map_as_temperature_grows() {
        let bank = FilterBank::paper();
        let hard = rasterize(&bank, Extent::UNIT, 64, 64).unwrap();
        let agreement: Vec<f64> = [1.0, 10.0, 100.0, 1000.0]
            .iter()
            .map(|&t| {
                soft_rasterize(&bank, Extent::UNIT, 64, 64, t)
                    .unwrap()
                    .agreement(&hard)
                    .unwrap()
            })
            .collect();
        assert!(agreement.windows(2).all(|w| w[1] >= w[0]), "{agreement:?}");
        assert!(agreement[3] >= 0.999, "{agreement:?}");
    }

    #[test]
    fn box_count_of_vertical_line() {
        let f = HalfSpace::half_plane_2d(0.5);
        let rec = refine_and_count(&f, Extent::UNIT, &[4, 5, 6, 8, 9, 10]).unwrap();
        for level in &rec.levels {
            assert_eq!(level.boundary_cells, 1u64 << level.depth);
        }
        let dim = rec.dimension.unwrap();
        assert!((dim - 1.0).abs() < 1e-12, "{dim}");
    }

    #[test]
    fn box_count_of_constant_has_no_dimension() {
        let f = Constant::new(2, 0, 2).unwrap();
        let rec = refine_and_count(&f, Extent::UNIT, &[2, 3, 4]).unwrap();
        assert!(rec.levels.iter().all(|l| l.boundary_cells == 0));
        assert_eq!(rec.dimension, None);
    }

    #[test]
    fn box_count_rejects_bad_depths() {
        let f = HalfSpace::half_plane_2d(0.5);
        assert!(refine_and_count(&f, Extent::UNIT, &[3, 3]).is_err());
        assert!(refine_and_count(&f, Extent::UNIT, &[5, 4]).is_err());
        assert!(refine_and_count(&f, Extent::UNIT, &[13, 15]).is_err());
        assert!(refine_and_count(&f, Extent::UNIT, &[]).is_err());
    }

    #[test]
    fn box_count_matches_brute_force_corner_scan() {
        let bank = FilterBank::paper();
        for depth in [3u32, 5, 6] {
            let cells = 1usize << depth;
            let label = |i: usize, j: usize| {
                let x = i as f64 / cells as f64;
                let y = 1.0 - j as f64 / cells as f64;
                bank.label_of(&[x, y])
            };
            let mut expected = 0;
            for j in 0..cells {
                for i in 0..cells {
                    let corners = [
                        label(i, j),
                        label(i + 1, j),
                        label(i, j + 1),
                        label(i + 1, j + 1),
                    ];
                    if corners.iter().any(|&c| c != corners[0]) {
                        expected += 1;
                    }
                }
            }
            let rec = refine_and_count(&bank, Extent::UNIT, &[depth]).unwrap();
            assert_eq!(rec.levels[0].boundary_cells, expected, "depth {depth}");
        }
    }

    #[test]
    fn refinement_consistency() {
        let bank = FilterBank::paper();
        let coarse = rasterize(&bank, Extent::UNIT, 32, 32).unwrap();
        let fine = rasterize(&bank, Extent::UNIT, 64, 64).unwrap();
        // A coarse centre is the shared corner of its four fine sub-cells, so
        // it is not sampled by them; agreement is only required where the
        // whole neighbourhood is label-constant.
        let mut checked = 0;
        for r in 0..32 {
            for c in 0..32 {
                let subs = [
                    fine.get(2 * r, 2 * c),
                    fine.get(2 * r, 2 * c + 1),
                    fine.get(2 * r + 1, 2 * c),
                    fine.get(2 * r + 1, 2 * c + 1),
                ];
                if subs.iter().all(|&s| s == subs[0]) {
                    checked += 1;
                    assert_eq!(coarse.get(r, c), subs[0], "cell ({r},{c})");
                }
            }
        }
        assert!(checked > 900);
    }

    #[test]
    fn mirrored_prototypes_swap_under_coordinate_swap() {
        use crate::rng::seeded_stream;
        let bank = FilterBank::paper();
        let mirror_of_last = [0.75, 0.25];
        let l1 = |p: &[f64], x: &[f64]| (x[0] - p[0]).abs() + (x[1] - p[1]).abs();
        let mut rng = seeded_stream(2024, 0);
        let mut tested = 0;
        for _ in 0..10_000 {
            let x = rng.unit_point(2);
            let swapped = [x[1], x[0]];
            let w = bank.label_of(&x);
            if w != 1 && w != 2 {
                continue;
            }
            // After swapping, the competitors are p0, the mirror of the winner's
            // partner and the mirror of p3.
            let dists_after_swap = [
                l1(&bank.prototypes()[0], &x),
                l1(&bank.prototypes()[1], &x),
                l1(&bank.prototypes()[2], &x),
                l1(&mirror_of_last, &x),
            ];
            let d_win = dists_after_swap[w];
            let positive_margin = dists_after_swap
                .iter()
                .enumerate()
                .all(|(i, &d)| i == w || d > d_win);
            if !positive_margin {
                continue;
            }
            tested += 1;
            assert_eq!(bank.label_of(&swapped), 3 - w, "x = {x:?}");
        }
        assert!(tested > 1000, "only {tested} points had a positive margin");
    }
}
