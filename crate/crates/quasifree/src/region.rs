//! Axis-aligned half-open regions of R^d and cylinder decompositions.
//!
//! Disjointness, coverage, and partition checks are exact decision
//! procedures, not sampling: membership of a finite union of half-open
//! boxes is constant on each cell of the arrangement induced by the
//! interval endpoints, so probing one representative point per cell decides
//! the predicate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-open interval [lo, hi); lo may be -inf and hi may be +inf.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

#[derive(Serialize, Deserialize)]
struct IntervalRepr {
    /// None encodes an unbounded lower end (-inf).
    lo: Option<f64>,
    /// None encodes an unbounded upper end (+inf).
    hi: Option<f64>,
}

impl Serialize for Interval {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        IntervalRepr {
            lo: if self.lo.is_finite() { Some(self.lo) } else { None },
            hi: if self.hi.is_finite() { Some(self.hi) } else { None },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = IntervalRepr::deserialize(d)?;
        Interval::new(
            repr.lo.unwrap_or(f64::NEG_INFINITY),
            repr.hi.unwrap_or(f64::INFINITY),
        )
        .map_err(serde::de::Error::custom)
    }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() {
            return Err(Error::InvalidArgument("interval bound is NaN".into()));
        }
        if !(lo < hi) {
            return Err(Error::InvalidArgument(format!(
                "empty interval [{lo}, {hi})"
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x < self.hi
    }

    fn overlaps(&self, other: &Interval) -> bool {
        self.lo.max(other.lo) < self.hi.min(other.hi)
    }
}

/// Product of per-axis intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    intervals: Vec<Interval>,
}

impl AxisBox {
    pub fn new(intervals: Vec<Interval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidArgument("zero-dimensional box".into()));
        }
        Ok(AxisBox { intervals })
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && self
                .intervals
                .iter()
                .zip(point)
                .all(|(iv, x)| iv.contains(*x))
    }

    fn overlaps(&self, other: &AxisBox) -> bool {
        self.intervals
            .iter()
            .zip(&other.intervals)
            .all(|(a, b)| a.overlaps(b))
    }
}

/// Finite union of pairwise disjoint half-open boxes in R^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RegionRepr", into = "RegionRepr")]
pub struct Region {
    dim: usize,
    boxes: Vec<AxisBox>,
}

#[derive(Serialize, Deserialize)]
struct RegionRepr {
    dim: usize,
    boxes: Vec<AxisBox>,
}

impl TryFrom<RegionRepr> for Region {
    type Error = Error;
    fn try_from(r: RegionRepr) -> Result<Self> {
        Region::new(r.dim, r.boxes)
    }
}

impl From<Region> for RegionRepr {
    fn from(r: Region) -> Self {
        RegionRepr {
            dim: r.dim,
            boxes: r.boxes,
        }
    }
}

impl Region {
    pub fn new(dim: usize, boxes: Vec<AxisBox>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("regions need dimension >= 1".into()));
        }
        for b in &boxes {
            if b.dim() != dim {
                return Err(Error::InvalidArgument(format!(
                    "box of dimension {} in a region of dimension {dim}",
                    b.dim()
                )));
            }
        }
        for i in 0..boxes.len() {
            for j in i + 1..boxes.len() {
                if boxes[i].overlaps(&boxes[j]) {
                    return Err(Error::InvalidArgument(format!(
                        "boxes {i} and {j} of the region overlap"
                    )));
                }
            }
        }
        Ok(Region { dim, boxes })
    }

    /// One-dimensional region [lo, hi).
    pub fn line(lo: f64, hi: f64) -> Result<Self> {
        Region::new(1, vec![AxisBox::new(vec![Interval::new(lo, hi)?])?])
    }

    /// All of R^d as a single box.
    pub fn whole(dim: usize) -> Self {
        let iv = Interval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        };
        Region {
            dim,
            boxes: vec![AxisBox {
                intervals: vec![iv; dim],
            }],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn boxes(&self) -> &[AxisBox] {
        &self.boxes
    }

    pub fn is_empty_union(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        self.boxes.iter().any(|b| b.contains(point))
    }
}

/// Per-axis arrangement endpoints of a set of regions.
fn axis_endpoints(dim: usize, regions: &[&Region]) -> Vec<Vec<f64>> {
    let mut per_axis: Vec<Vec<f64>> = vec![Vec::new(); dim];
    for region in regions {
        for b in &region.boxes {
            for (axis, iv) in b.intervals.iter().enumerate() {
                if iv.lo.is_finite() {
                    per_axis[axis].push(iv.lo);
                }
                if iv.hi.is_finite() {
                    per_axis[axis].push(iv.hi);
                }
            }
        }
    }
    for pts in per_axis.iter_mut() {
        pts.sort_by(|a, b| a.total_cmp(b));
        pts.dedup();
    }
    per_axis
}

/// One representative coordinate per arrangement cell of an axis:
/// below the first endpoint, each endpoint itself, between neighbors,
/// and above the last endpoint.
fn cell_representatives(endpoints: &[f64]) -> Vec<f64> {
    if endpoints.is_empty() {
        return vec![0.0];
    }
    let mut reps = Vec::with_capacity(2 * endpoints.len() + 1);
    reps.push(endpoints[0] - 1.0);
    for (i, p) in endpoints.iter().enumerate() {
        reps.push(*p);
        if let Some(q) = endpoints.get(i + 1) {
            reps.push(0.5 * (p + q));
        }
    }
    reps.push(endpoints[endpoints.len() - 1] + 1.0);
    reps
}

fn for_each_probe_point(
    per_axis_reps: &[Vec<f64>],
    mut f: impl FnMut(&[f64]) -> Result<()>,
) -> Result<()> {
    let dim = per_axis_reps.len();
    let mut idx = vec![0usize; dim];
    let mut point = vec![0.0f64; dim];
    loop {
        for (a, &i) in idx.iter().enumerate() {
            point[a] = per_axis_reps[a][i];
        }
        f(&point)?;
        // advance the mixed-radix counter
        let mut axis = 0;
        loop {
            if axis == dim {
                return Ok(());
            }
            idx[axis] += 1;
            if idx[axis] < per_axis_reps[axis].len() {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
    }
}

/// A finite list of pairwise disjoint regions covering R^d, each of positive
/// measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DecompRepr", into = "DecompRepr")]
pub struct CylinderDecomposition {
    dim: usize,
    regions: Vec<Region>,
}

#[derive(Serialize, Deserialize)]
struct DecompRepr {
    dim: usize,
    regions: Vec<Region>,
}

impl TryFrom<DecompRepr> for CylinderDecomposition {
    type Error = Error;
    fn try_from(r: DecompRepr) -> Result<Self> {
        CylinderDecomposition::new(r.dim, r.regions)
    }
}

impl From<CylinderDecomposition> for DecompRepr {
    fn from(c: CylinderDecomposition) -> Self {
        DecompRepr {
            dim: c.dim,
            regions: c.regions,
        }
    }
}

impl CylinderDecomposition {
    pub fn new(dim: usize, regions: Vec<Region>) -> Result<Self> {
        let c = CylinderDecomposition { dim, regions };
        c.validate()?;
        Ok(c)
    }

    /// Disjointness, coverage of R^d, and positive measure, decided exactly
    /// on the arrangement cells of the involved interval endpoints.
    pub fn validate(&self) -> Result<()> {
        if self.regions.is_empty() {
            return Err(Error::InvalidArgument(
                "decomposition has no regions".into(),
            ));
        }
        for (i, r) in self.regions.iter().enumerate() {
            if r.dim() != self.dim {
                return Err(Error::InvalidArgument(format!(
                    "region {i} has dimension {}, decomposition has {}",
                    r.dim(),
                    self.dim
                )));
            }
            if r.is_empty_union() {
                return Err(Error::InvalidArgument(format!(
                    "region {i} is empty (zero measure)"
                )));
            }
        }
        let refs: Vec<&Region> = self.regions.iter().collect();
        let per_axis: Vec<Vec<f64>> = axis_endpoints(self.dim, &refs)
            .iter()
            .map(|e| cell_representatives(e))
            .collect();
        for_each_probe_point(&per_axis, |point| {
            let holders: Vec<usize> = self
                .regions
                .iter()
                .enumerate()
                .filter(|(_, r)| r.contains(point))
                .map(|(i, _)| i)
                .collect();
            match holders.len() {
                1 => Ok(()),
                0 => Err(Error::InvalidArgument(format!(
                    "decomposition does not cover the point {point:?}"
                ))),
                _ => Err(Error::InvalidArgument(format!(
                    "regions {holders:?} overlap at {point:?}"
                ))),
            }
        })
    }

    /// Split the real line at strictly increasing points:
    /// (-inf, p1), [p1, p2), ..., [pk, +inf).
    pub fn from_split_points(points: &[f64]) -> Result<Self> {
        if points.is_empty() {
            return CylinderDecomposition::new(1, vec![Region::whole(1)]);
        }
        for w in points.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::InvalidArgument(format!(
                    "split points must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        let mut regions = Vec::with_capacity(points.len() + 1);
        regions.push(Region::line(f64::NEG_INFINITY, points[0])?);
        for w in points.windows(2) {
            regions.push(Region::line(w[0], w[1])?);
        }
        regions.push(Region::line(points[points.len() - 1], f64::INFINITY)?);
        CylinderDecomposition::new(1, regions)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    /// Index of the unique region containing the point.
    pub fn region_index(&self, point: &[f64]) -> Option<usize> {
        self.regions.iter().position(|r| r.contains(point))
    }
}

/// Whether `parts` partition `target` exactly: pairwise disjoint, contained
/// in the target, and jointly covering it. Decided on arrangement cells.
pub fn partition_check(target: &Region, parts: &[Region]) -> Result<()> {
    if parts.is_empty() {
        return Err(Error::InvalidArgument("empty part list".into()));
    }
    for (i, p) in parts.iter().enumerate() {
        if p.dim() != target.dim() {
            return Err(Error::InvalidArgument(format!(
                "part {i} has dimension {}, target has {}",
                p.dim(),
                target.dim()
            )));
        }
        if p.is_empty_union() {
            return Err(Error::InvalidArgument(format!("part {i} is empty")));
        }
    }
    let mut refs: Vec<&Region> = vec![target];
    refs.extend(parts.iter());
    let per_axis: Vec<Vec<f64>> = axis_endpoints(target.dim(), &refs)
        .iter()
        .map(|e| cell_representatives(e))
        .collect();
    for_each_probe_point(&per_axis, |point| {
        let inside_target = target.contains(point);
        let holders: Vec<usize> = parts
            .iter()
            .enumerate()
            .filter(|(_, r)| r.contains(point))
            .map(|(i, _)| i)
            .collect();
        if holders.len() > 1 {
            return Err(Error::InvalidArgument(format!(
                "parts {holders:?} overlap at {point:?}"
            )));
        }
        match (inside_target, holders.len()) {
            (true, 1) | (false, 0) => Ok(()),
            (true, 0) => Err(Error::InvalidArgument(format!(
                "parts do not cover the target at {point:?}"
            ))),
            (false, _) => Err(Error::InvalidArgument(format!(
                "part {} leaves the target at {point:?}",
                holders[0]
            ))),
        }
    })
}
