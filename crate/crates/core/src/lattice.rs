//! Degrees, boxes and faces of `N^n`; regions of `Z^n` determined by a box
//! under clamping; localization, support and primary components of downsets.

use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poset::RegionKind;

pub type Degree = Vec<i64>;

/// Largest `n` for which every face of `N^n` is enumerated.
pub const MAX_FACE_DIM: usize = 6;

/// A face of `N^n`, stored as a bitmask of coordinates (bit `i` is axis `i`,
/// zero-based). Faces serialize one-based.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Face(pub u32);

impl fmt::Debug for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.to_one_based())
    }
}

impl Face {
    pub fn empty() -> Face {
        Face(0)
    }

    pub fn full(n: usize) -> Face {
        Face(((1u64 << n) - 1) as u32)
    }

    pub fn single(i: usize) -> Face {
        Face(1 << i)
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    pub fn is_subset(self, other: Face) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: Face) -> Face {
        Face(self.0 | other.0)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Axes outside the face, among the first `n`.
    pub fn complement_axes(self, n: usize) -> Vec<usize> {
        (0..n).filter(|&i| !self.contains(i)).collect()
    }

    pub fn axes(self, n: usize) -> Vec<usize> {
        (0..n).filter(|&i| self.contains(i)).collect()
    }

    /// All faces of `N^n` in bitmask order.
    pub fn all(n: usize) -> Vec<Face> {
        (0..(1u32 << n)).map(Face).collect()
    }

    pub fn to_one_based(self) -> Vec<usize> {
        (0..32).filter(|&i| self.contains(i)).map(|i| i + 1).collect()
    }

    pub fn from_one_based(n: usize, axes: &[usize]) -> Result<Face> {
        let mut mask = 0u32;
        for &a in axes {
            if a == 0 || a > n {
                return Err(Error::Invalid(format!("face coordinate {a} outside 1..={n}")));
            }
            mask |= 1 << (a - 1);
        }
        Ok(Face(mask))
    }
}

pub fn check_face_dim(n: usize) -> Result<()> {
    if n > MAX_FACE_DIM {
        return Err(Error::CapExceeded(format!(
            "n = {n} exceeds the face enumeration cap {MAX_FACE_DIM}"
        )));
    }
    Ok(())
}

/// The box `[lo, hi]` in `Z^n`, cells indexed row-major with the last axis fastest.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridBox {
    lo: Vec<i64>,
    hi: Vec<i64>,
    #[serde(skip)]
    strides: Vec<usize>,
}

impl fmt::Debug for GridBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Box{:?}..{:?}", self.lo, self.hi)
    }
}

impl GridBox {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Result<GridBox> {
        if lo.len() != hi.len() {
            return Err(Error::Invalid("box corners have different lengths".into()));
        }
        if let Some(i) = (0..lo.len()).find(|&i| lo[i] > hi[i]) {
            return Err(Error::Invalid(format!("box has lo > hi on axis {}", i + 1)));
        }
        let n = lo.len();
        let mut strides = vec![1usize; n];
        for i in (0..n.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * (hi[i + 1] - lo[i + 1] + 1) as usize;
        }
        let total: u128 = (0..n).map(|i| (hi[i] - lo[i] + 1) as u128).product();
        if total > 50_000_000 {
            return Err(Error::CapExceeded(format!("box with {total} cells")));
        }
        Ok(GridBox { lo, hi, strides })
    }

    pub fn n(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo
    }

    pub fn hi(&self) -> &[i64] {
        &self.hi
    }

    pub fn width(&self, i: usize) -> usize {
        (self.hi[i] - self.lo[i] + 1) as usize
    }

    pub fn len(&self) -> usize {
        (0..self.n()).map(|i| self.width(i)).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, q: &[i64]) -> bool {
        q.iter().enumerate().all(|(i, &x)| self.lo[i] <= x && x <= self.hi[i])
    }

    pub fn clamp(&self, q: &[i64]) -> Degree {
        q.iter()
            .enumerate()
            .map(|(i, &x)| x.clamp(self.lo[i], self.hi[i]))
            .collect()
    }

    /// Index of a cell inside the box.
    pub fn index(&self, q: &[i64]) -> usize {
        debug_assert!(self.contains(q), "{q:?} outside {self:?}");
        q.iter()
            .enumerate()
            .map(|(i, &x)| (x - self.lo[i]) as usize * self.strides[i])
            .sum()
    }

    /// Index of the cell governing `q` under clamping.
    pub fn clamp_index(&self, q: &[i64]) -> usize {
        self.index(&self.clamp(q))
    }

    pub fn coords(&self, idx: usize) -> Degree {
        let mut rem = idx;
        (0..self.n())
            .map(|i| {
                let c = rem / self.strides[i];
                rem %= self.strides[i];
                self.lo[i] + c as i64
            })
            .collect()
    }

    pub fn coord(&self, idx: usize, i: usize) -> i64 {
        self.lo[i] + ((idx / self.strides[i]) % self.width(i)) as i64
    }

    pub fn stride(&self, i: usize) -> usize {
        self.strides[i]
    }

    /// The cell one step up along axis `i`, if still inside the box.
    pub fn step_up(&self, idx: usize, i: usize) -> Option<usize> {
        (self.coord(idx, i) < self.hi[i]).then(|| idx + self.strides[i])
    }

    pub fn step_down(&self, idx: usize, i: usize) -> Option<usize> {
        (self.coord(idx, i) > self.lo[i]).then(|| idx - self.strides[i])
    }

    /// The cell with coordinate `i` replaced by `v` (which must lie in range).
    pub fn with_coord(&self, idx: usize, i: usize, v: i64) -> usize {
        let cur = self.coord(idx, i);
        (idx as i64 + (v - cur) * self.strides[i] as i64) as usize
    }

    /// Sets every coordinate in `face` to its top value.
    pub fn push_to_top(&self, idx: usize, face: Face) -> usize {
        let mut out = idx;
        for i in face.axes(self.n()) {
            out = self.with_coord(out, i, self.hi[i]);
        }
        out
    }

    /// True when `a <= b` componentwise.
    pub fn cell_leq(&self, a: usize, b: usize) -> bool {
        (0..self.n()).all(|i| self.coord(a, i) <= self.coord(b, i))
    }

    pub fn enlarged(&self, margin: i64) -> GridBox {
        GridBox::new(
            self.lo.iter().map(|x| x - margin).collect(),
            self.hi.iter().map(|x| x + margin).collect(),
        )
        .expect("enlarging keeps a valid box")
    }

    /// Smallest box containing both.
    pub fn hull(&self, other: &GridBox) -> GridBox {
        GridBox::new(
            self.lo.iter().zip(&other.lo).map(|(a, b)| *a.min(b)).collect(),
            self.hi.iter().zip(&other.hi).map(|(a, b)| *a.max(b)).collect(),
        )
        .expect("hull of valid boxes")
    }

    /// The negated box `[-hi, -lo]`.
    pub fn negated(&self) -> GridBox {
        GridBox::new(
            self.hi.iter().map(|x| -x).collect(),
            self.lo.iter().map(|x| -x).collect(),
        )
        .expect("negation keeps a valid box")
    }

    pub fn cells(&self) -> std::ops::Range<usize> {
        0..self.len()
    }

    pub fn is_top(&self, idx: usize, i: usize) -> bool {
        self.coord(idx, i) == self.hi[i]
    }
}

/// An upset or downset of `Z^n` determined by its trace on a box: `q` is a
/// member iff `clamp(q)` is.
#[derive(Clone, PartialEq, Eq)]
pub struct FinDetRegion {
    bx: GridBox,
    members: FixedBitSet,
    kind: RegionKind,
}

impl fmt::Debug for FinDetRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<Degree> = self.members.ones().map(|c| self.bx.coords(c)).collect();
        write!(f, "{:?} {:?} {:?}", self.kind, self.bx, cells)
    }
}

impl FinDetRegion {
    /// Validates that the bitset is closed in the box poset. Clamping is
    /// monotone, so this makes the extension closed in all of `Z^n`.
    pub fn new(bx: GridBox, members: FixedBitSet, kind: RegionKind) -> Result<FinDetRegion> {
        if kind == RegionKind::Interval {
            return Err(Error::Invalid("box regions are upsets or downsets".into()));
        }
        if members.len() != bx.len() {
            return Err(Error::Invalid(format!(
                "region bitset has {} bits for {} cells",
                members.len(),
                bx.len()
            )));
        }
        let r = FinDetRegion { bx, members, kind };
        if let Some((a, b)) = r.closure_violation() {
            return Err(Error::violation(
                format!("region is not an {kind:?}").to_lowercase(),
                format!("{:?} -> {:?}", r.bx.coords(a), r.bx.coords(b)),
            ));
        }
        Ok(r)
    }

    /// Builds from a predicate on degrees of the box.
    pub fn from_fn(bx: GridBox, kind: RegionKind, f: impl Fn(&[i64]) -> bool) -> Result<FinDetRegion> {
        let mut members = FixedBitSet::with_capacity(bx.len());
        for c in bx.cells() {
            if f(&bx.coords(c)) {
                members.insert(c);
            }
        }
        FinDetRegion::new(bx, members, kind)
    }

    pub fn empty(bx: GridBox, kind: RegionKind) -> FinDetRegion {
        let members = FixedBitSet::with_capacity(bx.len());
        FinDetRegion { bx, members, kind }
    }

    fn closure_violation(&self) -> Option<(usize, usize)> {
        for c in self.members.ones() {
            for i in 0..self.bx.n() {
                let next = match self.kind {
                    RegionKind::Upset => self.bx.step_up(c, i),
                    _ => self.bx.step_down(c, i),
                };
                if let Some(d) = next {
                    if !self.members.contains(d) {
                        return Some((c, d));
                    }
                }
            }
        }
        None
    }

    /// Rechecks closure along every unit step, including the one-layer
    /// extension past the box boundary.
    pub fn check_faithful(&self) -> Result<()> {
        if let Some((a, b)) = self.closure_violation() {
            return Err(Error::violation("region not closed", format!("{a} -> {b}")));
        }
        let big = self.bx.enlarged(1);
        for c in big.cells() {
            let q = big.coords(c);
            for i in 0..big.n() {
                let mut r = q.clone();
                match self.kind {
                    RegionKind::Upset => r[i] += 1,
                    _ => r[i] -= 1,
                }
                if self.contains(&q) && !self.contains(&r) {
                    return Err(Error::violation("clamp extension not closed", format!("{q:?} -> {r:?}")));
                }
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> &GridBox {
        &self.bx
    }

    pub fn members(&self) -> &FixedBitSet {
        &self.members
    }

    pub fn kind(&self) -> RegionKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.bx.n()
    }

    pub fn contains(&self, q: &[i64]) -> bool {
        self.members.contains(self.bx.clamp_index(q))
    }

    pub fn contains_cell(&self, c: usize) -> bool {
        self.members.contains(c)
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_clear()
    }

    pub fn cell_count(&self) -> usize {
        self.members.count_ones(..)
    }

    /// The same region on another box (membership read through clamping).
    pub fn rebox(&self, bx: &GridBox) -> Result<FinDetRegion> {
        let kind = self.kind;
        FinDetRegion::from_fn(bx.clone(), kind, |q| self.contains(q))
    }

    pub fn complement(&self) -> FinDetRegion {
        let mut m = self.members.clone();
        m.toggle_range(..);
        let kind = match self.kind {
            RegionKind::Upset => RegionKind::Downset,
            _ => RegionKind::Upset,
        };
        FinDetRegion {
            bx: self.bx.clone(),
            members: m,
            kind,
        }
    }

    fn require_downset(&self) -> Result<()> {
        if self.kind != RegionKind::Downset {
            return Err(Error::Invalid("operation expects a downset".into()));
        }
        Ok(())
    }

    fn with_members(&self, members: FixedBitSet) -> FinDetRegion {
        FinDetRegion {
            bx: self.bx.clone(),
            members,
            kind: self.kind,
        }
    }

    pub fn union(&self, other: &FinDetRegion) -> Result<FinDetRegion> {
        if self.bx != other.bx || self.kind != other.kind {
            return Err(Error::Mismatch("union of regions on different boxes or kinds".into()));
        }
        let mut m = self.members.clone();
        m.union_with(&other.members);
        Ok(self.with_members(m))
    }
}

/// `D_τ = {q : q + N τ ⊆ D}`: pushing τ-coordinates to the box top decides it.
pub fn localize_downset(d: &FinDetRegion, tau: Face) -> Result<FinDetRegion> {
    d.require_downset()?;
    let bx = &d.bx;
    let mut m = FixedBitSet::with_capacity(bx.len());
    for c in bx.cells() {
        if d.members.contains(bx.push_to_top(c, tau)) {
            m.insert(c);
        }
    }
    Ok(d.with_members(m))
}

/// Elements of `D` that die along every axis outside τ: `q ∉ D_{i}` for each
/// `i ∉ τ`. Equivalent to the definition because localization is
/// antitone in the face.
pub fn global_support_downset(d: &FinDetRegion, tau: Face) -> Result<FixedBitSet> {
    d.require_downset()?;
    let bx = &d.bx;
    let others = tau.complement_axes(bx.n());
    let mut out = FixedBitSet::with_capacity(bx.len());
    for c in d.members.ones() {
        if others
            .iter()
            .all(|&i| !d.members.contains(bx.with_coord(c, i, bx.hi()[i])))
        {
            out.insert(c);
        }
    }
    Ok(out)
}

/// Smallest downset of the box containing `s`.
pub fn down_closure(bx: &GridBox, s: &FixedBitSet) -> FixedBitSet {
    let mut out = s.clone();
    // Sweep each axis from top to bottom; closure under unit steps suffices.
    for i in 0..bx.n() {
        for c in (0..bx.len()).rev() {
            if out.contains(c) {
                if let Some(d) = bx.step_down(c, i) {
                    out.insert(d);
                }
            }
        }
    }
    out
}

pub fn up_closure(bx: &GridBox, s: &FixedBitSet) -> FixedBitSet {
    let mut out = s.clone();
    for i in 0..bx.n() {
        for c in 0..bx.len() {
            if out.contains(c) {
                if let Some(d) = bx.step_up(c, i) {
                    out.insert(d);
                }
            }
        }
    }
    out
}

/// `P_τ(D) = Γ_τ(D_τ) − N^n`.
pub fn primary_component_downset(d: &FinDetRegion, tau: Face) -> Result<FinDetRegion> {
    let local = localize_downset(d, tau)?;
    let support = global_support_downset(&local, tau)?;
    Ok(d.with_members(down_closure(&d.bx, &support)))
}

/// Every face with nonempty local support, paired with its primary component,
/// in face bitmask order. No redundant component is removed.
pub fn canonical_primary_decomposition_downset(d: &FinDetRegion) -> Result<Vec<(Face, FinDetRegion)>> {
    d.require_downset()?;
    check_face_dim(d.n())?;
    let mut out = Vec::new();
    for tau in Face::all(d.n()) {
        let p = primary_component_downset(d, tau)?;
        if !p.is_empty() {
            out.push((tau, p));
        }
    }
    Ok(out)
}

/// `k[b + Zτ + N^n]`. Coordinates of `b` in τ are normalized to 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndecFlatLabel {
    pub b: Degree,
    pub tau: Face,
}

/// `k[b + Zτ − N^n]`. Coordinates of `b` in τ are normalized to 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndecInjLabel {
    pub b: Degree,
    pub tau: Face,
}

fn normalize_base(mut b: Degree, tau: Face) -> Degree {
    for (i, x) in b.iter_mut().enumerate() {
        if tau.contains(i) {
            *x = 0;
        }
    }
    b
}

impl IndecFlatLabel {
    pub fn new(b: Degree, tau: Face) -> IndecFlatLabel {
        IndecFlatLabel {
            b: normalize_base(b, tau),
            tau,
        }
    }

    pub fn contains(&self, q: &[i64]) -> bool {
        (0..self.b.len()).all(|i| self.tau.contains(i) || q[i] >= self.b[i])
    }

    /// The label as a region of `bx`; needs `lo < b_i <= hi` off τ so the
    /// boundary is visible under clamping.
    pub fn to_region(&self, bx: &GridBox) -> Result<FinDetRegion> {
        for i in self.tau.complement_axes(self.b.len()) {
            if self.b[i] <= bx.lo()[i] || self.b[i] > bx.hi()[i] {
                return Err(Error::Invalid(format!("flat label {self:?} not representable in {bx:?}")));
            }
        }
        FinDetRegion::from_fn(bx.clone(), RegionKind::Upset, |q| self.contains(q))
    }
}

impl IndecInjLabel {
    pub fn new(b: Degree, tau: Face) -> IndecInjLabel {
        IndecInjLabel {
            b: normalize_base(b, tau),
            tau,
        }
    }

    pub fn contains(&self, q: &[i64]) -> bool {
        (0..self.b.len()).all(|i| self.tau.contains(i) || q[i] <= self.b[i])
    }

    /// The label as a region of `bx`; needs `lo <= b_i < hi` off τ.
    pub fn to_region(&self, bx: &GridBox) -> Result<FinDetRegion> {
        for i in self.tau.complement_axes(self.b.len()) {
            if self.b[i] < bx.lo()[i] || self.b[i] >= bx.hi()[i] {
                return Err(Error::Invalid(format!(
                    "injective label {self:?} not representable in {bx:?}"
                )));
            }
        }
        FinDetRegion::from_fn(bx.clone(), RegionKind::Downset, |q| self.contains(q))
    }
}

/// Whether `b_F + Zτ' + N^n` meets `b_E + Zτ − N^n`. Coordinatewise the
/// constraint is `b_F,i <= q_i <= b_E,i` unless either face frees axis `i`.
pub fn flat_meets_inj(f: &IndecFlatLabel, e: &IndecInjLabel) -> bool {
    (0..f.b.len()).all(|i| f.tau.contains(i) || e.tau.contains(i) || f.b[i] <= e.b[i])
}

/// A cell inside both labels' traces, chosen as the clamp of the
/// coordinatewise meeting point.
pub fn meeting_degree(f: &IndecFlatLabel, e: &IndecInjLabel, bx: &GridBox) -> Option<Degree> {
    if !flat_meets_inj(f, e) {
        return None;
    }
    let n = f.b.len();
    let q: Degree = (0..n)
        .map(|i| match (f.tau.contains(i), e.tau.contains(i)) {
            (false, _) => f.b[i],
            (true, false) => e.b[i],
            (true, true) => bx.hi()[i],
        })
        .collect();
    Some(bx.clamp(&q))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx2(lo: i64, hi: i64) -> GridBox {
        GridBox::new(vec![lo, lo], vec![hi, hi]).unwrap()
    }

    #[test]
    fn index_round_trip() {
        let b = GridBox::new(vec![-1, 2, 0], vec![1, 4, 3]).unwrap();
        for c in b.cells() {
            assert_eq!(b.index(&b.coords(c)), c);
        }
        assert_eq!(b.clamp(&[-5, 9, 1]), vec![-1, 4, 1]);
    }

    #[test]
    fn flat_meets_inj_examples() {
        let f = IndecFlatLabel::new(vec![0, 0], Face::empty());
        let e = IndecInjLabel::new(vec![1, 1], Face::empty());
        assert!(flat_meets_inj(&f, &e));
        let f = IndecFlatLabel::new(vec![0, 2], Face::empty());
        let e = IndecInjLabel::new(vec![1, 0], Face::empty());
        assert!(!flat_meets_inj(&f, &e));
    }

    #[test]
    fn coprincipal_dies_along_rays() {
        let b = bx2(-1, 4);
        let d = FinDetRegion::from_fn(b, RegionKind::Downset, |q| q[0] <= 2 && q[1] <= 1).unwrap();
        assert_eq!(localize_downset(&d, Face::empty()).unwrap(), d);
        assert!(localize_downset(&d, Face::single(0)).unwrap().is_empty());
        let decomp = canonical_primary_decomposition_downset(&d).unwrap();
        assert_eq!(decomp, vec![(Face::empty(), d)]);
    }

    #[test]
    fn strip_is_persistent_along_first_axis() {
        let b = bx2(-1, 6);
        let d = FinDetRegion::from_fn(b, RegionKind::Downset, |q| q[1] <= 1).unwrap();
        assert_eq!(localize_downset(&d, Face::single(0)).unwrap(), d);
        assert!(global_support_downset(&d, Face::single(1)).unwrap().is_clear());
    }

    #[test]
    fn non_closed_bitset_is_rejected() {
        let b = bx2(0, 2);
        assert!(FinDetRegion::from_fn(b, RegionKind::Downset, |q| q[0] >= 1).is_err());
    }

    #[test]
    fn label_regions_need_margin() {
        let b = bx2(0, 3);
        assert!(IndecFlatLabel::new(vec![0, 1], Face::empty()).to_region(&b).is_err());
        let r = IndecFlatLabel::new(vec![1, 1], Face::single(1)).to_region(&b).unwrap();
        assert!(r.contains(&[1, -100]));
        assert!(!r.contains(&[0, 5]));
    }
}
