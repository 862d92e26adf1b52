//! Subsets of the suspension described cellwise on the fundamental domain:
//! for every allowed word over a window, a finite union of intervals of `[0, 1)`.
//! Boxes `U_{C×J}`, supports, closures and images are all regions, so set
//! identities between them are decided exactly.

use std::fmt;

use crate::dyadic::{Dyadic, Interval};
use crate::error::{Error, Result};
use crate::suspension::{FlowElement, SuspensionPoint, MAX_WINDOW};
use crate::symbolic::{join_windows, shrink_table, ClopenSet, Coords, Need, Shifted, System, Word, WordCoords};

/// A finite union of intervals inside `[0, 1)`, stored as breakpoints with
/// membership flags for every breakpoint and every open gap between them.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntervalSet {
    pts: Vec<Dyadic>,
    pt_in: Vec<bool>,
    gap_in: Vec<bool>,
}

impl IntervalSet {
    pub fn empty() -> IntervalSet {
        IntervalSet { pts: vec![Dyadic::ZERO, Dyadic::ONE], pt_in: vec![false, false], gap_in: vec![false] }
    }

    pub fn full() -> IntervalSet {
        IntervalSet { pts: vec![Dyadic::ZERO, Dyadic::ONE], pt_in: vec![true, false], gap_in: vec![true] }
    }

    /// The interval from `lo` to `hi` with the given endpoint closedness, intersected with `[0, 1)`.
    pub fn interval(lo: Dyadic, lo_closed: bool, hi: Dyadic, hi_closed: bool) -> IntervalSet {
        let mut pts = vec![Dyadic::ZERO, Dyadic::ONE];
        for p in [lo, hi] {
            if p > Dyadic::ZERO && p < Dyadic::ONE {
                pts.push(p);
            }
        }
        pts.sort();
        pts.dedup();
        let inside = |t: Dyadic| (t > lo || (lo_closed && t == lo)) && (t < hi || (hi_closed && t == hi));
        IntervalSet::sample(pts, inside)
    }

    /// Builds the set from breakpoints by testing every breakpoint and gap midpoint.
    pub fn sample(pts: Vec<Dyadic>, inside: impl Fn(Dyadic) -> bool) -> IntervalSet {
        let n = pts.len();
        let pt_in = (0..n).map(|i| i + 1 < n && inside(pts[i])).collect();
        let gap_in = (0..n - 1).map(|i| inside(Dyadic::mid(pts[i], pts[i + 1]))).collect();
        IntervalSet { pts, pt_in, gap_in }.canonical()
    }

    fn canonical(self) -> IntervalSet {
        let n = self.pts.len();
        let mut pts = vec![self.pts[0]];
        let mut pt_in = vec![self.pt_in[0]];
        let mut gap_in = vec![self.gap_in[0]];
        for i in 1..n - 1 {
            let p = self.pt_in[i];
            if *gap_in.last().unwrap() == p && p == self.gap_in[i] {
                continue;
            }
            pts.push(self.pts[i]);
            pt_in.push(p);
            gap_in.push(self.gap_in[i]);
        }
        pts.push(self.pts[n - 1]);
        pt_in.push(false);
        IntervalSet { pts, pt_in, gap_in }
    }

    pub fn contains(&self, t: Dyadic) -> bool {
        assert!(t >= Dyadic::ZERO && t < Dyadic::ONE, "interval sets live in [0, 1)");
        match self.pts.binary_search(&t) {
            Ok(i) => self.pt_in[i],
            Err(i) => self.gap_in[i - 1],
        }
    }

    pub fn is_empty(&self) -> bool {
        !self.pt_in.iter().any(|&b| b) && !self.gap_in.iter().any(|&b| b)
    }

    pub fn is_full(&self) -> bool {
        *self == IntervalSet::full()
    }

    fn combine(&self, other: &IntervalSet, op: impl Fn(bool, bool) -> bool) -> IntervalSet {
        let mut pts: Vec<Dyadic> = self.pts.iter().chain(&other.pts).copied().collect();
        pts.sort();
        pts.dedup();
        IntervalSet::sample(pts, |t| op(self.contains(t), other.contains(t)))
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        self.combine(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &IntervalSet) -> IntervalSet {
        self.combine(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &IntervalSet) -> IntervalSet {
        self.combine(other, |a, b| a && !b)
    }

    pub fn complement(&self) -> IntervalSet {
        IntervalSet::sample(self.pts.clone(), |t| !self.contains(t))
    }

    /// Closure inside `[0, 1)`, ignoring what happens across the seam at `0`.
    fn closure_local(&self) -> IntervalSet {
        let n = self.pts.len();
        let mut s = self.clone();
        for i in 0..n - 1 {
            s.pt_in[i] = self.pt_in[i] || self.gap_in[i] || (i > 0 && self.gap_in[i - 1]);
        }
        s.canonical()
    }

    fn last_gap_in(&self) -> bool {
        *self.gap_in.last().unwrap()
    }

    fn with_zero(&self) -> IntervalSet {
        let mut s = self.clone();
        s.pt_in[0] = true;
        s.canonical()
    }

    pub fn breakpoints(&self) -> &[Dyadic] {
        &self.pts
    }

    /// The maximal intervals as `(lo, lo_closed, hi, hi_closed)`.
    pub fn components(&self) -> Vec<(Dyadic, bool, Dyadic, bool)> {
        let n = self.pts.len();
        let atoms: Vec<bool> = (0..2 * n - 1).map(|a| if a % 2 == 0 { self.pt_in[a / 2] } else { self.gap_in[a / 2] }).collect();
        let mut out = Vec::new();
        let mut a = 0;
        while a < atoms.len() {
            if !atoms[a] {
                a += 1;
                continue;
            }
            let start = a;
            while a + 1 < atoms.len() && atoms[a + 1] {
                a += 1;
            }
            let lo = self.pts[start / 2];
            let (hi, hc) = if a % 2 == 0 { (self.pts[a / 2], true) } else { (self.pts[a / 2 + 1], false) };
            out.push((lo, start % 2 == 0, hi, hc));
            a += 1;
        }
        out
    }
}

impl fmt::Debug for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let comps = self.components();
        if comps.is_empty() {
            return f.write_str("∅");
        }
        let parts: Vec<String> = comps
            .iter()
            .map(|&(lo, lc, hi, hc)| {
                if lo == hi {
                    format!("{{{lo:?}}}")
                } else {
                    format!("{}{:?}, {:?}{}", if lc { '[' } else { '(' }, lo, hi, if hc { ']' } else { ')' })
                }
            })
            .collect();
        f.write_str(&parts.join(" ∪ "))
    }
}

/// A subset of the suspension: an interval set in `[0, 1)` for every allowed
/// word over the window, read at the base point of `[x, t]`.
#[derive(Clone)]
pub struct Region {
    sys: System,
    l: i64,
    len: usize,
    cells: Vec<(Word, IntervalSet)>,
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Region{")?;
        for (i, (w, s)) in self.cells.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{}@{}: {}", self.sys.show_word(w), self.l, s)?;
        }
        f.write_str("}")
    }
}

impl Region {
    /// Builds a region from a cellwise rule, growing the window until every
    /// cell can be decided from its word.
    pub fn build(
        sys: &System,
        start: (i64, usize),
        rule: impl Fn(&dyn Coords) -> std::result::Result<IntervalSet, Need>,
    ) -> Result<Region> {
        let (mut l, mut len) = start;
        loop {
            let mut lo = l;
            let mut hi = l + len as i64;
            let mut cells = Vec::new();
            for w in sys.allowed_words(len)? {
                match rule(&WordCoords { l, word: &w }) {
                    Ok(s) => cells.push((w, s)),
                    Err(Need::Left(i)) => lo = lo.min(i),
                    Err(Need::Right(i)) => hi = hi.max(i + 1),
                }
            }
            if lo == l && hi == l + len as i64 {
                return Region { sys: sys.clone(), l, len, cells }.shrink();
            }
            l = lo;
            len = (hi - lo) as usize;
            if len > MAX_WINDOW {
                return Err(Error::Budget(format!("region needs a window longer than {MAX_WINDOW}")));
            }
        }
    }

    fn shrink(self) -> Result<Region> {
        let (l, len, cells) = shrink_table(self.l, self.len, self.cells);
        Ok(Region { sys: self.sys, l, len, cells })
    }

    pub fn system(&self) -> &System {
        &self.sys
    }

    pub fn empty(sys: &System) -> Region {
        Region { sys: sys.clone(), l: 0, len: 0, cells: vec![(Vec::new(), IntervalSet::empty())] }
    }

    pub fn full(sys: &System) -> Region {
        Region { sys: sys.clone(), l: 0, len: 0, cells: vec![(Vec::new(), IntervalSet::full())] }
    }

    /// The interval set of the cell of a base point.
    pub fn cell(&self, x: &dyn Coords) -> std::result::Result<&IntervalSet, Need> {
        let w = x.window(self.l, self.len)?;
        let i = self.cells.binary_search_by(|c| c.0.cmp(&w)).expect("coordinates outside the language");
        Ok(&self.cells[i].1)
    }

    pub fn cells(&self) -> &[(Word, IntervalSet)] {
        &self.cells
    }

    pub fn window(&self) -> (i64, usize) {
        (self.l, self.len)
    }

    pub fn contains(&self, y: &SuspensionPoint) -> bool {
        self.cell(&y.base).expect("points are total").contains(y.time)
    }

    /// The set `{[x, t] : x ∈ C, t ∈ (lo, hi)}` with the chosen endpoint closedness.
    pub fn from_box(c: &ClopenSet, lo: Dyadic, lo_closed: bool, hi: Dyadic, hi_closed: bool) -> Result<Region> {
        let n0 = lo.floor() - 1;
        let n1 = hi.ceil();
        let start = (c.left() - n1, c.window_len() + (n1 - n0) as usize);
        Region::build(c.system(), if c.window_len() == 0 { (0, 0) } else { start }, |y| {
            let mut acc = IntervalSet::empty();
            for n in n0..=n1 {
                if c.contains_coords(&Shifted { inner: y, k: -n })? {
                    let nn = Dyadic::int(n);
                    acc = acc.union(&IntervalSet::interval(lo - nn, lo_closed, hi - nn, hi_closed));
                }
            }
            Ok(acc)
        })
    }

    /// The open box `U_{C×J}`.
    pub fn open_box(c: &ClopenSet, j: &Interval) -> Result<Region> {
        Region::from_box(c, j.lo, false, j.hi, false)
    }

    /// The closed box `C × [a, b]`, the closure of `U_{C×J}`.
    pub fn closed_box(c: &ClopenSet, j: &Interval) -> Result<Region> {
        Region::from_box(c, j.lo, true, j.hi, true)
    }

    fn same(&self, other: &Region) -> Result<()> {
        if self.sys.id() == other.sys.id() {
            Ok(())
        } else {
            Err(Error::MixedSystems)
        }
    }

    fn combine(&self, other: &Region, op: impl Fn(&IntervalSet, &IntervalSet) -> IntervalSet) -> Result<Region> {
        self.same(other)?;
        let start = join_windows(&[(self.l, self.len), (other.l, other.len)]);
        Region::build(&self.sys, start, |y| Ok(op(self.cell(y)?, other.cell(y)?)))
    }

    pub fn union(&self, other: &Region) -> Result<Region> {
        self.combine(other, |a, b| a.union(b))
    }

    pub fn intersection(&self, other: &Region) -> Result<Region> {
        self.combine(other, |a, b| a.intersection(b))
    }

    pub fn difference(&self, other: &Region) -> Result<Region> {
        self.combine(other, |a, b| a.difference(b))
    }

    pub fn complement(&self) -> Result<Region> {
        Region::build(&self.sys, (self.l, self.len), |y| Ok(self.cell(y)?.complement()))
    }

    pub fn is_empty(&self) -> bool {
        self.cells.iter().all(|c| c.1.is_empty())
    }

    pub fn is_full(&self) -> bool {
        self.cells.iter().all(|c| c.1.is_full())
    }

    pub fn equals(&self, other: &Region) -> Result<bool> {
        Ok(self.difference(other)?.is_empty() && other.difference(self)?.is_empty())
    }

    pub fn is_subset(&self, other: &Region) -> Result<bool> {
        Ok(self.difference(other)?.is_empty())
    }

    pub fn is_disjoint(&self, other: &Region) -> Result<bool> {
        Ok(self.intersection(other)?.is_empty())
    }

    /// Topological closure in the suspension, including the seam points `[y, 0]`
    /// approached from `[φ^{-1} y, 1^-]`.
    pub fn closure(&self) -> Result<Region> {
        let start = join_windows(&[(self.l, self.len), (self.l - 1, self.len.max(1))]);
        Region::build(&self.sys, start, |y| {
            let own = self.cell(y)?.closure_local();
            let prev = self.cell(&Shifted { inner: y, k: -1 })?;
            Ok(if prev.last_gap_in() { own.with_zero() } else { own })
        })
    }

    pub fn interior(&self) -> Result<Region> {
        self.complement()?.closure()?.complement()
    }

    /// `h^{-1}(R)`.
    pub fn preimage(&self, h: &FlowElement) -> Result<Region> {
        if h.system().id() != self.sys.id() {
            return Err(Error::MixedSystems);
        }
        let (hl, hlen) = h.window();
        let start = join_windows(&[(hl, hlen), (self.l, self.len)]);
        Region::build(&self.sys, start, |y| {
            let f = h.lift(y, Dyadic::ZERO, Dyadic::ONE)?;
            let (v0, v1) = f.image();
            let mut pts = vec![Dyadic::ZERO, Dyadic::ONE];
            let mut cells = Vec::new();
            for k in v0.floor()..v1.ceil() {
                let cell = self.cell(&Shifted { inner: y, k })?;
                let kk = Dyadic::int(k);
                for &p in cell.breakpoints() {
                    let s = kk + p;
                    if s > v0 && s < v1 {
                        pts.push(f.eval_inverse(s));
                    }
                }
                cells.push((k, cell));
            }
            pts.sort();
            pts.dedup();
            Ok(IntervalSet::sample(pts, |t| {
                let v = f.eval(t);
                let k = v.floor();
                let (_, cell) = cells.iter().find(|c| c.0 == k).expect("cell in range");
                cell.contains(v - Dyadic::int(k))
            }))
        })
    }

    /// `g(R)`.
    pub fn image(&self, g: &FlowElement) -> Result<Region> {
        self.preimage(&g.invert()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::dy;
    use crate::symbolic::Subshift;

    #[test]
    fn interval_sets() {
        let a = IntervalSet::interval(dy(1, 4), false, dy(1, 2), true);
        assert!(!a.contains(dy(1, 4)));
        assert!(a.contains(dy(1, 2)));
        assert!(a.contains(dy(3, 8)));
        let b = IntervalSet::interval(dy(1, 2), false, Dyadic::ONE, false);
        let u = a.union(&b);
        assert_eq!(u, IntervalSet::interval(dy(1, 4), false, Dyadic::ONE, false));
        assert!(a.union(&a.complement()).is_full());
        assert!(a.intersection(&a.complement()).is_empty());
        assert_eq!(a.closure_local(), IntervalSet::interval(dy(1, 4), true, dy(1, 2), true));
        assert_eq!(format!("{a}"), "(1/4, 1/2]");
        let e = IntervalSet::interval(dy(-1, 2), true, Dyadic::ZERO, true);
        assert_eq!(format!("{e}"), "{0}");
    }

    #[test]
    fn boxes_and_seams() {
        let fib = Subshift::fibonacci();
        let b = ClopenSet::letter(&fib, 1);
        let j = Interval::new(Dyadic::ZERO, dy(3, 2)).unwrap();
        let u = Region::open_box(&b, &j).unwrap();
        let shifted = Region::open_box(&b.shift(1), &Interval::new(dy(-1, 1), dy(1, 2)).unwrap()).unwrap();
        assert!(u.equals(&shifted).unwrap());
        let cl = u.closure().unwrap();
        assert!(cl.equals(&Region::closed_box(&b, &j).unwrap()).unwrap());
        let full = Subshift::full(&["0", "1"]);
        let r = Region::open_box(&ClopenSet::full(&full), &Interval::new(dy(1, 2), dy(3, 2)).unwrap()).unwrap();
        assert!(!r.is_full());
        assert!(r.closure().unwrap().is_full());
        assert!(r.union(&r.complement().unwrap()).unwrap().is_full());
    }
}
