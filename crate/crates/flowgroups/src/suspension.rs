//! Elements of `T(φ)` as equivariant atlases over the fundamental domain,
//! with exact group operations, evaluation, charts, supports, displacement
//! and the metric `d = d₊ + d₋`.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dyadic::{dy, standard_a, standard_b, Dyadic, Interval, PLMap};
use crate::error::{Error, Result};
use crate::region::{IntervalSet, Region};
use crate::symbolic::{
    join_windows, return_within, shrink_table, ClopenSet, Coords, Need, Shifted, System, SymbolicPoint, Word,
    WordCoords,
};

/// Longest window an operation may grow before giving up.
pub const MAX_WINDOW: usize = 40;

/// A point `[x, t]` of the suspension with `t ∈ [0, 1)`.
#[derive(Clone, Debug)]
pub struct SuspensionPoint {
    pub base: SymbolicPoint,
    pub time: Dyadic,
}

impl SuspensionPoint {
    /// The class of `(x, t)`, renormalized to time in `[0, 1)`.
    pub fn new(base: SymbolicPoint, t: Dyadic) -> SuspensionPoint {
        let k = t.floor();
        SuspensionPoint { base: base.shift(k), time: t - Dyadic::int(k) }
    }

    /// `Φ^r(y)`.
    pub fn flow(&self, r: Dyadic) -> SuspensionPoint {
        SuspensionPoint::new(self.base.clone(), self.time + r)
    }

    pub fn same(&self, other: &SuspensionPoint) -> bool {
        self.time == other.time && self.base.same(&other.base)
    }
}

/// An element of `T(φ)`: a dyadic PL map on `[0, 1]` for every allowed word over a window.
#[derive(Clone)]
pub struct FlowElement {
    sys: System,
    l: i64,
    len: usize,
    cells: Vec<(Word, PLMap)>,
}

impl fmt::Debug for FlowElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FlowElement{")?;
        for (i, (w, m)) in self.cells.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{}@{}: {:?}", self.sys.show_word(w), self.l, m)?;
        }
        f.write_str("}")
    }
}

impl PartialEq for FlowElement {
    fn eq(&self, other: &Self) -> bool {
        self.equals(other).unwrap_or(false)
    }
}

impl FlowElement {
    /// Builds an element from a cellwise rule, growing the window until every
    /// cell is determined by its word, then canonicalizing and checking gluing.
    pub fn build(
        sys: &System,
        start: (i64, usize),
        rule: impl Fn(&dyn Coords) -> std::result::Result<PLMap, Need>,
    ) -> Result<FlowElement> {
        let (mut l, mut len) = start;
        loop {
            let mut lo = l;
            let mut hi = l + len as i64;
            let mut cells = Vec::new();
            for w in sys.allowed_words(len)? {
                match rule(&WordCoords { l, word: &w }) {
                    Ok(m) => cells.push((w, m)),
                    Err(Need::Left(i)) => lo = lo.min(i),
                    Err(Need::Right(i)) => hi = hi.max(i + 1),
                }
            }
            if lo == l && hi == l + len as i64 {
                let (l, len, cells) = shrink_table(l, len, cells);
                let g = FlowElement { sys: sys.clone(), l, len, cells };
                g.check_gluing()?;
                return Ok(g);
            }
            l = lo;
            len = (hi - lo) as usize;
            if len > MAX_WINDOW {
                return Err(Error::Budget(format!("element needs a window longer than {MAX_WINDOW}")));
            }
        }
    }

    pub fn identity(sys: &System) -> FlowElement {
        FlowElement { sys: sys.clone(), l: 0, len: 0, cells: vec![(Vec::new(), PLMap::identity(Dyadic::ZERO, Dyadic::ONE))] }
    }

    /// The element acting by the same map on every fiber; `f(1) = f(0) + 1` is required.
    pub fn diagonal(sys: &System, f: PLMap) -> Result<FlowElement> {
        FlowElement::from_words(sys, 0, 0, vec![(Vec::new(), f)])
    }

    /// The flow translation `Φ^r`.
    pub fn translation(sys: &System, r: Dyadic) -> FlowElement {
        FlowElement::diagonal(sys, PLMap::translation(Dyadic::ZERO, Dyadic::ONE, r)).unwrap()
    }

    /// Validates a table indexed by the allowed words over `[l, l + len)`.
    pub fn from_words(sys: &System, l: i64, len: usize, mut cells: Vec<(Word, PLMap)>) -> Result<FlowElement> {
        cells.sort_by(|a, b| a.0.cmp(&b.0));
        let words = sys.allowed_words(len)?;
        let given: Vec<&Word> = cells.iter().map(|c| &c.0).collect();
        if given.len() != words.len() || given.iter().zip(&words).any(|(a, b)| *a != b) {
            return Err(Error::Partition(format!("cells must be exactly the {} allowed words of length {len}", words.len())));
        }
        for (w, m) in &cells {
            if m.domain() != (Dyadic::ZERO, Dyadic::ONE) {
                return Err(Error::Input(format!("map of cell {} is not defined on [0, 1]", sys.show_word(w))));
            }
        }
        let g = FlowElement { sys: sys.clone(), l, len, cells };
        g.check_gluing()?;
        let (l, len, cells) = shrink_table(g.l, g.len, g.cells);
        Ok(FlowElement { sys: sys.clone(), l, len, cells })
    }

    /// Validates a table of clopen cells, which must partition `X`.
    pub fn from_table(sys: &System, table: Vec<(ClopenSet, PLMap)>) -> Result<FlowElement> {
        for (c, _) in &table {
            if c.system().id() != sys.id() {
                return Err(Error::MixedSystems);
            }
        }
        let (l, len) = join_windows(&table.iter().map(|(c, _)| (c.left(), c.window_len())).collect::<Vec<_>>());
        let refined: Vec<_> = table.iter().map(|(c, _)| c.refine(l, len)).collect::<Result<_>>()?;
        let mut cells = Vec::new();
        for w in sys.allowed_words(len)? {
            let owners: Vec<usize> = (0..table.len()).filter(|&i| refined[i].contains(&w)).collect();
            match owners.len() {
                1 => cells.push((w, table[owners[0]].1.clone())),
                0 => return Err(Error::Partition(format!("word {} at {l} is in no cell", sys.show_word(&w)))),
                _ => {
                    return Err(Error::Partition(format!(
                        "word {} at {l} is in cells {} and {}",
                        sys.show_word(&w),
                        owners[0],
                        owners[1]
                    )))
                }
            }
        }
        FlowElement::from_words(sys, l, len, cells)
    }

    /// Checks `f_i(1) = f_j(0) + 1` whenever the cell of `φx` is `j` for some `x` in cell `i`.
    pub fn check_gluing(&self) -> Result<()> {
        for v in self.sys.allowed_words(self.len + 1)? {
            let x = WordCoords { l: self.l, word: &v };
            let fi = self.cell_map(&x).unwrap();
            let fj = self.cell_map(&Shifted { inner: &x, k: 1 }).unwrap();
            if fi.image().1 != fj.image().0 + Dyadic::ONE {
                return Err(Error::Gluing {
                    pair: (self.sys.show_word(&v[..self.len]), self.sys.show_word(&v[1..])),
                    values: format!("f_i(1) = {}, f_j(0) + 1 = {}", fi.image().1, fj.image().0 + Dyadic::ONE),
                });
            }
        }
        Ok(())
    }

    pub fn system(&self) -> &System {
        &self.sys
    }

    /// The window as `(l, len)`.
    pub fn window(&self) -> (i64, usize) {
        (self.l, self.len)
    }

    pub fn cells(&self) -> &[(Word, PLMap)] {
        &self.cells
    }

    pub fn cell_map(&self, x: &dyn Coords) -> std::result::Result<&PLMap, Need> {
        let w = x.window(self.l, self.len)?;
        let i = self.cells.binary_search_by(|c| c.0.cmp(&w)).expect("coordinates outside the language");
        Ok(&self.cells[i].1)
    }

    /// The map `F_x` on `[lo, hi]`, glued from `F_x(t) = f_{φ^k x}(t - k) + k`.
    pub fn lift(&self, x: &dyn Coords, lo: Dyadic, hi: Dyadic) -> std::result::Result<PLMap, Need> {
        let mut parts = Vec::new();
        for k in lo.floor()..hi.ceil() {
            let kk = Dyadic::int(k);
            let a = lo.max(kk);
            let b = hi.min(kk + Dyadic::ONE);
            if a >= b {
                continue;
            }
            let f = self.cell_map(&Shifted { inner: x, k })?;
            parts.push(f.restrict(a - kk, b - kk).shifted(kk, kk));
        }
        Ok(PLMap::concat(&parts).expect("glued pieces are continuous"))
    }

    fn same(&self, other: &FlowElement) -> Result<()> {
        if self.sys.id() == other.sys.id() {
            Ok(())
        } else {
            Err(Error::MixedSystems)
        }
    }

    /// `self ∘ h`.
    pub fn compose(&self, h: &FlowElement) -> Result<FlowElement> {
        self.same(h)?;
        FlowElement::build(&self.sys, (h.l, h.len), |x| {
            let fh = h.lift(x, Dyadic::ZERO, Dyadic::ONE)?;
            let (a, b) = fh.image();
            let fg = self.lift(x, a, b)?;
            Ok(fg.compose(&fh).unwrap())
        })
    }

    /// Bounds of the displacement `F_x(t) - t` over all cells.
    pub fn displacement_range(&self) -> (Dyadic, Dyadic) {
        let mut lo = self.cells[0].1.displacement_range().0;
        let mut hi = lo;
        for (_, m) in &self.cells {
            let (a, b) = m.displacement_range();
            lo = lo.min(a);
            hi = hi.max(b);
        }
        (lo, hi)
    }

    pub fn invert(&self) -> Result<FlowElement> {
        let (dmin, dmax) = self.displacement_range();
        let lo = Dyadic::int((-dmax).floor());
        let hi = Dyadic::int((Dyadic::ONE - dmin).ceil());
        FlowElement::build(&self.sys, (self.l, self.len), |x| {
            let f = self.lift(x, lo, hi)?;
            Ok(f.inverse().restrict(Dyadic::ZERO, Dyadic::ONE))
        })
    }

    /// Exact equality: agreement of all cell maps over the joint window.
    pub fn equals(&self, other: &FlowElement) -> Result<bool> {
        self.same(other)?;
        let (l, len) = join_windows(&[(self.l, self.len), (other.l, other.len)]);
        for w in self.sys.allowed_words(len)? {
            let x = WordCoords { l, word: &w };
            if self.cell_map(&x).unwrap() != other.cell_map(&x).unwrap() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn is_identity(&self) -> bool {
        self.cells.iter().all(|(_, m)| m.is_identity())
    }

    /// `g(y)`, renormalized.
    pub fn evaluate(&self, y: &SuspensionPoint) -> SuspensionPoint {
        let f = self.cell_map(&y.base).expect("points are total");
        SuspensionPoint::new(y.base.clone(), f.eval(y.time))
    }

    /// `[g, h] = g h g⁻¹ h⁻¹`.
    pub fn commutator(&self, h: &FlowElement) -> Result<FlowElement> {
        self.compose(h)?.compose(&self.invert()?)?.compose(&h.invert()?)
    }

    /// `h g h⁻¹`.
    pub fn conjugate_by(&self, h: &FlowElement) -> Result<FlowElement> {
        h.compose(self)?.compose(&h.invert()?)
    }

    pub fn pow(&self, n: i64) -> Result<FlowElement> {
        let base = if n < 0 { self.invert()? } else { self.clone() };
        let mut acc = FlowElement::identity(&self.sys);
        for _ in 0..n.unsigned_abs() {
            acc = acc.compose(&base)?;
        }
        Ok(acc)
    }

    /// Composite `g_1 ∘ ⋯ ∘ g_n`.
    pub fn product(sys: &System, factors: &[FlowElement]) -> Result<FlowElement> {
        let mut acc = FlowElement::identity(sys);
        for f in factors {
            acc = acc.compose(f)?;
        }
        Ok(acc)
    }

    /// The support, regularized to the interior of its closure: cellwise the
    /// union of open pieces where `F_x` moves points, with seams accounted for.
    pub fn support(&self) -> Result<Region> {
        let raw = Region::build(&self.sys, (self.l, self.len), |x| {
            let f = self.cell_map(x)?;
            let pts: Vec<Dyadic> = f.breakpoints().to_vec();
            Ok(IntervalSet::sample(pts, |t| {
                if f.breakpoints().binary_search(&t).is_ok() {
                    return false;
                }
                f.eval(t) != t
            }))
        })?;
        raw.closure()?.interior()
    }

    /// The support grouped as clopen cells with their interval sets.
    pub fn support_table(&self) -> Result<Vec<(ClopenSet, IntervalSet)>> {
        let r = self.support()?;
        let (l, len) = r.window();
        let mut groups: Vec<(IntervalSet, Vec<Word>)> = Vec::new();
        for (w, s) in r.cells() {
            if s.is_empty() {
                continue;
            }
            match groups.iter_mut().find(|g| &g.0 == s) {
                Some(g) => g.1.push(w.clone()),
                None => groups.push((s.clone(), vec![w.clone()])),
            }
        }
        groups
            .into_iter()
            .map(|(s, ws)| Ok((ClopenSet::from_words(&self.sys, l, len, ws)?, s)))
            .collect()
    }

    pub fn displacement(&self) -> Displacement {
        Displacement { element: self.clone() }
    }

    pub fn to_json(&self) -> ElementJson {
        ElementJson {
            window: [self.l, self.l + self.len as i64 - 1],
            cells: self.cells.iter().map(|(w, m)| CellJson { word: self.sys.show_word(w), map: m.clone() }).collect(),
        }
    }

    pub fn from_json(sys: &System, j: &ElementJson) -> Result<FlowElement> {
        let [l, r] = j.window;
        if r < l - 1 {
            return Err(Error::Input("element window must satisfy l <= r + 1".into()));
        }
        let len = (r - l + 1) as usize;
        let mut cells = Vec::new();
        for c in &j.cells {
            let w = sys.parse_word(&c.word)?;
            if w.len() != len {
                return Err(Error::Input(format!("cell word {:?} does not match the window length {len}", c.word)));
            }
            cells.push((w, c.map.clone()));
        }
        FlowElement::from_words(sys, l, len, cells)
    }

    /// SHA-256 of the canonical serialization, tagged with the system.
    pub fn canonical_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.sys.id());
        h.update(serde_json::to_vec(&self.to_json()).unwrap());
        hex::encode(h.finalize())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementJson {
    pub window: [i64; 2],
    pub cells: Vec<CellJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellJson {
    pub word: String,
    pub map: PLMap,
}

/// The displacement `τ(x, t) = F_x(t) - t` of an element.
#[derive(Clone, Debug)]
pub struct Displacement {
    element: FlowElement,
}

impl Displacement {
    pub fn value(&self, y: &SuspensionPoint) -> Dyadic {
        self.element.cell_map(&y.base).expect("points are total").eval(y.time) - y.time
    }

    /// Cellwise breakpoint table `(t, τ(t))`.
    pub fn table(&self) -> Vec<(String, Vec<(Dyadic, Dyadic)>)> {
        self.element
            .cells
            .iter()
            .map(|(w, m)| (self.element.sys.show_word(w), m.pairs().into_iter().map(|(t, v)| (t, v - t)).collect()))
            .collect()
    }

    /// `τ` at `(x, 1^-)` equals `τ` at `(φx, 0)` for every adjacent pair of cells.
    pub fn continuous_across_seams(&self) -> bool {
        self.element.check_gluing().is_ok()
    }
}

fn sup_gap(f: &PLMap, g: &PLMap) -> Dyadic {
    let mut ts: Vec<Dyadic> = f.breakpoints().iter().chain(g.breakpoints()).copied().collect();
    ts.sort();
    ts.dedup();
    ts.into_iter().map(|t| (f.eval(t) - g.eval(t)).abs()).max().unwrap()
}

fn d_plus(g: &FlowElement, h: &FlowElement) -> Result<Dyadic> {
    g.same(h)?;
    let (l, len) = join_windows(&[(g.l, g.len), (h.l, h.len)]);
    let mut best = Dyadic::ZERO;
    for w in g.sys.allowed_words(len)? {
        let x = WordCoords { l, word: &w };
        best = best.max(sup_gap(g.cell_map(&x).unwrap(), h.cell_map(&x).unwrap()));
    }
    Ok(best)
}

/// `d(g, h) = d₊(g, h) + d₋(g, h)` with canonical displacements.
pub fn metric(g: &FlowElement, h: &FlowElement) -> Result<Dyadic> {
    Ok(d_plus(g, h)? + d_plus(&g.invert()?, &h.invert()?)?)
}

/// A box `C × J` with `|J| < τ_C`, normalized so that `J` starts in `[0, 1)`.
#[derive(Clone, Debug)]
pub struct Chart {
    pub base: ClopenSet,
    pub interval: Interval,
}

impl Chart {
    pub fn new(base: &ClopenSet, j: Interval) -> Result<Chart> {
        if base.is_empty() {
            return Err(Error::ChartInvalid("empty base".into()));
        }
        let n = j.lo.floor();
        let c = base.shift(n);
        let j = j.translate(-n);
        let bound = j.len().floor().max(0) as usize;
        if let Some(tau) = return_within(&c, bound)? {
            return Err(Error::ChartInvalid(format!(
                "|J| = {:?} is not below the first return time {tau} of {c:?}",
                j.len()
            )));
        }
        Ok(Chart { base: c, interval: j })
    }

    pub fn domain(&self) -> Result<Region> {
        Region::open_box(&self.base, &self.interval)
    }

    pub fn closed_domain(&self) -> Result<Region> {
        Region::closed_box(&self.base, &self.interval)
    }
}

/// The element acting as `id × f` on `U_{C×J}` and trivially elsewhere.
/// `f` lives on the closure of the chart interval or an integer translate of it.
pub fn chart_embed(ch: &Chart, f: &PLMap) -> Result<FlowElement> {
    let j = ch.interval;
    let (u, v) = f.domain();
    let shift = u - j.lo;
    if !shift.is_integer() || v - u != j.len() {
        return Err(Error::DomainMismatch(format!("map domain [{u}, {v}] is not a translate of {j}")));
    }
    let f = f.shifted(-shift, -shift);
    if f.image() != (j.lo, j.hi) {
        return Err(Error::Precondition("embedded map must fix the endpoints of its interval".into()));
    }
    let sys = ch.base.system().clone();
    if f.is_identity() {
        return Ok(FlowElement::identity(&sys));
    }
    let n1 = j.hi.ceil() - 1;
    let start = if ch.base.window_len() == 0 {
        (0, 0)
    } else {
        (ch.base.left() - n1, ch.base.window_len() + n1 as usize)
    };
    FlowElement::build(&sys, start, |y| {
        let mut segs = Vec::new();
        for n in 0..=n1 {
            if !ch.base.contains_coords(&Shifted { inner: y, k: -n })? {
                continue;
            }
            let nn = Dyadic::int(n);
            let lo = Dyadic::ZERO.max(j.lo - nn);
            let hi = Dyadic::ONE.min(j.hi - nn);
            if lo < hi {
                segs.push((lo, hi, f.restrict(lo + nn, hi + nn).shifted(-nn, -nn)));
            }
        }
        segs.sort_by_key(|a| a.0);
        let mut parts = Vec::new();
        let mut at = Dyadic::ZERO;
        for (lo, hi, m) in segs {
            if at < lo {
                parts.push(PLMap::identity(at, lo));
            }
            parts.push(m);
            at = hi;
        }
        if at < Dyadic::ONE {
            parts.push(PLMap::identity(at, Dyadic::ONE));
        }
        Ok(PLMap::concat(&parts).expect("chart pieces are disjoint"))
    })
}

/// The lift of `C ∈ T` to the line, on the fundamental interval.
pub fn lifted_c() -> PLMap {
    PLMap::from_pairs(&[
        (Dyadic::ZERO, dy(3, 4)),
        (dy(1, 2), Dyadic::ONE),
        (dy(3, 4), dy(3, 2)),
        (Dyadic::ONE, dy(7, 4)),
    ])
    .unwrap()
}

/// Lifts a word in the generators `a, b, c, g` of `T̃` (capitals are inverses)
/// to a diagonal element; `g` is the central translation `t ↦ t + 1`.
pub fn lift_central_extension(sys: &System, word: &str) -> Result<FlowElement> {
    let mut acc = FlowElement::identity(sys);
    for ch in word.chars() {
        let f = match ch.to_ascii_lowercase() {
            'a' => standard_a(),
            'b' => standard_b(),
            'c' => lifted_c(),
            'g' => PLMap::translation(Dyadic::ZERO, Dyadic::ONE, Dyadic::ONE),
            _ => return Err(Error::Input(format!("unknown generator {ch:?} of the lifted Thompson group"))),
        };
        let mut e = FlowElement::diagonal(sys, f)?;
        if ch.is_ascii_uppercase() {
            e = e.invert()?;
        }
        acc = acc.compose(&e)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::thompson_generators;
    use crate::symbolic::Subshift;

    #[test]
    fn translations() {
        let fib = Subshift::fibonacci();
        let q = FlowElement::translation(&fib, dy(1, 4));
        let h = FlowElement::translation(&fib, dy(1, 2));
        assert_eq!(q.compose(&q).unwrap(), h);
        let one = FlowElement::translation(&fib, Dyadic::ONE);
        assert_eq!(h.compose(&h).unwrap(), one);
        assert_eq!(h.invert().unwrap(), FlowElement::translation(&fib, dy(-1, 2)));
        let x = SymbolicPoint::fibonacci_fixed_point(&fib);
        let y = SuspensionPoint::new(x.clone(), dy(3, 4));
        let z = h.evaluate(&y);
        assert_eq!(z.time, dy(1, 4));
        assert!(z.base.same(&x.shift(1)));
        assert_eq!(metric(&h, &FlowElement::identity(&fib)).unwrap(), Dyadic::ONE);
    }

    #[test]
    fn gluing_failure_names_cells() {
        let full = Subshift::full(&["0", "1"]);
        let f0 = PLMap::identity(Dyadic::ZERO, Dyadic::ONE);
        let f1 = PLMap::translation(Dyadic::ZERO, Dyadic::ONE, dy(1, 4));
        let err = FlowElement::from_table(&full, vec![(ClopenSet::letter(&full, 0), f0), (ClopenSet::letter(&full, 1), f1)])
            .unwrap_err();
        assert!(matches!(err, Error::Gluing { .. }));
    }

    #[test]
    fn chart_examples() {
        let fib = Subshift::fibonacci();
        let b = ClopenSet::letter(&fib, 1);
        let j = Interval::new(Dyadic::ZERO, dy(3, 2)).unwrap();
        let ch = Chart::new(&b, j).unwrap();
        let (a, _) = thompson_generators(&j);
        let g = chart_embed(&ch, &a).unwrap();
        assert!(!g.is_identity());
        assert!(g.support().unwrap().is_subset(&ch.domain().unwrap()).unwrap());
        let g2 = chart_embed(&ch, &a.compose(&a).unwrap()).unwrap();
        assert_eq!(g.compose(&g).unwrap(), g2);
        let full = Subshift::full(&["0", "1"]);
        assert!(matches!(Chart::new(&ClopenSet::letter(&full, 0), j), Err(Error::ChartInvalid(_))));
        let moved = Chart::new(&b.shift(1), j.translate(-1)).unwrap();
        assert_eq!(chart_embed(&moved, &a.shifted(-Dyadic::ONE, -Dyadic::ONE)).unwrap(), g);
    }

    #[test]
    fn central_lift() {
        let full = Subshift::full(&["0", "1"]);
        let g = lift_central_extension(&full, "g").unwrap();
        assert_eq!(g, FlowElement::translation(&full, Dyadic::ONE));
        for s in ["a", "b", "c"] {
            let e = lift_central_extension(&full, s).unwrap();
            assert!(g.commutator(&e).unwrap().is_identity());
        }
        assert_eq!(lift_central_extension(&full, "ccc").unwrap(), lift_central_extension(&full, "gg").unwrap());
        assert!(lift_central_extension(&full, "").unwrap().is_identity());
    }

    #[test]
    fn supports() {
        let full = Subshift::full(&["0", "1"]);
        assert!(FlowElement::translation(&full, dy(1, 2)).support().unwrap().is_full());
        assert!(FlowElement::identity(&full).support().unwrap().is_empty());
    }
}
