//! Constructive lemmas as certified algorithms: generating sets, interval
//! moving, commuting and first-return factorizations, germ splitting, box
//! fragmentation, the double commutator identity and generation witnesses.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dyadic::{
    conj_interval, dy, fragment_f, interval_map, thompson_generators, transport_from, word_for, word_realizes, Dyadic, FLetter, Interval,
    PLMap,
};
use crate::error::{Error, Result};
use crate::region::Region;
use crate::suspension::{chart_embed, Chart, FlowElement, SuspensionPoint};
use crate::symbolic::{
    join_windows, return_partition, ClopenSet, ReturnMode, System, WordCoords, DEFAULT_RETURN_BUDGET,
};

/// `I₀ = (-1/4, 1/2)`.
pub fn i0() -> Interval {
    Interval { lo: dy(-1, 4), hi: dy(1, 2) }
}

/// `I₁ = (1/4, 9/8)`.
pub fn i1() -> Interval {
    Interval { lo: dy(1, 4), hi: dy(9, 8) }
}

/// A generator letter: a name and whether it is inverted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GenLetter {
    pub name: String,
    pub inverse: bool,
}

pub type GenWord = Vec<GenLetter>;

pub fn show_word(w: &GenWord) -> String {
    w.iter()
        .map(|l| if l.inverse { format!("{}^-1", l.name) } else { l.name.clone() })
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn invert_gen_word(w: &GenWord) -> GenWord {
    w.iter().rev().map(|l| GenLetter { name: l.name.clone(), inverse: !l.inverse }).collect()
}

/// Named generators with the chart each pair spans.
#[derive(Clone, Debug)]
pub struct GeneratorSet {
    pub names: Vec<String>,
    pub elements: Vec<FlowElement>,
    /// For each generator: its chart and which standard generator it transports.
    pub provenance: Vec<(Chart, FLetter)>,
}

impl GeneratorSet {
    pub fn get(&self, name: &str) -> Option<&FlowElement> {
        self.names.iter().position(|n| n == name).map(|i| &self.elements[i])
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Evaluates a word as the composite of its letters.
    pub fn eval(&self, sys: &System, w: &GenWord) -> Result<FlowElement> {
        let mut inverses: BTreeMap<&str, FlowElement> = BTreeMap::new();
        let mut acc = FlowElement::identity(sys);
        for l in w {
            let g = self.get(&l.name).ok_or_else(|| Error::Input(format!("unknown generator {}", l.name)))?;
            if l.inverse {
                if !inverses.contains_key(l.name.as_str()) {
                    inverses.insert(&l.name, g.invert()?);
                }
                acc = acc.compose(&inverses[l.name.as_str()])?;
            } else {
                acc = acc.compose(g)?;
            }
        }
        Ok(acc)
    }
}

fn letter_name(l: FLetter) -> &'static str {
    match l {
        FLetter::A | FLetter::AInv => "a",
        FLetter::B | FLetter::BInv => "b",
    }
}

fn is_inverse(l: FLetter) -> bool {
    matches!(l, FLetter::AInv | FLetter::BInv)
}

fn pair_for(chart: &Chart, j: &Interval) -> Result<[(FlowElement, FLetter); 2]> {
    let (a, b) = thompson_generators(j);
    Ok([(chart_embed(chart, &a)?, FLetter::A), (chart_embed(chart, &b)?, FLetter::B)])
}

/// Generators of `F_{X,I₀}` and of `F_{[c]_0,I₁}` for every letter `c`.
pub fn finite_generating_set(sys: &System) -> Result<GeneratorSet> {
    let mut gs = GeneratorSet { names: vec![], elements: vec![], provenance: vec![] };
    let x = ClopenSet::full(sys);
    let ch = Chart::new(&x, i0())?;
    for (e, l) in pair_for(&ch, &i0())? {
        gs.names.push(format!("{}0", letter_name(l)));
        gs.elements.push(e);
        gs.provenance.push((ch.clone(), l));
    }
    for c in crate::symbolic::generating_partition(sys) {
        let ch = Chart::new(&c, i1())?;
        let sym = sys.show_word(&c.words().iter().next().unwrap().clone());
        for (e, l) in pair_for(&ch, &i1())? {
            gs.names.push(format!("{}[{}]", letter_name(l), sym));
            gs.elements.push(e);
            gs.provenance.push((ch.clone(), l));
        }
    }
    Ok(gs)
}

/// The group `K = <F_{X,I₀}, F_{X,I₁}>` with its four generators `a0, b0, a1, b1`.
pub fn k_generators(sys: &System) -> Result<GeneratorSet> {
    let mut gs = GeneratorSet { names: vec![], elements: vec![], provenance: vec![] };
    let x = ClopenSet::full(sys);
    for (tag, j) in [("0", i0()), ("1", i1())] {
        let ch = Chart::new(&x, j)?;
        for (e, l) in pair_for(&ch, &j)? {
            gs.names.push(format!("{}{tag}", letter_name(l)));
            gs.elements.push(e);
            gs.provenance.push((ch.clone(), l));
        }
    }
    Ok(gs)
}

/// Named boolean checks attached to a construction.
pub type Checks = Vec<(String, bool)>;

pub fn all_pass(checks: &Checks) -> bool {
    checks.iter().all(|c| c.1)
}

#[derive(Clone, Debug)]
pub struct MoveResult {
    pub k: FlowElement,
    /// Word in `a0, b0` (for `F_{X,I₀}`) and `a1, b1` (for `F_{X,I₁}`).
    pub word: GenWord,
    pub checks: Checks,
}

fn pow2_below(x: Dyadic) -> Dyadic {
    let mut p = Dyadic::ONE;
    while p > x {
        p = p.half();
    }
    p
}

/// One fragment of a word in `K`: an element of `F_{X,base}` with its word.
#[derive(Clone, Debug)]
struct KPiece {
    tag: &'static str,
    base: Interval,
    map: PLMap,
    letters: Vec<FLetter>,
}

impl KPiece {
    fn word(&self) -> GenWord {
        self.letters
            .iter()
            .map(|&l| GenLetter { name: format!("{}{}", letter_name(l), self.tag), inverse: is_inverse(l) })
            .collect()
    }
}

/// Pieces of the periodic lift of an element `h ∈ F'_L`, `|L| < 1`, via
/// fragmentation along the translates of `I₀` and `I₁` meeting `L`.
/// The lift is the composite of the pieces, first piece outermost.
fn lift_pieces(l: &Interval, h: &PLMap) -> Result<Vec<KPiece>> {
    let mut cover = Vec::new();
    let mut origin = Vec::new();
    for n in l.lo.floor() - 2..=l.hi.ceil() + 1 {
        for (tag, base) in [("0", i0()), ("1", i1())] {
            let t = base.translate(n);
            let lo = t.lo.max(l.lo);
            let hi = t.hi.min(l.hi);
            if lo < hi {
                cover.push(Interval { lo, hi });
                origin.push((tag, base, n));
            }
        }
    }
    let mut out = Vec::new();
    for (i, f) in fragment_f(h, &cover)? {
        let (tag, base, n) = origin[i];
        let t = base.translate(n);
        let piece = f.restrict(cover[i].lo, cover[i].hi).extend_identity(t.lo, t.hi)?;
        let nn = Dyadic::int(n);
        let map = piece.shifted(-nn, -nn);
        let letters = word_for(&base, &map)?;
        out.push(KPiece { tag, base, map, letters });
    }
    Ok(out)
}

/// Pieces of an element of `F'_L` lifted to `K` sending `from` onto `to`,
/// with `L` the hull of both widened by a margin.
fn k_pieces_conj(from: &Interval, to: &Interval) -> Result<Vec<KPiece>> {
    let hull = Interval { lo: from.lo.min(to.lo), hi: from.hi.max(to.hi) };
    let e = pow2_below((Dyadic::ONE - hull.len()).mul_pow2(-2));
    let l = Interval { lo: hull.lo - e, hi: hull.hi + e };
    lift_pieces(&l, &conj_interval(&l, from, to)?)
}

/// Shrinks `j` to a short interval, moves it in strides, and widens it onto `target`.
fn k_pieces_to_interval(j: &Interval, target: &Interval) -> Result<Vec<KPiece>> {
    let s = j.len().min(dy(1, 8));
    let mut cur = Interval { lo: j.lo, hi: j.lo + s };
    let mut pieces = if cur != *j { k_pieces_conj(j, &cur)? } else { Vec::new() };
    let step = Dyadic::new(((Dyadic::ONE - s).half().mul_pow2(5)).floor() as i128, 5);
    let mut remaining = target.lo - cur.lo;
    let mut guard = 0;
    while !remaining.is_zero() {
        guard += 1;
        if guard > 4096 {
            return Err(Error::Budget("interval move needs too many steps".into()));
        }
        let d = if remaining.abs() <= step { remaining } else if remaining > Dyadic::ZERO { step } else { -step };
        let next = Interval { lo: cur.lo + d, hi: cur.hi + d };
        let mut w = k_pieces_conj(&cur, &next)?;
        w.extend(pieces);
        pieces = w;
        cur = next;
        remaining = remaining - d;
    }
    if cur != *target {
        let mut w = k_pieces_conj(&cur, target)?;
        w.extend(pieces);
        pieces = w;
    }
    Ok(pieces)
}

/// The element of `K` given by a list of pieces, and whether every piece's
/// word evaluates to its map in `F_base`.
fn realize_pieces(sys: &System, pieces: &[KPiece]) -> Result<(FlowElement, bool)> {
    let x = ClopenSet::full(sys);
    let mut k = FlowElement::identity(sys);
    let mut words_ok = true;
    for p in pieces {
        words_ok &= word_realizes(&p.letters, &transport_from(&p.base, &p.map));
        k = k.compose(&chart_embed(&Chart::new(&x, p.base)?, &p.map)?)?;
    }
    Ok((k, words_ok))
}

/// An element `k ∈ K` with `k(U_{C×J}) = U_{C×I}`, with its word and certificate.
///
/// The word is checked piece by piece: each fragment's subword composes to
/// the fragment in `F_{X,I₀}` or `F_{X,I₁}`, and `k` is the product of the fragments.
pub fn move_domain(c: &ClopenSet, j: &Interval, i: &Interval) -> Result<MoveResult> {
    let (k, word, checks, _) = move_domain_pieces(c, j, i)?;
    Ok(MoveResult { k, word, checks })
}

fn move_domain_pieces(c: &ClopenSet, j: &Interval, i: &Interval) -> Result<(FlowElement, GenWord, Checks, Vec<KPiece>)> {
    if j.len() >= Dyadic::ONE || i.len() >= Dyadic::ONE {
        return Err(Error::Precondition("moved intervals must be shorter than 1".into()));
    }
    let sys = c.system().clone();
    let kg = k_generators(&sys)?;
    let pieces = if i == j { Vec::new() } else { k_pieces_to_interval(j, i)? };
    let (k, words_ok) = realize_pieces(&sys, &pieces)?;
    let word: GenWord = pieces.iter().flat_map(|p| p.word()).collect();
    let image = Region::open_box(c, j)?.image(&k)?;
    let target = Region::open_box(c, i)?;
    let checks = vec![
        ("image-equals-target".to_string(), image.equals(&target)?),
        ("letters-in-K".to_string(), word.iter().all(|l| kg.get(&l.name).is_some())),
        ("fragment-words".to_string(), words_ok),
    ];
    Ok((k, word, checks, pieces))
}

#[derive(Clone, Debug)]
pub struct Factor {
    pub element: FlowElement,
    pub annotation: String,
}

#[derive(Clone, Debug)]
pub struct Factorization {
    pub target: FlowElement,
    pub factors: Vec<Factor>,
    pub commuting: bool,
    pub checks: Checks,
}

impl Factorization {
    fn certify(target: FlowElement, factors: Vec<Factor>, commuting: bool) -> Result<Factorization> {
        let sys = target.system().clone();
        let elems: Vec<FlowElement> = factors.iter().map(|f| f.element.clone()).collect();
        let composite = FlowElement::product(&sys, &elems)?;
        let mut checks = vec![("composite".to_string(), composite.equals(&target)?)];
        if commuting {
            let mut ok = true;
            for a in 0..elems.len() {
                for b in a + 1..elems.len() {
                    if !elems[a].commutator(&elems[b])?.is_identity() {
                        ok = false;
                    }
                }
            }
            checks.push(("pairwise-commuting".to_string(), ok));
        }
        Ok(Factorization { target, factors, commuting, checks })
    }

    pub fn verified(&self) -> bool {
        all_pass(&self.checks)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "target": self.target.canonical_hash(),
            "factors": self.factors.iter().map(|f| serde_json::json!({
                "annotation": f.annotation,
                "element": f.element.canonical_hash(),
            })).collect::<Vec<_>>(),
            "commuting": self.commuting,
            "checks": self.checks.iter().map(|(n, b)| serde_json::json!({"name": n, "pass": b})).collect::<Vec<_>>(),
        })
    }
}

/// Groups the points of the chart base by the fiber map `F_x` on the chart interval.
fn fiber_groups(g: &FlowElement, ch: &Chart) -> Result<Vec<(ClopenSet, PLMap)>> {
    let sys = g.system().clone();
    let j = ch.interval;
    let (gl, glen) = g.window();
    let mut ws = vec![(ch.base.left(), ch.base.window_len())];
    if glen > 0 {
        for k in j.lo.floor()..j.hi.ceil() {
            ws.push((gl + k, glen));
        }
    }
    let (l, len) = join_windows(&ws);
    let mut groups: Vec<(PLMap, Vec<Vec<u8>>)> = Vec::new();
    for w in sys.allowed_words(len)? {
        let x = WordCoords { l, word: &w };
        if !ch.base.contains_coords(&x).unwrap() {
            continue;
        }
        let f = g.lift(&x, j.lo, j.hi).unwrap();
        if f.image() != (j.lo, j.hi) {
            return Err(Error::Precondition(format!(
                "element does not preserve the fiber {j} over the word {} at {l}",
                sys.show_word(&w)
            )));
        }
        match groups.iter_mut().find(|gr| gr.0 == f) {
            Some(gr) => gr.1.push(w),
            None => groups.push((f, vec![w])),
        }
    }
    groups
        .into_iter()
        .map(|(f, ws)| Ok((ClopenSet::from_words(&sys, l, len, ws)?, f)))
        .collect()
}

/// `g = g_1 ⋯ g_r` with `g_j ∈ F_{C_j, I}` for a partition of `C`, when `g` is supported in `U_{C×I}`.
pub fn commuting_factorization(g: &FlowElement, ch: &Chart) -> Result<Factorization> {
    if !g.support()?.is_subset(&ch.domain()?)? {
        return Err(Error::Precondition("support is not contained in the chart domain".into()));
    }
    let mut factors = Vec::new();
    for (cj, f) in fiber_groups(g, ch)? {
        if f.is_identity() {
            continue;
        }
        let sub = Chart { base: cj.clone(), interval: ch.interval };
        factors.push(Factor { element: chart_embed(&sub, &f)?, annotation: format!("{:?} × {}", cj, ch.interval) });
    }
    Factorization::certify(g.clone(), factors, true)
}

#[derive(Clone, Debug)]
pub struct FirstReturn {
    pub charts: Vec<Chart>,
    pub factorizations: Vec<Factorization>,
    pub checks: Checks,
}

/// Charts `(C_j, (b, a + n_j))` over the return cells of `C`, whose domains
/// partition the complement of the closed box, with every element of `P`
/// factored over them.
pub fn first_return_decomposition(c: &ClopenSet, j: &Interval, p: &[FlowElement]) -> Result<FirstReturn> {
    if j.len() >= Dyadic::ONE.half() {
        return Err(Error::Precondition("the base interval must be shorter than 1/2".into()));
    }
    let base = Chart::new(c, *j)?;
    let (cn, jn) = (base.base.clone(), base.interval);
    let part = return_partition(&cn, ReturnMode::Return, DEFAULT_RETURN_BUDGET)?;
    let mut charts = Vec::new();
    for cell in &part.cells {
        let iv = Interval::new(jn.hi, jn.lo + Dyadic::int(cell.time as i64))?;
        charts.push(Chart::new(&cell.cell, iv)?);
    }
    let closed = base.closed_domain()?;
    let complement = closed.complement()?;
    let domains: Vec<Region> = charts.iter().map(|ch| ch.domain()).collect::<Result<_>>()?;
    let mut disjoint = true;
    let sys = c.system().clone();
    let mut union = Region::empty(&sys);
    for a in 0..domains.len() {
        for b in a + 1..domains.len() {
            if !domains[a].is_disjoint(&domains[b])? {
                disjoint = false;
            }
        }
        union = union.union(&domains[a])?;
    }
    let mut checks = vec![
        ("domains-disjoint".to_string(), disjoint),
        ("domains-cover-complement".to_string(), union.equals(&complement)?),
    ];
    let mut factorizations = Vec::new();
    for (idx, g) in p.iter().enumerate() {
        let supp = g.support()?.closure()?;
        let bad = supp.intersection(&closed)?;
        if !bad.is_empty() {
            return Err(Error::Precondition(format!(
                "element {idx} moves points of the closed base box: {:?}",
                bad
            )));
        }
        let mut factors = Vec::new();
        for ch in &charts {
            for (cj, f) in fiber_groups(g, ch)? {
                if f.is_identity() {
                    continue;
                }
                let sub = Chart { base: cj.clone(), interval: ch.interval };
                factors.push(Factor { element: chart_embed(&sub, &f)?, annotation: format!("{:?} × {}", cj, ch.interval) });
            }
        }
        factorizations.push(Factorization::certify(g.clone(), factors, true)?);
    }
    checks.push(("factorizations".to_string(), factorizations.iter().all(|f| f.verified())));
    Ok(FirstReturn { charts, factorizations, checks })
}

#[derive(Clone, Debug)]
pub struct GermSplit {
    pub h: FlowElement,
    /// Set when the roles of `y` and `z` were exchanged: then `h` fixes a
    /// neighbourhood of `y` and `h g` fixes a neighbourhood of `z`.
    pub swapped: bool,
    pub checks: Checks,
}

/// Position of `z` on the orbit of `y`, in the time coordinate of `y.base`.
fn orbit_time(y: &SuspensionPoint, z: &SuspensionPoint, reach: i64) -> Option<Dyadic> {
    (-reach..=reach).find_map(|m| z.base.same(&y.base.shift(m)).then(|| z.time + Dyadic::int(m)))
}

/// Splits `g = h⁻¹ (h g)` with `h` fixing a neighbourhood of `z` and `h g`
/// fixing a neighbourhood of `y` (or with the roles exchanged when `z` lies
/// on the orbit arc from `y` to `g(y)`).
pub fn germ_factorization(g: &FlowElement, y: &SuspensionPoint, z: &SuspensionPoint) -> Result<GermSplit> {
    let sys = g.system().clone();
    if !sys.is_substitution() {
        return Err(Error::Unsupported(
            "germ factorization needs a system without finite orbits; only substitution systems qualify".into(),
        ));
    }
    if y.same(z) {
        return Err(Error::Precondition("the two points must differ".into()));
    }
    let s = y.time;
    let s2 = g.lift(&y.base, Dyadic::ZERO, Dyadic::ONE).unwrap().eval(s);
    let (lo, hi) = (s.min(s2), s.max(s2));
    let reach = hi.ceil() - lo.floor() + 8;
    if let Some(tz) = orbit_time(y, z, reach) {
        if tz >= lo && tz <= hi {
            let mut r = germ_split_direct(g, z, y)?;
            r.swapped = true;
            return Ok(r);
        }
    }
    germ_split_direct(g, y, z)
}

fn germ_split_direct(g: &FlowElement, y: &SuspensionPoint, z: &SuspensionPoint) -> Result<GermSplit> {
    let sys = g.system().clone();
    let x = &y.base;
    let s = y.time;
    let (dmin, dmax) = g.displacement_range();
    let fx = g.lift(x, Dyadic::int(dmin.floor() - 2), Dyadic::int(dmax.ceil() + 3)).unwrap();
    let s2 = fx.eval(s);
    let (lo, hi) = (s.min(s2), s.max(s2));
    let mut delta = dy(1, 8);
    let reach = hi.ceil() - lo.floor() + 8;
    if let Some(tz) = orbit_time(y, z, reach) {
        let gap = if tz < lo { lo - tz } else { tz - hi };
        while delta.mul_pow2(1) >= gap {
            delta = delta.half();
        }
    }
    let j = Interval::new(lo - delta, hi + delta)?;
    let f_inv = fx.inverse();
    let mut eps = delta.half();
    let local = loop {
        let local = f_inv.restrict(s2 - eps, s2 + eps);
        let (v0, v1) = local.image();
        if v0 > j.lo && v1 < j.hi {
            break local;
        }
        eps = eps.half();
    };
    let (left, right) = local.domain();
    let (v0, v1) = local.image();
    let el = Dyadic::mid(j.lo, left.min(v0));
    let er = Dyadic::mid(j.hi, right.max(v1));
    let k = PLMap::concat(&[
        PLMap::identity(j.lo, el),
        interval_map(el, left, el, v0),
        local,
        interval_map(right, er, v1, er),
        PLMap::identity(er, j.hi),
    ])?;
    let (gl, glen) = g.window();
    let mut rad = 1i64;
    loop {
        let mut ws = vec![(-rad, (2 * rad + 1) as usize)];
        if glen > 0 {
            for k in -3..=3 {
                ws.push((gl + k, glen));
            }
        }
        let (wl, wlen) = join_windows(&ws);
        let d = ClopenSet::cylinder(&sys, wl, &x.window(wl, wlen))?;
        if let Ok(ch) = Chart::new(&d, j) {
            if !ch.closed_domain()?.contains(z) {
                let h = chart_embed(&ch, &k)?;
                let hg = h.compose(g)?;
                let checks = vec![
                    ("h-fixes-neighbourhood".to_string(), !h.support()?.closure()?.contains(z)),
                    ("hg-fixes-neighbourhood".to_string(), !hg.support()?.closure()?.contains(y)),
                ];
                return Ok(GermSplit { h, swapped: false, checks });
            }
        }
        rad += 1;
        if rad > 12 {
            return Err(Error::Budget("no separating cylinder found within radius 12".into()));
        }
    }
}

/// Factors `g ∈ F'_{C,J}` over a grid cover `{(C_i, J_i)}`: clopen parts that
/// are pairwise equal or disjoint, each with its own interval family. Cover
/// intervals are given in the coordinates of the chart interval.
pub fn fragment_element(g: &FlowElement, ch: &Chart, cover: &[(ClopenSet, Interval)]) -> Result<Factorization> {
    let mut parts: Vec<(ClopenSet, Vec<(usize, Interval)>)> = Vec::new();
    for (idx, (c, iv)) in cover.iter().enumerate() {
        let mut placed = false;
        for p in parts.iter_mut() {
            if p.0.equals(c)? {
                p.1.push((idx, *iv));
                placed = true;
                break;
            }
            if p.0.intersects(c)? {
                return Err(Error::NonGridCover(format!("cover parts {:?} and {:?} overlap without being equal", p.0, c)));
            }
        }
        if !placed {
            parts.push((c.clone(), vec![(idx, *iv)]));
        }
    }
    if !g.support()?.is_subset(&ch.domain()?)? {
        return Err(Error::Precondition("support is not contained in the chart domain".into()));
    }
    let j = ch.interval;
    let mut factors = Vec::new();
    for (cj, f) in fiber_groups(g, ch)? {
            if f.is_identity() {
                continue;
            }
            let mut covered = ClopenSet::empty(cj.system());
            for (pc, family) in &parts {
                let piece = cj.intersection(pc)?;
                covered = covered.union(&piece)?;
                if piece.is_empty() {
                    continue;
                }
                let ivs: Vec<Interval> = family
                    .iter()
                    .filter_map(|(_, iv)| {
                        let lo = iv.lo.max(j.lo);
                        let hi = iv.hi.min(j.hi);
                        (lo < hi).then_some(Interval { lo, hi })
                    })
                    .collect();
                let idxs: Vec<usize> = family
                    .iter()
                    .filter(|(_, iv)| iv.lo.max(j.lo) < iv.hi.min(j.hi))
                    .map(|(i, _)| *i)
                    .collect();
                let sub = Chart { base: piece.clone(), interval: j };
                for (k, fk) in fragment_f(&f, &ivs)? {
                    factors.push(Factor {
                        element: chart_embed(&sub, &fk)?,
                        annotation: format!("cover element {}", idxs[k]),
                    });
                }
            }
            if !cj.is_subset(&covered)? {
                return Err(Error::Precondition("support escapes the cover".into()));
            }
    }
    let mut fz = Factorization::certify(g.clone(), factors, false)?;
    let mut inside = true;
    for f in &fz.factors {
        let idx: usize = f.annotation.trim_start_matches("cover element ").parse().unwrap();
        let dom = Region::open_box(&cover[idx].0, &cover[idx].1)?;
        if !f.element.support()?.is_subset(&dom)? {
            inside = false;
        }
    }
    fz.checks.push(("supports-in-cover".to_string(), inside));
    Ok(fz)
}

#[derive(Clone, Debug, Serialize)]
pub struct DoubleCommutator {
    pub holds: bool,
    pub lhs_hash: String,
    pub rhs_hash: String,
}

/// Checks `[h1, h2] = [[h1, g], h2]` after certifying `g(U) ∩ U = ∅` and `supp h_i ⊆ U`.
pub fn double_commutator_check(g: &FlowElement, u: &Chart, h1: &FlowElement, h2: &FlowElement) -> Result<DoubleCommutator> {
    let dom = u.domain()?;
    let moved = dom.image(g)?;
    let meet = moved.intersection(&dom)?;
    if !meet.is_empty() {
        return Err(Error::Precondition(format!("g(U) meets U in {meet:?}")));
    }
    for (name, h) in [("h1", h1), ("h2", h2)] {
        let out = h.support()?.difference(&dom)?;
        if !out.is_empty() {
            return Err(Error::Precondition(format!("{name} moves points outside U: {out:?}")));
        }
    }
    let lhs = h1.commutator(h2)?;
    let rhs = h1.commutator(g)?.commutator(h2)?;
    Ok(DoubleCommutator { holds: lhs.equals(&rhs)?, lhs_hash: lhs.canonical_hash(), rhs_hash: rhs.canonical_hash() })
}

#[derive(Clone, Debug)]
pub struct GenerationWitness {
    pub word: Option<GenWord>,
    pub blocker: Option<String>,
    pub checks: Checks,
}

/// A subword standing for an element of one chart's copy of `F`: each
/// letter `A`/`B` is spelled by the listed generator names.
struct Segment {
    chart: Chart,
    interval: Interval,
    letters: Vec<FLetter>,
    names: Vec<String>,
    map: PLMap,
}

impl Segment {
    fn word(&self) -> GenWord {
        let mut out = Vec::new();
        for &l in &self.letters {
            for n in &self.names {
                out.push(GenLetter { name: format!("{}{n}", letter_name(l)), inverse: is_inverse(l) });
            }
        }
        out
    }

    fn value(&self) -> Result<FlowElement> {
        chart_embed(&self.chart, &self.map)
    }

    /// The letters compose to the map, and the named generators realize the
    /// chart's copy of `A` and `B` as a product of commuting elements.
    fn certify(&self, gens: &GeneratorSet) -> Result<bool> {
        if !word_realizes(&self.letters, &transport_from(&self.interval, &self.map)) {
            return Ok(false);
        }
        let (a, b) = thompson_generators(&self.interval);
        let mut family = Vec::new();
        for (l, m) in [("a", a), ("b", b)] {
            let mut prod = FlowElement::identity(self.chart.base.system());
            for n in &self.names {
                let g = gens
                    .get(&format!("{l}{n}"))
                    .ok_or_else(|| Error::Input(format!("unknown generator {l}{n}")))?;
                prod = prod.compose(g)?;
                family.push((n, g));
            }
            if !prod.equals(&chart_embed(&self.chart, &m)?)? {
                return Ok(false);
            }
        }
        for (i, (n, g)) in family.iter().enumerate() {
            for (m, h) in &family[i + 1..] {
                if n != m && !g.commutator(h)?.is_identity() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

fn segment(chart: Chart, interval: Interval, f: &PLMap, names: Vec<String>) -> Result<Segment> {
    let map = f.extend_identity(interval.lo, interval.hi)?;
    let letters = word_for(&interval, &map)?;
    Ok(Segment { chart, interval, letters, names, map })
}

/// A word in the finite generating set composing to `chart_embed((C, J), f)`,
/// when `C` is `X` or a union of letter cylinders at one coordinate.
///
/// The word is certified segment by segment: every segment's letters compose
/// to its map, the generator names realize the segment's chart, and the
/// segment values compose to the target.
pub fn generation_witness(gens: &GeneratorSet, ch: &Chart, f: &PLMap, budget: usize) -> Result<GenerationWitness> {
    let sys = ch.base.system().clone();
    let target = chart_embed(ch, f)?;
    let not_found = |b: &str| Ok(GenerationWitness { word: None, blocker: Some(b.to_string()), checks: vec![] });
    let letter_names: Vec<String> = (0..sys.letters() as u8).map(|c| format!("[{}]", sys.show_word(&[c]))).collect();
    let (base_iv, inner, names): (Interval, Interval, Vec<String>) = if ch.base.is_full() {
        (i0(), Interval { lo: Dyadic::ZERO, hi: dy(1, 4) }, vec!["0".to_string()])
    } else if ch.base.window_len() == 1 {
        let syms = ch.base.words().iter().map(|w| format!("[{}]", sys.show_word(w))).collect();
        (i1(), Interval { lo: dy(1, 2), hi: dy(3, 4) }, syms)
    } else {
        return not_found("intersection-commutator");
    };
    let m = ch.base.left();
    let base_c = ch.base.shift(m);
    let j = ch.interval.translate(-m);
    let f = {
        let (u, _) = f.domain();
        let sft = u - j.lo;
        f.shifted(-sft, -sft)
    };
    if j.len() >= Dyadic::ONE {
        return not_found("interval-length");
    }
    let base_chart = Chart::new(&base_c, base_iv)?;
    for t in [Dyadic::ZERO, Dyadic::ONE, -Dyadic::ONE] {
        let bt = base_iv.translate(t.floor());
        if bt.lo <= j.lo && j.hi <= bt.hi {
            let seg = segment(base_chart.clone(), base_iv, &f.shifted(-t, -t), names.clone())?;
            let word = seg.word();
            if word.len() > budget {
                return not_found("budget");
            }
            let checks = vec![
                ("segments-certified".to_string(), seg.certify(gens)?),
                ("word-equals-target".to_string(), seg.value()?.equals(&target)?),
            ];
            return Ok(GenerationWitness { word: Some(word), blocker: None, checks });
        }
    }
    let (k, _, mv_checks, pieces) = move_domain_pieces(&base_c, &j, &inner)?;
    let kmap = k.lift(&WordCoords { l: 0, word: &[] }, j.lo, j.hi).expect("elements of K are diagonal");
    let conj = kmap.compose(&f)?.compose(&kmap.inverse())?;
    let x = ClopenSet::full(&sys);
    let mut k_segs = Vec::new();
    for p in &pieces {
        let names = if p.tag == "0" { vec!["0".to_string()] } else { letter_names.clone() };
        k_segs.push(Segment { chart: Chart::new(&x, p.base)?, interval: p.base, letters: p.letters.clone(), names, map: p.map.clone() });
    }
    let inner_seg = segment(base_chart, base_iv, &conj, names)?;
    let kw: GenWord = k_segs.iter().flat_map(|s| s.word()).collect();
    let mut word = invert_gen_word(&kw);
    word.extend(inner_seg.word());
    word.extend(kw);
    if word.len() > budget {
        return not_found("budget");
    }
    let mut certified = all_pass(&mv_checks) && inner_seg.certify(gens)?;
    let mut k_value = FlowElement::identity(&sys);
    for s in &k_segs {
        certified &= s.certify(gens)?;
        k_value = k_value.compose(&s.value()?)?;
    }
    let value = k_value.invert()?.compose(&inner_seg.value()?)?.compose(&k_value)?;
    let checks = vec![
        ("segments-certified".to_string(), certified),
        ("word-equals-target".to_string(), value.equals(&target)?),
    ];
    Ok(GenerationWitness { word: Some(word), blocker: None, checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::{Subshift, SymbolicPoint};

    fn fib() -> System {
        Subshift::fibonacci()
    }

    #[test]
    fn generating_set_size() {
        let gs = finite_generating_set(&fib()).unwrap();
        assert_eq!(gs.len(), 6);
        assert!(gs.get("a[b]").is_some());
    }

    #[test]
    fn move_far_interval() {
        let sys = fib();
        let c = ClopenSet::letter(&sys, 0);
        let j = Interval::new(Dyadic::ZERO, dy(1, 4)).unwrap();
        let i = Interval::new(dy(3, 2), dy(17, 8)).unwrap();
        let r = move_domain(&c, &j, &i).unwrap();
        assert!(all_pass(&r.checks), "{:?}", r.checks);
        assert!(!r.word.is_empty());
    }

    #[test]
    fn commuting_split_by_fiber() {
        let sys = fib();
        let j = Interval::new(dy(1, 4), dy(3, 4)).unwrap();
        let (a, b) = thompson_generators(&j);
        let aa = ClopenSet::cylinder(&sys, 0, &[0, 0]).unwrap();
        let ab = ClopenSet::cylinder(&sys, 0, &[0, 1]).unwrap();
        let g = chart_embed(&Chart::new(&aa, j).unwrap(), &a)
            .unwrap()
            .compose(&chart_embed(&Chart::new(&ab, j).unwrap(), &b).unwrap())
            .unwrap();
        let ch = Chart::new(&ClopenSet::letter(&sys, 0), j).unwrap();
        let fz = commuting_factorization(&g, &ch).unwrap();
        assert!(fz.verified());
        assert_eq!(fz.factors.len(), 2);
    }

    #[test]
    fn first_return_boxes() {
        let sys = fib();
        let c = ClopenSet::letter(&sys, 1);
        let j = Interval::new(Dyadic::ZERO, dy(1, 4)).unwrap();
        let inner = Chart::new(&c, Interval::new(dy(1, 2), dy(3, 2)).unwrap()).unwrap();
        let (a, _) = thompson_generators(&inner.interval);
        let g = chart_embed(&inner, &a).unwrap();
        let fr = first_return_decomposition(&c, &j, &[g]).unwrap();
        assert!(all_pass(&fr.checks), "{:?}", fr.checks);
        assert_eq!(fr.charts.len(), 2);
    }

    #[test]
    fn first_return_rejects_long_base() {
        let sys = fib();
        let c = ClopenSet::letter(&sys, 1);
        let j = Interval::new(Dyadic::ZERO, dy(1, 2)).unwrap();
        assert!(matches!(first_return_decomposition(&c, &j, &[]), Err(Error::Precondition(_))));
    }

    #[test]
    fn double_commutator_full_shift() {
        let sys = Subshift::full(&["0", "1"]);
        let c = ClopenSet::letter(&sys, 0);
        let u = Chart::new(&c, Interval::new(Dyadic::ZERO, dy(1, 2)).unwrap()).unwrap();
        let (a, b) = thompson_generators(&u.interval);
        let h1 = chart_embed(&u, &a).unwrap();
        let h2 = chart_embed(&u, &b).unwrap();
        let g = FlowElement::translation(&sys, dy(1, 2));
        let r = double_commutator_check(&g, &u, &h1, &h2).unwrap();
        assert!(r.holds);
        let bad = FlowElement::translation(&sys, dy(1, 4));
        assert!(double_commutator_check(&bad, &u, &h1, &h2).is_err());
    }

    #[test]
    fn witness_for_generator_and_moved_interval() {
        let sys = fib();
        let gs = finite_generating_set(&sys).unwrap();
        let x = ClopenSet::full(&sys);
        let (a, _) = thompson_generators(&i0());
        let w = generation_witness(&gs, &Chart::new(&x, i0()).unwrap(), &a, 1 << 16).unwrap();
        assert_eq!(w.word.as_ref().unwrap().len(), 1);
        let j = Interval::new(dy(3, 8), dy(9, 8)).unwrap();
        let (_, b) = thompson_generators(&j);
        let w = generation_witness(&gs, &Chart::new(&x, j).unwrap(), &b, 1 << 20).unwrap();
        assert!(all_pass(&w.checks), "{:?}", w.blocker);
        let c = ClopenSet::cylinder(&sys, 0, &[0, 0]).unwrap();
        let w = generation_witness(&gs, &Chart::new(&c, i1()).unwrap(), &thompson_generators(&i1()).0, 64).unwrap();
        assert_eq!(w.blocker.as_deref(), Some("intersection-commutator"));
    }

    #[test]
    fn germ_split_and_swap() {
        let sys = fib();
        let p = SymbolicPoint::fibonacci_fixed_point(&sys);
        let g = FlowElement::translation(&sys, dy(1, 2));
        let y = SuspensionPoint::new(p.clone(), dy(1, 8));
        let z = SuspensionPoint::new(p.shift(5), dy(1, 4));
        let r = germ_factorization(&g, &y, &z).unwrap();
        assert!(!r.swapped);
        assert!(all_pass(&r.checks), "{:?}", r.checks);
        let z2 = SuspensionPoint::new(p.clone(), dy(1, 4));
        let r = germ_factorization(&g, &y, &z2).unwrap();
        assert!(r.swapped);
        assert!(all_pass(&r.checks), "{:?}", r.checks);
    }

    #[test]
    fn fragment_over_grid() {
        let sys = fib();
        let c = ClopenSet::full(&sys);
        let j = Interval::new(Dyadic::ZERO, dy(3, 4)).unwrap();
        let ch = Chart::new(&c, j).unwrap();
        let a = conj_interval(&j, &Interval::new(dy(1, 8), dy(1, 4)).unwrap(), &Interval::new(dy(3, 8), dy(5, 8)).unwrap())
            .unwrap();
        let g = chart_embed(&ch, &a).unwrap();
        let cover = vec![
            (ClopenSet::letter(&sys, 0), Interval::new(Dyadic::ZERO, dy(1, 2)).unwrap()),
            (ClopenSet::letter(&sys, 0), Interval::new(dy(1, 4), dy(3, 4)).unwrap()),
            (ClopenSet::letter(&sys, 1), j),
        ];
        let fz = fragment_element(&g, &ch, &cover).unwrap();
        assert!(fz.verified(), "{:?}", fz.checks);
        let bad = vec![(ClopenSet::letter(&sys, 0), j), (c.clone(), j)];
        assert!(matches!(fragment_element(&g, &ch, &bad), Err(Error::NonGridCover(_))));
    }
}
