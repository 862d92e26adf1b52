//! Restriction to subsystems, direct limits over SFT approximations, and
//! conjugation along flow equivalences given by transversal data.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dyadic::{Dyadic, PLMap};
use crate::error::{Error, Result};
use crate::suspension::{Chart, FlowElement, SuspensionPoint};
use crate::symbolic::{
    previous_segment, recode_at, segment_at, sft_approximation, ClopenSet, Coords, Need, Presentation, Shifted,
    Subshift, SymbolicPoint, System, Word, WordCoords,
};

/// The restriction of elements over `source` to the closed invariant subsystem `target`.
#[derive(Clone, Debug)]
pub struct RestrictionMap {
    pub source: System,
    pub target: System,
    checked: usize,
}

fn check_containment(source: &System, target: &System, n: usize) -> Result<()> {
    for w in target.allowed_words(n)? {
        if !source.is_allowed(&w)? {
            return Err(Error::Precondition(format!(
                "the word {} of the subsystem is not allowed in the ambient system",
                target.show_word(&w)
            )));
        }
    }
    Ok(())
}

impl RestrictionMap {
    /// Verifies language containment for all lengths up to `len`.
    pub fn new(source: &System, target: &System, len: usize) -> Result<RestrictionMap> {
        if source.alphabet() != target.alphabet() {
            return Err(Error::Input("restriction needs a common alphabet".into()));
        }
        for n in 1..=len.max(1) {
            check_containment(source, target, n)?;
        }
        Ok(RestrictionMap { source: source.clone(), target: target.clone(), checked: len.max(1) })
    }

    pub fn checked_len(&self) -> usize {
        self.checked
    }
}

/// The element of `T(φ|_Z)` obtained by restricting the action of `g` to `Z`.
pub fn restrict(g: &FlowElement, r: &RestrictionMap) -> Result<FlowElement> {
    if g.system().id() != r.source.id() {
        return Err(Error::MixedSystems);
    }
    let (l, len) = g.window();
    if len > r.checked {
        check_containment(&r.source, &r.target, len)?;
    }
    let cells: Vec<(Word, PLMap)> = r
        .target
        .allowed_words(len)?
        .into_iter()
        .map(|w| {
            let f = g.cell_map(&WordCoords { l, word: &w }).expect("window-sized word").clone();
            (w, f)
        })
        .collect();
    FlowElement::from_words(&r.target, l, len, cells)
}

/// An element over the source with the same chart data as a chart element over the target.
pub fn lift_chart(r: &RestrictionMap, ch: &Chart, f: &PLMap) -> Result<FlowElement> {
    let c = &ch.base;
    let d = if c.is_full() {
        ClopenSet::full(&r.source)
    } else {
        ClopenSet::from_words(&r.source, c.left(), c.window_len(), c.words().iter().cloned())?
    };
    crate::suspension::chart_embed(&Chart::new(&d, ch.interval)?, f)
}

/// Smallest `m <= budget` such that `g` (over `X_1`) restricts trivially to the
/// `m`-th SFT approximation of `sys`.
pub fn direct_limit_witness(sys: &System, g: &FlowElement, budget: usize) -> Result<usize> {
    let x1 = sft_approximation(sys, 1)?;
    if g.system().id() != x1.id() {
        return Err(Error::MixedSystems);
    }
    let to_x = RestrictionMap::new(&x1, sys, g.window().1.max(1))?;
    if !restrict(g, &to_x)?.is_identity() {
        return Err(Error::Precondition("the element acts nontrivially on the limit system".into()));
    }
    for m in 1..=budget {
        let xm = sft_approximation(sys, m)?;
        let r = RestrictionMap::new(&x1, &xm, m)?;
        if restrict(g, &r)?.is_identity() {
            return Ok(m);
        }
    }
    Err(Error::Budget(format!("no trivializing level up to {budget}")))
}

/// A flow equivalence cell: source block `u`, target block `v`, and the fiber
/// identification `f: [0, |u|] -> [0, |v|]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EqCell {
    pub u: Word,
    pub v: Word,
    pub f: PLMap,
}

/// Transversal data for a flow equivalence: both systems tile into blocks
/// with the same block sequence; `q` maps block `u_j` onto block `v_j` through `f_j`.
#[derive(Clone, Debug)]
pub struct FlowEquivalence {
    pub source: System,
    pub target: System,
    /// When set, the cells describe the reversed source and `q` reverses the flow.
    pub reverse_source: bool,
    cells: Vec<EqCell>,
    staged: System,
    src_pairs: Arc<Vec<(Word, Word)>>,
    tgt_pairs: Arc<Vec<(Word, Word)>>,
}

/// The identification `[0, n] -> [0, m]`: affine when `m/n` is a power of two,
/// otherwise two affine pieces with slopes `2^p` and `2^{p+1}`.
pub fn default_fiber(n: usize, m: usize) -> Result<PLMap> {
    if n == 0 || m == 0 {
        return Err(Error::Input("block lengths must be positive".into()));
    }
    let (nd, md) = (Dyadic::int(n as i64), Dyadic::int(m as i64));
    if md.log2_ratio(nd).is_some() {
        return PLMap::affine(Dyadic::ZERO, nd, Dyadic::ZERO, md);
    }
    let mut p = 0i32;
    while nd.mul_pow2(p + 1) < md {
        p += 1;
    }
    while nd.mul_pow2(p) > md {
        p -= 1;
    }
    let c = (nd.mul_pow2(p + 1) - md).mul_pow2(-p);
    PLMap::from_pairs(&[(Dyadic::ZERO, Dyadic::ZERO), (c, c.mul_pow2(p)), (nd, md)])
}

/// Start and cell of the block covering position `q`.
fn block_at(c: &dyn Coords, pairs: &[(Word, Word)], q: i64) -> std::result::Result<Option<(i64, usize)>, Need> {
    let maxlen = pairs.iter().map(|p| p.0.len()).max().unwrap_or(1) as i64;
    for p in (q - maxlen + 1..=q).rev() {
        if let Some(j) = segment_at(c, pairs, p)? {
            if p + pairs[j].0.len() as i64 > q {
                return Ok(Some((p, j)));
            }
        }
    }
    Ok(None)
}

struct Recoded<'a> {
    base: &'a dyn Coords,
    pairs: &'a [(Word, Word)],
}

impl Coords for Recoded<'_> {
    fn at(&self, i: i64) -> std::result::Result<u8, Need> {
        recode_at(self.base, self.pairs, i)
    }
}

struct Rev<'a> {
    inner: &'a dyn Coords,
}

impl Coords for Rev<'_> {
    fn at(&self, i: i64) -> std::result::Result<u8, Need> {
        self.inner.at(-i).map_err(|n| match n {
            Need::Left(k) => Need::Right(k),
            Need::Right(k) => Need::Left(k),
        })
    }
}

fn bifix(words: &[&Word]) -> bool {
    for (a, x) in words.iter().enumerate() {
        for (b, y) in words.iter().enumerate() {
            if a != b && (y.starts_with(x) || y.ends_with(x)) {
                return false;
            }
        }
    }
    true
}

/// Checks that block starts chosen by `block_at` tile every allowed word consistently.
fn check_tiling(sys: &System, pairs: &[(Word, Word)], side: &str) -> Result<()> {
    let m = pairs.iter().map(|p| p.0.len()).max().unwrap() as i64;
    let len = (4 * m) as usize;
    for w in sys.allowed_words(len)? {
        let c = WordCoords { l: 0, word: &w };
        for q in m..3 * m {
            let first = block_at(&c, pairs, q).ok().flatten();
            let Some((p, j)) = first else {
                return Err(Error::Input(format!("{side} word {} has no block at position {q}", sys.show_word(&w))));
            };
            let next = p + pairs[j].0.len() as i64;
            if next < 3 * m && block_at(&c, pairs, next).ok().flatten().map(|b| b.0) != Some(next) {
                return Err(Error::Input(format!("{side} blocks do not tile the word {}", sys.show_word(&w))));
            }
        }
    }
    Ok(())
}

impl FlowEquivalence {
    pub fn new(source: &System, target: &System, reverse_source: bool, cells: Vec<EqCell>) -> Result<FlowEquivalence> {
        let staged = if reverse_source { source.reversed()? } else { source.clone() };
        if cells.is_empty() {
            return Err(Error::Input("a flow equivalence needs at least one cell".into()));
        }
        for c in &cells {
            if c.u.is_empty() || c.v.is_empty() {
                return Err(Error::Input("blocks must be non-empty".into()));
            }
            let (n, m) = (Dyadic::int(c.u.len() as i64), Dyadic::int(c.v.len() as i64));
            if c.f.domain() != (Dyadic::ZERO, n) || c.f.image() != (Dyadic::ZERO, m) {
                return Err(Error::Input(format!(
                    "fiber map for block {} must send [0, {n}] onto [0, {m}]",
                    staged.show_word(&c.u)
                )));
            }
        }
        if !bifix(&cells.iter().map(|c| &c.u).collect::<Vec<_>>()) || !bifix(&cells.iter().map(|c| &c.v).collect::<Vec<_>>())
        {
            return Err(Error::Input("blocks must form prefix- and suffix-free codes".into()));
        }
        let src_pairs: Arc<Vec<(Word, Word)>> = Arc::new(cells.iter().map(|c| (c.u.clone(), c.v.clone())).collect());
        let tgt_pairs: Arc<Vec<(Word, Word)>> = Arc::new(cells.iter().map(|c| (c.v.clone(), c.u.clone())).collect());
        check_tiling(&staged, &src_pairs, "source")?;
        check_tiling(target, &tgt_pairs, "target")?;
        let k = cells.len();
        let mut seq = vec![Vec::new()];
        for _ in 0..3 {
            seq = seq
                .into_iter()
                .flat_map(|s: Vec<usize>| {
                    (0..k).map(move |j| {
                        let mut t = s.clone();
                        t.push(j);
                        t
                    })
                })
                .collect();
            for s in &seq {
                let u: Word = s.iter().flat_map(|&j| cells[j].u.iter().copied()).collect();
                let v: Word = s.iter().flat_map(|&j| cells[j].v.iter().copied()).collect();
                if staged.is_allowed(&u)? != target.is_allowed(&v)? {
                    return Err(Error::Input(format!(
                        "block sequences {} and {} disagree on being allowed",
                        staged.show_word(&u),
                        target.show_word(&v)
                    )));
                }
            }
        }
        Ok(FlowEquivalence {
            source: source.clone(),
            target: target.clone(),
            reverse_source,
            cells,
            staged,
            src_pairs,
            tgt_pairs,
        })
    }

    /// The identity of `sys` with every letter as its own block.
    pub fn identity(sys: &System) -> Result<FlowEquivalence> {
        let cells = (0..sys.letters() as u8)
            .map(|c| EqCell { u: vec![c], v: vec![c], f: PLMap::identity(Dyadic::ZERO, Dyadic::ONE) })
            .collect();
        FlowEquivalence::new(sys, sys, false, cells)
    }

    pub fn cells(&self) -> &[EqCell] {
        &self.cells
    }

    /// Source to target time on the line of a source point sitting at a block start.
    fn time_map(&self, xs: &dyn Coords, a: Dyadic, b: Dyadic) -> std::result::Result<PLMap, Need> {
        let mut pieces: Vec<PLMap> = Vec::new();
        let (mut p, mut q) = (0i64, 0i64);
        while Dyadic::int(p) < b {
            let j = segment_at(xs, &self.src_pairs, p)?.expect("validated tiling");
            let c = &self.cells[j];
            pieces.push(c.f.shifted(Dyadic::int(p), Dyadic::int(q)));
            p += c.u.len() as i64;
            q += c.v.len() as i64;
        }
        let (mut p, mut q) = (0i64, 0i64);
        let mut back = Vec::new();
        while Dyadic::int(p) > a {
            let (s, j) = previous_segment(xs, &self.src_pairs, p)?.expect("validated tiling");
            let c = &self.cells[j];
            p = s;
            q -= c.v.len() as i64;
            back.push(c.f.shifted(Dyadic::int(p), Dyadic::int(q)));
        }
        back.reverse();
        back.extend(pieces);
        Ok(PLMap::concat(&back).expect("blocks are consecutive").restrict(a, b))
    }

    /// Moves `g` to the staged source: identity unless the source is reversed.
    fn stage(&self, g: &FlowElement) -> Result<FlowElement> {
        if !self.reverse_source {
            return Ok(g.clone());
        }
        FlowElement::build(&self.staged, (0, 0), |y| {
            let x = Rev { inner: y };
            let f = g.lift(&x, -Dyadic::ONE, Dyadic::ZERO)?;
            let mut pairs: Vec<(Dyadic, Dyadic)> = f.pairs().into_iter().map(|(t, v)| (-t, -v)).collect();
            pairs.reverse();
            Ok(PLMap::from_pairs(&pairs).expect("reflected map is valid"))
        })
    }

    /// `q ∘ g ∘ q⁻¹` as an element over the target.
    pub fn conjugate(&self, g: &FlowElement) -> Result<FlowElement> {
        if g.system().id() != self.source.id() {
            return Err(Error::MixedSystems);
        }
        let g = self.stage(g)?;
        FlowElement::build(&self.target, (0, 1), |y| {
            let (p, j) = block_at(y, &self.tgt_pairs, 0)?.expect("validated tiling");
            let pd = Dyadic::int(p);
            let yp = Shifted { inner: y, k: p };
            let xs = Recoded { base: &yp, pairs: &self.tgt_pairs };
            let pre = self.cells[j].f.inverse().restrict(-pd, Dyadic::ONE - pd).shifted(pd, Dyadic::ZERO);
            let (lo, hi) = pre.image();
            let mid = g.lift(&xs, lo, hi)?;
            let (a, b) = mid.image();
            let post = self.time_map(&xs, a, b)?;
            Ok(post.compose(&mid).unwrap().compose(&pre).unwrap().shifted(Dyadic::ZERO, pd))
        })
    }

    /// The point map `q` of the suspensions.
    pub fn q(&self, y: &SuspensionPoint) -> SuspensionPoint {
        let y = if self.reverse_source {
            SuspensionPoint::new(y.base.reversed(), -y.time)
        } else {
            y.clone()
        };
        let (p, j) = block_at(&y.base, &self.src_pairs, 0).ok().flatten().expect("validated tiling");
        let base = y.base.shift(p);
        let t = y.time - Dyadic::int(p);
        SuspensionPoint::new(SymbolicPoint::recode(base, self.src_pairs.clone()), self.cells[j].f.eval(t))
    }

    /// `other ∘ self`, when every target block of `self` splits into source blocks of `other`.
    pub fn then(&self, other: &FlowEquivalence) -> Result<FlowEquivalence> {
        if other.source.id() != self.target.id() || other.reverse_source {
            return Err(Error::Input("flow equivalences do not compose".into()));
        }
        let mut cells = Vec::new();
        for c in &self.cells {
            let coords = WordCoords { l: 0, word: &c.v };
            let mut at = 0i64;
            let mut w = Vec::new();
            let mut parts = Vec::new();
            while (at as usize) < c.v.len() {
                let j = segment_at(&coords, &other.src_pairs, at)
                    .ok()
                    .flatten()
                    .ok_or_else(|| Error::Input(format!("block {} does not split", self.target.show_word(&c.v))))?;
                let o = &other.cells[j];
                parts.push(o.f.shifted(Dyadic::int(at), Dyadic::int(w.len() as i64)));
                at += o.u.len() as i64;
                w.extend_from_slice(&o.v);
            }
            let g = PLMap::concat(&parts)?;
            cells.push(EqCell { u: c.u.clone(), v: w, f: g.compose(&c.f)? });
        }
        FlowEquivalence::new(&self.source, &other.target, self.reverse_source, cells)
    }

    pub fn to_json(&self) -> FlowEquivalenceJson {
        FlowEquivalenceJson {
            reverse_source: self.reverse_source,
            cells: self
                .cells
                .iter()
                .map(|c| CellSpec {
                    source: self.staged.show_word(&c.u),
                    target: self.target.show_word(&c.v),
                    source_time: c.u.len(),
                    target_time: c.v.len(),
                    fiber: Some(c.f.clone()),
                })
                .collect(),
        }
    }

    pub fn from_json(source: &System, target: &System, j: &FlowEquivalenceJson) -> Result<FlowEquivalence> {
        let staged = if j.reverse_source { source.reversed()? } else { source.clone() };
        let mut cells = Vec::new();
        for c in &j.cells {
            let u = staged.parse_word(&c.source)?;
            let v = target.parse_word(&c.target)?;
            if u.len() != c.source_time || v.len() != c.target_time {
                return Err(Error::Input(format!("return times of cell {} do not match its blocks", c.source)));
            }
            let f = match &c.fiber {
                Some(f) => f.clone(),
                None => default_fiber(u.len(), v.len())?,
            };
            cells.push(EqCell { u, v, f });
        }
        FlowEquivalence::new(source, target, j.reverse_source, cells)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    pub source: String,
    pub target: String,
    pub source_time: usize,
    pub target_time: usize,
    #[serde(default)]
    pub fiber: Option<PLMap>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowEquivalenceJson {
    #[serde(default)]
    pub reverse_source: bool,
    pub cells: Vec<CellSpec>,
}

/// Doubles `symbol` of an SFT into `symbol symbol'`, with the induced flow equivalence.
pub fn symbol_expansion(sys: &System, symbol: u8) -> Result<(System, FlowEquivalence)> {
    let k = sys
        .block_length()
        .ok_or_else(|| Error::Unsupported("symbol expansion needs a finite type presentation".into()))?;
    if symbol as usize >= sys.letters() {
        return Err(Error::Input("symbol outside the alphabet".into()));
    }
    let d = sys.letters() as u8;
    let mut alphabet = sys.alphabet().to_vec();
    let mut name = format!("{}'", alphabet[symbol as usize]);
    while alphabet.contains(&name) {
        name.push('\'');
    }
    alphabet.push(name);
    let expand = |w: &[u8]| -> Word {
        w.iter().flat_map(|&c| if c == symbol { vec![c, d] } else { vec![c] }).collect()
    };
    let n = 2 * k + 1;
    let mut blocks = std::collections::BTreeSet::new();
    for w in sys.allowed_words(n)? {
        let e = expand(&w);
        for f in e.windows(n) {
            blocks.insert(f.to_vec());
        }
    }
    let target = Subshift::with_budget(alphabet, Presentation::AllowedN(n, blocks.into_iter().collect()), sys.word_budget())?;
    let cells = (0..d)
        .map(|c| {
            let v = expand(&[c]);
            let f = default_fiber(1, v.len())?;
            Ok(EqCell { u: vec![c], v, f })
        })
        .collect::<Result<Vec<_>>>()?;
    let fe = FlowEquivalence::new(sys, &target, false, cells)?;
    Ok((target, fe))
}
