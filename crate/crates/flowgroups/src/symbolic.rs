//! Subshifts and their clopen algebra: languages, cylinders, the shift
//! action, return times, induced systems and SFT approximations.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// A finite word, one byte per symbol index.
pub type Word = Vec<u8>;

/// Shared handle to a subshift.
pub type System = Arc<Subshift>;

pub const DEFAULT_WORD_BUDGET: usize = 1 << 20;
pub const DEFAULT_RETURN_BUDGET: usize = 64;

/// The source presentation of a subshift.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Presentation {
    Full,
    Periodic(Word),
    Forbidden(Vec<Word>),
    AllowedN(usize, Vec<Word>),
    Substitution(Vec<Word>),
    /// Coded by the return cells of a clopen set of another subshift.
    Induced,
}

#[derive(Clone, Debug)]
enum Engine {
    /// A one-step presentation by allowed `k`-blocks, pruned to its bi-infinite part.
    Graph { k: usize, blocks: HashSet<Word>, short: Vec<HashSet<Word>> },
    Subst { rules: Vec<Word> },
    Coded { base: System, cells: Vec<(ClopenSet, usize)> },
}

struct Level {
    words: Vec<Word>,
    index: HashMap<Word, usize>,
}

/// A subshift over a finite alphabet with cached language queries.
pub struct Subshift {
    alphabet: Vec<String>,
    presentation: Presentation,
    engine: Engine,
    id: String,
    word_budget: usize,
    levels: Mutex<HashMap<usize, Arc<Level>>>,
}

impl fmt::Debug for Subshift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Subshift")
            .field("alphabet", &self.alphabet)
            .field("presentation", &self.presentation)
            .field("id", &&self.id[..12])
            .finish()
    }
}

impl PartialEq for Subshift {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

fn all_words(d: usize, n: usize) -> Vec<Word> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::with_capacity(out.len() * d);
        for w in &out {
            for a in 0..d as u8 {
                let mut v = w.clone();
                v.push(a);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

fn contains_factor(w: &[u8], f: &[u8]) -> bool {
    !f.is_empty() && w.windows(f.len()).any(|x| x == f)
}

fn primitive_root(w: &[u8]) -> Word {
    let p = w.len();
    for d in 1..=p {
        if p.is_multiple_of(d) && (0..p).all(|i| w[i] == w[i % d]) {
            return w[..d].to_vec();
        }
    }
    w.to_vec()
}

fn prune(k: usize, mut blocks: HashSet<Word>) -> HashSet<Word> {
    loop {
        let pre: HashSet<&[u8]> = blocks.iter().map(|b| &b[..k - 1]).collect();
        let suf: HashSet<&[u8]> = blocks.iter().map(|b| &b[1..]).collect();
        let keep: HashSet<Word> = blocks
            .iter()
            .filter(|b| pre.contains(&b[1..]) && suf.contains(&b[..k - 1]))
            .cloned()
            .collect();
        if keep.len() == blocks.len() {
            return keep;
        }
        blocks = keep;
    }
}

fn substitute(rules: &[Word], w: &[u8]) -> Word {
    w.iter().flat_map(|&c| rules[c as usize].iter().copied()).collect()
}

fn is_primitive(rules: &[Word], d: usize) -> bool {
    let m: Vec<Vec<bool>> = (0..d)
        .map(|a| (0..d).map(|b| rules[a].contains(&(b as u8))).collect())
        .collect();
    let mut p = m.clone();
    let limit = (d - 1) * (d - 1) + 1;
    for _ in 0..limit.max(1) {
        if p.iter().all(|r| r.iter().all(|&x| x)) {
            return true;
        }
        let mut q = vec![vec![false; d]; d];
        for i in 0..d {
            for j in 0..d {
                q[i][j] = (0..d).any(|l| p[i][l] && m[l][j]);
            }
        }
        p = q;
    }
    p.iter().all(|r| r.iter().all(|&x| x))
}

impl Subshift {
    pub fn new(alphabet: Vec<String>, presentation: Presentation) -> Result<System> {
        Subshift::with_budget(alphabet, presentation, DEFAULT_WORD_BUDGET)
    }

    pub fn with_budget(alphabet: Vec<String>, presentation: Presentation, word_budget: usize) -> Result<System> {
        let d = alphabet.len();
        if d == 0 || d > 250 {
            return Err(Error::Input("alphabet must have between 1 and 250 symbols".into()));
        }
        let uniq: HashSet<&String> = alphabet.iter().collect();
        if uniq.len() != d || alphabet.iter().any(|s| s.is_empty()) {
            return Err(Error::Input("alphabet symbols must be distinct and non-empty".into()));
        }
        let check = |w: &[u8]| -> Result<()> {
            if w.iter().any(|&c| c as usize >= d) {
                return Err(Error::Input("word uses a symbol outside the alphabet".into()));
            }
            Ok(())
        };
        let graph = |k: usize, blocks: HashSet<Word>| -> Result<Engine> {
            let blocks = prune(k, blocks);
            if blocks.is_empty() {
                return Err(Error::Input("the presentation defines the empty subshift".into()));
            }
            let mut short = vec![HashSet::new(); k];
            for b in &blocks {
                for (n, set) in short.iter_mut().enumerate().skip(1) {
                    set.extend(b.windows(n).map(|f| f.to_vec()));
                }
            }
            short[0].insert(Vec::new());
            Ok(Engine::Graph { k, blocks, short })
        };
        let engine = match &presentation {
            Presentation::Full => graph(2, all_words(d, 2).into_iter().collect())?,
            Presentation::Periodic(w) => {
                if w.is_empty() {
                    return Err(Error::Input("periodic word must be non-empty".into()));
                }
                check(w)?;
                let u = primitive_root(w);
                let p = u.len();
                let cyc: Word = u.iter().cycle().take(3 * p + 1).copied().collect();
                let blocks = (0..p).map(|i| cyc[i..i + p + 1].to_vec()).collect();
                graph(p + 1, blocks)?
            }
            Presentation::Forbidden(ws) => {
                for w in ws {
                    check(w)?;
                }
                if ws.iter().any(|w| w.is_empty()) {
                    return Err(Error::Input("forbidden words must be non-empty".into()));
                }
                let k = ws.iter().map(|w| w.len()).max().unwrap_or(2).max(2);
                if (d as f64).powi(k as i32) > word_budget as f64 {
                    return Err(Error::Budget(format!("{d}^{k} blocks exceed the word budget")));
                }
                let blocks = all_words(d, k)
                    .into_iter()
                    .filter(|b| !ws.iter().any(|f| contains_factor(b, f)))
                    .collect();
                graph(k, blocks)?
            }
            Presentation::AllowedN(n, ws) => {
                if *n == 0 {
                    return Err(Error::Input("allowed word length must be positive".into()));
                }
                for w in ws {
                    check(w)?;
                    if w.len() != *n {
                        return Err(Error::Input(format!("allowed word of length {} where {n} expected", w.len())));
                    }
                }
                if *n == 1 {
                    let letters: Vec<u8> = ws.iter().map(|w| w[0]).collect();
                    let blocks = letters.iter().flat_map(|&a| letters.iter().map(move |&b| vec![a, b])).collect();
                    graph(2, blocks)?
                } else {
                    graph(*n, ws.iter().cloned().collect())?
                }
            }
            Presentation::Substitution(rules) => {
                if rules.len() != d {
                    return Err(Error::Input("substitution needs one rule per symbol".into()));
                }
                for r in rules {
                    check(r)?;
                    if r.is_empty() {
                        return Err(Error::Input("substitution rules must be non-empty".into()));
                    }
                }
                if !is_primitive(rules, d) {
                    return Err(Error::Input("substitution is not primitive".into()));
                }
                if rules.iter().all(|r| r.len() == 1) {
                    return Err(Error::Input("substitution must expand some letter".into()));
                }
                Engine::Subst { rules: rules.clone() }
            }
            Presentation::Induced => {
                return Err(Error::Input("induced systems are built with induced_system".into()))
            }
        };
        let id = engine_id(&alphabet, &engine);
        Ok(Arc::new(Subshift {
            alphabet,
            presentation,
            engine,
            id,
            word_budget,
            levels: Mutex::new(HashMap::new()),
        }))
    }

    pub fn full(alphabet: &[&str]) -> System {
        Subshift::new(alphabet.iter().map(|s| s.to_string()).collect(), Presentation::Full).unwrap()
    }

    /// The Fibonacci substitution `a -> ab, b -> a`.
    pub fn fibonacci() -> System {
        Subshift::new(vec!["a".into(), "b".into()], Presentation::Substitution(vec![vec![0, 1], vec![0]])).unwrap()
    }

    /// The golden-mean shift on `{0, 1}` forbidding `11`.
    pub fn golden_mean() -> System {
        Subshift::new(vec!["0".into(), "1".into()], Presentation::Forbidden(vec![vec![1, 1]])).unwrap()
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn letters(&self) -> usize {
        self.alphabet.len()
    }

    pub fn presentation(&self) -> &Presentation {
        &self.presentation
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn word_budget(&self) -> usize {
        self.word_budget
    }

    pub fn is_substitution(&self) -> bool {
        matches!(self.engine, Engine::Subst { .. })
    }

    /// Block length of a finite-type presentation.
    pub fn block_length(&self) -> Option<usize> {
        match &self.engine {
            Engine::Graph { k, .. } => Some(*k),
            _ => None,
        }
    }

    pub fn substitution_rules(&self) -> Option<&[Word]> {
        match &self.engine {
            Engine::Subst { rules } => Some(rules),
            _ => None,
        }
    }

    /// Parses a word by greedy longest match of symbol names.
    pub fn parse_word(&self, s: &str) -> Result<Word> {
        let mut out = Vec::new();
        let mut rest = s;
        while !rest.is_empty() {
            let best = self
                .alphabet
                .iter()
                .enumerate()
                .filter(|(_, name)| rest.starts_with(name.as_str()))
                .max_by_key(|(_, name)| name.len());
            match best {
                Some((i, name)) => {
                    out.push(i as u8);
                    rest = &rest[name.len()..];
                }
                None => return Err(Error::Input(format!("cannot parse {s:?} over alphabet {:?}", self.alphabet))),
            }
        }
        Ok(out)
    }

    pub fn show_word(&self, w: &[u8]) -> String {
        w.iter().map(|&c| self.alphabet[c as usize].as_str()).collect()
    }

    fn level(&self, n: usize) -> Result<Arc<Level>> {
        if let Some(l) = self.levels.lock().unwrap().get(&n) {
            return Ok(l.clone());
        }
        let mut words = self.compute_words(n)?;
        words.sort();
        words.dedup();
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        let level = Arc::new(Level { words, index });
        self.levels.lock().unwrap().insert(n, level.clone());
        Ok(level)
    }

    fn over_budget(&self, n: usize) -> Error {
        Error::Budget(format!("allowed words of length {n} exceed the budget of {}", self.word_budget))
    }

    fn compute_words(&self, n: usize) -> Result<Vec<Word>> {
        if n == 0 {
            return Ok(vec![Vec::new()]);
        }
        match &self.engine {
            Engine::Graph { k, blocks, short } => {
                if n < *k {
                    return Ok(short[n].iter().cloned().collect());
                }
                let mut succ: HashMap<&[u8], Vec<u8>> = HashMap::new();
                for b in blocks {
                    succ.entry(&b[..k - 1]).or_default().push(b[k - 1]);
                }
                let mut cur: Vec<Word> = blocks.iter().cloned().collect();
                for _ in *k..n {
                    let mut next = Vec::new();
                    for w in &cur {
                        if let Some(s) = succ.get(&w[w.len() - (k - 1)..]) {
                            for &a in s {
                                let mut v = w.clone();
                                v.push(a);
                                next.push(v);
                            }
                        }
                        if next.len() > self.word_budget {
                            return Err(self.over_budget(n));
                        }
                    }
                    cur = next;
                }
                Ok(cur)
            }
            Engine::Subst { rules } => {
                let mut l2: BTreeSet<Word> = BTreeSet::new();
                for r in rules {
                    for f in r.windows(2) {
                        l2.insert(f.to_vec());
                    }
                }
                loop {
                    let mut grown = l2.clone();
                    for uv in &l2 {
                        for f in substitute(rules, uv).windows(2) {
                            grown.insert(f.to_vec());
                        }
                    }
                    if grown.len() == l2.len() {
                        break;
                    }
                    l2 = grown;
                }
                if n == 1 {
                    return Ok((0..self.letters() as u8).map(|c| vec![c]).collect());
                }
                if n == 2 {
                    return Ok(l2.into_iter().collect());
                }
                let mut imgs: Vec<Word> = l2.iter().cloned().collect();
                let mut letters: Vec<Word> = (0..self.letters() as u8).map(|c| vec![c]).collect();
                while letters.iter().map(|w| w.len()).min().unwrap() < n - 1 {
                    letters = letters.iter().map(|w| substitute(rules, w)).collect();
                    imgs = imgs.iter().map(|w| substitute(rules, w)).collect();
                    if imgs.iter().map(|w| w.len()).sum::<usize>() > 64 * self.word_budget {
                        return Err(self.over_budget(n));
                    }
                }
                let mut out: HashSet<Word> = HashSet::new();
                for w in &imgs {
                    for f in w.windows(n) {
                        out.insert(f.to_vec());
                    }
                    if out.len() > self.word_budget {
                        return Err(self.over_budget(n));
                    }
                }
                Ok(out.into_iter().collect())
            }
            Engine::Coded { .. } => {
                let d = self.letters() as u8;
                let prev = self.level(n - 1)?;
                let mut out = Vec::new();
                for w in &prev.words {
                    for c in 0..d {
                        let mut v = w.clone();
                        v.push(c);
                        if self.coded_allowed(&v)? {
                            out.push(v);
                        }
                    }
                    if out.len() > self.word_budget {
                        return Err(self.over_budget(n));
                    }
                }
                Ok(out)
            }
        }
    }

    fn coded_allowed(&self, w: &[u8]) -> Result<bool> {
        let Engine::Coded { base, cells } = &self.engine else { unreachable!() };
        let mut cons = Vec::new();
        let mut off = 0i64;
        for &c in w {
            let (cell, n) = &cells[c as usize];
            cons.push(cell.shifted_constraint(off));
            off += *n as i64;
        }
        let refs: Vec<Constraint<'_>> = cons.iter().map(|(l, len, ws)| Constraint { l: *l, len: *len, words: ws }).collect();
        base.exists(&refs)
    }

    /// The allowed words of length `n`, sorted.
    pub fn allowed_words(&self, n: usize) -> Result<Vec<Word>> {
        Ok(self.level(n)?.words.clone())
    }

    pub fn count_words(&self, n: usize) -> Result<usize> {
        Ok(self.level(n)?.words.len())
    }

    /// Index of a word in the sorted list of allowed words of its length.
    pub fn word_index(&self, w: &[u8]) -> Result<Option<usize>> {
        Ok(self.level(w.len())?.index.get(w).copied())
    }

    pub fn is_allowed(&self, w: &[u8]) -> Result<bool> {
        match &self.engine {
            Engine::Graph { k, blocks, short } => {
                if w.len() < *k {
                    Ok(short[w.len()].contains(w))
                } else {
                    Ok(w.windows(*k).all(|b| blocks.contains(b)))
                }
            }
            _ => Ok(self.level(w.len())?.index.contains_key(w)),
        }
    }

    /// Whether some point satisfies every constraint `x_{[l, l+len)} ∈ words`.
    pub fn exists(&self, cons: &[Constraint<'_>]) -> Result<bool> {
        let mut active = Vec::new();
        for c in cons {
            if c.words.is_empty() {
                return Ok(false);
            }
            if c.len > 0 {
                active.push(*c);
            }
        }
        if active.is_empty() {
            return Ok(true);
        }
        let p0 = active.iter().map(|c| c.l).min().unwrap();
        let p1 = active.iter().map(|c| c.l + c.len as i64 - 1).max().unwrap();
        let hull = (p1 - p0 + 1) as usize;
        let satisfies = |w: &[u8]| {
            active.iter().all(|c| {
                let s = (c.l - p0) as usize;
                c.words.contains(&w[s..s + c.len])
            })
        };
        if let Engine::Graph { k, blocks, .. } = &self.engine {
            let maxlen = active.iter().map(|c| c.len).max().unwrap();
            let m = (*k - 1).max(maxlen - 1).max(1);
            if hull > m + 1 {
                let mut ending: HashMap<i64, Vec<Constraint<'_>>> = HashMap::new();
                for c in &active {
                    ending.entry(c.l + c.len as i64 - 1).or_default().push(*c);
                }
                let init_end = p0 + m as i64 - 1;
                let check_at = |w: &[u8], end: i64| -> bool {
                    ending.get(&end).is_none_or(|cs| {
                        cs.iter().all(|c| {
                            let s = w.len() - ((end - c.l) as usize + 1);
                            c.words.contains(&w[s..s + c.len])
                        })
                    })
                };
                let mut states: HashSet<Word> = HashSet::new();
                for w in self.level(m)?.words.iter() {
                    let ok = (0..m as i64).all(|i| {
                        let end = p0 + i;
                        let prefix = &w[..(i + 1) as usize];
                        check_at(prefix, end)
                    });
                    if ok {
                        states.insert(w.clone());
                    }
                }
                let d = self.letters() as u8;
                let mut pos = init_end;
                while pos < p1 && !states.is_empty() {
                    pos += 1;
                    let mut next = HashSet::new();
                    for s in &states {
                        for a in 0..d {
                            let mut w = s.clone();
                            w.push(a);
                            if !blocks.contains(&w[w.len() - k..]) || !check_at(&w, pos) {
                                continue;
                            }
                            next.insert(w[1..].to_vec());
                        }
                    }
                    states = next;
                }
                return Ok(!states.is_empty());
            }
        }
        let level = self.level(hull)?;
        Ok(level.words.iter().any(|w| satisfies(w)))
    }

    /// The subshift of reversed words, carrying `φ^{-1}`.
    pub fn reversed(&self) -> Result<System> {
        let rev = |w: &Word| w.iter().rev().copied().collect::<Word>();
        let pres = match &self.presentation {
            Presentation::Full => Presentation::Full,
            Presentation::Periodic(w) => Presentation::Periodic(rev(w)),
            Presentation::Substitution(r) => Presentation::Substitution(r.iter().map(rev).collect()),
            Presentation::Forbidden(_) | Presentation::AllowedN(_, _) => {
                let Engine::Graph { k, blocks, .. } = &self.engine else { unreachable!() };
                Presentation::AllowedN(*k, blocks.iter().map(rev).collect())
            }
            Presentation::Induced => return Err(Error::Unsupported("reversal of an induced system".into())),
        };
        Subshift::with_budget(self.alphabet.clone(), pres, self.word_budget)
    }

    /// Aperiodicity heuristic: complexity `p(n) > n` for `n <= 24`.
    pub fn looks_aperiodic(&self) -> Result<bool> {
        for n in 1..=24 {
            if self.count_words(n)? <= n {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Whether every periodic word up to `max_period` is forbidden.
    pub fn has_periodic_points(&self, max_period: usize) -> Result<bool> {
        Ok(!periodic_points(self, max_period)?.is_empty())
    }
}

fn engine_id(alphabet: &[String], engine: &Engine) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(alphabet).unwrap());
    match engine {
        Engine::Graph { k, blocks, .. } => {
            let mut b: Vec<&Word> = blocks.iter().collect();
            b.sort();
            h.update(format!("graph:{k}:{b:?}"));
        }
        Engine::Subst { rules } => h.update(format!("subst:{rules:?}")),
        Engine::Coded { base, cells } => {
            h.update(format!("coded:{}", base.id));
            for (c, n) in cells {
                h.update(format!("{}:{:?}:{n}", c.l, c.words));
            }
        }
    }
    hex::encode(h.finalize())
}

/// A constraint `x_{[l, l+len)} ∈ words`.
#[derive(Clone, Copy, Debug)]
pub struct Constraint<'a> {
    pub l: i64,
    pub len: usize,
    pub words: &'a BTreeSet<Word>,
}

/// Reasons a coordinate read can fail on a partial point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Need {
    Left(i64),
    Right(i64),
}

/// Read access to the coordinates of a (possibly partial) point.
pub trait Coords {
    fn at(&self, i: i64) -> std::result::Result<u8, Need>;

    fn window(&self, l: i64, len: usize) -> std::result::Result<Word, Need> {
        (0..len as i64).map(|i| self.at(l + i)).collect()
    }
}

/// The coordinates of a word placed at `[l, l + |w|)`.
pub struct WordCoords<'a> {
    pub l: i64,
    pub word: &'a [u8],
}

impl Coords for WordCoords<'_> {
    fn at(&self, i: i64) -> std::result::Result<u8, Need> {
        if i < self.l {
            Err(Need::Left(i))
        } else if i >= self.l + self.word.len() as i64 {
            Err(Need::Right(i))
        } else {
            Ok(self.word[(i - self.l) as usize])
        }
    }
}

/// Coordinates of `φ^k x`.
pub struct Shifted<'a> {
    pub inner: &'a dyn Coords,
    pub k: i64,
}

impl Coords for Shifted<'_> {
    fn at(&self, i: i64) -> std::result::Result<u8, Need> {
        self.inner.at(i + self.k)
    }
}

/// A clopen subset of a subshift: the cylinders of a set of words over the
/// window `[l, l + len)`. The empty window denotes either `X` (words `{""}`) or `∅`.
#[derive(Clone)]
pub struct ClopenSet {
    sys: System,
    l: i64,
    len: usize,
    words: BTreeSet<Word>,
}

impl fmt::Debug for ClopenSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len == 0 {
            return f.write_str(if self.words.is_empty() { "∅" } else { "X" });
        }
        let ws: Vec<String> = self.words.iter().map(|w| self.sys.show_word(w)).collect();
        write!(f, "[{}]_{}", ws.join("|"), self.l)
    }
}

impl PartialEq for ClopenSet {
    fn eq(&self, other: &Self) -> bool {
        self.equals(other).unwrap_or(false)
    }
}

impl ClopenSet {
    pub fn full(sys: &System) -> ClopenSet {
        ClopenSet { sys: sys.clone(), l: 0, len: 0, words: [Vec::new()].into_iter().collect() }
    }

    pub fn empty(sys: &System) -> ClopenSet {
        ClopenSet { sys: sys.clone(), l: 0, len: 0, words: BTreeSet::new() }
    }

    /// The set of points spelling one of `words` (all of length `len`) at `[l, l + len)`.
    pub fn from_words(sys: &System, l: i64, len: usize, words: impl IntoIterator<Item = Word>) -> Result<ClopenSet> {
        let mut set = BTreeSet::new();
        for w in words {
            if w.len() != len {
                return Err(Error::Input("clopen words must all have the window length".into()));
            }
            if sys.is_allowed(&w)? {
                set.insert(w);
            }
        }
        ClopenSet { sys: sys.clone(), l, len, words: set }.canonical()
    }

    pub fn cylinder(sys: &System, l: i64, word: &[u8]) -> Result<ClopenSet> {
        ClopenSet::from_words(sys, l, word.len(), [word.to_vec()])
    }

    /// The letter cylinder `[c]_0`.
    pub fn letter(sys: &System, c: u8) -> ClopenSet {
        ClopenSet::cylinder(sys, 0, &[c]).unwrap()
    }

    pub fn system(&self) -> &System {
        &self.sys
    }

    pub fn left(&self) -> i64 {
        self.l
    }

    pub fn window_len(&self) -> usize {
        self.len
    }

    /// The window `[l, r]`, or `None` for `X` and `∅`.
    pub fn window(&self) -> Option<(i64, i64)> {
        (self.len > 0).then(|| (self.l, self.l + self.len as i64 - 1))
    }

    pub fn words(&self) -> &BTreeSet<Word> {
        &self.words
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.len == 0 && !self.words.is_empty()
    }

    pub(crate) fn shifted_constraint(&self, off: i64) -> (i64, usize, BTreeSet<Word>) {
        (self.l + off, self.len, self.words.clone())
    }

    pub fn constraint(&self, off: i64) -> Constraint<'_> {
        Constraint { l: self.l + off, len: self.len, words: &self.words }
    }

    fn same_system(&self, other: &ClopenSet) -> Result<()> {
        if self.sys.id == other.sys.id {
            Ok(())
        } else {
            Err(Error::MixedSystems)
        }
    }

    /// Re-expresses the set over the window `[l2, l2 + len2)` containing its own.
    pub fn refine(&self, l2: i64, len2: usize) -> Result<BTreeSet<Word>> {
        if self.len == 0 {
            return Ok(if self.words.is_empty() {
                BTreeSet::new()
            } else {
                self.sys.allowed_words(len2)?.into_iter().collect()
            });
        }
        assert!(l2 <= self.l && self.l + self.len as i64 <= l2 + len2 as i64, "refinement must enlarge the window");
        let s = (self.l - l2) as usize;
        Ok(self
            .sys
            .allowed_words(len2)?
            .into_iter()
            .filter(|w| self.words.contains(&w[s..s + self.len]))
            .collect())
    }

    /// Whether `x_{[l, l+len)} = w` lies in the set, for a word over a window containing the set's.
    pub fn contains_word_at(&self, l: i64, w: &[u8]) -> bool {
        if self.len == 0 {
            return !self.words.is_empty();
        }
        let s = (self.l - l) as usize;
        self.words.contains(&w[s..s + self.len])
    }

    pub fn contains_coords(&self, x: &dyn Coords) -> std::result::Result<bool, Need> {
        if self.len == 0 {
            return Ok(!self.words.is_empty());
        }
        Ok(self.words.contains(&x.window(self.l, self.len)?))
    }

    /// Shrinks the window from the left, then from the right, while membership
    /// does not depend on the dropped coordinate.
    pub fn canonical(mut self) -> Result<ClopenSet> {
        if self.words.is_empty() {
            return Ok(ClopenSet::empty(&self.sys));
        }
        if self.len == 0 {
            return Ok(ClopenSet::full(&self.sys));
        }
        loop {
            if self.len == 0 {
                break;
            }
            let all = self.sys.allowed_words(self.len)?;
            if all.len() == self.words.len() {
                return Ok(ClopenSet::full(&self.sys));
            }
            let mut seen: HashMap<&[u8], bool> = HashMap::new();
            let ok = all.iter().all(|w| {
                let inside = self.words.contains(w);
                *seen.entry(&w[1..]).or_insert(inside) == inside
            });
            if !ok {
                break;
            }
            self.words = self.words.iter().map(|w| w[1..].to_vec()).collect();
            self.l += 1;
            self.len -= 1;
        }
        loop {
            if self.len == 0 {
                break;
            }
            let all = self.sys.allowed_words(self.len)?;
            let mut seen: HashMap<&[u8], bool> = HashMap::new();
            let ok = all.iter().all(|w| {
                let inside = self.words.contains(w);
                *seen.entry(&w[..w.len() - 1]).or_insert(inside) == inside
            });
            if !ok {
                break;
            }
            self.words = self.words.iter().map(|w| w[..w.len() - 1].to_vec()).collect();
            self.len -= 1;
        }
        if self.len == 0 {
            return Ok(ClopenSet::full(&self.sys));
        }
        Ok(self)
    }

    fn join_window(&self, other: &ClopenSet) -> (i64, usize) {
        join_windows(&[(self.l, self.len), (other.l, other.len)])
    }

    fn combine(&self, other: &ClopenSet, op: impl Fn(bool, bool) -> bool) -> Result<ClopenSet> {
        self.same_system(other)?;
        let (l, len) = self.join_window(other);
        let a = self.refine(l, len)?;
        let b = other.refine(l, len)?;
        let words = self
            .sys
            .allowed_words(len)?
            .into_iter()
            .filter(|w| op(a.contains(w), b.contains(w)))
            .collect();
        ClopenSet { sys: self.sys.clone(), l, len, words }.canonical()
    }

    pub fn union(&self, other: &ClopenSet) -> Result<ClopenSet> {
        self.combine(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &ClopenSet) -> Result<ClopenSet> {
        self.combine(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &ClopenSet) -> Result<ClopenSet> {
        self.combine(other, |a, b| a && !b)
    }

    pub fn complement(&self) -> Result<ClopenSet> {
        if self.len == 0 {
            return Ok(if self.words.is_empty() { ClopenSet::full(&self.sys) } else { ClopenSet::empty(&self.sys) });
        }
        let words = self.sys.allowed_words(self.len)?.into_iter().filter(|w| !self.words.contains(w)).collect();
        ClopenSet { sys: self.sys.clone(), l: self.l, len: self.len, words }.canonical()
    }

    pub fn equals(&self, other: &ClopenSet) -> Result<bool> {
        self.same_system(other)?;
        if self.is_empty() || other.is_empty() {
            return Ok(self.is_empty() == other.is_empty());
        }
        let (l, len) = self.join_window(other);
        Ok(self.refine(l, len)? == other.refine(l, len)?)
    }

    pub fn is_subset(&self, other: &ClopenSet) -> Result<bool> {
        Ok(self.difference(other)?.is_empty())
    }

    pub fn intersects(&self, other: &ClopenSet) -> Result<bool> {
        self.same_system(other)?;
        self.sys.exists(&[self.constraint(0), other.constraint(0)])
    }

    /// The image `φ^n(C)`.
    pub fn shift(&self, n: i64) -> ClopenSet {
        let mut c = self.clone();
        if c.len > 0 {
            c.l -= n;
        }
        c
    }

    pub fn contains(&self, x: &SymbolicPoint) -> bool {
        self.contains_coords(x).expect("points are total")
    }

    /// Serializable description with words shown over the alphabet.
    pub fn describe(&self) -> ClopenJson {
        ClopenJson {
            window: self.window().map(|(l, r)| [l, r]),
            words: self.words.iter().map(|w| self.sys.show_word(w)).collect(),
        }
    }

    pub fn from_json(sys: &System, j: &ClopenJson) -> Result<ClopenSet> {
        match j.window {
            None => Ok(if j.words.is_empty() { ClopenSet::empty(sys) } else { ClopenSet::full(sys) }),
            Some([l, r]) => {
                if r < l {
                    return Err(Error::Input("clopen window must satisfy l <= r".into()));
                }
                let words = j.words.iter().map(|w| sys.parse_word(w)).collect::<Result<Vec<_>>>()?;
                ClopenSet::from_words(sys, l, (r - l + 1) as usize, words)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClopenJson {
    pub window: Option<[i64; 2]>,
    pub words: Vec<String>,
}

/// Smallest window containing all given `(l, len)` windows; empty windows are ignored.
pub fn join_windows(ws: &[(i64, usize)]) -> (i64, usize) {
    let mut lo = i64::MAX;
    let mut hi = i64::MIN;
    for &(l, len) in ws {
        if len > 0 {
            lo = lo.min(l);
            hi = hi.max(l + len as i64);
        }
    }
    if lo > hi {
        (0, 0)
    } else {
        (lo, (hi - lo) as usize)
    }
}

/// Shrinks a cell table over `[l, l + len)` from the left, then from the right,
/// while neighbouring cells carry equal values. Cells must be sorted by word.
pub fn shrink_table<T: PartialEq + Clone>(mut l: i64, mut len: usize, mut cells: Vec<(Word, T)>) -> (i64, usize, Vec<(Word, T)>) {
    fn try_drop<T: PartialEq + Clone>(cells: &[(Word, T)], left: bool) -> Option<Vec<(Word, T)>> {
        let mut seen: HashMap<&[u8], &T> = HashMap::new();
        for (w, v) in cells {
            let key = if left { &w[1..] } else { &w[..w.len() - 1] };
            if let Some(prev) = seen.insert(key, v) {
                if prev != v {
                    return None;
                }
            }
        }
        let mut out: Vec<(Word, T)> = seen.into_iter().map(|(k, v)| (k.to_vec(), v.clone())).collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        Some(out)
    }
    while len > 0 {
        match try_drop(&cells, true) {
            Some(c) => {
                cells = c;
                l += 1;
                len -= 1;
            }
            None => break,
        }
    }
    while len > 0 {
        match try_drop(&cells, false) {
            Some(c) => {
                cells = c;
                len -= 1;
            }
            None => break,
        }
    }
    if len == 0 {
        l = 0;
    }
    (l, len, cells)
}

/// `φ^n(C)`.
pub fn shift_set(c: &ClopenSet, n: i64) -> ClopenSet {
    c.shift(n)
}

/// The letter partition `[i]_0`.
pub fn generating_partition(sys: &System) -> Vec<ClopenSet> {
    (0..sys.letters() as u8).map(|c| ClopenSet::letter(sys, c)).filter(|c| !c.is_empty()).collect()
}

/// The SFT allowing exactly the length-`n` words of `sys`.
pub fn sft_approximation(sys: &System, n: usize) -> Result<System> {
    if n == 0 {
        return Err(Error::Input("approximation level must be positive".into()));
    }
    Subshift::with_budget(sys.alphabet.clone(), Presentation::AllowedN(n, sys.allowed_words(n)?), sys.word_budget)
}

/// `min{n >= 1 : C ∩ φ^{-n}(C) ≠ ∅}`.
pub fn first_return_time(c: &ClopenSet, budget: usize) -> Result<usize> {
    if c.is_empty() {
        return Err(Error::Input("first return time of the empty set".into()));
    }
    for n in 1..=budget {
        if c.sys.exists(&[c.constraint(0), c.constraint(n as i64)])? {
            return Ok(n);
        }
    }
    Err(Error::Budget(format!("no return to {c:?} within {budget} steps")))
}

/// Smallest return time `n <= bound`, if any.
pub fn return_within(c: &ClopenSet, bound: usize) -> Result<Option<usize>> {
    for n in 1..=bound {
        if c.sys.exists(&[c.constraint(0), c.constraint(n as i64)])? {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReturnMode {
    /// First return `n >= 1` of points of `C`.
    Return,
    /// First entry `n >= 0` of points of `X`.
    Entry,
}

#[derive(Clone, Debug)]
pub struct ReturnCell {
    pub cell: ClopenSet,
    pub time: usize,
}

#[derive(Clone, Debug)]
pub struct ReturnPartition {
    pub mode: ReturnMode,
    pub cells: Vec<ReturnCell>,
}

/// Partitions `C` (or `X` in entry mode) by exact first return (entry) time.
pub fn return_partition(c: &ClopenSet, mode: ReturnMode, budget: usize) -> Result<ReturnPartition> {
    let sys = c.sys.clone();
    if c.is_empty() {
        return Err(Error::Input("return partition of the empty set".into()));
    }
    let (l, len) = (c.l, c.len);
    let mut by_time: BTreeMap<usize, Vec<Word>> = BTreeMap::new();
    let mut active: Vec<Word> = Vec::new();
    for w in sys.allowed_words(len)? {
        let inside = c.contains_word_at(l, &w);
        match mode {
            ReturnMode::Return if inside => active.push(w),
            ReturnMode::Return => {}
            ReturnMode::Entry if inside => by_time.entry(0).or_default().push(w),
            ReturnMode::Entry => active.push(w),
        }
    }
    let d = sys.letters() as u8;
    let mut step = 0;
    while !active.is_empty() {
        step += 1;
        if step > budget {
            return Err(Error::ReturnUnbounded { witness: sys.show_word(&active[0]) });
        }
        let mut next = Vec::new();
        for w in &active {
            for a in 0..d {
                let mut v = w.clone();
                v.push(a);
                if !sys.is_allowed(&v)? {
                    continue;
                }
                if len == 0 || c.words.contains(&v[v.len() - len..]) {
                    by_time.entry(step).or_default().push(v);
                } else {
                    next.push(v);
                }
            }
            if next.len() > sys.word_budget {
                return Err(Error::Budget("return partition exceeds the word budget".into()));
            }
        }
        active = next;
    }
    let mut cells = Vec::new();
    for (time, words) in by_time {
        let wl = words[0].len();
        let cell = ClopenSet { sys: sys.clone(), l, len: wl, words: words.into_iter().collect() }.canonical()?;
        cells.push(ReturnCell { cell, time });
    }
    Ok(ReturnPartition { mode, cells })
}

/// The induced system on `C` with its return-word cells.
#[derive(Clone, Debug)]
pub struct Induced {
    pub system: System,
    /// Cells of `C` indexed by induced symbol, with return times.
    pub cells: Vec<(ClopenSet, usize)>,
    /// Return word of each induced symbol.
    pub return_words: Vec<Word>,
}

impl Induced {
    /// Itinerary of `x ∈ C` under the first return map, symbols `from..to` around `x`.
    pub fn code(&self, x: &SymbolicPoint, from: i64, to: i64) -> Result<Vec<u8>> {
        let cell_of = |p: &SymbolicPoint| self.cells.iter().position(|(c, _)| c.contains(p));
        if cell_of(x).is_none() {
            return Err(Error::Precondition("point is not in the inducing set".into()));
        }
        let maxn = self.cells.iter().map(|c| c.1).max().unwrap() as i64;
        let mut out = BTreeMap::new();
        let mut p = x.clone();
        for i in 0..to.max(0) {
            let j = cell_of(&p).unwrap();
            out.insert(i, j as u8);
            p = p.shift(self.cells[j].1 as i64);
        }
        let mut p = x.clone();
        let mut i = 0;
        while i > from {
            let prev = (1..=maxn).find_map(|n| {
                let q = p.shift(-n);
                cell_of(&q).filter(|&j| self.cells[j].1 as i64 == n).map(|j| (q, j))
            });
            let (q, j) = prev.ok_or_else(|| Error::Precondition("no previous return found".into()))?;
            i -= 1;
            out.insert(i, j as u8);
            p = q;
        }
        Ok(out.range(from..to).map(|(_, &c)| c).collect())
    }
}

/// The first return system of `C`, coded by return words.
pub fn induced_system(c: &ClopenSet, budget: usize) -> Result<Induced> {
    let sys = c.sys.clone();
    let part = return_partition(c, ReturnMode::Return, budget)?;
    let mut cells = Vec::new();
    let mut return_words = Vec::new();
    for rc in &part.cells {
        let n = rc.time;
        let (l, len) = join_windows(&[(rc.cell.l, rc.cell.len), (0, n)]);
        let refined = rc.cell.refine(l, len)?;
        let mut by_word: BTreeMap<Word, Vec<Word>> = BTreeMap::new();
        for w in refined {
            let s = (0 - l) as usize;
            by_word.entry(w[s..s + n].to_vec()).or_default().push(w);
        }
        for (rw, ws) in by_word {
            let cell = ClopenSet { sys: sys.clone(), l, len, words: ws.into_iter().collect() }.canonical()?;
            cells.push((cell, n));
            return_words.push(rw);
        }
    }
    let names: Vec<String> = return_words.iter().map(|w| sys.show_word(w)).collect();
    let engine = Engine::Coded { base: sys.clone(), cells: cells.clone() };
    let id = engine_id(&names, &engine);
    let system = Arc::new(Subshift {
        alphabet: names,
        presentation: Presentation::Induced,
        engine,
        id,
        word_budget: sys.word_budget,
        levels: Mutex::new(HashMap::new()),
    });
    Ok(Induced { system, cells, return_words })
}

/// Words `w` of length at most `max_period` whose periodic point `w^∞` lies in the subshift,
/// one representative per primitive cyclic class.
pub fn periodic_points(sys: &Subshift, max_period: usize) -> Result<Vec<Word>> {
    let mut out = Vec::new();
    let mut seen: HashSet<Word> = HashSet::new();
    let horizon = match &sys.engine {
        Engine::Graph { k, .. } => *k,
        _ => 0,
    };
    for p in 1..=max_period {
        for w in sys.allowed_words(p)? {
            if primitive_root(&w).len() != p {
                continue;
            }
            let rot_min = (0..p).map(|i| [&w[i..], &w[..i]].concat()).min().unwrap();
            if !seen.insert(rot_min.clone()) || rot_min != w {
                continue;
            }
            let reps = (horizon / p + 2).max(2 + 32 / p);
            let long: Word = w.iter().cycle().take(p * reps).copied().collect();
            let ok = match &sys.engine {
                Engine::Graph { .. } => sys.is_allowed(&long)?,
                _ => sys.is_allowed(&long[..long.len().min(32)])?,
            };
            if ok {
                out.push(w);
            }
        }
    }
    Ok(out)
}

enum PointKind {
    Periodic { left: Word, center: Word, right: Word },
    Fixed { rules: Vec<Word>, power: u32, cache: Mutex<(Word, Word)> },
    Recode { base: SymbolicPoint, cells: Arc<Vec<(Word, Word)>> },
    Reversed { base: SymbolicPoint },
}

/// A point of a subshift given by a total coordinate oracle.
#[derive(Clone)]
pub struct SymbolicPoint {
    kind: Arc<PointKind>,
    offset: i64,
}

impl fmt::Debug for SymbolicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w: Vec<u8> = (-4..=8).map(|i| self.coord(i)).collect();
        write!(f, "Point(…{:?}[x_0 = {}]…)", w, self.coord(0))
    }
}

impl SymbolicPoint {
    /// `…LLL·C RRR…` with the center word starting at coordinate 0.
    pub fn eventually_periodic(left: Word, center: Word, right: Word) -> Result<SymbolicPoint> {
        if left.is_empty() || right.is_empty() {
            return Err(Error::Input("periodic parts must be non-empty".into()));
        }
        Ok(SymbolicPoint { kind: Arc::new(PointKind::Periodic { left, center, right }), offset: 0 })
    }

    /// The periodic point `…www·www…`.
    pub fn periodic(w: Word) -> Result<SymbolicPoint> {
        SymbolicPoint::eventually_periodic(w.clone(), Vec::new(), w)
    }

    /// The fixed point of `σ^power` grown from the seed `left·right`.
    pub fn substitution_fixed_point(sys: &System, seed: (u8, u8), power: u32) -> Result<SymbolicPoint> {
        let rules = sys
            .substitution_rules()
            .ok_or_else(|| Error::Input("fixed points need a substitution system".into()))?
            .to_vec();
        let mut l = vec![seed.0];
        let mut r = vec![seed.1];
        for _ in 0..power.max(1) {
            l = substitute(&rules, &l);
            r = substitute(&rules, &r);
        }
        if r[0] != seed.1 || *l.last().unwrap() != seed.0 || !sys.is_allowed(&[seed.0, seed.1])? {
            return Err(Error::Input("seed does not generate a fixed point".into()));
        }
        Ok(SymbolicPoint {
            kind: Arc::new(PointKind::Fixed { rules, power: power.max(1), cache: Mutex::new((vec![seed.1], vec![seed.0])) }),
            offset: 0,
        })
    }

    /// The Fibonacci fixed point `…a·abaab…` with `x_0 = a`, `x_1 = b`.
    pub fn fibonacci_fixed_point(sys: &System) -> SymbolicPoint {
        SymbolicPoint::substitution_fixed_point(sys, (1, 0), 2).unwrap()
    }

    /// Re-codes a point at a segment start by replacing each source word `u_j` with `v_j`.
    pub fn recode(base: SymbolicPoint, cells: Arc<Vec<(Word, Word)>>) -> SymbolicPoint {
        SymbolicPoint { kind: Arc::new(PointKind::Recode { base, cells }), offset: 0 }
    }

    /// The point `(x_{-i})_i`.
    pub fn reversed(&self) -> SymbolicPoint {
        SymbolicPoint { kind: Arc::new(PointKind::Reversed { base: self.clone() }), offset: 0 }
    }

    /// `φ^k x`.
    pub fn shift(&self, k: i64) -> SymbolicPoint {
        SymbolicPoint { kind: self.kind.clone(), offset: self.offset + k }
    }

    pub fn coord(&self, i: i64) -> u8 {
        self.base_coord(i + self.offset)
    }

    fn base_coord(&self, i: i64) -> u8 {
        match &*self.kind {
            PointKind::Periodic { left, center, right } => {
                let c = center.len() as i64;
                if i >= 0 && i < c {
                    center[i as usize]
                } else if i >= c {
                    right[((i - c) as usize) % right.len()]
                } else {
                    let back = ((-i - 1) as usize) % left.len();
                    left[left.len() - 1 - back]
                }
            }
            PointKind::Fixed { rules, power, cache, .. } => {
                let mut g = cache.lock().unwrap();
                let need = if i >= 0 { i as usize + 1 } else { (-i) as usize };
                loop {
                    let have = if i >= 0 { g.0.len() } else { g.1.len() };
                    if have >= need {
                        break;
                    }
                    for _ in 0..*power {
                        if i >= 0 {
                            g.0 = substitute(rules, &g.0);
                        } else {
                            g.1 = substitute(rules, &g.1);
                        }
                    }
                }
                if i >= 0 {
                    g.0[i as usize]
                } else {
                    let l = &g.1;
                    l[l.len() - (-i) as usize]
                }
            }
            PointKind::Recode { base, cells } => recode_coord(base, cells, i),
            PointKind::Reversed { base } => base.coord(-i),
        }
    }

    pub fn window(&self, l: i64, len: usize) -> Word {
        (0..len as i64).map(|i| self.coord(l + i)).collect()
    }

    /// Coordinate-wise equality. Exact for eventually periodic points, otherwise
    /// checked on `[-256, 256]`.
    pub fn same(&self, other: &SymbolicPoint) -> bool {
        let radius = match (&*self.kind, &*other.kind) {
            (
                PointKind::Periodic { left: l1, center: c1, right: r1 },
                PointKind::Periodic { left: l2, center: c2, right: r2 },
            ) => {
                let lcm = |a: usize, b: usize| a / gcd(a, b) * b;
                let reach = (self.offset.abs() + c1.len() as i64).max(other.offset.abs() + c2.len() as i64);
                reach + lcm(r1.len(), r2.len()) as i64 + lcm(l1.len(), l2.len()) as i64
            }
            _ => 256,
        };
        (-radius..=radius).all(|i| self.coord(i) == other.coord(i))
    }

    /// Checks that all windows of length `n` inside `[-radius, radius]` are allowed.
    pub fn check_in(&self, sys: &Subshift, n: usize, radius: i64) -> Result<bool> {
        for i in -radius..=radius - n as i64 + 1 {
            if !sys.is_allowed(&self.window(i, n))? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl Coords for SymbolicPoint {
    fn at(&self, i: i64) -> std::result::Result<u8, Need> {
        Ok(self.coord(i))
    }
}

/// Reads the segment starting at source position `p` of `base`, returning its cell.
pub fn segment_at(base: &dyn Coords, cells: &[(Word, Word)], p: i64) -> std::result::Result<Option<usize>, Need> {
    for (j, (u, _)) in cells.iter().enumerate() {
        let mut ok = true;
        for (i, &c) in u.iter().enumerate() {
            if base.at(p + i as i64)? != c {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(Some(j));
        }
    }
    Ok(None)
}

/// The segment start preceding source position `p`, with its cell.
pub fn previous_segment(base: &dyn Coords, cells: &[(Word, Word)], p: i64) -> std::result::Result<Option<(i64, usize)>, Need> {
    for (j, (u, _)) in cells.iter().enumerate() {
        let q = p - u.len() as i64;
        if segment_at(base, cells, q)? == Some(j) {
            return Ok(Some((q, j)));
        }
    }
    Ok(None)
}

/// Coordinate of the recoded point; the source point must sit at a segment start.
pub fn recode_at(base: &dyn Coords, cells: &[(Word, Word)], i: i64) -> std::result::Result<u8, Need> {
    let mut src = 0i64;
    let mut tgt = 0i64;
    if i >= 0 {
        loop {
            let j = segment_at(base, cells, src)?.expect("recoded point leaves the transversal");
            let v = &cells[j].1;
            if i < tgt + v.len() as i64 {
                return Ok(v[(i - tgt) as usize]);
            }
            src += cells[j].0.len() as i64;
            tgt += v.len() as i64;
        }
    } else {
        loop {
            let (q, j) = previous_segment(base, cells, src)?.expect("recoded point leaves the transversal");
            let v = &cells[j].1;
            tgt -= v.len() as i64;
            src = q;
            if i >= tgt {
                return Ok(v[(i - tgt) as usize]);
            }
        }
    }
}

fn recode_coord(base: &SymbolicPoint, cells: &[(Word, Word)], i: i64) -> u8 {
    recode_at(base, cells, i).expect("points are total")
}

/// Subshift definition file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub alphabet: Vec<String>,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forbidden: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowed_n: Option<AllowedN>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rules: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllowedN {
    pub n: usize,
    pub words: Vec<String>,
}

impl SystemFile {
    pub fn build(&self) -> Result<System> {
        self.build_with_budget(DEFAULT_WORD_BUDGET)
    }

    pub fn build_with_budget(&self, budget: usize) -> Result<System> {
        let probe = Subshift::with_budget(self.alphabet.clone(), Presentation::Full, budget)?;
        let parse = |s: &str| probe.parse_word(s);
        let pres = match self.kind.as_str() {
            "full" => Presentation::Full,
            "periodic" => Presentation::Periodic(parse(
                self.word.as_deref().ok_or_else(|| Error::Input("periodic system needs \"word\"".into()))?,
            )?),
            "sft" => match (&self.forbidden, &self.allowed_n) {
                (Some(f), None) => Presentation::Forbidden(f.iter().map(|w| parse(w)).collect::<Result<_>>()?),
                (None, Some(a)) => Presentation::AllowedN(a.n, a.words.iter().map(|w| parse(w)).collect::<Result<_>>()?),
                _ => return Err(Error::Input("sft needs exactly one of \"forbidden\" or \"allowed_n\"".into())),
            },
            "substitution" => {
                let rules = self.rules.as_ref().ok_or_else(|| Error::Input("substitution needs \"rules\"".into()))?;
                let mut out = Vec::new();
                for name in &self.alphabet {
                    let r = rules.get(name).ok_or_else(|| Error::Input(format!("no rule for symbol {name:?}")))?;
                    out.push(parse(r)?);
                }
                if rules.len() != self.alphabet.len() {
                    return Err(Error::Input("rules mention symbols outside the alphabet".into()));
                }
                Presentation::Substitution(out)
            }
            k => return Err(Error::Input(format!("unknown system kind {k:?}"))),
        };
        Subshift::with_budget(self.alphabet.clone(), pres, budget)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(sys: &System, n: usize) -> Vec<String> {
        sys.allowed_words(n).unwrap().iter().map(|w| sys.show_word(w)).collect()
    }

    #[test]
    fn languages() {
        assert_eq!(words(&Subshift::full(&["0", "1"]), 2), ["00", "01", "10", "11"]);
        assert_eq!(words(&Subshift::fibonacci(), 2), ["aa", "ab", "ba"]);
        assert_eq!(words(&Subshift::golden_mean(), 3), ["000", "001", "010", "100", "101"]);
        let fib = Subshift::fibonacci();
        for n in 1..12 {
            assert_eq!(fib.count_words(n).unwrap(), n + 1);
        }
        let per = Subshift::new(vec!["0".into(), "1".into()], Presentation::Periodic(vec![0, 1])).unwrap();
        assert_eq!(words(&per, 3), ["010", "101"]);
    }

    #[test]
    fn clopen_examples() {
        let fib = Subshift::fibonacci();
        let a0 = ClopenSet::letter(&fib, 0);
        let b1 = ClopenSet::letter(&fib, 1).shift(-1);
        let ab = a0.intersection(&b1).unwrap();
        assert!(ab.equals(&ClopenSet::cylinder(&fib, 0, &[0, 1]).unwrap()).unwrap());
        assert_eq!(ab.describe().words, ["b"]);
        let gm = Subshift::golden_mean();
        let one = ClopenSet::letter(&gm, 1);
        assert!(one.intersection(&one.shift(-1)).unwrap().is_empty());
        assert!(a0.union(&a0.complement().unwrap()).unwrap().is_full());
        let b = ClopenSet::letter(&fib, 1);
        assert_eq!(b.shift(1).window(), Some((-1, -1)));
    }

    #[test]
    fn return_times() {
        let fib = Subshift::fibonacci();
        assert_eq!(first_return_time(&ClopenSet::letter(&fib, 1), 64).unwrap(), 2);
        let gm = Subshift::golden_mean();
        assert_eq!(first_return_time(&ClopenSet::letter(&gm, 1), 64).unwrap(), 2);
        let full = Subshift::full(&["0", "1"]);
        assert_eq!(first_return_time(&ClopenSet::full(&full), 64).unwrap(), 1);
        let p = return_partition(&ClopenSet::letter(&fib, 0), ReturnMode::Return, 64).unwrap();
        assert_eq!(p.cells.iter().map(|c| c.time).collect::<Vec<_>>(), [1, 2]);
        let err = return_partition(&ClopenSet::letter(&full, 1), ReturnMode::Entry, 16).unwrap_err();
        assert_eq!(err, Error::ReturnUnbounded { witness: "0".repeat(17) });
        let p = return_partition(&ClopenSet::full(&full), ReturnMode::Return, 8).unwrap();
        assert_eq!(p.cells.len(), 1);
        assert!(p.cells[0].cell.is_full());
    }

    #[test]
    fn induced_fibonacci() {
        let fib = Subshift::fibonacci();
        let ind = induced_system(&ClopenSet::letter(&fib, 0), 64).unwrap();
        assert_eq!(ind.system.alphabet(), ["a", "ab"]);
        assert!(induced_system(&ClopenSet::letter(&Subshift::full(&["0", "1"]), 1), 8).is_err());
    }

    #[test]
    fn points() {
        let fib = Subshift::fibonacci();
        let x = SymbolicPoint::fibonacci_fixed_point(&fib);
        assert_eq!(fib.show_word(&x.window(0, 5)), "abaab");
        assert!(!ClopenSet::letter(&fib, 1).contains(&x));
        assert!(ClopenSet::letter(&fib, 1).shift(-1).contains(&x));
        assert!(x.check_in(&fib, 6, 60).unwrap());
        let p = SymbolicPoint::periodic(vec![0, 1]).unwrap();
        assert!(p.shift(2).same(&p));
        assert!(!p.shift(1).same(&p));
    }

    #[test]
    fn approximations() {
        let fib = Subshift::fibonacci();
        let x2 = sft_approximation(&fib, 2).unwrap();
        assert_eq!(x2.id(), Subshift::new(vec!["a".into(), "b".into()], Presentation::Forbidden(vec![vec![1, 1]])).unwrap().id());
        let full = Subshift::full(&["0", "1"]);
        assert_eq!(sft_approximation(&full, 3).unwrap().allowed_words(5).unwrap(), full.allowed_words(5).unwrap());
    }

    #[test]
    fn system_file() {
        let f: SystemFile = serde_json::from_str(r#"{"alphabet":["a","b"],"kind":"substitution","rules":{"a":"ab","b":"a"}}"#).unwrap();
        assert_eq!(f.build().unwrap().id(), Subshift::fibonacci().id());
        assert!(serde_json::from_str::<SystemFile>(r#"{"alphabet":["a"],"kind":"full","extra":1}"#).is_err());
        let bad: SystemFile = serde_json::from_str(r#"{"alphabet":["a","b"],"kind":"substitution","rules":{"a":"a","b":"b"}}"#).unwrap();
        assert!(bad.build().is_err());
    }
}
