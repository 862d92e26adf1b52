//! Acceptance criteria, one line each. Runs without the libtest harness so
//! the report is printed on every run; exits nonzero if any criterion fails.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use flowgroups::constructions::{
    all_pass, double_commutator_check, finite_generating_set, first_return_decomposition, generation_witness,
    move_domain, GeneratorSet,
};
use flowgroups::dyadic::{eval_word, thompson_generators, FLetter};
use flowgroups::equivalence::{direct_limit_witness, restrict, symbol_expansion, RestrictionMap};
use flowgroups::region::Region;
use flowgroups::suspension::{chart_embed, lift_central_extension, metric, Chart};
use flowgroups::symbolic::{first_return_time, periodic_points, sft_approximation, System};
use flowgroups::{dy, ClopenSet, Dyadic, FlowElement, Interval, PLMap, Subshift, SuspensionPoint, SymbolicPoint};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn systems() -> Vec<(&'static str, System)> {
    vec![
        ("full", Subshift::full(&["0", "1"])),
        ("fibonacci", Subshift::fibonacci()),
        ("golden-mean", Subshift::golden_mean()),
    ]
}

fn rng(criterion: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(0x5eed);
    r.set_stream(criterion);
    r
}

fn ensure(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn e<T>(r: flowgroups::Result<T>) -> Result<T, String> {
    r.map_err(|err| err.to_string())
}

fn random_word(gs: &GeneratorSet, rng: &mut ChaCha8Rng, max_len: usize) -> Vec<(usize, bool)> {
    (0..rng.gen_range(0..=max_len)).map(|_| (rng.gen_range(0..gs.len()), rng.gen_bool(0.5))).collect()
}

fn eval(gs: &GeneratorSet, sys: &System, w: &[(usize, bool)]) -> Result<FlowElement, String> {
    let mut acc = FlowElement::identity(sys);
    for &(i, inv) in w {
        let g = &gs.elements[i];
        acc = e(acc.compose(&if inv { e(g.invert())? } else { g.clone() }))?;
    }
    Ok(acc)
}

fn random_element(gs: &GeneratorSet, sys: &System, rng: &mut ChaCha8Rng, max_len: usize) -> Result<FlowElement, String> {
    let w = random_word(gs, rng, max_len);
    eval(gs, sys, &w)
}

fn base_points(sys: &System) -> Vec<SymbolicPoint> {
    if sys.is_substitution() {
        let mut out = Vec::new();
        for a in 0..sys.letters() as u8 {
            for b in 0..sys.letters() as u8 {
                if let Some(p) = (1..=4).find_map(|k| SymbolicPoint::substitution_fixed_point(sys, (a, b), k).ok()) {
                    out.extend((-6..6).map(|k| p.shift(k)));
                }
            }
        }
        out
    } else {
        let mut out = Vec::new();
        for w in periodic_points(sys, 6).unwrap() {
            let p = SymbolicPoint::periodic(w.clone()).unwrap();
            out.extend((0..w.len() as i64).map(|k| p.shift(k)));
        }
        out
    }
}

fn random_point(pts: &[SymbolicPoint], rng: &mut ChaCha8Rng) -> SuspensionPoint {
    SuspensionPoint::new(pts.choose(rng).unwrap().clone(), Dyadic::new(rng.gen_range(0..256), 8))
}

fn random_clopen(sys: &System, rng: &mut ChaCha8Rng) -> ClopenSet {
    loop {
        let len = rng.gen_range(1..=3);
        let words: Vec<_> = sys.allowed_words(len).unwrap().into_iter().filter(|_| rng.gen_bool(0.5)).collect();
        if !words.is_empty() {
            return ClopenSet::from_words(sys, rng.gen_range(-2..=2), len, words).unwrap();
        }
    }
}

/// An interval with endpoints in `2^-5 Z`, left end in `[lo, lo + span)`, length at most `max_32 / 32`.
fn random_interval(rng: &mut ChaCha8Rng, lo: i64, span: i64, max_32: i64) -> Interval {
    let a = rng.gen_range(lo * 32..(lo + span) * 32) as i128;
    let len = rng.gen_range(1..=max_32) as i128;
    Interval::new(Dyadic::new(a, 5), Dyadic::new(a + len, 5)).unwrap()
}

fn random_f(j: &Interval, rng: &mut ChaCha8Rng, max_len: usize) -> PLMap {
    let letters = [FLetter::A, FLetter::AInv, FLetter::B, FLetter::BInv];
    let w: Vec<FLetter> = (0..rng.gen_range(1..=max_len)).map(|_| *letters.choose(rng).unwrap()).collect();
    eval_word(j, &w)
}

fn group_axioms() -> Outcome {
    let mut r = rng(1);
    let mut n = 0;
    for (name, sys) in systems() {
        let gs = e(finite_generating_set(&sys))?;
        let id = FlowElement::identity(&sys);
        for _ in 0..1000 {
            let g = random_element(&gs, &sys, &mut r, 8)?;
            let h = random_element(&gs, &sys, &mut r, 8)?;
            let k = random_element(&gs, &sys, &mut r, 8)?;
            let gi = e(g.invert())?;
            let assoc = e(e(e(g.compose(&h))?.compose(&k))?.equals(&e(g.compose(&e(h.compose(&k))?))?))?;
            let inv = e(g.compose(&gi))?.is_identity() && e(gi.compose(&g))?.is_identity();
            let unit = e(g.compose(&id))?.equals(&g).unwrap() && e(id.compose(&g))?.equals(&g).unwrap();
            ensure(assoc && inv && unit, || format!("{name}: law fails for {}", g.canonical_hash()))?;
            n += 1;
        }
    }
    Ok(format!("{n} words"))
}

fn evaluation() -> Outcome {
    let mut r = rng(2);
    for (name, sys) in systems() {
        let gs = e(finite_generating_set(&sys))?;
        let pts = base_points(&sys);
        for _ in 0..200 {
            let g = random_element(&gs, &sys, &mut r, 8)?;
            let h = random_element(&gs, &sys, &mut r, 8)?;
            let gh = e(g.compose(&h))?;
            for _ in 0..20 {
                let y = random_point(&pts, &mut r);
                ensure(gh.evaluate(&y).same(&g.evaluate(&h.evaluate(&y))), || {
                    format!("{name}: composite disagrees at time {}", y.time)
                })?;
            }
        }
    }
    Ok("3 systems x 200 pairs x 20 points".into())
}

fn gluing_cocycle() -> Outcome {
    let mut r = rng(3);
    for (name, sys) in systems() {
        let gs = e(finite_generating_set(&sys))?;
        let pts = base_points(&sys);
        for _ in 0..200 {
            let g = random_element(&gs, &sys, &mut r, 8)?;
            let h = random_element(&gs, &sys, &mut r, 8)?;
            let gh = e(g.compose(&h))?;
            for el in [&g, &h, &gh] {
                ensure(el.check_gluing().is_ok(), || format!("{name}: gluing fails"))?;
            }
            let (tg, th, tgh) = (g.displacement(), h.displacement(), gh.displacement());
            for _ in 0..4 {
                let x = pts.choose(&mut r).unwrap();
                let hl = h.lift(x, Dyadic::ZERO, Dyadic::ONE).unwrap();
                let gl = g.lift(x, hl.eval(Dyadic::ZERO), hl.eval(Dyadic::ONE)).unwrap();
                let ghl = gh.lift(x, Dyadic::ZERO, Dyadic::ONE).unwrap();
                ensure(e(gl.compose(&hl))? == ghl, || format!("{name}: lifted cocycle fails on a cell"))?;
                let mut ts: BTreeSet<Dyadic> = ghl.breakpoints().iter().chain(hl.breakpoints()).copied().collect();
                ts.extend(gl.breakpoints().iter().map(|&s| hl.eval_inverse(s)));
                for t in ts {
                    let y = SuspensionPoint::new(x.clone(), t);
                    let rhs = tg.value(&h.evaluate(&y)) + th.value(&y);
                    ensure(tgh.value(&y) == rhs, || format!("{name}: cocycle fails at time {t}"))?;
                }
            }
        }
    }
    Ok("3 systems x 200 pairs".into())
}

/// Least `n` with an allowed word of length `len + n <= 16` in `C` at its start and `n` steps later.
fn brute_return(sys: &System, c: &ClopenSet) -> Option<usize> {
    let (l, len) = (c.left(), c.window_len());
    (1..=16 - len).find(|&n| {
        sys.allowed_words(len + n).unwrap().iter().any(|w| c.contains_word_at(l, w) && c.contains_word_at(l, &w[n..]))
    })
}

fn return_times() -> Outcome {
    let mut r = rng(4);
    for (name, sys) in systems() {
        for _ in 0..50 {
            let c = random_clopen(&sys, &mut r);
            let bound = 16 - c.window_len();
            let got = first_return_time(&c, bound).ok();
            let want = brute_return(&sys, &c);
            ensure(got == want, || format!("{name}: {:?} gives {got:?}, brute force {want:?}", c.describe()))?;
        }
    }
    let fib = Subshift::fibonacci();
    let gm = Subshift::golden_mean();
    let b = e(first_return_time(&ClopenSet::letter(&fib, 1), 64))?;
    let one = e(first_return_time(&ClopenSet::letter(&gm, 1), 64))?;
    ensure(b == 2 && one == 2, || format!("fibonacci [b] returns at {b}, golden-mean [1] at {one}"))?;
    Ok("150 clopen sets, [b] and [1] return at 2".into())
}

fn double_commutator() -> Outcome {
    let mut r = rng(5);
    let mut trials = 0;
    for (sys, sym) in [(Subshift::full(&["0", "1"]), 0u8), (Subshift::fibonacci(), 1)] {
        let u = e(Chart::new(&ClopenSet::letter(&sys, sym), Interval::new(Dyadic::ZERO, dy(1, 2)).unwrap()))?;
        let (a, b) = thompson_generators(&u.interval);
        let g = FlowElement::translation(&sys, dy(1, 2));
        for _ in 0..500 {
            let h1 = e(chart_embed(&u, &random_f(&u.interval, &mut r, 6)))?;
            let h2 = e(chart_embed(&u, &random_f(&u.interval, &mut r, 6)))?;
            let (h1, h2) = if r.gen_bool(0.1) { (e(chart_embed(&u, &a))?, e(chart_embed(&u, &b))?) } else { (h1, h2) };
            let d = e(double_commutator_check(&g, &u, &h1, &h2))?;
            ensure(d.holds, || format!("identity fails: {} vs {}", d.lhs_hash, d.rhs_hash))?;
            trials += 1;
        }
    }
    Ok(format!("{trials} trials"))
}

fn away_from(sys: &System, closed: &Region, rng: &mut ChaCha8Rng) -> Result<FlowElement, String> {
    loop {
        let c = random_clopen(sys, rng);
        let j = random_interval(rng, -1, 3, 16);
        let Ok(ch) = Chart::new(&c, j) else { continue };
        let el = e(chart_embed(&ch, &random_f(&j, rng, 4)))?;
        if e(e(el.support())?.closure())?.is_disjoint(closed).unwrap() && !el.is_identity() {
            return Ok(el);
        }
    }
}

fn first_return() -> Outcome {
    let mut r = rng(6);
    let sys = Subshift::fibonacci();
    for _ in 0..20 {
        let c = random_clopen(&sys, &mut r);
        let j = random_interval(&mut r, -1, 3, 15);
        let closed = e(Region::closed_box(&c, &j))?;
        let mut p = Vec::new();
        for _ in 0..2 {
            let mut g = FlowElement::identity(&sys);
            for _ in 0..r.gen_range(1..=3) {
                g = e(g.compose(&away_from(&sys, &closed, &mut r)?))?;
            }
            p.push(g);
        }
        let fr = e(first_return_decomposition(&c, &j, &p))?;
        ensure(all_pass(&fr.checks), || format!("{:?} x {j}: {:?}", c.describe(), fr.checks))?;
        for f in &fr.factorizations {
            ensure(all_pass(&f.checks), || format!("{:?} x {j}: factorization {:?}", c.describe(), f.checks))?;
        }
    }
    Ok("20 bases on fibonacci".into())
}

fn moving_intervals() -> Outcome {
    let mut r = rng(7);
    let mut max_letters = 0;
    for k in 0..50 {
        let (_, sys) = systems().swap_remove(k % 3);
        let c = random_clopen(&sys, &mut r);
        let j = random_interval(&mut r, -2, 4, 31);
        let i = random_interval(&mut r, -2, 4, 31);
        let m = e(move_domain(&c, &j, &i))?;
        let image = e(e(Region::open_box(&c, &j))?.image(&m.k))?;
        let exact = image.equals(&e(Region::open_box(&c, &i))?).unwrap();
        let letters = m.word.iter().all(|l| ["a0", "b0", "a1", "b1"].contains(&l.name.as_str()));
        ensure(exact && letters && all_pass(&m.checks), || format!("{j} -> {i}: {:?}", m.checks))?;
        max_letters = max_letters.max(m.word.len());
    }
    Ok(format!("50 cases, longest word {max_letters}"))
}

fn generation() -> Outcome {
    let mut r = rng(8);
    let sys = Subshift::fibonacci();
    let gs = e(finite_generating_set(&sys))?;
    let x = ClopenSet::full(&sys);
    let mut words = 0;
    for _ in 0..10 {
        let i = random_interval(&mut r, -3, 6, 31);
        let ch = e(Chart::new(&x, i))?;
        let (a, b) = thompson_generators(&i);
        for f in [a, b] {
            let w = e(generation_witness(&gs, &ch, &f, 1 << 24))?;
            ensure(w.word.is_some() && all_pass(&w.checks), || format!("{i}: {:?} {:?}", w.blocker, w.checks))?;
            words += 1;
        }
    }
    Ok(format!("{words} generators over 10 intervals"))
}

/// Factors of the Fibonacci word up to length `n`, from iterating the substitution.
fn fibonacci_factors(n: usize) -> BTreeSet<String> {
    let mut s = String::from("a");
    while s.len() < 400 {
        s = s.chars().map(|c| if c == 'a' { "ab" } else { "a" }).collect();
    }
    let mut out = BTreeSet::new();
    for len in 1..=n {
        for i in 0..=s.len() - len {
            out.insert(s[i..i + len].to_string());
        }
    }
    out
}

/// Least `m` such that `w` is not a word of the level-`m` approximation.
fn kill_level(w: &str, language: &BTreeSet<String>) -> usize {
    (1..=w.len()).find(|&m| (0..=w.len() - m).any(|i| !language.contains(&w[i..i + m]))).unwrap()
}

fn restriction_tower() -> Outcome {
    let mut r = rng(9);
    let x = Subshift::fibonacci();
    let tower: Vec<System> = (1..=3).map(|n| sft_approximation(&x, n).unwrap()).chain([x.clone()]).collect();
    let maps: Vec<RestrictionMap> = (0..3).map(|k| RestrictionMap::new(&tower[k], &tower[k + 1], 6).unwrap()).collect();
    let direct = e(RestrictionMap::new(&tower[0], &x, 6))?;
    let gs1 = e(finite_generating_set(&tower[0]))?;
    for _ in 0..30 {
        let g = random_element(&gs1, &tower[0], &mut r, 6)?;
        let h = random_element(&gs1, &tower[0], &mut r, 6)?;
        let (mut g_k, mut h_k) = (g.clone(), h.clone());
        for m in &maps {
            let gh = e(restrict(&e(g_k.compose(&h_k))?, m))?;
            let (g2, h2) = (e(restrict(&g_k, m))?, e(restrict(&h_k, m))?);
            ensure(gh.equals(&e(g2.compose(&h2))?).unwrap(), || "restriction is not a homomorphism".into())?;
            g_k = g2;
            h_k = h2;
        }
        let d = e(restrict(&g, &direct))?;
        ensure(d.equals(&g_k).unwrap(), || "restrictions do not compose".into())?;
    }
    let language = fibonacci_factors(8);
    let bad: Vec<String> = (2..=6)
        .flat_map(|n| {
            (0..1u32 << n).map(move |bits| (0..n).map(|i| if bits >> i & 1 == 1 { 'b' } else { 'a' }).collect::<String>())
        })
        .filter(|w| !language.contains(w))
        .collect();
    let x1 = &tower[0];
    let j = Interval::new(Dyadic::ZERO, dy(1, 2)).unwrap();
    let (a, _) = thompson_generators(&j);
    let mut levels = Vec::new();
    for _ in 0..10 {
        let w = bad.choose(&mut r).unwrap();
        let c = e(ClopenSet::cylinder(x1, 0, &e(x1.parse_word(w))?))?;
        let g = e(chart_embed(&e(Chart::new(&c, j))?, &a))?;
        let got = e(direct_limit_witness(&x, &g, 8))?;
        let want = kill_level(w, &language);
        ensure(got == want, || format!("[{w}] trivializes at {got}, oracle {want}"))?;
        levels.push(got);
    }
    Ok(format!("30 pairs through 3 levels, kernel levels {levels:?}"))
}

fn ps_conjugation() -> Outcome {
    let mut r = rng(10);
    let sys = Subshift::full(&["0", "1"]);
    let (_, fe) = e(symbol_expansion(&sys, 0))?;
    let gs = e(finite_generating_set(&sys))?;
    let pts = base_points(&sys);
    for k in 0..100 {
        let g = random_element(&gs, &sys, &mut r, 5)?;
        let h = random_element(&gs, &sys, &mut r, 5)?;
        let cg = e(fe.conjugate(&g))?;
        let hom = e(fe.conjugate(&e(g.compose(&h))?))?.equals(&e(cg.compose(&e(fe.conjugate(&h))?))?).unwrap();
        ensure(hom, || "conjugation is not homomorphic".into())?;
        if k < 50 {
            let y = random_point(&pts, &mut r);
            ensure(cg.evaluate(&fe.q(&y)).same(&fe.q(&g.evaluate(&y))), || format!("q is not equivariant at time {}", y.time))?;
        }
    }
    Ok("100 pairs, 50 points".into())
}

fn central_extension() -> Outcome {
    for (name, sys) in systems() {
        let lift = |w: &str| e(lift_central_extension(&sys, w));
        let g = lift("g")?;
        ensure(g.equals(&FlowElement::translation(&sys, Dyadic::ONE)).unwrap(), || format!("{name}: g is not the time-1 map"))?;
        for w in ["a", "b", "c"] {
            let el = lift(w)?;
            ensure(e(el.compose(&g))?.equals(&e(g.compose(&el))?).unwrap(), || format!("{name}: g does not commute with {w}"))?;
        }
        let p = lift("Ba")?;
        ensure(e(p.commutator(&lift("abA")?))?.is_identity(), || format!("{name}: first F relation fails"))?;
        ensure(e(p.commutator(&lift("aabAA")?))?.is_identity(), || format!("{name}: second F relation fails"))?;
        ensure(lift("ccc")?.equals(&lift("gg")?).unwrap(), || format!("{name}: c^3 = g^2 fails"))?;
    }
    Ok("3 systems".into())
}

fn metric_axioms() -> Outcome {
    let mut r = rng(12);
    for (name, sys) in systems() {
        let gs = e(finite_generating_set(&sys))?;
        let id = FlowElement::identity(&sys);
        let half = FlowElement::translation(&sys, dy(1, 2));
        let d = e(metric(&half, &id))?;
        ensure(d == Dyadic::ONE, || format!("{name}: d(flow 1/2, id) = {d:?}"))?;
        for _ in 0..200 {
            let g = random_element(&gs, &sys, &mut r, 6)?;
            let h = if r.gen_bool(0.2) { e(g.compose(&id))? } else { random_element(&gs, &sys, &mut r, 6)? };
            let k = random_element(&gs, &sys, &mut r, 6)?;
            let (gh, hg) = (e(metric(&g, &h))?, e(metric(&h, &g))?);
            ensure(gh == hg, || format!("{name}: asymmetric"))?;
            ensure(e(metric(&g, &k))? <= gh + e(metric(&h, &k))?, || format!("{name}: triangle inequality fails"))?;
            ensure(gh.is_zero() == g.equals(&h).unwrap(), || format!("{name}: zero distance disagrees with equality"))?;
        }
    }
    Ok("3 systems x 200 triples, d(flow 1/2, id) = 1".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("group axioms", group_axioms),
        ("evaluation coherence", evaluation),
        ("gluing and cocycle", gluing_cocycle),
        ("return-time oracle", return_times),
        ("double commutator", double_commutator),
        ("first return decomposition", first_return),
        ("moving intervals", moving_intervals),
        ("finite generation", generation),
        ("restriction tower", restriction_tower),
        ("symbol expansion conjugation", ps_conjugation),
        ("central extension relations", central_extension),
        ("metric", metric_axioms),
    ];
    let results: Vec<(Outcome, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria
            .iter()
            .map(|&(_, f)| {
                s.spawn(move || {
                    let t = Instant::now();
                    let out = std::panic::catch_unwind(f).unwrap_or_else(|p| {
                        Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
                    });
                    (out, t.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut failed = 0;
    for (k, ((name, _), (out, secs))) in criteria.iter().zip(&results).enumerate() {
        match out {
            Ok(msg) => println!("criterion {:>2} {name}: PASS ({msg}; {secs:.1}s)", k + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({msg}; {secs:.1}s)", k + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
