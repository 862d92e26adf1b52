use flowgroups::constructions::{
    double_commutator_check, finite_generating_set, move_domain, all_pass, GeneratorSet,
};
use flowgroups::dyadic::thompson_generators;
use flowgroups::equivalence::{restrict, symbol_expansion, RestrictionMap};
use flowgroups::suspension::{chart_embed, lift_central_extension, metric, Chart};
use flowgroups::symbolic::{
    first_return_time, periodic_points, sft_approximation, System,
};
use flowgroups::{dy, ClopenSet, Dyadic, Error, FlowElement, Interval, Result, SuspensionPoint, SymbolicPoint};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

pub const SUITES: &[&str] = &[
    "group-axioms",
    "evaluation",
    "gluing",
    "first-return",
    "double-commutator",
    "move-domain",
    "metric",
    "central-extension",
    "restriction",
    "ps-conjugation",
];

#[derive(Serialize)]
pub struct Report {
    pub suite: String,
    pub system: String,
    pub seed: u64,
    pub samples: usize,
    pub trials: usize,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Value>,
}

pub struct Budgets {
    pub ret: usize,
}

/// Per-trial generator: the root seed selects the key, suite and trial select the stream.
fn trial_rng(seed: u64, suite: usize, trial: usize) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(((suite as u64) << 32) | trial as u64);
    r
}

fn random_element(gs: &GeneratorSet, sys: &System, rng: &mut ChaCha8Rng, max_len: usize) -> Result<(String, FlowElement)> {
    let n = rng.gen_range(0..=max_len);
    let mut names = Vec::new();
    let mut acc = FlowElement::identity(sys);
    for _ in 0..n {
        let i = rng.gen_range(0..gs.len());
        let inv = rng.gen_bool(0.5);
        let g = &gs.elements[i];
        acc = acc.compose(&if inv { g.invert()? } else { g.clone() })?;
        names.push(format!("{}{}", gs.names[i], if inv { "^-1" } else { "" }));
    }
    Ok((names.join(" "), acc))
}

fn random_point(sys: &System, rng: &mut ChaCha8Rng) -> Result<SuspensionPoint> {
    let base = if sys.is_substitution() {
        let mut seeds = Vec::new();
        for a in 0..sys.letters() as u8 {
            for b in 0..sys.letters() as u8 {
                if let Some(p) = (1..=4).find_map(|k| SymbolicPoint::substitution_fixed_point(sys, (a, b), k).ok()) {
                    seeds.push(p);
                }
            }
        }
        seeds.choose(rng).ok_or_else(|| Error::Unsupported("substitution without fixed points".into()))?.shift(rng.gen_range(-20..20))
    } else {
        let pts = periodic_points(sys, 6)?;
        let w = pts.choose(rng).ok_or_else(|| Error::Unsupported("no periodic points of period <= 6".into()))?;
        SymbolicPoint::periodic(w.clone())?.shift(rng.gen_range(0..w.len() as i64))
    };
    Ok(SuspensionPoint::new(base, Dyadic::new(rng.gen_range(0..64), 6)))
}

fn random_clopen(sys: &System, rng: &mut ChaCha8Rng) -> Result<ClopenSet> {
    loop {
        let len = rng.gen_range(1..=3);
        let words: Vec<_> = sys.allowed_words(len)?.into_iter().filter(|_| rng.gen_bool(0.5)).collect();
        if !words.is_empty() {
            return ClopenSet::from_words(sys, rng.gen_range(-2..=2), len, words);
        }
    }
}

fn random_interval(rng: &mut ChaCha8Rng, max_len_32: i64) -> Interval {
    let lo = rng.gen_range(-32..64);
    let len = rng.gen_range(1..=max_len_32);
    Interval::new(Dyadic::new(lo, 5), Dyadic::new(lo + len as i128, 5)).unwrap()
}

/// Least `n <= bound` with an allowed word of length `len + n` lying in `C`
/// at its start and in `C` again `n` steps later.
fn brute_first_return(sys: &System, c: &ClopenSet, bound: usize) -> Result<Option<usize>> {
    let (l, len) = (c.left(), c.window_len());
    for n in 1..=bound {
        for w in sys.allowed_words(len + n)? {
            if c.contains_word_at(l, &w) && c.contains_word_at(l, &w[n..]) {
                return Ok(Some(n));
            }
        }
    }
    Ok(None)
}

type Trial<'a> = Box<dyn FnMut(&mut ChaCha8Rng) -> Result<Option<Value>> + 'a>;

pub fn run(
    suite: &str,
    sys: &System,
    sys_name: &str,
    seed: u64,
    samples: usize,
    budgets: &Budgets,
    inject_bad: bool,
) -> Result<Report> {
    let idx = SUITES.iter().position(|s| *s == suite).ok_or_else(|| {
        Error::Input(format!("unknown suite {suite:?}; known suites: {}", SUITES.join(", ")))
    })?;
    let gs = finite_generating_set(sys)?;
    let mut trial: Trial = match suite {
        "group-axioms" => Box::new(|rng| {
            let (wg, g) = random_element(&gs, sys, rng, 8)?;
            let (_, h) = random_element(&gs, sys, rng, 8)?;
            let (_, k) = random_element(&gs, sys, rng, 8)?;
            let mut ginv = g.invert()?;
            if inject_bad {
                ginv = ginv.compose(&FlowElement::translation(sys, dy(1, 4)))?;
            }
            let ok = g.compose(&h)?.compose(&k)?.equals(&g.compose(&h.compose(&k)?)?)?
                && g.compose(&ginv)?.is_identity()
                && g.compose(&FlowElement::identity(sys))?.equals(&g)?;
            Ok((!ok).then(|| json!({"word": wg, "element": g.to_json(), "claimed_inverse": ginv.to_json()})))
        }),
        "evaluation" => Box::new(|rng| {
            let (wg, g) = random_element(&gs, sys, rng, 8)?;
            let (wh, h) = random_element(&gs, sys, rng, 8)?;
            let gh = g.compose(&h)?;
            for _ in 0..4 {
                let y = random_point(sys, rng)?;
                if !gh.evaluate(&y).same(&g.evaluate(&h.evaluate(&y))) {
                    return Ok(Some(json!({"g": wg, "h": wh, "time": y.time})));
                }
            }
            Ok(None)
        }),
        "gluing" => Box::new(|rng| {
            let (wg, g) = random_element(&gs, sys, rng, 8)?;
            let (wh, h) = random_element(&gs, sys, rng, 8)?;
            let gh = g.compose(&h)?;
            let ok = gh.check_gluing().is_ok() && gh.displacement().continuous_across_seams();
            Ok((!ok).then(|| json!({"g": wg, "h": wh})))
        }),
        "first-return" => Box::new(|rng| {
            let c = random_clopen(sys, rng)?;
            let t = first_return_time(&c, budgets.ret).ok();
            let oracle = brute_first_return(sys, &c, budgets.ret.min(12))?;
            let agree = match (t, oracle) {
                (Some(a), Some(b)) => a == b,
                (None, None) => true,
                (Some(a), None) => a > budgets.ret.min(12),
                (None, Some(_)) => false,
            };
            Ok((!agree).then(|| json!({"clopen": c.describe(), "first_return": t, "brute_force": oracle})))
        }),
        "double-commutator" => {
            let c = ClopenSet::letter(sys, (sys.letters() - 1) as u8);
            let u = Chart::new(&c, Interval::new(Dyadic::ZERO, dy(1, 2))?)?;
            let (a, b) = thompson_generators(&u.interval);
            let gens = [chart_embed(&u, &a)?, chart_embed(&u, &b)?];
            let g = FlowElement::translation(sys, dy(1, 2));
            Box::new(move |rng| {
                let pick = |rng: &mut ChaCha8Rng| -> Result<FlowElement> {
                    let mut acc = FlowElement::identity(sys);
                    for _ in 0..rng.gen_range(1..=4) {
                        let e = &gens[rng.gen_range(0..2)];
                        acc = acc.compose(&if rng.gen_bool(0.5) { e.invert()? } else { e.clone() })?;
                    }
                    Ok(acc)
                };
                let h1 = pick(rng)?;
                let h2 = pick(rng)?;
                let r = double_commutator_check(&g, &u, &h1, &h2)?;
                Ok((!r.holds).then(|| json!({"h1": h1.to_json(), "h2": h2.to_json(), "lhs": r.lhs_hash, "rhs": r.rhs_hash})))
            })
        }
        "move-domain" => Box::new(|rng| {
            let c = random_clopen(sys, rng)?;
            let j = random_interval(rng, 24);
            let i = random_interval(rng, 24);
            let m = move_domain(&c, &j, &i)?;
            Ok((!all_pass(&m.checks)).then(|| json!({"clopen": c.describe(), "from": j.to_string(), "to": i.to_string()})))
        }),
        "metric" => Box::new(|rng| {
            let (_, g) = random_element(&gs, sys, rng, 6)?;
            let (_, h) = random_element(&gs, sys, rng, 6)?;
            let (_, k) = random_element(&gs, sys, rng, 6)?;
            let ok = metric(&g, &h)? == metric(&h, &g)?
                && metric(&g, &k)? <= metric(&g, &h)? + metric(&h, &k)?
                && (metric(&g, &h)?.is_zero() == g.equals(&h)?);
            Ok((!ok).then(|| json!({"g": g.to_json(), "h": h.to_json(), "k": k.to_json()})))
        }),
        "central-extension" => Box::new(|_| {
            let g = lift_central_extension(sys, "g")?;
            let one = FlowElement::translation(sys, Dyadic::ONE);
            let mut ok = g.equals(&one)?;
            for w in ["a", "b", "c"] {
                let e = lift_central_extension(sys, w)?;
                ok &= e.compose(&g)?.equals(&g.compose(&e)?)?;
            }
            ok &= lift_central_extension(sys, "ccc")?.equals(&lift_central_extension(sys, "gg")?)?;
            let p = lift_central_extension(sys, "Ba")?;
            ok &= p.commutator(&lift_central_extension(sys, "abA")?)?.is_identity();
            ok &= p.commutator(&lift_central_extension(sys, "aabAA")?)?.is_identity();
            Ok((!ok).then(|| json!({"relation": "lifted Thompson relations"})))
        }),
        "restriction" => {
            let x1 = sft_approximation(sys, 1)?;
            let r = RestrictionMap::new(&x1, sys, 4)?;
            let gs1 = finite_generating_set(&x1)?;
            Box::new(move |rng| {
                let (_, g) = random_element(&gs1, &x1, rng, 6)?;
                let (_, h) = random_element(&gs1, &x1, rng, 6)?;
                let ok = restrict(&g.compose(&h)?, &r)?.equals(&restrict(&g, &r)?.compose(&restrict(&h, &r)?)?)?;
                Ok((!ok).then(|| json!({"g": g.to_json(), "h": h.to_json()})))
            })
        }
        "ps-conjugation" => {
            let (_, fe) = symbol_expansion(sys, 0)?;
            Box::new(move |rng| {
                let (wg, g) = random_element(&gs, sys, rng, 5)?;
                let (wh, h) = random_element(&gs, sys, rng, 5)?;
                let cg = fe.conjugate(&g)?;
                let ok = fe.conjugate(&g.compose(&h)?)?.equals(&cg.compose(&fe.conjugate(&h)?)?)?;
                let y = random_point(sys, rng)?;
                let eq = cg.evaluate(&fe.q(&y)).same(&fe.q(&g.evaluate(&y)));
                Ok((!(ok && eq)).then(|| json!({"g": wg, "h": wh})))
            })
        }
        _ => unreachable!(),
    };
    let mut trials = 0;
    let mut counterexample = None;
    for i in 0..samples {
        let mut rng = trial_rng(seed, idx, i);
        trials += 1;
        if let Some(ce) = trial(&mut rng)? {
            counterexample = Some(json!({"trial": i, "data": ce}));
            break;
        }
    }
    Ok(Report {
        suite: suite.to_string(),
        system: sys_name.to_string(),
        seed,
        samples,
        trials,
        pass: counterexample.is_none(),
        counterexample,
    })
}
