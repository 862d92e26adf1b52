use flowgroups::symbolic::{ClopenJson, System};
use flowgroups::{ClopenSet, Dyadic, Error, FlowElement, Interval, Result, SymbolicPoint};

use crate::session::Session;

pub fn dyadic(s: &str) -> Result<Dyadic> {
    s.parse()
}

/// `lo,hi`.
pub fn interval(s: &str) -> Result<Interval> {
    let (a, b) = s.split_once(',').ok_or_else(|| Error::Input(format!("interval {s:?} is not of the form lo,hi")))?;
    Interval::new(dyadic(a)?, dyadic(b)?)
}

/// `X`, `none`, `w1,w2,…@l`, or a JSON clopen description.
pub fn clopen(sys: &System, s: &str) -> Result<ClopenSet> {
    let s = s.trim();
    if s.starts_with('{') {
        let j: ClopenJson = serde_json::from_str(s).map_err(|e| Error::Input(format!("clopen {s:?}: {e}")))?;
        return ClopenSet::from_json(sys, &j);
    }
    match s {
        "X" => return Ok(ClopenSet::full(sys)),
        "none" => return Ok(ClopenSet::empty(sys)),
        _ => {}
    }
    let (ws, l) = s.split_once('@').unwrap_or((s, "0"));
    let l: i64 = l.trim().parse().map_err(|_| Error::Input(format!("bad window position in {s:?}")))?;
    let words = ws.split(',').map(|w| sys.parse_word(w.trim())).collect::<Result<Vec<_>>>()?;
    let len = words[0].len();
    if words.iter().any(|w| w.len() != len) {
        return Err(Error::Input(format!("words of {s:?} differ in length")));
    }
    ClopenSet::from_words(sys, l, len, words)
}

/// `periodic:W`, `eventual:L|C|R`, or `fixed:PQ` (a substitution fixed point grown from the seed `P·Q`).
pub fn point(sys: &System, s: &str) -> Result<SymbolicPoint> {
    let (kind, data) = s.split_once(':').ok_or_else(|| Error::Input(format!("point {s:?} has no kind")))?;
    match kind {
        "periodic" => SymbolicPoint::periodic(sys.parse_word(data)?),
        "eventual" => {
            let parts: Vec<&str> = data.split('|').collect();
            if parts.len() != 3 {
                return Err(Error::Input("eventual points need left|center|right".into()));
            }
            SymbolicPoint::eventually_periodic(
                sys.parse_word(parts[0])?,
                sys.parse_word(parts[1])?,
                sys.parse_word(parts[2])?,
            )
        }
        "fixed" => {
            let seed = sys.parse_word(data)?;
            if seed.len() != 2 {
                return Err(Error::Input("fixed point seeds are two symbols".into()));
            }
            let mut last = None;
            for power in 1..=6 {
                match SymbolicPoint::substitution_fixed_point(sys, (seed[0], seed[1]), power) {
                    Ok(p) => return Ok(p),
                    Err(e) => last = Some(e),
                }
            }
            Err(last.unwrap())
        }
        k => Err(Error::Input(format!("unknown point kind {k:?}"))),
    }
}

/// A product of registered elements: `g h^-1 flow(1/2)`, rightmost applied first.
pub fn element_word(session: &Session, sys_name: &str, s: &str) -> Result<FlowElement> {
    let sys = session.system(sys_name)?;
    let mut acc = FlowElement::identity(&sys);
    for tok in s.split_whitespace() {
        let (name, inverse) = match tok.strip_suffix("^-1") {
            Some(n) => (n, true),
            None => (tok, false),
        };
        let g = if let Some(r) = name.strip_prefix("flow(").and_then(|r| r.strip_suffix(')')) {
            FlowElement::translation(&sys, dyadic(r)?)
        } else if name == "id" {
            FlowElement::identity(&sys)
        } else {
            let (g, owner) = session.element(name)?;
            if owner != sys_name {
                return Err(Error::MixedSystems);
            }
            g
        };
        acc = acc.compose(&if inverse { g.invert()? } else { g })?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use flowgroups::{dy, Subshift};

    #[test]
    fn specs() {
        let fib = Subshift::fibonacci();
        assert_eq!(interval("1/4,9/8").unwrap(), Interval::new(dy(1, 4), dy(9, 8)).unwrap());
        assert!(interval("1/2,1/4").is_err());
        let c = clopen(&fib, "aa,ab@-1").unwrap();
        assert!(c.equals(&ClopenSet::letter(&fib, 0).shift(1)).unwrap());
        assert!(clopen(&fib, r#"{"window":[0,0],"words":["b"]}"#).unwrap().equals(&ClopenSet::letter(&fib, 1)).unwrap());
        let p = point(&fib, "fixed:ba").unwrap();
        assert_eq!(p.window(0, 5), fib.parse_word("abaab").unwrap());
        assert!(point(&fib, "spiral:a").is_err());
    }
}
