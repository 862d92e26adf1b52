use flowgroups::constructions::finite_generating_set;
use flowgroups::equivalence::{symbol_expansion, FlowEquivalence};
use flowgroups::symbolic::{induced_system, System};
use flowgroups::{dy, ClopenSet, Dyadic, FlowElement, Subshift, SuspensionPoint, SymbolicPoint};

fn samples(sys: &System) -> Vec<FlowElement> {
    let gs = finite_generating_set(sys).unwrap();
    let mut out = vec![FlowElement::translation(sys, dy(3, 8))];
    for (i, g) in gs.elements.iter().enumerate() {
        let h = &gs.elements[(i + 1) % gs.len()];
        out.push(g.compose(&h.invert().unwrap()).unwrap());
    }
    out
}

#[test]
fn expansion_then_identity() {
    let full = Subshift::full(&["0", "1"]);
    let (ex, fe) = symbol_expansion(&full, 0).unwrap();
    let both = fe.then(&FlowEquivalence::identity(&ex).unwrap()).unwrap();
    for g in samples(&full) {
        assert!(both.conjugate(&g).unwrap().equals(&fe.conjugate(&g).unwrap()).unwrap());
    }
}

#[test]
fn expansions_compose() {
    let full = Subshift::full(&["0", "1"]);
    let (ex1, fe1) = symbol_expansion(&full, 0).unwrap();
    let (_, fe2) = symbol_expansion(&ex1, 1).unwrap();
    let both = fe1.then(&fe2).unwrap();
    let p = SymbolicPoint::periodic(vec![0, 1, 1]).unwrap();
    for g in samples(&full) {
        let direct = fe2.conjugate(&fe1.conjugate(&g).unwrap()).unwrap();
        assert!(both.conjugate(&g).unwrap().equals(&direct).unwrap());
    }
    for t in [Dyadic::ZERO, dy(1, 4), dy(5, 8)] {
        let y = SuspensionPoint::new(p.shift(1), t);
        assert!(both.q(&y).same(&fe2.q(&fe1.q(&y))));
    }
}

#[test]
fn equivalence_json_round_trip() {
    let full = Subshift::full(&["0", "1"]);
    let (ex, fe) = symbol_expansion(&full, 1).unwrap();
    let text = serde_json::to_string(&fe.to_json()).unwrap();
    let back = FlowEquivalence::from_json(&full, &ex, &serde_json::from_str(&text).unwrap()).unwrap();
    for g in samples(&full) {
        assert!(back.conjugate(&g).unwrap().equals(&fe.conjugate(&g).unwrap()).unwrap());
    }
}

#[test]
fn induced_fibonacci_recovers_the_fixed_point() {
    let fib = Subshift::fibonacci();
    let ind = induced_system(&ClopenSet::letter(&fib, 0), 16).unwrap();
    let names: Vec<String> = ind.return_words.iter().map(|w| fib.show_word(w)).collect();
    assert_eq!(names, ["a", "ab"]);
    let x = SymbolicPoint::fibonacci_fixed_point(&fib);
    let code = ind.code(&x, 0, 40).unwrap();
    let spelled: Vec<u8> = code.iter().flat_map(|&c| ind.return_words[c as usize].clone()).collect();
    assert_eq!(spelled, x.window(0, spelled.len()));
    // Reading `ab` as `a` and `a` as `b` turns the itinerary back into the fixed point.
    let renamed: Vec<u8> = code.iter().map(|&c| if names[c as usize] == "ab" { 0 } else { 1 }).collect();
    assert_eq!(renamed, x.window(0, renamed.len()));
}
