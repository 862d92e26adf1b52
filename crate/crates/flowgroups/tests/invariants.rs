use flowgroups::constructions::finite_generating_set;
use flowgroups::dyadic::{eval_word, word_for_unit, word_realizes, FLetter};
use flowgroups::{ClopenSet, Dyadic, FlowElement, Interval, PLMap, Subshift};
use proptest::prelude::*;

fn dyadic() -> impl Strategy<Value = Dyadic> {
    (-1000i128..1000, 0u32..12).prop_map(|(n, e)| Dyadic::new(n, e))
}

fn letter() -> impl Strategy<Value = FLetter> {
    prop_oneof![Just(FLetter::A), Just(FLetter::AInv), Just(FLetter::B), Just(FLetter::BInv)]
}

fn unit() -> Interval {
    Interval::new(Dyadic::ZERO, Dyadic::ONE).unwrap()
}

fn f_element() -> impl Strategy<Value = PLMap> {
    prop::collection::vec(letter(), 0..10).prop_map(|w| eval_word(&unit(), &w))
}

fn gen_word() -> impl Strategy<Value = Vec<(usize, bool)>> {
    prop::collection::vec((0usize..6, any::<bool>()), 0..6)
}

fn element(word: &[(usize, bool)]) -> FlowElement {
    let sys = Subshift::fibonacci();
    let gs = finite_generating_set(&sys).unwrap();
    let mut acc = FlowElement::identity(&sys);
    for &(i, inv) in word {
        let g = &gs.elements[i];
        acc = acc.compose(&if inv { g.invert().unwrap() } else { g.clone() }).unwrap();
    }
    acc
}

fn clopen() -> impl Strategy<Value = ClopenSet> {
    (1usize..=3, -2i64..=2, any::<u64>()).prop_map(|(len, l, mask)| {
        let sys = Subshift::fibonacci();
        let words = sys.allowed_words(len).unwrap();
        let chosen = words.into_iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, w)| w);
        ClopenSet::from_words(&sys, l, len, chosen).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dyadic_field_laws(a in dyadic(), b in dyadic(), c in dyadic()) {
        prop_assert_eq!(a + b, b + a);
        prop_assert_eq!((a + b) + c, a + (b + c));
        prop_assert_eq!(a * (b + c), a * b + a * c);
        prop_assert_eq!(a - a, Dyadic::ZERO);
        prop_assert_eq!(a < b, a.to_f64() < b.to_f64());
        prop_assert_eq!(a.to_string().parse::<Dyadic>().unwrap(), a);
        prop_assert_eq!(Dyadic::int(a.floor()) <= a, true);
        prop_assert!(a < Dyadic::int(a.floor() + 1));
    }

    #[test]
    fn pl_group_laws(f in f_element(), g in f_element(), h in f_element()) {
        prop_assert_eq!(f.compose(&g).unwrap().compose(&h).unwrap(), f.compose(&g.compose(&h).unwrap()).unwrap());
        prop_assert!(f.compose(&f.inverse()).unwrap().is_identity());
        for t in [Dyadic::ZERO, Dyadic::new(3, 3), Dyadic::new(5, 4), Dyadic::ONE] {
            prop_assert_eq!(f.compose(&g).unwrap().eval(t), f.eval(g.eval(t)));
        }
    }

    #[test]
    fn words_round_trip(f in f_element()) {
        let w = word_for_unit(&f).unwrap();
        prop_assert_eq!(eval_word(&unit(), &w), f.clone());
        prop_assert!(word_realizes(&w, &f));
    }

    #[test]
    fn wide_and_narrow_word_evaluation_agree(w in prop::collection::vec(letter(), 0..14), v in prop::collection::vec(letter(), 1..4)) {
        let f = eval_word(&unit(), &w);
        prop_assert!(word_realizes(&w, &f));
        let g = eval_word(&unit(), &v);
        prop_assert_eq!(word_realizes(&w, &f.compose(&g).unwrap()), g.is_identity());
    }

    #[test]
    fn clopen_boolean_algebra(a in clopen(), b in clopen(), n in -3i64..3) {
        let lhs = a.union(&b).unwrap().complement().unwrap();
        let rhs = a.complement().unwrap().intersection(&b.complement().unwrap()).unwrap();
        prop_assert!(lhs.equals(&rhs).unwrap());
        prop_assert!(a.difference(&b).unwrap().equals(&a.intersection(&b.complement().unwrap()).unwrap()).unwrap());
        prop_assert!(a.intersection(&b).unwrap().is_subset(&a).unwrap());
        prop_assert!(a.shift(n).shift(-n).equals(&a).unwrap());
        prop_assert!(a.union(&b).unwrap().shift(n).equals(&a.shift(n).union(&b.shift(n)).unwrap()).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flow_group_laws(x in gen_word(), y in gen_word(), z in gen_word()) {
        let (g, h, k) = (element(&x), element(&y), element(&z));
        prop_assert!(g.compose(&h).unwrap().compose(&k).unwrap().equals(&g.compose(&h.compose(&k).unwrap()).unwrap()).unwrap());
        prop_assert!(g.compose(&g.invert().unwrap()).unwrap().is_identity());
        prop_assert!(g.check_gluing().is_ok());
    }

    #[test]
    fn json_round_trip(x in gen_word()) {
        let g = element(&x);
        let back = FlowElement::from_json(g.system(), &g.to_json()).unwrap();
        prop_assert!(back.equals(&g).unwrap());
        prop_assert_eq!(back.canonical_hash(), g.canonical_hash());
    }
}
