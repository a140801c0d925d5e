use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use instrlearn_core::bias::{classify_me, fit_logistic, infer_segmentation, BiasError};
use instrlearn_core::grammar::{
    enumerate_instructions, evaluate, interpret, parse, ColorSymbol, GrammarConfig, Instruction, Lexicon,
    OutputSeq, ParseTree, Pseudoword,
};

fn lex() -> Lexicon {
    Lexicon::canonical()
}

fn roomy() -> GrammarConfig {
    GrammarConfig {
        max_output_len: 10_000,
        ..GrammarConfig::default()
    }
}

fn prim() -> impl Strategy<Value = ParseTree> {
    prop::sample::select(vec!["dax", "wif", "lug", "zup"]).prop_map(|w| ParseTree::Primitive(Pseudoword::new(w).unwrap()))
}

fn tree() -> impl Strategy<Value = ParseTree> {
    prim().prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|x| ParseTree::RepeatThree(Box::new(x))),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| ParseTree::Alternate(Box::new(x), Box::new(y))),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| ParseTree::ReverseConcat(Box::new(x), Box::new(y))),
            prop::collection::vec(inner, 1..3).prop_map(ParseTree::Concat),
        ]
    })
}

fn eval_len(t: &ParseTree) -> usize {
    evaluate(t, &lex(), &roomy()).unwrap().len()
}

proptest! {
    #[test]
    fn length_law(x in tree(), y in tree()) {
        let (lx, ly) = (eval_len(&x), eval_len(&y));
        let bx = || Box::new(x.clone());
        let by = || Box::new(y.clone());
        prop_assert_eq!(eval_len(&ParseTree::RepeatThree(bx())), 3 * lx);
        prop_assert_eq!(eval_len(&ParseTree::Alternate(bx(), by())), 2 * lx + ly);
        prop_assert_eq!(eval_len(&ParseTree::ReverseConcat(bx(), by())), lx + ly);
    }

    #[test]
    fn reversal_law(i in 0usize..10_000, j in 0usize..10_000) {
        let lex = lex();
        let cfg = roomy();
        let all = enumerate_instructions(&lex, &cfg, 4);
        let kiki = lex.word_for(instrlearn_core::grammar::Meaning::ReverseConcat).unwrap().clone();
        let left: Vec<_> = all.iter().filter(|(ins, _)| !ins.contains(&kiki)).collect();
        let (x, ex) = left[i % left.len()];
        let (y, ey) = &all[j % all.len()];
        let mut words = x.words().to_vec();
        words.push(kiki);
        words.extend_from_slice(y.words());
        let got = interpret(&Instruction::new(words).unwrap(), &lex, &cfg).unwrap();
        let mut want = ey.symbols().to_vec();
        want.extend_from_slice(ex.symbols());
        prop_assert_eq!(got.symbols(), &want[..]);
    }

    #[test]
    fn segmentation_is_sound(seed in any::<u64>(), n_items in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let words: Vec<Pseudoword> = ["dax", "wif", "lug"].iter().map(|w| Pseudoword::new(w).unwrap()).collect();
        let colors = ColorSymbol::first(4);
        let data: Vec<(Instruction, OutputSeq)> = (0..n_items)
            .map(|_| {
                let n = rng.gen_range(1..=3);
                let ws = (0..n).map(|_| words[rng.gen_range(0..3)].clone()).collect();
                let m = rng.gen_range(1..=5);
                let out = (0..m).map(|_| colors[rng.gen_range(0..4)]).collect();
                (Instruction::new(ws).unwrap(), OutputSeq(out))
            })
            .collect();
        if let Some(model) = infer_segmentation(&data) {
            for (i, o) in &data {
                prop_assert!(model.explains(i, o));
            }
        }
    }

    #[test]
    fn me_verdict_survives_recoloring(
        perm in Just((0u8..6).collect::<Vec<_>>()).prop_shuffle(),
        familiar in 0u8..6,
        response in prop::collection::vec(0u8..6, 0..4),
    ) {
        let all = ColorSymbol::first(6);
        let seq = |xs: &[u8], p: &dyn Fn(u8) -> u8| OutputSeq(xs.iter().map(|c| all[p(*c) as usize]).collect());
        let id = |c: u8| c;
        let pm = |c: u8| perm[c as usize];
        prop_assert_eq!(
            classify_me(Some(all[familiar as usize]), &seq(&response, &id)),
            classify_me(Some(all[pm(familiar) as usize]), &seq(&response, &pm)),
        );
    }
}

#[test]
fn round_trip_over_the_enumeration() {
    let lex = lex();
    let cfg = GrammarConfig::default();
    let all = enumerate_instructions(&lex, &cfg, 6);
    assert!(all.len() > 1000);
    for (i, o) in &all {
        let tree = parse(i, &lex, &cfg).unwrap();
        assert_eq!(&evaluate(&tree, &lex, &cfg).unwrap(), o, "{i}");
        assert_eq!(&interpret(i, &lex, &cfg).unwrap(), o);
    }
}

/// Every way of assigning each word a nonempty piece, by direct splitting
/// of each response in turn.
fn brute_force_models(data: &[(Instruction, OutputSeq)]) -> Vec<BTreeMap<Pseudoword, Vec<ColorSymbol>>> {
    fn go(
        data: &[(Instruction, OutputSeq)],
        item: usize,
        word: usize,
        at: usize,
        model: &mut BTreeMap<Pseudoword, Vec<ColorSymbol>>,
        out: &mut Vec<BTreeMap<Pseudoword, Vec<ColorSymbol>>>,
    ) {
        let Some((instr, resp)) = data.get(item) else {
            out.push(model.clone());
            return;
        };
        let r = resp.symbols();
        if word == instr.len() {
            if at == r.len() {
                go(data, item + 1, 0, 0, model, out);
            }
            return;
        }
        let w = &instr.words()[word];
        if let Some(piece) = model.get(w).cloned() {
            if r[at..].starts_with(&piece) {
                go(data, item, word + 1, at + piece.len(), model, out);
            }
            return;
        }
        for end in at + 1..=r.len() {
            model.insert(w.clone(), r[at..end].to_vec());
            go(data, item, word + 1, end, model, out);
            model.remove(w);
        }
    }
    let mut out = Vec::new();
    go(data, 0, 0, 0, &mut BTreeMap::new(), &mut out);
    out
}

#[test]
fn segmentation_agrees_with_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let words: Vec<Pseudoword> = ["dax", "wif", "lug", "zup"].iter().map(|w| Pseudoword::new(w).unwrap()).collect();
    let colors = ColorSymbol::first(3);
    let mut found = 0;
    for _ in 0..3000 {
        // Plant a model half the time so that solvable cases are common.
        let planted: Vec<Vec<ColorSymbol>> = (0..4)
            .map(|_| (0..rng.gen_range(1..=2)).map(|_| colors[rng.gen_range(0..3)]).collect())
            .collect();
        let mut data = Vec::new();
        let mut total = 0;
        for _ in 0..rng.gen_range(1..=4) {
            let n = rng.gen_range(1..=3);
            let idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..4)).collect();
            let out: Vec<ColorSymbol> = if rng.gen_bool(0.5) {
                idx.iter().flat_map(|&k| planted[k].clone()).collect()
            } else {
                (0..rng.gen_range(1..=4)).map(|_| colors[rng.gen_range(0..3)]).collect()
            };
            if total + out.len() > 12 {
                break;
            }
            total += out.len();
            let ws = idx.iter().map(|&k| words[k].clone()).collect();
            data.push((Instruction::new(ws).unwrap(), OutputSeq(out)));
        }
        if data.is_empty() {
            continue;
        }
        let brute = brute_force_models(&data);
        let got = infer_segmentation(&data);
        match got {
            None => assert!(brute.is_empty(), "{data:?}"),
            Some(m) => {
                found += 1;
                let best = brute.iter().map(|b| b.values().map(Vec::len).sum::<usize>()).min().unwrap();
                assert_eq!(m.total_len(), best, "{data:?}");
                let as_map: BTreeMap<_, _> = m.assignments.iter().map(|(k, v)| (k.clone(), v.symbols().to_vec())).collect();
                assert!(brute.contains(&as_map));
            }
        }
    }
    assert!(found > 500, "{found}");
}

#[test]
fn logistic_recovers_known_coefficients() {
    let beta = [-1.0, 0.8, -0.5];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut rows = Vec::new();
    let mut ys = Vec::new();
    for _ in 0..5000 {
        let x = vec![rng.gen_range(-2.0..2.0), f64::from(rng.gen_range(0u8..3))];
        let eta = beta[0] + beta[1] * x[0] + beta[2] * x[1];
        ys.push(rng.gen_bool(1.0 / (1.0 + (-eta).exp())));
        rows.push(x);
    }
    let fit = fit_logistic(&rows, &ys).unwrap();
    assert!(fit.converged);
    for k in 0..3 {
        let z = (fit.coefficients[k] - beta[k]).abs() / fit.std_errors[k];
        assert!(z < 2.0, "coefficient {k}: {fit:?}");
    }

    // Refit on outcomes drawn from the fitted model itself.
    let mut again = Vec::new();
    for x in &rows {
        let c = &fit.coefficients;
        let eta = c[0] + c[1] * x[0] + c[2] * x[1];
        again.push(rng.gen_bool(1.0 / (1.0 + (-eta).exp())));
    }
    let refit = fit_logistic(&rows, &again).unwrap();
    for k in 0..3 {
        let z = (refit.coefficients[k] - fit.coefficients[k]).abs() / fit.std_errors[k];
        assert!(z < 3.0, "bootstrap coefficient {k}: {refit:?}");
    }
}

#[test]
fn constant_outcomes_are_rejected() {
    let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![f64::from(i % 5), f64::from(i % 3)]).collect();
    for y in [true, false] {
        let err = fit_logistic(&rows, &[y; 50]).unwrap_err();
        assert!(matches!(err, BiasError::Separation | BiasError::DegenerateDesign), "{err:?}");
    }
}
