//! Curriculum experiment: three single-function stages in random order, then
//! a composition stage.
//!
//! The item templates below are a reconstruction. They are written in the
//! canonical vocabulary (`dax wif lug zup`, `fep blicket kiki`) and mapped onto
//! each participant's sampled lexicon by role: the i-th canonical primitive
//! becomes the i-th sampled primitive, and `zup` is always the primitive that
//! is only ever studied in isolation. Constraints the templates satisfy:
//!
//! * every stage studies the four primitives; the function stages add two
//!   demonstrations of their function, the final stage shows all fourteen
//!   study items (four primitives, two demos per function and four
//!   compositions);
//! * the most complex study item has five words, two compositions and four
//!   output symbols;
//! * every non-catch test item contains `zup`, and the composition stage
//!   includes six-word items with three compositions and six outputs;
//! * outside the first function stage, each test item differs from every
//!   study item by more than one primitive substitution.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use super::{item_id, Block, BlockKind, ExperimentKind, ExperimentSpec, Item, SPEC_SCHEMA_VERSION};
use crate::grammar::{
    interpret, sample_lexicon, words, ColorSymbol, GrammarConfig, Instruction, Lexicon, Meaning,
    OutputSeq, EXP1_WORD_POOL,
};
use crate::rng;

const PRIMITIVES: [&str; 4] = ["dax", "wif", "lug", "zup"];
const F1_DEMOS: [&str; 2] = ["lug fep", "dax fep"];
const F2_DEMOS: [&str; 2] = ["lug blicket wif", "wif blicket dax"];
const F3_DEMOS: [&str; 2] = ["lug kiki wif", "dax kiki lug"];
const COMPOSITION_DEMOS: [&str; 4] = [
    "lug fep kiki wif",
    "wif kiki dax blicket lug",
    "lug kiki wif fep",
    "wif blicket dax kiki lug",
];

const F1_TESTS: [&str; 1] = ["zup fep"];
const F2_TESTS: [&str; 2] = ["zup blicket lug", "dax blicket zup"];
const F3_TESTS: [&str; 2] = ["zup kiki dax", "wif kiki zup"];
const COMPOSITION_TESTS: [&str; 5] = [
    "zup fep kiki lug",
    "wif kiki zup fep",
    "lug kiki wif blicket zup",
    "zup blicket wif kiki dax fep",
    "zup blicket zup kiki zup fep",
];

const N_COLORS: u8 = 6;
const N_PRIMITIVES: usize = 4;

/// Rewrites a canonical template onto `lex` by role.
fn instantiate(template: &str, lex: &Lexicon) -> Instruction {
    let canonical = Lexicon::canonical();
    let canon_prims: Vec<_> = canonical.primitives().map(|(w, _)| w.clone()).collect();
    let prims: Vec<_> = lex.primitives().map(|(w, _)| w.clone()).collect();
    let ws = template
        .split_whitespace()
        .map(|t| match canonical.meaning(t).expect("template word is canonical") {
            Meaning::Primitive(_) => {
                let role = canon_prims.iter().position(|w| w.as_str() == t).expect("role");
                prims[role].clone()
            }
            f => lex.word_for(f).expect("function word sampled").clone(),
        })
        .collect();
    Instruction::new(ws).expect("nonempty template")
}

fn answered(instr: Instruction, lex: &Lexicon) -> (Instruction, OutputSeq) {
    let out = interpret(&instr, lex, &GrammarConfig::default()).expect("template is well formed");
    (instr, out)
}

/// Study and test instruction sets of the curriculum under one lexicon.
#[derive(Clone, Debug)]
pub struct Exp1ItemSets {
    /// The fourteen final-stage study items.
    pub study: Vec<(Instruction, OutputSeq)>,
    /// All non-catch test items across the four stages.
    pub test: Vec<(Instruction, OutputSeq)>,
}

/// The curriculum's item sets under `lex` (the canonical lexicon yields the
/// sets the sequence-to-sequence baseline trains and tests on).
pub fn exp1_item_sets(lex: &Lexicon) -> Exp1ItemSets {
    let study = PRIMITIVES
        .iter()
        .chain(&F1_DEMOS)
        .chain(&F2_DEMOS)
        .chain(&F3_DEMOS)
        .chain(&COMPOSITION_DEMOS)
        .map(|t| answered(instantiate(t, lex), lex))
        .collect();
    let test = F1_TESTS
        .iter()
        .chain(&F2_TESTS)
        .chain(&F3_TESTS)
        .chain(&COMPOSITION_TESTS)
        .map(|t| answered(instantiate(t, lex), lex))
        .collect();
    Exp1ItemSets { study, test }
}

fn stage_templates(kind: BlockKind) -> (Vec<&'static str>, Vec<&'static str>, usize) {
    let mut study: Vec<&str> = PRIMITIVES.to_vec();
    let (tests, catches): (&[&str], usize) = match kind {
        BlockKind::Function1 => {
            study.extend(F1_DEMOS);
            (&F1_TESTS, 1)
        }
        BlockKind::Function2 => {
            study.extend(F2_DEMOS);
            (&F2_TESTS, 1)
        }
        BlockKind::Function3 => {
            study.extend(F3_DEMOS);
            (&F3_TESTS, 1)
        }
        BlockKind::Composition => {
            study.extend(F1_DEMOS);
            study.extend(F2_DEMOS);
            study.extend(F3_DEMOS);
            study.extend(COMPOSITION_DEMOS);
            (&COMPOSITION_TESTS, 2)
        }
        _ => unreachable!("not a curriculum stage"),
    };
    (study, tests.to_vec(), catches)
}

/// Generates the curriculum for one participant.
pub fn generate_exp1(seed: u64) -> ExperimentSpec {
    let word_pool = words(&EXP1_WORD_POOL);
    let color_pool = ColorSymbol::first(N_COLORS);
    let lex = sample_lexicon(&word_pool, &color_pool, N_PRIMITIVES, rng::derive_seed(seed, 1))
        .expect("pools are large enough");
    let mut rng = rng::stream(seed, 2);

    let mut order = [BlockKind::Function1, BlockKind::Function2, BlockKind::Function3];
    order.shuffle(&mut rng);
    let kinds = order.into_iter().chain([BlockKind::Composition]);

    let mut blocks = Vec::with_capacity(4);
    for (b, kind) in kinds.enumerate() {
        let (study_t, test_t, n_catch) = stage_templates(kind);
        let study: Vec<Item> = study_t
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let (instruction, out) = answered(instantiate(t, &lex), &lex);
                Item {
                    id: item_id(b, 's', i),
                    instruction,
                    target: Some(out),
                    is_catch: false,
                }
            })
            .collect();

        let mut tests: Vec<(Instruction, OutputSeq, bool)> = test_t
            .iter()
            .map(|t| {
                let (i, o) = answered(instantiate(t, &lex), &lex);
                (i, o, false)
            })
            .collect();
        let demos: Vec<&Item> = study.iter().filter(|i| !i.is_primitive_demo()).collect();
        let catches: Vec<&&Item> = demos.choose_multiple(&mut rng, n_catch).collect();
        for c in catches {
            tests.push((
                c.instruction.clone(),
                c.target.clone().expect("study items are answered"),
                true,
            ));
        }
        tests.shuffle(&mut rng);
        let test = tests
            .into_iter()
            .enumerate()
            .map(|(i, (instruction, target, is_catch))| Item {
                id: item_id(b, 't', i),
                instruction,
                target: Some(target),
                is_catch,
            })
            .collect();

        blocks.push(Block {
            kind,
            lexicon: lex.clone(),
            pool: lex.color_pool().to_vec(),
            study,
            test,
            quiz: true,
            familiar: None,
            assigned: Vec::new(),
        });
    }

    let pool = lex.color_pool();
    let a = rng.gen_range(0..pool.len());
    let b = (a + rng.gen_range(1..pool.len())) % pool.len();
    ExperimentSpec {
        schema_version: SPEC_SCHEMA_VERSION,
        kind: ExperimentKind::Exp1,
        seed,
        practice: OutputSeq(alloc::vec![pool[a], pool[b], pool[a]]),
        blocks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{parse, Pseudoword};
    use crate::protocol::substitution_distance;

    fn held_out(lex: &Lexicon) -> Pseudoword {
        lex.primitives().nth(3).unwrap().0.clone()
    }

    #[test]
    fn structure_for_many_seeds() {
        for seed in 0..50 {
            let spec = generate_exp1(seed);
            assert_eq!(spec.blocks.len(), 4);
            let last = &spec.blocks[3];
            assert_eq!(last.kind, BlockKind::Composition);
            assert_eq!(last.study.len(), 14);
            let mut firsts: Vec<_> = spec.blocks[..3].iter().map(|b| b.kind).collect();
            firsts.sort();
            assert_eq!(
                firsts,
                [BlockKind::Function1, BlockKind::Function2, BlockKind::Function3]
            );
            for b in &spec.blocks {
                assert_eq!(b.pool.len(), 6);
                assert_eq!(b.lexicon.primitives().count(), 4);
                let catches = b.test.iter().filter(|t| t.is_catch).count();
                let want = if b.kind == BlockKind::Composition { 2 } else { 1 };
                assert_eq!(catches, want);
                if b.kind != BlockKind::Composition {
                    assert_eq!(b.study.len(), 6);
                }
            }
        }
    }

    #[test]
    fn held_out_primitive_placement() {
        for seed in 0..50 {
            let spec = generate_exp1(seed);
            let zup = held_out(&spec.blocks[0].lexicon);
            for b in &spec.blocks {
                for s in &b.study {
                    if s.instruction.contains(&zup) {
                        assert_eq!(s.instruction.len(), 1);
                    }
                }
                for t in b.test.iter().filter(|t| !t.is_catch) {
                    assert!(t.instruction.contains(&zup), "{:?}", t.instruction);
                }
            }
        }
    }

    #[test]
    fn catch_items_repeat_study_items() {
        let spec = generate_exp1(3);
        for b in &spec.blocks {
            for c in b.test.iter().filter(|t| t.is_catch) {
                let s = b.study.iter().find(|s| s.instruction == c.instruction).unwrap();
                assert_eq!(s.target, c.target);
            }
        }
    }

    #[test]
    fn test_items_are_not_near_copies() {
        let spec = generate_exp1(11);
        let all_study: Vec<_> = spec.blocks[3].study.iter().map(|s| &s.instruction).collect();
        for b in spec.blocks.iter().filter(|b| b.kind != BlockKind::Function1) {
            for t in b.test.iter().filter(|t| !t.is_catch) {
                for s in &all_study {
                    let d = substitution_distance(&t.instruction, s);
                    assert!(d.map_or(true, |d| d > 1), "{:?} vs {:?}", t.instruction, s);
                }
            }
        }
    }

    #[test]
    fn complexity_limits() {
        let lex = Lexicon::canonical();
        let cfg = GrammarConfig::default();
        let sets = exp1_item_sets(&lex);
        assert_eq!(sets.study.len(), 14);
        let mut max = (0, 0, 0);
        for (i, o) in &sets.study {
            let c = parse(i, &lex, &cfg).unwrap().count_compositions();
            max = (max.0.max(i.len()), max.1.max(c), max.2.max(o.len()));
        }
        assert_eq!(max, (5, 2, 4));
        let long = sets.test.iter().any(|(i, o)| {
            i.len() == 6 && o.len() == 6 && parse(i, &lex, &cfg).unwrap().count_compositions() == 3
        });
        assert!(long);
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(generate_exp1(42), generate_exp1(42));
        assert_ne!(generate_exp1(42), generate_exp1(43));
    }
}
