//! Bias experiment: fourteen independent trials, each with freshly drawn
//! words and colors.
//!
//! * six mutual-exclusivity probes on the grid {0, 1, 2 contradictory
//!   examples} x {pool of 2, pool of 6}; a contradictory example is an extra
//!   word demonstrated with the familiar word's output;
//! * three iconic-concatenation probes that juxtapose known words without any
//!   concatenation demonstration;
//! * three conflict probes where every pool symbol already belongs to a word,
//!   so any answer violates either mutual exclusivity or one-to-one;
//! * two catch trials whose test instruction repeats a study instruction.
//!
//! Words come from a shuffled deck over the twenty-word pool, so no word is
//! reused until the deck runs out; the deck is then reshuffled (the trials
//! need more than twenty words in total).

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::{
    item_id, Block, BlockKind, ExperimentKind, ExperimentSpec, Item, TrialKind,
    SPEC_SCHEMA_VERSION,
};
use crate::grammar::{
    interpret, words, ColorSymbol, GrammarConfig, Instruction, LexEntry, Lexicon, Meaning,
    OutputSeq, Pseudoword, EXP2_WORD_POOL,
};
use crate::rng::{self, Rng};

const N_COLORS: u8 = 8;

struct WordDeck {
    pool: Vec<Pseudoword>,
    deck: Vec<Pseudoword>,
}

impl WordDeck {
    fn new(pool: Vec<Pseudoword>) -> Self {
        WordDeck {
            pool,
            deck: Vec::new(),
        }
    }

    fn draw(&mut self, n: usize, rng: &mut Rng) -> Vec<Pseudoword> {
        let mut out: Vec<Pseudoword> = Vec::with_capacity(n);
        while out.len() < n {
            if self.deck.is_empty() {
                let mut fresh: Vec<Pseudoword> = self
                    .pool
                    .iter()
                    .filter(|w| !out.contains(w))
                    .cloned()
                    .collect();
                fresh.shuffle(rng);
                self.deck = fresh;
            }
            out.push(self.deck.pop().expect("deck refilled"));
        }
        out
    }
}

/// Blueprint of one trial before words and colors are drawn.
struct TrialDraft {
    kind: TrialKind,
    /// (word slot, meaning slot) pairs that define the trial lexicon;
    /// meaning slot `Some(k)` is color k, `None` is the repeat function.
    lexicon: Vec<(usize, Option<usize>)>,
    /// Study lines as (word slots, explicit output color slots).
    study: Vec<(Vec<usize>, Vec<usize>)>,
    test: Vec<usize>,
    pool_size: usize,
    n_words: usize,
    familiar: bool,
    claimed: usize,
    answered: bool,
    catch: bool,
}

fn drafts() -> Vec<TrialDraft> {
    let mut out = Vec::new();
    // Word 0 familiar, word 1 novel, words 2.. contradictory.
    for contradictory in 0..=2usize {
        for pool_size in [2usize, 6] {
            let mut study = vec![(vec![0], vec![0])];
            for k in 0..contradictory {
                study.push((vec![2 + k], vec![0]));
            }
            out.push(TrialDraft {
                kind: TrialKind::MutualExclusivity {
                    contradictory: contradictory as u8,
                    pool_size: pool_size as u8,
                },
                lexicon: vec![(0, Some(0))],
                study,
                test: vec![1],
                pool_size,
                n_words: 2 + contradictory,
                familiar: true,
                claimed: 0,
                answered: false,
                catch: false,
            });
        }
    }
    let iconic = [
        // a b
        (vec![(0, Some(0)), (1, Some(1))], vec![0, 1], 2),
        // b a c
        (vec![(0, Some(0)), (1, Some(1)), (2, Some(2))], vec![1, 0, 2], 3),
        // b f a, with `a f` demonstrated
        (vec![(0, Some(0)), (1, Some(1)), (2, None)], vec![1, 2, 0], 3),
    ];
    for (v, (lexicon, test, n_words)) in iconic.into_iter().enumerate() {
        let mut study: Vec<(Vec<usize>, Vec<usize>)> = lexicon
            .iter()
            .filter_map(|(w, m)| m.map(|c| (vec![*w], vec![c])))
            .collect();
        if v == 2 {
            study.push((vec![0, 2], vec![0, 0, 0]));
        }
        out.push(TrialDraft {
            kind: TrialKind::Iconic { variant: v as u8 + 1 },
            lexicon,
            study,
            test,
            pool_size: 6,
            n_words,
            familiar: false,
            claimed: 0,
            answered: true,
            catch: false,
        });
    }
    // Conflict: the last word slot is the novel test word.
    let conflict = [(2usize, false), (6, false), (2, true)];
    for (v, (pool_size, with_fn)) in conflict.into_iter().enumerate() {
        let mut lexicon: Vec<(usize, Option<usize>)> =
            (0..pool_size).map(|k| (k, Some(k))).collect();
        let mut study: Vec<(Vec<usize>, Vec<usize>)> =
            (0..pool_size).map(|k| (vec![k], vec![k])).collect();
        let mut n_words = pool_size + 1;
        if with_fn {
            lexicon.push((pool_size, None));
            study.push((vec![0, pool_size], vec![0, 0, 0]));
            n_words += 1;
        }
        out.push(TrialDraft {
            kind: TrialKind::Conflict { variant: v as u8 + 1 },
            lexicon,
            study,
            test: vec![n_words - 1],
            pool_size,
            n_words,
            familiar: false,
            claimed: pool_size,
            answered: false,
            catch: false,
        });
    }
    let catches = [(2usize, false), (6, true)];
    for (v, (pool_size, with_fn)) in catches.into_iter().enumerate() {
        let mut lexicon = vec![(0, Some(0)), (1, Some(1))];
        let mut study = vec![(vec![0], vec![0]), (vec![1], vec![1])];
        let test = if with_fn {
            lexicon.push((2, None));
            study.push((vec![0, 2], vec![0, 0, 0]));
            vec![0, 2]
        } else {
            vec![0]
        };
        out.push(TrialDraft {
            kind: TrialKind::Catch { variant: v as u8 + 1 },
            lexicon,
            study,
            test,
            pool_size,
            n_words: if with_fn { 3 } else { 2 },
            familiar: false,
            claimed: 0,
            answered: true,
            catch: true,
        });
    }
    out
}

fn build_block(
    b: usize,
    draft: &TrialDraft,
    deck: &mut WordDeck,
    word_pool: &[Pseudoword],
    rng: &mut Rng,
) -> Block {
    let ws = deck.draw(draft.n_words, rng);
    let mut colors = ColorSymbol::first(N_COLORS);
    colors.shuffle(rng);

    let entries = draft
        .lexicon
        .iter()
        .map(|(w, m)| LexEntry {
            word: ws[*w].clone(),
            meaning: match m {
                Some(c) => Meaning::Primitive(colors[*c]),
                None => Meaning::RepeatThree,
            },
        })
        .collect();
    let lexicon = Lexicon::new(entries, word_pool.to_vec(), ColorSymbol::first(N_COLORS))
        .expect("trial lexicon is valid");

    let instr = |slots: &[usize]| {
        Instruction::new(slots.iter().map(|s| ws[*s].clone()).collect()).expect("nonempty")
    };
    let study: Vec<Item> = draft
        .study
        .iter()
        .enumerate()
        .map(|(i, (wslots, cslots))| Item {
            id: item_id(b, 's', i),
            instruction: instr(wslots),
            target: Some(OutputSeq(cslots.iter().map(|c| colors[*c]).collect())),
            is_catch: false,
        })
        .collect();

    let test_instr = instr(&draft.test);
    let target = if draft.answered {
        Some(
            interpret(&test_instr, &lexicon, &GrammarConfig::default())
                .expect("answered trial is well formed"),
        )
    } else {
        None
    };
    let test = vec![Item {
        id: item_id(b, 't', 0),
        instruction: test_instr,
        target,
        is_catch: draft.catch,
    }];

    let mut pool: Vec<ColorSymbol> = colors[..draft.pool_size].to_vec();
    pool.shuffle(rng);
    Block {
        kind: BlockKind::Trial(draft.kind),
        lexicon,
        pool,
        study,
        test,
        quiz: false,
        familiar: draft.familiar.then(|| colors[0]),
        assigned: colors[..draft.claimed].to_vec(),
    }
}

/// Generates the fourteen bias trials in random order.
pub fn generate_exp2(seed: u64) -> ExperimentSpec {
    let word_pool = words(&EXP2_WORD_POOL);
    let mut rng = rng::stream(seed, 1);
    let mut drafts = drafts();
    drafts.shuffle(&mut rng);
    let mut deck = WordDeck::new(word_pool.clone());
    let blocks: Vec<Block> = drafts
        .iter()
        .enumerate()
        .map(|(b, d)| build_block(b, d, &mut deck, &word_pool, &mut rng))
        .collect();
    let pool = &blocks[0].pool;
    ExperimentSpec {
        schema_version: SPEC_SCHEMA_VERSION,
        kind: ExperimentKind::Exp2,
        seed,
        practice: OutputSeq(vec![pool[0], pool[1]]),
        blocks,
    }
}
