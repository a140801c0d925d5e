use alloc::boxed::Box;
use alloc::vec::Vec;

use super::{evaluate, GrammarConfig, Instruction, Lexicon, Meaning, OutputSeq, ParseTree, Pseudoword};

/// Largest instruction length [`enumerate_instructions`] will generate.
pub const MAX_ENUMERATION_WORDS: usize = 8;

/// Every well-formed instruction of at most `max_words` words (capped at
/// [`MAX_ENUMERATION_WORDS`]) with its denotation.
///
/// Trees are built generatively from the grammar's phrase structure rather
/// than by filtering the parser's output, so the result can serve as an
/// oracle for `parse`. Denotations longer than `cfg.max_output_len` are
/// skipped. Ordered by length, then by generation order.
pub fn enumerate_instructions(
    lex: &Lexicon,
    cfg: &GrammarConfig,
    max_words: usize,
) -> Vec<(Instruction, OutputSeq)> {
    let max_words = max_words.min(MAX_ENUMERATION_WORDS);
    let g = Generator::new(lex, cfg, max_words);
    let mut out = Vec::new();
    for n in 1..=max_words {
        for tree in &g.scopes[n] {
            let Ok(output) = evaluate(tree, lex, cfg) else {
                continue;
            };
            let words = tree.surface(lex);
            out.push((Instruction::new(words).expect("nonempty"), output));
        }
    }
    out
}

/// Trees indexed by surface length.
struct Generator {
    scopes: Vec<Vec<ParseTree>>,
}

impl Generator {
    fn new(lex: &Lexicon, cfg: &GrammarConfig, max: usize) -> Self {
        let prims: Vec<Pseudoword> = lex.primitives().map(|(w, _)| w.clone()).collect();
        let has = |m: Meaning| lex.word_for(m).is_some();
        let strict = cfg.strict_blicket_args;

        // Operands: primitives with optional repetition. Relaxed mode lets the
        // repeat word stack.
        let mut operands: Vec<Vec<ParseTree>> = alloc::vec![Vec::new(); max + 1];
        if max >= 1 {
            operands[1] = prims.iter().cloned().map(ParseTree::Primitive).collect();
        }
        if has(Meaning::RepeatThree) {
            for n in 2..=max {
                if strict && n > 2 {
                    break;
                }
                let wrapped: Vec<ParseTree> = operands[n - 1]
                    .iter()
                    .map(|t| ParseTree::RepeatThree(Box::new(t.clone())))
                    .collect();
                operands[n] = wrapped;
            }
        }

        // Phrases: an operand, or an alternation chain over operands.
        let mut phrases: Vec<Vec<ParseTree>> = operands.clone();
        if has(Meaning::Alternate) {
            if strict {
                if max >= 3 {
                    for x in &prims {
                        for y in &prims {
                            phrases[3].push(ParseTree::Alternate(
                                Box::new(ParseTree::Primitive(x.clone())),
                                Box::new(ParseTree::Primitive(y.clone())),
                            ));
                        }
                    }
                }
            } else {
                // chains[n]: left-nested alternation chains with at least one
                // alternation, total length n.
                let mut chains: Vec<Vec<ParseTree>> = alloc::vec![Vec::new(); max + 1];
                for n in 3..=max {
                    let mut here = Vec::new();
                    // The last link takes an operand of length k on the right.
                    for k in 1..=n - 2 {
                        let left_len = n - 1 - k;
                        let lefts: Vec<&ParseTree> = operands[left_len]
                            .iter()
                            .chain(chains[left_len].iter())
                            .collect();
                        for l in &lefts {
                            for r in &operands[k] {
                                here.push(ParseTree::Alternate(
                                    Box::new((*l).clone()),
                                    Box::new(r.clone()),
                                ));
                            }
                        }
                    }
                    chains[n] = here;
                }
                for n in 0..=max {
                    let extra = core::mem::take(&mut chains[n]);
                    phrases[n].extend(extra);
                }
            }
        }

        // Segments: one phrase, or an in-order concatenation of several.
        let mut segments: Vec<Vec<ParseTree>> = phrases.clone();
        if cfg.allow_concat {
            // seqs[n]: lists of >= 1 phrases with total length n.
            let mut seqs: Vec<Vec<Vec<ParseTree>>> = alloc::vec![Vec::new(); max + 1];
            for n in 1..=max {
                let mut here: Vec<Vec<ParseTree>> =
                    phrases[n].iter().map(|p| alloc::vec![p.clone()]).collect();
                for k in 1..n {
                    for head in &phrases[k] {
                        for tail in &seqs[n - k] {
                            let mut v = Vec::with_capacity(tail.len() + 1);
                            v.push(head.clone());
                            v.extend(tail.iter().cloned());
                            here.push(v);
                        }
                    }
                }
                seqs[n] = here;
            }
            for n in 1..=max {
                segments[n] = seqs[n]
                    .iter()
                    .map(|v| {
                        if v.len() == 1 {
                            v[0].clone()
                        } else {
                            ParseTree::Concat(v.clone())
                        }
                    })
                    .collect();
            }
        }

        // Scopes: a segment, or `segment R scope`.
        let mut scopes: Vec<Vec<ParseTree>> = segments.clone();
        if has(Meaning::ReverseConcat) {
            for n in 3..=max {
                let mut here = Vec::new();
                for k in 1..=n - 2 {
                    for l in &segments[k] {
                        for r in &scopes[n - 1 - k] {
                            here.push(ParseTree::ReverseConcat(
                                Box::new(l.clone()),
                                Box::new(r.clone()),
                            ));
                        }
                    }
                }
                scopes[n].extend(here);
            }
        }
        Generator { scopes }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::interpret;
    use alloc::collections::BTreeSet;

    #[test]
    fn one_word_instructions_are_the_primitives() {
        let lex = Lexicon::canonical();
        let all = enumerate_instructions(&lex, &GrammarConfig::default(), 1);
        assert_eq!(all.len(), 4);
    }

    #[test]
    fn two_words_without_concatenation() {
        let lex = Lexicon::canonical();
        let cfg = GrammarConfig {
            allow_concat: false,
            ..GrammarConfig::default()
        };
        // 4 primitives + 4 repeat phrases.
        assert_eq!(enumerate_instructions(&lex, &cfg, 2).len(), 8);
        // With concatenation the 16 ordered primitive pairs join in.
        assert_eq!(enumerate_instructions(&lex, &GrammarConfig::default(), 2).len(), 24);
    }

    #[test]
    fn enumeration_agrees_with_interpret_and_has_no_duplicates() {
        let lex = Lexicon::canonical();
        for cfg in [
            GrammarConfig::default(),
            GrammarConfig {
                strict_blicket_args: false,
                ..GrammarConfig::default()
            },
        ] {
            let all = enumerate_instructions(&lex, &cfg, 5);
            let mut seen = BTreeSet::new();
            for (instr, out) in &all {
                assert!(seen.insert(instr.clone()), "duplicate {instr}");
                assert_eq!(interpret(instr, &lex, &cfg).as_ref(), Ok(out), "{instr}");
            }
        }
    }

    #[test]
    fn requests_are_capped() {
        let lex = Lexicon::canonical();
        let cfg = GrammarConfig {
            allow_concat: false,
            ..GrammarConfig::default()
        };
        let a = enumerate_instructions(&lex, &cfg, 8).len();
        let b = enumerate_instructions(&lex, &cfg, 50).len();
        assert_eq!(a, b);
    }
}
