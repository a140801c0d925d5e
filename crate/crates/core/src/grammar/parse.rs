use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{GrammarConfig, GrammarError, Instruction, Lexicon, Meaning, ParseTree, Pseudoword};

#[derive(Clone, Copy)]
enum Token<'a> {
    Prim(&'a Pseudoword),
    Repeat(&'a Pseudoword),
    Alternate(&'a Pseudoword),
    Reverse(&'a Pseudoword),
}

/// Operands after the repeat word has been folded in.
enum Atom {
    Operand(ParseTree),
    Alternate,
}

fn malformed(msg: String) -> GrammarError {
    GrammarError::MalformedInstruction(msg)
}

/// Parses an instruction into its (unique) tree. See the module docs for the
/// precedence rules.
pub fn parse(
    instr: &Instruction,
    lex: &Lexicon,
    cfg: &GrammarConfig,
) -> Result<ParseTree, GrammarError> {
    let tokens = instr
        .words()
        .iter()
        .map(|w| match lex.meaning(w.as_str()) {
            Some(Meaning::Primitive(_)) => Ok(Token::Prim(w)),
            Some(Meaning::RepeatThree) => Ok(Token::Repeat(w)),
            Some(Meaning::Alternate) => Ok(Token::Alternate(w)),
            Some(Meaning::ReverseConcat) => Ok(Token::Reverse(w)),
            None => Err(GrammarError::UnknownWord(w.to_string())),
        })
        .collect::<Result<Vec<_>, _>>()?;
    parse_scope(&tokens, cfg)
}

fn parse_scope(tokens: &[Token<'_>], cfg: &GrammarConfig) -> Result<ParseTree, GrammarError> {
    let split = tokens.iter().position(|t| matches!(t, Token::Reverse(_)));
    match split {
        None => parse_segment(tokens, cfg),
        Some(k) => {
            let (left, right) = (&tokens[..k], &tokens[k + 1..]);
            if left.is_empty() || right.is_empty() {
                let Token::Reverse(w) = tokens[k] else { unreachable!() };
                return Err(malformed(alloc::format!(
                    "`{w}` needs an argument on both sides"
                )));
            }
            Ok(ParseTree::ReverseConcat(
                Box::new(parse_segment(left, cfg)?),
                Box::new(parse_scope(right, cfg)?),
            ))
        }
    }
}

fn parse_segment(tokens: &[Token<'_>], cfg: &GrammarConfig) -> Result<ParseTree, GrammarError> {
    let strict = cfg.strict_blicket_args;

    let mut atoms: Vec<Atom> = Vec::with_capacity(tokens.len());
    for tok in tokens {
        match *tok {
            Token::Prim(w) => atoms.push(Atom::Operand(ParseTree::Primitive(w.clone()))),
            Token::Alternate(_) => atoms.push(Atom::Alternate),
            Token::Repeat(w) => match atoms.pop() {
                Some(Atom::Operand(x)) => {
                    if strict && !matches!(x, ParseTree::Primitive(_)) {
                        return Err(malformed(alloc::format!(
                            "`{w}` takes a single preceding primitive"
                        )));
                    }
                    atoms.push(Atom::Operand(ParseTree::RepeatThree(Box::new(x))));
                }
                _ => {
                    return Err(malformed(alloc::format!(
                        "`{w}` has no preceding argument"
                    )))
                }
            },
            Token::Reverse(_) => unreachable!("segments never contain the scope word"),
        }
    }

    let alt_word = || {
        tokens
            .iter()
            .find_map(|t| match t {
                Token::Alternate(w) => Some(w.to_string()),
                _ => None,
            })
            .unwrap_or_default()
    };

    let mut phrases: Vec<ParseTree> = Vec::new();
    let mut it = atoms.into_iter().peekable();
    while let Some(atom) = it.next() {
        let Atom::Operand(mut phrase) = atom else {
            return Err(malformed(alloc::format!(
                "`{}` has no preceding argument",
                alt_word()
            )));
        };
        while matches!(it.peek(), Some(Atom::Alternate)) {
            it.next();
            let rhs = match it.next() {
                Some(Atom::Operand(y)) => y,
                _ => {
                    return Err(malformed(alloc::format!(
                        "`{}` has no following argument",
                        alt_word()
                    )))
                }
            };
            if strict {
                if !matches!(phrase, ParseTree::Primitive(_))
                    || !matches!(rhs, ParseTree::Primitive(_))
                {
                    return Err(malformed(alloc::format!(
                        "`{}` takes a primitive on each side",
                        alt_word()
                    )));
                }
                phrase = ParseTree::Alternate(Box::new(phrase), Box::new(rhs));
                if matches!(it.peek(), Some(Atom::Alternate)) {
                    return Err(malformed(alloc::format!(
                        "`{}` takes a primitive on each side",
                        alt_word()
                    )));
                }
            } else {
                phrase = ParseTree::Alternate(Box::new(phrase), Box::new(rhs));
            }
        }
        phrases.push(phrase);
    }

    match phrases.len() {
        0 => Err(GrammarError::EmptyInstruction),
        1 => Ok(phrases.pop().expect("one phrase")),
        _ if cfg.allow_concat => Ok(ParseTree::Concat(phrases)),
        _ => Err(malformed(
            "juxtaposed phrases while concatenation is disabled".to_string(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Result<ParseTree, GrammarError> {
        parse(&s.parse().unwrap(), &Lexicon::canonical(), &GrammarConfig::default())
    }

    fn prim(w: &str) -> Box<ParseTree> {
        Box::new(ParseTree::Primitive(Pseudoword::new(w).unwrap()))
    }

    #[test]
    fn single_primitive() {
        assert_eq!(p("dax").unwrap(), *prim("dax"));
    }

    #[test]
    fn reverse_concat_of_primitives() {
        assert_eq!(
            p("dax kiki lug").unwrap(),
            ParseTree::ReverseConcat(prim("dax"), prim("lug"))
        );
    }

    #[test]
    fn scope_word_outranks_the_others() {
        assert_eq!(
            p("zup blicket wif kiki dax fep").unwrap(),
            ParseTree::ReverseConcat(
                Box::new(ParseTree::Alternate(prim("zup"), prim("wif"))),
                Box::new(ParseTree::RepeatThree(prim("dax"))),
            )
        );
    }

    #[test]
    fn leftmost_scope_split() {
        assert_eq!(
            p("dax kiki wif kiki lug").unwrap(),
            ParseTree::ReverseConcat(
                prim("dax"),
                Box::new(ParseTree::ReverseConcat(prim("wif"), prim("lug")))
            )
        );
    }

    #[test]
    fn juxtaposition_concatenates() {
        assert_eq!(
            p("dax fep wif").unwrap(),
            ParseTree::Concat(alloc::vec![
                ParseTree::RepeatThree(prim("dax")),
                *prim("wif")
            ])
        );
    }

    #[test]
    fn malformed_inputs() {
        for bad in [
            "fep",
            "blicket",
            "kiki",
            "dax kiki",
            "kiki dax",
            "dax blicket",
            "blicket dax",
            "dax fep fep",
            "dax blicket wif fep",
            "dax fep blicket wif",
            "dax blicket wif blicket lug",
            "dax kiki kiki lug",
        ] {
            assert!(
                matches!(p(bad), Err(GrammarError::MalformedInstruction(_))),
                "{bad} should be malformed"
            );
        }
        assert_eq!(p("dax toma"), Err(GrammarError::UnknownWord("toma".into())));
    }

    #[test]
    fn relaxed_mode_accepts_phrase_arguments() {
        let cfg = GrammarConfig {
            strict_blicket_args: false,
            ..GrammarConfig::default()
        };
        let t = parse(&"dax blicket wif fep".parse().unwrap(), &Lexicon::canonical(), &cfg).unwrap();
        assert_eq!(
            t,
            ParseTree::Alternate(prim("dax"), Box::new(ParseTree::RepeatThree(prim("wif"))))
        );
    }

    #[test]
    fn concat_can_be_disabled() {
        let cfg = GrammarConfig {
            allow_concat: false,
            ..GrammarConfig::default()
        };
        let r = parse(&"dax wif".parse().unwrap(), &Lexicon::canonical(), &cfg);
        assert!(matches!(r, Err(GrammarError::MalformedInstruction(_))));
    }

    #[test]
    fn composition_counts() {
        assert_eq!(p("dax").unwrap().count_compositions(), 0);
        assert_eq!(p("wif blicket dax kiki lug").unwrap().count_compositions(), 2);
        assert_eq!(p("zup blicket wif kiki dax fep").unwrap().count_compositions(), 3);
        assert_eq!(p("dax wif").unwrap().count_compositions(), 0);
    }
}
