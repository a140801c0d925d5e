use alloc::string::ToString;
use alloc::vec::Vec;

use super::{parse, ColorSymbol, GrammarConfig, GrammarError, Instruction, Lexicon, OutputSeq, ParseTree};

#[derive(Clone, Copy)]
enum ScopeOrder {
    Reversed,
    Forward,
}

/// Denotation of a parse tree.
pub fn evaluate(
    tree: &ParseTree,
    lex: &Lexicon,
    cfg: &GrammarConfig,
) -> Result<OutputSeq, GrammarError> {
    eval_with(tree, lex, cfg, ScopeOrder::Reversed)
}

/// Denotation under the variant grammar in which the scope word concatenates
/// its arguments in input order instead of reversing them.
pub fn evaluate_forward_concat(
    tree: &ParseTree,
    lex: &Lexicon,
    cfg: &GrammarConfig,
) -> Result<OutputSeq, GrammarError> {
    eval_with(tree, lex, cfg, ScopeOrder::Forward)
}

fn eval_with(
    tree: &ParseTree,
    lex: &Lexicon,
    cfg: &GrammarConfig,
    order: ScopeOrder,
) -> Result<OutputSeq, GrammarError> {
    let mut out = Vec::new();
    eval_into(tree, lex, cfg.max_output_len, order, &mut out)?;
    Ok(OutputSeq(out))
}

fn too_long(len: usize, max: usize) -> Result<(), GrammarError> {
    if len > max {
        Err(GrammarError::OutputTooLong { len, max })
    } else {
        Ok(())
    }
}

fn eval_into(
    tree: &ParseTree,
    lex: &Lexicon,
    max: usize,
    order: ScopeOrder,
    out: &mut Vec<ColorSymbol>,
) -> Result<(), GrammarError> {
    match tree {
        ParseTree::Primitive(w) => {
            let c = lex
                .color_of(w.as_str())
                .ok_or_else(|| GrammarError::UnknownWord(w.to_string()))?;
            out.push(c);
        }
        ParseTree::RepeatThree(x) => {
            let start = out.len();
            eval_into(x, lex, max, order, out)?;
            let len = out.len() - start;
            too_long(start + 3 * len, max)?;
            for _ in 0..2 {
                out.extend_from_within(start..start + len);
            }
        }
        ParseTree::Alternate(x, y) => {
            let start = out.len();
            eval_into(x, lex, max, order, out)?;
            let xlen = out.len() - start;
            eval_into(y, lex, max, order, out)?;
            too_long(out.len() + xlen, max)?;
            out.extend_from_within(start..start + xlen);
        }
        ParseTree::ReverseConcat(x, y) => match order {
            ScopeOrder::Reversed => {
                eval_into(y, lex, max, order, out)?;
                eval_into(x, lex, max, order, out)?;
            }
            ScopeOrder::Forward => {
                eval_into(x, lex, max, order, out)?;
                eval_into(y, lex, max, order, out)?;
            }
        },
        ParseTree::Concat(ts) => {
            for t in ts {
                eval_into(t, lex, max, order, out)?;
            }
        }
    }
    too_long(out.len(), max)
}

/// Parse then evaluate.
pub fn interpret(
    instr: &Instruction,
    lex: &Lexicon,
    cfg: &GrammarConfig,
) -> Result<OutputSeq, GrammarError> {
    let tree = parse(instr, lex, cfg)?;
    evaluate(&tree, lex, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(s: &str) -> Result<OutputSeq, GrammarError> {
        interpret(&s.parse().unwrap(), &Lexicon::canonical(), &GrammarConfig::default())
    }

    fn seq(s: &str) -> OutputSeq {
        s.parse().unwrap()
    }

    #[test]
    fn worked_examples() {
        assert_eq!(run("dax fep").unwrap(), seq("RED RED RED"));
        assert_eq!(run("wif blicket dax").unwrap(), seq("GREEN RED GREEN"));
        assert_eq!(run("dax kiki lug").unwrap(), seq("BLUE RED"));
        assert_eq!(run("wif blicket dax kiki lug").unwrap(), seq("BLUE GREEN RED GREEN"));
        assert_eq!(run("lug blicket wif").unwrap(), seq("BLUE GREEN BLUE"));
    }

    #[test]
    fn held_out_primitive() {
        assert_eq!(run("zup").unwrap(), seq("COLOR4"));
        // (zup blicket lug) kiki (wif fep) = GGG ++ Y B Y
        assert_eq!(
            run("zup blicket lug kiki wif fep").unwrap(),
            seq("GREEN GREEN GREEN COLOR4 BLUE COLOR4")
        );
    }

    #[test]
    fn nested_scope_reverses_each_level() {
        assert_eq!(run("dax kiki wif kiki lug").unwrap(), seq("BLUE GREEN RED"));
    }

    #[test]
    fn forward_variant_keeps_input_order() {
        let lex = Lexicon::canonical();
        let cfg = GrammarConfig::default();
        let t = parse(&"dax kiki lug".parse().unwrap(), &lex, &cfg).unwrap();
        assert_eq!(evaluate_forward_concat(&t, &lex, &cfg).unwrap(), seq("RED BLUE"));
    }

    #[test]
    fn output_cap_is_enforced() {
        let lex = Lexicon::canonical();
        let cfg = GrammarConfig {
            max_output_len: 6,
            ..GrammarConfig::default()
        };
        let r = interpret(&"dax fep wif fep lug".parse().unwrap(), &lex, &cfg);
        assert_eq!(r, Err(GrammarError::OutputTooLong { len: 7, max: 6 }));
    }
}
