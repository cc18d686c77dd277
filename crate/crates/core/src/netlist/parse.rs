//! Line-based netlist text format.
//!
//! ```text
//! module <name>
//! input <net> [<net> ...]
//! key <net> [<net> ...]
//! output <net> [<net> ...]
//! gate <KIND> <out> <in1> [<in2>]
//! endmodule
//! ```
//!
//! `#` starts a comment. Declarations may span several lines of the same
//! keyword; the serializer emits one line per non-empty port class.

use std::fmt::Write as _;

use super::{is_valid_net_name, Gate, GateKind, Netlist, NetlistError, Result};

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let code = match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    };
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, c) in code.char_indices() {
        match (c.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                tokens.push(Token {
                    text: &code[s..i],
                    column: code[..s].chars().count() + 1,
                });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        tokens.push(Token {
            text: &code[s..],
            column: code[..s].chars().count() + 1,
        });
    }
    tokens
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> NetlistError {
    NetlistError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn net_name(tok: &Token<'_>, line: usize) -> Result<String> {
    if is_valid_net_name(tok.text) {
        Ok(tok.text.to_owned())
    } else {
        Err(syntax(
            line,
            tok.column,
            format!("invalid net name `{}`", tok.text),
        ))
    }
}

pub fn parse(text: &str) -> Result<Netlist> {
    let mut name: Option<String> = None;
    let mut ended = false;
    let mut pis = Vec::new();
    let mut keys = Vec::new();
    let mut pos = Vec::new();
    let mut gates = Vec::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let tokens = tokenize(raw);
        let Some(head) = tokens.first() else { continue };

        if ended {
            return Err(syntax(line, head.column, "content after `endmodule`"));
        }
        if name.is_none() {
            if head.text != "module" {
                return Err(syntax(line, head.column, "expected `module <name>`"));
            }
            match tokens.as_slice() {
                [_, n] => name = Some(net_name(n, line)?),
                _ => return Err(syntax(line, head.column, "`module` takes exactly one name")),
            }
            continue;
        }

        match head.text {
            "input" | "key" | "output" => {
                if tokens.len() < 2 {
                    return Err(syntax(
                        line,
                        head.column,
                        format!("`{}` needs at least one net", head.text),
                    ));
                }
                let target = match head.text {
                    "input" => &mut pis,
                    "key" => &mut keys,
                    _ => &mut pos,
                };
                for tok in &tokens[1..] {
                    target.push(net_name(tok, line)?);
                }
            }
            "gate" => {
                let Some(kind_tok) = tokens.get(1) else {
                    return Err(syntax(line, head.column, "`gate` needs a kind and nets"));
                };
                let kind: GateKind = kind_tok
                    .text
                    .parse()
                    .map_err(|m: String| syntax(line, kind_tok.column, m))?;
                let Some(out_tok) = tokens.get(2) else {
                    return Err(syntax(line, kind_tok.column, "`gate` needs an output net"));
                };
                let output = net_name(out_tok, line)?;
                let inputs = tokens[3..]
                    .iter()
                    .map(|t| net_name(t, line))
                    .collect::<Result<Vec<_>>>()?;
                gates.push(Gate::new(kind, output, inputs)?);
            }
            "endmodule" => {
                if tokens.len() != 1 {
                    return Err(syntax(
                        line,
                        tokens[1].column,
                        "`endmodule` takes no arguments",
                    ));
                }
                ended = true;
            }
            "module" => return Err(syntax(line, head.column, "nested `module`")),
            other => {
                return Err(syntax(
                    line,
                    head.column,
                    format!("unknown keyword `{other}`"),
                ))
            }
        }
    }

    let Some(name) = name else {
        return Err(syntax(last_line.max(1), 1, "missing `module` header"));
    };
    if !ended {
        return Err(syntax(last_line.max(1), 1, "missing `endmodule`"));
    }
    Netlist::new(name, pis, keys, pos, gates)
}

pub fn serialize(n: &Netlist) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "module {}", n.name());
    for (keyword, nets) in [
        ("input", n.primary_inputs()),
        ("key", n.key_inputs()),
        ("output", n.primary_outputs()),
    ] {
        if !nets.is_empty() {
            let _ = writeln!(out, "{keyword} {}", nets.join(" "));
        }
    }
    for g in n.gates() {
        let _ = writeln!(out, "gate {} {} {}", g.kind, g.output, g.inputs.join(" "));
    }
    out.push_str("endmodule\n");
    out
}
