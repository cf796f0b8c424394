//! Text syntax for a party's per-DOF state choices.
//!
//! Either one symbol per DOF run together (`HLI`, `VLE`) or comma separated
//! (`V,+f,E`, `V,+f,-s`). Rectilinear states use the DOF's own letters
//! (`H/V`, `L/R`, `I/E`) or `0/1`; diagonal states are `+`/`-` with an
//! optional DOF suffix (`p`, `f`, `s`, then the DOF index).

use mdiqkd::state::DofLabel;
use mdiqkd::{DofChoice, EncodingChoice};

use crate::CliError;

pub fn parse_choice(text: &str) -> Result<EncodingChoice, CliError> {
    let err = |msg: String| CliError::Usage(format!("bad state choice {text:?}: {msg}"));
    let tokens: Vec<String> = if text.contains(',') {
        text.split(',').map(|t| t.trim().to_string()).collect()
    } else {
        tokenize(text).map_err(err)?
    };
    let per_dof = tokens
        .iter()
        .enumerate()
        .map(|(k, tok)| parse_token(tok, DofLabel::new(k)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    EncodingChoice::new(per_dof).map_err(|e| err(e.to_string()))
}

/// Splits a run-together string, attaching suffixes to `+`/`-` signs.
fn tokenize(text: &str) -> Result<Vec<String>, String> {
    let chars: Vec<char> = text.trim().chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        i += 1;
        if is_sign(c) {
            let suffix = DofLabel::new(tokens.len()).diagonal_suffix();
            let rest: String = chars[i..].iter().collect();
            let mut tok = c.to_string();
            if rest.starts_with(suffix.as_ref()) {
                tok.push_str(&suffix);
                i += suffix.chars().count();
            }
            tokens.push(tok);
        } else {
            tokens.push(c.to_string());
        }
    }
    if tokens.is_empty() {
        return Err("empty".into());
    }
    Ok(tokens)
}

fn is_sign(c: char) -> bool {
    matches!(c, '+' | '-' | '\u{2212}')
}

fn parse_token(tok: &str, dof: DofLabel) -> Result<DofChoice, String> {
    let mut chars = tok.chars();
    let first = chars
        .next()
        .ok_or_else(|| format!("empty entry for {dof}"))?;
    if is_sign(first) {
        let suffix: String = chars.collect();
        if !suffix.is_empty() && suffix != dof.diagonal_suffix() {
            return Err(format!(
                "{tok:?} has suffix {suffix:?} but {dof} uses {:?}",
                dof.diagonal_suffix()
            ));
        }
        return DofChoice::diagonal(u8::from(first != '+')).map_err(|e| e.to_string());
    }
    let bit = match tok {
        "0" => 0,
        "1" => 1,
        _ => dof
            .rectilinear_symbols()
            .iter()
            .position(|s| *s == tok)
            .ok_or_else(|| format!("{tok:?} is not a state of {dof}"))? as u8,
    };
    DofChoice::rectilinear(bit).map_err(|e| e.to_string())
}
