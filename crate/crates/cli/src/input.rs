use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;
use thickflat_core::{Anf, FunctionContainer, FunctionInput};

use crate::Failure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    /// JSON container if the text starts with '{', bare ANF otherwise
    Auto,
    Json,
    Anf,
}

/// Reads a path, or standard input for "-".
pub fn read_source(path: &str) -> Result<String, Failure> {
    if path == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(|e| Failure::input(format!("stdin: {e}")))?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| Failure::input(format!("{path}: {e}")))
    }
}

/// Largest `k` appearing as `xk`, ignoring whitespace.
pub fn max_index(text: &str) -> usize {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let mut best = 0;
    let mut chars = compact.chars().peekable();
    while let Some(c) = chars.next() {
        if c != 'x' {
            continue;
        }
        let mut digits = String::new();
        while let Some(d) = chars.peek().copied().filter(char::is_ascii_digit) {
            digits.push(d);
            chars.next();
        }
        if let Ok(k) = digits.parse::<usize>() {
            best = best.max(k);
        }
    }
    best
}

pub fn parse_anf_text(text: &str, n: Option<usize>) -> Result<Anf, Failure> {
    let n = n.unwrap_or_else(|| max_index(text).max(1));
    Ok(Anf::parse(text.trim(), n)?)
}

pub fn load_function(path: &str, format: InputFormat, n: Option<usize>) -> Result<FunctionInput, Failure> {
    let text = read_source(path)?;
    let json = match format {
        InputFormat::Json => true,
        InputFormat::Anf => false,
        InputFormat::Auto => text.trim_start().starts_with('{'),
    };
    if json {
        let container = FunctionContainer::from_json(&text)?;
        if let Some(n) = n {
            if n != container.n {
                return Err(Failure::input(format!("--n {n} conflicts with container n = {}", container.n)));
            }
        }
        Ok(container.into_input()?)
    } else {
        Ok(FunctionInput::plain(parse_anf_text(&text, n)?))
    }
}

/// Decimal or `0x`-prefixed hexadecimal.
pub fn parse_seed(s: &str) -> Result<u64, String> {
    let s = s.trim().replace('_', "");
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse::<u64>(),
    };
    parsed.map_err(|e| format!("invalid seed {s:?}: {e}"))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serialises");
    s.push('\n');
    s
}

/// Writes to a file, or to standard output when `path` is `None` or "-".
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) if p != Path::new("-") => {
            fs::write(p, text).map_err(|e| Failure::input(format!("{}: {e}", p.display())))
        }
        _ => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| Failure::input(format!("stdout: {e}")))
        }
    }
}
