//! Plain-text channel files.
//!
//! ```text
//! # optional comment lines
//! s d r t sigma2
//! H_SR r s
//! re,im re,im ...      (one line per row)
//! H_SD d s
//! ...
//! H_TR r t
//! H_TD d t
//! S_XT t t             (optional, identity when absent)
//! ```
//!
//! Values are written with shortest round-trip formatting, so a
//! write/read cycle is bit-exact.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};

use super::ChannelRealization;

const NAMES: [&str; 5] = ["H_SR", "H_SD", "H_TR", "H_TD", "S_XT"];

pub fn write_channel(ch: &ChannelRealization) -> String {
    write_channel_with_comments(ch, &[])
}

pub(crate) fn write_channel_with_comments(ch: &ChannelRealization, comments: &[String]) -> String {
    let p = ch.profile();
    let mut out = String::new();
    for line in comments {
        let _ = writeln!(out, "# {line}");
    }
    let _ = writeln!(out, "{} {} {} {} {}", p.s, p.d, p.r, p.t, ch.sigma2());
    let blocks = [ch.h_sr(), ch.h_sd(), ch.h_tr(), ch.h_td(), ch.s_xt()];
    for (name, m) in NAMES.iter().zip(blocks) {
        let _ = writeln!(out, "{name} {} {}", m.nrows(), m.ncols());
        if m.ncols() == 0 {
            continue;
        }
        for i in 0..m.nrows() {
            let row: Vec<String> = (0..m.ncols())
                .map(|j| format!("{},{}", m[(i, j)].re, m[(i, j)].im))
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    out
}

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim_start().starts_with('#'))
            .flat_map(|(n, l)| l.split_whitespace().map(move |tok| (n + 1, tok)))
            .collect();
        Self { items, pos: 0 }
    }

    fn line(&self) -> usize {
        self.items
            .get(self.pos)
            .or_else(|| self.items.last())
            .map_or(1, |t| t.0)
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let tok = self.items.get(self.pos).copied().ok_or_else(|| Error::Parse {
            line: self.line(),
            msg: format!("unexpected end of input, expected {what}"),
        })?;
        self.pos += 1;
        Ok(tok)
    }

    fn parse<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        let (line, tok) = self.next(what)?;
        tok.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("could not parse {what} from {tok:?}"),
        })
    }

    fn done(&self) -> bool {
        self.pos >= self.items.len()
    }
}

fn parse_entry(line: usize, tok: &str) -> Result<crate::linalg::C64> {
    let err = || Error::Parse {
        line,
        msg: format!("expected re,im pair, got {tok:?}"),
    };
    let (re, im) = tok.split_once(',').ok_or_else(err)?;
    Ok(c(re.parse().map_err(|_| err())?, im.parse().map_err(|_| err())?))
}

pub fn read_channel(text: &str) -> Result<ChannelRealization> {
    let mut toks = Tokens::new(text);
    let s: usize = toks.parse("s")?;
    let d: usize = toks.parse("d")?;
    let r: usize = toks.parse("r")?;
    let t: usize = toks.parse("t")?;
    let sigma2: f64 = toks.parse("sigma2")?;
    let expected: HashMap<&str, (usize, usize)> = [
        ("H_SR", (r, s)),
        ("H_SD", (d, s)),
        ("H_TR", (r, t)),
        ("H_TD", (d, t)),
        ("S_XT", (t, t)),
    ]
    .into_iter()
    .collect();

    let mut found: HashMap<&str, CMatrix> = HashMap::new();
    while !toks.done() {
        let (line, name) = toks.next("matrix name")?;
        let key = *NAMES.iter().find(|n| **n == name).ok_or_else(|| Error::Parse {
            line,
            msg: format!("unknown matrix {name:?}"),
        })?;
        let rows: usize = toks.parse("row count")?;
        let cols: usize = toks.parse("column count")?;
        if expected[key] != (rows, cols) {
            return Err(Error::Parse {
                line,
                msg: format!("{key} is {rows}x{cols}, header implies {}x{}", expected[key].0, expected[key].1),
            });
        }
        if found.contains_key(key) {
            return Err(Error::Parse {
                line,
                msg: format!("{key} given twice"),
            });
        }
        let mut m = CMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let (line, tok) = toks.next("matrix entry")?;
                m[(i, j)] = parse_entry(line, tok)?;
            }
        }
        found.insert(key, m);
    }
    let mut take = |name: &str| {
        found.remove(name).ok_or_else(|| Error::Parse {
            line: 1,
            msg: format!("missing matrix {name}"),
        })
    };
    let h_sr = take("H_SR")?;
    let h_sd = take("H_SD")?;
    let h_tr = take("H_TR")?;
    let h_td = take("H_TD")?;
    let s_xt = found.remove("S_XT");
    ChannelRealization::new(h_sr, h_sd, h_tr, h_td, sigma2, s_xt)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SISO: &str = "1 1 1 1 0.5\nH_SR 1 1\n1,0\nH_SD 1 1\n0.5,-0.25\nH_TR 1 1\n2,0\nH_TD 1 1\n1,1\n";

    #[test]
    fn reads_minimal_file_with_default_interference() {
        let ch = read_channel(SISO).unwrap();
        assert_eq!(ch.sigma2(), 0.5);
        assert_eq!(ch.h_sd()[(0, 0)], c(0.5, -0.25));
        assert_eq!(ch.s_xt()[(0, 0)], c(1.0, 0.0));
    }

    #[test]
    fn write_then_read_is_exact() {
        let ch = read_channel(SISO).unwrap();
        let again = read_channel(&write_channel(&ch)).unwrap();
        assert_eq!(ch, again);
    }

    #[test]
    fn zero_interferers_round_trip() {
        let text = "2 1 1 0 1\nH_SR 1 2\n1,0 0,1\nH_SD 1 2\n0.3,0 1e-3,2\nH_TR 1 0\nH_TD 1 0\n";
        let ch = read_channel(text).unwrap();
        assert_eq!(ch.profile().t, 0);
        assert_eq!(read_channel(&write_channel(&ch)).unwrap(), ch);
    }

    #[test]
    fn reports_errors_with_line_numbers() {
        let bad = SISO.replace("0.5,-0.25", "0.5;-0.25");
        match read_channel(&bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("unexpected {other:?}"),
        }
        assert!(read_channel("1 1 1 1 0.5\nH_SR 2 1\n1,0\n2,0\n").is_err());
        assert!(read_channel("1 1 1 1 0.5\nH_SR 1 1\n1,0\n").is_err());
    }
}
