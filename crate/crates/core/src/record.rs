//! Line cursor shared by the plain-text record parsers.

use std::iter::{Enumerate, Peekable};
use std::str::Lines;

use crate::error::{Error, Result};

pub(crate) struct RecordCursor<'a> {
    lines: Peekable<Enumerate<Lines<'a>>>,
    last_line: usize,
}

impl<'a> RecordCursor<'a> {
    pub fn new(text: &'a str) -> Self {
        RecordCursor {
            lines: text.lines().enumerate().peekable(),
            last_line: 0,
        }
    }

    /// Next non-blank line with its 1-based number.
    pub fn next_line(&mut self) -> Option<(usize, &'a str)> {
        for (idx, line) in self.lines.by_ref() {
            self.last_line = idx + 1;
            let t = line.trim();
            if !t.is_empty() {
                return Some((idx + 1, t));
            }
        }
        None
    }

    pub fn expect_line(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let last = self.last_line;
        self.next_line()
            .ok_or_else(|| Error::parse(last + 1, format!("unexpected end of record, expected {what}")))
    }

    pub fn expect_keyword(&mut self, keyword: &str) -> Result<()> {
        let (ln, line) = self.expect_line(keyword)?;
        if line != keyword {
            return Err(Error::parse(ln, format!("expected '{keyword}', found '{line}'")));
        }
        Ok(())
    }

    pub fn expect_end(&mut self) -> Result<()> {
        match self.next_line() {
            Some((ln, _)) => Err(Error::parse(ln, "trailing content after record")),
            None => Ok(()),
        }
    }

    pub fn floats(&mut self, what: &str, count: usize) -> Result<Vec<f64>> {
        let (ln, line) = self.expect_line(what)?;
        let vals = crate::kernels::parse_floats(line).map_err(|m| Error::parse(ln, m))?;
        if vals.len() != count {
            return Err(Error::parse(
                ln,
                format!("expected {count} values for {what}, found {}", vals.len()),
            ));
        }
        Ok(vals)
    }
}

/// Parses `key=value` fields following a leading tag, e.g.
/// `model n=3 lambda=0.5`.
pub(crate) fn header_fields<'a>(line: &'a str, ln: usize, tag: &str) -> Result<Vec<(&'a str, &'a str)>> {
    let mut tokens = line.split_whitespace();
    if tokens.next() != Some(tag) {
        return Err(Error::parse(ln, format!("expected '{tag}' header")));
    }
    tokens
        .map(|tok| {
            tok.split_once('=')
                .ok_or_else(|| Error::parse(ln, format!("malformed header field '{tok}'")))
        })
        .collect()
}

pub(crate) fn field<'a>(fields: &[(&'a str, &'a str)], key: &str, ln: usize) -> Result<&'a str> {
    fields
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| Error::parse(ln, format!("missing header field '{key}'")))
}

pub(crate) fn parse_field<T: std::str::FromStr>(fields: &[(&str, &str)], key: &str, ln: usize) -> Result<T> {
    let raw = field(fields, key, ln)?;
    raw.parse()
        .map_err(|_| Error::parse(ln, format!("invalid value '{raw}' for '{key}'")))
}
