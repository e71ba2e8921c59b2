//! Text formats.
//!
//! Family file:
//! ```text
//! # comment
//! 2,3,3
//! context {"cols": [[[1,0,0],[1,0,0]]], "rows": []}
//! q=2;n=3;m=3;rows=100;010;001
//! ```
//! The header is `q,n,m`; the optional `context` line holds a restriction in the junta
//! component format; every other non-blank line is a matrix literal.
//!
//! Function file: header `q,n,m`, then `q^{nm}` rational values (`a` or `a/b`) in
//! enumeration order, separated by whitespace.
//!
//! Junta file: a JSON list of components `{"cols": [[v, w], ...], "rows": [[a, b], ...]}`.

use std::str::FromStr;

use num_rational::BigRational;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::families::{Family, Junta, Restriction};
use crate::fourier::DenseFunction;
use crate::gf::Field;
use crate::matspace::Mat;

fn content_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'))
}

fn parse_header(line: Option<&str>) -> Result<(Field, usize, usize)> {
    let line = line.ok_or_else(|| Error::Parse("missing q,n,m header".into()))?;
    let parts: Vec<usize> = line
        .split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad header {line:?}"))))
        .collect::<Result<_>>()?;
    let [q, n, m] = parts[..] else {
        return Err(Error::Parse(format!("header must be q,n,m: {line:?}")));
    };
    let q = u32::try_from(q).map_err(|_| Error::Parse("q too large".into()))?;
    Ok((Field::gf(q)?, n, m))
}

pub fn parse_family(text: &str) -> Result<Family> {
    let mut lines = content_lines(text);
    let (field, n, m) = parse_header(lines.next())?;
    let mut context = None;
    let mut members = Vec::new();
    for line in lines {
        if let Some(rest) = line.strip_prefix("context") {
            if context.is_some() {
                return Err(Error::Parse("more than one context line".into()));
            }
            let v: Value = serde_json::from_str(rest.trim()).map_err(|e| Error::Parse(format!("context: {e}")))?;
            context = Some(Restriction::from_json(&field, n, m, &v)?);
            continue;
        }
        let a = Mat::parse_literal_in(&field, line)?;
        if a.shape() != (n, m) {
            return Err(Error::Parse(format!("{line:?} is not {n}x{m}")));
        }
        members.push(a);
    }
    Family::new(&field, n, m, members, context)
}

pub fn write_family(f: &Family) -> String {
    let (n, m) = f.shape();
    let mut out = format!("{},{},{}\n", f.field().q(), n, m);
    if let Some(ctx) = f.context() {
        out += &format!("context {}\n", ctx.to_json());
    }
    for a in f.members() {
        out += &a.to_literal();
        out.push('\n');
    }
    out
}

pub fn parse_function(text: &str) -> Result<DenseFunction> {
    let mut lines = content_lines(text);
    let (field, n, m) = parse_header(lines.next())?;
    let values: Vec<BigRational> = lines
        .flat_map(str::split_whitespace)
        .map(|tok| BigRational::from_str(tok).map_err(|_| Error::Parse(format!("bad rational {tok:?}"))))
        .collect::<Result<_>>()?;
    DenseFunction::from_rationals(&field, n, m, &values)
}

pub fn write_function(f: &DenseFunction) -> Result<String> {
    let (n, m) = f.shape();
    let mut out = format!("{},{},{}\n", f.field().q(), n, m);
    for v in f.rational_values()? {
        out += &v.to_string();
        out.push('\n');
    }
    Ok(out)
}

pub fn write_junta(j: &Junta) -> String {
    let comps: Vec<Value> = j.components().iter().map(Restriction::to_json).collect();
    serde_json::to_string_pretty(&comps).expect("json")
}

/// Reads a junta file for the given space and declared `(C, r)`.
pub fn parse_junta(field: &Field, n: usize, m: usize, text: &str, c: usize, r: usize) -> Result<Junta> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let comps = v.as_array().ok_or_else(|| Error::Parse("junta file must be a JSON list".into()))?;
    let comps = comps.iter().map(|c| Restriction::from_json(field, n, m, c)).collect::<Result<_>>()?;
    Junta::new(field, n, m, comps, c, r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_round_trip() {
        let text = "# two maps\n2,2,2\ncontext {\"cols\": [[[1,0],[1,0]]], \"rows\": []}\nq=2;n=2;m=2;rows=10;01\nq=2;n=2;m=2;rows=11;00\n";
        let f = parse_family(text).unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f.measure(), BigRational::new(2.into(), 4.into()));
        assert_eq!(parse_family(&write_family(&f)).unwrap(), f);
        assert!(parse_family("2,2\n").is_err());
        assert!(parse_family("2,2,2\nq=2;n=1;m=2;rows=10\n").is_err());
        // a member outside the context
        assert!(parse_family("2,2,2\ncontext {\"cols\": [[[1,0],[1,0]]]}\nq=2;n=2;m=2;rows=00;00\n").is_err());
    }

    #[test]
    fn function_round_trip() {
        let text = "2,1,1\n1/2\n3\n";
        let f = parse_function(text).unwrap();
        assert_eq!(parse_function(&write_function(&f).unwrap()).unwrap(), f);
        assert!(parse_function("2,1,1\n1\n").is_err());
        assert!(parse_function("2,1,1\n1\nx\n").is_err());
    }

    #[test]
    fn junta_round_trip() {
        let field = Field::gf(2).unwrap();
        let r = Restriction::new(&field, 2, 2, vec![(vec![1, 0], vec![0, 1])], vec![(vec![0, 1], vec![1, 1])]).unwrap();
        let j = Junta::new(&field, 2, 2, vec![r, Restriction::empty(&field, 2, 2)], 2, 2).unwrap();
        assert_eq!(parse_junta(&field, 2, 2, &write_junta(&j), 2, 2).unwrap(), j);
        assert!(parse_junta(&field, 2, 2, "{}", 1, 1).is_err());
    }
}
