//! Molpro-style FCIDUMP text.

use std::fmt::Write as _;
use std::path::Path;

use super::FciProblem;
use crate::error::{Error, Result};

struct Header {
    norb: Option<usize>,
    nelec: Option<usize>,
    ms2: i64,
}

fn parse_header(text: &str, first_line: usize) -> Result<Header> {
    let mut h = Header {
        norb: None,
        nelec: None,
        ms2: 0,
    };
    let upper = text.trim_start().to_ascii_uppercase();
    if !upper.starts_with("&FCI") {
        return Err(Error::parse(first_line, "header must start with &FCI"));
    }
    let cleaned = upper[4..].replace("&END", " ").replace('/', " ");
    let mut key: Option<String> = None;
    for token in cleaned.split([',', ' ', '\t', '\n', '\r']).filter(|t| !t.is_empty()) {
        let (k, v) = match token.split_once('=') {
            Some((k, v)) => (Some(k.trim().to_ascii_uppercase()), v.trim()),
            None => (None, token),
        };
        if let Some(k) = k {
            key = Some(k);
        }
        if v.is_empty() {
            continue;
        }
        let int = |v: &str| {
            v.parse::<i64>()
                .map_err(|_| Error::parse(first_line, format!("bad integer {v:?} for {}", key.as_deref().unwrap_or("?"))))
        };
        match key.as_deref() {
            Some("NORB") => h.norb = Some(usize::try_from(int(v)?).map_err(|_| Error::parse(first_line, "negative NORB"))?),
            Some("NELEC") => {
                h.nelec = Some(usize::try_from(int(v)?).map_err(|_| Error::parse(first_line, "negative NELEC"))?)
            }
            Some("MS2") => h.ms2 = int(v)?,
            _ => {}
        }
    }
    Ok(h)
}

fn parse_value(s: &str) -> Option<f64> {
    s.replace(['D', 'd'], "e").parse().ok()
}

/// Parses an FCIDUMP.  `MS2` defaults to 0 when absent; `NORB` and `NELEC`
/// are required.  Orbital-energy records (`e i 0 0 0`) are ignored.
pub fn parse_fcidump(text: &str) -> Result<FciProblem> {
    let lines: Vec<&str> = text.lines().collect();
    let start = lines
        .iter()
        .position(|l| !l.trim().is_empty())
        .ok_or_else(|| Error::parse(1, "empty input"))?;
    let end = (start..lines.len())
        .find(|&i| {
            let l = lines[i].trim();
            l.to_ascii_uppercase().contains("&END") || l == "/" || l.ends_with('/')
        })
        .ok_or_else(|| Error::parse(start + 1, "header is not terminated by &END or /"))?;
    let header = parse_header(&lines[start..=end].join("\n"), start + 1)?;
    let norb = header.norb.ok_or_else(|| Error::parse(start + 1, "missing NORB"))?;
    let nelec = header.nelec.ok_or_else(|| Error::parse(start + 1, "missing NELEC"))?;
    let mut p = FciProblem::zeros(norb, nelec, header.ms2)?;

    for (number, line) in lines.iter().enumerate().skip(end + 1).map(|(i, l)| (i + 1, l.trim())) {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::parse(number, format!("expected 5 fields, found {}", fields.len())));
        }
        let value = parse_value(fields[0]).ok_or_else(|| Error::parse(number, format!("bad value {:?}", fields[0])))?;
        let mut idx = [0usize; 4];
        for (slot, f) in idx.iter_mut().zip(&fields[1..]) {
            *slot = f.parse().map_err(|_| Error::parse(number, format!("bad index {f:?}")))?;
            if *slot > norb {
                return Err(Error::parse(number, format!("index {slot} exceeds NORB = {norb}")));
            }
        }
        match idx {
            [0, 0, 0, 0] => p.e_core = value,
            [i, j, 0, 0] if i > 0 && j > 0 => p.set_h1(i - 1, j - 1, value),
            [_, 0, 0, 0] => {}
            [i, j, k, l] if i > 0 && j > 0 && k > 0 && l > 0 => p.set_eri(i - 1, j - 1, k - 1, l - 1, value),
            _ => return Err(Error::parse(number, format!("unsupported index pattern {idx:?}"))),
        }
    }
    Ok(p)
}

pub fn read_fcidump(path: impl AsRef<Path>) -> Result<FciProblem> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_fcidump(&text)
}

/// Emits the unique nonzero integrals (`i ≥ j`, `k ≥ l`, `ij ≥ kl`).
pub fn write_fcidump(p: &FciProblem) -> String {
    let n = p.norb;
    let mut out = String::new();
    let orbsym = vec!["1"; n].join(",");
    let _ = writeln!(out, " &FCI NORB={n},NELEC={},MS2={},", p.nelec, p.ms2);
    let _ = writeln!(out, "  ORBSYM={orbsym},");
    let _ = writeln!(out, "  ISYM=1,");
    let _ = writeln!(out, " &END");
    let pair = |i: usize, j: usize| i * (i + 1) / 2 + j;
    for i in 0..n {
        for j in 0..=i {
            for k in 0..n {
                for l in 0..=k {
                    if pair(i, j) < pair(k, l) {
                        continue;
                    }
                    let v = p.eri(i, j, k, l);
                    if v != 0.0 {
                        let _ = writeln!(out, "{v:24.16e} {:3} {:3} {:3} {:3}", i + 1, j + 1, k + 1, l + 1);
                    }
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..=i {
            let v = p.h1(i, j);
            if v != 0.0 {
                let _ = writeln!(out, "{v:24.16e} {:3} {:3} {:3} {:3}", i + 1, j + 1, 0, 0);
            }
        }
    }
    let _ = writeln!(out, "{:24.16e} {:3} {:3} {:3} {:3}", p.e_core, 0, 0, 0, 0);
    out
}

pub fn write_fcidump_file(p: &FciProblem, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_fcidump(p)).map_err(|e| Error::io(path, e))
}
