//! Plain-text integral files.
//!
//! ```text
//! HF d=2 nocc=1 enuc=0.7142857142857143
//! S
//! 1 1 1.0
//! 1 2 0.6593
//! H
//! ...
//! G
//! 1 1 1 1 0.7746
//! ```
//!
//! Indices are 1-based. `S` and `H` records may list either triangle; `G`
//! records are chemists' `(ij|kl)` and any one member of a symmetry orbit is
//! enough. Unlisted entries are zero. `#` starts a comment.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::costs::IntegralSet;
use crate::error::{Error, Result};
use crate::linalg::Mat;

const CONFLICT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    S,
    H,
    G,
}

struct Parser<'a> {
    path: &'a Path,
    line: usize,
}

impl Parser<'_> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line: self.line,
            msg: msg.into(),
        }
    }

    fn index(&self, tok: &str, d: usize) -> Result<usize> {
        let i: usize = tok
            .parse()
            .map_err(|_| self.err(format!("expected an index, found `{tok}`")))?;
        if i == 0 || i > d {
            return Err(self.err(format!("index {i} outside 1..={d}")));
        }
        Ok(i - 1)
    }

    fn real(&self, tok: &str) -> Result<f64> {
        let x: f64 = tok
            .parse()
            .map_err(|_| self.err(format!("expected a number, found `{tok}`")))?;
        if !x.is_finite() {
            return Err(self.err(format!("non-finite value `{tok}`")));
        }
        Ok(x)
    }
}

struct Header {
    d: usize,
    nocc: usize,
    enuc: f64,
}

fn parse_header(p: &Parser<'_>, tokens: &[&str]) -> Result<Header> {
    if tokens.first() != Some(&"HF") {
        return Err(p.err("expected header `HF d=<d> nocc=<N> enuc=<real>`"));
    }
    let (mut d, mut nocc, mut enuc) = (None, None, None);
    for tok in &tokens[1..] {
        let (key, val) = tok
            .split_once('=')
            .ok_or_else(|| p.err(format!("header field `{tok}` is not key=value")))?;
        match key {
            "d" => d = Some(val.parse::<usize>().map_err(|_| p.err(format!("bad d `{val}`")))?),
            "nocc" => {
                nocc = Some(val.parse::<usize>().map_err(|_| p.err(format!("bad nocc `{val}`")))?)
            }
            "enuc" => enuc = Some(p.real(val)?),
            other => return Err(p.err(format!("unknown header field `{other}`"))),
        }
    }
    match (d, nocc, enuc) {
        (Some(d), Some(nocc), Some(enuc)) if d > 0 => Ok(Header { d, nocc, enuc }),
        (Some(0), ..) => Err(p.err("d must be positive")),
        _ => Err(p.err("header needs d=, nocc= and enuc=")),
    }
}

/// Dense tensor slot assignment that rejects inconsistent duplicates.
struct Filled {
    values: Vec<f64>,
    set: Vec<bool>,
}

impl Filled {
    fn new(len: usize) -> Self {
        Self {
            values: vec![0.0; len],
            set: vec![false; len],
        }
    }

    /// Assigns `value` to every slot of an orbit. Slots already written keep
    /// their value so each orbit stays exactly symmetric.
    fn assign(&mut self, slots: &[usize], value: f64) -> std::result::Result<(), f64> {
        for &s in slots {
            if self.set[s] && (self.values[s] - value).abs() > CONFLICT_TOL {
                return Err(self.values[s]);
            }
        }
        for &s in slots {
            if !self.set[s] {
                self.values[s] = value;
                self.set[s] = true;
            }
        }
        Ok(())
    }
}

/// The eight chemists'-notation index tuples equal to `(ij|kl)`.
pub fn chemists_orbit(i: usize, j: usize, k: usize, l: usize) -> [(usize, usize, usize, usize); 8] {
    [
        (i, j, k, l),
        (j, i, k, l),
        (i, j, l, k),
        (j, i, l, k),
        (k, l, i, j),
        (l, k, i, j),
        (k, l, j, i),
        (l, k, j, i),
    ]
}

pub fn parse_integrals(text: &str, path: &Path) -> Result<IntegralSet> {
    let mut p = Parser { path, line: 0 };
    let mut header: Option<Header> = None;
    let mut section: Option<Section> = None;
    let mut s = Filled::new(0);
    let mut h = Filled::new(0);
    let mut g = Filled::new(0);

    for (lineno, raw) in text.lines().enumerate() {
        p.line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let Some(hd) = &header else {
            let parsed = parse_header(&p, &tokens)?;
            let d = parsed.d;
            s = Filled::new(d * d);
            h = Filled::new(d * d);
            g = Filled::new(d * d * d * d);
            header = Some(parsed);
            continue;
        };
        let d = hd.d;
        match tokens.as_slice() {
            ["S"] => section = Some(Section::S),
            ["H"] => section = Some(Section::H),
            ["G"] => section = Some(Section::G),
            _ => match section {
                None => return Err(p.err("record before any S, H or G section")),
                Some(sec @ (Section::S | Section::H)) => {
                    let [i, j, v] = tokens.as_slice() else {
                        return Err(p.err(format!(
                            "expected `i j value`, found {} fields",
                            tokens.len()
                        )));
                    };
                    let (i, j, v) = (p.index(i, d)?, p.index(j, d)?, p.real(v)?);
                    let (name, target) = if sec == Section::S { ("S", &mut s) } else { ("H", &mut h) };
                    target.assign(&[i + j * d, j + i * d], v).map_err(|old| {
                        Error::Ingestion(format!(
                            "{}:{}: {name}({}, {}) = {v} conflicts with earlier value {old}",
                            path.display(),
                            p.line,
                            i + 1,
                            j + 1
                        ))
                    })?;
                }
                Some(Section::G) => {
                    let [i, j, k, l, v] = tokens.as_slice() else {
                        return Err(p.err(format!(
                            "expected `i j k l value`, found {} fields",
                            tokens.len()
                        )));
                    };
                    let (i, j, k, l) = (p.index(i, d)?, p.index(j, d)?, p.index(k, d)?, p.index(l, d)?);
                    let v = p.real(v)?;
                    let slots: Vec<usize> = chemists_orbit(i, j, k, l)
                        .iter()
                        .map(|&(a, b, c, e)| ((a * d + b) * d + c) * d + e)
                        .collect();
                    g.assign(&slots, v).map_err(|old| {
                        Error::Ingestion(format!(
                            "{}:{}: ({}{}|{}{}) = {v} conflicts with symmetric entry {old}",
                            path.display(),
                            p.line,
                            i + 1,
                            j + 1,
                            k + 1,
                            l + 1
                        ))
                    })?;
                }
            },
        }
    }

    let Some(hd) = header else {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: p.line.max(1),
            msg: "missing `HF` header".into(),
        });
    };
    let d = hd.d;
    let s = Mat::from_vec(d, d, s.values);
    let h = Mat::from_vec(d, d, h.values);
    IntegralSet::from_chemists(hd.nocc, s, h, &g.values, hd.enuc)
        .map_err(|e| Error::Ingestion(format!("{}: {e}", path.display())))
}

pub fn read_integrals(path: impl AsRef<Path>) -> Result<IntegralSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Ingestion(format!("cannot read {}: {e}", path.display())))?;
    parse_integrals(&text, path)
}

/// Shortest representation that parses back to the same bits.
pub fn fmt_real(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Serializes `ints` with upper-triangle `S`/`H` records and one canonical
/// `G` record per nonzero symmetry orbit.
pub fn format_integrals(ints: &IntegralSet) -> String {
    let d = ints.d();
    let mut out = String::new();
    let _ = writeln!(out, "HF d={d} nocc={} enuc={}", ints.n_occ(), fmt_real(ints.e_nuc()));
    for (name, m) in [("S", ints.overlap()), ("H", ints.core_hamiltonian())] {
        let _ = writeln!(out, "{name}");
        for i in 0..d {
            for j in i..d {
                if m[(i, j)] != 0.0 {
                    let _ = writeln!(out, "{} {} {}", i + 1, j + 1, fmt_real(m[(i, j)]));
                }
            }
        }
    }
    let _ = writeln!(out, "G");
    let chem = ints.chemists();
    for i in 0..d {
        for j in 0..=i {
            for k in 0..=i {
                let l_max = if k == i { j } else { k };
                for l in 0..=l_max {
                    let v = chem[((i * d + j) * d + k) * d + l];
                    if v != 0.0 {
                        let _ = writeln!(out, "{} {} {} {} {}", i + 1, j + 1, k + 1, l + 1, fmt_real(v));
                    }
                }
            }
        }
    }
    out
}

pub fn write_integrals(path: impl AsRef<Path>, ints: &IntegralSet) -> Result<()> {
    super::write_atomic(path.as_ref(), format_integrals(ints).as_bytes())
}

/// Reads a `d x N` matrix: one row per line, whitespace-separated.
pub fn read_matrix(path: impl AsRef<Path>) -> Result<Mat> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Ingestion(format!("cannot read {}: {e}", path.display())))?;
    parse_matrix(&text, path)
}

pub fn parse_matrix(text: &str, path: &Path) -> Result<Mat> {
    let mut p = Parser { path, line: 0 };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        p.line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let row = content
            .split_whitespace()
            .map(|t| p.real(t))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(p.err(format!("row has {} columns, expected {}", row.len(), first.len())));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            path: PathBuf::from(path),
            line: p.line.max(1),
            msg: "empty matrix file".into(),
        });
    }
    let n = rows[0].len();
    Ok(Mat::from_fn(rows.len(), n, |i, j| rows[i][j]))
}
