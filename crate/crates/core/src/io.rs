//! Plain-text interchange format for profiles.
//!
//! ```text
//! # neckpinch profile v1
//! n=2
//! t=0.125
//! nodes=801
//! x phi psi
//! -1e0 1.5707963267948966e0 0e0
//! ...
//! ```
//!
//! Numbers are written in the shortest decimal form that round-trips, so a
//! write followed by a read reproduces the grid bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::ProfileGrid;

pub const PROFILE_MAGIC: &str = "# neckpinch profile v1";

pub fn write_profile_string(grid: &ProfileGrid) -> String {
    let mut out = String::with_capacity(64 * grid.nodes() + 128);
    let _ = writeln!(out, "{PROFILE_MAGIC}");
    let _ = writeln!(out, "n={}", grid.n);
    let _ = writeln!(out, "t={:e}", grid.t);
    let _ = writeln!(out, "nodes={}", grid.nodes());
    let _ = writeln!(out, "x phi psi");
    for i in 0..grid.nodes() {
        let _ = writeln!(out, "{:e} {:e} {:e}", grid.x[i], grid.phi[i], grid.psi[i]);
    }
    out
}

fn header<'a>(line: Option<(usize, &'a str)>, key: &str) -> Result<(usize, &'a str)> {
    let (no, text) = line.ok_or(Error::Parse { line: 0, msg: format!("missing `{key}=` header") })?;
    let value = text
        .strip_prefix(key)
        .and_then(|r| r.strip_prefix('='))
        .ok_or_else(|| Error::Parse { line: no + 1, msg: format!("expected `{key}=…`, found `{text}`") })?;
    Ok((no + 1, value.trim()))
}

pub fn parse_profile(text: &str) -> Result<ProfileGrid> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, l)) if l.trim() == PROFILE_MAGIC => {}
        Some((no, l)) => return Err(Error::Parse { line: no + 1, msg: format!("unknown format header `{l}`") }),
        None => return Err(Error::Parse { line: 0, msg: "empty profile".into() }),
    }
    let (ln, v) = header(lines.next(), "n")?;
    let n: usize = v.parse().map_err(|_| Error::Parse { line: ln, msg: format!("bad n `{v}`") })?;
    let (ln, v) = header(lines.next(), "t")?;
    let t: f64 = v.parse().map_err(|_| Error::Parse { line: ln, msg: format!("bad t `{v}`") })?;
    let (ln, v) = header(lines.next(), "nodes")?;
    let nodes: usize = v.parse().map_err(|_| Error::Parse { line: ln, msg: format!("bad nodes `{v}`") })?;
    match lines.next() {
        Some((_, l)) if l.split_whitespace().eq(["x", "phi", "psi"]) => {}
        Some((no, l)) => {
            return Err(Error::Parse { line: no + 1, msg: format!("expected column header `x phi psi`, found `{l}`") })
        }
        None => return Err(Error::Parse { line: 0, msg: "missing column header".into() }),
    }
    let mut x = Vec::with_capacity(nodes);
    let mut phi = Vec::with_capacity(nodes);
    let mut psi = Vec::with_capacity(nodes);
    for (no, l) in lines {
        let vals: Vec<&str> = l.split_whitespace().collect();
        if vals.len() != 3 {
            return Err(Error::Parse { line: no + 1, msg: format!("expected 3 columns, found {}", vals.len()) });
        }
        let mut row = [0.0; 3];
        for (slot, v) in row.iter_mut().zip(&vals) {
            *slot = v.parse().map_err(|_| Error::Parse { line: no + 1, msg: format!("bad number `{v}`") })?;
        }
        x.push(row[0]);
        phi.push(row[1]);
        psi.push(row[2]);
    }
    if x.len() != nodes {
        return Err(Error::Parse { line: 0, msg: format!("header says {nodes} nodes, found {}", x.len()) });
    }
    ProfileGrid::new(n, x, phi, psi, t)
}

pub fn write_profile(grid: &ProfileGrid, path: &Path) -> Result<()> {
    std::fs::write(path, write_profile_string(grid))?;
    Ok(())
}

pub fn read_profile(path: &Path) -> Result<ProfileGrid> {
    parse_profile(&std::fs::read_to_string(path)?)
}
