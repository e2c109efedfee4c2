//! JSON documents read and written by the command line.
//!
//! Chain: `{"factors": [n1, ..., nd], "pi": [...], "P": [[...], ...]}` with
//! `pi` optional and `P` either nested rows or one flat row-major array.
//! `factors` may be omitted for a single coordinate.
//!
//! Distribution: a bare array, or an object with `pi` and optional
//! `factors`. Graph: `{"d": 3, "edges": [[1, 2], [2, 3]]}` with 1-based
//! vertices, or `{"adjacency": [[false, true, ...], ...]}`.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::state::{Distribution, ProductStateSpace, StochasticMatrix};

fn schema(msg: impl Into<String>) -> Error {
    Error::domain(format!("schema: {}", msg.into()))
}

fn read(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    Ok(serde_json::from_str(&text)?)
}

fn numbers(v: &Value, what: &str) -> Result<Vec<f64>> {
    let arr = v.as_array().ok_or_else(|| schema(format!("{what} must be an array")))?;
    arr.iter()
        .enumerate()
        .map(|(k, x)| match x {
            Value::Number(n) => n.as_f64().ok_or_else(|| schema(format!("{what}[{k}] is not a double"))),
            Value::String(s) if s == "inf" => Ok(f64::INFINITY),
            _ => Err(schema(format!("{what}[{k}] is not a number"))),
        })
        .collect()
}

fn factors(v: &Value, total: impl FnOnce() -> Result<usize>) -> Result<ProductStateSpace> {
    match v.get("factors") {
        Some(f) => {
            let sizes = f
                .as_array()
                .ok_or_else(|| schema("factors must be an array"))?
                .iter()
                .map(|x| x.as_u64().map(|n| n as usize).ok_or_else(|| schema("factor sizes must be positive integers")))
                .collect::<Result<Vec<_>>>()?;
            ProductStateSpace::new(sizes)
        }
        None => ProductStateSpace::single(total()?),
    }
}

fn matrix_entries(v: &Value) -> Result<(Vec<f64>, usize)> {
    let arr = v.as_array().ok_or_else(|| schema("P must be an array"))?;
    if arr.iter().all(Value::is_array) {
        let n = arr.len();
        let mut flat = Vec::with_capacity(n * n);
        for (x, row) in arr.iter().enumerate() {
            let r = numbers(row, &format!("P[{x}]"))?;
            if r.len() != n {
                return Err(schema(format!("P row {x} has {} entries, expected {n}", r.len())));
            }
            flat.extend(r);
        }
        Ok((flat, n))
    } else {
        let flat = numbers(v, "P")?;
        let n = (flat.len() as f64).sqrt().round() as usize;
        if n * n != flat.len() {
            return Err(schema(format!("flat P has {} entries, not a square", flat.len())));
        }
        Ok((flat, n))
    }
}

/// Parse a chain document; `pi`, when present, is validated against it.
pub fn parse_chain(v: &Value) -> Result<(StochasticMatrix, Option<Distribution>)> {
    let p = v.get("P").ok_or_else(|| schema("chain document needs a \"P\" field"))?;
    let (flat, n) = matrix_entries(p)?;
    let space = factors(v, || Ok(n))?;
    if space.total() != n {
        return Err(schema(format!(
            "factors {:?} give {} states but P is {n}x{n}",
            space.factor_sizes(),
            space.total()
        )));
    }
    let m = nalgebra::DMatrix::from_row_slice(n, n, &flat);
    let chain = StochasticMatrix::new(space.clone(), m)?;
    let pi = match v.get("pi") {
        Some(Value::Null) | None => None,
        Some(p) => {
            let mass = numbers(p, "pi")?;
            if mass.len() != n {
                return Err(schema(format!("pi has {} entries for {n} states", mass.len())));
            }
            Some(Distribution::new(space, mass)?)
        }
    };
    Ok((chain, pi))
}

pub fn load_chain(path: &Path) -> Result<(StochasticMatrix, Option<Distribution>)> {
    parse_chain(&read(path)?)
}

/// A distribution file; `space` fixes the layout when the file has none.
pub fn parse_distribution(v: &Value, space: Option<&ProductStateSpace>) -> Result<Distribution> {
    let (mass, declared) = match v {
        Value::Array(_) => (numbers(v, "pi")?, None),
        Value::Object(_) => {
            let m = numbers(v.get("pi").ok_or_else(|| schema("distribution object needs \"pi\""))?, "pi")?;
            let sp = if v.get("factors").is_some() { Some(factors(v, || Ok(m.len()))?) } else { None };
            (m, sp)
        }
        _ => return Err(schema("distribution must be an array or an object")),
    };
    let space = match (declared, space) {
        (Some(a), Some(b)) if &a != b => {
            return Err(schema(format!("pi factors {:?} differ from the chain's {:?}", a.factor_sizes(), b.factor_sizes())))
        }
        (Some(a), _) => a,
        (None, Some(b)) => b.clone(),
        (None, None) => ProductStateSpace::single(mass.len())?,
    };
    if mass.len() != space.total() {
        return Err(schema(format!("pi has {} entries for {} states", mass.len(), space.total())));
    }
    Distribution::new(space, mass)
}

pub fn load_distribution(path: &Path, space: Option<&ProductStateSpace>) -> Result<Distribution> {
    parse_distribution(&read(path)?, space)
}

/// Energies: a bare array or `{"energy": [...]}`.
pub fn load_energy(path: &Path) -> Result<Vec<f64>> {
    let v = read(path)?;
    match v.get("energy") {
        Some(e) => numbers(e, "energy"),
        None => numbers(&v, "energy"),
    }
}

/// Adjacency matrix of a graph document.
pub fn parse_graph(v: &Value) -> Result<Vec<Vec<bool>>> {
    if let Some(adj) = v.get("adjacency") {
        return adj
            .as_array()
            .ok_or_else(|| schema("adjacency must be an array of rows"))?
            .iter()
            .map(|row| {
                row.as_array()
                    .ok_or_else(|| schema("adjacency rows must be arrays"))?
                    .iter()
                    .map(|b| match b {
                        Value::Bool(b) => Ok(*b),
                        Value::Number(n) if n.as_u64() == Some(0) => Ok(false),
                        Value::Number(n) if n.as_u64() == Some(1) => Ok(true),
                        _ => Err(schema("adjacency entries must be booleans or 0/1")),
                    })
                    .collect()
            })
            .collect();
    }
    let d = v
        .get("d")
        .and_then(Value::as_u64)
        .ok_or_else(|| schema("graph needs \"d\" and \"edges\", or \"adjacency\""))? as usize;
    let mut adj = vec![vec![false; d]; d];
    let edges = v.get("edges").and_then(Value::as_array).ok_or_else(|| schema("graph needs an \"edges\" array"))?;
    for e in edges {
        let pair = e
            .as_array()
            .filter(|p| p.len() == 2)
            .ok_or_else(|| schema("each edge is a pair [a, b]"))?;
        let ends = pair
            .iter()
            .map(|x| x.as_u64().map(|k| k as usize).filter(|&k| (1..=d).contains(&k)))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| schema(format!("edge endpoints must be in 1..={d}")))?;
        adj[ends[0] - 1][ends[1] - 1] = true;
        adj[ends[1] - 1][ends[0] - 1] = true;
    }
    Ok(adj)
}

pub fn load_graph(path: &Path) -> Result<Vec<Vec<bool>>> {
    parse_graph(&read(path)?)
}

/// Factor chains `L1.json ... Ld.json` from a directory, for the listed
/// 0-based coordinates.
pub fn load_factor_dir(dir: &Path, coords: impl IntoIterator<Item = usize>) -> Result<Vec<StochasticMatrix>> {
    coords
        .into_iter()
        .map(|i| Ok(load_chain(&dir.join(format!("L{}.json", i + 1)))?.0))
        .collect()
}

/// A chain document for `p`, optionally with `pi`.
pub fn chain_document(p: &StochasticMatrix, pi: Option<&Distribution>) -> Value {
    let rows: Vec<Vec<f64>> = p.rows();
    let mut doc = json!({ "factors": p.space().factor_sizes(), "P": rows });
    if let Some(pi) = pi {
        doc["pi"] = json!(pi.mass());
    }
    doc
}

pub fn write_chain(path: &Path, p: &StochasticMatrix, pi: Option<&Distribution>) -> Result<()> {
    fs::write(path, render(&chain_document(p, pi))?)?;
    Ok(())
}

/// Compact JSON. Doubles are written in the shortest form that parses
/// back to the same value, which never needs more than 17 significant
/// digits.
pub fn render<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    Ok(serde_json::to_string(value)?)
}

/// Flatten a JSON value into `path<TAB>value` lines.
pub fn render_table(value: &Value) -> String {
    fn walk(prefix: &str, v: &Value, out: &mut Vec<String>) {
        match v {
            Value::Object(map) => {
                for (k, x) in map {
                    let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&p, x, out);
                }
            }
            Value::Array(items) if items.iter().all(|x| !x.is_array() && !x.is_object()) => {
                let cells: Vec<String> = items.iter().map(cell).collect();
                out.push(format!("{prefix}\t{}", cells.join(" ")));
            }
            Value::Array(items) => {
                for (k, x) in items.iter().enumerate() {
                    walk(&format!("{prefix}[{k}]"), x, out);
                }
            }
            _ => out.push(format!("{prefix}\t{}", cell(v))),
        }
    }
    fn cell(v: &Value) -> String {
        match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        }
    }
    let mut out = Vec::new();
    walk("", value, &mut out);
    out.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_documents_round_trip() {
        let v: Value = serde_json::from_str(
            r#"{"factors":[2,2],"P":[0.5,0.5,0,0, 0,0.5,0.5,0, 0,0,0.5,0.5, 0.5,0,0,0.5],"pi":[0.25,0.25,0.25,0.25]}"#,
        )
        .unwrap();
        let (p, pi) = parse_chain(&v).unwrap();
        assert_eq!(p.space().factor_sizes(), &[2, 2]);
        let doc = chain_document(&p, pi.as_ref());
        let (q, rho) = parse_chain(&serde_json::from_str(&render(&doc).unwrap()).unwrap()).unwrap();
        assert_eq!(p, q);
        assert_eq!(pi.unwrap(), rho.unwrap());
    }

    #[test]
    fn schema_errors_are_specific() {
        let bad_row: Value = serde_json::from_str(r#"{"P":[[0.5,0.4],[0.5,0.5]]}"#).unwrap();
        let e = parse_chain(&bad_row).unwrap_err().to_string();
        assert!(e.contains("row 0"), "{e}");
        let mismatch: Value = serde_json::from_str(r#"{"factors":[3],"P":[[1,0],[0,1]]}"#).unwrap();
        assert!(parse_chain(&mismatch).unwrap_err().to_string().contains("factors"));
        let ragged: Value = serde_json::from_str(r#"{"P":[[1,0],[1]]}"#).unwrap();
        assert!(parse_chain(&ragged).is_err());
        let g: Value = serde_json::from_str(r#"{"d":3,"edges":[[1,2],[2,4]]}"#).unwrap();
        assert!(parse_graph(&g).is_err());
    }

    #[test]
    fn doubles_survive_rendering() {
        let xs = [0.1, 1.0 / 3.0, 2.0f64.sqrt(), 1e-300, 123_456_789.123_456_79];
        let back: Vec<f64> = serde_json::from_str(&render(&xs).unwrap()).unwrap();
        assert_eq!(back, xs);
    }

    #[test]
    fn table_flattens_nested_values() {
        let t = render_table(&json!({"a": {"b": [1, 2]}, "c": "inf"}));
        assert_eq!(t, "a.b\t1 2\nc\tinf");
    }
}
