//! INI problem files.
//!
//! ```ini
//! [problem]
//! name = swift-hohenberg-nonlinear
//! order = 2
//!
//! [params]
//! r = 1/4
//!
//! [nonlinearity]
//! expr = "r*u - u^3"
//!
//! [coupling]
//! modes = 2
//! ```
//!
//! `name` selects the builtin operator stack. Vector problems give one key per
//! field under `[nonlinearity]` instead of `expr`.

use ini::Ini;

use super::{builtin_with, parse_multinomial, ParamValue, ProblemSpec, BUILTINS};
use crate::error::{Error, Result};

const MAX_FILE_LEN: usize = 64 * 1024;
const MAX_ORDER: u32 = 64;
const MAX_MODES: i64 = 8;

fn file_err(msg: impl Into<String>) -> Error {
    Error::ProblemFile(msg.into())
}

fn unquote(v: &str) -> &str {
    let v = v.trim();
    for q in ['"', '\''] {
        if v.len() >= 2 && v.starts_with(q) && v.ends_with(q) {
            return &v[1..v.len() - 1];
        }
    }
    v
}

/// Parse a problem file into a spec and the requested order.
pub fn parse_problem_file(text: &str) -> Result<(ProblemSpec, u32)> {
    if text.len() > MAX_FILE_LEN {
        return Err(file_err(format!("file longer than {MAX_FILE_LEN} bytes")));
    }
    let ini = Ini::load_from_str_noescape(text).map_err(|e| file_err(e.to_string()))?;
    for (section, _) in ini.iter() {
        match section {
            None | Some("problem") | Some("params") | Some("nonlinearity") | Some("coupling") => {}
            Some(s) => return Err(file_err(format!("unknown section [{s}]"))),
        }
    }
    if ini.general_section().iter().next().is_some() {
        return Err(file_err("keys outside a section"));
    }
    let problem = ini.section(Some("problem")).ok_or_else(|| file_err("missing [problem] section"))?;
    let name = unquote(problem.get("name").ok_or_else(|| file_err("missing problem name"))?);
    if !BUILTINS.contains(&name) {
        return Err(Error::UnknownProblem(name.to_string()));
    }
    let mut overrides = Vec::new();
    if let Some(params) = ini.section(Some("params")) {
        for (k, v) in params.iter() {
            overrides.push((k.trim().to_string(), ParamValue::parse(unquote(v))?));
        }
    }
    let mut spec = builtin_with(name, &overrides)?;
    let order = match problem.get("order") {
        Some(o) => {
            let n: u32 = unquote(o).parse().map_err(|_| file_err(format!("order '{o}' is not a non-negative integer")))?;
            if n > MAX_ORDER {
                return Err(file_err(format!("order {n} exceeds {MAX_ORDER}")));
            }
            n
        }
        None => spec.default_order,
    };
    if let Some(nl) = ini.section(Some("nonlinearity")) {
        let mut fs = Vec::new();
        if let Some(e) = nl.get("expr") {
            if spec.fields.len() != 1 {
                return Err(file_err("vector problems give one nonlinearity key per field"));
            }
            fs.push(parse_multinomial(unquote(e))?);
        } else {
            for field in &spec.fields {
                let e = nl.get(field.as_str()).ok_or_else(|| file_err(format!("no nonlinearity for field '{field}'")))?;
                fs.push(parse_multinomial(unquote(e))?);
            }
        }
        for (k, _) in nl.iter() {
            if k != "expr" && !spec.fields.iter().any(|f| f == k) {
                return Err(file_err(format!("unknown nonlinearity key '{k}'")));
            }
        }
        spec.nonlinearity = fs;
    }
    if let Some(c) = ini.section(Some("coupling")) {
        if let Some(m) = c.get("modes") {
            let k: i64 = unquote(m).parse().map_err(|_| file_err(format!("modes '{m}' is not an integer")))?;
            if !(0..=MAX_MODES).contains(&k) {
                return Err(file_err(format!("modes must lie in 0..={MAX_MODES}")));
            }
            spec.coupling_modes = k;
        }
    }
    Ok((spec, order))
}
