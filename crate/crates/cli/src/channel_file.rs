//! JSON channel files.
//!
//! Three shapes are accepted, told apart by their keys:
//!
//! ```json
//! {"name": "bit flip", "dim": 2, "kraus": [[[[0.9, 0], [0, 0]], [[0, 0], [0.9, 0]]], ...]}
//! {"builtin": "xz_flip", "params": {"p": 0.8}}
//! {"name": "from choi", "d_in": 2, "d_out": 2, "choi": [[[0.5, 0], ...], ...]}
//! ```
//!
//! Complex entries are always `[re, im]` pairs. Numeric builtin parameters may
//! also be given as fraction strings such as `"2/3"`.

use std::path::Path;

use num_complex::Complex64;
use qbcast_core::{Builtin, CMatrix, ChoiState, KrausChannel};
use serde_json::{Map, Value};

use crate::error::CliError;

/// A channel read from a file, with the name used in reports.
#[derive(Debug, Clone)]
pub struct LoadedChannel {
    pub name: String,
    pub channel: KrausChannel,
}

pub fn load(path: &Path) -> Result<LoadedChannel, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_str(&text).map_err(|e| match e {
        CliError::Parse(msg) => CliError::Parse(format!("{}: {msg}", path.display())),
        CliError::Invariant(msg) => CliError::Invariant(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_str(text: &str) -> Result<LoadedChannel, CliError> {
    let value: Value = serde_json::from_str(text).map_err(|e| CliError::Parse(format!("malformed JSON: {e}")))?;
    let obj = value.as_object().ok_or_else(|| CliError::Parse("channel file must be a JSON object".into()))?;
    if obj.contains_key("kraus") {
        parse_kraus(obj)
    } else if obj.contains_key("builtin") {
        parse_builtin(obj)
    } else if obj.contains_key("choi") {
        parse_choi(obj)
    } else {
        Err(CliError::Parse("channel file needs one of the keys \"kraus\", \"builtin\" or \"choi\"".into()))
    }
}

fn name_or(obj: &Map<String, Value>, fallback: &str) -> Result<String, CliError> {
    match obj.get("name") {
        None => Ok(fallback.to_string()),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(CliError::Parse("\"name\" must be a string".into())),
    }
}

fn dimension(obj: &Map<String, Value>, key: &str) -> Result<usize, CliError> {
    let v = obj.get(key).ok_or_else(|| CliError::Parse(format!("missing \"{key}\"")))?;
    v.as_u64()
        .filter(|&d| d >= 1)
        .map(|d| d as usize)
        .ok_or_else(|| CliError::Parse(format!("\"{key}\" must be a positive integer, got {v}")))
}

fn parse_kraus(obj: &Map<String, Value>) -> Result<LoadedChannel, CliError> {
    let dim = dimension(obj, "dim")?;
    let ops = obj["kraus"].as_array().ok_or_else(|| CliError::Parse("\"kraus\" must be an array of matrices".into()))?;
    let mut matrices = Vec::with_capacity(ops.len());
    let mut d_out = None;
    for (i, op) in ops.iter().enumerate() {
        let context = format!("kraus operator {i}");
        let m = parse_matrix(op, &context)?;
        if m.ncols() != dim {
            return Err(CliError::Parse(format!("{context}: has {} columns, expected dim = {dim}", m.ncols())));
        }
        match d_out {
            None => d_out = Some(m.nrows()),
            Some(rows) if rows != m.nrows() => {
                return Err(CliError::Parse(format!("{context}: has {} rows, operator 0 has {rows}", m.nrows())));
            }
            Some(_) => {}
        }
        matrices.push(m);
    }
    let channel = KrausChannel::new(dim, d_out.unwrap_or(dim), matrices)?;
    Ok(LoadedChannel { name: name_or(obj, "kraus")?, channel })
}

fn parse_choi(obj: &Map<String, Value>) -> Result<LoadedChannel, CliError> {
    let d_in = dimension(obj, "d_in")?;
    let d_out = dimension(obj, "d_out")?;
    let m = parse_matrix(&obj["choi"], "choi")?;
    if m.nrows() != d_in * d_out || m.ncols() != d_in * d_out {
        return Err(CliError::Parse(format!("choi: is {}x{}, expected {n}x{n}", m.nrows(), m.ncols(), n = d_in * d_out)));
    }
    let channel = ChoiState::new(m, d_in, d_out)?.to_kraus()?;
    Ok(LoadedChannel { name: name_or(obj, "choi")?, channel })
}

/// Matrix given as rows of `[re, im]` pairs.
pub fn parse_matrix(value: &Value, context: &str) -> Result<CMatrix, CliError> {
    let rows = value.as_array().ok_or_else(|| CliError::Parse(format!("{context}: expected an array of rows")))?;
    if rows.is_empty() {
        return Err(CliError::Parse(format!("{context}: matrix has no rows")));
    }
    let mut entries = Vec::new();
    let mut width = None;
    for (r, row) in rows.iter().enumerate() {
        let cols = row.as_array().ok_or_else(|| CliError::Parse(format!("{context}, row {r}: expected an array of [re, im] pairs")))?;
        if *width.get_or_insert(cols.len()) != cols.len() {
            return Err(CliError::Parse(format!("{context}, row {r}: has {} entries, row 0 has {}", cols.len(), width.unwrap_or(0))));
        }
        for (c, entry) in cols.iter().enumerate() {
            let pair = entry.as_array().filter(|p| p.len() == 2);
            let parts = pair.and_then(|p| Some((p[0].as_f64()?, p[1].as_f64()?)));
            let (re, im) = parts.ok_or_else(|| CliError::Parse(format!("{context}, row {r}, col {c}: expected [re, im], got {entry}")))?;
            entries.push(Complex64::new(re, im));
        }
    }
    let width = width.unwrap_or(0);
    if width == 0 {
        return Err(CliError::Parse(format!("{context}: matrix has no columns")));
    }
    Ok(CMatrix::from_row_slice(rows.len(), width, &entries))
}

/// Matrix as rows of `[re, im]` pairs, the inverse of [`parse_matrix`].
pub fn matrix_to_json(m: &CMatrix) -> Value {
    Value::Array((0..m.nrows()).map(|r| Value::Array((0..m.ncols()).map(|c| serde_json::json!([m[(r, c)].re, m[(r, c)].im])).collect())).collect())
}

/// A number or a fraction string like `"2/3"`.
pub fn parse_fraction(text: &str) -> Result<f64, CliError> {
    let text = text.trim();
    let value = match text.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| CliError::Parse(format!("bad number `{text}`")))?;
            let den: f64 = den.trim().parse().map_err(|_| CliError::Parse(format!("bad number `{text}`")))?;
            num / den
        }
        None => text.parse().map_err(|_| CliError::Parse(format!("bad number `{text}`")))?,
    };
    if !value.is_finite() {
        return Err(CliError::Parse(format!("`{text}` is not a finite number")));
    }
    Ok(value)
}

struct Params<'a> {
    builtin: &'a str,
    map: Map<String, Value>,
}

impl Params<'_> {
    fn number(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.map.get(key) {
            None => Ok(None),
            Some(Value::Number(n)) => Ok(n.as_f64()),
            Some(Value::String(s)) => parse_fraction(s).map(Some),
            Some(other) => Err(CliError::Parse(format!("builtin {}: parameter \"{key}\" must be a number, got {other}", self.builtin))),
        }
    }

    fn required(&self, key: &str) -> Result<f64, CliError> {
        self.number(key)?.ok_or_else(|| CliError::Parse(format!("builtin {}: missing parameter \"{key}\"", self.builtin)))
    }

    fn dim(&self) -> Result<usize, CliError> {
        match self.map.get("dim") {
            None => Ok(2),
            Some(v) => v.as_u64().map(|d| d as usize).ok_or_else(|| CliError::Parse(format!("builtin {}: \"dim\" must be a positive integer", self.builtin))),
        }
    }
}

fn parse_builtin(obj: &Map<String, Value>) -> Result<LoadedChannel, CliError> {
    let name = obj["builtin"].as_str().ok_or_else(|| CliError::Parse("\"builtin\" must be a string".into()))?;
    let map = match obj.get("params") {
        None | Some(Value::Null) => Map::new(),
        Some(Value::Object(m)) => m.clone(),
        Some(_) => return Err(CliError::Parse("\"params\" must be an object".into())),
    };
    let params = Params { builtin: name, map };
    let builtin = match name {
        "identity" => Builtin::Identity { dim: params.dim()? },
        "unitary" => Builtin::Unitary(unitary_from(&params)?),
        "depolarizing" => Builtin::Depolarizing { dim: params.dim()?, r: params.required("r")? },
        "xz_flip" | "paper_ep" => Builtin::XzFlip { p: params.required("p")? },
        "xz_flip_depolarized" | "paper_eq7" => Builtin::XzFlipDepolarized { p: params.required("p")?, r: params.required("r")? },
        "amplitude_damping" => Builtin::AmplitudeDamping { gamma: params.required("gamma")? },
        other => return Err(qbcast_core::Error::UnknownChannel(other.to_string()).into()),
    };
    let channel = builtin.build()?;
    let fallback = builtin.label();
    Ok(LoadedChannel { name: name_or(obj, &fallback)?, channel })
}

/// `{"matrix": [...]}` or Euler angles `theta`, `phi`, `lambda` (each default 0) of
/// `[[cos θ/2, -e^{iλ} sin θ/2], [e^{iφ} sin θ/2, e^{i(φ+λ)} cos θ/2]]`.
fn unitary_from(params: &Params<'_>) -> Result<CMatrix, CliError> {
    if let Some(m) = params.map.get("matrix") {
        return parse_matrix(m, "builtin unitary, matrix");
    }
    let theta = params.number("theta")?.unwrap_or(0.0);
    let phi = params.number("phi")?.unwrap_or(0.0);
    let lambda = params.number("lambda")?.unwrap_or(0.0);
    let (s, c) = (theta / 2.0).sin_cos();
    let e = |a: f64| Complex64::from_polar(1.0, a);
    Ok(CMatrix::from_row_slice(2, 2, &[Complex64::new(c, 0.0), -e(lambda) * s, e(phi) * s, e(phi + lambda) * c]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_aliases_resolve_to_the_same_channel() {
        let a = parse_str(r#"{"builtin": "paper_ep", "params": {"p": 0.3}}"#).unwrap();
        let b = parse_str(r#"{"builtin": "xz_flip", "params": {"p": "0.3"}}"#).unwrap();
        assert_eq!(a.channel.to_choi(), b.channel.to_choi());
        assert_eq!(a.name, "xz_flip(p=0.3)");
    }

    #[test]
    fn fractions_parse() {
        assert!((parse_fraction("2/3").unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(parse_fraction(" 0.25 ").unwrap(), 0.25);
        assert!(parse_fraction("1/0").is_err());
        assert!(parse_fraction("x").is_err());
    }

    #[test]
    fn kraus_file_errors_name_the_entry() {
        let err = parse_str(r#"{"dim": 2, "kraus": [[[[1,0],[0,0]],[[0,0],[1]]]]}"#).unwrap_err();
        assert!(err.to_string().contains("kraus operator 0, row 1, col 1"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn incomplete_kraus_set_is_an_invariant_violation() {
        let err = parse_str(r#"{"dim": 2, "kraus": [[[[1,0],[0,0]],[[0,0],[0,0]]]]}"#).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("trace preserving"), "{err}");
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = parse_str("{\"builtin\": \n  \"identity\",,}").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn unitary_angles() {
        let x = parse_str(r#"{"builtin": "unitary", "params": {"theta": 3.141592653589793}}"#).unwrap();
        let out = x.channel.apply(&qbcast_core::DensityMatrix::basis(qbcast_core::HilbertSpec::single(2).unwrap(), 0).unwrap()).unwrap();
        assert!((out.matrix()[(1, 1)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_builtin_is_a_parse_error() {
        assert_eq!(parse_str(r#"{"builtin": "teleporter"}"#).unwrap_err().exit_code(), 2);
    }
}
