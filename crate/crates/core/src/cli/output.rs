use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use super::CliError;

/// Shortest decimal form of `x` rounded to nine significant digits.
pub fn sig9(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.8e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let rounded: f64 = sci.parse().expect("round trip");
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, rounded))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(sig9).unwrap_or_default()
}

fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            if let Some(r) = sig9(x).parse::<f64>().ok().and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::Data(format!("cannot create {}: {e}", root.display())))?;
        Ok(OutDir { root: root.to_path_buf() })
    }

    fn file(&self, name: &str) -> Result<(PathBuf, fs::File), CliError> {
        let path = self.root.join(name);
        let f = fs::File::create(&path).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
        Ok((path, f))
    }

    /// Writes a CSV with the given header; every row must have as many fields.
    pub fn csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
        let (path, f) = self.file(name)?;
        let mut w = csv::Writer::from_writer(f);
        let io = |e: csv::Error| CliError::Data(format!("writing {name}: {e}"));
        w.write_record(header).map_err(io)?;
        for r in rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::Data(format!("writing {name}: {e}")))?;
        Ok(path)
    }

    /// Pretty JSON with every float rounded to nine significant digits.
    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut v = serde_json::to_value(value).map_err(|e| CliError::Data(format!("encoding {name}: {e}")))?;
        round_json(&mut v);
        let (path, mut f) = self.file(name)?;
        let text = serde_json::to_string_pretty(&v).expect("serializable value");
        writeln!(f, "{text}").map_err(|e| CliError::Data(format!("writing {name}: {e}")))?;
        Ok(path)
    }
}
