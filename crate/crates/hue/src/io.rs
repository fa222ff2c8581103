//! CSV formats.
//!
//! Tensor files hold `user,item,trial,rating` rows with an optional header
//! and an optional leading `# scale=min,max,step` line. Predictor files hold
//! `user,item,prediction`, leaderboard files `label,rmse`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use hue_core::metric::PredictorSet;
use hue_core::tensor::{Observation, PairIndex, RatingTensor, Scale};

use crate::CliError;

fn read_to_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn parse_scale(path: &Path, line: &str) -> Result<Option<Scale>, CliError> {
    let Some(rest) = line.trim_start_matches('#').trim().strip_prefix("scale=") else {
        return Ok(None);
    };
    let parts: Vec<f64> = rest
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::parse(path, format!("bad scale line `{line}`")))?;
    match parts[..] {
        [min, max, step] => Ok(Some(Scale::new(min, max, step)?)),
        _ => Err(CliError::parse(path, format!("scale needs min,max,step: `{line}`"))),
    }
}

/// Data rows of a CSV file as `(line, fields)`, skipping comments, blank
/// lines and a header whose first field matches `header`.
fn rows(path: &Path, text: &str, header: &str, width: usize) -> Result<Vec<(u64, csv::StringRecord)>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::parse(path, e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if k == 0 && record.get(0).is_some_and(|f| f.eq_ignore_ascii_case(header)) {
            continue;
        }
        if record.len() != width {
            return Err(CliError::parse(
                path,
                format!("line {line}: expected {width} fields, found {}", record.len()),
            ));
        }
        out.push((line, record));
    }
    Ok(out)
}

fn field<T: std::str::FromStr>(path: &Path, line: u64, record: &csv::StringRecord, i: usize, name: &str) -> Result<T, CliError> {
    record[i]
        .parse()
        .map_err(|_| CliError::parse(path, format!("line {line}: bad {name} `{}`", &record[i])))
}

pub fn read_tensor(path: &Path) -> Result<RatingTensor, CliError> {
    let text = read_to_string(path)?;
    let mut scale = None;
    for line in text.lines().take_while(|l| l.trim_start().starts_with('#') || l.trim().is_empty()) {
        if let Some(s) = parse_scale(path, line)? {
            scale = Some(s);
        }
    }
    let rows = rows(path, &text, "user", 4)?;
    if rows.is_empty() {
        return Err(CliError::parse(path, "no observations"));
    }
    let observations = rows
        .iter()
        .map(|(line, r)| {
            Ok(Observation {
                user: field(path, *line, r, 0, "user")?,
                item: field(path, *line, r, 1, "item")?,
                trial: field(path, *line, r, 2, "trial")?,
                rating: field(path, *line, r, 3, "rating")?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    RatingTensor::from_observations(observations, scale).map_err(|e| CliError::parse(path, e.to_string()))
}

pub fn write_tensor(path: &Path, tensor: &RatingTensor) -> Result<(), CliError> {
    let mut out = String::new();
    if let Some(s) = tensor.scale() {
        out.push_str(&format!("# scale={},{},{}\n", s.min, s.max, s.step));
    }
    out.push_str("user,item,trial,rating\n");
    for o in tensor.observations() {
        out.push_str(&format!("{},{},{},{}\n", o.user, o.item, o.trial, o.rating));
    }
    write_file(path, out.as_bytes())
}

pub fn read_predictors(path: &Path, label: &str) -> Result<PredictorSet, CliError> {
    let text = read_to_string(path)?;
    let mut entries = BTreeMap::new();
    for (line, r) in rows(path, &text, "user", 3)? {
        let pair = PairIndex::new(field(path, line, &r, 0, "user")?, field(path, line, &r, 1, "item")?);
        let value: f64 = field(path, line, &r, 2, "prediction")?;
        if entries.insert(pair, value).is_some() {
            return Err(CliError::parse(path, format!("line {line}: duplicate pair {pair}")));
        }
    }
    if entries.is_empty() {
        return Err(CliError::parse(path, "no predictions"));
    }
    PredictorSet::new(label, entries).map_err(|e| CliError::parse(path, e.to_string()))
}

pub fn write_predictors(path: &Path, predictors: &PredictorSet) -> Result<(), CliError> {
    let mut out = String::from("user,item,prediction\n");
    for (p, v) in predictors.entries() {
        out.push_str(&format!("{},{},{}\n", p.user, p.item, v));
    }
    write_file(path, out.as_bytes())
}

pub fn read_leaderboard(path: &Path) -> Result<Vec<(String, f64)>, CliError> {
    let text = read_to_string(path)?;
    rows(path, &text, "label", 2)?
        .into_iter()
        .map(|(line, r)| Ok((r[0].to_string(), field(path, line, &r, 1, "rmse")?)))
        .collect()
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(bytes).map_err(|e| CliError::io(path, e))
}

/// A CSV table built in memory.
pub struct Table {
    text: String,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { text: columns.join(",") + "\n" }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_file(path, self.text.as_bytes())
    }
}

/// Cell text for an optional number; empty when absent.
pub fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        fs::write(&path, "# scale=1,5,1\nuser,item,trial,rating\n1,1,1,3\n1,1,2,4\n2,1,1,5\n2,1,2,5\n").unwrap();
        let t = read_tensor(&path).unwrap();
        assert_eq!(t.dims(), (2, 1, 2));
        assert_eq!(t.scale(), Some(Scale::likert5()));
        let copy = dir.path().join("u.csv");
        write_tensor(&copy, &t).unwrap();
        assert_eq!(read_tensor(&copy).unwrap(), t);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        fs::write(&path, "user,item,trial,rating\n1,1,1,3\n1,1,x,4\n").unwrap();
        let e = read_tensor(&path).unwrap_err().to_string();
        assert!(e.contains("line 3"), "{e}");
        fs::write(&path, "1,1,1,3\n1,1,1,4\n").unwrap();
        assert!(read_tensor(&path).unwrap_err().to_string().contains("duplicate"));
        fs::write(&path, "").unwrap();
        assert!(read_tensor(&path).is_err());
        assert!(read_tensor(&dir.path().join("missing.csv")).unwrap_err().to_string().contains("missing.csv"));
    }

    #[test]
    fn leaderboard_and_predictors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l.csv");
        fs::write(&path, "label,rmse\nA,0.8567\nB team,0.9525\n").unwrap();
        assert_eq!(read_leaderboard(&path).unwrap(), vec![("A".into(), 0.8567), ("B team".into(), 0.9525)]);
        let path = dir.path().join("p.csv");
        fs::write(&path, "user,item,prediction\n1,1,3.5\n1,2,4\n").unwrap();
        let p = read_predictors(&path, "A").unwrap();
        assert_eq!(p.len(), 2);
    }
}
