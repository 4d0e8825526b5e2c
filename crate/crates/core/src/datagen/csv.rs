//! Dataset CSV: one point per line, `f1,...,fq,label`, no header, label
//! `-1` or `1`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{Dataset, Label, LabeledPoint};
use crate::error::{KsvmError, Result};
use crate::scalar::{exact_decimal, Scalar};

fn parse_error(source: &Path, line: usize, message: impl Into<String>) -> KsvmError {
    KsvmError::Parse {
        path: source.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_value<T: Scalar>(field: &str, source: &Path, line: usize, column: usize) -> Result<T> {
    let value: T = field
        .trim()
        .parse()
        .map_err(|_| parse_error(source, line, format!("field {column}: {field:?} is not a number")))?;
    if !value.is_finite() {
        return Err(parse_error(
            source,
            line,
            format!("field {column}: {field:?} is not finite"),
        ));
    }
    Ok(value)
}

fn parse_label(field: &str, source: &Path, line: usize) -> Result<Label> {
    let field = field.trim();
    let value: f64 = field
        .parse()
        .map_err(|_| parse_error(source, line, format!("label {field:?} is not a number")))?;
    if value == 1.0 {
        Ok(Label::Mobile)
    } else if value == -1.0 {
        Ok(Label::Flying)
    } else {
        Err(parse_error(source, line, format!("label {field:?} is not -1 or 1")))
    }
}

/// Non-blank lines with their 1-based line numbers.
fn rows<'a, R: BufRead + 'a>(reader: R, source: &'a Path) -> impl Iterator<Item = Result<(usize, String)>> + 'a {
    reader
        .lines()
        .enumerate()
        .map(move |(i, line)| line.map(|l| (i + 1, l)).map_err(|e| KsvmError::io(source, e)))
        .filter(|r| !matches!(r, Ok((_, l)) if l.trim().is_empty()))
}

/// Parses dataset CSV from `reader`; `source` only labels error messages.
pub fn read_csv<T: Scalar, R: BufRead>(reader: R, source: &Path) -> Result<Dataset<T>> {
    let mut dimension = None;
    let mut points = Vec::new();
    for row in rows(reader, source) {
        let (line, text) = row?;
        let fields: Vec<&str> = text.trim_end_matches('\r').split(',').collect();
        let q = *dimension.get_or_insert(fields.len().saturating_sub(1));
        if q == 0 {
            return Err(parse_error(source, line, "row needs at least one feature and a label"));
        }
        if fields.len() != q + 1 {
            return Err(parse_error(
                source,
                line,
                format!("expected {} fields, found {}", q + 1, fields.len()),
            ));
        }
        let features = fields[..q]
            .iter()
            .enumerate()
            .map(|(c, f)| parse_value(f, source, line, c + 1))
            .collect::<Result<Vec<T>>>()?;
        let label = parse_label(fields[q], source, line)?;
        points.push(LabeledPoint::new(features, label));
    }
    let dimension = dimension.ok_or_else(|| parse_error(source, 0, "file contains no data rows"))?;
    Dataset::new(dimension, points)
}

pub fn load_csv<T: Scalar>(path: impl AsRef<Path>) -> Result<Dataset<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| KsvmError::io(path, e))?;
    read_csv(BufReader::new(file), path)
}

pub fn write_csv<T: Scalar, W: Write>(dataset: &Dataset<T>, mut writer: W) -> std::io::Result<()> {
    for p in dataset {
        for v in &p.features {
            write!(writer, "{},", exact_decimal(*v))?;
        }
        writeln!(writer, "{}", p.label.value())?;
    }
    writer.flush()
}

pub fn save_csv<T: Scalar>(dataset: &Dataset<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| KsvmError::io(path, e))?;
    write_csv(dataset, BufWriter::new(file)).map_err(|e| KsvmError::io(path, e))
}

/// Reads feature rows for prediction. Each row holds either exactly
/// `dimension` features or a full dataset row whose trailing label is
/// ignored.
pub fn load_feature_csv<T: Scalar>(path: impl AsRef<Path>, dimension: usize) -> Result<Vec<Vec<T>>> {
    let path: PathBuf = path.as_ref().to_path_buf();
    let file = File::open(&path).map_err(|e| KsvmError::io(&path, e))?;
    let mut out = Vec::new();
    for row in rows(BufReader::new(file), &path) {
        let (line, text) = row?;
        let fields: Vec<&str> = text.trim_end_matches('\r').split(',').collect();
        if fields.len() != dimension && fields.len() != dimension + 1 {
            return Err(parse_error(
                &path,
                line,
                format!("expected {dimension} features, found {} fields", fields.len()),
            ));
        }
        out.push(
            fields[..dimension]
                .iter()
                .enumerate()
                .map(|(c, f)| parse_value(f, &path, line, c + 1))
                .collect::<Result<Vec<T>>>()?,
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Dataset<f64>> {
        read_csv(text.as_bytes(), Path::new("inline.csv"))
    }

    #[test]
    fn parses_the_documented_format() {
        let d = parse("1.0,2.0,-1\n0.5,0.1,1").unwrap();
        assert_eq!(d.dimension(), 2);
        assert_eq!(d.len(), 2);
        assert_eq!(d.points()[0].features, vec![1.0, 2.0]);
        assert_eq!(d.points()[0].label, Label::Flying);
        assert_eq!(d.points()[1].label, Label::Mobile);
        let sci = parse("1e-3,-2.5E2,1\n").unwrap();
        assert_eq!(sci.points()[0].features, vec![1e-3, -250.0]);
    }

    #[test]
    fn errors_name_the_line() {
        match parse("1.0,x,1") {
            Err(KsvmError::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse("1,2,1\n1,2,3,1") {
            Err(KsvmError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse("1,2,1\n1,2,0") {
            Err(KsvmError::Parse { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("label"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse("inf,1,1").is_err());
        assert!(parse("").is_err());
    }

    #[test]
    fn three_features_make_four_fields() {
        let d = parse("1,2,3,1").unwrap();
        let mut out = Vec::new();
        write_csv(&d, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.trim_end().split(',').count(), 4);
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_csv::<f64>("/nonexistent/really/not/here.csv").unwrap_err();
        assert!(matches!(err, KsvmError::Io { .. }));
    }
}
