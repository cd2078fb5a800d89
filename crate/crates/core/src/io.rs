//! File formats: dense tensors, the bump fixture, matrices, and atomic writes.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::tensor::{CurvatureTensor, GroupElement};
use crate::verification::BumpMetric;

pub const TENSOR_FORMAT: &str = "curv-dense-v1";
pub const BUMP_FORMAT: &str = "bump-metric-v1";
pub const MATRIX_FORMAT: &str = "matrix-v1";

/// Symmetry residual above which a tensor file is rejected.
pub const READ_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TensorFile {
    format: String,
    n: usize,
    coeffs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    construction: Option<Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BumpFile {
    format: String,
    #[serde(flatten)]
    bump: BumpMetric,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MatrixFile {
    format: String,
    rows: Vec<Vec<f64>>,
}

/// A tensor with the tag describing how it was made.
#[derive(Debug, Clone)]
pub struct TaggedTensor {
    pub tensor: CurvatureTensor,
    pub construction: Option<Value>,
}

/// What a metric input file may contain.
#[derive(Debug, Clone)]
pub enum MetricSource {
    Tensor(TaggedTensor),
    Bump(BumpMetric),
}

fn format_of(text: &str) -> Result<String> {
    let v: Value = serde_json::from_str(text)?;
    v.get("format")
        .and_then(Value::as_str)
        .map(str::to_owned)
        .ok_or_else(|| Error::Format("missing \"format\" field".into()))
}

fn expect_format(found: &str, want: &str) -> Result<()> {
    if found != want {
        return Err(Error::Format(format!("expected format {want:?}, found {found:?}")));
    }
    Ok(())
}

pub fn parse_tensor(text: &str) -> Result<TaggedTensor> {
    let file: TensorFile = serde_json::from_str(text)?;
    expect_format(&file.format, TENSOR_FORMAT)?;
    let m = file.n + 1;
    if file.coeffs.len() != m.pow(4) {
        return Err(Error::Format(format!(
            "n = {} needs {} coefficients, found {}",
            file.n,
            m.pow(4),
            file.coeffs.len()
        )));
    }
    Ok(TaggedTensor {
        tensor: CurvatureTensor::from_coeffs_with_tolerance(file.n, file.coeffs, READ_TOLERANCE)?,
        construction: file.construction,
    })
}

pub fn tensor_to_json(r: &CurvatureTensor, construction: Option<Value>) -> Result<String> {
    let file = TensorFile {
        format: TENSOR_FORMAT.into(),
        n: r.n(),
        coeffs: r.coeffs().to_vec(),
        construction,
    };
    Ok(serde_json::to_string_pretty(&file)? + "\n")
}

pub fn parse_bump(text: &str) -> Result<BumpMetric> {
    let file: BumpFile = serde_json::from_str(text)?;
    expect_format(&file.format, BUMP_FORMAT)?;
    file.bump.validate()?;
    Ok(file.bump)
}

pub fn bump_to_json(b: &BumpMetric) -> Result<String> {
    let file = BumpFile {
        format: BUMP_FORMAT.into(),
        bump: b.clone(),
    };
    Ok(serde_json::to_string_pretty(&file)? + "\n")
}

/// Dispatches on the `format` field.
pub fn parse_metric_source(text: &str) -> Result<MetricSource> {
    match format_of(text)?.as_str() {
        TENSOR_FORMAT => Ok(MetricSource::Tensor(parse_tensor(text)?)),
        BUMP_FORMAT => Ok(MetricSource::Bump(parse_bump(text)?)),
        other => Err(Error::Format(format!("unknown format {other:?}"))),
    }
}

/// Accepts `{"format": "matrix-v1", "rows": [[...], ...]}` or a bare array of rows.
pub fn parse_matrix(text: &str) -> Result<GroupElement> {
    let v: Value = serde_json::from_str(text)?;
    let rows: Vec<Vec<f64>> = if v.is_array() {
        serde_json::from_value(v)?
    } else {
        let file: MatrixFile = serde_json::from_value(v)?;
        expect_format(&file.format, MATRIX_FORMAT)?;
        file.rows
    };
    let m = rows.len();
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Format(
            "matrix rows must all have length equal to the row count".into(),
        ));
    }
    GroupElement::new(DMatrix::from_fn(m, m, |i, j| rows[i][j]))
}

pub fn matrix_to_json(t: &GroupElement) -> Result<String> {
    let m = t.matrix();
    let file = MatrixFile {
        format: MATRIX_FORMAT.into(),
        rows: (0..m.nrows()).map(|i| m.row(i).iter().cloned().collect()).collect(),
    };
    Ok(serde_json::to_string_pretty(&file)? + "\n")
}

pub fn read_tensor(path: &Path) -> Result<TaggedTensor> {
    parse_tensor(&fs::read_to_string(path)?)
}

pub fn read_metric_source(path: &Path) -> Result<MetricSource> {
    parse_metric_source(&fs::read_to_string(path)?)
}

pub fn read_matrix(path: &Path) -> Result<GroupElement> {
    parse_matrix(&fs::read_to_string(path)?)
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => std::env::current_dir()?,
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::Format(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{act, random_positive, round};
    use serde_json::json;

    #[test]
    fn tensor_roundtrip_is_exact() {
        let r = random_positive(3, 0.3, 2).unwrap().tensor;
        let text = tensor_to_json(&r, Some(json!({"kind": "random", "seed": 2}))).unwrap();
        let back = parse_tensor(&text).unwrap();
        assert_eq!(back.tensor.coeffs(), r.coeffs());
        assert_eq!(back.construction.unwrap()["seed"], 2);
        assert_eq!(
            tensor_to_json(&back.tensor, None).unwrap(),
            tensor_to_json(&r, None).unwrap()
        );
    }

    #[test]
    fn rejects_wrong_format_and_asymmetric_data() {
        let r = round(2).unwrap();
        let mut v: Value = serde_json::from_str(&tensor_to_json(&r, None).unwrap()).unwrap();
        v["format"] = json!("curv-dense-v0");
        assert!(matches!(parse_tensor(&v.to_string()), Err(Error::Format(_))));
        v["format"] = json!(TENSOR_FORMAT);
        v["coeffs"][1] = json!(1e-6);
        assert!(matches!(parse_tensor(&v.to_string()), Err(Error::Symmetry { .. })));
        v["coeffs"] = json!([1.0, 2.0]);
        assert!(matches!(parse_tensor(&v.to_string()), Err(Error::Format(_))));
        assert!(parse_tensor("{not json").is_err());
    }

    #[test]
    fn metric_source_dispatch() {
        let b = BumpMetric::standard(3);
        match parse_metric_source(&bump_to_json(&b).unwrap()).unwrap() {
            MetricSource::Bump(back) => assert_eq!(back, b),
            other => panic!("{other:?}"),
        }
        let t = tensor_to_json(&round(3).unwrap(), None).unwrap();
        assert!(matches!(parse_metric_source(&t).unwrap(), MetricSource::Tensor(_)));
        assert!(parse_metric_source(r#"{"format":"other"}"#).is_err());
    }

    #[test]
    fn matrices_in_both_layouts() {
        let bare = parse_matrix("[[2,0,0],[0,1,0],[0,0,1]]").unwrap();
        let tagged = parse_matrix(&matrix_to_json(&bare).unwrap()).unwrap();
        assert_eq!(bare, tagged);
        assert!(matches!(parse_matrix("[[1,0],[0]]"), Err(Error::Format(_))));
        assert!(matches!(
            parse_matrix("[[1,1,0],[1,1,0],[0,0,1]]"),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn negated_identity_preserves_serialised_bytes() {
        let r = random_positive(3, 0.4, 9).unwrap().tensor;
        let neg = GroupElement::scalar(3, -1.0);
        let a = tensor_to_json(&r, None).unwrap();
        let b = tensor_to_json(&act(&r, &neg).unwrap(), None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "second");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
