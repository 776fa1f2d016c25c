//! JSON instance and report files.
//!
//! Complex scalars are `[re, im]` pairs (a bare number is read as a real
//! scalar), matrices are arrays of rows. Floats are written with 17
//! significant digits so that every value round-trips exactly.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::ser::Serialize;
use serde::{Deserialize, Serialize as SerializeDerive};
use serde_json::ser::Formatter;

use crate::certify::{Certificate, Verdict};
use crate::choi::{ChoiMatrix, KrausSet};
use crate::constraints::ProblemInstance;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Deserialize, SerializeDerive)]
#[serde(untagged)]
pub enum Scalar {
    Complex([f64; 2]),
    Real(f64),
}

impl From<Scalar> for Complex64 {
    fn from(s: Scalar) -> Self {
        match s {
            Scalar::Complex([re, im]) => Complex64::new(re, im),
            Scalar::Real(re) => Complex64::new(re, 0.0),
        }
    }
}

pub type JsonMatrix = Vec<Vec<Scalar>>;

pub fn matrix_to_json(m: &CMatrix) -> JsonMatrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| Scalar::Complex([m[(i, j)].re + 0.0, m[(i, j)].im + 0.0])).collect())
        .collect()
}

/// Converts rows to a matrix, rejecting ragged rows.
pub fn matrix_from_json(rows: &JsonMatrix, what: &str) -> Result<CMatrix> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != c {
            return Err(Error::Parse(format!("{what}: row {i} has {} entries, expected {c}", row.len())));
        }
    }
    Ok(CMatrix::from_fn(r, c, |i, j| rows[i][j].into()))
}

#[derive(Clone, Debug, PartialEq, Deserialize, SerializeDerive)]
pub struct PairFile {
    #[serde(alias = "A")]
    pub a: JsonMatrix,
    #[serde(alias = "B")]
    pub b: JsonMatrix,
}

/// Optional solver defaults carried by an instance file; command-line flags take precedence.
#[derive(Clone, Debug, Default, PartialEq, Deserialize, SerializeDerive)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Deserialize, SerializeDerive)]
pub struct InstanceFile {
    pub n: usize,
    pub k: usize,
    pub pairs: Vec<PairFile>,
    #[serde(default)]
    pub trace_preserving: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSection>,
}

impl InstanceFile {
    pub fn from_instance(inst: &ProblemInstance, solver: Option<SolverSection>) -> Self {
        Self {
            n: inst.n,
            k: inst.k,
            pairs: inst
                .pairs
                .iter()
                .map(|(a, b)| PairFile {
                    a: matrix_to_json(a),
                    b: matrix_to_json(b),
                })
                .collect(),
            trace_preserving: inst.trace_preserving,
            solver,
        }
    }

    pub fn to_instance(&self) -> Result<ProblemInstance> {
        let pairs = self
            .pairs
            .iter()
            .enumerate()
            .map(|(nu, p)| {
                let a = matrix_from_json(&p.a, &format!("pair {nu}: A"))?;
                let b = matrix_from_json(&p.b, &format!("pair {nu}: B"))?;
                Ok((a, b))
            })
            .collect::<Result<Vec<_>>>()?;
        ProblemInstance::new(self.n, self.k, pairs, self.trace_preserving)
    }
}

pub fn parse_instance_str(text: &str) -> Result<(ProblemInstance, Option<SolverSection>)> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| Error::Parse(format!("instance: {e}")))?;
    Ok((file.to_instance()?, file.solver))
}

pub fn parse_instance(path: &Path) -> Result<(ProblemInstance, Option<SolverSection>)> {
    let text = std::fs::read_to_string(path)?;
    parse_instance_str(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        e => e,
    })
}

#[derive(Clone, Debug, PartialEq, Deserialize, SerializeDerive)]
pub struct Timing {
    pub elapsed_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Deserialize, SerializeDerive)]
pub struct ReportFile {
    pub tool_version: String,
    pub status: Verdict,
    pub method: String,
    pub n: usize,
    pub k: usize,
    pub trace_preserving: bool,
    /// Choi matrix `Φ`, present whenever a positive semidefinite solution was found.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choi: Option<JsonMatrix>,
    #[serde(default)]
    pub kraus: Vec<JsonMatrix>,
    /// Signed residuals of the full (unpruned) real constraint system at `Φ`.
    #[serde(default)]
    pub residuals: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_eigenvalue: Option<f64>,
    /// Coefficients refer to the full real constraint system.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
    /// Set when the linear constraints alone are contradictory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inconsistency: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span_contains_positive: Option<bool>,
    pub iterations: usize,
    pub timing: Timing,
}

impl ReportFile {
    pub fn choi_matrix(&self) -> Result<Option<ChoiMatrix>> {
        self.choi
            .as_ref()
            .map(|m| ChoiMatrix::new(self.n, self.k, matrix_from_json(m, "choi")?))
            .transpose()
    }

    pub fn kraus_set(&self) -> Result<KrausSet> {
        let elements = self
            .kraus
            .iter()
            .enumerate()
            .map(|(i, m)| matrix_from_json(m, &format!("kraus element {i}")))
            .collect::<Result<Vec<_>>>()?;
        KrausSet::new(self.n, self.k, elements)
    }

    /// The report with timing zeroed, for comparisons across runs.
    pub fn without_timing(&self) -> Self {
        Self {
            timing: Timing { elapsed_seconds: 0.0 },
            ..self.clone()
        }
    }
}

pub fn parse_report_str(text: &str) -> Result<ReportFile> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("report: {e}")))
}

pub fn parse_report(path: &Path) -> Result<ReportFile> {
    parse_report_str(&std::fs::read_to_string(path)?)
}

/// Indented JSON in which nested arrays (matrix rows, complex pairs) stay on
/// one line, and floats carry 17 significant digits.
#[derive(Default)]
struct ReportFormatter {
    /// One entry per open container: `Some(multiline)` for arrays, `None` for objects.
    stack: Vec<Option<bool>>,
    /// Separator owed before the next array element (`Some(first)`).
    pending: Option<bool>,
}

impl ReportFormatter {
    fn depth(&self) -> usize {
        self.stack.len()
    }

    fn newline<W: ?Sized + Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(b"\n")?;
        for _ in 0..self.depth() {
            w.write_all(b"  ")?;
        }
        Ok(())
    }

    /// True when the innermost open array sits inside another array.
    fn inline_array(&self) -> bool {
        let n = self.stack.len();
        n >= 2 && self.stack[n - 1].is_some() && self.stack[n - 2].is_some()
    }

    /// Writes the separator owed before a value.
    fn before_value<W: ?Sized + Write>(&mut self, w: &mut W, container: bool) -> std::io::Result<()> {
        let Some(first) = self.pending.take() else {
            return Ok(());
        };
        let parent_inline = self.inline_array();
        if container && !parent_inline {
            if let Some(Some(multiline)) = self.stack.last_mut() {
                *multiline = true;
            }
            if !first {
                w.write_all(b",")?;
            }
            self.newline(w)
        } else if first {
            Ok(())
        } else {
            w.write_all(b", ")
        }
    }
}

macro_rules! scalar {
    ($($name:ident: $t:ty),*) => {
        $(fn $name<W: ?Sized + Write>(&mut self, w: &mut W, value: $t) -> std::io::Result<()> {
            self.before_value(w, false)?;
            write!(w, "{value}")
        })*
    };
}

impl Formatter for ReportFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        self.before_value(w, false)?;
        write!(w, "{value:.16e}")
    }

    scalar!(write_i64: i64, write_u64: u64, write_i32: i32, write_u32: u32, write_bool: bool);

    fn write_null<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.before_value(w, false)?;
        w.write_all(b"null")
    }

    fn begin_string<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.before_value(w, false)?;
        w.write_all(b"\"")
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.before_value(w, true)?;
        self.stack.push(Some(false));
        w.write_all(b"[")
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, _w: &mut W, first: bool) -> std::io::Result<()> {
        self.pending = Some(first);
        Ok(())
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, _w: &mut W) -> std::io::Result<()> {
        Ok(())
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        let multiline = self.stack.pop().flatten().unwrap_or(false);
        if multiline {
            self.newline(w)?;
        }
        w.write_all(b"]")
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.before_value(w, true)?;
        self.stack.push(None);
        w.write_all(b"{")
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        if !first {
            w.write_all(b",")?;
        }
        self.newline(w)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        w.write_all(b": ")
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.stack.pop();
        self.newline(w)?;
        w.write_all(b"}")
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, ReportFormatter::default());
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Parse(format!("serialization: {e}")))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

/// Parses a bare matrix (`[[..], ..]`) given inline or as a file path.
pub fn parse_matrix_arg(arg: &str) -> Result<CMatrix> {
    let text = if arg.trim_start().starts_with('[') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg)?
    };
    let rows: JsonMatrix = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("matrix: {e}")))?;
    matrix_from_json(&rows, "matrix")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::testutil::random_cmatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const REFERENCE: &str = r#"{
      "n": 2, "k": 2,
      "pairs": [
        {"a": [[2, 1], [1, 0]], "b": [[4, 0], [0, 0]]},
        {"a": [[1, 1], [1, 2]], "b": [[3.5, 1.5], [1.5, 2.5]]}
      ]
    }"#;

    #[test]
    fn parses_reference_instance() {
        let (inst, solver) = parse_instance_str(REFERENCE).unwrap();
        assert_eq!(inst, crate::pipeline::golden::instance());
        assert!(solver.is_none());
    }

    #[test]
    fn scalar_instance() {
        let (inst, _) = parse_instance_str(r#"{"n":1,"k":1,"pairs":[{"a":[[[2,0]]],"b":[[6]]}]}"#).unwrap();
        assert_eq!(inst.p(), 1);
        assert_eq!(inst.pairs[0].1[(0, 0)], Complex64::new(6.0, 0.0));
    }

    #[test]
    fn wrong_shape_names_pair() {
        let text = r#"{"n":2,"k":1,"pairs":[{"a":[[1,0],[0,1]],"b":[[1]]},{"a":[[1,0],[0,1],[1,1]],"b":[[1]]}]}"#;
        let err = parse_instance_str(text).unwrap_err().to_string();
        assert!(err.contains("pair 1"), "{err}");
        let ragged = r#"{"n":2,"k":1,"pairs":[{"a":[[1,0],[0]],"b":[[1]]}]}"#;
        let err = parse_instance_str(ragged).unwrap_err().to_string();
        assert!(err.contains("pair 0: A") && err.contains("row 1"), "{err}");
    }

    #[test]
    fn malformed_json_reports_location() {
        let err = parse_instance_str("{\"n\": 2,\n \"k\": }").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn instance_round_trip_is_exact() {
        let mut r = ChaCha8Rng::seed_from_u64(3);
        let pairs = (0..3).map(|_| (random_cmatrix(&mut r, 2, 2), random_cmatrix(&mut r, 3, 3))).collect();
        let inst = ProblemInstance::new(2, 3, pairs, true).unwrap();
        let solver = SolverSection {
            method: Some("barrier".into()),
            tol: Some(1e-9),
            max_iters: None,
            seed: Some(4),
        };
        let text = to_json_string(&InstanceFile::from_instance(&inst, Some(solver.clone()))).unwrap();
        let (back, s) = parse_instance_str(&text).unwrap();
        assert_eq!(back, inst);
        assert_eq!(s, Some(solver));
    }

    #[test]
    fn floats_have_seventeen_digits() {
        let text = to_json_string(&vec![0.1f64, -1.0 / 3.0]).unwrap();
        assert!(text.contains("1.0000000000000001e-1"), "{text}");
        assert!(text.contains("-3.3333333333333331e-1"), "{text}");
    }

    #[test]
    fn inline_matrix_argument() {
        let m = parse_matrix_arg("[[1, [0, 2]], [0, 3]]").unwrap();
        assert_eq!(m[(0, 1)], Complex64::new(0.0, 2.0));
    }
}
