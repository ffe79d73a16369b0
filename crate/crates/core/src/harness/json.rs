//! JSON documents for maps, tests, certificates and reports.
//!
//! Complex numbers are `[re, im]`, matrices `{"rows", "cols", "data"}` with
//! row-major nested arrays. Top-level documents carry `schema_version` and
//! `kind`. Floats are written in shortest round-trip form, so
//! `deserialize(serialize(x)) == x` holds entrywise.

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use serde_json::Value;

use crate::cpmaps::CPMap;
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};
use crate::mtests::MatrixTest;
use crate::polar::SeparationCertificate;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Vec<[f64; 2]>>,
}

impl From<&ComplexMatrix> for MatrixDoc {
    fn from(m: &ComplexMatrix) -> Self {
        MatrixDoc {
            rows: m.rows(),
            cols: m.cols(),
            data: (0..m.rows())
                .map(|i| (0..m.cols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                .collect(),
        }
    }
}

impl MatrixDoc {
    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        if self.data.len() != self.rows || self.data.iter().any(|r| r.len() != self.cols) {
            return Err(Error::Validation(format!(
                "matrix declares {}x{} but data has a different shape",
                self.rows, self.cols
            )));
        }
        let flat = self
            .data
            .iter()
            .flatten()
            .map(|[re, im]| C64::new(*re, *im))
            .collect();
        ComplexMatrix::new(self.rows, self.cols, flat).map_err(to_validation)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CPMapDoc {
    pub m: usize,
    pub n: usize,
    pub choi: MatrixDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixTestDoc {
    pub k: usize,
    pub rho: MatrixDoc,
    pub s: MatrixDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateDoc {
    pub test: MatrixTestDoc,
    pub scale: f64,
    pub sat_sup_upper: f64,
    pub value_at_target: f64,
}

fn to_validation(e: Error) -> Error {
    match e {
        Error::Validation(_) => e,
        other => Error::Validation(other.to_string()),
    }
}

/// Conversion between a domain object and its document body.
pub trait Document: Sized {
    const KIND: &'static str;
    type Doc: Serialize + DeserializeOwned;

    fn to_doc(&self) -> Self::Doc;
    /// Rebuilds the object, enforcing its invariants.
    fn from_doc(doc: Self::Doc) -> Result<Self>;
}

impl Document for CPMap {
    const KIND: &'static str = "cp_map";
    type Doc = CPMapDoc;

    fn to_doc(&self) -> CPMapDoc {
        CPMapDoc {
            m: self.m(),
            n: self.n(),
            choi: self.choi().into(),
        }
    }

    fn from_doc(doc: CPMapDoc) -> Result<Self> {
        let choi = doc.choi.to_matrix()?;
        CPMap::from_choi(doc.m, doc.n, choi).map_err(to_validation)
    }
}

impl Document for MatrixTest {
    const KIND: &'static str = "matrix_test";
    type Doc = MatrixTestDoc;

    fn to_doc(&self) -> MatrixTestDoc {
        MatrixTestDoc {
            k: self.k(),
            rho: self.rho().into(),
            s: self.s().into(),
        }
    }

    fn from_doc(doc: MatrixTestDoc) -> Result<Self> {
        MatrixTest::new(doc.k, doc.rho.to_matrix()?, doc.s.to_matrix()?).map_err(to_validation)
    }
}

impl Document for SeparationCertificate {
    const KIND: &'static str = "separation_certificate";
    type Doc = CertificateDoc;

    fn to_doc(&self) -> CertificateDoc {
        CertificateDoc {
            test: self.test.to_doc(),
            scale: self.scale,
            sat_sup_upper: self.sat_sup_upper,
            value_at_target: self.value_at_target,
        }
    }

    fn from_doc(doc: CertificateDoc) -> Result<Self> {
        let cert = SeparationCertificate {
            test: MatrixTest::from_doc(doc.test)?,
            scale: doc.scale,
            sat_sup_upper: doc.sat_sup_upper,
            value_at_target: doc.value_at_target,
        };
        if !(cert.sat_sup_upper <= 1.0 && cert.value_at_target > 1.0) {
            return Err(Error::Validation(format!(
                "certificate needs sat_sup_upper <= 1 < value_at_target, got {} and {}",
                cert.sat_sup_upper, cert.value_at_target
            )));
        }
        Ok(cert)
    }
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    schema_version: u32,
    kind: String,
    #[serde(flatten)]
    body: T,
}

pub(crate) fn parse_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Embeds an object as a JSON value with version and kind tags.
pub fn to_value<T: Document>(x: &T) -> Value {
    serde_json::to_value(Envelope {
        schema_version: SCHEMA_VERSION,
        kind: T::KIND.to_string(),
        body: x.to_doc(),
    })
    .expect("documents contain only finite numbers and strings")
}

pub fn from_value<T: Document>(v: &Value) -> Result<T> {
    let env: Envelope<Value> = serde_json::from_value(v.clone()).map_err(parse_error)?;
    check_envelope::<T>(env.schema_version, &env.kind)?;
    let body: T::Doc = serde_json::from_value(env.body).map_err(parse_error)?;
    T::from_doc(body)
}

fn check_envelope<T: Document>(version: u32, kind: &str) -> Result<()> {
    if version != SCHEMA_VERSION {
        return Err(Error::Validation(format!(
            "unsupported schema_version {version}, expected {SCHEMA_VERSION}"
        )));
    }
    if kind != T::KIND {
        return Err(Error::Validation(format!(
            "document kind is {kind:?}, expected {:?}",
            T::KIND
        )));
    }
    Ok(())
}

pub fn serialize<T: Document>(x: &T) -> String {
    serde_json::to_string_pretty(&to_value(x)).expect("serializing a JSON value cannot fail")
}

/// Parses a document; syntax and shape errors carry line and column.
pub fn deserialize<T: Document>(text: &str) -> Result<T> {
    let env: Envelope<T::Doc> = serde_json::from_str(text).map_err(parse_error)?;
    check_envelope::<T>(env.schema_version, &env.kind)?;
    T::from_doc(env.body)
}
