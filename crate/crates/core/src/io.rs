//! JSON exchange formats.
//!
//! Matrices are written as `{"dims": [d1, d2, ...], "matrix": [[[re, im], ...], ...]}`;
//! entries may also be plain numbers on input. Floats use shortest round-trip
//! formatting, so written matrices re-parse to identical bits.

use std::path::Path;

use serde::de::{DeserializeOwned, Error as _};
use serde::ser::{SerializeSeq, SerializeStruct};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::covariant::Representation;
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};
use crate::majorization::ConversionProblem;
use crate::quantum::QuantumChannel;
use crate::thermo::{ClockConfig, ThermoContext};

struct Row<'a>(&'a [C64]);

impl Serialize for Row<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.len()))?;
        for z in self.0 {
            seq.serialize_element(&[z.re, z.im])?;
        }
        seq.end()
    }
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.rows()))?;
        for r in 0..self.rows() {
            seq.serialize_element(&Row(&self.data()[r * self.cols()..(r + 1) * self.cols()]))?;
        }
        seq.end()
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<Entry>> = Vec::deserialize(d)?;
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(D::Error::custom("matrix rows have different lengths"));
        }
        let data = rows
            .into_iter()
            .flatten()
            .map(|e| match e {
                Entry::Real(x) => C64::new(x, 0.0),
                Entry::Complex([re, im]) => C64::new(re, im),
            })
            .collect::<Vec<_>>();
        let n = data.len().checked_div(cols).unwrap_or(0);
        ComplexMatrix::from_vec(n, cols, data).map_err(D::Error::custom)
    }
}

impl Serialize for QuantumChannel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("QuantumChannel", 3)?;
        st.serialize_field("d_in", &self.d_in())?;
        st.serialize_field("d_out", &self.d_out())?;
        st.serialize_field("choi", &MatrixDoc::new(self.choi().clone(), vec![self.d_in(), self.d_out()]))?;
        st.end()
    }
}

/// A matrix with its tensor-factor dimensions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    pub matrix: ComplexMatrix,
}

impl MatrixDoc {
    pub fn new(matrix: ComplexMatrix, dims: Vec<usize>) -> Self {
        Self { dims: Some(dims), matrix }
    }

    pub fn single(matrix: ComplexMatrix) -> Self {
        let d = matrix.rows();
        Self::new(matrix, vec![d])
    }

    /// Square matrix and factor dimensions, checked for consistency.
    pub fn checked(self, what: &str) -> Result<(ComplexMatrix, Vec<usize>)> {
        let m = self.matrix;
        if !m.is_square() || m.rows() == 0 {
            return Err(Error::Parse(format!("{what}: matrix must be square and nonempty, got {}x{}", m.rows(), m.cols())));
        }
        let dims = self.dims.unwrap_or_else(|| vec![m.rows()]);
        if dims.iter().product::<usize>() != m.rows() {
            return Err(Error::Parse(format!("{what}: dims {dims:?} do not multiply to {}", m.rows())));
        }
        Ok((m, dims))
    }

    pub fn square(self, what: &str) -> Result<ComplexMatrix> {
        Ok(self.checked(what)?.0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemDoc {
    pub inputs: Vec<MatrixDoc>,
    pub targets: Vec<MatrixDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

impl ProblemDoc {
    pub fn from_problem(p: &ConversionProblem) -> Self {
        Self {
            inputs: p.inputs.iter().cloned().map(MatrixDoc::single).collect(),
            targets: p.targets.iter().cloned().map(MatrixDoc::single).collect(),
            weights: Some(p.weights.clone()),
        }
    }

    pub fn to_problem(&self) -> Result<ConversionProblem> {
        let conv = |v: &[MatrixDoc], what: &str| -> Result<Vec<ComplexMatrix>> {
            v.iter().enumerate().map(|(i, m)| m.clone().square(&format!("{what}[{i}]"))).collect()
        };
        ConversionProblem::new(conv(&self.inputs, "inputs")?, conv(&self.targets, "targets")?, self.weights.clone())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChargeDoc {
    pub input: MatrixDoc,
    /// Defaults to the input charge.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<MatrixDoc>,
    pub mu: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContextDoc {
    pub h_in: MatrixDoc,
    /// Defaults to `h_in`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_out: Option<MatrixDoc>,
    pub beta: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub charges: Vec<ChargeDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clock: Option<ClockConfig>,
}

impl ContextDoc {
    pub fn from_context(ctx: &ThermoContext, clock: Option<ClockConfig>) -> Self {
        Self {
            h_in: MatrixDoc::single(ctx.h_in.clone()),
            h_out: Some(MatrixDoc::single(ctx.h_out.clone())),
            beta: ctx.beta,
            charges: ctx
                .charges_in
                .iter()
                .zip(&ctx.charges_out)
                .zip(&ctx.mus)
                .map(|((i, o), mu)| ChargeDoc {
                    input: MatrixDoc::single(i.clone()),
                    output: Some(MatrixDoc::single(o.clone())),
                    mu: *mu,
                })
                .collect(),
            clock,
        }
    }

    pub fn to_context(&self) -> Result<(ThermoContext, Option<ClockConfig>)> {
        let h_in = self.h_in.clone().square("h_in")?;
        let h_out = match &self.h_out {
            Some(m) => m.clone().square("h_out")?,
            None => h_in.clone(),
        };
        let mut ctx = ThermoContext::new(h_in, h_out, self.beta)?;
        for (k, c) in self.charges.iter().enumerate() {
            let xi = c.input.clone().square(&format!("charges[{k}].input"))?;
            let xo = match &c.output {
                Some(m) => m.clone().square(&format!("charges[{k}].output"))?,
                None => xi.clone(),
            };
            ctx = ctx.with_charge(xi, xo, c.mu)?;
        }
        let clock = self.clock.map(|c| ClockConfig::new(c.n, c.epsilon)).transpose()?;
        Ok((ctx, clock))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FactorDoc {
    Cyclic {
        order: usize,
        input: MatrixDoc,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        output: Option<MatrixDoc>,
    },
    OneParameter {
        input: MatrixDoc,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        output: Option<MatrixDoc>,
    },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RepresentationDoc {
    pub factors: Vec<FactorDoc>,
}

impl RepresentationDoc {
    pub fn to_representation(&self) -> Result<Representation> {
        let mut rep = Representation::trivial();
        for (k, f) in self.factors.iter().enumerate() {
            let pair = |input: &MatrixDoc, output: &Option<MatrixDoc>| -> Result<(ComplexMatrix, ComplexMatrix)> {
                let i = input.clone().square(&format!("factors[{k}].input"))?;
                let o = match output {
                    Some(m) => m.clone().square(&format!("factors[{k}].output"))?,
                    None => i.clone(),
                };
                Ok((i, o))
            };
            rep = match f {
                FactorDoc::Cyclic { order, input, output } => {
                    let (i, o) = pair(input, output)?;
                    rep.with_cyclic(*order, i, o)?
                }
                FactorDoc::OneParameter { input, output } => {
                    let (i, o) = pair(input, output)?;
                    rep.with_one_parameter(i, o)?
                }
            };
        }
        Ok(rep)
    }
}

/// Parses a JSON document, naming the file in errors.
pub fn from_json_str<T: DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    from_json_str(&text, &path.display().to_string())
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json(value)? + "\n")?;
    Ok(())
}
