use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::operator::{io::matrix_to_rows, HermitianOperator};
use crate::sdp::{SdpSolution, SolveStatus};

/// Entropy in bits with explicit markers for ±∞.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bits {
    Finite(f64),
    PosInf,
    NegInf,
}

impl Bits {
    /// log₂ x; non-positive x maps to −∞.
    pub fn log2_of(x: f64) -> Bits {
        if x.is_nan() || x <= 0.0 {
            Bits::NegInf
        } else if x.is_infinite() {
            Bits::PosInf
        } else {
            Bits::Finite(x.log2())
        }
    }

    /// −log₂ x; non-positive x maps to +∞.
    pub fn neg_log2_of(x: f64) -> Bits {
        Bits::log2_of(x).neg()
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Bits::Finite(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Bits::Finite(_))
    }

    pub fn neg(self) -> Bits {
        match self {
            Bits::Finite(v) => Bits::Finite(-v),
            Bits::PosInf => Bits::NegInf,
            Bits::NegInf => Bits::PosInf,
        }
    }

    pub fn shift(self, x: f64) -> Bits {
        match self {
            Bits::Finite(v) => Bits::Finite(v + x),
            other => other,
        }
    }

    /// Finite value with the markers mapped to ±f64::INFINITY (for reporting only).
    pub fn to_f64(&self) -> f64 {
        match self {
            Bits::Finite(v) => *v,
            Bits::PosInf => f64::INFINITY,
            Bits::NegInf => f64::NEG_INFINITY,
        }
    }

    /// Rank used for symbolic ordering: −∞ < finite < +∞.
    fn rank(&self) -> i8 {
        match self {
            Bits::NegInf => -1,
            Bits::Finite(_) => 0,
            Bits::PosInf => 1,
        }
    }
}

impl PartialOrd for Bits {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        match (self, other) {
            (Bits::Finite(a), Bits::Finite(b)) => a.partial_cmp(b),
            _ => self.rank().partial_cmp(&other.rank()),
        }
    }
}

impl std::fmt::Display for Bits {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Bits::Finite(v) => write!(f, "{v}"),
            Bits::PosInf => f.write_str("inf"),
            Bits::NegInf => f.write_str("-inf"),
        }
    }
}

impl Serialize for Bits {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Bits::Finite(v) => s.serialize_f64(*v),
            Bits::PosInf => s.serialize_str("inf"),
            Bits::NegInf => s.serialize_str("-inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Bits {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Bits::Finite(v)),
            Raw::Str(s) if s == "inf" => Ok(Bits::PosInf),
            Raw::Str(s) if s == "-inf" => Ok(Bits::NegInf),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("unknown entropy marker `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    SdpPrimal,
    SdpDual,
    Duality,
}

/// Optimizer attached to an entropy value.
#[derive(Clone, Debug)]
pub enum Certificate {
    /// Optimal σ_B (unnormalized for min-entropy programs: tr σ = 2^{−H}).
    Sigma(HermitianOperator),
    /// Optimal Z_AB of the max-entropy programs.
    Z(HermitianOperator),
    Lambda(f64),
}

impl Serialize for Certificate {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(3))?;
        match self {
            Certificate::Sigma(h) | Certificate::Z(h) => {
                m.serialize_entry("kind", if matches!(self, Certificate::Sigma(_)) { "sigma" } else { "z" })?;
                m.serialize_entry("factors", h.layout().factors())?;
                m.serialize_entry("matrix", &matrix_to_rows(h.matrix()))?;
            }
            Certificate::Lambda(v) => {
                m.serialize_entry("kind", "lambda")?;
                m.serialize_entry("value", v)?;
            }
        }
        m.end()
    }
}

/// Solver diagnostics kept alongside an SDP-derived value.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SdpSummary {
    pub status: SolveStatus,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

impl From<&SdpSolution> for SdpSummary {
    fn from(s: &SdpSolution) -> Self {
        SdpSummary {
            status: s.status,
            primal_objective: s.primal_objective,
            dual_objective: s.dual_objective,
            gap: s.gap,
            primal_residual: s.primal_residual,
            dual_residual: s.dual_residual,
            iterations: s.iterations,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyValue {
    pub bits: Bits,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sdp: Option<SdpSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl EntropyValue {
    pub fn closed_form(bits: Bits) -> Self {
        EntropyValue { bits, method: Method::ClosedForm, certificate: None, sdp: None, notes: Vec::new() }
    }

    pub fn with_certificate(mut self, c: Certificate) -> Self {
        self.certificate = Some(c);
        self
    }

    pub fn finite(&self) -> Option<f64> {
        self.bits.finite()
    }

    /// Finite value or an invariant error naming `what`.
    pub fn expect_finite(&self, what: &str) -> crate::Result<f64> {
        self.bits.finite().ok_or_else(|| crate::Error::InvalidArgument(format!("{what} is {}", self.bits)))
    }

    pub fn sigma(&self) -> Option<&HermitianOperator> {
        match &self.certificate {
            Some(Certificate::Sigma(h)) => Some(h),
            _ => None,
        }
    }

    pub fn z(&self) -> Option<&HermitianOperator> {
        match &self.certificate {
            Some(Certificate::Z(h)) => Some(h),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn markers_round_trip_and_order() {
        for b in [Bits::Finite(-1.5), Bits::PosInf, Bits::NegInf] {
            let s = serde_json::to_string(&b).unwrap();
            let back: Bits = serde_json::from_str(&s).unwrap();
            assert_eq!(back, b);
        }
        assert_eq!(serde_json::to_string(&Bits::NegInf).unwrap(), "\"-inf\"");
        assert!(Bits::NegInf < Bits::Finite(-1e300));
        assert!(Bits::Finite(1e300) < Bits::PosInf);
        assert_eq!(Bits::log2_of(0.0), Bits::NegInf);
        assert_eq!(Bits::neg_log2_of(0.5), Bits::Finite(1.0));
    }
}
