use serde::{Deserialize, Serialize};

use crate::entropy::Bits;
use crate::error::{Error, Result};

/// f(ε) = log₂ 1/(1 − √(1 − ε²)).
pub fn error_f(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::invalid(format!("f(ε) needs 0 < ε ≤ 1, got {eps}")));
    }
    // 1 − √(1 − ε²) = ε² / (1 + √(1 − ε²)) avoids cancellation for small ε
    let s = (1.0 - eps * eps).max(0.0).sqrt();
    Ok(-(eps * eps / (1.0 + s)).log2())
}

/// Smoothing parameters (ε, ε′, ε″, ε‴).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams {
    pub eps: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
}

impl SmoothingParams {
    pub fn new(eps: f64, eps1: f64, eps2: f64, eps3: f64) -> Result<Self> {
        let p = SmoothingParams { eps, eps1, eps2, eps3 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::invalid(format!("ε = {} outside (0, 1)", self.eps)));
        }
        for (name, v) in [("ε′", self.eps1), ("ε″", self.eps2), ("ε‴", self.eps3)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::invalid(format!("{name} = {v} outside [0, 1)")));
            }
        }
        Ok(())
    }

    /// Parse `e,e1,e2,e3`.
    pub fn parse(text: &str) -> Result<Self> {
        let v: Vec<f64> = text
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| Error::invalid(format!("bad smoothing parameter `{s}`"))))
            .collect::<Result<_>>()?;
        if v.len() != 4 {
            return Err(Error::invalid(format!("expected four smoothing parameters, got {}", v.len())));
        }
        SmoothingParams::new(v[0], v[1], v[2], v[3])
    }
}

const GOLDEN_MARGIN: f64 = 1e-12;
const GOLDEN_TOL: f64 = 1e-9;

/// g = inf over 0 < ε < 1 − κ of 2f(ε) + log₂ 1/(1 − (ε + κ)²), κ = ε′ + 2ε″ + ε‴ + 2√(1 − tr ρ).
/// The ε of `params` is ignored. An empty range gives +∞.
pub fn error_g(params: &SmoothingParams, trace_rho: f64) -> Result<Bits> {
    if !(trace_rho > 0.0 && trace_rho <= 1.0 + 1e-9) {
        return Err(Error::invalid(format!("trace {trace_rho} outside (0, 1]")));
    }
    let kappa = params.eps1 + 2.0 * params.eps2 + params.eps3 + 2.0 * (1.0 - trace_rho).max(0.0).sqrt();
    let upper = 1.0 - kappa;
    if upper <= 2.0 * GOLDEN_MARGIN {
        return Ok(Bits::PosInf);
    }
    let h = |e: f64| -> f64 {
        let u = e + kappa;
        2.0 * error_f(e).expect("interior point") - (1.0 - u * u).log2()
    };
    let (xmin, fmin) = golden_section(h, GOLDEN_MARGIN, upper - GOLDEN_MARGIN, GOLDEN_TOL);
    let _ = xmin;
    Ok(Bits::Finite(fmin))
}

/// Minimizer of a unimodal function on [a, b] to the given bracket width.
pub(crate) fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x).min(fc).min(fd))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_examples() {
        assert_eq!(error_f(1.0).unwrap(), 0.0);
        assert!((error_f(0.6).unwrap() - 5f64.log2()).abs() < 1e-12);
        assert!((error_f(0.8).unwrap() - 2.5f64.log2()).abs() < 1e-12);
        assert!(error_f(0.0).is_err());
        assert!(error_f(1.1).is_err());
        assert!(error_f(1e-9).unwrap() > 50.0);
    }

    #[test]
    fn g_examples() {
        let p = SmoothingParams { eps: 0.1, eps1: 0.0, eps2: 0.0, eps3: 0.0 };
        let g = error_g(&p, 1.0).unwrap().finite().unwrap();
        assert!((g - 4.0).abs() < 1e-9, "{g}");
        let p = SmoothingParams { eps: 0.1, eps1: 0.05, eps2: 0.05, eps3: 0.04 };
        assert!(error_g(&p, 1.0).unwrap().finite().unwrap() < 6.0);
        let p = SmoothingParams { eps: 0.1, eps1: 0.5, eps2: 0.25, eps3: 0.0 };
        assert_eq!(error_g(&p, 1.0).unwrap(), Bits::PosInf);
    }

    #[test]
    fn params_parse() {
        let p = SmoothingParams::parse("0.3,0.05,0.05,0.05").unwrap();
        assert_eq!(p.eps3, 0.05);
        assert!(SmoothingParams::parse("0.3,0.05").is_err());
        assert!(SmoothingParams::parse("0,0,0,0").is_err());
    }
}
