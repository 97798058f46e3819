//! The convex generators Φ of matrix Φ-entropies.

use alloc::format;
use alloc::string::String;

use crate::error::{Error, Result};
use crate::linalg::SpectralInterval;
use crate::scalar::{ScalarFunction, Shifted, StandardFunction};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhiKind {
    Affine { alpha: f64, beta: f64 },
    /// `x^p`, `p ∈ [1, 2]`
    Power(f64),
    XLogX,
    /// `x³` — outside the entropy class, kept as a negative control.
    Cube,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiFunction {
    kind: PhiKind,
    f: StandardFunction,
}

impl PhiFunction {
    pub fn affine(alpha: f64, beta: f64) -> Self {
        Self { kind: PhiKind::Affine { alpha, beta }, f: StandardFunction::Affine { a: alpha, b: beta } }
    }

    pub fn power(p: f64) -> Result<Self> {
        if !(1.0..=2.0).contains(&p) {
            return Err(Error::InvalidExponent(p));
        }
        Ok(Self { kind: PhiKind::Power(p), f: StandardFunction::Power(p) })
    }

    pub fn square() -> Self {
        Self { kind: PhiKind::Power(2.0), f: StandardFunction::Power(2.0) }
    }

    pub fn xlogx() -> Self {
        Self { kind: PhiKind::XLogX, f: StandardFunction::XLogX }
    }

    pub fn cube() -> Self {
        Self { kind: PhiKind::Cube, f: StandardFunction::Power(3.0) }
    }

    pub fn kind(&self) -> PhiKind {
        self.kind
    }

    pub fn is_affine(&self) -> bool {
        matches!(self.kind, PhiKind::Affine { .. }) || self.kind == PhiKind::Power(1.0)
    }

    /// Whether Φ belongs to the matrix-entropy class.
    pub fn in_class(&self) -> bool {
        self.kind != PhiKind::Cube
    }

    /// `Ψ = Φ'`
    pub fn psi(&self) -> Shifted<Self> {
        Shifted { inner: *self, shift: 1 }
    }

    /// Parses `power:1.5`, `xlogx`, `affine:a,b`, `x2`/`square`, `cube`/`x3`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (s, None),
        };
        let num = |t: &str| -> Result<f64> {
            t.trim().parse::<f64>().map_err(|_| Error::InvalidPhi(format!("bad number `{t}` in `{s}`")))
        };
        match (head.to_ascii_lowercase().as_str(), arg) {
            ("power", Some(a)) => Self::power(num(a)?),
            ("xlogx", None) | ("entropy", None) => Ok(Self::xlogx()),
            ("x2", None) | ("square", None) => Ok(Self::square()),
            ("x3", None) | ("cube", None) => Ok(Self::cube()),
            ("affine", Some(a)) => {
                let (al, be) = a.split_once(',').ok_or_else(|| Error::InvalidPhi(format!("affine needs `a,b`: `{s}`")))?;
                Ok(Self::affine(num(al)?, num(be)?))
            }
            _ => Err(Error::InvalidPhi(format!("unknown descriptor `{s}`"))),
        }
    }

    pub fn descriptor(&self) -> String {
        match self.kind {
            PhiKind::Affine { alpha, beta } => format!("affine:{alpha},{beta}"),
            PhiKind::Power(p) => format!("power:{p}"),
            PhiKind::XLogX => "xlogx".into(),
            PhiKind::Cube => "cube".into(),
        }
    }
}

impl ScalarFunction for PhiFunction {
    fn derivative(&self, order: usize, x: f64) -> f64 {
        self.f.derivative(order, x)
    }

    fn domain(&self, order: usize) -> SpectralInterval {
        self.f.domain(order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        for s in ["power:1.5", "xlogx", "affine:2,-1", "cube", "power:2"] {
            let p = PhiFunction::parse(s).unwrap();
            assert_eq!(PhiFunction::parse(&p.descriptor()).unwrap(), p);
        }
        assert_eq!(PhiFunction::parse("x2").unwrap(), PhiFunction::square());
        assert_eq!(PhiFunction::parse("power:2.5"), Err(Error::InvalidExponent(2.5)));
        assert!(PhiFunction::parse("sin").is_err());
    }

    #[test]
    fn class_membership() {
        assert!(!PhiFunction::cube().in_class());
        assert!(PhiFunction::power(1.0).unwrap().is_affine());
        assert!(!PhiFunction::xlogx().is_affine());
    }

    #[test]
    fn second_derivative_positive() {
        for phi in [PhiFunction::power(1.2).unwrap(), PhiFunction::power(1.5).unwrap(), PhiFunction::square(), PhiFunction::xlogx()] {
            for &x in &[1e-3, 0.5, 3.0] {
                assert!(phi.derivative(2, x) > 0.0);
            }
        }
    }
}
