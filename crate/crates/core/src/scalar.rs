//! Scalar functions with derivatives, the raw material of standard matrix functions.

use crate::linalg::SpectralInterval;

/// A real function together with derivatives up to order five.
pub trait ScalarFunction: Sync {
    /// `order = 0` is the value.
    fn derivative(&self, order: usize, x: f64) -> f64;

    /// Interval on which the `order`-th derivative is finite.
    fn domain(&self, order: usize) -> SpectralInterval;

    fn value(&self, x: f64) -> f64 {
        self.derivative(0, x)
    }
}

impl<T: ScalarFunction + ?Sized> ScalarFunction for &T {
    fn derivative(&self, order: usize, x: f64) -> f64 {
        (**self).derivative(order, x)
    }
    fn domain(&self, order: usize) -> SpectralInterval {
        (**self).domain(order)
    }
}

/// Closed-form scalar functions used throughout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StandardFunction {
    /// `a·x + b`
    Affine { a: f64, b: f64 },
    /// `x^p`; integer exponents act on the whole line, others on `[0, ∞)`.
    Power(f64),
    /// `x log x` with `0 log 0 = 0`
    XLogX,
    Log,
    Exp,
}

fn falling(p: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (p - j as f64))
}

fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, j| acc * j as f64)
}

fn sign(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn is_integer(p: f64) -> bool {
    p >= 0.0 && p == libm::floor(p) && p < 64.0
}

impl ScalarFunction for StandardFunction {
    fn derivative(&self, order: usize, x: f64) -> f64 {
        match *self {
            Self::Affine { a, b } => match order {
                0 => a * x + b,
                1 => a,
                _ => 0.0,
            },
            Self::Power(p) => {
                let c = falling(p, order);
                if c == 0.0 {
                    return 0.0;
                }
                let e = p - order as f64;
                if is_integer(p) {
                    c * libm::pow(x, e)
                } else if x == 0.0 {
                    if e > 0.0 {
                        0.0
                    } else if e == 0.0 {
                        c
                    } else {
                        f64::INFINITY * c.signum()
                    }
                } else {
                    c * libm::pow(x, e)
                }
            }
            Self::XLogX => match order {
                0 => {
                    if x == 0.0 {
                        0.0
                    } else {
                        x * libm::log(x)
                    }
                }
                1 => libm::log(x) + 1.0,
                k => sign(k) * factorial(k - 2) / libm::pow(x, (k - 1) as f64),
            },
            Self::Log => match order {
                0 => libm::log(x),
                k => sign(k - 1) * factorial(k - 1) / libm::pow(x, k as f64),
            },
            Self::Exp => libm::exp(x),
        }
    }

    fn domain(&self, order: usize) -> SpectralInterval {
        match *self {
            Self::Affine { .. } | Self::Exp => SpectralInterval::real_line(),
            Self::Power(p) => {
                if is_integer(p) {
                    SpectralInterval::real_line()
                } else if p - order as f64 >= 0.0 {
                    SpectralInterval::nonnegative()
                } else {
                    SpectralInterval::positive()
                }
            }
            Self::XLogX => {
                if order == 0 {
                    SpectralInterval::nonnegative()
                } else {
                    SpectralInterval::positive()
                }
            }
            Self::Log => SpectralInterval::positive(),
        }
    }
}

/// `f^{(shift)}` viewed as a function in its own right.
#[derive(Debug, Clone, Copy)]
pub struct Shifted<F> {
    pub inner: F,
    pub shift: usize,
}

impl<F: ScalarFunction> ScalarFunction for Shifted<F> {
    fn derivative(&self, order: usize, x: f64) -> f64 {
        self.inner.derivative(order + self.shift, x)
    }
    fn domain(&self, order: usize) -> SpectralInterval {
        self.inner.domain(order + self.shift)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: &dyn Fn(f64) -> f64, x: f64) -> f64 {
        let h = 1e-5 * (1.0 + x.abs());
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn derivatives_are_consistent() {
        let fs = [
            StandardFunction::Power(1.5),
            StandardFunction::Power(2.0),
            StandardFunction::Power(1.2),
            StandardFunction::XLogX,
            StandardFunction::Log,
            StandardFunction::Exp,
            StandardFunction::Power(3.0),
        ];
        for f in fs {
            for &x in &[0.3, 1.0, 2.7] {
                for k in 0..4 {
                    let g = |y: f64| f.derivative(k, y);
                    let num = fd(&g, x);
                    let exact = f.derivative(k + 1, x);
                    assert!((num - exact).abs() < 1e-6 * (1.0 + exact.abs()), "{f:?} k={k} x={x}: {num} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn boundary_values() {
        assert_eq!(StandardFunction::XLogX.value(0.0), 0.0);
        assert_eq!(StandardFunction::Power(1.5).derivative(1, 0.0), 0.0);
        assert!(StandardFunction::Power(1.5).derivative(2, 0.0).is_infinite());
        assert_eq!(StandardFunction::Power(2.0).value(-3.0), 9.0);
        assert_eq!(StandardFunction::Power(2.0).derivative(3, 1.0), 0.0);
    }
}
