//! Forward-mode dual numbers, generic in the underlying scalar so they nest.
//!
//! `Dual<f64>` carries a value and one partial per coordinate (exact first
//! derivatives); `Dual<Dual<f64>>` carries exact second derivatives, which
//! the Jacobi-defect computation needs to differentiate an inner bracket.

/// Arithmetic interface shared by `f64` and `Dual<S>`.
///
/// Domain checks (division by zero, log of non-positive, ...) happen in the
/// evaluator against `primal()` before these total operations are called.
pub trait Scalar: Clone + std::fmt::Debug {
    fn from_f64(x: f64) -> Self;
    /// The innermost plain value, through any nesting.
    fn primal(&self) -> f64;
    /// True when the quantity carries no derivative content at any level.
    fn is_constant(&self) -> bool;

    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn div(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn tan(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn atan2(&self, x: &Self) -> Self;

    fn is_zero(&self) -> bool {
        self.primal() == 0.0 && self.is_constant()
    }
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn primal(&self) -> f64 {
        *self
    }
    fn is_constant(&self) -> bool {
        true
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn tan(&self) -> Self {
        f64::tan(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn atan2(&self, x: &Self) -> Self {
        f64::atan2(*self, *x)
    }
}

/// Value plus one partial derivative per environment slot.
///
/// A literal has all-zero partials; the i-th coordinate seeds the i-th
/// standard basis vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Dual<S: Scalar> {
    pub value: S,
    pub partials: Vec<S>,
}

impl<S: Scalar> Dual<S> {
    pub fn constant(x: f64, width: usize) -> Self {
        Dual {
            value: S::from_f64(x),
            partials: vec![S::from_f64(0.0); width],
        }
    }

    /// Seeds slot `slot` of a `width`-wide environment with derivative one.
    pub fn variable(x: f64, slot: usize, width: usize) -> Self {
        let mut partials = vec![S::from_f64(0.0); width];
        partials[slot] = S::from_f64(1.0);
        Dual {
            value: S::from_f64(x),
            partials,
        }
    }

    pub fn width(&self) -> usize {
        self.partials.len()
    }

    /// Chain rule for a unary map: value `v`, partials scaled by `dfdx`.
    /// Zero partials stay exactly zero so that constant subexpressions do
    /// not pick up NaN from unbounded derivative factors.
    fn chain(&self, v: S, dfdx: S) -> Self {
        let partials = self
            .partials
            .iter()
            .map(|p| if p.is_zero() { p.clone() } else { p.mul(&dfdx) })
            .collect();
        Dual { value: v, partials }
    }
}

impl<S: Scalar> Scalar for Dual<S> {
    fn from_f64(x: f64) -> Self {
        // Width-0 constants widen lazily in binary operations.
        Dual {
            value: S::from_f64(x),
            partials: Vec::new(),
        }
    }

    fn primal(&self) -> f64 {
        self.value.primal()
    }

    fn is_constant(&self) -> bool {
        self.value.is_constant() && self.partials.iter().all(|p| p.is_zero())
    }

    fn add(&self, other: &Self) -> Self {
        binary(self, other, |a, b| a.add(b), |a, b, i| {
            a.partial(i).add(&b.partial(i))
        })
    }

    fn sub(&self, other: &Self) -> Self {
        binary(self, other, |a, b| a.sub(b), |a, b, i| {
            a.partial(i).sub(&b.partial(i))
        })
    }

    fn mul(&self, other: &Self) -> Self {
        binary(self, other, |a, b| a.mul(b), |a, b, i| {
            a.partial(i).mul(&b.value).add(&a.value.mul(&b.partial(i)))
        })
    }

    fn div(&self, other: &Self) -> Self {
        let denom_sq = other.value.mul(&other.value);
        binary(self, other, |a, b| a.div(b), |a, b, i| {
            a.partial(i)
                .mul(&b.value)
                .sub(&a.value.mul(&b.partial(i)))
                .div(&denom_sq)
        })
    }

    fn neg(&self) -> Self {
        Dual {
            value: self.value.neg(),
            partials: self.partials.iter().map(|p| p.neg()).collect(),
        }
    }

    fn sin(&self) -> Self {
        self.chain(self.value.sin(), self.value.cos())
    }

    fn cos(&self) -> Self {
        self.chain(self.value.cos(), self.value.sin().neg())
    }

    fn tan(&self) -> Self {
        let t = self.value.tan();
        let one = S::from_f64(1.0);
        let dfdx = one.add(&t.mul(&t));
        self.chain(t, dfdx)
    }

    fn exp(&self) -> Self {
        let e = self.value.exp();
        self.chain(e.clone(), e)
    }

    fn ln(&self) -> Self {
        let one = S::from_f64(1.0);
        self.chain(self.value.ln(), one.div(&self.value))
    }

    fn sqrt(&self) -> Self {
        let s = self.value.sqrt();
        if self.is_constant() {
            // Partials are all zero already; skip the 1/(2 sqrt) factor,
            // which is unbounded at zero.
            return Dual {
                value: s,
                partials: self.partials.clone(),
            };
        }
        let half = S::from_f64(0.5);
        let dfdx = half.div(&s);
        self.chain(s, dfdx)
    }

    fn atan2(&self, x: &Self) -> Self {
        // d atan2(y, x) = (x dy - y dx) / (x^2 + y^2)
        let y = self;
        let v = y.value.atan2(&x.value);
        let denom = x.value.mul(&x.value).add(&y.value.mul(&y.value));
        binary(y, x, |_, _| v.clone(), |y, x, i| {
            x.value
                .mul(&y.partial(i))
                .sub(&y.value.mul(&x.partial(i)))
                .div(&denom)
        })
    }
}

impl<S: Scalar> Dual<S> {
    fn partial(&self, i: usize) -> S {
        self.partials
            .get(i)
            .cloned()
            .unwrap_or_else(|| S::from_f64(0.0))
    }
}

fn binary<S: Scalar>(
    a: &Dual<S>,
    b: &Dual<S>,
    value: impl Fn(&S, &S) -> S,
    partial: impl Fn(&Dual<S>, &Dual<S>, usize) -> S,
) -> Dual<S> {
    let width = a.width().max(b.width());
    let partials = (0..width).map(|i| partial(a, b, i)).collect();
    Dual {
        value: value(&a.value, &b.value),
        partials,
    }
}
