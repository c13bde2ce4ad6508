//! Capacity-normalized latency functions `S(x)` and the function-class
//! constants `mu` and `gamma` that drive every approximation guarantee.
//!
//! A latency is either a polynomial with non-negative coefficients or a
//! constant. Polynomials of degree at least one are *strict*: `S` and
//! `x^2 S'(x)` are strictly increasing and unbounded, which is what the
//! root equations below rely on. Constants (zero included) are admitted so
//! that zero-latency connector edges can be modelled directly, but they are
//! rejected by [`LatencyFunction::solve_u`] and
//! [`LatencyFunction::solve_gamma`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json::Real;
use crate::roots::solve_increasing;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LatencyRepr", into = "LatencyRepr")]
pub enum LatencyFunction {
    /// `S(x) = sum_j coeffs[j] x^j`, trailing zeros trimmed.
    Polynomial { coeffs: Vec<f64> },
    Constant { value: f64 },
}

impl LatencyFunction {
    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidLatency("polynomial needs at least one coefficient".into()));
        }
        if let Some(bad) = coeffs.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(Error::InvalidLatency(format!(
                "coefficients must be finite and non-negative, got {bad}"
            )));
        }
        let mut coeffs = coeffs;
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        Ok(LatencyFunction::Polynomial { coeffs })
    }

    pub fn constant(value: f64) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidLatency(format!(
                "constant latency must be finite and non-negative, got {value}"
            )));
        }
        Ok(LatencyFunction::Constant { value })
    }

    /// `S(x) = a + b x`.
    pub fn affine(a: f64, b: f64) -> Result<Self> {
        Self::polynomial(vec![a, b])
    }

    /// `S(x) = a x^degree`.
    pub fn monomial(a: f64, degree: usize) -> Result<Self> {
        let mut coeffs = vec![0.0; degree + 1];
        coeffs[degree] = a;
        Self::polynomial(coeffs)
    }

    /// Whether `S` and `x^2 S'(x)` are strictly increasing and unbounded.
    pub fn is_strict(&self) -> bool {
        match self {
            LatencyFunction::Polynomial { coeffs } => coeffs.len() >= 2,
            LatencyFunction::Constant { .. } => false,
        }
    }

    pub fn degree(&self) -> usize {
        match self {
            LatencyFunction::Polynomial { coeffs } => coeffs.len() - 1,
            LatencyFunction::Constant { .. } => 0,
        }
    }

    /// `S(0)`: the latency of an empty edge, and the whole latency of a constant one.
    pub fn free_flow(&self) -> f64 {
        self.at(0.0)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        check_non_negative("eval", x)?;
        Ok(self.at(x))
    }

    /// `S(x) + x S'(x)`, the derivative of `x S(x)`.
    pub fn marginal(&self, x: f64) -> Result<f64> {
        check_non_negative("marginal", x)?;
        Ok(self.marginal_at(x))
    }

    /// Unchecked evaluation; `x` must be non-negative.
    #[inline]
    pub fn at(&self, x: f64) -> f64 {
        match self {
            LatencyFunction::Polynomial { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, &a| acc * x + a)
            }
            LatencyFunction::Constant { value } => *value,
        }
    }

    #[inline]
    pub fn slope_at(&self, x: f64) -> f64 {
        match self {
            LatencyFunction::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (j, &a)| acc * x + j as f64 * a),
            LatencyFunction::Constant { .. } => 0.0,
        }
    }

    #[inline]
    pub fn curvature_at(&self, x: f64) -> f64 {
        match self {
            LatencyFunction::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(2)
                .rev()
                .fold(0.0, |acc, (j, &a)| acc * x + (j * (j - 1)) as f64 * a),
            LatencyFunction::Constant { .. } => 0.0,
        }
    }

    #[inline]
    pub fn marginal_at(&self, x: f64) -> f64 {
        self.at(x) + x * self.slope_at(x)
    }

    /// The unique `u > 0` with `u^2 S'(u) = price`: the load-to-capacity
    /// ratio at which buying more capacity stops paying off.
    pub fn solve_u(&self, price: f64) -> Result<f64> {
        if !self.is_strict() {
            return Err(Error::NotStrictlyIncreasing);
        }
        if !(price.is_finite() && price > 0.0) {
            return Err(Error::InvalidArgument(format!("price must be positive, got {price}")));
        }
        solve_increasing(
            |u| {
                let s1 = self.slope_at(u);
                (u * u * s1, 2.0 * u * s1 + u * u * self.curvature_at(u))
            },
            price,
            0.0,
        )
    }

    /// The `gamma` in `(0, 1]` with `S(delta / gamma) = S(delta) + delta S'(delta)`.
    /// Returns 1 for `delta = 0`, which leaves unused edges untouched.
    pub fn solve_gamma(&self, delta: f64) -> Result<f64> {
        if !self.is_strict() {
            return Err(Error::NotStrictlyIncreasing);
        }
        check_non_negative("solve_gamma", delta)?;
        if delta == 0.0 {
            return Ok(1.0);
        }
        let target = self.marginal_at(delta);
        let y = solve_increasing(|y| (self.at(y), self.slope_at(y)), target, delta)?;
        let gamma = delta / y;
        if gamma > 0.0 && gamma <= 1.0 {
            Ok(gamma)
        } else {
            Err(Error::NumericalFailure(format!("gamma {gamma} outside (0, 1]")))
        }
    }

    /// `int_0^v S(t / z) dt`, in closed form.
    pub fn beckmann_term(&self, v: f64, z: f64) -> Result<f64> {
        check_non_negative("beckmann_term flow", v)?;
        check_non_negative("beckmann_term capacity", z)?;
        if v == 0.0 {
            return Ok(0.0);
        }
        match self {
            LatencyFunction::Constant { value } => Ok(value * v),
            LatencyFunction::Polynomial { .. } if z == 0.0 => Err(Error::InfiniteLatency),
            LatencyFunction::Polynomial { .. } => Ok(self.beckmann_at(v, z)),
        }
    }

    /// Unchecked [`Self::beckmann_term`]; requires `z > 0` for polynomials.
    pub(crate) fn beckmann_at(&self, v: f64, z: f64) -> f64 {
        match self {
            LatencyFunction::Constant { value } => value * v,
            LatencyFunction::Polynomial { coeffs } => {
                // v * sum_j a_j (v/z)^j / (j+1)
                let x = v / z;
                let inner = coeffs
                    .iter()
                    .enumerate()
                    .rev()
                    .fold(0.0, |acc, (j, &a)| acc * x + a / (j + 1) as f64);
                v * inner
            }
        }
    }
}

impl fmt::Display for LatencyFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatencyFunction::Constant { value } => write!(f, "{value}"),
            LatencyFunction::Polynomial { coeffs } => {
                let terms: Vec<String> = coeffs
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| **a != 0.0)
                    .map(|(j, a)| match j {
                        0 => format!("{a}"),
                        1 => format!("{a}x"),
                        _ => format!("{a}x^{j}"),
                    })
                    .collect();
                if terms.is_empty() {
                    write!(f, "0")
                } else {
                    write!(f, "{}", terms.join(" + "))
                }
            }
        }
    }
}

fn check_non_negative(what: &'static str, value: f64) -> Result<()> {
    if value >= 0.0 {
        Ok(())
    } else {
        Err(Error::NegativeInput { what, value })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum LatencyRepr {
    Polynomial { coeffs: Vec<Real> },
    Constant { value: Real },
}

impl TryFrom<LatencyRepr> for LatencyFunction {
    type Error = Error;

    fn try_from(repr: LatencyRepr) -> Result<Self> {
        match repr {
            LatencyRepr::Polynomial { coeffs } => {
                LatencyFunction::polynomial(coeffs.into_iter().map(|c| c.0).collect())
            }
            LatencyRepr::Constant { value } => LatencyFunction::constant(value.0),
        }
    }
}

impl From<LatencyFunction> for LatencyRepr {
    fn from(f: LatencyFunction) -> Self {
        match f {
            LatencyFunction::Polynomial { coeffs } => LatencyRepr::Polynomial {
                coeffs: coeffs.into_iter().map(Real).collect(),
            },
            LatencyFunction::Constant { value } => LatencyRepr::Constant { value: Real(value) },
        }
    }
}

/// Which family of latency functions a guarantee is stated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassTag {
    /// Polynomials with non-negative coefficients and degree at most the given one.
    PolynomialDegree(u32),
    Concave,
    ConvexGeneral,
}

impl fmt::Display for ClassTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassTag::PolynomialDegree(d) => write!(f, "poly:{d}"),
            ClassTag::Concave => write!(f, "concave"),
            ClassTag::ConvexGeneral => write!(f, "convex"),
        }
    }
}

impl FromStr for ClassTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "concave" => Ok(ClassTag::Concave),
            "convex" | "convex_general" => Ok(ClassTag::ConvexGeneral),
            other => {
                let degree = other
                    .strip_prefix("poly:")
                    .and_then(|d| d.parse::<u32>().ok())
                    .ok_or_else(|| {
                        Error::InvalidClass(format!(
                            "expected poly:<degree>, concave or convex, got `{other}`"
                        ))
                    })?;
                if degree == 0 {
                    return Err(Error::InvalidClass("polynomial degree must be positive".into()));
                }
                Ok(ClassTag::PolynomialDegree(degree))
            }
        }
    }
}

/// `mu` of the class: the worst `gamma (1 - S(gamma x) / S(x))` over the class.
pub fn mu_of_class(tag: ClassTag) -> f64 {
    match tag {
        ClassTag::PolynomialDegree(d) => {
            let d = f64::from(d);
            d / (d + 1.0) * (1.0 / (d + 1.0)).powf(1.0 / d)
        }
        ClassTag::Concave => 0.25,
        ClassTag::ConvexGeneral => 1.0,
    }
}

/// The `gamma` at which [`mu_of_class`] is attained.
pub fn gamma_of_class(tag: ClassTag) -> f64 {
    match tag {
        ClassTag::PolynomialDegree(d) => {
            let d = f64::from(d);
            (1.0 / (d + 1.0)).powf(1.0 / d)
        }
        ClassTag::Concave => 0.5,
        ClassTag::ConvexGeneral => 1.0,
    }
}

/// Routing fraction at which the two single-algorithm bounds cross.
pub fn p_star(mu: f64, gamma: f64) -> f64 {
    let a = (gamma - mu + 1.0).powi(2);
    a / (a + 4.0 * mu)
}

/// Guarantee of taking the better of BringToEquilibrium and ScaleUniformly.
pub fn best_of_two_bound(mu: f64, gamma: f64) -> f64 {
    let s = (gamma + mu + 1.0).powi(2);
    s / (s - 4.0 * mu * gamma)
}

/// BringToEquilibrium bound as a function of the routing fraction `p`.
pub fn bte_bound_at(gamma: f64, p: f64) -> f64 {
    1.0 + gamma * (1.0 - p)
}

/// ScaleUniformly bound as a function of the routing fraction `p`.
pub fn su_bound_at(mu: f64, p: f64) -> f64 {
    (p.sqrt() + (mu * (1.0 - p)).sqrt()).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionClass {
    pub tag: ClassTag,
    pub mu: f64,
    pub gamma: f64,
}

impl FunctionClass {
    pub fn new(tag: ClassTag) -> Self {
        FunctionClass { tag, mu: mu_of_class(tag), gamma: gamma_of_class(tag) }
    }

    pub fn polynomial(degree: u32) -> Self {
        Self::new(ClassTag::PolynomialDegree(degree.max(1)))
    }

    /// Whether every function in `latencies` belongs to the class.
    pub fn admits<'a>(&self, latencies: impl IntoIterator<Item = &'a LatencyFunction>) -> bool {
        let max_degree = latencies.into_iter().map(LatencyFunction::degree).max().unwrap_or(0);
        match self.tag {
            ClassTag::PolynomialDegree(d) => max_degree <= d as usize,
            // Non-negative polynomials are concave only up to degree one.
            ClassTag::Concave => max_degree <= 1,
            ClassTag::ConvexGeneral => true,
        }
    }

    /// `1 + mu`, shared by BringToEquilibrium and ScaleUniformly.
    pub fn guarantee_single(&self) -> f64 {
        1.0 + self.mu
    }

    pub fn guarantee_best2(&self) -> f64 {
        best_of_two_bound(self.mu, self.gamma)
    }

    pub fn p_star(&self) -> f64 {
        p_star(self.mu, self.gamma)
    }

    /// `1 / (1 - mu)`; `None` for the general convex class where it is unbounded.
    pub fn guarantee_budget(&self) -> Option<f64> {
        (self.mu < 1.0).then(|| 1.0 / (1.0 - self.mu))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn eval_examples() {
        assert_eq!(LatencyFunction::monomial(1.0, 1).unwrap().eval(3.0).unwrap(), 3.0);
        assert_eq!(LatencyFunction::affine(4.0, 1.0).unwrap().eval(0.5).unwrap(), 4.5);
        let quartic = LatencyFunction::polynomial(vec![1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(quartic.eval(1.0).unwrap(), 2.0);
    }

    #[test]
    fn eval_rejects_negative_load() {
        let f = LatencyFunction::monomial(1.0, 1).unwrap();
        assert!(matches!(f.eval(-1.0), Err(Error::NegativeInput { .. })));
        assert!(matches!(f.marginal(-0.1), Err(Error::NegativeInput { .. })));
    }

    #[test]
    fn marginal_examples() {
        assert_eq!(LatencyFunction::monomial(1.0, 1).unwrap().marginal(1.0).unwrap(), 2.0);
        assert_eq!(LatencyFunction::monomial(1.0, 2).unwrap().marginal(2.0).unwrap(), 12.0);
        let c = LatencyFunction::constant(3.5).unwrap();
        assert_eq!(c.marginal(7.0).unwrap(), 3.5);
    }

    #[test]
    fn solve_u_examples() {
        let u = LatencyFunction::monomial(1.0, 1).unwrap().solve_u(1.0).unwrap();
        assert!(close(u, 1.0, 1e-12));
        let u = LatencyFunction::monomial(2.0, 1).unwrap().solve_u(8.0).unwrap();
        assert!(close(u, 2.0, 1e-12));
        let quartic = LatencyFunction::polynomial(vec![1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(close(quartic.solve_u(4.0).unwrap(), 1.0, 1e-12));
    }

    #[test]
    fn solve_u_rejects_constants() {
        let c = LatencyFunction::constant(2.0).unwrap();
        assert!(matches!(c.solve_u(1.0), Err(Error::NotStrictlyIncreasing)));
        let flat = LatencyFunction::polynomial(vec![2.0, 0.0]).unwrap();
        assert!(!flat.is_strict());
        assert!(matches!(flat.solve_u(1.0), Err(Error::NotStrictlyIncreasing)));
    }

    #[test]
    fn solve_gamma_examples() {
        for delta in [1e-3, 0.5, 1.0, 17.0] {
            let g = LatencyFunction::affine(3.0, 0.7).unwrap().solve_gamma(delta).unwrap();
            assert!(close(g, 0.5, 1e-10), "affine delta={delta}: {g}");
            for d in [1u32, 2, 3, 4, 7] {
                let f = LatencyFunction::monomial(1.0, d as usize).unwrap();
                let expected = (1.0 / (f64::from(d) + 1.0)).powf(1.0 / f64::from(d));
                let g = f.solve_gamma(delta).unwrap();
                assert!(close(g, expected, 1e-10), "x^{d} delta={delta}: {g} vs {expected}");
            }
        }
        let f = LatencyFunction::affine(1.0, 1.0).unwrap();
        assert_eq!(f.solve_gamma(0.0).unwrap(), 1.0);
    }

    #[test]
    fn beckmann_examples() {
        let id = LatencyFunction::monomial(1.0, 1).unwrap();
        assert_eq!(id.beckmann_term(1.0, 1.0).unwrap(), 0.5);
        let clause = LatencyFunction::affine(4.0, 1.0).unwrap();
        assert!(close(clause.beckmann_term(1.0, 2.0).unwrap(), 4.25, 1e-15));
        assert_eq!(clause.beckmann_term(0.0, 0.0).unwrap(), 0.0);
        assert!(matches!(clause.beckmann_term(1.0, 0.0), Err(Error::InfiniteLatency)));
    }

    #[test]
    fn class_constants() {
        let affine = FunctionClass::polynomial(1);
        assert!(close(affine.mu, 0.25, 1e-15));
        assert!(close(affine.gamma, 0.5, 1e-15));
        assert!(close(affine.p_star(), 25.0 / 41.0, 1e-15));
        assert!(close(affine.guarantee_best2(), 49.0 / 41.0, 1e-15));
        assert!(close(affine.guarantee_budget().unwrap(), 4.0 / 3.0, 1e-15));
        let quartic = FunctionClass::polynomial(4);
        assert!(close(quartic.mu, 0.8 * 5f64.powf(-0.25), 1e-15));
        assert!((quartic.guarantee_single() - 1.535).abs() < 1e-3);
        assert!(close(gamma_of_class(ClassTag::PolynomialDegree(2)), 3f64.powf(-0.5), 1e-15));
        let convex = FunctionClass::new(ClassTag::ConvexGeneral);
        assert_eq!(convex.guarantee_single(), 2.0);
        assert!(close(convex.guarantee_best2(), 1.8, 1e-15));
        assert_eq!(convex.guarantee_budget(), None);
    }

    #[test]
    fn class_constants_monotone_towards_one() {
        let degrees = [1u32, 2, 4, 8, 64];
        for pair in degrees.windows(2) {
            let (a, b) = (ClassTag::PolynomialDegree(pair[0]), ClassTag::PolynomialDegree(pair[1]));
            assert!(mu_of_class(a) <= mu_of_class(b));
            assert!(gamma_of_class(a) <= gamma_of_class(b));
        }
        assert!(mu_of_class(ClassTag::PolynomialDegree(64)) > 0.9);
        assert!(gamma_of_class(ClassTag::PolynomialDegree(64)) > 0.9);
        assert!(mu_of_class(ClassTag::PolynomialDegree(1_000_000)) > 0.9999);
    }

    #[test]
    fn class_tag_parsing() {
        assert_eq!("poly:4".parse::<ClassTag>().unwrap(), ClassTag::PolynomialDegree(4));
        assert_eq!("concave".parse::<ClassTag>().unwrap(), ClassTag::Concave);
        assert_eq!("convex".parse::<ClassTag>().unwrap(), ClassTag::ConvexGeneral);
        assert!("poly:0".parse::<ClassTag>().is_err());
        assert!("cubic".parse::<ClassTag>().is_err());
    }

    #[test]
    fn concave_class_admits_only_affine() {
        let quad = LatencyFunction::monomial(1.0, 2).unwrap();
        let lin = LatencyFunction::affine(1.0, 1.0).unwrap();
        let concave = FunctionClass::new(ClassTag::Concave);
        assert!(concave.admits([&lin]));
        assert!(!concave.admits([&lin, &quad]));
        assert!(FunctionClass::polynomial(2).admits([&lin, &quad]));
    }

    #[test]
    fn json_fragment() {
        let f: LatencyFunction =
            serde_json::from_str(r#"{"type":"polynomial","coeffs":["4", 1.0]}"#).unwrap();
        assert_eq!(f, LatencyFunction::affine(4.0, 1.0).unwrap());
        let c: LatencyFunction = serde_json::from_str(r#"{"type":"constant","value":0}"#).unwrap();
        assert_eq!(c, LatencyFunction::constant(0.0).unwrap());
        assert!(serde_json::from_str::<LatencyFunction>(r#"{"type":"polynomial","coeffs":[-1]}"#)
            .is_err());
        let text = serde_json::to_string(&f).unwrap();
        assert_eq!(text, r#"{"type":"polynomial","coeffs":[4.0,1.0]}"#);
    }
}
