//! Sparse multivariate polynomials with real coefficients, plus a small
//! coefficient-ring abstraction so the same polynomial can be evaluated on
//! floats, truncated series, or polynomials in an auxiliary variable.

use std::collections::BTreeMap;
use std::fmt;

/// Maximum number of variables of a [`Poly`].
pub const MAXV: usize = 6;

pub type Exps = [u8; MAXV];

/// Values a polynomial can be evaluated on.
pub trait Coeff: Clone {
    /// A constant of the same shape as `self` (same truncation, length, ...).
    fn constant_like(&self, c: f64) -> Self;
    fn add_assign(&mut self, other: &Self);
    fn mul(&self, other: &Self) -> Self;
    fn scale(&self, c: f64) -> Self;
}

impl Coeff for f64 {
    fn constant_like(&self, c: f64) -> Self {
        c
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn scale(&self, c: f64) -> Self {
        self * c
    }
}

/// Truncated univariate power series `sum_{n<=cap} c_n s^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub c: Vec<f64>,
    pub cap: usize,
}

impl Series {
    pub fn zero(cap: usize) -> Self {
        Series { c: vec![0.0; cap + 1], cap }
    }

    pub fn from_coeffs(mut c: Vec<f64>, cap: usize) -> Self {
        c.resize(cap + 1, 0.0);
        Series { c, cap }
    }

    /// The series `a + b s`.
    pub fn linear(a: f64, b: f64, cap: usize) -> Self {
        let mut s = Series::zero(cap);
        s.c[0] = a;
        if cap >= 1 {
            s.c[1] = b;
        }
        s
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.c.iter().rev().fold(0.0, |acc, c| acc * s + c)
    }

    pub fn derivative(&self) -> Series {
        let mut d = Series::zero(self.cap);
        for n in 1..self.c.len() {
            d.c[n - 1] = n as f64 * self.c[n];
        }
        d
    }

    pub fn sub(&self, other: &Series) -> Series {
        let mut r = self.clone();
        for (a, b) in r.c.iter_mut().zip(&other.c) {
            *a -= b;
        }
        r
    }
}

impl Coeff for Series {
    fn constant_like(&self, c: f64) -> Self {
        let mut s = Series::zero(self.cap);
        s.c[0] = c;
        s
    }
    fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.c.iter_mut().zip(&other.c) {
            *a += b;
        }
    }
    fn mul(&self, other: &Self) -> Self {
        let cap = self.cap.min(other.cap);
        let mut r = Series::zero(cap);
        let la = self.c.iter().rposition(|v| *v != 0.0).map_or(0, |p| p + 1);
        let lb = other.c.iter().rposition(|v| *v != 0.0).map_or(0, |p| p + 1);
        for i in 0..la.min(cap + 1) {
            let a = self.c[i];
            if a == 0.0 {
                continue;
            }
            for j in 0..lb.min(cap + 1 - i) {
                r.c[i + j] += a * other.c[j];
            }
        }
        r
    }
    fn scale(&self, c: f64) -> Self {
        Series { c: self.c.iter().map(|v| v * c).collect(), cap: self.cap }
    }
}

/// Polynomial in an auxiliary variable without truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct UPoly(pub Vec<f64>);

impl UPoly {
    pub fn eval(&self, s: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * s + c)
    }
}

impl Coeff for UPoly {
    fn constant_like(&self, c: f64) -> Self {
        UPoly(vec![c])
    }
    fn add_assign(&mut self, other: &Self) {
        if other.0.len() > self.0.len() {
            self.0.resize(other.0.len(), 0.0);
        }
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }
    fn mul(&self, other: &Self) -> Self {
        if self.0.is_empty() || other.0.is_empty() {
            return UPoly(vec![0.0]);
        }
        let mut r = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                r[i + j] += a * b;
            }
        }
        UPoly(r)
    }
    fn scale(&self, c: f64) -> Self {
        UPoly(self.0.iter().map(|v| v * c).collect())
    }
}

/// Sparse polynomial in `nvars <= MAXV` variables.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    pub nvars: usize,
    terms: BTreeMap<Exps, f64>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        assert!(nvars <= MAXV);
        Poly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Poly::zero(nvars);
        p.add_term([0; MAXV], c);
        p
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        Poly::monomial(nvars, &[(i, 1)], 1.0)
    }

    /// `c * prod x_i^{e_i}` for the listed `(i, e_i)`.
    pub fn monomial(nvars: usize, powers: &[(usize, u8)], c: f64) -> Self {
        let mut e = [0u8; MAXV];
        for &(i, k) in powers {
            assert!(i < nvars);
            e[i] += k;
        }
        let mut p = Poly::zero(nvars);
        p.add_term(e, c);
        p
    }

    pub fn add_term(&mut self, e: Exps, c: f64) {
        if c == 0.0 {
            return;
        }
        let v = self.terms.entry(e).or_insert(0.0);
        *v += c;
        if *v == 0.0 {
            self.terms.remove(&e);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exps, &f64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, e: &Exps) -> f64 {
        self.terms.get(e).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total_degree(&self) -> usize {
        self.terms.keys().map(|e| e.iter().map(|&k| k as usize).sum()).max().unwrap_or(0)
    }

    pub fn degree_in(&self, i: usize) -> usize {
        self.terms.keys().map(|e| e[i] as usize).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut r = self.clone();
        for (e, c) in &other.terms {
            r.add_term(*e, *c);
        }
        r
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> Poly {
        let mut r = Poly::zero(self.nvars);
        for (e, v) in &self.terms {
            r.add_term(*e, v * c);
        }
        r
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut r = Poly::zero(self.nvars.max(other.nvars));
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let mut e = [0u8; MAXV];
                for i in 0..MAXV {
                    e[i] = ea[i] + eb[i];
                }
                r.add_term(e, ca * cb);
            }
        }
        r
    }

    /// Product truncated at total degree `deg`.
    pub fn mul_trunc(&self, other: &Poly, deg: usize) -> Poly {
        let mut r = Poly::zero(self.nvars.max(other.nvars));
        for (ea, ca) in &self.terms {
            let da: usize = ea.iter().map(|&k| k as usize).sum();
            for (eb, cb) in &other.terms {
                let db: usize = eb.iter().map(|&k| k as usize).sum();
                if da + db > deg {
                    continue;
                }
                let mut e = [0u8; MAXV];
                for i in 0..MAXV {
                    e[i] = ea[i] + eb[i];
                }
                r.add_term(e, ca * cb);
            }
        }
        r
    }

    pub fn truncate(&self, deg: usize) -> Poly {
        let mut r = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            if e.iter().map(|&k| k as usize).sum::<usize>() <= deg {
                r.add_term(*e, *c);
            }
        }
        r
    }

    /// Part homogeneous of total degree `deg`.
    pub fn homogeneous(&self, deg: usize) -> Poly {
        let mut r = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            if e.iter().map(|&k| k as usize).sum::<usize>() == deg {
                r.add_term(*e, *c);
            }
        }
        r
    }

    pub fn derivative(&self, i: usize) -> Poly {
        let mut r = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut f = *e;
                f[i] -= 1;
                r.add_term(f, c * e[i] as f64);
            }
        }
        r
    }

    /// Exact division by `x_i^k`; `None` if some term is not divisible.
    pub fn div_var_pow(&self, i: usize, k: u8) -> Option<Poly> {
        let mut r = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] < k {
                return None;
            }
            let mut f = *e;
            f[i] -= k;
            r.add_term(f, *c);
        }
        Some(r)
    }

    /// Rewrites every monomial through `map(exps) -> (new exps, factor)` into
    /// a polynomial with `nvars` variables.
    pub fn remap(&self, nvars: usize, map: impl Fn(&Exps) -> (Exps, f64)) -> Poly {
        let mut r = Poly::zero(nvars);
        for (e, c) in &self.terms {
            let (f, k) = map(e);
            r.add_term(f, c * k);
        }
        r
    }

    /// Set variable `i` to the value `v`.
    pub fn substitute_value(&self, i: usize, v: f64) -> Poly {
        self.remap(self.nvars, |e| {
            let mut f = *e;
            f[i] = 0;
            (f, v.powi(e[i] as i32))
        })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (e, c) in &self.terms {
            let mut m = *c;
            for i in 0..self.nvars {
                if e[i] > 0 {
                    m *= x[i].powi(e[i] as i32);
                }
            }
            s += m;
        }
        s
    }

    /// Evaluate on ring elements; `x` must be non-empty.
    pub fn eval_generic<T: Coeff>(&self, x: &[T]) -> T {
        let proto = &x[0];
        let mut pows: Vec<Vec<T>> = Vec::with_capacity(self.nvars);
        for (i, xi) in x.iter().enumerate().take(self.nvars) {
            let d = self.degree_in(i);
            let mut v = Vec::with_capacity(d + 1);
            v.push(proto.constant_like(1.0));
            for k in 1..=d {
                let next = v[k - 1].mul(xi);
                v.push(next);
            }
            pows.push(v);
        }
        let mut acc = proto.constant_like(0.0);
        for (e, c) in &self.terms {
            let mut m: Option<T> = None;
            for i in 0..self.nvars {
                if e[i] > 0 {
                    let f = &pows[i][e[i] as usize];
                    m = Some(match m {
                        None => f.clone(),
                        Some(v) => v.mul(f),
                    });
                }
            }
            let term = match m {
                None => proto.constant_like(*c),
                Some(v) => v.scale(*c),
            };
            acc.add_assign(&term);
        }
        acc
    }

    /// Substitute polynomials for the variables, truncating at total degree
    /// `deg` when given.
    pub fn compose(&self, subs: &[Poly], deg: Option<usize>) -> Poly {
        let nv = subs.iter().map(|p| p.nvars).max().unwrap_or(self.nvars);
        let mul = |a: &Poly, b: &Poly| match deg {
            Some(d) => a.mul_trunc(b, d),
            None => a.mul(b),
        };
        let mut pows: Vec<Vec<Poly>> = Vec::with_capacity(self.nvars);
        for (i, s) in subs.iter().enumerate().take(self.nvars) {
            let d = self.degree_in(i);
            let mut v = vec![Poly::constant(nv, 1.0)];
            for k in 1..=d {
                let next = mul(&v[k - 1], s);
                v.push(next);
            }
            pows.push(v);
        }
        let mut acc = Poly::zero(nv);
        for (e, c) in &self.terms {
            let mut m = Poly::constant(nv, *c);
            for i in 0..self.nvars {
                if e[i] > 0 {
                    m = mul(&m, &pows[i][e[i] as usize]);
                }
            }
            acc = acc.add(&m);
        }
        acc
    }

    pub fn compile(&self) -> CompiledPoly {
        CompiledPoly::new(self)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// Formats a monomial using the given variable names, e.g. `x^2*eps`.
pub fn format_monomial(e: &Exps, names: &[&str]) -> String {
    let parts: Vec<String> = names
        .iter()
        .enumerate()
        .filter(|(i, _)| e[*i] > 0)
        .map(|(i, n)| if e[i] == 1 { n.to_string() } else { format!("{}^{}", n, e[i]) })
        .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const NAMES: [&str; MAXV] = ["v0", "v1", "v2", "v3", "v4", "v5"];
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{}*{}", c, format_monomial(e, &NAMES[..self.nvars]))?;
        }
        Ok(())
    }
}

/// Flat, allocation-free evaluator for a fixed polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledPoly {
    nvars: usize,
    max_exp: [usize; MAXV],
    exps: Vec<Exps>,
    coeffs: Vec<f64>,
}

impl CompiledPoly {
    fn new(p: &Poly) -> Self {
        let mut max_exp = [0usize; MAXV];
        for i in 0..p.nvars {
            max_exp[i] = p.degree_in(i);
        }
        CompiledPoly {
            nvars: p.nvars,
            max_exp,
            exps: p.terms.keys().copied().collect(),
            coeffs: p.terms.values().copied().collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        if self.coeffs.is_empty() {
            return 0.0;
        }
        // power tables on the stack for small degrees
        const CAP: usize = 16;
        let mut tab = [[1.0f64; CAP]; MAXV];
        let small = self.max_exp.iter().all(|&d| d < CAP);
        if small {
            for i in 0..self.nvars {
                for k in 1..=self.max_exp[i] {
                    tab[i][k] = tab[i][k - 1] * x[i];
                }
            }
        }
        let mut s = 0.0;
        for (e, c) in self.exps.iter().zip(&self.coeffs) {
            let mut m = *c;
            for i in 0..self.nvars {
                let k = e[i] as usize;
                if k > 0 {
                    m *= if small { tab[i][k] } else { x[i].powi(k as i32) };
                }
            }
            s += m;
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Poly {
        // 1 + 2 x y - 3 z^2 in three variables
        Poly::constant(3, 1.0)
            .add(&Poly::monomial(3, &[(0, 1), (1, 1)], 2.0))
            .add(&Poly::monomial(3, &[(2, 2)], -3.0))
    }

    #[test]
    fn eval_and_compile_agree() {
        let p = sample();
        let x = [0.3, -1.2, 0.7];
        let v = 1.0 + 2.0 * 0.3 * -1.2 - 3.0 * 0.49;
        assert!((p.eval(&x) - v).abs() < 1e-15);
        assert!((p.compile().eval(&x) - v).abs() < 1e-15);
        assert!((p.eval_generic(&x) - v).abs() < 1e-15);
    }

    #[test]
    fn derivative_and_division() {
        let p = sample();
        let dz = p.derivative(2);
        assert_eq!(dz.coeff(&[0, 0, 1, 0, 0, 0]), -6.0);
        assert!(p.div_var_pow(2, 1).is_none());
        let q = Poly::monomial(3, &[(2, 3)], 2.0).div_var_pow(2, 2).unwrap();
        assert_eq!(q.coeff(&[0, 0, 1, 0, 0, 0]), 2.0);
    }

    #[test]
    fn compose_matches_pointwise() {
        let p = sample();
        let s = [
            Poly::var(2, 0).add(&Poly::var(2, 1)),
            Poly::var(2, 0).mul(&Poly::var(2, 1)),
            Poly::constant(2, 0.5),
        ];
        let q = p.compose(&s, None);
        let (a, b) = (0.4, -0.9);
        assert!((q.eval(&[a, b]) - p.eval(&[a + b, a * b, 0.5])).abs() < 1e-14);
    }

    #[test]
    fn series_ring() {
        // (1 + s)^2 truncated at s^1
        let s = Series::linear(1.0, 1.0, 1);
        let sq = s.mul(&s);
        assert_eq!(sq.c, vec![1.0, 2.0]);
        let p = Poly::monomial(1, &[(0, 2)], 1.0);
        let r = p.eval_generic(&[Series::linear(1.0, 1.0, 3)]);
        assert_eq!(r.c, vec![1.0, 2.0, 1.0, 0.0]);
    }

    #[test]
    fn upoly_ring() {
        let p = sample();
        let x = [UPoly(vec![0.3, 1.0]), UPoly(vec![-1.2]), UPoly(vec![0.0, 2.0])];
        let r = p.eval_generic(&x);
        let h = 0.37;
        assert!((r.eval(h) - p.eval(&[0.3 + h, -1.2, 2.0 * h])).abs() < 1e-14);
    }
}
