//! The entry chart (x̄ = -1) and the scaling chart (ε̄ = 1) of the blowup
//! of the origin, with their desingularized vector fields.
//!
//! Both fields are produced symbolically: every monomial of F, G, H is
//! pulled back through the chart and the leading power of the radial
//! variable is divided out exactly, so nothing is divided at run time.

use serde::{Deserialize, Serialize};

use crate::error::{CanardError, Result};
use crate::poly::{CompiledPoly, Exps, Poly, MAXV};
use crate::system::{AmbientState, SlowFastSystem};

/// Variable order of chart-2 polynomials.
pub const CHART2_VARS: [&str; 5] = ["x2", "y2", "z2", "r2", "mu"];
/// Variable order of chart-1 polynomials.
pub const CHART1_VARS: [&str; 5] = ["eps1", "r1", "y1", "z1", "mu"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chart1Point {
    pub eps1: f64,
    pub r1: f64,
    pub y1: f64,
    pub z1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chart2Point {
    pub r2: f64,
    pub x2: f64,
    pub y2: f64,
    pub z2: f64,
}

impl Chart1Point {
    pub fn new(eps1: f64, r1: f64, y1: f64, z1: f64) -> Self {
        Chart1Point { eps1, r1, y1, z1 }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.eps1, self.r1, self.y1, self.z1]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Chart1Point { eps1: v[0], r1: v[1], y1: v[2], z1: v[3] }
    }
}

impl Chart2Point {
    pub fn new(r2: f64, x2: f64, y2: f64, z2: f64) -> Self {
        Chart2Point { r2, x2, y2, z2 }
    }
}

/// A phase-space point tagged with its chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "chart", rename_all = "snake_case")]
pub enum ChartPoint {
    Ambient { x: f64, y: f64, z: f64, eps: f64 },
    Chart1(Chart1Point),
    Chart2(Chart2Point),
}

impl ChartPoint {
    pub fn blow_down(&self) -> (AmbientState, f64) {
        match self {
            ChartPoint::Ambient { x, y, z, eps } => (AmbientState::new(*x, *y, *z), *eps),
            ChartPoint::Chart1(p) => blow_down_chart1(p),
            ChartPoint::Chart2(p) => blow_down_chart2(p),
        }
    }
}

/// `(x, y, z, eps) = (-r1^2, r1 y1, r1 z1, r1^2 eps1)`.
pub fn blow_down_chart1(p: &Chart1Point) -> (AmbientState, f64) {
    let r = p.r1;
    (AmbientState::new(-r * r, r * p.y1, r * p.z1), r * r * p.eps1)
}

/// `(x, y, z, eps) = (r2^2 x2, r2 y2, r2 z2, r2^2)`.
pub fn blow_down_chart2(p: &Chart2Point) -> (AmbientState, f64) {
    let r = p.r2;
    (AmbientState::new(r * r * p.x2, r * p.y2, r * p.z2), r * r)
}

pub fn chart1_to_chart2(p: &Chart1Point) -> Result<Chart2Point> {
    if !(p.eps1 > 0.0) {
        return Err(CanardError::InvalidInput(format!("chart change needs eps1 > 0, got {}", p.eps1)));
    }
    let s = p.eps1.sqrt();
    Ok(Chart2Point { r2: p.r1 * s, x2: -1.0 / p.eps1, y2: p.y1 / s, z2: p.z1 / s })
}

pub fn chart2_to_chart1(p: &Chart2Point) -> Result<Chart1Point> {
    if !(p.x2 < 0.0) {
        return Err(CanardError::InvalidInput(format!("chart change needs x2 < 0, got {}", p.x2)));
    }
    let s = (-p.x2).sqrt();
    Ok(Chart1Point { eps1: -1.0 / p.x2, r1: p.r2 * s, y1: p.y2 / s, z1: p.z2 / s })
}

fn to_chart2(e: &Exps) -> (Exps, f64) {
    let (i, j, k, l, m) = (e[0], e[1], e[2], e[3], e[4]);
    let mut f = [0u8; MAXV];
    f[0] = i;
    f[1] = j;
    f[2] = k;
    f[3] = 2 * i + j + k + 2 * l;
    f[4] = m;
    (f, 1.0)
}

fn to_chart1(e: &Exps) -> (Exps, f64) {
    let (i, j, k, l, m) = (e[0], e[1], e[2], e[3], e[4]);
    let mut f = [0u8; MAXV];
    f[0] = l;
    f[1] = 2 * i + j + k + 2 * l;
    f[2] = j;
    f[3] = k;
    f[4] = m;
    (f, if i % 2 == 1 { -1.0 } else { 1.0 })
}

/// Chart vector fields generated from a [`SlowFastSystem`].
#[derive(Debug, Clone)]
pub struct BlowupFields {
    /// Chart-2 field `(x2', y2', z2')` as polynomials in `(x2, y2, z2, r2, mu)`.
    pub chart2: [Poly; 3],
    /// Chart-1 field `(eps1', r1', y1', z1')` as polynomials in `(eps1, r1, y1, z1, mu)`.
    pub chart1: [Poly; 4],
    c2: [CompiledPoly; 3],
    c1: [CompiledPoly; 4],
}

impl BlowupFields {
    pub fn new(sys: &SlowFastSystem) -> Self {
        let n = 5;
        let v = |i| Poly::var(n, i);
        let c = |a| Poly::constant(n, a);

        // scaling chart
        let f2 = sys.f.remap(n, to_chart2).div_var_pow(3, 1).expect("F is O(r2^2) in chart 2");
        let g2 = sys.g.remap(n, to_chart2);
        let h2 = sys.h.remap(n, to_chart2).div_var_pow(3, 1).expect("H is O(r2^2) in chart 2");
        let mu_plus_1 = v(4).add(&c(1.0));
        let x2dot = v(1).sub(&mu_plus_1.mul(&v(2))).add(&f2);
        let y2dot = v(4).scale(0.5).add(&g2);
        let z2dot = v(0).add(&v(2).mul(&v(2))).add(&v(2).mul(&h2));

        // entry chart
        let f1 = sys.f.remap(n, to_chart1).div_var_pow(1, 1).expect("F is O(r1^2) in chart 1");
        let g1 = sys.g.remap(n, to_chart1);
        let h1 = sys.h.remap(n, to_chart1).div_var_pow(1, 1).expect("H is O(r1^2) in chart 1");
        let (e1, r1, y1, z1) = (v(0), v(1), v(2), v(3));
        let b = y1.sub(&mu_plus_1.mul(&z1)).add(&f1);
        let eb = e1.mul(&b);
        let eps1dot = e1.mul(&eb);
        let r1dot = r1.mul(&eb).scale(-0.5);
        let y1dot = e1.mul(&v(4).scale(0.5).add(&g1)).add(&y1.mul(&eb).scale(0.5));
        let z1dot = c(-1.0).add(&z1.mul(&z1)).add(&z1.mul(&h1)).add(&z1.mul(&eb).scale(0.5));

        let chart2 = [x2dot, y2dot, z2dot];
        let chart1 = [eps1dot, r1dot, y1dot, z1dot];
        BlowupFields {
            c2: [chart2[0].compile(), chart2[1].compile(), chart2[2].compile()],
            c1: [chart1[0].compile(), chart1[1].compile(), chart1[2].compile(), chart1[3].compile()],
            chart2,
            chart1,
        }
    }

    /// `(x2', y2', z2')` at `u = (x2, y2, z2)`; r2 is a parameter.
    pub fn chart2_at(&self, r2: f64, u: &[f64], mu: f64) -> [f64; 3] {
        let v = [u[0], u[1], u[2], r2, mu];
        [self.c2[0].eval(&v), self.c2[1].eval(&v), self.c2[2].eval(&v)]
    }

    pub fn field_chart2(&self, p: &Chart2Point, mu: f64) -> [f64; 3] {
        self.chart2_at(p.r2, &[p.x2, p.y2, p.z2], mu)
    }

    /// `(eps1', r1', y1', z1')` at `w = (eps1, r1, y1, z1)`.
    pub fn chart1_at(&self, w: &[f64], mu: f64) -> [f64; 4] {
        let v = [w[0], w[1], w[2], w[3], mu];
        [self.c1[0].eval(&v), self.c1[1].eval(&v), self.c1[2].eval(&v), self.c1[3].eval(&v)]
    }

    pub fn field_chart1(&self, p: &Chart1Point, mu: f64) -> [f64; 4] {
        self.chart1_at(&p.to_array(), mu)
    }
}
