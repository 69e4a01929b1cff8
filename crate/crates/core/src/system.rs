//! The slow-fast normal form, its critical manifold and the desingularized
//! reduced problem on it.

use std::collections::BTreeMap;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{CanardError, Result};
use crate::numerics::{central_jacobian, Tolerances};
use crate::poly::{format_monomial, Exps, Poly, MAXV};

/// Variable order of the coefficient tables.
pub const VARS: [&str; 5] = ["x", "y", "z", "eps", "mu"];
const X: usize = 0;
const Y: usize = 1;
const Z: usize = 2;
const EPS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub eps: f64,
    pub mu: f64,
}

impl Params {
    pub fn new(eps: f64, mu: f64) -> Result<Self> {
        if !(eps >= 0.0) {
            return Err(CanardError::InvalidInput(format!("eps must be non-negative, got {eps}")));
        }
        Ok(Params { eps, mu })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmbientState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl AmbientState {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        AmbientState { x, y, z }
    }
}

/// Which of the three higher-order terms a monomial belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Term {
    F,
    G,
    H,
}

impl Term {
    fn name(self) -> &'static str {
        match self {
            Term::F => "F",
            Term::G => "G",
            Term::H => "H",
        }
    }

    /// Whether the monomial respects the order condition of this term.
    pub fn admits(self, e: &Exps) -> bool {
        let (i, j, k, l) = (e[X], e[Y], e[Z], e[EPS]);
        match self {
            Term::F => i >= 1 || l >= 1 || j + k >= 2,
            Term::G => i + j + k + l >= 1,
            Term::H => l >= 1 || (i >= 1 && (j >= 1 || k >= 1)) || k >= 2,
        }
    }
}

/// Classification of the folded singularity of the reduced problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FoldedType {
    Node,
    Saddle,
    Focus,
    Degenerate,
}

/// Normal form with polynomial higher-order terms.
///
/// `G` stores the complete polynomial including `a1 y + a2 z`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlowFastSystem {
    pub f: Poly,
    pub g: Poly,
    pub h: Poly,
    pub a1: f64,
    pub a2: f64,
    pub lambda: f64,
    /// Half-width of the box |y|, |z| <= radius where manifold solves are trusted.
    pub validity_radius: f64,
    h_x: Poly,
    h_y: Poly,
    h_z: Poly,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MonomialDoc {
    vars: BTreeMap<String, u32>,
    coeff: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SystemDoc {
    a1: f64,
    a2: f64,
    #[serde(default, rename = "F")]
    f: Vec<MonomialDoc>,
    #[serde(default, rename = "G")]
    g: Vec<MonomialDoc>,
    #[serde(default, rename = "H")]
    h: Vec<MonomialDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    validity_radius: Option<f64>,
}

impl SlowFastSystem {
    /// Canonical benchmark: F = H = 0, G = a1 y + a2 z.
    pub fn canonical(a1: f64, a2: f64) -> Self {
        Self::new(a1, a2, Poly::zero(5), Poly::zero(5), Poly::zero(5)).expect("canonical system is admissible")
    }

    /// Builds a system from `a1`, `a2` and the remaining monomials of F, G, H.
    /// `g_rest` must not contain the linear monomials `y` or `z`.
    pub fn new(a1: f64, a2: f64, f: Poly, g_rest: Poly, h: Poly) -> Result<Self> {
        for (term, p) in [(Term::F, &f), (Term::G, &g_rest), (Term::H, &h)] {
            if p.nvars != 5 {
                return Err(CanardError::InvalidInput(format!("{} must have 5 variables", term.name())));
            }
            for (e, c) in p.terms() {
                if !c.is_finite() {
                    return Err(CanardError::InvalidInput(format!(
                        "non-finite coefficient in {} for {}",
                        term.name(),
                        format_monomial(e, &VARS)
                    )));
                }
                if !term.admits(e) {
                    return Err(CanardError::OrderCondition {
                        term: term.name().into(),
                        monomial: format_monomial(e, &VARS),
                    });
                }
            }
        }
        for lin in [Y, Z] {
            let mut e = [0u8; MAXV];
            e[lin] = 1;
            if g_rest.coeff(&e) != 0.0 {
                return Err(CanardError::InvalidInput(format!(
                    "the linear {} term of G is set through a1/a2",
                    VARS[lin]
                )));
            }
        }
        if !(a1.is_finite() && a2.is_finite()) {
            return Err(CanardError::InvalidInput("a1, a2 must be finite".into()));
        }
        let g = g_rest
            .add(&Poly::monomial(5, &[(Y, 1)], a1))
            .add(&Poly::monomial(5, &[(Z, 1)], a2));
        let lambda = a1 + a2;
        if lambda.abs() < 1e-8 {
            log::warn!("lambda = a1 + a2 = {lambda:e} violates the non-degeneracy assumption");
        }
        Ok(SlowFastSystem {
            h_x: h.derivative(X),
            h_y: h.derivative(Y),
            h_z: h.derivative(Z),
            f,
            g,
            h,
            a1,
            a2,
            lambda,
            validity_radius: 0.5,
        })
    }

    pub fn with_validity_radius(mut self, r: f64) -> Self {
        self.validity_radius = r;
        self
    }

    /// Parses the JSON system description (`a1`, `a2`, monomial lists under
    /// `F`, `G`, `H`).
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SystemDoc = serde_json::from_str(text).map_err(|e| CanardError::Config(e.to_string()))?;
        let table = |term: Term, list: &[MonomialDoc]| -> Result<Poly> {
            let mut p = Poly::zero(5);
            for m in list {
                let mut e = [0u8; MAXV];
                for (name, &k) in &m.vars {
                    let i = VARS.iter().position(|v| v == name).ok_or_else(|| {
                        CanardError::Config(format!("unknown variable '{name}' in {}", term.name()))
                    })?;
                    e[i] = u8::try_from(k)
                        .map_err(|_| CanardError::Config(format!("exponent {k} too large in {}", term.name())))?;
                }
                if !term.admits(&e) {
                    return Err(CanardError::OrderCondition {
                        term: term.name().into(),
                        monomial: format_monomial(&e, &VARS),
                    });
                }
                p.add_term(e, m.coeff);
            }
            Ok(p)
        };
        let f = table(Term::F, &doc.f)?;
        let g = table(Term::G, &doc.g)?;
        let h = table(Term::H, &doc.h)?;
        let mut sys = Self::new(doc.a1, doc.a2, f, g, h)?;
        if let Some(r) = doc.validity_radius {
            if !(r > 0.0) {
                return Err(CanardError::Config("validity_radius must be positive".into()));
            }
            sys.validity_radius = r;
        }
        Ok(sys)
    }

    pub fn to_json(&self) -> String {
        let list = |p: &Poly, skip_linear: bool| -> Vec<MonomialDoc> {
            p.terms()
                .filter(|(e, _)| {
                    !(skip_linear && e.iter().sum::<u8>() == 1 && (e[Y] == 1 || e[Z] == 1))
                })
                .map(|(e, c)| MonomialDoc {
                    vars: VARS
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| e[*i] > 0)
                        .map(|(i, n)| (n.to_string(), e[i] as u32))
                        .collect(),
                    coeff: *c,
                })
                .collect()
        };
        let doc = SystemDoc {
            a1: self.a1,
            a2: self.a2,
            f: list(&self.f, false),
            g: list(&self.g, true),
            h: list(&self.h, false),
            validity_radius: Some(self.validity_radius),
        };
        serde_json::to_string_pretty(&doc).expect("system serializes")
    }

    /// Whether F = H = 0 and G is linear.
    pub fn is_canonical(&self) -> bool {
        self.f.is_zero() && self.h.is_zero() && self.g.len() <= 2 && self.g.total_degree() <= 1
    }

    /// Errors unless the non-degeneracy assumption lambda != 0 holds.
    pub fn require_nondegenerate(&self) -> Result<()> {
        if self.lambda.abs() < 1e-8 {
            return Err(CanardError::InvalidInput(format!("lambda = {:e} must be nonzero", self.lambda)));
        }
        Ok(())
    }

    /// `(eps (y - (mu+1) z + F), eps (mu/2 + G), x + z^2 + z H)`.
    pub fn eval_fast_field(&self, s: &AmbientState, p: &Params) -> [f64; 3] {
        let v = [s.x, s.y, s.z, p.eps, p.mu];
        let f = self.f.eval(&v);
        let g = self.g.eval(&v);
        let h = self.h.eval(&v);
        [
            p.eps * (s.y - (p.mu + 1.0) * s.z + f),
            p.eps * (0.5 * p.mu + g),
            s.x + s.z * s.z + s.z * h,
        ]
    }

    fn check_box(&self, y: f64, z: f64) -> Result<()> {
        if y.abs() > self.validity_radius || z.abs() > self.validity_radius {
            return Err(CanardError::OutOfDomain(format!(
                "(y, z) = ({y}, {z}) outside |y|,|z| <= {}",
                self.validity_radius
            )));
        }
        Ok(())
    }

    /// Solves `x + z^2 + z H(x, y, z, 0, mu) = 0` for x by Newton from -z^2.
    /// The box check only applies when a Newton solve is needed (H != 0).
    pub fn critical_manifold_x(&self, y: f64, z: f64, mu: f64, tol: &Tolerances) -> Result<f64> {
        let mut x = -z * z;
        if self.h.is_zero() || z == 0.0 {
            return Ok(if z == 0.0 { 0.0 } else { x });
        }
        self.check_box(y, z)?;
        for _ in 0..tol.newton_max_iter {
            let v = [x, y, z, 0.0, mu];
            let r = x + z * z + z * self.h.eval(&v);
            if r.abs() <= tol.newton_tol.min(1e-14) {
                return Ok(x);
            }
            let d = 1.0 + z * self.h_x.eval(&v);
            if d.abs() < 1e-12 {
                return Err(CanardError::SingularJacobian { condition: f64::INFINITY });
            }
            x -= r / d;
        }
        let r = x + z * z + z * self.h.eval(&[x, y, z, 0.0, mu]);
        if r.abs() <= tol.newton_tol {
            Ok(x)
        } else {
            Err(CanardError::NewtonMaxIter { iterations: tol.newton_max_iter, residual: r.abs() })
        }
    }

    /// Partial derivatives `(m_y, m_z)` of the critical manifold graph.
    pub fn critical_manifold_gradient(&self, x: f64, y: f64, z: f64, mu: f64) -> (f64, f64) {
        let v = [x, y, z, 0.0, mu];
        let vx = 1.0 + z * self.h_x.eval(&v);
        let vy = z * self.h_y.eval(&v);
        let vz = 2.0 * z + self.h.eval(&v) + z * self.h_z.eval(&v);
        (-vy / vx, -vz / vx)
    }

    /// Desingularized reduced field on the critical manifold:
    /// `y' = m_z (mu/2 + G)`, `z' = y - (mu+1) z + F - m_y (mu/2 + G)`.
    ///
    /// For H = 0 this is `y' = -z (mu + 2G)`, `z' = y - (mu+1) z + F`.
    pub fn eval_reduced_field(&self, y: f64, z: f64, mu: f64, tol: &Tolerances) -> Result<[f64; 2]> {
        let x = self.critical_manifold_x(y, z, mu, tol)?;
        let v = [x, y, z, 0.0, mu];
        let (my, mz) = self.critical_manifold_gradient(x, y, z, mu);
        let slow_y = 0.5 * mu + self.g.eval(&v);
        let slow_x = y - (mu + 1.0) * z + self.f.eval(&v);
        Ok([mz * slow_y, slow_x - my * slow_y])
    }

    /// The factor `1 + L` of the reduced problem, `-m_z / (2z)`, with its
    /// limit at z = 0.
    pub fn reduced_factor(&self, y: f64, z: f64, mu: f64, tol: &Tolerances) -> Result<f64> {
        if z == 0.0 {
            // m_z / z -> -2 (1 + H_z) on the fold line
            return Ok(1.0 + self.h_z.eval(&[0.0, y, 0.0, 0.0, mu]));
        }
        let x = self.critical_manifold_x(y, z, mu, tol)?;
        let (_, mz) = self.critical_manifold_gradient(x, y, z, mu);
        Ok(-mz / (2.0 * z))
    }

    /// Linearization of the reduced field at the folded singularity (origin).
    pub fn folded_jacobian(&self, mu: f64) -> Matrix2<f64> {
        Matrix2::new(0.0, -mu, 1.0, -(1.0 + mu))
    }

    /// Central finite-difference linearization of the reduced field at the origin.
    pub fn folded_jacobian_fd(&self, mu: f64, tol: &Tolerances) -> Result<Matrix2<f64>> {
        let f = |v: &[f64]| self.eval_reduced_field(v[0], v[1], mu, tol).map(|r| r.to_vec());
        let j = central_jacobian(&f, &[0.0, 0.0], 1e-5)?;
        Ok(Matrix2::new(j[(0, 0)], j[(0, 1)], j[(1, 0)], j[(1, 1)]))
    }

    pub fn classify_folded_singularity(&self, mu: f64) -> FoldedType {
        let j = self.folded_jacobian(mu);
        classify_2x2(&j)
    }
}

/// Node/saddle/focus/degenerate from trace and determinant.
pub fn classify_2x2(j: &Matrix2<f64>) -> FoldedType {
    let tr = j.trace();
    let det = j.determinant();
    let scale = j.abs().max().max(1.0);
    if det.abs() <= 1e-12 * scale * scale {
        return FoldedType::Degenerate;
    }
    if det < 0.0 {
        return FoldedType::Saddle;
    }
    if tr * tr - 4.0 * det < 0.0 {
        FoldedType::Focus
    } else {
        FoldedType::Node
    }
}

/// `a1 + a2`, warning when the non-degeneracy assumption fails.
pub fn lambda_of(sys: &SlowFastSystem) -> f64 {
    let l = sys.a1 + sys.a2;
    if l.abs() < 1e-8 {
        log::warn!("lambda = {l:e} is (nearly) zero");
    }
    l
}
