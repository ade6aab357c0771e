//! Exact center-manifold expansion at the double-zero point `(alpha, beta) = (1, -1)`.
//!
//! The manifold is written as `u_t = H(x; theta) = x1 + theta x2 + sum_{j>=2} H_j`,
//! with `H_j` homogeneous of degree `j` in `(x1, x2, p, q)` and coefficients in
//! `Q[b][theta]`. The reduced field is `x' = J0 x + sum_{j>=2} G_j(x, p, q)`. All
//! arithmetic is exact; `b` stays symbolic.

pub mod poly;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};
use serde_json::{json, Map, Value};

use crate::planar::PlanarVF;
use poly::{degree, q, qi, Exp, MPoly, QPoly, ThetaPoly, Q};

pub const DEFAULT_ORDER: usize = 5;

/// Constant objects of the spectral decomposition at DZ.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisObjects {
    /// Columns of `B(theta) = [1, theta]`.
    pub basis: [ThetaPoly; 2],
    /// Point mass of the projection at `theta = 0`.
    pub b_dagger_at0: [Q; 2],
    /// Density weights on `[-1, 0]`, coefficients in `s` lowest first.
    pub b_dagger_weights: [Vec<Q>; 2],
    pub j0: [[Q; 2]; 2],
    /// The 3x3 matrix as tabulated in the literature.
    pub m: [[Q; 3]; 3],
}

pub fn basis_objects() -> BasisObjects {
    BasisObjects {
        basis: [
            ThetaPoly::constant(QPoly::constant(Q::one())),
            ThetaPoly::monomial(QPoly::constant(Q::one()), 1),
        ],
        b_dagger_at0: [q(2, 3), qi(2)],
        b_dagger_weights: [vec![q(4, 3), qi(2)], vec![qi(-2)]],
        j0: [[Q::zero(), Q::one()], [Q::zero(), Q::zero()]],
        m: [
            [Q::zero(), qi(-1), q(3, 2)],
            [Q::one(), Q::zero(), q(-1, 36)],
            [Q::zero(), Q::one(), q(-1, 3)],
        ],
    }
}

/// The matrix actually solved at every multi-index, acting on `(h(0), g1, g2)`.
///
/// Its first row encodes the boundary condition after the `theta`-integration has
/// eliminated `h(0)` and `g1`; rows two and three are the projection conditions
/// and agree with the tabulated matrix.
pub fn solve_matrix() -> [[Q; 3]; 3] {
    [
        [Q::zero(), Q::zero(), q(1, 2)],
        [Q::one(), Q::zero(), q(-1, 36)],
        [Q::zero(), Q::one(), q(-1, 3)],
    ]
}

pub fn det3(m: &[[Q; 3]; 3]) -> Q {
    &m[0][0] * (&m[1][1] * &m[2][2] - &m[1][2] * &m[2][1])
        - &m[0][1] * (&m[1][0] * &m[2][2] - &m[1][2] * &m[2][0])
        + &m[0][2] * (&m[1][0] * &m[2][1] - &m[1][1] * &m[2][0])
}

/// Exact spectral projection `B^dagger phi`.
pub fn b_dagger(phi: &ThetaPoly) -> [QPoly; 2] {
    let bo = basis_objects();
    let at0 = phi.at(&Q::zero());
    [0, 1].map(|i| &at0.scale(&bo.b_dagger_at0[i]) + &phi.moment(&bo.b_dagger_weights[i]))
}

/// `B^dagger A phi`, where `A` is the generator of the linearization at DZ.
pub fn b_dagger_a(phi: &ThetaPoly) -> [QPoly; 2] {
    let bo = basis_objects();
    let lin = &phi.at(&Q::zero()) - &phi.at(&qi(-1));
    let d = phi.derivative();
    [0, 1].map(|i| &lin.scale(&bo.b_dagger_at0[i]) + &d.moment(&bo.b_dagger_weights[i]))
}

/// Non-decreasing index tuple `kappa` over `{1, 2, 3, 4}` for an exponent vector.
pub fn kappa(e: &Exp) -> Vec<u8> {
    (0..4u8)
        .flat_map(|i| std::iter::repeat_n(i + 1, e[i as usize] as usize))
        .collect()
}

pub fn exp_of_kappa(k: &[u8]) -> Exp {
    let mut e = [0u8; 4];
    for &i in k {
        e[(i - 1) as usize] += 1;
    }
    e
}

/// Number of index tuples with the same sorted form.
pub fn multinomial(e: &Exp) -> u64 {
    let f = |n: u64| (1..=n).product::<u64>();
    f(degree(e) as u64) / e.iter().map(|&k| f(k as u64)).product::<u64>()
}

/// All exponent vectors of total degree `j`, in lexicographic order of `kappa`.
pub fn monomials(j: usize) -> Vec<Exp> {
    let mut v = Vec::new();
    let j8 = j as u8;
    for a in 0..=j8 {
        for b in 0..=j8 - a {
            for c in 0..=j8 - a - b {
                v.push([a, b, c, j8 - a - b - c]);
            }
        }
    }
    v.sort_by_key(kappa);
    v
}

fn affine_pq(cp: Q, cq: Q) -> MPoly<QPoly> {
    let mut m = MPoly::new();
    m.add_term([0, 0, 1, 0], QPoly::constant(cp));
    m.add_term([0, 0, 0, 1], QPoly::constant(cq));
    m
}

/// `(alpha - 1, beta + 1)` as linear forms in `(p, q)`.
pub fn parameter_forms() -> (MPoly<QPoly>, MPoly<QPoly>) {
    (affine_pq(q(1, 3), q(1, 2)), affine_pq(q(1, 6), q(-1, 2)))
}

/// `f(phi) = alpha phi(0) + beta phi(-1 - phi(-b))` applied to a polynomial history
/// `phi = H(x; .)`, truncated at degree `max_deg` in `(x1, x2, p, q)`.
pub fn apply_f(h: &MPoly<ThetaPoly>, max_deg: usize) -> MPoly<QPoly> {
    let (a, c) = parameter_forms();
    let one = MPoly::term([0; 4], QPoly::constant(Q::one()));
    let alpha = one.add(&a);
    let beta = c.add(&one.scale(&qi(-1)));
    let h0 = h.map(|t| t.at(&Q::zero()));
    let minus_b = QPoly::var().scale(&qi(-1));
    let delta = h.map(|t| t.at_poly(&minus_b)).scale(&qi(-1));
    let mut taylor: Vec<MPoly<QPoly>> = Vec::new();
    for (e, t) in &h.0 {
        for (n, c) in t.shifted(&qi(-1)).into_iter().enumerate() {
            if taylor.len() <= n {
                taylor.resize(n + 1, MPoly::new());
            }
            taylor[n].add_term(*e, c);
        }
    }
    let mut delayed = MPoly::new();
    let mut pow = one.clone();
    for (n, tn) in taylor.iter().enumerate() {
        if n > 0 {
            pow = pow.mul_trunc(&delta, max_deg);
            if pow.is_zero() {
                break;
            }
        }
        delayed = delayed.add(&tn.mul_trunc(&pow, max_deg));
    }
    alpha
        .mul_trunc(&h0, max_deg)
        .add(&beta.mul_trunc(&delayed, max_deg))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CmfExpansion {
    pub order: usize,
    h: BTreeMap<Exp, ThetaPoly>,
    g: BTreeMap<Exp, [QPoly; 2]>,
}

fn linear_h() -> MPoly<ThetaPoly> {
    let one = QPoly::constant(Q::one());
    let mut h = MPoly::new();
    h.add_term([1, 0, 0, 0], ThetaPoly::constant(one.clone()));
    h.add_term([0, 1, 0, 0], ThetaPoly::monomial(one, 1));
    h
}

fn linear_g() -> [MPoly<QPoly>; 2] {
    [
        MPoly::term([0, 1, 0, 0], QPoly::constant(Q::one())),
        MPoly::new(),
    ]
}

/// Runs the order-by-order sweep up to `order`.
pub fn expand(order: usize) -> CmfExpansion {
    assert!(order >= 2, "expansion order must be at least 2");
    let mut hmap: BTreeMap<Exp, ThetaPoly> = BTreeMap::new();
    let mut gmap: BTreeMap<Exp, [QPoly; 2]> = BTreeMap::new();
    let mut h_layers: Vec<MPoly<ThetaPoly>> = vec![MPoly::new(), linear_h()];
    let mut g_layers: Vec<[MPoly<ThetaPoly>; 2]> = vec![
        [MPoly::new(), MPoly::new()],
        linear_g().map(|m| m.map(|c| ThetaPoly::constant(c.clone()))),
    ];
    let m = solve_matrix();
    for j in 2..=order {
        let mut h_low = MPoly::new();
        for l in &h_layers {
            h_low = h_low.add(l);
        }
        let known = apply_f(&h_low, j).homogeneous(j);
        let mut coupling: MPoly<ThetaPoly> = MPoly::new();
        for l in 2..j {
            let k = j - l + 1;
            for i in 0..2 {
                coupling = coupling.add(&h_layers[l].diff(i).mul_trunc(&g_layers[k][i], j));
            }
        }
        let mut hj = MPoly::new();
        let mut gj = [MPoly::new(), MPoly::new()];
        let mut solved: BTreeMap<Exp, ThetaPoly> = BTreeMap::new();
        for e in monomials(j) {
            let mut r = coupling.coeff(&e);
            if e[1] > 0 {
                let prev = [e[0] + 1, e[1] - 1, e[2], e[3]];
                r = &r + &solved[&prev].scale(&qi(e[0] as i64 + 1));
            }
            let ir = r.integral();
            let bd = b_dagger(&ir);
            let rhs = [
                &(&known.coeff(&e) - &r.at(&Q::zero())) - &ir.at(&qi(-1)),
                bd[0].scale(&qi(-1)),
                bd[1].scale(&qi(-1)),
            ];
            let [h0, g1, g2] = solve_triangular(&m, &rhs);
            let profile = ThetaPoly::from_coeffs(vec![h0, g1.clone(), g2.scale(&q(1, 2))]);
            let hk = &profile + &ir;
            solved.insert(e, hk.clone());
            hj.add_term(e, hk.clone());
            gj[0].add_term(e, ThetaPoly::constant(g1.clone()));
            gj[1].add_term(e, ThetaPoly::constant(g2.clone()));
            if !hk.is_zero() {
                hmap.insert(e, hk);
            }
            if !(g1.is_zero() && g2.is_zero()) {
                gmap.insert(e, [g1, g2]);
            }
        }
        h_layers.push(hj);
        g_layers.push(gj);
    }
    CmfExpansion {
        order,
        h: hmap,
        g: gmap,
    }
}

/// Solves the fixed system whose structure is `[[0,0,a],[1,0,c],[0,1,d]]`.
fn solve_triangular(m: &[[Q; 3]; 3], rhs: &[QPoly; 3]) -> [QPoly; 3] {
    let g2 = rhs[0].scale(&(Q::one() / &m[0][2]));
    let h0 = &rhs[1] - &g2.scale(&m[1][2]);
    let g1 = &rhs[2] - &g2.scale(&m[2][2]);
    [h0, g1, g2]
}

impl CmfExpansion {
    /// Monomial coefficient of `H` (degree at least 2).
    pub fn h_coeff(&self, e: &Exp) -> ThetaPoly {
        self.h.get(e).cloned().unwrap_or_default()
    }

    /// Monomial coefficient of the reduced field (degree at least 2).
    pub fn a_coeff(&self, e: &Exp) -> [QPoly; 2] {
        self.g
            .get(e)
            .cloned()
            .unwrap_or_else(|| [QPoly::zero(), QPoly::zero()])
    }

    pub fn h_coeffs(&self) -> &BTreeMap<Exp, ThetaPoly> {
        &self.h
    }

    pub fn a_coeffs(&self) -> &BTreeMap<Exp, [QPoly; 2]> {
        &self.g
    }

    /// Symmetric multilinear coefficient `A_kappa` (monomial coefficient over the multinomial weight).
    pub fn multilinear_a(&self, k: &[u8]) -> [QPoly; 2] {
        let e = exp_of_kappa(k);
        let w = Q::from_integer(multinomial(&e).into());
        self.a_coeff(&e).map(|c| c.scale(&(Q::one() / &w)))
    }

    /// Evaluates the degree-`j` part of the reduced field as a symmetric `j`-linear form.
    pub fn eval_multilinear_a(&self, args: &[[Q; 4]]) -> [QPoly; 2] {
        let j = args.len();
        let mut acc = [QPoly::zero(), QPoly::zero()];
        let total = 4usize.pow(j as u32);
        for idx in 0..total {
            let mut k = Vec::with_capacity(j);
            let mut rest = idx;
            let mut w = Q::one();
            for a in args {
                let i = rest % 4;
                rest /= 4;
                w *= &a[i];
                k.push(i as u8 + 1);
            }
            if w.is_zero() {
                continue;
            }
            k.sort_unstable();
            let c = self.multilinear_a(&k);
            for t in 0..2 {
                acc[t] = &acc[t] + &c[t].scale(&w);
            }
        }
        acc
    }

    /// Full `H` up to the expansion order, including the linear part.
    pub fn h_poly(&self) -> MPoly<ThetaPoly> {
        let mut h = linear_h();
        for (e, t) in &self.h {
            h.add_term(*e, t.clone());
        }
        h
    }

    /// Reduced field `G = J0 x + ...` truncated at `order`.
    pub fn g_poly(&self, order: usize) -> [MPoly<QPoly>; 2] {
        let mut g = linear_g();
        for (e, c) in &self.g {
            if degree(e) <= order {
                g[0].add_term(*e, c[0].clone());
                g[1].add_term(*e, c[1].clone());
            }
        }
        g
    }

    /// Checks projection, boundary and invariance conditions exactly.
    pub fn verify(&self) -> std::result::Result<(), String> {
        for (e, h) in &self.h {
            let bd = b_dagger(h);
            if !(bd[0].is_zero() && bd[1].is_zero()) {
                return Err(format!("projection of h{:?} is not zero", kappa(e)));
            }
        }
        let h = self.h_poly();
        let g = self
            .g_poly(self.order)
            .map(|m| m.map(|c| ThetaPoly::constant(c.clone())));
        let dh_g = h
            .diff(0)
            .mul_trunc(&g[0], self.order)
            .add(&h.diff(1).mul_trunc(&g[1], self.order));
        let dtheta = h.map(|t| t.derivative());
        let defect = dtheta.add(&dh_g.scale(&qi(-1)));
        if let Some((e, _)) = defect.0.iter().next() {
            return Err(format!("invariance fails at {:?}", kappa(e)));
        }
        let lhs = h.map(|t| t.derivative().at(&Q::zero()));
        let rhs = apply_f(&h, self.order);
        let bc = lhs.add(&rhs.scale(&qi(-1)));
        if let Some((e, _)) = bc.0.iter().next() {
            return Err(format!("boundary condition fails at {:?}", kappa(e)));
        }
        Ok(())
    }

    /// Second-order form in `y = x1 - x2/3`, `v = x2`, truncated at order `k`.
    ///
    /// Returns `(y', v')`; the first component is identically `v`.
    pub fn planar_components(&self, k: usize) -> [MPoly<QPoly>; 2] {
        let g = self.g_poly(k);
        let one = QPoly::constant(Q::one());
        let subs = [
            {
                let mut m = MPoly::term([1, 0, 0, 0], one.clone());
                m.add_term([0, 1, 0, 0], QPoly::constant(q(1, 3)));
                m
            },
            MPoly::term([0, 1, 0, 0], one.clone()),
            MPoly::term([0, 0, 1, 0], one.clone()),
            MPoly::term([0, 0, 0, 1], one),
        ];
        let ydot = g[0].add(&g[1].scale(&q(-1, 3))).compose(&subs, k);
        let vdot = g[1].compose(&subs, k);
        [ydot, vdot]
    }
}

/// Truncated planar field `y' = v, v' = F(y, v; p, q, b)`.
pub fn emit_planar_vf(exp: &CmfExpansion, order: usize) -> PlanarVF {
    let k = order.min(exp.order);
    let [ydot, vdot] = exp.planar_components(k);
    debug_assert_eq!(ydot, MPoly::term([0, 1, 0, 0], QPoly::constant(Q::one())));
    PlanarVF::new(vdot, k)
}

/// Name of a monomial in `(y, v, p, q)`, e.g. `y v^2 q`.
pub fn monomial_name(e: &Exp) -> String {
    let names = ["y", "v", "p", "q"];
    let parts: Vec<String> = (0..4)
        .filter(|&i| e[i] > 0)
        .map(|i| {
            if e[i] == 1 {
                names[i].to_string()
            } else {
                format!("{}^{}", names[i], e[i])
            }
        })
        .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join(" ")
    }
}

fn q_string(c: &Q) -> String {
    format!("{}/{}", c.numer(), c.denom())
}

/// `{order, terms: {monomial: [b^0 coeff, b^1 coeff, ...]}}` with `num/den` strings.
pub fn export_json(vf: &PlanarVF) -> Value {
    let mut terms = Map::new();
    for (e, c) in &vf.f().0 {
        terms.insert(
            monomial_name(e),
            Value::Array(
                c.coeffs()
                    .iter()
                    .map(|x| Value::String(q_string(x)))
                    .collect(),
            ),
        );
    }
    json!({ "order": vf.order(), "variables": ["y", "v", "p", "q"], "parameter": "b", "terms": terms })
}

/// Human-readable `F(y, v; p, q, b)`, terms grouped by total degree.
pub fn pretty(vf: &PlanarVF) -> String {
    let mut out = String::from("y' = v\nv' =");
    let mut first = true;
    let mut terms: Vec<(&Exp, &QPoly)> = vf.f().0.iter().collect();
    terms.sort_by_key(|(e, _)| (degree(e), std::cmp::Reverse(**e)));
    for (e, c) in terms {
        let (neg, coef) = match c.coeffs() {
            [x] => {
                let a = x.abs();
                let s = if a.is_one() {
                    String::new()
                } else if a.is_integer() {
                    format!("{} ", a.numer())
                } else {
                    format!("{} ", q_string(&a))
                };
                (x.is_negative(), s)
            }
            _ => (false, format!("({c}) ")),
        };
        let sep = match (first, neg) {
            (true, false) => " ",
            (true, true) => " -",
            (false, false) => "\n    + ",
            (false, true) => "\n    - ",
        };
        let _ = write!(out, "{sep}{coef}{}", monomial_name(e));
        first = false;
    }
    out.push('\n');
    out
}

/// One exact comparison in the second-order check.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct LemmaItem {
    pub name: String,
    pub expected: String,
    pub found: String,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct LemmaReport {
    pub items: Vec<LemmaItem>,
    pub passed: bool,
}

impl LemmaReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for it in &self.items {
            let tag = if it.ok { "match" } else { "MISMATCH" };
            let _ = writeln!(
                out,
                "{tag:8} {:28} expected {:18} found {}",
                it.name, it.expected, it.found
            );
        }
        let _ = writeln!(
            out,
            "{}",
            if self.passed {
                "all exact"
            } else {
                "check failed"
            }
        );
        out
    }
}

fn qpoly_string(c: &QPoly) -> String {
    let mut out = String::new();
    for (k, x) in c.coeffs().iter().enumerate().filter(|(_, x)| !x.is_zero()) {
        let mag = q_string(&x.abs());
        let term = match k {
            0 => mag,
            1 => format!("{mag} b"),
            _ => format!("{mag} b^{k}"),
        };
        match (out.is_empty(), x.is_negative()) {
            (true, true) => out.push_str(&format!("-{term}")),
            (true, false) => out.push_str(&term),
            (false, true) => out.push_str(&format!(" - {term}")),
            (false, false) => out.push_str(&format!(" + {term}")),
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

fn mat2_string(m: &[[QPoly; 2]; 2]) -> String {
    format!(
        "[[{}, {}], [{}, {}]]",
        qpoly_string(&m[0][0]),
        qpoly_string(&m[0][1]),
        qpoly_string(&m[1][0]),
        qpoly_string(&m[1][1])
    )
}

/// Exact check of the second-order planar field and the constant matrices.
pub fn lemma_check(exp: &CmfExpansion) -> LemmaReport {
    let mut items = Vec::new();
    let mut push = |name: &str, expected: String, found: String| {
        let ok = expected == found;
        items.push(LemmaItem {
            name: name.into(),
            expected,
            found,
            ok,
        });
    };
    push(
        "invariance",
        "ok".into(),
        exp.verify().map(|_| "ok".to_string()).unwrap_or_else(|e| e),
    );
    let vf = emit_planar_vf(exp, 2);
    let f = vf.f();
    let expect = [
        ([1, 0, 1, 0], "y p", QPoly::constant(Q::one())),
        ([0, 1, 0, 1], "v q", QPoly::constant(Q::one())),
        ([1, 1, 0, 0], "y v", QPoly::constant(qi(2))),
        (
            [0, 2, 0, 0],
            "v^2",
            QPoly::from_coeffs(vec![q(2, 3), qi(-2)]),
        ),
    ];
    for (e, name, c) in &expect {
        push(
            &format!("coefficient {name}"),
            qpoly_string(c),
            qpoly_string(&f.coeff(e)),
        );
    }
    let others =
        f.0.keys()
            .filter(|e| !expect.iter().any(|(x, _, _)| x == *e))
            .count();
    push("other terms", "0".into(), others.to_string());
    push(
        "v^2 at b = 1/3",
        "0/1".into(),
        q_string(&f.coeff(&[0, 2, 0, 0]).eval(&q(1, 3))),
    );

    let bo = basis_objects();
    let cols = [b_dagger_a(&bo.basis[0]), b_dagger_a(&bo.basis[1])];
    let found = [
        [cols[0][0].clone(), cols[1][0].clone()],
        [cols[0][1].clone(), cols[1][1].clone()],
    ];
    let (zero, one) = (QPoly::zero(), QPoly::constant(Q::one()));
    push(
        "B^+ A B",
        mat2_string(&[[zero.clone(), one], [zero.clone(), zero]]),
        mat2_string(&found),
    );
    let solved = solve_matrix();
    push(
        "M rows 2-3 vs solved",
        "equal".into(),
        if bo.m[1..] == solved[1..] {
            "equal"
        } else {
            "differ"
        }
        .into(),
    );
    push("det M", "7/6".into(), q_string(&det3(&bo.m)));
    LemmaReport {
        passed: items.iter().all(|i| i.ok),
        items,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qp(c: &[(i64, i64)]) -> QPoly {
        QPoly::from_coeffs(c.iter().map(|&(n, d)| q(n, d)).collect())
    }

    #[test]
    fn projection_of_basis_is_identity() {
        let bo = basis_objects();
        let one = QPoly::constant(Q::one());
        assert_eq!(b_dagger(&bo.basis[0]), [one.clone(), QPoly::zero()]);
        assert_eq!(b_dagger(&bo.basis[1]), [QPoly::zero(), one.clone()]);
        assert_eq!(b_dagger_a(&bo.basis[0]), [QPoly::zero(), QPoly::zero()]);
        assert_eq!(b_dagger_a(&bo.basis[1]), [one, QPoly::zero()]);
    }

    #[test]
    fn matrices_invertible() {
        assert_eq!(det3(&basis_objects().m), q(7, 6));
        assert!(!det3(&solve_matrix()).is_zero());
    }

    #[test]
    fn monomial_order_and_weights() {
        let m = monomials(2);
        assert_eq!(m.len(), 10);
        assert_eq!(kappa(&m[0]), vec![1, 1]);
        assert_eq!(kappa(&m[1]), vec![1, 2]);
        assert_eq!(multinomial(&[1, 1, 0, 0]), 2);
        assert_eq!(multinomial(&[2, 0, 1, 0]), 3);
    }

    #[test]
    fn lemma_report_passes() {
        let r = lemma_check(&expand(2));
        assert!(r.passed, "{}", r.render());
    }

    #[test]
    fn lemma_one() {
        let exp = expand(2);
        exp.verify().unwrap();
        let vf = emit_planar_vf(&exp, 2);
        let f = vf.f();
        assert_eq!(f.0.len(), 4);
        assert_eq!(f.coeff(&[1, 0, 1, 0]), qp(&[(1, 1)]));
        assert_eq!(f.coeff(&[0, 1, 0, 1]), qp(&[(1, 1)]));
        assert_eq!(f.coeff(&[1, 1, 0, 0]), qp(&[(2, 1)]));
        assert_eq!(f.coeff(&[0, 2, 0, 0]), qp(&[(2, 3), (-2, 1)]));
    }
}
