//! Independent dense-tensor re-derivation of the center-manifold field.
//!
//! Every homogeneous part is stored as a full symmetric tensor over ordered index
//! tuples, products are symmetrized tensor products and the per-entry 3x3 systems
//! are assembled from the conditions themselves and solved by Cramer's rule.

use num_traits::{One, Zero};
use sdde::cmf::poly::{q, qi, QPoly, ThetaPoly, Q};
use sdde::cmf::{emit_planar_vf, expand};

#[derive(Clone, Debug)]
struct Ten<C> {
    deg: usize,
    data: Vec<C>,
}

trait Coef: Clone {
    fn zero() -> Self;
    fn add(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn scale(&self, s: &Q) -> Self;
}

impl Coef for ThetaPoly {
    fn zero() -> Self {
        ThetaPoly::zero()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn scale(&self, s: &Q) -> Self {
        ThetaPoly::scale(self, s)
    }
}

fn digits(idx: usize, deg: usize) -> Vec<usize> {
    (0..deg).map(|k| (idx >> (2 * k)) & 3).collect()
}

fn index(t: &[usize]) -> usize {
    t.iter().enumerate().map(|(k, &d)| d << (2 * k)).sum()
}

fn binom(n: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

impl<C: Coef> Ten<C> {
    fn zeros(deg: usize) -> Self {
        Ten {
            deg,
            data: vec![C::zero(); 1 << (2 * deg)],
        }
    }

    fn add(&self, o: &Self) -> Self {
        assert_eq!(self.deg, o.deg);
        Ten {
            deg: self.deg,
            data: self
                .data
                .iter()
                .zip(&o.data)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    fn scale(&self, s: &Q) -> Self {
        Ten {
            deg: self.deg,
            data: self.data.iter().map(|a| a.scale(s)).collect(),
        }
    }

    fn map<F: Fn(&C) -> C>(&self, f: F) -> Self {
        Ten {
            deg: self.deg,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Symmetrized tensor product.
    fn sym(&self, o: &Self) -> Self {
        let n = self.deg + o.deg;
        let mut r = Self::zeros(n);
        let w = Q::one() / Q::from_integer(binom(n, self.deg).into());
        for (i, slot) in r.data.iter_mut().enumerate() {
            let t = digits(i, n);
            let mut acc = C::zero();
            for mask in 0u32..(1 << n) {
                if mask.count_ones() as usize != self.deg {
                    continue;
                }
                let (a, b): (Vec<usize>, Vec<usize>) = {
                    let mut a = Vec::new();
                    let mut b = Vec::new();
                    for (k, &d) in t.iter().enumerate() {
                        if mask & (1 << k) != 0 {
                            a.push(d)
                        } else {
                            b.push(d)
                        }
                    }
                    (a, b)
                };
                acc = acc.add(&self.data[index(&a)].mul(&o.data[index(&b)]));
            }
            *slot = acc.scale(&w);
        }
        r
    }
}

/// `l * H_l(G, x, ..., x)` symmetrized, for a vector-valued `G` of degree `k`.
fn contract(h: &Ten<ThetaPoly>, g: &[Ten<ThetaPoly>; 2]) -> Ten<ThetaPoly> {
    let l = h.deg;
    let k = g[0].deg;
    let n = l - 1 + k;
    let mut r = Ten::zeros(n);
    let w = Q::one() / Q::from_integer(binom(n, k).into());
    for (idx, slot) in r.data.iter_mut().enumerate() {
        let t = digits(idx, n);
        let mut acc = ThetaPoly::zero();
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != k {
                continue;
            }
            let mut gi = Vec::new();
            let mut hi = vec![0usize];
            for (p, &d) in t.iter().enumerate() {
                if mask & (1 << p) != 0 {
                    gi.push(d)
                } else {
                    hi.push(d)
                }
            }
            for i in 0..2 {
                hi[0] = i;
                acc = &acc + &(&h.data[index(&hi)] * &g[i].data[index(&gi)]);
            }
        }
        *slot = acc.scale(&(w.clone() * qi(l as i64)));
    }
    r
}

fn theta(c: Q, k: usize) -> ThetaPoly {
    ThetaPoly::monomial(QPoly::constant(c), k)
}

fn konst(c: Q) -> ThetaPoly {
    theta(c, 0)
}

fn projection(phi: &ThetaPoly) -> [QPoly; 2] {
    let at0 = phi.at(&Q::zero());
    let weights = [[q(4, 3), qi(2)], [qi(-2), qi(0)]];
    let at0w = [q(2, 3), qi(2)];
    [0, 1].map(|i| {
        let w = ThetaPoly::from_coeffs(
            weights[i]
                .iter()
                .map(|c| QPoly::constant(c.clone()))
                .collect(),
        );
        let prim = (&w * phi).integral();
        let integral = &prim.at(&Q::zero()) - &prim.at(&qi(-1));
        &at0.scale(&at0w[i]) + &integral
    })
}

/// Conditions on `h = h0 + g1 theta + g2 theta^2/2 + ir` given `r` and the known term.
fn conditions(h: &ThetaPoly, g1: &QPoly, r0: &QPoly, known: &QPoly) -> [QPoly; 3] {
    let bc = &(&(g1 + r0) - known) - &(&h.at(&Q::zero()) - &h.at(&qi(-1)));
    let [p1, p2] = projection(h);
    [bc, p1, p2]
}

fn solve_entry(r: &ThetaPoly, known: &QPoly) -> (ThetaPoly, QPoly, QPoly) {
    let ir = r.integral();
    let r0 = r.at(&Q::zero());
    let zero = QPoly::zero();
    let base = conditions(&ir, &zero, &r0, known);
    let unit = |k: usize| -> [Q; 3] {
        let (h, g1) = match k {
            0 => (konst(Q::one()), QPoly::zero()),
            1 => (theta(Q::one(), 1), QPoly::constant(Q::one())),
            _ => (theta(q(1, 2), 2), QPoly::zero()),
        };
        let c = conditions(&h, &g1, &QPoly::zero(), &QPoly::zero());
        c.map(|x| x.coeffs().first().cloned().unwrap_or_else(Q::zero))
    };
    let cols = [unit(0), unit(1), unit(2)];
    let m = |i: usize, j: usize| cols[j][i].clone();
    let det3 = |a: [[Q; 3]; 3]| {
        &a[0][0] * (&a[1][1] * &a[2][2] - &a[1][2] * &a[2][1])
            - &a[0][1] * (&a[1][0] * &a[2][2] - &a[1][2] * &a[2][0])
            + &a[0][2] * (&a[1][0] * &a[2][1] - &a[1][1] * &a[2][0])
    };
    let mat: [[Q; 3]; 3] = [0, 1, 2].map(|i| [0, 1, 2].map(|j| m(i, j)));
    let d = det3(mat.clone());
    assert!(!d.is_zero());
    let rhs = base.map(|c| c.scale(&qi(-1)));
    let mut sol: Vec<QPoly> = Vec::new();
    for k in 0..3 {
        let mut acc = QPoly::zero();
        for i in 0..3 {
            let mut minor = mat.clone();
            for (rr, row) in minor.iter_mut().enumerate() {
                row[k] = if rr == i { Q::one() } else { Q::zero() };
            }
            acc = &acc + &rhs[i].scale(&det3(minor));
        }
        sol.push(acc.scale(&(Q::one() / &d)));
    }
    let h = &(&(&konst(Q::zero()) + &ThetaPoly::constant(sol[0].clone()))
        + &ThetaPoly::monomial(sol[1].clone(), 1))
        + &(&ThetaPoly::monomial(sol[2].scale(&q(1, 2)), 2) + &ir);
    (h, sol[1].clone(), sol[2].clone())
}

struct Oracle {
    h: Vec<Ten<ThetaPoly>>,
    g: Vec<[Ten<ThetaPoly>; 2]>,
}

fn constant_tensor() -> Ten<ThetaPoly> {
    Ten {
        deg: 0,
        data: vec![konst(Q::one())],
    }
}

fn known_term(h: &[Ten<ThetaPoly>], j: usize) -> Ten<ThetaPoly> {
    let mut alpha = [Ten::zeros(0), Ten::zeros(1)];
    alpha[0] = constant_tensor();
    alpha[1].data[2] = konst(q(1, 3));
    alpha[1].data[3] = konst(q(1, 2));
    let mut beta = [Ten::zeros(0), Ten::zeros(1)];
    beta[0] = constant_tensor().scale(&qi(-1));
    beta[1].data[2] = konst(q(1, 6));
    beta[1].data[3] = konst(q(-1, 2));
    let minus_b = QPoly::var().scale(&qi(-1));
    let at0: Vec<_> = h
        .iter()
        .map(|t| t.map(|c| ThetaPoly::constant(c.at(&Q::zero()))))
        .collect();
    let delta: Vec<_> = h
        .iter()
        .map(|t| t.map(|c| ThetaPoly::constant(c.at_poly(&minus_b).scale(&qi(-1)))))
        .collect();
    let mut pows: Vec<Vec<Option<Ten<ThetaPoly>>>> = vec![vec![None; j + 1]; j + 1];
    pows[0][0] = Some(constant_tensor());
    for n in 1..=j {
        for d in n..=j {
            let mut acc: Option<Ten<ThetaPoly>> = None;
            for d1 in 1..=d {
                if d1 >= delta.len() {
                    break;
                }
                if let Some(prev) = &pows[n - 1][d - d1] {
                    let t = prev.sym(&delta[d1]);
                    acc = Some(match acc {
                        Some(a) => a.add(&t),
                        None => t,
                    });
                }
            }
            pows[n][d] = acc;
        }
    }
    let mut delayed: Vec<Ten<ThetaPoly>> = (0..=j).map(Ten::zeros).collect();
    for (l, hl) in h.iter().enumerate().skip(1) {
        let mut deriv = hl.clone();
        let mut fact = Q::one();
        for n in 0..j {
            if n > 0 {
                deriv = deriv.map(|c| c.derivative());
                fact *= qi(n as i64);
            }
            let coeff =
                deriv.map(|c| ThetaPoly::constant(c.at(&qi(-1)).scale(&(Q::one() / &fact))));
            for d in n..=j {
                if l + d > j {
                    break;
                }
                if let Some(pw) = &pows[n][d] {
                    delayed[l + d] = delayed[l + d].add(&coeff.sym(pw));
                }
            }
        }
    }
    let mut out = Ten::zeros(j);
    for (ka, a) in alpha.iter().enumerate() {
        if j >= ka && j - ka < at0.len() && j - ka >= 1 {
            out = out.add(&a.sym(&at0[j - ka]));
        }
    }
    for (kb, bt) in beta.iter().enumerate() {
        if j >= kb && j - kb >= 1 {
            out = out.add(&bt.sym(&delayed[j - kb]));
        }
    }
    out
}

impl Oracle {
    fn run(order: usize) -> Self {
        let mut h1 = Ten::zeros(1);
        h1.data[0] = konst(Q::one());
        h1.data[1] = theta(Q::one(), 1);
        let mut g1 = [Ten::zeros(1), Ten::zeros(1)];
        g1[0].data[1] = konst(Q::one());
        let mut o = Oracle {
            h: vec![Ten::zeros(0), h1],
            g: vec![[Ten::zeros(0), Ten::zeros(0)], g1],
        };
        for j in 2..=order {
            let known = known_term(&o.h, j);
            let mut coupling = Ten::zeros(j);
            for l in 2..j {
                coupling = coupling.add(&contract(&o.h[l], &o.g[j - l + 1]));
            }
            let mut hj: Ten<ThetaPoly> = Ten::zeros(j);
            let mut gj = [Ten::zeros(j), Ten::zeros(j)];
            let mut order_idx: Vec<usize> = (0..hj.data.len()).collect();
            order_idx.sort_by_key(|&i| digits(i, j).iter().filter(|&&d| d == 1).count());
            for i in order_idx {
                let t = digits(i, j);
                let mut sorted = t.clone();
                sorted.sort_unstable();
                if sorted != t {
                    continue;
                }
                let mut r = coupling.data[i].clone();
                for p in 0..j {
                    if t[p] == 1 {
                        let mut t2 = t.clone();
                        t2[p] = 0;
                        r = &r + &hj.data[index(&t2)];
                    }
                }
                let known_c = known.data[i].at(&Q::zero());
                let (h, a, b) = solve_entry(&r, &known_c);
                for (k, slot) in hj.data.iter_mut().enumerate() {
                    let mut s = digits(k, j);
                    s.sort_unstable();
                    if s == t {
                        *slot = h.clone();
                    }
                }
                for k in 0..gj[0].data.len() {
                    let mut s = digits(k, j);
                    s.sort_unstable();
                    if s == t {
                        gj[0].data[k] = ThetaPoly::constant(a.clone());
                        gj[1].data[k] = ThetaPoly::constant(b.clone());
                    }
                }
            }
            o.h.push(hj);
            o.g.push(gj);
        }
        o
    }

    /// Second component after `x1 = y + v/3, x2 = v`, as a tensor in `(y, v, p, q)`.
    fn transformed(&self, j: usize, comp: usize) -> Ten<ThetaPoly> {
        let src = if comp == 0 {
            self.g[j][0].add(&self.g[j][1].scale(&q(-1, 3)))
        } else {
            self.g[j][1].clone()
        };
        let mut cur = src;
        for slot in 0..j {
            let mut next = Ten::zeros(j);
            for (i, out) in next.data.iter_mut().enumerate() {
                let t = digits(i, j);
                let mut acc = ThetaPoly::zero();
                for s in 0..4 {
                    let coef = match (s, t[slot]) {
                        (0, 0) => Q::one(),
                        (0, 1) => q(1, 3),
                        (1, 1) | (2, 2) | (3, 3) => Q::one(),
                        _ => Q::zero(),
                    };
                    if coef.is_zero() {
                        continue;
                    }
                    let mut t2 = t.clone();
                    t2[slot] = s;
                    acc = &acc + &cur.data[index(&t2)].scale(&coef);
                }
                *out = acc;
            }
            cur = next;
        }
        cur
    }
}

fn multinomial(e: &[u8; 4]) -> i64 {
    let f = |n: i64| (1..=n).product::<i64>();
    f(e.iter().map(|&k| k as i64).sum()) / e.iter().map(|&k| f(k as i64)).product::<i64>()
}

fn check_order(order: usize) {
    let oracle = Oracle::run(order);
    let vf = emit_planar_vf(&expand(order), order);
    let mut n_terms = 0;
    for j in 2..=order {
        let tv = oracle.transformed(j, 1);
        let ty = oracle.transformed(j, 0);
        for (i, c) in tv.data.iter().enumerate() {
            let t = digits(i, j);
            let mut e = [0u8; 4];
            for &d in &t {
                e[d] += 1;
            }
            let mut sorted = t.clone();
            sorted.sort_unstable();
            if sorted != t {
                continue;
            }
            let w = qi(multinomial(&e));
            let mono = c.at(&Q::zero()).scale(&w);
            assert_eq!(mono, vf.f().coeff(&e), "coefficient of {e:?} at order {j}");
            assert!(ty.data[i].is_zero(), "y' has a nonlinear term at {e:?}");
            if !mono.is_zero() {
                n_terms += 1;
            }
        }
    }
    let linear = vf
        .f()
        .0
        .keys()
        .filter(|e| e.iter().map(|&k| k as usize).sum::<usize>() < 2)
        .count();
    assert_eq!(n_terms, vf.f().0.len() - linear);
}

#[test]
fn tensor_oracle_agrees_to_order_three() {
    check_order(3);
}

#[test]
fn tensor_oracle_agrees_to_order_five() {
    check_order(5);
}
