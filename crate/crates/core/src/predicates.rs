//! Exact geometric predicates.
//!
//! Orientation and circumsphere tests are evaluated with a floating-point
//! filter first; when the filtered result is not provably correct, the sign
//! is recomputed exactly with multi-component floating-point expansions
//! (alternating errbound filters and expansion arithmetic in the style of
//! adaptive-precision predicates). All signs returned by this module are
//! exact for finite, non-overflowing inputs.

use crate::geom::Vec3;

const EPS: f64 = f64::EPSILON / 2.0; // 2^-53
const O3D_BOUND: f64 = (7.0 + 56.0 * EPS) * EPS;
const ISP_BOUND: f64 = (16.0 + 224.0 * EPS) * EPS;
const SPLITTER: f64 = 134_217_729.0; // 2^27 + 1

#[inline]
fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    // requires |a| >= |b|
    let x = a + b;
    let bvirt = x - a;
    (x, b - bvirt)
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let x = a + b;
    let bvirt = x - a;
    let avirt = x - bvirt;
    let bround = b - bvirt;
    let around = a - avirt;
    (x, around + bround)
}

#[inline]
fn two_diff(a: f64, b: f64) -> (f64, f64) {
    let x = a - b;
    let bvirt = a - x;
    let avirt = x + bvirt;
    let bround = bvirt - b;
    let around = a - avirt;
    (x, around + bround)
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    let c = SPLITTER * a;
    let abig = c - a;
    let hi = c - abig;
    (hi, a - hi)
}

/// Multi-component expansion: nonoverlapping components stored in order of
/// increasing magnitude. A zero expansion is stored as `[0.0]`.
type Expansion = Vec<f64>;

fn from_two(hi: f64, lo: f64) -> Expansion {
    if lo == 0.0 {
        vec![hi]
    } else {
        vec![lo, hi]
    }
}

fn expansion_sign(e: &Expansion) -> i8 {
    match e.last() {
        Some(&v) if v > 0.0 => 1,
        Some(&v) if v < 0.0 => -1,
        _ => 0,
    }
}

/// Sum of two expansions (zero-eliminating merge).
fn expansion_add(e: &[f64], f: &[f64]) -> Expansion {
    let mut h = Vec::with_capacity(e.len() + f.len());
    let mut ei = 0;
    let mut fi = 0;
    // Pull the component of smaller magnitude first.
    let take_e = |ei: usize, fi: usize| -> bool {
        if ei >= e.len() {
            false
        } else if fi >= f.len() {
            true
        } else {
            let (en, fn_) = (e[ei], f[fi]);
            (fn_ > en) == (fn_ > -en)
        }
    };
    let mut q = if take_e(ei, fi) {
        ei += 1;
        e[ei - 1]
    } else {
        fi += 1;
        f[fi - 1]
    };
    let mut first = true;
    while ei < e.len() || fi < f.len() {
        let now = if take_e(ei, fi) {
            ei += 1;
            e[ei - 1]
        } else {
            fi += 1;
            f[fi - 1]
        };
        let (qnew, hh) = if first {
            first = false;
            fast_two_sum(now, q)
        } else {
            two_sum(q, now)
        };
        q = qnew;
        if hh != 0.0 {
            h.push(hh);
        }
    }
    if q != 0.0 || h.is_empty() {
        h.push(q);
    }
    h
}

fn expansion_sub(e: &[f64], f: &[f64]) -> Expansion {
    let neg: Vec<f64> = f.iter().map(|x| -x).collect();
    expansion_add(e, &neg)
}

/// Product of an expansion and a scalar (zero-eliminating).
fn expansion_scale(e: &[f64], b: f64) -> Expansion {
    let mut h = Vec::with_capacity(2 * e.len());
    let (bhi, blo) = split(b);
    let presplit_product = |a: f64| -> (f64, f64) {
        let x = a * b;
        let (ahi, alo) = split(a);
        let err = x - ahi * bhi - alo * bhi - ahi * blo;
        (x, alo * blo - err)
    };
    let (mut q, hh) = presplit_product(e[0]);
    if hh != 0.0 {
        h.push(hh);
    }
    for &enow in &e[1..] {
        let (p1, p0) = presplit_product(enow);
        let (sum, hh) = two_sum(q, p0);
        if hh != 0.0 {
            h.push(hh);
        }
        let (qnew, hh) = fast_two_sum(p1, sum);
        q = qnew;
        if hh != 0.0 {
            h.push(hh);
        }
    }
    if q != 0.0 || h.is_empty() {
        h.push(q);
    }
    h
}

fn expansion_mul(e: &[f64], f: &[f64]) -> Expansion {
    let mut acc: Expansion = vec![0.0];
    for &fi in f {
        if fi != 0.0 {
            acc = expansion_add(&acc, &expansion_scale(e, fi));
        }
    }
    acc
}

/// Exact difference of two doubles as an expansion.
fn exact_diff(a: f64, b: f64) -> Expansion {
    let (hi, lo) = two_diff(a, b);
    from_two(hi, lo)
}

/// Exact 2x2 determinant `a*d - b*c` of exact two-double differences.
fn exact_det2(a: &[f64], d: &[f64], b: &[f64], c: &[f64]) -> Expansion {
    expansion_sub(&expansion_mul(a, d), &expansion_mul(b, c))
}

/// Orientation of `d` relative to the plane through `a`, `b`, `c`:
/// the sign of `det[b - a; c - a; d - a]`, i.e. +1 when the tetrahedron
/// `(a, b, c, d)` has positive signed volume.
pub fn orient3d(a: Vec3, b: Vec3, c: Vec3, d: Vec3) -> i8 {
    let adx = b.x - a.x;
    let ady = b.y - a.y;
    let adz = b.z - a.z;
    let bdx = c.x - a.x;
    let bdy = c.y - a.y;
    let bdz = c.z - a.z;
    let cdx = d.x - a.x;
    let cdy = d.y - a.y;
    let cdz = d.z - a.z;

    let bdxcdy = bdx * cdy;
    let cdxbdy = cdx * bdy;
    let cdxady = cdx * ady;
    let adxcdy = adx * cdy;
    let adxbdy = adx * bdy;
    let bdxady = bdx * ady;

    let det = adz * (bdxcdy - cdxbdy) + bdz * (cdxady - adxcdy) + cdz * (adxbdy - bdxady);
    let permanent = (bdxcdy.abs() + cdxbdy.abs()) * adz.abs()
        + (cdxady.abs() + adxcdy.abs()) * bdz.abs()
        + (adxbdy.abs() + bdxady.abs()) * cdz.abs();
    let errbound = O3D_BOUND * permanent;
    if det > errbound {
        return 1;
    }
    if det < -errbound {
        return -1;
    }
    orient3d_exact(a, b, c, d)
}

fn orient3d_exact(a: Vec3, b: Vec3, c: Vec3, d: Vec3) -> i8 {
    let u = [exact_diff(b.x, a.x), exact_diff(b.y, a.y), exact_diff(b.z, a.z)];
    let v = [exact_diff(c.x, a.x), exact_diff(c.y, a.y), exact_diff(c.z, a.z)];
    let w = [exact_diff(d.x, a.x), exact_diff(d.y, a.y), exact_diff(d.z, a.z)];
    // u . (v x w)
    let m0 = exact_det2(&v[1], &w[2], &v[2], &w[1]);
    let m1 = exact_det2(&v[2], &w[0], &v[0], &w[2]);
    let m2 = exact_det2(&v[0], &w[1], &v[1], &w[0]);
    let t0 = expansion_mul(&m0, &u[0]);
    let t1 = expansion_mul(&m1, &u[1]);
    let t2 = expansion_mul(&m2, &u[2]);
    let det = expansion_add(&expansion_add(&t0, &t1), &t2);
    expansion_sign(&det)
}

/// Circumsphere test: +1 when `e` lies strictly inside the circumsphere of
/// the tetrahedron `(a, b, c, d)`, -1 when strictly outside, 0 when exactly
/// on the sphere. The sign convention assumes `orient3d(a, b, c, d) > 0`;
/// the result flips for a negatively oriented tetrahedron.
pub fn insphere(a: Vec3, b: Vec3, c: Vec3, d: Vec3, e: Vec3) -> i8 {
    let aex = a.x - e.x;
    let bex = b.x - e.x;
    let cex = c.x - e.x;
    let dex = d.x - e.x;
    let aey = a.y - e.y;
    let bey = b.y - e.y;
    let cey = c.y - e.y;
    let dey = d.y - e.y;
    let aez = a.z - e.z;
    let bez = b.z - e.z;
    let cez = c.z - e.z;
    let dez = d.z - e.z;

    let aexbey = aex * bey;
    let bexaey = bex * aey;
    let ab = aexbey - bexaey;
    let bexcey = bex * cey;
    let cexbey = cex * bey;
    let bc = bexcey - cexbey;
    let cexdey = cex * dey;
    let dexcey = dex * cey;
    let cd = cexdey - dexcey;
    let dexaey = dex * aey;
    let aexdey = aex * dey;
    let da = dexaey - aexdey;
    let aexcey = aex * cey;
    let cexaey = cex * aey;
    let ac = aexcey - cexaey;
    let bexdey = bex * dey;
    let dexbey = dex * bey;
    let bd = bexdey - dexbey;

    let abc = aez * bc - bez * ac + cez * ab;
    let bcd = bez * cd - cez * bd + dez * bc;
    let cda = cez * da + dez * ac + aez * cd;
    let dab = dez * ab + aez * bd + bez * da;

    let alift = aex * aex + aey * aey + aez * aez;
    let blift = bex * bex + bey * bey + bez * bez;
    let clift = cex * cex + cey * cey + cez * cez;
    let dlift = dex * dex + dey * dey + dez * dez;

    let det = (dlift * abc - clift * dab) + (blift * cda - alift * bcd);

    let aezplus = aez.abs();
    let bezplus = bez.abs();
    let cezplus = cez.abs();
    let dezplus = dez.abs();
    let aexbeyplus = aexbey.abs();
    let bexaeyplus = bexaey.abs();
    let bexceyplus = bexcey.abs();
    let cexbeyplus = cexbey.abs();
    let cexdeyplus = cexdey.abs();
    let dexceyplus = dexcey.abs();
    let dexaeyplus = dexaey.abs();
    let aexdeyplus = aexdey.abs();
    let aexceyplus = aexcey.abs();
    let cexaeyplus = cexaey.abs();
    let bexdeyplus = bexdey.abs();
    let dexbeyplus = dexbey.abs();
    let permanent = ((cexdeyplus + dexceyplus) * bezplus
        + (dexbeyplus + bexdeyplus) * cezplus
        + (bexceyplus + cexbeyplus) * dezplus)
        * alift
        + ((dexaeyplus + aexdeyplus) * cezplus
            + (aexceyplus + cexaeyplus) * dezplus
            + (cexdeyplus + dexceyplus) * aezplus)
            * blift
        + ((aexbeyplus + bexaeyplus) * dezplus
            + (bexdeyplus + dexbeyplus) * aezplus
            + (dexaeyplus + aexdeyplus) * bezplus)
            * clift
        + ((bexceyplus + cexbeyplus) * aezplus
            + (cexaeyplus + aexceyplus) * bezplus
            + (aexbeyplus + bexaeyplus) * cezplus)
            * dlift;
    let errbound = ISP_BOUND * permanent;
    // det > 0 here means e OUTSIDE a positively oriented tet (Shewchuk's
    // convention with this row layout), hence the sign flip on return.
    if det > errbound {
        return -1;
    }
    if det < -errbound {
        return 1;
    }
    -insphere_exact(a, b, c, d, e)
}

fn insphere_exact(a: Vec3, b: Vec3, c: Vec3, d: Vec3, e: Vec3) -> i8 {
    let rows = [a, b, c, d].map(|p| {
        [
            exact_diff(p.x, e.x),
            exact_diff(p.y, e.y),
            exact_diff(p.z, e.z),
        ]
    });
    let lifts: Vec<Expansion> = rows
        .iter()
        .map(|r| {
            let xx = expansion_mul(&r[0], &r[0]);
            let yy = expansion_mul(&r[1], &r[1]);
            let zz = expansion_mul(&r[2], &r[2]);
            expansion_add(&expansion_add(&xx, &yy), &zz)
        })
        .collect();
    let minor = |i: usize, j: usize, k: usize| -> Expansion {
        let (r0, r1, r2) = (&rows[i], &rows[j], &rows[k]);
        let m0 = exact_det2(&r1[1], &r2[2], &r1[2], &r2[1]);
        let m1 = exact_det2(&r1[2], &r2[0], &r1[0], &r2[2]);
        let m2 = exact_det2(&r1[0], &r2[1], &r1[1], &r2[0]);
        let t0 = expansion_mul(&m0, &r0[0]);
        let t1 = expansion_mul(&m1, &r0[1]);
        let t2 = expansion_mul(&m2, &r0[2]);
        expansion_add(&expansion_add(&t0, &t1), &t2)
    };
    // Expansion along the lift column:
    // det = -La*|BCD| + Lb*|ACD| - Lc*|ABD| + Ld*|ABC|
    let t_a = expansion_mul(&minor(1, 2, 3), &lifts[0]);
    let t_b = expansion_mul(&minor(0, 2, 3), &lifts[1]);
    let t_c = expansion_mul(&minor(0, 1, 3), &lifts[2]);
    let t_d = expansion_mul(&minor(0, 1, 2), &lifts[3]);
    let det = expansion_add(&expansion_sub(&t_b, &t_a), &expansion_sub(&t_d, &t_c));
    expansion_sign(&det)
}

/// In-plane circumcircle test for four coplanar points: +1 when `p` lies
/// strictly inside the circle through `a`, `b`, `c` (within their common
/// plane), -1 strictly outside, 0 on the circle. The result is independent
/// of the orientation of `(a, b, c)`.
///
/// Only meaningful when the four points are exactly coplanar (callers pair
/// it with `orient3d == 0`).
pub fn incircle3d(a: Vec3, b: Vec3, c: Vec3, p: Vec3) -> i8 {
    if let Some(sign) = incircle3d_filter(a, b, c, p) {
        return sign;
    }
    incircle3d_exact(a, b, c, p)
}

// Evaluates sign(S . N) with S = |A|^2 (B x C) + |B|^2 (C x A) + |C|^2 (A x B)
// and N = (B - A) x (C - A), where A = a - p etc. S . N is positive exactly
// when p is strictly inside the circumcircle.
fn incircle3d_filter(a: Vec3, b: Vec3, c: Vec3, p: Vec3) -> Option<i8> {
    let av = Iv3::diff(a, p);
    let bv = Iv3::diff(b, p);
    let cv = Iv3::diff(c, p);
    let s = bv
        .cross(&cv)
        .scale(av.norm2())
        .add(&cv.cross(&av).scale(bv.norm2()))
        .add(&av.cross(&bv).scale(cv.norm2()));
    let n = bv.sub(&av).cross(&cv.sub(&av));
    s.dot(&n).sign()
}

fn incircle3d_exact(a: Vec3, b: Vec3, c: Vec3, p: Vec3) -> i8 {
    let ax = [exact_diff(a.x, p.x), exact_diff(a.y, p.y), exact_diff(a.z, p.z)];
    let bx = [exact_diff(b.x, p.x), exact_diff(b.y, p.y), exact_diff(b.z, p.z)];
    let cx = [exact_diff(c.x, p.x), exact_diff(c.y, p.y), exact_diff(c.z, p.z)];
    let norm2 = |v: &[Expansion; 3]| -> Expansion {
        let xx = expansion_mul(&v[0], &v[0]);
        let yy = expansion_mul(&v[1], &v[1]);
        let zz = expansion_mul(&v[2], &v[2]);
        expansion_add(&expansion_add(&xx, &yy), &zz)
    };
    let cross = |u: &[Expansion; 3], v: &[Expansion; 3]| -> [Expansion; 3] {
        [
            exact_det2(&u[1], &v[2], &u[2], &v[1]),
            exact_det2(&u[2], &v[0], &u[0], &v[2]),
            exact_det2(&u[0], &v[1], &u[1], &v[0]),
        ]
    };
    let scale3 = |v: &[Expansion; 3], s: &Expansion| -> [Expansion; 3] {
        [
            expansion_mul(&v[0], s),
            expansion_mul(&v[1], s),
            expansion_mul(&v[2], s),
        ]
    };
    let add3 = |u: &[Expansion; 3], v: &[Expansion; 3]| -> [Expansion; 3] {
        [
            expansion_add(&u[0], &v[0]),
            expansion_add(&u[1], &v[1]),
            expansion_add(&u[2], &v[2]),
        ]
    };
    let sub3 = |u: &[Expansion; 3], v: &[Expansion; 3]| -> [Expansion; 3] {
        [
            expansion_sub(&u[0], &v[0]),
            expansion_sub(&u[1], &v[1]),
            expansion_sub(&u[2], &v[2]),
        ]
    };

    let s = add3(
        &add3(
            &scale3(&cross(&bx, &cx), &norm2(&ax)),
            &scale3(&cross(&cx, &ax), &norm2(&bx)),
        ),
        &scale3(&cross(&ax, &bx), &norm2(&cx)),
    );
    let n = cross(&sub3(&bx, &ax), &sub3(&cx, &ax));
    let dot = expansion_add(
        &expansion_add(&expansion_mul(&s[0], &n[0]), &expansion_mul(&s[1], &n[1])),
        &expansion_mul(&s[2], &n[2]),
    );
    expansion_sign(&dot)
}

// ---------------------------------------------------------------------------
// Minimal interval arithmetic used as the incircle3d filter. Every endpoint
// is widened by one ulp after each rounded operation, so the computed
// interval always encloses the exact value.

#[derive(Clone, Copy)]
struct Iv {
    lo: f64,
    hi: f64,
}

impl Iv {
    fn exact(x: f64) -> Iv {
        Iv { lo: x, hi: x }
    }

    fn add(self, o: Iv) -> Iv {
        Iv {
            lo: (self.lo + o.lo).next_down(),
            hi: (self.hi + o.hi).next_up(),
        }
    }

    fn sub(self, o: Iv) -> Iv {
        Iv {
            lo: (self.lo - o.hi).next_down(),
            hi: (self.hi - o.lo).next_up(),
        }
    }

    fn mul(self, o: Iv) -> Iv {
        let p = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        let mut lo = p[0];
        let mut hi = p[0];
        for &v in &p[1..] {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Iv {
            lo: lo.next_down(),
            hi: hi.next_up(),
        }
    }

    fn sign(self) -> Option<i8> {
        if self.lo > 0.0 {
            Some(1)
        } else if self.hi < 0.0 {
            Some(-1)
        } else if self.lo == 0.0 && self.hi == 0.0 {
            Some(0)
        } else {
            None
        }
    }
}

struct Iv3([Iv; 3]);

impl Iv3 {
    fn diff(a: Vec3, p: Vec3) -> Iv3 {
        Iv3([
            Iv::exact(a.x).sub(Iv::exact(p.x)),
            Iv::exact(a.y).sub(Iv::exact(p.y)),
            Iv::exact(a.z).sub(Iv::exact(p.z)),
        ])
    }

    fn norm2(&self) -> Iv {
        self.0[0]
            .mul(self.0[0])
            .add(self.0[1].mul(self.0[1]))
            .add(self.0[2].mul(self.0[2]))
    }

    fn cross(&self, o: &Iv3) -> Iv3 {
        let (u, v) = (&self.0, &o.0);
        Iv3([
            u[1].mul(v[2]).sub(u[2].mul(v[1])),
            u[2].mul(v[0]).sub(u[0].mul(v[2])),
            u[0].mul(v[1]).sub(u[1].mul(v[0])),
        ])
    }

    fn scale(&self, s: Iv) -> Iv3 {
        Iv3([self.0[0].mul(s), self.0[1].mul(s), self.0[2].mul(s)])
    }

    fn add(&self, o: &Iv3) -> Iv3 {
        Iv3([
            self.0[0].add(o.0[0]),
            self.0[1].add(o.0[1]),
            self.0[2].add(o.0[2]),
        ])
    }

    fn sub(&self, o: &Iv3) -> Iv3 {
        Iv3([
            self.0[0].sub(o.0[0]),
            self.0[1].sub(o.0[1]),
            self.0[2].sub(o.0[2]),
        ])
    }

    fn dot(&self, o: &Iv3) -> Iv {
        self.0[0]
            .mul(o.0[0])
            .add(self.0[1].mul(o.0[1]))
            .add(self.0[2].mul(o.0[2]))
    }
}
