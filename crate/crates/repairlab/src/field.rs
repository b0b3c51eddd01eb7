//! Exact arithmetic for prime fields, simple extensions with a prescribed
//! degree, and multiplicative subgroup / coset enumeration.
//!
//! Elements are coefficient vectors over the prime base field in the power
//! basis of the extension generator, stored low-degree-first. A prime-field
//! element is the degenerate length-1 case, so "does this element lie in the
//! base field" is a trivial check on the tail coefficients.

use smallvec::{smallvec, SmallVec};
use thiserror::Error;

pub type Coeffs = SmallVec<[u64; 4]>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("polynomial is not irreducible over GF({0})")]
    NotIrreducible(u64),
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("subgroup order {order} does not divide {group} (the multiplicative group order)")]
    OrderDoesNotDivide { order: u128, group: u128 },
    #[error("only {available} cosets available, {requested} requested")]
    NotEnoughCosets { available: u128, requested: u128 },
}

/// A field element: coefficients over the prime base, low-degree-first.
/// Length always equals the degree of its field over the prime base.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Elem(pub(crate) Coeffs);

impl Elem {
    pub fn coeffs(&self) -> &[u64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeField {
    p: u64,
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub fn smallest_prime_at_least(n: u64) -> u64 {
    let mut p = n.max(2);
    while !is_prime(p) {
        p += 1;
    }
    p
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self, FieldError> {
        if is_prime(p) {
            Ok(PrimeField { p })
        } else {
            Err(FieldError::NotPrime(p))
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    fn mul(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.p as u128) as u64
    }

    fn inv(&self, a: u64) -> u64 {
        debug_assert!(a != 0);
        // Fermat; p is small.
        let mut result = 1u64;
        let mut base = a % self.p;
        let mut e = self.p - 2;
        while e > 0 {
            if e & 1 == 1 {
                result = self.mul(result, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        result
    }
}

// --- polynomial helpers over a prime field (dense, low-degree-first) ---

fn poly_trim(v: &mut Vec<u64>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

fn poly_rem(f: &PrimeField, a: &[u64], m: &[u64]) -> Vec<u64> {
    // m must be monic.
    let mut r = a.to_vec();
    poly_trim(&mut r);
    let dm = m.len() - 1;
    while r.len() > dm {
        let lead = *r.last().unwrap();
        let shift = r.len() - 1 - dm;
        if lead != 0 {
            for j in 0..dm {
                let t = f.mul(lead, m[j]);
                r[shift + j] = f.sub(r[shift + j], t);
            }
        }
        r.pop();
        poly_trim(&mut r);
    }
    r
}

fn poly_mulmod(f: &PrimeField, a: &[u64], b: &[u64], m: &[u64]) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut prod = vec![0u64; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            prod[i + j] = f.add(prod[i + j], f.mul(ai, bj));
        }
    }
    poly_rem(f, &prod, m)
}

fn poly_powmod(f: &PrimeField, base: &[u64], mut e: u128, m: &[u64]) -> Vec<u64> {
    let mut result = vec![1u64];
    let mut b = poly_rem(f, base, m);
    while e > 0 {
        if e & 1 == 1 {
            result = poly_mulmod(f, &result, &b, m);
        }
        b = poly_mulmod(f, &b, &b, m);
        e >>= 1;
    }
    result
}

fn poly_gcd(f: &PrimeField, a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    poly_trim(&mut a);
    poly_trim(&mut b);
    while !b.is_empty() {
        // make b monic for the remainder step
        let lead_inv = f.inv(*b.last().unwrap());
        let monic: Vec<u64> = b.iter().map(|&c| f.mul(c, lead_inv)).collect();
        let r = poly_rem(f, &a, &monic);
        a = b;
        b = r;
    }
    a
}

fn prime_factors(mut n: u128) -> Vec<u128> {
    let mut out = Vec::new();
    let mut d = 2u128;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Rabin's irreducibility test for a monic polynomial over GF(p).
fn is_irreducible(f: &PrimeField, m: &[u64]) -> bool {
    let d = m.len() - 1;
    if d == 0 {
        return false;
    }
    if d == 1 {
        return true;
    }
    let p = f.p() as u128;
    let x = vec![0u64, 1];
    // x^(p^d) == x (mod m)
    let mut q: u128 = 1;
    for _ in 0..d {
        q = q.checked_mul(p).expect("field order overflow");
    }
    let xq = poly_powmod(f, &x, q, m);
    let mut diff = xq.clone();
    diff.resize(diff.len().max(2), 0);
    diff[1] = f.sub(diff[1], 1);
    poly_trim(&mut diff);
    if !diff.is_empty() {
        return false;
    }
    // gcd(x^(p^(d/t)) - x, m) == 1 for every prime t | d
    for t in prime_factors(d as u128) {
        let e = d as u128 / t;
        let mut qe: u128 = 1;
        for _ in 0..e {
            qe *= p;
        }
        let xe = poly_powmod(f, &x, qe, m);
        let mut diff = xe.clone();
        diff.resize(diff.len().max(2), 0);
        diff[1] = f.sub(diff[1], 1);
        poly_trim(&mut diff);
        let g = poly_gcd(f, &diff, m);
        if g.len() != 1 {
            return false;
        }
    }
    true
}

/// Finds the smallest monic irreducible polynomial of the given degree,
/// where "smallest" orders candidates by the integer encoding
/// Σ c_i·p^i of the non-leading coefficients (c_0 varies fastest).
/// Deterministic across runs; the scan terminates quickly because monic
/// irreducibles of every degree are plentiful over a finite field.
pub fn find_irreducible(base: &PrimeField, degree: usize) -> Vec<u64> {
    assert!(degree >= 1);
    let p = base.p();
    let mut coeffs = vec![0u64; degree];
    loop {
        let mut m = coeffs.clone();
        m.push(1); // monic
        if is_irreducible(base, &m) {
            return m;
        }
        let mut pos = 0;
        loop {
            assert!(
                pos < degree,
                "an irreducible polynomial of every degree exists over GF(p)"
            );
            coeffs[pos] += 1;
            if coeffs[pos] < p {
                break;
            }
            coeffs[pos] = 0;
            pos += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtField {
    base: PrimeField,
    /// Monic irreducible modulus, low-degree-first, length degree + 1.
    modulus: Vec<u64>,
    degree: usize,
}

impl ExtField {
    pub fn new(base: PrimeField, modulus: Vec<u64>) -> Result<Self, FieldError> {
        assert!(modulus.len() >= 2 && *modulus.last().unwrap() == 1, "modulus must be monic");
        if !is_irreducible(&base, &modulus) {
            return Err(FieldError::NotIrreducible(base.p()));
        }
        let degree = modulus.len() - 1;
        Ok(ExtField { base, modulus, degree })
    }

    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }
}

/// A concrete finite field: either GF(p) or GF(p^m) = GF(p)[X]/(m(X)).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Field {
    Prime(PrimeField),
    Ext(ExtField),
}

impl Field {
    pub fn prime(p: u64) -> Result<Self, FieldError> {
        Ok(Field::Prime(PrimeField::new(p)?))
    }

    pub fn p(&self) -> u64 {
        match self {
            Field::Prime(f) => f.p(),
            Field::Ext(f) => f.base.p(),
        }
    }

    pub fn base(&self) -> PrimeField {
        match self {
            Field::Prime(f) => f.clone(),
            Field::Ext(f) => f.base.clone(),
        }
    }

    /// Degree over the prime base; 1 for a prime field.
    pub fn degree(&self) -> usize {
        match self {
            Field::Prime(_) => 1,
            Field::Ext(f) => f.degree,
        }
    }

    /// |F| = p^degree.
    pub fn order(&self) -> u128 {
        let p = self.p() as u128;
        let mut q = 1u128;
        for _ in 0..self.degree() {
            q = q.checked_mul(p).expect("field order overflow");
        }
        q
    }

    pub fn zero(&self) -> Elem {
        Elem(smallvec![0; self.degree()])
    }

    pub fn one(&self) -> Elem {
        self.embed(1)
    }

    /// Embeds a base-field residue as a constant.
    pub fn embed(&self, a: u64) -> Elem {
        let mut c: Coeffs = smallvec![0; self.degree()];
        c[0] = a % self.p();
        Elem(c)
    }

    pub fn elem(&self, coeffs: &[u64]) -> Elem {
        let mut c: Coeffs = smallvec![0; self.degree()];
        for (i, &v) in coeffs.iter().enumerate() {
            assert!(i < self.degree());
            c[i] = v % self.p();
        }
        Elem(c)
    }

    /// The generator of the extension (the residue class of X); for a prime
    /// field this is just 0 since there is no proper generator.
    pub fn gen(&self) -> Elem {
        match self {
            Field::Prime(_) => self.zero(),
            Field::Ext(f) => {
                if f.degree == 1 {
                    // X == -c0 mod (X + c0)
                    let p = f.base.p();
                    self.embed((p - f.modulus[0] % p) % p)
                } else {
                    let mut c: Coeffs = smallvec![0; f.degree];
                    c[1] = 1;
                    Elem(c)
                }
            }
        }
    }

    /// Canonical enumeration: index digits in base p, coefficient 0 least
    /// significant. For a prime field, `elem_at(i) = i`.
    pub fn elem_at(&self, mut idx: u128) -> Elem {
        let p = self.p() as u128;
        let mut c: Coeffs = smallvec![0; self.degree()];
        for slot in c.iter_mut() {
            *slot = (idx % p) as u64;
            idx /= p;
        }
        assert_eq!(idx, 0, "index out of range for field of order {}", self.order());
        Elem(c)
    }

    pub fn is_zero(&self, a: &Elem) -> bool {
        a.0.iter().all(|&c| c == 0)
    }

    /// True iff the element lies in the image of the base-field embedding.
    pub fn in_base(&self, a: &Elem) -> bool {
        a.0.iter().skip(1).all(|&c| c == 0)
    }

    pub fn add(&self, a: &Elem, b: &Elem) -> Elem {
        let f = self.base();
        Elem(a.0.iter().zip(&b.0).map(|(&x, &y)| f.add(x, y)).collect())
    }

    pub fn sub(&self, a: &Elem, b: &Elem) -> Elem {
        let f = self.base();
        Elem(a.0.iter().zip(&b.0).map(|(&x, &y)| f.sub(x, y)).collect())
    }

    pub fn neg(&self, a: &Elem) -> Elem {
        let f = self.base();
        Elem(a.0.iter().map(|&x| f.sub(0, x)).collect())
    }

    pub fn mul(&self, a: &Elem, b: &Elem) -> Elem {
        match self {
            Field::Prime(f) => Elem(smallvec![f.mul(a.0[0], b.0[0])]),
            Field::Ext(f) => {
                let base = &f.base;
                let m = f.degree;
                let mut prod = vec![0u64; 2 * m - 1];
                for (i, &ai) in a.0.iter().enumerate() {
                    if ai == 0 {
                        continue;
                    }
                    for (j, &bj) in b.0.iter().enumerate() {
                        prod[i + j] = base.add(prod[i + j], base.mul(ai, bj));
                    }
                }
                // reduce by the monic modulus
                for i in (m..2 * m - 1).rev() {
                    let t = prod[i];
                    if t != 0 {
                        for j in 0..m {
                            let sub = base.mul(t, f.modulus[j]);
                            prod[i - m + j] = base.sub(prod[i - m + j], sub);
                        }
                        prod[i] = 0;
                    }
                }
                Elem(prod[..m].iter().copied().collect())
            }
        }
    }

    pub fn inv(&self, a: &Elem) -> Result<Elem, FieldError> {
        if self.is_zero(a) {
            return Err(FieldError::ZeroInverse);
        }
        match self {
            Field::Prime(f) => Ok(Elem(smallvec![f.inv(a.0[0])])),
            Field::Ext(f) => {
                // extended Euclid between a (as a polynomial) and the modulus
                let base = &f.base;
                let mut r0 = f.modulus.clone();
                let mut r1: Vec<u64> = a.0.to_vec();
                poly_trim(&mut r1);
                let mut t0: Vec<u64> = Vec::new();
                let mut t1: Vec<u64> = vec![1];
                while !r1.is_empty() {
                    // divide r0 by r1
                    let lead_inv = base.inv(*r1.last().unwrap());
                    let mut q = vec![0u64; r0.len().saturating_sub(r1.len()) + 1];
                    let mut rem = r0.clone();
                    while rem.len() >= r1.len() && !rem.is_empty() {
                        let coef = base.mul(*rem.last().unwrap(), lead_inv);
                        let shift = rem.len() - r1.len();
                        if coef != 0 {
                            q[shift] = base.add(q[shift], coef);
                            for (j, &c) in r1.iter().enumerate() {
                                rem[shift + j] = base.sub(rem[shift + j], base.mul(coef, c));
                            }
                        }
                        rem.pop();
                        poly_trim(&mut rem);
                    }
                    // t2 = t0 - q * t1
                    let mut qt = vec![0u64; q.len() + t1.len()];
                    for (i, &qi) in q.iter().enumerate() {
                        if qi == 0 {
                            continue;
                        }
                        for (j, &tj) in t1.iter().enumerate() {
                            qt[i + j] = base.add(qt[i + j], base.mul(qi, tj));
                        }
                    }
                    let n = t0.len().max(qt.len());
                    let mut t2 = vec![0u64; n];
                    for i in 0..n {
                        let a = t0.get(i).copied().unwrap_or(0);
                        let b = qt.get(i).copied().unwrap_or(0);
                        t2[i] = base.sub(a, b);
                    }
                    poly_trim(&mut t2);
                    r0 = r1;
                    r1 = rem;
                    t0 = t1;
                    t1 = t2;
                }
                // r0 is the gcd, a nonzero constant since the modulus is irreducible
                debug_assert_eq!(r0.len(), 1);
                let scale = base.inv(r0[0]);
                let mut c: Coeffs = smallvec![0; f.degree];
                for (i, &v) in t0.iter().enumerate() {
                    c[i] = base.mul(v, scale);
                }
                Ok(Elem(c))
            }
        }
    }

    pub fn pow(&self, a: &Elem, mut e: u128) -> Elem {
        let mut result = self.one();
        let mut b = a.clone();
        while e > 0 {
            if e & 1 == 1 {
                result = self.mul(&result, &b);
            }
            b = self.mul(&b, &b);
            e >>= 1;
        }
        result
    }

    /// Multiplicative order of a nonzero element.
    pub fn mult_order(&self, a: &Elem) -> u128 {
        assert!(!self.is_zero(a));
        let group = self.order() - 1;
        let mut ord = group;
        for f in prime_factors(group) {
            while ord % f == 0 && self.is_zero(&self.sub(&self.pow(a, ord / f), &self.one())) {
                ord /= f;
            }
        }
        ord
    }

    /// Smallest primitive element in canonical enumeration order.
    pub fn primitive_element(&self) -> Elem {
        let group = self.order() - 1;
        let factors = prime_factors(group);
        for idx in 2..self.order() {
            let g = self.elem_at(idx);
            let primitive = factors
                .iter()
                .all(|&f| !self.is_zero(&self.sub(&self.pow(&g, group / f), &self.one())));
            if primitive {
                return g;
            }
        }
        // order 2: the only nonzero element is 1
        self.one()
    }
}

/// Serializable descriptor: `{p, tower: [degree, modulus coefficients low-to-high]}`.
pub fn field_descriptor(field: &Field) -> serde_json::Value {
    match field {
        Field::Prime(f) => serde_json::json!({ "p": f.p() }),
        Field::Ext(f) => serde_json::json!({
            "p": f.base.p(),
            "tower": [f.degree, f.modulus],
        }),
    }
}

/// The tower L ⊂ B = L(ψ) used by the small-sub-packetization constructions,
/// together with the n distinct nonzero multipliers drawn from L.
#[derive(Debug, Clone)]
pub struct FieldTower {
    pub l_field: PrimeField,
    pub b_field: Field,
    pub psi: Elem,
    pub lambdas: Vec<Elem>,
}

/// Builds the tower for an (n, r, ℓ) instance: L = GF(p) for the smallest
/// prime p ≥ n + 1, B = L(ψ) of degree exactly (r-1)ℓ + 1, and λ_i = i.
pub fn make_tower(n: usize, r: usize, ell: usize) -> FieldTower {
    assert!(n >= 2 && r >= 1 && ell >= 1);
    let p = smallest_prime_at_least(n as u64 + 1);
    let l_field = PrimeField::new(p).unwrap();
    let degree = (r - 1) * ell + 1;
    let modulus = find_irreducible(&l_field, degree);
    let b_field = Field::Ext(ExtField::new(l_field.clone(), modulus).unwrap());
    let psi = b_field.gen();
    let lambdas = (1..=n as u64).map(|i| b_field.embed(i)).collect();
    FieldTower { l_field, b_field, psi, lambdas }
}

/// A multiplicative subgroup E of F* together with representatives of
/// pairwise distinct cosets.
#[derive(Debug, Clone)]
pub struct SubgroupCosets {
    pub field: Field,
    pub subgroup_order: u128,
    pub generator: Elem,
    pub coset_reps: Vec<Elem>,
}

impl SubgroupCosets {
    pub fn contains(&self, x: &Elem) -> bool {
        let f = &self.field;
        !f.is_zero(x) && f.is_zero(&f.sub(&f.pow(x, self.subgroup_order), &f.one()))
    }

    /// The elements of E in the fixed order g^0, g^1, ..., g^{|E|-1}.
    pub fn elements(&self) -> Vec<Elem> {
        let f = &self.field;
        let mut out = Vec::with_capacity(self.subgroup_order as usize);
        let mut cur = f.one();
        for _ in 0..self.subgroup_order {
            out.push(cur.clone());
            cur = f.mul(&cur, &self.generator);
        }
        out
    }
}

/// Returns the subgroup of the given order with `count` coset representatives,
/// deterministically: the generator is g^((|F|-1)/order) for the smallest
/// primitive g, and reps are taken from g^0, g^1, ... in enumeration order.
pub fn subgroup_with_cosets(
    field: &Field,
    order: u128,
    count: usize,
) -> Result<SubgroupCosets, FieldError> {
    let group = field.order() - 1;
    if order == 0 || group % order != 0 {
        return Err(FieldError::OrderDoesNotDivide { order, group });
    }
    let available = group / order;
    if available < count as u128 {
        return Err(FieldError::NotEnoughCosets { available, requested: count as u128 });
    }
    let g = field.primitive_element();
    let generator = field.pow(&g, group / order);
    let subgroup = SubgroupCosets {
        field: field.clone(),
        subgroup_order: order,
        generator: generator.clone(),
        coset_reps: Vec::new(),
    };
    let mut reps: Vec<Elem> = Vec::with_capacity(count);
    let mut cand = field.one();
    while reps.len() < count {
        let fresh = reps.iter().all(|r| {
            let ratio = field.mul(&cand, &field.inv(r).unwrap());
            !subgroup.contains(&ratio)
        });
        if fresh {
            reps.push(cand.clone());
        }
        cand = field.mul(&cand, &g);
    }
    Ok(SubgroupCosets { coset_reps: reps, ..subgroup })
}
