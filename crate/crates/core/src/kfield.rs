//! Exact arithmetic in `K = Q(sqrt disc)` and in the graded elements
//! `gamma / sqrt d` of the principalization field.

use std::fmt;

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedMul, CheckedSub, One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadratic::{Discriminant, QuadForm};

pub type Rational = Ratio<i128>;

/// `u + v sqrt(disc)` with rational `u`, `v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KNumber {
    pub u: Rational,
    pub v: Rational,
}

impl KNumber {
    pub fn new(u: Rational, v: Rational) -> Self {
        KNumber { u, v }
    }

    pub fn from_int(n: i128) -> Self {
        KNumber { u: Rational::from_integer(n), v: Rational::zero() }
    }

    /// `(x + y sqrt(disc)) / 2`.
    pub fn from_halves(x: i128, y: i128) -> Self {
        KNumber { u: Rational::new(x, 2), v: Rational::new(y, 2) }
    }

    pub fn zero() -> Self {
        KNumber::from_int(0)
    }

    pub fn one() -> Self {
        KNumber::from_int(1)
    }

    pub fn is_zero(&self) -> bool {
        self.u.is_zero() && self.v.is_zero()
    }

    /// Rational integer value, when `v = 0` and `u` is integral.
    pub fn as_integer(&self) -> Option<i128> {
        (self.v.is_zero() && self.u.is_integer()).then(|| self.u.to_integer())
    }

    pub fn conj(&self) -> Self {
        KNumber { u: self.u, v: -self.v }
    }

    pub fn neg(&self) -> Self {
        KNumber { u: -self.u, v: -self.v }
    }

    pub fn checked_add(&self, other: &Self) -> Option<Self> {
        Some(KNumber { u: self.u.checked_add(&other.u)?, v: self.v.checked_add(&other.v)? })
    }

    pub fn scale(&self, r: Rational) -> Option<Self> {
        Some(KNumber { u: self.u.checked_mul(&r)?, v: self.v.checked_mul(&r)? })
    }

    pub fn trace(&self) -> Rational {
        self.u * 2
    }
}

impl fmt::Display for KNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.v.is_zero() {
            return write!(f, "{}", self.u);
        }
        let v = if self.v.abs().is_one() { String::new() } else { format!("{}*", self.v.abs()) };
        let sign = if self.v < Rational::zero() { "-" } else { "+" };
        if self.u.is_zero() {
            let lead = if sign == "-" { "-" } else { "" };
            write!(f, "{lead}{v}sqrtD")
        } else {
            write!(f, "{} {sign} {v}sqrtD", self.u)
        }
    }
}

/// Arithmetic context for a fixed discriminant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadField {
    disc: Discriminant,
}

impl QuadField {
    pub fn new(disc: Discriminant) -> Self {
        QuadField { disc }
    }

    pub fn disc(&self) -> Discriminant {
        self.disc
    }

    fn d(&self) -> Rational {
        Rational::from_integer(self.disc.value() as i128)
    }

    pub fn checked_mul(&self, x: &KNumber, y: &KNumber) -> Option<KNumber> {
        let dv = self.d().checked_mul(&x.v)?.checked_mul(&y.v)?;
        Some(KNumber {
            u: x.u.checked_mul(&y.u)?.checked_add(&dv)?,
            v: x.u.checked_mul(&y.v)?.checked_add(&x.v.checked_mul(&y.u)?)?,
        })
    }

    /// Exact product. Panics on `i128` overflow; see [`QuadField::checked_mul`].
    pub fn mul(&self, x: &KNumber, y: &KNumber) -> KNumber {
        self.checked_mul(x, y).expect("KNumber product overflows i128")
    }

    pub fn checked_norm(&self, x: &KNumber) -> Option<Rational> {
        x.u.checked_mul(&x.u)?.checked_sub(&self.d().checked_mul(&x.v)?.checked_mul(&x.v)?)
    }

    /// `u^2 - disc v^2`.
    pub fn norm(&self, x: &KNumber) -> Rational {
        self.checked_norm(x).expect("norm overflows i128")
    }

    /// `x / y` for nonzero `y`.
    pub fn checked_div(&self, x: &KNumber, y: &KNumber) -> Option<KNumber> {
        let n = self.checked_norm(y)?;
        if n.is_zero() {
            return None;
        }
        self.checked_mul(x, &y.conj())?.scale(n.recip())
    }

    /// In `O_K`: `2u`, `2v` integral with `2u = 2v disc (mod 2)`.
    pub fn is_integral(&self, x: &KNumber) -> bool {
        let (x2, y2) = (x.u * 2, x.v * 2);
        x2.is_integer() && y2.is_integer() && (x2.to_integer() - y2.to_integer() * self.disc.value() as i128) % 2 == 0
    }

    pub fn is_unit(&self, x: &KNumber) -> bool {
        self.is_integral(x) && self.checked_norm(x) == Some(Rational::one())
    }

    /// The finite unit group of `O_K`.
    pub fn units(&self) -> Vec<KNumber> {
        let half = Rational::new(1, 2);
        let mut units = vec![KNumber::one(), KNumber::from_int(-1)];
        match self.disc.value() {
            // i = sqrt(-4) / 2
            -4 => {
                let i = KNumber::new(Rational::zero(), half);
                units.extend([i, i.neg()]);
            }
            // omega = (-1 + sqrt(-3)) / 2 and omega^2
            -3 => {
                let w = KNumber::new(-half, half);
                let w2 = KNumber::new(-half, -half);
                units.extend([w, w.neg(), w2, w2.neg()]);
            }
            _ => {}
        }
        units
    }

    /// Unit `e` with `x = e y`, if `x` and `y` are associates.
    pub fn unit_ratio(&self, x: &KNumber, y: &KNumber) -> Option<KNumber> {
        if y.is_zero() {
            return None;
        }
        self.units().into_iter().find(|e| self.checked_mul(e, y).as_ref() == Some(x))
    }

    /// Exhaustive unit test: `x = e y` for some unit `e`.
    pub fn associates(&self, x: &KNumber, y: &KNumber) -> bool {
        if x.is_zero() || y.is_zero() {
            return x.is_zero() && y.is_zero();
        }
        self.unit_ratio(x, y).is_some()
    }

    /// `sqrt m` with `K = Q(sqrt m)`, as `sqrt(disc) / f` where `disc = f^2 m`.
    pub fn sqrt_radicand(&self) -> KNumber {
        let f = if self.disc.value() % 4 == 0 { 2 } else { 1 };
        KNumber::new(Rational::zero(), Rational::new(1, f))
    }
}

/// `gamma / sqrt d` with `d` squarefree; `d = 1` means the element lies in `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GradedRepr", into = "GradedRepr")]
pub struct GradedNumber {
    gamma: KNumber,
    d: u64,
}

#[derive(Serialize, Deserialize)]
struct GradedRepr {
    u: Rational,
    v: Rational,
    d: u64,
}

impl From<GradedNumber> for GradedRepr {
    fn from(g: GradedNumber) -> Self {
        GradedRepr { u: g.gamma.u, v: g.gamma.v, d: g.d }
    }
}

impl TryFrom<GradedRepr> for GradedNumber {
    type Error = Error;

    fn try_from(r: GradedRepr) -> Result<Self> {
        GradedNumber::new(KNumber::new(r.u, r.v), r.d)
    }
}

impl GradedNumber {
    pub fn new(gamma: KNumber, d: u64) -> Result<Self> {
        if !crate::arith::is_squarefree(d) {
            return Err(Error::InvalidInput(format!("radicand {d} is not squarefree")));
        }
        Ok(GradedNumber { gamma, d })
    }

    pub fn in_k(x: KNumber) -> Self {
        GradedNumber { gamma: x, d: 1 }
    }

    pub fn gamma(&self) -> &KNumber {
        &self.gamma
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn as_k(&self) -> Option<KNumber> {
        (self.d == 1).then_some(self.gamma)
    }

    /// Image under the generator of `Gal(K(sqrt d)/K)`.
    pub fn sigma(&self) -> Self {
        if self.d == 1 {
            *self
        } else {
            GradedNumber { gamma: self.gamma.neg(), d: self.d }
        }
    }

    /// `N_{K(sqrt d)/K} = -gamma^2 / d` for `d > 1`.
    pub fn relative_norm(&self, k: &QuadField) -> Option<KNumber> {
        if self.d == 1 {
            return None;
        }
        k.checked_mul(&self.gamma, &self.gamma)?.scale(Rational::new(-1, self.d as i128))
    }

    /// Integral over `O_K`: trace is zero, so the relative norm decides (or `gamma` itself when `d = 1`).
    pub fn is_integral(&self, k: &QuadField) -> bool {
        match self.relative_norm(k) {
            Some(n) => k.is_integral(&n),
            None => k.is_integral(&self.gamma),
        }
    }
}

impl fmt::Display for GradedNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.d == 1 {
            write!(f, "{}", self.gamma)
        } else {
            write!(f, "({}) / sqrt({})", self.gamma, self.d)
        }
    }
}

pub fn checked_graded_mul(k: &QuadField, x: &GradedNumber, y: &GradedNumber) -> Option<GradedNumber> {
    let s = num_integer::gcd(x.d, y.d);
    let d = (x.d / s) * (y.d / s);
    let gamma = k.checked_mul(&x.gamma, &y.gamma)?.scale(Rational::new(1, s as i128))?;
    Some(GradedNumber { gamma, d })
}

/// `(g1 / sqrt d1)(g2 / sqrt d2) = (g1 g2 / s) / sqrt d` where `d1 d2 = s^2 d`.
pub fn graded_mul(k: &QuadField, x: &GradedNumber, y: &GradedNumber) -> GradedNumber {
    checked_graded_mul(k, x, y).expect("graded product overflows i128")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

/// Linear factor `sqrt(a) x + (b +- sqrt disc) / (2 sqrt a) y` of an ambiguous form.
pub fn beta_of(k: &QuadField, f: &QuadForm, x: i64, y: i64, sign: Sign) -> Result<GradedNumber> {
    if !f.is_ambiguous() {
        return Err(Error::NotAmbiguous(f.a, f.b, f.c));
    }
    if f.disc() != k.disc().value() as i128 || f.a <= 0 {
        return Err(Error::InvalidForm(format!("{f} does not have discriminant {}", k.disc())));
    }
    let (a, b, x, y) = (f.a as i128, f.b as i128, x as i128, y as i128);
    let y_part = match sign {
        Sign::Plus => y,
        Sign::Minus => -y,
    };
    let gamma = KNumber::from_halves(2 * a * x + b * y, y_part);
    // sqrt a = s sqrt a0 with a0 squarefree
    let (a0, s) = crate::arith::square_split(f.a);
    let gamma = gamma.scale(Rational::new(1, s as i128)).ok_or_else(|| Error::TooLarge("beta overflows".into()))?;
    GradedNumber::new(gamma, a0 as u64)
}

/// `beta+ beta-` equals the rational integer `f(x, y)`.
pub fn beta_pair_product_is_p(k: &QuadField, f: &QuadForm, x: i64, y: i64) -> bool {
    let (Ok(bp), Ok(bm)) = (beta_of(k, f, x, y, Sign::Plus), beta_of(k, f, x, y, Sign::Minus)) else {
        return false;
    };
    checked_graded_mul(k, &bp, &bm) == Some(GradedNumber::in_k(KNumber::from_int(f.eval(x, y))))
}

/// Element of `K` generating the same `O_L` ideal as `g`, when `g`'s radicand is
/// `1` or `|m|` (`K = Q(sqrt m)`). In the latter case the two differ by the
/// root of unity `sqrt(-1)`.
pub fn descend_to_k(k: &QuadField, g: &GradedNumber) -> Option<KNumber> {
    if g.d == 1 {
        return Some(g.gamma);
    }
    let m = k.disc().radicand();
    if g.d == m.unsigned_abs() {
        // gamma / sqrt(m) = gamma sqrt(m) / m
        let root = k.sqrt_radicand();
        return k.checked_mul(&g.gamma, &root)?.scale(Rational::new(1, m as i128));
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadratic::{check_fundamental, represent, FormClassGroup};
    use proptest::prelude::*;

    fn field(d: i64) -> QuadField {
        QuadField::new(check_fundamental(d).unwrap())
    }

    fn r(n: i128, d: i128) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn products() {
        let k = field(-87);
        let a = KNumber::from_halves(3, 1);
        let b = KNumber::from_halves(3, -1);
        assert_eq!(k.mul(&a, &b), KNumber::from_int(24));
        let x = KNumber::new(r(7, 3), r(-2, 5));
        assert_eq!(k.mul(&KNumber::one(), &x), x);
        // 2 + sqrt(-5) = 2 + sqrt(-20)/2
        let k20 = field(-20);
        let p = KNumber::new(r(2, 1), r(1, 2));
        assert_eq!(k20.mul(&p, &p.conj()), KNumber::from_int(9));
        assert_eq!(k20.norm(&p), r(9, 1));
    }

    #[test]
    fn integrality() {
        let k87 = field(-87);
        assert!(k87.is_integral(&KNumber::from_halves(3, 1)));
        assert!(!k87.is_integral(&KNumber::from_halves(3, 2)));
        assert!(!k87.is_integral(&KNumber::new(r(1, 3), r(0, 1))));
        let k4 = field(-4);
        // sqrt(-1) = sqrt(-4)/2 is integral although v is a half-integer
        assert!(k4.is_integral(&KNumber::new(r(0, 1), r(1, 2))));
        assert!(!k4.is_integral(&KNumber::new(r(1, 2), r(1, 2))));
        let k84 = field(-84);
        assert!(k84.is_integral(&KNumber::new(r(-2, 1), r(-13, 2))));
    }

    #[test]
    fn unit_groups() {
        for (d, n) in [(-3, 6), (-4, 4), (-7, 2), (-20, 2), (-87, 2)] {
            let k = field(d);
            let units = k.units();
            assert_eq!(units.len(), n);
            for e in &units {
                assert!(k.is_unit(e));
                for f in &units {
                    assert!(units.contains(&k.mul(e, f)));
                }
            }
        }
    }

    /// Units by brute force: integral elements of norm 1 with small components.
    #[test]
    fn unit_census() {
        for d in [-3i64, -4, -7, -8, -11, -15, -20, -23] {
            let k = field(d);
            let mut found = 0;
            for x in -6i128..=6 {
                for y in -6i128..=6 {
                    let e = KNumber::from_halves(x, y);
                    if k.is_integral(&e) && k.norm(&e) == Rational::one() {
                        found += 1;
                        assert!(k.units().contains(&e));
                    }
                }
            }
            assert_eq!(found, k.units().len(), "{d}");
        }
    }

    #[test]
    fn associate_examples() {
        let k20 = field(-20);
        let x = KNumber::new(r(2, 1), r(1, 2));
        assert!(k20.associates(&x, &x.neg()));
        assert!(!k20.associates(&x, &x.conj()));
        let k4 = field(-4);
        let one_plus_i = KNumber::new(r(1, 1), r(1, 2));
        assert!(k4.associates(&one_plus_i, &one_plus_i.conj()));
        assert_eq!(k4.norm(&one_plus_i), r(2, 1));
    }

    #[test]
    fn graded_examples() {
        let k = field(-87);
        let root3 = GradedNumber::new(KNumber::from_int(3), 3).unwrap();
        assert_eq!(graded_mul(&k, &root3, &root3), GradedNumber::in_k(KNumber::from_int(3)));
        let x = GradedNumber::new(KNumber::from_halves(5, 1), 6).unwrap();
        assert_eq!(graded_mul(&k, &x, &GradedNumber::in_k(KNumber::one())), x);

        let q1 = QuadForm::new(3, 3, 8);
        let b1 = beta_of(&k, &q1, 1, 0, Sign::Plus).unwrap();
        assert_eq!(b1, root3);
        let b2p = beta_of(&k, &q1, 1, 2, Sign::Plus).unwrap();
        let b2m = beta_of(&k, &q1, 1, 2, Sign::Minus).unwrap();
        assert_eq!(graded_mul(&k, &b2p, &b2m), GradedNumber::in_k(KNumber::from_int(41)));
        // beta_1 beta_2+ = 6 + sqrt(-87)
        assert_eq!(graded_mul(&k, &b1, &b2p).as_k(), Some(KNumber::new(r(6, 1), r(1, 1))));
        assert!(matches!(beta_of(&k, &QuadForm::new(2, 1, 11), 1, 0, Sign::Plus), Err(Error::NotAmbiguous(2, 1, 11))));
    }

    #[test]
    fn beta_examples_minus_84() {
        let k = field(-84);
        // 2 sqrt 3 +- sqrt(-7) = (12 +- sqrt(-84)) / (2 sqrt 3) = (6 +- sqrt(-84)/2) / sqrt 3
        let q2 = QuadForm::new(3, 0, 7);
        let bp = beta_of(&k, &q2, 2, 1, Sign::Plus).unwrap();
        assert_eq!(bp, GradedNumber::new(KNumber::new(r(6, 1), r(1, 2)), 3).unwrap());
        assert!(beta_pair_product_is_p(&k, &q2, 2, 1));
        assert!(beta_pair_product_is_p(&k, &QuadForm::new(2, 2, 11), 0, 1));
        assert!(beta_pair_product_is_p(&k, &QuadForm::new(14, 14, 5), 1, -3));
        assert!(beta_pair_product_is_p(&field(-87), &QuadForm::new(3, 3, 8), 1, 0));
        // principal form: beta lies in K
        let k87 = field(-87);
        let alpha = beta_of(&k87, &QuadForm::new(1, 1, 22), 1, 2, Sign::Plus).unwrap();
        assert_eq!(alpha.d(), 1);
    }

    #[test]
    fn descent_through_radicand() {
        let k = field(-84);
        let b1 = beta_of(&k, &QuadForm::new(2, 2, 11), 0, 1, Sign::Plus).unwrap();
        let b2 = beta_of(&k, &QuadForm::new(3, 0, 7), 2, 1, Sign::Plus).unwrap();
        let b3 = beta_of(&k, &QuadForm::new(14, 14, 5), 1, -3, Sign::Plus).unwrap();
        let prod = graded_mul(&k, &graded_mul(&k, &b1, &b2), &b3);
        assert_eq!(prod.d(), 21);
        let alpha = descend_to_k(&k, &prod).unwrap();
        assert!(k.is_integral(&alpha));
        assert_eq!(k.norm(&alpha), r(11 * 19 * 17, 1));
        assert_eq!(alpha, KNumber::new(r(-2, 1), r(-13, 2)));
        assert_eq!(descend_to_k(&k, &GradedNumber::new(KNumber::one(), 2).unwrap()), None);
    }

    #[test]
    fn json_shapes() {
        let x = KNumber::new(r(3, 2), r(-1, 2));
        assert_eq!(serde_json::to_string(&x).unwrap(), r#"{"u":[3,2],"v":[-1,2]}"#);
        let g = GradedNumber::new(x, 6).unwrap();
        let json = serde_json::to_string(&g).unwrap();
        assert_eq!(json, r#"{"u":[3,2],"v":[-1,2],"d":6}"#);
        assert_eq!(serde_json::from_str::<GradedNumber>(&json).unwrap(), g);
        assert!(serde_json::from_str::<GradedNumber>(r#"{"u":[1,1],"v":[0,1],"d":4}"#).is_err());
    }

    #[test]
    fn betas_from_all_ambiguous_reps() {
        let primes: Vec<u64> = (2..500).filter(|&p| crate::arith::is_prime(p)).collect();
        for m in 3..=300i64 {
            let Ok(d) = check_fundamental(-m) else { continue };
            let k = QuadField::new(d);
            let cg = FormClassGroup::new(d).unwrap();
            for rep in cg.ambiguous_representatives() {
                for &p in &primes {
                    if let Some((x, y)) = represent(&rep.form, p) {
                        assert!(beta_pair_product_is_p(&k, &rep.form, x, y), "{d} {} {p}", rep.form);
                        for s in [Sign::Plus, Sign::Minus] {
                            let b = beta_of(&k, &rep.form, x, y, s).unwrap();
                            assert!(b.is_integral(&k), "{d} {} {p}", rep.form);
                            if b.d() > 1 {
                                assert_eq!(graded_mul(&k, &b, &b.sigma()).as_k(), b.relative_norm(&k));
                            }
                        }
                    }
                }
            }
        }
    }

    fn arb_k() -> impl Strategy<Value = KNumber> {
        (-50i128..50, 1i128..12, -50i128..50, 1i128..12).prop_map(|(a, b, c, d)| KNumber::new(r(a, b), r(c, d)))
    }

    fn arb_graded() -> impl Strategy<Value = GradedNumber> {
        (arb_k(), proptest::sample::select(vec![1u64, 2, 3, 5, 6, 7, 10, 14, 15, 21, 30]))
            .prop_map(|(g, d)| GradedNumber::new(g, d).unwrap())
    }

    fn arb_disc() -> impl Strategy<Value = QuadField> {
        proptest::sample::select(vec![-3i64, -4, -8, -15, -20, -23, -84, -87]).prop_map(field)
    }

    proptest! {
        #[test]
        fn norm_is_multiplicative(k in arb_disc(), x in arb_k(), y in arb_k()) {
            prop_assert_eq!(k.norm(&k.mul(&x, &y)), k.norm(&x) * k.norm(&y));
        }

        #[test]
        fn division_inverts_multiplication(k in arb_disc(), x in arb_k(), y in arb_k()) {
            prop_assume!(!y.is_zero());
            prop_assert_eq!(k.checked_div(&k.mul(&x, &y), &y).unwrap(), x);
        }

        #[test]
        fn graded_mul_is_associative_and_graded(k in arb_disc(), x in arb_graded(), y in arb_graded(), z in arb_graded()) {
            let left = graded_mul(&k, &graded_mul(&k, &x, &y), &z);
            let right = graded_mul(&k, &x, &graded_mul(&k, &y, &z));
            prop_assert_eq!(left, right);
            let (core, _) = crate::arith::square_split((x.d() * y.d()) as i64);
            prop_assert_eq!(graded_mul(&k, &x, &y).d(), core as u64);
            prop_assert_eq!(graded_mul(&k, &x, &y), graded_mul(&k, &y, &x));
        }

        #[test]
        fn equal_radicands_multiply_into_k(k in arb_disc(), x in arb_graded(), g in arb_k()) {
            let y = GradedNumber::new(g, x.d()).unwrap();
            prop_assert_eq!(graded_mul(&k, &x, &y).d(), 1);
        }
    }
}
