//! Lobachevsky spaces: the upper half-plane for SL(2,R) and the complex ball
//! for U(n,1), with their actions, the kernel `c`, and the multipliers `u`.
//!
//! Logarithms are principal throughout. Every argument of `c` has positive
//! real part, so `c` is continuous on `L x L` and the identities built from it
//! hold exactly, not just modulo `2 pi i`.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::groups::{Group, ParabolicPair, SL2Element, UnitaryElement};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Sign of the multiplier `u`: `u^- = conj(u^+)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CocycleVariant {
    Plus,
    Minus,
}

/// A homogeneous space `L` of a rank-one group, with the kernel
/// `c(p1, p2) = log w(p1, p2)` and automorphy factor `j(g, p)` satisfying
/// `w(g p1, g p2) = w(p1, p2) / (j(g, p1) conj(j(g, p2)))`.
pub trait HyperbolicSpace: Clone + std::fmt::Debug + Send + Sync + PartialEq {
    type Group: Group + std::fmt::Debug + Send + Sync;

    /// Base point of the same dimension as `self` (`i`, resp. `(-1, 0)`).
    fn base_point_like(&self) -> Self;

    fn act(g: &Self::Group, p: &Self) -> Result<Self>;

    /// `w(p1, p2) = exp c(p1, p2)`; real part is positive for interior points.
    fn kernel_arg(p1: &Self, p2: &Self) -> Result<Complex64>;

    fn automorphy(g: &Self::Group, p: &Self) -> Complex64;

    /// Coefficient `q` with `F(xi) = prod_k exp(-q r_k^2)` paired against the
    /// constant fiber vector: `-i z` on the half-plane, `-a` on the ball.
    fn vacuum_rate(&self) -> Complex64;

    /// The group element as a parabolic pair, when it is one.
    fn as_parabolic(g: &Self::Group) -> Option<ParabolicPair>;

    /// Whether parabolic elements act on the vacuum vector through the
    /// special representation (`(epsilon, gamma)` shifts the vacuum rate by
    /// `i epsilon gamma`).
    const MOVABLE_VACUUM: bool = false;

    fn kernel_c(p1: &Self, p2: &Self) -> Result<Complex64> {
        Ok(Self::kernel_arg(p1, p2)?.ln())
    }
}

/// `z = u + i v` with `v > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawHalfPlane", into = "RawHalfPlane")]
pub struct HalfPlanePoint {
    z: Complex64,
}

#[derive(Serialize, Deserialize)]
struct RawHalfPlane {
    re: f64,
    im: f64,
}

impl TryFrom<RawHalfPlane> for HalfPlanePoint {
    type Error = Error;
    fn try_from(r: RawHalfPlane) -> Result<Self> {
        HalfPlanePoint::new(Complex64::new(r.re, r.im))
    }
}

impl From<HalfPlanePoint> for RawHalfPlane {
    fn from(p: HalfPlanePoint) -> Self {
        RawHalfPlane { re: p.z.re, im: p.z.im }
    }
}

impl HalfPlanePoint {
    pub const BASE: HalfPlanePoint = HalfPlanePoint { z: I };

    pub fn new(z: Complex64) -> Result<Self> {
        if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::OutsideDomain(format!("half-plane point {z} needs Im z > 0")));
        }
        Ok(HalfPlanePoint { z })
    }

    pub fn from_parts(u: f64, v: f64) -> Result<Self> {
        HalfPlanePoint::new(Complex64::new(u, v))
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }
}

/// `z -> (delta z + gamma) / (beta z + alpha)`.
pub fn moebius_act(g: &SL2Element, p: &HalfPlanePoint) -> Result<HalfPlanePoint> {
    let den = g.beta * p.z + g.alpha;
    if den.norm() == 0.0 {
        return Err(Error::SingularAction(0.0));
    }
    HalfPlanePoint::new((g.delta * p.z + g.gamma) / den)
}

/// `c(z1, z2) = log(-i (z1 - conj z2))`.
pub fn kernel_c_halfplane(p1: &HalfPlanePoint, p2: &HalfPlanePoint) -> Complex64 {
    (-I * (p1.z - p2.z.conj())).ln()
}

impl HyperbolicSpace for HalfPlanePoint {
    type Group = SL2Element;

    const MOVABLE_VACUUM: bool = true;

    fn base_point_like(&self) -> Self {
        HalfPlanePoint::BASE
    }

    fn act(g: &SL2Element, p: &Self) -> Result<Self> {
        moebius_act(g, p)
    }

    fn kernel_arg(p1: &Self, p2: &Self) -> Result<Complex64> {
        Ok(-I * (p1.z - p2.z.conj()))
    }

    fn automorphy(g: &SL2Element, p: &Self) -> Complex64 {
        g.beta * p.z + g.alpha
    }

    fn vacuum_rate(&self) -> Complex64 {
        -I * self.z
    }

    fn as_parabolic(g: &SL2Element) -> Option<ParabolicPair> {
        g.as_parabolic()
    }
}

/// `v = (a, b)` in `C + C^{n-1}` with `a + conj(a) + b^* b < 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBall", into = "RawBall")]
pub struct BallPoint {
    a: Complex64,
    b: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct RawBall {
    a: Complex64,
    b: Vec<Complex64>,
}

impl TryFrom<RawBall> for BallPoint {
    type Error = Error;
    fn try_from(r: RawBall) -> Result<Self> {
        BallPoint::new(r.a, r.b)
    }
}

impl From<BallPoint> for RawBall {
    fn from(p: BallPoint) -> Self {
        RawBall { a: p.a, b: p.b }
    }
}

impl BallPoint {
    /// Requires `a + conj(a) + b^* b <= -margin` (margin from [`Tolerances`]).
    pub fn new(a: Complex64, b: Vec<Complex64>) -> Result<Self> {
        if b.is_empty() {
            return Err(Error::InvalidParameter("ball point needs n >= 2 (b nonempty)".into()));
        }
        let p = BallPoint { a, b };
        let q = p.form_value();
        if !(q <= -Tolerances::default().ball_margin) {
            return Err(Error::OutsideDomain(format!("ball point has a + conj a + b*b = {q:e}")));
        }
        Ok(p)
    }

    /// Base point `v0 = (-1, 0)` of the ball in `C^n`.
    pub fn base(n: usize) -> Self {
        BallPoint { a: Complex64::new(-1.0, 0.0), b: vec![Complex64::new(0.0, 0.0); n - 1] }
    }

    pub fn a(&self) -> Complex64 {
        self.a
    }

    pub fn b(&self) -> &[Complex64] {
        &self.b
    }

    pub fn n(&self) -> usize {
        self.b.len() + 1
    }

    /// `a + conj(a) + b^* b`, negative inside the ball.
    pub fn form_value(&self) -> f64 {
        2.0 * self.a.re + self.b.iter().map(|x| x.norm_sqr()).sum::<f64>()
    }

    fn homogeneous(&self) -> DVector<Complex64> {
        let n = self.n();
        let mut x = DVector::<Complex64>::zeros(n + 1);
        x[0] = Complex64::new(1.0, 0.0);
        for (i, bi) in self.b.iter().enumerate() {
            x[1 + i] = *bi;
        }
        x[n] = self.a;
        x
    }
}

/// `a' = j^{-1}(g31 + g32 b + g33 a)`, `b' = j^{-1}(g21 + g22 b + g23 a)`,
/// `j = g11 + g12 b + g13 a`.
pub fn ball_act(g: &UnitaryElement, v: &BallPoint) -> Result<BallPoint> {
    if g.n != v.n() {
        return Err(Error::Dimension { expected: g.n, got: v.n() });
    }
    let y = &g.matrix * v.homogeneous();
    let j = y[0];
    if j.norm() <= f64::EPSILON * y.norm() {
        return Err(Error::SingularAction(j.norm()));
    }
    let n = g.n;
    let out = BallPoint { a: y[n] / j, b: (1..n).map(|i| y[i] / j).collect() };
    if !(out.form_value() < 0.0) {
        return Err(Error::OutsideDomain(format!(
            "image of ball point left the ball (form value {:e})",
            out.form_value()
        )));
    }
    Ok(out)
}

fn ball_arg(v1: &BallPoint, v2: &BallPoint) -> Result<Complex64> {
    if v1.n() != v2.n() {
        return Err(Error::Dimension { expected: v1.n(), got: v2.n() });
    }
    let cross: Complex64 = v2.b.iter().zip(&v1.b).map(|(x2, x1)| x2.conj() * x1).sum();
    Ok(-v1.a - v2.a.conj() - cross)
}

/// `c(v1, v2) = log(-a1 - conj(a2) - b2^* b1)`.
pub fn kernel_c_ball(v1: &BallPoint, v2: &BallPoint) -> Result<Complex64> {
    let w = ball_arg(v1, v2)?;
    if !(w.re > 0.0) {
        return Err(Error::KernelPrecondition(w.re));
    }
    Ok(w.ln())
}

impl HyperbolicSpace for BallPoint {
    type Group = UnitaryElement;

    fn base_point_like(&self) -> Self {
        BallPoint::base(self.n())
    }

    fn act(g: &UnitaryElement, p: &Self) -> Result<Self> {
        ball_act(g, p)
    }

    fn kernel_arg(p1: &Self, p2: &Self) -> Result<Complex64> {
        let w = ball_arg(p1, p2)?;
        if !(w.re > 0.0) {
            return Err(Error::KernelPrecondition(w.re));
        }
        Ok(w)
    }

    fn automorphy(g: &UnitaryElement, p: &Self) -> Complex64 {
        let n = g.n;
        let mut j = g.matrix[(0, 0)] + g.matrix[(0, n)] * p.a;
        for (i, bi) in p.b.iter().enumerate() {
            j += g.matrix[(0, 1 + i)] * bi;
        }
        j
    }

    fn vacuum_rate(&self) -> Complex64 {
        -self.a
    }

    fn as_parabolic(_g: &UnitaryElement) -> Option<ParabolicPair> {
        None
    }
}

/// `u^+(g, p) = c(gp, gp0) - c(p, p0) - (c(gp0, gp0) - c(p0, p0)) / 2`,
/// `u^- = conj(u^+)`.
pub fn cocycle_u<S: HyperbolicSpace>(g: &S::Group, p: &S, variant: CocycleVariant) -> Result<Complex64> {
    let p0 = p.base_point_like();
    let gp = S::act(g, p)?;
    let gp0 = S::act(g, &p0)?;
    let u = S::kernel_c(&gp, &gp0)? - S::kernel_c(p, &p0)?
        - 0.5 * (S::kernel_c(&gp0, &gp0)? - S::kernel_c(&p0, &p0)?);
    Ok(match variant {
        CocycleVariant::Plus => u,
        CocycleVariant::Minus => u.conj(),
    })
}

/// `|exp(c(g p1, g p2) - c(p1, p2) + l(p1) + conj l(p2)) - 1|` with
/// `l = log j(g, .)`.
pub fn multiplier_cocycle_check<S: HyperbolicSpace>(g: &S::Group, p1: &S, p2: &S) -> Result<f64> {
    let lhs = S::kernel_c(&S::act(g, p1)?, &S::act(g, p2)?)?;
    let l1 = S::automorphy(g, p1).ln();
    let l2 = S::automorphy(g, p2).ln();
    Ok(((lhs - S::kernel_c(p1, p2)? + l1 + l2.conj()).exp() - 1.0).norm())
}

/// Random half-plane point with `Re z` in `[-2, 2]` and `Im z` in `[0.3, 3]`.
pub fn random_halfplane<R: rand::Rng>(rng: &mut R) -> HalfPlanePoint {
    HalfPlanePoint { z: Complex64::new(rng.random_range(-2.0..=2.0), rng.random_range(0.3..=3.0)) }
}

/// Random interior ball point: `|b_i|` components in `[-1, 1]`,
/// `Re a = -|b|^2/2 - s` with `s` in `[0.2, 2]`, `Im a` in `[-2, 2]`.
pub fn random_ball<R: rand::Rng>(n: usize, rng: &mut R) -> BallPoint {
    let b: Vec<Complex64> = (0..n - 1)
        .map(|_| Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)))
        .collect();
    let bb: f64 = b.iter().map(|x| x.norm_sqr()).sum();
    let a = Complex64::new(-0.5 * bb - rng.random_range(0.2..=2.0), rng.random_range(-2.0..=2.0));
    BallPoint { a, b }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{random_sl2, random_unitary};
    use crate::rng;
    use std::f64::consts::LN_2;

    fn hp(u: f64, v: f64) -> HalfPlanePoint {
        HalfPlanePoint::from_parts(u, v).unwrap()
    }

    #[test]
    fn moebius_examples() {
        let i = HalfPlanePoint::BASE;
        assert_eq!(moebius_act(&SL2Element::IDENTITY, &i).unwrap(), i);
        let g = SL2Element::new(0.5, 0.0, 0.0, 2.0).unwrap();
        assert!((moebius_act(&g, &i).unwrap().z() - Complex64::new(0.0, 4.0)).norm() < 1e-15);
        let z = hp(0.3, 1.7);
        let t = ParabolicPair::translation(2.5).embed();
        assert!((moebius_act(&t, &z).unwrap().z() - (z.z() + 2.5)).norm() < 1e-15);
    }

    #[test]
    fn moebius_is_a_group_action() {
        let mut rng = rng::stream(1, 0);
        for _ in 0..1000 {
            let (g1, g2) = (random_sl2(&mut rng), random_sl2(&mut rng));
            let z = random_halfplane(&mut rng);
            let lhs = moebius_act(&g1.mul(&g2), &z).unwrap();
            let rhs = moebius_act(&g1, &moebius_act(&g2, &z).unwrap()).unwrap();
            assert!((lhs.z() - rhs.z()).norm() < 1e-10 * (1.0 + lhs.z().norm()));
            assert!(lhs.z().im > 0.0);
        }
    }

    #[test]
    fn halfplane_kernel_values() {
        let i = HalfPlanePoint::BASE;
        assert!((kernel_c_halfplane(&i, &i) - LN_2).norm() < 1e-15);
        assert!((kernel_c_halfplane(&hp(0.0, 2.0), &i) - 3f64.ln()).norm() < 1e-15);
        let c = kernel_c_halfplane(&hp(1.0, 1.0), &i);
        assert!((c - Complex64::new(2.0, -1.0).ln()).norm() < 1e-15);
        // real part of exp(c) is v1 + v2
        let (a, b) = (hp(-0.7, 0.4), hp(1.3, 2.2));
        assert!((kernel_c_halfplane(&a, &b).exp().re - 2.6).abs() < 1e-14);
    }

    #[test]
    fn ball_examples() {
        let v0 = BallPoint::base(2);
        assert_eq!(v0.form_value(), -2.0);
        assert_eq!(ball_act(&UnitaryElement::identity(2), &v0).unwrap(), v0);
        assert!((kernel_c_ball(&v0, &v0).unwrap() - LN_2).norm() < 1e-15);
        let v = BallPoint::new(Complex64::new(-2.0, 0.0), vec![Complex64::new(0.0, 0.0)]).unwrap();
        assert!((kernel_c_ball(&v, &v0).unwrap() - 3f64.ln()).norm() < 1e-15);
        assert!(BallPoint::new(Complex64::new(0.0, 0.0), vec![Complex64::new(0.0, 0.0)]).is_err());
        assert!(BallPoint::new(Complex64::new(-0.5, 0.0), vec![Complex64::new(1.0, 0.0)]).is_err());
        // weyl generator fixes v0
        let w = UnitaryElement::weyl(3);
        let v0 = BallPoint::base(3);
        let img = ball_act(&w, &v0).unwrap();
        assert!((img.a() - v0.a()).norm() < 1e-15);
    }

    #[test]
    fn ball_kernel_matches_definition() {
        let mut rng = rng::stream(4, 0);
        for _ in 0..100 {
            let (v1, v2) = (random_ball(3, &mut rng), random_ball(3, &mut rng));
            let cross: Complex64 = v2.b().iter().zip(v1.b()).map(|(x, y)| x.conj() * y).sum();
            let direct = -v1.a() - v2.a().conj() - cross;
            let c = kernel_c_ball(&v1, &v2).unwrap();
            assert!((c.exp() - direct).norm() < 1e-14 * (1.0 + direct.norm()));
        }
        assert!(kernel_c_ball(&BallPoint::base(2), &BallPoint::base(3)).is_err());
    }

    #[test]
    fn ball_action_preserves_domain_and_composes() {
        let mut rng = rng::stream(8, 0);
        for _ in 0..1000 {
            let (g1, g2) = (random_unitary(2, &mut rng), random_unitary(2, &mut rng));
            let v = random_ball(2, &mut rng);
            let lhs = ball_act(&g1.mul(&g2), &v).unwrap();
            let rhs = ball_act(&g1, &ball_act(&g2, &v).unwrap()).unwrap();
            assert!(lhs.form_value() < 0.0);
            let scale = 1.0 + lhs.a().norm();
            assert!((lhs.a() - rhs.a()).norm() < 1e-10 * scale);
            assert!((lhs.b()[0] - rhs.b()[0]).norm() < 1e-10 * scale);
        }
    }

    #[test]
    fn u_special_values() {
        let z = hp(0.4, 0.9);
        let id = SL2Element::IDENTITY;
        assert_eq!(cocycle_u(&id, &z, CocycleVariant::Plus).unwrap(), Complex64::new(0.0, 0.0));
        let t = ParabolicPair::translation(-1.7).embed();
        assert!(cocycle_u(&t, &z, CocycleVariant::Plus).unwrap().norm() < 1e-15);
        let d = ParabolicPair::dilation(2.5).unwrap().embed();
        assert!((cocycle_u(&d, &z, CocycleVariant::Plus).unwrap() - 2.5f64.ln()).norm() < 1e-14);
        let v = BallPoint::base(2);
        assert_eq!(cocycle_u(&UnitaryElement::identity(2), &v, CocycleVariant::Plus).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn u_minus_is_conjugate() {
        let mut rng = rng::stream(12, 0);
        for _ in 0..200 {
            let g = random_sl2(&mut rng);
            let z = random_halfplane(&mut rng);
            let up = cocycle_u(&g, &z, CocycleVariant::Plus).unwrap();
            let um = cocycle_u(&g, &z, CocycleVariant::Minus).unwrap();
            assert_eq!(up, um.conj());
        }
    }

    #[test]
    fn multiplier_cocycle_residuals() {
        let mut rng = rng::stream(13, 0);
        let z = random_halfplane(&mut rng);
        assert_eq!(multiplier_cocycle_check(&SL2Element::IDENTITY, &z, &z).unwrap(), 0.0);
        for _ in 0..100 {
            let g = random_sl2(&mut rng);
            let (z1, z2) = (random_halfplane(&mut rng), random_halfplane(&mut rng));
            assert!(multiplier_cocycle_check(&g, &z1, &z2).unwrap() < 1e-10);
        }
        for _ in 0..100 {
            let g = random_unitary(2, &mut rng);
            let (v1, v2) = (random_ball(2, &mut rng), random_ball(2, &mut rng));
            assert!(multiplier_cocycle_check(&g, &v1, &v2).unwrap() < 1e-10);
        }
    }

    #[test]
    fn serde_rejects_outside_points() {
        assert!(serde_json::from_str::<HalfPlanePoint>(r#"{"re":1,"im":-1}"#).is_err());
        let p: HalfPlanePoint = serde_json::from_str(r#"{"re":1,"im":2}"#).unwrap();
        assert_eq!(p.z(), Complex64::new(1.0, 2.0));
        let b: BallPoint = serde_json::from_str(r#"{"a":[-1,0],"b":[[0.5,0]]}"#).unwrap();
        assert_eq!(b.n(), 2);
        assert!(serde_json::from_str::<BallPoint>(r#"{"a":[1,0],"b":[[0,0]]}"#).is_err());
    }
}
