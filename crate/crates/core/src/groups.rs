//! Coefficient groups: the parabolic subgroup P of SL(2,R) written as pairs,
//! SL(2,R) itself, and U(n,1) in the block realization that preserves
//! `x_1 conj(x_{n+1}) + x_{n+1} conj(x_1) + |x_2|^2 + ... + |x_n|^2`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::rng;

/// Minimal group interface used by currents.
pub trait Group: Clone {
    fn compose(&self, other: &Self) -> Self;
    fn inverse(&self) -> Self;
}

/// Element `(epsilon, gamma)` of P, embedded in SL(2,R) as the lower
/// triangular matrix `(1/epsilon, 0; gamma, epsilon)`.
///
/// P0 is `{epsilon = +-1}`; the dilation subgroup S is `{epsilon > 0, gamma = 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPair")]
pub struct ParabolicPair {
    pub epsilon: f64,
    pub gamma: f64,
}

#[derive(Deserialize)]
struct RawPair {
    epsilon: f64,
    gamma: f64,
}

impl TryFrom<RawPair> for ParabolicPair {
    type Error = Error;
    fn try_from(r: RawPair) -> Result<Self> {
        ParabolicPair::new(r.epsilon, r.gamma)
    }
}

impl ParabolicPair {
    pub const IDENTITY: ParabolicPair = ParabolicPair { epsilon: 1.0, gamma: 0.0 };

    pub fn new(epsilon: f64, gamma: f64) -> Result<Self> {
        if epsilon == 0.0 || !epsilon.is_finite() || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "parabolic pair needs finite nonzero epsilon, got ({epsilon}, {gamma})"
            )));
        }
        Ok(ParabolicPair { epsilon, gamma })
    }

    /// Unipotent element `(1, gamma)`.
    pub fn translation(gamma: f64) -> Self {
        ParabolicPair { epsilon: 1.0, gamma }
    }

    /// Dilation `(r, 0)`, `r > 0`.
    pub fn dilation(r: f64) -> Result<Self> {
        if r <= 0.0 {
            return Err(Error::InvalidParameter(format!("dilation needs r > 0, got {r}")));
        }
        ParabolicPair::new(r, 0.0)
    }

    /// `(e1, g1)(e2, g2) = (e1 e2, g1/e2 + e1 g2)`.
    pub fn mul(&self, other: &ParabolicPair) -> ParabolicPair {
        ParabolicPair {
            epsilon: self.epsilon * other.epsilon,
            gamma: self.gamma / other.epsilon + self.epsilon * other.gamma,
        }
    }

    pub fn inv(&self) -> ParabolicPair {
        ParabolicPair { epsilon: 1.0 / self.epsilon, gamma: -self.gamma }
    }

    pub fn is_in_p0(&self) -> bool {
        self.epsilon.abs() == 1.0
    }

    pub fn embed(&self) -> SL2Element {
        SL2Element {
            alpha: 1.0 / self.epsilon,
            beta: 0.0,
            gamma: self.gamma,
            delta: self.epsilon,
        }
    }

    /// The automorphism image `g^r = (r,0) g (1/r,0)`; on `(1, gamma)` it is
    /// `(1, r^2 gamma)`.
    pub fn automorphism_apply(&self, r: f64) -> Result<ParabolicPair> {
        if !(r > 0.0) {
            return Err(Error::InvalidParameter(format!("automorphism needs r > 0, got {r}")));
        }
        if !self.is_in_p0() {
            return Err(Error::NotInP0(format!("({}, {})", self.epsilon, self.gamma)));
        }
        Ok(ParabolicPair { epsilon: self.epsilon, gamma: r * r * self.gamma })
    }
}

impl Group for ParabolicPair {
    fn compose(&self, other: &Self) -> Self {
        self.mul(other)
    }
    fn inverse(&self) -> Self {
        self.inv()
    }
}

/// `g = (alpha, beta; gamma, delta)` with unit determinant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSl2")]
pub struct SL2Element {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

#[derive(Deserialize)]
struct RawSl2 {
    alpha: f64,
    beta: f64,
    gamma: f64,
    delta: f64,
}

impl TryFrom<RawSl2> for SL2Element {
    type Error = Error;
    fn try_from(r: RawSl2) -> Result<Self> {
        SL2Element::new(r.alpha, r.beta, r.gamma, r.delta)
    }
}

impl SL2Element {
    pub const IDENTITY: SL2Element = SL2Element { alpha: 1.0, beta: 0.0, gamma: 0.0, delta: 1.0 };

    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Result<Self> {
        let g = SL2Element { alpha, beta, gamma, delta };
        let det = g.det();
        if (det - 1.0).abs() > Tolerances::default().sl2_det * (1.0 + g.norm_sq()) {
            return Err(Error::InvalidParameter(format!("SL(2,R) element has determinant {det}")));
        }
        Ok(g)
    }

    pub fn det(&self) -> f64 {
        self.alpha * self.delta - self.beta * self.gamma
    }

    fn norm_sq(&self) -> f64 {
        self.alpha.powi(2) + self.beta.powi(2) + self.gamma.powi(2) + self.delta.powi(2)
    }

    pub fn mul(&self, o: &SL2Element) -> SL2Element {
        SL2Element {
            alpha: self.alpha * o.alpha + self.beta * o.gamma,
            beta: self.alpha * o.beta + self.beta * o.delta,
            gamma: self.gamma * o.alpha + self.delta * o.gamma,
            delta: self.gamma * o.beta + self.delta * o.delta,
        }
    }

    pub fn inv(&self) -> SL2Element {
        SL2Element { alpha: self.delta, beta: -self.beta, gamma: -self.gamma, delta: self.alpha }
    }

    /// Max-entry distance between two matrices.
    pub fn distance(&self, o: &SL2Element) -> f64 {
        (self.alpha - o.alpha)
            .abs()
            .max((self.beta - o.beta).abs())
            .max((self.gamma - o.gamma).abs())
            .max((self.delta - o.delta).abs())
    }

    /// The pair `(epsilon, gamma)` when this matrix is lower triangular.
    pub fn as_parabolic(&self) -> Option<ParabolicPair> {
        if self.beta == 0.0 && self.delta != 0.0 {
            Some(ParabolicPair { epsilon: self.delta, gamma: self.gamma })
        } else {
            None
        }
    }
}

impl Group for SL2Element {
    fn compose(&self, other: &Self) -> Self {
        self.mul(other)
    }
    fn inverse(&self) -> Self {
        self.inv()
    }
}

/// Element `(t, z)` of the Heisenberg group of order `2n-1`, realized inside
/// U(n,1) as the unipotent lower-triangular block matrix
/// `(1, 0, 0; z, I, 0; -|z|^2/2 + i t, -z^*, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeisenbergElement {
    pub t: f64,
    pub z: Vec<Complex64>,
}

impl HeisenbergElement {
    pub fn identity(n: usize) -> Self {
        HeisenbergElement { t: 0.0, z: vec![Complex64::new(0.0, 0.0); n - 1] }
    }

    /// `(t1, z1)(t2, z2) = (t1 + t2 - Im(z1^* z2), z1 + z2)`.
    pub fn mul(&self, o: &HeisenbergElement) -> HeisenbergElement {
        let cross: Complex64 = self.z.iter().zip(&o.z).map(|(a, b)| a.conj() * b).sum();
        HeisenbergElement {
            t: self.t + o.t - cross.im,
            z: self.z.iter().zip(&o.z).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn inv(&self) -> HeisenbergElement {
        HeisenbergElement { t: -self.t, z: self.z.iter().map(|a| -a).collect() }
    }

    pub fn is_central(&self) -> bool {
        self.z.iter().all(|a| a.norm() == 0.0)
    }

    /// Matrix of size `n+1` with `n = z.len() + 1`.
    pub fn to_unitary(&self) -> UnitaryElement {
        let m = self.z.len();
        let n = m + 1;
        let mut g = DMatrix::<Complex64>::identity(n + 1, n + 1);
        let zz: f64 = self.z.iter().map(|a| a.norm_sqr()).sum();
        for (i, zi) in self.z.iter().enumerate() {
            g[(1 + i, 0)] = *zi;
            g[(n, 1 + i)] = -zi.conj();
        }
        g[(n, 0)] = Complex64::new(-0.5 * zz, self.t);
        UnitaryElement { n, matrix: g }
    }
}

impl Group for HeisenbergElement {
    fn compose(&self, other: &Self) -> Self {
        self.mul(other)
    }
    fn inverse(&self) -> Self {
        self.inv()
    }
}

/// Element of U(n,1) as an `(n+1) x (n+1)` complex matrix, blocks of orders
/// `1, n-1, 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawUnitary", into = "RawUnitary")]
pub struct UnitaryElement {
    pub n: usize,
    pub matrix: DMatrix<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct RawUnitary {
    n: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl TryFrom<RawUnitary> for UnitaryElement {
    type Error = Error;
    fn try_from(r: RawUnitary) -> Result<Self> {
        let size = r.n + 1;
        if r.re.len() != size || r.im.len() != size {
            return Err(Error::Dimension { expected: size, got: r.re.len().min(r.im.len()) });
        }
        let mut m = DMatrix::<Complex64>::zeros(size, size);
        for i in 0..size {
            if r.re[i].len() != size || r.im[i].len() != size {
                return Err(Error::Dimension { expected: size, got: r.re[i].len() });
            }
            for j in 0..size {
                m[(i, j)] = Complex64::new(r.re[i][j], r.im[i][j]);
            }
        }
        UnitaryElement::new(r.n, m)
    }
}

impl From<UnitaryElement> for RawUnitary {
    fn from(g: UnitaryElement) -> Self {
        let size = g.n + 1;
        let row = |i: usize, f: fn(&Complex64) -> f64| (0..size).map(|j| f(&g.matrix[(i, j)])).collect();
        RawUnitary {
            n: g.n,
            re: (0..size).map(|i| row(i, |c| c.re)).collect(),
            im: (0..size).map(|i| row(i, |c| c.im)).collect(),
        }
    }
}

/// Result of [`UnitaryElement::check_hermitian_form`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormCheck {
    pub residual: f64,
    pub pass: bool,
}

impl UnitaryElement {
    /// Validates dimensions and form preservation.
    pub fn new(n: usize, matrix: DMatrix<Complex64>) -> Result<Self> {
        let g = UnitaryElement::unchecked(n, matrix)?;
        let check = g.check_hermitian_form(&Tolerances::default());
        if !check.pass {
            return Err(Error::InvalidParameter(format!(
                "matrix does not preserve the Hermitian form (residual {:e})",
                check.residual
            )));
        }
        Ok(g)
    }

    /// Dimension checks only; the form residual is left for the caller.
    pub fn unchecked(n: usize, matrix: DMatrix<Complex64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("U(n,1) needs n >= 2, got {n}")));
        }
        if matrix.nrows() != n + 1 || matrix.ncols() != n + 1 {
            return Err(Error::Dimension { expected: n + 1, got: matrix.nrows().max(matrix.ncols()) });
        }
        Ok(UnitaryElement { n, matrix })
    }

    pub fn identity(n: usize) -> Self {
        UnitaryElement { n, matrix: DMatrix::identity(n + 1, n + 1) }
    }

    /// Matrix of the invariant Hermitian form.
    pub fn form(n: usize) -> DMatrix<Complex64> {
        let one = Complex64::new(1.0, 0.0);
        let mut j = DMatrix::<Complex64>::zeros(n + 1, n + 1);
        j[(0, n)] = one;
        j[(n, 0)] = one;
        for i in 1..n {
            j[(i, i)] = one;
        }
        j
    }

    /// Block-diagonal element `diag(d, u, 1/conj(d))` with `u` unitary of
    /// order `n-1`. Covers the dilations (`d > 0`) and `D0 = U(1) x U(n-1)`.
    pub fn diagonal(d: Complex64, u: &DMatrix<Complex64>) -> Result<Self> {
        let m = u.nrows();
        if u.ncols() != m || m == 0 {
            return Err(Error::Dimension { expected: u.nrows(), got: u.ncols() });
        }
        if d.norm() == 0.0 {
            return Err(Error::InvalidParameter("diagonal generator needs d != 0".into()));
        }
        let n = m + 1;
        let mut g = DMatrix::<Complex64>::zeros(n + 1, n + 1);
        g[(0, 0)] = d;
        g[(n, n)] = 1.0 / d.conj();
        g.view_mut((1, 1), (m, m)).copy_from(u);
        Ok(UnitaryElement { n, matrix: g })
    }

    /// The fixed off-parabolic generator: the involution exchanging the first
    /// and last coordinates. It fixes the base point `v0 = (-1, 0)` and maps
    /// `(a, b)` to `(1/a, b/a)`.
    pub fn weyl(n: usize) -> Self {
        UnitaryElement { n, matrix: UnitaryElement::form(n) }
    }

    pub fn mul(&self, o: &UnitaryElement) -> UnitaryElement {
        UnitaryElement { n: self.n, matrix: &self.matrix * &o.matrix }
    }

    /// `g^{-1} = J g^* J`, exact for form-preserving g.
    pub fn inv(&self) -> UnitaryElement {
        let j = UnitaryElement::form(self.n);
        UnitaryElement { n: self.n, matrix: &j * self.matrix.adjoint() * &j }
    }

    /// Frobenius residual `|g^* J g - J|` and pass/fail at the configured tolerance.
    pub fn check_hermitian_form(&self, tol: &Tolerances) -> FormCheck {
        let residual = self.form_residual();
        FormCheck { residual, pass: residual <= tol.hermitian_form }
    }

    pub fn form_residual(&self) -> f64 {
        let j = UnitaryElement::form(self.n);
        (self.matrix.adjoint() * &j * &self.matrix - j).norm()
    }

    pub fn operator_norm_bound(&self) -> f64 {
        self.matrix.norm()
    }

    /// Block `g_ij` (indices 1..=3) of sizes `1, n-1, 1`.
    pub fn block(&self, i: usize, j: usize) -> DMatrix<Complex64> {
        let (r0, rn) = self.block_range(i);
        let (c0, cn) = self.block_range(j);
        self.matrix.view((r0, c0), (rn, cn)).into_owned()
    }

    fn block_range(&self, i: usize) -> (usize, usize) {
        match i {
            1 => (0, 1),
            2 => (1, self.n - 1),
            _ => (self.n, 1),
        }
    }

    /// True if all blocks above the diagonal vanish (the parabolic subgroup).
    pub fn is_lower_block_triangular(&self) -> bool {
        let blocks: &[usize] = if self.n > 1 { &[1, 2, 3] } else { &[1, 3] };
        blocks.iter().enumerate().all(|(k, &i)| {
            blocks[k + 1..].iter().all(|&j| self.block(i, j).iter().all(|x| x.norm() == 0.0))
        })
    }
}

impl Group for UnitaryElement {
    fn compose(&self, other: &Self) -> Self {
        self.mul(other)
    }
    fn inverse(&self) -> Self {
        self.inv()
    }
}

/// Which family [`random_element`] draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKind {
    Parabolic,
    Sl2,
    Unitary(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupElement {
    Parabolic(ParabolicPair),
    Sl2(SL2Element),
    Unitary(UnitaryElement),
}

/// Deterministic draw per `(kind, seed)`.
pub fn random_element(kind: GroupKind, seed: u64) -> GroupElement {
    let mut rng = rng::stream(seed, 0);
    match kind {
        GroupKind::Parabolic => GroupElement::Parabolic(random_parabolic(&mut rng)),
        GroupKind::Sl2 => GroupElement::Sl2(random_sl2(&mut rng)),
        GroupKind::Unitary(n) => GroupElement::Unitary(random_unitary(n, &mut rng)),
    }
}

/// `epsilon` uniform in `[0.2, 5]`, `gamma` uniform in `[-5, 5]`.
pub fn random_parabolic<R: Rng>(rng: &mut R) -> ParabolicPair {
    ParabolicPair { epsilon: rng.random_range(0.2..=5.0), gamma: rng.random_range(-5.0..=5.0) }
}

/// Random matrix with entries in `[-2, 2]`, rescaled to unit determinant
/// (one row negated first when the determinant is negative).
pub fn random_sl2<R: Rng>(rng: &mut R) -> SL2Element {
    loop {
        let mut e: [f64; 4] = std::array::from_fn(|_| rng.random_range(-2.0..=2.0));
        let mut det = e[0] * e[3] - e[1] * e[2];
        if det.abs() < 0.1 {
            continue;
        }
        if det < 0.0 {
            e[0] = -e[0];
            e[1] = -e[1];
            det = -det;
        }
        let s = det.sqrt();
        return SL2Element { alpha: e[0] / s, beta: e[1] / s, gamma: e[2] / s, delta: e[3] / s };
    }
}

fn random_heisenberg<R: Rng>(n: usize, rng: &mut R) -> HeisenbergElement {
    HeisenbergElement {
        t: rng.random_range(-1.0..=1.0),
        z: (0..n - 1)
            .map(|_| Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)))
            .collect(),
    }
}

/// Random element of U(m) as a product of phases and complex Givens rotations.
fn random_small_unitary<R: Rng>(m: usize, rng: &mut R) -> DMatrix<Complex64> {
    let mut u = DMatrix::<Complex64>::from_diagonal(&nalgebra::DVector::from_fn(m, |_, _| {
        Complex64::from_polar(1.0, rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
    }));
    for i in 0..m {
        for j in (i + 1)..m {
            let th: f64 = rng.random_range(0.0..std::f64::consts::PI);
            let ph: f64 = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            let c = Complex64::new(th.cos(), 0.0);
            let s = Complex64::from_polar(th.sin(), ph);
            let mut rot = DMatrix::<Complex64>::identity(m, m);
            rot[(i, i)] = c;
            rot[(i, j)] = -s.conj();
            rot[(j, i)] = s;
            rot[(j, j)] = c;
            u = rot * u;
        }
    }
    u
}

fn random_diagonal<R: Rng>(n: usize, rng: &mut R) -> UnitaryElement {
    let d = Complex64::from_polar(
        rng.random_range(-1.0f64..=1.0).exp(),
        rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
    );
    UnitaryElement::diagonal(d, &random_small_unitary(n - 1, rng)).expect("valid generator")
}

/// `D1 N1 W N2 D2`: diagonal and Heisenberg generators around the fixed
/// off-parabolic involution, so the form is preserved up to rounding.
pub fn random_unitary<R: Rng>(n: usize, rng: &mut R) -> UnitaryElement {
    assert!(n >= 2, "U(n,1) needs n >= 2");
    let d1 = random_diagonal(n, rng);
    let n1 = random_heisenberg(n, rng).to_unitary();
    let n2 = random_heisenberg(n, rng).to_unitary();
    let d2 = random_diagonal(n, rng);
    d1.mul(&n1).mul(&UnitaryElement::weyl(n)).mul(&n2).mul(&d2)
}

/// Random element of the parabolic (lower block triangular) subgroup of U(n,1).
pub fn random_unitary_parabolic<R: Rng>(n: usize, rng: &mut R) -> UnitaryElement {
    random_diagonal(n, rng).mul(&random_heisenberg(n, rng).to_unitary())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pair_close(a: &ParabolicPair, b: &ParabolicPair, tol: f64) -> bool {
        (a.epsilon - b.epsilon).abs() <= tol * (1.0 + a.epsilon.abs())
            && (a.gamma - b.gamma).abs() <= tol * (1.0 + a.gamma.abs())
    }

    #[test]
    fn multiplication_law_value() {
        let g = ParabolicPair::new(2.0, 1.0).unwrap().mul(&ParabolicPair::new(3.0, 2.0).unwrap());
        assert_eq!(g.epsilon, 6.0);
        assert!((g.gamma - 13.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn identity_and_inverse() {
        let g = ParabolicPair::new(-2.5, 0.7).unwrap();
        assert_eq!(ParabolicPair::IDENTITY.mul(&g), g);
        let e = g.mul(&g.inv());
        assert!(pair_close(&e, &ParabolicPair::IDENTITY, 1e-15));
        // inverse agrees with the inverse of the embedded matrix
        let m = g.embed().inv();
        assert!(g.inv().embed().distance(&m) < 1e-15);
    }

    #[test]
    fn zero_epsilon_rejected() {
        assert!(ParabolicPair::new(0.0, 1.0).is_err());
    }

    #[test]
    fn automorphism_examples() {
        let g = ParabolicPair::translation(5.0).automorphism_apply(0.5).unwrap();
        let brute = ParabolicPair::dilation(0.5)
            .unwrap()
            .mul(&ParabolicPair::translation(5.0))
            .mul(&ParabolicPair::dilation(2.0).unwrap());
        assert!(pair_close(&g, &brute, 1e-15));
        assert!(pair_close(&g, &ParabolicPair::translation(1.25), 1e-15));
        let c = ParabolicPair::new(-1.0, 0.0).unwrap();
        assert_eq!(c.automorphism_apply(3.0).unwrap(), c);
        let brute = ParabolicPair::dilation(3.0).unwrap().mul(&c).mul(&ParabolicPair::dilation(1.0 / 3.0).unwrap());
        assert!(pair_close(&brute, &c, 1e-15));
        assert_eq!(ParabolicPair::translation(2.0).automorphism_apply(1.0).unwrap(), ParabolicPair::translation(2.0));
        assert!(ParabolicPair::translation(1.0).automorphism_apply(0.0).is_err());
        assert!(ParabolicPair::translation(1.0).automorphism_apply(-1.0).is_err());
        assert!(matches!(ParabolicPair::dilation(2.0).unwrap().automorphism_apply(1.0), Err(Error::NotInP0(_))));
    }

    #[test]
    fn associativity_on_random_triples() {
        let mut rng = rng::stream(11, 0);
        for _ in 0..1000 {
            let (a, b, c) = (random_parabolic(&mut rng), random_parabolic(&mut rng), random_parabolic(&mut rng));
            let l = a.mul(&b).mul(&c);
            let r = a.mul(&b.mul(&c));
            assert!(pair_close(&l, &r, 1e-12), "{l:?} vs {r:?}");
        }
    }

    proptest! {
        #[test]
        fn embedding_is_homomorphism(e1 in 0.2f64..5.0, s1 in any::<bool>(), g1 in -5.0f64..5.0,
                                     e2 in 0.2f64..5.0, s2 in any::<bool>(), g2 in -5.0f64..5.0) {
            let a = ParabolicPair::new(if s1 { e1 } else { -e1 }, g1).unwrap();
            let b = ParabolicPair::new(if s2 { e2 } else { -e2 }, g2).unwrap();
            let lhs = a.mul(&b).embed();
            let rhs = a.embed().mul(&b.embed());
            let zero = SL2Element { alpha: 0.0, beta: 0.0, gamma: 0.0, delta: 0.0 };
            let size = lhs.distance(&zero);
            prop_assert!(lhs.distance(&rhs) <= 1e-12 * (1.0 + size));
            prop_assert!((lhs.det() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn automorphism_is_an_action(g1 in -5.0f64..5.0, g2 in -5.0f64..5.0, s1 in any::<bool>(),
                                     r in 0.1f64..3.0, s in 0.1f64..3.0) {
            let a = ParabolicPair::new(if s1 { 1.0 } else { -1.0 }, g1).unwrap();
            let b = ParabolicPair::translation(g2);
            let lhs = a.mul(&b).automorphism_apply(r).unwrap();
            let rhs = a.automorphism_apply(r).unwrap().mul(&b.automorphism_apply(r).unwrap());
            prop_assert!(pair_close(&lhs, &rhs, 1e-12));
            let twice = a.automorphism_apply(r).unwrap().automorphism_apply(s).unwrap();
            prop_assert!(pair_close(&twice, &a.automorphism_apply(r * s).unwrap(), 1e-12));
        }
    }

    #[test]
    fn sl2_determinant_enforced() {
        assert!(SL2Element::new(1.0, 1.0, 0.0, 1.0).is_ok());
        assert!(SL2Element::new(2.0, 0.0, 0.0, 1.0).is_err());
        let g = random_sl2(&mut rng::stream(3, 0));
        assert!((g.det() - 1.0).abs() < 1e-12);
        assert!(g.mul(&g.inv()).distance(&SL2Element::IDENTITY) < 1e-12);
    }

    #[test]
    fn random_element_is_deterministic() {
        assert_eq!(random_element(GroupKind::Sl2, 42), random_element(GroupKind::Sl2, 42));
        assert_ne!(random_element(GroupKind::Sl2, 42), random_element(GroupKind::Sl2, 43));
        for seed in 0..200 {
            match random_element(GroupKind::Parabolic, seed) {
                GroupElement::Parabolic(p) => {
                    assert!((0.2..=5.0).contains(&p.epsilon));
                    assert!((-5.0..=5.0).contains(&p.gamma));
                }
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn hermitian_form_checks() {
        let tol = Tolerances::default();
        let id = UnitaryElement::identity(3);
        let c = id.check_hermitian_form(&tol);
        assert!(c.pass);
        assert_eq!(c.residual, 0.0);

        for seed in 0..20 {
            let g = match random_element(GroupKind::Unitary(2), seed) {
                GroupElement::Unitary(g) => g,
                _ => unreachable!(),
            };
            assert!(g.form_residual() < 1e-10, "seed {seed}: {}", g.form_residual());
        }

        // lower-triangular block matrix from the parabolic generators
        let mut rng = rng::stream(5, 1);
        for n in 2..5 {
            let p = random_unitary_parabolic(n, &mut rng);
            assert!(p.is_lower_block_triangular());
            assert!(p.check_hermitian_form(&tol).pass);
        }

        let mut bad = UnitaryElement::identity(2).matrix;
        bad[(1, 1)] += Complex64::new(1e-3, 0.0);
        let bad = UnitaryElement::unchecked(2, bad).unwrap();
        assert!(!bad.check_hermitian_form(&tol).pass);
        assert!(UnitaryElement::new(2, bad.matrix.clone()).is_err());
        assert!(UnitaryElement::unchecked(2, DMatrix::identity(4, 4)).is_err());
    }

    #[test]
    fn form_residual_propagates_through_products() {
        let mut rng = rng::stream(9, 0);
        for _ in 0..50 {
            let a = random_unitary(3, &mut rng);
            let b = random_unitary(3, &mut rng);
            let bound = b.operator_norm_bound().powi(2) * a.form_residual() + b.form_residual();
            let ab = a.mul(&b);
            assert!(ab.form_residual() <= bound + 1e-12 * ab.operator_norm_bound().powi(2));
            let e = ab.mul(&ab.inv());
            assert!((e.matrix - DMatrix::identity(4, 4)).norm() < 1e-9);
        }
    }

    #[test]
    fn heisenberg_law_matches_matrices() {
        let mut rng = rng::stream(2, 0);
        for n in 2..5 {
            let a = random_heisenberg(n, &mut rng);
            let b = random_heisenberg(n, &mut rng);
            let lhs = a.mul(&b).to_unitary();
            let rhs = a.to_unitary().mul(&b.to_unitary());
            assert!((lhs.matrix - rhs.matrix).norm() < 1e-12);
            assert!(a.to_unitary().form_residual() < 1e-13);
            let e = a.mul(&a.inv());
            assert!(e.t.abs() < 1e-15 && e.is_central());
        }
        // center commutes
        let c = HeisenbergElement { t: 0.3, z: vec![Complex64::new(0.0, 0.0)] };
        let a = random_heisenberg(2, &mut rng);
        assert_eq!(c.mul(&a), a.mul(&c));
    }

    #[test]
    fn serde_roundtrip_validates() {
        let g = random_unitary(2, &mut rng::stream(1, 1));
        let js = serde_json::to_string(&g).unwrap();
        let back: UnitaryElement = serde_json::from_str(&js).unwrap();
        assert!((back.matrix - g.matrix).norm() < 1e-15);
        assert!(serde_json::from_str::<ParabolicPair>(r#"{"epsilon":0,"gamma":1}"#).is_err());
        assert!(serde_json::from_str::<SL2Element>(r#"{"alpha":2,"beta":0,"gamma":0,"delta":2}"#).is_err());
    }
}
