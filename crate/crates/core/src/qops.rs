//! Two-qubit linear-algebra substrate: density matrices, Pauli/tensor
//! construction, partial trace, spectral decomposition and entropies.
//!
//! All entropies are in bits (base-2 logarithms). Types are immutable
//! values after construction and every operation is a pure function.

use nalgebra::{Matrix2, Matrix4, SymmetricEigen, Vector2, Vector4};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type M2 = Matrix2<C64>;
pub type M4 = Matrix4<C64>;

/// Max entrywise |rho - rho^dag| accepted as Hermitian.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Max |tr(rho) - 1| accepted.
pub const TRACE_TOL: f64 = 1e-12;
/// Eigenvalues in [EIGENVALUE_FLOOR, 0) are clipped to 0; anything more
/// negative is rejected as an invalid state.
pub const EIGENVALUE_FLOOR: f64 = -1e-10;
/// Below this, a measurement outcome is treated as impossible.
pub const ZERO_PROBABILITY_TOL: f64 = 1e-14;

const RE1: C64 = C64::new(1.0, 0.0);
const IM1: C64 = C64::new(0.0, 1.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// Pauli matrix sigma_i for i in 1..=3.
pub fn pauli(i: usize) -> M2 {
    match i {
        1 => M2::new(ZERO, RE1, RE1, ZERO),
        2 => M2::new(ZERO, -IM1, IM1, ZERO),
        3 => M2::new(RE1, ZERO, ZERO, -RE1),
        _ => panic!("pauli index must be 1, 2 or 3, got {i}"),
    }
}

pub fn identity2() -> M2 {
    M2::identity()
}

/// x log2(x) with the exact 0 log 0 = 0 branch (no epsilon shift).
pub fn xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

fn hermiticity_deviation<const D: usize>(
    m: &nalgebra::SMatrix<C64, D, D>,
) -> f64 {
    let adj = m.adjoint();
    let mut dev: f64 = 0.0;
    for i in 0..D {
        for j in 0..D {
            dev = dev.max((m[(i, j)] - adj[(i, j)]).norm());
        }
    }
    dev
}

fn check_density<const D: usize>(
    m: &nalgebra::SMatrix<C64, D, D>,
    eigs: &[f64],
) -> Result<()> {
    let herm = hermiticity_deviation(m);
    if herm > HERMITICITY_TOL {
        return Err(Error::InvalidState(format!(
            "not Hermitian: max |rho - rho^dag| = {herm:e}"
        )));
    }
    let tr = m.trace();
    if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
        return Err(Error::InvalidState(format!("trace = {tr}, expected 1")));
    }
    for &ev in eigs {
        if ev < EIGENVALUE_FLOOR {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {ev:e} below floor {EIGENVALUE_FLOOR:e}"
            )));
        }
    }
    Ok(())
}

/// Eigenvalues of a 2x2 Hermitian matrix, ascending.
fn herm2_eigenvalues(m: &M2) -> [f64; 2] {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = m[(0, 1)];
    let mid = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    [mid - rad, mid + rad]
}

/// A single-qubit density operator (2x2, Hermitian, unit trace, PSD).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix2(M2);

impl DensityMatrix2 {
    pub fn new(m: M2) -> Result<Self> {
        let eigs = herm2_eigenvalues(&m);
        check_density(&m, &eigs)?;
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &M2 {
        &self.0
    }

    /// Maximally mixed single-qubit state I/2.
    pub fn maximally_mixed() -> Self {
        Self(M2::identity() * C64::new(0.5, 0.0))
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        herm2_eigenvalues(&self.0)
    }

    /// S(rho) = -sum lambda log2 lambda, in [0, 1].
    pub fn von_neumann_entropy(&self) -> f64 {
        let s: f64 = self
            .eigenvalues()
            .iter()
            .map(|&l| -xlog2x(clip_eigenvalue(l)))
            .sum();
        s.max(0.0)
    }
}

/// A two-qubit density operator (4x4). Index convention: |ab> -> 2a + b,
/// subsystem A on the major index.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix4(M4);

/// Which subsystem survives a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

impl DensityMatrix4 {
    pub fn new(m: M4) -> Result<Self> {
        let eig = SymmetricEigen::new(m);
        check_density(&m, eig.eigenvalues.as_slice())?;
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &M4 {
        &self.0
    }

    pub fn maximally_mixed() -> Self {
        Self(M4::identity() * C64::new(0.25, 0.0))
    }

    /// Product state rho_A (x) rho_B.
    pub fn product(a: &DensityMatrix2, b: &DensityMatrix2) -> Self {
        Self(a.matrix().kronecker(b.matrix()))
    }

    /// Pure state |psi><psi| from a (normalized) two-qubit ket.
    pub fn from_ket(psi: &Vector4<C64>) -> Result<Self> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("ket norm {norm} != 1")));
        }
        Self::new(psi * psi.adjoint())
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = SymmetricEigen::new(self.0);
        eig.eigenvalues.as_slice().to_vec()
    }

    /// S(rho) = -sum lambda log2 lambda, in [0, 2].
    pub fn von_neumann_entropy(&self) -> f64 {
        let s: f64 = self
            .eigenvalues()
            .iter()
            .map(|&l| -xlog2x(clip_eigenvalue(l)))
            .sum();
        s.max(0.0)
    }

    /// rho_A = Tr_B(rho) or rho_B = Tr_A(rho).
    pub fn partial_trace(&self, keep: Subsystem) -> DensityMatrix2 {
        let r = &self.0;
        let mut out = M2::zeros();
        for i in 0..2 {
            for j in 0..2 {
                out[(i, j)] = match keep {
                    Subsystem::A => r[(2 * i, 2 * j)] + r[(2 * i + 1, 2 * j + 1)],
                    Subsystem::B => r[(i, j)] + r[(2 + i, 2 + j)],
                };
            }
        }
        // Partial trace of a valid state is valid; symmetrize away rounding.
        let herm = (out + out.adjoint()) * C64::new(0.5, 0.0);
        DensityMatrix2(herm)
    }
}

fn clip_eigenvalue(l: f64) -> f64 {
    debug_assert!(l >= EIGENVALUE_FLOOR, "eigenvalue {l} below floor");
    if l < 0.0 {
        0.0
    } else {
        l
    }
}

/// Relative entropy S(rho1 || rho2) = Tr(rho1 log2 rho1) - Tr(rho1 log2 rho2)
/// in bits.
///
/// Returns `f64::INFINITY` when the support of rho1 is not contained in the
/// support of rho2 (documented sentinel, not an error).
pub fn relative_entropy(rho1: &DensityMatrix4, rho2: &DensityMatrix4) -> f64 {
    const SUPPORT_TOL: f64 = 1e-12;

    let e1 = SymmetricEigen::new(rho1.0);
    let e2 = SymmetricEigen::new(rho2.0);

    let mut acc: f64 = e1
        .eigenvalues
        .iter()
        .map(|&l| xlog2x(clip_eigenvalue(l)))
        .sum();

    for j in 0..4 {
        let s_j = clip_eigenvalue(e2.eigenvalues[j]);
        // weight of rho1 on the j-th eigenvector of rho2
        let mut w_j = 0.0;
        for i in 0..4 {
            let r_i = clip_eigenvalue(e1.eigenvalues[i]);
            if r_i == 0.0 {
                continue;
            }
            let overlap = e1.eigenvectors.column(i).dotc(&e2.eigenvectors.column(j));
            w_j += r_i * overlap.norm_sqr();
        }
        if s_j <= SUPPORT_TOL {
            if w_j > SUPPORT_TOL {
                return f64::INFINITY;
            }
        } else {
            acc -= w_j * s_j.log2();
        }
    }
    // Klein inequality guarantees nonnegativity; trim rounding noise.
    if acc < 0.0 && acc > -1e-10 {
        0.0
    } else {
        acc
    }
}

/// A local projective measurement direction on the Bloch sphere,
/// n = (sin t cos p, sin t sin p, cos t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementBasis {
    theta: f64,
    phi: f64,
}

/// Measurement outcome, labelling the projector (I +/- n.sigma)/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];
}

impl MeasurementBasis {
    /// Expected ranges: theta in [0, pi), phi in [0, 2 pi). Values outside
    /// still describe a valid direction and are accepted as-is.
    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn bloch_vector(&self) -> [f64; 3] {
        [
            self.theta.sin() * self.phi.cos(),
            self.theta.sin() * self.phi.sin(),
            self.theta.cos(),
        ]
    }

    /// The pair of projectors (I + n.sigma)/2, (I - n.sigma)/2.
    pub fn projectors(&self) -> (M2, M2) {
        let n = self.bloch_vector();
        let mut ns = M2::zeros();
        for (i, &ni) in n.iter().enumerate() {
            ns += pauli(i + 1) * C64::new(ni, 0.0);
        }
        let half = C64::new(0.5, 0.0);
        let id = identity2();
        ((id + ns) * half, (id - ns) * half)
    }

    pub fn projector(&self, outcome: Outcome) -> M2 {
        let (p1, p2) = self.projectors();
        match outcome {
            Outcome::Plus => p1,
            Outcome::Minus => p2,
        }
    }
}

/// Projective measurement on subsystem B: returns the conditional state of
/// A and the outcome probability,
/// rho_{A|k} = Tr_B(Pi_k rho Pi_k) / p_k,  p_k = Tr(Pi_k rho Pi_k).
///
/// Outcomes with probability below [`ZERO_PROBABILITY_TOL`] yield
/// `Error::ZeroProbability`; the caller skips the term.
pub fn measurement_update(
    rho: &DensityMatrix4,
    basis: &MeasurementBasis,
    outcome: Outcome,
) -> Result<(DensityMatrix2, f64)> {
    let pi_b = identity2().kronecker(&basis.projector(outcome));
    let projected = pi_b * rho.matrix() * pi_b;
    let p = projected.trace().re;
    if p < ZERO_PROBABILITY_TOL {
        return Err(Error::ZeroProbability(ZERO_PROBABILITY_TOL));
    }
    let wrapped = DensityMatrix4(projected / C64::new(p, 0.0));
    Ok((wrapped.partial_trace(Subsystem::A), p))
}

/// Normalized Bell kets in the |ab> = 2a + b convention.
pub fn bell_ket(label: crate::correlations::BellLabel) -> Vector4<C64> {
    use crate::correlations::BellLabel::*;
    let r = 1.0 / 2.0_f64.sqrt();
    let c = C64::new(r, 0.0);
    match label {
        PhiPlus => Vector4::new(c, ZERO, ZERO, c),
        PhiMinus => Vector4::new(c, ZERO, ZERO, -c),
        PsiPlus => Vector4::new(ZERO, c, c, ZERO),
        PsiMinus => Vector4::new(ZERO, c, -c, ZERO),
    }
}

/// Single-qubit computational basis kets.
pub fn ket0() -> Vector2<C64> {
    Vector2::new(RE1, ZERO)
}

pub fn ket1() -> Vector2<C64> {
    Vector2::new(ZERO, RE1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlations::BellLabel;
    use approx::assert_abs_diff_eq;
    use nalgebra::Vector4;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ket00_dm() -> DensityMatrix4 {
        let mut v = Vector4::zeros();
        v[0] = RE1;
        DensityMatrix4::from_ket(&v).unwrap()
    }

    fn phi_plus_dm() -> DensityMatrix4 {
        DensityMatrix4::from_ket(&bell_ket(BellLabel::PhiPlus)).unwrap()
    }

    /// Haar-ish random unitary from QR of a Ginibre matrix.
    fn random_unitary4(rng: &mut ChaCha8Rng) -> M4 {
        let g = M4::from_fn(|_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let qr = g.qr();
        qr.q()
    }

    fn random_unitary2(rng: &mut ChaCha8Rng) -> M2 {
        let g = M2::from_fn(|_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        g.qr().q()
    }

    fn random_density4(rng: &mut ChaCha8Rng) -> DensityMatrix4 {
        let g = M4::from_fn(|_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let m = g * g.adjoint();
        let m = (m + m.adjoint()) * C64::new(0.5, 0.0);
        let tr = m.trace().re;
        DensityMatrix4::new(m / C64::new(tr, 0.0)).unwrap()
    }

    #[test]
    fn entropy_of_pure_state_is_zero() {
        assert_abs_diff_eq!(ket00_dm().von_neumann_entropy(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn entropy_of_maximally_mixed_is_two_bits() {
        assert_abs_diff_eq!(
            DensityMatrix4::maximally_mixed().von_neumann_entropy(),
            2.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn entropy_matches_direct_eigenvalue_sum() {
        // Bell-diagonal with eigenvalues (0.4, 0.4, 0.1, 0.1)
        let mut m = M4::zeros();
        let weights = [0.4, 0.4, 0.1, 0.1];
        let labels = [
            BellLabel::PhiPlus,
            BellLabel::PhiMinus,
            BellLabel::PsiPlus,
            BellLabel::PsiMinus,
        ];
        for (w, l) in weights.iter().zip(labels) {
            let k = bell_ket(l);
            m += (k * k.adjoint()) * C64::new(*w, 0.0);
        }
        let rho = DensityMatrix4::new(m).unwrap();
        let expected = -(0.8 * 0.4_f64.log2() + 0.2 * 0.1_f64.log2());
        assert_abs_diff_eq!(rho.von_neumann_entropy(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(expected, 1.721928, epsilon = 1e-6);
    }

    #[test]
    fn entropy_is_unitarily_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let rho = random_density4(&mut rng);
            let u = random_unitary4(&mut rng);
            let rotated = DensityMatrix4::new(u * rho.matrix() * u.adjoint()).unwrap();
            assert_abs_diff_eq!(
                rho.von_neumann_entropy(),
                rotated.von_neumann_entropy(),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn partial_trace_of_product_recovers_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = random_unitary2(&mut rng);
        let diag = M2::new(C64::new(0.7, 0.0), ZERO, ZERO, C64::new(0.3, 0.0));
        let a = DensityMatrix2::new(u * diag * u.adjoint()).unwrap();
        let b = DensityMatrix2::maximally_mixed();
        let prod = DensityMatrix4::product(&a, &b);
        let back = prod.partial_trace(Subsystem::A);
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(
                    (back.matrix()[(i, j)] - a.matrix()[(i, j)]).norm(),
                    0.0,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        let red = phi_plus_dm().partial_trace(Subsystem::B);
        for i in 0..2 {
            for j in 0..2 {
                let expected = if i == j { 0.5 } else { 0.0 };
                assert_abs_diff_eq!(red.matrix()[(i, j)].re, expected, epsilon = 1e-12);
                assert_abs_diff_eq!(red.matrix()[(i, j)].im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn partial_trace_is_trace_preserving_and_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let r1 = random_density4(&mut rng);
        let r2 = random_density4(&mut rng);
        let mix = DensityMatrix4::new(
            r1.matrix() * C64::new(0.25, 0.0) + r2.matrix() * C64::new(0.75, 0.0),
        )
        .unwrap();
        for keep in [Subsystem::A, Subsystem::B] {
            let pt = mix.partial_trace(keep);
            assert_abs_diff_eq!(pt.matrix().trace().re, 1.0, epsilon = 1e-12);
            let lin = r1.partial_trace(keep).matrix() * C64::new(0.25, 0.0)
                + r2.partial_trace(keep).matrix() * C64::new(0.75, 0.0);
            for i in 0..2 {
                for j in 0..2 {
                    assert_abs_diff_eq!(
                        (pt.matrix()[(i, j)] - lin[(i, j)]).norm(),
                        0.0,
                        epsilon = 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn relative_entropy_identity_case_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let rho = random_density4(&mut rng);
        assert_abs_diff_eq!(relative_entropy(&rho, &rho), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn relative_entropy_bell_vs_mixed_is_two() {
        let d = relative_entropy(&phi_plus_dm(), &DensityMatrix4::maximally_mixed());
        assert_abs_diff_eq!(d, 2.0, epsilon = 1e-10);
    }

    #[test]
    fn relative_entropy_support_violation_is_infinite() {
        let d = relative_entropy(&DensityMatrix4::maximally_mixed(), &phi_plus_dm());
        assert!(d.is_infinite());
    }

    #[test]
    fn relative_entropy_nonnegative_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..30 {
            let r1 = random_density4(&mut rng);
            let r2 = random_density4(&mut rng);
            assert!(relative_entropy(&r1, &r2) >= 0.0);
        }
    }

    #[test]
    fn measurement_on_maximally_mixed_is_uniform() {
        let rho = DensityMatrix4::maximally_mixed();
        let basis = MeasurementBasis::new(0.87, 1.23);
        for outcome in Outcome::BOTH {
            let (cond, p) = measurement_update(&rho, &basis, outcome).unwrap();
            assert_abs_diff_eq!(p, 0.5, epsilon = 1e-12);
            assert_abs_diff_eq!(cond.matrix()[(0, 0)].re, 0.5, epsilon = 1e-12);
            assert_abs_diff_eq!(cond.matrix()[(0, 1)].norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn bell_state_measured_in_z_collapses_a() {
        // theta = 0 is the sigma_z basis; outcome Plus projects B onto |0>,
        // leaving A in |0><0| with probability 1/2.
        let basis = MeasurementBasis::new(0.0, 0.0);
        let (cond, p) = measurement_update(&phi_plus_dm(), &basis, Outcome::Plus).unwrap();
        assert_abs_diff_eq!(p, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(cond.matrix()[(0, 0)].re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cond.matrix()[(1, 1)].re, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn product_state_conditionals_equal_marginal() {
        let a = DensityMatrix2::new(M2::new(
            C64::new(0.8, 0.0),
            C64::new(0.1, 0.05),
            C64::new(0.1, -0.05),
            C64::new(0.2, 0.0),
        ))
        .unwrap();
        let b = DensityMatrix2::maximally_mixed();
        let rho = DensityMatrix4::product(&a, &b);
        let basis = MeasurementBasis::new(1.1, 2.2);
        for outcome in Outcome::BOTH {
            let (cond, _) = measurement_update(&rho, &basis, outcome).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    assert_abs_diff_eq!(
                        (cond.matrix()[(i, j)] - a.matrix()[(i, j)]).norm(),
                        0.0,
                        epsilon = 1e-10
                    );
                }
            }
        }
    }

    #[test]
    fn no_signalling_consistency() {
        // sum_k p_k = 1 and sum_k p_k rho_{A|k} = rho_A
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let rho = random_density4(&mut rng);
            let basis = MeasurementBasis::new(
                rng.random::<f64>() * std::f64::consts::PI,
                rng.random::<f64>() * std::f64::consts::TAU,
            );
            let mut total_p = 0.0;
            let mut avg = M2::zeros();
            for outcome in Outcome::BOTH {
                let (cond, p) = measurement_update(&rho, &basis, outcome).unwrap();
                total_p += p;
                avg += cond.matrix() * C64::new(p, 0.0);
            }
            assert_abs_diff_eq!(total_p, 1.0, epsilon = 1e-10);
            let marginal = rho.partial_trace(Subsystem::A);
            for i in 0..2 {
                for j in 0..2 {
                    assert_abs_diff_eq!(
                        (avg[(i, j)] - marginal.matrix()[(i, j)]).norm(),
                        0.0,
                        epsilon = 1e-10
                    );
                }
            }
        }
    }

    #[test]
    fn projector_algebra_holds() {
        let basis = MeasurementBasis::new(0.73, 4.2);
        let (p1, p2) = basis.projectors();
        let id = identity2();
        assert!(hermiticity_deviation(&p1) < 1e-12);
        let sum = p1 + p2;
        let idem = p1 * p1 - p1;
        let orth = p1 * p2;
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!((sum[(i, j)] - id[(i, j)]).norm(), 0.0, epsilon = 1e-12);
                assert_abs_diff_eq!(idem[(i, j)].norm(), 0.0, epsilon = 1e-12);
                assert_abs_diff_eq!(orth[(i, j)].norm(), 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn invalid_states_are_rejected() {
        // trace != 1
        assert!(DensityMatrix4::new(M4::identity()).is_err());
        // not Hermitian
        let mut m = M4::identity() * C64::new(0.25, 0.0);
        m[(0, 1)] = C64::new(0.0, 0.3);
        assert!(DensityMatrix4::new(m).is_err());
        // negative eigenvalue
        let mut m = M4::zeros();
        m[(0, 0)] = C64::new(1.2, 0.0);
        m[(1, 1)] = C64::new(-0.2, 0.0);
        assert!(DensityMatrix4::new(m).is_err());
    }

    #[test]
    fn zero_probability_outcome_is_flagged() {
        let rho = ket00_dm();
        // B is |0>; projecting B onto |1> has probability 0.
        let basis = MeasurementBasis::new(0.0, 0.0);
        let res = measurement_update(&rho, &basis, Outcome::Minus);
        assert!(matches!(res, Err(Error::ZeroProbability(_))));
    }
}
