//! Total, classical and quantum correlations of two-qubit states.
//!
//! For Bell-diagonal states the closed forms
//!
//! ```text
//! I = 2 + sum_k lambda_k log2 lambda_k
//! C = [(1+X) log2(1+X) + (1-X) log2(1-X)] / 2,   X = max |c_i|
//! Q = I - C
//! ```
//!
//! are the production path. A brute-force optimizer over projective
//! measurements on subsystem B serves as the independent oracle for
//! general states.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qops::{
    measurement_update, pauli, xlog2x, DensityMatrix4, MeasurementBasis, Outcome, Subsystem, C64,
    M4,
};

/// Bell-diagonal eigenvalues may round slightly negative.
pub const STATE_EIGENVALUE_FLOOR: f64 = -1e-12;

/// The four Bell projectors, in the fixed order used throughout:
/// `[PhiPlus, PhiMinus, PsiPlus, PsiMinus]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BellLabel {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellLabel {
    pub const ALL: [BellLabel; 4] = [
        BellLabel::PhiPlus,
        BellLabel::PhiMinus,
        BellLabel::PsiPlus,
        BellLabel::PsiMinus,
    ];

    pub fn symbol(&self) -> &'static str {
        match self {
            BellLabel::PhiPlus => "phi+",
            BellLabel::PhiMinus => "phi-",
            BellLabel::PsiPlus => "psi+",
            BellLabel::PsiMinus => "psi-",
        }
    }
}

/// A two-qubit Bell-diagonal state, parameterized by the three correlation
/// coefficients c_i = <sigma_i (x) sigma_i>.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BellDiagonalState {
    c1: f64,
    c2: f64,
    c3: f64,
}

impl BellDiagonalState {
    pub fn new(c1: f64, c2: f64, c3: f64) -> Result<Self> {
        let state = Self { c1, c2, c3 };
        for (i, c) in state.coefficients().iter().enumerate() {
            if !c.is_finite() || c.abs() > 1.0 + 1e-15 {
                return Err(Error::InvalidCoefficients {
                    c1,
                    c2,
                    c3,
                    reason: format!("|c{}| = {} exceeds 1", i + 1, c.abs()),
                });
            }
        }
        for (label, ev) in BellLabel::ALL.iter().zip(state.eigenvalues()) {
            if ev < STATE_EIGENVALUE_FLOOR {
                return Err(Error::InvalidCoefficients {
                    c1,
                    c2,
                    c3,
                    reason: format!("eigenvalue on {} is {ev:e} < 0", label.symbol()),
                });
            }
        }
        Ok(state)
    }

    /// Reconstruct from the four Bell weights in [`BellLabel::ALL`] order.
    pub fn from_bell_weights(weights: [f64; 4]) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter {
                name: "weights",
                reason: format!("sum {sum} != 1"),
            });
        }
        let [lpp, lpm, lsp, lsm] = weights;
        let dphi = lpp - lpm;
        let dpsi = lsp - lsm;
        Self::new(dphi + dpsi, dpsi - dphi, (lpp + lpm) - (lsp + lsm))
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn c3(&self) -> f64 {
        self.c3
    }

    pub fn coefficients(&self) -> [f64; 3] {
        [self.c1, self.c2, self.c3]
    }

    /// Bell-basis eigenvalues in [`BellLabel::ALL`] order:
    /// lambda_phi^pm = (1 +- c1 -+ c2 + c3)/4, lambda_psi^pm = (1 +- c1 +- c2 - c3)/4.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let Self { c1, c2, c3 } = *self;
        [
            (1.0 + c1 - c2 + c3) / 4.0,
            (1.0 - c1 + c2 + c3) / 4.0,
            (1.0 + c1 + c2 - c3) / 4.0,
            (1.0 - c1 - c2 - c3) / 4.0,
        ]
    }

    /// X = max{|c1|, |c2|, |c3|}.
    pub fn chi(&self) -> f64 {
        self.c1.abs().max(self.c2.abs()).max(self.c3.abs())
    }

    /// Index (0-based) of the coefficient realizing chi; ties resolve to
    /// the smallest index.
    pub fn dominant_coefficient(&self) -> usize {
        let abs = [self.c1.abs(), self.c2.abs(), self.c3.abs()];
        let mut best = 0;
        for i in 1..3 {
            if abs[i] > abs[best] {
                best = i;
            }
        }
        best
    }

    /// rho = (I + sum_i c_i sigma_i (x) sigma_i) / 4.
    pub fn to_density_matrix(&self) -> DensityMatrix4 {
        let mut m = M4::identity();
        for (i, c) in self.coefficients().iter().enumerate() {
            let s = pauli(i + 1);
            m += s.kronecker(&s) * C64::new(*c, 0.0);
        }
        DensityMatrix4::new(m * C64::new(0.25, 0.0))
            .expect("valid coefficients produce a valid density matrix")
    }

    /// Inverse of [`to_density_matrix`]: c_i = Tr(rho sigma_i (x) sigma_i).
    /// Fails when `rho` is not Bell-diagonal within 1e-10.
    pub fn from_density_matrix(rho: &DensityMatrix4) -> Result<Self> {
        let mut c = [0.0; 3];
        for (i, ci) in c.iter_mut().enumerate() {
            let s = pauli(i + 1);
            *ci = (s.kronecker(&s) * rho.matrix()).trace().re;
        }
        let state = Self::new(c[0], c[1], c[2])?;
        let back = state.to_density_matrix();
        let mut dev: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                dev = dev.max((back.matrix()[(i, j)] - rho.matrix()[(i, j)]).norm());
            }
        }
        if dev > 1e-10 {
            return Err(Error::InvalidState(format!(
                "matrix is not Bell-diagonal: reconstruction deviates by {dev:e}"
            )));
        }
        Ok(state)
    }
}

/// Mutual information, classical correlations and discord, in bits.
/// I = C + Q holds by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationTriple {
    pub mutual_info: f64,
    pub classical: f64,
    pub discord: f64,
}

/// [(1+x) log2(1+x) + (1-x) log2(1-x)] / 2 for x in [0, 1].
///
/// This is both the Bell-diagonal classical-correlation function of
/// X = max |c_i| and the frozen-discord value as a function of c.
pub fn binary_correlation(x: f64) -> f64 {
    0.5 * (xlog2x(1.0 + x) + xlog2x(1.0 - x))
}

/// Closed-form correlations of a Bell-diagonal state.
pub fn bell_diagonal_correlations(state: &BellDiagonalState) -> CorrelationTriple {
    let mutual_info = 2.0 + state.eigenvalues().iter().map(|&l| xlog2x(l.max(0.0))).sum::<f64>();
    let classical = binary_correlation(state.chi());
    let discord = mutual_info - classical;
    debug_assert!(discord >= -1e-10, "discord {discord} < 0");
    CorrelationTriple {
        mutual_info,
        classical,
        discord,
    }
}

/// Resolution of the (theta, phi) measurement search grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeasurementGrid {
    pub theta_points: usize,
    pub phi_points: usize,
}

impl Default for MeasurementGrid {
    fn default() -> Self {
        Self {
            theta_points: 64,
            phi_points: 128,
        }
    }
}

/// J(theta, phi) = S(rho_A) - sum_k p_k S(rho_{A|k}) for a projective
/// measurement on B along (theta, phi).
fn measured_information(rho: &DensityMatrix4, basis: &MeasurementBasis, s_a: f64) -> f64 {
    let mut conditional = 0.0;
    for outcome in Outcome::BOTH {
        match measurement_update(rho, basis, outcome) {
            Ok((cond, p)) => conditional += p * cond.von_neumann_entropy(),
            Err(Error::ZeroProbability(_)) => {}
            Err(_) => unreachable!("measurement_update only fails on zero probability"),
        }
    }
    s_a - conditional
}

/// Nelder-Mead maximization in two variables; returns the best value found.
fn nelder_mead_max<F: Fn(f64, f64) -> f64>(
    f: F,
    start: (f64, f64),
    step: (f64, f64),
    max_iter: usize,
    tol: f64,
) -> f64 {
    let mut simplex = [
        (start.0, start.1),
        (start.0 + step.0, start.1),
        (start.0, start.1 + step.1),
    ];
    let mut values = simplex.map(|(t, p)| f(t, p));

    for _ in 0..max_iter {
        // sort descending by value (index 0 = best, 2 = worst)
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap());
        simplex = order.map(|i| simplex[i]);
        values = order.map(|i| values[i]);

        if values[0] - values[2] < tol {
            break;
        }

        let centroid = (
            0.5 * (simplex[0].0 + simplex[1].0),
            0.5 * (simplex[0].1 + simplex[1].1),
        );
        let worst = simplex[2];
        let reflect = (
            centroid.0 + (centroid.0 - worst.0),
            centroid.1 + (centroid.1 - worst.1),
        );
        let f_reflect = f(reflect.0, reflect.1);

        if f_reflect > values[0] {
            let expand = (
                centroid.0 + 2.0 * (centroid.0 - worst.0),
                centroid.1 + 2.0 * (centroid.1 - worst.1),
            );
            let f_expand = f(expand.0, expand.1);
            if f_expand > f_reflect {
                simplex[2] = expand;
                values[2] = f_expand;
            } else {
                simplex[2] = reflect;
                values[2] = f_reflect;
            }
        } else if f_reflect > values[1] {
            simplex[2] = reflect;
            values[2] = f_reflect;
        } else {
            let contract = (
                centroid.0 + 0.5 * (worst.0 - centroid.0),
                centroid.1 + 0.5 * (worst.1 - centroid.1),
            );
            let f_contract = f(contract.0, contract.1);
            if f_contract > values[2] {
                simplex[2] = contract;
                values[2] = f_contract;
            } else {
                // shrink toward the best vertex
                for i in 1..3 {
                    simplex[i] = (
                        0.5 * (simplex[i].0 + simplex[0].0),
                        0.5 * (simplex[i].1 + simplex[0].1),
                    );
                    values[i] = f(simplex[i].0, simplex[i].1);
                }
            }
        }
    }
    values.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Brute-force correlations of an arbitrary two-qubit state: classical
/// correlations maximized over a uniform (theta, phi) grid followed by
/// local simplex refinement from the best grid point.
///
/// Grid evaluation parallelizes over rows; the result is deterministic,
/// with grid ties broken by the lexicographically smallest (theta, phi).
pub fn discord_bruteforce(
    rho: &DensityMatrix4,
    grid: &MeasurementGrid,
) -> Result<CorrelationTriple> {
    let default = MeasurementGrid::default();
    if grid.theta_points < default.theta_points || grid.phi_points < default.phi_points {
        return Err(Error::InvalidParameter {
            name: "grid",
            reason: format!(
                "resolution {}x{} below minimum {}x{}",
                grid.theta_points, grid.phi_points, default.theta_points, default.phi_points
            ),
        });
    }

    let s_a = rho.partial_trace(Subsystem::A).von_neumann_entropy();
    let s_b = rho.partial_trace(Subsystem::B).von_neumann_entropy();
    let s_ab = rho.von_neumann_entropy();
    let mutual_info = s_a + s_b - s_ab;

    let d_theta = std::f64::consts::PI / grid.theta_points as f64;
    let d_phi = std::f64::consts::TAU / grid.phi_points as f64;

    let best = (0..grid.theta_points)
        .into_par_iter()
        .map(|ti| {
            let theta = ti as f64 * d_theta;
            let mut row_best = (f64::NEG_INFINITY, ti, 0usize);
            for pi in 0..grid.phi_points {
                let phi = pi as f64 * d_phi;
                let j = measured_information(rho, &MeasurementBasis::new(theta, phi), s_a);
                if j > row_best.0 {
                    row_best = (j, ti, pi);
                }
            }
            row_best
        })
        .reduce(
            || (f64::NEG_INFINITY, usize::MAX, usize::MAX),
            |a, b| {
                if a.0 > b.0 || (a.0 == b.0 && (a.1, a.2) < (b.1, b.2)) {
                    a
                } else {
                    b
                }
            },
        );

    let start = (best.1 as f64 * d_theta, best.2 as f64 * d_phi);
    let refined = nelder_mead_max(
        |t, p| measured_information(rho, &MeasurementBasis::new(t, p), s_a),
        start,
        (d_theta, d_phi),
        200,
        1e-10,
    );
    let classical = best.0.max(refined);

    Ok(CorrelationTriple {
        mutual_info,
        classical,
        discord: mutual_info - classical,
    })
}

/// The zero-discord Bell-diagonal state closest (in relative entropy) to a
/// given one: weight q/2 on each of the two Bell projectors with the
/// largest eigenvalues, (1-q)/2 on the other two.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosestClassicalState {
    /// q = lambda_1 + lambda_2, the sum of the two greatest eigenvalues.
    pub q: f64,
    /// The two Bell projectors carrying weight q/2 each.
    pub dominant_pair: [BellLabel; 2],
}

impl ClosestClassicalState {
    pub fn reconstruct(&self) -> BellDiagonalState {
        let mut weights = [0.0; 4];
        for (i, label) in BellLabel::ALL.iter().enumerate() {
            weights[i] = if self.dominant_pair.contains(label) {
                self.q / 2.0
            } else {
                (1.0 - self.q) / 2.0
            };
        }
        BellDiagonalState::from_bell_weights(weights)
            .expect("closest classical weights form a valid state")
    }
}

/// Result of the closest-classical-state search. At an exact eigenvalue
/// crossing (lambda_2 = lambda_3 within 1e-12) two classical states sit at
/// equal distance and both are reported.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ClosestClassical {
    Unique(ClosestClassicalState),
    Degenerate(ClosestClassicalState, ClosestClassicalState),
}

impl ClosestClassical {
    pub fn primary(&self) -> &ClosestClassicalState {
        match self {
            ClosestClassical::Unique(s) => s,
            ClosestClassical::Degenerate(s, _) => s,
        }
    }
}

pub const EIGENVALUE_CROSSING_TOL: f64 = 1e-12;

pub fn closest_classical_state(state: &BellDiagonalState) -> ClosestClassical {
    let mut ranked: Vec<(f64, BellLabel)> = state
        .eigenvalues()
        .iter()
        .copied()
        .zip(BellLabel::ALL)
        .collect();
    // descending by eigenvalue, ties by label order for determinism
    ranked.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));

    let q = ranked[0].0 + ranked[1].0;
    let first = ClosestClassicalState {
        q,
        dominant_pair: [ranked[0].1, ranked[1].1],
    };
    if (ranked[1].0 - ranked[2].0).abs() < EIGENVALUE_CROSSING_TOL {
        let second = ClosestClassicalState {
            q: ranked[0].0 + ranked[2].0,
            dominant_pair: [ranked[0].1, ranked[2].1],
        };
        ClosestClassical::Degenerate(first, second)
    } else {
        ClosestClassical::Unique(first)
    }
}

/// Relative entropy of entanglement of a Bell-diagonal state:
/// E = 1 + lambda_1 log2 lambda_1 + (1-lambda_1) log2(1-lambda_1) for
/// lambda_1 > 1/2, and 0 otherwise (the state is separable).
pub fn relative_entropy_entanglement(state: &BellDiagonalState) -> f64 {
    let lambda1 = state
        .eigenvalues()
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    if lambda1 <= 0.5 {
        0.0
    } else {
        1.0 + xlog2x(lambda1) + xlog2x(1.0 - lambda1)
    }
}
