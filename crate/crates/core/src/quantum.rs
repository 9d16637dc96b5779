//! Finite-dimensional complex operator algebra: projection valued measures,
//! tensor products, the quantum commuting and quantum spatial strategy
//! evaluators, and the angular CHSH strategy.

use crate::error::{Error, Result};
use crate::games::{BareStrategy, GameValue};
use crate::linalg::{dot, norm, Mat, C64};

/// Structural tolerance for projections and wavefunctions.
pub const PVM_TOL: f64 = 1e-10;
/// Commutator gate for the commuting evaluator (operator norm).
pub const COMMUTATOR_TOL: f64 = 1e-8;

/// Pairwise-orthogonal projections summing to the identity.
#[derive(Debug, Clone)]
pub struct ProjectionValuedMeasure {
    projections: Vec<Mat>,
}

impl ProjectionValuedMeasure {
    pub fn new(projections: Vec<Mat>) -> Result<Self> {
        let pvm = ProjectionValuedMeasure { projections };
        pvm.validate(PVM_TOL)?;
        Ok(pvm)
    }

    /// Builds without validating; used by constructions that are projections
    /// by design and validated in tests.
    pub fn from_projections_unchecked(projections: Vec<Mat>) -> Self {
        ProjectionValuedMeasure { projections }
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        if self.projections.is_empty() {
            return Err(Error::InvalidPvm("no projections".into()));
        }
        let d = self.projections[0].rows();
        for (i, p) in self.projections.iter().enumerate() {
            if p.rows() != d || p.cols() != d {
                return Err(Error::InvalidPvm(format!("projection {i} has mismatched shape")));
            }
            if !p.is_hermitian(tol) {
                return Err(Error::InvalidPvm(format!("projection {i} is not Hermitian")));
            }
            let idem = p.matmul(p).max_abs_diff(p);
            if idem > tol {
                return Err(Error::InvalidPvm(format!(
                    "projection {i} is not idempotent (residual {idem:.3e})"
                )));
            }
        }
        for i in 0..self.projections.len() {
            for j in (i + 1)..self.projections.len() {
                let prod = self.projections[i].matmul(&self.projections[j]).max_abs();
                if prod > tol {
                    return Err(Error::InvalidPvm(format!(
                        "projections {i} and {j} are not orthogonal (residual {prod:.3e})"
                    )));
                }
            }
        }
        let mut sum = Mat::zeros(d, d);
        for p in &self.projections {
            sum = sum.add(p);
        }
        let resid = sum.max_abs_diff(&Mat::identity(d));
        if resid > tol {
            return Err(Error::InvalidPvm(format!(
                "projections do not sum to the identity (residual {resid:.3e})"
            )));
        }
        Ok(())
    }

    pub fn outcomes(&self) -> usize {
        self.projections.len()
    }

    pub fn dimension(&self) -> usize {
        self.projections[0].rows()
    }

    pub fn projection(&self, i: usize) -> &Mat {
        &self.projections[i]
    }

    pub fn projections(&self) -> &[Mat] {
        &self.projections
    }
}

/// A unit vector.
#[derive(Debug, Clone)]
pub struct Wavefunction {
    amplitudes: Vec<C64>,
}

impl Wavefunction {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let n = norm(&amplitudes);
        if (n - 1.0).abs() > PVM_TOL {
            return Err(Error::NotNormalized { norm: n });
        }
        Ok(Wavefunction { amplitudes })
    }

    pub fn normalized(mut amplitudes: Vec<C64>) -> Result<Self> {
        let n = norm(&amplitudes);
        if n == 0.0 {
            return Err(Error::NotNormalized { norm: 0.0 });
        }
        amplitudes.iter_mut().for_each(|a| *a /= n);
        Ok(Wavefunction { amplitudes })
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }
}

/// Kronecker product of two operators.
pub fn tensor(a: &Mat, b: &Mat) -> Mat {
    a.kron(b)
}

/// Applies A ⊗ B to a vector on the product space without materializing the
/// Kronecker product: reshape, multiply on both sides, flatten.
fn apply_kron(a: &Mat, b: &Mat, psi: &[C64]) -> Vec<C64> {
    let (dh, dk) = (a.rows(), b.rows());
    assert_eq!(psi.len(), dh * dk);
    let m = Mat::from_fn(dh, dk, |i, j| psi[i * dk + j]);
    let am = a.matmul(&m);
    // (A ⊗ B) psi = A M B^T, flattened row-major.
    let amb = am.matmul(&b.transpose());
    let mut out = vec![C64::new(0.0, 0.0); dh * dk];
    for i in 0..dh {
        for j in 0..dk {
            out[i * dk + j] = amb[(i, j)];
        }
    }
    out
}

/// Quantum commuting evaluation: p_{x,y}(a,b) = <A^x_a psi, B^y_b psi> for
/// commuting PVM families on a common space.
pub fn eval_quantum_commuting(
    pvms_a: &[ProjectionValuedMeasure],
    pvms_b: &[ProjectionValuedMeasure],
    psi: &Wavefunction,
) -> Result<BareStrategy> {
    let d = psi.dimension();
    for pvm in pvms_a.iter().chain(pvms_b) {
        if pvm.dimension() != d {
            return Err(Error::DimensionMismatch(format!(
                "PVM dimension {} does not match wavefunction dimension {d}",
                pvm.dimension()
            )));
        }
    }
    for (x, pa) in pvms_a.iter().enumerate() {
        for (y, pb) in pvms_b.iter().enumerate() {
            for a in 0..pa.outcomes() {
                for b in 0..pb.outcomes() {
                    let comm = pa.projection(a).commutator(pb.projection(b));
                    let norm = comm.operator_norm();
                    if norm > COMMUTATOR_TOL {
                        return Err(Error::NonCommuting { x, y, a, b, norm });
                    }
                }
            }
        }
    }

    let mut tables = Vec::with_capacity(pvms_a.len());
    for pa in pvms_a {
        let a_psi: Vec<Vec<C64>> =
            (0..pa.outcomes()).map(|a| pa.projection(a).apply(psi.amplitudes())).collect();
        let mut row = Vec::with_capacity(pvms_b.len());
        for pb in pvms_b {
            let b_psi: Vec<Vec<C64>> =
                (0..pb.outcomes()).map(|b| pb.projection(b).apply(psi.amplitudes())).collect();
            let table: Vec<Vec<f64>> = a_psi
                .iter()
                .map(|ap| b_psi.iter().map(|bp| dot(ap, bp).re).collect())
                .collect();
            row.push(table);
        }
        tables.push(row);
    }
    let strategy = BareStrategy::from_tables(tables);
    strategy.validate(crate::games::STRUCT_TOL)?;
    Ok(strategy)
}

/// Quantum spatial evaluation: p_{x,y}(a,b) = <(A_x^a ⊗ B_y^b) psi, psi>.
pub fn eval_quantum_spatial(
    pvms_a: &[ProjectionValuedMeasure],
    pvms_b: &[ProjectionValuedMeasure],
    psi: &Wavefunction,
) -> Result<BareStrategy> {
    let dh = pvms_a.first().map(|p| p.dimension()).unwrap_or(0);
    let dk = pvms_b.first().map(|p| p.dimension()).unwrap_or(0);
    if pvms_a.iter().any(|p| p.dimension() != dh) || pvms_b.iter().any(|p| p.dimension() != dk) {
        return Err(Error::DimensionMismatch("PVM dimensions differ within a family".into()));
    }
    if psi.dimension() != dh * dk {
        return Err(Error::DimensionMismatch(format!(
            "wavefunction dimension {} is not {dh}*{dk}",
            psi.dimension()
        )));
    }

    let mut tables = Vec::with_capacity(pvms_a.len());
    for pa in pvms_a {
        let mut row = Vec::with_capacity(pvms_b.len());
        for pb in pvms_b {
            let table: Vec<Vec<f64>> = (0..pa.outcomes())
                .map(|a| {
                    (0..pb.outcomes())
                        .map(|b| {
                            let v = apply_kron(pa.projection(a), pb.projection(b), psi.amplitudes());
                            dot(&v, psi.amplitudes()).re
                        })
                        .collect()
                })
                .collect();
            row.push(table);
        }
        tables.push(row);
    }
    let strategy = BareStrategy::from_tables(tables);
    strategy.validate(crate::games::STRUCT_TOL)?;
    Ok(strategy)
}

/// The two angle functions of an angular CHSH strategy.
#[derive(Debug, Clone, Copy)]
pub struct AngularAssignment {
    pub theta: [f64; 2],
    pub eta: [f64; 2],
}

impl AngularAssignment {
    pub fn new(theta: [f64; 2], eta: [f64; 2]) -> Self {
        AngularAssignment { theta, eta }
    }

    /// The optimal angles (0, pi/3, pi/6, -pi/6): game value 13/16.
    pub fn optimal() -> Self {
        use std::f64::consts::PI;
        AngularAssignment { theta: [0.0, PI / 3.0], eta: [PI / 6.0, -PI / 6.0] }
    }
}

/// Rank-one projection onto (cos theta, sin theta).
pub fn angle_projector(theta: f64) -> Mat {
    let (c, s) = (theta.cos(), theta.sin());
    Mat::from_real_rows(vec![vec![c * c, c * s], vec![c * s, s * s]])
}

/// Rank-one projection onto (sin theta, -cos theta); complement of
/// [`angle_projector`], so the pair is a two-outcome PVM.
pub fn angle_projector_complement(theta: f64) -> Mat {
    let (c, s) = (theta.cos(), theta.sin());
    Mat::from_real_rows(vec![vec![s * s, -c * s], vec![-c * s, c * c]])
}

/// The PVM {q_theta, q̂_theta}.
pub fn angular_pvm(theta: f64) -> ProjectionValuedMeasure {
    ProjectionValuedMeasure::from_projections_unchecked(vec![
        angle_projector(theta),
        angle_projector_complement(theta),
    ])
}

/// The maximally correlated two-qubit state (i⊗i + j⊗j)/sqrt(2).
pub fn delta_wavefunction() -> Wavefunction {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    Wavefunction::new(vec![
        C64::new(r, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(r, 0.0),
    ])
    .expect("delta is a unit vector")
}

/// The angular CHSH strategy table, built from the rank-one projections and
/// the entangled state on R^2 ⊗ R^2.
pub fn angular_chsh_strategy(angles: &AngularAssignment) -> BareStrategy {
    let pvms_a: Vec<ProjectionValuedMeasure> =
        angles.theta.iter().map(|&t| angular_pvm(t)).collect();
    let pvms_b: Vec<ProjectionValuedMeasure> =
        angles.eta.iter().map(|&t| angular_pvm(t)).collect();
    eval_quantum_spatial(&pvms_a, &pvms_b, &delta_wavefunction())
        .expect("angular projections form valid PVMs")
}

/// CHSH value of an angular strategy in closed form:
/// (1/4)(cos²(η0-θ0) + cos²(η0-θ1) + cos²(θ0-η1) + sin²(θ1-η1)).
pub fn chsh_value_closed_form(angles: &AngularAssignment) -> GameValue {
    let [t0, t1] = angles.theta;
    let [e0, e1] = angles.eta;
    let c = |x: f64| x.cos().powi(2);
    let s = |x: f64| x.sin().powi(2);
    GameValue(0.25 * (c(e0 - t0) + c(e0 - t1) + c(t0 - e1) + s(t1 - e1)))
}

/// Schmidt decomposition data of a wavefunction on H ⊗ K.
#[derive(Debug, Clone)]
pub struct EntanglementReport {
    /// Nonzero singular values of the coefficient matrix, descending.
    pub schmidt_coefficients: Vec<f64>,
    pub l1_norm: f64,
    pub l2_norm: f64,
    /// True when the l1 norm does not exceed 1 (product-like decomposition).
    pub classical: bool,
}

pub fn schmidt_report(psi: &Wavefunction, d_h: usize, d_k: usize) -> Result<EntanglementReport> {
    if d_h * d_k != psi.dimension() {
        return Err(Error::DimensionMismatch(format!(
            "{}*{} != wavefunction dimension {}",
            d_h,
            d_k,
            psi.dimension()
        )));
    }
    let m = Mat::from_fn(d_h, d_k, |i, j| psi.amplitudes()[i * d_k + j]);
    let all = m.singular_values();
    let l2 = all.iter().map(|s| s * s).sum::<f64>().sqrt();
    // Singular values come from eigenvalues of the Gram matrix; filter at
    // the square-root scale of its numerical noise so that exact zeros do
    // not pollute the coefficient list or the l1 norm.
    let schmidt_coefficients: Vec<f64> = all.into_iter().filter(|&s| s > 1e-7).collect();
    let l1 = schmidt_coefficients.iter().sum::<f64>();
    Ok(EntanglementReport { schmidt_coefficients, l1_norm: l1, l2_norm: l2, classical: l1 <= 1.0 + 1e-9 })
}
