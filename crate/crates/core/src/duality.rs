//! The dual, dynamical picture: wheels from PVMs, orbit transformations
//! from observables, Koopman operators, local Fourier transforms,
//! eigenprojections, ergodic strategy evaluation, and the Fourier duality
//! between statistical tables and ergodic correlation tables.
//!
//! Orientation conventions, fixed once here and verified by the tests:
//! the transformation of an observable advances labels by one; the Koopman
//! operator is composition with the inverse; the eigenspace of e_n(-j)
//! under the Koopman operator of T is spanned per orbit by e_n(-j l(u))
//! where l counts backward iterates of T from the orbit's least atom. The
//! ergodic realization of a statistical instance keeps the observables'
//! transformations but transports the wavefunction by the per-block
//! unitary matching the Koopman eigenprojections to the observation-
//! operator differences; with that transport the correlation table is
//! exactly the 2D Fourier transform of the statistical table.

use crate::error::{Error, Result};
use crate::games::{fourier_transform_2d, DualCorrelationTable};
use crate::linalg::{character, projection_onto_span, Mat, C64};
use crate::observables::{
    check_consistency, observation_matrix, FiniteSampleSpace, Observable,
};
use crate::quantum::{ProjectionValuedMeasure, Wavefunction};

pub const WHEEL_TOL: f64 = 1e-10;

/// A measure-preserving permutation with all orbits of the same size.
#[derive(Debug, Clone)]
pub struct OrbitTransformation {
    permutation: Vec<usize>,
    orbit_size: usize,
    /// Orbits enumerated forward along T starting at the least atom.
    orbits: Vec<Vec<usize>>,
}

impl OrbitTransformation {
    pub fn new(space: &FiniteSampleSpace, permutation: Vec<usize>) -> Result<Self> {
        let atoms = space.atoms();
        if permutation.len() != atoms {
            return Err(Error::SpaceMismatch(format!(
                "permutation over {} atoms, space has {atoms}",
                permutation.len()
            )));
        }
        let mut hit = vec![false; atoms];
        for &v in &permutation {
            if v >= atoms || hit[v] {
                return Err(Error::NonUniformOrbits("not a permutation of the atoms".into()));
            }
            hit[v] = true;
        }
        let mut seen = vec![false; atoms];
        let mut orbits = Vec::new();
        let mut orbit_size = 0usize;
        for start in 0..atoms {
            if seen[start] {
                continue;
            }
            let mut orbit = vec![start];
            seen[start] = true;
            let mut u = permutation[start];
            while u != start {
                seen[u] = true;
                orbit.push(u);
                u = permutation[u];
            }
            if orbit_size == 0 {
                orbit_size = orbit.len();
            } else if orbit.len() != orbit_size {
                return Err(Error::NonUniformOrbits(format!(
                    "orbits of sizes {orbit_size} and {} coexist",
                    orbit.len()
                )));
            }
            let w0 = space.weight(orbit[0]);
            for &u in &orbit {
                if (space.weight(u) - w0).abs() > crate::observables::SPACE_TOL {
                    return Err(Error::NonUniformOrbits(
                        "weights are not constant along an orbit".into(),
                    ));
                }
            }
            orbits.push(orbit);
        }
        Ok(OrbitTransformation { permutation, orbit_size, orbits })
    }

    pub fn apply(&self, u: usize) -> usize {
        self.permutation[u]
    }

    pub fn apply_inverse(&self, u: usize) -> usize {
        // Orbits are short; walk around.
        let mut v = u;
        loop {
            let next = self.permutation[v];
            if next == u {
                return v;
            }
            v = next;
        }
    }

    pub fn orbit_size(&self) -> usize {
        self.orbit_size
    }

    pub fn atoms(&self) -> usize {
        self.permutation.len()
    }

    /// Orbits enumerated forward along T from each orbit's least atom.
    pub fn orbits(&self) -> &[Vec<usize>] {
        &self.orbits
    }

    pub fn inverse(&self) -> OrbitTransformation {
        let mut perm = vec![0usize; self.permutation.len()];
        for (u, &v) in self.permutation.iter().enumerate() {
            perm[v] = u;
        }
        let orbits = self
            .orbits
            .iter()
            .map(|orbit| {
                let mut rev = vec![orbit[0]];
                rev.extend(orbit[1..].iter().rev());
                rev
            })
            .collect();
        OrbitTransformation { permutation: perm, orbit_size: self.orbit_size, orbits }
    }

    pub fn commutes_with(&self, other: &OrbitTransformation) -> bool {
        self.permutation.len() == other.permutation.len()
            && (0..self.permutation.len())
                .all(|u| self.apply(other.apply(u)) == other.apply(self.apply(u)))
    }
}

/// The transformation rotating each class of `alpha` by one label step:
/// the atom labeled j goes to the atom labeled j+1 mod n.
pub fn observable_to_transformation(
    space: &FiniteSampleSpace,
    alpha: &Observable,
) -> OrbitTransformation {
    let n = alpha.resolution();
    let mut perm = vec![0usize; alpha.atoms()];
    for class in alpha.classes() {
        // classes() is ordered by label.
        for k in 0..n {
            perm[class[k]] = class[(k + 1) % n];
        }
    }
    OrbitTransformation::new(space, perm).expect("class rotation has uniform orbits")
}

/// The observable of a transformation: classes are orbits, labels follow T
/// forward from each orbit's least atom.
pub fn transformation_to_observable(
    space: &FiniteSampleSpace,
    t: &OrbitTransformation,
) -> Observable {
    let mut labels = vec![0usize; t.atoms()];
    for orbit in t.orbits() {
        for (pos, &u) in orbit.iter().enumerate() {
            labels[u] = pos;
        }
    }
    Observable::new(space, t.orbit_size(), t.orbits().to_vec(), labels)
        .expect("orbits form a valid observable")
}

/// The Koopman operator of T as a matrix: (K f)(u) = f(T^{-1} u). Since
/// weights are constant along orbits this permutation matrix is unitary in
/// both the weighted and the standard inner product.
pub fn koopman_matrix(t: &OrbitTransformation) -> Mat {
    let d = t.atoms();
    let mut k = Mat::zeros(d, d);
    for v in 0..d {
        k[(t.apply(v), v)] = C64::new(1.0, 0.0);
    }
    k
}

/// Backward iterate count from the orbit's least atom: u = T^{-l(u)}(least).
fn backward_positions(t: &OrbitTransformation) -> Vec<usize> {
    let n = t.orbit_size();
    let mut l = vec![0usize; t.atoms()];
    for orbit in t.orbits() {
        // orbit[pos] = T^pos(least), and T^pos = T^{-(n-pos)}.
        for (pos, &u) in orbit.iter().enumerate() {
            l[u] = (n - pos) % n;
        }
    }
    l
}

/// The T-local Fourier transform: per orbit, with delta^k = T^{-k}(least),
/// the value at delta^j is (1/n) sum_k e_n(-kj) f(delta^k).
pub fn local_fourier(t: &OrbitTransformation, f: &[C64]) -> Vec<C64> {
    assert_eq!(f.len(), t.atoms());
    let n = t.orbit_size();
    let mut out = vec![C64::new(0.0, 0.0); f.len()];
    for orbit in t.orbits() {
        let delta: Vec<usize> = backward_order(orbit);
        for j in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for (k, &u) in delta.iter().enumerate() {
                acc += character(n, -((k * j) as i64)) * f[u];
            }
            out[delta[j]] = acc / n as f64;
        }
    }
    out
}

/// Inverse of [`local_fourier`].
pub fn local_fourier_inverse(t: &OrbitTransformation, g: &[C64]) -> Vec<C64> {
    assert_eq!(g.len(), t.atoms());
    let n = t.orbit_size();
    let mut out = vec![C64::new(0.0, 0.0); g.len()];
    for orbit in t.orbits() {
        let delta: Vec<usize> = backward_order(orbit);
        for k in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for (j, &u) in delta.iter().enumerate() {
                acc += character(n, (k * j) as i64) * g[u];
            }
            out[delta[k]] = acc;
        }
    }
    out
}

/// delta^k enumeration of an orbit: least atom first, then backward
/// iterates of T.
fn backward_order(orbit: &[usize]) -> Vec<usize> {
    let mut delta = vec![orbit[0]];
    delta.extend(orbit[1..].iter().rev());
    delta
}

/// The spectral PVM of the Koopman operator of T: A_j projects onto the
/// span of e_n(-j l(u)) per orbit (l = backward iterate count), so that
/// sum_j e_n(-j) A_j = koopman_matrix(T).
pub fn eigenprojections(t: &OrbitTransformation) -> ProjectionValuedMeasure {
    let n = t.orbit_size();
    let d = t.atoms();
    let l = backward_positions(t);
    let scale = 1.0 / (n as f64).sqrt();
    let projections = (0..n)
        .map(|j| {
            let mut p = Mat::zeros(d, d);
            for orbit in t.orbits() {
                let chi: Vec<C64> = {
                    let mut v = vec![C64::new(0.0, 0.0); d];
                    for &u in orbit {
                        v[u] = character(n, -((j * l[u]) as i64)) * scale;
                    }
                    v
                };
                p = p.add(&Mat::outer(&chi, &chi));
            }
            p
        })
        .collect();
    ProjectionValuedMeasure::from_projections_unchecked(projections)
}

/// A wheel: unitaries u(0), ..., u(n-1) with u(0) = I and
/// u(j)u(k) = u(j+k mod n).
#[derive(Debug, Clone)]
pub struct Wheel {
    unitaries: Vec<Mat>,
}

impl Wheel {
    pub fn new(unitaries: Vec<Mat>) -> Result<Self> {
        let wheel = Wheel { unitaries };
        wheel.validate(WHEEL_TOL)?;
        Ok(wheel)
    }

    pub fn from_unitaries_unchecked(unitaries: Vec<Mat>) -> Self {
        Wheel { unitaries }
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        if self.unitaries.is_empty() {
            return Err(Error::InvalidPvm("wheel has no unitaries".into()));
        }
        let n = self.unitaries.len();
        let d = self.unitaries[0].rows();
        if self.unitaries[0].max_abs_diff(&Mat::identity(d)) > tol {
            return Err(Error::InvalidPvm("wheel u(0) is not the identity".into()));
        }
        for (k, u) in self.unitaries.iter().enumerate() {
            if !u.is_unitary(tol) {
                return Err(Error::InvalidPvm(format!("wheel element {k} is not unitary")));
            }
        }
        for j in 0..n {
            for k in 0..n {
                let prod = self.unitaries[j].matmul(&self.unitaries[k]);
                if prod.max_abs_diff(&self.unitaries[(j + k) % n]) > tol {
                    return Err(Error::InvalidPvm(format!(
                        "wheel law fails at u({j})u({k})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.unitaries.len()
    }

    pub fn unitary(&self, k: usize) -> &Mat {
        &self.unitaries[k % self.unitaries.len()]
    }
}

/// The wheel of a PVM: u(k) = sum_j e_n(kj) A_j.
pub fn wheel_from_pvm(pvm: &ProjectionValuedMeasure) -> Wheel {
    let n = pvm.outcomes();
    let d = pvm.dimension();
    let unitaries = (0..n)
        .map(|k| {
            let mut u = Mat::zeros(d, d);
            for j in 0..n {
                u = u.add(&pvm.projection(j).scale(character(n, (k * j) as i64)));
            }
            u
        })
        .collect();
    Wheel { unitaries }
}

/// Inverse of [`wheel_from_pvm`]: A_j = (1/n) sum_k e_n(-kj) u(k).
pub fn pvm_from_wheel(wheel: &Wheel) -> Result<ProjectionValuedMeasure> {
    let n = wheel.order();
    let d = wheel.unitary(0).rows();
    let projections = (0..n)
        .map(|j| {
            let mut p = Mat::zeros(d, d);
            for k in 0..n {
                p = p.add(&wheel.unitary(k).scale(character(n, -((k * j) as i64))));
            }
            p.scale(C64::new(1.0 / n as f64, 0.0))
        })
        .collect();
    ProjectionValuedMeasure::new(projections)
}

/// Residual of the local-Fourier inversion identity: for every k, the
/// projection onto the span of the Fourier transforms of the eigenspace
/// generators (the all-frequency vector plus the first k characters)
/// equals the order-k observation matrix of the observable derived from T.
pub fn fourier_inversion_identity_residual(
    space: &FiniteSampleSpace,
    t: &OrbitTransformation,
) -> f64 {
    let n = t.orbit_size();
    let d = t.atoms();
    let l = backward_positions(t);
    let alpha = transformation_to_observable(space, t);
    let mut worst: f64 = 0.0;
    for k in 0..n {
        // Spanning functions per orbit: the indicator of the least atom
        // (the Fourier transform of the full character sum) and the
        // transforms of the first k characters.
        let mut span: Vec<Vec<C64>> = Vec::new();
        for orbit in t.orbits() {
            let star: Vec<C64> = {
                let mut v = vec![C64::new(0.0, 0.0); d];
                for &u in orbit {
                    v[u] = if l[u] == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                }
                v
            };
            span.push(local_fourier(t, &star));
            for j in 0..k {
                let chi: Vec<C64> = {
                    let mut v = vec![C64::new(0.0, 0.0); d];
                    for &u in orbit {
                        v[u] = character(n, -((j * l[u]) as i64));
                    }
                    v
                };
                span.push(local_fourier(t, &chi));
            }
        }
        let proj = projection_onto_span(&span, 1e-9);
        let obs = observation_matrix(space, &alpha, k as i64).expect("valid order");
        worst = worst.max(proj.max_abs_diff(&obs));
    }
    worst
}

/// Commuting families of orbit transformations plus a wavefunction: the
/// data of an ergodic commuting strategy.
#[derive(Debug, Clone)]
pub struct ErgodicStrategyData {
    pub space: FiniteSampleSpace,
    pub transformations_a: Vec<OrbitTransformation>,
    pub transformations_b: Vec<OrbitTransformation>,
    pub wavefunction: Vec<C64>,
}

impl ErgodicStrategyData {
    pub fn validate(&self) -> Result<()> {
        let nrm = self.space.norm(&self.wavefunction);
        if (nrm - 1.0).abs() > crate::observables::WAVEFUNCTION_TOL {
            return Err(Error::NotNormalized { norm: nrm });
        }
        for (x, t) in self.transformations_a.iter().enumerate() {
            for (y, s) in self.transformations_b.iter().enumerate() {
                if !t.commutes_with(s) {
                    return Err(Error::NonCommutingTransformations(format!(
                        "T_{x} and S_{y} do not commute as permutations"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Ergodic commuting correlation table:
/// p_{x,y}(k,j) = (1/nm) ∫ f(T_x^{-k} u) conj(f(S_y^{-j} u)) dμ(u).
pub fn eval_ergodic_commuting(data: &ErgodicStrategyData) -> Result<DualCorrelationTable> {
    data.validate()?;
    let f = &data.wavefunction;
    let space = &data.space;
    let tables = data
        .transformations_a
        .iter()
        .map(|t| {
            let n = t.orbit_size();
            let shifted_a: Vec<Vec<C64>> = iterate_pullbacks(t, f, n);
            data.transformations_b
                .iter()
                .map(|s| {
                    let m = s.orbit_size();
                    let shifted_b: Vec<Vec<C64>> = iterate_pullbacks(s, f, m);
                    let scale = 1.0 / (n * m) as f64;
                    Mat::from_fn(n, m, |k, j| {
                        space.dot(&shifted_a[k], &shifted_b[j]) * scale
                    })
                })
                .collect()
        })
        .collect();
    Ok(DualCorrelationTable::from_tables(tables))
}

/// The functions u -> f(T^{-k} u) for k = 0..count-1.
fn iterate_pullbacks(t: &OrbitTransformation, f: &[C64], count: usize) -> Vec<Vec<C64>> {
    let mut out = Vec::with_capacity(count);
    let mut current = f.to_vec();
    for _ in 0..count {
        out.push(current.clone());
        let next: Vec<C64> =
            (0..f.len()).map(|u| current[t.apply_inverse(u)]).collect();
        current = next;
    }
    out
}

/// Ergodic spatial correlation table on a product space:
/// p(k,j) = (1/nm) ∫∫ f(T^{-k} s, t) conj(f(s, S^{-j} t)) dν dη.
pub fn eval_ergodic_spatial(
    lambda: &FiniteSampleSpace,
    pi: &FiniteSampleSpace,
    transformations_a: &[OrbitTransformation],
    transformations_b: &[OrbitTransformation],
    f: &[C64],
) -> Result<DualCorrelationTable> {
    let (nl, np) = (lambda.atoms(), pi.atoms());
    if f.len() != nl * np {
        return Err(Error::ShapeMismatch(format!(
            "wavefunction over {} atoms, product space has {}",
            f.len(),
            nl * np
        )));
    }
    let product = lambda.product(pi);
    let nrm = product.norm(f);
    if (nrm - 1.0).abs() > crate::observables::WAVEFUNCTION_TOL {
        return Err(Error::NotNormalized { norm: nrm });
    }
    let tables = transformations_a
        .iter()
        .map(|t| {
            let n = t.orbit_size();
            transformations_b
                .iter()
                .map(|s| {
                    let m = s.orbit_size();
                    let scale = 1.0 / (n * m) as f64;
                    Mat::from_fn(n, m, |k, j| {
                        let mut acc = C64::new(0.0, 0.0);
                        for u in 0..nl {
                            let tu = iterate_inverse(t, u, k);
                            for v in 0..np {
                                let sv = iterate_inverse(s, v, j);
                                acc += f[tu * np + v]
                                    * f[u * np + sv].conj()
                                    * (lambda.weight(u) * pi.weight(v));
                            }
                        }
                        acc * scale
                    })
                })
                .collect()
        })
        .collect();
    Ok(DualCorrelationTable::from_tables(tables))
}

fn iterate_inverse(t: &OrbitTransformation, u: usize, k: usize) -> usize {
    let mut v = u;
    for _ in 0..k {
        v = t.apply_inverse(v);
    }
    v
}

// ---------------------------------------------------------------------------
// Duality: statistical instance -> ergodic instance
// ---------------------------------------------------------------------------

/// Standardized Helmert-style unit generator of O_s - O_{s-1} on an
/// n-point class: h_0 is constant, h_s (s >= 1) is supported on positions
/// s-1.. with value n-s at position s-1 and -1 after it.
fn helmert_vector(n: usize, s: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); n];
    if s == 0 {
        let c = 1.0 / (n as f64).sqrt();
        v.iter_mut().for_each(|x| *x = C64::new(c, 0.0));
    } else {
        let head = (n - s) as f64;
        let norm = (head * (head + 1.0)).sqrt();
        v[s - 1] = C64::new(head / norm, 0.0);
        for x in v.iter_mut().skip(s) {
            *x = C64::new(-1.0 / norm, 0.0);
        }
    }
    v
}

/// The dual ergodic instance of a consistent statistical pair: the label
/// rotations of both observables, plus the wavefunction transported by the
/// per-block unitary taking the product Helmert basis (the observation-
/// difference eigenvectors) to the product character basis (the Koopman
/// eigenvectors). With this transport the ergodic table equals the 2D
/// Fourier transform of the statistical table exactly.
pub fn statistical_to_ergodic(
    space: &FiniteSampleSpace,
    alpha: &Observable,
    beta: &Observable,
    f: &[C64],
) -> Result<ErgodicStrategyData> {
    let witness = check_consistency(space, alpha, beta)?;
    let (n, m) = (alpha.resolution(), beta.resolution());
    let d = space.atoms();
    let f_std = space.standardize(f);

    let mut g_std = vec![C64::new(0.0, 0.0); d];
    for block in &witness.blocks {
        // atom at grid position (i, j).
        let mut grid = vec![0usize; n * m];
        for &u in block {
            grid[alpha.label(u) * m + beta.label(u)] = u;
        }
        let scale = 1.0 / ((n * m) as f64).sqrt();
        for s in 0..n {
            let hs = helmert_vector(n, s);
            for t in 0..m {
                let ht = helmert_vector(m, t);
                // <f_std, psi_{s,t}> over the block.
                let mut coeff = C64::new(0.0, 0.0);
                for i in 0..n {
                    for j in 0..m {
                        coeff += f_std[grid[i * m + j]] * (hs[i] * ht[j]).conj();
                    }
                }
                // Add coeff * phi_{s,t}.
                for i in 0..n {
                    for j in 0..m {
                        let phase = character(n, (s * i) as i64)
                            * character(m, -((t * j) as i64))
                            * scale;
                        g_std[grid[i * m + j]] += coeff * phase;
                    }
                }
            }
        }
    }
    let g: Vec<C64> =
        g_std.iter().enumerate().map(|(u, x)| x / space.weight(u).sqrt()).collect();

    Ok(ErgodicStrategyData {
        space: space.clone(),
        transformations_a: vec![observable_to_transformation(space, alpha)],
        transformations_b: vec![observable_to_transformation(space, beta)],
        wavefunction: g,
    })
}

/// Spatial version: transports the two factors separately.
pub fn statistical_to_ergodic_spatial(
    lambda: &FiniteSampleSpace,
    pi: &FiniteSampleSpace,
    alpha: &Observable,
    beta: &Observable,
    f: &[C64],
) -> Result<(OrbitTransformation, OrbitTransformation, Vec<C64>)> {
    let (nl, np) = (lambda.atoms(), pi.atoms());
    if f.len() != nl * np {
        return Err(Error::ShapeMismatch("wavefunction does not live on the product".into()));
    }
    let psi_a = factor_transport(lambda, alpha, true)?;
    let psi_b = factor_transport(pi, beta, false)?;
    let product = lambda.product(pi);
    let f_std = product.standardize(f);
    let mcoef = Mat::from_fn(nl, np, |i, j| f_std[i * np + j]);
    let g_std = psi_a.matmul(&mcoef).matmul(&psi_b.transpose());
    let g: Vec<C64> = (0..nl * np)
        .map(|u| g_std[(u / np, u % np)] / product.weight(u).sqrt())
        .collect();
    Ok((
        observable_to_transformation(lambda, alpha),
        observable_to_transformation(pi, beta),
        g,
    ))
}

/// The per-class transport unitary on one factor, in standardized
/// coordinates. Alice's factor maps the Helmert basis to characters
/// e_n(+s i); Bob's to e_m(-t j), matching the conjugate in the ergodic
/// integrand.
fn factor_transport(
    space: &FiniteSampleSpace,
    obs: &Observable,
    alice_side: bool,
) -> Result<Mat> {
    let n = obs.resolution();
    let d = space.atoms();
    let mut psi = Mat::zeros(d, d);
    let scale = 1.0 / (n as f64).sqrt();
    for class in obs.classes() {
        for s in 0..n {
            let h = helmert_vector(n, s);
            let mut phi = vec![C64::new(0.0, 0.0); d];
            let mut hvec = vec![C64::new(0.0, 0.0); d];
            for (i, &u) in class.iter().enumerate() {
                let sign = if alice_side { 1 } else { -1 };
                phi[u] = character(n, sign * (s * i) as i64) * scale;
                hvec[u] = h[i];
            }
            psi = psi.add(&Mat::outer(&phi, &hvec));
        }
    }
    Ok(psi)
}

/// The unitary spatial correlation table of two wheel families:
/// p_{x,y}(j,k) = (1/nm) <(u_x(j) ⊗ v_y(k)) psi, psi>.
pub fn eval_unitary_spatial(
    wheels_a: &[Wheel],
    wheels_b: &[Wheel],
    psi: &Wavefunction,
) -> Result<DualCorrelationTable> {
    let dh = wheels_a.first().map(|w| w.unitary(0).rows()).unwrap_or(0);
    let dk = wheels_b.first().map(|w| w.unitary(0).rows()).unwrap_or(0);
    if psi.dimension() != dh * dk {
        return Err(Error::DimensionMismatch(format!(
            "wavefunction dimension {} is not {dh}*{dk}",
            psi.dimension()
        )));
    }
    let coeffs = Mat::from_fn(dh, dk, |i, j| psi.amplitudes()[i * dk + j]);
    let tables = wheels_a
        .iter()
        .map(|wa| {
            let n = wa.order();
            wheels_b
                .iter()
                .map(|wb| {
                    let m = wb.order();
                    let scale = 1.0 / (n * m) as f64;
                    Mat::from_fn(n, m, |j, k| {
                        let moved =
                            wa.unitary(j).matmul(&coeffs).matmul(&wb.unitary(k).transpose());
                        let mut acc = C64::new(0.0, 0.0);
                        for i in 0..dh {
                            for l in 0..dk {
                                acc += moved[(i, l)] * coeffs[(i, l)].conj();
                            }
                        }
                        acc * scale
                    })
                })
                .collect()
        })
        .collect();
    Ok(DualCorrelationTable::from_tables(tables))
}

/// Convenience: the Fourier dual of a statistical table computed through
/// the ergodic realization, for a single consistent pair.
pub fn duality_square_residual(
    space: &FiniteSampleSpace,
    alpha: &Observable,
    beta: &Observable,
    f: &[C64],
) -> Result<f64> {
    let ladder_a = crate::observables::Ladder::default_for(alpha.resolution());
    let ladder_b = crate::observables::Ladder::default_for(beta.resolution());
    let statistical = crate::observables::eval_statistical_commuting(
        space,
        std::slice::from_ref(alpha),
        std::slice::from_ref(beta),
        f,
        &ladder_a,
        &ladder_b,
    )?;
    let ergodic = eval_ergodic_commuting(&statistical_to_ergodic(space, alpha, beta, f)?)?;
    let phat = fourier_transform_2d(&Mat::from_real_rows(statistical.table(0, 0).clone()));
    Ok(ergodic.table(0, 0).max_abs_diff(&phat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{BareStrategy, DualCorrelationTable};
    use crate::observables::{eval_statistical_spatial, Ladder};
    use crate::random;
    use rand::Rng;

    #[test]
    fn rotation_of_a_single_class_is_a_cycle() {
        let space = FiniteSampleSpace::uniform(3);
        let alpha = Observable::single_class(&space, vec![0, 1, 2]).unwrap();
        let t = observable_to_transformation(&space, &alpha);
        assert_eq!(t.apply(0), 1);
        assert_eq!(t.apply(1), 2);
        assert_eq!(t.apply(2), 0);
        // T^3 = id.
        for u in 0..3 {
            assert_eq!(t.apply(t.apply(t.apply(u))), u);
        }
    }

    #[test]
    fn resolution_one_gives_the_identity_permutation() {
        let space = FiniteSampleSpace::uniform(4);
        let alpha = Observable::resolution_one(&space);
        let t = observable_to_transformation(&space, &alpha);
        for u in 0..4 {
            assert_eq!(t.apply(u), u);
        }
    }

    #[test]
    fn roundtrip_preserves_class_structure() {
        let mut rng = random::rng(3);
        for _ in 0..10 {
            let n = rng.gen_range(2..5);
            let classes = rng.gen_range(1..4);
            let (space, alpha) = random::random_observable(&mut rng, n, classes);
            let t = observable_to_transformation(&space, &alpha);
            let back = transformation_to_observable(&space, &t);
            // Same classes as sets.
            let sort_classes = |obs: &Observable| {
                let mut c: Vec<Vec<usize>> = obs
                    .classes()
                    .iter()
                    .map(|cl| {
                        let mut cl = cl.clone();
                        cl.sort_unstable();
                        cl
                    })
                    .collect();
                c.sort();
                c
            };
            assert_eq!(sort_classes(&alpha), sort_classes(&back));
        }
    }

    #[test]
    fn identity_transformation_yields_resolution_one() {
        let space = FiniteSampleSpace::uniform(5);
        let t = OrbitTransformation::new(&space, vec![0, 1, 2, 3, 4]).unwrap();
        let alpha = transformation_to_observable(&space, &t);
        assert_eq!(alpha.resolution(), 1);
    }

    #[test]
    fn single_cycle_labels_follow_the_cycle_from_the_least_atom() {
        let space = FiniteSampleSpace::uniform(4);
        // 0 -> 2 -> 1 -> 3 -> 0
        let t = OrbitTransformation::new(&space, vec![2, 3, 1, 0]).unwrap();
        let alpha = transformation_to_observable(&space, &t);
        assert_eq!(alpha.label(0), 0);
        assert_eq!(alpha.label(2), 1);
        assert_eq!(alpha.label(1), 2);
        assert_eq!(alpha.label(3), 3);
    }

    #[test]
    fn nonuniform_orbits_are_rejected() {
        let space = FiniteSampleSpace::uniform(3);
        // One fixed point and one 2-cycle.
        assert!(matches!(
            OrbitTransformation::new(&space, vec![0, 2, 1]),
            Err(Error::NonUniformOrbits(_))
        ));
    }

    #[test]
    fn koopman_of_identity_and_of_a_cycle() {
        let space = FiniteSampleSpace::uniform(3);
        let id = OrbitTransformation::new(&space, vec![0, 1, 2]).unwrap();
        assert!(koopman_matrix(&id).max_abs_diff(&Mat::identity(3)) < 1e-15);

        let alpha = Observable::single_class(&space, vec![0, 1, 2]).unwrap();
        let t = observable_to_transformation(&space, &alpha);
        let k = koopman_matrix(&t);
        assert!(k.is_unitary(1e-12));
        let k3 = k.matmul(&k).matmul(&k);
        assert!(k3.max_abs_diff(&Mat::identity(3)) < 1e-12);
    }

    #[test]
    fn koopman_spectrum_is_roots_of_unity_with_orbit_multiplicity() {
        let mut rng = random::rng(9);
        let (space, alpha) = random::random_observable(&mut rng, 3, 2);
        let t = observable_to_transformation(&space, &alpha);
        let pvm = eigenprojections(&t);
        pvm.validate(1e-10).unwrap();
        let k = koopman_matrix(&t);
        for j in 0..3usize {
            // K A_j = e_3(-j) A_j and the eigenspace dimension equals the
            // number of orbits.
            let lhs = k.matmul(pvm.projection(j));
            let rhs = pvm.projection(j).scale(character(3, -(j as i64)));
            assert!(lhs.max_abs_diff(&rhs) < 1e-10);
            assert!((pvm.projection(j).trace().re - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn eigenprojections_reconstruct_the_koopman_operator() {
        let mut rng = random::rng(17);
        for _ in 0..10 {
            let n = rng.gen_range(1..5);
            let classes = rng.gen_range(1..4);
            let (space, alpha) = random::random_observable(&mut rng, n, classes);
            let t = observable_to_transformation(&space, &alpha);
            let pvm = eigenprojections(&t);
            let mut sum = Mat::zeros(t.atoms(), t.atoms());
            for j in 0..n {
                sum = sum.add(&pvm.projection(j).scale(character(n, -(j as i64))));
            }
            assert!(sum.max_abs_diff(&koopman_matrix(&t)) < 1e-10);
        }
    }

    #[test]
    fn identity_transformation_has_single_full_projection() {
        let space = FiniteSampleSpace::uniform(3);
        let t = OrbitTransformation::new(&space, vec![0, 1, 2]).unwrap();
        let pvm = eigenprojections(&t);
        assert_eq!(pvm.outcomes(), 1);
        assert!(pvm.projection(0).max_abs_diff(&Mat::identity(3)) < 1e-12);
    }

    #[test]
    fn three_cycle_eigenprojections_are_rank_one() {
        let space = FiniteSampleSpace::uniform(3);
        let alpha = Observable::single_class(&space, vec![0, 1, 2]).unwrap();
        let t = observable_to_transformation(&space, &alpha);
        let pvm = eigenprojections(&t);
        for j in 0..3 {
            assert!((pvm.projection(j).trace().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn local_fourier_of_constant_is_least_atom_indicator() {
        let mut rng = random::rng(4);
        let (space, alpha) = random::random_observable(&mut rng, 4, 2);
        let t = observable_to_transformation(&space, &alpha);
        let f = vec![C64::new(1.0, 0.0); 8];
        let hat = local_fourier(&t, &f);
        for orbit in t.orbits() {
            for (pos, &u) in orbit.iter().enumerate() {
                let expected = if pos == 0 { 1.0 } else { 0.0 };
                assert!((hat[u] - C64::new(expected, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn local_fourier_of_least_atom_indicators_is_constant() {
        let space = FiniteSampleSpace::uniform(4);
        let alpha = Observable::single_class(&space, vec![0, 1, 2, 3]).unwrap();
        let t = observable_to_transformation(&space, &alpha);
        let mut f = vec![C64::new(0.0, 0.0); 4];
        f[0] = C64::new(1.0, 0.0);
        let hat = local_fourier(&t, &f);
        for u in 0..4 {
            assert!((hat[u] - C64::new(0.25, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn local_fourier_matches_dense_dft_and_inverts() {
        let mut rng = random::rng(15);
        for _ in 0..10 {
            let n = rng.gen_range(2..5);
            let classes = rng.gen_range(1..3);
            let (space, alpha) = random::random_observable(&mut rng, n, classes);
            let t = observable_to_transformation(&space, &alpha);
            let f = random::random_complex_vector(&mut rng, space.atoms());
            let hat = local_fourier(&t, &f);
            // Independent oracle: dense DFT matrix per orbit on the same
            // enumeration.
            for orbit in t.orbits() {
                let mut delta = vec![orbit[0]];
                delta.extend(orbit[1..].iter().rev());
                for j in 0..n {
                    let mut acc = C64::new(0.0, 0.0);
                    for (k, &u) in delta.iter().enumerate() {
                        acc += character(n, -((k * j) as i64)) * f[u];
                    }
                    acc /= n as f64;
                    assert!((hat[delta[j]] - acc).norm() < 1e-12);
                }
            }
            let back = local_fourier_inverse(&t, &hat);
            for u in 0..space.atoms() {
                assert!((back[u] - f[u]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn wheel_from_two_outcome_diagonal_pvm() {
        let p0 = Mat::from_real_rows(vec![vec![1.0, 0.0], vec![0.0, 0.0]]);
        let p1 = Mat::from_real_rows(vec![vec![0.0, 0.0], vec![0.0, 1.0]]);
        let pvm = ProjectionValuedMeasure::new(vec![p0, p1]).unwrap();
        let wheel = wheel_from_pvm(&pvm);
        wheel.validate(1e-12).unwrap();
        let expected = Mat::from_real_rows(vec![vec![1.0, 0.0], vec![0.0, -1.0]]);
        assert!(wheel.unitary(1).max_abs_diff(&expected) < 1e-12);
        assert!(wheel.unitary(0).max_abs_diff(&Mat::identity(2)) < 1e-12);
    }

    #[test]
    fn wheel_pvm_roundtrip_on_random_pvms() {
        let mut rng = random::rng(8);
        for _ in 0..50 {
            let d = rng.gen_range(2..6);
            let outcomes = rng.gen_range(1..=d);
            let pvm = random::random_pvm(&mut rng, d, outcomes);
            let wheel = wheel_from_pvm(&pvm);
            wheel.validate(1e-10).unwrap();
            let back = pvm_from_wheel(&wheel).unwrap();
            for j in 0..outcomes {
                assert!(back.projection(j).max_abs_diff(pvm.projection(j)) < 1e-12);
            }
            // Wheel laws including adjoints: u(k)^H = u(-k).
            let n = wheel.order();
            for k in 0..n {
                let adj = wheel.unitary(k).adjoint();
                assert!(adj.max_abs_diff(wheel.unitary((n - k) % n)) < 1e-10);
            }
        }
    }

    #[test]
    fn koopman_wheel_of_eigenprojections_is_inverse_koopman_powers() {
        let mut rng = random::rng(19);
        for _ in 0..5 {
            let n = rng.gen_range(2..5);
            let classes = rng.gen_range(1..3);
            let (space, alpha) = random::random_observable(&mut rng, n, classes);
            let t = observable_to_transformation(&space, &alpha);
            let wheel = wheel_from_pvm(&eigenprojections(&t));
            let kinv = koopman_matrix(&t.inverse());
            let mut power = Mat::identity(t.atoms());
            for k in 0..n {
                assert!(wheel.unitary(k).max_abs_diff(&power) < 1e-10, "k = {k}");
                power = power.matmul(&kinv);
            }
        }
    }

    #[test]
    fn fourier_inversion_identity_holds() {
        let mut rng = random::rng(23);
        for _ in 0..10 {
            let n = rng.gen_range(1..5);
            let classes = rng.gen_range(1..4);
            let (space, alpha) = random::random_observable(&mut rng, n, classes);
            let t = observable_to_transformation(&space, &alpha);
            let residual = fourier_inversion_identity_residual(&space, &t);
            assert!(residual < 1e-10, "residual {residual}");
        }
    }

    #[test]
    fn invariant_wavefunction_gives_flat_table() {
        let space = FiniteSampleSpace::uniform(6);
        let alpha = Observable::new(
            &space,
            3,
            vec![vec![0, 1, 2], vec![3, 4, 5]],
            vec![0, 1, 2, 0, 1, 2],
        )
        .unwrap();
        let beta = Observable::resolution_one(&space);
        let t = observable_to_transformation(&space, &alpha);
        let s = observable_to_transformation(&space, &beta);
        let data = ErgodicStrategyData {
            space: space.clone(),
            transformations_a: vec![t],
            transformations_b: vec![s],
            wavefunction: vec![C64::new(1.0, 0.0); 6],
        };
        let table = eval_ergodic_commuting(&data).unwrap();
        for k in 0..3 {
            assert!((table.table(0, 0)[(k, 0)] - C64::new(1.0 / 3.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn duality_square_on_random_consistent_pairs() {
        let mut rng = random::rng(41);
        for _ in 0..25 {
            let n = rng.gen_range(1..=4);
            let m = rng.gen_range(1..=4);
            let blocks = rng.gen_range(1..=2);
            let pair = random::random_consistent_pair(&mut rng, n, m, blocks);
            let f = random::random_unit_function(&mut rng, &pair.space);
            let residual =
                duality_square_residual(&pair.space, &pair.alpha, &pair.beta, &f).unwrap();
            assert!(residual < 1e-12, "n={n} m={m} residual={residual}");
        }
    }

    #[test]
    fn inverse_fourier_of_ergodic_tables_is_a_bare_strategy() {
        let mut rng = random::rng(43);
        for _ in 0..10 {
            let n = rng.gen_range(2..=4);
            let m = rng.gen_range(2..=4);
            let pair = random::random_consistent_pair(&mut rng, n, m, 2);
            let f = random::random_unit_function(&mut rng, &pair.space);
            let dual = statistical_to_ergodic(&pair.space, &pair.alpha, &pair.beta, &f).unwrap();
            let table = eval_ergodic_commuting(&dual).unwrap();
            let back: BareStrategy = table.inverse_fourier();
            back.validate(1e-9).unwrap();
            assert!(table.max_imag_of_inverse() < 1e-9);
        }
    }

    #[test]
    fn spatial_ergodic_factorizes_on_product_wavefunctions() {
        let mut rng = random::rng(47);
        let lambda = FiniteSampleSpace::uniform(3);
        let pi = FiniteSampleSpace::uniform(2);
        let ta = observable_to_transformation(
            &lambda,
            &Observable::single_class(&lambda, vec![0, 1, 2]).unwrap(),
        );
        let sb = observable_to_transformation(
            &pi,
            &Observable::single_class(&pi, vec![0, 1]).unwrap(),
        );
        let g = random::random_unit_function(&mut rng, &lambda);
        let h = random::random_unit_function(&mut rng, &pi);
        let mut f = Vec::new();
        for s in 0..3 {
            for t in 0..2 {
                f.push(g[s] * h[t]);
            }
        }
        let table =
            eval_ergodic_spatial(&lambda, &pi, std::slice::from_ref(&ta), std::slice::from_ref(&sb), &f).unwrap();
        // Marginal correlations.
        for k in 0..3 {
            for j in 0..2 {
                let mut ca = C64::new(0.0, 0.0);
                for u in 0..3 {
                    ca += g[iterate_inverse(&ta, u, k)] * g[u].conj() * lambda.weight(u);
                }
                let mut cb = C64::new(0.0, 0.0);
                for v in 0..2 {
                    cb += h[v] * h[iterate_inverse(&sb, v, j)].conj() * pi.weight(v);
                }
                let expected = ca * cb / 6.0;
                assert!((table.table(0, 0)[(k, j)] - expected).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn spatial_ergodic_agrees_with_commuting_on_lifts() {
        let mut rng = random::rng(53);
        for _ in 0..5 {
            let n = rng.gen_range(2..4);
            let m = rng.gen_range(2..4);
            let (lambda, alpha) = random::random_observable(&mut rng, n, 2);
            let (pi, beta) = random::random_observable(&mut rng, m, 1);
            let product = lambda.product(&pi);
            let f = random::random_unit_function(&mut rng, &product);
            let ta = observable_to_transformation(&lambda, &alpha);
            let sb = observable_to_transformation(&pi, &beta);
            let spatial = eval_ergodic_spatial(&lambda, &pi, &[ta], &[sb], &f).unwrap();

            use crate::observables::{lift_observable, Side};
            let la = lift_observable(&alpha, &lambda, &pi, Side::Left);
            let lb = lift_observable(&beta, &lambda, &pi, Side::Right);
            let t_lifted = observable_to_transformation(&product, &la);
            let s_lifted = observable_to_transformation(&product, &lb);
            let data = ErgodicStrategyData {
                space: product,
                transformations_a: vec![t_lifted],
                transformations_b: vec![s_lifted],
                wavefunction: f,
            };
            let commuting = eval_ergodic_commuting(&data).unwrap();
            assert!(spatial.max_abs_diff(&commuting) < 1e-12);
        }
    }

    #[test]
    fn spatial_duality_square_via_transport() {
        let mut rng = random::rng(59);
        for _ in 0..10 {
            let n = rng.gen_range(2..=4);
            let m = rng.gen_range(2..=4);
            let (lambda, alpha) = random::random_observable(&mut rng, n, 2);
            let (pi, beta) = random::random_observable(&mut rng, m, 2);
            let product = lambda.product(&pi);
            let f = random::random_unit_function(&mut rng, &product);
            let statistical = eval_statistical_spatial(
                &lambda,
                &pi,
                std::slice::from_ref(&alpha),
                std::slice::from_ref(&beta),
                &f,
                &Ladder::default_for(n),
                &Ladder::default_for(m),
            )
            .unwrap();
            let (ta, sb, g) =
                statistical_to_ergodic_spatial(&lambda, &pi, &alpha, &beta, &f).unwrap();
            let ergodic = eval_ergodic_spatial(&lambda, &pi, &[ta], &[sb], &g).unwrap();
            let phat =
                fourier_transform_2d(&Mat::from_real_rows(statistical.table(0, 0).clone()));
            assert!(ergodic.table(0, 0).max_abs_diff(&phat) < 1e-12);
        }
    }

    #[test]
    fn chsh_statistical_dual_matches_padded_fourier_table() {
        // The 13/16 construction with the default resolution-3 ladder: the
        // order-0 averaging annihilates Delta, so the 3x3 default-ladder
        // table is the 13/16 table padded with a zero first row and column,
        // and the ergodic dual realizes its Fourier transform.
        let (data, strategy2x2) = crate::chsh::build_chsh_statistical().unwrap();
        let lambda = &data.alice.space;
        let pi = &data.bob.space;
        let ladder3 = Ladder::default_for(3);
        let padded = eval_statistical_spatial(
            lambda,
            pi,
            &data.alice_observables(),
            &data.bob_observables(),
            &data.delta,
            &ladder3,
            &ladder3,
        )
        .unwrap();
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..3 {
                    for b in 0..3 {
                        let expected = if a == 0 || b == 0 {
                            0.0
                        } else {
                            strategy2x2.get(x, y, a - 1, b - 1)
                        };
                        assert!((padded.get(x, y, a, b) - expected).abs() < 1e-10);
                    }
                }
            }
        }
        // Per question pair, the transported ergodic table equals the
        // Fourier transform of the padded table.
        let alice_obs = data.alice_observables();
        let bob_obs = data.bob_observables();
        let mut tables = Vec::new();
        for x in 0..2 {
            let mut row = Vec::new();
            for y in 0..2 {
                let (ta, sb, g) = statistical_to_ergodic_spatial(
                    lambda,
                    pi,
                    &alice_obs[x],
                    &bob_obs[y],
                    &data.delta,
                )
                .unwrap();
                let ergodic = eval_ergodic_spatial(lambda, pi, &[ta], &[sb], &g).unwrap();
                let phat =
                    fourier_transform_2d(&Mat::from_real_rows(padded.table(x, y).clone()));
                assert!(ergodic.table(0, 0).max_abs_diff(&phat) < 1e-10);
                row.push(ergodic.table(0, 0).clone());
            }
            tables.push(row);
        }
        let _ = DualCorrelationTable::from_tables(tables);
    }
}
