//! Randomized verification suites: the observation-calculus dictionary
//! items, the observation/dynamics duality square, and the inclusion of
//! statistical strategies into the quantum strategy sets. The CLI `props`
//! and `duality-check` commands and the acceptance tests run these.

use crate::duality::{
    duality_square_residual, eigenprojections, fourier_inversion_identity_residual,
    koopman_matrix, observable_to_transformation, pvm_from_wheel, wheel_from_pvm,
};
use crate::games::STRUCT_TOL;
use crate::linalg::{character, Mat};
use crate::observables::{
    check_consistency, eval_statistical_commuting, eval_statistical_spatial, lift_observable,
    materialize_pvm, materialize_wavefunction, observation_apply, observation_matrix, Ladder,
    Side,
};
use crate::quantum::{eval_quantum_commuting, eval_quantum_spatial};
use crate::random;
use rand::Rng;
use serde::Serialize;

pub const SUITE_TOL: f64 = 1e-10;

/// Residuals of the observation-operator laws: identity at top order,
/// ordered differences project, ladder differences form a PVM, consistent
/// pairs commute, lifted pairs are consistent.
#[derive(Debug, Clone, Serialize)]
pub struct ObservationReport {
    pub trials: usize,
    /// Order n-1 is the identity.
    pub identity_residual: f64,
    /// Ordered differences are Hermitian idempotents with nonnegative
    /// diagonal coefficients.
    pub difference_residual: f64,
    /// Ladder differences form a PVM.
    pub pvm_residual: f64,
    /// Consistent pairs commute.
    pub commutation_residual: f64,
    /// Lifted pairs are consistent and commute.
    pub lift_residual: f64,
    pub pass: bool,
}

impl ObservationReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.identity_residual,
            self.difference_residual,
            self.pvm_residual,
            self.commutation_residual,
            self.lift_residual,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn pvm_residual(projections: &[Mat]) -> f64 {
    let d = projections[0].rows();
    let mut worst: f64 = 0.0;
    let mut sum = Mat::zeros(d, d);
    for p in projections {
        worst = worst.max(p.max_abs_diff(&p.adjoint()));
        worst = worst.max(p.matmul(p).max_abs_diff(p));
        sum = sum.add(p);
    }
    for (i, p) in projections.iter().enumerate() {
        for q in projections.iter().skip(i + 1) {
            worst = worst.max(p.matmul(q).max_abs());
        }
    }
    worst.max(sum.max_abs_diff(&Mat::identity(d)))
}

/// Runs `trials` randomized instances (spaces of at most 24 atoms,
/// resolutions at most 4) through the observation-operator laws.
pub fn run_observation_suite(seed: u64, trials: usize) -> ObservationReport {
    let mut rng = random::rng(seed);
    let mut report = ObservationReport {
        trials,
        identity_residual: 0.0,
        difference_residual: 0.0,
        pvm_residual: 0.0,
        commutation_residual: 0.0,
        lift_residual: 0.0,
        pass: false,
    };
    for _ in 0..trials {
        let n = rng.gen_range(1..=4usize);
        let m = rng.gen_range(1..=4usize);
        let max_blocks = (24 / (n * m)).clamp(1, 3);
        let blocks = rng.gen_range(1..=max_blocks);
        let pair = random::random_consistent_pair(&mut rng, n, m, blocks);
        let space = &pair.space;
        let f = random::random_unit_function(&mut rng, space);

        // O_{alpha,n-1} is the identity.
        let id = observation_apply(space, &pair.alpha, n as i64 - 1, &f).unwrap();
        let res: f64 =
            id.iter().zip(&f).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        report.identity_residual = report.identity_residual.max(res);

        // Differences of ordered observation operators are Hermitian
        // idempotents with nonnegative diagonal coefficients.
        let j = rng.gen_range(-1..=n as i64);
        let k = rng.gen_range(j..=n as i64);
        let mj = observation_matrix(space, &pair.alpha, j).unwrap();
        let mk = observation_matrix(space, &pair.alpha, k).unwrap();
        let diff = mk.sub(&mj);
        let mut res = diff.max_abs_diff(&diff.adjoint());
        res = res.max(diff.matmul(&diff).max_abs_diff(&diff));
        let df = diff.apply(&f);
        res = res.max((-space.dot(&df, &f).re).max(0.0));
        report.difference_residual = report.difference_residual.max(res);

        // Ladder differences are a PVM.
        let ladder = Ladder::default_for(n);
        let projections = ladder.projections(space, &pair.alpha).unwrap();
        report.pvm_residual = report.pvm_residual.max(pvm_residual(&projections));

        // Consistent pairs commute.
        let kk = rng.gen_range(0..n as i64);
        let jj = rng.gen_range(0..m as i64);
        let ma = observation_matrix(space, &pair.alpha, kk).unwrap();
        let mb = observation_matrix(space, &pair.beta, jj).unwrap();
        report.commutation_residual =
            report.commutation_residual.max(ma.commutator(&mb).max_abs());

        // Lifts from the two factors of a product are consistent and
        // commute.
        let res_a = rng.gen_range(1..=3);
        let res_b = rng.gen_range(1..=3);
        let (lambda, alpha) = random::random_observable(&mut rng, res_a, 2);
        let (pi, beta) = random::random_observable(&mut rng, res_b, 2);
        let lifted_a = lift_observable(&alpha, &lambda, &pi, Side::Left);
        let lifted_b = lift_observable(&beta, &lambda, &pi, Side::Right);
        let product = lambda.product(&pi);
        let mut res: f64 = match check_consistency(&product, &lifted_a, &lifted_b) {
            Ok(_) => 0.0,
            Err(_) => 1.0,
        };
        let la = observation_matrix(&product, &lifted_a, rng.gen_range(0..alpha.resolution() as i64))
            .unwrap();
        let lb = observation_matrix(&product, &lifted_b, rng.gen_range(0..beta.resolution() as i64))
            .unwrap();
        res = res.max(la.commutator(&lb).max_abs());
        report.lift_residual = report.lift_residual.max(res);
    }
    report.pass = report.max_residual() < SUITE_TOL;
    report
}

/// Residuals for the duality square: ergodic table versus Fourier
/// transform of the statistical table, wheel/PVM roundtrips, and the
/// local Fourier inversion identity.
#[derive(Debug, Clone, Serialize)]
pub struct DualityReport {
    pub trials: usize,
    pub table_residual: f64,
    pub roundtrip_residual: f64,
    pub inversion_residual: f64,
    pub pass: bool,
}

impl DualityReport {
    pub fn max_residual(&self) -> f64 {
        self.table_residual.max(self.roundtrip_residual).max(self.inversion_residual)
    }
}

pub fn run_duality_suite(seed: u64, trials: usize) -> DualityReport {
    let mut rng = random::rng(seed);
    let mut report = DualityReport {
        trials,
        table_residual: 0.0,
        roundtrip_residual: 0.0,
        inversion_residual: 0.0,
        pass: false,
    };
    for _ in 0..trials {
        let n = rng.gen_range(1..=4usize);
        let m = rng.gen_range(1..=4usize);
        let max_blocks = (24 / (n * m)).clamp(1, 3);
        let blocks = rng.gen_range(1..=max_blocks);
        let pair = random::random_consistent_pair(&mut rng, n, m, blocks);
        let f = random::random_unit_function(&mut rng, &pair.space);
        let res = duality_square_residual(&pair.space, &pair.alpha, &pair.beta, &f).unwrap();
        report.table_residual = report.table_residual.max(res);

        // Wheel/PVM roundtrip on a random PVM, including the Koopman
        // relation for the eigenprojections of a random transformation.
        let d = rng.gen_range(2..6usize);
        let outcomes = rng.gen_range(1..=d);
        let pvm = random::random_pvm(&mut rng, d, outcomes);
        let wheel = wheel_from_pvm(&pvm);
        let mut round = match pvm_from_wheel(&wheel) {
            Ok(back) => (0..outcomes)
                .map(|j| back.projection(j).max_abs_diff(pvm.projection(j)))
                .fold(0.0, f64::max),
            Err(_) => 1.0,
        };
        let classes = rng.gen_range(1..=3usize);
        let order = rng.gen_range(1..=4usize);
        let (space, alpha) = random::random_observable(&mut rng, order, classes);
        let t = observable_to_transformation(&space, &alpha);
        let eig = eigenprojections(&t);
        let mut recon = Mat::zeros(space.atoms(), space.atoms());
        for j in 0..order {
            recon = recon.add(&eig.projection(j).scale(character(order, -(j as i64))));
        }
        round = round.max(recon.max_abs_diff(&koopman_matrix(&t)));
        report.roundtrip_residual = report.roundtrip_residual.max(round);

        report.inversion_residual = report
            .inversion_residual
            .max(fourier_inversion_identity_residual(&space, &t));
    }
    report.pass = report.max_residual() < SUITE_TOL;
    report
}

/// Inclusion of statistical strategies in the quantum strategy sets, at
/// finite scale: every generated statistical table is reproduced by the
/// quantum evaluators on the materialized PVMs.
#[derive(Debug, Clone, Serialize)]
pub struct InclusionReport {
    pub trials: usize,
    pub commuting_residual: f64,
    pub spatial_residual: f64,
    pub failures: usize,
    pub pass: bool,
}

pub fn run_inclusion_suite(seed: u64, trials: usize) -> InclusionReport {
    let mut rng = random::rng(seed);
    let mut report = InclusionReport {
        trials,
        commuting_residual: 0.0,
        spatial_residual: 0.0,
        failures: 0,
        pass: false,
    };
    for trial in 0..trials {
        if trial % 2 == 0 {
            // Commuting: one consistent pair on a common space.
            let n = rng.gen_range(1..=3usize);
            let m = rng.gen_range(1..=3usize);
            let blocks = rng.gen_range(1..=2usize);
            let pair = random::random_consistent_pair(&mut rng, n, m, blocks);
            let f = random::random_unit_function(&mut rng, &pair.space);
            let ladder_a = Ladder::default_for(n);
            let ladder_b = Ladder::default_for(m);
            let statistical = eval_statistical_commuting(
                &pair.space,
                std::slice::from_ref(&pair.alpha),
                std::slice::from_ref(&pair.beta),
                &f,
                &ladder_a,
                &ladder_b,
            )
            .unwrap();
            let pvm_a = materialize_pvm(&pair.space, &pair.alpha, &ladder_a);
            let pvm_b = materialize_pvm(&pair.space, &pair.beta, &ladder_b);
            let psi = materialize_wavefunction(&pair.space, &f);
            match (pvm_a, pvm_b, psi) {
                (Ok(pa), Ok(pb), Ok(psi)) => {
                    match eval_quantum_commuting(&[pa], &[pb], &psi) {
                        Ok(quantum) => {
                            let res = quantum.max_abs_diff(&statistical);
                            report.commuting_residual = report.commuting_residual.max(res);
                            if res > SUITE_TOL || quantum.validate(STRUCT_TOL).is_err() {
                                report.failures += 1;
                            }
                        }
                        Err(_) => report.failures += 1,
                    }
                }
                _ => report.failures += 1,
            }
        } else {
            // Spatial: independent factors.
            let n = rng.gen_range(1..=3usize);
            let m = rng.gen_range(1..=3usize);
            let classes_a = rng.gen_range(1..=2);
            let classes_b = rng.gen_range(1..=2);
            let (lambda, alpha) = random::random_observable(&mut rng, n, classes_a);
            let (pi, beta) = random::random_observable(&mut rng, m, classes_b);
            let product = lambda.product(&pi);
            let f = random::random_unit_function(&mut rng, &product);
            let ladder_a = Ladder::default_for(n);
            let ladder_b = Ladder::default_for(m);
            let statistical = eval_statistical_spatial(
                &lambda,
                &pi,
                std::slice::from_ref(&alpha),
                std::slice::from_ref(&beta),
                &f,
                &ladder_a,
                &ladder_b,
            )
            .unwrap();
            let pvm_a = materialize_pvm(&lambda, &alpha, &ladder_a);
            let pvm_b = materialize_pvm(&pi, &beta, &ladder_b);
            let psi = materialize_wavefunction(&product, &f);
            match (pvm_a, pvm_b, psi) {
                (Ok(pa), Ok(pb), Ok(psi)) => match eval_quantum_spatial(&[pa], &[pb], &psi) {
                    Ok(quantum) => {
                        let res = quantum.max_abs_diff(&statistical);
                        report.spatial_residual = report.spatial_residual.max(res);
                        if res > SUITE_TOL || quantum.validate(STRUCT_TOL).is_err() {
                            report.failures += 1;
                        }
                    }
                    Err(_) => report.failures += 1,
                },
                _ => report.failures += 1,
            }
        }
    }
    report.pass = report.failures == 0
        && report.commuting_residual.max(report.spatial_residual) < SUITE_TOL;
    report
}
