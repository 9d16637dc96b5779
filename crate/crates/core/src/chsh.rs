//! The statistical CHSH construction: the three-atom step-function model,
//! the unit vectors v and w carried by the forward- and reversed-label
//! observables, the orthonormal pair (f, g) realizing prescribed angles,
//! the angle-equation checks, and the assembled statistical spatial
//! strategy of value 13/16.

use crate::error::{Error, Result};
use crate::games::{evaluate_game, BareStrategy, GameValue, NonlocalGame};
use crate::linalg::{Mat, C64};
use crate::observables::{
    eval_statistical_spatial, observation_matrix, FiniteSampleSpace, Ladder, Observable,
};

use std::f64::consts::PI;

/// Unit generator of the rank-one difference O_{gamma,1} - O_{gamma,0} in
/// the weighted inner product, sign-normalized so the first coordinate of
/// nonnegligible modulus has positive real part.
pub fn rank_one_generator(space: &FiniteSampleSpace, gamma: &Observable) -> Result<Vec<C64>> {
    let m1 = observation_matrix(space, gamma, 1)?;
    let m0 = observation_matrix(space, gamma, 0)?;
    let diff = m1.sub(&m0);
    // Standardize: entries become u_a * conj(u_b) for the standardized
    // generator u.
    let d = space.atoms();
    let std_diff = Mat::from_fn(d, d, |a, b| {
        diff[(a, b)] * C64::new((space.weight(a) / space.weight(b)).sqrt(), 0.0)
    });
    // Largest column carries the generator.
    let (mut best, mut best_norm) = (0, 0.0);
    for j in 0..d {
        let n: f64 = (0..d).map(|i| std_diff[(i, j)].norm_sqr()).sum();
        if n > best_norm {
            best_norm = n;
            best = j;
        }
    }
    if best_norm < 1e-24 {
        return Err(Error::NotRankOne { residual: 1.0 });
    }
    let col = std_diff.col(best);
    let mut u: Vec<C64> = col;
    let norm: f64 = u.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    u.iter_mut().for_each(|x| *x /= norm);
    // u is determined up to phase; fix it by the leading coordinate.
    if let Some(lead) = u.iter().find(|x| x.norm() > 1e-9) {
        let phase = lead / lead.norm();
        u.iter_mut().for_each(|x| *x /= phase);
    }
    let residual = std_diff.max_abs_diff(&Mat::outer(&u, &u));
    if residual > 1e-12 {
        return Err(Error::NotRankOne { residual });
    }
    // Undo the standardization.
    Ok(u.iter()
        .enumerate()
        .map(|(a, x)| x / C64::new(space.weight(a).sqrt(), 0.0))
        .collect())
}

/// The rank-one generators of the reversed- and forward-label single-class
/// observables on the 3-atom space: v = (1/√2, 1/√2, -√2) and w = (√2,
/// -1/√2, -1/√2), normalized so that <v,w> = +1/2.
pub fn build_vw(space: &FiniteSampleSpace) -> Result<(Vec<C64>, Vec<C64>)> {
    if space.atoms() != 3 {
        return Err(Error::InvalidSpace(format!(
            "the construction needs 3 atoms, got {}",
            space.atoms()
        )));
    }
    let (forward, reversed) = chsh_observables(space)?;
    let v = rank_one_generator(space, &reversed)?;
    let w = rank_one_generator(space, &forward)?;
    let gram = space.dot(&v, &w).re;
    if (gram - 0.5).abs() > 1e-9 {
        return Err(Error::GramCondition { got: gram, expected: 0.5 });
    }
    Ok((v, w))
}

fn chsh_observables(space: &FiniteSampleSpace) -> Result<(Observable, Observable)> {
    let forward = Observable::single_class(space, vec![0, 1, 2])?;
    let reversed = Observable::single_class(space, vec![2, 1, 0])?;
    Ok((forward, reversed))
}

/// Solves for orthonormal (f, g) with v = cos(kappa) f + sin(kappa) g and
/// w = cos(lambda) f + sin(lambda) g, by a 2x2 solve in span{v, w}.
pub fn solve_fg(
    space: &FiniteSampleSpace,
    v: &[C64],
    w: &[C64],
    kappa: f64,
    lambda: f64,
) -> Result<(Vec<C64>, Vec<C64>)> {
    let det = (lambda - kappa).sin();
    if det.abs() < 1e-12 {
        return Err(Error::DegenerateAngles);
    }
    let gram = space.dot(v, w).re;
    let expected = (kappa - lambda).cos();
    if (gram - expected).abs() > 1e-9 {
        return Err(Error::GramCondition { got: gram, expected });
    }
    let f: Vec<C64> = v
        .iter()
        .zip(w)
        .map(|(a, b)| (a * lambda.sin() - b * kappa.sin()) / det)
        .collect();
    let g: Vec<C64> = v
        .iter()
        .zip(w)
        .map(|(a, b)| (b * kappa.cos() - a * lambda.cos()) / det)
        .collect();
    Ok((f, g))
}

/// Residuals of the six angle equations for the observable `gamma` at
/// angle `nu` with respect to the orthonormal mean-zero pair (f, g):
///
/// cos²ν = ∫|O f|²  = ∫|g - O g|²,
/// sin²ν = ∫|O g|²  = ∫|f - O f|²,
/// sinν cosν = ∫ (O f)(conj O g) = -∫ (f - O f)(conj(g) - conj(O g)).
#[derive(Debug, Clone)]
pub struct AngleEquationReport {
    pub residuals: [f64; 6],
}

impl AngleEquationReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

pub fn verify_angle_equations(
    space: &FiniteSampleSpace,
    gamma: &Observable,
    nu: f64,
    f: &[C64],
    g: &[C64],
) -> Result<AngleEquationReport> {
    let of = crate::observables::observation_apply(space, gamma, 1, f)?;
    let og = crate::observables::observation_apply(space, gamma, 1, g)?;
    let sub = |a: &[C64], b: &[C64]| -> Vec<C64> { a.iter().zip(b).map(|(x, y)| x - y).collect() };
    let c2 = nu.cos().powi(2);
    let s2 = nu.sin().powi(2);
    let sc = nu.sin() * nu.cos();
    let residuals = [
        (space.dot(&of, &of).re - c2).abs(),
        (space.dot(&sub(g, &og), &sub(g, &og)).re - c2).abs(),
        (space.dot(&og, &og).re - s2).abs(),
        (space.dot(&sub(f, &of), &sub(f, &of)).re - s2).abs(),
        (space.dot(&of, &og) - C64::new(sc, 0.0)).norm(),
        (space.dot(&sub(f, &of), &sub(g, &og)) + C64::new(sc, 0.0)).norm(),
    ];
    Ok(AngleEquationReport { residuals })
}

/// One player's worth of the construction: angles (kappa, lambda = kappa +
/// pi/3), the two single-class observables, their generators v and w, and
/// the orthonormal pair (f, g) realizing the angles.
#[derive(Debug, Clone)]
pub struct ChshStatBasis {
    pub kappa: f64,
    pub lambda: f64,
    pub space: FiniteSampleSpace,
    /// Observable whose generator is v (plays the angle kappa); reversed
    /// labels.
    pub obs_kappa: Observable,
    /// Observable whose generator is w (plays the angle lambda); forward
    /// labels.
    pub obs_lambda: Observable,
    pub v: Vec<C64>,
    pub w: Vec<C64>,
    pub f: Vec<C64>,
    pub g: Vec<C64>,
}

impl ChshStatBasis {
    pub fn build(kappa: f64) -> Result<Self> {
        let lambda = kappa + PI / 3.0;
        let space = FiniteSampleSpace::uniform(3);
        let (forward, reversed) = chsh_observables(&space)?;
        let (v, w) = build_vw(&space)?;
        let (f, g) = solve_fg(&space, &v, &w, kappa, lambda)?;
        Ok(ChshStatBasis {
            kappa,
            lambda,
            space,
            obs_kappa: reversed,
            obs_lambda: forward,
            v,
            w,
            f,
            g,
        })
    }

    /// v̂ = -sin(kappa) f + cos(kappa) g, the generator of I - O_kappa on
    /// the mean-zero subspace.
    pub fn v_hat(&self) -> Vec<C64> {
        self.f
            .iter()
            .zip(&self.g)
            .map(|(a, b)| b * self.kappa.cos() - a * self.kappa.sin())
            .collect()
    }

    /// ŵ = sin(lambda) f - cos(lambda) g.
    pub fn w_hat(&self) -> Vec<C64> {
        self.f
            .iter()
            .zip(&self.g)
            .map(|(a, b)| a * self.lambda.sin() - b * self.lambda.cos())
            .collect()
    }

    pub fn angle_reports(&self) -> Result<[AngleEquationReport; 2]> {
        Ok([
            verify_angle_equations(&self.space, &self.obs_kappa, self.kappa, &self.f, &self.g)?,
            verify_angle_equations(&self.space, &self.obs_lambda, self.lambda, &self.f, &self.g)?,
        ])
    }
}

/// Both players' bases plus the entangled wavefunction on the 9-atom
/// product space.
#[derive(Debug, Clone)]
pub struct ChshStatStrategyData {
    pub alice: ChshStatBasis,
    pub bob: ChshStatBasis,
    pub delta: Vec<C64>,
}

impl ChshStatStrategyData {
    /// Alice's observables by question: x = 0 plays angle 0 (= kappa), x =
    /// 1 plays pi/3 (= lambda).
    pub fn alice_observables(&self) -> Vec<Observable> {
        vec![self.alice.obs_kappa.clone(), self.alice.obs_lambda.clone()]
    }

    /// Bob's observables by question: y = 0 plays pi/6 (= lambda), y = 1
    /// plays -pi/6 (= kappa).
    pub fn bob_observables(&self) -> Vec<Observable> {
        vec![self.bob.obs_lambda.clone(), self.bob.obs_kappa.clone()]
    }

    /// Resolution-3 observables answering a binary question: thresholds
    /// (0, 1, 2), with the order-0 averaging annihilating the wavefunction.
    pub fn ladder() -> Ladder {
        Ladder::new(vec![0, 1, 2], 3).expect("valid ladder")
    }
}

/// Builds the full statistical spatial CHSH strategy: Alice's basis at
/// angles (0, pi/3), Bob's at (-pi/6, pi/6), and Delta = (f⊗h + g⊗k)/√2.
/// The resulting table has game value 13/16.
pub fn build_chsh_statistical() -> Result<(ChshStatStrategyData, BareStrategy)> {
    let alice = ChshStatBasis::build(0.0)?;
    let bob = ChshStatBasis::build(-PI / 6.0)?;
    let (h, k) = (&bob.f, &bob.g);
    let scale = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut delta = Vec::with_capacity(9);
    for s in 0..3 {
        for t in 0..3 {
            delta.push((alice.f[s] * h[t] + alice.g[s] * k[t]) * scale);
        }
    }
    let data = ChshStatStrategyData { alice, bob, delta };
    let ladder = ChshStatStrategyData::ladder();
    let strategy = eval_statistical_spatial(
        &data.alice.space,
        &data.bob.space,
        &data.alice_observables(),
        &data.bob_observables(),
        &data.delta,
        &ladder,
        &ladder,
    )?;
    Ok((data, strategy))
}

/// Convenience wrapper: the statistical CHSH game value.
pub fn chsh_statistical_value() -> Result<GameValue> {
    let (_, strategy) = build_chsh_statistical()?;
    evaluate_game(&NonlocalGame::chsh(), &strategy)
}
