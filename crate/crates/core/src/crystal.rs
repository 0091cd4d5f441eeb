//! A charge moving through a weak periodic potential.
//!
//! ```text
//! H = ½|p|² + ε Σ_G V_G exp(i G·x),    V_{-G} = conj(V_G)
//! ```
//!
//! Away from resonance a near-identity canonical transformation with
//! generating coefficients `F_G` removes the potential to first order, so
//! the motion is free. When `G·P = 0` for some `G` the term cannot be removed
//! and the reduced dynamics is a pendulum along `G`, which kicks the momentum
//! parallel to `G`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vec3::Vec3;

/// Tolerance on `V_{-G} = conj(V_G)` and on `b_i·a_j = 2π δ_ij`.
pub const REALITY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CrystalError {
    #[error("lattice basis is degenerate or non-finite")]
    DegenerateLattice,
    #[error("potential is not real: V(-G) != conj V(G) for G = {0}")]
    NotReal(Vec3),
    #[error("duplicate reciprocal vector {0}")]
    DuplicateG(Vec3),
    #[error("epsilon must be finite and non-negative, got {0}")]
    BadEpsilon(f64),
    #[error("invalid integration parameters: {0}")]
    BadStep(String),
    #[error("state became non-finite after t = {}", last_good.t)]
    NonFinite { last_good: PhaseSample },
    #[error("potential has no non-zero Fourier term")]
    NoTerms,
    #[error("period L must be positive, got {0}")]
    BadPeriod(f64),
}

/// A Bravais lattice in 2D (the xy plane) or 3D.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    basis: Vec<Vec3>,
    reciprocal: Vec<Vec3>,
}

impl Lattice {
    /// Planar lattice spanned by `a1`, `a2` (z components are ignored).
    pub fn new_2d(a1: Vec3, a2: Vec3) -> Result<Self, CrystalError> {
        let flat = |v: Vec3| Vec3::new(v.x, v.y, 0.0);
        let (a1, a2) = (flat(a1), flat(a2));
        let (b1, b2, _) = reciprocal_triple(a1, a2, Vec3::Z)?;
        Ok(Lattice { basis: vec![a1, a2], reciprocal: vec![b1, b2] })
    }

    pub fn new_3d(a1: Vec3, a2: Vec3, a3: Vec3) -> Result<Self, CrystalError> {
        let (b1, b2, b3) = reciprocal_triple(a1, a2, a3)?;
        Ok(Lattice { basis: vec![a1, a2, a3], reciprocal: vec![b1, b2, b3] })
    }

    /// Square lattice of spacing `d`.
    pub fn square(d: f64) -> Result<Self, CrystalError> {
        Self::new_2d(Vec3::X * d, Vec3::Y * d)
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec3] {
        &self.basis
    }

    pub fn reciprocal(&self) -> &[Vec3] {
        &self.reciprocal
    }

    /// `max_i |b_i·a_j - 2π δ_ij|`.
    pub fn duality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, b) in self.reciprocal.iter().enumerate() {
            for (j, a) in self.basis.iter().enumerate() {
                let target = if i == j { TAU } else { 0.0 };
                worst = worst.max((b.dot(*a) - target).abs());
            }
        }
        worst
    }

    /// Lattice translation with integer coordinates `idx`.
    pub fn site(&self, idx: &[i64]) -> Vec3 {
        self.basis.iter().zip(idx).map(|(a, &n)| *a * n as f64).sum()
    }

    /// Reciprocal vector with integer coordinates `idx`.
    pub fn reciprocal_vector(&self, idx: &[i64]) -> Vec3 {
        self.reciprocal.iter().zip(idx).map(|(b, &n)| *b * n as f64).sum()
    }

    /// All non-zero reciprocal vectors with coordinates in `-m..=m`.
    pub fn reciprocal_vectors(&self, max_index: i64) -> Vec<Vec3> {
        let m = max_index.max(0);
        let range: Vec<i64> = (-m..=m).collect();
        let mut out = Vec::new();
        let mut idx = vec![0i64; self.dim()];
        fn rec(l: &Lattice, range: &[i64], idx: &mut Vec<i64>, k: usize, out: &mut Vec<Vec3>) {
            if k == idx.len() {
                if idx.iter().any(|&n| n != 0) {
                    out.push(l.reciprocal_vector(idx));
                }
                return;
            }
            for &n in range {
                idx[k] = n;
                rec(l, range, idx, k + 1, out);
            }
        }
        rec(self, &range, &mut idx, 0, &mut out);
        out
    }
}

fn reciprocal_triple(a1: Vec3, a2: Vec3, a3: Vec3) -> Result<(Vec3, Vec3, Vec3), CrystalError> {
    let vol = a1.dot(a2.cross(a3));
    if !(vol.abs() > 1e-300) || !vol.is_finite() {
        return Err(CrystalError::DegenerateLattice);
    }
    let k = TAU / vol;
    Ok((a2.cross(a3) * k, a3.cross(a1) * k, a1.cross(a2) * k))
}

/// One Fourier term `V_G exp(i G·x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierTerm {
    pub g: Vec3,
    pub v: Complex64,
}

/// `ε Σ_G V_G exp(i G·x)` with finite support, checked to be real.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierPotential {
    epsilon: f64,
    terms: Vec<FourierTerm>,
}

impl FourierPotential {
    /// `terms` must list both `G` and `-G` with conjugate coefficients.
    pub fn new(epsilon: f64, terms: Vec<FourierTerm>) -> Result<Self, CrystalError> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(CrystalError::BadEpsilon(epsilon));
        }
        for (i, t) in terms.iter().enumerate() {
            if terms[..i].iter().any(|u| u.g == t.g) {
                return Err(CrystalError::DuplicateG(t.g));
            }
            let partner = terms.iter().find(|u| (u.g + t.g).max_abs() <= REALITY_TOL * (1.0 + t.g.max_abs()));
            match partner {
                Some(u) if (u.v - t.v.conj()).norm() <= REALITY_TOL * (1.0 + t.v.norm()) => {}
                _ => return Err(CrystalError::NotReal(t.g)),
            }
        }
        Ok(FourierPotential { epsilon, terms })
    }

    /// The pair `±G` with `V_{±G} = v, conj(v)`.
    pub fn single_pair(epsilon: f64, g: Vec3, v: Complex64) -> Result<Self, CrystalError> {
        Self::new(epsilon, vec![FourierTerm { g, v }, FourierTerm { g: -g, v: v.conj() }])
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn terms(&self) -> &[FourierTerm] {
        &self.terms
    }

    /// `ε Σ V_G exp(iG·x)` before dropping the (round-off) imaginary part.
    pub fn value_complex(&self, x: Vec3) -> Complex64 {
        let sum: Complex64 = self.terms.iter().map(|t| t.v * Complex64::cis(t.g.dot(x))).sum();
        sum * self.epsilon
    }

    pub fn value(&self, x: Vec3) -> f64 {
        self.value_complex(x).re
    }

    /// `-∇V = ε Σ Im(V_G e^{iG·x}) G`.
    pub fn force(&self, x: Vec3) -> Vec3 {
        let sum: Vec3 = self.terms.iter().map(|t| t.g * (t.v * Complex64::cis(t.g.dot(x))).im).sum();
        sum * self.epsilon
    }

    /// The non-zero term of least `|G|` (ties broken by order of listing).
    pub fn dominant_term(&self) -> Option<FourierTerm> {
        self.terms
            .iter()
            .filter(|t| t.v.norm() > 0.0 && t.g.norm() > 0.0)
            .min_by(|a, b| a.g.norm().total_cmp(&b.g.norm()))
            .copied()
    }

    /// Small-oscillation frequency `sqrt(2ε|V_G0|) |G0|` of the reduced pendulum.
    pub fn pendulum_frequency(&self) -> Option<f64> {
        self.dominant_term().map(|t| (2.0 * self.epsilon * t.v.norm()).sqrt() * t.g.norm())
    }

    /// Separatrix momentum bound `sqrt(4ε|V_G0|)`.
    pub fn separatrix_bound(&self) -> Option<f64> {
        self.dominant_term().map(|t| (4.0 * self.epsilon * t.v.norm()).sqrt())
    }

    /// A step resolving both the fastest phase rate `|G·p0|` of a potential
    /// term
    /// and the pendulum oscillation with `per_period` steps.
    pub fn default_step(&self, p0: Vec3, per_period: f64) -> Option<f64> {
        let fastest = self
            .terms
            .iter()
            .filter(|t| t.v.norm() > 0.0)
            .map(|t| t.g.dot(p0).abs().max((2.0 * self.epsilon * t.v.norm()).sqrt() * t.g.norm()))
            .fold(0.0, f64::max);
        (fastest > 0.0).then(|| TAU / fastest / per_period)
    }
}

/// `H = ½|p|² + V(x)`.
pub fn hamiltonian(p: Vec3, x: Vec3, pot: &FourierPotential) -> f64 {
    0.5 * p.norm_squared() + pot.value(x)
}

/// Generating-function coefficients for a given new momentum.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingCoefficients {
    /// `(G, F_G)` for every non-resonant term.
    pub coefficients: Vec<FourierTerm>,
    /// Terms with `|G·P| <= tol |G| |P|`, left out.
    pub resonant: Vec<Vec3>,
}

fn is_resonant(g: Vec3, p: Vec3, tol: f64) -> bool {
    g.dot(p).abs() <= tol * g.norm() * p.norm()
}

/// `F_G = i V_G / (G·P)`, the choice that cancels the first-order potential.
pub fn generating_coefficients(pot: &FourierPotential, p: Vec3, tol: f64) -> GeneratingCoefficients {
    let mut out = GeneratingCoefficients { coefficients: Vec::new(), resonant: Vec::new() };
    for t in pot.terms() {
        if is_resonant(t.g, p, tol) {
            out.resonant.push(t.g);
        } else {
            out.coefficients.push(FourierTerm { g: t.g, v: Complex64::i() * t.v / t.g.dot(p) });
        }
    }
    out
}

/// `max_G |V_G + i (G·P) F_G|` over the supplied coefficients.
pub fn first_order_residual_with(pot: &FourierPotential, p: Vec3, coeffs: &[FourierTerm]) -> f64 {
    coeffs
        .iter()
        .filter_map(|f| {
            let v = pot.terms().iter().find(|t| t.g == f.g)?.v;
            Some((v + Complex64::i() * f.g.dot(p) * f.v).norm())
        })
        .fold(0.0, f64::max)
}

/// Residual of the first-order terms with coefficients from
/// [`generating_coefficients`] (resonance tolerance 1e-12).
pub fn first_order_residual(pot: &FourierPotential, p: Vec3) -> f64 {
    first_order_residual_with(pot, p, &generating_coefficients(pot, p, 1e-12).coefficients)
}

/// First-order free momentum `P = p - ε Σ i G F_G exp(iG·x)` with the
/// coefficients evaluated at `p`. Resonant terms are skipped.
pub fn free_momentum(pot: &FourierPotential, x: Vec3, p: Vec3, tol: f64) -> Vec3 {
    let c = generating_coefficients(pot, p, tol);
    let shift: Vec3 = c.coefficients.iter().map(|f| f.g * (Complex64::i() * f.v * Complex64::cis(f.g.dot(x))).re).sum();
    p - shift * pot.epsilon()
}

/// Reciprocal vectors up to `max_index` that are resonant with `P`.
pub fn resonance_set(lattice: &Lattice, p: Vec3, tol: f64, max_index: i64) -> Vec<Vec3> {
    lattice.reciprocal_vectors(max_index).into_iter().filter(|&g| is_resonant(g, p, tol)).collect()
}

/// A phase-space sample with its energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSample {
    pub t: f64,
    pub x: Vec3,
    pub p: Vec3,
    pub h: f64,
}

/// Output of [`integrate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrystalRun {
    pub dt: f64,
    pub samples: Vec<PhaseSample>,
}

impl CrystalRun {
    pub fn first(&self) -> &PhaseSample {
        &self.samples[0]
    }

    pub fn last(&self) -> &PhaseSample {
        &self.samples[self.samples.len() - 1]
    }

    /// Largest `|H(t) - H(0)| / |H(0)|` over the samples.
    pub fn max_relative_energy_error(&self) -> f64 {
        let h0 = self.first().h;
        self.samples.iter().map(|s| (s.h - h0).abs()).fold(0.0, f64::max) / h0.abs()
    }
}

/// Leapfrog (kick-drift-kick) on `[0, t_end]`, keeping every `sample_every`-th
/// step plus the final state.
pub fn integrate(
    pot: &FourierPotential,
    x0: Vec3,
    p0: Vec3,
    t_end: f64,
    dt: f64,
    sample_every: usize,
) -> Result<CrystalRun, CrystalError> {
    if !(dt > 0.0 && dt.is_finite() && t_end > 0.0 && t_end.is_finite()) {
        return Err(CrystalError::BadStep(format!("dt={dt}, T={t_end}")));
    }
    if sample_every == 0 {
        return Err(CrystalError::BadStep("sample stride must be positive".into()));
    }
    if !x0.is_finite() || !p0.is_finite() {
        return Err(CrystalError::BadStep("non-finite initial state".into()));
    }
    let steps = (t_end / dt).round().max(1.0) as usize;
    let sample = |t, x, p| PhaseSample { t, x, p, h: hamiltonian(p, x, pot) };
    let (mut x, mut p) = (x0, p0);
    let mut f = pot.force(x);
    let mut samples = vec![sample(0.0, x, p)];
    for k in 1..=steps {
        p += f * (0.5 * dt);
        x += p * dt;
        f = pot.force(x);
        p += f * (0.5 * dt);
        if !(x.is_finite() && p.is_finite()) {
            return Err(CrystalError::NonFinite { last_good: *samples.last().unwrap() });
        }
        if k % sample_every == 0 || k == steps {
            samples.push(sample(k as f64 * dt, x, p));
        }
    }
    Ok(CrystalRun { dt, samples })
}

/// Momentum kick of a run measured against the dominant reciprocal vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KickReport {
    pub delta_p: Vec3,
    /// Dominant `G`, signed so that `G·ΔP >= 0`.
    pub g0: Vec3,
    /// `cos(ΔP, G0)`; absent for a zero kick.
    pub alignment: Option<f64>,
    /// Potential term whose `G` is best aligned with `ΔP`.
    pub nearest_g: Option<Vec3>,
    pub separatrix_bound: f64,
    /// `(sqrt(4ε|V_G0|)/|G0|) G0`.
    pub estimate: Vec3,
}

/// `ΔP = p(T) - p(0)` with alignment, bound and estimate.
pub fn momentum_kick(run: &CrystalRun, pot: &FourierPotential) -> Result<KickReport, CrystalError> {
    let dom = pot.dominant_term().ok_or(CrystalError::NoTerms)?;
    let delta_p = run.last().p - run.first().p;
    let g0 = if dom.g.dot(delta_p) < 0.0 { -dom.g } else { dom.g };
    let cos = |g: Vec3| delta_p.dot(g) / (delta_p.norm() * g.norm());
    let kicked = delta_p.norm() > 0.0;
    let nearest_g = kicked
        .then(|| {
            pot.terms().iter().filter(|t| t.v.norm() > 0.0).map(|t| t.g).max_by(|a, b| cos(*a).total_cmp(&cos(*b)))
        })
        .flatten();
    let bound = (4.0 * pot.epsilon() * dom.v.norm()).sqrt();
    Ok(KickReport {
        delta_p,
        g0,
        alignment: kicked.then(|| cos(g0)),
        nearest_g,
        separatrix_bound: bound,
        estimate: g0 * (bound / g0.norm()),
    })
}

/// Change of the scattered velocity `Δu = (L|u|/2π) G`.
pub fn vonlaue_shift(l: f64, u: Vec3, g: Vec3) -> Vec3 {
    g * (l * u.norm() / TAU)
}

/// Result of checking `Δû·Δr = nL` over a patch of sites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VonLaueCheck {
    pub sites: usize,
    /// Largest distance of `Δû·Δr / L` from an integer, times `L`.
    pub max_error: f64,
}

/// Checks the delay condition for `Δu` on an `n`-sites-per-side patch,
/// lattice coordinates `0..n` along every basis vector.
pub fn vonlaue_check(lattice: &Lattice, l: f64, u: Vec3, delta_u: Vec3, n: usize) -> Result<VonLaueCheck, CrystalError> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(CrystalError::BadPeriod(l));
    }
    let speed = u.norm();
    if !(speed > 0.0 && speed.is_finite()) {
        return Err(CrystalError::BadStep("velocity must be non-zero".into()));
    }
    let du_hat = delta_u / speed;
    let mut check = VonLaueCheck { sites: 0, max_error: 0.0 };
    let dim = lattice.dim();
    let sites = n.pow(dim as u32);
    for flat in 0..sites {
        let idx: Vec<i64> = (0..dim).map(|k| ((flat / n.pow(k as u32)) % n) as i64).collect();
        let dt = du_hat.dot(lattice.site(&idx));
        check.max_error = check.max_error.max((dt - (dt / l).round() * l).abs());
        check.sites += 1;
    }
    Ok(check)
}
