#![allow(dead_code)]

use ndde_core::{PiecewiseTrajectory, Segment, Vec3};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn vec_in_ball<R: Rng>(rng: &mut R, radius: f64) -> Vec3 {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if v.norm_squared() <= 1.0 {
            return v * radius;
        }
    }
}

pub fn unit_vec<R: Rng>(rng: &mut R) -> Vec3 {
    loop {
        if let Some(n) = vec_in_ball(rng, 1.0).normalized() {
            if n.norm() > 0.5 {
                return n;
            }
        }
    }
}

/// Random cubic worldline on `[t0, t1]` with `pieces` Hermite segments.
/// Knot speeds stay below 0.6 and the cubic bulge adds at most ~0.13,
/// so the whole curve stays below `v_max = 0.9`. With `kinked` the
/// velocity also jumps at every interior knot.
fn build<R: Rng>(rng: &mut R, t0: f64, t1: f64, pieces: usize, kinked: bool) -> PiecewiseTrajectory {
    let mut knots: Vec<f64> = (1..pieces).map(|_| rng.gen_range(t0..t1)).collect();
    knots.push(t0);
    knots.push(t1);
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let mut x = vec_in_ball(rng, 2.0);
    let mut v = vec_in_ball(rng, 0.6);
    let mut segments = Vec::new();
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        if kinked {
            v = vec_in_ball(rng, 0.6);
        }
        let v1 = vec_in_ball(rng, 0.6);
        let bulge = Vec3::new(rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05));
        let x1 = x + ((v + v1) * 0.5 + bulge) * (b - a);
        segments.push(Segment::hermite(a, b, x, v, x1, v1).unwrap());
        x = x1;
        v = v1;
    }
    PiecewiseTrajectory::with_v_max(segments, 1.0, -1.0, 0.9).unwrap()
}

pub fn random_trajectory<R: Rng>(rng: &mut R, t0: f64, t1: f64, pieces: usize) -> PiecewiseTrajectory {
    build(rng, t0, t1, pieces, false)
}

pub fn random_kinked_trajectory<R: Rng>(rng: &mut R, t0: f64, t1: f64, pieces: usize) -> PiecewiseTrajectory {
    build(rng, t0, t1, pieces, true)
}

use ndde_core::crystal::{FourierPotential, FourierTerm, Lattice};
use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

fn random_coefficient<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> Complex64 {
    Complex64::from_polar(rng.gen_range(lo..hi), rng.gen_range(0.0..TAU))
}

/// Random planar potential on a random 2D lattice (1 or 2 `±G` pairs) and a
/// momentum kept away from first- and second-order resonances, and outside
/// three pendulum half-widths `sqrt(2ε|V|)|G|` of every first-order one.
pub fn random_nonresonant<R: Rng>(rng: &mut R, eps: f64) -> (FourierPotential, Vec3) {
    loop {
        let a1 = Vec3::new(rng.gen_range(0.8..1.2), rng.gen_range(-0.2..0.2), 0.0);
        let a2 = Vec3::new(rng.gen_range(-0.3..0.3), rng.gen_range(0.8..1.2), 0.0);
        let lattice = Lattice::new_2d(a1, a2).unwrap();
        let all = lattice.reciprocal_vectors(1);
        let pairs = rng.gen_range(1..=2);
        let mut terms: Vec<FourierTerm> = Vec::new();
        while terms.len() < 2 * pairs {
            let g = all[rng.gen_range(0..all.len())];
            if terms.iter().any(|t| (t.g - g).max_abs() < 1e-9 || (t.g + g).max_abs() < 1e-9) {
                continue;
            }
            let v = random_coefficient(rng, 0.2, 1.0);
            terms.push(FourierTerm { g, v });
            terms.push(FourierTerm { g: -g, v: v.conj() });
        }
        let speed = rng.gen_range(0.5..1.5);
        let angle: f64 = rng.gen_range(0.0..TAU);
        let p = Vec3::new(angle.cos(), angle.sin(), 0.0) * speed;
        let combos: Vec<Vec3> = terms
            .iter()
            .flat_map(|a| terms.iter().map(move |b| a.g + b.g))
            .chain(terms.iter().map(|t| t.g))
            .filter(|g| g.norm() > 1e-9)
            .collect();
        let outside_width =
            terms.iter().all(|t| t.g.dot(p).abs() >= 3.0 * (2.0 * eps * t.v.norm()).sqrt() * t.g.norm());
        if outside_width && combos.iter().all(|g| g.dot(p).abs() >= 0.25 * g.norm() * p.norm()) {
            return (FourierPotential::new(eps, terms).unwrap(), p);
        }
    }
}

/// A single `±G0` pair with incoming momentum exactly perpendicular to `G0`
/// and a start at rest (along `G0`) inside the potential well, where
/// `cos(G0·x0 + arg V) <= -margin`.
pub struct ResonantCase {
    pub pot: FourierPotential,
    pub g0: Vec3,
    pub x0: Vec3,
    pub p0: Vec3,
}

pub fn random_resonant<R: Rng>(rng: &mut R, margin: f64) -> ResonantCase {
    let dir = rng.gen_range(0.0..TAU);
    let g0 = Vec3::new(dir.cos(), dir.sin(), 0.0) * rng.gen_range(2.0..8.0);
    let v = random_coefficient(rng, 0.2, 1.0);
    let eps = rng.gen_range(0.002..0.02);
    let pot = FourierPotential::single_pair(eps, g0, v).unwrap();
    let half_width = margin.acos();
    let phase = rng.gen_range(PI - half_width..PI + half_width) - v.arg();
    let x0 = g0 * (phase / g0.norm_squared()) + Vec3::Z.cross(g0).normalized().unwrap() * rng.gen_range(-1.0..1.0);
    let p0 = Vec3::Z.cross(g0).normalized().unwrap() * rng.gen_range(0.0..1.0);
    ResonantCase { pot, g0, x0, p0 }
}
