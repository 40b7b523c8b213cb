//! Seeded random problems for property suites and `selftest`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{CompactSet, ExtPoint, PoleDivisor};
use crate::solver::Problem;

const MIN_SEPARATION: f64 = 0.1;

/// One random problem: a two- or three-interval set in `[-3, 3]`, poles in
/// the gaps and possibly at infinity, `1 ≤ n ≤ max_n`.
pub fn random_problem<R: Rng>(rng: &mut R, max_n: usize) -> Problem {
    loop {
        let k = rng.gen_range(2..=3);
        let mut pts: Vec<f64> = (0..2 * k).map(|_| rng.gen_range(-3.0..3.0)).collect();
        pts.sort_by(f64::total_cmp);
        if pts.windows(2).any(|w| w[1] - w[0] < MIN_SEPARATION) {
            continue;
        }
        let iv: Vec<(f64, f64)> = pts.chunks(2).map(|c| (c[0], c[1])).collect();
        let mut atoms: Vec<(ExtPoint, u32)> = Vec::new();
        for i in 0..k - 1 {
            if rng.gen_bool(0.7) {
                let (a, b) = (iv[i].1, iv[i + 1].0);
                let margin = 0.05 * (b - a);
                atoms.push((
                    ExtPoint::Finite(rng.gen_range(a + margin..b - margin)),
                    rng.gen_range(1..=2),
                ));
            }
        }
        let n_inf = rng.gen_range(0..=3);
        if n_inf > 0 {
            atoms.push((ExtPoint::Infinity, n_inf));
        }
        if rng.gen_bool(0.3) {
            atoms.push((
                ExtPoint::Finite(iv[k - 1].1 + rng.gen_range(0.05..2.0)),
                rng.gen_range(1..=2),
            ));
        }
        let n: u32 = atoms.iter().map(|a| a.1).sum();
        if n == 0 || n as usize > max_n {
            continue;
        }
        let x_star = match rng.gen_range(0..3) {
            0 => ExtPoint::Infinity,
            1 => atoms[rng.gen_range(0..atoms.len())].0,
            _ => ExtPoint::Finite(iv[0].0 - rng.gen_range(0.05..1.0)),
        };
        let set = CompactSet::new(&iv).expect("separated intervals");
        let poles = PoleDivisor::new(&atoms).expect("distinct atoms");
        if let Ok(p) = Problem::new(set, poles, x_star) {
            return p;
        }
    }
}

/// `count` problems from `seed`.
pub fn random_problems(seed: u64, count: usize, max_n: usize) -> Vec<Problem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| random_problem(&mut rng, max_n))
        .collect()
}
