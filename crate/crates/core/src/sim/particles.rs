//! Per-trial particle state and the four-stage time step.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use super::overlap::OverlapSampler;
use super::SimError;

/// Steps between compaction passes over the free-particle arrays.
pub const COMPACT_EVERY: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParticleState {
    FreeA,
    /// Bound at this point on the receiver surface.
    BoundC([f64; 3]),
    Degraded,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub position: [f64; 3],
    pub state: ParticleState,
}

/// Molecules of one trial. Free molecules live in coordinate arrays with
/// an `alive` mask; dead slots are swept out every [`COMPACT_EVERY`] steps.
#[derive(Debug, Clone)]
pub struct TrialState {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    alive: Vec<bool>,
    free: usize,
    bound: Vec<[f64; 3]>,
    degraded: usize,
    total: usize,
    step: u64,
}

impl TrialState {
    /// `n` free molecules at `(0, 0, r0)`.
    pub fn released(n: usize, r0: f64) -> Self {
        TrialState {
            x: vec![0.0; n],
            y: vec![0.0; n],
            z: vec![r0; n],
            alive: vec![true; n],
            free: n,
            bound: Vec::new(),
            degraded: 0,
            total: n,
            step: 0,
        }
    }

    pub fn from_particles(particles: &[Particle]) -> Self {
        let mut state = TrialState::released(0, 0.0);
        for p in particles {
            match p.state {
                ParticleState::FreeA => state.push_free(p.position),
                ParticleState::BoundC(point) => state.bound.push(point),
                ParticleState::Degraded => state.degraded += 1,
            }
        }
        state.total = particles.len();
        state
    }

    fn push_free(&mut self, p: [f64; 3]) {
        self.x.push(p[0]);
        self.y.push(p[1]);
        self.z.push(p[2]);
        self.alive.push(true);
        self.free += 1;
    }

    pub fn free_count(&self) -> usize {
        self.free
    }

    pub fn bound_count(&self) -> usize {
        self.bound.len()
    }

    pub fn degraded_count(&self) -> usize {
        self.degraded
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Snapshot of every molecule; degraded ones carry no position.
    pub fn particles(&self) -> Vec<Particle> {
        let mut out = Vec::with_capacity(self.total);
        for i in (0..self.x.len()).filter(|&i| self.alive[i]) {
            out.push(Particle {
                position: [self.x[i], self.y[i], self.z[i]],
                state: ParticleState::FreeA,
            });
        }
        for &point in &self.bound {
            out.push(Particle {
                position: point,
                state: ParticleState::BoundC(point),
            });
        }
        out.extend((0..self.degraded).map(|_| Particle {
            position: [f64::NAN; 3],
            state: ParticleState::Degraded,
        }));
        out
    }

    fn compact(&mut self) {
        let mut j = 0;
        for i in 0..self.alive.len() {
            if self.alive[i] {
                self.x[j] = self.x[i];
                self.y[j] = self.y[i];
                self.z[j] = self.z[i];
                j += 1;
            }
        }
        self.x.truncate(j);
        self.y.truncate(j);
        self.z.truncate(j);
        self.alive.clear();
        self.alive.resize(j, true);
    }

    /// Conservation, surface placement and exclusion from the receiver.
    pub fn check_invariants(&self, a: f64) -> Result<(), String> {
        let count = self.free + self.bound.len() + self.degraded;
        if count != self.total {
            return Err(format!(
                "{} free + {} bound + {} degraded != {}",
                self.free,
                self.bound.len(),
                self.degraded,
                self.total
            ));
        }
        if self.alive.iter().filter(|&&l| l).count() != self.free {
            return Err("free count out of sync with storage".into());
        }
        for &[x, y, z] in &self.bound {
            let r = (x * x + y * y + z * z).sqrt();
            if (r - a).abs() > 1e-12 * a {
                return Err(format!("bound molecule at radius {r:e}, receiver radius {a:e}"));
            }
        }
        for i in (0..self.x.len()).filter(|&i| self.alive[i]) {
            let r2 = self.x[i] * self.x[i] + self.y[i] * self.y[i] + self.z[i] * self.z[i];
            if r2 < a * a {
                return Err(format!("free molecule inside receiver at radius {:e}", r2.sqrt()));
            }
        }
        Ok(())
    }
}

/// Per-step constants derived from the channel and the step size.
#[derive(Debug, Clone)]
pub struct Stepper {
    pub a: f64,
    /// Per-axis displacement standard deviation `√(2 D Δt)`.
    pub step_sd: f64,
    pub p_degrade: f64,
    pub p_accept: f64,
    pub p_release: f64,
    pub sampler: OverlapSampler,
}

/// First point where the segment `from → to` enters the sphere of radius
/// `a`, `from` outside and `to` inside. Projected onto the surface.
fn entry_point(from: [f64; 3], to: [f64; 3], a: f64) -> [f64; 3] {
    let d = [to[0] - from[0], to[1] - from[1], to[2] - from[2]];
    let qa = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
    let qb = 2.0 * (from[0] * d[0] + from[1] * d[1] + from[2] * d[2]);
    let qc = from[0] * from[0] + from[1] * from[1] + from[2] * from[2] - a * a;
    let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
    let point = if qa > 0.0 {
        let q = -0.5 * (qb + qb.signum() * disc.sqrt());
        let mut s = f64::INFINITY;
        for root in [q / qa, if q != 0.0 { qc / q } else { f64::NAN }] {
            if (0.0..=1.0).contains(&root) && root < s {
                s = root;
            }
        }
        if s.is_finite() {
            [from[0] + s * d[0], from[1] + s * d[1], from[2] + s * d[2]]
        } else {
            to
        }
    } else {
        to
    };
    let r = (point[0] * point[0] + point[1] * point[1] + point[2] * point[2]).sqrt();
    if r == 0.0 {
        return [0.0, 0.0, a];
    }
    point.map(|c| c * a / r)
}

/// Advances one trial by one step.
///
/// Draw order: for each live free molecule in storage order, three normal
/// deviates (x, y, z), then one uniform for degradation if `p_degrade > 0`,
/// then one uniform for acceptance if the endpoint overlaps the receiver.
/// Then for each bound molecule in bound-list order (molecules bound this
/// step included), one uniform for release if `p_release > 0`; a released
/// molecule draws one uniform for its radius and two for its direction.
pub fn step_trial<R: Rng + ?Sized>(
    state: &mut TrialState,
    stepper: &Stepper,
    rng: &mut R,
) -> Result<(), SimError> {
    let a = stepper.a;
    let a2 = a * a;
    let sd = stepper.step_sd;
    for i in 0..state.x.len() {
        if !state.alive[i] {
            continue;
        }
        let from = [state.x[i], state.y[i], state.z[i]];
        let dx: f64 = rng.sample(StandardNormal);
        let dy: f64 = rng.sample(StandardNormal);
        let dz: f64 = rng.sample(StandardNormal);
        let to = [from[0] + sd * dx, from[1] + sd * dy, from[2] + sd * dz];

        if stepper.p_degrade > 0.0 && rng.random::<f64>() < stepper.p_degrade {
            state.alive[i] = false;
            state.free -= 1;
            state.degraded += 1;
            continue;
        }

        let r2 = to[0] * to[0] + to[1] * to[1] + to[2] * to[2];
        if r2 < a2 {
            if rng.random::<f64>() < stepper.p_accept {
                state.bound.push(entry_point(from, to, a));
                state.alive[i] = false;
                state.free -= 1;
            } else if from[0] * from[0] + from[1] * from[1] + from[2] * from[2] < a2 {
                return Err(SimError::InvariantBreach(format!(
                    "molecule restored to a point inside the receiver at step {}",
                    state.step + 1
                )));
            }
            // Rejected molecules keep their pre-step position.
            continue;
        }
        state.x[i] = to[0];
        state.y[i] = to[1];
        state.z[i] = to[2];
    }

    if stepper.p_release > 0.0 {
        let mut released = Vec::new();
        state.bound.retain(|_| {
            if rng.random::<f64>() < stepper.p_release {
                let r = stepper.sampler.sample(rng.random::<f64>());
                let cos_t = 2.0 * rng.random::<f64>() - 1.0;
                let phi = 2.0 * PI * rng.random::<f64>();
                let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
                released.push([r * sin_t * phi.cos(), r * sin_t * phi.sin(), r * cos_t]);
                false
            } else {
                true
            }
        });
        for p in released {
            state.push_free(p);
        }
    }

    state.step += 1;
    if state.step.is_multiple_of(COMPACT_EVERY) {
        state.compact();
    }
    if state.free + state.bound.len() + state.degraded != state.total {
        return Err(SimError::InvariantBreach(format!(
            "molecule count not conserved at step {}",
            state.step
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ChannelParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn stepper(p_degrade: f64, p_accept: f64, p_release: f64) -> Stepper {
        let p = ChannelParams::baseline();
        Stepper {
            a: p.a(),
            step_sd: (2.0 * p.diffusion() * 1e-7).sqrt(),
            p_degrade,
            p_accept,
            p_release,
            sampler: OverlapSampler::new(1e-7, &p).unwrap(),
        }
    }

    #[test]
    fn entry_point_is_first_crossing() {
        let a = 1.0;
        let p = entry_point([0.0, 0.0, 2.0], [0.0, 0.0, 0.5], a);
        assert_eq!(p, [0.0, 0.0, 1.0]);
        // A chord entering and leaving: the nearer crossing wins.
        let p = entry_point([-2.0, 0.5, 0.0], [0.1, 0.5, 0.0], a);
        assert!((p[0] + 0.75f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn inert_walk_keeps_everyone_free() {
        let s = stepper(0.0, 0.0, 0.0);
        let mut state = TrialState::released(500, 0.6e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..300 {
            step_trial(&mut state, &s, &mut rng).unwrap();
            state.check_invariants(s.a).unwrap();
        }
        assert_eq!(state.free_count(), 500);
    }

    #[test]
    fn forced_overlap_binds_or_restores() {
        let s = stepper(0.0, 0.5, 0.0);
        let a = s.a;
        let start = [0.0, 0.0, a * (1.0 + 1e-9)];
        for seed in 0..200 {
            let mut state = TrialState::from_particles(&[Particle {
                position: start,
                state: ParticleState::FreeA,
            }]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            step_trial(&mut state, &s, &mut rng).unwrap();
            let p = state.particles()[0];
            match p.state {
                ParticleState::BoundC(point) => {
                    let r = point.iter().map(|c| c * c).sum::<f64>().sqrt();
                    assert!((r - a).abs() <= 1e-12 * a);
                }
                ParticleState::FreeA => {
                    let r = p.position.iter().map(|c| c * c).sum::<f64>().sqrt();
                    assert!(p.position == start || r >= a);
                }
                ParticleState::Degraded => unreachable!(),
            }
        }
    }

    #[test]
    fn irreversible_bound_count_never_drops() {
        let s = stepper(0.0, 1.0, 0.0);
        let mut state = TrialState::released(300, 0.55e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut prev = 0;
        for _ in 0..500 {
            step_trial(&mut state, &s, &mut rng).unwrap();
            assert!(state.bound_count() >= prev);
            prev = state.bound_count();
        }
        assert!(prev > 0);
        state.check_invariants(s.a).unwrap();
    }

    #[test]
    fn bound_molecules_are_not_degraded() {
        let s = stepper(0.2, 1.0, 0.0);
        let mut state = TrialState::from_particles(&[Particle {
            position: [0.0, 0.0, 0.5e-6],
            state: ParticleState::BoundC([0.0, 0.0, 0.5e-6]),
        }]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            step_trial(&mut state, &s, &mut rng).unwrap();
        }
        assert_eq!(state.bound_count(), 1);
    }

    #[test]
    fn released_molecules_appear_outside() {
        let s = stepper(0.0, 0.0, 1.0);
        let point = [0.0, 0.0, 0.5e-6];
        let mut state = TrialState::from_particles(&vec![
            Particle {
                position: point,
                state: ParticleState::BoundC(point),
            };
            50
        ]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        step_trial(&mut state, &s, &mut rng).unwrap();
        assert_eq!(state.free_count(), 50);
        state.check_invariants(s.a).unwrap();
    }
}
