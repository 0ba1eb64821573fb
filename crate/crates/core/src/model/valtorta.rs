//! Oscillating diffusivity satisfying (A) and (A') but not (A'').
//!
//! In the variable t = -ln s the log-diffusivity f(t) = ln a(s) is zero for
//! t <= 1 and then alternates between slope 1/2 (rising until it meets the
//! envelope sqrt(t)) and slope -2 (falling until it meets -t). Each corner is
//! rounded by a quintic smoothstep blend of the slope over a window of width
//! 1% of the corner position, so 1 + D = 1 - f'(t) stays in [1/2, 3].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RISE: f64 = 0.5;
const FALL: f64 = -2.0;
const T_LAST: f64 = 2000.0;
const WINDOW: f64 = 0.01;
const MAX_JITTER: f64 = 0.05;

#[derive(Clone, Debug)]
struct Corner {
    t: f64,
    f: f64,
    before: f64,
    after: f64,
    width: f64,
}

#[derive(Clone, Debug)]
pub struct ValtortaProfile {
    seed: u64,
    corners: Vec<Corner>,
}

fn smoothstep(x: f64) -> f64 {
    x * x * x * (10.0 + x * (-15.0 + 6.0 * x))
}

// antiderivative of smoothstep with value 0 at 0 and 1/2 at 1
fn smoothstep_integral(x: f64) -> f64 {
    x * x * x * x * (2.5 + x * (-3.0 + x))
}

impl ValtortaProfile {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut corners = vec![Corner {
            t: 1.0,
            f: 0.0,
            before: 0.0,
            after: RISE,
            width: WINDOW,
        }];
        loop {
            let last = corners.last().unwrap();
            if last.t > T_LAST {
                break;
            }
            let scale = 1.0 + MAX_JITTER * rng.gen::<f64>();
            let (t, f) = if last.after > 0.0 {
                // f_k + (t - t_k)/2 = scale * sqrt(t), larger root in sqrt(t)
                let c = last.f - 0.5 * last.t;
                let x = scale + (scale * scale - 2.0 * c).sqrt();
                (x * x, scale * x)
            } else {
                // f_k - 2 (t - t_k) = -scale * t
                let t = (last.f + 2.0 * last.t) / (2.0 - scale);
                (t, -scale * t)
            };
            let before = last.after;
            let after = if before > 0.0 { FALL } else { RISE };
            corners.push(Corner {
                t,
                f,
                before,
                after,
                width: WINDOW * t,
            });
        }
        ValtortaProfile { seed, corners }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Corner positions in t = -ln s.
    pub fn corners(&self) -> Vec<f64> {
        self.corners.iter().map(|c| c.t).collect()
    }

    fn locate(&self, t: f64) -> Option<&Corner> {
        let k = self.corners.partition_point(|c| c.t - 0.5 * c.width <= t);
        if k == 0 {
            None
        } else {
            Some(&self.corners[k - 1])
        }
    }

    /// f(t) = ln a(e^{-t}).
    pub fn log_a(&self, t: f64) -> f64 {
        match self.locate(t) {
            None => 0.0,
            Some(c) => {
                let x = (t - c.t + 0.5 * c.width) / c.width;
                if x < 1.0 {
                    c.f + c.before * (t - c.t) + (c.after - c.before) * c.width * smoothstep_integral(x)
                } else {
                    c.f + c.after * (t - c.t)
                }
            }
        }
    }

    /// f'(t).
    pub fn log_a_slope(&self, t: f64) -> f64 {
        match self.locate(t) {
            None => 0.0,
            Some(c) => {
                let x = (t - c.t + 0.5 * c.width) / c.width;
                if x < 1.0 {
                    c.before + (c.after - c.before) * smoothstep(x)
                } else {
                    c.after
                }
            }
        }
    }
}
