//! Renewal processes driven by truncated-Pareto waiting times.
//!
//! A user's comments form a renewal process: consecutive gaps are i.i.d.
//! draws from a [`TruncatedPareto`]. Seen from an instant `t0` far into the
//! process, the time until the user's next comment is the forward
//! recurrence time `Y(t0)`, whose limiting law is
//! `P(Y <= y) = (1/μ) ∫_0^y (1 - F(x)) dx`.

use rand::Rng;

use crate::distributions::TruncatedPareto;
use crate::error::{Error, Result};

/// Event epochs of one renewal process on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RenewalTrace {
    pub event_times: Vec<f64>,
    pub horizon: f64,
}

impl RenewalTrace {
    pub fn len(&self) -> usize {
        self.event_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.event_times.is_empty()
    }

    /// First event strictly after `t`.
    pub fn next_after(&self, t: f64) -> Option<f64> {
        let i = self.event_times.partition_point(|&x| x <= t);
        self.event_times.get(i).copied()
    }
}

/// Run a renewal process from time 0 (age 0) up to `horizon`.
pub fn simulate_renewal<R: Rng + ?Sized>(
    law: &TruncatedPareto,
    horizon: f64,
    rng: &mut R,
) -> Result<RenewalTrace> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::param(format!(
            "renewal horizon must be positive, got {horizon}"
        )));
    }
    let mut event_times = Vec::with_capacity((horizon / law.mean()).ceil() as usize + 1);
    let mut t = law.sample(rng);
    while t <= horizon {
        event_times.push(t);
        t += law.sample(rng);
    }
    Ok(RenewalTrace {
        event_times,
        horizon,
    })
}

/// Limiting law of the forward recurrence time for a given inter-arrival law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardRecurrence {
    law: TruncatedPareto,
    mean: f64,
}

impl ForwardRecurrence {
    pub fn new(law: TruncatedPareto) -> Self {
        Self {
            law,
            mean: law.mean(),
        }
    }

    pub fn law(&self) -> &TruncatedPareto {
        &self.law
    }

    /// `(1/μ) ∫_0^y (1 - F(x)) dx`, in closed form on each piece of the
    /// support. Equals 1 from `b` on.
    pub fn cdf(&self, y: f64) -> f64 {
        let (a, b) = (self.law.a(), self.law.b());
        if y <= 0.0 {
            0.0
        } else if y <= a {
            y / self.mean
        } else if y >= b {
            1.0
        } else {
            // ∫_a^y F̄ = [∫_a^y x^-c dx - (y - a) b^-c] / (a^-c - b^-c)
            let tail_ratio = (-self.law.c() * (b / a).ln()).exp();
            let mass = 1.0 - tail_ratio;
            let integral = self.law.integrated_power(y) - (y - a) * tail_ratio / mass;
            ((a + integral) / self.mean).min(1.0)
        }
    }

    /// Density `(1 - F(y)) / μ`.
    pub fn pdf(&self, y: f64) -> f64 {
        if y < 0.0 {
            0.0
        } else {
            self.law.sf(y) / self.mean
        }
    }

    /// Inverse of [`ForwardRecurrence::cdf`]. Linear below `a`, bisection in
    /// `ln y` on `[a, b]`.
    pub fn quantile(&self, u: f64) -> f64 {
        let (a, b) = (self.law.a(), self.law.b());
        let u = u.clamp(0.0, 1.0);
        let below = a / self.mean;
        if u <= below {
            return u * self.mean;
        }
        let (mut lo, mut hi) = (a.ln(), b.ln());
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid.exp()) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (0.5 * (lo + hi)).exp()
    }

    /// Draw from the limiting law directly (a user observed at a uniformly
    /// random instant of an infinitely old process).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.gen::<f64>())
    }
}

/// Excess time `Y(t0)` of a renewal process started at 0: the gap between
/// `t0` and the first event strictly after it. Generates every event up to
/// `t0`, so the cost is about `t0 / μ` draws.
pub fn forward_recurrence_sample<R: Rng + ?Sized>(
    law: &TruncatedPareto,
    t0: f64,
    rng: &mut R,
) -> f64 {
    let mut t = 0.0;
    while t <= t0 {
        t += law.sample(rng);
    }
    t - t0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use approx::assert_relative_eq;

    fn law(a: f64, b: f64, c: f64) -> TruncatedPareto {
        TruncatedPareto::new(a, b, c).unwrap()
    }

    fn ks(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn short_horizon_is_empty() {
        let mut rng = stream(1, 0);
        let trace = simulate_renewal(&law(1.0, 100.0, 1.5), 0.9, &mut rng).unwrap();
        assert!(trace.is_empty());
        assert!(simulate_renewal(&law(1.0, 100.0, 1.5), 0.0, &mut rng).is_err());
    }

    #[test]
    fn event_rate_matches_inverse_mean() {
        let d = law(1.0, 100.0, 1.5);
        let mut rng = stream(2, 0);
        let trace = simulate_renewal(&d, 1e6, &mut rng).unwrap();
        let rate = trace.len() as f64 / 1e6;
        assert!((rate * d.mean() - 1.0).abs() < 0.02, "rate {rate}");
        assert!(trace.event_times.windows(2).all(|w| w[0] < w[1]));
        assert!(*trace.event_times.last().unwrap() <= 1e6);
    }

    #[test]
    fn traces_are_deterministic() {
        let d = law(1.0, 100.0, 1.5);
        let a = simulate_renewal(&d, 1e3, &mut stream(3, 0)).unwrap();
        let b = simulate_renewal(&d, 1e3, &mut stream(3, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn next_after_is_strict() {
        let trace = RenewalTrace {
            event_times: vec![1.0, 2.0, 4.0],
            horizon: 5.0,
        };
        assert_eq!(trace.next_after(0.0), Some(1.0));
        assert_eq!(trace.next_after(2.0), Some(4.0));
        assert_eq!(trace.next_after(4.0), None);
    }

    #[test]
    fn cdf_examples() {
        let fr = ForwardRecurrence::new(law(1.0, 100.0, 1.5));
        assert_eq!(fr.cdf(0.0), 0.0);
        assert_eq!(fr.cdf(100.0), 1.0);
        assert_eq!(fr.cdf(1e9), 1.0);
        assert_relative_eq!(fr.cdf(1.0), 0.999 / 2.7, max_relative = 1e-12);
        assert_relative_eq!(fr.cdf(1.0), 0.37, max_relative = 1e-3);
    }

    #[test]
    fn cdf_matches_numeric_integral_of_survival() {
        for &(a, b, c) in &[
            (1.0, 100.0, 1.5),
            (0.5, 40.0, 1.0),
            (2.0, 1e4, 0.7),
            (0.01, 1e5, 1.2),
        ] {
            let d = law(a, b, c);
            let fr = ForwardRecurrence::new(d);
            for &frac in &[0.3, 1.0, 1.7, 10.0, 0.5 * b / a] {
                let y = (a * frac).min(b);
                // Simpson in log space above a, exact below.
                let lo = a.min(y);
                let mut integral = lo;
                if y > a {
                    let n = 20_000;
                    let (s0, s1) = (a.ln(), y.ln());
                    let h = (s1 - s0) / n as f64;
                    let g = |s: f64| d.sf(s.exp()) * s.exp();
                    let mut acc = g(s0) + g(s1);
                    for i in 1..n {
                        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(s0 + i as f64 * h);
                    }
                    integral += acc * h / 3.0;
                }
                assert_relative_eq!(fr.cdf(y), integral / d.mean(), max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn cdf_monotone_and_continuous_at_breaks() {
        let fr = ForwardRecurrence::new(law(1.0, 100.0, 1.5));
        let mut prev = 0.0;
        for i in 0..=20_000 {
            let y = 110.0 * i as f64 / 20_000.0;
            let f = fr.cdf(y);
            assert!(f >= prev - 1e-15);
            prev = f;
        }
        assert_relative_eq!(
            fr.cdf(1.0 - 1e-12),
            fr.cdf(1.0 + 1e-12),
            max_relative = 1e-9
        );
        assert_relative_eq!(fr.cdf(100.0 - 1e-9), 1.0, max_relative = 1e-9);
    }

    #[test]
    fn density_log_slope_is_minus_c() {
        // The density is (y^-c - b^-c)/const; its log-slope approaches -c
        // for y well below b.
        let c = 1.5;
        let fr = ForwardRecurrence::new(law(1.0, 1e6, c));
        let h = 1e-4;
        for i in 0..=40 {
            let y = 2.0 * (5e3f64).powf(i as f64 / 40.0);
            let slope = ((fr.cdf(y * (1.0 + h)) - fr.cdf(y)) / (y * h)).ln()
                - ((fr.cdf(y) - fr.cdf(y * (1.0 - h))) / (y * h)).ln();
            let slope = slope / ((1.0 + 0.5 * h).ln() - (1.0 - 0.5 * h).ln());
            assert!((slope + c).abs() < 0.02, "y={y}: slope {slope}");
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        let fr = ForwardRecurrence::new(law(1.0, 100.0, 1.5));
        for i in 0..=100 {
            let u = i as f64 / 100.0;
            let y = fr.quantile(u);
            assert!((fr.cdf(y) - u).abs() < 1e-12, "u={u}");
        }
    }

    #[test]
    fn simulated_excess_converges_to_limit() {
        let d = law(1.0, 100.0, 1.5);
        let fr = ForwardRecurrence::new(d);
        let mu = d.mean();
        let n = 20_000;
        let draw = |t0: f64| -> Vec<f64> {
            let mut rng = stream(77, 0);
            (0..n)
                .map(|_| forward_recurrence_sample(&d, t0, &mut rng))
                .collect()
        };
        let far = ks(draw(1e3 * mu), |y| fr.cdf(y));
        let near = ks(draw(0.5 * mu), |y| fr.cdf(y));
        assert!(far < 0.02, "far {far}");
        assert!(far < near, "far {far} near {near}");
    }

    #[test]
    fn direct_limit_sampler_matches_cdf() {
        let fr = ForwardRecurrence::new(law(0.01, 1e5, 1.2));
        let mut rng = stream(78, 0);
        let xs: Vec<f64> = (0..50_000).map(|_| fr.sample(&mut rng)).collect();
        assert!(ks(xs, |y| fr.cdf(y)) < 0.01);
    }

    #[test]
    fn near_deterministic_gaps_give_uniform_excess() {
        let a = 2.0;
        let d = law(a, a * 1.02, 1.5);
        let mut rng = stream(79, 0);
        // Nearly lattice gaps mix slowly, hence the long run-in.
        let t0 = 1e4 * d.mean();
        let xs: Vec<f64> = (0..20_000)
            .map(|_| forward_recurrence_sample(&d, t0, &mut rng))
            .collect();
        assert!(ks(xs, |y| (y / a).clamp(0.0, 1.0)) < 0.02);
    }
}
