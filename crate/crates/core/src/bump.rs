//! Smooth cutoff functions built from the standard `exp(-1/t)` germ: a
//! radial plateau cutoff for kernel truncation and the dyadic bump whose
//! octave dilates form an exact partition of unity on `(0, inf)`.

/// `exp(-1/t)` for `t > 0`, zero otherwise. Smooth on all of `R`.
pub fn smooth_exp(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Monotone smooth step: 0 for `t <= 0`, 1 for `t >= 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = smooth_exp(t);
    let b = smooth_exp(1.0 - t);
    a / (a + b)
}

/// Smooth radial profile equal to 1 on `[0, inner]` and 0 on `[outer, inf)`.
/// Applied to `|x|^2`, `inner = (r/2)^2` and `outer = r^2` give a cutoff
/// supported in the ball of radius `r` with a plateau up to radius `r/2`.
#[derive(Debug, Clone, Copy)]
pub struct PlateauCutoff {
    pub inner: f64,
    pub outer: f64,
}

impl PlateauCutoff {
    pub fn new(inner: f64, outer: f64) -> Self {
        assert!(0.0 < inner && inner < outer, "need 0 < inner < outer");
        PlateauCutoff { inner, outer }
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= self.inner {
            1.0
        } else if t >= self.outer {
            0.0
        } else {
            smooth_step((self.outer - t) / (self.outer - self.inner))
        }
    }
}

/// Decreasing profile with `psi = 1` on `(-inf, 1]` and `psi = 0` on
/// `[2, inf)`.
pub fn dyadic_psi(t: f64) -> f64 {
    if t <= 1.0 {
        1.0
    } else if t >= 2.0 {
        0.0
    } else {
        1.0 - smooth_step(t - 1.0)
    }
}

/// Dyadic bump `theta(t) = psi(t) - psi(2t)`, supported in `[1/2, 2]`.
/// The octave dilates `theta(2^k t)` sum to exactly 1 for every `t > 0`:
/// the sum telescopes and at most two consecutive terms are nonzero.
pub fn dyadic_theta(t: f64) -> f64 {
    dyadic_psi(t) - dyadic_psi(2.0 * t)
}

/// Support bounds of [`dyadic_theta`].
pub const THETA_SUPPORT: (f64, f64) = (0.5, 2.0);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_step_clamps_and_increases() {
        assert_eq!(smooth_step(-1.0), 0.0);
        assert_eq!(smooth_step(0.0), 0.0);
        assert_eq!(smooth_step(1.0), 1.0);
        assert_eq!(smooth_step(2.0), 1.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
        let mut prev = 0.0;
        for i in 0..=100 {
            let v = smooth_step(i as f64 / 100.0);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn plateau_cutoff_profile() {
        let phi = PlateauCutoff::new(0.0625, 0.25);
        assert_eq!(phi.eval(0.0), 1.0);
        assert_eq!(phi.eval(0.0625), 1.0);
        assert_eq!(phi.eval(0.25), 0.0);
        assert_eq!(phi.eval(1.0), 0.0);
        let mid = phi.eval(0.15);
        assert!(mid > 0.0 && mid < 1.0);
    }

    #[test]
    fn theta_support_is_half_to_two() {
        assert_eq!(dyadic_theta(0.49), 0.0);
        assert_eq!(dyadic_theta(2.0), 0.0);
        assert_eq!(dyadic_theta(2.5), 0.0);
        assert!(dyadic_theta(1.0) > 0.0);
        assert!(dyadic_theta(0.7) > 0.0);
        assert!(dyadic_theta(1.5) > 0.0);
    }

    #[test]
    fn octave_dilates_partition_unity_exactly() {
        for i in 0..400 {
            let t = 0.01 + i as f64 * 0.31;
            let sum: f64 = (-20..=20).map(|k| dyadic_theta(2f64.powi(k) * t)).sum();
            assert!((sum - 1.0).abs() < 1e-15, "t = {t}, sum = {sum}");
        }
    }

    #[test]
    fn at_most_two_dilates_overlap() {
        for i in 0..200 {
            let t = 0.05 + i as f64 * 0.05;
            let live = (-20..=20)
                .filter(|&k| dyadic_theta(2f64.powi(k) * t) != 0.0)
                .count();
            assert!(live <= 2, "t = {t}, live = {live}");
        }
    }
}
