//! Dimension-generic ball and sphere constants.

use std::f64::consts::PI;

/// Γ(m/2) for a positive integer m, by the half-integer recursion.
pub fn gamma_half(m: u32) -> f64 {
    assert!(m > 0, "gamma_half needs m >= 1");
    // Γ(1/2) = √π, Γ(1) = 1, Γ(x + 1) = x Γ(x)
    let (mut g, mut x) = if m.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (PI.sqrt(), 0.5)
    };
    while 2.0 * x < m as f64 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Volume of the unit ball in R^n, π^{n/2} / Γ(n/2 + 1).
pub fn omega(n: usize) -> f64 {
    PI.powf(n as f64 / 2.0) / gamma_half(n as u32 + 2)
}

/// Surface measure of the unit sphere in R^m, equal to m·ω(m).
///
/// `sigma(1) = 2` counts the two points of the 0-sphere.
pub fn sigma(m: usize) -> f64 {
    m as f64 * omega(m)
}

/// Named accessors, mostly for reports.
#[derive(Clone, Copy, Debug)]
pub struct Constants {
    pub n: usize,
}

impl Constants {
    pub fn new(n: usize) -> Self {
        Constants { n }
    }

    pub fn omega(&self) -> f64 {
        omega(self.n)
    }

    /// Surface measure of the unit sphere in the ambient space.
    pub fn sigma(&self) -> f64 {
        sigma(self.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn low_dimensional_values() {
        assert_relative_eq!(omega(1), 2.0, max_relative = 1e-15);
        assert_relative_eq!(omega(2), PI, max_relative = 1e-15);
        assert_relative_eq!(omega(3), 4.0 * PI / 3.0, max_relative = 1e-15);
        assert_relative_eq!(omega(4), PI * PI / 2.0, max_relative = 1e-15);
        assert_relative_eq!(sigma(2), 2.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(sigma(3), 4.0 * PI, max_relative = 1e-15);
    }

    #[test]
    fn sigma_is_n_omega() {
        for n in 1..12 {
            assert_relative_eq!(sigma(n), n as f64 * omega(n), max_relative = 1e-14);
        }
    }

    #[test]
    fn volume_recursion() {
        // ω(n) = 2π/n · ω(n-2)
        for n in 3..14 {
            assert_relative_eq!(
                omega(n),
                2.0 * PI / n as f64 * omega(n - 2),
                max_relative = 1e-13
            );
        }
    }
}
