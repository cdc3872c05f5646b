//! Special functions used by the closed-form pieces of the response.

use std::f64::consts::PI;

/// Complementary error function.
///
/// Backed by `libm` (the fdlibm/musl rational approximations), whose
/// documented error is below one ulp over the whole real line. The result
/// always lies in `[0, 2]`.
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Transition probability of an inertial detector with Gaussian switching,
/// per unit coupling squared, as a function of the dimensionless gap `Ωσ`:
///
/// `(1/4π) [exp(-Ω²σ²) - √π Ωσ erfc(Ωσ)]`.
///
/// This is also the contribution of the `1/(x - iε)²` piece split off from
/// the free Wightman function on any stationary trajectory.
pub fn vacuum_static_term(gap: f64) -> f64 {
    ((-gap * gap).exp() - PI.sqrt() * gap * erfc(gap)) / (4.0 * PI)
}

/// `x - sin x` without cancellation for small `|x|`.
pub fn x_minus_sin(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 0.5 {
        // Horner form of x³/3! - x⁵/5! + ... through x¹⁵; truncation < 1e-20 at |x| = 0.5.
        let x2 = x * x;
        let mut acc = 0.0;
        let mut k = 15u32;
        while k >= 3 {
            let fact: f64 = (1..=k).map(f64::from).product();
            let sign = if ((k - 3) / 2) % 2 == 0 { 1.0 } else { -1.0 };
            acc = acc * x2 + sign / fact;
            k -= 2;
        }
        acc * x2 * x
    } else {
        x - x.sin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent erfc: Maclaurin series for |x| <= 2, Laplace continued
    // fraction beyond.
    fn erfc_oracle(x: f64) -> f64 {
        if x < 0.0 {
            return 2.0 - erfc_oracle(-x);
        }
        if x <= 2.0 {
            let mut term = x;
            let mut sum = x;
            let x2 = x * x;
            for n in 1..200 {
                term *= -x2 / n as f64;
                let add = term / (2 * n + 1) as f64;
                sum += add;
                if add.abs() < 1e-20 {
                    break;
                }
            }
            1.0 - 2.0 / PI.sqrt() * sum
        } else {
            // erfc(x) = exp(-x²)/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
            let mut frac = x;
            for k in (1..400).rev() {
                frac = x + (k as f64 / 2.0) / frac;
            }
            (-x * x).exp() / PI.sqrt() / frac
        }
    }

    #[test]
    fn erfc_at_zero_is_one() {
        assert_eq!(erfc(0.0), 1.0);
    }

    #[test]
    fn erfc_reflection() {
        for x in [0.3, 1.7, 4.2] {
            assert!((erfc(x) + erfc(-x) - 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn erfc_at_one_matches_extended_precision_series() {
        // 40-digit reference value.
        let expected = 0.157_299_207_050_285_130_658_779_364_917_390_740_7;
        assert!((erfc(1.0) - expected).abs() < 1e-16);
    }

    #[test]
    fn erfc_matches_oracle_on_random_points() {
        use rand_like::Lcg;
        let mut rng = Lcg(0x5eed);
        for _ in 0..1000 {
            let x = -8.0 + 16.0 * rng.next_f64();
            let got = erfc(x);
            assert!(got > 0.0 && got <= 2.0);
            assert!((got - erfc_oracle(x)).abs() < 1e-13, "x = {x}");
        }
        for x in [-10.0, -3.3, 10.0] {
            assert!((erfc(x) - erfc_oracle(x)).abs() < 1e-14);
        }
    }

    #[test]
    fn static_term_closed_values() {
        assert!((vacuum_static_term(0.0) - 1.0 / (4.0 * PI)).abs() < 1e-16);
        // 40-digit evaluation of the closed form at Ωσ = 5.
        let at5 = 2.089_395_632_117_786_2e-14;
        assert!((vacuum_static_term(5.0) - at5).abs() < 1e-22);
        assert!(vacuum_static_term(5.0) < 1e-6);
        assert!(vacuum_static_term(-2.0) > 1.0 / (4.0 * PI));
    }

    #[test]
    fn static_term_strictly_decreasing() {
        let mut prev = f64::INFINITY;
        for i in 0..=1000 {
            let w = -5.0 + 10.0 * i as f64 / 1000.0;
            let v = vacuum_static_term(w);
            assert!(v < prev, "not decreasing at {w}");
            prev = v;
        }
    }

    #[test]
    fn x_minus_sin_branches_agree() {
        for x in [1e-8, 1e-3, 0.1, 0.49, 0.5, 0.51, 2.0, -0.3] {
            let series_or_direct = x_minus_sin(x);
            let reference = if x.abs() > 0.2 {
                x - x.sin()
            } else {
                x.powi(3) / 6.0 - x.powi(5) / 120.0 + x.powi(7) / 5040.0 - x.powi(9) / 362_880.0 + x.powi(11) / 39_916_800.0
            };
            assert!(((series_or_direct - reference) / reference).abs() < 1e-12, "x = {x}");
        }
    }

    mod rand_like {
        pub struct Lcg(pub u64);
        impl Lcg {
            pub fn next_f64(&mut self) -> f64 {
                self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (self.0 >> 11) as f64 / (1u64 << 53) as f64
            }
        }
    }
}
