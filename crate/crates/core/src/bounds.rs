//! Logarithmic welfare bounds.
//!
//! These are the only quantities evaluated in floating point. They are
//! reported next to exact results and compared with a relative tolerance,
//! never fed back into the simulation. Generic over the float type so the
//! same formulas can be evaluated at higher precision.

use num_traits::Float;

/// Default relative tolerance for comparisons against a bound.
pub const REL_TOL: f64 = 1e-12;

fn f<F: Float>(x: usize) -> F {
    F::from(x).expect("usize converts to float")
}

/// `1 + ln(n / q)`: the welfare guarantee once at least `q` of `n` units
/// are sold.
pub fn ewg_bound<F: Float>(n: usize, q: usize) -> F {
    F::one() + (f::<F>(n) / f::<F>(q)).ln()
}

/// `v(n) / (1 + ln(n / q))`.
pub fn welfare_floor<F: Float>(v_n: F, n: usize, q: usize) -> F {
    v_n / ewg_bound::<F>(n, q)
}

/// The guarantee when all `s` sellers hold the same supply:
/// `1 + ln(1 + 1/(s − 1))`.
pub fn equal_supply_bound<F: Float>(s: usize) -> F {
    F::one() + (F::one() + F::one() / f::<F>(s - 1)).ln()
}

/// `(1/5)(ln(n / (n − n_max)) − 1)`, the growth of the guarantee's lower
/// bound construction.
pub fn lower_bound_growth<F: Float>(n: usize, n_max: usize) -> F {
    ((f::<F>(n) / f::<F>(n - n_max)).ln() - F::one()) / f::<F>(5)
}

/// `a ≤ b` up to a relative tolerance.
pub fn le_rel<F: Float>(a: F, b: F, tol: F) -> bool {
    a <= b || (a - b) <= tol * a.abs().max(b.abs())
}

/// `num / den` as a float.
pub fn ratio<F: Float>(num: u64, den: u64) -> F {
    F::from(num).expect("u64 converts") / F::from(den).expect("u64 converts")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_bound() {
        let b: f64 = ewg_bound(4, 3);
        assert!((b - (1.0 + (4.0f64 / 3.0).ln())).abs() < 1e-15);
        assert!(le_rel(ratio::<f64>(14, 13), b, REL_TOL));
        assert!(!le_rel(b, ratio::<f64>(14, 13), REL_TOL));
    }

    #[test]
    fn equal_supplies_match_general_formula() {
        // n_i = c for every seller, at least n − c units sold
        for s in 2..10 {
            for c in 1..5 {
                let general: f64 = ewg_bound(s * c, (s - 1) * c);
                assert!((general - equal_supply_bound::<f64>(s)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn tolerance_is_relative() {
        assert!(le_rel(1.0 + 1e-13, 1.0, 1e-12));
        assert!(!le_rel(1.0 + 1e-11, 1.0, 1e-12));
        assert!(le_rel(1e6 + 1e-7, 1e6, 1e-12));
    }

    #[test]
    fn works_in_single_precision() {
        let b: f32 = ewg_bound(4, 3);
        assert!((b - 1.287_682).abs() < 1e-5);
    }
}
