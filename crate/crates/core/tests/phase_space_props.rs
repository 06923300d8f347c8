use dressed_modes::dressed_thermal::thermal_wigner;
use dressed_modes::phase_space::trace_product;
use dressed_modes::{GaussianWigner, PhaseSpacePoint, C64};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn c64() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| C64::new(re, im))
}

/// Random integrable Gaussian: `Q = K-symmetric positive real part + small imaginary noise`.
fn gaussian(n: usize) -> impl Strategy<Value = GaussianWigner> {
    let dim = 2 * n;
    (prop::collection::vec(c64(), dim * dim), 0.2..2.0f64, c64()).prop_map(move |(noise, t, c)| {
        let mut q = DMatrix::<C64>::zeros(dim, dim);
        for k in 0..n {
            q[(2 * k, 2 * k + 1)] = C64::new(t, 0.0);
            q[(2 * k + 1, 2 * k)] = C64::new(t, 0.0);
        }
        let noise = DMatrix::from_vec(dim, dim, noise) * C64::new(0.05, 0.0);
        GaussianWigner::new(c + 2.0, q + noise).unwrap()
    })
}

fn physical_point(n: usize) -> impl Strategy<Value = PhaseSpacePoint> {
    prop::collection::vec(c64(), n).prop_map(|a| PhaseSpacePoint::physical(&a).unwrap())
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn q_is_symmetric(entries in prop::collection::vec(c64(), 16)) {
        let w = GaussianWigner::new(C64::new(1.0, 0.0), DMatrix::from_vec(4, 4, entries)).unwrap();
        prop_assert_eq!(w.q(), &w.q().transpose());
    }

    #[test]
    fn multiply_commutes(a in gaussian(2), b in gaussian(2)) {
        let ab = a.multiply(&b).unwrap();
        let ba = b.multiply(&a).unwrap();
        prop_assert!((ab.prefactor() - ba.prefactor()).norm() <= 1e-13 * ab.prefactor().norm().max(1.0));
        prop_assert!(max_abs(&(ab.q() - ba.q())) <= 1e-13);
    }

    #[test]
    fn multiply_associates(a in gaussian(1), b in gaussian(1), c in gaussian(1)) {
        let left = a.multiply(&b).unwrap().multiply(&c).unwrap();
        let right = a.multiply(&b.multiply(&c).unwrap()).unwrap();
        prop_assert!((left.prefactor() - right.prefactor()).norm() <= 1e-13 * left.prefactor().norm().max(1.0));
        prop_assert!(max_abs(&(left.q() - right.q())) <= 1e-13);
    }

    #[test]
    fn product_is_pointwise(a in gaussian(2), b in gaussian(2), p in physical_point(2)) {
        let lhs = a.multiply(&b).unwrap().eval_point(&p).unwrap();
        let rhs = a.eval_point(&p).unwrap() * b.eval_point(&p).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm().max(1.0));
    }

    #[test]
    fn thermal_state_is_normalised(eps in 0.05..20.0f64, n in 1usize..=2) {
        let w = thermal_wigner(eps, n).unwrap();
        prop_assert!((w.integrate().unwrap() - 1.0).norm() <= 1e-12);
    }

    #[test]
    fn trace_product_is_symmetric(a in gaussian(2), b in gaussian(2)) {
        let ab = trace_product(&a, &b).unwrap();
        let ba = trace_product(&b, &a).unwrap();
        prop_assert!((ab - ba).norm() <= 1e-12 * ab.norm().max(1.0));
    }

    #[test]
    fn identity_is_neutral(a in gaussian(2)) {
        let b = a.multiply(&GaussianWigner::identity(2)).unwrap();
        prop_assert_eq!(b.prefactor(), a.prefactor());
        prop_assert!(max_abs(&(b.q() - a.q())) == 0.0);
    }
}

#[test]
fn integral_rejects_non_integrable() {
    let mut q = DMatrix::<C64>::zeros(2, 2);
    q[(0, 1)] = C64::new(-0.5, 0.0);
    q[(1, 0)] = q[(0, 1)];
    let w = GaussianWigner::new(C64::new(1.0, 0.0), q).unwrap();
    assert!(!w.is_integrable());
    assert!(w.integrate().is_err());
}
