//! Analytic gradients against central finite differences on random
//! instances.

mod common;

use common::*;
use proptest::prelude::*;

fn assert_check(check: Check, seed: u64) -> Result<(), TestCaseError> {
    match check(seed) {
        Some(err) => {
            prop_assert!(err <= FD_TOL, "seed {seed}: relative error {err:.3e}");
            Ok(())
        }
        None => Err(TestCaseError::reject("non-smooth locus")),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn mlp_grad(seed in any::<u64>()) {
        assert_check(check_mlp, seed)?;
    }

    #[test]
    fn decode_grad_x(seed in any::<u64>()) {
        assert_check(check_decode_grad_x, seed)?;
    }

    #[test]
    fn decode_grad_z(seed in any::<u64>()) {
        assert_check(check_decode_grad_z, seed)?;
    }

    #[test]
    fn surface_loss_grad(seed in any::<u64>()) {
        assert_check(check_surface, seed)?;
    }

    #[test]
    fn eikonal_loss_grad(seed in any::<u64>()) {
        assert_check(check_eikonal, seed)?;
    }

    #[test]
    fn siren_loss_grad(seed in any::<u64>()) {
        assert_check(check_siren, seed)?;
    }

    #[test]
    fn geometric_loss_grad(seed in any::<u64>()) {
        assert_check(check_geometric, seed)?;
    }

    #[test]
    fn map_objective_grad(seed in any::<u64>()) {
        assert_check(check_map, seed)?;
    }
}

#[test]
fn rel_err_floor() {
    assert_eq!(rel_err(&[1.0, 0.0], &[1.0, 1e-9]), 1e-9 / 1e-3);
    assert!(rel_err(&[2.0], &[2.0 + 2e-6]) < 1.1e-6);
}
