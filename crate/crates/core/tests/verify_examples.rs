use core::f64::consts::PI;

use heatrec_core::abel::{HyperbolicDescent, QuadratureSpec};
use heatrec_core::closed_form::{
    euclid_kernel, EuclidKernel, HyperbolicOddKernel, SphereOddKernel,
};
use heatrec_core::evaluator::FnKernel;
use heatrec_core::spectral::SpectralSphereKernel;
use heatrec_core::verify::{
    delta_convergence, normalization, pde_residual, semigroup_residual, up_recurrence_residual,
    Control, Controlled, SampleGrid, TestFunction,
};
use heatrec_core::SpaceForm;

fn grid(times: &[f64], distances: &[f64]) -> SampleGrid {
    SampleGrid::new(times.to_vec(), distances.to_vec()).unwrap()
}

#[test]
fn pde_residuals() {
    let e2 = EuclidKernel::new(2).unwrap();
    let g = grid(&[0.1, 0.5, 2.0], &[0.4, 1.5, 3.0]);
    let rep = pde_residual(&e2, &SpaceForm::euclidean(2).unwrap(), &g).unwrap();
    assert!(rep.max_rel <= 1e-9, "{rep:?}");

    let s3 = SphereOddKernel::of_dim(3).unwrap();
    let space = SpaceForm::sphere(3).unwrap();
    let g = grid(&[0.3, 1.0], &[0.3, 1.5, 2.8]);
    let rep = pde_residual(&s3, &space, &g).unwrap();
    assert!(rep.max_rel <= 1e-7, "{rep:?}");

    let dropped = Controlled::new(s3, Control::DropExponential);
    let rep = pde_residual(&dropped, &space, &g).unwrap();
    assert!(rep.max_rel >= 0.5, "{rep:?}");
}

#[test]
fn total_mass() {
    let s2 = SpectralSphereKernel::oracle(2).unwrap();
    let m = normalization(&s2, &SpaceForm::sphere(2).unwrap(), 0.5, 1e-12).unwrap();
    assert!((m - 1.0).abs() <= 1e-10, "{m}");

    let h3 = HyperbolicOddKernel::of_dim(3).unwrap();
    let m = normalization(&h3, &SpaceForm::hyperbolic(3).unwrap(), 0.5, 1e-11).unwrap();
    assert!((m - 1.0).abs() <= 1e-9, "{m}");

    let e1 = EuclidKernel::new(1).unwrap();
    for t in [0.01, 1.0, 30.0] {
        let m = normalization(&e1, &SpaceForm::euclidean(1).unwrap(), t, 1e-13).unwrap();
        assert!((m - 1.0).abs() <= 1e-12, "t={t}: {m}");
    }
}

#[test]
fn delta_sequences_decrease_at_first_order() {
    let ts = [0.2, 0.1, 0.05];
    let s3 = SphereOddKernel::of_dim(3).unwrap();
    let errs = delta_convergence(
        &s3,
        &SpaceForm::sphere(3).unwrap(),
        TestFunction::Cosine,
        &ts,
    )
    .unwrap();
    // cos r is an eigenfunction: the error is exactly 1 - e^{-3t}.
    for (e, t) in errs.iter().zip(ts) {
        assert!((e - (1.0 - (-3.0 * t).exp())).abs() <= 1e-9, "t={t}: {e}");
    }

    let h2 = HyperbolicDescent::new(
        2,
        HyperbolicOddKernel::of_dim(3).unwrap(),
        QuadratureSpec::default(),
    )
    .unwrap();
    let errs = delta_convergence(
        &h2,
        &SpaceForm::hyperbolic(2).unwrap(),
        TestFunction::Gaussian,
        &ts,
    )
    .unwrap();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    let rate = errs[1] / errs[2];
    assert!((rate - 2.0).abs() < 0.5, "{errs:?}");
}

#[test]
fn raising_recurrence() {
    let s2 = SpectralSphereKernel::oracle(2).unwrap();
    let s4 = SpectralSphereKernel::oracle(4).unwrap();
    let rep = up_recurrence_residual(
        &s2,
        &s4,
        &SpaceForm::sphere(2).unwrap(),
        &grid(&[0.5], &[1.0]),
    )
    .unwrap();
    assert!(rep.max_rel <= 1e-7, "{rep:?}");

    let h1 = FnKernel::new(SpaceForm::hyperbolic(1).unwrap(), "closed_form", |t, r| {
        euclid_kernel(1, t, r)
    });
    let h3 = HyperbolicOddKernel::of_dim(3).unwrap();
    let g = grid(&[0.3, 1.0], &[0.5, 1.0, 2.0]);
    let rep = up_recurrence_residual(&h1, &h3, &SpaceForm::hyperbolic(1).unwrap(), &g).unwrap();
    assert!(rep.max_rel <= 1e-10, "{rep:?}");

    let e1 = EuclidKernel::new(1).unwrap();
    let e3 = EuclidKernel::new(3).unwrap();
    let rep = up_recurrence_residual(&e1, &e3, &SpaceForm::euclidean(1).unwrap(), &g).unwrap();
    assert!(rep.max_rel <= 1e-12, "{rep:?}");
}

#[test]
fn semigroup() {
    let s2 = SpectralSphereKernel::oracle(2).unwrap();
    assert!(semigroup_residual(&s2, 0.25, 0.25, 0.0).unwrap() <= 1e-6);

    let s3 = SphereOddKernel::of_dim(3).unwrap();
    assert!(semigroup_residual(&s3, 0.5, 0.5, PI / 2.0).unwrap() <= 1e-6);
    let late = semigroup_residual(&s3, 10.0, 10.0, 1.0).unwrap();
    assert!(late <= 1e-9, "{late:e}");
}
