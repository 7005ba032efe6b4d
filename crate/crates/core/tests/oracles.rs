//! Independent oracles for the metrics, reference densities and the analytic
//! mixture score.

use std::f64::consts::PI;

use ggl_core::metrics::{chamfer_angle, chamfer_angle_brute, chamfer_distance, chamfer_distance_brute};
use ggl_core::reference::{
    integrate, prior_density, product_density_l1, product_density_quadratic, quadrature_normalize,
    Density1D, NORMALIZATION_TOL,
};
use ggl_core::score::gmm_noisy_score;
use ggl_core::{GmmPrior, SampleRng, Vec2};
use proptest::prelude::*;

/// Points on a coarse lattice so that exact ties and duplicates are common.
fn cloud(rng: &mut SampleRng, n: usize, lattice: bool) -> Vec<Vec2> {
    (0..n)
        .map(|_| {
            if lattice {
                [rng.index(7) as f64 * 0.25 - 0.75, rng.index(7) as f64 * 0.25 - 0.75]
            } else {
                [rng.uniform_range(-1.0, 1.0), rng.uniform_range(-1.0, 1.0)]
            }
        })
        .collect()
}

fn normals(rng: &mut SampleRng, n: usize) -> Vec<Vec2> {
    (0..n)
        .map(|_| {
            let t = rng.uniform_range(-PI, PI);
            [t.cos(), t.sin()]
        })
        .collect()
}

fn random_prior(rng: &mut SampleRng) -> GmmPrior {
    let k = 1 + rng.index(3);
    let raw: Vec<f64> = (0..k).map(|_| rng.uniform_range(0.2, 1.0)).collect();
    let total: f64 = raw.iter().sum();
    let weights = raw.iter().map(|w| w / total).collect();
    let means = (0..k).map(|_| vec![rng.uniform_range(-1.5, 1.5)]).collect();
    let vars = (0..k)
        .map(|_| vec![rng.uniform_range(0.15, 0.5).powi(2)])
        .collect();
    GmmPrior::new(weights, means, vars).unwrap()
}

fn prior_pdf(prior: &GmmPrior, x: f64) -> f64 {
    prior
        .weights()
        .iter()
        .zip(prior.means())
        .zip(prior.variances())
        .map(|((w, m), v)| w * (-(x - m[0]).powi(2) / (2.0 * v[0])).exp() / (2.0 * PI * v[0]).sqrt())
        .sum()
}

/// Density of `z + sigma * eps` under the prior, by quadrature over the
/// clean value. Breakpoints at the component means and at `z` keep every
/// panel smooth on its own scale.
fn convolved_density(prior: &GmmPrior, sigma: f64, z: f64) -> f64 {
    let mut knots: Vec<f64> = prior.means().iter().map(|m| m[0]).collect();
    knots.push(z);
    let s_max = prior.variances().iter().map(|v| v[0].sqrt()).fold(0.0, f64::max);
    let lo = knots.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = knots.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    knots.push((lo - 12.0 * s_max).max(z - 12.0 * sigma));
    knots.push((hi + 12.0 * s_max).min(z + 12.0 * sigma));
    let (a, b) = (knots[knots.len() - 2], knots[knots.len() - 1]);
    knots.retain(|k| *k >= a && *k <= b);
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let kernel = |y: f64| {
        prior_pdf(prior, y) * (-(z - y).powi(2) / (2.0 * sigma * sigma)).exp()
            / (2.0 * PI * sigma * sigma).sqrt()
    };
    let panels = |tol: f64| -> f64 {
        knots
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| integrate(kernel, w[0], w[1], tol).unwrap())
            .sum()
    };
    // Tolerance relative to the total; an absolute one is either loose in the
    // tails or below round-off near the modes.
    let rough = panels(1e-8);
    panels(1e-13 * rough)
}

fn mean_nn(from: &[Vec2], to: &[Vec2]) -> f64 {
    from.iter()
        .map(|p| to.iter().map(|q| (p[0] - q[0]).hypot(p[1] - q[1])).fold(f64::INFINITY, f64::min))
        .sum::<f64>()
        / from.len() as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn chamfer_matches_brute_force(
        seed in any::<u64>(),
        na in 1usize..120,
        nb in 1usize..120,
        lattice in any::<bool>(),
    ) {
        let mut rng = SampleRng::seed_from_u64(seed);
        let mut a = cloud(&mut rng, na, lattice);
        let b = cloud(&mut rng, nb, lattice);
        // Exact duplicates across and within clouds.
        a.push(b[0]);
        a.push(a[0]);
        let fast = chamfer_distance(&a, &b).unwrap();
        let slow = chamfer_distance_brute(&a, &b).unwrap();
        prop_assert_eq!(fast.to_bits(), slow.to_bits());
        let oracle = 50.0 * (mean_nn(&a, &b) + mean_nn(&b, &a));
        prop_assert!((fast - oracle).abs() <= 1e-12 * oracle.max(1.0));

        let (an, bn) = (normals(&mut rng, a.len()), normals(&mut rng, b.len()));
        let fast = chamfer_angle(&a, &an, &b, &bn).unwrap();
        let slow = chamfer_angle_brute(&a, &an, &b, &bn).unwrap();
        prop_assert_eq!(fast.to_bits(), slow.to_bits());
    }

    #[test]
    fn quadratic_product_closed_form_matches_quadrature(
        seed in any::<u64>(),
        eta in 0.1f64..20.0,
        mu in -1.5f64..1.5,
    ) {
        let mut rng = SampleRng::seed_from_u64(seed);
        let prior = random_prior(&mut rng);
        let closed = product_density_quadratic(&prior, eta, mu).unwrap();
        let (a, b) = (closed.lower(), closed.upper());
        let p = prior.clone();
        let f = move |x: f64| prior_pdf(&p, x) * (-eta * (x - mu).powi(2)).exp();
        // The integral can be tiny, so refine relative to a first estimate.
        let rough = integrate(&f, a, b, 1e-12).unwrap();
        let z = integrate(&f, a, b, 1e-13 * rough).unwrap();
        for i in 0..=200 {
            let x = a + (b - a) * i as f64 / 200.0;
            let err = (closed.pdf(x) - f(x) / z).abs();
            prop_assert!(err <= 1e-8, "x {x}: closed {} vs quadrature {}", closed.pdf(x), f(x) / z);
        }
    }

    #[test]
    fn noisy_score_matches_convolved_log_density(
        seed in any::<u64>(),
        sigma in 0.05f64..1.0,
        t in -1.0f64..1.0,
    ) {
        let mut rng = SampleRng::seed_from_u64(seed);
        let prior = random_prior(&mut rng);
        let (mean, var) = prior.moments();
        let z = mean[0] + 2.0 * t * (var[0] + sigma * sigma).sqrt();
        let h = 1e-3;
        let lp = |x: f64| convolved_density(&prior, sigma, x).ln();
        let fd = (lp(z - 2.0 * h) - 8.0 * lp(z - h) + 8.0 * lp(z + h) - lp(z + 2.0 * h)) / (12.0 * h);
        let score = gmm_noisy_score(&prior, sigma, &[z]).unwrap()[0];
        let rel = (score - fd).abs() / score.abs().max(fd.abs()).max(1e-3);
        prop_assert!(rel <= 1e-6, "z {z} sigma {sigma}: analytic {score} vs fd {fd} (rel {rel:e})");
    }

    #[test]
    fn reference_densities_normalize(
        seed in any::<u64>(),
        eta in 0.1f64..20.0,
        mu in -1.5f64..1.5,
    ) {
        let mut rng = SampleRng::seed_from_u64(seed);
        let prior = random_prior(&mut rng);
        let densities: Vec<Density1D> = vec![
            prior_density(&prior).unwrap(),
            product_density_quadratic(&prior, eta, mu).unwrap(),
            product_density_l1(&prior, eta, mu).unwrap(),
        ];
        for d in &densities {
            prop_assert!((d.total_mass() - 1.0).abs() <= NORMALIZATION_TOL);
            let by_quadrature = integrate(|x| d.pdf(x), d.lower(), d.upper(), 1e-13).unwrap();
            prop_assert!((by_quadrature - 1.0).abs() <= NORMALIZATION_TOL);
            prop_assert!((d.cdf(d.upper()) - 1.0).abs() <= NORMALIZATION_TOL);
        }
    }
}

#[test]
fn laplace_weight_normalizer_on_symmetric_interval() {
    // exp(-|z|) on [-20, 20] integrates to 2 (1 - e^-20), not 2.
    let (z, d) = quadrature_normalize(|x: f64| (-x.abs()).exp(), -20.0, 20.0, 1e-13).unwrap();
    assert!((z - 2.0 * (1.0 - (-20.0f64).exp())).abs() < 1e-10);
    assert!((d.total_mass() - 1.0).abs() <= NORMALIZATION_TOL);
}
