use damcmc::diagnostics::*;
use damcmc::RngStream;
use rand::Rng;
use rand_distr::StandardNormal;

fn iid(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = RngStream::new(seed, 0);
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn ar1(n: usize, phi: f64, seed: u64) -> Vec<f64> {
    let mut rng = RngStream::new(seed, 1);
    let sd = (1.0 - phi * phi).sqrt();
    let mut x: f64 = rng.sample::<f64, _>(StandardNormal);
    (0..n)
        .map(|_| {
            x = phi * x + sd * rng.sample::<f64, _>(StandardNormal);
            x
        })
        .collect()
}

#[test]
fn iid_lag_one_near_zero() {
    let n = 100_000;
    let r = autocorrelation(&iid(n, 1), &[0, 1]).unwrap();
    assert_eq!(r[0], 1.0);
    assert!(r[1].abs() < 3.0 / (n as f64).sqrt());
}

#[test]
fn ar1_lag_one_matches_parameter() {
    let x = ar1(1_000_000, 0.9, 2);
    let (rho, se) = lag_one_autocorrelation(&x).unwrap();
    assert!((rho - 0.9).abs() < 3.0 * se, "{rho} +- {se}");
    let acf = autocorrelation(&x, &[1]).unwrap()[0];
    assert_eq!(acf, rho);
}

#[test]
fn iid_batch_means_se() {
    let n = 1_000_000;
    let bm = batch_means_se(&iid(n, 3), None).unwrap();
    let exact = 1.0 / (n as f64).sqrt();
    assert!((bm.se / exact - 1.0).abs() < 0.2, "{}", bm.se / exact);
    assert_eq!(bm.batches, 1000);
}

#[test]
fn ar1_batch_means_inflation() {
    let n = 1_000_000;
    for phi in [0.5, 0.9] {
        let bm = batch_means_se(&ar1(n, phi, 4), None).unwrap();
        // Stationary variance is one, so sigma_h^2 = (1 + phi) / (1 - phi).
        let exact = ((1.0 + phi) / (1.0 - phi) / n as f64).sqrt();
        assert!((bm.se / exact - 1.0).abs() < 0.2, "phi {phi}: {}", bm.se / exact);
    }
}

#[test]
fn ess_iid_and_ar1() {
    let n = 200_000;
    let e = effective_sample_size(&iid(n, 5)).unwrap();
    assert!((e / n as f64 - 1.0).abs() < 0.1, "{e}");
    assert!(e <= n as f64);
    let e = effective_sample_size(&ar1(1_000_000, 0.9, 6)).unwrap();
    let exact = 1_000_000.0 / 19.0;
    assert!((e / exact - 1.0).abs() < 0.2, "{e} vs {exact}");
}

#[test]
fn comparison_detects_ess_ordering() {
    let n = 100_000;
    let c = compare_kernels(&[("iid".into(), iid(n, 7)), ("ar".into(), ar1(n, 0.9, 8))]).unwrap();
    assert!(c.rows[0].ess > 5.0 * c.rows[1].ess);
    let p = c.pairs.iter().find(|p| p.first == "iid").unwrap();
    assert!(p.first_mixes_no_worse && p.ess_ratio > 5.0);
    let q = c.pairs.iter().find(|p| p.first == "ar").unwrap();
    assert!(!q.first_mixes_no_worse);
}
