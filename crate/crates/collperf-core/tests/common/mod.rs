//! Shared fixtures for the integration suites.

use collperf_core::profile::{NetworkProfile, PLogPSample};
use rand::Rng;

/// Synthetic network with affine parameter curves, handy because every
/// interpolated value can be checked by hand:
///
/// L = 50 µs, samples at {1, 250, 1000, 2000, 3000, 4000} bytes with
/// g(m) = 10 + 0.01·m, os(m) = 8 + 0.006·m, or(m) = 7 + 0.006·m.
#[allow(dead_code)] // each test target compiles its own copy of this module
pub fn testnet() -> NetworkProfile {
    let sizes = [1u64, 250, 1000, 2000, 3000, 4000];
    let samples = sizes
        .iter()
        .map(|&b| {
            let m = b as f64;
            PLogPSample {
                bytes: b,
                g_us: 10.0 + 0.01 * m,
                os_us: 8.0 + 0.006 * m,
                or_us: 7.0 + 0.006 * m,
            }
        })
        .collect();
    NetworkProfile::new("testnet", 50.0, samples).expect("valid fixture")
}

/// Random profile with strictly positive, nondecreasing parameter curves —
/// the realistic shape for measured networks. Sample sizes always include
/// 1 byte and span past 1 MiB so sweeps hit interpolation, exact-sample and
/// extrapolation paths.
#[allow(dead_code)] // each test target compiles its own copy of this module
pub fn random_monotone_profile<R: Rng>(rng: &mut R, name: &str) -> NetworkProfile {
    let mut sizes = vec![1u64, 64, 1024, 16 * 1024, 256 * 1024, 2 * 1024 * 1024];
    // jitter the interior sizes a little so profiles differ structurally
    for s in sizes.iter_mut().skip(1) {
        *s += rng.gen_range(0..=(*s / 2));
    }
    sizes.dedup();

    let latency = rng.gen_range(5.0..200.0);
    let mut g = rng.gen_range(1.0..40.0);
    let mut os = rng.gen_range(0.5..(0.9 * g));
    let mut or = rng.gen_range(0.5..(0.9 * g));
    let (sg, so, sr) = (
        rng.gen_range(0.0005..0.02),
        rng.gen_range(0.0002..0.01),
        rng.gen_range(0.0002..0.01),
    );

    let mut prev = 0u64;
    let mut samples = Vec::new();
    for &b in &sizes {
        let db = (b - prev) as f64;
        g += sg * db * rng.gen_range(0.5..1.5);
        os += so * db * rng.gen_range(0.5..1.5);
        or += sr * db * rng.gen_range(0.5..1.5);
        samples.push(PLogPSample {
            bytes: b,
            g_us: g,
            os_us: os,
            or_us: or,
        });
        prev = b;
    }
    NetworkProfile::new(name, latency, samples).expect("generated profile is valid")
}

/// Relative-error assertion used throughout: |a − b| ≤ tol·max(|b|, 1).
#[allow(dead_code)] // each test target compiles its own copy of this module
pub fn assert_close(actual: f64, expected: f64, tol: f64, what: &str) {
    let scale = expected.abs().max(1.0);
    assert!(
        (actual - expected).abs() <= tol * scale,
        "{what}: got {actual}, expected {expected} (tol {tol})"
    );
}
