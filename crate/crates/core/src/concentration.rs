//! Hyperbolic ball volume, boundary sphere area, and their concentration ratio.
//!
//! For curvature `k < 0` and hyperbolic radius `r`,
//!
//! ```text
//! V_k(r) = (2 π^{d/2} / Γ(d/2)) ∫_0^r (sinh(sqrt(-k) t)/sqrt(-k))^{d-1} dt
//! A_k(r) = (2 π^{d/2} / Γ(d/2)) (sinh(sqrt(-k) r)/sqrt(-k))^{d-1}
//! ```
//!
//! so the ratio `V/A = ∫_0^r (sinh(sqrt(-k) t)/sinh(sqrt(-k) r))^{d-1} dt` is
//! computed directly from its own integral (never as a quotient of two huge
//! numbers) and is bounded above by `r/d`. The integrand for large `d` is
//! sharply peaked at `t = r`, so integration runs in the substituted variable
//! `s = r - t` over a geometric panel layout near `s = 0`, each panel refined
//! by Gauss–Kronrod 7/15 bisection.

use crate::error::{Error, Result};
use crate::numeric::ln_sinh;

/// Specification of a hyperbolic ball: dimension, curvature, hyperbolic radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallSpec {
    pub d: usize,
    pub k: f64,
    pub r: f64,
}

impl BallSpec {
    pub fn new(d: usize, k: f64, r: f64) -> Result<Self> {
        if d < 1 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        if !(k < 0.0) || !k.is_finite() {
            return Err(Error::InvalidCurvature { k, reason: "ball volume requires k < 0" });
        }
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
        }
        Ok(BallSpec { d, k, r })
    }
}

/// Γ(n/2) by the recurrence from Γ(1/2) = sqrt(π) and Γ(1) = 1.
///
/// Overflows f64 for n > 341; use [`ln_gamma_half_integer`] there.
pub fn gamma_half_integer(n: usize) -> f64 {
    assert!(n >= 1, "gamma argument n/2 requires n >= 1");
    let mut z;
    let mut acc;
    if n % 2 == 0 {
        z = 1.0;
        acc = 1.0;
    } else {
        z = 0.5;
        acc = std::f64::consts::PI.sqrt();
    }
    while z + 1.0 <= n as f64 / 2.0 {
        acc *= z;
        z += 1.0;
    }
    acc
}

/// ln Γ(n/2), exact recurrence in log space; valid for all n ≥ 1.
pub fn ln_gamma_half_integer(n: usize) -> f64 {
    assert!(n >= 1, "gamma argument n/2 requires n >= 1");
    let mut z;
    let mut acc;
    if n % 2 == 0 {
        z = 1.0;
        acc = 0.0;
    } else {
        z = 0.5;
        acc = 0.5 * std::f64::consts::PI.ln();
    }
    while z + 1.0 <= n as f64 / 2.0 {
        acc += z.ln();
        z += 1.0;
    }
    acc
}

/// ln of the surface prefactor `2 π^{d/2} / Γ(d/2)`.
pub fn ln_surface_prefactor(d: usize) -> f64 {
    std::f64::consts::LN_2 + (d as f64 / 2.0) * std::f64::consts::PI.ln()
        - ln_gamma_half_integer(d)
}

/// `∫_0^r (sinh(sqrt(-k) t)/sinh(sqrt(-k) r))^{d-1} dt`, the volume/area
/// ratio. Always in `(0, r]` and bounded above by `r/d`.
pub fn volume_area_ratio(spec: &BallSpec) -> Result<f64> {
    let BallSpec { d, k, r } = *spec;
    if d == 1 {
        // integrand is identically 1
        return Ok(r);
    }
    let s = (-k).sqrt();
    let ln_sinh_r = ln_sinh(s * r);
    let p = (d - 1) as f64;
    // peak of the integrand sits at u = 0 after substituting u = r - t
    let f = |u: f64| -> f64 {
        let t = r - u;
        if t <= 0.0 {
            return 0.0;
        }
        (p * (ln_sinh(s * t) - ln_sinh_r)).exp()
    };
    integrate_peaked(&f, r, d)
}

/// ln V_k(r). Computed as ln A_k(r) + ln(V/A) so the peaked-integrand care in
/// [`volume_area_ratio`] carries over to the volume.
pub fn ball_log_volume(spec: &BallSpec) -> Result<f64> {
    let ratio = volume_area_ratio(spec)?;
    Ok(sphere_log_area(spec) + ratio.ln())
}

/// V_k(r) in linear scale. Errors when the value overflows f64 (large `d` or
/// radius); use [`ball_log_volume`] there.
pub fn ball_volume(spec: &BallSpec) -> Result<f64> {
    let lv = ball_log_volume(spec)?;
    let v = lv.exp();
    if !v.is_finite() {
        return Err(Error::NumericDomain(format!(
            "volume exceeds f64 range (ln V = {lv:.3}); use ball_log_volume"
        )));
    }
    Ok(v)
}

/// ln A_k(r).
pub fn sphere_log_area(spec: &BallSpec) -> f64 {
    let BallSpec { d, k, r } = *spec;
    let s = (-k).sqrt();
    let radial = if d == 1 { 0.0 } else { (d - 1) as f64 * (ln_sinh(s * r) - s.ln()) };
    ln_surface_prefactor(d) + radial
}

/// A_k(r) in linear scale; errors on overflow like [`ball_volume`].
pub fn sphere_area(spec: &BallSpec) -> Result<f64> {
    let la = sphere_log_area(spec);
    let a = la.exp();
    if !a.is_finite() {
        return Err(Error::NumericDomain(format!(
            "area exceeds f64 range (ln A = {la:.3}); use sphere_log_area"
        )));
    }
    Ok(a)
}

/// One row of a concentration sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub d: usize,
    pub ratio: f64,
    pub bound: f64,
}

/// Volume/area ratio across dimensions at fixed `(k, r)`, sorted by `d`.
/// Dispatches to the rayon lane when the `parallel` feature is enabled.
pub fn concentration_sweep(d_list: &[usize], k: f64, r: f64) -> Result<Vec<SweepRow>> {
    #[cfg(feature = "parallel")]
    {
        concentration_sweep_par(d_list, k, r)
    }
    #[cfg(not(feature = "parallel"))]
    {
        concentration_sweep_seq(d_list, k, r)
    }
}

/// Sequential sweep; always available and bit-identical to the parallel lane.
pub fn concentration_sweep_seq(d_list: &[usize], k: f64, r: f64) -> Result<Vec<SweepRow>> {
    let ds = sorted_dims(d_list)?;
    ds.iter().map(|&d| sweep_row(d, k, r)).collect()
}

/// Parallel sweep over dimensions; output order is by `d` regardless of the
/// number of threads.
#[cfg(feature = "parallel")]
pub fn concentration_sweep_par(d_list: &[usize], k: f64, r: f64) -> Result<Vec<SweepRow>> {
    use rayon::prelude::*;
    let ds = sorted_dims(d_list)?;
    ds.par_iter().map(|&d| sweep_row(d, k, r)).collect()
}

fn sweep_row(d: usize, k: f64, r: f64) -> Result<SweepRow> {
    let spec = BallSpec::new(d, k, r)?;
    let ratio = volume_area_ratio(&spec)?;
    Ok(SweepRow { d, ratio, bound: r / d as f64 })
}

fn sorted_dims(d_list: &[usize]) -> Result<Vec<usize>> {
    if d_list.is_empty() {
        return Err(Error::InvalidArgument("dimension list is empty".into()));
    }
    let mut ds = d_list.to_vec();
    ds.sort_unstable();
    ds.dedup();
    Ok(ds)
}

// ---------------------------------------------------------------------------
// Adaptive Gauss–Kronrod quadrature
// ---------------------------------------------------------------------------

const REL_TARGET: f64 = 1e-10;
const REL_HARD_LIMIT: f64 = 1e-6;
const MAX_DEPTH: u32 = 40;

/// Integrate `f` over `[0, r]` where `f` decays away from 0 with a length
/// scale shrinking like `1/d`. Geometric panels seed the subdivision; each
/// panel is then bisected adaptively until the G7/K15 discrepancy meets the
/// relative target.
fn integrate_peaked(f: &dyn Fn(f64) -> f64, r: f64, d: usize) -> Result<f64> {
    let mut edges = vec![0.0];
    let levels = (usize::BITS - d.max(2).leading_zeros()) + 4;
    for i in (0..levels).rev() {
        edges.push(r * 0.5f64.powi(i as i32));
    }
    // first pass: rough estimate fixes the absolute tolerance
    let rough: f64 = edges.windows(2).map(|w| gauss_kronrod_15(f, w[0], w[1]).0).sum();
    let tol = (rough.abs() * REL_TARGET).max(f64::MIN_POSITIVE * 64.0);

    let mut total = 0.0;
    let mut err_total = 0.0;
    for w in edges.windows(2) {
        let (v, e) = refine(f, w[0], w[1], tol / (edges.len() - 1) as f64, 0);
        total += v;
        err_total += e;
    }
    if err_total > total.abs().max(f64::MIN_POSITIVE) * REL_HARD_LIMIT {
        return Err(Error::QuadratureDiverged(format!(
            "estimated error {err_total:e} exceeds {REL_HARD_LIMIT:e} of integral {total:e}"
        )));
    }
    Ok(total)
}

fn refine(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> (f64, f64) {
    let (v, e) = gauss_kronrod_15(f, a, b);
    if e <= tol || depth >= MAX_DEPTH {
        return (v, e);
    }
    let m = 0.5 * (a + b);
    let (vl, el) = refine(f, a, m, tol * 0.5, depth + 1);
    let (vr, er) = refine(f, m, b, tol * 0.5, depth + 1);
    (vl + vr, el + er)
}

// 15-point Kronrod nodes/weights with the embedded 7-point Gauss rule
// (QUADPACK dqk15 constants).
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// Returns (Kronrod estimate, error estimate |K15 - G7| scaled).
fn gauss_kronrod_15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let fsum = f(c - x) + f(c + x);
        kron += WGK[j] * fsum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * fsum;
        }
    }
    kron *= h;
    gauss *= h;
    (kron, (kron - gauss).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_half_integer_examples() {
        assert_eq!(gamma_half_integer(2), 1.0);
        assert_relative_eq!(gamma_half_integer(1), std::f64::consts::PI.sqrt(), max_relative = 1e-15);
        // Γ(7/2) = 15 sqrt(pi) / 8
        assert_relative_eq!(gamma_half_integer(7), 3.323350970447842, max_relative = 1e-14);
        assert_relative_eq!(gamma_half_integer(8), 6.0, max_relative = 1e-14);
    }

    #[test]
    fn ln_gamma_consistent_with_linear_scale() {
        for n in 1..30 {
            assert_relative_eq!(
                ln_gamma_half_integer(n),
                gamma_half_integer(n).ln(),
                max_relative = 1e-12
            );
        }
        // beyond f64 range for the linear form
        assert!(ln_gamma_half_integer(800).is_finite());
    }

    #[test]
    fn ball_volume_closed_forms() {
        // d=2: 2 pi (cosh r - 1)
        let v = ball_volume(&BallSpec::new(2, -1.0, 1.0).unwrap()).unwrap();
        assert_relative_eq!(v, 2.0 * std::f64::consts::PI * (1f64.cosh() - 1.0), max_relative = 1e-9);

        // d=1: interval of length 2r
        let v = ball_volume(&BallSpec::new(1, -1.0, 1.0).unwrap()).unwrap();
        assert_relative_eq!(v, 2.0, max_relative = 1e-12);

        // d=3: pi (sinh 2r - 2r) at r=1
        let v = ball_volume(&BallSpec::new(3, -1.0, 1.0).unwrap()).unwrap();
        assert_relative_eq!(v, std::f64::consts::PI * (2f64.sinh() - 2.0), max_relative = 1e-9);
    }

    #[test]
    fn sphere_area_closed_forms() {
        let a = sphere_area(&BallSpec::new(2, -1.0, 1.0).unwrap()).unwrap();
        assert_relative_eq!(a, 2.0 * std::f64::consts::PI * 1f64.sinh(), max_relative = 1e-12);

        // local flatness: area / (2 pi r) -> 1 as r -> 0
        let r = 1e-6;
        let a = sphere_area(&BallSpec::new(2, -1.0, r).unwrap()).unwrap();
        assert_relative_eq!(a / (2.0 * std::f64::consts::PI * r), 1.0, max_relative = 1e-9);

        // 0-sphere has two points regardless of radius
        for &r in &[0.1, 1.0, 7.0] {
            let a = sphere_area(&BallSpec::new(1, -1.0, r).unwrap()).unwrap();
            assert_relative_eq!(a, 2.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn ratio_closed_form_and_bound() {
        // d=2, k=-1, r=1: (cosh 1 - 1)/sinh 1 = tanh(1/2)
        let ratio = volume_area_ratio(&BallSpec::new(2, -1.0, 1.0).unwrap()).unwrap();
        assert_relative_eq!(ratio, 0.5f64.tanh(), max_relative = 1e-10);

        // d=1: integrand is 1, ratio = r, bound tight
        for &r in &[0.5, 1.0, 5.0] {
            assert_eq!(volume_area_ratio(&BallSpec::new(1, -1.0, r).unwrap()).unwrap(), r);
        }

        // d = 1024 stays under the 1/d bound
        let ratio = volume_area_ratio(&BallSpec::new(1024, -1.0, 1.0).unwrap()).unwrap();
        assert!(ratio <= 1.0 / 1024.0 + 1e-12);
        assert_relative_eq!(ratio, 7.441654654837704e-4, max_relative = 1e-8);
    }

    #[test]
    fn large_dimension_small_curvature() {
        let ratio = volume_area_ratio(&BallSpec::new(1024, -0.005, 0.5).unwrap()).unwrap();
        assert!(ratio > 0.0 && ratio <= 0.5 / 1024.0 + 1e-12);
    }

    #[test]
    fn euclidean_limit_of_ratio() {
        // k -> 0^-: ratio -> r/d
        for &(d, r) in &[(2usize, 1.0), (8, 0.5), (64, 2.0)] {
            let ratio = volume_area_ratio(&BallSpec::new(d, -1e-8, r).unwrap()).unwrap();
            assert_relative_eq!(ratio, r / d as f64, max_relative = 1e-4);
        }
    }

    #[test]
    fn integrand_dominated_by_power_law() {
        // (sinh(st)/sinh(sr))^{d-1} <= (t/r)^{d-1} on (0, r)
        for &k in &[-1.0, -0.05] {
            let s = (-k as f64).sqrt();
            for &d in &[2usize, 5, 17] {
                let r = 2.0;
                for i in 1..40 {
                    let t = r * i as f64 / 40.0;
                    let lhs = ((d - 1) as f64 * (ln_sinh(s * t) - ln_sinh(s * r))).exp();
                    let rhs = (t / r).powi(d as i32 - 1);
                    assert!(lhs <= rhs + 1e-12, "domination fails at d={d} k={k} t={t}");
                }
            }
        }
    }

    #[test]
    fn sweep_rows_sorted_and_decreasing() {
        let rows = concentration_sweep(&[8, 2, 4], -1.0, 1.0).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].d, 2);
        assert!(rows[0].ratio > rows[1].ratio && rows[1].ratio > rows[2].ratio);
        for row in &rows {
            assert!(row.ratio <= row.bound + 1e-12);
        }

        let single = concentration_sweep(&[1], -1.0, 1.0).unwrap();
        assert_eq!(single, vec![SweepRow { d: 1, ratio: 1.0, bound: 1.0 }]);

        assert!(concentration_sweep(&[], -1.0, 1.0).is_err());
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn sweep_parallel_matches_sequential_bitwise() {
        let ds: Vec<usize> = (0..=10).map(|i| 1usize << i).collect();
        let par = concentration_sweep_par(&ds, -0.05, 2.0).unwrap();
        let seq = concentration_sweep_seq(&ds, -0.05, 2.0).unwrap();
        assert_eq!(par, seq);
    }

    #[test]
    fn log_volume_consistent_with_linear() {
        let spec = BallSpec::new(5, -0.5, 1.5).unwrap();
        assert_relative_eq!(
            ball_log_volume(&spec).unwrap().exp(),
            ball_volume(&spec).unwrap(),
            max_relative = 1e-12
        );
        // overflow case errors in linear scale, works in log scale
        let big = BallSpec::new(400, -1.0, 5.0).unwrap();
        assert!(ball_volume(&big).is_err());
        assert!(ball_log_volume(&big).unwrap().is_finite());
    }
}
