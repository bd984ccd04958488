//! Globally adaptive Gauss–Kronrod (10/21 point) integration on a finite
//! interval, with caller-supplied breakpoints.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// Kronrod abscissae on [0, 1]; odd indices are the 10-point Gauss nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_725,
    0.054_755_896_574_351_995,
    0.075_039_674_810_919_96,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_84,
    0.134_709_217_311_473_34,
    0.142_775_938_577_060_09,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

/// Value of an integral together with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    // largest error first; ties broken by position so the order is total
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Applies the 21-point Kronrod rule on `[a, b]` and returns the Kronrod value
/// with the QUADPACK-style rescaled Kronrod/Gauss difference.
pub(crate) fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);

    let mut res_k = WGK[10] * f_center;
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv = [(0.0, 0.0); 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let (f1, f2) = (f(center - dx), f(center + dx));
        fv[j] = (f1, f2);
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (f_center - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv[j].0 - mean).abs() + (fv[j].1 - mean).abs());
    }

    let width = half.abs();
    let value = res_k * half;
    res_abs *= width;
    res_asc *= width;
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

/// Neumaier-compensated sum in iteration order.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Integrates `f` over `[points[0], points[last]]`, starting from one panel
/// per consecutive pair of `points` (which must be sorted) and bisecting the
/// panel with the largest error until
/// `error <= max(abs_tol, rel_tol * |value|)`.
///
/// The returned value is summed in panel order, so it depends only on `f` and
/// the arguments.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    points: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<Estimate> {
    let mut heap = BinaryHeap::new();
    for w in points.windows(2) {
        if w[1] > w[0] {
            let (value, error) = gk21(&mut f, w[0], w[1]);
            heap.push(Panel {
                a: w[0],
                b: w[1],
                value,
                error,
            });
        }
    }

    let totals = |heap: &BinaryHeap<Panel>| {
        let mut panels: Vec<&Panel> = heap.iter().collect();
        panels.sort_by(|p, q| p.a.total_cmp(&q.a));
        (
            compensated_sum(panels.iter().map(|p| p.value)),
            compensated_sum(panels.iter().map(|p| p.error)),
        )
    };

    let mut value: f64 = heap.iter().map(|p| p.value).sum();
    let mut error: f64 = heap.iter().map(|p| p.error).sum();
    loop {
        if error <= abs_tol.max(rel_tol * value.abs()) {
            break;
        }
        let worst = match heap.peek() {
            Some(p) => *p,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        let too_narrow = !(mid > worst.a && mid < worst.b);
        if heap.len() >= max_panels || too_narrow {
            let (value, abs_error) = totals(&heap);
            if abs_error <= abs_tol.max(rel_tol * value.abs()) {
                return Ok(Estimate { value, abs_error });
            }
            return Err(Error::NotConverged {
                estimate: value,
                abs_error,
            });
        }
        heap.pop();
        let (v1, e1) = gk21(&mut f, worst.a, mid);
        let (v2, e2) = gk21(&mut f, mid, worst.b);
        value += v1 + v2 - worst.value;
        error += e1 + e2 - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
    let (value, abs_error) = totals(&heap);
    Ok(Estimate { value, abs_error })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        let k: f64 = 2.0 * WGK[..10].iter().sum::<f64>() + WGK[10];
        let g: f64 = 2.0 * WG.iter().sum::<f64>();
        assert!((k - 2.0).abs() < 1e-15 && (g - 2.0).abs() < 1e-15);
    }

    #[test]
    fn single_panel_is_exact_for_polynomials() {
        // Kronrod part: degree 31; Gauss part: degree 19
        for deg in [0, 5, 19, 30, 31] {
            let (v, _) = gk21(&mut |x: f64| x.powi(deg), 0.0, 1.0);
            let exact = 1.0 / (deg as f64 + 1.0);
            assert!((v - exact).abs() < 1e-14, "degree {deg}");
        }
        let (_, err) = gk21(&mut |x: f64| x.powi(19), -1.0, 1.0);
        assert!(err < 1e-14);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let est = integrate(|x: f64| 1.0 / x.sqrt(), &[0.0, 1.0], 1e-12, 1e-10, 500).unwrap();
        assert!((est.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn breakpoints_catch_narrow_spike() {
        let spike = |x: f64| (-((x - 3.0) / 1e-4).powi(2)).exp();
        let exact = 1e-4 * std::f64::consts::PI.sqrt();
        let est = integrate(spike, &[0.0, 2.999, 3.001, 10.0], 1e-15, 1e-10, 500).unwrap();
        assert!((est.value - exact).abs() < 1e-12);
    }

    #[test]
    fn budget_exhaustion_reports_estimate() {
        let err = integrate(|x: f64| (1.0 / x).sin(), &[1e-9, 1.0], 1e-16, 1e-16, 8).unwrap_err();
        match err {
            Error::NotConverged { estimate, abs_error } => {
                assert!(estimate.is_finite() && abs_error > 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let s = compensated_sum([1.0, 1e100, 1.0, -1e100]);
        assert_eq!(s, 2.0);
    }
}
