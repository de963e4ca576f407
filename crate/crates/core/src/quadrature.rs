//! Globally adaptive Gauss–Kronrod (10/21-point) quadrature.
//!
//! The integrands in this crate are sharply peaked at the left end of
//! `[0, 1]`; callers pass breakpoints that resolve the peak so that the
//! initial rule applications see it.

#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

// Kronrod abscissae on [-1, 1]; odd indices are the 10-point Gauss nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_382_959_364_122,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature<T> {
    pub value: T,
    /// Estimated absolute error.
    pub abs_error: T,
    pub intervals: usize,
    pub evaluations: usize,
}

/// Stopping rule for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance<T> {
    pub relative: T,
    pub absolute: T,
    pub max_intervals: usize,
}

impl<T: Scalar> Tolerance<T> {
    pub fn relative(relative: T) -> Self {
        Self {
            relative,
            absolute: T::zero(),
            max_intervals: 4000,
        }
    }

    pub fn with_absolute(mut self, absolute: T) -> Self {
        self.absolute = absolute;
        self
    }
}

struct Segment<T> {
    lo: T,
    hi: T,
    value: T,
    error: T,
}

impl<T: Scalar> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl<T: Scalar> Eq for Segment<T> {}

impl<T: Scalar> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
    }
}

/// One 21-point Kronrod application with the embedded 10-point Gauss
/// estimate; returns `(integral, error estimate)`.
fn kronrod21<T: Scalar, F: Fn(T) -> T>(f: &F, lo: T, hi: T) -> (T, T) {
    let half = T::lit(0.5);
    let center = half * (lo + hi);
    let half_len = half * (hi - lo);
    let f_center = f(center);
    let mut kronrod = f_center * T::lit(WGK[10]);
    let mut gauss = T::zero();
    let mut abs_sum = kronrod.abs();
    let mut values = [(T::zero(), T::zero()); 10];
    for (j, value) in values.iter_mut().enumerate() {
        let dx = half_len * T::lit(XGK[j]);
        let (f1, f2) = (f(center - dx), f(center + dx));
        *value = (f1, f2);
        kronrod = kronrod + T::lit(WGK[j]) * (f1 + f2);
        abs_sum = abs_sum + T::lit(WGK[j]) * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss = gauss + T::lit(WG[j / 2]) * (f1 + f2);
        }
    }
    let mean = kronrod * half;
    let mut asc = T::lit(WGK[10]) * (f_center - mean).abs();
    for (j, &(f1, f2)) in values.iter().enumerate() {
        asc = asc + T::lit(WGK[j]) * ((f1 - mean).abs() + (f2 - mean).abs());
    }
    let scale = half_len.abs();
    let result = kronrod * half_len;
    let abs_sum = abs_sum * scale;
    let asc = asc * scale;
    let mut err = ((kronrod - gauss) * half_len).abs();
    if asc != T::zero() && err != T::zero() {
        let ratio = (T::lit(200.0) * err / asc).powf(T::lit(1.5));
        err = asc * ratio.min(T::one());
    }
    let eps = T::epsilon();
    if abs_sum > T::min_positive_value() / (T::lit(50.0) * eps) {
        err = err.max(T::lit(50.0) * eps * abs_sum);
    }
    (result, err)
}

/// Integrates `f` over `[points[0], points[last]]`, starting from the
/// partition given by the sorted `points`.
///
/// Bisects the segment with the largest error estimate until the total
/// error is below `max(absolute, relative · |value|)`.
pub fn integrate<T, F>(f: F, points: &[T], tol: Tolerance<T>) -> Result<Quadrature<T>>
where
    T: Scalar,
    F: Fn(T) -> T,
{
    if points.len() < 2
        || points.iter().any(|x| x.is_nan())
        || points.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(Error::Domain(
            "quadrature needs at least two strictly increasing points".into(),
        ));
    }
    if !(tol.relative > T::zero() || tol.absolute > T::zero()) {
        return Err(Error::Domain(
            "quadrature tolerance must be positive".into(),
        ));
    }
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0usize;
    for w in points.windows(2) {
        let (value, error) = kronrod21(&f, w[0], w[1]);
        evaluations += 21;
        heap.push(Segment {
            lo: w[0],
            hi: w[1],
            value,
            error,
        });
    }
    let totals = |heap: &BinaryHeap<Segment<T>>| {
        heap.iter().fold((T::zero(), T::zero()), |(v, e), s| {
            (v + s.value, e + s.error)
        })
    };
    let max_intervals = tol.max_intervals.max(heap.len());
    loop {
        let (value, error) = totals(&heap);
        let target = tol.absolute.max(tol.relative * value.abs());
        if error <= target {
            return Ok(Quadrature {
                value,
                abs_error: error,
                intervals: heap.len(),
                evaluations,
            });
        }
        let worst = heap.peek().expect("non-empty segment heap");
        let mid = T::lit(0.5) * (worst.lo + worst.hi);
        let resolvable = mid > worst.lo && mid < worst.hi;
        if heap.len() >= max_intervals || !resolvable {
            let achieved = if value != T::zero() {
                (error / value.abs()).as_f64()
            } else {
                error.as_f64()
            };
            return Err(Error::Quadrature {
                requested: tol.relative.as_f64(),
                achieved,
            });
        }
        let worst = heap.pop().expect("non-empty segment heap");
        let (lv, le) = kronrod21(&f, worst.lo, mid);
        let (rv, re) = kronrod21(&f, mid, worst.hi);
        evaluations += 42;
        heap.push(Segment {
            lo: worst.lo,
            hi: mid,
            value: lv,
            error: le,
        });
        heap.push(Segment {
            lo: mid,
            hi: worst.hi,
            value: rv,
            error: re,
        });
    }
}

/// Breakpoints on `[0, 1]` that geometrically resolve a boundary layer of
/// width `scale` at zero: `0, scale/4, scale/2, scale, 2 scale, …, 1`.
pub fn boundary_layer_points<T: Scalar>(scale: T) -> Vec<T> {
    let mut points = vec![T::zero()];
    if scale.is_finite() && scale > T::zero() && scale < T::one() {
        let mut x = scale * T::lit(0.25);
        let two = T::lit(2.0);
        while x < T::one() {
            points.push(x);
            x = x * two;
        }
    }
    points.push(T::one());
    points
}
