//! Butterworth design as cascaded second-order sections.
//!
//! The analog prototype poles `exp(jπ(2k+N+1)/2N)` are frequency-transformed
//! (low/high/band-pass, band-stop) at prewarped cutoffs, mapped to the z-plane
//! with the bilinear transform, and grouped into conjugate pairs. With
//! prewarping every cutoff lands exactly on the −3 dB point.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::band::{BandSpec, FilterKind};
use crate::dataset::SAMPLE_RATE_HZ;
use crate::error::{Error, Result};

/// One biquad: `b` numerator, `a` denominator with `a[0] == 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Section {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        (self.b[0] + z_inv * self.b[1] + z2 * self.b[2]) / (self.a[0] + z_inv * self.a[1] + z2 * self.a[2])
    }

    /// Roots of `z² + a1 z + a2`.
    pub fn poles(&self) -> [Complex64; 2] {
        let (a1, a2) = (self.a[1], self.a[2]);
        let disc = Complex64::new(a1 * a1 - 4.0 * a2, 0.0).sqrt();
        [(-a1 + disc) / 2.0, (-a1 - disc) / 2.0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterDesign {
    pub band: BandSpec,
    /// Prototype order; band-pass and band-stop designs have twice as many poles.
    pub order: usize,
    pub sample_rate_hz: f64,
    pub sections: Vec<Section>,
}

impl FilterDesign {
    /// Complex frequency response at `freq_hz`.
    pub fn response(&self, freq_hz: f64) -> Complex64 {
        let w = 2.0 * PI * freq_hz / self.sample_rate_hz;
        let z_inv = Complex64::from_polar(1.0, -w);
        self.sections
            .iter()
            .map(|s| s.response(z_inv))
            .fold(Complex64::new(1.0, 0.0), |acc, h| acc * h)
    }

    pub fn magnitude(&self, freq_hz: f64) -> f64 {
        self.response(freq_hz).norm()
    }

    pub fn magnitude_db(&self, freq_hz: f64) -> f64 {
        20.0 * self.magnitude(freq_hz).log10()
    }

    pub fn poles(&self) -> Vec<Complex64> {
        self.sections.iter().flat_map(|s| s.poles()).collect()
    }

    pub fn is_stable(&self) -> bool {
        self.poles().iter().all(|p| p.norm() < 1.0)
    }

    /// Total number of poles.
    pub fn total_order(&self) -> usize {
        2 * self.sections.len()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Designs a Butterworth filter of the given prototype order at 128 Hz.
pub fn design_filter(band: &BandSpec, order: usize) -> Result<FilterDesign> {
    design_filter_at(band, order, SAMPLE_RATE_HZ)
}

pub fn design_filter_at(band: &BandSpec, order: usize, sample_rate_hz: f64) -> Result<FilterDesign> {
    if order < 2 || !order.is_multiple_of(2) {
        return Err(Error::Design(format!("order must be even and >= 2, got {order}")));
    }
    if band.kind == FilterKind::Identity {
        return Err(Error::Design(format!("band '{}' needs no filter", band.name)));
    }
    let nyquist = sample_rate_hz / 2.0;
    let cutoffs = band.cutoffs();
    let expected = match band.kind {
        FilterKind::Lowpass | FilterKind::Highpass => 1,
        _ => 2,
    };
    if cutoffs.len() != expected {
        return Err(Error::Design(format!(
            "{:?} needs {expected} cutoff(s), got {}",
            band.kind,
            cutoffs.len()
        )));
    }
    for &f in &cutoffs {
        if !(f > 0.0 && f < nyquist) {
            return Err(Error::Design(format!("cutoff {f} Hz outside (0, {nyquist}) Hz")));
        }
    }
    if expected == 2 && cutoffs[0] >= cutoffs[1] {
        return Err(Error::Design(format!(
            "low cutoff {} must be below high cutoff {}",
            cutoffs[0], cutoffs[1]
        )));
    }

    let fs2 = 2.0 * sample_rate_hz;
    let prewarp = |f: f64| fs2 * (PI * f / sample_rate_hz).tan();
    let bilinear = |s: Complex64| (fs2 + s) / (fs2 - s);

    // Left-half-plane prototype poles with positive imaginary part; their
    // conjugates are implied.
    let n = order as f64;
    let proto: Vec<Complex64> = (0..order / 2)
        .map(|k| Complex64::from_polar(1.0, PI * (2.0 * k as f64 + n + 1.0) / (2.0 * n)))
        .collect();

    // (analog poles of one conjugate family, digital zeros of each section, reference freq)
    let (analog, zeros, ref_hz): (Vec<Complex64>, [Complex64; 2], f64) = match band.kind {
        FilterKind::Lowpass => {
            let wc = prewarp(cutoffs[0]);
            let one = Complex64::new(-1.0, 0.0);
            (proto.iter().map(|p| p * wc).collect(), [one, one], 0.0)
        }
        FilterKind::Highpass => {
            let wc = prewarp(cutoffs[0]);
            let one = Complex64::new(1.0, 0.0);
            (proto.iter().map(|p| wc / p).collect(), [one, one], nyquist)
        }
        FilterKind::Bandpass => {
            let (w1, w2) = (prewarp(cutoffs[0]), prewarp(cutoffs[1]));
            let (w0, bw) = ((w1 * w2).sqrt(), w2 - w1);
            let poles = split_poles(proto.iter().map(|p| p * (bw / 2.0)), w0);
            let center_hz = sample_rate_hz / PI * (w0 / fs2).atan();
            (poles, [Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)], center_hz)
        }
        FilterKind::Bandreject => {
            let (w1, w2) = (prewarp(cutoffs[0]), prewarp(cutoffs[1]));
            let (w0, bw) = ((w1 * w2).sqrt(), w2 - w1);
            let poles = split_poles(proto.iter().map(|p| (bw / 2.0) / p), w0);
            let notch = bilinear(Complex64::new(0.0, w0));
            (poles, [notch, notch.conj()], 0.0)
        }
        FilterKind::Identity => unreachable!(),
    };

    let mut digital: Vec<Complex64> = analog.into_iter().map(bilinear).collect();
    digital.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    let mut sections: Vec<Section> = digital
        .iter()
        .map(|p| Section {
            b: [1.0, -(zeros[0] + zeros[1]).re, (zeros[0] * zeros[1]).re],
            a: [1.0, -2.0 * p.re, p.norm_sqr()],
        })
        .collect();

    // Normalize to unit gain at the passband reference point, spreading the
    // gain evenly over the sections.
    let mut design = FilterDesign {
        band: *band,
        order,
        sample_rate_hz,
        sections: Vec::new(),
    };
    design.sections = sections.clone();
    let h = design.response(ref_hz);
    let per_section = h.norm().powf(-1.0 / sections.len() as f64);
    for s in sections.iter_mut() {
        for b in s.b.iter_mut() {
            *b *= per_section;
        }
    }
    if h.re < 0.0 {
        for b in sections[0].b.iter_mut() {
            *b = -*b;
        }
    }
    design.sections = sections;
    if !design.is_stable() {
        return Err(Error::Design(format!("unstable design for {}", band.name)));
    }
    Ok(design)
}

/// Solves `s² − q s + w0² = 0` for each `q` and keeps the root with positive
/// imaginary part from each pair of conjugate families.
fn split_poles(scaled: impl Iterator<Item = Complex64>, w0: f64) -> Vec<Complex64> {
    let mut out = Vec::new();
    for q in scaled {
        let disc = (q * q - w0 * w0).sqrt();
        for root in [q + disc, q - disc] {
            // The conjugate prototype pole yields the conjugates of these roots,
            // so each root stands for one conjugate pair.
            out.push(if root.im >= 0.0 { root } else { root.conj() });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::band::{BandName, BandSpec};

    /// Impulse response by an independent direct-form-I cascade, then a DFT at
    /// `freq_hz`.
    fn oracle_magnitude(design: &FilterDesign, freq_hz: f64) -> f64 {
        let n = 8192;
        let mut signal = vec![0.0; n];
        signal[0] = 1.0;
        for s in &design.sections {
            let mut out = vec![0.0; n];
            for i in 0..n {
                let x = |k: usize| if i >= k { signal[i - k] } else { 0.0 };
                let y = |k: usize| if i >= k { out[i - k] } else { 0.0 };
                out[i] = s.b[0] * x(0) + s.b[1] * x(1) + s.b[2] * x(2) - s.a[1] * y(1) - s.a[2] * y(2);
            }
            signal = out;
        }
        let w = 2.0 * PI * freq_hz / design.sample_rate_hz;
        let (re, im) = signal.iter().enumerate().fold((0.0, 0.0), |(re, im), (i, h)| {
            (re + h * (w * i as f64).cos(), im - h * (w * i as f64).sin())
        });
        (re * re + im * im).sqrt()
    }

    fn design(name: BandName) -> FilterDesign {
        design_filter(&BandSpec::new(name), 4).unwrap()
    }

    #[test]
    fn oracle_agrees_with_closed_form_response() {
        for name in [BandName::Delta, BandName::Theta, BandName::Dbg, BandName::Gamma] {
            let d = design(name);
            for f in [0.5, 3.0, 5.5, 10.0, 20.0, 40.0, 60.0] {
                let a = d.magnitude(f);
                let b = oracle_magnitude(&d, f);
                assert!((a - b).abs() < 1e-9, "{name} at {f}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn alpha_passband_and_stopband() {
        let d = design(BandName::Alpha);
        assert!(oracle_magnitude(&d, 10.0) >= 0.9);
        assert!(oracle_magnitude(&d, 2.0) <= 0.1);
    }

    #[test]
    fn delta_cutoff_is_minus_three_db() {
        let d = design(BandName::Delta);
        let db = 20.0 * oracle_magnitude(&d, 4.0).log10();
        assert!((db + 3.0103).abs() <= 0.5, "{db}");
    }

    #[test]
    fn band_reject_bounds() {
        let d = design(BandName::Dbg);
        assert!(oracle_magnitude(&d, 10.0) <= 0.05);
        assert!(oracle_magnitude(&d, 1.0) >= 0.9);
        assert!(oracle_magnitude(&d, 40.0) >= 0.9);
    }

    #[test]
    fn sections_are_normalized_and_stable() {
        for name in BandName::ALL.into_iter().filter(|b| *b != BandName::All) {
            for order in [2, 4, 6, 8] {
                let d = design_filter(&BandSpec::new(name), order).unwrap();
                assert!(d.sections.iter().all(|s| s.a[0] == 1.0));
                assert!(d.is_stable(), "{name} order {order}");
                let expected = match name {
                    BandName::Delta | BandName::Gamma => order / 2,
                    _ => order,
                };
                assert_eq!(d.sections.len(), expected);
            }
        }
    }

    #[test]
    fn lowpass_is_monotonic() {
        let d = design(BandName::Delta);
        let mags: Vec<f64> = (0..=630).map(|i| d.magnitude(i as f64 * 0.1)).collect();
        assert!(mags.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn rejects_bad_requests() {
        assert!(design_filter(&BandSpec::new(BandName::Alpha), 3).is_err());
        assert!(design_filter(&BandSpec::new(BandName::Alpha), 0).is_err());
        assert!(design_filter(&BandSpec::new(BandName::All), 4).is_err());
        let mut b = BandSpec::new(BandName::Gamma);
        b.low_hz = Some(64.0);
        assert!(matches!(design_filter(&b, 4), Err(Error::Design(_))));
        let mut b = BandSpec::new(BandName::Beta);
        b.high_hz = Some(70.0);
        assert!(design_filter(&b, 4).is_err());
    }

    #[test]
    fn json_round_trip() {
        let d = design(BandName::Beta);
        let back = FilterDesign::from_json(&d.to_json().unwrap()).unwrap();
        assert_eq!(back, d);
    }
}
