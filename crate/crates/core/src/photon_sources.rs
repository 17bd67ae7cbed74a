//! Down-conversion pair and double-pair state construction, plus per-pulse
//! pair-number statistics for the rate engine.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::mode_algebra::{KetTerm, ModeLabel, Photon, StateVector, WavePacket};

/// Origin tag for the first pair of a double emission.
pub const ORIGIN_FIRST: &str = "unprimed";
/// Origin tag for the second pair of a double emission.
pub const ORIGIN_SECOND: &str = "primed";

/// Source parameters. `phase` is the relative phase between the HV and VH
/// terms (pi reproduces the singlet-like minus sign), `pair_mean` the mean
/// pairs per pulse, `packet_sigma` the photon packet width and `pump_sigma`
/// the standard deviation of the pair creation time within a pulse, both in
/// femtoseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceParams {
    pub phase: f64,
    pub pair_mean: f64,
    pub packet_sigma: f64,
    pub pump_sigma: f64,
}

impl SourceParams {
    pub fn new(phase: f64, pair_mean: f64, packet_sigma: f64, pump_sigma: f64) -> Result<Self> {
        if !pair_mean.is_finite() || pair_mean < 0.0 {
            return Err(Error::invalid(
                "pair_mean",
                format!("must be finite and >= 0, got {pair_mean}"),
            ));
        }
        if !packet_sigma.is_finite() || packet_sigma <= 0.0 {
            return Err(Error::invalid(
                "packet_sigma",
                format!("must be finite and > 0, got {packet_sigma}"),
            ));
        }
        if !pump_sigma.is_finite() || pump_sigma < 0.0 {
            return Err(Error::invalid(
                "pump_sigma",
                format!("must be finite and >= 0, got {pump_sigma}"),
            ));
        }
        if !phase.is_finite() {
            return Err(Error::invalid("phase", "must be finite"));
        }
        Ok(SourceParams {
            phase,
            pair_mean,
            packet_sigma,
            pump_sigma,
        })
    }

    /// Defaults taken from the experiment: singlet phase, pair probability
    /// 4e-4 per pulse, 250 fs packet sigma (500 fs coherence time, sigma =
    /// tau_c / 2), 200 fs FWHM pump (sigma = 200 / (2 sqrt(2 ln 2))).
    pub fn paper_defaults() -> Self {
        SourceParams {
            phase: std::f64::consts::PI,
            pair_mean: 4e-4,
            packet_sigma: 250.0,
            pump_sigma: 200.0 / (2.0 * (2.0 * 2f64.ln()).sqrt()),
        }
    }
}

/// Polarization-entangled pair on two paths,
/// `(|H>_a |V>_b + e^{i phase} |V>_a |H>_b) / sqrt(2)`,
/// with both packets centered at `t0`.
pub fn spdc_pair(
    path_a: &str,
    path_b: &str,
    params: &SourceParams,
    t0: f64,
    origin: Option<&str>,
) -> Result<StateVector> {
    let packet = WavePacket::new(t0, params.packet_sigma)?;
    let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let phase = Complex64::from_polar(1.0, params.phase);
    let make = |mode: ModeLabel| match origin {
        Some(tag) => Photon::tagged(mode, packet, tag),
        None => Photon::new(mode, packet),
    };
    Ok(StateVector::new(vec![
        KetTerm::new(
            amp,
            vec![make(ModeLabel::h(path_a)), make(ModeLabel::v(path_b))],
        ),
        KetTerm::new(
            amp * phase,
            vec![make(ModeLabel::v(path_a)), make(ModeLabel::h(path_b))],
        ),
    ]))
}

/// Tensor product of two pair states on paths a and b, tagged
/// [`ORIGIN_FIRST`] / [`ORIGIN_SECOND`] with creation times `t0_first` /
/// `t0_second`. Four canonical terms; unit norm once the creation times are
/// far enough apart that the pairs are distinguishable (for coincident times
/// bosonic double occupancy enhances the norm).
pub fn double_pair(params: &SourceParams, t0_first: f64, t0_second: f64) -> Result<StateVector> {
    let first = spdc_pair("a", "b", params, t0_first, Some(ORIGIN_FIRST))?;
    let second = spdc_pair("a", "b", params, t0_second, Some(ORIGIN_SECOND))?;
    Ok(first.tensor(&second))
}

/// Poisson-distributed pair count for one pulse.
pub fn sample_pair_count(pair_mean: f64, rng: &mut impl Rng) -> Result<u64> {
    if !pair_mean.is_finite() || pair_mean < 0.0 {
        return Err(Error::invalid(
            "pair_mean",
            format!("must be finite and >= 0, got {pair_mean}"),
        ));
    }
    if pair_mean == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(pair_mean)
        .map_err(|e| Error::invalid("pair_mean", format!("poisson: {e}")))?;
    Ok(dist.sample(rng) as u64)
}

/// Poisson pmf `e^-mu mu^n / n!`.
pub fn poisson_pmf(mean: f64, n: u32) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let mut log_p = -mean + n as f64 * mean.ln();
    for k in 1..=n {
        log_p -= (k as f64).ln();
    }
    log_p.exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mode_algebra::{state_inner_product, Polarization};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> SourceParams {
        SourceParams::paper_defaults()
    }

    #[test]
    fn singlet_phase_gives_minus_sign() {
        let s = spdc_pair("a", "b", &params(), 0.0, None).unwrap();
        assert_eq!(s.terms().len(), 2);
        let mut hv = None;
        let mut vh = None;
        for t in s.terms() {
            let first_pol = t.photons()[0].mode.pol;
            match first_pol {
                Polarization::H => hv = Some(t.amplitude),
                Polarization::V => vh = Some(t.amplitude),
            }
        }
        let (hv, vh) = (hv.unwrap(), vh.unwrap());
        assert!((hv.re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((vh.re + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(s.is_normalized(1e-12));
    }

    #[test]
    fn zero_phase_gives_plus_sign() {
        let p = SourceParams::new(0.0, 4e-4, 250.0, 0.0).unwrap();
        let s = spdc_pair("a", "b", &p, 0.0, None).unwrap();
        for t in s.terms() {
            assert!(t.amplitude.re > 0.0);
        }
    }

    #[test]
    fn double_pair_has_four_terms() {
        let s = double_pair(&params(), 0.0, 0.0).unwrap();
        assert_eq!(s.terms().len(), 4);
        // distinguishable pairs: plain product of two normalized states
        let s = double_pair(&params(), 0.0, 1e6).unwrap();
        assert!(s.is_normalized(1e-12));
    }

    #[test]
    fn coincident_pairs_show_bosonic_enhancement() {
        // with identical packets the two a-side (and b-side) photons of the
        // HV*HV and VH*VH terms occupy the same mode, so the formal product
        // state picks up double-occupancy factors: <psi|psi> = 3
        let s = double_pair(&params(), 0.0, 0.0).unwrap();
        assert!((s.norm_squared() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn double_pair_equals_tensor_of_pairs() {
        let a = spdc_pair("a", "b", &params(), 0.0, Some(ORIGIN_FIRST)).unwrap();
        let b = spdc_pair("a", "b", &params(), 0.0, Some(ORIGIN_SECOND)).unwrap();
        let expected = a.tensor(&b);
        let got = double_pair(&params(), 0.0, 0.0).unwrap();
        assert_eq!(got, expected);
    }

    #[test]
    fn origin_tags_do_not_change_overlaps() {
        let tagged = double_pair(&params(), 0.0, 0.0).unwrap();
        let untagged = spdc_pair("a", "b", &params(), 0.0, None)
            .unwrap()
            .tensor(&spdc_pair("a", "b", &params(), 0.0, None).unwrap());
        let cross = state_inner_product(&tagged, &untagged);
        let self_ip = state_inner_product(&tagged, &tagged);
        assert!((cross - self_ip).norm() < 1e-10);
    }

    #[test]
    fn pair_count_mean_zero_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            assert_eq!(sample_pair_count(0.0, &mut rng).unwrap(), 0);
        }
        assert!(sample_pair_count(-1.0, &mut rng).is_err());
    }

    #[test]
    fn poisson_pmf_matches_closed_form() {
        let mu: f64 = 4e-4;
        let expected = (-mu).exp() * mu * mu / 2.0;
        assert!((poisson_pmf(mu, 2) - expected).abs() < 1e-18);
        assert!((poisson_pmf(mu, 2) - 8.0e-8).abs() < 1e-9);
    }

    #[test]
    fn empirical_mean_is_statistically_consistent() {
        let mu = 0.3;
        let n = 1_000_000usize;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut sum = 0u64;
        for _ in 0..n {
            sum += sample_pair_count(mu, &mut rng).unwrap();
        }
        let mean = sum as f64 / n as f64;
        let stderr = (mu / n as f64).sqrt();
        assert!(
            (mean - mu).abs() < 3.0 * stderr,
            "mean {mean} vs {mu} (3se = {})",
            3.0 * stderr
        );
    }
}
