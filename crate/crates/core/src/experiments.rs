//! Scripted reproductions of the GHZ measurements: circuit construction, the
//! eight-combination polarization histogram, delay scans of the conditional
//! D3 statistics, the entangled-entanglement check, and physical helper
//! computations (filter coherence time, visibility).

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::detection::{
    fidelity, pattern_probability, postselect, project_out, AnalyzerSetting, DetectionPattern,
};
use crate::error::{Error, Result};
use crate::exec::{indexed_map, indexed_map_seq, mix_seed};
use crate::mode_algebra::{KetTerm, ModeLabel, Photon, StateVector, WavePacket};
use crate::optical_elements::{
    bs_map, ghz_paper_preset, hwp_map, pbs_map, BsConvention, Circuit, DelayStage, HwpConvention,
    Stage,
};
use crate::photon_sources::{double_pair, SourceParams};

/// Speed of light in m/s.
const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Parameters of one GHZ experiment run. `source.packet_sigma` is the
/// coherence sigma of the photons (tau_c / 2), `source.pump_sigma` the
/// emission-time jitter. `noise_w` is the white-noise admixture used only by
/// the histogram; `mc_samples` the number of emission-time draws per delay
/// point.
#[derive(Debug, Clone, PartialEq)]
pub struct GhzParams {
    pub source: SourceParams,
    pub delay_fs: f64,
    pub noise_w: f64,
    pub mc_samples: usize,
    pub seed: u64,
    pub physical_convention: bool,
}

impl GhzParams {
    pub fn new(
        source: SourceParams,
        delay_fs: f64,
        noise_w: f64,
        mc_samples: usize,
        seed: u64,
        physical_convention: bool,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&noise_w) {
            return Err(Error::invalid(
                "noise_w",
                format!("must be in [0, 1], got {noise_w}"),
            ));
        }
        if mc_samples == 0 {
            return Err(Error::invalid("mc_samples", "must be >= 1"));
        }
        if !delay_fs.is_finite() {
            return Err(Error::invalid("delay_fs", "must be finite"));
        }
        Ok(GhzParams {
            source,
            delay_fs,
            noise_w,
            mc_samples,
            seed,
            physical_convention,
        })
    }

    pub fn paper_defaults() -> Self {
        GhzParams {
            source: SourceParams::paper_defaults(),
            delay_fs: 0.0,
            noise_w: 0.0,
            mc_samples: 200,
            seed: 1,
            physical_convention: false,
        }
    }

    /// Same parameters with a different path-a delay.
    pub fn with_delay(&self, delay_fs: f64) -> Self {
        GhzParams {
            delay_fs,
            ..self.clone()
        }
    }
}

/// One point of a delay-scan curve. The two conditional probabilities sum to
/// one; `visibility_contribution` is their signed contrast.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRecord {
    pub delay_fs: f64,
    pub p_plus45: f64,
    pub p_minus45: f64,
    pub visibility_contribution: f64,
}

/// The Fig. 1 apparatus: a delay stage on path a followed by the normative
/// mode map, or an equivalent pbs -> hwp -> bs -> pbs chain when the
/// physical-convention flag is set.
pub fn build_ghz_circuit(params: &GhzParams) -> Circuit {
    let delay = Stage::Delay(DelayStage {
        path: "a".into(),
        delta_fs: params.delay_fs,
    });
    if !params.physical_convention {
        return Circuit::new(vec![delay, Stage::Map(ghz_paper_preset())]);
    }
    // Physical chain. Element phases here are a standard convention choice;
    // the resulting GHZ state differs from the preset by mode phases.
    let pbs1 = pbs_map("a", "T", BsConvention::Physical).expect("distinct ports");
    let hwp = hwp_map(22.5, "a", HwpConvention::Rotation);
    let bs = bs_map("b", "3", BsConvention::Physical).expect("distinct ports");
    let pbs2 = ModeMapChain::final_pbs();
    Circuit::new(vec![
        delay,
        Stage::Map(pbs1),
        Stage::Map(hwp),
        Stage::Map(bs),
        Stage::Map(pbs2),
    ])
}

struct ModeMapChain;

impl ModeMapChain {
    /// Final PBS routing path-a photons towards D2 (transmitted H) / D1
    /// (reflected V) and path-b photons towards D1 / D2.
    fn final_pbs() -> crate::optical_elements::ModeMap {
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        crate::optical_elements::ModeMap::from_entries([
            (ModeLabel::h("a"), vec![(ModeLabel::h("2"), one)]),
            (ModeLabel::v("a"), vec![(ModeLabel::v("1"), i)]),
            (ModeLabel::h("b"), vec![(ModeLabel::h("1"), one)]),
            (ModeLabel::v("b"), vec![(ModeLabel::v("2"), i)]),
        ])
        .expect("distinct inputs")
    }
}

/// Double-pair emission at the given creation times, evolved through the
/// circuit.
pub fn evolve_double_pair(params: &GhzParams, t0_first: f64, t0_second: f64) -> Result<StateVector> {
    let input = double_pair(&params.source, t0_first, t0_second)?;
    Ok(build_ghz_circuit(params).apply(&input))
}

/// Full pipeline: emission, evolution, fourfold post-selection with
/// pass-through detectors. Returns (probability, conditional state).
pub fn postselected_ghz(
    params: &GhzParams,
    t0_first: f64,
    t0_second: f64,
) -> Result<(f64, StateVector)> {
    let evolved = evolve_double_pair(params, t0_first, t0_second)?;
    Ok(postselect(
        &evolved,
        &DetectionPattern::pass_through(&["T", "1", "2", "3"]),
    ))
}

/// The golden three-photon target
/// `(1/sqrt 2) |H>_T (|H1 H2 V3> + |V1 V2 H3>)` with all packets equal.
pub fn golden_ghz_state(packet_sigma: f64) -> Result<StateVector> {
    let w = WavePacket::new(0.0, packet_sigma)?;
    let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    Ok(StateVector::new(vec![
        KetTerm::new(
            amp,
            vec![
                Photon::new(ModeLabel::h("T"), w),
                Photon::new(ModeLabel::h("1"), w),
                Photon::new(ModeLabel::h("2"), w),
                Photon::new(ModeLabel::v("3"), w),
            ],
        ),
        KetTerm::new(
            amp,
            vec![
                Photon::new(ModeLabel::h("T"), w),
                Photon::new(ModeLabel::v("1"), w),
                Photon::new(ModeLabel::v("2"), w),
                Photon::new(ModeLabel::h("3"), w),
            ],
        ),
    ]))
}

/// Probabilities of the eight H/V polarization combinations at detectors 1-3,
/// conditioned on the trigger, mixed with white noise:
/// `p = (1 - w) p_ideal + w / 8`.
#[derive(Debug, Clone)]
pub struct Histogram {
    /// (combination label, probability), in H1H2H3 .. V1V2V3 order.
    pub entries: Vec<(String, f64)>,
}

impl Histogram {
    /// Sum of the two desired combinations over the sum of the six others.
    pub fn desired_undesired_ratio(&self) -> f64 {
        let desired: f64 = self
            .entries
            .iter()
            .filter(|(label, _)| label == "H1H2V3" || label == "V1V2H3")
            .map(|(_, p)| p)
            .sum();
        let undesired: f64 = self
            .entries
            .iter()
            .filter(|(label, _)| label != "H1H2V3" && label != "V1V2H3")
            .map(|(_, p)| p)
            .sum();
        desired / undesired
    }

    /// Mean desired combination over mean undesired combination
    /// (the per-combination reading of the same ratio).
    pub fn per_combination_ratio(&self) -> f64 {
        self.desired_undesired_ratio() * 6.0 / 2.0
    }
}

/// Eight-combination polarization histogram of the post-selected state at the
/// configured delay (pure-state evaluation at the pulse center).
pub fn term_histogram(params: &GhzParams) -> Result<Histogram> {
    let evolved = evolve_double_pair(params, 0.0, 0.0)?;
    // angle from vertical: 90 degrees transmits H, 0 degrees transmits V
    let angle = |is_h: bool| if is_h { 90.0 } else { 0.0 };
    let mut ideal = Vec::with_capacity(8);
    for combo in 0..8u8 {
        let h1 = combo & 4 == 0;
        let h2 = combo & 2 == 0;
        let h3 = combo & 1 == 0;
        let settings = vec![
            AnalyzerSetting::pass("T"),
            AnalyzerSetting::linear("1", angle(h1)),
            AnalyzerSetting::linear("2", angle(h2)),
            AnalyzerSetting::linear("3", angle(h3)),
        ];
        let label = format!(
            "{}1{}2{}3",
            if h1 { "H" } else { "V" },
            if h2 { "H" } else { "V" },
            if h3 { "H" } else { "V" }
        );
        ideal.push((label, pattern_probability(&evolved, &settings)?));
    }
    let total: f64 = ideal.iter().map(|(_, p)| p).sum();
    if total <= 0.0 {
        return Err(Error::UndefinedConditional);
    }
    let w = params.noise_w;
    let entries = ideal
        .into_iter()
        .map(|(label, p)| (label, (1.0 - w) * (p / total) + w / 8.0))
        .collect();
    Ok(Histogram { entries })
}

/// White-noise weight reproducing a given desired:undesired sum ratio,
/// solving `(1 - 0.75 w) / (0.75 w) = ratio`.
pub fn noise_for_ratio(ratio: f64) -> f64 {
    1.0 / (0.75 * (ratio + 1.0))
}

fn scan_point(params: &GhzParams, delay_idx: usize, delay: f64, theta1: f64, theta2: f64) -> Result<ScanRecord> {
    let local = params.with_delay(delay);
    let (p_plus, p_minus) = if params.source.pump_sigma == 0.0 {
        let evolved = evolve_double_pair(&local, 0.0, 0.0)?;
        crate::detection::conditional_d3(&evolved, theta1, theta2)?
    } else {
        let jitter = Normal::new(0.0, params.source.pump_sigma)
            .map_err(|e| Error::invalid("pump_sigma", format!("{e}")))?;
        let mut sum_plus = 0.0;
        let mut sum_minus = 0.0;
        for sample in 0..params.mc_samples {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(
                params.seed,
                delay_idx as u64,
                sample as u64,
            ));
            let t1 = jitter.sample(&mut rng);
            let t2 = jitter.sample(&mut rng);
            let evolved = evolve_double_pair(&local, t1, t2)?;
            let (p, m) = crate::detection::conditional_d3(&evolved, theta1, theta2)?;
            sum_plus += p;
            sum_minus += m;
        }
        (
            sum_plus / params.mc_samples as f64,
            sum_minus / params.mc_samples as f64,
        )
    };
    Ok(ScanRecord {
        delay_fs: delay,
        p_plus45: p_plus,
        p_minus45: p_minus,
        visibility_contribution: p_minus - p_plus,
    })
}

/// Conditional D3 statistics for each delay, averaged over Monte Carlo draws
/// of the two pairs' emission times (independent Gaussians of width
/// `pump_sigma`; a single pure-state evaluation when `pump_sigma` is zero).
/// Delay points run concurrently when the `parallel` feature is enabled;
/// results are identical either way.
pub fn delay_scan(
    params: &GhzParams,
    delays: &[f64],
    theta1_deg: f64,
    theta2_deg: f64,
) -> Result<Vec<ScanRecord>> {
    indexed_map(delays.len(), |i| {
        scan_point(params, i, delays[i], theta1_deg, theta2_deg)
    })
    .into_iter()
    .collect()
}

/// Sequential reference implementation of [`delay_scan`].
pub fn delay_scan_seq(
    params: &GhzParams,
    delays: &[f64],
    theta1_deg: f64,
    theta2_deg: f64,
) -> Result<Vec<ScanRecord>> {
    indexed_map_seq(delays.len(), |i| {
        scan_point(params, i, delays[i], theta1_deg, theta2_deg)
    })
    .into_iter()
    .collect()
}

/// Projects photon 1 of a three-photon GHZ state (trigger already absorbed)
/// onto the analyzer at `theta1_deg`, renormalizes, and returns the reduced
/// two-photon state together with its fidelity against
/// `(1/sqrt 2)(|+45>_2 |+45>_3 - |-45>_2 |-45>_3)`
/// (equivalently `(1/sqrt 2)(|H2 V3> + |V2 H3>)`).
pub fn entangled_entanglement_check(
    state: &StateVector,
    theta1_deg: f64,
) -> Result<(StateVector, f64)> {
    let projected = project_out(state, "1", theta1_deg);
    if projected.norm_squared() <= 1e-30 {
        return Err(Error::UndefinedConditional);
    }
    let conditional = projected.normalized()?;

    // reference packets per path, taken from the conditional state itself
    let mut packet2 = None;
    let mut packet3 = None;
    for p in conditional.terms()[0].photons() {
        match p.mode.path.as_str() {
            "2" => packet2 = Some(p.packet),
            "3" => packet3 = Some(p.packet),
            _ => {}
        }
    }
    let (w2, w3) = match (packet2, packet3) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::invalid(
                "state",
                "expected one photon on each of paths 2 and 3",
            ))
        }
    };
    let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let reference = StateVector::new(vec![
        KetTerm::new(
            amp,
            vec![
                Photon::new(ModeLabel::h("2"), w2),
                Photon::new(ModeLabel::v("3"), w3),
            ],
        ),
        KetTerm::new(
            amp,
            vec![
                Photon::new(ModeLabel::v("2"), w2),
                Photon::new(ModeLabel::h("3"), w3),
            ],
        ),
    ]);
    let f = fidelity(&conditional, &reference)?;
    Ok((conditional, f))
}

/// Filter-limited coherence time `tau_c = lambda^2 / (c * dlambda)`,
/// inputs in nm, result in fs.
pub fn coherence_time_from_filter(lambda_nm: f64, dlambda_nm: f64) -> Result<f64> {
    if !lambda_nm.is_finite() || lambda_nm <= 0.0 {
        return Err(Error::invalid("lambda_nm", "must be > 0"));
    }
    if !dlambda_nm.is_finite() || dlambda_nm <= 0.0 {
        return Err(Error::invalid("dlambda_nm", "must be > 0"));
    }
    let lambda_m = lambda_nm * 1e-9;
    let dlambda_m = dlambda_nm * 1e-9;
    Ok(lambda_m * lambda_m / (SPEED_OF_LIGHT * dlambda_m) * 1e15)
}

/// Two-curve contrast at zero delay,
/// `V = (p_minus45(0) - p_plus45(0)) / (p_minus45(0) + p_plus45(0))`,
/// read from the record closest to zero delay.
pub fn visibility(records: &[ScanRecord]) -> Result<f64> {
    let r0 = records
        .iter()
        .min_by(|a, b| a.delay_fs.abs().total_cmp(&b.delay_fs.abs()))
        .ok_or_else(|| Error::invalid("records", "empty scan"))?;
    let total = r0.p_minus45 + r0.p_plus45;
    if total <= 0.0 {
        return Err(Error::invalid("records", "zero total probability"));
    }
    Ok((r0.p_minus45 - r0.p_plus45) / total)
}

/// Evenly spaced delay grid, inclusive of both endpoints.
pub fn delay_grid(start_fs: f64, stop_fs: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![start_fs];
    }
    let step = (stop_fs - start_fs) / (points - 1) as f64;
    (0..points).map(|i| start_fs + step * i as f64).collect()
}
