//! Polarization analysis and one-photon-per-output post-selection.
//!
//! Analyzer angles are measured from the vertical axis, matching the
//! experiment's reading: 0 degrees transmits V, 90 degrees transmits H, and
//! +/-45 degrees the diagonal states. The transmitted state at angle theta is
//! `sin(theta) |H> + cos(theta) |V>`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mode_algebra::{
    state_inner_product, KetTerm, ModeLabel, Photon, Polarization, StateVector,
};

/// A polarization analyzer in front of one detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Analyzer {
    /// No polarizer; both polarizations accepted.
    PassThrough,
    /// Linear polarizer; angle in degrees from the vertical axis, normalized
    /// to [0, 180).
    Linear { angle_deg: f64 },
}

impl Analyzer {
    pub fn linear(angle_deg: f64) -> Self {
        Analyzer::Linear {
            angle_deg: angle_deg.rem_euclid(180.0),
        }
    }

    /// (H, V) amplitudes of the transmitted state.
    fn transmission(&self) -> Option<(f64, f64)> {
        match self {
            Analyzer::PassThrough => None,
            Analyzer::Linear { angle_deg } => {
                let t = angle_deg.to_radians();
                Some((t.sin(), t.cos()))
            }
        }
    }
}

/// Analyzer placed on one spatial path.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzerSetting {
    pub path: String,
    pub analyzer: Analyzer,
}

impl AnalyzerSetting {
    pub fn pass(path: impl Into<String>) -> Self {
        AnalyzerSetting {
            path: path.into(),
            analyzer: Analyzer::PassThrough,
        }
    }

    pub fn linear(path: impl Into<String>, angle_deg: f64) -> Self {
        AnalyzerSetting {
            path: path.into(),
            analyzer: Analyzer::linear(angle_deg),
        }
    }
}

/// Exactly one photon on each listed path, zero photons elsewhere, with the
/// given analyzer per path.
#[derive(Debug, Clone)]
pub struct DetectionPattern {
    settings: Vec<AnalyzerSetting>,
}

impl DetectionPattern {
    pub fn new(settings: Vec<AnalyzerSetting>) -> Result<Self> {
        for (i, s) in settings.iter().enumerate() {
            if settings[i + 1..].iter().any(|o| o.path == s.path) {
                return Err(Error::invalid(
                    "pattern",
                    format!("path `{}` listed twice", s.path),
                ));
            }
        }
        Ok(DetectionPattern { settings })
    }

    pub fn pass_through(paths: &[&str]) -> Self {
        DetectionPattern {
            settings: paths.iter().map(|p| AnalyzerSetting::pass(*p)).collect(),
        }
    }

    pub fn settings(&self) -> &[AnalyzerSetting] {
        &self.settings
    }
}

/// Unnormalized projection onto the pattern: keeps terms with exactly one
/// photon on each listed path and none elsewhere, then applies each angled
/// analyzer as the projector |chi><chi| on that path's photon (the outgoing
/// photon is expanded back onto H/V).
pub fn project_pattern(s: &StateVector, pattern: &DetectionPattern) -> StateVector {
    let mut out = Vec::new();
    'terms: for term in s.terms() {
        // one photon per listed path, none elsewhere
        let mut seen = vec![false; pattern.settings.len()];
        for photon in term.photons() {
            match pattern
                .settings
                .iter()
                .position(|st| st.path == photon.mode.path)
            {
                Some(i) if !seen[i] => seen[i] = true,
                _ => continue 'terms,
            }
        }
        if !seen.iter().all(|&b| b) {
            continue;
        }
        // apply analyzers photon by photon
        let mut branches: Vec<(Complex64, Vec<Photon>)> =
            vec![(term.amplitude, Vec::with_capacity(term.photons().len()))];
        for photon in term.photons() {
            let setting = pattern
                .settings
                .iter()
                .find(|st| st.path == photon.mode.path)
                .expect("checked above");
            match setting.analyzer.transmission() {
                None => {
                    for (_, photons) in &mut branches {
                        photons.push(photon.clone());
                    }
                }
                Some((h, v)) => {
                    let incoming = match photon.mode.pol {
                        Polarization::H => h,
                        Polarization::V => v,
                    };
                    let mut next = Vec::with_capacity(branches.len() * 2);
                    for (amp, photons) in &branches {
                        for (pol, coeff) in [(Polarization::H, h), (Polarization::V, v)] {
                            if coeff == 0.0 {
                                continue;
                            }
                            let mut ph = photons.clone();
                            ph.push(Photon {
                                mode: ModeLabel::new(photon.mode.path.clone(), pol),
                                packet: photon.packet,
                                origin: photon.origin.clone(),
                            });
                            next.push((amp * incoming * coeff, ph));
                        }
                    }
                    branches = next;
                }
            }
        }
        out.extend(
            branches
                .into_iter()
                .map(|(amp, photons)| KetTerm::new(amp, photons)),
        );
    }
    StateVector::new(out)
}

/// Post-selection: probability of the pattern (squared norm of the projected
/// state, computed with full wavepacket-overlap inner products) and the
/// renormalized conditional state. Zero probability yields `(0, zero state)`.
pub fn postselect(s: &StateVector, pattern: &DetectionPattern) -> (f64, StateVector) {
    let projected = project_pattern(s, pattern);
    let p = projected.norm_squared().max(0.0);
    if p <= 1e-30 {
        return (0.0, StateVector::zero());
    }
    let conditional = projected.scaled(Complex64::new(1.0 / p.sqrt(), 0.0));
    (p, conditional)
}

/// Probability component of [`postselect`] for a list of analyzer settings.
pub fn pattern_probability(s: &StateVector, settings: &[AnalyzerSetting]) -> Result<f64> {
    let pattern = DetectionPattern::new(settings.to_vec())?;
    Ok(postselect(s, &pattern).0)
}

/// Conditional D3 analyzer statistics given the trigger and the D1/D2
/// analyzer angles: normalized `(p_plus45, p_minus45)`.
pub fn conditional_d3(s: &StateVector, theta1_deg: f64, theta2_deg: f64) -> Result<(f64, f64)> {
    let base = |theta3: f64| {
        vec![
            AnalyzerSetting::pass("T"),
            AnalyzerSetting::linear("1", theta1_deg),
            AnalyzerSetting::linear("2", theta2_deg),
            AnalyzerSetting::linear("3", theta3),
        ]
    };
    let p_plus = pattern_probability(s, &base(45.0))?;
    let p_minus = pattern_probability(s, &base(-45.0))?;
    let total = p_plus + p_minus;
    if total <= 1e-30 {
        return Err(Error::UndefinedConditional);
    }
    Ok((p_plus / total, p_minus / total))
}

/// `|<reference|s>|^2` for normalized states.
pub fn fidelity(s: &StateVector, reference: &StateVector) -> Result<f64> {
    const NORM_TOL: f64 = 1e-8;
    if !s.is_normalized(NORM_TOL) {
        return Err(Error::invalid("state", "state is not normalized"));
    }
    if !reference.is_normalized(NORM_TOL) {
        return Err(Error::invalid("reference", "reference is not normalized"));
    }
    Ok(state_inner_product(reference, s).norm_sqr())
}

/// Projects the photon on `path` onto the linear analyzer at `angle_deg` and
/// removes it from each term. Terms without exactly one photon on the path
/// are dropped. Returns the unnormalized reduced state.
pub fn project_out(s: &StateVector, path: &str, angle_deg: f64) -> StateVector {
    let t = angle_deg.to_radians();
    let (h, v) = (t.sin(), t.cos());
    let mut out = Vec::new();
    for term in s.terms() {
        let on_path: Vec<usize> = term
            .photons()
            .iter()
            .enumerate()
            .filter(|(_, p)| p.mode.path == path)
            .map(|(i, _)| i)
            .collect();
        if on_path.len() != 1 {
            continue;
        }
        let idx = on_path[0];
        let coeff = match term.photons()[idx].mode.pol {
            Polarization::H => h,
            Polarization::V => v,
        };
        if coeff == 0.0 {
            continue;
        }
        let photons: Vec<Photon> = term
            .photons()
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != idx)
            .map(|(_, p)| p.clone())
            .collect();
        out.push(KetTerm::new(term.amplitude * coeff, photons));
    }
    StateVector::new(out)
}

/// Removes the single photon on `path` from every term (the photon must be
/// present exactly once per term). Used to drop an already-measured trigger
/// photon that factors out of the state.
pub fn remove_single_photon(s: &StateVector, path: &str) -> Result<StateVector> {
    let mut out = Vec::new();
    for term in s.terms() {
        let on_path: Vec<usize> = term
            .photons()
            .iter()
            .enumerate()
            .filter(|(_, p)| p.mode.path == path)
            .map(|(i, _)| i)
            .collect();
        if on_path.len() != 1 {
            return Err(Error::invalid(
                "path",
                format!("expected exactly one photon on `{path}` in every term"),
            ));
        }
        let idx = on_path[0];
        let photons: Vec<Photon> = term
            .photons()
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != idx)
            .map(|(_, p)| p.clone())
            .collect();
        out.push(KetTerm::new(term.amplitude, photons));
    }
    Ok(StateVector::new(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mode_algebra::WavePacket;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn packet() -> WavePacket {
        WavePacket::new(0.0, 250.0).unwrap()
    }

    /// (1/sqrt 2)(|H1 H2 V3> + |V1 V2 H3>) with identical packets.
    fn ghz_state() -> StateVector {
        let w = packet();
        StateVector::new(vec![
            KetTerm::new(
                re(std::f64::consts::FRAC_1_SQRT_2),
                vec![
                    Photon::new(ModeLabel::h("1"), w),
                    Photon::new(ModeLabel::h("2"), w),
                    Photon::new(ModeLabel::v("3"), w),
                ],
            ),
            KetTerm::new(
                re(std::f64::consts::FRAC_1_SQRT_2),
                vec![
                    Photon::new(ModeLabel::v("1"), w),
                    Photon::new(ModeLabel::v("2"), w),
                    Photon::new(ModeLabel::h("3"), w),
                ],
            ),
        ])
    }

    fn ghz_with_trigger() -> StateVector {
        let trigger = StateVector::new(vec![KetTerm::new(
            re(1.0),
            vec![Photon::new(ModeLabel::h("T"), packet())],
        )]);
        trigger.tensor(&ghz_state())
    }

    #[test]
    fn vacuum_postselects_to_zero() {
        let vacuum = StateVector::new(vec![KetTerm::scalar(re(1.0))]);
        let (p, cond) = postselect(&vacuum, &DetectionPattern::pass_through(&["T", "1"]));
        assert_eq!(p, 0.0);
        assert!(cond.is_zero());
    }

    #[test]
    fn ghz_diagonal_pattern_probabilities() {
        let s = ghz_with_trigger();
        let settings = |t3: f64| {
            vec![
                AnalyzerSetting::pass("T"),
                AnalyzerSetting::linear("1", 45.0),
                AnalyzerSetting::linear("2", -45.0),
                AnalyzerSetting::linear("3", t3),
            ]
        };
        let p_minus = pattern_probability(&s, &settings(-45.0)).unwrap();
        let p_plus = pattern_probability(&s, &settings(45.0)).unwrap();
        assert!((p_minus - 0.25).abs() < 1e-12, "p_minus = {p_minus}");
        assert!(p_plus.abs() < 1e-12, "p_plus = {p_plus}");
    }

    #[test]
    fn d1_at_zero_degrees_shows_no_correlation() {
        let s = ghz_with_trigger();
        let settings = |t3: f64| {
            vec![
                AnalyzerSetting::pass("T"),
                AnalyzerSetting::linear("1", 0.0),
                AnalyzerSetting::linear("2", -45.0),
                AnalyzerSetting::linear("3", t3),
            ]
        };
        let p_minus = pattern_probability(&s, &settings(-45.0)).unwrap();
        let p_plus = pattern_probability(&s, &settings(45.0)).unwrap();
        assert!((p_minus - p_plus).abs() < 1e-12);
    }

    #[test]
    fn conditional_d3_on_ideal_ghz() {
        let s = ghz_with_trigger();
        let (p_plus, p_minus) = conditional_d3(&s, 45.0, -45.0).unwrap();
        assert!(p_plus.abs() < 1e-12);
        assert!((p_minus - 1.0).abs() < 1e-12);

        let (p_plus, p_minus) = conditional_d3(&s, 0.0, -45.0).unwrap();
        assert!((p_plus - 0.5).abs() < 1e-12);
        assert!((p_minus - 0.5).abs() < 1e-12);
    }

    #[test]
    fn analyzer_outcomes_sum_to_pass_through() {
        let s = ghz_with_trigger();
        let with_d3 = |analyzer: Analyzer| {
            let settings = vec![
                AnalyzerSetting::pass("T"),
                AnalyzerSetting::pass("1"),
                AnalyzerSetting::pass("2"),
                AnalyzerSetting {
                    path: "3".into(),
                    analyzer,
                },
            ];
            pattern_probability(&s, &settings).unwrap()
        };
        let total = with_d3(Analyzer::PassThrough);
        let split = with_d3(Analyzer::linear(30.0)) + with_d3(Analyzer::linear(120.0));
        assert!((total - split).abs() < 1e-12);
    }

    #[test]
    fn fidelity_examples() {
        let s = ghz_state();
        assert!((fidelity(&s, &s).unwrap() - 1.0).abs() < 1e-12);

        let w = packet();
        let hhv = StateVector::new(vec![KetTerm::new(
            re(1.0),
            vec![
                Photon::new(ModeLabel::h("1"), w),
                Photon::new(ModeLabel::h("2"), w),
                Photon::new(ModeLabel::v("3"), w),
            ],
        )]);
        let vvh = StateVector::new(vec![KetTerm::new(
            re(1.0),
            vec![
                Photon::new(ModeLabel::v("1"), w),
                Photon::new(ModeLabel::v("2"), w),
                Photon::new(ModeLabel::h("3"), w),
            ],
        )]);
        assert!(fidelity(&hhv, &vvh).unwrap() < 1e-15);

        let unnormalized = hhv.scaled(re(2.0));
        assert!(fidelity(&unnormalized, &vvh).is_err());
    }

    #[test]
    fn postselect_probability_is_phase_invariant() {
        let s = ghz_with_trigger();
        let rotated = s.scaled(Complex64::from_polar(1.0, 1.234));
        let pattern = DetectionPattern::pass_through(&["T", "1", "2", "3"]);
        let (p1, _) = postselect(&s, &pattern);
        let (p2, _) = postselect(&rotated, &pattern);
        assert!((p1 - p2).abs() < 1e-12);
    }

    #[test]
    fn duplicate_pattern_path_is_rejected() {
        assert!(DetectionPattern::new(vec![
            AnalyzerSetting::pass("1"),
            AnalyzerSetting::linear("1", 45.0),
        ])
        .is_err());
    }

    #[test]
    fn project_out_at_plus45_entangles_photons_2_and_3() {
        let reduced = project_out(&ghz_state(), "1", 45.0)
            .normalized()
            .unwrap();
        // (1/sqrt 2)(|H2 V3> + |V2 H3>)
        assert_eq!(reduced.terms().len(), 2);
        for t in reduced.terms() {
            assert!((t.amplitude.norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        }
    }

    #[test]
    fn remove_single_photon_strips_trigger() {
        let s = ghz_with_trigger();
        let stripped = remove_single_photon(&s, "T").unwrap();
        assert_eq!(stripped, ghz_state());
        assert!(remove_single_photon(&stripped, "T").is_err());
    }
}
