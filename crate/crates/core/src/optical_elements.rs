//! Linear transformations of photon creation operators: beamsplitters,
//! polarizing beamsplitters, wave plates, delay stages, and the normative
//! mode map used by the GHZ experiment.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mode_algebra::{KetTerm, ModeLabel, Photon, Polarization, StateVector};

const ISOMETRY_TOL: f64 = 1e-12;

/// A linear substitution rule on creation operators: each declared input mode
/// maps to a list of (output mode, amplitude) pairs. Undeclared modes pass
/// through unchanged.
#[derive(Debug, Clone, Default)]
pub struct ModeMap {
    entries: BTreeMap<ModeLabel, Vec<(ModeLabel, Complex64)>>,
}

impl ModeMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(
        entries: impl IntoIterator<Item = (ModeLabel, Vec<(ModeLabel, Complex64)>)>,
    ) -> Result<Self> {
        let mut map = ModeMap::new();
        for (input, outputs) in entries {
            map.insert(input, outputs)?;
        }
        Ok(map)
    }

    pub fn insert(
        &mut self,
        input: ModeLabel,
        outputs: Vec<(ModeLabel, Complex64)>,
    ) -> Result<()> {
        if self.entries.contains_key(&input) {
            return Err(Error::invalid(
                "mode_map",
                format!("input mode {input} declared twice"),
            ));
        }
        self.entries.insert(input, outputs);
        Ok(())
    }

    pub fn declared_inputs(&self) -> impl Iterator<Item = &ModeLabel> {
        self.entries.keys()
    }

    pub fn output_modes(&self) -> BTreeSet<ModeLabel> {
        self.entries
            .values()
            .flatten()
            .map(|(m, _)| m.clone())
            .collect()
    }

    pub fn outputs_for(&self, input: &ModeLabel) -> Option<&[(ModeLabel, Complex64)]> {
        self.entries.get(input).map(|v| v.as_slice())
    }

    /// Substitutes every photon's creation operator by its image under the
    /// map, expands the product, and canonicalizes. Packets and origin tags
    /// are carried through unchanged.
    pub fn apply(&self, s: &StateVector) -> StateVector {
        let mut out_terms = Vec::new();
        for term in s.terms() {
            let mut branches: Vec<(Complex64, Vec<Photon>)> =
                vec![(term.amplitude, Vec::with_capacity(term.photons().len()))];
            for photon in term.photons() {
                match self.entries.get(&photon.mode) {
                    Some(outputs) => {
                        let mut next = Vec::with_capacity(branches.len() * outputs.len());
                        for (amp, photons) in &branches {
                            for (mode, coeff) in outputs {
                                let mut ph = photons.clone();
                                ph.push(Photon {
                                    mode: mode.clone(),
                                    packet: photon.packet,
                                    origin: photon.origin.clone(),
                                });
                                next.push((amp * coeff, ph));
                            }
                        }
                        branches = next;
                    }
                    None => {
                        for (_, photons) in &mut branches {
                            photons.push(photon.clone());
                        }
                    }
                }
            }
            out_terms.extend(
                branches
                    .into_iter()
                    .map(|(amp, photons)| KetTerm::new(amp, photons)),
            );
        }
        StateVector::new(out_terms)
    }

    /// True iff the matrix restricted to declared inputs has orthonormal
    /// columns within 1e-12. The report lists offending column pairs.
    pub fn check_isometry(&self) -> IsometryReport {
        let inputs: Vec<&ModeLabel> = self.entries.keys().collect();
        let mut violations = Vec::new();
        for (i, in_a) in inputs.iter().enumerate() {
            for in_b in inputs.iter().skip(i) {
                let mut gram = Complex64::new(0.0, 0.0);
                let col_a: BTreeMap<&ModeLabel, Complex64> = self.entries[*in_a]
                    .iter()
                    .map(|(m, c)| (m, *c))
                    .fold(BTreeMap::new(), |mut acc, (m, c)| {
                        *acc.entry(m).or_insert(Complex64::new(0.0, 0.0)) += c;
                        acc
                    });
                for (m, c) in &self.entries[*in_b] {
                    if let Some(a) = col_a.get(m) {
                        gram += a.conj() * c;
                    }
                }
                let expected = if in_a == in_b { 1.0 } else { 0.0 };
                let dev = (gram - Complex64::new(expected, 0.0)).norm();
                if dev > ISOMETRY_TOL {
                    violations.push(((*in_a).clone(), (**in_b).clone(), dev));
                }
            }
        }
        IsometryReport {
            ok: violations.is_empty(),
            violations,
        }
    }
}

/// Result of [`ModeMap::check_isometry`]: offending (input, input, deviation)
/// column pairs, diagonal entries included for norm violations.
#[derive(Debug, Clone)]
pub struct IsometryReport {
    pub ok: bool,
    pub violations: Vec<(ModeLabel, ModeLabel, f64)>,
}

/// A time shift applied to every photon on one spatial path.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayStage {
    pub path: String,
    pub delta_fs: f64,
}

/// Shifts the packet center of every photon on `d.path` by `d.delta_fs`.
pub fn apply_delay(s: &StateVector, d: &DelayStage) -> StateVector {
    if d.delta_fs == 0.0 {
        return s.clone();
    }
    StateVector::new(
        s.terms()
            .iter()
            .map(|t| {
                KetTerm::new(
                    t.amplitude,
                    t.photons()
                        .iter()
                        .map(|p| {
                            if p.mode.path == d.path {
                                Photon {
                                    mode: p.mode.clone(),
                                    packet: p.packet.shifted(d.delta_fs),
                                    origin: p.origin.clone(),
                                }
                            } else {
                                p.clone()
                            }
                        })
                        .collect(),
                )
            })
            .collect(),
    )
}

/// One stage of an optical circuit.
#[derive(Debug, Clone)]
pub enum Stage {
    Map(ModeMap),
    Delay(DelayStage),
}

/// An ordered sequence of mode maps and delay stages.
#[derive(Debug, Clone, Default)]
pub struct Circuit {
    pub stages: Vec<Stage>,
}

impl Circuit {
    pub fn new(stages: Vec<Stage>) -> Self {
        Circuit { stages }
    }

    pub fn apply(&self, s: &StateVector) -> StateVector {
        let mut state = s.clone();
        for stage in &self.stages {
            state = match stage {
                Stage::Map(m) => m.apply(&state),
                Stage::Delay(d) => apply_delay(&state, d),
            };
        }
        state
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// The normative mode map of the GHZ apparatus. All element phase conventions
/// are absorbed into four substitution rules:
///
/// ```text
/// H_a -> H_T
/// V_b -> (V_2 + V_3) / sqrt(2)
/// V_a -> (V_1 + H_2) / sqrt(2)
/// H_b -> (H_1 + H_3) / sqrt(2)
/// ```
pub fn ghz_paper_preset() -> ModeMap {
    let s = re(std::f64::consts::FRAC_1_SQRT_2);
    ModeMap::from_entries([
        (ModeLabel::h("a"), vec![(ModeLabel::h("T"), re(1.0))]),
        (
            ModeLabel::v("b"),
            vec![(ModeLabel::v("2"), s), (ModeLabel::v("3"), s)],
        ),
        (
            ModeLabel::v("a"),
            vec![(ModeLabel::v("1"), s), (ModeLabel::h("2"), s)],
        ),
        (
            ModeLabel::h("b"),
            vec![(ModeLabel::h("1"), s), (ModeLabel::h("3"), s)],
        ),
    ])
    .expect("preset inputs are distinct")
}

/// Half-wave plate sign convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HwpConvention {
    /// Standard Jones matrix: H -> cos2t H + sin2t V, V -> sin2t H - cos2t V.
    Jones,
    /// Rotation form matching the paper's effective signs:
    /// H -> cos2t H - sin2t V, V -> sin2t H + cos2t V.
    Rotation,
}

/// Half-wave plate at angle `theta_deg` acting on both polarizations of one
/// spatial path.
pub fn hwp_map(theta_deg: f64, path: &str, convention: HwpConvention) -> ModeMap {
    let t2 = 2.0 * theta_deg.to_radians();
    let (c2, s2) = (t2.cos(), t2.sin());
    let h = ModeLabel::h(path);
    let v = ModeLabel::v(path);
    let (h_out, v_out) = match convention {
        HwpConvention::Jones => (
            vec![(h.clone(), re(c2)), (v.clone(), re(s2))],
            vec![(h.clone(), re(s2)), (v.clone(), re(-c2))],
        ),
        HwpConvention::Rotation => (
            vec![(h.clone(), re(c2)), (v.clone(), re(-s2))],
            vec![(h.clone(), re(s2)), (v.clone(), re(c2))],
        ),
    };
    ModeMap::from_entries([(h, h_out), (v, v_out)]).expect("two distinct inputs")
}

/// Beamsplitter / PBS phase convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsConvention {
    /// Real amplitudes matching the signs implicit in the GHZ preset.
    Paper,
    /// Unitary with imaginary reflection: transmit 1/sqrt(2), reflect i/sqrt(2).
    Physical,
}

/// 50/50 polarization-independent beamsplitter mixing two ports.
pub fn bs_map(port_a: &str, port_b: &str, convention: BsConvention) -> Result<ModeMap> {
    if port_a == port_b {
        return Err(Error::invalid("bs_map", "port labels must be distinct"));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (t, r) = match convention {
        BsConvention::Paper => (re(s), re(s)),
        BsConvention::Physical => (re(s), Complex64::new(0.0, s)),
    };
    let mut map = ModeMap::new();
    for pol in [Polarization::H, Polarization::V] {
        let a = ModeLabel::new(port_a, pol);
        let b = ModeLabel::new(port_b, pol);
        // second-port sign keeps the paper-convention map unitary
        let r2 = match convention {
            BsConvention::Paper => re(-s),
            BsConvention::Physical => r,
        };
        map.insert(a.clone(), vec![(a.clone(), t), (b.clone(), r)])?;
        map.insert(b.clone(), vec![(a, r2), (b, t)])?;
    }
    Ok(map)
}

/// Polarizing beamsplitter on two ports: H is transmitted to the opposite
/// port's output arm, V is reflected back into its own output arm with the
/// convention's reflection phase.
pub fn pbs_map(port_a: &str, port_b: &str, convention: BsConvention) -> Result<ModeMap> {
    if port_a == port_b {
        return Err(Error::invalid("pbs_map", "port labels must be distinct"));
    }
    let r = match convention {
        BsConvention::Paper => re(1.0),
        BsConvention::Physical => Complex64::new(0.0, 1.0),
    };
    ModeMap::from_entries([
        (
            ModeLabel::h(port_a),
            vec![(ModeLabel::h(port_b), re(1.0))],
        ),
        (
            ModeLabel::h(port_b),
            vec![(ModeLabel::h(port_a), re(1.0))],
        ),
        (ModeLabel::v(port_a), vec![(ModeLabel::v(port_a), r)]),
        (ModeLabel::v(port_b), vec![(ModeLabel::v(port_b), r)]),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mode_algebra::{state_inner_product, WavePacket};

    fn packet() -> WavePacket {
        WavePacket::new(0.0, 250.0).unwrap()
    }

    fn single(mode: ModeLabel) -> StateVector {
        StateVector::new(vec![KetTerm::new(re(1.0), vec![Photon::new(mode, packet())])])
    }

    #[test]
    fn preset_maps_ha_to_ht() {
        let out = ghz_paper_preset().apply(&single(ModeLabel::h("a")));
        assert_eq!(out.terms().len(), 1);
        assert_eq!(out.terms()[0].photons()[0].mode, ModeLabel::h("T"));
        assert!((out.terms()[0].amplitude - re(1.0)).norm() < 1e-15);
    }

    #[test]
    fn preset_maps_va_to_v1_plus_h2() {
        let out = ghz_paper_preset().apply(&single(ModeLabel::v("a")));
        assert_eq!(out.terms().len(), 2);
        let modes: Vec<_> = out
            .terms()
            .iter()
            .map(|t| t.photons()[0].mode.clone())
            .collect();
        assert!(modes.contains(&ModeLabel::v("1")));
        assert!(modes.contains(&ModeLabel::h("2")));
        for t in out.terms() {
            assert!((t.amplitude - re(std::f64::consts::FRAC_1_SQRT_2)).norm() < 1e-15);
        }
    }

    #[test]
    fn preset_expands_hb_vb_product_into_four_terms() {
        // |H>_b |V>_b -> (1/2)(H1 + H3)(V2 + V3)
        let input = StateVector::new(vec![KetTerm::new(
            re(1.0),
            vec![
                Photon::new(ModeLabel::h("b"), packet()),
                Photon::new(ModeLabel::v("b"), packet()),
            ],
        )]);
        let out = ghz_paper_preset().apply(&input);
        assert_eq!(out.terms().len(), 4);
        for t in out.terms() {
            assert!((t.amplitude - re(0.5)).norm() < 1e-15);
        }
    }

    #[test]
    fn preset_declared_inputs_and_outputs() {
        let preset = ghz_paper_preset();
        let inputs: Vec<_> = preset.declared_inputs().cloned().collect();
        assert_eq!(
            inputs,
            vec![
                ModeLabel::v("a"),
                ModeLabel::h("a"),
                ModeLabel::v("b"),
                ModeLabel::h("b"),
            ]
            .into_iter()
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect::<Vec<_>>()
        );
        let outputs = preset.output_modes();
        let expected: BTreeSet<ModeLabel> = [
            ModeLabel::h("T"),
            ModeLabel::h("1"),
            ModeLabel::v("1"),
            ModeLabel::h("2"),
            ModeLabel::v("2"),
            ModeLabel::h("3"),
            ModeLabel::v("3"),
        ]
        .into_iter()
        .collect();
        assert_eq!(outputs, expected);
        assert!(preset.check_isometry().ok);
    }

    #[test]
    fn hwp_examples() {
        // theta = 0, jones: H -> H, V -> -V
        let m = hwp_map(0.0, "x", HwpConvention::Jones);
        let out = m.apply(&single(ModeLabel::v("x")));
        assert_eq!(out.terms().len(), 1);
        assert!((out.terms()[0].amplitude - re(-1.0)).norm() < 1e-15);

        // theta = 22.5 rotation: V -> (H + V)/sqrt(2)
        let m = hwp_map(22.5, "x", HwpConvention::Rotation);
        let out = m.apply(&single(ModeLabel::v("x")));
        assert_eq!(out.terms().len(), 2);
        for t in out.terms() {
            assert!((t.amplitude - re(std::f64::consts::FRAC_1_SQRT_2)).norm() < 1e-12);
        }

        // theta = 45 jones: H -> V, V -> H
        let m = hwp_map(45.0, "x", HwpConvention::Jones);
        let out = m.apply(&single(ModeLabel::h("x")));
        assert_eq!(out.terms().len(), 1);
        assert_eq!(out.terms()[0].photons()[0].mode, ModeLabel::v("x"));
    }

    #[test]
    fn physical_bs_single_photon_splits() {
        let m = bs_map("x", "y", BsConvention::Physical).unwrap();
        let out = m.apply(&single(ModeLabel::h("x")));
        assert_eq!(out.terms().len(), 2);
        for t in out.terms() {
            let amp = t.amplitude;
            if t.photons()[0].mode == ModeLabel::h("x") {
                assert!((amp - re(std::f64::consts::FRAC_1_SQRT_2)).norm() < 1e-15);
            } else {
                assert!((amp - Complex64::new(0.0, std::f64::consts::FRAC_1_SQRT_2)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn physical_bs_bunches_identical_photons() {
        // Hong-Ou-Mandel: coincidence amplitude vanishes.
        let m = bs_map("x", "y", BsConvention::Physical).unwrap();
        let input = StateVector::new(vec![KetTerm::new(
            re(1.0),
            vec![
                Photon::new(ModeLabel::h("x"), packet()),
                Photon::new(ModeLabel::h("y"), packet()),
            ],
        )]);
        let out = m.apply(&input);
        for t in out.terms() {
            let paths: Vec<&str> = t.photons().iter().map(|p| p.mode.path.as_str()).collect();
            assert_eq!(paths[0], paths[1], "coincidence term survived: {t:?}");
        }
    }

    #[test]
    fn paper_pbs_routes_h_across_and_reflects_v() {
        let m = pbs_map("a", "T", BsConvention::Paper).unwrap();
        let out = m.apply(&single(ModeLabel::h("a")));
        assert_eq!(out.terms()[0].photons()[0].mode, ModeLabel::h("T"));
        let out = m.apply(&single(ModeLabel::v("a")));
        assert_eq!(out.terms()[0].photons()[0].mode, ModeLabel::v("a"));
    }

    #[test]
    fn bs_rejects_duplicate_ports() {
        assert!(bs_map("x", "x", BsConvention::Physical).is_err());
        assert!(pbs_map("x", "x", BsConvention::Paper).is_err());
    }

    #[test]
    fn isometry_checks() {
        assert!(bs_map("x", "y", BsConvention::Physical).unwrap().check_isometry().ok);
        assert!(bs_map("x", "y", BsConvention::Paper).unwrap().check_isometry().ok);
        assert!(pbs_map("x", "y", BsConvention::Physical).unwrap().check_isometry().ok);
        assert!(hwp_map(17.0, "x", HwpConvention::Jones).check_isometry().ok);
        assert!(ghz_paper_preset().check_isometry().ok);

        // a projector is not isometric
        let proj = ModeMap::from_entries([(
            ModeLabel::v("x"),
            vec![(ModeLabel::v("x"), re(0.5))],
        )])
        .unwrap();
        let report = proj.check_isometry();
        assert!(!report.ok);
        assert_eq!(report.violations.len(), 1);
    }

    #[test]
    fn delay_acts_selectively_and_inverts() {
        let input = StateVector::new(vec![KetTerm::new(
            re(1.0),
            vec![
                Photon::new(ModeLabel::h("a"), packet()),
                Photon::new(ModeLabel::h("b"), packet()),
            ],
        )]);
        let d = DelayStage {
            path: "a".into(),
            delta_fs: 300.0,
        };
        let shifted = apply_delay(&input, &d);
        for p in shifted.terms()[0].photons() {
            let expected = if p.mode.path == "a" { 300.0 } else { 0.0 };
            assert_eq!(p.packet.center(), expected);
        }
        let back = apply_delay(
            &shifted,
            &DelayStage {
                path: "a".into(),
                delta_fs: -300.0,
            },
        );
        assert_eq!(back, input);
        // zero delay is the identity
        assert_eq!(
            apply_delay(&input, &DelayStage { path: "a".into(), delta_fs: 0.0 }),
            input
        );
    }

    #[test]
    fn isometric_map_preserves_norm() {
        let input = StateVector::new(vec![
            KetTerm::new(
                re(0.6),
                vec![
                    Photon::new(ModeLabel::h("a"), packet()),
                    Photon::new(ModeLabel::v("b"), packet()),
                ],
            ),
            KetTerm::new(
                Complex64::new(0.0, 0.8),
                vec![
                    Photon::new(ModeLabel::v("a"), packet()),
                    Photon::new(ModeLabel::h("b"), packet()),
                ],
            ),
        ]);
        let before = state_inner_product(&input, &input).re;
        let out = ghz_paper_preset().apply(&input);
        let after = state_inner_product(&out, &out).re;
        assert!((before - after).abs() < 1e-12);
    }
}
