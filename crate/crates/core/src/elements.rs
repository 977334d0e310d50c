//! Jones-calculus models of the optical components and their action on states.
//!
//! Phase conventions: wave plates use the forms
//! `HWP(a) = [[cos 2a, sin 2a], [sin 2a, -cos 2a]]` and
//! `QWP(a) = R(a) diag(1, i) R(-a)`, which keep the (H,H) entry real and
//! non-negative at zero angle. The switch matrix is `R(theta) diag(1, e^{i dphi}) R(-theta)`
//! with no extra global phase, so the ideal switch is exactly the H<->V swap.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{CoarseOffset, ModeLabel, PhotonicState, Polarization, TimeGrid};

/// 2x2 complex matrix acting on (H, V) amplitudes, indexed `[out][in]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesMatrix(pub [[Complex64; 2]; 2]);

impl JonesMatrix {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        JonesMatrix([[one, zero], [zero, one]])
    }

    pub fn diag(a: Complex64, b: Complex64) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        JonesMatrix([[a, zero], [zero, b]])
    }

    /// Real rotation by `angle`.
    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        JonesMatrix([
            [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
            [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
        ])
    }

    pub fn entry(&self, out: Polarization, input: Polarization) -> Complex64 {
        self.0[out.index()][input.index()]
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        JonesMatrix([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let m = &self.0;
        JonesMatrix([[m[0][0] * c, m[0][1] * c], [m[1][0] * c, m[1][1] * c]])
    }

    /// Max entry deviation of `M^dagger M` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let p = self.adjoint() * *self;
        let id = JonesMatrix::identity();
        (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| (p.0[i][j] - id.0[i][j]).norm())
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }
}

impl Mul for JonesMatrix {
    type Output = JonesMatrix;

    fn mul(self, rhs: JonesMatrix) -> JonesMatrix {
        let a = &self.0;
        let b = &rhs.0;
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        JonesMatrix(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlateKind {
    Half,
    Quarter,
}

pub fn waveplate_jones(kind: PlateKind, angle: f64) -> JonesMatrix {
    match kind {
        PlateKind::Half => {
            let (s, c) = (2.0 * angle).sin_cos();
            JonesMatrix([
                [Complex64::new(c, 0.0), Complex64::new(s, 0.0)],
                [Complex64::new(s, 0.0), Complex64::new(-c, 0.0)],
            ])
        }
        PlateKind::Quarter => {
            let retarder = JonesMatrix::diag(Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0));
            JonesMatrix::rotation(angle) * retarder * JonesMatrix::rotation(-angle)
        }
    }
}

/// Ultrafast polarization switch: the pump-aligned axis (at `theta` from H)
/// picks up the nonlinear phase `delta_phi` relative to the orthogonal axis.
pub fn ups_jones(theta: f64, delta_phi: f64) -> JonesMatrix {
    let retarder = JonesMatrix::diag(Complex64::new(1.0, 0.0), Complex64::from_polar(1.0, delta_phi));
    JonesMatrix::rotation(theta) * retarder * JonesMatrix::rotation(-theta)
}

/// Closed-form H->V switching efficiency, `sin^2(2 theta) sin^2(delta_phi / 2)`.
pub fn switching_efficiency(theta: f64, delta_phi: f64) -> f64 {
    (2.0 * theta).sin().powi(2) * (delta_phi / 2.0).sin().powi(2)
}

/// Cross-phase-modulation phase shift `8 pi n2 L_eff I_pump / (3 lambda_signal)`.
///
/// Units must be consistent: with `n2` in m^2/W, `l_eff` and `lambda_signal`
/// in metres and `i_pump` in W/m^2 the result is in radians.
pub fn nonlinear_phase_shift(n2: f64, l_eff: f64, i_pump: f64, lambda_signal: f64) -> f64 {
    8.0 * PI * n2 * l_eff * i_pump / (3.0 * lambda_signal)
}

/// One optical component of a preparation or measurement apparatus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Element {
    Waveplate {
        plate: PlateKind,
        angle: f64,
    },
    PolarizingSplitter {
        kept: Polarization,
    },
    /// Birefringent crystal: modes of `delayed` move `shift_bins` fine bins
    /// down, catching up with the earlier pulses of the other polarization.
    BirefringentDelay {
        shift_bins: u32,
        delayed: Polarization,
    },
    /// Pump-driven switch acting on the listed fine bins. With `coarse_offset`
    /// set, only the arm at that offset is pumped.
    UltrafastSwitch {
        targets: BTreeSet<i32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        coarse_offset: Option<CoarseOffset>,
        theta: f64,
        delta_phi: f64,
        #[serde(default)]
        extra_phase: f64,
    },
    PolarizationTimeDelay {
        offset: CoarseOffset,
        delayed: Polarization,
    },
    Attenuator {
        transmission: f64,
    },
    /// Phase `phases[b]` on fine bin `b`; bins beyond the list are untouched.
    PhaseCorrector {
        phases: Vec<f64>,
    },
}

impl Element {
    pub fn half_wave(angle: f64) -> Self {
        Element::Waveplate {
            plate: PlateKind::Half,
            angle,
        }
    }

    pub fn is_lossless(&self) -> bool {
        match self {
            Element::PolarizingSplitter { .. } => false,
            Element::Attenuator { transmission } => *transmission == 1.0,
            _ => true,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Element::Waveplate { .. } => "waveplate",
            Element::PolarizingSplitter { .. } => "polarizing_splitter",
            Element::BirefringentDelay { .. } => "birefringent_delay",
            Element::UltrafastSwitch { .. } => "ultrafast_switch",
            Element::PolarizationTimeDelay { .. } => "polarization_time_delay",
            Element::Attenuator { .. } => "attenuator",
            Element::PhaseCorrector { .. } => "phase_corrector",
        }
    }

    pub fn validate(&self, grid: &TimeGrid) -> Result<()> {
        match self {
            Element::Waveplate { angle, .. } => finite("waveplate_angle", *angle),
            Element::BirefringentDelay { shift_bins, .. } => {
                if *shift_bins == 0 {
                    return Err(Error::Domain {
                        name: "shift_bins",
                        value: 0.0,
                        domain: "[1, inf)",
                    });
                }
                Ok(())
            }
            Element::UltrafastSwitch {
                targets,
                coarse_offset,
                theta,
                delta_phi,
                extra_phase,
            } => {
                if !(0.0..=PI / 2.0).contains(theta) {
                    return Err(Error::Domain {
                        name: "theta",
                        value: *theta,
                        domain: "[0, pi/2]",
                    });
                }
                if !(0.0..2.0 * PI).contains(delta_phi) {
                    return Err(Error::Domain {
                        name: "delta_phi",
                        value: *delta_phi,
                        domain: "[0, 2 pi)",
                    });
                }
                finite("extra_phase", *extra_phase)?;
                if let Some(&bad) = targets
                    .iter()
                    .find(|&&b| b < 0 || b as usize >= grid.dimension)
                {
                    return Err(Error::InvalidMode(ModeLabel::new(
                        bad,
                        coarse_offset.unwrap_or_default(),
                        Polarization::H,
                    )));
                }
                Ok(())
            }
            Element::PolarizationTimeDelay { offset, .. } => {
                if offset.0 < 0 {
                    return Err(Error::Domain {
                        name: "time_delay_offset_ps",
                        value: offset.0 as f64,
                        domain: "[0, inf)",
                    });
                }
                Ok(())
            }
            Element::Attenuator { transmission } => {
                if !(0.0..=1.0).contains(transmission) {
                    return Err(Error::Domain {
                        name: "transmission",
                        value: *transmission,
                        domain: "[0, 1]",
                    });
                }
                Ok(())
            }
            Element::PhaseCorrector { phases } => {
                phases.iter().try_for_each(|p| finite("phase", *p))
            }
            Element::PolarizingSplitter { .. } => Ok(()),
        }
    }
}

fn finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            domain: "finite",
        })
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Waveplate { plate, angle } => {
                write!(f, "{:?}-wave plate @ {:.2} deg", plate, angle.to_degrees())
            }
            Element::PolarizingSplitter { kept } => write!(f, "PBS keeping {kept}"),
            Element::BirefringentDelay {
                shift_bins,
                delayed,
            } => write!(f, "birefringent delay {delayed} by {shift_bins} bins"),
            Element::UltrafastSwitch {
                targets,
                coarse_offset,
                ..
            } => match coarse_offset {
                Some(c) => write!(f, "switch on bins {targets:?} at {c}"),
                None => write!(f, "switch on bins {targets:?}"),
            },
            Element::PolarizationTimeDelay { offset, delayed } => {
                write!(f, "time delay {delayed} by {offset}")
            }
            Element::Attenuator { transmission } => write!(f, "attenuator T={transmission}"),
            Element::PhaseCorrector { phases } => write!(f, "phase corrector {phases:?}"),
        }
    }
}

/// Groups amplitudes by (fine bin, coarse offset) into (H, V) pairs.
fn polarization_pairs(s: &PhotonicState) -> Vec<((i32, CoarseOffset), [Complex64; 2])> {
    let mut pairs: Vec<((i32, CoarseOffset), [Complex64; 2])> = Vec::new();
    // Iteration is ordered by (fine, coarse, pol), so partners are adjacent.
    for (m, a) in s.iter() {
        let key = (m.fine_bin, m.coarse_offset);
        match pairs.last_mut() {
            Some((k, v)) if *k == key => v[m.pol.index()] = *a,
            _ => {
                let mut v = [Complex64::new(0.0, 0.0); 2];
                v[m.pol.index()] = *a;
                pairs.push((key, v));
            }
        }
    }
    pairs
}

fn apply_jones_where<F>(s: &PhotonicState, mut jones_for: F) -> PhotonicState
where
    F: FnMut(i32, CoarseOffset) -> Option<JonesMatrix>,
{
    let mut out = PhotonicState::vacuum(s.grid());
    for ((fine, coarse), v) in polarization_pairs(s) {
        let w = match jones_for(fine, coarse) {
            Some(j) => j.apply(v),
            None => v,
        };
        for pol in Polarization::BOTH {
            out.accumulate(ModeLabel::new(fine, coarse, pol), w[pol.index()]);
        }
    }
    out.prune();
    out
}

fn relabel<F>(s: &PhotonicState, element: &Element, mut map: F) -> Result<PhotonicState>
where
    F: FnMut(ModeLabel) -> ModeLabel,
{
    let grid = s.grid();
    let mut out = PhotonicState::vacuum(grid);
    for (m, a) in s.iter() {
        let target = map(*m);
        if !grid.is_routable(&target) {
            return Err(Error::InvalidRouting {
                element: element.to_string(),
                mode: target,
            });
        }
        out.accumulate(target, *a);
    }
    out.prune();
    Ok(out)
}

pub fn apply_element(s: &PhotonicState, element: &Element) -> Result<PhotonicState> {
    let grid = s.grid();
    element.validate(grid)?;
    match element {
        Element::Waveplate { plate, angle } => {
            let j = waveplate_jones(*plate, *angle);
            Ok(apply_jones_where(s, |_, _| Some(j)))
        }
        Element::UltrafastSwitch {
            targets,
            coarse_offset,
            theta,
            delta_phi,
            extra_phase,
        } => {
            let j = ups_jones(*theta, *delta_phi).scale(Complex64::from_polar(1.0, *extra_phase));
            Ok(apply_jones_where(s, |fine, coarse| {
                let arm_matches = coarse_offset.is_none_or(|c| c == coarse);
                (arm_matches && targets.contains(&fine)).then_some(j)
            }))
        }
        Element::PolarizingSplitter { kept } => {
            let mut out = PhotonicState::vacuum(grid);
            for (m, a) in s.iter().filter(|(m, _)| m.pol == *kept) {
                out.accumulate(*m, *a);
            }
            Ok(out)
        }
        Element::BirefringentDelay {
            shift_bins,
            delayed,
        } => relabel(s, element, |m| {
            if m.pol == *delayed {
                ModeLabel {
                    fine_bin: m.fine_bin - *shift_bins as i32,
                    ..m
                }
            } else {
                m
            }
        }),
        Element::PolarizationTimeDelay { offset, delayed } => relabel(s, element, |m| {
            if m.pol == *delayed {
                ModeLabel {
                    coarse_offset: m.coarse_offset + *offset,
                    ..m
                }
            } else {
                m
            }
        }),
        Element::Attenuator { transmission } => {
            Ok(s.scaled(Complex64::new(transmission.sqrt(), 0.0)))
        }
        Element::PhaseCorrector { phases } => {
            let mut out = PhotonicState::vacuum(grid);
            for (m, a) in s.iter() {
                let phase = usize::try_from(m.fine_bin)
                    .ok()
                    .and_then(|b| phases.get(b))
                    .copied()
                    .unwrap_or(0.0);
                out.accumulate(*m, a * Complex64::from_polar(1.0, phase));
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::make_basis_state;
    use std::f64::consts::FRAC_PI_4;

    const EPS: f64 = 1e-12;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn grid() -> TimeGrid {
        TimeGrid::new(2.25, 4, vec![CoarseOffset(2600), CoarseOffset(5600)]).unwrap()
    }

    fn close(a: [Complex64; 2], b: [Complex64; 2]) -> bool {
        (a[0] - b[0]).norm() < EPS && (a[1] - b[1]).norm() < EPS
    }

    #[test]
    fn half_wave_plate_forms() {
        let h = [c(1.0, 0.0), c(0.0, 0.0)];
        let v = [c(0.0, 0.0), c(1.0, 0.0)];
        let hwp0 = waveplate_jones(PlateKind::Half, 0.0);
        assert!(close(hwp0.apply(h), h));
        assert!(close(hwp0.apply(v), [c(0.0, 0.0), c(-1.0, 0.0)]));
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let d = waveplate_jones(PlateKind::Half, PI / 8.0).apply(h);
        assert!(close(d, [c(r, 0.0), c(r, 0.0)]));
        assert!(close(waveplate_jones(PlateKind::Half, FRAC_PI_4).apply(h), v));
    }

    #[test]
    fn quarter_wave_plate_makes_circular_light() {
        let h = [c(1.0, 0.0), c(0.0, 0.0)];
        let q = waveplate_jones(PlateKind::Quarter, FRAC_PI_4);
        assert!(q.unitarity_error() < EPS);
        let out = q.apply(h);
        assert!((out[0].norm_sqr() - 0.5).abs() < EPS);
        assert!((out[1].norm_sqr() - 0.5).abs() < EPS);
        let rel = out[1] / out[0];
        assert!((rel.arg().abs() - PI / 2.0).abs() < EPS);
        // real, non-negative (H,H) entry at zero angle
        let q0 = waveplate_jones(PlateKind::Quarter, 0.0);
        assert!((q0.0[0][0] - c(1.0, 0.0)).norm() < EPS);
    }

    #[test]
    fn switch_probabilities() {
        let sw = |t: f64, p: f64| ups_jones(t, p).entry(Polarization::V, Polarization::H).norm_sqr();
        assert!((sw(FRAC_PI_4, PI) - 1.0).abs() < EPS);
        for p in [0.0, 0.3, PI, 5.0] {
            assert!(sw(0.0, p).abs() < EPS);
        }
        assert!((sw(FRAC_PI_4, PI / 2.0) - 0.5).abs() < EPS);
        // ideal switch is an exact swap
        let u = ups_jones(FRAC_PI_4, PI);
        assert!((u.0[0][1] - c(1.0, 0.0)).norm() < EPS);
        assert!((u.0[1][0] - c(1.0, 0.0)).norm() < EPS);
    }

    #[test]
    fn nonlinear_phase_helper() {
        // choose the intensity that should give exactly pi
        let (n2, l, lambda) = (2.6e-20, 0.14, 720e-9);
        let i = 3.0 * lambda / (8.0 * n2 * l);
        assert!((nonlinear_phase_shift(n2, l, i, lambda) - PI).abs() < 1e-12);
    }

    #[test]
    fn birefringent_delay_moves_delayed_polarization_down() {
        let g = grid();
        let s = make_basis_state(&g, ModeLabel::time_bin(1, Polarization::V)).unwrap();
        let e = Element::BirefringentDelay {
            shift_bins: 1,
            delayed: Polarization::V,
        };
        let out = apply_element(&s, &e).unwrap();
        assert_eq!(out.amplitude(&ModeLabel::time_bin(0, Polarization::V)), c(1.0, 0.0));
        assert_eq!(out.len(), 1);

        let h = make_basis_state(&g, ModeLabel::time_bin(1, Polarization::H)).unwrap();
        assert_eq!(apply_element(&h, &e).unwrap(), h);
    }

    #[test]
    fn delay_past_guard_bins_is_a_routing_error() {
        let g = grid();
        let s = make_basis_state(&g, ModeLabel::time_bin(0, Polarization::V)).unwrap();
        let e = Element::BirefringentDelay {
            shift_bins: 4,
            delayed: Polarization::V,
        };
        assert!(matches!(apply_element(&s, &e), Err(Error::InvalidRouting { .. })));
        let ptd = Element::PolarizationTimeDelay {
            offset: CoarseOffset(1234),
            delayed: Polarization::V,
        };
        assert!(matches!(apply_element(&s, &ptd), Err(Error::InvalidRouting { .. })));
    }

    #[test]
    fn switch_leaves_untargeted_bins_alone() {
        let g = grid();
        let s = make_basis_state(&g, ModeLabel::time_bin(1, Polarization::H)).unwrap();
        let e = Element::UltrafastSwitch {
            targets: [0, 2].into(),
            coarse_offset: None,
            theta: FRAC_PI_4,
            delta_phi: PI,
            extra_phase: 0.0,
        };
        assert_eq!(apply_element(&s, &e).unwrap(), s);
        let t0 = make_basis_state(&g, ModeLabel::time_bin(0, Polarization::H)).unwrap();
        let out = apply_element(&t0, &e).unwrap();
        assert!((out.amplitude(&ModeLabel::time_bin(0, Polarization::V)) - c(1.0, 0.0)).norm() < EPS);
    }

    #[test]
    fn switch_restricted_to_one_arm() {
        let g = grid();
        let arm = CoarseOffset(2600);
        let e = Element::UltrafastSwitch {
            targets: [0].into(),
            coarse_offset: Some(arm),
            theta: FRAC_PI_4,
            delta_phi: PI,
            extra_phase: PI,
        };
        let home = make_basis_state(&g, ModeLabel::time_bin(0, Polarization::H)).unwrap();
        assert_eq!(apply_element(&home, &e).unwrap(), home);
        let away =
            make_basis_state(&g, ModeLabel::new(0, arm, Polarization::H)).unwrap();
        let out = apply_element(&away, &e).unwrap();
        // extra phase rides on the switched photon
        assert!((out.amplitude(&ModeLabel::new(0, arm, Polarization::V)) - c(-1.0, 0.0)).norm() < EPS);
    }

    #[test]
    fn attenuator_and_splitter_subnormalize() {
        let g = grid();
        let s = make_basis_state(&g, ModeLabel::time_bin(0, Polarization::H)).unwrap();
        let out = apply_element(&s, &Element::Attenuator { transmission: 0.25 }).unwrap();
        assert!((out.norm_sqr() - 0.25).abs() < EPS);
        assert!(apply_element(&s, &Element::Attenuator { transmission: 1.5 }).is_err());

        let d = apply_element(&s, &Element::half_wave(PI / 8.0)).unwrap();
        let pbs = Element::PolarizingSplitter {
            kept: Polarization::H,
        };
        let once = apply_element(&d, &pbs).unwrap();
        assert!((once.norm_sqr() - 0.5).abs() < EPS);
        assert_eq!(apply_element(&once, &pbs).unwrap(), once);
    }

    #[test]
    fn element_order_matters() {
        let g = grid();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let s = PhotonicState::from_amplitudes(
            &g,
            [
                (ModeLabel::time_bin(1, Polarization::H), c(r, 0.0)),
                (ModeLabel::time_bin(2, Polarization::V), c(0.0, r)),
            ],
        )
        .unwrap();
        let bbo = Element::BirefringentDelay {
            shift_bins: 1,
            delayed: Polarization::V,
        };
        let hwp = Element::half_wave(PI / 8.0);
        let a = apply_element(&apply_element(&s, &bbo).unwrap(), &hwp).unwrap();
        let b = apply_element(&apply_element(&s, &hwp).unwrap(), &bbo).unwrap();
        assert!(a.max_abs_diff(&b) > 0.1);
    }

    #[test]
    fn phase_corrector_is_per_bin() {
        let g = grid();
        let s = PhotonicState::from_amplitudes(
            &g,
            (0..4).map(|m| (ModeLabel::time_bin(m, Polarization::H), c(0.5, 0.0))),
        )
        .unwrap();
        let out = apply_element(&s, &Element::PhaseCorrector { phases: vec![0.0, PI] }).unwrap();
        assert!((out.amplitude(&ModeLabel::time_bin(1, Polarization::H)) - c(-0.5, 0.0)).norm() < EPS);
        assert!((out.amplitude(&ModeLabel::time_bin(3, Polarization::H)) - c(0.5, 0.0)).norm() < EPS);
        assert!((out.norm_sqr() - 1.0).abs() < EPS);
    }

    #[test]
    fn switch_parameters_are_validated() {
        let g = grid();
        let s = make_basis_state(&g, ModeLabel::time_bin(0, Polarization::H)).unwrap();
        let mk = |targets: BTreeSet<i32>, theta, delta_phi| Element::UltrafastSwitch {
            targets,
            coarse_offset: None,
            theta,
            delta_phi,
            extra_phase: 0.0,
        };
        assert!(apply_element(&s, &mk([0].into(), 2.0, PI)).is_err());
        assert!(apply_element(&s, &mk([0].into(), 0.5, 2.0 * PI)).is_err());
        assert!(apply_element(&s, &mk([4].into(), 0.5, PI)).is_err());
    }

    #[test]
    fn serde_shape() {
        let e = Element::BirefringentDelay {
            shift_bins: 2,
            delayed: Polarization::H,
        };
        let json = serde_json::to_string(&e).unwrap();
        assert_eq!(json, r#"{"kind":"birefringent_delay","shift_bins":2,"delayed":"H"}"#);
        let back: Element = serde_json::from_str(&json).unwrap();
        assert_eq!(back, e);
    }
}
