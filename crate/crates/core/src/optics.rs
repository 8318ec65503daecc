//! Linear-optical realization of X-form channels on polarization ⊗ path.
//!
//! Polarization carries the qubit (`|H⟩ = |e⟩`, `|V⟩ = |g⟩`), the four path
//! modes carry the environment. The circuit is built element by element and
//! can report every intermediate state.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{params_from_coherences, ChannelError, ChannelParams};
use crate::linalg::{Mat2, C64, I, ONE, ZERO};
use crate::state::{partial_trace_path, DensityMatrix, PhotonicState, Polarization, StateError, PATHS};

const ANGLE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpticsError {
    #[error("{element}: populated mode ({pol:?}, path {path}) has no defined output port")]
    UndefinedPort {
        element: String,
        pol: Polarization,
        path: usize,
    },
    #[error("{element}: two populated modes routed into ({pol:?}, path {path})")]
    PortCollision {
        element: String,
        pol: Polarization,
        path: usize,
    },
    #[error("path {0} out of range")]
    BadPath(usize),
    #[error("setting {name} = {value} outside [{min}, {max}]")]
    SettingOutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("|{name}| = {modulus} > 1 cannot be realized by the circuit")]
    Unrealizable { name: &'static str, modulus: f64 },
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    State(#[from] StateError),
}

/// Amplitudes below this are round-off (e.g. `cos(π/2)` from a π/4 plate)
/// and are dropped by routing elements.
pub const VACUUM_AMPLITUDE: f64 = 1e-14;

fn populated(a: C64) -> bool {
    a.norm() > VACUUM_AMPLITUDE
}

/// Half-wave plate Jones matrix with fast axis at `theta` from H.
pub fn hwp_jones(theta: f64) -> Mat2 {
    let (s, c) = (2.0 * theta).sin_cos();
    Mat2::from_real(c, s, s, -c)
}

/// Quarter-wave plate Jones matrix (global phase `e^{−iπ/4}` dropped).
pub fn qwp_jones(theta: f64) -> Mat2 {
    let (s, c) = theta.sin_cos();
    let off = C64::new(1.0, -1.0) * (c * s);
    Mat2::new(C64::new(c * c, s * s), off, off, C64::new(s * s, c * c))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OpticalElement {
    Hwp { theta: f64, paths: Vec<usize> },
    Qwp { theta: f64, paths: Vec<usize> },
    /// Polarizing beam splitter; every populated `(pol, path)` must appear
    /// in `routes` as `(pol, from, to)`.
    Pbs { routes: Vec<(Polarization, usize, usize)> },
    /// Soleil–Babinet compensator appending `φ_H`, `φ_V`.
    Sbc { phi_h: f64, phi_v: f64, paths: Vec<usize> },
    /// Beam displacer: `H` moves `from → to`, `V` passes straight.
    Bd { shifts: Vec<(usize, usize)> },
}

impl OpticalElement {
    fn kind(&self) -> &'static str {
        match self {
            OpticalElement::Hwp { .. } => "HWP",
            OpticalElement::Qwp { .. } => "QWP",
            OpticalElement::Pbs { .. } => "PBS",
            OpticalElement::Sbc { .. } => "SBC",
            OpticalElement::Bd { .. } => "BD",
        }
    }
}

fn local(s: &PhotonicState, m: &Mat2, paths: &[usize]) -> Result<PhotonicState, OpticsError> {
    let mut out = *s;
    for &p in paths {
        if p >= PATHS {
            return Err(OpticsError::BadPath(p));
        }
        let v = m.apply([s.amplitude(Polarization::H, p), s.amplitude(Polarization::V, p)]);
        *out.amplitude_mut(Polarization::H, p) = v[0];
        *out.amplitude_mut(Polarization::V, p) = v[1];
    }
    Ok(out)
}

fn route(
    s: &PhotonicState,
    name: &str,
    target: impl Fn(Polarization, usize) -> Option<(Polarization, usize)>,
) -> Result<PhotonicState, OpticsError> {
    let mut out = PhotonicState::default();
    let mut filled = [false; PhotonicState::DIM];
    for pol in [Polarization::H, Polarization::V] {
        for path in 0..PATHS {
            let a = s.amplitude(pol, path);
            if !populated(a) {
                continue;
            }
            let (tp, tpath) = target(pol, path).ok_or_else(|| OpticsError::UndefinedPort {
                element: name.to_string(),
                pol,
                path,
            })?;
            if tpath >= PATHS {
                return Err(OpticsError::BadPath(tpath));
            }
            let k = PhotonicState::index(tp, tpath);
            if filled[k] {
                return Err(OpticsError::PortCollision {
                    element: name.to_string(),
                    pol: tp,
                    path: tpath,
                });
            }
            filled[k] = true;
            *out.amplitude_mut(tp, tpath) = a;
        }
    }
    Ok(out)
}

pub fn apply_element(e: &OpticalElement, s: &PhotonicState) -> Result<PhotonicState, OpticsError> {
    match e {
        OpticalElement::Hwp { theta, paths } => local(s, &hwp_jones(*theta), paths),
        OpticalElement::Qwp { theta, paths } => local(s, &qwp_jones(*theta), paths),
        OpticalElement::Sbc { phi_h, phi_v, paths } => {
            let m = Mat2::new(C64::from_polar(1.0, *phi_h), ZERO, ZERO, C64::from_polar(1.0, *phi_v));
            local(s, &m, paths)
        }
        OpticalElement::Pbs { routes } => route(s, "PBS", |pol, path| {
            routes
                .iter()
                .find(|(p, from, _)| *p == pol && *from == path)
                .map(|&(_, _, to)| (pol, to))
        }),
        OpticalElement::Bd { shifts } => route(s, "BD", |pol, path| match pol {
            Polarization::V => Some((pol, path)),
            Polarization::H => shifts.iter().find(|(from, _)| *from == path).map(|&(_, to)| (pol, to)),
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    /// `(label, element)` in order of traversal.
    pub elements: Vec<(String, OpticalElement)>,
}

impl Circuit {
    pub fn apply(&self, s: &PhotonicState) -> Result<PhotonicState, OpticsError> {
        self.elements.iter().try_fold(*s, |acc, (_, e)| apply_element(e, &acc))
    }

    /// State after every element, starting with the input.
    pub fn trace(&self, s: &PhotonicState) -> Result<Vec<(String, PhotonicState)>, OpticsError> {
        let mut out = vec![("input".to_string(), *s)];
        let mut cur = *s;
        for (label, e) in &self.elements {
            cur = apply_element(e, &cur)?;
            out.push((label.clone(), cur));
        }
        Ok(out)
    }

    /// Labels of all elements and their kinds, e.g. `"HWP1 (HWP)"`.
    pub fn describe(&self) -> Vec<String> {
        self.elements
            .iter()
            .map(|(l, e)| format!("{l} ({})", e.kind()))
            .collect()
    }
}

/// Wave-plate angles `θ₁..θ₄ ∈ [0, π/4]` and compensator phases
/// `φ₁..φ₄ ∈ [0, 2π)`. `θ₅..θ₈` are fixed at `π/4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitSettings {
    pub theta: [f64; 4],
    pub phi: [f64; 4],
}

impl CircuitSettings {
    pub const FIXED_THETA: f64 = FRAC_PI_4;

    pub fn new(theta: [f64; 4], phi: [f64; 4]) -> Result<Self, OpticsError> {
        const T: [&str; 4] = ["theta1", "theta2", "theta3", "theta4"];
        const P: [&str; 4] = ["phi1", "phi2", "phi3", "phi4"];
        for (name, &v) in T.iter().zip(&theta) {
            if !(v >= -ANGLE_SLACK && v <= FRAC_PI_4 + ANGLE_SLACK) {
                return Err(OpticsError::SettingOutOfRange {
                    name,
                    value: v,
                    min: 0.0,
                    max: FRAC_PI_4,
                });
            }
        }
        for (name, &v) in P.iter().zip(&phi) {
            if !(v >= 0.0 && v < TAU) {
                return Err(OpticsError::SettingOutOfRange {
                    name,
                    value: v,
                    min: 0.0,
                    max: TAU,
                });
            }
        }
        Ok(CircuitSettings {
            theta: theta.map(|t| t.clamp(0.0, FRAC_PI_4)),
            phi,
        })
    }

    pub const CSV_HEADER: &'static str = "time,theta1,theta2,theta3,theta4,phi1,phi2,phi3,phi4";

    /// Row for [`Self::CSV_HEADER`]; angles in degrees when `degrees`.
    pub fn csv_row(&self, time: f64, degrees: bool) -> String {
        let conv = |x: f64| if degrees { x.to_degrees() } else { x };
        let mut row = time.to_string();
        for v in self.theta.iter().chain(&self.phi) {
            row.push(',');
            row.push_str(&conv(*v).to_string());
        }
        row
    }
}

/// The channel circuit. HWP₂,₃,₄ act only on vertically polarized light and
/// are mounted at `θ + π/2`, which flips the sign of their Jones matrix.
pub fn build_nonrwa_circuit(settings: &CircuitSettings) -> Circuit {
    use OpticalElement::*;
    use Polarization::{H, V};
    let [t1, t2, t3, t4] = settings.theta;
    let [f1, f2, f3, f4] = settings.phi;
    let fixed = CircuitSettings::FIXED_THETA;
    let displace = || Bd {
        shifts: vec![(2, 0), (1, 3)],
    };
    let elements = vec![
        ("PBS1".into(), Pbs { routes: vec![(H, 0, 0), (V, 0, 1)] }),
        ("HWP1".into(), Hwp { theta: t1, paths: vec![0] }),
        ("HWP2".into(), Hwp { theta: t2 + FRAC_PI_2, paths: vec![1] }),
        (
            "PBS2".into(),
            Pbs {
                routes: vec![(H, 0, 2), (V, 0, 1), (H, 1, 1), (V, 1, 2)],
            },
        ),
        ("SBC1".into(), Sbc { phi_h: f1, phi_v: f3, paths: vec![2] }),
        ("SBC2".into(), Sbc { phi_h: f4, phi_v: f2, paths: vec![1] }),
        ("BD1,2".into(), displace()),
        ("HWP5".into(), Hwp { theta: fixed, paths: vec![0] }),
        ("HWP3".into(), Hwp { theta: t3 + FRAC_PI_2, paths: vec![1] }),
        ("HWP4".into(), Hwp { theta: t4 + FRAC_PI_2, paths: vec![2] }),
        ("HWP6".into(), Hwp { theta: fixed, paths: vec![3] }),
        ("BD3,4".into(), displace()),
        ("HWP7".into(), Hwp { theta: fixed, paths: vec![0] }),
        ("HWP8".into(), Hwp { theta: fixed, paths: vec![3] }),
    ];
    Circuit { elements }
}

/// Closed-form images of `|H⟩|0⟩` and `|V⟩|0⟩`:
///
/// ```text
/// |H⟩|0⟩ → cos2θ₁ e^{iφ₁}|H⟩|0⟩ + sin2θ₁ e^{iφ₂}|V⟩(cos2θ₃|1⟩ − sin2θ₃|3⟩)
/// |V⟩|0⟩ → cos2θ₂ e^{iφ₃}|V⟩(cos2θ₄|2⟩ − sin2θ₄|0⟩) − sin2θ₂ e^{iφ₄}|H⟩|3⟩
/// ```
pub fn closed_form_outputs(settings: &CircuitSettings) -> [PhotonicState; 2] {
    use Polarization::{H, V};
    let [c1, c2, c3, c4] = settings.theta.map(|t| (2.0 * t).cos());
    let [s1, s2, s3, s4] = settings.theta.map(|t| (2.0 * t).sin());
    let e = settings.phi.map(|f| C64::from_polar(1.0, f));
    let mut h = PhotonicState::default();
    *h.amplitude_mut(H, 0) = e[0] * c1;
    *h.amplitude_mut(V, 1) = e[1] * (s1 * c3);
    *h.amplitude_mut(V, 3) = -e[1] * (s1 * s3);
    let mut v = PhotonicState::default();
    *v.amplitude_mut(V, 2) = e[2] * (c2 * c4);
    *v.amplitude_mut(V, 0) = -e[2] * (c2 * s4);
    *v.amplitude_mut(H, 3) = -e[3] * s2;
    [h, v]
}

/// Channel parameters implied by the circuit, evaluated from the closed
/// form: `q = cos²2θ₁`, `p = cos²2θ₂`, `√(pq) Z₁ = −cos2θ₁ cos2θ₂ sin2θ₄
/// e^{i(φ₁−φ₃)}`, `√((1−q)(1−p)) Z₂ = sin2θ₁ sin2θ₂ sin2θ₃ e^{i(φ₄−φ₂)}`.
pub fn closed_form_params(settings: &CircuitSettings) -> Result<ChannelParams, OpticsError> {
    let [c1, c2, _, _] = settings.theta.map(|t| (2.0 * t).cos());
    let [s1, s2, s3, s4] = settings.theta.map(|t| (2.0 * t).sin());
    let [f1, f2, f3, f4] = settings.phi;
    let a = -C64::from_polar(c1 * c2 * s4, f1 - f3);
    let b = C64::from_polar(s1 * s2 * s3, f4 - f2);
    Ok(params_from_coherences(0.0, c2 * c2, c1 * c1, a, b)?)
}

fn reduced_output(outputs: &[PhotonicState; 2], qubit: [C64; 2]) -> Result<DensityMatrix, OpticsError> {
    let psi = outputs[0].scaled(qubit[0]).add(&outputs[1].scaled(qubit[1]));
    Ok(partial_trace_path(&psi.density())?)
}

/// Runs the circuit on `|H⟩`, `|V⟩`, `(|H⟩+|V⟩)/√2` and `(|H⟩+i|V⟩)/√2`,
/// traces out the paths and reads off the channel parameters.
pub fn circuit_to_channel(settings: &CircuitSettings) -> Result<ChannelParams, OpticsError> {
    let circuit = build_nonrwa_circuit(settings);
    let outputs = [
        circuit.apply(&PhotonicState::basis(Polarization::H, 0))?,
        circuit.apply(&PhotonicState::basis(Polarization::V, 0))?,
    ];
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let e = reduced_output(&outputs, [ONE, ZERO])?;
    let g = reduced_output(&outputs, [ZERO, ONE])?;
    let plus = reduced_output(&outputs, [C64::new(s, 0.0), C64::new(s, 0.0)])?;
    let plus_i = reduced_output(&outputs, [C64::new(s, 0.0), C64::new(0.0, s)])?;
    let a = plus.rho(0, 1) + I * plus_i.rho(0, 1);
    let b = plus.rho(0, 1) - I * plus_i.rho(0, 1);
    Ok(params_from_coherences(0.0, g.rho(1, 1).re, e.rho(0, 0).re, a, b)?)
}

fn phase(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Settings realizing `params`: `θ₁ = ½ arccos √q`, `θ₂ = ½ arccos √p`,
/// `θ₄ = ½ arcsin |Z₁|`, `θ₃ = ½ arcsin |Z₂|`, `φ₁ = φ₄ = 0`,
/// `φ₃ = π − arg Z₁`, `φ₂ = −arg Z₂` (mod 2π). An absent `Z` gives angle and
/// phase 0.
pub fn synthesize_settings(params: &ChannelParams) -> Result<CircuitSettings, OpticsError> {
    for (name, z) in [("z1", params.z1), ("z2", params.z2)] {
        if let Some(z) = z {
            if z.norm() > 1.0 + crate::channel::RANGE_SLACK {
                return Err(OpticsError::Unrealizable {
                    name,
                    modulus: z.norm(),
                });
            }
        }
    }
    let half_asin = |z: Option<C64>| z.map_or(0.0, |z| 0.5 * z.norm().min(1.0).asin());
    let theta = [
        0.5 * params.q.sqrt().min(1.0).acos(),
        0.5 * params.p.sqrt().min(1.0).acos(),
        half_asin(params.z2),
        half_asin(params.z1),
    ];
    let phi3 = params.z1.map_or(0.0, |z| phase(PI - z.arg()));
    let phi2 = params.z2.map_or(0.0, |z| phase(-z.arg()));
    CircuitSettings::new(theta, [0.0, phi2, phi3, 0.0])
}

/// Wave-plate angles preparing a polarization state from `|H⟩`: first a
/// HWP, then a QWP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreparationSettings {
    pub hwp: f64,
    pub qwp: f64,
}

impl PreparationSettings {
    /// Jones vector produced from `|H⟩`.
    pub fn prepare(&self) -> [C64; 2] {
        (qwp_jones(self.qwp) * hwp_jones(self.hwp)).apply([ONE, ZERO])
    }

    /// Angles for target Jones vector `target = (H, V)`, up to global phase.
    /// The QWP axis sits on the ellipse azimuth `ψ` and the HWP turns `H`
    /// into linear polarization at `ψ + χ`, `χ` being the ellipticity angle.
    pub fn for_state(target: [C64; 2]) -> Result<Self, StateError> {
        let [s2, s3, s1] = DensityMatrix::pure(target)?.bloch_vector();
        let psi = 0.5 * s2.atan2(s1);
        let chi = 0.5 * s3.clamp(-1.0, 1.0).asin();
        Ok(PreparationSettings {
            hwp: 0.5 * (psi + chi),
            qwp: psi,
        })
    }
}
