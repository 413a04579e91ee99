//! Two-copy QCS experiments as declarative circuits, run on either engine.
//!
//! A [`CircuitSpec`] lists squeezed sources, then an ordered sequence of beam
//! splitters, phase shifts and loss channels, the detected modes and the
//! mode whose photon statistics feed the estimator. Time-bin delays are
//! plain mode routing.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::estimator::{self, CountDistribution, EstimatorError};
use crate::fock::{self, basis_dim, FockError, FockKet, FockState, PassiveUnitary};
use crate::gaussian::{
    self, bs_balanced_modes, bs_symmetric_modes, GaussianError, GaussianState, SymplecticOp,
};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid circuit: {0}")]
    InvalidSpec(String),
    #[error("modes {m1} (η = {eta1}) and {m2} (η = {eta2}) are compared with unequal loss")]
    AsymmetricLoss {
        m1: usize,
        eta1: f64,
        m2: usize,
        eta2: f64,
    },
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Gaussian(#[from] GaussianError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

pub type Result<T> = std::result::Result<T, ProtocolError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsKind {
    /// `(1/√2)[[1, i], [i, 1]]`
    Symmetric,
    /// `(1/√2)[[1, 1], [1, −1]]`
    Balanced,
}

impl BsKind {
    pub fn mode_matrix(self) -> DMatrix<Complex64> {
        match self {
            BsKind::Symmetric => bs_symmetric_modes(),
            BsKind::Balanced => bs_balanced_modes(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            BsKind::Symmetric => "symmetric",
            BsKind::Balanced => "balanced",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Source {
    pub mode: usize,
    pub r: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Element {
    BeamSplitter { kind: BsKind, modes: (usize, usize) },
    Phase { mode: usize, theta: f64 },
    Loss { mode: usize, eta: f64 },
}

impl Element {
    fn modes(&self) -> Vec<usize> {
        match *self {
            Element::BeamSplitter { modes: (a, b), .. } => vec![a, b],
            Element::Phase { mode, .. } | Element::Loss { mode, .. } => vec![mode],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitSpec {
    pub sources: Vec<Source>,
    pub elements: Vec<Element>,
    pub detected: Vec<usize>,
    pub marginal_mode: usize,
}

impl CircuitSpec {
    /// One more than the largest mode mentioned anywhere.
    pub fn num_modes(&self) -> usize {
        let from_sources = self.sources.iter().map(|s| s.mode);
        let from_elements = self.elements.iter().flat_map(|e| e.modes());
        from_sources
            .chain(from_elements)
            .chain(self.detected.iter().copied())
            .chain(std::iter::once(self.marginal_mode))
            .max()
            .map_or(0, |m| m + 1)
    }

    /// Index of the last balanced splitter with the marginal mode as an output.
    fn final_splitter(&self) -> Option<(usize, (usize, usize))> {
        self.elements
            .iter()
            .enumerate()
            .rev()
            .find_map(|(i, e)| match *e {
                Element::BeamSplitter {
                    kind: BsKind::Balanced,
                    modes,
                } if modes.0 == self.marginal_mode || modes.1 == self.marginal_mode => {
                    Some((i, modes))
                }
                _ => None,
            })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ProtocolError::InvalidSpec(m));
        let mut seen = Vec::new();
        for s in &self.sources {
            if !s.r.is_finite() || s.r < 0.0 || !s.phi.is_finite() {
                return bad(format!(
                    "source on mode {} has r = {}, phi = {}",
                    s.mode, s.r, s.phi
                ));
            }
            if seen.contains(&s.mode) {
                return bad(format!("mode {} has two sources", s.mode));
            }
            seen.push(s.mode);
        }
        for e in &self.elements {
            match *e {
                Element::BeamSplitter { modes: (a, b), .. } if a == b => {
                    return bad(format!("beam splitter couples mode {a} to itself"));
                }
                Element::Loss { eta, mode } if !(0.0..=1.0).contains(&eta) => {
                    return bad(format!("loss on mode {mode} has eta = {eta}"));
                }
                Element::Phase { theta, mode } if !theta.is_finite() => {
                    return bad(format!("phase on mode {mode} has theta = {theta}"));
                }
                _ => {}
            }
        }
        if !self.detected.contains(&self.marginal_mode) {
            return bad(format!(
                "marginal mode {} is not detected",
                self.marginal_mode
            ));
        }
        let mut d = self.detected.clone();
        d.sort_unstable();
        d.dedup();
        if d.len() != self.detected.len() {
            return bad("a mode is detected twice".into());
        }
        if self.final_splitter().is_none() {
            return bad("no balanced beam splitter outputs the marginal mode".into());
        }
        self.transmissions().map(|_| ())
    }

    /// Aggregate transmission of the compared pair, checking that every
    /// splitter mixes equally attenuated modes and that the two outputs of
    /// the final splitter end with equal loss.
    fn transmissions(&self) -> Result<LossProfile> {
        let mut eta = vec![1.0; self.num_modes()];
        let (last, (a, b)) = self.final_splitter().expect("checked by validate");
        let mut before = 1.0;
        for (i, e) in self.elements.iter().enumerate() {
            match *e {
                Element::Loss { mode, eta: t } => eta[mode] *= t,
                Element::BeamSplitter {
                    modes: (m1, m2), ..
                } => {
                    if (eta[m1] - eta[m2]).abs() > 1e-12 {
                        return Err(ProtocolError::AsymmetricLoss {
                            m1,
                            eta1: eta[m1],
                            m2,
                            eta2: eta[m2],
                        });
                    }
                    if i == last {
                        before = eta[m1];
                    }
                }
                Element::Phase { .. } => {}
            }
        }
        if (eta[a] - eta[b]).abs() > 1e-12 {
            return Err(ProtocolError::AsymmetricLoss {
                m1: a,
                eta1: eta[a],
                m2: b,
                eta2: eta[b],
            });
        }
        Ok(LossProfile {
            total: eta[a],
            after_final: if before > 0.0 { eta[a] / before } else { 1.0 },
        })
    }
}

struct LossProfile {
    total: f64,
    after_final: f64,
}

fn parse_kv(token: &str, key: &str, line: usize) -> Result<f64> {
    let err = |message: String| ProtocolError::Parse { line, message };
    let value = token
        .strip_prefix(key)
        .and_then(|t| t.strip_prefix('='))
        .ok_or_else(|| err(format!("expected `{key}=<value>`, found `{token}`")))?;
    value
        .parse()
        .map_err(|_| err(format!("`{value}` is not a number")))
}

fn parse_mode(token: &str, line: usize) -> Result<usize> {
    token.parse().map_err(|_| ProtocolError::Parse {
        line,
        message: format!("`{token}` is not a mode index"),
    })
}

impl FromStr for CircuitSpec {
    type Err = ProtocolError;

    /// Parses the line format; blank lines and `#` comments are skipped.
    fn from_str(text: &str) -> Result<Self> {
        let mut sources = Vec::new();
        let mut elements = Vec::new();
        let mut detected = None;
        let mut marginal = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = content.split_whitespace().collect();
            let arity = |n: usize| {
                if tokens.len() == n {
                    Ok(())
                } else {
                    Err(ProtocolError::Parse {
                        line,
                        message: format!("`{}` takes {} fields", tokens[0], n - 1),
                    })
                }
            };
            match tokens[0] {
                "source" => {
                    arity(4)?;
                    sources.push(Source {
                        mode: parse_mode(tokens[1], line)?,
                        r: parse_kv(tokens[2], "r", line)?,
                        phi: parse_kv(tokens[3], "phi", line)?,
                    });
                }
                "bs" => {
                    arity(4)?;
                    let kind = match tokens[1] {
                        "symmetric" => BsKind::Symmetric,
                        "balanced" => BsKind::Balanced,
                        other => {
                            return Err(ProtocolError::Parse {
                                line,
                                message: format!("unknown beam splitter `{other}`"),
                            })
                        }
                    };
                    let modes = (parse_mode(tokens[2], line)?, parse_mode(tokens[3], line)?);
                    elements.push(Element::BeamSplitter { kind, modes });
                }
                "loss" => {
                    arity(3)?;
                    elements.push(Element::Loss {
                        mode: parse_mode(tokens[1], line)?,
                        eta: parse_kv(tokens[2], "eta", line)?,
                    });
                }
                "phase" => {
                    arity(3)?;
                    elements.push(Element::Phase {
                        mode: parse_mode(tokens[1], line)?,
                        theta: parse_kv(tokens[2], "theta", line)?,
                    });
                }
                "detect" => {
                    if tokens.len() < 2 {
                        return Err(ProtocolError::Parse {
                            line,
                            message: "`detect` needs at least one mode".into(),
                        });
                    }
                    let modes = tokens[1..]
                        .iter()
                        .map(|t| parse_mode(t, line))
                        .collect::<Result<Vec<_>>>()?;
                    if detected.replace(modes).is_some() {
                        return Err(ProtocolError::Parse {
                            line,
                            message: "repeated `detect`".into(),
                        });
                    }
                }
                "marginal" => {
                    arity(2)?;
                    if marginal.replace(parse_mode(tokens[1], line)?).is_some() {
                        return Err(ProtocolError::Parse {
                            line,
                            message: "repeated `marginal`".into(),
                        });
                    }
                }
                other => {
                    return Err(ProtocolError::Parse {
                        line,
                        message: format!("unknown directive `{other}`"),
                    })
                }
            }
        }
        let spec = CircuitSpec {
            sources,
            elements,
            detected: detected
                .ok_or_else(|| ProtocolError::InvalidSpec("missing `detect`".into()))?,
            marginal_mode: marginal
                .ok_or_else(|| ProtocolError::InvalidSpec("missing `marginal`".into()))?,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for CircuitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.sources {
            writeln!(f, "source {} r={} phi={}", s.mode, s.r, s.phi)?;
        }
        for e in &self.elements {
            match *e {
                Element::BeamSplitter {
                    kind,
                    modes: (a, b),
                } => writeln!(f, "bs {} {a} {b}", kind.name())?,
                Element::Loss { mode, eta } => writeln!(f, "loss {mode} eta={eta}")?,
                Element::Phase { mode, theta } => writeln!(f, "phase {mode} theta={theta}")?,
            }
        }
        let modes: Vec<String> = self.detected.iter().map(|m| m.to_string()).collect();
        writeln!(f, "detect {}", modes.join(" "))?;
        writeln!(f, "marginal {}", self.marginal_mode)
    }
}

fn check_inputs(r: f64, phi: f64, eta: f64) -> Result<()> {
    if !r.is_finite() || r < 0.0 || !phi.is_finite() || !(0.0..=1.0).contains(&eta) {
        return Err(ProtocolError::InvalidSpec(format!(
            "r = {r}, phi = {phi}, eta = {eta}"
        )));
    }
    Ok(())
}

/// Two identical squeezed vacua, equal loss on each, balanced splitter;
/// mode 1 carries the difference mode.
pub fn build_sv_experiment(r: f64, phi: f64, eta: f64) -> Result<CircuitSpec> {
    check_inputs(r, phi, eta)?;
    Ok(CircuitSpec {
        sources: vec![Source { mode: 0, r, phi }, Source { mode: 1, r, phi }],
        elements: vec![
            Element::Loss { mode: 0, eta },
            Element::Loss { mode: 1, eta },
            Element::BeamSplitter {
                kind: BsKind::Balanced,
                modes: (0, 1),
            },
        ],
        detected: vec![0, 1],
        marginal_mode: 1,
    })
}

/// Two TMSV pairs from symmetric splitters acting on squeezed vacua with
/// phase `φ + π/2`; one branch of each is lost, the other two suffer loss
/// `η` and meet on a balanced splitter whose mode 2 is the difference mode.
pub fn build_thermal_experiment(r: f64, phi: f64, eta: f64) -> Result<CircuitSpec> {
    check_inputs(r, phi, eta)?;
    let source_phi = phi + FRAC_PI_2;
    Ok(CircuitSpec {
        sources: (0..4)
            .map(|mode| Source {
                mode,
                r,
                phi: source_phi,
            })
            .collect(),
        elements: vec![
            Element::BeamSplitter {
                kind: BsKind::Symmetric,
                modes: (0, 1),
            },
            Element::BeamSplitter {
                kind: BsKind::Symmetric,
                modes: (2, 3),
            },
            Element::Loss { mode: 0, eta },
            Element::Loss { mode: 2, eta },
            Element::BeamSplitter {
                kind: BsKind::Balanced,
                modes: (0, 2),
            },
        ],
        detected: vec![0, 2],
        marginal_mode: 2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Gaussian,
    Fock,
}

impl FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "gaussian" => Ok(Engine::Gaussian),
            "fock" => Ok(Engine::Fock),
            other => Err(format!(
                "unknown engine `{other}` (expected gaussian or fock)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Per-source Fock cutoff; chosen from `truncation_tol` when absent.
    pub cutoff: Option<usize>,
    /// Largest norm a source ket may lose to its cutoff.
    pub truncation_tol: f64,
    /// Population discarded when intermediate states are re-truncated.
    pub trim_tol: f64,
    pub purity_floor: f64,
    /// Largest basis on which a mixed multimode state is formed.
    pub max_density_dim: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            cutoff: None,
            truncation_tol: fock::DEFAULT_TRUNCATION_TOL,
            trim_tol: 1e-12,
            purity_floor: fock::DEFAULT_PURITY_FLOOR,
            max_density_dim: fock::MAX_DENSITY_DIM,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetadata {
    pub sources: Vec<Source>,
    /// Transmission common to the compared modes.
    pub eta: f64,
    /// Fock cutoff of each source, in source order.
    pub cutoffs: Vec<usize>,
    pub truncation_tol: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub engine: Engine,
    /// Exact photon distribution of the marginal mode.
    pub exact_distribution: CountDistribution,
    /// Covariance-matrix QCS of the single-copy state.
    pub qcs_analytic: f64,
    /// Commutator-definition QCS of the single-copy state in Fock space.
    pub qcs_direct: f64,
    /// Estimator applied to `exact_distribution`.
    pub qcs_two_copy: f64,
    /// `Tr ρ²` of the single-copy state.
    pub purity: f64,
    /// `⟨n⟩` of the marginal mode.
    pub mean_photon_out: f64,
    /// `⟨a†a⟩ − |⟨a⟩|²` of the single-copy state.
    pub probe_excess_photon: f64,
    pub metadata: RunMetadata,
}

impl ExperimentResult {
    /// Largest pairwise difference between the three QCS routes.
    pub fn route_spread(&self) -> f64 {
        let q = [self.qcs_analytic, self.qcs_direct, self.qcs_two_copy];
        let max = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = q.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }
}

/// Covariance-matrix run: the full output state and the single-copy probe
/// (first input of the final splitter, with any later loss applied).
fn run_gaussian(
    spec: &CircuitSpec,
    profile: &LossProfile,
) -> Result<(GaussianState, GaussianState)> {
    let by_mode: HashMap<usize, &Source> = spec.sources.iter().map(|s| (s.mode, s)).collect();
    let mut state: Option<GaussianState> = None;
    for m in 0..spec.num_modes() {
        let single = match by_mode.get(&m) {
            Some(s) => GaussianState::squeezed_vacuum(s.r, s.phi)?,
            None => GaussianState::vacuum(1),
        };
        state = Some(match state {
            None => single,
            Some(acc) => acc.tensor(&single),
        });
    }
    let mut state = state.expect("at least one mode");
    let (last, (first, _)) = spec.final_splitter().expect("validated");
    let mut probe = None;
    for (i, e) in spec.elements.iter().enumerate() {
        if i == last {
            probe = Some(
                state
                    .reduced(&[first])?
                    .apply_loss(profile.after_final, 0)?,
            );
        }
        state = match *e {
            Element::BeamSplitter {
                kind,
                modes: (a, b),
            } => {
                let op = match kind {
                    BsKind::Symmetric => SymplecticOp::bs_symmetric(),
                    BsKind::Balanced => SymplecticOp::bs_balanced(),
                };
                state.apply_symplectic(&op, &[a, b])?
            }
            Element::Phase { mode, theta } => {
                state.apply_symplectic(&SymplecticOp::phase(theta)?, &[mode])?
            }
            Element::Loss { mode, eta } => state.apply_loss(eta, mode)?,
        };
    }
    Ok((state, probe.expect("final splitter visited")))
}

struct Group {
    modes: Vec<usize>,
    state: FockState,
}

/// Fock executor holding each set of interacting modes as its own state.
/// Modes are traced out as soon as no later element or detector needs them.
struct FockExecutor<'a> {
    spec: &'a CircuitSpec,
    options: &'a RunOptions,
    groups: Vec<Group>,
    unitaries: HashMap<(u8, usize), PassiveUnitary>,
}

impl FockExecutor<'_> {
    fn locate(&self, mode: usize) -> (usize, usize) {
        for (g, group) in self.groups.iter().enumerate() {
            if let Some(l) = group.modes.iter().position(|&m| m == mode) {
                return (g, l);
            }
        }
        panic!("mode {mode} was traced out while still needed");
    }

    fn splitter(&mut self, kind: BsKind, total: usize) -> Result<&PassiveUnitary> {
        let key = (kind as u8, total);
        if let Entry::Vacant(slot) = self.unitaries.entry(key) {
            slot.insert(PassiveUnitary::new(kind.mode_matrix(), total)?);
        }
        Ok(&self.unitaries[&key])
    }

    fn trim(&self, state: &FockState) -> FockState {
        state.trimmed(self.options.trim_tol).0
    }

    fn merge(&mut self, g1: usize, g2: usize) -> Result<usize> {
        if g1 == g2 {
            return Ok(g1);
        }
        let (hi, lo) = (g1.max(g2), g1.min(g2));
        let b = self.groups.remove(hi);
        let a = &self.groups[lo];
        let (sa, sb) = (self.trim(&a.state), self.trim(&b.state));
        let modes = sa.num_modes() + sb.num_modes();
        let total = sa.cutoff() + sb.cutoff();
        let mixed = matches!(sa, FockState::Mixed(_)) || matches!(sb, FockState::Mixed(_));
        let dim = basis_dim(modes, total);
        if mixed && dim > self.options.max_density_dim {
            return Err(FockError::TooLarge {
                dim,
                limit: self.options.max_density_dim,
            }
            .into());
        }
        let state = sa.tensor(&sb);
        let mut all = a.modes.clone();
        all.extend(&b.modes);
        self.groups[lo] = Group { modes: all, state };
        Ok(lo)
    }

    fn apply(&mut self, element: &Element) -> Result<()> {
        match *element {
            Element::BeamSplitter {
                kind,
                modes: (m1, m2),
            } => {
                let g = self.merge(self.locate(m1).0, self.locate(m2).0)?;
                let (_, l1) = self.locate(m1);
                let (_, l2) = self.locate(m2);
                let total = self.groups[g].state.cutoff();
                let u = self.splitter(kind, total)?.clone();
                self.groups[g].state = self.groups[g].state.apply_passive(&u, &[l1, l2])?;
            }
            Element::Phase { mode, theta } => {
                let (g, l) = self.locate(mode);
                let m = DMatrix::from_element(1, 1, Complex64::from_polar(1.0, theta));
                let u = PassiveUnitary::new(m, self.groups[g].state.cutoff())?;
                self.groups[g].state = self.groups[g].state.apply_passive(&u, &[l])?;
            }
            Element::Loss { mode, eta } => {
                let (g, l) = self.locate(mode);
                let lossy = self.groups[g].state.apply_loss(eta, l)?;
                self.groups[g].state = self.trim(&lossy);
            }
        }
        Ok(())
    }

    /// Traces out modes not referenced by `elements[from..]` or detected.
    fn release(&mut self, from: usize) -> Result<()> {
        let needed = |m: usize| {
            self.spec.detected.contains(&m)
                || self.spec.elements[from..]
                    .iter()
                    .any(|e| e.modes().contains(&m))
        };
        let mut keep_flags = Vec::new();
        for group in &self.groups {
            keep_flags.push(group.modes.iter().map(|&m| needed(m)).collect::<Vec<_>>());
        }
        let mut next = Vec::new();
        for (group, flags) in self.groups.drain(..).zip(keep_flags) {
            if flags.iter().all(|&k| k) {
                next.push(group);
                continue;
            }
            let keep: Vec<usize> = (0..flags.len()).filter(|&i| flags[i]).collect();
            if keep.is_empty() {
                continue;
            }
            let modes = keep.iter().map(|&i| group.modes[i]).collect();
            let state = group
                .state
                .partial_trace(&keep)?
                .trimmed(self.options.trim_tol)
                .0;
            next.push(Group { modes, state });
        }
        self.groups = next;
        Ok(())
    }
}

/// Fock run: marginal-mode distribution, probe state and source cutoffs.
fn run_fock(
    spec: &CircuitSpec,
    options: &RunOptions,
    profile: &LossProfile,
) -> Result<(Vec<f64>, FockState, Vec<usize>)> {
    let mut groups = Vec::new();
    let mut cutoffs = Vec::new();
    let by_mode: HashMap<usize, &Source> = spec.sources.iter().map(|s| (s.mode, s)).collect();
    for m in 0..spec.num_modes() {
        let state = match by_mode.get(&m) {
            Some(s) => {
                let d = options
                    .cutoff
                    .unwrap_or_else(|| fock::squeezed_cutoff(s.r, options.truncation_tol));
                cutoffs.push((m, d));
                FockState::Pure(fock::squeezed_vacuum_ket(
                    s.r,
                    s.phi,
                    d,
                    options.truncation_tol,
                )?)
            }
            None => FockState::Pure(FockKet::vacuum(1, 0)),
        };
        groups.push(Group {
            modes: vec![m],
            state,
        });
    }
    let order: Vec<usize> = spec
        .sources
        .iter()
        .map(|s| {
            cutoffs
                .iter()
                .find(|c| c.0 == s.mode)
                .expect("source cutoff")
                .1
        })
        .collect();
    let mut exec = FockExecutor {
        spec,
        options,
        groups,
        unitaries: HashMap::new(),
    };
    exec.release(0)?;
    let (last, (first, _)) = spec.final_splitter().expect("validated");
    let mut probe = None;
    for (i, e) in spec.elements.iter().enumerate() {
        if i == last {
            let (g, l) = exec.locate(first);
            let single = exec.groups[g].state.partial_trace(&[l])?;
            probe = Some(
                single
                    .apply_loss(profile.after_final, 0)?
                    .trimmed(options.trim_tol)
                    .0,
            );
        }
        exec.apply(e)?;
        exec.release(i + 1)?;
    }
    let (g, l) = exec.locate(spec.marginal_mode);
    let probs = exec.groups[g]
        .state
        .photon_distribution(&[l])?
        .marginal(l)?;
    Ok((probs, probe.expect("final splitter visited"), order))
}

/// Executes `spec`. Both engines report the covariance-matrix QCS of the
/// single-copy state. The Fock engine simulates the whole circuit; the
/// Gaussian engine converts the single-copy covariance matrix to Fock space
/// and runs the two-copy circuit on it.
pub fn run_circuit(
    spec: &CircuitSpec,
    engine: Engine,
    options: &RunOptions,
) -> Result<ExperimentResult> {
    spec.validate()?;
    let profile = spec.transmissions()?;
    let (output, probe_g) = run_gaussian(spec, &profile)?;
    let qcs_analytic = gaussian::qcs_gaussian(&probe_g)?;

    let (probs, probe, cutoffs) = match engine {
        Engine::Fock => run_fock(spec, options, &profile)?,
        Engine::Gaussian => {
            let probe = fock::from_gaussian(&probe_g, None, options.trim_tol)?;
            let probs = fock::two_copy_marginal(&probe)?;
            let cutoffs = vec![probe.cutoff(); spec.sources.len()];
            (probs, probe, cutoffs)
        }
    };
    // each source may shed `truncation_tol`, each re-truncation `trim_tol`
    let budget = spec.sources.len() as f64 * options.truncation_tol
        + 2.0 * (spec.elements.len() + 1) as f64 * options.trim_tol;
    let exact =
        CountDistribution::exact_with_tolerance(probs, budget.max(estimator::NORMALISATION_TOL))?;
    let qcs_two_copy = estimator::qcs_from_distribution(&exact)?.qcs;
    let qcs_direct = fock::qcs_direct_with_floor(&probe, options.purity_floor)?;
    let trace = probe.trace();
    let purity = fock::purity_fock(&probe) / (trace * trace);
    let mean_photon_out = match engine {
        Engine::Fock => exact.mean() / exact.total(),
        Engine::Gaussian => output.mean_photon(spec.marginal_mode)?,
    };
    let amp = probe.mean_amplitude(0)?;
    let probe_excess_photon = (probe.mean_photon(0)? - amp.norm_sqr()) / trace;
    Ok(ExperimentResult {
        engine,
        exact_distribution: exact,
        qcs_analytic,
        qcs_direct,
        qcs_two_copy,
        purity,
        mean_photon_out,
        probe_excess_photon,
        metadata: RunMetadata {
            sources: spec.sources.clone(),
            eta: profile.total,
            cutoffs,
            truncation_tol: options.truncation_tol,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{qcs_squeezed_lossy, qcs_thermal_lossy};

    #[test]
    fn text_round_trip() {
        for spec in [
            build_sv_experiment(0.653, 0.1, 0.201).unwrap(),
            build_thermal_experiment(1.156, -0.3, 0.24).unwrap(),
        ] {
            let text = spec.to_string();
            let parsed: CircuitSpec = text.parse().unwrap();
            assert_eq!(parsed, spec);
            assert_eq!(parsed.to_string(), text);
        }
    }

    #[test]
    fn thermal_text_layout() {
        let text = build_thermal_experiment(0.5, 0.0, 0.3).unwrap().to_string();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], format!("source 0 r=0.5 phi={}", FRAC_PI_2));
        assert_eq!(
            &lines[4..],
            [
                "bs symmetric 0 1",
                "bs symmetric 2 3",
                "loss 0 eta=0.3",
                "loss 2 eta=0.3",
                "bs balanced 0 2",
                "detect 0 2",
                "marginal 2"
            ]
        );
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = "source 0 r=0.5 phi=0\nbs sideways 0 1\n"
            .parse::<CircuitSpec>()
            .unwrap_err();
        assert!(matches!(err, ProtocolError::Parse { line: 2, .. }), "{err}");
        let err = "source 0 r=x phi=0\n".parse::<CircuitSpec>().unwrap_err();
        assert!(matches!(err, ProtocolError::Parse { line: 1, .. }));
        let err = "source 0 r=0.5 phi=0\nbs balanced 0 1\ndetect 0 1\n"
            .parse::<CircuitSpec>()
            .unwrap_err();
        assert!(matches!(err, ProtocolError::InvalidSpec(_)));
    }

    #[test]
    fn asymmetric_loss_is_rejected() {
        let text = "source 0 r=0.5 phi=0\nsource 1 r=0.5 phi=0\nloss 0 eta=0.5\nloss 1 eta=0.4\nbs balanced 0 1\ndetect 0 1\nmarginal 1\n";
        assert!(matches!(
            text.parse::<CircuitSpec>(),
            Err(ProtocolError::AsymmetricLoss { .. })
        ));
        let after = "source 0 r=0.5 phi=0\nsource 1 r=0.5 phi=0\nbs balanced 0 1\nloss 1 eta=0.4\ndetect 0 1\nmarginal 1\n";
        assert!(matches!(
            after.parse::<CircuitSpec>(),
            Err(ProtocolError::AsymmetricLoss { .. })
        ));
    }

    #[test]
    fn trivial_experiments_give_unit_qcs() {
        for spec in [
            build_sv_experiment(0.0, 0.0, 1.0).unwrap(),
            build_thermal_experiment(0.0, 0.0, 1.0).unwrap(),
        ] {
            for engine in [Engine::Gaussian, Engine::Fock] {
                let res = run_circuit(&spec, engine, &RunOptions::default()).unwrap();
                assert!((res.qcs_two_copy - 1.0).abs() < 1e-14);
                assert!((res.qcs_direct - 1.0).abs() < 1e-14);
                assert!((res.qcs_analytic - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn full_loss_leaves_vacuum() {
        for spec in [
            build_sv_experiment(0.8, 0.0, 0.0).unwrap(),
            build_thermal_experiment(0.8, 0.0, 0.0).unwrap(),
        ] {
            let res = run_circuit(&spec, Engine::Fock, &RunOptions::default()).unwrap();
            let p0 = res.exact_distribution.probs()[0];
            assert!((p0 - 1.0).abs() < 1e-9, "p0 = {p0}");
            assert!((res.exact_distribution.parity() - p0).abs() < 1e-15);
            assert!((res.qcs_two_copy - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn squeezed_run_matches_closed_form() {
        let spec = build_sv_experiment(0.653, 0.0, 0.2010).unwrap();
        let g = run_circuit(&spec, Engine::Gaussian, &RunOptions::default()).unwrap();
        let f = run_circuit(&spec, Engine::Fock, &RunOptions::default()).unwrap();
        let expected = qcs_squeezed_lossy(0.653, 0.2010).unwrap();
        assert!((expected - 0.9103).abs() < 1e-4);
        for r in [&g, &f] {
            assert!((r.qcs_analytic - expected).abs() < 1e-10);
            assert!(r.route_spread() < 1e-6, "spread {}", r.route_spread());
        }
        assert!((g.qcs_two_copy - f.qcs_two_copy).abs() < 1e-5);
        assert_eq!(f.metadata.cutoffs, vec![38, 38]);
    }

    #[test]
    fn thermal_run_matches_closed_form() {
        let spec = build_thermal_experiment(0.653, 0.0, 0.2564).unwrap();
        let f = run_circuit(&spec, Engine::Fock, &RunOptions::default()).unwrap();
        let expected = qcs_thermal_lossy(0.653f64.sinh().powi(2), 0.2564).unwrap();
        assert!((expected - 0.7990).abs() < 1e-4);
        assert!((f.qcs_two_copy - expected).abs() < 1e-6);
        assert!(f.route_spread() < 1e-6);
    }
}
