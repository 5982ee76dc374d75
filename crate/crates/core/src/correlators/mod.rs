//! Mean fields, Gaussian fluctuation moments and intensity correlations.

pub mod fock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{FieldState, LocalOscillator};
use crate::phasor::FREQ_EPS;

pub use fock::{fock_oracle_moments, oracle_self_test, PairMoments};

/// Strong-LO requirement: ℰ_l² ≥ this × total signal flux.
pub const STRONG_LO_RATIO: f64 = 100.0;

/// Normally-ordered second moments of the mode fluctuations.
///
/// `normal[k][k'] = ⟨Δa†_k Δa_k'⟩`, `anomalous[k][k'] = ⟨Δa_k Δa_k'⟩`, indexed
/// by the state's mode order.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    dim: usize,
    normal: Vec<Complex64>,
    anomalous: Vec<Complex64>,
    /// Flux normalization of one discrete mode (Hz).
    bandwidth: f64,
}

impl MomentTable {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            normal: vec![Complex64::new(0.0, 0.0); dim * dim],
            anomalous: vec![Complex64::new(0.0, 0.0); dim * dim],
            bandwidth: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn normal(&self, k: usize, kp: usize) -> Complex64 {
        self.normal[k * self.dim + kp]
    }

    pub fn anomalous(&self, k: usize, kp: usize) -> Complex64 {
        self.anomalous[k * self.dim + kp]
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn is_zero(&self) -> bool {
        self.normal.iter().chain(&self.anomalous).all(|c| c.norm() == 0.0)
    }

    /// Fluctuation photon flux Σ_k ⟨Δa†_k Δa_k⟩ × bandwidth.
    pub fn fluctuation_flux(&self) -> f64 {
        (0..self.dim).map(|k| self.normal(k, k).re).sum::<f64>() * self.bandwidth
    }

    /// 2×2 block for modes `a`, `b`.
    pub fn pair_block(&self, a: usize, b: usize) -> PairMoments {
        PairMoments {
            n_a: self.normal(a, a).re,
            n_b: self.normal(b, b).re,
            normal_ab: self.normal(a, b),
            anomalous_ab: self.anomalous(a, b),
            anomalous_aa: self.anomalous(a, a),
            anomalous_bb: self.anomalous(b, b),
        }
    }

    /// Hermiticity, symmetry, positivity and the Heisenberg bound
    /// `|⟨ΔaΔa'⟩|² ≤ ⟨Δa†Δa⟩(⟨Δa'†Δa'⟩ + 1)`.
    pub fn check_invariants(&self, tol: f64) -> std::result::Result<(), String> {
        for k in 0..self.dim {
            let d = self.normal(k, k);
            if d.im.abs() > tol || d.re < -tol {
                return Err(format!("diagonal entry {k} not real non-negative: {d}"));
            }
            for kp in 0..self.dim {
                if (self.normal(k, kp) - self.normal(kp, k).conj()).norm() > tol {
                    return Err(format!("normal moments not Hermitian at ({k},{kp})"));
                }
                if (self.anomalous(k, kp) - self.anomalous(kp, k)).norm() > tol {
                    return Err(format!("anomalous moments not symmetric at ({k},{kp})"));
                }
                if k != kp {
                    let lhs = self.anomalous(k, kp).norm_sqr();
                    let rhs = self.normal(k, k).re * (self.normal(kp, kp).re + 1.0);
                    if lhs > rhs + tol {
                        return Err(format!("Heisenberg bound violated at ({k},{kp}): {lhs} > {rhs}"));
                    }
                }
            }
        }
        Ok(())
    }

    fn set_pair(&mut self, a: usize, b: usize, m: &PairMoments) {
        let d = self.dim;
        self.normal[a * d + a] = Complex64::new(m.n_a, 0.0);
        self.normal[b * d + b] = Complex64::new(m.n_b, 0.0);
        self.normal[a * d + b] = m.normal_ab;
        self.normal[b * d + a] = m.normal_ab.conj();
        self.anomalous[a * d + b] = m.anomalous_ab;
        self.anomalous[b * d + a] = m.anomalous_ab;
        self.anomalous[a * d + a] = m.anomalous_aa;
        self.anomalous[b * d + b] = m.anomalous_bb;
    }
}

/// Closed-form two-mode squeezed vacuum moments (Bogoliubov transform
/// `a → a cosh r + e^{iφ} b† sinh r`).
pub fn closed_form_pair(r: f64, phi: f64) -> PairMoments {
    let (s, c) = (r.sinh(), r.cosh());
    let zero = Complex64::new(0.0, 0.0);
    PairMoments {
        n_a: s * s,
        n_b: s * s,
        normal_ab: zero,
        anomalous_ab: Complex64::from_polar(c * s, phi),
        anomalous_aa: zero,
        anomalous_bb: zero,
    }
}

/// `⟨Ê_t^{(+)}(t)⟩` for the state's mean amplitudes.
pub fn mean_field(state: &FieldState, t: f64) -> Complex64 {
    state.mean_field_phasors().eval(t)
}

/// Fluctuation moments of the input under the state's hypothesis.
///
/// Under [`Hypothesis::ThreeFields`](crate::model::Hypothesis) the image
/// fields are independent of the signal field, so squeeze pairs whose
/// members sit in different fields contribute nothing unless
/// `cross_field_correlations` is set.
pub fn second_moments(state: &FieldState) -> Result<MomentTable> {
    let mut table = MomentTable::zeros(state.modes().len());
    let Some(sq) = state.squeeze() else {
        return Ok(table);
    };
    table.bandwidth = sq.mode_bandwidth;
    for pair in &sq.pairs {
        let a = state.mode_index(pair.a).ok_or(Error::UnknownMode(pair.a))?;
        let b = state.mode_index(pair.b).ok_or(Error::UnknownMode(pair.b))?;
        if pair.r == 0.0 {
            continue;
        }
        if state.field_of(a) != state.field_of(b) && !sq.cross_field_correlations {
            continue;
        }
        table.set_pair(a, b, &closed_form_pair(pair.r, pair.phi));
    }
    Ok(table)
}

/// Photodetector behind output port 1 or 2 of the beamsplitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Port {
    One,
    Two,
}

impl Port {
    /// Sign of the interference term in `Î_{1,2}`.
    pub fn sign(self) -> f64 {
        match self {
            Port::One => 1.0,
            Port::Two => -1.0,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            1 => Some(Port::One),
            2 => Some(Port::Two),
            _ => None,
        }
    }
}

/// One term `c·exp(-iμt − iνι)` of a two-time correlation function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationTerm {
    pub coef: Complex64,
    /// Rate of change with absolute time t (rad/s).
    pub mu: f64,
    /// Rate of change with the lag ι (rad/s).
    pub nu: f64,
}

/// A two-time correlation function as a finite sum of [`CorrelationTerm`]s.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorrelationSeries {
    terms: Vec<CorrelationTerm>,
}

impl CorrelationSeries {
    fn push(&mut self, coef: Complex64, mu: f64, nu: f64) {
        if coef.norm() == 0.0 {
            return;
        }
        if let Some(t) = self
            .terms
            .iter_mut()
            .find(|t| (t.mu - mu).abs() <= FREQ_EPS && (t.nu - nu).abs() <= FREQ_EPS)
        {
            t.coef += coef;
        } else {
            self.terms.push(CorrelationTerm { coef, mu, nu });
        }
    }

    pub fn terms(&self) -> &[CorrelationTerm] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| CorrelationTerm { coef: t.coef * k, ..*t })
                .collect(),
        }
    }

    /// Complex value at `(t, ι)`. The imaginary part vanishes for the
    /// intensity correlations built here.
    pub fn eval_complex(&self, t: f64, lag: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|c| c.coef * Complex64::from_polar(1.0, -c.mu * t - c.nu * lag))
            .sum()
    }

    pub fn eval(&self, t: f64, lag: f64) -> f64 {
        if self.terms.is_empty() {
            return 0.0;
        }
        self.eval_complex(t, lag).re
    }

    /// Terms that survive averaging over absolute time.
    pub fn stationary(&self) -> impl Iterator<Item = &CorrelationTerm> {
        self.terms.iter().filter(|t| t.mu.abs() <= FREQ_EPS)
    }
}

/// Rejects inputs outside the strong-LO regime.
pub fn check_strong_lo(state: &FieldState, lo: &LocalOscillator, moments: &MomentTable) -> Result<()> {
    let signal_flux = state.coherent_flux() + moments.fluctuation_flux();
    if lo.flux() < STRONG_LO_RATIO * signal_flux {
        return Err(Error::WeakLo { lo_flux: lo.flux(), signal_flux });
    }
    Ok(())
}

/// Leading-order (𝒪(ℰ_l²)) intensity-fluctuation correlation
/// `λ_ij(t, ι) = ⟨𝒯:ΔÎ_i(t)ΔÎ_j(t+ι):⟩` as a correlation series.
///
/// With `ΔÊ^{(+)}(t) = i√B Σ_k Δa_k e^{−iω_k t}` and the LO phasors
/// `ℰ^{(+)}(t) = Σ_a L_a e^{−iω_a t}`, the four normally-ordered products are
/// expanded term by term. The port signs enter as `s_i s_j`.
pub fn lambda_series(
    state: &FieldState,
    lo: &LocalOscillator,
    i: Port,
    j: Port,
) -> Result<CorrelationSeries> {
    let moments = second_moments(state)?;
    check_strong_lo(state, lo, &moments)?;
    Ok(bracket_series(state, lo, &moments).scaled(i.sign() * j.sign() / 4.0))
}

/// The four-term bracket (without the 1/4 and port signs).
pub(crate) fn bracket_series(
    state: &FieldState,
    lo: &LocalOscillator,
    moments: &MomentTable,
) -> CorrelationSeries {
    let mut out = CorrelationSeries::default();
    if moments.is_zero() {
        return out;
    }
    let b = moments.bandwidth();
    let lo_terms = lo.field();
    let w: Vec<f64> = state.modes().iter().map(|m| m.detuning).collect();
    let dim = moments.dim();
    // exponent i(A t + C t'), t' = t + ι  ->  μ = −(A + C), ν = −C
    let mut add = |coef: Complex64, a: f64, c: f64| out.push(coef, -(a + c), -c);
    for la in lo_terms.terms() {
        for lb in lo_terms.terms() {
            let (wa, wb) = (la.freq, lb.freq);
            for k in 0..dim {
                for kp in 0..dim {
                    let n = moments.normal(k, kp);
                    let m = moments.anomalous(k, kp);
                    if n.norm() != 0.0 {
                        add(la.coef * lb.coef.conj() * n * b, w[k] - wa, wb - w[kp]);
                        add(la.coef.conj() * lb.coef * n * b, wa - w[kp], w[k] - wb);
                    }
                    if m.norm() != 0.0 {
                        add(la.coef * lb.coef * m.conj() * b, w[k] - wa, w[kp] - wb);
                        add(la.coef.conj() * lb.coef.conj() * m * b, wa - w[kp], wb - w[k]);
                    }
                }
            }
        }
    }
    out
}

/// `λ_ij(t, ι)` evaluated at a point. Exactly zero for coherent inputs.
pub fn lambda_ij(
    state: &FieldState,
    lo: &LocalOscillator,
    i: Port,
    j: Port,
    t: f64,
    lag: f64,
) -> Result<f64> {
    Ok(lambda_series(state, lo, i, j)?.eval(t, lag))
}
