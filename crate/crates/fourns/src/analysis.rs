//! Discrete space-time norms, modulation projections, frequency-restricted
//! bilinear operators and estimate-ratio evaluators.
//!
//! Mixed `L^infinity` readings are grid maxima (lower bounds of the
//! continuum sup); time integrals are uniform-step trapezoid sums.
//!
//! Rate measurements live on a torus while the estimates they probe are
//! whole-line statements. Free waves at frequency `N` travel at group speed
//! `~ 4 N^3` and re-enter the domain after one lap, so every estimate ratio
//! is measured over one transit of its fastest packet (`T = P / (4 N^3)` for
//! linear sweeps and the bilinear pairing, `T = P / (12 N^2 L)` for the
//! restricted pairing); each wave front then interacts exactly once, which is
//! the whole-line single-pass geometry.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::propagator::{free_evolve, LinearSymbol, SpaceTimeTrace};
use crate::spectral::{BumpProfile, ComplexField, Dyadic, MultiplierSymbol};
use crate::spectral::{fourier_multiplier, lp_project, Projection};

/// Lebesgue exponent, finite or infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    fn validate(self) -> Result<()> {
        match self {
            Exponent::Finite(p) if p.is_nan() || p < 1.0 => Err(Error::Parameter(format!(
                "Lebesgue exponent must be >= 1, got {p}"
            ))),
            _ => Ok(()),
        }
    }
}

/// Which variable carries the outer norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormOrder {
    /// `L^q_t (L^r_x)`
    TimeOuter,
    /// `L^r_x (L^q_t)`
    SpaceOuter,
}

/// Mixed space-time norm of a trace; `q` is always the temporal exponent and
/// `r` the spatial one, `order` picks the nesting.
pub fn mixed_norm(
    trace: &SpaceTimeTrace,
    order: NormOrder,
    q: Exponent,
    r: Exponent,
) -> Result<f64> {
    q.validate()?;
    r.validate()?;
    let dt = trace.dt();
    let nt = trace.len();
    let tw = |j: usize| if j == 0 || j == nt - 1 { 0.5 } else { 1.0 };
    match order {
        NormOrder::TimeOuter => {
            let inner: Vec<f64> = trace
                .fields()
                .iter()
                .map(|f| match r {
                    Exponent::Finite(p) => f.lp_norm(p),
                    Exponent::Infinity => f.linf_norm(),
                })
                .collect();
            Ok(match q {
                Exponent::Finite(p) => (0..nt)
                    .map(|j| tw(j) * dt * inner[j].powf(p))
                    .sum::<f64>()
                    .powf(1.0 / p),
                Exponent::Infinity => inner.iter().cloned().fold(0.0, f64::max),
            })
        }
        NormOrder::SpaceOuter => {
            let n = trace.grid().n();
            let dx = trace.grid().dx();
            let mut acc = 0.0f64;
            let mut sup = 0.0f64;
            for i in 0..n {
                let inner = match q {
                    Exponent::Finite(p) => (0..nt)
                        .map(|j| tw(j) * dt * trace.field(j).values()[i].norm().powf(p))
                        .sum::<f64>()
                        .powf(1.0 / p),
                    Exponent::Infinity => (0..nt)
                        .map(|j| trace.field(j).values()[i].norm())
                        .fold(0.0, f64::max),
                };
                match r {
                    Exponent::Finite(p) => acc += dx * inner.powf(p),
                    Exponent::Infinity => sup = sup.max(inner),
                }
            }
            Ok(match r {
                Exponent::Finite(p) => acc.powf(1.0 / p),
                Exponent::Infinity => sup,
            })
        }
    }
}

/// The five Lebesgue components of the frequency-localized solution norm and
/// their weighted aggregate
/// `L^inf_t L^2_x + N^{1/2} L^4_t L^inf_x + N^{-(1+eps)} L^2_x L^inf_t
///  + N^{-1/4} L^4_x L^inf_t + N^{3/2} L^inf_x L^2_t`.
#[derive(Debug, Clone, Copy)]
pub struct XnBreakdown {
    pub l_inf_t_l2x: f64,
    pub l4t_linfx: f64,
    pub l2x_linft: f64,
    pub l4x_linft: f64,
    pub linfx_l2t: f64,
    pub weighted_total: f64,
    pub n: Dyadic,
    pub eps: f64,
}

/// Compute the breakdown for a trace already localized to the shell `N`
/// (at least 99% of spectral mass in `[N/2, 2N]`, checked snapshot-wise).
pub fn xn_norm(trace: &SpaceTimeTrace, n: Dyadic, eps: f64) -> Result<XnBreakdown> {
    if !eps.is_finite() || eps <= 0.0 {
        return Err(Error::Parameter(format!("eps must be positive, got {eps}")));
    }
    let nv = n.value();
    for j in 0..trace.len() {
        let f = trace.field(j);
        if f.l2_norm() == 0.0 {
            continue;
        }
        let frac = f.spectral_mass_fraction(nv / 2.0, 2.0 * nv);
        if frac < 0.99 {
            return Err(Error::Resolution(format!(
                "snapshot {j} has only {:.1}% of its spectral mass in the shell N={}",
                100.0 * frac,
                n
            )));
        }
    }
    let l_inf_t_l2x = mixed_norm(trace, NormOrder::TimeOuter, Exponent::Infinity, Exponent::Finite(2.0))?;
    let l4t_linfx = mixed_norm(trace, NormOrder::TimeOuter, Exponent::Finite(4.0), Exponent::Infinity)?;
    let l2x_linft = mixed_norm(trace, NormOrder::SpaceOuter, Exponent::Infinity, Exponent::Finite(2.0))?;
    let l4x_linft = mixed_norm(trace, NormOrder::SpaceOuter, Exponent::Infinity, Exponent::Finite(4.0))?;
    let linfx_l2t = mixed_norm(trace, NormOrder::SpaceOuter, Exponent::Finite(2.0), Exponent::Infinity)?;
    let weighted_total = l_inf_t_l2x
        + nv.sqrt() * l4t_linfx
        + nv.powf(-(1.0 + eps)) * l2x_linft
        + nv.powf(-0.25) * l4x_linft
        + nv.powf(1.5) * linfx_l2t;
    Ok(XnBreakdown {
        l_inf_t_l2x,
        l4t_linfx,
        l2x_linft,
        l4x_linft,
        linfx_l2t,
        weighted_total,
        n,
        eps,
    })
}

/// Shell decomposition of a space-time function: the `P_{<=1}` block plus
/// dyadic shells.
pub struct ShellDecomposition {
    pub low: SpaceTimeTrace,
    pub shells: Vec<(Dyadic, SpaceTimeTrace)>,
}

impl ShellDecomposition {
    /// Decompose a trace with the standard projections.
    pub fn of_trace(trace: &SpaceTimeTrace, bump: BumpProfile) -> Result<Self> {
        let low = trace.map(|f| {
            lp_project(f, Projection::Low(Dyadic(0)), bump).expect("low block always resolvable")
        })?;
        let mut shells = Vec::new();
        for d in trace.grid().resolvable_shells() {
            if d.0 < 1 {
                continue;
            }
            let t = trace.map(|f| lp_project(f, Projection::Shell(d), bump).expect("resolvable"))?;
            let has_mass = t.fields().iter().any(|f| f.l2_norm() > 0.0);
            if has_mass {
                shells.push((d, t));
            }
        }
        Ok(ShellDecomposition {
            low: low.clone(),
            shells,
        })
    }
}

/// Dyadic `l^2` aggregate `sqrt(||low||_{X_1}^2 + sum N^{2s} ||P_N u||_{X_N}^2)`.
pub fn xs_norm(decomposition: &ShellDecomposition, s: f64, eps: f64) -> Result<f64> {
    let mut seen = std::collections::BTreeSet::new();
    for (d, _) in &decomposition.shells {
        if !seen.insert(d.0) {
            return Err(Error::Parameter(format!("duplicate shell N={d}")));
        }
    }
    let low = xn_low_norm(&decomposition.low, eps)?;
    let mut total = low * low;
    for (d, t) in &decomposition.shells {
        let b = xn_norm(t, *d, eps)?;
        total += d.value().powf(2.0 * s) * b.weighted_total * b.weighted_total;
    }
    Ok(total.sqrt())
}

/// `X_1` norm of the low block (same weights with `N = 1`, localization mass
/// checked against `|xi| <= 2`).
fn xn_low_norm(trace: &SpaceTimeTrace, eps: f64) -> Result<f64> {
    for j in 0..trace.len() {
        let f = trace.field(j);
        if f.l2_norm() == 0.0 {
            continue;
        }
        if f.spectral_mass_fraction(0.0, 2.0) < 0.99 {
            return Err(Error::Resolution(format!(
                "low block snapshot {j} not frequency-localized"
            )));
        }
    }
    let b = XnBreakdown {
        l_inf_t_l2x: mixed_norm(trace, NormOrder::TimeOuter, Exponent::Infinity, Exponent::Finite(2.0))?,
        l4t_linfx: mixed_norm(trace, NormOrder::TimeOuter, Exponent::Finite(4.0), Exponent::Infinity)?,
        l2x_linft: mixed_norm(trace, NormOrder::SpaceOuter, Exponent::Infinity, Exponent::Finite(2.0))?,
        l4x_linft: mixed_norm(trace, NormOrder::SpaceOuter, Exponent::Infinity, Exponent::Finite(4.0))?,
        linfx_l2t: mixed_norm(trace, NormOrder::SpaceOuter, Exponent::Finite(2.0), Exponent::Infinity)?,
        weighted_total: 0.0,
        n: Dyadic(0),
        eps,
    };
    Ok(b.l_inf_t_l2x + b.l4t_linfx + b.l2x_linft + b.l4x_linft + b.linfx_l2t)
}

// ---------------------------------------------------------------------------
// modulation analysis
// ---------------------------------------------------------------------------

/// Space-time spectrum of a temporally windowed trace, with the modulation
/// variable `tau - xi^4` attached to every lattice point.
pub struct ModulationSpectrum {
    /// `coeffs[m][k]`: coefficient at temporal frequency slot `m`, spatial slot `k`
    coeffs: Vec<Vec<Complex64>>,
    taus: Vec<f64>,
    xis: Vec<f64>,
    t0: f64,
    dt: f64,
    window: Vec<f64>,
}

/// Raised-cosine taper over the first and last 10% of the samples (flat over
/// the middle 80%).
pub fn tukey_window(len: usize) -> Vec<f64> {
    let mut w = vec![1.0; len];
    let edge = len / 10;
    for i in 0..edge {
        let v = 0.5 * (1.0 - (std::f64::consts::PI * i as f64 / edge as f64).cos());
        w[i] = v;
        w[len - 1 - i] = v;
    }
    w
}

impl ModulationSpectrum {
    /// Windowed 2-D transform of the trace. The temporal step must resolve
    /// the fastest dispersive phase present (`dt * max|xi|^4 < pi`), else the
    /// modulation readings alias.
    pub fn of_trace(trace: &SpaceTimeTrace) -> Result<Self> {
        let nt = trace.len();
        let n = trace.grid().n();
        // aliasing guard on the essential band
        let coeffs0 = trace.field(0).coefficients();
        let mut ximax = 0.0f64;
        let total: f64 = coeffs0.iter().map(|c| c.norm_sqr()).sum();
        for (idx, c) in coeffs0.iter().enumerate() {
            if c.norm_sqr() > 1e-20 * total {
                ximax = ximax.max(trace.grid().wavenumber(idx).abs());
            }
        }
        if trace.dt() * ximax.powi(4) >= std::f64::consts::PI {
            return Err(Error::Resolution(format!(
                "trace step {:.3e} aliases the dispersive phase of |xi| = {ximax:.1}",
                trace.dt()
            )));
        }
        let window = tukey_window(nt);
        // spatial transform per snapshot, then DFT in time (nt is arbitrary)
        let mut spatial: Vec<Vec<Complex64>> = Vec::with_capacity(nt);
        for j in 0..nt {
            let mut c = trace.field(j).coefficients();
            for v in c.iter_mut() {
                *v *= window[j];
            }
            spatial.push(c);
        }
        let span = nt as f64 * trace.dt();
        let dtau = 2.0 * std::f64::consts::PI / span;
        let mut coeffs = vec![vec![Complex64::new(0.0, 0.0); n]; nt];
        for (m, row) in coeffs.iter_mut().enumerate() {
            let jm = if m < nt / 2 {
                m as i64
            } else {
                m as i64 - nt as i64
            };
            let tau = jm as f64 * dtau;
            for (j, snap) in spatial.iter().enumerate() {
                let t = trace.time(j) - trace.t0();
                let phase = Complex64::from_polar(1.0, -tau * t);
                for k in 0..n {
                    row[k] += phase * snap[k];
                }
            }
            for v in row.iter_mut() {
                *v /= nt as f64;
            }
        }
        let taus = (0..nt)
            .map(|m| {
                let jm = if m < nt / 2 {
                    m as i64
                } else {
                    m as i64 - nt as i64
                };
                jm as f64 * dtau
            })
            .collect();
        let xis = trace.grid().wavenumbers();
        Ok(ModulationSpectrum {
            coeffs,
            taus,
            xis,
            t0: trace.t0(),
            dt: trace.dt(),
            window,
        })
    }

    pub fn tau_resolution(&self) -> f64 {
        self.taus[1] - self.taus[0]
    }

    /// A modulation scale is resolvable once it reaches the temporal
    /// frequency lattice spacing.
    fn check_resolvable(&self, a: Dyadic) -> Result<()> {
        if a.value() < self.tau_resolution() {
            return Err(Error::Resolution(format!(
                "modulation scale A={a} below the temporal lattice resolution {:.3}",
                self.tau_resolution()
            )));
        }
        Ok(())
    }

    /// Mass fraction with `|tau - xi^4| >= floor`.
    pub fn mass_above(&self, floor: f64) -> f64 {
        let mut above = 0.0;
        let mut total = 0.0;
        for (m, row) in self.coeffs.iter().enumerate() {
            for (k, c) in row.iter().enumerate() {
                let mass = c.norm_sqr();
                total += mass;
                if (self.taus[m] - self.xis[k].powi(4)).abs() >= floor {
                    above += mass;
                }
            }
        }
        if total == 0.0 {
            0.0
        } else {
            above / total
        }
    }

    /// `||Q_A u||_{L2_{t,x}}`-style mass of one modulation shell (masks
    /// applied to the windowed spectrum; Plancherel measure included).
    pub fn shell_mass(&self, a: Dyadic, bump: BumpProfile) -> Result<f64> {
        self.check_resolvable(a)?;
        Ok(self.masked_mass(|m| bump.psi(m.abs(), a)))
    }

    pub fn low_mass(&self, a: Dyadic, bump: BumpProfile) -> Result<f64> {
        self.check_resolvable(a)?;
        Ok(self.masked_mass(|m| bump.phi(2.0 * m.abs() / a.value())))
    }

    fn masked_mass(&self, mask: impl Fn(f64) -> f64) -> f64 {
        let nt = self.coeffs.len();
        let n = self.xis.len();
        let span = nt as f64 * self.dt;
        let period = 2.0 * std::f64::consts::PI / (self.xis[1] - self.xis[0]).abs();
        let mut acc = 0.0;
        for (m, row) in self.coeffs.iter().enumerate() {
            for (k, c) in row.iter().enumerate() {
                let w = mask(self.taus[m] - self.xis[k].powi(4));
                acc += (w * w) * c.norm_sqr();
            }
        }
        let _ = n;
        (acc * span * period).sqrt()
    }

    /// Project one modulation shell and return the windowed trace.
    pub fn project(&self, a: Dyadic, bump: BumpProfile, trace: &SpaceTimeTrace) -> Result<SpaceTimeTrace> {
        self.check_resolvable(a)?;
        self.project_mask(|m| bump.psi(m.abs(), a), trace)
    }

    /// Project the low-modulation block `phi(2|tau - xi^4| / A)`; together
    /// with the shells from `A` upward it reconstructs the windowed trace.
    pub fn project_low(&self, a: Dyadic, bump: BumpProfile, trace: &SpaceTimeTrace) -> Result<SpaceTimeTrace> {
        self.check_resolvable(a)?;
        self.project_mask(|m| bump.phi(2.0 * m.abs() / a.value()), trace)
    }

    fn project_mask(
        &self,
        mask: impl Fn(f64) -> f64,
        trace: &SpaceTimeTrace,
    ) -> Result<SpaceTimeTrace> {
        let nt = self.coeffs.len();
        let n = self.xis.len();
        let mut masked = vec![vec![Complex64::new(0.0, 0.0); n]; nt];
        for (m, row) in self.coeffs.iter().enumerate() {
            for k in 0..n {
                masked[m][k] = row[k] * mask(self.taus[m] - self.xis[k].powi(4));
            }
        }
        // inverse temporal DFT at the snapshot times
        let mut fields = Vec::with_capacity(nt);
        for j in 0..nt {
            let t = j as f64 * self.dt;
            let mut c = vec![Complex64::new(0.0, 0.0); n];
            for (m, row) in masked.iter().enumerate() {
                let phase = Complex64::from_polar(1.0, self.taus[m] * t);
                for k in 0..n {
                    c[k] += phase * row[k];
                }
            }
            fields.push(ComplexField::from_coefficients(trace.grid().clone(), c)?);
        }
        SpaceTimeTrace::new(self.t0, self.dt, fields)
    }

    /// The windowed trace itself (reference for reconstruction checks).
    pub fn windowed_trace(&self, trace: &SpaceTimeTrace) -> Result<SpaceTimeTrace> {
        let fields = (0..trace.len())
            .map(|j| trace.field(j).scale(Complex64::new(self.window[j], 0.0)))
            .collect();
        SpaceTimeTrace::new(self.t0, self.dt, fields)
    }
}

/// Besov-type modulation norm: `(sum_A A^{bq} ||Q_A u||^q)^{1/q}` over the
/// dyadic shells that the temporal lattice resolves.
pub fn xbq_norm(trace: &SpaceTimeTrace, b: f64, q: Exponent, bump: BumpProfile) -> Result<f64> {
    q.validate()?;
    let spec = ModulationSpectrum::of_trace(trace)?;
    let dtau = spec.tau_resolution();
    let mut max_mod = 0.0f64;
    for (m, row) in spec.coeffs.iter().enumerate() {
        for (k, c) in row.iter().enumerate() {
            if c.norm_sqr() > 0.0 {
                max_mod = max_mod.max((spec.taus[m] - spec.xis[k].powi(4)).abs());
            }
        }
    }
    let lo = Dyadic::ceil_of(dtau.max(1e-12)).0;
    let hi = Dyadic::floor_of(max_mod.max(dtau) * 2.0).0 + 1;
    let mut acc = 0.0f64;
    let mut sup = 0.0f64;
    for j in lo..=hi.max(lo) {
        let a = Dyadic(j);
        let mass = spec.shell_mass(a, bump)?;
        match q {
            Exponent::Finite(p) => acc += a.value().powf(b * p) * mass.powf(p),
            Exponent::Infinity => sup = sup.max(a.value().powf(b) * mass),
        }
    }
    Ok(match q {
        Exponent::Finite(p) => acc.powf(1.0 / p),
        Exponent::Infinity => sup,
    })
}

// ---------------------------------------------------------------------------
// bilinear restriction operators
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RestrictionSign {
    /// mask `psi_L(xi_1 + xi_2)` (the output frequency)
    Plus,
    /// mask `psi_L(xi_1 - xi_2)` (the pair separation)
    Minus,
}

/// Frequency-restricted product `R_L^{+-}(f, g)`: the direct double sum over
/// coefficient pairs with the dyadic mask on `xi_1 +- xi_2`. Exactness over
/// speed; contributions that would leave the lattice are an error.
pub fn rl_bilinear(
    f: &ComplexField,
    g: &ComplexField,
    l: Dyadic,
    sign: RestrictionSign,
    bump: BumpProfile,
) -> Result<ComplexField> {
    f.check_same_grid(g)?;
    let grid = f.grid().clone();
    let n = grid.n();
    let cf = f.coefficients();
    let cg = g.coefficients();
    // FFT round trips leave O(1e-16) junk on every mode; keep only
    // coefficients that carry actual content
    let nz = |c: &[Complex64]| -> Vec<(i64, Complex64)> {
        let peak = c.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let cut = 1e-13 * peak;
        c.iter()
            .enumerate()
            .filter(|(idx, v)| *idx != n / 2 && v.norm() > cut)
            .map(|(idx, v)| (grid.mode_index(idx), *v))
            .collect()
    };
    let fs = nz(&cf);
    let gs = nz(&cg);
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    let dxi = grid.delta_xi();
    for &(j1, c1) in &fs {
        for &(j2, c2) in &gs {
            let arg = match sign {
                RestrictionSign::Plus => (j1 + j2) as f64 * dxi,
                RestrictionSign::Minus => (j1 - j2) as f64 * dxi,
            };
            let w = bump.psi(arg.abs(), l);
            if w == 0.0 {
                continue;
            }
            let k = j1 + j2;
            match grid.slot_of_mode(k) {
                Some(slot) if slot != n / 2 => out[slot] += w * c1 * c2,
                _ => {
                    return Err(Error::Resolution(format!(
                        "restricted product mode {k} leaves the lattice"
                    )))
                }
            }
        }
    }
    ComplexField::from_coefficients(grid, out)
}

// ---------------------------------------------------------------------------
// estimate ratios
// ---------------------------------------------------------------------------

/// One transit of a frequency-`N` packet around the torus: `P / (4 N^3)`,
/// capped at `cap`.
pub fn transit_window(period: f64, n: Dyadic, cap: f64) -> f64 {
    (period / (4.0 * n.value().powi(3))).min(cap)
}

/// Transit window of the `R_L`-restricted pairing at shell `N`:
/// `P / (12 N^2 L)`, capped.
pub fn restricted_transit_window(period: f64, n: Dyadic, l: Dyadic, cap: f64) -> f64 {
    (period / (12.0 * n.value().powi(2) * l.value())).min(cap)
}

/// `L^2_{t,x}` norm of the pointwise product of two free evolutions over
/// `[0, t_end]` sampled at `snapshots` uniform times.
pub fn bilinear_l2tx(
    f: &ComplexField,
    g: &ComplexField,
    t_end: f64,
    snapshots: usize,
) -> Result<f64> {
    f.check_same_grid(g)?;
    if snapshots < 2 {
        return Err(Error::Parameter("need at least 2 snapshots".into()));
    }
    let sym = LinearSymbol::pure_fourth();
    let dt = t_end / (snapshots - 1) as f64;
    let dx = f.grid().dx();
    let mut acc = 0.0;
    for j in 0..snapshots {
        let t = j as f64 * dt;
        let uf = free_evolve(f, t, sym)?;
        let ug = free_evolve(g, t, sym)?;
        let w = if j == 0 || j == snapshots - 1 { 0.5 } else { 1.0 };
        let prod_sq: f64 = uf
            .values()
            .iter()
            .zip(ug.values())
            .map(|(a, b)| (a * b).norm_sqr())
            .sum();
        acc += w * dt * dx * prod_sq;
    }
    Ok(acc.sqrt())
}

/// Linear dispersive estimates measured per shell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinearEstimateKind {
    /// `|| |dx|^{2/q} e^{itL} phi ||_{L^q_t L^r_x} <~ ||phi||` for admissible
    /// `(q, r)` with `2/q + 1/r = 1/2`.
    Strichartz { q: f64, r: f64 },
    /// `|| |dx|^{3/2} e^{itL} phi ||_{L^inf_x L^2_t} <~ ||phi||`
    Kato,
    /// `|| |dx|^{-1/4} e^{itL} phi ||_{L^4_x L^inf_t} <~ ||phi||`
    KenigRuiz,
    /// `|| <dx>^{-(1+eps)} e^{itL} phi ||_{L^2_x L^inf_t} <~ ||phi||`
    Maximal { eps: f64 },
}

/// Measured left-hand side over the estimate's right-hand-side weight for
/// one linear estimate at shell `N`, over the
/// packet's transit window.
pub fn linear_estimate_ratio(
    kind: LinearEstimateKind,
    phi: &ComplexField,
    n: Dyadic,
    snapshots: usize,
) -> Result<f64> {
    let grid = phi.grid().clone();
    if !grid.shell_resolvable(n) {
        return Err(Error::Resolution(format!("shell N={n} beyond this grid")));
    }
    let denom = phi.l2_norm();
    if denom == 0.0 {
        return Err(Error::Parameter("zero data".into()));
    }
    let t_end = transit_window(grid.period(), n, 1.0);
    let sym = LinearSymbol::pure_fourth();
    let weighted = |sym_mult: MultiplierSymbol| -> Result<ComplexField> {
        fourier_multiplier(phi, sym_mult)
    };
    let lhs = match kind {
        LinearEstimateKind::Strichartz { q, r } => {
            if (2.0 / q + 1.0 / r - 0.5).abs() > 1e-9 {
                return Err(Error::Parameter(format!(
                    "(q, r) = ({q}, {r}) is not admissible"
                )));
            }
            let w = weighted(MultiplierSymbol::FracHomogeneous(2.0 / q))?;
            let trace = SpaceTimeTrace::free(&w, sym, 0.0, t_end, snapshots)?;
            let rexp = if r.is_finite() {
                Exponent::Finite(r)
            } else {
                Exponent::Infinity
            };
            mixed_norm(&trace, NormOrder::TimeOuter, Exponent::Finite(q), rexp)?
        }
        LinearEstimateKind::Kato => {
            // exact pair-sum for the inner time integral: no snapshot bias
            let w = weighted(MultiplierSymbol::FracHomogeneous(1.5))?;
            kato_linfx_l2t(&w, t_end)?
        }
        LinearEstimateKind::KenigRuiz => {
            let w = weighted(MultiplierSymbol::FracHomogeneous(-0.25))?;
            let trace = SpaceTimeTrace::free(&w, sym, 0.0, t_end, snapshots)?;
            mixed_norm(&trace, NormOrder::SpaceOuter, Exponent::Infinity, Exponent::Finite(4.0))?
        }
        LinearEstimateKind::Maximal { eps } => {
            let w = weighted(MultiplierSymbol::FracInhomogeneous(-(1.0 + eps)))?;
            let trace = SpaceTimeTrace::free(&w, sym, 0.0, t_end, snapshots)?;
            mixed_norm(&trace, NormOrder::SpaceOuter, Exponent::Infinity, Exponent::Finite(2.0))?
        }
    };
    Ok(lhs / denom)
}

/// `|| w ||_{L^inf_x L^2_t([0, T])}` for the free evolution of `w`, by the
/// closed-form time integral of each coefficient pair
/// (`int_0^T e^{i d t} dt = T e^{i d T/2} sinc(d T / 2)`), assembled over
/// lattice offsets and inverted to `x` exactly.
fn kato_linfx_l2t(w: &ComplexField, t_end: f64) -> Result<f64> {
    let grid = w.grid().clone();
    let n = grid.n();
    let coeffs = w.coefficients();
    let peak = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let nz: Vec<(i64, f64, Complex64)> = coeffs
        .iter()
        .enumerate()
        .filter(|(idx, c)| *idx != n / 2 && c.norm() > 1e-13 * peak)
        .map(|(idx, c)| (grid.mode_index(idx), grid.wavenumber(idx), *c))
        .collect();
    let sinc = |z: f64| if z.abs() < 1e-8 { 1.0 } else { z.sin() / z };
    let mut offsets = vec![Complex64::new(0.0, 0.0); n];
    for &(j1, xi1, c1) in &nz {
        for &(j2, xi2, c2) in &nz {
            let d = xi1.powi(4) - xi2.powi(4);
            let e = t_end * Complex64::from_polar(1.0, d * t_end / 2.0) * sinc(d * t_end / 2.0);
            let off = j1 - j2;
            if let Some(slot) = grid.slot_of_mode(off) {
                offsets[slot] += c1 * c2.conj() * e;
            }
            // offsets beyond the lattice fold back; with shell data the
            // offset range is within one band width and never folds
        }
    }
    let profile = ComplexField::from_coefficients(grid, offsets)?;
    let sup = profile
        .values()
        .iter()
        .map(|v| v.re.max(0.0))
        .fold(0.0, f64::max);
    Ok(sup.sqrt())
}

/// Frequency-separated product ratio: shell-`N1` times shell-`N2` free waves
/// in `L^2_{t,x}` over one transit, against `N1^{-3/2} ||f|| ||g||`.
///
/// Requires `N1 >= 4 N2`, the smallest dyadic gap at which the two smooth
/// shell supports `(N/2, 2N)` are disjoint.
pub fn bilinear_estimate_ratio(
    f: &ComplexField,
    g: &ComplexField,
    n1: Dyadic,
    n2: Dyadic,
    snapshots: usize,
) -> Result<f64> {
    if n1.value() < 4.0 * n2.value() {
        return Err(Error::Parameter(format!(
            "bilinear estimate needs separated shells N1 >= 4 N2, got N1={n1}, N2={n2}"
        )));
    }
    let t_end = transit_window(f.grid().period(), n1, 1.0);
    let lhs = bilinear_l2tx(f, g, t_end, snapshots)?;
    Ok(lhs / (n1.value().powf(-1.5) * f.l2_norm() * g.l2_norm()))
}

/// Refined ratio: `R_L^{+-}` of two shell-`N` free waves against
/// `N1^{-1} L^{-1/2} ||f|| ||g||`, over the restricted transit window.
/// For the `+` sign the second factor is conjugated (its spectrum reflects),
/// matching the paired-frequency configuration of the estimate.
#[allow(clippy::too_many_arguments)]
pub fn refined_bilinear_ratio(
    f: &ComplexField,
    g: &ComplexField,
    n1: Dyadic,
    n2: Dyadic,
    l: Dyadic,
    sign: RestrictionSign,
    bump: BumpProfile,
    snapshots: usize,
) -> Result<f64> {
    if n1.value() < n2.value() || n2.value() < l.value() {
        return Err(Error::Parameter(format!(
            "refined estimate needs N1 >= N2 >= L, got N1={n1}, N2={n2}, L={l}"
        )));
    }
    if snapshots < 2 {
        return Err(Error::Parameter("need at least 2 snapshots".into()));
    }
    let sym = LinearSymbol::pure_fourth();
    let t_end = restricted_transit_window(f.grid().period(), n1, l, 1.0);
    let dt = t_end / (snapshots - 1) as f64;
    let dx = f.grid().dx();
    let mut acc = 0.0;
    for j in 0..snapshots {
        let t = j as f64 * dt;
        let uf = free_evolve(f, t, sym)?;
        let ug = free_evolve(g, t, sym)?;
        let second = match sign {
            RestrictionSign::Plus => ug.conj(),
            RestrictionSign::Minus => ug,
        };
        let prod = rl_bilinear(&uf, &second, l, sign, bump)?;
        let w = if j == 0 || j == snapshots - 1 { 0.5 } else { 1.0 };
        acc += w * dt * dx * prod.values().iter().map(|v| v.norm_sqr()).sum::<f64>();
    }
    let lhs = acc.sqrt();
    Ok(lhs / (n1.value().powf(-1.0) * l.value().powf(-0.5) * f.l2_norm() * g.l2_norm()))
}
