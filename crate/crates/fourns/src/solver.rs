//! Time integration (integrating-factor RK4), Picard iteration of the
//! Duhamel fixed point, conservation-law evaluation and residual checks.

use num_complex::Complex64;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::nonlinearity::{evaluate_nonlinearity, NonlinearitySpec};
use crate::propagator::{duhamel_integral, free_evolve, LinearSymbol, SpaceTimeTrace};
use crate::spectral::{derivative, ComplexField, SpectralGrid};

/// Parameters of one evolution run of `i u_t + nu u_xxxx + beta u_xx = G(u)`.
#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub symbol: LinearSymbol,
    pub spec: NonlinearitySpec,
    pub t_final: f64,
    pub dt: f64,
    pub record_every: usize,
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.dt.is_finite() || self.dt <= 0.0 || self.dt > self.t_final {
            return Err(Error::Parameter(format!(
                "need 0 < dt <= t_final, got dt={}, t_final={}",
                self.dt, self.t_final
            )));
        }
        if self.record_every == 0 {
            return Err(Error::Parameter("record_every must be >= 1".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "symbol": {"nu": self.symbol.nu, "beta": self.symbol.beta},
            "spec": self.spec.to_json(),
            "t_final": self.t_final,
            "dt": self.dt,
            "record_every": self.record_every,
        })
    }
}

/// Transport-style step-size heuristic for derivative nonlinearities:
/// `dt <= 0.5 / (max|xi|^gamma * m * ||u0||_inf^{m-1})`. Step-halving
/// certification, not this bound, is the accuracy statement.
pub fn recommended_dt(u0: &ComplexField, spec: &NonlinearitySpec) -> f64 {
    let xi_max = u0.grid().nyquist();
    let m = spec.max_degree() as f64;
    let amp = u0.linf_norm().max(1e-12);
    0.5 / (xi_max.powi(spec.gamma() as i32) * m * amp.powf(m - 1.0))
}

/// Nonlinear stage derivative in coefficient space: `N(u) = -i G(u)` mapped
/// through the dealiased evaluator.
fn nonlinear_rhs(
    grid: &Arc<SpectralGrid>,
    spec: &NonlinearitySpec,
    coeffs: &[Complex64],
) -> Result<Vec<Complex64>> {
    let field = ComplexField::from_coefficients(grid.clone(), coeffs.to_vec())?;
    let g = evaluate_nonlinearity(spec, &field)?;
    let mut out = g.coefficients();
    for c in out.iter_mut() {
        *c *= Complex64::new(0.0, -1.0);
    }
    Ok(out)
}

/// Integrating-factor (Lawson) RK4 evolution. The linear flow is applied
/// exactly through `exp(i theta(xi) t)`; only the nonlinearity is stepped.
/// Aborts with a diagnostic when the `L^2` norm grows by more than `1e6`.
pub fn simulate(u0: &ComplexField, cfg: &SolveConfig) -> Result<SpaceTimeTrace> {
    cfg.validate()?;
    let grid = u0.grid().clone();
    let steps = (cfg.t_final / cfg.dt).round() as usize;
    if steps == 0 {
        return Err(Error::Parameter("no steps to take".into()));
    }
    let dt = cfg.t_final / steps as f64;
    let n = grid.n();
    let half: Vec<Complex64> = (0..n)
        .map(|i| Complex64::from_polar(1.0, cfg.symbol.dispersion(grid.wavenumber(i)) * dt / 2.0))
        .collect();
    let full: Vec<Complex64> = half.iter().map(|e| e * e).collect();

    let norm0 = u0.l2_norm();
    let mut coeffs = u0.coefficients();
    let mut fields = vec![u0.clone()];
    for step in 0..steps {
        let k1 = nonlinear_rhs(&grid, &cfg.spec, &coeffs)?;
        let stage2: Vec<Complex64> = (0..n)
            .map(|i| half[i] * (coeffs[i] + 0.5 * dt * k1[i]))
            .collect();
        let k2 = nonlinear_rhs(&grid, &cfg.spec, &stage2)?;
        let stage3: Vec<Complex64> = (0..n)
            .map(|i| half[i] * coeffs[i] + 0.5 * dt * k2[i])
            .collect();
        let k3 = nonlinear_rhs(&grid, &cfg.spec, &stage3)?;
        let stage4: Vec<Complex64> = (0..n)
            .map(|i| full[i] * coeffs[i] + dt * half[i] * k3[i])
            .collect();
        let k4 = nonlinear_rhs(&grid, &cfg.spec, &stage4)?;
        coeffs = (0..n)
            .map(|i| {
                full[i] * coeffs[i]
                    + dt / 6.0 * (full[i] * k1[i] + 2.0 * half[i] * (k2[i] + k3[i]) + k4[i])
            })
            .collect();
        if (step + 1) % cfg.record_every == 0 || step + 1 == steps {
            let f = ComplexField::from_coefficients(grid.clone(), coeffs.clone())?;
            let norm = f.l2_norm();
            if norm > 1e6 * norm0 {
                return Err(Error::BlowUp {
                    step: step + 1,
                    norm,
                });
            }
            fields.push(f);
        }
    }
    // uniform stride except possibly the final partial stride; re-time on the
    // recorded lattice
    let recorded = fields.len();
    let trace_dt = cfg.t_final / (recorded - 1) as f64;
    SpaceTimeTrace::new(0.0, trace_dt, fields)
}

/// Convergence report of the Picard iteration of
/// `Psi[u](t) = e^{itL} u0 - i I[G(u)](t)`.
#[derive(Debug)]
pub struct PicardReport {
    pub iterates: Vec<SpaceTimeTrace>,
    /// `sup_t || u^{k+1}(t) - u^k(t) ||_{L2}`
    pub diff_norms: Vec<f64>,
    /// successive quotients of `diff_norms`
    pub ratios: Vec<f64>,
    /// two consecutive ratios above 1 were observed
    pub diverged: bool,
}

impl PicardReport {
    pub fn last(&self) -> &SpaceTimeTrace {
        self.iterates.last().expect("at least the free iterate")
    }
}

/// Iterate the Duhamel map starting from the free evolution; intended for
/// small data. Divergence is reported in the result, not raised.
pub fn picard_sequence(u0: &ComplexField, cfg: &SolveConfig, kmax: usize) -> Result<PicardReport> {
    cfg.validate()?;
    if kmax < 2 {
        return Err(Error::Parameter("kmax must be >= 2".into()));
    }
    let snaps = (cfg.t_final / cfg.dt).round() as usize + 1;
    let free_trace = SpaceTimeTrace::free(u0, cfg.symbol, 0.0, cfg.t_final, snaps)?;
    let mut iterates = vec![free_trace];
    let mut diff_norms = Vec::new();
    for _ in 0..kmax {
        let prev = iterates.last().unwrap();
        let forcing = prev.map(|f| {
            evaluate_nonlinearity(&cfg.spec, f).expect("nonlinearity evaluation in Picard stage")
        })?;
        let mut fields = Vec::with_capacity(prev.len());
        for j in 0..prev.len() {
            let t = prev.time(j);
            let lin = free_evolve(u0, t, cfg.symbol)?;
            let duh = duhamel_integral(&forcing, t, cfg.symbol)?;
            fields.push(lin.add(&duh.scale(Complex64::new(0.0, -1.0)))?);
        }
        let next = SpaceTimeTrace::new(0.0, prev.dt(), fields)?;
        let diff = (0..next.len())
            .map(|j| next.field(j).sub(prev.field(j)).unwrap().l2_norm())
            .fold(0.0, f64::max);
        diff_norms.push(diff);
        iterates.push(next);
    }
    let ratios: Vec<f64> = diff_norms
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
        .collect();
    let diverged = ratios.windows(2).any(|w| w[0] > 1.0 && w[1] > 1.0);
    Ok(PicardReport {
        iterates,
        diff_norms,
        ratios,
        diverged,
    })
}

/// The first three conserved functionals of the integrable vortex-filament
/// model. `phi2` mixes conjugation patterns and is reported as a complex
/// number; its drift is tracked in full.
#[derive(Debug, Clone, Copy)]
pub struct Invariants {
    pub phi0: f64,
    pub phi1: f64,
    pub phi2: Complex64,
}

pub fn invariants(u: &ComplexField) -> Invariants {
    let dx = u.grid().dx();
    let ux = derivative(u, 1);
    let uxx = derivative(u, 2);
    let mut phi0 = 0.0;
    let mut phi1 = 0.0;
    let mut phi2 = Complex64::new(0.0, 0.0);
    for i in 0..u.grid().n() {
        let v = u.values()[i];
        let vx = ux.values()[i];
        let vxx = uxx.values()[i];
        let a2 = v.norm_sqr();
        let ax2 = vx.norm_sqr();
        phi0 += 0.5 * a2;
        phi1 += 0.5 * ax2 - 0.125 * a2 * a2;
        phi2 += 0.5 * vxx.norm_sqr()
            + 0.75 * a2 * v.conj() * vxx
            + 0.125 * a2 * v * vxx.conj()
            + 0.625 * vx * vx * v.conj() * v.conj()
            + 0.75 * ax2 * a2
            + a2 * a2 * a2 / 16.0;
    }
    Invariants {
        phi0: phi0 * dx,
        phi1: phi1 * dx,
        phi2: phi2 * dx,
    }
}

/// Max over interior snapshots of
/// `|| i u_t + nu u_xxxx + beta u_xx - G(u) ||_{L2}`, with `u_t` by centered
/// 4th-order differences and spatial terms spectral.
pub fn pde_residual(trace: &SpaceTimeTrace, cfg: &SolveConfig) -> Result<f64> {
    if trace.len() < 5 {
        return Err(Error::Parameter(
            "residual needs at least 5 snapshots".into(),
        ));
    }
    let dt = trace.dt();
    let mut worst: f64 = 0.0;
    for j in 2..trace.len() - 2 {
        let mut ut = ComplexField::zeros(trace.grid().clone());
        for (off, w) in [(-2i64, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)] {
            let f = trace.field((j as i64 + off) as usize);
            for (a, b) in ut.values_mut().iter_mut().zip(f.values()) {
                *a += w / (12.0 * dt) * b;
            }
        }
        let u = trace.field(j);
        let lin = derivative(u, 4)
            .scale(Complex64::new(cfg.symbol.nu, 0.0))
            .add(&derivative(u, 2).scale(Complex64::new(cfg.symbol.beta, 0.0)))?;
        let g = evaluate_nonlinearity(&cfg.spec, u)?;
        let res = ut
            .scale(Complex64::new(0.0, 1.0))
            .add(&lin)?
            .sub(&g)?
            .l2_norm();
        worst = worst.max(res);
    }
    Ok(worst)
}

/// Binary trace format: header `(n: u64, period: f64, t0: f64, dt: f64,
/// count: u64)` then `count` row-major snapshots of `n` complex samples, all
/// little-endian 64-bit.
pub fn write_trace(trace: &SpaceTimeTrace, path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(&(trace.grid().n() as u64).to_le_bytes())?;
    w.write_all(&trace.grid().period().to_le_bytes())?;
    w.write_all(&trace.t0().to_le_bytes())?;
    w.write_all(&trace.dt().to_le_bytes())?;
    w.write_all(&(trace.len() as u64).to_le_bytes())?;
    for f in trace.fields() {
        for v in f.values() {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Write a trace plus the JSON sidecar describing its `SolveConfig`.
pub fn write_trace_with_config(
    trace: &SpaceTimeTrace,
    cfg: &SolveConfig,
    path: &Path,
) -> Result<()> {
    write_trace(trace, path)?;
    let sidecar = path.with_extension(format!(
        "{}json",
        path.extension()
            .map(|e| format!("{}.", e.to_string_lossy()))
            .unwrap_or_default()
    ));
    std::fs::write(&sidecar, serde_json::to_string_pretty(&cfg.to_json())?)?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<SpaceTimeTrace> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut b8 = [0u8; 8];
    let mut read_u64 = |r: &mut dyn Read| -> Result<u64> {
        r.read_exact(&mut b8)?;
        Ok(u64::from_le_bytes(b8))
    };
    let n = read_u64(&mut r)? as usize;
    let mut bf = [0u8; 8];
    let mut read_f64 = |r: &mut dyn Read| -> Result<f64> {
        r.read_exact(&mut bf)?;
        Ok(f64::from_le_bytes(bf))
    };
    let period = read_f64(&mut r)?;
    let t0 = read_f64(&mut r)?;
    let dt = read_f64(&mut r)?;
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    let count = u64::from_le_bytes(b) as usize;
    let grid = SpectralGrid::new(n, period)?;
    let mut fields = Vec::with_capacity(count);
    let mut buf = vec![0u8; 16 * n];
    for _ in 0..count {
        r.read_exact(&mut buf)?;
        let values = buf
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[0..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..16].try_into().unwrap()),
                )
            })
            .collect();
        fields.push(ComplexField::from_samples(grid.clone(), values)?);
    }
    SpaceTimeTrace::new(t0, dt, fields)
}
