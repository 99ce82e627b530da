use crate::error::{Error, Result};

/// Right-hand side of `d' = g(t, d)`.
pub trait Rhs {
    fn dim(&self) -> usize;
    fn eval(&mut self, t: f64, y: &[f64], dy: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    /// Embedded Dormand-Prince 5(4) with step-size control and dense output.
    DormandPrince,
    /// Classical fourth-order Runge-Kutta. Each sample interval is split into
    /// the fewest equal steps no longer than `step`.
    Rk4 { step: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub scheme: Scheme,
    pub rtol: f64,
    pub atol: f64,
    /// First trial step; estimated when absent.
    pub h_init: Option<f64>,
    pub h_max: Option<f64>,
    pub max_steps: usize,
}

pub const DEFAULT_RTOL: f64 = 1e-8;
pub const DEFAULT_ATOL: f64 = 1e-11;

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            scheme: Scheme::DormandPrince,
            rtol: DEFAULT_RTOL,
            atol: DEFAULT_ATOL,
            h_init: None,
            h_max: None,
            max_steps: 100_000_000,
        }
    }
}

impl IntegratorOptions {
    pub fn with_tol(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    pub fn rk4(step: f64) -> Self {
        Self {
            scheme: Scheme::Rk4 { step },
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self.scheme {
            Scheme::DormandPrince => {
                self.rtol > 0.0 && self.atol >= 0.0 && self.rtol.is_finite() && self.atol.is_finite()
            }
            Scheme::Rk4 { step } => step > 0.0 && step.is_finite(),
        };
        if !ok {
            return Err(Error::invalid("integrator tolerances and step must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct IntegratorStats {
    pub steps: usize,
    pub rejects: usize,
    pub rhs_evals: usize,
}

/// States at each of `samples` (the first sample is the initial time).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub stats: IntegratorStats,
}

pub fn check_samples(samples: &[f64]) -> Result<()> {
    if samples.len() < 2 {
        return Err(Error::invalid("need an initial time and at least one sample"));
    }
    if samples.iter().any(|t| !t.is_finite()) || samples.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("sample times must be finite and strictly increasing"));
    }
    Ok(())
}

pub fn solve<R: Rhs + ?Sized>(
    rhs: &mut R,
    y0: &[f64],
    samples: &[f64],
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    opts.validate()?;
    check_samples(samples)?;
    if y0.len() != rhs.dim() {
        return Err(Error::DimensionMismatch {
            expected: rhs.dim(),
            found: y0.len(),
        });
    }
    match opts.scheme {
        Scheme::DormandPrince => dopri5(rhs, y0, samples, opts),
        Scheme::Rk4 { step } => rk4(rhs, y0, samples, step),
    }
}

fn rk4<R: Rhs + ?Sized>(rhs: &mut R, y0: &[f64], samples: &[f64], step: f64) -> Result<Trajectory> {
    let n = y0.len();
    let mut y = y0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut stats = IntegratorStats::default();
    let mut states = vec![y.clone()];
    for w in samples.windows(2) {
        let span = w[1] - w[0];
        let m = (span / step).ceil().max(1.0) as usize;
        let h = span / m as f64;
        for s in 0..m {
            let t = w[0] + s as f64 * h;
            rhs.eval(t, &y, &mut k1);
            axpy_into(&mut tmp, &y, 0.5 * h, &k1);
            rhs.eval(t + 0.5 * h, &tmp, &mut k2);
            axpy_into(&mut tmp, &y, 0.5 * h, &k2);
            rhs.eval(t + 0.5 * h, &tmp, &mut k3);
            axpy_into(&mut tmp, &y, h, &k3);
            rhs.eval(t + h, &tmp, &mut k4);
            for i in 0..n {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            stats.steps += 1;
            stats.rhs_evals += 4;
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Stiffness { t: w[1], h });
        }
        states.push(y.clone());
    }
    Ok(Trajectory {
        times: samples.to_vec(),
        states,
        stats,
    })
}

fn axpy_into(out: &mut [f64], y: &[f64], h: f64, k: &[f64]) {
    for i in 0..out.len() {
        out[i] = y[i] + h * k[i];
    }
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// dense output
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFE: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;

fn dopri5<R: Rhs + ?Sized>(
    rhs: &mut R,
    y0: &[f64],
    samples: &[f64],
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    let n = y0.len();
    let (rtol, atol) = (opts.rtol, opts.atol);
    let t_end = *samples.last().expect("checked");
    let mut t = samples[0];
    let h_max = opts.h_max.unwrap_or(t_end - t).min(t_end - t);

    let mut y = y0.to_vec();
    let mut y1 = vec![0.0; n];
    let mut ytmp = vec![0.0; n];
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut cont = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];

    let mut stats = IntegratorStats::default();
    let mut states = Vec::with_capacity(samples.len());
    states.push(y.clone());
    let mut next_sample = 1;

    rhs.eval(t, &y, &mut k1);
    stats.rhs_evals += 1;
    let mut h = match opts.h_init {
        Some(h) => h.min(h_max),
        None => {
            let h = initial_step(rhs, t, &y, &k1, rtol, atol, h_max, &mut ytmp, &mut k2);
            stats.rhs_evals += 1;
            h
        }
    };
    let mut fac_old: f64 = 1e-4;
    let mut last_rejected = false;

    while next_sample < samples.len() {
        if stats.steps + stats.rejects >= opts.max_steps {
            return Err(Error::Stiffness { t, h });
        }
        let last = t + 1.01 * h >= t_end;
        if last {
            h = t_end - t;
        }
        if h.abs() <= 10.0 * f64::EPSILON * t.abs().max(f64::MIN_POSITIVE) || h <= 0.0 {
            return Err(Error::Stiffness { t, h });
        }

        for i in 0..n {
            ytmp[i] = y[i] + h * A21 * k1[i];
        }
        rhs.eval(t + C2 * h, &ytmp, &mut k2);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        rhs.eval(t + C3 * h, &ytmp, &mut k3);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        rhs.eval(t + C4 * h, &ytmp, &mut k4);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        rhs.eval(t + C5 * h, &ytmp, &mut k5);
        for i in 0..n {
            ytmp[i] = y[i]
                + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let t_new = if last { t_end } else { t + h };
        rhs.eval(t_new, &ytmp, &mut k6);
        for i in 0..n {
            y1[i] = y[i]
                + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        rhs.eval(t_new, &y1, &mut k7);
        stats.rhs_evals += 6;

        let mut err = 0.0;
        for i in 0..n {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sk = atol + rtol * y[i].abs().max(y1[i].abs());
            err += (e / sk) * (e / sk);
        }
        let err = (err / n.max(1) as f64).sqrt();
        if !err.is_finite() {
            stats.rejects += 1;
            h *= FAC_MIN;
            last_rejected = true;
            continue;
        }

        let fac11 = err.powf(0.2 - BETA * 0.75);
        if err <= 1.0 {
            // dense output coefficients on [t, t + h]
            for i in 0..n {
                let ydiff = y1[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                cont[0][i] = y[i];
                cont[1][i] = ydiff;
                cont[2][i] = bspl;
                cont[3][i] = ydiff - h * k7[i] - bspl;
                cont[4][i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i]
                        + D7 * k7[i]);
            }
            while next_sample < samples.len() && samples[next_sample] <= t_new {
                let s = if last && next_sample == samples.len() - 1 {
                    1.0
                } else {
                    (samples[next_sample] - t) / h
                };
                let s1 = 1.0 - s;
                states.push(
                    (0..n)
                        .map(|i| {
                            cont[0][i]
                                + s * (cont[1][i]
                                    + s1 * (cont[2][i] + s * (cont[3][i] + s1 * cont[4][i])))
                        })
                        .collect(),
                );
                next_sample += 1;
            }

            std::mem::swap(&mut k1, &mut k7);
            std::mem::swap(&mut y, &mut y1);
            t = t_new;
            stats.steps += 1;

            let mut fac = fac11 / fac_old.powf(BETA);
            fac = (fac / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = (h / fac).min(h_max);
            if last_rejected {
                h_new = h_new.min(h);
            }
            fac_old = err.max(1e-4);
            last_rejected = false;
            h = h_new;
        } else {
            stats.rejects += 1;
            h /= (fac11 / SAFE).min(1.0 / FAC_MIN);
            last_rejected = true;
        }
    }

    Ok(Trajectory {
        times: samples.to_vec(),
        states,
        stats,
    })
}

/// Starting step from the size of the solution and its first two
/// derivatives.
#[allow(clippy::too_many_arguments)]
fn initial_step<R: Rhs + ?Sized>(
    rhs: &mut R,
    t: f64,
    y: &[f64],
    f0: &[f64],
    rtol: f64,
    atol: f64,
    h_max: f64,
    ytmp: &mut [f64],
    f1: &mut [f64],
) -> f64 {
    let n = y.len().max(1) as f64;
    let (mut dnf, mut dny) = (0.0, 0.0);
    for i in 0..y.len() {
        let sk = atol + rtol * y[i].abs();
        dnf += (f0[i] / sk).powi(2);
        dny += (y[i] / sk).powi(2);
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        0.01 * (dny / dnf).sqrt()
    };
    h = h.min(h_max);
    for i in 0..y.len() {
        ytmp[i] = y[i] + h * f0[i];
    }
    rhs.eval(t + h, ytmp, f1);
    let mut der2 = 0.0;
    for i in 0..y.len() {
        let sk = atol + rtol * y[i].abs();
        der2 += ((f1[i] - f0[i]) / sk).powi(2);
    }
    let der2 = (der2 / n).sqrt() / h;
    let der12 = der2.max((dnf / n).sqrt());
    let h1 = if der12 <= 1e-15 {
        (1e-6f64).max(h * 1e-3)
    } else {
        (0.01 / der12).powf(0.2)
    };
    (100.0 * h).min(h1).min(h_max)
}
