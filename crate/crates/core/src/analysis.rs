//! Spectrum classification, relative eigenvalue errors and absolute
//! spectrum reports.
//!
//! A coupled eigenvalue is thermal-dominant when it is purely real; the
//! others come in conjugate pairs, represented by the member with `Im > 0`.
//! Within a class the canonical order (thermal by `|mu|`, structural by
//! `|Im mu|`) defines index-wise pairing between a full and a reduced model.

use std::io::Write;

use faer::c64;
use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_REAL_TOL: f64 = 1e-8;
pub const MAX_REAL_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeClass {
    Thermal,
    Structural,
}

impl ModeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ModeClass::Thermal => "thermal",
            ModeClass::Structural => "structural",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClassifiedSpectrum {
    /// Purely real eigenvalues, `|mu|` ascending.
    pub thermal: Vec<c64>,
    /// `Im > 0` member of each conjugate pair, `|Im mu|` ascending.
    pub structural: Vec<c64>,
    /// Tolerance at which the counts matched.
    pub tol: f64,
    /// Positions of `thermal` and `structural` in the classified input.
    pub thermal_index: Vec<usize>,
    pub structural_index: Vec<usize>,
}

impl ClassifiedSpectrum {
    pub fn total(&self) -> usize {
        self.thermal.len() + 2 * self.structural.len()
    }

    pub fn class(&self, class: ModeClass) -> &[c64] {
        match class {
            ModeClass::Thermal => &self.thermal,
            ModeClass::Structural => &self.structural,
        }
    }
}

fn is_real(mu: c64, tol: f64) -> bool {
    mu.im.abs() <= tol * mu.norm()
}

/// Classifies with the default starting tolerance.
pub fn classify(values: &[c64], n_thermal_expected: usize) -> Result<ClassifiedSpectrum> {
    classify_with_tol(values, n_thermal_expected, DEFAULT_REAL_TOL)
}

/// Partitions `values` by the purely-real rule. When the real count differs
/// from `n_thermal_expected` the tolerance grows by factors of ten up to
/// [`MAX_REAL_TOL`].
pub fn classify_with_tol(
    values: &[c64],
    n_thermal_expected: usize,
    tol: f64,
) -> Result<ClassifiedSpectrum> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("classification tolerance must be positive, got {tol}")));
    }
    let mut tol = tol;
    loop {
        let found = values.iter().filter(|&&v| is_real(v, tol)).count();
        if found == n_thermal_expected {
            break;
        }
        if found > n_thermal_expected || tol * 10.0 > MAX_REAL_TOL * (1.0 + 1e-12) {
            return Err(Error::Classification {
                expected: n_thermal_expected,
                found,
                tol,
            });
        }
        tol *= 10.0;
    }

    let mut thermal_index = Vec::new();
    let mut upper = Vec::new();
    let mut lower = 0usize;
    for (i, &v) in values.iter().enumerate() {
        if is_real(v, tol) {
            thermal_index.push(i);
        } else if v.im > 0.0 {
            upper.push(i);
        } else {
            lower += 1;
        }
    }
    if upper.len() != lower {
        return Err(Error::Eigen(format!(
            "spectrum is not closed under conjugation ({} vs {lower})",
            upper.len()
        )));
    }
    thermal_index.sort_by(|&a, &b| {
        values[a]
            .norm()
            .total_cmp(&values[b].norm())
            .then(values[a].re.total_cmp(&values[b].re))
    });
    upper.sort_by(|&a, &b| {
        values[a]
            .im
            .abs()
            .total_cmp(&values[b].im.abs())
            .then(values[a].re.total_cmp(&values[b].re))
    });
    Ok(ClassifiedSpectrum {
        thermal: thermal_index.iter().map(|&i| values[i]).collect(),
        structural: upper.iter().map(|&i| values[i]).collect(),
        tol,
        thermal_index,
        structural_index: upper,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairedError {
    pub index: usize,
    pub full: [f64; 2],
    pub reduced: [f64; 2],
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorSummary {
    pub count: usize,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub thermal: Vec<PairedError>,
    pub structural: Vec<PairedError>,
}

impl ErrorReport {
    pub fn class(&self, class: ModeClass) -> &[PairedError] {
        match class {
            ModeClass::Thermal => &self.thermal,
            ModeClass::Structural => &self.structural,
        }
    }

    pub fn summary(&self, class: ModeClass) -> ErrorSummary {
        let e = self.class(class);
        let max = e.iter().fold(0.0f64, |m, p| m.max(p.error));
        let mean = if e.is_empty() {
            0.0
        } else {
            e.iter().map(|p| p.error).sum::<f64>() / e.len() as f64
        };
        ErrorSummary {
            count: e.len(),
            max,
            mean,
        }
    }

    /// Largest error over both classes.
    pub fn max(&self) -> f64 {
        self.summary(ModeClass::Thermal)
            .max
            .max(self.summary(ModeClass::Structural).max)
    }
}

/// `|mu_F - mu_r| / |mu_F|` index-wise within each class, over as many
/// entries as the reduced model has.
pub fn relative_errors(full: &ClassifiedSpectrum, reduced: &ClassifiedSpectrum) -> ErrorReport {
    relative_errors_tracked(full, reduced, reduced.thermal.len(), reduced.structural.len())
}

/// As [`relative_errors`] but tracking at most the given counts per class.
pub fn relative_errors_tracked(
    full: &ClassifiedSpectrum,
    reduced: &ClassifiedSpectrum,
    n_thermal: usize,
    n_structural: usize,
) -> ErrorReport {
    let pair = |f: &[c64], r: &[c64], n: usize| -> Vec<PairedError> {
        f.iter()
            .zip(r)
            .take(n)
            .enumerate()
            .map(|(index, (&a, &b))| PairedError {
                index,
                full: [a.re, a.im],
                reduced: [b.re, b.im],
                error: (a - b).norm() / a.norm(),
            })
            .collect()
    };
    ErrorReport {
        thermal: pair(&full.thermal, &reduced.thermal, n_thermal),
        structural: pair(&full.structural, &reduced.structural, n_structural),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub model: String,
    pub class: ModeClass,
    pub index: usize,
    pub re: f64,
    pub im: f64,
    pub abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumOverlap {
    pub model: String,
    pub thermal_range: Option<[f64; 2]>,
    pub structural_range: Option<[f64; 2]>,
    /// Intersection of the two `|mu|` ranges, if nonempty.
    pub overlap: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectraReport {
    pub rows: Vec<SpectrumRow>,
    pub overlaps: Vec<SpectrumOverlap>,
}

fn abs_range(v: &[c64]) -> Option<[f64; 2]> {
    if v.is_empty() {
        return None;
    }
    let lo = v.iter().map(|x| x.norm()).fold(f64::INFINITY, f64::min);
    let hi = v.iter().map(|x| x.norm()).fold(0.0, f64::max);
    Some([lo, hi])
}

pub fn spectra_report(models: &[(&str, &ClassifiedSpectrum)]) -> SpectraReport {
    let mut rows = Vec::new();
    let mut overlaps = Vec::new();
    for &(label, s) in models {
        for class in [ModeClass::Thermal, ModeClass::Structural] {
            for (index, mu) in s.class(class).iter().enumerate() {
                rows.push(SpectrumRow {
                    model: label.to_string(),
                    class,
                    index,
                    re: mu.re,
                    im: mu.im,
                    abs: mu.norm(),
                });
            }
        }
        let t = abs_range(&s.thermal);
        let st = abs_range(&s.structural);
        let overlap = match (t, st) {
            (Some(a), Some(b)) => {
                let lo = a[0].max(b[0]);
                let hi = a[1].min(b[1]);
                (lo <= hi).then_some([lo, hi])
            }
            _ => None,
        };
        overlaps.push(SpectrumOverlap {
            model: label.to_string(),
            thermal_range: t,
            structural_range: st,
            overlap,
        });
    }
    SpectraReport { rows, overlaps }
}

/// `method,class,index,full_re,full_im,reduced_re,reduced_im,rel_error`
pub fn write_errors_csv<W: Write>(out: &mut W, reports: &[(&str, &ErrorReport)]) -> Result<()> {
    writeln!(out, "method,class,index,full_re,full_im,reduced_re,reduced_im,rel_error")?;
    for &(label, r) in reports {
        for class in [ModeClass::Thermal, ModeClass::Structural] {
            for p in r.class(class) {
                writeln!(
                    out,
                    "{label},{},{},{},{},{},{},{}",
                    class.as_str(),
                    p.index,
                    p.full[0],
                    p.full[1],
                    p.reduced[0],
                    p.reduced[1],
                    p.error
                )?;
            }
        }
    }
    Ok(())
}

/// `model,class,index,re,im,abs`
pub fn write_spectra_csv<W: Write>(out: &mut W, report: &SpectraReport) -> Result<()> {
    writeln!(out, "model,class,index,re,im,abs")?;
    for r in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.model,
            r.class.as_str(),
            r.index,
            r.re,
            r.im,
            r.abs
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> c64 {
        c64::new(re, im)
    }

    #[test]
    fn synthetic_set() {
        let v = [c(0.0, 1.0), c(-2.0, 0.0), c(0.0, -1.0), c(-1.0, 0.0)];
        let s = classify(&v, 2).unwrap();
        assert_eq!(s.thermal, vec![c(-1.0, 0.0), c(-2.0, 0.0)]);
        assert_eq!(s.structural, vec![c(0.0, 1.0)]);
        assert_eq!(s.total(), 4);
        assert_eq!(s.tol, DEFAULT_REAL_TOL);
        assert_eq!(s.thermal_index, vec![3, 1]);
    }

    #[test]
    fn tolerance_widens_until_counts_match() {
        let v = [c(-1.0, 1e-6), c(-1.0, -1e-6), c(-3.0, 0.0)];
        let s = classify(&v, 3).unwrap();
        assert_eq!(s.thermal.len(), 3);
        assert!((s.tol - 1e-6).abs() < 1e-18);
    }

    #[test]
    fn unmatched_counts_fail() {
        let v = [c(-1.0, 0.5), c(-1.0, -0.5), c(-3.0, 0.0)];
        let err = classify(&v, 3).unwrap_err();
        assert!(matches!(err, Error::Classification { expected: 3, found: 1, .. }));
        assert!(classify(&v, 0).is_err());
    }

    #[test]
    fn eq38_arithmetic() {
        let full = classify(&[c(-1.0, 0.0), c(-2.0, 0.0)], 2).unwrap();
        let red = classify(&[c(-1.1, 0.0), c(-2.0, 0.0)], 2).unwrap();
        let r = relative_errors(&full, &red);
        assert!((r.thermal[0].error - 0.1).abs() < 1e-14);
        assert_eq!(r.thermal[1].error, 0.0);
        assert!(relative_errors(&full, &full).thermal.iter().all(|p| p.error == 0.0));
        let s = r.summary(ModeClass::Thermal);
        assert_eq!(s.count, 2);
        assert!((s.mean - 0.05).abs() < 1e-14);
    }

    #[test]
    fn empty_reduced_class_is_empty_section() {
        let full = classify(&[c(-1.0, 0.0), c(0.0, 2.0), c(0.0, -2.0)], 1).unwrap();
        let red = classify(&[c(-1.0, 0.0)], 1).unwrap();
        let r = relative_errors(&full, &red);
        assert!(r.structural.is_empty());
        assert_eq!(r.summary(ModeClass::Structural).max, 0.0);
    }

    #[test]
    fn overlap_interval() {
        let sep = classify(&[c(-1.0, 0.0), c(-2.0, 0.0), c(0.0, 5.0), c(0.0, -5.0)], 2).unwrap();
        let mix = classify(&[c(-1.0, 0.0), c(-9.0, 0.0), c(0.0, 5.0), c(0.0, -5.0)], 2).unwrap();
        let rep = spectra_report(&[("sep", &sep), ("mix", &mix)]);
        assert_eq!(rep.overlaps[0].overlap, None);
        assert_eq!(rep.overlaps[1].overlap, Some([5.0, 5.0]));
        assert_eq!(rep.rows.len(), 6);
    }

    #[test]
    fn csv_layout() {
        let full = classify(&[c(-1.0, 0.0)], 1).unwrap();
        let r = relative_errors(&full, &full);
        let mut buf = Vec::new();
        write_errors_csv(&mut buf, &[("uncoupled", &r)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "method,class,index,full_re,full_im,reduced_re,reduced_im,rel_error\n\
             uncoupled,thermal,0,-1,0,-1,0,0\n"
        );
    }
}
