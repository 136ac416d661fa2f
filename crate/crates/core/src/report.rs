//! CSV and JSON artefacts written by the experiment commands.
//!
//! CSV numbers use 9 significant digits in `%g` style with a `.` decimal
//! separator, independent of locale.

use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

use crate::eval::DvhCurve;
use crate::solver::SweepRecord;

/// Formats `v` with 9 significant digits, `%.9g` style.
pub fn fmt_num(v: f64) -> String {
    const SIG: i32 = 9;
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", (SIG - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= SIG {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (SIG - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, v)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf8")
}

/// `sweep,prox_gy_rms,tv,sum_beta`.
pub fn iterates_csv(records: &[SweepRecord]) -> String {
    let mut w = csv_writer();
    w.write_record(["sweep", "prox_gy_rms", "tv", "sum_beta"]).unwrap();
    for r in records {
        w.write_record([
            r.sweep.to_string(),
            fmt_num(r.proximity),
            fmt_num(r.tv),
            fmt_num(r.sum_beta),
        ])
        .unwrap();
    }
    finish(w)
}

/// `field,beamlet,value`.
pub fn intensities_csv(x: &[f64], beamlets_per_field: usize) -> String {
    let mut w = csv_writer();
    w.write_record(["field", "beamlet", "value"]).unwrap();
    for (i, &v) in x.iter().enumerate() {
        w.write_record([
            (i / beamlets_per_field).to_string(),
            (i % beamlets_per_field).to_string(),
            fmt_num(v),
        ])
        .unwrap();
    }
    finish(w)
}

/// `structure,dose_gy,volume_pct`, with an optional leading `arm` column.
pub fn dvh_csv<'a, I>(curves: I, with_arm: bool) -> String
where
    I: IntoIterator<Item = (&'a str, &'a DvhCurve)>,
{
    let mut w = csv_writer();
    if with_arm {
        w.write_record(["arm", "structure", "dose_gy", "volume_pct"]).unwrap();
    } else {
        w.write_record(["structure", "dose_gy", "volume_pct"]).unwrap();
    }
    for (arm, curve) in curves {
        for &(t, v) in &curve.points {
            let mut rec = Vec::with_capacity(4);
            if with_arm {
                rec.push(arm.to_string());
            }
            rec.extend([curve.structure.clone(), fmt_num(t), fmt_num(v)]);
            w.write_record(rec).unwrap();
        }
    }
    finish(w)
}

#[derive(Debug, thiserror::Error)]
pub enum IntensityFileError {
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}: {reason}")]
    Row { row: usize, reason: String },
}

/// Reads an `intensities.csv` back into a vector of `fields × beamlets`
/// values. Every (field, beamlet) pair must appear exactly once.
pub fn parse_intensities_csv(
    text: &str,
    fields: usize,
    beamlets: usize,
) -> Result<Vec<f64>, IntensityFileError> {
    let mut x = vec![f64::NAN; fields * beamlets];
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    for (row, rec) in reader.deserialize::<(usize, usize, f64)>().enumerate() {
        let (f, b, v) = rec?;
        let bad = |reason: String| IntensityFileError::Row { row: row + 1, reason };
        if f >= fields || b >= beamlets {
            return Err(bad(format!("({f}, {b}) outside a {fields}x{beamlets} map")));
        }
        if !(v.is_finite() && v >= 0.0) {
            return Err(bad(format!("intensity {v} must be finite and nonnegative")));
        }
        let slot = &mut x[f * beamlets + b];
        if !slot.is_nan() {
            return Err(bad(format!("duplicate entry for ({f}, {b})")));
        }
        *slot = v;
    }
    if let Some(i) = x.iter().position(|v| v.is_nan()) {
        return Err(IntensityFileError::Row {
            row: 0,
            reason: format!("missing entry for ({}, {})", i / beamlets, i % beamlets),
        });
    }
    Ok(x)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)
}
