//! JSON file formats for kernels and generators and the CSV projections of
//! the curve and mixing tables.
//!
//! Kernel: `{"n": int, "rows": [[...], ...], "pi": [...]}` with `pi`
//! optional. Generator: the same with `rates` in place of `rows`. Reading
//! re-validates every invariant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{validate_kernel, Distribution, Kernel};
use crate::mixing::MixingReport;
use crate::semigroup::{DecayRow, Generator};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelFile {
    pub n: usize,
    pub rows: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorFile {
    pub n: usize,
    pub rates: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<Vec<f64>>,
}

fn parse_pi(pi: Option<Vec<f64>>) -> Result<Option<Distribution>> {
    pi.map(Distribution::new).transpose()
}

fn check_n(n: usize, rows: usize) -> Result<()> {
    if n != rows {
        return Err(Error::Parse(format!("n = {n} but {rows} rows given")));
    }
    Ok(())
}

impl KernelFile {
    pub fn from_kernel(k: &Kernel) -> Self {
        Self {
            n: k.n(),
            rows: k.rows(),
            pi: Some(k.pi().as_slice().to_vec()),
        }
    }

    pub fn into_kernel(self) -> Result<Kernel> {
        check_n(self.n, self.rows.len())?;
        validate_kernel(self.rows, parse_pi(self.pi)?)
    }
}

impl GeneratorFile {
    pub fn from_generator(l: &Generator) -> Self {
        Self {
            n: l.n(),
            rates: l.rates(),
            pi: Some(l.pi().as_slice().to_vec()),
        }
    }

    pub fn into_generator(self) -> Result<Generator> {
        check_n(self.n, self.rates.len())?;
        Generator::new(self.rates, parse_pi(self.pi)?)
    }
}

pub fn kernel_from_json(text: &str) -> Result<Kernel> {
    let file: KernelFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.into_kernel()
}

pub fn kernel_to_json(k: &Kernel) -> String {
    serde_json::to_string_pretty(&KernelFile::from_kernel(k)).expect("plain data")
}

pub fn generator_from_json(text: &str) -> Result<Generator> {
    let file: GeneratorFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.into_generator()
}

pub fn generator_to_json(l: &Generator) -> String {
    serde_json::to_string_pretty(&GeneratorFile::from_generator(l)).expect("plain data")
}

/// 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// `t,value[,bound_static,bound_dynamic]`; the bound columns appear when
/// every row carries them.
pub fn decay_curve_csv(rows: &[DecayRow]) -> String {
    let with_bounds = !rows.is_empty()
        && rows
            .iter()
            .all(|r| r.bound_static.is_some() && r.bound_dynamic.is_some());
    let mut out = String::from(if with_bounds {
        "t,value,bound_static,bound_dynamic\n"
    } else {
        "t,value\n"
    });
    for r in rows {
        out.push_str(&fmt_float(r.t));
        out.push(',');
        out.push_str(&fmt_float(r.value));
        if with_bounds {
            out.push(',');
            out.push_str(&fmt_float(r.bound_static.unwrap_or(f64::NAN)));
            out.push(',');
            out.push_str(&fmt_float(r.bound_dynamic.unwrap_or(f64::NAN)));
        }
        out.push('\n');
    }
    out
}

/// `eps,t_exact,bound_static,bound_dynamic`.
pub fn mixing_csv(reports: &[MixingReport]) -> String {
    let mut out = String::from("eps,t_exact,bound_static,bound_dynamic\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_float(r.eps),
            fmt_float(r.t_exact),
            fmt_float(r.bound_static),
            fmt_float(r.bound_dynamic)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{make_family, Family};

    #[test]
    fn kernel_round_trip() {
        let k = make_family(&Family::RandomReversible { n: 4, seed: 2 }).unwrap();
        let back = kernel_from_json(&kernel_to_json(&k)).unwrap();
        for (a, b) in back.rows().iter().flatten().zip(k.rows().iter().flatten()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(back.pi(), k.pi());
    }

    #[test]
    fn kernel_without_pi() {
        let k = kernel_from_json(r#"{"n": 2, "rows": [[0.7, 0.3], [0.1, 0.9]]}"#).unwrap();
        assert!((k.pi()[0] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn malformed_files() {
        assert!(matches!(
            kernel_from_json(r#"{"n": 3, "rows": [[1.0]]}"#),
            Err(Error::Parse(_))
        ));
        assert!(matches!(kernel_from_json("[1, 2"), Err(Error::Parse(_))));
        assert!(matches!(
            kernel_from_json(r#"{"n": 2, "rows": [[0.5, 0.5], [0.5, 0.5]], "pi": [0.25, 0.75]}"#),
            Err(Error::NotStationary { .. })
        ));
    }

    #[test]
    fn generator_round_trip() {
        let l = Generator::cycle(4, 0.5).unwrap();
        let back = generator_from_json(&generator_to_json(&l)).unwrap();
        assert_eq!(back.rates(), l.rates());
        let g = generator_from_json(r#"{"n": 2, "rates": [[-1, 1], [3, -3]]}"#).unwrap();
        assert!((g.pi()[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn csv_headers() {
        let rows = [DecayRow {
            t: 0.5,
            value: 0.1,
            bound_static: Some(0.2),
            bound_dynamic: Some(0.3),
        }];
        let csv = decay_curve_csv(&rows);
        assert!(csv.starts_with("t,value,bound_static,bound_dynamic\n"));
        assert_eq!(csv.lines().nth(1).unwrap().split(',').count(), 4);
        assert_eq!(fmt_float(0.1), "1.0000000000000001e-1");
    }
}
