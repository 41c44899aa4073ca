//! Shared verdict tables and their CSV/JSON emission.
//!
//! Output formatting uses Rust's shortest-roundtrip float printing, so a
//! fixed config and seed always produce byte-identical artifacts.

use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Status {
    Pass,
    Fail,
    Skip { reason: String },
}

impl Status {
    pub fn is_pass(&self) -> bool {
        matches!(self, Status::Pass)
    }

    pub fn is_fail(&self) -> bool {
        matches!(self, Status::Fail)
    }

    pub fn label(&self) -> String {
        match self {
            Status::Pass => "pass".into(),
            Status::Fail => "fail".into(),
            Status::Skip { reason } => format!("skip:{reason}"),
        }
    }
}

/// One measured-vs-bound row in the shared schema
/// `instance,beta,q,quantity,measured,bound,pass`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerdictRow {
    pub instance: String,
    pub beta: f64,
    pub q: f64,
    pub quantity: String,
    pub measured: f64,
    pub bound: f64,
    pub status: Status,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerdictReport {
    pub name: String,
    pub rows: Vec<VerdictRow>,
}

impl VerdictReport {
    pub fn new(name: &str) -> Self {
        VerdictReport {
            name: name.to_string(),
            rows: Vec::new(),
        }
    }

    pub fn all_pass(&self) -> bool {
        !self.rows.iter().any(|r| r.status.is_fail())
    }

    pub fn any_fail(&self) -> bool {
        self.rows.iter().any(|r| r.status.is_fail())
    }

    pub fn all_skipped(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| matches!(r.status, Status::Skip { .. }))
    }

    /// Largest measured/bound ratio over non-skipped rows with a positive
    /// bound; 0 when nothing applies.
    pub fn worst_slack(&self) -> f64 {
        self.rows
            .iter()
            .filter(|r| !matches!(r.status, Status::Skip { .. }) && r.bound > 0.0)
            .map(|r| r.measured / r.bound)
            .fold(0.0, f64::max)
    }

    pub fn counts(&self) -> (usize, usize, usize) {
        let pass = self.rows.iter().filter(|r| r.status.is_pass()).count();
        let fail = self.rows.iter().filter(|r| r.status.is_fail()).count();
        let skip = self.rows.len() - pass - fail;
        (pass, fail, skip)
    }

    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "instance,beta,q,quantity,measured,bound,pass")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.instance,
                fmt_f64(r.beta),
                fmt_f64(r.q),
                r.quantity,
                fmt_f64(r.measured),
                fmt_f64(r.bound),
                r.status.label()
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }
}

/// NaN prints as an empty cell; everything else shortest-roundtrip.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

/// 64-bit FNV-1a over a byte stream, hex-encoded; used to fingerprint
/// generated corpora in summaries.
pub fn fnv1a_hex(bytes: impl Iterator<Item = u8>) -> String {
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("{hash:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_shape_and_verdicts() {
        let mut rep = VerdictReport::new("demo");
        rep.rows.push(VerdictRow {
            instance: "a".into(),
            beta: 0.5,
            q: 2.0,
            quantity: "norm".into(),
            measured: 1.0,
            bound: 2.0,
            status: Status::Pass,
        });
        rep.rows.push(VerdictRow {
            instance: "b".into(),
            beta: 0.5,
            q: 2.0,
            quantity: "norm".into(),
            measured: 3.0,
            bound: 2.0,
            status: Status::Skip {
                reason: "window".into(),
            },
        });
        let csv = rep.to_csv_string();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.contains("skip:window"));
        assert!(rep.all_pass());
        assert!(!rep.all_skipped());
        assert_eq!(rep.counts(), (1, 0, 1));
        assert!((rep.worst_slack() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fnv_is_stable() {
        let h = fnv1a_hex("abc".bytes());
        assert_eq!(h, fnv1a_hex("abc".bytes()));
        assert_ne!(h, fnv1a_hex("abd".bytes()));
    }
}
