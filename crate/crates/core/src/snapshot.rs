//! Plain-text dump of a streaming model's full state.
//!
//! ```text
//! safegp-snapshot 1
//! step <k>
//! budget <p>
//! local_budget <p_l>
//! input_dim <n>
//! output_dim <o>
//! noise <ρ>
//! rkhs_bound <b>
//! kernel_scale <s>
//! kernel_bandwidth <h>
//! sample_period <T_s>
//! blend_rate <η>
//! refresh_interval <r>
//! varsigma_rule corrected|as-printed
//! X        followed by p rows of n values
//! Y        followed by p rows of o values
//! c        followed by one row of p flags (0 local, 1 global)
//! Sigma    followed by p rows of p values
//! vartheta followed by p rows of o values
//! varsigma followed by one row of p values
//! ```
//!
//! Values are whitespace-separated and written in shortest round-trip
//! exponent form, so a dump reloads bit-for-bit.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::gp_stream::{ModelConfig, Partition, StreamingModel, VarsigmaRule};
use crate::kernel::KernelParams;
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

pub const SNAPSHOT_MAGIC: &str = "safegp-snapshot";
pub const SNAPSHOT_VERSION: u32 = 1;

fn write_row<T: Scalar>(out: &mut String, row: &[T]) {
    let mut first = true;
    for v in row {
        if !first {
            out.push(' ');
        }
        first = false;
        let _ = write!(out, "{v:e}");
    }
    out.push('\n');
}

fn write_matrix<T: Scalar>(out: &mut String, tag: &str, m: &DenseMatrix<T>) {
    out.push_str(tag);
    out.push('\n');
    for r in m.row_iter() {
        write_row(out, r);
    }
}

impl<T: Scalar> StreamingModel<T> {
    pub fn to_snapshot(&self) -> String {
        let c = self.config();
        let mut out = String::new();
        let _ = writeln!(out, "{SNAPSHOT_MAGIC} {SNAPSHOT_VERSION}");
        let _ = writeln!(out, "step {}", self.step());
        let _ = writeln!(out, "budget {}", c.budget);
        let _ = writeln!(out, "local_budget {}", c.local_budget);
        let _ = writeln!(out, "input_dim {}", self.input_dim());
        let _ = writeln!(out, "output_dim {}", self.outputs());
        let _ = writeln!(out, "noise {:e}", c.noise);
        let _ = writeln!(out, "rkhs_bound {:e}", c.rkhs_bound);
        let _ = writeln!(out, "kernel_scale {:e}", c.kernel.scale);
        let _ = writeln!(out, "kernel_bandwidth {:e}", c.kernel.bandwidth);
        let _ = writeln!(out, "sample_period {:e}", c.sample_period);
        let _ = writeln!(out, "blend_rate {:e}", c.blend_rate);
        let _ = writeln!(out, "refresh_interval {}", c.refresh_interval);
        let rule = match c.varsigma_rule {
            VarsigmaRule::Corrected => "corrected",
            VarsigmaRule::AsPrinted => "as-printed",
        };
        let _ = writeln!(out, "varsigma_rule {rule}");
        write_matrix(&mut out, "X", self.data());
        write_matrix(&mut out, "Y", self.targets());
        out.push_str("c\n");
        let flags: Vec<String> = self.flags().iter().map(|f| f.to_string()).collect();
        out.push_str(&flags.join(" "));
        out.push('\n');
        write_matrix(&mut out, "Sigma", self.inverse());
        write_matrix(&mut out, "vartheta", self.weights());
        out.push_str("varsigma\n");
        write_row(&mut out, self.row_sums());
        out
    }

    pub fn from_snapshot(text: &str) -> Result<Self> {
        let mut r = Reader { lines: text.lines().enumerate(), line: 0 };
        let head = r.next_line()?;
        let mut parts = head.split_whitespace();
        if parts.next() != Some(SNAPSHOT_MAGIC) {
            return r.fail("missing snapshot header");
        }
        match parts.next().map(str::parse::<u32>) {
            Some(Ok(SNAPSHOT_VERSION)) => {}
            _ => return r.fail(format!("unsupported snapshot version, expected {SNAPSHOT_VERSION}")),
        }
        let step: u64 = r.field("step")?;
        let budget: usize = r.field("budget")?;
        let local_budget: usize = r.field("local_budget")?;
        let input_dim: usize = r.field("input_dim")?;
        let output_dim: usize = r.field("output_dim")?;
        let noise: T = r.field("noise")?;
        let rkhs_bound: T = r.field("rkhs_bound")?;
        let scale: T = r.field("kernel_scale")?;
        let bandwidth: T = r.field("kernel_bandwidth")?;
        let sample_period: T = r.field("sample_period")?;
        let blend_rate: T = r.field("blend_rate")?;
        let refresh_interval: usize = r.field("refresh_interval")?;
        let rule: String = r.field("varsigma_rule")?;
        let varsigma_rule = match rule.as_str() {
            "corrected" => VarsigmaRule::Corrected,
            "as-printed" => VarsigmaRule::AsPrinted,
            other => return r.fail(format!("unknown varsigma_rule {other:?}")),
        };
        let config = ModelConfig {
            budget,
            local_budget,
            noise,
            rkhs_bound,
            kernel: KernelParams { scale, bandwidth },
            sample_period,
            blend_rate,
            refresh_interval,
            varsigma_rule,
        };
        let data = r.matrix("X", budget, input_dim)?;
        let targets = r.matrix("Y", budget, output_dim)?;
        r.tag("c")?;
        let flags: Vec<u8> = r.row(budget)?;
        let mut partition = Vec::with_capacity(budget);
        for f in flags {
            match Partition::from_flag(f) {
                Some(p) => partition.push(p),
                None => return r.fail(format!("flag {f} is neither 0 nor 1")),
            }
        }
        let inverse = r.matrix("Sigma", budget, budget)?;
        let weights = r.matrix("vartheta", budget, output_dim)?;
        r.tag("varsigma")?;
        let row_sums: Vec<T> = r.row(budget)?;
        StreamingModel::from_parts(config, step, data, targets, partition, inverse, weights, row_sums)
    }
}

struct Reader<'a, I: Iterator<Item = (usize, &'a str)>> {
    lines: I,
    line: usize,
}

impl<'a, I: Iterator<Item = (usize, &'a str)>> Reader<'a, I> {
    fn fail<R>(&self, message: impl Into<String>) -> Result<R> {
        Err(Error::Snapshot { line: self.line, message: message.into() })
    }

    fn next_line(&mut self) -> Result<&'a str> {
        for (i, l) in self.lines.by_ref() {
            self.line = i + 1;
            let l = l.trim();
            if !l.is_empty() {
                return Ok(l);
            }
        }
        self.fail("unexpected end of snapshot")
    }

    fn field<V: std::str::FromStr>(&mut self, key: &str) -> Result<V> {
        let l = self.next_line()?;
        let mut parts = l.splitn(2, char::is_whitespace);
        if parts.next() != Some(key) {
            return self.fail(format!("expected field {key:?}"));
        }
        match parts.next().map(|v| v.trim().parse::<V>()) {
            Some(Ok(v)) => Ok(v),
            _ => self.fail(format!("bad value for {key:?}")),
        }
    }

    fn tag(&mut self, tag: &str) -> Result<()> {
        if self.next_line()? == tag {
            Ok(())
        } else {
            self.fail(format!("expected section {tag:?}"))
        }
    }

    fn row<V: std::str::FromStr>(&mut self, n: usize) -> Result<Vec<V>> {
        let l = self.next_line()?;
        let vals: std::result::Result<Vec<V>, _> = l.split_whitespace().map(str::parse::<V>).collect();
        match vals {
            Ok(v) if v.len() == n => Ok(v),
            Ok(v) => self.fail(format!("expected {n} values, found {}", v.len())),
            Err(_) => self.fail("unparsable value"),
        }
    }

    fn matrix<T: Scalar>(&mut self, tag: &str, rows: usize, cols: usize) -> Result<DenseMatrix<T>> {
        self.tag(tag)?;
        let mut flat = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            flat.extend(self.row::<T>(cols)?);
        }
        DenseMatrix::from_row_slice(rows, cols, &flat)
    }
}
