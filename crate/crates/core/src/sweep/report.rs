use std::fmt::Write as _;

use serde::Serialize;

use crate::leakage::{Category, LeakFinding};
use crate::rvc::KeyGateMask;

/// Hex rendering of a decoder mask for the report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MaskRecord {
    pub fetch: String,
    pub logic: String,
}

impl MaskRecord {
    fn new(m: KeyGateMask) -> MaskRecord {
        MaskRecord {
            fetch: format!("{:#06x}", m.fetch),
            logic: format!("{:#06x}", m.logic),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BitResult {
    pub bit: usize,
    pub category: Category,
    pub mask: Option<MaskRecord>,
    pub leak: Option<LeakFinding>,
}

impl BitResult {
    pub fn new(
        bit: usize,
        category: Category,
        mask: Option<KeyGateMask>,
        leak: Option<LeakFinding>,
    ) -> BitResult {
        BitResult {
            bit,
            category,
            mask: mask.map(MaskRecord::new),
            leak,
        }
    }
}

/// Per-category counts, serialized in taxonomy order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Tallies {
    pub boot_failure: usize,
    pub no_output: usize,
    pub unchanged: usize,
    pub changed: usize,
    pub leak: usize,
}

impl Tallies {
    pub fn get(&self, c: Category) -> usize {
        match c {
            Category::BootFailure => self.boot_failure,
            Category::NoOutput => self.no_output,
            Category::Unchanged => self.unchanged,
            Category::Changed => self.changed,
            Category::Leak => self.leak,
        }
    }

    fn bump(&mut self, c: Category) {
        *match c {
            Category::BootFailure => &mut self.boot_failure,
            Category::NoOutput => &mut self.no_output,
            Category::Unchanged => &mut self.unchanged,
            Category::Changed => &mut self.changed,
            Category::Leak => &mut self.leak,
        } += 1;
    }

    pub fn total(&self) -> usize {
        Category::ALL.iter().map(|&c| self.get(c)).sum()
    }
}

/// Percentages of the swept bits, rounded to two decimals.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Percentages {
    pub boot_failure: f64,
    pub no_output: f64,
    pub unchanged: f64,
    pub changed: f64,
    pub leak: f64,
}

impl Percentages {
    pub fn get(&self, c: Category) -> f64 {
        match c {
            Category::BootFailure => self.boot_failure,
            Category::NoOutput => self.no_output,
            Category::Unchanged => self.unchanged,
            Category::Changed => self.changed,
            Category::Leak => self.leak,
        }
    }
}

fn percent(n: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        (n as f64 * 10_000.0 / total as f64).round() / 100.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub target: String,
    pub key_width: usize,
    pub bits_swept: usize,
    pub per_bit: Vec<BitResult>,
    pub tallies: Tallies,
    pub percentages: Percentages,
}

impl SweepReport {
    /// Aggregate results; `per_bit` must be ordered by bit index.
    pub fn new(
        target: impl Into<String>,
        key_width: usize,
        per_bit: Vec<BitResult>,
    ) -> SweepReport {
        let mut tallies = Tallies::default();
        for r in &per_bit {
            tallies.bump(r.category);
        }
        let n = per_bit.len();
        let percentages = Percentages {
            boot_failure: percent(tallies.boot_failure, n),
            no_output: percent(tallies.no_output, n),
            unchanged: percent(tallies.unchanged, n),
            changed: percent(tallies.changed, n),
            leak: percent(tallies.leak, n),
        };
        SweepReport {
            target: target.into(),
            key_width,
            bits_swept: n,
            per_bit,
            tallies,
            percentages,
        }
    }

    pub fn bits_in(&self, c: Category) -> Vec<usize> {
        self.per_bit
            .iter()
            .filter(|r| r.category == c)
            .map(|r| r.bit)
            .collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Fixed-width table of tallies.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} target, {} of {} key bits swept",
            self.target, self.bits_swept, self.key_width
        );
        let _ = writeln!(s, "{:<14}{:>7}{:>9}", "category", "bits", "percent");
        for c in Category::ALL {
            let _ = writeln!(
                s,
                "{:<14}{:>7}{:>9.2}",
                c.as_str(),
                self.tallies.get(c),
                self.percentages.get(c)
            );
        }
        let _ = writeln!(s, "{:<14}{:>7}", "total", self.tallies.total());
        s
    }
}
