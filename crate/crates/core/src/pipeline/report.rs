use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{EvalReport, SetupKind};
use crate::error::{write_string, Result};

/// The four reports of one comparison run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub test_size: usize,
    pub reports: Vec<EvalReport>,
}

impl Comparison {
    pub fn report(&self, kind: SetupKind) -> Option<&EvalReport> {
        self.reports.iter().find(|r| r.setup == kind)
    }

    /// Tab-separated table, one row per setup. Accuracies in percent; deltas
    /// are relative to the full-precision row and to the published figure.
    pub fn table(&self) -> String {
        let base = self.report(SetupKind::Float32Full).map(|r| r.accuracy);
        let mut out = String::from("setup\tdescription\taccuracy_pct\tdelta_vs_float32_pct\treference_pct\tdelta_vs_reference_pct\tstd_pct\n");
        for r in &self.reports {
            let acc = 100.0 * r.accuracy;
            let delta = base
                .map(|b| format!("{:+.1}", acc - 100.0 * b))
                .unwrap_or_else(|| "-".into());
            let reference = 100.0 * r.setup.reference_accuracy();
            let std = r
                .repeat_std()
                .map(|s| format!("{:.1}", 100.0 * s))
                .unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "{}\t{}\t{acc:.1}\t{delta}\t{reference:.1}\t{:+.1}\t{std}",
                r.setup,
                r.setup.description(),
                acc - reference
            );
        }
        out
    }

    pub fn summary_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Writes `table.tsv`, `summary.json` and one `confusion_<SETUP>.csv` per
    /// setup into `dir`, returning the paths written.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        let mut put = |name: String, body: String| -> Result<()> {
            let p = dir.join(name);
            write_string(&p, &body)?;
            written.push(p);
            Ok(())
        };
        put("table.tsv".into(), self.table())?;
        put("summary.json".into(), self.summary_json()?)?;
        for r in &self.reports {
            put(format!("confusion_{}.csv", r.setup), r.confusion_csv())?;
        }
        Ok(written)
    }
}
