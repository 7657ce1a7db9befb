//! Plain-text reports: one `name: max=… mean=… PASS|FAIL` line per entry.

use std::fmt::Write as _;

#[derive(Clone, Debug, PartialEq)]
pub struct Line {
    pub name: String,
    pub max: f64,
    pub mean: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunReport {
    /// Scenario echo.
    pub header: Vec<String>,
    pub lines: Vec<Line>,
}

fn summary(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let max = if values.iter().any(|v| v.is_nan()) {
        f64::NAN
    } else {
        values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    };
    let mean = values.iter().map(|v| v.abs()).sum::<f64>() / values.len() as f64;
    (max, mean)
}

impl RunReport {
    /// Passes when every |value| is below `tol`; NaN fails.
    pub fn push(&mut self, name: &str, values: &[f64], tol: f64) {
        let (max, mean) = summary(values);
        let pass = values.iter().all(|v| v.abs() < tol);
        self.lines.push(Line {
            name: name.into(),
            max,
            mean,
            pass,
        });
    }

    /// Entry whose verdict is decided by the caller.
    pub fn push_verdict(&mut self, name: &str, values: &[f64], pass: bool) {
        let (max, mean) = summary(values);
        self.lines.push(Line {
            name: name.into(),
            max,
            mean,
            pass,
        });
    }

    pub fn all_pass(&self) -> bool {
        self.lines.iter().all(|l| l.pass)
    }

    pub fn line(&self, name: &str) -> Option<&Line> {
        self.lines.iter().find(|l| l.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for h in &self.header {
            let _ = writeln!(s, "# {h}");
        }
        for l in &self.lines {
            let _ = writeln!(
                s,
                "{}: max={:.6e} mean={:.6e} {}",
                l.name,
                l.max,
                l.mean,
                if l.pass { "PASS" } else { "FAIL" }
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format() {
        let mut r = RunReport::default();
        r.push("a", &[1e-9, -3e-9], 1e-8);
        r.push("b", &[f64::NAN], 1.0);
        r.push("c", &[], 1.0);
        assert_eq!(
            r.to_text(),
            "a: max=3.000000e-9 mean=2.000000e-9 PASS\nb: max=NaN mean=NaN FAIL\nc: max=0.000000e0 mean=0.000000e0 PASS\n"
        );
        assert!(!r.all_pass());
    }
}
