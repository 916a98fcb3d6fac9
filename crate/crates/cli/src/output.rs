use std::fs;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use crate::Global;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn parse(msg: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: msg.into(),
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        Failure {
            code: 3,
            message: msg.into(),
        }
    }
}

impl From<nilwalk::Error> for Failure {
    fn from(e: nilwalk::Error) -> Self {
        let code = match e {
            nilwalk::Error::Parse(_) => 2,
            nilwalk::Error::Budget { .. } => 4,
            _ => 3,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: 3,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Row {
    pub experiment: String,
    pub n: usize,
    pub m: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub target: Option<f64>,
}

impl Row {
    pub fn new(
        experiment: impl Into<String>,
        n: usize,
        m: usize,
        estimate: f64,
        stderr: f64,
        target: Option<f64>,
    ) -> Self {
        Row {
            experiment: experiment.into(),
            n,
            m,
            estimate,
            stderr,
            target,
        }
    }
}

pub struct Report {
    name: String,
    seed: u64,
    digest: String,
    rows: Vec<Row>,
    checks: Vec<(String, bool, String)>,
    details: Value,
    started: Instant,
}

impl Report {
    pub fn new(name: &str, seed: u64, digest: String) -> Self {
        Report {
            name: name.into(),
            seed,
            digest,
            rows: Vec::new(),
            checks: Vec::new(),
            details: json!({}),
            started: Instant::now(),
        }
    }

    pub fn row(&mut self, r: Row) {
        self.rows.push(r);
    }

    pub fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push((name.into(), pass, detail.into()));
    }

    pub fn detail(&mut self, key: &str, v: Value) {
        self.details[key] = v;
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.1)
    }

    pub fn csv(&self) -> String {
        let stamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "experiment",
            "N",
            "M",
            "estimate",
            "stderr",
            "target",
            "seed",
            "config_digest",
        ])
        .expect("in-memory write");
        for r in &self.rows {
            let target = r.target.map(|t| t.to_string()).unwrap_or_default();
            w.write_record([
                r.experiment.clone(),
                r.n.to_string(),
                r.m.to_string(),
                r.estimate.to_string(),
                r.stderr.to_string(),
                target,
                self.seed.to_string(),
                self.digest.clone(),
            ])
            .expect("in-memory write");
        }
        let body =
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields");
        format!(
            "# nilwalk {} {} generated at unix time {stamp}\n{body}",
            env!("CARGO_PKG_VERSION"),
            self.name
        )
    }

    pub fn summary(&self) -> Value {
        json!({
            "command": self.name,
            "seed": self.seed,
            "config_digest": self.digest,
            "rows": self.rows.len(),
            "checks": self.checks.iter().map(|(n, p, d)| json!({"name": n, "pass": p, "detail": d})).collect::<Vec<_>>(),
            "all_pass": self.all_pass(),
            "wall_time": self.started.elapsed().as_secs_f64(),
            "details": self.details,
        })
    }

    /// Writes `<out>/<name>.csv` and `<out>/<name>.summary.json`, or prints the CSV to stdout and
    /// the summary to stderr. Check results go to stdout as `# PASS`/`# FAIL` lines.
    pub fn emit(self, g: &Global) -> Result<bool, crate::Failure> {
        let summary = serde_json::to_string_pretty(&self.summary()).expect("summary serializes");
        match &g.out {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                let stem = self.name.replace(' ', "_");
                fs::write(dir.join(format!("{stem}.csv")), self.csv())?;
                fs::write(dir.join(format!("{stem}.summary.json")), summary + "\n")?;
            }
            None => {
                if !self.rows.is_empty() {
                    print!("{}", self.csv());
                }
                eprintln!("{summary}");
            }
        }
        for (n, p, d) in &self.checks {
            println!("# {} {n} {d}", if *p { "PASS" } else { "FAIL" });
        }
        Ok(self.all_pass())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_labels_and_keeps_header() {
        let mut r = Report::new("t", 3, "abc".into());
        r.row(Row::new("f(a, b)", 4, 10, 0.5, 0.1, None));
        r.row(Row::new("plain", 4, 10, 1.0, 0.0, Some(1.0)));
        let csv = r.csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# nilwalk"));
        assert_eq!(
            lines[1],
            "experiment,N,M,estimate,stderr,target,seed,config_digest"
        );
        assert_eq!(lines[2], "\"f(a, b)\",4,10,0.5,0.1,,3,abc");
        assert_eq!(lines[3], "plain,4,10,1,0,1,3,abc");
    }

    #[test]
    fn checks_drive_the_outcome() {
        let mut r = Report::new("t", 0, String::new());
        assert!(r.all_pass());
        r.check("a", true, "");
        r.check("b", false, "x");
        assert!(!r.all_pass());
        assert_eq!(r.summary()["checks"][1]["pass"], false);
    }

    #[test]
    fn error_codes() {
        assert_eq!(Failure::from(nilwalk::Error::Parse("x".into())).code, 2);
        assert_eq!(
            Failure::from(nilwalk::Error::Budget {
                estimate: 2,
                limit: 1
            })
            .code,
            4
        );
        assert_eq!(
            Failure::from(nilwalk::Error::InvalidArgument("x".into())).code,
            3
        );
    }
}
