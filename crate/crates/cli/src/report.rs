//! Line-oriented reports ending in a `key=value` summary block.

use std::fmt::Write as _;

/// Exit status contract: 0 success, 1 usage or parse error, 2 a failed
/// validation or audit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Pass,
    Error,
    Fail,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Error => 1,
            Status::Fail => 2,
        }
    }

    fn word(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Error => "ERROR",
            Status::Fail => "FAIL",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Line {
    pub text: String,
    /// Appended as `PASS` / `FAIL` when present.
    pub verdict: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report {
    pub command: String,
    pub input: String,
    pub lines: Vec<Line>,
    pub summary: Vec<(String, String)>,
    failed: bool,
    error: bool,
}

impl Report {
    pub fn new(command: &str, input: &str) -> Self {
        Report { command: command.into(), input: input.into(), lines: Vec::new(), summary: Vec::new(), failed: false, error: false }
    }

    pub fn info(&mut self, text: impl Into<String>) {
        self.lines.push(Line { text: text.into(), verdict: None });
    }

    /// A checked line; a false verdict fails the report.
    pub fn check(&mut self, text: impl Into<String>, ok: bool) {
        self.failed |= !ok;
        self.lines.push(Line { text: text.into(), verdict: Some(ok) });
    }

    /// A line that could not be evaluated; fails the report without being
    /// fatal to the remaining lines.
    pub fn line_error(&mut self, text: impl Into<String>) {
        self.failed = true;
        self.lines.push(Line { text: format!("{} ERROR", text.into()), verdict: None });
    }

    /// A usage or input error: the report carries only this message.
    pub fn fatal(&mut self, text: impl Into<String>) {
        self.error = true;
        self.lines.push(Line { text: format!("error: {}", text.into()), verdict: None });
    }

    pub fn fail(&mut self) {
        self.failed = true;
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.into(), value.to_string()));
    }

    pub fn status(&self) -> Status {
        if self.error {
            Status::Error
        } else if self.failed {
            Status::Fail
        } else {
            Status::Pass
        }
    }

    pub fn render(&self, color: bool) -> String {
        let paint = |ok: bool| match (color, ok) {
            (false, true) => "PASS".to_string(),
            (false, false) => "FAIL".to_string(),
            (true, true) => "\x1b[32mPASS\x1b[0m".to_string(),
            (true, false) => "\x1b[31mFAIL\x1b[0m".to_string(),
        };
        let mut out = String::new();
        for l in &self.lines {
            match l.verdict {
                Some(ok) => writeln!(out, "{} {}", l.text, paint(ok)),
                None => writeln!(out, "{}", l.text),
            }
            .expect("writing to a string");
        }
        let status = self.status();
        out.push_str("[summary]\n");
        writeln!(out, "command={}", self.command).expect("writing to a string");
        writeln!(out, "input={}", self.input).expect("writing to a string");
        for (k, v) in &self.summary {
            writeln!(out, "{k}={v}").expect("writing to a string");
        }
        writeln!(out, "status={}", status.word()).expect("writing to a string");
        writeln!(out, "exit={}", status.code()).expect("writing to a string");
        out
    }
}
