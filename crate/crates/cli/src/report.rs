//! Reports: titled sections of key/value lines with an overall verdict.
//!
//! The plain form pads keys to a fixed column; the records form prints one
//! tab-separated `section key value` record per line.

use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Records,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Section {
    pub name: String,
    /// `None` for informational sections.
    pub verdict: Option<Verdict>,
    pub lines: Vec<(String, String)>,
}

impl Section {
    pub fn new(name: &str) -> Section {
        Section {
            name: name.to_string(),
            verdict: None,
            lines: Vec::new(),
        }
    }

    pub fn line(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.lines.push((key.into(), value.into()));
    }

    /// Marks the section required; it fails if any call fails.
    pub fn require(&mut self, ok: bool) {
        let v = if ok { Verdict::Pass } else { Verdict::Fail };
        self.verdict = Some(self.verdict.map_or(v, |old| old.max(v)));
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report {
    pub title: String,
    pub sections: Vec<Section>,
}

impl Report {
    pub fn new(title: impl Into<String>) -> Report {
        Report {
            title: title.into(),
            sections: Vec::new(),
        }
    }

    pub fn push(&mut self, section: Section) {
        self.sections.push(section);
    }

    pub fn verdict(&self) -> Verdict {
        self.sections.iter().filter_map(|s| s.verdict).max().unwrap_or(Verdict::Pass)
    }

    pub fn render(&self, format: Format) -> String {
        let mut out = String::new();
        match format {
            Format::Text => {
                writeln!(out, "report {}", self.title).unwrap();
                for s in &self.sections {
                    match s.verdict {
                        Some(v) => writeln!(out, "\n[{}] {}", s.name, v.label()).unwrap(),
                        None => writeln!(out, "\n[{}]", s.name).unwrap(),
                    }
                    for (k, v) in &s.lines {
                        for (i, part) in v.lines().enumerate() {
                            let key = if i == 0 { k.as_str() } else { "" };
                            writeln!(out, "  {key:<18} {part}").unwrap();
                        }
                        if v.is_empty() {
                            writeln!(out, "  {k}").unwrap();
                        }
                    }
                }
                writeln!(out, "\nverdict {}", self.verdict().label()).unwrap();
            }
            Format::Records => {
                writeln!(out, "report\ttitle\t{}", escape(&self.title)).unwrap();
                for s in &self.sections {
                    if let Some(v) = s.verdict {
                        writeln!(out, "{}\tverdict\t{}", s.name, v.label()).unwrap();
                    }
                    for (k, v) in &s.lines {
                        writeln!(out, "{}\t{}\t{}", s.name, escape(k), escape(v)).unwrap();
                    }
                }
                writeln!(out, "report\tverdict\t{}", self.verdict().label()).unwrap();
            }
        }
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\t', "\\t").replace('\n', "\\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_is_the_worst_required_section() {
        let mut r = Report::new("t");
        let mut info = Section::new("info");
        info.line("k", "v");
        r.push(info);
        assert_eq!(r.verdict(), Verdict::Pass);
        let mut req = Section::new("req");
        req.require(true);
        req.require(false);
        req.require(true);
        r.push(req);
        assert_eq!(r.verdict(), Verdict::Fail);
        let records = r.render(Format::Records);
        assert!(records.contains("req\tverdict\tFAIL\n"));
        assert!(records.ends_with("report\tverdict\tFAIL\n"));
    }

    #[test]
    fn multiline_values_are_indented_or_escaped() {
        let mut r = Report::new("t");
        let mut s = Section::new("s");
        s.line("cert", "step 1\nstep 2");
        r.push(s);
        assert!(r.render(Format::Text).contains("  cert               step 1\n                     step 2\n"));
        assert!(r.render(Format::Records).contains("s\tcert\tstep 1\\nstep 2\n"));
    }
}
