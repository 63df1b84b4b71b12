//! Run configuration: one `key value` pair per line, `#` starts a comment.
//!
//! ```text
//! class    p0.class          # relative to the config file
//! budget   40
//! seed     0
//! params   adjacent          # or distance-2
//! fragment dist2(x,a)        # repeatable
//! require  properties        # repeatable
//! expect   dist2(x,a) NONFORKING ZERO
//! independence yes
//! audit    yes
//! output   out               # overridden by --out
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hrushovski::class::ClassSpec;
use hrushovski::error::{Error, Result};
use hrushovski::formula::FormulaInstance;

/// How the fragment's parameters `a` and `b` are chosen in the approximation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamSelector {
    /// The least edge.
    Adjacent,
    /// The least pair at distance two.
    DistanceTwo,
}

impl FromStr for ParamSelector {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "adjacent" => Ok(ParamSelector::Adjacent),
            "distance-2" | "dist2" => Ok(ParamSelector::DistanceTwo),
            other => Err(format!("unknown parameter selector `{other}` (adjacent, distance-2)")),
        }
    }
}

impl fmt::Display for ParamSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParamSelector::Adjacent => "adjacent",
            ParamSelector::DistanceTwo => "distance-2",
        })
    }
}

/// A required fork and zero label for one fragment row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expectation {
    pub instance: String,
    pub fork: String,
    pub zero: String,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub class_path: PathBuf,
    pub class: ClassSpec,
    pub budget: usize,
    pub seed: u64,
    pub params: ParamSelector,
    /// Formula templates over the parameter names `a` and `b`.
    pub fragment: Vec<String>,
    pub require_properties: bool,
    pub expectations: Vec<Expectation>,
    pub independence: bool,
    pub audit: bool,
    pub output: Option<PathBuf>,
}

fn parse_err<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse { line, msg: msg.into() })
}

fn flag(line: usize, value: &str) -> Result<bool> {
    match value {
        "yes" | "true" | "on" => Ok(true),
        "no" | "false" | "off" => Ok(false),
        other => parse_err(line, format!("expected yes or no, found `{other}`")),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        RunConfig::parse(&text, path.parent())
    }

    /// Parses config text; relative paths resolve against `dir`.
    pub fn parse(text: &str, dir: Option<&Path>) -> Result<RunConfig> {
        let mut class_path = None;
        let mut budget = None;
        let mut seed = 0;
        let mut params = ParamSelector::Adjacent;
        let mut fragment = Vec::new();
        let mut require_properties = false;
        let mut expectations = Vec::new();
        let mut independence = false;
        let mut audit = false;
        let mut output = None;
        let resolve = |p: &str| match dir {
            Some(d) => d.join(p),
            None => PathBuf::from(p),
        };

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap().trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = match content.split_once(char::is_whitespace) {
                Some((k, v)) => (k, v.trim()),
                None => return parse_err(line, format!("`{content}` has no value")),
            };
            match key {
                "class" => class_path = Some(resolve(value)),
                "budget" => {
                    let b: usize = value.parse().or_else(|_| parse_err(line, "budget must be a whole number"))?;
                    if b == 0 {
                        return parse_err(line, "budget must be at least 1");
                    }
                    budget = Some(b);
                }
                "seed" => seed = value.parse().or_else(|_| parse_err(line, "seed must be a whole number"))?,
                "params" => params = value.parse().or_else(|e: String| parse_err(line, e))?,
                "fragment" => {
                    FormulaInstance::parse(value, &|n| matches!(n, "a" | "b").then_some(0))
                        .or_else(|e| parse_err(line, e.to_string()))?;
                    fragment.push(value.to_string());
                }
                "require" => match value {
                    "properties" => require_properties = true,
                    other => return parse_err(line, format!("unknown requirement `{other}`")),
                },
                "expect" => {
                    let words: Vec<&str> = value.split_whitespace().collect();
                    if words.len() < 3 {
                        return parse_err(line, "expected `expect <formula> <FORK> <ZERO>`");
                    }
                    let n = words.len();
                    let instance = words[..n - 2].join(" ");
                    let canonical = FormulaInstance::parse(&instance, &|n| matches!(n, "a" | "b").then_some(0))
                        .or_else(|e| parse_err(line, e.to_string()))?
                        .to_string();
                    expectations.push(Expectation {
                        instance: canonical,
                        fork: words[n - 2].to_string(),
                        zero: words[n - 1].to_string(),
                    });
                }
                "independence" => independence = flag(line, value)?,
                "audit" => audit = flag(line, value)?,
                "output" => output = Some(PathBuf::from(value)),
                other => return parse_err(line, format!("unknown key `{other}`")),
            }
        }

        let class_path = class_path.ok_or_else(|| Error::InvalidInput("config names no class file".into()))?;
        let class_text = std::fs::read_to_string(&class_path)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", class_path.display())))?;
        let class = ClassSpec::parse(&class_text, class_path.parent())?;
        let budget = budget.ok_or_else(|| Error::InvalidInput("config sets no budget".into()))?;
        if fragment.is_empty() {
            return Err(Error::InvalidInput("config lists no fragment formulas".into()));
        }
        Ok(RunConfig {
            class_path,
            class,
            budget,
            seed,
            params,
            fragment,
            require_properties,
            expectations,
            independence,
            audit,
            output,
        })
    }
}
