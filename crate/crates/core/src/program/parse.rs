use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Function, ProgramError};

/// A step argument: a back-reference `#k` or literal text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Arg {
    Ref(usize),
    Text(String),
}

impl Arg {
    pub fn parse(token: &str) -> Arg {
        let t = token.trim();
        match t.strip_prefix('#').and_then(|n| n.parse().ok()) {
            Some(k) => Arg::Ref(k),
            None => Arg::Text(t.to_string()),
        }
    }
}

impl fmt::Display for Arg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arg::Ref(k) => write!(f, "#{k}"),
            Arg::Text(t) => f.write_str(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgramStep {
    /// Name as written in the program.
    pub function: String,
    pub args: Vec<Arg>,
    pub step_index: usize,
}

impl ProgramStep {
    /// The recognized function, `None` for unknown names.
    pub fn resolved(&self) -> Option<Function> {
        Function::from_name(&self.function)
    }

    pub fn references(&self) -> impl Iterator<Item = usize> + '_ {
        self.args.iter().filter_map(|a| match a {
            Arg::Ref(k) => Some(*k),
            Arg::Text(_) => None,
        })
    }
}

/// Serialized step of the JSON form: `{"function": ..., "args": [...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub function: String,
    #[serde(default)]
    pub args: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<StepRecord>", into = "Vec<StepRecord>")]
pub struct Program {
    steps: Vec<ProgramStep>,
}

impl TryFrom<Vec<StepRecord>> for Program {
    type Error = ProgramError;

    fn try_from(records: Vec<StepRecord>) -> Result<Self, ProgramError> {
        Program::from_records(records)
    }
}

impl From<Program> for Vec<StepRecord> {
    fn from(p: Program) -> Self {
        p.steps
            .into_iter()
            .map(|s| StepRecord {
                function: s.function,
                args: s.args.iter().map(Arg::to_string).collect(),
            })
            .collect()
    }
}

impl Program {
    pub fn from_records(records: Vec<StepRecord>) -> Result<Self, ProgramError> {
        let steps = records
            .into_iter()
            .enumerate()
            .map(|(i, r)| ProgramStep {
                function: r.function.trim().to_string(),
                args: r.args.iter().map(|a| Arg::parse(a)).collect(),
                step_index: i,
            })
            .collect();
        Self::from_steps(steps)
    }

    fn from_steps(steps: Vec<ProgramStep>) -> Result<Self, ProgramError> {
        if steps.is_empty() {
            return Err(ProgramError::Empty);
        }
        for s in &steps {
            if s.function.is_empty() {
                return Err(ProgramError::Syntax {
                    step: s.step_index,
                    message: "missing function name".into(),
                });
            }
            if let Some(target) = s.references().find(|&k| k >= s.step_index) {
                return Err(ProgramError::ForwardReference {
                    step: s.step_index,
                    target,
                });
            }
        }
        Ok(Self { steps })
    }

    pub fn steps(&self) -> &[ProgramStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Recognized functions of all steps, skipping unknown names.
    pub fn functions(&self) -> impl Iterator<Item = Function> + '_ {
        self.steps.iter().filter_map(ProgramStep::resolved)
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{}(", s.function)?;
            for (j, a) in s.args.iter().enumerate() {
                if j > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

fn parse_call(text: &str, step: usize) -> Result<StepRecord, ProgramError> {
    let syntax = |m: &str| ProgramError::Syntax {
        step,
        message: format!("{m}: {text}"),
    };
    let open = text.find('(').ok_or_else(|| syntax("expected `(`"))?;
    let inner = text[open + 1..]
        .strip_suffix(')')
        .ok_or_else(|| syntax("expected closing `)`"))?;
    if inner.contains('(') || inner.contains(')') {
        return Err(syntax("nested call"));
    }
    let function = text[..open].trim();
    if function.is_empty() || !function.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(syntax("bad function name"));
    }
    let args = if inner.trim().is_empty() {
        Vec::new()
    } else {
        inner.split(',').map(|a| a.trim().to_string()).collect::<Vec<_>>()
    };
    if args.iter().any(String::is_empty) {
        return Err(syntax("empty argument"));
    }
    Ok(StepRecord {
        function: function.to_string(),
        args,
    })
}

/// Parses either a JSON array of step records or calls separated by `;` or
/// newlines, such as `select(shelf); filter(#0, metal)`.
pub fn parse_program(text: &str) -> Result<Program, ProgramError> {
    let t = text.trim();
    if t.is_empty() {
        return Err(ProgramError::Empty);
    }
    if t.starts_with('[') {
        let records: Vec<StepRecord> = serde_json::from_str(t).map_err(|e| ProgramError::Json(e.to_string()))?;
        return Program::from_records(records);
    }
    let records = t
        .split([';', '\n'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .enumerate()
        .map(|(i, s)| parse_call(s, i))
        .collect::<Result<Vec<_>, _>>()?;
    Program::from_records(records)
}
