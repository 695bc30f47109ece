//! Question files: one JSON object per line.
//!
//! ```text
//! {"id":"q1","stem":["hidden"],"choices":[["laughable"],["veiled"],["ancient"],["revealed"]],"answer":1}
//! ```

use std::path::Path;

use lexfuse_core::{Instance, QuestionSet, WordTuple};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::io::read_text;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionRecord {
    pub id: String,
    pub stem: Vec<String>,
    pub choices: Vec<Vec<String>>,
    pub answer: usize,
}

impl QuestionRecord {
    fn from_instance(inst: &Instance) -> Self {
        Self {
            id: inst.id.clone(),
            stem: inst.stem.words().to_vec(),
            choices: inst.choices.iter().map(|c| c.words().to_vec()).collect(),
            answer: inst.answer,
        }
    }

    fn into_instance(self) -> CliResult<Instance> {
        let stem = WordTuple::new(self.stem)?;
        let choices = self
            .choices
            .into_iter()
            .map(WordTuple::new)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Instance::new(self.id, stem, choices, self.answer)?)
    }
}

pub fn parse_questions(text: &str, source: &str) -> CliResult<QuestionSet> {
    let mut instances = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let at = || format!("{source}:{}", i + 1);
        let record: QuestionRecord =
            serde_json::from_str(line).map_err(|e| CliError::Input(format!("{}: {e}", at())))?;
        instances.push(record.into_instance().map_err(|e| e.context(at()))?);
    }
    QuestionSet::new(instances).map_err(|e| CliError::from(e).context(source))
}

pub fn load_questions(path: &Path) -> CliResult<QuestionSet> {
    parse_questions(&read_text(path)?, &path.display().to_string())
}

pub fn render_questions(questions: &QuestionSet) -> String {
    let mut out = String::new();
    for inst in questions.instances() {
        let record = QuestionRecord::from_instance(inst);
        out.push_str(&serde_json::to_string(&record).expect("question records serialize"));
        out.push('\n');
    }
    out
}
