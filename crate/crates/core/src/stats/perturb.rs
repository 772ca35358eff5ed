//! Synthetic distractors for the robustness harness: swap the first person
//! or scene word for another one, or reduce the caption to that word.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Caption;
use crate::error::{Error, Result};
use crate::text::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbTask {
    ReplacePerson,
    ReplaceScene,
    JustPerson,
    JustScene,
}

impl PerturbTask {
    pub const ALL: [PerturbTask; 4] = [
        PerturbTask::ReplacePerson,
        PerturbTask::ReplaceScene,
        PerturbTask::JustPerson,
        PerturbTask::JustScene,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PerturbTask::ReplacePerson => "replace-person",
            PerturbTask::ReplaceScene => "replace-scene",
            PerturbTask::JustPerson => "just-person",
            PerturbTask::JustScene => "just-scene",
        }
    }

    fn uses_person(self) -> bool {
        matches!(self, PerturbTask::ReplacePerson | PerturbTask::JustPerson)
    }
}

impl fmt::Display for PerturbTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PerturbTask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PerturbTask::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown perturbation task `{s}`")))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Lexicons {
    pub person: Vec<String>,
    pub scene: Vec<String>,
}

/// Builds a distractor for `correct`. `Ok(None)` (with a warning) when the
/// caption has no word from the task's lexicon or no alternative word exists.
pub fn perturb_generate(
    correct: &Caption,
    lexicons: &Lexicons,
    task: PerturbTask,
    seed: u64,
) -> Result<Option<Caption>> {
    let lexicon: Vec<String> = if task.uses_person() {
        &lexicons.person
    } else {
        &lexicons.scene
    }
    .iter()
    .map(|w| w.to_lowercase())
    .collect();
    let mut tokens: Vec<String> = tokenize(correct.text()).tokens().to_vec();
    let Some(pos) = tokens.iter().position(|t| lexicon.contains(t)) else {
        log::debug!("no {task} lexicon word in `{}`; case skipped", correct.text());
        return Ok(None);
    };
    let hit = tokens[pos].clone();
    let text = match task {
        PerturbTask::JustPerson | PerturbTask::JustScene => hit,
        PerturbTask::ReplacePerson | PerturbTask::ReplaceScene => {
            let mut seen = std::collections::HashSet::new();
            let options: Vec<&String> = lexicon.iter().filter(|w| **w != hit && seen.insert(*w)).collect();
            if options.is_empty() {
                log::debug!("lexicon offers no replacement for `{hit}`; case skipped");
                return Ok(None);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            tokens[pos] = options[rng.gen_range(0..options.len())].clone();
            tokens.join(" ")
        }
    };
    Caption::new(text).map(Some)
}
