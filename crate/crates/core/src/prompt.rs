//! Pure-language prompt assembly: system description, observation sequence, instruction.

use std::fmt::Write as _;

use crate::action::ActionId;
use crate::error::{Error, Result};
use crate::history::ObservationSequence;

/// Bumped whenever the wording of [`default_system_text`] changes.
pub const SYSTEM_TEXT_VERSION: u32 = 1;

pub fn default_system_text(n_a: usize) -> String {
    let mut s = String::new();
    s.push_str("You are a navigation agent moving through an indoor environment.\n");
    s.push_str("Action space:\n");
    for a in ActionId::ALL {
        let _ = writeln!(s, "{}: {}", a.index(), a.description());
    }
    s.push_str("Task: follow the instruction and stop as soon as you reach the goal it describes.\n");
    s.push_str(
        "Each observation is a grid over the camera view, row 1 at the top and column 1 at the left. \
         A cell reads \"[row,col]: depth=<meters>, semantic=<category>, color=<name>\".\n",
    );
    s.push_str(
        "Observations are listed oldest first and labeled with their time step relative to now; \
         t-0 is the current view. Older views use coarser grids.\n",
    );
    let noun = if n_a == 1 { "action" } else { "actions" };
    let _ = writeln!(
        s,
        "Respond with exactly {n_a} {noun} as a bracketed list of action ids. \
         After a stop, every remaining action must also be stop."
    );
    s
}

#[derive(Debug, Clone)]
pub struct PromptParts {
    pub system_text: String,
    pub sequence: ObservationSequence,
    pub instruction: String,
    /// Number of actions requested in the answer cue.
    pub n_a: usize,
}

pub fn observation_header(timestep: i64, grid_n: usize) -> String {
    format!("Observation t-{} ({grid_n}x{grid_n} grid):", -timestep)
}

/// System block, observation block, instruction, answer cue; LF-separated.
pub fn build_prompt(parts: &PromptParts) -> Result<String> {
    let instruction = parts.instruction.trim();
    if instruction.is_empty() {
        return Err(Error::EmptyInstruction);
    }
    if parts.system_text.trim().is_empty() {
        return Err(Error::EmptySystemText);
    }
    let mut out = String::with_capacity(64 * (parts.sequence.cell_line_count() + 32));
    out.push_str(parts.system_text.trim_end_matches('\n'));
    out.push_str("\n\n");
    for obs in &parts.sequence.entries {
        out.push_str(&observation_header(obs.timestep, obs.grid_n));
        out.push('\n');
        for line in obs.cell_lines() {
            out.push_str(&line);
            out.push('\n');
        }
    }
    let _ = write!(out, "\nInstruction: {instruction}\nPredict the next {} actions:\n", parts.n_a);
    Ok(out)
}
