//! Episodes and their on-disk directory layout.
//!
//! ```text
//! <episode>/episode.meta      key=value lines
//! <episode>/world.txt         scene description (optional)
//! <episode>/frames/0000/      one frame directory per pre-action state
//! ```

use std::fs;
use std::path::Path;
use std::sync::Arc;

use crate::action::{format_action_list, parse_action_list, ActionId};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::pose::Pose;
use crate::sim::World;

pub const META_FILE: &str = "episode.meta";
pub const SCENE_FILE: &str = "world.txt";
pub const FRAMES_DIR: &str = "frames";

#[derive(Debug, Clone)]
pub struct Episode {
    pub id: String,
    pub start: Pose,
    pub goal: (f64, f64),
    pub instruction: String,
    /// One frame per pre-action state.
    pub frames: Vec<Arc<Frame>>,
    /// Ground truth, ending with stop.
    pub actions: Vec<ActionId>,
    pub shortest_path_length: f64,
    /// Scene the episode was generated in, when known.
    pub world: Option<World>,
}

impl Episode {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: String,
        start: Pose,
        goal: (f64, f64),
        instruction: String,
        frames: Vec<Arc<Frame>>,
        actions: Vec<ActionId>,
        shortest_path_length: f64,
        world: Option<World>,
    ) -> Result<Self> {
        let ep = Self { id, start, goal, instruction, frames, actions, shortest_path_length, world };
        ep.validate()?;
        Ok(ep)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames.len() != self.actions.len() {
            return Err(Error::InvalidEpisode(format!(
                "{}: {} frames for {} actions",
                self.id,
                self.frames.len(),
                self.actions.len()
            )));
        }
        if self.actions.last() != Some(&ActionId::Stop) {
            return Err(Error::InvalidEpisode(format!("{}: trajectory must end with stop", self.id)));
        }
        if !(self.shortest_path_length > 0.0) {
            return Err(Error::InvalidEpisode(format!(
                "{}: shortest path length must be positive",
                self.id
            )));
        }
        Ok(())
    }

    pub fn meta_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("id={}\n", self.id));
        s.push_str(&format!("start={}\n", self.start));
        s.push_str(&format!("goal={} {}\n", self.goal.0, self.goal.1));
        s.push_str(&format!("instruction={}\n", self.instruction));
        s.push_str(&format!("shortest_path_length={}\n", self.shortest_path_length));
        s.push_str(&format!("actions={}\n", format_action_list(&self.actions)));
        s
    }

    pub fn save_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(META_FILE), self.meta_text())?;
        if let Some(w) = &self.world {
            fs::write(dir.join(SCENE_FILE), w.to_scene_text())?;
        }
        for (i, f) in self.frames.iter().enumerate() {
            f.save_dir(&dir.join(FRAMES_DIR).join(format!("{i:04}")))?;
        }
        Ok(())
    }

    pub fn load_dir(dir: &Path) -> Result<Self> {
        let meta_path = dir.join(META_FILE);
        if !meta_path.is_file() {
            return Err(Error::MissingFile(META_FILE.into()));
        }
        let text = fs::read_to_string(&meta_path)?;
        let mut fields = std::collections::HashMap::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::MalformedRecord {
                path: meta_path.clone(),
                line: n + 1,
                reason: "expected key=value".into(),
            })?;
            fields.insert(k.trim().to_string(), (n + 1, v.to_string()));
        }
        let get = |k: &str| -> Result<&(usize, String)> {
            fields.get(k).ok_or_else(|| Error::Format {
                path: meta_path.clone(),
                reason: format!("missing key {k:?}"),
            })
        };
        let bad = |line: usize, reason: String| Error::MalformedRecord { path: meta_path.clone(), line, reason };
        let floats = |k: &str, n: usize| -> Result<Vec<f64>> {
            let (line, v) = get(k)?;
            let vals: Vec<f64> = v
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| bad(*line, format!("{k}: {e}")))?;
            if vals.len() != n {
                return Err(bad(*line, format!("{k}: expected {n} numbers")));
            }
            Ok(vals)
        };
        let s = floats("start", 3)?;
        let g = floats("goal", 2)?;
        let l = floats("shortest_path_length", 1)?;
        let (aline, atext) = get("actions")?;
        let actions = parse_action_list(atext).map_err(|e| bad(*aline, e.to_string()))?;
        let world = match fs::read_to_string(dir.join(SCENE_FILE)) {
            Ok(t) => Some(World::from_scene_text(&t).map_err(|reason| Error::Format {
                path: dir.join(SCENE_FILE),
                reason,
            })?),
            Err(_) => None,
        };
        let frames_dir = dir.join(FRAMES_DIR);
        let frames = (0..actions.len())
            .map(|i| Frame::load_dir(&frames_dir.join(format!("{i:04}"))).map(Arc::new))
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            get("id")?.1.clone(),
            Pose::new(s[0], s[1], s[2] as i32),
            (g[0], g[1]),
            get("instruction")?.1.clone(),
            frames,
            actions,
            l[0],
            world,
        )
    }
}

/// Loads every episode directory (one containing `episode.meta`) under `root`, sorted by name.
pub fn load_episodes(root: &Path) -> Result<Vec<Episode>> {
    if root.join(META_FILE).is_file() {
        return Ok(vec![Episode::load_dir(root)?]);
    }
    let mut dirs: Vec<_> = fs::read_dir(root)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(META_FILE).is_file())
        .collect();
    dirs.sort();
    dirs.iter().map(|d| Episode::load_dir(d)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{generate_episode, CameraModel, Difficulty};

    #[test]
    fn directory_round_trip() {
        let cam = CameraModel { width: 24, height: 18, ..Default::default() };
        let ep = generate_episode(3, Difficulty::Rooms, &cam).unwrap();
        let dir = tempfile::tempdir().unwrap();
        ep.save_dir(dir.path()).unwrap();
        let back = Episode::load_dir(dir.path()).unwrap();
        assert_eq!(back.meta_text(), ep.meta_text());
        assert_eq!(back.world, ep.world);
        assert_eq!(back.frames.len(), ep.frames.len());
        assert_eq!(back.frames[0].rgb(), ep.frames[0].rgb());
    }

    #[test]
    fn rejects_bad_meta() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(META_FILE), "id=x\nstart=1 2\n").unwrap();
        assert!(Episode::load_dir(dir.path()).is_err());
        assert!(matches!(
            Episode::load_dir(&dir.path().join("nope")),
            Err(Error::MissingFile(_))
        ));
    }
}
