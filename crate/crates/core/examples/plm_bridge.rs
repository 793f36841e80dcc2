//! Zero-shot evaluation through the chat-completions bridge, with a canned
//! in-process endpoint standing in for a hosted model. A real deployment
//! implements `CompletionClient` over HTTP and reads its endpoint from the
//! `SOLNAV_PLM_*` environment variables.
//!
//!     cargo run --example plm_bridge

use serde_json::{json, Value};
use solnav::bridge::{chat_request, query_action_block, run_eval, CompletionClient, EndpointConfig};
use solnav::commands::simulate;
use solnav::metrics::format_table;
use solnav::rollout::RolloutConfig;
use solnav::sim::{CameraModel, Difficulty};

/// Answers every request with chatty text around one action list, and
/// every fifth request with no list at all.
struct Canned(std::sync::atomic::AtomicUsize);

impl CompletionClient for Canned {
    fn complete(&self, _: &EndpointConfig, _: &Value) -> solnav::Result<Value> {
        let n = self.0.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        let text = if n % 5 == 4 { "I am not sure where to go." } else { "The corridor is clear. Actions: [3, 3, 3, 3]" };
        Ok(json!({ "choices": [{ "message": { "role": "assistant", "content": text } }] }))
    }
}

fn main() -> solnav::Result<()> {
    let endpoint = EndpointConfig { model_name: "canned".into(), max_retries: 0, ..EndpointConfig::from_env() };
    let client = Canned(Default::default());

    let request = chat_request("<prompt text>", &endpoint);
    println!("request body: {request}");
    let q = query_action_block("<prompt text>", 4, &endpoint, &client)?;
    println!("parsed block {:?} after {} attempt(s)\n", q.block.indices(), q.attempts);

    let dir = std::env::temp_dir().join("solnav-bridge-example");
    let _ = std::fs::remove_dir_all(&dir);
    simulate(0, 6, Difficulty::Corridor, &CameraModel::default(), &dir.join("episodes"), 1)?;
    let cfg = RolloutConfig { radius: 1.0, ..Default::default() };
    let run = run_eval(&dir.join("episodes"), &endpoint, &client, &cfg, 2, &dir.join("metrics.jsonl"))?;
    print!("{}", format_table(&[("canned endpoint".to_string(), run.summary)]));
    println!("fallback stop blocks: {:?}", run.parse_failures);
    println!("metrics written to {}", dir.join("metrics.jsonl").display());
    Ok(())
}
