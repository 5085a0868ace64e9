//! Seeded generator of synthetic ML-service projects of a requested size,
//! used to measure how analysis time grows with lines of code.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Lines per generated module (approximately).
const MODULE_LINES: usize = 240;

const CLIENTS: &[(&str, &str, &str)] = &[
    ("import boto3", "boto3.client('comprehend')", "detect_sentiment(Text=item, LanguageCode='en')"),
    (
        "from azure.ai.textanalytics import TextAnalyticsClient",
        "TextAnalyticsClient(endpoint=ENDPOINT, credential=KEY)",
        "detect_language(documents=[item])",
    ),
    (
        "from google.cloud import language_v1",
        "language_v1.LanguageServiceClient()",
        "analyze_sentiment(document={'content': item})",
    ),
];

/// Writes a project of roughly `target_loc` lines under `dir` and returns
/// the exact number of lines written. The same seed yields the same files.
pub fn generate_project(dir: &Path, target_loc: usize, seed: u64) -> io::Result<usize> {
    std::fs::create_dir_all(dir)?;
    let mut rng = StdRng::seed_from_u64(seed);
    let mut written = 0;
    let mut index = 0;
    while written < target_loc.max(1) {
        let budget = (target_loc - written).clamp(12, MODULE_LINES);
        let text = module(&mut rng, index, budget);
        written += text.lines().count();
        std::fs::write(dir.join(format!("module_{index:03}.py")), text)?;
        index += 1;
    }
    Ok(written)
}

fn module(rng: &mut StdRng, index: usize, budget: usize) -> String {
    let (import, ctor, method) = CLIENTS[rng.gen_range(0..CLIENTS.len())];
    let mut out = String::new();
    let _ = writeln!(out, "import os\nimport time\n{import}\n");
    let _ = writeln!(out, "ENDPOINT = os.getenv('ENDPOINT_{index}')\nKEY = os.getenv('KEY_{index}')");
    let _ = writeln!(out, "client = {ctor}\n");
    let mut functions = 0;
    while out.lines().count() + 14 <= budget {
        let name = format!("step_{index}_{functions}");
        match rng.gen_range(0..4) {
            0 => {
                let _ = writeln!(out, "def {name}(items):\n    results = []\n    for item in items:");
                let _ = writeln!(out, "        response = client.{method}\n        results.append(response)");
                let _ = writeln!(out, "    return results\n");
            }
            1 => {
                let _ = writeln!(out, "def {name}(rows, limit={}):", rng.gen_range(1..100));
                let _ = writeln!(out, "    total = 0\n    for row in rows:\n        if row > limit:");
                let _ = writeln!(out, "            total += row\n        else:\n            total -= 1");
                let _ = writeln!(out, "    return total\n");
            }
            2 if functions > 0 => {
                let callee = format!("step_{index}_{}", rng.gen_range(0..functions));
                let _ = writeln!(out, "def {name}(batches):\n    out = []\n    for batch in batches:");
                let _ = writeln!(out, "        out.extend({callee}(batch))\n        time.sleep(0.1)");
                let _ = writeln!(out, "    return out\n");
            }
            _ => {
                let _ = writeln!(out, "class Worker{functions}:\n    def __init__(self, name):");
                let _ = writeln!(out, "        self.name = name\n        self.values = {{}}\n");
                let _ = writeln!(out, "    def {name}(self, key, value):\n        self.values[key] = value");
                let _ = writeln!(out, "        return [v for v in self.values.values() if v]\n");
            }
        }
        functions += 1;
    }
    let mut pad = 0;
    while out.lines().count() < budget {
        let _ = writeln!(out, "LIMIT_{pad} = {}", rng.gen_range(0..1000));
        pad += 1;
    }
    out
}
