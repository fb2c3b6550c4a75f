//! A configured campaign run through the harness, with caching.

use momentlab::harness::{run_campaign, Cache, CampaignConfig, RunOptions, CODE_VERSION};

const CONFIG: &str = r#"
kind = "pss"
seed = 2024
[grid]
p = [5, 7]
n = [2, 3]
e = [3]
[ensemble]
count = 40
"#;

fn main() -> momentlab::Result<()> {
    let config = CampaignConfig::from_toml(CONFIG).expect("valid config");
    let dir = std::env::temp_dir().join("momentlab-example-cache");
    let opts = RunOptions {
        cache: Some(Cache::new(&dir)),
        code_version: CODE_VERSION.to_string(),
    };
    for pass in 1..=2 {
        let out = run_campaign(&config, &opts)?;
        println!("pass {pass}: {} rows, {} cache hits, exit code {}", out.rows.len(), out.cache_hits, out.exit_code());
        if pass == 1 {
            for row in &out.rows {
                println!("  {:?} {:?} {:?}", row.params, row.status, row.metrics);
            }
        }
    }
    let _ = std::fs::remove_dir_all(dir);
    Ok(())
}
