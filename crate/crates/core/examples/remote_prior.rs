//! Queries an HTTP scoring service for relation priors.
//!
//! cargo run --example remote_prior -- http://127.0.0.1:8080 man horse [top_k]
//!
//! The service answers `POST /v1/predictions` with `{"subject", "object", "top_k"}`
//! and returns `{"predictions": [{"relation", "score"}, ...]}`.

use std::time::Duration;

use spatial_relation::prior::{PriorProvider, RemoteConfig, RemotePrior};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let [endpoint, subject, object] = [0, 1, 2].map(|i| args.get(i).cloned());
    let (Some(endpoint), Some(subject), Some(object)) = (endpoint, subject, object) else {
        eprintln!("usage: remote_prior <endpoint> <subject> <object> [top_k]");
        std::process::exit(1);
    };
    let mut config = RemoteConfig::new(endpoint);
    config.top_k = args.get(3).map_or(20, |s| s.parse().expect("top_k"));
    config.timeout = Duration::from_secs(10);
    let client = match RemotePrior::new(config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    };
    match client.query(&subject, &object) {
        Ok(record) => {
            for p in &record.predictions {
                println!("{:<20} {:.4}", p.relation, p.score);
            }
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    }
}
