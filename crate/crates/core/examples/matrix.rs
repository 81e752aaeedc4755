//! Accuracy of every model at several training fractions, as CSV.
//!
//! cargo run --release --example matrix -- [jobs]

use spatial_relation::dataset::{generate_synthetic, SynthConfig};
use spatial_relation::evaluation::{run_matrix, ExperimentConfig, ModelKind, Resources};
use spatial_relation::model::Tables;

fn main() -> spatial_relation::Result<()> {
    let jobs = std::env::args().nth(1).map_or(4, |s| s.parse().expect("jobs"));
    let out = generate_synthetic(&SynthConfig { n: 3000, text_coupling: 0.8, seed: 2, ..SynthConfig::default() })?;
    let res = Resources { tables: Tables::new(&out.word, Some(&out.visual)), prior: None };
    let config = ExperimentConfig { jobs, ..ExperimentConfig::default() };
    let models = [ModelKind::Cooc, ModelKind::Ff, ModelKind::Ffi, ModelKind::FusedCooc];
    let report = run_matrix(&out.dataset, "synthetic", &[0.01, 0.1, 0.5, 1.0], &models, &config, res)?;
    print!("{}", report.to_csv());
    for f in &report.failures {
        eprintln!("failed: {} {} {}: {}", f.setting, f.model, f.fraction, f.error);
    }
    Ok(())
}
