mod common;

use std::collections::BTreeSet;

use pkgraph::baselines::{encode_tabular, BaselineKind};
use pkgraph::cohortgen::PlantedSignal;
use pkgraph::gnn::{Arch, TrainConfig, Variant};
use pkgraph::graphx::{AblationFacet, Direction, GraphVersion, Version};
use pkgraph::harness::{ablation_suite, run_protocol, summarize, BaselineTrainer, GnnTrainer, Protocol};

fn protocol() -> Protocol {
    Protocol { n_splits: 3, eval_splits: Some(1), k_folds: 3, seed: 5, record_runtime: false, ..Protocol::default() }
}

#[test]
fn gnn_and_baselines_run_the_protocol() {
    let signal = PlantedSignal::on_frequent_codes(6, 6, 3.0, -6.0, 0.25);
    let records = common::cohort(200, Some(signal), 8);
    let graphs = common::numeric(&records, GraphVersion::new(Version::V3, Direction::Undirected));
    let config = TrainConfig { epochs: 4, ..TrainConfig::default() };

    let gnn =
        GnnTrainer { graphs: &graphs, config: config.clone(), arch: Arch::Sage, variant: Variant::Linear, tag: None };
    let results = run_protocol(&gnn, &protocol()).unwrap();
    assert_eq!(results.len(), 3);
    assert!(results.iter().all(|r| (0.0..=100.0).contains(&r.accuracy) && r.runtime_s == 0.0));
    assert_eq!(results[0].config, "PKGSage-variant1");
    assert_eq!(run_protocol(&gnn, &protocol()).unwrap(), results);

    let table = encode_tabular(&records);
    assert_eq!(table.len(), graphs.len());
    for kind in BaselineKind::ALL {
        let rows = run_protocol(&BaselineTrainer { data: &table, kind }, &protocol()).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(summarize(&rows)[0].runs, 3);
    }
}

#[test]
fn ablation_suite_reports_deltas_against_the_full_graph() {
    let records = common::cohort(120, None, 2);
    let graphs = common::numeric(&records, GraphVersion::new(Version::V2, Direction::Directed));
    let config = TrainConfig { epochs: 2, ..TrainConfig::default() };
    let sets = vec![
        BTreeSet::from([AblationFacet::Social]),
        BTreeSet::from([AblationFacet::Diseases, AblationFacet::Medication]),
    ];
    let rows = ablation_suite(&graphs, &config, Arch::Attention, Variant::Conv, &sets, &protocol()).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].excluded.is_empty());
    assert_eq!((rows[0].delta_accuracy, rows[0].delta_f1), (0.0, 0.0));
    for row in &rows[1..] {
        assert!((row.delta_accuracy - (row.accuracy - rows[0].accuracy)).abs() < 1e-9);
    }
    assert!(rows[2].results[0].config.ends_with(" -medication-diseases"), "{}", rows[2].results[0].config);
}
