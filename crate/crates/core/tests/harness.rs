use crowdsim::evac::{run_evacuation, Scenario, Strategy};
use crowdsim::harness::{
    mean_sd, metrics_for, parse_config_str, render_report, run_experiment, write_report, Mode, ParamPoint,
};
use crowdsim::rng::mix_seed;
use crowdsim::stage::run_stage_sim;

const SMALL_EVAC: &str = r#"{"mode":"evac","seeds":[1,2,3,4,5,6,7,8,9,10],
    "evac":{"width":40,"height":40,"n_vulnerable":20,"n_normal":60}}"#;
const SMALL_STAGE: &str = r#"{"mode":"stage","map":["A","C"],"SI":[10,40],"PN":[200,300],"seeds":[5,6,7],
    "stage":{"run_length":300}}"#;

#[test]
fn evac_grid_has_table_shape() {
    let c = parse_config_str(SMALL_EVAC).unwrap();
    let rows = run_experiment(&c);
    assert_eq!(rows.iter().filter(|r| !r.aggregate).count(), 120);
    let aggs: Vec<_> = rows.iter().filter(|r| r.aggregate).collect();
    assert_eq!(aggs.len(), 12);
    let mut cells = Vec::new();
    for s in Scenario::ALL {
        for g in Strategy::ALL {
            cells.push(ParamPoint::Evac {
                scenario: s,
                strategy: g,
            });
        }
    }
    assert_eq!(aggs.iter().map(|r| r.point).collect::<Vec<_>>(), cells);
    assert!(aggs.iter().all(|r| r.runs == 10 && r.error.is_none()));
}

#[test]
fn same_config_gives_byte_identical_reports() {
    for text in [SMALL_EVAC, SMALL_STAGE] {
        let c = parse_config_str(text).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        write_report(&run_experiment(&c), &a).unwrap();
        write_report(&run_experiment(&c), &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }
}

#[test]
fn runs_are_isolated_from_their_neighbours() {
    let c = parse_config_str(SMALL_STAGE).unwrap();
    let rows = run_experiment(&c);
    let points = c.points();
    for r in rows.iter().filter(|r| !r.aggregate) {
        let params = c.stage_params(&points[r.point_index]).unwrap();
        let seed = mix_seed(r.base_seed.unwrap(), r.point_index as u64);
        assert_eq!(r.seed, Some(seed));
        let alone = run_stage_sim(&params, seed).unwrap();
        assert_eq!(r.metric("F"), Some(alone.f));
        assert_eq!(r.metric("APS"), Some(alone.aps));
    }
    // A one-point sweep reproduces the same run exactly.
    let single = parse_config_str(
        r#"{"mode":"evac","scenario":"S3","strategy":"VEGA","seeds":[2],
        "evac":{"width":40,"height":40,"n_vulnerable":20,"n_normal":60}}"#,
    )
    .unwrap();
    let row = &run_experiment(&single)[0];
    let alone = run_evacuation(
        Scenario::S3,
        Strategy::VulnerableExclusive,
        &single.evac,
        mix_seed(2, 0),
    )
    .unwrap();
    assert_eq!(row.metric("ratio"), Some(alone.ratio));
}

#[test]
fn aggregates_recompute_from_the_csv() {
    for text in [SMALL_EVAC, SMALL_STAGE] {
        let c = parse_config_str(text).unwrap();
        let csv_text = render_report(&run_experiment(&c)).unwrap();
        let mut rd = csv::Reader::from_reader(csv_text.as_bytes());
        let header: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
        let col = |name: &str| header.iter().position(|h| h == name).unwrap();
        let records: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
        let mut members: Vec<&csv::StringRecord> = Vec::new();
        let mut checked = 0;
        for rec in &records {
            if &rec[col("aggregate")] == "false" {
                members.push(rec);
                continue;
            }
            assert_eq!(rec[col("runs")].parse::<usize>().unwrap(), members.len());
            for m in metrics_for(c.mode) {
                let xs: Vec<f64> = members.iter().map(|r| r[col(m.name)].parse().unwrap()).collect();
                let (mean, sd) = mean_sd(&xs);
                let got_mean: f64 = rec[col(m.name)].parse().unwrap();
                let got_sd: f64 = rec[col(&format!("{}_sd", m.name))].parse().unwrap();
                assert!(
                    (mean - got_mean).abs() <= 1.5e-4,
                    "{} mean {mean} vs {got_mean}",
                    m.name
                );
                assert!((sd - got_sd).abs() <= 1.5e-4, "{} sd {sd} vs {got_sd}", m.name);
                checked += 1;
            }
            members.clear();
        }
        assert!(checked > 0);
    }
}

#[test]
fn stage_report_echoes_the_grid() {
    let c = parse_config_str(SMALL_STAGE).unwrap();
    assert_eq!(c.mode, Mode::Stage);
    let text = render_report(&run_experiment(&c)).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + 8 * 4);
    assert!(lines[1].starts_with("stage,0,A,200,50,10,30,10,5,"));
    assert!(lines[4].starts_with("stage,0,A,200,50,10,30,10,,,true,3,"));
    assert!(lines[5].starts_with("stage,1,A,200,50,10,30,40,5,"));
}
