use doa_bench::config::parse_sweep;
use doa_bench::sweep::{self, RunOptions, TrialRecord};

const SWEEP: &str = r#"
n_trials = 40
base_seed = 123
snr_db_list = [-2.0, 10.0]
snapshots_list = [25, 100]

[base]
m = 7
angles = [-0.3, 0.2, 1.4]
source_cov = [[1.0, 0.3, 0.0], [0.3, 1.0, 0.0], [0.0, 0.0, 2.0]]

[[methods]]
method = "mode"

[[methods]]
method = "puma"

[[methods]]
method = "modex"
p_extra = 2
"#;

fn rows(text: &str, jobs: usize) -> Vec<TrialRecord> {
    let sweep = parse_sweep(text).unwrap().resolve().unwrap();
    sweep::run(&sweep, RunOptions { jobs, timing: false }).unwrap()
}

fn csv_bytes(text: &str, jobs: usize) -> Vec<u8> {
    let sweep = parse_sweep(text).unwrap().resolve().unwrap();
    let mut out = Vec::new();
    sweep::write_csv(&mut out, &sweep, &rows(text, jobs)).unwrap();
    out
}

#[test]
fn rows_are_ordered_by_cell_method_and_trial() {
    let rows = rows(SWEEP, 3);
    assert_eq!(rows.len(), 2 * 2 * 3 * 41);
    let keys: Vec<(u64, usize)> = rows.iter().map(|r| (r.snr_db.to_bits(), r.n_snapshots)).collect();
    assert_eq!(keys.iter().filter(|k| **k == keys[0]).count(), 123);
    for block in rows.chunks(41) {
        assert!(block.iter().all(|r| r.method == block[0].method));
        for (k, r) in block[..40].iter().enumerate() {
            assert_eq!(r.trial_index, k as i64);
        }
        assert_eq!(block[40].trial_index, -1);
    }
}

#[test]
fn aggregates_match_recomputation_from_trial_rows() {
    for block in rows(SWEEP, 2).chunks(41) {
        let (trials, agg) = (&block[..40], &block[40]);
        let finite: Vec<f64> = trials.iter().map(|r| r.rmse_rad).filter(|x| x.is_finite()).collect();
        let rmse = (finite.iter().map(|x| x * x).sum::<f64>() / finite.len() as f64).sqrt();
        let success = trials.iter().filter(|r| r.success == 1.0).count() as f64 / 40.0;
        let converged = trials.iter().filter(|r| r.converged == 1.0).count() as f64 / 40.0;
        assert!((agg.rmse_rad - rmse).abs() <= 1e-12);
        assert!((agg.success - success).abs() <= 1e-12);
        assert!((agg.converged - converged).abs() <= 1e-12);
        assert!(trials.iter().all(|r| r.rmse_rad >= 0.0 || r.rmse_rad.is_nan()));
    }
}

#[test]
fn output_does_not_depend_on_worker_count() {
    let one = csv_bytes(SWEEP, 1);
    assert_eq!(one, csv_bytes(SWEEP, 4));
    assert_eq!(one, csv_bytes(SWEEP, 1));
}

#[test]
fn methods_see_the_same_data() {
    let only_mode = SWEEP.replace("[[methods]]\nmethod = \"puma\"\n", "");
    let all = rows(SWEEP, 1);
    let fewer = rows(&only_mode, 1);
    let pick = |rows: &[TrialRecord]| -> Vec<TrialRecord> {
        rows.iter().filter(|r| r.method == "mode").cloned().collect()
    };
    assert_eq!(pick(&all), pick(&fewer));
}

#[test]
fn seed_changes_the_data() {
    let a = rows(SWEEP, 1);
    let b = rows(&SWEEP.replace("base_seed = 123", "base_seed = 124"), 1);
    assert_ne!(a, b);
}

#[test]
fn csv_layout() {
    let text = String::from_utf8(csv_bytes(SWEEP, 1)).unwrap();
    let mut lines = text.lines().skip_while(|l| l.starts_with('#'));
    assert_eq!(lines.next().unwrap(), sweep::CSV_COLUMNS.join(","));
    assert!(text.contains("# snr_db = 10*log10(tr(P) / (r * noise_power))"));
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 11);
        assert_eq!(fields[10], "");
        if fields[5] != "-1" {
            assert!(matches!(fields[8], "0" | "1"));
            assert!(matches!(fields[9], "0" | "1"));
        }
    }
}
