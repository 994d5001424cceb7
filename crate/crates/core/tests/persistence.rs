use padam::harness::{read_trace_csv, write_trace_csv, StepRecord, TRACE_HEADER};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_record(t: u64, rng: &mut ChaCha8Rng) -> StepRecord {
    let mut wild = || {
        let mantissa: f64 = rng.random_range(-1.0..1.0);
        mantissa * 10f64.powi(rng.random_range(-300..300))
    };
    StepRecord {
        t,
        loss: wild(),
        grad_norm_sq: wild().abs(),
        lr: wild().abs(),
        eff_lr_min: wild().abs(),
        eff_lr_max: wild().abs(),
        vhat_min: wild().abs(),
        vhat_max: f64::MIN_POSITIVE,
    }
}

#[test]
fn million_row_round_trip_is_bit_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let records: Vec<StepRecord> = (1..=1_000_000).map(|t| random_record(t, &mut rng)).collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("big.csv");
    write_trace_csv(&records, &path).unwrap();
    let back = read_trace_csv(&path).unwrap();
    assert_eq!(back.len(), records.len());
    for (a, b) in back.iter().zip(&records) {
        assert_eq!(a.t, b.t);
        assert_eq!(a.loss.to_bits(), b.loss.to_bits());
        assert_eq!(a.grad_norm_sq.to_bits(), b.grad_norm_sq.to_bits());
        assert_eq!(a.vhat_max.to_bits(), b.vhat_max.to_bits());
    }
}

#[test]
fn malformed_rows_report_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, format!("{}\n1,1,1,1,1,1,1,1\n2,1,1\n", TRACE_HEADER.join(","))).unwrap();
    let err = read_trace_csv(&path).unwrap_err().to_string();
    assert!(err.contains("bad.csv:3:"), "{err}");
}
