use chrono::{NaiveDate, NaiveDateTime};
use numerosity::log::{
    format_log_csv, format_log_txt, format_timestamp, parse_log, parse_log_txt, parse_timestamp, ParsedLog,
    TrialRecord,
};
use numerosity::stats::{aggregate, binomial_tail, pearson, AnalysisOptions, ColumnKey};
use numerosity::trial::{DisplayMode, ModeType};
use proptest::prelude::*;
use proptest::sample::subsequence;

fn arb_date() -> impl Strategy<Value = NaiveDateTime> {
    (2000i32..2100, 1u32..=12, 1u32..=28, 0u32..24, 0u32..60, 0u32..60, 0u32..1000).prop_map(
        |(y, mo, d, h, mi, s, ms)| NaiveDate::from_ymd_opt(y, mo, d).unwrap().and_hms_milli_opt(h, mi, s, ms).unwrap(),
    )
}

fn arb_name() -> impl Strategy<Value = String> {
    prop_oneof![Just(String::new()), "[A-Za-z0-9_.:;]([A-Za-z0-9 _.:;-]{0,8}[A-Za-z0-9_.])?"]
}

fn arb_values() -> impl Strategy<Value = Vec<u32>> {
    (2usize..=5).prop_flat_map(|n| subsequence((1u32..=12).collect::<Vec<_>>(), n)).prop_shuffle()
}

fn arb_record() -> impl Strategy<Value = TrialRecord> {
    (
        1u32..100_000,
        prop::sample::select(DisplayMode::ALL.to_vec()),
        arb_name(),
        arb_name(),
        arb_values(),
        any::<prop::sample::Index>(),
        any::<bool>(),
        arb_date(),
        0u64..120_000,
        "[ -~]{0,40}",
    )
        .prop_map(|(test_no, mode, learner, trainer, values, pick, correction, date, ms, other)| {
            let value_selected = values[pick.index(values.len())];
            TrialRecord {
                test_no,
                mode,
                learner,
                trainer,
                values,
                value_selected,
                correction,
                date,
                answering_time_ms: ms,
                other_parameters: other,
            }
        })
}

fn consistent(mut r: TrialRecord) -> TrialRecord {
    r.correction = Some(r.value_selected) == r.max_value();
    r
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip(records in prop::collection::vec(arb_record(), 0..40)) {
        let text = format_log_csv(&records).unwrap();
        prop_assert_eq!(parse_log(&text).unwrap().records, records);
    }

    #[test]
    fn txt_round_trip(records in prop::collection::vec(arb_record(), 0..40)) {
        let text = format_log_txt(&records).unwrap();
        prop_assert_eq!(parse_log_txt(&text).unwrap().records, records);
    }

    #[test]
    fn timestamp_round_trip(date in arb_date()) {
        prop_assert_eq!(parse_timestamp(&format_timestamp(&date)).unwrap(), date);
    }

    #[test]
    fn binomial_tail_decreases_in_k(n in 0u64..400, p in 0.01f64..0.99) {
        let mut prev = 1.0;
        prop_assert_eq!(binomial_tail(0, n, p).unwrap(), 1.0);
        for k in 0..=n {
            let t = binomial_tail(k, n, p).unwrap();
            prop_assert!((0.0..=1.0).contains(&t));
            prop_assert!(t <= prev * (1.0 + 1e-12), "k={} t={} prev={}", k, t, prev);
            prev = t;
        }
        prop_assert!(binomial_tail(n + 1, n, p).is_err());
    }

    #[test]
    fn binomial_tail_increases_in_p(n in 1u64..300, k_frac in 0.0f64..1.0, p in 0.01f64..0.9, dp in 0.001f64..0.09) {
        let k = (k_frac * n as f64) as u64;
        let lo = binomial_tail(k, n, p).unwrap();
        let hi = binomial_tail(k, n, p + dp).unwrap();
        prop_assert!(hi >= lo * (1.0 - 1e-12));
    }

    #[test]
    fn pearson_is_affine_invariant(
        pts in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..30),
        a in 0.1f64..10.0, b in -50.0f64..50.0, c in 0.1f64..10.0, d in -50.0f64..50.0,
    ) {
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let Ok(r) = pearson(&xs, &ys) else { return Ok(()) };
        prop_assert!((-1.0..=1.0).contains(&r));
        prop_assert!((pearson(&ys, &xs).unwrap() - r).abs() < 1e-12);
        let xs2: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
        let ys2: Vec<f64> = ys.iter().map(|y| c * y + d).collect();
        prop_assert!((pearson(&xs2, &ys2).unwrap() - r).abs() < 1e-9);
        let neg: Vec<f64> = xs.iter().map(|x| -a * x + b).collect();
        prop_assert!((pearson(&neg, &ys).unwrap() + r).abs() < 1e-9);
    }

    #[test]
    fn aggregation_cells_partition_the_total(
        logs in prop::collection::vec(prop::collection::vec(arb_record().prop_map(consistent), 1..30), 1..5)
    ) {
        let logs: Vec<ParsedLog> = logs
            .into_iter()
            .map(|mut records| {
                for r in &mut records {
                    r.learner = "S".into();
                }
                ParsedLog { records, warnings: vec![] }
            })
            .collect();
        let report = aggregate(&logs, &AnalysisOptions::default()).unwrap();
        let all: usize = logs.iter().map(|l| l.records.len()).sum();
        let mut total_n = 0;
        for table in &report.tables {
            let total = table.total().unwrap();
            total_n += total.n;
            let n_of = |key: ColumnKey| table.cell("Total", key).map_or(0, |c| c.n);
            let k_of = |key: ColumnKey| table.cell("Total", key).map_or(0, |c| c.k);
            let modes: u64 = DisplayMode::ALL.iter().map(|m| n_of(ColumnKey::Mode(*m))).sum();
            let mode_k: u64 = DisplayMode::ALL.iter().map(|m| k_of(ColumnKey::Mode(*m))).sum();
            prop_assert_eq!(modes, total.n);
            prop_assert_eq!(mode_k, total.k);
            prop_assert_eq!(
                n_of(ColumnKey::Type(ModeType::Discrete)) + n_of(ColumnKey::Type(ModeType::Continuous)),
                total.n
            );
            let sessions: u64 = table
                .rows
                .iter()
                .filter(|r| r.label != "Total")
                .map(|r| r.cells.last().unwrap().as_ref().map_or(0, |c| c.n))
                .sum();
            prop_assert_eq!(sessions, total.n);
        }
        prop_assert_eq!(total_n as usize, all);
    }
}
