//! CSV ingestion against a known loan-application trace plus round-trip
//! properties over randomly generated logs.

use logmend_log::{
    infer_schema, parse_csv_log, split_log, write_csv_log, AttrKind, AttrScope, Attribute,
    AttributeSchema, CsvOptions, EventLog, SchemaHints,
};
use proptest::prelude::*;

const LOAN_HEADER: &str =
    "CaseID,Activity,time:timestamp,org:resource,lifecycle:transition,case:REG_DATE,case:AMOUNT_REQ";

fn loan_trace_csv() -> String {
    format!(
        "{LOAN_HEADER}\n\
         173688,A_SUBMITTED,2011-09-30 22:38:44.546000+00:00,112,COMPLETE,2011-10-01 00:38:44.546000+02:00,20000\n\
         173688,A_PARTLYSUBMITTED,2011-09-30 22:38:44.880000+00:00,112,COMPLETE,2011-10-01 00:38:44.546000+02:00,20000\n\
         173688,A_PREACCEPTED,2011-09-30 22:39:37.906000+00:00,112,COMPLETE,2011-10-01 00:38:44.546000+02:00,20000\n\
         173688,A_ACCEPTED,2011-10-01 09:42:43.308000+00:00,10862,COMPLETE,2011-10-01 00:38:44.546000+02:00,20000\n\
         173688,A_FINALIZED,2011-10-01 09:45:09.243000+00:00,10862,COMPLETE,2011-10-01 00:38:44.546000+02:00,20000\n"
    )
}

fn damaged_loan_trace_csv() -> String {
    format!(
        "{LOAN_HEADER}\n\
         173688,-,2011-09-30 22:38:44.546000+00:00,112,COMPLETE,2011-10-01 00:38:44.546000+02:00,20000\n\
         173688,A_PARTLYSUBMITTED,-,112,COMPLETE,2011-10-01 00:38:44.546000+02:00,20000\n\
         173688,-,-,-,-,-,-\n\
         173688,A_ACCEPTED,2011-10-01 09:42:43.308000+00:00,10862,COMPLETE,2011-10-01 00:38:44.546000+02:00,20000\n\
         173688,-,2011-10-01 09:45:09.243000+00:00,10862,COMPLETE,2011-10-01 00:38:44.546000+02:00,20000\n"
    )
}

fn loan_schema() -> AttributeSchema {
    AttributeSchema::new(
        vec![
            Attribute { name: "Activity".into(), kind: AttrKind::Categorical, scope: AttrScope::Event },
            Attribute { name: "time:timestamp".into(), kind: AttrKind::Timestamp, scope: AttrScope::Event },
            Attribute { name: "org:resource".into(), kind: AttrKind::Categorical, scope: AttrScope::Event },
            Attribute { name: "lifecycle:transition".into(), kind: AttrKind::Categorical, scope: AttrScope::Event },
            Attribute { name: "case:REG_DATE".into(), kind: AttrKind::Timestamp, scope: AttrScope::Trace },
            Attribute { name: "case:AMOUNT_REQ".into(), kind: AttrKind::Numeric, scope: AttrScope::Trace },
        ],
        "CaseID",
        "Activity",
        "time:timestamp",
    )
    .unwrap()
}

#[test]
fn parses_the_loan_trace() {
    let log = parse_csv_log(loan_trace_csv().as_bytes(), &loan_schema(), &CsvOptions::default()).unwrap();
    assert_eq!(log.n_traces(), 1);
    let trace = &log.traces[0];
    assert_eq!(trace.case_id, "173688");
    assert_eq!(trace.len(), 5);
    assert_eq!(trace.events[0].cell(0).as_str(), Some("A_SUBMITTED"));
    assert_eq!(trace.events[1].cell(0).as_str(), Some("A_PARTLYSUBMITTED"));
    assert_eq!(trace.events[4].cell(0).as_str(), Some("A_FINALIZED"));
    log.validate().unwrap();
}

#[test]
fn parses_the_damaged_loan_trace() {
    let log = parse_csv_log(
        damaged_loan_trace_csv().as_bytes(),
        &loan_schema(),
        &CsvOptions::default(),
    )
    .unwrap();
    let trace = &log.traces[0];
    assert_eq!(trace.len(), 5);
    assert!(trace.events[0].cell(0).is_missing(), "first activity missing");
    assert!(trace.events[1].cell(1).is_missing(), "second timestamp missing");
    assert!(trace.events[2].fully_missing(), "third event fully missing");
    assert_eq!(trace.events[3].cell(0).as_str(), Some("A_ACCEPTED"));
    assert!(trace.events[4].cell(0).is_missing(), "last activity missing");
}

#[test]
fn writes_header_plus_five_rows() {
    let log = parse_csv_log(loan_trace_csv().as_bytes(), &loan_schema(), &CsvOptions::default()).unwrap();
    let mut out = Vec::new();
    write_csv_log(&log, &mut out, &CsvOptions::default()).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert_eq!(text.lines().next().unwrap(), LOAN_HEADER);
}

#[test]
fn missing_cells_render_as_the_token() {
    let log = parse_csv_log(
        damaged_loan_trace_csv().as_bytes(),
        &loan_schema(),
        &CsvOptions::default(),
    )
    .unwrap();
    let mut out = Vec::new();
    write_csv_log(&log, &mut out, &CsvOptions::default()).unwrap();
    let text = String::from_utf8(out).unwrap();
    let first_row = text.lines().nth(1).unwrap();
    assert!(first_row.starts_with("173688,-,"));
}

#[test]
fn infers_kinds_and_scopes_for_the_loan_header() {
    let hints = SchemaHints {
        case_id_column: "CaseID".into(),
        activity_column: "Activity".into(),
        timestamp_column: "time:timestamp".into(),
        missing_token: "-".into(),
    };
    let schema = infer_schema(loan_trace_csv().as_bytes(), &hints).unwrap();

    let amount = schema.attribute("case:AMOUNT_REQ").unwrap();
    assert_eq!(amount.kind, AttrKind::Numeric);
    assert_eq!(amount.scope, AttrScope::Trace);

    let resource = schema.attribute("org:resource").unwrap();
    assert_eq!(resource.kind, AttrKind::Categorical);
    assert_eq!(resource.scope, AttrScope::Event);

    let reg = schema.attribute("case:REG_DATE").unwrap();
    assert_eq!(reg.kind, AttrKind::Timestamp);
    assert_eq!(reg.scope, AttrScope::Trace);
}

// --- round-trip property -------------------------------------------------

fn arb_log() -> impl Strategy<Value = EventLog> {
    let schema = AttributeSchema::new(
        vec![
            Attribute { name: "activity".into(), kind: AttrKind::Categorical, scope: AttrScope::Event },
            Attribute { name: "timestamp".into(), kind: AttrKind::Timestamp, scope: AttrScope::Event },
            Attribute { name: "resource".into(), kind: AttrKind::Categorical, scope: AttrScope::Event },
        ],
        "case_id",
        "activity",
        "timestamp",
    )
    .unwrap();

    let event = (
        proptest::option::of(prop::sample::select(vec!["A", "B", "C", "D"])),
        proptest::option::of(prop::sample::select(vec!["r1", "r2"])),
    );
    let trace = prop::collection::vec(event, 1..6);
    prop::collection::vec(trace, 1..8).prop_map(move |traces| {
        let traces = traces
            .into_iter()
            .enumerate()
            .map(|(ti, events)| logmend_log::Trace {
                case_id: format!("case_{ti}"),
                events: events
                    .into_iter()
                    .enumerate()
                    .map(|(ei, (act, res))| logmend_log::Event {
                        cells: vec![
                            act.map(|a| logmend_log::Cell::Present(a.to_string()))
                                .unwrap_or(logmend_log::Cell::Missing),
                            logmend_log::Cell::Present(format!(
                                "2024-01-01 00:00:{:02}",
                                ei * 7 % 60
                            )),
                            res.map(|r| logmend_log::Cell::Present(r.to_string()))
                                .unwrap_or(logmend_log::Cell::Missing),
                        ],
                    })
                    .collect(),
            })
            .collect();
        EventLog { schema: schema.clone(), traces }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parse_write_identity(log in arb_log()) {
        let options = CsvOptions::default();
        let mut out = Vec::new();
        write_csv_log(&log, &mut out, &options).unwrap();
        let reparsed = parse_csv_log(out.as_slice(), &log.schema, &options).unwrap();
        prop_assert_eq!(reparsed, log);
    }

    #[test]
    fn split_partitions_cover_input(log in arb_log(), seed in 0u64..1000) {
        prop_assume!(log.n_traces() >= 3);
        let (train, val, test) = split_log(&log, (0.6, 0.2, 0.2), seed).unwrap();
        let mut ids: Vec<String> = train.traces.iter()
            .chain(&val.traces)
            .chain(&test.traces)
            .map(|t| t.case_id.clone())
            .collect();
        ids.sort();
        let mut expected: Vec<String> = log.traces.iter().map(|t| t.case_id.clone()).collect();
        expected.sort();
        prop_assert_eq!(ids, expected);
    }
}
