use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use serde_json::{json, Value};
use tower::ServiceExt;

use redactor_core::corpus::{read_corpus, to_json_line, Detector, Document, PiiCategory};
use redactor_core::ledger::{CreatedBy, Ledger};
use redactor_review::{read_audit_log, replay, router, ManualClock, ReviewConfig, ReviewService};

const T0: u64 = 1_700_000_000_000;

struct Harness {
    dir: tempfile::TempDir,
    clock: ManualClock,
    app: Router,
}

fn config(dir: &Path) -> ReviewConfig {
    ReviewConfig::new(dir.join("corpus.jsonl"), dir.join("ledger.jsonl"), dir.join("audit.jsonl"))
}

fn fixture_text() -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/review.jsonl")).unwrap()
}

fn harness_with(corpus: &str) -> Harness {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("corpus.jsonl"), corpus).unwrap();
    let clock = ManualClock::starting_at(T0);
    let svc = ReviewService::open_with_clock(config(dir.path()), Arc::new(clock.clone())).unwrap();
    Harness {
        app: router(Arc::new(svc)),
        dir,
        clock,
    }
}

fn harness() -> Harness {
    harness_with(&fixture_text())
}

async fn call(app: &Router, method: &str, uri: &str, reviewer: Option<&str>, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(r) = reviewer {
        req = req.header("X-Reviewer", r);
    }
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    let value = serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()));
    (status, value)
}

async fn decide_all(app: &Router, reviewer: &str) {
    for (start, end) in [(10, 26), (28, 50), (73, 84), (89, 109)] {
        let (status, _) = call(
            app,
            "PATCH",
            "/docs/shoutout/spans",
            Some(reviewer),
            Some(json!({"start": start, "end": end, "subject_role": "PrivateIndividual"})),
        )
        .await;
        assert_eq!(status, StatusCode::OK);
    }
}

#[tokio::test]
async fn empty_corpus_lists_nothing() {
    let h = harness_with("");
    let (status, body) = call(&h.app, "GET", "/docs", None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!([]));
}

#[tokio::test]
async fn listing_reports_status_and_filters() {
    let h = harness();
    let (_, body) = call(&h.app, "GET", "/docs", None, None).await;
    let rows = body.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["id"], "fr-1");
    assert_eq!(rows[0]["status"], "done");
    assert_eq!(rows[1]["id"], "shoutout");
    assert_eq!(rows[1]["status"], "pending");
    assert_eq!(rows[1]["undecided"], 4);

    let (_, fr) = call(&h.app, "GET", "/docs?language=fr", None, None).await;
    assert_eq!(fr.as_array().unwrap().len(), 1);
    let (_, pending) = call(&h.app, "GET", "/docs?status=pending", None, None).await;
    assert_eq!(pending[0]["id"], "shoutout");
    assert_eq!(pending.as_array().unwrap().len(), 1);
}

#[tokio::test]
async fn leases_are_exclusive_until_they_expire() {
    let h = harness();
    let (status, body) = call(&h.app, "POST", "/docs/shoutout/checkout", Some("ana"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["lease"]["reviewer"], "ana");
    assert_eq!(body["lease"]["expires_at_ms"], T0 + 15 * 60 * 1000);
    assert_eq!(body["document"]["id"], "shoutout");

    let (status, body) = call(&h.app, "POST", "/docs/shoutout/checkout", Some("bo"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["holder"], "ana");

    // The holder may renew.
    let (status, _) = call(&h.app, "POST", "/docs/shoutout/checkout", Some("ana"), None).await;
    assert_eq!(status, StatusCode::OK);

    h.clock.advance(Duration::from_secs(15 * 60 + 1));
    let (status, body) = call(&h.app, "POST", "/docs/shoutout/checkout", Some("bo"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["lease"]["reviewer"], "bo");

    let (status, _) = call(&h.app, "POST", "/docs/nope/checkout", Some("bo"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&h.app, "POST", "/docs/fr-1/checkout", None, None).await;
    assert_eq!(status, StatusCode::UNAUTHORIZED);
}

#[tokio::test]
async fn concurrent_checkouts_grant_one_lease() {
    let h = harness();
    let mut tasks = Vec::new();
    for i in 0..16 {
        let app = h.app.clone();
        tasks.push(tokio::spawn(async move {
            call(&app, "POST", "/docs/fr-1/checkout", Some(&format!("r{i}")), None).await.0
        }));
    }
    let mut granted = 0;
    let mut rejected = 0;
    for t in tasks {
        match t.await.unwrap() {
            StatusCode::OK => granted += 1,
            StatusCode::CONFLICT => rejected += 1,
            other => panic!("unexpected {other}"),
        }
    }
    assert_eq!((granted, rejected), (1, 15));
}

#[tokio::test]
async fn checkout_precomputes_suggestions() {
    let h = harness();
    let (_, body) = call(&h.app, "POST", "/docs/fr-1/checkout", Some("ana"), None).await;
    let suggestions = body["suggestions"].as_array().unwrap();
    assert_eq!(suggestions.len(), 2);
    for s in suggestions {
        let rep = s["replacement"].as_str().unwrap();
        assert!(!rep.is_empty() && rep != "Odile Fravent" && rep != "Velmora");
    }
    // Suggestions are not written to the ledger.
    let ledger = Ledger::load_or_new(h.dir.path().join("ledger.jsonl")).unwrap();
    assert!(ledger.is_empty());
}

#[tokio::test]
async fn patches_need_a_lease() {
    let h = harness();
    let patch = json!({"start": 73, "end": 84, "subject_role": "PublicFigure"});
    let (status, body) = call(&h.app, "PATCH", "/docs/shoutout/spans", Some("ana"), Some(patch.clone())).await;
    assert_eq!(status, StatusCode::FORBIDDEN);
    assert_eq!(body["error"], "no_lease");
    call(&h.app, "POST", "/docs/shoutout/checkout", Some("bo"), None).await;
    let (status, _) = call(&h.app, "PATCH", "/docs/shoutout/spans", Some("ana"), Some(patch)).await;
    assert_eq!(status, StatusCode::FORBIDDEN);
    let (status, _) = call(
        &h.app,
        "PATCH",
        "/docs/shoutout/spans",
        Some("bo"),
        Some(json!({"start": 1, "end": 2, "decision": "keep"})),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn role_change_recomputes_the_decision() {
    let h = harness();
    call(&h.app, "POST", "/docs/shoutout/checkout", Some("ana"), None).await;
    let (status, body) = call(
        &h.app,
        "PATCH",
        "/docs/shoutout/spans",
        Some("ana"),
        Some(json!({"start": 73, "end": 84, "subject_role": "PublicFigure"})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["span"]["decision"], "keep");
    assert_eq!(body["span"]["subject_role"], "PublicFigure");
    assert!(body["warnings"].as_array().unwrap().is_empty());

    let (_, body) = call(
        &h.app,
        "PATCH",
        "/docs/shoutout/spans",
        Some("ana"),
        Some(json!({"start": 73, "end": 84, "subject_role": "PrivateIndividual"})),
    )
    .await;
    assert_eq!(body["span"]["decision"], "pseudonymize");
}

#[tokio::test]
async fn replacement_overrides_go_to_the_ledger() {
    let mut doc = Document::new("shoutout", "en", "Hit me up @marie.delattre1, @ProudBoys-Massachusetts-admin on Insta.");
    for handle in ["@marie.delattre1", "@ProudBoys-Massachusetts-admin"] {
        let (s, e) = doc.find(handle).unwrap();
        doc.spans.push(doc.span(s, e, Detector::Manual).unwrap().with_category(PiiCategory::Username));
    }
    assert_eq!((doc.spans[1].start, doc.spans[1].end), (28, 58));
    let h = harness_with(&(to_json_line(&doc) + "\n"));
    call(&h.app, "POST", "/docs/shoutout/checkout", Some("ana"), None).await;
    let (status, body) = call(
        &h.app,
        "PATCH",
        "/docs/shoutout/spans",
        Some("ana"),
        Some(json!({"start": 28, "end": 58, "decision": "pseudonymize", "replacement": "@Proud_Boys_MA_main"})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["span"]["replacement"], "@Proud_Boys_MA_main");

    let ledger = Ledger::load(h.dir.path().join("ledger.jsonl")).unwrap();
    let entry = ledger
        .entry("@ProudBoys-Massachusetts-admin", PiiCategory::Username)
        .unwrap();
    assert_eq!(entry.replacement, "@Proud_Boys_MA_main");
    assert_eq!(entry.created_by, CreatedBy::Reviewer);

    // A different replacement for the same original conflicts with the stored one.
    let (status, body) = call(
        &h.app,
        "PATCH",
        "/docs/shoutout/spans",
        Some("ana"),
        Some(json!({"start": 28, "end": 58, "replacement": "@Other_Name"})),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "ledger_conflict");
    assert_eq!(body["existing"]["original_surface"], "@ProudBoys-Massachusetts-admin");
    assert_eq!(body["existing"]["replacement"], "@Proud_Boys_MA_main");

    // Reusing the replacement for another original is rejected as well.
    let (status, body) = call(
        &h.app,
        "PATCH",
        "/docs/shoutout/spans",
        Some("ana"),
        Some(json!({"start": 10, "end": 26, "decision": "pseudonymize", "replacement": "@Proud_Boys_MA_main"})),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["existing"]["original_surface"], "@ProudBoys-Massachusetts-admin");
    let (_, doc) = call(&h.app, "GET", "/docs/shoutout", None, None).await;
    assert_eq!(doc["spans"][0]["replacement"], Value::Null);
    assert_eq!(doc["spans"][0]["decision"], Value::Null);

    // Replacements only make sense on spans that are replaced.
    let (status, _) = call(
        &h.app,
        "PATCH",
        "/docs/shoutout/spans",
        Some("ana"),
        Some(json!({"start": 10, "end": 26, "decision": "keep", "replacement": "@x_y"})),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn commit_requires_every_span_decided() {
    let h = harness();
    call(&h.app, "POST", "/docs/shoutout/checkout", Some("ana"), None).await;
    call(
        &h.app,
        "PATCH",
        "/docs/shoutout/spans",
        Some("ana"),
        Some(json!({"start": 10, "end": 26, "decision": "delete"})),
    )
    .await;
    let (status, body) = call(&h.app, "POST", "/docs/shoutout/commit", Some("ana"), None).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"], "undecided_spans");
    let surfaces: Vec<&str> = body["spans"].as_array().unwrap().iter().map(|s| s["surface"].as_str().unwrap()).collect();
    assert_eq!(surfaces, ["@handsomephilantropist", "Moshe Chaya", "Rue Alphonse Metayer"]);

    decide_all(&h.app, "ana").await;
    let (status, _) = call(&h.app, "POST", "/docs/shoutout/commit", Some("ana"), None).await;
    assert_eq!(status, StatusCode::OK);
    // Idempotent once committed; the lease is gone.
    let (status, _) = call(&h.app, "POST", "/docs/shoutout/commit", Some("ana"), None).await;
    assert_eq!(status, StatusCode::OK);
    let (_, rows) = call(&h.app, "GET", "/docs", None, None).await;
    assert_eq!(rows[1]["committed"], true);
    assert_eq!(rows[1]["leased_by"], Value::Null);
    let (status, _) = call(&h.app, "POST", "/docs/shoutout/checkout", Some("bo"), None).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn previews_follow_the_strategy() {
    let h = harness();
    let (status, _) = call(&h.app, "GET", "/docs/shoutout/preview?strategy=S2", None, None).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    call(&h.app, "POST", "/docs/shoutout/checkout", Some("ana"), None).await;
    decide_all(&h.app, "ana").await;
    let (status, body) = call(&h.app, "GET", "/docs/shoutout/preview?strategy=S2", None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(
        body["document"]["text"],
        "Hit me up username, username on Insta. Shoutout to name! At location."
    );
    let (_, body) = call(&h.app, "GET", "/docs/shoutout/preview?strategy=S1", None, None).await;
    assert_eq!(
        body["document"]["text"],
        "Hit me up placeholder, placeholder on Insta. Shoutout to placeholder! At placeholder."
    );
    let (status, _) = call(&h.app, "GET", "/docs/shoutout/preview?strategy=S9", None, None).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    let (_, a) = call(&h.app, "GET", "/docs/shoutout/preview", None, None).await;
    let (_, b) = call(&h.app, "GET", "/docs/shoutout/preview?strategy=REALISTIC", None, None).await;
    assert_eq!(a, b);
    assert!(!a["document"]["text"].as_str().unwrap().contains("Moshe Chaya"));
    let ledger = Ledger::load_or_new(h.dir.path().join("ledger.jsonl")).unwrap();
    assert!(ledger.is_empty());
}

#[tokio::test]
async fn audit_endpoint_reports_open_work_and_leaks() {
    let h = harness();
    let (status, body) = call(&h.app, "GET", "/audit/shoutout", None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["undecided"].as_array().unwrap().len(), 4);
    let (_, body) = call(&h.app, "GET", "/audit/fr-1", None, None).await;
    assert_eq!(body["status"], "done");
    assert!(body["leakage"].as_array().unwrap().is_empty());
    assert!(body["quasi_id"].as_array().unwrap().is_empty());
    let (status, _) = call(&h.app, "GET", "/audit/missing", None, None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn quasi_identifier_warnings_follow_patches() {
    let h = harness();
    call(&h.app, "POST", "/docs/fr-1/checkout", Some("ana"), None).await;
    let (_, body) = call(
        &h.app,
        "PATCH",
        "/docs/fr-1/spans",
        Some("ana"),
        Some(json!({"start": 17, "end": 30, "pii_category": "OTHER", "decision": "keep"})),
    )
    .await;
    assert!(body["warnings"].as_array().unwrap().is_empty());
    let (_, body) = call(
        &h.app,
        "PATCH",
        "/docs/fr-1/spans",
        Some("ana"),
        Some(json!({"start": 33, "end": 40, "decision": "keep"})),
    )
    .await;
    assert_eq!(body["warnings"][0]["doc_id"], "fr-1");
    assert_eq!(body["warnings"][0]["spans"].as_array().unwrap().len(), 2);
}

#[tokio::test]
async fn ledger_suggestions() {
    let h = harness();
    let (status, body) = call(&h.app, "GET", "/ledger/suggest?surface=Myriam%20Zegman&category=PERSON_NAME", None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["source"], "generator");
    assert_eq!(body["replacement"], "Rachel Kaufman");

    let (_, body) = call(
        &h.app,
        "GET",
        "/ledger/suggest?surface=https%3A%2F%2Fwa.me%2F%2B93722758&category=URL",
        None,
        None,
    )
    .await;
    assert!(body["replacement"].as_str().unwrap().starts_with("https://wa.me/+"));

    call(&h.app, "POST", "/docs/shoutout/checkout", Some("ana"), None).await;
    call(
        &h.app,
        "PATCH",
        "/docs/shoutout/spans",
        Some("ana"),
        Some(json!({"start": 73, "end": 84, "decision": "pseudonymize", "replacement": "Raj Avrom"})),
    )
    .await;
    let (_, body) = call(&h.app, "GET", "/ledger/suggest?surface=Moshe%20Chaya&category=PERSON_NAME", None, None).await;
    assert_eq!(body["source"], "ledger");
    assert_eq!(body["replacement"], "Raj Avrom");
    let (status, _) = call(&h.app, "GET", "/ledger/suggest?surface=x&category=NOPE", None, None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn audit_log_replays_to_the_persisted_state() {
    let h = harness();
    call(&h.app, "POST", "/docs/shoutout/checkout", Some("ana"), None).await;
    decide_all(&h.app, "ana").await;
    call(
        &h.app,
        "PATCH",
        "/docs/shoutout/spans",
        Some("ana"),
        Some(json!({"start": 73, "end": 84, "replacement": "Raj Avrom", "note": "agreed in discussion"})),
    )
    .await;
    // A rejected patch leaves no trace in the log.
    call(
        &h.app,
        "PATCH",
        "/docs/shoutout/spans",
        Some("ana"),
        Some(json!({"start": 73, "end": 84, "replacement": "Ann Other"})),
    )
    .await;
    call(&h.app, "POST", "/docs/shoutout/commit", Some("ana"), None).await;
    h.clock.advance(Duration::from_secs(5));
    call(&h.app, "POST", "/docs/fr-1/checkout", Some("bo"), None).await;
    call(
        &h.app,
        "PATCH",
        "/docs/fr-1/spans",
        Some("bo"),
        Some(json!({"start": 33, "end": 40, "subject_role": "GenericOrganization"})),
    )
    .await;

    let records = read_audit_log(h.dir.path().join("audit.jsonl")).unwrap();
    assert_eq!(records.len(), 9);
    assert!(records.windows(2).all(|w| w[1].seq == w[0].seq + 1));
    assert_eq!(records[0].reviewer, "ana");
    assert_eq!(records[0].at_ms, T0);
    assert_eq!(records.last().unwrap().at_ms, T0 + 5000);

    let start: Vec<_> = fixture_text()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let (docs, ledger) = replay(start, Ledger::new(), &records, &Default::default()).unwrap();
    assert_eq!(docs, read_corpus(h.dir.path().join("corpus.jsonl")).unwrap());
    let saved = Ledger::load(h.dir.path().join("ledger.jsonl")).unwrap();
    assert_eq!(ledger.entries().collect::<Vec<_>>(), saved.entries().collect::<Vec<_>>());
}

#[tokio::test]
async fn restart_keeps_committed_state() {
    let h = harness();
    call(&h.app, "POST", "/docs/shoutout/checkout", Some("ana"), None).await;
    decide_all(&h.app, "ana").await;
    call(&h.app, "POST", "/docs/shoutout/commit", Some("ana"), None).await;
    let Harness { dir, app, .. } = h;
    // A second service cannot open the same ledger while the first runs.
    assert!(ReviewService::open(config(dir.path())).is_err());
    drop(app);

    let svc = Arc::new(ReviewService::open(config(dir.path())).unwrap());
    let app = router(svc);
    let (_, rows) = call(&app, "GET", "/docs", None, None).await;
    assert_eq!(rows[1]["id"], "shoutout");
    assert_eq!(rows[1]["status"], "done");
    assert_eq!(rows[1]["committed"], true);
    // Leases are not persisted; sequence numbers continue.
    call(&app, "POST", "/docs/shoutout/checkout", Some("bo"), None).await;
    let records = read_audit_log(dir.path().join("audit.jsonl")).unwrap();
    assert_eq!(records.last().unwrap().seq, records.len() as u64);
}

#[tokio::test]
async fn export_and_index() {
    let h = harness();
    let (status, body) = call(&h.app, "GET", "/export", None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body.as_str().unwrap().lines().count(), 2);
    let (status, body) = call(&h.app, "GET", "/", None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(body.as_str().unwrap().contains("/docs"));
}

#[tokio::test]
async fn serves_the_ui_bundle_when_configured() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("corpus.jsonl"), fixture_text()).unwrap();
    let ui = dir.path().join("ui");
    std::fs::create_dir(&ui).unwrap();
    std::fs::write(ui.join("index.html"), "<h1>review</h1>").unwrap();
    let mut cfg = config(dir.path());
    cfg.static_dir = Some(ui);
    let app = router(Arc::new(ReviewService::open(cfg).unwrap()));
    let (status, body) = call(&app, "GET", "/", None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, "<h1>review</h1>");
    let (status, _) = call(&app, "GET", "/docs", None, None).await;
    assert_eq!(status, StatusCode::OK);
}
