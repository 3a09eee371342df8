//! Wire-level tests against a running fleet.

use planprobe_sim::{build_fleet, Envelope, FleetOptions, SimScenario};

const SCENARIO: &str = r#"
isp_name = "att"

[latency]
plans_page = { dist = "fixed", ms = 40 }

[[truth]]
street = "123 Main Avenue"
zip = "70115"
plans = [
  { down = 1000.0, up = 1000.0, price = 80.0, tech = "fiber" },
  { down = 500.0, up = 500.0, price = 65.0, tech = "fiber" },
]
"#;

fn query_body(street: &str) -> serde_json::Value {
    serde_json::json!({
        "street": street,
        "unit": null,
        "city": "New Orleans",
        "state": "LA",
        "zip": "70115",
    })
}

#[tokio::test]
async fn query_returns_envelope_with_service_time() {
    let scenario = SimScenario::parse(SCENARIO).unwrap();
    let fleet = build_fleet(vec![scenario], 7, FleetOptions::default()).await.unwrap();
    let url = fleet.url("att").unwrap().to_string();
    let client = reqwest::Client::new();

    let started = std::time::Instant::now();
    let envelope: Envelope = client
        .post(format!("{url}/query"))
        .json(&query_body("123 Main Avenue"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let elapsed = started.elapsed().as_millis() as u64;

    assert!(envelope.complete);
    assert_eq!(envelope.service_ms, 40);
    assert!(envelope.body.contains("plans-grid"));
    assert!(envelope.body.contains("data-down=\"1000\""));
    assert!(
        elapsed >= 40,
        "latency injection must be honored: measured {elapsed}ms"
    );
    fleet.shutdown().await;
}

#[tokio::test]
async fn suffix_recovery_over_the_wire() {
    let scenario = SimScenario::parse(SCENARIO).unwrap();
    let fleet = build_fleet(vec![scenario], 7, FleetOptions::default()).await.unwrap();
    let url = fleet.url("att").unwrap().to_string();
    let client = reqwest::Client::new();

    let envelope: Envelope = client
        .post(format!("{url}/query"))
        .json(&query_body("123 Main Ave"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert!(envelope.body.contains("address-suggestions"));

    // Find the canonical same-zip suggestion index from the rendered body.
    let index = envelope
        .body
        .lines()
        .filter(|l| l.contains("class=\"suggestion\""))
        .position(|l| l.contains("data-zip=\"70115\""))
        .expect("canonical suggestion present");

    let next: Envelope = client
        .post(format!("{url}/action"))
        .json(&serde_json::json!({
            "session": envelope.session,
            "action": { "kind": "select_suggestion", "index": index },
        }))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert!(next.body.contains("plans-grid"), "recovery advances to plans");
    fleet.shutdown().await;
}

#[tokio::test]
async fn unknown_session_is_404() {
    let scenario = SimScenario::parse(SCENARIO).unwrap();
    let fleet = build_fleet(vec![scenario], 7, FleetOptions::default()).await.unwrap();
    let url = fleet.url("att").unwrap().to_string();
    let client = reqwest::Client::new();
    let response = client
        .post(format!("{url}/action"))
        .json(&serde_json::json!({
            "session": "sdeadbeef",
            "action": { "kind": "choose_option", "option": 2 },
        }))
        .send()
        .await
        .unwrap();
    assert_eq!(response.status(), 404);
    fleet.shutdown().await;
}

#[tokio::test]
async fn truth_endpoint_is_gated() {
    let scenario = SimScenario::parse(SCENARIO).unwrap();
    let fleet = build_fleet(vec![scenario], 7, FleetOptions::default()).await.unwrap();
    let url = fleet.url("att").unwrap().to_string();
    let client = reqwest::Client::new();
    let response = client
        .get(format!("{url}/truth?street=123%20Main%20Avenue&zip=70115"))
        .send()
        .await
        .unwrap();
    assert_eq!(response.status(), 404, "truth must be disabled by default");
    fleet.shutdown().await;

    let scenario = SimScenario::parse(SCENARIO).unwrap();
    let fleet = build_fleet(
        vec![scenario],
        7,
        FleetOptions {
            expose_truth: true,
            ports: Vec::new(),
        },
    )
    .await
    .unwrap();
    let url = fleet.url("att").unwrap().to_string();
    let response = client
        .get(format!("{url}/truth?street=123%20Main%20Avenue&zip=70115"))
        .send()
        .await
        .unwrap();
    assert_eq!(response.status(), 200);
    let truth: serde_json::Value = response.json().await.unwrap();
    assert_eq!(truth["outcome"], "plans");
    assert_eq!(truth["plans"].as_array().unwrap().len(), 2);
    fleet.shutdown().await;
}

#[tokio::test]
async fn identical_request_sequences_replay_byte_identically() {
    let run = || async {
        let scenario = SimScenario::parse(SCENARIO).unwrap();
        let fleet = build_fleet(vec![scenario], 99, FleetOptions::default()).await.unwrap();
        let url = fleet.url("att").unwrap().to_string();
        let client = reqwest::Client::new();
        let mut bytes = Vec::new();
        for street in ["123 Main Ave", "123 Main Avenue", "9 Nowhere Pl"] {
            let response = client
                .post(format!("{url}/query"))
                .json(&query_body(street))
                .send()
                .await
                .unwrap();
            bytes.push(response.bytes().await.unwrap().to_vec());
        }
        fleet.shutdown().await;
        bytes
    };
    assert_eq!(run().await, run().await);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn sustains_two_hundred_concurrent_clients() {
    let scenario = SimScenario::parse(SCENARIO).unwrap();
    let fleet = build_fleet(vec![scenario], 7, FleetOptions::default()).await.unwrap();
    let url = fleet.url("att").unwrap().to_string();
    let client = reqwest::Client::new();

    let mut tasks = tokio::task::JoinSet::new();
    for i in 0..200 {
        let client = client.clone();
        let url = url.clone();
        tasks.spawn(async move {
            let street = format!("{} Main Avenue", 100 + i);
            let envelope: Envelope = client
                .post(format!("{url}/query"))
                .json(&serde_json::json!({
                    "street": street, "city": "x", "state": "LA", "zip": "70115",
                }))
                .send()
                .await
                .unwrap()
                .json()
                .await
                .unwrap();
            envelope.service_ms
        });
    }
    let mut count = 0;
    while let Some(result) = tasks.join_next().await {
        // Unbounded capacity: reported service time stays the configured
        // distribution even under 200 concurrent clients.
        let service_ms = result.unwrap();
        assert!(service_ms <= 40 || service_ms == 2, "unexpected service time {service_ms}");
        count += 1;
    }
    assert_eq!(count, 200);
    fleet.shutdown().await;
}
