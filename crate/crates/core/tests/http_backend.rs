use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use fairforge::genderlex::Gender;
use fairforge::mtclient::{
    translate_all, BatchConfig, HttpLm, HttpTranslator, LanguageModel, LmRequest, MockConfig, MockLm, MockServer,
    MockTranslator, MtError, MtRequest, RetryPolicy, Translator,
};
use tiny_http::{Response, Server};

fn quick_retry(max_retries: u32) -> RetryPolicy {
    RetryPolicy {
        max_retries,
        base_delay: Duration::from_millis(5),
        timeout: Duration::from_secs(5),
    }
}

fn mock() -> MockTranslator {
    MockTranslator::new(MockConfig {
        seed: 3,
        bias: 0.9,
        ..MockConfig::default()
    })
}

fn start_mock() -> MockServer {
    MockServer::start("127.0.0.1:0", Arc::new(mock()), Arc::new(MockLm)).unwrap()
}

/// Serves canned `(status, body)` replies in order, repeating the last one.
fn scripted(replies: Vec<(u16, String)>) -> (String, Arc<AtomicUsize>, std::thread::JoinHandle<()>) {
    let server = Server::http("127.0.0.1:0").unwrap();
    let url = format!("http://{}", server.server_addr().to_ip().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let seen = Arc::clone(&hits);
    let worker = std::thread::spawn(move || {
        for request in server.incoming_requests() {
            let n = seen.fetch_add(1, Ordering::SeqCst);
            let (status, body) = replies[n.min(replies.len() - 1)].clone();
            request.respond(Response::from_string(body).with_status_code(status)).unwrap();
            if n + 1 >= replies.len() {
                break;
            }
        }
    });
    (url, hits, worker)
}

#[test]
fn http_matches_in_process_mock() {
    let server = start_mock();
    let client = HttpTranslator::new(&server.url(), quick_retry(0));
    let texts: Vec<String> = ["Die Lehrer*innen planen ein Projekt.", "Sie lesen."]
        .map(String::from)
        .to_vec();
    for tag in [None, Some(Gender::F)] {
        let req = MtRequest::new("de", "en", texts.clone()).with_tag(tag);
        let remote = client.translate_batch(&req).unwrap();
        let local = mock().translate_batch(&req).unwrap();
        assert_eq!(remote.translations, local.translations);
    }
}

#[test]
fn batches_keep_input_order_over_http() {
    let server = start_mock();
    let client = HttpTranslator::new(&server.url(), quick_retry(0));
    let texts: Vec<String> = (0..23).map(|i| format!("Satz Nummer {i} ist hier.")).collect();
    let cfg = BatchConfig {
        batch_size: 4,
        in_flight: 3,
    };
    let remote = translate_all(&client, "de", "en", &texts, None, cfg).unwrap();
    let local = translate_all(&mock(), "de", "en", &texts, None, BatchConfig::default()).unwrap();
    assert_eq!(remote, local);
}

#[test]
fn lm_over_http() {
    let server = start_mock();
    let lm = HttpLm::new(&server.url(), quick_retry(0));
    let req = LmRequest {
        prompt: "Ein*e Leiter*in".into(),
        max_tokens: 40,
        seed: 1,
    };
    assert_eq!(lm.generate(&req).unwrap().text, MockLm::complete(&req.prompt, 40, 1));
}

#[test]
fn server_errors_are_retried() {
    let ok = r#"{"translations":["a","b"],"backend_id":"x"}"#.to_string();
    let (url, hits, worker) = scripted(vec![(503, "{}".into()), (503, "{}".into()), (200, ok)]);
    let client = HttpTranslator::new(&url, quick_retry(3));
    let resp = client
        .translate_batch(&MtRequest::new("de", "en", vec!["x".into(), "y".into()]))
        .unwrap();
    assert_eq!(resp.translations, ["a", "b"]);
    worker.join().unwrap();
    assert_eq!(hits.load(Ordering::SeqCst), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let (url, hits, worker) = scripted(vec![(400, r#"{"error":"bad"}"#.into())]);
    let client = HttpTranslator::new(&url, quick_retry(3));
    let err = client
        .translate_batch(&MtRequest::new("de", "en", vec!["x".into()]))
        .unwrap_err();
    assert!(matches!(err, MtError::Http { status: 400 }), "{err:?}");
    worker.join().unwrap();
    assert_eq!(hits.load(Ordering::SeqCst), 1);
}

#[test]
fn short_response_is_a_length_mismatch() {
    let body = r#"{"translations":["only one"],"backend_id":"x"}"#.to_string();
    let (url, _, worker) = scripted(vec![(200, body)]);
    let client = HttpTranslator::new(&url, quick_retry(0));
    let err = client
        .translate_batch(&MtRequest::new("de", "en", vec!["x".into(), "y".into()]))
        .unwrap_err();
    assert!(matches!(err, MtError::LengthMismatch { expected: 2, got: 1 }), "{err:?}");
    worker.join().unwrap();
}

#[test]
fn unreachable_backend() {
    let port = {
        let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap().port()
    };
    let client = HttpTranslator::new(&format!("http://127.0.0.1:{port}"), quick_retry(1));
    let err = client
        .translate_batch(&MtRequest::new("de", "en", vec!["x".into()]))
        .unwrap_err();
    assert!(matches!(err, MtError::Unreachable(_)), "{err:?}");
}
