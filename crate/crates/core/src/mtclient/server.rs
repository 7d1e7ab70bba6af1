//! The mock backends behind the HTTP protocol, for integration tests and
//! `fairforge mt-mock-serve`.

use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;

use serde::Deserialize;
use serde_json::json;
use tiny_http::{Header, Method, Response, Server};

use super::{LanguageModel, LmRequest, MtError, MtRequest, Translator};

#[derive(Deserialize)]
struct WireRequest {
    src_lang: String,
    tgt_lang: String,
    texts: Vec<String>,
}

pub struct MockServer {
    server: Arc<Server>,
    addr: SocketAddr,
    worker: Option<JoinHandle<()>>,
}

fn status_for(e: &MtError) -> u16 {
    match e {
        MtError::Unsupported(_) | MtError::EmptyBatch | MtError::EmptyPrompt | MtError::Protocol(_) => 400,
        MtError::Timeout => 504,
        _ => 502,
    }
}

fn handle(
    method: &Method,
    url: &str,
    body: &str,
    mt: &dyn Translator,
    lm: &dyn LanguageModel,
) -> (u16, serde_json::Value) {
    let bad = |msg: String| (400, json!({ "error": msg }));
    match (method, url) {
        (Method::Get, "/health") => (200, json!({ "status": "ok" })),
        (Method::Post, "/translate") => {
            let req: WireRequest = match serde_json::from_str(body) {
                Ok(r) => r,
                Err(e) => return bad(e.to_string()),
            };
            // Tags arrive in-band; the translator strips them per text.
            let req = MtRequest::new(&req.src_lang, &req.tgt_lang, req.texts);
            match mt.translate_batch(&req) {
                Ok(resp) => (200, serde_json::to_value(resp).expect("serializable")),
                Err(e) => (status_for(&e), json!({ "error": e.to_string() })),
            }
        }
        (Method::Post, "/generate") => {
            let req: LmRequest = match serde_json::from_str(body) {
                Ok(r) => r,
                Err(e) => return bad(e.to_string()),
            };
            match lm.generate(&req) {
                Ok(resp) => (200, serde_json::to_value(resp).expect("serializable")),
                Err(e) => (status_for(&e), json!({ "error": e.to_string() })),
            }
        }
        _ => (404, json!({ "error": format!("no route {url}") })),
    }
}

impl MockServer {
    /// Binds `addr` (port 0 picks a free port) and serves on a background
    /// thread until dropped.
    pub fn start(
        addr: &str,
        mt: Arc<dyn Translator>,
        lm: Arc<dyn LanguageModel>,
    ) -> Result<Self, Box<dyn std::error::Error + Send + Sync>> {
        let server = Arc::new(Server::http(addr)?);
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or("server is not listening on an IP address")?;
        let srv = Arc::clone(&server);
        let worker = std::thread::spawn(move || serve(&srv, mt.as_ref(), lm.as_ref()));
        Ok(MockServer {
            server,
            addr,
            worker: Some(worker),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Blocks until the server is shut down from elsewhere.
    pub fn join(mut self) {
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

fn serve(server: &Server, mt: &dyn Translator, lm: &dyn LanguageModel) {
    for mut request in server.incoming_requests() {
        let mut body = String::new();
        let (status, value) = match request.as_reader().read_to_string(&mut body) {
            Ok(_) => handle(request.method(), request.url(), &body, mt, lm),
            Err(e) => (400, json!({ "error": e.to_string() })),
        };
        let header = Header::from_bytes("Content-Type", "application/json").expect("static header");
        let response = Response::from_string(value.to_string())
            .with_status_code(status)
            .with_header(header);
        if let Err(e) = request.respond(response) {
            log::warn!("mock server: failed to respond: {e}");
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}
