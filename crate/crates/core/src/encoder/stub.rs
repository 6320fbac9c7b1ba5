//! In-process embedding server speaking the remote wire protocol. Used to
//! exercise [`RemoteEmbedder`](super::RemoteEmbedder) without a real model.

use super::embed_hash;
use super::remote::{EmbedRequest, EmbedResponse, InfoResponse};
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

/// Produces the vector for text `index` of a request, or an error message
/// that is returned as HTTP 500.
pub type StubHandler = dyn Fn(usize, &str) -> Result<Vec<f64>, String> + Send + Sync;

pub struct StubServer {
    addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl StubServer {
    /// Starts a server on an ephemeral localhost port announcing `dim`.
    pub fn start<F>(dim: usize, handler: F) -> std::io::Result<Self>
    where
        F: Fn(usize, &str) -> Result<Vec<f64>, String> + Send + Sync + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let shutdown = Arc::new(AtomicBool::new(false));
        let flag = Arc::clone(&shutdown);
        let handler: Arc<StubHandler> = Arc::new(handler);
        let thread = std::thread::spawn(move || {
            for stream in listener.incoming() {
                if flag.load(Ordering::SeqCst) {
                    break;
                }
                if let Ok(stream) = stream {
                    let handler = Arc::clone(&handler);
                    std::thread::spawn(move || {
                        let _ = serve(stream, dim, &*handler);
                    });
                }
            }
        });
        Ok(Self {
            addr,
            shutdown,
            thread: Some(thread),
        })
    }

    /// Hashed n-gram vectors (orders 2..=4, seed 0) of dimension `dim`.
    pub fn hashing(dim: usize) -> std::io::Result<Self> {
        let orders = [2, 3, 4].into_iter().collect();
        Self::start(dim, move |_, text| {
            embed_hash(text, dim, &orders, 0)
                .map(|v| v.values().to_vec())
                .map_err(|e| e.to_string())
        })
    }

    pub fn endpoint(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        // unblock accept()
        let _ = TcpStream::connect(self.addr);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

fn serve(stream: TcpStream, dim: usize, handler: &StubHandler) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 || line == "\r\n" || line == "\n" {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            if name.trim().eq_ignore_ascii_case("content-length") {
                content_length = value.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body)?;

    let mut parts = request_line.split_whitespace();
    let (method, path) = (parts.next().unwrap_or(""), parts.next().unwrap_or(""));
    let (status, payload) = match (method, path) {
        ("GET", "/info") => (
            200,
            serde_json::to_string(&InfoResponse {
                dim,
                model_name: "stub".into(),
                version: "1".into(),
            })
            .expect("serializable"),
        ),
        ("POST", "/embed") => embed(&body, dim, handler),
        _ => (404, error_json("not found")),
    };
    respond(stream, status, &payload)
}

fn embed(body: &[u8], dim: usize, handler: &StubHandler) -> (u16, String) {
    let req: EmbedRequest = match serde_json::from_slice(body) {
        Ok(r) => r,
        Err(e) => return (400, error_json(&format!("bad request: {e}"))),
    };
    if req.texts.is_empty() {
        return (400, error_json("texts must be non-empty"));
    }
    if req.texts.iter().any(String::is_empty) {
        return (400, error_json("texts must not contain empty strings"));
    }
    let mut vectors = Vec::with_capacity(req.texts.len());
    for (i, text) in req.texts.iter().enumerate() {
        match handler(i, text) {
            Ok(v) => vectors.push(v),
            Err(msg) => return (500, error_json(&msg)),
        }
    }
    let resp = EmbedResponse { vectors, dim };
    (200, serde_json::to_string(&resp).expect("serializable"))
}

fn error_json(msg: &str) -> String {
    serde_json::json!({ "error": msg }).to_string()
}

fn respond(mut stream: TcpStream, status: u16, body: &str) -> std::io::Result<()> {
    let reason = match status {
        200 => "OK",
        400 => "Bad Request",
        404 => "Not Found",
        _ => "Internal Server Error",
    };
    write!(
        stream,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )?;
    stream.flush()
}
