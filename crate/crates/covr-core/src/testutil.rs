//! Test-only helpers.

use std::io::{Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};

/// Minimal single-threaded HTTP responder routing on the request path.
/// Serves a fixed number of requests then joins; responses close the
/// connection so each request arrives on a fresh socket.
pub struct TinyServer {
    pub addr: String,
    captured: Arc<Mutex<Vec<(String, String)>>>,
    handle: Option<std::thread::JoinHandle<()>>,
}

impl TinyServer {
    pub fn start(
        routes: impl Fn(&str, &str) -> String + Send + 'static,
        requests_to_serve: usize,
    ) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = format!("http://{}", listener.local_addr().unwrap());
        let captured = Arc::new(Mutex::new(Vec::new()));
        let captured_clone = Arc::clone(&captured);
        let handle = std::thread::spawn(move || {
            for _ in 0..requests_to_serve {
                let (mut stream, _) = listener.accept().unwrap();
                let mut buf = Vec::new();
                let mut chunk = [0u8; 4096];
                let (path, body) = loop {
                    let n = stream.read(&mut chunk).unwrap();
                    buf.extend_from_slice(&chunk[..n]);
                    if let Some(header_end) = buf.windows(4).position(|w| w == b"\r\n\r\n") {
                        let headers = String::from_utf8_lossy(&buf[..header_end]).to_string();
                        let content_length: usize = headers
                            .lines()
                            .find_map(|l| {
                                l.to_ascii_lowercase()
                                    .strip_prefix("content-length:")
                                    .map(|v| v.trim().parse().unwrap())
                            })
                            .unwrap_or(0);
                        let mut body = buf[header_end + 4..].to_vec();
                        while body.len() < content_length {
                            let n = stream.read(&mut chunk).unwrap();
                            body.extend_from_slice(&chunk[..n]);
                        }
                        let path = headers
                            .lines()
                            .next()
                            .unwrap()
                            .split_whitespace()
                            .nth(1)
                            .unwrap()
                            .to_string();
                        break (path, String::from_utf8(body).unwrap());
                    }
                };
                captured_clone
                    .lock()
                    .unwrap()
                    .push((path.clone(), body.clone()));
                let response_body = routes(&path, &body);
                let response = format!(
                    "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nConnection: close\r\nContent-Length: {}\r\n\r\n{}",
                    response_body.len(),
                    response_body
                );
                stream.write_all(response.as_bytes()).unwrap();
            }
        });
        Self {
            addr,
            captured,
            handle: Some(handle),
        }
    }

    pub fn finish(mut self) -> Vec<(String, String)> {
        self.handle.take().unwrap().join().unwrap();
        Arc::try_unwrap(self.captured).unwrap().into_inner().unwrap()
    }
}
