//! Minimal HTTP/1.1 chat-completions mock on a loopback port. Each request
//! body is captured; a handler chooses the status and body of the reply.

#![allow(dead_code)]

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread;

pub type Handler = dyn Fn(usize, &str) -> (u16, String) + Send + Sync;

pub struct MockServer {
    pub base_url: String,
    requests: Arc<Mutex<Vec<String>>>,
}

impl MockServer {
    /// `handler(n, body)` receives the zero-based request number and the
    /// request body.
    pub fn start(handler: impl Fn(usize, &str) -> (u16, String) + Send + Sync + 'static) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind loopback");
        let base_url = format!("http://{}/v1", listener.local_addr().unwrap());
        let requests = Arc::new(Mutex::new(Vec::new()));
        let handler: Arc<Handler> = Arc::new(handler);
        let reqs = Arc::clone(&requests);
        thread::spawn(move || {
            for stream in listener.incoming().flatten() {
                let (reqs, handler) = (Arc::clone(&reqs), Arc::clone(&handler));
                thread::spawn(move || serve(stream, &reqs, &*handler));
            }
        });
        Self { base_url, requests }
    }

    pub fn requests(&self) -> Vec<String> {
        self.requests.lock().unwrap().clone()
    }
}

fn serve(stream: TcpStream, reqs: &Mutex<Vec<String>>, handler: &Handler) {
    let mut reader = BufReader::new(stream.try_clone().expect("clone stream"));
    let mut out = stream;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 {
            return;
        }
        let mut len = 0usize;
        loop {
            let mut h = String::new();
            if reader.read_line(&mut h).unwrap_or(0) == 0 {
                return;
            }
            let h = h.trim_end();
            if h.is_empty() {
                break;
            }
            if let Some((k, v)) = h.split_once(':') {
                if k.eq_ignore_ascii_case("content-length") {
                    len = v.trim().parse().unwrap_or(0);
                }
            }
        }
        let mut body = vec![0u8; len];
        if reader.read_exact(&mut body).is_err() {
            return;
        }
        let body = String::from_utf8_lossy(&body).into_owned();
        let n = {
            let mut r = reqs.lock().unwrap();
            r.push(body.clone());
            r.len() - 1
        };
        let (status, reply) = handler(n, &body);
        let head = format!(
            "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n",
            reply.len()
        );
        if out.write_all(head.as_bytes()).and_then(|_| out.write_all(reply.as_bytes())).is_err() {
            return;
        }
    }
}

/// Successful chat-completions body carrying `text`.
pub fn completion_body(text: &str) -> String {
    serde_json::json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": text}}]}).to_string()
}

/// Text between the erroneous tags of the last user message.
pub fn last_source(body: &str) -> String {
    let v: serde_json::Value = serde_json::from_str(body).expect("request JSON");
    let msgs = v["messages"].as_array().expect("messages");
    let last = msgs.iter().rev().find(|m| m["role"] == "user").expect("user message");
    let text = last["content"].as_str().unwrap();
    let open = "<erroneous sentence>";
    let start = text.rfind(open).expect("erroneous tag") + open.len();
    let end = start + text[start..].find("</erroneous sentence>").expect("close tag");
    text[start..end].trim().to_owned()
}

/// Handler answering each source with its target, in correction tags.
pub fn echo_targets(pairs: HashMap<String, String>) -> impl Fn(usize, &str) -> (u16, String) + Send + Sync {
    move |_, body| {
        let src = last_source(body);
        let tgt = pairs.get(&src).cloned().unwrap_or(src);
        (200, completion_body(&format!("<corrected sentence> {tgt} </corrected sentence>")))
    }
}
