#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use refprime::inference::{DesignMatrix, GroupBlock, GroupFactor};

pub fn rng(seed: u64) -> ChaCha8Rng {
    refprime::seeding::rng_from_seed(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Random group block with `k` terms (intercept first) over `levels` levels.
pub fn random_block(rng: &mut ChaCha8Rng, n: usize, k: usize, levels: usize, correlated: bool) -> GroupBlock {
    let mut z = Vec::with_capacity(n * k);
    for _ in 0..n {
        z.push(1.0);
        for _ in 1..k {
            z.push(if rng.random_bool(0.5) { 0.5 } else { -0.5 });
        }
    }
    GroupBlock {
        factor: if rng.random_bool(0.5) { GroupFactor::Item } else { GroupFactor::Participant },
        correlated,
        term_names: (0..k).map(|i| format!("t{i}")).collect(),
        levels: (0..levels).map(|i| format!("L{i:02}")).collect(),
        level_of_row: (0..n).map(|i| i % levels).collect(),
        z,
    }
}

/// Random fixed design with an intercept column and +-0.5 coded predictors.
pub fn random_design(rng: &mut ChaCha8Rng, n: usize, p: usize, blocks: &[(usize, usize, bool)]) -> DesignMatrix {
    let mut x = Vec::with_capacity(n * p);
    for _ in 0..n {
        x.push(1.0);
        for _ in 1..p {
            x.push(rng.random_range(-1.0..1.0));
        }
    }
    let y = (0..n).map(|_| u8::from(rng.random_bool(0.5))).collect();
    let blocks = blocks.iter().map(|&(k, l, c)| random_block(rng, n, k, l, c)).collect();
    DesignMatrix::new((0..p).map(|i| format!("c{i}")).collect(), x, y, blocks).unwrap()
}

/// A request seen by [`serve`]: request line, headers and body.
#[derive(Debug, Clone)]
pub struct Seen {
    pub request_line: String,
    pub headers: Vec<String>,
    pub body: String,
}

/// Serve one scripted (status, body) reply per connection on a local port.
/// Returns the base URL and a handle yielding every request received.
pub fn serve(replies: Vec<(u16, String)>) -> (String, std::thread::JoinHandle<Vec<Seen>>) {
    use std::io::{BufRead, BufReader, Read, Write};
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let base = format!("http://{}/v1", listener.local_addr().unwrap());
    let handle = std::thread::spawn(move || {
        let mut seen = Vec::new();
        for (status, body) in replies {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut request_line = String::new();
            reader.read_line(&mut request_line).unwrap();
            let mut headers = Vec::new();
            let mut length = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let line = line.trim_end().to_string();
                if line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
                headers.push(line);
            }
            let mut buf = vec![0; length];
            reader.read_exact(&mut buf).unwrap();
            seen.push(Seen { request_line: request_line.trim_end().into(), headers, body: String::from_utf8(buf).unwrap() });
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
        seen
    });
    (base, handle)
}

pub fn completion_body(text: &str) -> String {
    serde_json::json!({ "choices": [{ "text": text }] }).to_string()
}
