#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};
use std::time::Duration;

pub const BIN: &str = env!("CARGO_BIN_EXE_etma");

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn etma(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env_remove("ETMA_DATA_DIR")
        .output()
        .expect("etma runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Value of a `key = value (...)` line in eval output.
pub fn value(out: &str, key: &str) -> f64 {
    let line = out
        .lines()
        .find(|l| l.starts_with(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no `{key}` line in:\n{out}"));
    line[key.len() + 3..]
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap()
}

/// Percent text of a `key = value (P%)` line.
pub fn percent(out: &str, key: &str) -> String {
    let line = out.lines().find(|l| l.starts_with(key)).unwrap();
    let open = line.rfind('(').unwrap();
    line[open + 1..line.len() - 1].to_owned()
}

/// Runs the reference pipeline in `dir` and returns the concatenated stdout.
pub fn pipeline(dir: &Path) -> String {
    let f = |n: &str| fixture(n).to_string_lossy().into_owned();
    let steps: Vec<Vec<String>> = vec![
        vec!["validate".into(), f("trip_circuit.model.json"), f("trip_circuit.probs.json")],
        vec![
            "generate".into(),
            f("trip_circuit.model.json"),
            "--out".into(),
            "complete.json".into(),
            "--dot".into(),
            "complete.dot".into(),
            "--paths".into(),
        ],
        vec![
            "reduce".into(),
            "complete.json".into(),
            f("trip_circuit.directives.json"),
            "--out".into(),
            "reduced.json".into(),
            "--dot".into(),
            "reduced.dot".into(),
            "--paths".into(),
        ],
        vec!["partition".into(), "reduced.json".into(), "--indices".into(), "3,5,7-10".into()],
        vec![
            "eval".into(),
            "reduced.json".into(),
            f("trip_circuit.probs.json"),
            f("trip_circuit.both_cb_fail.partition.json"),
            "--oracle".into(),
            "--paths".into(),
            "--csv".into(),
            "histogram.csv".into(),
        ],
        vec![
            "whatif".into(),
            f("trip_circuit.model.json"),
            f("trip_circuit.directives.json"),
            "--duplicate".into(),
            "CT".into(),
            "--probs".into(),
            f("trip_circuit.probs.json"),
            "--indices".into(),
            "0,10,20".into(),
            "--out-model".into(),
            "redundant.model.json".into(),
            "--out-directives".into(),
            "redundant.directives.json".into(),
            "--out-probs".into(),
            "redundant.probs.json".into(),
            "--out".into(),
            "redundant.json".into(),
            "--dot".into(),
            "redundant.dot".into(),
        ],
    ];
    let mut all = String::new();
    for args in steps {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let o = etma(dir, &args);
        assert!(o.status.success(), "{args:?}: {}", stderr(&o));
        all.push_str(&stdout(&o));
    }
    all
}

/// A running `etma serve` on an OS-assigned port, killed on drop.
pub struct Server {
    pub child: Child,
    pub addr: String,
}

impl Server {
    pub fn start(data_dir: Option<&Path>) -> Server {
        let mut cmd = Command::new(BIN);
        cmd.args(["serve", "--port", "0"])
            .env_remove("ETMA_DATA_DIR")
            .stdout(Stdio::null())
            .stderr(Stdio::piped());
        if let Some(dir) = data_dir {
            cmd.env("ETMA_DATA_DIR", dir);
        }
        let mut child = cmd.spawn().unwrap();
        let mut lines = BufReader::new(child.stderr.take().unwrap()).lines();
        let addr = loop {
            let line = lines.next().expect("server printed its address").unwrap();
            if let Some(rest) = line.strip_prefix("listening on http://") {
                break rest.trim().to_owned();
            }
        };
        // Keep draining so the child never blocks on a full pipe.
        std::thread::spawn(move || for _ in lines {});
        Server { child, addr }
    }

    /// Minimal HTTP/1.1 exchange; returns status and body.
    pub fn request(&self, method: &str, path: &str, body: &str) -> (u16, String) {
        let mut s = TcpStream::connect(&self.addr).unwrap();
        s.set_read_timeout(Some(Duration::from_secs(10))).unwrap();
        write!(
            s,
            "{method} {path} HTTP/1.1\r\nHost: {}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
            self.addr,
            body.len()
        )
        .unwrap();
        let mut raw = String::new();
        s.read_to_string(&mut raw).unwrap();
        let (head, body) = raw.split_once("\r\n\r\n").unwrap();
        let status = head.split_whitespace().nth(1).unwrap().parse().unwrap();
        (status, body.to_owned())
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
