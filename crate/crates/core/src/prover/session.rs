use std::io::{BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::path::PathBuf;
use std::process::{Child, ChildStdin, Command as Process, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use super::config::ProverConfig;
use super::protocol::{encode, Command, Reply, Request, Response};
use super::script::{serve_lines, Script};
use super::ProverError;

/// Where an external prover bridge listens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExternalAddress {
    /// `host:port`
    Tcp(String),
    /// A program speaking the protocol on its standard streams.
    Command(Vec<String>),
}

#[derive(Debug, Clone)]
pub enum ProverBackend {
    External(ExternalAddress),
    Scripted { path: PathBuf, script: Arc<Script> },
}

impl ProverBackend {
    /// Parses `scripted:<path>`, `external:<host>:<port>` or
    /// `external:cmd:<program> [args...]`.
    pub fn parse(spec: &str) -> Result<Self, ProverError> {
        if let Some(path) = spec.strip_prefix("scripted:") {
            let path = PathBuf::from(path);
            let script = Script::load(&path).map_err(|e| ProverError::Script(e.to_string()))?;
            Ok(Self::Scripted {
                path,
                script: Arc::new(script),
            })
        } else if let Some(addr) = spec.strip_prefix("external:") {
            if let Some(cmd) = addr.strip_prefix("cmd:") {
                let argv: Vec<String> = cmd.split_whitespace().map(str::to_string).collect();
                if argv.is_empty() {
                    return Err(ProverError::Config("empty prover command".into()));
                }
                Ok(Self::External(ExternalAddress::Command(argv)))
            } else if addr.contains(':') {
                Ok(Self::External(ExternalAddress::Tcp(addr.to_string())))
            } else {
                Err(ProverError::Config(format!("bad prover address `{addr}`")))
            }
        } else {
            Err(ProverError::Config(format!(
                "prover backend must be scripted:<path> or external:<address>, got `{spec}`"
            )))
        }
    }

    pub fn scripted(script: Script) -> Self {
        Self::Scripted {
            path: PathBuf::from("<inline>"),
            script: Arc::new(script),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Scripted { path, .. } => format!("scripted:{}", path.display()),
            Self::External(ExternalAddress::Tcp(a)) => format!("external:{a}"),
            Self::External(ExternalAddress::Command(argv)) => {
                format!("external:cmd:{}", argv.join(" "))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionState {
    Idle,
    Busy,
    Dead,
}

enum Outbound {
    Channel(Sender<String>),
    Tcp(TcpStream),
    Pipe(ChildStdin),
}

/// Bidirectional line channel to a backend.
struct Link {
    outbound: Outbound,
    inbound: Receiver<String>,
    child: Option<Child>,
}

impl Link {
    fn send(&mut self, line: &str) -> std::io::Result<()> {
        let broken = || std::io::Error::new(std::io::ErrorKind::BrokenPipe, "backend is gone");
        match &mut self.outbound {
            Outbound::Channel(tx) => tx.send(line.to_string()).map_err(|_| broken()),
            Outbound::Tcp(s) => s.write_all(format!("{line}\n").as_bytes()),
            Outbound::Pipe(p) => writeln!(p, "{line}").and_then(|_| p.flush()),
        }
    }
}

impl Drop for Link {
    fn drop(&mut self) {
        let quit = encode(&Request {
            id: u64::MAX,
            command: Command::Quit,
        });
        let _ = self.send(&quit);
        if let Outbound::Tcp(s) = &self.outbound {
            let _ = s.shutdown(std::net::Shutdown::Both);
        }
        if let Some(child) = &mut self.child {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

fn spawn_reader<R: std::io::Read + Send + 'static>(source: R) -> Receiver<String> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for line in BufReader::new(source).lines() {
            let Ok(line) = line else { break };
            if tx.send(line).is_err() {
                break;
            }
        }
    });
    rx
}

fn connect(backend: &ProverBackend, config: &ProverConfig) -> Result<Link, ProverError> {
    match backend {
        ProverBackend::Scripted { script, .. } => {
            let (req_tx, req_rx) = mpsc::channel::<String>();
            let (resp_tx, resp_rx) = mpsc::channel::<String>();
            let script = Arc::clone(script);
            thread::spawn(move || serve_lines(&script, req_rx, |line| resp_tx.send(line).is_ok()));
            Ok(Link {
                outbound: Outbound::Channel(req_tx),
                inbound: resp_rx,
                child: None,
            })
        }
        ProverBackend::External(ExternalAddress::Tcp(addr)) => {
            let timeout = Duration::from_millis(config.connect_timeout_ms);
            let sock = addr
                .to_socket_addrs()
                .map_err(|e| ProverError::Connect(format!("{addr}: {e}")))?
                .next()
                .ok_or_else(|| ProverError::Connect(format!("{addr}: no address")))?;
            let stream = TcpStream::connect_timeout(&sock, timeout)
                .map_err(|e| ProverError::Connect(format!("{addr}: {e}")))?;
            let _ = stream.set_nodelay(true);
            let reader = stream
                .try_clone()
                .map_err(|e| ProverError::Connect(format!("{addr}: {e}")))?;
            Ok(Link {
                outbound: Outbound::Tcp(stream),
                inbound: spawn_reader(reader),
                child: None,
            })
        }
        ProverBackend::External(ExternalAddress::Command(argv)) => {
            let mut child = Process::new(&argv[0])
                .args(&argv[1..])
                .stdin(Stdio::piped())
                .stdout(Stdio::piped())
                .stderr(Stdio::inherit())
                .spawn()
                .map_err(|e| ProverError::Connect(format!("{}: {e}", argv[0])))?;
            let stdin = child.stdin.take().expect("piped stdin");
            let stdout = child.stdout.take().expect("piped stdout");
            Ok(Link {
                outbound: Outbound::Pipe(stdin),
                inbound: spawn_reader(stdout),
                child: Some(child),
            })
        }
    }
}

static NEXT_SESSION: AtomicU64 = AtomicU64::new(1);

/// One conversation with a prover backend. Commands are strictly sequential;
/// the session is `Busy` only while a command is in flight.
pub struct ProverSession {
    id: u64,
    backend: String,
    state: SessionState,
    link: Link,
    next_request: u64,
    config: ProverConfig,
}

impl std::fmt::Debug for ProverSession {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProverSession")
            .field("id", &self.id)
            .field("backend", &self.backend)
            .field("state", &self.state)
            .finish()
    }
}

/// Connects and checks that the backend answers.
pub fn open_session(
    backend: &ProverBackend,
    config: &ProverConfig,
) -> Result<ProverSession, ProverError> {
    config.validate().map_err(ProverError::Config)?;
    let link = connect(backend, config)?;
    let mut session = ProverSession {
        id: NEXT_SESSION.fetch_add(1, Ordering::Relaxed),
        backend: backend.describe(),
        state: SessionState::Idle,
        link,
        next_request: 1,
        config: config.clone(),
    };
    let wait = Duration::from_millis(config.connect_timeout_ms);
    match session.call(Command::Reset, wait) {
        Ok(Reply::Ok { .. }) => Ok(session),
        Ok(other) => Err(ProverError::Connect(format!(
            "backend refused handshake: {other:?}"
        ))),
        Err(e) => Err(ProverError::Connect(e.to_string())),
    }
}

impl ProverSession {
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn config(&self) -> &ProverConfig {
        &self.config
    }

    /// Sets up the theory context for one theorem.
    pub fn init(&mut self, theorem: Option<&str>, statement: &str) -> Result<(), ProverError> {
        let command = Command::Init {
            theory: self.config.theory.clone(),
            statement: statement.to_string(),
            theorem: theorem.map(str::to_string),
        };
        let wait = Duration::from_millis(self.config.connect_timeout_ms);
        match self.call(command, wait)? {
            Reply::Ok { .. } => Ok(()),
            Reply::Fail { reason } => {
                Err(ProverError::Protocol(format!("init rejected: {reason}")))
            }
            Reply::Timeout => Err(ProverError::Protocol("init timed out".into())),
        }
    }

    /// Sends one command and waits up to `wait` for its reply. Replies to
    /// earlier, abandoned commands are discarded. An expired wait yields
    /// `Reply::Timeout`.
    pub fn call(&mut self, command: Command, wait: Duration) -> Result<Reply, ProverError> {
        if self.state == SessionState::Dead {
            return Err(ProverError::SessionDead(format!(
                "session {} is dead",
                self.id
            )));
        }
        let id = self.next_request;
        self.next_request += 1;
        let line = encode(&Request { id, command });
        self.state = SessionState::Busy;
        if let Err(e) = self.link.send(&line) {
            self.state = SessionState::Dead;
            return Err(ProverError::SessionDead(e.to_string()));
        }
        let deadline = Instant::now() + wait;
        loop {
            let remaining = deadline.saturating_duration_since(Instant::now());
            match self.link.inbound.recv_timeout(remaining) {
                Ok(line) => {
                    let response: Response = match serde_json::from_str(&line) {
                        Ok(r) => r,
                        Err(e) => {
                            tracing::warn!(error = %e, line, "malformed response frame");
                            continue;
                        }
                    };
                    if response.id == id {
                        self.state = SessionState::Idle;
                        return Ok(response.reply);
                    }
                }
                Err(RecvTimeoutError::Timeout) => {
                    self.state = SessionState::Idle;
                    return Ok(Reply::Timeout);
                }
                Err(RecvTimeoutError::Disconnected) => {
                    self.state = SessionState::Dead;
                    return Err(ProverError::SessionDead(format!(
                        "backend of session {} closed",
                        self.id
                    )));
                }
            }
        }
    }
}
