//! Black-box classifiers reached over a line protocol.
//!
//! Requests are single-line JSON objects `{"id":n,"features":{...}}` with
//! strictly increasing ids; responses are `{"id":n,"label":"token"}` and
//! are matched by id, so a server may answer out of order. The subprocess
//! transport keeps at most `window` requests in flight.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

use crate::model::{validate_entity, Entity, FeatureSchema};

use super::ClassifierError;

pub const DEFAULT_WINDOW: usize = 32;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalConfig {
    pub window: usize,
    pub timeout: Duration,
    pub cache: bool,
}

impl Default for ExternalConfig {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            timeout: DEFAULT_TIMEOUT,
            cache: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Transport {
    Subprocess { program: String, args: Vec<String> },
    Http { url: String },
}

struct Features<'a> {
    schema: &'a FeatureSchema,
    entity: &'a Entity,
}

impl Serialize for Features<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.schema.len()))?;
        for (name, value) in self.entity.tokens(self.schema) {
            map.serialize_entry(name, value)?;
        }
        map.end()
    }
}

#[derive(Serialize)]
struct RequestOut<'a> {
    id: u64,
    features: Features<'a>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RequestIn {
    id: u64,
    features: HashMap<String, String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Response {
    id: u64,
    label: String,
}

/// Encodes one request line (no trailing newline). Features are written
/// in schema order.
pub fn encode_request(schema: &FeatureSchema, id: u64, entity: &Entity) -> String {
    serde_json::to_string(&RequestOut {
        id,
        features: Features { schema, entity },
    })
    .expect("request serializes")
}

/// Server side: decodes a request line into `(id, entity)`.
pub fn decode_request(schema: &FeatureSchema, line: &str) -> Result<(u64, Entity), String> {
    let req: RequestIn = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let entity = validate_entity(schema, req.features).map_err(|v| {
        v.iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; ")
    })?;
    Ok((req.id, entity))
}

pub fn encode_response(id: u64, label: &str) -> String {
    serde_json::to_string(&Response {
        id,
        label: label.to_owned(),
    })
    .expect("response serializes")
}

fn decode_response(line: &str) -> Result<(u64, String), ClassifierError> {
    let r: Response = serde_json::from_str(line)
        .map_err(|e| ClassifierError::ExternalProtocol(format!("malformed response `{line}`: {e}")))?;
    Ok((r.id, r.label))
}

const EXIT_GRACE: Duration = Duration::from_millis(500);

struct StdioConnection {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    healthy: bool,
}

impl Drop for StdioConnection {
    /// Closes stdin and gives a healthy child a short grace period to
    /// exit on its own before killing it.
    fn drop(&mut self) {
        drop(self.stdin.take());
        if self.healthy {
            let deadline = Instant::now() + EXIT_GRACE;
            while Instant::now() < deadline {
                match self.child.try_wait() {
                    Ok(Some(_)) | Err(_) => return,
                    Ok(None) => thread::sleep(Duration::from_millis(2)),
                }
            }
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

enum Connection {
    Stdio(StdioConnection),
    Http(ureq::Agent, String),
    Broken(String),
}

struct State {
    conn: Connection,
    next_id: u64,
}

pub struct ExternalClassifier {
    schema: FeatureSchema,
    classes: Vec<String>,
    config: ExternalConfig,
    transport: Transport,
    state: Mutex<State>,
}

impl std::fmt::Debug for ExternalClassifier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalClassifier")
            .field("transport", &self.transport)
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl ExternalClassifier {
    pub fn connect(
        schema: FeatureSchema,
        classes: Vec<String>,
        transport: Transport,
        config: ExternalConfig,
    ) -> Result<Self, ClassifierError> {
        super::tree::check_classes(&classes)?;
        if config.window == 0 {
            return Err(ClassifierError::ExternalProtocol(
                "pipeline window must be at least 1".into(),
            ));
        }
        let conn = match &transport {
            Transport::Subprocess { program, args } => Connection::Stdio(spawn(program, args)?),
            Transport::Http { url } => {
                let agent: ureq::Agent = ureq::Agent::config_builder()
                    .timeout_global(Some(config.timeout))
                    .build()
                    .into();
                let url = if url.trim_end_matches('/').ends_with("/classify") {
                    url.clone()
                } else {
                    format!("{}/classify", url.trim_end_matches('/'))
                };
                Connection::Http(agent, url)
            }
        };
        Ok(Self {
            schema,
            classes,
            config,
            transport,
            state: Mutex::new(State { conn, next_id: 0 }),
        })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn config(&self) -> &ExternalConfig {
        &self.config
    }

    fn resolve(&self, label: &str) -> Result<usize, ClassifierError> {
        self.classes.iter().position(|c| c == label).ok_or_else(|| {
            ClassifierError::ExternalProtocol(format!("label `{label}` is not a declared class"))
        })
    }

    pub fn classify_batch(&self, entities: &[Entity]) -> Result<Vec<usize>, ClassifierError> {
        if entities.is_empty() {
            return Ok(vec![]);
        }
        let mut state = self.state.lock().unwrap_or_else(|p| p.into_inner());
        let State { conn, next_id } = &mut *state;
        let result = match conn {
            Connection::Broken(reason) => Err(ClassifierError::ExternalProtocol(format!(
                "transport unusable after earlier failure: {reason}"
            ))),
            Connection::Stdio(stdio) => self.pipeline(stdio, next_id, entities),
            Connection::Http(agent, url) => self.http_round_trips(agent, url, next_id, entities),
        };
        if let Err(err) = &result {
            if let Connection::Stdio(stdio) = conn {
                stdio.healthy = false;
            }
            if !matches!(conn, Connection::Broken(_)) {
                *conn = Connection::Broken(err.root().to_string());
            }
        }
        result
    }

    fn pipeline(
        &self,
        stdio: &mut StdioConnection,
        next_id: &mut u64,
        entities: &[Entity],
    ) -> Result<Vec<usize>, ClassifierError> {
        let mut labels: Vec<Option<usize>> = vec![None; entities.len()];
        let mut outstanding: HashMap<u64, usize> = HashMap::new();
        let mut sent = 0;
        let mut oldest_id = *next_id;
        while sent < entities.len() || !outstanding.is_empty() {
            while outstanding.len() < self.config.window && sent < entities.len() {
                let id = *next_id;
                *next_id += 1;
                let mut line = encode_request(&self.schema, id, &entities[sent]);
                line.push('\n');
                let stdin = stdio.stdin.as_mut().expect("open until drop");
                stdin
                    .write_all(line.as_bytes())
                    .and_then(|()| stdin.flush())
                    .map_err(|e| {
                        ClassifierError::ExternalProtocol(format!("write failed: {e}")).at(sent)
                    })?;
                outstanding.insert(id, sent);
                sent += 1;
            }
            if let Some(min) = outstanding.keys().min() {
                oldest_id = *min;
            }
            let line = match stdio.lines.recv_timeout(self.config.timeout) {
                Ok(Ok(line)) => line,
                Ok(Err(e)) => {
                    return Err(ClassifierError::ExternalProtocol(format!("read failed: {e}")))
                }
                Err(RecvTimeoutError::Timeout) => {
                    let index = outstanding[&oldest_id];
                    return Err(ClassifierError::ExternalTimeout {
                        id: oldest_id,
                        timeout: self.config.timeout,
                    }
                    .at(index));
                }
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(ClassifierError::ExternalProtocol(
                        "classifier process closed its output".into(),
                    ))
                }
            };
            let (id, label) = decode_response(&line)?;
            let index = outstanding.remove(&id).ok_or_else(|| {
                ClassifierError::ExternalProtocol(format!("response for unknown id {id}"))
            })?;
            labels[index] = Some(self.resolve(&label).map_err(|e| e.at(index))?);
        }
        Ok(labels.into_iter().map(|l| l.expect("every request answered")).collect())
    }

    fn http_round_trips(
        &self,
        agent: &ureq::Agent,
        url: &str,
        next_id: &mut u64,
        entities: &[Entity],
    ) -> Result<Vec<usize>, ClassifierError> {
        let mut labels = Vec::with_capacity(entities.len());
        for (index, entity) in entities.iter().enumerate() {
            let id = *next_id;
            *next_id += 1;
            let body = encode_request(&self.schema, id, entity);
            let reply = agent
                .post(url)
                .header("content-type", "application/json")
                .send(&body)
                .and_then(|mut r| r.body_mut().read_to_string());
            let text = match reply {
                Ok(text) => text,
                Err(ureq::Error::Timeout(_)) => {
                    return Err(ClassifierError::ExternalTimeout {
                        id,
                        timeout: self.config.timeout,
                    }
                    .at(index))
                }
                Err(e) => {
                    return Err(ClassifierError::ExternalProtocol(format!("http: {e}")).at(index))
                }
            };
            let (rid, label) = decode_response(text.trim()).map_err(|e| e.at(index))?;
            if rid != id {
                return Err(ClassifierError::ExternalProtocol(format!(
                    "response id {rid} does not match request id {id}"
                ))
                .at(index));
            }
            labels.push(self.resolve(&label).map_err(|e| e.at(index))?);
        }
        Ok(labels)
    }
}

fn spawn(program: &str, args: &[String]) -> Result<StdioConnection, ClassifierError> {
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit())
        .spawn()
        .map_err(|e| ClassifierError::ExternalProtocol(format!("cannot start `{program}`: {e}")))?;
    let stdin = child.stdin.take().expect("piped stdin");
    let stdout = child.stdout.take().expect("piped stdout");
    let (tx, rx) = mpsc::channel();
    thread::Builder::new()
        .name("cfx-external-reader".into())
        .spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        })
        .map_err(|e| ClassifierError::ExternalProtocol(format!("reader thread: {e}")))?;
    Ok(StdioConnection {
        child,
        stdin: Some(stdin),
        lines: rx,
        healthy: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FeatureDef;

    fn schema() -> FeatureSchema {
        FeatureSchema::new(vec![
            FeatureDef::new("City", ["bronx", "new york"], false),
            FeatureDef::new("Age", ["young", "old"], false),
        ])
        .unwrap()
    }

    #[test]
    fn request_wire_format() {
        let s = schema();
        let e = Entity::from_values(&s, vec![1, 0]).unwrap();
        assert_eq!(
            encode_request(&s, 7, &e),
            r#"{"id":7,"features":{"City":"new york","Age":"young"}}"#
        );
        assert_eq!(decode_request(&s, &encode_request(&s, 7, &e)).unwrap(), (7, e));
        assert_eq!(encode_response(3, "accept"), r#"{"id":3,"label":"accept"}"#);
    }

    #[test]
    fn malformed_responses() {
        assert!(decode_response(r#"{"id":1}"#).is_err());
        assert!(decode_response(r#"{"id":-1,"label":"a"}"#).is_err());
        assert!(decode_response("garbage").is_err());
        assert_eq!(decode_response(r#"{"id":1,"label":"a"}"#).unwrap(), (1, "a".into()));
    }

    #[test]
    fn missing_program_is_reported() {
        let err = ExternalClassifier::connect(
            schema(),
            vec!["a".into()],
            Transport::Subprocess {
                program: "/nonexistent/cfx-classifier".into(),
                args: vec![],
            },
            ExternalConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, ClassifierError::ExternalProtocol(_)));
    }

    #[cfg(unix)]
    #[test]
    fn silent_process_times_out() {
        let c = ExternalClassifier::connect(
            schema(),
            vec!["a".into()],
            Transport::Subprocess {
                program: "sleep".into(),
                args: vec!["5".into()],
            },
            ExternalConfig {
                timeout: Duration::from_millis(100),
                ..ExternalConfig::default()
            },
        )
        .unwrap();
        let e = Entity::from_values(&schema(), vec![0, 0]).unwrap();
        let err = c.classify_batch(std::slice::from_ref(&e)).unwrap_err();
        assert!(matches!(err.root(), ClassifierError::ExternalTimeout { id: 0, .. }));
        // transport is poisoned afterwards
        assert!(matches!(
            c.classify_batch(&[e]).unwrap_err().root(),
            ClassifierError::ExternalProtocol(_)
        ));
    }
}
