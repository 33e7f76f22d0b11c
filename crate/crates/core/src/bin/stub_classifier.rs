//! Line-protocol classifier server backed by an internal model. Reads
//! requests on stdin and answers on stdout; used to exercise the external
//! transport, including out-of-order replies and protocol faults.

use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use clap::{Parser, ValueEnum};

use cfx_core::classifiers::external::{decode_request, encode_response};
use cfx_core::classifiers::{load_decision_tree, load_naive_bayes, load_tabulated, Classifier, ClassifierHandle};
use cfx_core::cli::ClassifierRef;
use cfx_core::speclang::parse_spec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Fault {
    /// Answer with a label outside the class list.
    BadLabel,
    /// Answer with an id that was never sent.
    BadId,
    /// Write a line that is not a response object.
    Malformed,
    /// Stop answering.
    Hang,
}

#[derive(Debug, Parser)]
#[command(name = "cfx-stub-classifier")]
struct Args {
    /// Spec file declaring the features.
    #[arg(long)]
    spec: PathBuf,

    /// tree:PATH, nb:PATH or table:PATH.
    #[arg(long)]
    model: ClassifierRef,

    /// Hold replies and release them in reverse order once `hold` are
    /// pending or the input has been idle for 20 ms.
    #[arg(long)]
    reorder: bool,

    #[arg(long, default_value_t = 8)]
    hold: usize,

    #[arg(long, value_enum)]
    fault: Option<Fault>,

    /// Requests answered correctly before the fault kicks in.
    #[arg(long, default_value_t = 0)]
    fault_after: usize,

    /// Writes "requests=N max_in_flight=M" here on exit.
    #[arg(long)]
    stats: Option<PathBuf>,
}

fn load(args: &Args) -> Result<(cfx_core::FeatureSchema, ClassifierHandle), String> {
    let text = std::fs::read_to_string(&args.spec).map_err(|e| format!("{}: {e}", args.spec.display()))?;
    let doc = parse_spec(&text).map_err(|e| e.to_string())?;
    let schema = doc.schema().clone();
    let read = |p: &PathBuf| std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()));
    let handle = match &args.model {
        ClassifierRef::Tree(p) => load_decision_tree(&read(p)?, &schema),
        ClassifierRef::NaiveBayes(p) => load_naive_bayes(&read(p)?, &schema),
        ClassifierRef::Table(p) => {
            let file = std::fs::File::open(p).map_err(|e| format!("{}: {e}", p.display()))?;
            load_tabulated(file, &schema)
        }
        other => return Err(format!("unsupported model {other:?}")),
    }
    .map_err(|e| e.to_string())?;
    Ok((schema, handle))
}

struct Server<'a> {
    out: io::StdoutLock<'a>,
    held: Vec<String>,
    received: usize,
    answered: usize,
    max_in_flight: usize,
}

impl Server<'_> {
    fn emit(&mut self, line: &str) -> io::Result<()> {
        self.out.write_all(line.as_bytes())?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        self.answered += 1;
        Ok(())
    }

    fn release(&mut self) -> io::Result<()> {
        while let Some(line) = self.held.pop() {
            self.emit(&line)?;
        }
        Ok(())
    }
}

fn serve(args: &Args) -> Result<(), String> {
    let (schema, classifier) = load(args)?;
    let (tx, rx) = mpsc::channel::<String>();
    thread::spawn(move || {
        for line in io::stdin().lock().lines() {
            let Ok(l) = line else { break };
            if tx.send(l).is_err() {
                break;
            }
        }
    });
    let stdout = io::stdout();
    let mut server = Server {
        out: stdout.lock(),
        held: Vec::new(),
        received: 0,
        answered: 0,
        max_in_flight: 0,
    };
    let io_err = |e: io::Error| e.to_string();
    loop {
        let line = if args.reorder && !server.held.is_empty() {
            match rx.recv_timeout(Duration::from_millis(20)) {
                Ok(l) => l,
                Err(mpsc::RecvTimeoutError::Timeout) => {
                    server.release().map_err(io_err)?;
                    continue;
                }
                Err(mpsc::RecvTimeoutError::Disconnected) => break,
            }
        } else {
            match rx.recv() {
                Ok(l) => l,
                Err(_) => break,
            }
        };
        if line.trim().is_empty() {
            continue;
        }
        server.received += 1;
        server.max_in_flight = server.max_in_flight.max(server.received - server.answered);
        let (id, entity) = decode_request(&schema, &line)?;
        let faulty = server.received > args.fault_after;
        let reply = match args.fault.filter(|_| faulty) {
            Some(Fault::Hang) => continue,
            Some(Fault::Malformed) => "{\"id\": oops".to_owned(),
            Some(Fault::BadId) => encode_response(id + 1_000_000, "x"),
            Some(Fault::BadLabel) => encode_response(id, "no-such-label"),
            None => {
                let class = classifier.classify(&entity).map_err(|e| e.to_string())?;
                encode_response(id, classifier.label(class))
            }
        };
        if args.reorder {
            server.held.push(reply);
            if server.held.len() >= args.hold {
                server.release().map_err(io_err)?;
            }
        } else {
            server.emit(&reply).map_err(io_err)?;
        }
    }
    server.release().map_err(io_err)?;
    if let Some(path) = &args.stats {
        let text = format!("requests={} max_in_flight={}\n", server.received, server.max_in_flight);
        std::fs::write(path, text).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match serve(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cfx-stub-classifier: {e}");
            ExitCode::from(3)
        }
    }
}
