// Parses line records, streams them through a two-layer network once and
// writes one JSON object per step to stdout.

use std::io::Cursor;

use streamnet::streams::{JsonlSink, RecordSource};
use streamnet::{run_stream, ActivationKind, NetworkSpec, NetworkState, NeuronParams, RunSummary};

const RECORDS: &str = "\
0.0, 1.0
0.5 0.5

1.0,-1.0
0.25 0.75
";

pub fn run_example() -> Result<RunSummary, Box<dyn std::error::Error>> {
    let spec = NetworkSpec::new(vec![
        NeuronParams::seeded(1, 2, 3, 1.0, 0.8, ActivationKind::Tanh)?,
        NeuronParams::seeded(2, 3, 1, 0.5, 0.5, ActivationKind::Sigmoid)?,
    ])?;
    let source = RecordSource::new(Cursor::new(RECORDS));
    let sink = JsonlSink::new(std::io::stdout().lock());
    let out = run_stream(&spec, NetworkState::zeros(&spec), source, sink, None)?;
    Ok(out.summary)
}

fn main() {
    let summary = run_example().expect("passthrough example failed");
    eprintln!("{summary}");
}
