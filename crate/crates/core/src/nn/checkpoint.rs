//! Versioned text checkpoint format for network parameters.
//!
//! Layout (line-oriented, whitespace-separated):
//!
//! ```text
//! densenet v1
//! layers <count>
//! layer <index> <activation> <inputs> <outputs>   (one per layer)
//! w <index> <inputs*outputs floats, row-major>    (one per layer)
//! b <index> <outputs floats>                      (one per layer)
//! ```
//!
//! Floats use Rust's shortest round-trip decimal form, so save/load is
//! lossless. The `v1` tag is the stability contract: readers reject
//! anything else.

use super::{Activation, DenseNet, Layer, LayerSpec, NnError};
use std::io::{BufRead, Write};

pub fn write_net_to_string(net: &DenseNet) -> String {
    let mut out = String::new();
    out.push_str("densenet v1\n");
    out.push_str(&format!("layers {}\n", net.layers().len()));
    for (k, spec) in net.layer_specs().iter().enumerate() {
        out.push_str(&format!(
            "layer {k} {} {} {}\n",
            spec.activation.name(),
            spec.inputs,
            spec.outputs
        ));
    }
    for (k, layer) in net.layers().iter().enumerate() {
        out.push_str(&format!("w {k}"));
        for v in &layer.weights {
            out.push(' ');
            out.push_str(&v.to_string());
        }
        out.push('\n');
        out.push_str(&format!("b {k}"));
        for v in &layer.bias {
            out.push(' ');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}

pub fn save_net(net: &DenseNet, writer: &mut impl Write) -> std::io::Result<()> {
    writer.write_all(write_net_to_string(net).as_bytes())
}

pub fn load_net_from_str(text: &str) -> Result<DenseNet, NnError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| NnError::Checkpoint("empty checkpoint".into()))?;
    if header.trim() != "densenet v1" {
        return Err(NnError::Checkpoint(format!(
            "unsupported header '{header}' (expected 'densenet v1')"
        )));
    }
    let count_line = lines
        .next()
        .ok_or_else(|| NnError::Checkpoint("missing layers line".into()))?;
    let count: usize = count_line
        .strip_prefix("layers ")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| NnError::Checkpoint(format!("bad layers line '{count_line}'")))?;

    let mut specs = Vec::with_capacity(count);
    for k in 0..count {
        let line = lines
            .next()
            .ok_or_else(|| NnError::Checkpoint(format!("missing layer {k} header")))?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 5 || parts[0] != "layer" || parts[1] != k.to_string() {
            return Err(NnError::Checkpoint(format!("bad layer header '{line}'")));
        }
        let activation = Activation::from_name(parts[2])?;
        let inputs: usize = parts[3]
            .parse()
            .map_err(|_| NnError::Checkpoint(format!("bad input dim in '{line}'")))?;
        let outputs: usize = parts[4]
            .parse()
            .map_err(|_| NnError::Checkpoint(format!("bad output dim in '{line}'")))?;
        specs.push(LayerSpec::new(inputs, outputs, activation));
    }

    let mut layers = Vec::with_capacity(count);
    for k in 0..count {
        let weights = parse_floats(lines.next(), "w", k, specs[k].inputs * specs[k].outputs)?;
        let bias = parse_floats(lines.next(), "b", k, specs[k].outputs)?;
        layers.push(Layer {
            weights,
            bias,
            activation: specs[k].activation,
            inputs: specs[k].inputs,
            outputs: specs[k].outputs,
        });
    }
    let net = DenseNet::from_layers(layers);
    // Rebuild through the validating constructor to re-check the chain.
    DenseNet::zeros(&net.layer_specs())?;
    if !net.all_finite() {
        return Err(NnError::Checkpoint("non-finite parameter in checkpoint".into()));
    }
    Ok(net)
}

pub fn load_net(reader: &mut impl BufRead) -> Result<DenseNet, NnError> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| NnError::Checkpoint(format!("read failed: {e}")))?;
    load_net_from_str(&text)
}

fn parse_floats(
    line: Option<&str>,
    prefix: &str,
    index: usize,
    expected: usize,
) -> Result<Vec<f64>, NnError> {
    let line = line.ok_or_else(|| {
        NnError::Checkpoint(format!("missing '{prefix} {index}' parameter line"))
    })?;
    let mut parts = line.split_whitespace();
    if parts.next() != Some(prefix) || parts.next() != Some(&index.to_string()) {
        return Err(NnError::Checkpoint(format!(
            "expected '{prefix} {index} ...' got '{line}'"
        )));
    }
    let values: Vec<f64> = parts
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| NnError::Checkpoint(format!("bad float '{s}'")))
        })
        .collect::<Result<_, _>>()?;
    if values.len() != expected {
        return Err(NnError::Checkpoint(format!(
            "'{prefix} {index}' has {} values, expected {expected}",
            values.len()
        )));
    }
    Ok(values)
}
