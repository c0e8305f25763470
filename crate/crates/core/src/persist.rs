//! Versioned model files: decimal text payload with an integrity checksum.
//!
//! Weights are written with 17 significant digits, which round-trips f64
//! exactly, so a saved model reproduces its outputs bit-for-bit. The
//! checksum covers every byte after its own line.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::aanet::{AAnetConfig, AAnetNetwork, FinalActivation, Normalization};
use crate::data::format_value;
use crate::error::{Error, Result};
use crate::linear_aa::{Kernel, PCHAFactors, PchaOnAe};
use crate::matrix::DataMatrix;
use crate::model::ArchetypalModel;

const SCHEMA_VERSION: u32 = 1;
const MAGIC: &str = "aakit-model";

/// Any model the toolkit can persist.
#[derive(Debug, Clone)]
pub enum StoredModel {
    AAnet(AAnetNetwork),
    Pcha { factors: PCHAFactors, kernel: Option<Kernel> },
    PchaOnAe(PchaOnAe),
}

impl StoredModel {
    pub fn method(&self) -> &'static str {
        match self {
            StoredModel::AAnet(_) => "aanet",
            StoredModel::Pcha { kernel: None, .. } => "pcha",
            StoredModel::Pcha { kernel: Some(_), .. } => "kernel-pcha",
            StoredModel::PchaOnAe(_) => "pcha-ae",
        }
    }

    pub fn as_model(&self) -> &dyn ArchetypalModel {
        match self {
            StoredModel::AAnet(n) => n,
            StoredModel::Pcha { factors, .. } => factors,
            StoredModel::PchaOnAe(p) => p,
        }
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn write_matrix(out: &mut String, name: &str, m: &DataMatrix) {
    let _ = writeln!(out, "matrix {} {} {}", name, m.rows(), m.cols());
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|&v| format_value(v)).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
}

fn write_vector(out: &mut String, name: &str, v: &[f64]) {
    let _ = writeln!(out, "vector {} {}", name, v.len());
    let line: Vec<String> = v.iter().map(|&x| format_value(x)).collect();
    let _ = writeln!(out, "{}", line.join(","));
}

fn write_usizes(out: &mut String, name: &str, v: &[usize]) {
    let _ = writeln!(
        out,
        "{} {}",
        name,
        v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
    );
}

fn write_aanet(out: &mut String, net: &AAnetNetwork) {
    let (config, norm, encoder, decoder, _, trained) = net.parts();
    let _ = writeln!(out, "k {}", config.k);
    write_usizes(out, "encoder_hidden", &config.encoder_hidden);
    write_usizes(out, "decoder_hidden", &config.decoder_hidden);
    let _ = writeln!(out, "sigma {}", format_value(config.sigma));
    let _ = writeln!(out, "lambda_sum {}", format_value(config.lambda_sum));
    let _ = writeln!(out, "lambda_nonneg {}", format_value(config.lambda_nonneg));
    let _ = writeln!(out, "batch_size {}", config.batch_size);
    let _ = writeln!(out, "learning_rate {}", format_value(config.learning_rate));
    let _ = writeln!(out, "max_epochs {}", config.max_epochs);
    let _ = writeln!(out, "max_steps {}", config.max_steps);
    let _ = writeln!(
        out,
        "final_activation {}",
        match config.final_activation {
            FinalActivation::Tanh => "tanh",
            FinalActivation::Identity => "identity",
        }
    );
    let _ = writeln!(out, "seed {}", config.seed);
    let _ = writeln!(out, "trained {}", trained as u8);
    match norm {
        Normalization::MinMax { center, half_range } => {
            let _ = writeln!(out, "normalization minmax");
            write_vector(out, "center", center);
            write_vector(out, "half_range", half_range);
        }
        Normalization::ZScore { mean, std } => {
            let _ = writeln!(out, "normalization zscore");
            write_vector(out, "mean", mean);
            write_vector(out, "std", std);
        }
    }
    let _ = writeln!(out, "encoder_layers {}", encoder.len());
    for (i, layer) in encoder.iter().enumerate() {
        let _ = writeln!(out, "layer {} {}", layer.in_dim, layer.out_dim);
        let w = DataMatrix::new(layer.out_dim, layer.in_dim, layer.w.clone()).unwrap();
        write_matrix(out, &format!("enc_w{}", i), &w);
        write_vector(out, &format!("enc_b{}", i), &layer.b);
    }
    let _ = writeln!(out, "decoder_layers {}", decoder.len());
    for (i, layer) in decoder.iter().enumerate() {
        let _ = writeln!(out, "layer {} {}", layer.in_dim, layer.out_dim);
        let w = DataMatrix::new(layer.out_dim, layer.in_dim, layer.w.clone()).unwrap();
        write_matrix(out, &format!("dec_w{}", i), &w);
        write_vector(out, &format!("dec_b{}", i), &layer.b);
    }
}

fn write_pcha(out: &mut String, factors: &PCHAFactors, kernel: Option<Kernel>) {
    let _ = writeln!(out, "k {}", factors.k());
    match kernel {
        None => {}
        Some(Kernel::Linear) => {
            let _ = writeln!(out, "kernel linear");
        }
        Some(Kernel::Rbf { sigma }) => {
            let _ = writeln!(out, "kernel rbf {}", format_value(sigma));
        }
    }
    let final_loss = factors.loss_trace.last().copied().unwrap_or(f64::NAN);
    let _ = writeln!(out, "final_loss {}", format_value(final_loss));
    write_matrix(out, "archetypes", &factors.archetypes);
    write_matrix(out, "coeff_w", &factors.coeff_w);
    write_matrix(out, "mixtures", &factors.mixtures);
}

/// Serialize a model to its text form, checksum included.
pub fn model_to_string(model: &StoredModel) -> String {
    let mut body = String::new();
    let _ = writeln!(body, "method {}", model.method());
    match model {
        StoredModel::AAnet(net) => write_aanet(&mut body, net),
        StoredModel::Pcha { factors, kernel } => write_pcha(&mut body, factors, *kernel),
        StoredModel::PchaOnAe(p) => {
            let _ = writeln!(body, "section autoencoder");
            write_aanet(&mut body, &p.ae);
            let _ = writeln!(body, "section latent_factors");
            write_pcha(&mut body, &p.latent, None);
            let _ = writeln!(body, "section decoded_archetypes");
            write_matrix(&mut body, "archetypes", &p.archetypes);
        }
    }
    format!(
        "{} {}\nchecksum fnv1a64 {:016x}\n{}",
        MAGIC,
        SCHEMA_VERSION,
        fnv1a64(body.as_bytes()),
        body
    )
}

pub fn save_model(model: &StoredModel, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path.as_ref(), model_to_string(model))?;
    Ok(())
}

struct Cursor<'a> {
    lines: std::iter::Peekable<std::str::Lines<'a>>,
    line_no: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Cursor<'a> {
        Cursor { lines: text.lines().peekable(), line_no: 0 }
    }

    fn next_line(&mut self) -> Result<&'a str> {
        self.line_no += 1;
        self.lines
            .next()
            .ok_or_else(|| Error::ModelFile(format!("unexpected end of file at line {}", self.line_no)))
    }

    fn expect_key(&mut self, key: &str) -> Result<&'a str> {
        let line = self.next_line()?;
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' ').or(if rest.is_empty() { Some("") } else { None }))
            .ok_or_else(|| {
                Error::ModelFile(format!(
                    "line {}: expected key {:?}, found {:?}",
                    self.line_no, key, line
                ))
            })
    }

    fn parse<T: std::str::FromStr>(&self, s: &str, what: &str) -> Result<T> {
        s.trim()
            .parse()
            .map_err(|_| Error::ModelFile(format!("line {}: bad {}: {:?}", self.line_no, what, s)))
    }
}

fn read_float_row(cur: &mut Cursor, count: usize) -> Result<Vec<f64>> {
    let line = cur.next_line()?;
    let vals: Vec<f64> = line
        .split(',')
        .map(|s| cur.parse::<f64>(s, "number"))
        .collect::<Result<_>>()?;
    if vals.len() != count {
        return Err(Error::ModelFile(format!(
            "line {}: expected {} values, found {}",
            cur.line_no,
            count,
            vals.len()
        )));
    }
    Ok(vals)
}

fn read_matrix(cur: &mut Cursor) -> Result<(String, DataMatrix)> {
    let header = cur.expect_key("matrix")?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(Error::ModelFile(format!("line {}: bad matrix header", cur.line_no)));
    }
    let name = parts[0].to_string();
    let rows: usize = cur.parse(parts[1], "row count")?;
    let cols: usize = cur.parse(parts[2], "column count")?;
    let mut values = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        values.extend(read_float_row(cur, cols)?);
    }
    Ok((name, DataMatrix::new(rows, cols, values)?))
}

fn read_vector(cur: &mut Cursor) -> Result<(String, Vec<f64>)> {
    let header = cur.expect_key("vector")?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 2 {
        return Err(Error::ModelFile(format!("line {}: bad vector header", cur.line_no)));
    }
    let len: usize = cur.parse(parts[1], "length")?;
    Ok((parts[0].to_string(), read_float_row(cur, len)?))
}

fn read_usizes(cur: &mut Cursor, key: &str) -> Result<Vec<usize>> {
    let raw = cur.expect_key(key)?;
    if raw.trim().is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',').map(|s| cur.parse(s, "integer list")).collect()
}

fn read_aanet(cur: &mut Cursor) -> Result<AAnetNetwork> {
    let k: usize = {
        let v = cur.expect_key("k")?;
        cur.parse(v, "k")?
    };
    let encoder_hidden = read_usizes(cur, "encoder_hidden")?;
    let decoder_hidden = read_usizes(cur, "decoder_hidden")?;
    let sigma: f64 = {
        let v = cur.expect_key("sigma")?;
        cur.parse(v, "sigma")?
    };
    let lambda_sum: f64 = {
        let v = cur.expect_key("lambda_sum")?;
        cur.parse(v, "lambda_sum")?
    };
    let lambda_nonneg: f64 = {
        let v = cur.expect_key("lambda_nonneg")?;
        cur.parse(v, "lambda_nonneg")?
    };
    let batch_size: usize = {
        let v = cur.expect_key("batch_size")?;
        cur.parse(v, "batch_size")?
    };
    let learning_rate: f64 = {
        let v = cur.expect_key("learning_rate")?;
        cur.parse(v, "learning_rate")?
    };
    let max_epochs: usize = {
        let v = cur.expect_key("max_epochs")?;
        cur.parse(v, "max_epochs")?
    };
    let max_steps: usize = {
        let v = cur.expect_key("max_steps")?;
        cur.parse(v, "max_steps")?
    };
    let final_activation = match cur.expect_key("final_activation")? {
        "tanh" => FinalActivation::Tanh,
        "identity" => FinalActivation::Identity,
        other => {
            return Err(Error::ModelFile(format!("unknown final activation {:?}", other)));
        }
    };
    let seed: u64 = {
        let v = cur.expect_key("seed")?;
        cur.parse(v, "seed")?
    };
    let trained = {
        let v = cur.expect_key("trained")?;
        cur.parse::<u8>(v, "trained flag")? != 0
    };
    let norm = match cur.expect_key("normalization")? {
        "minmax" => {
            let (_, center) = read_vector(cur)?;
            let (_, half_range) = read_vector(cur)?;
            Normalization::MinMax { center, half_range }
        }
        "zscore" => {
            let (_, mean) = read_vector(cur)?;
            let (_, std) = read_vector(cur)?;
            Normalization::ZScore { mean, std }
        }
        other => return Err(Error::ModelFile(format!("unknown normalization {:?}", other))),
    };

    let config = AAnetConfig {
        k,
        encoder_hidden,
        decoder_hidden,
        sigma,
        lambda_sum,
        lambda_nonneg,
        batch_size,
        learning_rate,
        max_epochs,
        max_steps,
        final_activation,
        seed,
    };

    // Rebuild the architecture, then overwrite every parameter with the
    // stored values; this keeps layer/activation wiring in one place.
    let feature_count = norm.feature_count();
    let mut net = AAnetNetwork::initialized(feature_count, &config)?;

    let enc_count: usize = {
        let v = cur.expect_key("encoder_layers")?;
        cur.parse(v, "encoder layer count")?
    };
    let mut params: Vec<f64> = Vec::new();
    let read_layers = |cur: &mut Cursor, count: usize, params: &mut Vec<f64>| -> Result<()> {
        for _ in 0..count {
            let dims = cur.expect_key("layer")?;
            let parts: Vec<&str> = dims.split_whitespace().collect();
            if parts.len() != 2 {
                return Err(Error::ModelFile(format!("line {}: bad layer dims", cur.line_no)));
            }
            let (_, w) = read_matrix(cur)?;
            let (_, b) = read_vector(cur)?;
            params.extend_from_slice(w.values());
            params.extend_from_slice(&b);
        }
        Ok(())
    };
    read_layers(cur, enc_count, &mut params)?;
    let dec_count: usize = {
        let v = cur.expect_key("decoder_layers")?;
        cur.parse(v, "decoder layer count")?
    };
    read_layers(cur, dec_count, &mut params)?;

    let (enc_dims, dec_dims) = net.layer_dims();
    if enc_dims.len() != enc_count || dec_dims.len() != dec_count {
        return Err(Error::ModelFile("layer count does not match config".into()));
    }
    if params.len() != net.param_count() {
        return Err(Error::ModelFile(format!(
            "parameter payload has {} values, architecture needs {}",
            params.len(),
            net.param_count()
        )));
    }
    for (i, &v) in params.iter().enumerate() {
        net.set_param(i, v);
    }

    let (cfg, _, enc, dec, _, _) = net.parts();
    let net = AAnetNetwork::from_parts(
        cfg.clone(),
        norm,
        enc.to_vec(),
        dec.to_vec(),
        Vec::new(),
        trained,
    );
    Ok(net)
}

fn read_pcha(cur: &mut Cursor, with_kernel: bool) -> Result<(PCHAFactors, Option<Kernel>)> {
    let _k: usize = {
        let v = cur.expect_key("k")?;
        cur.parse(v, "k")?
    };
    let kernel = if with_kernel {
        let raw = cur.expect_key("kernel")?;
        let parts: Vec<&str> = raw.split_whitespace().collect();
        match parts.as_slice() {
            ["linear"] => Some(Kernel::Linear),
            ["rbf", sigma] => Some(Kernel::Rbf { sigma: cur.parse(sigma, "rbf sigma")? }),
            _ => return Err(Error::ModelFile(format!("bad kernel spec {:?}", raw))),
        }
    } else {
        None
    };
    let final_loss: f64 = {
        let v = cur.expect_key("final_loss")?;
        cur.parse(v, "final loss")?
    };
    let (_, archetypes) = read_matrix(cur)?;
    let (_, coeff_w) = read_matrix(cur)?;
    let (_, mixtures) = read_matrix(cur)?;
    Ok((
        PCHAFactors { coeff_w, mixtures, archetypes, loss_trace: vec![final_loss] },
        kernel,
    ))
}

/// Parse a model from its text form, verifying schema version and checksum.
pub fn model_from_string(text: &str) -> Result<StoredModel> {
    let mut cur = Cursor::new(text);
    let header = cur.next_line()?;
    let rest = header
        .strip_prefix(MAGIC)
        .and_then(|r| r.strip_prefix(' '))
        .ok_or_else(|| Error::ModelFile("not a model file (bad magic)".into()))?;
    let version: u32 = cur.parse(rest, "schema version")?;
    if version != SCHEMA_VERSION {
        return Err(Error::ModelFile(format!(
            "unsupported schema version {} (expected {})",
            version, SCHEMA_VERSION
        )));
    }
    let checksum_line = cur.expect_key("checksum")?;
    let parts: Vec<&str> = checksum_line.split_whitespace().collect();
    let stored = match parts.as_slice() {
        ["fnv1a64", hex] => u64::from_str_radix(hex, 16)
            .map_err(|_| Error::ModelFile("bad checksum value".into()))?,
        _ => return Err(Error::ModelFile("bad checksum line".into())),
    };
    // Everything after the checksum line.
    let body_start = text
        .find('\n')
        .and_then(|first| text[first + 1..].find('\n').map(|second| first + 1 + second + 1))
        .ok_or_else(|| Error::ModelFile("truncated model file".into()))?;
    let body = &text[body_start..];
    let actual = fnv1a64(body.as_bytes());
    if actual != stored {
        return Err(Error::ModelFile(format!(
            "checksum mismatch: stored {:016x}, computed {:016x}",
            stored, actual
        )));
    }

    match cur.expect_key("method")? {
        "aanet" => Ok(StoredModel::AAnet(read_aanet(&mut cur)?)),
        "pcha" => {
            let (factors, _) = read_pcha(&mut cur, false)?;
            Ok(StoredModel::Pcha { factors, kernel: None })
        }
        "kernel-pcha" => {
            let (factors, kernel) = read_pcha(&mut cur, true)?;
            Ok(StoredModel::Pcha { factors, kernel })
        }
        "pcha-ae" => {
            cur.expect_key("section")?;
            let ae = read_aanet(&mut cur)?;
            cur.expect_key("section")?;
            let (latent, _) = read_pcha(&mut cur, false)?;
            cur.expect_key("section")?;
            let (_, archetypes) = read_matrix(&mut cur)?;
            Ok(StoredModel::PchaOnAe(PchaOnAe { ae, latent, archetypes }))
        }
        other => Err(Error::ModelFile(format!("unknown method {:?}", other))),
    }
}

pub fn load_model(path: impl AsRef<Path>) -> Result<StoredModel> {
    let text = fs::read_to_string(path.as_ref())?;
    model_from_string(&text)
}
