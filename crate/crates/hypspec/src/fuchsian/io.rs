//! Spectrum CSV export and import.
//!
//! Leading `#` lines carry metadata as `# key=value`. Floats are written with
//! the shortest representation that parses back to the same bits.

use std::io::{BufRead, BufReader, Read, Write};

use super::{Certificate, GeodesicRecord, LengthSpectrum};
use crate::error::{Error, Result};
use crate::words::{canonical_class, ConjugacyClass, GroupPreset, Word};

pub const SPECTRUM_FORMAT: &str = "hypspec-spectrum/1";

pub fn write_spectrum_csv<W: Write>(spec: &LengthSpectrum, mut w: W) -> Result<()> {
    let c = &spec.certificate;
    writeln!(w, "# format={SPECTRUM_FORMAT}")?;
    writeln!(w, "# preset={}", spec.preset_name)?;
    writeln!(w, "# Lmax={}", spec.lmax)?;
    writeln!(w, "# oriented={}", spec.oriented)?;
    writeln!(w, "# certificate.method={}", c.method)?;
    writeln!(w, "# certificate.radius={}", c.radius)?;
    writeln!(w, "# certificate.max_word_len={}", c.max_word_len)?;
    writeln!(w, "# certificate.c1={}", c.c1)?;
    writeln!(w, "# certificate.c2={}", c.c2)?;
    writeln!(w, "# certificate.nodes_visited={}", c.nodes_visited)?;
    let ngens = spec.preset.ngens;
    let mut wr = csv::Writer::from_writer(w);
    let mut header: Vec<String> =
        ["classId", "word", "partner", "ell", "ell_sharp", "k", "log_detIminusP"].iter().map(|s| s.to_string()).collect();
    header.extend((1..=ngens).map(|i| format!("h{i}")));
    wr.write_record(&header)?;
    for r in &spec.records {
        let mut row = vec![
            r.class_id.clone(),
            join_word(&r.word.canonical),
            join_word(&r.word.partner),
            r.ell.to_string(),
            r.ell_sharp.to_string(),
            r.k.to_string(),
            r.log_det_iminus_p.to_string(),
        ];
        row.extend(r.homology.iter().map(|h| h.to_string()));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

fn join_word(w: &Word) -> String {
    w.0.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn parse_word(s: Option<&str>) -> Result<Word> {
    s.ok_or_else(|| bad("short row"))?
        .split_whitespace()
        .map(|x| x.parse::<i8>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map(Word)
        .map_err(|_| bad("bad word"))
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Io(msg.into())
}

pub fn read_spectrum_csv<R: Read>(r: R) -> Result<LengthSpectrum> {
    let mut reader = BufReader::new(r);
    let mut meta = std::collections::BTreeMap::new();
    let mut body = String::new();
    let mut line = String::new();
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.trim().split_once('=') {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
        } else {
            body.push_str(&line);
            reader.read_to_string(&mut body)?;
            break;
        }
    }
    let get = |k: &str| meta.get(k).cloned().ok_or_else(|| bad(format!("missing metadata '{k}'")));
    let num = |k: &str| -> Result<f64> { get(k)?.parse().map_err(|_| bad(format!("bad number for '{k}'"))) };
    if get("format")? != SPECTRUM_FORMAT {
        return Err(bad("unsupported spectrum format"));
    }
    let preset_name = get("preset")?;
    let preset: GroupPreset = super::FuchsianGroup::preset(&preset_name)?.preset;
    let certificate = Certificate {
        method: get("certificate.method")?,
        radius: num("certificate.radius")?,
        max_word_len: num("certificate.max_word_len")? as usize,
        c1: num("certificate.c1")?,
        c2: num("certificate.c2")?,
        nodes_visited: num("certificate.nodes_visited")? as u64,
    };
    let mut rd = csv::Reader::from_reader(body.as_bytes());
    let mut records = Vec::new();
    for row in rd.records() {
        let row = row?;
        let f = |i: usize| -> Result<f64> {
            row.get(i).ok_or_else(|| bad("short row"))?.parse().map_err(|_| bad(format!("bad float in column {i}")))
        };
        let word = ConjugacyClass { canonical: parse_word(row.get(1))?, partner: parse_word(row.get(2))? };
        if word.canonical != canonical_class(&word.canonical, &preset)?.canonical {
            return Err(bad(format!("word of {} is not canonical", row.get(0).unwrap_or_default())));
        }
        let ell = f(3)?;
        let log_det = f(6)?;
        let homology = (0..preset.ngens)
            .map(|i| row.get(7 + i).ok_or_else(|| bad("short row"))?.parse::<i64>().map_err(|_| bad("bad homology")))
            .collect::<Result<Vec<_>>>()?;
        records.push(GeodesicRecord {
            class_id: row.get(0).unwrap_or_default().to_string(),
            word,
            ell,
            ell_sharp: f(4)?,
            k: row.get(5).unwrap_or_default().parse().map_err(|_| bad("bad k"))?,
            det_iminus_p: super::poincare_det(ell),
            log_det_iminus_p: log_det,
            homology,
        });
    }
    Ok(LengthSpectrum {
        preset_name,
        preset,
        records,
        lmax: num("Lmax")?,
        oriented: get("oriented")? == "true",
        certificate,
        collisions: Vec::new(),
    })
}
