//! FCIDUMP integral files.
//!
//! Besides the standard `&FCI … &END` namelist and `value i j k l` records, a
//! comment line `# ORBENERGIES = e1 e2 …` carries the spatial orbital energies.

use std::fmt::Write as _;
use std::path::Path;

use log::warn;

use crate::error::{Error, Result};

/// Tolerance for the symmetry checks on parsed integrals.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Integrals over `n_orbitals` spatial orbitals, two-electron part in chemists' notation.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegralData {
    pub n_orbitals: usize,
    pub n_electrons: usize,
    pub ms2: i64,
    pub orbsym: Vec<i64>,
    pub isym: i64,
    /// Row-major `M×M`.
    pub h_core: Vec<f64>,
    /// `(pq|rs)` at `((p·M + q)·M + r)·M + s`.
    pub eri: Vec<f64>,
    /// Scalar energy: core shift plus nuclear repulsion.
    pub core_energy: f64,
    pub orbital_energies: Option<Vec<f64>>,
}

impl IntegralData {
    pub fn new(n_orbitals: usize, n_electrons: usize) -> Self {
        IntegralData {
            n_orbitals,
            n_electrons,
            ms2: 0,
            orbsym: vec![1; n_orbitals],
            isym: 1,
            h_core: vec![0.0; n_orbitals * n_orbitals],
            eri: vec![0.0; n_orbitals.pow(4)],
            core_energy: 0.0,
            orbital_energies: None,
        }
    }

    pub fn h(&self, p: usize, q: usize) -> f64 {
        self.h_core[p * self.n_orbitals + q]
    }

    pub fn g(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        let m = self.n_orbitals;
        self.eri[((p * m + q) * m + r) * m + s]
    }

    pub fn set_h(&mut self, p: usize, q: usize, value: f64) {
        let m = self.n_orbitals;
        self.h_core[p * m + q] = value;
        self.h_core[q * m + p] = value;
    }

    /// Stores `value` on all eight symmetry-equivalent index orders.
    pub fn set_g(&mut self, p: usize, q: usize, r: usize, s: usize, value: f64) {
        let m = self.n_orbitals;
        for (a, b, c, d) in [
            (p, q, r, s),
            (q, p, r, s),
            (p, q, s, r),
            (q, p, s, r),
            (r, s, p, q),
            (s, r, p, q),
            (r, s, q, p),
            (s, r, q, p),
        ] {
            self.eri[((a * m + b) * m + c) * m + d] = value;
        }
    }

    /// Largest violation of the one- and two-electron permutation symmetries.
    pub fn symmetry_defect(&self) -> f64 {
        let m = self.n_orbitals;
        let mut worst: f64 = 0.0;
        for p in 0..m {
            for q in 0..m {
                worst = worst.max((self.h(p, q) - self.h(q, p)).abs());
                for r in 0..m {
                    for s in 0..m {
                        let v = self.g(p, q, r, s);
                        worst = worst
                            .max((v - self.g(q, p, r, s)).abs())
                            .max((v - self.g(p, q, s, r)).abs())
                            .max((v - self.g(r, s, p, q)).abs());
                    }
                }
            }
        }
        worst
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.n_orbitals;
        if m == 0 {
            return Err(Error::Contract("no orbitals".into()));
        }
        if self.n_electrons > 2 * m {
            return Err(Error::Contract(format!(
                "{} electrons do not fit in {m} spatial orbitals",
                self.n_electrons
            )));
        }
        if self.h_core.len() != m * m || self.eri.len() != m.pow(4) {
            return Err(Error::Dimension("integral arrays do not match NORB".into()));
        }
        if let Some(e) = &self.orbital_energies {
            if e.len() != m {
                return Err(Error::Dimension(format!(
                    "{} orbital energies for {m} orbitals",
                    e.len()
                )));
            }
        }
        let defect = self.symmetry_defect();
        if defect > SYMMETRY_TOL {
            return Err(Error::Contract(format!("integral symmetry broken by {defect:e}")));
        }
        Ok(())
    }
}

fn parse_float(tok: &str, line: usize) -> Result<f64> {
    tok.replace(['D', 'd'], "e")
        .parse::<f64>()
        .map_err(|_| Error::parse(line, format!("bad number '{tok}'")))
}

fn parse_int(tok: &str, line: usize) -> Result<i64> {
    tok.trim()
        .parse::<i64>()
        .map_err(|_| Error::parse(line, format!("bad integer '{tok}'")))
}

/// Splits the namelist body into `KEY=v1,v2,…` assignments.
fn namelist_values(body: &str, line: usize) -> Result<Vec<(String, Vec<String>)>> {
    let mut out: Vec<(String, Vec<String>)> = Vec::new();
    for tok in body.split(',') {
        let tok = tok.trim();
        if tok.is_empty() {
            continue;
        }
        if let Some((k, v)) = tok.split_once('=') {
            out.push((k.trim().to_ascii_uppercase(), vec![v.trim().to_string()]));
        } else if let Some(last) = out.last_mut() {
            last.1.push(tok.to_string());
        } else {
            return Err(Error::parse(line, format!("value '{tok}' before any key")));
        }
    }
    Ok(out)
}

pub fn parse_fcidump(text: &str) -> Result<IntegralData> {
    let mut orbital_energies = None;
    let mut header = String::new();
    let mut in_header = false;
    let mut header_done = false;
    let mut header_line = 0;
    let mut body_start = None;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(values) = rest.strip_prefix("ORBENERGIES") {
                let values = values.trim_start().strip_prefix('=').ok_or_else(|| {
                    Error::parse(lineno, "ORBENERGIES line lacks '='")
                })?;
                let parsed: Vec<f64> = values
                    .split_whitespace()
                    .map(|t| parse_float(t, lineno))
                    .collect::<Result<_>>()?;
                orbital_energies = Some(parsed);
            }
            continue;
        }
        if line.is_empty() && !in_header {
            continue;
        }
        if !in_header && !header_done {
            let upper = line.to_ascii_uppercase();
            let Some(pos) = upper.find("&FCI") else {
                return Err(Error::parse(lineno, "expected '&FCI' header"));
            };
            in_header = true;
            header_line = lineno;
            header.push_str(&line[pos + 4..]);
            header.push(',');
        } else if in_header {
            header.push_str(line);
            header.push(',');
        } else {
            body_start = Some(idx);
            break;
        }
        let upper = header.to_ascii_uppercase();
        if let Some(end) = upper.find("&END").or_else(|| upper.find('/')) {
            header.truncate(end);
            in_header = false;
            header_done = true;
        }
    }
    if !header_done {
        return Err(Error::parse(header_line.max(1), "unterminated &FCI header"));
    }

    let mut norb = None;
    let mut nelec = None;
    let mut ms2 = 0;
    let mut isym = 1;
    let mut orbsym = Vec::new();
    for (key, values) in namelist_values(&header, header_line)? {
        let first = || values[0].as_str();
        match key.as_str() {
            "NORB" => norb = Some(parse_int(first(), header_line)?),
            "NELEC" => nelec = Some(parse_int(first(), header_line)?),
            "MS2" => ms2 = parse_int(first(), header_line)?,
            "ISYM" => isym = parse_int(first(), header_line)?,
            "ORBSYM" => {
                orbsym = values
                    .iter()
                    .map(|v| parse_int(v, header_line))
                    .collect::<Result<_>>()?
            }
            _ => {}
        }
    }
    let norb = norb.ok_or_else(|| Error::parse(header_line, "NORB missing"))?;
    let nelec = nelec.ok_or_else(|| Error::parse(header_line, "NELEC missing"))?;
    if norb <= 0 || nelec < 0 {
        return Err(Error::parse(header_line, "NORB/NELEC out of range"));
    }
    let m = norb as usize;
    let mut data = IntegralData::new(m, nelec as usize);
    data.ms2 = ms2;
    data.isym = isym;
    if !orbsym.is_empty() {
        if orbsym.len() != m {
            return Err(Error::parse(header_line, "ORBSYM length differs from NORB"));
        }
        data.orbsym = orbsym;
    }
    data.orbital_energies = orbital_energies;

    let mut saw_constant = false;
    for (idx, raw) in text.lines().enumerate().skip(body_start.unwrap_or(usize::MAX)) {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 5 {
            return Err(Error::parse(lineno, "expected 'value i j k l'"));
        }
        let value = parse_float(toks[0], lineno)?;
        let mut ix = [0usize; 4];
        for (slot, tok) in ix.iter_mut().zip(&toks[1..]) {
            let v = parse_int(tok, lineno)?;
            if v < 0 || v > norb {
                return Err(Error::parse(lineno, format!("index {v} outside 0..={norb}")));
            }
            *slot = v as usize;
        }
        match ix {
            [0, 0, 0, 0] => {
                data.core_energy = value;
                saw_constant = true;
            }
            [i, 0, 0, 0] => {
                // orbital energy record of the standard format
                let e = data.orbital_energies.get_or_insert_with(|| vec![0.0; m]);
                e[i - 1] = value;
            }
            [i, j, 0, 0] if i > 0 && j > 0 => data.set_h(i - 1, j - 1, value),
            [i, j, k, l] if i > 0 && j > 0 && k > 0 && l > 0 => {
                data.set_g(i - 1, j - 1, k - 1, l - 1, value)
            }
            _ => return Err(Error::parse(lineno, "unsupported index pattern")),
        }
    }
    if !saw_constant {
        warn!("FCIDUMP has no scalar record; core energy taken as 0");
    }
    data.validate()?;
    Ok(data)
}

pub fn read_fcidump(path: impl AsRef<Path>) -> Result<IntegralData> {
    parse_fcidump(&std::fs::read_to_string(path)?)
}

/// Writes unique integrals (`i≥j`, `k≥l`, `ij≥kl`) above `1e-15`.
pub fn emit_fcidump(data: &IntegralData) -> String {
    let m = data.n_orbitals;
    let mut out = String::new();
    if let Some(e) = &data.orbital_energies {
        let vals: Vec<String> = e.iter().map(|v| format!("{v:.17e}")).collect();
        let _ = writeln!(out, "# ORBENERGIES = {}", vals.join(" "));
    }
    let sym: Vec<String> = data.orbsym.iter().map(|s| s.to_string()).collect();
    let _ = writeln!(
        out,
        " &FCI NORB={m},NELEC={},MS2={},\n  ORBSYM={},\n  ISYM={},\n &END",
        data.n_electrons,
        data.ms2,
        sym.join(","),
        data.isym
    );
    let pair = |a: usize, b: usize| a * (a + 1) / 2 + b;
    for i in 0..m {
        for j in 0..=i {
            for k in 0..m {
                for l in 0..=k {
                    if pair(i, j) < pair(k, l) {
                        continue;
                    }
                    let v = data.g(i, j, k, l);
                    if v.abs() > 1e-15 {
                        let _ = writeln!(out, "{v:.17e} {} {} {} {}", i + 1, j + 1, k + 1, l + 1);
                    }
                }
            }
        }
    }
    for i in 0..m {
        for j in 0..=i {
            let v = data.h(i, j);
            if v.abs() > 1e-15 {
                let _ = writeln!(out, "{v:.17e} {} {} 0 0", i + 1, j + 1);
            }
        }
    }
    let _ = writeln!(out, "{:.17e} 0 0 0 0", data.core_energy);
    out
}
