use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::molgraph::{atomic_number, element_symbol, Molecule};

/// Number of property scalars following the `gdb <id>` tag.
pub const QM9_N_SCALARS: usize = 15;

/// Parser settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct XyzOptions {
    /// 1-indexed position of the dipole norm among the property scalars.
    pub dipole_column: usize,
}

impl Default for XyzOptions {
    fn default() -> Self {
        XyzOptions { dipole_column: 4 }
    }
}

/// A parsed QM9 record: the molecule plus the raw property row.
#[derive(Clone, Debug, PartialEq)]
pub struct Qm9Record {
    pub molecule: Molecule,
    /// Numeric index from the `gdb <id>` tag, when present.
    pub index: Option<u64>,
    /// All property scalars of the comment line (empty for plain XYZ).
    pub scalars: Vec<f64>,
    /// Mulliken charges, when the atom lines carry them.
    pub charges: Option<Vec<f64>>,
}

/// Rewrites the `*^` exponent marker found in some QM9 files to `e`.
pub fn normalize_number(field: &str) -> String {
    field.replace("*^", "e")
}

fn number(field: &str, line: usize, what: &str) -> Result<f64> {
    normalize_number(field)
        .parse::<f64>()
        .map_err(|_| Error::Parse {
            line,
            msg: format!("{what}: cannot parse {field:?} as a number"),
        })
}

/// Parses one record with default options.
pub fn parse_qm9_xyz(text: &str) -> Result<Molecule> {
    Ok(parse_qm9_record(text, XyzOptions::default())?.molecule)
}

/// Parses the QM9 XYZ variant. A comment line that does not start with `gdb`
/// is treated as plain XYZ: no label, no property row.
pub fn parse_qm9_record(text: &str, opts: XyzOptions) -> Result<Qm9Record> {
    if opts.dipole_column == 0 || opts.dipole_column > QM9_N_SCALARS {
        return Err(Error::Config(format!(
            "dipole column must be in 1..={QM9_N_SCALARS}, got {}",
            opts.dipole_column
        )));
    }
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, first) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty input".into(),
    })?;
    let n_atoms: usize = first.trim().parse().map_err(|_| Error::Parse {
        line: 1,
        msg: format!("expected an atom count, found {:?}", first.trim()),
    })?;
    if n_atoms == 0 {
        return Err(Error::Parse {
            line: 1,
            msg: "atom count is zero".into(),
        });
    }
    let (_, comment) = lines.next().ok_or(Error::Parse {
        line: 2,
        msg: "missing comment line".into(),
    })?;

    let fields: Vec<&str> = comment.split_whitespace().collect();
    let (index, scalars, label) = if fields.first() == Some(&"gdb") {
        let index = fields
            .get(1)
            .and_then(|s| s.parse::<u64>().ok())
            .ok_or(Error::Parse {
                line: 2,
                msg: "expected `gdb <id>`".into(),
            })?;
        let scalars = fields[2..]
            .iter()
            .map(|f| number(f, 2, "property"))
            .collect::<Result<Vec<_>>>()?;
        if scalars.len() != QM9_N_SCALARS {
            return Err(Error::Parse {
                line: 2,
                msg: format!("expected {QM9_N_SCALARS} properties, found {}", scalars.len()),
            });
        }
        let mu = scalars[opts.dipole_column - 1];
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::Parse {
                line: 2,
                msg: format!("dipole label {mu} is not a finite non-negative number"),
            });
        }
        (Some(index), scalars, Some(mu))
    } else {
        (None, Vec::new(), None)
    };

    let mut atomic_numbers = Vec::with_capacity(n_atoms);
    let mut positions = Vec::with_capacity(n_atoms);
    let mut charges = Vec::with_capacity(n_atoms);
    for k in 0..n_atoms {
        let (line, text) = lines.next().ok_or(Error::Parse {
            line: k + 3,
            msg: format!("atom count says {n_atoms}, found {k} atom lines"),
        })?;
        let f: Vec<&str> = text.split_whitespace().collect();
        if f.len() < 4 {
            return Err(Error::Parse {
                line,
                msg: format!("atom line needs a symbol and three coordinates, found {:?}", text.trim()),
            });
        }
        let z = atomic_number(f[0]).ok_or_else(|| Error::UnknownElement(f[0].to_string()))?;
        atomic_numbers.push(z);
        positions.push([
            number(f[1], line, "x")?,
            number(f[2], line, "y")?,
            number(f[3], line, "z")?,
        ]);
        if let Some(q) = f.get(4) {
            charges.push(number(q, line, "charge")?);
        }
    }
    let charges = (charges.len() == n_atoms).then_some(charges);

    let mut molecule = Molecule {
        atomic_numbers,
        positions,
        dipole_label: label,
        id: index.map(|i| format!("gdb_{i}")),
    };
    molecule.validate().map_err(|e| Error::Parse {
        line: 3,
        msg: e.to_string(),
    })?;
    if molecule.id.is_none() && !comment.trim().is_empty() {
        molecule.id = Some(comment.trim().to_string());
    }
    Ok(Qm9Record {
        molecule,
        index,
        scalars,
        charges,
    })
}

/// Plain XYZ text. Coordinates use the shortest exact decimal form, so parsing
/// the output reproduces the positions bit for bit.
pub fn write_xyz(mol: &Molecule) -> Result<String> {
    let mut out = String::new();
    writeln!(out, "{}", mol.n_atoms()).unwrap();
    writeln!(out, "{}", mol.id.as_deref().unwrap_or("")).unwrap();
    for (z, p) in mol.atomic_numbers.iter().zip(&mol.positions) {
        let sym = element_symbol(*z).ok_or(Error::UnknownSpecies(*z))?;
        writeln!(out, "{sym} {:?} {:?} {:?}", p[0], p[1], p[2]).unwrap();
    }
    Ok(out)
}
