use std::path::Path;

use num_complex::Complex64;
use tev_core::cmath::parse_complex;
use tev_core::profiles::RefractiveProfile;

use crate::CliError;

pub fn load_profile(path: &Path) -> Result<RefractiveProfile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read profile {}: {e}", path.display())))?;
    RefractiveProfile::from_json(&text)
        .map_err(|e| CliError::Input(format!("invalid profile {}: {e}", path.display())))
}

pub fn parse_wavenumbers(items: &[String]) -> Result<Vec<Complex64>, CliError> {
    items
        .iter()
        .map(|s| parse_complex(s).ok_or_else(|| CliError::Usage(format!("cannot parse wavenumber '{s}'"))))
        .collect()
}

pub fn parse_vector(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("cannot parse '{x}' in '{s}'")))
        })
        .collect()
}

/// Positive real eigenvalues from an eigenvalue CSV (`k_re` column, rows with `k_im = 0`)
/// or from a bare list with one value per line.
pub fn load_eigenvalues(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read eigenvalues {}: {e}", path.display())))?;
    let bad = |e: csv::Error| CliError::Input(format!("malformed eigenvalue file {}: {e}", path.display()));
    let first_data = text.lines().map(str::trim).find(|l| !l.is_empty() && !l.starts_with('#'));
    let has_header = first_data.is_some_and(|l| l.parse::<f64>().is_err() && l.contains(|c: char| c.is_alphabetic()));
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let (re_col, im_col) = if has_header {
        let headers = reader.headers().map_err(bad)?.clone();
        let find = |name: &str| headers.iter().position(|h| h == name);
        (find("k_re").unwrap_or(0), find("k_im"))
    } else {
        (0, None)
    };
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(bad)?;
        let field = |i: usize| -> Result<f64, CliError> {
            record
                .get(i)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| CliError::Input(format!("non-numeric field in {}", path.display())))
        };
        let re = field(re_col)?;
        let on_axis = match im_col {
            Some(i) => field(i)?.abs() <= 1e-12 * re.abs().max(1.0),
            None => true,
        };
        if on_axis && re > 0.0 {
            out.push(re);
        }
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vectors_and_wavenumbers() {
        assert_eq!(parse_vector("1, -2.5,3e2").unwrap(), vec![1.0, -2.5, 300.0]);
        assert!(parse_vector("1,x").is_err());
        let ks = parse_wavenumbers(&["1.5".into(), "2-3i".into()]).unwrap();
        assert_eq!(ks[1], Complex64::new(2.0, -3.0));
        assert!(parse_wavenumbers(&["oops".into()]).is_err());
    }

    #[test]
    fn eigenvalue_files() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("e.csv");
        std::fs::write(
            &csv_path,
            "# profile = x\nindex,k_re,k_im,multiplicity,residual\n0,2.5,0,1,0\n1,1.5,0,1,0\n2,3.0,0.5,1,0\n",
        )
        .unwrap();
        assert_eq!(load_eigenvalues(&csv_path).unwrap(), vec![1.5, 2.5]);
        let list = dir.path().join("l.txt");
        std::fs::write(&list, "3.0\n1.0\n").unwrap();
        assert_eq!(load_eigenvalues(&list).unwrap(), vec![1.0, 3.0]);
    }
}
