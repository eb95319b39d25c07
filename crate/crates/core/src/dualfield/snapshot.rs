//! Columnar text dump of a [`FieldState`] for plotting.
//!
//! One header line followed by one tab-separated row per cell in row-major
//! order:
//!
//! ```text
//! cell_x  cell_y  s_phys  h_auction  phi_real  phi_dual  b_z
//! ```

use std::fmt::Write as _;

use super::{DualScalar, FieldError, FieldState, Grid, LatticeDomain};

pub const SNAPSHOT_HEADER: &str = "cell_x\tcell_y\ts_phys\th_auction\tphi_real\tphi_dual\tb_z";

pub fn write_snapshot(field: &FieldState) -> String {
    let (w, h) = field.s_phys.shape();
    let mut out = String::with_capacity(64 * w * h);
    out.push_str(SNAPSHOT_HEADER);
    out.push('\n');
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let phi = field.phi_eff[i];
            let _ = writeln!(
                out,
                "{x}\t{y}\t{}\t{}\t{}\t{}\t{}",
                field.s_phys[i], field.h_auction[i], phi.real, phi.dual, field.b_z[i]
            );
        }
    }
    out
}

pub fn read_snapshot(text: &str, domain: &LatticeDomain, epoch: u64) -> Result<FieldState, FieldError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == SNAPSHOT_HEADER => {}
        other => {
            return Err(FieldError::Snapshot(format!(
                "bad header: {:?}",
                other.unwrap_or("")
            )))
        }
    }
    let n = domain.len();
    let (mut s, mut heat, mut phi, mut b) = (
        vec![0.0; n],
        vec![0.0; n],
        vec![DualScalar::default(); n],
        vec![0.0; n],
    );
    let mut seen = vec![false; n];
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 7 {
            return Err(FieldError::Snapshot(format!("line {}: expected 7 columns", lineno + 2)));
        }
        let parse = |c: &str| -> Result<f64, FieldError> {
            c.parse::<f64>()
                .map_err(|e| FieldError::Snapshot(format!("line {}: {e}", lineno + 2)))
        };
        let x: usize = cols[0]
            .parse()
            .map_err(|e| FieldError::Snapshot(format!("line {}: {e}", lineno + 2)))?;
        let y: usize = cols[1]
            .parse()
            .map_err(|e| FieldError::Snapshot(format!("line {}: {e}", lineno + 2)))?;
        if x >= domain.width() || y >= domain.height() {
            return Err(FieldError::Snapshot(format!("line {}: cell out of range", lineno + 2)));
        }
        let i = domain.index(x, y);
        seen[i] = true;
        s[i] = parse(cols[2])?;
        heat[i] = parse(cols[3])?;
        phi[i] = DualScalar::new(parse(cols[4])?, parse(cols[5])?);
        b[i] = parse(cols[6])?;
    }
    if !seen.iter().all(|&v| v) {
        return Err(FieldError::Snapshot("missing cells".into()));
    }
    Ok(FieldState {
        s_phys: Grid::from_vec(domain, s)?,
        h_auction: Grid::from_vec(domain, heat)?,
        phi_eff: Grid::from_vec(domain, phi)?,
        b_z: Grid::from_vec(domain, b)?,
        epoch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dualfield::FieldWeights;

    #[test]
    fn snapshot_roundtrips_exactly() {
        let d = LatticeDomain::new(3, 2, false).unwrap();
        let s = Grid::from_fn(&d, |x, y| 0.1 * x as f64 + 1.0 / (1.0 + y as f64));
        let h = Grid::from_fn(&d, |x, y| (x * y) as f64 / 7.0);
        let prev = Grid::filled(&d, 0.3);
        let f = FieldState::assemble(s, h, Some((&prev, 1)), &FieldWeights::default(), 4).unwrap();
        let text = write_snapshot(&f);
        assert!(text.starts_with(SNAPSHOT_HEADER));
        assert_eq!(text.lines().count(), 7);
        let back = read_snapshot(&text, &d, 4).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn rejects_truncated_snapshot() {
        let d = LatticeDomain::new(2, 2, false).unwrap();
        let text = format!("{SNAPSHOT_HEADER}\n0\t0\t1\t1\t1\t0\t1\n");
        assert!(read_snapshot(&text, &d, 0).is_err());
        assert!(read_snapshot("nope\n", &d, 0).is_err());
    }
}
