//! Ledger CSV serialization. Columns are exactly, in order:
//! `t, E_kin, E_grad, E_log, E_total, D_visc, D_relax, cum_dissipation,
//! budget_residual, b_min_obs, b_max_obs, div_v_max, newton_iters`.
//! Floats are written with 17 significant digits so values round-trip.

use crate::diagnostics::EnergyLedger;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "t,E_kin,E_grad,E_log,E_total,D_visc,D_relax,cum_dissipation,\
budget_residual,b_min_obs,b_max_obs,div_v_max,newton_iters";

fn fmt(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

pub fn to_csv(rows: &[EnergyLedger]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            fmt(r.time),
            fmt(r.e_kin),
            fmt(r.e_grad),
            fmt(r.e_log),
            fmt(r.e_total),
            fmt(r.d_visc),
            fmt(r.d_relax),
            fmt(r.cum_dissipation),
            fmt(r.budget_residual),
            fmt(r.b_min_obs),
            fmt(r.b_max_obs),
            fmt(r.div_v_max),
            r.newton_iters,
        ));
    }
    out
}

pub fn from_csv(text: &str) -> Result<Vec<EnergyLedger>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Ledger("empty ledger".into()))?;
    if header.trim() != CSV_HEADER {
        return Err(Error::Ledger(format!("unexpected header '{header}'")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 13 {
            return Err(Error::Ledger(format!(
                "row {}: expected 13 columns, got {}",
                i + 2,
                cells.len()
            )));
        }
        let f = |j: usize| -> Result<f64> {
            cells[j]
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Ledger(format!("row {}: bad float '{}'", i + 2, cells[j])))
        };
        let e_log = f(3)?;
        rows.push(EnergyLedger {
            time: f(0)?,
            e_kin: f(1)?,
            e_grad: f(2)?,
            e_log,
            e_total: f(4)?,
            d_visc: f(5)?,
            d_relax: f(6)?,
            cum_dissipation: f(7)?,
            budget_residual: f(8)?,
            b_min_obs: f(9)?,
            b_max_obs: f(10)?,
            div_v_max: f(11)?,
            newton_iters: cells[12]
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::Ledger(format!("row {}: bad iteration count", i + 2)))?,
            fault: !e_log.is_finite(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: f64) -> EnergyLedger {
        EnergyLedger {
            time: t,
            e_kin: 0.1 + t,
            e_grad: 0.2,
            e_log: 19.739208802178716,
            e_total: 20.039208802178716 + t,
            d_visc: 0.3,
            d_relax: 1.0 / 3.0,
            cum_dissipation: t * 0.5,
            budget_residual: -1.234567890123456e-12,
            b_min_obs: 0.9,
            b_max_obs: 1.1,
            div_v_max: 1e-15,
            newton_iters: 3,
            fault: false,
        }
    }

    #[test]
    fn csv_round_trips_exactly() {
        let rows = vec![row(0.0), row(0.001), row(0.002)];
        let text = to_csv(&rows);
        let back = from_csv(&text).unwrap();
        assert_eq!(back.len(), 3);
        for (a, b) in rows.iter().zip(back.iter()) {
            assert_eq!(a.time, b.time);
            assert_eq!(a.d_relax, b.d_relax);
            assert_eq!(a.budget_residual, b.budget_residual);
            assert_eq!(a.newton_iters, b.newton_iters);
        }
        // byte determinism
        assert_eq!(text, to_csv(&rows));
    }

    #[test]
    fn infinities_mark_faults() {
        let mut r = row(0.0);
        r.e_log = f64::INFINITY;
        r.fault = true;
        let back = from_csv(&to_csv(&[r])).unwrap();
        assert!(back[0].fault);
        assert!(back[0].e_log.is_infinite());
    }

    #[test]
    fn header_is_enforced() {
        assert!(from_csv("a,b,c\n1,2,3\n").is_err());
    }
}
