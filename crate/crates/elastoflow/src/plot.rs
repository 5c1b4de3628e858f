//! Deterministic SVG line plots of a ledger: energy components, budget
//! residual, and the observed scalar range against its barrier lines.
//! Byte-identical output for identical input rows.

use crate::diagnostics::EnergyLedger;
use crate::error::{Error, Result};

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 520.0;
const MARGIN_L: f64 = 90.0;
const MARGIN_R: f64 = 30.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 60.0;

const PALETTE: [&str; 6] = ["#1b6ca8", "#c0392b", "#1e8449", "#8e44ad", "#ca6f1e", "#5d6d7e"];

struct Series<'a> {
    label: &'a str,
    values: Vec<f64>,
}

fn finite_bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn render(title: &str, times: &[f64], series: &[Series], fault_step: Option<usize>) -> String {
    let (t_lo, t_hi) = finite_bounds(times.iter().copied());
    let (v_lo, v_hi) = finite_bounds(series.iter().flat_map(|s| s.values.iter().copied()));
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let x_of = |t: f64| MARGIN_L + (t - t_lo) / (t_hi - t_lo) * plot_w;
    let y_of = |v: f64| MARGIN_T + (v_hi - v) / (v_hi - v_lo) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"24\" font-family=\"monospace\" font-size=\"16\">{title}</text>\n",
        MARGIN_L
    ));
    // frame
    svg.push_str(&format!(
        "<rect x=\"{MARGIN_L:.1}\" y=\"{MARGIN_T:.1}\" width=\"{plot_w:.1}\" height=\"{plot_h:.1}\" \
         fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n"
    ));
    // axis labels
    svg.push_str(&format!(
        "<text x=\"{MARGIN_L:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"12\">t = {t_lo:.6e}</text>\n",
        HEIGHT - 20.0
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"end\">t = {t_hi:.6e}</text>\n",
        WIDTH - MARGIN_R,
        HEIGHT - 20.0
    ));
    svg.push_str(&format!(
        "<text x=\"8\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"12\">{v_hi:.6e}</text>\n",
        MARGIN_T + 12.0
    ));
    svg.push_str(&format!(
        "<text x=\"8\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"12\">{v_lo:.6e}</text>\n",
        MARGIN_T + plot_h
    ));

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut points = String::new();
        for (t, v) in times.iter().zip(s.values.iter()) {
            if v.is_finite() {
                points.push_str(&format!("{:.4},{:.4} ", x_of(*t), y_of(*v)));
            }
        }
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            points.trim_end()
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"13\" fill=\"{color}\">{}</text>\n",
            MARGIN_L + 10.0 + 130.0 * i as f64,
            MARGIN_T + 16.0,
            s.label
        ));
    }

    if let Some(k) = fault_step {
        if k < times.len() {
            let x = x_of(times[k]);
            svg.push_str(&format!(
                "<line x1=\"{x:.4}\" y1=\"{MARGIN_T:.1}\" x2=\"{x:.4}\" y2=\"{:.1}\" \
                 stroke=\"#c0392b\" stroke-width=\"1.5\" stroke-dasharray=\"6,4\"/>\n",
                MARGIN_T + plot_h
            ));
            svg.push_str(&format!(
                "<text x=\"{x:.4}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"12\" \
                 fill=\"#c0392b\">fault at step {k}</text>\n",
                MARGIN_T + plot_h + 30.0
            ));
        }
    }

    svg.push_str("</svg>\n");
    svg
}

/// The three standard plots of a ledger, as (file name, SVG body) pairs.
pub fn emit_plots(rows: &[EnergyLedger]) -> Result<Vec<(String, String)>> {
    if rows.is_empty() {
        return Err(Error::Ledger("cannot plot an empty ledger".into()));
    }
    let times: Vec<f64> = rows.iter().map(|r| r.time).collect();
    let fault_step = rows.iter().position(|r| r.fault);

    let energies = render(
        "energy components",
        &times,
        &[
            Series { label: "E_kin", values: rows.iter().map(|r| r.e_kin).collect() },
            Series { label: "E_grad", values: rows.iter().map(|r| r.e_grad).collect() },
            Series { label: "E_log", values: rows.iter().map(|r| r.e_log).collect() },
            Series { label: "E_total", values: rows.iter().map(|r| r.e_total).collect() },
        ],
        fault_step,
    );

    let budget = render(
        "budget residual",
        &times,
        &[Series {
            label: "E_total(t) + cum_diss(t) - E_total(0)",
            values: rows.iter().map(|r| r.budget_residual).collect(),
        }],
        fault_step,
    );

    // barrier lines from the initial row, clamped to straddle 1
    let b_max_line = rows[0].b_max_obs.max(1.0);
    let b_min_line = rows[0].b_min_obs.min(1.0);
    let minmax = render(
        "scalar range and barriers",
        &times,
        &[
            Series { label: "b_min_obs", values: rows.iter().map(|r| r.b_min_obs).collect() },
            Series { label: "b_max_obs", values: rows.iter().map(|r| r.b_max_obs).collect() },
            Series { label: "b_min barrier", values: vec![b_min_line; rows.len()] },
            Series { label: "b_max barrier", values: vec![b_max_line; rows.len()] },
        ],
        fault_step,
    );

    Ok(vec![
        ("energies.svg".to_string(), energies),
        ("budget_residual.svg".to_string(), budget),
        ("minmax.svg".to_string(), minmax),
    ])
}
