//! `plot`: grouped bar charts of the eight cell means with SE bars.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use attraction_core::analysis::{cell_stats, group_records, CellStat, MeasureKind};
use attraction_core::stimuli::{AttractorNumber, Condition, Grammaticality, Syncretism};
use attraction_core::surprisal::Unit;
use resvg::{tiny_skia, usvg};

use crate::analyze::{load_records, records_path};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{slug, write_file};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 130.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;
const PNG_SCALE: f32 = 2.0;
const FILL: [&str; 2] = ["#9ecae1", "#2171b5"];

/// Panels left to right; each holds a singular and a plural bar.
const PANELS: [(Syncretism, Grammaticality); 4] = [
    (Syncretism::Syncretic, Grammaticality::Grammatical),
    (Syncretism::Syncretic, Grammaticality::Ungrammatical),
    (Syncretism::NonSyncretic, Grammaticality::Grammatical),
    (Syncretism::NonSyncretic, Grammaticality::Ungrammatical),
];

#[derive(Clone, Debug)]
pub struct Figure {
    pub title: String,
    pub cells: [CellStat; 8],
    pub svg: String,
}

#[derive(Clone, Debug)]
pub struct PlotOutput {
    pub figure: Figure,
    pub svg_path: PathBuf,
    pub png_path: PathBuf,
}

/// Tick step of 1, 2 or 5 times a power of ten giving about five ticks.
fn tick_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0].into_iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag)
}

fn axis_range(cells: &[CellStat; 8]) -> (f64, f64, f64) {
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    for c in cells {
        if let Some(m) = c.mean {
            let se = c.se.unwrap_or(0.0);
            lo = lo.min(m - se);
            hi = hi.max(m + se);
        }
    }
    if hi - lo < 1e-12 {
        hi = lo + 1.0;
    }
    let step = tick_step(hi - lo);
    ((lo / step).floor() * step, (hi / step).ceil() * step, step)
}

fn label(n: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let s = format!("{n:.decimals$}");
    // avoid "-0"
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders the chart. Output depends only on the arguments.
pub fn render_svg(title: &str, y_label: &str, cells: &[CellStat; 8]) -> String {
    let (lo, hi, step) = axis_range(cells);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let y = |v: f64| TOP + (hi - v) / (hi - lo) * plot_h;
    let panel_w = plot_w / PANELS.len() as f64;
    let bar_w = panel_w * 0.3;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="DejaVu Sans, Arial, sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="28" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(title)
    );

    let n_ticks = ((hi - lo) / step).round() as i64;
    for i in 0..=n_ticks {
        let v = lo + i as f64 * step;
        let yy = y(v);
        let _ = writeln!(
            s,
            r##"<line class="grid" x1="{LEFT}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="#e0e0e0"/>"##,
            LEFT + plot_w
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            yy + 4.0,
            label(v, step)
        );
    }
    let _ = writeln!(
        s,
        r#"<text transform="translate(20 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        TOP + plot_h / 2.0,
        escape(y_label)
    );

    for (p, (syn, gram)) in PANELS.iter().enumerate() {
        let x0 = LEFT + p as f64 * panel_w;
        let cx = x0 + panel_w / 2.0;
        for (b, number) in [AttractorNumber::Singular, AttractorNumber::Plural].into_iter().enumerate() {
            let cell = cells[Condition::new(*syn, *gram, number).index()];
            let Some(mean) = cell.mean else { continue };
            let bx = cx - bar_w + b as f64 * bar_w;
            let (top, bottom) = (y(mean.max(0.0)), y(mean.min(0.0)));
            let _ = writeln!(
                s,
                r#"<rect class="bar" data-condition="{}" data-mean="{mean:.6}" x="{bx:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                cell.condition,
                bar_w - 2.0,
                bottom - top,
                FILL[b]
            );
            if let Some(se) = cell.se {
                let ex = bx + (bar_w - 2.0) / 2.0;
                let (y1, y2) = (y(mean + se), y(mean - se));
                let _ = writeln!(
                    s,
                    r##"<path class="errorbar" data-condition="{}" data-se="{se:.6}" d="M{ex:.2} {y1:.2}V{y2:.2}M{:.2} {y1:.2}H{:.2}M{:.2} {y2:.2}H{:.2}" stroke="#222" stroke-width="1.2" fill="none"/>"##,
                    cell.condition,
                    ex - 5.0,
                    ex + 5.0,
                    ex - 5.0,
                    ex + 5.0
                );
            }
        }
        let base = TOP + plot_h;
        let _ = writeln!(s, r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, base + 18.0, syn.label());
        let _ = writeln!(s, r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, base + 34.0, gram.label());
    }
    let zero = y(0.0);
    let _ =
        writeln!(s, r##"<line x1="{LEFT}" y1="{zero:.2}" x2="{:.2}" y2="{zero:.2}" stroke="#222"/>"##, LEFT + plot_w);
    let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.2}" stroke="#222"/>"##, TOP + plot_h);

    let lx = WIDTH - RIGHT + 20.0;
    let _ = writeln!(s, r#"<text x="{lx:.2}" y="{:.2}" font-size="11">attractor</text>"#, TOP + 10.0);
    for (b, name) in ["singular", "plural"].into_iter().enumerate() {
        let ly = TOP + 20.0 + b as f64 * 22.0;
        let _ = writeln!(s, r#"<rect x="{lx:.2}" y="{ly:.2}" width="14" height="14" fill="{}"/>"#, FILL[b]);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="11">{name}</text>"#, lx + 20.0, ly + 11.0);
    }
    s.push_str("</svg>\n");
    s
}

fn fonts() -> Arc<usvg::fontdb::Database> {
    static DB: OnceLock<Arc<usvg::fontdb::Database>> = OnceLock::new();
    DB.get_or_init(|| {
        let mut db = usvg::fontdb::Database::new();
        db.load_system_fonts();
        Arc::new(db)
    })
    .clone()
}

/// Rasterizes `svg` at twice its nominal size.
pub fn render_png(svg: &str, path: &Path) -> Result<Vec<u8>, CliError> {
    let err = |message: String| CliError::Render { path: path.to_path_buf(), message };
    let options = usvg::Options { fontdb: fonts(), ..Default::default() };
    let tree = usvg::Tree::from_str(svg, &options).map_err(|e| err(e.to_string()))?;
    let size = tree.size();
    let (w, h) = ((size.width() * PNG_SCALE).ceil() as u32, (size.height() * PNG_SCALE).ceil() as u32);
    let mut pixmap = tiny_skia::Pixmap::new(w, h).ok_or_else(|| err(format!("invalid size {w}x{h}")))?;
    resvg::render(&tree, tiny_skia::Transform::from_scale(PNG_SCALE, PNG_SCALE), &mut pixmap.as_mut());
    pixmap.encode_png().map_err(|e| err(e.to_string()))
}

pub fn figure(language: &str, model_id: &str, measure: MeasureKind, unit: Unit, cells: [CellStat; 8]) -> Figure {
    let title = format!("{language} / {model_id} / {}", measure.label());
    let y_label = match measure {
        MeasureKind::Surprisal => format!("surprisal ({unit})"),
        _ => "attention entropy (bits)".to_string(),
    };
    let svg = render_svg(&title, &y_label, &cells);
    Figure { title, cells, svg }
}

/// The `plot` command: one SVG and one PNG per (language, model, measure).
pub fn cmd_plot(config: &RunConfig, records: Option<&Path>) -> Result<Vec<PlotOutput>, CliError> {
    let records = load_records(&records_path(config, records)?)?;
    let out = config.output_dir()?;
    let mut outputs = Vec::new();
    for ((language, model_id, measure), group) in group_records(&records) {
        let cells = match cell_stats(&group, measure) {
            Ok(c) if c.iter().any(|c| c.mean.is_some()) => c,
            Ok(_) => {
                log::warn!("{language} {model_id} {}: no values, figure skipped", measure.label());
                continue;
            }
            Err(e) => {
                log::warn!("{language} {model_id} {}: figure skipped: {e}", measure.label());
                continue;
            }
        };
        let figure = figure(&language, &model_id, measure, group[0].unit, cells);
        let stem = format!("plot_{}_{}_{}", slug(&language), slug(&model_id), measure.label());
        let svg_path = out.join(format!("{stem}.svg"));
        let png_path = out.join(format!("{stem}.png"));
        write_file(&svg_path, figure.svg.as_bytes())?;
        write_file(&png_path, &render_png(&figure.svg, &png_path)?)?;
        outputs.push(PlotOutput { figure, svg_path, png_path });
    }
    Ok(outputs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tick_steps_are_round() {
        assert_eq!(tick_step(10.0), 2.0);
        assert_eq!(tick_step(0.3), 0.1);
        assert_eq!(tick_step(7.0), 2.0);
        assert_eq!(label(-0.0, 0.5), "0.0");
        assert_eq!(label(2.5, 0.5), "2.5");
    }
}
