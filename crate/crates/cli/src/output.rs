use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use arraycap::capacity::CapacityMap;

use crate::CliError;

/// Writes through a temporary file in the destination directory and renames
/// it into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Writes to `path`, or to stdout when no path is configured.
pub fn emit(path: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_atomic(p, contents),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())
                .map_err(|e| CliError::Io(format!("stdout: {e}")))
        }
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;

/// Line plot of a capacity map.
pub fn svg_plot(map: &CapacityMap) -> String {
    let xs = &map.axis_values;
    let ys = &map.values;
    let (x0, x1) = span(xs);
    let (mut y0, mut y1) = span(ys);
    if y1 - y0 < 1e-9 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0).max(f64::MIN_POSITIVE) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<path d="M{m} {t} V{b} H{r}" fill="none" stroke="black"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    )
    .unwrap();
    let points: Vec<String> = xs.iter().zip(ys).map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
    writeln!(s, r#"<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{}"/>"#, points.join(" ")).unwrap();
    let label = |s: &mut String, x: f64, y: f64, anchor: &str, text: String| {
        writeln!(s, r#"<text x="{x:.2}" y="{y:.2}" font-size="12" font-family="sans-serif" text-anchor="{anchor}">{text}</text>"#).unwrap();
    };
    label(&mut s, MARGIN, HEIGHT - MARGIN + 16.0, "middle", format!("{x0:.4}"));
    label(&mut s, WIDTH - MARGIN, HEIGHT - MARGIN + 16.0, "middle", format!("{x1:.4}"));
    label(&mut s, MARGIN - 6.0, HEIGHT - MARGIN + 4.0, "end", format!("{y0:.3}"));
    label(&mut s, MARGIN - 6.0, MARGIN + 4.0, "end", format!("{y1:.3}"));
    label(&mut s, WIDTH / 2.0, HEIGHT - 12.0, "middle", map.axis.name().to_string());
    label(&mut s, 16.0, HEIGHT / 2.0, "middle", "bits".into());
    s.push_str("</svg>\n");
    s
}

fn span(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}
