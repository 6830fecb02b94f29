//! SVG renderings of an output directory's CSV files: the four-panel trace
//! and the evaluation time against complexity scatter.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use plotters::prelude::*;

use fluentnet::metrics::{EVAL_TRACE_CSV, LABELS_CSV, RECOGNITIONS_CSV};

pub const TRACE_SVG: &str = "trace.svg";
pub const SCATTER_SVG: &str = "complexity_time.svg";

const PALETTE: [RGBColor; 9] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
    RGBColor(227, 119, 194),
    RGBColor(127, 127, 127),
    RGBColor(23, 190, 207),
];

fn secs(ms: u64) -> f64 {
    ms as f64 / 1000.0
}

struct Sample {
    node: String,
    at: u64,
    duration_ns: u64,
    complexity: usize,
}

struct Window {
    activity: u8,
    start: u64,
    end: u64,
}

/// Reads a CSV written by the exporter, checking the header.
fn rows(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let found = reader.headers()?.clone();
    if found.iter().ne(header.iter().copied()) {
        bail!("{}: unexpected header {:?}", path.display(), found);
    }
    reader.records().collect::<Result<_, _>>().with_context(|| format!("parsing {}", path.display()))
}

fn field<T: std::str::FromStr>(row: &csv::StringRecord, i: usize) -> Result<T> {
    row.get(i).and_then(|v| v.parse().ok()).ok_or_else(|| anyhow!("bad field {i} in {row:?}"))
}

type Series<'a> = BTreeMap<&'a str, Vec<(f64, f64)>>;

fn panel<DB: DrawingBackend>(
    area: &DrawingArea<DB, plotters::coord::Shift>,
    caption: &str,
    y_label: &str,
    x_max: f64,
    series: &Series<'_>,
) -> Result<()>
where
    DB::ErrorType: 'static,
{
    let y_max = series.values().flatten().map(|p| p.1).fold(1.0, f64::max) * 1.05;
    let mut chart = ChartBuilder::on(area)
        .caption(caption, ("sans-serif", 16))
        .margin(8)
        .x_label_area_size(28)
        .y_label_area_size(50)
        .build_cartesian_2d(0.0..x_max, 0.0..y_max)
        .map_err(|e| anyhow!("{e}"))?;
    chart
        .configure_mesh()
        .x_desc("time (s)")
        .y_desc(y_label)
        .draw()
        .map_err(|e| anyhow!("{e}"))?;
    for (i, (node, points)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(points.iter().copied(), color))
            .map_err(|e| anyhow!("{e}"))?
            .label(*node)
            .legend(move |(x, y)| PathElement::new([(x, y), (x + 14, y)], color));
    }
    if series.len() > 1 {
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(|e| anyhow!("{e}"))?;
    }
    Ok(())
}

/// Renders both plots from the CSV files in `dir`. `placing` lists the
/// placing node ids, drawn in their own panel.
pub fn render(dir: &Path, placing: &[String]) -> Result<()> {
    let samples: Vec<Sample> = rows(&dir.join(EVAL_TRACE_CSV), &["node", "time_ms", "duration_ns", "complexity", "propagated"])?
        .iter()
        .map(|r| {
            Ok(Sample { node: r[0].to_string(), at: field(r, 1)?, duration_ns: field(r, 2)?, complexity: field(r, 3)? })
        })
        .collect::<Result<_>>()?;
    let windows: Vec<Window> = rows(&dir.join(LABELS_CSV), &["run", "activity", "start_ms", "end_ms"])?
        .iter()
        .map(|r| Ok(Window { activity: field(r, 1)?, start: field(r, 2)?, end: field(r, 3)? }))
        .collect::<Result<_>>()?;
    let header = [
        "activity",
        "recognized_at_ms",
        "node",
        "wall_ms",
        "run",
        "window_start_ms",
        "window_end_ms",
        "outcome",
    ];
    let recognitions: Vec<(u8, u64)> = rows(&dir.join(RECOGNITIONS_CSV), &header)?
        .iter()
        .map(|r| Ok((field(r, 0)?, field(r, 1)?)))
        .collect::<Result<_>>()?;

    let x_max = samples
        .iter()
        .map(|s| s.at)
        .chain(windows.iter().map(|w| w.end))
        .chain(recognitions.iter().map(|r| r.1))
        .max()
        .map_or(1.0, |t| secs(t).max(1.0));
    let mut nodes: BTreeMap<&str, Vec<&Sample>> = BTreeMap::new();
    for s in &samples {
        nodes.entry(s.node.as_str()).or_default().push(s);
    }
    let is_placing = |n: &str| placing.iter().any(|p| p == n);

    let complexity = |want_placing: bool| -> Series<'_> {
        nodes
            .iter()
            .filter(|(n, _)| is_placing(n) == want_placing)
            .map(|(n, s)| (*n, s.iter().map(|s| (secs(s.at), s.complexity as f64)).collect()))
            .collect()
    };
    let durations: Series<'_> = nodes
        .iter()
        .filter(|(n, _)| !is_placing(n))
        .map(|(n, s)| (*n, s.iter().map(|s| (secs(s.at), s.duration_ns as f64 / 1000.0)).collect()))
        .collect();

    let path = dir.join(TRACE_SVG);
    {
        let root = SVGBackend::new(&path, (1000, 1200)).into_drawing_area();
        root.fill(&WHITE).map_err(|e| anyhow!("{e}"))?;
        let areas = root.split_evenly((4, 1));
        panel(&areas[0], "placing node complexity", "statements", x_max, &complexity(true))?;
        panel(&areas[1], "model node complexity", "statements", x_max, &complexity(false))?;
        panel(&areas[2], "evaluation time", "µs", x_max, &durations)?;

        let mut chart = ChartBuilder::on(&areas[3])
            .caption("labels and recognitions", ("sans-serif", 16))
            .margin(8)
            .x_label_area_size(28)
            .y_label_area_size(50)
            .build_cartesian_2d(0.0..x_max, 0.0..9.0)
            .map_err(|e| anyhow!("{e}"))?;
        chart
            .configure_mesh()
            .x_desc("time (s)")
            .y_desc("activity")
            .draw()
            .map_err(|e| anyhow!("{e}"))?;
        for w in &windows {
            let y = f64::from(w.activity);
            let color = PALETTE[usize::from(w.activity) % PALETTE.len()];
            chart
                .draw_series(LineSeries::new([(secs(w.start), y), (secs(w.end), y)], color.stroke_width(4)))
                .map_err(|e| anyhow!("{e}"))?;
        }
        chart
            .draw_series(
                recognitions
                    .iter()
                    .map(|&(a, t)| Cross::new((secs(t), f64::from(a)), 5, BLACK.stroke_width(2))),
            )
            .map_err(|e| anyhow!("{e}"))?;
        root.present().map_err(|e| anyhow!("{e}"))?;
    }

    // durations are zero in deterministic output; the scatter is then empty
    let path = dir.join(SCATTER_SVG);
    let root = SVGBackend::new(&path, (800, 600)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| anyhow!("{e}"))?;
    let evaluated: Vec<&Sample> = samples.iter().filter(|s| s.duration_ns > 0).collect();
    let c_max = evaluated.iter().map(|s| s.complexity as f64).fold(1.0, f64::max) * 1.05;
    let t_max = evaluated.iter().map(|s| s.duration_ns as f64 / 1000.0).fold(1.0, f64::max) * 1.05;
    let mut chart = ChartBuilder::on(&root)
        .caption("evaluation time by complexity", ("sans-serif", 18))
        .margin(10)
        .x_label_area_size(32)
        .y_label_area_size(56)
        .build_cartesian_2d(0.0..c_max, 0.0..t_max)
        .map_err(|e| anyhow!("{e}"))?;
    chart
        .configure_mesh()
        .x_desc("complexity (statements)")
        .y_desc("time (µs)")
        .draw()
        .map_err(|e| anyhow!("{e}"))?;
    chart
        .draw_series(
            evaluated
                .iter()
                .map(|s| Circle::new((s.complexity as f64, s.duration_ns as f64 / 1000.0), 2, PALETTE[0].filled())),
        )
        .map_err(|e| anyhow!("{e}"))?;
    root.present().map_err(|e| anyhow!("{e}"))?;
    Ok(())
}
