/** Minimal deterministic SVG chart builder (no timestamps, fixed formatting). */

const WIDTH = 640;
const HEIGHT = 400;
const MARGIN = { left: 64, right: 20, top: 36, bottom: 52 };

const PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

export function seriesColor(index: number): string {
  return PALETTE[index % PALETTE.length];
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function fmt(value: number): string {
  return value.toFixed(2);
}

export function niceTicks(min: number, max: number, count: number): number[] {
  const range = max - min || 1;
  const rough = range / count;
  const magnitude = Math.pow(10, Math.floor(Math.log10(rough)));
  const step = [1, 2, 5, 10].map((m) => m * magnitude).find((s) => s >= rough) ?? rough;
  const ticks: number[] = [];
  for (let v = Math.ceil(min / step) * step; v <= max + step * 1e-9; v += step) {
    ticks.push(Number(v.toPrecision(12)));
  }
  return ticks;
}

export interface CurveSeries {
  label: string;
  x: number[];
  y: number[];
  /** Half-width of a shaded band around y (e.g. a standard deviation). */
  band?: number[];
  color: string;
}

export interface ChartSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  series: CurveSeries[];
}

interface PointSeries {
  label: string;
  points: [number, number][];
  color: string;
  style: "dots" | "solid" | "dashed";
}

export function renderCurveChart(spec: ChartSpec): string {
  const xs = spec.series.flatMap((s) => s.x);
  const ys = spec.series.flatMap((s, _) =>
    s.band ? s.y.flatMap((v, i) => [v - s.band![i], v + s.band![i]]) : s.y
  );
  return render(spec.title, spec.xLabel, spec.yLabel, xs, ys, (scale) => {
    let body = "";
    for (const series of spec.series) {
      if (series.band) {
        const upper = series.x.map((x, i) => `${scale.x(x)},${scale.y(series.y[i] + series.band![i])}`);
        const lower = series.x
          .map((x, i) => `${scale.x(x)},${scale.y(series.y[i] - series.band![i])}`)
          .reverse();
        body += `<polygon fill="${series.color}" opacity="0.15" points="${upper.concat(lower).join(" ")}"/>\n`;
      }
      const points = series.x.map((x, i) => `${scale.x(x)},${scale.y(series.y[i])}`).join(" ");
      body += `<polyline fill="none" stroke="${series.color}" stroke-width="1.5" points="${points}"/>\n`;
      for (let i = 0; i < series.x.length; i++) {
        body += `<circle cx="${scale.x(series.x[i])}" cy="${scale.y(series.y[i])}" r="2.5" fill="${series.color}"/>\n`;
      }
    }
    return body;
  }, spec.series.map((s) => ({ label: s.label, color: s.color, dash: undefined })));
}

export function renderTrajectoryChart(
  title: string,
  series: PointSeries[]
): string {
  const xs = series.flatMap((s) => s.points.map((p) => p[0]));
  const ys = series.flatMap((s) => s.points.map((p) => p[1]));
  return render(title, "x (m)", "y (m)", xs, ys, (scale) => {
    let body = "";
    for (const s of series) {
      const coords = s.points.map(([px, py]) => `${scale.x(px)},${scale.y(py)}`);
      if (s.style === "dots") {
        for (const c of coords) {
          const [cx, cy] = c.split(",");
          body += `<circle cx="${cx}" cy="${cy}" r="3" fill="${s.color}"/>\n`;
        }
      } else {
        const dash = s.style === "dashed" ? ` stroke-dasharray="6,4"` : "";
        body += `<polyline fill="none" stroke="${s.color}" stroke-width="1.5"${dash} points="${coords.join(" ")}"/>\n`;
      }
    }
    return body;
  }, series.map((s) => ({ label: s.label, color: s.color, dash: s.style === "dashed" ? "6,4" : undefined })));
}

function render(
  title: string,
  xLabel: string,
  yLabel: string,
  xs: number[],
  ys: number[],
  drawBody: (scale: { x: (v: number) => string; y: (v: number) => string }) => string,
  legend: { label: string; color: string; dash?: string }[]
): string {
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMinRaw = Math.min(...ys, 0);
  const yMax = Math.max(...ys) || 1;
  const yMin = yMinRaw;
  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const sx = (v: number) => fmt(MARGIN.left + ((v - xMin) / (xMax - xMin || 1)) * plotW);
  const sy = (v: number) => fmt(MARGIN.top + plotH - ((v - yMin) / (yMax - yMin || 1)) * plotH);

  let svg = `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="Helvetica, Arial, sans-serif">\n`;
  svg += `<rect width="${WIDTH}" height="${HEIGHT}" fill="#ffffff"/>\n`;
  svg += `<text x="${MARGIN.left}" y="20" font-size="13" font-weight="600" fill="#222">${esc(title)}</text>\n`;

  for (const tick of niceTicks(yMin, yMax, 5)) {
    const y = sy(tick);
    svg += `<line x1="${MARGIN.left}" y1="${y}" x2="${WIDTH - MARGIN.right}" y2="${y}" stroke="#eeeeee"/>\n`;
    svg += `<text x="${MARGIN.left - 6}" y="${y}" font-size="9" fill="#555" text-anchor="end" dominant-baseline="middle">${tick}</text>\n`;
  }
  for (const tick of niceTicks(xMin, xMax, 6)) {
    const x = sx(tick);
    svg += `<line x1="${x}" y1="${MARGIN.top + plotH}" x2="${x}" y2="${MARGIN.top + plotH + 4}" stroke="#333"/>\n`;
    svg += `<text x="${x}" y="${MARGIN.top + plotH + 16}" font-size="9" fill="#555" text-anchor="middle">${tick}</text>\n`;
  }
  svg += `<line x1="${MARGIN.left}" y1="${MARGIN.top}" x2="${MARGIN.left}" y2="${MARGIN.top + plotH}" stroke="#333"/>\n`;
  svg += `<line x1="${MARGIN.left}" y1="${MARGIN.top + plotH}" x2="${WIDTH - MARGIN.right}" y2="${MARGIN.top + plotH}" stroke="#333"/>\n`;
  svg += `<text x="${MARGIN.left + plotW / 2}" y="${HEIGHT - 10}" font-size="11" fill="#333" text-anchor="middle">${esc(xLabel)}</text>\n`;
  svg += `<text x="16" y="${MARGIN.top + plotH / 2}" font-size="11" fill="#333" text-anchor="middle" transform="rotate(-90,16,${MARGIN.top + plotH / 2})">${esc(yLabel)}</text>\n`;

  svg += drawBody({ x: sx, y: sy });

  legend.forEach((entry, i) => {
    const y = MARGIN.top + 8 + i * 14;
    const x = WIDTH - MARGIN.right - 150;
    const dash = entry.dash ? ` stroke-dasharray="${entry.dash}"` : "";
    svg += `<line x1="${x}" y1="${y}" x2="${x + 18}" y2="${y}" stroke="${entry.color}" stroke-width="2"${dash}/>\n`;
    svg += `<text x="${x + 24}" y="${y + 3}" font-size="10" fill="#333">${esc(entry.label)}</text>\n`;
  });

  svg += "</svg>\n";
  return svg;
}
