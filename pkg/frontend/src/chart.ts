/**
 * Minimal dependency-free SVG line charts.
 *
 * Produces deterministic markup: no timestamps, no randomness, fixed
 * number formatting, so re-rendering the same inputs is byte-identical.
 */

export interface Series {
  x: number[];
  y: number[];
  color: string;
  label: string;
  width?: number;
  dash?: string;
  markers?: boolean;
}

export interface ChartOpts {
  title: string;
  subtitle?: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
  logX?: boolean;
  logY?: boolean;
  annotations?: string[];
}

const PALETTE = ["#4361ee", "#e63946", "#2d6a4f", "#9d4edd", "#f3722c", "#577590"];

export function seriesColor(i: number): string {
  return PALETTE[i % PALETTE.length];
}

export function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function niceTicks(min: number, max: number, count: number): number[] {
  const range = max - min || 1;
  const rough = range / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rough)));
  const nice = [1, 2, 5, 10].map((m) => m * mag);
  const step = nice.find((n) => n >= rough) ?? rough;
  const start = Math.ceil(min / step) * step;
  const ticks: number[] = [];
  for (let v = start; v <= max + step * 0.01; v += step) ticks.push(v);
  return ticks;
}

function decadeTicks(min: number, max: number): number[] {
  const lo = Math.ceil(min - 1e-9);
  const hi = Math.floor(max + 1e-9);
  const ticks: number[] = [];
  for (let e = lo; e <= hi; e++) ticks.push(e);
  return ticks.length >= 2 ? ticks : niceTicks(min, max, 4);
}

function fmtTick(v: number, log: boolean): string {
  if (log) return `1e${v}`;
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(1);
  return v % 1 === 0 ? String(v) : String(parseFloat(v.toPrecision(4)));
}

/** Render a line chart as a standalone SVG document. */
export function buildChart(opts: ChartOpts): string {
  const { series, logX = false, logY = false, annotations = [] } = opts;

  const W = 700;
  const H = 300;
  const ml = 64;
  const mr = 20;
  const mt = 34;
  const mb = 46;
  const pw = W - ml - mr;
  const ph = H - mt - mb;

  const tx = (v: number) => (logX ? Math.log10(v) : v);
  const ty = (v: number) => (logY ? Math.log10(v) : v);

  const xs = series.flatMap((s) => s.x.map(tx)).filter(Number.isFinite);
  const ys = series.flatMap((s) => s.y.map(ty)).filter(Number.isFinite);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  let yMin = Math.min(...ys);
  let yMax = Math.max(...ys);
  if (!logY) {
    const pad = 0.06 * (yMax - yMin || Math.abs(yMax) || 1);
    yMin -= pad;
    yMax += pad;
  } else {
    yMin -= 0.2;
    yMax += 0.2;
  }
  const xOf = (v: number) => ml + ((tx(v) - xMin) / (xMax - xMin || 1)) * pw;
  const yOf = (v: number) => mt + ph - ((ty(v) - yMin) / (yMax - yMin || 1)) * ph;

  let s = `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${W} ${H}" font-family="Helvetica, Arial, sans-serif">\n`;
  s += `<rect width="${W}" height="${H}" fill="#fff"/>\n`;
  s += `<text x="${ml}" y="${mt - 18}" font-size="11" font-weight="600" fill="#222">${esc(opts.title)}</text>\n`;
  if (opts.subtitle) {
    s += `<text x="${ml}" y="${mt - 6}" font-size="8" fill="#888">${esc(opts.subtitle)}</text>\n`;
  }
  s += `<defs><clipPath id="clip"><rect x="${ml}" y="${mt}" width="${pw}" height="${ph}"/></clipPath></defs>\n`;

  const yTicks = logY ? decadeTicks(yMin, yMax) : niceTicks(yMin, yMax, 5);
  for (const v of yTicks) {
    const y = mt + ph - ((v - yMin) / (yMax - yMin || 1)) * ph;
    s += `<line x1="${ml}" y1="${y.toFixed(1)}" x2="${ml + pw}" y2="${y.toFixed(1)}" stroke="#eee" stroke-width="0.5"/>\n`;
    s += `<line x1="${ml - 3}" y1="${y.toFixed(1)}" x2="${ml}" y2="${y.toFixed(1)}" stroke="#333" stroke-width="0.5"/>\n`;
    s += `<text x="${ml - 5}" y="${(y + 3).toFixed(1)}" text-anchor="end" font-size="7" fill="#444">${esc(fmtTick(v, logY))}</text>\n`;
  }
  const xTicks = logX ? decadeTicks(xMin, xMax) : niceTicks(xMin, xMax, 7);
  for (const v of xTicks) {
    const x = ml + ((v - xMin) / (xMax - xMin || 1)) * pw;
    s += `<line x1="${x.toFixed(1)}" y1="${mt + ph}" x2="${x.toFixed(1)}" y2="${mt + ph + 3}" stroke="#333" stroke-width="0.5"/>\n`;
    s += `<text x="${x.toFixed(1)}" y="${mt + ph + 13}" text-anchor="middle" font-size="7" fill="#444">${esc(fmtTick(v, logX))}</text>\n`;
  }

  for (const sr of series) {
    const pts = sr.x
      .map((xv, i) => {
        const yv = sr.y[i];
        if (!Number.isFinite(tx(xv)) || !Number.isFinite(ty(yv))) return null;
        return `${xOf(xv).toFixed(1)},${yOf(yv).toFixed(1)}`;
      })
      .filter((p): p is string => p !== null);
    s += `<polyline clip-path="url(#clip)" fill="none" stroke="${sr.color}" stroke-width="${sr.width ?? 1}" ${sr.dash ? `stroke-dasharray="${sr.dash}" ` : ""}points="${pts.join(" ")}"/>\n`;
    if (sr.markers) {
      for (const p of pts) {
        const [px, py] = p.split(",");
        s += `<circle clip-path="url(#clip)" cx="${px}" cy="${py}" r="2.2" fill="${sr.color}"/>\n`;
      }
    }
  }

  s += `<line x1="${ml}" y1="${mt}" x2="${ml}" y2="${mt + ph}" stroke="#333" stroke-width="0.7"/>\n`;
  s += `<line x1="${ml}" y1="${mt + ph}" x2="${ml + pw}" y2="${mt + ph}" stroke="#333" stroke-width="0.7"/>\n`;
  s += `<text x="${ml + pw / 2}" y="${H - 6}" text-anchor="middle" font-size="8" fill="#444">${esc(opts.xLabel)}</text>\n`;
  s += `<text x="14" y="${mt + ph / 2}" text-anchor="middle" font-size="8" fill="#444" transform="rotate(-90,14,${mt + ph / 2})">${esc(opts.yLabel)}</text>\n`;

  const legendW = Math.max(...series.map((sr) => sr.label.length), 1) * 4.6 + 26;
  const legendH = series.length * 11 + 4;
  const lx = ml + pw - legendW - 4;
  const ly = mt + 4;
  s += `<rect x="${lx}" y="${ly}" width="${legendW}" height="${legendH}" rx="2" fill="white" fill-opacity="0.85" stroke="#ddd" stroke-width="0.5"/>\n`;
  series.forEach((sr, i) => {
    const y = ly + 9 + i * 11;
    s += `<line x1="${lx + 4}" y1="${y - 2.5}" x2="${lx + 18}" y2="${y - 2.5}" stroke="${sr.color}" stroke-width="${sr.width ?? 1}" ${sr.dash ? `stroke-dasharray="${sr.dash}" ` : ""}/>\n`;
    s += `<text x="${lx + 22}" y="${y}" font-size="7" fill="#333">${esc(sr.label)}</text>\n`;
  });

  annotations.forEach((a, i) => {
    s += `<text x="${ml + 8}" y="${mt + 12 + i * 11}" font-size="8" fill="#222">${esc(a)}</text>\n`;
  });

  s += `</svg>\n`;
  return s;
}
