// Hand-rolled SVG chart geometry. Charts only lay out numbers that came
// straight from API payloads; nothing is aggregated here.

export interface Slice {
  label: string;
  value: number;
}

export interface PieSegment extends Slice {
  color: string;
  fraction: number;
  /** SVG path ("M…A…Z"), or a full circle when one slice covers everything. */
  d: string;
}

export interface BarRect extends Slice {
  x: number;
  y: number;
  width: number;
  height: number;
  color: string;
}

export const PALETTE = ["#2f9e44", "#f59f00", "#e03131", "#1971c2", "#862e9c", "#0c8599"];

const TAU = Math.PI * 2;

function polar(cx: number, cy: number, radius: number, angle: number): [number, number] {
  return [cx + radius * Math.cos(angle), cy + radius * Math.sin(angle)];
}

export interface PieLayout {
  cx?: number;
  cy?: number;
  radius?: number;
  colors?: string[];
}

export function pieChart(slices: Slice[], layout: PieLayout = {}): PieSegment[] {
  const { cx = 100, cy = 100, radius = 90, colors = PALETTE } = layout;
  const visible = slices.filter((slice) => slice.value > 0);
  const total = visible.reduce((sum, slice) => sum + slice.value, 0);
  if (total <= 0) return [];

  if (visible.length === 1) {
    const only = visible[0]!;
    // arcs degenerate at 100%; draw the circle as two half arcs
    const d = [
      `M ${cx - radius} ${cy}`,
      `A ${radius} ${radius} 0 1 1 ${cx + radius} ${cy}`,
      `A ${radius} ${radius} 0 1 1 ${cx - radius} ${cy}`,
      "Z",
    ].join(" ");
    return [{ ...only, color: colors[0] ?? "#888", fraction: 1, d }];
  }

  const segments: PieSegment[] = [];
  let angle = -Math.PI / 2;
  visible.forEach((slice, index) => {
    const fraction = slice.value / total;
    const end = angle + fraction * TAU;
    const [x0, y0] = polar(cx, cy, radius, angle);
    const [x1, y1] = polar(cx, cy, radius, end);
    const largeArc = fraction > 0.5 ? 1 : 0;
    segments.push({
      ...slice,
      color: colors[index % colors.length] ?? "#888",
      fraction,
      d: `M ${cx} ${cy} L ${x0} ${y0} A ${radius} ${radius} 0 ${largeArc} 1 ${x1} ${y1} Z`,
    });
    angle = end;
  });
  return segments;
}

export interface BarLayout {
  width?: number;
  height?: number;
  gap?: number;
  colors?: string[];
}

export function barChart(bars: Slice[], layout: BarLayout = {}): BarRect[] {
  const { width = 360, height = 160, gap = 10, colors = PALETTE } = layout;
  if (bars.length === 0) return [];
  const max = Math.max(...bars.map((bar) => bar.value), 0);
  const barWidth = (width - gap * (bars.length + 1)) / bars.length;
  return bars.map((bar, index) => {
    const h = max > 0 ? (bar.value / max) * height : 0;
    return {
      ...bar,
      x: gap + index * (barWidth + gap),
      y: height - h,
      width: barWidth,
      height: h,
      color: colors[index % colors.length] ?? "#888",
    };
  });
}

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function pieSvg(segments: PieSegment[], size = 200): string {
  const paths = segments
    .map(
      (s) =>
        `<path d="${s.d}" fill="${s.color}"><title>${escapeXml(s.label)}: ${s.value}</title></path>`,
    )
    .join("");
  return `<svg viewBox="0 0 ${size} ${size}" role="img">${paths}</svg>`;
}

export function barSvg(rects: BarRect[], width = 360, height = 160): string {
  const bars = rects
    .map(
      (r) =>
        `<rect x="${r.x}" y="${r.y}" width="${r.width}" height="${r.height}" fill="${r.color}">` +
        `<title>${escapeXml(r.label)}: ${r.value}</title></rect>`,
    )
    .join("");
  return `<svg viewBox="0 0 ${width} ${height}" role="img">${bars}</svg>`;
}
