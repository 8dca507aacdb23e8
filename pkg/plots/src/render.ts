/**
 * Render vfdlab CSV outputs into SVG figures.
 *
 * Usage:
 *   node dist/render.js --in PATH.csv --kind KIND --out FIGURE.svg [--meta PATH.json]
 *
 * Kinds and the CSV schemas they consume:
 *   error_vs_resolution  dr,err          (log-log)
 *   convergence_dt       t,d             (log-log)
 *   profile_vs_bounds    r,v,rq_v        (log-log, bound overlays)
 *   growth_vs_R          R,G             (log-log)
 *
 * profile_vs_bounds draws the power-law envelope A r^{-q} above the profile
 * and, when --meta points at the profile.json emitted alongside the CSV, the
 * comparison-solution lower curve as well.
 *
 * Exit codes: 0 on success, 1 on schema mismatch or I/O failure.
 */
import { readFileSync, writeFileSync, mkdirSync } from "node:fs";
import { dirname } from "node:path";
import * as echarts from "echarts";
import Papa from "papaparse";

type Kind = "error_vs_resolution" | "convergence_dt" | "profile_vs_bounds" | "growth_vs_R";

const SCHEMAS: Record<Kind, string[]> = {
  error_vs_resolution: ["dr", "err"],
  convergence_dt: ["t", "d"],
  profile_vs_bounds: ["r", "v", "rq_v"],
  growth_vs_R: ["R", "G"],
};

const AXIS_LABELS: Record<Kind, [string, string]> = {
  error_vs_resolution: ["dr", "error"],
  convergence_dt: ["t", "d(t)"],
  profile_vs_bounds: ["r", "v"],
  growth_vs_R: ["R", "G(R)"],
};

interface Args {
  input: string;
  kind: Kind;
  out: string;
  meta?: string;
}

function fail(message: string): never {
  console.error(`error: ${message}`);
  process.exit(1);
}

function parseArgs(argv: string[]): Args {
  const values: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 1) {
    const key = argv[i];
    if (!key.startsWith("--")) fail(`unexpected argument ${key}`);
    const value = argv[i + 1];
    if (value === undefined) fail(`missing value for ${key}`);
    values[key.slice(2)] = value;
    i += 1;
  }
  const { in: input, kind, out, meta } = values as {
    in?: string;
    kind?: string;
    out?: string;
    meta?: string;
  };
  if (!input || !kind || !out) fail("required flags: --in PATH --kind KIND --out PATH");
  if (!(kind in SCHEMAS)) {
    fail(`unknown kind '${kind}'; expected one of ${Object.keys(SCHEMAS).join(", ")}`);
  }
  return { input, kind: kind as Kind, out, meta };
}

type Row = Record<string, number>;

function readCsv(path: string, kind: Kind): Row[] {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch (err) {
    fail(`cannot read ${path}: ${(err as Error).message}`);
  }
  const parsed = Papa.parse<Row>(text.trim(), {
    header: true,
    dynamicTyping: true,
    skipEmptyLines: true,
  });
  const fields = parsed.meta.fields ?? [];
  for (const column of SCHEMAS[kind]) {
    if (!fields.includes(column)) {
      fail(`schema mismatch for kind '${kind}': missing column '${column}' in ${path}`);
    }
  }
  const rows = parsed.data.filter((row) =>
    SCHEMAS[kind].every((c) => typeof row[c] === "number" && Number.isFinite(row[c])),
  );
  if (rows.length === 0) fail(`schema mismatch: no data rows in ${path}`);
  return rows;
}

interface ProfileMeta {
  A_achieved: number;
  params: { n: number; m: number; q: number };
  exponents: { alpha: number; beta: number };
  comparison: { T_c: number; k_c: number };
}

/** Closed-form comparison solution used for the lower overlay. */
function comparisonCurve(r: number[], meta: ProfileMeta): Array<[number, number]> {
  const { n, m } = meta.params;
  const { alpha, beta } = meta.exponents;
  const { T_c, k_c } = meta.comparison;
  const sigma = n - 2 - n * m;
  const cstar = (2 * (n - 1) * sigma) / (1 - m);
  const t0 = T_c > 1 ? 1 : T_c / 20;
  const rem = Math.max(T_c - t0, 0);
  const pts: Array<[number, number]> = [];
  for (const radius of r) {
    const x = Math.pow(t0, beta) * radius;
    const b =
      Math.pow(cstar / (k_c + Math.pow(rem, 2 / sigma) * x * x), 1 / (1 - m)) *
      Math.pow(rem, n / sigma);
    const value = Math.pow(t0, alpha) * b;
    if (value > 0) pts.push([radius, value]);
  }
  return pts;
}

function buildSeries(kind: Kind, rows: Row[], metaPath?: string) {
  const [xcol, ycol] = SCHEMAS[kind];
  const main = rows
    .filter((row) => row[xcol] > 0 && row[ycol] > 0)
    .map((row) => [row[xcol], row[ycol]] as [number, number]);
  if (main.length === 0) fail("no strictly positive points to draw on log axes");
  const series: object[] = [
    { name: ycol, type: "line", showSymbol: main.length <= 64, data: main },
  ];
  if (kind !== "profile_vs_bounds") return series;

  // power-law envelope from the tabulated amplitude column
  const last = rows[rows.length - 1];
  const anchor = rows.find((row) => row.r > 1.0) ?? last;
  const q = Math.log(anchor.rq_v / anchor.v) / Math.log(anchor.r);
  const A = last.rq_v;
  const radii = main.map(([r]) => r);
  series.push({
    name: "A r^-q (upper)",
    type: "line",
    showSymbol: false,
    lineStyle: { type: "dashed" },
    data: radii.map((r) => [r, A * Math.pow(r, -q)] as [number, number]),
  });
  if (metaPath) {
    const meta = JSON.parse(readFileSync(metaPath, "utf8")) as ProfileMeta;
    series.push({
      name: "comparison (lower)",
      type: "line",
      showSymbol: false,
      lineStyle: { type: "dotted" },
      data: comparisonCurve(radii, meta),
    });
  }
  return series;
}

export function render(args: Args): void {
  const rows = readCsv(args.input, args.kind);
  const series = buildSeries(args.kind, rows, args.meta);
  const [xlabel, ylabel] = AXIS_LABELS[args.kind];
  const chart = echarts.init(null, null, { renderer: "svg", ssr: true, width: 800, height: 560 });
  chart.setOption({
    animation: false,
    title: { text: `${args.kind} - ${args.input}` },
    legend: { top: 28 },
    grid: { left: 70, right: 30, top: 64, bottom: 50 },
    xAxis: { type: "log", name: xlabel, nameLocation: "middle", nameGap: 30 },
    yAxis: { type: "log", name: ylabel },
    series,
  });
  const svg = chart.renderToSVGString();
  chart.dispose();
  mkdirSync(dirname(args.out), { recursive: true });
  writeFileSync(args.out, svg, "utf8");
  console.error(`wrote ${args.out} (${svg.length} bytes)`);
}

render(parseArgs(process.argv.slice(2)));
