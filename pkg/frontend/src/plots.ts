#!/usr/bin/env node
/**
 * Plot generator for benchmark outputs.
 *
 *   node dist/plots.js curve <report.csv> <outdir>     one SVG per metric
 *   node dist/plots.js overlay <bundle.json> <outdir>  trajectory overlay
 *
 * Curve plots show the metric mean over the sweep variable with a +-std band.
 * Overlay plots draw observations, ground truth and each predictor's points
 * for a synthetic scenario bundle (written by `trajbench synthetic --bundle`).
 * Output is deterministic: identical inputs produce identical bytes, and
 * report files are never mutated.
 */

import * as fs from "fs";
import * as path from "path";
import { parseReportCsv, ReportRow, rowsByMetric } from "./csv";
import { renderCurveChart, renderTrajectoryChart, seriesColor } from "./svg";

export interface OverlayBundle {
  kind: string;
  dt: number;
  observation_frames: number;
  prediction_frames: number;
  agents: { id: number; observed: [number, number][]; future: [number, number][] }[];
  predictions: Record<string, Record<string, [number, number][]>>;
}

export function curveCharts(rows: ReportRow[]): Map<string, string> {
  const charts = new Map<string, string>();
  for (const [metric, metricRows] of rowsByMetric(rows)) {
    const groupKey = metricRows[0].groupKey || "run";
    const numeric = metricRows.every((r) => r.groupValue !== "" && Number.isFinite(Number(r.groupValue)));
    const x = metricRows.map((r, i) => (numeric ? Number(r.groupValue) : i));
    const chart = renderCurveChart({
      title: `${metric} vs ${groupKey}`,
      xLabel: groupKey,
      yLabel: metric,
      series: [
        {
          label: `${metric} (mean +- std)`,
          x,
          y: metricRows.map((r) => r.mean),
          band: metricRows.map((r) => r.std),
          color: seriesColor(0),
        },
      ],
    });
    charts.set(metric, chart);
  }
  return charts;
}

export function overlayChart(bundle: OverlayBundle): string {
  const series = [];
  let colorIndex = 0;
  for (const agent of bundle.agents) {
    series.push({
      label: `agent ${agent.id} observed`,
      points: agent.observed,
      color: seriesColor(colorIndex),
      style: "dots" as const,
    });
    series.push({
      label: `agent ${agent.id} ground truth`,
      points: agent.future,
      color: seriesColor(colorIndex),
      style: "solid" as const,
    });
    colorIndex += 1;
  }
  const predictorIds = Object.keys(bundle.predictions).sort();
  for (const predictorId of predictorIds) {
    const byAgent = bundle.predictions[predictorId];
    for (const agent of bundle.agents) {
      const points = byAgent[String(agent.id)];
      if (!points) {
        throw new Error(`bundle predictions for ${predictorId} miss agent ${agent.id}`);
      }
      series.push({
        label: `agent ${agent.id} ${predictorId}`,
        points,
        color: seriesColor(colorIndex),
        style: "dashed" as const,
      });
    }
    colorIndex += 1;
  }
  return renderTrajectoryChart(`${bundle.kind} scenario`, series);
}

export function writeCurvePlots(reportPath: string, outDir: string): string[] {
  const rows = parseReportCsv(fs.readFileSync(reportPath, "utf-8"));
  const charts = curveCharts(rows);
  fs.mkdirSync(outDir, { recursive: true });
  const written: string[] = [];
  for (const [metric, svg] of charts) {
    const file = path.join(outDir, `${metric}.svg`);
    fs.writeFileSync(file, svg);
    written.push(file);
  }
  return written;
}

export function writeOverlayPlot(bundlePath: string, outDir: string): string {
  const bundle = JSON.parse(fs.readFileSync(bundlePath, "utf-8")) as OverlayBundle;
  if (!Array.isArray(bundle.agents) || bundle.agents.length === 0) {
    throw new Error("bundle without agents");
  }
  fs.mkdirSync(outDir, { recursive: true });
  const file = path.join(outDir, `overlay_${bundle.kind}.svg`);
  fs.writeFileSync(file, overlayChart(bundle));
  return file;
}

export function main(argv: string[]): number {
  const [command, input, outDir] = argv;
  if (!command || !input || !outDir) {
    process.stderr.write("usage: plots.js {curve|overlay} <input> <outdir>\n");
    return 2;
  }
  try {
    if (command === "curve") {
      for (const file of writeCurvePlots(input, outDir)) {
        process.stdout.write(file + "\n");
      }
    } else if (command === "overlay") {
      process.stdout.write(writeOverlayPlot(input, outDir) + "\n");
    } else {
      process.stderr.write(`unknown command ${command}\n`);
      return 2;
    }
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
  return 0;
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
