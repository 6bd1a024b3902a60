import * as fs from "fs";
import * as os from "os";
import * as path from "path";
import { describe, expect, it } from "vitest";

import { parseReportCsv } from "../src/csv";
import { writeCurvePlots, writeOverlayPlot } from "../src/plots";
import { FIXTURES, PLOTS_JS, runCommand } from "./driver";

const SWEEP_REPORTS = ["report_horizon.csv", "report_observation.csv", "report_noise.csv"];

function tempDir(label: string): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), `trajbench-plots-${label}-`));
}

describe("curve plots", () => {
  it.each(SWEEP_REPORTS)("emits one image per metric for %s", (fixture) => {
    const reportPath = path.join(FIXTURES, fixture);
    const metrics = new Set(parseReportCsv(fs.readFileSync(reportPath, "utf-8")).map((r) => r.metric));
    const outDir = tempDir("curve");
    const written = writeCurvePlots(reportPath, outDir);
    expect(written).toHaveLength(metrics.size);
    for (const metric of metrics) {
      const file = path.join(outDir, `${metric}.svg`);
      expect(fs.existsSync(file)).toBe(true);
      const svg = fs.readFileSync(file, "utf-8");
      expect(svg).toContain("<svg");
      expect(svg).toContain(metric);
    }
  });

  it("is deterministic byte for byte", () => {
    const reportPath = path.join(FIXTURES, "report_noise.csv");
    const outA = tempDir("det-a");
    const outB = tempDir("det-b");
    writeCurvePlots(reportPath, outA);
    writeCurvePlots(reportPath, outB);
    for (const name of fs.readdirSync(outA).sort()) {
      expect(fs.readFileSync(path.join(outB, name))).toEqual(fs.readFileSync(path.join(outA, name)));
    }
  });

  it("never mutates the report file", () => {
    const reportPath = path.join(FIXTURES, "report_horizon.csv");
    const before = fs.readFileSync(reportPath);
    writeCurvePlots(reportPath, tempDir("ro"));
    expect(fs.readFileSync(reportPath)).toEqual(before);
  });

  it("rejects empty reports without writing files", async () => {
    const outDir = tempDir("empty");
    const emptyReport = path.join(outDir, "empty.csv");
    fs.writeFileSync(emptyReport, "metric,group_key,group_value,mean,std,count\n");
    const result = await runCommand("node", [PLOTS_JS, "curve", emptyReport, path.join(outDir, "plots")]);
    expect(result.code).toBe(1);
    expect(result.stderr).toMatch(/empty report/);
    expect(fs.existsSync(path.join(outDir, "plots"))).toBe(false);
  });

  it("rejects mismatched schemas", () => {
    const outDir = tempDir("schema");
    const bad = path.join(outDir, "bad.csv");
    fs.writeFileSync(bad, "metric,mean\nade,0.5\n");
    expect(() => writeCurvePlots(bad, outDir)).toThrow(/schema mismatch/);
  });
});

describe("overlay plots", () => {
  it("draws observations, ground truth and every predictor", () => {
    const outDir = tempDir("overlay");
    const file = writeOverlayPlot(path.join(FIXTURES, "bundle_opposing.json"), outDir);
    expect(path.basename(file)).toBe("overlay_opposing.svg");
    const svg = fs.readFileSync(file, "utf-8");
    for (const label of ["observed", "ground truth", "cvm", "social_force", "predictive_social_force"]) {
      expect(svg).toContain(label);
    }
    expect(svg).toContain("stroke-dasharray"); // predictions are dashed
  });

  it("is deterministic via the CLI entry point", async () => {
    const bundle = path.join(FIXTURES, "bundle_opposing.json");
    const outA = tempDir("ov-a");
    const outB = tempDir("ov-b");
    const first = await runCommand("node", [PLOTS_JS, "overlay", bundle, outA]);
    const second = await runCommand("node", [PLOTS_JS, "overlay", bundle, outB]);
    expect(first.code).toBe(0);
    expect(second.code).toBe(0);
    expect(fs.readFileSync(path.join(outA, "overlay_opposing.svg"))).toEqual(
      fs.readFileSync(path.join(outB, "overlay_opposing.svg"))
    );
  });
});
