/** Parser for the benchmark's report.csv files. */

export const REPORT_HEADER = ["metric", "group_key", "group_value", "mean", "std", "count"];

export interface ReportRow {
  metric: string;
  groupKey: string;
  groupValue: string;
  mean: number;
  std: number;
  count: number;
}

export function parseReportCsv(text: string): ReportRow[] {
  const lines = text.split("\n").filter((line) => line.trim() !== "");
  if (lines.length === 0) {
    throw new Error("empty report");
  }
  const header = lines[0].split(",");
  if (header.join(",") !== REPORT_HEADER.join(",")) {
    throw new Error(
      `report schema mismatch: header is ${JSON.stringify(lines[0])}, expected ${REPORT_HEADER.join(",")}`
    );
  }
  const rows = lines.slice(1).map((line, i) => {
    const cells = line.split(",");
    if (cells.length !== REPORT_HEADER.length) {
      throw new Error(`row ${i + 2}: expected ${REPORT_HEADER.length} cells, got ${cells.length}`);
    }
    const row: ReportRow = {
      metric: cells[0],
      groupKey: cells[1],
      groupValue: cells[2],
      mean: Number(cells[3]),
      std: Number(cells[4]),
      count: Number(cells[5]),
    };
    if (!Number.isFinite(row.mean) || !Number.isFinite(row.std) || !Number.isFinite(row.count)) {
      throw new Error(`row ${i + 2}: non-numeric mean/std/count`);
    }
    return row;
  });
  if (rows.length === 0) {
    throw new Error("empty report");
  }
  return rows;
}

/** Rows of one metric in file order (= sweep order written by the harness). */
export function rowsByMetric(rows: ReportRow[]): Map<string, ReportRow[]> {
  const byMetric = new Map<string, ReportRow[]>();
  for (const row of rows) {
    const bucket = byMetric.get(row.metric) ?? [];
    bucket.push(row);
    byMetric.set(row.metric, bucket);
  }
  return byMetric;
}
