/**
 * runner.ts: invocation of the core CLI over JSONL stdio.
 *
 * The core binary is `python3 -m pivotmap` by default; set PIVOTMAP_PYTHON
 * to point at a different interpreter. Core failures surface as CoreError
 * carrying the machine-readable error kind from the CLI's stderr envelope.
 * Each call spawns one process, so batch entry points exist to amortize the
 * startup cost at training batch sizes.
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export class CoreError extends Error {
  constructor(
    readonly kind: string,
    detail: string,
    readonly exitCode: number,
  ) {
    super(detail);
  }
}

function interpreter(): string {
  return process.env.PIVOTMAP_PYTHON ?? "python3";
}

/** Run one CLI subcommand; returns raw stdout. */
export function runCli(args: string[], stdin?: string): string {
  const result = spawnSync(interpreter(), ["-m", "pivotmap", ...args], {
    input: stdin ?? "",
    encoding: "utf-8",
    maxBuffer: 256 * 1024 * 1024,
  });
  if (result.error) {
    throw new CoreError("spawn", `cannot start core process: ${result.error.message}`, -1);
  }
  if (result.status !== 0) {
    let kind = "error";
    let detail = result.stderr.trim();
    try {
      const envelope = JSON.parse(result.stderr);
      kind = envelope.error.kind;
      detail = envelope.error.detail;
    } catch {
      // non-JSON stderr (e.g. argparse usage text) falls through as-is
    }
    throw new CoreError(kind, detail, result.status ?? -1);
  }
  return result.stdout;
}

/** Run a subcommand that takes its inputs as files (e.g. match, loss, eval). */
export function runCliWithFiles(
  args: string[],
  files: Record<string, string>,
): string {
  const dir = mkdtempSync(join(tmpdir(), "pivotmap-"));
  try {
    const fileArgs: string[] = [];
    for (const [flag, content] of Object.entries(files)) {
      const path = join(dir, `${flag.replace(/^--/, "")}.jsonl`);
      writeFileSync(path, content, "utf-8");
      fileArgs.push(flag, path);
    }
    return runCli([...args, ...fileArgs]);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

export function parseJsonLines(stdout: string): any[] {
  return stdout
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map((line) => JSON.parse(line));
}
