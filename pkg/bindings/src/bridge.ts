/**
 * Child-process plumbing for the foreign-function boundary.
 *
 * A single long-lived Python process (`bridge.py`) serves every handle;
 * requests and responses are newline-delimited JSON correlated by id.
 */

import { type ChildProcessWithoutNullStreams, spawn } from "node:child_process";
import { once } from "node:events";
import { createInterface, type Interface } from "node:readline";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { SddsError } from "./errors.js";

const BRIDGE_PATH = join(
  dirname(fileURLToPath(import.meta.url)),
  "..",
  "bridge.py",
);

interface WireError {
  message: string;
  line?: number | null;
  column?: number | null;
  offset?: number | null;
}

interface WireResponse {
  id: number | null;
  ok: boolean;
  result?: unknown;
  error?: WireError;
}

interface Pending {
  resolve: (value: unknown) => void;
  reject: (err: Error) => void;
}

/** JSON.stringify replacer covering the values JSON cannot spell. */
function wireReplacer(_key: string, value: unknown): unknown {
  if (typeof value === "bigint") return value.toString();
  if (typeof value === "number") {
    if (Number.isNaN(value)) return "nan";
    if (value === Infinity) return "inf";
    if (value === -Infinity) return "-inf";
    if (Object.is(value, -0)) return "-0";
  }
  return value;
}

class Bridge {
  private proc: ChildProcessWithoutNullStreams;
  private lines: Interface;
  private pending = new Map<number, Pending>();
  private nextId = 1;
  private exited: Error | null = null;

  constructor(python: string) {
    this.proc = spawn(python, [BRIDGE_PATH], {
      stdio: ["pipe", "pipe", "pipe"],
    });
    this.lines = createInterface({ input: this.proc.stdout });
    this.lines.on("line", (line) => this.onLine(line));
    let stderr = "";
    this.proc.stderr.on("data", (chunk: Buffer) => {
      stderr += chunk.toString();
    });
    this.proc.on("exit", (code) => {
      this.exited = new SddsError(
        `bridge process exited with code ${code}` +
          (stderr ? `: ${stderr.trim()}` : ""),
      );
      for (const p of this.pending.values()) p.reject(this.exited);
      this.pending.clear();
    });
    this.proc.on("error", (err) => {
      this.exited = new SddsError(`failed to start bridge: ${err.message}`);
      for (const p of this.pending.values()) p.reject(this.exited);
      this.pending.clear();
    });
  }

  private onLine(line: string): void {
    let response: WireResponse;
    try {
      response = JSON.parse(line) as WireResponse;
    } catch {
      return; // stray output; the matching request will surface a timeout
    }
    if (response.id === null || response.id === undefined) return;
    const pending = this.pending.get(response.id);
    if (!pending) return;
    this.pending.delete(response.id);
    if (response.ok) {
      pending.resolve(response.result);
    } else {
      const err = response.error ?? { message: "unknown bridge error" };
      pending.reject(
        new SddsError(err.message, {
          line: err.line ?? undefined,
          column: err.column ?? undefined,
          offset: err.offset ?? undefined,
        }),
      );
    }
  }

  request(op: string, args: Record<string, unknown>): Promise<unknown> {
    if (this.exited) return Promise.reject(this.exited);
    const id = this.nextId++;
    const payload = JSON.stringify({ id, op, ...args }, wireReplacer);
    return new Promise((resolve, reject) => {
      this.pending.set(id, { resolve, reject });
      this.proc.stdin.write(payload + "\n", (err) => {
        if (err) {
          this.pending.delete(id);
          reject(new SddsError(`bridge write failed: ${err.message}`));
        }
      });
    });
  }

  async stop(): Promise<void> {
    if (this.exited) return;
    this.proc.stdin.end();
    await once(this.proc, "exit").catch(() => undefined);
  }
}

let shared: Bridge | null = null;

/** Interpreter used to run the bridge; override before first use. */
export function pythonExecutable(): string {
  return process.env.SDDS_BRIDGE_PYTHON ?? "python3";
}

export function bridge(): Bridge {
  if (shared === null) {
    shared = new Bridge(pythonExecutable());
  }
  return shared;
}

/** Stop the shared bridge process (open handles become invalid). */
export async function shutdownBridge(): Promise<void> {
  if (shared !== null) {
    const b = shared;
    shared = null;
    await b.stop();
  }
}
