import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import {
  type BuildPage,
  type BuildSchema,
  type ByteOrder,
  type DataTypeName,
  type HostValue,
  type Mode,
  SddsDataset,
  SddsError,
  shutdownBridge,
} from "../src/index.js";

const PYTHON = process.env.SDDS_BRIDGE_PYTHON ?? "python3";

let workdir: string;

beforeAll(() => {
  workdir = mkdtempSync(join(tmpdir(), "sdds-bindings-"));
});

afterAll(async () => {
  await shutdownBridge();
  rmSync(workdir, { recursive: true, force: true });
});

function cli(...args: string[]): { status: number; stdout: string; stderr: string } {
  const proc = spawnSync(PYTHON, ["-m", "sdds_toolkit", ...args], {
    cwd: workdir,
    encoding: "utf-8",
  });
  return {
    status: proc.status ?? -1,
    stdout: proc.stdout ?? "",
    stderr: proc.stderr ?? "",
  };
}

/** Deterministic PRNG so failures reproduce. */
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

const TYPES: DataTypeName[] = [
  "short",
  "long",
  "long64",
  "float",
  "double",
  "string",
  "character",
];

const STRING_POOL = [
  "",
  "plain",
  "a b",
  'quote"inside',
  "back\\slash",
  "bang!",
  "unicode µm",
  "tab\there",
];

function randomValue(rnd: () => number, type: DataTypeName): HostValue {
  switch (type) {
    case "short":
      return Math.floor(rnd() * 65536) - 32768;
    case "long":
      return Math.floor(rnd() * 4294967296) - 2147483648;
    case "long64": {
      const pick = rnd();
      if (pick < 0.1) return 9223372036854775807n;
      if (pick < 0.2) return -9223372036854775808n;
      const hi = BigInt(Math.floor(rnd() * 4294967296));
      const lo = BigInt(Math.floor(rnd() * 4294967296));
      return ((hi << 32n) | lo) - (1n << 63n);
    }
    case "float":
    case "double": {
      const pick = rnd();
      if (pick < 0.05) return Number.NaN;
      if (pick < 0.1) return pick < 0.075 ? Infinity : -Infinity;
      if (pick < 0.15) return -0;
      return (rnd() - 0.5) * 2e6;
    }
    case "string":
      return STRING_POOL[Math.floor(rnd() * STRING_POOL.length)];
    case "character":
      return Math.floor(rnd() * 256);
  }
}

function randomSchema(rnd: () => number): BuildSchema {
  const pick = <T>(xs: T[]): T => xs[Math.floor(rnd() * xs.length)];
  const field = (name: string) => ({
    name,
    type: pick(TYPES),
    ...(rnd() < 0.3 ? { units: pick(["m", "s", "nC"]) } : {}),
  });
  const nParams = Math.floor(rnd() * 3);
  const nArrays = Math.floor(rnd() * 2);
  const nCols = Math.floor(rnd() * 4);
  return {
    ...(rnd() < 0.3 ? { description: "generated" } : {}),
    parameters: Array.from({ length: nParams }, (_, i) => field(`p${i}`)),
    arrays: Array.from({ length: nArrays }, (_, i) => ({
      ...field(`a${i}`),
      dimensions: 1 + Math.floor(rnd() * 2),
    })),
    columns: Array.from({ length: nCols }, (_, i) => field(`c${i}`)),
    mode: pick<Mode>(["ascii", "binary"]),
    endian: pick<ByteOrder>(["little", "big"]),
  };
}

function randomPage(rnd: () => number, schema: BuildSchema): BuildPage {
  const rows = Math.floor(rnd() * 20);
  return {
    parameters: (schema.parameters ?? []).map((f) => randomValue(rnd, f.type)),
    arrays: (schema.arrays ?? []).map((f) => {
      const dims = Array.from({ length: f.dimensions }, () =>
        Math.floor(rnd() * 4),
      );
      const count = dims.reduce((a, b) => a * b, 1);
      return {
        dims,
        elements: Array.from({ length: count }, () => randomValue(rnd, f.type)),
      };
    }),
    columns: (schema.columns ?? []).map((f) =>
      Array.from({ length: rows }, () => randomValue(rnd, f.type)),
    ),
    rowCount: rows,
  };
}

function sameValue(a: HostValue, b: HostValue): boolean {
  if (typeof a === "number" && typeof b === "number") return Object.is(a, b);
  return a === b;
}

const SAMPLE =
  "SDDS1\n&column name=x, type=double, &end\n&data mode=ascii, &end\n" +
  "2\n1.5\n2.5\n";

describe("load", () => {
  it("exposes schema and data of a sample file", async () => {
    const path = join(workdir, "sample.sdds");
    writeFileSync(path, SAMPLE);
    const ds = await SddsDataset.load(path);
    expect(ds.schema.columns).toHaveLength(1);
    expect(ds.schema.columns[0].name).toBe("x");
    expect(ds.schema.columns[0].type).toBe("double");
    expect(ds.schema.mode).toBe("ascii");
    expect(ds.pageCount).toBe(1);
    expect(ds.rowCount(0)).toBe(2);
    expect(ds.columnValues(0, "x")).toEqual([1.5, 2.5]);
    await ds.close();
  });

  it("rejects corrupt files with a located diagnostic", async () => {
    const path = join(workdir, "corrupt.sdds");
    writeFileSync(
      path,
      "SDDS1\n&column name=x type=wat &end\n&data mode=ascii, &end\n",
    );
    const err = await SddsDataset.load(path).catch((e: unknown) => e);
    expect(err).toBeInstanceOf(SddsError);
    expect((err as SddsError).message).toContain("bad type token");
    expect((err as SddsError).line).toBe(2);
  });

  it("matches column values parsed back from `sdds print`", async () => {
    const rnd = mulberry32(0xbeef);
    const schema: BuildSchema = {
      columns: [
        { name: "x", type: "long" },
        { name: "y", type: "double" },
      ],
      mode: "binary",
    };
    const page: BuildPage = {
      parameters: [],
      arrays: [],
      columns: [
        Array.from({ length: 8 }, () => Math.floor(rnd() * 200) - 100),
        Array.from({ length: 8 }, () => (rnd() - 0.5) * 100),
      ],
      rowCount: 8,
    };
    const ds = await SddsDataset.build(schema, [page]);
    const path = join(workdir, "print-check.sdds");
    await ds.save(path);

    const printed = cli("print", "print-check.sdds", "--columns", "y");
    expect(printed.status).toBe(0);
    const rows = printed.stdout
      .trim()
      .split("\n")
      .slice(1) // header line
      .map((line) => Number.parseFloat(line.trim()));
    expect(rows).toEqual(ds.columnValues(0, "y"));
    await ds.close();
  });
});

describe("build", () => {
  it("builds a one-column dataset", async () => {
    const ds = await SddsDataset.build(
      { columns: [{ name: "x", type: "double" }] },
      [{ columns: [[1.0, 2.0]] }],
    );
    expect(ds.pageCount).toBe(1);
    expect(ds.rowCount(0)).toBe(2);
    expect(ds.columnValues(0, "x")).toEqual([1.0, 2.0]);
    await ds.close();
  });

  it("rejects mismatched vector lengths, naming the column", async () => {
    const err = await SddsDataset.build(
      {
        columns: [
          { name: "x", type: "double" },
          { name: "y", type: "double" },
        ],
      },
      [{ columns: [[1.0, 2.0], [1.0]], rowCount: 2 }],
    ).catch((e: unknown) => e);
    expect(err).toBeInstanceOf(SddsError);
    expect((err as SddsError).message).toContain("'y'");
  });

  it("names field and row on conversion failures", async () => {
    const err = await SddsDataset.build(
      { columns: [{ name: "n", type: "long" }] },
      [{ columns: [[1, "oops" as unknown as number]] }],
    ).catch((e: unknown) => e);
    expect(err).toBeInstanceOf(SddsError);
    expect((err as SddsError).message).toContain("column 'n', row 2");
  });

  it("round-trips every type bit-identically core->host->core", async () => {
    const rnd = mulberry32(0x5eed);
    const schema: BuildSchema = {
      columns: TYPES.map((t) => ({ name: `c_${t}`, type: t })),
      mode: "binary",
      endian: "big",
    };
    const pages = [randomPage(rnd, schema), randomPage(rnd, schema)];
    const built = await SddsDataset.build(schema, pages);

    const path = join(workdir, "fidelity.sdds");
    await built.save(path);
    const loaded = await SddsDataset.load(path);

    expect(loaded.pageCount).toBe(built.pageCount);
    for (let p = 0; p < built.pageCount; p++) {
      for (const t of TYPES) {
        const a = built.columnValues(p, `c_${t}`);
        const b = loaded.columnValues(p, `c_${t}`);
        expect(b.length).toBe(a.length);
        for (let r = 0; r < a.length; r++) {
          expect(sameValue(a[r], b[r]), `${t} row ${r}`).toBe(true);
        }
      }
    }
    await built.close();
    await loaded.close();
  });

  it("preserves long64 extremes through bigints", async () => {
    const ds = await SddsDataset.build(
      { columns: [{ name: "n", type: "long64" }], mode: "binary" },
      [{ columns: [[9223372036854775807n, -9223372036854775808n, 0n]] }],
    );
    const path = join(workdir, "big.sdds");
    await ds.save(path);
    const back = await SddsDataset.load(path);
    expect(back.columnValues(0, "n")).toEqual([
      9223372036854775807n,
      -9223372036854775808n,
      0n,
    ]);
    await ds.close();
    await back.close();
  });
});

describe("handle lifecycle", () => {
  it("save after close is a usage error", async () => {
    const ds = await SddsDataset.build(
      { columns: [{ name: "x", type: "double" }] },
      [{ columns: [[1.0]] }],
    );
    await ds.close();
    await ds.close(); // idempotent
    const err = await ds
      .save(join(workdir, "never.sdds"))
      .catch((e: unknown) => e);
    expect(err).toBeInstanceOf(SddsError);
    expect((err as SddsError).message).toContain("closed");
  });

  it("column access after close is a usage error", async () => {
    const ds = await SddsDataset.build(
      { columns: [{ name: "x", type: "double" }] },
      [{ columns: [[1.0]] }],
    );
    await ds.close();
    expect(() => ds.columnValues(0, "x")).toThrow(SddsError);
  });
});

describe("acceptance", () => {
  it(
    "load->save reproduces CLI convert byte-identically on 100 random files; " +
      "build->save->check exits 0",
    async () => {
      const rnd = mulberry32(0xacce97);
      for (let i = 0; i < 100; i++) {
        const schema = randomSchema(rnd);
        const nPages = 1 + Math.floor(rnd() * 3);
        const pages = Array.from({ length: nPages }, () =>
          randomPage(rnd, schema),
        );
        const built = await SddsDataset.build(schema, pages);
        const original = `rand${i}.sdds`;
        await built.save(join(workdir, original));
        await built.close();

        // build -> save -> check exits 0
        const checked = cli("check", original);
        expect(checked.status, `check ${i}: ${checked.stderr}`).toBe(0);

        // CLI convert (same mode/endian) = the core's canonical bytes
        const viaCli = `cli${i}.sdds`;
        const converted = cli("convert", original, viaCli);
        expect(converted.status, converted.stderr).toBe(0);

        // load -> save must reproduce those bytes exactly
        const reloaded = await SddsDataset.load(join(workdir, original));
        const viaBindings = `bind${i}.sdds`;
        await reloaded.save(join(workdir, viaBindings));
        await reloaded.close();

        const a = readFileSync(join(workdir, viaCli));
        const b = readFileSync(join(workdir, viaBindings));
        expect(b.equals(a), `file ${i}`).toBe(true);
      }
    },
    180_000,
  );
});
