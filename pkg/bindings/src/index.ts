/**
 * TypeScript bindings for the sdds-toolkit core.
 *
 * A thin wrapper over a foreign-function boundary: every file is
 * parsed and written by the core package, never re-implemented here.
 * `load` reads a whole dataset into host-native values, `build`
 * constructs one from host values, `save` writes it back through the
 * core codecs (byte-identical to what `sdds convert` would emit for
 * the same mode and endianness).
 *
 * Host value mapping: short/long/character are numbers, long64 is a
 * bigint, float/double are numbers (float32 values are snapped to
 * binary32 by the core at build time), strings are strings.
 */

import { bridge, shutdownBridge } from "./bridge.js";
import { SddsError } from "./errors.js";

export { SddsError };
export { shutdownBridge };

export type DataTypeName =
  | "short"
  | "long"
  | "long64"
  | "float"
  | "double"
  | "string"
  | "character";

export type Mode = "ascii" | "binary";
export type ByteOrder = "little" | "big";

/** A scalar as seen by the host language. */
export type HostValue = number | bigint | string;

export interface FieldInfo {
  name: string;
  type: DataTypeName;
  units?: string;
  description?: string;
}

export interface ArrayFieldInfo extends FieldInfo {
  dimensions: number;
}

export interface SchemaInfo {
  description?: string;
  descriptionContents?: string;
  parameters: FieldInfo[];
  arrays: ArrayFieldInfo[];
  columns: FieldInfo[];
  mode: Mode;
  endian: ByteOrder;
}

export interface ArrayData {
  dims: number[];
  elements: HostValue[];
}

export interface PageData {
  parameters: HostValue[];
  arrays: ArrayData[];
  columns: HostValue[][];
  rowCount: number;
}

/** Input to {@link SddsDataset.build}; rowCount defaults per page. */
export interface BuildSchema {
  description?: string;
  descriptionContents?: string;
  parameters?: FieldInfo[];
  arrays?: ArrayFieldInfo[];
  columns?: FieldInfo[];
  mode?: Mode;
  endian?: ByteOrder;
}

export interface BuildPage {
  parameters?: HostValue[];
  arrays?: ArrayData[];
  columns?: HostValue[][];
  rowCount?: number;
}

interface WireDataset {
  handle: number;
  schema: SchemaInfo;
  pages: WirePage[];
}

interface WirePage {
  parameters: unknown[];
  arrays: { dims: number[]; elements: unknown[] }[];
  columns: unknown[][];
  rowCount: number;
}

const FLOAT_SPECIALS: Record<string, number> = {
  nan: Number.NaN,
  inf: Infinity,
  "-inf": -Infinity,
  "-0": -0,
};

function decodeValue(raw: unknown, type: DataTypeName): HostValue {
  switch (type) {
    case "long64":
      return BigInt(raw as string | number);
    case "float":
    case "double":
      if (typeof raw === "string") {
        const special = FLOAT_SPECIALS[raw];
        if (special === undefined) {
          throw new SddsError(`bad float on the wire: ${raw}`);
        }
        return special;
      }
      return raw as number;
    default:
      return raw as number | string;
  }
}

function decodePage(page: WirePage, schema: SchemaInfo): PageData {
  return {
    parameters: page.parameters.map((v, i) =>
      decodeValue(v, schema.parameters[i].type),
    ),
    arrays: page.arrays.map((a, i) => ({
      dims: [...a.dims],
      elements: a.elements.map((v) => decodeValue(v, schema.arrays[i].type)),
    })),
    columns: page.columns.map((vector, i) =>
      vector.map((v) => decodeValue(v, schema.columns[i].type)),
    ),
    rowCount: page.rowCount,
  };
}

/** A dataset held open in the core; release it with {@link close}. */
export class SddsDataset {
  #handle: number;
  #schema: SchemaInfo;
  #pages: PageData[];
  #closed = false;

  private constructor(wire: WireDataset) {
    this.#handle = wire.handle;
    this.#schema = wire.schema;
    this.#pages = wire.pages.map((p) => decodePage(p, wire.schema));
  }

  /** Open a file and read all of it through the core codecs. */
  static async load(path: string): Promise<SddsDataset> {
    const wire = (await bridge().request("load", { path })) as WireDataset;
    return new SddsDataset(wire);
  }

  /** Construct a dataset from host-native values (validated by the core). */
  static async build(
    schema: BuildSchema,
    pages: BuildPage[],
  ): Promise<SddsDataset> {
    const wire = (await bridge().request("build", {
      schema,
      pages,
    })) as WireDataset;
    return new SddsDataset(wire);
  }

  get schema(): SchemaInfo {
    return this.#schema;
  }

  get pageCount(): number {
    return this.#pages.length;
  }

  #guard(): void {
    if (this.#closed) {
      throw new SddsError("dataset handle is closed");
    }
  }

  #page(page: number): PageData {
    this.#guard();
    const p = this.#pages[page];
    if (p === undefined) {
      throw new SddsError(
        `page ${page} out of range 0..${this.#pages.length - 1}`,
      );
    }
    return p;
  }

  rowCount(page: number): number {
    return this.#page(page).rowCount;
  }

  page(page: number): PageData {
    return this.#page(page);
  }

  parameterValue(page: number, name: string): HostValue {
    const index = this.#schema.parameters.findIndex((f) => f.name === name);
    if (index < 0) throw new SddsError(`unknown parameter '${name}'`);
    return this.#page(page).parameters[index];
  }

  columnValues(page: number, name: string): HostValue[] {
    const index = this.#schema.columns.findIndex((f) => f.name === name);
    if (index < 0) throw new SddsError(`unknown column '${name}'`);
    return [...this.#page(page).columns[index]];
  }

  arrayValue(page: number, name: string): ArrayData {
    const index = this.#schema.arrays.findIndex((f) => f.name === name);
    if (index < 0) throw new SddsError(`unknown array '${name}'`);
    const a = this.#page(page).arrays[index];
    return { dims: [...a.dims], elements: [...a.elements] };
  }

  /**
   * Write the dataset through the core codecs.  Mode/endianness default
   * to the values the dataset already carries.
   */
  async save(path: string, mode?: Mode, endian?: ByteOrder): Promise<void> {
    this.#guard();
    await bridge().request("save", { handle: this.#handle, path, mode, endian });
  }

  /** Release the core-side handle; further operations throw. */
  async close(): Promise<void> {
    if (this.#closed) return;
    this.#closed = true;
    await bridge().request("close", { handle: this.#handle });
  }
}
