/** Error surfaced by the bindings; carries the core's diagnostic location. */
export class SddsError extends Error {
  readonly line?: number;
  readonly column?: number;
  readonly offset?: number;

  constructor(
    message: string,
    location: { line?: number; column?: number; offset?: number } = {},
  ) {
    super(message);
    this.name = "SddsError";
    this.line = location.line;
    this.column = location.column;
    this.offset = location.offset;
  }
}
