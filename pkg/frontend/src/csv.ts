/** Strict CSV reading for the simulator's artifact files. */

import * as fs from "node:fs";

export class SchemaError extends Error {}

export interface Table {
  path: string;
  header: string[];
  rows: string[][];
}

export const TRACE_HEADER = [
  "algo", "M", "E", "seed", "round", "model", "lr", "sample_size", "delta", "gap",
];

export const SUMMARY_HEADER = [
  "algo", "M", "E", "round",
  "delta_mean", "delta_var", "gap_mean", "gap_var", "gap_low", "gap_high",
];

export const GAIN_HEADER = ["algo", "M", "E", "epsilon", "T1", "TP", "gain"];

/** Parse simple comma-separated text; artifact values never contain commas or quotes. */
export function parseCsv(text: string): string[][] {
  return text
    .split(/\r?\n/)
    .filter((line) => line.length > 0)
    .map((line) => line.split(","));
}

export function readTable(path: string): Table {
  const cells = parseCsv(fs.readFileSync(path, "utf8"));
  const header = cells[0];
  if (header === undefined) {
    throw new SchemaError(`schema mismatch in ${path}: empty file`);
  }
  return { path, header, rows: cells.slice(1) };
}

/** Fail fast unless the header matches exactly, naming what is wrong. */
export function requireColumns(table: Table, expected: string[]): void {
  const have = new Set(table.header);
  for (const name of expected) {
    if (!have.has(name)) {
      throw new SchemaError(`schema mismatch in ${table.path}: missing column "${name}"`);
    }
  }
  const want = new Set(expected);
  for (const name of table.header) {
    if (!want.has(name)) {
      throw new SchemaError(`schema mismatch in ${table.path}: unexpected column "${name}"`);
    }
  }
  if (expected.some((name, i) => table.header[i] !== name)) {
    throw new SchemaError(
      `schema mismatch in ${table.path}: column order is ${table.header.join(",")}, ` +
      `expected ${expected.join(",")}`,
    );
  }
  for (const row of table.rows) {
    if (row.length !== expected.length) {
      throw new SchemaError(
        `schema mismatch in ${table.path}: row has ${row.length} fields, expected ${expected.length}`,
      );
    }
  }
}

export function columnIndex(table: Table, name: string): number {
  const index = table.header.indexOf(name);
  if (index < 0) {
    throw new SchemaError(`schema mismatch in ${table.path}: missing column "${name}"`);
  }
  return index;
}

/** String column values, in file order. */
export function column(table: Table, name: string): string[] {
  const index = columnIndex(table, name);
  return table.rows.map((row) => row[index] as string);
}

/** Numeric column values; rejects anything that does not parse.  */
export function numberColumn(table: Table, name: string): number[] {
  const index = columnIndex(table, name);
  return table.rows.map((row, rowIndex) => {
    const value = Number(row[index]);
    if (!Number.isFinite(value)) {
      throw new SchemaError(
        `schema mismatch in ${table.path}: non-numeric "${row[index]}" ` +
        `in column "${name}", row ${rowIndex + 2}`,
      );
    }
    return value;
  });
}
