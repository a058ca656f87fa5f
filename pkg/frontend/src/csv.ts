/** Minimal CSV reader for the fixed, comma-separated schemas the primary
 * toolkit emits. Handles quoted fields with doubled-quote escapes and CRLF
 * line endings; rejects ragged rows so schema errors surface early. */

export class CsvError extends Error {}

export interface CsvTable {
  header: string[];
  rows: string[][];
}

export function parseCsv(text: string, path = "<csv>"): CsvTable {
  const records: string[][] = [];
  let field = "";
  let record: string[] = [];
  let inQuotes = false;
  let i = 0;

  const endField = () => {
    record.push(field);
    field = "";
  };
  const endRecord = () => {
    endField();
    records.push(record);
    record = [];
  };

  while (i < text.length) {
    const c = text[i] as string;
    if (inQuotes) {
      if (c === '"') {
        if (text[i + 1] === '"') {
          field += '"';
          i += 2;
        } else {
          inQuotes = false;
          i += 1;
        }
      } else {
        field += c;
        i += 1;
      }
    } else if (c === '"' && field === "") {
      inQuotes = true;
      i += 1;
    } else if (c === ",") {
      endField();
      i += 1;
    } else if (c === "\n") {
      endRecord();
      i += 1;
    } else if (c === "\r") {
      if (text[i + 1] === "\n") i += 1;
      endRecord();
      i += 1;
    } else {
      field += c;
      i += 1;
    }
  }
  if (inQuotes) throw new CsvError(`${path}: unterminated quoted field`);
  if (field !== "" || record.length > 0) endRecord();

  if (records.length === 0) throw new CsvError(`${path}: empty file`);
  const header = records[0] as string[];
  const rows = records.slice(1);
  rows.forEach((row, idx) => {
    if (row.length !== header.length) {
      throw new CsvError(
        `${path}: row ${idx + 2} has ${row.length} fields, expected ${header.length}`,
      );
    }
  });
  return { header, rows };
}

/** Strict numeric cell parse; names the column and row on failure. */
export function numericCell(
  raw: string,
  column: string,
  rowIndex: number,
  path = "<csv>",
): number {
  const trimmed = raw.trim();
  if (trimmed === "") {
    throw new CsvError(`${path}: row ${rowIndex + 2}: empty value in column ${column}`);
  }
  const v = Number(trimmed);
  if (!Number.isFinite(v)) {
    throw new CsvError(
      `${path}: row ${rowIndex + 2}: non-numeric value ${JSON.stringify(raw)} in column ${column}`,
    );
  }
  return v;
}
