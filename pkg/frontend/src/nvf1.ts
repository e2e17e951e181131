/**
 * NVF1 field files: 6-line ASCII header followed by little-endian float64
 * payload, row-major, (re, im) interleaved when complex.  Header lines:
 * magic "NVF1", n, s, plane ("z" | "k"), kind ("real" | "complex"),
 * encoding ("le-f64").
 */

import * as fs from "node:fs";

export interface NVF1Header {
    magic: string;
    n: number;
    s: number;
    plane: "z" | "k";
    kind: "real" | "complex";
    encoding: string;
}

export interface Field {
    header: NVF1Header;
    /** row-major, length n*n */
    re: Float64Array;
    im: Float64Array;
}

export class NVF1Error extends Error {}

const HEADER_LINES = 6;

export function parseHeader(buf: Buffer): { header: NVF1Header; offset: number } {
    let pos = 0;
    const lines: string[] = [];
    for (let i = 0; i < HEADER_LINES; i++) {
        const nl = buf.indexOf(0x0a, pos);
        if (nl < 0) throw new NVF1Error("truncated NVF1 header");
        lines.push(buf.subarray(pos, nl).toString("ascii").trim());
        pos = nl + 1;
    }
    const [magic, nStr, sStr, plane, kind, encoding] = lines;
    if (magic !== "NVF1") throw new NVF1Error(`bad magic ${JSON.stringify(magic)}`);
    if (encoding !== "le-f64") throw new NVF1Error(`unsupported encoding ${encoding}`);
    if (plane !== "z" && plane !== "k") throw new NVF1Error(`unknown plane ${plane}`);
    if (kind !== "real" && kind !== "complex") throw new NVF1Error(`unknown kind ${kind}`);
    const n = Number(nStr);
    const s = Number(sStr);
    if (!Number.isInteger(n) || n < 8 || (n & (n - 1)) !== 0) {
        throw new NVF1Error(`bad grid size ${nStr}`);
    }
    if (!Number.isFinite(s) || s <= 0) throw new NVF1Error(`bad half-width ${sStr}`);
    return { header: { magic, n, s, plane, kind, encoding }, offset: pos };
}

export function formatHeader(h: NVF1Header): string {
    // floats round-trip through repr-style formatting: integers keep ".0"
    const sTxt = Number.isInteger(h.s) ? `${h.s}.0` : `${h.s}`;
    return [h.magic, `${h.n}`, sTxt, h.plane, h.kind, h.encoding].join("\n") + "\n";
}

export function readField(path: string): Field {
    const buf = fs.readFileSync(path);
    const { header, offset } = parseHeader(buf);
    const count = header.n * header.n;
    const doubles = count * (header.kind === "complex" ? 2 : 1);
    const body = buf.subarray(offset);
    if (body.length !== 8 * doubles) {
        throw new NVF1Error(`payload has ${body.length} bytes, expected ${8 * doubles}`);
    }
    const re = new Float64Array(count);
    const im = new Float64Array(count);
    for (let i = 0; i < count; i++) {
        if (header.kind === "complex") {
            re[i] = body.readDoubleLE(16 * i);
            im[i] = body.readDoubleLE(16 * i + 8);
        } else {
            re[i] = body.readDoubleLE(8 * i);
        }
        if (!Number.isFinite(re[i]) || !Number.isFinite(im[i])) {
            throw new NVF1Error(`non-finite sample at index ${i}`);
        }
    }
    return { header, re, im };
}

export function writeField(path: string, field: Field): void {
    const headerText = formatHeader(field.header);
    const count = field.header.n * field.header.n;
    const complex = field.header.kind === "complex";
    const body = Buffer.alloc(8 * count * (complex ? 2 : 1));
    for (let i = 0; i < count; i++) {
        if (complex) {
            body.writeDoubleLE(field.re[i], 16 * i);
            body.writeDoubleLE(field.im[i], 16 * i + 8);
        } else {
            body.writeDoubleLE(field.re[i], 8 * i);
        }
    }
    fs.writeFileSync(path, Buffer.concat([Buffer.from(headerText, "ascii"), body]));
}

/** sample coordinate along either axis: -s + i * (2s/n) */
export function axisCoord(h: NVF1Header, i: number): number {
    return -h.s + (2 * h.s / h.n) * i;
}

export interface CsvSeries {
    columns: string[];
    rows: number[][];
}

/** Parse the pipeline's simple CSV exports (header row + numeric rows). */
export function readCsv(path: string): CsvSeries {
    const text = fs.readFileSync(path, "ascii").trim();
    const lines = text.split(/\r?\n/);
    if (lines.length < 2) throw new NVF1Error("CSV has no data rows");
    const columns = lines[0].split(",").map((c) => c.trim());
    const rows = lines.slice(1).map((line, idx) => {
        const values = line.split(",").map(Number);
        if (values.length !== columns.length || values.some((v) => !Number.isFinite(v))) {
            throw new NVF1Error(`bad CSV row ${idx + 2}`);
        }
        return values;
    });
    return { columns, rows };
}
