/**
 * Figure rendering from NVF1/CSV pipeline artifacts.  Pure file consumer:
 * parsing, ring statistics for display, and SVG assembly -- all numerics
 * stay in the solver package.
 */

import * as fs from "node:fs";
import { Field, NVF1Error, axisCoord, readCsv, readField } from "./nvf1.js";
import { diverging, viridis } from "./colormap.js";
import { Svg, fmt } from "./svg.js";

export type PlotKind =
    | "heatmap"
    | "radial-profile"
    | "ring-symmetry"
    | "decay-fit"
    | "residual-vs-tau";

export interface FigureSpec {
    kind: PlotKind;
    inputs: string[];
    output: string;
    title?: string;
    /** which part of a complex field to show */
    component?: "re" | "im" | "abs";
    /** decay weight exponent for decay-fit */
    power?: number;
}

export function parseSpec(path: string): FigureSpec {
    let raw: unknown;
    try {
        raw = JSON.parse(fs.readFileSync(path, "ascii"));
    } catch (err) {
        throw new NVF1Error(`spec file ${path} is not valid JSON: ${err}`);
    }
    const spec = raw as Partial<FigureSpec>;
    const kinds: PlotKind[] = [
        "heatmap", "radial-profile", "ring-symmetry", "decay-fit", "residual-vs-tau",
    ];
    if (!spec.kind || !kinds.includes(spec.kind)) {
        throw new NVF1Error(`unknown plot kind ${JSON.stringify(spec.kind)}`);
    }
    if (!Array.isArray(spec.inputs) || spec.inputs.length === 0) {
        throw new NVF1Error("spec needs a non-empty inputs list");
    }
    if (typeof spec.output !== "string" || !spec.output) {
        throw new NVF1Error("spec needs an output path");
    }
    return {
        kind: spec.kind,
        inputs: spec.inputs,
        output: spec.output,
        title: spec.title,
        component: spec.component ?? "re",
        power: spec.power ?? 2,
    };
}

function componentOf(field: Field, which: "re" | "im" | "abs"): Float64Array {
    const n = field.header.n;
    const out = new Float64Array(n * n);
    for (let i = 0; i < n * n; i++) {
        out[i] = which === "re" ? field.re[i]
            : which === "im" ? field.im[i]
                : Math.hypot(field.re[i], field.im[i]);
    }
    return out;
}

interface Ring {
    r: number;
    mean: number;
    sup: number;
    spread: number;
}

/** exact-modulus ring statistics of |field| (display only) */
function ringStats(field: Field): Ring[] {
    const n = field.header.n;
    const half = n / 2;
    const h = (2 * field.header.s) / n;
    const byR2 = new Map<number, number[]>();
    for (let i = 0; i < n; i++) {
        for (let j = 0; j < n; j++) {
            const di = i - half;
            const dj = j - half;
            const r2 = di * di + dj * dj;
            if (r2 === 0) continue;
            const v = Math.hypot(field.re[i * n + j], field.im[i * n + j]);
            const bucket = byR2.get(r2);
            if (bucket) bucket.push(v);
            else byR2.set(r2, [v]);
        }
    }
    const rings: Ring[] = [];
    for (const [r2, vals] of [...byR2.entries()].sort((a, b) => a[0] - b[0])) {
        const mean = vals.reduce((a, b) => a + b, 0) / vals.length;
        const sup = Math.max(...vals);
        const spread = Math.sqrt(
            vals.reduce((a, b) => a + (b - mean) * (b - mean), 0) / vals.length,
        );
        rings.push({ r: h * Math.sqrt(r2), mean, sup, spread });
    }
    return rings;
}

const W = 640;
const H = 520;
const MARGIN = 56;

function frame(svg: Svg, title: string, xlab: string, ylab: string): void {
    svg.line(MARGIN, H - MARGIN, W - MARGIN, H - MARGIN, "#222");
    svg.line(MARGIN, MARGIN, MARGIN, H - MARGIN, "#222");
    svg.text(W / 2, 24, title, 13, "middle");
    svg.text(W / 2, H - 14, xlab, 11, "middle");
    svg.text(16, H / 2, ylab, 11, "middle");
}

function scale(values: number[], lo: number, hi: number): (v: number) => number {
    let vmin = Math.min(...values);
    let vmax = Math.max(...values);
    if (!(vmax > vmin)) {
        vmin -= 1;
        vmax += 1;
    }
    return (v: number) => lo + ((v - vmin) / (vmax - vmin)) * (hi - lo);
}

function renderHeatmap(spec: FigureSpec): string {
    const field = readField(spec.inputs[0]);
    const vals = componentOf(field, spec.component ?? "re");
    const n = field.header.n;
    let vmax = 0;
    for (const v of vals) vmax = Math.max(vmax, Math.abs(v));
    const signed = spec.component !== "abs";
    const side = H - 2 * MARGIN;
    const cell = side / n;
    const svg = new Svg(W, H);
    svg.text(W / 2, 24, spec.title ?? `${spec.inputs[0]} (${spec.component})`, 13, "middle");
    for (let i = 0; i < n; i++) {
        for (let j = 0; j < n; j++) {
            const v = vals[i * n + j];
            const color = vmax === 0
                ? (signed ? diverging(0) : viridis(0))
                : signed ? diverging(v / vmax) : viridis(v / vmax);
            // x along the horizontal axis, y upward
            svg.rect(MARGIN + i * cell, H - MARGIN - (j + 1) * cell, cell + 0.5,
                cell + 0.5, color);
        }
    }
    // colorbar
    const bars = 64;
    const barH = side / bars;
    for (let b = 0; b < bars; b++) {
        const t = b / (bars - 1);
        const color = signed ? diverging(2 * t - 1) : viridis(t);
        svg.rect(W - MARGIN + 16, H - MARGIN - (b + 1) * barH, 18, barH + 0.5, color);
    }
    svg.text(W - MARGIN + 38, H - MARGIN, signed ? fmt(-vmax) : "0", 10);
    svg.text(W - MARGIN + 38, MARGIN + 10, fmt(vmax), 10);
    svg.text(MARGIN, H - MARGIN + 28,
        `n=${n} s=${field.header.s} plane=${field.header.plane}`, 10);
    return svg.toString();
}

function renderRadialProfile(spec: FigureSpec): string {
    const field = readField(spec.inputs[0]);
    const rings = ringStats(field);
    const svg = new Svg(W, H);
    frame(svg, spec.title ?? "radial profile", "|z|", "ring mean of |f|");
    const xs = rings.map((r) => r.r);
    const ys = rings.map((r) => r.mean);
    const sx = scale(xs, MARGIN, W - MARGIN);
    const sy = scale(ys, H - MARGIN, MARGIN);
    svg.polyline(rings.map((r) => [sx(r.r), sy(r.mean)] as [number, number]), "#1f77b4");
    for (const r of rings) svg.circle(sx(r.r), sy(r.mean), 1.2, "#1f77b4");
    svg.text(W - MARGIN, MARGIN + 12, `max ${fmt(Math.max(...ys))}`, 10, "end");
    return svg.toString();
}

function renderRingSymmetry(spec: FigureSpec): string {
    const field = readField(spec.inputs[0]);
    const rings = ringStats(field).filter((r) => r.mean > 0);
    const svg = new Svg(W, H);
    frame(svg, spec.title ?? "ring symmetry", "|z|", "ring spread / max");
    let vmax = 0;
    for (const r of rings) vmax = Math.max(vmax, r.sup);
    const xs = rings.map((r) => r.r);
    const ys = rings.map((r) => (vmax > 0 ? r.spread / vmax : 0));
    const sx = scale(xs, MARGIN, W - MARGIN);
    const sy = scale(ys.concat([0]), H - MARGIN, MARGIN);
    svg.polyline(rings.map((r, i) => [sx(xs[i]), sy(ys[i])] as [number, number]), "#d62728");
    const worst = Math.max(...ys, 0);
    svg.text(W - MARGIN, MARGIN + 12, `worst ${worst.toExponential(2)}`, 10, "end");
    return svg.toString();
}

function renderDecayFit(spec: FigureSpec): string {
    const field = readField(spec.inputs[0]);
    const power = spec.power ?? 2;
    const s = field.header.s;
    const rings = ringStats(field)
        .filter((r) => r.r >= s / 2 && r.r <= s && r.sup > 0)
        .map((r) => ({ x: Math.log(r.r), y: Math.log(r.sup * Math.pow(1 + r.r, power)) }));
    const svg = new Svg(W, H);
    frame(svg, spec.title ?? `decay fit (power ${power})`,
        "log |z|", `log ring-sup |f| (1+|z|)^${power}`);
    if (rings.length >= 4) {
        const xs = rings.map((p) => p.x);
        const ys = rings.map((p) => p.y);
        const xm = xs.reduce((a, b) => a + b, 0) / xs.length;
        const ym = ys.reduce((a, b) => a + b, 0) / ys.length;
        let sxy = 0;
        let sxx = 0;
        for (let i = 0; i < xs.length; i++) {
            sxy += (xs[i] - xm) * (ys[i] - ym);
            sxx += (xs[i] - xm) * (xs[i] - xm);
        }
        const slope = sxx > 0 ? sxy / sxx : 0;
        const sx = scale(xs, MARGIN, W - MARGIN);
        const sy = scale(ys, H - MARGIN, MARGIN);
        for (const p of rings) svg.circle(sx(p.x), sy(p.y), 1.6, "#2ca02c");
        const x0 = Math.min(...xs);
        const x1 = Math.max(...xs);
        svg.line(sx(x0), sy(ym + slope * (x0 - xm)), sx(x1), sy(ym + slope * (x1 - xm)),
            "#555", 1);
        svg.text(W - MARGIN, MARGIN + 12, `slope ${slope.toFixed(3)}`, 10, "end");
    } else {
        svg.text(W / 2, H / 2, "tail is identically zero", 12, "middle");
    }
    return svg.toString();
}

function renderResidualVsTau(spec: FigureSpec): string {
    const series = readCsv(spec.inputs[0]);
    const tauCol = series.columns.indexOf("tau");
    const resCol = series.columns.indexOf("residual");
    if (tauCol < 0 || resCol < 0) {
        throw new NVF1Error("residual-vs-tau wants CSV columns tau,residual");
    }
    const pts = series.rows
        .map((row) => ({ tau: row[tauCol], res: row[resCol] }))
        .sort((a, b) => a.tau - b.tau);
    const svg = new Svg(W, H);
    frame(svg, spec.title ?? "evolution residual", "tau", "relative residual");
    const sx = scale(pts.map((p) => p.tau), MARGIN, W - MARGIN);
    const sy = scale(pts.map((p) => p.res).concat([0]), H - MARGIN, MARGIN);
    svg.polyline(pts.map((p) => [sx(p.tau), sy(p.res)] as [number, number]), "#9467bd");
    for (const p of pts) svg.circle(sx(p.tau), sy(p.res), 2, "#9467bd");
    return svg.toString();
}

export function render(spec: FigureSpec): void {
    let svg: string;
    switch (spec.kind) {
        case "heatmap":
            svg = renderHeatmap(spec);
            break;
        case "radial-profile":
            svg = renderRadialProfile(spec);
            break;
        case "ring-symmetry":
            svg = renderRingSymmetry(spec);
            break;
        case "decay-fit":
            svg = renderDecayFit(spec);
            break;
        case "residual-vs-tau":
            svg = renderResidualVsTau(spec);
            break;
        default:
            throw new NVF1Error(`unknown plot kind ${(spec as FigureSpec).kind}`);
    }
    fs.writeFileSync(spec.output, svg, "ascii");
}
