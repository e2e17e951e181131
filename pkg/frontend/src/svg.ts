/** Tiny deterministic SVG builder: fixed float formatting, no randomness. */

export function fmt(x: number): string {
    if (!Number.isFinite(x)) throw new Error(`non-finite coordinate ${x}`);
    return Number(x.toFixed(3)).toString();
}

export class Svg {
    private parts: string[] = [];

    constructor(readonly width: number, readonly height: number) {}

    rect(x: number, y: number, w: number, h: number, fill: string): void {
        this.parts.push(
            `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" fill="${fill}"/>`,
        );
    }

    line(x1: number, y1: number, x2: number, y2: number, stroke: string, width = 1): void {
        this.parts.push(
            `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" ` +
            `stroke="${stroke}" stroke-width="${width}"/>`,
        );
    }

    circle(cx: number, cy: number, r: number, fill: string): void {
        this.parts.push(`<circle cx="${fmt(cx)}" cy="${fmt(cy)}" r="${fmt(r)}" fill="${fill}"/>`);
    }

    polyline(pts: [number, number][], stroke: string, width = 1.5): void {
        const path = pts.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
        this.parts.push(
            `<polyline points="${path}" fill="none" stroke="${stroke}" stroke-width="${width}"/>`,
        );
    }

    text(x: number, y: number, content: string, size = 11, anchor = "start"): void {
        const safe = content.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
        this.parts.push(
            `<text x="${fmt(x)}" y="${fmt(y)}" font-size="${size}" ` +
            `font-family="monospace" text-anchor="${anchor}">${safe}</text>`,
        );
    }

    toString(): string {
        return `<?xml version="1.0" encoding="UTF-8"?>\n` +
            `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" ` +
            `height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">\n` +
            `<rect width="${this.width}" height="${this.height}" fill="white"/>\n` +
            this.parts.join("\n") + "\n</svg>\n";
    }
}
