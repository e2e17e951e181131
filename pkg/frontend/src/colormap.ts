/** Small diverging/sequential colormaps for field heatmaps. */

const VIRIDIS: [number, number, number][] = [
    [68, 1, 84], [71, 44, 122], [59, 81, 139], [44, 113, 142], [33, 144, 141],
    [39, 173, 129], [92, 200, 99], [170, 220, 50], [253, 231, 37],
];

function hex(c: number): string {
    return Math.max(0, Math.min(255, Math.round(c))).toString(16).padStart(2, "0");
}

export function viridis(t: number): string {
    const x = Math.max(0, Math.min(1, t)) * (VIRIDIS.length - 1);
    const i = Math.min(VIRIDIS.length - 2, Math.floor(x));
    const f = x - i;
    const [r0, g0, b0] = VIRIDIS[i];
    const [r1, g1, b1] = VIRIDIS[i + 1];
    return `#${hex(r0 + f * (r1 - r0))}${hex(g0 + f * (g1 - g0))}${hex(b0 + f * (b1 - b0))}`;
}

/** blue-white-red for signed fields, centred at zero */
export function diverging(t: number): string {
    const x = Math.max(-1, Math.min(1, t));
    if (x < 0) {
        const f = 1 + x;
        return `#${hex(58 + f * 197)}${hex(76 + f * 179)}${hex(192 + f * 63)}`;
    }
    const f = 1 - x;
    return `#${hex(180 + f * 75)}${hex(4 + f * 251)}${hex(38 + f * 217)}`;
}
