#!/usr/bin/env node
/** nvism-render --spec FILE: render one figure from pipeline artifacts. */

import { NVF1Error } from "./nvf1.js";
import { parseSpec, render } from "./render.js";

function main(argv: string[]): number {
    const idx = argv.indexOf("--spec");
    if (idx < 0 || idx + 1 >= argv.length) {
        console.error("usage: nvism-render --spec FILE.json");
        return 2;
    }
    try {
        const spec = parseSpec(argv[idx + 1]);
        render(spec);
        console.log(`wrote ${spec.output}`);
        return 0;
    } catch (err) {
        if (err instanceof NVF1Error) {
            console.error(`render failed: ${err.message}`);
            return 1;
        }
        if (err instanceof Error && "code" in err && err.code === "ENOENT") {
            console.error(`missing input: ${err.message}`);
            return 2;
        }
        throw err;
    }
}

process.exit(main(process.argv.slice(2)));
