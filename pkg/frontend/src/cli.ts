#!/usr/bin/env node
/** plotkit <kind> --in run.csv [--in more.csv] --out fig.svg */

import { writeFileSync } from "node:fs";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import { SchemaError, loadTable } from "./csv.js";
import { FigureKind, render } from "./figures.js";

const KINDS: FigureKind[] = ["spectrum", "dispersion", "converge", "spectralfn"];

export async function main(argv: string[]): Promise<number> {
  const args = await yargs(argv)
    .command("$0 <kind>", "render one figure from laboratory CSV output", (y) =>
      y.positional("kind", { choices: KINDS, demandOption: true, type: "string" }),
    )
    .option("in", { type: "string", array: true, demandOption: true, describe: "input CSV path(s)" })
    .option("out", { type: "string", demandOption: true, describe: "output SVG path" })
    .strict()
    .fail((msg) => {
      throw new SchemaError(msg);
    })
    .parse();

  const tables = (args.in as string[]).map((p) => loadTable(p));
  const svg = render(args.kind as FigureKind, tables);
  writeFileSync(args.out as string, svg);
  return 0;
}

const invokedDirectly = process.argv[1]?.endsWith("cli.js");
if (invokedDirectly) {
  main(hideBin(process.argv))
    .then((code) => process.exit(code))
    .catch((err) => {
      console.error(`plotkit: ${err instanceof Error ? err.message : err}`);
      process.exit(1);
    });
}
