import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

/** Absolute path of a file under test/fixtures (works from dist/ too). */
export function fixture(relative: string): string {
  const here = dirname(fileURLToPath(import.meta.url));
  // compiled tests live in dist/test/, sources in test/; fixtures stay in test/
  const root = here.includes(`${join("dist", "test")}`)
    ? join(here, "..", "..", "test")
    : here;
  return join(root, "fixtures", relative);
}

export function scratchDir(prefix = "fnls-plots-"): string {
  return mkdtempSync(join(tmpdir(), prefix));
}
