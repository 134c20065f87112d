import { spawnSync } from "node:child_process";
import { existsSync, readFileSync } from "node:fs";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { expect, it } from "vitest";

const FRONTEND = fileURLToPath(new URL("..", import.meta.url));

it("bundles the app into dist/ for static serving", () => {
  const res = spawnSync("node", ["scripts/build.mjs"], { cwd: FRONTEND, encoding: "utf-8" });
  expect(res.status, res.stderr).toBe(0);

  for (const name of ["index.html", "styles.css", "main.js"]) {
    expect(existsSync(join(FRONTEND, "dist", name)), name).toBe(true);
  }
  // the html is copied verbatim, so the #app mount and asset links survive
  expect(readFileSync(join(FRONTEND, "dist", "index.html"))).toEqual(
    readFileSync(join(FRONTEND, "static", "index.html")),
  );
  // a self-contained classic script: browsers load it without a module graph
  const js = readFileSync(join(FRONTEND, "dist", "main.js"), "utf-8");
  expect(js.length).toBeGreaterThan(1_000);
  expect(js).toMatch(/\(\s*\(\)\s*=>\s*\{/);
});
