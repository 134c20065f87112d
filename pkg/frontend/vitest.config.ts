import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node",
    // the end-to-end test spawns and polls a real service
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});
