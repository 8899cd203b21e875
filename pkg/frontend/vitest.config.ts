import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    globalSetup: ["tests/service.setup.ts"],
    testTimeout: 60_000,
    hookTimeout: 60_000,
    // The e2e suite drives real sessions on one virtual device; keep files
    // sequential so sessions never fight over it.
    fileParallelism: false,
  },
});
