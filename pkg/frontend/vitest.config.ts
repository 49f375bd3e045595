import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    testTimeout: 1_200_000, // desk-scale training budget
    hookTimeout: 120_000,
    pool: "forks",
    maxConcurrency: 1,
  },
});
