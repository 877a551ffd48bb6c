import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    include: ["tests/**/*.test.ts"],
    testTimeout: 120000,
    hookTimeout: 60000,
    pool: "forks",
    fileParallelism: false, // the live-server suites each spawn a server
  },
});
