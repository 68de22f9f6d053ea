import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    testTimeout: 60000,
    hookTimeout: 60000,
    // The live test spawns one `teleop serve`; keep runs serial.
    fileParallelism: false,
  },
});
