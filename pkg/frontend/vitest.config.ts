import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    testTimeout: 120_000, // the dwell probe runs 20 s, the protocol test walks a full session
    hookTimeout: 180_000, // beforeAll prepares a study and boots the Python service
  },
});
