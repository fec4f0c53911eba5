import { defineConfig } from "vite";

// Served by the API under /ui/, so assets must resolve relatively.
export default defineConfig({
  base: "./",
  build: { outDir: "dist" },
  test: {
    environment: "jsdom",
  },
});
