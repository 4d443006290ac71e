import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    setupFiles: ["test/setup.ts"],
    environmentOptions: {
      happyDOM: {
        settings: {
          // tests stub the gateway; never let the DOM touch a real network
          disableIframePageLoading: true,
          disableJavaScriptFileLoading: true,
          disableCSSFileLoading: true,
        },
      },
    },
  },
});
